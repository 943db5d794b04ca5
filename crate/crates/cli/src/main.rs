use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(revkit_cli::main_from(std::env::args_os()))
}
