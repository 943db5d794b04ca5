//! Run settings: defaults, overlaid by a key=value file, overlaid by flags.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use revkit::ml::GbtParams;
use revkit::pipeline::{Coverage, PipelineConfig};
use revkit::requirement::CheckPolicy;
use serde::Serialize;

use crate::Failure;

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// key=value file mirroring these flags; flags take precedence
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Fraction of revisions labelled by model checking [default: 0.3]
    #[arg(long)]
    pub tau: Option<f64>,
    /// Seed for shuffling and requirement generation [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Boosted trees per requirement [default: 100]
    #[arg(long)]
    pub trees: Option<usize>,
    /// Maximum tree depth [default: 6]
    #[arg(long)]
    pub depth: Option<usize>,
    /// Learning rate [default: 0.1]
    #[arg(long)]
    pub eta: Option<f64>,
    /// Re-check predicted eligible revisions [default: on]
    #[arg(long, overrides_with = "no_verify")]
    pub verify: bool,
    /// Trust predictions without re-checking [default: off]
    #[arg(long)]
    pub no_verify: bool,
    /// Revision set: full or common [default: full]
    #[arg(long, value_name = "full|common")]
    pub coverage: Option<Coverage>,
    /// Worker threads for checking [default: 1]
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory [default: out]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Omit wall-clock fields from outputs [default: off]
    #[arg(long)]
    pub no_timing: bool,
    /// Check functional requirements on the weakened model too [default: off]
    #[arg(long)]
    pub functional_on_weakened: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DegradeFlags {
    /// Minimum payoff of a listed revision [default: sum of weights]
    #[arg(long)]
    pub threshold: Option<u32>,
    /// Comma-separated requirement ids that may be waived [default: all]
    #[arg(long, value_name = "IDS")]
    pub waivable: Option<String>,
    /// Maximum number of waived requirements [default: unlimited]
    #[arg(long)]
    pub max_waived: Option<usize>,
}

/// Every setting with its value resolved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub tau: f64,
    pub seed: u64,
    pub trees: usize,
    pub depth: usize,
    pub eta: f64,
    pub verify: bool,
    pub coverage: String,
    pub jobs: usize,
    pub out: PathBuf,
    pub no_timing: bool,
    pub functional_on_weakened: bool,
    pub threshold: Option<u32>,
    pub waivable: Option<Vec<String>>,
    pub max_waived: Option<usize>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            tau: 0.3,
            seed: 0,
            trees: 100,
            depth: 6,
            eta: 0.1,
            verify: true,
            coverage: Coverage::Full.to_string(),
            jobs: 1,
            out: PathBuf::from("out"),
            no_timing: false,
            functional_on_weakened: false,
            threshold: None,
            waivable: None,
            max_waived: None,
        }
    }
}

fn bad(key: &str, value: &str) -> Failure {
    Failure::input(format!("config: invalid value `{value}` for `{key}`"))
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, Failure> {
    value.parse().map_err(|_| bad(key, value))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, Failure> {
    match value {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(bad(key, value)),
    }
}

fn id_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(str::to_owned).collect()
}

impl Settings {
    /// Applies `key=value` lines; `#` starts a comment, keys accept `-` or `_`.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Failure::input(format!("{}:{}: expected key=value", path.display(), i + 1)));
            };
            let key = k.trim().replace('-', "_");
            let v = v.trim();
            match key.as_str() {
                "tau" => self.tau = parse(&key, v)?,
                "seed" => self.seed = parse(&key, v)?,
                "trees" => self.trees = parse(&key, v)?,
                "depth" => self.depth = parse(&key, v)?,
                "eta" => self.eta = parse(&key, v)?,
                "verify" => self.verify = parse_bool(&key, v)?,
                "coverage" => self.coverage = parse::<Coverage>(&key, v)?.to_string(),
                "jobs" => self.jobs = parse(&key, v)?,
                "out" => self.out = PathBuf::from(v),
                "no_timing" => self.no_timing = parse_bool(&key, v)?,
                "functional_on_weakened" => self.functional_on_weakened = parse_bool(&key, v)?,
                "threshold" => self.threshold = Some(parse(&key, v)?),
                "waivable" => self.waivable = Some(id_list(v)),
                "max_waived" => self.max_waived = Some(parse(&key, v)?),
                _ => {
                    return Err(Failure::input(format!(
                        "{}:{}: unknown setting `{}`",
                        path.display(),
                        i + 1,
                        k.trim()
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn resolve(flags: &Flags, degrade: Option<&DegradeFlags>) -> Result<Self, Failure> {
        let mut s = Settings::default();
        if let Some(path) = &flags.config {
            s.apply_file(path)?;
        }
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = flags.$f.clone() { s.$f = v; } )* };
        }
        take!(tau, seed, trees, depth, eta, jobs, out);
        if let Some(c) = flags.coverage {
            s.coverage = c.to_string();
        }
        if flags.verify {
            s.verify = true;
        }
        if flags.no_verify {
            s.verify = false;
        }
        s.no_timing |= flags.no_timing;
        s.functional_on_weakened |= flags.functional_on_weakened;
        if let Some(d) = degrade {
            if d.threshold.is_some() {
                s.threshold = d.threshold;
            }
            if let Some(w) = &d.waivable {
                s.waivable = Some(id_list(w));
            }
            if d.max_waived.is_some() {
                s.max_waived = d.max_waived;
            }
        }
        s.pipeline().validate().map_err(Failure::from)?;
        Ok(s)
    }

    pub fn coverage(&self) -> Coverage {
        self.coverage.parse().expect("validated on resolve")
    }

    pub fn policy(&self) -> CheckPolicy {
        CheckPolicy {
            functional_on_weakened: self.functional_on_weakened,
        }
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            tau: self.tau,
            seed: self.seed,
            verify: self.verify,
            coverage: self.coverage.parse().unwrap_or(Coverage::Full),
            gbt: GbtParams {
                trees: self.trees,
                max_depth: self.depth,
                eta: self.eta,
                ..GbtParams::default()
            },
            policy: self.policy(),
            jobs: self.jobs,
        }
    }

    /// The settings as a config file that reproduces this run.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "tau={}", self.tau);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "trees={}", self.trees);
        let _ = writeln!(s, "depth={}", self.depth);
        let _ = writeln!(s, "eta={}", self.eta);
        let _ = writeln!(s, "verify={}", self.verify);
        let _ = writeln!(s, "coverage={}", self.coverage);
        let _ = writeln!(s, "jobs={}", self.jobs);
        let _ = writeln!(s, "out={}", self.out.display());
        let _ = writeln!(s, "no_timing={}", self.no_timing);
        let _ = writeln!(s, "functional_on_weakened={}", self.functional_on_weakened);
        if let Some(t) = self.threshold {
            let _ = writeln!(s, "threshold={t}");
        }
        if let Some(w) = &self.waivable {
            let _ = writeln!(s, "waivable={}", w.join(","));
        }
        if let Some(m) = self.max_waived {
            let _ = writeln!(s, "max_waived={m}");
        }
        s
    }
}
