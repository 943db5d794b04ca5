//! Acceptance suite for revkit; see `tests/acceptance.rs`.
