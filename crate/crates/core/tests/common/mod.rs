#![allow(dead_code)]

use std::path::PathBuf;

use m3p2i::aip::{BeliefState, Domain, Observation};
use m3p2i::orchestrator::Scenario;

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn scenario(name: &str) -> Scenario {
    let path = repo_root().join("scenarios").join(format!("{name}.toml"));
    Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn domain(name: &str) -> Domain {
    let path = repo_root().join("domains").join(format!("{name}.toml"));
    Domain::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Beliefs after one confident observation of every `(factor, value)` pair.
pub fn observed(domain: &Domain, obs: &[(&str, usize)]) -> BeliefState {
    let mut b = domain.initial_beliefs();
    for (f, v) in obs {
        b.update(&Observation::new(*f, *v), 1.0).unwrap();
    }
    b
}
