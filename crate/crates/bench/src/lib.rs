//! Shared setup for the planning benchmarks.

use worldplan_core::{fixtures, load_domain, pipeline, scenario, DomainSpec, Prepared};

/// A bundled domain with `count` synthesized worlds, ready to plan.
pub fn prepared(text: &str, count: usize, overlap: f64) -> (DomainSpec, Prepared) {
    let domain = load_domain(text).expect("bundled domain loads");
    let s = scenario::synthesize(&domain, count, overlap, 0).expect("count is reachable");
    let p = pipeline::prepare(&domain, &s.evidence).expect("scenario prepares");
    (domain, p)
}

pub fn air_combat(count: usize) -> (DomainSpec, Prepared) {
    prepared(fixtures::AIR_COMBAT, count, 0.5)
}

pub fn worst_case(count: usize) -> (DomainSpec, Prepared) {
    prepared(fixtures::WORST_CASE, count, 0.5)
}
