//! End-to-end runs: worlds from evidence, then U-Plan or C-Plan over them.

use std::time::Duration;

use thiserror::Error;

use crate::cputime;
use crate::domain::DomainSpec;
use crate::evidence::MassDistribution;
use crate::planner::{self, CplanEntry, PlanError};
use crate::reuse::{self, UplanRun};
use crate::superplan::{self, SuperPlan};
use crate::worlds::{self, PState, PStateTree, Worlds, WorldsError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Worlds(#[from] WorldsError),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

/// Worlds ready for planning.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub worlds: Worlds,
    pub tree: PStateTree,
    /// worlds clearing both thresholds, in planning order
    pub order: Vec<PState>,
}

/// The initial world first, then the rest by descending interval.
pub fn planning_order(tree: &PStateTree) -> Vec<PState> {
    let mut order = worlds::descending_order(tree);
    if let Some(first) = worlds::select_initial(tree) {
        if let Some(at) = order.iter().position(|p| p.index == first.index) {
            let ps = order.remove(at);
            order.insert(0, ps);
        }
    }
    order
}

pub fn prepare(domain: &DomainSpec, evidence: &[MassDistribution]) -> Result<Prepared, WorldsError> {
    let worlds = worlds::generate_pstates(evidence, domain)?;
    let tree = worlds::rank(worlds::group(&worlds.pstates), &worlds.joint);
    let c = &domain.config;
    let order = worlds::eligible(&tree, planning_order(&tree), c.plausibility_threshold, c.support_threshold);
    Ok(Prepared { worlds, tree, order })
}

#[derive(Debug, Clone)]
pub struct UplanReport {
    pub run: UplanRun,
    pub superplan: SuperPlan,
    /// CPU time of planning, merging and KA insertion (single-threaded)
    pub cpu: Duration,
}

pub fn uplan(prepared: &Prepared, domain: &DomainSpec, heuristic: bool) -> Result<UplanReport, PlanError> {
    let start = cputime::thread_cpu();
    let run = reuse::plan_all(&prepared.order, domain, &prepared.worlds.joint, heuristic)?;
    let merged = superplan::merge(&run.plans, &prepared.worlds.joint);
    let superplan = superplan::insert_ka(merged, domain, &prepared.worlds.pstates);
    let cpu = cputime::thread_cpu().saturating_sub(start);
    Ok(UplanReport { run, superplan, cpu })
}

#[derive(Debug, Clone)]
pub struct CplanReport {
    pub entries: Vec<CplanEntry>,
    /// CPU time over all threads used
    pub cpu: Duration,
}

/// `parallel` spreads worlds over threads; the entries are the same either way.
pub fn cplan(prepared: &Prepared, domain: &DomainSpec, parallel: bool) -> Result<CplanReport, PlanError> {
    let clock = if parallel { cputime::process_cpu } else { cputime::thread_cpu };
    let start = clock();
    let entries = if parallel {
        planner::cplan_all(&prepared.order, domain)?
    } else {
        planner::cplan_all_sequential(&prepared.order, domain)?
    };
    let cpu = clock().saturating_sub(start);
    Ok(CplanReport { entries, cpu })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::load_domain;
    use crate::fixtures::{AIR_COMBAT, TUTORIAL};

    #[test]
    fn initial_world_leads() {
        let d = load_domain(TUTORIAL).unwrap();
        let p = prepare(&d, &d.evidence).unwrap();
        assert_eq!(p.order.len(), 4);
        assert_eq!(p.order[0].id, worlds::select_initial(&p.tree).unwrap().id);
    }

    #[test]
    fn uplan_never_needs_more_plans_than_cplan() {
        let d = load_domain(AIR_COMBAT).unwrap();
        let p = prepare(&d, &d.evidence).unwrap();
        let u = uplan(&p, &d, true).unwrap();
        let c = cplan(&p, &d, true).unwrap();
        assert_eq!(c.entries.len(), p.order.len());
        assert!(u.run.plans.len() < c.entries.len());
        assert_eq!(u.superplan.plan_count, u.run.plans.len());
    }

    #[test]
    fn thresholds_drop_weak_worlds() {
        let mut d = load_domain(TUTORIAL).unwrap();
        d.config.support_threshold = 0.2;
        let p = prepare(&d, &d.evidence).unwrap();
        let ids: Vec<_> = p.order.iter().map(|p| p.id.as_str()).collect();
        assert_eq!(ids, ["full+green", "full+black"]);
    }
}
