//! Reusing plans across worlds: full and partial reapplication, the
//! incompatibility screen, and the multi-world planning loop.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::domain::{eval_probability, logic, Atom, Bindings, DomainError, DomainSpec, Incompatibility, Literal, PartialPlanPolicy};
use crate::evidence::MassDistribution;
use crate::planner::{self, LinearPlan, PlanError, PlanFailure, StrategyHierarchy};
use crate::superplan::plan_mass;
use crate::validate::is_redundant;
use crate::worlds::PState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReapplyKind {
    Full,
    Partial,
    Fail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailingStep {
    pub index: usize,
    pub operator: String,
    pub unmet: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReapplyResult {
    pub kind: ReapplyKind,
    /// steps validated (all of them when full)
    pub prefix_len: usize,
    pub failing_step: Option<FailingStep>,
    /// prefix steps skipped as redundant
    pub skipped: Vec<usize>,
    /// deepest strategy node whose steps all validated
    pub covered_path: usize,
    /// that node's expected fulfilment in the new world
    pub covered_ef: f64,
}

/// Simulates `plan` on `ps` step by step.
///
/// Each strategy node's necessary preconditions are checked before its
/// steps, so a plan whose strategy does not fit fails early. Steps that
/// would not apply but are redundant are skipped.
pub fn reapply(plan: &LinearPlan, ps: &PState, domain: &DomainSpec) -> Result<ReapplyResult, PlanError> {
    let mut state = ps.clone();
    let mut skipped = Vec::new();
    let mut covered = (0, 1.0);
    let mut index = 0;
    let fail = |index: usize, operator: &str, unmet: Vec<String>, skipped: Vec<usize>, covered: (usize, f64)| {
        // a prefix is only worth keeping if it holds at least one applied step
        let kind = if index == 0 { ReapplyKind::Fail } else { ReapplyKind::Partial };
        ReapplyResult {
            kind,
            prefix_len: index,
            failing_step: Some(FailingStep { index, operator: operator.to_string(), unmet }),
            skipped,
            covered_path: covered.0,
            covered_ef: covered.1,
        }
    };

    for (j, node) in plan.path.iter().enumerate() {
        let op = domain.operator(&node.operator)?;
        let here = state.level(op.level);
        if !domain.check_necessary(op, here)? {
            let unmet = logic::unmet(&op.necessary, &here.facts, &Bindings::new()).iter().map(Literal::to_string).collect();
            return Ok(fail(index, &op.name, unmet, skipped, covered));
        }
        let ef = if j == 0 { 1.0 } else { node.fulfilment * eval_probability(&op.probability, here) };
        while index < plan.steps.len() && plan.steps[index].owner == j {
            let step = &plan.steps[index];
            let sop = domain.operator(&step.operator)?;
            match domain.apply_with(sop, &state, &step.bindings) {
                Ok(a) => state = a.pstate,
                Err(DomainError::PreconditionsUnmet { unmet, .. }) => {
                    if is_redundant(sop, step, &state, domain) {
                        skipped.push(index);
                    } else {
                        return Ok(fail(index, &sop.name, unmet, skipped, covered));
                    }
                }
                Err(e) => return Err(e.into()),
            }
            index += 1;
        }
        covered = (j, ef);
    }

    if domain.goal_reached(&state) {
        return Ok(ReapplyResult {
            kind: ReapplyKind::Full,
            prefix_len: plan.steps.len(),
            failing_step: None,
            skipped,
            covered_path: covered.0,
            covered_ef: covered.1,
        });
    }
    // every step applied but the goal is still open: redo the final primitive
    let last = plan.steps.len().saturating_sub(1);
    let covered = if plan.path.len() > 1 {
        let j = plan.path.len() - 2;
        (j, plan.path[j].expected_fulfilment)
    } else {
        (0, 1.0)
    };
    let op = plan.steps.last().map_or(String::new(), |s| s.operator.clone());
    skipped.retain(|&i| i < last);
    Ok(fail(last, &op, vec![domain.goal_operator().name.clone()], skipped, covered))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Screen {
    MayWork,
    CannotWork,
}

/// Incompatibility patterns grouped by operator.
#[derive(Debug, Clone, Default)]
pub struct IncompatIndex<'a> {
    by_operator: HashMap<&'a str, Vec<&'a Atom>>,
}

impl<'a> IncompatIndex<'a> {
    pub fn new(incompat: &'a [Incompatibility]) -> Self {
        let mut by_operator: HashMap<&str, Vec<&Atom>> = HashMap::new();
        for i in incompat {
            by_operator.entry(i.operator.as_str()).or_default().push(&i.pattern);
        }
        IncompatIndex { by_operator }
    }

    fn hit(&self, operator: &str, level: usize, ps: &PState) -> bool {
        self.by_operator.get(operator).is_some_and(|patterns| {
            let facts = &ps.level(level).facts;
            patterns.iter().any(|p| p.matches(facts, &Bindings::new()).next().is_some())
        })
    }

    /// Index of the first step or strategy node ruled out by a declared
    /// incompatibility with `ps`, if any.
    pub fn first_incompatible(&self, plan: &LinearPlan, ps: &PState) -> Option<usize> {
        if self.by_operator.is_empty() {
            return None;
        }
        plan.path.iter().enumerate().find_map(|(j, node)| {
            if self.hit(&node.operator, node.level, ps) {
                return Some(plan.steps.iter().position(|s| s.owner >= j).unwrap_or(plan.steps.len()));
            }
            plan.steps.iter().position(|s| s.owner == j && self.hit(&s.operator, s.level, ps))
        })
    }
}

/// Index of the first step or strategy node ruled out by a declared
/// incompatibility with `ps`, if any.
pub fn first_incompatible(plan: &LinearPlan, ps: &PState, incompat: &[Incompatibility]) -> Option<usize> {
    IncompatIndex::new(incompat).first_incompatible(plan, ps)
}

/// Fast rejection: looks for operators in the plan that are declared
/// incongruous with a fact of `ps` at the operator's level.
///
/// Only a `CannotWork` verdict carries information; `MayWork` promises nothing.
pub fn heuristic_screen(plan: &LinearPlan, ps: &PState, incompat: &[Incompatibility]) -> Screen {
    match first_incompatible(plan, ps, incompat) {
        Some(_) => Screen::CannotWork,
        None => Screen::MayWork,
    }
}

/// Picks among partial candidates; `None` for an empty list.
///
/// Ties go to the longer validated prefix, then to the older plan.
pub fn choose_partial<'a>(
    candidates: &[(&'a LinearPlan, &'a ReapplyResult)],
    policy: PartialPlanPolicy,
    joint: &MassDistribution,
) -> Option<(&'a LinearPlan, &'a ReapplyResult)> {
    let score = |(plan, result): &(&LinearPlan, &ReapplyResult)| match policy {
        PartialPlanPolicy::MaxExpectedFulfilment => result.covered_ef,
        PartialPlanPolicy::MaxSupport => plan_mass(plan, joint),
    };
    candidates.iter().copied().fold(None, |best, c| match best {
        None => Some(c),
        Some(b) => {
            let order = score(&c)
                .partial_cmp(&score(&b))
                .unwrap_or(Ordering::Equal)
                .then(c.1.prefix_len.cmp(&b.1.prefix_len))
                .then(b.0.id.cmp(&c.0.id));
            if order == Ordering::Greater { Some(c) } else { Some(b) }
        }
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReuseStats {
    /// full simulations of an existing plan against a world
    pub reapply_attempts: usize,
    /// plans the incompatibility screen ruled out
    pub screened_out: usize,
    pub full_reuses: usize,
    pub partial_reuses: usize,
    pub fresh_plans: usize,
}

#[derive(Debug, Clone)]
pub struct UplanRun {
    pub plans: Vec<LinearPlan>,
    pub failures: Vec<PlanFailure>,
    pub stats: ReuseStats,
    /// search trees of every fresh or resumed planning run, in order
    pub hierarchies: Vec<StrategyHierarchy>,
}

/// Plans for every world in the given order, reusing earlier plans.
///
/// Existing plans are tried in creation order; the first that fully works
/// absorbs the world. With `heuristic`, screened plans are skipped while
/// looking for a full match and only simulated if a partial candidate is
/// needed, so the result is the same either way. A plan ruled out at its
/// first step cannot yield a partial candidate and is never simulated.
pub fn plan_all(pstates: &[PState], domain: &DomainSpec, joint: &MassDistribution, heuristic: bool) -> Result<UplanRun, PlanError> {
    let mut plans: Vec<LinearPlan> = Vec::new();
    let mut failures = Vec::new();
    let mut stats = ReuseStats::default();
    let mut hierarchies = Vec::new();
    let index = IncompatIndex::new(&domain.incompatibilities);

    for ps in pstates {
        let mut results: Vec<Option<ReapplyResult>> = vec![None; plans.len()];
        // screened out at the very first step: known to fail outright
        let mut dead = vec![false; plans.len()];
        let mut full = None;
        for (i, plan) in plans.iter().enumerate() {
            if heuristic {
                if let Some(k) = index.first_incompatible(plan, ps) {
                    stats.screened_out += 1;
                    dead[i] = k == 0;
                    continue;
                }
            }
            stats.reapply_attempts += 1;
            let r = reapply(plan, ps, domain)?;
            if r.kind == ReapplyKind::Full {
                full = Some(i);
                break;
            }
            results[i] = Some(r);
        }
        if let Some(i) = full {
            plans[i].add_pstate(&ps.id);
            stats.full_reuses += 1;
            continue;
        }
        for (i, plan) in plans.iter().enumerate() {
            if results[i].is_none() && !dead[i] {
                stats.reapply_attempts += 1;
                results[i] = Some(reapply(plan, ps, domain)?);
            }
        }
        let candidates: Vec<(&LinearPlan, &ReapplyResult)> = plans
            .iter()
            .zip(&results)
            .filter_map(|(p, r)| r.as_ref().filter(|r| r.kind == ReapplyKind::Partial).map(|r| (p, r)))
            .collect();
        let outcome = match choose_partial(&candidates, domain.config.partial_plan_policy, joint) {
            Some((previous, r)) => {
                stats.partial_reuses += 1;
                planner::resume(ps, domain, previous, r.prefix_len, &r.skipped)?
            }
            None => {
                stats.fresh_plans += 1;
                planner::plan(ps, domain)?
            }
        };
        hierarchies.push(outcome.hierarchy);
        match outcome.plan {
            Ok(mut p) => {
                p.id = plans.len();
                plans.push(p);
            }
            Err(f) => failures.push(f),
        }
    }
    Ok(UplanRun { plans, failures, stats, hierarchies })
}
