//! Replay validation of linear plans, independent of the planner's search.

use thiserror::Error;

use crate::domain::{logic, DomainError, DomainSpec, Fact, Literal, ReductionOperator};
use crate::planner::{LinearPlan, PlanStep};
use crate::worlds::PState;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanInvalid {
    #[error("step {index} (`{operator}`) is not a primitive operator")]
    NotPrimitive { index: usize, operator: String },
    #[error("step {index} (`{operator}`): preconditions do not hold: {}", .unmet.join(", "))]
    Preconditions { index: usize, operator: String, unmet: Vec<String> },
    #[error("step {index} (`{operator}`) changed the world differently from the recorded change")]
    ChangeMismatch { index: usize, operator: String },
    #[error("goal postconditions do not hold after the last step")]
    GoalUnmet,
    #[error(transparent)]
    Domain(#[from] DomainError),
}

fn ground_all(atoms: &[crate::domain::Atom], step: &PlanStep) -> Option<Vec<Fact>> {
    atoms.iter().map(|a| a.ground(&step.bindings).ok()).collect()
}

/// A step whose change would not alter the world and whose postconditions
/// already hold may be skipped when a plan is reused.
pub fn is_redundant(op: &ReductionOperator, step: &PlanStep, ps: &PState, domain: &DomainSpec) -> bool {
    let crate::domain::Plot::Change(change) = &op.plot else { return false };
    let facts = &ps.lowest().facts;
    let (Some(add), Some(delete)) = (ground_all(&change.add, step), ground_all(&change.delete, step)) else {
        return false;
    };
    add.iter().all(|f| facts.contains(f))
        && delete.iter().all(|f| !facts.contains(f))
        && domain.post_holds(op, ps.level(op.level), &step.bindings)
}

/// Replays `plan` from `ps` with the recorded bindings.
///
/// On the plan's own source world every step must apply and reproduce its
/// recorded change; elsewhere redundant steps may be skipped. The goal
/// operator's postconditions must hold at the end.
pub fn validate_plan(plan: &LinearPlan, ps: &PState, domain: &DomainSpec) -> Result<(), PlanInvalid> {
    let source = ps.id == plan.source_pstate;
    let mut state = ps.clone();
    for (index, step) in plan.steps.iter().enumerate() {
        let op = domain.operator(&step.operator)?;
        if !op.is_primitive() || op.level != domain.n_levels() {
            return Err(PlanInvalid::NotPrimitive { index, operator: step.operator.clone() });
        }
        let preconditions: Vec<Literal> = op.preconditions().cloned().collect();
        let facts = &state.level(op.level).facts;
        if logic::solve(&preconditions, facts, &step.bindings).is_none() {
            if !source && is_redundant(op, step, &state, domain) {
                continue;
            }
            let unmet = logic::unmet(&preconditions, facts, &step.bindings).iter().map(Literal::to_string).collect();
            return Err(PlanInvalid::Preconditions { index, operator: step.operator.clone(), unmet });
        }
        let applied = domain.apply_with(op, &state, &step.bindings)?;
        if source && applied.change != step.change {
            return Err(PlanInvalid::ChangeMismatch { index, operator: step.operator.clone() });
        }
        state = applied.pstate;
    }
    if domain.goal_reached(&state) {
        Ok(())
    } else {
        Err(PlanInvalid::GoalUnmet)
    }
}

/// Validates `plan` against every world it claims to work for.
pub fn validate_works_for(plan: &LinearPlan, pstates: &[PState], domain: &DomainSpec) -> Result<(), (String, PlanInvalid)> {
    for id in &plan.works_for {
        let ps = pstates
            .iter()
            .find(|p| &p.id == id)
            .ok_or_else(|| (id.clone(), PlanInvalid::GoalUnmet))?;
        validate_plan(plan, ps, domain).map_err(|e| (id.clone(), e))?;
    }
    Ok(())
}
