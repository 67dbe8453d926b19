//! Domain model: reduction operators, causal theory, level mappings,
//! knowledge-acquisition operators and planner configuration, plus the
//! primitive state operations every planner mode builds on.

mod format;
pub mod logic;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::evidence::{CompatibilityRelation, ElementSet, Frame, MassDistribution};
use crate::worlds::PState;
pub use format::load_domain;
pub use logic::{Atom, Bindings, Fact, Literal, Term};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationIssue {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

fn itemize(issues: &[ValidationIssue]) -> String {
    issues.iter().map(|i| format!("\n  - {i}")).collect()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("{message}")]
    Syntax { line: Option<usize>, message: String },
    #[error("domain failed validation:{}", itemize(.0))]
    Invalid(Vec<ValidationIssue>),
    #[error("operator `{operator}` is level {operator_level} but the state is level {state_level}")]
    LevelMismatch { operator: String, operator_level: usize, state_level: usize },
    #[error("operator `{operator}` cannot be applied, unmet: {}", .unmet.join(", "))]
    PreconditionsUnmet { operator: String, unmet: Vec<String> },
    #[error("operator `{0}` has no primitive state change")]
    NotPrimitive(String),
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("no mapping function for level-{level} fact `{fact}`")]
    UnmappedFact { fact: String, level: usize },
    #[error("causal theory did not settle after {passes} passes; still firing: {}", .rules.join(", "))]
    CausalDivergence { passes: usize, rules: Vec<String> },
    #[error("`{context}` both adds and deletes `{fact}`")]
    ContradictoryEffects { context: String, fact: String },
    #[error("in `{context}`: variable ?{variable} is unbound")]
    Unbound { context: String, variable: String },
}

/// Complete closed-world description of a world at one abstraction level.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LevelDescription {
    pub level: usize,
    pub facts: BTreeSet<Fact>,
}

impl LevelDescription {
    pub fn new(level: usize, facts: impl IntoIterator<Item = Fact>) -> Self {
        LevelDescription { level, facts: facts.into_iter().collect() }
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.facts.contains(fact)
    }
}

impl fmt::Display for LevelDescription {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let facts: Vec<String> = self.facts.iter().map(Fact::to_string).collect();
        write!(f, "L{} {{{}}}", self.level, facts.join(", "))
    }
}

/// What to do when an operator cannot be used during planning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlanFail {
    /// try the next best alternative of the parent
    #[default]
    Backtrack,
    /// give up on the parent's choice as well
    RejectBranch,
    /// stop planning for this P-state
    Abort,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotEntry {
    pub child: String,
    pub fulfilment: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StateChange {
    pub add: Vec<Atom>,
    pub delete: Vec<Atom>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Plot {
    /// alternatives one level down, each with its fulfilment of this operator's goal
    Reduce(Vec<PlotEntry>),
    /// direct effect on the most detailed level
    Change(StateChange),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityRule {
    pub when: Vec<Literal>,
    pub probability: f64,
}

/// Ordered condition table; the first matching rule wins.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityFunction {
    pub rules: Vec<ProbabilityRule>,
    pub default: f64,
}

impl ProbabilityFunction {
    pub fn constant(p: f64) -> Self {
        ProbabilityFunction { rules: Vec::new(), default: p }
    }
}

pub fn eval_probability(pf: &ProbabilityFunction, state: &LevelDescription) -> f64 {
    pf.rules
        .iter()
        .find(|r| logic::solve(&r.when, &state.facts, &Bindings::new()).is_some())
        .map_or(pf.default, |r| r.probability)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionOperator {
    pub name: String,
    pub level: usize,
    pub necessary: Vec<Literal>,
    pub satisfiable: Vec<Literal>,
    pub plot: Plot,
    pub probability: ProbabilityFunction,
    pub post: Vec<Atom>,
    pub planfail: PlanFail,
}

impl ReductionOperator {
    pub fn is_primitive(&self) -> bool {
        matches!(self.plot, Plot::Change(_))
    }

    pub fn preconditions(&self) -> impl Iterator<Item = &Literal> {
        self.necessary.iter().chain(&self.satisfiable)
    }

    pub fn plot_entries(&self) -> &[PlotEntry] {
        match &self.plot {
            Plot::Reduce(entries) => entries,
            Plot::Change(_) => &[],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TriggerEvent {
    #[default]
    Added,
    Deleted,
}

/// Deductive side-effect rule, fired when a fact matching `trigger` changes.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalRule {
    pub name: String,
    pub trigger: Atom,
    pub on: TriggerEvent,
    pub condition: Vec<Literal>,
    pub add: Vec<Atom>,
    pub delete: Vec<Atom>,
}

/// Information-gathering action that tells apart the cells of a frame partition.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeAcquisitionOperator {
    pub name: String,
    pub frame: Arc<Frame>,
    pub partition: Vec<ElementSet>,
    pub cost: f64,
}

/// Rewrites a fact one level up; an empty `emit` drops the fact.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingRule {
    pub pattern: Atom,
    pub emit: Vec<Atom>,
}

/// A fact pattern that rules out an operator (reuse screening).
#[derive(Debug, Clone, PartialEq)]
pub struct Incompatibility {
    pub pattern: Atom,
    pub operator: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PartialPlanPolicy {
    #[default]
    MaxExpectedFulfilment,
    MaxSupport,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KaTradeoff {
    pub belief_cutoff: f64,
    pub cost_ceiling: f64,
}

impl Default for KaTradeoff {
    fn default() -> Self {
        KaTradeoff { belief_cutoff: 0.9, cost_ceiling: f64::INFINITY }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub n_levels: usize,
    pub plausibility_threshold: f64,
    pub support_threshold: f64,
    /// review offset per level gap; gaps past the end scale the default
    pub offsets: Vec<f64>,
    pub partial_plan_policy: PartialPlanPolicy,
    pub ka_tradeoff: KaTradeoff,
    pub helper_depth: usize,
    pub causal_cap: usize,
}

pub const DEFAULT_OFFSET_PER_LEVEL: f64 = 0.15;

impl Config {
    pub fn new(n_levels: usize) -> Self {
        Config {
            n_levels,
            plausibility_threshold: 0.0,
            support_threshold: 0.0,
            offsets: Vec::new(),
            partial_plan_policy: PartialPlanPolicy::default(),
            ka_tradeoff: KaTradeoff::default(),
            helper_depth: 2,
            causal_cap: 100,
        }
    }

    pub fn offset(&self, gap: usize) -> f64 {
        match gap.checked_sub(1).and_then(|i| self.offsets.get(i)) {
            Some(&o) => o,
            None => DEFAULT_OFFSET_PER_LEVEL * gap as f64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DomainSpec {
    pub name: String,
    pub config: Config,
    pub frames: Vec<Arc<Frame>>,
    pub compat: Vec<CompatibilityRelation>,
    /// rules keyed by the level they read; they write one level up
    pub mappings: BTreeMap<usize, Vec<MappingRule>>,
    pub templates: BTreeMap<(String, String), Vec<Fact>>,
    pub operators: Vec<ReductionOperator>,
    pub causal_rules: Vec<CausalRule>,
    pub goal: String,
    pub ka_operators: Vec<KnowledgeAcquisitionOperator>,
    pub incompatibilities: Vec<Incompatibility>,
    pub evidence: Vec<MassDistribution>,
    op_index: HashMap<String, usize>,
}

/// Net effect of an action on the most detailed level, side effects included.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChangeRecord {
    pub added: Vec<Fact>,
    pub deleted: Vec<Fact>,
}

impl ChangeRecord {
    fn between(before: &BTreeSet<Fact>, after: &BTreeSet<Fact>) -> Self {
        ChangeRecord {
            added: after.difference(before).cloned().collect(),
            deleted: before.difference(after).cloned().collect(),
        }
    }
}

/// Result of applying a primitive operator.
#[derive(Debug, Clone)]
pub struct Applied {
    pub pstate: PState,
    pub bindings: Bindings,
    pub change: ChangeRecord,
}

impl DomainSpec {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        name: String,
        config: Config,
        frames: Vec<Arc<Frame>>,
        compat: Vec<CompatibilityRelation>,
        mappings: BTreeMap<usize, Vec<MappingRule>>,
        templates: BTreeMap<(String, String), Vec<Fact>>,
        operators: Vec<ReductionOperator>,
        causal_rules: Vec<CausalRule>,
        goal: String,
        ka_operators: Vec<KnowledgeAcquisitionOperator>,
        incompatibilities: Vec<Incompatibility>,
        evidence: Vec<MassDistribution>,
    ) -> Self {
        let op_index = operators.iter().enumerate().map(|(i, op)| (op.name.clone(), i)).collect();
        DomainSpec {
            name,
            config,
            frames,
            compat,
            mappings,
            templates,
            operators,
            causal_rules,
            goal,
            ka_operators,
            incompatibilities,
            evidence,
            op_index,
        }
    }

    pub fn n_levels(&self) -> usize {
        self.config.n_levels
    }

    pub fn operator(&self, name: &str) -> Result<&ReductionOperator, DomainError> {
        self.op_index
            .get(name)
            .map(|&i| &self.operators[i])
            .ok_or_else(|| DomainError::UnknownOperator(name.to_string()))
    }

    /// Declaration position, used as the deterministic tie key.
    pub fn operator_position(&self, name: &str) -> Option<usize> {
        self.op_index.get(name).copied()
    }

    pub fn goal_operator(&self) -> &ReductionOperator {
        self.operator(&self.goal).expect("validated goal")
    }

    pub fn frame(&self, id: &str) -> Option<&Arc<Frame>> {
        self.frames.iter().find(|f| f.id() == id)
    }

    /// Frames that evidence attaches to (the most detailed level), in declaration order.
    pub fn evidence_frames(&self) -> impl Iterator<Item = &Arc<Frame>> {
        let n = self.n_levels();
        self.frames.iter().filter(move |f| f.level() == n)
    }

    pub fn template(&self, frame: &str, element: &str) -> &[Fact] {
        self.templates.get(&(frame.to_string(), element.to_string())).map_or(&[], Vec::as_slice)
    }

    /// Replaces the evidence section (scenario synthesis).
    pub fn with_evidence(mut self, evidence: Vec<MassDistribution>) -> Self {
        self.evidence = evidence;
        self
    }

    /// Maps a description one level up with the first matching rule per fact.
    pub fn map_up(&self, state: &LevelDescription) -> Result<LevelDescription, DomainError> {
        let rules = self.mappings.get(&state.level).map_or(&[][..], Vec::as_slice);
        let mut facts = BTreeSet::new();
        for fact in &state.facts {
            let (rule, bindings) = rules
                .iter()
                .find_map(|r| r.pattern.match_fact(fact, &Bindings::new()).map(|b| (r, b)))
                .ok_or_else(|| DomainError::UnmappedFact { fact: fact.to_string(), level: state.level })?;
            for template in &rule.emit {
                let mapped = template.ground(&bindings).map_err(|e| DomainError::Unbound {
                    context: format!("mapping {}", rule.pattern),
                    variable: e.0,
                })?;
                facts.insert(mapped);
            }
        }
        Ok(LevelDescription { level: state.level - 1, facts })
    }

    /// All levels, most abstract first, derived from the most detailed one.
    pub fn abstract_levels(&self, lowest: LevelDescription) -> Result<Vec<LevelDescription>, DomainError> {
        debug_assert_eq!(lowest.level, self.n_levels());
        let mut levels = vec![lowest];
        while levels.last().is_some_and(|l| l.level > 1) {
            let next = self.map_up(levels.last().expect("nonempty"))?;
            levels.push(next);
        }
        levels.reverse();
        Ok(levels)
    }

    /// True iff every necessary precondition holds under the closed world.
    pub fn check_necessary(&self, op: &ReductionOperator, state: &LevelDescription) -> Result<bool, DomainError> {
        level_guard(op, state)?;
        Ok(logic::solve(&op.necessary, &state.facts, &Bindings::new()).is_some())
    }

    /// Satisfiable preconditions that do not hold yet (evaluated under the
    /// bindings chosen for the necessary preconditions).
    pub fn check_satisfiable(&self, op: &ReductionOperator, state: &LevelDescription) -> Vec<Literal> {
        let bindings = logic::solve(&op.necessary, &state.facts, &Bindings::new()).unwrap_or_default();
        logic::unmet(&op.satisfiable, &state.facts, &bindings)
    }

    /// Bindings satisfying both precondition sets, if any.
    pub fn applicable(&self, op: &ReductionOperator, state: &LevelDescription, seed: &Bindings) -> Option<Bindings> {
        let all: Vec<Literal> = op.preconditions().cloned().collect();
        logic::solve(&all, &state.facts, seed)
    }

    pub fn post_holds(&self, op: &ReductionOperator, state: &LevelDescription, bindings: &Bindings) -> bool {
        op.post.iter().all(|atom| atom.matches(&state.facts, bindings).next().is_some())
    }

    /// The goal operator's postconditions on the most abstract level.
    pub fn goal_reached(&self, ps: &PState) -> bool {
        let goal = self.goal_operator();
        self.post_holds(goal, ps.level(goal.level), &Bindings::new())
    }

    /// Applies a most-detailed-level operator; preconditions are solved afresh.
    pub fn apply_primitive(&self, op: &ReductionOperator, ps: &PState) -> Result<PState, DomainError> {
        self.apply_with(op, ps, &Bindings::new()).map(|a| a.pstate)
    }

    /// Applies a primitive with `seed` bindings extended by the preconditions;
    /// runs the causal theory and re-derives every upper level.
    pub fn apply_with(&self, op: &ReductionOperator, ps: &PState, seed: &Bindings) -> Result<Applied, DomainError> {
        let Plot::Change(change) = &op.plot else {
            return Err(DomainError::NotPrimitive(op.name.clone()));
        };
        let state = ps.level(op.level);
        level_guard(op, state)?;
        let bindings = self.applicable(op, state, seed).ok_or_else(|| DomainError::PreconditionsUnmet {
            operator: op.name.clone(),
            unmet: op
                .preconditions()
                .filter(|l| !l.holds(&state.facts, seed))
                .map(Literal::to_string)
                .collect(),
        })?;

        let ground = |atoms: &[Atom]| -> Result<Vec<Fact>, DomainError> {
            atoms
                .iter()
                .map(|a| {
                    a.ground(&bindings)
                        .map_err(|e| DomainError::Unbound { context: op.name.clone(), variable: e.0 })
                })
                .collect()
        };
        let (adds, deletes) = (ground(&change.add)?, ground(&change.delete)?);

        let before = &ps.level(self.n_levels()).facts;
        let mut facts = before.clone();
        for f in &deletes {
            facts.remove(f);
        }
        facts.extend(adds.iter().cloned());
        let seed_changes = Changes::between(before, &facts);
        let facts = propagate(facts, seed_changes, &self.causal_rules, self.config.causal_cap)?;

        let change = ChangeRecord::between(before, &facts);
        let levels = self.abstract_levels(LevelDescription { level: self.n_levels(), facts })?;
        let pstate = PState { levels, ..ps.clone() };
        Ok(Applied { pstate, bindings, change })
    }

    /// Causal closure of a most-detailed-level description under this domain's rules.
    pub fn causal_closure(&self, state: &LevelDescription) -> Result<LevelDescription, DomainError> {
        causal_closure(state, &self.causal_rules, self.config.causal_cap)
    }
}

fn level_guard(op: &ReductionOperator, state: &LevelDescription) -> Result<(), DomainError> {
    if op.level != state.level {
        return Err(DomainError::LevelMismatch {
            operator: op.name.clone(),
            operator_level: op.level,
            state_level: state.level,
        });
    }
    Ok(())
}

#[derive(Debug, Default, Clone)]
struct Changes {
    added: BTreeSet<Fact>,
    deleted: BTreeSet<Fact>,
}

impl Changes {
    fn between(before: &BTreeSet<Fact>, after: &BTreeSet<Fact>) -> Self {
        Changes {
            added: after.difference(before).cloned().collect(),
            deleted: before.difference(after).cloned().collect(),
        }
    }

    fn is_empty(&self) -> bool {
        self.added.is_empty() && self.deleted.is_empty()
    }
}

/// Runs the causal rules to a fixpoint, treating every present fact as newly added.
///
/// Each pass fires rules in declaration order on the changes of the previous
/// pass; when the changes run dry a sweep over all present facts confirms
/// the fixpoint, which makes the closure idempotent.
pub fn causal_closure(state: &LevelDescription, rules: &[CausalRule], cap: usize) -> Result<LevelDescription, DomainError> {
    let seed = Changes { added: state.facts.clone(), deleted: BTreeSet::new() };
    let facts = propagate(state.facts.clone(), seed, rules, cap)?;
    Ok(LevelDescription { level: state.level, facts })
}

fn propagate(
    mut facts: BTreeSet<Fact>,
    mut changes: Changes,
    rules: &[CausalRule],
    cap: usize,
) -> Result<BTreeSet<Fact>, DomainError> {
    if rules.is_empty() {
        return Ok(facts);
    }
    let mut passes = 0;
    loop {
        let sweep = changes.is_empty();
        if sweep {
            changes.added = facts.clone();
        }
        let before = facts.clone();
        let fired = fire_pass(&mut facts, &changes, rules)?;
        passes += 1;
        changes = Changes::between(&before, &facts);
        if changes.is_empty() && sweep {
            return Ok(facts);
        }
        if passes >= cap && !changes.is_empty() {
            return Err(DomainError::CausalDivergence { passes, rules: fired });
        }
    }
}

fn fire_pass(facts: &mut BTreeSet<Fact>, changes: &Changes, rules: &[CausalRule]) -> Result<Vec<String>, DomainError> {
    let mut fired = Vec::new();
    for rule in rules {
        let pool = match rule.on {
            TriggerEvent::Added => &changes.added,
            TriggerEvent::Deleted => &changes.deleted,
        };
        let triggers: Vec<Bindings> = rule.trigger.matches(pool, &Bindings::new()).map(|(_, b)| b).collect();
        for trigger in triggers {
            let Some(bindings) = logic::solve(&rule.condition, facts, &trigger) else {
                continue;
            };
            let ground = |atoms: &[Atom]| -> Result<BTreeSet<Fact>, DomainError> {
                atoms
                    .iter()
                    .map(|a| {
                        a.ground(&bindings)
                            .map_err(|e| DomainError::Unbound { context: rule.name.clone(), variable: e.0 })
                    })
                    .collect()
            };
            let (adds, deletes) = (ground(&rule.add)?, ground(&rule.delete)?);
            if let Some(f) = adds.intersection(&deletes).next() {
                return Err(DomainError::ContradictoryEffects { context: rule.name.clone(), fact: f.to_string() });
            }
            let mut changed = false;
            for f in &deletes {
                changed |= facts.remove(f);
            }
            for f in adds {
                changed |= facts.insert(f);
            }
            if changed && !fired.contains(&rule.name) {
                fired.push(rule.name.clone());
            }
        }
    }
    Ok(fired)
}
