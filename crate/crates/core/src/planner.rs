//! Hierarchical planner: grows a strategy hierarchy from the goal operator
//! down to primitive actions, always expanding the alternative with the
//! highest expected fulfilment, and extracts the linear plan.
//!
//! Plot entries are alternatives (OR). Conjunctive work comes from helper
//! operators that make an operator's satisfiable preconditions true before
//! it is used; helpers are primitive and appear in the plan ahead of the
//! steps below the node they serve.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::time::Duration;

use rayon::prelude::*;
use thiserror::Error;

use crate::cputime;
use crate::domain::{eval_probability, Bindings, ChangeRecord, Config, DomainError, DomainSpec, PlanFail, PlotEntry, ReductionOperator};
use crate::worlds::PState;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Fulfilment of a plot entry weighted by the child's chance of success.
pub fn expected_fulfilment(entry: &PlotEntry, op: &ReductionOperator, state: &crate::domain::LevelDescription) -> f64 {
    debug_assert_eq!(entry.child, op.name);
    entry.fulfilment * eval_probability(&op.probability, state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeStatus {
    Open,
    Expanded,
    Rejected,
    Achieved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    /// the goal operator (PLANHEAD)
    Root,
    /// one alternative of the parent's plot
    Plot,
    /// primitive applied to make a parent's satisfiable precondition true
    Helper,
}

#[derive(Debug, Clone)]
pub struct StrategyNode {
    pub id: usize,
    pub subgoal: String,
    pub level: usize,
    /// world as it stood when the node was created
    pub snapshot: PState,
    pub fulfilment: f64,
    pub probability: f64,
    pub expected_fulfilment: f64,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub status: NodeStatus,
    pub role: NodeRole,
    /// primitive steps this node contributed: its helpers, then itself
    pub steps: Vec<PlanStep>,
    revised: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Select,
    Expand,
    Apply,
    Reject,
    Revise,
    /// a node rebuilt from a reused plan prefix
    Reuse,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Select => "select",
            EventKind::Expand => "expand",
            EventKind::Apply => "apply",
            EventKind::Reject => "reject",
            EventKind::Revise => "revise",
            EventKind::Reuse => "reuse",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub kind: EventKind,
    pub node: usize,
    pub operator: String,
    pub level: usize,
    pub expected_fulfilment: f64,
    /// logical clock; keeps traces byte-stable across runs
    pub seq: u64,
}

/// The full search tree for one P-state, rejected branches included.
#[derive(Debug, Clone)]
pub struct StrategyHierarchy {
    pub pstate: String,
    pub nodes: Vec<StrategyNode>,
    pub trace: Vec<TraceEvent>,
}

impl StrategyHierarchy {
    fn new(pstate: &str) -> Self {
        StrategyHierarchy { pstate: pstate.to_string(), nodes: Vec::new(), trace: Vec::new() }
    }

    pub fn root(&self) -> &StrategyNode {
        &self.nodes[0]
    }

    pub fn node_label(&self, id: usize) -> String {
        format!("{}/n{}", self.pstate, id)
    }

    /// Tab-separated events: event, node, operator, level, EF, timestamp.
    pub fn trace_tsv(&self) -> String {
        let mut out = String::new();
        for e in &self.trace {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                e.kind,
                self.node_label(e.node),
                e.operator,
                e.level,
                e.expected_fulfilment,
                e.seq
            );
        }
        out
    }

    /// Root-to-node chain of ids.
    pub fn path_to(&self, id: usize) -> Vec<usize> {
        let mut path = vec![id];
        while let Some(p) = self.nodes[*path.last().expect("nonempty")].parent {
            path.push(p);
        }
        path.reverse();
        path
    }

    fn log(&mut self, kind: EventKind, node: usize) {
        let n = &self.nodes[node];
        let seq = self.trace.len() as u64;
        self.trace.push(TraceEvent {
            kind,
            node,
            operator: n.subgoal.clone(),
            level: n.level,
            expected_fulfilment: n.expected_fulfilment,
            seq,
        });
    }

    #[allow(clippy::too_many_arguments)]
    fn add(
        &mut self,
        subgoal: &str,
        level: usize,
        snapshot: PState,
        fulfilment: f64,
        probability: f64,
        parent: Option<usize>,
        role: NodeRole,
        status: NodeStatus,
    ) -> usize {
        let id = self.nodes.len();
        self.nodes.push(StrategyNode {
            id,
            subgoal: subgoal.to_string(),
            level,
            snapshot,
            fulfilment,
            probability,
            expected_fulfilment: fulfilment * probability,
            parent,
            children: Vec::new(),
            status,
            role,
            steps: Vec::new(),
            revised: false,
        });
        if let Some(p) = parent {
            self.nodes[p].children.push(id);
        }
        id
    }

    fn plot_children(&self, id: usize) -> impl Iterator<Item = usize> + '_ {
        self.nodes[id].children.iter().copied().filter(|&c| self.nodes[c].role == NodeRole::Plot)
    }

    fn is_live(&self, id: usize) -> bool {
        match self.nodes[id].status {
            NodeStatus::Open => true,
            NodeStatus::Expanded => self.plot_children(id).any(|c| self.is_live(c)),
            NodeStatus::Rejected | NodeStatus::Achieved => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepRole {
    /// the primitive at the bottom of the strategy path
    Path,
    /// satisfies a precondition of the path node it is owned by
    Helper,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanStep {
    pub operator: String,
    pub level: usize,
    pub bindings: Bindings,
    pub change: ChangeRecord,
    pub role: StepRole,
    /// index into [`LinearPlan::path`] of the node this step belongs to
    pub owner: usize,
}

impl PlanStep {
    /// Identity used when comparing and merging plans.
    pub fn key(&self) -> String {
        let args: Vec<String> = self.bindings.iter().map(|(k, v)| format!("{k}={v}")).collect();
        if args.is_empty() {
            format!("{}@{}", self.operator, self.level)
        } else {
            format!("{}@{}[{}]", self.operator, self.level, args.join(","))
        }
    }
}

/// One node of the chosen strategy, goal first.
#[derive(Debug, Clone, PartialEq)]
pub struct PathNode {
    pub operator: String,
    pub level: usize,
    pub fulfilment: f64,
    pub expected_fulfilment: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearPlan {
    pub id: usize,
    pub steps: Vec<PlanStep>,
    pub path: Vec<PathNode>,
    pub source_pstate: String,
    /// insertion order; the source P-state comes first
    pub works_for: Vec<String>,
    pub per_pstate_prefix: BTreeMap<String, usize>,
}

impl LinearPlan {
    pub fn name(&self) -> String {
        format!("p{}", self.id)
    }

    pub fn step_keys(&self) -> Vec<String> {
        self.steps.iter().map(PlanStep::key).collect()
    }

    pub fn add_pstate(&mut self, pstate: &str) {
        if !self.works_for.iter().any(|p| p == pstate) {
            self.works_for.push(pstate.to_string());
        }
        self.per_pstate_prefix.insert(pstate.to_string(), self.steps.len());
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FailureReason {
    /// every alternative was rejected
    Exhausted,
    /// an operator with the abort policy failed
    Aborted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanFailure {
    pub pstate: String,
    pub reason: FailureReason,
    /// deepest rejected node (latest among equals)
    pub most_advanced: Option<usize>,
    pub operator: Option<String>,
    pub level: Option<usize>,
}

impl fmt::Display for PlanFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let why = match self.reason {
            FailureReason::Exhausted => "all alternatives rejected",
            FailureReason::Aborted => "aborted",
        };
        write!(f, "no plan for {}: {why}", self.pstate)?;
        if let (Some(op), Some(level)) = (&self.operator, self.level) {
            write!(f, " (furthest: {op} at level {level})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub plan: Result<LinearPlan, PlanFailure>,
    pub hierarchy: StrategyHierarchy,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Review {
    Pass,
    Revise(usize),
}

/// Offset review: the nearest ancestor whose expected fulfilment exceeds the
/// current node's by more than the offset for their level gap.
///
/// `ancestors` are ordered nearest first.
pub fn review_offset(current: &StrategyNode, ancestors: &[&StrategyNode], config: &Config) -> Review {
    for anc in ancestors {
        let gap = current.level.saturating_sub(anc.level).max(1);
        if current.expected_fulfilment < anc.expected_fulfilment - config.offset(gap) {
            return Review::Revise(anc.id);
        }
    }
    Review::Pass
}

enum Processed {
    Achieved,
    Expanded,
    Failed(PlanFail),
}

struct Search<'a> {
    domain: &'a DomainSpec,
    h: StrategyHierarchy,
    most_advanced: Option<usize>,
    aborted: bool,
}

impl<'a> Search<'a> {
    fn new(domain: &'a DomainSpec, pstate: &str) -> Self {
        Search { domain, h: StrategyHierarchy::new(pstate), most_advanced: None, aborted: false }
    }

    fn op(&self, id: usize) -> &'a ReductionOperator {
        self.domain.operator(&self.h.nodes[id].subgoal).expect("validated operator")
    }

    fn position(&self, id: usize) -> usize {
        self.domain.operator_position(&self.h.nodes[id].subgoal).unwrap_or(usize::MAX)
    }

    /// True if `a` should be preferred to `b`.
    fn better(&self, a: usize, b: usize) -> bool {
        let (x, y) = (self.h.nodes[a].expected_fulfilment, self.h.nodes[b].expected_fulfilment);
        x > y || (x == y && (self.position(a), a) < (self.position(b), b))
    }

    fn best_of(&self, ids: impl Iterator<Item = usize>) -> Option<usize> {
        ids.fold(None, |best, c| match best {
            Some(b) if !self.better(c, b) => Some(b),
            _ => Some(c),
        })
    }

    fn add_root(&mut self, ps: &PState) -> usize {
        let goal = self.domain.goal_operator();
        self.h.add(&goal.name, goal.level, ps.clone(), 1.0, 1.0, None, NodeRole::Root, NodeStatus::Open)
    }

    fn reject(&mut self, id: usize) {
        self.h.nodes[id].status = NodeStatus::Rejected;
        self.h.log(EventKind::Reject, id);
        let deeper = |s: &Self, m: usize| s.h.nodes[id].level >= s.h.nodes[m].level;
        if self.most_advanced.is_none_or(|m| deeper(self, m)) {
            self.most_advanced = Some(id);
        }
    }

    /// Applies helpers for `op`'s unmet satisfiable preconditions.
    fn satisfy(
        &self,
        op: &ReductionOperator,
        ps: &PState,
        mut budget: usize,
        chain: &mut Vec<String>,
    ) -> Result<Option<(PState, Vec<(String, PState, crate::domain::Applied)>, usize)>, PlanError> {
        let d = self.domain;
        let n = d.n_levels();
        let mut state = ps.clone();
        let mut applied = Vec::new();
        loop {
            let unmet = d.check_satisfiable(op, state.level(op.level));
            let Some(lit) = unmet.first().cloned() else {
                return Ok(Some((state, applied, budget)));
            };
            if !lit.positive || budget == 0 {
                return Ok(None);
            }
            let mut progressed = false;
            let candidates: Vec<&ReductionOperator> = d
                .operators
                .iter()
                .filter(|h| {
                    h.is_primitive()
                        && h.name != op.name
                        && !chain.contains(&h.name)
                        && h.post.iter().any(|a| a.unifies_with(&lit.atom))
                })
                .collect();
            for h in candidates {
                if !d.check_necessary(h, state.level(n))? {
                    continue;
                }
                chain.push(h.name.clone());
                let sub = self.satisfy(h, &state, budget - 1, chain)?;
                chain.pop();
                let Some((before, sub_applied, left)) = sub else { continue };
                let done = match d.apply_with(h, &before, &Bindings::new()) {
                    Err(DomainError::PreconditionsUnmet { .. }) => continue,
                    Err(e) => return Err(e.into()),
                    Ok(a) => a,
                };
                if d.check_satisfiable(op, done.pstate.level(op.level)).contains(&lit) {
                    continue;
                }
                applied.extend(sub_applied);
                state = done.pstate.clone();
                applied.push((h.name.clone(), before, done));
                budget = left;
                progressed = true;
                break;
            }
            if !progressed {
                return Ok(None);
            }
        }
    }

    fn step(&self, name: &str, a: &crate::domain::Applied, role: StepRole) -> PlanStep {
        PlanStep {
            operator: name.to_string(),
            level: self.domain.n_levels(),
            bindings: a.bindings.clone(),
            change: a.change.clone(),
            role,
            owner: 0,
        }
    }

    /// Runs helpers for node `id`; returns the state its children start from.
    fn run_helpers(&mut self, id: usize) -> Result<Option<PState>, PlanError> {
        let op = self.op(id);
        let snapshot = self.h.nodes[id].snapshot.clone();
        let mut chain = vec![op.name.clone()];
        let Some((state, applied, _)) = self.satisfy(op, &snapshot, self.domain.config.helper_depth, &mut chain)? else {
            return Ok(None);
        };
        let n = self.domain.n_levels();
        for (name, before, a) in applied {
            let h = self.domain.operator(&name)?;
            let p = eval_probability(&h.probability, before.level(n));
            let hid = self.h.add(&name, n, before, 1.0, p, Some(id), NodeRole::Helper, NodeStatus::Achieved);
            self.h.log(EventKind::Apply, hid);
            let step = self.step(&name, &a, StepRole::Helper);
            self.h.nodes[hid].steps.push(step.clone());
            self.h.nodes[id].steps.push(step);
        }
        Ok(Some(state))
    }

    fn expand(&mut self, id: usize, state: &PState) -> Result<(), PlanError> {
        let op = self.op(id);
        for entry in op.plot_entries() {
            let child = self.domain.operator(&entry.child)?;
            let p = eval_probability(&child.probability, state.level(child.level));
            let cid = self.h.add(&child.name, child.level, state.clone(), entry.fulfilment, p, Some(id), NodeRole::Plot, NodeStatus::Open);
            self.h.log(EventKind::Expand, cid);
        }
        self.h.nodes[id].status = NodeStatus::Expanded;
        Ok(())
    }

    fn process(&mut self, id: usize) -> Result<Processed, PlanError> {
        let op = self.op(id);
        let d = self.domain;
        let snapshot = self.h.nodes[id].snapshot.clone();
        if !d.check_necessary(op, snapshot.level(op.level))? {
            return Ok(Processed::Failed(op.planfail));
        }
        let Some(state) = self.run_helpers(id)? else {
            return Ok(Processed::Failed(op.planfail));
        };
        if op.is_primitive() {
            let applied = match d.apply_with(op, &state, &Bindings::new()) {
                Err(DomainError::PreconditionsUnmet { .. }) => return Ok(Processed::Failed(op.planfail)),
                Err(e) => return Err(e.into()),
                Ok(a) => a,
            };
            let step = self.step(&op.name, &applied, StepRole::Path);
            self.h.nodes[id].steps.push(step);
            self.h.log(EventKind::Apply, id);
            if d.goal_reached(&applied.pstate) {
                self.h.nodes[id].status = NodeStatus::Achieved;
                return Ok(Processed::Achieved);
            }
            return Ok(Processed::Failed(op.planfail));
        }
        if op.plot_entries().is_empty() {
            return Ok(Processed::Failed(op.planfail));
        }
        self.expand(id, &state)?;
        Ok(Processed::Expanded)
    }

    fn best_open_child(&self, id: usize) -> Option<usize> {
        self.best_of(self.h.plot_children(id).filter(|&c| self.h.nodes[c].status == NodeStatus::Open))
    }

    /// Picks the next node after `id` has been expanded, applying the offset review.
    fn after_expand(&mut self, id: usize) -> Option<usize> {
        let Some(best) = self.best_open_child(id) else {
            self.reject(id);
            return self.backtrack(self.h.nodes[id].parent);
        };
        let ancestors: Vec<usize> = self
            .h
            .path_to(id)
            .into_iter()
            .rev()
            .filter(|&a| self.h.nodes[a].role == NodeRole::Plot && !self.h.nodes[a].revised)
            .collect();
        let refs: Vec<&StrategyNode> = ancestors.iter().map(|&a| &self.h.nodes[a]).collect();
        if let Review::Revise(anc) = review_offset(&self.h.nodes[best], &refs, &self.domain.config) {
            let parent = self.h.nodes[anc].parent.expect("plot node has a parent");
            let sibling = self.best_of(
                self.h
                    .plot_children(parent)
                    .filter(|&s| s != anc && self.h.nodes[s].status == NodeStatus::Open),
            );
            if let Some(s) = sibling.filter(|&s| self.h.nodes[s].expected_fulfilment > self.h.nodes[best].expected_fulfilment) {
                self.h.nodes[anc].revised = true;
                self.h.log(EventKind::Revise, anc);
                return Some(s);
            }
        }
        Some(best)
    }

    /// Best open node reachable below `id` through live branches.
    fn descend(&self, mut id: usize) -> Option<usize> {
        loop {
            let next = self.best_of(self.h.plot_children(id).filter(|&c| self.h.is_live(c)))?;
            if self.h.nodes[next].status == NodeStatus::Open {
                return Some(next);
            }
            id = next;
        }
    }

    fn backtrack(&mut self, mut from: Option<usize>) -> Option<usize> {
        while let Some(p) = from {
            if self.h.nodes[p].status == NodeStatus::Expanded {
                if let Some(next) = self.descend(p) {
                    return Some(next);
                }
                self.reject(p);
            }
            from = self.h.nodes[p].parent;
        }
        None
    }

    fn fail(&mut self, id: usize, policy: PlanFail) -> Option<usize> {
        self.reject(id);
        let parent = self.h.nodes[id].parent;
        match policy {
            PlanFail::Abort => {
                self.aborted = true;
                None
            }
            PlanFail::Backtrack => self.backtrack(parent),
            PlanFail::RejectBranch => match parent {
                Some(p) if self.h.nodes[p].status != NodeStatus::Rejected => {
                    self.reject(p);
                    self.backtrack(self.h.nodes[p].parent)
                }
                _ => self.backtrack(parent),
            },
        }
    }

    fn run(&mut self, start: Option<usize>) -> Result<Option<usize>, PlanError> {
        let mut next = start;
        while let Some(id) = next {
            self.h.log(EventKind::Select, id);
            next = match self.process(id)? {
                Processed::Achieved => return Ok(Some(id)),
                Processed::Expanded => self.after_expand(id),
                Processed::Failed(policy) => self.fail(id, policy),
            };
        }
        Ok(None)
    }

    fn finish(self, leaf: Option<usize>, ps: &PState) -> PlanOutcome {
        let plan = match leaf {
            Some(leaf) => Ok(extract(&self.h, leaf, ps)),
            None => Err(PlanFailure {
                pstate: ps.id.clone(),
                reason: if self.aborted { FailureReason::Aborted } else { FailureReason::Exhausted },
                most_advanced: self.most_advanced,
                operator: self.most_advanced.map(|m| self.h.nodes[m].subgoal.clone()),
                level: self.most_advanced.map(|m| self.h.nodes[m].level),
            }),
        };
        PlanOutcome { plan, hierarchy: self.h }
    }
}

fn extract(h: &StrategyHierarchy, leaf: usize, ps: &PState) -> LinearPlan {
    let mut steps = Vec::new();
    let mut path = Vec::new();
    for (index, id) in h.path_to(leaf).into_iter().enumerate() {
        let node = &h.nodes[id];
        path.push(PathNode {
            operator: node.subgoal.clone(),
            level: node.level,
            fulfilment: node.fulfilment,
            expected_fulfilment: node.expected_fulfilment,
        });
        steps.extend(node.steps.iter().cloned().map(|mut s| {
            s.owner = index;
            s
        }));
    }
    let mut plan = LinearPlan {
        id: 0,
        steps,
        path,
        source_pstate: ps.id.clone(),
        works_for: Vec::new(),
        per_pstate_prefix: BTreeMap::new(),
    };
    plan.add_pstate(&ps.id);
    plan
}

/// Plans for a single P-state from the goal operator down.
pub fn plan(ps: &PState, domain: &DomainSpec) -> Result<PlanOutcome, PlanError> {
    let mut search = Search::new(domain, &ps.id);
    let root = search.add_root(ps);
    let leaf = search.run(Some(root))?;
    Ok(search.finish(leaf, ps))
}

/// Continues planning for `ps` from an existing plan whose strategy held
/// for the first `prefix_len` steps.
///
/// The path nodes whose steps all lie in the prefix are rebuilt (helper
/// steps in `skip` are left out as redundant) and search resumes below the
/// deepest of them. Falls back to a fresh search if the resumed one fails.
pub fn resume(
    ps: &PState,
    domain: &DomainSpec,
    previous: &LinearPlan,
    prefix_len: usize,
    skip: &[usize],
) -> Result<PlanOutcome, PlanError> {
    let last = previous.path.len().saturating_sub(1);
    let complete = |j: usize| previous.steps.iter().enumerate().all(|(i, s)| s.owner > j || i < prefix_len);
    let deepest = (0..last).take_while(|&j| complete(j)).last();
    let Some(deepest) = deepest else {
        return plan(ps, domain);
    };

    let mut search = Search::new(domain, &ps.id);
    let mut id = search.add_root(ps);
    search.h.log(EventKind::Reuse, id);
    let n = domain.n_levels();
    for j in 0..=deepest {
        let op = search.op(id);
        let mut state = search.h.nodes[id].snapshot.clone();
        if !domain.check_necessary(op, state.level(op.level))? {
            return plan(ps, domain);
        }
        for (i, step) in previous.steps.iter().enumerate().filter(|(_, s)| s.owner == j) {
            if skip.contains(&i) {
                continue;
            }
            let h = domain.operator(&step.operator)?;
            let a = match domain.apply_with(h, &state, &step.bindings) {
                Err(DomainError::PreconditionsUnmet { .. }) => return plan(ps, domain),
                Err(e) => return Err(e.into()),
                Ok(a) => a,
            };
            let p = eval_probability(&h.probability, state.level(n));
            let hid = search.h.add(&h.name, n, state.clone(), 1.0, p, Some(id), NodeRole::Helper, NodeStatus::Achieved);
            search.h.log(EventKind::Apply, hid);
            let s = search.step(&h.name, &a, StepRole::Helper);
            search.h.nodes[hid].steps.push(s.clone());
            search.h.nodes[id].steps.push(s);
            state = a.pstate;
        }
        if !domain.check_satisfiable(op, state.level(op.level)).is_empty() {
            return plan(ps, domain);
        }
        search.expand(id, &state)?;
        if j == deepest {
            break;
        }
        let wanted = &previous.path[j + 1].operator;
        let Some(child) = search.h.plot_children(id).find(|&c| &search.h.nodes[c].subgoal == wanted) else {
            return plan(ps, domain);
        };
        search.h.log(EventKind::Reuse, child);
        id = child;
    }
    let next = search.after_expand(id);
    let leaf = search.run(next)?;
    match leaf {
        Some(_) => Ok(search.finish(leaf, ps)),
        None => plan(ps, domain),
    }
}

/// Result of planning one P-state in control mode.
#[derive(Debug, Clone)]
pub struct CplanEntry {
    pub pstate: String,
    pub plan: Result<LinearPlan, PlanFailure>,
    pub hierarchy: StrategyHierarchy,
    pub cpu: Duration,
}

/// Control planner: one independent plan per P-state, no reuse or merging.
/// Runs the P-states in parallel; results keep the input order.
pub fn cplan_all(pstates: &[PState], domain: &DomainSpec) -> Result<Vec<CplanEntry>, PlanError> {
    let entries = pstates.par_iter().map(|ps| cplan_one(ps, domain)).collect::<Result<Vec<_>, _>>()?;
    Ok(number(entries))
}

/// Sequential form of [`cplan_all`], used when timing.
pub fn cplan_all_sequential(pstates: &[PState], domain: &DomainSpec) -> Result<Vec<CplanEntry>, PlanError> {
    let entries = pstates.iter().map(|ps| cplan_one(ps, domain)).collect::<Result<Vec<_>, _>>()?;
    Ok(number(entries))
}

fn cplan_one(ps: &PState, domain: &DomainSpec) -> Result<CplanEntry, PlanError> {
    let start = cputime::thread_cpu();
    let outcome = plan(ps, domain)?;
    let cpu = cputime::thread_cpu().saturating_sub(start);
    Ok(CplanEntry { pstate: ps.id.clone(), plan: outcome.plan, hierarchy: outcome.hierarchy, cpu })
}

fn number(mut entries: Vec<CplanEntry>) -> Vec<CplanEntry> {
    let mut next = 0;
    for e in &mut entries {
        if let Ok(p) = &mut e.plan {
            p.id = next;
            next += 1;
        }
    }
    entries
}
