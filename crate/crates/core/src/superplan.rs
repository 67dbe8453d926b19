//! Merging per-world plans into one branching super-plan, and deciding at
//! each branch between acquiring information and committing by belief.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::domain::{Config, DomainSpec, KaTradeoff, KnowledgeAcquisitionOperator};
use crate::evidence::{ElementSet, MassDistribution};
use crate::planner::{LinearPlan, PlanStep};
use crate::worlds::PState;

/// Mass committed to the worlds in `works_for`: every focal set lying
/// entirely inside them counts, disjunctions included.
pub fn works_for_mass<'a>(works_for: impl IntoIterator<Item = &'a str>, joint: &MassDistribution) -> f64 {
    let frame = joint.frame();
    let members: ElementSet = works_for.into_iter().filter_map(|id| frame.index_of(id).ok()).collect();
    joint.support_of(&members)
}

pub fn plan_mass(plan: &LinearPlan, joint: &MassDistribution) -> f64 {
    works_for_mass(plan.works_for.iter().map(String::as_str), joint)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tradeoff {
    Acquire,
    Select,
}

/// Acquire information unless the best arm is already believed enough or
/// the information costs more than the ceiling. Free information is always
/// acquired while any doubt remains.
pub fn ka_tradeoff(arm_masses: &[f64], cost: f64, rule: &KaTradeoff) -> Tradeoff {
    const EPS: f64 = 1e-9;
    let best = arm_masses.iter().copied().fold(0.0, f64::max);
    if best >= 1.0 - EPS {
        return Tradeoff::Select;
    }
    if cost <= 0.0 {
        return Tradeoff::Acquire;
    }
    if best >= rule.belief_cutoff - EPS || cost > rule.cost_ceiling {
        Tradeoff::Select
    } else {
        Tradeoff::Acquire
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    /// not yet examined by [`insert_ka`]
    Pending,
    Acquire { operator: String, cost: f64 },
    /// commit to the first (greatest-mass) arm
    SelectByMass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arm {
    /// first step key of the arm, or "end" for plans finishing here
    pub outcome: String,
    pub mass: f64,
    pub plans: Vec<usize>,
    pub works_for: Vec<String>,
    pub node: SuperNode,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Continuation {
    /// plans (possibly several identical ones) finishing here
    Terminal { plans: Vec<usize> },
    Branch { decision: Decision, arms: Vec<Arm> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperNode {
    pub common_steps: Vec<PlanStep>,
    pub next: Continuation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperPlan {
    pub root: SuperNode,
    pub plan_count: usize,
}

fn remaining<'a>(&(p, at): &(&'a LinearPlan, usize)) -> &'a [PlanStep] {
    &p.steps[at..]
}

fn build(group: &[(&LinearPlan, usize)], joint: &MassDistribution) -> SuperNode {
    // group entries are (plan, offset of the first step not yet placed)
    let mut common = Vec::new();
    loop {
        let heads: BTreeSet<Option<String>> =
            group.iter().map(|g| remaining(g).get(common.len()).map(PlanStep::key)).collect();
        match heads.into_iter().collect::<Vec<_>>().as_slice() {
            [Some(_)] => common.push(remaining(&group[0])[common.len()].clone()),
            _ => break,
        }
    }
    let advanced: Vec<(&LinearPlan, usize)> = group.iter().map(|&(p, at)| (p, at + common.len())).collect();
    if advanced.iter().all(|(p, at)| *at == p.steps.len()) {
        let plans = advanced.iter().map(|(p, _)| p.id).collect();
        return SuperNode { common_steps: common, next: Continuation::Terminal { plans } };
    }

    let mut keys: Vec<String> = Vec::new();
    for (p, at) in &advanced {
        let key = p.steps.get(*at).map_or_else(|| "end".to_string(), PlanStep::key);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut arms: Vec<Arm> = keys
        .into_iter()
        .map(|key| {
            let members: Vec<(&LinearPlan, usize)> = advanced
                .iter()
                .copied()
                .filter(|(p, at)| p.steps.get(*at).map_or_else(|| "end".to_string(), PlanStep::key) == key)
                .collect();
            let mut works_for: Vec<String> = Vec::new();
            for (p, _) in &members {
                for w in &p.works_for {
                    if !works_for.contains(w) {
                        works_for.push(w.clone());
                    }
                }
            }
            let node = if key == "end" {
                SuperNode { common_steps: Vec::new(), next: Continuation::Terminal { plans: members.iter().map(|(p, _)| p.id).collect() } }
            } else {
                build(&members, joint)
            };
            Arm {
                outcome: key,
                mass: works_for_mass(works_for.iter().map(String::as_str), joint),
                plans: members.iter().map(|(p, _)| p.id).collect(),
                works_for,
                node,
            }
        })
        .collect();
    arms.sort_by(|a, b| {
        b.mass
            .partial_cmp(&a.mass)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.plans.iter().min().cmp(&b.plans.iter().min()))
    });
    SuperNode { common_steps: common, next: Continuation::Branch { decision: Decision::Pending, arms } }
}

/// Longest-common-prefix tree over the plans' step sequences.
pub fn merge(plans: &[LinearPlan], joint: &MassDistribution) -> SuperPlan {
    let group: Vec<(&LinearPlan, usize)> = plans.iter().map(|p| (p, 0)).collect();
    let root = if group.is_empty() {
        SuperNode { common_steps: Vec::new(), next: Continuation::Terminal { plans: Vec::new() } }
    } else {
        build(&group, joint)
    };
    SuperPlan { root, plan_count: plans.len() }
}

/// Cell of `ka`'s partition holding the world, if the world lies on its frame.
fn cell(ka: &KnowledgeAcquisitionOperator, ps: &PState) -> Option<usize> {
    let label = ps.elements.get(ka.frame.id())?;
    let e = ka.frame.index_of(label).ok()?;
    ka.partition.iter().position(|c| c.contains(&e))
}

/// True if every pair of arms falls in disjoint partition cells.
pub fn separates(ka: &KnowledgeAcquisitionOperator, arms: &[Vec<String>], pstates: &[PState]) -> bool {
    let mut seen: Vec<BTreeSet<usize>> = Vec::new();
    for works_for in arms {
        let mut cells = BTreeSet::new();
        for id in works_for {
            let Some(ps) = pstates.iter().find(|p| &p.id == id) else { return false };
            let Some(c) = cell(ka, ps) else { return false };
            cells.insert(c);
        }
        if seen.iter().any(|s| !s.is_disjoint(&cells)) {
            return false;
        }
        seen.push(cells);
    }
    true
}

fn decide(node: &mut SuperNode, domain: &DomainSpec, pstates: &[PState], config: &Config) {
    let Continuation::Branch { decision, arms } = &mut node.next else { return };
    for arm in arms.iter_mut() {
        decide(&mut arm.node, domain, pstates, config);
    }
    let groups: Vec<Vec<String>> = arms.iter().map(|a| a.works_for.clone()).collect();
    let chosen = domain
        .ka_operators
        .iter()
        .enumerate()
        .filter(|(_, ka)| separates(ka, &groups, pstates))
        .min_by(|(i, a), (j, b)| a.cost.partial_cmp(&b.cost).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(j)))
        .map(|(_, ka)| ka);
    let total: f64 = arms.iter().map(|a| a.mass).sum::<f64>().max(f64::MIN_POSITIVE);
    let normalised: Vec<f64> = arms.iter().map(|a| a.mass / total).collect();
    *decision = match chosen {
        Some(ka) if ka_tradeoff(&normalised, ka.cost, &config.ka_tradeoff) == Tradeoff::Acquire => {
            Decision::Acquire { operator: ka.name.clone(), cost: ka.cost }
        }
        _ => Decision::SelectByMass,
    };
}

/// Resolves every branch: a separating knowledge-acquisition operator if the
/// trade-off favours acquiring, otherwise commitment to the heaviest arm.
pub fn insert_ka(mut sp: SuperPlan, domain: &DomainSpec, pstates: &[PState]) -> SuperPlan {
    decide(&mut sp.root, domain, pstates, &domain.config);
    sp
}

/// Every root-to-leaf step sequence with the plan that produced it.
pub fn leaf_sequences(sp: &SuperPlan) -> Vec<(usize, Vec<String>)> {
    fn walk(node: &SuperNode, prefix: &mut Vec<String>, out: &mut Vec<(usize, Vec<String>)>) {
        let depth = prefix.len();
        prefix.extend(node.common_steps.iter().map(PlanStep::key));
        match &node.next {
            Continuation::Terminal { plans } => out.extend(plans.iter().map(|&p| (p, prefix.clone()))),
            Continuation::Branch { arms, .. } => {
                for arm in arms {
                    walk(&arm.node, prefix, out);
                }
            }
        }
        prefix.truncate(depth);
    }
    let mut out = Vec::new();
    walk(&sp.root, &mut Vec::new(), &mut out);
    out
}

/// Stable indented text form.
pub fn render(sp: &SuperPlan) -> String {
    fn names(plans: &[usize]) -> String {
        plans.iter().map(|p| format!("p{p}")).collect::<Vec<_>>().join(",")
    }
    fn walk(node: &SuperNode, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        for step in &node.common_steps {
            let _ = writeln!(out, "{pad}step {}", step.key());
        }
        match &node.next {
            Continuation::Terminal { plans } => {
                let _ = writeln!(out, "{pad}done {}", names(plans));
            }
            Continuation::Branch { decision, arms } => {
                let how = match decision {
                    Decision::Pending => "undecided".to_string(),
                    Decision::Acquire { operator, cost } => format!("acquire {operator} (cost {cost})"),
                    Decision::SelectByMass => "select-by-mass".to_string(),
                };
                let _ = writeln!(out, "{pad}branch {how}");
                for arm in arms {
                    let _ = writeln!(
                        out,
                        "{pad}  arm {:.4} {} plans={} worlds={}",
                        arm.mass,
                        arm.outcome,
                        names(&arm.plans),
                        arm.works_for.join(",")
                    );
                    walk(&arm.node, depth + 2, out);
                }
            }
        }
    }
    let mut out = format!("super-plan {} plan(s)\n", sp.plan_count);
    walk(&sp.root, 1, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evidence::{Frame, Proposition};
    use crate::planner::StepRole;
    use std::collections::BTreeMap;
    use std::sync::Arc;

    fn joint(entries: &[(&[&str], f64)]) -> MassDistribution {
        let f = Arc::new(Frame::new("pstates", ["a", "b", "c"], 2).unwrap());
        MassDistribution::new(
            f.clone(),
            entries.iter().map(|(l, m)| (Proposition::new(&f, l.iter().copied()).unwrap(), *m)),
        )
        .unwrap()
    }

    fn plan(id: usize, steps: &[&str], works_for: &[&str]) -> LinearPlan {
        LinearPlan {
            id,
            steps: steps
                .iter()
                .map(|s| PlanStep {
                    operator: s.to_string(),
                    level: 2,
                    bindings: BTreeMap::new(),
                    change: Default::default(),
                    role: StepRole::Path,
                    owner: 0,
                })
                .collect(),
            path: Vec::new(),
            source_pstate: works_for[0].to_string(),
            works_for: works_for.iter().map(|w| w.to_string()).collect(),
            per_pstate_prefix: BTreeMap::new(),
        }
    }

    #[test]
    fn plan_mass_counts_disjunctions_inside_works_for() {
        let j = joint(&[(&["a"], 0.3), (&["b"], 0.3), (&["a", "b"], 0.2), (&["c"], 0.2)]);
        assert!((plan_mass(&plan(0, &["x"], &["a", "b"]), &j) - 0.8).abs() < 1e-12);
        assert!((plan_mass(&plan(0, &["x"], &["a"]), &j) - 0.3).abs() < 1e-12);
        assert!((plan_mass(&plan(0, &["x"], &["a", "b", "c"]), &j) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_plan_is_a_chain() {
        let j = joint(&[(&["a"], 1.0)]);
        let sp = merge(&[plan(0, &["s1", "s2"], &["a"])], &j);
        assert_eq!(sp.root.common_steps.len(), 2);
        assert_eq!(sp.root.next, Continuation::Terminal { plans: vec![0] });
    }

    #[test]
    fn shared_prefix_branches_once() {
        let j = joint(&[(&["a"], 0.6), (&["b"], 0.4)]);
        let plans = [plan(0, &["s1", "s2", "s3", "x"], &["a"]), plan(1, &["s1", "s2", "s3", "y"], &["b"])];
        let sp = merge(&plans, &j);
        assert_eq!(sp.root.common_steps.len(), 3);
        let Continuation::Branch { arms, .. } = &sp.root.next else { panic!("expected branch") };
        assert_eq!(arms.len(), 2);
        assert_eq!(arms[0].plans, [0]);
        assert!((arms[0].mass - 0.6).abs() < 1e-12);
        let seqs = leaf_sequences(&sp);
        assert_eq!(seqs.len(), 2);
        assert_eq!(seqs[1].1, plans[1].step_keys());
    }

    #[test]
    fn prefix_plan_ends_inside_branch() {
        let j = joint(&[(&["a"], 0.5), (&["b"], 0.5)]);
        let sp = merge(&[plan(0, &["s1"], &["a"]), plan(1, &["s1", "s2"], &["b"])], &j);
        let Continuation::Branch { arms, .. } = &sp.root.next else { panic!("expected branch") };
        assert_eq!(arms[0].outcome, "end");
        assert_eq!(leaf_sequences(&sp).len(), 2);
    }

    #[test]
    fn identical_plans_share_a_leaf() {
        let j = joint(&[(&["a"], 0.5), (&["b"], 0.5)]);
        let sp = merge(&[plan(0, &["s"], &["a"]), plan(1, &["s"], &["b"])], &j);
        assert_eq!(sp.root.next, Continuation::Terminal { plans: vec![0, 1] });
        assert_eq!(leaf_sequences(&sp).len(), 2);
    }

    #[test]
    fn tradeoff_rule() {
        let rule = KaTradeoff { belief_cutoff: 0.9, cost_ceiling: f64::INFINITY };
        assert_eq!(ka_tradeoff(&[0.6, 0.4], 0.0, &rule), Tradeoff::Acquire);
        assert_eq!(ka_tradeoff(&[0.95, 0.05], 0.0, &rule), Tradeoff::Acquire);
        assert_eq!(ka_tradeoff(&[1.0, 0.0], 0.0, &rule), Tradeoff::Select);
        assert_eq!(ka_tradeoff(&[0.9, 0.1], 5.0, &rule), Tradeoff::Select);
        assert_eq!(ka_tradeoff(&[0.8, 0.2], 5.0, &rule), Tradeoff::Acquire);
        let capped = KaTradeoff { cost_ceiling: 4.0, ..rule };
        assert_eq!(ka_tradeoff(&[0.5, 0.5], 5.0, &capped), Tradeoff::Select);
    }

    #[test]
    fn render_is_stable() {
        let j = joint(&[(&["a"], 0.6), (&["b"], 0.4)]);
        let sp = merge(&[plan(0, &["s1", "x"], &["a"]), plan(1, &["s1", "y"], &["b"])], &j);
        let text = render(&sp);
        assert_eq!(text, render(&sp));
        assert!(text.contains("arm 0.6000 x@2 plans=p0 worlds=a"));
    }
}
