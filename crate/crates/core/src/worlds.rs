//! Possible initial worlds (P-states): generation from evidence, abstraction
//! to every level, grouping into a tree of identical descriptions, ranking
//! by evidential interval and selection of the first world to plan for.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::domain::{DomainError, DomainSpec, LevelDescription};
use crate::evidence::{self, compare_ranked, ElementSet, EvidenceError, EvidentialInterval, Frame, MassDistribution};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldsError {
    #[error("no evidence for frame `{0}`")]
    MissingEvidence(String),
    #[error("evidence given for `{0}`, which is not a most-detailed-level frame")]
    StrayEvidence(String),
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// One possible world, described at every abstraction level.
#[derive(Debug, Clone, PartialEq)]
pub struct PState {
    pub id: String,
    /// position in the P-state frame of the joint distribution
    pub index: usize,
    /// evidence frame id to the element this world takes there
    pub elements: BTreeMap<String, String>,
    /// `levels[i]` describes level `i + 1`
    pub levels: Vec<LevelDescription>,
    /// joint mass on exactly this world
    pub mass: f64,
    /// interval of the tree node holding this world, per level (after ranking)
    pub intervals: Vec<EvidentialInterval>,
}

impl PState {
    pub fn level(&self, level: usize) -> &LevelDescription {
        &self.levels[level - 1]
    }

    pub fn lowest(&self) -> &LevelDescription {
        self.levels.last().expect("P-state has at least one level")
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }
}

/// Generated worlds plus the joint distribution over them (element `i` of
/// the joint frame is `pstates[i]`).
#[derive(Debug, Clone)]
pub struct Worlds {
    pub pstates: Vec<PState>,
    pub joint: MassDistribution,
}

/// Builds one P-state per joint-frame element that some focal set covers.
///
/// Worlds covered only by disjunctions are still generated; their support
/// is zero while their plausibility is positive.
pub fn generate_pstates(evidence: &[MassDistribution], domain: &DomainSpec) -> Result<Worlds, WorldsError> {
    let n = domain.n_levels();
    if let Some(stray) = evidence.iter().find(|m| m.frame().level() != n || domain.frame(m.frame().id()).is_none()) {
        return Err(WorldsError::StrayEvidence(stray.frame().id().to_string()));
    }
    let sources = domain
        .evidence_frames()
        .map(|f| {
            evidence
                .iter()
                .find(|m| m.frame().id() == f.id())
                .cloned()
                .ok_or_else(|| WorldsError::MissingEvidence(f.id().to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let product = evidence::joint_mass(&sources)?;
    let frame = product.frame().clone();
    let covered: Vec<usize> = product.core().into_iter().collect();

    let mut pstates = Vec::with_capacity(covered.len());
    for (position, &k) in covered.iter().enumerate() {
        let tuple = frame.decode(k);
        let mut facts = std::collections::BTreeSet::new();
        let mut elements = BTreeMap::new();
        for (factor, &e) in frame.factors().iter().zip(&tuple) {
            let label = &factor.elements()[e];
            facts.extend(domain.template(factor.id(), label).iter().cloned());
            elements.insert(factor.id().to_string(), label.clone());
        }
        let lowest = domain.causal_closure(&LevelDescription { level: n, facts })?;
        pstates.push(PState {
            id: frame.elements()[k].clone(),
            index: position,
            elements,
            levels: domain.abstract_levels(lowest)?,
            mass: product.mass_of(&ElementSet::from([k])),
            intervals: Vec::new(),
        });
    }

    let ps_frame = Arc::new(Frame::new("pstates", pstates.iter().map(|p| p.id.clone()), n)?);
    let position: BTreeMap<usize, usize> = covered.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let entries = product
        .focal()
        .map(|(set, m)| {
            let members = set.iter().map(|k| position[k]);
            Ok((evidence::Proposition::from_indices(&ps_frame, members)?, m))
        })
        .collect::<Result<Vec<_>, EvidenceError>>()?;
    let joint = MassDistribution::new(ps_frame, entries)?;
    Ok(Worlds { pstates, joint })
}

/// Re-derives every level above the most detailed one.
pub fn abstract_pstate(ps: &PState, domain: &DomainSpec) -> Result<PState, DomainError> {
    let levels = domain.abstract_levels(ps.lowest().clone())?;
    Ok(PState { levels, ..ps.clone() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    /// 0 for the virtual root collecting distinct level-1 groups
    pub level: usize,
    /// joint-frame indices of the grouped P-states, ascending
    pub members: Vec<usize>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub interval: Option<EvidentialInterval>,
}

/// Grouping of P-states by identical descriptions, level by level.
#[derive(Debug, Clone)]
pub struct PStateTree {
    pub nodes: Vec<TreeNode>,
    pub root: usize,
    pstates: Vec<PState>,
    /// singleton interval per P-state, aligned with `pstates` (after ranking)
    singles: Vec<EvidentialInterval>,
}

impl PStateTree {
    pub fn pstates(&self) -> &[PState] {
        &self.pstates
    }

    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| n.children.is_empty())
    }

    pub fn nodes_at(&self, level: usize) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(move |n| n.level == level)
    }

    fn pstate(&self, index: usize) -> &PState {
        self.pstates.iter().find(|p| p.index == index).expect("member of this tree")
    }

    fn is_ranked(&self) -> bool {
        self.nodes.iter().all(|n| n.interval.is_some())
    }
}

/// Groups P-states with identical descriptions at each level.
pub fn group(pstates: &[PState]) -> PStateTree {
    let mut nodes: Vec<TreeNode> = Vec::new();
    let all: Vec<usize> = {
        let mut v: Vec<usize> = pstates.iter().map(|p| p.index).collect();
        v.sort_unstable();
        v
    };
    let by_index: BTreeMap<usize, &PState> = pstates.iter().map(|p| (p.index, p)).collect();
    let n_levels = pstates.first().map_or(0, PState::n_levels);

    fn split(members: &[usize], level: usize, by_index: &BTreeMap<usize, &PState>) -> Vec<Vec<usize>> {
        let mut groups: Vec<(&LevelDescription, Vec<usize>)> = Vec::new();
        for &m in members {
            let d = by_index[&m].level(level);
            match groups.iter_mut().find(|(g, _)| *g == d) {
                Some((_, v)) => v.push(m),
                None => groups.push((d, vec![m])),
            }
        }
        groups.into_iter().map(|(_, v)| v).collect()
    }

    let top = if n_levels == 0 { Vec::new() } else { split(&all, 1, &by_index) };
    let root = if top.len() == 1 {
        nodes.push(TreeNode { level: 1, members: all, parent: None, children: Vec::new(), interval: None });
        0
    } else {
        nodes.push(TreeNode { level: 0, members: all, parent: None, children: Vec::new(), interval: None });
        for members in top {
            let id = nodes.len();
            nodes.push(TreeNode { level: 1, members, parent: Some(0), children: Vec::new(), interval: None });
            nodes[0].children.push(id);
        }
        0
    };

    let mut frontier: Vec<usize> = if nodes[root].level == 1 { vec![root] } else { nodes[root].children.clone() };
    for level in 2..=n_levels {
        let mut next = Vec::new();
        for parent in frontier {
            for members in split(&nodes[parent].members.clone(), level, &by_index) {
                let id = nodes.len();
                nodes.push(TreeNode { level, members, parent: Some(parent), children: Vec::new(), interval: None });
                nodes[parent].children.push(id);
                next.push(id);
            }
        }
        frontier = next;
    }

    PStateTree { nodes, root, pstates: pstates.to_vec(), singles: Vec::new() }
}

/// Annotates every node (and every P-state) with its evidential interval.
pub fn rank(mut tree: PStateTree, joint: &MassDistribution) -> PStateTree {
    for node in &mut tree.nodes {
        let set: ElementSet = node.members.iter().copied().collect();
        node.interval = Some(evidence::interval_of(joint, &set));
    }
    tree.singles = tree
        .pstates
        .iter()
        .map(|p| evidence::interval_of(joint, &ElementSet::from([p.index])))
        .collect();
    let nodes = &tree.nodes;
    for ps in &mut tree.pstates {
        let mut intervals = Vec::new();
        let mut at = tree.root;
        loop {
            if nodes[at].level >= 1 {
                intervals.push(nodes[at].interval.expect("ranked"));
            }
            match nodes[at].children.iter().find(|&&c| nodes[c].members.contains(&ps.index)) {
                Some(&c) => at = c,
                None => break,
            }
        }
        ps.intervals = intervals;
    }
    tree
}

fn node_order(tree: &PStateTree, a: usize, b: usize) -> Ordering {
    let (x, y) = (&tree.nodes[a], &tree.nodes[b]);
    compare_ranked(
        &x.interval.expect("ranked"),
        x.members[0],
        &y.interval.expect("ranked"),
        y.members[0],
    )
}

/// Greedy top-down descent: at each level take the best-supported child.
pub fn select_initial(tree: &PStateTree) -> Option<&PState> {
    assert!(tree.is_ranked(), "select_initial needs a ranked tree");
    let mut at = tree.root;
    while let Some(&best) = tree.nodes[at].children.iter().max_by(|&&a, &&b| node_order(tree, a, b)) {
        at = best;
    }
    // a leaf can still hold several worlds with identical detailed descriptions
    let leaf = &tree.nodes[at];
    let pos = |i: usize| tree.pstates.iter().position(|p| p.index == i).expect("member");
    leaf.members
        .iter()
        .copied()
        .max_by(|&a, &b| compare_ranked(&tree.singles[pos(a)], a, &tree.singles[pos(b)], b))
        .map(|i| tree.pstate(i))
}

/// Every P-state, best singleton interval first; ties keep index order.
pub fn descending_order(tree: &PStateTree) -> Vec<PState> {
    assert!(tree.is_ranked(), "descending_order needs a ranked tree");
    let mut order: Vec<usize> = (0..tree.pstates.len()).collect();
    order.sort_by(|&a, &b| {
        compare_ranked(&tree.singles[b], tree.pstates[b].index, &tree.singles[a], tree.pstates[a].index)
    });
    order.into_iter().map(|i| tree.pstates[i].clone()).collect()
}

/// Singleton interval of a P-state in a ranked tree.
pub fn pstate_interval(tree: &PStateTree, ps: &PState) -> Option<EvidentialInterval> {
    tree.pstates.iter().position(|p| p.index == ps.index).and_then(|i| tree.singles.get(i).copied())
}

/// Worlds whose own interval clears both configured thresholds.
pub fn eligible(tree: &PStateTree, ordered: Vec<PState>, plausibility_threshold: f64, support_threshold: f64) -> Vec<PState> {
    ordered
        .into_iter()
        .filter(|ps| {
            pstate_interval(tree, ps).is_some_and(|iv| {
                iv.plausibility >= plausibility_threshold - 1e-12 && iv.support >= support_threshold - 1e-12
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Fact;
    use crate::evidence::Proposition;

    /// P-state with explicit per-level fact lists (most abstract first).
    pub(crate) fn ps(index: usize, id: &str, levels: &[&[&str]]) -> PState {
        PState {
            id: id.into(),
            index,
            elements: BTreeMap::new(),
            levels: levels
                .iter()
                .enumerate()
                .map(|(i, facts)| LevelDescription::new(i + 1, facts.iter().map(|f| f.parse::<Fact>().unwrap())))
                .collect(),
            mass: 0.0,
            intervals: Vec::new(),
        }
    }

    fn joint(ids: &[&str], entries: &[(&[&str], f64)]) -> MassDistribution {
        let f = Arc::new(Frame::new("pstates", ids.iter().copied(), 3).unwrap());
        MassDistribution::new(
            f.clone(),
            entries.iter().map(|(l, m)| (Proposition::new(&f, l.iter().copied()).unwrap(), *m)),
        )
        .unwrap()
    }

    /// three worlds: a and b agree on levels 1-2, c only on level 1
    fn figure_one() -> Vec<PState> {
        vec![
            ps(0, "a", &[&["x"], &["ab"], &["a"]]),
            ps(1, "b", &[&["x"], &["ab"], &["b"]]),
            ps(2, "c", &[&["x"], &["c"], &["c"]]),
        ]
    }

    fn members(tree: &PStateTree, level: usize) -> Vec<Vec<usize>> {
        tree.nodes_at(level).map(|n| n.members.clone()).collect()
    }

    #[test]
    fn grouping_matches_figure_one() {
        let tree = group(&figure_one());
        assert_eq!(tree.nodes[tree.root].level, 1);
        assert_eq!(members(&tree, 1), vec![vec![0, 1, 2]]);
        assert_eq!(members(&tree, 2), vec![vec![0, 1], vec![2]]);
        assert_eq!(members(&tree, 3), vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn distinct_top_level_gets_virtual_root() {
        let worlds = vec![ps(0, "a", &[&["a"], &["a"]]), ps(1, "b", &[&["b"], &["b"]])];
        let tree = group(&worlds);
        assert_eq!(tree.nodes[tree.root].level, 0);
        assert_eq!(tree.nodes[tree.root].children.len(), 2);
        assert_eq!(tree.leaves().count(), 2);
        let single = group(&worlds[..1]);
        assert_eq!(single.nodes.len(), 2);
        assert_eq!(single.nodes[single.root].level, 1);
    }

    #[test]
    fn ranking_uses_group_propositions() {
        let tree = rank(group(&figure_one()), &joint(&["a", "b", "c"], &[(&["a"], 0.5), (&["b"], 0.3), (&["a", "b", "c"], 0.2)]));
        let root = tree.nodes[tree.root].interval.unwrap();
        assert_eq!((root.support, root.plausibility), (1.0, 1.0));
        let ab = tree.nodes_at(2).find(|n| n.members == vec![0, 1]).unwrap().interval.unwrap();
        assert!((ab.support - 0.8).abs() < 1e-12 && (ab.plausibility - 1.0).abs() < 1e-12);
        assert_eq!(select_initial(&tree).unwrap().id, "a");
        let order: Vec<String> = descending_order(&tree).into_iter().map(|p| p.id).collect();
        assert_eq!(order, ["a", "b", "c"]);
    }

    #[test]
    fn certain_world_dominates() {
        let tree = rank(group(&figure_one()), &joint(&["a", "b", "c"], &[(&["a"], 1.0)]));
        for leaf in tree.leaves() {
            let iv = leaf.interval.unwrap();
            let expect = if leaf.members == vec![0] { 1.0 } else { 0.0 };
            assert_eq!((iv.support, iv.plausibility), (expect, expect));
        }
    }

    #[test]
    fn disjunction_only_mass_orders_by_support() {
        let tree = rank(group(&figure_one()), &joint(&["a", "b", "c"], &[(&["a", "b"], 0.7), (&["c"], 0.3)]));
        let order: Vec<String> = descending_order(&tree).into_iter().map(|p| p.id).collect();
        assert_eq!(order, ["c", "a", "b"]);
    }

    #[test]
    fn equal_intervals_keep_index_order() {
        let tree = rank(group(&figure_one()), &joint(&["a", "b", "c"], &[(&["a", "b", "c"], 1.0)]));
        let order: Vec<String> = descending_order(&tree).into_iter().map(|p| p.id).collect();
        assert_eq!(order, ["a", "b", "c"]);
    }

    #[test]
    fn plausibility_breaks_support_ties_in_selection() {
        // a and b share support 0.3; only b is compatible with the {b,c} mass
        let tree = rank(
            group(&figure_one()),
            &joint(&["a", "b", "c"], &[(&["a"], 0.3), (&["b"], 0.3), (&["b", "c"], 0.4)]),
        );
        let leaves: Vec<_> = tree.nodes_at(3).map(|n| n.interval.unwrap()).collect();
        assert!((leaves[0].support - leaves[1].support).abs() < 1e-12);
        assert!(leaves[1].plausibility > leaves[0].plausibility);
        assert_eq!(select_initial(&tree).unwrap().id, "b");
        assert_eq!(descending_order(&tree)[0].id, "b");
    }

    #[test]
    fn greedy_selection_can_differ_from_global_order() {
        // {a,b} holds 0.5 jointly, but c alone (0.45) beats either of a or b
        let tree = rank(group(&figure_one()), &joint(&["a", "b", "c"], &[(&["a"], 0.25), (&["b"], 0.25), (&["c"], 0.45), (&["a", "b", "c"], 0.05)]));
        assert_eq!(select_initial(&tree).unwrap().id, "a");
        assert_eq!(descending_order(&tree)[0].id, "c");
    }

    #[test]
    fn pstate_intervals_follow_tree_path() {
        let tree = rank(group(&figure_one()), &joint(&["a", "b", "c"], &[(&["a"], 0.5), (&["b"], 0.3), (&["a", "b", "c"], 0.2)]));
        let a = &tree.pstates()[0];
        assert_eq!(a.intervals.len(), 3);
        assert!((a.intervals[1].support - 0.8).abs() < 1e-12);
        assert!((a.intervals[2].support - 0.5).abs() < 1e-12);
    }
}
