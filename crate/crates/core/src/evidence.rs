//! Dempster-Shafer evidence: frames of discernment, sparse mass
//! distributions, support/plausibility intervals and compatibility relations.
//!
//! Frames are shared behind [`Arc`] so distributions and propositions can be
//! cloned freely. Element sets are stored as sorted index sets into the
//! frame's element list.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Mass sums must hit 1 within this tolerance.
pub const MASS_TOLERANCE: f64 = 1e-9;

pub type ElementSet = BTreeSet<usize>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvidenceError {
    #[error("frame `{0}` has no elements")]
    EmptyFrame(String),
    #[error("frame `{frame}` lists element `{element}` twice")]
    DuplicateElement { frame: String, element: String },
    #[error("frame `{frame}` has no element `{element}`")]
    UnknownElement { frame: String, element: String },
    #[error("element index {index} out of range for frame `{frame}`")]
    IndexOutOfRange { frame: String, index: usize },
    #[error("empty proposition over frame `{0}`")]
    EmptyProposition(String),
    #[error("proposition over `{found}` used with distribution over `{expected}`")]
    FrameMismatch { expected: String, found: String },
    #[error("mass {mass} for {proposition} is outside (0, 1]")]
    MassOutOfRange { proposition: String, mass: f64 },
    #[error("masses over frame `{frame}` sum to {sum}, expected 1")]
    MassSum { frame: String, sum: f64 },
    #[error("no evidence sources given")]
    NoSources,
    #[error("frame `{0}` appears in more than one evidence source")]
    DuplicateFrame(String),
    #[error("compatibility relation {lower}->{upper}: element `{element}` has no compatible partner")]
    UncoveredElement { lower: String, upper: String, element: String },
    #[error("focal set {proposition} has no compatible image in frame `{target}`")]
    EmptyProjection { proposition: String, target: String },
    #[error("distribution over `{found}` cannot be projected by a relation between `{lower}` and `{upper}`")]
    RelationMismatch { found: String, lower: String, upper: String },
}

/// A set of mutually exclusive, exhaustive element labels at one abstraction level.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    id: String,
    elements: Vec<String>,
    level: usize,
    factors: Vec<Arc<Frame>>,
}

impl Frame {
    pub fn new<S: Into<String>>(
        id: impl Into<String>,
        elements: impl IntoIterator<Item = S>,
        level: usize,
    ) -> Result<Self, EvidenceError> {
        let id = id.into();
        let elements: Vec<String> = elements.into_iter().map(Into::into).collect();
        if elements.is_empty() {
            return Err(EvidenceError::EmptyFrame(id));
        }
        let mut seen = BTreeSet::new();
        for e in &elements {
            if !seen.insert(e.as_str()) {
                return Err(EvidenceError::DuplicateElement { frame: id, element: e.clone() });
            }
        }
        Ok(Frame { id, elements, level, factors: Vec::new() })
    }

    /// Cross-product of `factors`; element labels join the factor labels with `+`,
    /// ordered with the last factor varying fastest.
    pub fn product(factors: &[Arc<Frame>]) -> Result<Self, EvidenceError> {
        if factors.is_empty() {
            return Err(EvidenceError::NoSources);
        }
        let id = factors.iter().map(|f| f.id.as_str()).collect::<Vec<_>>().join("*");
        let total: usize = factors.iter().map(|f| f.len()).product();
        let elements = (0..total)
            .map(|i| {
                decode(factors, i)
                    .iter()
                    .zip(factors)
                    .map(|(&e, f)| f.elements[e].as_str())
                    .collect::<Vec<_>>()
                    .join("+")
            })
            .collect();
        Ok(Frame { id, elements, level: factors[0].level, factors: factors.to_vec() })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Component frames when this is a product frame, otherwise empty.
    pub fn factors(&self) -> &[Arc<Frame>] {
        &self.factors
    }

    /// Factor element indices of a product-frame element.
    pub fn decode(&self, index: usize) -> Vec<usize> {
        decode(&self.factors, index)
    }

    pub fn index_of(&self, label: &str) -> Result<usize, EvidenceError> {
        self.elements.iter().position(|e| e == label).ok_or_else(|| EvidenceError::UnknownElement {
            frame: self.id.clone(),
            element: label.to_string(),
        })
    }

    pub fn theta(&self) -> Proposition {
        Proposition { frame: self.id.clone(), members: (0..self.len()).collect() }
    }

    fn describe(&self, members: &ElementSet) -> String {
        if members.len() == self.len() && self.len() > 1 {
            return "*".to_string();
        }
        let labels: Vec<&str> = members.iter().map(|&i| self.elements[i].as_str()).collect();
        format!("{{{}}}", labels.join("|"))
    }
}

fn decode(factors: &[Arc<Frame>], mut index: usize) -> Vec<usize> {
    let mut out = vec![0; factors.len()];
    for (slot, f) in out.iter_mut().zip(factors).rev() {
        *slot = index % f.len();
        index /= f.len();
    }
    out
}

fn encode(factors: &[Arc<Frame>], tuple: &[usize]) -> usize {
    tuple.iter().zip(factors).fold(0, |acc, (&e, f)| acc * f.len() + e)
}

/// A nonempty disjunction of elements of one frame.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Proposition {
    frame: String,
    members: ElementSet,
}

impl Proposition {
    pub fn new<S: AsRef<str>>(frame: &Frame, labels: impl IntoIterator<Item = S>) -> Result<Self, EvidenceError> {
        let members = labels
            .into_iter()
            .map(|l| frame.index_of(l.as_ref()))
            .collect::<Result<ElementSet, _>>()?;
        Self::from_indices(frame, members)
    }

    pub fn from_indices(frame: &Frame, members: impl IntoIterator<Item = usize>) -> Result<Self, EvidenceError> {
        let members: ElementSet = members.into_iter().collect();
        if members.is_empty() {
            return Err(EvidenceError::EmptyProposition(frame.id.clone()));
        }
        if let Some(&index) = members.iter().find(|&&i| i >= frame.len()) {
            return Err(EvidenceError::IndexOutOfRange { frame: frame.id.clone(), index });
        }
        Ok(Proposition { frame: frame.id.clone(), members })
    }

    pub fn frame(&self) -> &str {
        &self.frame
    }

    pub fn members(&self) -> &ElementSet {
        &self.members
    }
}

/// Belief interval `[support, plausibility]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvidentialInterval {
    pub support: f64,
    pub plausibility: f64,
}

impl EvidentialInterval {
    pub const CERTAIN: EvidentialInterval = EvidentialInterval { support: 1.0, plausibility: 1.0 };
}

impl fmt::Display for EvidentialInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.4}, {:.4}]", self.support, self.plausibility)
    }
}

fn quantize(x: f64) -> i64 {
    (x * 1e9).round() as i64
}

/// Lexicographic interval order: higher support first, then higher plausibility.
/// `Ordering::Greater` means `x` is preferred. Values are compared on a 1e-9
/// grid so that sums accumulated in different orders still tie.
pub fn compare_intervals(x: &EvidentialInterval, y: &EvidentialInterval) -> Ordering {
    quantize(x.support)
        .cmp(&quantize(y.support))
        .then(quantize(x.plausibility).cmp(&quantize(y.plausibility)))
}

/// [`compare_intervals`] with full ties broken by a caller key; the smaller key wins.
pub fn compare_ranked<K: Ord>(x: &EvidentialInterval, x_key: K, y: &EvidentialInterval, y_key: K) -> Ordering {
    compare_intervals(x, y).then_with(|| y_key.cmp(&x_key))
}

/// Sparse basic mass assignment over one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MassDistribution {
    frame: Arc<Frame>,
    focal: BTreeMap<ElementSet, f64>,
}

impl MassDistribution {
    /// Builds a distribution; repeated propositions accumulate, zero masses are
    /// dropped, and the total must be 1 within [`MASS_TOLERANCE`].
    pub fn new(frame: Arc<Frame>, entries: impl IntoIterator<Item = (Proposition, f64)>) -> Result<Self, EvidenceError> {
        let mut focal: BTreeMap<ElementSet, f64> = BTreeMap::new();
        for (prop, mass) in entries {
            if prop.frame != frame.id {
                return Err(EvidenceError::FrameMismatch { expected: frame.id.clone(), found: prop.frame });
            }
            if !(0.0..=1.0).contains(&mass) || mass.is_nan() {
                return Err(EvidenceError::MassOutOfRange { proposition: frame.describe(&prop.members), mass });
            }
            if mass > 0.0 {
                *focal.entry(prop.members).or_insert(0.0) += mass;
            }
        }
        let sum: f64 = focal.values().sum();
        if (sum - 1.0).abs() > MASS_TOLERANCE {
            return Err(EvidenceError::MassSum { frame: frame.id.clone(), sum });
        }
        Ok(MassDistribution { frame, focal })
    }

    /// All mass on the whole frame.
    pub fn vacuous(frame: Arc<Frame>) -> Self {
        let theta = frame.theta().members;
        MassDistribution { frame, focal: BTreeMap::from([(theta, 1.0)]) }
    }

    pub fn frame(&self) -> &Arc<Frame> {
        &self.frame
    }

    pub fn focal(&self) -> impl Iterator<Item = (&ElementSet, f64)> {
        self.focal.iter().map(|(s, &m)| (s, m))
    }

    pub fn focal_count(&self) -> usize {
        self.focal.len()
    }

    pub fn total(&self) -> f64 {
        self.focal.values().sum()
    }

    /// Mass assigned directly to exactly this element set.
    pub fn mass_of(&self, members: &ElementSet) -> f64 {
        self.focal.get(members).copied().unwrap_or(0.0)
    }

    fn check(&self, a: &Proposition) -> Result<(), EvidenceError> {
        if a.frame != self.frame.id {
            return Err(EvidenceError::FrameMismatch { expected: self.frame.id.clone(), found: a.frame.clone() });
        }
        Ok(())
    }

    /// Sum of masses on focal sets contained in `members`.
    pub fn support_of(&self, members: &ElementSet) -> f64 {
        self.focal.iter().filter(|(s, _)| s.is_subset(members)).map(|(_, m)| m).sum()
    }

    /// Sum of masses on focal sets that intersect `members`; equal to
    /// `1 - support(complement)` for a valid distribution.
    pub fn plausibility_of(&self, members: &ElementSet) -> f64 {
        let complement: ElementSet = (0..self.frame.len()).filter(|i| !members.contains(i)).collect();
        1.0 - self.support_of(&complement)
    }

    /// Elements that appear in at least one focal set.
    pub fn core(&self) -> ElementSet {
        self.focal.keys().flatten().copied().collect()
    }

    pub fn describe(&self, members: &ElementSet) -> String {
        self.frame.describe(members)
    }
}

pub fn support(m: &MassDistribution, a: &Proposition) -> Result<f64, EvidenceError> {
    m.check(a)?;
    Ok(m.support_of(&a.members))
}

pub fn plausibility(m: &MassDistribution, a: &Proposition) -> Result<f64, EvidenceError> {
    m.check(a)?;
    Ok(m.plausibility_of(&a.members))
}

pub fn interval(m: &MassDistribution, a: &Proposition) -> Result<EvidentialInterval, EvidenceError> {
    m.check(a)?;
    Ok(interval_of(m, &a.members))
}

pub(crate) fn interval_of(m: &MassDistribution, members: &ElementSet) -> EvidentialInterval {
    let support = m.support_of(members);
    // rounding can leave plausibility a hair under support
    let plausibility = m.plausibility_of(members).max(support);
    EvidentialInterval { support, plausibility }
}

/// Product distribution of independent sources over distinct frames.
pub fn joint_mass(sources: &[MassDistribution]) -> Result<MassDistribution, EvidenceError> {
    if sources.is_empty() {
        return Err(EvidenceError::NoSources);
    }
    let mut seen = BTreeSet::new();
    for s in sources {
        if !seen.insert(s.frame.id.as_str()) {
            return Err(EvidenceError::DuplicateFrame(s.frame.id.clone()));
        }
    }
    let factors: Vec<Arc<Frame>> = sources.iter().map(|s| s.frame.clone()).collect();
    let frame = Arc::new(Frame::product(&factors)?);

    // running list of (per-factor focal sets, product mass)
    let mut combos: Vec<(Vec<&ElementSet>, f64)> = vec![(Vec::new(), 1.0)];
    for source in sources {
        combos = combos
            .into_iter()
            .flat_map(|(sets, mass)| {
                source.focal.iter().map(move |(s, m)| {
                    let mut sets = sets.clone();
                    sets.push(s);
                    (sets, mass * m)
                })
            })
            .collect();
    }

    let mut focal: BTreeMap<ElementSet, f64> = BTreeMap::new();
    for (sets, mass) in combos {
        let mut members = ElementSet::new();
        cross(&factors, &sets, &mut Vec::new(), &mut members);
        *focal.entry(members).or_insert(0.0) += mass;
    }
    Ok(MassDistribution { frame, focal })
}

fn cross(factors: &[Arc<Frame>], sets: &[&ElementSet], prefix: &mut Vec<usize>, out: &mut ElementSet) {
    if prefix.len() == sets.len() {
        out.insert(encode(factors, prefix));
        return;
    }
    for &e in sets[prefix.len()] {
        prefix.push(e);
        cross(factors, sets, prefix, out);
        prefix.pop();
    }
}

/// Which elements of two adjacent-level frames can hold simultaneously.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityRelation {
    lower: Arc<Frame>,
    upper: Arc<Frame>,
    pairs: BTreeSet<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// lower frame to upper frame
    Up,
    /// upper frame to lower frame
    Down,
}

impl CompatibilityRelation {
    /// Every element on both sides must appear in at least one pair. Level
    /// adjacency is checked by the domain loader, since the marginal relation
    /// of a product frame links frames on the same level.
    pub fn new<S: AsRef<str>>(
        lower: Arc<Frame>,
        upper: Arc<Frame>,
        pairs: impl IntoIterator<Item = (S, S)>,
    ) -> Result<Self, EvidenceError> {
        let pairs = pairs
            .into_iter()
            .map(|(l, u)| Ok((lower.index_of(l.as_ref())?, upper.index_of(u.as_ref())?)))
            .collect::<Result<BTreeSet<_>, EvidenceError>>()?;
        Self::from_indices(lower, upper, pairs)
    }

    pub fn from_indices(
        lower: Arc<Frame>,
        upper: Arc<Frame>,
        pairs: BTreeSet<(usize, usize)>,
    ) -> Result<Self, EvidenceError> {
        let uncovered = |frame: &Frame, covered: BTreeSet<usize>| {
            (0..frame.len()).find(|i| !covered.contains(i)).map(|i| frame.elements[i].clone())
        };
        let side = |lower_side: bool| pairs.iter().map(|&(l, u)| if lower_side { l } else { u }).collect();
        if let Some(element) = uncovered(&lower, side(true)).or_else(|| uncovered(&upper, side(false))) {
            return Err(EvidenceError::UncoveredElement {
                lower: lower.id.clone(),
                upper: upper.id.clone(),
                element,
            });
        }
        Ok(CompatibilityRelation { lower, upper, pairs })
    }

    /// The canonical relation between a product frame and one of its factors.
    pub fn marginal(product: Arc<Frame>, factor: usize) -> Result<Self, EvidenceError> {
        let target = product
            .factors
            .get(factor)
            .cloned()
            .ok_or_else(|| EvidenceError::IndexOutOfRange { frame: product.id.clone(), index: factor })?;
        let pairs = (0..product.len()).map(|i| (i, product.decode(i)[factor])).collect();
        Self::from_indices(product, target, pairs)
    }

    pub fn lower(&self) -> &Arc<Frame> {
        &self.lower
    }

    pub fn upper(&self) -> &Arc<Frame> {
        &self.upper
    }

    pub fn pairs(&self) -> &BTreeSet<(usize, usize)> {
        &self.pairs
    }

    pub fn compatible(&self, lower: usize, upper: usize) -> bool {
        self.pairs.contains(&(lower, upper))
    }

    /// Image of an element set on the opposite frame.
    pub fn image(&self, members: &ElementSet, direction: Direction) -> ElementSet {
        self.pairs
            .iter()
            .filter_map(|&(l, u)| match direction {
                Direction::Up if members.contains(&l) => Some(u),
                Direction::Down if members.contains(&u) => Some(l),
                _ => None,
            })
            .collect()
    }
}

/// Carries a distribution across a compatibility relation.
pub fn project(
    m: &MassDistribution,
    rel: &CompatibilityRelation,
    direction: Direction,
) -> Result<MassDistribution, EvidenceError> {
    let (source, target) = match direction {
        Direction::Up => (&rel.lower, &rel.upper),
        Direction::Down => (&rel.upper, &rel.lower),
    };
    if m.frame.id != source.id {
        return Err(EvidenceError::RelationMismatch {
            found: m.frame.id.clone(),
            lower: rel.lower.id.clone(),
            upper: rel.upper.id.clone(),
        });
    }
    let mut focal: BTreeMap<ElementSet, f64> = BTreeMap::new();
    for (members, mass) in &m.focal {
        let image = rel.image(members, direction);
        if image.is_empty() {
            return Err(EvidenceError::EmptyProjection {
                proposition: m.describe(members),
                target: target.id.clone(),
            });
        }
        *focal.entry(image).or_insert(0.0) += mass;
    }
    Ok(MassDistribution { frame: target.clone(), focal })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xyz() -> Arc<Frame> {
        Arc::new(Frame::new("f", ["x", "y", "z"], 1).unwrap())
    }

    fn prop(f: &Frame, labels: &[&str]) -> Proposition {
        Proposition::new(f, labels.iter().copied()).unwrap()
    }

    fn dist(f: &Arc<Frame>, entries: &[(&[&str], f64)]) -> MassDistribution {
        MassDistribution::new(f.clone(), entries.iter().map(|(l, m)| (prop(f, l), *m))).unwrap()
    }

    #[test]
    fn vacuous_belief() {
        let f = xyz();
        let m = MassDistribution::vacuous(f.clone());
        let a = prop(&f, &["x", "y"]);
        assert_eq!(support(&m, &a).unwrap(), 0.0);
        assert_eq!(plausibility(&m, &a).unwrap(), 1.0);
        let i = interval(&m, &a).unwrap();
        assert_eq!((i.support, i.plausibility), (0.0, 1.0));
    }

    #[test]
    fn certainty() {
        let f = xyz();
        let m = dist(&f, &[(&["x"], 1.0)]);
        assert_eq!(support(&m, &prop(&f, &["x"])).unwrap(), 1.0);
        assert_eq!(plausibility(&m, &prop(&f, &["y", "z"])).unwrap(), 0.0);
        let i = interval(&m, &prop(&f, &["x"])).unwrap();
        assert_eq!((i.support, i.plausibility), (1.0, 1.0));
    }

    #[test]
    fn worked_values() {
        // {x}:0.6, theta:0.4; powerset enumeration gives these by hand
        let f = xyz();
        let m = dist(&f, &[(&["x"], 0.6), (&["x", "y", "z"], 0.4)]);
        assert!((support(&m, &prop(&f, &["x", "y"])).unwrap() - 0.6).abs() < 1e-12);
        assert!((plausibility(&m, &prop(&f, &["y"])).unwrap() - 0.4).abs() < 1e-12);
        let i = interval(&m, &prop(&f, &["x"])).unwrap();
        assert!((i.support - 0.6).abs() < 1e-12 && (i.plausibility - 1.0).abs() < 1e-12);
    }

    #[test]
    fn frame_mismatch_is_rejected() {
        let f = xyz();
        let g = Frame::new("g", ["x"], 1).unwrap();
        let m = MassDistribution::vacuous(f);
        let a = Proposition::new(&g, ["x"]).unwrap();
        assert!(matches!(support(&m, &a), Err(EvidenceError::FrameMismatch { .. })));
        assert!(matches!(plausibility(&m, &a), Err(EvidenceError::FrameMismatch { .. })));
    }

    #[test]
    fn mass_sum_is_enforced_not_corrected() {
        let f = xyz();
        let err = MassDistribution::new(f.clone(), [(prop(&f, &["x"]), 0.5)]).unwrap_err();
        assert!(matches!(err, EvidenceError::MassSum { .. }));
        let err = MassDistribution::new(f.clone(), [(prop(&f, &["x"]), 1.5)]).unwrap_err();
        assert!(matches!(err, EvidenceError::MassOutOfRange { .. }));
        assert!(Proposition::new(&f, Vec::<&str>::new()).is_err());
        assert!(Proposition::new(&f, ["w"]).is_err());
    }

    #[test]
    fn interval_comparison_is_lexicographic() {
        let iv = |s, p| EvidentialInterval { support: s, plausibility: p };
        assert_eq!(compare_intervals(&iv(0.6, 0.8), &iv(0.5, 1.0)), Ordering::Greater);
        assert_eq!(compare_intervals(&iv(0.5, 0.9), &iv(0.5, 0.7)), Ordering::Greater);
        assert_eq!(compare_intervals(&iv(0.5, 0.9), &iv(0.5, 0.9)), Ordering::Equal);
        assert_eq!(compare_ranked(&iv(0.5, 0.9), 1, &iv(0.5, 0.9), 2), Ordering::Greater);
        assert_eq!(compare_intervals(&iv(0.1 + 0.2, 1.0), &iv(0.3, 1.0)), Ordering::Equal);
    }

    #[test]
    fn joint_of_single_source_is_relabelled_identity() {
        let f = xyz();
        let m = dist(&f, &[(&["x"], 0.25), (&["y", "z"], 0.75)]);
        let j = joint_mass(std::slice::from_ref(&m)).unwrap();
        assert_eq!(j.frame().elements(), f.elements());
        let got: Vec<_> = j.focal().map(|(s, m)| (s.clone(), m)).collect();
        let want: Vec<_> = m.focal().map(|(s, m)| (s.clone(), m)).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn joint_of_certainties() {
        let f1 = Arc::new(Frame::new("a", ["x", "y"], 1).unwrap());
        let f2 = Arc::new(Frame::new("b", ["u", "v"], 1).unwrap());
        let j = joint_mass(&[dist(&f1, &[(&["x"], 1.0)]), dist(&f2, &[(&["u"], 1.0)])]).unwrap();
        let xu = j.frame().index_of("x+u").unwrap();
        assert_eq!(j.focal().collect::<Vec<_>>(), vec![(&ElementSet::from([xu]), 1.0)]);
    }

    #[test]
    fn duplicate_frames_rejected() {
        let f = xyz();
        let m = MassDistribution::vacuous(f);
        assert!(matches!(joint_mass(&[m.clone(), m]), Err(EvidenceError::DuplicateFrame(_))));
        assert!(matches!(joint_mass(&[]), Err(EvidenceError::NoSources)));
    }

    #[test]
    fn projection_merges_under_abstraction() {
        let lower = Arc::new(Frame::new("l", ["l1", "l2"], 2).unwrap());
        let upper = Arc::new(Frame::new("u", ["u"], 1).unwrap());
        let rel = CompatibilityRelation::new(lower.clone(), upper.clone(), [("l1", "u"), ("l2", "u")]).unwrap();
        let m = dist(&lower, &[(&["l1"], 0.4), (&["l2"], 0.6)]);
        let p = project(&m, &rel, Direction::Up).unwrap();
        assert_eq!(p.focal().collect::<Vec<_>>(), vec![(&ElementSet::from([0]), 1.0)]);
        // back down, everything lands on the whole lower frame
        let d = project(&p, &rel, Direction::Down).unwrap();
        assert_eq!(d.focal().collect::<Vec<_>>(), vec![(&ElementSet::from([0, 1]), 1.0)]);
        assert!(project(&m, &rel, Direction::Down).is_err());
    }

    #[test]
    fn relation_must_cover_both_frames() {
        let lower = Arc::new(Frame::new("l", ["l1", "l2"], 2).unwrap());
        let upper = Arc::new(Frame::new("u", ["u1", "u2"], 1).unwrap());
        let err = CompatibilityRelation::new(lower.clone(), upper.clone(), [("l1", "u1"), ("l2", "u1")]);
        assert!(matches!(err, Err(EvidenceError::UncoveredElement { .. })));
    }
}
