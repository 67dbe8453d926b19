//! Domain file loader.
//!
//! Domains are TOML documents with the top-level sections `frames`,
//! `compat`, `mappings`, `templates`, `operators`, `causal`, `ka`,
//! `incompat`, `config` and `evidence` (plus `name` and `goal`). Unknown keys
//! are rejected. Every semantic problem is collected into one itemized list
//! with the line of the offending entry. See `docs/domain-format.md`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::Range;
use std::sync::Arc;

use serde::Deserialize;
use toml::Spanned;

use super::logic::{Atom, Fact, Literal};
use super::*;
use crate::evidence::{CompatibilityRelation, Frame, MassDistribution, Proposition};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    name: Option<String>,
    goal: Spanned<String>,
    config: ConfigDoc,
    frames: Vec<FrameDoc>,
    #[serde(default)]
    compat: Vec<CompatDoc>,
    #[serde(default)]
    mappings: Vec<MappingDoc>,
    templates: BTreeMap<String, BTreeMap<String, Vec<String>>>,
    operators: Vec<OperatorDoc>,
    #[serde(default)]
    causal: Vec<CausalDoc>,
    #[serde(default)]
    ka: Vec<KaDoc>,
    #[serde(default)]
    incompat: Vec<IncompatDoc>,
    #[serde(default)]
    evidence: BTreeMap<Spanned<String>, BTreeMap<String, f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    levels: Spanned<usize>,
    #[serde(default)]
    plausibility_threshold: f64,
    #[serde(default)]
    support_threshold: f64,
    #[serde(default)]
    offsets: Vec<f64>,
    #[serde(default)]
    partial_plan_policy: PolicyDoc,
    #[serde(default)]
    ka_tradeoff: TradeoffDoc,
    #[serde(default = "default_helper_depth")]
    helper_depth: usize,
    #[serde(default = "default_causal_cap")]
    causal_cap: usize,
}

fn default_helper_depth() -> usize {
    2
}

fn default_causal_cap() -> usize {
    100
}

#[derive(Deserialize, Default, Clone, Copy)]
#[serde(rename_all = "kebab-case")]
enum PolicyDoc {
    #[default]
    MaxExpectedFulfilment,
    MaxSupport,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TradeoffDoc {
    #[serde(default = "default_cutoff")]
    belief_cutoff: f64,
    #[serde(default = "default_ceiling")]
    cost_ceiling: f64,
}

fn default_cutoff() -> f64 {
    0.9
}

fn default_ceiling() -> f64 {
    f64::INFINITY
}

impl Default for TradeoffDoc {
    fn default() -> Self {
        TradeoffDoc { belief_cutoff: default_cutoff(), cost_ceiling: default_ceiling() }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameDoc {
    name: Spanned<String>,
    level: usize,
    elements: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CompatDoc {
    lower: Spanned<String>,
    upper: Spanned<String>,
    pairs: Vec<(String, String)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MappingDoc {
    from_level: Spanned<usize>,
    rules: Vec<MappingRuleDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MappingRuleDoc {
    #[serde(rename = "match")]
    pattern: Spanned<String>,
    emit: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OperatorDoc {
    name: Spanned<String>,
    level: usize,
    necessary: Vec<String>,
    satisfiable: Vec<String>,
    plot: PlotDoc,
    probability: ProbabilityDoc,
    post: Vec<String>,
    planfail: PlanFailDoc,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PlotDoc {
    Reduce(Vec<PlotEntryDoc>),
    Change(ChangeDoc),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlotEntryDoc {
    op: String,
    fulfilment: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChangeDoc {
    #[serde(default)]
    add: Vec<String>,
    #[serde(default)]
    delete: Vec<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ProbabilityDoc {
    Constant(f64),
    Table(ProbabilityTableDoc),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbabilityTableDoc {
    default: f64,
    #[serde(default)]
    rules: Vec<ProbabilityRuleDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbabilityRuleDoc {
    when: Vec<String>,
    p: f64,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(rename_all = "kebab-case")]
enum PlanFailDoc {
    Backtrack,
    RejectBranch,
    Abort,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CausalDoc {
    name: Spanned<String>,
    trigger: String,
    #[serde(default)]
    on: TriggerDoc,
    #[serde(default)]
    condition: Vec<String>,
    #[serde(default)]
    add: Vec<String>,
    #[serde(default)]
    delete: Vec<String>,
}

#[derive(Deserialize, Default, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum TriggerDoc {
    #[default]
    Added,
    Deleted,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KaDoc {
    name: Spanned<String>,
    frame: String,
    partition: Vec<Vec<String>>,
    cost: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IncompatDoc {
    fact: Spanned<String>,
    operator: String,
}

struct Lines {
    starts: Vec<usize>,
}

impl Lines {
    fn new(text: &str) -> Self {
        let starts = std::iter::once(0).chain(text.match_indices('\n').map(|(i, _)| i + 1)).collect();
        Lines { starts }
    }

    fn line(&self, span: Range<usize>) -> usize {
        self.starts.partition_point(|&s| s <= span.start)
    }
}

struct Issues<'a> {
    lines: &'a Lines,
    list: Vec<ValidationIssue>,
}

impl Issues<'_> {
    fn at<T>(&mut self, spanned: &Spanned<T>, message: impl Into<String>) {
        let line = self.lines.line(spanned.span());
        self.list.push(ValidationIssue { line: Some(line), message: message.into() });
    }

    fn general(&mut self, message: impl Into<String>) {
        self.list.push(ValidationIssue { line: None, message: message.into() });
    }
}

/// Parses and fully validates a domain document.
pub fn load_domain(text: &str) -> Result<DomainSpec, DomainError> {
    let lines = Lines::new(text);
    let doc: Document = toml::from_str(text).map_err(|e| DomainError::Syntax {
        line: e.span().map(|s| lines.line(s)),
        message: e.to_string().trim_end().to_string(),
    })?;
    let mut issues = Issues { lines: &lines, list: Vec::new() };
    let domain = build(doc, &mut issues);
    if issues.list.is_empty() {
        Ok(domain)
    } else {
        Err(DomainError::Invalid(issues.list))
    }
}

fn parse_all<T: std::str::FromStr<Err = logic::SyntaxError>>(
    items: &[String],
    anchor: &Spanned<String>,
    what: &str,
    issues: &mut Issues,
) -> Vec<T> {
    items
        .iter()
        .filter_map(|s| match s.parse() {
            Ok(v) => Some(v),
            Err(e) => {
                issues.at(anchor, format!("{what} `{}`: {e}", anchor.get_ref()));
                None
            }
        })
        .collect()
}

fn unit_interval(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

fn build(doc: Document, issues: &mut Issues) -> DomainSpec {
    let levels = *doc.config.levels.get_ref();
    if levels == 0 {
        issues.at(&doc.config.levels, "config.levels must be at least 1");
    }
    let config = build_config(&doc.config, issues);

    let frames = build_frames(&doc.frames, levels, issues);
    let frame_map: HashMap<&str, &Arc<Frame>> = frames.iter().map(|f| (f.id(), f)).collect();

    let templates = build_templates(&doc.templates, &frames, issues);
    let mappings = build_mappings(&doc.mappings, levels, issues);
    let compat = build_compat(&doc.compat, &frame_map, issues);
    cross_check_mappings(&compat, &templates, &mappings, issues);
    check_template_mappings(&frames, &templates, &mappings, issues);

    let operators = build_operators(&doc.operators, levels, issues);
    check_operator_graph(&doc.operators, &operators, levels, issues);
    let causal_rules = build_causal(&doc.causal, issues);
    check_reachable_mappings(&operators, &causal_rules, &mappings, levels, issues);

    let goal = doc.goal.get_ref().clone();
    match operators.iter().find(|o| o.name == goal) {
        None => issues.at(&doc.goal, format!("goal operator `{goal}` is not defined")),
        Some(op) if op.level != 1 => issues.at(&doc.goal, format!("goal operator `{goal}` must be level 1")),
        Some(_) => {}
    }

    let ka_operators = build_ka(&doc.ka, &frame_map, issues);
    let incompatibilities = doc
        .incompat
        .iter()
        .filter_map(|inc| {
            if !operators.iter().any(|o| o.name == inc.operator) {
                issues.at(&inc.fact, format!("incompatibility names unknown operator `{}`", inc.operator));
            }
            match inc.fact.get_ref().parse::<Atom>() {
                Ok(pattern) => Some(Incompatibility { pattern, operator: inc.operator.clone() }),
                Err(e) => {
                    issues.at(&inc.fact, format!("incompatibility fact: {e}"));
                    None
                }
            }
        })
        .collect::<Vec<_>>();
    check_static_incompat(&doc.incompat, &incompatibilities, &operators, &causal_rules, &mappings, levels, issues);
    let evidence = build_evidence(&doc.evidence, &frame_map, levels, issues);

    DomainSpec::assemble(
        doc.name.unwrap_or_else(|| "unnamed".to_string()),
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
    )
}

fn build_config(doc: &ConfigDoc, issues: &mut Issues) -> Config {
    let anchor = &doc.levels;
    for (key, value) in [
        ("plausibility_threshold", doc.plausibility_threshold),
        ("support_threshold", doc.support_threshold),
        ("ka_tradeoff.belief_cutoff", doc.ka_tradeoff.belief_cutoff),
    ] {
        if !unit_interval(value) {
            issues.at(anchor, format!("config.{key} = {value} is outside [0, 1]"));
        }
    }
    if doc.offsets.iter().any(|o| !(*o >= 0.0)) {
        issues.at(anchor, "config.offsets must be nonnegative");
    }
    if !(doc.ka_tradeoff.cost_ceiling >= 0.0) {
        issues.at(anchor, "config.ka_tradeoff.cost_ceiling must be nonnegative");
    }
    if doc.causal_cap == 0 {
        issues.at(anchor, "config.causal_cap must be at least 1");
    }
    Config {
        n_levels: *doc.levels.get_ref(),
        plausibility_threshold: doc.plausibility_threshold,
        support_threshold: doc.support_threshold,
        offsets: doc.offsets.clone(),
        partial_plan_policy: match doc.partial_plan_policy {
            PolicyDoc::MaxExpectedFulfilment => PartialPlanPolicy::MaxExpectedFulfilment,
            PolicyDoc::MaxSupport => PartialPlanPolicy::MaxSupport,
        },
        ka_tradeoff: KaTradeoff {
            belief_cutoff: doc.ka_tradeoff.belief_cutoff,
            cost_ceiling: doc.ka_tradeoff.cost_ceiling,
        },
        helper_depth: doc.helper_depth,
        causal_cap: doc.causal_cap,
    }
}

fn build_frames(docs: &[FrameDoc], levels: usize, issues: &mut Issues) -> Vec<Arc<Frame>> {
    let mut seen = BTreeSet::new();
    let mut frames = Vec::new();
    for doc in docs {
        let name = doc.name.get_ref();
        if !seen.insert(name.clone()) {
            issues.at(&doc.name, format!("frame `{name}` declared twice"));
            continue;
        }
        if doc.level == 0 || doc.level > levels {
            issues.at(&doc.name, format!("frame `{name}` has level {} outside 1..={levels}", doc.level));
        }
        match Frame::new(name.clone(), doc.elements.iter().cloned(), doc.level) {
            Ok(f) => frames.push(Arc::new(f)),
            Err(e) => issues.at(&doc.name, e.to_string()),
        }
    }
    frames
}

fn build_templates(
    docs: &BTreeMap<String, BTreeMap<String, Vec<String>>>,
    frames: &[Arc<Frame>],
    issues: &mut Issues,
) -> BTreeMap<(String, String), Vec<Fact>> {
    let mut out = BTreeMap::new();
    for (frame_id, entries) in docs {
        let Some(frame) = frames.iter().find(|f| f.id() == frame_id) else {
            issues.general(format!("templates given for unknown frame `{frame_id}`"));
            continue;
        };
        for (element, facts) in entries {
            if frame.index_of(element).is_err() {
                issues.general(format!("templates.{frame_id}: unknown element `{element}`"));
                continue;
            }
            let parsed: Vec<Fact> = facts
                .iter()
                .filter_map(|f| match f.parse() {
                    Ok(fact) => Some(fact),
                    Err(e) => {
                        issues.general(format!("templates.{frame_id}.{element}: {e}"));
                        None
                    }
                })
                .collect();
            out.insert((frame_id.clone(), element.clone()), parsed);
        }
    }
    for frame in frames {
        for element in frame.elements() {
            if out.get(&(frame.id().to_string(), element.clone())).is_none_or(Vec::is_empty) {
                issues.general(format!("element `{element}` of frame `{}` has no fact template", frame.id()));
            }
        }
    }
    out
}

fn build_mappings(docs: &[MappingDoc], levels: usize, issues: &mut Issues) -> BTreeMap<usize, Vec<MappingRule>> {
    let mut out: BTreeMap<usize, Vec<MappingRule>> = BTreeMap::new();
    for doc in docs {
        let from = *doc.from_level.get_ref();
        if from < 2 || from > levels {
            issues.at(&doc.from_level, format!("mappings.from_level {from} outside 2..={levels}"));
            continue;
        }
        for rule in &doc.rules {
            let pattern = match rule.pattern.get_ref().parse::<Atom>() {
                Ok(p) => p,
                Err(e) => {
                    issues.at(&rule.pattern, format!("mapping pattern: {e}"));
                    continue;
                }
            };
            let emit: Vec<Atom> = parse_all(&rule.emit, &rule.pattern, "mapping output for", issues);
            let bound: BTreeSet<&str> = pattern.vars().collect();
            for atom in &emit {
                if let Some(v) = atom.vars().find(|v| !bound.contains(v)) {
                    issues.at(&rule.pattern, format!("mapping output `{atom}` uses unbound ?{v}"));
                }
            }
            out.entry(from).or_default().push(MappingRule { pattern, emit });
        }
    }
    out
}

fn build_compat(
    docs: &[CompatDoc],
    frames: &HashMap<&str, &Arc<Frame>>,
    issues: &mut Issues,
) -> Vec<CompatibilityRelation> {
    let mut out = Vec::new();
    for doc in docs {
        let lookup = |name: &Spanned<String>, issues: &mut Issues| {
            let found = frames.get(name.get_ref().as_str()).map(|f| (*f).clone());
            if found.is_none() {
                issues.at(name, format!("compatibility relation names unknown frame `{}`", name.get_ref()));
            }
            found
        };
        let (Some(lower), Some(upper)) = (lookup(&doc.lower, issues), lookup(&doc.upper, issues)) else {
            continue;
        };
        if lower.level() != upper.level() + 1 {
            issues.at(
                &doc.lower,
                format!(
                    "compatibility relation {}->{} must link adjacent levels (found {} and {})",
                    lower.id(),
                    upper.id(),
                    lower.level(),
                    upper.level()
                ),
            );
            continue;
        }
        match CompatibilityRelation::new(lower, upper, doc.pairs.iter().map(|(l, u)| (l.as_str(), u.as_str()))) {
            Ok(rel) => out.push(rel),
            Err(e) => issues.at(&doc.lower, e.to_string()),
        }
    }
    out
}

fn map_facts(facts: &[Fact], rules: &[MappingRule]) -> Option<BTreeSet<Fact>> {
    let mut out = BTreeSet::new();
    for fact in facts {
        let (rule, b) = rules.iter().find_map(|r| r.pattern.match_fact(fact, &Bindings::new()).map(|b| (r, b)))?;
        for t in &rule.emit {
            out.insert(t.ground(&b).ok()?);
        }
    }
    Some(out)
}

/// Each mapped element's image must agree with the declared compatibility relation.
fn cross_check_mappings(
    compat: &[CompatibilityRelation],
    templates: &BTreeMap<(String, String), Vec<Fact>>,
    mappings: &BTreeMap<usize, Vec<MappingRule>>,
    issues: &mut Issues,
) {
    let template = |f: &Frame, e: &str| templates.get(&(f.id().to_string(), e.to_string())).cloned().unwrap_or_default();
    for rel in compat {
        let (lower, upper) = (rel.lower(), rel.upper());
        let rules = mappings.get(&lower.level()).map_or(&[][..], Vec::as_slice);
        for (li, le) in lower.elements().iter().enumerate() {
            let Some(image) = map_facts(&template(lower, le), rules) else {
                continue; // reported by check_template_mappings
            };
            let mut hit = false;
            for (ui, ue) in upper.elements().iter().enumerate() {
                let t = template(upper, ue);
                if !t.is_empty() && t.iter().all(|f| image.contains(f)) {
                    hit = true;
                    if !rel.compatible(li, ui) {
                        issues.general(format!(
                            "mapping sends `{}.{le}` to `{}.{ue}` but the compatibility relation does not pair them",
                            lower.id(),
                            upper.id()
                        ));
                    }
                }
            }
            if !hit {
                issues.general(format!(
                    "mapping of `{}.{le}` yields no element of frame `{}`",
                    lower.id(),
                    upper.id()
                ));
            }
        }
    }
}

fn check_template_mappings(
    frames: &[Arc<Frame>],
    templates: &BTreeMap<(String, String), Vec<Fact>>,
    mappings: &BTreeMap<usize, Vec<MappingRule>>,
    issues: &mut Issues,
) {
    for frame in frames.iter().filter(|f| f.level() >= 2) {
        let rules = mappings.get(&frame.level()).map_or(&[][..], Vec::as_slice);
        for element in frame.elements() {
            for fact in templates.get(&(frame.id().to_string(), element.clone())).into_iter().flatten() {
                if !rules.iter().any(|r| r.pattern.match_fact(fact, &Bindings::new()).is_some()) {
                    issues.general(format!(
                        "template fact `{fact}` of `{}.{element}` has no level-{} mapping function",
                        frame.id(),
                        frame.level()
                    ));
                }
            }
        }
    }
}

fn build_operators(docs: &[OperatorDoc], levels: usize, issues: &mut Issues) -> Vec<ReductionOperator> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for doc in docs {
        let name = doc.name.get_ref().clone();
        if !seen.insert(name.clone()) {
            issues.at(&doc.name, format!("operator `{name}` declared twice"));
            continue;
        }
        if doc.level == 0 || doc.level > levels {
            issues.at(&doc.name, format!("operator `{name}` has level {} outside 1..={levels}", doc.level));
        }
        let necessary: Vec<Literal> = parse_all(&doc.necessary, &doc.name, "necessary precondition of", issues);
        let satisfiable: Vec<Literal> = parse_all(&doc.satisfiable, &doc.name, "satisfiable precondition of", issues);
        let post: Vec<Atom> = parse_all(&doc.post, &doc.name, "postcondition of", issues);
        let plot = match &doc.plot {
            PlotDoc::Reduce(entries) => {
                if doc.level == levels {
                    issues.at(&doc.name, format!("operator `{name}` is on the most detailed level and needs plot.add/plot.delete"));
                }
                Plot::Reduce(
                    entries
                        .iter()
                        .map(|e| {
                            if !unit_interval(e.fulfilment) {
                                issues.at(&doc.name, format!("fulfilment {} of `{}` is outside [0, 1]", e.fulfilment, e.op));
                            }
                            PlotEntry { child: e.op.clone(), fulfilment: e.fulfilment }
                        })
                        .collect(),
                )
            }
            PlotDoc::Change(change) => {
                if doc.level != levels {
                    issues.at(&doc.name, format!("operator `{name}` is above the most detailed level and needs a plot of reductions"));
                }
                let add: Vec<Atom> = parse_all(&change.add, &doc.name, "plot.add of", issues);
                let delete: Vec<Atom> = parse_all(&change.delete, &doc.name, "plot.delete of", issues);
                let bound: BTreeSet<&str> = necessary
                    .iter()
                    .chain(&satisfiable)
                    .filter(|l| l.positive)
                    .flat_map(|l| l.atom.vars())
                    .collect();
                for atom in add.iter().chain(&delete) {
                    if let Some(v) = atom.vars().find(|v| !bound.contains(v)) {
                        issues.at(&doc.name, format!("operator `{name}`: `{atom}` uses ?{v}, not bound by a positive precondition"));
                    }
                }
                Plot::Change(StateChange { add, delete })
            }
        };
        let probability = match &doc.probability {
            ProbabilityDoc::Constant(p) => ProbabilityFunction::constant(*p),
            ProbabilityDoc::Table(t) => ProbabilityFunction {
                default: t.default,
                rules: t
                    .rules
                    .iter()
                    .map(|r| ProbabilityRule {
                        when: parse_all(&r.when, &doc.name, "probability condition of", issues),
                        probability: r.p,
                    })
                    .collect(),
            },
        };
        let probs = std::iter::once(probability.default).chain(probability.rules.iter().map(|r| r.probability));
        if probs.into_iter().any(|p| !unit_interval(p)) {
            issues.at(&doc.name, format!("operator `{name}` has a probability outside [0, 1]"));
        }
        out.push(ReductionOperator {
            name,
            level: doc.level,
            necessary,
            satisfiable,
            plot,
            probability,
            post,
            planfail: match doc.planfail {
                PlanFailDoc::Backtrack => PlanFail::Backtrack,
                PlanFailDoc::RejectBranch => PlanFail::RejectBranch,
                PlanFailDoc::Abort => PlanFail::Abort,
            },
        });
    }
    out
}

fn check_operator_graph(docs: &[OperatorDoc], operators: &[ReductionOperator], levels: usize, issues: &mut Issues) {
    let by_name: HashMap<&str, &ReductionOperator> = operators.iter().map(|o| (o.name.as_str(), o)).collect();
    for doc in docs {
        let Some(op) = by_name.get(doc.name.get_ref().as_str()) else { continue };
        let PlotDoc::Reduce(entries) = &doc.plot else { continue };
        for entry in entries {
            match by_name.get(entry.op.as_str()) {
                None => issues.at(
                    &doc.name,
                    format!("operator `{}` plot references missing operator `{}`", op.name, entry.op),
                ),
                Some(child) if child.level != op.level + 1 && op.level < levels => issues.at(
                    &doc.name,
                    format!(
                        "plot entry `{}` (level {}) of `{}` (level {}) must be one level down",
                        child.name, child.level, op.name, op.level
                    ),
                ),
                Some(_) => {}
            }
        }
    }

    // cycle search over plot edges, reported with the cycle path
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    fn visit<'a>(
        name: &'a str,
        by_name: &HashMap<&str, &'a ReductionOperator>,
        marks: &mut HashMap<&'a str, Mark>,
        path: &mut Vec<&'a str>,
        cycles: &mut Vec<String>,
    ) {
        match marks.get(name).copied().unwrap_or(Mark::New) {
            Mark::Done => return,
            Mark::Active => {
                let start = path.iter().position(|n| *n == name).unwrap_or(0);
                let mut cycle: Vec<&str> = path[start..].to_vec();
                cycle.push(name);
                cycles.push(cycle.join(" -> "));
                return;
            }
            Mark::New => {}
        }
        marks.insert(name, Mark::Active);
        path.push(name);
        if let Some(op) = by_name.get(name) {
            for entry in op.plot_entries() {
                if let Some(child) = by_name.get(entry.child.as_str()) {
                    visit(&child.name, by_name, marks, path, cycles);
                }
            }
        }
        path.pop();
        marks.insert(name, Mark::Done);
    }
    let mut marks = HashMap::new();
    let mut cycles = Vec::new();
    for op in operators {
        visit(&op.name, &by_name, &mut marks, &mut Vec::new(), &mut cycles);
    }
    for cycle in cycles {
        issues.general(format!("cyclic plot graph: {cycle}"));
    }
}

fn build_causal(docs: &[CausalDoc], issues: &mut Issues) -> Vec<CausalRule> {
    docs.iter()
        .filter_map(|doc| {
            let trigger = match doc.trigger.parse::<Atom>() {
                Ok(t) => t,
                Err(e) => {
                    issues.at(&doc.name, format!("causal rule `{}` trigger: {e}", doc.name.get_ref()));
                    return None;
                }
            };
            let condition: Vec<Literal> = parse_all(&doc.condition, &doc.name, "condition of causal rule", issues);
            let add: Vec<Atom> = parse_all(&doc.add, &doc.name, "add effect of causal rule", issues);
            let delete: Vec<Atom> = parse_all(&doc.delete, &doc.name, "delete effect of causal rule", issues);
            if let Some(a) = add.iter().find(|a| delete.contains(a)) {
                issues.at(&doc.name, format!("causal rule `{}` both adds and deletes `{a}`", doc.name.get_ref()));
            }
            let bound: BTreeSet<&str> = trigger
                .vars()
                .chain(condition.iter().filter(|l| l.positive).flat_map(|l| l.atom.vars()))
                .collect();
            for atom in add.iter().chain(&delete) {
                if let Some(v) = atom.vars().find(|v| !bound.contains(v)) {
                    issues.at(&doc.name, format!("causal rule `{}`: `{atom}` uses unbound ?{v}", doc.name.get_ref()));
                }
            }
            Some(CausalRule {
                name: doc.name.get_ref().clone(),
                trigger,
                on: match doc.on {
                    TriggerDoc::Added => TriggerEvent::Added,
                    TriggerDoc::Deleted => TriggerEvent::Deleted,
                },
                condition,
                add,
                delete,
            })
        })
        .collect()
}

/// Facts that actions can introduce must be mappable all the way up.
fn check_reachable_mappings(
    operators: &[ReductionOperator],
    rules: &[CausalRule],
    mappings: &BTreeMap<usize, Vec<MappingRule>>,
    levels: usize,
    issues: &mut Issues,
) {
    if levels < 2 {
        return;
    }
    let covered = |atom: &Atom, level: usize| {
        mappings.get(&level).is_some_and(|rs| rs.iter().any(|r| r.pattern.unifies_with(atom)))
    };
    let produced = operators
        .iter()
        .filter_map(|op| match &op.plot {
            Plot::Change(c) => Some((op.name.as_str(), &c.add)),
            Plot::Reduce(_) => None,
        })
        .chain(rules.iter().map(|r| (r.name.as_str(), &r.add)));
    for (owner, atoms) in produced {
        for atom in atoms {
            if !covered(atom, levels) {
                issues.general(format!("`{owner}` can add `{atom}`, which has no level-{levels} mapping function"));
            }
        }
    }
    for (&from, rs) in mappings {
        if from - 1 < 2 {
            continue;
        }
        for rule in rs {
            for atom in &rule.emit {
                if !covered(atom, from - 1) {
                    issues.general(format!(
                        "mapping output `{atom}` (level {}) has no level-{} mapping function",
                        from - 1,
                        from - 1
                    ));
                }
            }
        }
    }
}

/// Incompatibilities are judged against a world before any step runs, so
/// their facts must be ones no action or causal rule can add or delete.
fn check_static_incompat(
    docs: &[IncompatDoc],
    incompat: &[Incompatibility],
    operators: &[ReductionOperator],
    rules: &[CausalRule],
    mappings: &BTreeMap<usize, Vec<MappingRule>>,
    levels: usize,
    issues: &mut Issues,
) {
    if incompat.is_empty() || levels == 0 {
        return;
    }
    // atoms that may change, per level, starting at the lowest
    let mut dynamic: Vec<Vec<Atom>> = vec![Vec::new(); levels + 1];
    for op in operators {
        if let Plot::Change(c) = &op.plot {
            dynamic[levels].extend(c.add.iter().chain(&c.delete).cloned());
        }
    }
    for r in rules {
        dynamic[levels].extend(r.add.iter().chain(&r.delete).cloned());
    }
    for level in (2..=levels).rev() {
        let emitted: Vec<Atom> = mappings
            .get(&level)
            .into_iter()
            .flatten()
            .filter(|m| dynamic[level].iter().any(|a| m.pattern.unifies_with(a)))
            .flat_map(|m| m.emit.iter().cloned())
            .collect();
        dynamic[level - 1].extend(emitted);
    }
    let named: Vec<_> = docs.iter().filter(|d| d.fact.get_ref().parse::<Atom>().is_ok()).collect();
    for (inc, doc) in incompat.iter().zip(named) {
        let Some(op) = operators.iter().find(|o| o.name == inc.operator) else { continue };
        if let Some(a) = dynamic.get(op.level).and_then(|d| d.iter().find(|a| inc.pattern.unifies_with(a))) {
            issues.at(
                &doc.fact,
                format!("incompatibility fact `{}` for `{}` can change during a plan (via `{a}`)", inc.pattern, inc.operator),
            );
        }
    }
}

fn build_ka(
    docs: &[KaDoc],
    frames: &HashMap<&str, &Arc<Frame>>,
    issues: &mut Issues,
) -> Vec<KnowledgeAcquisitionOperator> {
    let mut out = Vec::new();
    for doc in docs {
        let name = doc.name.get_ref();
        let Some(frame) = frames.get(doc.frame.as_str()) else {
            issues.at(&doc.name, format!("knowledge-acquisition operator `{name}` names unknown frame `{}`", doc.frame));
            continue;
        };
        if !(doc.cost >= 0.0 && doc.cost.is_finite()) {
            issues.at(&doc.name, format!("knowledge-acquisition operator `{name}` needs a finite nonnegative cost"));
        }
        let mut partition = Vec::new();
        let mut used = BTreeSet::new();
        for cell in &doc.partition {
            let mut indices = ElementSet::new();
            for label in cell {
                match frame.index_of(label) {
                    Ok(i) if !used.insert(i) => {
                        issues.at(&doc.name, format!("`{name}`: element `{label}` appears in two partition cells"))
                    }
                    Ok(i) => {
                        indices.insert(i);
                    }
                    Err(e) => issues.at(&doc.name, e.to_string()),
                }
            }
            if cell.is_empty() {
                issues.at(&doc.name, format!("`{name}` has an empty partition cell"));
            }
            partition.push(indices);
        }
        if partition.len() < 2 {
            issues.at(&doc.name, format!("`{name}` must discriminate at least two cells"));
        }
        out.push(KnowledgeAcquisitionOperator { name: name.clone(), frame: (*frame).clone(), partition, cost: doc.cost });
    }
    out
}

fn build_evidence(
    docs: &BTreeMap<Spanned<String>, BTreeMap<String, f64>>,
    frames: &HashMap<&str, &Arc<Frame>>,
    levels: usize,
    issues: &mut Issues,
) -> Vec<MassDistribution> {
    let mut out = Vec::new();
    for (key, masses) in docs {
        let Some(frame) = frames.get(key.get_ref().as_str()) else {
            issues.at(key, format!("evidence for unknown frame `{}`", key.get_ref()));
            continue;
        };
        if frame.level() != levels {
            issues.at(key, format!("evidence frame `{}` must be on the most detailed level {levels}", frame.id()));
        }
        let mut entries = Vec::new();
        for (set, mass) in masses {
            let prop = if set.trim() == "*" {
                Ok(frame.theta())
            } else {
                Proposition::new(frame, set.split('|').map(str::trim))
            };
            match prop {
                Ok(p) => entries.push((p, *mass)),
                Err(e) => issues.at(key, e.to_string()),
            }
        }
        match MassDistribution::new((*frame).clone(), entries) {
            Ok(m) => out.push(m),
            Err(e) => issues.at(key, e.to_string()),
        }
    }
    out
}
