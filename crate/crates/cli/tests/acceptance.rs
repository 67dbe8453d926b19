//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use worldplan_cli::{cmd_bench, cmd_plan, run_bench, BenchArgs, Mode, PlanArgs, TimingMode};
use worldplan_core::domain::eval_probability;
use worldplan_core::evidence::{interval, plausibility, support};
use worldplan_core::planner::{EventKind, NodeRole, StrategyHierarchy};
use worldplan_core::reuse::{heuristic_screen, reapply, ReapplyKind, Screen};
use worldplan_core::superplan::{insert_ka, leaf_sequences, merge, plan_mass, Continuation, Decision};
use worldplan_core::validate::validate_works_for;
use worldplan_core::{
    fixtures, load_domain, pipeline, planner, scenario, DomainSpec, Frame, LinearPlan, MassDistribution, Proposition,
};

type Outcome = Result<String, String>;

fn ensure(ok: bool, why: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(why())
    }
}

fn domain(text: &str) -> DomainSpec {
    load_domain(text).expect("bundled domain loads")
}

/// Fixture evidence plus seeded synthetic scenarios over every bundled domain.
fn world_sets() -> Vec<(String, DomainSpec, Vec<MassDistribution>)> {
    let mut sets = Vec::new();
    for (name, text) in [("air-combat", fixtures::AIR_COMBAT), ("tea", fixtures::TUTORIAL), ("lock", fixtures::WORST_CASE)] {
        let d = domain(text);
        sets.push((format!("{name}/fixture"), d.clone(), d.evidence.clone()));
        for count in [1, 2, 3, 4, 5, 6, 8, 9, 10, 12] {
            for (k, overlap) in [0.0, 0.5, 1.0].into_iter().enumerate() {
                let seed = 1000 + count as u64 * 7 + k as u64;
                if let Ok(s) = scenario::synthesize(&d, count, overlap, seed) {
                    sets.push((format!("{name}/n{count}/o{overlap}"), d.clone(), s.evidence));
                }
            }
        }
    }
    sets
}

// 1 ------------------------------------------------------------------------

fn ds_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=5usize);
        let full = (1u32 << n) - 1;
        let raw: Vec<(u32, f64)> = (0..rng.random_range(1..8)).map(|_| (rng.random_range(1..=full), rng.random_range(0.01..1.0))).collect();
        let total: f64 = raw.iter().map(|(_, w)| w).sum();
        let focal: Vec<(u32, f64)> = raw.iter().map(|&(s, w)| (s, w / total)).collect();
        let frame = Arc::new(Frame::new("f", (0..n).map(|i| format!("e{i}")), 1).unwrap());
        let bits = |mask: u32| (0..n).filter(move |i| mask & (1 << i) != 0);
        let entries: Vec<(Proposition, f64)> =
            focal.iter().map(|&(s, m)| (Proposition::from_indices(&frame, bits(s)).unwrap(), m)).collect();
        let m = MassDistribution::new(frame.clone(), entries).map_err(|e| e.to_string())?;
        for a in 1..=full {
            let spt: f64 = focal.iter().filter(|(b, _)| b & !a == 0).map(|(_, w)| w).sum();
            let pls: f64 = focal.iter().filter(|(b, _)| b & a != 0).map(|(_, w)| w).sum();
            let prop = Proposition::from_indices(&frame, bits(a)).unwrap();
            let iv = interval(&m, &prop).map_err(|e| e.to_string())?;
            for err in [
                support(&m, &prop).unwrap() - spt,
                plausibility(&m, &prop).unwrap() - pls,
                iv.support - spt,
                iv.plausibility - pls,
            ] {
                worst = worst.max(err.abs());
            }
            checked += 1;
        }
    }
    let took = start.elapsed();
    ensure(worst <= 1e-9, || format!("max error {worst:e}"))?;
    ensure(took < Duration::from_secs(10), || format!("took {took:?}"))?;
    Ok(format!("1000 distributions, {checked} propositions, max error {worst:e}, {took:.2?}"))
}

// 2 ------------------------------------------------------------------------

fn plan_validity() -> Outcome {
    let mut checked = 0;
    for (name, d, evidence) in world_sets() {
        let p = pipeline::prepare(&d, &evidence).map_err(|e| format!("{name}: {e}"))?;
        let mut plans: Vec<LinearPlan> = Vec::new();
        for ps in &p.order {
            plans.extend(planner::plan(ps, &d).map_err(|e| e.to_string())?.plan.ok());
        }
        let c = planner::cplan_all(&p.order, &d).map_err(|e| e.to_string())?;
        plans.extend(c.into_iter().filter_map(|e| e.plan.ok()));
        for heuristic in [false, true] {
            let run = worldplan_core::plan_all(&p.order, &d, &p.worlds.joint, heuristic).map_err(|e| e.to_string())?;
            ensure(run.failures.is_empty(), || format!("{name}: {} worlds unplanned", run.failures.len()))?;
            plans.extend(run.plans);
        }
        for plan in &plans {
            validate_works_for(plan, &p.order, &d).map_err(|(w, e)| format!("{name}: {} on {w}: {e}", plan.name()))?;
            checked += plan.works_for.len();
        }
    }
    Ok(format!("{checked} (plan, world) pairs replayed, all valid"))
}

// 3 ------------------------------------------------------------------------

fn heuristic_soundness() -> Outcome {
    let (mut screened, mut pairs) = (0, 0);
    let mut violations = Vec::new();
    for (name, d, evidence) in world_sets() {
        let p = pipeline::prepare(&d, &evidence).map_err(|e| e.to_string())?;
        let mut plans: Vec<LinearPlan> = planner::cplan_all(&p.order, &d).map_err(|e| e.to_string())?.into_iter().filter_map(|e| e.plan.ok()).collect();
        plans.extend(worldplan_core::plan_all(&p.order, &d, &p.worlds.joint, false).map_err(|e| e.to_string())?.plans);
        for plan in &plans {
            for ps in &p.order {
                pairs += 1;
                if heuristic_screen(plan, ps, &d.incompatibilities) == Screen::CannotWork {
                    screened += 1;
                    if reapply(plan, ps, &d).map_err(|e| e.to_string())?.kind == ReapplyKind::Full {
                        violations.push(format!("{name}: {} on {}", plan.name(), ps.id));
                    }
                }
            }
        }
    }
    ensure(violations.is_empty(), || format!("{} violations, e.g. {}", violations.len(), violations[0]))?;
    Ok(format!("{pairs} pairs, {screened} screened out, 0 fully reapplicable"))
}

// 4 ------------------------------------------------------------------------

fn plan_counts() -> Outcome {
    let start = Instant::now();
    let mut rows = 0;
    let (mut strict, mut upper) = (0, 0);
    for overlap in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let args = BenchArgs { overlap, timing: TimingMode::Off, ..BenchArgs::default() };
        for m in run_bench(&args).map_err(|e| e.to_string())? {
            rows += 1;
            ensure(m.failures == 0 && m.cplan_plans == m.pstate_count, || format!("overlap {overlap}: unplanned worlds"))?;
            ensure(m.uplan_plans <= m.cplan_plans, || {
                format!("overlap {overlap}, {} worlds: uplan {} > cplan {}", m.pstate_count, m.uplan_plans, m.cplan_plans)
            })?;
            if overlap >= 0.5 {
                upper += 1;
                strict += usize::from(m.uplan_plans < m.cplan_plans);
            }
        }
    }
    ensure(2 * strict >= upper, || format!("strictly fewer plans in only {strict} of {upper} rows at overlap >= 0.5"))?;
    let worst = BenchArgs { worst_case: true, timing: TimingMode::Off, ..BenchArgs::default() };
    for m in run_bench(&worst).map_err(|e| e.to_string())? {
        ensure(m.uplan_plans == m.cplan_plans && m.cplan_plans == m.pstate_count, || {
            format!("worst case, {} worlds: uplan {} cplan {}", m.pstate_count, m.uplan_plans, m.cplan_plans)
        })?;
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(60), || format!("took {took:?}"))?;
    Ok(format!("{rows} rows uplan <= cplan, strict in {strict}/{upper} at overlap >= 0.5, worst case equal, {took:.2?}"))
}

// 5 ------------------------------------------------------------------------

fn heuristic_time() -> Outcome {
    let mut compared = Vec::new();
    let mut slower = Vec::new();
    for worst_case in [false, true] {
        let args = BenchArgs { worst_case, repetitions: 25, ..BenchArgs::default() };
        for m in run_bench(&args).map_err(|e| e.to_string())? {
            if m.plain_attempts < 10 {
                continue;
            }
            let label = format!(
                "{}{}: {:?} vs {:?} ({} vs {} reapplications)",
                if worst_case { "lock" } else { "air" },
                m.pstate_count,
                m.uplan_heuristic_cpu,
                m.uplan_cpu,
                m.heuristic_attempts,
                m.plain_attempts
            );
            if m.uplan_heuristic_cpu > m.uplan_cpu {
                slower.push(label.clone());
            }
            compared.push(label);
        }
    }
    ensure(!compared.is_empty(), || "no row with 10 or more reapplications".into())?;
    ensure(slower.is_empty(), || format!("screened run slower in: {}", slower.join("; ")))?;
    Ok(format!("{} rows, screened <= plain in all: {}", compared.len(), compared.join("; ")))
}

// 6 ------------------------------------------------------------------------

fn superplan_round_trip() -> Outcome {
    let mut merged = 0;
    for (name, d, evidence) in world_sets() {
        let p = pipeline::prepare(&d, &evidence).map_err(|e| e.to_string())?;
        let u = pipeline::uplan(&p, &d, true).map_err(|e| e.to_string())?;
        let c: Vec<LinearPlan> = planner::cplan_all(&p.order, &d).map_err(|e| e.to_string())?.into_iter().filter_map(|e| e.plan.ok()).collect();
        for plans in [&u.run.plans, &c] {
            let sp = merge(plans, &p.worlds.joint);
            let mut leaves = leaf_sequences(&sp);
            leaves.sort();
            let mut expected: Vec<(usize, Vec<String>)> = plans.iter().map(|q| (q.id, q.step_keys())).collect();
            expected.sort();
            ensure(leaves == expected, || format!("{name}: leaf sequences differ from plans"))?;
            merged += 1;
        }
    }
    // m(a) + m(b) + m(a or b), with masses exact in binary
    let frame = Arc::new(Frame::new("w", ["a", "b", "c"], 1).unwrap());
    let set = |xs: &[&str]| Proposition::new(&frame, xs.iter().copied()).unwrap();
    let joint = MassDistribution::new(
        frame.clone(),
        [(set(&["a"]), 0.25), (set(&["b"]), 0.125), (set(&["a", "b"]), 0.0625), (set(&["c"]), 0.5625)],
    )
    .map_err(|e| e.to_string())?;
    let mut plan = u_plan_with_worlds(&["a", "b"]);
    let got = plan_mass(&plan, &joint);
    ensure(got == 0.25 + 0.125 + 0.0625, || format!("m(p1) = {got}"))?;
    plan.works_for = vec!["c".into()];
    ensure(plan_mass(&plan, &joint) == 0.5625, || "m(p2) wrong".into())?;
    Ok(format!("{merged} merges round-trip; m(p1) = m(a) + m(b) + m(a or b) = {got}"))
}

fn u_plan_with_worlds(worlds: &[&str]) -> LinearPlan {
    let d = domain(fixtures::TUTORIAL);
    let p = pipeline::prepare(&d, &d.evidence).unwrap();
    let mut plan = planner::plan(&p.order[0], &d).unwrap().plan.unwrap();
    plan.works_for = worlds.iter().map(|w| w.to_string()).collect();
    plan
}

// 7 ------------------------------------------------------------------------

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let fixture = dir.path().join("air_combat.toml");
    std::fs::write(&fixture, fixtures::AIR_COMBAT).map_err(|e| e.to_string())?;
    let mut compared = 0;
    for (mode, pstates) in [(Mode::Uplan, None), (Mode::Cplan, None), (Mode::Uplan, Some(8)), (Mode::Cplan, Some(6))] {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let args = PlanArgs {
                domain: fixture.clone(),
                mode,
                no_heuristic: false,
                trace: Some(dir.path().join(format!("trace{run}.tsv"))),
                out: Some(dir.path().join(format!("out{run}.txt"))),
                pstates,
                overlap: 0.5,
                seed: 11,
            };
            cmd_plan(&args).map_err(|e| e.to_string())?;
            let read = |p: &std::path::Path| std::fs::read(p).map_err(|e| e.to_string());
            outputs.push((read(args.out.as_ref().unwrap())?, read(args.trace.as_ref().unwrap())?));
        }
        ensure(outputs[0] == outputs[1], || format!("{mode:?} {pstates:?}: outputs differ"))?;
        compared += 1;
    }
    for worst_case in [false, true] {
        let args = BenchArgs { worst_case, seed: 5, timing: TimingMode::Off, ..BenchArgs::default() };
        let (a, b) = (cmd_bench(&args).map_err(|e| e.to_string())?, cmd_bench(&args).map_err(|e| e.to_string())?);
        ensure(a == b, || "bench CSV differs between runs".into())?;
        compared += 1;
    }
    Ok(format!("{compared} command pairs byte-identical (plan text, traces, bench CSV with timing off)"))
}

// 8 ------------------------------------------------------------------------

/// Replays the trace: every plot node chosen by a select event has the
/// greatest EF among its siblings still open at that moment, and every
/// node's EF is its plot fulfilment times the operator's probability in the
/// node's world, with that world rebuilt from the parent's helper steps.
fn audit(h: &StrategyHierarchy, d: &DomainSpec) -> Result<usize, String> {
    let n = d.n_levels();
    for node in &h.nodes {
        let op = d.operator(&node.subgoal).map_err(|e| e.to_string())?;
        let fulfilment = match (node.role, node.parent) {
            (NodeRole::Plot, Some(parent)) => {
                let parent_op = d.operator(&h.nodes[parent].subgoal).map_err(|e| e.to_string())?;
                let entry = parent_op.plot_entries().iter().find(|e| e.child == node.subgoal).ok_or("plot entry missing")?;
                // the world a plot child starts from: the parent's world after its helpers
                let mut world = h.nodes[parent].snapshot.clone();
                for &c in h.nodes[parent].children.iter().filter(|&&c| h.nodes[c].role == NodeRole::Helper) {
                    for step in &h.nodes[c].steps {
                        let sop = d.operator(&step.operator).map_err(|e| e.to_string())?;
                        world = d.apply_with(sop, &world, &step.bindings).map_err(|e| e.to_string())?.pstate;
                    }
                }
                if world.levels != node.snapshot.levels {
                    return Err(format!("{}: world differs from replayed helpers", h.node_label(node.id)));
                }
                entry.fulfilment
            }
            _ => 1.0,
        };
        let at = if node.role == NodeRole::Helper { n } else { node.level };
        let probability = match node.role {
            NodeRole::Root => 1.0,
            _ => eval_probability(&op.probability, node.snapshot.level(at)),
        };
        if node.expected_fulfilment != fulfilment * probability {
            return Err(format!(
                "{}: EF {} but {fulfilment} x {probability}",
                h.node_label(node.id),
                node.expected_fulfilment
            ));
        }
    }
    let mut open: BTreeMap<usize, bool> = BTreeMap::new();
    let mut selections = 0;
    for e in &h.trace {
        if e.expected_fulfilment != h.nodes[e.node].expected_fulfilment {
            return Err(format!("trace EF for {} differs from the node", h.node_label(e.node)));
        }
        match e.kind {
            EventKind::Expand => {
                open.insert(e.node, true);
            }
            EventKind::Select if h.nodes[e.node].role == NodeRole::Plot => {
                let parent = h.nodes[e.node].parent.ok_or("plot node without parent")?;
                let ef = h.nodes[e.node].expected_fulfilment;
                for &s in &h.nodes[parent].children {
                    if open.get(&s) == Some(&true) && h.nodes[s].expected_fulfilment > ef {
                        return Err(format!("{} selected over better open {}", h.node_label(e.node), h.node_label(s)));
                    }
                }
                open.insert(e.node, false);
                selections += 1;
            }
            EventKind::Select | EventKind::Reject | EventKind::Reuse => {
                open.insert(e.node, false);
            }
            EventKind::Apply | EventKind::Revise => {}
        }
    }
    Ok(selections)
}

fn ef_audit() -> Outcome {
    let (mut traces, mut selections) = (0, 0);
    for (name, d, evidence) in world_sets() {
        let p = pipeline::prepare(&d, &evidence).map_err(|e| e.to_string())?;
        let mut hierarchies: Vec<StrategyHierarchy> =
            planner::cplan_all(&p.order, &d).map_err(|e| e.to_string())?.into_iter().map(|e| e.hierarchy).collect();
        hierarchies.extend(pipeline::uplan(&p, &d, true).map_err(|e| e.to_string())?.run.hierarchies);
        for h in &hierarchies {
            selections += audit(h, &d).map_err(|e| format!("{name}: {e}"))?;
            traces += 1;
        }
    }
    Ok(format!("{traces} traces, {selections} selections, all maximal; every EF recomputed exactly"))
}

// 9 ------------------------------------------------------------------------

fn root_decision(text: &str) -> Result<Decision, String> {
    let d = load_domain(text).map_err(|e| e.to_string())?;
    let p = pipeline::prepare(&d, &d.evidence).map_err(|e| e.to_string())?;
    let run = worldplan_core::plan_all(&p.order, &d, &p.worlds.joint, true).map_err(|e| e.to_string())?;
    let sp = insert_ka(merge(&run.plans, &p.worlds.joint), &d, &p.worlds.pstates);
    match sp.root.next {
        Continuation::Branch { decision, .. } => Ok(decision),
        Continuation::Terminal { .. } => Err("no branch at the root".into()),
    }
}

fn ka_tradeoff() -> Outcome {
    let lift = "[[ka]]\nname = \"lift_kettle\"\nframe = \"kettle\"\npartition = [[\"full\"], [\"empty\"]]\ncost = 0.0\n";
    assert!(fixtures::TUTORIAL.contains(lift));
    let free = fixtures::TUTORIAL.to_string();
    let blind = fixtures::TUTORIAL.replace(lift, "");
    let likely = fixtures::TUTORIAL
        .replace(lift, &lift.replace("cost = 0.0", "cost = 1.0"))
        .replace("full = 0.6\nempty = 0.3\n\"full|empty\" = 0.1", "full = 0.9\nempty = 0.1");
    let got = [root_decision(&free)?, root_decision(&blind)?, root_decision(&likely)?];
    let ok = matches!(&got[0], Decision::Acquire { operator, .. } if operator == "lift_kettle")
        && got[1] == Decision::SelectByMass
        && got[2] == Decision::SelectByMass;
    ensure(ok, || format!("decisions {got:?}"))?;
    Ok("free KA -> acquire lift_kettle; no discriminating KA -> select; 0.9-mass arm -> select".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("evidence oracle equivalence", ds_oracle),
        ("plan validity", plan_validity),
        ("screen soundness", heuristic_soundness),
        ("plan counts: reuse vs control", plan_counts),
        ("screened reuse time", heuristic_time),
        ("super-plan round trip and plan mass", superplan_round_trip),
        ("determinism", determinism),
        ("expected-fulfilment audit", ef_audit),
        ("knowledge-acquisition trade-off", ka_tradeoff),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("criterion {} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
