//! Synthetic benchmark scenarios: evidence that yields a chosen number of
//! worlds over a domain's detailed frames, and timed runs of all three
//! planner configurations on it.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::domain::DomainSpec;
use crate::evidence::{EvidenceError, Frame, MassDistribution, Proposition};
use crate::pipeline::{self, PipelineError, Prepared};
use crate::worlds::{self, WorldsError};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("no way to pick {count} worlds from frames of sizes {sizes:?}")]
    Unreachable { count: usize, sizes: Vec<usize> },
    #[error("overlap factor {0} is outside [0, 1]")]
    Overlap(f64),
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
    #[error(transparent)]
    Worlds(#[from] WorldsError),
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub pstate_count: usize,
    pub evidence: Vec<MassDistribution>,
    /// chosen elements per detailed frame, in frame order
    pub chosen: Vec<Vec<String>>,
}

/// Orders a frame's elements so that those sharing an abstraction come first
/// (`share`) or so that consecutive elements abstract differently.
fn element_order(domain: &DomainSpec, frame: &Frame, share: bool) -> Vec<usize> {
    let parent = |e: usize| {
        domain
            .compat
            .iter()
            .find(|r| r.lower().id() == frame.id())
            .and_then(|r| r.pairs().iter().find(|&&(l, _)| l == e).map(|&(_, u)| u))
            .unwrap_or(0)
    };
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for e in 0..frame.len() {
        let p = parent(e);
        match groups.iter_mut().find(|(q, _)| *q == p) {
            Some((_, g)) => g.push(e),
            None => groups.push((p, vec![e])),
        }
    }
    if share {
        return groups.into_iter().flat_map(|(_, g)| g).collect();
    }
    let longest = groups.iter().map(|(_, g)| g.len()).max().unwrap_or(0);
    (0..longest).flat_map(|i| groups.iter().filter_map(move |(_, g)| g.get(i).copied())).collect()
}

/// Every way to pick `count` as a product of per-frame element counts.
fn factorizations(sizes: &[usize], count: usize) -> Vec<Vec<usize>> {
    fn go(sizes: &[usize], left: usize, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let Some((&size, rest)) = sizes.split_first() else {
            if left == 1 {
                out.push(acc.clone());
            }
            return;
        };
        for k in (1..=size.min(left)).filter(|k| left.is_multiple_of(*k)) {
            acc.push(k);
            go(rest, left / k, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    go(sizes, count, &mut Vec::new(), &mut out);
    out
}

fn distribution(frame: &Arc<Frame>, chosen: &[usize], rng: Option<&mut ChaCha8Rng>) -> Result<MassDistribution, EvidenceError> {
    let single = |e: usize| Proposition::from_indices(frame, [e]);
    if chosen.len() == 1 {
        return MassDistribution::new(frame.clone(), [(single(chosen[0])?, 1.0)]);
    }
    let (weights, either): (Vec<f64>, f64) = match rng {
        Some(rng) => (chosen.iter().map(|_| rng.random_range(0.5..1.5)).collect(), rng.random_range(0.05..0.2)),
        None => (vec![1.0; chosen.len()], 0.1),
    };
    let total: f64 = weights.iter().sum();
    let mut entries = chosen
        .iter()
        .zip(&weights)
        .map(|(&e, w)| Ok((single(e)?, (1.0 - either) * w / total)))
        .collect::<Result<Vec<_>, EvidenceError>>()?;
    entries.push((Proposition::from_indices(frame, chosen.iter().copied())?, either));
    MassDistribution::new(frame.clone(), entries)
}

/// Evidence over `domain`'s detailed frames producing exactly `count` worlds.
///
/// Candidates are every split of `count` across the frames, each with
/// elements taken sharing-first or diversity-first. They are sorted by how
/// many distinct descriptions the worlds have one level up; `overlap` 1
/// picks the most shared candidate and 0 the most distinct. `seed` only
/// drives the mass values.
pub fn synthesize(domain: &DomainSpec, count: usize, overlap: f64, seed: u64) -> Result<Scenario, ScenarioError> {
    if !(0.0..=1.0).contains(&overlap) {
        return Err(ScenarioError::Overlap(overlap));
    }
    let frames: Vec<Arc<Frame>> = domain.evidence_frames().cloned().collect();
    let sizes: Vec<usize> = frames.iter().map(|f| f.len()).collect();
    let splits = factorizations(&sizes, count);
    if splits.is_empty() {
        return Err(ScenarioError::Unreachable { count, sizes });
    }
    let up = domain.n_levels().saturating_sub(1).max(1);
    let mut candidates: Vec<(usize, Vec<Vec<usize>>)> = Vec::new();
    for split in &splits {
        for share in [true, false] {
            let chosen: Vec<Vec<usize>> = frames
                .iter()
                .zip(split)
                .map(|(f, &k)| element_order(domain, f, share).into_iter().take(k).collect())
                .collect();
            if candidates.iter().any(|(_, c)| *c == chosen) {
                continue;
            }
            let evidence = frames
                .iter()
                .zip(&chosen)
                .map(|(f, c)| distribution(f, c, None))
                .collect::<Result<Vec<_>, _>>()?;
            let generated = worlds::generate_pstates(&evidence, domain)?;
            let distinct: BTreeSet<_> = generated.pstates.iter().map(|p| p.level(up).facts.clone()).collect();
            candidates.push((distinct.len(), chosen));
        }
    }
    // stable: equal counts keep enumeration order
    candidates.sort_by_key(|(d, _)| *d);
    let at = ((1.0 - overlap) * (candidates.len() - 1) as f64).round() as usize;
    let chosen = candidates.swap_remove(at).1;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(count as u64);
    let evidence = frames
        .iter()
        .zip(&chosen)
        .map(|(f, c)| distribution(f, c, Some(&mut rng)))
        .collect::<Result<Vec<_>, _>>()?;
    let chosen = frames
        .iter()
        .zip(chosen)
        .map(|(f, c)| c.into_iter().map(|e| f.elements()[e].clone()).collect())
        .collect();
    Ok(Scenario { pstate_count: count, evidence, chosen })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timing {
    /// CPU time of the planning thread, minimum over this many runs
    Cpu { repetitions: usize },
    /// report zero times (for byte-stable output)
    Off,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub pstate_count: usize,
    pub uplan_plans: usize,
    pub cplan_plans: usize,
    pub uplan_cpu: Duration,
    pub uplan_heuristic_cpu: Duration,
    pub cplan_cpu: Duration,
    pub plain_attempts: usize,
    pub heuristic_attempts: usize,
    /// worlds some configuration could not plan for
    pub failures: usize,
}

/// Runs plain U-Plan, U-Plan with the screen, and C-Plan on one thread.
///
/// Repetitions interleave the three configurations so drift in machine
/// speed hits them alike; each time is the minimum over repetitions.
pub fn measure(domain: &DomainSpec, scenario: &Scenario, timing: Timing) -> Result<Measurement, PipelineError> {
    let prepared: Prepared = pipeline::prepare(domain, &scenario.evidence)?;
    let runs = match timing {
        Timing::Cpu { repetitions } => repetitions.max(1),
        Timing::Off => 1,
    };
    let plain = pipeline::uplan(&prepared, domain, false)?;
    let screened = pipeline::uplan(&prepared, domain, true)?;
    let control = pipeline::cplan(&prepared, domain, false)?;
    let (mut plain_cpu, mut screened_cpu, mut control_cpu) = (plain.cpu, screened.cpu, control.cpu);
    for _ in 1..runs {
        plain_cpu = plain_cpu.min(pipeline::uplan(&prepared, domain, false)?.cpu);
        screened_cpu = screened_cpu.min(pipeline::uplan(&prepared, domain, true)?.cpu);
        control_cpu = control_cpu.min(pipeline::cplan(&prepared, domain, false)?.cpu);
    }
    let zero = |d: Duration| if timing == Timing::Off { Duration::ZERO } else { d };
    let failures = plain.run.failures.len() + control.entries.iter().filter(|e| e.plan.is_err()).count();
    Ok(Measurement {
        pstate_count: prepared.order.len(),
        uplan_plans: plain.run.plans.len(),
        cplan_plans: control.entries.iter().filter(|e| e.plan.is_ok()).count(),
        uplan_cpu: zero(plain_cpu),
        uplan_heuristic_cpu: zero(screened_cpu),
        cplan_cpu: zero(control_cpu),
        plain_attempts: plain.run.stats.reapply_attempts,
        heuristic_attempts: screened.run.stats.reapply_attempts,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::load_domain;
    use crate::fixtures::{AIR_COMBAT, WORST_CASE};

    #[test]
    fn factorizations_cover_products() {
        let f = factorizations(&[6, 3, 4, 1], 12);
        assert!(f.contains(&vec![6, 2, 1, 1]));
        assert!(f.contains(&vec![1, 3, 4, 1]));
        assert!(f.iter().all(|s| s.iter().product::<usize>() == 12));
        assert!(factorizations(&[2, 2], 5).is_empty());
    }

    #[test]
    fn element_orders() {
        let d = load_domain(AIR_COMBAT).unwrap();
        let range = d.frame("range").unwrap();
        assert_eq!(element_order(&d, range, true), [0, 1, 2, 3, 4, 5]);
        assert_eq!(element_order(&d, range, false), [0, 3, 1, 4, 2, 5]);
    }

    #[test]
    fn hits_requested_counts() {
        let d = load_domain(AIR_COMBAT).unwrap();
        for count in 1..=12 {
            for overlap in [0.0, 0.5, 1.0] {
                match synthesize(&d, count, overlap, 7) {
                    Ok(s) => {
                        let w = worlds::generate_pstates(&s.evidence, &d).unwrap();
                        assert_eq!(w.pstates.len(), count);
                    }
                    Err(ScenarioError::Unreachable { .. }) => assert!([7, 11].contains(&count)),
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }

    #[test]
    fn seed_changes_masses_only() {
        let d = load_domain(AIR_COMBAT).unwrap();
        let a = synthesize(&d, 8, 0.5, 1).unwrap();
        let b = synthesize(&d, 8, 0.5, 2).unwrap();
        assert_eq!(a.chosen, b.chosen);
        assert_ne!(a.evidence, b.evidence);
        assert_eq!(a.evidence, synthesize(&d, 8, 0.5, 1).unwrap().evidence);
    }

    #[test]
    fn worst_case_gets_no_reuse() {
        let d = load_domain(WORST_CASE).unwrap();
        let s = synthesize(&d, 6, 0.5, 3).unwrap();
        let m = measure(&d, &s, Timing::Off).unwrap();
        assert_eq!((m.uplan_plans, m.cplan_plans), (6, 6));
        assert_eq!(m.heuristic_attempts, 0);
        assert_eq!(m.uplan_cpu, Duration::ZERO);
    }
}
