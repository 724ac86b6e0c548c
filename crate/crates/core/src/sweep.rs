//! Seeded randomized sweeps over the core invariants.
//!
//! Every instance draws from its own generator, derived from the sweep seed,
//! the sweep kind and the instance index, so results do not depend on how the
//! instances are scheduled across threads.

use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::info::{decompose_information, render_real, serialize_extended, Distribution, JointDistribution};
use crate::markov::{data_processing_check, second_law_audit, second_law_audit_with, Channel, Reference, MONOTONE_SLACK};
use crate::thermo::{check_szilard_landauer, gibbs_distribution, EnergyLandscape, DEFAULT_IDENTITY_TOLERANCE};

pub const DEFAULT_SEED: u64 = 0xC0FFEE;
pub const DEFAULT_INSTANCES: usize = 10_000;
pub const DEFAULT_MAX_STATES: usize = 32;
pub const DEFAULT_AUDIT_STEPS: usize = 100;
pub const DECOMPOSITION_TOLERANCE: f64 = 1e-12;
pub const MAX_FACTOR_STATES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    Identity,
    Decomposition,
    Dpi,
    Monotonicity,
}

impl SweepKind {
    pub const ALL: [SweepKind; 4] = [
        SweepKind::Identity,
        SweepKind::Decomposition,
        SweepKind::Dpi,
        SweepKind::Monotonicity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Identity => "identity",
            SweepKind::Decomposition => "decomposition",
            SweepKind::Dpi => "dpi",
            SweepKind::Monotonicity => "monotonicity",
        }
    }

    fn stream(self) -> u64 {
        self as u64 + 1
    }
}

/// The generator for one instance of one sweep.
pub fn instance_rng(seed: u64, kind: SweepKind, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((kind.stream() << 48) | index as u64);
    rng
}

/// A random point of the simplex. Some draws are sparse or degenerate.
pub fn random_distribution<R: Rng>(rng: &mut R, n: usize) -> Distribution {
    let style = rng.gen_range(0..10);
    if n > 1 && style == 0 {
        return Distribution::degenerate(n, rng.gen_range(0..n)).expect("index in range");
    }
    let sparse = style == 1;
    let mut w: Vec<f64> = (0..n)
        .map(|_| {
            if sparse && rng.gen_bool(0.5) {
                0.0
            } else {
                -(1.0 - rng.gen::<f64>()).ln()
            }
        })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.gen_range(0..n)] = 1.0;
    }
    let total: f64 = w.iter().sum();
    Distribution::new(w.into_iter().map(|x| x / total).collect()).expect("normalized weights")
}

/// Energies uniform in [-10, 10], temperature uniform in [0.1, 10], `k_B = 1`.
pub fn random_landscape<R: Rng>(rng: &mut R, n: usize) -> EnergyLandscape {
    let energies = (0..n).map(|_| rng.gen_range(-10.0..=10.0)).collect();
    let temperature = rng.gen_range(0.1..=10.0);
    EnergyLandscape::new(energies, temperature, 1.0).expect("valid landscape")
}

/// A random row-stochastic matrix. Most are dense and not in detailed balance;
/// some are sparse, some are Metropolis chains for a random target.
pub fn random_channel<R: Rng>(rng: &mut R, n: usize) -> Channel {
    match rng.gen_range(0..8) {
        0 => metropolis_channel(rng, n),
        1 => {
            let rows = (0..n)
                .map(|_| {
                    let mut row = vec![0.0; n];
                    for _ in 0..rng.gen_range(1..=3) {
                        row[rng.gen_range(0..n)] += rng.gen::<f64>() + 0.1;
                    }
                    let total: f64 = row.iter().sum();
                    row.iter_mut().for_each(|x| *x /= total);
                    row
                })
                .collect();
            Channel::from_rows(rows).expect("stochastic rows")
        }
        _ => {
            let rows = (0..n).map(|_| random_distribution(rng, n).probs().to_vec()).collect();
            Channel::from_rows(rows).expect("stochastic rows")
        }
    }
}

fn metropolis_channel<R: Rng>(rng: &mut R, n: usize) -> Channel {
    let target: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 0.05).collect();
    let proposal = 1.0 / n as f64;
    let rows = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n)
                .map(|j| if i == j { 0.0 } else { proposal * (target[j] / target[i]).min(1.0) })
                .collect();
            row[i] = 1.0 - row.iter().sum::<f64>();
            row
        })
        .collect();
    Channel::from_rows(rows).expect("stochastic rows")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SweepConfig {
    pub instances: usize,
    /// Upper bound on the number of states; factors of a joint system are capped at 8.
    pub max_states: usize,
    pub seed: u64,
    pub audit_steps: usize,
    /// Replaces the first monotonicity instance with a chain audited against a
    /// reference it does not preserve. The sweep must then fail.
    pub inject_fault: bool,
}

impl SweepConfig {
    pub fn new(instances: usize, max_states: usize, seed: u64) -> Self {
        SweepConfig {
            instances,
            max_states: max_states.max(1),
            seed,
            audit_steps: DEFAULT_AUDIT_STEPS,
            inject_fault: false,
        }
    }
}

/// Pass counts and the worst observed value for one property.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub property: String,
    pub checked: usize,
    pub passed: usize,
    pub failed: usize,
    /// Largest residual or violation seen, in the property's own units.
    #[serde(serialize_with = "serialize_extended")]
    pub worst: f64,
    pub tolerance: String,
    pub first_failure: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub seed: u64,
    pub instances: usize,
    pub max_states: usize,
    pub audit_steps: usize,
    pub fault_injected: bool,
    pub properties: Vec<PropertyResult>,
    pub passed: bool,
}

struct Outcome {
    values: Vec<(f64, bool)>,
}

fn tally(property: &str, tolerance: &str, outcomes: &[(f64, bool)]) -> PropertyResult {
    let failed = outcomes.iter().filter(|(_, ok)| !ok).count();
    PropertyResult {
        property: property.to_owned(),
        checked: outcomes.len(),
        passed: outcomes.len() - failed,
        failed,
        worst: outcomes.iter().map(|(v, _)| *v).fold(0.0, f64::max),
        tolerance: tolerance.to_owned(),
        first_failure: outcomes.iter().position(|(_, ok)| !ok),
    }
}

fn run_parallel<F>(count: usize, f: F) -> Result<Vec<Outcome>>
where
    F: Fn(usize) -> Result<Outcome> + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}

fn column(outcomes: &[Outcome], k: usize) -> Vec<(f64, bool)> {
    outcomes.iter().map(|o| o.values[k]).collect()
}

/// Identity residual, the `F(π) = -kT log Z` residual, Gibbs optimality and the
/// equality case `p = π`. Residuals are relative to `max(1, |F(p)|)`.
pub fn identity_instance(seed: u64, index: usize, max_states: usize) -> Result<[(f64, bool); 4]> {
    let mut rng = instance_rng(seed, SweepKind::Identity, index);
    let n = rng.gen_range(1..=max_states.clamp(1, 64));
    let landscape = random_landscape(&mut rng, n);
    let p = random_distribution(&mut rng, n);
    let report = check_szilard_landauer(&landscape, &p)?;
    let tol = DEFAULT_IDENTITY_TOLERANCE;
    let identity = report.residual / report.scale;
    let gibbs = report.gibbs_residual / report.scale;
    let deficit = (-report.available / report.scale).max(0.0);
    let at_gibbs = check_szilard_landauer(&landscape, &gibbs_distribution(&landscape))?;
    let equality = at_gibbs.residual.max(at_gibbs.available.abs());
    Ok([
        (identity, identity <= tol),
        (gibbs, gibbs <= tol),
        (deficit, deficit <= tol),
        (equality, equality < tol),
    ])
}

/// Decomposition residual on a random joint of up to 8x8 states.
pub fn decomposition_instance(seed: u64, index: usize, max_states: usize) -> Result<(f64, bool)> {
    let mut rng = instance_rng(seed, SweepKind::Decomposition, index);
    let cap = max_states.clamp(1, MAX_FACTOR_STATES);
    let (r, c) = (rng.gen_range(1..=cap), rng.gen_range(1..=cap));
    let joint = JointDistribution::from_flat(r, c, &random_distribution(&mut rng, r * c))?;
    let pi1 = positive_distribution(&mut rng, r);
    let pi2 = positive_distribution(&mut rng, c);
    let residual = decompose_information(&joint, &pi1, &pi2)?.residual().abs();
    Ok((residual, residual <= DECOMPOSITION_TOLERANCE))
}

fn positive_distribution<R: Rng>(rng: &mut R, n: usize) -> Distribution {
    let w: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 0.01).collect();
    let total: f64 = w.iter().sum();
    Distribution::new(w.into_iter().map(|x| x / total).collect()).expect("normalized weights")
}

/// `D(pK || qK) - D(p || q)`, clamped below at 0.
pub fn dpi_instance(seed: u64, index: usize, max_states: usize) -> Result<(f64, bool)> {
    let mut rng = instance_rng(seed, SweepKind::Dpi, index);
    let n = rng.gen_range(1..=max_states.max(1));
    let p = random_distribution(&mut rng, n);
    let q = random_distribution(&mut rng, n);
    let k = random_channel(&mut rng, n);
    let check = data_processing_check(&p, &q, &k)?;
    let increase = if check.before.is_finite() {
        (check.after.nats() - check.before.nats()).max(0.0)
    } else {
        0.0
    };
    Ok((increase, check.ok))
}

/// Largest one-step increase of `D(p_t || π)` over a random chain.
pub fn monotonicity_instance(seed: u64, index: usize, max_states: usize, steps: usize) -> Result<(f64, bool)> {
    let mut rng = instance_rng(seed, SweepKind::Monotonicity, index);
    let n = rng.gen_range(1..=max_states.max(1));
    let k = random_channel(&mut rng, n);
    let p0 = random_distribution(&mut rng, n);
    let verdict = second_law_audit(&p0, &k, steps.max(1))?;
    if !verdict.stationary_found {
        return Ok((f64::INFINITY, false));
    }
    Ok((verdict.max_violation, verdict.monotone))
}

fn faulty_instance(steps: usize) -> Result<(f64, bool)> {
    let erase = Channel::deterministic(&[0, 0])?;
    let half = Distribution::uniform(2)?;
    let verdict = second_law_audit_with(&half, &erase, steps.max(1), &Reference::Given(half.clone()), MONOTONE_SLACK)?;
    Ok((verdict.max_violation, verdict.monotone))
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepSummary> {
    let SweepConfig {
        instances,
        max_states,
        seed,
        audit_steps,
        inject_fault,
    } = *cfg;

    let identity = run_parallel(instances, |i| {
        Ok(Outcome {
            values: identity_instance(seed, i, max_states)?.to_vec(),
        })
    })?;
    let decomposition = run_parallel(instances, |i| {
        Ok(Outcome {
            values: vec![decomposition_instance(seed, i, max_states)?],
        })
    })?;
    let dpi = run_parallel(instances, |i| {
        Ok(Outcome {
            values: vec![dpi_instance(seed, i, max_states)?],
        })
    })?;
    let monotone = run_parallel(instances, |i| {
        let v = if inject_fault && i == 0 {
            faulty_instance(audit_steps)?
        } else {
            monotonicity_instance(seed, i, max_states, audit_steps)?
        };
        Ok(Outcome { values: vec![v] })
    })?;

    let tol = format!("{DEFAULT_IDENTITY_TOLERANCE:e} * max(1, |F(p)|)");
    let properties = vec![
        tally("identity", &tol, &column(&identity, 0)),
        tally("gibbs-free-energy", &tol, &column(&identity, 1)),
        tally("gibbs-optimality", &tol, &column(&identity, 2)),
        tally("equality-at-gibbs", &format!("{DEFAULT_IDENTITY_TOLERANCE:e}"), &column(&identity, 3)),
        tally("decomposition", &format!("{DECOMPOSITION_TOLERANCE:e}"), &column(&decomposition, 0)),
        tally("dpi", &format!("{:e}", crate::markov::DPI_SLACK), &column(&dpi, 0)),
        tally("monotonicity", &format!("{MONOTONE_SLACK:e}"), &column(&monotone, 0)),
    ];
    Ok(SweepSummary {
        seed,
        instances,
        max_states,
        audit_steps,
        fault_injected: inject_fault,
        passed: properties.iter().all(|p| p.failed == 0),
        properties,
    })
}

impl SweepSummary {
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "sweep seed={:#x} instances={} max_states={} audit_steps={}{}\n",
            self.seed,
            self.instances,
            self.max_states,
            self.audit_steps,
            if self.fault_injected { " (fault injected)" } else { "" }
        );
        writeln!(out, "{:<20} {:>8} {:>8} {:>24}  tolerance", "property", "passed", "failed", "worst").unwrap();
        for p in &self.properties {
            writeln!(
                out,
                "{:<20} {:>8} {:>8} {:>24}  {}",
                p.property,
                p.passed,
                p.failed,
                render_real(p.worst),
                p.tolerance
            )
            .unwrap();
        }
        writeln!(out, "result: {}", if self.passed { "pass" } else { "FAIL" }).unwrap();
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("property,checked,passed,failed,worst,tolerance\n");
        for p in &self.properties {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                p.property,
                p.checked,
                p.passed,
                p.failed,
                render_real(p.worst),
                p.tolerance
            )
            .unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_streams_are_independent_of_order() {
        let a: Vec<u64> = (0..4).map(|i| instance_rng(7, SweepKind::Dpi, i).gen()).collect();
        let b: Vec<u64> = (0..4).rev().map(|i| instance_rng(7, SweepKind::Dpi, i).gen()).collect();
        assert_eq!(a, b.into_iter().rev().collect::<Vec<_>>());
        assert_ne!(a[0], a[1]);
        let other: u64 = instance_rng(7, SweepKind::Identity, 0).gen();
        assert_ne!(a[0], other);
    }

    #[test]
    fn generators_stay_on_the_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..20 {
            let p = random_distribution(&mut rng, n);
            assert_eq!(p.len(), n);
            let k = random_channel(&mut rng, n);
            for i in 0..n {
                let s: f64 = k.row(i).iter().sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn small_sweep_passes_and_is_deterministic() {
        let cfg = SweepConfig::new(200, 12, 42);
        let a = run_sweep(&cfg).unwrap();
        assert!(a.passed, "{}", a.to_table());
        assert_eq!(a, run_sweep(&cfg).unwrap());
        assert_eq!(a.properties.len(), 7);
        assert!(a.properties.iter().all(|p| p.checked == 200));
    }

    #[test]
    fn injected_fault_fails_monotonicity_only() {
        let cfg = SweepConfig {
            inject_fault: true,
            ..SweepConfig::new(20, 6, 42)
        };
        let s = run_sweep(&cfg).unwrap();
        assert!(!s.passed);
        let failing: Vec<_> = s.properties.iter().filter(|p| p.failed > 0).collect();
        assert_eq!(failing.len(), 1);
        assert_eq!(failing[0].property, "monotonicity");
        assert_eq!(failing[0].first_failure, Some(0));
        assert!((failing[0].worst - std::f64::consts::LN_2).abs() < 1e-15);
    }
}
