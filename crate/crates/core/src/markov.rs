//! Discrete-time Markov chains on finite state spaces and the Second-Law
//! audit: relative entropy to a stationary distribution must not increase
//! along the chain, whether or not detailed balance holds.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::info::{
    normalize_within_tolerance, relative_entropy, serialize_nats, Distribution, InfoQuantity,
};
use crate::numeric::compensated_sum;

/// Successive lazy-chain iterates closer than this (max-norm) stop the search.
pub const STATIONARY_STEP_TOLERANCE: f64 = 1e-13;
/// A candidate `π` is accepted when `||πK - π||_∞` is below this.
pub const STATIONARY_VERIFY_TOLERANCE: f64 = 1e-10;
pub const STATIONARY_MAX_ITERATIONS: usize = 1_000_000;
/// Limits from different starts further apart than this raise a multiplicity warning.
pub const MULTIPLICITY_TOLERANCE: f64 = 1e-8;
pub const PERTURBED_STARTS: usize = 8;
pub const DETAILED_BALANCE_TOLERANCE: f64 = 1e-10;
/// Allowed per-step increase of `D(p_t || π)` before it counts as a violation.
pub const MONOTONE_SLACK: f64 = 1e-12;
pub const DPI_SLACK: f64 = 1e-12;

const PERTURBATION_SEED: u64 = 0x5eed_57a7_10a1;

/// A row-stochastic `n × n` transition matrix: row `i` is the next-state
/// distribution from state `i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Channel {
    size: usize,
    matrix: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl Channel {
    /// Builds a channel from rows, renormalizing rows within tolerance of 1.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        if size == 0 {
            return Err(Error::Empty);
        }
        let mut matrix = Vec::with_capacity(size * size);
        for mut row in rows {
            if row.len() != size {
                return Err(Error::Shape {
                    expected: size,
                    actual: row.len(),
                });
            }
            normalize_within_tolerance(&mut row)?;
            matrix.extend(row);
        }
        Ok(Self {
            size,
            matrix,
            labels: None,
        })
    }

    pub fn identity(size: usize) -> Result<Self> {
        Self::from_rows(
            (0..size)
                .map(|i| (0..size).map(|j| f64::from(u8::from(i == j))).collect())
                .collect(),
        )
    }

    /// Deterministic channel sending state `i` to `targets[i]`.
    pub fn deterministic(targets: &[usize]) -> Result<Self> {
        let size = targets.len();
        let mut rows = vec![vec![0.0; size]; size];
        for (i, &t) in targets.iter().enumerate() {
            if t >= size {
                return Err(Error::Shape {
                    expected: size,
                    actual: t + 1,
                });
            }
            rows[i][t] = 1.0;
        }
        Self::from_rows(rows)
    }

    /// Every row equal to `target`: one step forgets the initial state.
    pub fn constant(target: &Distribution) -> Self {
        let size = target.len();
        Self {
            size,
            matrix: target.probs().repeat(size),
            labels: None,
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.size {
            return Err(Error::Shape {
                expected: self.size,
                actual: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.matrix[i * self.size..(i + 1) * self.size]
    }

    /// `(pK)_j = sum_i p_i K_ij` without renormalization.
    pub fn push_forward(&self, p: &[f64]) -> Vec<f64> {
        (0..self.size)
            .map(|j| compensated_sum(p.iter().enumerate().map(|(i, pi)| pi * self.get(i, j))))
            .collect()
    }

    /// Channel composition: `self` then `next`.
    pub fn then(&self, next: &Channel) -> Result<Channel> {
        if next.size != self.size {
            return Err(Error::Shape {
                expected: self.size,
                actual: next.size,
            });
        }
        let rows = (0..self.size)
            .map(|i| next.push_forward(self.row(i)))
            .collect();
        Channel::from_rows(rows)
    }

    // Fast uncompensated step used inside the power iteration.
    fn step_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, k) in out.iter_mut().zip(self.row(i)) {
                *o += xi * k;
            }
        }
    }
}

/// One step of the chain.
pub fn apply_channel(p: &Distribution, channel: &Channel) -> Result<Distribution> {
    p.ensure_len(channel.size())?;
    Distribution::new(channel.push_forward(p.probs()))
}

/// Result of the stationary search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stationary {
    pub distribution: Distribution,
    pub iterations: usize,
    /// `||πK - π||_∞`.
    pub residual: f64,
    /// Set when perturbed starts converge to different limits, i.e. the chain
    /// has more than one stationary distribution.
    pub multiplicity_warning: bool,
}

fn lazy_power_iteration(channel: &Channel, start: Vec<f64>) -> (Vec<f64>, usize) {
    let n = channel.size();
    let mut x = start;
    let mut kx = vec![0.0; n];
    for iteration in 1..=STATIONARY_MAX_ITERATIONS {
        channel.step_into(&x, &mut kx);
        let mut diff = 0.0_f64;
        for (xi, ki) in x.iter_mut().zip(&kx) {
            let next = 0.5 * (*xi + ki);
            diff = diff.max((next - *xi).abs());
            *xi = next;
        }
        let sum: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= sum);
        if diff < STATIONARY_STEP_TOLERANCE {
            return (x, iteration);
        }
    }
    (x, STATIONARY_MAX_ITERATIONS)
}

fn stationarity_residual(channel: &Channel, x: &[f64]) -> f64 {
    channel
        .push_forward(x)
        .iter()
        .zip(x)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn reachability(channel: &Channel) -> Vec<Vec<bool>> {
    let n = channel.size();
    (0..n)
        .map(|start| {
            let mut seen = vec![false; n];
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(i) = stack.pop() {
                for (j, &k) in channel.row(i).iter().enumerate() {
                    if k > 0.0 && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            seen
        })
        .collect()
}

/// The closed communicating classes, each in increasing state order. Every
/// stationary distribution vanishes outside their union.
pub fn closed_classes(channel: &Channel) -> Vec<Vec<usize>> {
    let n = channel.size();
    let reach = reachability(channel);
    let mut assigned = vec![false; n];
    let mut classes = Vec::new();
    for i in 0..n {
        if assigned[i] || !(0..n).all(|j| !reach[i][j] || reach[j][i]) {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&j| reach[i][j]).collect();
        class.iter().for_each(|&j| assigned[j] = true);
        classes.push(class);
    }
    classes
}

/// Marks the states that belong to a closed communicating class.
pub fn recurrent_states(channel: &Channel) -> Vec<bool> {
    let mut recurrent = vec![false; channel.size()];
    for class in closed_classes(channel) {
        class.into_iter().for_each(|i| recurrent[i] = true);
    }
    recurrent
}

/// Zeroes the transient states, which power iteration only drives towards 0.
fn clear_transient(x: &mut [f64], recurrent: &[bool]) {
    for (v, &r) in x.iter_mut().zip(recurrent) {
        if !r {
            *v = 0.0;
        }
    }
    let sum = compensated_sum(x.iter().copied());
    x.iter_mut().for_each(|v| *v /= sum);
}

/// Stationary distribution of the chain restricted to an irreducible closed
/// class, by Grassmann-Taksar-Heyman elimination. No subtractions, so every
/// entry has small relative error.
fn gth_class(channel: &Channel, class: &[usize]) -> Vec<f64> {
    let m = class.len();
    let mut a: Vec<Vec<f64>> = class
        .iter()
        .map(|&i| class.iter().map(|&j| channel.get(i, j)).collect())
        .collect();
    for k in (1..m).rev() {
        let s = compensated_sum(a[k][..k].iter().copied());
        for row in a.iter_mut().take(k) {
            row[k] /= s;
        }
        for i in 0..k {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..k {
                a[i][j] += aik * a[k][j];
            }
        }
    }
    let mut x = vec![0.0; m];
    x[0] = 1.0;
    for j in 1..m {
        x[j] = compensated_sum((0..j).map(|i| x[i] * a[i][j]));
    }
    let total = compensated_sum(x.iter().copied());
    x.iter_mut().for_each(|v| *v /= total);
    x
}

/// Replaces the distribution within each closed class by the class's exact
/// stationary law, keeping the mass the iterate assigns to the class.
fn refine(channel: &Channel, classes: &[Vec<usize>], x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for class in classes {
        let weight = compensated_sum(class.iter().map(|&i| x[i]));
        for (&i, p) in class.iter().zip(gth_class(channel, class)) {
            out[i] = weight * p;
        }
    }
    out
}

/// Finds `π` with `πK = π` by power iteration on the lazy chain `(I + K)/2`
/// started from uniform. The limit is then refined class by class: transient
/// states get exactly 0 and each closed class its exact stationary law, scaled
/// to the mass the iteration put there. Eight seeded random starts probe for
/// multiple stationary distributions.
pub fn stationary_distribution(channel: &Channel) -> Result<Stationary> {
    let n = channel.size();
    let classes = closed_classes(channel);
    let recurrent = recurrent_states(channel);
    let (mut raw, iterations) = lazy_power_iteration(channel, vec![1.0 / n as f64; n]);
    clear_transient(&mut raw, &recurrent);
    let pi = refine(channel, &classes, &raw);
    let residual = stationarity_residual(channel, &pi);
    if !(residual < STATIONARY_VERIFY_TOLERANCE) {
        return Err(Error::NoStationary(format!(
            "power iteration stopped after {iterations} iterations with residual {residual:e}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(PERTURBATION_SEED);
    let mut multiplicity_warning = false;
    for _ in 0..PERTURBED_STARTS {
        let mut start: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let sum: f64 = start.iter().sum();
        start.iter_mut().for_each(|v| *v /= sum);
        let (mut limit, _) = lazy_power_iteration(channel, start);
        clear_transient(&mut limit, &recurrent);
        let gap = limit
            .iter()
            .zip(&raw)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if gap > MULTIPLICITY_TOLERANCE {
            multiplicity_warning = true;
            break;
        }
    }

    Ok(Stationary {
        distribution: Distribution::new(pi)?,
        iterations,
        residual,
        multiplicity_warning,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetailedBalance {
    pub holds: bool,
    /// `max_{i,j} |π_i K_ij - π_j K_ji|`.
    pub max_residual: f64,
}

pub fn check_detailed_balance(channel: &Channel, pi: &Distribution) -> Result<DetailedBalance> {
    pi.ensure_len(channel.size())?;
    let p = pi.probs();
    let mut max_residual = 0.0_f64;
    for i in 0..channel.size() {
        for j in (i + 1)..channel.size() {
            let flux = (p[i] * channel.get(i, j) - p[j] * channel.get(j, i)).abs();
            max_residual = max_residual.max(flux);
        }
    }
    Ok(DetailedBalance {
        holds: max_residual < DETAILED_BALANCE_TOLERANCE,
        max_residual,
    })
}

/// Which distribution relative entropy is measured against along a trajectory.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Reference {
    /// The stationary distribution found by [`stationary_distribution`].
    #[default]
    Auto,
    Given(Distribution),
}

/// `p_0, p_1 = p_0 K, ...` together with `D(p_t || reference)` at every step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub distributions: Vec<Distribution>,
    pub divergences: Vec<InfoQuantity>,
    pub reference: Distribution,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.distributions.len().saturating_sub(1)
    }

    /// Largest increase `D_{t+1} - D_t` (0 if the sequence never increases).
    /// Stepping from a finite value to `+inf` counts as an infinite increase.
    pub fn max_increase(&self) -> f64 {
        self.divergences
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0].nats(), w[1].nats());
                if a == f64::INFINITY {
                    0.0
                } else {
                    b - a
                }
            })
            .fold(0.0, f64::max)
    }

    /// CSV with columns `step,p_1..p_n,D_nats,D_bits`.
    pub fn to_csv(&self) -> String {
        let n = self.reference.len();
        let mut out = String::from("step");
        for i in 1..=n {
            let _ = write!(out, ",p_{i}");
        }
        out.push_str(",D_nats,D_bits\n");
        for (t, (p, d)) in self.distributions.iter().zip(&self.divergences).enumerate() {
            let _ = write!(out, "{t}");
            for x in p.probs() {
                let _ = write!(out, ",{x:?}");
            }
            let _ = writeln!(
                out,
                ",{},{}",
                crate::info::render_real(d.nats()),
                crate::info::render_real(d.bits())
            );
        }
        out
    }
}

fn resolve_reference(channel: &Channel, reference: &Reference) -> Result<Distribution> {
    match reference {
        Reference::Auto => Ok(stationary_distribution(channel)?.distribution),
        Reference::Given(r) => {
            r.ensure_len(channel.size())?;
            Ok(r.clone())
        }
    }
}

pub fn evolve(
    p0: &Distribution,
    channel: &Channel,
    steps: usize,
    reference: &Reference,
) -> Result<Trajectory> {
    p0.ensure_len(channel.size())?;
    let reference = resolve_reference(channel, reference)?;
    Ok(evolve_against(p0, channel, steps, reference))
}

fn evolve_against(
    p0: &Distribution,
    channel: &Channel,
    steps: usize,
    reference: Distribution,
) -> Trajectory {
    let mut distributions = Vec::with_capacity(steps + 1);
    let mut divergences = Vec::with_capacity(steps + 1);
    let mut p = p0.clone();
    for t in 0..=steps {
        divergences.push(relative_entropy(&p, &reference).expect("lengths checked"));
        if t < steps {
            let next = apply_channel(&p, channel).expect("lengths checked");
            distributions.push(std::mem::replace(&mut p, next));
        }
    }
    distributions.push(p);
    Trajectory {
        distributions,
        divergences,
        reference,
    }
}

/// Outcome of [`second_law_audit`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditVerdict {
    pub stationary_found: bool,
    pub stationary: Option<Distribution>,
    pub multiplicity_warning: bool,
    /// Error from the stationary search, if any.
    pub stationary_error: Option<String>,
    pub detailed_balance: bool,
    pub detailed_balance_residual: Option<f64>,
    /// Whether the audit measured against the found stationary distribution
    /// (as opposed to a caller-supplied reference).
    pub reference_is_stationary: bool,
    pub monotone: bool,
    /// Largest positive jump of `D(p_t || reference)` in nats.
    #[serde(serialize_with = "serialize_nats")]
    pub max_violation: f64,
    pub slack: f64,
    pub steps_checked: usize,
    #[serde(skip)]
    pub trajectory: Option<Trajectory>,
}

/// Runs the stationary search, the detailed-balance check and `steps` steps of
/// the chain, and reports whether `D(p_t || π)` was non-increasing.
pub fn second_law_audit(p0: &Distribution, channel: &Channel, steps: usize) -> Result<AuditVerdict> {
    second_law_audit_with(p0, channel, steps, &Reference::Auto, MONOTONE_SLACK)
}

/// As [`second_law_audit`], optionally against an explicit reference, which
/// need not be stationary.
pub fn second_law_audit_with(
    p0: &Distribution,
    channel: &Channel,
    steps: usize,
    reference: &Reference,
    slack: f64,
) -> Result<AuditVerdict> {
    if steps == 0 {
        return Err(Error::Domain("an audit needs at least one step".into()));
    }
    p0.ensure_len(channel.size())?;
    if let Reference::Given(r) = reference {
        r.ensure_len(channel.size())?;
    }

    let search = stationary_distribution(channel);
    let mut verdict = AuditVerdict {
        stationary_found: search.is_ok(),
        stationary: None,
        multiplicity_warning: false,
        stationary_error: None,
        detailed_balance: false,
        detailed_balance_residual: None,
        reference_is_stationary: matches!(reference, Reference::Auto),
        monotone: false,
        max_violation: 0.0,
        slack,
        steps_checked: 0,
        trajectory: None,
    };
    match search {
        Ok(s) => {
            let db = check_detailed_balance(channel, &s.distribution)?;
            verdict.detailed_balance = db.holds;
            verdict.detailed_balance_residual = Some(db.max_residual);
            verdict.multiplicity_warning = s.multiplicity_warning;
            verdict.stationary = Some(s.distribution);
        }
        Err(e) => verdict.stationary_error = Some(e.to_string()),
    }

    let reference = match (reference, &verdict.stationary) {
        (Reference::Given(r), _) => r.clone(),
        (Reference::Auto, Some(pi)) => pi.clone(),
        (Reference::Auto, None) => return Ok(verdict),
    };
    let trajectory = evolve_against(p0, channel, steps, reference);
    verdict.max_violation = trajectory.max_increase();
    verdict.monotone = verdict.max_violation <= slack;
    verdict.steps_checked = trajectory.steps();
    verdict.trajectory = Some(trajectory);
    Ok(verdict)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DpiCheck {
    pub before: InfoQuantity,
    pub after: InfoQuantity,
    pub ok: bool,
}

/// Compares `D(p || q)` with `D(pK || qK)`; processing must not increase it.
pub fn data_processing_check(p: &Distribution, q: &Distribution, channel: &Channel) -> Result<DpiCheck> {
    let before = relative_entropy(p, q)?;
    let after = relative_entropy(&apply_channel(p, channel)?, &apply_channel(q, channel)?)?;
    Ok(DpiCheck {
        before,
        after,
        ok: after.nats() <= before.nats() + DPI_SLACK,
    })
}
