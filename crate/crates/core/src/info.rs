//! Self-information, Shannon entropy, relative entropy and mutual information
//! over finite distributions.
//!
//! All logarithms are natural, so every quantity is in nats; [`InfoQuantity::bits`]
//! converts for presentation. Terms with zero probability contribute exactly
//! zero and are skipped rather than evaluated, and a relative entropy whose
//! first argument puts mass where the second has none is `+inf` instead of an
//! error.

use std::f64::consts::LN_2;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// Inputs whose entries sum to within this distance of 1 are renormalized;
/// anything further off is rejected.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Sums `values` after checking entries are finite and non-negative.
pub(crate) fn checked_sum(values: &[f64]) -> Result<f64> {
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidEntry { index, value });
        }
    }
    Ok(compensated_sum(values.iter().copied()))
}

/// Normalizes `values` in place if their sum is within tolerance of 1.
pub(crate) fn normalize_within_tolerance(values: &mut [f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    let sum = checked_sum(values)?;
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::NotNormalized {
            sum,
            tolerance: NORMALIZATION_TOLERANCE,
        });
    }
    if sum != 1.0 {
        values.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(())
}

/// A probability vector over `n >= 1` ordered states.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl Distribution {
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        normalize_within_tolerance(&mut probs)?;
        Ok(Self {
            probs,
            labels: None,
        })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty);
        }
        Ok(Self {
            probs: vec![1.0 / n as f64; n],
            labels: None,
        })
    }

    /// All mass on `index`.
    pub fn degenerate(n: usize, index: usize) -> Result<Self> {
        if index >= n {
            return Err(Error::Shape {
                expected: n,
                actual: index + 1,
            });
        }
        let mut probs = vec![0.0; n];
        probs[index] = 1.0;
        Ok(Self {
            probs,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.probs.len() {
            return Err(Error::Shape {
                expected: self.probs.len(),
                actual: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Largest absolute entrywise difference. Panics on length mismatch.
    pub fn max_abs_diff(&self, other: &Distribution) -> f64 {
        assert_eq!(self.len(), other.len(), "distribution lengths differ");
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn ensure_len(&self, expected: usize) -> Result<()> {
        if self.len() != expected {
            return Err(Error::Shape {
                expected,
                actual: self.len(),
            });
        }
        Ok(())
    }
}

impl Serialize for Distribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Distribution", 2)?;
        s.serialize_field("probs", &self.probs)?;
        s.serialize_field("labels", &self.labels)?;
        s.end()
    }
}

/// A distribution over the product of two finite state spaces, stored row-major:
/// rows index the first system, columns the second.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointDistribution {
    rows: usize,
    cols: usize,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn new(rows: usize, cols: usize, mut probs: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty);
        }
        if probs.len() != rows * cols {
            return Err(Error::Shape {
                expected: rows * cols,
                actual: probs.len(),
            });
        }
        normalize_within_tolerance(&mut probs)?;
        Ok(Self { rows, cols, probs })
    }

    pub fn from_rows(matrix: &[Vec<f64>]) -> Result<Self> {
        let rows = matrix.len();
        let cols = matrix.first().map_or(0, Vec::len);
        if let Some(bad) = matrix.iter().find(|r| r.len() != cols) {
            return Err(Error::Shape {
                expected: cols,
                actual: bad.len(),
            });
        }
        Self::new(rows, cols, matrix.concat())
    }

    /// The independent joint `p1 ⊗ p2`.
    pub fn product(p1: &Distribution, p2: &Distribution) -> Self {
        let probs = p1
            .probs()
            .iter()
            .flat_map(|a| p2.probs().iter().map(move |b| a * b))
            .collect();
        Self {
            rows: p1.len(),
            cols: p2.len(),
            probs,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.cols + j]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn marginal_first(&self) -> Distribution {
        let probs = (0..self.rows)
            .map(|i| compensated_sum((0..self.cols).map(|j| self.get(i, j))))
            .collect();
        Distribution::new(probs).expect("marginal of a valid joint is valid")
    }

    pub fn marginal_second(&self) -> Distribution {
        let probs = (0..self.cols)
            .map(|j| compensated_sum((0..self.rows).map(|i| self.get(i, j))))
            .collect();
        Distribution::new(probs).expect("marginal of a valid joint is valid")
    }

    /// The joint viewed as a single distribution over `rows * cols` states.
    pub fn flatten(&self) -> Distribution {
        Distribution::new(self.probs.clone()).expect("joint is normalized")
    }

    /// Reshapes a flat distribution of length `rows * cols`.
    pub fn from_flat(rows: usize, cols: usize, flat: &Distribution) -> Result<Self> {
        Self::new(rows, cols, flat.probs().to_vec())
    }
}

/// An amount of information in nats, possibly `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct InfoQuantity(f64);

impl InfoQuantity {
    pub const ZERO: InfoQuantity = InfoQuantity(0.0);
    pub const INFINITE: InfoQuantity = InfoQuantity(f64::INFINITY);

    pub fn from_nats(nats: f64) -> Self {
        Self(nats)
    }

    pub fn from_bits(bits: f64) -> Self {
        Self(bits * LN_2)
    }

    pub fn nats(self) -> f64 {
        self.0
    }

    pub fn bits(self) -> f64 {
        self.0 / LN_2
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl Add for InfoQuantity {
    type Output = InfoQuantity;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl Sub for InfoQuantity {
    type Output = InfoQuantity;
    fn sub(self, rhs: Self) -> Self {
        Self(self.0 - rhs.0)
    }
}

impl Neg for InfoQuantity {
    type Output = InfoQuantity;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

impl fmt::Display for InfoQuantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} nats ({} bits)", render_real(self.0), render_real(self.bits()))
    }
}

/// Renders a real for reports: finite values in shortest round-trip form,
/// infinities as `inf` / `-inf`.
pub fn render_real(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_owned()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_owned()
    } else {
        format!("{x:?}")
    }
}

/// Serializes a real as a JSON number, or as the string `"inf"` / `"-inf"` / `"nan"`.
pub fn serialize_extended<S: Serializer>(x: &f64, serializer: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        serializer.serialize_f64(*x)
    } else if x.is_nan() {
        serializer.serialize_str("nan")
    } else {
        serializer.serialize_str(&render_real(*x))
    }
}

/// Serializes an amount of information held as a plain `f64` in nats like an
/// [`InfoQuantity`].
pub fn serialize_nats<S: Serializer>(x: &f64, serializer: S) -> std::result::Result<S::Ok, S::Error> {
    InfoQuantity::from_nats(*x).serialize(serializer)
}

impl Serialize for InfoQuantity {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        struct Ext(f64);
        impl Serialize for Ext {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                serialize_extended(&self.0, s)
            }
        }
        let mut s = serializer.serialize_struct("InfoQuantity", 2)?;
        s.serialize_field("nats", &Ext(self.nats()))?;
        s.serialize_field("bits", &Ext(self.bits()))?;
        s.end()
    }
}

/// Surprise of an event with probability `p`: `log(1/p)`, with `SI(0) = +inf`.
pub fn self_information(p: f64) -> Result<InfoQuantity> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "self-information needs a probability in [0, 1], got {p}"
        )));
    }
    if p == 0.0 {
        return Ok(InfoQuantity::INFINITE);
    }
    Ok(InfoQuantity(-p.ln()))
}

/// `H(p) = sum p_i log(1/p_i)`.
pub fn shannon_entropy(p: &Distribution) -> InfoQuantity {
    InfoQuantity(compensated_sum(
        p.probs()
            .iter()
            .filter(|&&pi| pi > 0.0)
            .map(|&pi| -pi * pi.ln()),
    ))
}

/// `D(p || q) = sum p_i log(p_i / q_i)`; `+inf` if `p` is not absolutely
/// continuous with respect to `q`.
pub fn relative_entropy(p: &Distribution, q: &Distribution) -> Result<InfoQuantity> {
    q.ensure_len(p.len())?;
    let mut terms = Vec::with_capacity(p.len());
    for (&pi, &qi) in p.probs().iter().zip(q.probs()) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Ok(InfoQuantity::INFINITE);
        }
        terms.push(pi * (pi.ln() - qi.ln()));
    }
    Ok(InfoQuantity(compensated_sum(terms)))
}

/// `I(S1, S2) = D(p || p1 ⊗ p2)`.
pub fn mutual_information(joint: &JointDistribution) -> InfoQuantity {
    let p1 = joint.marginal_first();
    let p2 = joint.marginal_second();
    let mut terms = Vec::with_capacity(joint.probs().len());
    for i in 0..joint.rows() {
        for j in 0..joint.cols() {
            let pij = joint.get(i, j);
            if pij > 0.0 {
                terms.push(pij * (pij.ln() - p1.probs()[i].ln() - p2.probs()[j].ln()));
            }
        }
    }
    // Rounding can leave a tiny negative value for independent joints.
    InfoQuantity(compensated_sum(terms).max(0.0))
}

/// The four terms of `D(p || π1⊗π2) = D(p1||π1) + D(p2||π2) + I(S1,S2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decomposition {
    pub total: InfoQuantity,
    pub part1: InfoQuantity,
    pub part2: InfoQuantity,
    pub correlation: InfoQuantity,
}

impl Decomposition {
    /// `total - (part1 + part2 + correlation)` in nats.
    pub fn residual(&self) -> f64 {
        self.total.nats() - (self.part1.nats() + self.part2.nats() + self.correlation.nats())
    }
}

/// Splits the information in a joint system into the information in each part
/// and in their correlation, relative to the product equilibrium `π1 ⊗ π2`.
pub fn decompose_information(
    joint: &JointDistribution,
    pi1: &Distribution,
    pi2: &Distribution,
) -> Result<Decomposition> {
    pi1.ensure_len(joint.rows())?;
    pi2.ensure_len(joint.cols())?;
    if pi1.probs().iter().chain(pi2.probs()).any(|&x| x <= 0.0) {
        return Err(Error::Domain(
            "equilibrium marginals must be strictly positive".into(),
        ));
    }
    let mut terms = Vec::with_capacity(joint.probs().len());
    for i in 0..joint.rows() {
        for j in 0..joint.cols() {
            let pij = joint.get(i, j);
            if pij > 0.0 {
                terms.push(pij * (pij.ln() - pi1.probs()[i].ln() - pi2.probs()[j].ln()));
            }
        }
    }
    let total = InfoQuantity(compensated_sum(terms));
    let part1 = relative_entropy(&joint.marginal_first(), pi1)?;
    let part2 = relative_entropy(&joint.marginal_second(), pi2)?;
    Ok(Decomposition {
        total,
        part1,
        part2,
        correlation: mutual_information(joint),
    })
}
