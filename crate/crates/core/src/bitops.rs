//! The elementary bit operations (erase, the two kinds of copy, NOT, switch,
//! randomize) as fixed stochastic channels on one- and two-bit state spaces,
//! each returning a ledger of the information change and the minimum energy
//! it implies.
//!
//! Equilibrium is uniform on one bit and product-uniform on a pair, so the
//! relative-entropy change of every operation is minus its Shannon-entropy
//! change. A positive `min_energy` is work that must be supplied; a negative
//! one bounds the work that can be extracted.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::info::{relative_entropy, shannon_entropy, Distribution, InfoQuantity, JointDistribution};
use crate::markov::{apply_channel, Channel};

/// Tolerance for recognising the canonical bit types and pair relations.
pub const CLASSIFY_TOLERANCE: f64 = 1e-9;

/// `|delta_D|` at or below this is reported as [`Direction::Free`].
pub const FREE_THRESHOLD: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BitValue {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
}

impl BitValue {
    fn index(self) -> usize {
        match self {
            BitValue::Zero => 0,
            BitValue::One => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BitClass {
    Zero,
    One,
    Star,
    Other,
}

/// A Bernoulli bit.
#[derive(Debug, Clone, PartialEq)]
pub struct BitState {
    dist: Distribution,
    class: BitClass,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= CLASSIFY_TOLERANCE
}

impl BitState {
    pub fn new(dist: Distribution) -> Result<Self> {
        dist.ensure_len(2)?;
        let p = dist.probs();
        let class = if close(p[0], 1.0) {
            BitClass::Zero
        } else if close(p[1], 1.0) {
            BitClass::One
        } else if close(p[0], 0.5) {
            BitClass::Star
        } else {
            BitClass::Other
        };
        Ok(Self { dist, class })
    }

    /// `P(bit = 0) = p0`.
    pub fn from_prob_zero(p0: f64) -> Result<Self> {
        Self::new(Distribution::new(vec![p0, 1.0 - p0])?)
    }

    pub fn zero() -> Self {
        Self::from_prob_zero(1.0).expect("valid")
    }

    pub fn one() -> Self {
        Self::from_prob_zero(0.0).expect("valid")
    }

    pub fn star() -> Self {
        Self::from_prob_zero(0.5).expect("valid")
    }

    pub fn degenerate(value: BitValue) -> Self {
        match value {
            BitValue::Zero => Self::zero(),
            BitValue::One => Self::one(),
        }
    }

    pub fn dist(&self) -> &Distribution {
        &self.dist
    }

    pub fn class(&self) -> BitClass {
        self.class
    }
}

impl Serialize for BitState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("BitState", 2)?;
        s.serialize_field("probs", self.dist.probs())?;
        s.serialize_field("class", &self.class)?;
        s.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PairRelation {
    /// `Pr[b1 = b2] = 1`.
    Correlated,
    /// `Pr[b1 = b2] = 0`.
    Anticorrelated,
    Independent,
    Other,
}

/// Two bits with a joint distribution over `00, 01, 10, 11`.
#[derive(Debug, Clone, PartialEq)]
pub struct BitPairState {
    joint: JointDistribution,
    relation: PairRelation,
}

impl BitPairState {
    pub fn new(joint: JointDistribution) -> Result<Self> {
        if joint.rows() != 2 || joint.cols() != 2 {
            return Err(Error::Shape {
                expected: 4,
                actual: joint.rows() * joint.cols(),
            });
        }
        let agree = joint.get(0, 0) + joint.get(1, 1);
        let relation = if close(agree, 1.0) {
            PairRelation::Correlated
        } else if close(agree, 0.0) {
            PairRelation::Anticorrelated
        } else if is_product(&joint) {
            PairRelation::Independent
        } else {
            PairRelation::Other
        };
        Ok(Self { joint, relation })
    }

    /// Probabilities of `00, 01, 10, 11`.
    pub fn from_probs(probs: [f64; 4]) -> Result<Self> {
        Self::new(JointDistribution::new(2, 2, probs.to_vec())?)
    }

    pub fn independent(first: &BitState, second: &BitState) -> Self {
        Self::new(JointDistribution::product(first.dist(), second.dist())).expect("2x2 joint")
    }

    pub fn joint(&self) -> &JointDistribution {
        &self.joint
    }

    pub fn relation(&self) -> PairRelation {
        self.relation
    }

    /// Whether the joint factorizes into its marginals.
    pub fn is_independent(&self) -> bool {
        is_product(&self.joint)
    }

    pub fn first(&self) -> BitState {
        BitState::new(self.joint.marginal_first()).expect("2-state marginal")
    }

    pub fn second(&self) -> BitState {
        BitState::new(self.joint.marginal_second()).expect("2-state marginal")
    }

    fn describe(&self) -> String {
        format!(
            "pair ({:?}, {:?}) {:?}",
            self.first().class(),
            self.second().class(),
            self.relation
        )
    }
}

fn is_product(joint: &JointDistribution) -> bool {
    let p1 = joint.marginal_first();
    let p2 = joint.marginal_second();
    (0..joint.rows()).all(|i| {
        (0..joint.cols()).all(|j| close(joint.get(i, j), p1.probs()[i] * p2.probs()[j]))
    })
}

impl Serialize for BitPairState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("BitPairState", 3)?;
        s.serialize_field("probs", self.joint.probs())?;
        s.serialize_field("relation", &self.relation)?;
        s.serialize_field("marginals", &[self.first().class(), self.second().class()])?;
        s.end()
    }
}

/// State recorded in a ledger.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum LedgerState {
    Bit(BitState),
    Pair(BitPairState),
}

impl LedgerState {
    pub fn flat(&self) -> Distribution {
        match self {
            LedgerState::Bit(b) => b.dist().clone(),
            LedgerState::Pair(p) => p.joint().flatten(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Direction {
    /// The operation needs at least `min_energy` of work.
    CostsAtLeast,
    /// The operation can deliver at most `-min_energy` of work.
    YieldsAtMost,
    Free,
}

/// Information and energy accounting for one operation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpLedger {
    pub op: String,
    pub input: LedgerState,
    pub output: LedgerState,
    /// `H(output) - H(input)`.
    pub delta_h: InfoQuantity,
    /// `D(output || u) - D(input || u)` for the uniform equilibrium `u`.
    pub delta_d: InfoQuantity,
    /// `k_B T delta_D` in configured energy units.
    pub min_energy: f64,
    /// `min_energy / k_B T`, i.e. `delta_D` in nats.
    pub min_energy_nats: f64,
    pub direction: Direction,
    pub temperature: f64,
    pub boltzmann: f64,
}

impl OpLedger {
    fn new(op: String, input: LedgerState, output: LedgerState, temperature: f64, boltzmann: f64) -> Self {
        let (pin, pout) = (input.flat(), output.flat());
        let uniform = Distribution::uniform(pin.len()).expect("non-empty");
        let delta_h = shannon_entropy(&pout) - shannon_entropy(&pin);
        let delta_d = relative_entropy(&pout, &uniform).expect("same length")
            - relative_entropy(&pin, &uniform).expect("same length");
        let direction = if delta_d.nats().abs() <= FREE_THRESHOLD {
            Direction::Free
        } else if delta_d.nats() > 0.0 {
            Direction::CostsAtLeast
        } else {
            Direction::YieldsAtMost
        };
        Self {
            op,
            input,
            output,
            delta_h,
            delta_d,
            min_energy: boltzmann * temperature * delta_d.nats(),
            min_energy_nats: delta_d.nats(),
            direction,
            temperature,
            boltzmann,
        }
    }
}

/// Sum of `delta_D` over a sequence of ledgers.
pub fn total_delta_d(ledgers: &[OpLedger]) -> InfoQuantity {
    ledgers
        .iter()
        .fold(InfoQuantity::ZERO, |acc, l| acc + l.delta_d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Each operation accepts only its nominal input type.
    #[default]
    Strict,
    /// Apply the canonical channel to any input.
    Lenient,
}

/// Index of `(b1, b2)` in a flattened pair distribution.
fn pair_index(b1: usize, b2: usize) -> usize {
    2 * b1 + b2
}

/// Evaluates bit operations at a fixed temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitOps {
    mode: Mode,
    temperature: f64,
    boltzmann: f64,
}

impl BitOps {
    pub fn new(mode: Mode, temperature: f64, boltzmann: f64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::Domain(format!("temperature must be positive, got {temperature}")));
        }
        if !(boltzmann > 0.0 && boltzmann.is_finite()) {
            return Err(Error::Domain(format!("Boltzmann constant must be positive, got {boltzmann}")));
        }
        Ok(Self {
            mode,
            temperature,
            boltzmann,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn thermal_energy(&self) -> f64 {
        self.boltzmann * self.temperature
    }

    fn require(&self, op: &'static str, ok: bool, expected: &str, actual: impl FnOnce() -> String) -> Result<()> {
        if self.mode == Mode::Strict && !ok {
            return Err(Error::Contract {
                op,
                expected: expected.to_owned(),
                actual: actual(),
            });
        }
        Ok(())
    }

    fn run_bit(&self, op: String, b: &BitState, channel: &Channel) -> (BitState, OpLedger) {
        let out = BitState::new(apply_channel(b.dist(), channel).expect("2-state channel"))
            .expect("2-state output");
        let ledger = OpLedger::new(
            op,
            LedgerState::Bit(b.clone()),
            LedgerState::Bit(out.clone()),
            self.temperature,
            self.boltzmann,
        );
        (out, ledger)
    }

    fn run_pair(&self, op: &str, pair: &BitPairState, channel: &Channel) -> (BitPairState, OpLedger) {
        let flat = apply_channel(&pair.joint().flatten(), channel).expect("4-state channel");
        let out = BitPairState::new(JointDistribution::from_flat(2, 2, &flat).expect("4 entries"))
            .expect("2x2 joint");
        let ledger = OpLedger::new(
            op.to_owned(),
            LedgerState::Pair(pair.clone()),
            LedgerState::Pair(out.clone()),
            self.temperature,
            self.boltzmann,
        );
        (out, ledger)
    }

    /// Resets the bit to 0.
    pub fn erase(&self, b: &BitState) -> Result<(BitState, OpLedger)> {
        self.require("erase", b.class() == BitClass::Star, "STAR", || format!("{:?}", b.class()))?;
        Ok(self.run_bit("erase".into(), b, &Channel::deterministic(&[0, 0])?))
    }

    /// Erasure that succeeds with probability `success`; on failure the bit
    /// is left as it was.
    pub fn erase_with_success(&self, b: &BitState, success: f64) -> Result<(BitState, OpLedger)> {
        if !(0.0..=1.0).contains(&success) {
            return Err(Error::Domain(format!("success probability {success} outside [0, 1]")));
        }
        self.require("erase", b.class() == BitClass::Star, "STAR", || format!("{:?}", b.class()))?;
        let channel = Channel::from_rows(vec![vec![1.0, 0.0], vec![success, 1.0 - success]])?;
        Ok(self.run_bit(format!("erase(success={success})"), b, &channel))
    }

    /// `(b1, b2) -> (b1, b1)` starting from two independent random bits.
    pub fn copy_szilard(&self, pair: &BitPairState) -> Result<(BitPairState, OpLedger)> {
        let ok = pair.first().class() == BitClass::Star
            && pair.second().class() == BitClass::Star
            && pair.is_independent();
        self.require("copy_szilard", ok, "independent (STAR, STAR)", || pair.describe())?;
        Ok(self.run_pair("copy_szilard", pair, &copy_channel()?))
    }

    /// `(b1, b2) -> (b1, b1)` starting from a random bit and a zeroed one.
    pub fn copy_landauer(&self, pair: &BitPairState) -> Result<(BitPairState, OpLedger)> {
        let ok = pair.first().class() == BitClass::Star
            && pair.second().class() == BitClass::Zero
            && pair.is_independent();
        self.require("copy_landauer", ok, "independent (STAR, ZERO)", || pair.describe())?;
        Ok(self.run_pair("copy_landauer", pair, &copy_channel()?))
    }

    pub fn not_op(&self, b: &BitState) -> Result<(BitState, OpLedger)> {
        Ok(self.run_bit("not".into(), b, &Channel::deterministic(&[1, 0])?))
    }

    /// Sets a bit that holds `from` to `to`.
    pub fn switch(&self, b: &BitState, from: BitValue, to: BitValue) -> Result<(BitState, OpLedger)> {
        let expected = BitState::degenerate(from).class();
        self.require("switch", b.class() == expected, &format!("{expected:?}"), || {
            format!("{:?}", b.class())
        })?;
        let t = to.index();
        Ok(self.run_bit(
            format!("switch({}->{})", from.index(), t),
            b,
            &Channel::deterministic(&[t, t])?,
        ))
    }

    /// Replaces the bit with a uniformly random one.
    pub fn randomize(&self, b: &BitState) -> Result<(BitState, OpLedger)> {
        let ok = matches!(b.class(), BitClass::Zero | BitClass::One);
        self.require("randomize", ok, "ZERO or ONE", || format!("{:?}", b.class()))?;
        let uniform = Distribution::uniform(2)?;
        Ok(self.run_bit("randomize".into(), b, &Channel::constant(&uniform)))
    }

    /// Randomizes the first bit of a pair and leaves the second alone.
    /// Total in both modes: it is the work-extraction step of a measurement
    /// cycle, whatever the pair looks like.
    pub fn randomize_first(&self, pair: &BitPairState) -> Result<(BitPairState, OpLedger)> {
        let mut rows = vec![vec![0.0; 4]; 4];
        for b1 in 0..2 {
            for b2 in 0..2 {
                for r in 0..2 {
                    rows[pair_index(b1, b2)][pair_index(r, b2)] = 0.5;
                }
            }
        }
        Ok(self.run_pair("randomize_first", pair, &Channel::from_rows(rows)?))
    }
}

fn copy_channel() -> Result<Channel> {
    Channel::deterministic(&[
        pair_index(0, 0),
        pair_index(0, 0),
        pair_index(1, 1),
        pair_index(1, 1),
    ])
}

/// Bit operations by name, for the CLI and protocol runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BitOpKind {
    Erase,
    CopySzilard,
    CopyLandauer,
    Not,
    Switch01,
    Switch10,
    Randomize,
    RandomizeFirst,
}

impl BitOpKind {
    pub const ALL: [BitOpKind; 8] = [
        BitOpKind::Erase,
        BitOpKind::CopySzilard,
        BitOpKind::CopyLandauer,
        BitOpKind::Not,
        BitOpKind::Switch01,
        BitOpKind::Switch10,
        BitOpKind::Randomize,
        BitOpKind::RandomizeFirst,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BitOpKind::Erase => "erase",
            BitOpKind::CopySzilard => "copy-szilard",
            BitOpKind::CopyLandauer => "copy-landauer",
            BitOpKind::Not => "not",
            BitOpKind::Switch01 => "switch-0-1",
            BitOpKind::Switch10 => "switch-1-0",
            BitOpKind::Randomize => "randomize",
            BitOpKind::RandomizeFirst => "randomize-first",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Number of bits the operation acts on.
    pub fn arity(self) -> usize {
        match self {
            BitOpKind::CopySzilard | BitOpKind::CopyLandauer | BitOpKind::RandomizeFirst => 2,
            _ => 1,
        }
    }

    /// The input the operation is defined on.
    pub fn nominal_input(self) -> LedgerState {
        match self {
            BitOpKind::Erase => LedgerState::Bit(BitState::star()),
            BitOpKind::Not => LedgerState::Bit(BitState::star()),
            BitOpKind::Switch01 | BitOpKind::Randomize => LedgerState::Bit(BitState::zero()),
            BitOpKind::Switch10 => LedgerState::Bit(BitState::one()),
            BitOpKind::CopySzilard => {
                LedgerState::Pair(BitPairState::independent(&BitState::star(), &BitState::star()))
            }
            BitOpKind::CopyLandauer => {
                LedgerState::Pair(BitPairState::independent(&BitState::star(), &BitState::zero()))
            }
            BitOpKind::RandomizeFirst => LedgerState::Pair(
                BitPairState::from_probs([0.5, 0.0, 0.0, 0.5]).expect("valid"),
            ),
        }
    }
}

impl BitOps {
    /// Applies `kind` to `input`, which must have the operation's arity.
    pub fn apply(&self, kind: BitOpKind, input: &LedgerState) -> Result<(LedgerState, OpLedger)> {
        match (kind.arity(), input) {
            (1, LedgerState::Bit(b)) => {
                let (out, ledger) = match kind {
                    BitOpKind::Erase => self.erase(b)?,
                    BitOpKind::Not => self.not_op(b)?,
                    BitOpKind::Switch01 => self.switch(b, BitValue::Zero, BitValue::One)?,
                    BitOpKind::Switch10 => self.switch(b, BitValue::One, BitValue::Zero)?,
                    BitOpKind::Randomize => self.randomize(b)?,
                    _ => unreachable!("arity 1"),
                };
                Ok((LedgerState::Bit(out), ledger))
            }
            (2, LedgerState::Pair(p)) => {
                let (out, ledger) = match kind {
                    BitOpKind::CopySzilard => self.copy_szilard(p)?,
                    BitOpKind::CopyLandauer => self.copy_landauer(p)?,
                    BitOpKind::RandomizeFirst => self.randomize_first(p)?,
                    _ => unreachable!("arity 2"),
                };
                Ok((LedgerState::Pair(out), ledger))
            }
            (arity, state) => Err(Error::Shape {
                expected: 2usize.pow(arity as u32),
                actual: state.flat().len(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn strict() -> BitOps {
        BitOps::new(Mode::Strict, 1.0, 1.0).unwrap()
    }

    fn lenient() -> BitOps {
        BitOps::new(Mode::Lenient, 1.0, 1.0).unwrap()
    }

    fn star_star() -> BitPairState {
        BitPairState::independent(&BitState::star(), &BitState::star())
    }

    fn star_zero() -> BitPairState {
        BitPairState::independent(&BitState::star(), &BitState::zero())
    }

    #[test]
    fn classification() {
        assert_eq!(BitState::zero().class(), BitClass::Zero);
        assert_eq!(BitState::one().class(), BitClass::One);
        assert_eq!(BitState::star().class(), BitClass::Star);
        assert_eq!(BitState::from_prob_zero(0.5 + 5e-10).unwrap().class(), BitClass::Star);
        assert_eq!(BitState::from_prob_zero(0.75).unwrap().class(), BitClass::Other);
        assert!(BitState::new(Distribution::uniform(3).unwrap()).is_err());
    }

    #[test]
    fn pair_relations() {
        let corr = BitPairState::from_probs([0.5, 0.0, 0.0, 0.5]).unwrap();
        assert_eq!(corr.relation(), PairRelation::Correlated);
        let anti = BitPairState::from_probs([0.0, 0.5, 0.5, 0.0]).unwrap();
        assert_eq!(anti.relation(), PairRelation::Anticorrelated);
        assert_eq!(star_star().relation(), PairRelation::Independent);
        let other = BitPairState::from_probs([0.4, 0.1, 0.2, 0.3]).unwrap();
        assert_eq!(other.relation(), PairRelation::Other);
        assert_eq!(corr.first().class(), BitClass::Star);
        assert_eq!(star_zero().second().class(), BitClass::Zero);
    }

    #[test]
    fn erase_examples() {
        let (out, l) = strict().erase(&BitState::star()).unwrap();
        assert_eq!(out.class(), BitClass::Zero);
        assert_eq!(l.delta_h.nats(), -LN_2);
        assert_eq!(l.delta_d.nats(), LN_2);
        assert_eq!(l.min_energy, LN_2);
        assert_eq!(l.direction, Direction::CostsAtLeast);

        let (out, l) = lenient().erase(&BitState::zero()).unwrap();
        assert_eq!(out.class(), BitClass::Zero);
        assert_eq!(l.delta_d.nats(), 0.0);
        assert_eq!(l.direction, Direction::Free);

        let b = BitState::from_prob_zero(0.75).unwrap();
        let (_, l) = lenient().erase(&b).unwrap();
        let h = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
        assert!((l.delta_d.nats() - h).abs() < 1e-15);
    }

    #[test]
    fn strict_mode_rejects_wrong_types() {
        let err = strict().erase(&BitState::zero()).unwrap_err();
        assert!(matches!(err, Error::Contract { op: "erase", ref expected, .. } if expected == "STAR"));
        assert!(strict().copy_szilard(&star_zero()).is_err());
        assert!(strict().copy_landauer(&star_star()).is_err());
        assert!(strict().switch(&BitState::one(), BitValue::Zero, BitValue::One).is_err());
        assert!(strict().randomize(&BitState::star()).is_err());
        let corr = BitPairState::from_probs([0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!(strict().copy_szilard(&corr).is_err());
    }

    #[test]
    fn copy_szilard_examples() {
        let (out, l) = strict().copy_szilard(&star_star()).unwrap();
        assert_eq!(out.relation(), PairRelation::Correlated);
        assert_eq!(out.joint().probs(), &[0.5, 0.0, 0.0, 0.5]);
        assert_eq!(out.first().class(), BitClass::Star);
        assert_eq!(l.delta_h.nats(), -LN_2);
        assert_eq!(l.delta_d.nats(), LN_2);
        assert_eq!(l.min_energy, LN_2);

        let corr = BitPairState::from_probs([0.5, 0.0, 0.0, 0.5]).unwrap();
        let (out, l) = lenient().copy_szilard(&corr).unwrap();
        assert_eq!(out, corr);
        assert_eq!(l.delta_d.nats(), 0.0);

        let anti = BitPairState::from_probs([0.0, 0.5, 0.5, 0.0]).unwrap();
        let (out, l) = lenient().copy_szilard(&anti).unwrap();
        assert_eq!(out.relation(), PairRelation::Correlated);
        assert_eq!(l.delta_d.nats(), 0.0);
    }

    #[test]
    fn copy_landauer_examples() {
        let (out, l) = strict().copy_landauer(&star_zero()).unwrap();
        assert_eq!(out.relation(), PairRelation::Correlated);
        assert_eq!(l.delta_h.nats(), 0.0);
        assert_eq!(l.min_energy, 0.0);
        assert_eq!(l.direction, Direction::Free);

        let zz = BitPairState::independent(&BitState::zero(), &BitState::zero());
        let (out, l) = lenient().copy_landauer(&zz).unwrap();
        assert_eq!(out, zz);
        assert_eq!(l.delta_d.nats(), 0.0);

        let (after, _) = lenient().randomize_first(&out).unwrap();
        assert_eq!(after.joint().probs(), star_zero().joint().probs());
        let (out, _) = strict().copy_landauer(&star_zero()).unwrap();
        let (after, _) = strict().randomize_first(&out).unwrap();
        assert_eq!(after.joint().probs(), &[0.25; 4]);
        assert_eq!(after.relation(), PairRelation::Independent);
    }

    #[test]
    fn not_examples() {
        let (out, l) = strict().not_op(&BitState::zero()).unwrap();
        assert_eq!(out.class(), BitClass::One);
        assert_eq!(l.direction, Direction::Free);
        let (out, _) = strict().not_op(&BitState::star()).unwrap();
        assert_eq!(out.class(), BitClass::Star);
        let (out, l) = strict().not_op(&BitState::from_prob_zero(0.75).unwrap()).unwrap();
        assert_eq!(out.dist().probs(), &[0.25, 0.75]);
        assert_eq!(l.delta_d.nats(), 0.0);
    }

    #[test]
    fn switch_examples() {
        let (one, l) = strict().switch(&BitState::zero(), BitValue::Zero, BitValue::One).unwrap();
        assert_eq!(one.class(), BitClass::One);
        assert_eq!(l.delta_d.nats(), 0.0);
        assert_eq!(l.op, "switch(0->1)");
        let (zero, l) = strict().switch(&one, BitValue::One, BitValue::Zero).unwrap();
        assert_eq!(zero, BitState::zero());
        assert_eq!(l.delta_d.nats(), 0.0);
    }

    #[test]
    fn randomize_examples() {
        let (out, l) = strict().randomize(&BitState::zero()).unwrap();
        assert_eq!(out.class(), BitClass::Star);
        assert_eq!(l.delta_h.nats(), LN_2);
        assert_eq!(l.delta_d.nats(), -LN_2);
        assert_eq!(l.min_energy, -LN_2);
        assert_eq!(l.direction, Direction::YieldsAtMost);

        let (_, l) = strict().randomize(&BitState::one()).unwrap();
        assert_eq!(l.delta_d.nats(), -LN_2);

        let (out, l) = lenient().randomize(&BitState::star()).unwrap();
        assert_eq!(out.class(), BitClass::Star);
        assert_eq!(l.min_energy, 0.0);

        let si = BitOps::new(Mode::Strict, 300.0, crate::thermo::BOLTZMANN_SI).unwrap();
        let (_, l) = si.randomize(&BitState::zero()).unwrap();
        // 1.380649e-23 * 300 * ln 2 = 2.87098...e-21
        assert!((l.min_energy.abs() - 2.870979e-21).abs() < 1e-26);
    }

    #[test]
    fn erase_then_randomize_cycle_has_no_net_gain() {
        let ops = strict();
        let (star, l1) = ops.randomize(&BitState::zero()).unwrap();
        let (zero, l2) = ops.erase(&star).unwrap();
        assert_eq!(zero, BitState::zero());
        assert_eq!(l1.min_energy + l2.min_energy, 0.0);
    }

    #[test]
    fn demon_protocols() {
        let ops = strict();
        let (corr, c) = ops.copy_szilard(&star_star()).unwrap();
        let (_, r) = ops.randomize_first(&corr).unwrap();
        assert_eq!(total_delta_d(&[c, r]).nats(), 0.0);

        let (corr, c) = ops.copy_landauer(&star_zero()).unwrap();
        let (end, r) = ops.randomize_first(&corr).unwrap();
        assert_eq!(total_delta_d(&[c, r]).nats(), -LN_2);
        assert_eq!(end.relation(), PairRelation::Independent);
        assert_eq!(end.second().class(), BitClass::Star);
    }

    #[test]
    fn imperfect_erasure_gains_less_than_a_bit() {
        let ops = strict();
        let mut last = f64::NEG_INFINITY;
        for s in [0.0, 0.1, 0.5, 0.9, 0.99, 1.0] {
            let (out, l) = ops.erase_with_success(&BitState::star(), s).unwrap();
            let want = [s + (1.0 - s) / 2.0, (1.0 - s) / 2.0];
            assert!((out.dist().probs()[0] - want[0]).abs() < 1e-15);
            let d = l.delta_d.nats();
            assert!(d > last);
            if s < 1.0 {
                assert!(d < LN_2);
            }
            last = d;
        }
        assert_eq!(last, LN_2);
        assert!(ops.erase_with_success(&BitState::star(), 1.5).is_err());
    }

    #[test]
    fn apply_by_kind_checks_arity() {
        let ops = strict();
        for kind in BitOpKind::ALL {
            let (_, l) = ops.apply(kind, &kind.nominal_input()).unwrap();
            assert!((l.delta_d.nats() + l.delta_h.nats()).abs() < 1e-15);
            assert_eq!(BitOpKind::parse(kind.name()), Some(kind));
        }
        assert!(ops
            .apply(BitOpKind::Erase, &BitOpKind::CopySzilard.nominal_input())
            .is_err());
        assert!(BitOpKind::parse("nand").is_none());
    }

    #[test]
    fn ledger_json_fields() {
        let (_, l) = strict().erase(&BitState::star()).unwrap();
        let v = serde_json::to_value(&l).unwrap();
        assert_eq!(v["op"], "erase");
        assert_eq!(v["direction"], "COSTS_AT_LEAST");
        assert_eq!(v["input"]["class"], "STAR");
        assert_eq!(v["output"]["class"], "ZERO");
        assert_eq!(v["delta_d"]["bits"], 1.0);
        assert_eq!(v["delta_h"]["bits"], -1.0);
        assert_eq!(v["min_energy_nats"], LN_2);
        let (_, l) = strict().copy_szilard(&star_star()).unwrap();
        let v = serde_json::to_value(&l).unwrap();
        assert_eq!(v["output"]["relation"], "CORRELATED");
        assert_eq!(v["input"]["marginals"][0], "STAR");
    }
}
