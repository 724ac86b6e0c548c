//! Quasi-static work for the single-molecule Szilard engine and the energy
//! ledger of a measure-then-extract demon cycle.
//!
//! The molecule obeys `P V = k_B T`. Volumes are in arbitrary units since only
//! their ratios enter the work.

use std::f64::consts::LN_2;
use std::fmt::Write as _;

use serde::Serialize;

use crate::bitops::{total_delta_d, BitOps, BitPairState, BitState, Mode, PairRelation};
use crate::error::{Error, Result};
use crate::info::serialize_nats;
use crate::numeric::compensated_sum;

pub const DEFAULT_STEPS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EngineConfig {
    pub temperature: f64,
    pub boltzmann: f64,
    pub volume: f64,
    /// Midpoint-rule subintervals for the isothermal integral.
    pub steps: usize,
}

impl EngineConfig {
    pub fn new(temperature: f64, boltzmann: f64, volume: f64, steps: usize) -> Result<Self> {
        for (name, x) in [("temperature", temperature), ("boltzmann", boltzmann), ("volume", volume)] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive and finite, got {x}")));
            }
        }
        if steps == 0 {
            return Err(Error::Domain("at least one integration step is required".into()));
        }
        Ok(Self {
            temperature,
            boltzmann,
            volume,
            steps,
        })
    }

    /// `k_B = 1`, `T = 1`, `V = 1`, default step count.
    pub fn natural() -> Self {
        Self::new(1.0, 1.0, 1.0, DEFAULT_STEPS).expect("valid")
    }

    pub fn thermal_energy(&self) -> f64 {
        self.boltzmann * self.temperature
    }

    pub fn with_steps(self, steps: usize) -> Result<Self> {
        Self::new(self.temperature, self.boltzmann, self.volume, steps)
    }
}

/// Work done on the gas, `-∫ P dV` from `v_start` to `v_end`, by the midpoint
/// rule with `cfg.steps` subintervals. Compression is positive.
pub fn isothermal_work(cfg: &EngineConfig, v_start: f64, v_end: f64) -> Result<f64> {
    if !(v_start > 0.0 && v_end > 0.0 && v_start.is_finite() && v_end.is_finite()) {
        return Err(Error::Domain(format!(
            "volumes must be positive and finite, got {v_start} -> {v_end}"
        )));
    }
    let n = cfg.steps;
    let h = (v_end - v_start) / n as f64;
    let kt = cfg.thermal_energy();
    let integral = compensated_sum((0..n).map(|i| h / (v_start + (i as f64 + 0.5) * h)));
    Ok(-kt * integral)
}

/// The limit `k_B T log(v_start / v_end)`.
pub fn isothermal_work_exact(cfg: &EngineConfig, v_start: f64, v_end: f64) -> f64 {
    cfg.thermal_energy() * (v_start / v_end).ln()
}

/// Minimum work to confine the molecule to one half: `k_B T log 2`.
pub fn erase_work_bound(cfg: &EngineConfig) -> f64 {
    cfg.thermal_energy() * LN_2
}

/// Maximum work from letting a molecule known to be in one half expand to
/// fill the vessel: `k_B T log 2`.
pub fn randomize_work_yield(cfg: &EngineConfig) -> f64 {
    cfg.thermal_energy() * LN_2
}

/// Ideal yield when the pulley is hooked to `pulley_side` and the molecule is
/// in half `molecule_side`. On the wrong side the load is lowered instead.
pub fn pulley_yield(cfg: &EngineConfig, molecule_side: usize, pulley_side: usize) -> f64 {
    if molecule_side == pulley_side {
        randomize_work_yield(cfg)
    } else {
        -randomize_work_yield(cfg)
    }
}

/// Expected yield with the pulley on a fixed side and the molecule uniformly
/// distributed over the two halves.
pub fn expected_yield_without_information(cfg: &EngineConfig, pulley_side: usize) -> f64 {
    0.5 * pulley_yield(cfg, 0, pulley_side) + 0.5 * pulley_yield(cfg, 1, pulley_side)
}

/// One row of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub steps: usize,
    pub work: f64,
    pub abs_error: f64,
}

/// Work for compression by `ratio` at each step count, against the exact limit.
pub fn convergence_table(cfg: &EngineConfig, ratio: f64, step_counts: &[usize]) -> Result<Vec<ConvergenceRow>> {
    let (v0, v1) = (cfg.volume, cfg.volume / ratio);
    let exact = isothermal_work_exact(cfg, v0, v1);
    step_counts
        .iter()
        .map(|&steps| {
            let work = isothermal_work(&cfg.with_steps(steps)?, v0, v1)?;
            Ok(ConvergenceRow {
                steps,
                work,
                abs_error: (work - exact).abs(),
            })
        })
        .collect()
}

/// CSV with columns `N,work,abs_error`.
pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("N,work,abs_error\n");
    for r in rows {
        let _ = writeln!(out, "{},{:?},{:?}", r.steps, r.work, r.abs_error);
    }
    out
}

/// How the demon learns which half the molecule is in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Measurement {
    /// Copy into a random apparatus bit `Y`.
    SzilardCopy,
    /// Copy into an apparatus bit `Y` initialised to 0.
    LandauerCopy,
    /// Skip measuring and extract blind.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerEntry {
    pub label: String,
    /// Work supplied to the system (negative when work is extracted).
    pub work: f64,
    /// Change in relative entropy to equilibrium, in nats.
    #[serde(serialize_with = "serialize_nats")]
    pub info_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleLedger {
    pub measurement: Measurement,
    pub entries: Vec<LedgerEntry>,
    pub net_work: f64,
    #[serde(serialize_with = "serialize_nats")]
    pub net_info: f64,
}

impl CycleLedger {
    fn from_entries(measurement: Measurement, entries: Vec<LedgerEntry>) -> Self {
        let net_work = entries.iter().map(|e| e.work).sum();
        let net_info = entries.iter().map(|e| e.info_delta).sum();
        Self {
            measurement,
            entries,
            net_work,
            net_info,
        }
    }

    /// `net_work - k_B T net_info`: the work not accounted for by spent
    /// information. Never negative.
    pub fn unaccounted_work(&self, cfg: &EngineConfig) -> f64 {
        self.net_work - cfg.thermal_energy() * self.net_info
    }
}

/// Bookkeeping for measure-then-extract on the engine bit `X` with apparatus
/// bit `Y`, using the ideal bounds of the bit-operation ledgers.
pub fn demon_cycle(cfg: &EngineConfig, measurement: Measurement) -> Result<CycleLedger> {
    let ops = BitOps::new(Mode::Strict, cfg.temperature, cfg.boltzmann)?;
    let x = BitState::star();
    let entries = match measurement {
        Measurement::None => {
            vec![LedgerEntry {
                label: "extract without position information (expected)".into(),
                work: -expected_yield_without_information(cfg, 0),
                info_delta: 0.0,
            }]
        }
        Measurement::SzilardCopy | Measurement::LandauerCopy => {
            let y = if measurement == Measurement::SzilardCopy {
                BitState::star()
            } else {
                BitState::zero()
            };
            let start = BitPairState::independent(&x, &y);
            let (measured, copy) = if measurement == Measurement::SzilardCopy {
                ops.copy_szilard(&start)?
            } else {
                ops.copy_landauer(&start)?
            };
            let (end, extract) = ops.randomize_first(&measured)?;
            let mut entries = vec![
                LedgerEntry {
                    label: format!("measure X into Y ({})", copy.op),
                    work: copy.min_energy,
                    info_delta: copy.delta_d.nats(),
                },
                LedgerEntry {
                    label: "extract work by randomizing X".into(),
                    work: extract.min_energy,
                    info_delta: extract.delta_d.nats(),
                },
            ];
            debug_assert_eq!(
                total_delta_d(&[copy, extract]).nats(),
                entries.iter().map(|e| e.info_delta).sum::<f64>()
            );
            if measurement == Measurement::LandauerCopy {
                let randomized = end.relation() == PairRelation::Independent
                    && end.first().class() == crate::bitops::BitClass::Star
                    && end.second().class() == crate::bitops::BitClass::Star;
                if !randomized {
                    return Err(Error::Domain(format!("unexpected final state {:?}", end.joint())));
                }
                entries.push(LedgerEntry {
                    label: "Y left randomized: X and Y independent and uniform".into(),
                    work: 0.0,
                    info_delta: 0.0,
                });
            }
            entries
        }
    };
    Ok(CycleLedger::from_entries(measurement, entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::BOLTZMANN_SI;

    #[test]
    fn config_validation() {
        assert!(EngineConfig::new(0.0, 1.0, 1.0, 10).is_err());
        assert!(EngineConfig::new(1.0, -1.0, 1.0, 10).is_err());
        assert!(EngineConfig::new(1.0, 1.0, 0.0, 10).is_err());
        assert!(EngineConfig::new(1.0, 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn halving_work() {
        let cfg = EngineConfig::natural().with_steps(1_000_000).unwrap();
        let w = isothermal_work(&cfg, 1.0, 0.5).unwrap();
        assert!((w - LN_2).abs() < 1e-9);
        let w = isothermal_work(&cfg, 3.0, 3.0).unwrap();
        assert_eq!(w, 0.0);
        assert!(isothermal_work(&cfg, 0.0, 1.0).is_err());
        assert!(isothermal_work(&cfg, 1.0, -1.0).is_err());
    }

    #[test]
    fn quartering_is_two_halvings() {
        let cfg = EngineConfig::natural();
        let a = isothermal_work(&cfg, 1.0, 0.5).unwrap();
        let b = isothermal_work(&cfg, 0.5, 0.25).unwrap();
        let c = isothermal_work(&cfg, 1.0, 0.25).unwrap();
        assert!((a + b - c).abs() < 1e-9);
        assert!((c - 2.0 * LN_2).abs() < 1e-9);
        // expansion back is the negative
        let back = isothermal_work(&cfg, 0.5, 1.0).unwrap();
        assert!((a + back).abs() < 1e-9);
    }

    #[test]
    fn bounds() {
        let cfg = EngineConfig::natural();
        assert_eq!(erase_work_bound(&cfg), LN_2);
        assert_eq!(randomize_work_yield(&cfg), LN_2);
        let si = EngineConfig::new(300.0, BOLTZMANN_SI, 1.0, 10).unwrap();
        assert!((erase_work_bound(&si) - 2.870979e-21).abs() < 1e-26);
        let hot = EngineConfig::new(600.0, BOLTZMANN_SI, 1.0, 10).unwrap();
        assert_eq!(erase_work_bound(&hot), 2.0 * erase_work_bound(&si));
        assert_eq!(pulley_yield(&cfg, 0, 0), LN_2);
        assert_eq!(pulley_yield(&cfg, 1, 0), -LN_2);
        assert_eq!(expected_yield_without_information(&cfg, 0), 0.0);
        assert_eq!(expected_yield_without_information(&cfg, 1), 0.0);
    }

    #[test]
    fn demon_cycles() {
        let cfg = EngineConfig::natural();
        let s = demon_cycle(&cfg, Measurement::SzilardCopy).unwrap();
        assert_eq!(s.entries.len(), 2);
        assert_eq!(s.entries[0].work, LN_2);
        assert_eq!(s.entries[1].work, -LN_2);
        assert!(s.net_work >= 0.0);
        assert!(s.unaccounted_work(&cfg) >= 0.0);

        let l = demon_cycle(&cfg, Measurement::LandauerCopy).unwrap();
        assert_eq!(l.entries.len(), 3);
        assert_eq!(l.entries[0].work, 0.0);
        assert_eq!(l.net_work, -LN_2);
        assert_eq!(l.net_info, -LN_2);
        assert_eq!(l.unaccounted_work(&cfg), 0.0);

        let n = demon_cycle(&cfg, Measurement::None).unwrap();
        assert_eq!(n.net_work, 0.0);
    }

    #[test]
    fn convergence_csv_layout() {
        let cfg = EngineConfig::natural();
        let rows = convergence_table(&cfg, 2.0, &[1, 2]).unwrap();
        // N = 1: midpoint 0.75, work = 0.5 / 0.75
        assert!((rows[0].work - 2.0 / 3.0).abs() < 1e-15);
        let csv = convergence_csv(&rows);
        assert!(csv.starts_with("N,work,abs_error\n1,"));
        assert_eq!(csv.lines().count(), 3);
    }
}
