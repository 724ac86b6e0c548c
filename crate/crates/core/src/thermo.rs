//! Finite-state equilibrium thermodynamics: partition function, Gibbs
//! distribution, average and free energy, and an executable check of the
//! identity `F(p) - F(π) = k_B T D(p || π)`.
//!
//! Every Gibbs quantity is evaluated in log space with the largest Boltzmann
//! exponent shifted out, so landscapes with `|E| / k_B T` up to `1e6` stay finite.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::info::{self, serialize_extended, Distribution, InfoQuantity};
use crate::numeric::{compensated_sum, log_sum_exp};

/// Boltzmann's constant in J/K.
pub const BOLTZMANN_SI: f64 = 1.380649e-23;

/// Relative tolerance used by [`check_szilard_landauer`].
pub const DEFAULT_IDENTITY_TOLERANCE: f64 = 1e-12;

/// Unit system for `k_B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    /// `k_B = 1`: energies and information are numerically interchangeable.
    #[default]
    Natural,
    /// `k_B = 1.380649e-23` J/K.
    Si,
}

impl Units {
    pub fn boltzmann(self) -> f64 {
        match self {
            Units::Natural => 1.0,
            Units::Si => BOLTZMANN_SI,
        }
    }
}

/// State energies at a fixed positive temperature.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyLandscape {
    energies: Vec<f64>,
    temperature: f64,
    boltzmann: f64,
}

impl EnergyLandscape {
    pub fn new(energies: Vec<f64>, temperature: f64, boltzmann: f64) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::Empty);
        }
        if let Some((i, e)) = energies.iter().enumerate().find(|(_, e)| !e.is_finite()) {
            return Err(Error::Domain(format!("energy {e} of state {i} is not finite")));
        }
        // `!(x > 0)` also rejects NaN.
        if !(temperature > 0.0) || !temperature.is_finite() {
            return Err(Error::Domain(format!(
                "temperature must be positive and finite, got {temperature}"
            )));
        }
        if !(boltzmann > 0.0) || !boltzmann.is_finite() {
            return Err(Error::Domain(format!(
                "Boltzmann constant must be positive and finite, got {boltzmann}"
            )));
        }
        Ok(Self {
            energies,
            temperature,
            boltzmann,
        })
    }

    /// All energies zero: the Gibbs distribution is uniform.
    pub fn flat(n: usize, temperature: f64, boltzmann: f64) -> Result<Self> {
        Self::new(vec![0.0; n], temperature, boltzmann)
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn boltzmann(&self) -> f64 {
        self.boltzmann
    }

    /// `k_B T`.
    pub fn thermal_energy(&self) -> f64 {
        self.boltzmann * self.temperature
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// The same landscape with `c` added to every energy.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::new(
            self.energies.iter().map(|e| e + c).collect(),
            self.temperature,
            self.boltzmann,
        )
    }

    fn boltzmann_exponents(&self) -> Vec<f64> {
        let kt = self.thermal_energy();
        self.energies.iter().map(|e| -e / kt).collect()
    }
}

/// `log Z = log sum_i exp(-E_i / k_B T)`.
pub fn log_partition_function(landscape: &EnergyLandscape) -> f64 {
    log_sum_exp(&landscape.boltzmann_exponents())
}

/// `log π_i = -E_i / k_B T - log Z` for every state.
pub fn log_gibbs(landscape: &EnergyLandscape) -> Vec<f64> {
    let exps = landscape.boltzmann_exponents();
    let log_z = log_sum_exp(&exps);
    exps.into_iter().map(|x| x - log_z).collect()
}

pub fn gibbs_distribution(landscape: &EnergyLandscape) -> Distribution {
    let probs = log_gibbs(landscape).into_iter().map(f64::exp).collect();
    Distribution::new(probs).expect("Gibbs weights are normalized")
}

/// `<E>_p = sum_i p_i E_i`.
pub fn average_energy(landscape: &EnergyLandscape, p: &Distribution) -> Result<f64> {
    p.ensure_len(landscape.len())?;
    Ok(compensated_sum(
        p.probs()
            .iter()
            .zip(landscape.energies())
            .map(|(pi, e)| pi * e),
    ))
}

/// `F(p) = <E>_p - k_B T H(p)`.
pub fn free_energy(landscape: &EnergyLandscape, p: &Distribution) -> Result<f64> {
    let energy = average_energy(landscape, p)?;
    Ok(energy - landscape.thermal_energy() * info::shannon_entropy(p).nats())
}

/// Both sides of `F(p) - F(π) = k_B T D(p || π)` evaluated independently.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermoReport {
    pub temperature: f64,
    pub boltzmann: f64,
    /// `Z`; overflows to `inf` for very low energies even though `log Z` is finite.
    #[serde(serialize_with = "serialize_extended")]
    pub partition_value: f64,
    pub log_partition: f64,
    pub gibbs: Distribution,
    pub average_energy: f64,
    pub free_energy_p: f64,
    pub free_energy_gibbs: f64,
    /// `F(p) - F(π)`.
    pub available: f64,
    pub divergence: InfoQuantity,
    /// `|available - k_B T D(p || π)|`.
    #[serde(serialize_with = "serialize_extended")]
    pub residual: f64,
    /// `|F(π) + k_B T log Z|`.
    pub gibbs_residual: f64,
    /// `max(1, |F(p)|)`.
    pub scale: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl ThermoReport {
    /// Whether the residuals are within `tolerance * scale` and the available
    /// free energy is non-negative.
    pub fn holds(&self, tolerance: f64) -> bool {
        let bound = tolerance * self.scale;
        self.residual <= bound && self.gibbs_residual <= bound && self.available >= -bound
    }
}

/// Evaluates every quantity in the correspondence and checks it at the default
/// relative tolerance.
pub fn check_szilard_landauer(landscape: &EnergyLandscape, p: &Distribution) -> Result<ThermoReport> {
    check_szilard_landauer_with_tolerance(landscape, p, DEFAULT_IDENTITY_TOLERANCE)
}

pub fn check_szilard_landauer_with_tolerance(
    landscape: &EnergyLandscape,
    p: &Distribution,
    tolerance: f64,
) -> Result<ThermoReport> {
    p.ensure_len(landscape.len())?;
    let kt = landscape.thermal_energy();
    let log_partition = log_partition_function(landscape);
    let log_pi = log_gibbs(landscape);
    let gibbs = gibbs_distribution(landscape);

    let free_energy_p = free_energy(landscape, p)?;
    let free_energy_gibbs = free_energy(landscape, &gibbs)?;
    let available = free_energy_p - free_energy_gibbs;

    // D(p || π) against the log-space Gibbs weights, so states whose
    // probability underflows still contribute a finite term.
    let kl = compensated_sum(
        p.probs()
            .iter()
            .zip(&log_pi)
            .filter(|(pi, _)| **pi > 0.0)
            .map(|(pi, lpi)| pi * (pi.ln() - lpi)),
    );
    let divergence = InfoQuantity::from_nats(kl);

    let scale = free_energy_p.abs().max(1.0);
    let mut report = ThermoReport {
        temperature: landscape.temperature(),
        boltzmann: landscape.boltzmann(),
        partition_value: log_partition.exp(),
        log_partition,
        gibbs,
        average_energy: average_energy(landscape, p)?,
        free_energy_p,
        free_energy_gibbs,
        available,
        divergence,
        residual: (available - kt * kl).abs(),
        gibbs_residual: (free_energy_gibbs + kt * log_partition).abs(),
        scale,
        tolerance,
        passed: false,
    };
    report.passed = report.holds(tolerance);
    Ok(report)
}

/// `F(p) - F(π)`, the free energy available above equilibrium.
pub fn available_free_energy(landscape: &EnergyLandscape, p: &Distribution) -> Result<f64> {
    Ok(check_szilard_landauer(landscape, p)?.available)
}
