//! Information and free-energy accounting over finite state spaces.
//!
//! Information is measured in nats throughout. The core identity checked by
//! [`thermo::check_szilard_landauer`] is
//!
//! ```text
//! F(p) - F(pi) = kT * D(p || pi)
//! ```
//!
//! where `pi` is the Gibbs distribution of an energy landscape.

pub mod bitops;
pub mod dsl;
pub mod engine;
pub mod error;
pub mod info;
pub mod markov;
mod numeric;
pub mod protocol;
pub mod sweep;
pub mod thermo;

pub use error::{Error, Result};
pub use info::{Distribution, InfoQuantity, JointDistribution};
pub use markov::Channel;
pub use thermo::EnergyLandscape;
