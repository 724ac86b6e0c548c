//! A small line-oriented format for declaring systems, distributions, channels
//! and protocols.
//!
//! ```text
//! # a fair bit at unit temperature
//! system bit
//!   states zero one
//!   temperature 1
//!   boltzmann 1          # optional, default 1
//!   energy zero 0        # optional per state, default 0
//!
//! dist known
//!   over bit
//!   probs 1 0
//!
//! channel mix
//!   over bit
//!   from zero: zero 0.75 one 0.25
//!   from one: zero 0.25 one 0.75
//!
//! protocol demo
//!   start known
//!   check-correspondence
//!   apply mix
//!   evolve 10
//!   audit 50
//!   bitop erase
//!   report json
//! ```
//!
//! Block headers start at column 1; block contents are indented. `#` starts a
//! comment. [`parse`] reports every problem it finds as a located
//! [`Diagnostic`], skipping to the next header after a syntax error.
//! [`format_document`] prints the canonical form, which parses back to the
//! same document.

mod format;
mod generate;
mod parser;

pub use format::format_document;
pub use generate::generate_document;
pub use parser::{parse, parse_bytes};

use std::fmt;

use serde::Serialize;

use crate::bitops::BitOpKind;
use crate::error::Result;
use crate::info::Distribution;
use crate::markov::Channel;
use crate::thermo::EnergyLandscape;

/// A validated document. Numbers are stored exactly as written, so a document
/// survives a print/parse round trip bit for bit.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ProtocolSpec {
    pub systems: Vec<SystemDecl>,
    pub distributions: Vec<DistDecl>,
    pub channels: Vec<ChannelDecl>,
    pub protocols: Vec<ProtocolDecl>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemDecl {
    pub name: String,
    pub states: Vec<String>,
    pub temperature: f64,
    pub boltzmann: f64,
    /// One per state, in state order.
    pub energies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistDecl {
    pub name: String,
    pub system: String,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelDecl {
    pub name: String,
    pub system: String,
    /// Dense rows in state order.
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolDecl {
    pub name: String,
    pub directives: Vec<Directive>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Table,
    Json,
    Csv,
}

impl ReportFormat {
    pub fn name(self) -> &'static str {
        match self {
            ReportFormat::Table => "table",
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "table" => Some(ReportFormat::Table),
            "json" => Some(ReportFormat::Json),
            "csv" => Some(ReportFormat::Csv),
            _ => None,
        }
    }
}

/// One protocol step. `evolve` and `audit` use the channel of the most recent
/// `apply`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "directive", content = "arg")]
pub enum Directive {
    /// Set the current state to a declared distribution.
    Start(String),
    Apply(String),
    Evolve(usize),
    CheckCorrespondence,
    Audit(usize),
    Bitop(BitOpKind),
    Report(ReportFormat),
}

impl ProtocolSpec {
    pub fn is_empty(&self) -> bool {
        self.systems.is_empty()
            && self.distributions.is_empty()
            && self.channels.is_empty()
            && self.protocols.is_empty()
    }

    pub fn system(&self, name: &str) -> Option<&SystemDecl> {
        self.systems.iter().find(|s| s.name == name)
    }

    pub fn dist(&self, name: &str) -> Option<&DistDecl> {
        self.distributions.iter().find(|d| d.name == name)
    }

    pub fn channel(&self, name: &str) -> Option<&ChannelDecl> {
        self.channels.iter().find(|c| c.name == name)
    }

    pub fn protocol(&self, name: &str) -> Option<&ProtocolDecl> {
        self.protocols.iter().find(|p| p.name == name)
    }
}

impl SystemDecl {
    pub fn landscape(&self) -> Result<EnergyLandscape> {
        EnergyLandscape::new(self.energies.clone(), self.temperature, self.boltzmann)
    }
}

impl DistDecl {
    /// The normalized distribution, labelled with the system's states.
    pub fn distribution(&self, system: &SystemDecl) -> Result<Distribution> {
        Distribution::new(self.probs.clone())?.with_labels(system.states.clone())
    }
}

impl ChannelDecl {
    pub fn channel(&self, system: &SystemDecl) -> Result<Channel> {
        Channel::from_rows(self.rows.clone())?.with_labels(system.states.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// A located parse or validation message. Lines and columns are 1-based and
/// columns count characters, not bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub line: usize,
    pub column: usize,
    pub message: String,
    /// The offending text.
    pub excerpt: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {sev}: {}", self.line, self.column, self.message)?;
        if !self.excerpt.is_empty() {
            write!(f, " (at `{}`)", self.excerpt)?;
        }
        Ok(())
    }
}

/// A successful parse: the document plus any warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub document: ProtocolSpec,
    pub warnings: Vec<Diagnostic>,
}
