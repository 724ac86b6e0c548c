//! Executes the protocols of a parsed document.

use std::fmt::Write;

use serde::Serialize;

use crate::bitops::{BitOpKind, BitOps, BitPairState, BitState, LedgerState, Mode, OpLedger};
use crate::dsl::{Directive, ProtocolSpec, ReportFormat, SystemDecl};
use crate::error::{Error, Result};
use crate::info::{relative_entropy, render_real, Distribution, InfoQuantity};
use crate::markov::{apply_channel, second_law_audit, AuditVerdict, Channel};
use crate::thermo::{check_szilard_landauer, gibbs_distribution, EnergyLandscape, ThermoReport};

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepOutcome {
    Start { dist: String },
    Apply { channel: String },
    Evolve { steps: usize },
    CheckCorrespondence { report: ThermoReport },
    Audit { steps: usize, verdict: AuditVerdict },
    Bitop { ledger: OpLedger },
    Report { format: ReportFormat },
}

#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub directive: String,
    pub system: String,
    pub passed: bool,
    /// Current state after the step.
    pub state: Distribution,
    /// Information content of the current state relative to the system's Gibbs distribution.
    pub information: InfoQuantity,
    pub outcome: StepOutcome,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProtocolRun {
    pub protocol: String,
    pub format: ReportFormat,
    pub passed: bool,
    pub steps: Vec<StepRecord>,
}

struct Current<'a> {
    system: &'a SystemDecl,
    landscape: EnergyLandscape,
    gibbs: Distribution,
    state: Distribution,
    channel: Option<Channel>,
}

fn directive_text(d: &Directive) -> String {
    match d {
        Directive::Start(n) => format!("start {n}"),
        Directive::Apply(n) => format!("apply {n}"),
        Directive::Evolve(n) => format!("evolve {n}"),
        Directive::CheckCorrespondence => "check-correspondence".into(),
        Directive::Audit(n) => format!("audit {n}"),
        Directive::Bitop(k) => format!("bitop {}", k.name()),
        Directive::Report(f) => format!("report {}", f.name()),
    }
}

fn missing(what: &str, name: &str) -> Error {
    Error::Domain(format!("unknown {what} `{name}`"))
}

fn bit_input(kind: BitOpKind, state: &Distribution) -> Result<LedgerState> {
    match (kind.arity(), state.len()) {
        (1, 2) => Ok(LedgerState::Bit(BitState::new(state.clone())?)),
        (2, 4) => {
            let p = state.probs();
            Ok(LedgerState::Pair(BitPairState::from_probs([p[0], p[1], p[2], p[3]])?))
        }
        (arity, n) => Err(Error::Domain(format!(
            "bit operation `{}` needs {} states, found {n}",
            kind.name(),
            1usize << arity
        ))),
    }
}

fn ledger_output(state: &LedgerState) -> Vec<f64> {
    match state {
        LedgerState::Bit(b) => b.dist().probs().to_vec(),
        LedgerState::Pair(p) => p.joint().probs().to_vec(),
    }
}

/// Runs the named protocol. Bit operations run in lenient mode with a uniform
/// bit equilibrium.
pub fn run_protocol(doc: &ProtocolSpec, name: &str) -> Result<ProtocolRun> {
    let proto = doc.protocol(name).ok_or_else(|| missing("protocol", name))?;
    let mut current: Option<Current> = None;
    let mut format = ReportFormat::default();
    let mut steps = Vec::with_capacity(proto.directives.len());

    for (i, directive) in proto.directives.iter().enumerate() {
        let mut passed = true;
        let outcome = match directive {
            Directive::Start(dist_name) => {
                let decl = doc.dist(dist_name).ok_or_else(|| missing("distribution", dist_name))?;
                let system = doc.system(&decl.system).ok_or_else(|| missing("system", &decl.system))?;
                let landscape = system.landscape()?;
                current = Some(Current {
                    gibbs: gibbs_distribution(&landscape),
                    landscape,
                    state: decl.distribution(system)?,
                    system,
                    channel: None,
                });
                StepOutcome::Start { dist: dist_name.clone() }
            }
            Directive::Report(f) => {
                format = *f;
                StepOutcome::Report { format: *f }
            }
            other => {
                let cur = current
                    .as_mut()
                    .ok_or_else(|| Error::Domain(format!("`{}` before any start", directive_text(other))))?;
                match other {
                    Directive::Apply(ch_name) => {
                        let decl = doc.channel(ch_name).ok_or_else(|| missing("channel", ch_name))?;
                        let channel = decl.channel(cur.system)?;
                        cur.state = apply_channel(&cur.state, &channel)?;
                        cur.channel = Some(channel);
                        StepOutcome::Apply { channel: ch_name.clone() }
                    }
                    Directive::Evolve(n) => {
                        let channel = cur
                            .channel
                            .as_ref()
                            .ok_or_else(|| Error::Domain("`evolve` without a preceding `apply`".into()))?;
                        for _ in 0..*n {
                            cur.state = apply_channel(&cur.state, channel)?;
                        }
                        StepOutcome::Evolve { steps: *n }
                    }
                    Directive::CheckCorrespondence => {
                        let report = check_szilard_landauer(&cur.landscape, &cur.state)?;
                        passed = report.passed;
                        StepOutcome::CheckCorrespondence { report }
                    }
                    Directive::Audit(n) => {
                        let channel = cur
                            .channel
                            .as_ref()
                            .ok_or_else(|| Error::Domain("`audit` without a preceding `apply`".into()))?;
                        let verdict = second_law_audit(&cur.state, channel, *n)?;
                        passed = verdict.monotone;
                        StepOutcome::Audit { steps: *n, verdict }
                    }
                    Directive::Bitop(kind) => {
                        let ops = BitOps::new(Mode::Lenient, cur.landscape.temperature(), cur.landscape.boltzmann())?;
                        let (out, ledger) = ops.apply(*kind, &bit_input(*kind, &cur.state)?)?;
                        cur.state = Distribution::new(ledger_output(&out))?.with_labels(cur.system.states.clone())?;
                        StepOutcome::Bitop { ledger }
                    }
                    Directive::Start(_) | Directive::Report(_) => unreachable!("handled above"),
                }
            }
        };
        let record = match &current {
            Some(cur) => StepRecord {
                step: i + 1,
                directive: directive_text(directive),
                system: cur.system.name.clone(),
                passed,
                state: cur.state.clone(),
                information: relative_entropy(&cur.state, &cur.gibbs)?,
                outcome,
            },
            // A report directive ahead of any start: nothing to record yet.
            None => continue,
        };
        steps.push(record);
    }

    Ok(ProtocolRun {
        protocol: proto.name.clone(),
        passed: steps.iter().all(|s| s.passed),
        format,
        steps,
    })
}

impl ProtocolRun {
    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("serializable report");
                s.push('\n');
                s
            }
            ReportFormat::Csv => self.to_csv(),
            ReportFormat::Table => self.to_table(),
        }
    }

    /// One row per step: `step,directive,system,passed,D_nats,D_bits,state`, with
    /// the state's probabilities joined by `;`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,directive,system,passed,D_nats,D_bits,state\n");
        for s in &self.steps {
            let state: Vec<String> = s.state.probs().iter().map(|p| render_real(*p)).collect();
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.step,
                s.directive,
                s.system,
                s.passed,
                render_real(s.information.nats()),
                render_real(s.information.bits()),
                state.join(";")
            )
            .unwrap();
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("protocol {}\n", self.protocol);
        let width = self.steps.iter().map(|s| s.directive.len()).max().unwrap_or(0);
        for s in &self.steps {
            let mark = if s.passed { "ok  " } else { "FAIL" };
            write!(
                out,
                "  {:>3}  {mark}  {:<width$}  D = {} nats",
                s.step,
                s.directive,
                render_real(s.information.nats())
            )
            .unwrap();
            match &s.outcome {
                StepOutcome::CheckCorrespondence { report } => write!(
                    out,
                    "  available = {}  residual = {:e}",
                    render_real(report.available),
                    report.residual
                )
                .unwrap(),
                StepOutcome::Audit { verdict, .. } => write!(
                    out,
                    "  monotone = {}  max_violation = {}",
                    verdict.monotone,
                    render_real(verdict.max_violation)
                )
                .unwrap(),
                StepOutcome::Bitop { ledger } => write!(
                    out,
                    "  dH = {} nats  min_energy = {}",
                    render_real(ledger.delta_h.nats()),
                    render_real(ledger.min_energy)
                )
                .unwrap(),
                _ => {}
            }
            out.push('\n');
        }
        writeln!(out, "result: {}", if self.passed { "pass" } else { "FAIL" }).unwrap();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;
    use std::f64::consts::LN_2;

    const DOC: &str = "\
system bit
  states zero one
  temperature 2
dist known
  over bit
  probs 1 0
channel mix
  over bit
  from zero: zero 0.75 one 0.25
  from one: zero 0.25 one 0.75
system pair
  states s00 s01 s10 s11
  temperature 1
dist fresh
  over pair
  probs 0.5 0 0.5 0
protocol demo
  start known
  check-correspondence
  apply mix
  evolve 3
  audit 20
  bitop erase
  report csv
protocol copy
  start fresh
  bitop copy-landauer
";

    fn doc() -> ProtocolSpec {
        parse(DOC).unwrap().document
    }

    #[test]
    fn known_bit_has_one_bit_available() {
        let run = run_protocol(&doc(), "demo").unwrap();
        assert!(run.passed);
        assert_eq!(run.format, ReportFormat::Csv);
        let StepOutcome::CheckCorrespondence { report } = &run.steps[1].outcome else {
            panic!("expected a check");
        };
        assert!((report.available - 2.0 * LN_2).abs() < 1e-15);
        assert!((run.steps[0].information.nats() - LN_2).abs() < 1e-15);
    }

    #[test]
    fn evolution_loses_information_and_erasure_restores_it() {
        let run = run_protocol(&doc(), "demo").unwrap();
        let d: Vec<f64> = run.steps.iter().map(|s| s.information.nats()).collect();
        // start, check, apply, evolve, audit, bitop
        assert!(d[2] < d[1] && d[3] < d[2]);
        assert_eq!(d[4], d[3]);
        assert!((d[5] - LN_2).abs() < 1e-15);
        assert_eq!(run.steps[5].state.probs(), &[1.0, 0.0]);
    }

    #[test]
    fn pair_operations() {
        let run = run_protocol(&doc(), "copy").unwrap();
        assert_eq!(run.steps[1].state.probs(), &[0.5, 0.0, 0.0, 0.5]);
        let StepOutcome::Bitop { ledger } = &run.steps[1].outcome else {
            panic!("expected a bitop");
        };
        assert_eq!(ledger.delta_h.nats(), 0.0);
    }

    #[test]
    fn renders_all_formats() {
        let run = run_protocol(&doc(), "demo").unwrap();
        let csv = run.render(ReportFormat::Csv);
        assert_eq!(csv.lines().count(), 1 + run.steps.len());
        assert!(csv.starts_with("step,directive,system,passed,D_nats,D_bits,state\n1,start known,bit,true,"));
        let json: serde_json::Value = serde_json::from_str(&run.render(ReportFormat::Json)).unwrap();
        assert_eq!(json["steps"][1]["outcome"]["kind"], "check-correspondence");
        assert!(json["steps"][0]["information"]["bits"].as_f64().unwrap() > 0.99);
        assert!(run.render(ReportFormat::Table).ends_with("result: pass\n"));
    }

    #[test]
    fn unknown_protocol() {
        assert!(run_protocol(&doc(), "nope").is_err());
    }
}
