use std::fmt::Write;
use std::path::Path;

use serde::Serialize;
use thermobit::bitops::{BitOpKind, BitOps, BitPairState, BitState, LedgerState, Mode};
use thermobit::dsl::{self, ProtocolSpec, ReportFormat};
use thermobit::engine::{self, EngineConfig, Measurement};
use thermobit::markov::{self, Reference};
use thermobit::protocol::run_protocol;
use thermobit::sweep::{run_sweep, SweepConfig};
use thermobit::thermo::{check_szilard_landauer_with_tolerance, EnergyLandscape, Units};
use thermobit::Distribution;

use crate::render::{self, nats, real};
use crate::{
    AuditArgs, BitopArgs, CheckArgs, Cli, Command, DemonArgs, FmtArgs, Format, MeasurementArg, ModeArg, Outcome,
    RunArgs, SweepArgs, SzilardArgs, ThermalArgs, UnitsArg, EXIT_PASS, EXIT_VIOLATION,
};

/// A command either produces output or fails with a message for stderr (exit 1).
type CmdResult = Result<Outcome, String>;

pub(crate) fn dispatch(cli: Cli) -> Outcome {
    let format = cli.format;
    let result = match cli.command {
        Command::Check(a) => check(a, format.unwrap_or(Format::Table)),
        Command::Audit(a) => audit(a, format.unwrap_or(Format::Table)),
        Command::Bitop(a) => bitop(a, format.unwrap_or(Format::Json)),
        Command::Szilard(a) => szilard(a, format.unwrap_or(Format::Table)),
        Command::Sweep(a) => sweep(a, format.unwrap_or(Format::Table)),
        Command::Demon(a) => demon(a, format.unwrap_or(Format::Table)),
        Command::Run(a) => run(a, format),
        Command::Fmt(a) => fmt(a),
    };
    result.unwrap_or_else(|msg| Outcome::usage(format!("error: {msg}")))
}

fn finish(passed: bool, stdout: String, stderr: String) -> CmdResult {
    Ok(Outcome {
        code: if passed { EXIT_PASS } else { EXIT_VIOLATION },
        stdout,
        stderr,
    })
}

fn boltzmann(kb: Option<f64>, units: UnitsArg) -> f64 {
    kb.unwrap_or(match units {
        UnitsArg::Natural => Units::Natural.boltzmann(),
        UnitsArg::Si => Units::Si.boltzmann(),
    })
}

impl ThermalArgs {
    fn boltzmann(&self) -> f64 {
        boltzmann(self.kb, self.units)
    }
}

/// A parsed document and the warnings to pass on.
struct Loaded {
    doc: ProtocolSpec,
    warnings: String,
}

fn load(path: &Path) -> Result<Loaded, String> {
    let bytes = std::fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    match dsl::parse_bytes(&bytes) {
        Ok(parsed) => Ok(Loaded {
            doc: parsed.document,
            warnings: parsed
                .warnings
                .iter()
                .map(|d| format!("{}:{d}\n", path.display()))
                .collect(),
        }),
        Err(diags) => {
            let mut msg = String::new();
            for d in &diags {
                writeln!(msg, "{}:{d}", path.display()).unwrap();
            }
            let errors = diags.iter().filter(|d| d.severity == dsl::Severity::Error).count();
            write!(msg, "{} error{} in {}", errors, if errors == 1 { "" } else { "s" }, path.display()).unwrap();
            Err(msg)
        }
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn check(a: CheckArgs, format: Format) -> CmdResult {
    let from_file = a.file.is_some() || a.dist.is_some();
    let inline = a.energies.is_some() || a.probs.is_some();
    let (landscape, p, warnings) = match (from_file, inline) {
        (true, false) => {
            let (Some(file), Some(dist)) = (&a.file, &a.dist) else {
                return Err("check needs both <FILE> and <DIST>".into());
            };
            if a.temperature.is_some() || a.kb.is_some() || a.units.is_some() {
                return Err("--temperature, --kb and --units apply to inline input only".into());
            }
            let loaded = load(file)?;
            let decl = loaded
                .doc
                .dist(dist)
                .ok_or_else(|| format!("no distribution `{dist}` in {}", file.display()))?;
            let system = loaded.doc.system(&decl.system).expect("validated reference");
            (system.landscape().map_err(err)?, decl.distribution(system).map_err(err)?, loaded.warnings)
        }
        (false, true) => {
            let probs = a.probs.ok_or("inline input needs --probs")?;
            let energies = a.energies.unwrap_or_else(|| vec![0.0; probs.len()]);
            if energies.len() != probs.len() {
                return Err(format!(
                    "--energies has {} entries but --probs has {}",
                    energies.len(),
                    probs.len()
                ));
            }
            let kb = boltzmann(a.kb, a.units.unwrap_or(UnitsArg::Natural));
            let landscape = EnergyLandscape::new(energies, a.temperature.unwrap_or(1.0), kb).map_err(err)?;
            (landscape, Distribution::new(probs).map_err(err)?, String::new())
        }
        _ => return Err("give exactly one input: <FILE> <DIST>, or inline --probs [--energies]".into()),
    };

    let r = check_szilard_landauer_with_tolerance(&landscape, &p, a.tolerance).map_err(err)?;
    let rows = [
        ("temperature", real(r.temperature)),
        ("boltzmann", real(r.boltzmann)),
        ("log_partition", real(r.log_partition)),
        ("average_energy", real(r.average_energy)),
        ("free_energy_p", real(r.free_energy_p)),
        ("free_energy_gibbs", real(r.free_energy_gibbs)),
        ("available", real(r.available)),
        ("divergence", nats(r.divergence.nats())),
        ("residual", real(r.residual)),
        ("gibbs_residual", real(r.gibbs_residual)),
        ("tolerance", format!("{} * {}", real(r.tolerance), real(r.scale))),
        ("result", if r.passed { "pass" } else { "FAIL" }.into()),
    ];
    let out = match format {
        Format::Json => render::json(&r),
        Format::Table => render::table(&rows),
        Format::Csv => render::csv(&rows),
    };
    finish(r.passed, out, warnings)
}

fn audit(a: AuditArgs, format: Format) -> CmdResult {
    let loaded = load(&a.file)?;
    let doc = &loaded.doc;
    let ch = doc
        .channel(&a.channel)
        .ok_or_else(|| format!("no channel `{}` in {}", a.channel, a.file.display()))?;
    let system = doc.system(&ch.system).expect("validated reference");
    let dist_over_system = |name: &str| -> Result<Distribution, String> {
        let d = doc
            .dist(name)
            .ok_or_else(|| format!("no distribution `{name}` in {}", a.file.display()))?;
        if d.system != ch.system {
            return Err(format!(
                "distribution `{name}` is over `{}` but channel `{}` acts on `{}`",
                d.system, a.channel, ch.system
            ));
        }
        d.distribution(system).map_err(err)
    };
    let channel = ch.channel(system).map_err(err)?;
    let p0 = dist_over_system(&a.p0)?;
    let reference = match &a.reference {
        Some(name) => Reference::Given(dist_over_system(name)?),
        None => Reference::Auto,
    };
    let v = markov::second_law_audit_with(&p0, &channel, a.steps, &reference, a.slack).map_err(err)?;

    let csv = v.trajectory.as_ref().map(|t| t.to_csv()).unwrap_or_default();
    if let Some(path) = &a.csv {
        std::fs::write(path, &csv).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    let opt = |x: Option<f64>| x.map_or("-".to_owned(), real);
    let mut rows = vec![
        ("channel", a.channel.clone()),
        ("start", a.p0.clone()),
        ("reference", a.reference.clone().unwrap_or_else(|| "stationary".into())),
        ("stationary_found", v.stationary_found.to_string()),
        ("multiplicity_warning", v.multiplicity_warning.to_string()),
        ("detailed_balance", v.detailed_balance.to_string()),
        ("detailed_balance_residual", opt(v.detailed_balance_residual)),
        ("steps_checked", v.steps_checked.to_string()),
        ("max_violation", nats(v.max_violation)),
        ("slack", real(v.slack)),
    ];
    if let Some(t) = &v.trajectory {
        rows.push(("D_initial", nats(t.divergences[0].nats())));
        rows.push(("D_final", nats(t.divergences[t.divergences.len() - 1].nats())));
    }
    if let Some(e) = &v.stationary_error {
        rows.push(("stationary_error", e.clone()));
    }
    rows.push(("result", if v.monotone { "monotone" } else { "VIOLATION" }.into()));
    let out = match format {
        Format::Json => render::json(&v),
        Format::Table => render::table(&rows),
        Format::Csv if v.trajectory.is_some() => csv,
        Format::Csv => render::csv(&rows),
    };
    finish(v.monotone, out, loaded.warnings)
}

fn bitop(a: BitopArgs, format: Format) -> CmdResult {
    let kind = BitOpKind::parse(&a.op).ok_or_else(|| {
        let names: Vec<_> = BitOpKind::ALL.iter().map(|k| k.name()).collect();
        format!("unknown bit operation `{}`; expected one of {}", a.op, names.join(", "))
    })?;
    let mode = match a.mode {
        ModeArg::Strict => Mode::Strict,
        ModeArg::Lenient => Mode::Lenient,
    };
    let ops = BitOps::new(mode, a.thermal.temperature, a.thermal.boltzmann()).map_err(err)?;
    let input = match a.probs {
        None => kind.nominal_input(),
        Some(p) if p.len() == 2 => LedgerState::Bit(BitState::new(Distribution::new(p).map_err(err)?).map_err(err)?),
        Some(p) if p.len() == 4 => LedgerState::Pair(BitPairState::from_probs([p[0], p[1], p[2], p[3]]).map_err(err)?),
        Some(p) => return Err(format!("--probs needs 2 entries (one bit) or 4 (a pair), got {}", p.len())),
    };
    let (_, ledger) = ops.apply(kind, &input).map_err(err)?;
    let flat = |s: &LedgerState| {
        let v: Vec<String> = s.flat().probs().iter().map(|x| real(*x)).collect();
        v.join(" ")
    };
    let rows = [
        ("op", ledger.op.clone()),
        ("input", flat(&ledger.input)),
        ("output", flat(&ledger.output)),
        ("delta_h", nats(ledger.delta_h.nats())),
        ("delta_d", nats(ledger.delta_d.nats())),
        ("min_energy", real(ledger.min_energy)),
        ("direction", serde_json::to_value(ledger.direction).map_err(err)?.as_str().unwrap_or("").to_owned()),
    ];
    let out = match format {
        Format::Json => render::json(&ledger),
        Format::Table => render::table(&rows),
        Format::Csv => render::csv(&rows),
    };
    finish(true, out, String::new())
}

#[derive(Serialize)]
struct SzilardRow {
    steps: usize,
    work: f64,
    abs_error: f64,
    /// `abs_error` of this row over that of the previous, finer row.
    error_ratio: Option<f64>,
}

#[derive(Serialize)]
struct SzilardReport {
    ratio: f64,
    temperature: f64,
    boltzmann: f64,
    exact: f64,
    rows: Vec<SzilardRow>,
}

fn szilard(a: SzilardArgs, format: Format) -> CmdResult {
    if !(a.ratio > 0.0 && a.ratio.is_finite()) {
        return Err(format!("--ratio must be positive, got {}", a.ratio));
    }
    if a.rows == 0 {
        return Err("--rows must be at least 1".into());
    }
    let cfg = EngineConfig::new(a.thermal.temperature, a.thermal.boltzmann(), 1.0, a.steps).map_err(err)?;
    let counts: Vec<usize> = (0..a.rows).map(|i| a.steps >> i).take_while(|&n| n > 0).collect();
    let table = engine::convergence_table(&cfg, a.ratio, &counts).map_err(err)?;
    let rows: Vec<SzilardRow> = table
        .iter()
        .enumerate()
        .map(|(i, r)| SzilardRow {
            steps: r.steps,
            work: r.work,
            abs_error: r.abs_error,
            error_ratio: (i > 0 && table[i - 1].abs_error > 0.0).then(|| r.abs_error / table[i - 1].abs_error),
        })
        .collect();
    let report = SzilardReport {
        ratio: a.ratio,
        temperature: cfg.temperature,
        boltzmann: cfg.boltzmann,
        exact: engine::isothermal_work_exact(&cfg, cfg.volume, cfg.volume / a.ratio),
        rows,
    };
    let ratio_text = |r: &SzilardRow| r.error_ratio.map_or("-".to_owned(), |x| format!("{x:.4}"));
    let out = match format {
        Format::Json => render::json(&report),
        Format::Csv => {
            let mut s = String::from("N,work,abs_error,error_ratio\n");
            for r in &report.rows {
                let ratio = r.error_ratio.map_or(String::new(), real);
                writeln!(s, "{},{},{},{}", r.steps, real(r.work), real(r.abs_error), ratio).unwrap();
            }
            s
        }
        Format::Table => {
            let mut s = format!(
                "compression ratio {}  kT = {}  exact work = {}\n",
                real(a.ratio),
                real(cfg.thermal_energy()),
                real(report.exact)
            );
            writeln!(s, "{:>12}  {:>24}  {:>12}  {:>8}", "N", "work", "abs_error", "ratio").unwrap();
            for r in &report.rows {
                writeln!(
                    s,
                    "{:>12}  {:>24}  {:>12.3e}  {:>8}",
                    r.steps,
                    real(r.work),
                    r.abs_error,
                    ratio_text(r)
                )
                .unwrap();
            }
            s
        }
    };
    finish(true, out, String::new())
}

fn sweep(a: SweepArgs, format: Format) -> CmdResult {
    if a.max_states == 0 {
        return Err("--max-states must be at least 1".into());
    }
    let cfg = SweepConfig {
        audit_steps: a.audit_steps.max(1),
        inject_fault: a.inject_fault,
        ..SweepConfig::new(a.instances, a.max_states, a.seed)
    };
    let summary = run_sweep(&cfg).map_err(err)?;
    let out = match format {
        Format::Json => render::json(&summary),
        Format::Table => summary.to_table(),
        Format::Csv => summary.to_csv(),
    };
    finish(summary.passed, out, String::new())
}

#[derive(Serialize)]
struct DemonReport {
    #[serde(flatten)]
    ledger: engine::CycleLedger,
    thermal_energy: f64,
    unaccounted_work: f64,
}

fn demon(a: DemonArgs, format: Format) -> CmdResult {
    let cfg = EngineConfig::new(a.thermal.temperature, a.thermal.boltzmann(), 1.0, engine::DEFAULT_STEPS)
        .map_err(err)?;
    let measurement = match a.measurement {
        MeasurementArg::Szilard => Measurement::SzilardCopy,
        MeasurementArg::Landauer => Measurement::LandauerCopy,
        MeasurementArg::None => Measurement::None,
    };
    let ledger = engine::demon_cycle(&cfg, measurement).map_err(err)?;
    let unaccounted = ledger.unaccounted_work(&cfg);
    // Net work below what the spent information pays for would beat the bound.
    let passed = unaccounted >= -1e-12 * cfg.thermal_energy();
    let out = match format {
        Format::Json => render::json(&DemonReport {
            ledger: ledger.clone(),
            thermal_energy: cfg.thermal_energy(),
            unaccounted_work: unaccounted,
        }),
        Format::Csv => {
            let mut s = String::from("label,work,info_nats\n");
            for e in &ledger.entries {
                writeln!(s, "{},{},{}", render::csv_field(&e.label), real(e.work), real(e.info_delta)).unwrap();
            }
            writeln!(s, "net,{},{}", real(ledger.net_work), real(ledger.net_info)).unwrap();
            s
        }
        Format::Table => {
            let width = ledger.entries.iter().map(|e| e.label.len()).max().unwrap_or(0).max(3);
            let mut s = format!("{:<width$}  {:>24}  {:>24}\n", "step", "work", "info (nats)");
            for e in &ledger.entries {
                writeln!(s, "{:<width$}  {:>24}  {:>24}", e.label, real(e.work), real(e.info_delta)).unwrap();
            }
            writeln!(s, "{:<width$}  {:>24}  {:>24}", "net", real(ledger.net_work), real(ledger.net_info)).unwrap();
            writeln!(s, "unaccounted work: {}", real(unaccounted)).unwrap();
            s
        }
    };
    finish(passed, out, String::new())
}

fn run(a: RunArgs, format: Option<Format>) -> CmdResult {
    let loaded = load(&a.file)?;
    let names: Vec<String> = match &a.protocol {
        Some(name) => {
            if loaded.doc.protocol(name).is_none() {
                return Err(format!("no protocol `{name}` in {}", a.file.display()));
            }
            vec![name.clone()]
        }
        None => loaded.doc.protocols.iter().map(|p| p.name.clone()).collect(),
    };
    if names.is_empty() {
        return Err(format!("{} declares no protocols", a.file.display()));
    }
    let runs = names
        .iter()
        .map(|n| run_protocol(&loaded.doc, n))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let passed = runs.iter().all(|r| r.passed);
    let out = match format {
        Some(Format::Json) if runs.len() > 1 => render::json(&runs),
        Some(f) => {
            let f = match f {
                Format::Table => ReportFormat::Table,
                Format::Json => ReportFormat::Json,
                Format::Csv => ReportFormat::Csv,
            };
            runs.iter().map(|r| r.render(f)).collect::<Vec<_>>().join("\n")
        }
        None => runs.iter().map(|r| r.render(r.format)).collect::<Vec<_>>().join("\n"),
    };
    finish(passed, out, loaded.warnings)
}

fn fmt(a: FmtArgs) -> CmdResult {
    let loaded = load(&a.file)?;
    finish(true, dsl::format_document(&loaded.doc), loaded.warnings)
}
