use std::collections::{HashMap, HashSet};

use super::{
    ChannelDecl, Diagnostic, Directive, DistDecl, Parsed, ProtocolDecl, ProtocolSpec, ReportFormat,
    Severity, SystemDecl,
};
use crate::bitops::BitOpKind;
use crate::info::NORMALIZATION_TOLERANCE;
use crate::numeric::compensated_sum;

const EXCERPT_LIMIT: usize = 60;

/// Sums within this distance of 1 are silently renormalized; further off (but
/// within tolerance) they draw a warning.
const QUIET_NORMALIZATION: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
struct Tok {
    text: String,
    line: usize,
    col: usize,
}

impl Tok {
    fn diag(&self, severity: Severity, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            severity,
            line: self.line,
            column: self.col,
            message: message.into(),
            excerpt: excerpt(&self.text),
        }
    }

    fn error(&self, message: impl Into<String>) -> Diagnostic {
        self.diag(Severity::Error, message)
    }
}

fn excerpt(s: &str) -> String {
    if s.chars().count() <= EXCERPT_LIMIT {
        s.to_owned()
    } else {
        let mut e: String = s.chars().take(EXCERPT_LIMIT).collect();
        e.push('…');
        e
    }
}

/// Splits one line into whitespace-separated tokens, dropping any comment.
fn tokenize(line: &str, line_no: usize) -> Vec<Tok> {
    let mut toks = Vec::new();
    let mut current: Option<Tok> = None;
    for (col0, ch) in line.chars().enumerate() {
        if ch == '#' {
            break;
        }
        if ch.is_whitespace() {
            toks.extend(current.take());
        } else {
            current
                .get_or_insert_with(|| Tok {
                    text: String::new(),
                    line: line_no,
                    col: col0 + 1,
                })
                .text
                .push(ch);
        }
    }
    toks.extend(current);
    toks
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

/// Decimal number with optional fraction and exponent; must be finite.
fn parse_number(s: &str) -> Result<f64, String> {
    let bytes = s.as_bytes();
    let mut i = 0;
    if matches!(bytes.first(), Some(b'+' | b'-')) {
        i += 1;
    }
    let int_start = i;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return Err(format!("expected a number, found `{}`", excerpt(s)));
    }
    if i < bytes.len() && matches!(bytes[i], b'e' | b'E') {
        i += 1;
        if i < bytes.len() && matches!(bytes[i], b'+' | b'-') {
            i += 1;
        }
        let exp_start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return Err(format!("malformed exponent in `{}`", excerpt(s)));
        }
    }
    if i != bytes.len() {
        return Err(format!("expected a number, found `{}`", excerpt(s)));
    }
    let x: f64 = s.parse().map_err(|_| format!("invalid number `{}`", excerpt(s)))?;
    if !x.is_finite() {
        return Err(format!("number `{}` is out of range", excerpt(s)));
    }
    Ok(x)
}

fn parse_count(tok: &Tok) -> Result<usize, Diagnostic> {
    if tok.text.is_empty() || !tok.text.bytes().all(|b| b.is_ascii_digit()) {
        return Err(tok.error(format!("expected a non-negative integer, found `{}`", excerpt(&tok.text))));
    }
    tok.text
        .parse()
        .map_err(|_| tok.error(format!("count `{}` is too large", excerpt(&tok.text))))
}

/// Formats a sum for messages: 12 significant digits, trailing zeros trimmed.
fn show_sum(x: f64) -> String {
    let s = format!("{:.*e}", 11, x);
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..=12).contains(&exp) {
        let fixed = format!("{:.*}", (11 - exp).max(0) as usize, x);
        if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.').to_owned()
        } else {
            fixed
        }
    } else {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{m}e{exp}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Kind {
    System,
    Dist,
    Channel,
    Protocol,
}

impl Kind {
    fn from_keyword(s: &str) -> Option<Self> {
        match s {
            "system" => Some(Kind::System),
            "dist" => Some(Kind::Dist),
            "channel" => Some(Kind::Channel),
            "protocol" => Some(Kind::Protocol),
            _ => None,
        }
    }

    fn noun(self) -> &'static str {
        match self {
            Kind::System => "system",
            Kind::Dist => "distribution",
            Kind::Channel => "channel",
            Kind::Protocol => "protocol",
        }
    }
}

#[derive(Debug, Default)]
struct RawSystem {
    states: Option<(Tok, Vec<Tok>)>,
    temperature: Option<(Tok, f64)>,
    boltzmann: Option<(Tok, f64)>,
    energies: Vec<(Tok, f64)>,
}

#[derive(Debug, Default)]
struct RawDist {
    over: Option<Tok>,
    probs: Option<(Tok, Vec<f64>)>,
}

#[derive(Debug)]
struct RawFrom {
    key: Tok,
    source: Tok,
    targets: Vec<(Tok, f64)>,
}

#[derive(Debug, Default)]
struct RawChannel {
    over: Option<Tok>,
    froms: Vec<RawFrom>,
}

#[derive(Debug)]
enum RawDirective {
    Start(Tok),
    Apply(Tok),
    Evolve(usize),
    Check,
    Audit(usize),
    Bitop(Tok, BitOpKind),
    Report(ReportFormat),
}

#[derive(Debug)]
enum Body {
    System(RawSystem),
    Dist(RawDist),
    Channel(RawChannel),
    Protocol(Vec<(Tok, RawDirective)>),
}

#[derive(Debug)]
struct Block {
    name: Tok,
    body: Body,
}

impl Block {
    fn kind(&self) -> Kind {
        match self.body {
            Body::System(_) => Kind::System,
            Body::Dist(_) => Kind::Dist,
            Body::Channel(_) => Kind::Channel,
            Body::Protocol(_) => Kind::Protocol,
        }
    }
}

fn set_once<T>(slot: &mut Option<T>, key: &Tok, value: T) -> Result<(), Diagnostic> {
    if slot.is_some() {
        return Err(key.error(format!("duplicate `{}` line", key.text)));
    }
    *slot = Some(value);
    Ok(())
}

fn expect_args(key: &Tok, args: &[Tok], n: usize, usage: &str) -> Result<(), Diagnostic> {
    if args.len() != n {
        return Err(key.error(format!("expected `{usage}`")));
    }
    Ok(())
}

fn expect_name(tok: &Tok, what: &str) -> Result<Tok, Diagnostic> {
    if is_identifier(&tok.text) {
        Ok(tok.clone())
    } else {
        Err(tok.error(format!("invalid {what} `{}`", excerpt(&tok.text))))
    }
}

fn number(tok: &Tok) -> Result<f64, Diagnostic> {
    parse_number(&tok.text).map_err(|m| tok.error(m))
}

fn parse_body_line(body: &mut Body, key: &Tok, args: &[Tok]) -> Result<(), Diagnostic> {
    match body {
        Body::System(sys) => match key.text.as_str() {
            "states" => {
                if args.is_empty() {
                    return Err(key.error("expected `states <label>+`"));
                }
                let labels = args
                    .iter()
                    .map(|t| expect_name(t, "state label"))
                    .collect::<Result<Vec<_>, _>>()?;
                set_once(&mut sys.states, key, (key.clone(), labels))
            }
            "temperature" => {
                expect_args(key, args, 1, "temperature <number>")?;
                let x = number(&args[0])?;
                set_once(&mut sys.temperature, key, (args[0].clone(), x))
            }
            "boltzmann" => {
                expect_args(key, args, 1, "boltzmann <number>")?;
                let x = number(&args[0])?;
                set_once(&mut sys.boltzmann, key, (args[0].clone(), x))
            }
            "energy" => {
                expect_args(key, args, 2, "energy <label> <number>")?;
                let label = expect_name(&args[0], "state label")?;
                sys.energies.push((label, number(&args[1])?));
                Ok(())
            }
            _ => Err(key.error(format!("unknown system key `{}`", excerpt(&key.text)))),
        },
        Body::Dist(dist) => match key.text.as_str() {
            "over" => {
                expect_args(key, args, 1, "over <system>")?;
                let sys = expect_name(&args[0], "system name")?;
                set_once(&mut dist.over, key, sys)
            }
            "probs" => {
                if args.is_empty() {
                    return Err(key.error("expected `probs <number>+`"));
                }
                let probs = args.iter().map(number).collect::<Result<Vec<_>, _>>()?;
                set_once(&mut dist.probs, key, (key.clone(), probs))
            }
            _ => Err(key.error(format!("unknown dist key `{}`", excerpt(&key.text)))),
        },
        Body::Channel(ch) => match key.text.as_str() {
            "over" => {
                expect_args(key, args, 1, "over <system>")?;
                let sys = expect_name(&args[0], "system name")?;
                set_once(&mut ch.over, key, sys)
            }
            "from" => {
                let usage = "from <label>: <label> <number> [<label> <number>]...";
                let (source, rest) = match args {
                    [first, rest @ ..] if first.text.ends_with(':') && first.text.len() > 1 => {
                        let mut source = first.clone();
                        source.text.pop();
                        (source, rest)
                    }
                    [first, colon, rest @ ..] if colon.text == ":" => (first.clone(), rest),
                    _ => return Err(key.error(format!("expected `{usage}`"))),
                };
                let source = expect_name(&source, "state label")?;
                if rest.is_empty() || rest.len() % 2 != 0 {
                    return Err(key.error(format!("expected `{usage}`")));
                }
                let targets = rest
                    .chunks(2)
                    .map(|pair| Ok((expect_name(&pair[0], "state label")?, number(&pair[1])?)))
                    .collect::<Result<Vec<_>, Diagnostic>>()?;
                ch.froms.push(RawFrom {
                    key: key.clone(),
                    source,
                    targets,
                });
                Ok(())
            }
            _ => Err(key.error(format!("unknown channel key `{}`", excerpt(&key.text)))),
        },
        Body::Protocol(directives) => {
            let directive = match key.text.as_str() {
                "start" => {
                    expect_args(key, args, 1, "start <dist>")?;
                    RawDirective::Start(expect_name(&args[0], "distribution name")?)
                }
                "apply" => {
                    expect_args(key, args, 1, "apply <channel>")?;
                    RawDirective::Apply(expect_name(&args[0], "channel name")?)
                }
                "evolve" => {
                    expect_args(key, args, 1, "evolve <steps>")?;
                    RawDirective::Evolve(parse_count(&args[0])?)
                }
                "check-correspondence" => {
                    expect_args(key, args, 0, "check-correspondence")?;
                    RawDirective::Check
                }
                "audit" => {
                    expect_args(key, args, 1, "audit <steps>")?;
                    RawDirective::Audit(parse_count(&args[0])?)
                }
                "bitop" => {
                    expect_args(key, args, 1, "bitop <name>")?;
                    let kind = BitOpKind::parse(&args[0].text).ok_or_else(|| {
                        let names: Vec<_> = BitOpKind::ALL.iter().map(|k| k.name()).collect();
                        args[0].error(format!(
                            "unknown bit operation `{}` (expected one of {})",
                            excerpt(&args[0].text),
                            names.join(", ")
                        ))
                    })?;
                    RawDirective::Bitop(args[0].clone(), kind)
                }
                "report" => {
                    expect_args(key, args, 1, "report <table|json|csv>")?;
                    let fmt = ReportFormat::parse(&args[0].text).ok_or_else(|| {
                        args[0].error(format!(
                            "unknown report format `{}` (expected table, json or csv)",
                            excerpt(&args[0].text)
                        ))
                    })?;
                    RawDirective::Report(fmt)
                }
                _ => {
                    return Err(key.error(format!("unknown protocol directive `{}`", excerpt(&key.text))))
                }
            };
            directives.push((key.clone(), directive));
            Ok(())
        }
    }
}

/// Syntax pass: blocks, with recovery to the next header after an error.
/// Returns the blocks that parsed cleanly and the (kind, name) of those that didn't.
fn parse_blocks(source: &str, diags: &mut Vec<Diagnostic>) -> (Vec<Block>, HashSet<(Kind, String)>) {
    let mut blocks = Vec::new();
    let mut broken = HashSet::new();
    let mut current: Option<Block> = None;
    // True while skipping lines after an error, until the next header.
    let mut skipping = false;

    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let toks = tokenize(line, line_no);
        let Some((key, args)) = toks.split_first() else {
            continue;
        };
        let indented = key.col > 1;

        if !indented {
            blocks.extend(current.take());
            skipping = false;
            let Some(kind) = Kind::from_keyword(&key.text) else {
                diags.push(key.error(format!(
                    "unknown block keyword `{}` (expected system, dist, channel or protocol)",
                    excerpt(&key.text)
                )));
                skipping = true;
                continue;
            };
            let name = match args {
                [name] if is_identifier(&name.text) => name.clone(),
                [name] => {
                    diags.push(name.error(format!("invalid {} name `{}`", kind.noun(), excerpt(&name.text))));
                    skipping = true;
                    continue;
                }
                [] => {
                    diags.push(key.error(format!("expected `{} <name>`", key.text)));
                    skipping = true;
                    continue;
                }
                [_, extra, ..] => {
                    diags.push(extra.error("unexpected text after block name"));
                    broken.insert((kind, args[0].text.clone()));
                    skipping = true;
                    continue;
                }
            };
            let body = match kind {
                Kind::System => Body::System(RawSystem::default()),
                Kind::Dist => Body::Dist(RawDist::default()),
                Kind::Channel => Body::Channel(RawChannel::default()),
                Kind::Protocol => Body::Protocol(Vec::new()),
            };
            current = Some(Block { name, body });
            continue;
        }

        if skipping {
            continue;
        }
        let Some(block) = current.as_mut() else {
            diags.push(key.error("indented line outside of any block"));
            skipping = true;
            continue;
        };
        if let Err(d) = parse_body_line(&mut block.body, key, args) {
            diags.push(d);
            let block = current.take().expect("present");
            broken.insert((block.kind(), block.name.text.clone()));
            skipping = true;
        }
    }
    blocks.extend(current);
    (blocks, broken)
}

struct Validator<'a> {
    diags: &'a mut Vec<Diagnostic>,
    broken: &'a HashSet<(Kind, String)>,
    /// Declared (or broken) names per kind, mapped to state labels for systems.
    systems: HashMap<String, Vec<String>>,
    dist_systems: HashMap<String, Option<String>>,
    channel_systems: HashMap<String, Option<String>>,
}

impl Validator<'_> {
    fn error(&mut self, d: Diagnostic) {
        self.diags.push(d);
    }

    fn warn(&mut self, tok: &Tok, message: impl Into<String>) {
        self.diags.push(tok.diag(Severity::Warning, message));
    }

    /// Reports an unresolved reference unless the target block failed to parse.
    fn unresolved(&mut self, kind: Kind, tok: &Tok) {
        if !self.broken.contains(&(kind, tok.text.clone())) {
            self.error(tok.error(format!("unknown {} `{}`", kind.noun(), excerpt(&tok.text))));
        }
    }

    fn check_normalized(&mut self, tok: &Tok, values: &[f64], what: &str) -> bool {
        if let Some(bad) = values.iter().find(|v| **v < 0.0) {
            self.error(tok.error(format!("{what} has negative entry {bad:?}")));
            return false;
        }
        let sum = compensated_sum(values.iter().copied());
        if !sum.is_finite() || (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            self.error(tok.error(format!("{what} sum to {}", show_sum(sum))));
            return false;
        }
        if (sum - 1.0).abs() > QUIET_NORMALIZATION {
            self.warn(tok, format!("{what} sum to {}; renormalized", show_sum(sum)));
        }
        true
    }

    fn system(&mut self, name: &Tok, raw: RawSystem) -> Option<SystemDecl> {
        let mut ok = true;
        let Some((states_key, labels)) = raw.states else {
            self.error(name.error(format!("system `{}` has no `states` line", name.text)));
            return None;
        };
        let mut index = HashMap::new();
        for (i, label) in labels.iter().enumerate() {
            if index.insert(label.text.clone(), i).is_some() {
                self.error(label.error(format!("duplicate state `{}`", label.text)));
                ok = false;
            }
        }
        let temperature = match raw.temperature {
            None => {
                self.error(name.error(format!("system `{}` has no `temperature` line", name.text)));
                ok = false;
                0.0
            }
            Some((tok, t)) if t <= 0.0 => {
                self.error(tok.error("temperature must be positive"));
                ok = false;
                t
            }
            Some((_, t)) => t,
        };
        let boltzmann = match raw.boltzmann {
            None => 1.0,
            Some((tok, k)) if k <= 0.0 => {
                self.error(tok.error("boltzmann constant must be positive"));
                ok = false;
                k
            }
            Some((_, k)) => k,
        };
        let mut energies = vec![0.0; labels.len()];
        let mut seen = HashSet::new();
        for (label, e) in raw.energies {
            match index.get(&label.text) {
                None => {
                    self.error(label.error(format!(
                        "energy for unknown state `{}` of system `{}`",
                        excerpt(&label.text),
                        name.text
                    )));
                    ok = false;
                }
                Some(&i) => {
                    if !seen.insert(i) {
                        self.error(label.error(format!("duplicate energy for state `{}`", label.text)));
                        ok = false;
                    }
                    energies[i] = e;
                }
            }
        }
        let _ = states_key;
        ok.then(|| SystemDecl {
            name: name.text.clone(),
            states: labels.into_iter().map(|t| t.text).collect(),
            temperature,
            boltzmann,
            energies,
        })
    }

    fn dist(&mut self, name: &Tok, raw: RawDist) -> Option<DistDecl> {
        let Some(over) = raw.over else {
            self.error(name.error(format!("distribution `{}` has no `over` line", name.text)));
            return None;
        };
        let Some((probs_key, probs)) = raw.probs else {
            self.error(name.error(format!("distribution `{}` has no `probs` line", name.text)));
            return None;
        };
        let Some(states) = self.systems.get(&over.text).cloned() else {
            self.unresolved(Kind::System, &over);
            return None;
        };
        if probs.len() != states.len() {
            self.error(probs_key.error(format!(
                "{} probabilities given but system `{}` has {} states",
                probs.len(),
                over.text,
                states.len()
            )));
            return None;
        }
        self.check_normalized(&probs_key, &probs, "probabilities")
            .then(|| DistDecl {
                name: name.text.clone(),
                system: over.text.clone(),
                probs,
            })
    }

    fn channel(&mut self, name: &Tok, raw: RawChannel) -> Option<ChannelDecl> {
        let Some(over) = raw.over else {
            self.error(name.error(format!("channel `{}` has no `over` line", name.text)));
            return None;
        };
        let Some(states) = self.systems.get(&over.text).cloned() else {
            self.unresolved(Kind::System, &over);
            return None;
        };
        let index: HashMap<&str, usize> = states.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let n = states.len();
        let mut rows: Vec<Option<Vec<f64>>> = vec![None; n];
        let mut ok = true;
        for from in raw.froms {
            let Some(&src) = index.get(from.source.text.as_str()) else {
                self.error(from.source.error(format!(
                    "unknown state `{}` of system `{}`",
                    excerpt(&from.source.text),
                    over.text
                )));
                ok = false;
                continue;
            };
            if rows[src].is_some() {
                self.error(from.source.error(format!("duplicate `from` line for state `{}`", from.source.text)));
                ok = false;
                continue;
            }
            let mut row = vec![0.0; n];
            let mut seen = HashSet::new();
            let mut row_ok = true;
            for (target, x) in &from.targets {
                match index.get(target.text.as_str()) {
                    None => {
                        self.error(target.error(format!(
                            "unknown state `{}` of system `{}`",
                            excerpt(&target.text),
                            over.text
                        )));
                        row_ok = false;
                    }
                    Some(&j) => {
                        if !seen.insert(j) {
                            self.error(target.error(format!("duplicate target `{}`", target.text)));
                            row_ok = false;
                        }
                        row[j] = *x;
                    }
                }
            }
            let what = format!("transition probabilities from `{}`", from.source.text);
            if row_ok && self.check_normalized(&from.key, &row, &what) {
                rows[src] = Some(row);
            } else {
                ok = false;
            }
        }
        if ok {
            let missing: Vec<_> = states
                .iter()
                .zip(&rows)
                .filter(|(_, r)| r.is_none())
                .map(|(s, _)| format!("`{s}`"))
                .collect();
            if !missing.is_empty() {
                self.error(name.error(format!(
                    "channel `{}` has no `from` line for state {}",
                    name.text,
                    missing.join(", ")
                )));
                ok = false;
            }
        }
        ok.then(|| ChannelDecl {
            name: name.text.clone(),
            system: over.text.clone(),
            rows: rows.into_iter().map(Option::unwrap_or_default).collect(),
        })
    }

    fn protocol(&mut self, name: &Tok, raw: Vec<(Tok, RawDirective)>) -> Option<ProtocolDecl> {
        let mut ok = true;
        // System of the current state, if it could be resolved.
        let mut state: Option<Option<String>> = None;
        let mut channel_applied = false;
        let mut reported = false;
        let mut directives = Vec::with_capacity(raw.len());
        for (key, raw) in raw {
            let needs_state = !matches!(raw, RawDirective::Start(_) | RawDirective::Report(_));
            if needs_state && state.is_none() {
                self.error(key.error(format!("`{}` before any `start` directive", key.text)));
                ok = false;
            }
            let directive = match raw {
                RawDirective::Start(dist) => {
                    match self.dist_systems.get(&dist.text).cloned() {
                        Some(sys) => state = Some(sys),
                        None => {
                            self.unresolved(Kind::Dist, &dist);
                            ok = false;
                            state = Some(None);
                        }
                    }
                    channel_applied = false;
                    Directive::Start(dist.text)
                }
                RawDirective::Apply(ch) => {
                    match self.channel_systems.get(&ch.text).cloned() {
                        None => {
                            self.unresolved(Kind::Channel, &ch);
                            ok = false;
                        }
                        Some(ch_sys) => {
                            if let (Some(Some(cur)), Some(ch_sys)) = (&state, &ch_sys) {
                                if cur != ch_sys {
                                    self.error(ch.error(format!(
                                        "channel `{}` acts on system `{ch_sys}` but the current state is over `{cur}`",
                                        ch.text
                                    )));
                                    ok = false;
                                }
                            }
                        }
                    }
                    channel_applied = true;
                    Directive::Apply(ch.text)
                }
                RawDirective::Evolve(steps) => {
                    if !channel_applied {
                        self.error(key.error("`evolve` needs a preceding `apply`"));
                        ok = false;
                    }
                    Directive::Evolve(steps)
                }
                RawDirective::Audit(steps) => {
                    if !channel_applied {
                        self.error(key.error("`audit` needs a preceding `apply`"));
                        ok = false;
                    }
                    if steps == 0 {
                        self.error(key.error("`audit` needs at least one step"));
                        ok = false;
                    }
                    Directive::Audit(steps)
                }
                RawDirective::Check => Directive::CheckCorrespondence,
                RawDirective::Bitop(tok, kind) => {
                    if let Some(Some(sys)) = &state {
                        let n = self.systems.get(sys).map_or(0, Vec::len);
                        let want = 1usize << kind.arity();
                        if n != want {
                            self.error(tok.error(format!(
                                "bit operation `{}` needs a {want}-state system, `{sys}` has {n}",
                                kind.name()
                            )));
                            ok = false;
                        }
                    }
                    Directive::Bitop(kind)
                }
                RawDirective::Report(fmt) => {
                    if reported {
                        self.warn(&key, "later `report` overrides an earlier one");
                    }
                    reported = true;
                    Directive::Report(fmt)
                }
            };
            directives.push(directive);
        }
        ok.then(|| ProtocolDecl {
            name: name.text.clone(),
            directives,
        })
    }
}

/// Parses and validates a document. On failure every error (and warning) is
/// returned, ordered by position.
pub fn parse(source: &str) -> Result<Parsed, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let (blocks, broken) = parse_blocks(source, &mut diags);

    // Name uniqueness per kind; later duplicates are dropped.
    let mut seen: HashSet<(Kind, String)> = HashSet::new();
    let mut unique = Vec::with_capacity(blocks.len());
    for block in blocks {
        let key = (block.kind(), block.name.text.clone());
        if seen.contains(&key) || broken.contains(&key) {
            diags.push(block.name.error(format!(
                "duplicate {} name `{}`",
                block.kind().noun(),
                block.name.text
            )));
        } else {
            seen.insert(key);
            unique.push(block);
        }
    }

    let mut validator = Validator {
        diags: &mut diags,
        broken: &broken,
        systems: HashMap::new(),
        dist_systems: HashMap::new(),
        channel_systems: HashMap::new(),
    };
    let mut doc = ProtocolSpec::default();

    // Systems first: everything else refers to them.
    let mut rest = Vec::new();
    for block in unique {
        match block.body {
            Body::System(raw) => {
                if let Some(sys) = validator.system(&block.name, raw) {
                    validator.systems.insert(sys.name.clone(), sys.states.clone());
                    doc.systems.push(sys);
                }
            }
            body => rest.push(Block { name: block.name, body }),
        }
    }
    let mut protocols = Vec::new();
    for block in rest {
        match block.body {
            Body::Dist(raw) => {
                let over = raw.over.as_ref().map(|t| t.text.clone());
                match validator.dist(&block.name, raw) {
                    Some(d) => {
                        validator.dist_systems.insert(d.name.clone(), Some(d.system.clone()));
                        doc.distributions.push(d);
                    }
                    None => {
                        // Known name, so protocols don't report it as unresolved.
                        validator.dist_systems.insert(block.name.text.clone(), over);
                    }
                }
            }
            Body::Channel(raw) => {
                let over = raw.over.as_ref().map(|t| t.text.clone());
                match validator.channel(&block.name, raw) {
                    Some(c) => {
                        validator.channel_systems.insert(c.name.clone(), Some(c.system.clone()));
                        doc.channels.push(c);
                    }
                    None => {
                        validator.channel_systems.insert(block.name.text.clone(), over);
                    }
                }
            }
            Body::Protocol(raw) => protocols.push((block.name, raw)),
            Body::System(_) => unreachable!("handled above"),
        }
    }
    // Broken dist/channel blocks are also known names.
    for (kind, name) in &broken {
        match kind {
            Kind::Dist => {
                validator.dist_systems.entry(name.clone()).or_insert(None);
            }
            Kind::Channel => {
                validator.channel_systems.entry(name.clone()).or_insert(None);
            }
            _ => {}
        }
    }
    for (name, raw) in protocols {
        if let Some(p) = validator.protocol(&name, raw) {
            doc.protocols.push(p);
        }
    }

    diags.sort_by_key(|d| (d.line, d.column));
    if diags.iter().any(|d| d.severity == Severity::Error) {
        Err(diags)
    } else {
        Ok(Parsed {
            document: doc,
            warnings: diags,
        })
    }
}

/// Like [`parse`], but reports invalid UTF-8 as a located diagnostic.
pub fn parse_bytes(bytes: &[u8]) -> Result<Parsed, Vec<Diagnostic>> {
    match std::str::from_utf8(bytes) {
        Ok(s) => parse(s),
        Err(e) => {
            let valid = std::str::from_utf8(&bytes[..e.valid_up_to()]).expect("valid prefix");
            let line = valid.matches('\n').count() + 1;
            let column = valid.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
            Err(vec![Diagnostic {
                severity: Severity::Error,
                line,
                column,
                message: "input is not valid UTF-8".into(),
                excerpt: String::new(),
            }])
        }
    }
}
