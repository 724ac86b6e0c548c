use std::fmt::Write;

use super::{Directive, ProtocolSpec};

/// Prints a document in canonical form: systems, distributions, channels, then
/// protocols, one blank line between blocks.
pub fn format_document(doc: &ProtocolSpec) -> String {
    let mut blocks: Vec<String> = Vec::new();

    for sys in &doc.systems {
        let mut b = format!("system {}\n  states {}\n", sys.name, sys.states.join(" "));
        writeln!(b, "  temperature {:?}", sys.temperature).unwrap();
        if sys.boltzmann != 1.0 {
            writeln!(b, "  boltzmann {:?}", sys.boltzmann).unwrap();
        }
        for (label, e) in sys.states.iter().zip(&sys.energies) {
            // Negative zero is kept so the round trip is exact.
            if *e != 0.0 || e.is_sign_negative() {
                writeln!(b, "  energy {label} {e:?}").unwrap();
            }
        }
        blocks.push(b);
    }

    for dist in &doc.distributions {
        let probs: Vec<String> = dist.probs.iter().map(|p| format!("{p:?}")).collect();
        blocks.push(format!(
            "dist {}\n  over {}\n  probs {}\n",
            dist.name,
            dist.system,
            probs.join(" ")
        ));
    }

    for ch in &doc.channels {
        let mut b = format!("channel {}\n  over {}\n", ch.name, ch.system);
        let states = doc.system(&ch.system).map(|s| s.states.as_slice());
        let label = |i: usize| -> String {
            states
                .and_then(|s| s.get(i))
                .cloned()
                .unwrap_or_else(|| format!("s{i}"))
        };
        for (i, row) in ch.rows.iter().enumerate() {
            write!(b, "  from {}:", label(i)).unwrap();
            let mut any = false;
            for (j, x) in row.iter().enumerate() {
                if *x != 0.0 {
                    write!(b, " {} {x:?}", label(j)).unwrap();
                    any = true;
                }
            }
            if !any {
                // An all-zero row never validates, but print something parseable.
                write!(b, " {} 0.0", label(i)).unwrap();
            }
            b.push('\n');
        }
        blocks.push(b);
    }

    for proto in &doc.protocols {
        let mut b = format!("protocol {}\n", proto.name);
        for d in &proto.directives {
            let line = match d {
                Directive::Start(name) => format!("start {name}"),
                Directive::Apply(name) => format!("apply {name}"),
                Directive::Evolve(n) => format!("evolve {n}"),
                Directive::CheckCorrespondence => "check-correspondence".to_owned(),
                Directive::Audit(n) => format!("audit {n}"),
                Directive::Bitop(kind) => format!("bitop {}", kind.name()),
                Directive::Report(fmt) => format!("report {}", fmt.name()),
            };
            writeln!(b, "  {line}").unwrap();
        }
        blocks.push(b);
    }

    blocks.join("\n")
}
