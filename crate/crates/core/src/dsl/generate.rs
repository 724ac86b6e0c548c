use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ChannelDecl, Directive, DistDecl, ProtocolDecl, ProtocolSpec, ReportFormat, SystemDecl};
use crate::bitops::BitOpKind;

fn ident(rng: &mut ChaCha8Rng, prefix: &str, i: usize) -> String {
    const TAIL: &[u8] = b"abcxyzXY019_.-";
    let extra: String = (0..rng.gen_range(0..4)).map(|_| *TAIL.choose(rng).unwrap() as char).collect();
    format!("{prefix}{i}{extra}")
}

fn weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n)
        .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..1.0) })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.gen_range(0..n)] = 1.0;
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

/// A random valid document, reproducible from `seed`. Used for round-trip
/// and fuzz testing.
pub fn generate_document(seed: u64) -> ProtocolSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut doc = ProtocolSpec::default();
    for s in 0..rng.gen_range(1..4) {
        let n = *[1usize, 2, 3, 4, 6].choose(&mut rng).unwrap();
        let energy = |rng: &mut ChaCha8Rng| match rng.gen_range(0..4) {
            0 => 0.0,
            1 => rng.gen_range(-100i32..100) as f64,
            _ => rng.gen_range(-10.0..10.0),
        };
        doc.systems.push(SystemDecl {
            name: ident(&mut rng, "sys", s),
            states: (0..n).map(|i| format!("s{i}")).collect(),
            temperature: rng.gen_range(0.01..100.0),
            boltzmann: if rng.gen_bool(0.5) { 1.0 } else { rng.gen_range(1e-24..1e-22) },
            energies: (0..n).map(|_| energy(&mut rng)).collect(),
        });
    }
    for d in 0..rng.gen_range(1..5) {
        let sys = doc.systems.choose(&mut rng).unwrap();
        doc.distributions.push(DistDecl {
            name: ident(&mut rng, "d", d),
            system: sys.name.clone(),
            probs: weights(&mut rng, sys.states.len()),
        });
    }
    for c in 0..rng.gen_range(0..4) {
        let sys = doc.systems.choose(&mut rng).unwrap().clone();
        let n = sys.states.len();
        doc.channels.push(ChannelDecl {
            name: ident(&mut rng, "k", c),
            system: sys.name,
            rows: (0..n).map(|_| weights(&mut rng, n)).collect(),
        });
    }
    for p in 0..rng.gen_range(0..3) {
        let start = doc.distributions.choose(&mut rng).unwrap().clone();
        let n = doc.system(&start.system).unwrap().states.len();
        let mut directives = vec![Directive::Start(start.name)];
        let channels: Vec<String> =
            doc.channels.iter().filter(|c| c.system == start.system).map(|c| c.name.clone()).collect();
        let mut applied = false;
        for _ in 0..rng.gen_range(0..6) {
            match rng.gen_range(0..4) {
                0 if !channels.is_empty() => {
                    directives.push(Directive::Apply(channels.choose(&mut rng).unwrap().clone()));
                    applied = true;
                }
                1 if applied => directives.push(Directive::Evolve(rng.gen_range(0..20))),
                2 if applied => directives.push(Directive::Audit(rng.gen_range(1..20))),
                3 if n == 2 || n == 4 => {
                    let ops: Vec<BitOpKind> =
                        BitOpKind::ALL.into_iter().filter(|k| 1 << k.arity() == n).collect();
                    directives.push(Directive::Bitop(*ops.choose(&mut rng).unwrap()));
                }
                _ => directives.push(Directive::CheckCorrespondence),
            }
        }
        if rng.gen_bool(0.5) {
            let fmt = *[ReportFormat::Table, ReportFormat::Json, ReportFormat::Csv].choose(&mut rng).unwrap();
            directives.push(Directive::Report(fmt));
        }
        doc.protocols.push(ProtocolDecl {
            name: ident(&mut rng, "p", p),
            directives,
        });
    }
    doc
}
