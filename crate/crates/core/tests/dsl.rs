use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermobit::dsl::{format_document, generate_document as generate, parse, parse_bytes};

const EXAMPLE: &str = "system bit
  states zero one
  temperature 1

dist known
  over bit
  probs 1 0

channel mix
  over bit
  from zero: zero 0.75 one 0.25
  from one: zero 0.25 one 0.75

protocol demo
  start known
  check-correspondence
  apply mix
  evolve 10
  audit 50
  bitop erase
  report json
";

#[test]
fn example_document_round_trips() {
    let doc = parse(EXAMPLE).unwrap().document;
    let printed = format_document(&doc);
    assert_eq!(parse(&printed).unwrap().document, doc);
    assert_eq!(format_document(&parse(&printed).unwrap().document), printed);
}

#[test]
fn generated_documents_round_trip() {
    for seed in 0..1000 {
        let doc = generate(seed);
        let printed = format_document(&doc);
        let back = parse(&printed).unwrap_or_else(|d| panic!("seed {seed}: {d:?}\n{printed}"));
        assert_eq!(back.document, doc, "seed {seed}\n{printed}");
        assert_eq!(format_document(&back.document), printed);
    }
}

#[test]
fn errors_are_located_and_all_reported() {
    let src = "system a\n  states x y\n  temperature -1\n\ndist d\n  over nowhere\n  probs 0.5 0.5\n";
    let diags = parse(src).unwrap_err();
    assert!(diags.len() >= 2, "{diags:?}");
    assert_eq!((diags[0].line, diags[0].column), (3, 15));
    assert!(diags.iter().any(|d| d.line == 6));
}

#[test]
fn invalid_utf8_is_a_diagnostic() {
    let diags = parse_bytes(b"system a\n  states \xff\n").unwrap_err();
    assert_eq!((diags[0].line, diags[0].column), (2, 10));
}

fn check_bounds(bytes: &[u8]) {
    let text = String::from_utf8_lossy(bytes);
    let lines: Vec<&str> = text.split('\n').collect();
    let first = parse_bytes(bytes);
    if let Err(diags) = &first {
        assert!(!diags.is_empty());
        for d in diags {
            assert!(d.line >= 1 && d.line <= lines.len(), "{d:?}");
            assert!(d.column >= 1 && d.column <= lines[d.line - 1].chars().count() + 1, "{d:?}");
        }
    }
    assert_eq!(first, parse_bytes(bytes));
}

#[test]
fn mutated_documents_never_panic() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for seed in 0..200 {
        let base = format_document(&generate(seed)).into_bytes();
        for _ in 0..50 {
            let mut bytes = base.clone();
            for _ in 0..rng.gen_range(1..6) {
                let at = rng.gen_range(0..=bytes.len());
                match rng.gen_range(0..3) {
                    0 if at < bytes.len() => {
                        bytes.remove(at);
                    }
                    1 if at < bytes.len() => bytes[at] = rng.gen(),
                    _ => bytes.insert(at, *b" \n\t:#-.0123456789eaxz".choose(&mut rng).unwrap()),
                }
            }
            check_bounds(&bytes);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn random_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..300)) {
        check_bounds(&bytes);
    }

    #[test]
    fn random_text_never_panics(text in "[a-z0-9 .:#\\-\n\t]{0,300}") {
        check_bounds(text.as_bytes());
    }
}
