use std::f64::consts::LN_2;

use proptest::prelude::*;
use thermobit::bitops::{BitOpKind, BitOps, BitPairState, BitState, Direction, LedgerState, Mode};
use thermobit::engine::{
    convergence_table, demon_cycle, isothermal_work, isothermal_work_exact, EngineConfig, Measurement,
};
use thermobit::thermo::BOLTZMANN_SI;

fn ledger(kind: BitOpKind, t: f64, kb: f64) -> thermobit::bitops::OpLedger {
    let ops = BitOps::new(Mode::Strict, t, kb).unwrap();
    ops.apply(kind, &kind.nominal_input()).unwrap().1
}

#[test]
fn entropy_changes_of_the_nominal_operations() {
    use BitOpKind::*;
    for (kind, dh) in [
        (Erase, -LN_2),
        (CopySzilard, -LN_2),
        (CopyLandauer, 0.0),
        (Not, 0.0),
        (Switch01, 0.0),
        (Switch10, 0.0),
        (Randomize, LN_2),
    ] {
        assert_eq!(ledger(kind, 1.0, 1.0).delta_h.nats(), dh, "{}", kind.name());
    }
}

#[test]
fn energy_bounds_of_the_nominal_operations() {
    use BitOpKind::*;
    for (t, kb) in [(1.0, 1.0), (300.0, BOLTZMANN_SI), (2.5, 0.4)] {
        let kt = kb * t;
        for (kind, bound, dir) in [
            (Erase, kt * LN_2, Direction::CostsAtLeast),
            (CopySzilard, kt * LN_2, Direction::CostsAtLeast),
            (CopyLandauer, 0.0, Direction::Free),
            (Not, 0.0, Direction::Free),
            (Switch01, 0.0, Direction::Free),
            (Switch10, 0.0, Direction::Free),
            (Randomize, -kt * LN_2, Direction::YieldsAtMost),
        ] {
            let l = ledger(kind, t, kb);
            assert!((l.min_energy - bound).abs() <= 1e-15 * kt, "{} {}", kind.name(), l.min_energy);
            assert_eq!(l.direction, dir, "{}", kind.name());
        }
    }
}

#[test]
fn strict_mode_rejects_inputs_outside_the_contract() {
    let ops = BitOps::new(Mode::Strict, 1.0, 1.0).unwrap();
    assert!(ops.erase(&BitState::zero()).is_err());
    let correlated = BitPairState::from_probs([0.5, 0.0, 0.0, 0.5]).unwrap();
    assert!(ops.copy_szilard(&correlated).is_err());
    assert!(ops.apply(BitOpKind::Erase, &LedgerState::Pair(correlated)).is_err());
}

#[test]
fn erasing_a_biased_bit_costs_its_missing_entropy() {
    let ops = BitOps::new(Mode::Lenient, 1.0, 1.0).unwrap();
    let b = BitState::from_prob_zero(0.75).unwrap();
    let (_, l) = ops.erase(&b).unwrap();
    let h = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
    assert!((l.delta_h.nats() + h).abs() < 1e-15);
    assert!(l.min_energy < LN_2);
}

#[test]
fn szilard_work_converges_at_second_order() {
    let cfg = EngineConfig::natural();
    let w = isothermal_work(&cfg.with_steps(1_000_000).unwrap(), 1.0, 0.5).unwrap();
    assert!((w - LN_2).abs() <= 1e-9);
    let rows = convergence_table(&cfg, 2.0, &[160, 80, 40, 20, 10]).unwrap();
    for pair in rows.windows(2) {
        let ratio = pair[1].abs_error / pair[0].abs_error;
        assert!((3.8..=4.2).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn demon_cycles_balance() {
    let cfg = EngineConfig::natural();
    let szilard = demon_cycle(&cfg, Measurement::SzilardCopy).unwrap();
    assert!(szilard.net_work >= 0.0);
    let landauer = demon_cycle(&cfg, Measurement::LandauerCopy).unwrap();
    assert!((landauer.net_info + LN_2).abs() < 1e-15);
    assert!((landauer.net_work - cfg.thermal_energy() * landauer.net_info).abs() < 1e-15);
    for m in [Measurement::SzilardCopy, Measurement::LandauerCopy, Measurement::None] {
        assert!(demon_cycle(&cfg, m).unwrap().unaccounted_work(&cfg) >= -1e-15);
    }
}

proptest! {
    #[test]
    fn ledgers_are_consistent(p0 in 0.0f64..=1.0, t in 0.1f64..10.0) {
        let ops = BitOps::new(Mode::Lenient, t, 1.0).unwrap();
        let b = BitState::from_prob_zero(p0).unwrap();
        for kind in [BitOpKind::Erase, BitOpKind::Not, BitOpKind::Randomize] {
            let (_, l) = ops.apply(kind, &LedgerState::Bit(b.clone())).unwrap();
            // Against a uniform equilibrium, information gained is entropy lost.
            prop_assert!((l.delta_d.nats() + l.delta_h.nats()).abs() < 1e-14);
            prop_assert!((l.min_energy - t * l.delta_d.nats()).abs() < 1e-13 * t);
        }
    }

    #[test]
    fn compression_work_matches_the_log_ratio(ratio in 1.0f64..16.0, t in 0.1f64..10.0) {
        let cfg = EngineConfig::new(t, 1.0, 1.0, 100_000).unwrap();
        let w = isothermal_work(&cfg, 1.0, 1.0 / ratio).unwrap();
        let exact = isothermal_work_exact(&cfg, 1.0, 1.0 / ratio);
        prop_assert!((w - exact).abs() < 1e-8 * t);
    }
}
