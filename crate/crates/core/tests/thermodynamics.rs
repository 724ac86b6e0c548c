mod common;

use std::f64::consts::LN_2;

use common::{dist, landscape};
use proptest::prelude::*;
use thermobit::thermo::{
    available_free_energy, check_szilard_landauer, free_energy, gibbs_distribution, log_partition_function,
    BOLTZMANN_SI,
};
use thermobit::{Distribution, EnergyLandscape};

#[test]
fn known_bit_at_equal_energies() {
    for (t, kb) in [(1.0, 1.0), (300.0, BOLTZMANN_SI), (0.5, 2.0)] {
        let land = EnergyLandscape::flat(2, t, kb).unwrap();
        let r = check_szilard_landauer(&land, &Distribution::new(vec![1.0, 0.0]).unwrap()).unwrap();
        assert!(r.passed);
        assert!((r.available - kb * t * LN_2).abs() <= 1e-15 * kb * t);
        assert_eq!(r.divergence.nats(), LN_2);
    }
}

#[test]
fn gibbs_input_has_nothing_available() {
    let land = EnergyLandscape::new(vec![0.0, 1.0, 3.0], 1.5, 1.0).unwrap();
    let r = check_szilard_landauer(&land, &gibbs_distribution(&land)).unwrap();
    assert!(r.passed);
    assert!(r.available.abs() < 1e-15);
}

#[test]
fn si_units_underflow_does_not_break_the_identity() {
    // Energies of a few eV at room temperature: exp(-E/kT) underflows.
    let ev = 1.602_176_634e-19;
    let land = EnergyLandscape::new(vec![0.0, 30.0 * ev, 60.0 * ev], 300.0, BOLTZMANN_SI).unwrap();
    let p = Distribution::new(vec![0.2, 0.3, 0.5]).unwrap();
    let r = check_szilard_landauer(&land, &p).unwrap();
    assert!(r.passed, "{r:?}");
    assert!(r.divergence.is_finite());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn correspondence_holds(
        (land, p) in (1usize..=64).prop_flat_map(|n| (landscape(n, 1.0), dist(n)))
    ) {
        let r = check_szilard_landauer(&land, &p).unwrap();
        prop_assert!(r.residual <= 1e-12 * r.scale, "{:?}", r);
        prop_assert!(r.gibbs_residual <= 1e-12 * r.scale);
        prop_assert!(r.available >= -1e-12 * r.scale);
        prop_assert!(r.passed);
    }

    #[test]
    fn correspondence_holds_in_si_units(
        (land, p) in (1usize..=16).prop_flat_map(|n| {
            (prop::collection::vec(-4e-20f64..4e-20, n), 1.0f64..1000.0, dist(n))
        }).prop_map(|(e, t, p)| (EnergyLandscape::new(e, t, BOLTZMANN_SI).unwrap(), p))
    ) {
        let r = check_szilard_landauer(&land, &p).unwrap();
        prop_assert!(r.passed, "{:?}", r);
    }

    #[test]
    fn gibbs_minimizes_free_energy(
        (land, p) in (1usize..=32).prop_flat_map(|n| (landscape(n, 1.0), dist(n)))
    ) {
        let f_p = free_energy(&land, &p).unwrap();
        let f_pi = free_energy(&land, &gibbs_distribution(&land)).unwrap();
        prop_assert!(f_p >= f_pi - 1e-12 * f_p.abs().max(1.0));
        let f_z = -land.thermal_energy() * log_partition_function(&land);
        prop_assert!((f_pi - f_z).abs() <= 1e-12 * f_pi.abs().max(1.0));
    }

    #[test]
    fn energy_shift_moves_free_energy_but_not_gibbs(
        (land, p, c) in (1usize..=16).prop_flat_map(|n| (landscape(n, 1.0), dist(n), -50.0f64..50.0))
    ) {
        let shifted = land.shifted(c).unwrap();
        let g0 = gibbs_distribution(&land);
        let g1 = gibbs_distribution(&shifted);
        prop_assert!(g0.max_abs_diff(&g1) < 1e-12);
        let df = free_energy(&shifted, &p).unwrap() - free_energy(&land, &p).unwrap();
        prop_assert!((df - c).abs() < 1e-10);
        let a0 = available_free_energy(&land, &p).unwrap();
        let a1 = available_free_energy(&shifted, &p).unwrap();
        prop_assert!((a0 - a1).abs() < 1e-10);
    }

    #[test]
    fn gibbs_is_a_distribution(land in (1usize..=64).prop_flat_map(|n| landscape(n, 1.0))) {
        let g = gibbs_distribution(&land);
        let s: f64 = g.probs().iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
        prop_assert!(g.probs().iter().all(|&x| x >= 0.0));
    }
}
