// Shared strategies, included with `mod common;`.
#![allow(dead_code)]

use proptest::prelude::*;
use thermobit::{Channel, Distribution, EnergyLandscape};

/// Weights with occasional exact zeros, normalized.
pub fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 1e-6f64..1.0], n).prop_map(|mut w| {
        if w.iter().all(|&x| x == 0.0) {
            w[0] = 1.0;
        }
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    })
}

pub fn dist(n: usize) -> impl Strategy<Value = Distribution> {
    weights(n).prop_map(|w| Distribution::new(w).unwrap())
}

pub fn positive_dist(n: usize) -> impl Strategy<Value = Distribution> {
    prop::collection::vec(1e-3f64..1.0, n).prop_map(|w| {
        let s: f64 = w.iter().sum();
        Distribution::new(w.into_iter().map(|x| x / s).collect()).unwrap()
    })
}

pub fn channel(n: usize) -> impl Strategy<Value = Channel> {
    prop::collection::vec(weights(n), n).prop_map(|rows| Channel::from_rows(rows).unwrap())
}

pub fn landscape(n: usize, boltzmann: f64) -> impl Strategy<Value = EnergyLandscape> {
    (prop::collection::vec(-10.0f64..10.0, n), 0.1f64..10.0)
        .prop_map(move |(e, t)| EnergyLandscape::new(e, t, boltzmann).unwrap())
}

pub fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}
