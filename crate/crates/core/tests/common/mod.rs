//! Shared helpers for the integration tests.
#![allow(dead_code)]

#[allow(unused_imports)]
pub use rdars_core::regression::{int_in as int, uniform_in as unif, Case};

pub fn case_with(seed: u64, l: usize, n: usize, a: usize, k: usize) -> Case {
    rdars_core::regression::case_with(seed, l, n, a, k).unwrap()
}

pub fn random_case(seed: u64) -> Case {
    rdars_core::regression::random_case(seed).unwrap()
}
