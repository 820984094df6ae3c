#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use ris_eem::channel::ChannelSet;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cn(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| cn(rng))
}

pub fn vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<Complex64> {
    DVector::from_fn(n, |_, _| cn(rng))
}

/// `X X^H + I`.
pub fn positive_definite(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<Complex64> {
    let x = matrix(rng, n, n);
    &x * x.adjoint() + DMatrix::identity(n, n)
}

pub fn channels(rng: &mut ChaCha8Rng, users: usize, antennas: usize, elements: usize) -> ChannelSet {
    ChannelSet {
        h_d: matrix(rng, users, antennas),
        h_br: matrix(rng, elements, antennas),
        h_ru_h: matrix(rng, users, elements),
        topology: None,
    }
}

pub fn powers(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.random_range(0.05..3.0)).collect()
}

pub fn max_abs(a: &DMatrix<Complex64>) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}
