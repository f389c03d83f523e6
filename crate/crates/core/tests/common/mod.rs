#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use qspec::EmitterModel;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Random Hermitian model with entries in [-3, 3] and the given rate, every
/// eigenvector carrying more than `min_overlap` of `|gamma>`.
pub fn random_model(seed: u64, n: usize, rate: f64, min_overlap: f64) -> EmitterModel {
    let mut r = StdRng::seed_from_u64(seed);
    loop {
        let mut h = DMatrix::<C64>::zeros(n, n);
        for i in 0..n {
            h[(i, i)] = C64::new(r.gen_range(-3.0..3.0), 0.0);
            for j in 0..i {
                let z = C64::new(r.gen_range(-1.5..1.5), r.gen_range(-1.5..1.5));
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
            }
        }
        let g = DVector::from_fn(n, |_, _| C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)));
        let g = &g / C64::new(g.norm(), 0.0);
        let m = EmitterModel::new(h * C64::new(rate, 0.0), g, rate).unwrap();
        if m.spectral().overlaps().iter().all(|&o| o > min_overlap) {
            return m;
        }
    }
}
