#![allow(dead_code)]

use lqss_kalman::linalg::Mat;
use lqss_kalman::model::{random_orthogonal_symplectic, random_symplectic};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Mat {
    gaussian(rng, n, n).qr().q()
}

/// Well-conditioned random symplectic matrix of size 2r.
pub fn random_sympl(rng: &mut ChaCha8Rng, r: usize) -> Mat {
    random_orthogonal_symplectic(rng, r) * random_symplectic(rng, r, 0.25)
}

/// `F = Q E Z⁻¹` with prescribed k and l, random orthogonal Q and symplectic Z.
pub fn structured_f(rng: &mut ChaCha8Rng, s: usize, r: usize, k: usize, l: usize) -> Mat {
    assert!(k + l <= r && 2 * k + l <= s);
    let mut e = Mat::zeros(s, 2 * r);
    for i in 0..k {
        let xi = 0.5 + rng.gen::<f64>() * 2.0;
        e[(i, i)] = xi;
        e[(k + l + i, r + i)] = xi;
    }
    for j in 0..l {
        e[(k + j, k + j)] = 1.0;
    }
    let q = random_orthogonal(rng, s);
    let z = random_sympl(rng, r);
    let z_inv = z.clone().try_inverse().unwrap();
    // Scale Q columns a little so the Ξ values are not all equal to E's.
    q * e * z_inv
}

use lqss_kalman::model::{random_system, ClassDims, QuadratureSystem, RandomOptions, ScatteringKind};

/// Seeded random systems with n ≤ 5, m ≤ 3; three in four carry hidden class dimensions.
pub fn system_population(count: u64, base_seed: u64) -> Vec<(String, QuadratureSystem, Option<ClassDims>)> {
    (0..count)
        .map(|i| {
            let seed = base_seed + i;
            let mut g = rng(seed ^ 0x5eed);
            let n = g.gen_range(1..=5);
            let m = g.gen_range(1..=3);
            let scattering = if g.gen_bool(0.5) {
                ScatteringKind::Identity
            } else {
                ScatteringKind::Exponential
            };
            let structure = if i % 4 == 0 {
                None
            } else {
                let k = g.gen_range(0..=n);
                let l = g.gen_range(0..=(n - k).min(2 * m));
                Some(ClassDims { k, l, d: n - k - l })
            };
            let sys = random_system(n, m, seed, RandomOptions { scattering, structure }).unwrap();
            (format!("seed={seed} n={n} m={m} dims={structure:?}"), sys, structure)
        })
        .collect()
}
