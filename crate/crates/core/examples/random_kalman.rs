//! Kalman decomposition of random systems with hidden class dimensions.

use lqss_kalman::factorization::FactorizationMode;
use lqss_kalman::kalman::{kalman_decompose, transfer_deviation, verify_decomposition, TRANSFER_FREQUENCIES};
use lqss_kalman::linalg::TolerancePolicy;
use lqss_kalman::model::{random_system, ClassDims, RandomOptions, ScatteringKind};

fn main() -> lqss_kalman::Result<()> {
    let policy = TolerancePolicy::default();
    let cases = [(ClassDims { k: 2, l: 1, d: 1 }, 1), (ClassDims { k: 0, l: 2, d: 1 }, 1), (ClassDims { k: 1, l: 2, d: 2 }, 2)];
    for (seed, &(dims, m)) in cases.iter().enumerate() {
        let options = RandomOptions {
            scattering: ScatteringKind::Exponential,
            structure: Some(dims),
        };
        let sys = random_system(dims.modes(), m, seed as u64, options)?;
        let dec = kalman_decompose(&sys, &policy, FactorizationMode::Strict)?;
        let report = verify_decomposition(&sys, &dec, 1e-8);
        println!(
            "hidden {:?} -> found {:?}; verification {}; transfer deviation {:.2e}",
            dims,
            dec.dims,
            if report.passed() { "passed" } else { "FAILED" },
            transfer_deviation(&sys, &dec, &TRANSFER_FREQUENCIES)
        );
    }
    Ok(())
}
