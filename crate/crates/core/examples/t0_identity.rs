//! The observability matrix is a fixed symplectic image of the ♯-adjoint of the
//! controllability matrix.

use lqss_kalman::linalg::sharp_adjoint;
use lqss_kalman::model::{krylov_matrices, random_system, t0_matrix, KrylovVariant, RandomOptions, ScatteringKind};

fn main() -> lqss_kalman::Result<()> {
    for seed in 0..5 {
        let options = RandomOptions {
            scattering: ScatteringKind::Exponential,
            structure: None,
        };
        let sys = random_system(3, 2, seed, options)?;
        let km = krylov_matrices(&sys, KrylovVariant::Hamiltonian);
        let t0 = t0_matrix(sys.modes(), sys.fields(), sys.d())?;
        let rhs = t0 * sharp_adjoint(&km.controllability)?;
        let rel = (&km.observability - rhs).norm() / km.observability.norm();
        println!("seed {seed}: ‖Õ − T₀C̃♯‖/‖Õ‖ = {rel:.2e}");
    }
    Ok(())
}
