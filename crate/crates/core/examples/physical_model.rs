//! Building a system from physical data and computing its Krylov subspaces.
//!
//! Two modes: the first is damped through `L = √κ a₁`, the second is coupled
//! to the first by a beam-splitter Hamiltonian and has no channel of its own.

use lqss_kalman::linalg::{Mat, TolerancePolicy};
use lqss_kalman::model::{krylov_matrices, structural_subspaces, CMat, KrylovVariant, PhysicalSpec, QuadratureSystem};
use nalgebra::Complex;

fn main() -> lqss_kalman::Result<()> {
    let kappa: f64 = 0.8;
    let g = 0.3;
    // a₁ = (q₁ + i p₁)/√2
    let amp = (kappa / 2.0).sqrt();
    let mut lq = CMat::zeros(1, 2);
    let mut lp = CMat::zeros(1, 2);
    lq[(0, 0)] = Complex::new(amp, 0.0);
    lp[(0, 0)] = Complex::new(0.0, amp);
    let spec = PhysicalSpec::with_identity_scattering(lq, lp)?;

    // H = g (q₁q₂ + p₁p₂), x = (q₁, q₂, p₁, p₂)
    let mut r = Mat::zeros(4, 4);
    for (i, j) in [(0, 1), (2, 3)] {
        r[(i, j)] = g;
        r[(j, i)] = g;
    }
    let sys = QuadratureSystem::from_physical(r, &spec)?;
    println!("A ={:.4}B ={:.4}C ={:.4}D ={:.4}", sys.a(), sys.b(), sys.c(), sys.d());

    let km = krylov_matrices(&sys, KrylovVariant::Hamiltonian);
    println!("controllability matrix is {}×{}", km.controllability.nrows(), km.controllability.ncols());

    let sub = structural_subspaces(&sys, KrylovVariant::Hamiltonian, &TolerancePolicy::default());
    println!(
        "dim controllable = {}, dim observable = {}, dim unobservable = {}",
        sub.controllable.dim(),
        sub.observable.dim(),
        sub.unobservable().dim()
    );
    Ok(())
}
