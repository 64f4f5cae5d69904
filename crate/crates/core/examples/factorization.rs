//! One-sided symplectic SVD `F = Q E Z⁻¹` and its verification.

use lqss_kalman::factorization::{one_sided_symplectic_svd, rank_oracles, verify_factorization, FactorizationMode};
use lqss_kalman::linalg::{Mat, TolerancePolicy};

fn main() -> lqss_kalman::Result<()> {
    // Rows: a symplectic pair (q₁, p₁), an isotropic direction q₂ and a copy of q₁ + q₂.
    let f = Mat::from_row_slice(4, 6, &[
        1.0, 0.0, 0.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, 2.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, 0.0, 0.0, 0.0, //
        1.0, 1.0, 0.0, 0.0, 0.0, 0.0,
    ]);
    let policy = TolerancePolicy::default();
    for mode in [FactorizationMode::Strict, FactorizationMode::Relaxed] {
        let fact = one_sided_symplectic_svd(&f, &policy, mode)?;
        println!("{mode:?}: k = {}, l = {}, d = {}", fact.e.k, fact.e.l, fact.e.d());
        println!("E ={:.4}", fact.e.to_matrix());
        println!("‖FZ − QE‖ = {:.2e}, cond(Z) = {:.3}", fact.residual, fact.z_condition);
        for check in verify_factorization(&f, &fact, 1e-10).checks {
            println!("  {:<24} {:.2e} ≤ {:.2e}  {}", check.name, check.value, check.bound, check.passed);
        }
    }
    println!("oracles (k, l) = {:?}", rank_oracles(&f, &policy));
    Ok(())
}
