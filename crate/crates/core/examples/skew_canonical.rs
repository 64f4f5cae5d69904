//! Orthogonal reduction of a skew-symmetric matrix to 2×2 blocks μ J₂.

use lqss_kalman::linalg::{skew_canonical, Mat, TolerancePolicy};

fn main() -> lqss_kalman::Result<()> {
    // Rank 4 skew matrix in ℝ⁵.
    let g = Mat::from_row_slice(5, 2, &[1.0, 0.0, 0.5, 1.0, -1.0, 2.0, 0.0, 1.0, 2.0, 0.0]);
    let h = Mat::from_row_slice(5, 2, &[0.0, 1.0, 1.0, 0.0, 0.3, -1.0, 1.0, 1.0, 0.0, 2.0]);
    let m = &g * h.transpose() - &h * g.transpose();

    let form = skew_canonical(&m, &TolerancePolicy::default())?;
    println!("k = {}, μ = {:?}", form.k, form.mus);
    println!("block form ={:.4}", form.block_form());
    println!("‖U B Uᵀ − M‖ = {:.2e}", (form.reconstruct() - &m).norm());
    let (u, v) = form.pair(0);
    println!("u₁ᵀ M v₁ = {:.6} (μ₁ = {:.6})", (u.transpose() * &m * v)[(0, 0)], form.mus[0]);
    println!("kernel dimension = {}", form.kernel().ncols());
    Ok(())
}
