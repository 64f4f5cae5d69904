//! The symplectic form, the ♯-adjoint and a symplectic change of coordinates.

use lqss_kalman::linalg::{is_symplectic, jmat, orthogonality_residual, sharp_adjoint, Mat};
use lqss_kalman::model::{random_orthogonal_symplectic, random_symplectic};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> lqss_kalman::Result<()> {
    let j = jmat(2)?;
    println!("J_4 ={j:.0}");

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let t = random_symplectic(&mut rng, 2, 0.5);
    let check = is_symplectic(&t, 1e-12)?;
    println!("random T: symplectic = {}, ‖TJTᵀ − J‖ = {:.2e}", check.symplectic, check.residual);

    // For symplectic T the ♯-adjoint is the inverse.
    let t_sharp = sharp_adjoint(&t)?;
    println!("‖T♯T − I‖ = {:.2e}", (&t_sharp * &t - Mat::identity(4, 4)).norm());

    let w = random_orthogonal_symplectic(&mut rng, 2);
    println!("orthogonal symplectic W: ‖WᵀW − I‖ = {:.2e}", orthogonality_residual(&w));

    let scaled = &t * 1.1;
    println!("1.1·T symplectic? {}", is_symplectic(&scaled, 1e-12)?.symplectic);
    Ok(())
}
