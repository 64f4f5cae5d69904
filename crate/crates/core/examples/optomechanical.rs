//! The three-mode optomechanical system: decomposition, then refinement to
//! orthogonal coordinates.

use lqss_kalman::factorization::FactorizationMode;
use lqss_kalman::kalman::{classify_states, from_transform, kalman_decompose, refine, ClassicalBlock};
use lqss_kalman::linalg::TolerancePolicy;
use lqss_kalman::optomech::OptomechParams;

fn main() -> lqss_kalman::Result<()> {
    let p = OptomechParams::new(1.0, 1.0, 1.0)?;
    println!("a = {} b = {}", p.a(), p.b());
    let sys = p.system();
    let policy = TolerancePolicy::default();

    let dec = kalman_decompose(&sys, &policy, FactorizationMode::Strict)?;
    println!("computed: k={} l={} d={}", dec.dims.k, dec.dims.l, dec.dims.d);
    for s in classify_states(&dec) {
        println!("  {} {:<4} {:?}", s.name, s.label.to_string(), s.row.iter().map(|x| (x * 1e6).round() / 1e6).collect::<Vec<_>>());
    }

    let reference = from_transform(&sys, &p.reference_transform(), &policy)?;
    let refined = refine(&reference, &reference.e, &p.reference_refinement())?;
    println!("refined V' ={:.4}", refined.v);
    println!("Â' ={:.4}", refined.a_hat);
    println!("B̂' ={:.4}", refined.b_hat);
    println!("co block of Â' ={:.4}", refined.classical_block(ClassicalBlock::ACo));
    Ok(())
}
