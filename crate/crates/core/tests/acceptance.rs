mod common;

use std::io::Write;
use std::time::Instant;

use common::*;
use lqss_kalman::factorization::{one_sided_symplectic_svd, rank_oracles, verify_factorization, FactorizationMode};
use lqss_kalman::kalman::{
    from_transform, kalman_decompose, labelled_span, pattern_bound, pattern_residual, refine, transfer_deviation,
    KalmanDecomposition, StateLabel, TRANSFER_FREQUENCIES,
};
use lqss_kalman::linalg::{jmat, orthogonality_residual, sharp_adjoint, subspace_distance, Mat, SubspaceBasis, TolerancePolicy};
use lqss_kalman::model::{
    krylov_matrices, structural_subspaces, t0_matrix, ClassDims, CMat, KrylovVariant, PhysicalSpec, QuadratureSystem,
};
use lqss_kalman::optomech::OptomechParams;
use nalgebra::Complex;
use rand::Rng;

const EXAMPLE_PARAMS: [(f64, f64, f64); 4] = [(1.0, 1.0, 1.0), (0.7, 1.9, 0.45), (2.3, 0.35, 1.6), (1.1, 3.0, 0.8)];

/// Prints the verdict line outside the test harness capture, then fails the test if needed.
fn verdict(id: u32, name: &str, ok: bool, detail: String) {
    let tag = if ok { "PASS" } else { "FAIL" };
    let line = format!("{tag} criterion {id}: {name} ({detail})\n");
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
    assert!(ok, "criterion {id} failed: {detail}");
}

fn strict(sys: &QuadratureSystem) -> KalmanDecomposition {
    kalman_decompose(sys, &TolerancePolicy::default(), FactorizationMode::Strict).unwrap()
}

fn span(rows: &[[f64; 6]]) -> SubspaceBasis {
    let m = Mat::from_fn(6, rows.len(), |i, j| rows[j][i]);
    SubspaceBasis::span_of(&m, &TolerancePolicy::default())
}

#[test]
fn criterion_1_example_classification() {
    let start = Instant::now();
    let ctrl_ref = span(&[[0., 0., 1., 0., 0., 0.], [0., 0., 0., 0., 0., 1.], [0., 0., 0., 1., 1., 0.]]);
    let unobs_ref = span(&[[1., -1., 0., 0., 0., 0.], [0., 0., 0., 1., 0., 0.], [0., 0., 0., 0., 1., 0.]]);
    let mut ok = true;
    let mut worst = 0.0f64;
    for &(w, l, g) in &EXAMPLE_PARAMS {
        let dec = strict(&OptomechParams::new(w, l, g).unwrap().system());
        ok &= dec.dims == ClassDims { k: 1, l: 1, d: 1 };
        let dc = subspace_distance(&labelled_span(&dec, StateLabel::controllable), &ctrl_ref).unwrap();
        let du = subspace_distance(&labelled_span(&dec, |s| !s.observable()), &unobs_ref).unwrap();
        worst = worst.max(dc).max(du);
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= worst <= 1e-7 && elapsed < 1.0;
    verdict(
        1,
        "example (k, l, d) = (1, 1, 1) and subspaces",
        ok,
        format!("max angle {worst:.2e} <= 1e-7, runtime {elapsed:.3}s < 1s"),
    );
}

#[test]
fn criterion_2_example_refinement() {
    let mut ok = true;
    let (mut orth, mut sympl, mut coef) = (0.0f64, 0.0f64, 0.0f64);
    for &(w, l, g) in &EXAMPLE_PARAMS {
        let p = OptomechParams::new(w, l, g).unwrap();
        let sys = p.system();
        let dec = from_transform(&sys, &p.reference_transform(), &TolerancePolicy::default()).unwrap();
        let refined = refine(&dec, &dec.e, &p.reference_refinement()).unwrap();
        let j = jmat(3).unwrap();
        orth = orth.max(orthogonality_residual(&refined.v));
        sympl = sympl.max((&refined.v * &j * refined.v.transpose() - &j).norm());
        // dq̂₁: coefficient of p̂₁ is ω;  dp̂₂: coefficient of q̂₁ is −√2 λ.
        coef = coef
            .max((refined.a_hat[(0, 3)] - w).abs())
            .max((refined.a_hat[(4, 0)] + 2f64.sqrt() * l).abs());
        ok &= refined.labels[0] == StateLabel::Co && refined.labels[4] == StateLabel::CObar;
    }
    ok &= orth <= 1e-9 && sympl <= 1e-9 && coef <= 1e-9;
    verdict(
        2,
        "refined V' orthogonal symplectic with matching coefficients",
        ok,
        format!("orthogonality {orth:.2e}, symplecticity {sympl:.2e}, coefficient error {coef:.2e}, all <= 1e-9"),
    );
}

#[test]
fn criterion_3_observability_from_controllability() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (_, sys, _) in system_population(200, 31_000) {
        let km = krylov_matrices(&sys, KrylovVariant::Hamiltonian);
        let t0 = t0_matrix(sys.modes(), sys.fields(), sys.d()).unwrap();
        let rhs = t0 * sharp_adjoint(&km.controllability).unwrap();
        let rel = (&km.observability - rhs).norm() / km.observability.norm().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
    }
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        3,
        "observability = T0 controllability-sharp over 200 systems",
        worst <= 1e-10 && elapsed < 30.0,
        format!("max relative residual {worst:.2e} <= 1e-10, runtime {elapsed:.2}s < 30s"),
    );
}

#[test]
fn criterion_4_drift_and_hamiltonian_subspaces_agree() {
    let policy = TolerancePolicy::default();
    let mut worst = 0.0f64;
    for (_, sys, _) in system_population(200, 31_000) {
        let a = structural_subspaces(&sys, KrylovVariant::Drift, &policy);
        let h = structural_subspaces(&sys, KrylovVariant::Hamiltonian, &policy);
        worst = worst
            .max(subspace_distance(&a.controllable, &h.controllable).unwrap_or(f64::INFINITY))
            .max(subspace_distance(&a.unobservable(), &h.unobservable()).unwrap_or(f64::INFINITY));
    }
    verdict(
        4,
        "A-based and JR-based subspaces coincide over 200 systems",
        worst <= 1e-7,
        format!("max principal angle {worst:.2e} <= 1e-7"),
    );
}

#[test]
fn criterion_5_factorization_postconditions() {
    let policy = TolerancePolicy::default();
    let (mut passed, mut matched, mut forced_k0, mut forced_l0) = (0, 0, 0, 0);
    let total = 200;
    for seed in 0..total {
        let mut g = rng(52_000 + seed);
        let r = g.gen_range(1..=6);
        let s = g.gen_range(1..=24);
        let f = match seed % 4 {
            0 => gaussian(&mut g, s, 2 * r),
            1 => {
                forced_k0 += 1;
                let l = g.gen_range(0..=r.min(s));
                structured_f(&mut g, s, r, 0, l)
            }
            2 => {
                forced_l0 += 1;
                let k = g.gen_range(0..=r.min(s / 2));
                structured_f(&mut g, s, r, k, 0)
            }
            _ => {
                let k = g.gen_range(0..=r.min(s / 2));
                let l = g.gen_range(0..=(r - k).min(s - 2 * k));
                structured_f(&mut g, s, r, k, l)
            }
        };
        let Ok(fact) = one_sided_symplectic_svd(&f, &policy, FactorizationMode::Strict) else {
            continue;
        };
        if verify_factorization(&f, &fact, 1e-8).passed() {
            passed += 1;
        }
        if rank_oracles(&f, &policy) == (fact.e.k, fact.e.l) {
            matched += 1;
        }
    }
    verdict(
        5,
        "strict factorization checks and rank oracles over 200 matrices",
        passed == total && matched == total,
        format!("{passed}/{total} verified at 1e-8, {matched}/{total} oracle matches, {forced_k0} forced k=0, {forced_l0} forced l=0"),
    );
}

#[test]
fn criterion_6_kalman_pattern() {
    let (mut pattern_ok, mut sympl_ok, mut pairs_ok) = (0, 0, 0);
    let mut worst_ratio = 0.0f64;
    let mut worst_sympl = 0.0f64;
    let population = system_population(200, 63_000);
    let total = population.len();
    for (_, sys, _) in population {
        let dec = strict(&sys);
        let res = pattern_residual(&dec.a_hat, &dec.b_hat, &dec.c_hat, dec.dims);
        let bound = pattern_bound(&dec.a_hat, 1e-8);
        worst_ratio = worst_ratio.max(res.max_entry / bound);
        pattern_ok += usize::from(res.max_entry <= bound);
        let j = jmat(sys.modes()).unwrap();
        let s = (&dec.v * &j * dec.v.transpose() - &j).norm();
        worst_sympl = worst_sympl.max(s);
        sympl_ok += usize::from(s <= 1e-9);
        let count = |l: StateLabel| dec.labels.iter().filter(|&&x| x == l).count();
        pairs_ok += usize::from(count(StateLabel::CbarO) == count(StateLabel::CObar));
    }
    verdict(
        6,
        "zero pattern, symplectic V and paired counts over 200 systems",
        pattern_ok == total && sympl_ok == total && pairs_ok == total,
        format!(
            "pattern {pattern_ok}/{total} (worst {worst_ratio:.2e} of bound), V J V^T = J {sympl_ok}/{total} (worst {worst_sympl:.2e}), equal counts {pairs_ok}/{total}"
        ),
    );
}

#[test]
fn criterion_7_transfer_function() {
    let mut worst = 0.0f64;
    for (_, sys, _) in system_population(50, 74_000) {
        let dec = strict(&sys);
        worst = worst.max(transfer_deviation(&sys, &dec, &TRANSFER_FREQUENCIES));
    }
    verdict(
        7,
        "transfer matrix unchanged at 5 frequencies over 50 systems",
        worst <= 1e-7,
        format!("max relative deviation {worst:.2e} <= 1e-7"),
    );
}

fn single_mode(lq: Complex<f64>, lp: Complex<f64>) -> QuadratureSystem {
    let spec = PhysicalSpec::with_identity_scattering(CMat::from_element(1, 1, lq), CMat::from_element(1, 1, lp)).unwrap();
    QuadratureSystem::from_physical(Mat::zeros(2, 2), &spec).unwrap()
}

#[test]
fn criterion_8_micro_cases() {
    let one = Complex::new(1.0, 0.0);
    let zero = Complex::new(0.0, 0.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;

    let position = strict(&single_mode(one, zero));
    let row_is = |dec: &KalmanDecomposition, label: StateLabel, unit: usize| {
        let i = dec.labels.iter().position(|&l| l == label).unwrap();
        (dec.v[(i, unit)].abs() - 1.0).abs() < 1e-12 && dec.v[(i, 1 - unit)].abs() < 1e-12
    };
    let position_ok = position.dims == ClassDims { k: 0, l: 1, d: 0 }
        && row_is(&position, StateLabel::CbarO, 0)
        && row_is(&position, StateLabel::CObar, 1);

    let annihilation = strict(&single_mode(Complex::new(h, 0.0), Complex::new(0.0, h)));
    let annihilation_ok = annihilation.dims == ClassDims { k: 1, l: 0, d: 0 };

    let mut uncoupled_ok = true;
    for n in 1..=4 {
        let r = Mat::identity(2 * n, 2 * n);
        let sys = QuadratureSystem::new(r, Mat::zeros(2, 2 * n), Mat::identity(2, 2)).unwrap();
        uncoupled_ok &= strict(&sys).dims == ClassDims { k: 0, l: 0, d: n };
    }
    verdict(
        8,
        "hand-derived single-mode and uncoupled cases",
        position_ok && annihilation_ok && uncoupled_ok,
        format!(
            "L=q -> (0,1,0) q c-bar-o p c-o-bar: {position_ok}; L=a -> (1,0,0): {annihilation_ok}; C=0 -> (0,0,n): {uncoupled_ok}"
        ),
    );
}
