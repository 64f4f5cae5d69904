mod common;

use common::*;
use lqss_kalman::linalg::{
    is_symplectic, jmat, numerical_rank, principal_angles, sharp_adjoint, skew_canonical,
    symplectic_complete, Mat, SubspaceBasis, TolerancePolicy,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn sharp_is_an_involution(seed in any::<u64>(), r in 1usize..6, s in 1usize..6) {
        let x = gaussian(&mut rng(seed), 2 * r, 2 * s);
        let back = sharp_adjoint(&sharp_adjoint(&x).unwrap()).unwrap();
        prop_assert!((back - &x).norm() <= 1e-12 * x.norm().max(1.0));
    }

    #[test]
    fn sharp_reverses_products(seed in any::<u64>(), r in 1usize..5, s in 1usize..5, t in 1usize..5) {
        let mut g = rng(seed);
        let x = gaussian(&mut g, 2 * r, 2 * s);
        let y = gaussian(&mut g, 2 * s, 2 * t);
        let lhs = sharp_adjoint(&(&x * &y)).unwrap();
        let rhs = sharp_adjoint(&y).unwrap() * sharp_adjoint(&x).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (x.norm() * y.norm()).max(1.0));
    }

    #[test]
    fn symplectic_products_and_inverses(seed in any::<u64>(), r in 1usize..6) {
        let mut g = rng(seed);
        let a = random_sympl(&mut g, r);
        let b = random_sympl(&mut g, r);
        let tol = 1e-9;
        prop_assert!(is_symplectic(&(&a * &b), tol).unwrap().symplectic);
        prop_assert!(is_symplectic(&sharp_adjoint(&a).unwrap(), tol).unwrap().symplectic);
    }

    #[test]
    fn skew_canonical_reconstructs(seed in any::<u64>(), n in 1usize..41, rank_half in 0usize..21) {
        let mut g = rng(seed);
        let k = rank_half.min(n / 2);
        let b = gaussian(&mut g, n, 2 * k);
        let m = &b * jmat(k.max(1)).unwrap().view((0, 0), (2 * k, 2 * k)) * b.transpose();
        let m = (&m - m.transpose()) * 0.5;
        let form = skew_canonical(&m, &TolerancePolicy::default()).unwrap();
        let scale = m.norm().max(1.0);
        prop_assert!((form.reconstruct() - &m).norm() <= 1e-9 * scale);
        prop_assert!((form.u.transpose() * &form.u - Mat::identity(n, n)).norm() <= 1e-9);
        prop_assert_eq!(form.k, k);
        prop_assert!(form.mus.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn completion_is_symplectic(seed in any::<u64>(), r in 1usize..6, t_raw in 0usize..6) {
        let mut g = rng(seed);
        let t = t_raw.min(r);
        let basis = random_sympl(&mut g, r);
        // The first t columns of a symplectic matrix span an isotropic set.
        let x = basis.columns(0, t).into_owned();
        let completed = symplectic_complete(&x, &SubspaceBasis::full(2 * r), &TolerancePolicy::default()).unwrap();
        let j = jmat(r).unwrap();
        prop_assert!((completed.transpose() * &j * &completed - &j).norm() <= 1e-8 * completed.norm().powi(2).max(1.0));
        prop_assert!((completed.columns(0, t) - &x).norm() == 0.0);
    }

    #[test]
    fn rank_splits_image_and_kernel(seed in any::<u64>(), rows in 1usize..16, cols in 1usize..16, rk in 0usize..16) {
        let mut g = rng(seed);
        let rk = rk.min(rows).min(cols);
        let f = gaussian(&mut g, rows, rk) * gaussian(&mut g, rk, cols);
        let info = numerical_rank(&f, &TolerancePolicy::default());
        prop_assert_eq!(info.rank, rk);
        prop_assert_eq!(info.kernel.dim(), cols - rk);
        prop_assert!((&f * info.kernel.basis()).norm() <= 1e-10 * f.norm().max(1.0));
        let row_space = SubspaceBasis::span_of(&f.transpose(), &TolerancePolicy::default());
        if row_space.dim() > 0 && info.kernel.dim() > 0 {
            let cross = row_space.basis().transpose() * info.kernel.basis();
            prop_assert!(cross.norm() <= 1e-10);
        }
    }

    #[test]
    fn principal_angles_are_rotation_invariant(seed in any::<u64>(), n in 2usize..10, p in 1usize..5) {
        let mut g = rng(seed);
        let p = p.min(n);
        let a = SubspaceBasis::span_of(&gaussian(&mut g, n, p), &TolerancePolicy::default());
        let b = SubspaceBasis::span_of(&gaussian(&mut g, n, p), &TolerancePolicy::default());
        let q = random_orthogonal(&mut g, n);
        let before = principal_angles(&a, &b).unwrap();
        let after = principal_angles(
            &SubspaceBasis::span_of(&(&q * a.basis()), &TolerancePolicy::default()),
            &SubspaceBasis::span_of(&(&q * b.basis()), &TolerancePolicy::default()),
        ).unwrap();
        for (x, y) in before.iter().zip(&after) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }
}
