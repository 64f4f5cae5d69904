//! Built-in three-mode optomechanical example.
//!
//! Two lossless optical cavities `(q₁, p₁)`, `(q₂, p₂)` interact with equal
//! strength `λ` with a damped mechanical mode `(q₃, p₃)` of frequency `ω`:
//!
//! ```text
//!   H = (ω/2)(q₃² + p₃²) + λ q₁ q₃ + λ q₂ q₃,      L = (γ/√2)(q₃ + i p₃),   S = 1.
//! ```
//!
//! Expanding `H = ½ xᵀ R x` over `x = (q₁, q₂, q₃, p₁, p₂, p₃)`:
//! the squares give `R[q₃,q₃] = R[p₃,p₃] = ω`, and each cross term `λ qᵢ q₃`
//! is split symmetrically as `R[qᵢ,q₃] = R[q₃,qᵢ] = λ`. Every other entry is zero.

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::kalman::RefinementPair;
use crate::linalg::Mat;
use crate::model::{CMat, PhysicalSpec, QuadratureSystem};

const MODES: usize = 3;
const Q3: usize = 2;
const P3: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptomechParams {
    pub omega: f64,
    pub lambda: f64,
    pub gamma: f64,
}

impl OptomechParams {
    pub fn new(omega: f64, lambda: f64, gamma: f64) -> Result<Self> {
        for (name, value) in [("omega", omega), ("lambda", lambda), ("gamma", gamma)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Validation {
                    invariant: format!("{name} positive and finite"),
                    residual: value,
                });
            }
        }
        Ok(Self { omega, lambda, gamma })
    }

    /// `a = ω (ω⁸ + ω⁶ + ω⁴ + ω² + 1) / (ω¹⁰ + ω⁸ + ω⁶ + ω⁴ + ω² + 1)`
    pub fn a(&self) -> f64 {
        let w2 = self.omega * self.omega;
        let num: f64 = (0..5).map(|i| w2.powi(i)).sum();
        let den: f64 = (0..6).map(|i| w2.powi(i)).sum();
        self.omega * num / den
    }

    /// `b = 1 / (ω¹⁰ + ω⁸ + ω⁶ + ω⁴ + ω² + 1)`
    pub fn b(&self) -> f64 {
        let w2 = self.omega * self.omega;
        1.0 / (0..6).map(|i| w2.powi(i)).sum::<f64>()
    }

    pub fn hamiltonian(&self) -> Mat {
        let mut r = Mat::zeros(2 * MODES, 2 * MODES);
        r[(Q3, Q3)] = self.omega;
        r[(P3, P3)] = self.omega;
        for qi in [0, 1] {
            r[(qi, Q3)] = self.lambda;
            r[(Q3, qi)] = self.lambda;
        }
        r
    }

    pub fn physical_spec(&self) -> PhysicalSpec {
        let g = self.gamma / 2f64.sqrt();
        let mut lq = CMat::zeros(1, MODES);
        let mut lp = CMat::zeros(1, MODES);
        lq[(0, 2)] = Complex::new(g, 0.0);
        lp[(0, 2)] = Complex::new(0.0, g);
        PhysicalSpec::with_identity_scattering(lq, lp).expect("identity scattering is unitary")
    }

    pub fn system(&self) -> QuadratureSystem {
        QuadratureSystem::from_physical(self.hamiltonian(), &self.physical_spec())
            .expect("the example data are valid")
    }

    /// A symplectic `V` putting the example in Kalman-like form:
    ///
    /// ```text
    ///   q̂₁ = p₃,  q̂₂ = −(q₁ + q₂),  q̂₃ = (q₁ − q₂)/√2,
    ///   p̂₁ = −q₃ − λa(q₁ + q₂),  p̂₂ = λa p₃ − (p₁ + p₂)/2,  p̂₃ = (p₁ − p₂)/√2.
    /// ```
    pub fn reference_transform(&self) -> Mat {
        let s = 1.0 / 2f64.sqrt();
        let la = self.lambda * self.a();
        Mat::from_row_slice(6, 6, &[
            0.0, 0.0, 0.0, 0.0, 0.0, 1.0, //
            -1.0, -1.0, 0.0, 0.0, 0.0, 0.0, //
            s, -s, 0.0, 0.0, 0.0, 0.0, //
            -la, -la, -1.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, -0.5, -0.5, la, //
            0.0, 0.0, 0.0, s, -s, 0.0,
        ])
    }

    /// `(X, Y)` turning [`Self::reference_transform`] into the orthogonal
    /// [`Self::refined_transform`] through `V′ = Y⁻¹ V`.
    pub fn reference_refinement(&self) -> RefinementPair {
        let r2 = 2f64.sqrt();
        let a = self.a();
        let la = self.lambda * a;
        let y = Mat::from_row_slice(6, 6, &[
            0.0, 0.0, 0.0, 1.0, 0.0, 0.0, //
            0.0, -r2, 0.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, 0.0, 0.0, //
            -1.0, -r2 * la, 0.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, la, -1.0 / r2, 0.0, //
            0.0, 0.0, 0.0, 0.0, 0.0, 1.0,
        ]);
        let s = 4 * MODES;
        let mut x = Mat::identity(s, s);
        let corner = Mat::from_row_slice(3, 3, &[
            0.0, -self.lambda * self.gamma * a / self.b().sqrt(), 1.0, //
            0.0, 1.0, 0.0, //
            1.0, 0.0, 0.0,
        ]);
        x.view_mut((0, 0), (3, 3)).copy_from(&corner);
        RefinementPair { x, y }
    }

    /// `q̂ = (q₃, (q₁+q₂)/√2, (q₁−q₂)/√2)`, `p̂ = (p₃, (p₁+p₂)/√2, (p₁−p₂)/√2)`.
    pub fn refined_transform() -> Mat {
        let s = 1.0 / 2f64.sqrt();
        Mat::from_row_slice(6, 6, &[
            0.0, 0.0, 1.0, 0.0, 0.0, 0.0, //
            s, s, 0.0, 0.0, 0.0, 0.0, //
            s, -s, 0.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 0.0, 0.0, 1.0, //
            0.0, 0.0, 0.0, s, s, 0.0, //
            0.0, 0.0, 0.0, s, -s, 0.0,
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{is_symplectic, orthogonality_residual, sharp_adjoint};

    fn unit() -> OptomechParams {
        OptomechParams::new(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn coefficients_at_unit_frequency() {
        let p = unit();
        assert!((p.a() - 5.0 / 6.0).abs() < 1e-15);
        assert!((p.b() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn hamiltonian_entries() {
        let p = OptomechParams::new(2.0, 0.3, 1.0).unwrap();
        let r = p.hamiltonian();
        assert_eq!(r[(2, 2)], 2.0);
        assert_eq!(r[(5, 5)], 2.0);
        assert_eq!(r[(0, 2)], 0.3);
        assert_eq!(r[(2, 1)], 0.3);
        assert_eq!(r.iter().filter(|&&x| x != 0.0).count(), 6);
    }

    #[test]
    fn drift_matches_hand_expansion() {
        let (w, l, g) = (1.3, 0.7, 0.9);
        let sys = OptomechParams::new(w, l, g).unwrap().system();
        let a = sys.a();
        let h = g * g / 2.0;
        // dq₃ = (−γ²/2 q₃ + ω p₃) dt,  dp₁ = −λ q₃ dt,
        // dp₃ = −(λ q₁ + λ q₂ + ω q₃ + γ²/2 p₃) dt.
        let expect = Mat::from_row_slice(6, 6, &[
            0.0, 0.0, 0.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, -h, 0.0, 0.0, w, //
            0.0, 0.0, -l, 0.0, 0.0, 0.0, //
            0.0, 0.0, -l, 0.0, 0.0, 0.0, //
            -l, -l, -w, 0.0, 0.0, -h,
        ]);
        assert!((a - expect).norm() < 1e-14);
        let c = Mat::from_row_slice(2, 6, &[0.0, 0.0, g, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, g]);
        assert!((sys.c() - c).norm() < 1e-14);
        // B = −C♯: dq₃ gets −γ dU₁, dp₃ gets −γ dU₂.
        let b = sys.b();
        assert!((b[(2, 0)] + g).abs() < 1e-14 && (b[(5, 1)] + g).abs() < 1e-14);
        assert!((sys.d() - Mat::identity(2, 2)).norm() == 0.0);
    }

    #[test]
    fn reference_transforms_are_symplectic() {
        let p = OptomechParams::new(0.8, 1.7, 0.4).unwrap();
        assert!(is_symplectic(&p.reference_transform(), 1e-12).unwrap().symplectic);
        let pair = p.reference_refinement();
        assert!(is_symplectic(&pair.y, 1e-12).unwrap().symplectic);
        let refined = sharp_adjoint(&pair.y).unwrap() * p.reference_transform();
        assert!((&refined - OptomechParams::refined_transform()).norm() < 1e-12);
        assert!(orthogonality_residual(&refined) < 1e-12);
    }

    #[test]
    fn rejects_non_positive_parameters() {
        assert!(OptomechParams::new(0.0, 1.0, 1.0).is_err());
        assert!(OptomechParams::new(1.0, -1.0, 1.0).is_err());
        assert!(OptomechParams::new(1.0, 1.0, f64::NAN).is_err());
    }
}
