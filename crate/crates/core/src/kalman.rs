//! Symplectic Kalman decomposition.
//!
//! The observability matrix `Õ` (built from `J R`) is factorized as
//! `Õ = Q E Z⁻¹`; the state change `x̂ = V x` with `V = Z⁻¹` orders the
//! transformed states as
//!
//! ```text
//!   (q̂_a, q̂_b, q̂_c, p̂_a, p̂_b, p̂_c)   with sizes (k, l, d, k, l, d)
//! ```
//!
//! where `q̂_a, p̂_a` are controllable and observable, `q̂_b` is observable only,
//! `p̂_b` is controllable only and `q̂_c, p̂_c` are neither.

use std::fmt;
use std::ops::Range;

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorization::{
    one_sided_symplectic_svd, CanonicalE, Check, FactorizationMode,
};
use crate::linalg::{
    condition_number, is_symplectic, j_left, jmat_unchecked, max_abs, orthogonality_residual,
    sharp_adjoint, sorted_svd, subspace_distance, Mat, SubspaceBasis, TolerancePolicy,
};
use crate::model::{
    krylov_matrices, structural_subspaces, ClassDims, STAIRCASE_SCALE, CMat, KrylovVariant, QuadratureSystem,
};

/// Controllability/observability class of a transformed state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StateLabel {
    /// Controllable and observable.
    #[serde(rename = "co")]
    Co,
    /// Uncontrollable, observable.
    #[serde(rename = "cbar_o")]
    CbarO,
    /// Controllable, unobservable.
    #[serde(rename = "c_obar")]
    CObar,
    /// Neither.
    #[serde(rename = "cbar_obar")]
    CbarObar,
}

impl StateLabel {
    pub fn controllable(self) -> bool {
        matches!(self, StateLabel::Co | StateLabel::CObar)
    }

    pub fn observable(self) -> bool {
        matches!(self, StateLabel::Co | StateLabel::CbarO)
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StateLabel::Co => "co",
            StateLabel::CbarO => "c̄o",
            StateLabel::CObar => "cō",
            StateLabel::CbarObar => "c̄ō",
        })
    }
}

/// Labels in state order for the given class dimensions.
pub fn canonical_labels(dims: ClassDims) -> Vec<StateLabel> {
    let ClassDims { k, l, d } = dims;
    let mut labels = Vec::with_capacity(2 * dims.modes());
    labels.extend(std::iter::repeat_n(StateLabel::Co, k));
    labels.extend(std::iter::repeat_n(StateLabel::CbarO, l));
    labels.extend(std::iter::repeat_n(StateLabel::CbarObar, d));
    labels.extend(std::iter::repeat_n(StateLabel::Co, k));
    labels.extend(std::iter::repeat_n(StateLabel::CObar, l));
    labels.extend(std::iter::repeat_n(StateLabel::CbarObar, d));
    labels
}

/// Index ranges of the six state blocks `q̂_a, q̂_b, q̂_c, p̂_a, p̂_b, p̂_c`.
pub fn block_ranges(dims: ClassDims) -> [Range<usize>; 6] {
    let ClassDims { k, l, .. } = dims;
    let n = dims.modes();
    [
        0..k,
        k..k + l,
        k + l..n,
        n..n + k,
        n + k..n + k + l,
        n + k + l..2 * n,
    ]
}

/// Zero blocks of `Â`, 1-indexed over the six state blocks.
pub const A_ZERO_BLOCKS: [(usize, usize); 17] = [
    (1, 3),
    (1, 5),
    (1, 6),
    (2, 1),
    (2, 3),
    (2, 4),
    (2, 5),
    (2, 6),
    (3, 1),
    (3, 4),
    (3, 5),
    (4, 3),
    (4, 5),
    (4, 6),
    (6, 1),
    (6, 4),
    (6, 5),
];
/// Zero block rows of `B̂`.
pub const B_ZERO_ROWS: [usize; 3] = [2, 3, 6];
/// Zero block columns of `Ĉ`.
pub const C_ZERO_COLS: [usize; 3] = [3, 5, 6];

/// Largest entry found in a mandated zero block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternResidual {
    pub max_entry: f64,
    /// `"A"`, `"B"` or `"C"` with the 1-indexed block row and column of `max_entry`.
    pub location: Option<(String, usize, usize)>,
}

fn block_max(m: &Mat, rows: &Range<usize>, cols: &Range<usize>) -> f64 {
    if rows.is_empty() || cols.is_empty() {
        return 0.0;
    }
    max_abs(&m.view((rows.start, cols.start), (rows.len(), cols.len())).into_owned())
}

/// Scans every mandated zero block of `(Â, B̂, Ĉ)`.
pub fn pattern_residual(a_hat: &Mat, b_hat: &Mat, c_hat: &Mat, dims: ClassDims) -> PatternResidual {
    let ranges = block_ranges(dims);
    let mut best = PatternResidual {
        max_entry: 0.0,
        location: None,
    };
    let mut consider = |value: f64, which: &str, i: usize, j: usize| {
        if value > best.max_entry || (best.location.is_none() && value.is_nan()) {
            best.max_entry = value;
            best.location = Some((which.to_string(), i, j));
        }
    };
    for &(i, j) in &A_ZERO_BLOCKS {
        consider(block_max(a_hat, &ranges[i - 1], &ranges[j - 1]), "A", i, j);
    }
    let inputs = 0..b_hat.ncols();
    for &i in &B_ZERO_ROWS {
        consider(block_max(b_hat, &ranges[i - 1], &inputs), "B", i, 1);
    }
    let outputs = 0..c_hat.nrows();
    for &j in &C_ZERO_COLS {
        consider(block_max(c_hat, &outputs, &ranges[j - 1]), "C", 1, j);
    }
    best
}

/// Pattern bound `tol · (1 + ‖Â‖_F)`.
pub fn pattern_bound(a_hat: &Mat, tol: f64) -> f64 {
    tol * (1.0 + a_hat.norm())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `‖V J Vᵀ − J‖_F`
    pub symplectic: f64,
    pub pattern: PatternResidual,
    /// `‖Õ V⁻¹ − Q E‖_F / max(1, ‖Õ‖_F)`
    pub reconstruction: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KalmanDecomposition {
    /// `x̂ = V x`
    pub v: Mat,
    pub dims: ClassDims,
    pub a_hat: Mat,
    pub b_hat: Mat,
    pub c_hat: Mat,
    pub d: Mat,
    pub labels: Vec<StateLabel>,
    pub residuals: Residuals,
    /// Middle factor of `Õ V⁻¹ = Q E`.
    pub e: CanonicalE,
    pub q: Mat,
    pub mode: FactorizationMode,
    pub policy: TolerancePolicy,
    /// The decomposed system in original coordinates.
    pub system: QuadratureSystem,
}

/// Borrowed transformed data of a decomposition, enough to re-verify it.
#[derive(Clone, Copy, Debug)]
pub struct DecompositionView<'a> {
    pub v: &'a Mat,
    pub dims: ClassDims,
    pub a_hat: &'a Mat,
    pub b_hat: &'a Mat,
    pub c_hat: &'a Mat,
    pub d: &'a Mat,
    pub labels: &'a [StateLabel],
    /// Rank policy for the class oracles.
    pub policy: TolerancePolicy,
}

impl<'a> From<&'a KalmanDecomposition> for DecompositionView<'a> {
    fn from(dec: &'a KalmanDecomposition) -> Self {
        Self {
            v: &dec.v,
            dims: dec.dims,
            a_hat: &dec.a_hat,
            b_hat: &dec.b_hat,
            c_hat: &dec.c_hat,
            d: &dec.d,
            labels: &dec.labels,
            policy: dec.policy,
        }
    }
}

/// Classical Kalman-form blocks, read from the transformed matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassicalBlock {
    ACo,
    ACbarO,
    ACObar,
    ACbarObar,
    A13,
    A21,
    A23,
    A24,
    A43,
    BCo,
    BCObar,
    CCo,
    CCbarO,
}

fn select(m: &Mat, rows: &[usize], cols: &[usize]) -> Mat {
    Mat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

impl KalmanDecomposition {
    pub fn modes(&self) -> usize {
        self.dims.modes()
    }

    /// `V⁻¹ = V♯`
    pub fn v_inverse(&self) -> Mat {
        sharp_adjoint(&self.v).expect("V has even size")
    }

    /// State indices of the classical groups `x_co, x_cō, x_c̄o, x_c̄ō`.
    pub fn class_indices(&self, label: StateLabel) -> Vec<usize> {
        let r = block_ranges(self.dims);
        let pick = |ids: &[usize]| ids.iter().flat_map(|&i| r[i].clone()).collect();
        match label {
            StateLabel::Co => pick(&[0, 3]),
            StateLabel::CObar => pick(&[4]),
            StateLabel::CbarO => pick(&[1]),
            StateLabel::CbarObar => pick(&[2, 5]),
        }
    }

    pub fn classical_block(&self, block: ClassicalBlock) -> Mat {
        use ClassicalBlock::*;
        use StateLabel::*;
        let idx = |l| self.class_indices(l);
        let all_in: Vec<usize> = (0..self.b_hat.ncols()).collect();
        let all_out: Vec<usize> = (0..self.c_hat.nrows()).collect();
        match block {
            ACo => select(&self.a_hat, &idx(Co), &idx(Co)),
            ACbarO => select(&self.a_hat, &idx(CbarO), &idx(CbarO)),
            ACObar => select(&self.a_hat, &idx(CObar), &idx(CObar)),
            ACbarObar => select(&self.a_hat, &idx(CbarObar), &idx(CbarObar)),
            A13 => select(&self.a_hat, &idx(Co), &idx(CbarO)),
            A21 => select(&self.a_hat, &idx(CObar), &idx(Co)),
            A23 => select(&self.a_hat, &idx(CObar), &idx(CbarO)),
            A24 => select(&self.a_hat, &idx(CObar), &idx(CbarObar)),
            A43 => select(&self.a_hat, &idx(CbarObar), &idx(CbarO)),
            BCo => select(&self.b_hat, &idx(Co), &all_in),
            BCObar => select(&self.b_hat, &idx(CObar), &all_in),
            CCo => select(&self.c_hat, &all_out, &idx(Co)),
            CCbarO => select(&self.c_hat, &all_out, &idx(CbarO)),
        }
    }
}

/// Decomposes a system through the factorization of its `J R` observability matrix.
///
/// `Õ` is never factorized directly: its rows mix powers of `J R` and are badly
/// scaled. With `W` an orthonormal basis of the row space of `Õ` (computed by
/// the staircase), `Õ = P Wᵀ` where `P = Õ W` has full column rank, so the
/// factorization `Wᵀ = Q′ E′ Z⁻¹` gives `Õ = [P Q′, P⊥] [E′; 0] Z⁻¹` with the same
/// `Z`. `mode` applies to the factorization of `Wᵀ`.
///
/// Errors if the transformed matrices miss the zero pattern by more than the
/// pattern tolerance of the policy.
pub fn kalman_decompose(
    sys: &QuadratureSystem,
    policy: &TolerancePolicy,
    mode: FactorizationMode,
) -> Result<KalmanDecomposition> {
    let n = sys.modes();
    let obs = krylov_matrices(sys, KrylovVariant::Hamiltonian).observability;
    let w = structural_subspaces(sys, KrylovVariant::Hamiltonian, policy).observable;
    let rank = w.dim();
    let (v, e, q) = if rank == 0 {
        let e = CanonicalE::new(obs.nrows(), n, Vec::new(), Vec::new(), Vec::new())?;
        (Mat::identity(2 * n, 2 * n), e, Mat::identity(obs.nrows(), obs.nrows()))
    } else {
        let surrogate_policy = TolerancePolicy {
            scale: policy.scale * STAIRCASE_SCALE,
            ..*policy
        };
        let fact = one_sided_symplectic_svd(&w.basis().transpose(), &surrogate_policy, mode)?;
        let p = &obs * w.basis() * &fact.q;
        let e = CanonicalE::new(
            obs.nrows(),
            n,
            fact.e.xi_top.clone(),
            fact.e.ones_block.clone(),
            fact.e.xi_mid.clone(),
        )?;
        let mut q = Mat::zeros(obs.nrows(), obs.nrows());
        q.columns_mut(0, rank).copy_from(&p);
        let (u_p, _, _) = sorted_svd(&p);
        q.columns_mut(rank, obs.nrows() - rank)
            .copy_from(&u_p.columns(rank, obs.nrows() - rank));
        (fact.z_inverse(), e, q)
    };
    let dims = ClassDims {
        k: e.k,
        l: e.l,
        d: e.d(),
    };
    let dec = assemble(sys, &obs, v, dims, q, e, mode, policy);
    ensure_pattern(dec, policy)
}

fn ensure_pattern(dec: KalmanDecomposition, policy: &TolerancePolicy) -> Result<KalmanDecomposition> {
    let bound = pattern_bound(&dec.a_hat, policy.structure);
    let p = &dec.residuals.pattern;
    if !(p.max_entry <= bound) {
        let at = p
            .location
            .as_ref()
            .map(|(m, i, j)| format!(" in block ({i},{j}) of {m}̂"))
            .unwrap_or_default();
        return Err(Error::InternalConsistency(format!(
            "zero pattern violated: max entry {:.3e}{at} exceeds {bound:.3e}; \
             symplecticity residual {:.3e}, reconstruction residual {:.3e}",
            p.max_entry, dec.residuals.symplectic, dec.residuals.reconstruction
        )));
    }
    Ok(dec)
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    sys: &QuadratureSystem,
    obs: &Mat,
    v: Mat,
    dims: ClassDims,
    q: Mat,
    e: CanonicalE,
    mode: FactorizationMode,
    policy: &TolerancePolicy,
) -> KalmanDecomposition {
    let v_inv = sharp_adjoint(&v).expect("V has even size");
    let a_hat = &v * sys.a() * &v_inv;
    let b_hat = &v * sys.b();
    let c_hat = sys.c() * &v_inv;
    let n = sys.modes();
    let j = jmat_unchecked(n);
    let symplectic = (&v * &j * v.transpose() - &j).norm();
    let reconstruction = (obs * &v_inv - &q * e.to_matrix()).norm() / obs.norm().max(1.0);
    let pattern = pattern_residual(&a_hat, &b_hat, &c_hat, dims);
    KalmanDecomposition {
        v,
        dims,
        labels: canonical_labels(dims),
        a_hat,
        b_hat,
        c_hat,
        d: sys.d().clone(),
        residuals: Residuals {
            symplectic,
            pattern,
            reconstruction,
        },
        e,
        q,
        mode,
        policy: *policy,
        system: sys.clone(),
    }
}

/// Builds a decomposition from a caller-supplied symplectic `V`.
///
/// The class dimensions come from [`class_oracles`]. The columns of
/// `Õ V⁻¹` belonging to unobservable states must vanish. The `Ξ` entries of
/// the relaxed `E` are the norms of the `q̂_a` and `p̂_a` columns and its `l`
/// block is the identity; `Q` holds the unit `q̂_a`, `p̂_a` columns, the raw
/// `q̂_b` columns and an orthonormal complement.
pub fn from_transform(sys: &QuadratureSystem, v: &Mat, policy: &TolerancePolicy) -> Result<KalmanDecomposition> {
    let n = sys.modes();
    if v.shape() != (2 * n, 2 * n) {
        return Err(Error::Structure(format!(
            "V must be {0}×{0}, got {1}×{2}",
            2 * n,
            v.nrows(),
            v.ncols()
        )));
    }
    let sym = is_symplectic(v, 1e-9)?;
    if !sym.symplectic {
        return Err(Error::Validation {
            invariant: "V symplectic".into(),
            residual: sym.residual,
        });
    }
    let obs = krylov_matrices(sys, KrylovVariant::Hamiltonian).observability;
    let oracles = class_oracles(sys, policy);
    let (k, l) = (oracles.k, oracles.l);
    let dims = ClassDims { k, l, d: n - k - l };
    let w = &obs * sharp_adjoint(v)?;
    let ranges = block_ranges(dims);
    let scale = obs.norm().max(1.0);
    for &b in &[2usize, 4, 5] {
        let value = block_max(&w, &(0..w.nrows()), &ranges[b]);
        if value > policy.structure * scale {
            return Err(Error::Validation {
                invariant: "Õ V⁻¹ vanishes on unobservable states".into(),
                residual: value,
            });
        }
    }
    let observed: Vec<usize> = ranges[0].clone().chain(ranges[1].clone()).chain(ranges[3].clone()).collect();
    // Ξ entries are column norms; the l block of E stays the identity.
    let diag: Vec<f64> = observed
        .iter()
        .enumerate()
        .map(|(slot, &c)| if (k..k + l).contains(&slot) { 1.0 } else { w.column(c).norm() })
        .collect();
    let s = obs.nrows();
    let mut q = Mat::zeros(s, s);
    for (slot, (&c, &scale)) in observed.iter().zip(&diag).enumerate() {
        if scale == 0.0 || w.column(c).norm() == 0.0 {
            return Err(Error::Validation {
                invariant: "Õ V⁻¹ has non-zero observed columns".into(),
                residual: 0.0,
            });
        }
        q.set_column(slot, &(w.column(c) / scale));
    }
    let used = q.columns(0, observed.len()).into_owned();
    let (u_used, _, _) = sorted_svd(&used);
    let complement = u_used.columns(observed.len(), s - observed.len()).into_owned();
    q.columns_mut(observed.len(), s - observed.len()).copy_from(&complement);
    if condition_number(&q) > 1.0 / policy.structure {
        return Err(Error::Validation {
            invariant: "observed columns of Õ V⁻¹ independent".into(),
            residual: condition_number(&q),
        });
    }
    let e = CanonicalE::new(s, n, diag[..k].to_vec(), diag[k..k + l].to_vec(), diag[k + l..].to_vec())?;
    let dec = assemble(sys, &obs, v.clone(), dims, q, e, FactorizationMode::Relaxed, policy);
    ensure_pattern(dec, policy)
}

/// `Õ = (Q X⁻¹)(X E Y)(Y⁻¹ Z⁻¹)`, accepted when `X E Y` keeps the canonical pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct RefinementPair {
    pub x: Mat,
    pub y: Mat,
}

impl RefinementPair {
    pub fn identity(s: usize, n: usize) -> Self {
        Self {
            x: Mat::identity(s, s),
            y: Mat::identity(2 * n, 2 * n),
        }
    }
}

/// Block row/column grid of `E`: rows `[k, l, k, l′]`, columns `[k, l, d, k, l, d]`.
fn e_grid(e: &CanonicalE) -> ([Range<usize>; 4], [Range<usize>; 6]) {
    let (k, l, s) = (e.k, e.l, e.s);
    let rows = [0..k, k..k + l, k + l..2 * k + l, 2 * k + l..s];
    let cols = block_ranges(ClassDims { k, l, d: e.d() });
    (rows, cols)
}

/// Applies a refinement `V′ = Y⁻¹ V` after checking `X E Y` against the canonical pattern.
pub fn refine(dec: &KalmanDecomposition, e: &CanonicalE, pair: &RefinementPair) -> Result<KalmanDecomposition> {
    let n = dec.modes();
    let s = e.s;
    if (e.k, e.l, e.d()) != (dec.dims.k, dec.dims.l, dec.dims.d) || e.r != n {
        return Err(Error::Structure(format!(
            "E has (k, l, d) = ({}, {}, {}) but the decomposition has ({}, {}, {})",
            e.k,
            e.l,
            e.d(),
            dec.dims.k,
            dec.dims.l,
            dec.dims.d
        )));
    }
    if pair.x.shape() != (s, s) || pair.y.shape() != (2 * n, 2 * n) {
        return Err(Error::Structure(format!(
            "X must be {s}×{s} and Y {0}×{0}",
            2 * n
        )));
    }
    let x_cond = condition_number(&pair.x);
    if !(x_cond < 1.0 / f64::EPSILON) {
        return Err(Error::Validation {
            invariant: "X invertible".into(),
            residual: x_cond,
        });
    }
    let sym = is_symplectic(&pair.y, 1e-9)?;
    if !sym.symplectic {
        return Err(Error::Validation {
            invariant: "Y symplectic".into(),
            residual: sym.residual,
        });
    }

    let p = &pair.x * e.to_matrix() * &pair.y;
    let tol = dec.policy.structure * (1.0 + pair.x.norm() * e.to_matrix().norm() * pair.y.norm());
    let (rows, cols) = e_grid(e);
    let (k, l) = (e.k, e.l);
    // Expected non-zero blocks (block row, block column), 0-indexed, each diagonal.
    let diagonal_blocks = [(0usize, 0usize), (1, 1), (2, 3)];
    for (bi, rr) in rows.iter().enumerate() {
        for (bj, cr) in cols.iter().enumerate() {
            let diagonal = diagonal_blocks.contains(&(bi, bj));
            for (a, i) in rr.clone().enumerate() {
                for (b, j) in cr.clone().enumerate() {
                    let value = p[(i, j)];
                    let offending = if diagonal && a == b {
                        !(value.abs() > tol)
                    } else {
                        !(value.abs() <= tol)
                    };
                    if offending {
                        return Err(Error::RefinementRejected {
                            reason: if diagonal && a == b {
                                format!("diagonal entry {value:.3e} of X E Y is numerically zero")
                            } else {
                                format!("X E Y has entry {value:.3e} outside the canonical pattern (tolerance {tol:.3e})")
                            },
                            row: bi + 1,
                            col: bj + 1,
                        });
                    }
                }
            }
        }
    }
    let diag = |r0: usize, c0: usize, len: usize| (0..len).map(|i| p[(r0 + i, c0 + i)]).collect::<Vec<f64>>();
    let e_new = CanonicalE::new(s, n, diag(0, 0, k), diag(k, k, l), diag(k + l, n, k))?;
    let x_inv = pair
        .x
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Validation {
            invariant: "X invertible".into(),
            residual: x_cond,
        })?;
    let y_inv = sharp_adjoint(&pair.y)?;
    let v_new = &y_inv * &dec.v;
    let q_new = &dec.q * x_inv;
    let sys = &dec.system;
    let obs = krylov_matrices(sys, KrylovVariant::Hamiltonian).observability;
    let mode = if e_new.is_strict() && orthogonality_residual(&q_new) <= 1e-9 {
        FactorizationMode::Strict
    } else {
        FactorizationMode::Relaxed
    };
    let refined = assemble(sys, &obs, v_new, dec.dims, q_new, e_new, mode, &dec.policy);
    ensure_pattern(refined, &dec.policy)
}

/// One transformed state with its label and its row of `V` over `(q, p)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedState {
    pub index: usize,
    /// `q̂1 … q̂n, p̂1 … p̂n`
    pub name: String,
    pub label: StateLabel,
    pub row: Vec<f64>,
}

pub fn state_name(index: usize, n: usize) -> String {
    if index < n {
        format!("q̂{}", index + 1)
    } else {
        format!("p̂{}", index - n + 1)
    }
}

pub fn classify_states(dec: &KalmanDecomposition) -> Vec<ClassifiedState> {
    let n = dec.modes();
    dec.labels
        .iter()
        .enumerate()
        .map(|(i, &label)| ClassifiedState {
            index: i,
            name: state_name(i, n),
            label,
            row: dec.v.row(i).iter().copied().collect(),
        })
        .collect()
}

/// Independent class oracles computed with the drift generator `A`.
///
/// `Im C̃` and `Ker Õ` do not depend on whether the Krylov matrices are built
/// from `A` or from `J R`; the decomposition uses `J R`, so these serve as a
/// cross-check. With `W` an orthonormal basis of the row space of `Õ`,
/// `rank Õ = dim W` and `rank(Õ J Õᵀ) = rank(Wᵀ J W)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassOracles {
    pub controllable: SubspaceBasis,
    pub unobservable: SubspaceBasis,
    pub k: usize,
    pub l: usize,
}

pub fn class_oracles(sys: &QuadratureSystem, policy: &TolerancePolicy) -> ClassOracles {
    let subspaces = structural_subspaces(sys, KrylovVariant::Drift, policy);
    let w = subspaces.observable.basis();
    let skew = w.transpose() * j_left(w);
    let (_, sigma, _) = sorted_svd(&skew);
    let threshold = STAIRCASE_SCALE * policy.threshold(skew.nrows(), skew.ncols(), 1.0);
    let k = sigma.iter().filter(|&&s| s > threshold).count() / 2;
    ClassOracles {
        unobservable: subspaces.unobservable(),
        controllable: subspaces.controllable,
        k,
        l: w.ncols() - 2 * k,
    }
}

/// Span of the columns of `V⁻¹` belonging to states with the given labels.
pub fn labelled_span<'a>(
    dec: impl Into<DecompositionView<'a>>,
    wanted: impl Fn(StateLabel) -> bool,
) -> SubspaceBasis {
    let dec = dec.into();
    let v_inv = sharp_adjoint(dec.v).expect("V has even size");
    let cols: Vec<usize> = (0..dec.labels.len()).filter(|&i| wanted(dec.labels[i])).collect();
    let m = select(&v_inv, &(0..v_inv.nrows()).collect::<Vec<_>>(), &cols);
    SubspaceBasis::span_of(&m, &TolerancePolicy::default())
}

/// Transfer matrix `C (sI − A)⁻¹ B + D` at `s`.
pub fn transfer_matrix(a: &Mat, b: &Mat, c: &Mat, d: &Mat, s: Complex<f64>) -> Option<CMat> {
    let n = a.nrows();
    let lift = |m: &Mat| m.map(|x| Complex::new(x, 0.0));
    let resolvent = CMat::identity(n, n) * s - lift(a);
    let solved = resolvent.lu().solve(&lift(b))?;
    Some(lift(c) * solved + lift(d))
}

/// Frequencies used by the transfer-function check.
pub const TRANSFER_FREQUENCIES: [f64; 5] = [0.173, 0.611, 1.337, 2.719, 7.389];

/// Largest relative deviation `‖Ĝ(iω) − G(iω)‖_F / max(1, ‖G(iω)‖_F)` over the given frequencies.
pub fn transfer_deviation<'a>(
    sys: &QuadratureSystem,
    dec: impl Into<DecompositionView<'a>>,
    frequencies: &[f64],
) -> f64 {
    let dec = dec.into();
    let a = sys.a();
    let b = sys.b();
    frequencies
        .iter()
        .map(|&w| {
            let s = Complex::new(0.0, w);
            match (
                transfer_matrix(&a, &b, sys.c(), sys.d(), s),
                transfer_matrix(dec.a_hat, dec.b_hat, dec.c_hat, dec.d, s),
            ) {
                (Some(g), Some(h)) => (&h - &g).norm() / g.norm().max(1.0),
                _ => f64::INFINITY,
            }
        })
        .fold(0.0, f64::max)
}

/// Outcome of re-checking a decomposition against its system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub k_oracle: usize,
    pub l_oracle: usize,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Recomputes every invariant of `dec` from `sys`.
///
/// Matrix residuals are held to `tol` (scaled by the matrix size where noted),
/// principal angles and transfer deviations to `10·tol`.
pub fn verify_decomposition<'a>(
    sys: &QuadratureSystem,
    dec: impl Into<DecompositionView<'a>>,
    tol: f64,
) -> VerificationReport {
    let dec = dec.into();
    let n = sys.modes();
    let m = sys.fields();
    let mut checks = Vec::new();
    let dims_ok = dec.v.shape() == (2 * n, 2 * n)
        && dec.dims.modes() == n
        && dec.a_hat.shape() == (2 * n, 2 * n)
        && dec.b_hat.shape() == (2 * n, 2 * m)
        && dec.c_hat.shape() == (2 * m, 2 * n)
        && dec.d.shape() == (2 * m, 2 * m)
        && dec.labels.len() == 2 * n;
    checks.push(Check::flag("dimensions", dims_ok));
    if !dims_ok {
        return VerificationReport {
            checks,
            k_oracle: 0,
            l_oracle: 0,
        };
    }
    let j = jmat_unchecked(n);
    let symplectic = (dec.v * &j * dec.v.transpose() - &j).norm();
    checks.push(Check::at_most("v_symplectic", symplectic, tol));

    let v_inv = sharp_adjoint(dec.v).expect("V has even size");
    let a_ref = dec.v * sys.a() * &v_inv;
    let b_ref = dec.v * sys.b();
    let c_ref = sys.c() * &v_inv;
    let a_scale = 1.0 + sys.a().norm();
    checks.push(Check::at_most("a_hat_consistent", (&a_ref - dec.a_hat).norm(), tol * a_scale));
    checks.push(Check::at_most(
        "b_hat_consistent",
        (&b_ref - dec.b_hat).norm(),
        tol * (1.0 + sys.b().norm()),
    ));
    checks.push(Check::at_most(
        "c_hat_consistent",
        (&c_ref - dec.c_hat).norm(),
        tol * (1.0 + sys.c().norm()),
    ));
    checks.push(Check::at_most("d_consistent", (sys.d() - dec.d).norm(), tol));

    let pattern = pattern_residual(&a_ref, &b_ref, &c_ref, dec.dims);
    checks.push(Check::at_most("pattern", pattern.max_entry, pattern_bound(&a_ref, tol)));
    checks.push(Check::flag("labels", dec.labels == canonical_labels(dec.dims).as_slice()));

    let oracles = class_oracles(sys, &dec.policy);
    let angle_bound = 10.0 * tol;
    let ctrl = labelled_span(dec, StateLabel::controllable);
    let unobs = labelled_span(dec, |l| !l.observable());
    let ctrl_angle = subspace_distance(&oracles.controllable, &ctrl).unwrap_or(f64::INFINITY);
    let unobs_angle = subspace_distance(&oracles.unobservable, &unobs).unwrap_or(f64::INFINITY);
    checks.push(Check::at_most("controllable_subspace", ctrl_angle, angle_bound));
    checks.push(Check::at_most("unobservable_subspace", unobs_angle, angle_bound));

    let (k_oracle, l_oracle) = (oracles.k, oracles.l);
    checks.push(Check::equal("k_oracle", dec.dims.k, k_oracle));
    checks.push(Check::equal("l_oracle", dec.dims.l, l_oracle));
    checks.push(Check::at_most(
        "transfer_function",
        transfer_deviation(sys, dec, &TRANSFER_FREQUENCIES),
        angle_bound,
    ));
    VerificationReport {
        checks,
        k_oracle,
        l_oracle,
    }
}
