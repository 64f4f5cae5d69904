//! One-sided symplectic SVD-like factorization `F = Q E Z⁻¹`.
//!
//! `Q` is orthogonal (strict mode) or merely invertible (relaxed mode), `Z` is
//! real symplectic, and `E` has the sparse canonical pattern
//!
//! ```text
//!            k     l   r-k-l   k     l   r-k-l
//!   k    [ Ξ_k    0     0      0     0     0  ]
//!   l    [  0    I_l    0      0     0     0  ]
//!   k    [  0     0     0     Ξ_k    0     0  ]
//!   l'   [  0     0     0      0     0     0  ]
//! ```
//!
//! with `k = ½ rank(F J Fᵀ)` and `l = rank(F) − 2k`.
//!
//! Construction, with `M = F J Fᵀ` reduced to pairs `(u_i, v_i)` carrying
//! `u_iᵀ M v_i = ξ_i²`:
//!
//! * `z_i = J Fᵀ v_i / ξ_i` and `z′_i = −J Fᵀ u_i / ξ_i` map onto `ξ_i u_i` and `ξ_i v_i`
//!   and are ω-orthogonal to all of `Ker F`;
//! * `Ker F` splits into its radical (isotropic, dimension `l`) and a symplectic
//!   part whose symplectic basis fills the `r-k-l` zero column pairs;
//! * the remaining image directions `w_j` are hit by `F⁺ w_j`, corrected to be
//!   ω-orthogonal to the symplectic kernel part and to each other; their
//!   partners are drawn from the radical.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    condition_number, is_symplectic, j_left, j_right, orth_complement, orthogonality_residual,
    rank_info_from_svd, skew_canonical_blocks, skew_canonical_with, sorted_svd, Mat, TolerancePolicy,
    TINY_NORM,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorizationMode {
    /// Orthogonal `Q`, twin `Ξ_k` blocks and an identity `l` block.
    Strict,
    /// Invertible `Q`; every stored diagonal entry of `E` may be any non-zero value.
    Relaxed,
}

/// The canonical middle factor, stored by its diagonal data only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalE {
    pub s: usize,
    pub r: usize,
    pub k: usize,
    pub l: usize,
    pub xi_top: Vec<f64>,
    pub xi_mid: Vec<f64>,
    pub ones_block: Vec<f64>,
}

impl CanonicalE {
    pub fn new(
        s: usize,
        r: usize,
        xi_top: Vec<f64>,
        ones_block: Vec<f64>,
        xi_mid: Vec<f64>,
    ) -> Result<Self> {
        let k = xi_top.len();
        let l = ones_block.len();
        if xi_mid.len() != k {
            return Err(Error::Structure(format!(
                "Ξ blocks differ in length: {k} vs {}",
                xi_mid.len()
            )));
        }
        if k + l > r || 2 * k + l > s {
            return Err(Error::Structure(format!(
                "pattern (k={k}, l={l}) does not fit a {s}×{} matrix",
                2 * r
            )));
        }
        if let Some(x) = xi_top.iter().chain(&xi_mid).chain(&ones_block).find(|x| !x.is_finite() || **x == 0.0) {
            return Err(Error::Validation {
                invariant: "E diagonal entries non-zero and finite".into(),
                residual: *x,
            });
        }
        Ok(Self {
            s,
            r,
            k,
            l,
            xi_top,
            xi_mid,
            ones_block,
        })
    }

    /// `r − k − l`
    pub fn d(&self) -> usize {
        self.r - self.k - self.l
    }

    /// `s − 2k − l`
    pub fn l_prime(&self) -> usize {
        self.s - 2 * self.k - self.l
    }

    pub fn to_matrix(&self) -> Mat {
        let mut e = Mat::zeros(self.s, 2 * self.r);
        let (k, l, r) = (self.k, self.l, self.r);
        for i in 0..k {
            e[(i, i)] = self.xi_top[i];
            e[(k + l + i, r + i)] = self.xi_mid[i];
        }
        for j in 0..l {
            e[(k + j, k + j)] = self.ones_block[j];
        }
        e
    }

    /// Whether this is the strict form: positive twin blocks and an identity `l` block.
    pub fn is_strict(&self) -> bool {
        self.xi_top.iter().all(|&x| x > 0.0)
            && self.xi_top == self.xi_mid
            && self.ones_block.iter().all(|&x| x == 1.0)
    }

    /// Smallest stored diagonal magnitude (∞ when there is none).
    pub fn min_diagonal(&self) -> f64 {
        self.xi_top
            .iter()
            .chain(&self.xi_mid)
            .chain(&self.ones_block)
            .fold(f64::INFINITY, |acc, x| acc.min(x.abs()))
    }
}

/// `F Z = Q E` with `Z` symplectic.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticFactorization {
    pub q: Mat,
    pub e: CanonicalE,
    pub z: Mat,
    pub mode: FactorizationMode,
    /// `‖F Z − Q E‖_F`
    pub residual: f64,
    /// 2-norm condition number of `Z`.
    pub z_condition: f64,
    /// Rank policy the factorization was computed with.
    pub policy: TolerancePolicy,
}

impl SymplecticFactorization {
    /// `Z⁻¹ = Z♯`
    pub fn z_inverse(&self) -> Mat {
        -j_left(&j_right(&self.z.transpose()))
    }
}

fn ambiguity(reason: String, singular_values: Vec<f64>, skew_values: Vec<f64>) -> Error {
    Error::RankAmbiguity {
        reason,
        singular_values,
        skew_values,
    }
}

/// Computes `F = Q E Z⁻¹`.
pub fn one_sided_symplectic_svd(
    f: &Mat,
    policy: &TolerancePolicy,
    mode: FactorizationMode,
) -> Result<SymplecticFactorization> {
    let s = f.nrows();
    if s == 0 || f.ncols() == 0 {
        return Err(Error::DegenerateDimension(format!(
            "factorization needs s ≥ 1 and r ≥ 1, got {}×{}",
            s,
            f.ncols()
        )));
    }
    if !f.ncols().is_multiple_of(2) {
        return Err(Error::Structure(format!("F has odd column count {}", f.ncols())));
    }
    if f.iter().any(|x| !x.is_finite()) {
        return Err(Error::Validation {
            invariant: "F has finite entries".into(),
            residual: f64::NAN,
        });
    }
    let r = f.ncols() / 2;
    let n2 = 2 * r;

    let (u_f, sigma, vt_f) = sorted_svd(f);
    let smax = sigma.first().copied().unwrap_or(0.0);
    let threshold = policy.threshold(s, n2, smax);
    let rank = if smax < TINY_NORM && policy.absolute.is_none() {
        0
    } else {
        sigma.iter().filter(|&&x| x > threshold).count()
    };
    let info = rank_info_from_svd(n2, &u_f, sigma.clone(), &vt_f, rank, threshold);

    // k from the skew form F J Fᵀ, thresholded against ‖F‖² where its rounding noise lives.
    let m = j_right(f) * f.transpose();
    let m = (&m - m.transpose()) * 0.5;
    let skew = skew_canonical_with(&m, policy, Some(smax * smax)).map_err(|e| match e {
        Error::RankAmbiguity { reason, skew_values, .. } => ambiguity(reason, sigma.clone(), skew_values),
        other => other,
    })?;
    let k = skew.k;
    if 2 * k > rank {
        return Err(ambiguity(
            format!("rank(F J Fᵀ) = {} exceeds rank(F) = {rank}", 2 * k),
            sigma,
            skew.mus.clone(),
        ));
    }
    let l = rank - 2 * k;
    if k + l > r {
        return Err(ambiguity(
            format!("k + l = {} exceeds r = {r}", k + l),
            sigma,
            skew.mus.clone(),
        ));
    }
    let d = r - k - l;

    // Kernel: symplectic part with d pairs, radical of dimension l.
    let kernel = info.kernel.basis().clone();
    let w_kernel = kernel.transpose() * j_left(&kernel);
    let w_kernel = (&w_kernel - w_kernel.transpose()) * 0.5;
    let kform = if kernel.ncols() == 0 {
        None
    } else {
        Some(
            skew_canonical_blocks(&w_kernel, policy, 1.0, d).map_err(|e| match e {
                Error::RankAmbiguity { reason, skew_values, .. } => ambiguity(
                    format!("kernel of F does not split as {d} symplectic pairs + {l} radical directions: {reason}"),
                    sigma.clone(),
                    skew_values,
                ),
                other => other,
            })?,
        )
    };
    let mut sym_a = Mat::zeros(n2, d);
    let mut sym_b = Mat::zeros(n2, d);
    let mut radical = Mat::zeros(n2, l);
    if let Some(kf) = &kform {
        for t in 0..d {
            let (u, v) = kf.pair(t);
            let scale = kf.mus[t].sqrt();
            sym_a.set_column(t, &(&kernel * u / scale));
            sym_b.set_column(t, &(&kernel * v / scale));
        }
        radical = &kernel * kf.kernel();
    }

    // co columns.
    let ft = f.transpose();
    let mut xi = Vec::with_capacity(k);
    let mut us = Mat::zeros(s, k);
    let mut vs = Mat::zeros(s, k);
    let mut z_a = Mat::zeros(n2, k);
    let mut z_pa = Mat::zeros(n2, k);
    for i in 0..k {
        let (u, v) = skew.pair(i);
        let x = skew.mus[i].sqrt();
        let jfv = j_left(&Mat::from_column_slice(n2, 1, (&ft * &v).as_slice()));
        let jfu = j_left(&Mat::from_column_slice(n2, 1, (&ft * &u).as_slice()));
        z_a.set_column(i, &(jfv.column(0) / x));
        z_pa.set_column(i, &(-jfu.column(0) / x));
        us.set_column(i, &u);
        vs.set_column(i, &v);
        xi.push(x);
    }

    // Image directions of F orthogonal to every u_i, v_i.
    let mut uv = Mat::zeros(s, 2 * k);
    uv.columns_mut(0, k).copy_from(&us);
    uv.columns_mut(k, k).copy_from(&vs);
    let image = info.image.basis();
    let projected = image - &uv * (uv.transpose() * image);
    let (pw, psig, _) = sorted_svd(&projected);
    if l > 0 && psig.get(l - 1).copied().unwrap_or(0.0) < 0.5 {
        return Err(ambiguity(
            format!("image of F leaves fewer than l = {l} directions outside the skew range"),
            sigma,
            skew.mus.clone(),
        ));
    }
    let mut targets = pw.columns(0, l).into_owned();
    for j in 0..l {
        let mut col = targets.column_mut(j);
        if let Some(&first) = col.iter().find(|x| x.abs() > 1e-12) {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }

    // Preimages F⁺ w_j.
    let mut pinv = Mat::zeros(n2, s);
    for i in 0..rank {
        pinv += vt_f.row(i).transpose() * u_f.column(i).transpose() / sigma[i];
    }
    let mut y = &pinv * &targets;
    // ω-orthogonal to the symplectic kernel part.
    if d > 0 {
        let wb = y.transpose() * j_left(&sym_b);
        let wa = y.transpose() * j_left(&sym_a);
        y -= &sym_a * wb.transpose() - &sym_b * wa.transpose();
    }
    let mut partners = Mat::zeros(n2, l);
    if l > 0 {
        let g = y.transpose() * j_left(&radical);
        let g_inv = g.clone().try_inverse().ok_or_else(|| {
            ambiguity(
                "radical of Ker F does not pair with the remaining image directions".into(),
                sigma.clone(),
                skew.mus.clone(),
            )
        })?;
        let skew_y = y.transpose() * j_left(&y);
        y -= &radical * (&g_inv * skew_y * 0.5);
        partners = &radical * g_inv;
    }

    let mut z = Mat::zeros(n2, n2);
    z.columns_mut(0, k).copy_from(&z_a);
    z.columns_mut(k, l).copy_from(&y);
    z.columns_mut(k + l, d).copy_from(&sym_a);
    z.columns_mut(r, k).copy_from(&z_pa);
    z.columns_mut(r + k, l).copy_from(&partners);
    z.columns_mut(r + k + l, d).copy_from(&sym_b);

    let mut used = Mat::zeros(s, rank);
    used.columns_mut(0, k).copy_from(&us);
    used.columns_mut(k, l).copy_from(&targets);
    used.columns_mut(k + l, k).copy_from(&vs);
    let complement = orth_complement(&used);

    let mut q = Mat::zeros(s, s);
    q.columns_mut(2 * k + l, s - rank).copy_from(&complement);
    let e = match mode {
        FactorizationMode::Strict => {
            q.columns_mut(0, rank).copy_from(&used);
            CanonicalE::new(s, r, xi.clone(), vec![1.0; l], xi)?
        }
        FactorizationMode::Relaxed => {
            for i in 0..k {
                q.set_column(i, &(us.column(i) * xi[i]));
                q.set_column(k + l + i, &(vs.column(i) * xi[i]));
            }
            q.columns_mut(k, l).copy_from(&targets);
            CanonicalE::new(s, r, vec![1.0; k], vec![1.0; l], vec![1.0; k])?
        }
    };
    let residual = (f * &z - &q * e.to_matrix()).norm();
    Ok(SymplecticFactorization {
        z_condition: condition_number(&z),
        q,
        e,
        z,
        mode,
        residual,
        policy: *policy,
    })
}

/// One named pass/fail check with its measured value and the bound it was held to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            passed: value <= bound,
        }
    }

    pub fn equal(name: &str, value: usize, expected: usize) -> Self {
        Self {
            name: name.into(),
            value: value as f64,
            bound: expected as f64,
            passed: value == expected,
        }
    }

    pub fn flag(name: &str, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: if ok { 0.0 } else { 1.0 },
            bound: 0.0,
            passed: ok,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub checks: Vec<Check>,
    pub k_oracle: usize,
    pub l_oracle: usize,
}

impl FactorizationReport {
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

/// Rank oracles `(½ rank(F J Fᵀ), rank(F) − 2k)` computed straight from singular values.
pub fn rank_oracles(f: &Mat, policy: &TolerancePolicy) -> (usize, usize) {
    let (_, sigma, _) = sorted_svd(f);
    let smax = sigma.first().copied().unwrap_or(0.0);
    if smax < TINY_NORM && policy.absolute.is_none() {
        return (0, 0);
    }
    let t = policy.threshold(f.nrows(), f.ncols(), smax);
    let rank = sigma.iter().filter(|&&x| x > t).count();
    let m = j_right(f) * f.transpose();
    let m = (&m - m.transpose()) * 0.5;
    let (_, msig, _) = sorted_svd(&m);
    let tm = policy.threshold(m.nrows(), m.ncols(), smax * smax);
    let mrank = msig.iter().filter(|&&x| x > tm).count();
    let k = mrank / 2;
    (k, rank.saturating_sub(2 * k))
}

/// Re-checks every postcondition of a factorization of `f`.
pub fn verify_factorization(f: &Mat, fact: &SymplecticFactorization, tol: f64) -> FactorizationReport {
    let e = &fact.e;
    let mut checks = Vec::new();
    let dims_ok = f.nrows() == e.s
        && f.ncols() == 2 * e.r
        && fact.q.shape() == (e.s, e.s)
        && fact.z.shape() == (2 * e.r, 2 * e.r);
    checks.push(Check::flag("dimensions", dims_ok));
    if !dims_ok {
        return FactorizationReport {
            checks,
            k_oracle: 0,
            l_oracle: 0,
        };
    }
    let scale = f.norm().max(1.0);
    let recon = (f * &fact.z - &fact.q * e.to_matrix()).norm();
    checks.push(Check::at_most("reconstruction", recon, tol * scale));
    let sym = is_symplectic(&fact.z, tol).expect("Z is square with even size");
    checks.push(Check::at_most("z_symplectic", sym.residual, tol));
    match fact.mode {
        FactorizationMode::Strict => {
            checks.push(Check::at_most(
                "q_orthogonal",
                orthogonality_residual(&fact.q),
                tol,
            ));
            checks.push(Check::flag("e_strict_pattern", e.is_strict()));
        }
        FactorizationMode::Relaxed => {
            let cond = condition_number(&fact.q);
            checks.push(Check::at_most("q_condition", cond, 1.0 / tol));
        }
    }
    let (k_oracle, l_oracle) = rank_oracles(f, &fact.policy);
    let min_diag = e.min_diagonal();
    let diag_floor = fact.policy.threshold(f.nrows(), f.ncols(), 1.0);
    checks.push(Check::flag("e_diagonal_nonzero", min_diag > diag_floor));
    checks.push(Check::equal("k_oracle", e.k, k_oracle));
    checks.push(Check::equal("l_oracle", e.l, l_oracle));
    FactorizationReport {
        checks,
        k_oracle,
        l_oracle,
    }
}
