//! Dense linear algebra specialised to the symplectic form ω(u, v) = uᵀ J v.
//!
//! Everything here works on `nalgebra::DMatrix<f64>`. State vectors are ordered
//! `(q₁, …, qₙ, p₁, …, pₙ)`, so the standard form is `J = [[0, I], [−I, 0]]`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;

/// Norm below which a matrix is treated as identically zero.
pub const TINY_NORM: f64 = 1e-300;

/// Relative distance below which a skew value counts as lying on the rank threshold.
pub const AMBIGUITY_BAND: f64 = 1e-6;

/// How numerical rank decisions are made.
///
/// The default threshold is `scale · max(rows, cols) · ε · σ_max`; an absolute
/// threshold, when set, replaces it entirely.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub absolute: Option<f64>,
    /// Relative tolerance for structural preconditions (skewness of inputs and the like).
    pub structure: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            scale: 1.0,
            absolute: None,
            structure: 1e-8,
        }
    }
}

impl TolerancePolicy {
    pub fn with_scale(scale: f64) -> Self {
        Self {
            scale,
            ..Self::default()
        }
    }

    pub fn with_absolute(absolute: f64) -> Self {
        Self {
            absolute: Some(absolute),
            ..Self::default()
        }
    }

    /// Rank threshold for a `rows × cols` matrix whose largest singular value is `reference`.
    pub fn threshold(&self, rows: usize, cols: usize, reference: f64) -> f64 {
        match self.absolute {
            Some(t) => t,
            None => self.scale * rows.max(cols) as f64 * f64::EPSILON * reference,
        }
    }
}

/// `J_{2k} = [[0, I_k], [−I_k, 0]]`.
pub fn jmat(k: usize) -> Result<Mat> {
    if k == 0 {
        return Err(Error::DegenerateDimension("J-form needs k ≥ 1".into()));
    }
    Ok(jmat_unchecked(k))
}

pub(crate) fn jmat_unchecked(k: usize) -> Mat {
    let mut j = Mat::zeros(2 * k, 2 * k);
    for i in 0..k {
        j[(i, k + i)] = 1.0;
        j[(k + i, i)] = -1.0;
    }
    j
}

fn half(dim: usize, what: &str) -> Result<usize> {
    if !dim.is_multiple_of(2) {
        return Err(Error::Structure(format!("{what} dimension {dim} is odd")));
    }
    Ok(dim / 2)
}

/// Multiplies `J_{2k}` from the left without forming J.
pub fn j_left(x: &Mat) -> Mat {
    let k = x.nrows() / 2;
    let mut out = Mat::zeros(x.nrows(), x.ncols());
    out.rows_mut(0, k).copy_from(&x.rows(k, k));
    out.rows_mut(k, k).copy_from(&(-x.rows(0, k)));
    out
}

/// Multiplies `J_{2k}` from the right without forming J.
pub fn j_right(x: &Mat) -> Mat {
    let k = x.ncols() / 2;
    let mut out = Mat::zeros(x.nrows(), x.ncols());
    out.columns_mut(0, k).copy_from(&(-x.columns(k, k)));
    out.columns_mut(k, k).copy_from(&x.columns(0, k));
    out
}

/// The ♯-adjoint `X♯ = −J_{2s} Xᵀ J_{2r}` of a real `2r × 2s` matrix.
pub fn sharp_adjoint(x: &Mat) -> Result<Mat> {
    half(x.nrows(), "row")?;
    half(x.ncols(), "column")?;
    Ok(-j_left(&j_right(&x.transpose())))
}

/// Outcome of a symplecticity test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymplecticCheck {
    pub symplectic: bool,
    /// `‖T·T♯ − I‖_F`
    pub residual: f64,
}

pub fn is_symplectic(t: &Mat, tol: f64) -> Result<SymplecticCheck> {
    if !t.is_square() {
        return Err(Error::Structure(format!(
            "symplectic test needs a square matrix, got {}×{}",
            t.nrows(),
            t.ncols()
        )));
    }
    let residual = (t * sharp_adjoint(t)? - Mat::identity(t.nrows(), t.ncols())).norm();
    Ok(SymplecticCheck {
        symplectic: residual <= tol,
        residual,
    })
}

/// `‖TᵀT − I‖_F`.
pub fn orthogonality_residual(t: &Mat) -> f64 {
    (t.transpose() * t - Mat::identity(t.ncols(), t.ncols())).norm()
}

/// An orthonormal basis of a subspace of ℝᴺ, stored as the columns of an `N × dim` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceBasis {
    basis: Mat,
}

impl SubspaceBasis {
    /// Wraps a matrix whose columns are already orthonormal.
    pub fn new(basis: Mat) -> Result<Self> {
        let residual = orthogonality_residual(&basis);
        if residual > 1e-8 {
            return Err(Error::Validation {
                invariant: "subspace basis columns orthonormal".into(),
                residual,
            });
        }
        Ok(Self { basis })
    }

    pub(crate) fn from_orthonormal(basis: Mat) -> Self {
        Self { basis }
    }

    pub fn empty(ambient_dim: usize) -> Self {
        Self {
            basis: Mat::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self {
            basis: Mat::identity(ambient_dim, ambient_dim),
        }
    }

    /// Orthonormal basis of the column span of `m`.
    pub fn span_of(m: &Mat, policy: &TolerancePolicy) -> Self {
        numerical_rank(m, policy).image
    }

    /// Span of the listed standard basis vectors `e_i`.
    pub fn coordinate(ambient_dim: usize, indices: &[usize]) -> Self {
        let mut basis = Mat::zeros(ambient_dim, indices.len());
        for (c, &i) in indices.iter().enumerate() {
            basis[(i, c)] = 1.0;
        }
        Self { basis }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    /// Image of the subspace under an invertible linear map, re-orthonormalised.
    pub fn mapped(&self, t: &Mat, policy: &TolerancePolicy) -> Self {
        if self.dim() == 0 {
            return Self::empty(t.nrows());
        }
        Self::span_of(&(t * &self.basis), policy)
    }

    /// Euclidean orthogonal complement.
    pub fn orthogonal_complement(&self) -> Self {
        Self {
            basis: orth_complement(&self.basis),
        }
    }
}

/// Singular values in descending order together with full-rank bases.
#[derive(Clone, Debug)]
pub struct RankInfo {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub threshold: f64,
    pub image: SubspaceBasis,
    pub kernel: SubspaceBasis,
}

fn to_faer(m: &Mat) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Full SVD `M = U Σ Vᵀ` with singular values sorted descending.
///
/// `U` is `rows × rows` and `Vᵀ` is `cols × cols`; the trailing columns of `U`
/// and rows of `Vᵀ` span the left and right null directions.
pub(crate) fn sorted_svd(m: &Mat) -> (Mat, Vec<f64>, Mat) {
    let (rows, cols) = m.shape();
    let p = rows.min(cols);
    if p == 0 {
        return (Mat::identity(rows, rows), Vec::new(), Mat::identity(cols, cols));
    }
    let svd = to_faer(m).svd().expect("SVD of a finite matrix converges");
    let (u, v) = (svd.U(), svd.V());
    let s = svd.S().column_vector();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    order.extend(p..rows.max(cols));
    let sigma = order[..p].iter().map(|&i| s[i]).collect();
    let u = Mat::from_fn(rows, rows, |r, c| u[(r, order[c])]);
    let vt = Mat::from_fn(cols, cols, |r, c| v[(c, order[r])]);
    (u, sigma, vt)
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues descending.
pub(crate) fn sorted_symmetric_eigen(m: &Mat) -> (Vec<f64>, Mat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), Mat::zeros(0, 0));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = to_faer(&sym)
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("symmetric eigensolver converges");
    let (vals, vecs) = (eig.S().column_vector(), eig.U());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let values = order.iter().map(|&i| vals[i]).collect();
    (values, Mat::from_fn(n, n, |r, c| vecs[(r, order[c])]))
}

/// Orthonormal basis of the orthogonal complement of the span of orthonormal columns `b`.
pub(crate) fn orth_complement(b: &Mat) -> Mat {
    let n = b.nrows();
    let p = b.ncols();
    if p == 0 {
        return Mat::identity(n, n);
    }
    if p >= n {
        return Mat::zeros(n, 0);
    }
    let (u, _, _) = sorted_svd(b);
    u.columns(p, n - p).into_owned()
}

/// Rank-revealing SVD: rank, image and kernel bases.
pub fn numerical_rank(f: &Mat, policy: &TolerancePolicy) -> RankInfo {
    let (u, sigma, vt) = sorted_svd(f);
    let smax = sigma.first().copied().unwrap_or(0.0);
    let threshold = policy.threshold(f.nrows(), f.ncols(), smax);
    let rank = if smax < TINY_NORM && policy.absolute.is_none() {
        0
    } else {
        sigma.iter().filter(|&&s| s > threshold).count()
    };
    rank_info_from_svd(f.ncols(), &u, sigma, &vt, rank, threshold)
}

pub(crate) fn rank_info_from_svd(
    cols: usize,
    u: &Mat,
    sigma: Vec<f64>,
    vt: &Mat,
    rank: usize,
    threshold: f64,
) -> RankInfo {
    let image = SubspaceBasis::from_orthonormal(u.columns(0, rank).into_owned());
    let kernel = vt.rows(rank, cols - rank).transpose();
    RankInfo {
        rank,
        singular_values: sigma,
        threshold,
        image,
        kernel: SubspaceBasis::from_orthonormal(kernel),
    }
}

/// Real canonical form of a skew-symmetric matrix under orthogonal similarity.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewCanonicalForm {
    /// Orthogonal; columns ordered `u₁, v₁, u₂, v₂, …, u_k, v_k, kernel…`.
    pub u: Mat,
    /// Block magnitudes, descending.
    pub mus: Vec<f64>,
    pub k: usize,
}

impl SkewCanonicalForm {
    /// `blockdiag(μ₁J₂, …, μ_kJ₂, 0)`.
    pub fn block_form(&self) -> Mat {
        let s = self.u.nrows();
        let mut b = Mat::zeros(s, s);
        for (i, &mu) in self.mus.iter().enumerate() {
            b[(2 * i, 2 * i + 1)] = mu;
            b[(2 * i + 1, 2 * i)] = -mu;
        }
        b
    }

    pub fn reconstruct(&self) -> Mat {
        &self.u * self.block_form() * self.u.transpose()
    }

    /// The pair `(u_i, v_i)` with `u_iᵀ M v_i = μ_i`.
    pub fn pair(&self, i: usize) -> (DVector<f64>, DVector<f64>) {
        (
            self.u.column(2 * i).into_owned(),
            self.u.column(2 * i + 1).into_owned(),
        )
    }

    pub fn kernel(&self) -> Mat {
        let s = self.u.ncols();
        self.u.columns(2 * self.k, s - 2 * self.k).into_owned()
    }
}

/// Orthogonal reduction of a skew-symmetric matrix to 2×2 blocks `μ_i J₂`.
///
/// The input is symmetrised to `(M − Mᵀ)/2` after checking that
/// `‖M + Mᵀ‖_F ≤ policy.structure · ‖M‖_F`.
pub fn skew_canonical(m: &Mat, policy: &TolerancePolicy) -> Result<SkewCanonicalForm> {
    skew_canonical_with(m, policy, None)
}

/// Same as [`skew_canonical`], with the rank threshold measured against
/// `reference` instead of `‖M‖₂`. Needed when `M` is a product such as `F J Fᵀ`
/// whose rounding noise scales with `‖F‖²` rather than with `‖M‖`.
pub(crate) fn skew_canonical_with(
    m: &Mat,
    policy: &TolerancePolicy,
    reference: Option<f64>,
) -> Result<SkewCanonicalForm> {
    skew_canonical_impl(m, policy, reference, None)
}

/// Skew canonical form with the number of 2×2 blocks fixed by the caller.
///
/// The kept singular values must still clear the policy threshold.
pub(crate) fn skew_canonical_blocks(
    m: &Mat,
    policy: &TolerancePolicy,
    reference: f64,
    blocks: usize,
) -> Result<SkewCanonicalForm> {
    skew_canonical_impl(m, policy, Some(reference), Some(blocks))
}

fn skew_canonical_impl(
    m: &Mat,
    policy: &TolerancePolicy,
    reference: Option<f64>,
    forced_blocks: Option<usize>,
) -> Result<SkewCanonicalForm> {
    if !m.is_square() {
        return Err(Error::Structure(format!(
            "skew canonical form needs a square matrix, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let s = m.nrows();
    let norm = m.norm();
    if norm < TINY_NORM && forced_blocks.unwrap_or(0) == 0 {
        return Ok(SkewCanonicalForm {
            u: Mat::identity(s, s),
            mus: Vec::new(),
            k: 0,
        });
    }
    let asym = (m + m.transpose()).norm();
    if asym > policy.structure * norm {
        return Err(Error::Structure(format!(
            "matrix is not skew-symmetric: ‖M + Mᵀ‖_F = {asym:.3e}, ‖M‖_F = {norm:.3e}"
        )));
    }
    let ms = (m - m.transpose()) * 0.5;

    let (u_svd, sigma, _) = sorted_svd(&ms);
    let reference = reference.unwrap_or(sigma[0]);
    let threshold = policy.threshold(s, s, reference);
    let rank = match forced_blocks {
        None => {
            if let Some(&x) = sigma.iter().find(|&&x| (x - threshold).abs() <= AMBIGUITY_BAND * threshold) {
                return Err(Error::RankAmbiguity {
                    reason: format!("skew value {x:.6e} sits on the threshold {threshold:.6e}"),
                    singular_values: sigma.clone(),
                    skew_values: sigma,
                });
            }
            sigma.iter().filter(|&&x| x > threshold).count()
        }
        Some(b) => {
            if 2 * b > s || (b > 0 && sigma[2 * b - 1] <= threshold) {
                return Err(Error::RankAmbiguity {
                    reason: format!("expected {b} skew blocks above threshold {threshold:.3e}"),
                    singular_values: sigma.clone(),
                    skew_values: sigma,
                });
            }
            2 * b
        }
    };
    if rank % 2 != 0 {
        return Err(Error::RankAmbiguity {
            reason: format!("skew matrix has odd numerical rank {rank} at threshold {threshold:.3e}"),
            singular_values: sigma.clone(),
            skew_values: sigma,
        });
    }
    let k = rank / 2;
    if k == 0 {
        return Ok(SkewCanonicalForm {
            u: u_svd,
            mus: Vec::new(),
            k: 0,
        });
    }
    let basis = u_svd.columns(0, rank).into_owned();
    let reduced = basis.transpose() * &ms * &basis;

    // −M² restricted to the range is positive definite with eigenvalues μ² in pairs.
    let gram = reduced.transpose() * &reduced;
    let (_, eigenvectors) = sorted_symmetric_eigen(&gram);

    let mut chosen: Vec<DVector<f64>> = Vec::with_capacity(rank);
    let mut pairs: Vec<(DVector<f64>, DVector<f64>)> = Vec::with_capacity(k);
    for idx in 0..rank {
        if pairs.len() == k {
            break;
        }
        let mut u = eigenvectors.column(idx).into_owned();
        for c in &chosen {
            let d = c.dot(&u);
            u.axpy(-d, c, 1.0);
        }
        let un = u.norm();
        if un < 0.5 {
            continue;
        }
        u /= un;
        let mut v = -(&reduced * &u);
        for c in &chosen {
            let d = c.dot(&v);
            v.axpy(-d, c, 1.0);
        }
        let d = u.dot(&v);
        v.axpy(-d, &u, 1.0);
        let vn = v.norm();
        if vn == 0.0 {
            continue;
        }
        v /= vn;
        chosen.push(u.clone());
        chosen.push(v.clone());
        pairs.push((&basis * u, &basis * v));
    }
    if pairs.len() != k {
        return Err(Error::InternalConsistency(format!(
            "skew pairing found {} of {k} blocks",
            pairs.len()
        )));
    }

    let mut blocks: Vec<(f64, DVector<f64>, DVector<f64>)> = pairs
        .into_iter()
        .map(|(u, v)| {
            let (u, v) = canonical_plane(&u, &v);
            let mu = u.dot(&(&ms * &v));
            (mu, u, v)
        })
        .collect();
    // Stable sort keeps extraction order on ties.
    blocks.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut u = Mat::zeros(s, s);
    let mut mus = Vec::with_capacity(k);
    for (i, (mu, a, b)) in blocks.iter().enumerate() {
        u.set_column(2 * i, a);
        u.set_column(2 * i + 1, b);
        mus.push(*mu);
    }
    for c in rank..s {
        u.set_column(c, &u_svd.column(c));
    }
    Ok(SkewCanonicalForm { u, mus, k })
}

/// Rotates an oriented orthonormal pair inside its plane so that the first
/// vector points along the projection of the standard basis vector closest to
/// the plane, then fixes the sign of its first significant entry.
fn canonical_plane(u: &DVector<f64>, v: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let mut best = 0;
    let mut best_w = -1.0;
    for j in 0..u.len() {
        let w = u[j] * u[j] + v[j] * v[j];
        if w > best_w + 1e-12 {
            best = j;
            best_w = w;
        }
    }
    let rho = best_w.sqrt();
    let (c, s) = (u[best] / rho, v[best] / rho);
    let mut a = u * c + v * s;
    let mut b = v * c - u * s;
    if let Some(&first) = a.iter().find(|x| x.abs() > 1e-12) {
        if first < 0.0 {
            a = -a;
            b = -b;
        }
    }
    (a, b)
}

fn omega(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let k = u.len() / 2;
    (0..k).map(|i| u[i] * v[k + i] - u[k + i] * v[i]).sum()
}

/// Symplectic basis of a symplectic subspace given by an orthonormal basis.
///
/// Returns `(a, b)` with `ω(a_i, b_j) = δ_ij` and `ω(a_i, a_j) = ω(b_i, b_j) = 0`.
pub(crate) fn symplectic_basis(
    basis: &Mat,
    policy: &TolerancePolicy,
) -> Result<(Mat, Mat)> {
    let dim = basis.ncols();
    let n = basis.nrows();
    if dim == 0 {
        return Ok((Mat::zeros(n, 0), Mat::zeros(n, 0)));
    }
    let w = basis.transpose() * j_left(basis);
    let w = (&w - w.transpose()) * 0.5;
    let form = skew_canonical_with(&w, policy, Some(1.0))?;
    if 2 * form.k != dim {
        return Err(Error::DegeneratePairing {
            index: 2 * form.k,
            pairing: form.mus.last().copied().unwrap_or(0.0),
        });
    }
    let mut a = Mat::zeros(n, form.k);
    let mut b = Mat::zeros(n, form.k);
    for i in 0..form.k {
        let (u, v) = form.pair(i);
        let scale = form.mus[i].sqrt();
        a.set_column(i, &(basis * u / scale));
        b.set_column(i, &(basis * v / scale));
    }
    Ok((a, b))
}

/// Extends isotropic vectors `x₁…x_t` lying in the symplectic subspace `within`
/// to a symplectic basis of that subspace.
///
/// The result is `[x₁…x_t, c₁…c_{p−t}, x′₁…x′_t, c′₁…c′_{p−t}]` where `2p = dim(within)`,
/// so that `Tᵀ J T = J_{2p}`. The input vectors are kept unchanged.
pub fn symplectic_complete(
    vectors: &Mat,
    within: &SubspaceBasis,
    policy: &TolerancePolicy,
) -> Result<Mat> {
    let n = vectors.nrows();
    let t = vectors.ncols();
    if within.ambient_dim() != n {
        return Err(Error::Structure(format!(
            "vectors live in ℝ^{n} but the subspace is in ℝ^{}",
            within.ambient_dim()
        )));
    }
    half(n, "ambient")?;
    let p = half(within.dim(), "subspace")?;
    if t > p {
        return Err(Error::Structure(format!(
            "{t} isotropic vectors cannot fit in a {}-dimensional symplectic subspace",
            within.dim()
        )));
    }
    let w = within.basis();
    let scale = vectors.norm().max(1.0);
    let outside = (vectors - w * (w.transpose() * vectors)).norm();
    if outside > policy.structure * scale {
        return Err(Error::Structure(format!(
            "vectors leave the target subspace (residual {outside:.3e})"
        )));
    }
    let iso = (vectors.transpose() * j_left(vectors)).norm();
    if iso > policy.structure * scale * scale {
        return Err(Error::Structure(format!(
            "input vectors are not isotropic (‖XᵀJX‖ = {iso:.3e})"
        )));
    }

    // Pairings ω(x_i, w_j); rows must be independent.
    let g = vectors.transpose() * j_left(w);
    let mut rows: Vec<DVector<f64>> = Vec::with_capacity(t);
    for i in 0..t {
        let mut r = g.row(i).transpose();
        let original = r.norm();
        for q in &rows {
            let d = q.dot(&r);
            r.axpy(-d, q, 1.0);
        }
        let rn = r.norm();
        let tol = policy.structure.max(1e-10) * vectors.column(i).norm().max(f64::MIN_POSITIVE);
        if rn <= tol || original == 0.0 {
            return Err(Error::DegeneratePairing {
                index: i,
                pairing: rn,
            });
        }
        rows.push(r / rn);
    }
    let ggt = &g * g.transpose();
    let ggt_inv = ggt
        .try_inverse()
        .ok_or(Error::DegeneratePairing { index: t, pairing: 0.0 })?;
    let mut partners = w * (g.transpose() * ggt_inv);

    // Make the partners mutually isotropic without touching ω(x_i, x′_j).
    let s = partners.transpose() * j_left(&partners);
    partners += vectors * (s * 0.5);

    // ω-complement of span{x, x′} inside the subspace.
    let mut rest = w.clone();
    for c in 0..w.ncols() {
        let mut col = rest.column(c).into_owned();
        for i in 0..t {
            let xi = vectors.column(i).into_owned();
            let pi = partners.column(i).into_owned();
            let a = omega(&col, &pi);
            let b = omega(&col, &xi);
            col.axpy(-a, &xi, 1.0);
            col.axpy(b, &pi, 1.0);
        }
        rest.set_column(c, &col);
    }
    let rest_basis = numerical_rank(&rest, &TolerancePolicy::with_absolute(1e-8));
    if rest_basis.rank != 2 * (p - t) {
        return Err(Error::DegeneratePairing {
            index: t,
            pairing: rest_basis.singular_values.get(2 * (p - t)).copied().unwrap_or(0.0),
        });
    }
    let (ca, cb) = symplectic_basis(rest_basis.image.basis(), policy)?;

    let mut out = Mat::zeros(n, 2 * p);
    out.columns_mut(0, t).copy_from(vectors);
    out.columns_mut(t, p - t).copy_from(&ca);
    out.columns_mut(p, t).copy_from(&partners);
    out.columns_mut(p + t, p - t).copy_from(&cb);
    Ok(out)
}

/// Principal angles between two subspaces, ascending (cosines descending).
///
/// Small angles come from the sines of `(I − AAᵀ)B` and large ones from the
/// cosines of `AᵀB`, which keeps both ends accurate.
pub fn principal_angles(a: &SubspaceBasis, b: &SubspaceBasis) -> Result<Vec<f64>> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(Error::Structure(format!(
            "principal angles need a common ambient space, got {} and {}",
            a.ambient_dim(),
            b.ambient_dim()
        )));
    }
    let (a, b) = if a.dim() >= b.dim() { (a, b) } else { (b, a) };
    let p = b.dim();
    if p == 0 {
        return Ok(Vec::new());
    }
    let ab = a.basis().transpose() * b.basis();
    let (_, cosines, _) = sorted_svd(&ab);
    let residual = b.basis() - a.basis() * &ab;
    let (_, mut sines, _) = sorted_svd(&residual);
    sines.reverse();
    Ok((0..p)
        .map(|i| {
            let c = cosines[i].clamp(0.0, 1.0);
            if c * c < 0.5 {
                c.acos()
            } else {
                sines[i].clamp(0.0, 1.0).asin()
            }
        })
        .collect())
}

/// Largest principal angle, or π/2 when the dimensions differ.
pub fn subspace_distance(a: &SubspaceBasis, b: &SubspaceBasis) -> Result<f64> {
    let angles = principal_angles(a, b)?;
    if a.dim() != b.dim() {
        return Ok(std::f64::consts::FRAC_PI_2);
    }
    Ok(angles.into_iter().fold(0.0, f64::max))
}

/// Block-diagonal matrix from square blocks.
pub fn block_diag(blocks: &[Mat]) -> Mat {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let m: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(n, m);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

pub(crate) fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub(crate) fn condition_number(m: &Mat) -> f64 {
    let (_, sigma, _) = sorted_svd(m);
    match (sigma.first(), sigma.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

    fn m(rows: usize, cols: usize, data: &[f64]) -> Mat {
        Mat::from_row_slice(rows, cols, data)
    }

    #[test]
    fn jmat_small_cases() {
        assert_eq!(jmat(1).unwrap(), m(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        for k in 1..5 {
            let j = jmat(k).unwrap();
            assert_eq!(&j * &j, -Mat::identity(2 * k, 2 * k));
            assert_eq!(j.transpose(), -&j);
        }
        assert!(matches!(jmat(0), Err(Error::DegenerateDimension(_))));
    }

    #[test]
    fn j_helpers_match_explicit_products() {
        let x = Mat::from_fn(4, 6, |r, c| (r * 7 + c) as f64 - 3.0);
        assert_eq!(j_left(&x), jmat(2).unwrap() * &x);
        assert_eq!(j_right(&x), &x * jmat(3).unwrap());
    }

    #[test]
    fn sharp_of_identity_and_j() {
        assert_eq!(sharp_adjoint(&Mat::identity(2, 2)).unwrap(), Mat::identity(2, 2));
        let j = jmat(3).unwrap();
        assert_eq!(sharp_adjoint(&j).unwrap(), -&j);
        assert!(matches!(
            sharp_adjoint(&Mat::zeros(3, 2)),
            Err(Error::Structure(_))
        ));
    }

    #[test]
    fn symplectic_examples() {
        assert!(is_symplectic(&Mat::identity(4, 4), 1e-12).unwrap().symplectic);
        assert!(is_symplectic(&jmat(2).unwrap(), 1e-12).unwrap().symplectic);
        let d = m(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        let check = is_symplectic(&d, 1e-9).unwrap();
        assert!(!check.symplectic);
        // T T♯ = det(T)·I for 2×2, so the residual is ‖5 I‖_F.
        assert!((check.residual - 5.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!(is_symplectic(&Mat::identity(3, 3), 1e-9).is_err());
    }

    #[test]
    fn rank_examples() {
        let z = numerical_rank(&Mat::zeros(3, 3), &TolerancePolicy::default());
        assert_eq!((z.rank, z.kernel.dim()), (0, 3));

        let i = numerical_rank(&Mat::identity(4, 4), &TolerancePolicy::default());
        assert_eq!((i.rank, i.kernel.dim()), (4, 0));

        let f = m(2, 2, &[1.0, 0.0, 2.0, 0.0]);
        let info = numerical_rank(&f, &TolerancePolicy::default());
        assert_eq!(info.rank, 1);
        let e2 = SubspaceBasis::coordinate(2, &[1]);
        assert!(subspace_distance(&info.kernel, &e2).unwrap() < 1e-14);
    }

    #[test]
    fn rank_of_wide_matrix_has_full_kernel() {
        let f = m(1, 4, &[1.0, 1.0, 0.0, 0.0]);
        let info = numerical_rank(&f, &TolerancePolicy::default());
        assert_eq!((info.rank, info.kernel.dim()), (1, 3));
        assert!((f * info.kernel.basis()).norm() < 1e-14);
        assert!(orthogonality_residual(info.kernel.basis()) < 1e-14);
    }

    #[test]
    fn skew_canonical_examples() {
        let zero = skew_canonical(&Mat::zeros(3, 3), &TolerancePolicy::default()).unwrap();
        assert_eq!(zero.k, 0);
        assert_eq!(zero.u, Mat::identity(3, 3));

        let three_j = jmat(1).unwrap() * 3.0;
        let f = skew_canonical(&three_j, &TolerancePolicy::default()).unwrap();
        assert_eq!(f.k, 1);
        assert!((f.mus[0] - 3.0).abs() < 1e-14);
        assert!((&f.u - Mat::identity(2, 2)).norm() < 1e-14);

        let mm = m(
            4,
            4,
            &[
                0.0, 0.0, 6.0, 0.0, //
                0.0, 0.0, 0.0, 2.0, //
                -6.0, 0.0, 0.0, 0.0, //
                0.0, -2.0, 0.0, 0.0,
            ],
        );
        let f = skew_canonical(&mm, &TolerancePolicy::default()).unwrap();
        assert_eq!(f.k, 2);
        assert!((f.mus[0] - 6.0).abs() < 1e-12 && (f.mus[1] - 2.0).abs() < 1e-12);
        let perm = m(
            4,
            4,
            &[
                1.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 1.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 1.0,
            ],
        );
        assert!((&f.u - perm).norm() < 1e-12);
        assert!((f.u.transpose() * &mm * &f.u - f.block_form()).norm() < 1e-12);
    }

    #[test]
    fn threshold_on_a_skew_value_is_ambiguous() {
        let x = m(2, 2, &[0.0, 0.25, -0.25, 0.0]);
        match skew_canonical(&x, &TolerancePolicy::with_absolute(0.25)) {
            Err(Error::RankAmbiguity { skew_values, .. }) => assert_eq!(skew_values, vec![0.25, 0.25]),
            other => panic!("expected ambiguity, got {other:?}"),
        }
        assert_eq!(skew_canonical(&x, &TolerancePolicy::with_absolute(0.2)).unwrap().k, 1);
        assert_eq!(skew_canonical(&x, &TolerancePolicy::with_absolute(0.3)).unwrap().k, 0);
    }

    #[test]
    fn skew_canonical_rejects_symmetric_input() {
        let s = m(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            skew_canonical(&s, &TolerancePolicy::default()),
            Err(Error::Structure(_))
        ));
    }

    #[test]
    fn complete_single_vectors() {
        let within = SubspaceBasis::full(2);
        let p = TolerancePolicy::default();
        let t = symplectic_complete(&m(2, 1, &[1.0, 0.0]), &within, &p).unwrap();
        assert_eq!(t, Mat::identity(2, 2));
        let t = symplectic_complete(&m(2, 1, &[2.0, 0.0]), &within, &p).unwrap();
        assert!((t - m(2, 2, &[2.0, 0.0, 0.0, 0.5])).norm() < 1e-15);
    }

    #[test]
    fn complete_lagrangian_pair() {
        let x = m(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let t = symplectic_complete(&x, &SubspaceBasis::full(4), &TolerancePolicy::default()).unwrap();
        assert!((t.columns(2, 2) - m(4, 2, &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0])).norm() < 1e-14);
        let j = jmat(2).unwrap();
        assert!((t.transpose() * &j * &t - j).norm() < 1e-14);
    }

    #[test]
    fn complete_extends_inside_a_proper_subspace() {
        // span{e1, e2, e4, e5} ⊂ ℝ⁶ is symplectic (modes 1 and 2).
        let within = SubspaceBasis::coordinate(6, &[0, 1, 3, 4]);
        let x = m(6, 1, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let t = symplectic_complete(&x, &within, &TolerancePolicy::default()).unwrap();
        assert_eq!(t.ncols(), 4);
        assert!((t.column(0) - x.column(0)).norm() == 0.0);
        let j6 = jmat(3).unwrap();
        let j4 = jmat(2).unwrap();
        assert!((t.transpose() * j6 * &t - j4).norm() < 1e-12);
        assert!((t.row(2).norm() + t.row(5).norm()) < 1e-14);
    }

    #[test]
    fn complete_reports_degenerate_pairing() {
        // e1 has no partner inside span{e1, e2} of ℝ⁴ (both are q-directions).
        let within = SubspaceBasis::coordinate(4, &[0, 1]);
        let err = symplectic_complete(&m(4, 1, &[1.0, 0.0, 0.0, 0.0]), &within, &TolerancePolicy::default())
            .unwrap_err();
        assert_eq!(err, Error::DegeneratePairing { index: 0, pairing: 0.0 });
    }

    #[test]
    fn principal_angle_examples() {
        let e1 = SubspaceBasis::coordinate(2, &[0]);
        let e2 = SubspaceBasis::coordinate(2, &[1]);
        assert_eq!(principal_angles(&e1, &e1).unwrap(), vec![0.0]);
        assert!((principal_angles(&e1, &e2).unwrap()[0] - FRAC_PI_2).abs() < 1e-15);
        let diag = SubspaceBasis::new(m(2, 1, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2])).unwrap();
        assert!((principal_angles(&e1, &diag).unwrap()[0] - FRAC_PI_4).abs() < 1e-15);
        assert!(principal_angles(&e1, &SubspaceBasis::full(3)).is_err());
    }

    #[test]
    fn tiny_angles_are_resolved() {
        let eps: f64 = 1e-9;
        let tilted = SubspaceBasis::new(m(2, 1, &[(1.0 - eps * eps).sqrt(), eps])).unwrap();
        let e1 = SubspaceBasis::coordinate(2, &[0]);
        let angle = principal_angles(&e1, &tilted).unwrap()[0];
        assert!((angle - eps).abs() < 1e-15);
    }
}
