//! Linear quantum stochastic systems in the real quadrature representation.
//!
//! A system is the triple `(R, C, Σ)`: the Hamiltonian matrix, the coupling
//! matrix and the scattering matrix. The drift and input matrices
//! `A = J R − ½ C♯ C` and `B = −C♯ Σ` are always derived on demand.

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    block_diag, is_symplectic, j_left, jmat_unchecked, numerical_rank, sharp_adjoint, sorted_svd,
    Mat, SubspaceBasis, TolerancePolicy, TINY_NORM,
};

pub type CMat = DMatrix<Complex<f64>>;

/// Relative tolerance for the symmetry of `R` and the symplecticity of `Σ`.
pub const MODEL_TOLERANCE: f64 = 1e-10;

fn validation(invariant: impl Into<String>, residual: f64) -> Error {
    Error::Validation {
        invariant: invariant.into(),
        residual,
    }
}

fn check_finite(name: &str, m: &Mat) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(validation(format!("{name} has finite entries"), f64::NAN))
    }
}

/// An LQSS `dx = A x dt + B dU`, `dY = C x dt + D dU` in quadrature form.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureSystem {
    n: usize,
    m: usize,
    r: Mat,
    c: Mat,
    sigma: Mat,
}

impl QuadratureSystem {
    /// Validates dimensions, symmetry of `R` and symplecticity of `Σ`.
    pub fn new(r: Mat, c: Mat, sigma: Mat) -> Result<Self> {
        for (name, mat) in [("R", &r), ("C", &c), ("Sigma", &sigma)] {
            check_finite(name, mat)?;
        }
        if !r.is_square() || !r.nrows().is_multiple_of(2) || r.nrows() == 0 {
            return Err(Error::Structure(format!(
                "R must be 2n×2n with n ≥ 1, got {}×{}",
                r.nrows(),
                r.ncols()
            )));
        }
        let n = r.nrows() / 2;
        if !sigma.is_square() || !sigma.nrows().is_multiple_of(2) || sigma.nrows() == 0 {
            return Err(Error::Structure(format!(
                "Sigma must be 2m×2m with m ≥ 1, got {}×{}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        let m = sigma.nrows() / 2;
        if c.nrows() != 2 * m || c.ncols() != 2 * n {
            return Err(Error::Structure(format!(
                "C must be {}×{} (2m×2n), got {}×{}",
                2 * m,
                2 * n,
                c.nrows(),
                c.ncols()
            )));
        }
        let rnorm = r.norm();
        let asym = (&r - r.transpose()).norm();
        if asym > MODEL_TOLERANCE * rnorm.max(TINY_NORM) && asym > 0.0 {
            return Err(validation("R symmetric", asym));
        }
        let check = is_symplectic(&sigma, MODEL_TOLERANCE * sigma.norm_squared().max(1.0))?;
        if !check.symplectic {
            return Err(validation("Sigma symplectic", check.residual));
        }
        let r = (&r + r.transpose()) * 0.5;
        Ok(Self { n, m, r, c, sigma })
    }

    /// Builds the system from physical data `(S, L_q, L_p)` and a Hamiltonian matrix.
    pub fn from_physical(r: Mat, spec: &PhysicalSpec) -> Result<Self> {
        let (c, sigma) = from_physical(spec)?;
        Self::new(r, c, sigma)
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn fields(&self) -> usize {
        self.m
    }

    pub fn hamiltonian(&self) -> &Mat {
        &self.r
    }

    pub fn coupling(&self) -> &Mat {
        &self.c
    }

    pub fn scattering(&self) -> &Mat {
        &self.sigma
    }

    /// `J R`
    pub fn jr(&self) -> Mat {
        j_left(&self.r)
    }

    fn c_sharp(&self) -> Mat {
        sharp_adjoint(&self.c).expect("C has even dimensions")
    }

    /// `A = J R − ½ C♯ C`
    pub fn a(&self) -> Mat {
        self.jr() - self.c_sharp() * &self.c * 0.5
    }

    /// `B = −C♯ Σ`
    pub fn b(&self) -> Mat {
        -(self.c_sharp() * &self.sigma)
    }

    pub fn c(&self) -> &Mat {
        &self.c
    }

    /// `D = Σ`
    pub fn d(&self) -> &Mat {
        &self.sigma
    }

    /// The system after the state change `x̂ = T x` for symplectic `T`:
    /// `R̂ = T⁻ᵀ R T⁻¹`, `Ĉ = C T⁻¹`.
    pub fn transformed(&self, t: &Mat) -> Result<Self> {
        let t_inv = sharp_adjoint(t)?;
        let r = t_inv.transpose() * &self.r * &t_inv;
        let c = &self.c * &t_inv;
        Self::new(r, c, self.sigma.clone())
    }
}

/// Complex physical data: scattering `S` (m×m unitary) and coupling `L = L_q q + L_p p`.
///
/// At the interface boundary each complex matrix is carried as a pair of real
/// matrices (real part, imaginary part).
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalSpec {
    pub s: CMat,
    pub lq: CMat,
    pub lp: CMat,
}

pub(crate) fn complex_from_parts(re: &Mat, im: &Mat) -> Result<CMat> {
    if re.shape() != im.shape() {
        return Err(Error::Structure(format!(
            "real and imaginary parts differ in shape: {:?} vs {:?}",
            re.shape(),
            im.shape()
        )));
    }
    Ok(CMat::from_fn(re.nrows(), re.ncols(), |r, c| {
        Complex::new(re[(r, c)], im[(r, c)])
    }))
}

impl PhysicalSpec {
    pub fn new(s: CMat, lq: CMat, lp: CMat) -> Result<Self> {
        let m = s.nrows();
        if !s.is_square() || m == 0 {
            return Err(Error::Structure(format!(
                "S must be m×m with m ≥ 1, got {}×{}",
                s.nrows(),
                s.ncols()
            )));
        }
        if lq.nrows() != m || lp.shape() != lq.shape() || lq.ncols() == 0 {
            return Err(Error::Structure(format!(
                "L_q and L_p must both be {m}×n, got {:?} and {:?}",
                lq.shape(),
                lp.shape()
            )));
        }
        let unitarity = (s.adjoint() * &s - CMat::identity(m, m)).norm();
        if unitarity > MODEL_TOLERANCE {
            return Err(validation("S unitary", unitarity));
        }
        Ok(Self { s, lq, lp })
    }

    /// Builds from real/imaginary part pairs.
    pub fn from_parts(
        (s_re, s_im): (&Mat, &Mat),
        (lq_re, lq_im): (&Mat, &Mat),
        (lp_re, lp_im): (&Mat, &Mat),
    ) -> Result<Self> {
        Self::new(
            complex_from_parts(s_re, s_im)?,
            complex_from_parts(lq_re, lq_im)?,
            complex_from_parts(lp_re, lp_im)?,
        )
    }

    /// Identity scattering.
    pub fn with_identity_scattering(lq: CMat, lp: CMat) -> Result<Self> {
        let m = lq.nrows();
        Self::new(CMat::identity(m, m), lq, lp)
    }
}

fn real_part_checked(name: &str, z: &CMat) -> Result<Mat> {
    let imag = z.iter().fold(0.0f64, |acc, x| acc.max(x.im.abs()));
    let scale = z.iter().fold(1.0f64, |acc, x| acc.max(x.norm()));
    if imag > 1e-12 * scale {
        return Err(validation(format!("{name} real"), imag));
    }
    Ok(z.map(|x| x.re))
}

fn hstack(blocks: &[&CMat]) -> CMat {
    let rows = blocks[0].nrows();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        out.view_mut((0, c), (rows, b.ncols())).copy_from(*b);
        c += b.ncols();
    }
    out
}

fn vstack(blocks: &[&CMat]) -> CMat {
    let cols = blocks[0].ncols();
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(*b);
        r += b.nrows();
    }
    out
}

/// Real coupling and scattering matrices from physical data:
///
/// `C = (1/√2) [[L_q + L_q#, L_p + L_p#], [−i(L_q − L_q#), −i(L_p − L_p#)]]`,
/// `Σ = ½ [[S + S#, i(S − S#)], [−i(S − S#), S + S#]]`.
pub fn from_physical(spec: &PhysicalSpec) -> Result<(Mat, Mat)> {
    let i = Complex::new(0.0, 1.0);
    let conj = |x: &CMat| x.map(|z| z.conj());
    let (lq, lp, s) = (&spec.lq, &spec.lp, &spec.s);
    let (lqc, lpc, sc) = (conj(lq), conj(lp), conj(s));

    let top = hstack(&[&(lq + &lqc), &(lp + &lpc)]);
    let bottom = hstack(&[&((lq - &lqc) * -i), &((lp - &lpc) * -i)]);
    let c = vstack(&[&top, &bottom]) * Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);

    let sum = s + &sc;
    let diff = s - &sc;
    let top = hstack(&[&sum, &(&diff * i)]);
    let bottom = hstack(&[&(&diff * -i), &sum]);
    let sigma = vstack(&[&top, &bottom]) * Complex::new(0.5, 0.0);

    Ok((real_part_checked("C", &c)?, real_part_checked("Sigma", &sigma)?))
}

/// Which generator the Krylov matrices are built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KrylovVariant {
    /// Powers of the drift matrix `A`.
    Drift,
    /// Powers of `J R`.
    Hamiltonian,
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum KrylovDepth {
    /// Powers `0 … 2n−1`.
    #[default]
    Full,
    /// Stop once one extra power leaves the rank unchanged.
    UntilStable(TolerancePolicy),
}

/// Controllability `[B, GB, …]` and observability `[C; CG; …]` matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct KrylovMatrices {
    pub controllability: Mat,
    pub observability: Mat,
    pub variant: KrylovVariant,
    /// Number of powers of the generator used (2n at full depth).
    pub blocks: usize,
}

pub fn krylov_matrices(sys: &QuadratureSystem, variant: KrylovVariant) -> KrylovMatrices {
    krylov_matrices_with(sys, variant, KrylovDepth::Full)
}

pub fn krylov_matrices_with(
    sys: &QuadratureSystem,
    variant: KrylovVariant,
    depth: KrylovDepth,
) -> KrylovMatrices {
    let g = match variant {
        KrylovVariant::Drift => sys.a(),
        KrylovVariant::Hamiltonian => sys.jr(),
    };
    let b = sys.b();
    let c = sys.c().clone();
    let max_blocks = 2 * sys.modes();

    let mut ctrl_blocks = vec![b];
    let mut obs_blocks = vec![c];
    let mut last_ranks: Option<(usize, usize)> = None;
    while ctrl_blocks.len() < max_blocks {
        let next_c = &g * ctrl_blocks.last().unwrap();
        let next_o = obs_blocks.last().unwrap() * &g;
        ctrl_blocks.push(next_c);
        obs_blocks.push(next_o);
        if let KrylovDepth::UntilStable(policy) = depth {
            let ranks = (
                numerical_rank(&hcat(&ctrl_blocks), &policy).rank,
                numerical_rank(&vcat(&obs_blocks), &policy).rank,
            );
            if last_ranks == Some(ranks) {
                break;
            }
            last_ranks = Some(ranks);
        }
    }
    KrylovMatrices {
        blocks: ctrl_blocks.len(),
        controllability: hcat(&ctrl_blocks),
        observability: vcat(&obs_blocks),
        variant,
    }
}

pub(crate) fn hcat(blocks: &[Mat]) -> Mat {
    let rows = blocks[0].nrows();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        out.columns_mut(c, b.ncols()).copy_from(b);
        c += b.ncols();
    }
    out
}

pub(crate) fn vcat(blocks: &[Mat]) -> Mat {
    let cols = blocks[0].ncols();
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        out.rows_mut(r, b.nrows()).copy_from(b);
        r += b.nrows();
    }
    out
}

/// Safety factor on the rank threshold of each staircase step, which sees
/// rounding from the projections as well as from the product.
pub const STAIRCASE_SCALE: f64 = 100.0;

/// Orthonormal basis of the smallest `G`-invariant subspace containing the
/// columns of `b`: the span of `[b, G b, G² b, …]`.
///
/// Built one block at a time; each new block `G · (last block)` is projected off
/// the current basis twice and its range is kept above a threshold relative to
/// `‖G‖₂`. Unlike the explicit Krylov matrix, no power of `G` is ever formed.
pub fn invariant_span(g: &Mat, b: &Mat, policy: &TolerancePolicy) -> SubspaceBasis {
    let n = g.nrows();
    let start = numerical_rank(b, policy);
    let mut basis = start.image.basis().clone();
    let mut last = basis.clone();
    let (_, gsig, _) = sorted_svd(g);
    let gnorm = gsig.first().copied().unwrap_or(0.0);
    let threshold = STAIRCASE_SCALE * policy.threshold(n, n, gnorm);
    while basis.ncols() < n && last.ncols() > 0 && gnorm > TINY_NORM {
        let mut x = g * &last;
        for _ in 0..2 {
            x -= &basis * (basis.transpose() * &x);
        }
        let (u, sigma, _) = sorted_svd(&x);
        let fresh = sigma.iter().filter(|&&s| s > threshold).count().min(n - basis.ncols());
        if fresh == 0 {
            break;
        }
        let mut new = u.columns(0, fresh).into_owned();
        new -= &basis * (basis.transpose() * &new);
        let new = new.qr().q();
        basis = Mat::from_fn(n, basis.ncols() + fresh, |r, c| {
            if c < basis.ncols() {
                basis[(r, c)]
            } else {
                new[(r, c - basis.ncols())]
            }
        });
        last = new;
    }
    SubspaceBasis::from_orthonormal(basis)
}

/// Controllable subspace `Im C̃` and observable row space `Im Õᵀ` from the staircase.
#[derive(Clone, Debug, PartialEq)]
pub struct StructuralSubspaces {
    pub controllable: SubspaceBasis,
    /// Orthogonal complement of `Ker Õ`.
    pub observable: SubspaceBasis,
}

impl StructuralSubspaces {
    pub fn unobservable(&self) -> SubspaceBasis {
        self.observable.orthogonal_complement()
    }
}

pub fn structural_subspaces(
    sys: &QuadratureSystem,
    variant: KrylovVariant,
    policy: &TolerancePolicy,
) -> StructuralSubspaces {
    let g = match variant {
        KrylovVariant::Drift => sys.a(),
        KrylovVariant::Hamiltonian => sys.jr(),
    };
    StructuralSubspaces {
        controllable: invariant_span(&g, &sys.b(), policy),
        observable: invariant_span(&g.transpose(), &sys.c().transpose(), policy),
    }
}

/// The symplectic matrix relating the two Krylov matrices of the `J R` variant:
/// `Õ = T₀ C̃♯` with
/// `T₀ = diag(D, …, D) · diag(J_{2m}, −J_{2m}, …, J_{2m}, −J_{2m}) · J_{4nm}`.
pub fn t0_matrix(n: usize, m: usize, d: &Mat) -> Result<Mat> {
    if n == 0 || m == 0 {
        return Err(Error::DegenerateDimension(format!("T₀ needs n, m ≥ 1 (got n={n}, m={m})")));
    }
    if d.shape() != (2 * m, 2 * m) {
        return Err(Error::Structure(format!(
            "D must be {0}×{0}, got {1}×{2}",
            2 * m,
            d.nrows(),
            d.ncols()
        )));
    }
    let check = is_symplectic(d, 1e-9 * d.norm_squared().max(1.0))?;
    if !check.symplectic {
        return Err(validation("D symplectic", check.residual));
    }
    let jm = jmat_unchecked(m);
    let ds: Vec<Mat> = (0..2 * n).map(|_| d.clone()).collect();
    let js: Vec<Mat> = (0..2 * n)
        .map(|i| if i % 2 == 0 { jm.clone() } else { -&jm })
        .collect();
    Ok(block_diag(&ds) * block_diag(&js) * jmat_unchecked(2 * n * m))
}

/// How the scattering matrix of a random system is drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ScatteringKind {
    #[default]
    Identity,
    /// `Σ = exp(J K)` with `K` random symmetric.
    Exponential,
}

/// Target class dimensions of a structured random system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDims {
    pub k: usize,
    pub l: usize,
    pub d: usize,
}

impl ClassDims {
    pub fn modes(&self) -> usize {
        self.k + self.l + self.d
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct RandomOptions {
    pub scattering: ScatteringKind,
    /// When set, the system is drawn with these (k, l, d) class dimensions and
    /// then hidden behind a random symplectic change of coordinates. Requires
    /// `l ≤ 2m`; the dimensions are then realized for almost every seed.
    pub structure: Option<ClassDims>,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn random_mat(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Mat {
    Mat::from_fn(rows, cols, |_, _| scale * normal(rng))
}

fn random_symmetric(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Mat {
    let mut s = Mat::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let x = scale * normal(rng);
            s[(i, j)] = x;
            s[(j, i)] = x;
        }
    }
    s
}

fn random_skew(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Mat {
    let mut s = Mat::zeros(dim, dim);
    for i in 0..dim {
        for j in (i + 1)..dim {
            let x = scale * normal(rng);
            s[(i, j)] = x;
            s[(j, i)] = -x;
        }
    }
    s
}

/// `exp(J K)` for random symmetric `K`; always symplectic.
pub fn random_symplectic(rng: &mut ChaCha8Rng, half_dim: usize, scale: f64) -> Mat {
    let k = random_symmetric(rng, 2 * half_dim, scale);
    j_left(&k).exp()
}

/// Random orthogonal symplectic matrix `exp([[X, Y], [−Y, X]])`, X skew, Y symmetric.
pub fn random_orthogonal_symplectic(rng: &mut ChaCha8Rng, half_dim: usize) -> Mat {
    let x = random_skew(rng, half_dim, 1.0);
    let y = random_symmetric(rng, half_dim, 1.0);
    let mut w = Mat::zeros(2 * half_dim, 2 * half_dim);
    w.view_mut((0, 0), (half_dim, half_dim)).copy_from(&x);
    w.view_mut((half_dim, half_dim), (half_dim, half_dim)).copy_from(&x);
    w.view_mut((0, half_dim), (half_dim, half_dim)).copy_from(&y);
    w.view_mut((half_dim, 0), (half_dim, half_dim)).copy_from(&(-&y));
    w.exp()
}

/// Deterministic random system for a given seed.
///
/// Unstructured draws use standard normal `R` entries and `C` entries scaled by
/// `1/√(2m)`. Structured draws assemble co, c̄o/cō and c̄ō blocks in canonical
/// coordinates and then apply a random symplectic change of coordinates.
pub fn random_system(n: usize, m: usize, seed: u64, options: RandomOptions) -> Result<QuadratureSystem> {
    if n == 0 || m == 0 {
        return Err(Error::DegenerateDimension(format!(
            "random system needs n, m ≥ 1 (got n={n}, m={m})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coupling_scale = 1.0 / ((2 * m) as f64).sqrt();
    let (r, c) = match options.structure {
        None => (
            random_symmetric(&mut rng, 2 * n, 1.0),
            random_mat(&mut rng, 2 * m, 2 * n, coupling_scale),
        ),
        Some(dims) => {
            if dims.modes() != n {
                return Err(Error::Structure(format!(
                    "class dimensions {}+{}+{} do not add up to n = {n}",
                    dims.k, dims.l, dims.d
                )));
            }
            if dims.l > 2 * m {
                return Err(Error::Structure(format!(
                    "l = {} exceeds 2m = {}: the q_b block is only seen through C",
                    dims.l,
                    2 * m
                )));
            }
            structured_data(&mut rng, dims, m, coupling_scale)
        }
    };
    let sigma = match options.scattering {
        ScatteringKind::Identity => Mat::identity(2 * m, 2 * m),
        ScatteringKind::Exponential => random_symplectic(&mut rng, m, 0.3),
    };
    QuadratureSystem::new(r, c, sigma)
}

fn structured_data(rng: &mut ChaCha8Rng, dims: ClassDims, m: usize, coupling_scale: f64) -> (Mat, Mat) {
    let ClassDims { k, l, .. } = dims;
    let n = dims.modes();
    // Coordinate indices in x̂ = (q_a, q_b, q_c, p_a, p_b, p_c).
    let qa: Vec<usize> = (0..k).collect();
    let qb: Vec<usize> = (k..k + l).collect();
    let qc: Vec<usize> = (k + l..n).collect();
    let pa: Vec<usize> = (n..n + k).collect();
    let pc: Vec<usize> = (n + k + l..2 * n).collect();
    let a_coords: Vec<usize> = qa.iter().chain(&pa).copied().collect();
    let c_coords: Vec<usize> = qc.iter().chain(&pc).copied().collect();

    let mut r = Mat::zeros(2 * n, 2 * n);
    let fill_sym = |r: &mut Mat, rows: &[usize], cols: &[usize], rng: &mut ChaCha8Rng| {
        for (ii, &i) in rows.iter().enumerate() {
            for (jj, &j) in cols.iter().enumerate() {
                if rows == cols && jj < ii {
                    continue;
                }
                let x = normal(rng);
                r[(i, j)] = x;
                r[(j, i)] = x;
            }
        }
    };
    fill_sym(&mut r, &a_coords, &a_coords, rng);
    fill_sym(&mut r, &c_coords, &c_coords, rng);
    fill_sym(&mut r, &qb, &qb, rng);
    fill_sym(&mut r, &qb, &a_coords, rng);
    fill_sym(&mut r, &qb, &c_coords, rng);

    let mut c = Mat::zeros(2 * m, 2 * n);
    for &j in qa.iter().chain(&pa).chain(&qb) {
        for i in 0..2 * m {
            c[(i, j)] = coupling_scale * normal(rng);
        }
    }

    // Hide the structure: x̂ = T x with T symplectic and moderately conditioned.
    let t = random_orthogonal_symplectic(rng, n) * random_symplectic(rng, n, 0.2);
    let r = t.transpose() * r * &t;
    let r = (&r + r.transpose()) * 0.5;
    let c = c * t;
    (r, c)
}
