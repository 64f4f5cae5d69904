//! JSON documents: system descriptions in, decomposition reports out.
//!
//! Matrices are row-major arrays of arrays. Complex data are split into
//! explicit `_re` / `_im` arrays. Floats are written in their shortest
//! round-trip form, so re-parsing a report reproduces every matrix bitwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorization::FactorizationMode;
use crate::kalman::{DecompositionView, KalmanDecomposition, StateLabel};
use crate::linalg::{Mat, TolerancePolicy};
use crate::model::{from_physical, ClassDims, CMat, PhysicalSpec, QuadratureSystem};
use crate::optomech::OptomechParams;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

pub type Rows = Vec<Vec<f64>>;

fn doc_error(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Document {
        field: field.into(),
        reason: reason.into(),
    }
}

pub fn to_rows(m: &Mat) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Reads a `rows × cols` matrix, rejecting ragged or mis-sized arrays.
pub fn from_rows(field: &str, data: &Rows, rows: usize, cols: usize) -> Result<Mat> {
    if data.len() != rows {
        return Err(doc_error(field, format!("expected {rows} rows, found {}", data.len())));
    }
    if let Some((i, r)) = data.iter().enumerate().find(|(_, r)| r.len() != cols) {
        return Err(doc_error(field, format!("row {i} has {} entries, expected {cols}", r.len())));
    }
    if data.iter().flatten().any(|x| !x.is_finite()) {
        return Err(doc_error(field, "entries must be finite"));
    }
    Ok(Mat::from_fn(rows, cols, |i, j| data[i][j]))
}

fn check_schema(schema: u32) -> Result<()> {
    if schema == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(doc_error("schema", format!("unsupported version {schema}, expected {SCHEMA_VERSION}")))
    }
}

/// `C` directly, or the physical coupling `L = L_q q + L_p p` as real/imaginary parts.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coupling {
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Rows>,
    #[serde(rename = "Lq_re", default, skip_serializing_if = "Option::is_none")]
    pub lq_re: Option<Rows>,
    #[serde(rename = "Lq_im", default, skip_serializing_if = "Option::is_none")]
    pub lq_im: Option<Rows>,
    #[serde(rename = "Lp_re", default, skip_serializing_if = "Option::is_none")]
    pub lp_re: Option<Rows>,
    #[serde(rename = "Lp_im", default, skip_serializing_if = "Option::is_none")]
    pub lp_im: Option<Rows>,
}

/// `Σ` directly, or the unitary `S` as real/imaginary parts.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scattering {
    #[serde(rename = "Sigma", default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Rows>,
    #[serde(rename = "S_re", default, skip_serializing_if = "Option::is_none")]
    pub s_re: Option<Rows>,
    #[serde(rename = "S_im", default, skip_serializing_if = "Option::is_none")]
    pub s_im: Option<Rows>,
}

/// Partial [`TolerancePolicy`]; unset fields keep their defaults.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub absolute: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<f64>,
}

impl ToleranceOverrides {
    pub fn apply(&self, mut policy: TolerancePolicy) -> Result<TolerancePolicy> {
        for (name, value) in [("scale", self.scale), ("absolute", self.absolute), ("structure", self.structure)] {
            if let Some(v) = value {
                if !(v.is_finite() && v > 0.0) {
                    return Err(doc_error(format!("tolerance.{name}"), "must be positive and finite"));
                }
            }
        }
        if let Some(s) = self.scale {
            policy.scale = s;
        }
        if self.absolute.is_some() {
            policy.absolute = self.absolute;
        }
        if let Some(s) = self.structure {
            policy.structure = s;
        }
        Ok(policy)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDocument {
    pub schema: u32,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "R")]
    pub r: Rows,
    pub coupling: Coupling,
    pub scattering: Scattering,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<ToleranceOverrides>,
}

impl SystemDocument {
    /// Quadrature form `(R, C, Σ)` of an existing system.
    pub fn from_system(sys: &QuadratureSystem) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            n: sys.modes(),
            m: sys.fields(),
            r: to_rows(sys.hamiltonian()),
            coupling: Coupling {
                c: Some(to_rows(sys.coupling())),
                ..Coupling::default()
            },
            scattering: Scattering {
                sigma: Some(to_rows(sys.scattering())),
                ..Scattering::default()
            },
            tolerance: None,
        }
    }

    /// The built-in optomechanical example, in physical form.
    pub fn example(params: &OptomechParams) -> Self {
        let spec = params.physical_spec();
        let re = |z: &CMat| to_rows(&z.map(|x| x.re));
        let im = |z: &CMat| to_rows(&z.map(|x| x.im));
        Self {
            schema: SCHEMA_VERSION,
            n: spec.lq.ncols(),
            m: spec.lq.nrows(),
            r: to_rows(&params.hamiltonian()),
            coupling: Coupling {
                lq_re: Some(re(&spec.lq)),
                lq_im: Some(im(&spec.lq)),
                lp_re: Some(re(&spec.lp)),
                lp_im: Some(im(&spec.lp)),
                ..Coupling::default()
            },
            scattering: Scattering {
                s_re: Some(re(&spec.s)),
                s_im: Some(im(&spec.s)),
                ..Scattering::default()
            },
            tolerance: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text).map_err(|e| doc_error("<document>", e.to_string()))?;
        check_schema(doc.schema)?;
        Ok(doc)
    }

    pub fn policy(&self) -> Result<TolerancePolicy> {
        self.tolerance.unwrap_or_default().apply(TolerancePolicy::default())
    }

    /// Builds and validates the system.
    pub fn to_system(&self) -> Result<QuadratureSystem> {
        check_schema(self.schema)?;
        let (n, m) = (self.n, self.m);
        if n == 0 {
            return Err(doc_error("n", "must be at least 1"));
        }
        if m == 0 {
            return Err(doc_error("m", "must be at least 1"));
        }
        let r = from_rows("R", &self.r, 2 * n, 2 * n)?;
        let cp = &self.coupling;
        let physical = [&cp.lq_re, &cp.lq_im, &cp.lp_re, &cp.lp_im];
        let c = match (&cp.c, physical.iter().filter(|x| x.is_some()).count()) {
            (Some(c), 0) => Some(from_rows("coupling.C", c, 2 * m, 2 * n)?),
            (None, 4) => None,
            _ => {
                return Err(doc_error(
                    "coupling",
                    "exactly one of {C} or {Lq_re, Lq_im, Lp_re, Lp_im} must be given",
                ))
            }
        };
        let sc = &self.scattering;
        let sigma = match (&sc.sigma, &sc.s_re, &sc.s_im) {
            (Some(s), None, None) => Some(from_rows("scattering.Sigma", s, 2 * m, 2 * m)?),
            (None, Some(_), Some(_)) => None,
            _ => {
                return Err(doc_error(
                    "scattering",
                    "exactly one of {Sigma} or {S_re, S_im} must be given",
                ))
            }
        };
        let (c, sigma) = match (c, sigma) {
            (Some(c), Some(sigma)) => (c, sigma),
            (c, sigma) => {
                let part = |field: &str, data: &Option<Rows>, rows, cols| {
                    from_rows(field, data.as_ref().expect("presence checked above"), rows, cols)
                };
                let (s_re, s_im) = match sigma {
                    Some(_) => (Mat::identity(m, m), Mat::zeros(m, m)),
                    None => (part("scattering.S_re", &sc.s_re, m, m)?, part("scattering.S_im", &sc.s_im, m, m)?),
                };
                let (lq_re, lq_im, lp_re, lp_im) = match c {
                    Some(_) => (Mat::zeros(m, n), Mat::zeros(m, n), Mat::zeros(m, n), Mat::zeros(m, n)),
                    None => (
                        part("coupling.Lq_re", &cp.lq_re, m, n)?,
                        part("coupling.Lq_im", &cp.lq_im, m, n)?,
                        part("coupling.Lp_re", &cp.lp_re, m, n)?,
                        part("coupling.Lp_im", &cp.lp_im, m, n)?,
                    ),
                };
                let spec = PhysicalSpec::from_parts((&s_re, &s_im), (&lq_re, &lq_im), (&lp_re, &lp_im))
                    .map_err(|e| doc_error("scattering", e.to_string()))?;
                let (c_phys, sigma_phys) = from_physical(&spec).map_err(|e| doc_error("coupling", e.to_string()))?;
                (c.unwrap_or(c_phys), sigma.unwrap_or(sigma_phys))
            }
        };
        QuadratureSystem::new(r, c, sigma).map_err(|e| doc_error(system_field(&e), e.to_string()))
    }
}

/// Document field behind a system validation error.
fn system_field(e: &Error) -> &'static str {
    let subject = match e {
        Error::Validation { invariant, .. } => invariant.as_str(),
        Error::Structure(text) => text.as_str(),
        _ => "",
    };
    match subject.split_whitespace().next() {
        Some("C") => "coupling",
        Some("Sigma") => "scattering",
        _ => "R",
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportResiduals {
    /// `‖V J Vᵀ − J‖_F`
    pub symplecticity: f64,
    /// Largest entry over the mandated zero blocks.
    pub pattern: f64,
    pub pattern_bound: f64,
    pub reconstruction: f64,
}

/// Parameters and derived coefficients of the built-in example.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleQuantities {
    pub omega: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub a: f64,
    pub b: f64,
}

impl From<&OptomechParams> for ExampleQuantities {
    fn from(p: &OptomechParams) -> Self {
        Self {
            omega: p.omega,
            lambda: p.lambda,
            gamma: p.gamma,
            a: p.a(),
            b: p.b(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionReport {
    pub schema: u32,
    pub tool: String,
    pub dims: ClassDims,
    pub mode: FactorizationMode,
    pub tolerance: TolerancePolicy,
    #[serde(rename = "V")]
    pub v: Rows,
    #[serde(rename = "A_hat")]
    pub a_hat: Rows,
    #[serde(rename = "B_hat")]
    pub b_hat: Rows,
    #[serde(rename = "C_hat")]
    pub c_hat: Rows,
    #[serde(rename = "D")]
    pub d: Rows,
    pub labels: Vec<StateLabel>,
    pub residuals: ReportResiduals,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<ExampleQuantities>,
}

/// Owned matrices of a parsed report.
#[derive(Clone, Debug, PartialEq)]
pub struct StoredDecomposition {
    pub v: Mat,
    pub dims: ClassDims,
    pub a_hat: Mat,
    pub b_hat: Mat,
    pub c_hat: Mat,
    pub d: Mat,
    pub labels: Vec<StateLabel>,
    pub policy: TolerancePolicy,
}

impl<'a> From<&'a StoredDecomposition> for DecompositionView<'a> {
    fn from(s: &'a StoredDecomposition) -> Self {
        Self {
            v: &s.v,
            dims: s.dims,
            a_hat: &s.a_hat,
            b_hat: &s.b_hat,
            c_hat: &s.c_hat,
            d: &s.d,
            labels: &s.labels,
            policy: s.policy,
        }
    }
}

impl DecompositionReport {
    pub fn new(dec: &KalmanDecomposition, example: Option<ExampleQuantities>) -> Self {
        let r = &dec.residuals;
        Self {
            schema: SCHEMA_VERSION,
            tool: TOOL_VERSION.into(),
            dims: dec.dims,
            mode: dec.mode,
            tolerance: dec.policy,
            v: to_rows(&dec.v),
            a_hat: to_rows(&dec.a_hat),
            b_hat: to_rows(&dec.b_hat),
            c_hat: to_rows(&dec.c_hat),
            d: to_rows(&dec.d),
            labels: dec.labels.clone(),
            residuals: ReportResiduals {
                symplecticity: r.symplectic,
                pattern: r.pattern.max_entry,
                pattern_bound: crate::kalman::pattern_bound(&dec.a_hat, dec.policy.structure),
                reconstruction: r.reconstruction,
            },
            example,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(text).map_err(|e| doc_error("<report>", e.to_string()))?;
        report.validate()?;
        Ok(report)
    }

    /// Schema version, finite residuals and matrix shapes consistent with `dims`.
    pub fn validate(&self) -> Result<()> {
        check_schema(self.schema)?;
        let r = &self.residuals;
        for (name, x) in [
            ("residuals.symplecticity", r.symplecticity),
            ("residuals.pattern", r.pattern),
            ("residuals.pattern_bound", r.pattern_bound),
            ("residuals.reconstruction", r.reconstruction),
        ] {
            if !x.is_finite() {
                return Err(doc_error(name, "must be finite"));
            }
        }
        self.stored().map(|_| ())
    }

    pub fn stored(&self) -> Result<StoredDecomposition> {
        let n = self.dims.modes();
        let m2 = self.d.len();
        if n == 0 {
            return Err(doc_error("dims", "k + l + d must be at least 1"));
        }
        if m2 == 0 || !m2.is_multiple_of(2) {
            return Err(doc_error("D", format!("expected 2m rows with m ≥ 1, found {m2}")));
        }
        if self.labels.len() != 2 * n {
            return Err(doc_error("labels", format!("expected {} labels, found {}", 2 * n, self.labels.len())));
        }
        Ok(StoredDecomposition {
            v: from_rows("V", &self.v, 2 * n, 2 * n)?,
            dims: self.dims,
            a_hat: from_rows("A_hat", &self.a_hat, 2 * n, 2 * n)?,
            b_hat: from_rows("B_hat", &self.b_hat, 2 * n, m2)?,
            c_hat: from_rows("C_hat", &self.c_hat, m2, 2 * n)?,
            d: from_rows("D", &self.d, m2, m2)?,
            labels: self.labels.clone(),
            policy: self.tolerance,
        })
    }
}

/// `example` subcommand output: the system and its decomposition side by side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleDocument {
    pub schema: u32,
    pub system: SystemDocument,
    pub report: DecompositionReport,
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents hold only finite numbers");
    s.push('\n');
    s
}
