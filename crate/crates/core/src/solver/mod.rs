//! Alternating minimization for sparse blind deconvolution.

mod init;
mod theory;

pub use init::{row_sparse_norms, thres_init, InitResult};
pub use theory::{contraction_factor, htp_constant};

use serde::{Deserialize, Serialize};

use crate::operator::MeasOperator;
use crate::projection::{approx_project_intersection, AltProjOptions};
use crate::recovery::{htp, HtpOptions};
use crate::signal::{ensure_len, spectral_flatness, ComplexVec, Dictionary, FlatnessLevel, ModelParams, SparseVec};
use crate::{Error, Result, C64};

/// How each half-step's least-squares estimate is mapped back into `Γ_s ∩ Φ⁻¹C_μ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionMode {
    /// The exact intersection projection, which has no known algorithm.
    ExactUnavailable,
    #[default]
    Approx,
    /// Skip the flatness constraint and keep the HTP output.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_outer_iters: usize,
    pub rel_change_tol: f64,
    pub projection_mode: ProjectionMode,
    pub htp_opts: HtpOptions,
    pub alt_proj_opts: AltProjOptions,
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_outer_iters: 50,
            rel_change_tol: 1e-6,
            projection_mode: ProjectionMode::Approx,
            htp_opts: HtpOptions::default(),
            alt_proj_opts: AltProjOptions::default(),
            record_trace: true,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iters == 0 || !(self.rel_change_tol > 0.0) {
            return Err(Error::InvalidArgument(format!("invalid solver options {self:?}")));
        }
        self.htp_opts.validate()
    }
}

/// `X̂ = u vᵀ` in factored form; `u` has unit norm and `v` carries the scale.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneEstimate {
    pub u: SparseVec,
    pub v: SparseVec,
}

impl RankOneEstimate {
    pub fn frobenius_norm(&self) -> f64 {
        self.u.norm() * self.v.norm()
    }

    /// Dense `u vᵀ`; intended for small `n` only.
    pub fn to_matrix(&self) -> nalgebra::DMatrix<C64> {
        self.u.to_dense() * self.v.to_dense().transpose()
    }
}

/// True factors of a synthesized instance, used only for trace diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub u: ComplexVec,
    pub v: ComplexVec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    /// `‖b − A(u_t v_tᵀ)‖₂`.
    pub residual: f64,
    pub sf_u: f64,
    pub sf_v: f64,
    pub htp_iters_u: usize,
    pub htp_iters_v: usize,
    pub proj_rounds_u: usize,
    pub proj_rounds_v: usize,
    pub sin_u: Option<f64>,
    pub sin_v: Option<f64>,
    /// Relative change of the estimate from the previous iteration (`None` at `t = 1`).
    pub rel_change: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace {
    pub init: InitResult,
    /// `sin∠(v0, v)` when a reference was supplied.
    pub init_sin_v: Option<f64>,
    pub entries: Vec<TraceEntry>,
    pub outer_iters: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angles {
    pub sin: f64,
    pub cos: f64,
    pub tan: f64,
}

/// Principal angle between `span(a)` and `span(b)`.
///
/// `sin` is evaluated as `‖b̂ − (âᴴb̂)â‖` rather than `√(1 − cos²)`, which keeps
/// precision for nearly aligned vectors.
pub fn angle_metrics(a: &ComplexVec, b: &ComplexVec) -> Result<Angles> {
    ensure_len(b, a.len())?;
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroSignal);
    }
    if !(na.is_finite() && nb.is_finite()) {
        return Err(Error::NonFinite);
    }
    let ah = a / C64::new(na, 0.0);
    let bh = b / C64::new(nb, 0.0);
    let ip = ah.dotc(&bh);
    let cos = ip.norm().min(1.0);
    let sin = (&bh - &ah * ip).norm().min(1.0);
    Ok(Angles { sin, cos, tan: sin / cos })
}

/// Coordinates of `x` and `y` in an orthonormal basis of `span{x, y}`, with `x` along
/// the first basis vector.
fn planar_coords(x: &ComplexVec, y: &ComplexVec) -> ([C64; 2], [C64; 2]) {
    let zero = C64::new(0.0, 0.0);
    let nx = x.norm();
    if nx == 0.0 {
        return ([zero; 2], [C64::new(y.norm(), 0.0), zero]);
    }
    let q = x / C64::new(nx, 0.0);
    let along = q.dotc(y);
    let ortho = (y - &q * along).norm();
    ([C64::new(nx, 0.0), zero], [along, C64::new(ortho, 0.0)])
}

/// `‖u1 v1ᵀ − u2 v2ᵀ‖_F` in factored form.
///
/// Both pairs are expressed in orthonormal bases of `span{u1, u2}` and `span{v1, v2}`,
/// reducing the problem to a 2×2 matrix. Unlike expanding the Gram identity
/// `‖X1‖² + ‖X2‖² − 2Re⟨X1, X2⟩`, this keeps full relative precision for nearly equal
/// arguments.
pub fn rank_one_distance(u1: &SparseVec, v1: &SparseVec, u2: &SparseVec, v2: &SparseVec) -> f64 {
    let (a1, a2) = planar_coords(&u1.to_dense(), &u2.to_dense());
    let (b1, b2) = planar_coords(&v1.to_dense(), &v2.to_dense());
    let mut acc = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            acc += (a1[i] * b1[j] - a2[i] * b2[j]).norm_sqr();
        }
    }
    acc.sqrt()
}

fn normalized(x: &SparseVec) -> Result<SparseVec> {
    let norm = x.norm();
    if !(norm > 0.0) {
        return Err(Error::DegenerateIterate);
    }
    if !norm.is_finite() {
        return Err(Error::Divergence);
    }
    Ok(x.scaled(C64::new(1.0 / norm, 0.0)))
}

struct HalfStep {
    coeffs: SparseVec,
    htp_iters: usize,
    proj_rounds: usize,
}

fn half_step(
    map: &dyn crate::operator::LinearMap,
    b: &ComplexVec,
    dict: &Dictionary,
    s: usize,
    mu: FlatnessLevel,
    opts: &SolverOptions,
) -> Result<HalfStep> {
    let ls = htp(map, b, s, &opts.htp_opts)?;
    let (coeffs, proj_rounds) = match opts.projection_mode {
        ProjectionMode::None => (ls.solution, 0),
        ProjectionMode::ExactUnavailable => return Err(Error::ExactProjectionUnavailable),
        ProjectionMode::Approx => {
            let p = approx_project_intersection(&ls.solution.to_dense(), dict, s, mu, &opts.alt_proj_opts, &opts.htp_opts)?;
            (p.coeffs, p.rounds)
        }
    };
    Ok(HalfStep { coeffs, htp_iters: ls.iterations, proj_rounds })
}

fn sf_or_zero(dict: &Dictionary, x: &SparseVec) -> f64 {
    spectral_flatness(&dict.apply_sparse(x)).unwrap_or(0.0)
}

/// Recovers `X = u vᵀ` from `b ≈ A(X)`.
pub fn spf_bd(op: &MeasOperator, b: &ComplexVec, params: &ModelParams, opts: &SolverOptions) -> Result<(RankOneEstimate, SolveTrace)> {
    spf_bd_with_reference(op, b, params, opts, None)
}

/// [`spf_bd`] with angles to known factors recorded in the trace.
pub fn spf_bd_with_reference(
    op: &MeasOperator,
    b: &ComplexVec,
    params: &ModelParams,
    opts: &SolverOptions,
    reference: Option<&GroundTruth>,
) -> Result<(RankOneEstimate, SolveTrace)> {
    params.validate()?;
    opts.validate()?;
    if params.n != op.n() || params.m != op.m() {
        return Err(Error::InvalidArgument(format!(
            "model parameters (n={}, m={}) do not match the operator (n={}, m={})",
            params.n,
            params.m,
            op.n(),
            op.m()
        )));
    }
    ensure_len(b, op.m())?;
    crate::signal::ensure_finite(b)?;
    if let Some(r) = reference {
        ensure_len(&r.u, op.n())?;
        ensure_len(&r.v, op.n())?;
    }
    let angle = |est: &SparseVec, truth: Option<&ComplexVec>| -> Option<f64> {
        truth.and_then(|t| angle_metrics(&est.to_dense(), t).ok()).map(|a| a.sin)
    };

    let init = thres_init(&op.adjoint(b)?, op.psi(), params.s1, params.s2, params.mu2)?;
    let init_sin_v = angle(&init.v0, reference.map(|r| &r.v));
    let mut v = init.v0.clone();
    let mut u = SparseVec::zeros(op.n());
    let mut entries = Vec::new();
    let mut converged = false;
    let mut t = 0;
    while t < opts.max_outer_iters {
        t += 1;
        let (u_prev, v_prev) = (u.clone(), v.clone());
        let v_unit = normalized(&v)?;
        let hu = half_step(&op.restricted_right_sparse(&v_unit)?, b, op.phi(), params.s1, params.mu1, opts)?;
        u = normalized(&hu.coeffs)?;
        let hv = half_step(&op.restricted_left_sparse(&u)?, b, op.psi(), params.s2, params.mu2, opts)?;
        v = hv.coeffs;

        let rel_change = (t > 1).then(|| {
            let prev = u_prev.norm() * v_prev.norm();
            let d = rank_one_distance(&u, &v, &u_prev, &v_prev);
            if prev > 0.0 {
                d / prev
            } else {
                f64::INFINITY
            }
        });
        if opts.record_trace {
            let residual = (b - op.forward(&u, &v)?).norm();
            entries.push(TraceEntry {
                residual,
                sf_u: sf_or_zero(op.phi(), &u),
                sf_v: sf_or_zero(op.psi(), &v),
                htp_iters_u: hu.htp_iters,
                htp_iters_v: hv.htp_iters,
                proj_rounds_u: hu.proj_rounds,
                proj_rounds_v: hv.proj_rounds,
                sin_u: angle(&u, reference.map(|r| &r.u)),
                sin_v: angle(&v, reference.map(|r| &r.v)),
                rel_change,
            });
        }
        if rel_change.is_some_and(|c| c < opts.rel_change_tol) {
            converged = true;
            break;
        }
    }
    let trace = SolveTrace { init, init_sin_v, entries, outer_iters: t, converged };
    Ok((RankOneEstimate { u, v }, trace))
}
