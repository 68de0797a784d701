use serde::{Deserialize, Serialize};

use crate::operator::MeasOperator;
use crate::projection::{approx_project_intersection, AltProjOptions};
use crate::recovery::HtpOptions;
use crate::rng::split_seed;
use crate::signal::{gen_sparse_signal, ComplexVec, Dictionary, FlatnessLevel, ModelParams, SignalDist, SparseVec};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RipKind {
    /// `|‖A(X)‖² − ‖X‖²| / ‖X‖²` on single elements.
    Rip,
    /// The same on differences `X − X̂`.
    RipDiff,
    /// `|⟨A(W'), A(W)⟩ − ⟨W', W⟩| / (‖W‖‖W'‖)`.
    Rap,
    /// `|⟨A(W'), A(W)⟩| / (‖W‖‖W'‖)` on pairs with `⟨W', W⟩ = 0`.
    Rop,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RipEstimate {
    pub kind: RipKind,
    /// Largest observed distortion: a lower bound on the restricted constant.
    pub max_distortion: f64,
    pub samples: Vec<f64>,
    /// `(lower edge, upper edge, count)` over 20 equal bins of `[0, max]`.
    pub histogram: Vec<(f64, f64, usize)>,
}

/// Random unit-norm s-sparse factor pushed into `Φ⁻¹C_μ` by the alternating projection.
fn sample_factor(dict: &Dictionary, s: usize, mu: FlatnessLevel, seed: u64) -> Result<SparseVec> {
    let field = dict.field();
    let raw = gen_sparse_signal(dict.n(), s, SignalDist::Gauss, field, seed)?;
    let p = approx_project_intersection(&raw.to_dense(), dict, s, mu, &AltProjOptions::default(), &HtpOptions::default())?;
    let norm = p.coeffs.norm();
    if norm == 0.0 {
        return Err(Error::DegenerateIterate);
    }
    Ok(p.coeffs.scaled(C64::new(1.0 / norm, 0.0)))
}

fn histogram(samples: &[f64], max: f64) -> Vec<(f64, f64, usize)> {
    const BINS: usize = 20;
    let width = if max > 0.0 { max / BINS as f64 } else { 1.0 };
    let mut counts = [0usize; BINS];
    for &x in samples {
        counts[((x / width) as usize).min(BINS - 1)] += 1;
    }
    counts.iter().enumerate().map(|(i, &c)| (i as f64 * width, (i + 1) as f64 * width, c)).collect()
}

fn dense_inner(a: &ComplexVec, b: &ComplexVec) -> C64 {
    a.dotc(b)
}

/// Removes from `a` its component along `b`.
fn orthogonalize(a: &ComplexVec, b: &ComplexVec) -> ComplexVec {
    let nb = b.norm_squared();
    if nb == 0.0 {
        return a.clone();
    }
    a - b * (b.dotc(a) / nb)
}

/// Empirical restricted-isometry-type distortions of `op` over random rank-one elements
/// `u vᵀ` with `u ∈ Γ_{s1} ∩ Φ⁻¹C_{μ1}` and `v ∈ Γ_{s2} ∩ Ψ⁻¹C_{μ2}`.
pub fn estimate_rip_distortion(op: &MeasOperator, params: &ModelParams, kind: RipKind, trials: usize, seed: u64) -> Result<RipEstimate> {
    params.validate()?;
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    if params.n != op.n() || params.m != op.m() {
        return Err(Error::InvalidArgument("model parameters do not match the operator".into()));
    }
    let mut samples = Vec::with_capacity(trials);
    for t in 0..trials {
        let sd = |k: u64| split_seed(seed, &[t as u64, k]);
        let u = sample_factor(op.phi(), params.s1, params.mu1, sd(1))?;
        let v = sample_factor(op.psi(), params.s2, params.mu2, sd(2))?;
        let distortion = match kind {
            RipKind::Rip => {
                let a = op.forward(&u, &v)?;
                (a.norm_squared() - 1.0).abs()
            }
            RipKind::RipDiff | RipKind::Rap | RipKind::Rop => {
                let u2 = sample_factor(op.phi(), params.s1, params.mu1, sd(3))?;
                let v2 = sample_factor(op.psi(), params.s2, params.mu2, sd(4))?;
                let (ud, vd) = (u.to_dense(), v.to_dense());
                let (mut u2d, mut v2d) = (u2.to_dense(), v2.to_dense());
                let aw = op.forward_dense(&ud, &vd)?;
                match kind {
                    RipKind::RipDiff => {
                        let diff = &aw - op.forward_dense(&u2d, &v2d)?;
                        let w = crate::solver::rank_one_distance(&u, &v, &u2, &v2);
                        (diff.norm_squared() - w * w).abs() / (w * w)
                    }
                    RipKind::Rap => {
                        let aw2 = op.forward_dense(&u2d, &v2d)?;
                        // ⟨u2 v2ᵀ, u vᵀ⟩ = (u2ᴴu)(v2ᴴv)
                        let truth = dense_inner(&u2d, &ud) * dense_inner(&v2d, &vd);
                        (dense_inner(&aw2, &aw) - truth).norm() / (u2d.norm() * v2d.norm())
                    }
                    _ => {
                        u2d = orthogonalize(&u2d, &ud);
                        if u2d.norm() <= 1e-8 {
                            u2d = u2.to_dense();
                            v2d = orthogonalize(&v2d, &vd);
                        }
                        let scale = u2d.norm() * v2d.norm();
                        let ip = dense_inner(&u2d, &ud) * dense_inner(&v2d, &vd);
                        if ip.norm() > 1e-10 * scale {
                            return Err(Error::InvalidArgument(format!("orthogonal pair construction failed: {}", ip.norm() / scale)));
                        }
                        let aw2 = op.forward_dense(&u2d, &v2d)?;
                        dense_inner(&aw2, &aw).norm() / scale
                    }
                }
            }
        };
        samples.push(distortion);
    }
    let max_distortion = samples.iter().copied().fold(0.0, f64::max);
    let histogram = histogram(&samples, max_distortion);
    Ok(RipEstimate { kind, max_distortion, samples, histogram })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::SamplingPattern;
    use crate::signal::{gen_dictionary, Field};

    fn gaussian_op(n: usize, m_factor: usize, seed: u64) -> MeasOperator {
        let pattern = if m_factor == 1 { SamplingPattern::full(n) } else { SamplingPattern::uniform(n, m_factor).unwrap() };
        MeasOperator::new(gen_dictionary(n, Field::Complex, seed), gen_dictionary(n, Field::Complex, seed + 1), pattern).unwrap()
    }

    #[test]
    fn spikes_are_measured_isometrically() {
        let n = 32;
        let op = MeasOperator::new(Dictionary::identity(n), Dictionary::identity(n), SamplingPattern::full(n)).unwrap();
        let params = ModelParams { n, m: n, s1: 1, s2: 1, mu1: FlatnessLevel::Active(1.0), mu2: FlatnessLevel::Active(1.0) };
        let est = estimate_rip_distortion(&op, &params, RipKind::Rip, 50, 1).unwrap();
        assert!(est.max_distortion < 1e-12, "{}", est.max_distortion);
        assert_eq!(est.histogram.iter().map(|h| h.2).sum::<usize>(), 50);
    }

    #[test]
    fn all_kinds_run_and_stay_bounded() {
        let n = 64;
        let op = gaussian_op(n, 1, 3);
        let params = ModelParams { n, m: n, s1: 2, s2: 2, mu1: FlatnessLevel::Inactive, mu2: FlatnessLevel::Inactive };
        for kind in [RipKind::Rip, RipKind::RipDiff, RipKind::Rap, RipKind::Rop] {
            let est = estimate_rip_distortion(&op, &params, kind, 40, 9).unwrap();
            assert_eq!(est.samples.len(), 40);
            assert!(est.max_distortion.is_finite() && est.max_distortion < 5.0, "{kind:?}: {}", est.max_distortion);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let op = gaussian_op(16, 1, 1);
        let params = ModelParams { n: 16, m: 16, s1: 2, s2: 2, mu1: FlatnessLevel::Inactive, mu2: FlatnessLevel::Inactive };
        assert!(estimate_rip_distortion(&op, &params, RipKind::Rip, 0, 1).is_err());
        let wrong = ModelParams { m: 8, ..params };
        assert!(estimate_rip_distortion(&op, &wrong, RipKind::Rip, 1, 1).is_err());
    }
}
