//! Projections onto the flatness cone C_μ, onto ΦΓ_s, and the alternating
//! approximate projection onto their intersection.

use crate::dft::UnitaryDft;
use crate::recovery::{htp, HtpOptions};
use crate::signal::{ensure_len, flatness_of_spectrum, ComplexVec, Dictionary, FlatnessLevel, SparseVec};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct ConeProjResult {
    pub projected: ComplexVec,
    /// Smallest `k` (one-based) satisfying the water-filling inequality.
    pub k_star: usize,
    pub was_member: bool,
}

/// Indices sorted by descending modulus, ascending index on ties.
fn descending_order(z: &[C64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..z.len()).collect();
    idx.sort_by(|&a, &b| z[b].norm_sqr().total_cmp(&z[a].norm_sqr()).then(a.cmp(&b)));
    idx
}

fn unit_phase(z: C64) -> C64 {
    let r = z.norm();
    if r == 0.0 {
        C64::new(1.0, 0.0)
    } else {
        z / r
    }
}

/// Exact Euclidean projection onto `C_μ = {x : sf(x) ≤ μ}`.
///
/// In the Fourier domain the cone is `{w : ‖w‖∞ ≤ √(μ/n)‖w‖₂}`. With `ζ = Fx` sorted by
/// decreasing modulus, the smallest `k` with
/// `(k−1)μ + μ Σ_{i≥k} |ζ_(i)|²/|ζ_(k)|² ≥ n` fixes the direction `ξ`: the top `k−1`
/// moduli are capped at `√μ`, the tail is `ζ` rescaled so that `‖ξ‖² = n`, and phases
/// follow `ζ`. The result is `F*(ξ ξ*ζ)/‖ξ‖²`.
pub fn project_flatness_cone(x: &ComplexVec, mu: FlatnessLevel) -> ConeProjResult {
    let n = x.len();
    let member = |x: &ComplexVec| ConeProjResult { projected: x.clone(), k_star: 1, was_member: true };
    let mu = mu.value(n);
    if n == 0 || mu >= n as f64 || x.iter().all(|z| z.norm_sqr() == 0.0) {
        return member(x);
    }
    let dft = UnitaryDft::new(n);
    let zeta = dft.forward(x);
    if flatness_of_spectrum(zeta.as_slice()).is_ok_and(|sf| sf <= mu * (1.0 + 1e-12)) {
        return member(x);
    }
    let order = descending_order(zeta.as_slice());
    // Roundoff-level entries are treated as exact zeros.
    let floor = zeta[order[0]].norm_sqr() * 1e-26;
    let sq: Vec<f64> = order
        .iter()
        .map(|&i| zeta[i].norm_sqr())
        .map(|v| if v <= floor { 0.0 } else { v })
        .collect();
    // tail[k] = Σ_{i ≥ k} sq[i], zero-based.
    let mut tail = vec![0.0; n + 1];
    for k in (0..n).rev() {
        tail[k] = tail[k + 1] + sq[k];
    }
    let nf = n as f64;
    let k_star = (1..=n)
        .find(|&k| {
            let zk = sq[k - 1];
            // A vanishing |ζ_(k)| makes the ratio infinite.
            zk == 0.0 || (k - 1) as f64 * mu + mu * tail[k - 1] / zk >= nf
        })
        .unwrap_or(n);
    if k_star == 1 {
        return member(x);
    }

    let head = (k_star - 1) as f64 * mu;
    let mut xi = vec![C64::new(0.0, 0.0); n];
    for &i in &order[..k_star - 1] {
        xi[i] = unit_phase(zeta[i]) * mu.sqrt();
    }
    let tail_energy = tail[k_star - 1];
    if tail_energy > 0.0 {
        let c = ((nf - head) / tail_energy).sqrt();
        for (&i, &v) in order[k_star - 1..].iter().zip(&sq[k_star - 1..]) {
            xi[i] = if v == 0.0 { C64::new(0.0, 0.0) } else { zeta[i] * c };
        }
    } else {
        // ζ has fewer than k nonzero entries: the remaining budget is spread evenly
        // over its zero entries, all of which leave ⟨ξ, ζ⟩ unchanged.
        let level = ((nf - head) / (n - k_star + 1) as f64).sqrt();
        for &i in &order[k_star - 1..] {
            xi[i] = C64::new(level, 0.0);
        }
    }
    let xi_energy: f64 = xi.iter().map(|z| z.norm_sqr()).sum();
    let coeff: C64 = xi.iter().zip(zeta.iter()).map(|(a, b)| a.conj() * b).sum::<C64>() / xi_energy;
    let mut out: Vec<C64> = xi.iter().map(|a| a * coeff).collect();
    dft.inverse_inplace(&mut out);
    ConeProjResult { projected: ComplexVec::from_vec(out), k_star, was_member: false }
}

/// First violated optimality condition found by [`verify_cone_projection_kkt`].
#[derive(Debug, Clone, PartialEq)]
pub enum KktViolation {
    DimensionMismatch,
    /// A member input was not returned unchanged.
    MemberModified,
    /// The output is not the orthogonal projection of ζ onto its own span.
    NotOrthogonal { defect: f64 },
    PhaseMismatch { index: usize },
    Budget { total: f64 },
    Infeasible { index: usize, a: f64 },
    /// `√a_i ≠ |ζ_i| / (2λ)` on an uncapped entry.
    Stationarity { index: usize, residual: f64 },
    /// A capped entry would need a negative multiplier.
    NegativeMultiplier { index: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    pub lambda: Option<f64>,
    pub violation: Option<KktViolation>,
}

impl KktReport {
    pub fn is_valid(&self) -> bool {
        self.violation.is_none()
    }

    fn fail(v: KktViolation) -> Self {
        Self { lambda: None, violation: Some(v) }
    }
}

const KKT_TOL: f64 = 1e-8;

/// Checks that `result` is optimal for the magnitude problem
/// `min −Σ|ζ_i|√a_i  s.t.  Σa_i = n, 0 ≤ a_i ≤ μ`, with `a_i = n|ŵ_i|²/‖ŵ‖²` taken from
/// the output spectrum `ŵ`: phases agree with ζ, the output is the projection of ζ onto
/// `span(ŵ)`, and one multiplier `λ > 0` gives `√a_i = |ζ_i|/(2λ)` on uncapped entries
/// and `|ζ_i|/(2λ) ≥ √μ` on capped ones.
pub fn verify_cone_projection_kkt(x: &ComplexVec, result: &ConeProjResult, mu: FlatnessLevel) -> KktReport {
    let n = x.len();
    if result.projected.len() != n {
        return KktReport::fail(KktViolation::DimensionMismatch);
    }
    if n == 0 || x.iter().all(|z| z.norm_sqr() == 0.0) {
        return KktReport { lambda: None, violation: None };
    }
    if result.was_member && (&result.projected - x).norm() > KKT_TOL * x.norm() {
        return KktReport::fail(KktViolation::MemberModified);
    }
    let mu = mu.value(n);
    let nf = n as f64;
    let dft = UnitaryDft::new(n);
    let zeta = dft.forward(x);
    let w = dft.forward(&result.projected);
    let zeta_norm = zeta.norm();

    let defect = w.dotc(&(&zeta - &w)).norm();
    if defect > KKT_TOL * zeta_norm * zeta_norm {
        return KktReport::fail(KktViolation::NotOrthogonal { defect });
    }

    let w_max = w.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let z_max = zeta.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for i in 0..n {
        let (wi, zi) = (w[i], zeta[i]);
        if wi.norm() > 1e-12 * w_max && zi.norm() > 1e-12 * z_max {
            let cross = wi * zi.conj();
            if cross.re <= 0.0 || cross.im.abs() > KKT_TOL * cross.norm() {
                return KktReport::fail(KktViolation::PhaseMismatch { index: i });
            }
        }
    }

    let w_energy = w.norm_squared();
    let a: Vec<f64> = w.iter().map(|z| nf * z.norm_sqr() / w_energy).collect();
    let total: f64 = a.iter().sum();
    if (total - nf).abs() > KKT_TOL * nf {
        return KktReport::fail(KktViolation::Budget { total });
    }
    if let Some(i) = (0..n).find(|&i| a[i] > mu * (1.0 + KKT_TOL)) {
        return KktReport::fail(KktViolation::Infeasible { index: i, a: a[i] });
    }

    let capped: Vec<bool> = a.iter().map(|&ai| ai >= mu * (1.0 - KKT_TOL)).collect();
    let free: Vec<usize> = (0..n).filter(|&i| !capped[i]).collect();
    let zero_zeta = |i: usize| zeta[i].norm() <= 1e-12 * z_max;

    if !free.is_empty() && free.iter().all(|&i| zero_zeta(i)) {
        // Budget left over after capping every nonzero frequency: λ = 0 and the
        // remaining mass sits on frequencies that do not affect the objective.
        return KktReport { lambda: Some(0.0), violation: None };
    }

    let lambda = if free.is_empty() {
        (0..n).map(|i| zeta[i].norm() / (2.0 * mu.sqrt())).fold(f64::INFINITY, f64::min)
    } else {
        let mut ests: Vec<f64> = free
            .iter()
            .filter(|&&i| a[i] > 0.0)
            .map(|&i| zeta[i].norm() / (2.0 * a[i].sqrt()))
            .collect();
        if ests.is_empty() {
            return KktReport::fail(KktViolation::Stationarity { index: free[0], residual: f64::INFINITY });
        }
        ests.sort_by(f64::total_cmp);
        ests[ests.len() / 2]
    };
    if !(lambda > 0.0 && lambda.is_finite()) {
        return KktReport::fail(KktViolation::Stationarity { index: 0, residual: lambda });
    }

    for &i in &free {
        let residual = (a[i].sqrt() - zeta[i].norm() / (2.0 * lambda)).abs();
        if residual > KKT_TOL * mu.sqrt() {
            return KktReport::fail(KktViolation::Stationarity { index: i, residual });
        }
    }
    for i in (0..n).filter(|&i| capped[i]) {
        if zeta[i].norm() / (2.0 * lambda) < mu.sqrt() * (1.0 - KKT_TOL) {
            return KktReport::fail(KktViolation::NegativeMultiplier { index: i });
        }
    }
    KktReport { lambda: Some(lambda), violation: None }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DictSparseProjection {
    /// `Φû`, exactly in ΦΓ_s.
    pub image: ComplexVec,
    pub coeffs: SparseVec,
}

/// `P_{ΦΓ_s} x ≈ Φû` with `û = HTP(Φ, x, s)`.
pub fn project_dict_sparse(x: &ComplexVec, phi: &Dictionary, s: usize, opts: &HtpOptions) -> Result<DictSparseProjection> {
    ensure_len(x, phi.n())?;
    let r = htp(phi, x, s, opts)?;
    if r.rank_deficient {
        return Err(Error::SingularDictionary);
    }
    Ok(DictSparseProjection { image: phi.apply_sparse(&r.solution), coeffs: r.solution })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltProjOptions {
    pub max_rounds: usize,
    pub rel_change_tol: f64,
}

impl Default for AltProjOptions {
    fn default() -> Self {
        Self { max_rounds: 50, rel_change_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionProjection {
    pub coeffs: SparseVec,
    /// Alternating rounds performed; zero on the feasible fast path.
    pub rounds: usize,
    /// `sf(Φ·coeffs)`, or `None` for the zero vector.
    pub flatness: Option<f64>,
    /// Whether `Φ·coeffs ∈ C_μ` within a relative slack of 1e-6.
    pub feasible: bool,
}

/// Approximate projection onto `Γ_s ∩ Φ⁻¹C_μ` by alternating `P_{C_μ}` and `P_{ΦΓ_s}`.
///
/// Feasible inputs are returned unchanged. Otherwise the last step of every round is
/// the sparse projection, so the output is always s-sparse; cone membership of its
/// image is reported rather than guaranteed.
pub fn approx_project_intersection(
    u_tilde: &ComplexVec,
    phi: &Dictionary,
    s: usize,
    mu: FlatnessLevel,
    opts: &AltProjOptions,
    htp_opts: &HtpOptions,
) -> Result<IntersectionProjection> {
    ensure_len(u_tilde, phi.n())?;
    if opts.max_rounds == 0 || !(opts.rel_change_tol > 0.0) {
        return Err(Error::InvalidArgument(format!("invalid alternating projection options {opts:?}")));
    }
    let n = phi.n();
    let mu_val = mu.value(n);
    let check = |coeffs: &SparseVec, image: &ComplexVec| -> Result<(Option<f64>, bool)> {
        if coeffs.nnz() == 0 {
            return Ok((None, true));
        }
        let sf = flatness_of_spectrum(UnitaryDft::new(n).forward(image).as_slice())?;
        Ok((Some(sf), sf <= mu_val * (1.0 + 1e-6)))
    };

    let start = SparseVec::from_dense(u_tilde);
    let mut x = phi.apply_sparse(&start);
    if start.is_s_sparse(s) {
        let (flatness, feasible) = check(&start, &x)?;
        if feasible && flatness.is_none_or(|sf| sf <= mu_val) {
            return Ok(IntersectionProjection { coeffs: start, rounds: 0, flatness, feasible });
        }
    }

    let mut coeffs = SparseVec::zeros(n);
    let mut rounds = 0;
    while rounds < opts.max_rounds {
        rounds += 1;
        let prev = x.clone();
        let cone = project_flatness_cone(&x, mu).projected;
        let proj = project_dict_sparse(&cone, phi, s, htp_opts)?;
        coeffs = proj.coeffs;
        x = proj.image;
        let prev_norm = prev.norm();
        if prev_norm == 0.0 || (&x - &prev).norm() / prev_norm < opts.rel_change_tol {
            break;
        }
    }
    let (flatness, feasible) = check(&coeffs, &x)?;
    Ok(IntersectionProjection { coeffs, rounds, flatness, feasible })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dft::{dft, idft};
    use crate::rng::{gaussian, rng_from_seed, split_seed};
    use crate::signal::{gen_dictionary, gen_sparse_signal, spectral_flatness, Field, SignalDist};
    use crate::recovery::hard_threshold;
    use proptest::prelude::*;

    fn rand_vec(n: usize, seed: u64) -> ComplexVec {
        let mut rng = rng_from_seed(seed);
        ComplexVec::from_fn(n, |_, _| gaussian(&mut rng, Field::Complex, 1.0))
    }

    /// Peaky test vector: a Fourier atom plus a little noise.
    fn peaky_vec(n: usize, seed: u64) -> ComplexVec {
        let mut spec = rand_vec(n, seed) * C64::new(0.2, 0.0);
        spec[(seed as usize) % n] += C64::new(3.0, 1.0);
        idft(&spec)
    }

    #[test]
    fn members_are_returned_unchanged() {
        let n = 32;
        let mut e = ComplexVec::zeros(n);
        e[3] = C64::new(2.0, -1.0);
        let r = project_flatness_cone(&e, FlatnessLevel::Active(1.0));
        assert!(r.was_member && r.k_star == 1);
        assert_eq!(r.projected, e);
        let x = rand_vec(n, 2);
        let r = project_flatness_cone(&x, FlatnessLevel::Inactive);
        assert_eq!(r.projected, x);
        let r = project_flatness_cone(&x, FlatnessLevel::Active(n as f64));
        assert_eq!(r.projected, x);
        let report = verify_cone_projection_kkt(&x, &project_flatness_cone(&x, FlatnessLevel::Active(n as f64)), FlatnessLevel::Active(n as f64));
        assert!(report.is_valid(), "{report:?}");
    }

    #[test]
    fn member_kkt_has_interior_multipliers() {
        let x = rand_vec(16, 5);
        let sf = spectral_flatness(&x).unwrap();
        let mu = FlatnessLevel::Active(sf * 1.5);
        let r = project_flatness_cone(&x, mu);
        assert!(r.was_member);
        let report = verify_cone_projection_kkt(&x, &r, mu);
        assert!(report.is_valid());
        // λ = ‖ζ‖ / (2√n) when nothing is capped.
        let expected = x.norm() / (2.0 * 4.0);
        assert!((report.lambda.unwrap() - expected).abs() < 1e-10 * expected);
    }

    #[test]
    fn four_point_example_matches_grid_search() {
        // ζ = [2, 1, 1, 1] with zero phases, μ = 2.
        let zeta = ComplexVec::from_iterator(4, [2.0, 1.0, 1.0, 1.0].iter().map(|&v| C64::new(v, 0.0)));
        let x = idft(&zeta);
        let mu = FlatnessLevel::Active(2.0);
        let r = project_flatness_cone(&x, mu);
        assert_eq!(r.k_star, 2);
        let got = (&x - &r.projected).norm();

        // Maximize ⟨d, ζ⟩ over nonnegative d with ‖d‖² = n and d_i ≤ √μ (the cone
        // condition after fixing the scale): grid over (d0, d1, d2) with d3 implied,
        // then a shrinking pattern search.
        let z = [2.0, 1.0, 1.0, 1.0];
        let cap = 2.0f64.sqrt();
        let score = |d: &[f64; 3]| -> f64 {
            let rest = 4.0 - d.iter().map(|v| v * v).sum::<f64>();
            if d.iter().any(|&v| !(0.0..=cap).contains(&v)) || !(0.0..=2.0).contains(&rest) {
                return f64::NEG_INFINITY;
            }
            d.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() + rest.sqrt() * z[3]
        };
        let g: usize = 101;
        let mut best = ([0.0; 3], f64::NEG_INFINITY);
        for i in 0..g.pow(3) {
            let d = [(i % g) as f64, ((i / g) % g) as f64, (i / g / g) as f64].map(|v| v * cap / (g - 1) as f64);
            let s = score(&d);
            if s > best.1 {
                best = (d, s);
            }
        }
        let mut step = 0.01;
        while step > 1e-12 {
            let mut improved = false;
            for k in 0..3 {
                for sgn in [-1.0, 1.0] {
                    let mut d = best.0;
                    d[k] = (d[k] + sgn * step).clamp(0.0, cap);
                    let s = score(&d);
                    if s > best.1 {
                        best = (d, s);
                        improved = true;
                    }
                }
            }
            if !improved {
                step /= 2.0;
            }
        }
        // Residual of projecting ζ onto the optimal ray: ‖ζ‖² − ⟨d, ζ⟩²/‖d‖².
        let best = (best.0, best.1 * best.1 / 4.0);
        let oracle = (zeta.norm_squared() - best.1).max(0.0).sqrt();
        assert!((got - oracle).abs() < 1e-9, "projection distance {got}, oracle {oracle}");
    }

    #[test]
    fn projection_is_feasible_and_kkt_valid() {
        for seed in 0..200u64 {
            let n = 2 + (seed as usize % 30);
            let x = if seed % 2 == 0 { rand_vec(n, seed) } else { peaky_vec(n, seed) };
            let mu = FlatnessLevel::Active(1.0 + (seed % 7) as f64 * 0.4);
            let r = project_flatness_cone(&x, mu);
            let sf = spectral_flatness(&r.projected).unwrap();
            assert!(sf <= mu.value(n) * (1.0 + 1e-9), "n={n} sf={sf}");
            let report = verify_cone_projection_kkt(&x, &r, mu);
            assert!(report.is_valid(), "seed {seed}: {report:?}");
        }
    }

    #[test]
    fn kkt_detects_perturbed_magnitudes() {
        let mut checked = 0;
        for seed in 0..50u64 {
            let x = peaky_vec(16, seed);
            let mu = FlatnessLevel::Active(2.0);
            let r = project_flatness_cone(&x, mu);
            if r.k_star <= 1 {
                continue;
            }
            let mut spec = dft(&r.projected);
            let i = (seed as usize * 7) % 16;
            spec[i] *= 1.01;
            let bad = ConeProjResult { projected: idft(&spec), ..r };
            assert!(!verify_cone_projection_kkt(&x, &bad, mu).is_valid());
            checked += 1;
        }
        assert!(checked > 20);
    }

    #[test]
    fn sparse_spectrum_spreads_leftover_budget() {
        // One nonzero frequency with μ < n cannot be reached by capping alone.
        let n = 8;
        let mut spec = ComplexVec::zeros(n);
        spec[2] = C64::new(0.0, 3.0);
        let x = idft(&spec);
        let mu = FlatnessLevel::Active(2.0);
        let r = project_flatness_cone(&x, mu);
        assert_eq!(r.k_star, 2);
        let sf = spectral_flatness(&r.projected).unwrap();
        assert!(sf <= 2.0 * (1.0 + 1e-9));
        assert!(verify_cone_projection_kkt(&x, &r, mu).is_valid());
        // Distance equals the analytic optimum ‖ζ‖²(1 − μ/n).
        let d2 = (&x - &r.projected).norm_squared();
        assert!((d2 - 9.0 * (1.0 - 2.0 / 8.0)).abs() < 1e-10);
    }

    #[test]
    fn zero_passes_through() {
        let z = ComplexVec::zeros(5);
        let r = project_flatness_cone(&z, FlatnessLevel::Active(1.5));
        assert!(r.was_member);
        assert_eq!(r.projected, z);
        assert!(verify_cone_projection_kkt(&z, &r, FlatnessLevel::Active(1.5)).is_valid());
    }

    proptest! {
        #[test]
        fn idempotent_and_scale_equivariant(seed in any::<u64>(), n in 2usize..24, mu in 1.0f64..6.0, alpha in 0.01f64..100.0) {
            let x = peaky_vec(n, seed);
            let level = FlatnessLevel::Active(mu);
            let p = project_flatness_cone(&x, level).projected;
            let pp = project_flatness_cone(&p, level).projected;
            prop_assert!((&pp - &p).norm() <= 1e-10 * x.norm().max(1.0));
            let scaled = project_flatness_cone(&(&x * C64::new(alpha, 0.0)), level).projected;
            prop_assert!((&scaled - &p * C64::new(alpha, 0.0)).norm() <= 1e-10 * alpha * x.norm());
        }
    }

    #[test]
    fn dict_sparse_projection_examples() {
        let n = 32;
        let eye = Dictionary::identity(n);
        let x = rand_vec(n, 3);
        let p = project_dict_sparse(&x, &eye, 5, &HtpOptions::default()).unwrap();
        assert!((&p.image - hard_threshold(&x, 5).to_dense()).norm() < 1e-12 * x.norm());

        let phi = gen_dictionary(n, Field::Complex, 4);
        let full = project_dict_sparse(&x, &phi, n, &HtpOptions::default()).unwrap();
        assert!((&full.image - &x).norm() < 1e-8 * x.norm());
    }

    #[test]
    fn dict_sparse_projection_recovers_sparse_images() {
        let n = 256;
        let mut ok = 0;
        for seed in 0..100u64 {
            let phi = gen_dictionary(n, Field::Real, split_seed(seed, &[0]));
            let u0 = gen_sparse_signal(n, 5, SignalDist::Gauss, Field::Real, split_seed(seed, &[1])).unwrap();
            let x = phi.apply_sparse(&u0);
            let p = project_dict_sparse(&x, &phi, 5, &HtpOptions::default()).unwrap();
            if (&p.image - &x).norm() <= 1e-8 * x.norm() {
                ok += 1;
            }
        }
        assert!(ok >= 95, "{ok}/100");
    }

    #[test]
    fn intersection_fast_path_and_inactive_cone() {
        let n = 32;
        let phi = gen_dictionary(n, Field::Real, 1);
        let u = gen_sparse_signal(n, 3, SignalDist::Gauss, Field::Real, 2).unwrap();
        let r = approx_project_intersection(&u.to_dense(), &phi, 3, FlatnessLevel::Inactive, &AltProjOptions::default(), &HtpOptions::default()).unwrap();
        assert_eq!(r.rounds, 0);
        assert_eq!(r.coeffs, u);

        let dense = rand_vec(n, 3);
        let r = approx_project_intersection(&dense, &phi, 3, FlatnessLevel::Inactive, &AltProjOptions::default(), &HtpOptions::default()).unwrap();
        let direct = project_dict_sparse(&phi.apply(&dense), &phi, 3, &HtpOptions::default()).unwrap();
        assert_eq!(r.coeffs.support(), direct.coeffs.support());
        assert!((r.coeffs.to_dense() - direct.coeffs.to_dense()).norm() < 1e-10 * direct.coeffs.norm());
        assert!(r.rounds <= 2 && r.coeffs.is_s_sparse(3));
    }

    #[test]
    fn intersection_repairs_flatness_violations() {
        let n = 64;
        let s = 5;
        let mu = FlatnessLevel::Active((5.0 * (n as f64).ln()).ceil());
        let mut ok = 0;
        let mut violating = 0;
        for seed in 0..100u64 {
            let phi = gen_dictionary(n, Field::Complex, split_seed(seed, &[0]));
            let u = gen_sparse_signal(n, s, SignalDist::Gauss, Field::Complex, split_seed(seed, &[1])).unwrap();
            let mut x = phi.apply_sparse(&u);
            let mut atom = ComplexVec::zeros(n);
            atom[(seed as usize * 13) % n] = C64::new(1.0, 0.0);
            x += idft(&atom) * C64::new(3.0 * x.norm(), 0.0);
            if spectral_flatness(&x).unwrap() > mu.value(n) {
                violating += 1;
            }
            let u_tilde = phi.matrix().clone().lu().solve(&x).unwrap();
            let r = approx_project_intersection(&u_tilde, &phi, s, mu, &AltProjOptions::default(), &HtpOptions::default()).unwrap();
            assert!(r.coeffs.is_s_sparse(s));
            assert!(r.rounds <= 50);
            if spectral_flatness(&phi.apply_sparse(&r.coeffs)).unwrap() <= mu.value(n) * (1.0 + 1e-6) {
                ok += 1;
            }
        }
        assert_eq!(violating, 100);
        assert!(ok >= 90, "{ok}/100 feasible");
    }
}
