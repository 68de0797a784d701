//! Hard thresholding pursuit and its building blocks.

use nalgebra::DMatrix;

use crate::operator::LinearMap;
use crate::signal::{ComplexVec, SparseVec};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HtpOptions {
    pub step_size: f64,
    pub rel_change_tol: f64,
    pub max_iters: usize,
}

impl Default for HtpOptions {
    fn default() -> Self {
        Self { step_size: 1.0, rel_change_tol: 1e-6, max_iters: 100 }
    }
}

impl HtpOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.rel_change_tol > 0.0 && self.max_iters >= 1) {
            return Err(Error::InvalidArgument(format!("invalid HTP options {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HtpResult {
    pub solution: SparseVec,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual_norm: f64,
    /// Some least-squares step fell back to a minimum-norm solve.
    pub rank_deficient: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresSolution {
    pub solution: SparseVec,
    pub residual_norm: f64,
    pub rank_deficient: bool,
}

/// Indices of the `s` largest-modulus entries, lowest index first on ties.
fn top_indices(x: &ComplexVec, s: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[b].norm_sqr().total_cmp(&x[a].norm_sqr()).then(a.cmp(&b)));
    idx.truncate(s);
    idx
}

/// `P_{Γ_s}`: keeps the `s` largest-modulus entries.
pub fn hard_threshold(x: &ComplexVec, s: usize) -> SparseVec {
    let pairs = top_indices(x, s).into_iter().map(|j| (j, x[j])).collect();
    SparseVec::from_pairs(x.len(), pairs)
}

/// `argmin ‖b − Ax‖₂` over `supp(x) ⊂ J`, by Householder QR of the restricted columns.
///
/// Falls back to the SVD minimum-norm solution when the restricted columns are
/// numerically rank deficient.
pub fn least_squares_on_support(map: &dyn LinearMap, b: &ComplexVec, support: &[usize]) -> Result<LeastSquaresSolution> {
    if b.len() != map.out_dim() {
        return Err(Error::DimensionMismatch { expected: map.out_dim(), actual: b.len() });
    }
    if let Some(&j) = support.iter().find(|&&j| j >= map.in_dim()) {
        return Err(Error::InvalidArgument(format!("support index {j} out of range")));
    }
    let n = map.in_dim();
    if support.is_empty() {
        return Ok(LeastSquaresSolution { solution: SparseVec::zeros(n), residual_norm: b.norm(), rank_deficient: false });
    }
    let cols: Vec<ComplexVec> = support.iter().map(|&j| map.column(j)).collect();
    let a = DMatrix::from_columns(&cols);
    let (coef, rank_deficient) = solve_dense_least_squares(a.clone(), b);
    if coef.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Divergence);
    }
    let residual_norm = (b - &a * &coef).norm();
    let solution = SparseVec::from_pairs(n, support.iter().copied().zip(coef.iter().copied()).collect());
    Ok(LeastSquaresSolution { solution, residual_norm, rank_deficient })
}

fn solve_dense_least_squares(a: DMatrix<C64>, b: &ComplexVec) -> (ComplexVec, bool) {
    let (rows, cols) = a.shape();
    if rows >= cols {
        let qr = a.clone().qr();
        let r = qr.r();
        let diag_max = (0..cols).map(|i| r[(i, i)].norm()).fold(0.0, f64::max);
        let tol = diag_max * f64::EPSILON * rows.max(cols) as f64 * 16.0;
        if diag_max > 0.0 && (0..cols).all(|i| r[(i, i)].norm() > tol) {
            let qtb = qr.q().ad_mul(b);
            if let Some(x) = r.solve_upper_triangular(&qtb) {
                return (x, false);
            }
        }
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = smax * f64::EPSILON * rows.max(cols) as f64 * 16.0;
    let x = svd.solve(b, eps).unwrap_or_else(|_| ComplexVec::zeros(cols));
    (x, true)
}

/// Hard thresholding pursuit from `x̂₀ = 0`.
///
/// Each iteration takes a gradient step `x̂ + α A*(b − A x̂)`, keeps the support of its
/// `s` largest entries and solves least squares on that support. Stops on a repeated
/// support, a relative iterate change below the tolerance, or `max_iters`.
pub fn htp(map: &dyn LinearMap, b: &ComplexVec, s: usize, opts: &HtpOptions) -> Result<HtpResult> {
    opts.validate()?;
    if s == 0 {
        return Err(Error::InvalidArgument("sparsity must be >= 1".into()));
    }
    if b.len() != map.out_dim() {
        return Err(Error::DimensionMismatch { expected: map.out_dim(), actual: b.len() });
    }
    let n = map.in_dim();
    let alpha = C64::new(opts.step_size, 0.0);
    let mut x = SparseVec::zeros(n);
    let mut residual = b.clone();
    let mut prev_support: Option<Vec<usize>> = None;
    let mut iterations = 0;
    let mut converged = false;
    let mut rank_deficient = false;

    for _ in 0..opts.max_iters {
        let grad = map.apply_adjoint(&residual);
        let mut w = grad * alpha;
        for (j, v) in x.iter() {
            w[j] += v;
        }
        if w.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Divergence);
        }
        let mut support = top_indices(&w, s.min(n));
        support.retain(|&j| w[j].norm_sqr() != 0.0);
        support.sort_unstable();
        if prev_support.as_deref() == Some(support.as_slice()) {
            converged = true;
            break;
        }
        let ls = least_squares_on_support(map, b, &support)?;
        rank_deficient |= ls.rank_deficient;
        iterations += 1;
        let change = sparse_distance(&ls.solution, &x);
        let prev_norm = x.norm();
        x = ls.solution;
        residual = b - map.apply_sparse(&x);
        prev_support = Some(support);
        if prev_norm > 0.0 && change / prev_norm < opts.rel_change_tol {
            converged = true;
            break;
        }
        if prev_norm == 0.0 && change == 0.0 {
            converged = true;
            break;
        }
    }
    Ok(HtpResult { final_residual_norm: residual.norm(), solution: x, iterations, converged, rank_deficient })
}

/// `‖a − b‖₂` by merging the two supports.
pub fn sparse_distance(a: &SparseVec, b: &SparseVec) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (sa, va, sb, vb) = (a.support(), a.values(), b.support(), b.values());
    let mut acc = 0.0;
    while i < sa.len() || j < sb.len() {
        if j >= sb.len() || (i < sa.len() && sa[i] < sb[j]) {
            acc += va[i].norm_sqr();
            i += 1;
        } else if i >= sa.len() || sb[j] < sa[i] {
            acc += vb[j].norm_sqr();
            j += 1;
        } else {
            acc += (va[i] - vb[j]).norm_sqr();
            i += 1;
            j += 1;
        }
    }
    acc.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{DenseMap, IdentityMap};
    use crate::rng::{gaussian, rng_from_seed};
    use crate::signal::{gen_sparse_signal, Field, SignalDist};

    fn cvec(vals: &[(f64, f64)]) -> ComplexVec {
        ComplexVec::from_iterator(vals.len(), vals.iter().map(|&(a, b)| C64::new(a, b)))
    }

    fn gaussian_map(rows: usize, cols: usize, field: Field, seed: u64) -> DenseMap {
        let mut rng = rng_from_seed(seed);
        DenseMap(DMatrix::from_fn(rows, cols, |_, _| gaussian(&mut rng, field, 1.0 / rows as f64)))
    }

    #[test]
    fn threshold_examples() {
        let x = cvec(&[(3.0, 0.0), (-1.0, 0.0), (0.0, 2.0), (0.5, 0.0)]);
        assert_eq!(hard_threshold(&x, 2).support(), &[0, 2]);
        let sparse = cvec(&[(0.0, 0.0), (1.0, 1.0), (0.0, 0.0), (2.0, 0.0)]);
        assert_eq!(hard_threshold(&sparse, 2).to_dense(), sparse);
        let ties = cvec(&[(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)]);
        assert_eq!(hard_threshold(&ties, 2).support(), &[0, 1]);
    }

    #[test]
    fn threshold_is_the_euclidean_projection() {
        // The best approximation on a fixed support keeps x there, so the oracle
        // enumerates all supports of size s and takes the smallest tail energy.
        let n = 10;
        let s = 4;
        let mut rng = rng_from_seed(17);
        for _ in 0..20 {
            let x = ComplexVec::from_fn(n, |_, _| gaussian(&mut rng, Field::Complex, 1.0));
            let out = hard_threshold(&x, s);
            let got = (&x - out.to_dense()).norm_squared();
            let mut best = f64::INFINITY;
            for mask in 0u32..(1 << n) {
                if mask.count_ones() as usize != s {
                    continue;
                }
                let tail: f64 = (0..n).filter(|j| mask & (1 << j) == 0).map(|j| x[j].norm_sqr()).sum();
                best = best.min(tail);
            }
            assert!((got - best).abs() < 1e-12);
        }
    }

    #[test]
    fn least_squares_identity_copy() {
        let b = cvec(&[(1.0, 2.0), (0.0, 0.0), (-3.0, 0.5), (4.0, 0.0)]);
        let ls = least_squares_on_support(&IdentityMap(4), &b, &[0, 2, 3]).unwrap();
        assert!((ls.solution.to_dense() - &b).norm() < 1e-14 * b.norm());
        assert!(ls.residual_norm < 1e-14 && !ls.rank_deficient);
    }

    #[test]
    fn least_squares_matches_normal_equations() {
        let map = gaussian_map(20, 8, Field::Complex, 3);
        let mut rng = rng_from_seed(4);
        let b = ComplexVec::from_fn(20, |_, _| gaussian(&mut rng, Field::Complex, 1.0));
        let support: Vec<usize> = (0..8).collect();
        let ls = least_squares_on_support(&map, &b, &support).unwrap();
        let a = &map.0;
        let oracle = (a.adjoint() * a).lu().solve(&a.ad_mul(&b)).unwrap();
        assert!((ls.solution.to_dense() - &oracle).norm() < 1e-8 * oracle.norm());
        let r = &b - a * ls.solution.to_dense();
        for j in 0..8 {
            assert!(a.column(j).dotc(&r).norm() <= 1e-10 * b.norm());
        }
        // Consistent right-hand side.
        let b2 = a * &oracle;
        let ls2 = least_squares_on_support(&map, &b2, &support).unwrap();
        assert!(ls2.residual_norm <= 1e-10 * b2.norm());
    }

    #[test]
    fn least_squares_rank_deficient_is_flagged() {
        let mut m = DMatrix::<C64>::zeros(5, 3);
        for i in 0..5 {
            m[(i, 0)] = C64::new(i as f64 + 1.0, 0.0);
            m[(i, 1)] = C64::new(2.0 * (i as f64 + 1.0), 0.0);
            m[(i, 2)] = C64::new((i * i) as f64, 1.0);
        }
        let b = ComplexVec::from_element(5, C64::new(1.0, 0.0));
        let ls = least_squares_on_support(&DenseMap(m.clone()), &b, &[0, 1, 2]).unwrap();
        assert!(ls.rank_deficient);
        // Minimum norm: the collinear pair shares weight in ratio 1:2.
        let x = ls.solution.to_dense();
        assert!((x[1] - x[0] * 2.0).norm() < 1e-8 * x.norm());
    }

    #[test]
    fn htp_identity_full_sparsity() {
        let b = cvec(&[(1.0, 0.0), (-2.0, 1.0), (0.5, 0.0), (3.0, -1.0)]);
        let r = htp(&IdentityMap(4), &b, 4, &HtpOptions::default()).unwrap();
        assert_eq!(r.solution.to_dense(), b);
        assert_eq!(r.iterations, 1);
        assert!(r.converged);
    }

    #[test]
    fn htp_recovers_sparse_vectors() {
        let mut ok = 0;
        for seed in 0..100u64 {
            let map = gaussian_map(64, 256, Field::Real, seed);
            let x = gen_sparse_signal(256, 3, SignalDist::Gauss, Field::Real, seed + 1000).unwrap();
            let x = x.scaled(C64::new(1.0 / x.norm(), 0.0));
            let b = map.apply_sparse(&x);
            let r = htp(&map, &b, 3, &HtpOptions::default()).unwrap();
            if r.solution.support() == x.support() && sparse_distance(&r.solution, &x) <= 1e-8 {
                ok += 1;
            }
        }
        assert!(ok >= 95, "{ok}/100 exact recoveries");
    }

    #[test]
    fn htp_is_stable_under_noise() {
        let mut ok = 0;
        for seed in 0..100u64 {
            let map = gaussian_map(64, 256, Field::Real, seed);
            let x = gen_sparse_signal(256, 3, SignalDist::Gauss, Field::Real, seed + 1000).unwrap();
            let x = x.scaled(C64::new(1.0 / x.norm(), 0.0));
            let clean = map.apply_sparse(&x);
            let mut rng = rng_from_seed(seed + 5000);
            let z = ComplexVec::from_fn(64, |_, _| gaussian(&mut rng, Field::Real, 1.0));
            let z = &z * C64::new(0.01 * clean.norm() / z.norm(), 0.0);
            let r = htp(&map, &(&clean + &z), 3, &HtpOptions::default()).unwrap();
            if sparse_distance(&r.solution, &x) <= 5.0 * z.norm() {
                ok += 1;
            }
        }
        assert!(ok >= 90, "{ok}/100 stable recoveries");
    }

    #[test]
    fn htp_divergence_and_argument_errors() {
        let map = gaussian_map(8, 8, Field::Real, 1);
        let b = ComplexVec::from_element(8, C64::new(1.0, 0.0));
        let opts = HtpOptions { step_size: f64::INFINITY, ..Default::default() };
        assert_eq!(htp(&map, &b, 2, &opts), Err(Error::Divergence));
        assert!(htp(&map, &b, 0, &HtpOptions::default()).is_err());
        assert!(htp(&map, &ComplexVec::zeros(7), 1, &HtpOptions::default()).is_err());
        let bad = HtpOptions { max_iters: 0, ..Default::default() };
        assert!(htp(&map, &b, 2, &bad).is_err());
    }

    #[test]
    fn htp_support_repeat_is_a_fixed_point() {
        let map = gaussian_map(32, 64, Field::Complex, 8);
        let x = gen_sparse_signal(64, 2, SignalDist::Gauss, Field::Complex, 9).unwrap();
        let b = map.apply_sparse(&x);
        let r = htp(&map, &b, 2, &HtpOptions { rel_change_tol: 1e-300, ..Default::default() }).unwrap();
        assert!(r.converged);
        assert!(r.iterations < 100);
        assert!(r.solution.is_s_sparse(2));
    }
}
