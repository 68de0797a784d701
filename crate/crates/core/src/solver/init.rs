//! Thresholded initialization of the right factor.

use nalgebra::DMatrix;

use crate::dft::UnitaryDft;
use crate::signal::{Dictionary, FlatnessLevel, SparseVec};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct InitResult {
    /// Unit-norm initial right factor, supported on `j2`.
    pub v0: SparseVec,
    pub s0: usize,
    /// Estimated support of the left factor, ascending.
    pub j1: Vec<usize>,
    /// Support of `v0`, ascending.
    pub j2: Vec<usize>,
    /// The flatness certificate held at the returned `j2`, so `Ψv0 ∈ C_{μ2}`.
    pub feasible: bool,
    /// The selected submatrix was zero and `v0` is an arbitrary unit vector.
    pub degenerate: bool,
}

/// Indices of the `k` largest values, lowest index first on ties, returned ascending.
fn top_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

/// `ζ_k` = ℓ₂ norm of the best `s0`-term approximation of row `k` of `m`.
///
/// `s0 ≥ n` gives the plain row norms; `s0 = 0` gives zeros.
pub fn row_sparse_norms(m: &DMatrix<C64>, s0: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(m.ncols());
    (0..m.nrows())
        .map(|k| {
            row.clear();
            row.extend(m.row(k).iter().map(|z| z.norm_sqr()));
            let keep = s0.min(row.len());
            if keep < row.len() {
                row.select_nth_unstable_by(keep, |a, b| b.total_cmp(a));
            }
            row[..keep].iter().sum::<f64>().sqrt()
        })
        .collect()
}

fn column_norms_on_rows(m: &DMatrix<C64>, rows: &[usize]) -> Vec<f64> {
    (0..m.ncols()).map(|j| rows.iter().map(|&i| m[(i, j)].norm_sqr()).sum::<f64>()).collect()
}

/// Support estimates `(Ĵ1, Ĵ2)` at a given `s0`.
fn supports(m: &DMatrix<C64>, s1: usize, s0: usize) -> (Vec<usize>, Vec<usize>) {
    let j1 = top_k(&row_sparse_norms(m, s0), s1);
    let j2 = top_k(&column_norms_on_rows(m, &j1), s0);
    (j1, j2)
}

/// `‖FΨ_J‖_{1→∞}·√|J| ≤ √(μ/n)·σ_min(FΨ_J)`, a certificate that every vector supported on
/// `J` has `Ψ`-image in `C_μ`. Always true when μ is not binding.
fn flatness_certificate(psi: &Dictionary, j: &[usize], mu: FlatnessLevel) -> bool {
    let n = psi.n();
    if !mu.is_binding(n) {
        return true;
    }
    let dft = UnitaryDft::new(n);
    let mut fpsi = DMatrix::<C64>::zeros(n, j.len());
    for (c, &col) in j.iter().enumerate() {
        let mut buf = psi.matrix().column(col).as_slice().to_vec();
        dft.forward_inplace(&mut buf);
        fpsi.column_mut(c).as_mut_slice().copy_from_slice(&buf);
    }
    let max_abs = fpsi.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let sigma_min = fpsi.singular_values().min();
    max_abs * (j.len() as f64).sqrt() <= (mu.value(n) / n as f64).sqrt() * sigma_min
}

/// Top right singular vector of `b` by power iteration on `bᴴb` from the all-ones vector.
/// Returns `None` when `b` is zero.
fn top_right_singular_vector(b: &DMatrix<C64>) -> Option<Vec<C64>> {
    let g = b.ad_mul(b);
    let k = g.nrows();
    let mut x = nalgebra::DVector::from_element(k, C64::new(1.0 / (k as f64).sqrt(), 0.0));
    for _ in 0..100_000 {
        let y = &g * &x;
        let norm = y.norm();
        if !(norm > 0.0) {
            return None;
        }
        let y = y / C64::new(norm, 0.0);
        let done = (&y - &x).norm() < 1e-10;
        x = y;
        if done {
            break;
        }
    }
    Some(x.iter().copied().collect())
}

/// Thresholded initialization: picks `s0 ≤ s2` as large as the flatness certificate
/// allows, estimates both supports from `m` (typically `A*(b)`), and returns the top
/// right singular vector of the selected submatrix.
///
/// For `m ≈ c·u vᵀ` the right singular vector is `conj(v)/‖v‖`, so `v0` is returned
/// conjugated to align with `v` itself.
pub fn thres_init(m: &DMatrix<C64>, psi: &Dictionary, s1: usize, s2: usize, mu2: FlatnessLevel) -> Result<InitResult> {
    let n = psi.n();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: if m.nrows() != n { m.nrows() } else { m.ncols() } });
    }
    if !(1..=n).contains(&s1) || !(1..=n).contains(&s2) {
        return Err(Error::InvalidArgument(format!("sparsities must lie in 1..={n}, got s1={s1}, s2={s2}")));
    }
    if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NonFinite);
    }

    let mut s0 = 1;
    let mut j2 = supports(m, s1, 1).1;
    while s0 <= s2 && flatness_certificate(psi, &j2, mu2) {
        s0 += 1;
        if s0 > n {
            break;
        }
        j2 = supports(m, s1, s0).1;
    }
    let s0 = s0.saturating_sub(1).max(1);
    let (j1, j2) = supports(m, s1, s0);
    let feasible = flatness_certificate(psi, &j2, mu2);

    let sub = DMatrix::from_fn(j1.len(), j2.len(), |r, c| m[(j1[r], j2[c])]);
    let (vals, degenerate) = match top_right_singular_vector(&sub) {
        Some(x) => (x.iter().map(|z| z.conj()).collect(), false),
        None => (vec![C64::new(1.0 / (s0 as f64).sqrt(), 0.0); s0], true),
    };
    let mut dense = crate::ComplexVec::zeros(n);
    for (&j, &z) in j2.iter().zip(&vals) {
        dense[j] = z;
    }
    // Exact zeros (a zero column of the submatrix) drop out of the support.
    let v0 = SparseVec::from_dense(&dense);
    Ok(InitResult { v0, s0, j1, j2, feasible, degenerate })
}
