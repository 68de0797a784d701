//! Signals, sparse coefficient vectors, random dictionaries and spectral flatness.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dft::UnitaryDft;
use crate::rng::{gaussian, rng_from_seed, split_seed};
use crate::{Error, Result, C64};

/// Dense length-`n` complex signal.
pub type ComplexVec = DVector<C64>;

pub(crate) fn ensure_finite(x: &ComplexVec) -> Result<()> {
    if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub(crate) fn ensure_len(x: &ComplexVec, n: usize) -> Result<()> {
    if x.len() == n {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: n, actual: x.len() })
    }
}

/// Scalar field of a dictionary or coefficient draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Complex,
    Real,
}

impl Field {
    pub fn as_str(self) -> &'static str {
        match self {
            Field::Complex => "complex",
            Field::Real => "real",
        }
    }
}

/// Sparse coefficient vector: strictly increasing support with nonzero values.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVec {
    n: usize,
    support: Vec<usize>,
    values: Vec<C64>,
}

impl SparseVec {
    pub fn new(n: usize, support: Vec<usize>, values: Vec<C64>) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "support has {} indices but {} values",
                support.len(),
                values.len()
            )));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("support must be strictly increasing".into()));
        }
        if support.last().is_some_and(|&j| j >= n) {
            return Err(Error::InvalidArgument("support index out of range".into()));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite);
        }
        if values.iter().any(|v| v.norm_sqr() == 0.0) {
            return Err(Error::InvalidArgument("stored values must be nonzero".into()));
        }
        Ok(Self { n, support, values })
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, support: Vec::new(), values: Vec::new() }
    }

    /// Keeps the exactly nonzero entries of `x`.
    pub fn from_dense(x: &ComplexVec) -> Self {
        let (support, values) = x
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm_sqr() != 0.0)
            .map(|(j, v)| (j, *v))
            .unzip();
        Self { n: x.len(), support, values }
    }

    /// Builds from `(index, value)` pairs on distinct indices, dropping exact zeros.
    pub(crate) fn from_pairs(n: usize, mut pairs: Vec<(usize, C64)>) -> Self {
        pairs.retain(|(_, v)| v.norm_sqr() != 0.0);
        pairs.sort_by_key(|&(j, _)| j);
        let (support, values) = pairs.into_iter().unzip();
        Self { n, support, values }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn nnz(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, C64)> + '_ {
        self.support.iter().copied().zip(self.values.iter().copied())
    }

    /// Membership in Γ_s.
    pub fn is_s_sparse(&self, s: usize) -> bool {
        self.nnz() <= s
    }

    pub fn to_dense(&self) -> ComplexVec {
        let mut x = ComplexVec::zeros(self.n);
        for (j, v) in self.iter() {
            x[j] = v;
        }
        x
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `‖u‖∞ / ‖u‖₂`, zero for the zero vector.
    pub fn peakedness(&self) -> f64 {
        let n2 = self.norm();
        if n2 == 0.0 {
            0.0
        } else {
            self.linf() / n2
        }
    }

    pub fn scaled(&self, alpha: C64) -> Self {
        if alpha.norm_sqr() == 0.0 {
            return Self::zeros(self.n);
        }
        Self {
            n: self.n,
            support: self.support.clone(),
            values: self.values.iter().map(|v| v * alpha).collect(),
        }
    }

    /// `⟨self, other⟩ = selfᴴ other`.
    pub fn dot(&self, other: &SparseVec) -> C64 {
        let (mut i, mut j) = (0, 0);
        let mut acc = C64::new(0.0, 0.0);
        while i < self.support.len() && j < other.support.len() {
            match self.support[i].cmp(&other.support[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[i].conj() * other.values[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

/// Square dictionary with its generation metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    matrix: DMatrix<C64>,
    field: Field,
    seed: Option<u64>,
}

impl Dictionary {
    pub fn from_matrix(matrix: DMatrix<C64>, field: Field) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidArgument("dictionary must be square and nonempty".into()));
        }
        if matrix.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite);
        }
        Ok(Self { matrix, field, seed: None })
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: DMatrix::identity(n, n), field: Field::Real, seed: None }
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn apply(&self, u: &ComplexVec) -> ComplexVec {
        &self.matrix * u
    }

    /// `Φu` as a combination of the columns on `supp(u)`.
    pub fn apply_sparse(&self, u: &SparseVec) -> ComplexVec {
        let mut x = ComplexVec::zeros(self.n());
        for (j, v) in u.iter() {
            x.axpy(v, &self.matrix.column(j), C64::new(1.0, 0.0));
        }
        x
    }

    /// `Φ*x`.
    pub fn apply_adjoint(&self, x: &ComplexVec) -> ComplexVec {
        self.matrix.ad_mul(x)
    }
}

/// Spectral flatness bound μ, or `Inactive` (μ = n, never binding).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlatnessLevel {
    Active(f64),
    Inactive,
}

impl FlatnessLevel {
    pub fn active(mu: f64) -> Result<Self> {
        if mu.is_finite() && mu >= 1.0 {
            Ok(FlatnessLevel::Active(mu))
        } else {
            Err(Error::InvalidArgument(format!("flatness level must be >= 1, got {mu}")))
        }
    }

    /// Effective μ for signals of length `n`, clipped to `n`.
    pub fn value(self, n: usize) -> f64 {
        match self {
            FlatnessLevel::Active(mu) => mu.min(n as f64),
            FlatnessLevel::Inactive => n as f64,
        }
    }

    pub fn is_binding(self, n: usize) -> bool {
        self.value(n) < n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub m: usize,
    pub s1: usize,
    pub s2: usize,
    pub mu1: FlatnessLevel,
    pub mu2: FlatnessLevel,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.n >= 1
            && (1..=self.n).contains(&self.m)
            && (1..=self.n).contains(&self.s1)
            && (1..=self.n).contains(&self.s2);
        if !ok {
            return Err(Error::InvalidArgument(format!("inconsistent model parameters {self:?}")));
        }
        for mu in [self.mu1, self.mu2] {
            if let FlatnessLevel::Active(v) = mu {
                FlatnessLevel::active(v)?;
            }
        }
        Ok(())
    }
}

/// `sf(x) = n‖Fx‖∞² / ‖Fx‖₂²`.
pub fn spectral_flatness(x: &ComplexVec) -> Result<f64> {
    let n = x.len();
    if n == 0 {
        return Err(Error::ZeroSignal);
    }
    let spec = UnitaryDft::new(n).forward(x);
    flatness_of_spectrum(spec.as_slice())
}

pub(crate) fn flatness_of_spectrum(spec: &[C64]) -> Result<f64> {
    let (peak, energy) = spec
        .iter()
        .map(|z| z.norm_sqr())
        .fold((0.0f64, 0.0f64), |(p, e), a| (p.max(a), e + a));
    if energy == 0.0 {
        return Err(Error::ZeroSignal);
    }
    if !energy.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(spec.len() as f64 * peak / energy)
}

/// Membership in C_μ; the zero vector is the cone apex and counts as a member.
pub fn in_flatness_cone(x: &ComplexVec, mu: FlatnessLevel) -> bool {
    match spectral_flatness(x) {
        Ok(sf) => sf <= mu.value(x.len()),
        Err(_) => x.iter().all(|z| z.norm_sqr() == 0.0),
    }
}

/// i.i.d. Gaussian dictionary with entry variance `1/n`, filled column by column.
pub fn gen_dictionary(n: usize, field: Field, seed: u64) -> Dictionary {
    let mut rng = rng_from_seed(seed);
    let var = 1.0 / n as f64;
    let data: Vec<C64> = (0..n * n).map(|_| gaussian(&mut rng, field, var)).collect();
    Dictionary { matrix: DMatrix::from_vec(n, n, data), field, seed: Some(seed) }
}

/// Distribution of the nonzero coefficients of a synthesized sparse signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalDist {
    Gauss,
    /// Gaussian draw with one support entry rescaled so that `‖u‖∞ ≥ c‖u‖₂`.
    Peaked(f64),
}

/// s-sparse signal with a uniformly random support of size exactly `s`.
pub fn gen_sparse_signal(n: usize, s: usize, dist: SignalDist, field: Field, seed: u64) -> Result<SparseVec> {
    if s == 0 || s > n {
        return Err(Error::InvalidArgument(format!("sparsity {s} outside 1..={n}")));
    }
    if let SignalDist::Peaked(c) = dist {
        if !(c > 0.0 && c <= 1.0) || (c == 1.0 && s > 1) {
            return Err(Error::InvalidArgument(format!("peakedness {c} unattainable at s = {s}")));
        }
    }
    let mut rng = rng_from_seed(seed);
    let mut support = index::sample(&mut rng, n, s).into_vec();
    support.sort_unstable();
    let mut values: Vec<C64> = (0..s)
        .map(|_| loop {
            let g = gaussian(&mut rng, field, 1.0);
            if g.norm_sqr() > 0.0 {
                break g;
            }
        })
        .collect();
    if let SignalDist::Peaked(c) = dist {
        if s > 1 {
            let k = rng.random_range(0..s);
            let rest: f64 = values.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, v)| v.norm_sqr()).sum();
            // |u_k|² = c²/(1−c²)·Σ_{j≠k}|u_j|² gives |u_k| = c‖u‖₂ exactly.
            let target = (c * c / (1.0 - c * c) * rest).sqrt();
            let phase = values[k] / values[k].norm();
            values[k] = phase * target;
        }
    }
    SparseVec::new(n, support, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlatnessMode {
    /// Fresh dictionary and fresh sparse signal per trial.
    FixedSignal,
    /// Per trial, a lower bound on `sup_{u ∈ Γ_s} sf(Φu)` by random and row-aligned probes.
    AdversarialSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatnessSummary {
    pub samples: Vec<f64>,
    pub max_sf: f64,
    pub mean_sf: f64,
    /// `(probability, value)` pairs at 0.1, 0.5 and 0.9.
    pub quantiles: Vec<(f64, f64)>,
}

pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Monte-Carlo statistics of `sf(Φu)` for complex Gaussian `Φ` and s-sparse `u`.
pub fn flatness_stats(n: usize, s: usize, trials: usize, mode: FlatnessMode, seed: u64) -> Result<FlatnessSummary> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    if s == 0 || s > n {
        return Err(Error::InvalidArgument(format!("sparsity {s} outside 1..={n}")));
    }
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = split_seed(seed, &[t as u64]);
            match mode {
                FlatnessMode::FixedSignal => fixed_signal_sf(n, s, trial_seed),
                FlatnessMode::AdversarialSearch => adversarial_sf(n, s, trial_seed),
            }
        })
        .collect::<Result<_>>()?;
    let mut sorted = samples.clone();
    sorted.sort_by(f64::total_cmp);
    let mean_sf = samples.iter().sum::<f64>() / samples.len() as f64;
    Ok(FlatnessSummary {
        max_sf: *sorted.last().expect("trials >= 1"),
        mean_sf,
        quantiles: [0.1, 0.5, 0.9].iter().map(|&p| (p, quantile_sorted(&sorted, p))).collect(),
        samples,
    })
}

fn fixed_signal_sf(n: usize, s: usize, seed: u64) -> Result<f64> {
    let u = gen_sparse_signal(n, s, SignalDist::Gauss, Field::Complex, split_seed(seed, &[0]))?;
    // Φu only touches the columns on supp(u); drawing just those columns gives the
    // same distribution as drawing all of Φ.
    let mut rng = rng_from_seed(split_seed(seed, &[1]));
    let var = 1.0 / n as f64;
    let mut x = ComplexVec::zeros(n);
    for (_, v) in u.iter() {
        for xi in x.iter_mut() {
            *xi += gaussian(&mut rng, Field::Complex, var) * v;
        }
    }
    spectral_flatness(&x)
}

fn adversarial_sf(n: usize, s: usize, seed: u64) -> Result<f64> {
    let phi = gen_dictionary(n, Field::Complex, split_seed(seed, &[0]));
    let dft = UnitaryDft::new(n);
    let sqrt_n = (n as f64).sqrt();
    // G = √n FΦ; entries are standard complex Gaussians.
    let mut g = phi.matrix().clone();
    for mut col in g.column_iter_mut() {
        let slice = col.as_mut_slice();
        dft.forward_inplace(slice);
        slice.iter_mut().for_each(|z| *z *= sqrt_n);
    }
    let sf_of = |u: &SparseVec| -> Result<f64> { spectral_flatness(&phi.apply_sparse(u)) };
    let mut best = 0.0f64;

    // Random s-sparse probes.
    for p in 0..8u64 {
        let u = gen_sparse_signal(n, s, SignalDist::Gauss, Field::Complex, split_seed(seed, &[1, p]))?;
        best = best.max(sf_of(&u)?);
    }

    // Row alignment on a fixed random support: the best row realizes Σ_{j∈J}|g_ij|².
    let mut rng = rng_from_seed(split_seed(seed, &[2]));
    let mut fixed: Vec<usize> = index::sample(&mut rng, n, s).into_vec();
    fixed.sort_unstable();
    let row_energy = |i: usize, cols: &[usize]| cols.iter().map(|&j| g[(i, j)].norm_sqr()).sum::<f64>();
    let best_row = (0..n).max_by(|&a, &b| row_energy(a, &fixed).total_cmp(&row_energy(b, &fixed))).unwrap_or(0);
    best = best.max(sf_of(&aligned_probe(&g, best_row, fixed, n))?);

    // Row alignment with the row's own top-s support, for the strongest rows.
    let mut rows: Vec<(usize, Vec<usize>, f64)> = (0..n)
        .map(|i| {
            let mut cols: Vec<usize> = (0..n).collect();
            cols.sort_by(|&a, &b| g[(i, b)].norm_sqr().total_cmp(&g[(i, a)].norm_sqr()).then(a.cmp(&b)));
            cols.truncate(s);
            cols.sort_unstable();
            let e = row_energy(i, &cols);
            (i, cols, e)
        })
        .collect();
    rows.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
    for (i, cols, _) in rows.into_iter().take(4) {
        best = best.max(sf_of(&aligned_probe(&g, i, cols, n))?);
    }
    Ok(best)
}

/// Unit vector on `cols` aligned with row `i` of `g`.
fn aligned_probe(g: &DMatrix<C64>, i: usize, cols: Vec<usize>, n: usize) -> SparseVec {
    let pairs: Vec<(usize, C64)> = cols.iter().map(|&j| (j, g[(i, j)].conj())).collect();
    let norm = pairs.iter().map(|(_, v)| v.norm_sqr()).sum::<f64>().sqrt();
    SparseVec::from_pairs(n, pairs.into_iter().map(|(j, v)| (j, v / norm)).collect())
}
