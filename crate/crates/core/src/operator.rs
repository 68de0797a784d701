//! Subsampled circular-convolution measurement operator.
//!
//! For `X = u vᵀ` the operator returns `A(X)_k = √(n/m)·(Φu ⊛ Ψv)_{ω_k}`. The lifted
//! matrices `M_ℓ` are only materialized by [`MeasOperator::explicit_matrices`], a test
//! oracle capped at small `n`; every other path goes through FFTs.

use nalgebra::DMatrix;
use rand::seq::index;

use crate::dft::UnitaryDft;
use crate::rng::rng_from_seed;
use crate::signal::{ensure_finite, ensure_len, ComplexVec, Dictionary, SparseVec};
use crate::{Error, Result, C64};

/// Largest `n` accepted by the dense oracles.
pub const DENSE_ORACLE_CAP: usize = 64;

/// Ordered set Ω of distinct sampling indices (zero-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingPattern {
    n: usize,
    indices: Vec<usize>,
}

impl SamplingPattern {
    pub fn new(n: usize, indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidArgument("sampling pattern must be nonempty".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("sampling indices must be sorted and distinct".into()));
        }
        if indices.last().is_some_and(|&i| i >= n) {
            return Err(Error::InvalidArgument("sampling index out of range".into()));
        }
        Ok(Self { n, indices })
    }

    /// Ω = [n].
    pub fn full(n: usize) -> Self {
        Self { n, indices: (0..n).collect() }
    }

    /// Every `factor`-th sample starting at the first.
    pub fn uniform(n: usize, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidArgument("subsampling factor must be >= 1".into()));
        }
        Self::new(n, (0..n).step_by(factor).collect())
    }

    /// `m` indices drawn uniformly without replacement.
    pub fn random(n: usize, m: usize, seed: u64) -> Result<Self> {
        if m == 0 || m > n {
            return Err(Error::InvalidArgument(format!("cannot draw {m} of {n} samples")));
        }
        let mut idx = index::sample(&mut rng_from_seed(seed), n, m).into_vec();
        idx.sort_unstable();
        Self::new(n, idx)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// `S_Ω* b`: zero-filled length-`n` vector.
    pub fn scatter(&self, b: &[C64]) -> Vec<C64> {
        let mut g = vec![C64::new(0.0, 0.0); self.n];
        for (&w, &v) in self.indices.iter().zip(b) {
            g[w] = v;
        }
        g
    }
}

/// `S_Ω x`.
pub fn subsample(x: &ComplexVec, pattern: &SamplingPattern) -> Result<ComplexVec> {
    ensure_len(x, pattern.n())?;
    Ok(ComplexVec::from_iterator(pattern.m(), pattern.indices().iter().map(|&i| x[i])))
}

/// `x ⊛ y = F*(√n (Fx) ∘ (Fy))`.
pub fn circular_convolve(x: &ComplexVec, y: &ComplexVec) -> Result<ComplexVec> {
    ensure_len(y, x.len())?;
    let dft = UnitaryDft::new(x.len());
    let mut fx = dft.spectrum(x);
    let fy = dft.spectrum(y);
    Ok(ComplexVec::from_vec(convolve_spectra(&dft, &mut fx, &fy)))
}

/// Inverse of the product of two raw spectra, i.e. the circular convolution.
fn convolve_spectra(dft: &UnitaryDft, fx: &mut [C64], fy: &[C64]) -> Vec<C64> {
    let inv_n = 1.0 / dft.len() as f64;
    fx.iter_mut().zip(fy).for_each(|(a, b)| *a *= b * inv_n);
    dft.raw_inverse(fx);
    fx.to_vec()
}

/// `corr(g, h)_j = Σ_q g_q conj(h_{q−j})`, from the raw spectra of `g` and `h`.
fn correlate_spectra(dft: &UnitaryDft, fg: &mut [C64], fh: &[C64]) -> Vec<C64> {
    let inv_n = 1.0 / dft.len() as f64;
    fg.iter_mut().zip(fh).for_each(|(a, b)| *a *= b.conj() * inv_n);
    dft.raw_inverse(fg);
    fg.to_vec()
}

/// Abstract linear map `C^in → C^out` with its adjoint.
pub trait LinearMap {
    fn in_dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn apply(&self, x: &ComplexVec) -> ComplexVec;
    fn apply_adjoint(&self, y: &ComplexVec) -> ComplexVec;

    fn apply_sparse(&self, x: &SparseVec) -> ComplexVec {
        self.apply(&x.to_dense())
    }

    /// Image of the `j`-th standard basis vector.
    fn column(&self, j: usize) -> ComplexVec {
        let mut e = ComplexVec::zeros(self.in_dim());
        e[j] = C64::new(1.0, 0.0);
        self.apply(&e)
    }
}

/// Dense matrix viewed as a linear map.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMap(pub DMatrix<C64>);

impl LinearMap for DenseMap {
    fn in_dim(&self) -> usize {
        self.0.ncols()
    }
    fn out_dim(&self) -> usize {
        self.0.nrows()
    }
    fn apply(&self, x: &ComplexVec) -> ComplexVec {
        &self.0 * x
    }
    fn apply_adjoint(&self, y: &ComplexVec) -> ComplexVec {
        self.0.ad_mul(y)
    }
    fn apply_sparse(&self, x: &SparseVec) -> ComplexVec {
        let mut out = ComplexVec::zeros(self.0.nrows());
        for (j, v) in x.iter() {
            out.axpy(v, &self.0.column(j), C64::new(1.0, 0.0));
        }
        out
    }
    fn column(&self, j: usize) -> ComplexVec {
        self.0.column(j).into_owned()
    }
}

/// A dictionary viewed as the map `u ↦ Φu`.
impl LinearMap for Dictionary {
    fn in_dim(&self) -> usize {
        self.n()
    }
    fn out_dim(&self) -> usize {
        self.n()
    }
    fn apply(&self, x: &ComplexVec) -> ComplexVec {
        Dictionary::apply(self, x)
    }
    fn apply_adjoint(&self, y: &ComplexVec) -> ComplexVec {
        Dictionary::apply_adjoint(self, y)
    }
    fn apply_sparse(&self, x: &SparseVec) -> ComplexVec {
        Dictionary::apply_sparse(self, x)
    }
    fn column(&self, j: usize) -> ComplexVec {
        self.matrix().column(j).into_owned()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IdentityMap(pub usize);

impl LinearMap for IdentityMap {
    fn in_dim(&self) -> usize {
        self.0
    }
    fn out_dim(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &ComplexVec) -> ComplexVec {
        x.clone()
    }
    fn apply_adjoint(&self, y: &ComplexVec) -> ComplexVec {
        y.clone()
    }
}

/// Lifted input for [`MeasOperator::forward_lifted`].
#[derive(Debug, Clone, Copy)]
pub enum LiftedMatrix<'a> {
    /// Dense `n × n` matrix, accepted only up to [`DENSE_ORACLE_CAP`].
    Dense(&'a DMatrix<C64>),
    /// `Σ_r u_r v_rᵀ`.
    Factored(&'a [(ComplexVec, ComplexVec)]),
}

/// The lifted measurement map `A: C^{n×n} → C^m`.
#[derive(Debug, Clone)]
pub struct MeasOperator {
    phi: Dictionary,
    psi: Dictionary,
    pattern: SamplingPattern,
    scale: f64,
    dft: UnitaryDft,
}

impl MeasOperator {
    pub fn new(phi: Dictionary, psi: Dictionary, pattern: SamplingPattern) -> Result<Self> {
        let n = phi.n();
        for d in [psi.n(), pattern.n()] {
            if d != n {
                return Err(Error::DimensionMismatch { expected: n, actual: d });
            }
        }
        let scale = (n as f64 / pattern.m() as f64).sqrt();
        Ok(Self { phi, psi, pattern, scale, dft: UnitaryDft::new(n) })
    }

    pub fn n(&self) -> usize {
        self.phi.n()
    }

    pub fn m(&self) -> usize {
        self.pattern.m()
    }

    pub fn phi(&self) -> &Dictionary {
        &self.phi
    }

    pub fn psi(&self) -> &Dictionary {
        &self.psi
    }

    pub fn pattern(&self) -> &SamplingPattern {
        &self.pattern
    }

    /// The factor `√(n/m)` applied to the sampled convolution.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn measure(&self, x: &ComplexVec, y: &ComplexVec) -> ComplexVec {
        let mut fx = self.dft.spectrum(x);
        let fy = self.dft.spectrum(y);
        let conv = convolve_spectra(&self.dft, &mut fx, &fy);
        ComplexVec::from_iterator(self.m(), self.pattern.indices().iter().map(|&i| conv[i] * self.scale))
    }

    /// `A(u vᵀ)` for sparse coefficient vectors.
    pub fn forward(&self, u: &SparseVec, v: &SparseVec) -> Result<ComplexVec> {
        for d in [u.len(), v.len()] {
            if d != self.n() {
                return Err(Error::DimensionMismatch { expected: self.n(), actual: d });
            }
        }
        Ok(self.measure(&self.phi.apply_sparse(u), &self.psi.apply_sparse(v)))
    }

    /// `A(u vᵀ)` for dense coefficient vectors.
    pub fn forward_dense(&self, u: &ComplexVec, v: &ComplexVec) -> Result<ComplexVec> {
        ensure_len(u, self.n())?;
        ensure_len(v, self.n())?;
        Ok(self.measure(&self.phi.apply(u), &self.psi.apply(v)))
    }

    /// `A(X) = [⟨M_1, X⟩, …, ⟨M_m, X⟩]ᵀ`.
    pub fn forward_lifted(&self, x: LiftedMatrix<'_>) -> Result<ComplexVec> {
        let n = self.n();
        match x {
            LiftedMatrix::Dense(x) => {
                if n > DENSE_ORACLE_CAP {
                    return Err(Error::OracleCapExceeded { n, cap: DENSE_ORACLE_CAP });
                }
                if x.nrows() != n || x.ncols() != n {
                    return Err(Error::DimensionMismatch { expected: n, actual: x.nrows().max(x.ncols()) });
                }
                // ⟨M_ω, X⟩ = √(n/m) Σ_j (Φ X Ψᵀ)_{j, ω−j}.
                let z = self.phi.matrix() * x * self.psi.matrix().transpose();
                Ok(ComplexVec::from_iterator(
                    self.m(),
                    self.pattern.indices().iter().map(|&w| {
                        (0..n).map(|j| z[(j, (w + n - j) % n)]).sum::<C64>() * self.scale
                    }),
                ))
            }
            LiftedMatrix::Factored(terms) => {
                let mut acc = ComplexVec::zeros(self.m());
                for (u, v) in terms {
                    acc += self.forward_dense(u, v)?;
                }
                Ok(acc)
            }
        }
    }

    /// `A*(b) = Σ_ℓ b_ℓ M_ℓ`, evaluated as `√(n/m)·Φ* H` with `H_{:,k} = corr(S_Ω* b, ψ_k)`.
    pub fn adjoint(&self, b: &ComplexVec) -> Result<DMatrix<C64>> {
        ensure_len(b, self.m())?;
        let n = self.n();
        let g = self.pattern.scatter(b.as_slice());
        let mut fg = g;
        self.dft.raw_forward(&mut fg);
        let mut h = DMatrix::<C64>::zeros(n, n);
        for (k, mut col) in h.column_iter_mut().enumerate() {
            let mut fpsi = self.psi.matrix().column(k).as_slice().to_vec();
            self.dft.raw_forward(&mut fpsi);
            let mut work = fg.clone();
            col.as_mut_slice().copy_from_slice(&correlate_spectra(&self.dft, &mut work, &fpsi));
        }
        let mut out = self.phi.matrix().ad_mul(&h);
        out *= C64::new(self.scale, 0.0);
        Ok(out)
    }

    /// `A_R(v)`: the map `u ↦ A(u vᵀ)`.
    pub fn restricted_right(&self, v: &ComplexVec) -> Result<RestrictedMap<'_>> {
        ensure_len(v, self.n())?;
        ensure_finite(v)?;
        Ok(RestrictedMap::new(self, Side::Right, &self.psi.apply(v)))
    }

    pub fn restricted_right_sparse(&self, v: &SparseVec) -> Result<RestrictedMap<'_>> {
        if v.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), actual: v.len() });
        }
        Ok(RestrictedMap::new(self, Side::Right, &self.psi.apply_sparse(v)))
    }

    /// `A_L(u)`: the map `v ↦ A(u vᵀ)`.
    pub fn restricted_left(&self, u: &ComplexVec) -> Result<RestrictedMap<'_>> {
        ensure_len(u, self.n())?;
        ensure_finite(u)?;
        Ok(RestrictedMap::new(self, Side::Left, &self.phi.apply(u)))
    }

    pub fn restricted_left_sparse(&self, u: &SparseVec) -> Result<RestrictedMap<'_>> {
        if u.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), actual: u.len() });
        }
        Ok(RestrictedMap::new(self, Side::Left, &self.phi.apply_sparse(u)))
    }

    /// Dense `M_{ω_k} = √(n/m)·√n Φ* F* diag(f_{ω_k}) F̄ Ψ̄`, built from the DFT matrix
    /// by definition. Test oracle only.
    pub fn explicit_matrices(&self) -> Result<Vec<DMatrix<C64>>> {
        let n = self.n();
        if n > DENSE_ORACLE_CAP {
            return Err(Error::OracleCapExceeded { n, cap: DENSE_ORACLE_CAP });
        }
        let f = dft_matrix(n);
        let left = self.phi.matrix().adjoint() * f.adjoint();
        let right = f.map(|z| z.conj()) * self.psi.matrix().map(|z| z.conj());
        let c = C64::new(self.scale * (n as f64).sqrt(), 0.0);
        Ok(self
            .pattern
            .indices()
            .iter()
            .map(|&w| {
                let mut scaled = right.clone();
                for (p, mut row) in scaled.row_iter_mut().enumerate() {
                    row *= f[(p, w)];
                }
                &left * scaled * c
            })
            .collect())
    }
}

/// Unitary DFT matrix `F_{jk} = e^{−2πi jk/n}/√n`.
pub fn dft_matrix(n: usize) -> DMatrix<C64> {
    let s = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(n, n, |j, k| {
        C64::from_polar(s, -2.0 * std::f64::consts::PI * ((j * k) % n) as f64 / n as f64)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    /// Variable enters through Φ; the Ψ-side signal is fixed.
    Right,
    /// Variable enters through Ψ; the Φ-side signal is fixed.
    Left,
}

/// `A_R(v)` or `A_L(u)` with the fixed factor's raw spectrum precomputed.
#[derive(Debug, Clone)]
pub struct RestrictedMap<'a> {
    op: &'a MeasOperator,
    side: Side,
    fixed_spectrum: Vec<C64>,
}

impl<'a> RestrictedMap<'a> {
    fn new(op: &'a MeasOperator, side: Side, fixed: &ComplexVec) -> Self {
        Self { op, side, fixed_spectrum: op.dft.spectrum(fixed) }
    }

    fn dictionary(&self) -> &Dictionary {
        match self.side {
            Side::Right => &self.op.phi,
            Side::Left => &self.op.psi,
        }
    }

    fn measure_signal(&self, z: &ComplexVec) -> ComplexVec {
        let mut fz = self.op.dft.spectrum(z);
        let conv = convolve_spectra(&self.op.dft, &mut fz, &self.fixed_spectrum);
        let s = self.op.scale;
        ComplexVec::from_iterator(self.op.m(), self.op.pattern.indices().iter().map(|&i| conv[i] * s))
    }
}

impl LinearMap for RestrictedMap<'_> {
    fn in_dim(&self) -> usize {
        self.op.n()
    }

    fn out_dim(&self) -> usize {
        self.op.m()
    }

    fn apply(&self, x: &ComplexVec) -> ComplexVec {
        self.measure_signal(&self.dictionary().apply(x))
    }

    fn apply_adjoint(&self, y: &ComplexVec) -> ComplexVec {
        let mut fg = self.op.pattern.scatter(y.as_slice());
        self.op.dft.raw_forward(&mut fg);
        let corr = ComplexVec::from_vec(correlate_spectra(&self.op.dft, &mut fg, &self.fixed_spectrum));
        self.dictionary().apply_adjoint(&corr) * C64::new(self.op.scale, 0.0)
    }

    fn apply_sparse(&self, x: &SparseVec) -> ComplexVec {
        self.measure_signal(&self.dictionary().apply_sparse(x))
    }

    fn column(&self, j: usize) -> ComplexVec {
        self.measure_signal(&self.dictionary().matrix().column(j).into_owned())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian, split_seed};
    use crate::signal::{gen_dictionary, gen_sparse_signal, Field, SignalDist};

    fn rand_vec(n: usize, seed: u64) -> ComplexVec {
        let mut rng = rng_from_seed(seed);
        ComplexVec::from_fn(n, |_, _| gaussian(&mut rng, Field::Complex, 1.0))
    }

    fn rand_op(n: usize, m: usize, seed: u64) -> MeasOperator {
        MeasOperator::new(
            gen_dictionary(n, Field::Complex, split_seed(seed, &[1])),
            gen_dictionary(n, Field::Complex, split_seed(seed, &[2])),
            SamplingPattern::random(n, m, split_seed(seed, &[3])).unwrap(),
        )
        .unwrap()
    }

    fn direct_convolution(x: &ComplexVec, y: &ComplexVec) -> ComplexVec {
        let n = x.len();
        ComplexVec::from_fn(n, |k, _| (0..n).map(|j| x[j] * y[(k + n - j) % n]).sum())
    }

    fn inner(a: &ComplexVec, b: &ComplexVec) -> C64 {
        a.dotc(b)
    }

    #[test]
    fn convolution_examples() {
        let n = 12;
        let y = rand_vec(n, 1);
        let mut e1 = ComplexVec::zeros(n);
        e1[0] = C64::new(1.0, 0.0);
        assert!((circular_convolve(&e1, &y).unwrap() - &y).norm() < 1e-12);

        let ones = ComplexVec::from_element(n, C64::new(1.0, 0.0));
        let c = circular_convolve(&ones, &ones).unwrap();
        assert!(c.iter().all(|z| (z - C64::new(n as f64, 0.0)).norm() < 1e-10));

        let x = rand_vec(n, 2);
        assert!((circular_convolve(&x, &y).unwrap() - direct_convolution(&x, &y)).norm() < 1e-10);
        assert!(circular_convolve(&x, &rand_vec(n + 1, 3)).is_err());
    }

    #[test]
    fn subsample_examples() {
        let x = ComplexVec::from_iterator(4, (1..=4).map(|i| C64::new(i as f64, 0.0)));
        let p = SamplingPattern::new(4, vec![0, 2]).unwrap();
        assert_eq!(subsample(&x, &p).unwrap().as_slice(), &[x[0], x[2]]);
        assert_eq!(subsample(&x, &SamplingPattern::full(4)).unwrap(), x);
        assert_eq!(SamplingPattern::uniform(8, 2).unwrap().indices(), &[0, 2, 4, 6]);
        assert!(SamplingPattern::new(4, vec![2, 2]).is_err());
        assert!(SamplingPattern::new(4, vec![]).is_err());
        assert!(SamplingPattern::new(4, vec![4]).is_err());
    }

    #[test]
    fn forward_identity_dictionary_reduction() {
        let n = 8;
        let op = MeasOperator::new(Dictionary::identity(n), Dictionary::identity(n), SamplingPattern::full(n)).unwrap();
        let v = gen_sparse_signal(n, 3, SignalDist::Gauss, Field::Complex, 4).unwrap();
        let e1 = SparseVec::new(n, vec![0], vec![C64::new(1.0, 0.0)]).unwrap();
        let b = op.forward(&e1, &v).unwrap();
        assert!((b - v.to_dense() * C64::new(op.scale(), 0.0)).norm() < 1e-12);
        let zero = op.forward(&SparseVec::zeros(n), &v).unwrap();
        assert_eq!(zero.norm(), 0.0);
    }

    #[test]
    fn forward_matches_explicit_matrices() {
        let (n, m) = (16, 8);
        let op = rand_op(n, m, 9);
        let mats = op.explicit_matrices().unwrap();
        assert_eq!(mats.len(), m);
        let u = gen_sparse_signal(n, 4, SignalDist::Gauss, Field::Complex, 1).unwrap();
        let v = gen_sparse_signal(n, 3, SignalDist::Gauss, Field::Complex, 2).unwrap();
        let x = u.to_dense() * v.to_dense().transpose();
        let oracle = ComplexVec::from_iterator(m, mats.iter().map(|mm| (mm.adjoint() * &x).trace()));
        let fast = op.forward(&u, &v).unwrap();
        assert!((&fast - &oracle).norm() <= 1e-10 * oracle.norm());
    }

    #[test]
    fn lifted_forward_linearity_and_cap() {
        let n = 8;
        let op = rand_op(n, 5, 2);
        let (u1, v1, u2, v2) = (rand_vec(n, 1), rand_vec(n, 2), rand_vec(n, 3), rand_vec(n, 4));
        let terms = [(u1.clone(), v1.clone()), (u2.clone(), v2.clone())];
        let sum = op.forward_lifted(LiftedMatrix::Factored(&terms)).unwrap();
        let parts = op.forward_dense(&u1, &v1).unwrap() + op.forward_dense(&u2, &v2).unwrap();
        assert!((&sum - &parts).norm() < 1e-12 * parts.norm());
        let dense = &u1 * v1.transpose() + &u2 * v2.transpose();
        let via_dense = op.forward_lifted(LiftedMatrix::Dense(&dense)).unwrap();
        assert!((&via_dense - &parts).norm() < 1e-10 * parts.norm());

        let big = rand_op(80, 10, 1);
        let x = DMatrix::<C64>::zeros(80, 80);
        assert!(matches!(big.forward_lifted(LiftedMatrix::Dense(&x)), Err(Error::OracleCapExceeded { .. })));
        assert!(big.explicit_matrices().is_err());
    }

    #[test]
    fn adjoint_examples() {
        let (n, m) = (8, 6);
        let op = rand_op(n, m, 5);
        assert_eq!(op.adjoint(&ComplexVec::zeros(m)).unwrap().norm(), 0.0);
        let mats = op.explicit_matrices().unwrap();
        for (l, mm) in mats.iter().enumerate() {
            let mut e = ComplexVec::zeros(m);
            e[l] = C64::new(1.0, 0.0);
            let a = op.adjoint(&e).unwrap();
            assert!((&a - mm).norm() <= 1e-10 * mm.norm());
        }
    }

    #[test]
    fn adjoint_identity_on_probes() {
        let (n, m) = (16, 11);
        for seed in 0..10 {
            let op = rand_op(n, m, seed);
            let mut rng = rng_from_seed(seed + 100);
            let x = DMatrix::from_fn(n, n, |_, _| gaussian(&mut rng, Field::Complex, 1.0));
            let b = rand_vec(m, seed + 200);
            let ax = op.forward_lifted(LiftedMatrix::Dense(&x)).unwrap();
            let lhs = inner(&ax, &b);
            let rhs = x.dotc(&op.adjoint(&b).unwrap());
            assert!((lhs - rhs).norm() <= 1e-10 * ax.norm() * b.norm());
        }
    }

    #[test]
    fn restricted_maps_agree_with_forward() {
        let (n, m) = (16, 9);
        let op = rand_op(n, m, 3);
        for seed in 0..5 {
            let u = rand_vec(n, seed);
            let v = rand_vec(n, seed + 50);
            let b = op.forward_dense(&u, &v).unwrap();
            let ar = op.restricted_right(&v).unwrap();
            let al = op.restricted_left(&u).unwrap();
            assert!((ar.apply(&u) - &b).norm() <= 1e-12 * b.norm());
            assert!((al.apply(&v) - &b).norm() <= 1e-12 * b.norm());

            let r = rand_vec(m, seed + 90);
            for map in [&ar, &al] {
                let w = rand_vec(n, seed + 70);
                let lhs = inner(&map.apply(&w), &r);
                let rhs = inner(&w, &map.apply_adjoint(&r));
                assert!((lhs - rhs).norm() <= 1e-10 * map.apply(&w).norm() * r.norm());
            }
            let us = SparseVec::from_dense(&u);
            assert!((ar.apply_sparse(&us) - &b).norm() <= 1e-12 * b.norm());
            assert!((ar.column(3) - ar.apply(&ComplexVec::from_fn(n, |i, _| C64::new((i == 3) as u8 as f64, 0.0)))).norm() < 1e-12);
        }
        let zero = op.restricted_right(&ComplexVec::zeros(n)).unwrap();
        assert_eq!(zero.apply(&rand_vec(n, 1)).norm(), 0.0);
        let zero = op.restricted_left(&ComplexVec::zeros(n)).unwrap();
        assert_eq!(zero.apply(&rand_vec(n, 1)).norm(), 0.0);
    }

    #[test]
    fn explicit_small_case_is_scaled_convolution() {
        let n = 4;
        let op = MeasOperator::new(Dictionary::identity(n), Dictionary::identity(n), SamplingPattern::full(n)).unwrap();
        let mats = op.explicit_matrices().unwrap();
        let (u, v) = (rand_vec(n, 1), rand_vec(n, 2));
        let conv = direct_convolution(&u, &v);
        let x = &u * v.transpose();
        for (l, mm) in mats.iter().enumerate() {
            assert!(mm.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
            let val = (mm.adjoint() * &x).trace();
            assert!((val - conv[l] * op.scale()).norm() < 1e-12);
        }
    }

    #[test]
    fn parseval_with_fourier_dictionaries() {
        let n = 16;
        let finv = Dictionary::from_matrix(dft_matrix(n).adjoint(), Field::Complex).unwrap();
        let op = MeasOperator::new(finv.clone(), finv, SamplingPattern::full(n)).unwrap();
        let (u, v) = (rand_vec(n, 3), rand_vec(n, 4));
        // F*u ⊛ F*v = √n F*(u ∘ v), so ‖A(uvᵀ)‖ = √n ‖u ∘ v‖.
        let expected = (n as f64).sqrt() * u.component_mul(&v).norm();
        let got = op.forward_dense(&u, &v).unwrap().norm();
        assert!((got - expected).abs() < 1e-10 * expected);
    }

    #[test]
    fn dimension_checks() {
        let op = rand_op(8, 4, 1);
        assert!(op.forward(&SparseVec::zeros(7), &SparseVec::zeros(8)).is_err());
        assert!(op.adjoint(&ComplexVec::zeros(5)).is_err());
        assert!(MeasOperator::new(Dictionary::identity(8), Dictionary::identity(7), SamplingPattern::full(8)).is_err());
    }
}
