//! Unitary DFT with the forward kernel `e^{-2πi jk/n} / √n` and zero-based indices.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::signal::ComplexVec;
use crate::C64;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Planned forward/inverse transforms of one length.
#[derive(Clone)]
pub struct UnitaryDft {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for UnitaryDft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UnitaryDft").field("n", &self.n).finish()
    }
}

impl UnitaryDft {
    pub fn new(n: usize) -> Self {
        let (fwd, inv) = PLANNER.with(|p| {
            let mut p = p.borrow_mut();
            (p.plan_fft_forward(n), p.plan_fft_inverse(n))
        });
        Self { n, fwd, inv }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unnormalized forward transform in place.
    pub fn raw_forward(&self, buf: &mut [C64]) {
        self.fwd.process(buf);
    }

    /// Unnormalized inverse transform in place.
    pub fn raw_inverse(&self, buf: &mut [C64]) {
        self.inv.process(buf);
    }

    pub fn forward_inplace(&self, buf: &mut [C64]) {
        self.fwd.process(buf);
        let s = 1.0 / (self.n as f64).sqrt();
        buf.iter_mut().for_each(|z| *z *= s);
    }

    pub fn inverse_inplace(&self, buf: &mut [C64]) {
        self.inv.process(buf);
        let s = 1.0 / (self.n as f64).sqrt();
        buf.iter_mut().for_each(|z| *z *= s);
    }

    pub fn forward(&self, x: &ComplexVec) -> ComplexVec {
        let mut out = x.clone();
        self.forward_inplace(out.as_mut_slice());
        out
    }

    pub fn inverse(&self, x: &ComplexVec) -> ComplexVec {
        let mut out = x.clone();
        self.inverse_inplace(out.as_mut_slice());
        out
    }

    /// Raw spectrum `Σ_j x_j e^{-2πi jk/n}`.
    pub fn spectrum(&self, x: &ComplexVec) -> Vec<C64> {
        let mut out = x.as_slice().to_vec();
        self.fwd.process(&mut out);
        out
    }
}

/// Unitary forward DFT `Fx`.
pub fn dft(x: &ComplexVec) -> ComplexVec {
    UnitaryDft::new(x.len()).forward(x)
}

/// Unitary inverse DFT `F*x`.
pub fn idft(x: &ComplexVec) -> ComplexVec {
    UnitaryDft::new(x.len()).inverse(x)
}
