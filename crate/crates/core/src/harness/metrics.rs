use crate::rng::{gaussian, rng_from_seed};
use crate::signal::{ensure_len, ComplexVec, Field, SparseVec};
use crate::solver::{rank_one_distance, RankOneEstimate};
use crate::{Error, Result};

/// Upper bound on reported RSDR values.
pub const RSDR_CAP_DB: f64 = 300.0;

/// `−20 log₁₀(‖noise‖/‖clean‖)`; `+∞` for zero noise.
pub fn snr_db(clean: &ComplexVec, noise: &ComplexVec) -> Result<f64> {
    ensure_len(noise, clean.len())?;
    let c = clean.norm();
    if c == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let z = noise.norm();
    if z == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-20.0 * (z / c).log10())
}

/// `−20 log₁₀(‖X̂ − X‖_F/‖X‖_F)` for `X = u vᵀ`, capped at [`RSDR_CAP_DB`].
pub fn rsdr_db(estimate: &RankOneEstimate, u: &SparseVec, v: &SparseVec) -> Result<f64> {
    let truth = u.norm() * v.norm();
    if truth == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let err = rank_one_distance(&estimate.u, &estimate.v, u, v);
    if err == 0.0 {
        return Ok(RSDR_CAP_DB);
    }
    Ok((-20.0 * (err / truth).log10()).min(RSDR_CAP_DB))
}

/// Gaussian noise of the given field, rescaled so that `snr_db(clean, z) = target_db`.
/// An infinite target gives the zero vector.
pub fn make_noise(clean: &ComplexVec, target_db: f64, field: Field, seed: u64) -> Result<ComplexVec> {
    if target_db == f64::INFINITY {
        return Ok(ComplexVec::zeros(clean.len()));
    }
    if !target_db.is_finite() {
        return Err(Error::InvalidArgument(format!("invalid SNR target {target_db}")));
    }
    let c = clean.norm();
    if c == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let mut rng = rng_from_seed(seed);
    let mut z = ComplexVec::from_fn(clean.len(), |_, _| gaussian(&mut rng, field, 1.0));
    let norm = z.norm();
    if norm == 0.0 {
        return Err(Error::DegenerateIterate);
    }
    z *= crate::C64::new(c * 10f64.powf(-target_db / 20.0) / norm, 0.0);
    Ok(z)
}
