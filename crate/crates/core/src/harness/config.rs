use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::signal::{Field, FlatnessLevel};
use crate::{Error, Result};

/// Measurement sampling scheme of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subsample {
    /// Every convolution sample, `n = m`.
    Full,
    /// Every `k`-th sample, `n = k·m`.
    Uniform(usize),
    /// `m` uniformly random distinct samples out of a configured `n`.
    Random,
}

impl fmt::Display for Subsample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subsample::Full => write!(f, "full"),
            Subsample::Uniform(k) => write!(f, "uniform({k})"),
            Subsample::Random => write!(f, "random"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuPolicy {
    /// `μ1 = μ2 = ⌈5 ln n⌉`.
    Default,
    /// No flatness constraint (`μ = n`).
    None,
    Explicit { mu1: f64, mu2: f64 },
}

impl MuPolicy {
    pub fn levels(&self, n: usize) -> Result<(FlatnessLevel, FlatnessLevel)> {
        match *self {
            MuPolicy::Default => {
                let mu = FlatnessLevel::active((5.0 * (n as f64).ln()).ceil().max(1.0))?;
                Ok((mu, mu))
            }
            MuPolicy::None => Ok((FlatnessLevel::Inactive, FlatnessLevel::Inactive)),
            MuPolicy::Explicit { mu1, mu2 } => Ok((FlatnessLevel::active(mu1)?, FlatnessLevel::active(mu2)?)),
        }
    }
}

/// Measurement SNR in dB, written as a number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snr(pub f64);

impl Snr {
    pub const NOISELESS: Snr = Snr(f64::INFINITY);

    pub fn is_noiseless(self) -> bool {
        self.0 == f64::INFINITY
    }
}

impl Serialize for Snr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_noiseless() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Snr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Snr(v)),
            Raw::Str(s) if s == "inf" => Ok(Snr::NOISELESS),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {s:?}"))),
        }
    }
}

/// Phase-transition experiment description; mirrors the JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Signal length. Required for random subsampling; otherwise derived from each `m`
    /// and, if given, checked against it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub m_values: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_values: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_over_m: Option<Vec<f64>>,
    pub noise_snr_db: Snr,
    pub subsample: Subsample,
    pub dict_field: Field,
    pub mu_policy: MuPolicy,
    pub trials_per_cell: usize,
    pub base_seed: u64,
    /// Defaults to 60 dB when noiseless and `noise_snr_db − 10` otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rsdr_success_threshold_db: Option<f64>,
}

/// One `(m, s)` grid cell with its derived signal length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cell {
    pub m: usize,
    pub s: usize,
    pub n: usize,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn success_threshold_db(&self) -> f64 {
        self.rsdr_success_threshold_db.unwrap_or(if self.noise_snr_db.is_noiseless() {
            60.0
        } else {
            self.noise_snr_db.0 - 10.0
        })
    }

    pub fn signal_len(&self, m: usize) -> Result<usize> {
        let derived = match self.subsample {
            Subsample::Full => m,
            Subsample::Uniform(k) => k.checked_mul(m).ok_or_else(|| Error::Config("n overflows".into()))?,
            Subsample::Random => self.n.ok_or_else(|| Error::Config("random subsampling requires n".into()))?,
        };
        if let Some(n) = self.n {
            if n != derived {
                return Err(Error::Config(format!("n = {n} is inconsistent with m = {m} under {} subsampling", self.subsample)));
            }
        }
        if m > derived {
            return Err(Error::Config(format!("m = {m} exceeds n = {derived}")));
        }
        Ok(derived)
    }

    /// Sparsity levels for a given `m`, in configuration order.
    pub fn sparsities(&self, m: usize) -> Vec<usize> {
        match (&self.s_values, &self.s_over_m) {
            (Some(s), _) => s.clone(),
            (None, Some(r)) => r.iter().map(|&r| ((r * m as f64).round() as usize).max(1)).collect(),
            (None, None) => Vec::new(),
        }
    }

    pub fn cells(&self) -> Result<Vec<Cell>> {
        let mut out = Vec::new();
        for &m in &self.m_values {
            let n = self.signal_len(m)?;
            for s in self.sparsities(m) {
                out.push(Cell { m, s, n });
            }
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.m_values.is_empty() || self.m_values.contains(&0) {
            return bad("m_values must be a nonempty list of positive integers".into());
        }
        if self.trials_per_cell == 0 {
            return bad("trials_per_cell must be positive".into());
        }
        match (&self.s_values, &self.s_over_m) {
            (Some(_), Some(_)) => return bad("give either s_values or s_over_m, not both".into()),
            (None, None) => return bad("one of s_values or s_over_m is required".into()),
            (Some(s), None) if s.is_empty() || s.contains(&0) => {
                return bad("s_values must be a nonempty list of positive integers".into())
            }
            (None, Some(r)) if r.is_empty() || r.iter().any(|&r| !(r > 0.0 && r <= 1.0)) => {
                return bad("s_over_m ratios must lie in (0, 1]".into())
            }
            _ => {}
        }
        if let Subsample::Uniform(0) = self.subsample {
            return bad("uniform subsampling factor must be positive".into());
        }
        if self.noise_snr_db.0.is_nan() || self.noise_snr_db.0 == f64::NEG_INFINITY {
            return bad("noise_snr_db must be a number or \"inf\"".into());
        }
        if let Some(t) = self.rsdr_success_threshold_db {
            if !t.is_finite() {
                return bad("rsdr_success_threshold_db must be finite".into());
            }
        }
        for cell in self.cells()? {
            if cell.s > cell.n {
                return bad(format!("s = {} exceeds n = {}", cell.s, cell.n));
            }
            self.mu_policy.levels(cell.n).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }
}
