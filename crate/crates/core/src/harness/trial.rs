use std::time::Instant;

use rayon::prelude::*;

use super::config::{Cell, ExperimentConfig, Subsample};
use super::metrics::{make_noise, rsdr_db, snr_db};
use crate::operator::{MeasOperator, SamplingPattern};
use crate::rng::split_seed;
use crate::signal::{gen_dictionary, gen_sparse_signal, ComplexVec, ModelParams, SignalDist, SparseVec};
use crate::solver::{spf_bd_with_reference, GroundTruth, SolverOptions};
use crate::Result;

/// A synthesized blind-deconvolution problem with its ground truth.
#[derive(Debug, Clone)]
pub struct Instance {
    pub op: MeasOperator,
    pub u: SparseVec,
    pub v: SparseVec,
    pub clean: ComplexVec,
    pub noise: ComplexVec,
    pub b: ComplexVec,
    pub params: ModelParams,
}

/// Seed of trial `trial` in cell `(m, s)`.
pub fn trial_seed(base_seed: u64, cell: Cell, trial: usize) -> u64 {
    split_seed(base_seed, &[cell.m as u64, cell.s as u64, trial as u64])
}

/// Builds `Φ, Ψ, u, v, Ω, z` from independent sub-seeds of `seed`.
pub fn synthesize(cfg: &ExperimentConfig, cell: Cell, seed: u64) -> Result<Instance> {
    let Cell { m, s, n } = cell;
    let field = cfg.dict_field;
    let phi = gen_dictionary(n, field, split_seed(seed, &[1]));
    let psi = gen_dictionary(n, field, split_seed(seed, &[2]));
    let u = gen_sparse_signal(n, s, SignalDist::Gauss, field, split_seed(seed, &[3]))?;
    let v = gen_sparse_signal(n, s, SignalDist::Gauss, field, split_seed(seed, &[4]))?;
    let pattern = match cfg.subsample {
        Subsample::Full => SamplingPattern::full(n),
        Subsample::Uniform(k) => SamplingPattern::uniform(n, k)?,
        Subsample::Random => SamplingPattern::random(n, m, split_seed(seed, &[5]))?,
    };
    let op = MeasOperator::new(phi, psi, pattern)?;
    let clean = op.forward(&u, &v)?;
    let noise = make_noise(&clean, cfg.noise_snr_db.0, field, split_seed(seed, &[6]))?;
    let b = &clean + &noise;
    let (mu1, mu2) = cfg.mu_policy.levels(n)?;
    let params = ModelParams { n, m: op.m(), s1: s, s2: s, mu1, mu2 };
    Ok(Instance { op, u, v, clean, noise, b, params })
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub m: usize,
    pub s: usize,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub rsdr_db: f64,
    /// Realized measurement SNR.
    pub snr_db: f64,
    pub success: bool,
    pub outer_iters: usize,
    pub wall_time_ms: f64,
    /// `sin∠(v0, v)` of the initialization, NaN if the solver failed.
    pub init_angle_sin: f64,
    pub peakedness_u: f64,
    pub peakedness_v: f64,
    /// Solver error, counted as a failure.
    pub error: Option<String>,
}

impl PartialEq for TrialResult {
    /// Compares everything except the wall-clock time.
    fn eq(&self, o: &Self) -> bool {
        let same_f = |a: f64, b: f64| a.to_bits() == b.to_bits();
        (self.m, self.s, self.n, self.trial, self.seed, self.success, self.outer_iters)
            == (o.m, o.s, o.n, o.trial, o.seed, o.success, o.outer_iters)
            && same_f(self.rsdr_db, o.rsdr_db)
            && same_f(self.snr_db, o.snr_db)
            && same_f(self.init_angle_sin, o.init_angle_sin)
            && same_f(self.peakedness_u, o.peakedness_u)
            && same_f(self.peakedness_v, o.peakedness_v)
            && self.error == o.error
    }
}

/// One seeded trial of `cell`. Solver failures are recorded, not propagated.
pub fn run_trial(cfg: &ExperimentConfig, cell: Cell, trial: usize) -> Result<TrialResult> {
    let seed = trial_seed(cfg.base_seed, cell, trial);
    let inst = synthesize(cfg, cell, seed)?;
    let snr = snr_db(&inst.clean, &inst.noise)?;
    let opts = SolverOptions { record_trace: false, ..Default::default() };
    let truth = GroundTruth { u: inst.u.to_dense(), v: inst.v.to_dense() };
    let start = Instant::now();
    let solved = spf_bd_with_reference(&inst.op, &inst.b, &inst.params, &opts, Some(&truth));
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    let (rsdr, outer_iters, init_angle_sin, error) = match solved {
        Ok((est, trace)) => (rsdr_db(&est, &inst.u, &inst.v)?, trace.outer_iters, trace.init_sin_v.unwrap_or(f64::NAN), None),
        Err(e) => (0.0, 0, f64::NAN, Some(e.to_string())),
    };
    Ok(TrialResult {
        m: cell.m,
        s: cell.s,
        n: cell.n,
        trial,
        seed,
        rsdr_db: rsdr,
        snr_db: snr,
        success: rsdr > cfg.success_threshold_db(),
        outer_iters,
        wall_time_ms,
        init_angle_sin,
        peakedness_u: inst.u.peakedness(),
        peakedness_v: inst.v.peakedness(),
        error,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub m: usize,
    pub s: usize,
    pub n: usize,
    pub trials: usize,
    pub successes: usize,
    pub mean_rsdr_db: f64,
    pub median_rsdr_db: f64,
}

impl CellSummary {
    pub fn success_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }

    pub fn from_trials(cell: Cell, trials: &[TrialResult]) -> Self {
        let mut r: Vec<f64> = trials.iter().map(|t| t.rsdr_db).collect();
        r.sort_by(f64::total_cmp);
        let mean = if r.is_empty() { f64::NAN } else { r.iter().sum::<f64>() / r.len() as f64 };
        let median = match r.len() {
            0 => f64::NAN,
            k if k % 2 == 1 => r[k / 2],
            k => 0.5 * (r[k / 2 - 1] + r[k / 2]),
        };
        Self {
            m: cell.m,
            s: cell.s,
            n: cell.n,
            trials: trials.len(),
            successes: trials.iter().filter(|t| t.success).count(),
            mean_rsdr_db: mean,
            median_rsdr_db: median,
        }
    }
}

/// Empirical success rates over the `(m, s)` grid of a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessGrid {
    pub m_values: Vec<usize>,
    pub cells: Vec<CellSummary>,
    pub noise_snr_db: f64,
    pub subsample: Subsample,
    pub dict_field: crate::Field,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRun {
    pub grid: SuccessGrid,
    /// All trials, ordered by cell then trial index.
    pub trials: Vec<TrialResult>,
}

/// Runs every trial of every cell on the current rayon pool. The output does not depend
/// on the number of worker threads.
pub fn run_grid(cfg: &ExperimentConfig) -> Result<GridRun> {
    cfg.validate()?;
    let cells = cfg.cells()?;
    let jobs: Vec<(Cell, usize)> =
        cells.iter().flat_map(|&c| (0..cfg.trials_per_cell).map(move |t| (c, t))).collect();
    let trials = jobs.par_iter().map(|&(c, t)| run_trial(cfg, c, t)).collect::<Result<Vec<_>>>()?;
    let summaries = cells
        .iter()
        .zip(trials.chunks(cfg.trials_per_cell))
        .map(|(&c, chunk)| CellSummary::from_trials(c, chunk))
        .collect();
    let grid = SuccessGrid {
        m_values: cfg.m_values.clone(),
        cells: summaries,
        noise_snr_db: cfg.noise_snr_db.0,
        subsample: cfg.subsample,
        dict_field: cfg.dict_field,
        seed: cfg.base_seed,
    };
    Ok(GridRun { grid, trials })
}

pub fn phase_transition(cfg: &ExperimentConfig) -> Result<SuccessGrid> {
    Ok(run_grid(cfg)?.grid)
}
