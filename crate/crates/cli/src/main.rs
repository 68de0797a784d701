use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use spfbd::harness::{
    estimate_rip_distortion, fmt_g6, grid_csv_string, grid_rows, render_heatmap, run_grid, run_trial, trials_csv_string, Cell,
    ExperimentConfig, MuPolicy, RipKind, Snr, Subsample,
};
use spfbd::operator::{MeasOperator, SamplingPattern};
use spfbd::projection::project_flatness_cone;
use spfbd::rng::split_seed;
use spfbd::signal::{flatness_stats, gen_dictionary, FlatnessMode};
use spfbd::{ComplexVec, Field, FlatnessLevel, ModelParams, C64};

#[derive(Debug, Parser)]
#[command(name = "spfbd", version, about = "Sparse blind deconvolution experiments")]
struct Cli {
    /// Base seed; overrides `base_seed` from a config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout if omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FieldArg {
    Real,
    Complex,
}

impl From<FieldArg> for Field {
    fn from(f: FieldArg) -> Self {
        match f {
            FieldArg::Real => Field::Real,
            FieldArg::Complex => Field::Complex,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Fixed,
    Adversarial,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Rip,
    RipDiff,
    Rap,
    Rop,
}

impl From<KindArg> for RipKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Rip => RipKind::Rip,
            KindArg::RipDiff => RipKind::RipDiff,
            KindArg::Rap => RipKind::Rap,
            KindArg::Rop => RipKind::Rop,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize and solve one instance; prints RSDR and iteration count.
    Solve {
        /// Number of measurements (defaults to the first `m` of the config).
        #[arg(long)]
        m: Option<usize>,
        /// Sparsity of both factors (defaults to the first sparsity of the config).
        #[arg(long)]
        s: Option<usize>,
        /// Measurement SNR in dB, or `inf`.
        #[arg(long, value_parser = parse_snr)]
        snr: Option<Snr>,
        /// `full`, `uniform:<k>` or `random` (needs `--n`).
        #[arg(long, value_parser = parse_subsample)]
        subsample: Option<Subsample>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum)]
        field: Option<FieldArg>,
        /// Trial index within the cell.
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Run a success-rate grid from `--config` and write its CSV.
    PhaseTransition {
        /// Also render the grid as an SVG heatmap.
        #[arg(long)]
        heatmap: Option<PathBuf>,
        /// Also write one CSV row per trial.
        #[arg(long)]
        trials: Option<PathBuf>,
    },
    /// Project each vector of a file onto the flatness cone.
    ///
    /// Input: one complex entry per line as `re im`; blank lines separate vectors.
    ProjectCone {
        input: PathBuf,
        #[arg(long)]
        mu: f64,
    },
    /// Monte-Carlo spectral-flatness statistics of Gaussian dictionaries.
    FlatnessStats {
        #[arg(long, default_value_t = 1024)]
        n: usize,
        #[arg(long, default_value_t = 16)]
        s: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Fixed)]
        mode: ModeArg,
    },
    /// Empirical restricted-isometry distortions of a random operator.
    RipProbe {
        #[arg(long, default_value_t = 256)]
        n: usize,
        /// Uniform subsampling factor; `m = n / k`.
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 4)]
        s: usize,
        #[arg(long, value_enum, default_value_t = KindArg::RipDiff)]
        kind: KindArg,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, value_enum, default_value_t = FieldArg::Complex)]
        field: FieldArg,
    },
}

fn parse_snr(s: &str) -> std::result::Result<Snr, String> {
    if s == "inf" {
        return Ok(Snr::NOISELESS);
    }
    s.parse::<f64>().map(Snr).map_err(|e| format!("expected a number or `inf`: {e}"))
}

fn parse_subsample(s: &str) -> std::result::Result<Subsample, String> {
    match s {
        "full" => Ok(Subsample::Full),
        "random" => Ok(Subsample::Random),
        _ => s
            .strip_prefix("uniform:")
            .and_then(|k| k.parse().ok())
            .map(Subsample::Uniform)
            .ok_or_else(|| format!("expected `full`, `uniform:<k>` or `random`, got {s:?}")),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_config(cli: &Cli) -> Result<Option<ExperimentConfig>> {
    let Some(path) = &cli.config else { return Ok(None) };
    let mut cfg = ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(seed) = cli.seed {
        cfg.base_seed = seed;
    }
    Ok(Some(cfg))
}

fn to_json<T: serde::Serialize + ?Sized>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn solve(cli: &Cli) -> Result<String> {
    let Command::Solve { m, s, snr, subsample, n, field, trial } = &cli.command else { unreachable!() };
    let mut cfg = load_config(cli)?.unwrap_or(ExperimentConfig {
        n: None,
        m_values: vec![256],
        s_values: Some(vec![4]),
        s_over_m: None,
        noise_snr_db: Snr::NOISELESS,
        subsample: Subsample::Full,
        dict_field: Field::Real,
        mu_policy: MuPolicy::Default,
        trials_per_cell: 1,
        base_seed: cli.seed.unwrap_or(0),
        rsdr_success_threshold_db: None,
    });
    let m = m.unwrap_or(cfg.m_values[0]);
    let s = match s {
        Some(s) => *s,
        None => *cfg.sparsities(cfg.m_values[0]).first().context("config has no sparsities")?,
    };
    cfg.m_values = vec![m];
    cfg.s_values = Some(vec![s]);
    cfg.s_over_m = None;
    cfg.trials_per_cell = trial + 1;
    if let Some(v) = snr {
        cfg.noise_snr_db = *v;
    }
    if let Some(v) = subsample {
        cfg.subsample = *v;
    }
    if n.is_some() {
        cfg.n = *n;
    }
    if let Some(f) = field {
        cfg.dict_field = (*f).into();
    }
    cfg.validate()?;
    let cell = Cell { m, s, n: cfg.signal_len(m)? };
    let r = run_trial(&cfg, cell, *trial)?;
    if let Some(e) = &r.error {
        eprintln!("solver failed: {e}");
    }
    Ok(match cli.format {
        Format::Csv => trials_csv_string(std::slice::from_ref(&r)),
        Format::Json => to_json(&serde_json::json!({
            "m": r.m, "s": r.s, "n": r.n, "trial": r.trial, "seed": r.seed,
            "rsdr_db": r.rsdr_db, "snr_db": if r.snr_db.is_finite() { serde_json::json!(r.snr_db) } else { serde_json::json!("inf") },
            "success": r.success, "outer_iters": r.outer_iters, "init_angle_sin": r.init_angle_sin,
            "error": r.error,
        }))?,
    })
}

fn phase_transition(cli: &Cli, heatmap: Option<&Path>, trials: Option<&Path>) -> Result<String> {
    let cfg = load_config(cli)?.context("phase-transition requires --config")?;
    let run = run_grid(&cfg)?;
    if let Some(p) = heatmap {
        render_heatmap(&run.grid, p)?;
    }
    if let Some(p) = trials {
        fs::write(p, trials_csv_string(&run.trials)).with_context(|| format!("writing {}", p.display()))?;
    }
    match cli.format {
        Format::Csv => Ok(grid_csv_string(&run.grid)),
        Format::Json => to_json(&grid_rows(&run.grid)),
    }
}

fn parse_vectors(text: &str) -> Result<Vec<ComplexVec>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            if !cur.is_empty() {
                out.push(ComplexVec::from_vec(std::mem::take(&mut cur)));
            }
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let parse = |t: &str| t.parse::<f64>().with_context(|| format!("line {}: bad number {t:?}", no + 1));
        let z = match parts.as_slice() {
            [re] => C64::new(parse(re)?, 0.0),
            [re, im] => C64::new(parse(re)?, parse(im)?),
            _ => bail!("line {}: expected `re im`", no + 1),
        };
        cur.push(z);
    }
    if !cur.is_empty() {
        out.push(ComplexVec::from_vec(cur));
    }
    if out.is_empty() {
        bail!("no vectors in input");
    }
    Ok(out)
}

fn project_cone(input: &Path, mu: f64) -> Result<String> {
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let level = FlatnessLevel::active(mu)?;
    let mut out = String::new();
    for (i, x) in parse_vectors(&text)?.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for z in project_flatness_cone(x, level).projected.iter() {
            writeln!(out, "{} {}", z.re, z.im)?;
        }
    }
    Ok(out)
}

fn flatness(cli: &Cli, n: usize, s: usize, trials: usize, mode: ModeArg) -> Result<String> {
    let mode = match mode {
        ModeArg::Fixed => FlatnessMode::FixedSignal,
        ModeArg::Adversarial => FlatnessMode::AdversarialSearch,
    };
    let summary = flatness_stats(n, s, trials, mode, cli.seed.unwrap_or(0))?;
    match cli.format {
        Format::Json => to_json(&summary),
        Format::Csv => {
            let mut out = String::from("trial,sf\n");
            for (t, sf) in summary.samples.iter().enumerate() {
                writeln!(out, "{t},{}", fmt_g6(*sf))?;
            }
            Ok(out)
        }
    }
}

fn rip_probe(cli: &Cli, n: usize, k: usize, s: usize, kind: KindArg, trials: usize, field: FieldArg) -> Result<String> {
    let seed = cli.seed.unwrap_or(0);
    let pattern = if k == 1 { SamplingPattern::full(n) } else { SamplingPattern::uniform(n, k)? };
    let field = field.into();
    let op = MeasOperator::new(gen_dictionary(n, field, split_seed(seed, &[1])), gen_dictionary(n, field, split_seed(seed, &[2])), pattern)?;
    let (mu1, mu2) = MuPolicy::Default.levels(n)?;
    let params = ModelParams { n, m: op.m(), s1: s, s2: s, mu1, mu2 };
    let est = estimate_rip_distortion(&op, &params, kind.into(), trials, split_seed(seed, &[3]))?;
    match cli.format {
        Format::Json => to_json(&est),
        Format::Csv => {
            let mut out = String::from("trial,distortion\n");
            for (t, d) in est.samples.iter().enumerate() {
                writeln!(out, "{t},{}", fmt_g6(*d))?;
            }
            Ok(out)
        }
    }
}

fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Solve { .. } => solve(cli),
        Command::PhaseTransition { heatmap, trials } => phase_transition(cli, heatmap.as_deref(), trials.as_deref()),
        Command::ProjectCone { input, mu } => project_cone(input, *mu),
        Command::FlatnessStats { n, s, trials, mode } => flatness(cli, *n, *s, *trials, *mode),
        Command::RipProbe { n, k, s, kind, trials, field } => rip_probe(cli, *n, *k, *s, *kind, *trials, *field),
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let text = match cli.threads {
        Some(0) => bail!("--threads must be positive"),
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t).build()?.install(|| run(&cli))?,
        None => run(&cli)?,
    };
    emit(cli.out.as_deref(), &text)
}
