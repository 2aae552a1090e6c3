//! Seeded Monte Carlo comparison of bandwidth selectors by integrated squared error.
//!
//! Every `(n, rep)` pair draws one sample from its own random stream keyed by
//! `(seed, n, rep)`; all selectors see that same sample. Replications run on a
//! worker pool and are reduced in rep order, so the output does not depend on the
//! number of workers.

use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::densities::{DensitySpec, Sample};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::numerics::RngStream;
use crate::risk::ise_exact;
use crate::selectors::{lscv_default_grid, lscv_select, politis_select_or_fallback, sj_select, PolitisSettings};

pub const CSV_HEADER: &str = "n,method,mean_ise_x1000,sd_ise_x1000,reps,seed,fallback_count";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Selector {
    /// Least-squares cross-validation with the configured kernel.
    Cv,
    /// Sheather–Jones plug-in; always with the Gaussian kernel.
    Sj,
    /// Flat-region rule on the empirical characteristic function, with the
    /// configured kernel.
    Politis,
}

impl Selector {
    pub fn parse(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "cv" => Ok(Selector::Cv),
            "sj" => Ok(Selector::Sj),
            "politis" => Ok(Selector::Politis),
            other => Err(Error::config(
                "selectors",
                format!("unknown selector `{other}` (expected cv, sj or politis)"),
            )),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Selector::Cv => "cv",
            Selector::Sj => "sj",
            Selector::Politis => "politis",
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The simulation protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub density: String,
    pub kernel: String,
    pub selectors: Vec<Selector>,
    pub sizes: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub out_path: PathBuf,
    pub ise_scale: f64,
    pub workers: usize,
    pub verbose: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            density: "fvp".into(),
            kernel: "trapezoidal".into(),
            selectors: vec![Selector::Cv, Selector::Sj, Selector::Politis],
            sizes: vec![100, 400, 1600],
            reps: 100,
            seed: 42,
            out_path: PathBuf::from("table1.csv"),
            ise_scale: 1000.0,
            workers: 1,
            verbose: false,
        }
    }
}

/// Raw `key = value` settings from a config file or command-line flags. Values are
/// kept as text so errors can name the offending key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub density: Option<String>,
    pub kernel: Option<String>,
    pub selectors: Option<String>,
    pub sizes: Option<String>,
    pub reps: Option<String>,
    pub seed: Option<String>,
    pub out: Option<String>,
    pub ise_scale: Option<String>,
    pub workers: Option<String>,
    pub verbose: Option<String>,
}

impl ConfigOverrides {
    /// Parses flat `key = value` lines; `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut out = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config("config", format!("line {}: expected `key = value`, got `{line}`", lineno + 1))
            })?;
            let key = key.trim().replace('-', "_");
            let value = Some(value.trim().to_string());
            match key.as_str() {
                "density" => out.density = value,
                "kernel" => out.kernel = value,
                "selectors" => out.selectors = value,
                "sizes" => out.sizes = value,
                "reps" => out.reps = value,
                "seed" => out.seed = value,
                "out" => out.out = value,
                "ise_scale" => out.ise_scale = value,
                "workers" => out.workers = value,
                "verbose" => out.verbose = value,
                other => return Err(Error::config(other, "unknown configuration key")),
            }
        }
        Ok(out)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    /// Values set here win over those in `base`.
    pub fn over(self, base: Self) -> Self {
        Self {
            density: self.density.or(base.density),
            kernel: self.kernel.or(base.kernel),
            selectors: self.selectors.or(base.selectors),
            sizes: self.sizes.or(base.sizes),
            reps: self.reps.or(base.reps),
            seed: self.seed.or(base.seed),
            out: self.out.or(base.out),
            ise_scale: self.ise_scale.or(base.ise_scale),
            workers: self.workers.or(base.workers),
            verbose: self.verbose.or(base.verbose),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse::<T>()
        .map_err(|e| Error::config(key, format!("cannot parse `{value}`: {e}")))
}

fn parse_list(key: &str, value: &str) -> Vec<String> {
    let _ = key;
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

impl ExperimentConfig {
    /// Defaults, then the config file (if any), then flags.
    pub fn resolve(file: Option<&Path>, flags: ConfigOverrides) -> Result<Self> {
        let merged = match file {
            Some(p) => flags.over(ConfigOverrides::from_file(p)?),
            None => flags,
        };
        Self::from_overrides(merged)
    }

    pub fn from_overrides(o: ConfigOverrides) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(v) = o.density {
            cfg.density = v;
        }
        if let Some(v) = o.kernel {
            cfg.kernel = v;
        }
        if let Some(v) = o.selectors {
            cfg.selectors = parse_list("selectors", &v)
                .iter()
                .map(|s| Selector::parse(s))
                .collect::<Result<_>>()?;
        }
        if let Some(v) = o.sizes {
            cfg.sizes = parse_list("sizes", &v)
                .iter()
                .map(|s| parse_num::<usize>("sizes", s))
                .collect::<Result<_>>()?;
        }
        if let Some(v) = o.reps {
            cfg.reps = parse_num("reps", &v)?;
        }
        if let Some(v) = o.seed {
            cfg.seed = parse_num("seed", &v)?;
        }
        if let Some(v) = o.out {
            cfg.out_path = PathBuf::from(v);
        }
        if let Some(v) = o.ise_scale {
            cfg.ise_scale = parse_num("ise_scale", &v)?;
        }
        if let Some(v) = o.workers {
            cfg.workers = parse_num("workers", &v)?;
        }
        if let Some(v) = o.verbose {
            cfg.verbose = parse_num("verbose", &v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        DensitySpec::by_name(&self.density)?;
        KernelSpec::by_name(&self.kernel)?;
        if self.selectors.is_empty() {
            return Err(Error::config("selectors", "at least one selector is required"));
        }
        let mut seen = Vec::new();
        for s in &self.selectors {
            if seen.contains(s) {
                return Err(Error::config("selectors", format!("`{s}` listed twice")));
            }
            seen.push(*s);
        }
        if self.sizes.is_empty() {
            return Err(Error::config("sizes", "at least one sample size is required"));
        }
        let min_n = if self.selectors.contains(&Selector::Sj) { 10 } else { 2 };
        if let Some(n) = self.sizes.iter().find(|&&n| n < min_n) {
            return Err(Error::config("sizes", format!("sample size {n} is below the minimum {min_n}")));
        }
        if self.sizes.iter().any(|&n| n as u64 > u32::MAX as u64) {
            return Err(Error::config("sizes", "sample sizes must fit in 32 bits"));
        }
        if self.reps == 0 {
            return Err(Error::config("reps", "must be at least 1"));
        }
        if self.reps as u64 > u32::MAX as u64 {
            return Err(Error::config("reps", "must fit in 32 bits"));
        }
        if !(self.ise_scale > 0.0 && self.ise_scale.is_finite()) {
            return Err(Error::config("ise_scale", "must be positive and finite"));
        }
        if self.workers == 0 {
            return Err(Error::config("workers", "must be at least 1"));
        }
        Ok(())
    }

    /// Sizes in ascending order without duplicates.
    fn ordered_sizes(&self) -> Vec<usize> {
        let mut s = self.sizes.clone();
        s.sort_unstable();
        s.dedup();
        s
    }
}

/// Random stream for replication `rep` at sample size `n`.
pub fn stream_id(n: usize, rep: usize) -> u64 {
    ((n as u64) << 32) | rep as u64
}

/// One output row: mean and sample standard deviation of the scaled ISE.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub n: usize,
    pub method: Selector,
    pub mean_ise_scaled: f64,
    pub sd_ise_scaled: f64,
    /// Replications in which every selector produced an ISE.
    pub reps: usize,
    pub seed: u64,
    pub fallback_count: usize,
}

/// Rows plus the bookkeeping that goes into the metadata sidecar.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub rows: Vec<ResultRow>,
    /// `(n, rep, selector, message)` for every replication that was dropped.
    pub failures: Vec<(usize, usize, Selector, String)>,
    /// `(n, rep, sample fingerprint)` in reduction order.
    pub fingerprints: Vec<(usize, usize, u64)>,
}

struct RepOutcome {
    fingerprint: u64,
    /// Per selector, in config order: `(raw ISE, fell back)` or the failure message.
    results: Vec<std::result::Result<(f64, bool), String>>,
}

struct Context {
    density: DensitySpec,
    kernel: KernelSpec,
    gaussian: KernelSpec,
    politis: PolitisSettings,
}

fn run_selector(ctx: &Context, selector: Selector, sample: &Sample) -> Result<(f64, bool)> {
    match selector {
        Selector::Cv => {
            let grid = lscv_default_grid(sample, &ctx.kernel, Some(&ctx.density))?;
            let h = lscv_select(sample, &ctx.kernel, &grid)?.h;
            Ok((ise_exact(&ctx.kernel, h, sample, &ctx.density)?, false))
        }
        Selector::Sj => {
            let h = sj_select(sample)?.h;
            Ok((ise_exact(&ctx.gaussian, h, sample, &ctx.density)?, false))
        }
        Selector::Politis => {
            let r = politis_select_or_fallback(sample, &ctx.politis)?;
            let fell_back = r.diagnostics.get("fallback").copied() == Some(1.0);
            Ok((ise_exact(&ctx.kernel, r.h, sample, &ctx.density)?, fell_back))
        }
    }
}

fn run_rep(ctx: &Context, config: &ExperimentConfig, n: usize, rep: usize) -> Result<RepOutcome> {
    let mut rng = RngStream::new(config.seed, stream_id(n, rep));
    let sample = ctx.density.sample(n, &mut rng)?;
    let results = config
        .selectors
        .iter()
        .map(|&s| run_selector(ctx, s, &sample).map_err(|e| e.to_string()))
        .collect();
    Ok(RepOutcome {
        fingerprint: sample.fingerprint(),
        results,
    })
}

/// Runs every `(n, rep)` replication and summarises the scaled ISE per
/// `(n, selector)`. Rows are ordered by `n` ascending, then selector in config order.
///
/// A selector failure drops that replication from every row (and is listed in the
/// outcome); a row with no successful replication is a numerical failure.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let ctx = Context {
        density: DensitySpec::by_name(&config.density)?,
        kernel: KernelSpec::by_name(&config.kernel)?,
        gaussian: KernelSpec::gaussian(),
        politis: PolitisSettings::default(),
    };
    // Warm the kernel caches before fanning out.
    ctx.kernel.roughness()?;
    ctx.kernel.s_t();
    ctx.density.deriv_roughness(0)?;

    let sizes = config.ordered_sizes();
    let tasks: Vec<(usize, usize)> = sizes
        .iter()
        .flat_map(|&n| (0..config.reps).map(move |rep| (n, rep)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<Result<RepOutcome>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(n, rep)| run_rep(&ctx, config, n, rep))
            .collect()
    });

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut fingerprints = Vec::new();
    let mut by_task = tasks.iter().zip(outcomes);
    for &n in &sizes {
        let mut ises: Vec<Vec<f64>> = vec![Vec::new(); config.selectors.len()];
        let mut fallbacks = vec![0usize; config.selectors.len()];
        for _ in 0..config.reps {
            let (&(tn, rep), outcome) = by_task.next().expect("one outcome per task");
            debug_assert_eq!(tn, n);
            let outcome = outcome?;
            fingerprints.push((n, rep, outcome.fingerprint));
            if config.verbose {
                eprintln!("n={n} rep={rep} sample_hash={:016x}", outcome.fingerprint);
            }
            // A failing selector aborts the whole replication, keeping the design paired.
            let failed: Vec<(usize, String)> = outcome
                .results
                .iter()
                .enumerate()
                .filter_map(|(k, r)| r.as_ref().err().map(|m| (k, m.clone())))
                .collect();
            if !failed.is_empty() {
                for (k, msg) in failed {
                    failures.push((n, rep, config.selectors[k], msg));
                }
                continue;
            }
            for (k, result) in outcome.results.into_iter().enumerate() {
                let (ise, fell_back) = result.expect("failures handled above");
                ises[k].push(ise);
                fallbacks[k] += fell_back as usize;
            }
        }
        for (k, &method) in config.selectors.iter().enumerate() {
            let values = &ises[k];
            if values.is_empty() {
                return Err(Error::NonConvergence(format!(
                    "selector `{method}` failed in every replication at n = {n}"
                )));
            }
            let (mean, sd) = mean_sd(values);
            rows.push(ResultRow {
                n,
                method,
                mean_ise_scaled: config.ise_scale * mean,
                sd_ise_scaled: config.ise_scale * sd,
                reps: values.len(),
                seed: config.seed,
                fallback_count: fallbacks[k],
            });
        }
    }
    Ok(RunOutcome {
        rows,
        failures,
        fingerprints,
    })
}

/// Mean and sample standard deviation (divisor `k − 1`; zero for a single value).
fn mean_sd(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, var.sqrt())
}

/// C's `%.6g`.
pub fn format_g6(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    const P: i32 = 6;
    let sci = format!("{:.*e}", (P - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= P {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (P - 1 - exp) as usize;
        strip_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// The CSV document for `rows`, LF line endings with a trailing newline.
pub fn csv_string(rows: &[ResultRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("no rows to write".into()));
    }
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.n,
            r.method,
            format_g6(r.mean_ise_scaled),
            format_g6(r.sd_ise_scaled),
            r.reps,
            r.seed,
            r.fallback_count
        );
    }
    Ok(out)
}

pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let text = csv_string(rows)?;
    fs::write(path, text)?;
    Ok(())
}

/// Path of the metadata sidecar written next to the CSV.
pub fn metadata_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Run description: generator, config echo, degenerate-statistics flag and the
/// list of dropped replications.
pub fn metadata_string(config: &ExperimentConfig, outcome: &RunOutcome) -> String {
    let mut m = String::new();
    let _ = writeln!(m, "prng = {}", RngStream::ALGORITHM);
    let _ = writeln!(m, "stream_id = (n << 32) | rep");
    let _ = writeln!(m, "density = {}", config.density);
    let _ = writeln!(m, "kernel = {}", config.kernel);
    let _ = writeln!(
        m,
        "selectors = {}",
        config.selectors.iter().map(|s| s.name()).collect::<Vec<_>>().join(",")
    );
    let _ = writeln!(m, "sj_kernel = gaussian");
    let _ = writeln!(
        m,
        "sizes = {}",
        config.sizes.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")
    );
    let _ = writeln!(m, "reps = {}", config.reps);
    let _ = writeln!(m, "seed = {}", config.seed);
    let _ = writeln!(m, "ise_scale = {}", config.ise_scale);
    let _ = writeln!(m, "ise = exact (Fourier-side pair expansion)");
    let _ = writeln!(m, "politis_fallback = h = 1/d_max on no flat region");
    let single = outcome.rows.iter().any(|r| r.reps == 1);
    let _ = writeln!(m, "single_rep_sd_reported_as_zero = {single}");
    let _ = writeln!(m, "failures = {}", outcome.failures.len());
    for (n, rep, sel, msg) in &outcome.failures {
        let _ = writeln!(m, "failure n={n} rep={rep} selector={sel}: {msg}");
    }
    m
}

/// Runs the experiment and writes the CSV and its metadata sidecar.
pub fn run_and_write(config: &ExperimentConfig) -> Result<RunOutcome> {
    let outcome = run_experiment(config)?;
    write_csv(&outcome.rows, &config.out_path)?;
    fs::write(metadata_path(&config.out_path), metadata_string(config, &outcome))?;
    Ok(outcome)
}
