//! Benchmark configuration from command-line flags and `key = value` files.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::Parser;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Benchmark {
    /// Lennard-Jones MD over the neighbour matrix.
    Lj,
    /// Repulsive LJ MD plus a full Coulomb FMM solve every step.
    Fmm,
    /// The FMM solve alone on a static charge lattice.
    FmmOnly,
    /// Rejection-free KMC with FMM energy differences.
    Kmc,
}

impl Benchmark {
    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Lj => "lj",
            Benchmark::Fmm => "fmm",
            Benchmark::FmmOnly => "fmm-only",
            Benchmark::Kmc => "kmc",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "lj" => Some(Benchmark::Lj),
            "fmm" => Some(Benchmark::Fmm),
            "fmm-only" => Some(Benchmark::FmmOnly),
            "kmc" => Some(Benchmark::Kmc),
            _ => None,
        }
    }

    pub fn uses_fmm(self) -> bool {
        !matches!(self, Benchmark::Lj)
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub benchmark: Benchmark,
    pub n_per_axis: usize,
    /// Lattice spacing.
    pub a: f64,
    pub steps: usize,
    pub thread_counts: Vec<usize>,
    pub p: usize,
    pub levels: usize,
    pub dt: f64,
    pub beta: f64,
    pub fill_fraction: f64,
    pub seed: u64,
    pub warmup_steps: usize,
    pub output_path: Option<PathBuf>,
    pub trajectory_path: Option<PathBuf>,
    pub physics_path: Option<PathBuf>,
}

impl BenchmarkConfig {
    /// Desk-scale defaults for each benchmark.
    pub fn defaults(benchmark: Benchmark) -> Self {
        let base = Self {
            benchmark,
            n_per_axis: 40,
            a: 0.945,
            steps: 50,
            thread_counts: vec![1, 2, 4, 8],
            p: 10,
            levels: 4,
            dt: 0.005,
            beta: 1.0,
            fill_fraction: 0.125,
            seed: 1,
            warmup_steps: 5,
            output_path: None,
            trajectory_path: None,
            physics_path: None,
        };
        match benchmark {
            Benchmark::Lj => base,
            Benchmark::Fmm | Benchmark::FmmOnly => Self { n_per_axis: 32, a: 6.6, steps: 10, ..base },
            Benchmark::Kmc => Self { n_per_axis: 32, a: 1.0, p: 12, ..base },
        }
    }

    /// Particles (or charges, for KMC) in the simulated system.
    pub fn n_particles(&self) -> usize {
        let sites = self.n_per_axis.pow(3);
        match self.benchmark {
            Benchmark::Kmc => ((self.fill_fraction * sites as f64).round() as usize).clamp(1, sites),
            _ => sites,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(BenchError::InvalidConfig(m.to_string()));
        if self.n_per_axis == 0 {
            return fail("n-per-axis must be at least 1");
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return fail("lattice spacing must be positive");
        }
        if self.steps == 0 {
            return fail("steps must be at least 1");
        }
        if self.thread_counts.is_empty() || self.thread_counts[0] == 0 {
            return fail("thread counts must be positive");
        }
        if self.thread_counts.windows(2).any(|w| w[0] >= w[1]) {
            return fail("thread counts must be strictly increasing");
        }
        if self.p == 0 {
            return fail("p must be at least 1");
        }
        if self.levels < 2 {
            return fail("levels must be at least 2");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return fail("dt must be positive");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return fail("beta must be positive");
        }
        if !(self.fill_fraction > 0.0 && self.fill_fraction <= 1.0) {
            return fail("fill must lie in (0, 1]");
        }
        if self.trajectory_path.is_some() && self.benchmark != Benchmark::Kmc {
            return fail("--trajectory applies to the kmc benchmark only");
        }
        Ok(())
    }
}

/// Command-line flags. Values stay textual so that flags and file entries
/// share one parser and one set of error messages.
#[derive(Debug, Default, Parser)]
#[command(name = "scalemd", version, about = "Strong-scaling benchmarks for LJ molecular dynamics, FMM and KMC")]
pub struct Cli {
    /// lj, fmm, fmm-only or kmc
    #[arg(long)]
    pub benchmark: Option<String>,
    /// Lattice sites per axis
    #[arg(long = "n-per-axis")]
    pub n_per_axis: Option<String>,
    /// Lattice spacing
    #[arg(long)]
    pub a: Option<String>,
    /// Timed steps per thread count
    #[arg(long)]
    pub steps: Option<String>,
    /// Comma-separated, strictly increasing thread counts
    #[arg(long)]
    pub threads: Option<String>,
    /// Expansion order (degrees 0..p-1)
    #[arg(long)]
    pub p: Option<String>,
    /// Octree levels, root included
    #[arg(long)]
    pub levels: Option<String>,
    /// MD time step
    #[arg(long)]
    pub dt: Option<String>,
    /// KMC inverse temperature
    #[arg(long)]
    pub beta: Option<String>,
    /// KMC site fill fraction
    #[arg(long)]
    pub fill: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Untimed steps before each sweep point
    #[arg(long)]
    pub warmup: Option<String>,
    /// `key = value` configuration file; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Timing CSV path
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// KMC trajectory log path
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    /// Per-step physics CSV path
    #[arg(long)]
    pub physics: Option<PathBuf>,
}

impl Cli {
    fn entries(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |k: &'static str, v: &Option<String>| {
            if let Some(v) = v {
                out.push((k, v.clone()));
            }
        };
        push("benchmark", &self.benchmark);
        push("n-per-axis", &self.n_per_axis);
        push("a", &self.a);
        push("steps", &self.steps);
        push("threads", &self.threads);
        push("p", &self.p);
        push("levels", &self.levels);
        push("dt", &self.dt);
        push("beta", &self.beta);
        push("fill", &self.fill);
        push("seed", &self.seed);
        push("warmup", &self.warmup);
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.to_string_lossy().into_owned());
        push("output", &path(&self.output));
        push("trajectory", &path(&self.trajectory));
        push("physics", &path(&self.physics));
        out
    }
}

const KEYS: [&str; 15] = [
    "benchmark", "n-per-axis", "a", "steps", "threads", "p", "levels", "dt", "beta", "fill", "seed", "warmup", "output",
    "trajectory", "physics",
];

fn canonical_key(key: &str) -> Option<&'static str> {
    let k = key.replace('_', "-");
    KEYS.iter().copied().find(|&known| known == k)
}

/// Reads `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    parse_config_text(&text, path)
}

fn parse_config_text(text: &str, path: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(BenchError::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                message: "expected `key = value`".to_string(),
            });
        };
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

fn value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| BenchError::MalformedValue { key: key.to_string(), value: v.to_string() })
}

fn thread_list(key: &str, v: &str) -> Result<Vec<usize>> {
    v.split(',').map(|t| value::<usize>(key, t.trim())).collect()
}

fn apply(cfg: &mut BenchmarkConfig, key: &'static str, v: &str) -> Result<()> {
    match key {
        "n-per-axis" => cfg.n_per_axis = value(key, v)?,
        "a" => cfg.a = value(key, v)?,
        "steps" => cfg.steps = value(key, v)?,
        "threads" => cfg.thread_counts = thread_list(key, v)?,
        "p" => cfg.p = value(key, v)?,
        "levels" => cfg.levels = value(key, v)?,
        "dt" => cfg.dt = value(key, v)?,
        "beta" => cfg.beta = value(key, v)?,
        "fill" => cfg.fill_fraction = value(key, v)?,
        "seed" => cfg.seed = value(key, v)?,
        "warmup" => cfg.warmup_steps = value(key, v)?,
        "output" => cfg.output_path = Some(PathBuf::from(v)),
        "trajectory" => cfg.trajectory_path = Some(PathBuf::from(v)),
        "physics" => cfg.physics_path = Some(PathBuf::from(v)),
        _ => {}
    }
    Ok(())
}

/// Merges file entries and flags over the chosen benchmark's defaults.
pub fn resolve(cli: &Cli) -> Result<BenchmarkConfig> {
    let mut entries: Vec<(&'static str, String)> = Vec::new();
    if let Some(path) = &cli.config {
        for (k, v) in read_config_file(path)? {
            let key = canonical_key(&k).ok_or(BenchError::UnknownKey(k))?;
            entries.push((key, v));
        }
    }
    // later entries win, so flags go last
    entries.extend(cli.entries());

    let name = entries.iter().rev().find(|(k, _)| *k == "benchmark").map(|(_, v)| v.clone());
    let benchmark = match name {
        None => return Err(BenchError::MissingBenchmark),
        Some(v) => Benchmark::parse(&v).ok_or(BenchError::MalformedValue { key: "benchmark".into(), value: v })?,
    };
    let mut cfg = BenchmarkConfig::defaults(benchmark);
    for (k, v) in &entries {
        apply(&mut cfg, k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses `args` (program name first) into a validated configuration.
pub fn parse_config<I, T>(args: I) -> Result<BenchmarkConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| match e.kind() {
        ErrorKind::UnknownArgument => {
            let arg = e.get(clap::error::ContextKind::InvalidArg).map(|v| v.to_string()).unwrap_or_default();
            BenchError::UnknownKey(arg)
        }
        _ => BenchError::InvalidConfig(e.to_string()),
    })?;
    resolve(&cli)
}
