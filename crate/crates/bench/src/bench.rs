//! Thread-count sweeps over the three benchmark systems.

use std::time::Instant;

use scalemd_core::fmm::{build_tree, fmm_solve, FmmConfig, LevelReport};
use scalemd_core::kmc::{apply_move, enumerate_proposals, evaluate_proposals, KmcConfig, KmcState};
use scalemd_core::lj::{assign_random_velocities, IntegratorConfig, LjParams, MdSystem};
use scalemd_core::particles::create_cubic_lattice;

use crate::config::{Benchmark, BenchmarkConfig};
use crate::error::{BenchError, Result};
use crate::trajectory::TrajectoryLine;

pub const LJ_CUTOFF: f64 = 2.5;
pub const LJ_LIST_CUTOFF: f64 = 2.75;
/// Repulsive LJ cutoff of the FMM benchmark, and its list cutoff with the same skin.
pub const WCA_CUTOFF: f64 = 4.0;
pub const WCA_LIST_CUTOFF: f64 = 4.25;
/// Kinetic energy per particle of the seeded initial velocities.
pub const INITIAL_KINETIC: f64 = 0.01;

/// Wall time of one timed step.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingRecord {
    pub benchmark: String,
    pub n_particles: usize,
    pub threads: usize,
    pub step: usize,
    pub seconds: f64,
}

/// One observable after one timed step, for reproducibility checks.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicsRecord {
    pub threads: usize,
    pub step: usize,
    pub observable: &'static str,
    pub value: f64,
}

/// Wall time of one phase within a timed step (KMC proposals and update).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRecord {
    pub threads: usize,
    pub step: usize,
    pub phase: &'static str,
    pub seconds: f64,
}

#[derive(Debug, Default)]
pub struct BenchmarkOutcome {
    pub records: Vec<TimingRecord>,
    pub physics: Vec<PhysicsRecord>,
    pub phases: Vec<PhaseRecord>,
    /// Tree levels as seen by the largest thread count that ran (FMM and KMC).
    pub levels: Vec<LevelReport>,
    /// Accepted hops of the first sweep point (KMC only).
    pub trajectory: Vec<TrajectoryLine>,
    /// Error that stopped the sweep; records up to that point are kept.
    pub error: Option<BenchError>,
}

impl BenchmarkOutcome {
    pub fn into_result(mut self) -> Result<Self> {
        match self.error.take() {
            Some(e) => Err(e),
            None => Ok(self),
        }
    }
}

struct Sweep<'a> {
    cfg: &'a BenchmarkConfig,
    threads: usize,
    out: &'a mut BenchmarkOutcome,
}

impl Sweep<'_> {
    fn time(&mut self, step: usize, seconds: f64) {
        self.out.records.push(TimingRecord {
            benchmark: self.cfg.benchmark.name().to_string(),
            n_particles: self.cfg.n_particles(),
            threads: self.threads,
            step,
            seconds,
        });
    }

    fn observe(&mut self, step: usize, observable: &'static str, value: f64) {
        self.out.physics.push(PhysicsRecord { threads: self.threads, step, observable, value });
    }

    fn phase(&mut self, step: usize, phase: &'static str, seconds: f64) {
        self.out.phases.push(PhaseRecord { threads: self.threads, step, phase, seconds });
    }
}

/// Runs every sweep point in ascending thread order, rebuilding the system from
/// the seed each time so that all points simulate the same trajectory.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> BenchmarkOutcome {
    let mut out = BenchmarkOutcome::default();
    if let Err(e) = cfg.validate() {
        out.error = Some(e);
        return out;
    }
    for &threads in &cfg.thread_counts {
        let mut sweep = Sweep { cfg, threads, out: &mut out };
        let result = match cfg.benchmark {
            Benchmark::Lj => run_lj(&mut sweep),
            Benchmark::Fmm => run_fmm(&mut sweep, true),
            Benchmark::FmmOnly => run_fmm(&mut sweep, false),
            Benchmark::Kmc => run_kmc(&mut sweep),
        };
        if let Err(e) = result {
            out.error = Some(e);
            break;
        }
    }
    out
}

fn lattice_md(cfg: &BenchmarkConfig, params: LjParams, list_cutoff: f64, threads: usize) -> Result<MdSystem> {
    let (domain, mut state) = create_cubic_lattice(cfg.n_per_axis, cfg.a)?;
    assign_random_velocities(&mut state, INITIAL_KINETIC, cfg.seed);
    if cfg.benchmark.uses_fmm() {
        state.charges = rock_salt_charges(cfg.n_per_axis);
    }
    Ok(MdSystem::new(state, domain, params, list_cutoff, IntegratorConfig::new(cfg.dt)?, threads)?)
}

/// +1 where the lattice coordinates sum to an even number, −1 elsewhere.
pub fn rock_salt_charges(n: usize) -> Vec<f64> {
    (0..n.pow(3))
        .map(|i| if (i % n + (i / n) % n + i / (n * n)).is_multiple_of(2) { 1.0 } else { -1.0 })
        .collect()
}

fn run_lj(s: &mut Sweep<'_>) -> Result<()> {
    let mut sys = lattice_md(s.cfg, LjParams::reduced(LJ_CUTOFF)?, LJ_LIST_CUTOFF, s.threads)?;
    for _ in 0..s.cfg.warmup_steps {
        sys.step()?;
    }
    for step in 0..s.cfg.steps {
        let start = Instant::now();
        let e = sys.step()?;
        s.time(step, start.elapsed().as_secs_f64());
        s.observe(step, "potential", e.potential);
        s.observe(step, "kinetic", e.kinetic);
        s.observe(step, "total", e.total);
    }
    Ok(())
}

fn run_fmm(s: &mut Sweep<'_>, with_md: bool) -> Result<()> {
    let fmm = FmmConfig::new(s.cfg.p, s.cfg.levels)?;
    let mut sys = lattice_md(s.cfg, LjParams::repulsive(1.0, WCA_CUTOFF)?, WCA_LIST_CUTOFF, s.threads)?;
    let mut tree = build_tree(&sys.domain, &sys.state, fmm)?;
    let threads = s.threads;
    let step_once = |sys: &mut MdSystem, tree: &mut scalemd_core::fmm::FmmTree| -> Result<_> {
        let md = if with_md { Some(sys.step()?) } else { None };
        tree.rebin(&sys.state)?;
        let sol = fmm_solve(tree, &sys.state, threads)?;
        Ok((md, sol))
    };
    for _ in 0..s.cfg.warmup_steps {
        step_once(&mut sys, &mut tree)?;
    }
    let mut levels = Vec::new();
    for step in 0..s.cfg.steps {
        let start = Instant::now();
        let (md, sol) = step_once(&mut sys, &mut tree)?;
        s.time(step, start.elapsed().as_secs_f64());
        s.observe(step, "coulomb", sol.energy);
        if let Some(e) = md {
            s.observe(step, "lj_potential", e.potential);
            s.observe(step, "kinetic", e.kinetic);
            s.observe(step, "lj_total", e.total);
        }
        levels = sol.levels;
    }
    s.out.levels = levels;
    Ok(())
}

fn run_kmc(s: &mut Sweep<'_>) -> Result<()> {
    let cfg = s.cfg;
    let kcfg = KmcConfig::new(cfg.n_per_axis, cfg.a, cfg.beta, cfg.fill_fraction, FmmConfig::new(cfg.p, cfg.levels)?)?;
    let threads = s.threads;
    let mut state = KmcState::random(kcfg, cfg.seed, threads)?;
    for step in 0..cfg.warmup_steps {
        scalemd_core::kmc::kmc_step(&mut state, step, threads)?;
    }
    let first_point = threads == cfg.thread_counts[0];
    let mut running = state.tree_energy(threads)?;
    for step in 0..cfg.steps {
        let start = Instant::now();
        let mut proposals = enumerate_proposals(&state);
        evaluate_proposals(&state, &mut proposals, threads)?;
        let proposed = Instant::now();
        let (k, dt) = state.select(&proposals)?;
        let chosen = proposals[k];
        apply_move(&mut state, &chosen, dt, threads)?;
        let done = Instant::now();
        s.time(step, (done - start).as_secs_f64());
        s.phase(step, "proposals", (proposed - start).as_secs_f64());
        s.phase(step, "update", (done - proposed).as_secs_f64());
        running += chosen.delta_u;
        s.observe(step, "charge", chosen.charge as f64);
        s.observe(step, "delta_u", chosen.delta_u);
        s.observe(step, "delta_t", dt);
        s.observe(step, "energy", running);
        if first_point {
            let record = scalemd_core::kmc::StepRecord {
                step,
                charge: chosen.charge,
                source: chosen.source,
                destination: chosen.destination,
                delta_u: chosen.delta_u,
                delta_t: dt,
                proposals: proposals.len(),
                wall_seconds: (done - start).as_secs_f64(),
            };
            s.out.trajectory.push(TrajectoryLine::from_record(&kcfg, &record));
        }
    }
    s.out.levels = state.tree().level_reports(threads);
    Ok(())
}
