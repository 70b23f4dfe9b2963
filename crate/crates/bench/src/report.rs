//! Timing CSV, physics CSV and the scaling summary.

use std::fmt::Write as _;
use std::path::Path;

use scalemd_core::fmm::LevelReport;

use crate::bench::{PhaseRecord, PhysicsRecord, TimingRecord};
use crate::error::{BenchError, Result};

pub const CSV_HEADER: &str = "benchmark,n_particles,threads,step,seconds";
pub const PHYSICS_HEADER: &str = "benchmark,threads,step,observable,value";

fn create(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| BenchError::io(path, e))?;
    Ok(csv::WriterBuilder::new().has_headers(false).from_writer(file))
}

fn finish(w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.into_inner().map_err(|e| BenchError::io(path, e.into_error()))?.sync_all().map_err(|e| BenchError::io(path, e))
}

/// Writes one row per record, ordered by thread count then step. Seconds carry
/// ten significant digits. Nothing is created when `records` is empty.
pub fn write_csv(records: &[TimingRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(BenchError::EmptyRecords);
    }
    let mut rows: Vec<&TimingRecord> = records.iter().collect();
    rows.sort_by_key(|r| (r.threads, r.step));
    let mut w = create(path)?;
    w.write_record(CSV_HEADER.split(','))?;
    for r in rows {
        w.write_record([
            r.benchmark.clone(),
            r.n_particles.to_string(),
            r.threads.to_string(),
            r.step.to_string(),
            format!("{:.9e}", r.seconds),
        ])?;
    }
    finish(w, path)
}

pub fn read_csv(path: &Path) -> Result<Vec<TimingRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header.join(",") != CSV_HEADER {
        return Err(BenchError::Parse { path: path.to_path_buf(), line: 1, message: "unexpected header".into() });
    }
    let mut out = Vec::new();
    for (n, row) in r.records().enumerate() {
        let row = row?;
        let bad = |field: &str| BenchError::Parse {
            path: path.to_path_buf(),
            line: n + 2,
            message: format!("bad value `{field}`"),
        };
        let int = |k: usize| row[k].parse::<usize>().map_err(|_| bad(&row[k]));
        out.push(TimingRecord {
            benchmark: row[0].to_string(),
            n_particles: int(1)?,
            threads: int(2)?,
            step: int(3)?,
            seconds: row[4].parse().map_err(|_| bad(&row[4]))?,
        });
    }
    Ok(out)
}

/// Physics observables in shortest round-trip form, so equal files mean bitwise-equal values.
pub fn write_physics_csv(benchmark: &str, records: &[PhysicsRecord], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(PHYSICS_HEADER.split(','))?;
    for r in records {
        w.write_record([
            benchmark.to_string(),
            r.threads.to_string(),
            r.step.to_string(),
            r.observable.to_string(),
            format!("{:e}", r.value),
        ])?;
    }
    finish(w, path)
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub threads: usize,
    pub samples: usize,
    pub median_seconds: f64,
    /// Median time at the smallest thread count over median time here.
    pub speedup: f64,
    pub efficiency: f64,
}

/// Median seconds per step for each thread count, with speedup and parallel
/// efficiency against the smallest thread count present.
pub fn summarize_times(samples: &[(usize, f64)]) -> Vec<ScalingRow> {
    let mut threads: Vec<usize> = samples.iter().map(|s| s.0).collect();
    threads.sort_unstable();
    threads.dedup();
    let mut rows: Vec<ScalingRow> = threads
        .iter()
        .map(|&t| {
            let mut v: Vec<f64> = samples.iter().filter(|s| s.0 == t).map(|s| s.1).collect();
            ScalingRow { threads: t, samples: v.len(), median_seconds: median(&mut v), speedup: 1.0, efficiency: 1.0 }
        })
        .collect();
    if let Some(base) = rows.first().copied() {
        for r in &mut rows {
            r.speedup = base.median_seconds / r.median_seconds;
            r.efficiency = r.speedup * base.threads as f64 / r.threads as f64;
        }
    }
    rows
}

pub fn summarize(records: &[TimingRecord]) -> Vec<ScalingRow> {
    summarize_times(&records.iter().map(|r| (r.threads, r.seconds)).collect::<Vec<_>>())
}

/// Scaling of one named KMC phase.
pub fn summarize_phase(phases: &[PhaseRecord], phase: &str) -> Vec<ScalingRow> {
    summarize_times(&phases.iter().filter(|p| p.phase == phase).map(|p| (p.threads, p.seconds)).collect::<Vec<_>>())
}

pub fn format_scaling(title: &str, rows: &[ScalingRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{title}");
    let _ = writeln!(s, "{:>8} {:>8} {:>16} {:>9} {:>11}", "threads", "steps", "median s/step", "speedup", "efficiency");
    for r in rows {
        let _ = writeln!(
            s,
            "{:>8} {:>8} {:>16.6e} {:>9.3} {:>11.3}",
            r.threads, r.samples, r.median_seconds, r.speedup, r.efficiency
        );
    }
    s
}

/// Cell counts per tree level against the worker count, flagging levels that
/// cannot keep every worker busy.
pub fn format_levels(levels: &[LevelReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>6} {:>8} {:>9} {:>8} {:>6}", "level", "cells", "occupied", "workers", "idle");
    for l in levels {
        let flag = if l.cells < l.workers { "  cells < workers" } else { "" };
        let _ = writeln!(
            s,
            "{:>6} {:>8} {:>9} {:>8} {:>6}{flag}",
            l.level,
            l.cells,
            l.occupied_cells,
            l.workers,
            l.idle_workers()
        );
    }
    s
}
