use std::fs::File;
use std::io::{BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;
use scalemd_bench::config::{resolve, Benchmark, Cli};
use scalemd_bench::report::{format_levels, format_scaling, summarize, summarize_phase, write_csv, write_physics_csv};
use scalemd_bench::{run_benchmark, trajectory, BenchError, BenchmarkConfig, BenchmarkOutcome};

fn write_outputs(cfg: &BenchmarkConfig, out: &BenchmarkOutcome) -> Result<(), BenchError> {
    if let Some(path) = &cfg.output_path {
        if !out.records.is_empty() {
            write_csv(&out.records, path)?;
        }
    }
    if let Some(path) = &cfg.physics_path {
        write_physics_csv(cfg.benchmark.name(), &out.physics, path)?;
    }
    if let Some(path) = &cfg.trajectory_path {
        let file = File::create(path).map_err(|e| BenchError::IoFailure { path: path.clone(), source: e })?;
        let mut w = BufWriter::new(file);
        let io = |e| BenchError::IoFailure { path: path.clone(), source: e };
        for line in &out.trajectory {
            trajectory::write_line(&mut w, line).map_err(io)?;
        }
        w.flush().map_err(io)?;
    }
    Ok(())
}

// stdout errors (a closed pipe, say) are ignored rather than turned into panics
fn report(cfg: &BenchmarkConfig, out: &BenchmarkOutcome) {
    let mut w = std::io::stdout().lock();
    if out.records.is_empty() {
        return;
    }
    let _ = writeln!(w, "{}", format_scaling("time per step", &summarize(&out.records)));
    if cfg.benchmark == Benchmark::Kmc {
        let _ = writeln!(w, "{}", format_scaling("proposal phase", &summarize_phase(&out.phases, "proposals")));
        let _ = writeln!(w, "{}", format_scaling("expansion update", &summarize_phase(&out.phases, "update")));
    }
    if cfg.benchmark.uses_fmm() && !out.levels.is_empty() {
        let _ = writeln!(w, "tree levels at {} threads", out.levels[0].workers);
        let _ = writeln!(w, "{}", format_levels(&out.levels));
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let cfg = match resolve(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let threads: Vec<String> = cfg.thread_counts.iter().map(|t| t.to_string()).collect();
    let _ = writeln!(
        std::io::stdout(),
        "# {} benchmark, N = {}, {} timed steps after {} warmup, threads {} on one machine (threads stand in for nodes)\n",
        cfg.benchmark,
        cfg.n_particles(),
        cfg.steps,
        cfg.warmup_steps,
        threads.join(",")
    );
    let out = run_benchmark(&cfg);
    report(&cfg, &out);
    let written = write_outputs(&cfg, &out);
    if let Some(e) = &out.error {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
