//! KMC trajectory log: one line per accepted hop,
//! `step charge_id src_x src_y src_z dst_x dst_y dst_z delta_U delta_t`,
//! with site positions in domain units.

use std::io::{BufRead, Write};
use std::path::Path;

use scalemd_core::kmc::{KmcConfig, StepRecord};
use scalemd_core::Vec3;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryLine {
    pub step: usize,
    pub charge: usize,
    pub source: Vec3,
    pub destination: Vec3,
    pub delta_u: f64,
    pub delta_t: f64,
}

impl TrajectoryLine {
    pub fn from_record(config: &KmcConfig, r: &StepRecord) -> Self {
        Self {
            step: r.step,
            charge: r.charge,
            source: config.site_position(r.source),
            destination: config.site_position(r.destination),
            delta_u: r.delta_u,
            delta_t: r.delta_t,
        }
    }
}

pub fn write_line<W: Write>(w: &mut W, l: &TrajectoryLine) -> std::io::Result<()> {
    let (s, d) = (l.source, l.destination);
    writeln!(
        w,
        "{} {} {} {} {} {} {} {} {:e} {:e}",
        l.step, l.charge, s[0], s[1], s[2], d[0], d[1], d[2], l.delta_u, l.delta_t
    )
}

/// `path` only labels errors.
pub fn read_trajectory_from<R: BufRead>(r: R, path: &Path) -> Result<Vec<TrajectoryLine>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line.map_err(|e| BenchError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| BenchError::Parse { path: path.to_path_buf(), line: n + 1, message };
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 10 {
            return Err(err(format!("expected 10 fields, found {}", f.len())));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|_| err(format!("bad integer `{s}`")));
        let real = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number `{s}`")));
        out.push(TrajectoryLine {
            step: int(f[0])?,
            charge: int(f[1])?,
            source: [real(f[2])?, real(f[3])?, real(f[4])?],
            destination: [real(f[5])?, real(f[6])?, real(f[7])?],
            delta_u: real(f[8])?,
            delta_t: real(f[9])?,
        });
    }
    Ok(out)
}

pub fn read_trajectory(path: &Path) -> Result<Vec<TrajectoryLine>> {
    let file = std::fs::File::open(path).map_err(|e| BenchError::io(path, e))?;
    read_trajectory_from(std::io::BufReader::new(file), path)
}
