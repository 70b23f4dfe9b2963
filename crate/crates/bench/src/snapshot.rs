//! Plain-text particle snapshots: a count line, a free comment line, then one
//! `id x y z q` line per particle.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use scalemd_core::{ParticleState, Vec3};

use crate::error::{BenchError, Result};

pub fn write_snapshot_to<W: Write>(mut w: W, state: &ParticleState, comment: &str) -> std::io::Result<()> {
    writeln!(w, "{}", state.len())?;
    writeln!(w, "{}", comment.replace('\n', " "))?;
    for (i, (x, q)) in state.positions.iter().zip(&state.charges).enumerate() {
        writeln!(w, "{i} {} {} {} {q}", x[0], x[1], x[2])?;
    }
    w.flush()
}

pub fn write_snapshot(path: &Path, state: &ParticleState, comment: &str) -> Result<()> {
    let file = File::create(path).map_err(|e| BenchError::io(path, e))?;
    write_snapshot_to(BufWriter::new(file), state, comment).map_err(|e| BenchError::io(path, e))
}

/// Parses a snapshot; particles are placed by id, which must cover `0..N` once.
/// `path` only labels errors.
pub fn read_snapshot_from<R: BufRead>(r: R, path: &Path) -> Result<(ParticleState, String)> {
    let err = |line: usize, message: String| BenchError::Parse { path: path.to_path_buf(), line, message };
    let mut lines = r.lines().enumerate();
    let mut next = || -> Result<Option<(usize, String)>> {
        match lines.next() {
            None => Ok(None),
            Some((n, l)) => Ok(Some((n + 1, l.map_err(|e| BenchError::io(path, e))?))),
        }
    };
    let (_, count) = next()?.ok_or_else(|| err(1, "missing particle count".into()))?;
    let n: usize = count.trim().parse().map_err(|_| err(1, format!("bad particle count `{}`", count.trim())))?;
    let comment = next()?.map(|(_, c)| c).unwrap_or_default();

    let mut positions: Vec<Option<Vec3>> = vec![None; n];
    let mut charges = vec![0.0; n];
    for _ in 0..n {
        let (line, text) = next()?.ok_or_else(|| err(n + 2, format!("expected {n} particle lines")))?;
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(err(line, format!("expected `id x y z q`, found {} fields", fields.len())));
        }
        let id: usize = fields[0].parse().map_err(|_| err(line, format!("bad id `{}`", fields[0])))?;
        if id >= n || positions[id].is_some() {
            return Err(err(line, format!("id {id} out of range or repeated")));
        }
        let mut v = [0.0; 4];
        for (slot, f) in v.iter_mut().zip(&fields[1..]) {
            *slot = f.parse().map_err(|_| err(line, format!("bad number `{f}`")))?;
        }
        positions[id] = Some([v[0], v[1], v[2]]);
        charges[id] = v[3];
    }
    let positions = positions.into_iter().map(|p| p.expect("every id seen once")).collect();
    Ok((ParticleState::with_charges(positions, charges)?, comment))
}

pub fn read_snapshot(path: &Path) -> Result<(ParticleState, String)> {
    let file = File::open(path).map_err(|e| BenchError::io(path, e))?;
    read_snapshot_from(BufReader::new(file), path)
}
