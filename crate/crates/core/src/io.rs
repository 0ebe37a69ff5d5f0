//! Snapshot files and report tables.
//!
//! A snapshot is one CSV per field: a comment header naming the columns
//! `nx,ny,lx,ly,bc,name,time`, a comment line with their values, then the
//! values row by row (lowest `j` first) with 17 significant digits. Face
//! components carry `bc = no_slip`; `ux` has `nx + 1` columns and `ny`
//! rows, `uy` has `nx` columns and `ny + 1` rows.

use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::field::{BoundaryCondition, MacField, ScalarField};
use crate::grid::Grid;
use crate::state::SimState;

const HEADER: &str = "# nx,ny,lx,ly,bc,name,time";

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMeta {
    pub grid: Grid,
    pub bc: String,
    pub name: String,
    pub time: f64,
}

fn render(meta: &SnapshotMeta, cols: usize, values: &[f64]) -> String {
    let g = &meta.grid;
    let mut s = String::with_capacity(values.len() * 25 + 128);
    let _ = writeln!(s, "{HEADER}");
    let _ = writeln!(
        s,
        "# {},{},{:.17e},{:.17e},{},{},{:.17e}",
        g.nx, g.ny, g.lx, g.ly, meta.bc, meta.name, meta.time
    );
    for row in values.chunks(cols) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

fn parse(path: &Path) -> Result<(SnapshotMeta, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path)?;
    let bad = |why: &str| Error::Parse(format!("{}: {why}", path.display()));
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(HEADER) {
        return Err(bad("missing snapshot header"));
    }
    let meta_line = lines
        .next()
        .and_then(|l| l.strip_prefix('#'))
        .ok_or_else(|| bad("missing metadata line"))?;
    let parts: Vec<&str> = meta_line.trim().split(',').collect();
    if parts.len() != 7 {
        return Err(bad("metadata needs 7 entries"));
    }
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| bad("bad number in metadata"))
    };
    let int = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| bad("bad size in metadata"))
    };
    let grid = Grid::new(
        int(parts[0])?,
        int(parts[1])?,
        num(parts[2])?,
        num(parts[3])?,
    )?;
    let meta = SnapshotMeta {
        grid,
        bc: parts[4].trim().to_string(),
        name: parts[5].trim().to_string(),
        time: num(parts[6])?,
    };
    let rows = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| bad("bad value")))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((meta, rows))
}

fn flatten(rows: Vec<Vec<f64>>, cols: usize, nrows: usize, path: &Path) -> Result<Vec<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse(format!(
            "{}: expected {nrows} rows of {cols} values",
            path.display()
        )));
    }
    Ok(rows.into_iter().flatten().collect())
}

pub fn write_scalar(path: &Path, f: &ScalarField, name: &str, time: f64) -> Result<()> {
    let meta = SnapshotMeta {
        grid: f.grid,
        bc: f.bc.as_str().to_string(),
        name: name.to_string(),
        time,
    };
    fs::write(path, render(&meta, f.grid.nx, &f.values))?;
    Ok(())
}

pub fn read_scalar(path: &Path) -> Result<(ScalarField, SnapshotMeta)> {
    let (meta, rows) = parse(path)?;
    let bc = match meta.bc.as_str() {
        "neumann" => BoundaryCondition::Neumann,
        "dirichlet" => BoundaryCondition::Dirichlet,
        other => {
            return Err(Error::Parse(format!(
                "{}: `{other}` is not a cell boundary condition",
                path.display()
            )))
        }
    };
    let g = meta.grid;
    let values = flatten(rows, g.nx, g.ny, path)?;
    Ok((ScalarField::from_values(g, bc, values)?, meta))
}

pub fn write_velocity(ux: &Path, uy: &Path, u: &MacField, time: f64) -> Result<()> {
    let g = u.grid;
    let meta = |name: &str| SnapshotMeta {
        grid: g,
        bc: "no_slip".into(),
        name: name.into(),
        time,
    };
    fs::write(ux, render(&meta("ux"), g.nx + 1, &u.ux))?;
    fs::write(uy, render(&meta("uy"), g.nx, &u.uy))?;
    Ok(())
}

pub fn read_velocity(ux: &Path, uy: &Path) -> Result<(MacField, f64)> {
    let (mx, rx) = parse(ux)?;
    let (my, ry) = parse(uy)?;
    let g = mx.grid;
    g.same_as(&my.grid)?;
    let mut u = MacField::zeros(g);
    u.ux = flatten(rx, g.nx + 1, g.ny, ux)?;
    u.uy = flatten(ry, g.nx, g.ny + 1, uy)?;
    if !u.is_no_slip() {
        return Err(Error::Parse(format!(
            "{}: velocity snapshot violates no-slip",
            ux.display()
        )));
    }
    Ok((u, mx.time))
}

/// Paths of the six files of a state snapshot tagged `tag`.
pub fn state_paths(dir: &Path, tag: &str) -> [PathBuf; 6] {
    ["phi", "mu", "theta", "p", "ux", "uy"].map(|n| dir.join(format!("{n}_{tag}.csv")))
}

/// Writes a full state after checking the stored-state invariants.
pub fn write_state(dir: &Path, tag: &str, s: &SimState) -> Result<()> {
    s.check()?;
    fs::create_dir_all(dir)?;
    let [phi, mu, theta, p, ux, uy] = state_paths(dir, tag);
    write_scalar(&phi, &s.phi, "phi", s.t)?;
    write_scalar(&mu, &s.mu, "mu", s.t)?;
    write_scalar(&theta, &s.theta, "theta", s.t)?;
    write_scalar(&p, &s.p, "p", s.t)?;
    write_velocity(&ux, &uy, &s.u, s.t)
}

pub fn read_state(dir: &Path, tag: &str) -> Result<SimState> {
    let [phi, mu, theta, p, ux, uy] = state_paths(dir, tag);
    let (phi, meta) = read_scalar(&phi)?;
    let (mu, _) = read_scalar(&mu)?;
    let (theta, _) = read_scalar(&theta)?;
    let (p, _) = read_scalar(&p)?;
    let (u, _) = read_velocity(&ux, &uy)?;
    let s = SimState::new(meta.time, u, p, phi, mu, theta)?;
    s.check()?;
    Ok(s)
}

/// Serializes rows of a record type to CSV text.
pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    fs::write(path, csv_string(rows)?)?;
    Ok(())
}

/// Reads a CSV table of numbers with a header row.
pub fn read_numeric_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Parse(e.to_string()))?;
    let header = r
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        rows.push(
            rec.iter()
                .map(|v| v.parse::<f64>().unwrap_or(f64::NAN))
                .collect(),
        );
    }
    Ok((header, rows))
}
