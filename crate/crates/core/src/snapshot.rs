//! `.fld` snapshots: one JSON header line, then little-endian f64 values,
//! x outer and y inner.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CylinderGrid, Field, StateK, XbcKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FldHeader {
    pub a: f64,
    pub b: f64,
    pub k: usize,
    pub nx: usize,
    pub ny: usize,
    pub xbc: XbcKind,
    pub component: usize,
    pub t: f64,
    /// Present when the y-period differs from `k pi` (rescaled grids).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
}

pub fn encode_field(field: &Field, component: usize, t: f64) -> Result<Vec<u8>> {
    let g = field.grid();
    let natural = g.k as f64 * std::f64::consts::PI;
    let header = FldHeader {
        a: g.a,
        b: g.b,
        k: g.k,
        nx: g.nx,
        ny: g.ny,
        xbc: field.xbc().kind(),
        component,
        t,
        period: (g.period != natural).then_some(g.period),
    };
    let mut out = serde_json::to_vec(&header)?;
    out.push(b'\n');
    out.reserve(8 * field.values().len());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn write_field(path: &Path, field: &Field, component: usize, t: f64) -> Result<()> {
    let bytes = encode_field(field, component, t)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    f.sync_all()?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<(FldHeader, Field)> {
    let mut r = BufReader::new(fs::File::open(path)?);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let h: FldHeader = serde_json::from_str(line.trim_end())
        .map_err(|e| Error::Input(format!("{}: bad header: {e}", path.display())))?;
    let grid = match h.period {
        Some(p) => CylinderGrid::with_period(h.a, h.b, h.k, h.nx, h.ny, p)?,
        None => CylinderGrid::new(h.a, h.b, h.k, h.nx, h.ny)?,
    };
    let mut raw = Vec::new();
    r.read_to_end(&mut raw)?;
    if raw.len() != 8 * grid.len() {
        return Err(Error::Input(format!(
            "{}: expected {} bytes of data, found {}",
            path.display(),
            8 * grid.len(),
            raw.len()
        )));
    }
    let values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let field = Field::new(grid, h.xbc, values)?;
    Ok((h, field))
}

/// Writes `comp{i}.fld` for every component into `dir`.
pub fn write_state(dir: &Path, state: &StateK) -> Result<Vec<std::path::PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (i, c) in state.components.iter().enumerate() {
        let p = dir.join(format!("comp{i}.fld"));
        write_field(&p, c, i, state.t)?;
        paths.push(p);
    }
    Ok(paths)
}

/// Reads all `comp{i}.fld` files of a directory, in component order.
pub fn read_state(dir: &Path) -> Result<StateK> {
    let mut comps = Vec::new();
    let mut t = 0.0;
    for i in 0.. {
        let p = dir.join(format!("comp{i}.fld"));
        if !p.exists() {
            break;
        }
        let (h, f) = read_field(&p)?;
        if h.component != i {
            return Err(Error::Input(format!("{} holds component {}", p.display(), h.component)));
        }
        t = h.t;
        comps.push(f);
    }
    if comps.is_empty() {
        return Err(Error::Input(format!("no comp0.fld in {}", dir.display())));
    }
    StateK::new(comps, t)
}
