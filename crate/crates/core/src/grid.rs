//! Discrete cylinder `(a,b) x R/(P Z)`, fields with x-boundary conditions,
//! the 5-point Laplacian and the quadratures used everywhere else.
//!
//! Storage is row-major with x outer and y inner: node `(j, m)` lives at
//! `j * ny + m`, with `j = 0..=nx` and `m = 0..ny` (no duplicate seam node).

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::Acc;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderGrid {
    pub a: f64,
    pub b: f64,
    pub k: usize,
    pub nx: usize,
    pub ny: usize,
    /// y-period; `k * pi` unless the grid was rescaled.
    pub period: f64,
}

impl CylinderGrid {
    pub fn new(a: f64, b: f64, k: usize, nx: usize, ny: usize) -> Result<Self> {
        Self::with_period(a, b, k, nx, ny, k as f64 * PI)
    }

    pub fn with_period(a: f64, b: f64, k: usize, nx: usize, ny: usize, period: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Grid(format!("need finite a < b, got a={a}, b={b}")));
        }
        if k < 2 {
            return Err(Error::Grid(format!("k must be at least 2, got {k}")));
        }
        if nx < 8 || ny < 8 {
            return Err(Error::Grid(format!("need nx, ny >= 8, got nx={nx}, ny={ny}")));
        }
        if ny % (2 * k) != 0 {
            return Err(Error::Grid(format!("ny={ny} is not a multiple of 2k={}", 2 * k)));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::Grid(format!("bad period {period}")));
        }
        Ok(Self { a, b, k, nx, ny, period })
    }

    #[inline]
    pub fn hx(&self) -> f64 {
        (self.b - self.a) / self.nx as f64
    }

    #[inline]
    pub fn hy(&self) -> f64 {
        self.period / self.ny as f64
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.a + j as f64 * self.hx()
    }

    #[inline]
    pub fn y(&self, m: usize) -> f64 {
        m as f64 * self.hy()
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.nx + 1
    }

    #[inline]
    pub fn len(&self) -> usize {
        (self.nx + 1) * self.ny
    }

    #[inline]
    pub fn idx(&self, j: usize, m: usize) -> usize {
        j * self.ny + m
    }

    /// Nodes in one shift of `period / k` (the half-period for k = 2).
    #[inline]
    pub fn shift_nodes(&self) -> usize {
        self.ny / self.k
    }

    /// Column index of position `x`, if it is a node to within `1e-9 hx`.
    pub fn column_of(&self, x: f64) -> Option<usize> {
        let s = (x - self.a) / self.hx();
        let j = s.round();
        if (s - j).abs() <= 1e-9 && j >= 0.0 && j <= self.nx as f64 {
            Some(j as usize)
        } else {
            None
        }
    }

    /// Nearest column to `x`, clamped to the grid.
    pub fn nearest_column(&self, x: f64) -> usize {
        let s = ((x - self.a) / self.hx()).round();
        s.clamp(0.0, self.nx as f64) as usize
    }

    pub fn same_as(&self, other: &CylinderGrid) -> bool {
        self == other
    }
}

/// Boundary behaviour in x. The traces are immutable and shared.
#[derive(Clone, Debug, PartialEq)]
pub enum XBoundary {
    Dirichlet { left: Arc<[f64]>, right: Arc<[f64]> },
    NeumannLeft { right: Arc<[f64]> },
}

impl XBoundary {
    pub fn kind(&self) -> XbcKind {
        match self {
            XBoundary::Dirichlet { .. } => XbcKind::Dirichlet,
            XBoundary::NeumannLeft { .. } => XbcKind::NeumannLeft,
        }
    }

    /// First column that is an unknown of the flow.
    pub fn first_free(&self) -> usize {
        match self {
            XBoundary::Dirichlet { .. } => 1,
            XBoundary::NeumannLeft { .. } => 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum XbcKind {
    Dirichlet,
    NeumannLeft,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: CylinderGrid,
    xbc: XBoundary,
    values: Vec<f64>,
}

fn check_finite(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

impl Field {
    /// Builds a field whose boundary traces are read off the boundary columns of `values`.
    pub fn new(grid: CylinderGrid, kind: XbcKind, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Input(format!(
                "field has {} values, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        check_finite(&values)?;
        let ny = grid.ny;
        let right: Arc<[f64]> = values[grid.nx * ny..].into();
        let xbc = match kind {
            XbcKind::Dirichlet => XBoundary::Dirichlet { left: values[..ny].into(), right },
            XbcKind::NeumannLeft => XBoundary::NeumannLeft { right },
        };
        Ok(Self { grid, xbc, values })
    }

    /// Field with the given traces and interior values taken from `values`.
    pub fn with_boundary(grid: CylinderGrid, xbc: XBoundary, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Input("value length does not match grid".into()));
        }
        let ny = grid.ny;
        match &xbc {
            XBoundary::Dirichlet { left, right } => {
                if left.len() != ny || right.len() != ny {
                    return Err(Error::Input("trace length must equal ny".into()));
                }
                values[..ny].copy_from_slice(left);
                values[grid.nx * ny..].copy_from_slice(right);
            }
            XBoundary::NeumannLeft { right } => {
                if right.len() != ny {
                    return Err(Error::Input("trace length must equal ny".into()));
                }
                values[grid.nx * ny..].copy_from_slice(right);
            }
        }
        check_finite(&values)?;
        Ok(Self { grid, xbc, values })
    }

    pub fn from_fn(grid: CylinderGrid, kind: XbcKind, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut v = Vec::with_capacity(grid.len());
        for j in 0..=grid.nx {
            let x = grid.x(j);
            for m in 0..grid.ny {
                v.push(f(x, grid.y(m)));
            }
        }
        Self::new(grid, kind, v)
    }

    pub fn zeros_like(&self) -> Self {
        let v = vec![0.0; self.grid.len()];
        Self::with_boundary(self.grid, self.xbc.clone(), v).expect("same shape")
    }

    #[inline]
    pub fn grid(&self) -> &CylinderGrid {
        &self.grid
    }

    #[inline]
    pub fn xbc(&self) -> &XBoundary {
        &self.xbc
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, j: usize, m: usize) -> f64 {
        self.values[j * self.grid.ny + m]
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let ny = self.grid.ny;
        &self.values[j * ny..(j + 1) * ny]
    }

    /// Replace the values; boundary columns are reset to the traces.
    pub fn replace_values(&mut self, values: Vec<f64>) -> Result<()> {
        let f = Self::with_boundary(self.grid, self.xbc.clone(), values)?;
        self.values = f.values;
        Ok(())
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |a, &x| a.max(x.abs()))
    }

    /// Largest absolute value over the Dirichlet traces.
    pub fn max_trace(&self) -> f64 {
        let m = |t: &[f64]| t.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
        match &self.xbc {
            XBoundary::Dirichlet { left, right } => m(left).max(m(right)),
            XBoundary::NeumannLeft { right } => m(right),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateK {
    pub components: Vec<Field>,
    pub t: f64,
}

impl StateK {
    pub fn new(components: Vec<Field>, t: f64) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::Input("state needs at least one component".into()))?;
        for c in &components[1..] {
            if !c.grid.same_as(&first.grid) {
                return Err(Error::Input("components live on different grids".into()));
            }
            if c.xbc.kind() != first.xbc.kind() {
                return Err(Error::Input("components use different x-boundary kinds".into()));
            }
        }
        if !t.is_finite() {
            return Err(Error::Input("non-finite time".into()));
        }
        Ok(Self { components, t })
    }

    #[inline]
    pub fn grid(&self) -> &CylinderGrid {
        self.components[0].grid()
    }

    #[inline]
    pub fn ncomp(&self) -> usize {
        self.components.len()
    }

    pub fn kind(&self) -> XbcKind {
        self.components[0].xbc().kind()
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0_f64, |a, c| a.max(c.max_abs()))
    }

    pub fn max_trace(&self) -> f64 {
        self.components.iter().fold(0.0_f64, |a, c| a.max(c.max_trace()))
    }

    /// Sup-norm distance between two states on the same grid.
    pub fn sup_distance(&self, other: &StateK) -> f64 {
        let mut d = 0.0_f64;
        for (p, q) in self.components.iter().zip(&other.components) {
            for (x, y) in p.values.iter().zip(&q.values) {
                d = d.max((x - y).abs());
            }
        }
        d
    }
}

/// 5-point Laplacian. Entries on Dirichlet columns are left at zero; the
/// Neumann column uses the even ghost `u[-1] = u[1]`.
pub fn laplacian(f: &Field) -> Result<Vec<f64>> {
    check_finite(&f.values)?;
    let g = f.grid;
    let (nx, ny) = (g.nx, g.ny);
    let (ihx2, ihy2) = (1.0 / (g.hx() * g.hx()), 1.0 / (g.hy() * g.hy()));
    let u = &f.values;
    let mut out = vec![0.0; g.len()];
    for j in f.xbc.first_free()..nx {
        let jm = if j == 0 { 1 } else { j - 1 };
        for m in 0..ny {
            let mp = if m + 1 == ny { 0 } else { m + 1 };
            let mm = if m == 0 { ny - 1 } else { m - 1 };
            let c = u[j * ny + m];
            let dxx = (u[(j + 1) * ny + m] - 2.0 * c + u[jm * ny + m]) * ihx2;
            let dyy = (u[j * ny + mp] - 2.0 * c + u[j * ny + mm]) * ihy2;
            out[j * ny + m] = dxx + dyy;
        }
    }
    Ok(out)
}

/// `hy * sum_m f g` on column `j` (rectangle rule on the circle).
pub fn line_mass(f: &Field, g: &Field, j: usize) -> Result<f64> {
    if !f.grid.same_as(&g.grid) {
        return Err(Error::Input("line_mass on mismatched grids".into()));
    }
    if j > f.grid.nx {
        return Err(Error::Input(format!("column {j} outside grid")));
    }
    let mut acc = Acc::new();
    for (a, b) in f.column(j).iter().zip(g.column(j)) {
        acc.add(a * b);
    }
    Ok(f.grid.hy() * acc.value())
}

/// `H` at every column: `hy * sum_i sum_m u_i^2`.
pub fn column_masses(state: &StateK) -> Vec<f64> {
    let g = state.grid();
    let hy = g.hy();
    (0..=g.nx)
        .map(|j| {
            let mut acc = Acc::new();
            for c in &state.components {
                for &v in c.column(j) {
                    acc.add(v * v);
                }
            }
            hy * acc.value()
        })
        .collect()
}

/// Per-column pieces of the discrete energy.
///
/// `edge[j]` is the x-edge energy between columns j and j+1 (length nx);
/// `grad_y[j]` and `coupling[j]` are line integrals over the section at
/// column j of `sum_i (d_y u_i)^2` and `sum_{i<l} u_i^2 u_l^2`.
#[derive(Clone, Debug)]
pub struct EnergyPieces {
    pub edge: Vec<f64>,
    pub grad_y: Vec<f64>,
    pub coupling: Vec<f64>,
}

pub fn energy_pieces(state: &StateK) -> EnergyPieces {
    let g = state.grid();
    let (nx, ny, hx, hy) = (g.nx, g.ny, g.hx(), g.hy());
    let mut edge = Vec::with_capacity(nx);
    for j in 0..nx {
        let mut acc = Acc::new();
        for c in &state.components {
            let (a, b) = (c.column(j), c.column(j + 1));
            for m in 0..ny {
                let d = b[m] - a[m];
                acc.add(d * d);
            }
        }
        edge.push(acc.value() * hy / hx);
    }
    let mut grad_y = Vec::with_capacity(nx + 1);
    let mut coupling = Vec::with_capacity(nx + 1);
    let n = state.ncomp();
    for j in 0..=nx {
        let mut gy = Acc::new();
        let mut cp = Acc::new();
        for c in &state.components {
            let col = c.column(j);
            for m in 0..ny {
                let d = col[if m + 1 == ny { 0 } else { m + 1 }] - col[m];
                gy.add(d * d);
            }
        }
        for m in 0..ny {
            for i in 0..n {
                let ui = state.components[i].column(j)[m];
                let ui2 = ui * ui;
                for l in i + 1..n {
                    let ul = state.components[l].column(j)[m];
                    cp.add(ui2 * ul * ul);
                }
            }
        }
        grad_y.push(gy.value() / hy);
        coupling.push(cp.value() * hy);
    }
    EnergyPieces { edge, grad_y, coupling }
}

impl EnergyPieces {
    /// Cumulative energy `E(x_J)` for every column J, with `E(x_0) = 0`.
    pub fn cumulative(&self, coupling_weight: f64, hx: f64) -> Vec<f64> {
        let ncol = self.grad_y.len();
        let mut out = Vec::with_capacity(ncol);
        let mut acc = Acc::new();
        out.push(0.0);
        for j in 0..ncol - 1 {
            let cj = self.grad_y[j] + coupling_weight * self.coupling[j];
            let cj1 = self.grad_y[j + 1] + coupling_weight * self.coupling[j + 1];
            acc.add(self.edge[j]);
            acc.add(0.5 * hx * (cj + cj1));
            out.push(acc.value());
        }
        out
    }
}

/// `int_{C(a, x_upTo)} sum_i |grad u_i|^2 + w sum_{i<l} u_i^2 u_l^2`.
pub fn dirichlet_energy(state: &StateK, up_to: usize, coupling_weight: f64) -> Result<f64> {
    if !(coupling_weight >= 0.0) {
        return Err(Error::Input(format!("coupling weight must be >= 0, got {coupling_weight}")));
    }
    let g = state.grid();
    if up_to > g.nx {
        return Err(Error::Input(format!("column {up_to} outside grid")));
    }
    let p = energy_pieces(state);
    Ok(p.cumulative(coupling_weight, g.hx())[up_to])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(a: f64, b: f64, nx: usize, ny: usize) -> CylinderGrid {
        CylinderGrid::new(a, b, 2, nx, ny).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(CylinderGrid::new(1.0, 0.0, 2, 16, 16).is_err());
        assert!(CylinderGrid::new(0.0, 1.0, 2, 16, 18).is_err());
        assert!(CylinderGrid::new(0.0, 1.0, 3, 16, 26).is_err());
        assert!(CylinderGrid::new(0.0, 1.0, 3, 16, 36).is_ok());
        assert!(CylinderGrid::new(0.0, 1.0, 2, 4, 16).is_err());
    }

    #[test]
    fn laplacian_of_phi_is_small() {
        let g = grid(-2.0, 2.0, 256, 128);
        let f = Field::from_fn(g, XbcKind::Dirichlet, |x, y| x.cosh() * y.sin()).unwrap();
        let l = laplacian(&f).unwrap();
        let m = l.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
        // Taylor remainder: (hx^2 |u_xxxx| + hy^2 |u_yyyy|)/12 <= (hx^2+hy^2) cosh 2 / 12
        let (hx, hy) = (g.hx(), g.hy());
        let bound = (hx * hx + hy * hy) * 2f64.cosh() / 12.0;
        assert!(m <= bound * 1.01, "{m} vs {bound}");
        assert!(m <= 1e-3);
    }

    #[test]
    fn laplacian_constant_and_mode() {
        let g = grid(0.0, 1.0, 16, 128);
        let c = Field::from_fn(g, XbcKind::NeumannLeft, |_, _| 3.7).unwrap();
        assert!(laplacian(&c).unwrap().iter().all(|&x| x == 0.0));
        let s = Field::from_fn(g, XbcKind::NeumannLeft, |_, y| y.sin()).unwrap();
        let hy = g.hy();
        let mu = (2.0 - 2.0 * hy.cos()) / (hy * hy);
        let l = laplacian(&s).unwrap();
        for j in 0..g.nx {
            for m in 0..g.ny {
                let want = -mu * g.y(m).sin();
                assert!((l[g.idx(j, m)] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn laplacian_rejects_nan() {
        let g = grid(0.0, 1.0, 16, 16);
        let f = Field::from_fn(g, XbcKind::Dirichlet, |_, _| 1.0).unwrap();
        let mut f2 = f.clone();
        f2.values[20] = f64::NAN;
        assert!(laplacian(&f2).is_err());
        let mut v = f.values().to_vec();
        v[3] = f64::INFINITY;
        assert!(Field::new(g, XbcKind::Dirichlet, v).is_err());
    }

    #[test]
    fn line_mass_values() {
        let g = grid(0.0, 2.0, 16, 64);
        let s = Field::from_fn(g, XbcKind::Dirichlet, |_, y| y.sin()).unwrap();
        assert!((line_mass(&s, &s, 3).unwrap() - PI).abs() < 1e-13);
        let one = Field::from_fn(g, XbcKind::Dirichlet, |_, _| 1.0).unwrap();
        assert!((line_mass(&one, &one, 0).unwrap() - 2.0 * PI).abs() < 1e-13);
        let gr = grid(0.0, 2.0, 16, 64);
        let f = Field::from_fn(gr, XbcKind::Dirichlet, |x, y| x.cosh() * y.sin()).unwrap();
        let j = gr.column_of(1.0).unwrap();
        let want = PI * 1f64.cosh().powi(2);
        assert!((line_mass(&f, &f, j).unwrap() - want).abs() < 1e-12 * want);
    }

    #[test]
    fn energy_of_constants_is_coupling_only() {
        let g = grid(0.0, 1.5, 16, 16);
        let u = Field::from_fn(g, XbcKind::Dirichlet, |_, _| 2.0).unwrap();
        let v = Field::from_fn(g, XbcKind::Dirichlet, |_, _| 3.0).unwrap();
        let s = StateK::new(vec![u, v], 0.0).unwrap();
        let e = dirichlet_energy(&s, g.nx, 0.5).unwrap();
        let want = 0.5 * 4.0 * 9.0 * 1.5 * 2.0 * PI;
        assert!((e - want).abs() < 1e-12 * want);
        assert!(dirichlet_energy(&s, g.nx, -1.0).is_err());
    }

    #[test]
    fn energy_of_split_phi() {
        let g = grid(0.0, 2.0, 256, 128);
        let u = Field::from_fn(g, XbcKind::NeumannLeft, |x, y| (x.cosh() * y.sin()).max(0.0)).unwrap();
        let v = Field::from_fn(g, XbcKind::NeumannLeft, |x, y| (-x.cosh() * y.sin()).max(0.0)).unwrap();
        let s = StateK::new(vec![u, v], 0.0).unwrap();
        let e = dirichlet_energy(&s, g.nx, 2.0).unwrap();
        let want = PI * 2f64.sinh() * 2f64.cosh();
        assert!((e - want).abs() < 2e-3 * want, "{e} vs {want}");
    }
}
