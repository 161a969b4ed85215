//! Linear solvers for the implicit step.
//!
//! `ReducedSystem` assembles the mass-weighted implicit operator restricted
//! to symmetry orbits of the free nodes and factors it with a sparse
//! Cholesky. `PeriodicHelmholtz` handles reaction coefficients that do not
//! depend on y: a DFT in y turns the 5-point operator into one tridiagonal
//! system in x per mode.

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::Side;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::{CylinderGrid, XbcKind};
use crate::symmetry::Orbits;

/// Solves `(M/dt + K + beta M c) u' = M u/dt + boundary terms` on orbit unknowns.
pub struct ReducedSystem {
    grid: CylinderGrid,
    ncomp: usize,
    first_free: usize,
    /// Reduced index of each flat node, `u32::MAX` on fixed nodes.
    rid: Vec<u32>,
    nred: usize,
    /// Mass weight `w_j hx hy` of each column.
    col_mass: Vec<f64>,
    symbolic: SymbolicSparseColMat<usize>,
    llt_symbolic: SymbolicLlt<usize>,
    base_values: Vec<f64>,
    diag_pos: Vec<usize>,
    /// Edge list of (p, q, kappa) with p free and q fixed, for boundary loads.
    boundary_edges: Vec<(u32, u32, f64)>,
    /// Same-node component pairs `(p, q, value slot, same orbit)`.
    cross: Vec<(u32, u32, usize, bool)>,
}

impl ReducedSystem {
    pub fn new(grid: &CylinderGrid, kind: XbcKind, orbits: &Orbits) -> Result<Self> {
        let g = *grid;
        let (nx, ny, hx, hy) = (g.nx, g.ny, g.hx(), g.hy());
        let len = g.len();
        let ncomp = orbits.ncomp;
        let first_free = match kind {
            XbcKind::Dirichlet => 1,
            XbcKind::NeumannLeft => 0,
        };
        let is_free = |p: usize| {
            let j = (p % len) / ny;
            j >= first_free && j < nx
        };
        let mut orbit_to_red = vec![u32::MAX; orbits.count()];
        let mut rid = vec![u32::MAX; ncomp * len];
        let mut nred = 0usize;
        for o in 0..orbits.count() {
            let mem = orbits.orbit(o);
            let free = is_free(mem[0] as usize);
            if mem.iter().any(|&p| is_free(p as usize) != free) {
                return Err(Error::Symmetry("an orbit mixes free and boundary nodes".into()));
            }
            if free {
                orbit_to_red[o] = nred as u32;
                nred += 1;
            }
        }
        for p in 0..ncomp * len {
            if is_free(p) {
                rid[p] = orbit_to_red[orbits.id[p] as usize];
            }
        }
        let mut col_mass = vec![hx * hy; nx + 1];
        if kind == XbcKind::NeumannLeft {
            col_mass[0] *= 0.5;
        }

        // Lower-triangle stiffness entries, and boundary couplings.
        let kx = hy / hx;
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        let mut boundary_edges = Vec::new();
        let mut diag_stiff = vec![0.0; nred];
        let mut add_edge = |p: usize, q: usize, kappa: f64, entries: &mut Vec<(usize, usize, f64)>| {
            let (fp, fq) = (rid[p], rid[q]);
            match (fp != u32::MAX, fq != u32::MAX) {
                // An edge inside one orbit contributes nothing to the reduced operator.
                (true, true) if fp == fq => {}
                (true, true) => {
                    diag_stiff[fp as usize] += kappa;
                    diag_stiff[fq as usize] += kappa;
                    let (r, c) = if fp > fq { (fp, fq) } else { (fq, fp) };
                    entries.push((r as usize, c as usize, -kappa));
                }
                (true, false) => {
                    diag_stiff[fp as usize] += kappa;
                    boundary_edges.push((p as u32, q as u32, kappa));
                }
                (false, true) => {
                    diag_stiff[fq as usize] += kappa;
                    boundary_edges.push((q as u32, p as u32, kappa));
                }
                (false, false) => {}
            }
        };
        for i in 0..ncomp {
            let base = i * len;
            for j in 0..nx {
                for m in 0..ny {
                    add_edge(base + j * ny + m, base + (j + 1) * ny + m, kx, &mut entries);
                }
            }
            for j in first_free..nx {
                let ky = col_mass[j] / (hy * hy);
                for m in 0..ny {
                    let mp = if m + 1 == ny { 0 } else { m + 1 };
                    add_edge(base + j * ny + m, base + j * ny + mp, ky, &mut entries);
                }
            }
        }
        for (r, d) in diag_stiff.iter().enumerate() {
            entries.push((r, r, *d));
        }
        // Pattern slots for the same-node coupling between components.
        let mut cross_nodes = Vec::new();
        for i in 0..ncomp {
            for l in i + 1..ncomp {
                for p in first_free * ny..nx * ny {
                    let (a, b) = (rid[i * len + p], rid[l * len + p]);
                    let (r, c) = if a > b { (a, b) } else { (b, a) };
                    entries.push((r as usize, c as usize, 0.0));
                    cross_nodes.push(((i * len + p) as u32, (l * len + p) as u32, r as usize, c as usize));
                }
            }
        }
        entries.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        let mut col_ptr = vec![0usize; nred + 1];
        let mut row_idx = Vec::with_capacity(entries.len());
        let mut base_values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &entries {
            if last == Some((r, c)) {
                *base_values.last_mut().unwrap() += v;
            } else {
                row_idx.push(r);
                base_values.push(v);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
        }
        for c in 0..nred {
            col_ptr[c + 1] += col_ptr[c];
        }
        // Diagonal is the first entry of each column (rows sorted ascending, r >= c).
        let diag_pos: Vec<usize> = (0..nred).map(|c| col_ptr[c]).collect();
        for (c, &p) in diag_pos.iter().enumerate() {
            debug_assert_eq!(row_idx[p], c);
        }
        let cross: Vec<(u32, u32, usize, bool)> = cross_nodes
            .into_iter()
            .map(|(p, q, r, c)| {
                let rows = &row_idx[col_ptr[c]..col_ptr[c + 1]];
                let k = rows.binary_search(&r).expect("cross slot in pattern");
                (p, q, col_ptr[c] + k, r == c)
            })
            .collect();
        let symbolic = SymbolicSparseColMat::new_checked(nred, nred, col_ptr, None, row_idx);
        let llt_symbolic = SymbolicLlt::try_new(symbolic.as_ref(), Side::Lower)
            .map_err(|e| Error::Solve(format!("symbolic factorization: {e:?}")))?;
        Ok(Self {
            grid: g,
            ncomp,
            first_free,
            rid,
            nred,
            col_mass,
            symbolic,
            llt_symbolic,
            base_values,
            diag_pos,
            boundary_edges,
            cross,
        })
    }

    pub fn unknowns(&self) -> usize {
        self.nred
    }

    /// One implicit step. `u` holds all components concatenated; `c[p]` is
    /// the frozen reaction coefficient `sum_{l != i} u_l^2` at each node.
    /// Free entries of `u` are overwritten with the new values.
    pub fn step(&self, u: &mut [f64], c: &[f64], dt: f64, beta: f64) -> Result<()> {
        let g = &self.grid;
        let (ny, len) = (g.ny, g.len());
        let inv_dt = 1.0 / dt;
        let mut values = self.base_values.clone();
        let mut rhs = vec![0.0; self.nred];
        for i in 0..self.ncomp {
            for j in self.first_free..g.nx {
                let mass = self.col_mass[j];
                for m in 0..ny {
                    let p = i * len + j * ny + m;
                    let r = self.rid[p] as usize;
                    values[self.diag_pos[r]] += mass * (inv_dt + beta * c[p]);
                    rhs[r] += mass * u[p] * inv_dt;
                }
            }
        }
        for &(p, q, kappa) in &self.boundary_edges {
            rhs[self.rid[p as usize] as usize] += kappa * u[q as usize];
        }
        self.solve_scatter(u, &values, &rhs)
    }
}

impl ReducedSystem {
    /// Linearly implicit step with the full reaction Jacobian:
    /// `(M/dt + K + beta M (c + 2 u_i u_l)) (u' - u) = -(K u + beta M c u)`.
    ///
    /// As `dt` grows this becomes a Newton step for the equilibrium. The
    /// matrix is not an M-matrix, so positivity of `u'` is not guaranteed;
    /// a failed factorization (indefinite Jacobian) is returned as an error.
    pub fn step_newton(&self, u: &mut [f64], c: &[f64], dt: f64, beta: f64) -> Result<()> {
        let g = &self.grid;
        let (ny, len) = (g.ny, g.len());
        let inv_dt = 1.0 / dt;
        let mut values = self.base_values.clone();
        let mut rhs = vec![0.0; self.nred];
        for i in 0..self.ncomp {
            for j in self.first_free..g.nx {
                let mass = self.col_mass[j];
                for m in 0..ny {
                    let p = i * len + j * ny + m;
                    let r = self.rid[p] as usize;
                    values[self.diag_pos[r]] += mass * (inv_dt + beta * c[p]);
                    rhs[r] += mass * u[p] * (inv_dt + 2.0 * beta * c[p]);
                }
            }
        }
        for &(p, q, pos, same) in &self.cross {
            let j = (p as usize % len) / ny;
            let x = 2.0 * beta * self.col_mass[j] * u[p as usize] * u[q as usize];
            values[pos] += if same { 2.0 * x } else { x };
        }
        for &(p, q, kappa) in &self.boundary_edges {
            rhs[self.rid[p as usize] as usize] += kappa * u[q as usize];
        }
        self.solve_scatter(u, &values, &rhs)
    }

    fn solve_scatter(&self, u: &mut [f64], values: &[f64], rhs: &[f64]) -> Result<()> {
        let g = &self.grid;
        let (ny, len) = (g.ny, g.len());
        let a = SparseColMatRef::new(self.symbolic.as_ref(), values);
        let llt = Llt::try_new_with_symbolic(self.llt_symbolic.clone(), a, Side::Lower)
            .map_err(|e| Error::Solve(format!("numeric factorization: {e:?}")))?;
        let mut b = Col::<f64>::from_fn(self.nred, |r| rhs[r]);
        llt.solve_in_place(b.as_mat_mut());
        for i in 0..self.ncomp {
            for j in self.first_free..g.nx {
                for m in 0..ny {
                    let p = i * len + j * ny + m;
                    u[p] = b[self.rid[p] as usize];
                }
            }
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::Solve("non-finite value after solve".into()));
        }
        Ok(())
    }
}

/// Implicit step for one component whose reaction coefficient depends on x only.
pub struct PeriodicHelmholtz {
    grid: CylinderGrid,
    kind: XbcKind,
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl PeriodicHelmholtz {
    pub fn new(grid: &CylinderGrid, kind: XbcKind) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid: *grid,
            kind,
            fwd: planner.plan_fft_forward(grid.ny),
            inv: planner.plan_fft_inverse(grid.ny),
        }
    }

    /// Solves `(1/dt + beta c_j - Delta_h) u' = u/dt` with the boundary columns of `u` fixed.
    pub fn step(&self, u: &mut [f64], c_col: &[f64], dt: f64, beta: f64) -> Result<()> {
        let g = &self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let (ihx2, hy) = (1.0 / (g.hx() * g.hx()), g.hy());
        let j0 = if self.kind == XbcKind::NeumannLeft { 0 } else { 1 };
        let mut hat: Vec<Vec<Complex<f64>>> = (0..=nx)
            .map(|j| {
                let mut col: Vec<Complex<f64>> = u[j * ny..(j + 1) * ny].iter().map(|&v| Complex::new(v, 0.0)).collect();
                self.fwd.process(&mut col);
                col
            })
            .collect();
        let nfree = nx - j0;
        let mut lower = vec![0.0; nfree];
        let mut diag = vec![0.0; nfree];
        let mut upper = vec![0.0; nfree];
        let mut rhs = vec![Complex::new(0.0, 0.0); nfree];
        for n in 0..ny {
            let mu = (2.0 - 2.0 * (2.0 * std::f64::consts::PI * n as f64 / ny as f64).cos()) / (hy * hy);
            for (k, j) in (j0..nx).enumerate() {
                diag[k] = 1.0 / dt + beta * c_col[j] + mu + 2.0 * ihx2;
                lower[k] = -ihx2;
                upper[k] = -ihx2;
                rhs[k] = hat[j][n] / dt;
                if j == 0 {
                    upper[k] = -2.0 * ihx2;
                }
                if j == 1 && j0 == 1 {
                    rhs[k] += hat[0][n] * ihx2;
                }
                if j + 1 == nx {
                    rhs[k] += hat[nx][n] * ihx2;
                }
            }
            let sol = thomas(&lower, &diag, &upper, &rhs);
            for (k, j) in (j0..nx).enumerate() {
                hat[j][n] = sol[k];
            }
        }
        let scale = 1.0 / ny as f64;
        for j in j0..nx {
            let col = &mut hat[j];
            self.inv.process(col);
            for m in 0..ny {
                u[j * ny + m] = col[m].re * scale;
            }
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::Solve("non-finite value after solve".into()));
        }
        Ok(())
    }
}

/// Thomas algorithm for a tridiagonal system; `lower[0]` and `upper[n-1]` are ignored.
pub fn thomas<T>(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[T]) -> Vec<T>
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let n = diag.len();
    let mut cp = vec![0.0; n];
    let mut dp: Vec<T> = rhs.to_vec();
    cp[0] = upper[0] / diag[0];
    dp[0] = rhs[0] * (1.0 / diag[0]);
    for i in 1..n {
        let den = diag[i] - lower[i] * cp[i - 1];
        cp[i] = if i + 1 < n { upper[i] / den } else { 0.0 };
        dp[i] = (rhs[i] - dp[i - 1] * lower[i]) * (1.0 / den);
    }
    for i in (0..n - 1).rev() {
        dp[i] = dp[i] - dp[i + 1] * cp[i];
    }
    dp
}

/// Solves a symmetric cyclic tridiagonal system with constant off-diagonal
/// `off` (Sherman-Morrison on top of the Thomas algorithm).
pub fn cyclic_tridiagonal(diag: &[f64], off: f64, rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= off * off / gamma;
    let lower = vec![off; n];
    let upper = vec![off; n];
    let x = thomas(&lower, &d, &upper, rhs);
    let mut w = vec![0.0; n];
    w[0] = gamma;
    w[n - 1] = off;
    let z = thomas(&lower, &d, &upper, &w);
    let fact = (x[0] + off * x[n - 1] / gamma) / (1.0 + z[0] + off * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}
