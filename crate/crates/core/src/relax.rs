//! Parabolic gradient flow `U_t - Delta U = -beta U sum_{l != i} U_l^2`
//! driven to equilibrium inside a symmetry class.
//!
//! The implicit step freezes the reaction coefficient at the old state and
//! solves one symmetric M-matrix system on the orbit unknowns, so the update
//! is exactly invariant and nonnegative. Steps that would raise the energy
//! are rejected and retried with half the time step.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{energy_pieces, laplacian, CylinderGrid, Field, StateK, XbcKind};
use crate::linsolve::{PeriodicHelmholtz, ReducedSystem};
use crate::snapshot;
use crate::symmetry::{concat, split, symmetrize_with, symmetry_drift, Orbits, SymmetryGroup};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Scheme {
    Explicit,
    /// Frozen reaction coefficient; positivity by the M-matrix structure.
    Imex,
    /// Full reaction Jacobian, falling back to the frozen step whenever the
    /// linearized step fails, leaves the nonnegative cone or raises the energy.
    Newton,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FlowConfig {
    /// Initial (and, for the explicit scheme, fixed) time step.
    pub dt: f64,
    pub max_steps: usize,
    /// Tolerance on `sup |u' - u| / dt`.
    pub residual_tol: f64,
    pub symmetrize_every: usize,
    pub scheme: Scheme,
    pub beta: f64,
    /// Ceiling for the adaptive implicit step.
    pub dt_max: f64,
    /// Write a checkpoint every this many accepted steps (0 disables).
    pub checkpoint_every: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            max_steps: 20_000,
            residual_tol: 1e-8,
            symmetrize_every: 1,
            scheme: Scheme::Newton,
            beta: 1.0,
            dt_max: 1e8,
            checkpoint_every: 0,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self, grid: &CylinderGrid) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.residual_tol > 0.0) {
            return Err(Error::Config("residual tolerance must be > 0".into()));
        }
        if self.symmetrize_every == 0 {
            return Err(Error::Config("symmetrize_every must be >= 1".into()));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Config("beta must be > 0".into()));
        }
        if self.scheme == Scheme::Explicit {
            let limit = explicit_dt_limit(grid);
            if self.dt > limit {
                return Err(Error::Config(format!("explicit dt {} exceeds the diffusive limit {limit}", self.dt)));
            }
        } else if !(self.dt_max >= self.dt) {
            return Err(Error::Config("dt_max must be >= dt".into()));
        }
        Ok(())
    }
}

/// `hx^2 hy^2 / (2 (hx^2 + hy^2))`.
pub fn explicit_dt_limit(grid: &CylinderGrid) -> f64 {
    let (hx2, hy2) = (grid.hx().powi(2), grid.hy().powi(2));
    hx2 * hy2 / (2.0 * (hx2 + hy2))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RelaxReport {
    pub steps: usize,
    pub rejected_steps: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub final_pde_residual: f64,
    pub final_dt: f64,
    /// `(t, J)` after every accepted step, starting with the initial state.
    pub energy_trace: Vec<(f64, f64)>,
    pub positivity_violations: usize,
    /// Accepted steps that used the full-Jacobian update.
    pub newton_steps: usize,
    /// Negative values within rounding of zero that were set to zero.
    pub rounding_clamps: usize,
    pub ordering_violations: usize,
    pub max_symmetry_drift: f64,
    pub wall_seconds: f64,
}

impl RelaxReport {
    /// Largest increase between consecutive energies, relative to J(0).
    pub fn max_energy_rise(&self) -> f64 {
        let j0 = self.energy_trace.first().map(|e| e.1).unwrap_or(1.0).abs().max(f64::MIN_POSITIVE);
        self.energy_trace.windows(2).fold(f64::NEG_INFINITY, |a, w| a.max((w[1].1 - w[0].1) / j0))
    }
}

/// Lyapunov energy `int sum |grad u_i|^2 + beta sum_{i<l} u_i^2 u_l^2`.
pub fn energy(state: &StateK, beta: f64) -> f64 {
    let g = state.grid();
    *energy_pieces(state).cumulative(beta, g.hx()).last().unwrap()
}

/// `sum_{l != i} u_l^2` at every node, components concatenated.
fn reaction_coefficients(u: &[f64], ncomp: usize, len: usize) -> Vec<f64> {
    let mut total = vec![0.0; len];
    for i in 0..ncomp {
        for (t, v) in total.iter_mut().zip(&u[i * len..(i + 1) * len]) {
            *t += v * v;
        }
    }
    let mut c = vec![0.0; ncomp * len];
    for i in 0..ncomp {
        for p in 0..len {
            let v = u[i * len + p];
            // Subtracting from the total would leave rounding residue where
            // only u_i is nonzero, so sum the others explicitly for small k.
            c[i * len + p] = if ncomp <= 4 {
                let mut s = 0.0;
                for l in 0..ncomp {
                    if l != i {
                        let w = u[l * len + p];
                        s += w * w;
                    }
                }
                s
            } else {
                (total[p] - v * v).max(0.0)
            };
        }
    }
    c
}

/// Per-component `max |Delta_h u_i - beta u_i sum_{l != i} u_l^2|` over free nodes.
pub fn pde_residual(state: &StateK, beta: f64) -> Result<Vec<f64>> {
    let g = state.grid();
    let (ny, len) = (g.ny, g.len());
    let u = concat(state);
    let c = reaction_coefficients(&u, state.ncomp(), len);
    let first = state.components[0].xbc().first_free();
    state
        .components
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let lap = laplacian(f)?;
            let mut worst = 0.0_f64;
            for j in first..g.nx {
                for m in 0..ny {
                    let p = j * ny + m;
                    let r = lap[p] - beta * f.values()[p] * c[i * len + p];
                    worst = worst.max(r.abs());
                }
            }
            Ok(worst)
        })
        .collect()
}

fn reaction_is_y_independent(c: &[f64], ncomp: usize, grid: &CylinderGrid) -> bool {
    let (ny, len) = (grid.ny, grid.len());
    (0..ncomp).all(|i| {
        (0..=grid.nx).all(|j| {
            let col = &c[i * len + j * ny..i * len + (j + 1) * ny];
            col.iter().all(|&v| v == col[0])
        })
    })
}

/// One implicit step without symmetry reduction.
///
/// Coefficients that are constant along every column are solved with the
/// transform-in-y path; anything else goes through the sparse factorization.
pub fn step_imex(state: &StateK, dt: f64, beta: f64) -> Result<StateK> {
    if !(dt > 0.0) {
        return Err(Error::Input(format!("dt must be > 0, got {dt}")));
    }
    let g = *state.grid();
    let len = g.len();
    let n = state.ncomp();
    let mut u = concat(state);
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::Solve("NaN in input state".into()));
    }
    let c = reaction_coefficients(&u, n, len);
    if reaction_is_y_independent(&c, n, &g) {
        let solver = PeriodicHelmholtz::new(&g, state.kind());
        for i in 0..n {
            let c_col: Vec<f64> = (0..=g.nx).map(|j| c[i * len + j * g.ny]).collect();
            solver.step(&mut u[i * len..(i + 1) * len], &c_col, dt, beta)?;
        }
    } else {
        let orbits = Orbits::new(&g, n, &SymmetryGroup::trivial())?;
        let sys = ReducedSystem::new(&g, state.kind(), &orbits)?;
        sys.step(&mut u, &c, dt, beta)?;
    }
    let mut out = split(state, &u)?;
    out.t = state.t + dt;
    Ok(out)
}

/// One forward-Euler step.
pub fn step_explicit(state: &StateK, dt: f64, beta: f64) -> Result<StateK> {
    let g = *state.grid();
    let (ny, len) = (g.ny, g.len());
    let u = concat(state);
    let c = reaction_coefficients(&u, state.ncomp(), len);
    let first = state.components[0].xbc().first_free();
    let mut out = u.clone();
    for (i, f) in state.components.iter().enumerate() {
        let lap = laplacian(f)?;
        for j in first..g.nx {
            for m in 0..ny {
                let p = j * ny + m;
                let q = i * len + p;
                out[q] = u[q] + dt * (lap[p] - beta * c[q] * u[q]);
            }
        }
    }
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::Solve("NaN after explicit step".into()));
    }
    let mut s = split(state, &out)?;
    s.t = state.t + dt;
    Ok(s)
}

/// Zeroes negatives within rounding of zero; returns (clamped, violating) counts.
fn clamp_rounding(v: &mut [f64]) -> (usize, usize) {
    let scale = v.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
    let floor = 1e3 * f64::EPSILON * scale;
    let (mut clamps, mut violations) = (0usize, 0usize);
    for x in v.iter_mut() {
        if *x < 0.0 {
            if *x >= -floor {
                *x = 0.0;
                clamps += 1;
            } else {
                violations += 1;
            }
        }
    }
    (clamps, violations)
}

/// Mask of nodes where `u_0 - u_1 >= -tol` must hold.
#[derive(Clone, Debug)]
pub struct OrderingConstraint {
    pub mask: Vec<bool>,
    pub tol: f64,
}

#[derive(Clone, Debug, Default)]
pub struct RelaxOptions {
    pub checkpoint_dir: Option<PathBuf>,
    /// Resume from the checkpoint in this directory if one exists.
    pub resume_dir: Option<PathBuf>,
    pub ordering: Option<OrderingConstraint>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Progress {
    report: RelaxReport,
    dt: f64,
    t: f64,
}

fn write_checkpoint(dir: &Path, state: &StateK, report: &RelaxReport, dt: f64) -> Result<()> {
    fs::create_dir_all(dir)?;
    snapshot::write_state(dir, state)?;
    let p = Progress { report: report.clone(), dt, t: state.t };
    let tmp = dir.join("progress.json.tmp");
    fs::write(&tmp, serde_json::to_vec_pretty(&p)?)?;
    fs::rename(tmp, dir.join("progress.json"))?;
    Ok(())
}

fn read_checkpoint(dir: &Path, initial: &StateK) -> Result<Option<(StateK, RelaxReport, f64)>> {
    let pj = dir.join("progress.json");
    if !pj.exists() {
        return Ok(None);
    }
    let p: Progress = serde_json::from_slice(&fs::read(&pj)?)?;
    let state = snapshot::read_state(dir)?;
    if state.ncomp() != initial.ncomp() || state.grid() != initial.grid() || state.kind() != initial.kind() {
        return Err(Error::Config(format!("checkpoint in {} does not match the run geometry", dir.display())));
    }
    for (a, b) in state.components.iter().zip(&initial.components) {
        if a.xbc() != b.xbc() {
            return Err(Error::Config("checkpoint traces differ from the run's boundary data".into()));
        }
    }
    Ok(Some((state, p.report, p.dt)))
}

/// Reusable relaxation context for one geometry and group.
pub struct Relaxer {
    orbits: Orbits,
    system: Option<ReducedSystem>,
    kind: XbcKind,
    grid: CylinderGrid,
    ncomp: usize,
}

impl Relaxer {
    pub fn new(grid: &CylinderGrid, kind: XbcKind, ncomp: usize, group: &SymmetryGroup) -> Result<Self> {
        let orbits = Orbits::new(grid, ncomp, group)?;
        Ok(Self { orbits, system: None, kind, grid: *grid, ncomp })
    }

    pub fn orbits(&self) -> &Orbits {
        &self.orbits
    }

    fn system(&mut self) -> Result<&ReducedSystem> {
        if self.system.is_none() {
            self.system = Some(ReducedSystem::new(&self.grid, self.kind, &self.orbits)?);
        }
        Ok(self.system.as_ref().unwrap())
    }

    pub fn run(&mut self, initial: &StateK, cfg: &FlowConfig, opts: &RelaxOptions) -> Result<(StateK, RelaxReport)> {
        let start = Instant::now();
        let g = *initial.grid();
        if g != self.grid || initial.kind() != self.kind || initial.ncomp() != self.ncomp {
            return Err(Error::Input("state does not match the relaxer geometry".into()));
        }
        cfg.validate(&g)?;
        let (len, ny) = (g.len(), g.ny);
        let beta = cfg.beta;
        let first = initial.components[0].xbc().first_free();
        if initial.components.iter().flat_map(|c| c.values()).any(|&v| v < 0.0) {
            return Err(Error::Input("initial data must be nonnegative".into()));
        }

        let resumed = match &opts.resume_dir {
            Some(d) => read_checkpoint(d, initial)?,
            None => None,
        };
        let (mut state, mut report, mut dt) = match resumed {
            Some(r) => r,
            None => {
                let s = symmetrize_with(initial, &self.orbits)?;
                let j0 = energy(&s, beta);
                let report = RelaxReport { energy_trace: vec![(s.t, j0)], ..Default::default() };
                (s, report, cfg.dt)
            }
        };
        let j_ref = report.energy_trace[0].1.abs().max(f64::MIN_POSITIVE);
        let mut j_prev = report.energy_trace.last().unwrap().1;
        let dt_min = cfg.dt * 1e-9;

        while report.steps < cfg.max_steps {
            let u = concat(&state);
            let c = reaction_coefficients(&u, self.ncomp, len);
            let mut attempt = None;
            if cfg.scheme == Scheme::Newton {
                let mut v = u.clone();
                if self.system()?.step_newton(&mut v, &c, dt, beta).is_ok() {
                    let (clamps, violations) = clamp_rounding(&mut v);
                    if violations == 0 {
                        let cand = split(&state, &v)?;
                        let j_new = energy(&cand, beta);
                        if j_new <= j_prev + 1e-12 * j_ref {
                            attempt = Some((v, cand, j_new, clamps, 0, true));
                        }
                    }
                }
            }
            if attempt.is_none() {
                let mut v = u.clone();
                match cfg.scheme {
                    Scheme::Imex | Scheme::Newton => self.system()?.step(&mut v, &c, dt, beta)?,
                    Scheme::Explicit => v = concat(&step_explicit(&state, dt, beta)?),
                }
                let (clamps, violations) = clamp_rounding(&mut v);
                let cand = split(&state, &v)?;
                let j_new = energy(&cand, beta);
                if j_new <= j_prev + 1e-12 * j_ref {
                    attempt = Some((v, cand, j_new, clamps, violations, false));
                } else if cfg.scheme == Scheme::Explicit {
                    return Err(Error::Solve(format!("explicit step raised the energy from {j_prev} to {j_new}")));
                }
            }
            let Some((v, mut cand, j_new, clamps, violations, newton)) = attempt else {
                report.rejected_steps += 1;
                dt *= 0.5;
                if dt < dt_min {
                    return Err(Error::Solve("time step collapsed while enforcing energy decrease".into()));
                }
                continue;
            };
            cand.t = state.t + dt;
            report.newton_steps += newton as usize;
            report.steps += 1;
            report.rounding_clamps += clamps;
            report.positivity_violations += violations;
            let mut res = 0.0_f64;
            for i in 0..self.ncomp {
                for p in first * ny..g.nx * ny {
                    let q = i * len + p;
                    res = res.max((v[q] - u[q]).abs());
                }
            }
            res /= dt;
            if report.steps % cfg.symmetrize_every == 0 {
                let drift = symmetry_drift(&cand, &self.orbits);
                report.max_symmetry_drift = report.max_symmetry_drift.max(drift);
                if drift > 0.0 {
                    cand = symmetrize_with(&cand, &self.orbits)?;
                }
            }
            if let Some(ord) = &opts.ordering {
                let (a, b) = (cand.components[0].values(), cand.components[1].values());
                report.ordering_violations +=
                    (0..len).filter(|&p| ord.mask[p] && a[p] - b[p] < -ord.tol).count();
            }
            j_prev = j_new;
            report.energy_trace.push((cand.t, j_new));
            report.final_residual = res;
            state = cand;
            let done = res <= cfg.residual_tol && {
                let pr = pde_residual(&state, beta)?;
                let umax = state.max_abs();
                let r = pr.iter().fold(0.0_f64, |a, &x| a.max(x));
                report.final_pde_residual = r;
                r <= cfg.residual_tol * (1.0 + beta * umax * umax)
            };
            if cfg.scheme != Scheme::Explicit {
                dt = (dt * if newton { 4.0 } else { 1.5 }).min(cfg.dt_max);
            }
            if let Some(dir) = &opts.checkpoint_dir {
                if cfg.checkpoint_every > 0 && (report.steps % cfg.checkpoint_every == 0 || done) {
                    write_checkpoint(dir, &state, &report, dt)?;
                }
            }
            if done {
                report.converged = true;
                break;
            }
        }
        let pr = pde_residual(&state, beta)?;
        report.final_pde_residual = pr.iter().fold(0.0_f64, |a, &x| a.max(x));
        report.final_dt = dt;
        report.wall_seconds += start.elapsed().as_secs_f64();
        Ok((state, report))
    }
}

pub fn relax_to_equilibrium(
    initial: &StateK,
    group: &SymmetryGroup,
    cfg: &FlowConfig,
    opts: &RelaxOptions,
) -> Result<(StateK, RelaxReport)> {
    let mut r = Relaxer::new(initial.grid(), initial.kind(), initial.ncomp(), group)?;
    r.run(initial, cfg, opts)
}

/// `(lambda u(lambda x, lambda y))` on the grid scaled by `1/lambda`; node
/// positions map onto each other, so no interpolation is involved.
pub fn rescale_solution(state: &StateK, lambda: f64) -> Result<StateK> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Input(format!("lambda must be > 0, got {lambda}")));
    }
    let g = state.grid();
    let ng = CylinderGrid::with_period(g.a / lambda, g.b / lambda, g.k, g.nx, g.ny, g.period / lambda)?;
    let comps = state
        .components
        .iter()
        .map(|c| Field::new(ng, c.xbc().kind(), c.values().iter().map(|v| lambda * v).collect()))
        .collect::<Result<Vec<_>>>()?;
    StateK::new(comps, state.t)
}

/// `lambda u(lambda x, lambda y)` sampled on an arbitrary target grid.
///
/// Exact when every target node maps onto a source node; otherwise bilinear
/// interpolation is used if allowed, and the call is rejected if not.
pub fn rescale_onto(state: &StateK, lambda: f64, target: &CylinderGrid, interpolate: bool) -> Result<StateK> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Input(format!("lambda must be > 0, got {lambda}")));
    }
    let g = state.grid();
    if (target.period * lambda - g.period).abs() > 1e-12 * g.period {
        return Err(Error::Input("target period must equal source period / lambda".into()));
    }
    let (hx, hy) = (g.hx(), g.hy());
    let mut coords = Vec::with_capacity(target.len());
    let mut aligned = true;
    for j in 0..=target.nx {
        let sx = (lambda * target.x(j) - g.a) / hx;
        if sx < -1e-9 || sx > g.nx as f64 + 1e-9 {
            return Err(Error::Input("target grid extends beyond the scaled source".into()));
        }
        for m in 0..target.ny {
            let sy = lambda * target.y(m) / hy;
            aligned &= (sx - sx.round()).abs() <= 1e-9 && (sy - sy.round()).abs() <= 1e-9;
            coords.push((sx.clamp(0.0, g.nx as f64), sy));
        }
    }
    if !aligned && !interpolate {
        return Err(Error::Input(format!("lambda = {lambda} is not commensurate with the grid")));
    }
    let comps = state
        .components
        .iter()
        .map(|c| {
            let vals = coords
                .iter()
                .map(|&(sx, sy)| {
                    let v = if aligned {
                        c.at(sx.round() as usize, (sy.round() as usize) % g.ny)
                    } else {
                        let j = (sx.floor() as usize).min(g.nx - 1);
                        let fx = sx - j as f64;
                        let mf = sy.floor();
                        let fy = sy - mf;
                        let m0 = (mf as usize) % g.ny;
                        let m1 = (m0 + 1) % g.ny;
                        (1.0 - fx) * ((1.0 - fy) * c.at(j, m0) + fy * c.at(j, m1))
                            + fx * ((1.0 - fy) * c.at(j + 1, m0) + fy * c.at(j + 1, m1))
                    };
                    lambda * v
                })
                .collect();
            Field::new(*target, c.xbc().kind(), vals)
        })
        .collect::<Result<Vec<_>>>()?;
    StateK::new(comps, state.t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::HarmonicModel;

    #[test]
    fn heat_mode_decay() {
        let g = CylinderGrid::new(-6.0, 6.0, 2, 240, 64).unwrap();
        let mut vals = vec![0.0; g.len()];
        for j in 1..g.nx {
            for m in 0..g.ny {
                vals[g.idx(j, m)] = g.y(m).sin();
            }
        }
        let u = Field::new(g, XbcKind::Dirichlet, vals).unwrap();
        let mut s = StateK::new(vec![u], 0.0).unwrap();
        let dt = 0.01;
        let hy = g.hy();
        let mu = (2.0 - 2.0 * hy.cos()) / (hy * hy);
        for _ in 0..20 {
            s = step_imex(&s, dt, 1.0).unwrap();
        }
        let jm = g.nx / 2;
        let want = (1.0 + mu * dt).powi(-20);
        for m in 0..g.ny {
            let got = s.components[0].at(jm, m);
            assert!((got - want * g.y(m).sin()).abs() <= 1e-10, "{got} vs {}", want * g.y(m).sin());
        }
    }

    #[test]
    fn zero_component_stays_zero() {
        let g = CylinderGrid::new(0.0, 2.0, 2, 16, 16).unwrap();
        let s = HarmonicModel::Phi.sample_split(&g, XbcKind::NeumannLeft).unwrap();
        let z = Field::new(g, XbcKind::NeumannLeft, vec![0.0; g.len()]).unwrap();
        let st = StateK::new(vec![s.components[0].clone(), z], 0.0).unwrap();
        let out = step_imex(&st, 0.1, 1.0).unwrap();
        assert!(out.components[1].values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rescale_identity_and_zero() {
        let g = CylinderGrid::new(0.0, 2.0, 2, 16, 16).unwrap();
        let s = HarmonicModel::Phi.sample_split(&g, XbcKind::NeumannLeft).unwrap();
        assert_eq!(rescale_solution(&s, 1.0).unwrap(), s);
        let z = StateK::new(vec![Field::new(g, XbcKind::NeumannLeft, vec![0.0; g.len()]).unwrap()], 0.0).unwrap();
        let z2 = rescale_solution(&z, 2.0).unwrap();
        assert!(z2.components[0].values().iter().all(|&v| v == 0.0));
        let target = CylinderGrid::with_period(0.0, 1.0, 2, 8, 16, g.period / 2.0).unwrap();
        assert!(rescale_onto(&s, 2.0, &target, false).is_ok());
        let odd = CylinderGrid::with_period(0.0, 0.9, 2, 9, 16, g.period / 2.0).unwrap();
        assert!(rescale_onto(&s, 2.0, &odd, false).is_err());
        assert!(rescale_onto(&s, 2.0, &odd, true).is_ok());
    }

    #[test]
    fn explicit_cfl_enforced() {
        let g = CylinderGrid::new(0.0, 2.0, 2, 16, 16).unwrap();
        let cfg = FlowConfig { scheme: Scheme::Explicit, dt: 1.0, ..Default::default() };
        assert!(cfg.validate(&g).is_err());
        let cfg = FlowConfig { scheme: Scheme::Explicit, dt: explicit_dt_limit(&g), ..Default::default() };
        assert!(cfg.validate(&g).is_ok());
    }
}
