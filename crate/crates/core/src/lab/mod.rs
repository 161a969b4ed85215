//! Experiment runner: scenario pipelines, verdicts and run artifacts.
//!
//! A run owns its output directory (lock file), never overwrites an existing
//! `manifest.json`, and writes snapshots, per-R `almgren.csv`, SVG plots,
//! `verdicts.txt` and the manifest with SHA-256 hashes of every artifact.

pub mod blowdown;
pub mod report;
pub mod scenario;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::almgren::{
    audit_monotonicity, compute_series, derivative_identity_residual, doubling_envelope, growth_fit,
    phi_bound_check, pohozaev_audit, tested_pohozaev_audit, AlmgrenSeries, AlmgrenVariant, DoublingReport,
    GrowthFit, PhiBound, PohozaevAudit, Violation, Window,
};
use crate::error::{Error, Result};
use crate::grid::{column_masses, CylinderGrid, Field, StateK, XbcKind};
use crate::relax::{energy, FlowConfig, OrderingConstraint, RelaxOptions, RelaxReport, Relaxer, Scheme};
use crate::snapshot;
use crate::spectra::{column_spectral_check, lambda_sweep, sweep_csv, GapRow};

pub use blowdown::{blow_down, BlowDownReport, ShiftFit};
pub use report::Verdict;
pub use scenario::{setup, Scenario, ScenarioSetup};

pub const FIT_LO: f64 = 0.5;
pub const FIT_HI: f64 = 0.85;
pub const LIMIT_TOL: f64 = 0.03;
pub const MONOTONE_SLACK: f64 = 1e-6;
pub const BARRIER_TOL: f64 = 1e-6;
pub const ORDERING_TOL: f64 = 1e-8;
pub const GROWTH_FLATNESS: f64 = 0.05;
pub const GROWTH_STABILITY: f64 = 0.05;
pub const POHOZAEV_TOL: f64 = 5e-3;
pub const SPECTRAL_SLACK: f64 = 1e-3;
pub const ENERGY_SLACK: f64 = 1e-12;
pub const DRIFT_TOL: f64 = 1e-13;
pub const LEFT_DECAY: f64 = 1e-6;
pub const NONDEGENERACY: f64 = 1e-8;

/// Flat experiment description; keys match the CLI flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    /// Defaults to 2, or 3 for kcomp.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(rename = "R", default)]
    pub r: Vec<f64>,
    #[serde(default = "default_density")]
    pub density_x: f64,
    /// Defaults to 64 k.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Stopping tolerance relative to the largest boundary trace.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default)]
    pub checkpoint_every: usize,
    pub out: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resume: Option<PathBuf>,
    /// Snapshot directory consumed by blowdown.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub shifts: Vec<f64>,
    /// Coupling strengths for lmin.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lambda: Vec<f64>,
    /// Circle nodes for lmin.
    #[serde(default = "default_nodes")]
    pub nodes: usize,
}

fn default_density() -> f64 {
    64.0
}
fn default_dt() -> f64 {
    0.05
}
fn default_tol() -> f64 {
    1e-11
}
fn default_max_steps() -> usize {
    20_000
}
fn default_beta() -> f64 {
    1.0
}
fn default_scheme() -> Scheme {
    Scheme::Newton
}
fn default_nodes() -> usize {
    2400
}

impl ExperimentSpec {
    pub fn new(scenario: Scenario, out: impl Into<PathBuf>) -> Self {
        Self {
            scenario,
            k: None,
            r: Vec::new(),
            density_x: default_density(),
            ny: None,
            dt: default_dt(),
            tol: default_tol(),
            max_steps: default_max_steps(),
            beta: default_beta(),
            scheme: default_scheme(),
            checkpoint_every: 0,
            out: out.into(),
            resume: None,
            state: None,
            shifts: Vec::new(),
            lambda: Vec::new(),
            nodes: default_nodes(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))
    }

    pub fn k(&self) -> usize {
        self.k.unwrap_or(if self.scenario == Scenario::Kcomp { 3 } else { 2 })
    }

    pub fn ny(&self) -> usize {
        self.ny.unwrap_or(64 * self.k())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.r.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return bad("every R must be finite and > 0".into());
        }
        if self.r.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("the R schedule must be increasing".into());
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad(format!("tol must be > 0, got {}", self.tol));
        }
        match self.scenario {
            Scenario::Cosh | Scenario::Exp | Scenario::Kcomp => {
                if self.state.is_some() || !self.shifts.is_empty() {
                    return bad("state and shifts belong to blowdown".into());
                }
            }
            Scenario::Blowdown => {
                if self.state.is_none() {
                    return bad("blowdown needs a state directory".into());
                }
                if self.shifts.is_empty() || self.shifts.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("blowdown needs an increasing, nonempty shift list".into());
                }
            }
            Scenario::Lmin => {
                if self.lambda.is_empty() {
                    return bad("lmin needs at least one lambda".into());
                }
            }
        }
        Ok(())
    }

    fn flow_config(&self, max_trace: f64) -> FlowConfig {
        FlowConfig {
            dt: self.dt,
            max_steps: self.max_steps,
            residual_tol: self.tol * max_trace.max(1.0),
            scheme: self.scheme,
            beta: self.beta,
            checkpoint_every: self.checkpoint_every,
            ..FlowConfig::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FileRecord {
    /// Path relative to the run directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "status", content = "detail")]
pub enum RunStatus {
    Converged,
    NotConverged,
    Failed(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SpectralSummary {
    pub pass: bool,
    pub checked: usize,
    pub skipped: usize,
    pub worst_ratio: f64,
}

/// Diagnostics of one relaxed state.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Diagnostics {
    /// Variant the audited series was computed in.
    pub variant: AlmgrenVariant,
    /// Why the scenario's own variant could not be used, if it could not.
    pub withheld: Option<String>,
    pub fit_window: Window,
    pub terminal_n: f64,
    /// Terminal N of the wall-anchored series, for comparison.
    pub axis_terminal_n: f64,
    pub max_n: f64,
    pub monotonicity_violations: Vec<Violation>,
    pub growth: std::result::Result<GrowthFit, String>,
    pub doubling: DoublingReport,
    pub phi_bound: std::result::Result<PhiBound, String>,
    pub pohozaev_tested: PohozaevAudit,
    pub pohozaev_continuum: PohozaevAudit,
    /// `max |P_tested - P_wall| / (int (d_y u)^2 + (d_x u)^2 + beta u^2 v^2)`
    /// on the audited window, with `P_wall = 0` for unb series.
    pub pohozaev_free_residual: f64,
    pub derivative_identity: std::result::Result<f64, String>,
    pub spectral: std::result::Result<SpectralSummary, String>,
    /// `J` over the full cylinder.
    pub energy_full: f64,
    /// `pi sinh 2R` for cosh.
    pub competitor_energy: Option<f64>,
    /// `min (u_i - model_i^+) / max |model|`; absent for k > 2.
    pub barrier_margin: Option<f64>,
    /// `min (u - v)` on the positive set of the model; absent for k > 2.
    pub ordering_min: Option<f64>,
    /// `H(a) / H(0)` when 0 lies inside the grid.
    pub left_decay: Option<f64>,
    /// Energy of the computed half up to r = 0.
    pub energy_to_zero: Option<f64>,
    /// `max u_1 / max trace`.
    pub nondegeneracy: f64,
    /// `sup |u_{i+1} - u_i(., . - pi)|`.
    pub shift_defect: f64,
    pub max_abs: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunEntry {
    pub r: f64,
    pub nx: usize,
    pub ny: usize,
    pub status: RunStatus,
    pub relax: Option<RelaxReport>,
    pub diagnostics: Option<Diagnostics>,
    pub files: Vec<FileRecord>,
}

impl RunEntry {
    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunManifest {
    pub spec: ExperimentSpec,
    pub runs: Vec<RunEntry>,
    /// `sup` differences of consecutive equilibria on `[0, R_min / 2]` (cosh).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cauchy_differences: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blowdown: Option<std::result::Result<BlowDownReport, String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lmin: Vec<GapRow>,
    pub verdicts: Vec<Verdict>,
    pub files: Vec<FileRecord>,
    pub notes: Vec<String>,
    pub wall_seconds: f64,
}

impl RunManifest {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn run(&self, r: f64) -> Option<&RunEntry> {
        self.runs.iter().find(|e| e.r == r)
    }
}

/// Label of a radius in file names: `R6`, `R4.5`.
pub fn radius_label(r: f64) -> String {
    format!("R{r}")
}

struct RunLock(PathBuf);

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

/// Creates the run directory and takes its lock before anything is computed.
fn prepare_output(out: &Path) -> Result<RunLock> {
    let cfg = |e: std::io::Error| Error::Config(format!("output directory {}: {e}", out.display()));
    fs::create_dir_all(out).map_err(cfg)?;
    if out.join("manifest.json").exists() {
        return Err(Error::Config(format!("{} already holds a manifest", out.display())));
    }
    let lock = out.join(".segflow.lock");
    let mut f = fs::OpenOptions::new().write(true).create_new(true).open(&lock).map_err(|e| {
        if e.kind() == std::io::ErrorKind::AlreadyExists {
            Error::Config(format!("{} is locked by another run", out.display()))
        } else {
            cfg(e)
        }
    })?;
    use std::io::Write;
    writeln!(f, "{}", std::process::id()).map_err(cfg)?;
    Ok(RunLock(lock))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn record(root: &Path, path: &Path) -> Result<FileRecord> {
    let rel = path.strip_prefix(root).unwrap_or(path);
    Ok(FileRecord { path: rel.to_string_lossy().replace('\\', "/"), sha256: sha256_hex(&fs::read(path)?) })
}

fn write_file(root: &Path, rel: &str, bytes: &[u8], files: &mut Vec<FileRecord>) -> Result<()> {
    let p = root.join(rel);
    if let Some(parent) = p.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&p, bytes)?;
    files.push(record(root, &p)?);
    Ok(())
}

/// Runs an experiment and writes its artifacts.
pub fn run(spec: &ExperimentSpec) -> Result<RunManifest> {
    spec.validate()?;
    faer::set_global_parallelism(faer::Par::Seq);
    let _lock = prepare_output(&spec.out)?;
    let start = Instant::now();
    let mut manifest = match spec.scenario {
        Scenario::Cosh | Scenario::Exp | Scenario::Kcomp => run_relaxing(spec)?,
        Scenario::Blowdown => run_blowdown(spec)?,
        Scenario::Lmin => run_lmin(spec)?,
    };
    manifest.wall_seconds = start.elapsed().as_secs_f64();
    report::emit(&spec.out, &mut manifest)?;
    Ok(manifest)
}

fn empty_manifest(spec: &ExperimentSpec) -> RunManifest {
    RunManifest {
        spec: spec.clone(),
        runs: Vec::new(),
        cauchy_differences: Vec::new(),
        blowdown: None,
        lmin: Vec::new(),
        verdicts: Vec::new(),
        files: Vec::new(),
        notes: Vec::new(),
        wall_seconds: 0.0,
    }
}

struct Outcome {
    entry: RunEntry,
    state: Option<StateK>,
}

fn run_relaxing(spec: &ExperimentSpec) -> Result<RunManifest> {
    let (k, ny) = (spec.k(), spec.ny());
    // Geometry errors are configuration errors and surface before any flow.
    let setups = spec
        .r
        .iter()
        .map(|&r| scenario::setup(spec.scenario, k, r, spec.density_x, ny))
        .collect::<Result<Vec<_>>>()?;
    for s in &setups {
        spec.flow_config(s.initial.max_trace()).validate(&s.grid)?;
    }
    let slots: Vec<Mutex<Option<Outcome>>> = setups.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(setups.len()).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= setups.len() {
                    break;
                }
                let outcome = evaluate_radius(spec, &setups[i]);
                *slots[i].lock().unwrap() = Some(outcome);
            });
        }
    });
    let outcomes: Vec<Outcome> = slots.into_iter().map(|m| m.into_inner().unwrap().expect("every radius ran")).collect();

    let mut manifest = empty_manifest(spec);
    if spec.scenario == Scenario::Cosh && outcomes.len() >= 3 {
        manifest.cauchy_differences = cauchy_differences(&outcomes, spec.r[0] / 2.0);
    }
    manifest.runs = outcomes.into_iter().map(|o| o.entry).collect();
    manifest.verdicts = report::scenario_verdicts(spec, &manifest.runs, &manifest.cauchy_differences);
    if spec.scenario == Scenario::Exp {
        manifest.notes.push(
            "unb diagnostics use the left end of the computed half as surrogate; when H(a)/H(b) exceeds the decay \
             ratio they are withheld and the wall-anchored sym series is reported instead"
                .into(),
        );
    }
    Ok(manifest)
}

/// Sup distance of consecutive equilibria on columns `x <= x_max`; all grids
/// start at 0 with the same spacing.
fn cauchy_differences(outcomes: &[Outcome], x_max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for w in outcomes.windows(2) {
        let (Some(a), Some(b)) = (&w[0].state, &w[1].state) else {
            out.push(f64::NAN);
            continue;
        };
        let (ga, gb) = (a.grid(), b.grid());
        if (ga.hx() - gb.hx()).abs() > 1e-12 * ga.hx() || ga.ny != gb.ny || ga.a != gb.a {
            out.push(f64::NAN);
            continue;
        }
        let last = ((x_max - ga.a) / ga.hx() + 1e-9).floor() as usize;
        let n = (last + 1) * ga.ny;
        let d = a
            .components
            .iter()
            .zip(&b.components)
            .flat_map(|(u, v)| u.values()[..n].iter().zip(&v.values()[..n]).map(|(p, q)| (p - q).abs()))
            .fold(0.0_f64, f64::max);
        out.push(d);
    }
    out
}

fn evaluate_radius(spec: &ExperimentSpec, s: &ScenarioSetup) -> Outcome {
    let mut entry =
        RunEntry { r: s.r, nx: s.grid.nx, ny: s.grid.ny, status: RunStatus::NotConverged, relax: None, diagnostics: None, files: Vec::new() };
    match relax_and_diagnose(spec, s, &mut entry) {
        Ok(state) => Outcome { entry, state: Some(state) },
        Err(e) => {
            entry.status = RunStatus::Failed(e.to_string());
            Outcome { entry, state: None }
        }
    }
}

fn relax_and_diagnose(spec: &ExperimentSpec, s: &ScenarioSetup, entry: &mut RunEntry) -> Result<StateK> {
    let label = radius_label(s.r);
    let root = &spec.out;
    let cfg = spec.flow_config(s.initial.max_trace());
    let ordering = (s.grid.k == 2).then(|| OrderingConstraint { mask: scenario::positive_set(s), tol: ORDERING_TOL });
    let opts = RelaxOptions {
        checkpoint_dir: (cfg.checkpoint_every > 0).then(|| root.join(&label).join("checkpoint")),
        resume_dir: spec.resume.as_ref().map(|d| d.join(&label).join("checkpoint")),
        ordering,
    };
    let mut relaxer = Relaxer::new(&s.grid, XbcKind::NeumannLeft, s.grid.k, &s.group)?;
    let (state, rep) = relaxer.run(&s.initial, &cfg, &opts)?;
    entry.status = if rep.converged { RunStatus::Converged } else { RunStatus::NotConverged };

    let dir = root.join(&label);
    for p in snapshot::write_state(&dir.join("state"), &state)? {
        entry.files.push(record(root, &p)?);
    }
    for p in snapshot::write_state(&dir.join("full"), &reflect_to_full(&state)?)? {
        entry.files.push(record(root, &p)?);
    }
    let diag = diagnose(s, &state, spec.beta)?;
    let series = diag_series(s, &state, &diag, spec.beta)?;
    write_file(root, &format!("{label}/almgren.csv"), series.to_csv().as_bytes(), &mut entry.files)?;
    for (name, svg) in report::radius_plots(&series, &rep) {
        write_file(root, &format!("{label}/{name}"), svg.as_bytes(), &mut entry.files)?;
    }
    entry.relax = Some(rep);
    entry.diagnostics = Some(diag);
    Ok(state)
}

/// Mirror image of a half-cylinder state about its Neumann wall, on the
/// doubled grid with Dirichlet data at both ends.
pub fn reflect_to_full(state: &StateK) -> Result<StateK> {
    let g = state.grid();
    if state.kind() != XbcKind::NeumannLeft {
        return Err(Error::Input("only states with a Neumann wall can be reflected".into()));
    }
    let full = CylinderGrid::with_period(2.0 * g.a - g.b, g.b, g.k, 2 * g.nx, g.ny, g.period)?;
    let comps = state
        .components
        .iter()
        .map(|c| {
            let mut v = Vec::with_capacity(full.len());
            for j in 0..=full.nx {
                v.extend_from_slice(c.column(j.abs_diff(g.nx)));
            }
            Field::new(full, XbcKind::Dirichlet, v)
        })
        .collect::<Result<Vec<_>>>()?;
    StateK::new(comps, state.t)
}

fn diag_series(s: &ScenarioSetup, state: &StateK, d: &Diagnostics, beta: f64) -> Result<AlmgrenSeries> {
    compute_series(state, d.variant, beta).or_else(|_| compute_series(state, s.axis_variant, beta))
}

pub fn diagnose(s: &ScenarioSetup, state: &StateK, beta: f64) -> Result<Diagnostics> {
    let g = *state.grid();
    let axis = compute_series(state, s.axis_variant, beta)?;
    let (series, withheld) = match compute_series(state, s.variant, beta) {
        Ok(series) => (series, None),
        Err(Error::Variant(why)) => (axis.clone(), Some(why)),
        Err(e) => return Err(e),
    };
    let window = Window::new(FIT_LO * s.r, FIT_HI * s.r);
    let terminal = series.column_near(FIT_HI * s.r);
    let (lo, _) = series.columns_in(window);
    let max_n = series.n.iter().copied().filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max);

    let spectral = column_spectral_check(state, beta, SPECTRAL_SLACK)
        .map(|r| SpectralSummary { pass: r.pass(), checked: r.columns.len(), skipped: r.skipped, worst_ratio: r.worst_ratio })
        .map_err(|e| e.to_string());

    let (barrier_margin, ordering_min) = if g.k == 2 {
        let scale = s.initial.max_abs().max(f64::MIN_POSITIVE);
        let mut margin = f64::INFINITY;
        for (u, m) in state.components.iter().zip(&s.initial.components) {
            for (a, b) in u.values().iter().zip(m.values()) {
                margin = margin.min((a - b) / scale);
            }
        }
        let mask = scenario::positive_set(s);
        let (u, v) = (state.components[0].values(), state.components[1].values());
        let omin = (0..g.len()).filter(|&i| mask[i]).map(|i| u[i] - v[i]).fold(f64::INFINITY, f64::min);
        (Some(margin), Some(omin))
    } else {
        (None, None)
    };

    let h = column_masses(state);
    let zero = g.column_of(0.0).filter(|&j| j > 0);
    let left_decay = zero.map(|j| h[0] / h[j]);
    let energy_to_zero = zero.map(|j| series.cal_e[j]);

    let trace = state.max_trace().max(f64::MIN_POSITIVE);
    let nondegeneracy = state.components[0].max_abs() / trace;
    let shift = g.shift_nodes();
    let mut shift_defect = 0.0_f64;
    for i in 0..g.k {
        let (a, b) = (&state.components[i], &state.components[(i + 1) % g.k]);
        for j in 0..=g.nx {
            let (ca, cb) = (a.column(j), b.column(j));
            for m in 0..g.ny {
                shift_defect = shift_defect.max((cb[(m + shift) % g.ny] - ca[m]).abs());
            }
        }
    }

    let competitor_energy = (s.scenario == Scenario::Cosh).then(|| std::f64::consts::PI * (2.0 * s.r).sinh());
    Ok(Diagnostics {
        variant: series.variant,
        withheld,
        fit_window: window,
        terminal_n: series.n[terminal],
        axis_terminal_n: axis.n[terminal],
        max_n,
        monotonicity_violations: audit_monotonicity(&series, MONOTONE_SLACK),
        growth: growth_fit(&series, 1.0, window).map_err(|e| e.to_string()),
        doubling: doubling_envelope(&series, series.n[lo], 1.0, window),
        phi_bound: phi_bound_check(&series, FIT_LO * s.r).map_err(|e| e.to_string()),
        pohozaev_tested: tested_pohozaev_audit(&series, series.variant),
        pohozaev_continuum: pohozaev_audit(&series, series.variant),
        pohozaev_free_residual: free_pohozaev_residual(&series),
        derivative_identity: derivative_identity_residual(&series).map_err(|e| e.to_string()),
        spectral,
        energy_full: s.reflection_factor * energy(state, beta),
        competitor_energy,
        barrier_margin,
        ordering_min,
        left_decay,
        energy_to_zero,
        nondegeneracy,
        shift_defect,
        max_abs: state.max_abs(),
    })
}

fn free_pohozaev_residual(series: &AlmgrenSeries) -> f64 {
    let (lo, hi) = series.audited;
    let wall = match series.variant {
        AlmgrenVariant::Sym { .. } => series.pohozaev_tested[0],
        AlmgrenVariant::Unb { .. } => 0.0,
    };
    (lo..=hi).fold(0.0_f64, |a, j| {
        let size = series.grad_y[j] + series.grad_x[j] + series.beta * series.coupling_boundary[j];
        a.max((series.pohozaev_tested[j] - wall).abs() / size.max(f64::MIN_POSITIVE))
    })
}

fn run_blowdown(spec: &ExperimentSpec) -> Result<RunManifest> {
    let dir = spec.state.as_ref().expect("validated");
    let state = snapshot::read_state(dir).map_err(|e| Error::Config(format!("cannot read state: {e}")))?;
    let mut manifest = empty_manifest(spec);
    let result = blow_down(&state, &spec.shifts, spec.beta);
    manifest.verdicts = report::blowdown_verdicts(&result);
    manifest.notes.push(
        "blow-down is certified only for states whose hypotheses the artifact can measure: decay at the left end \
         (unb) or a Neumann wall (sym)"
            .into(),
    );
    if let Ok(r) = &result {
        let mut files = Vec::new();
        write_file(&spec.out, "blowdown.csv", r.to_csv().as_bytes(), &mut files)?;
        manifest.files.extend(files);
    }
    manifest.blowdown = Some(result.map_err(|e| e.to_string()));
    Ok(manifest)
}

fn run_lmin(spec: &ExperimentSpec) -> Result<RunManifest> {
    let k = spec.k();
    let rows = lambda_sweep(k, &spec.lambda, spec.nodes).map_err(|e| match e {
        Error::Input(m) => Error::Config(m),
        other => other,
    })?;
    let mut manifest = empty_manifest(spec);
    write_file(&spec.out, "lmin.csv", sweep_csv(&rows).as_bytes(), &mut manifest.files)?;
    manifest.verdicts = report::lmin_verdicts(k, &rows);
    manifest.lmin = rows;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_keys_are_kebab_case() {
        let s = ExperimentSpec::from_json(r#"{"scenario":"cosh","R":[3,4],"density-x":32,"ny":64,"out":"x"}"#).unwrap();
        assert_eq!(s.r, vec![3.0, 4.0]);
        assert_eq!(s.density_x, 32.0);
        assert_eq!(s.k(), 2);
        assert!(ExperimentSpec::from_json(r#"{"scenario":"cosh","out":"x","bogus":1}"#).is_err());
        assert!(ExperimentSpec::from_json(r#"{"scenario":"kcomp","out":"x"}"#).unwrap().ny() == 192);
    }

    #[test]
    fn schedule_must_increase() {
        let mut s = ExperimentSpec::new(Scenario::Cosh, "x");
        s.r = vec![4.0, 3.0];
        assert!(matches!(s.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn reflection_doubles_the_grid() {
        let g = CylinderGrid::new(0.0, 1.0, 2, 8, 8).unwrap();
        let u = Field::from_fn(g, XbcKind::NeumannLeft, |x, y| x + y).unwrap();
        let s = StateK::new(vec![u.clone(), u], 0.0).unwrap();
        let f = reflect_to_full(&s).unwrap();
        assert_eq!(f.grid().a, -1.0);
        assert_eq!(f.grid().nx, 16);
        assert_eq!(f.components[0].column(0), s.components[0].column(8));
        assert_eq!(f.components[0].column(8), s.components[0].column(0));
    }
}
