//! Verdict lines, SVG plots and the final write of `verdicts.txt` and
//! `manifest.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    BlowDownReport, Diagnostics, ExperimentSpec, RunEntry, RunManifest, Scenario, BARRIER_TOL, DRIFT_TOL,
    ENERGY_SLACK, GROWTH_FLATNESS, GROWTH_STABILITY, LEFT_DECAY, LIMIT_TOL, NONDEGENERACY, ORDERING_TOL,
    POHOZAEV_TOL,
};
use crate::almgren::AlmgrenSeries;
use crate::error::Result;
use crate::relax::RelaxReport;
use crate::spectra::GapRow;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub id: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    fn new(id: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self { id: id.into(), pass, detail: detail.into() }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.id, self.detail)
    }
}

/// Folds a per-radius check over the schedule. Radii without diagnostics fail.
fn per_radius(
    id: String,
    runs: &[RunEntry],
    check: impl Fn(&RunEntry, &Diagnostics) -> (bool, String),
) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for e in runs {
        let (ok, msg) = match &e.diagnostics {
            Some(d) if e.converged() => check(e, d),
            Some(d) => {
                let (_, msg) = check(e, d);
                (false, format!("not converged; {msg}"))
            }
            None => (false, "no diagnostics".to_string()),
        };
        pass &= ok;
        parts.push(format!("R={} {}", e.r, msg));
    }
    if parts.is_empty() {
        parts.push("empty schedule".into());
    }
    Verdict::new(id, pass, parts.join("; "))
}

/// Check that only concerns the largest radius of the schedule.
fn terminal(id: String, runs: &[RunEntry], check: impl Fn(&RunEntry, &Diagnostics) -> (bool, String)) -> Verdict {
    match runs.last() {
        None => Verdict::new(id, true, "empty schedule"),
        Some(e) => per_radius(id, std::slice::from_ref(e), check),
    }
}

pub fn scenario_verdicts(spec: &ExperimentSpec, runs: &[RunEntry], cauchy: &[f64]) -> Vec<Verdict> {
    let sc = spec.scenario;
    let id = |s: &str| format!("{}.{s}", sc.name());
    let mut v = Vec::new();

    let conv: Vec<String> = runs
        .iter()
        .map(|e| {
            let steps = e.relax.as_ref().map(|r| r.steps).unwrap_or(0);
            format!("R={} {:?} after {steps} steps", e.r, e.status)
        })
        .collect();
    v.push(Verdict::new(
        id("relax-converged"),
        runs.iter().all(|e| e.converged()),
        if conv.is_empty() { "empty schedule".into() } else { conv.join("; ") },
    ));
    v.push(flow_verdict(id("flow-dissipative"), runs, |r| {
        let rise = r.max_energy_rise();
        (rise <= ENERGY_SLACK, format!("max relative energy rise {rise:.3e}"))
    }));
    v.push(flow_verdict(id("flow-positive"), runs, |r| {
        (r.positivity_violations == 0, format!("{} positivity violations", r.positivity_violations))
    }));
    v.push(per_radius(id("flow-symmetric"), runs, |e, d| {
        let drift = e.relax.as_ref().map(|r| r.max_symmetry_drift).unwrap_or(f64::INFINITY);
        (drift <= DRIFT_TOL * d.max_abs, format!("max drift {drift:.3e}, max|u| {:.3e}", d.max_abs))
    }));

    if sc != Scenario::Kcomp {
        v.push(per_radius(id("barrier"), runs, |_, d| {
            let m = d.barrier_margin.unwrap_or(f64::NEG_INFINITY);
            (m >= -BARRIER_TOL, format!("min (u - model+)/max|model| {m:.3e}"))
        }));
        v.push(per_radius(id("ordering"), runs, |e, d| {
            let m = d.ordering_min.unwrap_or(f64::NEG_INFINITY);
            let during = e.relax.as_ref().map(|r| r.ordering_violations).unwrap_or(0);
            (m >= -ORDERING_TOL && during == 0, format!("min (u - v) on the positive set {m:.3e}, {during} flow violations"))
        }));
    } else {
        v.push(per_radius(id("nondegenerate"), runs, |_, d| {
            (d.nondegeneracy >= NONDEGENERACY, format!("max u_1 / max trace {:.3e}", d.nondegeneracy))
        }));
        v.push(per_radius(id("shift-exact"), runs, |_, d| {
            (d.shift_defect == 0.0, format!("sup |u_(i+1) - u_i(., . - pi)| {:e}", d.shift_defect))
        }));
    }

    v.push(per_radius(id("monotone"), runs, |_, d| {
        let n = d.monotonicity_violations.len();
        let what = d.monotonicity_violations.first().map(|x| format!(" (first: {} at column {})", x.quantity, x.index));
        (n == 0, format!("{n} violations in {}{}", variant_name(d), what.unwrap_or_default()))
    }));

    if sc == Scenario::Cosh {
        v.push(per_radius(id("N-upper-bound"), runs, |_, d| (d.max_n <= 2.0 + 1e-3, format!("max N {:.6}", d.max_n))));
        v.push(per_radius(id("competitor-energy"), runs, |_, d| {
            let b = d.competitor_energy.unwrap_or(f64::NAN);
            (d.energy_full <= b, format!("J {:.6e} vs pi sinh 2R {:.6e}", d.energy_full, b))
        }));
    }

    v.push(terminal(id("limit-N"), runs, |_, d| {
        let ok = d.withheld.is_none() && (d.terminal_n - 1.0).abs() <= LIMIT_TOL;
        let mut msg = format!("terminal N {:.5} in {} (target 1 +- {LIMIT_TOL})", d.terminal_n, variant_name(d));
        if let Some(w) = &d.withheld {
            msg.push_str(&format!("; scenario variant withheld: {w}"));
        }
        (ok, msg)
    }));

    v.push(growth_verdict(id("growth-limit"), runs));

    if sc != Scenario::Kcomp {
        v.push(per_radius(id("doubling"), runs, |_, d| {
            let r = &d.doubling;
            (r.pass(), format!("N in [{:.4}, {:.4}] {}", r.n_min, r.n_max, r.detail))
        }));
        v.push(per_radius(id("phi-bound"), runs, |_, d| match &d.phi_bound {
            Ok(p) => (p.pass, format!("max excess {:.3e}", p.max_excess)),
            Err(e) => (false, e.clone()),
        }));
    }

    if sc == Scenario::Cosh {
        v.push(per_radius(id("pohozaev-constancy"), runs, |_, d| {
            let t = d.pohozaev_tested.relative_deviation();
            let c = d.pohozaev_continuum.relative_deviation();
            (t <= POHOZAEV_TOL, format!("tested form {t:.3e}, continuum quadrature {c:.3e} (relative to the mean)"))
        }));
    } else {
        // Decaying solutions: the combination itself vanishes.
        v.push(per_radius(id("pohozaev-free"), runs, |_, d| {
            let t = d.pohozaev_free_residual;
            (t <= POHOZAEV_TOL, format!("max |P - P(wall)| relative to the section terms {t:.3e}"))
        }));
    }
    v.push(per_radius(id("spectral-columns"), runs, |_, d| match &d.spectral {
        Ok(s) => (s.pass, format!("{} columns checked, {} skipped, worst lhs/rhs {:.6}", s.checked, s.skipped, s.worst_ratio)),
        Err(e) => (false, e.clone()),
    }));

    if sc == Scenario::Exp {
        v.push(terminal(id("left-decay"), runs, |_, d| match d.left_decay {
            Some(x) => (x <= LEFT_DECAY, format!("H(left)/H(0) {x:.3e}")),
            None => (false, "r = 0 is not a grid column".into()),
        }));
        v.push(energy_plateau(id("finite-energy"), runs));
    }
    if sc == Scenario::Cosh {
        let pass = cauchy.len() >= 2 && cauchy.iter().all(|x| x.is_finite()) && cauchy.windows(2).all(|w| w[1] <= w[0]);
        let detail = if cauchy.is_empty() {
            "needs at least three radii".to_string()
        } else {
            cauchy.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
        };
        v.push(Verdict::new(id("cauchy-decay"), pass, detail));
    }
    v
}

fn variant_name(d: &Diagnostics) -> String {
    match d.variant {
        crate::almgren::AlmgrenVariant::Sym { a } => format!("sym({a})"),
        crate::almgren::AlmgrenVariant::Unb { a_surrogate } => format!("unb({a_surrogate})"),
    }
}

fn flow_verdict(id: String, runs: &[RunEntry], check: impl Fn(&RelaxReport) -> (bool, String)) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for e in runs {
        let (ok, msg) = match &e.relax {
            Some(r) => check(r),
            None => (false, "no relaxation report".into()),
        };
        pass &= ok;
        parts.push(format!("R={} {msg}", e.r));
    }
    Verdict::new(id, pass, if parts.is_empty() { "empty schedule".into() } else { parts.join("; ") })
}

fn growth_verdict(id: String, runs: &[RunEntry]) -> Verdict {
    let fits = per_radius(id.clone(), runs, |_, d| match &d.growth {
        Ok(g) => (
            g.plateau_flatness <= GROWTH_FLATNESS && g.limit_estimate > 0.0,
            format!("estimate {:.5e} flatness {:.4}", g.limit_estimate, g.plateau_flatness),
        ),
        Err(e) => (false, e.clone()),
    });
    let estimates: Vec<f64> =
        runs.iter().filter_map(|e| e.diagnostics.as_ref()?.growth.as_ref().ok().map(|g| g.limit_estimate)).collect();
    let (stable, note) = match estimates.last() {
        Some(&last) if estimates.len() >= 2 => {
            let worst = estimates.iter().map(|x| (x / last - 1.0).abs()).fold(0.0_f64, f64::max);
            (worst <= GROWTH_STABILITY, format!("largest deviation from the last estimate {worst:.4}"))
        }
        _ => (true, "single radius, stability not tested".into()),
    };
    Verdict::new(id, fits.pass && stable, format!("{}; {note}", fits.detail))
}

fn energy_plateau(id: String, runs: &[RunEntry]) -> Verdict {
    let vals: Vec<(f64, f64)> =
        runs.iter().filter_map(|e| Some((e.r, e.diagnostics.as_ref()?.energy_to_zero?))).collect();
    let finite = vals.len() == runs.len() && vals.iter().all(|v| v.1.is_finite());
    let steps: Vec<f64> = vals.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect();
    let settling = steps.len() >= 2 && steps.windows(2).all(|w| w[1] < w[0]);
    let listed: Vec<String> = vals.iter().map(|(r, e)| format!("R={r} E(0) {e:.6e}")).collect();
    let mut detail = if listed.is_empty() { "empty schedule".to_string() } else { listed.join("; ") };
    if steps.len() < 2 {
        detail.push_str("; needs at least three radii");
    } else {
        let _ = write!(detail, "; increments {}", steps.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(", "));
    }
    Verdict::new(id, finite && settling, detail)
}

pub fn blowdown_verdicts(result: &crate::error::Result<BlowDownReport>) -> Vec<Verdict> {
    match result {
        Err(e) => {
            let why = e.to_string();
            vec![
                Verdict::new("blowdown.degree", false, format!("fit refused: {why}")),
                Verdict::new("blowdown.misfit-decreasing", false, "no fit"),
                Verdict::new("blowdown.growth-order", false, "no fit"),
            ]
        }
        Ok(r) => {
            let misfits: Vec<String> = r.shifts.iter().map(|s| format!("{:.3e}", s.misfit)).collect();
            let growth: Vec<String> = r.shifts.iter().map(|s| format!("{:.4e}", s.growth_ratio)).collect();
            vec![
                Verdict::new(
                    "blowdown.degree",
                    true,
                    format!("d = {} from terminal N {:.5} ({})", r.d, r.terminal_n, r.case),
                ),
                Verdict::new("blowdown.misfit-decreasing", r.misfit_decreasing, format!("misfits {}", misfits.join(", "))),
                Verdict::new(
                    "blowdown.growth-order",
                    r.growth_bounded,
                    format!("sqrt(H)/e^(d r) at the shifts {}", growth.join(", ")),
                ),
            ]
        }
    }
}

pub fn lmin_verdicts(k: usize, rows: &[GapRow]) -> Vec<Verdict> {
    let top = (k as f64 / 2.0).powi(2);
    let worst = rows.iter().map(|r| r.value - top).fold(f64::NEG_INFINITY, f64::max);
    let band: Vec<f64> = rows.iter().map(|r| r.gap_lambda_quarter).collect();
    let (lo, hi) = band.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    vec![
        Verdict::new("lmin.upper-bound", worst <= 2e-3, format!("max value - (k/2)^2 = {worst:.3e}")),
        Verdict::new(
            "lmin.gap-scaling",
            lo > 0.0 && hi <= 3.0 * lo,
            format!("gap Lambda^(1/4) in [{lo:.4}, {hi:.4}]"),
        ),
        Verdict::new(
            "lmin.converged",
            rows.iter().all(|r| r.converged),
            format!("{} of {} converged", rows.iter().filter(|r| r.converged).count(), rows.len()),
        ),
    ]
}

/// Writes `verdicts.txt` and the manifest, after hashing every artifact.
pub fn emit(out: &Path, manifest: &mut RunManifest) -> Result<()> {
    let mut text = String::new();
    for v in &manifest.verdicts {
        text.push_str(&v.line());
        text.push('\n');
    }
    fs::write(out.join("verdicts.txt"), &text)?;
    let mut files: Vec<_> = manifest.runs.iter().flat_map(|e| e.files.iter().cloned()).collect();
    files.extend(manifest.files.iter().cloned());
    files.sort_by(|a, b| a.path.cmp(&b.path));
    files.dedup();
    manifest.files = files;
    let tmp = out.join("manifest.json.tmp");
    fs::write(&tmp, serde_json::to_vec_pretty(manifest)?)?;
    fs::rename(tmp, out.join("manifest.json"))?;
    Ok(())
}

/// `N(r)`, `H/e^{2r}` and the energy trace of one radius.
pub fn radius_plots(series: &AlmgrenSeries, rep: &RelaxReport) -> Vec<(&'static str, String)> {
    let pts = |f: &dyn Fn(usize) -> f64| -> Vec<(f64, f64)> {
        (0..series.len()).map(|j| (series.r[j], f(j))).filter(|p| p.1.is_finite()).collect()
    };
    let n = pts(&|j| series.n[j]);
    let h = pts(&|j| series.h[j] * (-2.0 * series.r[j]).exp());
    let e: Vec<(f64, f64)> = rep.energy_trace.iter().enumerate().map(|(i, p)| (i as f64, p.1)).collect();
    vec![
        ("N.svg", line_plot("N(r)", "r", "N", &n)),
        ("H_e2r.svg", line_plot("H(r) / e^(2r)", "r", "H e^(-2r)", &h)),
        ("energy.svg", line_plot("energy along the flow", "accepted step", "J", &e)),
    ]
}

/// Minimal single-series SVG line plot with axis extents as labels.
pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, pts: &[(f64, f64)]) -> String {
    let (w, h, pad) = (640.0, 400.0, 60.0);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#, w / 2.0, esc(title));
    if pts.is_empty() {
        s.push_str("</svg>\n");
        return s;
    }
    let fold = |f: fn(&(f64, f64)) -> f64| {
        pts.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)))
    };
    let (x0, x1) = fold(|p| p.0);
    let (y0, y1) = fold(|p| p.1);
    let sx = if x1 > x0 { (w - 2.0 * pad) / (x1 - x0) } else { 0.0 };
    let sy = if y1 > y0 { (h - 2.0 * pad) / (y1 - y0) } else { 0.0 };
    let _ = writeln!(
        s,
        r#"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    let poly: Vec<String> =
        pts.iter().map(|(x, y)| format!("{:.2},{:.2}", pad + (x - x0) * sx, h - pad - (y - y0) * sy)).collect();
    let _ = writeln!(s, r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#, poly.join(" "));
    let _ = writeln!(s, r#"<text x="{pad}" y="{}" font-size="11">{x0:.4}</text>"#, h - pad + 16.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{x1:.4}</text>"#, w - pad, h - pad + 16.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{y0:.5e}</text>"#, pad - 4.0, h - pad);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{y1:.5e}</text>"#, pad - 4.0, pad + 10.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#, w / 2.0, h - 12.0, esc(xlabel));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        esc(ylabel)
    );
    s.push_str("</svg>\n");
    s
}

fn esc(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
