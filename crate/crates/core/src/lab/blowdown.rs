//! Shift-and-normalize family of a saved two-component state and its fit to
//! `Psi = e^{dx} (C1 cos dy + C2 sin dy)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::almgren::{compute_series, AlmgrenVariant};
use crate::error::{Error, Result};
use crate::grid::{column_masses, StateK, XbcKind};
use crate::sum::Acc;

/// Half-width of the compact window, in shifted coordinates.
pub const WINDOW: f64 = 1.0;
/// Largest admissible distance of the terminal N from an integer.
pub const DEGREE_TOL: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ShiftFit {
    pub shift: f64,
    /// Node the shift was snapped to.
    pub x: f64,
    pub h: f64,
    pub c1: f64,
    pub c2: f64,
    /// `sup |u_hat - Psi^+|, |v_hat - Psi^-|` over `[-1, 1] x S`.
    pub misfit: f64,
    /// `sqrt(H(x)) / e^{d x}`.
    pub growth_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BlowDownReport {
    /// `decay` (unb series from the left end) or `neumann-wall` (sym series).
    pub case: String,
    pub variant: AlmgrenVariant,
    pub terminal_n: f64,
    pub d: u32,
    pub shifts: Vec<ShiftFit>,
    pub misfit_decreasing: bool,
    pub growth_bounded: bool,
}

impl BlowDownReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("shift,x,H,C1,C2,misfit,growthRatio\n");
        for f in &self.shifts {
            s.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                f.shift, f.x, f.h, f.c1, f.c2, f.misfit, f.growth_ratio
            ));
        }
        s
    }
}

/// Fits the blow-down family of `state` at the given increasing shifts.
///
/// `d` is the integer nearest to N at the last shift; the fit is refused when
/// that N is more than [`DEGREE_TOL`] away from a positive integer.
pub fn blow_down(state: &StateK, shifts: &[f64], beta: f64) -> Result<BlowDownReport> {
    if state.ncomp() != 2 {
        return Err(Error::Input(format!("blow-down needs two components, got {}", state.ncomp())));
    }
    if shifts.is_empty() || shifts.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Input("shifts must be a nonempty increasing list".into()));
    }
    let g = *state.grid();
    let (variant, case) = match state.kind() {
        XbcKind::NeumannLeft => (AlmgrenVariant::Sym { a: g.a }, "neumann-wall"),
        XbcKind::Dirichlet => (AlmgrenVariant::Unb { a_surrogate: g.a }, "decay"),
    };
    let series = compute_series(state, variant, beta)?;
    let (alo, ahi) = series.audited;
    let hx = g.hx();
    let cols: Vec<usize> = shifts
        .iter()
        .map(|&s| {
            let j = series.column_near(s);
            let inside = j >= alo && j <= ahi && s - WINDOW >= g.a - 1e-9 * hx && s + WINDOW <= g.b + 1e-9 * hx;
            if inside {
                Ok(j)
            } else {
                Err(Error::Input(format!("shift {s} leaves the trusted window")))
            }
        })
        .collect::<Result<_>>()?;
    let terminal_n = series.n[*cols.last().expect("nonempty")];
    let d_f = terminal_n.round();
    if !(d_f >= 1.0) || (terminal_n - d_f).abs() > DEGREE_TOL {
        return Err(Error::Input(format!("terminal N = {terminal_n} is not within {DEGREE_TOL} of a positive integer")));
    }
    let d = d_f as u32;
    // The degree-d pair must be periodic on the section.
    let turns = d as f64 * g.period / (2.0 * PI);
    if (turns - turns.round()).abs() > 1e-9 || turns.round() < 1.0 {
        return Err(Error::Input(format!("degree {d} is not periodic with period {}", g.period)));
    }
    let h = column_masses(state);
    let (u, v) = (&state.components[0], &state.components[1]);
    let hy = g.hy();
    let half = (WINDOW / hx + 1e-9).floor() as usize;
    let df = d as f64;
    let mut fits = Vec::with_capacity(cols.len());
    for (&shift, &j0) in shifts.iter().zip(&cols) {
        let scale = 1.0 / h[j0].sqrt();
        let x0 = g.x(j0);
        let (mut a1, mut a2) = (Acc::new(), Acc::new());
        let (cu, cv) = (u.column(j0), v.column(j0));
        for m in 0..g.ny {
            let w = (cu[m] - cv[m]) * scale;
            let y = g.y(m);
            a1.add(w * (df * y).cos());
            a2.add(w * (df * y).sin());
        }
        let norm = 2.0 * hy / g.period;
        let (c1, c2) = (norm * a1.value(), norm * a2.value());
        let mut misfit = 0.0_f64;
        for j in j0.saturating_sub(half)..=(j0 + half).min(g.nx) {
            let e = (df * (g.x(j) - x0)).exp();
            let (uj, vj) = (u.column(j), v.column(j));
            for m in 0..g.ny {
                let y = g.y(m);
                let psi = e * (c1 * (df * y).cos() + c2 * (df * y).sin());
                misfit = misfit.max((uj[m] * scale - psi.max(0.0)).abs());
                misfit = misfit.max((vj[m] * scale - (-psi).max(0.0)).abs());
            }
        }
        fits.push(ShiftFit {
            shift,
            x: x0,
            h: h[j0],
            c1,
            c2,
            misfit,
            growth_ratio: h[j0].sqrt() / (df * x0).exp(),
        });
    }
    let misfit_decreasing = fits.windows(2).all(|w| w[1].misfit < w[0].misfit);
    let growth_bounded = fits.windows(2).all(|w| w[1].growth_ratio <= w[0].growth_ratio * (1.0 + 1e-9));
    Ok(BlowDownReport { case: case.into(), variant, terminal_n, d, shifts: fits, misfit_decreasing, growth_bounded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::CylinderGrid;
    use crate::models::HarmonicModel;

    #[test]
    fn psi_is_a_fixed_point() {
        let g = CylinderGrid::new(-4.0, 1.0, 2, 320, 64).unwrap();
        let psi = HarmonicModel::Psi { d: 2, c1: 0.0, c2: 1.0 };
        let s = psi.sample_split(&g, XbcKind::Dirichlet).unwrap();
        let r = blow_down(&s, &[-2.0, -1.0, 0.0], 1.0).unwrap();
        assert_eq!(r.d, 2);
        for f in &r.shifts {
            assert!(f.misfit <= 1e-12, "misfit {}", f.misfit);
            assert!(f.c1.abs() <= 1e-13);
            assert!((f.c2 - 1.0 / PI.sqrt()).abs() <= 1e-13);
        }
    }

    #[test]
    fn refuses_non_integer_degree() {
        let g = CylinderGrid::new(0.0, 3.0, 2, 96, 32).unwrap();
        let psi = HarmonicModel::Psi { d: 1, c1: 0.0, c2: 1.0 };
        let mut s = psi.sample_split(&g, XbcKind::Dirichlet).unwrap();
        // A Dirichlet state starting at 0 fails the decay precondition.
        assert!(blow_down(&s, &[1.5], 1.0).is_err());
        s = HarmonicModel::Phi.sample_split(&g, XbcKind::NeumannLeft).unwrap();
        // N(1) = tanh 1 = 0.76 is too far from 1.
        assert!(blow_down(&s, &[1.0], 1.0).is_err());
    }
}
