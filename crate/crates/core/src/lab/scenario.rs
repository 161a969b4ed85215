//! Geometry of the cosh, exp and kcomp scenarios at one R.

use serde::{Deserialize, Serialize};

use crate::almgren::AlmgrenVariant;
use crate::error::{Error, Result};
use crate::grid::{CylinderGrid, StateK, XbcKind};
use crate::models::HarmonicModel;
use crate::symmetry::SymmetryGroup;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Cosh,
    Exp,
    Kcomp,
    Blowdown,
    Lmin,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Cosh => "cosh",
            Scenario::Exp => "exp",
            Scenario::Kcomp => "kcomp",
            Scenario::Blowdown => "blowdown",
            Scenario::Lmin => "lmin",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosh" => Ok(Scenario::Cosh),
            "exp" => Ok(Scenario::Exp),
            "kcomp" => Ok(Scenario::Kcomp),
            "blowdown" => Ok(Scenario::Blowdown),
            "lmin" => Ok(Scenario::Lmin),
            _ => Err(Error::Config(format!("unknown scenario '{s}'"))),
        }
    }
}

/// Everything needed to relax and audit one radius.
///
/// Both relaxing scenarios are computed on the half cylinder next to the
/// reflection axis, with a Neumann wall there: cosh on `(0, R)` standing for
/// `(-R, R)`, exp and kcomp on `(-R, R)` standing for `(-3R, R)`.
#[derive(Clone, Debug)]
pub struct ScenarioSetup {
    pub scenario: Scenario,
    pub r: f64,
    pub grid: CylinderGrid,
    pub model: HarmonicModel,
    /// Split model sampled on the grid: initial data, traces and barriers.
    pub initial: StateK,
    pub group: SymmetryGroup,
    /// Variant the scenario's diagnostics are stated in.
    pub variant: AlmgrenVariant,
    /// Sym variant anchored at the Neumann wall; always admissible.
    pub axis_variant: AlmgrenVariant,
    /// Ratio of the full cylinder to the computed half.
    pub reflection_factor: f64,
}

pub fn setup(scenario: Scenario, k: usize, r: f64, density_x: f64, ny: usize) -> Result<ScenarioSetup> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Config(format!("R must be > 0, got {r}")));
    }
    if !(density_x > 0.0 && density_x.is_finite()) {
        return Err(Error::Config(format!("density-x must be > 0, got {density_x}")));
    }
    let (a, model, variant) = match scenario {
        Scenario::Cosh => {
            if k != 2 {
                return Err(Error::Config(format!("scenario cosh has k = 2, got {k}")));
            }
            (0.0, HarmonicModel::Phi, AlmgrenVariant::Sym { a: 0.0 })
        }
        Scenario::Exp => {
            if k != 2 {
                return Err(Error::Config(format!("scenario exp has k = 2, got {k}")));
            }
            (-r, HarmonicModel::PhiR { r }, AlmgrenVariant::Unb { a_surrogate: -r })
        }
        Scenario::Kcomp => {
            if k < 3 {
                return Err(Error::Config(format!("scenario kcomp needs k >= 3, got {k}")));
            }
            (-r, HarmonicModel::PhiR { r }, AlmgrenVariant::Unb { a_surrogate: -r })
        }
        Scenario::Blowdown | Scenario::Lmin => {
            return Err(Error::Config(format!("scenario {} does not relax a state", scenario.name())))
        }
    };
    let length = r - a;
    let nx_f = density_x * length;
    let nx = nx_f.round() as usize;
    if (nx_f - nx as f64).abs() > 1e-9 * nx_f.max(1.0) {
        return Err(Error::Config(format!(
            "density-x {density_x} does not give an integer column count on a length {length} cylinder"
        )));
    }
    let grid = CylinderGrid::new(a, r, k, nx, ny).map_err(|e| Error::Config(e.to_string()))?;
    let initial = model.sample_split(&grid, XbcKind::NeumannLeft)?;
    check_traces(&initial, &model)?;
    Ok(ScenarioSetup {
        scenario,
        r,
        grid,
        group: SymmetryGroup::shift_reflect(&grid),
        model,
        initial,
        variant,
        axis_variant: AlmgrenVariant::Sym { a },
        reflection_factor: 2.0,
    })
}

/// The Dirichlet traces must be the split model at x = R.
fn check_traces(state: &StateK, model: &HarmonicModel) -> Result<()> {
    let g = state.grid();
    let scale = model.eval(g.b, 0.5 * std::f64::consts::PI).abs().max(1.0);
    for c in &state.components {
        for m in 0..g.ny {
            let got = c.at(g.nx, m);
            let want_abs = model.eval(g.b, g.y(m)).abs();
            if got < 0.0 || (got > 0.0 && (got - want_abs).abs() > 1e-12 * scale) {
                return Err(Error::Model(format!("trace at y = {} is {got}, model gives {want_abs}", g.y(m))));
            }
        }
    }
    Ok(())
}

/// Mask of nodes where the first split component is positive.
pub fn positive_set(setup: &ScenarioSetup) -> Vec<bool> {
    setup.initial.components[0].values().iter().map(|&v| v > 0.0).collect()
}
