//! Harmonic comparison models, their split pairs and closed-form oracles.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::almgren::AlmgrenVariant;
use crate::error::{Error, Result};
use crate::grid::{CylinderGrid, Field, StateK, XbcKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum HarmonicModel {
    /// `cosh x sin y`
    Phi,
    /// `e^x sin y`
    Gamma,
    /// `2 e^{-R} cosh(x+R) sin y`
    PhiR { r: f64 },
    /// `e^{dx} (c1 cos dy + c2 sin dy)`
    Psi { d: u32, c1: f64, c2: f64 },
    /// `lambda * base(lambda x, lambda y)`
    Scaled { base: Box<HarmonicModel>, lambda: f64 },
}

/// Closed-form Almgren data of a split pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticDiagnostics {
    pub h: f64,
    pub e: f64,
    pub n: f64,
}

impl HarmonicModel {
    pub fn scaled(base: HarmonicModel, lambda: f64) -> Self {
        HarmonicModel::Scaled { base: Box::new(base), lambda }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            HarmonicModel::Phi | HarmonicModel::Gamma => Ok(()),
            HarmonicModel::PhiR { r } if r.is_finite() && *r > 0.0 => Ok(()),
            HarmonicModel::PhiR { r } => Err(Error::Model(format!("PhiR needs R > 0, got {r}"))),
            HarmonicModel::Psi { d, c1, c2 } => {
                if *d == 0 {
                    Err(Error::Model("Psi needs d >= 1".into()))
                } else if !(c1.is_finite() && c2.is_finite()) {
                    Err(Error::Model("Psi coefficients must be finite".into()))
                } else {
                    Ok(())
                }
            }
            HarmonicModel::Scaled { base, lambda } => {
                if !(lambda.is_finite() && *lambda > 0.0) {
                    return Err(Error::Model(format!("scale must be > 0, got {lambda}")));
                }
                base.validate()
            }
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            HarmonicModel::Phi => x.cosh() * y.sin(),
            HarmonicModel::Gamma => x.exp() * y.sin(),
            HarmonicModel::PhiR { r } => 2.0 * (-r).exp() * (x + r).cosh() * y.sin(),
            HarmonicModel::Psi { d, c1, c2 } => {
                let d = *d as f64;
                (d * x).exp() * (c1 * (d * y).cos() + c2 * (d * y).sin())
            }
            HarmonicModel::Scaled { base, lambda } => lambda * base.eval(lambda * x, lambda * y),
        }
    }

    /// Product of all scale factors; the model is `2 pi / scale` periodic in y.
    pub fn total_scale(&self) -> f64 {
        match self {
            HarmonicModel::Scaled { base, lambda } => lambda * base.total_scale(),
            _ => 1.0,
        }
    }

    /// Models of the form `f(x) sin(lambda y)`, whose nodal cells have width `pi / lambda`.
    pub fn is_sine_type(&self) -> bool {
        match self {
            HarmonicModel::Phi | HarmonicModel::Gamma | HarmonicModel::PhiR { .. } => true,
            HarmonicModel::Psi { .. } => false,
            HarmonicModel::Scaled { base, .. } => base.is_sine_type(),
        }
    }

    fn base_and_scale(&self) -> (&HarmonicModel, f64) {
        match self {
            HarmonicModel::Scaled { base, lambda } => {
                let (b, s) = base.base_and_scale();
                (b, s * lambda)
            }
            m => (m, 1.0),
        }
    }

    /// Closed-form H, E, N of the split pair.
    pub fn analytic_diagnostics(&self, r: f64, variant: AlmgrenVariant) -> Result<AnalyticDiagnostics> {
        self.validate()?;
        let (h, e) = self.h_and_e(r, variant)?;
        Ok(AnalyticDiagnostics { h, e, n: e / h })
    }

    fn h_and_e(&self, r: f64, variant: AlmgrenVariant) -> Result<(f64, f64)> {
        let mismatch = || Err(Error::Model(format!("variant {variant:?} does not fit model {self}")));
        match (self, variant) {
            (HarmonicModel::Phi, AlmgrenVariant::Sym { a }) if a.abs() <= 1e-12 => {
                Ok((PI * r.cosh().powi(2), PI * r.sinh() * r.cosh()))
            }
            (HarmonicModel::PhiR { r: big }, AlmgrenVariant::Sym { a }) if (a + big).abs() <= 1e-12 * big.max(1.0) => {
                let c = 4.0 * (-2.0 * big).exp() * PI;
                let s = r + big;
                Ok((c * s.cosh().powi(2), c * s.sinh() * s.cosh()))
            }
            (HarmonicModel::Gamma, AlmgrenVariant::Unb { .. }) => {
                let v = PI * (2.0 * r).exp();
                Ok((v, v))
            }
            (HarmonicModel::Psi { d, c1, c2 }, AlmgrenVariant::Unb { .. }) => {
                let d = *d as f64;
                let h = PI * (c1 * c1 + c2 * c2) * (2.0 * d * r).exp();
                Ok((h, d * h))
            }
            (HarmonicModel::Scaled { base, lambda }, v) => {
                let inner = match v {
                    AlmgrenVariant::Sym { a } => AlmgrenVariant::Sym { a: a * lambda },
                    AlmgrenVariant::Unb { a_surrogate } => AlmgrenVariant::Unb { a_surrogate: a_surrogate * lambda },
                };
                let (h, e) = base.h_and_e(lambda * r, inner)?;
                Ok((lambda * h, lambda * lambda * e))
            }
            _ => mismatch(),
        }
    }

    /// `int_{Sigma_r} |grad model|^2 - 2 (d_x model)^2` in closed form.
    pub fn pohozaev_oracle(&self, r: f64) -> Result<f64> {
        self.validate()?;
        Ok(match self {
            HarmonicModel::Phi => PI,
            HarmonicModel::Gamma | HarmonicModel::Psi { .. } => 0.0,
            HarmonicModel::PhiR { r: big } => 4.0 * (-2.0 * big).exp() * PI,
            HarmonicModel::Scaled { base, lambda } => lambda.powi(3) * base.pohozaev_oracle(lambda * r)?,
        })
    }

    /// Split the model into `grid.k` nonnegative components.
    ///
    /// For two components this is `(max(model,0), max(-model,0))`. For k > 2
    /// only sine-type models are allowed: component i keeps `|model|` on the
    /// i-th nodal cell `[i pi, (i+1) pi)` (scaled) and vanishes elsewhere.
    pub fn sample_split(&self, grid: &CylinderGrid, kind: XbcKind) -> Result<StateK> {
        self.validate()?;
        let k = grid.k;
        let scale = self.total_scale();
        let want = k as f64 * PI / scale;
        if (grid.period - want).abs() > 1e-12 * want {
            return Err(Error::Model(format!(
                "grid period {} does not match k pi / lambda = {want}",
                grid.period
            )));
        }
        if !self.is_sine_type() {
            if k != 2 {
                return Err(Error::Model(format!("cannot split {self} into {k} components")));
            }
            let u = Field::from_fn(*grid, kind, |x, y| self.eval(x, y).max(0.0))?;
            let v = Field::from_fn(*grid, kind, |x, y| (-self.eval(x, y)).max(0.0))?;
            return StateK::new(vec![u, v], 0.0);
        }
        // Sine-type: evaluate sin on nodes by folding to the first quarter so
        // that zeros and reflection symmetries hold exactly.
        let cell = grid.ny / k;
        let dy = PI / cell as f64;
        let node_sin = |m: usize| -> f64 {
            let q = m % (2 * cell);
            let (r, sign) = if q < cell { (q.min(cell - q), 1.0) } else { ((q - cell).min(2 * cell - q), -1.0) };
            sign * (r as f64 * dy).sin()
        };
        let comps = (0..k)
            .map(|i| {
                let mut v = Vec::with_capacity(grid.len());
                for j in 0..=grid.nx {
                    let p = self.sine_profile(grid.x(j));
                    for m in 0..grid.ny {
                        let s = p * node_sin(m);
                        let val = if k == 2 {
                            if i == 0 { s.max(0.0) } else { (-s).max(0.0) }
                        } else if m / cell == i {
                            s.abs()
                        } else {
                            0.0
                        };
                        v.push(val);
                    }
                }
                Field::new(*grid, kind, v)
            })
            .collect::<Result<Vec<_>>>()?;
        StateK::new(comps, 0.0)
    }

    /// `f(x)` for sine-type models `f(x) sin(scale y)`.
    fn sine_profile(&self, x: f64) -> f64 {
        match self {
            HarmonicModel::Phi => x.cosh(),
            HarmonicModel::Gamma => x.exp(),
            HarmonicModel::PhiR { r } => 2.0 * (-r).exp() * (x + r).cosh(),
            HarmonicModel::Scaled { base, lambda } => lambda * base.sine_profile(lambda * x),
            HarmonicModel::Psi { .. } => f64::NAN,
        }
    }

    /// Point of x-evenness of the model, if any.
    pub fn even_axis(&self) -> Option<f64> {
        let (base, s) = self.base_and_scale();
        match base {
            HarmonicModel::Phi => Some(0.0),
            HarmonicModel::PhiR { r } => Some(-r / s),
            _ => None,
        }
    }
}

impl fmt::Display for HarmonicModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarmonicModel::Phi => write!(f, "phi"),
            HarmonicModel::Gamma => write!(f, "gamma"),
            HarmonicModel::PhiR { r } => write!(f, "phiR:R={r}"),
            HarmonicModel::Psi { d, c1, c2 } => write!(f, "psi:d={d},c1={c1},c2={c2}"),
            HarmonicModel::Scaled { base, lambda } => write!(f, "scaled:{base},lambda={lambda}"),
        }
    }
}

fn parse_float(s: &str, what: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::Model(format!("cannot parse {what} from '{s}'")))?;
    if !v.is_finite() {
        return Err(Error::Model(format!("{what} must be finite")));
    }
    Ok(v)
}

fn parse_params<'a>(body: &'a str, keys: &[&str]) -> Result<Vec<&'a str>> {
    let parts: Vec<&str> = body.split(',').collect();
    if parts.len() != keys.len() {
        return Err(Error::Model(format!("expected parameters {keys:?}, got '{body}'")));
    }
    parts
        .iter()
        .zip(keys)
        .map(|(p, k)| {
            let (name, val) = p
                .split_once('=')
                .ok_or_else(|| Error::Model(format!("expected {k}=<value>, got '{p}'")))?;
            if name.trim() != *k {
                return Err(Error::Model(format!("expected key {k}, got '{name}'")));
            }
            Ok(val)
        })
        .collect()
}

impl FromStr for HarmonicModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let model = if s == "phi" {
            HarmonicModel::Phi
        } else if s == "gamma" {
            HarmonicModel::Gamma
        } else if let Some(body) = s.strip_prefix("phiR:") {
            let p = parse_params(body, &["R"])?;
            HarmonicModel::PhiR { r: parse_float(p[0], "R")? }
        } else if let Some(body) = s.strip_prefix("psi:") {
            let p = parse_params(body, &["d", "c1", "c2"])?;
            let d: u32 = p[0]
                .trim()
                .parse()
                .map_err(|_| Error::Model(format!("d must be a positive integer, got '{}'", p[0])))?;
            HarmonicModel::Psi { d, c1: parse_float(p[1], "c1")?, c2: parse_float(p[2], "c2")? }
        } else if let Some(body) = s.strip_prefix("scaled:") {
            let (base, lam) = body
                .rsplit_once(",lambda=")
                .ok_or_else(|| Error::Model(format!("scaled model needs ',lambda=', got '{s}'")))?;
            HarmonicModel::scaled(base.parse()?, parse_float(lam, "lambda")?)
        } else {
            return Err(Error::Model(format!("unknown model '{s}'")));
        };
        model.validate()?;
        Ok(model)
    }
}
