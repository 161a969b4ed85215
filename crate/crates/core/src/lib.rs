//! Gradient-flow construction of entire segregated solutions on periodic
//! cylinders, with the diagnostics used to audit them.

pub mod almgren;
pub mod error;
pub mod grid;
pub mod lab;
pub mod linsolve;
pub mod models;
pub mod relax;
pub mod snapshot;
pub mod spectra;
pub mod sum;
pub mod symmetry;

pub use almgren::{AlmgrenSeries, AlmgrenVariant, Window};
pub use error::{Error, Result};
pub use grid::{CylinderGrid, Field, StateK, XBoundary, XbcKind};
pub use models::HarmonicModel;
pub use relax::{FlowConfig, RelaxReport, Scheme};
pub use symmetry::{Generator, SymmetryGroup};
