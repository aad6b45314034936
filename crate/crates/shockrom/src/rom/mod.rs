//! Reduced-order model pipelines.

mod extract;
mod lagrangian;
mod layout;
mod physics;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{EulerianField, MovingGrid};

pub use extract::{analytic_riemann_observables, ExtractorSettings, ObservableExtractor};
pub use lagrangian::{lagrangian_dmd, lagrangian_pod};
pub use layout::{
    assemble_observables, split_branch, BranchSlot, Closure, ObservableLayout, ShockComponents, ShockSlot,
};
pub use physics::{physics_aware_dmd, DecodeSettings, TrainingSet};

/// `‖c − r‖₂ / ‖r‖₂`, or the absolute norm when the reference vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct L2Error {
    pub value: f64,
    pub absolute: bool,
}

pub fn relative_l2_error(candidate: &EulerianField, reference: &EulerianField) -> Result<L2Error> {
    if candidate.grid != reference.grid {
        return Err(Error::DegenerateData("fields live on different grids".into()));
    }
    let diff = candidate.values.iter().zip(&reference.values).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm = reference.values.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(if norm > 0.0 {
        L2Error { value: diff / norm, absolute: false }
    } else {
        L2Error { value: diff, absolute: true }
    })
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RomDiagnostics {
    pub rank: Option<usize>,
    pub training_window: (f64, f64),
    /// Relative L2 error per prediction time, filled by [`RomResult::score`].
    pub errors: Vec<f64>,
    pub eigenvalues: Vec<[f64; 2]>,
    /// Non-monotone node pairs per time for moving-grid models.
    pub grid_inversions: Vec<usize>,
    /// Shock position per prediction time, when a shock is present.
    pub shock_positions: Vec<Option<f64>>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RomResult {
    pub times: Vec<f64>,
    pub fields: Vec<EulerianField>,
    /// Predicted node positions, for moving-grid models.
    pub moving: Vec<MovingGrid>,
    pub diagnostics: RomDiagnostics,
}

impl RomResult {
    pub fn score(&mut self, references: &[EulerianField]) -> Result<()> {
        if references.len() != self.fields.len() {
            return Err(Error::DegenerateData("reference count differs from prediction count".into()));
        }
        self.diagnostics.errors = self
            .fields
            .iter()
            .zip(references)
            .map(|(c, r)| relative_l2_error(c, r).map(|e| e.value))
            .collect::<Result<_>>()?;
        Ok(())
    }
}
