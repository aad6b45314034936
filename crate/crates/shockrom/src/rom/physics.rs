use crate::dmd::{fit, DmdModel, SnapshotMatrix};
use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::grid::Grid1D;
use crate::hodograph::{assemble_solution, HodographProfile, ShockState};

use super::layout::{Closure, ObservableLayout};
use super::{RomDiagnostics, RomResult};

/// Observable snapshots together with the layout that produced them.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub layout: ObservableLayout,
    pub snapshots: SnapshotMatrix,
}

#[derive(Debug, Clone, Copy)]
pub struct DecodeSettings {
    pub eps: f64,
    /// Largest ordering violation, in cells, repaired by sorting a decoded slot.
    pub reorder_cells: f64,
}

impl Default for DecodeSettings {
    fn default() -> Self {
        Self { eps: crate::dmd::DEFAULT_EPS, reorder_cells: 1.0 }
    }
}

/// Fit DMD on hodograph observables and rebuild fields at `times` on `grid`.
pub fn physics_aware_dmd(
    training: &TrainingSet,
    model: &FluxModel,
    grid: Grid1D,
    times: &[f64],
    settings: DecodeSettings,
) -> Result<RomResult> {
    let layout = &training.layout;
    let snaps = &training.snapshots;
    let clock = std::time::Instant::now();
    let dmd = fit(snaps, settings.eps)?;
    log::debug!("DMD fit on {} x {} snapshots took {:?}", snaps.rows(), snaps.len(), clock.elapsed());
    let t_train = snaps.time(snaps.len() - 1);
    let mut tracker = match layout.shock_slots.first() {
        Some(slot) if slot.closure == Closure::Tracked => {
            Some(Tracker::new(&dmd, layout, model, snaps, slot.onset.t_star)?)
        }
        _ => None,
    };

    let mut fields = Vec::with_capacity(times.len());
    let mut shock_positions = Vec::with_capacity(times.len());
    let mut notes = Vec::new();
    for &t in times {
        let g = dmd.predict_at_time(t)?;
        let mut profile = layout.profile(&g, t);
        let shock = match layout.shock_slots.first() {
            None => None,
            Some(slot) if t < slot.onset.t_star => None,
            Some(_) => match tracker.as_mut() {
                Some(tr) if t > t_train => Some(tr.advance_to(t)?),
                _ => layout.shock(&g, t),
            },
        };
        if shock.is_none() {
            let repaired = reorder_slots(layout, &mut profile, settings.reorder_cells * grid.dx())?;
            if repaired > 0 {
                notes.push(format!("t = {t}: re-sorted {repaired} slot entries"));
            }
        }
        shock_positions.push(shock.map(|s| s.x_star));
        let shocks: Vec<ShockState> = shock.into_iter().collect();
        fields.push(assemble_solution(&profile, &shocks, grid)?);
    }
    let diagnostics = RomDiagnostics {
        rank: Some(dmd.r),
        training_window: (snaps.t0, t_train),
        eigenvalues: dmd.eigenvalues.iter().map(|l| [l.re, l.im]).collect(),
        shock_positions,
        notes,
        ..Default::default()
    };
    Ok(RomResult { times: times.to_vec(), fields, moving: Vec::new(), diagnostics })
}

/// Sort slot entries whose ordering is violated by at most `tol`; larger violations fail.
fn reorder_slots(layout: &ObservableLayout, profile: &mut HodographProfile, tol: f64) -> Result<usize> {
    let mut repaired = 0;
    for (i, (slot, piece)) in layout.branch_slots.iter().zip(profile.pieces.iter_mut()).enumerate() {
        // pieces are in spatial order, so x must increase along them
        let mut worst = 0.0f64;
        for w in piece.x.windows(2) {
            if w[1] < w[0] {
                worst = worst.max(w[0] - w[1]);
                repaired += 1;
            }
        }
        if worst > tol {
            return Err(Error::Reconstruction {
                slot: i,
                t: profile.t,
                reason: format!("{:?} slot overturned by {worst:.3e}", slot.direction),
            });
        }
        if worst > 0.0 {
            piece.x.sort_by(f64::total_cmp);
        }
    }
    Ok(repaired)
}

/// Shock position integrated with RK4 at the snapshot cadence; the limits are the first
/// and last crossings of the forecast curve at the current position.
struct Tracker<'a> {
    dmd: &'a DmdModel,
    layout: &'a ObservableLayout,
    model: FluxModel,
    dt: f64,
    state: ShockState,
}

impl<'a> Tracker<'a> {
    fn new(
        dmd: &'a DmdModel,
        layout: &'a ObservableLayout,
        model: &FluxModel,
        snaps: &SnapshotMatrix,
        t_star: f64,
    ) -> Result<Self> {
        let last = snaps.len() - 1;
        let t_train = snaps.time(last);
        let state = if t_train >= t_star {
            layout
                .shock(snaps.column(last), t_train)
                .ok_or_else(|| Error::ObservableAssembly("tracked closure needs a shock slot".into()))?
        } else {
            layout
                .virtual_shock(model, t_star)
                .ok_or_else(|| Error::ObservableAssembly("tracked closure needs a shock slot".into()))?
        };
        log::debug!("tracking from t = {}: x = {}, limits ({}, {})", state.t, state.x_star, state.u1, state.u2);
        Ok(Self { dmd, layout, model: *model, dt: snaps.dt, state })
    }

    fn speed(&self, x: f64, t: f64) -> Result<(f64, f64, f64)> {
        let g = self.dmd.predict_at_time(t)?;
        let (u1, u2) = self.layout.profile(&g, t).limits_at(x);
        Ok((self.model.shock_speed(u1, u2), u1, u2))
    }

    fn advance_to(&mut self, t_end: f64) -> Result<ShockState> {
        let mut s = self.state;
        while s.t < t_end - 1e-12 * t_end.abs().max(1.0) {
            let h = self.dt.min(t_end - s.t);
            let (k1, ..) = self.speed(s.x_star, s.t)?;
            let (k2, ..) = self.speed(s.x_star + 0.5 * h * k1, s.t + 0.5 * h)?;
            let (k3, ..) = self.speed(s.x_star + 0.5 * h * k2, s.t + 0.5 * h)?;
            let (k4, ..) = self.speed(s.x_star + h * k3, s.t + h)?;
            s.x_star += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            s.t += h;
        }
        let (speed, u1, u2) = self.speed(s.x_star, s.t)?;
        s.u1 = u1;
        s.u2 = u2;
        log::debug!("tracked shock at t = {}: x = {}, limits ({u1}, {u2}), speed {speed}", s.t, s.x_star);
        self.state = s;
        Ok(s)
    }
}
