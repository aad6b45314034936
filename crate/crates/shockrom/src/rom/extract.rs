use crate::dmd::SnapshotMatrix;
use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::grid::{interp_clamped, EulerianField};
use crate::hodograph::{monotone_pieces, Direction, MonotoneBranch, RawPiece, ShockState};

use super::layout::{assemble_observables, ObservableLayout};

/// Observables of regularized Riemann data at `t0 + n dt`: every level moves with its own
/// speed and the shock, if any, moves along `x0 + s t`.
pub fn analytic_riemann_observables(
    initial: &[MonotoneBranch],
    layout: &ObservableLayout,
    model: &FluxModel,
    shock_line: Option<(f64, f64)>,
    t0: f64,
    dt: f64,
    snapshots: usize,
) -> Result<SnapshotMatrix> {
    let columns = (0..snapshots)
        .map(|n| {
            let t = t0 + n as f64 * dt;
            let branches: Vec<MonotoneBranch> = initial
                .iter()
                .map(|b| {
                    let mut e = b.clone();
                    for (k, x) in e.x_of_u.iter_mut().enumerate() {
                        *x += t * model.speed(b.u_at(k));
                    }
                    e.t = t;
                    e
                })
                .collect();
            let shocks: Vec<ShockState> = match (layout.shock(&vec![0.0; layout.total], t), shock_line) {
                (Some(mut s), Some((x0, speed))) => {
                    s.x_star = x0 + speed * t;
                    vec![s]
                }
                (None, None) => Vec::new(),
                _ => return Err(Error::ObservableAssembly("shock line does not match the layout".into())),
            };
            assemble_observables(&branches, &shocks, layout)
        })
        .collect::<Result<Vec<_>>>()?;
    SnapshotMatrix::new(columns, dt, t0)
}

#[derive(Debug, Clone, Copy)]
pub struct ExtractorSettings {
    /// Fraction of the current value range near each extremum that is not observed.
    pub eta: f64,
    /// Cells next to the domain ends that are not observed.
    pub margin_cells: f64,
    /// Half-width, in cells, of the band around a shock that is not observed.
    pub zone_cells: f64,
    /// Minimum steepness of a shock, as a fraction of the value range per cell.
    pub steep_fraction: f64,
}

impl Default for ExtractorSettings {
    fn default() -> Self {
        Self { eta: 0.05, margin_cells: 2.0, zone_cells: 5.0, steep_fraction: 0.04 }
    }
}

/// Reads hodograph observables off sampled fields.
///
/// Mesh levels that cannot be read reliably (near extrema, at the domain ends, inside
/// the shock band) are carried along their characteristic from the last time they were read.
#[derive(Debug, Clone)]
pub struct ObservableExtractor {
    layout: ObservableLayout,
    model: FluxModel,
    settings: ExtractorSettings,
    speeds: Vec<Vec<f64>>,
    meshes: Vec<Vec<f64>>,
    last_t: f64,
    last: Vec<Vec<f64>>,
    value_range: f64,
}

struct Measured {
    shock: ShockState,
    zone: Option<(f64, f64)>,
}

impl ObservableExtractor {
    pub fn new(
        layout: &ObservableLayout,
        model: &FluxModel,
        initial: &[MonotoneBranch],
        settings: ExtractorSettings,
    ) -> Result<Self> {
        if initial.len() != layout.branch_slots.len() {
            return Err(Error::ObservableAssembly("initial branches do not match the layout".into()));
        }
        let meshes: Vec<Vec<f64>> = layout.branch_slots.iter().map(|s| s.u_mesh()).collect();
        let speeds = meshes.iter().map(|m| m.iter().map(|&u| model.speed(u)).collect()).collect();
        let lo = layout.branch_slots.iter().map(|s| s.u_lo).fold(f64::INFINITY, f64::min);
        let hi = layout.branch_slots.iter().map(|s| s.u_hi).fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            layout: layout.clone(),
            model: *model,
            settings,
            speeds,
            meshes,
            last_t: initial.first().map(|b| b.t).unwrap_or(0.0),
            last: initial.iter().map(|b| b.x_of_u.clone()).collect(),
            value_range: (hi - lo).max(f64::MIN_POSITIVE),
        })
    }

    /// Observable vector at the field's time; fields must be passed in time order.
    pub fn observe(&mut self, field: &EulerianField) -> Result<Vec<f64>> {
        let grid = field.grid;
        let dx = grid.dx();
        let t = field.t;
        let (_, _, pieces) = monotone_pieces(&grid.coordinates(), &field.values)?;
        if pieces.len() != self.layout.sources {
            return Err(Error::ObservableAssembly(format!(
                "field at t = {t} has {} monotone pieces, expected {}",
                pieces.len(),
                self.layout.sources
            )));
        }
        let measured = self.measure_shock(&pieces, dx, t);
        let zone = measured.as_ref().and_then(|m| m.zone);
        let (a, b) = (grid.a + self.settings.margin_cells * dx, grid.b - self.settings.margin_cells * dx);

        let mut branches = Vec::with_capacity(self.layout.branch_slots.len());
        for (i, slot) in self.layout.branch_slots.iter().enumerate() {
            let piece = &pieces[slot.source];
            if piece.direction != slot.direction {
                return Err(Error::ObservableAssembly(format!("piece {} changed direction at t = {t}", slot.source)));
            }
            let (mut us, mut xs) = (piece.u.clone(), piece.x.clone());
            if piece.direction == Direction::Decreasing {
                us.reverse();
                xs.reverse();
            }
            let (lo, hi) = (us[0], us[us.len() - 1]);
            let w = self.settings.eta * (hi - lo);
            let x_of_u = self.meshes[i]
                .iter()
                .enumerate()
                .map(|(k, &u)| {
                    let x = interp_clamped(&us, &xs, u);
                    let seen =
                        u > lo + w && u < hi - w && x > a && x < b && zone.is_none_or(|(zl, zr)| x < zl || x > zr);
                    if seen {
                        x
                    } else {
                        self.last[i][k] + (t - self.last_t) * self.speeds[i][k]
                    }
                })
                .collect();
            branches.push(MonotoneBranch { direction: slot.direction, u_lo: slot.u_lo, u_hi: slot.u_hi, x_of_u, t });
        }
        let shocks: Vec<ShockState> = measured.map(|m| m.shock).into_iter().collect();
        let g = assemble_observables(&branches, &shocks, &self.layout)?;
        self.last = branches.into_iter().map(|b| b.x_of_u).collect();
        self.last_t = t;
        Ok(g)
    }

    fn measure_shock(&self, pieces: &[RawPiece], dx: f64, t: f64) -> Option<Measured> {
        let slot = self.layout.shock_slots.first()?;
        let virt = self.layout.virtual_shock(&self.model, t)?;
        if t < slot.onset.t_star {
            return Some(Measured { shock: virt, zone: None });
        }
        let piece = &pieces[slot.source];
        let steep = self.settings.steep_fraction * self.value_range / dx;
        // steep runs of cells: (first cell, last cell, jump)
        let mut best: Option<(usize, usize, f64)> = None;
        let mut k = 0;
        let cells = piece.x.len() - 1;
        while k < cells {
            let slope = |k: usize| ((piece.u[k + 1] - piece.u[k]) / (piece.x[k + 1] - piece.x[k])).abs();
            if slope(k) <= steep {
                k += 1;
                continue;
            }
            let start = k;
            while k < cells && slope(k) > steep {
                k += 1;
            }
            let jump = (piece.u[k] - piece.u[start]).abs();
            if best.is_none_or(|(_, _, j)| jump > j) {
                best = Some((start, k, jump));
            }
        }
        let Some((i0, i1, _)) = best else {
            return Some(Measured { shock: virt, zone: None });
        };
        let (ua, ub) = (piece.u[i0], piece.u[i1]);
        let (u1, u2) = if ua >= ub { (ua, ub) } else { (ub, ua) };
        let mid = 0.5 * (ua + ub);
        let mut x_star = 0.5 * (piece.x[i0] + piece.x[i1]);
        for j in i0..i1 {
            let (p, q) = (piece.u[j], piece.u[j + 1]);
            if (p - mid) * (q - mid) <= 0.0 && p != q {
                x_star = piece.x[j] + (mid - p) / (q - p) * (piece.x[j + 1] - piece.x[j]);
                break;
            }
        }
        let half = self.settings.zone_cells * dx;
        Some(Measured {
            shock: ShockState { x_star, u1, u2, ..virt },
            zone: Some((piece.x[i0] - half, piece.x[i1] + half)),
        })
    }
}
