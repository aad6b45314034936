use serde::Serialize;

use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::hodograph::{Direction, HodographProfile, MonotoneBranch, ProfilePiece, ShockOnset, ShockState};

/// How the shock is advanced beyond the training window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Closure {
    /// Read the shock entries straight from the DMD forecast.
    Learned,
    /// Integrate the Rankine-Hugoniot speed with limits read off the forecast curve.
    Tracked,
}

/// Which shock quantities are stored in the observable vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ShockComponents {
    /// Only the position; the limits are pinned to two fixed states.
    Position { upper: f64, lower: f64 },
    /// Position with both limiting states.
    Triple,
}

impl ShockComponents {
    pub fn len(&self) -> usize {
        match self {
            ShockComponents::Position { .. } => 1,
            ShockComponents::Triple => 3,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchSlot {
    pub offset: usize,
    pub len: usize,
    pub direction: Direction,
    pub u_lo: f64,
    pub u_hi: f64,
    /// Index of the monotone piece of the data this slot is read from.
    pub source: usize,
}

impl BranchSlot {
    pub fn u_at(&self, k: usize) -> f64 {
        if k + 1 == self.len {
            self.u_hi
        } else {
            self.u_lo + k as f64 * (self.u_hi - self.u_lo) / (self.len - 1) as f64
        }
    }

    pub fn u_mesh(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.u_at(k)).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ShockSlot {
    pub offset: usize,
    pub components: ShockComponents,
    pub onset: ShockOnset,
    pub closure: Closure,
    /// Index of the compressive piece of the data the shock lives in.
    pub source: usize,
}

/// Fixed arrangement of the observable vector `[branch slots; shock slots]`.
#[derive(Debug, Clone, Serialize)]
pub struct ObservableLayout {
    pub left_state: f64,
    pub right_state: f64,
    pub branch_slots: Vec<BranchSlot>,
    pub shock_slots: Vec<ShockSlot>,
    pub total: usize,
    /// Number of monotone pieces the data must split into.
    pub sources: usize,
}

impl ObservableLayout {
    /// Slots for `branches` (in spatial order, with their source piece) and an optional shock.
    pub fn new(
        left_state: f64,
        right_state: f64,
        branches: &[(MonotoneBranch, usize)],
        shock: Option<(ShockOnset, ShockComponents, Closure, usize)>,
    ) -> Result<Self> {
        let mut offset = 0;
        let mut branch_slots = Vec::with_capacity(branches.len());
        for (b, source) in branches {
            branch_slots.push(BranchSlot {
                offset,
                len: b.len(),
                direction: b.direction,
                u_lo: b.u_lo,
                u_hi: b.u_hi,
                source: *source,
            });
            offset += b.len();
        }
        let mut shock_slots = Vec::new();
        if let Some((onset, components, closure, source)) = shock {
            if !onset.is_finite() {
                return Err(Error::ObservableAssembly("shock slot needs a finite formation time".into()));
            }
            shock_slots.push(ShockSlot { offset, components, onset, closure, source });
            offset += components.len();
        }
        let sources = branches.iter().map(|(_, s)| s + 1).max().unwrap_or(0);
        Ok(Self { left_state, right_state, branch_slots, shock_slots, total: offset, sources })
    }

    /// Branches decoded from an observable vector; they may be overturned.
    pub fn branches(&self, g: &[f64], t: f64) -> Vec<MonotoneBranch> {
        self.branch_slots
            .iter()
            .map(|s| MonotoneBranch {
                direction: s.direction,
                u_lo: s.u_lo,
                u_hi: s.u_hi,
                x_of_u: g[s.offset..s.offset + s.len].to_vec(),
                t,
            })
            .collect()
    }

    pub fn shock(&self, g: &[f64], t: f64) -> Option<ShockState> {
        let s = self.shock_slots.first()?;
        let x_star = g[s.offset];
        let (u1, u2) = match s.components {
            ShockComponents::Position { upper, lower } => (upper, lower),
            ShockComponents::Triple => (g[s.offset + 1], g[s.offset + 2]),
        };
        Some(ShockState { t_star: s.onset.t_star, u_star: s.onset.u_star, t, x_star, u1, u2 })
    }

    pub fn profile(&self, g: &[f64], t: f64) -> HodographProfile {
        let pieces = self.branches(g, t).iter().map(ProfilePiece::from_branch).collect();
        HodographProfile::new(t, self.left_state, self.right_state, pieces)
    }

    /// Shock state before formation: the inflection characteristic with coincident limits.
    pub fn virtual_shock(&self, model: &FluxModel, t: f64) -> Option<ShockState> {
        let s = self.shock_slots.first()?;
        let on = s.onset;
        Some(ShockState {
            t_star: on.t_star,
            u_star: on.u_star,
            t,
            x_star: on.x_star + (t - on.t_star) * model.speed(on.u_star),
            u1: on.u_star,
            u2: on.u_star,
        })
    }
}

/// Concatenate branch positions and shock entries into one observable vector.
pub fn assemble_observables(
    branches: &[MonotoneBranch],
    shocks: &[ShockState],
    layout: &ObservableLayout,
) -> Result<Vec<f64>> {
    if branches.len() != layout.branch_slots.len() || shocks.len() != layout.shock_slots.len() {
        return Err(Error::ObservableAssembly(format!(
            "layout expects {} branches and {} shocks, got {} and {}",
            layout.branch_slots.len(),
            layout.shock_slots.len(),
            branches.len(),
            shocks.len()
        )));
    }
    let mut g = Vec::with_capacity(layout.total);
    for (b, s) in branches.iter().zip(&layout.branch_slots) {
        if b.len() != s.len || b.direction != s.direction {
            return Err(Error::ObservableAssembly(format!("branch does not fit slot at offset {}", s.offset)));
        }
        g.extend_from_slice(&b.x_of_u);
    }
    for (sh, slot) in shocks.iter().zip(&layout.shock_slots) {
        g.push(sh.x_star);
        if slot.components == ShockComponents::Triple {
            g.push(sh.u1);
            g.push(sh.u2);
        }
    }
    if let Some(i) = g.iter().position(|v| !v.is_finite()) {
        return Err(Error::ObservableAssembly(format!("non-finite observable at index {i}")));
    }
    Ok(g)
}

/// Split a branch at value `u_cut` into two `p`-point branches, in spatial order.
pub fn split_branch(branch: &MonotoneBranch, u_cut: f64, p: usize) -> Result<(MonotoneBranch, MonotoneBranch)> {
    if !(u_cut > branch.u_lo && u_cut < branch.u_hi) {
        return Err(Error::ObservableAssembly(format!(
            "cut value {u_cut} outside branch range [{}, {}]",
            branch.u_lo, branch.u_hi
        )));
    }
    let make = |lo: f64, hi: f64| {
        let x = (0..p)
            .map(|k| {
                let u = if k + 1 == p { hi } else { lo + k as f64 * (hi - lo) / (p - 1) as f64 };
                branch.x_at(u)
            })
            .collect();
        MonotoneBranch::from_inverse(branch.direction, lo, hi, x, branch.t)
    };
    let low = make(branch.u_lo, u_cut)?;
    let high = make(u_cut, branch.u_hi)?;
    Ok(match branch.direction {
        Direction::Increasing => (low, high),
        Direction::Decreasing => (high, low),
    })
}
