use super::branch::MonotoneBranch;
use super::shock::ShockState;
use crate::error::{Error, Result};
use crate::grid::{EulerianField, Grid1D};

const JITTER: f64 = 1e-10;

/// One piece of the hodograph curve in spatial order; may be overturned.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfilePiece {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

impl ProfilePiece {
    pub fn from_branch(branch: &MonotoneBranch) -> Self {
        let (x, u) = branch.curve();
        Self { x, u }
    }
}

/// The whole curve `x(u)` at one time: far-field state, pieces left to right, far-field state.
#[derive(Debug, Clone, PartialEq)]
pub struct HodographProfile {
    pub t: f64,
    pub left_state: f64,
    pub right_state: f64,
    pub pieces: Vec<ProfilePiece>,
}

impl HodographProfile {
    pub fn new(t: f64, left_state: f64, right_state: f64, pieces: Vec<ProfilePiece>) -> Self {
        Self { t, left_state, right_state, pieces }
    }

    pub fn from_branches(t: f64, left_state: f64, right_state: f64, branches: &[MonotoneBranch]) -> Self {
        Self::new(t, left_state, right_state, branches.iter().map(ProfilePiece::from_branch).collect())
    }

    fn vertices(&self) -> Vec<(f64, f64)> {
        let mut v = Vec::with_capacity(2 + self.pieces.iter().map(|p| p.x.len()).sum::<usize>());
        let first_x = self.pieces.first().and_then(|p| p.x.first().copied()).unwrap_or(0.0);
        let last_x = self.pieces.last().and_then(|p| p.x.last().copied()).unwrap_or(0.0);
        v.push((f64::NEG_INFINITY, self.left_state));
        v.push((first_x, self.left_state));
        for p in &self.pieces {
            v.extend(p.x.iter().copied().zip(p.u.iter().copied()));
        }
        v.push((last_x, self.right_state));
        v.push((f64::INFINITY, self.right_state));
        v
    }

    /// Values of every crossing of the vertical line at `x`, in curve order.
    pub fn crossings(&self, x: f64) -> Vec<f64> {
        crossings_of(&self.vertices(), x)
    }

    /// First and last crossing at `x`: the states to the left and right of a cut there.
    pub fn limits_at(&self, x: f64) -> (f64, f64) {
        let c = self.crossings(x);
        match (c.first(), c.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => (self.left_state, self.right_state),
        }
    }

    /// Largest jump in x between consecutive pieces, with its location.
    pub fn largest_gap(&self) -> Option<(f64, f64)> {
        self.pieces
            .windows(2)
            .filter_map(|w| {
                let a = *w[0].x.last()?;
                let b = *w[1].x.first()?;
                Some((a.min(b), a.max(b)))
            })
            .max_by(|p, q| (p.1 - p.0).total_cmp(&(q.1 - q.0)))
    }
}

fn crossings_of(v: &[(f64, f64)], x: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for w in v.windows(2) {
        let ((xa, ua), (xb, ub)) = (w[0], w[1]);
        let hit = (xa <= x && x < xb) || (xb <= x && x < xa);
        if !hit {
            continue;
        }
        let u = if !xa.is_finite() || !xb.is_finite() || xa == xb {
            if xa.is_finite() && !xb.is_finite() {
                ua
            } else {
                ub
            }
        } else {
            ua + (x - xa) / (xb - xa) * (ub - ua)
        };
        out.push(u);
    }
    out
}

/// Evaluate the hodograph solution on `grid`.
///
/// Left of a shock the first crossing of the curve is taken, right of it the last.
/// Without a shock the curve must be single-valued up to jitter.
pub fn assemble_solution(profile: &HodographProfile, shocks: &[ShockState], grid: Grid1D) -> Result<EulerianField> {
    if shocks.len() > 1 {
        return Err(Error::DegenerateData("at most one shock is supported".into()));
    }
    if let Some((lo, hi)) = profile.largest_gap() {
        if hi - lo > grid.dx() {
            return Err(Error::Assembly { x_lo: lo, x_hi: hi });
        }
    }
    let verts = profile.vertices();
    let cut = shocks.first().map(|s| s.x_star);
    let values = (0..grid.nodes)
        .map(|j| {
            let x = grid.x(j);
            let c = crossings_of(&verts, x);
            let (first, last) = (c[0], c[c.len() - 1]);
            match cut {
                Some(xs) => Ok(if x < xs { first } else { last }),
                None => {
                    let (lo, hi) = c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &u| (a.min(u), b.max(u)));
                    if hi - lo > JITTER * hi.abs().max(lo.abs()).max(1.0) {
                        Err(Error::MultiValued { x, t: profile.t })
                    } else {
                        Ok(first)
                    }
                }
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    EulerianField::new(grid, profile.t, values)
}
