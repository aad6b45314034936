use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::grid::{interp_clamped, EulerianField};

const STRICT: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Increasing,
    Decreasing,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Increasing => 1.0,
            Direction::Decreasing => -1.0,
        }
    }
}

/// Inverse representation `x(u)` of one monotone piece, sampled on a uniform u-mesh.
///
/// The mesh runs from `u_lo` to `u_hi`; `x_of_u[k]` is the position carrying `u_k`
/// at time `t`. Monotonicity is checked on construction; [`evolve_branch`] may carry
/// a branch past its overturning time, which [`MonotoneBranch::is_strictly_monotone`] detects.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneBranch {
    pub direction: Direction,
    pub u_lo: f64,
    pub u_hi: f64,
    pub x_of_u: Vec<f64>,
    pub t: f64,
}

impl MonotoneBranch {
    pub fn from_inverse(direction: Direction, u_lo: f64, u_hi: f64, x_of_u: Vec<f64>, t: f64) -> Result<Self> {
        if x_of_u.len() < 2 || !(u_hi > u_lo) {
            return Err(Error::Resolution(format!(
                "branch needs at least 2 mesh points on a nonempty range, got {} on [{u_lo}, {u_hi}]",
                x_of_u.len()
            )));
        }
        let b = Self { direction, u_lo, u_hi, x_of_u, t };
        if !b.is_strictly_monotone() {
            return Err(Error::DegenerateData(format!("x(u) is not strictly {:?} on [{u_lo}, {u_hi}]", direction)));
        }
        Ok(b)
    }

    pub fn len(&self) -> usize {
        self.x_of_u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_of_u.is_empty()
    }

    pub fn du(&self) -> f64 {
        (self.u_hi - self.u_lo) / (self.len() - 1) as f64
    }

    pub fn u_at(&self, k: usize) -> f64 {
        if k + 1 == self.len() {
            self.u_hi
        } else {
            self.u_lo + k as f64 * self.du()
        }
    }

    pub fn u_mesh(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.u_at(k)).collect()
    }

    pub fn is_strictly_monotone(&self) -> bool {
        let s = self.direction.sign();
        self.x_of_u.windows(2).all(|w| s * (w[1] - w[0]) > STRICT)
    }

    /// Position carrying `u`, interpolated on the mesh (clamped at the ends).
    pub fn x_at(&self, u: f64) -> f64 {
        let h = self.du();
        let s = ((u - self.u_lo) / h).clamp(0.0, (self.len() - 1) as f64);
        let k = (s.floor() as usize).min(self.len() - 2);
        let w = s - k as f64;
        self.x_of_u[k] + w * (self.x_of_u[k + 1] - self.x_of_u[k])
    }

    /// Centred-difference `dx/du` at every mesh point (one-sided at the ends).
    pub fn slopes(&self) -> Vec<f64> {
        let n = self.len();
        let h = self.du();
        (0..n)
            .map(|k| {
                if k == 0 {
                    (self.x_of_u[1] - self.x_of_u[0]) / h
                } else if k + 1 == n {
                    (self.x_of_u[n - 1] - self.x_of_u[n - 2]) / h
                } else {
                    (self.x_of_u[k + 1] - self.x_of_u[k - 1]) / (2.0 * h)
                }
            })
            .collect()
    }

    /// `dx/du` at an arbitrary `u`, interpolated between mesh slopes.
    pub fn slope_at(&self, u: f64, slopes: &[f64]) -> f64 {
        let h = self.du();
        let s = ((u - self.u_lo) / h).clamp(0.0, (self.len() - 1) as f64);
        let k = (s.floor() as usize).min(self.len() - 2);
        let w = s - k as f64;
        slopes[k] + w * (slopes[k + 1] - slopes[k])
    }

    /// `(x, u)` samples in spatial order along the curve.
    pub fn curve(&self) -> (Vec<f64>, Vec<f64>) {
        let mut x = self.x_of_u.clone();
        let mut u = self.u_mesh();
        if self.direction == Direction::Decreasing {
            x.reverse();
            u.reverse();
        }
        (x, u)
    }

    /// Value at position `x` by inverse interpolation; only meaningful while monotone.
    pub fn u_of_x(&self, x: f64) -> f64 {
        let (xs, us) = self.curve();
        interp_clamped(&xs, &us, x)
    }
}

/// Monotone pieces of a sampled field together with its far-field states.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub left_state: f64,
    pub right_state: f64,
    pub branches: Vec<MonotoneBranch>,
    /// Spatial extent `[x_start, x_end]` of each branch in the source samples.
    pub extents: Vec<(f64, f64)>,
}

/// Monotone runs of raw samples, before inversion.
#[derive(Debug, Clone)]
pub struct RawPiece {
    pub direction: Direction,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

/// Split samples at their extrema.
///
/// Constant runs touching the domain ends are treated as far-field states; a single
/// repeated sample inside is dropped; longer interior plateaus are rejected.
/// Returns the far-field states and the pieces in spatial order.
pub fn monotone_pieces(xs: &[f64], v: &[f64]) -> Result<(f64, f64, Vec<RawPiece>)> {
    let n = v.len();
    let scale = v.iter().fold(1.0f64, |m, &u| m.max(u.abs()));
    let tol = STRICT * scale;
    let sign: Vec<i8> = v
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            if d > tol {
                1
            } else if d < -tol {
                -1
            } else {
                0
            }
        })
        .collect();
    let left_state = v[0];
    let right_state = v[n - 1];
    let (Some(first), Some(last)) = (sign.iter().position(|&s| s != 0), sign.iter().rposition(|&s| s != 0)) else {
        return Ok((left_state, right_state, Vec::new()));
    };

    let mut px = vec![xs[first]];
    let mut pu = vec![v[first]];
    let mut psign: Vec<i8> = Vec::new();
    let mut j = first;
    while j <= last {
        if sign[j] == 0 {
            let mut k = j;
            while k <= last && sign[k] == 0 {
                k += 1;
            }
            if k - j >= 2 {
                return Err(Error::NonInvertible { x_lo: xs[j], x_hi: xs[k] });
            }
            j = k;
            continue;
        }
        px.push(xs[j + 1]);
        pu.push(v[j + 1]);
        psign.push(sign[j]);
        j += 1;
    }

    let mut pieces = Vec::new();
    let mut start = 0;
    for k in 1..=psign.len() {
        if k == psign.len() || psign[k] != psign[start] {
            let direction = if psign[start] > 0 { Direction::Increasing } else { Direction::Decreasing };
            pieces.push(RawPiece { direction, x: px[start..=k].to_vec(), u: pu[start..=k].to_vec() });
            start = k;
        }
    }
    Ok((left_state, right_state, pieces))
}

/// Split `field` at its extrema and invert every piece onto a `p`-point u-mesh.
pub fn decompose_monotone(field: &EulerianField, p: usize) -> Result<Decomposition> {
    let xs = field.grid.coordinates();
    let (left_state, right_state, pieces) = monotone_pieces(&xs, &field.values)?;
    let mut branches = Vec::with_capacity(pieces.len());
    let mut extents = Vec::with_capacity(pieces.len());
    for piece in &pieces {
        branches.push(invert_samples(&piece.x, &piece.u, piece.direction, p, field.t)?);
        extents.push((piece.x[0], piece.x[piece.x.len() - 1]));
    }
    Ok(Decomposition { left_state, right_state, branches, extents })
}

/// Invert strictly monotone samples `(x, u)` onto a `p`-point uniform u-mesh.
pub fn invert_samples(x: &[f64], u: &[f64], direction: Direction, p: usize, t: f64) -> Result<MonotoneBranch> {
    if p < 2 {
        return Err(Error::Resolution(format!("branch mesh needs at least 2 points, got {p}")));
    }
    let (mut uu, mut xx) = (u.to_vec(), x.to_vec());
    if direction == Direction::Decreasing {
        uu.reverse();
        xx.reverse();
    }
    let (lo, hi) = (uu[0], uu[uu.len() - 1]);
    let h = (hi - lo) / (p - 1) as f64;
    let x_of_u = (0..p)
        .map(|k| {
            let um = if k + 1 == p { hi } else { lo + k as f64 * h };
            interp_clamped(&uu, &xx, um)
        })
        .collect();
    MonotoneBranch::from_inverse(direction, lo, hi, x_of_u, t)
}

/// Exact characteristic transport of every mesh entry over `dt`.
pub fn evolve_branch(branch: &MonotoneBranch, model: &FluxModel, dt: f64) -> MonotoneBranch {
    let mut out = branch.clone();
    for (k, x) in out.x_of_u.iter_mut().enumerate() {
        *x += dt * model.speed(branch.u_at(k));
    }
    out.t += dt;
    out
}
