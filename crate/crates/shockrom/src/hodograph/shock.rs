use serde::{Deserialize, Serialize};

use super::branch::MonotoneBranch;
use crate::error::{Error, Result};
use crate::flux::FluxModel;

const DENOMINATOR_FLOOR: f64 = 1e-12;
const TIE: f64 = 1e-9;

/// Where and when a branch first overturns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShockOnset {
    /// Absolute formation time, `+inf` when the branch never compresses.
    pub t_star: f64,
    /// Inflection value; `NaN` when `t_star` is infinite.
    pub u_star: f64,
    /// Formation position; `NaN` when `t_star` is infinite.
    pub x_star: f64,
    /// Curvature of the breaking-time function at `u_star`, used to start the limit ODEs.
    pub curvature: f64,
}

impl ShockOnset {
    pub fn is_finite(&self) -> bool {
        self.t_star.is_finite()
    }
}

/// Breaking time of a branch: the smallest positive `-x0'(u) / f''(u)`.
pub fn shock_formation_time(branch: &MonotoneBranch, model: &FluxModel) -> Result<ShockOnset> {
    let p = branch.len();
    if p < 5 {
        return Err(Error::Resolution(format!("branch mesh of {p} points is too coarse for the breaking time")));
    }
    let slopes = branch.slopes();
    let times: Vec<f64> = (1..p - 1)
        .map(|k| {
            let fp = model.speed_derivative(branch.u_at(k));
            let tb = -slopes[k] / fp;
            if fp != 0.0 && tb > 0.0 && tb.is_finite() {
                tb
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let best = times.iter().copied().fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Ok(ShockOnset { t_star: f64::INFINITY, u_star: f64::NAN, x_star: f64::NAN, curvature: f64::NAN });
    }
    let ties: Vec<usize> = (0..times.len()).filter(|&i| times[i] <= best * (1.0 + TIE)).collect();
    let (k_lo, k_hi) = (ties[0] + 1, ties[ties.len() - 1] + 1);
    let u_star = 0.5 * (branch.u_at(k_lo) + branch.u_at(k_hi));
    let x_star = branch.x_at(u_star) + best * model.speed(u_star);
    let curvature = breaking_curvature(branch, &times, (k_lo + k_hi) / 2 - 1);
    Ok(ShockOnset { t_star: branch.t + best, u_star, x_star, curvature })
}

/// Second derivative of the breaking-time curve near index `i`, from a least-squares parabola.
fn breaking_curvature(branch: &MonotoneBranch, times: &[f64], i: usize) -> f64 {
    let h = branch.du();
    let w = (times.len() / 200).max(3);
    let lo = i.saturating_sub(w);
    let hi = (i + w).min(times.len() - 1);
    let (mut s0, mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut t0, mut t1, mut t2) = (0.0, 0.0, 0.0);
    for (k, &y) in times.iter().enumerate().take(hi + 1).skip(lo) {
        if !y.is_finite() {
            continue;
        }
        let z = (k as f64 - i as f64) * h;
        s0 += 1.0;
        s1 += z;
        s2 += z * z;
        s3 += z * z * z;
        s4 += z * z * z * z;
        t0 += y;
        t1 += y * z;
        t2 += y * z * z;
    }
    // normal equations for y = c0 + c1 z + c2 z^2, solved by Cramer's rule
    let det = |a: [[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let m = [[s0, s1, s2], [s1, s2, s3], [s2, s3, s4]];
    let d = det(m);
    if d == 0.0 {
        return f64::NAN;
    }
    let m2 = [[s0, s1, t0], [s1, s2, t1], [s2, s3, t2]];
    2.0 * det(m2) / d
}

/// Shock position with its upper (left) and lower (right) limiting states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShockState {
    pub t_star: f64,
    pub u_star: f64,
    pub t: f64,
    pub x_star: f64,
    pub u1: f64,
    pub u2: f64,
}

impl ShockState {
    pub fn at_onset(onset: &ShockOnset) -> Self {
        Self {
            t_star: onset.t_star,
            u_star: onset.u_star,
            t: onset.t_star,
            x_star: onset.x_star,
            u1: onset.u_star,
            u2: onset.u_star,
        }
    }

    pub fn speed(&self, model: &FluxModel) -> f64 {
        model.shock_speed(self.u1, self.u2)
    }

    pub fn is_open(&self) -> bool {
        !coincident(self.u1, self.u2)
    }
}

fn coincident(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-14 * a.abs().max(b.abs()).max(1.0)
}

struct LimitRhs<'a> {
    upper: &'a MonotoneBranch,
    lower: &'a MonotoneBranch,
    upper_slopes: Vec<f64>,
    lower_slopes: Vec<f64>,
    model: &'a FluxModel,
}

impl LimitRhs<'_> {
    fn eval(&self, t: f64, u1: f64, u2: f64) -> Result<(f64, f64)> {
        let s = self.model.shock_speed(u1, u2);
        let rate = |b: &MonotoneBranch, slopes: &[f64], u: f64| -> Result<f64> {
            let g = -b.slope_at(u, slopes);
            let den = g - self.model.speed_derivative(u) * (t - b.t);
            if den.abs() < DENOMINATOR_FLOOR {
                return Err(Error::ShockDegenerate { t });
            }
            Ok((self.model.speed(u) - s) / den)
        };
        Ok((rate(self.upper, &self.upper_slopes, u1)?, rate(self.lower, &self.lower_slopes, u2)?))
    }
}

/// Advance the limiting states by one RK4 step; a shock at its onset is started from
/// the square-root cusp asymptotics `u* ± sqrt(6 dt / h'')`.
pub fn advance_shock_limits(
    state: &ShockState,
    branch_pair: (&MonotoneBranch, &MonotoneBranch),
    model: &FluxModel,
    dt: f64,
    onset_curvature: f64,
) -> Result<ShockState> {
    let (upper, lower) = branch_pair;
    let (u1_max, u2_min) = (upper.u_hi, lower.u_lo);
    let mut next = *state;
    next.t = state.t + dt;
    if !state.is_open() {
        if !(onset_curvature > 0.0) {
            return Err(Error::ShockDegenerate { t: state.t });
        }
        let c = (6.0 * dt / onset_curvature).sqrt();
        next.u1 = (state.u_star + c).min(u1_max);
        next.u2 = (state.u_star - c).max(u2_min);
        return Ok(next);
    }
    let rhs = LimitRhs { upper, lower, upper_slopes: upper.slopes(), lower_slopes: lower.slopes(), model };
    let clamp = |a: f64, b: f64| (a.clamp(state.u_star, u1_max), b.clamp(u2_min, state.u_star));
    let (t, a0, b0) = (state.t, state.u1, state.u2);
    let (k1a, k1b) = rhs.eval(t, a0, b0)?;
    let (a, b) = clamp(a0 + 0.5 * dt * k1a, b0 + 0.5 * dt * k1b);
    let (k2a, k2b) = rhs.eval(t + 0.5 * dt, a, b)?;
    let (a, b) = clamp(a0 + 0.5 * dt * k2a, b0 + 0.5 * dt * k2b);
    let (k3a, k3b) = rhs.eval(t + 0.5 * dt, a, b)?;
    let (a, b) = clamp(a0 + dt * k3a, b0 + dt * k3b);
    let (k4a, k4b) = rhs.eval(t + dt, a, b)?;
    let (u1, u2) =
        clamp(a0 + dt / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a), b0 + dt / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b));
    next.u1 = u1.max(state.u1);
    next.u2 = u2.min(state.u2);
    Ok(next)
}

/// Move the shock with the Rankine-Hugoniot speed of its current limits.
pub fn advance_shock_position(state: &ShockState, model: &FluxModel, dt: f64) -> Result<ShockState> {
    if !state.is_open() {
        return Err(Error::ShockVanished { t: state.t, u: state.u1 });
    }
    let mut next = *state;
    next.x_star += dt * state.speed(model);
    next.t += dt;
    Ok(next)
}

/// Integrate position and limits together from `state` to `t_end` in steps of at most `dt`.
pub fn track_shock(
    state: &ShockState,
    branch_pair: (&MonotoneBranch, &MonotoneBranch),
    model: &FluxModel,
    onset_curvature: f64,
    dt: f64,
    t_end: f64,
    mut visit: impl FnMut(&ShockState),
) -> Result<ShockState> {
    let mut s = *state;
    while s.t < t_end - 1e-12 * t_end.abs().max(1.0) {
        let h = dt.min(t_end - s.t);
        let limits = advance_shock_limits(&s, branch_pair, model, h, onset_curvature)?;
        // position uses the mean Rankine-Hugoniot speed over the step
        let sp = 0.5 * (model.shock_speed(s.u1, s.u2) + model.shock_speed(limits.u1, limits.u2));
        s = ShockState { x_star: s.x_star + h * sp, ..limits };
        visit(&s);
    }
    Ok(s)
}
