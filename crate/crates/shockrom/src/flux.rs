//! Flux functions for scalar conservation laws `u_t + F(u)_x = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convexity {
    MonotoneConvex,
    SShaped,
}

/// Monotone piece of the characteristic speed, used to pick an inverse of `f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeedBranch {
    /// `f` increasing in `u`.
    Rising,
    /// `f` decreasing in `u`.
    Falling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FluxModel {
    Burgers,
    BuckleyLeverett { mobility: f64 },
}

pub fn burgers_flux() -> FluxModel {
    FluxModel::Burgers
}

pub fn buckley_leverett_flux(a: f64) -> Result<FluxModel> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::ParameterDomain(format!("Buckley-Leverett mobility must be positive, got {a}")));
    }
    Ok(FluxModel::BuckleyLeverett { mobility: a })
}

impl FluxModel {
    pub fn name(&self) -> &'static str {
        match self {
            FluxModel::Burgers => "burgers",
            FluxModel::BuckleyLeverett { .. } => "buckley-leverett",
        }
    }

    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match *self {
            FluxModel::Burgers => Vec::new(),
            FluxModel::BuckleyLeverett { mobility } => vec![("a", mobility)],
        }
    }

    pub fn convexity(&self) -> Convexity {
        match self {
            FluxModel::Burgers => Convexity::MonotoneConvex,
            FluxModel::BuckleyLeverett { .. } => Convexity::SShaped,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FluxModel::Burgers => Ok(()),
            FluxModel::BuckleyLeverett { mobility } => buckley_leverett_flux(mobility).map(|_| ()),
        }
    }

    /// F(u)
    pub fn flux(&self, u: f64) -> f64 {
        match *self {
            FluxModel::Burgers => 0.5 * u * u,
            FluxModel::BuckleyLeverett { mobility: a } => {
                let v = 1.0 - u;
                u * u / (u * u + a * v * v)
            }
        }
    }

    /// f(u) = F'(u)
    pub fn speed(&self, u: f64) -> f64 {
        match *self {
            FluxModel::Burgers => u,
            FluxModel::BuckleyLeverett { mobility: a } => {
                let v = 1.0 - u;
                let d = u * u + a * v * v;
                2.0 * a * u * v / (d * d)
            }
        }
    }

    /// f'(u)
    pub fn speed_derivative(&self, u: f64) -> f64 {
        match *self {
            FluxModel::Burgers => 1.0,
            FluxModel::BuckleyLeverett { mobility: a } => {
                let v = 1.0 - u;
                let d = u * u + a * v * v;
                let dd = 2.0 * u - 2.0 * a * v;
                2.0 * a * ((1.0 - 2.0 * u) * d - 2.0 * u * v * dd) / (d * d * d)
            }
        }
    }

    /// Rankine-Hugoniot speed between two states; falls back to `f` for coincident states.
    pub fn shock_speed(&self, u1: f64, u2: f64) -> f64 {
        let du = u1 - u2;
        if du.abs() <= 1e-14 * (1.0 + u1.abs().max(u2.abs())) {
            self.speed(0.5 * (u1 + u2))
        } else {
            (self.flux(u1) - self.flux(u2)) / du
        }
    }

    /// State where `f` peaks. `None` for Burgers, where `f` is monotone.
    pub fn speed_peak(&self) -> Option<f64> {
        match self {
            FluxModel::Burgers => None,
            FluxModel::BuckleyLeverett { .. } => Some(bisect(|u| self.speed_derivative(u), 1e-9, 1.0 - 1e-9, 1e-14)),
        }
    }

    /// Inverse of the speed, G(v) with G(f(u)) = u, on the requested monotone piece.
    pub fn inverse_speed(&self, v: f64, branch: SpeedBranch) -> Option<f64> {
        match self {
            FluxModel::Burgers => Some(v),
            FluxModel::BuckleyLeverett { .. } => {
                let peak = self.speed_peak()?;
                let (lo, hi) = match branch {
                    SpeedBranch::Rising => (0.0, peak),
                    SpeedBranch::Falling => (peak, 1.0),
                };
                let (flo, fhi) = (self.speed(lo), self.speed(hi));
                let (vmin, vmax) = (flo.min(fhi), flo.max(fhi));
                if !(vmin..=vmax).contains(&v) {
                    return None;
                }
                Some(bisect(|u| self.speed(u) - v, lo, hi, 1e-15))
            }
        }
    }

    /// Largest |f| over `[lo, hi]`, sampled densely.
    pub fn max_speed_on(&self, lo: f64, hi: f64) -> f64 {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let mut m = self.speed(lo).abs().max(self.speed(hi).abs());
        if let Some(p) = self.speed_peak() {
            if p > lo && p < hi {
                m = m.max(self.speed(p).abs());
            }
        }
        let n = 512;
        for k in 1..n {
            let u = lo + (hi - lo) * k as f64 / n as f64;
            m = m.max(self.speed(u).abs());
        }
        m
    }
}

/// Bisection for a sign change of `g` on `[lo, hi]`.
fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut glo = g(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol {
            return mid;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if (gm > 0.0) == (glo > 0.0) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Result of the Welge tangent construction on an s-shaped flux.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HullConstruction {
    pub front_saturation: f64,
    pub front_speed: f64,
    pub rarefaction_interval: (f64, f64),
    pub shock_interval: (f64, f64),
}

const WELGE_SCAN: usize = 2000;

/// Tangent from `(u_right, F(u_right))` touching `F` at the front saturation `u_f`.
pub fn welge_front(model: &FluxModel, u_left: f64, u_right: f64) -> Result<HullConstruction> {
    welge_front_scan(model, u_left, u_right, WELGE_SCAN)
}

/// Same as [`welge_front`] with an explicit number of bracket scan cells.
pub fn welge_front_scan(model: &FluxModel, u_left: f64, u_right: f64, scan: usize) -> Result<HullConstruction> {
    if !(u_right < u_left) {
        return Err(Error::ParameterDomain(format!("welge_front needs u_right < u_left, got {u_right} and {u_left}")));
    }
    let fr = model.flux(u_right);
    let h = |u: f64| model.speed(u) * (u - u_right) - (model.flux(u) - fr);
    let width = u_left - u_right;
    let start = u_right + width * 1e-6;
    let scan = scan.max(2);
    let mut prev = (start, h(start));
    let mut bracket = None;
    for k in 1..=scan {
        let u = start + (u_left - start) * k as f64 / scan as f64;
        let hu = h(u);
        if hu == 0.0 || (hu > 0.0) != (prev.1 > 0.0) {
            bracket = Some((prev.0, u));
            break;
        }
        prev = (u, hu);
    }
    let (lo, hi) = bracket.ok_or_else(|| {
        Error::HullDegenerate(format!("no interior tangency for {} on [{u_right}, {u_left}]", model.name()))
    })?;
    let uf = bisect(h, lo, hi, 1e-14);
    Ok(HullConstruction {
        front_saturation: uf,
        front_speed: model.speed(uf),
        rarefaction_interval: (uf, u_left),
        shock_interval: (u_right, uf),
    })
}
