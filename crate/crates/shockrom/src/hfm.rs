//! High-fidelity reference solvers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::grid::{EulerianField, Grid1D, MovingGrid, SortedInterpolant};
use crate::hodograph::{shock_formation_time, MonotoneBranch};

/// States held in the ghost cells on either side of the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ghosts {
    pub left: f64,
    pub right: f64,
}

impl Ghosts {
    pub fn from_field(field: &EulerianField) -> Self {
        Self { left: field.values[0], right: field.values[field.values.len() - 1] }
    }
}

/// Interface fluxes `F_{j+1/2}` for `j = -1..J-1`, i.e. `J + 1` values including both boundaries.
pub fn interface_fluxes(values: &[f64], ghosts: Ghosts, model: &FluxModel) -> Vec<f64> {
    let n = values.len();
    let at = |j: usize| -> f64 {
        if j == 0 {
            ghosts.left
        } else if j == n + 1 {
            ghosts.right
        } else {
            values[j - 1]
        }
    };
    (0..=n)
        .map(|k| {
            let (ul, ur) = (at(k), at(k + 1));
            let (fl, fr) = (model.flux(ul), model.flux(ur));
            let du = ur - ul;
            let a = if du != 0.0 { (fr - fl) / du } else { model.speed(ul) };
            0.5 * (fl + fr) - 0.5 * a.abs() * du
        })
        .collect()
}

/// Largest stable step for the given state.
pub fn admissible_dt(values: &[f64], ghosts: Ghosts, dx: f64, model: &FluxModel) -> f64 {
    let smax =
        values.iter().chain([ghosts.left, ghosts.right].iter()).map(|&u| model.speed(u).abs()).fold(0.0, f64::max);
    if smax == 0.0 {
        f64::INFINITY
    } else {
        dx / smax
    }
}

/// One step of the conservative first-order upwind scheme.
pub fn upwind_step(field: &EulerianField, model: &FluxModel, dt: f64, ghosts: Ghosts) -> Result<EulerianField> {
    let dx = field.grid.dx();
    let limit = admissible_dt(&field.values, ghosts, dx, model);
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::StepRejected { dt, admissible_dt: limit });
    }
    let flux = interface_fluxes(&field.values, ghosts, model);
    let r = dt / dx;
    let values = field.values.iter().enumerate().map(|(j, &u)| u - r * (flux[j + 1] - flux[j])).collect();
    Ok(EulerianField { grid: field.grid, t: field.t + dt, values })
}

/// Smallest number of sub-steps keeping a step of `dt` within `safety` of the CFL limit,
/// judged on the value range of `u0`.
pub fn cfl_substeps(u0: &[f64], dx: f64, dt: f64, model: &FluxModel, safety: f64) -> usize {
    let lo = u0.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = u0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cfl = dt * model.max_speed_on(lo, hi) / dx;
    ((cfl / safety).ceil() as usize).max(1)
}

/// March `steps` upwind steps of size `t_end / steps`, each split into `substeps` pieces,
/// calling `visit(n, field)` for `n = 0..=steps`.
pub fn march_upwind(
    initial: EulerianField,
    model: &FluxModel,
    steps: usize,
    t_end: f64,
    substeps: usize,
    mut visit: impl FnMut(usize, &EulerianField),
) -> Result<EulerianField> {
    if steps == 0 {
        return Err(Error::ParameterDomain("upwind run needs at least one step".into()));
    }
    let ghosts = Ghosts::from_field(&initial);
    let substeps = substeps.max(1);
    let dt = t_end / steps as f64 / substeps as f64;
    let t0 = initial.t;
    let mut field = initial;
    visit(0, &field);
    for n in 1..=steps {
        for _ in 0..substeps {
            field = upwind_step(&field, model, dt, ghosts)?;
        }
        field.t = t0 + t_end * n as f64 / steps as f64;
        visit(n, &field);
    }
    Ok(field)
}

/// All `steps + 1` upwind fields from `u0` sampled on `grid` up to time `t_end`.
pub fn run_upwind(
    u0: impl Fn(f64) -> f64,
    grid: Grid1D,
    steps: usize,
    t_end: f64,
    model: &FluxModel,
) -> Result<Vec<EulerianField>> {
    let initial = EulerianField::from_fn(grid, 0.0, u0)?;
    let mut out = Vec::with_capacity(steps + 1);
    march_upwind(initial, model, steps, t_end, 1, |_, f| out.push(f.clone()))?;
    Ok(out)
}

/// Naive explicit Lagrangian update: each node moves with its own speed.
pub fn naive_lagrangian_step(g: &MovingGrid, model: &FluxModel, dt: f64) -> MovingGrid {
    let x = g.x.iter().zip(&g.u).map(|(&x, &u)| x + dt * model.speed(u)).collect();
    MovingGrid { t: g.t + dt, x, u: g.u.clone() }
}

#[derive(Debug, Clone)]
pub struct BslmStep {
    pub grid: MovingGrid,
    /// Number of departure-point lookups that fell outside the node range.
    pub clamped: usize,
}

/// Backward semi-Lagrangian step with the explicit mid-point rule.
pub fn bslm_step(g: &MovingGrid, model: &FluxModel, dt: f64) -> BslmStep {
    let mut order: Vec<usize> = (0..g.len()).collect();
    bslm_step_with_order(g, model, dt, &mut order)
}

fn bslm_step_with_order(g: &MovingGrid, model: &FluxModel, dt: f64, order: &mut [usize]) -> BslmStep {
    let now = SortedInterpolant::with_order(&g.x, &g.u, order);
    let predicted: Vec<f64> = g.x.iter().zip(&g.u).map(|(&x, &u)| x + dt * model.speed(u)).collect();
    let mut porder = order.to_vec();
    let next = SortedInterpolant::with_order(&predicted, &g.u, &mut porder);
    let mut clamped = 0;
    let x =
        g.x.iter()
            .zip(&g.u)
            .map(|(&x, &u)| {
                let mid = x + 0.5 * dt * model.speed(u);
                let (a, ca) = now.eval(mid);
                let (b, cb) = next.eval(mid);
                clamped += ca as usize + cb as usize;
                x + 0.5 * dt * (model.speed(a) + model.speed(b))
            })
            .collect();
    BslmStep { grid: MovingGrid { t: g.t + dt, x, u: g.u.clone() }, clamped }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LagrangianScheme {
    Naive,
    Bslm,
}

#[derive(Debug, Clone)]
pub struct LagrangianRun {
    /// Recorded grids, every `record_every` steps starting from the initial one.
    pub grids: Vec<MovingGrid>,
    pub clamped: usize,
}

pub fn run_lagrangian(
    initial: &EulerianField,
    model: &FluxModel,
    scheme: LagrangianScheme,
    steps: usize,
    dt: f64,
    record_every: usize,
) -> LagrangianRun {
    let record_every = record_every.max(1);
    let mut g = MovingGrid::from_field(initial);
    let mut order: Vec<usize> = (0..g.len()).collect();
    let mut grids = vec![g.clone()];
    let mut clamped = 0;
    for n in 1..=steps {
        g = match scheme {
            LagrangianScheme::Naive => naive_lagrangian_step(&g, model, dt),
            LagrangianScheme::Bslm => {
                let s = bslm_step_with_order(&g, model, dt, &mut order);
                clamped += s.clamped;
                s.grid
            }
        };
        if n % record_every == 0 {
            grids.push(g.clone());
        }
    }
    LagrangianRun { grids, clamped }
}

/// Characteristic positions `x0(u) + t f(u)` of a branch before it overturns.
pub fn solve_characteristics(branch: &MonotoneBranch, model: &FluxModel, t: f64) -> Result<MovingGrid> {
    let onset = shock_formation_time(branch, model)?;
    if t >= onset.t_star {
        return Err(Error::ShockFormed { t_star: onset.t_star, t });
    }
    let u = branch.u_mesh();
    let x = branch.x_of_u.iter().zip(&u).map(|(&x, &u)| x + t * model.speed(u)).collect();
    MovingGrid::new(branch.t + t, x, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::burgers_flux;
    use crate::hodograph::Direction;

    fn field(values: Vec<f64>) -> EulerianField {
        let g = Grid1D::new(0.0, (values.len() - 1) as f64, values.len()).unwrap();
        EulerianField::new(g, 0.0, values).unwrap()
    }

    #[test]
    fn constant_state_is_stationary() {
        let f = field(vec![0.7; 6]);
        let next = upwind_step(&f, &burgers_flux(), 0.5, Ghosts::from_field(&f)).unwrap();
        assert_eq!(next.values, f.values);
    }

    #[test]
    fn hand_checked_riemann_step() {
        let f = field(vec![2.0, 2.0, 0.0, 0.0]);
        let next = upwind_step(&f, &burgers_flux(), 0.25, Ghosts::from_field(&f)).unwrap();
        assert_eq!(next.values[1], 2.0);
        assert_eq!(next.values[2], 0.5);
    }

    #[test]
    fn cfl_violation_reports_admissible_step() {
        let f = field(vec![2.0, 2.0, 0.0, 0.0]);
        match upwind_step(&f, &burgers_flux(), 0.6, Ghosts::from_field(&f)) {
            Err(Error::StepRejected { admissible_dt, .. }) => assert_eq!(admissible_dt, 0.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn run_returns_all_fields() {
        let g = Grid1D::new(0.0, 1.0, 11).unwrap();
        let fields = run_upwind(|_| 0.3, g, 4, 0.2, &burgers_flux()).unwrap();
        assert_eq!(fields.len(), 5);
        assert!(fields.iter().all(|f| f.values == fields[0].values));
        assert!((fields[4].t - 0.2).abs() < 1e-15);
    }

    #[test]
    fn substeps_cover_cfl() {
        let bl = crate::flux::buckley_leverett_flux(0.5).unwrap();
        let dx = 2.0 / 1999.0;
        assert_eq!(cfl_substeps(&[0.0, 1.0], dx, 0.0005, &bl, 0.9), 2);
        assert_eq!(cfl_substeps(&[0.0, 2.0], 2.0 * std::f64::consts::PI / 1999.0, 0.001, &burgers_flux(), 0.9), 1);
    }

    #[test]
    fn lagrangian_translation() {
        let g = MovingGrid::new(0.0, vec![0.0, 1.0, 2.0], vec![0.5; 3]).unwrap();
        let n = naive_lagrangian_step(&g, &burgers_flux(), 0.2);
        assert_eq!(n.x, vec![0.1, 1.1, 2.1]);
        let b = bslm_step(&g, &burgers_flux(), 0.2);
        for (x, y) in b.grid.x.iter().zip(&n.x) {
            assert!((x - y).abs() < 1e-15);
        }
        assert_eq!(b.grid.u, g.u);
        let one = MovingGrid::new(0.0, vec![3.0], vec![1.0]).unwrap();
        assert!((naive_lagrangian_step(&one, &burgers_flux(), 0.1).x[0] - 3.1).abs() < 1e-15);
    }

    #[test]
    fn bslm_hat_by_hand() {
        let g = MovingGrid::new(0.0, vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]).unwrap();
        let dt = 0.5;
        let s = bslm_step(&g, &burgers_flux(), dt);
        // node 1: x* = 1.25; u(1.25, t^n) = 0.75; predicted nodes 0, 1.5, 2 so u(1.25, t^{n+1}) = 1.25/1.5
        let expect1 = 1.0 + 0.25 * (0.75 + 1.25 / 1.5);
        assert!((s.grid.x[1] - expect1).abs() < 1e-15);
        // node 0: x* = 0; both lookups give 0
        assert_eq!(s.grid.x[0], 0.0);
        // node 2: x* = 2 (no motion), u = 0 on both grids
        assert_eq!(s.grid.x[2], 2.0);
        assert_eq!(s.clamped, 0);
    }

    #[test]
    fn characteristics_of_linear_branch() {
        let b = MonotoneBranch::from_inverse(
            Direction::Decreasing,
            -1.0,
            1.0,
            (0..11)
                .map(|k| {
                    let u = -1.0 + 0.2 * k as f64;
                    -u
                })
                .collect(),
            0.0,
        )
        .unwrap();
        let g = solve_characteristics(&b, &burgers_flux(), 0.5).unwrap();
        for (x, u) in g.x.iter().zip(&g.u) {
            assert!((x + 0.5 * u).abs() < 1e-14);
        }
        let g0 = solve_characteristics(&b, &burgers_flux(), 0.0).unwrap();
        assert_eq!(g0.x, b.x_of_u);
        assert!(matches!(solve_characteristics(&b, &burgers_flux(), 1.0), Err(Error::ShockFormed { .. })));
    }
}
