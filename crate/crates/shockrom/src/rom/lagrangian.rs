use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::dmd::{fit, rank_truncate, SnapshotMatrix};
use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::grid::{EulerianField, Grid1D, MovingGrid, SortedInterpolant};

use super::{RomDiagnostics, RomResult};

fn to_field(grid: Grid1D, g: &MovingGrid) -> Result<EulerianField> {
    let s = SortedInterpolant::new(&g.x, &g.u);
    EulerianField::new(grid, g.t, grid.sample(|x| s.eval(x).0))
}

/// DMD on node positions; every predicted node keeps its initial value.
pub fn lagrangian_dmd(
    snapshot_grids: &SnapshotMatrix,
    u0: &[f64],
    eps: f64,
    times: &[f64],
    grid: Grid1D,
) -> Result<RomResult> {
    if u0.len() != snapshot_grids.rows() {
        return Err(Error::DegenerateData("initial values and node count differ".into()));
    }
    let dmd = fit(snapshot_grids, eps)?;
    let mut moving = Vec::with_capacity(times.len());
    let mut fields = Vec::with_capacity(times.len());
    let mut inversions = Vec::with_capacity(times.len());
    for &t in times {
        let g = MovingGrid::new(t, dmd.predict_at_time(t)?, u0.to_vec())?;
        inversions.push(g.inversions());
        fields.push(to_field(grid, &g)?);
        moving.push(g);
    }
    let last = snapshot_grids.len() - 1;
    let diagnostics = RomDiagnostics {
        rank: Some(dmd.r),
        training_window: (snapshot_grids.t0, snapshot_grids.time(last)),
        eigenvalues: dmd.eigenvalues.iter().map(|l| [l.re, l.im]).collect(),
        grid_inversions: inversions,
        ..Default::default()
    };
    Ok(RomResult { times: times.to_vec(), fields, moving, diagnostics })
}

const NEWTON_ITERS: usize = 50;

/// POD-Galerkin model of the implicit Lagrangian update `x' = x + dt f(u)`.
///
/// The residual is projected on the leading left singular vectors of the snapshots
/// and solved by Newton iteration with a finite-difference Jacobian.
/// Times before the first snapshot are clamped to it.
pub fn lagrangian_pod(
    snapshot_grids: &SnapshotMatrix,
    u0: &[f64],
    eps: f64,
    dt: f64,
    model: &FluxModel,
    times: &[f64],
    grid: Grid1D,
) -> Result<RomResult> {
    let p = snapshot_grids.rows();
    if u0.len() != p {
        return Err(Error::DegenerateData("initial values and node count differ".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::ParameterDomain(format!("POD step must be positive, got {dt}")));
    }
    let data = Mat::from_fn(p, snapshot_grids.len(), |i, j| snapshot_grids.column(j)[i]);
    let svd = data.thin_svd().map_err(|e| Error::DegenerateData(format!("SVD failed: {e:?}")))?;
    let sv = svd.S().column_vector();
    let sigma: Vec<f64> = (0..sv.nrows()).map(|i| sv[i]).collect();
    let r = rank_truncate(&sigma, eps)?;
    let basis = svd.U().subcols(0, r).to_owned();

    let project = |v: &[f64]| -> Vec<f64> { (0..r).map(|k| (0..p).map(|i| basis[(i, k)] * v[i]).sum()).collect() };
    let lift = |c: &[f64]| -> Vec<f64> { (0..p).map(|i| (0..r).map(|k| basis[(i, k)] * c[k]).sum()).collect() };
    let velocity: Vec<f64> = u0.iter().map(|&u| model.speed(u)).collect();

    let residual = |c: &[f64], prev: &[f64]| -> Vec<f64> {
        let x = lift(c);
        let full: Vec<f64> = (0..p).map(|i| x[i] - prev[i] - dt * velocity[i]).collect();
        project(&full)
    };
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();

    let t0 = snapshot_grids.t0;
    let mut coef = project(snapshot_grids.column(0));
    let mut x = lift(&coef);

    // the projected residual is affine in the coefficients, so one finite-difference
    // Jacobian serves every step
    let base = residual(&coef, &x);
    let h = 1e-7 * (1.0 + norm(&coef));
    let mut jac = Mat::<f64>::zeros(r, r);
    for j in 0..r {
        let mut cp = coef.clone();
        cp[j] += h;
        let rp = residual(&cp, &x);
        for i in 0..r {
            jac[(i, j)] = (rp[i] - base[i]) / h;
        }
    }
    let lu = jac.partial_piv_lu();

    let mut step = 0usize;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let target = ((t - t0) / dt).round().max(0.0) as usize;
        while step < target {
            let prev = x.clone();
            let mut c = coef.clone();
            let tol = 1e-10 * (1.0 + norm(&prev));
            let mut res = residual(&c, &prev);
            let mut iters = 0;
            while norm(&res) > tol {
                if iters == NEWTON_ITERS || !norm(&res).is_finite() {
                    return Err(Error::PodDiverged { step: step + 1, residual: norm(&res) });
                }
                let rhs = Mat::from_fn(r, 1, |i, _| -res[i]);
                let delta = lu.solve(&rhs);
                for j in 0..r {
                    c[j] += delta[(j, 0)];
                }
                res = residual(&c, &prev);
                iters += 1;
            }
            coef = c;
            x = lift(&coef);
            step += 1;
        }
        out.push(MovingGrid::new(t0 + step as f64 * dt, x.clone(), u0.to_vec())?);
    }
    let fields = out.iter().map(|g| to_field(grid, g)).collect::<Result<Vec<_>>>()?;
    let last = snapshot_grids.len() - 1;
    let diagnostics = RomDiagnostics {
        rank: Some(r),
        training_window: (t0, snapshot_grids.time(last)),
        grid_inversions: out.iter().map(|g| g.inversions()).collect(),
        ..Default::default()
    };
    Ok(RomResult { times: times.to_vec(), fields, moving: out, diagnostics })
}
