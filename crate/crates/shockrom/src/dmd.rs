//! Exact dynamic mode decomposition.

use faer::linalg::solvers::Solve;
use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_EPS: f64 = 1e-4;
const SIGMA_FLOOR: f64 = 1e-14;
const GROWTH_TOL: f64 = 1e-6;
const GROWTH_LIMIT: f64 = 1e6;

/// Columns are states at `t0 + n dt`, `n = 0..M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    rows: usize,
    columns: Vec<Vec<f64>>,
    pub dt: f64,
    pub t0: f64,
}

impl SnapshotMatrix {
    pub fn new(columns: Vec<Vec<f64>>, dt: f64, t0: f64) -> Result<Self> {
        if columns.len() < 2 {
            return Err(Error::DegenerateData(format!("need at least 2 snapshots, got {}", columns.len())));
        }
        let rows = columns[0].len();
        if rows == 0 || columns.iter().any(|c| c.len() != rows) {
            return Err(Error::DegenerateData("snapshots must be nonempty and of equal length".into()));
        }
        if columns.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateData("snapshot entries must be finite".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::ParameterDomain(format!("snapshot cadence must be positive, got {dt}")));
        }
        Ok(Self { rows, columns, dt, t0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn column(&self, n: usize) -> &[f64] {
        &self.columns[n]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    fn block(&self, from: usize, to: usize) -> Mat<f64> {
        Mat::from_fn(self.rows, to - from, |i, j| self.columns[from + j][i])
    }

    pub fn singular_values(&self) -> Result<Vec<f64>> {
        let svd =
            self.block(0, self.len()).thin_svd().map_err(|e| Error::DegenerateData(format!("SVD failed: {e:?}")))?;
        let s = svd.S().column_vector();
        Ok((0..s.nrows()).map(|i| s[i]).collect())
    }
}

/// Number of singular values carrying at least a fraction `eps` of the total.
pub fn rank_truncate(singular_values: &[f64], eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::ParameterDomain(format!("truncation tolerance must lie in (0, 1), got {eps}")));
    }
    let total: f64 = singular_values.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateData("all singular values vanish".into()));
    }
    Ok(singular_values.iter().filter(|&&s| s / total >= eps).count().max(1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DmdModel {
    pub r: usize,
    pub eigenvalues: Vec<c64>,
    rows: usize,
    /// Column-major `rows x r`, unit-norm columns.
    modes: Vec<c64>,
    pub amplitudes: Vec<c64>,
    pub dt: f64,
    pub t0: f64,
    pub singular_values: Vec<f64>,
}

/// Fit a rank-truncated linear map between consecutive snapshots.
pub fn fit(snapshots: &SnapshotMatrix, eps: f64) -> Result<DmdModel> {
    let m = snapshots.len();
    if m < 3 {
        return Err(Error::DegenerateData(format!("DMD needs at least 3 snapshots, got {m}")));
    }
    let p = snapshots.rows();
    let y1 = snapshots.block(0, m - 1);
    let y2 = snapshots.block(1, m);
    let svd = y1.thin_svd().map_err(|e| Error::DegenerateData(format!("SVD failed: {e:?}")))?;
    let sv = svd.S().column_vector();
    let sigma: Vec<f64> = (0..sv.nrows()).map(|i| sv[i]).collect();
    let floor = SIGMA_FLOOR * sigma[0];
    let usable = sigma.iter().take_while(|&&s| s > floor).count();
    let r = rank_truncate(&sigma, eps)?.min(usable);
    if r == 0 {
        return Err(Error::DegenerateData("numerical rank of the snapshots is zero".into()));
    }
    let u = svd.U().subcols(0, r).to_owned();
    let v = svd.V().subcols(0, r).to_owned();
    let uty2 = u.transpose() * &y2;
    let mut k = uty2 * &v;
    for j in 0..r {
        let inv = 1.0 / sigma[j];
        for i in 0..r {
            k[(i, j)] *= inv;
        }
    }
    let eig = k.eigen().map_err(|e| Error::DegenerateData(format!("eigendecomposition failed: {e:?}")))?;
    let lam = eig.S().column_vector();
    let eigenvalues: Vec<c64> = (0..r).map(|i| lam[i]).collect();
    let w = eig.U().to_owned();

    let uc = Mat::<c64>::from_fn(p, r, |i, j| c64::new(u[(i, j)], 0.0));
    let phi = &uc * &w;
    let norms: Vec<f64> = (0..r).map(|j| (0..p).map(|i| phi[(i, j)].norm_sqr()).sum::<f64>().sqrt()).collect();
    if norms.iter().any(|&n| !(n > 0.0)) {
        return Err(Error::DegenerateData("zero DMD mode".into()));
    }
    let mut modes = Vec::with_capacity(p * r);
    for (j, &nj) in norms.iter().enumerate() {
        for i in 0..p {
            modes.push(phi[(i, j)] / nj);
        }
    }

    // least-squares amplitudes: b = D W^{-1} U^T y1
    let y0 = snapshots.column(0);
    let uty = Mat::<c64>::from_fn(r, 1, |i, _| c64::new((0..p).map(|l| u[(l, i)] * y0[l]).sum(), 0.0));
    let z = w.partial_piv_lu().solve(&uty);
    let amplitudes: Vec<c64> = (0..r).map(|j| z[(j, 0)] * norms[j]).collect();
    if amplitudes.iter().any(|b| !(b.re.is_finite() && b.im.is_finite())) {
        return Err(Error::DegenerateData("DMD amplitudes are not finite".into()));
    }

    Ok(DmdModel {
        r,
        eigenvalues,
        rows: p,
        modes,
        amplitudes,
        dt: snapshots.dt,
        t0: snapshots.t0,
        singular_values: sigma,
    })
}

impl DmdModel {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn mode(&self, j: usize) -> &[c64] {
        &self.modes[j * self.rows..(j + 1) * self.rows]
    }

    /// Continuous-time rates `ln(lambda) / dt`.
    pub fn rates(&self) -> Vec<c64> {
        self.eigenvalues.iter().map(|l| l.ln() / self.dt).collect()
    }

    fn combine(&self, coef: &[c64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        let mut imag = vec![0.0; self.rows];
        for (j, c) in coef.iter().enumerate() {
            for (i, phi) in self.mode(j).iter().enumerate() {
                let z = phi * c;
                out[i] += z.re;
                imag[i] += z.im;
            }
        }
        let re_norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
        let im_norm = imag.iter().map(|v| v * v).sum::<f64>().sqrt();
        if im_norm > 1e-8 * re_norm.max(f64::MIN_POSITIVE) {
            log::debug!("DMD reconstruction keeps imaginary residual {:.3e} of norm {:.3e}", im_norm, re_norm);
        }
        out
    }

    fn guard(&self, steps: f64) -> Result<()> {
        for (index, l) in self.eigenvalues.iter().enumerate() {
            let m = l.norm();
            if m > 1.0 + GROWTH_TOL && steps * m.ln() > GROWTH_LIMIT.ln() {
                return Err(Error::UnstableMode { index, modulus: m, step: steps.ceil() as usize + 1 });
            }
        }
        Ok(())
    }

    /// State at step `n`, where `n = 1` is the first training column.
    pub fn predict(&self, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::ParameterDomain("prediction steps start at 1".into()));
        }
        let k = (n - 1) as i32;
        self.guard(k as f64)?;
        let coef: Vec<c64> = self.eigenvalues.iter().zip(&self.amplitudes).map(|(l, b)| l.powi(k) * b).collect();
        Ok(self.combine(&coef))
    }

    /// State at an arbitrary time, through the continuous-time rates.
    pub fn predict_at_time(&self, t: f64) -> Result<Vec<f64>> {
        let tau = (t - self.t0) / self.dt;
        self.guard(tau.max(0.0))?;
        let coef: Vec<c64> =
            self.eigenvalues.iter().zip(&self.amplitudes).map(|(l, b)| (l.ln() * tau).exp() * b).collect();
        Ok(self.combine(&coef))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&DmdModelDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: DmdModelDoc = serde_json::from_str(text)?;
        doc.try_into()
    }
}

/// Largest relative 2-norm misfit between predictions and training columns.
pub fn reconstruction_error(model: &DmdModel, snapshots: &SnapshotMatrix) -> Result<f64> {
    if snapshots.rows() != model.rows() {
        return Err(Error::DegenerateData("model and snapshots differ in length".into()));
    }
    let mut worst = 0.0f64;
    for n in 0..snapshots.len() {
        let p = model.predict(n + 1)?;
        let y = snapshots.column(n);
        let num = p.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst = worst.max(if den > 0.0 { num / den } else { num });
    }
    Ok(worst)
}

#[derive(Debug, Serialize, Deserialize)]
struct DmdModelDoc {
    r: usize,
    rows: usize,
    eigenvalues: Vec<[f64; 2]>,
    modes: Vec<[f64; 2]>,
    amplitudes: Vec<[f64; 2]>,
    dt: f64,
    t0: f64,
    #[serde(default)]
    singular_values: Vec<f64>,
}

fn pairs(v: &[c64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn complexes(v: &[[f64; 2]]) -> Vec<c64> {
    v.iter().map(|p| c64::new(p[0], p[1])).collect()
}

impl From<&DmdModel> for DmdModelDoc {
    fn from(m: &DmdModel) -> Self {
        Self {
            r: m.r,
            rows: m.rows,
            eigenvalues: pairs(&m.eigenvalues),
            modes: pairs(&m.modes),
            amplitudes: pairs(&m.amplitudes),
            dt: m.dt,
            t0: m.t0,
            singular_values: m.singular_values.clone(),
        }
    }
}

impl TryFrom<DmdModelDoc> for DmdModel {
    type Error = Error;

    fn try_from(d: DmdModelDoc) -> Result<Self> {
        if d.r == 0 || d.eigenvalues.len() != d.r || d.amplitudes.len() != d.r || d.modes.len() != d.r * d.rows {
            return Err(Error::Config("inconsistent DMD model document".into()));
        }
        Ok(Self {
            r: d.r,
            eigenvalues: complexes(&d.eigenvalues),
            rows: d.rows,
            modes: complexes(&d.modes),
            amplitudes: complexes(&d.amplitudes),
            dt: d.dt,
            t0: d.t0,
            singular_values: d.singular_values,
        })
    }
}
