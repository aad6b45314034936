//! Built-in scenarios and run orchestration.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dmd::{SnapshotMatrix, DEFAULT_EPS};
use crate::error::{Error, Result};
use crate::flux::{buckley_leverett_flux, burgers_flux, welge_front, Convexity, FluxModel, SpeedBranch};
use crate::grid::{EulerianField, Grid1D};
use crate::hfm::{cfl_substeps, march_upwind, run_lagrangian, LagrangianScheme};
use crate::hodograph::{decompose_monotone, shock_formation_time, Direction, MonotoneBranch, ShockOnset};
use crate::rom::{
    analytic_riemann_observables, lagrangian_dmd, lagrangian_pod, physics_aware_dmd, relative_l2_error, split_branch,
    Closure, DecodeSettings, ExtractorSettings, ObservableExtractor, ObservableLayout, RomDiagnostics, RomResult,
    ShockComponents, TrainingSet,
};

/// Beyond this many widths from the jump a regularized step takes its exact values.
const TANH_CUTOFF: f64 = 20.0;
const CFL_SAFETY: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum InitialData {
    /// Step from `left` to `right` at `x_jump`, smoothed over a width `delta`.
    Riemann { left: f64, right: f64, x_jump: f64 },
    /// `base + amplitude * exp(-(x - center)^2 / width)`.
    Gaussian { base: f64, amplitude: f64, center: f64, width: f64 },
    /// `offset + sin(x)`.
    Sine { offset: f64 },
    /// Values at the grid nodes.
    Samples { values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSource {
    /// Exact characteristic positions of regularized Riemann data.
    Analytic,
    /// Snapshots of the first-order upwind solution.
    Upwind,
    /// Node trajectories of the semi-Lagrangian scheme.
    Bslm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub flux: FluxModel,
    pub domain: [f64; 2],
    /// Grid nodes, also the number of u-mesh points per branch.
    pub cells: usize,
    /// Time steps of the reference solver over `[0, t_predict]`.
    pub steps: usize,
    pub t_train: f64,
    pub t_predict: f64,
    /// Training snapshots, taken at `t_train / snapshots` spacing after `t = 0`.
    pub snapshots: usize,
    pub eps: f64,
    /// Smoothing width for Riemann data; defaults to ten cells.
    pub delta: Option<f64>,
    pub initial: InitialData,
    pub source: DataSource,
    /// Number of equally spaced output times in `(0, t_predict]`.
    #[serde(default = "default_outputs")]
    pub outputs: usize,
}

fn default_outputs() -> usize {
    5
}

impl Scenario {
    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.domain[0], self.domain[1], self.cells)
    }

    pub fn delta(&self) -> Result<f64> {
        Ok(self.delta.unwrap_or(10.0 * self.grid()?.dx()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("scenario {}: {m}", self.name)));
        self.flux.validate()?;
        self.grid()?;
        if !(self.t_train > 0.0 && self.t_train <= self.t_predict) {
            return bad(format!("need 0 < t_train <= t_predict, got {} and {}", self.t_train, self.t_predict));
        }
        if self.snapshots < 3 {
            return bad(format!("need at least 3 snapshots, got {}", self.snapshots));
        }
        if self.source != DataSource::Analytic && self.snapshots > self.steps {
            return bad(format!("{} snapshots exceed {} steps", self.snapshots, self.steps));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad(format!("eps must lie in (0, 1), got {}", self.eps));
        }
        if self.outputs == 0 || !self.steps.is_multiple_of(self.outputs) {
            return bad(format!("{} outputs do not divide {} steps", self.outputs, self.steps));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0) {
                return bad(format!("delta must be positive, got {d}"));
            }
        }
        if let InitialData::Samples { values } = &self.initial {
            if values.len() != self.cells {
                return bad(format!("{} samples for {} nodes", values.len(), self.cells));
            }
        }
        if self.source == DataSource::Analytic && !matches!(self.initial, InitialData::Riemann { .. }) {
            return bad("analytic data exist only for Riemann initial data".into());
        }
        if self.source == DataSource::Upwind {
            self.upwind_stride()?;
        }
        Ok(())
    }

    /// Reference steps between training snapshots.
    fn upwind_stride(&self) -> Result<usize> {
        let per = self.steps as f64 * self.t_train / self.t_predict / self.snapshots as f64;
        let stride = per.round();
        if stride < 1.0 || (per - stride).abs() > 1e-9 * per {
            return Err(Error::Config(format!(
                "scenario {}: {} snapshots to t = {} do not fall on the {} reference steps",
                self.name, self.snapshots, self.t_train, self.steps
            )));
        }
        Ok(stride as usize)
    }

    /// Apply a JSON object of field overrides.
    pub fn with_overrides(&self, overrides: &Value) -> Result<Scenario> {
        let Value::Object(map) = overrides else {
            return Err(Error::Config("scenario overrides must be a JSON object".into()));
        };
        let mut base = serde_json::to_value(self)?;
        if let Value::Object(target) = &mut base {
            for (k, v) in map {
                target.insert(k.clone(), v.clone());
            }
        }
        serde_json::from_value(base).map_err(|e| Error::Config(format!("invalid scenario override: {e}")))
    }

    pub fn initial_values(&self, grid: Grid1D) -> Result<Vec<f64>> {
        Ok(match &self.initial {
            InitialData::Riemann { left, right, x_jump } => {
                regularize_riemann(grid, *left, *right, *x_jump, self.delta()?)?
            }
            InitialData::Gaussian { base, amplitude, center, width } => {
                grid.sample(|x| base + amplitude * (-(x - center).powi(2) / width).exp())
            }
            InitialData::Sine { offset } => grid.sample(|x| offset + x.sin()),
            InitialData::Samples { values } => values.clone(),
        })
    }
}

/// Smooth step `u_mid - (du/2) tanh((x - x_jump) / delta)`, exact beyond twenty widths.
pub fn regularize_riemann(grid: Grid1D, left: f64, right: f64, x_jump: f64, delta: f64) -> Result<Vec<f64>> {
    if !(delta > 0.0) {
        return Err(Error::ParameterDomain(format!("smoothing width must be positive, got {delta}")));
    }
    if delta < 0.5 * grid.dx() {
        log::warn!("smoothing width {delta} is below half a cell ({}); the step is under-resolved", 0.5 * grid.dx());
    }
    let (mid, half) = (0.5 * (left + right), 0.5 * (left - right));
    Ok(grid.sample(|x| {
        let z = (x - x_jump) / delta;
        if z < -TANH_CUTOFF {
            left
        } else if z > TANH_CUTOFF {
            right
        } else {
            mid - half * z.tanh()
        }
    }))
}

/// Inverse of the smoothed step on a `p`-point cell-centred u-mesh; `None` for a constant state.
pub fn riemann_branch(left: f64, right: f64, x_jump: f64, delta: f64, p: usize) -> Result<Option<MonotoneBranch>> {
    if left == right {
        return Ok(None);
    }
    if p < 2 {
        return Err(Error::Resolution(format!("branch mesh needs at least 2 points, got {p}")));
    }
    let (lo, hi) = (left.min(right), left.max(right));
    let h = (hi - lo) / p as f64;
    let (mid, half) = (0.5 * (left + right), 0.5 * (left - right));
    let x = (0..p).map(|k| x_jump + delta * ((mid - (lo + h * (k as f64 + 0.5))) / half).atanh()).collect();
    let direction = if left > right { Direction::Decreasing } else { Direction::Increasing };
    MonotoneBranch::from_inverse(direction, lo + 0.5 * h, hi - 0.5 * h, x, 0.0).map(Some)
}

/// Entropy solution of a Riemann problem for a flux with increasing speed.
pub fn riemann_exact(model: &FluxModel, left: f64, right: f64, x_jump: f64, x: f64, t: f64) -> f64 {
    let xi = if t > 0.0 { (x - x_jump) / t } else { (x - x_jump).signum() * f64::INFINITY };
    if left > right {
        return if xi < model.shock_speed(left, right) { left } else { right };
    }
    if xi <= model.speed(left) {
        left
    } else if xi >= model.speed(right) {
        right
    } else {
        model.inverse_speed(xi, SpeedBranch::Rising).unwrap_or(if xi < 0.0 { left } else { right })
    }
}

/// First point where the field falls through `level`, by linear interpolation.
pub fn level_crossing(field: &EulerianField, level: f64) -> Option<f64> {
    let xs = field.grid.coordinates();
    let v = &field.values;
    (1..v.len())
        .find(|&j| v[j - 1] > level && v[j] <= level)
        .map(|j| xs[j - 1] + (v[j - 1] - level) / (v[j - 1] - v[j]) * (xs[j] - xs[j - 1]))
}

/// The five built-in scenarios.
pub fn builtin_scenarios() -> Vec<Scenario> {
    let base = |name: &str, flux: FluxModel, domain: [f64; 2], initial: InitialData, source: DataSource| Scenario {
        name: name.into(),
        flux,
        domain,
        cells: 2000,
        steps: 1000,
        t_train: 0.25,
        t_predict: 1.0,
        snapshots: 250,
        eps: DEFAULT_EPS,
        delta: None,
        initial,
        source,
        outputs: default_outputs(),
    };
    let burgers = burgers_flux();
    vec![
        Scenario {
            steps: 2500,
            ..base(
                "riemann-shock",
                burgers,
                [-0.5, 1.5],
                InitialData::Riemann { left: 2.0, right: 0.0, x_jump: 0.0 },
                DataSource::Analytic,
            )
        },
        Scenario {
            delta: Some(2.0 * 2.0 / 1999.0),
            ..base(
                "riemann-rarefaction",
                burgers,
                [-1.0, 1.0],
                InitialData::Riemann { left: -1.0, right: 1.0, x_jump: 0.0 },
                DataSource::Analytic,
            )
        },
        base(
            "smooth-sine",
            burgers,
            [0.0, 2.0 * std::f64::consts::PI],
            InitialData::Sine { offset: 1.0 },
            DataSource::Upwind,
        ),
        Scenario {
            steps: 100_000,
            t_train: 0.45,
            snapshots: 3000,
            ..base(
                "gaussian-mixed",
                burgers,
                [0.0, 2.0],
                InitialData::Gaussian { base: 0.5, amplitude: 0.5, center: 0.3, width: 0.01 },
                DataSource::Upwind,
            )
        },
        Scenario {
            t_train: 0.125,
            t_predict: 0.5,
            ..base(
                "buckley-leverett",
                buckley_leverett_flux(0.5).expect("positive mobility"),
                [0.0, 2.0],
                InitialData::Riemann { left: 1.0, right: 0.0, x_jump: 1.0 },
                DataSource::Upwind,
            )
        },
    ]
}

pub fn find_scenario(name: &str) -> Result<Scenario> {
    builtin_scenarios().into_iter().find(|s| s.name == name).ok_or_else(|| Error::UnknownScenario(name.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    UpwindOnly,
    LagrangianDmd,
    LagrangianPod,
    PhysicsDmd,
}

impl Pipeline {
    pub const ALL: [Pipeline; 4] =
        [Pipeline::UpwindOnly, Pipeline::LagrangianDmd, Pipeline::LagrangianPod, Pipeline::PhysicsDmd];

    pub fn as_str(self) -> &'static str {
        match self {
            Pipeline::UpwindOnly => "upwind-only",
            Pipeline::LagrangianDmd => "lagrangian-dmd",
            Pipeline::LagrangianPod => "lagrangian-pod",
            Pipeline::PhysicsDmd => "physics-dmd",
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Pipeline::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown pipeline {s:?}")))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunDiagnostics {
    pub scenario: Scenario,
    pub pipeline: Pipeline,
    pub grid: Grid1D,
    pub delta: Option<f64>,
    /// Upwind sub-steps per reference step.
    pub substeps: usize,
    /// `"analytic"` or `"upwind"`.
    pub reference: &'static str,
    pub t_star: Option<f64>,
    pub front_saturation: Option<f64>,
    pub layout: Option<ObservableLayout>,
    pub times: Vec<f64>,
    /// Upwind error against the reference at each output time.
    pub hfm_errors: Vec<f64>,
    pub rom: RomDiagnostics,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub times: Vec<f64>,
    pub reference: Vec<EulerianField>,
    pub rom: Vec<EulerianField>,
    pub diagnostics: RunDiagnostics,
}

/// Run `pipeline` on `scenario`; errors carry the scenario name.
pub fn run(scenario: &Scenario, pipeline: Pipeline) -> Result<RunReport> {
    run_inner(scenario, pipeline).map_err(|e| e.in_scenario(&scenario.name))
}

/// Run and write `out` (CSV) plus a `.diagnostics.json` sidecar next to it.
pub fn execute(scenario: &Scenario, pipeline: Pipeline, out: &Path) -> Result<RunReport> {
    let report = run(scenario, pipeline)?;
    write_outputs(&report, out).map_err(|e| e.in_scenario(&scenario.name))?;
    Ok(report)
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("diagnostics.json")
}

pub fn write_outputs(report: &RunReport, out: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(out)?;
    w.write_record(["t", "x", "u_ref", "u_rom"])?;
    for (r, c) in report.reference.iter().zip(&report.rom) {
        for (j, x) in r.grid.coordinates().into_iter().enumerate() {
            w.write_record([r.t.to_string(), x.to_string(), r.values[j].to_string(), c.values[j].to_string()])?;
        }
    }
    w.flush()?;
    let mut side = BufWriter::new(File::create(sidecar_path(out))?);
    serde_json::to_writer_pretty(&mut side, &report.diagnostics)?;
    side.write_all(b"\n")?;
    side.flush()?;
    Ok(())
}

struct Setup {
    layout: ObservableLayout,
    initial: Vec<MonotoneBranch>,
    front_saturation: Option<f64>,
}

/// Observable layout from the initial data: one slot per monotone branch, plus a shock
/// slot on the single branch that breaks before the prediction horizon.
fn physics_setup(scenario: &Scenario, grid: Grid1D, u0: &[f64]) -> Result<Setup> {
    let model = &scenario.flux;
    let p = scenario.cells;
    if scenario.source == DataSource::Analytic {
        let InitialData::Riemann { left, right, x_jump } = scenario.initial else {
            return Err(Error::Config("analytic data exist only for Riemann initial data".into()));
        };
        if model.convexity() != Convexity::MonotoneConvex {
            return Err(Error::Config("analytic data need a convex flux".into()));
        }
        let branch = riemann_branch(left, right, x_jump, scenario.delta()?, p)?
            .ok_or_else(|| Error::DegenerateData("constant Riemann data carry no dynamics".into()))?;
        let shock = if left > right {
            let onset = shock_formation_time(&branch, model)?;
            Some((onset, ShockComponents::Position { upper: left, lower: right }, Closure::Learned, 0))
        } else {
            None
        };
        let layout = ObservableLayout::new(left, right, &[(branch.clone(), 0)], shock)?;
        return Ok(Setup { layout, initial: vec![branch], front_saturation: None });
    }

    let field = EulerianField::new(grid, 0.0, u0.to_vec())?;
    let dec = decompose_monotone(&field, p)?;
    if model.convexity() == Convexity::SShaped {
        let [branch] = dec.branches.as_slice() else {
            return Err(Error::Config(format!(
                "an S-shaped flux needs monotone initial data, got {} pieces",
                dec.branches.len()
            )));
        };
        if branch.direction != Direction::Decreasing {
            return Err(Error::Config("an S-shaped flux is supported for decreasing data only".into()));
        }
        let hull = welge_front(model, dec.left_state, dec.right_state)?;
        let u_f = hull.front_saturation;
        // above the front value the data spread as a rarefaction, below it they fold into the shock
        let (rare, shocked) = split_branch(branch, u_f, p)?;
        let onset = shock_formation_time(&shocked, model)?;
        let layout = ObservableLayout::new(
            dec.left_state,
            dec.right_state,
            &[(rare.clone(), 0), (shocked.clone(), 0)],
            Some((onset, ShockComponents::Triple, Closure::Tracked, 0)),
        )?;
        let initial = vec![rare, shocked];
        return Ok(Setup { layout, initial, front_saturation: Some(u_f) });
    }

    let onsets = dec.branches.iter().map(|b| shock_formation_time(b, model)).collect::<Result<Vec<ShockOnset>>>()?;
    let breaking: Vec<usize> = (0..onsets.len()).filter(|&i| onsets[i].t_star < scenario.t_predict).collect();
    if breaking.len() > 1 {
        return Err(Error::Config(format!(
            "{} branches break before t = {}; only one shock is supported",
            breaking.len(),
            scenario.t_predict
        )));
    }
    let shock = breaking.first().map(|&i| (onsets[i], ShockComponents::Triple, Closure::Tracked, i));
    let slots: Vec<(MonotoneBranch, usize)> = dec.branches.iter().cloned().zip(0..).collect();
    let layout = ObservableLayout::new(dec.left_state, dec.right_state, &slots, shock)?;
    Ok(Setup { layout, initial: dec.branches, front_saturation: None })
}

fn run_inner(scenario: &Scenario, pipeline: Pipeline) -> Result<RunReport> {
    scenario.validate()?;
    let model = scenario.flux;
    let grid = scenario.grid()?;
    let u0 = scenario.initial_values(grid)?;
    let dt = scenario.t_predict / scenario.steps as f64;
    let dts = scenario.t_train / scenario.snapshots as f64;
    let out_every = scenario.steps / scenario.outputs;
    let times: Vec<f64> = (1..=scenario.outputs).map(|k| (k * out_every) as f64 * dt).collect();
    let substeps = cfl_substeps(&u0, grid.dx(), dt, &model, CFL_SAFETY);

    let setup = match pipeline {
        Pipeline::PhysicsDmd => Some(physics_setup(scenario, grid, &u0)?),
        _ => None,
    };
    let mut extractor = match (&setup, scenario.source) {
        (Some(s), DataSource::Upwind) => {
            Some(ObservableExtractor::new(&s.layout, &model, &s.initial, ExtractorSettings::default())?)
        }
        (Some(_), DataSource::Bslm) => {
            return Err(Error::Config("the physics-aware pipeline reads analytic or upwind data".into()))
        }
        _ => None,
    };
    let stride = if extractor.is_some() { scenario.upwind_stride()? } else { usize::MAX };

    let clock = std::time::Instant::now();
    // one upwind march supplies the output fields and, when needed, the training snapshots
    let mut upwind = Vec::with_capacity(times.len());
    let mut columns = Vec::new();
    let mut failure = None;
    let initial = EulerianField::new(grid, 0.0, u0.clone())?;
    march_upwind(initial, &model, scenario.steps, scenario.t_predict, substeps, |n, field| {
        if n > 0 && n % out_every == 0 {
            upwind.push(field.clone());
        }
        if let Some(ex) = extractor.as_mut() {
            if n > 0 && n % stride == 0 && n / stride <= scenario.snapshots && failure.is_none() {
                match ex.observe(field) {
                    Ok(g) => columns.push(g),
                    Err(e) => failure = Some(e),
                }
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    log::debug!("{}: upwind march and extraction took {:?}", scenario.name, clock.elapsed());

    let (reference, reference_kind) = match (scenario.source, &scenario.initial) {
        (DataSource::Analytic, InitialData::Riemann { left, right, x_jump }) => {
            let exact = times
                .iter()
                .map(|&t| EulerianField::from_fn(grid, t, |x| riemann_exact(&model, *left, *right, *x_jump, x, t)))
                .collect::<Result<Vec<_>>>()?;
            (exact, "analytic")
        }
        _ => (upwind.clone(), "upwind"),
    };
    let hfm_errors =
        upwind.iter().zip(&reference).map(|(u, r)| relative_l2_error(u, r).map(|e| e.value)).collect::<Result<_>>()?;

    let mut rom = match pipeline {
        Pipeline::UpwindOnly => RomResult {
            times: times.clone(),
            fields: upwind.clone(),
            moving: Vec::new(),
            diagnostics: RomDiagnostics { training_window: (0.0, scenario.t_predict), ..Default::default() },
        },
        Pipeline::PhysicsDmd => {
            let setup = setup.as_ref().expect("physics setup");
            let snapshots = match scenario.source {
                DataSource::Analytic => {
                    let InitialData::Riemann { left, right, x_jump } = scenario.initial else { unreachable!() };
                    let line = (left > right).then(|| (x_jump, model.shock_speed(left, right)));
                    analytic_riemann_observables(
                        &setup.initial,
                        &setup.layout,
                        &model,
                        line,
                        dts,
                        dts,
                        scenario.snapshots,
                    )?
                }
                _ => SnapshotMatrix::new(columns, dts, dts)?,
            };
            let training = TrainingSet { layout: setup.layout.clone(), snapshots };
            let settings = DecodeSettings { eps: scenario.eps, ..Default::default() };
            physics_aware_dmd(&training, &model, grid, &times, settings)?
        }
        Pipeline::LagrangianDmd | Pipeline::LagrangianPod => {
            // semi-Lagrangian steps no longer than the reference step, landing on every snapshot
            let sub = (dts / dt - 1e-9).ceil().max(1.0) as usize;
            let h = dts / sub as f64;
            let initial = EulerianField::new(grid, 0.0, u0.clone())?;
            let run = run_lagrangian(&initial, &model, LagrangianScheme::Bslm, sub * scenario.snapshots, h, sub);
            let cols: Vec<Vec<f64>> = run.grids[1..].iter().map(|g| g.x.clone()).collect();
            let snaps = SnapshotMatrix::new(cols, dts, dts)?;
            let mut r = if pipeline == Pipeline::LagrangianDmd {
                lagrangian_dmd(&snaps, &u0, scenario.eps, &times, grid)?
            } else {
                lagrangian_pod(&snaps, &u0, scenario.eps, dts, &model, &times, grid)?
            };
            if run.clamped > 0 {
                r.diagnostics.notes.push(format!("{} semi-Lagrangian lookups clamped to the node range", run.clamped));
            }
            r
        }
    };
    rom.score(&reference)?;
    log::debug!("{}: {pipeline} finished after {:?}", scenario.name, clock.elapsed());

    let diagnostics = RunDiagnostics {
        scenario: scenario.clone(),
        pipeline,
        grid,
        delta: matches!(scenario.initial, InitialData::Riemann { .. }).then(|| scenario.delta()).transpose()?,
        substeps,
        reference: reference_kind,
        t_star: setup.as_ref().and_then(|s| s.layout.shock_slots.first()).map(|s| s.onset.t_star),
        front_saturation: setup.as_ref().and_then(|s| s.front_saturation),
        layout: setup.map(|s| s.layout),
        times: times.clone(),
        hfm_errors,
        rom: rom.diagnostics,
    };
    Ok(RunReport { times, reference, rom: rom.fields, diagnostics })
}
