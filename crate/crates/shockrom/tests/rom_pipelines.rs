use proptest::prelude::*;
use shockrom::dmd::SnapshotMatrix;
use shockrom::flux::burgers_flux;
use shockrom::grid::{EulerianField, Grid1D};
use shockrom::hodograph::{decompose_monotone, shock_formation_time, MonotoneBranch};
use shockrom::rom::{
    lagrangian_dmd, lagrangian_pod, relative_l2_error, Closure, ExtractorSettings, ObservableExtractor,
    ObservableLayout, ShockComponents,
};
use shockrom::Category;

fn tanh_step(grid: Grid1D) -> EulerianField {
    EulerianField::from_fn(grid, 0.0, |x| 1.0 - ((x - 1.0) / 0.05).tanh()).unwrap()
}

fn shocked_layout(grid: Grid1D) -> (ObservableLayout, Vec<MonotoneBranch>, f64) {
    let model = burgers_flux();
    let d = decompose_monotone(&tanh_step(grid), 200).unwrap();
    assert_eq!(d.branches.len(), 1);
    let onset = shock_formation_time(&d.branches[0], &model).unwrap();
    let layout = ObservableLayout::new(
        d.left_state,
        d.right_state,
        &[(d.branches[0].clone(), 0)],
        Some((onset, ShockComponents::Triple, Closure::Tracked, 0)),
    )
    .unwrap();
    (layout, d.branches, onset.t_star)
}

// smeared step from 2 down to 0 over four cells centred at `xc`
fn ramp(grid: Grid1D, t: f64, xc: f64) -> EulerianField {
    let w = 2.0 * grid.dx();
    EulerianField::from_fn(grid, t, |x| (2.0 * (xc + w - x) / (2.0 * w)).clamp(0.0, 2.0)).unwrap()
}

#[test]
fn extractor_finds_a_decreasing_shock() {
    let grid = Grid1D::new(0.0, 2.0, 401).unwrap();
    let (layout, initial, t_star) = shocked_layout(grid);
    let mut ex = ObservableExtractor::new(&layout, &burgers_flux(), &initial, ExtractorSettings::default()).unwrap();
    let g = ex.observe(&ramp(grid, t_star + 0.5, 1.5)).unwrap();
    let s = &g[layout.shock_slots[0].offset..];
    assert!((s[0] - 1.5).abs() <= grid.dx(), "shock at {}", s[0]);
    assert_eq!((s[1], s[2]), (2.0, 0.0));
}

#[test]
fn extractor_uses_the_virtual_shock_before_breaking() {
    let grid = Grid1D::new(0.0, 2.0, 401).unwrap();
    let (layout, initial, t_star) = shocked_layout(grid);
    let mut ex = ObservableExtractor::new(&layout, &burgers_flux(), &initial, ExtractorSettings::default()).unwrap();
    let mut early = tanh_step(grid);
    early.t = 0.5 * t_star;
    let g = ex.observe(&early).unwrap();
    let s = &g[layout.shock_slots[0].offset..];
    let on = layout.shock_slots[0].onset;
    assert_eq!((s[1], s[2]), (on.u_star, on.u_star));
    // the inflection characteristic traced back from the breaking point
    let x = on.x_star - 0.5 * on.t_star * on.u_star;
    assert!((s[0] - x).abs() < 1e-12, "{} vs {x}", s[0]);
}

#[test]
fn extractor_rejects_a_changed_piece_count() {
    let grid = Grid1D::new(0.0, 2.0, 401).unwrap();
    let (layout, initial, _) = shocked_layout(grid);
    let mut ex = ObservableExtractor::new(&layout, &burgers_flux(), &initial, ExtractorSettings::default()).unwrap();
    let bump = EulerianField::from_fn(grid, 0.1, |x| (-(x - 1.0) * (x - 1.0) / 0.01).exp()).unwrap();
    let e = ex.observe(&bump).unwrap_err();
    assert_eq!(e.category(), Category::Numerical);
}

// nodes carried at constant speed: the node positions are exactly linear in time
fn translated(p: usize, m: usize, dt: f64) -> (SnapshotMatrix, Vec<f64>) {
    let u0: Vec<f64> = (0..p).map(|i| 0.2 + 0.6 * i as f64 / (p - 1) as f64).collect();
    let cols = (0..m)
        .map(|n| {
            let t = dt * (n + 1) as f64;
            (0..p).map(|i| 0.5 + i as f64 / (p - 1) as f64 + t * u0[i]).collect()
        })
        .collect();
    (SnapshotMatrix::new(cols, dt, dt).unwrap(), u0)
}

#[test]
fn lagrangian_dmd_is_exact_for_free_transport() {
    let grid = Grid1D::new(0.0, 3.0, 301).unwrap();
    let (snaps, u0) = translated(60, 30, 0.01);
    let rom = lagrangian_dmd(&snaps, &u0, 1e-10, &[0.5, 1.0], grid).unwrap();
    assert_eq!(rom.diagnostics.rank, Some(2));
    for (t, g) in rom.times.iter().zip(&rom.moving) {
        for (i, &x) in g.x.iter().enumerate() {
            let exact = 0.5 + i as f64 / 59.0 + t * u0[i];
            assert!((x - exact).abs() < 1e-8, "node {i} at t = {t}: {x} vs {exact}");
        }
        assert_eq!(g.inversions(), 0);
    }
}

#[test]
fn lagrangian_pod_steps_the_characteristics() {
    let grid = Grid1D::new(0.0, 3.0, 301).unwrap();
    let (snaps, u0) = translated(60, 30, 0.01);
    let model = burgers_flux();
    let rom = lagrangian_pod(&snaps, &u0, 1e-10, 0.01, &model, &[0.3, 0.8], grid).unwrap();
    for (t, g) in rom.times.iter().zip(&rom.moving) {
        assert!((g.t - t).abs() < 1e-12);
        for (i, &x) in g.x.iter().enumerate() {
            let exact = 0.5 + i as f64 / 59.0 + t * u0[i];
            assert!((x - exact).abs() < 1e-8);
        }
    }
}

#[test]
fn lagrangian_pod_rejects_bad_steps() {
    let grid = Grid1D::new(0.0, 3.0, 301).unwrap();
    let (snaps, u0) = translated(10, 5, 0.01);
    let e = lagrangian_pod(&snaps, &u0, 1e-10, 0.0, &burgers_flux(), &[0.1], grid).unwrap_err();
    assert_eq!(e.category(), Category::Config);
    let e = lagrangian_dmd(&snaps, &u0[1..], 1e-10, &[0.1], grid).unwrap_err();
    assert_eq!(e.category(), Category::Numerical);
}

proptest! {
    #[test]
    fn relative_error_is_scale_invariant(scale in 0.1f64..10.0, shift in -0.3f64..0.3) {
        let grid = Grid1D::new(0.0, 1.0, 101).unwrap();
        let r = EulerianField::from_fn(grid, 0.0, |x| 1.0 + x * x).unwrap();
        let c = EulerianField::from_fn(grid, 0.0, |x| 1.0 + x * x + shift * x).unwrap();
        let rs = EulerianField::from_fn(grid, 0.0, |x| scale * (1.0 + x * x)).unwrap();
        let cs = EulerianField::from_fn(grid, 0.0, |x| scale * (1.0 + x * x + shift * x)).unwrap();
        let a = relative_l2_error(&c, &r).unwrap().value;
        let b = relative_l2_error(&cs, &rs).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        prop_assert!(relative_l2_error(&r, &r).unwrap().value == 0.0);
    }
}
