//! Hodograph representation `x(t, u)` of solutions, shock formation and tracking.

mod branch;
mod profile;
mod shock;

pub use branch::{
    decompose_monotone, evolve_branch, invert_samples, monotone_pieces, Decomposition, Direction, MonotoneBranch,
    RawPiece,
};
pub use profile::{assemble_solution, HodographProfile, ProfilePiece};
pub use shock::{
    advance_shock_limits, advance_shock_position, shock_formation_time, track_shock, ShockOnset, ShockState,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::flux::{buckley_leverett_flux, burgers_flux, welge_front};
    use crate::grid::{EulerianField, Grid1D};
    use std::f64::consts::PI;

    fn tanh_branch(delta: f64, p: usize) -> MonotoneBranch {
        let h = 2.0 / p as f64;
        let x = (0..p)
            .map(|k| {
                let u = h * (k as f64 + 0.5);
                0.5 * delta * ((2.0 - u) / u).ln()
            })
            .collect();
        MonotoneBranch::from_inverse(Direction::Decreasing, 0.5 * h, 2.0 - 0.5 * h, x, 0.0).unwrap()
    }

    fn linear_branch(p: usize) -> MonotoneBranch {
        let x = (0..p).map(|k| -(-1.0 + 2.0 * k as f64 / (p - 1) as f64)).collect();
        MonotoneBranch::from_inverse(Direction::Decreasing, -1.0, 1.0, x, 0.0).unwrap()
    }

    #[test]
    fn sine_splits_into_three() {
        let g = Grid1D::new(0.0, 2.0 * PI, 2000).unwrap();
        let f = EulerianField::from_fn(g, 0.0, |x| 1.0 + x.sin()).unwrap();
        let d = decompose_monotone(&f, 500).unwrap();
        assert_eq!(d.branches.len(), 3);
        let dirs: Vec<_> = d.branches.iter().map(|b| b.direction).collect();
        assert_eq!(dirs, vec![Direction::Increasing, Direction::Decreasing, Direction::Increasing]);
        assert!((d.extents[0].1 - PI / 2.0).abs() <= g.dx());
        assert!((d.extents[1].1 - 1.5 * PI).abs() <= g.dx());
        assert_eq!(d.extents[0].1, d.extents[1].0);
    }

    #[test]
    fn gaussian_splits_at_peak() {
        let g = Grid1D::new(0.0, 2.0, 2000).unwrap();
        let f = EulerianField::from_fn(g, 0.0, |x| 0.5 + 0.5 * (-(x - 0.3f64).powi(2) / 0.01).exp()).unwrap();
        let d = decompose_monotone(&f, 500).unwrap();
        assert_eq!(d.branches.len(), 2);
        assert!((d.extents[0].1 - 0.3).abs() <= g.dx());
        assert_eq!(d.right_state, 0.5);
    }

    #[test]
    fn decreasing_is_one_branch_and_plateaus_fail() {
        let g = Grid1D::new(0.0, 1.0, 50).unwrap();
        let f = EulerianField::from_fn(g, 0.0, |x| 1.0 - x).unwrap();
        assert_eq!(decompose_monotone(&f, 50).unwrap().branches.len(), 1);
        let f = EulerianField::from_fn(g, 0.0, |x| if (0.4..0.6).contains(&x) { 0.5 } else { 1.0 - x }).unwrap();
        assert!(matches!(decompose_monotone(&f, 50), Err(Error::NonInvertible { .. })));
    }

    #[test]
    fn tanh_breaking_time() {
        let delta = 0.01;
        let on = shock_formation_time(&tanh_branch(delta, 2000), &burgers_flux()).unwrap();
        assert!((on.t_star - delta).abs() <= 1e-6);
        assert!((on.u_star - 1.0).abs() <= 1e-12);
        assert!((on.curvature - 2.0 * delta).abs() <= 1e-3 * delta);
    }

    #[test]
    fn linear_breaking_time_and_tie() {
        let on = shock_formation_time(&linear_branch(101), &burgers_flux()).unwrap();
        assert!((on.t_star - 1.0).abs() <= 1e-12);
        assert!(on.u_star.abs() <= 1e-12);
    }

    #[test]
    fn rarefaction_never_breaks_and_coarse_fails() {
        let x = (0..20).map(|k| k as f64).collect();
        let b = MonotoneBranch::from_inverse(Direction::Increasing, 0.0, 1.0, x, 0.0).unwrap();
        assert!(shock_formation_time(&b, &burgers_flux()).unwrap().t_star.is_infinite());
        let x = (0..4).map(|k| -(k as f64)).collect();
        let b = MonotoneBranch::from_inverse(Direction::Decreasing, 0.0, 1.0, x, 0.0).unwrap();
        assert!(matches!(shock_formation_time(&b, &burgers_flux()), Err(Error::Resolution(_))));
    }

    #[test]
    fn breaking_detected_by_evolution() {
        let b = tanh_branch(0.01, 400);
        let on = shock_formation_time(&b, &burgers_flux()).unwrap();
        let dt = 1e-4;
        let mut cur = b.clone();
        let mut n = 0;
        while cur.is_strictly_monotone() {
            cur = evolve_branch(&cur, &burgers_flux(), dt);
            n += 1;
        }
        let detected = n as f64 * dt;
        assert!((detected - on.t_star).abs() <= dt, "{detected} vs {}", on.t_star);
    }

    #[test]
    fn evolution_shifts_by_speed() {
        let b = linear_branch(11);
        assert_eq!(evolve_branch(&b, &burgers_flux(), 0.0).x_of_u, b.x_of_u);
        let e = evolve_branch(&b, &burgers_flux(), 0.2);
        // u = 0.6 at k = 8
        assert!((e.x_of_u[8] - b.x_of_u[8] - 0.2 * 0.6).abs() < 1e-15);
        let s0 = b.slopes();
        let s1 = e.slopes();
        for k in 0..11 {
            assert!((s1[k] - (s0[k] + 0.2)).abs() < 1e-12);
        }
    }

    fn odd_cubic(p: usize) -> MonotoneBranch {
        // x0(u) = -(u - 1) - (u - 1)^3 on [0, 2]: t* = 1 at u* = 1, x* = 1
        let x = (0..p)
            .map(|k| {
                let v = 2.0 * k as f64 / (p - 1) as f64 - 1.0;
                -v - v * v * v
            })
            .collect();
        MonotoneBranch::from_inverse(Direction::Decreasing, 0.0, 2.0, x, 0.0).unwrap()
    }

    #[test]
    fn onset_state_starts_at_inflection() {
        let b = odd_cubic(2001);
        let on = shock_formation_time(&b, &burgers_flux()).unwrap();
        let s = ShockState::at_onset(&on);
        assert_eq!((s.u1, s.u2), (on.u_star, on.u_star));
        assert!((on.t_star - 1.0).abs() < 1e-5);
        // the u* characteristic starts at x = 0 with unit speed
        assert!((on.x_star - 1.0).abs() < 1e-5);
    }

    #[test]
    fn symmetric_limits_stay_symmetric_and_monotone() {
        let b = odd_cubic(2001);
        let m = burgers_flux();
        let on = shock_formation_time(&b, &m).unwrap();
        let mut s = ShockState::at_onset(&on);
        let mut prev = s;
        for _ in 0..200 {
            s = advance_shock_limits(&s, (&b, &b), &m, 2e-3, on.curvature).unwrap();
            assert!(((s.u1 + s.u2) - 2.0 * on.u_star).abs() <= 1e-8);
            assert!(s.u1 >= prev.u1 && s.u2 <= prev.u2);
            assert!(s.u1 >= on.u_star && s.u2 <= on.u_star);
            prev = s;
        }
        // exact upper limit meets the shock at x* = t: u1 - 1 = sqrt(t - 1)
        let expect = 1.0 + (s.t - 1.0).sqrt();
        assert!((s.u1 - expect).abs() < 2e-3, "{} vs {expect}", s.u1);
    }

    #[test]
    fn rails_hold_for_riemann_limits() {
        let b = tanh_branch(0.01, 2000);
        let m = burgers_flux();
        let mut s = ShockState { t_star: 0.01, u_star: 1.0, t: 0.5, x_star: 0.5, u1: b.u_hi, u2: b.u_lo };
        for _ in 0..100 {
            s = advance_shock_limits(&s, (&b, &b), &m, 1e-2, 0.02).unwrap();
            assert!((s.u1 - b.u_hi).abs() <= 1e-6 && (s.u2 - b.u_lo).abs() <= 1e-6);
        }
    }

    #[test]
    fn shock_position_speeds() {
        let m = burgers_flux();
        let s = ShockState { t_star: 0.0, u_star: 1.0, t: 0.0, x_star: 0.0, u1: 2.0, u2: 0.0 };
        let n = advance_shock_position(&s, &m, 0.5).unwrap();
        assert!((n.x_star - 0.5).abs() < 1e-15);
        let bl = buckley_leverett_flux(0.5).unwrap();
        let uf = welge_front(&bl, 1.0, 0.0).unwrap().front_saturation;
        let s = ShockState { u1: uf, u2: 0.0, ..s };
        assert!((s.speed(&bl) - bl.speed(uf)).abs() < 1e-10);
        let v = ShockState { u1: 1e-15, u2: 0.0, ..s };
        assert!(matches!(advance_shock_position(&v, &m, 0.1), Err(Error::ShockVanished { .. })));
    }

    fn riemann_profile(t: f64, delta: f64) -> HodographProfile {
        let b = evolve_branch(&tanh_branch(delta, 2000), &burgers_flux(), t);
        HodographProfile::from_branches(t, 2.0, 0.0, &[b])
    }

    #[test]
    fn assembled_riemann_shock() {
        let g = Grid1D::new(-0.5, 1.5, 2001).unwrap();
        let t = 0.5;
        let s = ShockState { t_star: 0.01, u_star: 1.0, t, x_star: 0.5, u1: 2.0, u2: 0.0 };
        let f = assemble_solution(&riemann_profile(t, 0.01), &[s], g).unwrap();
        for j in 0..g.nodes {
            let x = g.x(j);
            if x < 0.5 - g.dx() {
                assert_eq!(f.values[j], 2.0, "x = {x}");
            } else if x > 0.5 + g.dx() {
                assert_eq!(f.values[j], 0.0, "x = {x}");
            }
        }
        assert!(matches!(assemble_solution(&riemann_profile(t, 0.01), &[], g), Err(Error::MultiValued { .. })));
    }

    #[test]
    fn assembled_fan_and_pre_shock() {
        let p = 4000;
        let h = 2.0 / p as f64;
        let delta = 1e-4;
        let x = (0..p)
            .map(|k| {
                let u = -1.0 + h * (k as f64 + 0.5);
                delta * u.atanh()
            })
            .collect();
        let b = MonotoneBranch::from_inverse(Direction::Increasing, -1.0 + 0.5 * h, 1.0 - 0.5 * h, x, 0.0).unwrap();
        let e = evolve_branch(&b, &burgers_flux(), 1.0);
        let prof = HodographProfile::from_branches(1.0, -1.0, 1.0, &[e]);
        let g = Grid1D::new(-1.0, 1.0, 2001).unwrap();
        let f = assemble_solution(&prof, &[], g).unwrap();
        let err = (0..g.nodes).map(|j| (f.values[j] - g.x(j)).abs()).fold(0.0, f64::max);
        assert!(err < 2e-3, "{err}");

        // before breaking the assembled field is the transported data
        let delta = 0.05;
        let t = 0.5 * delta;
        let g = Grid1D::new(-0.5, 0.5, 1001).unwrap();
        let f = assemble_solution(&riemann_profile(t, delta), &[], g).unwrap();
        let tb = evolve_branch(&tanh_branch(delta, 2000), &burgers_flux(), t);
        for j in (0..g.nodes).step_by(50) {
            let x = g.x(j);
            if x > tb.x_of_u[tb.len() - 1] && x < tb.x_of_u[0] {
                assert!((f.values[j] - tb.u_of_x(x)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn gap_between_pieces_is_reported() {
        let prof = HodographProfile::new(
            0.0,
            1.0,
            0.0,
            vec![
                ProfilePiece { x: vec![0.0, 0.1], u: vec![1.0, 0.8] },
                ProfilePiece { x: vec![0.5, 0.6], u: vec![0.2, 0.0] },
            ],
        );
        let g = Grid1D::new(0.0, 1.0, 101).unwrap();
        assert!(matches!(assemble_solution(&prof, &[], g), Err(Error::Assembly { .. })));
    }
}
