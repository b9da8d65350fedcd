use std::f64::consts::FRAC_PI_2;

use qwd_core::boundary_solver::{
    solve_boundary_on_line, trace_boundary, zero_departure_jump, BoundaryKind, March, MarchAxis,
    ScanLine, Solver,
};
use qwd_core::deficit_optimizer::{optimal_angle_jump, Branch};
use qwd_core::measurement_entropy::{finite_difference_second_derivative, SECOND_DERIVATIVE_STEP};
use qwd_core::spin_model::{thermal_state, ModelParams};
use qwd_core::Error;

fn template(j: f64, jz: f64) -> ModelParams {
    ModelParams::new(j, jz, 0.0, 1.0).unwrap()
}

fn fd_curvature(tpl: &ModelParams, t: f64, b: f64, theta: f64) -> f64 {
    let s = thermal_state(&tpl.at(t, b).unwrap());
    finite_difference_second_derivative(&s, theta, SECOND_DERIVATIVE_STEP)
}

#[test]
fn endpoint_roots_are_finite_difference_sign_changes() {
    let solver = Solver::default();
    let cases = [
        (template(-1.0, -1.0), [1.0, 1.4, 1.8]),
        (template(-1.0, -1.5), [1.2, 1.9, 2.0]),
        (template(0.5, -1.0), [0.8, 1.1, 1.3]),
    ];
    let mut checked = 0;
    for (tpl, rows) in &cases {
        for &b in rows {
            for (kind, theta) in [
                (BoundaryKind::ZeroBoundary, 0.0),
                (BoundaryKind::HalfPiBoundary, FRAC_PI_2),
            ] {
                for root in solver
                    .roots(kind, tpl, ScanLine::AtB(b), (0.05, 2.0))
                    .unwrap()
                {
                    let below = fd_curvature(tpl, root.t - 5e-5, b, theta);
                    let above = fd_curvature(tpl, root.t + 5e-5, b, theta);
                    assert!(
                        below.signum() != above.signum(),
                        "{kind:?} at B = {b}, T = {}: {below} / {above}",
                        root.t
                    );
                    checked += 1;
                }
            }
        }
    }
    assert!(checked >= 6, "only {checked} roots found");
}

#[test]
fn zero_prime_meets_the_zero_boundary_where_the_jump_vanishes() {
    let tpl = template(-1.0, -1.0);
    for b in [1.0, 1.4, 1.8] {
        let line = ScanLine::AtB(b);
        let zero =
            solve_boundary_on_line(BoundaryKind::ZeroBoundary, &tpl, line, (0.3, 1.5)).unwrap();
        let prime =
            solve_boundary_on_line(BoundaryKind::ZeroPrime, &tpl, line, (0.3, 1.5)).unwrap();
        assert!(
            (zero.t - prime.t).abs() < 1e-5,
            "B = {b}: {} vs {}",
            zero.t,
            prime.t
        );
        let jump = zero_departure_jump(&tpl, b, (0.05, 2.0)).unwrap();
        assert!(jump.jump < 1e-2, "B = {b}: jump {}", jump.jump);
        assert_eq!(jump.branch_below, Branch::Interior);
    }
}

#[test]
fn angle_jump_shrinks_with_the_probe_width_on_a_continuous_boundary() {
    let tpl = template(-1.0, -1.0);
    let tc = 0.742967;
    let jump = |eps: f64| {
        optimal_angle_jump(
            &tpl.at(tc + eps, 1.4).unwrap(),
            &tpl.at(tc - eps, 1.4).unwrap(),
        )
    };
    let (wide, narrow) = (jump(1e-3), jump(1e-5));
    assert!(narrow < wide && narrow < 0.05, "{wide} -> {narrow}");
}

#[test]
fn jump_reaches_a_right_angle_at_the_triple_point() {
    let tpl = template(-1.0, -1.5);
    let j = zero_departure_jump(&tpl, 1.6851637, (0.05, 2.0)).unwrap();
    assert!((j.jump - 1.570782).abs() < 1e-3, "{}", j.jump);
}

#[test]
fn traced_points_are_monotone_and_satisfy_their_equation() {
    let cases = [
        (
            BoundaryKind::ZeroBoundary,
            template(-1.0, -1.0),
            (0.5, 1.0),
            1.4,
            0.6,
        ),
        (
            BoundaryKind::HalfPiBoundary,
            template(-1.0, -1.0),
            (0.5, 0.7),
            1.4,
            0.6,
        ),
        (
            BoundaryKind::EqualEndpoints,
            template(-1.0, -1.5),
            (0.4, 0.7),
            1.2,
            1.6,
        ),
        (
            BoundaryKind::ZeroPrime,
            template(-1.0, -1.5),
            (0.5, 0.8),
            2.0,
            1.7,
        ),
    ];
    for (kind, tpl, seed, start, end) in cases {
        let march = March {
            axis: MarchAxis::B,
            start,
            end,
            step: 0.01,
            seed,
        };
        let c = trace_boundary(kind, &tpl, march).unwrap();
        assert_eq!(c.kind, kind);
        assert!(c.points.len() > 10, "{kind:?}: {} points", c.points.len());
        let dir = (end - start).signum();
        assert!(c.points.windows(2).all(|w| (w[1].b - w[0].b) * dir > 0.0));
        let tol = kind.residual_tolerance();
        assert!(c.points.iter().all(|p| p.residual.abs() <= tol), "{kind:?}");
    }
}

#[test]
fn equal_endpoints_line_is_never_a_boundary_at_equal_couplings() {
    let tpl = template(-1.0, -1.0);
    let march = March {
        axis: MarchAxis::B,
        start: 1.8,
        end: 0.2,
        step: 0.05,
        seed: (0.5, 1.0),
    };
    let c = trace_boundary(BoundaryKind::EqualEndpoints, &tpl, march).unwrap();
    assert!(!c.points.is_empty());
    assert!(!c.is_physical());
}

#[test]
fn equal_endpoints_line_separates_phases_below_the_triple_point() {
    let tpl = template(-1.0, -1.5);
    let march = March {
        axis: MarchAxis::B,
        start: 1.2,
        end: 1.6,
        step: 0.05,
        seed: (0.4, 0.7),
    };
    let c = trace_boundary(BoundaryKind::EqualEndpoints, &tpl, march).unwrap();
    assert!(c.points.iter().all(|p| p.is_physical));
}

#[test]
fn solver_reports_missing_and_multiple_roots() {
    let tpl = template(-1.0, -1.0);
    let none = solve_boundary_on_line(
        BoundaryKind::ZeroBoundary,
        &tpl,
        ScanLine::AtB(1.4),
        (1.0, 2.0),
    );
    assert!(matches!(none, Err(Error::NoRoot { .. })));
    // the XX pi/2-boundary dips to B = 0.7716, so the row B = 0.8 cuts it twice
    let xx = template(1.0, 0.0);
    let line = ScanLine::AtB(0.8);
    let both = Solver::default()
        .roots(BoundaryKind::HalfPiBoundary, &xx, line, (0.1, 1.0))
        .unwrap();
    assert_eq!(both.len(), 2, "{both:?}");
    assert!(both[0].t < 0.404 && both[1].t > 0.404);
    let r = solve_boundary_on_line(BoundaryKind::HalfPiBoundary, &xx, line, (0.1, 1.0));
    assert!(matches!(r, Err(Error::AmbiguousBracket { count: 2, .. })));
}
