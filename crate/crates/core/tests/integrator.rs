mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use lambda_surfaces::integrator::*;
use lambda_surfaces::ode_core::{lambda_residual, ProfileState};
use lambda_surfaces::Params;
use proptest::prelude::*;

fn cfg() -> IntegratorConfig {
    IntegratorConfig::default()
}

#[test]
fn series_start_examples() {
    let p = Params::new(2, -1.0).unwrap();
    let st = start_on_axis(&p, 1.0, &cfg());
    assert_eq!(st.theta, FRAC_PI_2);
    assert_eq!(st.x, 1.0);
    let st = start_on_axis(&p, 1.5, &cfg());
    assert!((st.theta - (FRAC_PI_2 + 0.25e-6)).abs() < 1e-15);
    let st = start_on_axis(&p, 2.0, &cfg());
    assert!((st.theta - FRAC_PI_2 - 0.5e-6).abs() < 1e-15);
}

#[test]
fn sphere_matches_semicircle_pointwise() {
    for (n, lam) in [(2, -1.0), (3, -0.5), (5, 0.3)] {
        let p = Params::new(n, lam).unwrap();
        let big_r = p.sphere_radius();
        let t = shoot_from_axis(&p, big_r + lam, &cfg(), EventSet::ALL).unwrap();
        assert_eq!(t.terminal.kind, EventKind::TurningPoint);
        for smp in &t.samples {
            let phi = smp.state.s / big_r;
            assert!((smp.state.x - big_r * phi.cos()).abs() <= 1e-8);
            assert!((smp.state.r - big_r * phi.sin()).abs() <= 1e-8);
        }
        let end = t.terminal.state;
        assert!(end.x.abs() <= 1e-9 && (end.r - big_r).abs() <= 1e-9);
        assert!((end.s - FRAC_PI_2 * big_r).abs() <= 1e-8);
    }
}

#[test]
fn cylinder_stays_put() {
    let p = Params::new(2, -1.0).unwrap();
    let c = p.cylinder_radius();
    let cfg = IntegratorConfig { max_arclength: 20.0, ..cfg() };
    let start = ProfileState { s: 0.0, x: 0.0, r: c, theta: PI };
    let t = integrate_until(&p, &start, &cfg, EventSet::ALL).unwrap();
    assert_eq!(t.terminal.kind, EventKind::MaxLength);
    assert!((t.terminal.state.s - 20.0).abs() < 1e-12);
    assert!(t.samples.iter().all(|s| (s.state.r - c).abs() <= 1e-9));
}

#[test]
fn figure_one_shot_nearly_closes() {
    let p = Params::new(2, -1.0).unwrap();
    let t = shoot_from_axis(&p, 1.31 + p.lambda, &cfg(), EventSet::ALL).unwrap();
    assert_eq!(t.terminal.kind, EventKind::TurningPoint);
    assert!(t.terminal.state.x.abs() <= 0.02);
}

#[test]
fn agrees_with_fixed_step_oracle() {
    let p = Params::new(2, -1.0).unwrap();
    for x0 in [1.05, 1.31, 1.6, 1.9] {
        let t = shoot_from_axis(&p, x0 + p.lambda, &cfg(), EventSet::ALL).unwrap();
        let (xs, rs, ss) = common::rk4_shot(2, -1.0, x0, 1e-4, 100.0).unwrap();
        let e = t.terminal.state;
        assert!((e.x - xs).abs() < 1e-7, "x0={x0}: {} vs {xs}", e.x);
        assert!((e.r - rs).abs() < 1e-7);
        assert!((e.s - ss).abs() < 1e-7);
    }
}

#[test]
fn invariants_on_default_shot() {
    let p = Params::new(3, -0.9).unwrap();
    let c = cfg();
    let t = shoot_from_axis(&p, 0.2, &c, EventSet::ALL).unwrap();
    assert_eq!(t.terminal.kind, EventKind::TurningPoint);
    // Ordered, spaced by at most max_step, positive radius.
    for w in t.samples.windows(2) {
        assert!(w[1].state.s > w[0].state.s);
        assert!(w[1].state.s - w[0].state.s <= c.max_step * (1.0 + 1e-12));
    }
    assert!(t.samples.iter().all(|s| s.state.r > 0.0));
    // Event consistency.
    let end = t.terminal.state;
    assert!((end.theta - PI).abs() <= c.event_tol);
    let before = &t.samples[t.samples.len() - 2];
    assert!(before.state.theta.cos() <= 0.0);
    let worst = t
        .samples
        .iter()
        .map(|s| lambda_residual(&p, &s.state, s.dtheta).unwrap().abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-8);
}

#[test]
fn mirror_trajectory_agrees() {
    let p = Params::new(2, -1.0).unwrap();
    let c = cfg();
    let t = shoot_from_axis(&p, 0.3, &c, EventSet::ALL).unwrap();
    let k = t.samples.len() - 1;
    let j = k / 3;
    let (sk, sj) = (t.samples[k].state, t.samples[j].state);
    let start = ProfileState { s: 0.0, x: -sk.x, r: sk.r, theta: 2.0 * PI - sk.theta };
    let mc = IntegratorConfig { max_arclength: sk.s - sj.s, ..c };
    let m = integrate_until(&p, &start, &mc, EventSet::NONE).unwrap();
    let end = m.terminal.state;
    let tol = 10.0 * c.rel_tol;
    assert!((end.x + sj.x).abs() <= tol, "{}", (end.x + sj.x).abs());
    assert!((end.r - sj.r).abs() <= tol);
    assert!((end.theta - (2.0 * PI - sj.theta)).abs() <= tol);
}

#[test]
fn axis_start_is_rejected_without_series() {
    let p = Params::new(2, -1.0).unwrap();
    let st = ProfileState { s: 0.0, x: 1.0, r: 0.0, theta: FRAC_PI_2 };
    assert!(integrate_until(&p, &st, &cfg(), EventSet::ALL).is_err());
}

#[test]
fn short_arclength_ends_with_max_length() {
    let p = Params::new(2, -1.0).unwrap();
    let c = IntegratorConfig { max_arclength: 0.5, ..cfg() };
    let t = shoot_from_axis(&p, 0.3, &c, EventSet::ALL).unwrap();
    assert_eq!(t.terminal.kind, EventKind::MaxLength);
}

#[test]
fn invalid_config_is_rejected() {
    let p = Params::new(2, -1.0).unwrap();
    let c = IntegratorConfig { rel_tol: -1.0, ..cfg() };
    assert!(shoot_from_axis(&p, 0.3, &c, EventSet::ALL).is_err());
    let c = IntegratorConfig { series_start_step: 1.0, ..cfg() };
    assert!(c.validate().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Where the profile is a graph over r (theta in (pi/2, pi)) it is concave:
    /// theta' > 0.
    #[test]
    fn graph_part_is_concave(n in 2u32..=5, frac in 0.05f64..0.95, eps in 1e-3f64..0.9) {
        let p = Params::new(n, p_lambda(n, frac)).unwrap();
        let eps = eps * (p.sphere_radius() + p.lambda);
        let t = shoot_from_axis(&p, eps, &cfg(), EventSet::ALL).unwrap();
        prop_assert_eq!(t.terminal.kind, EventKind::TurningPoint);
        for s in &t.samples[1..t.samples.len() - 1] {
            prop_assert!(s.dtheta > 0.0, "theta' = {} at s = {}", s.dtheta, s.state.s);
        }
    }

    #[test]
    fn residual_stays_small(n in 2u32..=6, lam in -1.5f64..0.5, frac in 0.02f64..0.98) {
        let p = Params::new(n, lam).unwrap();
        let x0 = frac * p.sphere_radius() + (1.0 - frac) * (-lam).max(0.05);
        let t = shoot_from_axis(&p, x0 + lam, &cfg(), EventSet::ALL).unwrap();
        for s in &t.samples {
            prop_assert!(lambda_residual(&p, &s.state, s.dtheta).unwrap().abs() <= 1e-8);
        }
    }
}

/// A lambda strictly inside the theorem range.
fn p_lambda(n: u32, frac: f64) -> f64 {
    -frac * 2.0 / ((n + 2) as f64).sqrt()
}
