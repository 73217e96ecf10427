use std::f64::consts::PI;

use lambda_surfaces::geometry::*;
use lambda_surfaces::integrator::IntegratorConfig;
use lambda_surfaces::shooting::*;
use lambda_surfaces::Params;
use proptest::prelude::*;

fn cfg() -> IntegratorConfig {
    IntegratorConfig::default()
}

fn sphere_profile() -> HypersurfaceProfile {
    let p = Params::new(2, -1.0).unwrap();
    let root = root_at(&p, 1.0, DEFAULT_ROOT_TOL, &cfg()).unwrap();
    HypersurfaceProfile::from_closed(&assemble_closed_profile(&p, &root, &cfg()).unwrap())
}

fn figure_one_profile() -> HypersurfaceProfile {
    let p = Params::new(2, -1.0).unwrap();
    let sc = scan_roots(&p, 1.01, 1.99, 64, &cfg()).unwrap();
    let r = find_root_offset(&p, sc.brackets[0].offsets(), DEFAULT_ROOT_TOL, &cfg()).unwrap();
    HypersurfaceProfile::from_closed(&assemble_closed_profile(&p, &r, &cfg()).unwrap())
}

#[test]
fn sphere_certificate() {
    let hp = sphere_profile();
    let c = certify(&hp, &cfg()).unwrap();
    assert!(c.convex && c.simple);
    assert!((c.min_curvature - 0.5).abs() <= 1e-9);
    assert!(c.max_residual <= 1e-10);
    assert!(!c.refined);
    assert_eq!(hp.samples[0].r, 0.0);
    assert_eq!(hp.samples.last().unwrap().r, 0.0);
    assert!(hp.samples[1..hp.len() - 1].iter().all(|s| s.r > 0.0));
}

#[test]
fn figure_one_certificate_and_flip() {
    let hp = figure_one_profile();
    let c = certify(&hp, &cfg()).unwrap();
    assert!(c.convex && c.simple && c.max_residual <= 1e-8);
    let f = hp.flipped();
    assert!(!certify_samples(&f).convex);
    assert!(f.samples.iter().all(|s| s.kappa_1 <= 0.0 && s.kappa_n < 0.0));
    assert!(!certify(&f, &cfg()).unwrap().convex);
}

#[test]
fn certificates_are_reflection_symmetric() {
    let hp = figure_one_profile();
    let total = 2.0 * hp.s_hat;
    let m = hp.len();
    for k in 0..m {
        let (a, b) = (hp.samples[k], hp.samples[m - 1 - k]);
        assert!((a.s + b.s - total).abs() <= 1e-12);
        assert!((a.kappa_1 - b.kappa_1).abs() <= 10.0 * cfg().rel_tol);
        assert!((a.kappa_n - b.kappa_n).abs() <= 10.0 * cfg().rel_tol);
    }
}

#[test]
fn theorem_range_profiles_cross_above_sphere() {
    // Empirical regression; not a proved statement.
    for (n, lam) in [(2u32, -0.5), (3, -0.3), (4, -0.6)] {
        let p = Params::new(n, lam).unwrap();
        let sc = scan_offsets(&p, &default_offsets(&p, 64, 32), &cfg(), 0, DEFAULT_ROOT_TOL).unwrap();
        for b in &sc.brackets {
            let r = find_root_offset(&p, b.offsets(), DEFAULT_ROOT_TOL, &cfg()).unwrap();
            assert!(r.r_hat > p.sphere_radius(), "n={n} lam={lam}");
            let hp = HypersurfaceProfile::from_closed(&assemble_closed_profile(&p, &r, &cfg()).unwrap());
            let c = certify(&hp, &cfg()).unwrap();
            assert!(c.convex && c.simple && c.max_residual <= 1e-8);
        }
    }
}

#[test]
fn sphere_mesh() {
    let hp = sphere_profile();
    let mesh = revolve_mesh(&hp, 64).unwrap();
    let worst = mesh
        .vertices
        .iter()
        .map(|v| ((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() - 2.0).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-8);
    assert_eq!(mesh.euler_characteristic(), 2);
    assert!(mesh.is_watertight());
    assert_eq!(mesh.faces.len(), 2 * 64 * (hp.len() - 2));
    let v = mesh.signed_volume();
    assert!(v > 0.0 && (v - 4.0 / 3.0 * PI * 8.0).abs() < 0.1);
}

#[test]
fn figure_one_mesh_is_closed_convex_body() {
    let hp = figure_one_profile();
    let mesh = revolve_mesh(&hp, 32).unwrap();
    assert_eq!(mesh.euler_characteristic(), 2);
    assert!(mesh.is_watertight());
    assert!(mesh.signed_volume() > 0.0);
}

#[test]
fn csv_json_obj_exports() {
    let dir = tempfile::tempdir().unwrap();
    let hp = sphere_profile();
    let csv = dir.path().join("p.csv");
    hp.write_csv(&csv).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), hp.len() + 1);
    assert_eq!(text.lines().next().unwrap(), "s,x,r,theta,dtheta,kappa_1,kappa_n,residual");
    let row: Vec<f64> = text.lines().nth(3).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row[1], hp.samples[2].x);

    let doc = ProfileDocument { certificate: Some(certify(&hp, &cfg()).unwrap()), profile: hp.clone() };
    let js = dir.path().join("p.json");
    doc.write_json(&js).unwrap();
    assert_eq!(ProfileDocument::read_json(&js).unwrap(), doc);

    let mesh = revolve_mesh(&hp, 16).unwrap();
    let obj = dir.path().join("m.obj");
    mesh.write_obj(&obj).unwrap();
    let text = std::fs::read_to_string(&obj).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), mesh.vertices.len());
    assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), mesh.faces.len());

    let bad = dir.path().join("missing").join("p.csv");
    let err = hp.write_csv(&bad).unwrap_err();
    assert!(err.to_string().contains("missing"));
}

#[test]
fn mesh_requires_surface_case() {
    let p = Params::new(3, -1.0).unwrap();
    let root = root_at(&p, p.sphere_radius() + p.lambda, DEFAULT_ROOT_TOL, &cfg()).unwrap();
    let hp = HypersurfaceProfile::from_closed(&assemble_closed_profile(&p, &root, &cfg()).unwrap());
    assert!(revolve_mesh(&hp, 16).is_err());
    // Profile data remains available for every n.
    assert!(certify(&hp, &cfg()).unwrap().convex);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mesh_combinatorics(m in 3usize..40, res in 3usize..40) {
        let p = Params::new(2, -1.0).unwrap();
        let samples = (0..m)
            .map(|k| {
                let phi = PI * k as f64 / (m - 1) as f64;
                ProfileSample {
                    s: 2.0 * phi, x: 2.0 * phi.cos(), r: if k == 0 || k == m - 1 { 0.0 } else { 2.0 * phi.sin() },
                    theta: phi + PI / 2.0, dtheta: 0.5, kappa_1: 0.5, kappa_n: 0.5, residual: 0.0,
                }
            })
            .collect();
        let hp = HypersurfaceProfile {
            params: p, x_hat: 2.0, epsilon_hat: 1.0, r_hat: 2.0, s_hat: PI, junction_gap: 0.0,
            samples, min_curvature: 0.5, max_residual: 0.0,
        };
        let mesh = revolve_mesh(&hp, res).unwrap();
        prop_assert_eq!(mesh.vertices.len(), res * (m - 2) + 2);
        prop_assert_eq!(mesh.faces.len(), 2 * res * (m - 2));
        prop_assert_eq!(mesh.euler_characteristic(), 2);
        prop_assert!(mesh.is_watertight());
        prop_assert!(mesh.signed_volume() > 0.0);
    }

    #[test]
    fn convex_arcs_are_simple(mut angles in proptest::collection::vec(0.0f64..PI, 4..60)) {
        angles.sort_by(f64::total_cmp);
        angles.dedup();
        let pts: Vec<(f64, f64)> = angles.iter().map(|a| (a.cos(), a.sin())).collect();
        prop_assert!(is_simple(&pts));
    }

    #[test]
    fn closing_back_over_itself_is_not_simple(k in 4usize..50) {
        // An arc followed by a chord through its middle.
        let mut pts: Vec<(f64, f64)> = (0..k).map(|j| {
            let a = PI * j as f64 / (k - 1) as f64;
            (a.cos(), a.sin())
        }).collect();
        pts.push((0.0, -1.0));
        pts.push((0.0, 2.0));
        prop_assert!(!is_simple(&pts));
    }
}
