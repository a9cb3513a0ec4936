use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use geostab::analysis::{enumerate_roots, fit_order, karcher_mean};
use geostab::fields::{
    isotropy_field, karcher_gradient_field, killing_rotation_field, zero_field, KarcherFieldSpec,
    VectorField,
};
use geostab::geometry::{distance, exp_point, Manifold, Point};
use geostab::integrators::{
    gee_step, gie_step, gimp_step, integrate, lie_euler_implicit_step, reference_flow, rodrigues,
    sphere_multistart_seeds, sphmp_step, step, MethodId, SolverConfig,
};
use geostab::GeoError;
use nalgebra::{DMatrix, Vector3};

fn e(i: usize) -> Point {
    let mut v = [0.0; 3];
    v[i] = 1.0;
    Point::sphere(v[0], v[1], v[2]).unwrap()
}

fn close(a: &Point, b: &Point, tol: f64) -> bool {
    (a.coords() - b.coords()).norm() <= tol
}

fn rotate_z(p: &Point, angle: f64) -> Point {
    let c = p.coords();
    let (s, co) = angle.sin_cos();
    Point::sphere(co * c[0] - s * c[1], s * c[0] + co * c[1], c[2]).unwrap()
}

fn karcher_pair() -> KarcherFieldSpec {
    let e2 = 2f64.exp();
    KarcherFieldSpec::new(vec![
        Point::spd(2, &[e2, 0.0, 0.0, 1.0 / e2]).unwrap(),
        Point::spd(2, &[1.0 / e2, 0.0, 0.0, e2]).unwrap(),
    ])
    .unwrap()
}

fn spd_start() -> Point {
    let (c, s) = (0.35f64.cosh(), 0.35f64.sinh());
    Point::spd(2, &[c, s, s, c]).unwrap()
}

#[test]
fn zero_field_fixes_every_method() {
    let cfg = SolverConfig::default();
    let y = Point::sphere(0.6, 0.0, 0.8).unwrap();
    let f = zero_field(Manifold::Sphere2);
    for m in [MethodId::Gee, MethodId::Gie, MethodId::Gimp, MethodId::Sphmp, MethodId::LieEulerImplicit(0.5)] {
        let z = step(m, &f, &y, 0.7, &cfg).unwrap().into_principal().unwrap();
        assert_eq!(z.coords(), y.coords(), "{m}");
    }
    let a = spd_start();
    let f = zero_field(Manifold::Spd(2));
    for m in [MethodId::Gee, MethodId::Gie, MethodId::Gimp] {
        let z = step(m, &f, &a, 0.7, &cfg).unwrap().into_principal().unwrap();
        assert!(close(&z, &a, 1e-14), "{m}");
    }
}

#[test]
fn gee_examples() {
    let z = gee_step(&killing_rotation_field(), &e(0), FRAC_PI_2).unwrap();
    assert!(z.converged);
    assert!(close(z.principal().unwrap(), &e(1), 1e-12));

    // X(a) = −a log a on SPD(1): exp_a(v) = a e^{v/a}, so from a = e with h = 1
    // the step lands on e · e^{−1} = 1.
    let f = VectorField::new(Manifold::Spd(1), "to-one", |a| Ok(a.map(|x| -x * x.ln())));
    let y = Point::spd(1, &[1f64.exp()]).unwrap();
    let z = gee_step(&f, &y, 1.0).unwrap().into_principal().unwrap();
    assert!((z.coords()[0] - 1.0).abs() < 1e-14);
}

#[test]
fn gie_equator_reproduces_rotation() {
    let cfg = SolverConfig::default();
    let out = gie_step(&killing_rotation_field(), &e(0), FRAC_PI_2, &cfg).unwrap();
    assert!(out.converged);
    assert!(close(out.principal().unwrap(), &e(1), 1e-10));
}

#[test]
fn gie_multistart_matches_root_oracle() {
    let z0: f64 = 1e-3;
    let y = Point::sphere((1.0 - z0 * z0).sqrt(), 0.0, z0).unwrap();
    let cfg = SolverConfig::default().with_multistart(sphere_multistart_seeds(&y, 64));
    let out = gie_step(&killing_rotation_field(), &y, PI, &cfg).unwrap();
    let oracle = enumerate_roots(z0, PI).unwrap();
    assert_eq!(oracle.len(), 3);
    let mut third: Vec<f64> = out.solutions.iter().map(|p| p.coords()[2]).collect();
    third.sort_by(f64::total_cmp);
    // distinct solutions with the same third component can exist only if the
    // first two components differ, which the relation rules out
    assert_eq!(third.len(), 3, "{third:?}");
    for (a, b) in third.iter().zip(&oracle) {
        assert!((a - b).abs() <= 1e-8, "{a} vs {b}");
    }
}

#[test]
fn gimp_examples() {
    let cfg = SolverConfig::default();
    let out = gimp_step(&killing_rotation_field(), &e(0), PI, &cfg).unwrap();
    assert!(close(out.principal().unwrap(), &Point::sphere(-1.0, 0.0, 0.0).unwrap(), 1e-10));
    assert!(close(&out.midpoints[0], &e(1), 1e-10));
}

#[test]
fn gimp_is_self_adjoint() {
    let cfg = SolverConfig::default();
    let f = karcher_gradient_field(&karcher_pair());
    let y = spd_start();
    let z = gimp_step(&f, &y, 0.3, &cfg).unwrap().into_principal().unwrap();
    let back = gimp_step(&f, &z, -0.3, &cfg).unwrap().into_principal().unwrap();
    assert!(distance(&back, &y).unwrap() <= 2.0 * cfg.tolerance);

    let f = killing_rotation_field();
    let y = Point::sphere(0.6, 0.0, 0.8).unwrap();
    let z = gimp_step(&f, &y, 0.9, &cfg).unwrap().into_principal().unwrap();
    let back = gimp_step(&f, &z, -0.9, &cfg).unwrap().into_principal().unwrap();
    assert!((back.coords() - y.coords()).norm() <= 2.0 * cfg.tolerance);
}

#[test]
fn sphmp_equatorial_rotation() {
    // On the equator z = y + h e₃ × ȳ with ȳ the chord midpoint; a rotation by
    // θ needs |z − y| = 2 sin(θ/2) = h, so θ = π/4 takes h = 2 sin(π/8).
    let cfg = SolverConfig::default();
    let h = 2.0 * (PI / 8.0).sin();
    let z = sphmp_step(&killing_rotation_field(), &e(0), h, &cfg).unwrap().into_principal().unwrap();
    assert!(close(&z, &rotate_z(&e(0), FRAC_PI_4), 1e-10));
}

#[test]
fn sphmp_stays_on_sphere_and_rejects_spd() {
    let cfg = SolverConfig::default();
    let f = killing_rotation_field();
    for k in 0..12 {
        let psi = 0.5 * k as f64;
        let y = Point::sphere(psi.cos(), psi.sin(), 0.0).unwrap();
        for h in [0.1, 0.5, 1.0] {
            let out = sphmp_step(&f, &y, h, &cfg).unwrap();
            let z = out.principal().unwrap();
            assert!((z.coords().norm() - 1.0).abs() <= 1e-10);
            let zc = z.coords();
            let mid = (y.coords() + zc).normalize();
            let rel = zc - y.coords() - DMatrix::from_column_slice(3, 1, &[-mid[1] * h, mid[0] * h, 0.0]);
            assert!(rel.norm() <= 1e-10);
        }
    }
    let spd = zero_field(Manifold::Spd(2));
    assert!(matches!(
        step(MethodId::Sphmp, &spd, &spd_start(), 0.1, &cfg),
        Err(GeoError::InvalidInput(_))
    ));
}

#[test]
fn rodrigues_is_a_rotation() {
    let a = Vector3::new(0.0, 0.0, FRAC_PI_2);
    let p = Vector3::new(1.0, 0.0, 0.0);
    assert!((rodrigues(&a, &p) - Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-15);
    let a = Vector3::new(0.3, -0.4, 1.2);
    let p = Vector3::new(0.48, 0.6, 0.64);
    let q = rodrigues(&a, &p);
    assert!((q.norm() - 1.0).abs() < 1e-15);
    assert!((q.dot(&a) - p.dot(&a)).abs() < 1e-14);
}

#[test]
fn lie_euler_isotropy_choices() {
    let cfg = SolverConfig::default();
    let y = Point::sphere(0.6, 0.0, 0.8).unwrap();
    for h in [0.5, 1.0, 2.0] {
        let exact = lie_euler_implicit_step(&isotropy_field(1.0), &y, h, &cfg).unwrap();
        assert!(close(exact.principal().unwrap(), &rotate_z(&y, h), 1e-10));

        let c0 = lie_euler_implicit_step(&isotropy_field(0.0), &y, h, &cfg).unwrap();
        let gie = gie_step(&killing_rotation_field(), &y, h, &cfg).unwrap();
        assert!(close(c0.principal().unwrap(), gie.principal().unwrap(), 2.0 * cfg.tolerance));

        // the same choice reached through the method id
        let via_id = step(MethodId::LieEulerImplicit(0.0), &killing_rotation_field(), &y, h, &cfg).unwrap();
        assert!(close(via_id.principal().unwrap(), c0.principal().unwrap(), 2.0 * cfg.tolerance));
    }
    let none = VectorField::new(Manifold::Sphere2, "plain", |p| Ok(p * 0.0));
    assert!(lie_euler_implicit_step(&none, &y, 0.5, &cfg).is_err());
}

#[test]
fn implicit_relations_hold_at_converged_roots() {
    let cfg = SolverConfig::default();
    let f = killing_rotation_field();
    let y = Point::sphere(0.0, 0.6, 0.8).unwrap();
    for h in [0.2, 0.9, 2.5] {
        let out = gie_step(&f, &y, h, &cfg).unwrap();
        for z in &out.solutions {
            let v = f.eval(z).unwrap().scaled(-h);
            assert!((exp_point(z, &v).unwrap().coords() - y.coords()).norm() <= cfg.tolerance);
        }
        let out = gimp_step(&f, &y, h, &cfg).unwrap();
        let mid = &out.midpoints[0];
        let v = f.eval(mid).unwrap().scaled(-0.5 * h);
        assert!((exp_point(mid, &v).unwrap().coords() - y.coords()).norm() <= cfg.tolerance);
        assert!(close(&exp_point(mid, &v.scaled(-1.0)).unwrap(), out.principal().unwrap(), 1e-14));
    }
    let spec = karcher_pair();
    let f = karcher_gradient_field(&spec);
    let y = spd_start();
    for h in [0.1, 1.0, 5.0] {
        let out = gie_step(&f, &y, h, &cfg).unwrap();
        let z = out.principal().unwrap();
        let v = f.eval(z).unwrap().scaled(-h);
        assert!(distance(&exp_point(z, &v).unwrap(), &y).unwrap() <= cfg.tolerance);
        let c = z.coords();
        assert!((c - c.transpose()).amax() <= 1e-12);
        assert!(c.clone().symmetric_eigen().eigenvalues.min() > 0.0);
    }
}

#[test]
fn reference_flow_examples() {
    let q = reference_flow(&killing_rotation_field(), &e(0), FRAC_PI_2, 1e-10).unwrap();
    assert!(distance(&q, &e(1)).unwrap() <= 1e-10);
    let y = spd_start();
    assert_eq!(reference_flow(&zero_field(Manifold::Spd(2)), &y, 3.0, 1e-10).unwrap(), y);

    let target = Point::spd(2, &[2.0, 0.3, 0.3, 0.5]).unwrap();
    let f = karcher_gradient_field(&KarcherFieldSpec::new(vec![target.clone()]).unwrap());
    let mut last = distance(&y, &target).unwrap();
    for t in [0.5, 1.0, 2.0, 4.0] {
        let d = distance(&reference_flow(&f, &y, t, 1e-10).unwrap(), &target).unwrap();
        // ½d² decays like e^{−2t} along the flow
        assert!(d < last);
        assert!((d - distance(&y, &target).unwrap() * (-t).exp()).abs() < 1e-8);
        last = d;
    }
}

#[test]
fn integrate_examples() {
    let cfg = SolverConfig::default();
    let f = killing_rotation_field();
    let y = Point::sphere(0.6, 0.0, 0.8).unwrap();
    let one = integrate(MethodId::Gie, &f, &y, 0.4, 1, &cfg).unwrap();
    assert_eq!(one.len(), 2);
    assert_eq!(&one[1], gie_step(&f, &y, 0.4, &cfg).unwrap().principal().unwrap());

    let traj = integrate(MethodId::Gee, &f, &y, 0.1, 10, &cfg).unwrap();
    assert_eq!(traj.len(), 11);
    assert!(traj.iter().all(|p| (p.coords().norm() - 1.0).abs() <= 1e-12));

    let spec = karcher_pair();
    let star = karcher_mean(&spec, 1e-12).unwrap();
    let f = karcher_gradient_field(&spec);
    let traj = integrate(MethodId::Gie, &f, &spd_start(), 0.25, 20, &cfg).unwrap();
    let d: Vec<f64> = traj.iter().map(|p| distance(p, &star).unwrap()).collect();
    assert!(d.windows(2).all(|w| w[1] <= w[0]), "{d:?}");
}

#[test]
fn integrate_reports_partial_trajectory() {
    let cfg = SolverConfig { max_iterations: 1, tolerance: 1e-15, ..SolverConfig::default() };
    let f = karcher_gradient_field(&karcher_pair());
    match integrate(MethodId::Gie, &f, &spd_start(), 1.0, 5, &cfg) {
        Err(GeoError::StepFailed { step, partial, .. }) => {
            assert_eq!(step, 0);
            assert_eq!(partial.len(), 1);
        }
        other => panic!("expected a failed step, got {other:?}"),
    }
}

#[test]
fn local_error_orders() {
    // d(method(h), flow(h)) = O(h^{p+1}) over h = 2⁻³ … 2⁻⁹
    let cfg = SolverConfig { tolerance: 1e-14, ..SolverConfig::default() };
    let f = karcher_gradient_field(&karcher_pair());
    let y = spd_start();
    let hs: Vec<f64> = (3..=9).map(|k| 0.5f64.powi(k)).collect();
    let exact: Vec<Point> = hs.iter().map(|&h| reference_flow(&f, &y, h, 1e-12).unwrap()).collect();
    for (m, want) in [(MethodId::Gee, 2.0), (MethodId::Gie, 2.0), (MethodId::Gimp, 3.0)] {
        let errs: Vec<f64> = hs
            .iter()
            .zip(&exact)
            .map(|(&h, ex)| distance(&step(m, &f, &y, h, &cfg).unwrap().into_principal().unwrap(), ex).unwrap())
            .collect();
        let slope = fit_order(&hs, &errs);
        assert!((slope - want).abs() <= 0.2, "{m}: slope {slope}, errors {errs:?}");
    }
}
