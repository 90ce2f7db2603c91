use std::sync::Arc;

use gradest_core::catalog;
use gradest_core::coeffs::*;
use gradest_core::Error;
use proptest::prelude::*;

fn scalar(f: impl Fn(&[f64]) -> f64) -> impl Fn(&[f64], &mut [f64]) {
    move |y, o| o[0] = f(y)
}

#[test]
fn holder_examples() {
    let c = local_holder_seminorm(scalar(|_| 3.5), 1, &[0.2], 0.4, 2000, 1).unwrap();
    assert_eq!(c, 0.0);
    let lin = local_holder_seminorm(scalar(|y| y[0]), 1, &[-1.0], 1.0, 2000, 2).unwrap();
    assert!((lin - 1.0).abs() < 1e-12, "{lin}");
    let s = local_holder_seminorm(scalar(|y| y[0].sin()), 1, &[0.0], 1.0, 10_000, 3).unwrap();
    assert!((s - 1.0).abs() <= 0.01, "{s}");
    // never above the Lipschitz constant
    assert!(s <= 1.0 + 1e-12);
}

#[test]
fn holder_of_square_root_is_one_at_half() {
    // |sqrt y - sqrt y'| <= |y - y'|^{1/2} on y, y' >= 0, equality at y' = 0.
    let f = scalar(|y| y[0].abs().sqrt());
    let v = local_holder_seminorm(f, 1, &[0.0], 0.5, 20_000, 4).unwrap();
    assert!(v <= 1.0 + 1e-12 && v > 0.9, "{v}");
}

#[test]
fn holder_rejects_bad_alpha() {
    for alpha in [0.0, 1.5, f64::NAN] {
        let e = local_holder_seminorm(scalar(|y| y[0]), 1, &[0.0], alpha, 10, 0);
        assert!(matches!(e, Err(Error::Argument(_))), "{alpha}");
    }
}

#[test]
fn lp_examples() {
    assert_eq!(local_lp_norm(scalar(|_| 0.0), 1, &[2.0], 3.0, 1000).unwrap(), 0.0);
    let c = local_lp_norm(scalar(|_| -2.5), 1, &[1.0], f64::INFINITY, 1000).unwrap();
    assert!((c - 2.5).abs() < 1e-15);
    let v = local_lp_norm(scalar(|y| y[0]), 1, &[0.0], 2.0, 10_000).unwrap();
    assert!((v - (2.0f64 / 3.0).sqrt()).abs() <= 1e-3, "{v}");
}

#[test]
fn lp_of_radius_on_disc() {
    // int_{B_1} |y|^2 dy = 2 pi int_0^1 r^3 dr = pi / 2 in the plane.
    let b = |y: &[f64], o: &mut [f64]| o.copy_from_slice(y);
    let v = local_lp_norm(b, 2, &[0.0, 0.0], 2.0, 40_000).unwrap();
    let exact = (std::f64::consts::PI / 2.0).sqrt();
    assert!((v - exact).abs() < 5e-3 * exact, "{v} vs {exact}");
}

#[test]
fn lp_errors() {
    let nan = local_lp_norm(scalar(|_| f64::NAN), 1, &[0.0], 2.0, 100);
    assert!(matches!(nan, Err(Error::Evaluation { .. })));
    assert!(local_lp_norm(scalar(|_| 1.0), 1, &[0.0], 1.0, 100).is_err());
    let big = local_lp_norm(scalar(|_| 10.0 * UNBOUNDED_CAP), 1, &[0.0], 4.0, 100).unwrap();
    assert!(big.is_infinite());
}

#[test]
fn weighted_sup_examples() {
    let rho = |x: &[f64]| 1.0 + x[0].abs();
    let grid: Vec<Vec<f64>> = (-10..=10).map(|k| vec![k as f64]).collect();
    assert_eq!(weighted_sup_norm(rho, rho, &grid).unwrap(), 1.0);
    assert_eq!(weighted_sup_norm(|_| 0.0, rho, &grid).unwrap(), 0.0);
    let v = weighted_sup_norm(|x| x[0], rho, &grid).unwrap();
    assert!((v - 10.0 / 11.0).abs() < 1e-15);
    assert!(matches!(weighted_sup_norm(|x| x[0], rho, &[]), Err(Error::Argument(_))));
    assert!(weighted_sup_norm(|x| x[0], |_| 0.5, &grid).is_err());
}

fn cylinder(t0: f64, t1: f64, lo: &[f64], hi: &[f64]) -> Cylinder {
    Cylinder {
        t0,
        t1,
        lo: lo.to_vec(),
        hi: hi.to_vec(),
    }
}

#[test]
fn anisotropic_constant_and_zero() {
    let cyl = cylinder(0.5, 2.0, &[-1.0, 0.0], &[3.0, 0.5]);
    let one = SpaceTimeGrid::sample(&cyl, 9, 17, |_, _| 1.0);
    for (q, p) in [(1.0, 1.0), (2.0, 3.0), (4.0, f64::INFINITY), (f64::INFINITY, 2.0)] {
        let v = anisotropic_norm(&one, q, p, &cyl).unwrap();
        let exact = 1.5f64.powf(1.0 / q) * 2.0f64.powf(1.0 / p);
        assert!((v - exact).abs() < 1e-12 * exact, "q={q} p={p}: {v} vs {exact}");
    }
    let zero = SpaceTimeGrid::sample(&cyl, 5, 5, |_, _| 0.0);
    assert_eq!(anisotropic_norm(&zero, 2.0, 2.0, &cyl).unwrap(), 0.0);
    let other = cylinder(0.5, 2.5, &[-1.0, 0.0], &[3.0, 0.5]);
    assert!(matches!(
        anisotropic_norm(&zero, 2.0, 2.0, &other),
        Err(Error::Argument(_))
    ));
    assert!(anisotropic_norm(&zero, 0.5, 2.0, &cyl).is_err());
}

#[test]
fn anisotropic_trapezoid_converges() {
    // |e^{-t} sin x|_{L^2_t L^2_x} on (0,1) x (0,pi): (pi/2)^{1/2} ((1 - e^{-2})/2)^{1/2}
    let cyl = cylinder(0.0, 1.0, &[0.0], &[std::f64::consts::PI]);
    let u = SpaceTimeGrid::sample(&cyl, 257, 257, |t, x| (-t).exp() * x[0].sin());
    let v = anisotropic_norm(&u, 2.0, 2.0, &cyl).unwrap();
    let exact = (std::f64::consts::FRAC_PI_2 * (1.0 - (-2.0f64).exp()) / 2.0).sqrt();
    assert!((v - exact).abs() < 1e-4 * exact, "{v} vs {exact}");
}

#[test]
fn ellipticity_of_variable_sigma() {
    let dynamics = FnDynamics {
        dim: 2,
        drift: |_: f64, _: &[f64], o: &mut [f64]| o.fill(0.0),
        sigma: |_: f64, x: &[f64], o: &mut [f64]| {
            o.fill(0.0);
            o[0] = 1.0 + 0.5 * x[0].sin();
            o[3] = 2.0;
        },
        constant_sigma: false,
    };
    let model = CoefficientModel::new("diag", Arc::new(dynamics), 1.0, f64::INFINITY, DriftGrowth::Bounded).unwrap();
    let (lo, hi) = model.ellipticity(&[0.0, 0.0]).unwrap();
    assert!((lo - 1.0).abs() < 1e-10 && (hi - 4.0).abs() < 1e-10);
    let points: Vec<Vec<f64>> = (0..8).map(|k| vec![k as f64 - 4.0, 1.0]).collect();
    model.check_ellipticity(&points, 64, 5).unwrap();
    // inf over B_1(0) of (1 + sin(y)/2)^2 is (1 - sin(1)/2)^2
    let c = ellipticity_comparability(&model, &[0.0, 0.0], 20_000, 6).unwrap();
    let exact = (1.0 - 0.5 * 1.0f64.sin()).powi(2);
    assert!(c >= exact - 1e-12 && c < exact + 5e-3, "{c} vs {exact}");
}

#[test]
fn degenerate_diffusion_is_an_assumption_failure() {
    let dynamics = FnDynamics {
        dim: 1,
        drift: |_: f64, _: &[f64], o: &mut [f64]| o[0] = 0.0,
        sigma: |_: f64, x: &[f64], o: &mut [f64]| o[0] = x[0],
        constant_sigma: false,
    };
    let model = CoefficientModel::new("deg", Arc::new(dynamics), 1.0, f64::INFINITY, DriftGrowth::Bounded).unwrap();
    assert!(matches!(model.ellipticity(&[0.0]), Err(Error::Assumption(_))));
    assert!(model.ellipticity(&[2.0]).is_ok());
}

#[test]
fn model_constructor_checks_exponents() {
    let ou = catalog::ou(2, 1.0);
    assert!(CoefficientModel::new("x", ou.dynamics.clone(), 0.0, 3.0, DriftGrowth::Linear).is_err());
    assert!(CoefficientModel::new("x", ou.dynamics.clone(), 0.5, 2.0, DriftGrowth::Linear).is_err());
    assert!(CoefficientModel::new("x", ou.dynamics, 0.5, 2.5, DriftGrowth::Linear).is_ok());
}

#[test]
fn sampled_norms_agree_with_closed_forms() {
    // OU without its closed forms, estimated from samples.
    let ou = catalog::ou(1, 1.0);
    let bare = CoefficientModel::new("ou-bare", ou.dynamics.clone(), 1.0, f64::INFINITY, DriftGrowth::Linear).unwrap();
    for x in [0.0, 5.0] {
        let exact = local_norms(&ou, 0.0, &[x], 0, 0, 0).unwrap();
        assert_eq!(exact.method, NormMethod::ClosedForm);
        let est = local_norms(&bare, 0.0, &[x], 10_000, 10_000, 7).unwrap();
        assert_eq!(est.method, NormMethod::PairSampling);
        assert_eq!(est.sample_count, 10_000);
        assert!(est.holder_a.abs() < 1e-12);
        assert!((est.lp_b - exact.lp_b).abs() < 1e-9, "{} vs {}", est.lp_b, exact.lp_b);
        assert!(
            (est.holder_b - exact.holder_b).abs() < 1e-6,
            "{} vs {}",
            est.holder_b,
            exact.holder_b
        );
    }
}

#[test]
fn weight_class_membership() {
    let poly = WeightSpec {
        rho0: Weight::Polynomial { p: 2.0 },
        rho1: Weight::Polynomial { p: 2.0 },
        w_constant: Some(0.38),
        ..WeightSpec::default()
    };
    let points: Vec<Vec<f64>> = (0..21).map(|k| vec![0.5 * k as f64]).collect();
    poly.check(&points, 200, 1).unwrap();
    let tight = WeightSpec {
        w_constant: Some(0.9),
        ..poly
    };
    assert!(matches!(tight.check(&points, 200, 1), Err(Error::Assumption(_))));
    let gauss = WeightSpec {
        rho0: Weight::Exponential { gamma: 1.0, q: 2.0 },
        w_constant: Some(0.1),
        ..WeightSpec::default()
    };
    assert!(gauss.check(&[vec![10.0]], 200, 1).is_err());
}

fn field(c: [f64; 4]) -> impl Fn(&[f64], &mut [f64]) {
    move |y, o| o[0] = c[0] + c[1] * y[0] + c[2] * y[1] + c[3] * (3.0 * y[0]).sin()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn holder_monotone_in_budget(c in prop::array::uniform4(-3.0f64..3.0), alpha in 0.1f64..1.0, n in 10usize..400, seed in 0u64..1000) {
        let x = [0.3, -0.2];
        let small = local_holder_seminorm(field(c), 1, &x, alpha, n, seed).unwrap();
        let large = local_holder_seminorm(field(c), 1, &x, alpha, 3 * n, seed).unwrap();
        prop_assert!(large >= small);
    }

    #[test]
    fn holder_ignores_added_constant(c in prop::array::uniform4(-3.0f64..3.0), shift in -50.0f64..50.0, alpha in 0.1f64..1.0, seed in 0u64..1000) {
        let x = [1.0, 2.0];
        let base = local_holder_seminorm(field(c), 1, &x, alpha, 300, seed).unwrap();
        let f = field(c);
        let shifted = local_holder_seminorm(move |y: &[f64], o: &mut [f64]| { f(y, o); o[0] += shift; }, 1, &x, alpha, 300, seed).unwrap();
        prop_assert!((base - shifted).abs() <= 1e-9 * base.max(1.0) * (1.0 + shift.abs()));
    }

    #[test]
    fn lp_volume_mean_is_monotone_in_p(c in prop::array::uniform4(-3.0f64..3.0), p1 in 1.1f64..6.0, dp in 0.0f64..6.0) {
        let x = [0.5, 0.5];
        let p2 = p1 + dp;
        let vol = unit_ball_volume(2);
        let n1 = local_lp_norm(field(c), 1, &x, p1, 2000).unwrap() / vol.powf(1.0 / p1);
        let n2 = local_lp_norm(field(c), 1, &x, p2, 2000).unwrap() / vol.powf(1.0 / p2);
        let ninf = local_lp_norm(field(c), 1, &x, f64::INFINITY, 2000).unwrap();
        prop_assert!(n1 <= n2 * (1.0 + 1e-9) + 1e-12, "{} > {}", n1, n2);
        prop_assert!(n2 <= ninf * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn anisotropic_parabolic_rescaling(l1 in 0.2f64..5.0, l2 in 0.2f64..5.0, q in 1.0f64..6.0, p in 1.0f64..6.0) {
        let u = |t: f64, x: &[f64]| (1.0 + t) * (-x[0] * x[0]).exp() * (2.0 + (x[0] * t).cos());
        let cyl = cylinder(0.1, 2.0, &[-2.0], &[3.0]);
        let scaled = cylinder(0.1 / l1, 2.0 / l1, &[-2.0 / l2], &[3.0 / l2]);
        let g = SpaceTimeGrid::sample(&cyl, 64, 256, u);
        let gs = SpaceTimeGrid::sample(&scaled, 64, 256, |t, x| u(l1 * t, &[l2 * x[0]]));
        let n = anisotropic_norm(&g, q, p, &cyl).unwrap();
        let ns = anisotropic_norm(&gs, q, p, &scaled).unwrap();
        let factor = l2.powf(-1.0 / p) * l1.powf(-1.0 / q);
        prop_assert!((ns - factor * n).abs() <= 5e-3 * factor * n, "{} vs {}", ns, factor * n);
        let dn = anisotropic_norm(&g.gradient_magnitude().unwrap(), q, p, &cyl).unwrap();
        let dns = anisotropic_norm(&gs.gradient_magnitude().unwrap(), q, p, &scaled).unwrap();
        let dfactor = l2.powf(1.0 - 1.0 / p) * l1.powf(-1.0 / q);
        prop_assert!((dns - dfactor * dn).abs() <= 5e-3 * dfactor * dn);
    }
}
