use gradest_core::catalog;
use gradest_core::pdeoracle::*;
use gradest_core::sde::Scheme;
use gradest_core::semigroup::{estimate_semigroup, EstimatorConfig};
use gradest_core::{Error, Observable};
use proptest::prelude::*;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

fn ncdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

#[test]
fn gaussian_semigroup_examples() {
    let one = [1.0];
    for t in [0.01, 0.1, 1.0, 5.0] {
        assert!(
            gaussian_semigroup_exact(&Observable::Sign, t, &[0.0], &one)
                .unwrap()
                .abs()
                < 1e-14
        );
        let h = 1e-6;
        let up = gaussian_semigroup_exact(&Observable::Sign, t, &[h], &one).unwrap();
        let down = gaussian_semigroup_exact(&Observable::Sign, t, &[-h], &one).unwrap();
        let slope = (up - down) / (2.0 * h);
        let exact = 1.0 / (PI * t).sqrt();
        assert!((slope - exact).abs() <= 1e-5 * exact, "t={t}: {slope} vs {exact}");
        let sq = Observable::Polynomial {
            coeffs: vec![0.0, 0.0, 1.0],
        };
        let v = gaussian_semigroup_exact(&sq, t, &[0.0], &one).unwrap();
        assert!((v - 2.0 * t).abs() < 1e-12 * t.max(1.0), "{v}");
    }
}

#[test]
fn gaussian_semigroup_with_matrix_diffusion() {
    // only a_00 matters for an observable of x_0
    let a = [2.0, 0.5, 0.5, 1.0];
    let t = 0.3;
    let v = gaussian_semigroup_exact(&Observable::Indicator { threshold: 1.0 }, t, &[0.4, 7.0], &a).unwrap();
    let exact = ncdf((0.4 - 1.0) / (2.0 * t * 2.0f64).sqrt());
    assert!((v - exact).abs() < 1e-10, "{v} vs {exact}");
    let (_, d1, d2) = gaussian_semigroup_derivatives(&Observable::Cos, t, &[0.4, 0.0], &a).unwrap();
    let damp = (-t * 2.0f64).exp();
    assert!((d1 + damp * 0.4f64.sin()).abs() < 1e-10 && (d2 + damp * 0.4f64.cos()).abs() < 1e-10);
    assert!(gaussian_semigroup_exact(&Observable::Sin, t, &[0.0, 0.0], &[1.0, 2.0, 2.0, 1.0]).is_err());
    assert!(gaussian_semigroup_exact(&Observable::Sin, t, &[0.0], &[1.0, 0.0]).is_err());
}

#[test]
fn ou_closed_form_examples() {
    for t in [0.1f64, 1.0, 3.0] {
        let s2 = 1.0 - (-2.0 * t).exp();
        let c = ou_closed_form(&Observable::Sin, 1.0, t, &[0.0]).unwrap();
        assert!((c.gradient - (-t).exp() * (-s2 / 2.0).exp()).abs() < 1e-14);
        assert!(c.value.abs() < 1e-15);
        for kappa in [0.5, 1.0, 2.0] {
            let lin = ou_closed_form(&Observable::Polynomial { coeffs: vec![0.0, 1.0] }, kappa, t, &[1.7]).unwrap();
            assert!((lin.gradient - (-kappa * t).exp()).abs() < 1e-14);
            assert!(lin.hessian.abs() < 1e-14);
        }
    }
    for phi in [
        Observable::Sin,
        Observable::Tanh,
        Observable::Polynomial {
            coeffs: vec![1.0, -2.0, 0.0, 0.5],
        },
    ] {
        let c = ou_closed_form(&phi, 1.0, 0.0, &[0.8]).unwrap();
        assert!((c.value - phi.eval(&[0.8])).abs() < 1e-14, "{phi:?}");
    }
}

#[test]
fn ou_closed_form_against_hand_formulas() {
    let (kappa, t, x) = (0.7f64, 0.9f64, 1.3f64);
    let m = (-kappa * t).exp() * x;
    let s2 = (1.0 - (-2.0 * kappa * t).exp()) / kappa;
    assert!((ou_variance(kappa, t) - s2).abs() < 1e-15);
    assert!((ou_variance(0.0, t) - 2.0 * t).abs() < 1e-15);
    let quartic = ou_closed_form(
        &Observable::Polynomial {
            coeffs: vec![0.0, 0.0, 0.0, 0.0, 1.0],
        },
        kappa,
        t,
        &[x],
    )
    .unwrap();
    let exact = m.powi(4) + 6.0 * m * m * s2 + 3.0 * s2 * s2;
    assert!((quartic.value - exact).abs() < 1e-12 * exact);
    let sign = ou_closed_form(&Observable::Sign, kappa, t, &[x]).unwrap();
    assert!((sign.value - (2.0 * ncdf(m / s2.sqrt()) - 1.0)).abs() < 1e-14);
    let cos = ou_closed_form(&Observable::Cos, kappa, t, &[x]).unwrap();
    assert!((cos.value - (-s2 / 2.0).exp() * m.cos()).abs() < 1e-14);
    // tanh goes through quadrature; its derivatives must match differences
    let h = 1e-4;
    let th = |y: f64| ou_closed_form(&Observable::Tanh, kappa, t, &[y]).unwrap();
    let c = th(x);
    let fd1 = (th(x + h).value - th(x - h).value) / (2.0 * h);
    let fd2 = (th(x + h).value - 2.0 * c.value + th(x - h).value) / (h * h);
    assert!((c.gradient - fd1).abs() < 1e-7 && (c.hessian - fd2).abs() < 1e-5);
}

#[test]
fn jump_observables_have_no_derivative_at_time_zero() {
    assert!(matches!(
        ou_closed_form(&Observable::Sign, 1.0, 0.0, &[0.0]),
        Err(Error::Domain(_))
    ));
    assert!(ou_closed_form(&Observable::Sin, 1.0, -1.0, &[0.0]).is_err());
}

#[test]
fn fd_solver_on_heat_sin() {
    let heat = catalog::heat(1);
    let sol = solve_kolmogorov_fd(&heat, &Observable::Sin, 1.0, (-20.0, 20.0), 1601, 400).unwrap();
    let (a, b) = sol.interior();
    assert!((a + 20.0 - 4.0 * 2.0f64.sqrt()).abs() < 1e-12 && b > 0.0);
    for k in -10..=10 {
        let x = 0.4 * k as f64;
        let (v, d1, _) = sol.evaluate(x).unwrap();
        let e = (-1.0f64).exp();
        assert!((v - e * x.sin()).abs() < 1e-4, "x={x}: {v}");
        assert!((d1 - e * x.cos()).abs() < 1e-3);
    }
    assert!(matches!(sol.evaluate(-19.0), Err(Error::Domain(_))));
    assert_eq!(sol.boundary, BoundaryPolicy::LinearExtrapolation);
}

#[test]
fn fd_solver_matches_ou_closed_form() {
    let ou = catalog::ou(1, 1.0);
    for phi in [
        Observable::Sin,
        Observable::Tanh,
        Observable::Indicator { threshold: 0.5 },
    ] {
        let sol = solve_kolmogorov_fd(&ou, &phi, 1.0, (-15.0, 15.0), 1201, 400).unwrap();
        for x in [-2.0, -0.5, 0.0, 0.7, 2.0] {
            let (v, _, _) = sol.evaluate(x).unwrap();
            let c = ou_closed_form(&phi, 1.0, 1.0, &[x]).unwrap();
            assert!((v - c.value).abs() < 1e-3, "{phi:?} at {x}: {v} vs {}", c.value);
        }
    }
}

#[test]
fn fd_solver_keeps_constants() {
    let sol = solve_kolmogorov_fd(
        &catalog::ou(1, 1.0),
        &Observable::Constant { value: -3.25 },
        2.0,
        (-20.0, 20.0),
        401,
        50,
    )
    .unwrap();
    assert!(sol.values.iter().all(|v| (v + 3.25).abs() < 1e-13));
}

#[test]
fn fd_solver_is_second_order() {
    let heat = catalog::heat(1);
    let err = |nodes: usize| {
        let sol = solve_kolmogorov_fd(&heat, &Observable::Sin, 1.0, (-20.0, 20.0), nodes, 2000).unwrap();
        (-20..=20)
            .map(|k| 0.2 * k as f64)
            .map(|x| (sol.evaluate(x).unwrap().0 - (-1.0f64).exp() * x.sin()).abs())
            .fold(0.0, f64::max)
    };
    let ratio = err(201) / err(401);
    assert!((3.0..=5.0).contains(&ratio), "{ratio}");
}

#[test]
fn fd_solver_respects_maximum_principle() {
    for phi in [
        Observable::Sign,
        Observable::Indicator { threshold: 0.0 },
        Observable::Tanh,
    ] {
        let sol = solve_kolmogorov_fd(&catalog::ou(1, 1.0), &phi, 1.0, (-12.0, 12.0), 481, 200).unwrap();
        assert!(
            sol.max_principle_excess <= 1e-9,
            "{phi:?}: {}",
            sol.max_principle_excess
        );
    }
}

#[test]
fn fd_solver_errors() {
    let heat = catalog::heat(1);
    assert!(matches!(
        solve_kolmogorov_fd(&heat, &Observable::Sin, 1.0, (-5.0, 5.0), 101, 10),
        Err(Error::Domain(_))
    ));
    assert!(solve_kolmogorov_fd(&catalog::heat(2), &Observable::Sin, 1.0, (-20.0, 20.0), 101, 10).is_err());
    assert!(solve_kolmogorov_fd(&heat, &Observable::Sin, 1.0, (1.0, -1.0), 101, 10).is_err());
    assert!(solve_kolmogorov_fd(&heat, &Observable::Sin, 0.0, (-20.0, 20.0), 101, 10).is_err());
}

#[test]
fn monte_carlo_agrees_with_fd_oracle() {
    // catalog 1D models without a closed form are checked against the grid
    let cfg = EstimatorConfig::new(20_000, 2e-3, 31).with_scheme(Scheme::TamedEuler);
    for name in ["heat", "ou", "geometric_drift", "cubic"] {
        let model = catalog::model(name, 1).unwrap();
        let sol = solve_kolmogorov_fd(&model, &Observable::Tanh, 0.5, (-10.0, 10.0), 801, 200).unwrap();
        for x in [0.0, 1.0] {
            let mc = estimate_semigroup(&model, &Observable::Tanh, 0.5, &[x], &cfg).unwrap();
            let (v, _, _) = sol.evaluate(x).unwrap();
            assert!(
                (mc.value[0] - v).abs() <= 3.0 * mc.std_error[0],
                "{name} at {x}: {} +- {} vs {v}",
                mc.value[0],
                mc.std_error[0]
            );
        }
    }
}

#[test]
fn cylinder_membership() {
    let q = CylinderSpec::new(1.0, vec![0.0, 0.0], 0.5).unwrap();
    assert!(q.contains(1.2, &[0.3, 0.3]));
    assert!(!q.contains(1.3, &[0.0, 0.0]));
    assert!(!q.contains(1.0, &[0.4, 0.4]));
    assert!(CylinderSpec::new(0.0, vec![0.0], 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ou_closed_form_reduces_to_heat(t in 0.01f64..3.0, x in -3.0f64..3.0) {
        for phi in [Observable::Sin, Observable::Sign, Observable::Polynomial { coeffs: vec![0.5, 1.0, -1.0] }] {
            let ou = ou_closed_form(&phi, 0.0, t, &[x]).unwrap();
            let (v, d1, d2) = gaussian_semigroup_derivatives(&phi, t, &[x], &[1.0]).unwrap();
            prop_assert!((ou.value - v).abs() < 1e-9);
            prop_assert!((ou.gradient - d1).abs() < 1e-8 * (1.0 + d1.abs()));
            prop_assert!((ou.hessian - d2).abs() < 1e-7 * (1.0 + d2.abs()));
        }
    }

    #[test]
    fn semigroup_of_bounded_observable_stays_in_range(t in 0.01f64..3.0, x in -5.0f64..5.0, kappa in 0.1f64..3.0) {
        for phi in [Observable::Sign, Observable::Tanh, Observable::Indicator { threshold: 0.3 }] {
            let v = ou_closed_form(&phi, kappa, t, &[x]).unwrap().value;
            let (lo, hi) = if matches!(phi, Observable::Indicator { .. }) { (0.0, 1.0) } else { (-1.0, 1.0) };
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }
}
