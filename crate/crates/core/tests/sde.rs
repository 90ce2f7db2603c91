use gradest_core::catalog;
use gradest_core::coeffs::{Growth, Weight, WeightSpec};
use gradest_core::sde::*;
use gradest_core::stats::{linear_fit, MeanVar};
use gradest_core::Error;
use proptest::prelude::*;

fn cfg(step: f64, horizon: f64, paths: usize, seed: u64) -> SimulationConfig {
    SimulationConfig::new(Scheme::Euler, step, horizon, paths, seed)
}

fn column_stats(ens: &PathEnsemble, k: usize) -> MeanVar {
    let mut s = MeanVar::new();
    for row in ens.valid_terminals() {
        s.push(row[k]);
    }
    s
}

#[test]
fn brownian_variance_carries_the_sqrt2() {
    let ens = simulate(&catalog::heat(1), &cfg(0.25, 1.0, 100_000, 1), &[0.0]).unwrap();
    let sq: Vec<f64> = ens.valid_terminals().map(|r| r[0] * r[0]).collect();
    let mut s = MeanVar::new();
    sq.iter().for_each(|&v| s.push(v));
    // E X^2 = 2T; Var(X^2) = 2 (2T)^2
    assert!(
        (s.mean - 2.0).abs() <= 3.0 * s.std_error(),
        "{} +- {}",
        s.mean,
        s.std_error()
    );
    assert_eq!(ens.diverged, 0);
}

#[test]
fn ou_mean_is_exponential() {
    let model = catalog::ou(1, 1.0);
    for (x, t) in [(1.0, 0.5), (-2.0, 1.0), (3.0, 2.0)] {
        let ens = simulate(&model, &cfg(1e-3, t, 20_000, 2), &[x]).unwrap();
        let s = column_stats(&ens, 0);
        let exact = (-t).exp() * x;
        assert!(
            (s.mean - exact).abs() <= 3.0 * s.std_error(),
            "x={x} t={t}: {} vs {exact}",
            s.mean
        );
    }
}

#[test]
fn ou_stationary_variance() {
    let ens = simulate(&catalog::ou(1, 1.0), &cfg(1e-3, 10.0, 50_000, 3), &[2.0]).unwrap();
    let s = column_stats(&ens, 0);
    assert!((s.variance() - 1.0).abs() <= 0.02, "{}", s.variance());
}

#[test]
fn euler_weak_order_is_one() {
    // Euler keeps OU linear, so the bias is (1-h)^{T/h} x - e^{-T} x; a large
    // start point lifts it far above the noise.
    let model = catalog::ou(1, 1.0);
    let x = 1000.0;
    let exact = (-1.0f64).exp() * x;
    let (mut lh, mut le) = (Vec::new(), Vec::new());
    for k in 4..=9 {
        let h = 0.5f64.powi(k);
        let ens = simulate(&model, &cfg(h, 1.0, 4000, 4), &[x]).unwrap();
        let s = column_stats(&ens, 0);
        lh.push(h.ln());
        le.push((s.mean - exact).abs().ln());
    }
    let fit = linear_fit(&lh, &le).unwrap();
    assert!((0.7..=1.3).contains(&fit.slope), "{}", fit.slope);
}

#[test]
fn tamed_scheme_survives_cubic_drift() {
    let model = catalog::cubic(1);
    let tamed = SimulationConfig::new(Scheme::TamedEuler, 1e-2, 10.0, 2000, 5);
    let ens = simulate(&model, &tamed, &[20.0]).unwrap();
    assert_eq!(ens.diverged, 0);
    assert!(ens.terminal.iter().all(|v| v.is_finite()));
    let mut euler = cfg(1e-2, 10.0, 2000, 5);
    assert!(matches!(
        simulate(&model, &euler, &[20.0]),
        Err(Error::Configuration(_))
    ));
    euler.force_scheme = true;
    // h x^2 = 4 > 2: the explicit step overshoots and blows up
    assert!(matches!(simulate(&model, &euler, &[20.0]), Err(Error::Diverged { .. })));
}

#[test]
fn config_validation() {
    let model = catalog::heat(1);
    assert!(simulate(&model, &cfg(2.0, 1.0, 10, 0), &[0.0]).is_err());
    assert!(simulate(&model, &cfg(0.1, 1.0, 0, 0), &[0.0]).is_err());
    assert!(simulate(&model, &cfg(0.1, 1.0, 10, 0), &[0.0, 0.0]).is_err());
    let mut big = cfg(1e-6, 1.0, 1_000_000, 0);
    big.budget_cap = 1e9;
    assert!(matches!(simulate(&model, &big, &[0.0]), Err(Error::Configuration(_))));
    assert!(simulate(&model, &cfg(0.1, 1.0, 10, 0).with_records(&[1.5]), &[0.0]).is_err());
}

#[test]
fn trajectories_hit_record_times() {
    let mut c = cfg(0.03, 1.0, 50, 6).with_records(&[0.1, 0.5]);
    c.keep_trajectories = true;
    let ens = simulate(&catalog::ou(2, 1.0), &c, &[1.0, -1.0]).unwrap();
    assert_eq!(ens.record_times.last(), Some(&1.0));
    assert!(ens.record_times.contains(&0.1) && ens.record_times.contains(&0.5));
    let nrec = ens.record_times.len();
    let traj = ens.trajectories.as_ref().unwrap();
    assert_eq!(traj.len(), 50 * nrec * 2);
    for i in 0..50 {
        let last = &traj[(i * nrec + nrec - 1) * 2..(i * nrec + nrec) * 2];
        assert_eq!(last, ens.terminal_row(i));
    }
}

#[test]
fn jacobian_of_ou_and_heat() {
    let c = cfg(1e-3, 1.0, 100, 7).with_records(&[0.0, 0.5]);
    let ou = jacobian_flow(&catalog::ou(2, 1.0), &c, &[0.5, 0.5]).unwrap();
    let heat = jacobian_flow(&catalog::heat(2), &c, &[0.5, 0.5]).unwrap();
    for (r, &t) in ou.record_times.iter().enumerate() {
        let decay = (1.0 - 1e-3f64).powf(t / 1e-3);
        for p in 0..100 {
            let j = ou.matrix(p, r);
            assert!((j[0] - decay).abs() < 1e-12 && (j[3] - decay).abs() < 1e-12);
            assert!(j[1] == 0.0 && j[2] == 0.0);
            assert!((j[0] - (-t).exp()).abs() < 1e-3);
            assert_eq!(heat.matrix(p, r), &[1.0, 0.0, 0.0, 1.0]);
        }
    }
    assert_eq!(ou.matrix(0, 0), &[1.0, 0.0, 0.0, 1.0]);
}

#[test]
fn cubic_jacobian_matches_flow_differences() {
    let model = catalog::cubic(1);
    let c = SimulationConfig::new(Scheme::TamedEuler, 1e-3, 1.0, 4000, 8);
    let flow = jacobian_flow(&model, &c, &[0.0]).unwrap();
    let bump = 1e-4;
    let up = simulate(&model, &c, &[bump]).unwrap();
    let down = simulate(&model, &c, &[-bump]).unwrap();
    let mut diff = MeanVar::new();
    let last = flow.record_times.len() - 1;
    for p in 0..4000 {
        let fd = (up.terminal_row(p)[0] - down.terminal_row(p)[0]) / (2.0 * bump);
        diff.push(flow.matrix(p, last)[0] - fd);
    }
    assert!(
        diff.mean.abs() <= 3.0 * diff.std_error() + 1e-6,
        "{} +- {}",
        diff.mean,
        diff.std_error()
    );
}

#[test]
fn lyapunov_pairs() {
    let v = LyapunovForm::Polynomial { p: 2.0 };
    let grid: Vec<Vec<f64>> = (0..=400).map(|k| vec![-20.0 + 0.1 * k as f64]).collect();
    let ou = lyapunov_fit(&catalog::ou(1, 1.0), &v, &grid, 10.0).unwrap();
    assert!((ou.c0 + 2.0).abs() < 1e-9 && (ou.c1 - 4.0).abs() < 1e-9, "{ou:?}");
    let heat = lyapunov_fit(&catalog::heat(1), &v, &grid, 10.0).unwrap();
    assert!(heat.c0.abs() < 1e-9 && (heat.c1 - 2.0).abs() < 1e-9, "{heat:?}");
    let cubic = lyapunov_fit(&catalog::cubic(1), &v, &grid, 10.0).unwrap();
    assert!(cubic.c0 < 0.0, "{cubic:?}");
    // LV = 2 + 2 x^2 = 2 V for b = +x: not below the cap
    assert!(matches!(
        lyapunov_fit(&catalog::anti(1), &v, &grid, 1.0),
        Err(Error::Infeasible(_))
    ));
}

#[test]
fn lyapunov_pair_in_the_plane() {
    // LV = 2d - 2|x|^2 = -2V + 2d + 2 with d = 2
    let v = LyapunovForm::Polynomial { p: 2.0 };
    let pts: Vec<Vec<f64>> = (0..200)
        .map(|k| {
            let a = 0.1 * k as f64;
            vec![0.2 * k as f64 * a.cos(), 0.1 * k as f64 * a.sin()]
        })
        .collect();
    let fit = lyapunov_fit(&catalog::ou(2, 1.0), &v, &pts, 10.0).unwrap();
    assert!((fit.c0 + 2.0).abs() < 1e-9 && (fit.c1 - 6.0).abs() < 1e-9, "{fit:?}");
}

#[test]
fn moment_checks() {
    let ou_weights = WeightSpec {
        rho0: Weight::Polynomial { p: 2.0 },
        rho1: Weight::Polynomial { p: 2.0 },
        ell0: Growth::Lyapunov { c0: -2.0, c1: 4.0 },
        ..WeightSpec::default()
    };
    let times = [0.25, 0.5, 1.0, 2.0, 4.0];
    for x in [0.0, 1.5] {
        let rep = moment_check(
            &catalog::ou(1, 1.0),
            &cfg(1e-2, 4.0, 20_000, 9),
            &ou_weights,
            &[x],
            &times,
        )
        .unwrap();
        assert!(rep.pass, "{rep:?}");
        // E V(X_t) = e^{-2t} V(x) + 2 (1 - e^{-2t}), up to Euler bias
        for (k, &t) in rep.times.iter().enumerate() {
            let exact = (-2.0 * t).exp() * (1.0 + x * x) + 2.0 * (1.0 - (-2.0 * t).exp());
            assert!(
                (rep.mean[k] - exact).abs() <= 3.0 * rep.std_error[k] + 0.02 * exact,
                "t={t}"
            );
        }
    }
    let flat = moment_check(
        &catalog::heat(1),
        &cfg(0.1, 1.0, 100, 10),
        &WeightSpec::default(),
        &[0.0],
        &[0.5, 1.0],
    )
    .unwrap();
    assert!(flat.ratio.iter().all(|&r| r == 1.0));
    let cubic_weights = WeightSpec {
        rho0: Weight::Polynomial { p: 2.0 },
        ..WeightSpec::default()
    };
    let tamed = SimulationConfig::new(Scheme::TamedEuler, 1e-2, 8.0, 5000, 11);
    let rep = moment_check(
        &catalog::cubic(1),
        &tamed,
        &cubic_weights,
        &[3.0],
        &[1.0, 2.0, 4.0, 8.0],
    )
    .unwrap();
    let (m4, m8) = (rep.mean[2], rep.mean[3]);
    assert!(
        (m4 - m8).abs() <= 3.0 * (rep.std_error[2].hypot(rep.std_error[3])),
        "{:?}",
        rep.mean
    );
    assert!(rep.mean.iter().all(|&m| m < 3.0));
}

#[test]
fn extra_paths_do_not_disturb_earlier_ones() {
    let model = catalog::ou(2, 0.7);
    let a = simulate(&model, &cfg(0.01, 0.5, 37, 12), &[0.1, 0.2]).unwrap();
    let b = simulate(&model, &cfg(0.01, 0.5, 1000, 12), &[0.1, 0.2]).unwrap();
    assert_eq!(a.terminal[..], b.terminal[..74]);
}

#[test]
fn worker_count_does_not_change_results() {
    let model = catalog::ou(1, 1.0);
    let c = cfg(0.01, 1.0, 3000, 13);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let ens = simulate(&model, &c, &[1.0]).unwrap();
                let flow = jacobian_flow(
                    &catalog::cubic(1),
                    &SimulationConfig {
                        scheme: Scheme::TamedEuler,
                        ..c.clone()
                    },
                    &[1.0],
                )
                .unwrap();
                (ens.terminal, flow.mean, flow.std_error)
            })
    };
    let one = run(1);
    for threads in [2, 5] {
        let other = run(threads);
        assert!(one.0.iter().zip(&other.0).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert!(one.1.iter().zip(&other.1).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert!(one.2.iter().zip(&other.2).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn same_seed_same_ensemble(seed in any::<u64>(), x in -3.0f64..3.0, paths in 1usize..200) {
        let model = catalog::ou(1, 1.0);
        let c = cfg(0.05, 1.0, paths, seed);
        let a = simulate(&model, &c, &[x]).unwrap();
        let b = simulate(&model, &c, &[x]).unwrap();
        prop_assert_eq!(a, b);
    }
}
