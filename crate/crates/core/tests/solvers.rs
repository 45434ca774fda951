use landau_core::analysis::*;
use landau_core::foundations::*;
use landau_core::kernels::{CausalKernel, KernelSpec};
use landau_core::kinetic::*;
use landau_core::volterra::*;
use landau_core::Complex64;
use proptest::prelude::*;

const CM: f64 = 0.398_942_280_401_432_7;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[test]
fn source_fp_compositional_oracle() {
    let fam = InitialDataFamily::gaussian_d1(1.0);
    let (eps, t) = (0.2, 5.0);
    let p = PhysicalParams::d1(Model::FokkerPlanck, eps);
    let k = Wavevector::d1(1);
    let ch = chi(t, eps);
    let oracle = (eps * t).exp() * (-eps * psi(t, eps)).exp() * (-0.5 * ch * ch).exp();
    let v = source_fp(&fam, k, t, &p);
    assert!((v - c(oracle)).norm() <= 1e-12);
    // ξ = 0 reading through the damping exponent.
    let via = (eps * t).exp() * (-fp_damping_exponent(t, &[0.0], k, eps)).exp() * initial_mode(&fam, k, &[ch]);
    assert!((v - via).norm() <= 1e-12);
}

#[test]
fn source_lb_is_free_streaming_trace_without_collisions() {
    let fam = InitialDataFamily::sobolev_tail_d1(4, &[2]);
    let p = PhysicalParams::d1(Model::LinearBoltzmann, 0.0);
    let k = Wavevector::d1(2);
    for &t in &[0.0, 0.3, 4.0] {
        assert_eq!(source_lb(&fam, k, t, &p), initial_mode(&fam, k, &[2.0 * t]));
    }
}

#[test]
fn manufactured_solution_second_order() {
    let e: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&dt| landau_core::verify::manufactured_error(dt, 10.0, CM).unwrap())
        .collect();
    assert!((e[0] / e[1]).log2() >= 1.9);
    assert!((e[1] / e[2]).log2() >= 1.9);
}

#[test]
fn grid_refinement_cauchy() {
    let fam = InitialDataFamily::gaussian_d1(1.0);
    let spec = KernelSpec::new(PhysicalParams::d1(Model::LinearBoltzmann, 0.05));
    let k = Wavevector::d1(1);
    let sol = |n| solve_mode(&spec, &fam, k, &TimeGrid::new(10.0, n).unwrap()).unwrap().values;
    let (a, b, cc) = (sol(100), sol(200), sol(400));
    let d1 = (0..=100).map(|j| (a[j] - b[2 * j]).norm()).fold(0.0, f64::max);
    let d2 = (0..=200).step_by(2).map(|j| (b[j] - cc[2 * j]).norm()).fold(0.0, f64::max);
    assert!((d1 / d2).log2() > 1.8, "{d1} {d2}");
}

#[test]
fn weighted_sup_ratio_is_moderate() {
    let fam = InitialDataFamily::sobolev_tail_d1(4, &[1]);
    let spec = KernelSpec::new(PhysicalParams::d1(Model::LinearBoltzmann, 0.02));
    let traj = solve_mode(&spec, &fam, Wavevector::d1(1), &TimeGrid::with_step(40.0, 0.02).unwrap()).unwrap();
    let r = weighted_sup_ratio(&traj, &fam, 4.0);
    assert!(r.is_finite() && r > 0.1 && r < 10.0, "ratio {r}");
}

#[test]
fn fp_trajectory_gauge() {
    let fam = InitialDataFamily::gaussian_d1(1.0);
    let spec = KernelSpec::new(PhysicalParams::d1(Model::FokkerPlanck, 0.1));
    let traj = solve_mode(&spec, &fam, Wavevector::d1(1), &TimeGrid::new(5.0, 50).unwrap()).unwrap();
    assert_eq!(traj.gauge_rate, 0.1);
    let d = traj.density();
    for (j, (u, r)) in traj.values.iter().zip(&d).enumerate() {
        assert!((u * (-0.1 * traj.times[j]).exp() - r).norm() < 1e-15);
    }
    assert_eq!(traj.rows().count(), 51);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn volterra_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, w in 0.1f64..4.0) {
        let mk = KernelSpec::new(PhysicalParams::d1(Model::LinearBoltzmann, 0.05)).at(Wavevector::d1(1)).unwrap();
        let g = TimeGrid::new(6.0, 120).unwrap();
        let s1 = |t: f64| Complex64::new((w * t).cos(), 0.0);
        let s2 = |t: f64| Complex64::new(0.0, (-t).exp());
        let u1 = solve_volterra(&mk, s1, &g).unwrap();
        let u2 = solve_volterra(&mk, s2, &g).unwrap();
        let u = solve_volterra(&mk, |t| s1(t) * a + s2(t) * b, &g).unwrap();
        for j in 0..u.len() {
            let lin = u1[j] * a + u2[j] * b;
            prop_assert!((u[j] - lin).norm() <= 1e-12 * (1.0 + lin.norm()));
        }
    }
}

#[test]
fn pure_damping_and_transport() {
    // No force (c_M = 0): ĥ(t,k,ξ) = e^{−εt} ĥ_in(k, ξ + kt).
    let fam = InitialDataFamily::gaussian_d1(1.0);
    let eps = 0.1;
    let p = PhysicalParams::d1(Model::LinearBoltzmann, eps);
    let g = XiGrid::new(0.05, 30.0).unwrap();
    let k = Wavevector::d1(1);
    let mut s = ModeState::from_initial(&fam, k, g).unwrap();
    let mut rho = Complex64::new(0.0, 0.0);
    for _ in 0..40 {
        rho = step_lb(&mut s, 0.05, &p, rho, 0.0).unwrap();
    }
    let t = 2.0;
    for (i, v) in s.values.iter().enumerate() {
        let x = g.xi(i);
        if x + t > g.extent() {
            continue;
        }
        let exact = (-eps * t).exp() * (-0.5 * (x + t) * (x + t)).exp();
        assert!((v.re - exact).abs() <= 1e-12, "{x}");
    }
}

#[test]
fn fp_single_step_without_force_matches_characteristics() {
    let fam = InitialDataFamily::gaussian_d1(1.0);
    let eps = 0.3;
    let p = PhysicalParams::d1(Model::FokkerPlanck, eps);
    let g = XiGrid::new(0.01, 20.0).unwrap();
    let k = Wavevector::d1(1);
    let mut s = ModeState::from_initial(&fam, k, g).unwrap();
    let dt = 0.37;
    step_fp(&mut s, dt, &p, Complex64::new(0.0, 0.0), 0.0).unwrap();
    let worst = s
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| (v - free_solution(&fam, &p, k, dt, g.xi(i))).norm())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-8, "{worst}");
}

fn rho_at(settings_dt: f64, model: Model) -> Vec<Complex64> {
    let fam = InitialDataFamily::gaussian_d1(1.0);
    let p = PhysicalParams::d1(model, 0.1);
    let ks = KineticSettings::new(settings_dt, 2.0, 0.01, 20.0);
    run_scenario(&p, &fam, &ks).unwrap().modes[0].rho.clone()
}

#[test]
fn kinetic_self_convergence_in_time() {
    for model in [Model::LinearBoltzmann, Model::FokkerPlanck] {
        let a = rho_at(0.1, model);
        let b = rho_at(0.05, model);
        let cc = rho_at(0.025, model);
        let d1 = (a[20] - b[40]).norm();
        let d2 = (b[40] - cc[80]).norm();
        assert!((d1 / d2).log2() >= 1.9, "{model:?}: {d1} {d2}");
    }
}

#[test]
fn mean_zero_mode_carries_no_density() {
    let fam = InitialDataFamily::new(
        Profile::GaussianHermite {
            poly: vec![c(0.0), c(1.0)],
            c: 0.5,
        },
        vec![
            ModeAmplitude {
                k: Wavevector::d1(0),
                amplitude: c(1.0),
            },
            ModeAmplitude {
                k: Wavevector::d1(1),
                amplitude: c(0.5),
            },
        ],
    )
    .unwrap();
    for model in [Model::LinearBoltzmann, Model::FokkerPlanck] {
        let p = PhysicalParams::d1(model, 0.05);
        let out = run_scenario(&p, &fam, &KineticSettings::new(0.05, 5.0, 0.05, 20.0)).unwrap();
        let zero = out.modes.iter().find(|h| h.k.is_zero()).unwrap();
        assert!(zero.rho.iter().all(|r| r.norm() == 0.0));
    }
}

#[test]
fn collisionless_density_decays() {
    let fam = InitialDataFamily::gaussian_d1(1.0);
    let p = PhysicalParams::d1(Model::Collisionless, 0.0);
    let out = run_scenario(&p, &fam, &KineticSettings::new(0.01, 12.0, 0.05, 30.0)).unwrap();
    let last = *out.rho_norm.last().unwrap();
    assert!(last < 1e-6 * out.rho_norm[0], "{last}");
}

#[test]
fn crossvalidation_improves_under_refinement() {
    use landau_core::verify::{crossval_deviation, CrossValidation};
    let coarse = CrossValidation {
        dt: 0.1,
        dxi: 0.2,
        xi_extent: 40.0,
        t_end: 20.0,
    };
    let fine = CrossValidation {
        dt: 0.05,
        dxi: 0.1,
        ..coarse
    };
    for model in [Model::LinearBoltzmann, Model::FokkerPlanck] {
        let a = crossval_deviation(model, 0.05, &coarse, CM).unwrap();
        let b = crossval_deviation(model, 0.05, &fine, CM).unwrap();
        assert!(b < a, "{model:?}: {a} -> {b}");
    }
}

#[test]
fn interpolated_and_exact_free_streaming_agree() {
    let fam = InitialDataFamily::gaussian_d1(1.0);
    let p = PhysicalParams::d1(Model::FokkerPlanck, 0.05);
    let mut ks = KineticSettings::new(0.02, 10.0, 0.02, 30.0);
    let a = run_scenario(&p, &fam, &ks).unwrap();
    ks.free_streaming = FreeStreaming::Interpolated;
    let b = run_scenario(&p, &fam, &ks).unwrap();
    let d = a.rho_norm.iter().zip(&b.rho_norm).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(d < 1e-5, "{d}");
}

#[test]
fn boundary_mass_is_flagged() {
    let fam = InitialDataFamily::gaussian_d1(1.0);
    let p = PhysicalParams::d1(Model::Collisionless, 0.0);
    let out = run_scenario(&p, &fam, &KineticSettings::new(0.05, 5.0, 0.05, 4.0)).unwrap();
    assert!(!out.boundary_warnings.is_empty());
}

#[test]
fn exponential_beats_polynomials() {
    let t: Vec<f64> = (0..=400).map(|i| i as f64 * 0.1).collect();
    let v: Vec<f64> = t.iter().map(|&t| (-t).exp()).collect();
    let a = fit_algebraic_decay(&t, &v, (5.0, 10.0)).unwrap().rate;
    let b = fit_algebraic_decay(&t, &v, (5.0, 30.0)).unwrap().rate;
    assert!(b > a);
}

#[test]
fn lb_homogeneous_probe_rate() {
    let eps = 0.07;
    let p = PhysicalParams::d1(Model::LinearBoltzmann, eps);
    let fam = InitialDataFamily::hermite1_homogeneous_d1();
    let mut ks = KineticSettings::new(0.05, 30.0, 0.05, 8.0);
    ks.free_streaming = FreeStreaming::Interpolated;
    ks.probes = vec![1.0];
    let out = run_scenario(&p, &fam, &ks).unwrap();
    let v: Vec<f64> = out.modes[0].probe_values[0].iter().map(|z| z.norm()).collect();
    let f = fit_exponential_rate(&out.times, &v, (5.0, 30.0)).unwrap();
    assert!((f.rate - eps).abs() <= 1e-6);
    assert!(out.homogeneous_relation_error.unwrap() <= 1e-10);
}

#[test]
fn sobolev_checks() {
    let sample: Vec<(Wavevector, f64)> = (1..=400).map(|i| (Wavevector::d1(1), i as f64 * 0.25)).collect();
    let gauss = InitialDataFamily::gaussian_d1(1.0);
    let g = sobolev_fourier_check(&gauss, 4, 1.0, &sample).unwrap();
    assert!(g.constant.is_finite() && g.constant > 0.0 && g.bounded);

    let tail = InitialDataFamily::sobolev_tail_d1(4, &[1]);
    let sharp = sobolev_fourier_check(&tail, 4, 1.0, &sample).unwrap();
    assert!(sharp.bounded && sharp.constant.is_finite());
    let over = sobolev_fourier_check(&tail, 6, 1.0, &sample).unwrap();
    assert!(!over.bounded);
    let last = over.running_sup.last().unwrap().1;
    let mid = over.running_sup[over.running_sup.len() / 2].1;
    assert!(last > 1.5 * mid);

    let zero = InitialDataFamily::zero(Profile::FiniteSobolevTail { n_decl: 4 });
    let z = sobolev_fourier_check(&zero, 4, 1.0, &sample).unwrap();
    assert_eq!(z.constant, 0.0);
}

#[test]
fn continuity_study_trend() {
    let scenario = ContinuityScenario {
        family: InitialDataFamily::sobolev_tail_d1(4, &[1, 2]),
        grid: TimeGrid::with_step(40.0, 0.05).unwrap(),
        c_m: CM,
    };
    let t = epsilon_continuity_study(Model::LinearBoltzmann, &[0.0, 0.02, 0.08], &scenario).unwrap();
    assert_eq!(t.rows[0], (0.0, 0.0));
    assert!(t.rows[1].1 <= t.rows[2].1);
    assert!((0.8..=1.2).contains(&t.exponent));
}

#[test]
fn fp_weighted_envelope_is_bounded() {
    let fam = InitialDataFamily::sobolev_tail_d1(4, &[1]);
    let eps = 0.05;
    let spec = KernelSpec::new(PhysicalParams::d1(Model::FokkerPlanck, eps));
    let grid = TimeGrid::with_step(40.0, 0.02).unwrap();
    let traj = solve_mode(&spec, &fam, Wavevector::d1(1), &grid).unwrap();
    let rho: Vec<f64> = traj.density().iter().map(|z| z.norm()).collect();
    assert!(envelope_sup(&traj.times, &rho, Weight::ExpAlgebraic { epsilon: eps, n: 4.0 }).bounded);
}

#[test]
fn mode_kernel_is_causal_trait_object() {
    let mk = KernelSpec::new(PhysicalParams::d1(Model::FokkerPlanck, 0.1)).at(Wavevector::d1(1)).unwrap();
    let dynk: &dyn CausalKernel = &mk;
    assert_eq!(dynk.eval(-1.0), 0.0);
    let g = TimeGrid::new(1.0, 10).unwrap();
    assert!(solve_volterra(dynk, |_| c(1.0), &g).is_ok());
}

