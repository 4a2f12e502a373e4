//! Worked examples checked against values computed independently in this
//! file (hand algebra, closed forms, brute-force root finding).

use approx::assert_relative_eq;
use smallvec::smallvec;
use spinsqueeze::analytic::*;
use spinsqueeze::gaussian::*;
use spinsqueeze::numerics::*;
use spinsqueeze::physics::{kappa_tau, CouplingRates};
use spinsqueeze::scenarios::*;

const KAPPA_SQ: f64 = 1.83e6;

fn coupling_step(kt: f64) -> StepOperators<f64> {
    asymmetric_step(kt, kt)
}

fn asymmetric_step(to_atom: f64, to_light: f64) -> StepOperators<f64> {
    let mut s = StepOperators::identity(4, 1e-8);
    s.transform = Transform::Sparse(smallvec![
        Coupling { row: 0, col: 3, value: to_atom },
        Coupling { row: 2, col: 1, value: to_light },
    ]);
    s
}

fn vacuum_pair() -> GaussianState<f64> {
    GaussianState::atoms_and_light(1).unwrap()
}

/// Smallest real root of `det(m − λ)` by Faddeev–LeVerrier coefficients and
/// bisection on sign changes over a fine scan.
fn smallest_root_of_characteristic_polynomial(m: &[[f64; 4]; 4]) -> f64 {
    let n = 4;
    let mul = |a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]| {
        let mut c = [[0.0; 4]; 4];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    c[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        c
    };
    // p(λ) = λ⁴ + c1 λ³ + c2 λ² + c3 λ + c4
    let mut coeffs = vec![1.0];
    let mut mk = [[0.0; 4]; 4];
    let mut prev_c = 1.0;
    for k in 1..=n {
        let mut a = mk;
        for (i, row) in a.iter_mut().enumerate() {
            row[i] += prev_c;
        }
        mk = mul(m, &a);
        let trace: f64 = (0..n).map(|i| mk[i][i]).sum();
        let c = -trace / k as f64;
        coeffs.push(c);
        prev_c = c;
    }
    let p = |x: f64| coeffs.iter().fold(0.0, |acc, &c| acc * x + c);
    let bound = 10.0;
    let steps = 20000;
    let mut lo = -bound;
    for s in 1..=steps {
        let hi = -bound + 2.0 * bound * s as f64 / steps as f64;
        if p(lo) == 0.0 {
            return lo;
        }
        if p(lo) * p(hi) < 0.0 {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if p(a) * p(mid) <= 0.0 {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            return 0.5 * (a + b);
        }
        lo = hi;
    }
    panic!("no root found");
}

#[test]
fn one_noiseless_step_with_unit_coupling() {
    let out = apply_step(&vacuum_pair(), &coupling_step(1.0)).unwrap();
    let expect = [
        [2.0, 0.0, 0.0, 1.0],
        [0.0, 1.0, 1.0, 0.0],
        [0.0, 1.0, 2.0, 0.0],
        [1.0, 0.0, 0.0, 1.0],
    ];
    for (i, row) in expect.iter().enumerate() {
        for (j, &e) in row.iter().enumerate() {
            assert_eq!(out.cov().get(i, j), e, "({i},{j})");
        }
    }
}

#[test]
fn degenerate_smallest_eigenvalue() {
    let out = apply_step(&vacuum_pair(), &coupling_step(1.0)).unwrap();
    let (lambda, _) = sym_eig_min(out.cov()).unwrap();
    assert!((lambda - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-12);
}

#[test]
fn smallest_eigenvalue_matches_characteristic_polynomial() {
    let out = apply_step(&vacuum_pair(), &asymmetric_step(1.0, 0.5)).unwrap();
    let rows = out.cov().to_rows();
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = rows[i][j];
        }
    }
    let oracle = smallest_root_of_characteristic_polynomial(&m);
    let (lambda, v) = sym_eig_min(out.cov()).unwrap();
    assert!((lambda - oracle).abs() < 1e-10, "{lambda} vs {oracle}");
    let mv = out.cov().mul_vec(&v);
    let resid: f64 = mv.iter().zip(&v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
    assert!(resid <= 1e-10 * out.cov().frobenius_norm());
}

#[test]
fn identity_step_leaves_state_unchanged() {
    let s = vacuum_pair();
    assert_eq!(apply_step(&s, &coupling_step(0.0)).unwrap(), s);
    assert_eq!(apply_step(&s, &StepOperators::identity(4, 1e-8)).unwrap(), s);
}

#[test]
fn pure_atomic_loss_step() {
    let eta_tau: f64 = 0.1;
    let mut step = StepOperators::identity(4, 1e-8);
    let l = (1.0 - eta_tau).sqrt();
    step.loss = smallvec![(0, l), (1, l)];
    step.atom_noise = smallvec![
        NoiseEntry { index: 0, probability: eta_tau, prefactor: 2.0 },
        NoiseEntry { index: 1, probability: eta_tau, prefactor: 2.0 },
    ];
    let out = apply_step(&vacuum_pair(), &step).unwrap();
    // 0.9·1 + 2·0.1
    assert_relative_eq!(out.cov().get(0, 0), 1.1, max_relative = 1e-15);
    assert_relative_eq!(out.cov().get(1, 1), 1.1, max_relative = 1e-15);
    assert_eq!(out.cov().get(2, 2), 1.0);
}

#[test]
fn dimension_mismatch_rejected() {
    let step = StepOperators::<f64>::identity(6, 1e-8);
    assert!(apply_step(&vacuum_pair(), &step).is_err());
}

#[test]
fn measurement_after_unit_coupling() {
    let post = apply_step(&vacuum_pair(), &coupling_step(1.0)).unwrap();
    let (m, rec) = measure_light_x(&post, 0.3, 1e-8).unwrap();
    let a = m.atomic_block();
    assert_relative_eq!(a.get(0, 0), 2.0, max_relative = 1e-15);
    assert_relative_eq!(a.get(1, 1), 0.5, max_relative = 1e-15);
    assert_eq!(a.get(0, 1), 0.0);
    // Var(p) = 1/(2(1+κ_τ²)), which is the noiseless curve at t = τ, κ²τ = 1.
    assert_relative_eq!(m.variance(1), var_p_noiseless(1.0, 1.0, 0.5), max_relative = 1e-15);
    assert_eq!(rec.outcome - rec.chi, 0.0);
    // Light segment replaced by vacuum.
    assert_eq!(m.cov().get(2, 2), 1.0);
    assert_eq!(m.cov().get(1, 2), 0.0);

    let (shifted, _) = measure_light_x(&post, 1.0, 1e-8).unwrap();
    assert_relative_eq!(shifted.mean()[1], 0.5, max_relative = 1e-15);
    assert_eq!(shifted.mean()[0], 0.0);
}

#[test]
fn uncorrelated_measurement_changes_nothing_atomic() {
    let s = vacuum_pair();
    let (m, _) = measure_light_x(&s, 0.7, 0.0).unwrap();
    assert_eq!(m.atomic_block(), s.atomic_block());
    assert_eq!(&m.mean()[..2], &s.mean()[..2]);
}

#[test]
fn projected_pseudoinverse_by_hand() {
    let k: f64 = 1.0;
    let b = SymMatrix::from_rows(&[vec![1.0 + k * k, k], vec![k, 1.0]]).unwrap();
    let p = projected_pseudoinverse(&b, 1).unwrap();
    assert_eq!(p.to_rows(), vec![vec![0.5, 0.0], vec![0.0, 0.0]]);
    let d = projected_pseudoinverse(&SymMatrix::from_diagonal(&[2.0, 5.0]), 1).unwrap();
    assert_eq!(d.to_rows(), vec![vec![0.5, 0.0], vec![0.0, 0.0]]);
    let i = projected_pseudoinverse(&SymMatrix::<f64>::identity(2), 1).unwrap();
    assert_eq!(i.to_rows(), vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
    assert!(projected_pseudoinverse(&SymMatrix::from_diagonal(&[0.0, 1.0]), 1).is_err());
}

#[test]
fn kappa_tau_example() {
    assert_relative_eq!(kappa_tau(KAPPA_SQ, 1e-8), 0.0183f64.sqrt(), max_relative = 1e-14);
    assert_relative_eq!(kappa_tau(KAPPA_SQ, 1e-8), 0.1353, max_relative = 1e-3);
}

#[test]
fn hundred_thousand_noiseless_steps() {
    let kt = kappa_tau(KAPPA_SQ, 1e-8);
    let steps = vec![coupling_step(kt); 100_000];
    let (state, record, series) = run_sequence(vacuum_pair(), &steps, true, 11, &[1]).unwrap();
    let v = state.variance(1);
    assert_relative_eq!(v, 1.0 / 3662.0, max_relative = 1e-3);
    assert_relative_eq!(v, var_p_noiseless(1e-3, KAPPA_SQ, 0.5), max_relative = 1e-9);
    assert_eq!(record.records.len(), 100_000);
    assert_eq!(series.len(), 100_001);
}

#[test]
fn empty_sequence_returns_input() {
    let s = vacuum_pair();
    let (out, record, series) = run_sequence(s.clone(), &[], true, 0, &[0, 1]).unwrap();
    assert_eq!(out, s);
    assert!(record.records.is_empty() && record.samples.is_empty());
    assert!(series.is_empty());
}

#[test]
fn seeds_change_means_not_covariances() {
    let kt = kappa_tau(KAPPA_SQ, 1e-8);
    let steps = vec![coupling_step(kt); 2000];
    let (a, ra, _) = run_sequence(vacuum_pair(), &steps, true, 1, &[1]).unwrap();
    let (b, rb, _) = run_sequence(vacuum_pair(), &steps, true, 2, &[1]).unwrap();
    assert_eq!(a.cov(), b.cov());
    for (sa, sb) in ra.samples.iter().zip(&rb.samples) {
        assert_eq!(sa.variances, sb.variances);
    }
    assert_ne!(a.mean(), b.mean());
}

#[test]
fn rk4_matches_noiseless_closed_form() {
    let p = SqueezeCurveParams::coherent(KAPPA_SQ, 0.0, 0.0).unwrap();
    let c = integrate_scalar_ode(|t, v| p.rate(t, v), 0.5, 1e-3, 1e-7).unwrap();
    let (t, v) = c.last();
    assert_relative_eq!(t, 1e-3, max_relative = 1e-12);
    assert!((v - var_p_noiseless(1e-3, KAPPA_SQ, 0.5)).abs() / v < 1e-6);
}

#[test]
fn rk4_has_fourth_order_convergence() {
    let p = SqueezeCurveParams::coherent(KAPPA_SQ, 0.0, 0.0).unwrap();
    let exact = var_p_noiseless(1e-3, KAPPA_SQ, 0.5);
    let err = |dt: f64| (integrate_scalar_ode(|t, v| p.rate(t, v), 0.5, 1e-3, dt).unwrap().last().1 - exact).abs();
    for dt in [4e-7, 2e-7, 1e-7] {
        let ratio = err(dt) / err(dt / 2.0);
        assert!(ratio >= 8.0, "dt = {dt}: error ratio {ratio}");
    }
}

#[test]
fn rk4_matches_noisy_closed_form() {
    let p = SqueezeCurveParams::coherent(KAPPA_SQ, 1.7577, 0.028).unwrap();
    let c = integrate_scalar_ode(|t, v| p.rate(t, v), 0.5, 3e-3, 1e-7).unwrap();
    let mut worst: f64 = 0.0;
    for (&t, &v) in c.t.iter().zip(&c.y) {
        let a = var_p_noisy(t, &p).unwrap();
        worst = worst.max((v - a).abs() / a);
    }
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn noisy_curve_at_its_minimum() {
    let p = SqueezeCurveParams::coherent(KAPPA_SQ, 1.7577, 0.028).unwrap();
    let t = t_min_exact(&p).unwrap();
    let v = var_p_noisy(t, &p).unwrap();
    let dp = dp_min(&p).unwrap();
    assert!((v / (dp * dp) - 1.0).abs() < 0.05);
    assert!((dp - 0.0265).abs() < 5e-4);
    assert!((t_min_approx(&p).unwrap() - 1.73e-3).abs() < 5e-6);
}

#[test]
fn symmetric_variable_decomposition() {
    let d = collective_decomposition(&[1.0f64, 0.0]).unwrap();
    assert_relative_eq!(d.a, 1.0 / 2f64.sqrt(), max_relative = 1e-15);
    assert_relative_eq!(d.a * d.a + d.b * d.b, 1.0, max_relative = 1e-14);
    let eq = collective_decomposition(&[0.3f64; 10]).unwrap();
    assert_relative_eq!(eq.a, 1.0, max_relative = 1e-15);
    assert!(eq.p_eff.overlap(&eq.p_sym) > 1.0 - 1e-15);
}

#[test]
fn posterior_variance_example() {
    assert_relative_eq!(var_theta_limit(0.5, 1.0, 0.5), 0.25, max_relative = 1e-15);
    assert_eq!(gain(0.5), 1.0);
    assert!(var_theta_limit(0.5, 1e9, 0.5) < 1e-18);
}

fn homogeneous_rates(eta: f64, eps: f64) -> CouplingRates<f64> {
    CouplingRates { kappa_sq: KAPPA_SQ, eta, epsilon: eps }
}

#[test]
fn thin_gas_without_spread_is_homogeneous() {
    let r = homogeneous_rates(1.7577, 0.028);
    let hom = build_homogeneous(&r, 1e-8, 5e-4).unwrap().with_sample_every(500);
    let thin = build_thin_inhomogeneous(&SpreadSpec::grid(KAPPA_SQ, 0.0), 10, &r, 1e-8, 5e-4)
        .unwrap()
        .with_sample_every(500);
    let (h, _) = run(&hom, 3).unwrap();
    let (t, _) = run(&thin, 3).unwrap();
    let vp = h.column("var_p").unwrap();
    let pe = t.column("var_P_eff").unwrap();
    let me = t.column("min_eig_var").unwrap();
    for i in 0..h.len() {
        assert!((vp[i] - pe[i]).abs() / vp[i] < 1e-10, "row {i}: {} vs {}", vp[i], pe[i]);
        assert!((vp[i] - me[i]).abs() / vp[i] < 1e-9);
    }
}

#[test]
fn single_thick_slice_is_homogeneous() {
    let r = homogeneous_rates(1.7577, 0.028);
    let hom = build_homogeneous(&r, 1e-8, 1e-4).unwrap().with_sample_every(100);
    let slices = SliceConfig::thick(KAPPA_SQ, 1.7577, &[0.028], 2e12).unwrap();
    let thick = build_thick(&slices, 1e-8, 1e-4).unwrap().with_sample_every(100);
    let a = run_detailed(&hom, 5).unwrap();
    let b = run_detailed(&thick, 5).unwrap();
    assert_eq!(a.final_state, b.final_state);
    assert_eq!(a.record.records, b.record.records);
}

#[test]
fn estimation_without_lever_arm_learns_nothing() {
    let r = homogeneous_rates(0.0, 0.0);
    let base = EstimationBase {
        slices: SliceConfig::homogeneous(&r, 2e12).unwrap(),
        propagation: Propagation::Collective,
        tau: 1e-8,
    };
    let est = EstimationParams {
        alpha: 0.0,
        alphas: vec![],
        var_theta0: 0.3,
        t1: 1e-4,
        t2: 2e-4,
        theta_true: Some(0.1),
    };
    let s = build_estimation(&base, &est, 4e-4).unwrap().with_sample_every(10);
    let (ts, _) = run(&s, 9).unwrap();
    assert!(ts.column("var_theta").unwrap().iter().all(|&v| (v - 0.3).abs() < 1e-15));
    assert!(ts.column("mean_theta").unwrap().iter().all(|&m| m == 0.0));
}

#[test]
fn estimate_tracks_true_angle() {
    let r = homogeneous_rates(0.0, 0.0);
    let base = EstimationBase {
        slices: SliceConfig::homogeneous(&r, 2e12).unwrap(),
        propagation: Propagation::Collective,
        tau: 1e-8,
    };
    let est = EstimationParams {
        alpha: 10.0,
        alphas: vec![],
        var_theta0: 1.0,
        t1: 5e-4,
        t2: 5e-4,
        theta_true: Some(0.05),
    };
    let s = build_estimation(&base, &est, 1e-3).unwrap().with_sample_every(100);
    let mut hits = 0;
    for seed in 0..20 {
        let (ts, _) = run(&s, seed).unwrap();
        let m = *ts.column("mean_theta").unwrap().last().unwrap();
        let sd = ts.column("var_theta").unwrap().last().unwrap().sqrt();
        if (m - 0.05).abs() < 2.0 * sd {
            hits += 1;
        }
    }
    // About 95% of posteriors cover the truth at two standard deviations.
    assert!(hits >= 15, "{hits}/20");
}

#[test]
fn runs_without_observables_give_times_only() {
    let r = homogeneous_rates(0.0, 0.0);
    let s = build_homogeneous(&r, 1e-8, 1e-6).unwrap().with_observables(vec![]).with_sample_every(10);
    let (ts, _) = run(&s, 0).unwrap();
    assert_eq!(ts.len(), 11);
    assert_eq!(ts.columns.len(), 0);
}

#[test]
fn zero_duration_gives_no_samples() {
    let r = homogeneous_rates(0.0, 0.0);
    let s = build_homogeneous(&r, 1e-8, 0.0).unwrap();
    let (ts, record) = run(&s, 0).unwrap();
    assert!(ts.is_empty() && record.records.is_empty());
    assert_eq!(s.sample_count(), 0);
}

#[test]
fn coarse_step_rejected() {
    let r = homogeneous_rates(0.0, 0.0);
    let err = build_homogeneous(&r, 1e-6, 1e-3).unwrap_err();
    assert!(err.to_string().contains("0.1"), "{err}");
}

#[test]
fn row_count_rule() {
    let r = homogeneous_rates(1.7577, 0.028);
    for (steps, every) in [(100usize, 1usize), (100, 7), (100, 100), (100, 101)] {
        let s = build_homogeneous(&r, 1e-8, steps as f64 * 1e-8).unwrap().with_sample_every(every);
        let (ts, _) = run(&s, 0).unwrap();
        assert_eq!(ts.len(), steps / every + 1);
        assert_eq!(ts.len(), s.sample_count());
    }
}
