use elliptic_tail::dpp::{self, SampleConfig, Window};
use elliptic_tail::draws::Draw;
use elliptic_tail::fourier::{fourier_closed, ProjectionReport};
use elliptic_tail::kernels::{gauge_eps, BasicKernel, EllipticKernel, LatticePoint};
use elliptic_tail::limits::{sine_kernel, trig_kernel, Line, TwoLinePoint};
use elliptic_tail::qspecial::theta;
use elliptic_tail::{Complex64, QParam, Tolerance};
use proptest::prelude::*;

fn tol() -> Tolerance {
    Tolerance::default()
}

fn lattice_point() -> impl Strategy<Value = LatticePoint> {
    (any::<bool>(), -6i64..=6).prop_map(|(plus, k)| if plus { LatticePoint::plus(k) } else { LatticePoint::minus(k) })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn theta_quasi_periodic_and_reflective(q in 0.3f64..0.9, r in 0.2f64..5.0, arg in -3.1f64..3.1) {
        let qp = QParam::new(q).unwrap();
        let z = Complex64::from_polar(r, arg);
        let t = theta(z, &qp, &tol()).unwrap().value;
        let shifted = theta(z * q, &qp, &tol()).unwrap().value;
        let refl = theta(q / z, &qp, &tol()).unwrap().value;
        prop_assert!((shifted + t / z).norm() <= 1e-11 * t.norm().max(shifted.norm()).max(1e-300));
        prop_assert!((refl - t).norm() <= 1e-11 * t.norm().max(1e-300));
    }

    #[test]
    fn elliptic_kernel_is_hermitian_and_translation_invariant(seed in any::<u64>(), x in lattice_point(), y in lattice_point()) {
        let mut d = Draw::new(seed, 0);
        let ctx = d.context(0.3, 0.9).unwrap();
        let pair = d.pair(&ctx).unwrap();
        let k = EllipticKernel::new(&pair, &ctx, &tol()).unwrap();
        let a = k.eval_lattice(x, y).unwrap().value;
        let b = k.eval_lattice(y, x).unwrap().value;
        prop_assert!((a - b.conj()).norm() < 1e-10 * a.norm().max(1.0));
        let t0 = k.tilde(x, y).unwrap().value;
        let t1 = k.tilde(x.shift(1), y.shift(1)).unwrap().value;
        prop_assert!((t0 - t1).norm() < 1e-9 * t0.norm().max(1.0));
        // the gauge leaves correlations unchanged
        if x != y {
            let diag = |p| k.eval_lattice(p, p).unwrap().value;
            let det = diag(x) * diag(y) - a * b;
            let det_t = diag(x) * diag(y) - t0 * k.tilde(y, x).unwrap().value;
            prop_assert!((det - det_t).norm() < 1e-12);
            prop_assert!((t0 - a * gauge_eps(x) * gauge_eps(y)).norm() == 0.0);
        }
    }

    #[test]
    fn window_minors_are_contractions(seed in any::<u64>(), lo in -4i64..2, len in 1i64..5) {
        let mut d = Draw::new(seed, 1);
        let ctx = d.context(0.3, 0.9).unwrap();
        let pair = d.pair(&ctx).unwrap();
        let k = EllipticKernel::new(&pair, &ctx, &tol()).unwrap();
        let w = Window::both_halves(lo, lo + len).unwrap();
        let m = dpp::kernel_matrix(&w, &k).unwrap();
        let spec = dpp::contraction_spectrum(&m).unwrap();
        prop_assert!(spec.eigenvalues.iter().all(|&l| (0.0..=1.0).contains(&l)));
        let prof = dpp::rho1_star_profile(&w, &k).unwrap();
        prop_assert!(prof.rho1_star.iter().all(|&r| (0.0..=0.5).contains(&r)));
        let per = dpp::per_period_rho1_star(&k).unwrap();
        prop_assert!((prof.sum - (len + 1) as f64 * per).abs() < 1e-9);
    }

    #[test]
    fn oracle_probabilities_form_a_distribution(seed in any::<u64>(), k0 in -3i64..3) {
        let mut d = Draw::new(seed, 2);
        let ctx = d.context(0.3, 0.9).unwrap();
        let pair = d.pair(&ctx).unwrap();
        let k = EllipticKernel::new(&pair, &ctx, &tol()).unwrap();
        let w = Window::both_halves(k0, k0 + 1).unwrap();
        let probs = dpp::outcome_probabilities(&dpp::kernel_matrix(&w, &k).unwrap()).unwrap();
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(probs.iter().all(|&p| p > -1e-10));
    }

    #[test]
    fn symbol_is_a_rank_one_projection(seed in any::<u64>(), eta in 0.0f64..std::f64::consts::TAU) {
        let mut d = Draw::new(seed, 3);
        let ctx = d.context(0.3, 0.9).unwrap();
        let pair = d.pair(&ctx).unwrap();
        let r = ProjectionReport::of(&fourier_closed(eta, &pair, &ctx, &tol()).unwrap());
        prop_assert!(r.max_residual() < 1e-10 && r.idempotent_residual < 1e-9, "{r:?}");
    }

    #[test]
    fn basic_kernel_is_hermitian(seed in any::<u64>(), x in lattice_point(), y in lattice_point()) {
        prop_assume!(x != y);
        let mut d = Draw::new(seed, 4);
        let ctx = d.context(0.3, 0.9).unwrap();
        let quad = d.quadruple(&ctx).unwrap();
        let k = BasicKernel::new(&quad, &ctx, &tol()).unwrap();
        let a = k.eval_lattice(x, y).unwrap();
        let b = k.eval_lattice(y, x).unwrap();
        prop_assert!((a.value - b.value.conj()).norm() <= 1e-9 * a.value.norm().max(1.0) + a.abs_error_bound + b.abs_error_bound);
    }

    #[test]
    fn sine_kernel_symmetric_and_bounded(m in -50i64..50, n in -50i64..50, phi in 0.01f64..3.13) {
        let a = sine_kernel(m, n, phi).unwrap();
        prop_assert_eq!(a, sine_kernel(n, m, phi).unwrap());
        prop_assert!(a.abs() <= phi / std::f64::consts::PI + 1e-15);
    }

    #[test]
    fn trig_same_line_blocks_are_even(u in -3.0f64..3.0, v in -3.0f64..3.0, re in 0.05f64..0.95, im in 0.05f64..1.0) {
        let tp = elliptic_tail::limits::TrigParams::new(Complex64::new(re, im), Complex64::new(re, -im)).unwrap();
        for line in [Line::One, Line::Two] {
            let x = TwoLinePoint::new(u, line).unwrap();
            let y = TwoLinePoint::new(v, line).unwrap();
            let a = trig_kernel(x, y, &tp);
            prop_assert!((a - trig_kernel(y, x, &tp)).norm() < 1e-12 * a.norm().max(1.0));
        }
    }
}

#[test]
fn sampler_respects_window_and_seed() {
    let mut d = Draw::new(99, 0);
    let ctx = d.context(0.3, 0.9).unwrap();
    let pair = d.pair(&ctx).unwrap();
    let k = EllipticKernel::new(&pair, &ctx, &tol()).unwrap();
    let w = Window::both_halves(-3, 3).unwrap();
    let cfg = SampleConfig::new(5, 500).unwrap();
    let a = dpp::sample_window(&w, &k, &cfg).unwrap();
    assert_eq!(a, dpp::sample_window(&w, &k, &cfg).unwrap());
    assert_ne!(a, dpp::sample_window(&w, &k, &SampleConfig::new(6, 500).unwrap()).unwrap());
    assert!(a.iter().all(|s| s.windows(2).all(|p| p[0] < p[1]) && s.iter().all(|&i| i < w.len())));
    // mean count equals the trace of the window matrix
    let trace: f64 = (0..w.len()).map(|i| k.eval_lattice(w.points()[i], w.points()[i]).unwrap().value.re).sum();
    let mean = a.iter().map(|s| s.len() as f64).sum::<f64>() / a.len() as f64;
    let var_bound = w.len() as f64 / 4.0;
    assert!((mean - trace).abs() < 5.0 * (var_bound / a.len() as f64).sqrt(), "{mean} vs {trace}");
}

#[test]
fn oversized_window_is_rejected() {
    assert!(Window::both_halves(0, 40).is_err());
    assert!(SampleConfig::new(1, 0).is_err());
}
