use std::f64::consts::PI;

use gup_core::lattice::commutator_kernel;
use gup_core::pulsed::{fit_scaling_exponent, phi_chain, trig_product_integral};
use gup_core::quadrature::GaussLegendre;
use gup_core::{ChainSpecF64, IntervalSumF64, PulseScheduleF64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn brute_trig(freqs: [f64; 4], theta: [f64; 4], a: f64, b: f64) -> f64 {
    let gl = GaussLegendre::<f64>::new(48).unwrap();
    let panels = 64;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            gl.integrate(lo, hi, |u| (0..4).map(|s| (freqs[s] * (theta[s] - u)).cos()).product())
        })
        .sum()
}

#[test]
fn trig_integral_matches_quadrature_on_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut worst = 0.0f64;
    for draw in 0..1000 {
        let mut freqs = [0.0f64; 4];
        for f in freqs.iter_mut() {
            *f = rng.gen_range(0.1..3.0);
        }
        // every third draw sits on or next to a resonance ω₁ + ω₂ = ω₃ + ω₄
        match draw % 3 {
            1 => freqs[3] = freqs[0] + freqs[1] - freqs[2],
            2 => freqs[3] = freqs[0] + freqs[1] - freqs[2] + rng.gen_range(-1e-9..1e-9),
            _ => {}
        }
        if freqs[3] <= 0.0 {
            freqs[3] = freqs[3].abs() + 0.05;
        }
        let theta = [0.0; 4].map(|_: f64| rng.gen_range(0.0..8.0));
        let a = rng.gen_range(0.0..5.0);
        let b = a + rng.gen_range(-3.0..8.0);
        let exact = trig_product_integral(freqs, theta, a, b);
        let brute = brute_trig(freqs, theta, a, b);
        worst = worst.max((exact - brute).abs());
    }
    assert!(worst < 1e-10, "worst absolute deviation {worst:e}");
}

#[test]
fn degenerate_frequencies_are_exact() {
    let theta = [0.3, 1.1, 2.0, 2.9];
    let exact = trig_product_integral([1.0; 4], theta, 0.0, 4.0);
    let brute = brute_trig([1.0; 4], theta, 0.0, 4.0);
    assert!((exact - brute).abs() < 1e-12);
}

#[test]
fn fit_examples() {
    let linear: Vec<(usize, f64)> = (1..=6).map(|n| (n, 0.7 * n as f64)).collect();
    assert!((fit_scaling_exponent(&linear).unwrap().0 - 1.0).abs() < 1e-12);
    let square: Vec<(usize, f64)> = (1..=6).map(|n| (n, 0.7 * (n * n) as f64)).collect();
    assert!((fit_scaling_exponent(&square).unwrap().0 - 2.0).abs() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(27);
    let noisy: Vec<(usize, f64)> = (1..=5)
        .map(|n| (n, 1.3 * (n as f64).powf(2.7) * (1.0 + rng.gen_range(-0.01..0.01))))
        .collect();
    let (slope, residual) = fit_scaling_exponent(&noisy).unwrap();
    assert!((slope - 2.7).abs() < 0.1, "{slope}");
    assert!(residual < 1e-3);

    assert!(fit_scaling_exponent(&linear[..1]).is_err());
    assert!(fit_scaling_exponent(&[(1, 1.0), (2, 0.0)]).is_err());
}

#[test]
fn quarter_period_phase_is_translation_invariant() {
    let omega = 2.0 * PI * 1e5;
    let spec = ChainSpecF64::new(1, 1e-11, omega, 0.0).unwrap();
    let modes = spec.normal_modes().unwrap();
    let base = PulseScheduleF64::quarter_period(1, omega, 0.0, 1.0).unwrap();
    let reference = phi_chain(&spec, &modes, &base).unwrap().quartic_coefficient;
    for shift in [1e-7, 3.3e-6, 1e-4] {
        let moved = PulseScheduleF64::quarter_period(1, omega, shift, 1.0).unwrap();
        assert!((moved.eval_time() - base.eval_time() - shift).abs() < 1e-15);
        let phi = phi_chain(&spec, &modes, &moved).unwrap().quartic_coefficient;
        assert!(
            ((phi - reference) / reference).abs() < 1e-10,
            "{shift}: {phi} vs {reference}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_is_even_and_symmetric(
        n in 1usize..6,
        ratio in 0.0f64..3.0,
        dt in -20.0f64..20.0,
        i in 0usize..6,
        j in 0usize..6,
    ) {
        let (i, j) = (i % n, j % n);
        let spec = ChainSpecF64::new(n, 2.0, 1.3, ratio * 1.3).unwrap();
        let modes = spec.normal_modes().unwrap();
        let c = commutator_kernel(&modes, i, j, dt).unwrap();
        prop_assert!((c - commutator_kernel(&modes, i, j, -dt).unwrap()).abs() < 1e-13);
        prop_assert!((c - commutator_kernel(&modes, j, i, dt).unwrap()).abs() < 1e-13);
        prop_assert!(commutator_kernel(&modes, n, 0, dt).is_err());
    }

    #[test]
    fn splitting_an_interval_keeps_the_integral(
        a in -5.0f64..5.0,
        len in -6.0f64..6.0,
        cut in 0.0f64..1.0,
        w in -2.0f64..2.0,
        f0 in 0.1f64..2.0,
    ) {
        let b = a + len;
        let m = a + cut * len;
        let freqs = [f0, 1.0, 0.7, 1.9];
        let theta = [0.4, 1.0, 2.2, 3.1];
        let f = |x: f64, y: f64| trig_product_integral(freqs, theta, x, y);
        let mut whole = IntervalSumF64::new();
        whole.push(w, a, b);
        let mut split = IntervalSumF64::new();
        split.push(w, a, m);
        split.push(w, m, b);
        prop_assert!((whole.integrate(f) - split.integrate(f)).abs() < 1e-13);
    }

    #[test]
    fn pulse_phase_does_not_depend_on_strength_or_mass(
        strength in 0.01f64..10.0,
        mass in 1e-15f64..1.0,
        ratio in 0.0f64..2.0,
    ) {
        let omega = 1.0;
        let spec = ChainSpecF64::new(2, mass, omega, ratio).unwrap();
        let modes = spec.normal_modes().unwrap();
        let unit = ChainSpecF64::new(2, 1.0, omega, ratio).unwrap();
        let unit_modes = unit.normal_modes().unwrap();
        let a = PulseScheduleF64::quarter_period(2, omega, 0.0, strength).unwrap();
        let b = PulseScheduleF64::quarter_period(2, omega, 0.0, 1.0).unwrap();
        let pa = phi_chain(&spec, &modes, &a).unwrap();
        let pb = phi_chain(&unit, &unit_modes, &b).unwrap();
        prop_assert!((pa.quartic_coefficient - pb.quartic_coefficient).abs() < 1e-12 * pb.quartic_coefficient.abs());
        let f_ratio = pa.quadratic_coefficient.unwrap() / pb.quadratic_coefficient.unwrap();
        prop_assert!((f_ratio - strength * strength).abs() < 1e-12 * strength * strength);
    }
}

#[test]
fn single_precision_closed_form() {
    let t = std::f32::consts::PI / 2.0;
    let phi = gup_core::pulsed::phi_single(1.0f32, [0.0, t, 2.0 * t, 3.0 * t], 4.0 * t + 1.0).unwrap();
    let closed = 5.0 * (9.0 * std::f32::consts::PI - 16.0) / 32.0;
    assert!((phi - closed).abs() < 1e-4 * closed, "{phi} vs {closed}");
}
