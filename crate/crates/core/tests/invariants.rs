use bergman_core::asymptotics::{fit_expansion, fit_rate, predicted_coefficients, ExpansionSample};
use bergman_core::bergman::{bergman_function, OrthonormalBasis};
use bergman_core::bundles::diophantine::diophantine_ray;
use bergman_core::bundles::{BundleSequence, HermitianLineBundle, Psi};
use bergman_core::geometry::{integrate_real, ChartPoint, KahlerModel, QuadratureRule, TwoForm};
use bergman_core::model_kernel::{annihilation_residual, ModelFrame};
use bergman_core::random_sections::{
    c_pm, combinatorics, sample_section, zeros_cp1, ExceptionalSetEstimate, TestForm,
};
use num_complex::Complex64;
use proptest::prelude::*;
use statrs::distribution::{Beta, ContinuousCDF};

fn line() -> KahlerModel {
    KahlerModel::projective_line()
}

fn point() -> impl Strategy<Value = Complex64> {
    (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(a, b)| Complex64::new(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn test_forms_agree_on_chart_overlaps(z in point()) {
        prop_assume!(z.norm() > 1e-3);
        let m = line();
        for f in TestForm::ALL {
            let a = f.value(&m, &ChartPoint::line(0, z));
            let b = f.value(&m, &ChartPoint::line(1, z.inv()));
            prop_assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn standard_bergman_function_is_degree_plus_one(d in 1u32..30, z in point()) {
        let b = HermitianLineBundle::standard(line(), [d, 0]).unwrap();
        let onb = OrthonormalBasis::for_bundle(&b).unwrap();
        let v = bergman_function(&onb, &ChartPoint::line(0, z));
        prop_assert!((v - f64::from(d + 1)).abs() < 1e-8 * f64::from(d + 1));
    }

    #[test]
    fn model_kernel_is_annihilated(a1 in 0.5f64..20.0, z in point(), w in point()) {
        let frame = ModelFrame::from_eigenvalues(line(), ChartPoint::origin(1), vec![a1]).unwrap();
        let k = frame.leading_density();
        prop_assert!(annihilation_residual(&frame, &[z], &[w]) <= 1e-12 * k.max(1.0));
    }

    #[test]
    fn diophantine_tuples_meet_their_bound(r1 in 0.1f64..5.0, depth in 1usize..6) {
        let ray = diophantine_ray(&[1.0, r1], depth).unwrap();
        prop_assert!(ray.verify());
        for t in &ray.tuples {
            let worst = t.m.iter().zip(&ray.ray).map(|(m, r)| (*m as f64 - r * t.p as f64).abs()).fold(0.0, f64::max);
            prop_assert!(worst * t.p as f64 <= t.bound + 1e-9);
        }
    }

    #[test]
    fn every_sample_has_p_zeros(seed in any::<u64>(), d in 1u32..60) {
        let b = HermitianLineBundle::standard(line(), [d, 0]).unwrap();
        let onb = OrthonormalBasis::for_bundle(&b).unwrap();
        let s = sample_section(onb.len(), seed, u64::from(d), 0, 0);
        let z = zeros_cp1(&onb, &s).unwrap();
        prop_assert_eq!(z.total(), d);
    }

    #[test]
    fn rate_fit_ignores_input_order(shift in 0usize..5, c1 in 0.0f64..2.0, c2 in 0.0f64..2.0) {
        let mut data: Vec<(f64, f64)> = [25.0f64, 50.0, 100.0, 200.0, 400.0]
            .iter()
            .map(|a| (*a, c1 * a.ln() / a + c2 / a.sqrt() + 1e-4))
            .collect();
        let first = fit_rate(&data).unwrap();
        data.rotate_left(shift);
        data.reverse();
        let second = fit_rate(&data).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn expansion_fit_recovers_three_terms(b0 in 0.5f64..3.0, b1 in -2.0f64..2.0, b2 in -2.0f64..2.0) {
        let samples: Vec<ExpansionSample> = [8u64, 16, 32, 64, 128, 256]
            .iter()
            .map(|&p| {
                let a = p as f64;
                ExpansionSample { p, a_p: a, value: a * (b0 + b1 / a + b2 / (a * a)) }
            })
            .collect();
        let fit = fit_expansion(ChartPoint::origin(1), 1, &samples, 2).unwrap();
        for (c, e) in fit.coefficients.iter().zip([b0, b1, b2]) {
            prop_assert!((c - e).abs() < 1e-8);
        }
    }

    #[test]
    fn wilson_interval_contains_fraction(n in 1usize..2000, k in 0usize..2000) {
        let k = k.min(n);
        let e = ExceptionalSetEstimate::new(1, 0.1, n, k);
        prop_assert!(e.interval.0 <= e.fraction && e.fraction <= e.interval.1);
        prop_assert!((0.0..=1.0).contains(&e.fraction));
    }
}

#[test]
fn reference_form_has_unit_volume() {
    for model in [line(), KahlerModel::projective_product(), KahlerModel::flat_torus(Complex64::new(0.3, 1.2)).unwrap()] {
        let rule = QuadratureRule::for_pairing(&model);
        let vol = integrate_real(&model, |_| 1.0, &rule).unwrap();
        assert!((vol - 1.0).abs() < 1e-12, "{model:?}: {vol}");
    }
}

#[test]
fn predicted_coefficients_scale_homogeneously() {
    let x = ChartPoint::line(0, Complex64::new(0.4, 0.1));
    let omega = TwoForm::new(line(), [1.0, 1.0], vec![(Psi::Bump1, 0.3)]);
    let (b0, b1) = predicted_coefficients(&omega, &x).unwrap();
    for c in [2.0, 3.0] {
        let (s0, s1) = predicted_coefficients(&omega.scaled(c), &x).unwrap();
        assert!((s0 - c * b0).abs() < 1e-10 * s0.abs().max(1.0));
        assert!((s1 - b1).abs() < 1e-10 * s1.abs().max(1.0));
    }
}

#[test]
fn c_pm_lies_in_its_bracket() {
    let e = std::f64::consts::E;
    for p in 1..=500usize {
        for m in 1..=4usize {
            let c = c_pm(p + 1, m);
            let mf = m as f64;
            assert!(c > 1.0 / (2.0 * e * mf) && c < 2.0 * e / mf, "p={p} m={m} c={c}");
        }
    }
}

#[test]
fn degree_ratio_is_comparable_to_a_p() {
    let m1 = 4.0 * std::f64::consts::E;
    let line_seq = BundleSequence::power(HermitianLineBundle::prequantum(line()));
    let product = KahlerModel::projective_product();
    let prod_seq = BundleSequence::power(HermitianLineBundle::prequantum(product));
    for p in 8..=60u64 {
        let a = p as f64;
        for (seq, m) in [(&line_seq, 1), (&prod_seq, 1), (&prod_seq, 2)] {
            let c = combinatorics(seq, p, m).unwrap();
            let ratio = c.delta1 / c.delta2;
            assert!(ratio >= a / m1 && ratio <= m1 * a, "p={p} m={m} ratio={ratio}");
        }
    }
}

/// Kolmogorov–Smirnov statistic of `|c₀|²` against `Beta(1, d − 1)`.
#[test]
fn first_coefficient_follows_beta_law() {
    let n = 10_000;
    for d in [2usize, 5, 11] {
        let mut x: Vec<f64> = (0..n as u64).map(|i| sample_section(d, 99, d as u64, i, 0).coefficients[0].norm_sqr()).collect();
        x.sort_by(f64::total_cmp);
        let beta = Beta::new(1.0, (d - 1) as f64).unwrap();
        let ks = x
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let f = beta.cdf(*v);
                (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        // Asymptotic 1% critical value 1.628/√n.
        assert!(ks < 1.628 / (n as f64).sqrt(), "d={d}: D={ks}");
    }
}
