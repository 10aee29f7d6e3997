//! Acceptance suite. Every test prints one `PASS`/`FAIL` line and then
//! asserts the same verdict.

use std::f64::consts::E;
use std::time::Instant;

use bergman_core::asymptotics::fit_rate_with_exponent;
use bergman_core::bergman::{bergman_kernel2, raw_basis, gram_for_bundle, OrthonormalBasis};
use bergman_core::bundles::{BundleSequence, HermitianLineBundle, Psi};
use bergman_core::geometry::{ChartPoint, KahlerModel, TwoForm};
use bergman_core::linalg::hermitian_det;
use bergman_core::model_kernel::{model_kernel, ModelFrame};
use bergman_core::random_sections::{c_pm, combinatorics};
use bergman_lab::{run_experiment, ExperimentConfig, Report};
use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

// Tolerances.
const BASELINE_TOL: f64 = 1e-8;
const BASELINE_SECONDS: f64 = 30.0;
const B0_REL: f64 = 0.01;
const B1_REL: f64 = 0.05;
const TORUS_B1_ABS: f64 = 0.05;
const PERTURBED_RATE: (f64, f64) = (0.45, 0.6);
const SMOOTH_SLOPE_TOL: f64 = 0.1;
const ANNIHILATION_TOL: f64 = 1e-12;
const REPRODUCING_TOL: f64 = 1e-6;
const DIAGONAL_TOL: f64 = 1e-12;
const NEAR_DIAGONAL_RATE: (f64, f64) = (0.4, 0.6);
const ZERO_RATE_R2: f64 = 0.95;
const FS_RATE_R2: f64 = 0.95;
const FS_EXACT_TOL: f64 = 1e-8;
const RATIO_M1: f64 = 4.0 * E;

fn verdict(name: &str, pass: bool, detail: String) {
    println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{name}: {detail}");
}

fn sci(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn config(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json).expect("acceptance config parses")
}

fn run(json: &str) -> Report {
    run_experiment(&config(json)).expect("experiment runs")
}

fn value(report: &Report, key: &str) -> serde_json::Value {
    report.summary.values.get(key).cloned().unwrap_or(serde_json::Value::Null)
}

fn check_value(report: &Report, name: &str) -> f64 {
    report.summary.find(name).map(|c| c.value).unwrap_or(f64::NAN)
}

fn pairs(v: &serde_json::Value) -> Vec<(f64, f64)> {
    serde_json::from_value(v.clone()).expect("pair list")
}

#[test]
fn exact_kernel_baseline() {
    let start = Instant::now();
    let report = run(
        r#"{"experiment": "bergman-scan", "model": {"kind": "projective-line"},
            "sequence": {"kind": "power", "degree": [1, 0]},
            "p": {"start": 1, "end": 40}, "grid_points": 50}"#,
    );
    let spread = check_value(&report, "constant_over_grid");
    let deviation = check_value(&report, "equals_dimension");
    // Independent oracle: Gram diagonal j!(p−j)!/(p+1)!.
    let line = KahlerModel::projective_line();
    let mut gram_error = 0.0f64;
    for p in [1u32, 10, 40] {
        let g = gram_for_bundle(&raw_basis(&HermitianLineBundle::standard(line, [p, 0]).unwrap())).unwrap();
        for j in 0..=p {
            let beta = (ln_gamma(f64::from(j) + 1.0) + ln_gamma(f64::from(p - j) + 1.0) - ln_gamma(f64::from(p) + 2.0)).exp();
            gram_error = gram_error.max((g.matrix[(j as usize, j as usize)].re - beta).abs() / beta);
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    let pass = spread <= BASELINE_TOL && deviation <= BASELINE_TOL && gram_error <= BASELINE_TOL && seconds < BASELINE_SECONDS;
    verdict(
        "exact kernel baseline",
        pass,
        format!("spread {spread:.2e}, |P_p − (p+1)|/(p+1) {deviation:.2e}, Gram vs Beta {gram_error:.2e}, {seconds:.1}s"),
    );
}

#[test]
fn expansion_coefficients() {
    let sphere = run(
        r#"{"experiment": "expansion-fit", "model": {"kind": "projective-line"},
            "sequence": {"kind": "power", "degree": [1, 0]},
            "p": {"start": 10, "end": 80, "step": 10}, "point": [[0.3, -0.7]], "order": 1}"#,
    );
    let torus = run(
        r#"{"experiment": "expansion-fit", "model": {"kind": "flat-torus", "tau": [0.2, 1.1]},
            "sequence": {"kind": "power", "degree": [1, 0]},
            "p": {"start": 8, "end": 64, "step": 8}, "point": [[0.31, 0.47]], "order": 1}"#,
    );
    let coeffs = |r: &Report| -> Vec<f64> { serde_json::from_value(value(r, "coefficients")).unwrap() };
    let (s, t) = (coeffs(&sphere), coeffs(&torus));
    let sphere_ok = (s[0] - 1.0).abs() <= B0_REL && (s[1] - 1.0).abs() <= B1_REL;
    let torus_ok = (t[0] - 1.0).abs() <= B0_REL && t[1].abs() <= TORUS_B1_ABS;
    verdict(
        "expansion coefficients",
        sphere_ok && torus_ok,
        format!("sphere b̂₀ = {:.6}, b̂₁ = {:.6} (predicted 1, 1); torus b̂₀ = {:.6}, b̂₁ = {:.6} (predicted 1, 0)", s[0], s[1], t[0], t[1]),
    );
}

#[test]
fn perturbed_power_rate() {
    let slope_for = |a: f64| {
        let r = run(&format!(
            r#"{{"experiment": "expansion-fit", "model": {{"kind": "projective-line"}},
                "sequence": {{"kind": "perturbed", "psi": "psi-bump-1", "a": {a}}},
                "p": [25, 50, 100, 200, 400]}}"#
        ));
        value(&r, "residual_slope").as_f64().unwrap()
    };
    let half = -slope_for(0.5);
    let two = slope_for(2.0);
    let pass = (PERTURBED_RATE.0..=PERTURBED_RATE.1).contains(&half) && (two + 1.0).abs() <= SMOOTH_SLOPE_TOL;
    verdict(
        "perturbed power rate",
        pass,
        format!("a = 1/2: â = {half:.4} (want [{}, {}]); a = 2: slope {two:.4} (want −1 ± {SMOOTH_SLOPE_TOL})", PERTURBED_RATE.0, PERTURBED_RATE.1),
    );
}

#[test]
fn model_kernel_identities() {
    let report = run(
        r#"{"experiment": "model-kernel", "model": {"kind": "projective-line"},
            "sequence": {"kind": "power", "degree": [1, 0]}, "p": [10]}"#,
    );
    let annihilation = check_value(&report, "annihilation_residual");
    let reproducing = check_value(&report, "reproducing_defect_r6");
    // Diagonal against the determinant ratio for a non-round form.
    let line = KahlerModel::projective_line();
    let omega = TwoForm::new(line, [1.5, 1.0], vec![(Psi::Bump1, 0.2)]);
    let x0 = ChartPoint::line(0, Complex64::new(0.4, 0.3));
    let frame = ModelFrame::new(line, &omega, x0).unwrap();
    let zero = [Complex64::default()];
    let diag = model_kernel(&frame, &zero, &zero).re;
    let ratio = hermitian_det(&omega.matrix(&x0)) / hermitian_det(&line.reference_matrix(&x0));
    let product = frame.leading_density();
    let diag_err = (diag - ratio).abs().max((product - ratio).abs()).max(check_value(&report, "diagonal_vs_b0"));
    let pass = annihilation <= ANNIHILATION_TOL && reproducing <= REPRODUCING_TOL && diag_err <= DIAGONAL_TOL;
    verdict(
        "model kernel identities",
        pass,
        format!("annihilation {annihilation:.2e}, reproducing defect (R = 6) {reproducing:.2e}, |𝒫(0,0) − ωⁿ/ϑⁿ| {diag_err:.2e}"),
    );
}

#[test]
fn near_diagonal_rescaling() {
    let report = run(
        r#"{"experiment": "model-kernel", "model": {"kind": "projective-line"},
            "sequence": {"kind": "power", "degree": [1, 0]}, "p": [10, 20, 40, 80], "window": 2.0}"#,
    );
    let exponent = value(&report, "decay_exponent").as_f64().unwrap();
    let decreasing = report.summary.find("defect_decreasing").is_some_and(|c| c.pass);
    let defects: Vec<f64> = report.rows.iter().map(|r| r[3].to_string().parse().unwrap()).collect();
    let pass = decreasing && (NEAR_DIAGONAL_RATE.0..=NEAR_DIAGONAL_RATE.1).contains(&exponent);
    verdict(
        "near-diagonal rescaling",
        pass,
        format!("defects {}, decay exponent {exponent:.4} (want [{}, {}])", sci(&defects), NEAR_DIAGONAL_RATE.0, NEAR_DIAGONAL_RATE.1),
    );
}

#[test]
fn zero_equidistribution_on_the_line() {
    let report = run(
        r#"{"experiment": "zeros-equidist", "model": {"kind": "projective-line"},
            "sequence": {"kind": "power", "degree": [1, 0]},
            "p": [25, 50, 100, 200], "samples": 400, "seed": 20240601, "epsilon_factor": 4.0}"#,
    );
    let r2 = check_value(&report, "percentile_log_rate_r2");
    let percentiles = pairs(&value(&report, "percentile90"));
    let fractions: Vec<f64> = value(&report, "exceptional")
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["fraction"].as_f64().unwrap())
        .collect();
    let nonincreasing = fractions.windows(2).all(|w| w[1] <= w[0]);
    let counts = report.summary.find("zero_counts").is_some_and(|c| c.pass);
    let fitted = value(&report, "rate_fit");
    verdict(
        "zero equidistribution on the line",
        r2 > ZERO_RATE_R2 && nonincreasing && counts,
        format!(
            "90th percentiles {}, C·log p/p fit R² = {r2:.4} (want > {ZERO_RATE_R2}); free-rate fit â = {:.3}; exceptional fractions {fractions:?}",
            sci(&percentiles.iter().map(|p| p.1).collect::<Vec<_>>()),
            fitted["a_hat"].as_f64().unwrap_or(f64::NAN),
        ),
    );
}

#[test]
fn zero_equidistribution_on_the_product() {
    let report = run(
        r#"{"experiment": "zeros-equidist", "model": {"kind": "projective-product"},
            "sequence": {"kind": "power", "degree": [1, 1]},
            "p": [2, 3, 4, 5, 6], "m": 2, "samples": 100, "seed": 20240602}"#,
    );
    let counts = report.summary.find("zero_counts").is_some_and(|c| c.pass);
    let decreasing = report.summary.find("percentile_decreasing").is_some_and(|c| c.pass);
    let percentiles = pairs(&value(&report, "percentile90"));
    verdict(
        "zero equidistribution on the product",
        counts && decreasing,
        format!(
            "Σ mult = 2d² for every sample: {counts}; 90th percentiles by d {}",
            sci(&percentiles.iter().map(|p| p.1).collect::<Vec<_>>())
        ),
    );
}

#[test]
fn fubini_study_speed() {
    let perturbed = run(
        r#"{"experiment": "fs-speed", "model": {"kind": "projective-line"},
            "sequence": {"kind": "perturbed", "psi": "psi-bump-1", "a": 0.5},
            "p": [25, 50, 100, 200, 400]}"#,
    );
    let sup = pairs(&value(&perturbed, "sup_normalized"));
    let fit = fit_rate_with_exponent(&sup, 0.5).unwrap();
    let exact = run(
        r#"{"experiment": "fs-speed", "model": {"kind": "projective-line"},
            "sequence": {"kind": "power", "degree": [1, 0]},
            "p": [25, 50, 100, 200, 400]}"#,
    );
    let worst_exact = check_value(&exact, "exact_case");
    verdict(
        "Fubini-Study current speed",
        fit.r_squared > FS_RATE_R2 && worst_exact <= FS_EXACT_TOL,
        format!(
            "perturbed: C₁ = {:.3e}, C₂ = {:.3e}, R² = {:.5} (want > {FS_RATE_R2}); unperturbed max {worst_exact:.2e} (want ≤ {FS_EXACT_TOL:e})",
            fit.c1, fit.c2, fit.r_squared
        ),
    );
}

#[test]
fn sampling_space_bookkeeping() {
    let mut bracket = true;
    for p in 1..=500usize {
        for m in 1..=4usize {
            let c = c_pm(p + 1, m);
            bracket &= c > 1.0 / (2.0 * E * m as f64) && c < 2.0 * E / m as f64;
        }
    }
    let line = BundleSequence::power(HermitianLineBundle::prequantum(KahlerModel::projective_line()));
    let product = BundleSequence::power(HermitianLineBundle::prequantum(KahlerModel::projective_product()));
    let mut degrees_exact = true;
    let mut ratio_ok = true;
    for p in 1..=200u64 {
        let pf = p as f64;
        for (seq, m, degree) in [(&line, 1, pf), (&product, 1, 2.0 * pf), (&product, 2, 2.0 * pf * pf)] {
            let c = combinatorics(seq, p, m).unwrap();
            degrees_exact &= c.delta1 == degree;
            if p >= 8 {
                let r = c.delta1 / c.delta2;
                ratio_ok &= r >= pf / RATIO_M1 && r <= RATIO_M1 * pf;
            }
        }
    }
    verdict(
        "sampling space bookkeeping",
        bracket && degrees_exact && ratio_ok,
        format!("c_pm bracket (p ≤ 500, m ≤ 4): {bracket}; δ¹ integer degrees: {degrees_exact}; δ¹/δ² within M₁^{{±1}}A_p: {ratio_ok}"),
    );
}

#[test]
fn off_diagonal_decay() {
    let line = KahlerModel::projective_line();
    let x = ChartPoint::line(0, Complex64::new(0.0, 0.0));
    let y = ChartPoint::line(0, Complex64::new(0.5, 0.0));
    let ps = [10u32, 20, 30, 40, 50, 60, 70, 80];
    let logs: Vec<(f64, f64)> = ps
        .iter()
        .map(|&p| {
            let onb = OrthonormalBasis::for_bundle(&HermitianLineBundle::standard(line, [p, 0]).unwrap()).unwrap();
            (f64::from(p), bergman_kernel2(&onb, &x, &y).ln())
        })
        .collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / logs.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    // Local log-log slopes keep steepening, unlike any power law.
    let local: Vec<f64> = logs.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0.ln() - w[0].0.ln())).collect();
    let steepening = local.windows(2).all(|w| w[1] < w[0]);
    verdict(
        "off-diagonal decay",
        slope < -0.05 && steepening,
        format!("d log|P_p(x,y)|/dp = {slope:.4}; local log-log slopes {local:.3?}"),
    );
}

#[test]
fn determinism_across_thread_counts() {
    let configs = [
        r#"{"experiment": "zeros-equidist", "model": {"kind": "projective-line"},
            "sequence": {"kind": "power", "degree": [1, 0]}, "p": [20, 40], "samples": 60, "seed": 5}"#,
        r#"{"experiment": "zeros-equidist", "model": {"kind": "projective-product"},
            "sequence": {"kind": "power", "degree": [1, 1]}, "p": [3], "m": 2, "samples": 20, "seed": 5}"#,
        r#"{"experiment": "fs-speed", "model": {"kind": "projective-line"},
            "sequence": {"kind": "perturbed", "psi": "psi-re-1", "a": 0.5}, "p": [20, 40]}"#,
        r#"{"experiment": "bergman-scan", "model": {"kind": "flat-torus", "tau": [0.1, 1.3]},
            "sequence": {"kind": "power", "degree": [1, 0]}, "p": [6, 9]}"#,
    ];
    let pool = |n: usize| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let (one, eight) = (pool(1), pool(8));
    let mut identical = 0;
    for c in configs {
        let a = one.install(|| run(c)).body_json();
        let b = eight.install(|| run(c)).body_json();
        let again = eight.install(|| run(c)).body_json();
        if a == b && b == again {
            identical += 1;
        }
    }
    verdict(
        "determinism across thread counts",
        identical == configs.len(),
        format!("{identical}/{} report bodies byte-identical across 1 and 8 threads and reruns", configs.len()),
    );
}
