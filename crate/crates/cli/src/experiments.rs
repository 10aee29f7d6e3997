//! The six experiments. Each turns a validated config into a report.

use std::f64::consts::{E, PI};

use anyhow::Context;
use bergman_core::asymptotics::{expansion_order, fit_expansion, fit_rate, predicted_coefficients, ExpansionSample};
use bergman_core::bergman::{bergman_function, dimension, OrthonormalBasis};
use bergman_core::bundles::{BundleSequence, SequenceKind};
use bergman_core::geometry::sphere::from_sphere;
use bergman_core::geometry::{ChartPoint, KahlerModel, ModelKind};
use bergman_core::model_kernel::{annihilation_residual, model_kernel, rescaled_comparison, reproducing_defect, ModelFrame};
use bergman_core::random_sections::{combinatorics, fs_current_pairing, TestForm, ZeroExperiment};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::{Experiment, ExperimentConfig};
use crate::report::{Cell, Report};

pub fn run_experiment(config: &ExperimentConfig) -> anyhow::Result<Report> {
    let start = std::time::Instant::now();
    let mut report = match config.experiment {
        Experiment::BergmanScan => bergman_scan(config),
        Experiment::ExpansionFit => expansion_fit(config),
        Experiment::ModelKernel => model_kernel_experiment(config),
        Experiment::ZerosEquidist => zeros_equidist(config),
        Experiment::FsSpeed => fs_speed(config),
        Experiment::Degrees => degrees(config),
    }?;
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(report)
}

fn setup(config: &ExperimentConfig) -> anyhow::Result<(KahlerModel, BundleSequence)> {
    let model = config.kahler_model().context("model")?;
    let seq = config.sequence().context("sequence")?;
    Ok((model, seq))
}

fn onb_for(seq: &BundleSequence, p: u64) -> anyhow::Result<OrthonormalBasis> {
    let bundle = seq.bundle(p).with_context(|| format!("bundle at p = {p}"))?;
    OrthonormalBasis::for_bundle(&bundle).with_context(|| format!("orthonormal basis at p = {p}"))
}

/// Slope of the least-squares line through `(x, y)`.
fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Log-log slope of positive data.
fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().filter(|p| p.1 > 0.0).map(|p| (p.0.ln(), p.1.ln())).collect();
    if logs.len() < 2 {
        return f64::NAN;
    }
    slope(&logs)
}

/// Deterministic, roughly uniform scan points: a Fibonacci lattice on the
/// sphere, paired lattices on the product, a Kronecker lattice on a torus.
pub fn scan_points(model: &KahlerModel, n: usize) -> Vec<ChartPoint> {
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let sphere = |i: usize| {
        let x3 = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
        let r = (1.0 - x3 * x3).sqrt();
        let phi = 2.0 * PI * golden * i as f64;
        from_sphere([r * phi.cos(), r * phi.sin(), x3])
    };
    (0..n)
        .map(|i| match model.kind {
            ModelKind::ProjectiveLine => {
                let (c, z) = sphere(i);
                ChartPoint::line(c, z)
            }
            ModelKind::ProjectiveProduct => {
                let (c1, z) = sphere(i);
                let (c2, w) = sphere(n - 1 - i);
                ChartPoint::product(c1 | (c2 << 1), z, w)
            }
            ModelKind::FlatTorus { tau } => {
                let u = (golden * i as f64).fract();
                let v = (i as f64 + 0.5) / n as f64;
                ChartPoint::line(0, Complex64::new(u, 0.0) + tau * v)
            }
        })
        .collect()
}

fn coords_cells(x: &ChartPoint) -> Vec<Cell> {
    let c = x.coords();
    let second = c.get(1).copied().unwrap_or_default();
    vec![x.chart.into(), c[0].re.into(), c[0].im.into(), second.re.into(), second.im.into()]
}

fn bergman_scan(config: &ExperimentConfig) -> anyhow::Result<Report> {
    let (model, seq) = setup(config)?;
    let n = model.dim() as i32;
    let points = scan_points(&model, config.grid_points.unwrap_or(50));
    let mut report = Report::new(
        config.clone(),
        &["p", "A_p", "point", "chart", "z1_re", "z1_im", "z2_re", "z2_im", "P_p", "P_p_over_A_n"],
    );
    let exact = matches!(seq.kind, SequenceKind::PowerRay { .. }) && !matches!(model.kind, ModelKind::FlatTorus { .. });
    let mut worst_spread = 0.0f64;
    let mut worst_value = 0.0f64;
    for p in config.p_values() {
        let onb = onb_for(&seq, p)?;
        let a = seq.a_p(p);
        let values: Vec<f64> = points.par_iter().map(|x| bergman_function(&onb, x)).collect();
        let dim = dimension(onb.bundle()) as f64;
        let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
        worst_spread = worst_spread.max((hi - lo) / dim);
        worst_value = worst_value.max(values.iter().map(|v| (v - dim).abs() / dim).fold(0.0, f64::max));
        for (i, (x, v)) in points.iter().zip(&values).enumerate() {
            let mut row = vec![p.into(), a.into(), i.into()];
            row.extend(coords_cells(x));
            row.push((*v).into());
            row.push((v / a.powi(n)).into());
            report.push(row);
        }
    }
    report.summary.value("max_relative_spread", worst_spread);
    report.summary.value("max_relative_deviation_from_dimension", worst_value);
    if exact {
        report.summary.check("constant_over_grid", worst_spread, "relative spread ≤ 1e-8", worst_spread <= 1e-8);
        report.summary.check("equals_dimension", worst_value, "|P_p − d_p|/d_p ≤ 1e-8", worst_value <= 1e-8);
    }
    Ok(report)
}

fn expansion_fit(config: &ExperimentConfig) -> anyhow::Result<Report> {
    let (model, seq) = setup(config)?;
    let n = model.dim() as i32;
    let x0 = config.base_point();
    model.check_point(&x0)?;
    let (b0, b1) = predicted_coefficients(&seq.limit_form(), &x0)?;
    let order = config.order.unwrap_or(match seq.kind {
        SequenceKind::PowerRay { .. } => 1,
        _ => expansion_order(seq.exponent()),
    });
    let mut report = Report::new(config.clone(), &["p", "A_p", "P_p", "P_p_over_A_n", "residual_b0", "residual_b0_b1"]);
    let mut samples = Vec::new();
    for p in config.p_values() {
        let onb = onb_for(&seq, p)?;
        let a = seq.a_p(p);
        let v = bergman_function(&onb, &x0);
        let lead = v / a.powi(n);
        samples.push(ExpansionSample { p, a_p: a, value: v });
        report.push(vec![
            p.into(),
            a.into(),
            v.into(),
            lead.into(),
            (lead - b0).abs().into(),
            (lead - b0 - b1 / a).abs().into(),
        ]);
    }
    let fit = fit_expansion(x0, model.dim(), &samples, order)?.with_prediction((b0, b1));
    let residual_points: Vec<(f64, f64)> =
        samples.iter().map(|s| (s.a_p, (s.value / s.a_p.powi(n) - b0).abs())).collect();
    let decay = loglog_slope(&residual_points);
    report.summary.value("order", order);
    report.summary.value("coefficients", &fit.coefficients);
    report.summary.value("fit_residual", fit.residual);
    report.summary.value("predicted_b0", b0);
    report.summary.value("predicted_b1", b1);
    report.summary.value("residual_slope", decay);
    if let Some(c) = fit.consistency() {
        report.summary.value("consistency_b1", c);
    }
    match seq.kind {
        SequenceKind::PerturbedPower { a, .. } => {
            let rate = a.min(1.0);
            let lo = rate - 0.05;
            let hi = rate + 0.1;
            report.summary.check(
                "residual_decay_exponent",
                -decay,
                format!("−slope ∈ [{lo}, {hi}]"),
                (lo..=hi).contains(&-decay),
            );
        }
        _ => {
            let e0 = (fit.coefficients[0] - b0).abs() / b0.abs();
            report.summary.check("b0", fit.coefficients[0], format!("{b0} ± 1%"), e0 <= 0.01);
            if order >= 1 {
                let b1_hat = fit.coefficients[1];
                let (err, tol) = if b1.abs() < 1e-12 {
                    ((b1_hat - b1).abs(), "± 0.05 absolute".to_string())
                } else {
                    ((b1_hat - b1).abs() / b1.abs(), "± 5%".to_string())
                };
                let limit = 0.05;
                report.summary.check("b1", b1_hat, format!("{b1} {tol}"), err <= limit);
            }
        }
    }
    Ok(report)
}

/// `10³` pairs `(Z, Z′)` with `|Z|, |Z′| ≤ 2`.
fn annihilation_pairs(dim: usize) -> Vec<(Vec<Complex64>, Vec<Complex64>)> {
    let mut out = Vec::with_capacity(1000);
    for i in 0..100 {
        let z = Complex64::new(-2.0 + 4.0 * (i % 10) as f64 / 9.0, -2.0 + 4.0 * (i / 10) as f64 / 9.0) / 2f64.sqrt();
        for j in 0..10 {
            let w = Complex64::from_polar(0.2 * (j + 1) as f64, 0.7 * j as f64);
            if dim == 1 {
                out.push((vec![z], vec![w]));
            } else {
                out.push((vec![z, w * 0.5], vec![w, z * 0.5]));
            }
        }
    }
    out
}

fn model_kernel_experiment(config: &ExperimentConfig) -> anyhow::Result<Report> {
    let (model, seq) = setup(config)?;
    let x0 = config.base_point();
    let frame = ModelFrame::new(model, &seq.limit_form(), x0)?;
    let q = config.window.unwrap_or(2.0);
    let mut report = Report::new(config.clone(), &["p", "A_p", "window", "defect"]);
    let mut points = Vec::new();
    for p in config.p_values() {
        let onb = onb_for(&seq, p)?;
        let a = seq.a_p(p);
        let d = rescaled_comparison(&onb, &frame, a, q)?;
        points.push((a, d));
        report.push(vec![p.into(), a.into(), q.into(), d.into()]);
    }
    let annihilation = annihilation_pairs(model.dim())
        .iter()
        .map(|(z, w)| annihilation_residual(&frame, z, w))
        .fold(0.0, f64::max);
    let nodes = if model.dim() == 1 { 96 } else { 64 };
    let reproducing = reproducing_defect(&frame, 6.0, nodes)?;
    let zero = vec![Complex64::default(); model.dim()];
    let diag = model_kernel(&frame, &zero, &zero).re;
    let (b0, _) = predicted_coefficients(&seq.limit_form(), &x0)?;
    report.summary.check("annihilation_residual", annihilation, "≤ 1e-12", annihilation <= 1e-12);
    report.summary.check("reproducing_defect_r6", reproducing, "≤ 1e-6", reproducing <= 1e-6);
    report.summary.check("diagonal_vs_b0", (diag - b0).abs(), "≤ 1e-12", (diag - b0).abs() <= 1e-12);
    if points.len() >= 2 {
        let exponent = -loglog_slope(&points);
        let decreasing = points.windows(2).all(|w| w[1].1 < w[0].1);
        report.summary.value("decay_exponent", exponent);
        report.summary.check("defect_decreasing", f64::from(u8::from(decreasing)), "strictly decreasing in p", decreasing);
        report.summary.check("decay_exponent", exponent, "∈ [0.4, 0.6]", (0.4..=0.6).contains(&exponent));
    }
    Ok(report)
}

/// Nearest-rank percentile of unsorted data.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

/// Least-squares `y ≈ C log A / A` through the origin, with `R²`.
pub fn log_rate_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let basis: Vec<f64> = points.iter().map(|(a, _)| a.ln() / a).collect();
    let c = basis.iter().zip(points).map(|(b, p)| b * p.1).sum::<f64>() / basis.iter().map(|b| b * b).sum::<f64>();
    let mean = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    let ss_res: f64 = basis.iter().zip(points).map(|(b, p)| (p.1 - c * b).powi(2)).sum();
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean).powi(2)).sum();
    (c, if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 })
}

fn zeros_equidist(config: &ExperimentConfig) -> anyhow::Result<Report> {
    let (_, seq) = setup(config)?;
    let m = config.m();
    let n = config.samples.unwrap_or(0);
    let factor = config.epsilon_factor.unwrap_or(4.0);
    let mut report = Report::new(config.clone(), &["p", "A_p", "m", "seed", "sample", "form_id", "value"]);
    let mut percentiles = Vec::new();
    let mut fractions = Vec::new();
    let mut all_counts_match = true;
    let mut worst_residual = 0.0f64;
    for p in config.p_values() {
        let exp = ZeroExperiment::new(&seq, p).with_context(|| format!("zero experiment at p = {p}"))?;
        let outcomes = exp.run(config.seed, n).with_context(|| format!("sampling at p = {p}"))?;
        let mut normalized = Vec::with_capacity(n * exp.forms.len());
        for o in &outcomes {
            all_counts_match &= o.total == o.expected_total;
            worst_residual = worst_residual.max(o.residual);
            for (r, c2) in o.records.iter().zip(&exp.norms) {
                normalized.push(r.value.abs() / c2);
                report.push(vec![
                    r.p.into(),
                    r.a_p.into(),
                    r.m.into(),
                    r.seed.into(),
                    r.index.into(),
                    r.form.id().into(),
                    r.value.into(),
                ]);
            }
        }
        let a = exp.a_p;
        let epsilon = factor * a.ln() / a;
        let estimate = exp.exceptional(&outcomes, epsilon);
        percentiles.push((a, percentile(&normalized, 0.9)));
        fractions.push(estimate);
    }
    report.summary.value("percentile90", &percentiles);
    report.summary.value("exceptional", &fractions);
    report.summary.value("max_zero_residual", worst_residual);
    report.summary.check(
        "zero_counts",
        f64::from(u8::from(all_counts_match)),
        "Σ mult equals the expected total for every sample",
        all_counts_match,
    );
    if percentiles.len() >= 2 {
        if m == 1 {
            let (c, r2) = log_rate_fit(&percentiles);
            report.summary.value("log_rate_constant", c);
            report.summary.check("percentile_log_rate_r2", r2, "> 0.95", r2 > 0.95);
            let nonincreasing = fractions.windows(2).all(|w| w[1].fraction <= w[0].fraction);
            report.summary.check(
                "exceptional_nonincreasing",
                f64::from(u8::from(nonincreasing)),
                "fractions nonincreasing in p",
                nonincreasing,
            );
            if percentiles.len() >= 4 {
                let fit = fit_rate(&percentiles)?;
                report.summary.value("rate_fit", &fit);
            }
        } else {
            let decreasing = percentiles.windows(2).all(|w| w[1].1 < w[0].1);
            report.summary.check(
                "percentile_decreasing",
                f64::from(u8::from(decreasing)),
                "90th percentile decreasing in d",
                decreasing,
            );
        }
    }
    Ok(report)
}

fn fs_speed(config: &ExperimentConfig) -> anyhow::Result<Report> {
    let (model, seq) = setup(config)?;
    let m = config.m();
    let omega = seq.limit_form();
    let norms: Vec<f64> = TestForm::ALL.iter().map(|f| f.c2_norm(&model)).collect();
    let mut report = Report::new(config.clone(), &["p", "A_p", "m", "form_id", "value", "normalized"]);
    let mut sup = Vec::new();
    for p in config.p_values() {
        let onb = onb_for(&seq, p)?;
        let a = seq.a_p(p);
        let onbs = vec![&onb; m];
        let mut worst = 0.0f64;
        for (f, c2) in TestForm::ALL.iter().zip(&norms) {
            let v = fs_current_pairing(&onbs, *f, a, &omega)?;
            worst = worst.max(v.abs() / c2);
            report.push(vec![p.into(), a.into(), m.into(), f.id().into(), v.into(), (v.abs() / c2).into()]);
        }
        sup.push((a, worst));
    }
    report.summary.value("sup_normalized", &sup);
    let max_abs = sup.iter().map(|s| s.1).fold(0.0, f64::max);
    if matches!(seq.kind, SequenceKind::PowerRay { .. }) && !matches!(model.kind, ModelKind::FlatTorus { .. }) {
        report.summary.check("exact_case", max_abs, "≤ 1e-8", max_abs <= 1e-8);
    } else if sup.len() >= 4 {
        let fit = fit_rate(&sup)?;
        report.summary.check("rate_fit_r2", fit.r_squared, "> 0.95", fit.r_squared > 0.95);
        report.summary.value("rate_fit", &fit);
    }
    Ok(report)
}

fn degrees(config: &ExperimentConfig) -> anyhow::Result<Report> {
    let (_, seq) = setup(config)?;
    let m = config.m();
    let mut report =
        Report::new(config.clone(), &["p", "A_p", "m", "d_p", "d_pm", "c_pm", "delta1", "delta2", "ratio"]);
    let mf = m as f64;
    let m1 = 4.0 * E;
    let (mut bracket, mut integral, mut ratio_ok, mut unit) = (true, true, true, true);
    for p in config.p_values() {
        let c = combinatorics(&seq, p, m)?;
        let a = seq.a_p(p);
        let ratio = c.delta1 / c.delta2;
        bracket &= c.c_pm > 1.0 / (2.0 * E * mf) && c.c_pm < 2.0 * E / mf;
        integral &= c.delta1 == c.delta1.round();
        if p >= 8 {
            ratio_ok &= ratio >= a / m1 && ratio <= m1 * a;
        }
        if m == 1 {
            unit &= (c.c_pm - 1.0).abs() <= 1e-12;
        }
        report.push(vec![
            p.into(),
            a.into(),
            m.into(),
            c.d_p.into(),
            c.d_pm.into(),
            c.c_pm.into(),
            c.delta1.into(),
            c.delta2.into(),
            ratio.into(),
        ]);
    }
    let flag = |b: bool| f64::from(u8::from(b));
    report.summary.check("c_pm_bracket", flag(bracket), "1/(2em) < c_pm < 2e/m", bracket);
    report.summary.check("delta1_integral", flag(integral), "δ¹ is an integer degree", integral);
    report.summary.check("delta_ratio_bracket", flag(ratio_ok), "A_p/(4e) ≤ δ¹/δ² ≤ 4e·A_p for p ≥ 8", ratio_ok);
    if m == 1 {
        report.summary.check("c_p1_unit", flag(unit), "c_{p,1} = 1", unit);
    }
    Ok(report)
}
