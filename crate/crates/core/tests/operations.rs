//! Worked examples for every operation, each checked against an independent
//! computation (closed form, brute-force quadrature or scaling argument).

use std::f64::consts::PI;

use diastatic_core::calibration::{calibration_constant, SearchGrid};
use diastatic_core::diastasis::{diastasis_eval, hyperbolic_closed_forms, polarize_radial, radial_distance};
use diastatic_core::entropy::{
    asymptotic_exponent_fit, ball_volume, basepoint_sandwich_check, critical_exponent,
    cutoff_bisection, cutoff_bisection_auto, diastatic_entropy, diastatic_entropy_detailed,
    volume_entropy_growth, volume_entropy_integral, CutoffConfig, EntropyOptions, FitWindow,
    GrowthConfig, Mode,
};
use diastatic_core::model::{default_grid, metric_tensor, validate_spec, MetricSpec, RadialPoint};
use diastatic_core::num_complex::Complex64;
use diastatic_core::rigidity::{
    bcg_proxy_scan, lower_bound_check, minimality_scan, scale_metric, scaling_law_check, Verdict,
    SCAN_CSV_HEADER,
};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn scaled(dim: usize, lambda: f64) -> MetricSpec {
    scale_metric(&MetricSpec::hyperbolic(dim), lambda)
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target.abs()
}

/// The ordered CI family: hyperbolic n = 1..3, alpha = 2, and a_1 perturbations.
fn ci_family() -> Vec<MetricSpec> {
    let mut family: Vec<MetricSpec> = (1..=3).map(MetricSpec::hyperbolic).collect();
    family.push(MetricSpec::perturbed(1, 2.0, vec![]));
    family.push(MetricSpec::perturbed(2, 2.0, vec![]));
    for a in [-0.1, 0.1, 0.2, 0.3] {
        family.push(MetricSpec::perturbed(1, 1.0, vec![a]));
    }
    family
}

// --- spec model ------------------------------------------------------------

#[test]
fn validation_examples() {
    let hyper = validate_spec(&MetricSpec::hyperbolic(2), &default_grid()).unwrap();
    assert!(hyper.passed && hyper.complete);

    let flat = MetricSpec::perturbed(1, 0.0, vec![1.0]);
    let report = validate_spec(&flat, &default_grid()).unwrap();
    assert!(report.passed && !report.complete);
    assert_eq!(report.check(&flat, true).unwrap_err().name(), "IncompleteMetric");
}

#[test]
fn strongly_negative_linear_term_fails_below_the_sign_change() {
    let spec = MetricSpec::perturbed(1, 1.0, vec![-5.0]);
    let report = validate_spec(&spec, &default_grid()).unwrap();
    assert!(!report.passed);
    assert_eq!(report.failure.as_ref().unwrap().name(), "NonPositiveMetric");

    // g_{11̄}(r) = 1/(1−r²)² − 5, located by bisection on the explicit formula
    let g11 = |r: f64| 1.0 / (1.0 - r * r).powi(2) - 5.0;
    let (mut lo, mut hi) = (0.0, 0.99);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g11(mid) < 0.0 {
            lo = mid
        } else {
            hi = mid
        }
    }
    assert!((lo - (1.0 - 1.0 / 5f64.sqrt()).sqrt()).abs() < 1e-12);
    let first = report.first_failing_radius.unwrap();
    assert!(first < lo && g11(first) < 0.0);
}

#[test]
fn metric_examples() {
    let h1 = MetricSpec::hyperbolic(1);
    assert_eq!(metric_tensor(&h1, &[c(0.0)]).unwrap().matrix[(0, 0)], c(1.0));
    let g = metric_tensor(&h1, &[c(0.5)]).unwrap().matrix[(0, 0)];
    assert!((g.re - 16.0 / 9.0).abs() < 1e-14);

    // brute-force 2x2 determinant of φ′δ + φ″ z̄z at z = (0.5, 0)
    let h2 = MetricSpec::hyperbolic(2);
    let m = metric_tensor(&h2, &[c(0.5), c(0.0)]).unwrap();
    let det = m.matrix[(0, 0)] * m.matrix[(1, 1)] - m.matrix[(0, 1)] * m.matrix[(1, 0)];
    assert!((det.re - 0.75f64.powi(-3)).abs() < 1e-12);
    assert!((m.det - det.re).abs() < 1e-12);
}

// --- diastasis -------------------------------------------------------------

#[test]
fn kernel_examples() {
    let k = polarize_radial(&MetricSpec::hyperbolic(1));
    let series: f64 = (1..200).map(|j| 0.125f64.powi(j) / j as f64).sum();
    assert!((k.value(c(0.125)).re - series).abs() < 1e-14);
    assert!((series + 0.875f64.ln()).abs() < 1e-15);
    assert_eq!(k.value(c(0.0)).re, 0.0);

    let k = polarize_radial(&MetricSpec::perturbed(1, 1.0, vec![0.5]));
    for p in [-0.7, 0.2, 0.9, 0.99] {
        let expected = -(1.0f64 - p).ln() + 0.5 * p;
        assert!((k.value(c(p)).re - expected).abs() < 1e-12 * expected.abs().max(1.0));
    }
}

#[test]
fn diastasis_examples() {
    let k = polarize_radial(&MetricSpec::hyperbolic(1));
    assert!((diastasis_eval(&k, &[c(0.5)], &[c(0.0)]).unwrap() - (4.0f64 / 3.0).ln()).abs() < 1e-14);
    let expected = -(0.75 * 0.9375 / 0.765625f64).ln();
    assert!((diastasis_eval(&k, &[c(0.5)], &[c(0.25)]).unwrap() - expected).abs() < 1e-14);

    let (d, rho) = hyperbolic_closed_forms(&[c(0.5)], &[c(0.0)]).unwrap();
    assert!((2.0 * rho.cosh().ln() - d).abs() < 1e-14);
    assert!((rho - 0.5f64.atanh()).abs() < 1e-14);
    let (d, _) = hyperbolic_closed_forms(&[c(0.3), c(0.4)], &[c(0.0), c(0.0)]).unwrap();
    assert!((d + 0.75f64.ln()).abs() < 1e-14);
    let z = [Complex64::new(0.2, -0.3), c(0.1)];
    assert_eq!(hyperbolic_closed_forms(&z, &z).unwrap(), (0.0, 0.0));
}

#[test]
fn perturbed_radial_distance_matches_trapezoid_quadrature() {
    // ρ(0, r) = ∫₀ʳ sqrt(φ′ + tφ″)|_{t=s²} ds, brute-forced with a fine trapezoid rule
    let spec = MetricSpec::perturbed(1, 1.0, vec![0.3, -0.05]);
    let len = |s: f64| {
        let t = s * s;
        (1.0 / (1.0 - t).powi(2) + 0.3 + 4.0 * -0.05 * t).sqrt()
    };
    let r = 0.8;
    let steps = 200_000;
    let h = r / steps as f64;
    let trap: f64 = (0..=steps)
        .map(|i| {
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            w * len(i as f64 * h)
        })
        .sum::<f64>()
        * h;
    let rho = radial_distance(&spec, &RadialPoint::from_r(r)).unwrap();
    assert!((rho - trap).abs() < 1e-8, "{rho} vs {trap}");
}

// --- calibration -----------------------------------------------------------

#[test]
fn calibration_examples() {
    for dim in [1, 3] {
        let spec = MetricSpec::hyperbolic(dim);
        let est = calibration_constant(&spec, &polarize_radial(&spec), &SearchGrid::default()).unwrap();
        assert!(within(est.value, 2.0, 0.01), "n={dim}: {}", est.value);
    }
    let spec = scaled(1, 4.0);
    let est = calibration_constant(&spec, &polarize_radial(&spec), &SearchGrid::default()).unwrap();
    assert!(within(est.value, 4.0, 0.01));
}

#[test]
fn calibration_refinement_never_drops() {
    for spec in ci_family() {
        let k = polarize_radial(&spec);
        let grid = SearchGrid::default();
        let coarse = calibration_constant(&spec, &k, &grid).unwrap();
        let fine = calibration_constant(&spec, &k, &grid.refined()).unwrap();
        assert!(
            fine.value >= coarse.value - grid.tolerance * coarse.value.max(1.0),
            "{}: {} -> {}",
            spec.name,
            coarse.value,
            fine.value
        );
    }
}

// --- entropy ---------------------------------------------------------------

#[test]
fn exponent_fit_examples() {
    let w = FitWindow::default();
    let h2 = MetricSpec::hyperbolic(2);
    let fit = asymptotic_exponent_fit(&h2, &polarize_radial(&h2), Mode::Diastatic, &w).unwrap();
    assert!((fit.slope_density + 3.0).abs() < 1e-3 && (fit.slope_decay - 1.0).abs() < 1e-3);
    assert!((critical_exponent(&fit).unwrap().value - 2.0).abs() < 1e-3);

    let h1 = MetricSpec::hyperbolic(1);
    let fit = asymptotic_exponent_fit(&h1, &polarize_radial(&h1), Mode::Volume, &w).unwrap();
    assert!((fit.slope_density + 2.0).abs() < 1e-3 && (fit.slope_decay - 0.5).abs() < 1e-3);
    assert!((critical_exponent(&fit).unwrap().value - 2.0).abs() < 2e-3);

    let p = MetricSpec::perturbed(1, 1.0, vec![0.3]);
    let fit = asymptotic_exponent_fit(&p, &polarize_radial(&p), Mode::Diastatic, &w).unwrap();
    assert!((fit.slope_decay - 1.0).abs() < 1e-3);
}

#[test]
fn cutoff_bisection_examples() {
    let cfg = CutoffConfig::default();
    let h1 = MetricSpec::hyperbolic(1);
    let v = cutoff_bisection(&h1, &polarize_radial(&h1), Mode::Diastatic, (0.2, 3.0), &cfg).unwrap();
    assert!((v.value - 1.0).abs() <= 0.05);
    let h3 = MetricSpec::hyperbolic(3);
    let v = cutoff_bisection(&h3, &polarize_radial(&h3), Mode::Diastatic, (1.0, 5.0), &cfg).unwrap();
    assert!((v.value - 3.0).abs() <= 0.05);
    let s = scaled(1, 4.0);
    let v = cutoff_bisection(&s, &polarize_radial(&s), Mode::Diastatic, (0.01, 3.0), &cfg).unwrap();
    assert!((v.value - 0.25).abs() <= 0.02);
}

#[test]
fn cutoff_quadrature_refinement_is_within_error() {
    let coarse = CutoffConfig::default();
    let fine = CutoffConfig {
        panels_per_shell: 2,
        ..coarse
    };
    for spec in ci_family() {
        let k = polarize_radial(&spec);
        for mode in [Mode::Diastatic, Mode::Volume] {
            let a = cutoff_bisection_auto(&spec, &k, mode, &coarse).unwrap();
            let b = cutoff_bisection_auto(&spec, &k, mode, &fine).unwrap();
            assert!((a.value - b.value).abs() <= a.error, "{} {mode}: {a:?} {b:?}", spec.name);
        }
    }
}

#[test]
fn methods_agree_across_the_family() {
    let opts = EntropyOptions::default();
    for spec in ci_family() {
        let k = polarize_radial(&spec);
        for mode in [Mode::Diastatic, Mode::Volume] {
            let fit = asymptotic_exponent_fit(&spec, &k, mode, &opts.window).unwrap();
            let asym = critical_exponent(&fit).unwrap();
            let cut = cutoff_bisection_auto(&spec, &k, mode, &opts.cutoff).unwrap();
            assert!(
                (asym.value - cut.value).abs() <= asym.error + cut.error,
                "{} {mode}: {} vs {}",
                spec.name,
                asym.value,
                cut.value
            );
        }
    }
}

#[test]
fn entropy_examples() {
    for (spec, target) in [
        (MetricSpec::hyperbolic(1), 2.0),
        (MetricSpec::hyperbolic(2), 4.0),
        (scaled(2, 4.0), 2.0),
    ] {
        let e = diastatic_entropy(&spec).unwrap();
        assert!(within(e.value, target, 0.02), "{}: {}", spec.name, e.value);
    }
    for (spec, target) in [
        (MetricSpec::hyperbolic(1), 2.0),
        (MetricSpec::hyperbolic(2), 4.0),
        (MetricSpec::perturbed(1, 2.0, vec![]), 2.0f64.sqrt()),
    ] {
        let e = volume_entropy_integral(&spec).unwrap();
        assert!(within(e.value, target, 0.02), "{}: {}", spec.name, e.value);
    }
    let a = volume_entropy_integral(&MetricSpec::perturbed(1, 2.0, vec![])).unwrap();
    let b = volume_entropy_integral(&scaled(1, 2.0)).unwrap();
    assert!(within(a.value, b.value, 0.02));
}

#[test]
fn ball_volume_matches_the_hyperbolic_closed_form() {
    // Vol B(0, t) = π sinh² t, and sinh²(artanh r) = r²/(1 − r²)
    let spec = MetricSpec::hyperbolic(1);
    let t = 0.7f64;
    let p = RadialPoint::from_r(t.tanh());
    assert!(within(ball_volume(&spec, &p), PI * t.sinh().powi(2), 1e-10));
    for delta in [0.5, 1e-2, 1e-5, 1e-9] {
        let p = RadialPoint::from_delta(delta);
        let exact = PI * p.r * p.r / p.gap;
        assert!(within(ball_volume(&spec, &p), exact, 1e-10), "delta {delta}");
    }
}

#[test]
fn growth_examples_and_sandwich() {
    for dim in [1, 2] {
        let g = volume_entropy_growth(&MetricSpec::hyperbolic(dim), &GrowthConfig::default()).unwrap();
        assert!(within(g.estimate.value, 2.0 * dim as f64, 0.02));
    }
    for spec in ci_family() {
        let g = volume_entropy_growth(&spec, &GrowthConfig::default()).unwrap();
        let v = volume_entropy_integral(&spec).unwrap();
        assert!(g.sandwich_holds, "{}", spec.name);
        assert!(g.liminf - g.tolerance <= g.estimate.value && g.estimate.value <= g.limsup + g.tolerance);
        assert!(within(g.estimate.value, v.value, 0.02), "{}", spec.name);
    }
}

#[test]
fn basepoint_sandwich_examples() {
    let spec = MetricSpec::hyperbolic(1);
    let k = polarize_radial(&spec);
    let bound = (1.5 * 2.0 * 0.3f64.atanh()).exp();
    assert!((bound - 2.531).abs() < 1e-3);
    let rep = basepoint_sandwich_check(&spec, &k, c(0.0), c(0.3), 1.5, &[0.9, 0.99, 0.999]).unwrap();
    assert!(rep.passed);
    for row in &rep.rows {
        assert!(within(row.bound, bound, 0.01));
        assert!(1.0 / bound <= row.ratio && row.ratio <= bound);
    }
    let same = basepoint_sandwich_check(&spec, &k, c(0.3), c(0.3), 1.5, &[0.99]).unwrap();
    assert_eq!(same.rows[0].ratio, 1.0);
    assert!(same.rows[0].bound >= 1.0);
}

// --- rigidity --------------------------------------------------------------

#[test]
fn scale_metric_examples() {
    let h = MetricSpec::hyperbolic(2);
    assert_eq!(scale_metric(&h, 1.0), h);
    let z = [Complex64::new(0.3, 0.1), c(-0.2)];
    let a = metric_tensor(&h, &z).unwrap().matrix;
    let b = metric_tensor(&scale_metric(&h, 4.0), &z).unwrap().matrix;
    assert!((b - a * c(4.0)).iter().all(|x| x.norm() < 1e-13));

    let p = MetricSpec::perturbed(1, 1.0, vec![0.3]);
    let ratio = scale_metric(&p, 2.0).potential(&[c(0.5)]).unwrap() / p.potential(&[c(0.5)]).unwrap();
    assert!((ratio - 2.0).abs() < 1e-14);
}

#[test]
fn scaling_law_examples() {
    let opts = EntropyOptions::default();
    let rep = scaling_law_check(&MetricSpec::hyperbolic(1), 4.0, &opts, 0.02).unwrap();
    assert!(rep.passed && within(rep.ent_d_ratio, 0.5, 0.02) && within(rep.ent_v_ratio, 0.5, 0.02));
    let rep = scaling_law_check(&MetricSpec::perturbed(1, 1.0, vec![0.2]), 1.0, &opts, 0.02).unwrap();
    assert!(rep.passed && within(rep.ent_d_ratio, 1.0, 1e-12) && within(rep.ent_v_ratio, 1.0, 1e-12));
    let rep = scaling_law_check(&MetricSpec::perturbed(1, 1.0, vec![0.3]), 0.25, &opts, 0.02).unwrap();
    assert!(rep.passed && within(rep.ent_d_ratio, 2.0, 0.02) && within(rep.ent_v_ratio, 2.0, 0.02));
}

#[test]
fn exponent_scales_inversely_with_lambda() {
    let opts = EntropyOptions::default();
    for spec in ci_family() {
        let base = diastatic_entropy_detailed(&spec, &opts).unwrap();
        for lambda in [0.25, 4.0] {
            let s = diastatic_entropy_detailed(&scale_metric(&spec, lambda), &opts).unwrap();
            assert!(within(s.exponent.value, base.exponent.value / lambda, 0.02));
            assert!(within(s.calibration.value, base.calibration.value * lambda.sqrt(), 0.01));
            assert!(within(s.estimate.value, base.estimate.value / lambda.sqrt(), 0.02));
        }
    }
}

#[test]
fn lower_bound_examples() {
    let opts = EntropyOptions::default();
    let rep = lower_bound_check(&MetricSpec::hyperbolic(2), &opts).unwrap();
    assert_eq!(rep.verdict, Verdict::Holds);
    assert!(within(rep.ent_d.value, 4.0, 0.02) && within(rep.ent_v.value, 4.0, 0.02));
    assert_eq!(rep.sharp_case, Some(true));

    let rep = lower_bound_check(&MetricSpec::perturbed(1, 1.0, vec![0.2]), &opts).unwrap();
    assert_eq!(rep.verdict, Verdict::Holds);

    let rep = lower_bound_check(&MetricSpec::perturbed(1, 2.0, vec![]), &opts).unwrap();
    assert_eq!(rep.verdict, Verdict::Holds);
    assert!(within(rep.ent_d.value, 2.0f64.sqrt(), 0.02) && within(rep.ent_v.value, 2.0f64.sqrt(), 0.02));
    assert_eq!(rep.sharp_case, Some(true));

    for spec in ci_family() {
        assert_eq!(lower_bound_check(&spec, &opts).unwrap().verdict, Verdict::Holds, "{}", spec.name);
    }
}

#[test]
fn bcg_proxy_examples() {
    let opts = EntropyOptions::default();
    let rep = bcg_proxy_scan(&MetricSpec::hyperbolic(1), &[0.5, 1.0, 2.0], 0.9, &opts, 0.03).unwrap();
    assert!(rep.passed && rep.spread <= 0.03);
    let rep = bcg_proxy_scan(&MetricSpec::perturbed(1, 1.0, vec![0.1]), &[1.0], 0.5, &opts, 0.03).unwrap();
    assert_eq!(rep.spread, 0.0);
    let rep = bcg_proxy_scan(&MetricSpec::hyperbolic(2), &[1.0, 4.0], 0.8, &opts, 0.03).unwrap();
    let ratio = rep.rows[1].functional / rep.rows[0].functional;
    assert!(within(ratio, 1.0, 0.03));
    for spec in ci_family() {
        let rep = bcg_proxy_scan(&spec, &[0.5, 1.0, 2.0], 0.5, &opts, 0.03).unwrap();
        assert!(rep.passed, "{}: {}", spec.name, rep.spread);
    }
}

#[test]
fn minimality_scan_examples() {
    let opts = EntropyOptions::default();
    let table = minimality_scan(&[0.1, -0.1, 0.0], 1, 1, 0.5, &opts).unwrap();
    assert_eq!(table.rows.len(), 3);
    let params: Vec<f64> = table.rows.iter().map(|r| r.param).collect();
    assert_eq!(params, vec![-0.1, 0.0, 0.1]);
    assert!(within(table.rows[1].ent_d, 2.0, 0.02));

    let empty = minimality_scan(&[], 1, 1, 0.5, &opts).unwrap();
    assert_eq!(empty.to_csv(), format!("{SCAN_CSV_HEADER}\n"));

    let one = minimality_scan(&[0.2], 1, 1, 0.5, &opts).unwrap();
    assert!(one.rows[0].ent_d >= one.rows[0].ent_v);
}
