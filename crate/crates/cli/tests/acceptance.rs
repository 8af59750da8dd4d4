//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use diastatic_core::diastasis::{diastasis_eval, hyperbolic_closed_forms, polarize_radial};
use diastatic_core::entropy::{
    basepoint_sandwich_check, diastatic_entropy_detailed, volume_entropy_growth,
    volume_entropy_integral_detailed, EntropyOptions,
};
use diastatic_core::model::MetricSpec;
use diastatic_core::num_complex::Complex64;
use diastatic_core::rigidity::{bcg_proxy_scan, lower_bound_check, scaling_law_check, Verdict};
use diastatic_core::verify::{random_point, run_battery, BatteryConfig};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_diastatic");

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rel(value: f64, target: f64) -> f64 {
    (value - target).abs() / target.abs()
}

fn family() -> Vec<MetricSpec> {
    let mut out: Vec<MetricSpec> = (1..=3).map(MetricSpec::hyperbolic).collect();
    out.push(MetricSpec::perturbed(1, 2.0, vec![]));
    out.push(MetricSpec::perturbed(2, 2.0, vec![]));
    for a in [-0.1, 0.1, 0.2, 0.3] {
        out.push(MetricSpec::perturbed(1, 1.0, vec![a]));
    }
    out
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn entropy_table() -> Outcome {
    let start = Instant::now();
    let out = Command::new(BIN)
        .args(["--no-timestamp", "--quiet", "table", "--hyperbolic", "--n-range", "1..3"])
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(out.status.success(), format!("exit {:?}", out.status.code()))?;
    let report: Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let rows = report["results"].as_array().ok_or("no results")?;
    ensure(rows.len() == 3, "expected three rows")?;
    let mut worst = (0.0f64, 0.0f64);
    for (row, n) in rows.iter().zip(1..) {
        let target = 2.0 * n as f64;
        let ent_d = row["ent_d"].as_f64().ok_or("ent_d")?;
        let ent_v = row["ent_v"].as_f64().ok_or("ent_v")?;
        let x = row["calibration"].as_f64().ok_or("calibration")?;
        worst.0 = worst.0.max(rel(ent_d, target)).max(rel(ent_v, target));
        worst.1 = worst.1.max(rel(x, 2.0));
    }
    ensure(worst.0 <= 0.02, format!("entropy off by {:.3e}", worst.0))?;
    ensure(worst.1 <= 0.01, format!("calibration off by {:.3e}", worst.1))?;
    ensure(elapsed <= Duration::from_secs(60), format!("took {elapsed:?}"))?;
    Ok(format!(
        "max rel err entropies {:.2e}, calibration {:.2e}, {:.2?}",
        worst.0, worst.1, elapsed
    ))
}

fn critical_exponent() -> Outcome {
    let opts = EntropyOptions::default();
    let mut worst = 0.0f64;
    for n in 1..=3 {
        let d = diastatic_entropy_detailed(&MetricSpec::hyperbolic(n), &opts).map_err(|e| e.to_string())?;
        let (a, b) = (&d.exponent, &d.exponent_cutoff);
        worst = worst.max(rel(a.value, n as f64)).max(rel(b.value, n as f64));
        ensure(
            (a.value - b.value).abs() <= a.error + b.error,
            format!("n={n}: {} vs {} beyond {:.2e}", a.value, b.value, a.error + b.error),
        )?;
    }
    ensure(worst <= 0.02, format!("rel err {worst:.3e}"))?;
    Ok(format!("both methods within {worst:.2e} of n, and within error bars of each other"))
}

fn oracle_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let n = 1 + i % 3;
        let spec = MetricSpec::hyperbolic(n);
        let k = polarize_radial(&spec);
        let z = random_point(&mut rng, n, 0.9);
        let w = random_point(&mut rng, n, 0.9);
        let d = diastasis_eval(&k, &z, &w).map_err(|e| e.to_string())?;
        let (dh, _) = hyperbolic_closed_forms(&z, &w).map_err(|e| e.to_string())?;
        worst = worst.max((d - dh).abs() / dh.max(1.0));
    }
    ensure(worst <= 1e-8, format!("series vs closed form {worst:.3e}"))?;
    let mut worst_rho = 0.0f64;
    for i in 1..=999 {
        let r = i as f64 / 1000.0;
        let (d, _) = hyperbolic_closed_forms(&[Complex64::new(r, 0.0)], &[Complex64::new(0.0, 0.0)])
            .map_err(|e| e.to_string())?;
        let rho = (d / 2.0).exp().acosh();
        worst_rho = worst_rho.max((rho - r.atanh()).abs() / r.atanh().max(1.0));
    }
    ensure(worst_rho <= 1e-10, format!("distance identity {worst_rho:.3e}"))?;
    Ok(format!("diastasis {worst:.2e}, distance identity {worst_rho:.2e}"))
}

fn kaehler_potential() -> Outcome {
    let specs = [
        MetricSpec::hyperbolic(2),
        MetricSpec::perturbed(2, 1.0, vec![0.3]),
        MetricSpec::perturbed(2, 1.0, vec![-0.2, 0.05]),
    ];
    let mut worst = 0.0f64;
    for spec in &specs {
        let config = BatteryConfig {
            samples: 100,
            entropy: false,
            ..BatteryConfig::default()
        };
        let checks = run_battery(spec, &config).map_err(|e| e.to_string())?;
        let check = checks
            .iter()
            .find(|c| c.name == "diastasis_kahler_potential")
            .ok_or("check missing")?;
        ensure(check.samples == 100, "sample count")?;
        ensure(check.worst <= 1e-5, format!("{}: {:.3e}", spec.name, check.worst))?;
        worst = worst.max(check.worst);
    }
    Ok(format!("worst relative Hessian error {worst:.2e} over 3 specs x 100 samples"))
}

fn lower_bound() -> Outcome {
    let start = Instant::now();
    let opts = EntropyOptions::default();
    let mut sharp = 0;
    for spec in family() {
        let rep = lower_bound_check(&spec, &opts).map_err(|e| e.to_string())?;
        ensure(rep.verdict == Verdict::Holds, format!("{}: {:?}", spec.name, rep.verdict))?;
        if spec.is_hyperbolic_family() {
            ensure(rep.sharp_case == Some(true), format!("{}: margin {:.3e} not sharp", spec.name, rep.margin))?;
            sharp += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed <= Duration::from_secs(300), format!("took {elapsed:?}"))?;
    Ok(format!("holds on {} members, {sharp} sharp, {elapsed:.2?}", family().len()))
}

fn growth_sandwich() -> Outcome {
    let opts = EntropyOptions::default();
    let mut worst = 0.0f64;
    for spec in family() {
        let g = volume_entropy_growth(&spec, &opts.growth).map_err(|e| e.to_string())?;
        let v = volume_entropy_integral_detailed(&spec, &opts).map_err(|e| e.to_string())?;
        let s = g.estimate.value;
        ensure(
            g.liminf - g.tolerance <= s && s <= g.limsup + g.tolerance,
            format!("{}: {s} outside [{}, {}]", spec.name, g.liminf, g.limsup),
        )?;
        worst = worst.max(rel(s, v.estimate.value));
    }
    ensure(worst <= 0.02, format!("growth vs integral {worst:.3e}"))?;
    Ok(format!("sandwich holds; growth vs integral within {worst:.2e}"))
}

fn scaling_law() -> Outcome {
    let opts = EntropyOptions::default();
    for n in [1, 2] {
        let spec = MetricSpec::hyperbolic(n);
        for lambda in [0.25, 4.0] {
            let rep = scaling_law_check(&spec, lambda, &opts, 0.02).map_err(|e| e.to_string())?;
            ensure(
                rep.passed,
                format!(
                    "n={n} lambda={lambda}: {} {} {}",
                    rep.ent_d_ratio, rep.ent_v_ratio, rep.calibration_ratio
                ),
            )?;
        }
        let bcg = bcg_proxy_scan(&spec, &[0.5, 1.0, 2.0], 0.9, &opts, 0.03).map_err(|e| e.to_string())?;
        ensure(bcg.passed, format!("n={n}: spread {:.3e}", bcg.spread))?;
    }
    Ok("entropy and calibration ratios match; proxy functional constant".into())
}

fn basepoint() -> Outcome {
    let spec = MetricSpec::hyperbolic(1);
    let k = polarize_radial(&spec);
    let (a, b) = (Complex64::new(0.0, 0.0), Complex64::new(0.3, 0.0));
    let mut rows = 0;
    for (w1, w2) in [(a, b), (b, a)] {
        for c in [1.5, 2.5] {
            let rep = basepoint_sandwich_check(&spec, &k, w1, w2, c, &[0.9, 0.99, 0.999])
                .map_err(|e| e.to_string())?;
            for row in &rep.rows {
                ensure(
                    row.ratio * row.bound >= 1.0 && row.ratio <= row.bound,
                    format!("c={c} R={}: ratio {} bound {}", row.radius, row.ratio, row.bound),
                )?;
                rows += 1;
            }
        }
    }
    Ok(format!("{rows} ratios inside their bounds"))
}

fn robustness() -> Outcome {
    let dir = std::env::temp_dir().join(format!("diastatic-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let flat = dir.join("flat.json");
    let negative = dir.join("negative.json");
    std::fs::write(&flat, r#"{"name":"flat","dim":1,"alpha":0.0,"poly":[1.0],"scale":1.0}"#)
        .map_err(|e| e.to_string())?;
    std::fs::write(&negative, r#"{"name":"neg","dim":1,"alpha":1.0,"poly":[-5.0],"scale":1.0}"#)
        .map_err(|e| e.to_string())?;
    let run = |args: &[&str]| {
        Command::new(BIN)
            .args(["--no-timestamp", "--quiet", "--out"])
            .arg(dir.join("report.json"))
            .args(args)
            .output()
            .map_err(|e| e.to_string())
    };

    let out = run(&["--spec", flat.to_str().unwrap(), "entropy", "--kind", "diastatic"])?;
    let stderr = String::from_utf8_lossy(&out.stderr);
    ensure(out.status.code() == Some(2) && stderr.contains("IncompleteMetric"), format!("flat: {stderr}"))?;

    let out = run(&["--spec", negative.to_str().unwrap(), "entropy", "--kind", "volume"])?;
    let stderr = String::from_utf8_lossy(&out.stderr);
    let code = out.status.code();
    ensure(
        matches!(code, Some(2) | Some(3)) && stderr.contains("NonPositiveMetric"),
        format!("negative: {code:?} {stderr}"),
    )?;

    let out = run(&["--spec", "hyperbolic:2", "verify"])?;
    ensure(out.status.code() == Some(0), format!("clean verify exited {:?}", out.status.code()))?;
    for m in ["metric-scale", "diastasis-offset", "gradient-scale"] {
        let out = run(&["--spec", "hyperbolic:2", "verify", "--fast", "--mutate", m])?;
        ensure(out.status.code() == Some(1), format!("mutation {m} exited {:?}", out.status.code()))?;
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok("exit codes 2/2, clean verify 0, all three mutations 1".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("hyperbolic entropy table", entropy_table),
        ("critical exponent, both methods", critical_exponent),
        ("closed-form oracle agreement", oracle_agreement),
        ("diastasis is a Kähler potential", kaehler_potential),
        ("diastatic entropy bounds volume entropy", lower_bound),
        ("growth sandwich", growth_sandwich),
        ("scaling law", scaling_law),
        ("base-point independence", basepoint),
        ("robustness and exit codes", robustness),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {} PASS: {name} ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL: {name} ({why})", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
