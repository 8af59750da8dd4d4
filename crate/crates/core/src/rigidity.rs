//! Comparison and scaling checks: `Ent_d ≥ Ent_v`, the behaviour of both
//! entropies and of `𝒳` under `g → λg`, scale invariance of
//! `Ent_d^{2n}·Vol`, and an exploratory scan over perturbed potentials.
//!
//! Volumes of compact quotients are not available on the ball model, so the
//! volume factor is replaced throughout by the coordinate-ball proxy
//! `Vol_g(‖z‖ ≤ r0)`. The proxy scales exactly like a volume (`λⁿ`), which is
//! all the scale-invariance checks use.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::{
    ball_volume, diastatic_entropy_detailed, volume_entropy_integral_detailed, EntropyEstimate,
    EntropyOptions,
};
use crate::error::{Error, Result};
use crate::model::{ensure_valid, MetricSpec, RadialPoint};

/// `g → λg`: the potential, and hence the scale field, is multiplied by `λ`.
pub fn scale_metric(spec: &MetricSpec, lambda: f64) -> MetricSpec {
    assert!(lambda > 0.0, "scale factor must be positive");
    MetricSpec {
        scale: spec.scale * lambda,
        ..spec.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
    /// An upstream computation failed; no comparison was possible.
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub spec_name: String,
    pub ent_d: EntropyEstimate,
    pub ent_v: EntropyEstimate,
    pub margin: f64,
    pub verdict: Verdict,
    pub tolerance_used: f64,
    /// For multiples of the hyperbolic metric: whether `|margin|` is within
    /// the combined errors (the sharp case).
    pub sharp_case: Option<bool>,
}

/// Compare the two entropies of a spec.
pub fn lower_bound_check(spec: &MetricSpec, opts: &EntropyOptions) -> Result<ComparisonReport> {
    ensure_valid(spec, true)?;
    let ent_d = diastatic_entropy_detailed(spec, opts)?.estimate;
    let ent_v = volume_entropy_integral_detailed(spec, opts)?.estimate;
    Ok(compare(spec, ent_d, ent_v))
}

fn compare(spec: &MetricSpec, ent_d: EntropyEstimate, ent_v: EntropyEstimate) -> ComparisonReport {
    let margin = ent_d.value - ent_v.value;
    let tolerance = ent_d.error + ent_v.error;
    let verdict = if margin >= -tolerance {
        Verdict::Holds
    } else {
        Verdict::Violated
    };
    let sharp_case = spec
        .is_hyperbolic_family()
        .then_some(margin.abs() <= tolerance);
    ComparisonReport {
        spec_name: spec.name.clone(),
        ent_d,
        ent_v,
        margin,
        verdict,
        tolerance_used: tolerance,
        sharp_case,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub spec: String,
    pub lambda: f64,
    pub ent_d_ratio: f64,
    pub ent_v_ratio: f64,
    pub calibration_ratio: f64,
    /// `λ^{−1/2}`
    pub expected_entropy_ratio: f64,
    pub entropy_tolerance: f64,
    pub calibration_tolerance: f64,
    pub passed: bool,
}

/// Rerun both entropy pipelines on `λg` and compare ratios with `λ^{∓1/2}`.
pub fn scaling_law_check(
    spec: &MetricSpec,
    lambda: f64,
    opts: &EntropyOptions,
    entropy_tolerance: f64,
) -> Result<ScalingReport> {
    if !(0.1..=10.0).contains(&lambda) {
        return Err(Error::InvalidSpec(format!(
            "scaling factor {lambda} outside [0.1, 10]"
        )));
    }
    ensure_valid(spec, true)?;
    let scaled = scale_metric(spec, lambda);
    let base_d = diastatic_entropy_detailed(spec, opts)?;
    let scaled_d = diastatic_entropy_detailed(&scaled, opts)?;
    let base_v = volume_entropy_integral_detailed(spec, opts)?.estimate;
    let scaled_v = volume_entropy_integral_detailed(&scaled, opts)?.estimate;

    let expected = lambda.powf(-0.5);
    let ent_d_ratio = scaled_d.estimate.value / base_d.estimate.value;
    let ent_v_ratio = scaled_v.value / base_v.value;
    let calibration_ratio = scaled_d.calibration.value / base_d.calibration.value;
    let calibration_tolerance = 0.01;
    let rel = |x: f64, e: f64| (x / e - 1.0).abs();
    let passed = rel(ent_d_ratio, expected) <= entropy_tolerance
        && rel(ent_v_ratio, expected) <= entropy_tolerance
        && rel(calibration_ratio, 1.0 / expected) <= calibration_tolerance;
    Ok(ScalingReport {
        spec: spec.name.clone(),
        lambda,
        ent_d_ratio,
        ent_v_ratio,
        calibration_ratio,
        expected_entropy_ratio: expected,
        entropy_tolerance,
        calibration_tolerance,
        passed,
    })
}

/// Coordinate-ball proxy `Vol_g(‖z‖ ≤ r0)`.
pub fn proxy_volume(spec: &MetricSpec, r0: f64) -> Result<f64> {
    if !(r0 > 0.0 && r0 < 1.0) {
        return Err(Error::InvalidSpec(format!("proxy radius {r0} outside (0, 1)")));
    }
    Ok(ball_volume(spec, &RadialPoint::from_r(r0)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcgRow {
    pub lambda: f64,
    pub ent_d: f64,
    pub proxy_volume: f64,
    pub functional: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcgProxyReport {
    pub spec: String,
    pub r0: f64,
    pub rows: Vec<BcgRow>,
    /// `max F / min F − 1`.
    pub spread: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// `F(λ) = Ent_d(λg)^{2n} · Vol_{λg}(‖z‖ ≤ r0)` for each `λ`.
pub fn bcg_proxy_scan(
    spec: &MetricSpec,
    lambdas: &[f64],
    r0: f64,
    opts: &EntropyOptions,
    tolerance: f64,
) -> Result<BcgProxyReport> {
    ensure_valid(spec, true)?;
    if let Some(bad) = lambdas.iter().find(|l| !(**l > 0.0)) {
        return Err(Error::InvalidSpec(format!("scale factor {bad} is not positive")));
    }
    let two_n = 2 * spec.dim as i32;
    let rows = lambdas
        .par_iter()
        .map(|&lambda| {
            let scaled = scale_metric(spec, lambda);
            let ent_d = diastatic_entropy_detailed(&scaled, opts)?.estimate.value;
            let vol = proxy_volume(&scaled, r0)?;
            Ok(BcgRow {
                lambda,
                ent_d,
                proxy_volume: vol,
                functional: ent_d.powi(two_n) * vol,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max = rows.iter().map(|r| r.functional).fold(f64::NEG_INFINITY, f64::max);
    let min = rows.iter().map(|r| r.functional).fold(f64::INFINITY, f64::min);
    let spread = if rows.is_empty() { 0.0 } else { max / min - 1.0 };
    Ok(BcgProxyReport {
        spec: spec.name.clone(),
        r0,
        rows,
        spread,
        tolerance,
        passed: spread <= tolerance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub param: f64,
    pub ent_d: f64,
    pub ent_d_err: f64,
    pub ent_v: f64,
    pub ent_v_err: f64,
    pub functional: f64,
    pub verdict: Verdict,
    /// Volume-normalizing scale factor applied to the member.
    pub lambda: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanTable {
    pub dim: usize,
    pub coefficient: usize,
    pub r0: f64,
    pub note: String,
    pub rows: Vec<ScanRow>,
}

pub const SCAN_CSV_HEADER: &str = "param,ent_d,ent_d_err,ent_v,ent_v_err,functional,verdict";

impl ScanTable {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{SCAN_CSV_HEADER}\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                r.param,
                r.ent_d,
                r.ent_d_err,
                r.ent_v,
                r.ent_v_err,
                r.functional,
                r.verdict.as_str()
            ));
        }
        out
    }
}

/// Entropies of `−log(1 − ‖z‖²) + a‖z‖^{2k}` for each `a` in `params`, each
/// member rescaled so its proxy volume matches the hyperbolic one.
pub fn minimality_scan(
    params: &[f64],
    dim: usize,
    coefficient: usize,
    r0: f64,
    opts: &EntropyOptions,
) -> Result<ScanTable> {
    if coefficient == 0 {
        return Err(Error::InvalidSpec("poly coefficients are numbered from 1".into()));
    }
    let reference = proxy_volume(&MetricSpec::hyperbolic(dim), r0)?;
    let mut sorted = params.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rows = sorted
        .par_iter()
        .map(|&param| {
            let mut poly = vec![0.0; coefficient];
            poly[coefficient - 1] = param;
            let member = MetricSpec::perturbed(dim, 1.0, poly);
            scan_member(&member, param, reference, r0, opts).unwrap_or_else(|e| ScanRow {
                param,
                ent_d: f64::NAN,
                ent_d_err: f64::NAN,
                ent_v: f64::NAN,
                ent_v_err: f64::NAN,
                functional: f64::NAN,
                verdict: Verdict::Inconclusive,
                lambda: f64::NAN,
                error: Some(e.to_string()),
            })
        })
        .collect();
    Ok(ScanTable {
        dim,
        coefficient,
        r0,
        note: "volume is the coordinate-ball proxy Vol(|z| <= r0); members are not known to \
               admit compact quotients, so the scan is illustrative only"
            .into(),
        rows,
    })
}

fn scan_member(
    member: &MetricSpec,
    param: f64,
    reference: f64,
    r0: f64,
    opts: &EntropyOptions,
) -> Result<ScanRow> {
    ensure_valid(member, true)?;
    let vol = proxy_volume(member, r0)?;
    let lambda = (reference / vol).powf(1.0 / member.dim as f64);
    let normalized = scale_metric(member, lambda);
    let report = lower_bound_check(&normalized, opts)?;
    let vol = proxy_volume(&normalized, r0)?;
    Ok(ScanRow {
        param,
        ent_d: report.ent_d.value,
        ent_d_err: report.ent_d.error,
        ent_v: report.ent_v.value,
        ent_v_err: report.ent_v.error,
        functional: report.ent_d.value.powi(2 * member.dim as i32) * vol,
        verdict: report.verdict,
        lambda,
        error: None,
    })
}
