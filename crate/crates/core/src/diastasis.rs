//! Calabi's diastasis for radial potentials.
//!
//! A radial potential `Φ(z) = φ(‖z‖²)` with a real power series polarizes by
//! replacing `‖z‖²` with the pairing `p = z·w̄`, so the continuation
//! `Φ̂(z, w̄)` is a single-variable function `K(p)` holomorphic on `|p| < 1`.
//! The diastasis is then `D(z, w) = K(‖z‖²) + K(‖w‖²) − 2·Re K(z·w̄)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{check_domain, norm_sq, pairing, series_truncation, MetricSpec, RadialPoint};
use crate::quad;

/// Radius up to which the kernel is evaluated from its truncated power series.
pub const DEFAULT_SERIES_RADIUS: f64 = 0.95;

/// The continuation `Φ̂(z, w̄) = K(z·w̄)`.
#[derive(Debug, Clone)]
pub struct PolarizedKernel {
    pub spec: MetricSpec,
    /// Coefficient of `−log(1 − p)`.
    pub log_coeff: f64,
    /// `λ a_k`, the polynomial part.
    pub coeffs: Vec<f64>,
    /// Number of terms kept from the expansion of the logarithm.
    pub truncation: usize,
    /// Full series `λ(α/k + a_k)`, `k = 1..=truncation`.
    series: Vec<f64>,
    /// `|p|` threshold below which the series is used.
    series_bound: f64,
}

/// Replace `‖z‖²` by `z·w̄` term by term.
pub fn polarize_radial(spec: &MetricSpec) -> PolarizedKernel {
    PolarizedKernel::with_series_radius(spec, DEFAULT_SERIES_RADIUS)
}

impl PolarizedKernel {
    /// Kernel whose series branch is valid for points of norm up to `radius`.
    pub fn with_series_radius(spec: &MetricSpec, radius: f64) -> Self {
        let truncation = series_truncation(radius).max(spec.poly.len());
        let series = (1..=truncation).map(|k| spec.series_coeff(k)).collect();
        Self {
            spec: spec.clone(),
            log_coeff: spec.log_coeff(),
            coeffs: spec.poly.iter().map(|a| spec.scale * a).collect(),
            truncation,
            series,
            series_bound: radius * radius,
        }
    }

    /// `K(p)`: truncated series inside the series radius, closed form outside.
    pub fn value(&self, p: Complex64) -> Complex64 {
        if p.norm() <= self.series_bound {
            self.value_series(p)
        } else {
            self.value_closed(p)
        }
    }

    /// `Σ_{k ≤ K} c_k p^k` by Horner's rule.
    pub fn value_series(&self, p: Complex64) -> Complex64 {
        self.series
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| (acc + c) * p)
    }

    /// `−L·log(1 − p) + Σ λa_k p^k` on the principal branch.
    pub fn value_closed(&self, p: Complex64) -> Complex64 {
        let poly = self
            .coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| (acc + c) * p);
        let log_part = if self.log_coeff != 0.0 {
            -(Complex64::new(1.0, 0.0) - p).ln() * self.log_coeff
        } else {
            Complex64::new(0.0, 0.0)
        };
        log_part + poly
    }

    /// `K′(p) = L/(1 − p) + Σ k λa_k p^{k−1}`, the summed derivative series.
    pub fn derivative(&self, p: Complex64) -> Complex64 {
        let poly = self
            .coeffs
            .iter()
            .enumerate()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, (i, c)| {
                acc * p + c * (i + 1) as f64
            });
        let log_part = if self.log_coeff != 0.0 {
            self.log_coeff / (Complex64::new(1.0, 0.0) - p)
        } else {
            Complex64::new(0.0, 0.0)
        };
        log_part + poly
    }

    /// `Φ̂(z, w̄)`.
    pub fn eval_pair(&self, z: &[Complex64], w: &[Complex64]) -> Complex64 {
        self.value(pairing(z, w))
    }

    /// The radial profile `D_0(r) = φ(r²)`, accurate up to the boundary.
    pub fn centered_profile(&self, p: &RadialPoint) -> f64 {
        self.spec.potential_radial(p)
    }
}

/// `D(z, w)`.
pub fn diastasis_eval(kernel: &PolarizedKernel, z: &[Complex64], w: &[Complex64]) -> Result<f64> {
    let dim = kernel.spec.dim;
    if z.len() != dim || w.len() != dim {
        return Err(Error::InvalidSpec(format!(
            "points must have {dim} components"
        )));
    }
    let tz = norm_sq(z);
    let tw = norm_sq(w);
    check_domain(tz)?;
    check_domain(tw)?;
    let p = pairing(z, w);
    let cross = kernel.value(p);
    debug_assert!(
        (cross + kernel.value(p.conj())).im.abs() < 1e-12 * (1.0 + cross.norm()),
        "cross terms are not conjugate"
    );
    let diag = kernel.value(Complex64::new(tz, 0.0)).re + kernel.value(Complex64::new(tw, 0.0)).re;
    Ok(diag - 2.0 * cross.re)
}

/// Closed-form hyperbolic diastasis and geodesic distance (curvature −4).
///
/// `D = −log[(1−‖z‖²)(1−‖w‖²)/|1 − z·w̄|²]` is evaluated as
/// `log1p(N/((1−‖z‖²)(1−‖w‖²)))` with
/// `N = |1 − z·w̄|² − (1−‖z‖²)(1−‖w‖²) = ‖z−w‖² − Σ_{i<j}|z_i w_j − z_j w_i|²`,
/// which keeps full relative accuracy for nearby points. The distance is
/// `arccosh(e^{D/2}) = asinh(sqrt(e^D − 1))`.
pub fn hyperbolic_closed_forms(z: &[Complex64], w: &[Complex64]) -> Result<(f64, f64)> {
    if z.len() != w.len() {
        return Err(Error::InvalidSpec("points differ in dimension".into()));
    }
    let tz = norm_sq(z);
    let tw = norm_sq(w);
    check_domain(tz)?;
    check_domain(tw)?;
    let diff: f64 = z.iter().zip(w).map(|(a, b)| (a - b).norm_sqr()).sum();
    let mut wedge = 0.0;
    for i in 0..z.len() {
        for j in (i + 1)..z.len() {
            wedge += (z[i] * w[j] - z[j] * w[i]).norm_sqr();
        }
    }
    let ratio = ((diff - wedge) / ((1.0 - tz) * (1.0 - tw))).max(0.0);
    let diastasis = ratio.ln_1p();
    let distance = ratio.sqrt().asinh();
    Ok((diastasis, distance))
}

/// Distance `ρ(0, r)` along a radius, for any spec.
///
/// The radial length element is `sqrt(G)`, `G = φ′ + tφ″ = L/(1−t)² + P(t)`
/// with `L = λα` and `P` the bounded polynomial part, so
/// `ρ = sqrt(L)·artanh(r) + ∫_0^r P/(sqrt(G) + sqrt(L)/(1−s²)) ds`; the
/// remainder integrand is bounded up to the boundary.
pub fn radial_distance(spec: &MetricSpec, p: &RadialPoint) -> Result<f64> {
    let l = spec.log_coeff();
    let sqrt_l = l.sqrt();
    // artanh(r) = ½ log((1 + r)/(1 − r))
    let main = if l > 0.0 {
        sqrt_l * 0.5 * ((2.0 - p.delta).ln() - p.delta.ln())
    } else {
        0.0
    };
    if spec.is_hyperbolic_family() || p.r == 0.0 {
        return Ok(main);
    }
    let integrand = |s: f64| {
        let q = RadialPoint::from_r(s);
        let tail = spec.radial_tail(q.t);
        let g = spec.radial_eigenvalue(&q);
        tail / (g.sqrt() + sqrt_l / q.gap)
    };
    let rest = quad::adaptive(&integrand, 0.0, p.r, 1e-15)?;
    Ok(main + rest)
}

/// Geodesic distance between two points: exact for multiples of the
/// hyperbolic metric, otherwise the upper bound `ρ(w1, 0) + ρ(0, w2)`.
pub fn distance_bound(spec: &MetricSpec, w1: &[Complex64], w2: &[Complex64]) -> Result<f64> {
    if spec.is_hyperbolic_family() {
        let (_, rho) = hyperbolic_closed_forms(w1, w2)?;
        return Ok(spec.log_coeff().sqrt() * rho);
    }
    let a = radial_distance(spec, &RadialPoint::from_point(w1)?)?;
    let b = radial_distance(spec, &RadialPoint::from_point(w2)?)?;
    Ok(a + b)
}
