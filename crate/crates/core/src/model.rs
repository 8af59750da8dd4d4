//! Rotation-invariant Kähler potentials on the unit ball of ℂⁿ.
//!
//! A [`MetricSpec`] describes the potential
//!
//! ```text
//! Φ(z) = λ · ( −α·log(1 − ‖z‖²) + Σ_k a_k ‖z‖^{2k} )
//! ```
//!
//! as a function `φ(t)` of `t = ‖z‖²`. The metric is `g_{ij̄} = ∂_i∂_j̄Φ =
//! φ′(t)δ_ij + φ″(t) z̄_i z_j`, with eigenvalue `φ′` on the complex directions
//! orthogonal to `z` and `φ′ + tφ″` along `z`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Declarative description of a radial Kähler potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub name: String,
    pub dim: usize,
    pub alpha: f64,
    pub poly: Vec<f64>,
    pub scale: f64,
}

impl MetricSpec {
    /// The complex hyperbolic ball of holomorphic sectional curvature −4.
    pub fn hyperbolic(dim: usize) -> Self {
        Self {
            name: format!("hyperbolic:{dim}"),
            dim,
            alpha: 1.0,
            poly: Vec::new(),
            scale: 1.0,
        }
    }

    /// Hyperbolic log term plus a polynomial tail.
    pub fn perturbed(dim: usize, alpha: f64, poly: Vec<f64>) -> Self {
        let tail = poly
            .iter()
            .map(|a| format!("{a}"))
            .collect::<Vec<_>>()
            .join(",");
        Self {
            name: format!("alpha={alpha};poly=[{tail}];n={dim}"),
            dim,
            alpha,
            poly,
            scale: 1.0,
        }
    }

    /// Parse and check a JSON spec document.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: MetricSpec =
            serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        spec.check_well_formed()?;
        Ok(spec)
    }

    /// Field-level checks: `dim ≥ 1`, `scale > 0`, `alpha ≥ 0`, all finite.
    pub fn check_well_formed(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidSpec("dim must be at least 1".into()));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "scale must be positive and finite, got {}",
                self.scale
            )));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidSpec(format!(
                "alpha must be nonnegative and finite, got {}",
                self.alpha
            )));
        }
        if let Some(bad) = self.poly.iter().find(|a| !a.is_finite()) {
            return Err(Error::InvalidSpec(format!("non-finite poly coefficient {bad}")));
        }
        Ok(())
    }

    /// Entropy operations need the logarithmic boundary blow-up.
    pub fn require_complete(&self) -> Result<()> {
        if self.alpha > 0.0 {
            Ok(())
        } else {
            Err(Error::IncompleteMetric {
                spec: self.name.clone(),
            })
        }
    }

    /// Coefficient of `−log(1 − t)` in the full potential, `λα`.
    pub fn log_coeff(&self) -> f64 {
        self.scale * self.alpha
    }

    /// Coefficient of `t^k` in the power series of the full potential.
    pub fn series_coeff(&self, k: usize) -> f64 {
        assert!(k >= 1);
        let a = self.poly.get(k - 1).copied().unwrap_or(0.0);
        self.scale * (self.alpha / k as f64 + a)
    }

    /// True when the polynomial tail vanishes, i.e. the metric is a constant
    /// multiple of the hyperbolic one.
    pub fn is_hyperbolic_family(&self) -> bool {
        self.poly.iter().all(|a| *a == 0.0)
    }

    /// `φ(t)` at a radial point.
    pub fn potential_radial(&self, p: &RadialPoint) -> f64 {
        let poly = eval_poly(&self.poly, p.t, |_| 1.0, 1);
        self.scale * (-self.alpha * p.gap.ln() + poly)
    }

    /// `φ′(t)`.
    pub fn dphi(&self, p: &RadialPoint) -> f64 {
        let poly = eval_poly(&self.poly, p.t, |k| k as f64, 0);
        self.scale * (self.alpha / p.gap + poly)
    }

    /// `φ″(t)`.
    pub fn ddphi(&self, p: &RadialPoint) -> f64 {
        let poly = if self.poly.len() >= 2 {
            // Σ k(k−1) a_k t^{k−2}
            self.poly
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (i, a)| {
                    let k = (i + 1) as f64;
                    acc * p.t + k * (k - 1.0) * a
                })
        } else {
            0.0
        };
        self.scale * (self.alpha / (p.gap * p.gap) + poly)
    }

    /// Eigenvalue of the metric along the radial complex direction,
    /// `φ′ + tφ″ = λ(α/(1−t)² + Σ k² a_k t^{k−1})`.
    pub fn radial_eigenvalue(&self, p: &RadialPoint) -> f64 {
        self.scale * self.alpha / (p.gap * p.gap) + self.radial_tail(p.t)
    }

    /// Bounded part `λ Σ k² a_k t^{k−1}` of the radial eigenvalue.
    pub fn radial_tail(&self, t: f64) -> f64 {
        self.scale * eval_poly(&self.poly, t, |k| (k * k) as f64, 0)
    }

    /// `log det g` at a radial point.
    pub fn log_det(&self, p: &RadialPoint) -> f64 {
        let n = self.dim as f64;
        (n - 1.0) * self.dphi(p).ln() + self.radial_eigenvalue(p).ln()
    }

    /// `log(det g · r^{2n−1})`, the log of the radial volume density
    /// (without the sphere-area constant).
    pub fn log_radial_density(&self, p: &RadialPoint) -> f64 {
        let n = self.dim as f64;
        self.log_det(p) + (2.0 * n - 1.0) * p.r.ln()
    }

    /// `Φ(z)` at a point of the ball.
    pub fn potential(&self, z: &[Complex64]) -> Result<f64> {
        let p = RadialPoint::from_point(z)?;
        Ok(self.potential_radial(&p))
    }

    /// Smallest eigenvalue of the metric at radius `r`.
    pub fn min_eigenvalue(&self, p: &RadialPoint) -> f64 {
        let radial = self.radial_eigenvalue(p);
        if self.dim >= 2 {
            radial.min(self.dphi(p))
        } else {
            radial
        }
    }
}

/// `Σ_k w(k) a_k t^{k − shift}` by Horner's rule, for `k ≥ shift`.
fn eval_poly(poly: &[f64], t: f64, weight: impl Fn(usize) -> f64, shift: usize) -> f64 {
    // Σ_{k=1}^{K} w(k) a_k t^{k-1}, then multiply by t if shift == 1
    let base = poly
        .iter()
        .enumerate()
        .rev()
        .fold(0.0, |acc, (i, a)| acc * t + weight(i + 1) * a);
    if shift == 1 {
        base * t
    } else {
        base
    }
}

/// A radius together with its boundary gaps, kept separately so that
/// `1 − r²` stays accurate as `r → 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialPoint {
    pub r: f64,
    /// `1 − r`
    pub delta: f64,
    /// `r²`
    pub t: f64,
    /// `1 − r²`
    pub gap: f64,
}

impl RadialPoint {
    pub fn from_r(r: f64) -> Self {
        let delta = 1.0 - r;
        Self {
            r,
            delta,
            t: r * r,
            gap: delta * (1.0 + r),
        }
    }

    /// Build from the gap `1 − r`; exact for tiny gaps.
    pub fn from_delta(delta: f64) -> Self {
        let r = 1.0 - delta;
        Self {
            r,
            delta,
            t: r * r,
            gap: delta * (2.0 - delta),
        }
    }

    pub fn from_point(z: &[Complex64]) -> Result<Self> {
        let t = norm_sq(z);
        check_domain(t)?;
        let r = t.sqrt();
        Ok(Self {
            r,
            delta: 1.0 - r,
            t,
            gap: 1.0 - t,
        })
    }
}

/// `‖z‖²`.
pub fn norm_sq(z: &[Complex64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum()
}

/// The Hermitian pairing `z·w̄ = Σ z_i w̄_i`.
pub fn pairing(z: &[Complex64], w: &[Complex64]) -> Complex64 {
    z.iter().zip(w).map(|(a, b)| a * b.conj()).sum()
}

pub(crate) fn check_domain(t: f64) -> Result<()> {
    if t.is_finite() && t < 1.0 - f64::EPSILON {
        Ok(())
    } else {
        Err(Error::DomainError { norm: t.sqrt() })
    }
}

/// `g_{ij̄}(z)` together with its determinant and inverse.
#[derive(Debug, Clone)]
pub struct HermitianMetric {
    pub point: Vec<Complex64>,
    pub matrix: DMatrix<Complex64>,
    pub det: f64,
    pub inverse: DMatrix<Complex64>,
}

/// Metric tensor at `z` from the radial derivatives of the potential.
pub fn metric_tensor(spec: &MetricSpec, z: &[Complex64]) -> Result<HermitianMetric> {
    if z.len() != spec.dim {
        return Err(Error::InvalidSpec(format!(
            "point has {} components, spec `{}` has dim {}",
            z.len(),
            spec.name,
            spec.dim
        )));
    }
    let p = RadialPoint::from_point(z)?;
    let n = spec.dim;
    let a = spec.dphi(&p);
    let b = spec.ddphi(&p);
    let radial = spec.radial_eigenvalue(&p);
    let matrix = DMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { a } else { 0.0 };
        Complex64::new(diag, 0.0) + z[i].conj() * z[j] * b
    });
    // Sherman-Morrison: (aI + b v v*)^{-1} = (I − b/(a + b t) v v*)/a with v = z̄
    let shrink = b / radial;
    let inverse = DMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { 1.0 } else { 0.0 };
        (Complex64::new(diag, 0.0) - z[i].conj() * z[j] * shrink) / a
    });
    let det = a.powi(n as i32 - 1) * radial;
    Ok(HermitianMetric {
        point: z.to_vec(),
        matrix,
        det,
        inverse,
    })
}

/// Density of the Riemannian volume form relative to Lebesgue measure.
pub fn volume_density(spec: &MetricSpec, z: &[Complex64]) -> Result<f64> {
    metric_tensor(spec, z).map(|g| g.det)
}

/// Smallest `K` with `r^{2K}/K < 1e−14`, capped at [`MAX_TRUNCATION`].
pub fn series_truncation(r_max: f64) -> usize {
    let q = r_max * r_max;
    let mut pow = 1.0;
    for k in 1..=MAX_TRUNCATION {
        pow *= q;
        if pow / (k as f64) < 1e-14 {
            return k;
        }
    }
    MAX_TRUNCATION
}

pub const MAX_TRUNCATION: usize = 1 << 15;

/// Bound on `Σ_{k>K} λα t^k / k` at `t = r²`.
pub fn series_tail_bound(spec: &MetricSpec, r: f64, truncation: usize) -> f64 {
    let q = r * r;
    let k1 = (truncation + 1) as f64;
    spec.log_coeff() * q.powf(k1) / (k1 * (1.0 - q))
}

/// Default validation radii: 0.01, 0.02, …, 0.99.
pub fn default_grid() -> Vec<f64> {
    (1..=99).map(|i| i as f64 / 100.0).collect()
}

/// Outcome of [`validate_spec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub passed: bool,
    pub first_failing_radius: Option<f64>,
    pub failure: Option<Error>,
    pub truncation: usize,
    pub tail_bound: f64,
    pub min_eigenvalue: f64,
    /// `alpha > 0`.
    pub complete: bool,
}

impl ValidationReport {
    /// Turn the report into an error, also rejecting incomplete metrics when
    /// an entropy computation is about to run.
    pub fn check(&self, spec: &MetricSpec, entropy_requested: bool) -> Result<()> {
        if let Some(err) = &self.failure {
            return Err(err.clone());
        }
        if entropy_requested && !self.complete {
            return Err(Error::IncompleteMetric {
                spec: spec.name.clone(),
            });
        }
        Ok(())
    }
}

/// Check positivity of the metric on a radius grid and the series tail at the
/// largest radius.
pub fn validate_spec(spec: &MetricSpec, grid: &[f64]) -> Result<ValidationReport> {
    spec.check_well_formed()?;
    if let Some(bad) = grid.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
        return Err(Error::InvalidSpec(format!(
            "validation radius {bad} is outside (0, 1)"
        )));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);

    let mut min_eig = f64::INFINITY;
    let mut first_fail = None;
    for &r in &sorted {
        let eig = spec.min_eigenvalue(&RadialPoint::from_r(r));
        min_eig = min_eig.min(eig);
        if first_fail.is_none() && !(eig > 0.0 && eig.is_finite()) {
            first_fail = Some(r);
        }
    }

    let r_max = sorted.last().copied().unwrap_or(0.0);
    let truncation = series_truncation(r_max);
    let tail_bound = series_tail_bound(spec, r_max, truncation);

    let failure = if let Some(radius) = first_fail {
        Some(Error::NonPositiveMetric { radius })
    } else if tail_bound >= 1e-12 {
        Some(Error::TailTooLarge {
            radius: r_max,
            bound: tail_bound,
        })
    } else {
        None
    };
    Ok(ValidationReport {
        passed: failure.is_none(),
        first_failing_radius: first_fail,
        failure,
        truncation,
        tail_bound,
        min_eigenvalue: min_eig,
        complete: spec.alpha > 0.0,
    })
}

/// Validate on the default grid and fail on any problem.
pub fn ensure_valid(spec: &MetricSpec, entropy_requested: bool) -> Result<()> {
    validate_spec(spec, &default_grid())?.check(spec, entropy_requested)
}
