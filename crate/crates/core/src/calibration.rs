//! Riemannian gradient of the diastasis and the calibration constant
//! `𝒳(g) = sup_{y,z} ‖grad_y D_z‖`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diastasis::PolarizedKernel;
use crate::error::{Error, Result};
use crate::model::{metric_tensor, pairing, MetricSpec, RadialPoint};
use crate::quad::linspace;

/// `‖grad_y D_z‖` with `‖grad f‖² = 4 Σ g^{ij̄} ∂_i f ∂_j̄ f`.
///
/// `∂_{y_i} D_z(y) = φ′(‖y‖²) ȳ_i − K′(y·z̄) z̄_i`, where `K` is the polarized
/// kernel; the conjugate derivative is its complex conjugate since `D` is real.
pub fn grad_norm(
    spec: &MetricSpec,
    kernel: &PolarizedKernel,
    y: &[Complex64],
    z: &[Complex64],
) -> Result<f64> {
    let g = metric_tensor(spec, y)?;
    RadialPoint::from_point(z)?;
    let py = RadialPoint::from_point(y)?;
    let dphi = spec.dphi(&py);
    let kprime = kernel.derivative(pairing(y, z));
    let a: Vec<Complex64> = y
        .iter()
        .zip(z)
        .map(|(yi, zi)| yi.conj() * dphi - kprime * zi.conj())
        .collect();
    // dual norm of u ↦ Σ a_i u_i for the form Σ g_{ij̄} u_i ū_j: Σ_ij a_i inv[j][i] ā_j
    let n = spec.dim;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += g.inverse[(j, i)] * a[i] * a[j].conj();
        }
    }
    Ok((4.0 * acc.re).max(0.0).sqrt())
}

/// Lattice for the supremum search.
///
/// By rotation invariance `z = (s, 0, …)` and
/// `y = (r cos β e^{iθ}, r sin β, 0, …)` cover every pair up to a unitary map;
/// `θ ∈ [0, π]` suffices because the kernel has real coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchGrid {
    pub s_max: f64,
    pub s_count: usize,
    pub r_max: f64,
    pub r_count: usize,
    pub theta_count: usize,
    pub beta_count: usize,
    /// Largest gap `1 − r` of the boundary sequence.
    pub boundary_gap: f64,
    /// Number of halvings of the boundary gap used for extrapolation.
    pub boundary_levels: usize,
    /// Absolute tolerance on the extrapolation residual.
    pub tolerance: f64,
}

impl Default for SearchGrid {
    fn default() -> Self {
        Self {
            s_max: 0.95,
            s_count: 8,
            r_max: 0.99,
            r_count: 16,
            theta_count: 9,
            beta_count: 4,
            boundary_gap: 1e-2,
            boundary_levels: 4,
            tolerance: 1e-6,
        }
    }
}

impl SearchGrid {
    /// Same extent with every lattice direction roughly doubled in density;
    /// the old lattice points are kept.
    pub fn refined(&self) -> Self {
        Self {
            s_count: 2 * self.s_count - 1,
            r_count: 2 * self.r_count - 1,
            theta_count: 2 * self.theta_count - 1,
            beta_count: 2 * self.beta_count - 1,
            ..self.clone()
        }
    }

    fn describe(&self, dim: usize) -> String {
        let beta = if dim >= 2 { self.beta_count } else { 1 };
        format!(
            "s in [0,{}] x{}; r in [0,{}] x{}; theta x{}; beta x{}; boundary gap {:e} /2^k, k<{}",
            self.s_max,
            self.s_count,
            self.r_max,
            self.r_count,
            self.theta_count,
            beta,
            self.boundary_gap,
            self.boundary_levels
        )
    }
}

/// Where the supremum was found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attainment {
    pub y: Vec<Complex64>,
    pub z: Vec<Complex64>,
    /// The supremum is a limit as `‖y‖ → 1` along this direction.
    pub boundary_limit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEstimate {
    pub spec: String,
    pub value: f64,
    pub attained_at: Attainment,
    pub raw_max: f64,
    pub extrapolation_residual: f64,
    pub grid: String,
}

impl CalibrationEstimate {
    /// Error bar used when the constant enters an entropy.
    pub fn error(&self) -> f64 {
        self.extrapolation_residual
    }
}

struct DirectionResult {
    interior_best: (f64, f64),
    limit: f64,
    residual: f64,
    s: f64,
    theta: f64,
    beta: f64,
}

fn slice_points(dim: usize, s: f64, r: f64, theta: f64, beta: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut z = vec![Complex64::new(0.0, 0.0); dim];
    let mut y = vec![Complex64::new(0.0, 0.0); dim];
    z[0] = Complex64::new(s, 0.0);
    if dim >= 2 {
        y[0] = Complex64::from_polar(r * beta.cos(), theta);
        y[1] = Complex64::new(r * beta.sin(), 0.0);
    } else {
        y[0] = Complex64::from_polar(r, theta);
    }
    (y, z)
}

/// Richardson extrapolation to `h → 0` of values at `h, h/2, h/4, …`,
/// assuming an expansion in integer powers of `h`. Returns the limit and
/// the difference between the last two extrapolants.
pub fn richardson(values: &[f64]) -> (f64, f64) {
    let mut table = values.to_vec();
    let mut factor = 1.0;
    let mut previous = *values.last().unwrap_or(&f64::NAN);
    while table.len() > 1 {
        factor *= 2.0;
        previous = *table.last().unwrap();
        table = table
            .windows(2)
            .map(|w| (factor * w[1] - w[0]) / (factor - 1.0))
            .collect();
    }
    let limit = table[0];
    (limit, (limit - previous).abs())
}

/// Estimate `𝒳` on the search lattice, extrapolating to the boundary.
pub fn calibration_constant(
    spec: &MetricSpec,
    kernel: &PolarizedKernel,
    search: &SearchGrid,
) -> Result<CalibrationEstimate> {
    spec.require_complete()?;
    let dim = spec.dim;
    let s_values = linspace(0.0, search.s_max, search.s_count);
    let thetas = linspace(0.0, PI, search.theta_count);
    let betas = if dim >= 2 {
        linspace(0.0, FRAC_PI_2, search.beta_count)
    } else {
        vec![0.0]
    };
    let radii = linspace(0.0, search.r_max, search.r_count);
    let gaps: Vec<f64> = (0..search.boundary_levels)
        .map(|k| search.boundary_gap / 2f64.powi(k as i32))
        .collect();

    let mut directions = Vec::new();
    for &s in &s_values {
        for &theta in &thetas {
            for &beta in &betas {
                directions.push((s, theta, beta));
            }
        }
    }

    let results: Vec<Result<DirectionResult>> = directions
        .par_iter()
        .map(|&(s, theta, beta)| {
            let mut best = (f64::NEG_INFINITY, 0.0);
            for &r in &radii {
                let (y, z) = slice_points(dim, s, r, theta, beta);
                let v = grad_norm(spec, kernel, &y, &z)?;
                if v > best.0 + 1e-12 {
                    best = (v, r);
                }
            }
            let mut seq = Vec::with_capacity(gaps.len());
            for &h in &gaps {
                let (y, z) = slice_points(dim, s, 1.0 - h, theta, beta);
                seq.push(grad_norm(spec, kernel, &y, &z)?);
            }
            let (limit, residual) = richardson(&seq);
            Ok(DirectionResult {
                interior_best: best,
                limit,
                residual,
                s,
                theta,
                beta,
            })
        })
        .collect();

    let mut raw: Option<(f64, f64, &DirectionResult)> = None;
    let mut boundary: Option<&DirectionResult> = None;
    let results: Vec<DirectionResult> = results.into_iter().collect::<Result<_>>()?;
    for d in &results {
        let (v, r) = d.interior_best;
        let better = match raw {
            None => true,
            Some((bv, br, _)) => v > bv + 1e-12 || ((v - bv).abs() <= 1e-12 && r < br),
        };
        if better {
            raw = Some((v, r, d));
        }
        if boundary.is_none_or(|b| d.limit > b.limit + 1e-12) {
            boundary = Some(d);
        }
    }
    let (raw_max, raw_r, raw_dir) = raw.expect("search lattice is empty");
    let boundary = boundary.expect("search lattice is empty");

    let (value, residual, attained_at) = if boundary.limit > raw_max + 1e-12 {
        let (y, z) = slice_points(dim, boundary.s, 1.0, boundary.theta, boundary.beta);
        (
            boundary.limit,
            boundary.residual,
            Attainment {
                y,
                z,
                boundary_limit: true,
            },
        )
    } else {
        let (y, z) = slice_points(dim, raw_dir.s, raw_r, raw_dir.theta, raw_dir.beta);
        (
            raw_max,
            0.0,
            Attainment {
                y,
                z,
                boundary_limit: false,
            },
        )
    };
    if !(residual <= search.tolerance * value.max(1.0)) {
        return Err(Error::Unconverged {
            residual,
            tolerance: search.tolerance,
        });
    }
    Ok(CalibrationEstimate {
        spec: spec.name.clone(),
        value,
        attained_at,
        raw_max,
        extrapolation_residual: residual,
        grid: search.describe(dim),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diastasis::polarize_radial;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn gradient_examples() {
        let h1 = MetricSpec::hyperbolic(1);
        let k1 = polarize_radial(&h1);
        let v = grad_norm(&h1, &k1, &[c(0.5)], &[c(0.0)]).unwrap();
        assert!((v - 1.0).abs() < 1e-14);

        let h2 = MetricSpec::hyperbolic(2);
        let k2 = polarize_radial(&h2);
        let v = grad_norm(&h2, &k2, &[c(0.7), c(0.0)], &[c(0.0), c(0.0)]).unwrap();
        assert!((v - 1.4).abs() < 1e-14);

        let spec = MetricSpec::perturbed(2, 1.0, vec![0.3]);
        let k = polarize_radial(&spec);
        let y = [Complex64::new(0.2, 0.4), c(-0.3)];
        assert!(grad_norm(&spec, &k, &y, &y).unwrap() < 1e-14);
    }

    #[test]
    fn richardson_removes_polynomial_terms() {
        let f = |h: f64| 2.0 - 3.0 * h + 0.5 * h * h - h.powi(3);
        let vals: Vec<f64> = (0..4).map(|k| f(0.01 / 2f64.powi(k))).collect();
        let (limit, residual) = richardson(&vals);
        assert!((limit - 2.0).abs() < 1e-14);
        assert!(residual < 1e-7);
    }

    #[test]
    fn hyperbolic_constant_is_two_in_dimension_one() {
        let spec = MetricSpec::hyperbolic(1);
        let est = calibration_constant(&spec, &polarize_radial(&spec), &SearchGrid::default()).unwrap();
        assert!((est.value - 2.0).abs() < 0.02, "{est:?}");
        assert!(est.attained_at.boundary_limit);
        assert!(est.value >= est.raw_max);
    }

    #[test]
    fn incomplete_spec_is_rejected() {
        let spec = MetricSpec::perturbed(1, 0.0, vec![1.0]);
        let err = calibration_constant(&spec, &polarize_radial(&spec), &SearchGrid::default())
            .unwrap_err();
        assert_eq!(err.name(), "IncompleteMetric");
    }
}
