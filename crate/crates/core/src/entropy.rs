//! Critical exponents of boundary integrals, and the diastatic and volume
//! entropies built from them.
//!
//! With base point 0 both entropy integrals reduce, by rotation invariance,
//! to one-dimensional radial integrals
//!
//! ```text
//! I(c) = σ_{2n−1} ∫_0^1 det g(r) r^{2n−1} e^{−c·profile(r)} dr,
//! ```
//!
//! where the profile is `D_0(r)` for the diastatic entropy and `ρ(0, r)` for
//! the volume entropy. Near `r = 1` the density behaves like
//! `(1 − r²)^{σ_h}` and the profile like `σ_D·u` with `u = −log(1 − r²)`, so
//! the integral converges iff `σ_h + c σ_D > −1`. The critical exponent is
//! estimated twice: from a regression of both quantities against `u`, and by
//! bisection on the observed convergence of nested cutoff integrals.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calibration::{calibration_constant, CalibrationEstimate, SearchGrid};
use crate::diastasis::{diastasis_eval, distance_bound, radial_distance, PolarizedKernel};
use crate::error::{Error, Result};
use crate::model::{volume_density, MetricSpec, RadialPoint};
use crate::quad::{self, compensated_sum, logspace, GaussLegendre, NeumaierSum};

/// Which improper integral is analysed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Diastatic,
    Volume,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Diastatic => write!(f, "diastatic"),
            Mode::Volume => write!(f, "volume"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    DiastaticExponent,
    DiastaticEntropy,
    VolumeEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    AsymptoticFit,
    CutoffBisection,
    GrowthFit,
}

/// A computed quantity with its error bar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    #[serde(rename = "spec")]
    pub spec_name: String,
    pub quantity: Quantity,
    pub value: f64,
    pub error: f64,
    pub method: Method,
}

impl EntropyEstimate {
    /// Whether two estimates of the same quantity agree within their errors.
    pub fn agrees_with(&self, other: &EntropyEstimate) -> bool {
        (self.value - other.value).abs() <= self.error + other.error
    }
}

/// The radial profile whose exponential weights the volume form.
pub fn profile(spec: &MetricSpec, kernel: &PolarizedKernel, mode: Mode, p: &RadialPoint) -> Result<f64> {
    match mode {
        Mode::Diastatic => Ok(kernel.centered_profile(p)),
        Mode::Volume => radial_distance(spec, p),
    }
}

/// Area of the unit sphere `S^{2n−1} ⊂ ℝ^{2n}`, `2π^n/Γ(n)`.
pub fn sphere_area(n: usize) -> f64 {
    let gamma_n: f64 = (1..n).map(|k| k as f64).product();
    2.0 * std::f64::consts::PI.powi(n as i32) / gamma_n
}

// ---------------------------------------------------------------------------
// Regression
// ---------------------------------------------------------------------------

/// Ordinary least squares `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub max_residual: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 3, "need at least three samples");
    let n = x.len() as f64;
    let mx = compensated_sum(x.iter().copied()) / n;
    let my = compensated_sum(y.iter().copied()) / n;
    let sxx = compensated_sum(x.iter().map(|a| (a - mx) * (a - mx)));
    let sxy = compensated_sum(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - intercept - slope * a).collect();
    let sse = compensated_sum(residuals.iter().map(|r| r * r));
    let slope_stderr = (sse / (n - 2.0) / sxx).sqrt();
    let max_residual = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    LinearFit {
        slope,
        intercept,
        slope_stderr,
        max_residual,
    }
}

/// Slope with an error bar combining the OLS standard error and the
/// drift between the full window and its deeper half.
fn slope_with_drift(x: &[f64], y: &[f64]) -> (LinearFit, f64) {
    let full = linear_fit(x, y);
    let half = x.len() / 2;
    let deep = linear_fit(&x[half..], &y[half..]);
    (full, full.slope_stderr + (full.slope - deep.slope).abs())
}

// ---------------------------------------------------------------------------
// Asymptotic fit
// ---------------------------------------------------------------------------

/// Boundary window for the regression, in `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub r_lo: f64,
    pub r_hi: f64,
    pub samples: usize,
    /// Largest accepted regression residual.
    pub residual_tolerance: f64,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self {
            r_lo: 0.99,
            r_hi: 1.0 - 1e-9,
            samples: 64,
            residual_tolerance: 0.05,
        }
    }
}

/// One regression sample, also emitted as a CSV diagnostic row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSample {
    pub r: f64,
    pub u: f64,
    pub log_density: f64,
    pub profile: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub spec: String,
    pub mode: Mode,
    /// Exponent `σ_h` of `(1 − r²)` in `det g · r^{2n−1}`.
    pub slope_density: f64,
    pub slope_density_err: f64,
    /// Coefficient `σ_D` of `u` in the profile.
    pub slope_decay: f64,
    pub slope_decay_err: f64,
    pub intercept_density: f64,
    pub intercept_decay: f64,
    pub window: [f64; 2],
    pub residual: f64,
    pub samples: usize,
    pub diagnostics: Vec<FitSample>,
}

impl ExponentFit {
    /// Diagnostic rows as CSV with header `r,u,log_density,profile`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,u,log_density,profile\n");
        for s in &self.diagnostics {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                s.r, s.u, s.log_density, s.profile
            ));
        }
        out
    }
}

/// Regress `log(det g · r^{2n−1})` and the profile against `u = −log(1 − r²)`.
pub fn asymptotic_exponent_fit(
    spec: &MetricSpec,
    kernel: &PolarizedKernel,
    mode: Mode,
    window: &FitWindow,
) -> Result<ExponentFit> {
    spec.require_complete()?;
    if !(window.r_lo >= 0.9 && window.r_hi > window.r_lo && window.r_hi < 1.0) {
        return Err(Error::InvalidSpec(format!(
            "fit window [{}, {}] must satisfy 0.9 <= r_lo < r_hi < 1",
            window.r_lo, window.r_hi
        )));
    }
    if window.samples < 16 {
        return Err(Error::InvalidSpec("fit needs at least 16 samples".into()));
    }
    let gaps = logspace(1.0 - window.r_lo, 1.0 - window.r_hi, window.samples);
    let mut diagnostics = Vec::with_capacity(gaps.len());
    for d in gaps {
        let p = RadialPoint::from_delta(d);
        diagnostics.push(FitSample {
            r: p.r,
            u: -p.gap.ln(),
            log_density: spec.log_radial_density(&p),
            profile: profile(spec, kernel, mode, &p)?,
        });
    }
    let u: Vec<f64> = diagnostics.iter().map(|s| s.u).collect();
    let dens: Vec<f64> = diagnostics.iter().map(|s| s.log_density).collect();
    let prof: Vec<f64> = diagnostics.iter().map(|s| s.profile).collect();
    if dens.iter().chain(&prof).any(|v| !v.is_finite()) {
        return Err(Error::FitRejected {
            reason: "non-finite samples in the fit window".into(),
        });
    }
    let (density_fit, density_err) = slope_with_drift(&u, &dens);
    let (decay_fit, decay_err) = slope_with_drift(&u, &prof);
    let residual = density_fit.max_residual.max(decay_fit.max_residual);
    if residual > window.residual_tolerance {
        return Err(Error::FitRejected {
            reason: format!(
                "regression residual {residual:.3e} exceeds {:.3e}",
                window.residual_tolerance
            ),
        });
    }
    Ok(ExponentFit {
        spec: spec.name.clone(),
        mode,
        slope_density: -density_fit.slope,
        slope_density_err: density_err,
        slope_decay: decay_fit.slope,
        slope_decay_err: decay_err,
        intercept_density: density_fit.intercept,
        intercept_decay: decay_fit.intercept,
        window: [window.r_lo, window.r_hi],
        residual,
        samples: window.samples,
        diagnostics,
    })
}

/// `c* = (−1 − σ_h)/σ_D`.
pub fn critical_exponent(fit: &ExponentFit) -> Result<EntropyEstimate> {
    if !(fit.slope_decay > 0.0) {
        return Err(Error::DegenerateDecay {
            slope: fit.slope_decay,
        });
    }
    let value = (-1.0 - fit.slope_density) / fit.slope_decay;
    let error =
        (fit.slope_density_err + value.abs() * fit.slope_decay_err) / fit.slope_decay;
    Ok(EntropyEstimate {
        spec_name: fit.spec.clone(),
        quantity: match fit.mode {
            Mode::Diastatic => Quantity::DiastaticExponent,
            Mode::Volume => Quantity::VolumeEntropy,
        },
        value,
        error,
        method: Method::AsymptoticFit,
    })
}

// ---------------------------------------------------------------------------
// Cutoff integrals
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffConfig {
    /// First dyadic cutoff `R = 1 − 2^{−j0}`.
    pub j0: usize,
    /// Deepest cutoff level.
    pub j_max: usize,
    /// Gauss-Legendre panels per dyadic shell.
    pub panels_per_shell: usize,
    /// A tail ratio below this classifies the integral as convergent.
    pub ratio_threshold: f64,
    /// Bisection stops once the bracket is narrower than this.
    pub bracket_tol: f64,
}

impl Default for CutoffConfig {
    fn default() -> Self {
        Self {
            j0: 1,
            j_max: 40,
            panels_per_shell: 1,
            ratio_threshold: 1.0 - 1e-9,
            bracket_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    weight: f64,
    log_density: f64,
    profile: f64,
}

/// Quadrature nodes of the radial integral, precomputed once per spec and
/// mode: the integrand for any `c` is `exp(log_density − c·profile)`.
#[derive(Debug, Clone)]
pub struct CutoffTable {
    /// `[0, 1 − 2^{−j0}]`.
    core: Vec<Node>,
    /// Dyadic shells `[1 − 2^{−j}, 1 − 2^{−j−1}]`, `j = j0 .. j_max`.
    shells: Vec<Vec<Node>>,
    j0: usize,
}

/// Convergence classification of a cutoff sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convergence {
    Convergent,
    Divergent,
}

impl CutoffTable {
    pub fn build(
        spec: &MetricSpec,
        kernel: &PolarizedKernel,
        mode: Mode,
        config: &CutoffConfig,
    ) -> Result<Self> {
        let rule = GaussLegendre::new(20);
        let log_area = sphere_area(spec.dim).ln();
        let node = |p: RadialPoint, w: f64| -> Result<Node> {
            Ok(Node {
                weight: w,
                log_density: log_area + spec.log_radial_density(&p),
                profile: profile(spec, kernel, mode, &p)?,
            })
        };

        let r_core = 1.0 - 0.5f64.powi(config.j0 as i32);
        let core_panels = 8 * config.panels_per_shell;
        let mut core = Vec::with_capacity(core_panels * rule.nodes.len());
        let width = r_core / core_panels as f64;
        for k in 0..core_panels {
            let a = k as f64 * width;
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let r = a + 0.5 * width * (1.0 + x);
                core.push(node(RadialPoint::from_r(r), 0.5 * width * w)?);
            }
        }

        let mut shells = Vec::new();
        for j in config.j0..config.j_max {
            // δ from 2^{−j−1} to 2^{−j}, integrated in v = ln δ
            let v_lo = -((j + 1) as f64) * std::f64::consts::LN_2;
            let v_hi = -(j as f64) * std::f64::consts::LN_2;
            let panels = config.panels_per_shell;
            let pw = (v_hi - v_lo) / panels as f64;
            let mut shell = Vec::with_capacity(panels * rule.nodes.len());
            for k in 0..panels {
                let a = v_lo + k as f64 * pw;
                for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                    let d = (a + 0.5 * pw * (1.0 + x)).exp();
                    shell.push(node(RadialPoint::from_delta(d), 0.5 * pw * w * d)?);
                }
            }
            shells.push(shell);
        }
        Ok(Self {
            core,
            shells,
            j0: config.j0,
        })
    }

    fn sum(nodes: &[Node], c: f64) -> f64 {
        compensated_sum(
            nodes
                .iter()
                .map(|n| n.weight * (n.log_density - c * n.profile).exp()),
        )
    }

    /// Shell contributions `I(c, R_{j+1}) − I(c, R_j)`.
    pub fn increments(&self, c: f64) -> Result<Vec<f64>> {
        let inc: Vec<f64> = self.shells.iter().map(|s| Self::sum(s, c)).collect();
        if inc.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::QuadratureFailure(format!(
                "non-finite shell integral at c = {c}"
            )));
        }
        Ok(inc)
    }

    /// `(R_j, I(c, R_j))` for `j = j0 ..= j_max`.
    pub fn cutoff_integrals(&self, c: f64) -> Result<Vec<(f64, f64)>> {
        let mut acc = NeumaierSum::new();
        acc.add(Self::sum(&self.core, c));
        let mut out = vec![(1.0 - 0.5f64.powi(self.j0 as i32), acc.value())];
        for (k, inc) in self.increments(c)?.into_iter().enumerate() {
            acc.add(inc);
            let j = self.j0 + k + 1;
            out.push((1.0 - 0.5f64.powi(j as i32), acc.value()));
        }
        Ok(out)
    }

    /// Convergent iff the last two ratios of successive increments are
    /// below the threshold.
    pub fn classify(&self, c: f64, threshold: f64) -> Result<Convergence> {
        let inc = self.increments(c)?;
        if inc.len() < 3 {
            return Err(Error::QuadratureFailure("too few cutoff levels".into()));
        }
        let k = inc.len();
        let ratio = |i: usize| inc[i + 1] / inc[i];
        let q1 = ratio(k - 3);
        let q2 = ratio(k - 2);
        if !(q1.is_finite() && q2.is_finite()) {
            return Err(Error::QuadratureFailure(format!(
                "undefined tail ratio at c = {c}"
            )));
        }
        Ok(if q1 < threshold && q2 < threshold {
            Convergence::Convergent
        } else {
            Convergence::Divergent
        })
    }
}

/// Bisect the convergence threshold of the cutoff integrals on `c_range`.
pub fn cutoff_bisection(
    spec: &MetricSpec,
    kernel: &PolarizedKernel,
    mode: Mode,
    c_range: (f64, f64),
    config: &CutoffConfig,
) -> Result<EntropyEstimate> {
    spec.require_complete()?;
    let table = CutoffTable::build(spec, kernel, mode, config)?;
    bisect_table(&table, spec, mode, c_range, config)
}

fn bisect_table(
    table: &CutoffTable,
    spec: &MetricSpec,
    mode: Mode,
    c_range: (f64, f64),
    config: &CutoffConfig,
) -> Result<EntropyEstimate> {
    let (mut lo, mut hi) = c_range;
    let class_lo = table.classify(lo, config.ratio_threshold)?;
    let class_hi = table.classify(hi, config.ratio_threshold)?;
    if class_lo == class_hi {
        return Err(Error::NoBracket {
            lo,
            hi,
            class: format!("{class_lo:?}").to_lowercase(),
        });
    }
    // integrals converge for large c
    if class_lo == Convergence::Convergent {
        return Err(Error::NoBracket {
            lo,
            hi,
            class: "convergent below, divergent above".into(),
        });
    }
    while hi - lo > config.bracket_tol {
        let mid = 0.5 * (lo + hi);
        match table.classify(mid, config.ratio_threshold)? {
            Convergence::Convergent => hi = mid,
            Convergence::Divergent => lo = mid,
        }
    }
    Ok(EntropyEstimate {
        spec_name: spec.name.clone(),
        quantity: match mode {
            Mode::Diastatic => Quantity::DiastaticExponent,
            Mode::Volume => Quantity::VolumeEntropy,
        },
        value: 0.5 * (lo + hi),
        error: 0.5 * (hi - lo),
        method: Method::CutoffBisection,
    })
}

/// Bracket the threshold without prior knowledge: `c = 0` diverges for a
/// complete metric (infinite volume); double `hi` until convergent.
pub fn cutoff_bisection_auto(
    spec: &MetricSpec,
    kernel: &PolarizedKernel,
    mode: Mode,
    config: &CutoffConfig,
) -> Result<EntropyEstimate> {
    spec.require_complete()?;
    let table = CutoffTable::build(spec, kernel, mode, config)?;
    let mut hi = 1.0;
    while table.classify(hi, config.ratio_threshold)? == Convergence::Divergent {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NoBracket {
                lo: 0.0,
                hi,
                class: "divergent".into(),
            });
        }
    }
    bisect_table(&table, spec, mode, (0.0, hi), config)
}

// ---------------------------------------------------------------------------
// Entropies
// ---------------------------------------------------------------------------

/// Numerical settings shared by the entropy pipelines.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EntropyOptions {
    pub window: FitWindow,
    pub search: SearchGrid,
    pub cutoff: CutoffConfig,
    pub growth: GrowthConfig,
}

/// Diastatic entropy with the pieces it was assembled from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiastaticEntropy {
    pub estimate: EntropyEstimate,
    pub calibration: CalibrationEstimate,
    pub exponent: EntropyEstimate,
    pub exponent_cutoff: EntropyEstimate,
    pub fit: ExponentFit,
}

/// Volume entropy from the integral criterion, with its cross-check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeEntropy {
    pub estimate: EntropyEstimate,
    pub cutoff: EntropyEstimate,
    pub fit: ExponentFit,
}

fn cross_check(a: &EntropyEstimate, b: &EntropyEstimate) -> Result<()> {
    if a.agrees_with(b) {
        Ok(())
    } else {
        Err(Error::MethodDisagreement(format!(
            "{:?} for `{}`: asymptotic {} ± {:e} vs cutoff {} ± {:e}",
            a.quantity, a.spec_name, a.value, a.error, b.value, b.error
        )))
    }
}

/// `Ent_d = 𝒳 · c*`, with the asymptotic exponent checked against bisection.
pub fn diastatic_entropy_detailed(spec: &MetricSpec, opts: &EntropyOptions) -> Result<DiastaticEntropy> {
    spec.require_complete()?;
    let kernel = crate::diastasis::polarize_radial(spec);
    let fit = asymptotic_exponent_fit(spec, &kernel, Mode::Diastatic, &opts.window)?;
    let exponent = critical_exponent(&fit)?;
    let exponent_cutoff = cutoff_bisection_auto(spec, &kernel, Mode::Diastatic, &opts.cutoff)?;
    cross_check(&exponent, &exponent_cutoff)?;
    let calibration = calibration_constant(spec, &kernel, &opts.search)?;
    let value = calibration.value * exponent.value;
    let error = ((calibration.value * exponent.error).powi(2)
        + (exponent.value * calibration.error()).powi(2))
    .sqrt();
    Ok(DiastaticEntropy {
        estimate: EntropyEstimate {
            spec_name: spec.name.clone(),
            quantity: Quantity::DiastaticEntropy,
            value,
            error,
            method: Method::AsymptoticFit,
        },
        calibration,
        exponent,
        exponent_cutoff,
        fit,
    })
}

pub fn diastatic_entropy(spec: &MetricSpec) -> Result<EntropyEstimate> {
    diastatic_entropy_detailed(spec, &EntropyOptions::default()).map(|d| d.estimate)
}

/// Integral-criterion volume entropy, base point 0.
pub fn volume_entropy_integral_detailed(spec: &MetricSpec, opts: &EntropyOptions) -> Result<VolumeEntropy> {
    spec.require_complete()?;
    let kernel = crate::diastasis::polarize_radial(spec);
    let fit = asymptotic_exponent_fit(spec, &kernel, Mode::Volume, &opts.window)?;
    let estimate = critical_exponent(&fit)?;
    let cutoff = cutoff_bisection_auto(spec, &kernel, Mode::Volume, &opts.cutoff)?;
    cross_check(&estimate, &cutoff)?;
    Ok(VolumeEntropy {
        estimate,
        cutoff,
        fit,
    })
}

pub fn volume_entropy_integral(spec: &MetricSpec) -> Result<EntropyEstimate> {
    volume_entropy_integral_detailed(spec, &EntropyOptions::default()).map(|v| v.estimate)
}

// ---------------------------------------------------------------------------
// Ball growth
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthConfig {
    /// Boundary gap `1 − r` at the start of the window.
    pub gap_start: f64,
    /// Boundary gap at the end of the window; must stay above 1e−14.
    pub gap_end: f64,
    pub samples: usize,
    /// Tolerance (relative) for slope stability and the liminf/limsup sandwich.
    pub tolerance: f64,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        Self {
            gap_start: 1e-4,
            gap_end: 1e-13,
            samples: 64,
            tolerance: 2e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthEstimate {
    pub estimate: EntropyEstimate,
    /// Smallest and largest offset quotient `(log V(t) − log V(t_0))/(t − t_0)`
    /// over the late half of the window.
    pub liminf: f64,
    pub limsup: f64,
    pub window_t: [f64; 2],
    pub tolerance: f64,
    pub sandwich_holds: bool,
}

/// Geodesic-ball volume `Vol B(0, ρ(0, r))` for a radial point.
pub fn ball_volume(spec: &MetricSpec, p: &RadialPoint) -> f64 {
    let n = spec.dim as f64;
    let density = |q: &RadialPoint| {
        (spec.log_det(q) + (2.0 * n - 1.0) * q.r.ln()).exp()
    };
    let inner = if p.r <= 0.5 {
        GaussLegendre::new(20).integrate(|s| density(&RadialPoint::from_r(s)), 0.0, p.r)
    } else {
        let core = GaussLegendre::new(20).integrate(|s| density(&RadialPoint::from_r(s)), 0.0, 0.5);
        core + quad::integrate_log_gap(&|d: f64| density(&RadialPoint::from_delta(d)), p.delta, 0.5)
    };
    sphere_area(spec.dim) * inner
}

/// Invert `t = ρ(0, r)` for the boundary gap by bisection in `log δ`.
fn gap_at_distance(spec: &MetricSpec, t: f64) -> Result<f64> {
    let (mut lo, mut hi) = ((1e-16f64).ln(), 0.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let rho = radial_distance(spec, &RadialPoint::from_delta(mid.exp()))?;
        // ρ decreases as δ grows
        if rho > t {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Exponential growth rate of geodesic balls centred at 0.
pub fn volume_entropy_growth(spec: &MetricSpec, config: &GrowthConfig) -> Result<GrowthEstimate> {
    spec.require_complete()?;
    if config.gap_end < 1e-14 {
        return Err(Error::WindowTooShort(format!(
            "window end gap {:e} is below the floating-point limit 1e-14",
            config.gap_end
        )));
    }
    if !(config.gap_start > config.gap_end && config.gap_start < 1.0) || config.samples < 16 {
        return Err(Error::InvalidSpec("growth window is malformed".into()));
    }
    let t_lo = radial_distance(spec, &RadialPoint::from_delta(config.gap_start))?;
    let t_hi = radial_distance(spec, &RadialPoint::from_delta(config.gap_end))?;
    let ts = quad::linspace(t_lo, t_hi, config.samples);
    let mut log_vol = Vec::with_capacity(ts.len());
    for &t in &ts {
        let d = gap_at_distance(spec, t)?;
        let v = ball_volume(spec, &RadialPoint::from_delta(d));
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::QuadratureFailure(format!("ball volume {v} at t = {t}")));
        }
        log_vol.push(v.ln());
    }
    let (fit, err) = slope_with_drift(&ts, &log_vol);
    let slope = fit.slope;
    if err > config.tolerance * slope.abs() {
        return Err(Error::WindowTooShort(format!(
            "growth slope {slope} has not stabilised (drift {err:e}) before the 1e-14 limit"
        )));
    }
    let half = ts.len() / 2;
    let quotients: Vec<f64> = (half..ts.len())
        .map(|i| (log_vol[i] - log_vol[0]) / (ts[i] - ts[0]))
        .collect();
    let liminf = quotients.iter().copied().fold(f64::INFINITY, f64::min);
    let limsup = quotients.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = config.tolerance * slope.abs();
    let sandwich_holds = liminf - tol <= slope && slope <= limsup + tol;
    Ok(GrowthEstimate {
        estimate: EntropyEstimate {
            spec_name: spec.name.clone(),
            quantity: Quantity::VolumeEntropy,
            value: slope,
            error: err,
            method: Method::GrowthFit,
        },
        liminf,
        limsup,
        window_t: [t_lo, t_hi],
        tolerance: tol,
        sandwich_holds,
    })
}

// ---------------------------------------------------------------------------
// Base-point independence
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichRow {
    pub radius: f64,
    pub integral_w1: f64,
    pub integral_w2: f64,
    pub ratio: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub spec: String,
    pub w1: Complex64,
    pub w2: Complex64,
    pub c: f64,
    pub calibration: f64,
    pub distance: f64,
    pub rows: Vec<SandwichRow>,
    pub passed: bool,
}

/// `∫_{|x| ≤ R} e^{−c D_w(x)} dν(x)` on the disc, by polar quadrature.
pub fn disc_cutoff_integral(
    spec: &MetricSpec,
    kernel: &PolarizedKernel,
    w: Complex64,
    c: f64,
    radius: f64,
) -> Result<f64> {
    const ANGLES: usize = 128;
    let angular = |r: f64| -> Result<f64> {
        let mut acc = NeumaierSum::new();
        for k in 0..ANGLES {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / ANGLES as f64;
            let x = [Complex64::from_polar(r, theta)];
            let d = diastasis_eval(kernel, &x, &[w])?;
            let density = volume_density(spec, &x)?;
            acc.add((-c * d).exp() * density);
        }
        Ok(acc.value() * 2.0 * std::f64::consts::PI / ANGLES as f64 * r)
    };
    let rule = GaussLegendre::new(20);
    let integrate = |a: f64, b: f64, panels: usize| -> Result<f64> {
        let mut acc = NeumaierSum::new();
        let width = (b - a) / panels as f64;
        for k in 0..panels {
            let lo = a + k as f64 * width;
            for (x, wgt) in rule.nodes.iter().zip(&rule.weights) {
                let r = lo + 0.5 * width * (1.0 + x);
                acc.add(0.5 * width * wgt * angular(r)?);
            }
        }
        Ok(acc.value())
    };
    if radius <= 0.5 {
        return integrate(0.0, radius, 8);
    }
    let core = integrate(0.0, 0.5, 8)?;
    // shells in log δ from δ = 0.5 down to 1 − R
    let v_lo = (1.0 - radius).ln();
    let v_hi = 0.5f64.ln();
    let panels = ((v_hi - v_lo) / std::f64::consts::LN_2).ceil().max(1.0) as usize;
    let width = (v_hi - v_lo) / panels as f64;
    let mut acc = NeumaierSum::new();
    acc.add(core);
    for k in 0..panels {
        let a = v_lo + k as f64 * width;
        for (x, wgt) in rule.nodes.iter().zip(&rule.weights) {
            let d = (a + 0.5 * width * (1.0 + x)).exp();
            acc.add(0.5 * width * wgt * d * angular(1.0 - d)?);
        }
    }
    let v = acc.value();
    if !v.is_finite() {
        return Err(Error::QuadratureFailure(format!("disc integral {v}")));
    }
    Ok(v)
}

/// Check `e^{−c𝒳ρ} I_{w1} ≤ I_{w2} ≤ e^{c𝒳ρ} I_{w1}` on each cutoff radius.
pub fn basepoint_sandwich_check(
    spec: &MetricSpec,
    kernel: &PolarizedKernel,
    w1: Complex64,
    w2: Complex64,
    c: f64,
    radii: &[f64],
) -> Result<SandwichReport> {
    if spec.dim != 1 {
        return Err(Error::InvalidSpec(
            "base-point sandwich is implemented for n = 1 only".into(),
        ));
    }
    if w1.norm() > 0.5 || w2.norm() > 0.5 {
        return Err(Error::InvalidSpec("base points must have norm <= 0.5".into()));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidSpec("c must be positive".into()));
    }
    let calibration = calibration_constant(spec, kernel, &SearchGrid::default())?;
    let chi = calibration.value + calibration.error();
    let distance = distance_bound(spec, &[w1], &[w2])?;
    let bound = (c * chi * distance).exp();
    let mut rows = Vec::with_capacity(radii.len());
    for &radius in radii {
        if !(radius > 0.0 && radius < 1.0) {
            return Err(Error::InvalidSpec(format!("cutoff radius {radius} outside (0, 1)")));
        }
        let i1 = disc_cutoff_integral(spec, kernel, w1, c, radius)?;
        let i2 = if w1 == w2 {
            i1
        } else {
            disc_cutoff_integral(spec, kernel, w2, c, radius)?
        };
        let ratio = i2 / i1;
        let slack = 1e-12;
        let holds = ratio >= (1.0 - slack) / bound && ratio <= bound * (1.0 + slack);
        rows.push(SandwichRow {
            radius,
            integral_w1: i1,
            integral_w2: i2,
            ratio,
            bound,
            holds,
        });
    }
    let passed = rows.iter().all(|r| r.holds);
    Ok(SandwichReport {
        spec: spec.name.clone(),
        w1,
        w2,
        c,
        calibration: chi,
        distance,
        rows,
        passed,
    })
}
