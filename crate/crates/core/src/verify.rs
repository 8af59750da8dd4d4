//! Invariant battery behind `verify`.
//!
//! Each check compares an implementation path with an independent route
//! (finite differences, closed forms, symmetry) on seeded random samples.
//! A [`Mutation`] deliberately corrupts one computed quantity so tests can
//! confirm the battery notices.

use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calibration::{calibration_constant, grad_norm};
use crate::diastasis::{diastasis_eval, hyperbolic_closed_forms, polarize_radial, PolarizedKernel};
use crate::entropy::{
    asymptotic_exponent_fit, critical_exponent, cutoff_bisection_auto, volume_entropy_growth,
    EntropyOptions, Mode,
};
use crate::error::Result;
use crate::model::{metric_tensor, volume_density, MetricSpec};
use crate::rigidity::{lower_bound_check, scale_metric, Verdict};

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const INVERSE_TOL: f64 = 1e-10;
pub const POTENTIAL_HESSIAN_TOL: f64 = 1e-6;
pub const DIASTASIS_HESSIAN_TOL: f64 = 1e-5;
pub const ROTATION_TOL: f64 = 1e-12;
pub const RESTRICTION_TOL: f64 = 1e-10;
pub const SYMMETRY_TOL: f64 = 1e-12;
pub const ORACLE_TOL: f64 = 1e-8;
pub const DISTANCE_IDENTITY_TOL: f64 = 1e-10;
pub const GRADIENT_FD_TOL: f64 = 1e-5;
pub const GRADIENT_SCALING_TOL: f64 = 1e-10;
pub const CALIBRATION_SCALING_TOL: f64 = 0.01;

/// A deliberate defect injected into the battery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    #[default]
    None,
    /// Metric tensor multiplied by 1.001.
    MetricScale,
    /// Constant 1e-6 added to every diastasis value.
    DiastasisOffset,
    /// Gradient norm multiplied by 1.001.
    GradientScale,
}

impl FromStr for Mutation {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "none" => Ok(Mutation::None),
            "metric-scale" => Ok(Mutation::MetricScale),
            "diastasis-offset" => Ok(Mutation::DiastasisOffset),
            "gradient-scale" => Ok(Mutation::GradientScale),
            other => Err(format!("unknown mutation `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Worst observed deviation (relative or absolute, per check).
    pub worst: f64,
    pub tolerance: f64,
    pub samples: usize,
}

impl CheckResult {
    fn new(name: &str, worst: f64, tolerance: f64, samples: usize) -> Self {
        Self {
            name: name.into(),
            passed: worst <= tolerance,
            worst,
            tolerance,
            samples,
        }
    }

    fn flag(name: &str, ok: bool, samples: usize) -> Self {
        Self {
            name: name.into(),
            passed: ok,
            worst: if ok { 0.0 } else { 1.0 },
            tolerance: 0.0,
            samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryConfig {
    pub seed: u64,
    pub samples: usize,
    pub mutation: Mutation,
    /// Also run the (slower) entropy cross-checks.
    pub entropy: bool,
    pub options: EntropyOptions,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            samples: 50,
            mutation: Mutation::None,
            entropy: true,
            options: EntropyOptions::default(),
        }
    }
}

// ---------------------------------------------------------------------------
// Finite-difference oracles
// ---------------------------------------------------------------------------

fn shifted(z: &[Complex64], a: usize, step: f64) -> Vec<Complex64> {
    let n = z.len();
    let mut out = z.to_vec();
    if a < n {
        out[a] += Complex64::new(step, 0.0);
    } else {
        out[a - n] += Complex64::new(0.0, step);
    }
    out
}

fn shifted2(z: &[Complex64], a: usize, sa: f64, b: usize, sb: f64) -> Vec<Complex64> {
    shifted(&shifted(z, a, sa), b, sb)
}

/// Fourth-order central-difference Hessian in the real coordinates
/// `(x_1..x_n, y_1..y_n)`.
pub fn real_hessian_fd<F: Fn(&[Complex64]) -> f64>(f: &F, z: &[Complex64], h: f64) -> DMatrix<f64> {
    let m = 2 * z.len();
    let f0 = f(z);
    let mut hess = DMatrix::zeros(m, m);
    for a in 0..m {
        let fp1 = f(&shifted(z, a, h));
        let fm1 = f(&shifted(z, a, -h));
        let fp2 = f(&shifted(z, a, 2.0 * h));
        let fm2 = f(&shifted(z, a, -2.0 * h));
        hess[(a, a)] = (-fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * h * h);
        for b in (a + 1)..m {
            let cross = |s: f64| {
                f(&shifted2(z, a, s, b, s)) - f(&shifted2(z, a, s, b, -s))
                    - f(&shifted2(z, a, -s, b, s))
                    + f(&shifted2(z, a, -s, b, -s))
            };
            let v = (16.0 * cross(h) - cross(2.0 * h)) / (48.0 * h * h);
            hess[(a, b)] = v;
            hess[(b, a)] = v;
        }
    }
    hess
}

/// `∂_i∂_j̄ f = ¼ (f_{x_i x_j} + f_{y_i y_j} + i(f_{x_i y_j} − f_{y_i x_j}))`.
pub fn complex_hessian_fd<F: Fn(&[Complex64]) -> f64>(f: &F, z: &[Complex64], h: f64) -> DMatrix<Complex64> {
    let n = z.len();
    let r = real_hessian_fd(f, z, h);
    DMatrix::from_fn(n, n, |i, j| {
        Complex64::new(
            0.25 * (r[(i, j)] + r[(n + i, n + j)]),
            0.25 * (r[(i, n + j)] - r[(n + i, j)]),
        )
    })
}

/// Fourth-order central-difference gradient in real coordinates.
pub fn real_gradient_fd<F: Fn(&[Complex64]) -> f64>(f: &F, z: &[Complex64], h: f64) -> Vec<f64> {
    (0..2 * z.len())
        .map(|a| {
            let p1 = f(&shifted(z, a, h));
            let m1 = f(&shifted(z, a, -h));
            let p2 = f(&shifted(z, a, 2.0 * h));
            let m2 = f(&shifted(z, a, -2.0 * h));
            (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h)
        })
        .collect()
}

/// Riemannian norm of a real gradient for the real metric
/// `h(u, v) = Re Σ g_{ij̄} u_i v̄_j`.
pub fn real_metric_norm(g: &DMatrix<Complex64>, grad: &[f64]) -> f64 {
    let n = g.nrows();
    let basis = |a: usize| -> Vec<Complex64> {
        let mut u = vec![Complex64::new(0.0, 0.0); n];
        if a < n {
            u[a] = Complex64::new(1.0, 0.0);
        } else {
            u[a - n] = Complex64::new(0.0, 1.0);
        }
        u
    };
    let m = 2 * n;
    let real = DMatrix::from_fn(m, m, |a, b| {
        let u = basis(a);
        let v = basis(b);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += g[(i, j)] * u[i] * v[j].conj();
            }
        }
        acc.re
    });
    let inv = real.try_inverse().expect("metric is positive definite");
    let gv = nalgebra::DVector::from_column_slice(grad);
    (gv.transpose() * inv * &gv)[(0, 0)].max(0.0).sqrt()
}

fn rel_matrix_err(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let scale = b.iter().map(|c| c.norm()).fold(0.0f64, f64::max).max(1e-300);
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0f64, f64::max)
        / scale
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Uniform point in the ball of radius `radius` in ℂⁿ.
pub fn random_point<R: Rng>(rng: &mut R, dim: usize, radius: f64) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let t: f64 = v.iter().map(|c| c.norm_sqr()).sum();
        if t < 1.0 {
            return v.into_iter().map(|c| c * radius).collect();
        }
    }
}

/// Random unitary: phase diagonal times a Householder reflection.
pub fn random_unitary<R: Rng>(rng: &mut R, dim: usize) -> DMatrix<Complex64> {
    let v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let vv: f64 = v.iter().map(|c| c.norm_sqr()).sum();
    let phases: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU)))
        .collect();
    DMatrix::from_fn(dim, dim, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        phases[i] * (Complex64::new(id, 0.0) - v[i] * v[j].conj() * (2.0 / vv))
    })
}

fn apply(u: &DMatrix<Complex64>, z: &[Complex64]) -> Vec<Complex64> {
    (0..z.len())
        .map(|i| (0..z.len()).map(|j| u[(i, j)] * z[j]).sum())
        .collect()
}

// ---------------------------------------------------------------------------
// Battery
// ---------------------------------------------------------------------------

struct Subject<'a> {
    spec: &'a MetricSpec,
    kernel: PolarizedKernel,
    mutation: Mutation,
}

impl Subject<'_> {
    fn metric(&self, z: &[Complex64]) -> Result<DMatrix<Complex64>> {
        let g = metric_tensor(self.spec, z)?.matrix;
        Ok(if self.mutation == Mutation::MetricScale {
            g * Complex64::new(1.001, 0.0)
        } else {
            g
        })
    }

    fn diastasis(&self, z: &[Complex64], w: &[Complex64]) -> Result<f64> {
        let d = diastasis_eval(&self.kernel, z, w)?;
        Ok(if self.mutation == Mutation::DiastasisOffset {
            d + 1e-6
        } else {
            d
        })
    }

    fn grad(&self, y: &[Complex64], z: &[Complex64]) -> Result<f64> {
        let v = grad_norm(self.spec, &self.kernel, y, z)?;
        Ok(if self.mutation == Mutation::GradientScale {
            v * 1.001
        } else {
            v
        })
    }
}

/// Run every invariant check on `spec`.
pub fn run_battery(spec: &MetricSpec, config: &BatteryConfig) -> Result<Vec<CheckResult>> {
    spec.check_well_formed()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let subject = Subject {
        spec,
        kernel: polarize_radial(spec),
        mutation: config.mutation,
    };
    let n = spec.dim;
    let count = config.samples;
    let mut out = Vec::new();

    // metric tensor
    let (mut herm, mut inv, mut hess, mut rot) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..count {
        let z = random_point(&mut rng, n, 0.9);
        let full = metric_tensor(spec, &z)?;
        let g = subject.metric(&z)?;
        herm = herm.max(rel_matrix_err(&g.adjoint(), &g));
        let prod = &g * &full.inverse;
        inv = inv.max(rel_matrix_err(&prod, &DMatrix::identity(n, n)));
        let fd = complex_hessian_fd(&|x: &[Complex64]| spec.potential(x).unwrap_or(f64::NAN), &z, 1e-3);
        hess = hess.max(rel_matrix_err(&g, &fd));
        let u = random_unitary(&mut rng, n);
        let d1 = volume_density(spec, &z)?;
        let d2 = volume_density(spec, &apply(&u, &z))?;
        rot = rot.max((d1 - d2).abs() / d1);
    }
    out.push(CheckResult::new("metric_hermitian", herm, HERMITIAN_TOL, count));
    out.push(CheckResult::new("metric_inverse", inv, INVERSE_TOL, count));
    out.push(CheckResult::new("metric_potential_hessian", hess, POTENTIAL_HESSIAN_TOL, count));
    out.push(CheckResult::new("rotation_invariance", rot, ROTATION_TOL, count));

    // polarized kernel
    let (mut restr, mut conj) = (0.0f64, 0.0f64);
    for _ in 0..count {
        let z = random_point(&mut rng, n, 0.95);
        let w = random_point(&mut rng, n, 0.95);
        let phi = spec.potential(&z)?;
        let k = subject.kernel.eval_pair(&z, &z);
        restr = restr.max((k - phi).norm() / phi.abs().max(1.0));
        let a = subject.kernel.eval_pair(&z, &w);
        let b = subject.kernel.eval_pair(&w, &z);
        conj = conj.max((a - b.conj()).norm());
    }
    out.push(CheckResult::new("kernel_restriction", restr, RESTRICTION_TOL, count));
    out.push(CheckResult::new("kernel_hermitian", conj, SYMMETRY_TOL, count));

    // diastasis
    let (mut sym, mut diag, mut dhess) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..count {
        let z = random_point(&mut rng, n, 0.8);
        let w = random_point(&mut rng, n, 0.8);
        sym = sym.max((subject.diastasis(&z, &w)? - subject.diastasis(&w, &z)?).abs());
        diag = diag.max(subject.diastasis(&z, &z)?.abs());
        let fd = complex_hessian_fd(
            &|x: &[Complex64]| subject.diastasis(x, &w).unwrap_or(f64::NAN),
            &z,
            1e-3,
        );
        dhess = dhess.max(rel_matrix_err(&subject.metric(&z)?, &fd));
    }
    out.push(CheckResult::new("diastasis_symmetry", sym, SYMMETRY_TOL, count));
    out.push(CheckResult::new("diastasis_zero_diagonal", diag, SYMMETRY_TOL, count));
    out.push(CheckResult::new("diastasis_kahler_potential", dhess, DIASTASIS_HESSIAN_TOL, count));

    // hyperbolic oracles; for multiples of the hyperbolic metric D = λα·D^h
    if spec.is_hyperbolic_family() && spec.alpha > 0.0 {
        let (mut oracle, mut nonneg) = (0.0f64, true);
        for _ in 0..count {
            let z = random_point(&mut rng, n, 0.9);
            let w = random_point(&mut rng, n, 0.9);
            let (dh, _) = hyperbolic_closed_forms(&z, &w)?;
            nonneg &= dh >= 0.0;
            let d = subject.diastasis(&z, &w)?;
            oracle = oracle.max((d - spec.log_coeff() * dh).abs() / dh.abs().max(1.0));
        }
        out.push(CheckResult::new("hyperbolic_oracle", oracle, ORACLE_TOL, count));
        out.push(CheckResult::flag("hyperbolic_nonnegative", nonneg, count));
    }
    let mut ident = 0.0f64;
    for i in 1..=count {
        let r = 0.999 * i as f64 / count as f64;
        let (_, rho) = hyperbolic_closed_forms(&[Complex64::new(r, 0.0)], &[Complex64::new(0.0, 0.0)])?;
        ident = ident.max((rho - r.atanh()).abs() / r.atanh().max(1.0));
    }
    out.push(CheckResult::new("distance_identity", ident, DISTANCE_IDENTITY_TOL, count));

    // gradient norm
    let (mut gfd, mut gscale) = (0.0f64, 0.0f64);
    let scaled = scale_metric(spec, 4.0);
    let scaled_kernel = polarize_radial(&scaled);
    for _ in 0..count {
        let y = random_point(&mut rng, n, 0.8);
        let z = random_point(&mut rng, n, 0.8);
        let v = subject.grad(&y, &z)?;
        let grad = real_gradient_fd(&|x: &[Complex64]| diastasis_eval(&subject.kernel, x, &z).unwrap_or(f64::NAN), &y, 1e-4);
        let fd = real_metric_norm(&metric_tensor(spec, &y)?.matrix, &grad);
        gfd = gfd.max((v - fd).abs() / fd.max(1e-3));
        let vs = grad_norm(&scaled, &scaled_kernel, &y, &z)?;
        gscale = gscale.max((vs - 2.0 * v).abs() / v.max(1e-3));
    }
    out.push(CheckResult::new("gradient_finite_difference", gfd, GRADIENT_FD_TOL, count));
    out.push(CheckResult::new("gradient_scaling", gscale, GRADIENT_SCALING_TOL, count));

    if config.entropy && spec.alpha > 0.0 {
        out.extend(entropy_checks(spec, &subject.kernel, config)?);
    }
    Ok(out)
}

fn entropy_checks(spec: &MetricSpec, kernel: &PolarizedKernel, config: &BatteryConfig) -> Result<Vec<CheckResult>> {
    let opts = &config.options;
    let mut out = Vec::new();
    for mode in [Mode::Diastatic, Mode::Volume] {
        let fit = asymptotic_exponent_fit(spec, kernel, mode, &opts.window)?;
        let asym = critical_exponent(&fit)?;
        let cut = cutoff_bisection_auto(spec, kernel, mode, &opts.cutoff)?;
        let gap = (asym.value - cut.value).abs();
        out.push(CheckResult::new(
            &format!("{mode}_method_agreement"),
            gap,
            asym.error + cut.error,
            1,
        ));
    }
    let growth = volume_entropy_growth(spec, &opts.growth)?;
    out.push(CheckResult::flag("growth_sandwich", growth.sandwich_holds, 1));

    let base = calibration_constant(spec, kernel, &opts.search)?;
    let scaled = scale_metric(spec, 4.0);
    let quad = calibration_constant(&scaled, &polarize_radial(&scaled), &opts.search)?;
    out.push(CheckResult::new(
        "calibration_scaling",
        (quad.value / base.value / 2.0 - 1.0).abs(),
        CALIBRATION_SCALING_TOL,
        1,
    ));

    let cmp = lower_bound_check(spec, opts)?;
    out.push(CheckResult::flag("lower_bound", cmp.verdict == Verdict::Holds, 1));
    if let Some(sharp) = cmp.sharp_case {
        out.push(CheckResult::flag("lower_bound_sharp", sharp, 1));
    }
    Ok(out)
}
