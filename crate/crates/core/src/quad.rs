//! Quadrature and summation primitives.
//!
//! Radial integrals in this crate run all the way to the boundary of the unit
//! ball, where integrands behave like powers of `1 - r`. They are therefore
//! parametrized by the boundary gap `delta = 1 - r` and integrated in
//! `v = ln(delta)` on panels no wider than `ln 2`, which turns power-law
//! boundary behavior into smooth exponentials that Gauss-Legendre handles well.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of a sequence.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<NeumaierSum>().value()
}

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights by Newton iteration on the Legendre recurrence.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let m = order.div_ceil(2);
        let nf = order as f64;
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(order, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrate `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = NeumaierSum::new();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(mid + half * x));
        }
        half * acc.value()
    }
}

fn legendre(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=order {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = order as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared 20-point rule used by the panel integrators.
pub fn gl20() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(20))
}

/// Adaptive Gauss-Legendre: bisect until the 20-point value on a panel agrees
/// with the sum over its two halves to `tol` (absolute, scaled by panel share).
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let rule = gl20();
    let whole = rule.integrate(f, a, b);
    let mut acc = NeumaierSum::new();
    adaptive_rec(f, rule, a, b, whole, tol, 0, &mut acc)?;
    let v = acc.value();
    if !v.is_finite() {
        return Err(Error::QuadratureFailure(format!(
            "non-finite integral on [{a}, {b}]"
        )));
    }
    Ok(v)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_rec<F: Fn(f64) -> f64>(
    f: &F,
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: usize,
    acc: &mut NeumaierSum,
) -> Result<()> {
    let mid = 0.5 * (a + b);
    let left = rule.integrate(f, a, mid);
    let right = rule.integrate(f, mid, b);
    let refined = left + right;
    if !refined.is_finite() {
        return Err(Error::QuadratureFailure(format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    if (refined - whole).abs() <= tol.max(1e-15 * refined.abs()) {
        acc.add(refined);
        return Ok(());
    }
    if depth >= 40 {
        return Err(Error::QuadratureFailure(format!(
            "no convergence on [{a}, {b}] after {depth} bisections"
        )));
    }
    adaptive_rec(f, rule, a, mid, left, 0.5 * tol, depth + 1, acc)?;
    adaptive_rec(f, rule, mid, b, right, 0.5 * tol, depth + 1, acc)
}

/// Integrate `g(delta)` d(delta) over `[delta_lo, delta_hi]` using the
/// substitution `delta = exp(v)`, on panels of width at most `ln 2` in `v`.
/// `delta_lo` must be positive.
pub fn integrate_log_gap<F: Fn(f64) -> f64>(g: &F, delta_lo: f64, delta_hi: f64) -> f64 {
    if delta_hi <= delta_lo {
        return 0.0;
    }
    let rule = gl20();
    let v_lo = delta_lo.ln();
    let v_hi = delta_hi.ln();
    let panels = ((v_hi - v_lo) / std::f64::consts::LN_2).ceil().max(1.0) as usize;
    let width = (v_hi - v_lo) / panels as f64;
    let mut acc = NeumaierSum::new();
    for k in 0..panels {
        let a = v_lo + k as f64 * width;
        let b = if k + 1 == panels { v_hi } else { a + width };
        acc.add(rule.integrate(
            |v| {
                let d = v.exp();
                g(d) * d
            },
            a,
            b,
        ));
    }
    acc.value()
}

/// Evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..count)
            .map(|i| a + (b - a) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Log-spaced points from `a` to `b` inclusive (both positive).
pub fn logspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    linspace(a.ln(), b.ln(), count)
        .into_iter()
        .map(f64::exp)
        .collect()
}
