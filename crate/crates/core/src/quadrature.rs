//! Quadrature rules: Gauss–Hermite nodes for Gaussian expectations and a
//! globally adaptive Gauss–Kronrod (7/15) integrator for finite intervals.

use crate::error::{Error, Result};
use crate::Scalar;

/// Largest Gauss–Hermite order generated; beyond it the outer weights underflow.
pub const MAX_HERMITE_NODES: usize = 256;

/// Nodes and weights of the physicists' Gauss–Hermite rule
/// `∫ e^{-x²} f(x) dx ≈ Σ wᵢ f(xᵢ)`, nodes ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteRule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Scalar> HermiteRule<T> {
    pub fn new(n: usize) -> Result<Self> {
        gauss_hermite_nodes(n)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `E[f(U)]` for `U ~ Normal(mean, sd²)`.
    #[inline]
    pub fn normal_expectation<F: FnMut(T) -> T>(&self, mean: T, sd: T, mut f: F) -> T {
        let scale = T::SQRT_2() * sd;
        let mut acc = T::zero();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + w * f(mean + scale * x);
        }
        acc / T::PI().sqrt()
    }
}

/// Gauss–Hermite nodes and weights of order `n`.
///
/// Roots of the orthonormal Hermite polynomial are refined by Newton's method
/// in `f64` and then converted.
pub fn gauss_hermite_nodes<T: Scalar>(n: usize) -> Result<HermiteRule<T>> {
    if n == 0 {
        return Err(Error::Config("Gauss-Hermite order must be >= 1".into()));
    }
    if n > MAX_HERMITE_NODES {
        return Err(Error::Config(format!(
            "Gauss-Hermite order {n} exceeds the stable limit {MAX_HERMITE_NODES}"
        )));
    }
    let (nodes, weights) = hermite_f64(n)?;
    Ok(HermiteRule {
        nodes: nodes.into_iter().map(T::lit).collect(),
        weights: weights.into_iter().map(T::lit).collect(),
    })
}

fn hermite_f64(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    const PI_M4: f64 = 0.751_125_544_464_942_5; // π^{-1/4}
    const EPS: f64 = 1e-15;
    if n == 1 {
        return Ok((vec![0.0], vec![std::f64::consts::PI.sqrt()]));
    }
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let mut z = 0.0_f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        let mut converged = false;
        for _ in 0..200 {
            let mut p1 = PI_M4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= EPS * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged || !z.is_finite() {
            return Err(Error::Config(format!(
                "Gauss-Hermite root {i} of order {n} did not converge"
            )));
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    x.reverse();
    w.reverse();
    Ok((x, w))
}

// Kronrod 15-point abscissae (non-negative half) with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances for [`integrate`] and [`integrate_vec`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance<T> {
    pub rel: T,
    pub abs: T,
    pub max_intervals: usize,
}

impl<T: Scalar> Tolerance<T> {
    pub fn new(rel: T, abs: T) -> Self {
        Self {
            rel,
            abs,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: T,
}

struct Panel<T> {
    a: T,
    b: T,
    value: Vec<T>,
    error: Vec<T>,
}

/// Applies G7K15 on `[a, b]`, writing the Kronrod value and the |K−G| error
/// for every component.
fn gk15<T: Scalar, F: FnMut(T, &mut [T])>(f: &mut F, a: T, b: T, dim: usize) -> Panel<T> {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let radius = half * (b - a);
    let mut fc = vec![T::zero(); dim];
    let mut f1 = vec![T::zero(); dim];
    let mut f2 = vec![T::zero(); dim];
    let mut kron = vec![T::zero(); dim];
    let mut gauss = vec![T::zero(); dim];

    f(center, &mut fc);
    for d in 0..dim {
        kron[d] = T::lit(WGK[7]) * fc[d];
        gauss[d] = T::lit(WG[3]) * fc[d];
    }
    for j in 0..7 {
        let dx = radius * T::lit(XGK[j]);
        f(center - dx, &mut f1);
        f(center + dx, &mut f2);
        for d in 0..dim {
            let s = f1[d] + f2[d];
            kron[d] = kron[d] + T::lit(WGK[j]) * s;
            if j % 2 == 1 {
                gauss[d] = gauss[d] + T::lit(WG[j / 2]) * s;
            }
        }
    }
    let mut error = vec![T::zero(); dim];
    for d in 0..dim {
        kron[d] = kron[d] * radius;
        error[d] = ((kron[d] - gauss[d] * radius) * radius.signum()).abs();
    }
    Panel {
        a,
        b,
        value: kron,
        error,
    }
}

/// Globally adaptive integration of a vector-valued integrand over `[a, b]`.
///
/// Bisects the panel with the largest normalized error until every component
/// satisfies `err ≤ max(abs, rel·|I|)`. `a` and `b` must be finite.
pub fn integrate_vec<T: Scalar, F: FnMut(T, &mut [T])>(
    mut f: F,
    a: T,
    b: T,
    dim: usize,
    tol: Tolerance<T>,
) -> Result<Vec<Estimate<T>>> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid(
            "bounds",
            "integration bounds must be finite",
        ));
    }
    if a == b || dim == 0 {
        return Ok(vec![
            Estimate {
                value: T::zero(),
                error: T::zero()
            };
            dim
        ]);
    }
    let mut panels = vec![gk15(&mut f, a, b, dim)];
    loop {
        let mut total = vec![T::zero(); dim];
        let mut err = vec![T::zero(); dim];
        for p in &panels {
            for d in 0..dim {
                total[d] = total[d] + p.value[d];
                err[d] = err[d] + p.error[d];
            }
        }
        let target: Vec<T> = total
            .iter()
            .map(|v| tol.abs.max(tol.rel * v.abs()))
            .collect();
        let done = (0..dim).all(|d| err[d] <= target[d]);
        if done {
            return Ok((0..dim)
                .map(|d| Estimate {
                    value: total[d],
                    error: err[d],
                })
                .collect());
        }
        if panels.len() >= tol.max_intervals {
            let worst = (0..dim)
                .map(|d| (err[d] / target[d]).as_f64())
                .fold(0.0, f64::max);
            return Err(Error::convergence(
                "adaptive quadrature",
                format!(
                    "{} panels on [{a}, {b}] without meeting tolerance (error/target = {worst:.3e})",
                    panels.len()
                ),
            ));
        }
        // Bisect the panel contributing most relative to the per-component targets.
        let score = |p: &Panel<T>| {
            (0..dim)
                .map(|d| (p.error[d] / target[d]).as_f64())
                .fold(0.0, f64::max)
        };
        let (worst, _) = panels.iter().enumerate().map(|(i, p)| (i, score(p))).fold(
            (0, f64::NEG_INFINITY),
            |acc, x| if x.1 > acc.1 { x } else { acc },
        );
        let p = panels.swap_remove(worst);
        let mid = T::lit(0.5) * (p.a + p.b);
        if mid <= p.a.min(p.b) || mid >= p.a.max(p.b) {
            return Err(Error::convergence(
                "adaptive quadrature",
                format!("panel width underflow near {mid}"),
            ));
        }
        panels.push(gk15(&mut f, p.a, mid, dim));
        panels.push(gk15(&mut f, mid, p.b, dim));
    }
}

/// Scalar convenience wrapper around [`integrate_vec`].
pub fn integrate<T: Scalar, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    tol: Tolerance<T>,
) -> Result<Estimate<T>> {
    let mut out = integrate_vec(|x, buf: &mut [T]| buf[0] = f(x), a, b, 1, tol)?;
    Ok(out.pop().expect("one component"))
}
