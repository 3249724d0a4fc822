//! Interference from UAVs beyond the sampling window.
//!
//! Interferers outside `R_max` are split by their fading-free received power
//! `L·V`. Those above a threshold are drawn individually from their thinned
//! radial intensity; the rest enter through their expected total, which is
//! available in closed form from the partial log-normal mean.

use std::f64::consts::SQRT_2;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use statrs::function::erf::{erfc, erfc_inv};

use crate::channel::{
    los_probability_unchecked, path_loss_unchecked, shadowing_sigma_unchecked, ChannelConfig,
    Environment, FadingSampler, LinkMode,
};
use crate::error::{check_positive, Error, Result};
use crate::Scalar;

/// Radial grid spacing in `ln r`.
const GRID_STEP: f64 = 0.01;
/// The grid never extends past `e^34.5 ≈ 10^15` km.
const MAX_LN_RADIUS: f64 = 34.5;
/// Strong-interferer density (per unit `ln r`) treated as zero.
const NEGLIGIBLE_DENSITY: f64 = 1e-12;

fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

fn norm_quantile(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}

/// Per-radius quantities of one mode, in `f64`.
#[derive(Debug, Clone, Copy)]
struct Local {
    prob: f64,
    loss: f64,
    mu: f64,
    sigma: f64,
}

#[derive(Debug, Clone)]
struct ModeTable {
    mode: LinkMode,
    /// Cumulative expected count of strong interferers at each grid node.
    cum: Vec<f64>,
}

/// Sampler for the far-field interference seen by the typical user.
#[derive(Debug, Clone)]
pub struct FarField<T: Scalar> {
    env: Environment<T>,
    channel: ChannelConfig<T>,
    start: f64,
    threshold: f64,
    tables: Vec<ModeTable>,
    weak_mean: f64,
    fading: FadingSampler<T>,
}

impl<T: Scalar> FarField<T> {
    /// `density` is the same-sub-channel interferer density `λ/B`; powers
    /// `L·V` at or below `threshold` are replaced by their mean.
    pub fn new(
        env: Environment<T>,
        channel: ChannelConfig<T>,
        density: T,
        r_max: T,
        threshold: T,
    ) -> Result<Self> {
        env.validate()?;
        channel.validate()?;
        check_positive("R_max", r_max)?;
        check_positive("far-field threshold", threshold)?;
        if !(density >= T::zero()) {
            return Err(Error::invalid(
                "density",
                format!("must be >= 0, got {density}"),
            ));
        }
        let mut field = Self {
            env,
            channel,
            start: r_max.as_f64().ln(),
            threshold: threshold.as_f64(),
            tables: Vec::new(),
            weak_mean: 0.0,
            fading: FadingSampler::new(&channel)?,
        };
        let density = density.as_f64();
        if density == 0.0 {
            return Ok(field);
        }
        let two_pi_density = 2.0 * std::f64::consts::PI * density;
        let mut weak = 0.0;
        for mode in LinkMode::BOTH {
            let mut cum = vec![0.0];
            let mut prev = field.densities(mode, field.start.exp(), two_pi_density);
            let mut i = 0usize;
            loop {
                i += 1;
                let s = field.start + GRID_STEP * i as f64;
                let cur = field.densities(mode, s.exp(), two_pi_density);
                let last = *cum.last().expect("nonempty");
                cum.push(last + 0.5 * GRID_STEP * (prev.0 + cur.0));
                weak += 0.5 * GRID_STEP * (prev.1 + cur.1);
                let settled = s - field.start > 3.0 * std::f64::consts::LN_10
                    && cur.0 < NEGLIGIBLE_DENSITY
                    && cur.0 <= prev.0;
                prev = cur;
                if settled || s >= MAX_LN_RADIUS {
                    break;
                }
            }
            let end = (field.start + GRID_STEP * i as f64).exp();
            weak += field.weak_tail(mode, end, two_pi_density);
            field.tables.push(ModeTable { mode, cum });
        }
        field.weak_mean = if weak.is_nan() { f64::INFINITY } else { weak };
        Ok(field)
    }

    fn local(&self, mode: LinkMode, r: f64) -> Local {
        let (r_t, h) = (T::lit(r), self.channel.h);
        let p_l = los_probability_unchecked(r_t, h, &self.env).as_f64();
        Local {
            prob: match mode {
                LinkMode::Los => p_l,
                LinkMode::Nlos => 1.0 - p_l,
            },
            loss: path_loss_unchecked(r_t, h, mode, &self.channel).as_f64(),
            mu: self.env.mu(mode).as_f64(),
            sigma: shadowing_sigma_unchecked(r_t, h, mode, &self.env).as_f64(),
        }
    }

    fn slope(&self) -> f64 {
        self.channel.shadowing.log_slope::<T>().as_f64()
    }

    /// `(strong count, weak mean power)` per unit `ln r` at radius `r`.
    fn densities(&self, mode: LinkMode, r: f64, two_pi_density: f64) -> (f64, f64) {
        let l = self.local(mode, r);
        if l.prob == 0.0 || l.loss == 0.0 {
            return (0.0, 0.0);
        }
        let area = two_pi_density * r * r * l.prob;
        let b = self.slope();
        // Strong iff b·u > ln(ε/L), i.e. u beyond `cut` on the side of sign(b).
        let cut = (self.threshold / l.loss).ln() / b;
        let sign = b.signum();
        let (strong, weak_frac) = if l.sigma > 0.0 {
            let tilted = l.mu + b * l.sigma * l.sigma;
            (
                norm_cdf(sign * (l.mu - cut) / l.sigma),
                norm_cdf(-sign * (tilted - cut) / l.sigma),
            )
        } else if sign * (l.mu - cut) > 0.0 {
            (1.0, 0.0)
        } else {
            (0.0, 1.0)
        };
        let mean_gain = (b * l.mu + 0.5 * b * b * l.sigma * l.sigma).exp();
        let weak = if weak_frac == 0.0 {
            0.0
        } else {
            area * l.loss * mean_gain * weak_frac
        };
        (area * strong, weak)
    }

    /// Mean power from `[end, ∞)` with every interferer weak and the
    /// elevation-dependent parameters frozen at `end`.
    fn weak_tail(&self, mode: LinkMode, end: f64, two_pi_density: f64) -> f64 {
        let l = self.local(mode, end);
        let alpha = self.channel.alpha(mode).as_f64();
        let b = self.slope();
        let h = self.channel.h.as_f64();
        let d2 = h * h + end * end;
        let mean_gain = (b * l.mu + 0.5 * b * b * l.sigma * l.sigma).exp();
        let at_unit = l.loss / d2.powf(-alpha / 2.0);
        two_pi_density * l.prob * at_unit * mean_gain * d2.powf(1.0 - alpha / 2.0) / (alpha - 2.0)
    }

    /// Mean number of individually sampled interferers per realization.
    pub fn expected_strong_count(&self) -> f64 {
        self.tables
            .iter()
            .map(|t| *t.cum.last().expect("nonempty"))
            .sum()
    }

    /// Deterministic mean power of the weak interferers.
    pub fn weak_mean(&self) -> T {
        T::from_f64(self.weak_mean).unwrap_or_else(T::infinity)
    }

    /// One draw of the total far-field interference power.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let mut total = self.weak_mean;
        for table in &self.tables {
            let expected = *table.cum.last().expect("nonempty");
            if expected <= 0.0 {
                continue;
            }
            let count = Poisson::new(expected)
                .map(|d| d.sample(rng) as u64)
                .unwrap_or(0);
            for _ in 0..count {
                total += self.sample_strong(table, expected, rng);
            }
        }
        T::from_f64(total).unwrap_or_else(T::infinity)
    }

    fn sample_strong<R: Rng + ?Sized>(&self, table: &ModeTable, expected: f64, rng: &mut R) -> f64 {
        let x = rng.random::<f64>() * expected;
        let i = table
            .cum
            .partition_point(|&c| c <= x)
            .clamp(1, table.cum.len() - 1)
            - 1;
        let width = table.cum[i + 1] - table.cum[i];
        let frac = if width > 0.0 {
            (x - table.cum[i]) / width
        } else {
            0.5
        };
        let r = (self.start + GRID_STEP * (i as f64 + frac.clamp(0.0, 1.0))).exp();

        let l = self.local(table.mode, r);
        let b = self.slope();
        let cut = (self.threshold / l.loss).ln() / b;
        let u = if l.sigma > 0.0 {
            let sign = b.signum();
            let z = sign * (l.mu - cut) / l.sigma;
            let q = norm_cdf(z);
            let y = norm_quantile((rng.random::<f64>() * q).max(f64::MIN_POSITIVE)).min(z);
            l.mu - sign * l.sigma * y
        } else {
            l.mu
        };
        let fading = self.fading.sample(table.mode, rng).as_f64();
        l.loss * (b * u).exp() * fading
    }
}
