//! Monte Carlo stochastic-geometry simulator, independent of the quadrature
//! machinery in [`crate::analytics`]: it samples UAV positions, caches,
//! sub-channels and per-link channel states, and averages `log(1 + SIR)`.
//!
//! Trials draw from counter-based ChaCha substreams keyed by the master seed,
//! so estimates are bit-identical for any degree of parallelism.

mod estimate;
mod far_field;
mod network;

pub(crate) use estimate::substream;
pub use estimate::{
    estimate_capacity, estimate_ee, estimate_system_capacity, realize_sir, Simulator,
    SystemEstimate,
};
pub use far_field::FarField;
pub use network::{
    assign_caches, draw_links, link_powers, sample_network, sample_network_with, sir_from_powers,
    write_realization_csv, CacheSampler, LinkPowers, LinkSampler, LinkState, NetworkRealization,
    SirOutcome, Uav,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Scalar;

/// How a placement policy becomes per-UAV cache contents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheMode {
    /// One independent coin per content; cache size is `S` on average.
    #[default]
    Independent,
    /// Exactly `S` files per UAV with marginals `p_c` (systematic sampling).
    ExactS,
}

/// Which trials the capacity estimator draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Plain realizations; trials without cooperators contribute zero.
    Unconditioned,
    /// At least one cooperator per trial (zero-truncated Poisson count), with
    /// the mean rescaled by `1 − e^{-m_c}`.
    #[default]
    Conditioned,
}

/// Treatment of interferers beyond the sampling window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FarFieldMode {
    /// Window only.
    None,
    /// Strong far interferers sampled, the rest added at their mean.
    #[default]
    Completion,
}

macro_rules! string_enum {
    ($ty:ident, $key:literal, $($variant:ident => $name:literal),+) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($ty::$variant => $name),+ })
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($ty::$variant),)+
                    other => Err(Error::invalid(
                        $key,
                        format!("`{other}` (expected one of: {})", [$($name),+].join(", ")),
                    )),
                }
            }
        }
    };
}

string_enum!(CacheMode, "cache_mode", Independent => "independent", ExactS => "exact_s");
string_enum!(Sampling, "sampling", Unconditioned => "unconditioned", Conditioned => "conditioned");
string_enum!(FarFieldMode, "far_field", None => "none", Completion => "completion");

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig<T> {
    /// Sampling-window radius (km); `None` means `30·max(X_cop, H)`.
    pub r_max: Option<T>,
    /// Upper clamp on the SIR; `None` disables it.
    pub sir_cap: Option<T>,
    pub cache_mode: CacheMode,
    pub sampling: Sampling,
    pub far_field: FarFieldMode,
    /// Far interferers with `L·V` above this fraction of the LOS path loss at
    /// `max(X_cop, H)` are sampled individually.
    pub far_threshold: T,
}

impl<T: Scalar> Default for SimConfig<T> {
    fn default() -> Self {
        Self {
            r_max: None,
            sir_cap: Some(T::lit(1e6)),
            cache_mode: CacheMode::default(),
            sampling: Sampling::default(),
            far_field: FarFieldMode::default(),
            far_threshold: T::lit(1e-6),
        }
    }
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEstimate<T> {
    pub mean: T,
    pub std_err: T,
    pub n_trials: u64,
}

impl<T: Scalar> SimEstimate<T> {
    /// Half-width of the normal 95% confidence interval.
    pub fn half_width(&self) -> T {
        T::lit(1.96) * self.std_err
    }

    pub fn zero(n_trials: u64) -> Self {
        Self {
            mean: T::zero(),
            std_err: T::zero(),
            n_trials,
        }
    }

    /// Sample mean and standard error; summed in order so the result does not
    /// depend on how the samples were produced.
    pub fn from_samples(xs: &[T]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: T::nan(),
                std_err: T::nan(),
                n_trials: 0,
            };
        }
        let nf = T::from_usize_lossy(n);
        let mean = xs.iter().fold(T::zero(), |s, &x| s + x) / nf;
        let std_err = if n > 1 {
            let ss = xs
                .iter()
                .fold(T::zero(), |s, &x| s + (x - mean) * (x - mean));
            (ss / (nf - T::one()) / nf).sqrt()
        } else {
            T::nan()
        };
        Self {
            mean,
            std_err,
            n_trials: n as u64,
        }
    }

    pub fn scaled(&self, k: T) -> Self {
        Self {
            mean: self.mean * k,
            std_err: self.std_err * k.abs(),
            n_trials: self.n_trials,
        }
    }

    /// Whether `x` lies within `max(rel·|x|, k·SE)` of the mean.
    pub fn agrees_with(&self, x: T, rel: T, k: T) -> bool {
        (self.mean - x).abs() <= (rel * x.abs()).max(k * self.std_err)
    }
}
