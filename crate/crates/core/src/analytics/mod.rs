//! Semi-analytic evaluation of the cooperative caching network: Laplace
//! functional factors of the interference and cooperative signal, per-content
//! and system capacity, and energy efficiency.

mod capacity;
mod energy;
mod laplace;

pub use capacity::{content_capacity, system_capacity, CapacityReport};
pub use energy::{
    energy_efficiency, energy_efficiency_exact, energy_efficiency_truncated, poisson_truncation,
    EnergyForm,
};
pub use laplace::{t1, t2, t3, t3_exact, LaplaceFactors, RadialIntegrals};

pub use crate::quadrature::gauss_hermite_nodes;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::caching::{ContentLibrary, PlacementPolicy};
use crate::channel::{ChannelConfig, Environment};
use crate::error::{check_at_least, check_positive, Error, Result};
use crate::Scalar;

/// Power budget of one UAV (W) and the rate-proportional dynamic slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerModel<T> {
    /// Transmit power `P`.
    pub transmit: T,
    /// Caching power per stored file `P_p`.
    pub per_file: T,
    /// Static circuit power `P_s`.
    pub static_power: T,
    /// Dynamic power per unit rate `ζ`.
    pub zeta: T,
}

impl<T: Scalar> Default for PowerModel<T> {
    fn default() -> Self {
        Self {
            transmit: T::one(),
            per_file: T::lit(0.1),
            static_power: T::one(),
            zeta: T::one(),
        }
    }
}

impl<T: Scalar> PowerModel<T> {
    pub fn validate(&self) -> Result<()> {
        check_at_least("P", self.transmit, T::zero())?;
        check_at_least("P_p", self.per_file, T::zero())?;
        check_at_least("P_s", self.static_power, T::zero())?;
        check_at_least("zeta", self.zeta, T::zero())
    }

    /// `P + S·P_p + P_s`, the fixed power drawn by one cooperating UAV.
    pub fn fixed_power(&self, cache_size: usize) -> T {
        self.transmit + T::from_usize_lossy(cache_size) * self.per_file + self.static_power
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig<T> {
    pub hermite_nodes: usize,
    /// Relative tolerance of every adaptive integral and truncation check.
    pub rel_tol: T,
    /// Lower end of the rate integral; the `[0, v_min]` piece is taken to first order.
    pub v_min: T,
    pub v_max: T,
    /// Radial truncation (km); the remainder is added from the linearized kernel when `far_tail` is set.
    pub z_max: T,
    pub far_tail: bool,
    /// Poisson tail mass below which the energy-efficiency sum is truncated.
    pub k_max_tail: T,
}

impl<T: Scalar> Default for QuadratureConfig<T> {
    fn default() -> Self {
        Self {
            hermite_nodes: 40,
            rel_tol: T::lit(1e-5),
            v_min: T::lit(1e-8),
            v_max: T::lit(1e12),
            z_max: T::lit(1e9),
            far_tail: true,
            k_max_tail: T::lit(1e-15),
        }
    }
}

impl<T: Scalar> QuadratureConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.hermite_nodes < 2 {
            return Err(Error::Config(format!(
                "hermite_nodes must be >= 2, got {}",
                self.hermite_nodes
            )));
        }
        check_positive("rel_tol", self.rel_tol)?;
        check_positive("v_min", self.v_min)?;
        check_positive("v_max", self.v_max)?;
        if self.v_max <= self.v_min {
            return Err(Error::invalid("v_max", "must exceed v_min"));
        }
        check_positive("z_max", self.z_max)?;
        check_positive("k_max_tail", self.k_max_tail)
    }
}

/// Form of the cooperative-signal factor used inside the rate integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoopTerm {
    /// `1 − E[e^{-vS}]` over the in-zone caching process; exact because an
    /// empty cooperator set has zero signal.
    #[default]
    Exact,
    /// `P{N > 0} · (1 − E[e^{-vS}])`, see [`t3`].
    Factored,
}

impl fmt::Display for CoopTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoopTerm::Exact => "exact",
            CoopTerm::Factored => "factored",
        })
    }
}

impl FromStr for CoopTerm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(CoopTerm::Exact),
            "factored" => Ok(CoopTerm::Factored),
            other => Err(Error::invalid(
                "coop_term",
                format!("`{other}` (expected exact or factored)"),
            )),
        }
    }
}

/// One deployment scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig<T> {
    /// UAV density per km².
    pub lambda: T,
    /// Cooperation radius, km.
    pub x_cop: T,
    /// Number of sub-channels `B`; interferers are thinned by `1/B`.
    pub subchannels: usize,
    pub library: ContentLibrary<T>,
    pub policy: PlacementPolicy<T>,
    pub env: Environment<T>,
    pub channel: ChannelConfig<T>,
    pub power: PowerModel<T>,
    pub quadrature: QuadratureConfig<T>,
    pub coop_term: CoopTerm,
}

impl<T: Scalar> ScenarioConfig<T> {
    pub fn validate(&self) -> Result<()> {
        check_at_least("lambda", self.lambda, T::zero())?;
        check_at_least("X_cop", self.x_cop, T::zero())?;
        if self.subchannels < 1 {
            return Err(Error::invalid("B", "at least one sub-channel is required"));
        }
        if self.policy.len() != self.library.len() {
            return Err(Error::invalid(
                "policy",
                format!(
                    "policy covers {} contents but the library has {}",
                    self.policy.len(),
                    self.library.len()
                ),
            ));
        }
        self.policy.validate(T::lit(1e-9))?;
        self.env.validate()?;
        self.channel.validate()?;
        self.power.validate()?;
        self.quadrature.validate()
    }

    /// Density of same-sub-channel interferers, `λ/B`.
    pub fn interferer_density(&self) -> T {
        self.lambda / T::from_usize_lossy(self.subchannels)
    }

    /// `β = πλX_cop²`, the mean UAV count inside the cooperation zone.
    pub fn zone_mean(&self) -> T {
        T::PI() * self.lambda * self.x_cop * self.x_cop
    }

    /// Mean number of cooperators for a content cached with probability `p`.
    pub fn coop_mean(&self, p: T) -> T {
        self.zone_mean() * p
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::caching::solve_rcp;

    /// λ = 1e-3, F = 20, S = 5, κ = 0.8, B = 64, H = 1, RCP placement.
    pub fn scenario(env: Environment<f64>, x_cop: f64) -> ScenarioConfig<f64> {
        let library = ContentLibrary::zipf(20, 0.8).unwrap();
        let beta = std::f64::consts::PI * 1e-3 * x_cop * x_cop;
        let policy = solve_rcp(&library.popularity, 5, beta, 1e-10).unwrap();
        ScenarioConfig {
            lambda: 1e-3,
            x_cop,
            subchannels: 64,
            library,
            policy,
            env,
            channel: ChannelConfig::default(),
            power: PowerModel::default(),
            quadrature: QuadratureConfig::default(),
            coop_term: CoopTerm::Exact,
        }
    }
}
