use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analytics::ScenarioConfig;
use crate::channel::LinkMode;
use crate::error::{check_positive, Error, Result};
use crate::Scalar;

use super::far_field::FarField;
use super::network::{
    draw_links, link_powers, new_uav, poisson_count, sir_from_powers, CacheSampler, LinkSampler,
    NetworkRealization, SirOutcome,
};
use super::{FarFieldMode, Sampling, SimConfig, SimEstimate};

const CAPACITY_STREAM: u64 = 1;
const EE_STREAM: u64 = 2;

/// Independent stream number `trial` of the generator keyed by
/// `(seed, purpose, index)`.
pub(crate) fn substream(seed: u64, purpose: u64, index: u64, trial: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&purpose.to_le_bytes());
    key[16..24].copy_from_slice(&index.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}

/// Poisson(m) conditioned on being positive.
fn zero_truncated_poisson<R: Rng + ?Sized>(m: f64, rng: &mut R) -> usize {
    if m > 20.0 {
        loop {
            let k = poisson_count(m, rng);
            if k > 0 {
                return k;
            }
        }
    }
    let u: f64 = rng.random();
    let mut p = m / m.exp_m1();
    let (mut k, mut cum) = (1usize, p);
    while u > cum && p > 0.0 {
        k += 1;
        p *= m / k as f64;
        cum += p;
    }
    k
}

/// Per-content and popularity-weighted capacity estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemEstimate<T> {
    pub system: SimEstimate<T>,
    pub per_content: Vec<SimEstimate<T>>,
}

/// A scenario prepared for repeated sampling.
#[derive(Debug, Clone)]
pub struct Simulator<T: Scalar> {
    scenario: ScenarioConfig<T>,
    config: SimConfig<T>,
    r_max: T,
    links: LinkSampler<T>,
    caches: CacheSampler<T>,
    far: Option<FarField<T>>,
}

impl<T: Scalar> Simulator<T> {
    pub fn new(scenario: ScenarioConfig<T>, config: SimConfig<T>) -> Result<Self> {
        scenario.validate()?;
        let h = scenario.channel.h;
        let reach = scenario.x_cop.max(h);
        let r_max = config.r_max.unwrap_or(T::lit(30.0) * reach);
        check_positive("R_max", r_max)?;
        if r_max < scenario.x_cop {
            return Err(Error::invalid(
                "R_max",
                format!(
                    "window {r_max} km is smaller than X_cop = {} km",
                    scenario.x_cop
                ),
            ));
        }
        if let Some(cap) = config.sir_cap {
            check_positive("sir_cap", cap)?;
        }
        check_positive("far_threshold", config.far_threshold)?;

        let far = match config.far_field {
            FarFieldMode::Completion if scenario.lambda > T::zero() => {
                let ch = &scenario.channel;
                let reference = ch.intercept(LinkMode::Los)
                    * (h * h + reach * reach).powf(-ch.alpha(LinkMode::Los) / T::lit(2.0));
                Some(FarField::new(
                    scenario.env,
                    scenario.channel,
                    scenario.interferer_density(),
                    r_max,
                    config.far_threshold * reference,
                )?)
            }
            _ => None,
        };
        Ok(Self {
            links: LinkSampler::new(scenario.env, scenario.channel)?,
            caches: CacheSampler::new(&scenario.policy, config.cache_mode)?,
            scenario,
            config,
            r_max,
            far,
        })
    }

    pub fn scenario(&self) -> &ScenarioConfig<T> {
        &self.scenario
    }

    pub fn config(&self) -> &SimConfig<T> {
        &self.config
    }

    /// Resolved sampling-window radius, km.
    pub fn r_max(&self) -> T {
        self.r_max
    }

    pub fn far_field(&self) -> Option<&FarField<T>> {
        self.far.as_ref()
    }

    pub fn links(&self) -> &LinkSampler<T> {
        &self.links
    }

    fn check_content(&self, c: usize) -> Result<()> {
        if c >= self.scenario.library.len() {
            return Err(Error::invalid(
                "c",
                format!(
                    "content index {c} outside library of {}",
                    self.scenario.library.len()
                ),
            ));
        }
        Ok(())
    }

    /// One realization for a request of content `c`, with caches, link states
    /// and far-field interference drawn. In conditioned mode at least one
    /// in-zone UAV holds `c`.
    ///
    /// The cooperation zone (with the serving sub-channel) and the rest of the
    /// window draw from two generators seeded from `rng`, so windows of
    /// different size share their in-zone draws.
    pub fn sample_realization<R: Rng + ?Sized>(
        &self,
        c: usize,
        rng: &mut R,
    ) -> Result<NetworkRealization<T>> {
        self.check_content(c)?;
        let s = &self.scenario;
        let b = s.subchannels;
        let mut inner = ChaCha8Rng::seed_from_u64(rng.random());
        let mut outer = ChaCha8Rng::seed_from_u64(rng.random());
        let rng = &mut inner;
        let serving = rng.random_range(0..b);
        let zone = s.zone_mean();
        let mut uavs = Vec::new();
        let mut add = |inner: T, outer_r: T, cache: Vec<usize>, rng: &mut ChaCha8Rng| {
            let mut u = new_uav(inner, outer_r, b, rng);
            u.cache = cache;
            u.link = Some(self.links.draw(u.radius(), rng));
            uavs.push(u);
        };
        match self.config.sampling {
            Sampling::Unconditioned => {
                for _ in 0..poisson_count(zone.as_f64(), rng) {
                    let cache = self.caches.draw(rng);
                    add(T::zero(), s.x_cop, cache, rng);
                }
            }
            Sampling::Conditioned => {
                let m = s.coop_mean(s.policy.probabilities[c]);
                if !(m > T::zero()) {
                    return Err(Error::invalid(
                        "sampling",
                        "conditioned sampling needs a positive mean cooperator count",
                    ));
                }
                for _ in 0..zero_truncated_poisson(m.as_f64(), rng) {
                    let cache = self.caches.draw_given(c, true, rng);
                    add(T::zero(), s.x_cop, cache, rng);
                }
                for _ in 0..poisson_count((zone - m).as_f64(), rng) {
                    let cache = self.caches.draw_given(c, false, rng);
                    add(T::zero(), s.x_cop, cache, rng);
                }
            }
        }
        let ring = s.lambda * T::PI() * (self.r_max * self.r_max - s.x_cop * s.x_cop);
        for _ in 0..poisson_count(ring.as_f64(), &mut outer) {
            let cache = self.caches.draw(&mut outer);
            add(s.x_cop, self.r_max, cache, &mut outer);
        }
        let far_interference = match &self.far {
            Some(far) => far.sample(&mut outer),
            None => T::zero(),
        };
        Ok(NetworkRealization {
            uavs,
            r_max: self.r_max,
            subchannels: b,
            serving,
            seed: 0,
            far_interference,
        })
    }

    /// Draws any missing link states, then evaluates the SIR for content `c`.
    pub fn realize_sir<R: Rng + ?Sized>(
        &self,
        net: &mut NetworkRealization<T>,
        c: usize,
        rng: &mut R,
    ) -> Result<SirOutcome<T>> {
        self.check_content(c)?;
        draw_links(net, &self.links, rng);
        let powers = link_powers(net, c, self.scenario.x_cop)?;
        Ok(sir_from_powers(&powers, self.config.sir_cap))
    }

    fn capacity_trial(&self, c: usize, seed: u64, trial: u64) -> T {
        let mut rng = substream(seed, CAPACITY_STREAM, c as u64, trial);
        let net = self
            .sample_realization(c, &mut rng)
            .expect("content and sampling mode checked");
        let powers = link_powers(&net, c, self.scenario.x_cop).expect("links drawn");
        sir_from_powers(&powers, self.config.sir_cap).rate()
    }

    /// `E[1_{coop>0}·log(1 + SIR_c)]` in nats for content `c` (0-based).
    pub fn estimate_capacity(&self, c: usize, n_trials: u64, seed: u64) -> Result<SimEstimate<T>> {
        self.check_content(c)?;
        if n_trials == 0 {
            return Err(Error::invalid("n_trials", "at least one trial is required"));
        }
        let m = self
            .scenario
            .coop_mean(self.scenario.policy.probabilities[c]);
        if m == T::zero() {
            return Ok(SimEstimate::zero(n_trials));
        }
        let samples: Vec<T> = (0..n_trials)
            .into_par_iter()
            .map(|t| self.capacity_trial(c, seed, t))
            .collect();
        let est = SimEstimate::from_samples(&samples);
        Ok(match self.config.sampling {
            Sampling::Unconditioned => est,
            Sampling::Conditioned => est.scaled(-(-m).exp_m1()),
        })
    }

    /// `Σ_c a_c R̄_c`; contents sharing a caching probability share one
    /// estimate, and standard errors combine in quadrature across groups.
    pub fn estimate_system_capacity(&self, n_trials: u64, seed: u64) -> Result<SystemEstimate<T>> {
        let s = &self.scenario;
        let mut groups: Vec<(T, usize, T)> = Vec::new(); // (p, first content, Σ a)
        let mut slot = Vec::with_capacity(s.library.len());
        for (c, (&p, &a)) in s
            .policy
            .probabilities
            .iter()
            .zip(&s.library.popularity)
            .enumerate()
        {
            match groups.iter().position(|g| g.0 == p) {
                Some(i) => {
                    groups[i].2 = groups[i].2 + a;
                    slot.push(i);
                }
                None => {
                    groups.push((p, c, a));
                    slot.push(groups.len() - 1);
                }
            }
        }
        let estimates = groups
            .iter()
            .map(|&(_, c, _)| self.estimate_capacity(c, n_trials, seed))
            .collect::<Result<Vec<_>>>()?;
        let mean = groups
            .iter()
            .zip(&estimates)
            .fold(T::zero(), |acc, (g, e)| acc + g.2 * e.mean);
        let var = groups
            .iter()
            .zip(&estimates)
            .fold(T::zero(), |acc, (g, e)| {
                acc + (g.2 * e.std_err) * (g.2 * e.std_err)
            });
        Ok(SystemEstimate {
            system: SimEstimate {
                mean,
                std_err: var.sqrt(),
                n_trials,
            },
            per_content: slot.iter().map(|&i| estimates[i]).collect(),
        })
    }

    /// Empirical energy efficiency with denominator `k·(P + S·P_p + P_s) + ζR̄_c`:
    /// every trial draws a cooperator count `k ~ Poisson(m_c)` per content.
    pub fn estimate_ee(
        &self,
        capacities: &[T],
        n_trials: u64,
        seed: u64,
    ) -> Result<SimEstimate<T>> {
        let s = &self.scenario;
        if capacities.len() != s.library.len() {
            return Err(Error::invalid(
                "capacities",
                format!(
                    "{} values for a library of {}",
                    capacities.len(),
                    s.library.len()
                ),
            ));
        }
        if n_trials == 0 {
            return Err(Error::invalid("n_trials", "at least one trial is required"));
        }
        let fixed = s.power.fixed_power(s.policy.cache_size);
        let zeta = s.power.zeta;
        let terms: Vec<(T, T, f64)> = s
            .library
            .popularity
            .iter()
            .zip(capacities)
            .zip(&s.policy.probabilities)
            .map(|((&a, &r), &p)| (a, r, s.coop_mean(p).as_f64()))
            .filter(|&(a, r, m)| a > T::zero() && r > T::zero() && m > 0.0)
            .collect();
        if terms.is_empty() {
            return Ok(SimEstimate::zero(n_trials));
        }
        if fixed == T::zero() && zeta == T::zero() {
            return Err(Error::invalid(
                "power",
                "zero fixed and dynamic power make the efficiency unbounded",
            ));
        }
        let samples: Vec<T> = (0..n_trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = substream(seed, EE_STREAM, 0, t);
                terms.iter().fold(T::zero(), |acc, &(a, r, m)| {
                    let k = poisson_count(m, &mut rng);
                    if k == 0 {
                        acc
                    } else {
                        acc + a * r / (T::from_usize_lossy(k) * fixed + zeta * r)
                    }
                })
            })
            .collect();
        Ok(SimEstimate::from_samples(&samples))
    }
}

/// Monte Carlo estimate of `R̄_c` (nats) for content `c` (0-based).
pub fn estimate_capacity<T: Scalar>(
    cfg: &ScenarioConfig<T>,
    sim: &SimConfig<T>,
    c: usize,
    n_trials: u64,
    seed: u64,
) -> Result<SimEstimate<T>> {
    Simulator::new(cfg.clone(), *sim)?.estimate_capacity(c, n_trials, seed)
}

/// Monte Carlo estimate of `R̄ = Σ_c a_c R̄_c` (nats).
pub fn estimate_system_capacity<T: Scalar>(
    cfg: &ScenarioConfig<T>,
    sim: &SimConfig<T>,
    n_trials: u64,
    seed: u64,
) -> Result<SystemEstimate<T>> {
    Simulator::new(cfg.clone(), *sim)?.estimate_system_capacity(n_trials, seed)
}

/// Monte Carlo energy efficiency for given per-content rates (nats).
pub fn estimate_ee<T: Scalar>(
    cfg: &ScenarioConfig<T>,
    sim: &SimConfig<T>,
    capacities: &[T],
    n_trials: u64,
    seed: u64,
) -> Result<SimEstimate<T>> {
    Simulator::new(cfg.clone(), *sim)?.estimate_ee(capacities, n_trials, seed)
}

/// SIR of content `c` on a realization with caches assigned; missing link
/// states are drawn from `rng`.
pub fn realize_sir<T: Scalar, R: Rng + ?Sized>(
    net: &mut NetworkRealization<T>,
    c: usize,
    cfg: &ScenarioConfig<T>,
    sim: &SimConfig<T>,
    rng: &mut R,
) -> Result<SirOutcome<T>> {
    let links = LinkSampler::new(cfg.env, cfg.channel)?;
    draw_links(net, &links, rng);
    let powers = link_powers(net, c, cfg.x_cop)?;
    Ok(sir_from_powers(&powers, sim.sir_cap))
}
