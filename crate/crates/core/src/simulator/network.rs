use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::caching::PlacementPolicy;
use crate::channel::{
    los_probability_unchecked, path_loss_unchecked, shadowing_sigma_unchecked, ChannelConfig,
    Environment, FadingSampler, LinkMode,
};
use crate::error::{check_at_least, check_positive, Error, Result};
use crate::format::fmt_g;
use crate::Scalar;

use super::CacheMode;

/// Channel state of one UAV-to-user link, fixed for a realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState<T> {
    pub mode: LinkMode,
    pub path_loss: T,
    pub fading: T,
    pub shadowing: T,
}

impl<T: Scalar> LinkState<T> {
    pub fn gain(&self) -> T {
        self.path_loss * self.fading * self.shadowing
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Uav<T> {
    /// Horizontal position relative to the typical user, km.
    pub x: T,
    pub y: T,
    pub subchannel: usize,
    /// Cached content indices (0-based), ascending.
    pub cache: Vec<usize>,
    pub link: Option<LinkState<T>>,
}

impl<T: Scalar> Uav<T> {
    pub fn radius(&self) -> T {
        self.x.hypot(self.y)
    }

    pub fn caches(&self, c: usize) -> bool {
        self.cache.binary_search(&c).is_ok()
    }
}

/// UAVs inside a disc of radius `r_max` around the typical user.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization<T> {
    pub uavs: Vec<Uav<T>>,
    pub r_max: T,
    pub subchannels: usize,
    /// Sub-channel the typical user is served on.
    pub serving: usize,
    pub seed: u64,
    /// Interference power from outside the disc, added to every SIR.
    pub far_interference: T,
}

pub(crate) fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean > 0.0 {
        Poisson::new(mean)
            .map(|d| d.sample(rng) as usize)
            .unwrap_or(0)
    } else {
        0
    }
}

/// Uniform point in the annulus `inner ≤ r ≤ outer`.
pub(crate) fn uniform_in_annulus<T: Scalar, R: Rng + ?Sized>(
    inner: T,
    outer: T,
    rng: &mut R,
) -> (T, T) {
    let r2 = inner * inner + T::unit(rng) * (outer * outer - inner * inner);
    let angle = T::TAU() * T::unit(rng);
    let r = r2.sqrt();
    (r * angle.cos(), r * angle.sin())
}

pub(crate) fn new_uav<T: Scalar, R: Rng + ?Sized>(
    inner: T,
    outer: T,
    subchannels: usize,
    rng: &mut R,
) -> Uav<T> {
    let (x, y) = uniform_in_annulus(inner, outer, rng);
    Uav {
        x,
        y,
        subchannel: rng.random_range(0..subchannels),
        cache: Vec::new(),
        link: None,
    }
}

fn check_network_args<T: Scalar>(lambda: T, r_max: T, subchannels: usize) -> Result<()> {
    check_at_least("lambda", lambda, T::zero())?;
    check_positive("R_max", r_max)?;
    if subchannels == 0 {
        return Err(Error::invalid("B", "at least one sub-channel is required"));
    }
    Ok(())
}

/// Poisson(λπR²) UAVs uniform on the disc, each on a uniform sub-channel.
pub fn sample_network<T: Scalar>(
    lambda: T,
    r_max: T,
    subchannels: usize,
    seed: u64,
) -> Result<NetworkRealization<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = sample_network_with(lambda, r_max, subchannels, &mut rng)?;
    net.seed = seed;
    Ok(net)
}

/// [`sample_network`] drawing from a caller-owned stream; `seed` is left 0.
pub fn sample_network_with<T: Scalar, R: Rng + ?Sized>(
    lambda: T,
    r_max: T,
    subchannels: usize,
    rng: &mut R,
) -> Result<NetworkRealization<T>> {
    check_network_args(lambda, r_max, subchannels)?;
    let mean = (lambda * T::PI() * r_max * r_max).as_f64();
    let n = poisson_count(mean, rng);
    let uavs = (0..n)
        .map(|_| new_uav(T::zero(), r_max, subchannels, rng))
        .collect();
    Ok(NetworkRealization {
        uavs,
        r_max,
        subchannels,
        serving: rng.random_range(0..subchannels),
        seed: 0,
        far_interference: T::zero(),
    })
}

/// Draws per-UAV cache contents from a placement policy.
#[derive(Debug, Clone)]
pub struct CacheSampler<T> {
    mode: CacheMode,
    probabilities: Vec<T>,
    /// `cum[i] = Σ_{j<i} p_j`, rescaled so `cum[F] = S` exactly.
    cum: Vec<T>,
    cache_size: usize,
}

impl<T: Scalar> CacheSampler<T> {
    pub fn new(policy: &PlacementPolicy<T>, mode: CacheMode) -> Result<Self> {
        for &p in &policy.probabilities {
            if !(p >= T::zero() && p <= T::one()) {
                return Err(Error::invalid(
                    "p_c",
                    format!("must lie in [0, 1], got {p}"),
                ));
            }
        }
        let mut cum = Vec::with_capacity(policy.len() + 1);
        let mut acc = T::zero();
        cum.push(acc);
        for &p in &policy.probabilities {
            acc = acc + p;
            cum.push(acc);
        }
        let s = T::from_usize_lossy(policy.cache_size);
        if mode == CacheMode::ExactS {
            if (acc - s).abs() > T::lit(1e-9) * s.max(T::one()) {
                return Err(Error::invalid(
                    "policy",
                    format!("exact_s placement needs Σp_c = S = {s}, got {acc}"),
                ));
            }
            if acc > T::zero() {
                for x in &mut cum {
                    *x = *x * s / acc;
                }
            }
        }
        Ok(Self {
            mode,
            probabilities: policy.probabilities.clone(),
            cum,
            cache_size: policy.cache_size,
        })
    }

    pub fn mode(&self) -> CacheMode {
        self.mode
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        match self.mode {
            CacheMode::Independent => self.coins(rng),
            CacheMode::ExactS => self.systematic(T::unit(rng)),
        }
    }

    /// A cache drawn conditionally on whether it holds content `c`.
    pub fn draw_given<R: Rng + ?Sized>(&self, c: usize, holds: bool, rng: &mut R) -> Vec<usize> {
        match self.mode {
            CacheMode::Independent => {
                let mut cache = self.coins(rng);
                match (cache.binary_search(&c), holds) {
                    (Err(at), true) => cache.insert(at, c),
                    (Ok(at), false) => {
                        cache.remove(at);
                    }
                    _ => {}
                }
                cache
            }
            CacheMode::ExactS => {
                // Offsets selecting `c` form its (wrapped) interval, of measure p_c.
                let p = self.probabilities[c];
                let v = T::unit(rng);
                let t = if holds {
                    self.cum[c] + p * v
                } else {
                    self.cum[c + 1] + (T::one() - p) * v
                };
                self.systematic(t - t.floor())
            }
        }
    }

    fn coins<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        self.probabilities
            .iter()
            .enumerate()
            .filter(|&(_, &p)| T::unit(rng) < p)
            .map(|(c, _)| c)
            .collect()
    }

    /// Content `j` is cached iff some `offset + k`, `k < S`, falls in
    /// `[cum[j], cum[j+1])`; every interval is at most 1 wide, so exactly
    /// `S` distinct contents are chosen and content `j` with probability `p_j`.
    fn systematic(&self, offset: T) -> Vec<usize> {
        let last = self.probabilities.len();
        (0..self.cache_size)
            .map(|k| {
                let t = offset + T::from_usize_lossy(k);
                (self.cum.partition_point(|&x| x <= t).max(1) - 1).min(last - 1)
            })
            .collect()
    }
}

/// Fills every UAV's cache according to `policy`.
pub fn assign_caches<T: Scalar, R: Rng + ?Sized>(
    net: &mut NetworkRealization<T>,
    policy: &PlacementPolicy<T>,
    mode: CacheMode,
    rng: &mut R,
) -> Result<()> {
    let sampler = CacheSampler::new(policy, mode)?;
    for uav in &mut net.uavs {
        uav.cache = sampler.draw(rng);
    }
    Ok(())
}

/// Draws link mode, path loss, fading and shadowing for a UAV position.
#[derive(Debug, Clone)]
pub struct LinkSampler<T: Scalar> {
    pub env: Environment<T>,
    pub channel: ChannelConfig<T>,
    fading: FadingSampler<T>,
}

impl<T: Scalar> LinkSampler<T> {
    pub fn new(env: Environment<T>, channel: ChannelConfig<T>) -> Result<Self> {
        env.validate()?;
        channel.validate()?;
        Ok(Self {
            env,
            channel,
            fading: FadingSampler::new(&channel)?,
        })
    }

    pub fn draw<R: Rng + ?Sized>(&self, r: T, rng: &mut R) -> LinkState<T> {
        let h = self.channel.h;
        let mode = if T::unit(rng) < los_probability_unchecked(r, h, &self.env) {
            LinkMode::Los
        } else {
            LinkMode::Nlos
        };
        let sigma = shadowing_sigma_unchecked(r, h, mode, &self.env);
        let u = self.env.mu(mode) + sigma * T::standard_normal(rng);
        LinkState {
            mode,
            path_loss: path_loss_unchecked(r, h, mode, &self.channel),
            fading: self.fading.sample(mode, rng),
            shadowing: self.channel.shadowing.gain(u),
        }
    }
}

/// Draws the link state of every UAV that does not have one yet.
pub fn draw_links<T: Scalar, R: Rng + ?Sized>(
    net: &mut NetworkRealization<T>,
    links: &LinkSampler<T>,
    rng: &mut R,
) {
    for uav in &mut net.uavs {
        if uav.link.is_none() {
            uav.link = Some(links.draw(uav.radius(), rng));
        }
    }
}

/// Received powers at the typical user for a request of content `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkPowers<T> {
    pub signal: T,
    pub cooperators: usize,
    /// Same-sub-channel UAVs without `c`, anywhere in the window.
    pub uncached: T,
    /// Same-sub-channel UAVs holding `c` beyond the cooperation radius.
    pub cached_outside: T,
    pub far: T,
}

impl<T: Scalar> LinkPowers<T> {
    pub fn interference(&self) -> T {
        self.uncached + self.cached_outside + self.far
    }
}

/// Splits the received power by role; every link must already be drawn.
pub fn link_powers<T: Scalar>(
    net: &NetworkRealization<T>,
    c: usize,
    x_cop: T,
) -> Result<LinkPowers<T>> {
    let mut out = LinkPowers {
        signal: T::zero(),
        cooperators: 0,
        uncached: T::zero(),
        cached_outside: T::zero(),
        far: net.far_interference,
    };
    for (i, uav) in net.uavs.iter().enumerate() {
        let cached = uav.caches(c);
        let inside = uav.radius() <= x_cop;
        let cooperating = cached && inside;
        if !cooperating && uav.subchannel != net.serving {
            continue;
        }
        let gain = uav
            .link
            .ok_or_else(|| Error::invalid("realization", format!("UAV {i} has no link state")))?
            .gain();
        if cooperating {
            out.signal = out.signal + gain;
            out.cooperators += 1;
        } else if cached {
            out.cached_outside = out.cached_outside + gain;
        } else {
            out.uncached = out.uncached + gain;
        }
    }
    Ok(out)
}

/// Outcome of one SIR realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SirOutcome<T> {
    /// No UAV in the cooperation zone holds the content.
    EmptyCoop,
    Sir(T),
}

impl<T: Scalar> SirOutcome<T> {
    /// `log(1 + SIR)` in nats; zero without cooperators.
    pub fn rate(&self) -> T {
        match *self {
            SirOutcome::EmptyCoop => T::zero(),
            SirOutcome::Sir(s) => s.ln_1p(),
        }
    }
}

/// `SIR = signal / interference`, capped at `sir_cap` when given.
pub fn sir_from_powers<T: Scalar>(powers: &LinkPowers<T>, sir_cap: Option<T>) -> SirOutcome<T> {
    if powers.cooperators == 0 {
        return SirOutcome::EmptyCoop;
    }
    let interference = powers.interference();
    let sir = if interference > T::zero() {
        powers.signal / interference
    } else {
        T::infinity()
    };
    SirOutcome::Sir(match sir_cap {
        Some(cap) => sir.min(cap),
        None => sir,
    })
}

/// Writes one row per UAV: position, sub-channel, link state and cache.
pub fn write_realization_csv<T: Scalar, W: Write>(
    net: &NetworkRealization<T>,
    out: W,
) -> Result<()> {
    let io = |e: csv::Error| Error::Internal(format!("writing realization: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "uav",
        "x_km",
        "y_km",
        "r_km",
        "subchannel",
        "serving",
        "mode",
        "path_loss",
        "fading",
        "shadowing",
        "cache",
    ])
    .map_err(io)?;
    let g = |x: T| fmt_g(x.as_f64(), 12);
    for (i, uav) in net.uavs.iter().enumerate() {
        let (mode, pl, fad, sh) = match uav.link {
            Some(l) => (
                match l.mode {
                    LinkMode::Los => "los",
                    LinkMode::Nlos => "nlos",
                },
                g(l.path_loss),
                g(l.fading),
                g(l.shadowing),
            ),
            None => ("", String::new(), String::new(), String::new()),
        };
        let cache: Vec<String> = uav.cache.iter().map(|c| (c + 1).to_string()).collect();
        w.write_record([
            (i + 1).to_string(),
            g(uav.x),
            g(uav.y),
            g(uav.radius()),
            uav.subchannel.to_string(),
            (uav.subchannel == net.serving).to_string(),
            mode.to_string(),
            pl,
            fad,
            sh,
            cache.join(" "),
        ])
        .map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::Internal(format!("writing realization: {e}")))?;
    Ok(())
}
