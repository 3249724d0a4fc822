//! Air-to-ground channel: elevation-dependent LOS probability, path loss,
//! Nakagami fading, log-normal shadowing and the per-distance Laplace kernel
//! that feeds every interference integral.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{check_at_least, check_positive, Error, Result};
use crate::quadrature::HermiteRule;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkMode {
    Los,
    Nlos,
}

impl LinkMode {
    pub const BOTH: [LinkMode; 2] = [LinkMode::Los, LinkMode::Nlos];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvironmentKind {
    HighRise,
    DenseUrban,
    Urban,
    SubUrban,
    Custom,
}

impl EnvironmentKind {
    pub const PRESETS: [EnvironmentKind; 4] = [
        EnvironmentKind::HighRise,
        EnvironmentKind::DenseUrban,
        EnvironmentKind::Urban,
        EnvironmentKind::SubUrban,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EnvironmentKind::HighRise => "high_rise",
            EnvironmentKind::DenseUrban => "dense_urban",
            EnvironmentKind::Urban => "urban",
            EnvironmentKind::SubUrban => "sub_urban",
            EnvironmentKind::Custom => "custom",
        }
    }
}

impl fmt::Display for EnvironmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnvironmentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "high_rise" => Ok(EnvironmentKind::HighRise),
            "dense_urban" => Ok(EnvironmentKind::DenseUrban),
            "urban" => Ok(EnvironmentKind::Urban),
            "sub_urban" => Ok(EnvironmentKind::SubUrban),
            "custom" => Ok(EnvironmentKind::Custom),
            other => Err(Error::invalid(
                "env",
                format!(
                    "unknown environment `{other}` (expected high_rise, dense_urban, urban, sub_urban or custom)"
                ),
            )),
        }
    }
}

/// A2G propagation parameters. Angles enter in degrees, losses in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Environment<T> {
    pub kind: EnvironmentKind,
    pub phi: T,
    pub psi: T,
    pub mu_l: T,
    pub mu_n: T,
    pub a_l: T,
    pub a_n: T,
    pub c_l: T,
    pub c_n: T,
}

// (φ, ψ, μ_L, μ_N, a_L, a_N, c_L, c_N)
const TABLE: [(EnvironmentKind, [f64; 8]); 4] = [
    (
        EnvironmentKind::HighRise,
        [27.23, 0.08, 1.5, 29.0, 7.37, 37.08, 0.03, 0.03],
    ),
    (
        EnvironmentKind::DenseUrban,
        [12.08, 0.11, 1.0, 20.0, 8.96, 35.97, 0.04, 0.04],
    ),
    (
        EnvironmentKind::Urban,
        [9.61, 0.16, 0.6, 17.0, 10.39, 29.6, 0.05, 0.03],
    ),
    (
        EnvironmentKind::SubUrban,
        [4.88, 0.43, 0.0, 18.0, 11.25, 32.17, 0.06, 0.03],
    ),
];

impl<T: Scalar> Environment<T> {
    /// One of the four tabulated environments; `None` for `Custom`.
    pub fn preset(kind: EnvironmentKind) -> Option<Self> {
        let (_, v) = TABLE.iter().find(|(k, _)| *k == kind)?;
        Some(Self {
            kind,
            phi: T::lit(v[0]),
            psi: T::lit(v[1]),
            mu_l: T::lit(v[2]),
            mu_n: T::lit(v[3]),
            a_l: T::lit(v[4]),
            a_n: T::lit(v[5]),
            c_l: T::lit(v[6]),
            c_n: T::lit(v[7]),
        })
    }

    pub fn high_rise() -> Self {
        Self::preset(EnvironmentKind::HighRise).expect("tabulated")
    }

    pub fn dense_urban() -> Self {
        Self::preset(EnvironmentKind::DenseUrban).expect("tabulated")
    }

    pub fn urban() -> Self {
        Self::preset(EnvironmentKind::Urban).expect("tabulated")
    }

    pub fn sub_urban() -> Self {
        Self::preset(EnvironmentKind::SubUrban).expect("tabulated")
    }

    pub fn by_name(name: &str) -> Result<Self> {
        let kind: EnvironmentKind = name.parse()?;
        Self::preset(kind).ok_or_else(|| {
            Error::invalid(
                "env",
                "`custom` environments must list their parameters explicitly",
            )
        })
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("phi", self.phi)?;
        check_positive("psi", self.psi)?;
        check_at_least("a_L", self.a_l, T::zero())?;
        check_at_least("a_N", self.a_n, T::zero())?;
        check_at_least("c_L", self.c_l, T::zero())?;
        check_at_least("c_N", self.c_n, T::zero())?;
        if !(self.mu_l.is_finite() && self.mu_n.is_finite()) {
            return Err(Error::invalid("mu", "excess losses must be finite"));
        }
        Ok(())
    }

    pub fn mu(&self, mode: LinkMode) -> T {
        match mode {
            LinkMode::Los => self.mu_l,
            LinkMode::Nlos => self.mu_n,
        }
    }

    pub fn sigma_amplitude(&self, mode: LinkMode) -> T {
        match mode {
            LinkMode::Los => self.a_l,
            LinkMode::Nlos => self.a_n,
        }
    }

    pub fn sigma_decay(&self, mode: LinkMode) -> T {
        match mode {
            LinkMode::Los => self.c_l,
            LinkMode::Nlos => self.c_n,
        }
    }

    /// LOS probability as the horizontal distance grows without bound.
    pub fn far_los_probability(&self) -> T {
        T::one() / (T::one() + self.phi * (self.psi * self.phi).exp())
    }
}

/// How a shadowing draw `U` (dB) maps to a power gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShadowingConvention {
    /// `U` is an excess loss in dB: `V = 10^{-U/10}`.
    #[default]
    DbLoss,
    /// `V = 10^{U}` taken verbatim.
    Literal,
}

impl ShadowingConvention {
    #[inline]
    pub fn gain<T: Scalar>(self, u: T) -> T {
        match self {
            ShadowingConvention::DbLoss => T::lit(10.0).powf(-u / T::lit(10.0)),
            ShadowingConvention::Literal => T::lit(10.0).powf(u),
        }
    }

    /// Natural-log slope `b` with `V = exp(b·U)`.
    #[inline]
    pub(crate) fn log_slope<T: Scalar>(self) -> T {
        match self {
            ShadowingConvention::DbLoss => -T::LN_10() / T::lit(10.0),
            ShadowingConvention::Literal => T::LN_10(),
        }
    }

    /// `E[V]` for `U ~ Normal(mu, sigma²)`.
    pub fn mean_gain<T: Scalar>(self, mu: T, sigma: T) -> T {
        let b = self.log_slope::<T>();
        (b * mu + T::lit(0.5) * b * b * sigma * sigma).exp()
    }
}

impl fmt::Display for ShadowingConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShadowingConvention::DbLoss => "db_loss",
            ShadowingConvention::Literal => "literal",
        })
    }
}

impl FromStr for ShadowingConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "db_loss" => Ok(ShadowingConvention::DbLoss),
            "literal" => Ok(ShadowingConvention::Literal),
            other => Err(Error::invalid(
                "shadowing_convention",
                format!("`{other}` (expected db_loss or literal)"),
            )),
        }
    }
}

/// Path-loss, fading and geometry constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig<T> {
    pub alpha_l: T,
    pub alpha_n: T,
    pub k_l: T,
    pub k_n: T,
    pub wbar_l: T,
    pub wbar_n: T,
    /// UAV altitude, km.
    pub h: T,
    pub shadowing: ShadowingConvention,
}

impl<T: Scalar> Default for ChannelConfig<T> {
    fn default() -> Self {
        Self {
            alpha_l: T::lit(2.09),
            alpha_n: T::lit(4.0),
            k_l: T::one(),
            k_n: T::one(),
            wbar_l: T::lit(10.0),
            wbar_n: T::lit(2.0),
            h: T::one(),
            shadowing: ShadowingConvention::DbLoss,
        }
    }
}

impl<T: Scalar> ChannelConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let two = T::lit(2.0);
        if !(self.alpha_l.is_finite() && self.alpha_l > two) {
            return Err(Error::invalid(
                "alpha_L",
                format!("must be > 2, got {}", self.alpha_l),
            ));
        }
        if !(self.alpha_n.is_finite() && self.alpha_n > two) {
            return Err(Error::invalid(
                "alpha_N",
                format!("must be > 2, got {}", self.alpha_n),
            ));
        }
        check_positive("K_L", self.k_l)?;
        check_positive("K_N", self.k_n)?;
        check_positive("Wbar_N", self.wbar_n)?;
        check_positive("Wbar_L", self.wbar_l)?;
        if self.wbar_l < self.wbar_n {
            return Err(Error::invalid(
                "Wbar_L",
                format!("must be >= Wbar_N ({}), got {}", self.wbar_n, self.wbar_l),
            ));
        }
        check_positive("H", self.h)
    }

    pub fn alpha(&self, mode: LinkMode) -> T {
        match mode {
            LinkMode::Los => self.alpha_l,
            LinkMode::Nlos => self.alpha_n,
        }
    }

    pub fn intercept(&self, mode: LinkMode) -> T {
        match mode {
            LinkMode::Los => self.k_l,
            LinkMode::Nlos => self.k_n,
        }
    }

    pub fn wbar(&self, mode: LinkMode) -> T {
        match mode {
            LinkMode::Los => self.wbar_l,
            LinkMode::Nlos => self.wbar_n,
        }
    }
}

fn check_geometry<T: Scalar>(r: T, h: T) -> Result<()> {
    check_at_least("r", r, T::zero())?;
    check_positive("H", h)
}

/// Elevation angle in degrees; 90° directly overhead.
#[inline]
pub fn elevation_deg<T: Scalar>(r: T, h: T) -> T {
    h.atan2(r).to_degrees()
}

#[inline]
pub(crate) fn los_probability_unchecked<T: Scalar>(r: T, h: T, env: &Environment<T>) -> T {
    let theta = elevation_deg(r, h);
    T::one() / (T::one() + env.phi * (-env.psi * (theta - env.phi)).exp())
}

pub fn los_probability<T: Scalar>(r: T, h: T, env: &Environment<T>) -> Result<T> {
    check_geometry(r, h)?;
    Ok(los_probability_unchecked(r, h, env))
}

/// Probability of `mode`; the two modes sum to one.
pub fn mode_probability<T: Scalar>(r: T, h: T, mode: LinkMode, env: &Environment<T>) -> Result<T> {
    let p_l = los_probability(r, h, env)?;
    Ok(match mode {
        LinkMode::Los => p_l,
        LinkMode::Nlos => T::one() - p_l,
    })
}

#[inline]
pub(crate) fn path_loss_unchecked<T: Scalar>(
    r: T,
    h: T,
    mode: LinkMode,
    cfg: &ChannelConfig<T>,
) -> T {
    let d2 = h * h + r * r;
    cfg.intercept(mode) * d2.powf(-cfg.alpha(mode) / T::lit(2.0))
}

/// `K_n · d^{-α_n}` with `d` the 3-D UAV-to-user distance.
pub fn path_loss<T: Scalar>(r: T, h: T, mode: LinkMode, cfg: &ChannelConfig<T>) -> Result<T> {
    check_at_least("r", r, T::zero())?;
    check_at_least("H", h, T::zero())?;
    if r == T::zero() && h == T::zero() {
        return Err(Error::invalid("r", "zero 3-D distance is singular"));
    }
    Ok(path_loss_unchecked(r, h, mode, cfg))
}

#[inline]
pub(crate) fn shadowing_sigma_unchecked<T: Scalar>(
    r: T,
    h: T,
    mode: LinkMode,
    env: &Environment<T>,
) -> T {
    env.sigma_amplitude(mode) * (-env.sigma_decay(mode) * elevation_deg(r, h)).exp()
}

/// Shadowing standard deviation in dB.
pub fn shadowing_sigma<T: Scalar>(r: T, h: T, mode: LinkMode, env: &Environment<T>) -> Result<T> {
    check_geometry(r, h)?;
    Ok(shadowing_sigma_unchecked(r, h, mode, env))
}

/// Unit-mean Nakagami power gain, `Gamma(W̄, 1/W̄)`.
pub fn sample_fading<T: Scalar, R: Rng + ?Sized>(
    mode: LinkMode,
    cfg: &ChannelConfig<T>,
    rng: &mut R,
) -> Result<T> {
    let w = cfg.wbar(mode);
    let dist = T::gamma_dist(w, T::one() / w)
        .ok_or_else(|| Error::invalid("Wbar", format!("fading shape must be > 0, got {w}")))?;
    Ok(dist.sample(rng))
}

/// Pre-built fading distributions for both modes.
#[derive(Debug, Clone)]
pub struct FadingSampler<T: Scalar> {
    los: T::GammaDist,
    nlos: T::GammaDist,
}

impl<T: Scalar> FadingSampler<T> {
    pub fn new(cfg: &ChannelConfig<T>) -> Result<Self> {
        let make = |w: T| {
            T::gamma_dist(w, T::one() / w)
                .ok_or_else(|| Error::invalid("Wbar", format!("fading shape must be > 0, got {w}")))
        };
        Ok(Self {
            los: make(cfg.wbar_l)?,
            nlos: make(cfg.wbar_n)?,
        })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, mode: LinkMode, rng: &mut R) -> T {
        match mode {
            LinkMode::Los => self.los.sample(rng),
            LinkMode::Nlos => self.nlos.sample(rng),
        }
    }
}

/// Log-normal shadowing power gain at horizontal distance `r`.
pub fn sample_shadowing<T: Scalar, R: Rng + ?Sized>(
    r: T,
    h: T,
    mode: LinkMode,
    env: &Environment<T>,
    convention: ShadowingConvention,
    rng: &mut R,
) -> Result<T> {
    let sigma = shadowing_sigma(r, h, mode, env)?;
    let u = env.mu(mode) + sigma * T::standard_normal(rng);
    Ok(convention.gain(u))
}

/// `1 − (1 + x/w)^{-w}` without cancellation for small `x`.
#[inline]
pub(crate) fn gamma_laplace_complement<T: Scalar>(x: T, w: T) -> T {
    -(-w * (x / w).ln_1p()).exp_m1()
}

/// Per-distance kernel of the interference Laplace functional,
/// `Σ_n p_n(z) · E_u[1 − (1 + v·L_n(z)·g(u)/W̄_n)^{-W̄_n}]`, with the shadowing
/// expectation evaluated by Gauss–Hermite quadrature.
#[derive(Debug, Clone)]
pub struct LaplaceKernel<T> {
    pub env: Environment<T>,
    pub channel: ChannelConfig<T>,
    rule: HermiteRule<T>,
}

impl<T: Scalar> LaplaceKernel<T> {
    pub fn new(
        env: Environment<T>,
        channel: ChannelConfig<T>,
        hermite_nodes: usize,
    ) -> Result<Self> {
        if hermite_nodes < 2 {
            return Err(Error::Config(format!(
                "laplace kernel needs at least 2 Gauss-Hermite nodes, got {hermite_nodes}"
            )));
        }
        env.validate()?;
        channel.validate()?;
        Ok(Self {
            env,
            channel,
            rule: HermiteRule::new(hermite_nodes)?,
        })
    }

    pub fn hermite_nodes(&self) -> usize {
        self.rule.len()
    }

    /// Contribution of a single mode, already weighted by its probability.
    #[inline]
    pub fn mode_term(&self, z: T, v: T, mode: LinkMode) -> T {
        let h = self.channel.h;
        let p_l = los_probability_unchecked(z, h, &self.env);
        let p = match mode {
            LinkMode::Los => p_l,
            LinkMode::Nlos => T::one() - p_l,
        };
        if p == T::zero() || v == T::zero() {
            return T::zero();
        }
        let scale = v * path_loss_unchecked(z, h, mode, &self.channel);
        let w = self.channel.wbar(mode);
        let sigma = shadowing_sigma_unchecked(z, h, mode, &self.env);
        let conv = self.channel.shadowing;
        let e = self.rule.normal_expectation(self.env.mu(mode), sigma, |u| {
            gamma_laplace_complement(scale * conv.gain(u), w)
        });
        p * e
    }

    #[inline]
    pub fn eval(&self, z: T, v: T) -> T {
        self.mode_term(z, v, LinkMode::Los) + self.mode_term(z, v, LinkMode::Nlos)
    }

    /// Linearized kernel `v·Σ_n p_n L_n E[V_n]`, exact to first order in `v·L`.
    pub fn linear_term(&self, z: T, v: T, mode: LinkMode) -> T {
        let h = self.channel.h;
        let p_l = los_probability_unchecked(z, h, &self.env);
        let p = match mode {
            LinkMode::Los => p_l,
            LinkMode::Nlos => T::one() - p_l,
        };
        let sigma = shadowing_sigma_unchecked(z, h, mode, &self.env);
        let mean_gain = self.channel.shadowing.mean_gain(self.env.mu(mode), sigma);
        v * p * path_loss_unchecked(z, h, mode, &self.channel) * mean_gain
    }
}

/// One-shot kernel evaluation; builds the quadrature rule on every call.
pub fn laplace_kernel<T: Scalar>(
    z: T,
    v: T,
    env: &Environment<T>,
    cfg: &ChannelConfig<T>,
    hermite_nodes: usize,
) -> Result<T> {
    check_at_least("z", z, T::zero())?;
    check_at_least("v", v, T::zero())?;
    let kernel = LaplaceKernel::new(*env, *cfg, hermite_nodes)?;
    Ok(kernel.eval(z, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn presets_reproduce_table_bit_exactly() {
        let hr: Environment<f64> = Environment::high_rise();
        assert_eq!(
            [hr.phi, hr.psi, hr.mu_l, hr.mu_n, hr.a_l, hr.a_n, hr.c_l, hr.c_n],
            [27.23, 0.08, 1.5, 29.0, 7.37, 37.08, 0.03, 0.03]
        );
        let du: Environment<f64> = Environment::dense_urban();
        assert_eq!(
            [du.phi, du.psi, du.mu_l, du.mu_n, du.a_l, du.a_n, du.c_l, du.c_n],
            [12.08, 0.11, 1.0, 20.0, 8.96, 35.97, 0.04, 0.04]
        );
        let ur: Environment<f64> = Environment::urban();
        assert_eq!(
            [ur.phi, ur.psi, ur.mu_l, ur.mu_n, ur.a_l, ur.a_n, ur.c_l, ur.c_n],
            [9.61, 0.16, 0.6, 17.0, 10.39, 29.6, 0.05, 0.03]
        );
        let su: Environment<f64> = Environment::sub_urban();
        assert_eq!(
            [su.phi, su.psi, su.mu_l, su.mu_n, su.a_l, su.a_n, su.c_l, su.c_n],
            [4.88, 0.43, 0.0, 18.0, 11.25, 32.17, 0.06, 0.03]
        );
        for kind in EnvironmentKind::PRESETS {
            let env = Environment::<f64>::by_name(kind.as_str()).unwrap();
            assert_eq!(env.kind, kind);
            env.validate().unwrap();
        }
        assert!(Environment::<f64>::by_name("custom").is_err());
        assert!(Environment::<f64>::by_name("rural").is_err());
    }

    #[test]
    fn los_probability_examples() {
        let hr = Environment::<f64>::high_rise();
        // 45° elevation
        let p = los_probability(1.0, 1.0, &hr).unwrap();
        let expected = 1.0 / (1.0 + 27.23 * (-0.08f64 * (45.0 - 27.23)).exp());
        assert_relative_eq!(p, expected, max_relative = 1e-12);
        assert!((p - 0.132).abs() < 5e-4);

        let far = los_probability(1e12, 1.0, &hr).unwrap();
        assert_relative_eq!(far, hr.far_los_probability(), max_relative = 1e-9);
        assert!((far - 0.00414).abs() < 5e-5);

        let su = Environment::<f64>::sub_urban();
        let top = los_probability(0.0, 1.0, &su).unwrap();
        let expected = 1.0 / (1.0 + 4.88 * (-0.43f64 * (90.0 - 4.88)).exp());
        assert_relative_eq!(top, expected, max_relative = 1e-14);
        // complement φ·e^{-ψ(90-φ)} / (1 + ...) is about 6.2e-16 for sub-urban
        let nlos = 4.88 * (-0.43f64 * (90.0 - 4.88)).exp();
        assert!((nlos / (1.0 + nlos) - 6.2e-16).abs() < 1e-17);
        assert!(1.0 - top < 1e-15);
    }

    #[test]
    fn los_probability_rejects_bad_input() {
        let env = Environment::<f64>::urban();
        assert!(los_probability(-1.0, 1.0, &env).is_err());
        assert!(los_probability(f64::NAN, 1.0, &env).is_err());
        assert!(los_probability(1.0, 0.0, &env).is_err());
        assert!(los_probability(f64::INFINITY, 1.0, &env).is_err());
    }

    #[test]
    fn mode_probabilities_sum_to_one() {
        for kind in EnvironmentKind::PRESETS {
            let env = Environment::<f64>::preset(kind).unwrap();
            for &r in &[0.0, 0.3, 1.0, 7.0, 300.0] {
                let pl = mode_probability(r, 1.3, LinkMode::Los, &env).unwrap();
                let pn = mode_probability(r, 1.3, LinkMode::Nlos, &env).unwrap();
                assert_eq!(pl + pn, 1.0);
            }
        }
    }

    #[test]
    fn path_loss_examples() {
        let mut cfg = ChannelConfig::<f64>::default();
        assert_eq!(path_loss(0.0, 1.0, LinkMode::Los, &cfg).unwrap(), 1.0);
        assert_eq!(path_loss(0.0, 1.0, LinkMode::Nlos, &cfg).unwrap(), 1.0);
        assert_relative_eq!(
            path_loss(4.0, 3.0, LinkMode::Nlos, &cfg).unwrap(),
            0.0016,
            max_relative = 1e-14
        );
        let los = path_loss(4.0, 3.0, LinkMode::Los, &cfg).unwrap();
        assert_relative_eq!(los, 5f64.powf(-2.09), max_relative = 1e-14);
        assert!((los - 0.0346).abs() < 1e-4);
        cfg.k_n = 2.5;
        assert_relative_eq!(
            path_loss(4.0, 3.0, LinkMode::Nlos, &cfg).unwrap(),
            0.004,
            max_relative = 1e-14
        );
        assert!(path_loss(0.0, 0.0, LinkMode::Los, &cfg).is_err());
    }

    #[test]
    fn shadowing_sigma_examples() {
        let su = Environment::<f64>::sub_urban();
        let s = shadowing_sigma(0.0, 1.0, LinkMode::Los, &su).unwrap();
        assert_relative_eq!(s, 11.25 * (-0.06f64 * 90.0).exp(), max_relative = 1e-14);
        assert!((s - 0.0508).abs() < 1e-4);

        let hr = Environment::<f64>::high_rise();
        let s = shadowing_sigma(2.0, 2.0, LinkMode::Nlos, &hr).unwrap();
        assert!((s - 9.61).abs() < 5e-3);

        let mut zero = su;
        zero.a_l = 0.0;
        for r in [0.0, 1.0, 100.0] {
            assert_eq!(shadowing_sigma(r, 1.0, LinkMode::Los, &zero).unwrap(), 0.0);
        }
    }

    #[test]
    fn geometry_monotonicity() {
        let cfg = ChannelConfig::<f64>::default();
        for kind in EnvironmentKind::PRESETS {
            let env = Environment::<f64>::preset(kind).unwrap();
            let rs: Vec<f64> = (0..60)
                .map(|i| 0.05 * i as f64 * (1.0 + i as f64))
                .collect();
            for w in rs.windows(2) {
                let (a, b) = (w[0], w[1]);
                assert!(
                    los_probability(b, 1.0, &env).unwrap() < los_probability(a, 1.0, &env).unwrap()
                );
                for mode in LinkMode::BOTH {
                    assert!(
                        path_loss(b, 1.0, mode, &cfg).unwrap()
                            < path_loss(a, 1.0, mode, &cfg).unwrap()
                    );
                    if env.sigma_amplitude(mode) > 0.0 {
                        assert!(
                            shadowing_sigma(b, 1.0, mode, &env).unwrap()
                                > shadowing_sigma(a, 1.0, mode, &env).unwrap()
                        );
                    }
                }
            }
            for w in [0.2f64, 0.5, 1.0, 2.0, 4.0].windows(2) {
                assert!(
                    los_probability(1.5, w[1], &env).unwrap()
                        > los_probability(1.5, w[0], &env).unwrap()
                );
                for mode in LinkMode::BOTH {
                    assert!(
                        path_loss(1.5, w[1], mode, &cfg).unwrap()
                            < path_loss(1.5, w[0], mode, &cfg).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn channel_config_validation() {
        let ok = ChannelConfig::<f64>::default();
        ok.validate().unwrap();
        let mut bad = ok;
        bad.alpha_n = 2.0;
        assert!(bad.validate().is_err());
        let mut bad = ok;
        bad.wbar_l = 1.0;
        assert!(bad.validate().is_err());
        let mut bad = ok;
        bad.k_l = 0.0;
        assert!(bad.validate().is_err());
        let mut bad = ok;
        bad.h = -1.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn unit_shape_fading_is_exponential() {
        let mut cfg = ChannelConfig::<f64>::default();
        cfg.wbar_n = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| sample_fading(LinkMode::Nlos, &cfg, &mut rng).unwrap())
            .collect();
        // P(W > 1) = e^{-1} for Exp(1)
        let frac = draws.iter().filter(|&&w| w > 1.0).count() as f64 / n as f64;
        let p = (-1f64).exp();
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((frac - p).abs() < 3.0 * se, "{frac} vs {p}");
    }

    #[test]
    fn degenerate_shadowing_is_deterministic() {
        let mut env = Environment::<f64>::urban();
        env.a_n = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let v = sample_shadowing(
                2.0,
                1.0,
                LinkMode::Nlos,
                &env,
                ShadowingConvention::DbLoss,
                &mut rng,
            )
            .unwrap();
            assert_relative_eq!(v, 10f64.powf(-1.7), max_relative = 1e-14);
        }
        let v = sample_shadowing(
            2.0,
            1.0,
            LinkMode::Nlos,
            &env,
            ShadowingConvention::Literal,
            &mut rng,
        )
        .unwrap();
        assert_relative_eq!(v, 1e17, max_relative = 1e-12);
    }

    #[test]
    fn kernel_limits() {
        let env = Environment::<f64>::sub_urban();
        let cfg = ChannelConfig::<f64>::default();
        for z in [0.0, 0.5, 3.0] {
            assert_eq!(laplace_kernel(z, 0.0, &env, &cfg, 20).unwrap(), 0.0);
            let sat = laplace_kernel(z, 1e9, &env, &cfg, 20).unwrap();
            assert!((0.999..=1.0).contains(&sat), "z = {z}: {sat}");
        }
        assert!(matches!(
            laplace_kernel(1.0, 1.0, &env, &cfg, 1),
            Err(Error::Config(_))
        ));
        assert!(laplace_kernel(-1.0, 1.0, &env, &cfg, 20).is_err());
    }

    #[test]
    fn kernel_is_monotone_in_v_and_bounded() {
        let cfg = ChannelConfig::<f64>::default();
        for kind in EnvironmentKind::PRESETS {
            let env = Environment::<f64>::preset(kind).unwrap();
            let k = LaplaceKernel::new(env, cfg, 20).unwrap();
            for z in [0.0, 0.2, 1.0, 3.0, 10.0, 100.0, 1e4] {
                let mut prev = 0.0;
                for i in 0..60 {
                    let v = 10f64.powf(-6.0 + 0.25 * i as f64);
                    let val = k.eval(z, v);
                    assert!((0.0..=1.0).contains(&val));
                    assert!(
                        val >= prev - 1e-15,
                        "kind {kind} z {z} v {v}: {val} < {prev}"
                    );
                    prev = val;
                }
            }
        }
    }

    #[test]
    fn mean_gain_matches_lognormal_moment() {
        let sigma = 9.61;
        let b = 10f64.ln() / 10.0;
        assert_relative_eq!(
            ShadowingConvention::DbLoss.mean_gain(0.0, sigma),
            ((sigma * b).powi(2) / 2.0).exp(),
            max_relative = 1e-14
        );
        assert!((ShadowingConvention::DbLoss.mean_gain(0.0f64, sigma) - 11.56).abs() < 0.05);
    }
}
