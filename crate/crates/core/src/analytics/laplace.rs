use crate::channel::{LaplaceKernel, LinkMode};
use crate::error::{check_at_least, Result};
use crate::quadrature::{integrate, Tolerance};
use crate::Scalar;

use super::ScenarioConfig;

/// Radial integrals `∫ z·k(z, v) dz` of the Laplace kernel inside and outside
/// the cooperation zone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialIntegrals<T> {
    /// Over `[0, X_cop]`.
    pub inner: T,
    /// Over `[X_cop, ∞)`.
    pub outer: T,
}

impl<T: Scalar> RadialIntegrals<T> {
    pub fn whole_plane(&self) -> T {
        self.inner + self.outer
    }
}

/// Evaluates the Laplace-functional factors of one scenario.
///
/// The three factors only depend on the caching probability through scalar
/// densities, so one pair of radial integrals per `v` serves every content.
#[derive(Debug, Clone)]
pub struct LaplaceFactors<T> {
    kernel: LaplaceKernel<T>,
    x_cop: T,
    lambda: T,
    lambda_i: T,
    z_max: T,
    far_tail: bool,
    tol: Tolerance<T>,
}

impl<T: Scalar> LaplaceFactors<T> {
    pub fn new(cfg: &ScenarioConfig<T>) -> Result<Self> {
        cfg.validate()?;
        let q = &cfg.quadrature;
        Ok(Self {
            kernel: LaplaceKernel::new(cfg.env, cfg.channel, q.hermite_nodes)?,
            x_cop: cfg.x_cop,
            lambda: cfg.lambda,
            lambda_i: cfg.interferer_density(),
            z_max: q.z_max,
            far_tail: q.far_tail,
            tol: Tolerance {
                rel: q.rel_tol * T::lit(0.01),
                abs: T::min_positive_value(),
                max_intervals: 4000,
            },
        })
    }

    pub fn kernel(&self) -> &LaplaceKernel<T> {
        &self.kernel
    }

    fn zone_mean(&self, p: T) -> T {
        T::PI() * self.lambda * self.x_cop * self.x_cop * p
    }

    /// `∫_a^b z·k(z, v) dz` on a finite range, switching to `s = ln z`
    /// beyond the altitude so slowly decaying tails stay well resolved.
    fn radial(&self, v: T, a: T, b: T) -> Result<T> {
        if b <= a || v == T::zero() {
            return Ok(T::zero());
        }
        let k = &self.kernel;
        let pivot = k.channel.h.max(a).min(b);
        let mut total = T::zero();
        if pivot > a {
            total = total + integrate(|z| z * k.eval(z, v), a, pivot, self.tol)?.value;
        }
        if b > pivot {
            let est = integrate(
                |s: T| {
                    let z = s.exp();
                    z * z * k.eval(z, v)
                },
                pivot.ln(),
                b.ln(),
                self.tol,
            )?;
            total = total + est.value;
        }
        Ok(total)
    }

    /// `∫_z0^∞ z·k(z, v) dz` with the kernel linearized in `v·L` and the
    /// distance-dependent parameters frozen at `z0`.
    fn linear_tail(&self, v: T, z0: T) -> T {
        let ch = &self.kernel.channel;
        let d2 = ch.h * ch.h + z0 * z0;
        LinkMode::BOTH
            .iter()
            .map(|&mode| {
                let alpha = ch.alpha(mode);
                let at_unit = self.kernel.linear_term(z0, v, mode) / d2.powf(-alpha / T::lit(2.0));
                at_unit * d2.powf(T::one() - alpha / T::lit(2.0)) / (alpha - T::lit(2.0))
            })
            .filter(|x| x.is_finite())
            .fold(T::zero(), |s, x| s + x)
    }

    pub fn inner(&self, v: T) -> Result<T> {
        self.radial(v, T::zero(), self.x_cop.min(self.z_max))
    }

    pub fn outer(&self, v: T) -> Result<T> {
        if v == T::zero() {
            return Ok(T::zero());
        }
        let start = self.x_cop;
        let body = if start < self.z_max {
            self.radial(v, start, self.z_max)?
        } else {
            T::zero()
        };
        let tail = if self.far_tail {
            self.linear_tail(v, start.max(self.z_max))
        } else {
            T::zero()
        };
        Ok(body + tail)
    }

    pub fn radial_integrals(&self, v: T) -> Result<RadialIntegrals<T>> {
        check_at_least("v", v, T::zero())?;
        if self.lambda == T::zero() {
            return Ok(RadialIntegrals {
                inner: T::zero(),
                outer: T::zero(),
            });
        }
        Ok(RadialIntegrals {
            inner: self.inner(v)?,
            outer: self.outer(v)?,
        })
    }

    /// Interference from non-caching UAVs over the whole plane.
    pub fn t1_from(&self, j: &RadialIntegrals<T>, p: T) -> T {
        (-T::lit(2.0) * T::PI() * (T::one() - p) * self.lambda_i * j.whole_plane()).exp()
    }

    /// Interference from caching UAVs outside the cooperation zone.
    pub fn t2_from(&self, j: &RadialIntegrals<T>, p: T) -> T {
        (-T::lit(2.0) * T::PI() * p * self.lambda_i * j.outer).exp()
    }

    /// `P{N > 0} · (1 − E[e^{-vS}])`, cooperators on the serving channel.
    pub fn t3_from(&self, j: &RadialIntegrals<T>, p: T) -> T {
        let occupied = -(-self.zone_mean(p)).exp_m1();
        occupied * self.t3_exact_from(j, p)
    }

    /// `1 − E[e^{-vS}]`.
    pub fn t3_exact_from(&self, j: &RadialIntegrals<T>, p: T) -> T {
        -(-T::lit(2.0) * T::PI() * p * self.lambda * j.inner).exp_m1()
    }
}

fn check_p<T: Scalar>(p: T) -> Result<()> {
    if !(p >= T::zero() && p <= T::one()) {
        return Err(crate::Error::invalid(
            "p_c",
            format!("must lie in [0, 1], got {p}"),
        ));
    }
    Ok(())
}

/// Laplace transform of the interference from UAVs lacking the content:
/// `exp{−2π(1−p)λ_I ∫_0^∞ z·k(z, v) dz}` with `λ_I = λ/B`.
pub fn t1<T: Scalar>(v: T, cfg: &ScenarioConfig<T>, p: T) -> Result<T> {
    check_p(p)?;
    let f = LaplaceFactors::new(cfg)?;
    Ok(f.t1_from(&f.radial_integrals(v)?, p))
}

/// Laplace transform of the interference from caching UAVs beyond `X_cop`.
pub fn t2<T: Scalar>(v: T, cfg: &ScenarioConfig<T>, p: T) -> Result<T> {
    check_p(p)?;
    let f = LaplaceFactors::new(cfg)?;
    Ok(f.t2_from(&f.radial_integrals(v)?, p))
}

/// Cooperative-signal factor in factored form,
/// `(1 − e^{-m}) · (1 − exp{−2πpλ ∫_0^{X_cop} z·k(z, v) dz})`, `m = πλX_cop²p`.
/// Cooperators are not sub-channel thinned.
pub fn t3<T: Scalar>(v: T, cfg: &ScenarioConfig<T>, p: T) -> Result<T> {
    check_p(p)?;
    let f = LaplaceFactors::new(cfg)?;
    Ok(f.t3_from(&f.radial_integrals(v)?, p))
}

/// `E[1_{N>0}(1 − e^{-vS})] = 1 − exp{−2πpλ ∫_0^{X_cop} z·k(z, v) dz}`.
pub fn t3_exact<T: Scalar>(v: T, cfg: &ScenarioConfig<T>, p: T) -> Result<T> {
    check_p(p)?;
    let f = LaplaceFactors::new(cfg)?;
    Ok(f.t3_exact_from(&f.radial_integrals(v)?, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::fixtures::scenario;
    use crate::channel::Environment;

    #[test]
    fn trivial_values() {
        let s = scenario(Environment::sub_urban(), 3.0);
        assert_eq!(t1(0.0, &s, 0.3).unwrap(), 1.0);
        assert_eq!(t2(0.0, &s, 0.3).unwrap(), 1.0);
        assert_eq!(t3(0.0, &s, 0.3).unwrap(), 0.0);
        assert_eq!(t1(1.0, &s, 1.0).unwrap(), 1.0);
        assert_eq!(t2(1.0, &s, 0.0).unwrap(), 1.0);
        assert_eq!(t3(1.0, &s, 0.0).unwrap(), 0.0);
        assert!(t1(1.0, &s, 1.5).is_err());
        assert!(t2(-1.0, &s, 0.5).is_err());
    }

    #[test]
    fn zone_beyond_truncation_leaves_no_outer_interference() {
        let mut s = scenario(Environment::sub_urban(), 3.0);
        s.quadrature.far_tail = false;
        s.quadrature.z_max = 2.0;
        assert!((t2(1.0, &s, 0.7).unwrap() - 1.0).abs() < s.quadrature.rel_tol);
        s.quadrature.z_max = 3.0;
        assert!((t2(1.0, &s, 0.7).unwrap() - 1.0).abs() < s.quadrature.rel_tol);
    }

    #[test]
    fn cooperative_factor_saturates() {
        let s = scenario(Environment::sub_urban(), 3.0);
        for p in [0.2, 1.0] {
            let m = s.coop_mean(p);
            let occupied = 1.0 - (-m).exp();
            let printed = t3(1e9, &s, p).unwrap();
            assert!((printed - occupied * occupied).abs() < 1e-3 * occupied * occupied);
            let exact = t3_exact(1e9, &s, p).unwrap();
            assert!((exact - occupied).abs() < 1e-3 * occupied);
        }
    }

    #[test]
    fn factors_are_monotone_in_v() {
        for env in [Environment::high_rise(), Environment::sub_urban()] {
            let s = scenario(env, 1.0);
            let f = LaplaceFactors::new(&s).unwrap();
            let p = 0.4;
            let mut prev = (1.0, 1.0, 0.0);
            for i in 0..=40 {
                let v = 10f64.powf(-8.0 + 0.5 * i as f64);
                let j = f.radial_integrals(v).unwrap();
                let cur = (f.t1_from(&j, p), f.t2_from(&j, p), f.t3_from(&j, p));
                assert!(cur.0 <= prev.0 * (1.0 + 1e-9) && cur.1 <= prev.1 * (1.0 + 1e-9));
                assert!(cur.2 >= prev.2 * (1.0 - 1e-9));
                let product = cur.0 * cur.1 * cur.2;
                assert!((0.0..1.0).contains(&product));
                prev = cur;
            }
        }
    }

    #[test]
    fn whole_plane_splits_at_the_zone_edge() {
        let s = scenario(Environment::urban(), 2.0);
        let f = LaplaceFactors::new(&s).unwrap();
        let j = f.radial_integrals(0.5).unwrap();
        assert!(j.inner > 0.0 && j.outer > 0.0);
        assert_eq!(j.whole_plane(), j.inner + j.outer);
        let mut empty = s.clone();
        empty.lambda = 0.0;
        let f0 = LaplaceFactors::new(&empty).unwrap();
        assert_eq!(f0.radial_integrals(0.5).unwrap().whole_plane(), 0.0);
    }
}
