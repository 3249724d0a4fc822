use crate::error::{Error, Result};
use crate::Scalar;

use super::{CapacityReport, ScenarioConfig};

/// Which denominator the energy-efficiency sum uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyForm {
    /// `k·A/(1 − e^{-m_c}) + ζR̄_c`, matched to the approximate capacity.
    Approximate,
    /// `k·A + ζR̄_c`.
    Exact,
}

/// Smallest `k_max ≥ 1` with `P{N > k_max} < tail` for `N ~ Poisson(m)`.
pub fn poisson_truncation<T: Scalar>(m: T, tail: T) -> usize {
    if m <= T::zero() {
        return 1;
    }
    let ln_m = m.ln();
    let mut ln_term = -m; // ln P{N = 0}
    let mut k = 0usize;
    loop {
        k += 1;
        ln_term = ln_term + ln_m - T::from_usize_lossy(k).ln();
        // Σ_{j>k} P{N=j} ≤ P{N=k+1} / (1 − m/(k+2)) once k + 2 > m.
        let next = ln_term + ln_m - T::from_usize_lossy(k + 1).ln();
        let ratio = m / T::from_usize_lossy(k + 2);
        if ratio < T::one() && next.exp() / (T::one() - ratio) < tail {
            return k;
        }
        if k > 100_000_000 {
            return k;
        }
    }
}

fn check_inputs<T: Scalar>(cfg: &ScenarioConfig<T>, report: &CapacityReport<T>) -> Result<()> {
    cfg.validate()?;
    if report.per_content.len() != cfg.library.len() {
        return Err(Error::invalid(
            "capacity",
            format!(
                "report has {} contents, scenario has {}",
                report.per_content.len(),
                cfg.library.len()
            ),
        ));
    }
    Ok(())
}

/// Energy efficiency with an explicit Poisson truncation `k_max` (or the
/// per-content automatic one when `None`).
pub fn energy_efficiency_truncated<T: Scalar>(
    cfg: &ScenarioConfig<T>,
    report: &CapacityReport<T>,
    form: EnergyForm,
    k_max: Option<usize>,
) -> Result<T> {
    check_inputs(cfg, report)?;
    let fixed = cfg.power.fixed_power(cfg.policy.cache_size);
    let zeta = cfg.power.zeta;
    let mut eta = T::zero();
    for (c, (&a, &rate)) in cfg
        .library
        .popularity
        .iter()
        .zip(&report.per_content)
        .enumerate()
    {
        let m = cfg.coop_mean(cfg.policy.probabilities[c]);
        if m == T::zero() || rate == T::zero() || a == T::zero() {
            continue;
        }
        let occupied = -(-m).exp_m1();
        let per_coop = match form {
            EnergyForm::Approximate => fixed / occupied,
            EnergyForm::Exact => fixed,
        };
        if per_coop == T::zero() && zeta == T::zero() {
            return Err(Error::invalid(
                "power",
                "zero fixed and dynamic power make the efficiency unbounded",
            ));
        }
        let k_max = k_max.unwrap_or_else(|| poisson_truncation(m, cfg.quadrature.k_max_tail));
        let ln_m = m.ln();
        let mut ln_pmf = -m;
        let mut inner = T::zero();
        for k in 1..=k_max {
            let kf = T::from_usize_lossy(k);
            ln_pmf = ln_pmf + ln_m - kf.ln();
            inner = inner + ln_pmf.exp() * rate / (kf * per_coop + zeta * rate);
        }
        eta = eta + a * inner;
    }
    Ok(eta)
}

/// Energy efficiency with the capacity-matched denominator
/// `k·(P + S·P_p + P_s)/(1 − e^{-m_c}) + ζR̄_c`.
pub fn energy_efficiency<T: Scalar>(
    cfg: &ScenarioConfig<T>,
    report: &CapacityReport<T>,
) -> Result<T> {
    energy_efficiency_truncated(cfg, report, EnergyForm::Approximate, None)
}

/// Energy efficiency with denominator `k·(P + S·P_p + P_s) + ζR̄_c`.
pub fn energy_efficiency_exact<T: Scalar>(
    cfg: &ScenarioConfig<T>,
    report: &CapacityReport<T>,
) -> Result<T> {
    energy_efficiency_truncated(cfg, report, EnergyForm::Exact, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::fixtures::scenario;
    use crate::analytics::PowerModel;
    use crate::channel::Environment;

    fn report(s: &ScenarioConfig<f64>, rate: f64) -> CapacityReport<f64> {
        let per_content: Vec<f64> = s
            .policy
            .probabilities
            .iter()
            .map(|&p| if p > 0.0 { rate * (1.0 + p) } else { 0.0 })
            .collect();
        let system = s
            .library
            .popularity
            .iter()
            .zip(&per_content)
            .map(|(a, r)| a * r)
            .sum();
        CapacityReport {
            coop_means: s
                .policy
                .probabilities
                .iter()
                .map(|&p| s.coop_mean(p))
                .collect(),
            per_content,
            system,
        }
    }

    #[test]
    fn truncation_bound_holds() {
        for m in [1e-3f64, 0.5, 3.0, 40.0] {
            let k = poisson_truncation(m, 1e-15);
            // Tail beyond k by direct summation.
            let mut ln_pmf = -m;
            let mut tail = 0.0;
            for j in 1..(k + 400) {
                ln_pmf += m.ln() - (j as f64).ln();
                if j > k {
                    tail += ln_pmf.exp();
                }
            }
            assert!(tail < 1e-15, "m = {m}, k = {k}, tail = {tail}");
        }
        assert_eq!(poisson_truncation(0.0, 1e-15), 1);
    }

    #[test]
    fn zero_fixed_power_reduces_to_hit_mass_over_zeta() {
        let mut s = scenario(Environment::sub_urban(), 3.0);
        s.power = PowerModel {
            transmit: 0.0,
            per_file: 0.0,
            static_power: 0.0,
            zeta: 2.0,
        };
        let r = report(&s, 0.05);
        let expected: f64 = s
            .library
            .popularity
            .iter()
            .zip(&s.policy.probabilities)
            .map(|(a, &p)| a * (1.0 - (-s.coop_mean(p)).exp()))
            .sum::<f64>()
            / 2.0;
        for form in [EnergyForm::Approximate, EnergyForm::Exact] {
            let eta = energy_efficiency_truncated(&s, &r, form, None).unwrap();
            assert!((eta - expected).abs() < 1e-10);
        }
        s.power.zeta = 0.0;
        assert!(energy_efficiency(&s, &r).is_err());
    }

    #[test]
    fn truncation_is_stable() {
        let s = scenario(Environment::urban(), 3.0);
        let r = report(&s, 0.07);
        for form in [EnergyForm::Approximate, EnergyForm::Exact] {
            let a = energy_efficiency_truncated(&s, &r, form, Some(50)).unwrap();
            let b = energy_efficiency_truncated(&s, &r, form, Some(200)).unwrap();
            let auto = energy_efficiency_truncated(&s, &r, form, None).unwrap();
            assert!((a - b).abs() < 1e-12);
            assert!((auto - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_rates_give_zero_efficiency() {
        let s = scenario(Environment::urban(), 3.0);
        let r = report(&s, 0.0);
        assert_eq!(energy_efficiency(&s, &r).unwrap(), 0.0);
        assert_eq!(energy_efficiency_exact(&s, &r).unwrap(), 0.0);
    }

    #[test]
    fn forms_agree_for_crowded_zones() {
        let mut s = scenario(Environment::urban(), 3.0);
        s.lambda = 2.0;
        let r = report(&s, 0.07);
        let approx = energy_efficiency(&s, &r).unwrap();
        let exact = energy_efficiency_exact(&s, &r).unwrap();
        assert!((approx - exact).abs() < s.quadrature.rel_tol * exact);
        assert!(approx <= exact);
    }

    #[test]
    fn mismatched_report_is_rejected() {
        let s = scenario(Environment::urban(), 3.0);
        let mut r = report(&s, 0.07);
        r.per_content.pop();
        assert!(energy_efficiency(&s, &r).is_err());
    }
}
