use std::cell::RefCell;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_vec, Tolerance};
use crate::Scalar;

use super::{CoopTerm, LaplaceFactors, ScenarioConfig};

/// Per-content and popularity-weighted average rates, in nats per channel use.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityReport<T> {
    pub per_content: Vec<T>,
    pub system: T,
    /// `m_c = πλX_cop²p_c`.
    pub coop_means: Vec<T>,
}

impl<T: Scalar> CapacityReport<T> {
    pub fn system_bits(&self) -> T {
        self.system / T::LN_2()
    }

    pub fn per_content_bits(&self) -> Vec<T> {
        self.per_content.iter().map(|&r| r / T::LN_2()).collect()
    }
}

/// `∫_0^∞ v⁻¹·T1·T2·T3 dv` for each caching probability in `ps`.
///
/// The integral runs over `s = ln v` on `[ln v_min, ln v_max]`; the `[0, v_min]`
/// piece is `T(v_min)` to first order since the cooperative factor is `O(v)`.
/// Extending the range to `2·v_max` must change no component by more than
/// `rel_tol`.
fn rate_integrals<T: Scalar>(cfg: &ScenarioConfig<T>, ps: &[T]) -> Result<Vec<T>> {
    if ps.is_empty() {
        return Ok(Vec::new());
    }
    if cfg.lambda == T::zero() || ps.iter().all(|&p| p == T::zero()) {
        cfg.validate()?;
        return Ok(vec![T::zero(); ps.len()]);
    }
    let factors = LaplaceFactors::new(cfg)?;
    let q = &cfg.quadrature;
    let failure: RefCell<Option<Error>> = RefCell::new(None);

    let integrand = |s: T, out: &mut [T]| {
        let v = s.exp();
        match factors.radial_integrals(v) {
            Ok(j) => {
                for (o, &p) in out.iter_mut().zip(ps) {
                    let coop = match cfg.coop_term {
                        CoopTerm::Exact => factors.t3_exact_from(&j, p),
                        CoopTerm::Factored => factors.t3_from(&j, p),
                    };
                    *o = if coop == T::zero() {
                        T::zero()
                    } else {
                        factors.t1_from(&j, p) * factors.t2_from(&j, p) * coop
                    };
                }
            }
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                out.iter_mut().for_each(|o| *o = T::zero());
            }
        }
    };

    let tol = Tolerance {
        rel: q.rel_tol * T::lit(0.1),
        abs: T::min_positive_value(),
        max_intervals: 4000,
    };
    let (lo, hi) = (q.v_min.ln(), q.v_max.ln());
    let mut low_piece = vec![T::zero(); ps.len()];
    integrand(lo, &mut low_piece);
    let main = integrate_vec(integrand, lo, hi, ps.len(), tol)?;
    let extra = integrate_vec(integrand, hi, hi + T::LN_2(), ps.len(), tol)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }

    let mut out = Vec::with_capacity(ps.len());
    for i in 0..ps.len() {
        let value = low_piece[i] + main[i].value;
        if extra[i].value > q.rel_tol * value.abs() {
            return Err(Error::convergence(
                "content capacity",
                format!(
                    "doubling v_max = {} adds {} to {} (rel_tol {})",
                    q.v_max, extra[i].value, value, q.rel_tol
                ),
            ));
        }
        out.push(value);
    }
    Ok(out)
}

/// Average rate `R̄_c` of content `c` (0-based rank), nats per channel use.
pub fn content_capacity<T: Scalar>(cfg: &ScenarioConfig<T>, c: usize) -> Result<T> {
    cfg.validate()?;
    let p = *cfg.policy.probabilities.get(c).ok_or_else(|| {
        Error::invalid(
            "c",
            format!("content index {c} outside library of {}", cfg.library.len()),
        )
    })?;
    Ok(rate_integrals(cfg, &[p])?[0])
}

/// `R̄ = Σ_c a_c R̄_c`; contents sharing a caching probability share one integral.
pub fn system_capacity<T: Scalar>(cfg: &ScenarioConfig<T>) -> Result<CapacityReport<T>> {
    cfg.validate()?;
    let probs = &cfg.policy.probabilities;
    let mut distinct: Vec<T> = Vec::new();
    let slot: Vec<usize> = probs
        .iter()
        .map(|&p| match distinct.iter().position(|&d| d == p) {
            Some(i) => i,
            None => {
                distinct.push(p);
                distinct.len() - 1
            }
        })
        .collect();
    let rates = rate_integrals(cfg, &distinct)?;
    let per_content: Vec<T> = slot.iter().map(|&i| rates[i]).collect();
    let system = cfg
        .library
        .popularity
        .iter()
        .zip(&per_content)
        .fold(T::zero(), |s, (&a, &r)| s + a * r);
    Ok(CapacityReport {
        coop_means: probs.iter().map(|&p| cfg.coop_mean(p)).collect(),
        per_content,
        system,
    })
}
