//! Content popularity and placement policies: the optimal randomized
//! placement, most-popular caching, and LRU (characteristic-time
//! approximation plus an event-driven reference simulation).

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{check_at_least, check_positive, Error, Result};
use crate::format::fmt_g;
use crate::Scalar;

/// Default stopping tolerance on the budget residual of the bisections.
pub const DEFAULT_BUDGET_TOL: f64 = 1e-10;

const MAX_BISECTIONS: usize = 400;

/// Zipf-distributed catalogue; `popularity[m]` is the request probability of
/// the `(m + 1)`-th most popular file.
#[derive(Debug, Clone, PartialEq)]
pub struct ContentLibrary<T> {
    pub kappa: T,
    pub popularity: Vec<T>,
}

impl<T: Scalar> ContentLibrary<T> {
    pub fn zipf(size: usize, kappa: T) -> Result<Self> {
        Ok(Self {
            kappa,
            popularity: zipf_popularity(size, kappa)?,
        })
    }

    pub fn len(&self) -> usize {
        self.popularity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.popularity.is_empty()
    }
}

/// `a_m = m^{-κ} / Σ_c c^{-κ}` for `m = 1..=size`.
pub fn zipf_popularity<T: Scalar>(size: usize, kappa: T) -> Result<Vec<T>> {
    if size == 0 {
        return Err(Error::invalid(
            "F",
            "library must hold at least one content",
        ));
    }
    if !(kappa.is_finite() && kappa >= T::zero() && kappa <= T::lit(2.0)) {
        return Err(Error::invalid(
            "kappa",
            format!("must lie in [0, 2], got {kappa}"),
        ));
    }
    let mut a: Vec<T> = (1..=size)
        .map(|m| T::from_usize_lossy(m).powf(-kappa))
        .collect();
    let total = a.iter().fold(T::zero(), |s, &x| s + x);
    for x in &mut a {
        *x = *x / total;
    }
    Ok(a)
}

/// Probability that some UAV within `x_cop` caches a content placed with
/// probability `p`.
pub fn hit_probability<T: Scalar>(p: T, lambda: T, x_cop: T) -> Result<T> {
    check_probability("p_c", p)?;
    check_at_least("lambda", lambda, T::zero())?;
    check_at_least("X_cop", x_cop, T::zero())?;
    Ok(-(-T::PI() * lambda * x_cop * x_cop * p).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Rcp,
    Mpc,
    LruChe,
    LruEmpirical,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Rcp => "rcp",
            PolicyKind::Mpc => "mpc",
            PolicyKind::LruChe => "lru_che",
            PolicyKind::LruEmpirical => "lru_empirical",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rcp" => Ok(PolicyKind::Rcp),
            "mpc" => Ok(PolicyKind::Mpc),
            "lru_che" => Ok(PolicyKind::LruChe),
            "lru_empirical" => Ok(PolicyKind::LruEmpirical),
            other => Err(Error::invalid(
                "policy",
                format!("`{other}` (expected rcp, mpc, lru_che or lru_empirical)"),
            )),
        }
    }
}

/// Per-content caching probabilities summing to the cache size.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementPolicy<T> {
    pub kind: PolicyKind,
    pub cache_size: usize,
    pub probabilities: Vec<T>,
}

impl<T: Scalar> PlacementPolicy<T> {
    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn total(&self) -> T {
        self.probabilities.iter().fold(T::zero(), |s, &p| s + p)
    }

    /// Checks `p_c ∈ [0, 1]` and `|Σp − S| ≤ tol`.
    pub fn validate(&self, tol: T) -> Result<()> {
        for &p in &self.probabilities {
            check_probability("p_c", p)?;
        }
        let s = T::from_usize_lossy(self.cache_size);
        let total = self.total();
        if (total - s).abs() > tol {
            return Err(Error::invalid(
                "policy",
                format!("probabilities sum to {total}, expected cache size {s}"),
            ));
        }
        Ok(())
    }

    /// Writes `content,probability` rows (1-based content rank).
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "content,probability")?;
        for (i, p) in self.probabilities.iter().enumerate() {
            writeln!(out, "{},{}", i + 1, fmt_g(p.as_f64(), 12))?;
        }
        Ok(())
    }
}

fn check_probability<T: Scalar>(name: &'static str, p: T) -> Result<()> {
    if !(p.is_finite() && p >= T::zero() && p <= T::one()) {
        return Err(Error::invalid(name, format!("must lie in [0, 1], got {p}")));
    }
    Ok(())
}

fn check_popularity<T: Scalar>(a: &[T], cache_size: usize) -> Result<()> {
    if a.is_empty() {
        return Err(Error::invalid("popularity", "empty popularity vector"));
    }
    for &x in a {
        check_at_least("popularity", x, T::zero())?;
    }
    if cache_size < 1 || cache_size > a.len() {
        return Err(Error::invalid(
            "S",
            format!(
                "cache size must lie in [1, F = {}], got {cache_size}",
                a.len()
            ),
        ));
    }
    Ok(())
}

/// Objective of the placement problem, `Σ a_c (1 − e^{-β p_c})`.
pub fn rcp_objective<T: Scalar>(a: &[T], p: &[T], beta: T) -> T {
    a.iter()
        .zip(p)
        .fold(T::zero(), |s, (&ac, &pc)| s - ac * (-beta * pc).exp_m1())
}

/// Handles budgets that the positive-popularity contents cannot absorb:
/// every popular content is cached and the remainder is spread over the rest.
fn saturate_positive<T: Scalar>(a: &[T], cache_size: usize) -> Option<Vec<T>> {
    let positive = a.iter().filter(|&&x| x > T::zero()).count();
    if positive > cache_size {
        return None;
    }
    let zeros = a.len() - positive;
    let rest = if zeros == 0 {
        T::zero()
    } else {
        T::from_usize_lossy(cache_size - positive) / T::from_usize_lossy(zeros)
    };
    Some(
        a.iter()
            .map(|&x| if x > T::zero() { T::one() } else { rest })
            .collect(),
    )
}

/// Optimal randomized placement: maximizes `Σ a_c (1 − e^{-β p_c})` subject to
/// `Σ p_c = S`, `0 ≤ p_c ≤ 1`, with `β = πλX_cop²`.
///
/// Stationarity gives `p_c = clip((1/β)·ln(a_c β / ν))`; the multiplier `ν`
/// is bisected (in log scale) on the monotone budget residual, then the
/// interior coordinates are solved in closed form for the final active set.
pub fn solve_rcp<T: Scalar>(
    a: &[T],
    cache_size: usize,
    beta: T,
    tol: T,
) -> Result<PlacementPolicy<T>> {
    check_popularity(a, cache_size)?;
    check_positive("beta", beta)?;
    check_positive("tolerance", tol)?;
    let make = |p| PlacementPolicy {
        kind: PolicyKind::Rcp,
        cache_size,
        probabilities: p,
    };
    if let Some(p) = saturate_positive(a, cache_size) {
        return Ok(make(p));
    }
    let s = T::from_usize_lossy(cache_size);
    let log_ab: Vec<T> = a.iter().map(|&x| (x * beta).ln()).collect();
    let alloc = |ln_nu: T| -> Vec<T> {
        log_ab
            .iter()
            .map(|&l| ((l - ln_nu) / beta).max(T::zero()).min(T::one()))
            .collect()
    };
    let residual = |p: &[T]| p.iter().fold(T::zero(), |acc, &x| acc + x) - s;

    let finite = || log_ab.iter().copied().filter(|l| l.is_finite());
    // At ln ν = min ln(a β) − β every positive coordinate sits at 1, at the max all are 0.
    let mut lo = finite().fold(T::infinity(), T::min) - beta;
    let mut hi = finite().fold(T::neg_infinity(), T::max);
    if residual(&alloc(lo)) < T::zero() || residual(&alloc(hi)) > T::zero() {
        return Err(Error::Internal(
            "placement multiplier bracket does not straddle the budget".into(),
        ));
    }
    let mut best = alloc(lo);
    for _ in 0..MAX_BISECTIONS {
        let mid = T::lit(0.5) * (lo + hi);
        let p = alloc(mid);
        let r = residual(&p);
        if r.abs() < tol {
            best = p;
            break;
        }
        if r > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        best = p;
        if !(mid > lo.min(hi) || mid < lo.max(hi))
            || hi - lo <= T::epsilon() * hi.abs().max(T::one())
        {
            break;
        }
    }
    let refined = refine_active_set(&log_ab, &best, s, beta);
    let pick = match refined {
        Some(p) if residual(&p).abs() <= residual(&best).abs() => p,
        _ => best,
    };
    let r = residual(&pick);
    if r.abs() >= tol {
        return Err(Error::Internal(format!(
            "placement bisection stalled with budget residual {r}"
        )));
    }
    Ok(make(pick))
}

/// Solves the interior coordinates exactly, keeping the clipped ones fixed.
fn refine_active_set<T: Scalar>(log_ab: &[T], p: &[T], s: T, beta: T) -> Option<Vec<T>> {
    let ones = p.iter().filter(|&&x| x >= T::one()).count();
    let interior: Vec<usize> = (0..p.len())
        .filter(|&i| p[i] > T::zero() && p[i] < T::one())
        .collect();
    if interior.is_empty() {
        return None;
    }
    let budget = s - T::from_usize_lossy(ones);
    let sum_log = interior.iter().fold(T::zero(), |acc, &i| acc + log_ab[i]);
    let ln_nu = (sum_log - beta * budget) / T::from_usize_lossy(interior.len());
    let mut out = p.to_vec();
    for &i in &interior {
        let x = (log_ab[i] - ln_nu) / beta;
        if !(x >= T::zero() && x <= T::one()) {
            return None;
        }
        out[i] = x;
    }
    Some(out)
}

/// Deterministically caches the `S` most popular contents (lowest index wins ties).
pub fn mpc_policy<T: Scalar>(a: &[T], cache_size: usize) -> Result<PlacementPolicy<T>> {
    check_popularity(a, cache_size)?;
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| {
        a[j].partial_cmp(&a[i])
            .expect("finite popularity")
            .then(i.cmp(&j))
    });
    let mut p = vec![T::zero(); a.len()];
    for &i in order.iter().take(cache_size) {
        p[i] = T::one();
    }
    Ok(PlacementPolicy {
        kind: PolicyKind::Mpc,
        cache_size,
        probabilities: p,
    })
}

/// LRU hit probabilities under the characteristic-time approximation:
/// `q_c = 1 − e^{-a_c T}` with `T` chosen so that `Σ q_c = S`.
pub fn lru_che<T: Scalar>(a: &[T], cache_size: usize, tol: T) -> Result<PlacementPolicy<T>> {
    check_popularity(a, cache_size)?;
    check_positive("tolerance", tol)?;
    let make = |p| PlacementPolicy {
        kind: PolicyKind::LruChe,
        cache_size,
        probabilities: p,
    };
    if let Some(p) = saturate_positive(a, cache_size) {
        return Ok(make(p));
    }
    let s = T::from_usize_lossy(cache_size);
    let occupancy = |t: T| -> Vec<T> { a.iter().map(|&x| -(-x * t).exp_m1()).collect() };
    let residual = |q: &[T]| q.iter().fold(T::zero(), |acc, &x| acc + x) - s;

    let mut lo = T::zero();
    let mut hi = s;
    let mut grow = 0;
    while residual(&occupancy(hi)) < T::zero() {
        lo = hi;
        hi = hi * T::lit(2.0);
        grow += 1;
        if grow > 2000 || !hi.is_finite() {
            return Err(Error::Internal(
                "characteristic time bracket diverged".into(),
            ));
        }
    }
    let mut q = occupancy(hi);
    for _ in 0..MAX_BISECTIONS {
        let mid = T::lit(0.5) * (lo + hi);
        q = occupancy(mid);
        let r = residual(&q);
        if r.abs() < tol || mid <= lo || mid >= hi {
            break;
        }
        if r < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = residual(&q);
    if r.abs() >= tol {
        return Err(Error::Internal(format!(
            "characteristic time bisection stalled with residual {r}"
        )));
    }
    Ok(make(q))
}

/// Event-driven LRU cache of capacity `S` fed by independent requests drawn
/// from `a`. Returns, per content, the fraction of post-warmup requests after
/// which the content is resident.
pub fn lru_simulate<T: Scalar, R: Rng + ?Sized>(
    a: &[T],
    cache_size: usize,
    n_requests: u64,
    warmup: u64,
    rng: &mut R,
) -> Result<Vec<T>> {
    check_popularity(a, cache_size)?;
    if n_requests <= warmup {
        return Err(Error::invalid(
            "n_requests",
            format!("must exceed warmup ({warmup}), got {n_requests}"),
        ));
    }
    let weights: Vec<f64> = a.iter().map(|x| x.as_f64()).collect();
    let sampler = WeightedIndex::new(&weights)
        .map_err(|e| Error::invalid("popularity", format!("not a valid distribution: {e}")))?;

    let f = a.len();
    // recency stamp -> content, oldest first
    let mut order: BTreeMap<u64, usize> = BTreeMap::new();
    let mut stamp: Vec<Option<u64>> = vec![None; f];
    let mut entered = vec![0u64; f];
    let mut resident = vec![0u64; f];
    let credit = |c: usize, from: u64, to: u64, resident: &mut [u64]| {
        let start = from.max(warmup);
        if to > start {
            resident[c] += to - start;
        }
    };

    for t in 0..n_requests {
        let c = sampler.sample(rng);
        match stamp[c] {
            Some(old) => {
                order.remove(&old);
            }
            None => {
                if order.len() == cache_size {
                    let (_, victim) = order.pop_first().expect("full cache");
                    stamp[victim] = None;
                    credit(victim, entered[victim], t, &mut resident);
                }
                entered[c] = t;
            }
        }
        order.insert(t, c);
        stamp[c] = Some(t);
    }
    for (c, s) in stamp.iter().enumerate() {
        if s.is_some() {
            credit(c, entered[c], n_requests, &mut resident);
        }
    }
    let window = T::from_u64(n_requests - warmup).expect("window fits scalar");
    Ok(resident
        .into_iter()
        .map(|n| T::from_u64(n).expect("count fits scalar") / window)
        .collect())
}

/// Wraps [`lru_simulate`] as a placement policy, rescaling so the
/// probabilities sum exactly to `S`.
pub fn lru_empirical_policy<T: Scalar, R: Rng + ?Sized>(
    a: &[T],
    cache_size: usize,
    n_requests: u64,
    warmup: u64,
    rng: &mut R,
) -> Result<PlacementPolicy<T>> {
    let occ = lru_simulate(a, cache_size, n_requests, warmup, rng)?;
    let total = occ.iter().fold(T::zero(), |s, &x| s + x);
    let s = T::from_usize_lossy(cache_size);
    let probabilities = if total > T::zero() {
        occ.iter().map(|&x| (x * s / total).min(T::one())).collect()
    } else {
        occ
    };
    Ok(PlacementPolicy {
        kind: PolicyKind::LruEmpirical,
        cache_size,
        probabilities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zipf_closed_forms() {
        assert_eq!(zipf_popularity(4, 0.0f64).unwrap(), vec![0.25; 4]);
        let a = zipf_popularity(2, 1.0f64).unwrap();
        assert_relative_eq!(a[0], 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(a[1], 1.0 / 3.0, max_relative = 1e-15);
        let a = zipf_popularity(3, 2.0f64).unwrap();
        for (x, e) in a.iter().zip([36.0 / 49.0, 9.0 / 49.0, 4.0 / 49.0]) {
            assert_relative_eq!(*x, e, max_relative = 1e-15);
        }
    }

    #[test]
    fn zipf_validation_and_invariants() {
        assert!(zipf_popularity(3, 2.5f64).is_err());
        assert!(zipf_popularity(3, -0.1f64).is_err());
        assert!(zipf_popularity(0, 1.0f64).is_err());
        for &k in &[0.0, 0.3, 0.8, 1.4, 2.0] {
            let a = zipf_popularity(500, k).unwrap();
            let s: f64 = a.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(a.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn hit_probability_examples() {
        assert_eq!(hit_probability(0.0, 1e-3, 3.0).unwrap(), 0.0);
        let lambda = 2f64.ln() / std::f64::consts::PI;
        assert_relative_eq!(
            hit_probability(1.0, lambda, 1.0).unwrap(),
            0.5,
            max_relative = 1e-14
        );
        let h = hit_probability(1.0, 1e-3, 3.0).unwrap();
        assert_relative_eq!(
            h,
            1.0 - (-0.009 * std::f64::consts::PI).exp(),
            max_relative = 1e-14
        );
        assert!((h - 0.027879).abs() < 1e-6);
        assert!(hit_probability(1.5, 1e-3, 3.0).is_err());
        assert!(hit_probability(0.5, -1.0, 3.0).is_err());
    }

    #[test]
    fn rcp_uniform_and_saturated() {
        let a = vec![0.2f64; 5];
        for beta in [1e-3, 0.5, 3.0, 100.0] {
            let p = solve_rcp(&a, 2, beta, 1e-10).unwrap();
            for x in &p.probabilities {
                assert!((x - 0.4).abs() < 1e-9);
            }
        }
        let a = zipf_popularity(6, 0.8f64).unwrap();
        let p = solve_rcp(&a, 6, 0.7, 1e-10).unwrap();
        assert!(p.probabilities.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn rcp_validation() {
        let a = zipf_popularity(4, 0.8f64).unwrap();
        assert!(solve_rcp(&a, 0, 1.0, 1e-10).is_err());
        assert!(solve_rcp(&a, 5, 1.0, 1e-10).is_err());
        assert!(solve_rcp(&a, 2, 0.0, 1e-10).is_err());
    }

    #[test]
    fn rcp_limits() {
        let a = zipf_popularity(20, 0.8f64).unwrap();
        let small = solve_rcp(&a, 5, 1e-6, 1e-10).unwrap();
        let mpc = mpc_policy(&a, 5).unwrap();
        let rounded: Vec<f64> = small.probabilities.iter().map(|x| x.round()).collect();
        assert_eq!(rounded, mpc.probabilities);

        let big = solve_rcp(&a, 5, 1e6, 1e-10).unwrap();
        for x in &big.probabilities {
            assert!((x - 0.25).abs() < 1e-3);
        }
    }

    #[test]
    fn rcp_satisfies_kkt() {
        for &(f, s, kappa, beta) in &[
            (20usize, 5usize, 0.8f64, 2.0f64),
            (50, 7, 1.2, 0.3),
            (10, 3, 0.2, 8.0),
            (30, 10, 1.9, 1.0),
        ] {
            let a = zipf_popularity(f, kappa).unwrap();
            let p = solve_rcp(&a, s, beta, 1e-10).unwrap();
            p.validate(1e-9).unwrap();
            let marginal: Vec<f64> = a
                .iter()
                .zip(&p.probabilities)
                .map(|(a, p)| a * beta * (-beta * p).exp())
                .collect();
            let interior: Vec<f64> = (0..f)
                .filter(|&i| p.probabilities[i] > 1e-12 && p.probabilities[i] < 1.0 - 1e-12)
                .map(|i| marginal[i])
                .collect();
            if let Some(&nu) = interior.first() {
                for m in &interior {
                    assert!((m - nu).abs() < 1e-6 * nu.max(1.0), "{m} vs {nu}");
                }
                for i in 0..f {
                    if p.probabilities[i] >= 1.0 - 1e-12 {
                        assert!(marginal[i] >= nu - 1e-9);
                    } else if p.probabilities[i] <= 1e-12 {
                        assert!(marginal[i] <= nu + 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn mpc_examples() {
        let a = zipf_popularity(5, 0.8f64).unwrap();
        assert_eq!(
            mpc_policy(&a, 2).unwrap().probabilities,
            vec![1.0, 1.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(mpc_policy(&a, 5).unwrap().probabilities, vec![1.0; 5]);
        let u = zipf_popularity(4, 0.0f64).unwrap();
        assert_eq!(
            mpc_policy(&u, 2).unwrap().probabilities,
            vec![1.0, 1.0, 0.0, 0.0]
        );
    }

    #[test]
    fn lru_che_examples() {
        let a = zipf_popularity(7, 1.1f64).unwrap();
        assert!(lru_che(&a, 7, 1e-10)
            .unwrap()
            .probabilities
            .iter()
            .all(|&q| q == 1.0));
        let u = vec![0.1f64; 10];
        let q = lru_che(&u, 3, 1e-10).unwrap();
        for x in &q.probabilities {
            assert!((x - 0.3).abs() < 1e-10);
        }
        let a = zipf_popularity(40, 0.8f64).unwrap();
        let q = lru_che(&a, 5, 1e-10).unwrap();
        q.validate(1e-9).unwrap();
        assert!(q.probabilities.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn lru_simulate_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let occ = lru_simulate(&[1.0f64], 1, 100, 0, &mut rng).unwrap();
        assert_eq!(occ, vec![1.0]);

        let a = zipf_popularity(4, 0.5f64).unwrap();
        let occ = lru_simulate(&a, 4, 10_000, 1_000, &mut rng).unwrap();
        assert!(occ.iter().all(|&x| x == 1.0), "{occ:?}");

        assert!(lru_simulate(&a, 2, 10, 10, &mut rng).is_err());
    }

    #[test]
    fn lru_simulate_occupancy_sums_to_cache_size_and_decreases() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = zipf_popularity(20, 0.8f64).unwrap();
        let occ = lru_simulate(&a, 5, 400_000, 10_000, &mut rng).unwrap();
        let total: f64 = occ.iter().sum();
        assert!((total - 5.0).abs() < 1e-9);
        // popular contents are resident more often (allowing sampling noise in the flat tail)
        for w in occ.windows(2) {
            assert!(w[0] >= w[1] - 0.01, "{occ:?}");
        }
        assert!(occ[0] > occ[10] && occ[10] > occ[19]);
    }

    #[test]
    fn policy_csv_layout() {
        let a = zipf_popularity(3, 1.0f64).unwrap();
        let p = mpc_policy(&a, 1).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "content,probability\n1,1\n2,0\n3,0\n"
        );
    }
}
