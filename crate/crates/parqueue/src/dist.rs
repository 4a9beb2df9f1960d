//! Discrete probability laws on the nonnegative integers.
//!
//! [`Pmf`] carries the arrival and service laws. All variants provide exact
//! pmf/tail/mean evaluation, the moment generating function with its first
//! two derivatives (closed form where available), and deterministic
//! inverse-CDF sampling. Evaluating an MGF outside its convergence domain is
//! a hard [`Error::MgfDomain`] so root solvers can detect and backtrack.

use crate::math::{kahan_sum, zeta};
use crate::rng::Rng;
use crate::{Error, Result};

/// A discrete law on {0, 1, 2, ...}.
///
/// * `Bernoulli(p)` — mass `p` at 1, `1 - p` at 0.
/// * `Geometric(alpha)` — `P(X = k) = alpha (1 - alpha)^k`, so `pmf(0) = alpha`.
/// * `DiscretePareto(delta)` — `P(X > k) = (1 + k)^{-delta}`; support starts
///   at 1 and the mean is finite only for `delta > 1` (enforced).
/// * `Finite(weights)` — arbitrary law with bounded support, `weights[k] = P(X = k)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Pmf {
    Bernoulli { p: f64 },
    Geometric { alpha: f64 },
    DiscretePareto { delta: f64 },
    Finite { weights: Vec<f64> },
}

impl Pmf {
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter {
                name: "p",
                value: p,
                reason: "Bernoulli parameter must lie in [0, 1]",
            });
        }
        Ok(Pmf::Bernoulli { p })
    }

    pub fn geometric(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
                reason: "geometric parameter must lie in (0, 1)",
            });
        }
        Ok(Pmf::Geometric { alpha })
    }

    pub fn discrete_pareto(delta: f64) -> Result<Self> {
        if !(delta > 1.0) {
            return Err(Error::InvalidParameter {
                name: "delta",
                value: delta,
                reason: "discrete Pareto needs delta > 1 for a finite mean",
            });
        }
        Ok(Pmf::DiscretePareto { delta })
    }

    pub fn finite(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter {
                name: "weights",
                value: 0.0,
                reason: "finite law needs at least one weight",
            });
        }
        if let Some(&w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "weights",
                value: w,
                reason: "weights must be finite and nonnegative",
            });
        }
        let total = kahan_sum(weights.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter {
                name: "weights",
                value: total,
                reason: "weights must sum to 1 within 1e-12",
            });
        }
        Ok(Pmf::Finite { weights })
    }

    /// Point mass at `k`, as a finite law.
    pub fn deterministic(k: u64) -> Self {
        let mut weights = vec![0.0; k as usize + 1];
        weights[k as usize] = 1.0;
        Pmf::Finite { weights }
    }

    /// P(X = k).
    pub fn pmf(&self, k: u64) -> f64 {
        match self {
            Pmf::Bernoulli { p } => match k {
                0 => 1.0 - p,
                1 => *p,
                _ => 0.0,
            },
            Pmf::Geometric { alpha } => alpha * (1.0 - alpha).powf(k as f64),
            Pmf::DiscretePareto { delta } => {
                if k == 0 {
                    0.0
                } else {
                    (k as f64).powf(-delta) - (k as f64 + 1.0).powf(-delta)
                }
            }
            Pmf::Finite { weights } => weights.get(k as usize).copied().unwrap_or(0.0),
        }
    }

    /// P(X > k); equals 1 for negative `k`. Nonincreasing in `k`.
    pub fn tail(&self, k: i64) -> f64 {
        if k < 0 {
            return 1.0;
        }
        let k = k as u64;
        match self {
            Pmf::Bernoulli { p } => {
                if k == 0 {
                    *p
                } else {
                    0.0
                }
            }
            Pmf::Geometric { alpha } => (1.0 - alpha).powf(k as f64 + 1.0),
            Pmf::DiscretePareto { delta } => (k as f64 + 1.0).powf(-delta),
            // Exact summation from the top keeps small tails accurate.
            Pmf::Finite { weights } => {
                let start = (k as usize + 1).min(weights.len());
                weights[start..].iter().rev().sum()
            }
        }
    }

    /// E[X], exact per variant (finite by construction).
    pub fn mean(&self) -> f64 {
        match self {
            Pmf::Bernoulli { p } => *p,
            Pmf::Geometric { alpha } => (1.0 - alpha) / alpha,
            // E[X] = sum_{k>=0} P(X > k) = sum_{j>=1} j^{-delta}.
            Pmf::DiscretePareto { delta } => zeta(*delta),
            Pmf::Finite { weights } => kahan_sum(
                weights
                    .iter()
                    .enumerate()
                    .map(|(k, w)| k as f64 * w),
            ),
        }
    }

    /// Smallest point of the support carrying positive mass.
    pub fn min_support(&self) -> u64 {
        match self {
            Pmf::Bernoulli { p } => {
                if *p < 1.0 {
                    0
                } else {
                    1
                }
            }
            Pmf::Geometric { .. } => 0,
            Pmf::DiscretePareto { .. } => 1,
            Pmf::Finite { weights } => weights
                .iter()
                .position(|&w| w > 0.0)
                .unwrap_or(0) as u64,
        }
    }

    /// Largest support point, when the support is bounded.
    pub fn max_support(&self) -> Option<u64> {
        match self {
            Pmf::Bernoulli { p } => Some(if *p > 0.0 { 1 } else { 0 }),
            Pmf::Finite { weights } => {
                Some(weights.iter().rposition(|&w| w > 0.0).unwrap_or(0) as u64)
            }
            _ => None,
        }
    }

    /// Supremum of the set of `theta` where the MGF converges.
    pub fn mgf_domain_sup(&self) -> f64 {
        match self {
            Pmf::Bernoulli { .. } | Pmf::Finite { .. } => f64::INFINITY,
            Pmf::Geometric { alpha } => -(1.0 - alpha).ln(),
            Pmf::DiscretePareto { .. } => 0.0,
        }
    }

    fn domain_check(&self, theta: f64) -> Result<()> {
        if !theta.is_finite() {
            return Err(Error::MgfDomain { theta });
        }
        let inside = match self {
            Pmf::Bernoulli { .. } | Pmf::Finite { .. } => true,
            Pmf::Geometric { alpha } => (1.0 - alpha) * theta.exp() < 1.0,
            Pmf::DiscretePareto { .. } => theta <= 0.0,
        };
        if inside {
            Ok(())
        } else {
            Err(Error::MgfDomain { theta })
        }
    }

    /// E[e^{theta X}]; `mgf(0) = 1` exactly.
    pub fn mgf(&self, theta: f64) -> Result<f64> {
        self.domain_check(theta)?;
        let value = match self {
            Pmf::Bernoulli { p } => 1.0 - p + p * theta.exp(),
            Pmf::Geometric { alpha } => alpha / (1.0 - (1.0 - alpha) * theta.exp()),
            Pmf::DiscretePareto { delta } => {
                if theta == 0.0 {
                    1.0
                } else {
                    // E e^{theta X} = 1 + (e^theta - 1) sum_k e^{theta k} P(X > k).
                    1.0 + (theta.exp() - 1.0) * pareto_tail_transform(*delta, theta)
                }
            }
            Pmf::Finite { weights } => kahan_sum(
                weights
                    .iter()
                    .enumerate()
                    .map(|(k, w)| w * (theta * k as f64).exp()),
            ),
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::MgfDomain { theta })
        }
    }

    /// E[X e^{theta X}] (first MGF derivative).
    pub fn mgf_d1(&self, theta: f64) -> Result<f64> {
        self.domain_check(theta)?;
        let value = match self {
            Pmf::Bernoulli { p } => p * theta.exp(),
            Pmf::Geometric { alpha } => {
                let r = (1.0 - alpha) * theta.exp();
                alpha * r / ((1.0 - r) * (1.0 - r))
            }
            Pmf::DiscretePareto { delta } => {
                if theta == 0.0 {
                    zeta(*delta)
                } else {
                    pareto_moment_series(*delta, theta, 1)
                }
            }
            Pmf::Finite { weights } => kahan_sum(
                weights
                    .iter()
                    .enumerate()
                    .map(|(k, w)| k as f64 * w * (theta * k as f64).exp()),
            ),
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::MgfDomain { theta })
        }
    }

    /// E[X^2 e^{theta X}] (second MGF derivative). Infinite for a discrete
    /// Pareto law with `delta <= 2` at `theta = 0`.
    pub fn mgf_d2(&self, theta: f64) -> Result<f64> {
        self.domain_check(theta)?;
        let value = match self {
            Pmf::Bernoulli { p } => p * theta.exp(),
            Pmf::Geometric { alpha } => {
                let r = (1.0 - alpha) * theta.exp();
                alpha * r * (1.0 + r) / ((1.0 - r) * (1.0 - r) * (1.0 - r))
            }
            Pmf::DiscretePareto { delta } => {
                if theta == 0.0 {
                    if *delta > 2.0 {
                        // E X^2 = sum_k (2k + 1) P(X > k).
                        2.0 * zeta(delta - 1.0) - zeta(*delta)
                    } else {
                        f64::INFINITY
                    }
                } else {
                    pareto_moment_series(*delta, theta, 2)
                }
            }
            Pmf::Finite { weights } => kahan_sum(weights.iter().enumerate().map(|(k, w)| {
                let kf = k as f64;
                kf * kf * w * (theta * kf).exp()
            })),
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::MgfDomain { theta })
        }
    }

    /// Deterministic inverse-CDF draw: `min { k : P(X <= k) > u }`.
    pub fn sample(&self, rng: &mut Rng) -> u64 {
        let u = rng.next_f64();
        self.inverse_cdf(u)
    }

    /// The quantile map underlying [`Pmf::sample`]. `u` must lie in [0, 1).
    pub(crate) fn inverse_cdf(&self, u: f64) -> u64 {
        let target = 1.0 - u; // find min k with tail(k) < target
        match self {
            Pmf::Bernoulli { p } => {
                if *p < target {
                    0
                } else {
                    1
                }
            }
            Pmf::Geometric { alpha } => {
                // Closed-form inversion of tail(k) = (1-alpha)^{k+1}, then a
                // local adjustment so the result matches the tail values
                // bit-for-bit.
                let lq = (1.0 - alpha).ln();
                let guess = (target.ln() / lq - 1.0).max(0.0);
                let mut k = guess.round() as i64;
                while k > 0 && self.tail(k - 1) < target {
                    k -= 1;
                }
                while self.tail(k) >= target {
                    k += 1;
                }
                k as u64
            }
            Pmf::DiscretePareto { delta } => {
                // tail(k) = (1+k)^{-delta} < target  <=>  k+1 > target^{-1/delta}.
                let guess = (target.powf(-1.0 / delta) - 1.0).max(1.0);
                let mut k = guess.round() as i64;
                while k > 1 && self.tail(k - 1) < target {
                    k -= 1;
                }
                while self.tail(k) >= target {
                    k += 1;
                }
                k as u64
            }
            Pmf::Finite { weights } => {
                let mut acc = 0.0;
                for (k, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        return k as u64;
                    }
                }
                weights.len() as u64 - 1
            }
        }
    }

    /// Integer thresholds for the quantile map on the raw 53-bit uniform.
    ///
    /// With `u = m * 2^-53` (the exact value [`crate::rng::Rng::next_f64`]
    /// produces), the predicate `tail(k) < 1 - u` is equivalent to
    /// `m < M[k]` for an integer threshold `M[k]`, because `1 - u` is
    /// exactly representable. Walk hot loops sample by counting threshold
    /// comparisons; the result is bit-identical to [`Pmf::sample`].
    pub fn quantile_thresholds(&self, len: usize) -> Vec<u64> {
        const TWO53: f64 = 9007199254740992.0;
        (0..len)
            .map(|k| {
                // t * 2^53 is an exact power-of-two scaling, and
                // `tail(k) < (2^53 - m) 2^-53` over integers m reduces to
                // `m < 2^53 - floor(t 2^53)` in both the fractional and the
                // integer case.
                let b = self.tail(k as i64) * TWO53;
                (TWO53 - b.floor()) as u64
            })
            .collect()
    }

    /// Smallest `k` with `tail(k) < tol` (support bound after truncation).
    pub fn truncation_point(&self, tol: f64) -> u64 {
        match self {
            Pmf::Bernoulli { .. } => 1,
            Pmf::Finite { weights } => weights.len() as u64 - 1,
            Pmf::Geometric { alpha } => {
                let k = (tol.ln() / (1.0 - alpha).ln() - 1.0).ceil().max(0.0) as u64;
                let mut k = k;
                while self.tail(k as i64) >= tol {
                    k += 1;
                }
                k
            }
            Pmf::DiscretePareto { delta } => {
                let k = (tol.powf(-1.0 / delta) - 1.0).ceil().max(1.0) as u64;
                let mut k = k;
                while self.tail(k as i64) >= tol {
                    k += 1;
                }
                k
            }
        }
    }

    /// Truncated pmf table `[pmf(0), ..., pmf(K)]` with `tail(K) < tol`,
    /// plus the discarded mass. The table is left unnormalized so kernel
    /// code can account for the loss explicitly.
    pub fn to_truncated_table(&self, tol: f64) -> (Vec<f64>, f64) {
        match self {
            Pmf::Finite { weights } => (weights.clone(), 0.0),
            _ => {
                let k_max = self.truncation_point(tol);
                let table: Vec<f64> = (0..=k_max).map(|k| self.pmf(k)).collect();
                (table, self.tail(k_max as i64))
            }
        }
    }

    /// Upper bound on the integrated tail `int_x^inf P(X > u) du`.
    ///
    /// Used to bound remainders of sums `sum_k P(X > b + k c)`.
    pub fn tail_integral_upper(&self, x: f64) -> f64 {
        if x < 0.0 {
            return self.mean() + (-x);
        }
        match self {
            Pmf::DiscretePareto { delta } => {
                // P(X > u) = (1 + floor(u))^{-delta} <= u^{-delta} for u >= 1.
                let x = x.max(1.0);
                x.powf(1.0 - delta) / (delta - 1.0)
            }
            Pmf::Geometric { alpha } => {
                let q = 1.0 - alpha;
                q.powf(x) / -q.ln()
            }
            Pmf::Bernoulli { p } => {
                if x >= 1.0 {
                    0.0
                } else {
                    p * (1.0 - x)
                }
            }
            Pmf::Finite { weights } => {
                let hi = weights.len() as f64;
                if x >= hi {
                    return 0.0;
                }
                // Crude but valid: integrand is <= tail(floor(x)) out to the
                // end of the support.
                self.tail(x.floor() as i64 - 1) * (hi - x)
            }
        }
    }
}

/// Sum `sum_{k>=0} e^{theta k} (1+k)^{-delta}` for `theta < 0`.
///
/// Terminates once the remainder, scaled by the `(e^theta - 1)` factor the
/// caller multiplies in, can no longer move the MGF at 1e-16.
fn pareto_tail_transform(delta: f64, theta: f64) -> f64 {
    debug_assert!(theta < 0.0);
    let e = theta.exp();
    let mut acc = 0.0;
    let mut w = 1.0; // e^{theta k}
    let mut k = 0u64;
    loop {
        let term = w * (k as f64 + 1.0).powf(-delta);
        acc += term;
        k += 1;
        w *= e;
        // Remainder of the transform <= min(geometric continuation,
        // integrated tail); the caller scales it by (1 - e^theta).
        let geo_scaled = w * (k as f64 + 1.0).powf(-delta);
        let poly_scaled = (1.0 - e) * (k as f64).powf(1.0 - delta) / (delta - 1.0);
        if geo_scaled.min(poly_scaled) < 1e-16 || k > 50_000_000 {
            return acc;
        }
    }
}

/// Sum `sum_{k>=1} k^m e^{theta k} pmf(k)` for the discrete Pareto law,
/// `theta < 0`, `m` in {1, 2}.
fn pareto_moment_series(delta: f64, theta: f64, m: u32) -> f64 {
    debug_assert!(theta < 0.0);
    let e = theta.exp();
    let mut acc = 0.0;
    let mut w = e; // e^{theta k}
    let mut k = 1u64;
    loop {
        let kf = k as f64;
        let p = kf.powf(-delta) - (kf + 1.0).powf(-delta);
        acc += kf.powi(m as i32) * w * p;
        k += 1;
        w *= e;
        let kf = k as f64;
        // Remainder bounds via pmf(k) <= delta k^{-delta-1}: a geometric
        // continuation and, when the bare series converges, its integrated
        // tail.
        let geo = w * kf.powi(m as i32) * delta * kf.powf(-delta - 1.0) * 2.0 / (1.0 - e);
        let poly = if delta > m as f64 {
            delta * kf.powf(m as f64 - delta) / (delta - m as f64)
        } else {
            f64::INFINITY
        };
        if geo.min(poly) < 1e-16 * (1.0 + acc) || k > 50_000_000 {
            return acc;
        }
    }
}

/// Per-index ratios probing strong subexponentiality of a law.
///
/// `ratio1(n) = P(X1 + X2 > n) / P(X > n)` (exact convolution identity) and
/// `ratio2(n) = sum_{k=0}^n P(X > n-k) P(X > k) / (2 E[X] P(X > n))`.
/// For a strongly subexponential law they trend to 2 and 1. Entries are
/// `None` once the tail is exactly zero ("tail exhausted").
#[derive(Debug, Clone)]
pub struct SubexpDiagnostic {
    pub n_max: u64,
    pub ratio1: Vec<Option<f64>>,
    pub ratio2: Vec<Option<f64>>,
    /// First `n` at which `P(X > n) = 0`, if any.
    pub tail_exhausted_from: Option<u64>,
    /// Whether `|ratio1 - 2|` shrank across n_max/4 -> n_max/2 -> n_max.
    pub ratio1_trending: bool,
    /// Whether `|ratio2 - 1|` shrank across the same checkpoints.
    pub ratio2_trending: bool,
}

/// Evaluate both subexponentiality ratios for all `n <= n_max`.
///
/// The convolution tail is computed through the exact identity
/// `P(X1 + X2 > n) = sum_{i=0}^n pmf(i) tail(n-i) + tail(n)`, so no
/// truncation error enters. Cost is O(n_max^2).
pub fn strong_subexp_diagnostic(d: &Pmf, n_max: u64) -> SubexpDiagnostic {
    let n_max_us = n_max as usize;
    let pmf: Vec<f64> = (0..=n_max).map(|k| d.pmf(k)).collect();
    let tail: Vec<f64> = (0..=n_max).map(|k| d.tail(k as i64)).collect();
    let mean = d.mean();

    let mut ratio1 = Vec::with_capacity(n_max_us + 1);
    let mut ratio2 = Vec::with_capacity(n_max_us + 1);
    let mut exhausted = None;
    for n in 0..=n_max_us {
        if tail[n] == 0.0 {
            if exhausted.is_none() {
                exhausted = Some(n as u64);
            }
            ratio1.push(None);
            ratio2.push(None);
            continue;
        }
        let conv: f64 = kahan_sum((0..=n).map(|i| pmf[i] * tail[n - i])) + tail[n];
        let cross: f64 = kahan_sum((0..=n).map(|k| tail[n - k] * tail[k]));
        ratio1.push(Some(conv / tail[n]));
        ratio2.push(Some(cross / (2.0 * mean * tail[n])));
    }

    let gap = |r: &Vec<Option<f64>>, n: usize, target: f64| -> Option<f64> {
        r.get(n).copied().flatten().map(|v| (v - target).abs())
    };
    let trending = |r: &Vec<Option<f64>>, target: f64| -> bool {
        match (
            gap(r, n_max_us / 4, target),
            gap(r, n_max_us / 2, target),
            gap(r, n_max_us, target),
        ) {
            (Some(a), Some(b), Some(c)) => c < b && b < a,
            _ => false,
        }
    };

    SubexpDiagnostic {
        n_max,
        ratio1_trending: trending(&ratio1, 2.0),
        ratio2_trending: trending(&ratio2, 1.0),
        ratio1,
        ratio2,
        tail_exhausted_from: exhausted,
    }
}

/// Precomputed sampler with the same quantile map as [`Pmf::sample`] but a
/// cheaper hot path. Point masses consume no randomness at all, so walk
/// loops with deterministic services draw exactly one uniform per slot.
#[derive(Debug, Clone)]
pub struct Sampler {
    kind: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Const(u64),
    Bernoulli { p: f64 },
    /// Tail table scan for unbounded laws; falls back to the closed-form
    /// inversion beyond the table. Entries are exactly `pmf.tail(k)`.
    TailScan { tails: Vec<f64>, pmf: Pmf },
    /// Cumulative table for finite laws; identical partial sums to the
    /// sequential scan in `Pmf::inverse_cdf`.
    FiniteCum { cum: Vec<f64> },
}

impl Sampler {
    pub fn new(pmf: &Pmf) -> Self {
        let kind = match pmf {
            Pmf::Finite { weights } => {
                let support: Vec<usize> = weights
                    .iter()
                    .enumerate()
                    .filter(|(_, &w)| w > 0.0)
                    .map(|(k, _)| k)
                    .collect();
                if support.len() == 1 {
                    SamplerKind::Const(support[0] as u64)
                } else {
                    let mut cum = Vec::with_capacity(weights.len());
                    let mut acc = 0.0;
                    for &w in weights {
                        acc += w;
                        cum.push(acc);
                    }
                    SamplerKind::FiniteCum { cum }
                }
            }
            Pmf::Bernoulli { p } => SamplerKind::Bernoulli { p: *p },
            Pmf::Geometric { .. } | Pmf::DiscretePareto { .. } => {
                let k_hi = pmf.truncation_point(1e-9).min(4096);
                let tails: Vec<f64> = (0..=k_hi).map(|k| pmf.tail(k as i64)).collect();
                SamplerKind::TailScan {
                    tails,
                    pmf: pmf.clone(),
                }
            }
        };
        Sampler { kind }
    }

    /// Whether drawing consumes randomness (false only for point masses).
    pub fn consumes_randomness(&self) -> bool {
        !matches!(self.kind, SamplerKind::Const(_))
    }

    /// The single support point, when the law is a point mass.
    pub fn point_mass_value(&self) -> Option<u64> {
        match self.kind {
            SamplerKind::Const(k) => Some(k),
            _ => None,
        }
    }

    #[inline]
    pub fn draw(&self, rng: &mut Rng) -> u64 {
        match &self.kind {
            SamplerKind::Const(k) => *k,
            SamplerKind::Bernoulli { p } => {
                let target = 1.0 - rng.next_f64();
                if *p < target {
                    0
                } else {
                    1
                }
            }
            SamplerKind::TailScan { tails, pmf } => {
                let u = rng.next_f64();
                let target = 1.0 - u;
                // min { k : tail(k) < target }, scanning the cached tails.
                let mut k = 0usize;
                while k < tails.len() {
                    if tails[k] < target {
                        return k as u64;
                    }
                    k += 1;
                }
                pmf.inverse_cdf(u)
            }
            SamplerKind::FiniteCum { cum } => {
                let u = rng.next_f64();
                let idx = cum.partition_point(|&c| c <= u);
                idx.min(cum.len() - 1) as u64
            }
        }
    }
}
