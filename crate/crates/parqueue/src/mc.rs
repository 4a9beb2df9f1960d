//! Seeded Monte Carlo estimators of `H(x, y)`.
//!
//! Replication `r` always draws from stream id `r`, replications run in
//! parallel, and reductions happen in a fixed tree order over the
//! replication index, so every estimate is bit-identical across runs and
//! thread counts.

use crate::asympt::{lundberg_1d, solve_cramer};
use crate::dist::{Pmf, Sampler};
use crate::math::pairwise_sum;
use crate::model::ParallelQueueModel;
use crate::rng::Rng;
use crate::{Error, Result};
use rayon::prelude::*;
use std::time::Instant;

/// Paths in the tilted estimator are abandoned (and budgeted for) after
/// this many steps; under the tilt the drift points into the quadrant, so
/// in practice nothing gets near the cap.
const TILTED_STEP_CAP: u64 = 1_000_000;

/// A Monte Carlo point estimate with its uncertainty accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub reps: u64,
    /// One-sided bias bound from early stopping / horizon capping.
    pub bias_budget: f64,
    pub meta: EstimateMeta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateMeta {
    pub seed: u64,
    pub stream_count: u64,
    /// Wall-clock seconds; informational only and deliberately excluded
    /// from machine-readable outputs (it is not reproducible).
    pub wall_time: f64,
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Ergodic-average estimator: run the coupled Lindley recursion from (0, 0)
/// and, after `burnin` slots, accumulate the fraction of slots with
/// `Q^1 > x` and `Q^2 > y` for every requested point. Replications are
/// averaged with the replication-level standard error.
pub fn simulate_queue_tail(
    model: &ParallelQueueModel,
    points: &[(u64, u64)],
    horizon: u64,
    burnin: u64,
    reps: u64,
    seed: u64,
) -> Result<Vec<((u64, u64), Estimate)>> {
    if burnin >= horizon {
        return Err(Error::InvalidParameter {
            name: "burnin",
            value: burnin as f64,
            reason: "burnin must be smaller than the horizon",
        });
    }
    if reps == 0 {
        return Err(Error::InvalidParameter {
            name: "reps",
            value: 0.0,
            reason: "at least one replication is required",
        });
    }
    let started = Instant::now();
    let sa = Sampler::new(model.arrival());
    let s1 = Sampler::new(model.service1());
    let s2 = Sampler::new(model.service2());

    let per_rep: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = Rng::new(seed, rep);
            let mut counts = vec![0u64; points.len()];
            let (mut q1, mut q2) = (0u64, 0u64);
            for slot in 1..=horizon {
                let a = sa.draw(&mut rng);
                let v1 = s1.draw(&mut rng);
                let v2 = s2.draw(&mut rng);
                q1 = (q1 + a).saturating_sub(v1);
                q2 = (q2 + a).saturating_sub(v2);
                if slot > burnin {
                    for (i, &(x, y)) in points.iter().enumerate() {
                        if q1 > x && q2 > y {
                            counts[i] += 1;
                        }
                    }
                }
            }
            let window = (horizon - burnin) as f64;
            counts.iter().map(|&c| c as f64 / window).collect()
        })
        .collect();

    let wall_time = started.elapsed().as_secs_f64();
    Ok(points
        .iter()
        .enumerate()
        .map(|(i, &pt)| {
            let values: Vec<f64> = per_rep.iter().map(|r| r[i]).collect();
            let (value, stderr) = mean_and_stderr(&values);
            (
                pt,
                Estimate {
                    value,
                    stderr,
                    reps,
                    bias_budget: 0.0,
                    meta: EstimateMeta {
                        seed,
                        stream_count: reps,
                        wall_time,
                    },
                },
            )
        })
        .collect())
}

/// First-passage estimator with certified stopping.
///
/// The stationary pair equals the componentwise running maxima of the free
/// walk, so the event `{Q^1 > x, Q^2 > y}` is "coordinate 1's record
/// exceeds x AND coordinate 2's record exceeds y" -- the records may be set
/// in different slots. Each coordinate therefore runs until it either sets
/// its record or its Lundberg bound `e^{-gamma_i (level_i - w_i)}` on ever
/// doing so drops below `eps_stop`; early-certified paths count as failures
/// and contribute `eps_stop` each to the bias budget.
pub fn first_passage_prob(
    model: &ParallelQueueModel,
    x: u64,
    y: u64,
    reps: u64,
    seed: u64,
    eps_stop: f64,
) -> Result<Estimate> {
    if !(eps_stop > 0.0) {
        return Err(Error::InvalidParameter {
            name: "eps_stop",
            value: eps_stop,
            reason: "stopping threshold must be positive",
        });
    }
    let g1 = lundberg_1d(model.arrival(), model.service1())?;
    let g2 = lundberg_1d(model.arrival(), model.service2())?;
    let started = Instant::now();

    // Integer stop margins: e^{-gamma_i L_i} < eps_stop.
    let margin = |g: f64| -> i64 { ((1.0 / eps_stop).ln() / g).floor() as i64 + 1 };
    let (l1, l2) = (margin(g1), margin(g2));
    let sa = Sampler::new(model.arrival());
    let s1 = Sampler::new(model.service1());
    let s2 = Sampler::new(model.service2());
    let (xi, yi) = (x as i64, y as i64);

    let successes: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = Rng::new(seed, rep);
            let (mut w1, mut w2) = (0i64, 0i64);
            let (mut hit1, mut hit2) = (false, false);
            loop {
                let a = sa.draw(&mut rng) as i64;
                let v1 = s1.draw(&mut rng) as i64;
                let v2 = s2.draw(&mut rng) as i64;
                w1 += a - v1;
                w2 += a - v2;
                hit1 |= w1 > xi;
                hit2 |= w2 > yi;
                if hit1 && hit2 {
                    return 1.0;
                }
                if (hit1 || xi - w1 >= l1) && (hit2 || yi - w2 >= l2) {
                    return 0.0;
                }
            }
        })
        .collect();

    let hits = pairwise_sum(&successes);
    let value = hits / reps as f64;
    let stderr = (value * (1.0 - value) / reps as f64).sqrt();
    let stopped_fraction = 1.0 - value;
    Ok(Estimate {
        value,
        stderr,
        reps,
        bias_budget: eps_stop * stopped_fraction,
        meta: EstimateMeta {
            seed,
            stream_count: reps,
            wall_time: started.elapsed().as_secs_f64(),
        },
    })
}

/// The tilted joint step law of `(A, S^1, S^2)`: the product law reweighted
/// by `e^{gamma_1 (a - s1) + gamma_2 (a - s2)}`. Its total mass equals
/// `phi(gamma)`, i.e. 1 up to the root residual, which
/// [`Self::normalization`] exposes.
pub struct TiltedStepLaw {
    cum: Vec<f64>,
    total: f64,
    dims: [usize; 3],
}

impl TiltedStepLaw {
    pub fn new(model: &ParallelQueueModel, gamma: [f64; 2]) -> Result<TiltedStepLaw> {
        let theta_a = gamma[0] + gamma[1];
        let ka = tilted_support(model.arrival(), theta_a)?;
        let k1 = tilted_support(model.service1(), -gamma[0])?;
        let k2 = tilted_support(model.service2(), -gamma[1])?;
        let wa: Vec<f64> = (0..=ka)
            .map(|a| model.arrival().pmf(a) * (theta_a * a as f64).exp())
            .collect();
        let w1: Vec<f64> = (0..=k1)
            .map(|s| model.service1().pmf(s) * (-gamma[0] * s as f64).exp())
            .collect();
        let w2: Vec<f64> = (0..=k2)
            .map(|s| model.service2().pmf(s) * (-gamma[1] * s as f64).exp())
            .collect();
        let mut cum = Vec::with_capacity(wa.len() * w1.len() * w2.len());
        let mut acc = 0.0; // plain running sum drives the sampling table
        let mut total = 0.0; // compensated total for the normalization check
        let mut comp = 0.0;
        for &pa in &wa {
            for &p1 in &w1 {
                for &p2 in &w2 {
                    let w = pa * p1 * p2;
                    acc += w;
                    cum.push(acc);
                    let y = w - comp;
                    let t = total + y;
                    comp = (t - total) - y;
                    total = t;
                }
            }
        }
        Ok(TiltedStepLaw {
            cum,
            total,
            dims: [wa.len(), w1.len(), w2.len()],
        })
    }

    /// Total mass of the materialized law; equals 1 within the Cramér root
    /// residual plus the 1e-16-level support truncation.
    pub fn normalization(&self) -> f64 {
        self.total
    }

    #[inline]
    pub fn draw(&self, rng: &mut Rng) -> (u64, u64, u64) {
        let target = rng.next_f64() * self.total;
        let idx = self
            .cum
            .partition_point(|&c| c <= target)
            .min(self.cum.len() - 1);
        let n2 = self.dims[2];
        let n1 = self.dims[1];
        let s2 = idx % n2;
        let s1 = (idx / n2) % n1;
        let a = idx / (n1 * n2);
        (a as u64, s1 as u64, s2 as u64)
    }
}

/// Support cut for a law tilted by `e^{theta k}`: smallest `K` so the
/// discarded tilted mass is below 1e-16.
fn tilted_support(d: &Pmf, theta: f64) -> Result<u64> {
    if let Some(m) = d.max_support() {
        return Ok(m);
    }
    if theta <= 0.0 {
        // Damped tail: the plain truncation point already works.
        return Ok(d.truncation_point(1e-16));
    }
    let mut k = d.truncation_point(1e-8);
    for _ in 0..100_000 {
        let term = d.pmf(k) * (theta * k as f64).exp();
        let ratio = d.pmf(k + 1) / d.pmf(k) * theta.exp();
        if ratio < 1.0 && term * ratio / (1.0 - ratio) < 1e-16 {
            return Ok(k);
        }
        if !(ratio < 1.0) {
            return Err(Error::MgfDomain { theta });
        }
        k += 1;
    }
    Err(Error::MgfDomain { theta })
}

/// Importance-sampling estimator under the Cramér tilt along `eta`: both
/// coordinates drift upward, so each record is set almost surely; the path
/// stops once both records are set and contributes the likelihood ratio
/// `e^{-<gamma, W_tau>}` evaluated at that stopping time.
///
/// `eps_stop` is accepted for interface symmetry with
/// [`first_passage_prob`]; the tilted walk needs no certified stopping
/// (paths beyond the internal step cap are budgeted instead).
pub fn first_passage_tilted(
    model: &ParallelQueueModel,
    x: u64,
    y: u64,
    eta: [f64; 2],
    reps: u64,
    seed: u64,
    eps_stop: f64,
) -> Result<Estimate> {
    let _ = eps_stop;
    let root = solve_cramer(model, eta)?;
    let law = TiltedStepLaw::new(model, root.gamma)?;
    let started = Instant::now();
    let (xi, yi) = (x as i64, y as i64);
    let (g1, g2) = (root.gamma[0], root.gamma[1]);
    // Budget entry for a capped path: the corner weight, the scale of any
    // eventual contribution. Under the tilt the drift points upward in both
    // coordinates, so reaching the cap at all is vanishingly unlikely.
    let weight_cap = (-(g1 * x as f64 + g2 * y as f64)).exp();

    let outcomes: Vec<(f64, f64)> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = Rng::new(seed, rep);
            let (mut w1, mut w2) = (0i64, 0i64);
            let (mut hit1, mut hit2) = (false, false);
            for _ in 0..TILTED_STEP_CAP {
                let (a, v1, v2) = law.draw(&mut rng);
                w1 += a as i64 - v1 as i64;
                w2 += a as i64 - v2 as i64;
                hit1 |= w1 > xi;
                hit2 |= w2 > yi;
                if hit1 && hit2 {
                    let weight = (-(g1 * w1 as f64 + g2 * w2 as f64)).exp();
                    return (weight, 0.0);
                }
            }
            (0.0, weight_cap)
        })
        .collect();

    let weights: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let biases: Vec<f64> = outcomes.iter().map(|o| o.1).collect();
    let (value, stderr) = mean_and_stderr(&weights);
    Ok(Estimate {
        value,
        stderr,
        reps,
        bias_budget: pairwise_sum(&biases) / reps as f64,
        meta: EstimateMeta {
            seed,
            stream_count: reps,
            wall_time: started.elapsed().as_secs_f64(),
        },
    })
}

/// Bounded-horizon estimator for the heavy-tailed regime: plain walk
/// simulation up to `horizon_cap` steps, success when both records are set
/// as in [`first_passage_prob`]. The probability of succeeding only after
/// the cap is budgeted with the series-machinery bound
/// `2 sum_{k > cap} P(A > max(x + k E[S^1], y + k E[S^2]))` (the factor 2
/// is a documented safety margin; there is no Lundberg certificate here).
pub fn heavy_first_passage(
    model: &ParallelQueueModel,
    x: u64,
    y: u64,
    reps: u64,
    horizon_cap: u64,
    seed: u64,
) -> Result<Estimate> {
    if model.service1().pmf(0) > 0.0 || model.service2().pmf(0) > 0.0 {
        return Err(Error::PreconditionFailed(
            "heavy_first_passage requires P(S^i = 0) = 0 for both services".into(),
        ));
    }
    let started = Instant::now();
    let sa = Sampler::new(model.arrival());
    let s1 = Sampler::new(model.service1());
    let s2 = Sampler::new(model.service2());
    let (xi, yi) = (x as i64, y as i64);

    // Deterministic services leave the common arrival as the only draw per
    // slot; that walk runs in a specialized loop that samples by integer
    // threshold counting (same quantile map, far fewer instructions) and
    // interleaves replication pairs for instruction-level parallelism.
    // Replication r still draws exclusively from stream r, so the estimate
    // is bit-identical to the generic path.
    let fast = match (s1.point_mass_value(), s2.point_mass_value()) {
        (Some(c1), Some(c2)) => Some((
            model.arrival().quantile_thresholds(4096),
            c1 as i64,
            c2 as i64,
        )),
        _ => None,
    };

    let successes: Vec<f64> = if let Some((thresholds, c1, c2)) = &fast {
        let stepper = FastStepper::new(thresholds, model.arrival(), *c1, *c2, xi, yi);
        let pairs = reps / 2;
        let mut values: Vec<f64> = (0..pairs)
            .into_par_iter()
            .flat_map_iter(|p| {
                let mut ra = Rng::new(seed, 2 * p);
                let mut rb = Rng::new(seed, 2 * p + 1);
                let (a, b) = stepper.run_pair(horizon_cap, &mut ra, &mut rb);
                [a as u64 as f64, b as u64 as f64]
            })
            .collect();
        if reps % 2 == 1 {
            let mut rng = Rng::new(seed, reps - 1);
            let hit = stepper.run(&mut FastWalk::START.clone(), horizon_cap, &mut rng);
            values.push(hit as u64 as f64);
        }
        values
    } else {
        (0..reps)
            .into_par_iter()
            .map(|rep| {
                let mut rng = Rng::new(seed, rep);
                let (mut w1, mut w2) = (0i64, 0i64);
                let (mut hit1, mut hit2) = (false, false);
                for _ in 0..horizon_cap {
                    let a = sa.draw(&mut rng) as i64;
                    let v1 = s1.draw(&mut rng) as i64;
                    let v2 = s2.draw(&mut rng) as i64;
                    w1 += a - v1;
                    w2 += a - v2;
                    hit1 |= w1 > xi;
                    hit2 |= w2 > yi;
                    if hit1 && hit2 {
                        return 1.0;
                    }
                }
                0.0
            })
            .collect()
    };

    let hits = pairwise_sum(&successes);
    let value = hits / reps as f64;
    let stderr = (value * (1.0 - value) / reps as f64).sqrt();

    // Crude post-cap bound along the dominating coordinate.
    let es = [model.service1().mean(), model.service2().mean()];
    let base = [x as f64, y as f64];
    let dom = if es[0] > es[1] || (es[0] == es[1] && base[0] >= base[1]) {
        0
    } else {
        1
    };
    let remainder = model
        .arrival()
        .tail_integral_upper(base[dom] + (horizon_cap as f64 - 1.0) * es[dom])
        / es[dom];
    Ok(Estimate {
        value,
        stderr,
        reps,
        bias_budget: 2.0 * remainder,
        meta: EstimateMeta {
            seed,
            stream_count: reps,
            wall_time: started.elapsed().as_secs_f64(),
        },
    })
}

/// Walk state of one replication in the deterministic-service fast path.
#[derive(Clone, Copy)]
struct FastWalk {
    w1: i64,
    w2: i64,
    hit1: bool,
    hit2: bool,
}

impl FastWalk {
    const START: FastWalk = FastWalk {
        w1: 0,
        w2: 0,
        hit1: false,
        hit2: false,
    };
}

/// Sampling and stepping machinery shared by the fast walk loops. Arrivals
/// are sampled by counting integer thresholds on the raw 53-bit uniform: a
/// branch-free window covers the bulk of the law, the cached thresholds
/// cover the next 4096 values, and the closed-form quantile handles the far
/// tail. The sampled values are bit-identical to `Pmf::sample` on the same
/// stream.
struct FastStepper<'a> {
    head: [u64; 4],
    thresholds: &'a [u64],
    arrival: &'a Pmf,
    c1: i64,
    c2: i64,
    xi: i64,
    yi: i64,
}

impl<'a> FastStepper<'a> {
    fn new(
        thresholds: &'a [u64],
        arrival: &'a Pmf,
        c1: i64,
        c2: i64,
        xi: i64,
        yi: i64,
    ) -> Self {
        FastStepper {
            head: thresholds[..4].try_into().expect("threshold table >= 4"),
            thresholds,
            arrival,
            c1,
            c2,
            xi,
            yi,
        }
    }

    /// One slot; returns true when both records are set.
    #[inline(always)]
    fn step(&self, st: &mut FastWalk, rng: &mut Rng) -> bool {
        let m = rng.next_u64() >> 11;
        // Thresholds are nondecreasing, so the count of `m >= M[k]` over a
        // prefix window equals min{k : m < M[k]} whenever it is below 4.
        let c = (m >= self.head[0]) as i64
            + (m >= self.head[1]) as i64
            + (m >= self.head[2]) as i64
            + (m >= self.head[3]) as i64;
        let a = if c < 4 {
            c
        } else {
            match self.thresholds[4..].iter().position(|&t| m < t) {
                Some(off) => (4 + off) as i64,
                None => self
                    .arrival
                    .inverse_cdf(m as f64 / (1u64 << 53) as f64) as i64,
            }
        };
        st.w1 += a - self.c1;
        st.w2 += a - self.c2;
        st.hit1 |= st.w1 > self.xi;
        st.hit2 |= st.w2 > self.yi;
        st.hit1 && st.hit2
    }

    /// Run one walk for at most `steps` slots; true on success.
    fn run(&self, st: &mut FastWalk, steps: u64, rng: &mut Rng) -> bool {
        for _ in 0..steps {
            if self.step(st, rng) {
                return true;
            }
        }
        false
    }

    /// Run two replications in lockstep (two independent dependency chains
    /// keep the core busy); each consumes exactly the draws its solo run
    /// would, so results are bit-identical to two [`Self::run`] calls.
    fn run_pair(&self, cap: u64, ra: &mut Rng, rb: &mut Rng) -> (bool, bool) {
        let mut a = FastWalk::START;
        let mut b = FastWalk::START;
        let mut n = 0u64;
        while n < cap {
            let done_a = self.step(&mut a, ra);
            let done_b = self.step(&mut b, rb);
            n += 1;
            if done_a || done_b {
                let rest = cap - n;
                let res_a = done_a || self.run(&mut a, rest, ra);
                let res_b = done_b || self.run(&mut b, rest, rb);
                return (res_a, res_b);
            }
        }
        (false, false)
    }
}
