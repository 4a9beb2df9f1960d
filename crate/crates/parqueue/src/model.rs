//! The parallel-queue dynamics: coupled Lindley recursion, the associated
//! two-dimensional random walk, stability checking, and the bivariate MGF of
//! the increment vector `(A - S^1, A - S^2)`.

use crate::dist::Pmf;
use crate::rng::Rng;
use crate::{Error, Result};

/// Walk coordinates beyond this magnitude abort: silent wraparound would
/// corrupt first-passage detection.
pub const WALK_OVERFLOW_LIMIT: i64 = 1 << 61;

/// Arrival law plus the two service laws, with stability enforced at
/// construction: `E[A] < min(E[S^1], E[S^2])`.
///
/// The same arrival batch feeds both queues; the three laws are sampled
/// independently otherwise. Immutable and freely shareable across threads.
#[derive(Debug, Clone)]
pub struct ParallelQueueModel {
    arrival: Pmf,
    service1: Pmf,
    service2: Pmf,
}

/// Means and the stability verdict for a (possibly rejected) model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub stable: bool,
    pub mean_arrival: f64,
    pub mean_service1: f64,
    pub mean_service2: f64,
}

/// Joint queue-length state `(Q^1, Q^2)`, observed after the previous
/// slot's services and before the current arrival.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueueState {
    pub q1: u64,
    pub q2: u64,
}

/// Free random-walk state `(A_1..n - S^1_1..n, A_1..n - S^2_1..n)` with the
/// slot count; no clamping at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkState {
    pub w1: i64,
    pub w2: i64,
    pub n: u64,
}

impl QueueState {
    pub const ORIGIN: QueueState = QueueState { q1: 0, q2: 0 };

    /// One Lindley slot with the common arrival `a`:
    /// `((q1 + a - s1)_+, (q2 + a - s2)_+)`.
    #[inline]
    pub fn step(self, a: u64, s1: u64, s2: u64) -> QueueState {
        QueueState {
            q1: (self.q1 + a).saturating_sub(s1),
            q2: (self.q2 + a).saturating_sub(s2),
        }
    }
}

impl WalkState {
    pub const ORIGIN: WalkState = WalkState { w1: 0, w2: 0, n: 0 };

    /// One unclamped walk step: `(w1 + a - s1, w2 + a - s2, n + 1)`.
    ///
    /// Panics if a coordinate exceeds `WALK_OVERFLOW_LIMIT` in magnitude.
    #[inline]
    pub fn step(self, a: u64, s1: u64, s2: u64) -> WalkState {
        let w1 = self.w1 + a as i64 - s1 as i64;
        let w2 = self.w2 + a as i64 - s2 as i64;
        assert!(
            w1.abs() <= WALK_OVERFLOW_LIMIT && w2.abs() <= WALK_OVERFLOW_LIMIT,
            "walk coordinate overflow"
        );
        WalkState {
            w1,
            w2,
            n: self.n + 1,
        }
    }
}

impl ParallelQueueModel {
    pub fn new(arrival: Pmf, service1: Pmf, service2: Pmf) -> Result<Self> {
        let report = stability_of(&arrival, &service1, &service2);
        if !report.stable {
            return Err(Error::Unstable {
                ea: report.mean_arrival,
                es1: report.mean_service1,
                es2: report.mean_service2,
            });
        }
        Ok(ParallelQueueModel {
            arrival,
            service1,
            service2,
        })
    }

    pub fn arrival(&self) -> &Pmf {
        &self.arrival
    }

    pub fn service1(&self) -> &Pmf {
        &self.service1
    }

    pub fn service2(&self) -> &Pmf {
        &self.service2
    }

    /// Service law of queue `i` (1-based).
    pub fn service(&self, i: usize) -> &Pmf {
        match i {
            1 => &self.service1,
            2 => &self.service2,
            _ => panic!("queue index must be 1 or 2"),
        }
    }

    pub fn stability(&self) -> StabilityReport {
        stability_of(&self.arrival, &self.service1, &self.service2)
    }

    /// Draw one slot's `(a, s1, s2)`, arrival first, then both services.
    #[inline]
    pub fn sample_step(&self, rng: &mut Rng) -> (u64, u64, u64) {
        let a = self.arrival.sample(rng);
        let s1 = self.service1.sample(rng);
        let s2 = self.service2.sample(rng);
        (a, s1, s2)
    }

    /// Bivariate MGF of the increment vector:
    /// `E exp{t1 (A - S^1) + t2 (A - S^2)}
    ///   = M_A(t1 + t2) M_{S^1}(-t1) M_{S^2}(-t2)`.
    pub fn increment_mgf(&self, theta: [f64; 2]) -> Result<f64> {
        Ok(self.arrival.mgf(theta[0] + theta[1])?
            * self.service1.mgf(-theta[0])?
            * self.service2.mgf(-theta[1])?)
    }

    /// Analytic gradient of [`Self::increment_mgf`].
    pub fn increment_mgf_grad(&self, theta: [f64; 2]) -> Result<[f64; 2]> {
        let t = theta[0] + theta[1];
        let ma = self.arrival.mgf(t)?;
        let ma1 = self.arrival.mgf_d1(t)?;
        let m1 = self.service1.mgf(-theta[0])?;
        let m1d = self.service1.mgf_d1(-theta[0])?;
        let m2 = self.service2.mgf(-theta[1])?;
        let m2d = self.service2.mgf_d1(-theta[1])?;
        Ok([
            ma1 * m1 * m2 - ma * m1d * m2,
            ma1 * m1 * m2 - ma * m1 * m2d,
        ])
    }

    /// Analytic Hessian of [`Self::increment_mgf`].
    pub fn increment_mgf_hessian(&self, theta: [f64; 2]) -> Result<[[f64; 2]; 2]> {
        let t = theta[0] + theta[1];
        let ma = self.arrival.mgf(t)?;
        let ma1 = self.arrival.mgf_d1(t)?;
        let ma2 = self.arrival.mgf_d2(t)?;
        let m1 = self.service1.mgf(-theta[0])?;
        let m1d = self.service1.mgf_d1(-theta[0])?;
        let m1dd = self.service1.mgf_d2(-theta[0])?;
        let m2 = self.service2.mgf(-theta[1])?;
        let m2d = self.service2.mgf_d1(-theta[1])?;
        let m2dd = self.service2.mgf_d2(-theta[1])?;
        let h11 = ma2 * m1 * m2 - 2.0 * ma1 * m1d * m2 + ma * m1dd * m2;
        let h22 = ma2 * m1 * m2 - 2.0 * ma1 * m1 * m2d + ma * m1 * m2dd;
        let h12 = ma2 * m1 * m2 - ma1 * m1 * m2d - ma1 * m1d * m2 + ma * m1d * m2d;
        Ok([[h11, h12], [h12, h22]])
    }
}

/// Stability check usable before a model is constructed, so rejected
/// configurations can still report their means.
pub fn stability_of(arrival: &Pmf, service1: &Pmf, service2: &Pmf) -> StabilityReport {
    let ea = arrival.mean();
    let es1 = service1.mean();
    let es2 = service2.mean();
    StabilityReport {
        stable: ea < es1.min(es2),
        mean_arrival: ea,
        mean_service1: es1,
        mean_service2: es2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn bernoulli_model() -> ParallelQueueModel {
        ParallelQueueModel::new(
            Pmf::bernoulli(0.3).unwrap(),
            Pmf::bernoulli(0.5).unwrap(),
            Pmf::bernoulli(0.6).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn lindley_step_examples() {
        let s = QueueState { q1: 2, q2: 3 };
        assert_eq!(s.step(4, 5, 1), QueueState { q1: 1, q2: 6 });
        assert_eq!(
            QueueState::ORIGIN.step(0, 7, 7),
            QueueState::ORIGIN
        );
        let s = QueueState { q1: 5, q2: 0 };
        assert_eq!(s.step(2, 2, 9), QueueState { q1: 5, q2: 0 });
    }

    #[test]
    fn walk_step_examples() {
        let w = WalkState::ORIGIN.step(3, 1, 2);
        assert_eq!(w, WalkState { w1: 2, w2: 1, n: 1 });
        let w = WalkState { w1: -4, w2: 2, n: 9 }.step(0, 1, 1);
        assert_eq!(w, WalkState { w1: -5, w2: 1, n: 10 });
    }

    #[test]
    fn walk_coordinate_difference_telescopes() {
        // w1 - w2 = S^2_total - S^1_total because common arrivals cancel.
        let model = bernoulli_model();
        let mut rng = Rng::new(5, 0);
        let mut w = WalkState::ORIGIN;
        let (mut sum1, mut sum2) = (0i64, 0i64);
        for _ in 0..10_000 {
            let (a, s1, s2) = model.sample_step(&mut rng);
            w = w.step(a, s1, s2);
            sum1 += s1 as i64;
            sum2 += s2 as i64;
            assert_eq!(w.w1 - w.w2, sum2 - sum1);
        }
    }

    #[test]
    fn stability_gate() {
        let report = stability_of(
            &Pmf::geometric(0.5).unwrap(),
            &Pmf::geometric(0.25).unwrap(),
            &Pmf::geometric(0.25).unwrap(),
        );
        assert!(report.stable);
        assert_relative_eq!(report.mean_arrival, 1.0);
        assert_relative_eq!(report.mean_service1, 3.0);

        // E[A] = E[S^1] fails the strict inequality.
        let r = stability_of(
            &Pmf::bernoulli(0.5).unwrap(),
            &Pmf::bernoulli(0.5).unwrap(),
            &Pmf::bernoulli(0.9).unwrap(),
        );
        assert!(!r.stable);
        assert!(ParallelQueueModel::new(
            Pmf::bernoulli(0.5).unwrap(),
            Pmf::bernoulli(0.5).unwrap(),
            Pmf::bernoulli(0.9).unwrap(),
        )
        .is_err());

        assert!(ParallelQueueModel::new(
            Pmf::bernoulli(0.3).unwrap(),
            Pmf::bernoulli(0.5).unwrap(),
            Pmf::bernoulli(0.6).unwrap(),
        )
        .is_ok());
    }

    #[test]
    fn increment_mgf_at_zero_is_one() {
        assert_eq!(bernoulli_model().increment_mgf([0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn increment_mgf_bernoulli_closed_form() {
        // With theta = (t, 0): E e^{t(A - S1)} = 0.15 e^t + 0.35 e^{-t} + 0.5,
        // which equals 1 at t = ln(7/3) (enumerating the 8 outcomes).
        let model = bernoulli_model();
        let t = (7.0f64 / 3.0).ln();
        assert_relative_eq!(model.increment_mgf([t, 0.0]).unwrap(), 1.0, epsilon = 1e-12);

        // Enumeration oracle at an unrelated point.
        let theta = [0.21, -0.13];
        let mut expect = 0.0;
        for a in 0..=1u64 {
            for s1 in 0..=1u64 {
                for s2 in 0..=1u64 {
                    let pa = if a == 1 { 0.3 } else { 0.7 };
                    let p1 = if s1 == 1 { 0.5 } else { 0.5 };
                    let p2 = if s2 == 1 { 0.6 } else { 0.4 };
                    let inc1 = a as f64 - s1 as f64;
                    let inc2 = a as f64 - s2 as f64;
                    expect += pa * p1 * p2 * (theta[0] * inc1 + theta[1] * inc2).exp();
                }
            }
        }
        assert_relative_eq!(
            model.increment_mgf(theta).unwrap(),
            expect,
            epsilon = 1e-14
        );
    }

    #[test]
    fn increment_mgf_gradient_at_zero_is_mean_increment() {
        let model = bernoulli_model();
        let h = 1e-6;
        let fd1 = (model.increment_mgf([h, 0.0]).unwrap()
            - model.increment_mgf([-h, 0.0]).unwrap())
            / (2.0 * h);
        let fd2 = (model.increment_mgf([0.0, h]).unwrap()
            - model.increment_mgf([0.0, -h]).unwrap())
            / (2.0 * h);
        assert_abs_diff_eq!(fd1, 0.3 - 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(fd2, 0.3 - 0.6, epsilon = 1e-6);

        let grad = model.increment_mgf_grad([0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(grad[0], -0.2, epsilon = 1e-14);
        assert_abs_diff_eq!(grad[1], -0.3, epsilon = 1e-14);
    }

    #[test]
    fn increment_mgf_gradient_and_hessian_match_finite_differences() {
        let model = ParallelQueueModel::new(
            Pmf::geometric(0.5).unwrap(),
            Pmf::geometric(0.25).unwrap(),
            Pmf::geometric(0.3).unwrap(),
        )
        .unwrap();
        let theta = [0.11, 0.07];
        let h = 1e-5;
        let grad = model.increment_mgf_grad(theta).unwrap();
        for i in 0..2 {
            let mut tp = theta;
            let mut tm = theta;
            tp[i] += h;
            tm[i] -= h;
            let fd = (model.increment_mgf(tp).unwrap() - model.increment_mgf(tm).unwrap())
                / (2.0 * h);
            assert_relative_eq!(grad[i], fd, max_relative = 1e-7);
        }
        let hess = model.increment_mgf_hessian(theta).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut tpp = theta;
                tpp[i] += h;
                tpp[j] += h;
                let mut tpm = theta;
                tpm[i] += h;
                tpm[j] -= h;
                let mut tmp = theta;
                tmp[i] -= h;
                tmp[j] += h;
                let mut tmm = theta;
                tmm[i] -= h;
                tmm[j] -= h;
                let fd = (model.increment_mgf(tpp).unwrap() - model.increment_mgf(tpm).unwrap()
                    - model.increment_mgf(tmp).unwrap()
                    + model.increment_mgf(tmm).unwrap())
                    / (4.0 * h * h);
                assert_relative_eq!(hess[i][j], fd, max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn increment_mgf_is_convex_along_lines() {
        let model = bernoulli_model();
        let p = [-0.3, 0.2];
        let q = [0.4, 0.1];
        let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
        let lhs = model.increment_mgf(mid).unwrap();
        let rhs =
            0.5 * (model.increment_mgf(p).unwrap() + model.increment_mgf(q).unwrap());
        assert!(lhs <= rhs + 1e-12);
    }

    #[test]
    fn increment_mgf_matches_monte_carlo() {
        let model = bernoulli_model();
        let theta = [0.3, -0.2];
        let exact = model.increment_mgf(theta).unwrap();
        let mut rng = Rng::new(77, 0);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let (a, s1, s2) = model.sample_step(&mut rng);
            let v = (theta[0] * (a as f64 - s1 as f64)
                + theta[1] * (a as f64 - s2 as f64))
                .exp();
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / n as f64;
        let var = (sumsq / n as f64 - mean * mean) / n as f64;
        assert!(
            (mean - exact).abs() < 3.0 * var.sqrt(),
            "mc {mean} vs exact {exact}"
        );
    }

    #[test]
    fn step_is_monotone_in_the_state() {
        // Coordinatewise monotone coupling under fixed (a, s1, s2).
        let mut rng = Rng::new(3, 1);
        for _ in 0..1000 {
            let a = rng.next_u64() % 5;
            let s1 = rng.next_u64() % 5;
            let s2 = rng.next_u64() % 5;
            let x = QueueState {
                q1: rng.next_u64() % 10,
                q2: rng.next_u64() % 10,
            };
            let y = QueueState {
                q1: x.q1 + rng.next_u64() % 4,
                q2: x.q2 + rng.next_u64() % 4,
            };
            let xs = x.step(a, s1, s2);
            let ys = y.step(a, s1, s2);
            assert!(ys.q1 >= xs.q1 && ys.q2 >= xs.q2);
        }
    }

    #[test]
    fn queue_equals_suffix_maximum_of_increments() {
        // Q_n = max(0, max over suffixes of the increment sums), Q_0 = 0.
        let model = bernoulli_model();
        let mut rng = Rng::new(12, 0);
        for _ in 0..200 {
            let horizon = 1 + (rng.next_u64() % 30) as usize;
            let steps: Vec<(u64, u64, u64)> =
                (0..horizon).map(|_| model.sample_step(&mut rng)).collect();
            let mut q = QueueState::ORIGIN;
            for &(a, s1, s2) in &steps {
                q = q.step(a, s1, s2);
            }
            let suffix_max = |pick: fn(&(u64, u64, u64)) -> (i64, i64)| -> i64 {
                let mut best = 0i64;
                for start in 0..steps.len() {
                    let sum: i64 = steps[start..]
                        .iter()
                        .map(|s| {
                            let (a, svc) = pick(s);
                            a - svc
                        })
                        .sum();
                    best = best.max(sum);
                }
                best
            };
            let q1 = suffix_max(|&(a, s1, _)| (a as i64, s1 as i64));
            let q2 = suffix_max(|&(a, _, s2)| (a as i64, s2 as i64));
            assert_eq!(q.q1 as i64, q1);
            assert_eq!(q.q2 as i64, q2);
        }
    }
}
