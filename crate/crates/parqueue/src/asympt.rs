//! Tail asymptotics: scalar Lundberg exponents for the 1-D projections, the
//! two-dimensional Cramér root along a direction, the light-tail prediction
//! and empirical rate extraction, and the heavy-tail single-big-jump series.

use crate::dist::Pmf;
use crate::math::solve3;
use crate::model::ParallelQueueModel;
use crate::{CramerFailure, Error, Result};
use serde::Serialize;

/// Solution of the Cramér system `phi(gamma) = 1`, `grad phi(gamma) = eta s`
/// along direction `eta`.
///
/// `eta` is normalized to `eta_1 + eta_2 = 1` internally; `s` is reported
/// against the raw direction, so rescaling `eta` by `c` leaves `gamma`
/// unchanged and divides `s` by `c`.
#[derive(Debug, Clone, Serialize)]
pub struct CramerRoot {
    pub gamma: [f64; 2],
    pub s: f64,
    /// Normalized direction (components sum to one).
    pub eta: [f64; 2],
    /// Direction as supplied by the caller.
    pub eta_raw: [f64; 2],
    /// `(|phi(gamma) - 1|, max_i |d_i phi(gamma) - eta_i s|)`.
    pub residuals: [f64; 2],
}

impl CramerRoot {
    /// Conjectured exponential decay rate of `H(n eta_1, n eta_2)` per unit
    /// `n`, in the normalized parameterization: `<gamma, eta>`.
    pub fn decay_rate(&self) -> f64 {
        self.gamma[0] * self.eta[0] + self.gamma[1] * self.eta[1]
    }
}

/// Least-squares fit of `log H(n) = logc + power * log n - rate * n`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateFit {
    /// Exponential decay per unit n.
    pub rate: f64,
    /// Fitted polynomial exponent (the conjectured value is -1/2).
    pub power: f64,
    pub logc: f64,
    /// Coefficient of determination of the fit.
    pub r2: f64,
}

/// Partial sum of the heavy-tail series with a certified remainder bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HeavySeries {
    pub value: f64,
    /// Upper bound on the discarded remainder of the series.
    pub truncation_bound: f64,
    /// Number of terms accumulated.
    pub k_used: u64,
}

/// Unique positive root of `M_A(gamma) M_S(-gamma) = 1` for a stable 1-D
/// projection: bracketing plus bisection, then Newton polish. The residual
/// of the returned root is below 1e-12.
pub fn lundberg_1d(arrival: &Pmf, service: &Pmf) -> Result<f64> {
    if arrival.mean() >= service.mean() {
        return Err(Error::Unstable {
            ea: arrival.mean(),
            es1: service.mean(),
            es2: f64::INFINITY,
        });
    }
    let g = |gamma: f64| -> Option<f64> {
        match (arrival.mgf(gamma), service.mgf(-gamma)) {
            (Ok(a), Ok(s)) => Some(a * s - 1.0),
            _ => None,
        }
    };
    if g(1e-12).is_none() {
        return Err(Error::NoLundbergRoot {
            reason: "arrival mgf has no positive domain (heavy-tailed arrivals)",
        });
    }

    // Walk toward the domain supremum until the equation turns positive.
    let sup = arrival.mgf_domain_sup();
    let mut hi = None;
    if sup.is_finite() {
        for j in 1..200 {
            let gamma = sup * (1.0 - 0.5f64.powi(j));
            match g(gamma) {
                Some(v) if v > 0.0 => {
                    hi = Some(gamma);
                    break;
                }
                Some(_) => continue,
                // Rounding can push the evaluation out of domain near sup.
                None => break,
            }
        }
    } else {
        let mut gamma = 0.25;
        for _ in 0..200 {
            match g(gamma) {
                Some(v) if v > 0.0 => {
                    hi = Some(gamma);
                    break;
                }
                Some(_) => gamma *= 2.0,
                None => break,
            }
            if gamma > 1e9 {
                break;
            }
        }
    }
    let hi = hi.ok_or(Error::NoLundbergRoot {
        reason: "mgf domain exhausted before a sign change",
    })?;

    // The equation is negative just right of zero (negative drift), so
    // bracket [lo, hi] with g(lo) < 0 < g(hi).
    let mut lo = hi * 0.5;
    while g(lo).map(|v| v >= 0.0).unwrap_or(true) {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::NoLundbergRoot {
                reason: "no negative segment above zero (degenerate drift)",
            });
        }
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        match g(mid) {
            Some(v) if v > 0.0 => hi = mid,
            Some(_) => lo = mid,
            None => hi = mid,
        }
        if hi - lo < 1e-13 * hi.max(1.0) {
            break;
        }
    }

    // Newton polish on the product equation.
    let mut gamma = 0.5 * (lo + hi);
    for _ in 0..50 {
        let (ma, ms) = (arrival.mgf(gamma)?, service.mgf(-gamma)?);
        let f = ma * ms - 1.0;
        if f.abs() < 1e-13 {
            break;
        }
        let d = arrival.mgf_d1(gamma)? * ms - ma * service.mgf_d1(-gamma)?;
        let step = f / d;
        let next = gamma - step;
        if !(next > 0.0) || g(next).is_none() {
            break;
        }
        gamma = next;
    }
    let residual = (arrival.mgf(gamma)? * service.mgf(-gamma)? - 1.0).abs();
    if residual >= 1e-12 {
        return Err(Error::NoLundbergRoot {
            reason: "root polish failed to reach residual 1e-12",
        });
    }
    Ok(gamma)
}

/// Solve the three-equation Cramér system
/// `phi(gamma) = 1`, `d_i phi(gamma) = eta_i s` with `s > 0` and
/// `<gamma, eta> > 0`, by damped Newton with the analytic Jacobian.
pub fn solve_cramer(model: &ParallelQueueModel, eta: [f64; 2]) -> Result<CramerRoot> {
    if !(eta[0] > 0.0 && eta[1] > 0.0) {
        return Err(Error::InvalidParameter {
            name: "eta",
            value: eta[0].min(eta[1]),
            reason: "direction components must be strictly positive",
        });
    }
    let scale = eta[0] + eta[1];
    let etan = [eta[0] / scale, eta[1] / scale];

    // Initialize from the 1-D Lundberg exponents of the two projections.
    let g1 = lundberg_1d(model.arrival(), model.service1()).map_err(no_root_to_cramer)?;
    let g2 = lundberg_1d(model.arrival(), model.service2()).map_err(no_root_to_cramer)?;
    let mut gamma = [g1 * etan[0], g2 * etan[1]];
    // Back off until the arrival factor is comfortably inside its domain.
    for _ in 0..200 {
        if model.increment_mgf(gamma).is_ok() {
            break;
        }
        gamma = [gamma[0] * 0.5, gamma[1] * 0.5];
    }
    let grad0 = model
        .increment_mgf_grad(gamma)
        .map_err(|_| Error::NoCramerRoot {
            reason: CramerFailure::DomainExhausted,
        })?;
    let mut s = (grad0[0] * grad0[0] + grad0[1] * grad0[1]).sqrt()
        / (etan[0] * etan[0] + etan[1] * etan[1]).sqrt();
    s = s.max(1e-8);

    let residual_vec = |gamma: [f64; 2], s: f64| -> Result<[f64; 3]> {
        let phi = model.increment_mgf(gamma)?;
        let grad = model.increment_mgf_grad(gamma)?;
        Ok([phi - 1.0, grad[0] - etan[0] * s, grad[1] - etan[1] * s])
    };
    let norm = |f: &[f64; 3]| f.iter().map(|v| v * v).sum::<f64>().sqrt();

    let mut f = residual_vec(gamma, s).map_err(|_| Error::NoCramerRoot {
        reason: CramerFailure::DomainExhausted,
    })?;
    let mut converged = false;
    for _ in 0..200 {
        if norm(&f) < 5e-13 {
            converged = true;
            break;
        }
        let grad = model.increment_mgf_grad(gamma).unwrap();
        let hess = model.increment_mgf_hessian(gamma).unwrap();
        let jac = [
            [grad[0], grad[1], 0.0],
            [hess[0][0], hess[0][1], -etan[0]],
            [hess[1][0], hess[1][1], -etan[1]],
        ];
        let delta = solve3(jac, [-f[0], -f[1], -f[2]], 1e-300).ok_or(Error::NoCramerRoot {
            reason: CramerFailure::NoConvergence,
        })?;

        // Backtrack: stay inside the mgf domain, keep s positive, and
        // require progress on the residual norm.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand_gamma = [gamma[0] + lambda * delta[0], gamma[1] + lambda * delta[1]];
            let cand_s = s + lambda * delta[2];
            if cand_s > 0.0 {
                if let Ok(cand_f) = residual_vec(cand_gamma, cand_s) {
                    if norm(&cand_f) < (1.0 - 0.25 * lambda) * norm(&f) {
                        gamma = cand_gamma;
                        s = cand_s;
                        f = cand_f;
                        accepted = true;
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::NoCramerRoot {
                reason: CramerFailure::NoConvergence,
            });
        }
    }
    if !converged && norm(&f) >= 5e-13 {
        return Err(Error::NoCramerRoot {
            reason: CramerFailure::NoConvergence,
        });
    }

    let rate = gamma[0] * etan[0] + gamma[1] * etan[1];
    if rate <= 1e-9 || (gamma[0].abs() + gamma[1].abs()) < 1e-9 {
        return Err(Error::NoCramerRoot {
            reason: CramerFailure::TrivialRootOnly,
        });
    }

    let phi = model.increment_mgf(gamma).unwrap();
    let grad = model.increment_mgf_grad(gamma).unwrap();
    let res_grad = (grad[0] - etan[0] * s)
        .abs()
        .max((grad[1] - etan[1] * s).abs());
    Ok(CramerRoot {
        gamma,
        s: s / scale,
        eta: etan,
        eta_raw: eta,
        residuals: [(phi - 1.0).abs(), res_grad],
    })
}

fn no_root_to_cramer(e: Error) -> Error {
    match e {
        Error::NoLundbergRoot { .. } => Error::NoCramerRoot {
            reason: CramerFailure::DomainExhausted,
        },
        other => other,
    }
}

/// The conjectured light-tail shape `C n^{-1/2} e^{-<gamma, eta> n}`.
pub fn light_tail_prediction(root: &CramerRoot, n: u64, c: f64) -> f64 {
    let n = n as f64;
    c * n.powf(-0.5) * (-root.decay_rate() * n).exp()
}

/// Fit `log H(n) = logc + power log n - rate n` by least squares.
///
/// Needs at least five points with strictly increasing `n` and positive `H`.
pub fn extract_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 5 {
        return Err(Error::InvalidParameter {
            name: "points",
            value: points.len() as f64,
            reason: "rate fit needs at least 5 points",
        });
    }
    for w in points.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::InvalidParameter {
                name: "points",
                value: w[1].0,
                reason: "n values must be strictly increasing",
            });
        }
    }
    if let Some(&(_, h)) = points.iter().find(|(_, h)| !(*h > 0.0)) {
        return Err(Error::InvalidParameter {
            name: "points",
            value: h,
            reason: "H values must be strictly positive",
        });
    }

    // Normal equations for the design [1, log n, -n].
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for &(n, h) in points {
        let row = [1.0, n.ln(), -n];
        let y = h.ln();
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * y;
        }
    }
    let coeff = solve3(ata, atb, 1e-12).ok_or(Error::DegenerateFit)?;

    let mean_y = points.iter().map(|&(_, h)| h.ln()).sum::<f64>() / points.len() as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for &(n, h) in points {
        let y = h.ln();
        let fitted = coeff[0] + coeff[1] * n.ln() - coeff[2] * n;
        ss_res += (y - fitted) * (y - fitted);
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Ok(RateFit {
        logc: coeff[0],
        power: coeff[1],
        rate: coeff[2],
        r2,
    })
}

/// P(A > t) for a real threshold `t`: strict ceiling mapping to integer
/// tails (`tail(ceil(t) - 1)` off the integers, `tail(t)` on them).
fn real_tail(d: &Pmf, t: f64) -> f64 {
    if t < 0.0 {
        return 1.0;
    }
    let c = t.ceil();
    let arg = if c == t { t as i64 } else { c as i64 - 1 };
    d.tail(arg)
}

/// Heavy-tail single-big-jump series
/// `sum_k P(A > max{n eta_1 + k E[S^1], n eta_2 + k E[S^2]})`, truncated
/// once the certified remainder drops below `rel_tol` times the partial sum.
pub fn heavy_series(
    model: &ParallelQueueModel,
    eta: [f64; 2],
    n: u64,
    rel_tol: f64,
) -> Result<HeavySeries> {
    if !(eta[0] > 0.0 && eta[1] > 0.0) {
        return Err(Error::InvalidParameter {
            name: "eta",
            value: eta[0].min(eta[1]),
            reason: "direction components must be strictly positive",
        });
    }
    heavy_precheck(model)?;
    let arrival = model.arrival();
    let es = [model.service1().mean(), model.service2().mean()];
    let base = [n as f64 * eta[0], n as f64 * eta[1]];

    // Dominating coordinate: steeper service slope wins eventually; ties go
    // to the larger offset.
    let dom = if es[0] > es[1] || (es[0] == es[1] && base[0] >= base[1]) {
        0
    } else {
        1
    };

    let mut value = 0.0;
    let mut k = 0u64;
    let remainder = |k_next: u64| -> f64 {
        // sum_{k >= k_next} P(A > b + k c) <= (1/c) int_{b + (k_next - 1) c}^inf P(A > u) du.
        arrival.tail_integral_upper(base[dom] + (k_next as f64 - 1.0) * es[dom]) / es[dom]
    };
    loop {
        let t = (base[0] + k as f64 * es[0]).max(base[1] + k as f64 * es[1]);
        let term = real_tail(arrival, t);
        if term == 0.0 {
            // Bounded arrivals: every later term vanishes too.
            return Ok(HeavySeries {
                value,
                truncation_bound: 0.0,
                k_used: if value == 0.0 { 0 } else { k },
            });
        }
        value += term;
        k += 1;
        let rem = remainder(k);
        if rem < rel_tol * value || k > 100_000_000 {
            return Ok(HeavySeries {
                value,
                truncation_bound: rem,
                k_used: k,
            });
        }
    }
}

/// Shared preconditions of the heavy-tail machinery: both services strictly
/// positive, and no Lundberg root in either 1-D projection (a root means
/// the model is light-tailed and the light-tail tooling applies instead).
pub(crate) fn heavy_precheck(model: &ParallelQueueModel) -> Result<()> {
    if model.service1().pmf(0) > 0.0 || model.service2().pmf(0) > 0.0 {
        return Err(Error::PreconditionFailed(
            "heavy-tail machinery requires P(S^i = 0) = 0 for both services".into(),
        ));
    }
    for i in [1, 2] {
        if lundberg_1d(model.arrival(), model.service(i)).is_ok() {
            return Err(Error::PreconditionFailed(format!(
                "arrival law is light-tailed: projection {i} has a Lundberg root"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Pmf;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn bernoulli_model() -> ParallelQueueModel {
        ParallelQueueModel::new(
            Pmf::bernoulli(0.3).unwrap(),
            Pmf::bernoulli(0.5).unwrap(),
            Pmf::bernoulli(0.6).unwrap(),
        )
        .unwrap()
    }

    fn geometric_model() -> ParallelQueueModel {
        ParallelQueueModel::new(
            Pmf::geometric(0.5).unwrap(),
            Pmf::geometric(0.25).unwrap(),
            Pmf::geometric(0.3).unwrap(),
        )
        .unwrap()
    }

    fn heavy_model() -> ParallelQueueModel {
        ParallelQueueModel::new(
            Pmf::discrete_pareto(2.5).unwrap(),
            Pmf::deterministic(2),
            Pmf::deterministic(3),
        )
        .unwrap()
    }

    #[test]
    fn lundberg_anchors() {
        // 0.15 u^2 - 0.5 u + 0.35 = 0 has roots u = 1, 7/3.
        let g =
            lundberg_1d(&Pmf::bernoulli(0.3).unwrap(), &Pmf::bernoulli(0.5).unwrap()).unwrap();
        assert_abs_diff_eq!(g, (7.0f64 / 3.0).ln(), epsilon = 1e-9);

        // 0.5 u^2 - 1.25 u + 0.75 = 0 has roots u = 1, 1.5.
        let g =
            lundberg_1d(&Pmf::geometric(0.5).unwrap(), &Pmf::geometric(0.25).unwrap()).unwrap();
        assert_abs_diff_eq!(g, 1.5f64.ln(), epsilon = 1e-9);
    }

    #[test]
    fn lundberg_rejects_heavy_arrivals() {
        let err = lundberg_1d(&Pmf::discrete_pareto(2.5).unwrap(), &Pmf::deterministic(2))
            .unwrap_err();
        assert!(matches!(err, Error::NoLundbergRoot { .. }));
    }

    #[test]
    fn lundberg_rejects_nonpositive_increments() {
        // max A <= min S: the walk can never climb.
        let err = lundberg_1d(&Pmf::finite(vec![0.5, 0.5]).unwrap(), &Pmf::deterministic(2))
            .unwrap_err();
        assert!(matches!(err, Error::NoLundbergRoot { .. }));
    }

    #[test]
    fn cramer_root_symmetric_model() {
        let model = ParallelQueueModel::new(
            Pmf::geometric(0.5).unwrap(),
            Pmf::geometric(0.25).unwrap(),
            Pmf::geometric(0.25).unwrap(),
        )
        .unwrap();
        let root = solve_cramer(&model, [1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(root.gamma[0], root.gamma[1], epsilon = 1e-10);
        assert!(root.residuals[0] < 1e-10 && root.residuals[1] < 1e-10);
        assert!(root.s > 0.0);
        assert!(root.decay_rate() > 0.0);
    }

    #[test]
    fn cramer_residual_contract_and_domain() {
        for model in [bernoulli_model(), geometric_model()] {
            let root = solve_cramer(&model, [0.5, 0.5]).unwrap();
            assert!(root.residuals[0] < 1e-10);
            assert!(root.residuals[1] < 1e-10);
            // Strictly inside the mgf domain of all three factors.
            let phi = model.increment_mgf(root.gamma).unwrap();
            assert_abs_diff_eq!(phi, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn cramer_scaling_in_eta() {
        let model = geometric_model();
        let r1 = solve_cramer(&model, [0.5, 0.5]).unwrap();
        let r2 = solve_cramer(&model, [1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(r1.gamma[0], r2.gamma[0], epsilon = 1e-10);
        assert_abs_diff_eq!(r1.gamma[1], r2.gamma[1], epsilon = 1e-10);
        assert_abs_diff_eq!(r1.s, 2.0 * r2.s, epsilon = 1e-10 * r1.s.abs());
    }

    #[test]
    fn cramer_degenerate_direction_approaches_1d_rate() {
        let model = bernoulli_model();
        let root = solve_cramer(&model, [1.0, 0.0001]).unwrap();
        let g1 = (7.0f64 / 3.0).ln();
        // <gamma, eta_raw> per raw unit n equals decay_rate * (eta1 + eta2).
        let rate = root.decay_rate() * 1.0001;
        assert!((rate - g1).abs() / g1 < 0.05, "rate {rate} vs 1-D {g1}");
    }

    #[test]
    fn cramer_rejects_heavy_model() {
        let err = solve_cramer(&heavy_model(), [1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NoCramerRoot { .. }));
    }

    #[test]
    fn light_tail_prediction_shape() {
        let model = geometric_model();
        let root = solve_cramer(&model, [0.5, 0.5]).unwrap();
        let rho = root.decay_rate();
        assert_relative_eq!(
            light_tail_prediction(&root, 1, 1.0),
            (-rho).exp(),
            epsilon = 1e-12
        );
        // prediction(2n)/prediction(n) = 2^{-1/2} e^{-rho n}.
        for n in [3u64, 8, 17] {
            let ratio =
                light_tail_prediction(&root, 2 * n, 1.7) / light_tail_prediction(&root, n, 1.7);
            assert_relative_eq!(
                ratio,
                0.5f64.sqrt() * (-rho * n as f64).exp(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn extract_rate_recovers_exact_model() {
        let (logc, power, rate) = (0.7, -0.5, 0.345);
        let points: Vec<(f64, f64)> = (4..=20)
            .step_by(2)
            .map(|n| {
                let n = n as f64;
                (n, (logc + power * n.ln() - rate * n).exp())
            })
            .collect();
        let fit = extract_rate(&points).unwrap();
        assert_abs_diff_eq!(fit.logc, logc, epsilon = 1e-8);
        assert_abs_diff_eq!(fit.power, power, epsilon = 1e-8);
        assert_abs_diff_eq!(fit.rate, rate, epsilon = 1e-8);
        assert!(fit.r2 > 1.0 - 1e-12);
    }

    #[test]
    fn extract_rate_handles_pure_exponential() {
        // Without any polynomial factor the fitted power should be near 0.
        let points: Vec<(f64, f64)> = (4..=40)
            .step_by(4)
            .map(|n| {
                let n = n as f64;
                (n, 2.0 * (-0.3 * n).exp())
            })
            .collect();
        let fit = extract_rate(&points).unwrap();
        assert!(fit.power.abs() < 0.15, "power = {}", fit.power);
        assert_relative_eq!(fit.rate, 0.3, max_relative = 0.05);
    }

    #[test]
    fn extract_rate_degenerate_inputs() {
        let err = extract_rate(&[(1.0, 0.5), (1.0, 0.4), (2.0, 0.3), (3.0, 0.2), (4.0, 0.1)])
            .unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { .. }));
        assert!(extract_rate(&[(1.0, 0.5); 3]).is_err());
    }

    #[test]
    fn heavy_series_matches_direct_summation_symmetric() {
        // Symmetric case: series = sum_k P(A > n + 2k), checked against a
        // brute-force sum with a huge cutoff.
        let model = ParallelQueueModel::new(
            Pmf::discrete_pareto(2.5).unwrap(),
            Pmf::deterministic(2),
            Pmf::deterministic(2),
        )
        .unwrap();
        let n = 50u64;
        let series = heavy_series(&model, [1.0, 1.0], n, 1e-9).unwrap();
        let arrival = Pmf::discrete_pareto(2.5).unwrap();
        let brute: f64 = (0..10_000_000u64)
            .map(|k| arrival.tail((n + 2 * k) as i64))
            .sum();
        assert_relative_eq!(series.value, brute, max_relative = 1e-6);
        assert!(series.truncation_bound < 1e-8 * series.value);
    }

    #[test]
    fn heavy_series_remainder_is_certified() {
        let model = heavy_model();
        for n in [25u64, 50, 100] {
            let coarse = heavy_series(&model, [1.0, 1.0], n, 1e-4).unwrap();
            let fine = heavy_series(&model, [1.0, 1.0], n, 1e-12).unwrap();
            assert!(fine.k_used > coarse.k_used);
            // Partial sum plus bound is an upper bound on the refined value.
            assert!(coarse.value + coarse.truncation_bound >= fine.value);
            assert!(coarse.value <= fine.value);
        }
    }

    #[test]
    fn heavy_series_monotone_in_n() {
        let model = heavy_model();
        let mut prev = f64::INFINITY;
        for n in [10u64, 20, 40, 80] {
            let s = heavy_series(&model, [1.0, 1.0], n, 1e-10).unwrap().value;
            assert!(s < prev);
            prev = s;
        }
    }

    #[test]
    fn heavy_series_bounded_arrivals_vanish() {
        // Arrival support {0, 1}, services deterministic >= 2: no Lundberg
        // root exists, so the precondition passes, and once n exceeds the
        // arrival support every term is zero.
        let model = ParallelQueueModel::new(
            Pmf::finite(vec![0.5, 0.5]).unwrap(),
            Pmf::deterministic(2),
            Pmf::deterministic(3),
        )
        .unwrap();
        let s = heavy_series(&model, [1.0, 1.0], 2, 1e-9).unwrap();
        assert_eq!(s.value, 0.0);
        assert_eq!(s.k_used, 0);
        assert_eq!(s.truncation_bound, 0.0);
    }

    #[test]
    fn heavy_series_rejects_wrong_regimes() {
        // Light-tailed arrivals.
        let err = heavy_series(&geometric_model(), [1.0, 1.0], 10, 1e-6).unwrap_err();
        assert!(matches!(err, Error::PreconditionFailed(_)));
        // Stable model whose first service can be zero.
        let model = ParallelQueueModel::new(
            Pmf::discrete_pareto(2.5).unwrap(),
            Pmf::finite(vec![0.1, 0.0, 0.9]).unwrap(),
            Pmf::deterministic(2),
        )
        .unwrap();
        let err = heavy_series(&model, [1.0, 1.0], 10, 1e-6).unwrap_err();
        assert!(matches!(err, Error::PreconditionFailed(_)));
    }

    #[test]
    fn real_tail_strict_ceiling() {
        let d = Pmf::discrete_pareto(2.0).unwrap();
        // Non-integer threshold: P(A > 3.5) = P(A > 3) = tail(3).
        assert_eq!(real_tail(&d, 3.5), d.tail(3));
        // Integer threshold keeps the strict inequality: P(A > 3) = tail(3).
        assert_eq!(real_tail(&d, 3.0), d.tail(3));
        assert_eq!(real_tail(&d, 0.0), d.tail(0));
        assert_eq!(real_tail(&d, -1.0), 1.0);
    }
}
