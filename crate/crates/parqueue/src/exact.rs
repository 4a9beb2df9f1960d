//! Ground-truth numerics: the truncated stationary distribution of the
//! Markov chain `(Q^1_n, Q^2_n)` by power iteration, balance residuals, the
//! joint tail `H(x, y)` read off the grid, a 1-D oracle for the marginals,
//! and numeric evaluation of the bivariate generating function.
//!
//! The transition kernel is applied matrix-free in three passes: a diagonal
//! shift by the common arrival, then each service applied to its own
//! coordinate with the clamp at zero. Mass landing beyond the truncation
//! box is discarded and tracked as `deficit`, which makes every grid entry
//! (and every `H` value) a certified lower bound.

use crate::dist::Pmf;
use crate::math::kahan_sum;
use crate::model::ParallelQueueModel;
use crate::{Error, Result};
use num_complex::Complex64;
use std::io::{Read, Write};

/// Tail mass below which arrival/service laws are truncated to finite
/// tables for the kernel sums.
pub const KERNEL_TAIL_TOL: f64 = 1e-14;

const SNAPSHOT_MAGIC: &[u8; 7] = b"PQGRID1";

/// Truncated joint distribution `p(m, n)` on `0..=n1 x 0..=n2` with the
/// tracked mass deficit and solver metadata.
#[derive(Debug, Clone)]
pub struct TruncatedGrid {
    n1: usize,
    n2: usize,
    /// Row-major: `p[m * (n2 + 1) + n]`.
    p: Vec<f64>,
    deficit: f64,
    iterations: u64,
    residual: f64,
}

/// `H(x, y)` read off a grid: a certified lower bound, the matching upper
/// bound `value + deficit`, and whether the query fell outside the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HValue {
    pub value: f64,
    pub upper: f64,
    pub truncated: bool,
}

impl TruncatedGrid {
    /// Point mass at (0, 0) on the given box.
    pub fn point_mass(n1: usize, n2: usize) -> Self {
        let mut p = vec![0.0; (n1 + 1) * (n2 + 1)];
        p[0] = 1.0;
        TruncatedGrid {
            n1,
            n2,
            p,
            deficit: 0.0,
            iterations: 0,
            residual: 0.0,
        }
    }

    /// Wrap an explicit probability table (row-major, length
    /// `(n1+1)(n2+1)`).
    pub fn from_weights(n1: usize, n2: usize, p: Vec<f64>) -> Result<Self> {
        if p.len() != (n1 + 1) * (n2 + 1) {
            return Err(Error::InvalidParameter {
                name: "p",
                value: p.len() as f64,
                reason: "weight table does not match the grid dimensions",
            });
        }
        if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter {
                name: "p",
                value: f64::NAN,
                reason: "weights must be finite and nonnegative",
            });
        }
        Ok(TruncatedGrid {
            n1,
            n2,
            p,
            deficit: 0.0,
            iterations: 0,
            residual: 0.0,
        })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn deficit(&self) -> f64 {
        self.deficit
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    /// L1 change of the final sweep.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    #[inline]
    pub fn prob(&self, m: usize, n: usize) -> f64 {
        self.p[m * (self.n2 + 1) + n]
    }

    pub fn total_mass(&self) -> f64 {
        kahan_sum(self.p.iter().copied())
    }

    /// Strict joint tail `H(x, y) = sum_{m > x, n > y} p(m, n)`, summed from
    /// the far corner so the smallest entries accumulate first.
    pub fn h(&self, x: u64, y: u64) -> HValue {
        let truncated = x >= self.n1 as u64 || y >= self.n2 as u64;
        let mut value = 0.0;
        if !truncated {
            let xs = x as usize + 1;
            let ys = y as usize + 1;
            let mut terms = Vec::with_capacity(self.n1 + 1 - xs);
            for m in (xs..=self.n1).rev() {
                let row = &self.p[m * (self.n2 + 1)..];
                terms.push(kahan_sum(row[ys..=self.n2].iter().rev().copied()));
            }
            value = kahan_sum(terms);
        }
        HValue {
            value,
            upper: (value + self.deficit).min(1.0),
            truncated,
        }
    }

    /// Marginal law of `Q^1` (row sums).
    pub fn marginal1(&self) -> Vec<f64> {
        (0..=self.n1)
            .map(|m| kahan_sum(self.p[m * (self.n2 + 1)..(m + 1) * (self.n2 + 1)].iter().copied()))
            .collect()
    }

    /// Marginal law of `Q^2` (column sums).
    pub fn marginal2(&self) -> Vec<f64> {
        (0..=self.n2)
            .map(|n| kahan_sum((0..=self.n1).map(|m| self.prob(m, n))))
            .collect()
    }

    /// Bivariate generating function `sum z^m w^n p(m, n)` over the grid;
    /// truncation error is bounded by the deficit for |z|, |w| <= 1.
    pub fn pgf(&self, z: Complex64, w: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut zpow = Complex64::new(1.0, 0.0);
        for m in 0..=self.n1 {
            let row = &self.p[m * (self.n2 + 1)..(m + 1) * (self.n2 + 1)];
            // Horner in w from the top of the row.
            let mut row_val = Complex64::new(0.0, 0.0);
            for &pv in row.iter().rev() {
                row_val = row_val * w + pv;
            }
            acc += zpow * row_val;
            zpow *= z;
        }
        acc
    }

    /// CSV export with header `m,n,p`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "m,n,p")?;
        for m in 0..=self.n1 {
            for n in 0..=self.n2 {
                writeln!(out, "{},{},{}", m, n, self.prob(m, n))?;
            }
        }
        Ok(())
    }

    /// Binary snapshot: magic `PQGRID1`, then little-endian `u64` n1, n2,
    /// iterations, `f64` deficit, residual, and the row-major table.
    pub fn write_snapshot<W: Write>(&self, out: &mut W) -> Result<()> {
        out.write_all(SNAPSHOT_MAGIC)?;
        out.write_all(&(self.n1 as u64).to_le_bytes())?;
        out.write_all(&(self.n2 as u64).to_le_bytes())?;
        out.write_all(&self.iterations.to_le_bytes())?;
        out.write_all(&self.deficit.to_le_bytes())?;
        out.write_all(&self.residual.to_le_bytes())?;
        for v in &self.p {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Read back a [`Self::write_snapshot`] stream.
    pub fn read_snapshot<R: Read>(input: &mut R) -> Result<Self> {
        let mut magic = [0u8; 7];
        input.read_exact(&mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(Error::Io("bad snapshot magic".into()));
        }
        let mut u64buf = [0u8; 8];
        let mut read_u64 = |input: &mut R| -> Result<u64> {
            input.read_exact(&mut u64buf)?;
            Ok(u64::from_le_bytes(u64buf))
        };
        let n1 = read_u64(input)? as usize;
        let n2 = read_u64(input)? as usize;
        let iterations = read_u64(input)?;
        let mut f64buf = [0u8; 8];
        let mut read_f64 = |input: &mut R| -> Result<f64> {
            input.read_exact(&mut f64buf)?;
            Ok(f64::from_le_bytes(f64buf))
        };
        let deficit = read_f64(input)?;
        let residual = read_f64(input)?;
        let mut p = vec![0.0; (n1 + 1) * (n2 + 1)];
        for v in &mut p {
            *v = read_f64(input)?;
        }
        Ok(TruncatedGrid {
            n1,
            n2,
            p,
            deficit,
            iterations,
            residual,
        })
    }
}

/// Finite tables of the three laws, precomputed for kernel application.
struct Kernel {
    a: Vec<f64>,
    s1: Vec<f64>,
    s2: Vec<f64>,
    /// `s1_ge[j] = sum_{s >= j} s1[s]`; drives the clamp-at-zero row.
    s1_ge: Vec<f64>,
    s2_ge: Vec<f64>,
}

impl Kernel {
    fn new(model: &ParallelQueueModel) -> Kernel {
        let (a, _) = model.arrival().to_truncated_table(KERNEL_TAIL_TOL);
        let (s1, _) = model.service1().to_truncated_table(KERNEL_TAIL_TOL);
        let (s2, _) = model.service2().to_truncated_table(KERNEL_TAIL_TOL);
        let ge = |t: &[f64]| -> Vec<f64> {
            // Summed from the top for accuracy.
            let mut out = vec![0.0; t.len() + 1];
            for j in (0..t.len()).rev() {
                out[j] = out[j + 1] + t[j];
            }
            out
        };
        Kernel {
            s1_ge: ge(&s1),
            s2_ge: ge(&s2),
            a,
            s1,
            s2,
        }
    }

    /// One kernel application. `p_in` is row-major on `0..=n1 x 0..=n2`;
    /// returns the updated table and the mass lost to the box boundary and
    /// to kernel truncation. Every destination cell accumulates its
    /// contributions in a fixed order, so the result does not depend on any
    /// parallel schedule.
    fn apply(&self, p_in: &[f64], n1: usize, n2: usize) -> (Vec<f64>, f64) {
        let ka = self.a.len() - 1;
        let e1 = n1 + ka; // extended rows after the diagonal shift
        let e2 = n2 + ka;
        let w_in = n2 + 1;
        let w_ext = e2 + 1;

        // Pass 1: diagonal shift by the common arrival.
        let mut shifted = vec![0.0; (e1 + 1) * w_ext];
        for m in 0..=n1 {
            let src = &p_in[m * w_in..(m + 1) * w_in];
            for (a, &pa) in self.a.iter().enumerate() {
                if pa == 0.0 {
                    continue;
                }
                let dst = &mut shifted[(m + a) * w_ext + a..];
                for (n, &pv) in src.iter().enumerate() {
                    dst[n] += pa * pv;
                }
            }
        }

        // Pass 2: serve coordinate 1; final row index is m' <= n1, the rest
        // is discarded (it cannot re-enter the box).
        let mut mid = vec![0.0; (n1 + 1) * w_ext];
        {
            // Clamp row m' = 0: everything served at or below zero.
            let dst = &mut mid[0..w_ext];
            for j in 0..=e1.min(self.s1_ge.len() - 1) {
                let g = self.s1_ge[j];
                if g == 0.0 {
                    continue;
                }
                let src = &shifted[j * w_ext..(j + 1) * w_ext];
                for (n, &sv) in src.iter().enumerate() {
                    dst[n] += g * sv;
                }
            }
        }
        for mp in 1..=n1 {
            let dst = &mut mid[mp * w_ext..(mp + 1) * w_ext];
            for (s, &ps) in self.s1.iter().enumerate() {
                if ps == 0.0 || mp + s > e1 {
                    continue;
                }
                let src = &shifted[(mp + s) * w_ext..(mp + s + 1) * w_ext];
                for (n, &sv) in src.iter().enumerate() {
                    dst[n] += ps * sv;
                }
            }
        }
        drop(shifted);

        // Pass 3: serve coordinate 2; final column index is n' <= n2.
        let w_out = n2 + 1;
        let mut out = vec![0.0; (n1 + 1) * w_out];
        for m in 0..=n1 {
            let src = &mid[m * w_ext..(m + 1) * w_ext];
            let dst = &mut out[m * w_out..(m + 1) * w_out];
            // Clamp column n' = 0.
            let mut clamp = 0.0;
            for j in 0..=e2.min(self.s2_ge.len() - 1) {
                clamp += self.s2_ge[j] * src[j];
            }
            dst[0] = clamp;
            for (s, &ps) in self.s2.iter().enumerate() {
                if ps == 0.0 {
                    continue;
                }
                let hi = w_out.min(w_ext.saturating_sub(s));
                for np in 1..hi {
                    dst[np] += ps * src[np + s];
                }
            }
        }

        let sum_in = kahan_sum(p_in.iter().copied());
        let sum_out = kahan_sum(out.iter().copied());
        (out, (sum_in - sum_out).max(0.0))
    }
}

/// Apply the transition kernel once. Kernel tables are rebuilt per call;
/// use [`stationary`] for iterated application.
pub fn transition_apply(grid: &TruncatedGrid, model: &ParallelQueueModel) -> TruncatedGrid {
    let kernel = Kernel::new(model);
    let (p, lost) = kernel.apply(&grid.p, grid.n1, grid.n2);
    let residual = l1_diff(&grid.p, &p);
    TruncatedGrid {
        n1: grid.n1,
        n2: grid.n2,
        p,
        deficit: grid.deficit + lost,
        iterations: grid.iterations + 1,
        residual,
    }
}

fn l1_diff(a: &[f64], b: &[f64]) -> f64 {
    kahan_sum(a.iter().zip(b).map(|(x, y)| (x - y).abs()))
}

/// L1 distance between the mass-normalized versions of two tables.
///
/// Convergence is measured shape-to-shape: the truncated kernel leaks a
/// little mass through the box boundary every sweep, so the raw sweep
/// difference can never drop below the leak rate, while the normalized
/// difference converges to the quasi-stationary distribution that the final
/// renormalization reports.
fn l1_diff_normalized(a: &[f64], b: &[f64]) -> f64 {
    let ma = kahan_sum(a.iter().copied());
    let mb = kahan_sum(b.iter().copied());
    if ma <= 0.0 || mb <= 0.0 {
        return l1_diff(a, b);
    }
    kahan_sum(a.iter().zip(b).map(|(x, y)| (x / ma - y / mb).abs()))
}

/// Truncated stationary distribution by power iteration from the point mass
/// at (0, 0), stopping when the L1 change per sweep drops below `tol`. The
/// final grid is renormalized; cumulative lost mass is reported as deficit.
pub fn stationary(
    model: &ParallelQueueModel,
    n1: usize,
    n2: usize,
    tol: f64,
    max_iter: u64,
) -> Result<TruncatedGrid> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: tol,
            reason: "tolerance must be positive",
        });
    }
    let kernel = Kernel::new(model);
    let mut grid = TruncatedGrid::point_mass(n1, n2);
    let mut deficit = 0.0;
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < max_iter {
        let (next, lost) = kernel.apply(&grid.p, n1, n2);
        deficit += lost;
        iterations += 1;
        residual = l1_diff_normalized(&grid.p, &next);
        grid.p = next;
        if residual < tol {
            let total = grid.total_mass();
            for v in &mut grid.p {
                *v /= total;
            }
            grid.deficit = deficit;
            grid.iterations = iterations;
            grid.residual = residual;
            return Ok(grid);
        }
    }
    Err(Error::NoConvergence {
        iterations,
        residual,
    })
}

/// Max-norm balance residual `max |p(m, n) - (Kp)(m, n)|` over interior
/// cells, i.e. cells whose inflow is fully representable inside the box.
pub fn balance_residual(grid: &TruncatedGrid, model: &ParallelQueueModel) -> f64 {
    let kernel = Kernel::new(model);
    let (kp, _) = kernel.apply(&grid.p, grid.n1, grid.n2);
    let k1 = kernel.s1.len() - 1;
    let k2 = kernel.s2.len() - 1;
    let m_hi = grid.n1.saturating_sub(k1);
    let n_hi = grid.n2.saturating_sub(k2);
    let w = grid.n2 + 1;
    let mut worst = 0.0f64;
    for m in 0..=m_hi {
        for n in 0..=n_hi {
            let idx = m * w + n;
            worst = worst.max((grid.p[idx] - kp[idx]).abs());
        }
    }
    worst
}

/// Stationary law of the single-queue recursion `q' = (q + A - S)_+` by the
/// same truncated power iteration; the independent oracle for the 2-D
/// solver's marginals.
pub fn marginal_stationary_1d(
    arrival: &Pmf,
    service: &Pmf,
    n: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    if arrival.mean() >= service.mean() {
        return Err(Error::Unstable {
            ea: arrival.mean(),
            es1: service.mean(),
            es2: f64::INFINITY,
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: tol,
            reason: "tolerance must be positive",
        });
    }
    const MAX_ITER: u64 = 200_000;
    let (a, _) = arrival.to_truncated_table(KERNEL_TAIL_TOL);
    let (s, _) = service.to_truncated_table(KERNEL_TAIL_TOL);
    let mut s_ge = vec![0.0; s.len() + 1];
    for j in (0..s.len()).rev() {
        s_ge[j] = s_ge[j + 1] + s[j];
    }
    let ka = a.len() - 1;
    let ext = n + ka;

    let mut p = vec![0.0; n + 1];
    p[0] = 1.0;
    let mut shifted = vec![0.0; ext + 1];
    for it in 1..=MAX_ITER {
        shifted.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..=n {
            let pv = p[k];
            if pv == 0.0 {
                continue;
            }
            for (ai, &pa) in a.iter().enumerate() {
                shifted[k + ai] += pa * pv;
            }
        }
        let mut next = vec![0.0; n + 1];
        let mut clamp = 0.0;
        for j in 0..=ext.min(s_ge.len() - 1) {
            clamp += s_ge[j] * shifted[j];
        }
        next[0] = clamp;
        for kp in 1..=n {
            let mut acc = 0.0;
            for (si, &ps) in s.iter().enumerate() {
                if kp + si <= ext {
                    acc += ps * shifted[kp + si];
                }
            }
            next[kp] = acc;
        }
        let residual = l1_diff_normalized(&p, &next);
        p = next;
        if residual < tol {
            let total = kahan_sum(p.iter().copied());
            p.iter_mut().for_each(|v| *v /= total);
            return Ok(p);
        }
        if it == MAX_ITER {
            return Err(Error::NoConvergence {
                iterations: it,
                residual,
            });
        }
    }
    unreachable!()
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

    #[test]
    fn zero_arrivals_fix_the_origin() {
        let model = ParallelQueueModel::new(
            Pmf::deterministic(0),
            Pmf::bernoulli(0.5).unwrap(),
            Pmf::bernoulli(0.6).unwrap(),
        )
        .unwrap();
        let grid = TruncatedGrid::point_mass(8, 8);
        let out = transition_apply(&grid, &model);
        assert_eq!(out.prob(0, 0), 1.0);
        assert_eq!(balance_residual(&out, &model), 0.0);

        let st = stationary(&model, 8, 8, 1e-13, 100).unwrap();
        assert_eq!(st.prob(0, 0), 1.0);
        assert!(st.h(0, 0).value == 0.0 && st.h(3, 5).value == 0.0);
    }

    #[test]
    fn single_step_from_origin_matches_enumeration() {
        // p_out(1,1) = P(A=1) P(S1=0) P(S2=0) = 0.3 * 0.5 * 0.4.
        let model = bernoulli_model();
        let grid = TruncatedGrid::point_mass(4, 4);
        let out = transition_apply(&grid, &model);
        assert_relative_eq!(out.prob(1, 1), 0.06, epsilon = 1e-14);
        // Everything else from (0,0) collapses to the axes.
        assert_relative_eq!(
            out.prob(0, 0) + out.prob(0, 1) + out.prob(1, 0) + out.prob(1, 1),
            1.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn kernel_conserves_mass_when_the_box_is_large() {
        let model = geometric_model();
        let grid = TruncatedGrid::point_mass(80, 80);
        let out = transition_apply(&grid, &model);
        // One step from the origin cannot reach the boundary, so the only
        // loss is the 1e-14 kernel truncation.
        assert!(out.deficit() < 1e-12);
        assert_relative_eq!(out.total_mass(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn mass_accounting_is_consistent() {
        let model = geometric_model();
        let mut grid = TruncatedGrid::point_mass(12, 12);
        for _ in 0..50 {
            let next = transition_apply(&grid, &model);
            let conserved = next.total_mass() + (next.deficit() - grid.deficit());
            assert_abs_diff_eq!(conserved, grid.total_mass(), epsilon = 1e-12);
            grid = next;
        }
        assert!(grid.deficit() > 0.0);
    }

    #[test]
    fn stationary_marginals_match_1d_oracle() {
        let model = bernoulli_model();
        let grid = stationary(&model, 64, 64, 1e-12, 20_000).unwrap();
        let m1 = grid.marginal1();
        let m2 = grid.marginal2();
        let o1 = marginal_stationary_1d(model.arrival(), model.service1(), 64, 1e-12).unwrap();
        let o2 = marginal_stationary_1d(model.arrival(), model.service2(), 64, 1e-12).unwrap();
        for k in 0..=64 {
            assert_abs_diff_eq!(m1[k], o1[k], epsilon = 1e-10);
            assert_abs_diff_eq!(m2[k], o2[k], epsilon = 1e-10);
        }
    }

    #[test]
    fn symmetric_services_give_symmetric_grid() {
        let model = ParallelQueueModel::new(
            Pmf::geometric(0.5).unwrap(),
            Pmf::geometric(0.25).unwrap(),
            Pmf::geometric(0.25).unwrap(),
        )
        .unwrap();
        let grid = stationary(&model, 48, 48, 1e-12, 20_000).unwrap();
        for m in 0..=48 {
            for n in 0..=48 {
                assert_abs_diff_eq!(grid.prob(m, n), grid.prob(n, m), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn balance_residual_small_at_fixed_point_large_off_it() {
        let model = bernoulli_model();
        let grid = stationary(&model, 48, 48, 1e-12, 20_000).unwrap();
        assert!(balance_residual(&grid, &model) < 1e-10);

        // A uniform table is far from stationary; at a small box the clamp
        // rows make the residual macroscopic.
        let cells = (8 + 1) * (8 + 1);
        let uniform =
            TruncatedGrid::from_weights(8, 8, vec![1.0 / cells as f64; cells]).unwrap();
        assert!(balance_residual(&uniform, &model) > 0.001);
    }

    #[test]
    fn h_examples_on_handmade_grids() {
        let mut p = vec![0.0; 9];
        p[0] = 1.0;
        let grid = TruncatedGrid::from_weights(2, 2, p).unwrap();
        assert_eq!(grid.h(0, 0).value, 0.0);
        assert_eq!(grid.h(1, 2).value, 0.0);

        let mut p = vec![0.0; 9];
        p[1 * 3 + 1] = 1.0;
        let grid = TruncatedGrid::from_weights(2, 2, p).unwrap();
        assert_eq!(grid.h(0, 0).value, 1.0);
        assert_eq!(grid.h(1, 1).value, 0.0);
        // Out-of-grid queries flag truncation.
        assert!(grid.h(2, 0).truncated);
    }

    #[test]
    fn h_at_axis_is_bounded_by_marginal_tail() {
        let model = bernoulli_model();
        let grid = stationary(&model, 48, 48, 1e-12, 20_000).unwrap();
        let m1 = grid.marginal1();
        for x in 0..20u64 {
            let marg_tail: f64 = m1[(x as usize + 1)..].iter().sum();
            let h = grid.h(x, 0).value;
            assert!(h <= marg_tail + 1e-12);
            // P(Q2 = 0, Q1 > x) > 0 here, so the inequality is strict.
            assert!(h < marg_tail);
        }
    }

    #[test]
    fn one_dimensional_oracle_tail_ratios() {
        // Bernoulli(0.3, 0.5): geometric stationary tail with ratio 3/7.
        // The ratio is checked where the tail is far above the solver
        // tolerance, so conditioning does not contaminate the quotient.
        let p = marginal_stationary_1d(
            &Pmf::bernoulli(0.3).unwrap(),
            &Pmf::bernoulli(0.5).unwrap(),
            96,
            1e-14,
        )
        .unwrap();
        let tail = |x: usize| -> f64 { p[x + 1..].iter().rev().sum() };
        for x in 2..10 {
            assert_relative_eq!(tail(x + 1) / tail(x), 3.0 / 7.0, epsilon = 1e-9);
        }

        // Geometric(0.5, 0.25): ratio 2/3 from the quadratic root u = 1.5.
        let p = marginal_stationary_1d(
            &Pmf::geometric(0.5).unwrap(),
            &Pmf::geometric(0.25).unwrap(),
            128,
            1e-14,
        )
        .unwrap();
        let tail = |x: usize| -> f64 { p[x + 1..].iter().rev().sum() };
        for x in 2..16 {
            assert_relative_eq!(tail(x + 1) / tail(x), 2.0 / 3.0, epsilon = 1e-9);
        }

        // Zero arrivals collapse to the point mass at 0.
        let p = marginal_stationary_1d(
            &Pmf::deterministic(0),
            &Pmf::bernoulli(0.5).unwrap(),
            16,
            1e-13,
        )
        .unwrap();
        assert_eq!(p[0], 1.0);
    }

    #[test]
    fn pgf_special_points() {
        let model = geometric_model();
        let grid = stationary(&model, 48, 48, 1e-12, 20_000).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        assert_relative_eq!(grid.pgf(one, one).re, 1.0, epsilon = 1e-10);
        assert_relative_eq!(grid.pgf(zero, zero).re, grid.prob(0, 0), epsilon = 1e-14);
        let m2_zero = grid.marginal2()[0];
        assert_relative_eq!(grid.pgf(one, zero).re, m2_zero, epsilon = 1e-12);
    }

    #[test]
    fn snapshot_roundtrip() {
        let model = bernoulli_model();
        let grid = stationary(&model, 16, 12, 1e-11, 20_000).unwrap();
        let mut buf = Vec::new();
        grid.write_snapshot(&mut buf).unwrap();
        let back = TruncatedGrid::read_snapshot(&mut buf.as_slice()).unwrap();
        assert_eq!(back.n1(), 16);
        assert_eq!(back.n2(), 12);
        assert_eq!(back.iterations(), grid.iterations());
        assert_eq!(back.p, grid.p);
        assert_eq!(back.deficit(), grid.deficit());
    }

    #[test]
    fn no_convergence_is_reported() {
        let model = geometric_model();
        match stationary(&model, 32, 32, 1e-14, 3) {
            Err(Error::NoConvergence { iterations, .. }) => assert_eq!(iterations, 3),
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn doubling_the_box_moves_h_less_than_the_deficit() {
        // At a deliberately tight box the deficit dominates the error.
        let model = geometric_model();
        let small = stationary(&model, 12, 12, 1e-13, 20_000).unwrap();
        let big = stationary(&model, 24, 24, 1e-13, 20_000).unwrap();
        assert!(small.deficit() > 1e-9);
        for x in 0..12u64 {
            for y in 0..12u64 {
                let d = (small.h(x, y).value - big.h(x, y).value).abs();
                assert!(
                    d < small.deficit(),
                    "H moved by {d} > deficit {} at ({x},{y})",
                    small.deficit()
                );
            }
        }
    }
}
