//! Small numeric helpers shared across modules.

/// Riemann zeta function for real s > 1 via Euler-Maclaurin.
///
/// Direct sum to N = 32 plus tail corrections; absolute error is far below
/// 1e-14 for s >= 1.05, which covers every tail index the crate accepts.
pub fn zeta(s: f64) -> f64 {
    debug_assert!(s > 1.0);
    const N: usize = 32;
    let mut sum = 0.0;
    for j in 1..N {
        sum += (j as f64).powf(-s);
    }
    let n = N as f64;
    let ns = n.powf(-s);
    // Integral term, half-correction, and the first three Bernoulli terms.
    sum += n * ns / (s - 1.0);
    sum += 0.5 * ns;
    sum += s * ns / n / 12.0;
    sum -= s * (s + 1.0) * (s + 2.0) * ns / (n * n * n) / 720.0;
    sum += s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * ns / (n * n * n * n * n) / 30240.0;
    sum
}

/// Deterministic pairwise summation in a fixed tree order.
///
/// The reduction shape depends only on the slice length, so the result is
/// bitwise reproducible regardless of how the values were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Kahan-compensated sequential sum (fixed order, bitwise deterministic).
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Solve a 3x3 linear system with partial pivoting.
///
/// Returns `None` when a pivot falls below `tol` times the matrix scale,
/// i.e. the system is (numerically) rank deficient.
pub fn solve3(a: [[f64; 3]; 3], b: [f64; 3], tol: f64) -> Option<[f64; 3]> {
    let mut m = [[0.0f64; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |acc, &v| acc.max(v.abs()))
        .max(1e-300);
    for col in 0..3 {
        let pivot_row = (col..3)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[pivot_row][col].abs() < tol * scale {
            return None;
        }
        m.swap(col, pivot_row);
        for row in (col + 1)..3 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = [0.0f64; 3];
    for i in (0..3).rev() {
        let mut acc = m[i][3];
        for k in (i + 1)..3 {
            acc -= m[i][k] * x[k];
        }
        x[i] = acc / m[i][i];
    }
    Some(x)
}
