//! Exhaustive solver for the soft-margin SVM dual on a handful of points.
//!
//! Every multiplier is either at 0, at C, or free. For each of the 3ⁿ
//! assignments the free multipliers and the equality multiplier solve a
//! linear stationarity system; the best feasible candidate is the global
//! maximum because the dual is concave.

pub struct DualSolution {
    pub alphas: Vec<f64>,
    pub objective: f64,
}

pub fn objective(q: &[Vec<f64>], alphas: &[f64]) -> f64 {
    let n = alphas.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alphas[i] * alphas[j] * q[i][j];
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

/// `kernel` returns `K(x_i, x_j)` for row indices.
pub fn solve(labels: &[f64], c: f64, kernel: impl Fn(usize, usize) -> f64) -> DualSolution {
    let n = labels.len();
    assert!(n <= 8, "exhaustive search is 3^n");
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| labels[i] * labels[j] * kernel(i, j))
                .collect()
        })
        .collect();

    let mut best: Option<DualSolution> = None;
    let mut state = vec![0u8; n];
    for code in 0..3usize.pow(n as u32) {
        let mut k = code;
        for s in state.iter_mut() {
            *s = (k % 3) as u8;
            k /= 3;
        }
        if let Some(alphas) = face_point(&q, labels, c, &state) {
            let objective = objective(&q, &alphas);
            if best.as_ref().is_none_or(|b| objective > b.objective) {
                best = Some(DualSolution { alphas, objective });
            }
        }
    }
    best.expect("the all-zero point is always feasible")
}

/// State 0 pins α at 0, 1 pins it at C, 2 leaves it free.
fn face_point(q: &[Vec<f64>], y: &[f64], c: f64, state: &[u8]) -> Option<Vec<f64>> {
    let n = y.len();
    let mut alphas: Vec<f64> = state
        .iter()
        .map(|&s| if s == 1 { c } else { 0.0 })
        .collect();
    let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
    let fixed_eq: f64 = (0..n).filter(|&i| state[i] == 1).map(|i| y[i] * c).sum();
    if free.is_empty() {
        return (fixed_eq.abs() < 1e-12).then_some(alphas);
    }

    // [Q_FF  y_F] [α_F]   [1 − Q_FB α_B]
    // [y_Fᵀ  0  ] [ ν ] = [  −y_Bᵀ α_B ]
    let m = free.len();
    let mut a = vec![vec![0.0; m + 2]; m + 1];
    for (r, &i) in free.iter().enumerate() {
        for (s, &j) in free.iter().enumerate() {
            a[r][s] = q[i][j];
        }
        a[r][m] = y[i];
        let bound: f64 = (0..n).filter(|&j| state[j] == 1).map(|j| q[i][j] * c).sum();
        a[r][m + 1] = 1.0 - bound;
    }
    for (s, &j) in free.iter().enumerate() {
        a[m][s] = y[j];
    }
    a[m][m + 1] = -fixed_eq;

    let x = gauss(a)?;
    for (s, &i) in free.iter().enumerate() {
        if x[s] < -1e-9 || x[s] > c + 1e-9 {
            return None;
        }
        alphas[i] = x[s].clamp(0.0, c);
    }
    Some(alphas)
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn gauss(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = a.len();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[piv][col].abs() < 1e-10 * scale {
            return None;
        }
        a.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for k in col..=n {
                    a[r][k] -= f * a[col][k];
                }
            }
        }
    }
    Some((0..n).map(|r| a[r][n] / a[r][r]).collect())
}
