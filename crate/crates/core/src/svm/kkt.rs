use super::smo::BinarySvmModel;

/// Per-point optimality residuals of a binary SVM against its training data.
#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    /// Violation of the complementary-slackness condition at each point;
    /// 0 when the point's multiplier is consistent with its margin.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// Number of points whose residual exceeds the tolerance.
    pub violations: usize,
    /// `|Σ y_i α_i|`.
    pub equality_violation: f64,
    /// Multipliers outside `[0, C]`.
    pub box_violations: usize,
}

impl KktReport {
    pub fn equality_ok(&self) -> bool {
        self.equality_violation <= 1e-6
    }

    pub fn converged(&self, tol: f64) -> bool {
        self.max_residual <= tol && self.equality_ok() && self.box_violations == 0
    }
}

/// KKT residuals from explicit multipliers and decision values.
///
/// With `r_i = y_i f(x_i) − 1`: α = 0 needs r ≥ 0, 0 < α < C needs r = 0 and
/// α = C needs r ≤ 0.
pub fn kkt_residuals(
    alphas: &[f64],
    outputs: &[f64],
    labels: &[f64],
    c: f64,
    tol: f64,
) -> KktReport {
    let mut residuals = Vec::with_capacity(alphas.len());
    let mut box_violations = 0;
    let mut eq = 0.0;
    for ((&a, &f), &y) in alphas.iter().zip(outputs).zip(labels) {
        let r = y * f - 1.0;
        let mut v: f64 = 0.0;
        if a < c {
            v = v.max(-r);
        }
        if a > 0.0 {
            v = v.max(r);
        }
        if a < 0.0 || a > c * (1.0 + 1e-12) {
            box_violations += 1;
        }
        eq += y * a;
        residuals.push(v);
    }
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    KktReport {
        violations: residuals.iter().filter(|&&r| r > tol).count(),
        residuals,
        max_residual,
        equality_violation: eq.abs(),
        box_violations,
    }
}

/// KKT report for a trained model. Multipliers are recovered by matching each
/// training row to an identical support vector of the same label sign; rows
/// without a match have α = 0.
pub fn kkt_report(
    model: &BinarySvmModel,
    rows: &[Vec<f64>],
    labels: &[f64],
    tol: f64,
) -> KktReport {
    let mut used = vec![false; model.support_count()];
    let mut alphas = Vec::with_capacity(rows.len());
    for (row, &y) in rows.iter().zip(labels) {
        let hit = model
            .support_vectors
            .iter()
            .zip(&model.weights)
            .enumerate()
            .position(|(k, (sv, &w))| !used[k] && sv == row && w.signum() == y);
        match hit {
            Some(k) => {
                used[k] = true;
                alphas.push(model.weights[k].abs());
            }
            None => alphas.push(0.0),
        }
    }
    let outputs: Vec<f64> = rows.iter().map(|r| model.decision(r)).collect();
    let mut report = kkt_residuals(&alphas, &outputs, labels, model.c, tol);
    // the equality constraint is a property of the whole multiplier set
    report.equality_violation = model.weights.iter().sum::<f64>().abs();
    report
}
