//! Platt's sequential minimal optimization.
//!
//! Kernel values are evaluated on demand; the only per-point state is the
//! multiplier vector and an error cache that is valid for non-bound points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{KernelSpec, SvmParams};
use crate::error::{Error, Result};

/// Multipliers this close to a box edge are snapped onto it.
const BOUND_SNAP: f64 = 1e-8;

/// Binary decision function `f(x) = Σ λ_k K(x, x_k) + b` with `λ_k = y_k α_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub kernel: KernelSpec,
    pub c: f64,
}

impl BinarySvmModel {
    pub fn support_count(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> Option<usize> {
        self.support_vectors.first().map(Vec::len)
    }

    pub(crate) fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.weights)
            .map(|(sv, w)| w * self.kernel.apply(sv, x))
            .sum::<f64>()
            + self.bias
    }
}

/// Result of a binary training run.
#[derive(Debug, Clone)]
pub struct BinaryTraining {
    pub model: BinarySvmModel,
    /// Final multiplier per training row.
    pub alphas: Vec<f64>,
    /// Outer-loop passes used.
    pub passes: usize,
    /// Accepted two-multiplier steps.
    pub steps: usize,
    /// Dual objective after each accepted step, when tracing is enabled.
    pub objective_trace: Vec<f64>,
}

/// Decision value `Σ λ_k K(x_k, x) + b` with signed weights.
pub fn predict_binary(model: &BinarySvmModel, x: &[f64]) -> Result<f64> {
    if let Some(d) = model.dim() {
        if d != x.len() {
            return Err(Error::Dimension {
                expected: d,
                got: x.len(),
            });
        }
    }
    Ok(model.decision(x))
}

/// `Σ α − ½ Σ_ij α_i α_j y_i y_j K(x_i, x_j)`.
pub fn dual_objective(
    rows: &[Vec<f64>],
    labels: &[f64],
    alphas: &[f64],
    kernel: &KernelSpec,
) -> f64 {
    let mut quad = 0.0;
    for i in 0..rows.len() {
        if alphas[i] == 0.0 {
            continue;
        }
        for j in 0..rows.len() {
            if alphas[j] != 0.0 {
                quad += alphas[i]
                    * alphas[j]
                    * labels[i]
                    * labels[j]
                    * kernel.apply(&rows[i], &rows[j]);
            }
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

struct Solver<'a> {
    rows: &'a [Vec<f64>],
    y: &'a [f64],
    alpha: Vec<f64>,
    /// `f(x_i) − y_i`, valid only where `0 < α_i < C`.
    error: Vec<f64>,
    b: f64,
    c: f64,
    tol: f64,
    eps: f64,
    kernel: KernelSpec,
    rng: ChaCha8Rng,
    steps: usize,
    trace: Option<Vec<f64>>,
}

impl Solver<'_> {
    fn k(&self, i: usize, j: usize) -> f64 {
        self.kernel.apply(&self.rows[i], &self.rows[j])
    }

    fn non_bound(&self, i: usize) -> bool {
        self.alpha[i] > 0.0 && self.alpha[i] < self.c
    }

    fn output(&self, i: usize) -> f64 {
        let mut s = self.b;
        for (j, &a) in self.alpha.iter().enumerate() {
            if a > 0.0 {
                s += a * self.y[j] * self.k(i, j);
            }
        }
        s
    }

    fn err(&self, i: usize) -> f64 {
        if self.non_bound(i) {
            self.error[i]
        } else {
            self.output(i) - self.y[i]
        }
    }

    fn take_step(&mut self, i1: usize, i2: usize, e2: f64) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1, a2) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let e1 = self.err(i1);
        let s = y1 * y2;
        let c = self.c;
        let (lo, hi) = if y1 != y2 {
            ((a2 - a1).max(0.0), (c + a2 - a1).min(c))
        } else {
            ((a1 + a2 - c).max(0.0), (a1 + a2).min(c))
        };
        if hi - lo <= 0.0 {
            return false;
        }
        let k11 = self.k(i1, i1);
        let k12 = self.k(i1, i2);
        let k22 = self.k(i2, i2);
        let eta = k11 + k22 - 2.0 * k12;

        let mut new2 = if eta > 0.0 {
            (a2 + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // objective change along the constraint line, relative to the current point
            let v1 = e1 + y1 - self.b;
            let v2 = e2 + y2 - self.b;
            let gain = |cand2: f64| {
                let d2 = cand2 - a2;
                let d1 = -s * d2;
                d1 + d2
                    - (y1 * d1 * v1 + y2 * d2 * v2)
                    - 0.5 * (d1 * d1 * k11 + d2 * d2 * k22 + 2.0 * y1 * y2 * d1 * d2 * k12)
            };
            let (gl, gh) = (gain(lo), gain(hi));
            if gl > gh + self.eps {
                lo
            } else if gh > gl + self.eps {
                hi
            } else {
                a2
            }
        };
        if new2 < BOUND_SNAP {
            new2 = 0.0;
        } else if new2 > c - BOUND_SNAP {
            new2 = c;
        }
        if (new2 - a2).abs() < self.eps * (new2 + a2 + self.eps) {
            return false;
        }
        let mut new1 = a1 + s * (a2 - new2);
        if new1 < BOUND_SNAP {
            new2 += s * new1;
            new1 = 0.0;
        } else if new1 > c - BOUND_SNAP {
            new2 += s * (new1 - c);
            new1 = c;
        }
        new2 = new2.clamp(0.0, c);

        let d1 = y1 * (new1 - a1);
        let d2 = y2 * (new2 - a2);
        let b1 = self.b - e1 - d1 * k11 - d2 * k12;
        let b2 = self.b - e2 - d1 * k12 - d2 * k22;
        let was_non_bound: Vec<bool> = (0..self.alpha.len()).map(|i| self.non_bound(i)).collect();

        self.alpha[i1] = new1;
        self.alpha[i2] = new2;
        let new_b = if self.non_bound(i1) {
            b1
        } else if self.non_bound(i2) {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        let db = new_b - self.b;
        self.b = new_b;

        for i in 0..self.alpha.len() {
            if !self.non_bound(i) {
                continue;
            }
            let base = if i == i1 {
                e1
            } else if i == i2 {
                e2
            } else if was_non_bound[i] {
                self.error[i]
            } else {
                unreachable!("only the stepped pair changes bound status")
            };
            self.error[i] = base + d1 * self.k(i, i1) + d2 * self.k(i, i2) + db;
        }

        self.steps += 1;
        if let Some(trace) = self.trace.as_mut() {
            trace.push(dual_objective(self.rows, self.y, &self.alpha, &self.kernel));
        }
        true
    }

    fn examine(&mut self, i2: usize) -> bool {
        let a2 = self.alpha[i2];
        let e2 = self.err(i2);
        let r2 = e2 * self.y[i2];
        if !((r2 < -self.tol && a2 < self.c) || (r2 > self.tol && a2 > 0.0)) {
            return false;
        }
        let n = self.alpha.len();
        let non_bound: Vec<usize> = (0..n).filter(|&i| self.non_bound(i)).collect();

        if non_bound.len() > 1 {
            let best = non_bound
                .iter()
                .copied()
                .filter(|&i| i != i2)
                .max_by(|&a, &b| {
                    (self.error[a] - e2)
                        .abs()
                        .total_cmp(&(self.error[b] - e2).abs())
                });
            if let Some(i1) = best {
                if self.take_step(i1, i2, e2) {
                    return true;
                }
            }
        }
        if !non_bound.is_empty() {
            let start = self.rng.random_range(0..non_bound.len());
            for k in 0..non_bound.len() {
                let i1 = non_bound[(start + k) % non_bound.len()];
                if self.take_step(i1, i2, e2) {
                    return true;
                }
            }
        }
        let start = self.rng.random_range(0..n);
        for k in 0..n {
            let i1 = (start + k) % n;
            if self.take_step(i1, i2, e2) {
                return true;
            }
        }
        false
    }

    /// With every multiplier at a bound the threshold is only bracketed by
    /// the margin conditions; move it to the middle of that bracket.
    /// Returns whether it moved.
    fn settle_bias(&mut self) -> bool {
        let n = self.alpha.len();
        if (0..n).any(|i| self.non_bound(i)) {
            return false;
        }
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..n {
            let edge = self.y[i] - (self.output(i) - self.b);
            // α = 0 needs y f ≥ 1, α = C needs y f ≤ 1
            let at_zero = self.alpha[i] == 0.0;
            if at_zero == (self.y[i] > 0.0) {
                lo = lo.max(edge);
            } else {
                hi = hi.min(edge);
            }
        }
        let target = match (lo.is_finite(), hi.is_finite()) {
            (true, true) if lo <= hi => 0.5 * (lo + hi),
            (true, false) => lo,
            (false, true) => hi,
            _ => return false,
        };
        if self.b >= lo && self.b <= hi {
            return false;
        }
        self.b = target;
        true
    }

    fn worst_violation(&self) -> f64 {
        (0..self.alpha.len())
            .map(|i| {
                let r = self.err(i) * self.y[i];
                let a = self.alpha[i];
                let mut v: f64 = 0.0;
                if a < self.c {
                    v = v.max(-r);
                }
                if a > 0.0 {
                    v = v.max(r);
                }
                v
            })
            .fold(0.0, f64::max)
    }
}

/// Trains a binary soft-margin SVM on rows labeled ±1.
pub fn train_binary(
    rows: &[Vec<f64>],
    labels: &[f64],
    params: &SvmParams,
) -> Result<BinaryTraining> {
    params.validate()?;
    if rows.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} rows but {} labels",
            rows.len(),
            labels.len()
        )));
    }
    if let Some(bad) = labels.iter().find(|&&l| l != 1.0 && l != -1.0) {
        return Err(Error::Config(format!("labels must be ±1, got {bad}")));
    }
    if !(labels.contains(&1.0) && labels.contains(&-1.0)) {
        return Err(Error::DegenerateLabels);
    }
    let dim = rows[0].len();
    if let Some(r) = rows.iter().find(|r| r.len() != dim) {
        return Err(Error::Dimension {
            expected: dim,
            got: r.len(),
        });
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training row".into()));
    }

    let n = rows.len();
    let mut s = Solver {
        rows,
        y: labels,
        alpha: vec![0.0; n],
        error: vec![0.0; n],
        b: 0.0,
        c: params.c,
        tol: params.tol,
        eps: params.eps,
        kernel: params.kernel,
        rng: ChaCha8Rng::seed_from_u64(params.seed),
        steps: 0,
        trace: params.trace.then(Vec::new),
    };

    let mut examine_all = true;
    let mut passes = 0;
    loop {
        let mut changed = 0usize;
        if examine_all {
            for i in 0..n {
                changed += s.examine(i) as usize;
            }
        } else {
            for i in 0..n {
                if s.non_bound(i) {
                    changed += s.examine(i) as usize;
                }
            }
        }
        passes += 1;
        if examine_all {
            if changed == 0 && !s.settle_bias() {
                break;
            }
            examine_all = false;
        } else if changed == 0 {
            examine_all = true;
        }
        if passes >= params.max_passes {
            return Err(Error::Convergence {
                passes,
                worst: s.worst_violation(),
            });
        }
    }

    let mut support_vectors = Vec::new();
    let mut weights = Vec::new();
    for i in 0..n {
        if s.alpha[i] > 0.0 {
            support_vectors.push(rows[i].clone());
            weights.push(s.alpha[i] * labels[i]);
        }
    }
    Ok(BinaryTraining {
        model: BinarySvmModel {
            support_vectors,
            weights,
            bias: s.b,
            kernel: params.kernel,
            c: params.c,
        },
        alphas: s.alpha,
        passes,
        steps: s.steps,
        objective_trace: s.trace.unwrap_or_default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::kkt_report;

    #[test]
    fn two_point_problem_has_closed_form_solution() {
        let rows = vec![vec![1.0], vec![-1.0]];
        let labels = vec![1.0, -1.0];
        let params = SvmParams {
            c: 10.0,
            tol: 1e-6,
            ..Default::default()
        };
        let t = train_binary(&rows, &labels, &params).unwrap();
        assert!((t.alphas[0] - 0.5).abs() < 1e-9 && (t.alphas[1] - 0.5).abs() < 1e-9);
        assert!(t.model.bias.abs() < 1e-9);
        let f2 = predict_binary(&t.model, &[2.0]).unwrap();
        assert!((f2 - 2.0).abs() < 1e-9);
        assert!(predict_binary(&t.model, &[0.0]).unwrap().abs() < 1e-9);
        assert!(matches!(
            predict_binary(&t.model, &[1.0, 2.0]),
            Err(Error::Dimension { .. })
        ));
        assert!(kkt_report(&t.model, &rows, &labels, params.tol).max_residual <= params.tol);
    }

    #[test]
    fn xor_is_separable_with_quadratic_kernel() {
        let rows = vec![
            vec![1.0, 1.0],
            vec![-1.0, -1.0],
            vec![1.0, -1.0],
            vec![-1.0, 1.0],
        ];
        let labels = vec![1.0, 1.0, -1.0, -1.0];
        let params = SvmParams {
            c: 10.0,
            kernel: KernelSpec::polynomial(2, 1.0),
            ..Default::default()
        };
        let t = train_binary(&rows, &labels, &params).unwrap();
        for (r, &y) in rows.iter().zip(&labels) {
            assert_eq!(predict_binary(&t.model, r).unwrap().signum(), y);
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let rows = vec![vec![1.0], vec![2.0]];
        assert_eq!(
            train_binary(&rows, &[1.0, 1.0], &SvmParams::default()).unwrap_err(),
            Error::DegenerateLabels
        );
    }

    #[test]
    fn exhausted_passes_report_convergence_error() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()])
            .collect();
        let labels: Vec<f64> = (0..40)
            .map(|i| if (i * 7) % 3 == 0 { 1.0 } else { -1.0 })
            .collect();
        let params = SvmParams {
            max_passes: 1,
            c: 100.0,
            ..Default::default()
        };
        match train_binary(&rows, &labels, &params) {
            Err(Error::Convergence { passes: 1, worst }) => assert!(worst >= 0.0),
            Ok(t) => panic!("converged in {} passes", t.passes),
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn model_invariants_hold_on_overlapping_data() {
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|i| {
                vec![
                    (i as f64 * 0.37).sin() + if i % 2 == 0 { 0.4 } else { -0.4 },
                    (i as f64 * 0.11).cos(),
                ]
            })
            .collect();
        let labels: Vec<f64> = (0..60)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let params = SvmParams {
            c: 2.0,
            trace: true,
            ..Default::default()
        };
        let t = train_binary(&rows, &labels, &params).unwrap();
        let m = &t.model;
        assert!(m
            .weights
            .iter()
            .all(|w| w.abs() > 0.0 && w.abs() <= params.c));
        assert!(m.weights.iter().sum::<f64>().abs() < 1e-6);
        assert!(t
            .objective_trace
            .windows(2)
            .all(|w| w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0)));
        assert_eq!(t.objective_trace.len(), t.steps);
        let report = kkt_report(m, &rows, &labels, params.tol);
        assert!(report.max_residual <= params.tol, "{report:?}");
        for (k, sv) in m.support_vectors.iter().enumerate() {
            let i = rows.iter().position(|r| r == sv).unwrap();
            let a = m.weights[k].abs();
            if a < params.c {
                assert!((predict_binary(m, sv).unwrap() - labels[i]).abs() <= params.tol);
            }
        }
    }
}
