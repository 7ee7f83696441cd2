use rayon::prelude::*;

use super::smo::{train_binary, BinarySvmModel};
use super::SvmParams;
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::scheme::SchemeLabel;

/// Per-feature min-max scaling fitted on training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Normalization {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyDataset)?;
        let mut min = first.clone();
        let mut max = first.clone();
        for r in rows {
            if r.len() != min.len() {
                return Err(Error::Dimension {
                    expected: min.len(),
                    got: r.len(),
                });
            }
            for (k, &v) in r.iter().enumerate() {
                min[k] = min[k].min(v);
                max[k] = max[k].max(v);
            }
        }
        Ok(Normalization { min, max })
    }

    pub fn fit_dataset(ds: &LabeledDataset) -> Result<Self> {
        let rows: Vec<Vec<f64>> = ds
            .samples
            .iter()
            .map(|s| s.features.to_array().to_vec())
            .collect();
        Self::fit(&rows)
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// Maps into `[0, 1]`, clamping out-of-range values; constant features map to 0.5.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&v, (&lo, &hi))| {
                if hi > lo {
                    ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
                } else {
                    0.5
                }
            })
            .collect()
    }
}

/// One pairwise classifier: positive side is `classes.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairModel {
    pub classes: (SchemeLabel, SchemeLabel),
    pub model: BinarySvmModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassModel {
    pub classes: Vec<SchemeLabel>,
    pub normalization: Normalization,
    pub pairs: Vec<PairModel>,
    pub params: SvmParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: SchemeLabel,
    /// Votes per entry of `MulticlassModel::classes`.
    pub votes: Vec<usize>,
    /// Σ|f(x)| over the pair models involving each class.
    pub margin_sums: Vec<f64>,
}

/// Trains one binary SVM per unordered class pair on normalized features.
pub fn train_multiclass(ds: &LabeledDataset, params: &SvmParams) -> Result<MulticlassModel> {
    params.validate()?;
    let rows = ds.labeled_rows()?;
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let counts = ds.class_counts();
    if let Some((l, &n)) = counts.iter().find(|(_, &n)| n < 2) {
        return Err(Error::InsufficientClassData {
            class: l.to_string(),
            count: n,
        });
    }
    let classes: Vec<SchemeLabel> = counts.keys().copied().collect();
    if classes.len() < 2 {
        return Err(Error::InsufficientClassData {
            class: "(second class)".into(),
            count: 0,
        });
    }

    let raw: Vec<Vec<f64>> = rows.iter().map(|(f, _)| f.to_array().to_vec()).collect();
    let normalization = Normalization::fit(&raw)?;
    let scaled: Vec<Vec<f64>> = raw.iter().map(|r| normalization.apply(r)).collect();

    let mut pair_list = Vec::new();
    for i in 0..classes.len() {
        for j in i + 1..classes.len() {
            pair_list.push((classes[i], classes[j]));
        }
    }

    let pairs = pair_list
        .par_iter()
        .map(|&(pos, neg)| {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (x, (_, l)) in scaled.iter().zip(&rows) {
                if *l == pos {
                    xs.push(x.clone());
                    ys.push(1.0);
                } else if *l == neg {
                    xs.push(x.clone());
                    ys.push(-1.0);
                }
            }
            let t = train_binary(&xs, &ys, params)?;
            Ok(PairModel {
                classes: (pos, neg),
                model: t.model,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(MulticlassModel {
        classes,
        normalization,
        pairs,
        params: *params,
    })
}

/// Majority vote over the pair models; ties go to the largest margin sum,
/// then to the earliest class in canonical order. A zero decision value votes
/// for the pair's first class.
pub fn predict_multiclass(m: &MulticlassModel, x: &FeatureVector) -> Result<Prediction> {
    x.validate()?;
    let scaled = m.normalization.apply(&x.to_array());
    predict_scaled(m, &scaled)
}

pub(crate) fn predict_scaled(m: &MulticlassModel, scaled: &[f64]) -> Result<Prediction> {
    let idx = |l: SchemeLabel| m.classes.iter().position(|&c| c == l);
    let mut votes = vec![0usize; m.classes.len()];
    let mut margin_sums = vec![0.0; m.classes.len()];
    for p in &m.pairs {
        let f = super::predict_binary(&p.model, scaled)?;
        let (Some(a), Some(b)) = (idx(p.classes.0), idx(p.classes.1)) else {
            return Err(Error::UnknownLabel(format!(
                "pair {:?} not in class list",
                p.classes
            )));
        };
        if f >= 0.0 {
            votes[a] += 1;
        } else {
            votes[b] += 1;
        }
        margin_sums[a] += f.abs();
        margin_sums[b] += f.abs();
    }
    let mut best = 0;
    for k in 1..m.classes.len() {
        if votes[k] > votes[best] || (votes[k] == votes[best] && margin_sums[k] > margin_sums[best])
        {
            best = k;
        }
    }
    Ok(Prediction {
        label: m.classes[best],
        votes,
        margin_sums,
    })
}

impl MulticlassModel {
    pub fn predict(&self, x: &FeatureVector) -> Result<Prediction> {
        predict_multiclass(self, x)
    }

    pub fn pair(&self, a: SchemeLabel, b: SchemeLabel) -> Option<&PairModel> {
        self.pairs
            .iter()
            .find(|p| p.classes == (a, b) || p.classes == (b, a))
    }
}
