//! Confusion matrices with per-class one-vs-rest counts.

use std::fmt::Write as _;

use amc_core::SchemeLabel;

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub classes: Vec<SchemeLabel>,
    pub counts: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ClassCounts {
    /// `(TP + TN) / (TP + TN + FP + FN)`.
    pub fn accuracy(&self) -> f64 {
        let total = self.tp + self.tn + self.fp + self.fn_;
        if total == 0 {
            return 0.0;
        }
        (self.tp + self.tn) as f64 / total as f64
    }

    /// `TP / (TP + FN)`, the fraction of the class detected.
    pub fn detection_rate(&self) -> f64 {
        let pos = self.tp + self.fn_;
        if pos == 0 {
            return 0.0;
        }
        self.tp as f64 / pos as f64
    }
}

impl ConfusionMatrix {
    pub fn new(classes: &[SchemeLabel]) -> Self {
        ConfusionMatrix {
            classes: classes.to_vec(),
            counts: vec![vec![0; classes.len()]; classes.len()],
        }
    }

    fn slot(&self, l: SchemeLabel) -> usize {
        self.classes
            .iter()
            .position(|&c| c == l)
            .unwrap_or_else(|| panic!("{l} is not a class of this matrix"))
    }

    pub fn record(&mut self, truth: SchemeLabel, predicted: SchemeLabel) {
        let (r, c) = (self.slot(truth), self.slot(predicted));
        self.counts[r][c] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_total(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    /// `trace / total`.
    pub fn overall_accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        (0..self.classes.len())
            .map(|i| self.counts[i][i])
            .sum::<u64>() as f64
            / total as f64
    }

    pub fn class_counts(&self, i: usize) -> ClassCounts {
        let tp = self.counts[i][i];
        let fn_ = self.row_total(i) - tp;
        let fp = (0..self.classes.len())
            .map(|r| self.counts[r][i])
            .sum::<u64>()
            - tp;
        ClassCounts {
            tp,
            tn: self.total() - tp - fn_ - fp,
            fp,
            fn_,
        }
    }

    /// Row-normalized cell; 0 for an empty row.
    pub fn rate(&self, r: usize, c: usize) -> f64 {
        let t = self.row_total(r);
        if t == 0 {
            0.0
        } else {
            self.counts[r][c] as f64 / t as f64
        }
    }

    /// Off-diagonal cells as `(truth, predicted, rate)`, largest first.
    pub fn confusions(&self) -> Vec<(SchemeLabel, SchemeLabel, f64)> {
        let n = self.classes.len();
        let mut out: Vec<_> = (0..n)
            .flat_map(|r| (0..n).filter(move |&c| c != r).map(move |c| (r, c)))
            .filter(|&(r, c)| self.counts[r][c] > 0)
            .map(|(r, c)| (self.classes[r], self.classes[c], self.rate(r, c)))
            .collect();
        out.sort_by(|a, b| b.2.total_cmp(&a.2));
        out
    }

    /// Row-normalized table to two decimals.
    pub fn render(&self) -> String {
        let mut s = String::new();
        write!(s, "{:>6}", "").unwrap();
        for c in &self.classes {
            write!(s, " {:>5}", c.name()).unwrap();
        }
        s.push('\n');
        for (r, class) in self.classes.iter().enumerate() {
            write!(s, "{:>6}", class.name()).unwrap();
            for c in 0..self.classes.len() {
                write!(s, " {:>5.2}", self.rate(r, c)).unwrap();
            }
            s.push('\n');
        }
        s
    }

    /// Raw counts with a header row of predicted labels.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("true\\predicted");
        for c in &self.classes {
            write!(s, ",{}", c.name()).unwrap();
        }
        s.push('\n');
        for (r, class) in self.classes.iter().enumerate() {
            s.push_str(class.name());
            for v in &self.counts[r] {
                write!(s, ",{v}").unwrap();
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_classifier_gives_identity() {
        let mut m = ConfusionMatrix::new(&SchemeLabel::ALL);
        for l in SchemeLabel::ALL {
            for _ in 0..3 {
                m.record(l, l);
            }
        }
        assert_eq!(m.overall_accuracy(), 1.0);
        for i in 0..11 {
            assert_eq!(m.rate(i, i), 1.0);
            assert_eq!(m.class_counts(i).accuracy(), 1.0);
        }
        assert!(m.confusions().is_empty());
    }

    #[test]
    fn one_vs_rest_counts() {
        let classes = [SchemeLabel::Am, SchemeLabel::Fm];
        let mut m = ConfusionMatrix::new(&classes);
        m.record(SchemeLabel::Am, SchemeLabel::Am);
        m.record(SchemeLabel::Fm, SchemeLabel::Fm);
        assert_eq!(
            m.class_counts(0),
            ClassCounts {
                tp: 1,
                tn: 1,
                fp: 0,
                fn_: 0
            }
        );
        assert_eq!(m.class_counts(0).accuracy(), 1.0);

        m.record(SchemeLabel::Am, SchemeLabel::Fm);
        let am = m.class_counts(0);
        assert_eq!(
            am,
            ClassCounts {
                tp: 1,
                tn: 1,
                fp: 0,
                fn_: 1
            }
        );
        assert_eq!(
            m.class_counts(1),
            ClassCounts {
                tp: 1,
                tn: 1,
                fp: 1,
                fn_: 0
            }
        );
        assert!((am.detection_rate() - 0.5).abs() < 1e-15);
        assert_eq!(
            m.confusions(),
            vec![(SchemeLabel::Am, SchemeLabel::Fm, 0.5)]
        );
    }

    #[test]
    fn rendered_rows_sum_to_one() {
        let mut m = ConfusionMatrix::new(&SchemeLabel::ALL);
        for (k, l) in SchemeLabel::ALL.iter().enumerate() {
            for j in 0..7 {
                m.record(*l, SchemeLabel::ALL[(k + j % 3) % 11]);
            }
        }
        for line in m.render().lines().skip(1) {
            let sum: f64 = line
                .split_whitespace()
                .skip(1)
                .map(|v| v.parse::<f64>().unwrap())
                .sum();
            assert!((sum - 1.0).abs() <= 0.011 * 11.0 / 2.0, "{line}");
        }
        assert!(m.to_csv().lines().nth(1).unwrap().starts_with("AM,"));
    }
}
