//! The two benchmark experiments: accuracy versus SNR and lookup latency
//! versus the number of known signals.

use std::fmt::Write as _;
use std::hint::black_box;
use std::time::{Duration, Instant};

use amc_core::dataset::Sample;
use amc_core::featstore::FlatFile;
use amc_core::sigsynth::{plan_batch, realize};
use amc_core::svm::train_multiclass;
use amc_core::{
    extract_all, FeatureRecord, FeatureStore, FeatureVector, LabeledDataset, MatchPolicy,
    MulticlassModel, Result, SchemeLabel, FEATURE_COUNT,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::confusion::ConfusionMatrix;

/// Realizations whose features could not be computed, with the reason.
pub type Skipped = Vec<(u64, String)>;

/// Features of `count` realizations per configured scheme at one SNR, seeds
/// `base_seed + index` in plan order.
pub fn feature_corpus(
    cfg: &RunConfig,
    snr: f64,
    count: usize,
    base_seed: u64,
) -> Result<(LabeledDataset, Skipped)> {
    cfg.synth.validate()?;
    let plan = plan_batch(&cfg.schemes, &[snr], count, base_seed);
    let rows: Vec<std::result::Result<Sample, (u64, String)>> = plan
        .par_iter()
        .map(|r| {
            let w = realize(r.scheme, &cfg.synth.with_seed(r.seed), r.snr_db)
                .map_err(|e| (r.seed, e.to_string()))?;
            let features = extract_all(&w, &cfg.features).map_err(|e| (r.seed, e.to_string()))?;
            Ok(Sample {
                features,
                label: r.scheme.into(),
                snr_db: Some(r.snr_db),
                seed: Some(r.seed),
            })
        })
        .collect();
    let mut ds = LabeledDataset::default();
    let mut skipped = Vec::new();
    for r in rows {
        match r {
            Ok(s) => ds.push(s),
            Err(e) => skipped.push(e),
        }
    }
    Ok((ds, skipped))
}

pub fn evaluate(model: &MulticlassModel, test: &LabeledDataset) -> Result<ConfusionMatrix> {
    let rows = test.labeled_rows()?;
    let predicted: Vec<SchemeLabel> = rows
        .par_iter()
        .map(|(f, _)| model.predict(f).map(|p| p.label))
        .collect::<Result<_>>()?;
    let mut m = ConfusionMatrix::new(&model.classes);
    for ((_, truth), p) in rows.iter().zip(predicted) {
        m.record(*truth, p);
    }
    Ok(m)
}

#[derive(Debug, Clone)]
pub struct AccuracyRun {
    pub snr: f64,
    pub model: MulticlassModel,
    pub matrix: ConfusionMatrix,
    pub skipped: Skipped,
    pub train_time: Duration,
    pub total_time: Duration,
}

/// Train on `train_count` and test on `test_count` realizations per class,
/// drawn from disjoint seed ranges.
pub fn run_accuracy(cfg: &RunConfig, snr: f64) -> Result<AccuracyRun> {
    let start = Instant::now();
    let (train, mut skipped) = feature_corpus(cfg, snr, cfg.train_count, cfg.train_seed)?;
    let (test, more) = feature_corpus(cfg, snr, cfg.test_count, cfg.test_seed)?;
    skipped.extend(more);
    let t = Instant::now();
    let model = train_multiclass(&train, &cfg.svm)?;
    let train_time = t.elapsed();
    let matrix = evaluate(&model, &test)?;
    Ok(AccuracyRun {
        snr,
        model,
        matrix,
        skipped,
        train_time,
        total_time: start.elapsed(),
    })
}

/// One row per (SNR, class) plus an overall row per SNR.
pub fn accuracy_csv(runs: &[AccuracyRun]) -> String {
    let mut s = String::from("snr_db,class,tp,tn,fp,fn,accuracy,detection_rate\n");
    for run in runs {
        let m = &run.matrix;
        for (i, c) in m.classes.iter().enumerate() {
            let k = m.class_counts(i);
            writeln!(
                s,
                "{:?},{},{},{},{},{},{:.6},{:.6}",
                run.snr,
                c.name(),
                k.tp,
                k.tn,
                k.fp,
                k.fn_,
                k.accuracy(),
                k.detection_rate()
            )
            .unwrap();
        }
        writeln!(s, "{:?},ALL,,,,,{:.6},", run.snr, m.overall_accuracy()).unwrap();
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingRow {
    pub count: usize,
    pub match_mean_ns: f64,
    pub match_median_ns: f64,
    pub scan_mean_ns: f64,
    pub scan_median_ns: f64,
    /// Queries that found a record (identical for both paths).
    pub hits: usize,
}

impl TimingRow {
    pub fn ratio(&self) -> f64 {
        self.match_mean_ns / self.scan_mean_ns
    }
}

fn mean_median(mut xs: Vec<f64>) -> (f64, f64) {
    xs.sort_by(f64::total_cmp);
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let mid = xs.len() / 2;
    let median = if xs.len() % 2 == 0 {
        0.5 * (xs[mid - 1] + xs[mid])
    } else {
        xs[mid]
    };
    (mean, median)
}

fn time_each<T>(queries: &[FeatureVector], f: impl Fn(&FeatureVector) -> T) -> Vec<f64> {
    for q in queries {
        black_box(f(q));
    }
    queries
        .iter()
        .map(|q| {
            let t = Instant::now();
            black_box(f(black_box(q)));
            t.elapsed().as_nanos() as f64
        })
        .collect()
}

/// Uniform records in the unit cube; half the queries are perturbed copies
/// of stored records and half are fresh uniform points. Each store size is a
/// prefix of the same record sequence.
pub fn run_timing(
    counts: &[usize],
    queries: usize,
    epsilon: f64,
    seed: u64,
) -> Result<Vec<TimingRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let largest = counts.iter().copied().max().unwrap_or(0);
    let records: Vec<[f64; FEATURE_COUNT]> = (0..largest)
        .map(|_| std::array::from_fn(|_| rng.random()))
        .collect();
    let labels = SchemeLabel::ALL;
    let eps = [epsilon; FEATURE_COUNT];
    let policy = MatchPolicy::new(eps)?;

    let mut rows = Vec::with_capacity(counts.len());
    for &count in counts {
        let mut store = FeatureStore::new(eps)?;
        for (i, v) in records[..count].iter().enumerate() {
            store.insert(FeatureRecord {
                id: 0,
                label: labels[i % labels.len()],
                features: FeatureVector::from_array(*v),
                snr_db: 15.0,
                created_at: 0,
                source_seed: i as u64,
            })?;
        }
        let flat = FlatFile::from(&store);
        let probes: Vec<FeatureVector> = (0..queries)
            .map(|i| {
                if i % 2 == 0 && count > 0 {
                    let base = records[rng.random_range(0..count)];
                    FeatureVector::from_array(
                        base.map(|v| v + (rng.random::<f64>() - 0.5) * epsilon),
                    )
                } else {
                    FeatureVector::from_array(std::array::from_fn(|_| rng.random()))
                }
            })
            .collect();

        let hits = probes
            .iter()
            .filter(|q| store.match_features(q, &policy).is_some())
            .count();
        let (match_mean_ns, match_median_ns) =
            mean_median(time_each(&probes, |q| store.match_features(q, &policy)));
        let (scan_mean_ns, scan_median_ns) =
            mean_median(time_each(&probes, |q| flat.scan_match(q, &policy)));
        rows.push(TimingRow {
            count,
            match_mean_ns,
            match_median_ns,
            scan_mean_ns,
            scan_median_ns,
            hits,
        });
    }
    Ok(rows)
}

pub fn timing_csv(rows: &[TimingRow]) -> String {
    let mut s = String::from(
        "known_signals,match_mean_ns,match_median_ns,scan_mean_ns,scan_median_ns,hits\n",
    );
    for r in rows {
        writeln!(
            s,
            "{},{:.1},{:.1},{:.1},{:.1},{}",
            r.count, r.match_mean_ns, r.match_median_ns, r.scan_mean_ns, r.scan_median_ns, r.hits
        )
        .unwrap();
    }
    s
}
