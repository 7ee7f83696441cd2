//! Shared fixtures for the criterion benches.

use amc_core::sigsynth::realize;
use amc_core::svm::train_multiclass;
use amc_core::{
    extract_all, FeatureConfig, FeatureRecord, FeatureStore, FeatureVector, LabeledDataset,
    MulticlassModel, SchemeLabel, SvmParams, SynthConfig, FEATURE_COUNT,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `count` records uniform in the unit cube with labels cycling through all
/// schemes.
pub fn uniform_store(count: usize, epsilon: f64, seed: u64) -> FeatureStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = FeatureStore::new([epsilon; FEATURE_COUNT]).unwrap();
    for i in 0..count {
        let v: [f64; FEATURE_COUNT] = std::array::from_fn(|_| rng.random());
        let label = SchemeLabel::ALL[i % SchemeLabel::ALL.len()];
        store
            .insert(FeatureRecord::new(
                label,
                FeatureVector::from_array(v),
                15.0,
                i as u64,
            ))
            .unwrap();
    }
    store
}

/// Half near-copies of stored records, half fresh uniform points.
pub fn probes(store: &FeatureStore, count: usize, seed: u64) -> Vec<FeatureVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = store.epsilon()[0];
    (0..count)
        .map(|i| {
            if i % 2 == 0 && !store.is_empty() {
                let base = store.records()[rng.random_range(0..store.len())]
                    .features
                    .to_array();
                FeatureVector::from_array(base.map(|v| v + (rng.random::<f64>() - 0.5) * eps))
            } else {
                FeatureVector::from_array(std::array::from_fn(|_| rng.random()))
            }
        })
        .collect()
}

/// Features of `per_class` realizations of every scheme at `snr`.
pub fn corpus(snr: f64, per_class: usize, seed: u64) -> LabeledDataset {
    let fcfg = FeatureConfig::default();
    let mut rows = Vec::new();
    for (k, &scheme) in SchemeLabel::ALL.iter().enumerate() {
        for i in 0..per_class {
            let cfg = SynthConfig::default().with_seed(seed + (k * per_class + i) as u64);
            let w = realize(scheme, &cfg, snr).unwrap();
            rows.push((extract_all(&w, &fcfg).unwrap(), scheme));
        }
    }
    LabeledDataset::from_rows(rows)
}

pub fn trained_model(per_class: usize) -> MulticlassModel {
    train_multiclass(&corpus(15.0, per_class, 1), &SvmParams::default()).unwrap()
}
