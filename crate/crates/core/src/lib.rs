//! Automatic modulation classification toolkit.
//!
//! Synthesizes eleven analog and keyed modulation schemes in AWGN
//! ([`sigsynth`]), derives instantaneous amplitude, phase and frequency from
//! the analytic signal ([`dsp`]), reduces them to nine spectral features
//! ([`features`]), classifies with one-vs-one SVMs trained by sequential
//! minimal optimization ([`svm`]), and short-circuits repeat transmissions
//! through a tolerance-matching feature store ([`featstore`]).

pub mod dataset;
pub mod dsp;
pub mod error;
pub mod featstore;
pub mod features;
pub mod scheme;
pub mod sigsynth;
pub mod svm;

pub use dataset::LabeledDataset;
pub use dsp::{FeatureConfig, InstantaneousSeries, Spectrum};
pub use error::{Error, Result};
pub use featstore::{
    ClassificationOutcome, FeatureRecord, FeatureStore, MatchPolicy, MissAction, OutcomeKind,
};
pub use features::{extract_all, FeatureVector, FEATURE_COUNT, FEATURE_NAMES};
pub use scheme::{SchemeLabel, SchemeTag};
pub use sigsynth::{SynthConfig, Waveform};
pub use svm::{BinarySvmModel, KernelSpec, MulticlassModel, SvmParams};
