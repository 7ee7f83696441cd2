//! Run configuration read from `key = value` text files.
//!
//! Blank lines and lines starting with `#` are ignored, so a manifest written
//! by any command is itself a loadable config.

use std::fmt::Write as _;
use std::path::Path;

use amc_core::{FeatureConfig, KernelSpec, SchemeLabel, SvmParams, SynthConfig, FEATURE_COUNT};

use crate::ArgError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub synth: SynthConfig,
    pub features: FeatureConfig,
    pub svm: SvmParams,
    pub schemes: Vec<SchemeLabel>,
    pub snrs: Vec<f64>,
    /// Realizations per scheme and SNR for `synth`.
    pub count: usize,
    pub train_count: usize,
    pub test_count: usize,
    pub train_seed: u64,
    pub test_seed: u64,
    /// Store tolerances; derived from the training data when absent.
    pub epsilon: Option<[f64; FEATURE_COUNT]>,
    pub store_counts: Vec<usize>,
    pub queries: usize,
    pub timing_epsilon: f64,
    pub timing_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            synth: SynthConfig::default(),
            features: FeatureConfig::default(),
            svm: SvmParams::default(),
            schemes: SchemeLabel::ALL.to_vec(),
            snrs: vec![5.0, 15.0, 25.0],
            count: 10,
            train_count: 100,
            test_count: 100,
            train_seed: 1_000_000,
            test_seed: 2_000_000,
            epsilon: None,
            store_counts: vec![100, 1_000, 10_000, 100_000],
            queries: 1_000,
            timing_epsilon: 0.01,
            timing_seed: 7,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ArgError> {
    v.parse()
        .map_err(|_| ArgError(format!("bad value `{v}` for `{key}`")))
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, ArgError> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(key, s.trim()))
        .collect()
}

pub fn parse_schemes(v: &str) -> Result<Vec<SchemeLabel>, ArgError> {
    if v.trim().eq_ignore_ascii_case("all") {
        return Ok(SchemeLabel::ALL.to_vec());
    }
    v.split(',')
        .map(|s| {
            s.trim().parse().map_err(|_| {
                ArgError(format!(
                    "unknown scheme `{}`; valid labels: {}",
                    s.trim(),
                    SchemeLabel::valid_names()
                ))
            })
        })
        .collect()
}

pub fn parse_epsilon(v: &str) -> Result<[f64; FEATURE_COUNT], ArgError> {
    let vals: Vec<f64> = list("epsilon", v)?;
    let eps = match vals.len() {
        1 => [vals[0]; FEATURE_COUNT],
        FEATURE_COUNT => vals.try_into().unwrap(),
        n => {
            return Err(ArgError(format!(
                "epsilon needs 1 or {FEATURE_COUNT} values, got {n}"
            )))
        }
    };
    if eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(ArgError("epsilon values must be positive".into()));
    }
    Ok(eps)
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ArgError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ArgError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse_text(&text)
    }

    pub fn parse_text(text: &str) -> Result<Self, ArgError> {
        let mut cfg = RunConfig::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ArgError(format!("config line {}: expected key = value", no + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ArgError> {
        match key {
            "sample_rate" => self.synth.sample_rate = parse(key, v)?,
            "carrier" => self.synth.carrier = parse(key, v)?,
            "message_freq" => self.synth.message_freq = parse(key, v)?,
            "num_samples" => self.synth.num_samples = parse(key, v)?,
            "am_depth" => self.synth.am_depth = parse(key, v)?,
            "fm_index" => self.synth.fm_index = parse(key, v)?,
            "symbol_rate" => self.synth.symbol_rate = parse(key, v)?,
            "fsk_deviation" => self.synth.fsk_deviation = parse(key, v)?,
            "seed" => self.synth.rng_seed = parse(key, v)?,
            "trim" => self.features.trim = parse(key, v)?,
            "threshold" => self.features.threshold = parse(key, v)?,
            "c" => self.svm.c = parse(key, v)?,
            "tol" => self.svm.tol = parse(key, v)?,
            "degree" => {
                self.svm.kernel = KernelSpec::polynomial(parse(key, v)?, self.svm.kernel.offset)
            }
            "offset" => {
                self.svm.kernel = KernelSpec::polynomial(self.svm.kernel.degree, parse(key, v)?)
            }
            "svm_seed" => self.svm.seed = parse(key, v)?,
            "max_passes" => self.svm.max_passes = parse(key, v)?,
            "schemes" => self.schemes = parse_schemes(v)?,
            "snrs" => self.snrs = list(key, v)?,
            "count" => self.count = parse(key, v)?,
            "train_count" => self.train_count = parse(key, v)?,
            "test_count" => self.test_count = parse(key, v)?,
            "train_seed" => self.train_seed = parse(key, v)?,
            "test_seed" => self.test_seed = parse(key, v)?,
            "epsilon" => {
                self.epsilon = if v == "auto" {
                    None
                } else {
                    Some(parse_epsilon(v)?)
                }
            }
            "store_counts" => self.store_counts = list(key, v)?,
            "queries" => self.queries = parse(key, v)?,
            "timing_epsilon" => self.timing_epsilon = parse(key, v)?,
            "timing_seed" => self.timing_seed = parse(key, v)?,
            _ => return Err(ArgError(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ArgError> {
        let bad = |e: amc_core::Error| ArgError(e.to_string());
        self.synth.validate().map_err(bad)?;
        self.svm.validate().map_err(bad)?;
        if self.schemes.is_empty() {
            return Err(ArgError("no schemes selected".into()));
        }
        if self.snrs.iter().any(|s| s.is_nan()) {
            return Err(ArgError("SNR values must be numbers".into()));
        }
        if !(self.timing_epsilon > 0.0) {
            return Err(ArgError("timing_epsilon must be positive".into()));
        }
        Ok(())
    }

    /// `key = value` lines that [`RunConfig::parse_text`] reads back to `self`.
    pub fn render(&self) -> String {
        let s = &self.synth;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
        kv("sample_rate", format!("{:?}", s.sample_rate));
        kv("carrier", format!("{:?}", s.carrier));
        kv("message_freq", format!("{:?}", s.message_freq));
        kv("num_samples", s.num_samples.to_string());
        kv("am_depth", format!("{:?}", s.am_depth));
        kv("fm_index", format!("{:?}", s.fm_index));
        kv("symbol_rate", format!("{:?}", s.symbol_rate));
        kv("fsk_deviation", format!("{:?}", s.fsk_deviation));
        kv("seed", s.rng_seed.to_string());
        kv("trim", self.features.trim.to_string());
        kv("threshold", format!("{:?}", self.features.threshold));
        kv("c", format!("{:?}", self.svm.c));
        kv("tol", format!("{:?}", self.svm.tol));
        kv("degree", self.svm.kernel.degree.to_string());
        kv("offset", format!("{:?}", self.svm.kernel.offset));
        kv("svm_seed", self.svm.seed.to_string());
        kv("max_passes", self.svm.max_passes.to_string());
        kv(
            "schemes",
            join(&self.schemes.iter().map(|s| s.name()).collect::<Vec<_>>()),
        );
        kv(
            "snrs",
            join(
                &self
                    .snrs
                    .iter()
                    .map(|v| format!("{v:?}"))
                    .collect::<Vec<_>>(),
            ),
        );
        kv("count", self.count.to_string());
        kv("train_count", self.train_count.to_string());
        kv("test_count", self.test_count.to_string());
        kv("train_seed", self.train_seed.to_string());
        kv("test_seed", self.test_seed.to_string());
        kv(
            "epsilon",
            match &self.epsilon {
                None => "auto".into(),
                Some(e) => join(&e.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>()),
            },
        );
        kv("store_counts", join(&self.store_counts));
        kv("queries", self.queries.to_string());
        kv("timing_epsilon", format!("{:?}", self.timing_epsilon));
        kv("timing_seed", self.timing_seed.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_parses_back() {
        let mut cfg = RunConfig::default();
        cfg.set("snrs", "0, 7.5").unwrap();
        cfg.set("epsilon", "0.1").unwrap();
        cfg.set("schemes", "am,2psk").unwrap();
        cfg.set("degree", "3").unwrap();
        assert_eq!(RunConfig::parse_text(&cfg.render()).unwrap(), cfg);
        assert_eq!(
            RunConfig::parse_text(&RunConfig::default().render()).unwrap(),
            RunConfig::default()
        );
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let cfg = RunConfig::parse_text("# note\n\ncount = 3\n  # indented\n").unwrap();
        assert_eq!(cfg.count, 3);
    }

    #[test]
    fn bad_input_is_an_argument_error() {
        assert!(RunConfig::parse_text("nonsense")
            .unwrap_err()
            .0
            .contains("key = value"));
        assert!(RunConfig::parse_text("bogus = 1")
            .unwrap_err()
            .0
            .contains("bogus"));
        assert!(RunConfig::parse_text("count = x")
            .unwrap_err()
            .0
            .contains("count"));
        let e = parse_schemes("AM,QAM").unwrap_err().0;
        assert!(e.contains("QAM") && e.contains("4PSK"));
        assert!(parse_epsilon("1,2").is_err());
        assert!(parse_epsilon("0").is_err());
    }
}
