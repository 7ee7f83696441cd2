//! The nine spectral features computed from instantaneous values.
//!
//! Amplitude statistics (`sigma_aa`, `mu42_a`) and `gamma_max` use every
//! trimmed sample; the phase and frequency deviations (`sigma_dp`,
//! `sigma_ap`, `sigma_af`) and `sigma_a` use only samples whose normalized
//! amplitude exceeds the threshold. `mu42_f` uses every trimmed sample.

use crate::dsp::{dft, dft_real, instantaneous, InstantaneousSeries, Spectrum};
use crate::error::{Error, Result};
use crate::sigsynth::Waveform;

pub use crate::dsp::FeatureConfig;

pub const FEATURE_COUNT: usize = 9;

/// Canonical feature names, in vector order.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "gamma_max",
    "sigma_dp",
    "sigma_ap",
    "p",
    "sigma_aa",
    "sigma_af",
    "sigma_a",
    "mu42a",
    "mu42f",
];

/// Below this second moment the kurtosis is reported as degenerate.
pub const KURTOSIS_GUARD: f64 = 1e-12;

/// Negative radicands down to this are rounding noise and clamp to zero.
pub const RADICAND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeatureVector {
    pub gamma_max: f64,
    pub sigma_dp: f64,
    pub sigma_ap: f64,
    pub p_symmetry: f64,
    pub sigma_aa: f64,
    pub sigma_af: f64,
    pub sigma_a: f64,
    pub mu42_a: f64,
    pub mu42_f: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; FEATURE_COUNT] {
        [
            self.gamma_max,
            self.sigma_dp,
            self.sigma_ap,
            self.p_symmetry,
            self.sigma_aa,
            self.sigma_af,
            self.sigma_a,
            self.mu42_a,
            self.mu42_f,
        ]
    }

    pub fn from_array(v: [f64; FEATURE_COUNT]) -> Self {
        FeatureVector {
            gamma_max: v[0],
            sigma_dp: v[1],
            sigma_ap: v[2],
            p_symmetry: v[3],
            sigma_aa: v[4],
            sigma_af: v[5],
            sigma_a: v[6],
            mu42_a: v[7],
            mu42_f: v[8],
        }
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        let arr: [f64; FEATURE_COUNT] = v.try_into().map_err(|_| Error::Dimension {
            expected: FEATURE_COUNT,
            got: v.len(),
        })?;
        Ok(Self::from_array(arr))
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub fn validate(&self) -> Result<()> {
        match self.to_array().iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(i) => Err(Error::NonFinite(format!("feature {}", FEATURE_NAMES[i]))),
        }
    }
}

/// Kurtosis value plus whether the second moment fell under [`KURTOSIS_GUARD`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kurtosis {
    pub value: f64,
    pub degenerate: bool,
}

fn mean(it: impl Iterator<Item = f64>) -> (f64, usize) {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (if n == 0 { 0.0 } else { s / n as f64 }, n)
}

fn deviation(feature: &'static str, second: f64, first: f64) -> Result<f64> {
    let radicand = second - first * first;
    if radicand >= 0.0 {
        Ok(radicand.sqrt())
    } else if radicand >= -RADICAND_SLACK {
        Ok(0.0)
    } else {
        Err(Error::NumericConsistency { feature, radicand })
    }
}

/// `sqrt(mean x² − (mean g(x))²)` over the masked samples.
fn masked_deviation(
    feature: &'static str,
    inst: &InstantaneousSeries,
    xs: &[f64],
    first: impl Fn(f64) -> f64,
) -> Result<f64> {
    if inst.nc <= 1 {
        return Err(Error::InsufficientSamples {
            feature,
            count: inst.nc,
        });
    }
    let (m2, _) = mean(inst.masked(xs).map(|x| x * x));
    let (m1, _) = mean(inst.masked(xs).map(first));
    deviation(feature, m2, m1)
}

pub fn gamma_max(inst: &InstantaneousSeries) -> f64 {
    let n = inst.acn.len() as f64;
    dft_real(&inst.acn)
        .iter()
        .map(|c| c.norm_sqr())
        .fold(0.0, f64::max)
        / n
}

pub fn sigma_dp(inst: &InstantaneousSeries) -> Result<f64> {
    masked_deviation("sigma_dp", inst, &inst.phi_nl, |x| x)
}

pub fn sigma_ap(inst: &InstantaneousSeries) -> Result<f64> {
    masked_deviation("sigma_ap", inst, &inst.phi_nl, f64::abs)
}

/// `(Pl − Pu) / (Pl + Pu)` with sidebands taken symmetrically around the
/// carrier bin `fcn + 1`.
pub fn spectrum_symmetry(spec: &Spectrum) -> Result<f64> {
    let fcn = spec.fcn;
    if fcn < 1 || spec.n < 2 * (fcn + 1) || spec.bins.len() != spec.n {
        return Err(Error::Shape(format!(
            "fcn {fcn} does not fit a {}-bin spectrum",
            spec.n
        )));
    }
    let lower: f64 = spec.bins[1..=fcn].iter().map(|c| c.norm_sqr()).sum();
    let upper: f64 = spec.bins[fcn + 2..=2 * fcn + 1]
        .iter()
        .map(|c| c.norm_sqr())
        .sum();
    if lower + upper < 1e-30 {
        return Err(Error::ZeroSpectrum);
    }
    Ok((lower - upper) / (lower + upper))
}

pub fn sigma_aa(inst: &InstantaneousSeries) -> Result<f64> {
    if inst.len() < 2 {
        return Err(Error::InsufficientSamples {
            feature: "sigma_aa",
            count: inst.len(),
        });
    }
    let (m2, _) = mean(inst.acn.iter().map(|x| x * x));
    let (m1, _) = mean(inst.acn.iter().map(|x| x.abs()));
    deviation("sigma_aa", m2, m1)
}

pub fn sigma_af(inst: &InstantaneousSeries) -> Result<f64> {
    masked_deviation("sigma_af", inst, &inst.f_n, f64::abs)
}

pub fn sigma_a(inst: &InstantaneousSeries) -> Result<f64> {
    masked_deviation("sigma_a", inst, &inst.acn, |x| x)
}

/// `E{x⁴} / E{x²}²`, or 0 flagged degenerate when `E{x²}` is below the guard.
pub fn kurtosis(xs: &[f64]) -> Kurtosis {
    let (m2, _) = mean(xs.iter().map(|x| x * x));
    if m2 < KURTOSIS_GUARD {
        return Kurtosis {
            value: 0.0,
            degenerate: true,
        };
    }
    let (m4, _) = mean(xs.iter().map(|x| (x * x) * (x * x)));
    Kurtosis {
        value: m4 / (m2 * m2),
        degenerate: false,
    }
}

pub fn mu42_amp(inst: &InstantaneousSeries) -> Kurtosis {
    kurtosis(&inst.acn)
}

pub fn mu42_freq(inst: &InstantaneousSeries) -> Kurtosis {
    kurtosis(&inst.f_n)
}

/// Full feature pipeline for one waveform.
pub fn extract_all(w: &Waveform, cfg: &FeatureConfig) -> Result<FeatureVector> {
    let inst = instantaneous(w, w.fc, cfg)?;
    let spec = dft(w)?;
    features_from(&inst, &spec)
}

pub fn features_from(inst: &InstantaneousSeries, spec: &Spectrum) -> Result<FeatureVector> {
    let named = |name: &'static str| move |e: Error| e.in_feature(name);
    let v = FeatureVector {
        gamma_max: gamma_max(inst),
        sigma_dp: sigma_dp(inst).map_err(named("sigma_dp"))?,
        sigma_ap: sigma_ap(inst).map_err(named("sigma_ap"))?,
        p_symmetry: spectrum_symmetry(spec).map_err(named("p"))?,
        sigma_aa: sigma_aa(inst).map_err(named("sigma_aa"))?,
        sigma_af: sigma_af(inst).map_err(named("sigma_af"))?,
        sigma_a: sigma_a(inst).map_err(named("sigma_a"))?,
        mu42_a: mu42_amp(inst).value,
        mu42_f: mu42_freq(inst).value,
    };
    v.validate()?;
    Ok(v)
}
