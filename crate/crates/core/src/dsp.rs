//! DFT, analytic signal and instantaneous amplitude/phase/frequency.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::sigsynth::Waveform;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

fn inverse_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Unnormalized forward DFT of a real sequence.
pub fn dft_real(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    if !buf.is_empty() {
        forward_plan(buf.len()).process(&mut buf);
    }
    buf
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub bins: Vec<Complex64>,
    pub fs: f64,
    pub n: usize,
    /// Carrier bin is `fcn + 1` (0-based, bin 0 is DC).
    pub fcn: usize,
}

pub fn carrier_bin_offset(fc: f64, n: usize, fs: f64) -> Result<usize> {
    let fcn = (fc * n as f64 / fs - 1.0).round();
    if fcn < 0.0 || fcn as usize + 1 >= n / 2 {
        return Err(Error::Shape(format!(
            "carrier bin offset {fcn} outside 0..{}",
            n / 2 - 1
        )));
    }
    Ok(fcn as usize)
}

pub fn dft(w: &Waveform) -> Result<Spectrum> {
    if w.len() < 2 {
        return Err(Error::Shape(format!(
            "dft needs at least 2 samples, got {}",
            w.len()
        )));
    }
    let fcn = carrier_bin_offset(w.fc, w.len(), w.fs)?;
    Ok(Spectrum {
        bins: dft_real(&w.samples),
        fs: w.fs,
        n: w.len(),
        fcn,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticSignal {
    /// One entry per input sample; the padding sample (if any) is dropped.
    pub z: Vec<Complex64>,
    /// Input had odd length and was zero-padded by one sample.
    pub padded: bool,
}

/// Frequency-domain Hilbert method: keep DC and Nyquist, double the positive
/// bins, zero the negative ones.
pub fn analytic_signal(x: &[f64]) -> Result<AnalyticSignal> {
    if x.len() < 2 {
        return Err(Error::Shape(format!(
            "analytic signal needs at least 2 samples, got {}",
            x.len()
        )));
    }
    let padded = x.len() % 2 == 1;
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    if padded {
        buf.push(Complex64::new(0.0, 0.0));
    }
    let n = buf.len();
    forward_plan(n).process(&mut buf);
    let half = n / 2;
    for (k, b) in buf.iter_mut().enumerate() {
        if k == 0 || k == half {
            continue;
        } else if k < half {
            *b *= 2.0;
        } else {
            *b = Complex64::new(0.0, 0.0);
        }
    }
    inverse_plan(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.truncate(x.len());
    buf.iter_mut().for_each(|v| *v *= scale);
    Ok(AnalyticSignal { z: buf, padded })
}

/// Successive-difference unwrapping with ±2π correction.
pub fn unwrap_phase(wrapped: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(wrapped.len());
    let mut offset = 0.0;
    let mut prev = None;
    for &p in wrapped {
        if let Some(q) = prev {
            let mut d = p - q;
            while d > PI {
                d -= 2.0 * PI;
                offset -= 2.0 * PI;
            }
            while d < -PI {
                d += 2.0 * PI;
                offset += 2.0 * PI;
            }
        }
        out.push(p + offset);
        prev = Some(p);
    }
    out
}

/// Lower edge of the nonlinear-phase principal interval `(-π/2, 3π/2]`.
///
/// Both 2PSK states (0 and π) sit π/2 inside it, and the 4PSK states
/// π/4..7π/4 land on {-π/4, π/4, 3π/4, 5π/4}.
pub const PHASE_WINDOW_LOW: f64 = -PI / 2.0;

pub fn wrap_phase_window(p: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut v = (p - PHASE_WINDOW_LOW).rem_euclid(two_pi);
    if v == 0.0 {
        v = two_pi;
    }
    v + PHASE_WINDOW_LOW
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConfig {
    /// Samples dropped at each end before any statistic.
    pub trim: usize,
    /// Amplitude threshold At over the normalized amplitude.
    pub threshold: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            trim: 32,
            threshold: 1.0,
        }
    }
}

/// Instantaneous values over the trimmed interior of a waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct InstantaneousSeries {
    pub a: Vec<f64>,
    pub an: Vec<f64>,
    pub acn: Vec<f64>,
    pub ma: f64,
    /// Unwrapped instantaneous phase, radians.
    pub phi: Vec<f64>,
    /// Carrier-removed phase, wrapped to `(-π/2, 3π/2]` and then mean-removed.
    pub phi_nl: Vec<f64>,
    /// Mean subtracted from the wrapped nonlinear phase.
    pub phi_nl_mean: f64,
    /// Instantaneous frequency, Hz.
    pub f: Vec<f64>,
    /// `(f - mean f) / fs`.
    pub f_n: Vec<f64>,
    pub threshold: f64,
    /// `an[n] > threshold`.
    pub mask: Vec<bool>,
    pub nc: usize,
    pub fs: f64,
    /// Index of the first retained sample in the original waveform.
    pub start: usize,
    pub padded: bool,
}

impl InstantaneousSeries {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Yields the values of `xs` whose sample passes the amplitude threshold.
    pub fn masked<'a>(&'a self, xs: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        xs.iter()
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .map(|(&x, _)| x)
    }
}

pub fn instantaneous(w: &Waveform, fc: f64, cfg: &FeatureConfig) -> Result<InstantaneousSeries> {
    if (fc - w.fc).abs() > 1e-9 * w.fc.abs().max(1.0) {
        return Err(Error::Config(format!(
            "carrier {fc} differs from waveform carrier {}",
            w.fc
        )));
    }
    let trim = cfg.trim.max(1);
    let n = w.len();
    if n < 2 * trim + 2 {
        return Err(Error::Shape(format!(
            "{n} samples leave nothing after trimming {trim} per end"
        )));
    }
    let analytic = analytic_signal(&w.samples)?;
    let z = &analytic.z;
    let range = trim..n - trim;
    let len = range.len() as f64;

    let a: Vec<f64> = z[range.clone()].iter().map(|c| c.norm()).collect();
    let ma = a.iter().sum::<f64>() / len;
    if !(ma > 0.0) {
        return Err(Error::DegenerateSignal(
            "mean instantaneous amplitude is zero".into(),
        ));
    }
    let an: Vec<f64> = a.iter().map(|v| v / ma).collect();
    let acn: Vec<f64> = an.iter().map(|v| v - 1.0).collect();

    let wrapped: Vec<f64> = z.iter().map(|c| c.arg()).collect();
    let phi_full = unwrap_phase(&wrapped);
    let omega = 2.0 * PI * fc / w.fs;
    let raw_nl: Vec<f64> = range
        .clone()
        .map(|i| wrap_phase_window(phi_full[i] - omega * i as f64))
        .collect();
    let phi_nl_mean = raw_nl.iter().sum::<f64>() / len;
    let phi_nl = raw_nl.iter().map(|p| p - phi_nl_mean).collect();

    let f: Vec<f64> = range
        .clone()
        .map(|i| (phi_full[i + 1] - phi_full[i - 1]) * w.fs / (4.0 * PI))
        .collect();
    let mean_f = f.iter().sum::<f64>() / len;
    let f_n = f.iter().map(|v| (v - mean_f) / w.fs).collect();

    let mask: Vec<bool> = an.iter().map(|&v| v > cfg.threshold).collect();
    let nc = mask.iter().filter(|&&m| m).count();
    if nc == 0 {
        return Err(Error::EmptyMask {
            threshold: cfg.threshold,
        });
    }

    Ok(InstantaneousSeries {
        a,
        an,
        acn,
        ma,
        phi: phi_full[range.clone()].to_vec(),
        phi_nl,
        phi_nl_mean,
        f,
        f_n,
        threshold: cfg.threshold,
        mask,
        nc,
        fs: w.fs,
        start: trim,
        padded: analytic.padded,
    })
}
