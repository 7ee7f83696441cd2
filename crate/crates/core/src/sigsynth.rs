//! Noiseless synthesis of the eleven modulation schemes and calibrated AWGN.
//!
//! Analog schemes use a single-tone message `cos(2π fm t)`; keyed schemes
//! draw equiprobable symbols from a [`ChaCha8Rng`] seeded with
//! [`SynthConfig::rng_seed`] and use rectangular pulses. FSK is
//! phase-continuous so the envelope stays constant across symbol edges.

use std::f64::consts::{FRAC_PI_4, PI};
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scheme::{SchemeLabel, SchemeTag};

/// Mixes a realization seed into the independent stream used for its noise.
const NOISE_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Sampling rate in Hz.
    pub sample_rate: f64,
    /// Carrier frequency in Hz.
    pub carrier: f64,
    /// Message tone for the analog schemes, Hz.
    pub message_freq: f64,
    pub num_samples: usize,
    pub am_depth: f64,
    pub fm_index: f64,
    /// Symbols per second for the keyed schemes.
    pub symbol_rate: f64,
    /// Spacing between adjacent FSK tones, Hz.
    pub fsk_deviation: f64,
    pub rng_seed: u64,
}

/// Exactly 41 periods in 4096 samples at 100 kHz (about 1.001 kHz), so the
/// default analog waveforms are periodic in the FFT frame.
pub const DEFAULT_MESSAGE_FREQ: f64 = 100_000.0 * 41.0 / 4096.0;

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            sample_rate: 100_000.0,
            carrier: 25_000.0,
            message_freq: DEFAULT_MESSAGE_FREQ,
            num_samples: 4096,
            am_depth: 0.5,
            fm_index: 5.0,
            symbol_rate: 1_000.0,
            fsk_deviation: 2_000.0,
            rng_seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn with_seed(&self, seed: u64) -> Self {
        SynthConfig {
            rng_seed: seed,
            ..self.clone()
        }
    }

    pub fn samples_per_symbol(&self) -> usize {
        (self.sample_rate / self.symbol_rate).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let fs = self.sample_rate;
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if !(fs > 0.0 && fs.is_finite()) {
            return fail("fs > 0");
        }
        if !(self.carrier > 0.0 && self.carrier < fs / 2.0) {
            return fail("0 < fc < fs/2");
        }
        if !(self.message_freq > 0.0 && self.message_freq < self.carrier) {
            return fail("0 < fm < fc");
        }
        if self.num_samples < 64 {
            return fail("N >= 64");
        }
        if !(0.0..=1.0).contains(&self.am_depth) {
            return fail("0 <= Ka <= 1");
        }
        if !(self.fm_index >= 0.0 && self.fm_index.is_finite()) {
            return fail("kf >= 0");
        }
        if !(self.symbol_rate > 0.0) {
            return fail("symbol_rate > 0");
        }
        let sps = fs / self.symbol_rate;
        if (sps - sps.round()).abs() > 1e-9 || sps.round() < 1.0 {
            return fail("symbol_rate divides fs evenly");
        }
        let spread = self.fsk_deviation * 1.5;
        if !(self.fsk_deviation > 0.0)
            || self.carrier + spread >= fs / 2.0
            || self.carrier - spread <= 0.0
        {
            return fail("fc + fsk_deviation*(levels-1)/2 < fs/2");
        }
        Ok(())
    }
}

/// A labeled, sampled real signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub fs: f64,
    pub fc: f64,
    pub scheme: SchemeTag,
    /// `f64::INFINITY` for noiseless signals.
    pub snr_db: f64,
    /// Realization seed (symbols and, through [`noise_seed`], the noise).
    pub seed: u64,
}

impl Waveform {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn power(&self) -> f64 {
        mean_power(&self.samples)
    }

    /// Copy scaled to unit mean power.
    pub fn normalized_power(&self) -> Result<Waveform> {
        let p = self.power();
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::DegenerateSignal(format!(
                "power {p} cannot be normalized"
            )));
        }
        let g = p.sqrt().recip();
        Ok(Waveform {
            samples: self.samples.iter().map(|x| x * g).collect(),
            ..self.clone()
        })
    }
}

fn mean_power(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

pub fn noise_seed(realization_seed: u64) -> u64 {
    realization_seed ^ NOISE_STREAM
}

/// Draws the symbol stream a keyed scheme would use under `cfg`.
pub fn draw_symbols(levels: usize, cfg: &SynthConfig) -> Vec<usize> {
    let sps = cfg.samples_per_symbol();
    let count = cfg.num_samples.div_ceil(sps);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    (0..count).map(|_| rng.random_range(0..levels)).collect()
}

/// Noiseless waveform for `scheme` at the raw amplitudes of its formula
/// (AM carrier amplitude 1, keyed peak amplitude 1).
pub fn synthesize(scheme: SchemeLabel, cfg: &SynthConfig) -> Result<Waveform> {
    cfg.validate()?;
    let symbols = scheme
        .levels()
        .map(|m| draw_symbols(m, cfg))
        .unwrap_or_default();
    render(scheme, cfg, &symbols)
}

/// As [`synthesize`] but with an explicit symbol stream for keyed schemes.
/// Streams shorter than the realization are an error; analog schemes ignore it.
pub fn synthesize_with_symbols(
    scheme: SchemeLabel,
    cfg: &SynthConfig,
    symbols: &[usize],
) -> Result<Waveform> {
    cfg.validate()?;
    if let Some(m) = scheme.levels() {
        let need = cfg.num_samples.div_ceil(cfg.samples_per_symbol());
        if symbols.len() < need {
            return Err(Error::Shape(format!(
                "{need} symbols required, got {}",
                symbols.len()
            )));
        }
        if let Some(bad) = symbols.iter().find(|&&s| s >= m) {
            return Err(Error::Config(format!("symbol {bad} outside 0..{m}")));
        }
    }
    render(scheme, cfg, symbols)
}

fn render(scheme: SchemeLabel, cfg: &SynthConfig, symbols: &[usize]) -> Result<Waveform> {
    let n = cfg.num_samples;
    let fs = cfg.sample_rate;
    let wc = 2.0 * PI * cfg.carrier;
    let wm = 2.0 * PI * cfg.message_freq;
    let sps = cfg.samples_per_symbol();
    let t = |i: usize| i as f64 / fs;
    let symbol_at = |i: usize| symbols[i / sps];

    let samples: Vec<f64> = match scheme {
        SchemeLabel::Am => (0..n)
            .map(|i| (1.0 + cfg.am_depth * (wm * t(i)).cos()) * (wc * t(i)).cos())
            .collect(),
        SchemeLabel::Fm => (0..n)
            .map(|i| (wc * t(i) + cfg.fm_index * (wm * t(i)).sin()).cos())
            .collect(),
        SchemeLabel::Dsb => (0..n)
            .map(|i| (wm * t(i)).cos() * (wc * t(i)).cos())
            .collect(),
        // Phasing method: m cos(wc t) -/+ H{m} sin(wc t), with H{cos} = sin.
        SchemeLabel::Usb | SchemeLabel::Lsb => {
            let sign = if scheme == SchemeLabel::Usb {
                -1.0
            } else {
                1.0
            };
            (0..n)
                .map(|i| {
                    let (m, mh) = ((wm * t(i)).cos(), (wm * t(i)).sin());
                    m * (wc * t(i)).cos() + sign * mh * (wc * t(i)).sin()
                })
                .collect()
        }
        SchemeLabel::Ask2 | SchemeLabel::Ask4 => {
            let top = (scheme.levels().unwrap() - 1) as f64;
            (0..n)
                .map(|i| symbol_at(i) as f64 / top * (wc * t(i)).cos())
                .collect()
        }
        SchemeLabel::Fsk2 | SchemeLabel::Fsk4 => {
            let centre = (scheme.levels().unwrap() - 1) as f64 / 2.0;
            let mut phase = 0.0f64;
            (0..n)
                .map(|i| {
                    let v = phase.cos();
                    let f = cfg.carrier + cfg.fsk_deviation * (symbol_at(i) as f64 - centre);
                    phase = (phase + 2.0 * PI * f / fs) % (2.0 * PI);
                    v
                })
                .collect()
        }
        SchemeLabel::Psk2 => (0..n)
            .map(|i| (wc * t(i) + PI * symbol_at(i) as f64).cos())
            .collect(),
        SchemeLabel::Psk4 => (0..n)
            .map(|i| (wc * t(i) + FRAC_PI_4 + PI / 2.0 * symbol_at(i) as f64).cos())
            .collect(),
    };

    Ok(Waveform {
        samples,
        fs,
        fc: cfg.carrier,
        scheme: scheme.into(),
        snr_db: f64::INFINITY,
        seed: cfg.rng_seed,
    })
}

/// Adds zero-mean Gaussian noise of variance `power / 10^(snr_db/10)`.
pub fn add_awgn(w: &Waveform, snr_db: f64, seed: u64) -> Result<Waveform> {
    let p = w.power();
    if !(p > 0.0) {
        return Err(Error::DegenerateSignal("input has zero power".into()));
    }
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::Config(format!(
            "snr_db must be finite or +inf, got {snr_db}"
        )));
    }
    if snr_db == f64::INFINITY {
        return Ok(Waveform {
            snr_db,
            ..w.clone()
        });
    }
    let sigma = (p / 10f64.powf(snr_db / 10.0)).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = w
        .samples
        .iter()
        .map(|x| x + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(Waveform {
        samples,
        snr_db,
        ..w.clone()
    })
}

/// `10 log10(P_clean / P_noise)` with `noise = noisy - clean`.
pub fn measure_snr(clean: &Waveform, noisy: &Waveform) -> Result<f64> {
    if clean.len() != noisy.len() {
        return Err(Error::Shape(format!(
            "lengths {} and {}",
            clean.len(),
            noisy.len()
        )));
    }
    if clean.fs != noisy.fs {
        return Err(Error::Shape(format!(
            "sampling rates {} and {}",
            clean.fs, noisy.fs
        )));
    }
    let noise: Vec<f64> = noisy
        .samples
        .iter()
        .zip(&clean.samples)
        .map(|(a, b)| a - b)
        .collect();
    let pn = mean_power(&noise);
    if pn == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (clean.power() / pn).log10())
}

/// One training/test realization: synthesize, scale to unit power, add noise
/// seeded from the realization seed.
pub fn realize(scheme: SchemeLabel, cfg: &SynthConfig, snr_db: f64) -> Result<Waveform> {
    let clean = synthesize(scheme, cfg)?.normalized_power()?;
    add_awgn(&clean, snr_db, noise_seed(cfg.rng_seed))
}

/// A (scheme, SNR, seed) triple identifying one realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizationSpec {
    pub scheme: SchemeLabel,
    pub snr_db: f64,
    pub seed: u64,
}

/// Enumerates `count` realizations per (scheme, snr) with seeds
/// `base_seed + index`, index running over the whole batch.
pub fn plan_batch(
    schemes: &[SchemeLabel],
    snrs: &[f64],
    count: usize,
    base_seed: u64,
) -> Vec<RealizationSpec> {
    let mut out = Vec::with_capacity(schemes.len() * snrs.len() * count);
    for &snr_db in snrs {
        for &scheme in schemes {
            for _ in 0..count {
                let seed = base_seed.wrapping_add(out.len() as u64);
                out.push(RealizationSpec {
                    scheme,
                    snr_db,
                    seed,
                });
            }
        }
    }
    out
}

/// Renders a planned batch in parallel; output order follows `plan`.
pub fn realize_batch(plan: &[RealizationSpec], cfg: &SynthConfig) -> Result<Vec<Waveform>> {
    cfg.validate()?;
    plan.par_iter()
        .map(|r| realize(r.scheme, &cfg.with_seed(r.seed), r.snr_db))
        .collect()
}

const WAVE_MAGIC: &str = "AMCWAV1";

/// Writes one `AMCWAV1` record: a text header line followed by the samples as
/// little-endian `f64`.
pub fn write_waveform<W: Write>(out: &mut W, w: &Waveform) -> Result<()> {
    writeln!(
        out,
        "{WAVE_MAGIC} {} {} {} {} {} {}",
        w.fs,
        w.fc,
        w.len(),
        w.scheme,
        w.snr_db,
        w.seed
    )?;
    let mut buf = Vec::with_capacity(w.len() * 8);
    for s in &w.samples {
        buf.extend_from_slice(&s.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn write_batch<W: Write>(out: &mut W, batch: &[Waveform]) -> Result<()> {
    for w in batch {
        write_waveform(out, w)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads every record of a waveform batch until end of input.
pub fn read_batch<R: BufRead>(input: &mut R) -> Result<Vec<Waveform>> {
    let mut out = Vec::new();
    let mut offset = 0u64;
    loop {
        let mut line = Vec::new();
        let read = input.read_until(b'\n', &mut line)?;
        if read == 0 {
            return Ok(out);
        }
        let header_at = offset;
        offset += read as u64;
        if line.last() != Some(&b'\n') {
            return Err(Error::format(header_at, "truncated header line"));
        }
        let text = std::str::from_utf8(&line[..line.len() - 1])
            .map_err(|_| Error::format(header_at, "header is not UTF-8"))?;
        let fields: Vec<&str> = text.split(' ').collect();
        if fields.len() != 7 || fields[0] != WAVE_MAGIC {
            return Err(Error::format(
                header_at,
                format!("expected `{WAVE_MAGIC} fs fc N scheme snr_db seed`"),
            ));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i]
                .parse::<f64>()
                .map_err(|_| Error::format(header_at, format!("bad number `{}`", fields[i])))
        };
        let fs = num(1)?;
        let fc = num(2)?;
        let n: usize = fields[3]
            .parse()
            .map_err(|_| Error::format(header_at, format!("bad length `{}`", fields[3])))?;
        let scheme: SchemeTag = fields[4]
            .parse()
            .map_err(|_| Error::format(header_at, format!("bad scheme `{}`", fields[4])))?;
        let snr_db = num(5)?;
        let seed: u64 = fields[6]
            .parse()
            .map_err(|_| Error::format(header_at, format!("bad seed `{}`", fields[6])))?;

        let mut raw = vec![0u8; n * 8];
        input
            .read_exact(&mut raw)
            .map_err(|_| Error::format(offset, format!("expected {n} samples")))?;
        offset += raw.len() as u64;
        let samples = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        out.push(Waveform {
            samples,
            fs,
            fc,
            scheme,
            snr_db,
            seed,
        });
    }
}
