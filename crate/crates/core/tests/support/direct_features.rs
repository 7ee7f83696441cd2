//! Every feature recomputed from its defining formula with a quadratic-time
//! DFT, sharing nothing with the library beyond the synthesized samples.

use std::f64::consts::PI;

use amc_core::FeatureVector;
use num_complex::Complex64;

struct Dft {
    twiddle: Vec<Complex64>,
}

impl Dft {
    fn new(n: usize) -> Self {
        Dft {
            twiddle: (0..n)
                .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64))
                .collect(),
        }
    }

    fn run(&self, x: &[Complex64], inverse: bool) -> Vec<Complex64> {
        let n = x.len();
        assert_eq!(n, self.twiddle.len());
        (0..n)
            .map(|k| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, v) in x.iter().enumerate() {
                    let t = self.twiddle[(k * j) % n];
                    acc += v * if inverse { t.conj() } else { t };
                }
                acc
            })
            .collect()
    }
}

fn real(x: &[f64]) -> Vec<Complex64> {
    x.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

fn analytic(x: &[f64]) -> Vec<Complex64> {
    let mut buf = real(x);
    if buf.len() % 2 == 1 {
        buf.push(Complex64::new(0.0, 0.0));
    }
    let n = buf.len();
    let dft = Dft::new(n);
    let mut spec = dft.run(&buf, false);
    for (k, b) in spec.iter_mut().enumerate() {
        let h = match k {
            0 => 1.0,
            k if k == n / 2 => 1.0,
            k if k < n / 2 => 2.0,
            _ => 0.0,
        };
        *b *= h;
    }
    let mut z = dft.run(&spec, true);
    z.truncate(x.len());
    z.iter().map(|v| v / n as f64).collect()
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.into_iter().collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn std_dev(second: f64, first: f64) -> f64 {
    (second - first * first).max(0.0).sqrt()
}

fn kurt(xs: &[f64]) -> f64 {
    let m2 = mean(xs.iter().map(|x| x * x));
    if m2 < 1e-12 {
        0.0
    } else {
        mean(xs.iter().map(|x| x.powi(4))) / (m2 * m2)
    }
}

pub fn oracle_features(x: &[f64], fs: f64, fc: f64, trim: usize, at: f64) -> FeatureVector {
    let n = x.len();
    let z = analytic(x);
    let keep = trim..n - trim;

    let a: Vec<f64> = z[keep.clone()]
        .iter()
        .map(|c| (c.re * c.re + c.im * c.im).sqrt())
        .collect();
    let ma = mean(a.iter().copied());
    let an: Vec<f64> = a.iter().map(|v| v / ma).collect();
    let acn: Vec<f64> = an.iter().map(|v| v - 1.0).collect();

    let mut phase = Vec::with_capacity(n);
    let mut shift = 0.0;
    for (i, c) in z.iter().enumerate() {
        let p = c.im.atan2(c.re);
        if i > 0 {
            let prev = z[i - 1].im.atan2(z[i - 1].re);
            if p - prev > PI {
                shift -= 2.0 * PI;
            } else if p - prev < -PI {
                shift += 2.0 * PI;
            }
        }
        phase.push(p + shift);
    }
    let nl: Vec<f64> = keep
        .clone()
        .map(|i| {
            let mut v = phase[i] - 2.0 * PI * fc * i as f64 / fs;
            while v <= -PI / 2.0 {
                v += 2.0 * PI;
            }
            while v > 3.0 * PI / 2.0 {
                v -= 2.0 * PI;
            }
            v
        })
        .collect();
    let nl_mean = mean(nl.iter().copied());
    let nl: Vec<f64> = nl.iter().map(|v| v - nl_mean).collect();

    let f: Vec<f64> = keep
        .clone()
        .map(|i| (phase[i + 1] - phase[i - 1]) * fs / (4.0 * PI))
        .collect();
    let f_mean = mean(f.iter().copied());
    let fnorm: Vec<f64> = f.iter().map(|v| (v - f_mean) / fs).collect();

    let sel = |xs: &[f64]| -> Vec<f64> {
        xs.iter()
            .zip(&an)
            .filter(|(_, &m)| m > at)
            .map(|(&v, _)| v)
            .collect()
    };
    let (nl_m, fn_m, acn_m) = (sel(&nl), sel(&fnorm), sel(&acn));

    let acn_spec = Dft::new(acn.len()).run(&real(&acn), false);
    let gamma_max = acn_spec.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max) / acn.len() as f64;

    let spec = Dft::new(n).run(&real(x), false);
    let fcn = (fc * n as f64 / fs - 1.0).round() as usize;
    let pl: f64 = (1..=fcn).map(|k| spec[k].norm_sqr()).sum();
    let pu: f64 = (fcn + 2..=2 * fcn + 1).map(|k| spec[k].norm_sqr()).sum();

    FeatureVector {
        gamma_max,
        sigma_dp: std_dev(mean(nl_m.iter().map(|v| v * v)), mean(nl_m.iter().copied())),
        sigma_ap: std_dev(
            mean(nl_m.iter().map(|v| v * v)),
            mean(nl_m.iter().map(|v| v.abs())),
        ),
        p_symmetry: (pl - pu) / (pl + pu),
        sigma_aa: std_dev(
            mean(acn.iter().map(|v| v * v)),
            mean(acn.iter().map(|v| v.abs())),
        ),
        sigma_af: std_dev(
            mean(fn_m.iter().map(|v| v * v)),
            mean(fn_m.iter().map(|v| v.abs())),
        ),
        sigma_a: std_dev(
            mean(acn_m.iter().map(|v| v * v)),
            mean(acn_m.iter().copied()),
        ),
        mu42_a: kurt(&acn),
        mu42_f: kurt(&fnorm),
    }
}
