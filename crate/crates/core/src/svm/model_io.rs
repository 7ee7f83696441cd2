//! Versioned text encoding of a [`MulticlassModel`].
//!
//! ```text
//! AMCSVM1
//! kernel poly <degree> <offset>
//! c <C>
//! tol <tol>
//! seed <seed>
//! min <v1> ... <v9>
//! max <v1> ... <v9>
//! classes <label> ...
//! pairs <count>
//! pair <label> <label>
//! m <support count>
//! b <bias>
//! <λ> <v1> ... <v9>        (m lines)
//! ```
//!
//! Floats use the shortest representation that parses back to the same bits.

use std::io::{BufRead, Write};

use super::multiclass::{MulticlassModel, Normalization, PairModel};
use super::smo::BinarySvmModel;
use super::{KernelSpec, SvmParams};
use crate::error::{Error, Result};
use crate::scheme::SchemeLabel;

pub const MODEL_MAGIC: &str = "AMCSVM1";

fn join(xs: &[f64]) -> String {
    xs.iter()
        .map(|v| format!("{v:?}"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn write_model<W: Write>(out: &mut W, m: &MulticlassModel) -> Result<()> {
    let p = &m.params;
    writeln!(out, "{MODEL_MAGIC}")?;
    writeln!(out, "kernel poly {} {:?}", p.kernel.degree, p.kernel.offset)?;
    writeln!(out, "c {:?}", p.c)?;
    writeln!(out, "tol {:?}", p.tol)?;
    writeln!(out, "seed {}", p.seed)?;
    writeln!(out, "min {}", join(&m.normalization.min))?;
    writeln!(out, "max {}", join(&m.normalization.max))?;
    let names: Vec<&str> = m.classes.iter().map(|c| c.name()).collect();
    writeln!(out, "classes {}", names.join(" "))?;
    writeln!(out, "pairs {}", m.pairs.len())?;
    for pm in &m.pairs {
        writeln!(out, "pair {} {}", pm.classes.0, pm.classes.1)?;
        writeln!(out, "m {}", pm.model.support_count())?;
        writeln!(out, "b {:?}", pm.model.bias)?;
        for (w, sv) in pm.model.weights.iter().zip(&pm.model.support_vectors) {
            writeln!(out, "{w:?} {}", join(sv))?;
        }
    }
    out.flush()?;
    Ok(())
}

struct Lines<R> {
    inner: R,
    offset: u64,
    at: u64,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<String> {
        let mut s = String::new();
        let n = self.inner.read_line(&mut s)?;
        self.at = self.offset;
        if n == 0 {
            return Err(Error::format(self.offset, "unexpected end of model file"));
        }
        self.offset += n as u64;
        if !s.ends_with('\n') {
            return Err(Error::format(self.at, "truncated line"));
        }
        Ok(s.trim_end_matches(['\n', '\r']).to_string())
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::format(self.at, msg)
    }

    /// Next line, which must start with `key`; returns the remaining tokens.
    fn keyed(&mut self, key: &str) -> Result<Vec<String>> {
        let line = self.next()?;
        let mut toks = line.split_whitespace();
        if toks.next() != Some(key) {
            return Err(self.err(format!("expected `{key}` line, got `{line}`")));
        }
        Ok(toks.map(str::to_string).collect())
    }

    fn floats(&self, toks: &[String]) -> Result<Vec<f64>> {
        toks.iter()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| self.err(format!("bad number `{t}`")))
            })
            .collect()
    }

    fn single<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let toks = self.keyed(key)?;
        match toks.as_slice() {
            [v] => v
                .parse()
                .map_err(|_| self.err(format!("bad `{key}` value `{v}`"))),
            _ => Err(self.err(format!("`{key}` takes one value"))),
        }
    }

    fn label(&self, t: &str) -> Result<SchemeLabel> {
        t.parse()
            .map_err(|_| self.err(format!("unknown label `{t}`")))
    }
}

pub fn read_model<R: BufRead>(input: R) -> Result<MulticlassModel> {
    let mut lines = Lines {
        inner: input,
        offset: 0,
        at: 0,
    };
    let magic = lines.next()?;
    if magic.trim() != MODEL_MAGIC {
        return Err(lines.err(format!("unsupported model version `{}`", magic.trim())));
    }
    let kernel = lines.keyed("kernel")?;
    let kernel = match kernel.as_slice() {
        [kind, d, c0] if kind == "poly" => KernelSpec {
            degree: d.parse().map_err(|_| lines.err("bad kernel degree"))?,
            offset: c0.parse().map_err(|_| lines.err("bad kernel offset"))?,
        },
        _ => return Err(lines.err("expected `kernel poly <degree> <offset>`")),
    };
    let c: f64 = lines.single("c")?;
    let tol: f64 = lines.single("tol")?;
    let seed: u64 = lines.single("seed")?;
    let toks = lines.keyed("min")?;
    let min = lines.floats(&toks)?;
    let toks = lines.keyed("max")?;
    let max = lines.floats(&toks)?;
    if min.len() != max.len() || min.is_empty() {
        return Err(lines.err("normalization bounds disagree in length"));
    }
    let dim = min.len();
    let classes = lines
        .keyed("classes")?
        .iter()
        .map(|t| lines.label(t))
        .collect::<Result<Vec<_>>>()?;
    let count: usize = lines.single("pairs")?;
    let mut pairs = Vec::with_capacity(count);
    for _ in 0..count {
        let toks = lines.keyed("pair")?;
        let classes_pair = match toks.as_slice() {
            [a, b] => (lines.label(a)?, lines.label(b)?),
            _ => return Err(lines.err("`pair` takes two labels")),
        };
        let m: usize = lines.single("m")?;
        let bias: f64 = lines.single("b")?;
        let mut weights = Vec::with_capacity(m);
        let mut support_vectors = Vec::with_capacity(m);
        for _ in 0..m {
            let line = lines.next()?;
            let toks: Vec<String> = line.split_whitespace().map(str::to_string).collect();
            let vals = lines.floats(&toks)?;
            if vals.len() != dim + 1 {
                return Err(lines.err(format!("support vector line needs {} values", dim + 1)));
            }
            weights.push(vals[0]);
            support_vectors.push(vals[1..].to_vec());
        }
        pairs.push(PairModel {
            classes: classes_pair,
            model: BinarySvmModel {
                support_vectors,
                weights,
                bias,
                kernel,
                c,
            },
        });
    }
    Ok(MulticlassModel {
        classes,
        normalization: Normalization { min, max },
        pairs,
        params: SvmParams {
            c,
            tol,
            kernel,
            seed,
            ..SvmParams::default()
        },
    })
}
