//! Labeled feature tables and their CSV / ARFF encodings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::features::{FeatureVector, FEATURE_COUNT, FEATURE_NAMES};
use crate::scheme::{SchemeLabel, SchemeTag};

pub const CSV_HEADER: &str =
    "gamma_max,sigma_dp,sigma_ap,p,sigma_aa,sigma_af,sigma_a,mu42a,mu42f,label,snr_db,seed";

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: FeatureVector,
    pub label: SchemeTag,
    pub snr_db: Option<f64>,
    pub seed: Option<u64>,
}

impl Sample {
    pub fn new(features: FeatureVector, label: SchemeLabel) -> Self {
        Sample {
            features,
            label: label.into(),
            snr_db: None,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledDataset {
    pub samples: Vec<Sample>,
}

impl LabeledDataset {
    pub fn new(samples: Vec<Sample>) -> Self {
        LabeledDataset { samples }
    }

    pub fn from_rows(rows: impl IntoIterator<Item = (FeatureVector, SchemeLabel)>) -> Self {
        LabeledDataset {
            samples: rows.into_iter().map(|(f, l)| Sample::new(f, l)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn push(&mut self, s: Sample) {
        self.samples.push(s);
    }

    /// Rows per known class (unlabeled rows are not counted).
    pub fn class_counts(&self) -> BTreeMap<SchemeLabel, usize> {
        let mut m = BTreeMap::new();
        for s in &self.samples {
            if let Some(l) = s.label.label() {
                *m.entry(l).or_insert(0) += 1;
            }
        }
        m
    }

    /// Feature/label pairs, rejecting unlabeled or non-finite rows.
    pub fn labeled_rows(&self) -> Result<Vec<(FeatureVector, SchemeLabel)>> {
        self.samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s.features
                    .validate()
                    .map_err(|e| Error::NonFinite(format!("row {i}: {e}")))?;
                let l = s
                    .label
                    .label()
                    .ok_or_else(|| Error::UnknownLabel(format!("row {i} is unlabeled")))?;
                Ok((s.features, l))
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for s in &self.samples {
            let mut line = String::new();
            for v in s.features.to_array() {
                write!(line, "{v:?},").unwrap();
            }
            write!(line, "{},", s.label).unwrap();
            if let Some(snr) = s.snr_db {
                write!(line, "{snr:?}").unwrap();
            }
            line.push(',');
            if let Some(seed) = s.seed {
                write!(line, "{seed}").unwrap();
            }
            writeln!(out, "{line}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut samples = Vec::new();
        let mut offset = 0u64;
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let at = offset;
            offset += line.len() as u64 + 1;
            if i == 0 {
                if line.trim() != CSV_HEADER {
                    return Err(Error::format(at, "unexpected CSV header"));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != FEATURE_COUNT + 3 {
                return Err(Error::format(
                    at,
                    format!(
                        "expected {} fields, got {}",
                        FEATURE_COUNT + 3,
                        fields.len()
                    ),
                ));
            }
            let mut v = [0.0; FEATURE_COUNT];
            for (k, slot) in v.iter_mut().enumerate() {
                *slot = parse_f64(fields[k], at)?;
            }
            let label: SchemeTag = fields[FEATURE_COUNT]
                .parse()
                .map_err(|_| Error::format(at, format!("bad label `{}`", fields[FEATURE_COUNT])))?;
            let snr_db = match fields[FEATURE_COUNT + 1].trim() {
                "" => None,
                s => Some(parse_f64(s, at)?),
            };
            let seed = match fields[FEATURE_COUNT + 2].trim() {
                "" => None,
                s => Some(
                    s.parse()
                        .map_err(|_| Error::format(at, format!("bad seed `{s}`")))?,
                ),
            };
            samples.push(Sample {
                features: FeatureVector::from_array(v),
                label,
                snr_db,
                seed,
            });
        }
        if offset == 0 {
            return Err(Error::format(0, "empty CSV"));
        }
        Ok(LabeledDataset { samples })
    }

    /// ARFF with nine numeric attributes and a nominal class over the eleven
    /// labels; unlabeled rows carry the missing-value marker `?`.
    pub fn write_arff<W: Write>(&self, out: &mut W, relation: &str) -> Result<()> {
        writeln!(out, "@relation {relation}")?;
        writeln!(out)?;
        for name in FEATURE_NAMES {
            writeln!(out, "@attribute {name} numeric")?;
        }
        let labels: Vec<&str> = SchemeLabel::ALL.iter().map(|l| l.name()).collect();
        writeln!(out, "@attribute class {{{}}}", labels.join(","))?;
        writeln!(out)?;
        writeln!(out, "@data")?;
        for s in &self.samples {
            let mut line = String::new();
            for v in s.features.to_array() {
                write!(line, "{v:?},").unwrap();
            }
            match s.label {
                SchemeTag::Known(l) => line.push_str(l.name()),
                SchemeTag::Unknown => line.push('?'),
            }
            writeln!(out, "{line}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_arff<R: BufRead>(input: R) -> Result<Self> {
        let mut attributes: Vec<(String, String)> = Vec::new();
        let mut in_data = false;
        let mut columns: Option<([usize; FEATURE_COUNT], usize)> = None;
        let mut samples = Vec::new();
        let mut offset = 0u64;

        for line in input.lines() {
            let raw = line?;
            let at = offset;
            offset += raw.len() as u64 + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('%') {
                continue;
            }
            if !in_data {
                let lower = line.to_ascii_lowercase();
                if lower.starts_with("@relation") {
                    continue;
                } else if lower.starts_with("@attribute") {
                    let rest = line["@attribute".len()..].trim();
                    let (name, ty) = rest
                        .split_once(char::is_whitespace)
                        .ok_or_else(|| Error::format(at, "attribute without type"))?;
                    attributes.push((name.trim_matches('\'').to_string(), ty.trim().to_string()));
                } else if lower.starts_with("@data") {
                    columns = Some(resolve_columns(&attributes, at)?);
                    in_data = true;
                } else {
                    return Err(Error::format(
                        at,
                        format!("unexpected header line `{line}`"),
                    ));
                }
                continue;
            }
            let (feature_cols, class_col) = columns.unwrap();
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != attributes.len() {
                return Err(Error::format(
                    at,
                    format!("expected {} values, got {}", attributes.len(), fields.len()),
                ));
            }
            let mut v = [0.0; FEATURE_COUNT];
            for (k, &c) in feature_cols.iter().enumerate() {
                v[k] = parse_f64(fields[c], at)?;
            }
            let label = match fields[class_col] {
                "?" => SchemeTag::Unknown,
                s => SchemeTag::Known(
                    s.parse()
                        .map_err(|_| Error::format(at, format!("bad class `{s}`")))?,
                ),
            };
            samples.push(Sample {
                features: FeatureVector::from_array(v),
                label,
                snr_db: None,
                seed: None,
            });
        }
        if !in_data {
            return Err(Error::format(offset, "missing @data section"));
        }
        Ok(LabeledDataset { samples })
    }
}

fn resolve_columns(
    attributes: &[(String, String)],
    at: u64,
) -> Result<([usize; FEATURE_COUNT], usize)> {
    let mut cols = [0usize; FEATURE_COUNT];
    for (k, name) in FEATURE_NAMES.iter().enumerate() {
        let i = attributes
            .iter()
            .position(|(n, _)| n == name)
            .ok_or_else(|| Error::format(at, format!("missing attribute `{name}`")))?;
        let ty = attributes[i].1.to_ascii_lowercase();
        if ty != "numeric" && ty != "real" {
            return Err(Error::format(
                at,
                format!("attribute `{name}` must be numeric"),
            ));
        }
        cols[k] = i;
    }
    let class = attributes
        .iter()
        .position(|(n, t)| n.eq_ignore_ascii_case("class") && t.starts_with('{'))
        .ok_or_else(|| Error::format(at, "missing nominal class attribute"))?;
    Ok((cols, class))
}

fn parse_f64(s: &str, at: u64) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::format(at, format!("bad number `{s}`")))
}
