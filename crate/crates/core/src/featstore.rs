//! Embedded store of known-signal feature records.
//!
//! Records are indexed on a grid over [`INDEX_AXES`] of the nine features,
//! with cells `2ε_i` wide along feature `i`. A tolerance box `[x − ε, x + ε]`
//! touches at most two cells per axis, so a lookup probes at most
//! `2^INDEX_AXES` cells and checks every candidate found there against the
//! full nine-dimensional box. The axes are the features that spread the
//! records over the most cells; they are re-chosen each time the store
//! doubles in size.
//!
//! The on-disk format is the same for the indexed store and the flat-file
//! baseline; only the in-memory side-structure differs.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::{Arc, RwLock};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::features::{extract_all, FeatureConfig, FeatureVector, FEATURE_COUNT};
use crate::scheme::SchemeLabel;
use crate::sigsynth::Waveform;
use crate::svm::MulticlassModel;

pub const STORE_MAGIC: &str = "AMCDB1";

/// Slack added to each probe interval so that boundary records whose
/// distance rounds to exactly ε are never skipped by the cell computation.
const PROBE_SLACK: f64 = 1e-9;

/// Number of features the grid is keyed on.
pub const INDEX_AXES: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub id: u64,
    pub label: SchemeLabel,
    pub features: FeatureVector,
    pub snr_db: f64,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    pub source_seed: u64,
}

impl FeatureRecord {
    /// A record stamped with the current time; the id is assigned on insert.
    pub fn new(label: SchemeLabel, features: FeatureVector, snr_db: f64, source_seed: u64) -> Self {
        FeatureRecord {
            id: 0,
            label,
            features,
            snr_db,
            created_at: now_secs(),
            source_seed,
        }
    }
}

fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissAction {
    /// Anything not in the store is flagged as malicious.
    StrictMalicious,
    /// Misses are classified by the SVM model.
    ClassifyFallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchPolicy {
    pub epsilon: [f64; FEATURE_COUNT],
    pub miss_action: MissAction,
    pub insert_on_classify: bool,
}

impl MatchPolicy {
    pub fn new(epsilon: [f64; FEATURE_COUNT]) -> Result<Self> {
        validate_epsilon(&epsilon)?;
        Ok(MatchPolicy {
            epsilon,
            miss_action: MissAction::ClassifyFallback,
            insert_on_classify: false,
        })
    }

    pub fn strict(mut self) -> Self {
        self.miss_action = MissAction::StrictMalicious;
        self
    }

    pub fn inserting(mut self) -> Self {
        self.insert_on_classify = true;
        self
    }
}

fn validate_epsilon(eps: &[f64; FEATURE_COUNT]) -> Result<()> {
    match eps.iter().position(|e| !(*e > 0.0 && e.is_finite())) {
        None => Ok(()),
        Some(i) => Err(Error::Config(format!(
            "tolerance {i} must be positive, got {}",
            eps[i]
        ))),
    }
}

/// `0.25 ×` the pooled within-class standard deviation of each feature.
pub fn default_tolerances(ds: &LabeledDataset) -> Result<[f64; FEATURE_COUNT]> {
    let rows = ds.labeled_rows()?;
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut groups: HashMap<SchemeLabel, Vec<[f64; FEATURE_COUNT]>> = HashMap::new();
    for (f, l) in &rows {
        groups.entry(*l).or_default().push(f.to_array());
    }
    let mut ss = [0.0; FEATURE_COUNT];
    let mut dof = 0usize;
    for g in groups.values() {
        let n = g.len() as f64;
        let mut mean = [0.0; FEATURE_COUNT];
        for r in g {
            for k in 0..FEATURE_COUNT {
                mean[k] += r[k] / n;
            }
        }
        for r in g {
            for k in 0..FEATURE_COUNT {
                ss[k] += (r[k] - mean[k]).powi(2);
            }
        }
        dof += g.len().saturating_sub(1);
    }
    let dof = dof.max(1) as f64;
    Ok(ss.map(|s| (0.25 * (s / dof).sqrt()).max(1e-12)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeKind {
    DbHit,
    Classifier,
    Malicious,
}

impl OutcomeKind {
    pub fn name(self) -> &'static str {
        match self {
            OutcomeKind::DbHit => "DB_HIT",
            OutcomeKind::Classifier => "CLASSIFIER",
            OutcomeKind::Malicious => "MALICIOUS",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationOutcome {
    pub kind: OutcomeKind,
    pub label: Option<SchemeLabel>,
    pub matched_id: Option<u64>,
    /// Id of the record written back to the store, if any.
    pub inserted_id: Option<u64>,
    pub elapsed_ns: u128,
}

/// A match result: record id and its label.
pub type Match = (u64, SchemeLabel);

type CellKey = [i64; INDEX_AXES];

/// Best record inside the tolerance box around `x`: smallest normalized
/// Chebyshev distance, lowest id on ties.
fn better(best: Option<(f64, u64, usize)>, cand: (f64, u64, usize)) -> Option<(f64, u64, usize)> {
    match best {
        Some(b) if b.0 < cand.0 || (b.0 == cand.0 && b.1 <= cand.1) => Some(b),
        _ => Some(cand),
    }
}

fn box_distance(
    x: &[f64; FEATURE_COUNT],
    r: &[f64; FEATURE_COUNT],
    eps: &[f64; FEATURE_COUNT],
) -> Option<f64> {
    let mut d: f64 = 0.0;
    for k in 0..FEATURE_COUNT {
        let diff = (x[k] - r[k]).abs();
        if !(diff <= eps[k]) {
            return None;
        }
        d = d.max(diff / eps[k]);
    }
    Some(d)
}

/// Linear scan over a flat record sequence.
pub fn scan_match(
    records: &[FeatureRecord],
    x: &FeatureVector,
    policy: &MatchPolicy,
) -> Option<Match> {
    if !x.is_finite() {
        return None;
    }
    let q = x.to_array();
    let mut best = None;
    for (i, r) in records.iter().enumerate() {
        if let Some(d) = box_distance(&q, &r.features.to_array(), &policy.epsilon) {
            best = better(best, (d, r.id, i));
        }
    }
    best.map(|(_, _, i)| (records[i].id, records[i].label))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStore {
    /// Tolerances the grid was built for; cell width is twice these.
    epsilon: [f64; FEATURE_COUNT],
    records: Vec<FeatureRecord>,
    by_id: HashMap<u64, usize>,
    axes: [usize; INDEX_AXES],
    cells: HashMap<CellKey, Vec<usize>>,
    next_id: u64,
}

impl FeatureStore {
    pub fn new(epsilon: [f64; FEATURE_COUNT]) -> Result<Self> {
        validate_epsilon(&epsilon)?;
        Ok(FeatureStore {
            epsilon,
            records: Vec::new(),
            by_id: HashMap::new(),
            axes: std::array::from_fn(|k| k),
            cells: HashMap::new(),
            next_id: 1,
        })
    }

    pub fn epsilon(&self) -> &[f64; FEATURE_COUNT] {
        &self.epsilon
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[FeatureRecord] {
        &self.records
    }

    pub fn get(&self, id: u64) -> Option<&FeatureRecord> {
        self.by_id.get(&id).map(|&i| &self.records[i])
    }

    /// Policy that matches with the store's own tolerances.
    pub fn policy(&self) -> MatchPolicy {
        MatchPolicy {
            epsilon: self.epsilon,
            miss_action: MissAction::ClassifyFallback,
            insert_on_classify: false,
        }
    }

    fn width(&self, k: usize) -> f64 {
        2.0 * self.epsilon[k]
    }

    fn cell(&self, axis: usize, v: f64) -> i64 {
        (v / self.width(axis)).floor() as i64
    }

    fn cell_of(&self, v: &[f64; FEATURE_COUNT]) -> CellKey {
        self.axes.map(|a| self.cell(a, v[a]))
    }

    fn index_record(&mut self, pos: usize) {
        let key = self.cell_of(&self.records[pos].features.to_array());
        self.cells.entry(key).or_default().push(pos);
    }

    /// Picks the axes with the most distinct occupied cells (lowest feature
    /// index on ties) and rebuilds the grid.
    fn reindex(&mut self) {
        let mut spread: Vec<(usize, usize)> = (0..FEATURE_COUNT)
            .map(|a| {
                let distinct: HashSet<i64> = self
                    .records
                    .iter()
                    .map(|r| self.cell(a, r.features.to_array()[a]))
                    .collect();
                (distinct.len(), a)
            })
            .collect();
        spread.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
        let mut axes: [usize; INDEX_AXES] = std::array::from_fn(|k| spread[k].1);
        axes.sort_unstable();
        self.axes = axes;
        self.cells.clear();
        for pos in 0..self.records.len() {
            self.index_record(pos);
        }
    }

    /// Features the grid is currently keyed on.
    pub fn index_axes(&self) -> [usize; INDEX_AXES] {
        self.axes
    }

    /// Stores `rec` under a fresh id (the incoming id is ignored).
    pub fn insert(&mut self, mut rec: FeatureRecord) -> Result<u64> {
        rec.features
            .validate()
            .map_err(|e| Error::NonFinite(format!("record rejected: {e}")))?;
        rec.id = self.next_id;
        self.next_id += 1;
        self.by_id.insert(rec.id, self.records.len());
        self.records.push(rec);
        let n = self.records.len();
        if n >= 16 && n.is_power_of_two() {
            self.reindex();
        } else {
            self.index_record(n - 1);
        }
        Ok(self.next_id - 1)
    }

    fn restore(&mut self, rec: FeatureRecord) -> std::result::Result<(), String> {
        if self.by_id.contains_key(&rec.id) {
            return Err(format!("duplicate id {}", rec.id));
        }
        if !rec.features.is_finite() {
            return Err(format!("record {} has non-finite features", rec.id));
        }
        self.next_id = self.next_id.max(rec.id + 1);
        self.by_id.insert(rec.id, self.records.len());
        self.records.push(rec);
        Ok(())
    }

    /// Indexed lookup. Probes only the grid cells the tolerance box overlaps.
    pub fn match_features(&self, x: &FeatureVector, policy: &MatchPolicy) -> Option<Match> {
        if !x.is_finite() || self.records.is_empty() {
            return None;
        }
        let q = x.to_array();
        let mut lo = [0i64; INDEX_AXES];
        let mut hi = [0i64; INDEX_AXES];
        let mut probes: f64 = 1.0;
        for (k, &a) in self.axes.iter().enumerate() {
            let reach = policy.epsilon[a] * (1.0 + PROBE_SLACK);
            lo[k] = self.cell(a, q[a] - reach);
            hi[k] = self.cell(a, q[a] + reach);
            probes *= (hi[k] - lo[k] + 1) as f64;
        }

        let mut best = None;
        let mut consider = |slots: &Vec<usize>| {
            for &i in slots {
                let r = &self.records[i];
                if let Some(d) = box_distance(&q, &r.features.to_array(), &policy.epsilon) {
                    best = better(best, (d, r.id, i));
                }
            }
        };

        if probes > self.cells.len() as f64 {
            // wide query tolerances: walking occupied cells is cheaper than enumerating the box
            for (key, slots) in &self.cells {
                if (0..INDEX_AXES).all(|k| key[k] >= lo[k] && key[k] <= hi[k]) {
                    consider(slots);
                }
            }
        } else {
            let mut key = lo;
            'outer: loop {
                if let Some(slots) = self.cells.get(&key) {
                    consider(slots);
                }
                for k in 0..INDEX_AXES {
                    if key[k] < hi[k] {
                        key[k] += 1;
                        continue 'outer;
                    }
                    key[k] = lo[k];
                }
                break;
            }
        }
        best.map(|(_, _, i)| (self.records[i].id, self.records[i].label))
    }

    /// Linear-scan lookup over the same records, ignoring the index.
    pub fn scan_match(&self, x: &FeatureVector, policy: &MatchPolicy) -> Option<Match> {
        scan_match(&self.records, x, policy)
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<()> {
        out.write_all(encode(&self.epsilon, &self.records).as_bytes())?;
        out.flush()?;
        Ok(())
    }

    pub fn persist(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        {
            let mut f = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
            self.write_to(&mut f)?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read_from<R: Read>(input: &mut R) -> Result<Self> {
        let mut text = String::new();
        input
            .read_to_string(&mut text)
            .map_err(|e| Error::format(0, format!("unreadable store: {e}")))?;
        let (epsilon, records) = decode(&text)?;
        let mut store = FeatureStore::new(epsilon)?;
        let mut offset = text.find('\n').map(|p| p as u64 + 1).unwrap_or(0);
        for (rec, len) in records {
            store.restore(rec).map_err(|m| Error::format(offset, m))?;
            offset += len;
        }
        store.reindex();
        Ok(store)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut f = std::fs::File::open(path)?;
        Self::read_from(&mut f)
    }
}

/// Records loaded from a store file with no index; every lookup is a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatFile {
    pub epsilon: [f64; FEATURE_COUNT],
    pub records: Vec<FeatureRecord>,
}

impl FlatFile {
    pub fn read_from<R: Read>(input: &mut R) -> Result<Self> {
        let mut text = String::new();
        input
            .read_to_string(&mut text)
            .map_err(|e| Error::format(0, format!("unreadable store: {e}")))?;
        let (epsilon, records) = decode(&text)?;
        Ok(FlatFile {
            epsilon,
            records: records.into_iter().map(|(r, _)| r).collect(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(&mut std::fs::File::open(path)?)
    }

    pub fn scan_match(&self, x: &FeatureVector, policy: &MatchPolicy) -> Option<Match> {
        scan_match(&self.records, x, policy)
    }
}

impl From<&FeatureStore> for FlatFile {
    fn from(s: &FeatureStore) -> Self {
        FlatFile {
            epsilon: s.epsilon,
            records: s.records.clone(),
        }
    }
}

const FLOAT_WIDTH: usize = 25;

fn encode(epsilon: &[f64; FEATURE_COUNT], records: &[FeatureRecord]) -> String {
    let mut s = String::with_capacity(64 + records.len() * 300);
    write!(s, "{STORE_MAGIC} {}", records.len()).unwrap();
    for e in epsilon {
        write!(s, " {e:?}").unwrap();
    }
    s.push('\n');
    for r in records {
        write!(s, "{:>20} {:>4}", r.id, r.label.name()).unwrap();
        for v in r.features.to_array() {
            write!(s, " {:>w$}", format!("{v:?}"), w = FLOAT_WIDTH).unwrap();
        }
        writeln!(
            s,
            " {:>w$} {:>20} {:>20}",
            format!("{:?}", r.snr_db),
            r.created_at,
            r.source_seed,
            w = FLOAT_WIDTH
        )
        .unwrap();
    }
    s
}

/// Parses a store file; each record is returned with its encoded byte length.
fn decode(text: &str) -> Result<([f64; FEATURE_COUNT], Vec<(FeatureRecord, u64)>)> {
    let mut lines = text.split_inclusive('\n');
    let header = lines
        .next()
        .ok_or_else(|| Error::format(0, "empty store file"))?;
    if !header.ends_with('\n') {
        return Err(Error::format(0, "truncated header"));
    }
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.first() != Some(&STORE_MAGIC) {
        return Err(Error::format(0, format!("expected `{STORE_MAGIC}` header")));
    }
    if toks.len() != 2 + FEATURE_COUNT {
        return Err(Error::format(
            0,
            "header needs a record count and 9 tolerances",
        ));
    }
    let count: usize = toks[1]
        .parse()
        .map_err(|_| Error::format(0, format!("bad record count `{}`", toks[1])))?;
    let mut epsilon = [0.0; FEATURE_COUNT];
    for k in 0..FEATURE_COUNT {
        epsilon[k] = toks[2 + k]
            .parse()
            .map_err(|_| Error::format(0, format!("bad tolerance `{}`", toks[2 + k])))?;
    }
    validate_epsilon(&epsilon).map_err(|e| Error::format(0, e.to_string()))?;

    let mut offset = header.len() as u64;
    let mut records = Vec::with_capacity(count);
    for line in lines {
        let at = offset;
        offset += line.len() as u64;
        if !line.ends_with('\n') {
            return Err(Error::format(at, "truncated record"));
        }
        if records.len() == count {
            return Err(Error::format(at, "more records than the header declares"));
        }
        records.push((parse_record(line, at)?, line.len() as u64));
    }
    if records.len() != count {
        return Err(Error::format(
            offset,
            format!("header declares {count} records, found {}", records.len()),
        ));
    }
    Ok((epsilon, records))
}

fn parse_record(line: &str, at: u64) -> Result<FeatureRecord> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() != FEATURE_COUNT + 5 {
        return Err(Error::format(
            at,
            format!(
                "record needs {} fields, got {}",
                FEATURE_COUNT + 5,
                toks.len()
            ),
        ));
    }
    let int = |t: &str| -> Result<u64> {
        t.parse()
            .map_err(|_| Error::format(at, format!("bad integer `{t}`")))
    };
    let float = |t: &str| -> Result<f64> {
        t.parse()
            .map_err(|_| Error::format(at, format!("bad number `{t}`")))
    };
    let mut v = [0.0; FEATURE_COUNT];
    for k in 0..FEATURE_COUNT {
        v[k] = float(toks[2 + k])?;
    }
    Ok(FeatureRecord {
        id: int(toks[0])?,
        label: toks[1]
            .parse()
            .map_err(|_| Error::format(at, format!("bad label `{}`", toks[1])))?,
        features: FeatureVector::from_array(v),
        snr_db: float(toks[2 + FEATURE_COUNT])?,
        created_at: int(toks[3 + FEATURE_COUNT])?,
        source_seed: int(toks[4 + FEATURE_COUNT])?,
    })
}

/// Single-writer, multi-reader handle: readers never observe a partially
/// inserted record because inserts hold the write lock.
pub type SharedStore = Arc<RwLock<FeatureStore>>;

/// Match against the store, then fall back to the classifier or flag the
/// signal according to `policy`.
pub fn classify_pipeline(
    store: &mut FeatureStore,
    model: &MulticlassModel,
    w: &Waveform,
    policy: &MatchPolicy,
    cfg: &FeatureConfig,
) -> Result<ClassificationOutcome> {
    let start = Instant::now();
    let features = extract_all(w, cfg)?;
    let found = store.match_features(&features, policy);
    let mut outcome = match (found, policy.miss_action) {
        (Some((id, label)), _) => ClassificationOutcome {
            kind: OutcomeKind::DbHit,
            label: Some(label),
            matched_id: Some(id),
            inserted_id: None,
            elapsed_ns: 0,
        },
        (None, MissAction::StrictMalicious) => ClassificationOutcome {
            kind: OutcomeKind::Malicious,
            label: None,
            matched_id: None,
            inserted_id: None,
            elapsed_ns: 0,
        },
        (None, MissAction::ClassifyFallback) => {
            let label = model.predict(&features)?.label;
            let inserted_id = if policy.insert_on_classify {
                let snr = if w.snr_db.is_finite() {
                    w.snr_db
                } else {
                    f64::INFINITY
                };
                Some(store.insert(FeatureRecord::new(label, features, snr, w.seed))?)
            } else {
                None
            };
            ClassificationOutcome {
                kind: OutcomeKind::Classifier,
                label: Some(label),
                matched_id: None,
                inserted_id,
                elapsed_ns: 0,
            }
        }
    };
    outcome.elapsed_ns = start.elapsed().as_nanos();
    Ok(outcome)
}
