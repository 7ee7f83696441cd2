//! Subcommands of the `amc` binary.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use amc_core::dataset::Sample;
use amc_core::featstore::{classify_pipeline, default_tolerances};
use amc_core::sigsynth::{plan_batch, read_batch, realize_batch, write_batch};
use amc_core::svm::{read_model, train_multiclass, write_model};
use amc_core::{extract_all, FeatureRecord, FeatureStore, LabeledDataset, OutcomeKind, SchemeTag};
use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::config::{parse_epsilon, parse_schemes, RunConfig};
use crate::experiments::{accuracy_csv, run_accuracy, run_timing, timing_csv};
use crate::manifest::RunManifest;
use crate::ArgError;

#[derive(Debug, Parser)]
#[command(
    name = "amc",
    version,
    about = "Modulation classification with SMO-trained SVMs and a known-signal store"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a batch of noisy waveforms.
    Synth(SynthArgs),
    /// Compute feature vectors for a waveform batch.
    Extract(ExtractArgs),
    /// Train the pairwise SVM model, and optionally seed a known-signal store.
    Train(TrainArgs),
    /// Match waveforms against the store, falling back to the model.
    Classify(ClassifyArgs),
    /// Train/test accuracy and confusion matrices per SNR.
    BenchAccuracy(BenchAccuracyArgs),
    /// Indexed lookup versus linear scan latency per store size.
    BenchTiming(BenchTimingArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// `key = value` config file; explicit flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<RunConfig> {
        Ok(match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        })
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Comma-separated labels, or `all`.
    #[arg(long)]
    pub schemes: Option<String>,
    /// Comma-separated SNRs in dB; `inf` for noiseless.
    #[arg(long, value_delimiter = ',')]
    pub snr: Option<Vec<f64>>,
    /// Realizations per scheme and SNR.
    #[arg(long)]
    pub count: Option<usize>,
    /// Base seed; realization i uses seed + i.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long)]
    pub input: PathBuf,
    /// CSV output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// ARFF output.
    #[arg(long)]
    pub arff: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SvmFlags {
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub degree: Option<u32>,
    #[arg(long)]
    pub offset: Option<f64>,
    #[arg(long)]
    pub svm_seed: Option<u64>,
}

impl SvmFlags {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(c) = self.c {
            cfg.svm.c = c;
        }
        if let Some(t) = self.tol {
            cfg.svm.tol = t;
        }
        if let Some(d) = self.degree {
            cfg.svm.kernel.degree = d;
        }
        if let Some(o) = self.offset {
            cfg.svm.kernel.offset = o;
        }
        if let Some(s) = self.svm_seed {
            cfg.svm.seed = s;
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Feature file, CSV or `.arff`.
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub model_out: PathBuf,
    /// Also write a known-signal store holding every training record.
    #[arg(long)]
    pub store_out: Option<PathBuf>,
    /// Store tolerance: one value for all features or nine values.
    #[arg(long)]
    pub epsilon: Option<String>,
    #[command(flatten)]
    pub svm: SvmFlags,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub store: PathBuf,
    /// Waveform batch to classify.
    #[arg(long)]
    pub input: PathBuf,
    /// Flag anything not in the store as malicious instead of classifying it.
    #[arg(long)]
    pub strict: bool,
    /// Write classifier results back into the store.
    #[arg(long)]
    pub insert: bool,
    /// Match tolerance override; defaults to the store's own.
    #[arg(long)]
    pub epsilon: Option<String>,
}

#[derive(Debug, Args)]
pub struct BenchAccuracyArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long, value_delimiter = ',')]
    pub snr: Option<Vec<f64>>,
    #[arg(long)]
    pub train_count: Option<usize>,
    #[arg(long)]
    pub test_count: Option<usize>,
    #[arg(long)]
    pub schemes: Option<String>,
    #[command(flatten)]
    pub svm: SvmFlags,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchTimingArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Comma-separated known-signal counts.
    #[arg(long, value_delimiter = ',')]
    pub counts: Option<Vec<usize>>,
    #[arg(long)]
    pub queries: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Synth(a) => synth(a, out),
        Command::Extract(a) => extract(a, out),
        Command::Train(a) => train(a, out),
        Command::Classify(a) => classify(a, out),
        Command::BenchAccuracy(a) => bench_accuracy(a, out),
        Command::BenchTiming(a) => bench_timing(a, out),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| {
        format!("cannot create {}", path.display())
    })?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| {
        format!("cannot open {}", path.display())
    })?))
}

fn load_batch(path: &Path) -> Result<Vec<amc_core::Waveform>> {
    read_batch(&mut open(path)?).with_context(|| format!("reading {}", path.display()))
}

fn load_dataset(path: &Path) -> Result<LabeledDataset> {
    let input = open(path)?;
    let arff = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("arff"));
    let ds = if arff {
        LabeledDataset::read_arff(input)
    } else {
        LabeledDataset::read_csv(input)
    };
    ds.with_context(|| format!("reading {}", path.display()))
}

fn synth(a: SynthArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = a.config.load()?;
    if let Some(s) = &a.schemes {
        cfg.schemes = parse_schemes(s)?;
    }
    if let Some(s) = a.snr {
        cfg.snrs = s;
    }
    if let Some(c) = a.count {
        cfg.count = c;
    }
    if let Some(s) = a.seed {
        cfg.synth.rng_seed = s;
    }
    cfg.validate()?;
    let plan = plan_batch(&cfg.schemes, &cfg.snrs, cfg.count, cfg.synth.rng_seed);
    let batch = realize_batch(&plan, &cfg.synth)?;
    let mut f = create(&a.out)?;
    write_batch(&mut f, &batch)?;
    f.flush()?;

    let mut m = RunManifest::new("synth", &cfg);
    m.seeds = plan.iter().map(|r| r.seed).collect();
    m.artifacts.push(a.out.clone());
    let mpath = m.finish(&a.out)?;
    writeln!(
        out,
        "wrote {} waveforms to {} (manifest {})",
        batch.len(),
        a.out.display(),
        mpath.display()
    )?;
    Ok(())
}

fn extract(a: ExtractArgs, out: &mut dyn Write) -> Result<()> {
    if a.out.is_none() && a.arff.is_none() {
        return Err(ArgError("extract needs --out and/or --arff".into()).into());
    }
    let cfg = a.config.load()?;
    let batch = load_batch(&a.input)?;
    let mut ds = LabeledDataset::default();
    for w in &batch {
        match extract_all(w, &cfg.features) {
            Ok(features) => ds.push(Sample {
                features,
                label: w.scheme,
                snr_db: Some(w.snr_db),
                seed: Some(w.seed),
            }),
            Err(e) => eprintln!("warning: skipping waveform with seed {}: {e}", w.seed),
        }
    }

    let mut m = RunManifest::new("extract", &cfg);
    m.seeds = ds.samples.iter().filter_map(|s| s.seed).collect();
    if let Some(p) = &a.out {
        let mut f = create(p)?;
        ds.write_csv(&mut f)?;
        m.artifacts.push(p.clone());
    }
    if let Some(p) = &a.arff {
        let mut f = create(p)?;
        ds.write_arff(&mut f, "amc_features")?;
        m.artifacts.push(p.clone());
    }
    let primary = m.artifacts[0].clone();
    m.finish(&primary)?;
    writeln!(out, "extracted {} of {} waveforms", ds.len(), batch.len())?;
    Ok(())
}

fn train(a: TrainArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = a.config.load()?;
    a.svm.apply(&mut cfg);
    if let Some(e) = &a.epsilon {
        cfg.epsilon = Some(parse_epsilon(e)?);
    }
    cfg.validate()?;
    let ds = load_dataset(&a.features)?;
    let model = train_multiclass(&ds, &cfg.svm)?;
    let mut f = create(&a.model_out)?;
    write_model(&mut f, &model)?;
    f.flush()?;

    writeln!(
        out,
        "trained {} pair models on {} rows",
        model.pairs.len(),
        ds.len()
    )?;
    for p in &model.pairs {
        writeln!(
            out,
            "  {}/{} support={}",
            p.classes.0,
            p.classes.1,
            p.model.support_count()
        )?;
    }
    let mut m = RunManifest::new("train", &cfg);
    m.artifacts.push(a.model_out.clone());

    if let Some(path) = &a.store_out {
        let eps = match cfg.epsilon {
            Some(e) => e,
            None => default_tolerances(&ds)?,
        };
        let mut store = FeatureStore::new(eps)?;
        for s in &ds.samples {
            if let SchemeTag::Known(label) = s.label {
                let mut rec = FeatureRecord::new(
                    label,
                    s.features,
                    s.snr_db.unwrap_or(f64::NAN),
                    s.seed.unwrap_or(0),
                );
                rec.id = 0;
                store.insert(rec)?;
            }
        }
        store.persist(path)?;
        m.artifacts.push(path.clone());
        writeln!(
            out,
            "stored {} known signals in {}",
            store.len(),
            path.display()
        )?;
    }
    m.finish(&a.model_out)?;
    Ok(())
}

fn classify(a: ClassifyArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = a.config.load()?;
    let model =
        read_model(open(&a.model)?).with_context(|| format!("reading {}", a.model.display()))?;
    let mut store =
        FeatureStore::load(&a.store).with_context(|| format!("reading {}", a.store.display()))?;
    let mut policy = store.policy();
    if let Some(e) = &a.epsilon {
        policy.epsilon = parse_epsilon(e)?;
    }
    if a.strict {
        policy = policy.strict();
    }
    if a.insert {
        policy = policy.inserting();
    }
    let batch = load_batch(&a.input)?;
    let (mut hits, mut classified, mut malicious, mut inserted) = (0, 0, 0, 0);
    writeln!(out, "index seed kind label matched_id elapsed_ns")?;
    for (i, w) in batch.iter().enumerate() {
        let o = classify_pipeline(&mut store, &model, w, &policy, &cfg.features)
            .with_context(|| format!("waveform {i} (seed {})", w.seed))?;
        match o.kind {
            OutcomeKind::DbHit => hits += 1,
            OutcomeKind::Classifier => classified += 1,
            OutcomeKind::Malicious => malicious += 1,
        }
        inserted += o.inserted_id.is_some() as usize;
        let label = o.label.map_or("-".to_string(), |l| l.to_string());
        let id = o.matched_id.map_or("-".to_string(), |v| v.to_string());
        writeln!(
            out,
            "{i} {} {} {label} {id} {}",
            w.seed,
            o.kind.name(),
            o.elapsed_ns
        )?;
    }
    if inserted > 0 {
        store.persist(&a.store)?;
    }
    writeln!(
        out,
        "summary: {hits} DB_HIT, {classified} CLASSIFIER, {malicious} MALICIOUS, {inserted} inserted, store size {}",
        store.len()
    )?;
    Ok(())
}

fn bench_accuracy(a: BenchAccuracyArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = a.config.load()?;
    if let Some(s) = a.snr {
        cfg.snrs = s;
    }
    if let Some(n) = a.train_count {
        cfg.train_count = n;
    }
    if let Some(n) = a.test_count {
        cfg.test_count = n;
    }
    if let Some(s) = &a.schemes {
        cfg.schemes = parse_schemes(s)?;
    }
    a.svm.apply(&mut cfg);
    cfg.validate()?;
    std::fs::create_dir_all(&a.out_dir)
        .with_context(|| format!("cannot create {}", a.out_dir.display()))?;

    let mut m = RunManifest::new("bench-accuracy", &cfg);
    let mut runs = Vec::new();
    for &snr in &cfg.snrs {
        let run = run_accuracy(&cfg, snr)?;
        for (seed, why) in &run.skipped {
            eprintln!("warning: skipped realization with seed {seed}: {why}");
        }
        writeln!(
            out,
            "SNR {snr} dB: overall accuracy {:.4} ({} test signals, trained in {:.2?})",
            run.matrix.overall_accuracy(),
            run.matrix.total(),
            run.train_time
        )?;
        write!(out, "{}", run.matrix.render())?;
        for (i, c) in run.matrix.classes.iter().enumerate() {
            let k = run.matrix.class_counts(i);
            writeln!(
                out,
                "  {:>5} accuracy {:.4} detection {:.4}",
                c.name(),
                k.accuracy(),
                k.detection_rate()
            )?;
        }
        let path = a.out_dir.join(format!("confusion_{snr}dB.csv"));
        std::fs::write(&path, run.matrix.to_csv())?;
        m.artifacts.push(path);
        runs.push(run);
    }
    let summary = a.out_dir.join("accuracy.csv");
    std::fs::write(&summary, accuracy_csv(&runs))?;
    m.artifacts.push(summary.clone());
    m.finish(&summary)?;
    Ok(())
}

fn bench_timing(a: BenchTimingArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = a.config.load()?;
    if let Some(c) = a.counts {
        cfg.store_counts = c;
    }
    if let Some(q) = a.queries {
        cfg.queries = q;
    }
    if let Some(e) = a.epsilon {
        cfg.timing_epsilon = e;
    }
    cfg.validate()?;
    if cfg.queries == 0 || cfg.store_counts.is_empty() {
        return Err(ArgError("bench-timing needs at least one count and one query".into()).into());
    }
    let rows = run_timing(
        &cfg.store_counts,
        cfg.queries,
        cfg.timing_epsilon,
        cfg.timing_seed,
    )?;
    writeln!(
        out,
        "{:>12} {:>14} {:>14} {:>14} {:>14} {:>8}",
        "known", "match_mean", "match_median", "scan_mean", "scan_median", "ratio"
    )?;
    for r in &rows {
        writeln!(
            out,
            "{:>12} {:>12.0}ns {:>12.0}ns {:>12.0}ns {:>12.0}ns {:>8.4}",
            r.count,
            r.match_mean_ns,
            r.match_median_ns,
            r.scan_mean_ns,
            r.scan_median_ns,
            r.ratio()
        )?;
    }
    std::fs::write(&a.out, timing_csv(&rows))?;
    let mut m = RunManifest::new("bench-timing", &cfg);
    m.seeds.push(cfg.timing_seed);
    m.artifacts.push(a.out.clone());
    m.finish(&a.out)?;
    Ok(())
}
