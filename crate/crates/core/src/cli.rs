//! Command-line front end. The `gesture-label` binary is a thin wrapper
//! around [`run`].
//!
//! Exit codes: 0 success, 2 invalid input or flags, 3 similarity backend
//! failure (or, for `serve`, failure to bind the port). On failure any
//! partially written output is removed.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::labeler::fixed::DEFAULT_MIN_COUNT;
use crate::labeler::{
    baseline::DEFAULT_START_RATE, calibrate_windows, derive_stats, Algorithm, BaselineStats,
    Labeler, SentenceTiming, WindowTable,
};
use crate::metrics::{evaluate, BackendCalls};
use crate::model::{Check1Mode, EngineConfig, ReferenceSet};
use crate::service::{self, ServiceConfig, DEFAULT_SESSION_SIZE};
use crate::similarity::{
    CallStats, JaccardBackend, RemoteBackend, RemoteOptions, Scorer, ScriptedBackend, SimilarityBackend,
};
use crate::tokenize::TOKENIZER_VERSION;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "gesture-label", version, about = "Label sentences with Symbolic and Deictic gestures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Label a corpus with one of the three algorithms.
    Label(LabelArgs),
    /// Pick a window size per gesture for the fixed-window labeler.
    Calibrate(CalibrateArgs),
    /// Compare predicted labels with ground truth.
    Evaluate(EvaluateArgs),
    /// Fit baseline statistics from ground-truth labels.
    Stats(StatsArgs),
    /// Serve the annotation API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct EngineArgs {
    /// JSON file with engine settings; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub th0: Option<f64>,
    #[arg(long)]
    pub th1: Option<f64>,
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long = "wmax", alias = "w-max")]
    pub w_max: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = parse_check1)]
    pub check1_mode: Option<Check1Mode>,
    /// Disable batch prefetching of scores in the moving-window labeler.
    #[arg(long)]
    pub no_prefetch: bool,
}

#[derive(Debug, Args)]
pub struct BackendArgs {
    /// jaccard | scripted:FILE | remote:URL
    #[arg(long, default_value = "jaccard")]
    pub backend: String,
    /// Pairs per request for the remote backend.
    #[arg(long, default_value_t = 256)]
    pub batch_size: usize,
    /// Retries per request for the remote backend.
    #[arg(long, default_value_t = 3)]
    pub retries: u32,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    #[arg(long, value_enum)]
    pub algo: Algorithm,
    #[arg(long)]
    pub refs: Option<PathBuf>,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Window table from `calibrate` (fixed algorithm).
    #[arg(long)]
    pub windows: Option<PathBuf>,
    /// Baseline statistics from `stats` (baseline algorithm).
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Use uniform gestures and N(3, 1) windows instead of `--stats`.
    #[arg(long)]
    pub fallback_stats: bool,
    #[arg(long, default_value_t = DEFAULT_START_RATE)]
    pub start_rate: f64,
    /// Override a gesture's window: GESTURE=WIN.
    #[arg(long = "force-window", value_parser = parse_force)]
    pub force_window: Vec<(String, usize)>,
    /// Keep one randomly chosen reference sentence per gesture.
    #[arg(long)]
    pub single_reference: bool,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub refs: Option<PathBuf>,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MIN_COUNT)]
    pub min_count: usize,
    #[arg(long = "force-window", value_parser = parse_force)]
    pub force_window: Vec<(String, usize)>,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Gesture inventory; defaults to the bundled twelve gestures.
    #[arg(long)]
    pub refs: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub iou_min: f64,
    #[arg(long, default_value_t = 0.5)]
    pub score_min: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a CSV table with percentages.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long)]
    pub refs: Option<PathBuf>,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub gt_out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SESSION_SIZE)]
    pub session_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "wmax", alias = "w-max", default_value_t = 10)]
    pub w_max: usize,
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
}

fn parse_check1(s: &str) -> std::result::Result<Check1Mode, String> {
    match s {
        "drop" => Ok(Check1Mode::Drop),
        "rise" => Ok(Check1Mode::Rise),
        _ => Err(format!("expected drop or rise, got {s:?}")),
    }
}

fn parse_force(s: &str) -> std::result::Result<(String, usize), String> {
    let (g, w) = s
        .split_once('=')
        .ok_or_else(|| format!("expected GESTURE=WIN, got {s:?}"))?;
    let w: usize = w.parse().map_err(|_| format!("bad window size in {s:?}"))?;
    if g.is_empty() || w == 0 {
        return Err(format!("expected GESTURE=WIN with WIN >= 1, got {s:?}"));
    }
    Ok((g.to_owned(), w))
}

/// Provenance written next to every labels file as `<out>.manifest.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub algorithm: Algorithm,
    pub config: EngineConfig,
    pub config_hash: String,
    pub tokenizer: String,
    pub backend: String,
    pub refs_author: String,
    pub sentences: usize,
    pub labels: usize,
    pub backend_calls: CallStats,
    pub timings: Vec<SentenceTiming>,
}

pub fn manifest_path(labels: &Path) -> PathBuf {
    let mut name = labels.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    labels.with_file_name(name)
}

#[derive(Deserialize)]
struct TokenizerTag {
    tokenizer: String,
}

impl EngineArgs {
    fn resolve(&self) -> Result<EngineConfig> {
        let mut cfg: EngineConfig = match &self.config {
            Some(p) => io::read_json(p)?,
            None => EngineConfig::default(),
        };
        if let Some(v) = self.th0 {
            cfg.th0 = v;
        }
        if let Some(v) = self.th1 {
            cfg.th1 = v;
        }
        if let Some(v) = self.p {
            cfg.p = v;
        }
        if let Some(v) = self.w_max {
            cfg.w_max = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.check1_mode {
            cfg.check1_mode = v;
        }
        if self.no_prefetch {
            cfg.prefetch = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl BackendArgs {
    pub fn build(&self) -> Result<Arc<dyn SimilarityBackend>> {
        let spec = self.backend.as_str();
        if spec == "jaccard" {
            return Ok(Arc::new(JaccardBackend));
        }
        if let Some(path) = spec.strip_prefix("scripted:") {
            return Ok(Arc::new(ScriptedBackend::load(path)?));
        }
        if let Some(url) = spec.strip_prefix("remote:") {
            let options = RemoteOptions {
                batch_size: self.batch_size,
                max_retries: self.retries,
                ..Default::default()
            };
            return Ok(Arc::new(RemoteBackend::new(url, options)?));
        }
        Err(Error::invalid(format!(
            "unknown backend {spec:?}; expected jaccard, scripted:FILE or remote:URL"
        )))
    }
}

fn load_refs(path: &Option<PathBuf>) -> Result<ReferenceSet> {
    let refs = match path {
        Some(p) => io::load_reference_set(p)?,
        None => crate::fixture::default_reference_set(),
    };
    for w in refs.warnings() {
        log::warn!("{w}");
    }
    Ok(refs)
}

fn apply_forced(table: &mut WindowTable, refs: &ReferenceSet, forced: &[(String, usize)]) -> Result<()> {
    for (g, w) in forced {
        if !refs.contains(g) {
            return Err(Error::invalid(format!("--force-window names unknown gesture {g:?}")));
        }
        table.set(g, *w);
    }
    Ok(())
}

fn cmd_label(args: &LabelArgs) -> Result<()> {
    let cfg = args.engine.resolve()?;
    let mut refs = load_refs(&args.refs)?;
    if args.single_reference {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
        refs = refs.single_reference(|_, n| rng.random_range(0..n));
    }

    // Validate algorithm inputs before touching the corpus or backend.
    let stats = match args.algo {
        Algorithm::Baseline => Some(match (&args.stats, args.fallback_stats) {
            (Some(p), _) => {
                let s: BaselineStats = io::read_json(p)?;
                s.validate()?;
                s
            }
            (None, true) => BaselineStats::fallback(&refs, args.start_rate),
            (None, false) => {
                return Err(Error::invalid(
                    "--algo baseline requires --stats FILE or --fallback-stats",
                ))
            }
        }),
        _ => None,
    };
    let windows = match args.algo {
        Algorithm::Fixed => {
            let mut table = match &args.windows {
                Some(p) => WindowTable::from_json(io::read_json(p)?)?,
                None if !args.force_window.is_empty() => WindowTable::new(),
                None => {
                    return Err(Error::invalid(
                        "--algo fixed requires a window table (--windows windows.json)",
                    ))
                }
            };
            apply_forced(&mut table, &refs, &args.force_window)?;
            Some(table)
        }
        _ => None,
    };

    let corpus = io::load_corpus(&args.corpus)?;
    let backend = args.backend.build()?;
    let scorer = Scorer::new(backend.as_ref());
    let labeler = match args.algo {
        Algorithm::Baseline => Labeler::Baseline(stats.as_ref().expect("checked above")),
        Algorithm::Fixed => Labeler::Fixed {
            refs: &refs,
            windows: windows.as_ref().expect("checked above"),
            scorer: &scorer,
        },
        Algorithm::Moving => Labeler::Moving {
            refs: &refs,
            scorer: &scorer,
        },
    };
    let run = labeler.label_corpus(&corpus, &cfg)?;

    let manifest = RunManifest {
        algorithm: args.algo,
        config_hash: cfg.hash(),
        config: cfg,
        tokenizer: TOKENIZER_VERSION.to_owned(),
        backend: if args.algo == Algorithm::Baseline {
            "none".to_owned()
        } else {
            backend.identity()
        },
        refs_author: refs.author().to_owned(),
        sentences: corpus.len(),
        labels: run.labels.len(),
        backend_calls: scorer.stats(),
        timings: run.timings,
    };
    io::write_labels(&args.out, &run.labels)?;
    io::write_json(manifest_path(&args.out), &manifest)?;
    Ok(())
}

fn cmd_calibrate(args: &CalibrateArgs) -> Result<()> {
    let cfg = args.engine.resolve()?;
    if args.min_count == 0 {
        return Err(Error::invalid("--min-count must be at least 1"));
    }
    let refs = load_refs(&args.refs)?;
    let corpus = io::load_corpus(&args.corpus)?;
    let backend = args.backend.build()?;
    let scorer = Scorer::new(backend.as_ref());
    let mut table = calibrate_windows(&corpus, &refs, &cfg, &scorer, args.min_count)?;
    apply_forced(&mut table, &refs, &args.force_window)?;
    let mut json = table.to_json(Some(&cfg.hash()));
    json["tokenizer"] = TOKENIZER_VERSION.into();
    json["min_count"] = args.min_count.into();
    io::write_json(&args.out, &json)
}

fn tokenizer_of(labels: &Path) -> Result<Option<String>> {
    let m = manifest_path(labels);
    if !m.exists() {
        return Ok(None);
    }
    Ok(Some(io::read_json::<TokenizerTag>(&m)?.tokenizer))
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let cfg = EngineConfig {
        iou_valid_min: args.iou_min,
        score_min: args.score_min,
        ..Default::default()
    };
    cfg.validate()?;
    let refs = load_refs(&args.refs)?;
    let corpus = io::load_corpus(&args.corpus)?;
    let pred = io::load_labels(&args.pred)?;
    let gt = io::load_labels(&args.gt)?;

    let tokenizers = [tokenizer_of(&args.pred)?, tokenizer_of(&args.gt)?];
    for t in tokenizers.iter().flatten() {
        if t != TOKENIZER_VERSION {
            return Err(Error::invalid(format!(
                "labels were produced with tokenizer {t:?}, this build uses {TOKENIZER_VERSION:?}"
            )));
        }
    }

    io::validate_labels(&pred, &refs, &corpus)?;
    io::validate_labels(&gt, &refs, &corpus)?;

    let (timings, calls) = match manifest_path(&args.pred) {
        m if m.exists() => {
            let m: RunManifest = io::read_json(&m)?;
            (m.timings, BackendCalls::from(m.backend_calls))
        }
        _ => (Vec::new(), BackendCalls::default()),
    };
    let report = evaluate(&pred, &gt, &refs, &timings, calls, &cfg)?;
    io::write_json(&args.out, &report)?;
    if let Some(csv) = &args.csv {
        io::write_atomic(csv, report.to_csv().as_bytes())?;
    }
    Ok(())
}

fn cmd_stats(args: &StatsArgs) -> Result<()> {
    let corpus = io::load_corpus(&args.corpus)?;
    let gt = io::load_labels(&args.gt)?;
    let stats = derive_stats(&gt, &corpus)?;
    io::write_json(&args.out, &stats)
}

fn cmd_serve(args: &ServeArgs) -> Result<()> {
    if args.w_max == 0 {
        return Err(Error::invalid("--wmax must be at least 1"));
    }
    let addr: std::net::SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|e| Error::invalid(format!("bad listen address: {e}")))?;
    let cfg = ServiceConfig {
        refs: load_refs(&args.refs)?,
        corpus: io::load_corpus(&args.corpus)?,
        gt_out: args.gt_out.clone(),
        session_size: args.session_size,
        seed: args.seed,
        w_max: args.w_max,
        ui_dir: args.ui_dir.clone(),
    };
    let manifest = serde_json::json!({
        "tokenizer": TOKENIZER_VERSION,
        "source": "ground_truth",
        "session_size": args.session_size,
        "seed": args.seed,
    });
    io::write_json(manifest_path(&args.gt_out), &manifest)?;
    service::serve_blocking(cfg, addr)
}

/// Files a command writes, removed again if it fails.
fn outputs(cmd: &Command) -> Vec<PathBuf> {
    match cmd {
        Command::Label(a) => vec![a.out.clone(), manifest_path(&a.out)],
        Command::Calibrate(a) => vec![a.out.clone()],
        Command::Evaluate(a) => std::iter::once(a.out.clone()).chain(a.csv.clone()).collect(),
        Command::Stats(a) => vec![a.out.clone()],
        Command::Serve(_) => Vec::new(),
    }
}

pub fn execute(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Label(a) => cmd_label(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Serve(a) => cmd_serve(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            for p in outputs(&cli.command) {
                let _ = std::fs::remove_file(p);
            }
            if e.is_backend() || matches!(e, Error::Bind { .. }) {
                EXIT_BACKEND
            } else {
                EXIT_INVALID
            }
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}
