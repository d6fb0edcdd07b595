use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use vexcd::bench::{run_benchmark, write_csv, BenchConfig};
use vexcd::error::{Error, Result};
use vexcd::manifest::{ingest, load_dataset, save_dataset};
use vexcd::persist::{log_to_string, IdMap};
use vexcd::service::{serve, AppState};
use vexcd_core::active_loop::oracle_answers;
use vexcd_core::dataset::{gen_synthetic, SynthConfig};
use vexcd_core::{compute_eer, gradcheck, PatchPairDataset, PreparedData, Session, SessionConfig, Strategy};

const DATASET_ENV: &str = "VEXCD_DATASET";

#[derive(Parser)]
#[command(
    name = "vexcd",
    version,
    about = "Virtual-exemplar active learning for change detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every strategy × seed cell and write an EER table.
    Bench(BenchArgs),
    /// Run one simulated session and print its trace.
    Simulate(SimulateArgs),
    /// Serve labeling sessions over HTTP.
    Serve(ServeArgs),
    /// Write a synthetic imbalanced dataset manifest.
    Synth(SynthArgs),
    /// Tile two co-registered images into an unlabeled dataset manifest.
    Ingest(IngestArgs),
    /// Check every analytic gradient against finite differences.
    Gradcheck(GradcheckArgs),
    /// Equal error rate of a `score,label` CSV file.
    Eer(EerArgs),
}

/// Settings shared by `bench` and `simulate`. Each may also come from the
/// JSON file given with `--config`; flags win over the file.
#[derive(Args, Debug, Default, Clone)]
struct Tunables {
    /// Dataset manifest or directory (default: a generated synthetic set).
    #[arg(long, env = DATASET_ENV)]
    dataset: Option<PathBuf>,
    /// Number of labeling rounds T.
    #[arg(long)]
    iterations: Option<usize>,
    /// Display size B.
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Classifier training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
}

impl Tunables {
    fn or(self, file: Tunables) -> Tunables {
        Tunables {
            dataset: self.dataset.or(file.dataset),
            iterations: self.iterations.or(file.iterations),
            batch: self.batch.or(file.batch),
            alpha: self.alpha.or(file.alpha),
            beta: self.beta.or(file.beta),
            gamma: self.gamma.or(file.gamma),
            epochs: self.epochs.or(file.epochs),
            learning_rate: self.learning_rate.or(file.learning_rate),
        }
    }

    fn session_config(&self) -> SessionConfig {
        let mut c = SessionConfig::default();
        if let Some(v) = self.iterations {
            c.iterations = v;
        }
        if let Some(v) = self.batch {
            c.batch = v;
        }
        if let Some(v) = self.alpha {
            c.optimizer.alpha = v;
        }
        if let Some(v) = self.beta {
            c.optimizer.beta = v;
        }
        if let Some(v) = self.gamma {
            c.optimizer.gamma = v;
        }
        if let Some(v) = self.epochs {
            c.train.epochs = v;
        }
        if let Some(v) = self.learning_rate {
            c.train.learning_rate = v;
        }
        c
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    dataset: Option<PathBuf>,
    iterations: Option<usize>,
    batch: Option<usize>,
    alpha: Option<f64>,
    beta: Option<f64>,
    gamma: Option<f64>,
    epochs: Option<usize>,
    learning_rate: Option<f64>,
    strategies: Option<Vec<Strategy>>,
    seeds: Option<Vec<u64>>,
    strategy: Option<Strategy>,
    seed: Option<u64>,
}

impl ConfigFile {
    fn tunables(&self) -> Tunables {
        Tunables {
            dataset: self.dataset.clone(),
            iterations: self.iterations,
            batch: self.batch,
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
        }
    }
}

fn read_config(path: Option<&Path>) -> Result<ConfigFile> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    tunables: Tunables,
    /// Comma-separated strategy names.
    #[arg(long, value_delimiter = ',')]
    strategies: Option<Vec<Strategy>>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// JSON file with any of the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV output (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-iteration mean/std summary as JSON.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Also compute the fully supervised reference EER.
    #[arg(long)]
    baseline: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    tunables: Tunables,
    #[arg(long)]
    strategy: Option<Strategy>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the session event log (JSON lines) here.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = DATASET_ENV)]
    dataset: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Directory for session event logs; sessions found there are resumed.
    #[arg(long)]
    store: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for the manifest and patches.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    positive_fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    t0: PathBuf,
    #[arg(long)]
    t1: PathBuf,
    #[arg(long, default_value_t = 30)]
    patch_size: usize,
    /// Defaults to the patch size (non-overlapping tiles).
    #[arg(long)]
    stride: Option<usize>,
    /// Image whose nonzero pixels mark tiles to keep.
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    instances: usize,
}

#[derive(Args)]
struct EerArgs {
    /// CSV with `score` and `label` columns.
    input: PathBuf,
}

fn load_or_synthesize(path: Option<&Path>) -> Result<PatchPairDataset> {
    match path {
        Some(p) => Ok(load_dataset(p)?.dataset),
        None => {
            log::info!("no dataset given, generating the default synthetic set");
            Ok(gen_synthetic(&SynthConfig::default())?)
        }
    }
}

fn bench(args: BenchArgs) -> Result<()> {
    let file = read_config(args.config.as_deref())?;
    let tunables = args.tunables.or(file.tunables());
    let dataset = load_or_synthesize(tunables.dataset.as_deref())?;
    let data = Arc::new(PreparedData::from_dataset(&dataset)?);
    let config = BenchConfig {
        strategies: args
            .strategies
            .or(file.strategies)
            .unwrap_or_else(|| Strategy::ALL.to_vec()),
        seeds: args.seeds.or(file.seeds).unwrap_or_else(|| (0..5).collect()),
        session: tunables.session_config(),
        baseline: args.baseline,
    };
    let result = run_benchmark(data, &config)?;
    match &args.out {
        Some(path) => {
            let f = fs::File::create(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            write_csv(&result.records, f)?;
        }
        None => write_csv(&result.records, std::io::stdout().lock())?,
    }
    if let Some(path) = &args.summary {
        let text = serde_json::to_string_pretty(&result.summary)?;
        fs::write(path, text).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
    }
    if let Some(fs_eer) = result.summary.fully_supervised_eer_mean {
        eprintln!("fully supervised EER: {fs_eer:.4}");
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let file = read_config(args.config.as_deref())?;
    let tunables = args.tunables.or(file.tunables());
    let dataset = load_or_synthesize(tunables.dataset.as_deref())?;
    let data = Arc::new(PreparedData::from_dataset(&dataset)?);
    let mut config = tunables.session_config();
    config.strategy = args.strategy.or(file.strategy).unwrap_or(config.strategy);
    let seed = args.seed.or(file.seed).unwrap_or(0);
    config.seed = seed;
    config.train.seed = seed;
    config.optimizer.seed = seed;

    let mut session = Session::init(data.clone(), config)?;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "iteration\tsampling_rate_pct\teer\tlabeled\tpositives");
    for round in 0..session.config().iterations {
        if round > 0 {
            match session.next_display() {
                Ok(_) => {}
                Err(vexcd_core::Error::Exhausted) => break,
                Err(e) => return Err(e.into()),
            }
            if let Some(state) = session.exemplars() {
                if let Some(last) = state.trace.last() {
                    log::info!("exemplar objective {:.6} after {} steps", last.total, state.trace.len());
                }
            }
        }
        let answers = oracle_answers(&session)?;
        let rec = session.submit_labels(&answers)?.clone();
        let positives = session.labeled().values().filter(|&&y| y == 1).count();
        let _ = writeln!(
            out,
            "{}\t{:.4}\t{}\t{}\t{}",
            rec.iteration,
            rec.sampling_rate_pct,
            rec.eer.map(|e| format!("{e:.4}")).unwrap_or_else(|| "-".into()),
            session.labeled().len(),
            positives
        );
    }
    if let Some(path) = &args.log {
        let text = log_to_string(&IdMap::new(&data).to_log(session.events()))?;
        fs::write(path, text).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
    }
    Ok(())
}

fn serve_cmd(args: ServeArgs) -> Result<()> {
    let dataset = load_or_synthesize(args.dataset.as_deref())?;
    let state = AppState::new(dataset, SessionConfig::default(), args.store)?;
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|e| Error::Invalid(format!("bad listen address: {e}")))?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| Error::Io {
        path: "<runtime>".into(),
        source: e,
    })?;
    rt.block_on(serve(state, addr))
}

fn synth(args: SynthArgs) -> Result<()> {
    let mut config = SynthConfig {
        seed: args.seed,
        ..SynthConfig::default()
    };
    if let Some(n) = args.n {
        config.n = n;
    }
    if let Some(d) = args.d {
        config.d = d;
    }
    if let Some(f) = args.positive_fraction {
        config.positive_fraction = f;
    }
    let dataset = gen_synthetic(&config)?;
    let path = save_dataset(&dataset, &args.out)?;
    println!("{}", path.display());
    Ok(())
}

fn ingest_cmd(args: IngestArgs) -> Result<()> {
    let stride = args.stride.unwrap_or(args.patch_size);
    let dataset = ingest(&args.t0, &args.t1, args.patch_size, stride, args.mask.as_deref())?;
    let path = save_dataset(&dataset, &args.out)?;
    println!("{} ({} pairs)", path.display(), dataset.len());
    Ok(())
}

fn gradcheck_cmd(args: GradcheckArgs) -> Result<()> {
    let results = gradcheck::run_all(args.seed, args.instances)?;
    let mut failed = 0;
    for r in &results {
        let status = if r.passed() { "ok" } else { "FAIL" };
        println!("{status}\t{}\t#{}\t{:.3e}", r.name, r.instance, r.relative_error);
        failed += usize::from(!r.passed());
    }
    if failed > 0 {
        return Err(Error::GradientMismatch {
            failed,
            total: results.len(),
        });
    }
    Ok(())
}

fn eer_cmd(args: EerArgs) -> Result<()> {
    #[derive(Deserialize)]
    struct Row {
        score: f64,
        label: u8,
    }
    let file = fs::File::open(&args.input).map_err(|e| Error::Io {
        path: args.input.clone(),
        source: e,
    })?;
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for row in csv::Reader::from_reader(file).deserialize() {
        let row: Row = row?;
        if row.label > 1 {
            return Err(Error::Invalid(format!("label {} is not 0 or 1", row.label)));
        }
        scores.push(row.score);
        labels.push(row.label);
    }
    println!("{}", compute_eer(&scores, &labels)?);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Bench(a) => bench(a),
        Command::Simulate(a) => simulate(a),
        Command::Serve(a) => serve_cmd(a),
        Command::Synth(a) => synth(a),
        Command::Ingest(a) => ingest_cmd(a),
        Command::Gradcheck(a) => gradcheck_cmd(a),
        Command::Eer(a) => eer_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
