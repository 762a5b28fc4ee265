use std::fs::{self, File};
use std::io::BufReader;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use proxauth_client::{run_attempt, AttemptSpec, ProxAuthClient};
use proxauth_core::beacon::{parse_dataset_csv, write_dataset_csv, Dataset};
use proxauth_core::ml::{
    evaluate_document, train_model, ForestParams, ModelDocument, ModelKind, SplitProvenance, TrainConfig, TreeParams,
};
use proxauth_core::sim::{
    generate_dataset_rows, DatasetSize, EnvironmentConfig, PathLossConfig, Scenario, SimulationManifest,
};
use proxauth_service::{serve, ServiceConfig};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "proxauth", version, about = "Wi-Fi co-location second factor")]
struct Cli {
    /// Print reports as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Dt,
    Rf,
}

impl From<KindArg> for ModelKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Dt => ModelKind::DecisionTree,
            KindArg::Rf => ModelKind::RandomForest,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Near,
    Far,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Near => Scenario::Authentic,
            ScenarioArg::Far => Scenario::Unauthorized,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled dataset with the path-loss simulator.
    Simulate {
        /// JSON with optional `env` and `loss` objects.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 4825)]
        rows: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        locations: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a dataset CSV and summarize it.
    Ingest {
        #[arg(long)]
        csv: PathBuf,
    },
    /// Fit a decision tree or random forest.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        model: KindArg,
        /// JSON tree or forest parameters.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        /// Held-out fraction; 0 trains on every row.
        #[arg(long, default_value_t = 0.2)]
        holdout: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a model on a dataset's held-out partition.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Test fraction; defaults to the one recorded at training time, else 0.2.
        #[arg(long)]
        split: Option<f64>,
        /// Split seed; defaults to the one recorded at training time, else 0.
        #[arg(long)]
        seed: Option<u64>,
        /// Score every row instead of a held-out partition.
        #[arg(long, conflicts_with_all = ["split", "seed"])]
        all: bool,
    },
    /// Run the authentication service.
    Serve {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        #[arg(long, env = "PROXAUTH_DATA_DIR")]
        data_dir: Option<PathBuf>,
    },
    /// Play one simulated login against a running service.
    Attempt {
        #[arg(long)]
        server: String,
        #[arg(long)]
        username: String,
        #[arg(long)]
        secret: String,
        #[arg(long, value_enum)]
        scenario: ScenarioArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Simulation sidecar (`*.meta.json`) describing the world.
        #[arg(long)]
        world: PathBuf,
    },
}

#[derive(Default, Deserialize)]
#[serde(default)]
struct SimConfig {
    env: EnvironmentConfig,
    loss: PathLossConfig,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    parse_dataset_csv(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

fn manifest_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

fn emit<T: Serialize>(json: bool, value: &T, text: impl FnOnce() -> String) -> Result<()> {
    if json {
        println!("{}", serde_json::to_string_pretty(value)?);
    } else {
        println!("{}", text());
    }
    Ok(())
}

fn fmt_metric(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.3}"))
}

fn simulate(json: bool, config: Option<PathBuf>, rows: usize, seed: u64, locations: usize, out: PathBuf) -> Result<()> {
    let cfg: SimConfig = match config {
        Some(p) => read_json(&p)?,
        None => SimConfig::default(),
    };
    let dataset = generate_dataset_rows(&cfg.env, &cfg.loss, rows, locations, seed)?;
    let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
    write_dataset_csv(&dataset, file)?;
    let manifest = SimulationManifest::new(&cfg.env, &cfg.loss, locations, seed, DatasetSize::RowsTarget(rows), &dataset);
    let meta = manifest_path(&out);
    fs::write(&meta, serde_json::to_string_pretty(&manifest)?)?;
    let counts = dataset.label_counts();
    emit(json, &manifest, || {
        format!(
            "wrote {} rows ({} authentic, {} unauthorized) to {}\nmanifest: {}",
            dataset.len(),
            counts.authentic,
            counts.unauthorized,
            out.display(),
            meta.display()
        )
    })
}

#[derive(Serialize)]
struct IngestReport {
    rows: usize,
    authentic: usize,
    unauthorized: usize,
    balanced: bool,
    distinct_ssids: usize,
    locations: usize,
}

fn ingest(json: bool, csv: PathBuf) -> Result<()> {
    let ds = load_dataset(&csv)?;
    let counts = ds.label_counts();
    let ssids: std::collections::BTreeSet<_> = ds.samples.iter().map(|s| s.observation.ssid()).collect();
    let locations: std::collections::BTreeSet<_> = ds.samples.iter().map(|s| s.location_tag.as_str()).collect();
    let report = IngestReport {
        rows: ds.len(),
        authentic: counts.authentic,
        unauthorized: counts.unauthorized,
        balanced: ds.is_balanced(),
        distinct_ssids: ssids.len(),
        locations: locations.len(),
    };
    emit(json, &report, || {
        format!(
            "rows: {}\nauthentic: {}\nunauthorized: {}\nbalanced: {}\ndistinct SSIDs: {}\nlocations: {}",
            report.rows, report.authentic, report.unauthorized, report.balanced, report.distinct_ssids, report.locations
        )
    })
}

#[derive(Serialize)]
struct TrainReport {
    model_path: PathBuf,
    seconds: f64,
    #[serde(flatten)]
    summary: proxauth_core::ml::TrainSummary,
}

fn train(json: bool, data: PathBuf, kind: KindArg, params: Option<PathBuf>, seed: u64, holdout: f64, out: PathBuf) -> Result<()> {
    let ds = load_dataset(&data)?;
    let mut cfg = TrainConfig::new(kind.into(), seed);
    cfg.test_fraction = if holdout == 0.0 { None } else { Some(holdout) };
    if let Some(p) = params {
        match cfg.kind {
            ModelKind::DecisionTree => cfg.tree = read_json::<TreeParams>(&p)?,
            ModelKind::RandomForest => cfg.forest = read_json::<ForestParams>(&p)?,
        }
    }
    let started = Instant::now();
    let (doc, summary) = train_model(&ds, &cfg)?;
    let seconds = started.elapsed().as_secs_f64();
    fs::write(&out, doc.to_json()).with_context(|| format!("writing {}", out.display()))?;
    let report = TrainReport {
        model_path: out,
        seconds,
        summary,
    };
    emit(json, &report, || {
        let s = &report.summary;
        format!(
            "trained {} on {} rows ({} held out) in {:.3}s\ntrees: {}  max depth: {}  leaves: {}  ssid vocabulary: {}\nmodel: {}",
            s.kind,
            s.train_rows,
            s.test_rows,
            report.seconds,
            s.trees,
            s.max_depth,
            s.leaves,
            s.vocabulary,
            report.model_path.display()
        )
    })
}

fn evaluate(json: bool, model: PathBuf, data: PathBuf, split: Option<f64>, seed: Option<u64>, all: bool) -> Result<()> {
    let text = fs::read_to_string(&model).with_context(|| format!("reading {}", model.display()))?;
    let doc = ModelDocument::from_json(&text)?;
    let ds = load_dataset(&data)?;
    let provenance = if all {
        None
    } else {
        Some(SplitProvenance {
            test_fraction: split.or(doc.split.map(|s| s.test_fraction)).unwrap_or(0.2),
            seed: seed.or(doc.split.map(|s| s.seed)).unwrap_or(0),
        })
    };
    let report = evaluate_document(&doc, &ds, provenance)?;
    emit(json, &report, || {
        let cm = &report.confusion;
        let mut lines = vec![
            format!(
                "evaluated {} rows ({} authentic, {} unauthorized){}",
                report.rows,
                report.counts.authentic,
                report.counts.unauthorized,
                report
                    .split
                    .map(|s| format!(", held-out fraction {} seed {}", s.test_fraction, s.seed))
                    .unwrap_or_default()
            ),
            "                     predicted authentic  predicted unauthorized".to_string(),
            format!("actual authentic     {:>19}  {:>22}", cm.tp, cm.fn_),
            format!("actual unauthorized  {:>19}  {:>22}", cm.fp, cm.tn),
        ];
        lines.extend(report.metrics.named().iter().map(|(name, v)| format!("{name}: {}", fmt_metric(*v))));
        lines.join("\n")
    })
}

fn attempt(json: bool, server: String, username: String, secret: String, scenario: ScenarioArg, seed: u64, world: PathBuf) -> Result<()> {
    let manifest: SimulationManifest = read_json(&world)?;
    let w = manifest.world()?;
    let spec = AttemptSpec {
        username,
        secret,
        scenario: scenario.into(),
        seed,
    };
    let runtime = tokio::runtime::Runtime::new()?;
    let client = ProxAuthClient::new(server);
    let report = runtime.block_on(run_attempt(&client, &w, &manifest.loss, &spec))?;
    emit(json, &report, || {
        format!(
            "{:?} ({:?}) session {} at {} separation {:.2} m{}",
            report.outcome,
            report.reason,
            report.session_id,
            report.location,
            report.separation_m,
            report
                .authentic_fraction
                .map(|f| format!(" authentic fraction {f:.3}"))
                .unwrap_or_default()
        )
    })
}

fn run(cli: Cli) -> Result<()> {
    let json = cli.json;
    match cli.command {
        Command::Simulate {
            config,
            rows,
            seed,
            locations,
            out,
        } => simulate(json, config, rows, seed, locations, out),
        Command::Ingest { csv } => ingest(json, csv),
        Command::Train {
            data,
            model,
            params,
            seed,
            holdout,
            out,
        } => {
            if !(0.0..1.0).contains(&holdout) {
                bail!("--holdout must be in [0, 1), got {holdout}");
            }
            train(json, data, model, params, seed, holdout, out)
        }
        Command::Evaluate {
            model,
            data,
            split,
            seed,
            all,
        } => {
            if let Some(f) = split {
                if !(f > 0.0 && f < 1.0) {
                    bail!("--split must be strictly between 0 and 1, got {f}");
                }
            }
            evaluate(json, model, data, split, seed, all)
        }
        Command::Serve {
            model,
            policy,
            listen,
            data_dir,
        } => {
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
                )
                .init();
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(serve(ServiceConfig {
                model_path: model,
                policy_path: policy,
                listen,
                data_dir,
            }))?;
            Ok(())
        }
        Command::Attempt {
            server,
            username,
            secret,
            scenario,
            seed,
            world,
        } => attempt(json, server, username, secret, scenario, seed, world),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
