//! `ancl`: simulate, train, infer and evaluate amortized neural clustering of
//! time series from the command line.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
//! failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ancl_core::features::{extract_unlabeled, FeatureDataset};
use ancl_core::network::{affinity_matrix, load_model, save_model, AffinityMatrix, AffinityModel};
use ancl_core::partition::{elbow_wcss, louvain, spectral_cluster, Partition};
use ancl_core::pipeline::{
    experiment_train_seed, ingest_prices, load_collection, partition_with, run_application,
    run_scenario_experiment, save_collection, train_model, write_elbow_csv, AppConfig,
    ExperimentConfig, Manifest, ManifestEntry, Method,
};
use ancl_core::scenario::{generate, ScenarioConfig};
use ancl_core::{item_seed, seeded_rng, stream_seed, Error, ErrorClass, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "ancl", version, about = "Amortized neural clustering of time series")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configuration's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate labeled collections and write them as CSV files.
    Simulate {
        /// Number of collections.
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Scenario (1-4); ignored when --config is given.
        #[arg(long)]
        scenario: Option<u8>,
        /// Series length; ignored when --config is given.
        #[arg(long)]
        len: Option<usize>,
        /// Fixed number of series (scenario 1).
        #[arg(long)]
        n: Option<usize>,
        /// Fixed number of clusters (scenario 1).
        #[arg(long)]
        k: Option<usize>,
    },
    /// Train a network on the configured scenario and save the model file.
    Train {
        /// Model file; defaults to the configuration's model path, then
        /// `<out>/model.ancl`.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Compute the affinity matrix of a feature or collection CSV.
    Infer {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        input: SeriesInput,
    },
    /// Partition an affinity matrix or a feature dataset.
    Cluster {
        #[arg(long, value_parser = parse_method)]
        method: Method,
        /// Number of clusters; the K-means elbow picks one when omitted.
        #[arg(long)]
        k: Option<usize>,
        /// Affinity CSV (spectral or louvain).
        #[arg(long, conflicts_with_all = ["features", "collection"])]
        affinity: Option<PathBuf>,
        /// Model used to compute affinities from features.
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        input: SeriesInput,
        /// K-means restarts.
        #[arg(long, default_value_t = 200)]
        restarts: usize,
    },
    /// Run a full simulation experiment and write the report.
    Evaluate,
    /// Convert a price CSV into log-returns.
    Ingest {
        #[arg(long)]
        prices: PathBuf,
    },
    /// Cluster a price panel with a trained model.
    App {
        #[arg(long)]
        prices: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Fixed number of clusters; skips the elbow.
        #[arg(long)]
        k: Option<usize>,
    },
    /// WCSS curve of K-means partitions for K = 1..=K_max.
    Elbow {
        #[command(flatten)]
        input: SeriesInput,
        #[arg(long, default_value_t = 8)]
        k_max: usize,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
    },
}

#[derive(Args, Debug)]
struct SeriesInput {
    /// Feature CSV (`series,label,<features>`).
    #[arg(long)]
    features: Option<PathBuf>,
    /// Collection CSV (`id,label,x1..xT`); features use the model's layout.
    #[arg(long)]
    collection: Option<PathBuf>,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Config => 2,
                ErrorClass::Data => 3,
                ErrorClass::Numeric => 4,
            })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let common = cli.common;
    match cli.command {
        Command::Simulate {
            count,
            scenario,
            len,
            n,
            k,
        } => simulate(&common, count, scenario, len, n, k),
        Command::Train { model } => train_cmd(&common, model),
        Command::Infer { model, input } => infer(&common, &model, &input),
        Command::Cluster {
            method,
            k,
            affinity,
            model,
            input,
            restarts,
        } => cluster(&common, method, k, affinity, model, &input, restarts),
        Command::Evaluate => evaluate(&common),
        Command::Ingest { prices } => ingest(&common, &prices),
        Command::App { prices, model, k } => app(&common, prices, model, k),
        Command::Elbow {
            input,
            k_max,
            restarts,
        } => elbow(&common, &input, k_max, restarts),
    }
}

fn out_dir(common: &Common, configured: Option<&Path>) -> Result<PathBuf> {
    let dir = common
        .out
        .clone()
        .or_else(|| configured.map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn require_seed(common: &Common, configured: Option<u64>) -> Result<u64> {
    common
        .seed
        .or(configured)
        .ok_or_else(|| Error::Config("a seed is required (--seed or the config's `seed`)".into()))
}

fn experiment_config(common: &Common) -> Result<ExperimentConfig> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config <experiment.json> is required".into()))?;
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(out) = &common.out {
        config.out_dir = Some(out.clone());
    }
    Ok(config)
}

fn simulate(
    common: &Common,
    count: usize,
    scenario: Option<u8>,
    len: Option<usize>,
    n: Option<usize>,
    k: Option<usize>,
) -> Result<()> {
    let (scenario, seed) = match &common.config {
        Some(_) => {
            let c = experiment_config(common)?;
            (c.eval_scenario().clone(), c.seed)
        }
        None => {
            let number = scenario.ok_or_else(|| Error::Config("--scenario or --config is required".into()))?;
            let len = len.ok_or_else(|| Error::Config("--len is required".into()))?;
            let mut s = match number {
                1 => ScenarioConfig::scenario1(
                    n.ok_or_else(|| Error::Config("scenario 1 needs --n".into()))?,
                    k.ok_or_else(|| Error::Config("scenario 1 needs --k".into()))?,
                    len,
                ),
                2 => ScenarioConfig::scenario2(len),
                3 => ScenarioConfig::scenario3(len),
                4 => ScenarioConfig::scenario4(len),
                other => return Err(Error::Config(format!("unknown scenario {other}"))),
            };
            if number != 1 {
                if let Some(n) = n {
                    s = s.with_n_range(n, n);
                }
            }
            (s, require_seed(common, None)?)
        }
    };
    scenario.validate()?;
    let dir = out_dir(common, None)?;
    let base = stream_seed(seed, "simulate");
    let mut entries = Vec::with_capacity(count);
    for i in 0..count {
        let s = item_seed(base, i);
        let collection = generate(&scenario, &mut seeded_rng(s))?;
        let file = format!("collection_{i:04}.csv");
        save_collection(&collection, &dir.join(&file))?;
        entries.push(ManifestEntry {
            file,
            item_seed: s,
            family: collection.family(),
            n: collection.n(),
            k: collection.k(),
        });
    }
    let manifest = Manifest {
        seed,
        scenario,
        collections: entries,
    };
    std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    println!("wrote {count} collections to {}", dir.display());
    Ok(())
}

fn train_cmd(common: &Common, model: Option<PathBuf>) -> Result<()> {
    let config = experiment_config(common)?;
    config.validate()?;
    let dir = out_dir(common, config.out_dir.as_deref())?;
    let path = model
        .or_else(|| config.model_path.clone())
        .unwrap_or_else(|| dir.join("model.ancl"));
    let mut train = config.train.clone();
    train.seed = experiment_train_seed(config.seed);
    let outcome = train_model(&config.train_scenario, &config.features, &train)?;
    let model = AffinityModel::new(outcome.layout, outcome.params)?;
    save_model(&model, &path)?;
    let mut w = csv::Writer::from_path(dir.join("train_loss.csv")).map_err(Error::from)?;
    w.write_record(["step", "loss"]).map_err(Error::from)?;
    for (i, l) in outcome.loss_trace.iter().enumerate() {
        w.write_record([i.to_string(), format!("{l:?}")]).map_err(Error::from)?;
    }
    w.flush()?;
    println!("saved model to {}", path.display());
    Ok(())
}

/// Features from `--features`, or computed from `--collection` with `layout`.
fn load_features(input: &SeriesInput, model: Option<&AffinityModel>) -> Result<FeatureDataset> {
    match (&input.features, &input.collection) {
        (Some(path), None) => FeatureDataset::load_csv(path),
        (None, Some(path)) => {
            let model = model.ok_or_else(|| {
                Error::Config("--collection needs --model to fix the feature layout".into())
            })?;
            let stored = load_collection(path)?;
            let unlabeled = extract_unlabeled(&stored.series, &model.layout)?;
            FeatureDataset::new(model.layout.clone(), unlabeled.vectors().to_vec(), stored.labels)
        }
        _ => Err(Error::Config("exactly one of --features or --collection is required".into())),
    }
}

fn checked_affinity(model: &AffinityModel, features: &FeatureDataset) -> Result<AffinityMatrix> {
    if features.layout() != &model.layout {
        return Err(Error::LayoutMismatch {
            index: 0,
            detail: format!(
                "model expects {:?}, features have {:?}",
                model.layout,
                features.layout()
            ),
        });
    }
    affinity_matrix(&model.params, features)
}

fn infer(common: &Common, model_path: &Path, input: &SeriesInput) -> Result<()> {
    let model = load_model(model_path)?;
    let features = load_features(input, Some(&model))?;
    let affinity = checked_affinity(&model, &features)?;
    let dir = out_dir(common, None)?;
    let path = dir.join("affinity.csv");
    affinity.write_csv(std::fs::File::create(&path)?)?;
    println!("wrote {}x{} affinity matrix to {}", affinity.n(), affinity.n(), path.display());
    Ok(())
}

fn write_partition(dir: &Path, partition: &Partition) -> Result<()> {
    let mut w = csv::Writer::from_path(dir.join("partition.csv")).map_err(Error::from)?;
    w.write_record(["series", "cluster"]).map_err(Error::from)?;
    for (i, l) in partition.labels().iter().enumerate() {
        w.write_record([i.to_string(), l.to_string()]).map_err(Error::from)?;
    }
    w.flush()?;
    Ok(())
}

fn cluster(
    common: &Common,
    method: Method,
    k: Option<usize>,
    affinity: Option<PathBuf>,
    model: Option<PathBuf>,
    input: &SeriesInput,
    restarts: usize,
) -> Result<()> {
    let seed = require_seed(common, None)?;
    let method_seed = stream_seed(seed, &format!("cluster-{method}"));
    let partition = if let Some(path) = affinity {
        if !method.uses_network() {
            return Err(Error::Config(format!("{method} clusters feature vectors, not affinities")));
        }
        let a = AffinityMatrix::load_csv(&path)?;
        let mut rng = seeded_rng(method_seed);
        match method {
            Method::Louvain => louvain(&a, &mut rng)?,
            _ => {
                let k = k.ok_or_else(|| Error::Config("spectral clustering of an affinity needs --k".into()))?;
                spectral_cluster(&a, k, &mut rng)?
            }
        }
    } else {
        let model = model.as_deref().map(load_model).transpose()?;
        if method.uses_network() && model.is_none() {
            return Err(Error::Config(format!("{method} on features needs --model")));
        }
        let features = load_features(input, model.as_ref())?;
        if let Some(m) = &model {
            checked_affinity(m, &features)?;
        }
        let k = match k {
            Some(k) => k,
            None if method.needs_k() => {
                let k_max = 8.min(features.len());
                elbow_wcss(
                    features.vectors(),
                    k_max,
                    restarts,
                    &mut seeded_rng(stream_seed(seed, "cluster-elbow")),
                )?
                .suggested_k
            }
            None => 1,
        };
        partition_with(method, &features, model.as_ref().map(|m| &m.params), k, restarts, method_seed)?
    };
    let dir = out_dir(common, None)?;
    write_partition(&dir, &partition)?;
    println!("{method}: {} clusters over {} series", partition.k(), partition.n());
    Ok(())
}

fn evaluate(common: &Common) -> Result<()> {
    let config = experiment_config(common)?;
    let dir = out_dir(common, config.out_dir.as_deref())?;
    let report = run_scenario_experiment(&config)?;
    report.write(&dir)?;
    for m in &report.methods {
        println!(
            "{:<9} mean ARI {:.4}  median ARI {:.4}",
            m.method.name(),
            m.summary.mean,
            m.summary.median
        );
    }
    println!("report written to {}", dir.join("report.json").display());
    Ok(())
}

fn ingest(common: &Common, prices: &Path) -> Result<()> {
    let returns = ingest_prices(prices)?;
    let dir = out_dir(common, None)?;
    let path = dir.join("returns.csv");
    returns.write_csv(std::fs::File::create(&path)?)?;
    println!(
        "wrote {} returns for {} assets to {}",
        returns.rows(),
        returns.assets().len(),
        path.display()
    );
    Ok(())
}

fn app(common: &Common, prices: Option<PathBuf>, model: Option<PathBuf>, k: Option<usize>) -> Result<()> {
    let mut config = match &common.config {
        Some(path) => AppConfig::load(path)?,
        None => AppConfig::new(
            require_seed(common, None)?,
            prices.clone().ok_or_else(|| Error::Config("--prices or --config is required".into()))?,
            model.clone().ok_or_else(|| Error::Config("--model or --config is required".into()))?,
        ),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(p) = prices {
        config.prices = p;
    }
    if let Some(m) = model {
        config.model_path = m;
    }
    if k.is_some() {
        config.k = k;
    }
    let dir = out_dir(common, config.out_dir.as_deref())?;
    let (outcome, returns) = run_application(&config)?;
    outcome.write(&dir, returns.assets())?;
    if let Some(elbow) = &outcome.report.elbow {
        println!("elbow suggests K = {}", elbow.suggested_k);
    }
    for c in &outcome.report.clusters {
        println!("cluster {} ({} assets): {}", c.cluster + 1, c.assets.len(), c.assets.join(", "));
    }
    Ok(())
}

fn elbow(common: &Common, input: &SeriesInput, k_max: usize, restarts: usize) -> Result<()> {
    let seed = require_seed(common, None)?;
    let features = load_features(input, None)?;
    let result = elbow_wcss(
        features.vectors(),
        k_max,
        restarts,
        &mut seeded_rng(stream_seed(seed, "elbow")),
    )?;
    let dir = out_dir(common, None)?;
    write_elbow_csv(&result, &dir.join("elbow.csv"))?;
    println!("suggested K = {}", result.suggested_k);
    Ok(())
}
