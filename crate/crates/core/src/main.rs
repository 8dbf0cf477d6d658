use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use geofuse::config::PipelineConfig;
use geofuse::ingest::{load_stations, parse_timestamp};
use geofuse::pipeline::{self, AtStage, Stage, StageResult};
use geofuse::stgcn::TrainedModel;
use geofuse::synth::{generate, SourceSpec, SynthConfig};
use geofuse::Error;

#[derive(Parser)]
#[command(name = "geofuse", version, about = "RBF station fusion and STGCN forecasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// key = value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration entry (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic stations.csv and observations.csv
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// `diffusion` or `three-source`
        #[arg(long, default_value = "diffusion")]
        preset: String,
        #[arg(long, default_value_t = 2000)]
        hours: usize,
        /// Replace the preset's sources, e.g. `met:8:temp|wind` (repeatable)
        #[arg(long = "source")]
        sources: Vec<String>,
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        gap_prob: Option<f64>,
        #[arg(long, default_value_t = 4)]
        max_gap_len: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Clean and fuse observations into fused.csv
    Fuse {
        #[arg(long)]
        stations: PathBuf,
        #[arg(long)]
        observations: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        shape_c: Option<f64>,
        #[arg(long)]
        ridge: Option<f64>,
        #[arg(long)]
        metric: Option<String>,
        #[arg(long)]
        max_gap: Option<usize>,
        /// Interpolate raw values instead of deviations from the source mean
        #[arg(long)]
        no_centering: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Build the weighted station graph as adjacency.csv
    Graph {
        #[arg(long)]
        stations: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        metric: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Train the forecaster and save a checkpoint
    Train {
        #[arg(long)]
        fused: PathBuf,
        #[arg(long)]
        adjacency: PathBuf,
        #[arg(long)]
        model_out: PathBuf,
        #[arg(long)]
        history_out: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Roll the model forward from a timestamp
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        fused: PathBuf,
        /// Forecast origin; defaults to the last timestamp
        #[arg(long)]
        at: Option<String>,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Test-split metrics for the model and the persistence baseline
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        fused: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Variance and density consistency between raw and fused data
    Report {
        #[arg(long)]
        stations: PathBuf,
        #[arg(long)]
        raw: PathBuf,
        #[arg(long)]
        fused: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Every stage from a configuration file
    RunAll {
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(common: &Common, extra: &[(&str, Option<String>)]) -> StageResult<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(p) => PipelineConfig::from_file(p).at(Stage::Config)?,
        None => PipelineConfig::default(),
    };
    let mut overrides = common.set.clone();
    overrides.extend(
        extra
            .iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| format!("{k}={v}"))),
    );
    if let Some(seed) = common.seed {
        overrides.push(format!("seed={seed}"));
    }
    cfg.apply_overrides(&overrides).at(Stage::Config)?;
    Ok(cfg)
}

fn run(cli: Cli) -> StageResult<()> {
    match cli.command {
        Command::Synth {
            out,
            preset,
            hours,
            sources,
            noise,
            gap_prob,
            max_gap_len,
            common,
        } => {
            let seed = common.seed.unwrap_or(0);
            let mut cfg = match preset.as_str() {
                "diffusion" => SynthConfig::diffusion(seed, hours),
                "three-source" => SynthConfig::three_source_layout(seed, hours),
                other => return Err(Error::Config(format!("unknown preset {other:?}"))).at(Stage::Config),
            };
            if !sources.is_empty() {
                cfg.sources = sources
                    .iter()
                    .map(|s| s.parse::<SourceSpec>())
                    .collect::<geofuse::Result<_>>()
                    .at(Stage::Config)?;
            }
            if let Some(n) = noise {
                cfg.noise = n;
            }
            if let Some(g) = gap_prob {
                cfg.gap_prob = g;
                cfg.max_gap_len = max_gap_len;
            }
            generate(&cfg).at(Stage::Config)?.write(&out).at(Stage::Ingest)?;
        }
        Command::Fuse {
            stations,
            observations,
            out,
            shape_c,
            ridge,
            metric,
            max_gap,
            no_centering,
            common,
        } => {
            let cfg = load_config(
                &common,
                &[
                    ("shape_c", shape_c.map(|v| v.to_string())),
                    ("ridge", ridge.map(|v| v.to_string())),
                    ("metric", metric),
                    ("max_gap_hours", max_gap.map(|v| v.to_string())),
                    ("centering", no_centering.then(|| "false".to_string())),
                ],
            )?;
            let raw = pipeline::load_raw(&stations, &observations).at(Stage::Ingest)?;
            let fused = pipeline::fuse(&raw, &cfg).at(Stage::Fusion)?;
            pipeline::write_fused_csv(&fused, &out).at(Stage::Fusion)?;
        }
        Command::Graph {
            stations,
            out,
            sigma,
            metric,
            common,
        } => {
            let cfg = load_config(
                &common,
                &[("sigma", sigma.map(|v| v.to_string())), ("metric", metric)],
            )?;
            let st = load_stations(&stations).at(Stage::Ingest)?;
            let adj = pipeline::build_graph(&st, cfg.rbf.metric, cfg.sigma).at(Stage::Graph)?;
            let ids: Vec<String> = st.iter().map(|s| s.id.clone()).collect();
            pipeline::write_adjacency_csv(&ids, &adj, &out).at(Stage::Graph)?;
        }
        Command::Train {
            fused,
            adjacency,
            model_out,
            history_out,
            epochs,
            common,
        } => {
            let cfg = load_config(&common, &[("epochs", epochs.map(|v| v.to_string()))])?;
            let fm = pipeline::read_fused_csv(&fused).at(Stage::Ingest)?;
            let (ids, adj) = pipeline::read_adjacency_csv(&adjacency).at(Stage::Graph)?;
            let adj = pipeline::reorder_adjacency(&ids, &adj, &fm.station_order).at(Stage::Graph)?;
            let trained = pipeline::train_model(&fm, &adj, &cfg)?;
            trained.model.save(&model_out).at(Stage::Training)?;
            if let Some(h) = history_out {
                pipeline::write_text(h, &pipeline::history_csv(&trained.report)).at(Stage::Training)?;
            }
        }
        Command::Predict {
            model,
            fused,
            at,
            horizon,
            out,
            common,
        } => {
            let cfg = load_config(&common, &[("horizon_steps", horizon.map(|v| v.to_string()))])?;
            let trained = TrainedModel::load(&model).at(Stage::Training)?;
            let fm = pipeline::read_fused_csv(&fused).at(Stage::Ingest)?;
            let origin = at
                .map(|a| parse_timestamp(&a).map_err(Error::Config))
                .transpose()
                .at(Stage::Config)?;
            let fc = pipeline::forecast(&trained, &fm, origin, cfg.horizon_steps).at(Stage::Evaluation)?;
            pipeline::write_text(out, &fc.to_csv()).at(Stage::Evaluation)?;
        }
        Command::Evaluate {
            model,
            fused,
            out,
            common,
        } => {
            let cfg = load_config(&common, &[])?;
            let trained = TrainedModel::load(&model).at(Stage::Training)?;
            let fm = pipeline::read_fused_csv(&fused).at(Stage::Ingest)?;
            let ds = pipeline::dataset_for_model(&fm, &trained, &cfg).at(Stage::Evaluation)?;
            let rows = pipeline::evaluate(&trained, &ds).at(Stage::Evaluation)?;
            pipeline::write_text(out, &pipeline::metrics_csv(&rows)).at(Stage::Evaluation)?;
        }
        Command::Report {
            stations,
            raw,
            fused,
            out,
            common: _,
        } => {
            let panel = pipeline::load_raw(&stations, &raw).at(Stage::Ingest)?;
            let fm = pipeline::read_fused_csv(&fused).at(Stage::Ingest)?;
            pipeline::report(&panel, &fm, &out).at(Stage::Evaluation)?;
        }
        Command::RunAll { common } => {
            if common.config.is_none() {
                return Err(Error::Config("run-all needs --config".into())).at(Stage::Config);
            }
            let cfg = load_config(&common, &[])?;
            let summary = pipeline::run_all(&cfg)?;
            println!(
                "wrote {} (best epoch {})",
                summary.out_dir.display(),
                summary.best_epoch
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("geofuse: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
