//! `unifi`: simulate, extract, train, infer and evaluate from the shell.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use unifi_core::csi::{read_csi_trace, synthesize_csi, write_csi_trace_file};
use unifi_core::eval::{
    default_subsets, emit_ablation, emit_rate_sweep, emit_report, measure_latency, run_ablation, run_rate_sweep,
    score_model, train_and_score, ExperimentReport, Split,
};
use unifi_core::features::{extract_sequence, read_feature_file, write_feature_file};
use unifi_core::inverse::{self, load_model, save_model, FrameSeq};
use unifi_core::simulator::{generate_dataset, read_dataset, simulate_sequence, write_dataset_file, ClassBalance};
use unifi_core::{Error, ExperimentConfig, RadioConfig, Result};

#[derive(Parser)]
#[command(name = "unifi", version, about = "Multi-task Wi-Fi sensing: simulation, features, inverse model, evaluation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML); built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file or directory.
    #[arg(long)]
    out: PathBuf,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a labelled synthetic dataset.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Simulate one sequence and write its CSI trace.
    SynthesizeCsi {
        #[command(flatten)]
        common: Common,
        /// Sequence index under the master seed.
        #[arg(long, default_value_t = 0)]
        id: u64,
    },
    /// Extract feature frames from a CSI trace.
    Extract {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trace: PathBuf,
    },
    /// Train an inverse model on a dataset file.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dataset: PathBuf,
        /// Named setting 1 to 5 applied over the configured model and training.
        #[arg(long)]
        setting: Option<u8>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Predict events and positions for a feature file.
    Infer {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
    },
    /// Score a model on a dataset, or run simulate-train-score end to end.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, requires = "model")]
        dataset: Option<PathBuf>,
        #[arg(long, requires = "dataset")]
        model: Option<PathBuf>,
    },
    /// Feature-subset ablation on a simulated dataset.
    Ablation {
        #[command(flatten)]
        common: Common,
    },
    /// Tracking error across packet rates.
    RateSweep {
        #[command(flatten)]
        common: Common,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn simulated_split(cfg: &ExperimentConfig) -> Result<Split> {
    let seqs = unifi_core::eval::simulate_frames(cfg, cfg.sim.sample_rate_hz, cfg.experiment.n_sequences, cfg.model.hop_s)?;
    Ok(Split::new(seqs, cfg.experiment.test_fraction, cfg.seed))
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Simulate { common, n } => {
            let cfg = common.load()?;
            let n = n.unwrap_or(cfg.experiment.n_sequences);
            let ds = generate_dataset(&cfg.sim, &cfg.ranges, &cfg.windows, n, cfg.seed)?;
            write_dataset_file(&ds, &common.out)?;
            log::info!("{n} sequences, {}", ClassBalance::of(&ds));
        }
        Cmd::SynthesizeCsi { common, id } => {
            let cfg = common.load()?;
            let seq = simulate_sequence(&cfg.sim, &cfg.ranges, &cfg.windows, cfg.seed, id, None)?;
            let radio = RadioConfig {
                tx_pos: cfg.sim.room.tx_pos,
                rx_pos: cfg.sim.room.rx_pos,
                sample_rate_hz: cfg.sim.sample_rate_hz,
                ..cfg.radio.clone()
            };
            let frames = synthesize_csi(&seq.traj, &radio, &seq.traj.inside)?;
            write_csi_trace_file(&frames, &common.out)?;
            log::info!("{} CSI frames for sequence {id}", frames.len());
        }
        Cmd::Extract { common, trace } => {
            let cfg = common.load()?;
            let frames = read_csi_trace(&trace)?;
            let feats = extract_sequence(&frames, &cfg.windows, &cfg.radio)?;
            write_feature_file(&feats, &common.out)?;
            log::info!("{} feature frames", feats.len());
        }
        Cmd::Train {
            common,
            dataset,
            setting,
            epochs,
        } => {
            let cfg = common.load()?;
            let (mut mcfg, mut tcfg) = (cfg.model.clone(), cfg.train.clone());
            if let Some(s) = setting {
                let (m, t) = inverse::setting(s)?;
                mcfg.state_hidden = m.state_hidden;
                mcfg.traj_hidden = m.traj_hidden;
                tcfg.learning_rate = t.learning_rate;
                tcfg.lambda_pos = t.lambda_pos;
                tcfg.lambda_sta = t.lambda_sta;
            }
            if let Some(e) = epochs {
                tcfg.epochs = e;
            }
            if let Some(s) = common.seed {
                mcfg.seed = s;
            }
            let records = read_dataset(&dataset)?;
            let out = inverse::train(&records, &mcfg, &tcfg)?;
            save_model(&out.model, &common.out)?;
            log::info!("best epoch {} of {}", out.best_epoch, out.log.len());
        }
        Cmd::Infer { common, model, features } => {
            let model = load_model(&model)?;
            let feats = read_feature_file(&features)?;
            let preds = model.infer(&feats);
            let mut w = create(&common.out)?;
            for p in &preds {
                serde_json::to_writer(&mut w, p).expect("prediction serializes");
                w.write_all(b"\n").map_err(|e| Error::io(&common.out, e))?;
            }
            w.flush().map_err(|e| Error::io(&common.out, e))?;
            log::info!("{} predictions", preds.len());
        }
        Cmd::Eval { common, dataset, model } => {
            let cfg = common.load()?;
            let report = match (dataset, model) {
                (Some(d), Some(m)) => {
                    let model = load_model(&m)?;
                    let seqs: Vec<FrameSeq> = read_dataset(&d)?
                        .iter()
                        .map(|r| FrameSeq::from_record(r, model.config.hop_s))
                        .collect();
                    let mut r = ExperimentReport::new("eval", score_model(&model, &seqs)?, &cfg);
                    r.mean_latency_s = Some(measure_latency(&model, &seqs, cfg.experiment.latency_samples)?);
                    r
                }
                _ => {
                    let split = simulated_split(&cfg)?;
                    let (model, mut r) = train_and_score(&cfg, &cfg.model, &split, "eval")?;
                    r.mean_latency_s = Some(measure_latency(&model, &split.test, cfg.experiment.latency_samples)?);
                    std::fs::create_dir_all(&common.out).map_err(|e| Error::io(&common.out, e))?;
                    save_model(&model, &common.out.join("model.bin"))?;
                    r
                }
            };
            emit_report(&report, &common.out)?;
            println!("accuracy {:.4}", report.accuracy);
            println!("median localization error {:?} m", report.median_error);
            println!("{}", report.confusion);
        }
        Cmd::Ablation { common } => {
            let cfg = common.load()?;
            let split = simulated_split(&cfg)?;
            let rows = run_ablation(&cfg, &split, &default_subsets())?;
            emit_ablation(&rows, &common.out)?;
            for row in &rows {
                match &row.report {
                    Ok(r) => println!("{:<16} accuracy {:.4}", row.subset.name, r.accuracy),
                    Err(e) => println!("{:<16} failed: {e}", row.subset.name),
                }
            }
        }
        Cmd::RateSweep { common } => {
            let cfg = common.load()?;
            let rows = run_rate_sweep(&cfg, &cfg.experiment.rates_hz)?;
            emit_rate_sweep(&rows, &common.out)?;
            for r in &rows {
                println!("{:>6} Hz  mean error {:.3} m  accuracy {:.4}", r.rate_hz, r.mean_error, r.accuracy);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
