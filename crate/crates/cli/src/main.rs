//! `vauth` — match body-conduction and microphone recordings, train the
//! classifier, synthesize corpora, run the evaluation and attack benches,
//! and serve the matching engine over TCP.
//!
//! Exit codes: 0 = match, 1 = no match, 2 = error.

mod cmds;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vauth_core::PipelineConfig;

#[derive(Parser)]
#[command(name = "vauth", version, about = "Voice matching engine")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GlobalArgs {
    /// JSON file with the full pipeline configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Print progress to stderr.
    #[arg(long, global = true)]
    verbose: bool,

    /// Envelope activity threshold (fraction of the loudest frame).
    #[arg(long, global = true)]
    envelope_threshold: Option<f64>,

    /// Maximum relative pitch distance between channels.
    #[arg(long, global = true)]
    pitch_distance_max: Option<f64>,

    /// Per-segment correlation gate.
    #[arg(long, global = true)]
    segment_corr_gate: Option<f64>,

    /// Use the plain threshold rule at this value instead of the classifier.
    #[arg(long, global = true)]
    decision_threshold: Option<f64>,

    /// Lowest admissible fundamental frequency, Hz.
    #[arg(long, global = true)]
    f0_min: Option<f64>,

    /// Highest admissible fundamental frequency, Hz.
    #[arg(long, global = true)]
    f0_max: Option<f64>,
}

impl GlobalArgs {
    fn pipeline_config(&self) -> anyhow::Result<PipelineConfig> {
        let mut cfg: PipelineConfig = match &self.config {
            Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = self.envelope_threshold {
            cfg.preprocess.envelope_threshold_frac = v;
        }
        if let Some(v) = self.pitch_distance_max {
            cfg.rules.pitch_distance_max = v;
        }
        if let Some(v) = self.segment_corr_gate {
            cfg.rules.corr_gate = v;
        }
        if let Some(th) = self.decision_threshold {
            cfg.decision.mode = vauth_core::config::DecisionMode::Threshold { th };
        }
        if let Some(v) = self.f0_min {
            cfg.pitch.f0_min_hz = v;
            cfg.rules.cycle_max_sec = 1.0 / v;
        }
        if let Some(v) = self.f0_max {
            cfg.pitch.f0_max_hz = v;
            cfg.rules.cycle_min_sec = 1.0 / v;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Match a body-channel recording against a microphone recording.
    Match {
        /// Body-channel WAV file.
        acc: PathBuf,
        /// Microphone WAV file.
        mic: PathBuf,
        /// Trained model file.
        #[arg(long)]
        model: PathBuf,
        /// Write the full report JSON here instead of stdout.
        #[arg(long)]
        json_out: Option<PathBuf>,
        /// Write the cleaned microphone signal as WAV.
        #[arg(long)]
        cleaned_out: Option<PathBuf>,
        /// Write per-segment diagnostics as a JSON array.
        #[arg(long)]
        dump_segments: Option<PathBuf>,
    },

    /// Train the classifier on a 44-recording phoneme bank.
    Train {
        /// Directory with a bank manifest (see `synth bank`).
        #[arg(long, conflicts_with = "synth_bank")]
        bank: Option<PathBuf>,
        /// Train on the in-memory synthetic bank with this seed.
        #[arg(long)]
        synth_bank: Option<u64>,
        /// How many times each positive example appears in total.
        #[arg(long, default_value_t = 5)]
        replication: usize,
        /// Output model file.
        #[arg(long)]
        out: PathBuf,
        /// Also export the training set as CSV.
        #[arg(long)]
        csv_out: Option<PathBuf>,
    },

    /// Synthesize corpora and noise fixtures.
    Synth {
        #[command(subcommand)]
        what: cmds::SynthCommand,
    },

    /// Run an evaluation suite and write JSON + CSV tables.
    Bench {
        /// phoneme | command | attack | fpdecay
        #[arg(long)]
        suite: String,
        /// Output directory for the tables.
        #[arg(long)]
        out: PathBuf,
        /// Optional pretrained model (otherwise trained on the fly).
        #[arg(long)]
        model: Option<PathBuf>,
    },

    /// Run a single attack scenario against a trained model.
    Attack {
        /// mangled | replay | impersonation | injection
        #[arg(long)]
        scenario: String,
        /// Trained model file.
        #[arg(long)]
        model: PathBuf,
        /// Output directory for reports.
        #[arg(long)]
        out: PathBuf,
    },

    /// Serve the matching engine over TCP.
    Serve {
        /// host:port to listen on.
        #[arg(long)]
        listen: String,
        /// Trained model file.
        #[arg(long)]
        model: PathBuf,
        /// Session timeout in seconds.
        #[arg(long, default_value_t = 10.0)]
        timeout_sec: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let cfg = cli.global.pipeline_config()?;
    match cli.command {
        Command::Match {
            acc,
            mic,
            model,
            json_out,
            cleaned_out,
            dump_segments,
        } => cmds::cmd_match(&cfg, &acc, &mic, &model, json_out, cleaned_out, dump_segments),
        Command::Train {
            bank,
            synth_bank,
            replication,
            out,
            csv_out,
        } => cmds::cmd_train(
            &cfg,
            bank,
            synth_bank.unwrap_or(cli.global.seed),
            replication,
            &out,
            csv_out,
            cli.global.verbose,
        ),
        Command::Synth { what } => cmds::cmd_synth(what, cli.global.seed),
        Command::Bench { suite, out, model } => {
            cmds::cmd_bench(&cfg, &suite, &out, model, cli.global.seed, cli.global.verbose)
        }
        Command::Attack {
            scenario,
            model,
            out,
        } => cmds::cmd_attack(&cfg, &scenario, &model, &out, cli.global.seed),
        Command::Serve {
            listen,
            model,
            timeout_sec,
        } => cmds::cmd_serve(&cfg, &listen, &model, timeout_sec),
    }
}
