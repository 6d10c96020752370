//! Command-line pipeline: synthesize, label, train, evaluate, plan, export.

mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use wildfusion::Error;

#[derive(Parser)]
#[command(name = "wildfusion", version, about = "Multimodal implicit mapping pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SplitChoice {
    Seen,
    Unseen,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Planner {
    Full,
    Semantic,
    Elevation,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scene and record a dataset of frames.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the scene seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Label every frame of a dataset in place.
    Label {
        #[arg(long)]
        data: PathBuf,
    },
    /// Train a field model on the train split.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Evaluate a checkpoint on the test splits.
    Eval {
        #[arg(long)]
        data: PathBuf,
        /// Required unless `--ground-truth` is given.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        split: SplitChoice,
        /// Score the labels against themselves.
        #[arg(long)]
        ground_truth: bool,
    },
    /// Plan a path through the field observed in one frame.
    Plan {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        frame: PathBuf,
        /// Start position `x,y` in meters.
        #[arg(long, value_parser = parse_xy, allow_hyphen_values = true)]
        start: (f64, f64),
        #[arg(long, value_parser = parse_xy, allow_hyphen_values = true)]
        goal: (f64, f64),
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "full")]
        planner: Planner,
    },
    /// Write field grids as a PLY point cloud and PGM heatmaps.
    Export {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        frame: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn parse_xy(s: &str) -> Result<(f64, f64), String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected x,y but got {s:?}"))?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok((parse(x)?, parse(y)?))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 1,
        Error::Numeric(_) => 3,
        _ => 2,
    }
}

fn run(cli: Cli) -> wildfusion::Result<()> {
    match cli.command {
        Command::Synth { out, config, seed } => stages::synth(&out, config.as_deref(), seed),
        Command::Label { data } => stages::label(&data),
        Command::Train { data, out, config, seed, epochs } => stages::train(&data, &out, config.as_deref(), seed, epochs),
        Command::Eval { data, checkpoint, out, split, ground_truth } => {
            stages::eval(&data, checkpoint.as_deref(), &out, split, ground_truth)
        }
        Command::Plan { checkpoint, frame, start, goal, out, config, planner } => {
            stages::plan(&checkpoint, &frame, start, goal, &out, config.as_deref(), planner)
        }
        Command::Export { checkpoint, frame, out, config } => stages::export(&checkpoint, &frame, &out, config.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
