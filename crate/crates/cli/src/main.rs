use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use uti2speech_cli::{stages, Engine, PipelineConfig};

#[derive(Parser)]
#[command(name = "uti2speech", version, about = "Ultrasound tongue imaging to speech pipeline")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "UTI2SPEECH_JOBS")]
    jobs: Option<usize>,

    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,

    /// Config override, e.g. `--set train.learning_rate=0.05`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Partition the corpus into train/val/test.
    Split(Common),
    /// Resize ultrasound frames and compute acoustic targets.
    Extract(Common),
    /// Train the network(s) on the extracted features.
    Train(Common),
    /// Predict features for the evaluation subset.
    Predict(Common),
    /// Turn predictions into audio or vocoder conditioning.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        engine: Option<Engine>,
    },
    /// Mel-cepstral distortion of synthesized against reference audio.
    Eval(Common),
    /// Rank-sum tests on listening-test scores.
    Mushra(Common),
    /// Write a synthetic ultrasound + speech corpus.
    ToyCorpus(Common),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Split(_) => "split",
            Command::Extract(_) => "extract",
            Command::Train(_) => "train",
            Command::Predict(_) => "predict",
            Command::Synth { .. } => "synth",
            Command::Eval(_) => "eval",
            Command::Mushra(_) => "mushra",
            Command::ToyCorpus(_) => "toy-corpus",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Split(c)
            | Command::Extract(c)
            | Command::Train(c)
            | Command::Predict(c)
            | Command::Eval(c)
            | Command::Mushra(c)
            | Command::ToyCorpus(c) => c,
            Command::Synth { common, .. } => common,
        }
    }
}

fn run(cmd: &Command) -> uti2speech_cli::CliResult<()> {
    let c = cmd.common();
    let cfg = PipelineConfig::load(&c.config, &c.overrides)?;
    match cmd {
        Command::Split(_) => stages::split(&cfg),
        Command::Extract(_) => stages::extract(&cfg),
        Command::Train(_) => stages::train_models(&cfg),
        Command::Predict(_) => stages::predict(&cfg),
        Command::Synth { engine, .. } => stages::synth(&cfg, engine.unwrap_or(cfg.synth.engine)),
        Command::Eval(_) => stages::eval(&cfg),
        Command::Mushra(_) => stages::mushra(&cfg),
        Command::ToyCorpus(_) => stages::toy_corpus(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!(
                "error\t{}\tinvalid-config\tcannot start {n} worker threads: {e}",
                cli.command.name()
            );
            return ExitCode::FAILURE;
        }
    }
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line(cli.command.name()));
            ExitCode::FAILURE
        }
    }
}
