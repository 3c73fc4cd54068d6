//! Command-line surface over the engine and its evaluation kit.
//!
//! Configuration resolves in three layers: built-in defaults, then a flat
//! `key = value` config file (`--config PATH`, falling back to the
//! `FRESHMEM_CONFIG` env var), then individual flag overrides. Exit codes:
//! 0 success, 1 verification failure, 2 usage or config error, 3 data error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use freshmem_core::stream_io::StreamFormat;
use freshmem_core::{
    ConfigError, EngineConfig, MemoryError, StateError, StreamError,
};
use freshmem_harness::HarnessError;

mod commands;

#[derive(Parser, Debug)]
#[command(
    name = "freshmem",
    version,
    about = "Bounded-memory stream summarization: sliding window, frequency-domain gist, episodic thumbnails"
)]
struct Cli {
    #[command(flatten)]
    overrides: ConfigFlags,

    /// Seed for anything randomized (simulation, verification, sweeps).
    #[arg(long, global = true, default_value_t = 7, value_name = "N")]
    seed: u64,

    /// Stream format; sniffed from the file when omitted.
    #[arg(long, global = true, value_enum, value_name = "FMT")]
    format: Option<FormatArg>,

    /// Write the subcommand's primary output here instead of stdout
    /// (`ingest` and `simulate` require it).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Print the fully resolved config before doing anything else.
    #[arg(long, global = true)]
    print_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

/// Flag-level config overrides; each one beats the config file.
#[derive(Args, Debug)]
struct ConfigFlags {
    /// Flat `key = value` config file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Sliding window length (frames).
    #[arg(long, global = true, value_name = "N")]
    window: Option<usize>,
    /// Per-step coefficient decay, in (0, 1).
    #[arg(long, global = true, value_name = "F")]
    gamma: Option<f64>,
    /// Number of frequency bands.
    #[arg(long, global = true, value_name = "K")]
    bands: Option<usize>,
    /// Lowest band frequency (cycles/step).
    #[arg(long, global = true, value_name = "F")]
    freq_min: Option<f64>,
    /// Highest band frequency (cycles/step, at most 0.5).
    #[arg(long, global = true, value_name = "F")]
    freq_max: Option<f64>,
    /// Fraction of tokens kept verbatim per assimilated frame.
    #[arg(long, global = true, value_name = "F")]
    residual_ratio: Option<f64>,
    /// Residual ring capacity (entries).
    #[arg(long, global = true, value_name = "N")]
    mfm_capacity: Option<usize>,
    /// Reconstructed frames per snapshot.
    #[arg(long, global = true, value_name = "N")]
    mfm_slots: Option<usize>,
    /// Episode budget.
    #[arg(long, global = true, value_name = "N")]
    stm_capacity: Option<usize>,
    /// Boundary threshold on consecutive pooled cosine.
    #[arg(long, global = true, value_name = "F")]
    theta_event: Option<f64>,
    /// Merge threshold on adjacent centroid cosine.
    #[arg(long, global = true, value_name = "F")]
    theta_merge: Option<f64>,
    /// Thumbnail sampling density floor.
    #[arg(long, global = true, value_name = "F")]
    rho_min: Option<f64>,
    /// Thumbnail sampling density ceiling.
    #[arg(long, global = true, value_name = "F")]
    rho_max: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Binary,
    Jsonl,
}

impl From<FormatArg> for StreamFormat {
    fn from(f: FormatArg) -> StreamFormat {
        match f {
            FormatArg::Binary => StreamFormat::Binary,
            FormatArg::Jsonl => StreamFormat::Jsonl,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stream a file through an engine and write the final state to --out.
    Ingest { input: PathBuf },
    /// Render the memory snapshot stored in a state file as JSON.
    Snapshot {
        state: PathBuf,
        /// Include token payloads in the output.
        #[arg(long)]
        tokens: bool,
    },
    /// Re-render one assimilated step from a state file.
    Reconstruct {
        state: PathBuf,
        /// Step to reconstruct.
        #[arg(long)]
        tau: u64,
    },
    /// Run a stream through the engine; print boundary log and episode table.
    Segment { input: PathBuf },
    /// Generate a margin-certified planted stream; write it to --out.
    Simulate {
        #[arg(long, default_value_t = 5)]
        episodes: usize,
        #[arg(long, default_value_t = 12)]
        frames_min: usize,
        #[arg(long, default_value_t = 24)]
        frames_max: usize,
        /// Tokens per frame.
        #[arg(long, default_value_t = 4)]
        tokens: usize,
        /// Dimensions per token.
        #[arg(long, default_value_t = 16)]
        dim: usize,
        /// Token noise around episode centroids.
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
    },
    /// Run the deterministic self-check suite; exit 1 on any failure.
    Verify,
    /// Profile per-step cost on a random stream.
    Bench {
        #[arg(long, default_value_t = 20_000)]
        steps: u64,
        /// Tokens per frame.
        #[arg(long, default_value_t = 2)]
        tokens: usize,
        /// Dimensions per token.
        #[arg(long, default_value_t = 8)]
        dim: usize,
    },
    /// Grid one config parameter over planted streams; emit CSV.
    Sweep {
        /// Config field to vary (e.g. theta_event, gamma, window_len).
        #[arg(long)]
        param: String,
        /// Comma list (0.2,0.4) or inclusive range (start:end:step).
        #[arg(long)]
        values: String,
        /// Streams (seeds) per value.
        #[arg(long, default_value_t = 3)]
        runs: u64,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<StreamError> for CliError {
    fn from(e: StreamError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<StateError> for CliError {
    fn from(e: StateError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<MemoryError> for CliError {
    fn from(e: MemoryError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Memory(m) => CliError::Data(m.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

fn resolve_config(flags: &ConfigFlags) -> Result<EngineConfig, CliError> {
    let mut config = EngineConfig::default();
    let file = flags
        .config
        .clone()
        .or_else(|| std::env::var_os("FRESHMEM_CONFIG").map(PathBuf::from));
    if let Some(path) = file {
        let text = std::fs::read_to_string(&path).map_err(|e| {
            CliError::Usage(format!("cannot read config file {}: {e}", path.display()))
        })?;
        freshmem_core::config::ConfigOverlay::parse(&text)?.apply(&mut config);
    }
    if let Some(v) = flags.window {
        config.window_len = v;
    }
    if let Some(v) = flags.gamma {
        config.gamma = v;
    }
    if let Some(v) = flags.bands {
        config.bands = v;
    }
    if let Some(v) = flags.freq_min {
        config.f_min = v;
    }
    if let Some(v) = flags.freq_max {
        config.f_max = v;
    }
    if let Some(v) = flags.residual_ratio {
        config.residual_ratio = v;
    }
    if let Some(v) = flags.mfm_capacity {
        config.mfm_capacity = v;
    }
    if let Some(v) = flags.mfm_slots {
        config.mfm_slots = v;
    }
    if let Some(v) = flags.stm_capacity {
        config.stm_capacity = v;
    }
    if let Some(v) = flags.theta_event {
        config.theta_event = v;
    }
    if let Some(v) = flags.theta_merge {
        config.theta_merge = v;
    }
    if let Some(v) = flags.rho_min {
        config.rho_min = v;
    }
    if let Some(v) = flags.rho_max {
        config.rho_max = v;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let config = resolve_config(&cli.overrides)?;
    if cli.print_config {
        print!("{}", config.to_flat_text());
    }
    let Some(command) = cli.command else {
        if cli.print_config {
            return Ok(ExitCode::SUCCESS);
        }
        return Err(CliError::Usage(
            "a subcommand is required (see --help)".into(),
        ));
    };
    let format = cli.format.map(StreamFormat::from);
    let out = cli.out.as_deref();
    match command {
        Command::Ingest { input } => commands::ingest(&config, &input, format, out)?,
        Command::Snapshot { state, tokens } => commands::snapshot(&state, tokens, out)?,
        Command::Reconstruct { state, tau } => commands::reconstruct(&state, tau, out)?,
        Command::Segment { input } => commands::segment(&config, &input, format, out)?,
        Command::Simulate {
            episodes,
            frames_min,
            frames_max,
            tokens,
            dim,
            sigma,
        } => commands::simulate(
            episodes, frames_min, frames_max, tokens, dim, sigma, cli.seed,
            format.unwrap_or(StreamFormat::Binary), out,
        )?,
        Command::Verify => return commands::verify(cli.seed, out),
        Command::Bench { steps, tokens, dim } => {
            commands::bench(&config, steps, tokens, dim, cli.seed, out)?
        }
        Command::Sweep { param, values, runs } => {
            commands::sweep(&config, &param, &values, runs, cli.seed, out)?
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
