//! Command-line front end. Argument types, config-file expansion and exit
//! codes live here; the command bodies are in `commands`.

mod commands;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::constellation::ShapingProfile;
use crate::error::{Error, Result};
use crate::midist::SearchStrategy;
use crate::shaper::ShaperMode;

pub use output::{write_atomic, RunManifest};

/// Exit code for success.
pub const EXIT_OK: i32 = 0;
/// Exit code for failures outside the classes below.
pub const EXIT_FAILURE: i32 = 1;
/// Exit code for bad arguments or parameters.
pub const EXIT_USAGE: i32 = 2;
/// Exit code for corrupted or inconsistent data.
pub const EXIT_INTEGRITY: i32 = 3;
/// Exit code for numerical failures.
pub const EXIT_NUMERICAL: i32 = 4;

pub fn exit_code(error: &Error) -> i32 {
    match error {
        e if e.is_integrity() => EXIT_INTEGRITY,
        Error::Parameter(_) | Error::Unsupported(_) | Error::IndexOutOfRange { .. } => EXIT_USAGE,
        Error::Numerical(_) => EXIT_NUMERICAL,
        _ => EXIT_FAILURE,
    }
}

#[derive(Parser, Debug, Serialize)]
#[command(name = "sbshape", version, about = "Sign-bit shaping for ASK constellations")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Seed for every random generator used by the command.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,

    /// Directory for output files and the run manifest.
    #[arg(long, global = true, default_value = "sbshape-out")]
    pub out_dir: PathBuf,

    /// Print structured output as JSON (default).
    #[arg(long, global = true)]
    pub json: bool,

    /// Print tables as CSV; takes precedence over --json.
    #[arg(long, global = true)]
    pub csv: bool,

    /// JSON file whose keys mirror the long flags; explicit flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Optimize shaping profiles over an SNR list.
    Optimize(OptimizeArgs),
    /// Distribution matcher checks and tables.
    Dm {
        #[command(subcommand)]
        command: DmCommand,
    },
    /// Block encoding, decoding and switch analysis.
    Shape {
        #[command(subcommand)]
        command: ShapeCommand,
    },
    /// Uncoded AWGN simulation of the shaped chain.
    Simulate(SimulateArgs),
    /// Loss budget of a two-source shaper.
    Budget(BudgetArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Optimize(_) => "optimize",
            Command::Dm { command: DmCommand::Roundtrip(_) } => "dm roundtrip",
            Command::Dm { command: DmCommand::RateLoss(_) } => "dm rate-loss",
            Command::Dm { command: DmCommand::Bench(_) } => "dm bench",
            Command::Shape { command: ShapeCommand::Encode(_) } => "shape encode",
            Command::Shape { command: ShapeCommand::Decode(_) } => "shape decode",
            Command::Shape { command: ShapeCommand::AnalyzeSwitch(_) } => "shape analyze-switch",
            Command::Simulate(_) => "simulate",
            Command::Budget(_) => "budget",
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyArg {
    TensorGrid,
    CoordinateLineSearch,
}

impl From<StrategyArg> for SearchStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::TensorGrid => SearchStrategy::TensorGrid,
            StrategyArg::CoordinateLineSearch => SearchStrategy::CoordinateLineSearch,
        }
    }
}

#[derive(Args, Debug, Serialize)]
#[command(group = clap::ArgGroup::new("operating_point").required(true).args(["snr", "sigma"]))]
pub struct OptimizeArgs {
    #[arg(long)]
    pub m: u32,
    #[arg(long = "P")]
    pub num_distinct: usize,
    /// SNR values in dB, shaped energy over noise variance.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    pub snr: Vec<f64>,
    /// Noise levels against the power of the uniform constellation.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    pub sigma: Vec<f64>,
    #[arg(long, default_value_t = 0.02)]
    pub coarse_step: f64,
    #[arg(long, default_value_t = 0.0025)]
    pub final_step: f64,
    #[arg(long, default_value_t = 2)]
    pub refinements: usize,
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DmCommand {
    /// Check encode/decode and rank/unrank bijectivity.
    Roundtrip(DmRoundtripArgs),
    /// Finite-length rate loss table with dB conversion.
    RateLoss(DmRateLossArgs),
    /// Count binary-search comparisons during unranking.
    Bench(DmBenchArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct DmRoundtripArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, conflicts_with = "p")]
    pub w: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Visit every word; without --w or --p, every weight too.
    #[arg(long)]
    pub exhaustive: bool,
    /// Random info blocks for the sampled check.
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct DmRateLossArgs {
    #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long)]
    pub p: f64,
    /// Bit levels of the reference curve used for the dB conversion.
    #[arg(long, default_value_t = 5)]
    pub m: u32,
    #[arg(long = "P", default_value_t = 2)]
    pub num_distinct: usize,
    /// Operating rate in bpcu at which the slope is taken.
    #[arg(long, default_value_t = 3.0)]
    pub rate: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct DmBenchArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct ProfileArgs {
    /// Profile JSON with keys m, P and probs.
    #[arg(long, conflicts_with_all = ["m", "probs"])]
    pub profile: Option<PathBuf>,
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    pub probs: Vec<f64>,
    /// Optional check on the number of probabilities.
    #[arg(long = "P")]
    pub num_distinct: Option<usize>,
}

impl ProfileArgs {
    pub fn resolve(&self) -> Result<ShapingProfile> {
        let profile = match (&self.profile, self.m) {
            (Some(path), _) => ShapingProfile::from_json(&std::fs::read_to_string(path)?)?,
            (None, Some(m)) if !self.probs.is_empty() => ShapingProfile::new(m, self.probs.clone())?,
            _ => return Err(Error::Parameter("give --profile or both --m and --probs".into())),
        };
        match self.num_distinct {
            Some(p) if p != profile.num_distinct() => Err(Error::Parameter(format!(
                "--P {p} but the profile has {} probabilities",
                profile.num_distinct()
            ))),
            _ => Ok(profile),
        }
    }
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeCommand {
    /// Encode random blocks and write them as JSON block files.
    Encode(ShapeEncodeArgs),
    /// Decode a block file back to info bits.
    Decode(ShapeDecodeArgs),
    /// Overflow excess, effective probabilities and energy loss.
    AnalyzeSwitch(AnalyzeSwitchArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct ShapeEncodeArgs {
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[arg(long, default_value_t = 2048)]
    pub n: usize,
    #[arg(long, default_value = "block-dm")]
    pub mode: ShaperMode,
    #[arg(long, default_value_t = 1)]
    pub blocks: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct ShapeDecodeArgs {
    #[arg(long)]
    pub block: PathBuf,
    /// Info-bit file to compare against.
    #[arg(long)]
    pub expect: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct AnalyzeSwitchArgs {
    #[arg(long)]
    pub p1: f64,
    #[arg(long)]
    pub p2: f64,
    #[arg(long, num_args = 1.., value_delimiter = ',', default_values_t = [256, 512, 1024, 2048, 4096])]
    pub n: Vec<usize>,
    #[arg(long, num_args = 1.., value_delimiter = ',', default_values_t = [3, 5])]
    pub m: Vec<u32>,
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[arg(long, default_value_t = 2048)]
    pub n: usize,
    #[arg(long, default_value = "ideal-sources")]
    pub mode: ShaperMode,
    #[arg(long, default_value_t = 100)]
    pub blocks: usize,
    #[arg(long, conflicts_with = "snr")]
    pub sigma: Option<f64>,
    /// SNR sweep in dB; writes a CSV table.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    pub snr: Vec<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct BudgetArgs {
    #[arg(long, default_value_t = 5)]
    pub m: u32,
    #[arg(long = "P", default_value_t = 2)]
    pub num_distinct: usize,
    #[arg(long)]
    pub p1: f64,
    #[arg(long)]
    pub p2: f64,
    #[arg(long, required_unless_present = "asymptotic")]
    pub n: Option<usize>,
    #[arg(long)]
    pub snr: f64,
    /// Infinite block length: no DM or switch loss.
    #[arg(long, conflicts_with = "n")]
    pub asymptotic: bool,
}

/// Result of one command: what to print and which files were written.
pub struct Outcome {
    pub stdout: String,
    pub outputs: Vec<PathBuf>,
}

/// Runs a parsed command, writes its outputs and the run manifest, and
/// returns the text to print.
pub fn run(cli: &Cli) -> Result<String> {
    let started = std::time::Instant::now();
    std::fs::create_dir_all(&cli.out_dir)?;
    let outcome = commands::dispatch(cli)?;
    let manifest = RunManifest {
        command: cli.command.name().to_string(),
        parameters: serde_json::to_value(cli)?,
        seed: cli.seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: outcome.outputs,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    manifest.write(&cli.out_dir)?;
    Ok(outcome.stdout)
}

fn flag_tokens(key: &str, value: &serde_json::Value, out: &mut Vec<OsString>) -> Result<()> {
    use serde_json::Value;
    let flag = format!("--{}", key.replace('_', "-"));
    match value {
        Value::Bool(true) => out.push(flag.into()),
        Value::Bool(false) | Value::Null => {}
        Value::Array(items) => {
            out.push(flag.into());
            for item in items {
                out.push(scalar(item)?.into());
            }
        }
        other => {
            out.push(flag.into());
            out.push(scalar(other)?.into());
        }
    }
    Ok(())
}

fn scalar(value: &serde_json::Value) -> Result<String> {
    match value {
        serde_json::Value::String(s) => Ok(s.clone()),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        other => Err(Error::Parameter(format!("config value {other} is not a scalar"))),
    }
}

/// Splices a `--config` file into the argument list.
///
/// The file is a JSON object whose keys are long flag names, plus an
/// optional `"command"` (string or list, e.g. `["shape", "analyze-switch"]`)
/// used when the command line names none. Config flags are placed before
/// the explicit ones so that explicit flags override them.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut iter = args.into_iter();
    let program = iter.next().unwrap_or_else(|| "sbshape".into());
    let mut rest = Vec::new();
    let mut config_path = None;
    while let Some(arg) = iter.next() {
        if arg == "--config" {
            config_path = Some(iter.next().ok_or_else(|| Error::Parameter("--config needs a path".into()))?);
        } else if let Some(path) = arg.to_str().and_then(|s| s.strip_prefix("--config=")) {
            config_path = Some(path.into());
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = config_path else {
        let mut all = vec![program];
        all.extend(rest);
        return Ok(all);
    };

    let text = std::fs::read_to_string(PathBuf::from(&path))?;
    let serde_json::Value::Object(map) = serde_json::from_str(&text)? else {
        return Err(Error::Parameter("config file must hold a JSON object".into()));
    };
    let lead = rest.iter().take_while(|a| !a.to_string_lossy().starts_with('-')).count();
    let mut command: Vec<OsString> = rest.drain(..lead).collect();
    let mut flags = Vec::new();
    for (key, value) in &map {
        if key == "command" {
            if command.is_empty() {
                match value {
                    serde_json::Value::Array(items) => {
                        for item in items {
                            command.push(scalar(item)?.into());
                        }
                    }
                    other => command.push(scalar(other)?.into()),
                }
            }
        } else {
            flag_tokens(key, value, &mut flags)?;
        }
    }
    let mut all = vec![program];
    all.extend(command);
    all.extend(flags);
    all.extend(rest);
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    fn parse(args: &[&str]) -> std::result::Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("sbshape").chain(args.iter().copied()))
    }

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn parses_lists() {
        let cli = parse(&["shape", "analyze-switch", "--p1", "0.04", "--p2", "0.24", "--n", "512", "1024"]).unwrap();
        match cli.command {
            Command::Shape { command: ShapeCommand::AnalyzeSwitch(a) } => {
                assert_eq!(a.n, vec![512, 1024]);
                assert_eq!(a.m, vec![3, 5]);
            }
            other => panic!("parsed {other:?}"),
        }
    }

    #[test]
    fn later_flags_override() {
        let cli = parse(&["budget", "--p1", "0.1", "--p1", "0.04", "--p2", "0.24", "--n", "2048", "--snr", "17"]).unwrap();
        match cli.command {
            Command::Budget(b) => assert_eq!(b.p1, 0.04),
            other => panic!("parsed {other:?}"),
        }
        let cli = parse(&["--seed", "4", "budget", "--seed", "5", "--p1", "0.1", "--p2", "0.2", "--asymptotic", "--snr", "3"]).unwrap();
        assert_eq!(cli.seed, 5);
    }

    #[test]
    fn usage_errors() {
        assert!(parse(&["optimize", "--m", "5", "--P", "2"]).is_err());
        assert!(parse(&["budget", "--p1", "0.1", "--p2", "0.2", "--snr", "3"]).is_err());
        assert!(parse(&["frobnicate"]).is_err());
    }

    #[test]
    fn config_expansion() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(
            &path,
            r#"{"command": ["shape", "analyze-switch"], "p1": 0.04, "p2": 0.3, "n": [512, 1024], "csv": true}"#,
        )
        .unwrap();
        let args: Vec<OsString> = ["sbshape", "--config", path.to_str().unwrap(), "--p2", "0.24"]
            .iter()
            .map(OsString::from)
            .collect();
        let cli = Cli::try_parse_from(expand_config(args).unwrap()).unwrap();
        assert!(cli.csv);
        match cli.command {
            Command::Shape { command: ShapeCommand::AnalyzeSwitch(a) } => {
                assert_eq!((a.p1, a.p2), (0.04, 0.24));
                assert_eq!(a.n, vec![512, 1024]);
            }
            other => panic!("parsed {other:?}"),
        }
    }

    #[test]
    fn exit_code_classes() {
        assert_eq!(exit_code(&Error::Parameter("x".into())), EXIT_USAGE);
        assert_eq!(exit_code(&Error::Integrity("x".into())), EXIT_INTEGRITY);
        assert_eq!(exit_code(&Error::OutOfCodebook { k: 3 }), EXIT_INTEGRITY);
        assert_eq!(exit_code(&Error::Numerical("x".into())), EXIT_NUMERICAL);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), EXIT_FAILURE);
    }
}
