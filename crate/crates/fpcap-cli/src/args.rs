use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Capacities, code-length constants, scheme parameters, and accusation
/// simulations for bias-based traitor-tracing codes.
#[derive(Parser, Debug)]
#[command(name = "fpcap", version, about)]
pub struct Cli {
    /// Master seed for anything randomized; FPCAP_SEED is the fallback.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads for simulations; defaults to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    /// Score users one at a time.
    Simple,
    /// Score coalition-sized tuples.
    Joint,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SideArg {
    /// Decoder knows each position's bias.
    Full,
    /// Biases averaged out under the arcsine density.
    Partial,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DecoderArg {
    /// Per-user log-likelihood ratio matched to the attack channel.
    Informed,
    /// Channel-oblivious logarithmic score.
    Universal,
    /// Channel-oblivious linear score.
    Oosterwijk,
    /// Linear score shrunk through ln(1 + h/n).
    Bayesian,
    /// Tuple log-likelihood ratio matched to the attack channel.
    Joint,
    /// Channel-oblivious tuple score.
    JointUniversal,
}

impl DecoderArg {
    pub fn name(self) -> &'static str {
        match self {
            DecoderArg::Informed => "informed",
            DecoderArg::Universal => "universal",
            DecoderArg::Oosterwijk => "oosterwijk",
            DecoderArg::Bayesian => "bayesian",
            DecoderArg::Joint => "joint",
            DecoderArg::JointUniversal => "joint-universal",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BiasArg {
    /// Fixed bias when --p resolves to a number, arcsine otherwise.
    Auto,
    /// Every position uses the single bias from --p.
    Fixed,
    /// Biases drawn from the arcsine density on (0, 1).
    Arcsine,
    /// Arcsine restricted to [delta, 1 - delta].
    Cutoff,
}

/// Bias argument: a number, or "auto" to let the command pick.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PArg {
    Auto,
    Value(f64),
}

impl FromStr for PArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(PArg::Auto);
        }
        s.parse::<f64>()
            .map(PArg::Value)
            .map_err(|_| format!("expected a number or \"auto\", got {s:?}"))
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Capacity of one attack at one coalition size.
    Capacity(CapacityOpts),
    /// Capacity table over attacks and coalition sizes.
    Table(TableOpts),
    /// Threshold and code length meeting the two error targets.
    Params(ParamsOpts),
    /// Monte Carlo error rates for a decoder against an attack.
    Simulate(SimulateOpts),
    /// Matched run against the all-1 attack at the deterministic design
    /// bias, reporting code-length ratios.
    Grouptest(GrouptestOpts),
    /// Largest deviations between the per-user score functions on a bias
    /// grid: c*universal vs linear and n*bayesian vs linear.
    ScanScorefns(ScanOpts),
}

#[derive(Args, Debug)]
pub struct CapacityOpts {
    /// interleaving, all1, majority, minority, or coinflip.
    #[arg(long)]
    pub attack: String,
    #[arg(long)]
    pub c: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Simple)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = SideArg::Full)]
    pub side: SideArg,
    /// Quadrature nodes for --side partial.
    #[arg(long, default_value_t = 2000)]
    pub nodes: usize,
}

#[derive(Args, Debug)]
pub struct TableOpts {
    /// Comma-separated attack names, or "all".
    #[arg(long, value_delimiter = ',', default_value = "all")]
    pub attack: Vec<String>,
    /// Comma-separated coalition sizes.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "11,15,21,29,41,57,79,109,151,209,289,399,551,761,1001"
    )]
    pub c: Vec<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::Simple)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = SideArg::Full)]
    pub side: SideArg,
    #[arg(long, default_value_t = 2000)]
    pub nodes: usize,
}

#[derive(Args, Debug)]
pub struct ParamsOpts {
    /// Number of users.
    #[arg(long)]
    pub n: usize,
    /// False-positive target.
    #[arg(long, default_value_t = 0.05)]
    pub eps1: f64,
    /// False-negative target.
    #[arg(long, default_value_t = 0.5)]
    pub eps2: f64,
    #[arg(long, conflicts_with = "channel_file")]
    pub attack: Option<String>,
    /// Text file: first line c, second line c+1 output probabilities.
    #[arg(long)]
    pub channel_file: Option<PathBuf>,
    /// Coalition size; required with --attack.
    #[arg(long)]
    pub c: Option<usize>,
    /// Design bias, or "auto" for the capacity-maximizing one.
    #[arg(long, default_value = "auto")]
    pub p: PArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Simple)]
    pub mode: ModeArg,
}

#[derive(Args, Debug)]
pub struct SimulateOpts {
    #[arg(long, value_enum)]
    pub decoder: DecoderArg,
    #[arg(long, conflicts_with = "channel_file")]
    pub attack: Option<String>,
    #[arg(long)]
    pub channel_file: Option<PathBuf>,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub c: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.05)]
    pub eps1: f64,
    #[arg(long, default_value_t = 0.5)]
    pub eps2: f64,
    /// Design bias, or "auto": the capacity-maximizing bias for matched
    /// decoders, arcsine biases for the channel-oblivious ones.
    #[arg(long, default_value = "auto")]
    pub p: PArg,
    #[arg(long, value_enum, default_value_t = BiasArg::Auto)]
    pub bias: BiasArg,
    /// Cutoff for --bias cutoff; defaults to 1/(720 c).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Accusation threshold override, in nats.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Code length override.
    #[arg(long)]
    pub ell: Option<usize>,
    /// Write one CSV line per trial here.
    #[arg(long)]
    pub per_trial_out: Option<PathBuf>,
    /// Write trial 0's code matrix here in the binary format.
    #[arg(long)]
    pub save_code: Option<PathBuf>,
    /// Write trial 0's code matrix here as readable text.
    #[arg(long)]
    pub dump_code: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GrouptestOpts {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub c: usize,
    #[arg(long, default_value_t = 0.05)]
    pub eps1: f64,
    #[arg(long, default_value_t = 0.5)]
    pub eps2: f64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
}

#[derive(Args, Debug)]
pub struct ScanOpts {
    #[arg(long)]
    pub c: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.1)]
    pub p_min: f64,
    #[arg(long, default_value_t = 0.9)]
    pub p_max: f64,
    #[arg(long, default_value_t = 0.01)]
    pub p_step: f64,
}
