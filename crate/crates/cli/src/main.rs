use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use keyrate::compare::{LinkModel, DEFAULT_ATTENUATION_DB_PER_KM};
use keyrate::cv::DEFAULT_MU_MAX;
use keyrate::fock;
use keyrate::sweep::{self, ComparisonKind, Table};
use keyrate::{
    capacity_bounds, evaluate, Error, FreeParam, PhaseNoise, Placement, Protocol, RateSettings, SourcePolicy,
    SweepConfig, ThermalLossChannel,
};

const EXIT_CONFIG: u8 = 2;
const EXIT_COMPUTATION: u8 = 3;
const EXIT_ORACLE: u8 = 4;

#[derive(Parser)]
#[command(name = "keyrate", version, about = "Asymptotic QKD key rates over thermal-loss and phase-noise channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rate one protocol at one channel point.
    Rate(RateArgs),
    /// Capacity bounds of the thermal-loss channel.
    Bounds(LinkArgs),
    /// Evaluate a grid of channel points from a config file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output` in the config. Without either, CSV goes to stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare a CV and a DV protocol over a grid.
    Compare {
        #[arg(value_enum)]
        kind: CompareKind,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check the closed-form DV channel against the Fock-space simulation.
    OracleCheck {
        /// Largest tolerated absolute deviation.
        #[arg(long, default_value_t = 1e-6)]
        max_dev: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CompareKind {
    Kmap,
    NoiseFrontier,
    LossFrontier,
}

impl From<CompareKind> for ComparisonKind {
    fn from(k: CompareKind) -> Self {
        match k {
            CompareKind::Kmap => ComparisonKind::RateMap,
            CompareKind::NoiseFrontier => ComparisonKind::NoiseFrontier,
            CompareKind::LossFrontier => ComparisonKind::LossFrontier,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PlacementArg {
    AtOutput,
    AtInput,
}

#[derive(Args)]
struct LinkArgs {
    /// Channel transmissivity.
    #[arg(long, conflicts_with = "distance_km")]
    eta: Option<f64>,
    /// Fibre length; converted with the attenuation.
    #[arg(long)]
    distance_km: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_ATTENUATION_DB_PER_KM)]
    attenuation: f64,
    /// Thermal photon number.
    #[arg(long, default_value_t = 0.0)]
    nth: f64,
}

impl LinkArgs {
    fn channel(&self) -> Result<ThermalLossChannel, Error> {
        let eta = match (self.eta, self.distance_km) {
            (Some(eta), _) => eta,
            (None, Some(d)) => LinkModel::new(self.attenuation, d).map_err(input_error)?.eta(),
            (None, None) => return Err(Error::Config("give --eta or --distance-km".into())),
        };
        ThermalLossChannel::new(eta, self.nth).map_err(input_error)
    }
}

/// Invalid command-line values are reported as configuration errors.
fn input_error(e: Error) -> Error {
    Error::Config(e.to_string())
}

#[derive(Args)]
struct RateArgs {
    #[arg(long)]
    protocol: String,
    #[command(flatten)]
    link: LinkArgs,
    /// Phase-noise variance in rad^2.
    #[arg(long, default_value_t = 0.0)]
    sigma2: f64,
    /// TMSV quadrature variance.
    #[arg(long, group = "source")]
    mu: Option<f64>,
    #[arg(long, group = "source")]
    squeezing_db: Option<f64>,
    /// Optimize the modulation variance (the default).
    #[arg(long, group = "source")]
    optimize_va: bool,
    #[arg(long, default_value_t = DEFAULT_MU_MAX)]
    mu_max: f64,
    /// Fixed trusted noise for n_sqz_hom.
    #[arg(long, conflicts_with = "optimize_xi")]
    xi_b: Option<f64>,
    #[arg(long)]
    optimize_xi: bool,
    /// Fixed flip probability for the noisy-preprocessing protocols.
    #[arg(long, conflicts_with = "optimize_q")]
    q: Option<f64>,
    #[arg(long)]
    optimize_q: bool,
    #[arg(long, value_enum, default_value_t = PlacementArg::AtOutput)]
    placement: PlacementArg,
    /// Print the full result as JSON.
    #[arg(long)]
    json: bool,
}

impl RateArgs {
    fn settings(&self) -> RateSettings {
        let source = match (self.mu, self.squeezing_db) {
            (Some(mu), _) => SourcePolicy::Mu(mu),
            (None, Some(db)) => SourcePolicy::SqueezingDb(db),
            (None, None) => SourcePolicy::OptimizeVa { mu_max: self.mu_max },
        };
        RateSettings {
            source,
            placement: match self.placement {
                PlacementArg::AtOutput => Placement::AtOutput,
                PlacementArg::AtInput => Placement::AtInput,
            },
            flip: FreeParam::from_option(self.q),
            trusted_noise: FreeParam::from_option(self.xi_b),
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_COMPUTATION,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(command: Command) -> Result<u8, Error> {
    match command {
        Command::Rate(args) => rate(&args),
        Command::Bounds(link) => {
            let b = capacity_bounds(&link.channel()?);
            println!("k_lower = {}", sweep::format_float(b.lower));
            match b.upper {
                Some(u) => println!("k_upper = {}", sweep::format_float(u)),
                None => println!("k_upper = none (entanglement breaking)"),
            }
            Ok(0)
        }
        Command::Sweep { config, output } => {
            let cfg = SweepConfig::from_path(&config)?;
            let table = sweep::run_sweep(&cfg)?;
            emit(&table, &cfg, "sweep", output.or_else(|| cfg.output.clone()).as_deref())?;
            if table.failures > 0 {
                log::error!("{} protocol evaluations failed; see the _error columns", table.failures);
                return Ok(EXIT_COMPUTATION);
            }
            Ok(0)
        }
        Command::Compare { kind, config, output } => {
            let cfg = SweepConfig::from_path(&config)?;
            let kind = ComparisonKind::from(kind);
            let table = sweep::run_comparison(&cfg, kind)?;
            emit(&table, &cfg, kind.name(), output.or_else(|| cfg.output.clone()).as_deref())?;
            Ok(0)
        }
        Command::OracleCheck { max_dev } => {
            let dev = fock::oracle_check()?;
            for (name, value) in dev.named() {
                println!("{name:<16} {value:.3e}");
            }
            let worst = dev.max();
            if worst > max_dev {
                eprintln!("oracle deviation {worst:.3e} exceeds {max_dev:.3e}");
                return Ok(EXIT_ORACLE);
            }
            Ok(0)
        }
    }
}

fn rate(args: &RateArgs) -> Result<u8, Error> {
    let protocol: Protocol =
        args.protocol.parse().map_err(|_| Error::Config(format!("unknown protocol '{}'", args.protocol)))?;
    let ch = args.link.channel()?;
    let pn = PhaseNoise::new(args.sigma2).map_err(input_error)?;
    let r = evaluate(protocol, &ch, &pn, &args.settings())?;
    if args.json {
        let text = serde_json::to_string_pretty(&r).map_err(|e| Error::Config(e.to_string()))?;
        println!("{text}");
    } else {
        println!("protocol      = {}", r.protocol);
        println!("raw_rate      = {}", sweep::format_float(r.raw_rate));
        println!("rate          = {}", sweep::format_float(r.rate));
        if let Some(p) = r.optimal_param {
            println!("optimal_param = {}", sweep::format_float(p));
        }
    }
    Ok(0)
}

fn emit(table: &Table, cfg: &SweepConfig, kind: &str, output: Option<&Path>) -> Result<(), Error> {
    match output {
        Some(path) => sweep::write_outputs(table, cfg, kind, path),
        None => {
            std::io::stdout().write_all(&table.to_csv()?)?;
            Ok(())
        }
    }
}
