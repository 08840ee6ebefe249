use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dwsc_core::engine::LsGranularity;
use dwsc_core::{Ablation, EqInterpretation, EvalOptions, MatchMode, ProviderChoice, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "dwsc", version, about = "Network-aware composition of data-intensive web services")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic layered instance bundle.
    Gen(GenArgs),
    /// Turn a WSC XML triplet into an augmented instance bundle.
    Augment(AugmentArgs),
    /// Check that an instance loads, is feasible, and decodes soundly.
    Validate(ValidateArgs),
    /// Run the memetic algorithm once.
    Run(RunArgs),
    /// Repeat runs over instances and variants and tabulate the results.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long = "services", default_value_t = 100)]
    pub n_services: usize,
    #[arg(long = "concepts", default_value_t = 60)]
    pub n_concepts: usize,
    #[arg(long, default_value_t = 4)]
    pub layers: usize,
    #[arg(long, default_value_t = 1)]
    pub items_per_service: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct XmlArgs {
    /// WSC services document.
    #[arg(long)]
    pub services: PathBuf,
    /// WSC taxonomy document.
    #[arg(long)]
    pub taxonomy: PathBuf,
    /// WSC problem document.
    #[arg(long)]
    pub problem: PathBuf,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[command(flatten)]
    pub xml: XmlArgs,
    /// CSV of `id,lat,lon` rows; uniform random coordinates otherwise.
    #[arg(long)]
    pub coords: Option<PathBuf>,
    #[command(flatten)]
    pub aug: AugmentationFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AugmentationFlags {
    #[arg(long, default_value_t = 0)]
    pub augment_seed: u64,
    #[arg(long, default_value_t = 3.0)]
    pub data_size: f64,
    #[arg(long, default_value_t = 0.5)]
    pub bandwidth_mean: f64,
    #[arg(long, default_value_t = 0.15)]
    pub bandwidth_std: f64,
    #[arg(long, default_value_t = 1)]
    pub items_min: usize,
    #[arg(long, default_value_t = 1)]
    pub items_max: usize,
    #[arg(long, default_value_t = 1.0)]
    pub propagation_factor: f64,
    #[arg(long, default_value_t = 1.0)]
    pub comm_cost_factor: f64,
    #[arg(long, value_enum, default_value_t = MatchArg::Subsumption)]
    pub matching: MatchArg,
}

/// Where the problem comes from: a bundle, or an XML triplet augmented on
/// the fly.
#[derive(Debug, Args)]
pub struct SourceArgs {
    #[arg(long, required_unless_present = "services", conflicts_with = "services")]
    pub instance: Option<PathBuf>,
    #[arg(long, requires_all = ["taxonomy", "problem"])]
    pub services: Option<PathBuf>,
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<PathBuf>,
    #[arg(long)]
    pub coords: Option<PathBuf>,
    #[command(flatten)]
    pub aug: AugmentationFlags,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum, default_value_t = EqArg::Once)]
    pub eq_interpretation: EqArg,
    #[arg(long, value_enum, default_value_t = ProviderArg::Earliest)]
    pub provider_choice: ProviderArg,
}

impl EvalArgs {
    pub fn options(&self) -> EvalOptions {
        EvalOptions {
            eq_interpretation: self.eq_interpretation.into(),
            provider_choice: self.provider_choice.into(),
        }
    }
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub eval: EvalArgs,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    #[arg(long, default_value_t = RunConfig::default().population_size)]
    pub population_size: usize,
    #[arg(long, default_value_t = RunConfig::default().generations)]
    pub generations: usize,
    #[arg(long, default_value_t = RunConfig::default().p_crossover)]
    pub p_crossover: f64,
    #[arg(long, default_value_t = RunConfig::default().p_mutation)]
    pub p_mutation: f64,
    #[arg(long, default_value_t = RunConfig::default().p_local_search)]
    pub p_local_search: f64,
    #[arg(long = "n-l", default_value_t = RunConfig::default().n_l)]
    pub n_l: usize,
    #[arg(long, default_value_t = RunConfig::default().elitism)]
    pub elitism: usize,
    #[arg(long, default_value_t = RunConfig::default().tournament_k)]
    pub tournament_k: usize,
    #[arg(long, default_value_t = RunConfig::default().seed)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = GranularityArg::PerIndividual)]
    pub ls_granularity: GranularityArg,
    /// `off` writes 0 for every elapsed time so outputs depend only on the
    /// flags.
    #[arg(long, value_enum, default_value_t = TimingArg::Wall)]
    pub timing: TimingArg,
}

impl ConfigArgs {
    pub fn config(&self, ablation: Ablation) -> RunConfig {
        RunConfig {
            population_size: self.population_size,
            generations: self.generations,
            p_crossover: self.p_crossover,
            p_mutation: self.p_mutation,
            p_local_search: self.p_local_search,
            n_l: self.n_l,
            elitism: self.elitism,
            tournament_k: self.tournament_k,
            seed: self.seed,
            ablation,
            ls_granularity: self.ls_granularity.into(),
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub eval: EvalArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, value_enum, default_value_t = AblationArg::Full)]
    pub ablation: AblationArg,
    /// Output directory for result.json, generations.csv and best.dot.
    #[arg(long, default_value = "dwsc-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Instance bundle; repeat for several instances.
    #[arg(long = "instance", required = true)]
    pub instances: Vec<PathBuf>,
    #[arg(long, default_value_t = 30)]
    pub runs: usize,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_values_t = [AblationArg::Full, AblationArg::NoLocalSearch, AblationArg::Type1Only]
    )]
    pub variants: Vec<AblationArg>,
    #[command(flatten)]
    pub eval: EvalArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, default_value = "dwsc-bench")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum AblationArg {
    Full,
    NoLocalSearch,
    Type1Only,
    Type2Only,
}

impl From<AblationArg> for Ablation {
    fn from(a: AblationArg) -> Self {
        match a {
            AblationArg::Full => Ablation::Full,
            AblationArg::NoLocalSearch => Ablation::NoLocalSearch,
            AblationArg::Type1Only => Ablation::Type1Only,
            AblationArg::Type2Only => Ablation::Type2Only,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EqArg {
    Once,
    Literal,
}

impl From<EqArg> for EqInterpretation {
    fn from(a: EqArg) -> Self {
        match a {
            EqArg::Once => EqInterpretation::Once,
            EqArg::Literal => EqInterpretation::Literal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProviderArg {
    Earliest,
    Nearest,
}

impl From<ProviderArg> for ProviderChoice {
    fn from(a: ProviderArg) -> Self {
        match a {
            ProviderArg::Earliest => ProviderChoice::Earliest,
            ProviderArg::Nearest => ProviderChoice::Nearest,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatchArg {
    Subsumption,
    Exact,
}

impl From<MatchArg> for MatchMode {
    fn from(a: MatchArg) -> Self {
        match a {
            MatchArg::Subsumption => MatchMode::Subsumption,
            MatchArg::Exact => MatchMode::Exact,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum GranularityArg {
    PerIndividual,
    PerGeneration,
}

impl From<GranularityArg> for LsGranularity {
    fn from(a: GranularityArg) -> Self {
        match a {
            GranularityArg::PerIndividual => LsGranularity::PerIndividual,
            GranularityArg::PerGeneration => LsGranularity::PerGeneration,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TimingArg {
    Wall,
    Off,
}
