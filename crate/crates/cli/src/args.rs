use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use quotascan_core::report::{InputFormat, OutputFormat};
use quotascan_core::{Regime, RosterFormat, RunConfig, Sidedness, Weighting};

#[derive(Debug, Parser)]
#[command(name = "quotascan", version, about = "Test whether minority counts across departments look like random hiring or an implicit per-department quota")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Asymptotic test: observed vs expected departments with z members, overall and per discipline
    Test(AnalysisArgs),
    /// Parametric bootstrap of the summed deviations
    Bootstrap(AnalysisArgs),
    /// Leave-one-out dispersion and correlation diagnostics
    Diagnose(AnalysisArgs),
    /// Counterfactual shares under a fixed per-department quota
    SimulateQuota(AnalysisArgs),
    /// Write a synthetic corpus as CSV
    Generate(GenerateArgs),
    /// Test, bootstrap, diagnostics and quota simulation in one document
    Report(AnalysisArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    /// One row per person: discipline,university,gender
    Roster,
    /// One row per department: discipline,university,size,women
    Departments,
}

impl From<FormatArg> for InputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Roster => InputFormat::Roster,
            FormatArg::Departments => InputFormat::Departments,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SidedArg {
    /// 2·Φ(−|t|)
    TwoSided,
    /// Φ(−t): small when there are more departments than expected
    OneSided,
}

impl From<SidedArg> for Sidedness {
    fn from(s: SidedArg) -> Self {
        match s {
            SidedArg::TwoSided => Sidedness::TwoSided,
            SidedArg::OneSided => Sidedness::OneSidedDirectional,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WeightingArg {
    Unweighted,
    SizeWeighted,
}

impl From<WeightingArg> for Weighting {
    fn from(w: WeightingArg) -> Self {
        match w {
            WeightingArg::Unweighted => Weighting::Unweighted,
            WeightingArg::SizeWeighted => Weighting::SizeWeighted,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OutputArg {
    Json,
    Csv,
}

impl From<OutputArg> for OutputFormat {
    fn from(o: OutputArg) -> Self {
        match o {
            OutputArg::Json => OutputFormat::Json,
            OutputArg::Csv => OutputFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct AnalysisArgs {
    /// Input CSV
    #[arg(long, env = "QUOTASCAN_INPUT")]
    pub input: PathBuf,

    #[arg(long, value_enum, env = "QUOTASCAN_FORMAT", default_value = "departments")]
    pub format: FormatArg,

    /// Roster symbol for a minority member
    #[arg(long, env = "QUOTASCAN_MINORITY_LABEL", default_value = "F")]
    pub minority_label: String,

    /// Roster symbol for a majority member
    #[arg(long, env = "QUOTASCAN_MAJORITY_LABEL", default_value = "M")]
    pub majority_label: String,

    /// Departments smaller than this are dropped (and listed in the report)
    #[arg(long, env = "QUOTASCAN_MIN_DEPT_SIZE", default_value_t = 3)]
    pub min_dept_size: u32,

    /// Largest z tabulated; larger counts go to the residual bucket
    #[arg(long, env = "QUOTASCAN_Z_MAX", default_value_t = 10)]
    pub z_max: u32,

    #[arg(long, value_enum, env = "QUOTASCAN_SIDED", default_value = "two-sided")]
    pub sided: SidedArg,

    /// Bootstrap replications
    #[arg(long, env = "QUOTASCAN_DRAWS", default_value_t = 10_000)]
    pub draws: usize,

    #[arg(long, env = "QUOTASCAN_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Bootstrap interval level
    #[arg(long, env = "QUOTASCAN_LEVEL", default_value_t = 0.9)]
    pub level: f64,

    /// Per-department quota for the counterfactual
    #[arg(long, env = "QUOTASCAN_QUOTA", default_value_t = 2)]
    pub quota: u32,

    /// How mean shares across disciplines are averaged
    #[arg(long, value_enum, env = "QUOTASCAN_WEIGHTING", default_value = "unweighted")]
    pub weighting: WeightingArg,

    /// z values for the deviation-sign and attribute correlations
    #[arg(long, env = "QUOTASCAN_CORRELATION_Z", value_delimiter = ',', default_value = "0,3")]
    pub correlation_z: Vec<u32>,

    /// Level of the leave-one-out equality test
    #[arg(long, env = "QUOTASCAN_ALPHA", default_value_t = 0.05)]
    pub alpha: f64,

    /// Discipline attributes CSV: discipline,key,value
    #[arg(long, env = "QUOTASCAN_ATTRIBUTES")]
    pub attributes: Option<PathBuf>,

    /// Write the report here instead of stdout
    #[arg(long, env = "QUOTASCAN_OUT")]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum, env = "QUOTASCAN_OUTPUT_FORMAT", default_value = "json")]
    pub output_format: OutputArg,

    /// Write every bootstrap deviation as z,replication,deviation
    #[arg(long, env = "QUOTASCAN_EXPORT_DRAWS")]
    pub export_draws: Option<PathBuf>,
}

impl AnalysisArgs {
    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            input_path: Some(self.input.display().to_string()),
            input_format: self.format.into(),
            roster_labels: RosterFormat { minority: self.minority_label.clone(), majority: self.majority_label.clone() },
            min_dept_size: self.min_dept_size,
            z_max: self.z_max,
            sidedness: self.sided.into(),
            bootstrap_draws: self.draws,
            seed: self.seed,
            interval_level: self.level,
            quota: self.quota,
            weighting: self.weighting.into(),
            correlation_z: self.correlation_z.clone(),
            alpha: self.alpha,
            output_format: self.output_format.into(),
            attribute_path: self.attributes.as_ref().map(|p| p.display().to_string()),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RegimeArg {
    NullRandom,
    HardQuota,
    SoftQuota,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(long, env = "QUOTASCAN_STRATA", default_value_t = 50)]
    pub strata: usize,

    /// Fewest departments per discipline
    #[arg(long, default_value_t = 30)]
    pub min_departments: usize,

    /// Most departments per discipline
    #[arg(long, default_value_t = 40)]
    pub max_departments: usize,

    #[arg(long, default_value_t = 5)]
    pub min_size: u32,

    #[arg(long, default_value_t = 40)]
    pub max_size: u32,

    #[arg(long, default_value_t = 0.07)]
    pub min_share: f64,

    #[arg(long, default_value_t = 0.49)]
    pub max_share: f64,

    #[arg(long, value_enum, env = "QUOTASCAN_REGIME", default_value = "null-random")]
    pub regime: RegimeArg,

    /// Quota for the hard and soft quota regimes
    #[arg(long, env = "QUOTASCAN_QUOTA", default_value_t = 2)]
    pub quota: u32,

    /// Soft quota: probability that a department ignores the quota
    #[arg(long, default_value_t = 0.1)]
    pub leak: f64,

    #[arg(long, env = "QUOTASCAN_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Departments smaller than this are rejected as infeasible
    #[arg(long, env = "QUOTASCAN_MIN_DEPT_SIZE", default_value_t = 3)]
    pub min_dept_size: u32,

    #[arg(long, value_enum, env = "QUOTASCAN_FORMAT", default_value = "departments")]
    pub format: FormatArg,

    #[arg(long, env = "QUOTASCAN_MINORITY_LABEL", default_value = "F")]
    pub minority_label: String,

    #[arg(long, env = "QUOTASCAN_MAJORITY_LABEL", default_value = "M")]
    pub majority_label: String,

    #[arg(long, env = "QUOTASCAN_OUT")]
    pub out: Option<PathBuf>,
}

impl GenerateArgs {
    pub fn regime(&self) -> Regime {
        match self.regime {
            RegimeArg::NullRandom => Regime::NullRandom,
            RegimeArg::HardQuota => Regime::HardQuota { q: self.quota },
            RegimeArg::SoftQuota => Regime::SoftQuota { q: self.quota, leak: self.leak },
        }
    }
}
