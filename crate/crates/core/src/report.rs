//! The combined run behind the command-line front end.
//!
//! A [`Report`] holds every requested analysis of one dataset together with
//! the fully resolved [`RunConfig`]. Each analysis sits in a [`Section`]
//! naming the module that produced it and the parameters it ran with.
//! Sections that were not requested serialize as `null`, so the top-level
//! keys are always the same.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::bootstrap::{run_bootstrap, BootstrapConfig, BootstrapResult, DEFAULT_DRAWS, DEFAULT_LEVEL};
use crate::deviation::{deviation_table, per_stratum_tables, DeviationTable, Scope, TestConfig, DEFAULT_Z_MAX};
use crate::diagnostics::{
    attribute_correlation, deviation_sign_correlation, leave_one_out, size_share_correlation, write_loo_csv,
    CorrelationKind, CorrelationOutcome, CorrelationReport, LooReport, DEFAULT_ALPHA,
};
use crate::ingest::{Dataset, DroppedUnit, RosterFormat, DEFAULT_MIN_SIZE};
use crate::normal::Sidedness;
use crate::quota::{apply_quota, QuotaScenario, Weighting, DEFAULT_QUOTA};
use crate::rng::GENERATOR_VERSION;
use crate::{Error, Result};

pub const SCHEMA_VERSION: &str = "quotascan-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    Roster,
    #[default]
    Departments,
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "roster" => Ok(InputFormat::Roster),
            "departments" | "department" => Ok(InputFormat::Departments),
            _ => Err(Error::invalid(format!("unknown input format {s:?} (roster | departments)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            _ => Err(Error::invalid(format!("unknown output format {s:?} (json | csv)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub input_path: Option<String>,
    pub input_format: InputFormat,
    pub roster_labels: RosterFormat,
    pub min_dept_size: u32,
    pub z_max: u32,
    pub sidedness: Sidedness,
    pub bootstrap_draws: usize,
    pub seed: u64,
    pub interval_level: f64,
    pub quota: u32,
    pub weighting: Weighting,
    /// `z` values for the deviation-sign and attribute correlations.
    pub correlation_z: Vec<u32>,
    pub alpha: f64,
    pub output_format: OutputFormat,
    pub attribute_path: Option<String>,
    pub generator_version: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input_path: None,
            input_format: InputFormat::default(),
            roster_labels: RosterFormat::default(),
            min_dept_size: DEFAULT_MIN_SIZE,
            z_max: DEFAULT_Z_MAX,
            sidedness: Sidedness::TwoSided,
            bootstrap_draws: DEFAULT_DRAWS,
            seed: 0,
            interval_level: DEFAULT_LEVEL,
            quota: DEFAULT_QUOTA,
            weighting: Weighting::Unweighted,
            correlation_z: vec![0, 3],
            alpha: DEFAULT_ALPHA,
            output_format: OutputFormat::Json,
            attribute_path: None,
            generator_version: GENERATOR_VERSION.to_string(),
        }
    }
}

impl RunConfig {
    pub fn test_config(&self) -> TestConfig {
        TestConfig { z_max: self.z_max, sidedness: self.sidedness }
    }

    pub fn bootstrap_config(&self) -> BootstrapConfig {
        BootstrapConfig {
            z_max: self.z_max,
            draws: self.bootstrap_draws,
            seed: self.seed,
            level: self.interval_level,
            sidedness: self.sidedness,
            ..Default::default()
        }
    }
}

/// Which analyses to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Stages {
    pub test: bool,
    pub bootstrap: bool,
    pub diagnose: bool,
    pub quota: bool,
}

impl Stages {
    pub const ALL: Stages = Stages { test: true, bootstrap: true, diagnose: true, quota: true };
    pub const TEST: Stages = Stages { test: true, bootstrap: false, diagnose: false, quota: false };
    pub const BOOTSTRAP: Stages = Stages { test: false, bootstrap: true, diagnose: false, quota: false };
    pub const DIAGNOSE: Stages = Stages { test: false, bootstrap: false, diagnose: true, quota: false };
    pub const QUOTA: Stages = Stages { test: false, bootstrap: false, diagnose: false, quota: true };
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Section<P, T> {
    pub module: &'static str,
    pub parameters: P,
    pub result: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapParameters {
    #[serde(flatten)]
    pub config: BootstrapConfig,
    pub generator_version: &'static str,
    pub interval_rule: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsParameters {
    pub alpha: f64,
    pub correlation_z: Vec<u32>,
    pub loo_dispersion: &'static str,
    pub loo_equality_test: &'static str,
    pub correlation_ci: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedStratum {
    pub stratum_key: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub leave_one_out: Vec<LooReport>,
    pub leave_one_out_skipped: Vec<SkippedStratum>,
    pub deviation_sign: Vec<CorrelationReport>,
    pub size_share: CorrelationReport,
    pub attributes: Vec<CorrelationReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuotaParameters {
    pub quota: u32,
    pub weighting: Weighting,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharePair {
    pub actual: f64,
    pub simulated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuotaResult {
    pub mean_share_actual: f64,
    pub mean_share_sim: f64,
    pub per_stratum_shares: BTreeMap<String, SharePair>,
    pub scenario: QuotaScenario,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub version: &'static str,
    pub config: RunConfig,
    pub dropped_units: Vec<DroppedUnit>,
    pub degenerate_strata: Vec<String>,
    pub deviation_table: Option<Section<TestConfig, DeviationTable>>,
    pub per_stratum_tables: Option<Section<TestConfig, Vec<DeviationTable>>>,
    pub bootstrap: Option<Section<BootstrapParameters, BootstrapResult>>,
    pub diagnostics: Option<Section<DiagnosticsParameters, Diagnostics>>,
    pub quota_scenario: Option<Section<QuotaParameters, QuotaResult>>,
}

/// Correlations that cannot be computed (too few strata, a non-numeric
/// attribute) are reported in place rather than aborting the run.
fn or_undefined(kind: CorrelationKind, z: Option<u32>, attribute: Option<&str>, r: Result<CorrelationReport>) -> CorrelationReport {
    r.unwrap_or_else(|e| CorrelationReport {
        kind,
        z,
        attribute: attribute.map(str::to_string),
        n: 0,
        outcome: CorrelationOutcome::Undefined { reason: e.to_string() },
    })
}

fn diagnose(dataset: &Dataset, config: &RunConfig) -> Result<Diagnostics> {
    let mut loo = Vec::new();
    let mut skipped = Vec::new();
    for s in &dataset.strata {
        match leave_one_out(s, config.alpha) {
            Ok(r) => loo.push(r),
            Err(Error::InvalidArgument(reason)) => skipped.push(SkippedStratum { stratum_key: s.key.clone(), reason }),
            Err(e) => return Err(e),
        }
    }

    let z_top = config.correlation_z.iter().copied().max().unwrap_or(0);
    let tables = per_stratum_tables(dataset, &TestConfig { z_max: z_top, sidedness: config.sidedness })?;
    let deviation_sign = config
        .correlation_z
        .iter()
        .map(|&z| {
            let r = deviation_sign_correlation(dataset, &tables, z);
            or_undefined(CorrelationKind::DeviationSignVsShare, Some(z), None, r)
        })
        .collect();
    let size_share = or_undefined(CorrelationKind::SizeVsShare, None, None, size_share_correlation(dataset));

    let names: BTreeSet<&String> = dataset.strata.iter().flat_map(|s| s.attributes.keys()).collect();
    let mut attributes = Vec::new();
    for name in names {
        for &z in &config.correlation_z {
            let r = attribute_correlation(dataset, &tables, name, z);
            attributes.push(or_undefined(CorrelationKind::AttributeVsDeviation, Some(z), Some(name), r));
        }
    }

    Ok(Diagnostics { leave_one_out: loo, leave_one_out_skipped: skipped, deviation_sign, size_share, attributes })
}

fn check_config(config: &RunConfig) -> Result<()> {
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(Error::invalid(format!("alpha {} must lie in (0, 1)", config.alpha)));
    }
    if !(config.interval_level > 0.0 && config.interval_level < 1.0) {
        return Err(Error::invalid(format!("interval level {} must lie in (0, 1)", config.interval_level)));
    }
    Ok(())
}

pub fn build_report(dataset: &Dataset, config: &RunConfig, stages: Stages) -> Result<Report> {
    check_config(config)?;
    let test_cfg = config.test_config();
    let mut report = Report {
        version: SCHEMA_VERSION,
        config: config.clone(),
        dropped_units: dataset.dropped_units.clone(),
        degenerate_strata: dataset.degenerate_strata(),
        deviation_table: None,
        per_stratum_tables: None,
        bootstrap: None,
        diagnostics: None,
        quota_scenario: None,
    };
    if stages.test {
        report.deviation_table =
            Some(Section { module: "test", parameters: test_cfg, result: deviation_table(dataset, &test_cfg)? });
        report.per_stratum_tables =
            Some(Section { module: "test", parameters: test_cfg, result: per_stratum_tables(dataset, &test_cfg)? });
    }
    if stages.bootstrap {
        let cfg = config.bootstrap_config();
        report.bootstrap = Some(Section {
            module: "bootstrap",
            parameters: BootstrapParameters {
                config: cfg,
                generator_version: GENERATOR_VERSION,
                interval_rule: "nearest_rank",
            },
            result: run_bootstrap(dataset, &cfg)?,
        });
    }
    if stages.diagnose {
        report.diagnostics = Some(Section {
            module: "diagnostics",
            parameters: DiagnosticsParameters {
                alpha: config.alpha,
                correlation_z: config.correlation_z.clone(),
                loo_dispersion: "population_std",
                loo_equality_test: "pooled_two_proportion_z",
                correlation_ci: "fisher_z_95",
            },
            result: diagnose(dataset, config)?,
        });
    }
    if stages.quota {
        let scenario = apply_quota(dataset, config.quota, config.weighting);
        let per_stratum_shares = scenario
            .strata
            .iter()
            .map(|s| (s.key.clone(), SharePair { actual: s.actual.value(), simulated: s.simulated.value() }))
            .collect();
        report.quota_scenario = Some(Section {
            module: "quota_sim",
            parameters: QuotaParameters { quota: config.quota, weighting: config.weighting },
            result: QuotaResult {
                mean_share_actual: scenario.mean_share_actual,
                mean_share_sim: scenario.mean_share_sim,
                per_stratum_shares,
                scenario,
            },
        });
    }
    Ok(report)
}

/// Pretty JSON with every float written to 17 significant digits.
struct FixedDigits<'a>(PrettyFormatter<'a>);

impl Formatter for FixedDigits<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

pub fn write_json<T: Serialize, W: Write>(value: &T, mut out: W) -> Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedDigits(PrettyFormatter::new()));
    value.serialize(&mut ser).map_err(io::Error::from)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn to_json(report: &Report) -> Vec<u8> {
    let mut buf = Vec::new();
    write_json(report, &mut buf).expect("writing to memory");
    buf
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn scope_label(scope: &Scope) -> &str {
    match scope {
        Scope::Overall => "overall",
        Scope::Stratum(key) => key,
    }
}

/// `scope,z,observed,expected,variance,deviation,statistic,p_value`.
pub fn write_deviation_csv<W: Write>(tables: &[&DeviationTable], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scope", "z", "observed", "expected", "variance", "deviation", "statistic", "p_value"])?;
    for t in tables {
        for r in &t.rows {
            w.write_record([
                scope_label(&t.scope).to_string(),
                r.z.to_string(),
                r.observed.to_string(),
                num(r.expected),
                num(r.variance),
                num(r.deviation),
                opt(r.statistic),
                opt(r.p_value),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `z,draws,expected,observed_deviation,mean_of_draws,interval_low,interval_high,empirical_p`.
pub fn write_bootstrap_csv<W: Write>(result: &BootstrapResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "z",
        "draws",
        "expected",
        "observed_deviation",
        "mean_of_draws",
        "interval_low",
        "interval_high",
        "empirical_p",
    ])?;
    for s in &result.summaries {
        w.write_record([
            s.z.to_string(),
            s.draws.to_string(),
            num(s.expected),
            num(s.observed_deviation),
            num(s.mean_of_draws),
            num(s.interval.0),
            num(s.interval.1),
            num(s.empirical_p),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// The flat CSV projection of a report: the quota table, the bootstrap
/// summary, or the leave-one-out table when that is the only section, and
/// the deviation tables (overall first) otherwise.
pub fn write_csv<W: Write>(report: &Report, out: W) -> Result<()> {
    if let (Some(overall), Some(per)) = (&report.deviation_table, &report.per_stratum_tables) {
        let tables: Vec<&DeviationTable> = std::iter::once(&overall.result).chain(&per.result).collect();
        return write_deviation_csv(&tables, out);
    }
    if let Some(b) = &report.bootstrap {
        return write_bootstrap_csv(&b.result, out);
    }
    if let Some(d) = &report.diagnostics {
        return write_loo_csv(&d.result.leave_one_out, out);
    }
    if let Some(q) = &report.quota_scenario {
        return q.result.scenario.write_csv(out);
    }
    Err(Error::invalid("report has no sections to export"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{build_dataset, DepartmentRecord};

    fn dataset() -> Dataset {
        let rows: [(&str, &[u32], &[u32]); 4] = [
            ("econ", &[6, 16, 12, 7, 23], &[0, 2, 2, 1, 5]),
            ("hist", &[10, 12, 9, 14], &[3, 4, 2, 5]),
            ("math", &[8, 20, 11, 2], &[1, 2, 1, 0]),
            ("none", &[5, 6], &[0, 0]),
        ];
        let mut recs = Vec::new();
        for (key, sizes, minorities) in rows {
            for (i, (&n, &y)) in sizes.iter().zip(minorities).enumerate() {
                recs.push(DepartmentRecord::new(key, format!("u{i}"), n, y));
            }
        }
        build_dataset(recs, 3).unwrap()
    }

    fn small_config() -> RunConfig {
        RunConfig { bootstrap_draws: 200, z_max: 4, ..Default::default() }
    }

    #[test]
    fn full_report_has_every_section() {
        let ds = dataset();
        let report = build_report(&ds, &small_config(), Stages::ALL).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&to_json(&report)).unwrap();
        for key in [
            "version",
            "config",
            "dropped_units",
            "degenerate_strata",
            "deviation_table",
            "per_stratum_tables",
            "bootstrap",
            "diagnostics",
            "quota_scenario",
        ] {
            assert!(!v[key].is_null(), "{key}");
        }
        assert_eq!(v["version"], SCHEMA_VERSION);
        assert_eq!(v["degenerate_strata"][0], "none");
        assert_eq!(v["dropped_units"][0]["unit_key"], "u3");
        assert_eq!(v["bootstrap"]["module"], "bootstrap");
        assert_eq!(v["bootstrap"]["parameters"]["draws"], 200);
        assert_eq!(v["quota_scenario"]["result"]["scenario"]["strata"][0]["counts"], serde_json::json!([2, 2, 2, 2, 2]));
    }

    #[test]
    fn unrequested_sections_are_null() {
        let report = build_report(&dataset(), &small_config(), Stages::QUOTA).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&to_json(&report)).unwrap();
        assert!(v["deviation_table"].is_null() && v["bootstrap"].is_null());
        assert!(v.as_object().unwrap().contains_key("diagnostics"));
    }

    #[test]
    fn floats_carry_seventeen_digits() {
        let text = String::from_utf8(to_json(&build_report(&dataset(), &small_config(), Stages::QUOTA).unwrap())).unwrap();
        assert!(text.contains("\"mean_share_actual\": "));
        // 0.15625 = 10/64, the econ share
        assert!(text.contains("1.5625000000000000e-1"), "{text}");
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["quota_scenario"]["result"]["per_stratum_shares"]["econ"]["actual"].as_f64(), Some(0.15625));
    }

    #[test]
    fn identical_runs_are_byte_identical() {
        let ds = dataset();
        let a = to_json(&build_report(&ds, &small_config(), Stages::ALL).unwrap());
        let b = to_json(&build_report(&ds, &small_config(), Stages::ALL).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn diagnostics_skip_and_undefined() {
        let recs = vec![
            DepartmentRecord::new("a", "u1", 5, 1),
            DepartmentRecord::new("a", "u2", 6, 2),
            DepartmentRecord::new("b", "u1", 7, 3),
        ];
        let ds = build_dataset(recs, 3).unwrap();
        let d = diagnose(&ds, &RunConfig::default()).unwrap();
        assert_eq!(d.leave_one_out.len(), 1);
        assert_eq!(d.leave_one_out_skipped[0].stratum_key, "b");
        assert!(matches!(d.size_share.outcome, CorrelationOutcome::Undefined { .. }));
        assert_eq!(d.deviation_sign.len(), 2);
    }

    #[test]
    fn csv_projections() {
        let ds = dataset();
        let cfg = small_config();
        let mut buf = Vec::new();
        write_csv(&build_report(&ds, &cfg, Stages::TEST).unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "scope,z,observed,expected,variance,deviation,statistic,p_value");
        // overall + the 3 non-degenerate strata, 5 rows each
        assert_eq!(lines.len(), 1 + 4 * 5);
        assert!(lines[1].starts_with("overall,0,"));
        assert!(!lines.iter().any(|l| l.starts_with("none,")));

        let mut buf = Vec::new();
        write_csv(&build_report(&ds, &cfg, Stages::DIAGNOSE).unwrap(), &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("discipline,loo_std_dev,share\necon,"));

        let mut buf = Vec::new();
        write_csv(&build_report(&ds, &cfg, Stages::BOOTSTRAP).unwrap(), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 6);

        assert!(write_csv(&build_report(&ds, &cfg, Stages::default()).unwrap(), Vec::new()).is_err());
    }

    #[test]
    fn parse_formats() {
        assert_eq!("Roster".parse::<InputFormat>().unwrap(), InputFormat::Roster);
        assert_eq!("csv".parse::<OutputFormat>().unwrap(), OutputFormat::Csv);
        assert!("xml".parse::<OutputFormat>().is_err());
    }
}
