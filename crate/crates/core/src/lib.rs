//! Tests for implicit per-unit quotas.
//!
//! Units (departments) are grouped into strata (disciplines) that hire from a
//! common pool. Under random hiring, the minority count of a department of
//! size `n` in a stratum with share `p` is `Binomial(n, p)`, and the number of
//! departments holding exactly `z` minority members is Poisson-binomial. This
//! crate compares the observed counts against that null, summed over strata,
//! with an asymptotic normal test and a parametric bootstrap, and ships the
//! diagnostics and counterfactual quota simulation used to interpret a result.
//!
//! Module map:
//!
//! * [`ingest`]: CSV parsing and the stratified data model.
//! * [`pbd`]: binomial / Poisson-binomial kernels and the department sampler.
//! * [`rng`]: the counter-based random stream every sampler draws from.
//! * [`normal`]: standard normal CDF and p-values.
//! * [`deviation`]: observed versus expected counts and the asymptotic test.
//! * [`bootstrap`]: parametric bootstrap under the null.
//! * [`diagnostics`]: leave-one-out dispersion and correlation analyses.
//! * [`quota`]: counterfactual fixed-quota simulation.
//! * [`fixtures`]: synthetic corpora for tests and demos.
//! * [`report`]: the combined run and its JSON / CSV serializations.

pub mod bootstrap;
pub mod deviation;
pub mod diagnostics;
mod error;
pub mod fixtures;
pub mod ingest;
pub mod normal;
pub mod pbd;
pub mod quota;
pub mod report;
pub mod rng;
pub mod stats;

pub use bootstrap::{empirical_interval, run_bootstrap, BootstrapConfig, BootstrapResult, BootstrapSummary};
pub use deviation::{
    deviation_table, observed_count, per_stratum_tables, DeviationRow, DeviationTable, Scope,
    Sidedness, TestConfig,
};
pub use diagnostics::{
    attribute_correlation, deviation_sign_correlation, leave_one_out, size_share_correlation,
    CorrelationKind, CorrelationOutcome, CorrelationReport, LooReport,
};
pub use error::{Error, Result};
pub use fixtures::{generate, CorpusSpec, Regime};
pub use ingest::{
    build_dataset, parse_attributes, parse_departments, parse_roster, Dataset, DepartmentRecord,
    RosterFormat, Share, Stratum,
};
pub use normal::{normal_cdf, normal_p_value};
pub use pbd::{binomial_pmf, poisson_binomial_exact, sample_department, z_moment, CountDistribution, ZMoment};
pub use quota::{apply_quota, share_vectors, QuotaScenario, Weighting};
pub use report::{build_report, Report, RunConfig, Stages};
pub use rng::Stream;
