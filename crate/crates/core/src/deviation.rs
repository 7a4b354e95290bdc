//! Observed versus expected department counts and the asymptotic test.
//!
//! For each `z`, `H_z` is the number of departments with exactly `z`
//! minority members. Under random hiring its expectation and variance are
//! the Poisson-binomial moments from [`crate::pbd`]. Summed over strata,
//!
//! ```text
//!   t_z = √S · (H̄_z − f̄_z) / sqrt(Σ_s Var(H_zs) / S) = (H_z − f_z) / sqrt(Var(H_z))
//! ```
//!
//! is asymptotically standard normal as the number of strata grows.

use serde::{Deserialize, Serialize};

use crate::ingest::{Dataset, Stratum};
use crate::normal::normal_p_value;
pub use crate::normal::Sidedness;
use crate::pbd::z_moments;
use crate::{Error, Result};

pub const DEFAULT_Z_MAX: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestConfig {
    pub z_max: u32,
    pub sidedness: Sidedness,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig { z_max: DEFAULT_Z_MAX, sidedness: Sidedness::TwoSided }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "stratum", rename_all = "snake_case")]
pub enum Scope {
    Overall,
    Stratum(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationRow {
    pub z: u32,
    pub observed: u64,
    pub expected: f64,
    pub variance: f64,
    pub deviation: f64,
    /// `None` when the variance is zero.
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
}

impl DeviationRow {
    fn new(z: u32, observed: u64, expected: f64, variance: f64, sidedness: Sidedness) -> Self {
        let deviation = observed as f64 - expected;
        let statistic = (variance > 0.0).then(|| deviation / variance.sqrt());
        let p_value = statistic.map(|t| normal_p_value(t, sidedness).expect("finite statistic"));
        DeviationRow { z, observed, expected, variance, deviation, statistic, p_value }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationTable {
    pub scope: Scope,
    pub sidedness: Sidedness,
    pub rows: Vec<DeviationRow>,
    /// Departments (in the strata used) holding more than `z_max` members.
    pub residual_count: u64,
    pub strata_used: usize,
    /// Degenerate strata left out of every sum.
    pub excluded_strata: Vec<String>,
}

impl DeviationTable {
    pub fn row(&self, z: u32) -> Option<&DeviationRow> {
        self.rows.get(z as usize)
    }
}

/// `H_zs`: departments in the stratum with exactly `z` minority members.
pub fn observed_count(stratum: &Stratum, z: i64) -> u64 {
    stratum.departments.iter().filter(|d| d.minority as i64 == z).count() as u64
}

/// Observed histogram for `0..=z_max` plus the count above `z_max`.
pub(crate) fn observed_histogram(stratum: &Stratum, z_max: u32) -> (Vec<u64>, u64) {
    let mut hist = vec![0u64; z_max as usize + 1];
    let mut residual = 0;
    for d in &stratum.departments {
        match hist.get_mut(d.minority as usize) {
            Some(slot) => *slot += 1,
            None => residual += 1,
        }
    }
    (hist, residual)
}

/// Per-stratum sums that make up the overall table.
struct Accumulator {
    observed: Vec<u64>,
    expected: Vec<f64>,
    variance: Vec<f64>,
    residual: u64,
}

impl Accumulator {
    fn new(z_max: u32) -> Self {
        let len = z_max as usize + 1;
        Accumulator { observed: vec![0; len], expected: vec![0.0; len], variance: vec![0.0; len], residual: 0 }
    }

    fn add(&mut self, stratum: &Stratum, z_max: u32) {
        let (hist, residual) = observed_histogram(stratum, z_max);
        for (z, m) in z_moments(stratum, z_max).into_iter().enumerate() {
            self.observed[z] += hist[z];
            self.expected[z] += m.mean;
            self.variance[z] += m.variance;
        }
        self.residual += residual;
    }

    fn finish(self, scope: Scope, config: &TestConfig, strata_used: usize, excluded: Vec<String>) -> DeviationTable {
        let rows = (0..=config.z_max)
            .map(|z| {
                let i = z as usize;
                DeviationRow::new(z, self.observed[i], self.expected[i], self.variance[i], config.sidedness)
            })
            .collect();
        DeviationTable {
            scope,
            sidedness: config.sidedness,
            rows,
            residual_count: self.residual,
            strata_used,
            excluded_strata: excluded,
        }
    }
}

/// The overall table, summed over non-degenerate strata.
pub fn deviation_table(dataset: &Dataset, config: &TestConfig) -> Result<DeviationTable> {
    let excluded = dataset.degenerate_strata();
    let mut acc = Accumulator::new(config.z_max);
    let mut used = 0;
    for (_, stratum) in dataset.active_strata() {
        acc.add(stratum, config.z_max);
        used += 1;
    }
    if used == 0 {
        return Err(Error::Degenerate("every stratum has share 0 or 1; nothing to test".into()));
    }
    Ok(acc.finish(Scope::Overall, config, used, excluded))
}

/// The table for a single stratum (degenerate strata included as-is: every
/// row then has zero variance).
pub fn stratum_table(stratum: &Stratum, config: &TestConfig) -> DeviationTable {
    let mut acc = Accumulator::new(config.z_max);
    acc.add(stratum, config.z_max);
    acc.finish(Scope::Stratum(stratum.key.clone()), config, 1, Vec::new())
}

/// One table per non-degenerate stratum, in dataset order.
pub fn per_stratum_tables(dataset: &Dataset, config: &TestConfig) -> Result<Vec<DeviationTable>> {
    let tables: Vec<_> = dataset.active_strata().map(|(_, s)| stratum_table(s, config)).collect();
    if tables.is_empty() {
        return Err(Error::Degenerate("every stratum has share 0 or 1; nothing to test".into()));
    }
    Ok(tables)
}
