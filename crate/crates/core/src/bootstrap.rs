//! Parametric bootstrap under the null.
//!
//! Replication `b` redraws every department's count from
//! `Binomial(n_ds, p̂_s)`, recounts `H*_z` and records the summed deviation
//! `Σ_s (H*_zs − f_zs)` against the analytical expectation. The observed
//! deviation is then located in the resulting distribution.
//!
//! Department `d` of stratum `s` in replication `b` draws from the stream
//! keyed by `(seed, b, s, d)`, so the output is bitwise identical whatever
//! the thread count. The bootstrap deviations are integer counts shifted by
//! a constant, so per-`z` histograms of the counts are an exact, compact
//! summary: intervals and p-values come from them, and the raw draw vectors
//! are only kept (for export) when they fit under `draw_cap`.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deviation::observed_histogram;
use crate::ingest::{Dataset, Stratum};
use crate::normal::Sidedness;
use crate::pbd::{z_moments, BinomialSampler};
use crate::rng::{Domain, KeyPrefix};
use crate::{Error, Result};

pub const MIN_DRAWS: usize = 100;
pub const DEFAULT_DRAWS: usize = 10_000;
pub const DEFAULT_LEVEL: f64 = 0.9;
pub const DEFAULT_DRAW_CAP: usize = 1_000_000;

const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub z_max: u32,
    pub draws: usize,
    pub seed: u64,
    pub level: f64,
    pub sidedness: Sidedness,
    /// Also resample degenerate strata (their counts never move).
    pub include_degenerate: bool,
    /// Maximum number of raw deviations (`draws × (z_max + 1)`) kept for export.
    pub draw_cap: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            z_max: crate::deviation::DEFAULT_Z_MAX,
            draws: DEFAULT_DRAWS,
            seed: 0,
            level: DEFAULT_LEVEL,
            sidedness: Sidedness::TwoSided,
            include_degenerate: false,
            draw_cap: DEFAULT_DRAW_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub z: u32,
    pub draws: usize,
    pub expected: f64,
    pub observed_deviation: f64,
    pub mean_of_draws: f64,
    pub interval: (f64, f64),
    pub empirical_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub config: BootstrapConfig,
    pub summaries: Vec<BootstrapSummary>,
    /// `raw_deviations[z][b]`, present when under the draw cap.
    #[serde(skip)]
    pub raw_deviations: Option<Vec<Vec<f64>>>,
    pub warnings: Vec<String>,
}

impl BootstrapResult {
    pub fn summary(&self, z: u32) -> Option<&BootstrapSummary> {
        self.summaries.get(z as usize)
    }

    /// Writes `z,replication,deviation` rows (replications numbered from 1).
    pub fn write_draws_csv<W: Write>(&self, out: W) -> Result<()> {
        let raw = self.raw_deviations.as_ref().ok_or_else(|| {
            Error::invalid("raw draws were not retained (draws × (z_max + 1) exceeds the draw cap)")
        })?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["z", "replication", "deviation"])?;
        for (z, devs) in raw.iter().enumerate() {
            for (b, d) in devs.iter().enumerate() {
                w.write_record([z.to_string(), (b + 1).to_string(), format!("{d:?}")])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// 1-based nearest rank `ceil(q·n)`, clamped to `1..=n`. The small offset
/// keeps `q·n` that should be an integer (e.g. `0.95 × 100`) from rounding
/// up past it.
fn nearest_rank(q: f64, n: usize) -> usize {
    ((q * n as f64 - 1e-9).ceil() as usize).clamp(1, n)
}

fn interval_ranks(level: f64, n: usize) -> (usize, usize) {
    let tail = (1.0 - level) / 2.0;
    (nearest_rank(tail, n), nearest_rank(1.0 - tail, n))
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("interval level {level} must lie in (0, 1)")))
    }
}

/// Percentile interval by the nearest-rank rule: the endpoints are the
/// order statistics of rank `ceil(n·(1−level)/2)` and `ceil(n·(1+level)/2)`.
pub fn empirical_interval(draws: &[f64], level: f64) -> Result<(f64, f64)> {
    if draws.is_empty() {
        return Err(Error::invalid("empirical interval of an empty sample"));
    }
    check_level(level)?;
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = interval_ranks(level, sorted.len());
    Ok((sorted[lo - 1], sorted[hi - 1]))
}

/// Count value at a 1-based rank of a histogram.
fn histogram_rank(hist: &BTreeMap<u64, u64>, rank: usize) -> u64 {
    let mut seen = 0u64;
    for (&value, &freq) in hist {
        seen += freq;
        if seen >= rank as u64 {
            return value;
        }
    }
    unreachable!("rank beyond histogram total")
}

/// Per-stratum department samplers, shared across replications.
struct StratumPlan {
    index: u64,
    samplers: Vec<usize>,
    table: Vec<BinomialSampler>,
}

impl StratumPlan {
    fn new(index: usize, stratum: &Stratum) -> Result<Self> {
        let p = stratum.share().value();
        let mut by_size: HashMap<u32, usize> = HashMap::new();
        let mut table = Vec::new();
        let mut samplers = Vec::with_capacity(stratum.n_units());
        for d in &stratum.departments {
            let slot = match by_size.get(&d.size) {
                Some(&slot) => slot,
                None => {
                    table.push(BinomialSampler::new(d.size, p)?);
                    by_size.insert(d.size, table.len() - 1);
                    table.len() - 1
                }
            };
            samplers.push(slot);
        }
        Ok(StratumPlan { index: index as u64, samplers, table })
    }
}

/// `H*_z` for `z = 0..=z_max`, summed over strata, for one replication.
fn replicate(plans: &[StratumPlan], seed: u64, replication: u64, z_max: u32) -> Vec<u32> {
    let mut counts = vec![0u32; z_max as usize + 1];
    let base = KeyPrefix::new(seed, Domain::Bootstrap).push(replication);
    for plan in plans {
        let stratum_key = base.push(plan.index);
        for (d, &slot) in plan.samplers.iter().enumerate() {
            let mut stream = stratum_key.push(d as u64).stream();
            let y = plan.table[slot].sample(&mut stream);
            if let Some(c) = counts.get_mut(y as usize) {
                *c += 1;
            }
        }
    }
    counts
}

pub fn run_bootstrap(dataset: &Dataset, config: &BootstrapConfig) -> Result<BootstrapResult> {
    if config.draws < MIN_DRAWS {
        return Err(Error::invalid(format!("{} bootstrap draws; at least {MIN_DRAWS} required", config.draws)));
    }
    check_level(config.level)?;

    let included: Vec<(usize, &Stratum)> = dataset
        .strata
        .iter()
        .enumerate()
        .filter(|(_, s)| config.include_degenerate || !s.is_degenerate())
        .collect();
    if included.is_empty() {
        return Err(Error::Degenerate("every stratum has share 0 or 1; nothing to resample".into()));
    }

    let n_z = config.z_max as usize + 1;
    let mut expected = vec![0.0; n_z];
    let mut observed = vec![0u64; n_z];
    let mut plans = Vec::with_capacity(included.len());
    for &(index, stratum) in &included {
        for (z, m) in z_moments(stratum, config.z_max).into_iter().enumerate() {
            expected[z] += m.mean;
        }
        for (z, h) in observed_histogram(stratum, config.z_max).0.into_iter().enumerate() {
            observed[z] += h;
        }
        plans.push(StratumPlan::new(index, stratum)?);
    }

    let keep_raw = config.draws.saturating_mul(n_z) <= config.draw_cap;
    let mut warnings = Vec::new();
    if !keep_raw {
        warnings.push(format!(
            "{} raw deviations exceed the draw cap of {}; raw draw export disabled",
            config.draws.saturating_mul(n_z),
            config.draw_cap
        ));
    }
    let mut raw: Vec<Vec<f64>> = if keep_raw { vec![Vec::with_capacity(config.draws); n_z] } else { Vec::new() };
    let mut histograms: Vec<BTreeMap<u64, u64>> = vec![BTreeMap::new(); n_z];

    for start in (1..=config.draws).step_by(CHUNK) {
        let end = (start + CHUNK).min(config.draws + 1);
        let chunk: Vec<Vec<u32>> = (start..end)
            .into_par_iter()
            .map(|b| replicate(&plans, config.seed, b as u64, config.z_max))
            .collect();
        for counts in chunk {
            for (z, &c) in counts.iter().enumerate() {
                *histograms[z].entry(c as u64).or_default() += 1;
                if keep_raw {
                    raw[z].push(c as f64 - expected[z]);
                }
            }
        }
    }

    let b = config.draws;
    let (lo_rank, hi_rank) = interval_ranks(config.level, b);
    let summaries = (0..n_z)
        .map(|z| {
            let hist = &histograms[z];
            let f = expected[z];
            let observed_deviation = observed[z] as f64 - f;
            let total: u64 = hist.iter().map(|(&c, &n)| c * n).sum();
            let exceed: u64 = hist
                .iter()
                .filter(|(&c, _)| match config.sidedness {
                    Sidedness::TwoSided => (c as f64 - f).abs() >= observed_deviation.abs(),
                    Sidedness::OneSidedDirectional => c >= observed[z],
                })
                .map(|(_, &n)| n)
                .sum();
            BootstrapSummary {
                z: z as u32,
                draws: b,
                expected: f,
                observed_deviation,
                mean_of_draws: total as f64 / b as f64 - f,
                interval: (
                    histogram_rank(hist, lo_rank) as f64 - f,
                    histogram_rank(hist, hi_rank) as f64 - f,
                ),
                empirical_p: (1 + exceed) as f64 / (b + 1) as f64,
            }
        })
        .collect();

    Ok(BootstrapResult { config: *config, summaries, raw_deviations: keep_raw.then_some(raw), warnings })
}
