//! Synthetic corpora.
//!
//! `NullRandom` draws each department's count from `Binomial(n_ds, p_s)`;
//! `HardQuota(q)` sets it to `min(q, n_ds)`; `SoftQuota` applies the hard
//! quota but lets each department independently fall back to a binomial
//! draw with the given leak probability. All randomness comes from
//! fixture-domain streams keyed by the seed and the stratum/department
//! indices, so a spec always yields the same corpus.

use serde::{Deserialize, Serialize};

use crate::ingest::{build_dataset, Dataset, DepartmentRecord, DEFAULT_MIN_SIZE};
use crate::pbd::BinomialSampler;
use crate::rng::{Domain, KeyPrefix};
use crate::{Error, Result};

/// Share span of the disciplines in the motivating application.
pub const DEFAULT_SHARE_RANGE: (f64, f64) = (0.07, 0.49);

/// Department sizes of the worked example; the remaining departments are
/// drawn from the same 20–36 span.
pub const EXAMPLE_SIZES_PREFIX: [u32; 6] = [20, 23, 30, 34, 32, 36];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regime {
    NullRandom,
    HardQuota { q: u32 },
    SoftQuota { q: u32, leak: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub n_strata: usize,
    /// Inclusive range.
    pub departments_per_stratum: (usize, usize),
    /// Inclusive range of department sizes.
    pub size_range: (u32, u32),
    /// Stratum shares are drawn uniformly from `[lo, hi)`.
    pub share_range: (f64, f64),
    pub regime: Regime,
    pub seed: u64,
    pub min_size: u32,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            n_strata: 50,
            departments_per_stratum: (30, 40),
            size_range: (5, 40),
            share_range: DEFAULT_SHARE_RANGE,
            regime: Regime::NullRandom,
            seed: 0,
            min_size: DEFAULT_MIN_SIZE,
        }
    }
}

impl CorpusSpec {
    /// 50 strata of 30–40 departments (about 1750 in total), sizes 5–40.
    pub fn full_scale(regime: Regime, seed: u64) -> Self {
        CorpusSpec { regime, seed, ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        let infeasible = |msg: String| Err(Error::invalid(format!("infeasible corpus spec: {msg}")));
        let (dlo, dhi) = self.departments_per_stratum;
        let (slo, shi) = self.size_range;
        let (plo, phi) = self.share_range;
        if self.n_strata == 0 {
            return infeasible("no strata".into());
        }
        if dlo == 0 || dlo > dhi {
            return infeasible(format!("departments per stratum {dlo}..={dhi}"));
        }
        if slo > shi {
            return infeasible(format!("size range {slo}..={shi}"));
        }
        if slo < self.min_size {
            return infeasible(format!("sizes from {slo} fall below the minimum size {}", self.min_size));
        }
        if !(0.0..=1.0).contains(&plo) || !(0.0..=1.0).contains(&phi) || plo > phi {
            return infeasible(format!("share range [{plo}, {phi}]"));
        }
        if let Regime::SoftQuota { leak, .. } = self.regime {
            if !(0.0..=1.0).contains(&leak) {
                return infeasible(format!("leak probability {leak}"));
            }
        }
        Ok(())
    }
}

pub fn stratum_key(index: usize, n_strata: usize) -> String {
    let width = n_strata.to_string().len().max(2);
    format!("s{:0width$}", index + 1)
}

pub fn unit_key(index: usize) -> String {
    format!("u{:03}", index + 1)
}

fn department_count(regime: Regime, size: u32, share: f64, root: KeyPrefix, s: u64, d: u64) -> Result<u32> {
    let draw = || -> Result<u32> {
        let mut stream = root.push(2).push(s).push(d).stream();
        Ok(BinomialSampler::new(size, share)?.sample(&mut stream))
    };
    match regime {
        Regime::NullRandom => draw(),
        Regime::HardQuota { q } => Ok(q.min(size)),
        Regime::SoftQuota { q, leak } => {
            let leaks = root.push(3).push(s).push(d).stream().next_f64() < leak;
            if leaks {
                draw()
            } else {
                Ok(q.min(size))
            }
        }
    }
}

/// Department count and generating share of stratum `s`.
fn stratum_params(spec: &CorpusSpec, root: KeyPrefix, s: usize) -> (usize, f64) {
    let mut params = root.push(0).push(s as u64).stream();
    let (dlo, dhi) = spec.departments_per_stratum;
    let n_departments = params.next_range(dlo as u64, dhi as u64) as usize;
    let share = params.next_uniform(spec.share_range.0, spec.share_range.1);
    (n_departments, share)
}

/// The share each stratum of [`generate`]'s corpus was drawn with (not the
/// realized share).
pub fn generating_shares(spec: &CorpusSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let root = KeyPrefix::new(spec.seed, Domain::Fixture);
    Ok((0..spec.n_strata).map(|s| stratum_params(spec, root, s).1).collect())
}

pub fn generate(spec: &CorpusSpec) -> Result<Dataset> {
    spec.validate()?;
    let root = KeyPrefix::new(spec.seed, Domain::Fixture);
    let mut records = Vec::new();
    for s in 0..spec.n_strata {
        let (n_departments, share) = stratum_params(spec, root, s);
        let key = stratum_key(s, spec.n_strata);
        for d in 0..n_departments {
            let mut sizes = root.push(1).push(s as u64).push(d as u64).stream();
            let size = sizes.next_range(spec.size_range.0 as u64, spec.size_range.1 as u64) as u32;
            let count = department_count(spec.regime, size, share, root, s as u64, d as u64)?;
            records.push(DepartmentRecord::new(key.clone(), unit_key(d), size, count));
        }
    }
    build_dataset(records, spec.min_size)
}

/// One stratum of 20 departments at share 0.2, sizes starting with
/// [`EXAMPLE_SIZES_PREFIX`], counts drawn under random hiring.
pub fn example_one(seed: u64) -> Result<Dataset> {
    let root = KeyPrefix::new(seed, Domain::Fixture);
    let mut sizes_stream = root.push(10).stream();
    let sizes: Vec<u32> = EXAMPLE_SIZES_PREFIX
        .iter()
        .copied()
        .chain((EXAMPLE_SIZES_PREFIX.len()..20).map(|_| sizes_stream.next_range(20, 36) as u32))
        .collect();
    let mut records = Vec::with_capacity(sizes.len());
    for (d, &size) in sizes.iter().enumerate() {
        let count = department_count(Regime::NullRandom, size, 0.2, root, 0, d as u64)?;
        records.push(DepartmentRecord::new("s01", unit_key(d), size, count));
    }
    build_dataset(records, DEFAULT_MIN_SIZE)
}
