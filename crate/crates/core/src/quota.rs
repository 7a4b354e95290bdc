//! Counterfactual fixed-quota simulation.
//!
//! Every department's minority count is replaced by `min(q, n_ds)` and the
//! stratum shares are recomputed. Because the quota is per department, a
//! stratum of small departments ends up with a much larger share than one of
//! large departments: with every department above `q`, the share is exactly
//! `q / mean size`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::ingest::{Dataset, Share};
use crate::{Error, Result};

pub const DEFAULT_QUOTA: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Plain mean of per-stratum shares.
    #[default]
    Unweighted,
    /// Pooled share over all departments.
    SizeWeighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumQuota {
    pub key: String,
    pub actual: Share,
    pub simulated: Share,
    /// Counterfactual count per department, in dataset order.
    pub counts: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotaScenario {
    pub quota: u32,
    pub weighting: Weighting,
    pub strata: Vec<StratumQuota>,
    pub mean_share_actual: f64,
    pub mean_share_sim: f64,
}

impl QuotaScenario {
    pub fn simulated_share(&self, key: &str) -> Option<f64> {
        self.strata.iter().find(|s| s.key == key).map(|s| s.simulated.value())
    }

    /// `discipline,actual_share,simulated_share`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["discipline", "actual_share", "simulated_share"])?;
        for s in &self.strata {
            w.write_record([s.key.clone(), format!("{:?}", s.actual.value()), format!("{:?}", s.simulated.value())])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn mean_share(shares: &[Share], weighting: Weighting) -> f64 {
    match weighting {
        Weighting::Unweighted => shares.iter().map(Share::value).sum::<f64>() / shares.len() as f64,
        Weighting::SizeWeighted => {
            let minority: u64 = shares.iter().map(|s| s.minority).sum();
            let total: u64 = shares.iter().map(|s| s.total).sum();
            minority as f64 / total as f64
        }
    }
}

pub fn apply_quota(dataset: &Dataset, quota: u32, weighting: Weighting) -> QuotaScenario {
    let strata: Vec<StratumQuota> = dataset
        .strata
        .iter()
        .map(|s| {
            let counts: Vec<u32> = s.departments.iter().map(|d| quota.min(d.size)).collect();
            let minority = counts.iter().map(|&c| c as u64).sum();
            StratumQuota {
                key: s.key.clone(),
                actual: s.share(),
                simulated: Share::new(minority, s.total_size),
                counts,
            }
        })
        .collect();
    let actual: Vec<Share> = strata.iter().map(|s| s.actual).collect();
    let simulated: Vec<Share> = strata.iter().map(|s| s.simulated).collect();
    QuotaScenario {
        quota,
        weighting,
        mean_share_actual: mean_share(&actual, weighting),
        mean_share_sim: mean_share(&simulated, weighting),
        strata,
    }
}

/// Aligned `(actual, simulated)` share vectors in stratum order.
pub fn share_vectors(dataset: &Dataset, scenario: &QuotaScenario) -> Result<(Vec<f64>, Vec<f64>)> {
    let matches = dataset.strata.len() == scenario.strata.len()
        && dataset.strata.iter().zip(&scenario.strata).all(|(s, q)| {
            s.key == q.key && s.total_size == q.simulated.total && s.n_units() == q.counts.len()
        });
    if !matches {
        return Err(Error::invalid("quota scenario was not built from this dataset"));
    }
    Ok(scenario.strata.iter().map(|s| (s.actual.value(), s.simulated.value())).unzip())
}
