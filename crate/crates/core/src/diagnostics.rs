//! Independence and heterogeneity diagnostics.
//!
//! Leave-one-out: a department hiring from its own discipline's pool faces
//! the share of the pool *without* itself, `(W_s − y_ds) / (N_s − n_ds)`.
//! If those shares barely move, treating `p_s` as constant within a stratum
//! is harmless. Each leave-one-out share is compared with `p_s` by a pooled
//! two-proportion z-test; dispersion is reported as a population standard
//! deviation.
//!
//! Correlations are Pearson, with a `t`-test p-value on `n − 2` degrees of
//! freedom and a Fisher-z 95% interval.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::deviation::{DeviationTable, Scope};
use crate::ingest::{Dataset, Share, Stratum};
use crate::normal::{normal_p_value, Sidedness};
use crate::stats::{correlation_p_value, fisher_interval, pearson, population_std};
use crate::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.05;
const Z_975: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooReport {
    pub stratum_key: String,
    pub share: f64,
    pub loo_fractions: Vec<Share>,
    pub loo_shares: Vec<f64>,
    /// `Σ_d (W − y_d) / Σ_d (N − n_d)`, which always equals the stratum share.
    pub aggregate: Share,
    /// Population standard deviation of `loo_shares`.
    pub std_dev: f64,
    pub reject_fraction: f64,
    pub alpha: f64,
}

/// Pooled two-proportion z-test, two-sided.
fn two_proportion_p_value(x1: u64, n1: u64, x2: u64, n2: u64) -> f64 {
    let (p1, p2) = (x1 as f64 / n1 as f64, x2 as f64 / n2 as f64);
    let pooled = (x1 + x2) as f64 / (n1 + n2) as f64;
    let var = pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64);
    if var == 0.0 {
        return 1.0;
    }
    normal_p_value((p1 - p2) / var.sqrt(), Sidedness::TwoSided).expect("finite statistic")
}

/// `discipline,loo_std_dev,share`, one row per report.
pub fn write_loo_csv<W: Write>(reports: &[LooReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["discipline", "loo_std_dev", "share"])?;
    for r in reports {
        w.write_record([r.stratum_key.clone(), format!("{:?}", r.std_dev), format!("{:?}", r.share)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn leave_one_out(stratum: &Stratum, alpha: f64) -> Result<LooReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha {alpha} must lie in (0, 1)")));
    }
    if stratum.n_units() < 2 {
        return Err(Error::invalid(format!(
            "stratum {:?} needs at least two departments for leave-one-out",
            stratum.key
        )));
    }
    let (w, n) = (stratum.total_minority, stratum.total_size);
    let mut fractions = Vec::with_capacity(stratum.n_units());
    let mut rejections = 0usize;
    for d in &stratum.departments {
        let rest = n - d.size as u64;
        if rest == 0 {
            return Err(Error::invalid(format!(
                "department {:?} makes up all of stratum {:?}",
                d.unit_key, stratum.key
            )));
        }
        let rest_minority = w - d.minority as u64;
        if two_proportion_p_value(rest_minority, rest, w, n) < alpha {
            rejections += 1;
        }
        fractions.push(Share::new(rest_minority, rest));
    }
    let k = stratum.n_units() as u64;
    let aggregate = Share::new((k - 1) * w, (k - 1) * n);
    let loo_shares: Vec<f64> = fractions.iter().map(Share::value).collect();
    Ok(LooReport {
        stratum_key: stratum.key.clone(),
        share: stratum.share().value(),
        aggregate,
        std_dev: population_std(&loo_shares),
        reject_fraction: rejections as f64 / stratum.n_units() as f64,
        loo_fractions: fractions,
        loo_shares,
        alpha,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationKind {
    DeviationSignVsShare,
    SizeVsShare,
    AttributeVsDeviation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CorrelationOutcome {
    Defined {
        rho: f64,
        p_value: f64,
        ci_95: (f64, f64),
        /// `|rho| = 1`: the interval collapses to a point.
        boundary: bool,
    },
    Undefined {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub kind: CorrelationKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attribute: Option<String>,
    pub n: usize,
    pub outcome: CorrelationOutcome,
}

impl CorrelationReport {
    pub fn rho(&self) -> Option<f64> {
        match self.outcome {
            CorrelationOutcome::Defined { rho, .. } => Some(rho),
            CorrelationOutcome::Undefined { .. } => None,
        }
    }

    pub fn p_value(&self) -> Option<f64> {
        match self.outcome {
            CorrelationOutcome::Defined { p_value, .. } => Some(p_value),
            CorrelationOutcome::Undefined { .. } => None,
        }
    }
}

fn correlate(kind: CorrelationKind, z: Option<u32>, attribute: Option<String>, xs: &[f64], ys: &[f64]) -> Result<CorrelationReport> {
    let n = xs.len();
    if n < 3 {
        return Err(Error::invalid(format!("correlation needs at least 3 strata, got {n}")));
    }
    let outcome = match pearson(xs, ys) {
        Some(rho) => CorrelationOutcome::Defined {
            rho,
            p_value: correlation_p_value(rho, n),
            ci_95: fisher_interval(rho, n, Z_975),
            boundary: rho.abs() >= 1.0,
        },
        None => CorrelationOutcome::Undefined { reason: "one of the variables is constant across strata".into() },
    };
    Ok(CorrelationReport { kind, z, attribute, n, outcome })
}

/// Per-stratum deviation at `z`, paired with the stratum.
fn stratum_deviations<'a>(
    dataset: &'a Dataset,
    tables: &[DeviationTable],
    z: u32,
) -> Result<Vec<(&'a Stratum, f64)>> {
    let mut out = Vec::new();
    for table in tables {
        let Scope::Stratum(key) = &table.scope else { continue };
        let stratum = dataset
            .stratum(key)
            .ok_or_else(|| Error::invalid(format!("table for unknown stratum {key:?}")))?;
        if let Some(row) = table.row(z) {
            out.push((stratum, row.deviation));
        }
    }
    Ok(out)
}

/// Correlation between "fewer departments with `z` members than expected"
/// and the stratum share.
pub fn deviation_sign_correlation(dataset: &Dataset, tables: &[DeviationTable], z: u32) -> Result<CorrelationReport> {
    let pairs = stratum_deviations(dataset, tables, z)?;
    let indicator: Vec<f64> = pairs.iter().map(|(_, dev)| if *dev < 0.0 { 1.0 } else { 0.0 }).collect();
    let shares: Vec<f64> = pairs.iter().map(|(s, _)| s.share().value()).collect();
    correlate(CorrelationKind::DeviationSignVsShare, Some(z), None, &indicator, &shares)
}

/// Correlation between mean department size and share, across strata.
pub fn size_share_correlation(dataset: &Dataset) -> Result<CorrelationReport> {
    let sizes: Vec<f64> = dataset.strata.iter().map(Stratum::mean_size).collect();
    let shares: Vec<f64> = dataset.strata.iter().map(|s| s.share().value()).collect();
    correlate(CorrelationKind::SizeVsShare, None, None, &sizes, &shares)
}

/// Reads an attribute as a number: booleans map to 0/1.
pub fn attribute_value(raw: &str) -> Option<f64> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "y" => Some(1.0),
        "false" | "no" | "n" => Some(0.0),
        other => other.parse().ok().filter(|v: &f64| v.is_finite()),
    }
}

/// Correlation between a numeric (or boolean) stratum attribute and the
/// per-stratum deviation at `z`. Strata without the attribute are skipped.
pub fn attribute_correlation(
    dataset: &Dataset,
    tables: &[DeviationTable],
    attribute: &str,
    z: u32,
) -> Result<CorrelationReport> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (stratum, dev) in stratum_deviations(dataset, tables, z)? {
        let Some(raw) = stratum.attributes.get(attribute) else { continue };
        let value = attribute_value(raw).ok_or_else(|| {
            Error::invalid(format!("attribute {attribute:?} of {:?} is not numeric: {raw:?}", stratum.key))
        })?;
        xs.push(value);
        ys.push(dev);
    }
    correlate(CorrelationKind::AttributeVsDeviation, Some(z), Some(attribute.to_string()), &xs, &ys)
}
