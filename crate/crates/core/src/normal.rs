//! Standard normal CDF and p-values.
//!
//! `Φ(x) = erfc(-x / √2) / 2`, with `erfc` from `libm` (the musl/FreeBSD
//! routine, within an ulp or two over the whole line).
//! Going through `erfc` rather than `1 + erf` keeps the lower tail accurate.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// How a standardized deviation is turned into a p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    /// `2·Φ(−|t|)`.
    #[default]
    TwoSided,
    /// `Φ(−t)`: evidence for a positive deviation only.
    OneSidedDirectional,
}

impl std::str::FromStr for Sidedness {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two" | "two-sided" | "two_sided" => Ok(Sidedness::TwoSided),
            "one" | "one-sided" | "one_sided" | "one_sided_directional" => {
                Ok(Sidedness::OneSidedDirectional)
            }
            other => Err(Error::invalid(format!("unknown sidedness {other:?}"))),
        }
    }
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn normal_p_value(statistic: f64, sidedness: Sidedness) -> Result<f64> {
    if statistic.is_nan() {
        return Err(Error::invalid("p-value of NaN statistic"));
    }
    let p = match sidedness {
        Sidedness::TwoSided => 2.0 * normal_cdf(-statistic.abs()),
        Sidedness::OneSidedDirectional => normal_cdf(-statistic),
    };
    Ok(p.min(1.0))
}
