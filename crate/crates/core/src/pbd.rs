//! Binomial and Poisson-binomial kernels.
//!
//! The binomial pmf uses Loader's saddle-point expansion: the log of the
//! binomial coefficient is split into Stirling terms plus the Stirling
//! remainder `stirlerr`, and the power terms are folded into the
//! deviance `bd0`, which is evaluated by series near its minimum. This keeps
//! relative error near machine precision for every `n` instead of losing
//! digits in the cancellation of large log-gamma values. The result is
//! exponentiated once at the end; log-probabilities below `-745` underflow
//! to exactly zero.

use serde::{Deserialize, Serialize};

use crate::ingest::Stratum;
use crate::rng::Stream;
use crate::{Error, Result};

pub const DEFAULT_PBD_CAP: usize = 10_000;

/// `stirlerr(n) = ln n! − [(n + ½) ln n − n + ½ ln 2π]` for `n = 0..=15`,
/// from a 40-digit evaluation (entry 0 is unused).
const STIRLERR_SMALL: [f64; 16] = [
    0.0,
    0.081_061_466_795_327_258_219_670_26,
    0.041_340_695_955_409_294_093_822_08,
    0.027_677_925_684_998_339_148_789_29,
    0.020_790_672_103_765_093_111_522_77,
    0.016_644_691_189_821_192_163_194_87,
    0.013_876_128_823_070_747_998_745_73,
    0.011_896_709_945_891_770_095_055_72,
    0.010_411_265_261_972_096_497_478_57,
    0.009_255_462_182_712_732_917_728_637,
    0.008_330_563_433_362_871_256_469_319,
    0.007_573_675_487_951_840_794_972_024,
    0.006_942_840_107_209_529_865_664_153,
    0.006_408_994_188_004_207_068_439_631,
    0.005_951_370_112_758_847_735_624_416,
    0.005_554_733_551_962_801_371_038_69,
];

fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        return STIRLERR_SMALL[n as usize];
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x/m) + m − x`, by series when `x ≈ m`.
fn bd0(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                return next;
            }
            s = next;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

fn log_to_prob(lp: f64) -> f64 {
    if lp < -745.0 {
        0.0
    } else {
        lp.exp()
    }
}

/// `P(Binomial(n, p) = k)` for `0 ≤ k ≤ n`, `p ∈ [0, 1]` already checked.
pub(crate) fn pmf_unchecked(n: u32, k: u32, p: f64) -> f64 {
    let q = 1.0 - p;
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if q == 0.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let nf = n as f64;
    if k == 0 {
        if n == 0 {
            return 1.0;
        }
        let lc = if p < 0.1 { -bd0(nf, nf * q) - nf * p } else { nf * q.ln() };
        return log_to_prob(lc);
    }
    if k == n {
        let lc = if q < 0.1 { -bd0(nf, nf * p) - nf * q } else { nf * p.ln() };
        return log_to_prob(lc);
    }
    let x = k as f64;
    let lc = stirlerr(nf) - stirlerr(x) - stirlerr(nf - x) - bd0(x, nf * p) - bd0(nf - x, nf * q);
    let lf = (2.0 * std::f64::consts::PI).ln() + x.ln() + (-x / nf).ln_1p();
    log_to_prob(lc - 0.5 * lf)
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(format!("probability {p} outside [0, 1]")))
    }
}

/// `C(n, z) p^z (1 − p)^(n − z)`; zero outside `0..=n`.
pub fn binomial_pmf(n: u32, z: i64, p: f64) -> Result<f64> {
    check_probability(p)?;
    if z < 0 || z > n as i64 {
        return Ok(0.0);
    }
    Ok(pmf_unchecked(n, z as u32, p))
}

/// Moments of `H_z`, the number of departments in a stratum holding exactly
/// `z` minority members.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZMoment {
    pub z: i64,
    pub mean: f64,
    pub variance: f64,
}

impl ZMoment {
    fn from_probs(z: i64, probs: impl Iterator<Item = f64>) -> Self {
        let (mut mean, mut variance) = (0.0, 0.0);
        for p in probs {
            mean += p;
            variance += p * (1.0 - p);
        }
        ZMoment { z, mean, variance }
    }
}

pub fn z_moment(stratum: &Stratum, z: i64) -> ZMoment {
    z_moment_for_sizes(&stratum.sizes(), stratum.share().value(), z).expect("share in [0, 1]")
}

/// [`z_moment`] for an explicit size list and share.
pub fn z_moment_for_sizes(sizes: &[u32], p: f64, z: i64) -> Result<ZMoment> {
    check_probability(p)?;
    Ok(ZMoment::from_probs(z, sizes.iter().map(|&n| binomial_pmf(n, z, p).unwrap_or(0.0))))
}

/// `z_moment` for every `z` in `0..=z_max` in one pass over the departments.
pub fn z_moments(stratum: &Stratum, z_max: u32) -> Vec<ZMoment> {
    let p = stratum.share().value();
    let mut means = vec![0.0; z_max as usize + 1];
    let mut vars = vec![0.0; z_max as usize + 1];
    for d in &stratum.departments {
        for z in 0..=z_max.min(d.size) {
            let pz = pmf_unchecked(d.size, z, p);
            means[z as usize] += pz;
            vars[z as usize] += pz * (1.0 - pz);
        }
    }
    means
        .into_iter()
        .zip(vars)
        .enumerate()
        .map(|(z, (mean, variance))| ZMoment { z: z as i64, mean, variance })
        .collect()
}

/// A distribution on `0..=support_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountDistribution {
    pub probs: Vec<f64>,
}

impl CountDistribution {
    pub fn support_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.probs.iter().enumerate().map(|(k, p)| (k as f64 - m).powi(2) * p).sum()
    }

    pub fn binomial(n: u32, p: f64) -> Result<Self> {
        check_probability(p)?;
        Ok(CountDistribution { probs: (0..=n).map(|k| pmf_unchecked(n, k, p)).collect() })
    }
}

/// Exact law of a sum of independent Bernoulli variables, by convolving in
/// one trial at a time (`O(n²)`).
pub fn poisson_binomial_exact(probs: &[f64]) -> Result<CountDistribution> {
    poisson_binomial_exact_capped(probs, DEFAULT_PBD_CAP)
}

pub fn poisson_binomial_exact_capped(probs: &[f64], cap: usize) -> Result<CountDistribution> {
    if probs.len() > cap {
        return Err(Error::invalid(format!("{} trials exceed the cap of {cap}", probs.len())));
    }
    let mut pmf = Vec::with_capacity(probs.len() + 1);
    pmf.push(1.0);
    for &p in probs {
        check_probability(p)?;
        let q = 1.0 - p;
        pmf.push(0.0);
        for k in (1..pmf.len()).rev() {
            pmf[k] = pmf[k] * q + pmf[k - 1] * p;
        }
        pmf[0] *= q;
    }
    Ok(CountDistribution { probs: pmf })
}

/// Inversion sampler for `Binomial(n, p)` over a precomputed CDF table.
///
/// One uniform is consumed per draw, so draw `i` of a stream maps to a
/// fixed variate regardless of anything else going on.
#[derive(Debug, Clone)]
pub struct BinomialSampler {
    cdf: Vec<f64>,
}

impl BinomialSampler {
    pub fn new(n: u32, p: f64) -> Result<Self> {
        check_probability(p)?;
        let mut cdf = Vec::with_capacity(n as usize + 1);
        let mut acc = 0.0;
        let mut last_positive = 0;
        for k in 0..=n {
            let pk = pmf_unchecked(n, k, p);
            if pk > 0.0 {
                last_positive = k as usize;
            }
            acc += pk;
            cdf.push(acc);
        }
        // rounding must not leave mass beyond the support
        for c in &mut cdf[last_positive..] {
            *c = 1.0;
        }
        Ok(BinomialSampler { cdf })
    }

    #[inline]
    pub fn sample(&self, stream: &mut Stream) -> u32 {
        let u = stream.next_f64();
        if self.cdf.len() <= 64 {
            self.cdf.iter().position(|&c| u < c).unwrap_or(self.cdf.len() - 1) as u32
        } else {
            self.cdf.partition_point(|&c| c <= u) as u32
        }
    }
}

/// One `Binomial(size, p)` draw.
pub fn sample_department(size: u32, p: f64, stream: &mut Stream) -> Result<u32> {
    Ok(BinomialSampler::new(size, p)?.sample(stream))
}
