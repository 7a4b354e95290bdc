#![allow(dead_code)]

use num_bigint::BigUint;
use quotascan_core::{build_dataset, Dataset, DepartmentRecord};

/// Distribution of a sum of independent Bernoullis by enumerating all 2^n
/// outcomes.
pub fn brute_force_pbd(probs: &[f64]) -> Vec<f64> {
    let n = probs.len();
    let mut out = vec![0.0; n + 1];
    for mask in 0u32..(1 << n) {
        let mut w = 1.0;
        for (i, &p) in probs.iter().enumerate() {
            w *= if mask >> i & 1 == 1 { p } else { 1.0 - p };
        }
        out[mask.count_ones() as usize] += w;
    }
    out
}

fn big_to_f64(x: &BigUint) -> f64 {
    x.to_u64_digits().iter().rev().fold(0.0, |acc, &d| acc * 18446744073709551616.0 + d as f64)
}

/// `num / den` correctly to about 70 bits before the final rounding.
pub fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.bits() == 0 {
        return 0.0;
    }
    let shift = (den.bits() as i64 - num.bits() as i64 + 72).max(0) as u32;
    let q: BigUint = (num << shift) / den;
    let mut v = big_to_f64(&q);
    // scale by 2^-shift in steps that stay in the normal range
    let mut s = shift;
    while s > 0 {
        let step = s.min(1000);
        v *= 2f64.powi(-(step as i32));
        s -= step;
    }
    v
}

fn binomial_coefficient(n: u32, k: u32) -> BigUint {
    let mut c = BigUint::from(1u32);
    for i in 0..k {
        c = c * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    c
}

/// Exact `C(n,k) a^k (d−a)^(n−k) / d^n` for the rational share `a/d`.
pub fn exact_binomial_pmf(n: u32, k: u32, a: u32, d: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let num = binomial_coefficient(n, k) * BigUint::from(a).pow(k) * BigUint::from(d - a).pow(n - k);
    let den = BigUint::from(d).pow(n);
    ratio_to_f64(&num, &den)
}

/// Φ via the all-positive-terms series
/// `erf(x) = 2/√π · e^{−x²} · Σ_n 2^n x^{2n+1} / (2n+1)!!`, summed with
/// Kahan compensation.
pub fn phi_reference(x: f64) -> f64 {
    let u = (x / std::f64::consts::SQRT_2).abs();
    if u == 0.0 {
        return 0.5;
    }
    let u2 = u * u;
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    let mut term = u;
    let mut n = 0u32;
    loop {
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        n += 1;
        term *= 2.0 * u2 / (2 * n + 1) as f64;
        if term < sum * 1e-18 && n as f64 > u2 {
            break;
        }
    }
    let erf = 2.0 / std::f64::consts::PI.sqrt() * (-u2).exp() * sum;
    if x >= 0.0 {
        0.5 + 0.5 * erf
    } else {
        0.5 - 0.5 * erf
    }
}

/// Strata given as `(key, sizes, minorities)`, no size filter.
pub fn dataset(strata: &[(&str, Vec<u32>, Vec<u32>)]) -> Dataset {
    let mut recs = Vec::new();
    for (key, sizes, minorities) in strata {
        for (i, (&n, &y)) in sizes.iter().zip(minorities).enumerate() {
            recs.push(DepartmentRecord::new(*key, format!("u{i:03}"), n, y));
        }
    }
    build_dataset(recs, 1).unwrap()
}
