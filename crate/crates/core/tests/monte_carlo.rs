//! Statistical behaviour under simulated null and quota worlds. Seeds are
//! fixed, so every run sees the same samples.

use quotascan_core::stats::{ks_p_value, ks_statistic};
use quotascan_core::{
    deviation_sign_correlation, deviation_table, generate, leave_one_out, per_stratum_tables, run_bootstrap,
    size_share_correlation, BootstrapConfig, CorpusSpec, Regime, TestConfig,
};

fn medium(seed: u64) -> CorpusSpec {
    CorpusSpec {
        n_strata: 10,
        departments_per_stratum: (15, 25),
        seed,
        ..Default::default()
    }
}

#[test]
fn bootstrap_mean_converges_to_expected_counts() {
    let ds = generate(&medium(11)).unwrap();
    let table = deviation_table(&ds, &TestConfig { z_max: 6, ..Default::default() }).unwrap();
    let cfg = BootstrapConfig { z_max: 6, draws: 10_000, seed: 5, ..Default::default() };
    let res = run_bootstrap(&ds, &cfg).unwrap();
    for (row, sum) in table.rows.iter().zip(&res.summaries) {
        assert!((row.expected - sum.expected).abs() < 1e-9);
        let se = (row.variance / cfg.draws as f64).sqrt();
        assert!(sum.mean_of_draws.abs() < 4.0 * se, "z={} mean dev {} se {se}", row.z, sum.mean_of_draws);
    }
}

#[test]
fn bootstrap_and_asymptotic_p_values_agree_at_small_z() {
    let reps = 40;
    let mut close = [0usize; 3];
    for rep in 0..reps {
        let ds = generate(&CorpusSpec::full_scale(Regime::NullRandom, 1000 + rep)).unwrap();
        let table = deviation_table(&ds, &TestConfig { z_max: 2, ..Default::default() }).unwrap();
        let boot = run_bootstrap(&ds, &BootstrapConfig { z_max: 2, draws: 1000, seed: rep, ..Default::default() }).unwrap();
        for z in 0..3 {
            let asym = table.rows[z].p_value.unwrap();
            if (boot.summaries[z].empirical_p - asym).abs() < 0.05 {
                close[z] += 1;
            }
        }
    }
    for (z, &c) in close.iter().enumerate() {
        assert!(c as f64 >= 0.9 * reps as f64, "z={z}: {c}/{reps} within 0.05");
    }
}

#[test]
fn quota_world_bootstrap_rejects() {
    let ds = generate(&CorpusSpec::full_scale(Regime::SoftQuota { q: 2, leak: 0.5 }, 7)).unwrap();
    let boot = run_bootstrap(&ds, &BootstrapConfig { z_max: 3, draws: 2000, ..Default::default() }).unwrap();
    let s2 = &boot.summaries[2];
    assert!(s2.observed_deviation > s2.interval.1);
    assert!(s2.empirical_p < 0.01);
    assert!(boot.summaries[0].observed_deviation < boot.summaries[0].interval.0);
}

/// Deviation tables from one null corpus paired with the shares of an
/// independent one: the sign indicator and the share are independent by
/// construction, so the correlation test should reject at its nominal rate.
#[test]
fn deviation_sign_correlation_is_calibrated() {
    let reps = 500;
    let cfg = TestConfig { z_max: 3, ..Default::default() };
    let mut rejections = 0;
    let mut ps = Vec::with_capacity(reps as usize);
    for rep in 0..reps {
        let a = generate(&CorpusSpec { n_strata: 50, departments_per_stratum: (8, 12), seed: 2 * rep, ..Default::default() }).unwrap();
        let b = generate(&CorpusSpec { n_strata: 50, departments_per_stratum: (8, 12), seed: 2 * rep + 1, ..Default::default() }).unwrap();
        let tables = per_stratum_tables(&a, &cfg).unwrap();
        let p = deviation_sign_correlation(&b, &tables, 0).unwrap().p_value().unwrap();
        ps.push(p);
        if p < 0.05 {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / reps as f64;
    assert!((0.02..=0.08).contains(&rate), "rejection rate {rate}");
    let ks = ks_p_value(ks_statistic(&ps, |x| x.clamp(0.0, 1.0)), ps.len());
    assert!(ks >= 0.01, "KS p = {ks}");
}

#[test]
fn size_share_correlation_null_rate() {
    let reps = 400;
    let mut rejections = 0;
    for rep in 0..reps {
        let ds = generate(&CorpusSpec { n_strata: 50, departments_per_stratum: (8, 12), seed: rep, ..Default::default() }).unwrap();
        if size_share_correlation(&ds).unwrap().p_value().unwrap() < 0.05 {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / reps as f64;
    assert!((0.02..=0.08).contains(&rate), "rejection rate {rate}");
}

#[test]
fn leave_one_out_spread_at_large_stratum_scale() {
    // an economics-like discipline: share 0.1838, ~90 departments of about 22
    let ds = generate(&CorpusSpec {
        n_strata: 1,
        departments_per_stratum: (90, 90),
        size_range: (15, 29),
        share_range: (0.1838, 0.1838),
        seed: 3,
        ..Default::default()
    })
    .unwrap();
    let r = leave_one_out(&ds.strata[0], 0.05).unwrap();
    assert!((3e-4..3e-3).contains(&r.std_dev), "{}", r.std_dev);
    assert_eq!(r.reject_fraction, 0.0);
}
