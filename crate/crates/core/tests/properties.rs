mod common;

use proptest::prelude::*;
use quotascan_core::deviation::stratum_table;
use quotascan_core::ingest::{write_departments, write_roster};
use quotascan_core::stats::pearson;
use quotascan_core::{
    apply_quota, binomial_pmf, build_dataset, deviation_table, leave_one_out, parse_departments, parse_roster,
    poisson_binomial_exact, z_moment, Dataset, DepartmentRecord, RosterFormat, Share, Sidedness, Stream, TestConfig,
    Weighting,
};

/// A few strata, each with sizes and counts that are valid for each other.
fn records() -> impl Strategy<Value = Vec<DepartmentRecord>> {
    prop::collection::vec(prop::collection::vec((1u32..40, 0.0f64..=1.0), 2..12), 1..6).prop_map(|strata| {
        let mut recs = Vec::new();
        for (s, depts) in strata.into_iter().enumerate() {
            for (d, (n, frac)) in depts.into_iter().enumerate() {
                let y = (frac * n as f64).floor() as u32;
                recs.push(DepartmentRecord::new(format!("s{s}"), format!("u{d:02}"), n, y));
            }
        }
        recs
    })
}

fn dataset() -> impl Strategy<Value = Dataset> {
    records().prop_map(|r| build_dataset(r, 1).unwrap())
}

fn sizes_and_share() -> impl Strategy<Value = (Vec<u32>, u64, u64)> {
    prop::collection::vec(1u32..60, 1..30).prop_flat_map(|sizes| {
        let total: u64 = sizes.iter().map(|&n| n as u64).sum();
        (Just(sizes), 0..=total, Just(total))
    })
}

fn lcg_shuffle<T>(items: &mut [T], mut state: u64) {
    for i in (1..items.len()).rev() {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        items.swap(i, (state >> 33) as usize % (i + 1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pmf_sums_to_one(n in 0u32..=500, p in 0.0f64..=1.0) {
        let total: f64 = (0..=n as i64).map(|z| binomial_pmf(n, z, p).unwrap()).sum();
        prop_assert!((total - 1.0).abs() < 1e-12, "{}", total);
    }

    #[test]
    fn pmf_symmetry(n in 0u32..=500, z_frac in 0.0f64..=1.0, a in 0u32..=1000) {
        let z = (z_frac * n as f64).round() as i64;
        let p = a as f64 / 1000.0;
        let lhs = binomial_pmf(n, z, p).unwrap();
        let rhs = binomial_pmf(n, n as i64 - z, (1000 - a) as f64 / 1000.0).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-13);
    }

    #[test]
    fn z_means_sum_to_department_count(ds in dataset()) {
        for s in &ds.strata {
            let means: Vec<f64> = (0..=s.max_size() as i64).map(|z| z_moment(s, z).mean).collect();
            prop_assert!((means.iter().sum::<f64>() - s.n_units() as f64).abs() < 1e-9);
            // and the expected number of members is the observed total
            let members: f64 = means.iter().enumerate().map(|(z, m)| z as f64 * m).sum();
            prop_assert!((members - s.total_minority as f64).abs() < 1e-8);
        }
    }

    #[test]
    fn pbd_moments(probs in prop::collection::vec(0.0f64..=1.0, 0..300)) {
        let d = poisson_binomial_exact(&probs).unwrap();
        let mean: f64 = probs.iter().sum();
        let var: f64 = probs.iter().map(|p| p * (1.0 - p)).sum();
        prop_assert!((d.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!((d.mean() - mean).abs() < 1e-10);
        prop_assert!((d.variance() - var).abs() < 1e-10);
    }

    #[test]
    fn totals_are_exact(ds in dataset()) {
        for s in &ds.strata {
            prop_assert_eq!(s.departments.iter().map(|d| d.minority as u64).sum::<u64>(), s.total_minority);
            prop_assert_eq!(s.departments.iter().map(|d| d.size as u64).sum::<u64>(), s.total_size);
        }
    }

    #[test]
    fn roster_and_department_tables_agree(ds in dataset()) {
        let mut table = Vec::new();
        write_departments(&ds, &mut table).unwrap();
        let mut roster = Vec::new();
        let fmt = RosterFormat::default();
        write_roster(&ds, &fmt, &mut roster).unwrap();
        let a = build_dataset(parse_departments(&table[..]).unwrap(), 1).unwrap();
        let b = build_dataset(parse_roster(&roster[..], &fmt).unwrap(), 1).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&a, &ds);
    }

    #[test]
    fn record_order_is_irrelevant(recs in records(), seed in any::<u64>()) {
        let a = build_dataset(recs.clone(), 3);
        let mut shuffled = recs;
        lcg_shuffle(&mut shuffled, seed);
        let b = build_dataset(shuffled, 3);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                let cfg = TestConfig::default();
                prop_assert_eq!(deviation_table(&a, &cfg).ok(), deviation_table(&b, &cfg).ok());
                prop_assert_eq!(a, b);
            }
            (Err(a), Err(b)) => prop_assert_eq!(a.to_string(), b.to_string()),
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a.is_ok(), b.is_ok()),
        }
    }

    #[test]
    fn bucket_completeness(ds in dataset(), z_max in 0u32..15) {
        let cfg = TestConfig { z_max, sidedness: Sidedness::TwoSided };
        if let Ok(t) = deviation_table(&ds, &cfg) {
            let used: u64 = ds.active_strata().map(|(_, s)| s.n_units() as u64).sum();
            prop_assert_eq!(t.rows.iter().map(|r| r.observed).sum::<u64>() + t.residual_count, used);
            prop_assert_eq!(t.rows.len(), z_max as usize + 1);
        }
        for s in &ds.strata {
            let t = stratum_table(s, &cfg);
            prop_assert_eq!(t.rows.iter().map(|r| r.observed).sum::<u64>() + t.residual_count, s.n_units() as u64);
        }
    }

    #[test]
    fn statistic_shares_sign_with_deviation(ds in dataset()) {
        if let Ok(t) = deviation_table(&ds, &TestConfig::default()) {
            for r in &t.rows {
                if let Some(stat) = r.statistic {
                    prop_assert!(stat == 0.0 || stat.signum() == r.deviation.signum());
                    prop_assert!((stat - r.deviation / r.variance.sqrt()).abs() <= 1e-12 * stat.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn stratum_relabeling_keeps_p_values(recs in records()) {
        let Ok(a) = build_dataset(recs.clone(), 1) else { return Ok(()) };
        let relabeled: Vec<DepartmentRecord> = recs
            .into_iter()
            .map(|mut r| {
                r.stratum_key = format!("z{}", 99 - r.stratum_key[1..].parse::<u32>().unwrap());
                r
            })
            .collect();
        let b = build_dataset(relabeled, 1).unwrap();
        let cfg = TestConfig::default();
        if let (Ok(ta), Ok(tb)) = (deviation_table(&a, &cfg), deviation_table(&b, &cfg)) {
            for (ra, rb) in ta.rows.iter().zip(&tb.rows) {
                prop_assert_eq!(ra.observed, rb.observed);
                match (ra.p_value, rb.p_value) {
                    (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12),
                    (x, y) => prop_assert_eq!(x, y),
                }
            }
        }
    }

    #[test]
    fn loo_aggregate_identity((sizes, w, _) in sizes_and_share()) {
        prop_assume!(sizes.len() >= 2);
        let mut rest = w;
        let minorities: Vec<u32> = sizes
            .iter()
            .map(|&n| {
                let y = rest.min(n as u64) as u32;
                rest -= y as u64;
                y
            })
            .collect();
        let ds = common::dataset(&[("s", sizes.clone(), minorities.clone())]);
        let s = &ds.strata[0];
        let r = leave_one_out(s, 0.05).unwrap();
        let (num, den) = r.loo_fractions.iter().fold((0u64, 0u64), |(a, b), f| (a + f.minority, b + f.total));
        prop_assert!(Share::new(num, den).ratio_eq(&s.share()));
        prop_assert!(r.aggregate.ratio_eq(&s.share()));
        // removing an over-represented department lowers the share, and vice versa
        let share = s.share();
        for (d, f) in s.departments.iter().zip(&r.loo_fractions) {
            let own = Share::new(d.minority as u64, d.size as u64);
            let lhs = own.minority as u128 * share.total as u128;
            let rhs = share.minority as u128 * own.total as u128;
            let cross = |a: &Share, b: &Share| (a.minority as u128 * b.total as u128).cmp(&(b.minority as u128 * a.total as u128));
            prop_assert_eq!(cross(f, &share), rhs.cmp(&lhs));
        }
    }

    #[test]
    fn quota_monotone_and_capped(ds in dataset(), q in 0u32..10, extra in 0u32..10) {
        let lo = apply_quota(&ds, q, Weighting::Unweighted);
        let hi = apply_quota(&ds, q + extra, Weighting::Unweighted);
        for ((s, a), b) in ds.strata.iter().zip(&lo.strata).zip(&hi.strata) {
            for (d, &c) in s.departments.iter().zip(&a.counts) {
                prop_assert!(c <= d.size);
            }
            prop_assert!(a.simulated.value() <= b.simulated.value());
        }
    }

    #[test]
    fn quota_depends_only_on_size_multiset(sizes in prop::collection::vec(1u32..40, 1..15), q in 0u32..8, seed in any::<u64>()) {
        let mut shuffled = sizes.clone();
        lcg_shuffle(&mut shuffled, seed);
        let zeros = vec![0; sizes.len()];
        let ds = common::dataset(&[("a", sizes, zeros.clone()), ("b", shuffled, zeros)]);
        let sc = apply_quota(&ds, q, Weighting::Unweighted);
        prop_assert_eq!(sc.strata[0].simulated, sc.strata[1].simulated);
    }

    #[test]
    fn quota_share_decreases_with_mean_size(
        q in 1u32..5,
        small in prop::collection::vec(0u32..20, 1..10),
        bump in 1u32..5,
    ) {
        // every size exceeds q; the second stratum is uniformly larger
        let a: Vec<u32> = small.iter().map(|&x| q + 1 + x).collect();
        let b: Vec<u32> = a.iter().map(|&n| n + bump).collect();
        let zeros = vec![0; a.len()];
        let ds = common::dataset(&[("a", a.clone(), zeros.clone()), ("b", b, zeros)]);
        let sc = apply_quota(&ds, q, Weighting::Unweighted);
        let (sa, sb) = (&sc.strata[0], &sc.strata[1]);
        prop_assert!(sa.simulated.value() > sb.simulated.value());
        prop_assert!(sa.simulated.ratio_eq(&Share::new(q as u64 * a.len() as u64, a.iter().map(|&n| n as u64).sum())));
    }

    #[test]
    fn pearson_affine_invariance(
        xs in prop::collection::vec(-100.0f64..100.0, 3..30),
        scale in 0.1f64..50.0,
        shift in -1e3f64..1e3,
    ) {
        let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x * 0.3 + (i % 5) as f64).collect();
        let moved: Vec<f64> = xs.iter().map(|x| x * scale + shift).collect();
        if let (Some(a), Some(b)) = (pearson(&xs, &ys), pearson(&moved, &ys)) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn stream_range_in_bounds(key in any::<u64>(), lo in 0u64..1000, width in 0u64..1000) {
        let mut s = Stream::from_key(key);
        for _ in 0..32 {
            let v = s.next_range(lo, lo + width);
            prop_assert!(v >= lo && v <= lo + width);
        }
    }
}
