use hst_core::harness::{dkw_slack, ks_critical, ks_split_vs_beta};
use hst_core::rng::{mix, SplitMix64};

/// Larger of `B, 1 − B` for `B ~ beta(m, m)`, drawn as the m-th order
/// statistic of `2m − 1` uniforms.
fn folded_beta(m: usize, rng: &mut SplitMix64) -> f64 {
    let mut u: Vec<f64> = (0..2 * m - 1).map(|_| rng.next_f64()).collect();
    u.sort_by(f64::total_cmp);
    let b = u[m - 1];
    b.max(1.0 - b)
}

#[test]
fn ks_null_pass_rate() {
    let runs = 200;
    for d in [2usize, 3, 5, 8] {
        let m = d.div_ceil(2);
        let passes = (0..runs)
            .filter(|&r| {
                let mut rng = SplitMix64::new(mix(77 + d as u64, r));
                let s: Vec<f64> = (0..2000).map(|_| folded_beta(m, &mut rng)).collect();
                ks_split_vs_beta(&s, d, None).unwrap().pass
            })
            .count();
        // Nominal 0.99; 0.96 is more than three binomial sd below.
        assert!(
            passes as f64 / runs as f64 >= 0.96,
            "d={d}: {passes}/{runs}"
        );
    }
}

#[test]
fn ks_detects_wrong_law() {
    // beta(3, 3) data against the d = 1 (uniform) law, and the reverse.
    let mut rng = SplitMix64::new(5);
    let s: Vec<f64> = (0..2000).map(|_| folded_beta(3, &mut rng)).collect();
    assert!(!ks_split_vs_beta(&s, 1, None).unwrap().pass);
    let u: Vec<f64> = (0..2000).map(|_| folded_beta(1, &mut rng)).collect();
    assert!(!ks_split_vs_beta(&u, 5, None).unwrap().pass);
}

#[test]
fn critical_values() {
    assert!((ks_critical(0.01) - 1.6276).abs() < 1e-3);
    assert!((ks_critical(0.05) - 1.3581).abs() < 1e-3);
    assert!((dkw_slack(0.01, 10_000) - 0.016276236307187292).abs() < 1e-15);
}
