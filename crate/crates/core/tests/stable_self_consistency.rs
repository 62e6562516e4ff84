use grg_core::stable::{interpolated_cdf_on_sample, sample_stable, StableParams};
use grg_core::stats::ks_one_sample_presorted;

#[test]
fn cms_draws_match_gil_pelaez_cdf() {
    let m = 100_000;
    for (k, alpha) in [1.1, 1.5, 1.9].into_iter().enumerate() {
        for beta in [0.0, 1.0] {
            let p = StableParams::standard(alpha, beta).unwrap();
            let mut x = sample_stable(&p, m, 4_000 + k as u64 * 10 + beta as u64).unwrap();
            x.sort_by(f64::total_cmp);
            let f = interpolated_cdf_on_sample(&x, &p, 2_000).unwrap();
            let ks = ks_one_sample_presorted(&x, &f).unwrap();
            println!("alpha={alpha} beta={beta}: D={:.5} p={:.4}", ks.d_stat, ks.p_value);
            assert!(ks.p_value > 0.01, "alpha={alpha} beta={beta}: {ks:?}");
        }
    }
}
