//! Kolmogorov–Smirnov checks of every sampler family against its analytic
//! first-coordinate marginal, at n = 10⁵ and level 0.01.

use logitest_core::densities::{sigmoid_curve_pair, sphere_pair, tail_bump_pair, AnalyticDensity};
use logitest_core::testing::{ks_critical, ks_statistic};

fn first_coordinate(d: &AnalyticDensity, n: usize, seed: u64) -> Vec<f64> {
    d.sample(n, seed)
        .unwrap()
        .iter_rows()
        .map(|r| r[0])
        .collect()
}

fn assert_ks(d: &AnalyticDensity, seed: u64, label: &str) {
    let n = 100_000;
    let xs = first_coordinate(d, n, seed);
    let stat = ks_statistic(&xs, |x| d.marginal_cdf_x1(x));
    let crit = ks_critical(n, 0.01);
    assert!(stat < crit, "{label}: KS {stat} vs critical {crit}");
}

#[test]
fn mixture_sampler_matches_marginal() {
    let (p, q) = tail_bump_pair(0.08);
    assert_ks(&p, 101, "standard normal");
    assert_ks(&q, 102, "tail-bump mixture");
}

#[test]
fn curve_sampler_matches_marginal() {
    let (p, q) = sigmoid_curve_pair();
    assert_ks(&p, 103, "curve pushforward of the grid mixture");
    assert_ks(&q, 104, "curve pushforward of the contaminated normal");
}

#[test]
fn sphere_sampler_matches_marginal() {
    let (p, q) = sphere_pair(0.4);
    assert_ks(&p, 105, "reference arc");
    assert_ks(&q, 106, "rotated arc");
}
