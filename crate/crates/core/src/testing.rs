//! Test statistics, bandwidth selection, and threshold calibration.
//!
//! Three statistics are supported on scored or raw samples:
//!
//! - net-logit: mean logit gap `mean f(X_te) - mean f(Y_te)`;
//! - net-acc: the classification-accuracy statistic, identically
//!   `1/2 + (mean Sign(f(X)) - mean Sign(f(Y)))/4` with `Sign(0) = +1`;
//! - gmmd: the biased Gaussian-kernel MMD V-statistic (diagonal included).
//!
//! Thresholds come either from a label-permutation null — no model
//! re-evaluation, only the precomputed scores or Gram matrix are re-indexed —
//! or from the asymptotic-normal rule `τ = σ̂/√n · z_α`.

use crate::linalg::{mean, median, sample_variance, sq_dist, Matrix};
use crate::num::normal_upper_quantile;
use crate::rng::{derive_seed, tag, CounterRng};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TestError {
    #[error("scores must be nonempty and finite")]
    BadScores,
    #[error("the accuracy statistic needs equal sample sizes, got {n_x} vs {n_y}")]
    UnequalSizes { n_x: usize, n_y: usize },
    #[error("kernel bandwidth must be positive, got {0}")]
    BadBandwidth(f64),
    #[error("all pooled points coincide; the median bandwidth is zero")]
    ZeroBandwidth,
    #[error("m_perm must be at least 1")]
    NoPermutations,
    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    BadAlpha(f64),
    #[error("need at least {want} samples, got {got}")]
    TooFewSamples { want: usize, got: usize },
}

/// Which statistic produced an outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatisticKind {
    NetLogit,
    NetAcc,
    Gmmd,
    GmmdAd,
    GmmdPlus,
    GmmdPlusPlus,
}

impl StatisticKind {
    pub fn label(self) -> &'static str {
        match self {
            StatisticKind::NetLogit => "net-logit",
            StatisticKind::NetAcc => "net-acc",
            StatisticKind::Gmmd => "gmmd",
            StatisticKind::GmmdAd => "gmmd-ad",
            StatisticKind::GmmdPlus => "gmmd+",
            StatisticKind::GmmdPlusPlus => "gmmd++",
        }
    }
}

/// Witness values evaluated on the two test samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSamples {
    pub x_scores: Vec<f64>,
    pub y_scores: Vec<f64>,
}

impl ScoredSamples {
    pub fn new(x_scores: Vec<f64>, y_scores: Vec<f64>) -> Result<Self, TestError> {
        if x_scores.is_empty()
            || y_scores.is_empty()
            || x_scores.iter().chain(&y_scores).any(|v| !v.is_finite())
        {
            return Err(TestError::BadScores);
        }
        Ok(ScoredSamples { x_scores, y_scores })
    }
}

/// Result of one calibrated test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub statistic: f64,
    pub threshold: f64,
    pub p_value: f64,
    pub reject: bool,
    pub null_samples: Vec<f64>,
    pub method: StatisticKind,
}

/// Per-bandwidth discrepancies on a selection split, and the winner.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthSelection {
    pub grid: Vec<f64>,
    pub scores: Vec<f64>,
    pub chosen: f64,
}

/// Mean logit gap.
pub fn logit_stat(s: &ScoredSamples) -> f64 {
    mean(&s.x_scores) - mean(&s.y_scores)
}

#[inline]
fn sign(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Accuracy statistic; only defined for equal sample sizes.
pub fn acc_stat(s: &ScoredSamples) -> Result<f64, TestError> {
    if s.x_scores.len() != s.y_scores.len() {
        return Err(TestError::UnequalSizes {
            n_x: s.x_scores.len(),
            n_y: s.y_scores.len(),
        });
    }
    let sx: f64 = s.x_scores.iter().map(|&v| sign(v)).sum::<f64>() / s.x_scores.len() as f64;
    let sy: f64 = s.y_scores.iter().map(|&v| sign(v)).sum::<f64>() / s.y_scores.len() as f64;
    Ok(0.5 + 0.25 * (sx - sy))
}

/// Gaussian kernel `exp(-‖a-b‖²/(2σ²))`.
#[inline]
pub fn gauss_kernel(a: &[f64], b: &[f64], sigma: f64) -> f64 {
    (-sq_dist(a, b) / (2.0 * sigma * sigma)).exp()
}

/// Biased Gaussian-kernel MMD V-statistic, self-pairs included.
pub fn gmmd_stat(x: &Matrix, y: &Matrix, sigma: f64) -> Result<f64, TestError> {
    if sigma <= 0.0 {
        return Err(TestError::BadBandwidth(sigma));
    }
    let nx = x.rows() as f64;
    let ny = y.rows() as f64;
    let mut xx = 0.0;
    for a in x.iter_rows() {
        for b in x.iter_rows() {
            xx += gauss_kernel(a, b, sigma);
        }
    }
    let mut yy = 0.0;
    for a in y.iter_rows() {
        for b in y.iter_rows() {
            yy += gauss_kernel(a, b, sigma);
        }
    }
    let mut xy = 0.0;
    for a in x.iter_rows() {
        for b in y.iter_rows() {
            xy += gauss_kernel(a, b, sigma);
        }
    }
    Ok(xx / (nx * nx) + yy / (ny * ny) - 2.0 * xy / (nx * ny))
}

/// Median of all pairwise Euclidean distances of the pooled sample.
pub fn median_bandwidth(z: &Matrix) -> Result<f64, TestError> {
    if z.rows() < 2 {
        return Err(TestError::TooFewSamples {
            want: 2,
            got: z.rows(),
        });
    }
    let mut d = Vec::with_capacity(z.rows() * (z.rows() - 1) / 2);
    for i in 0..z.rows() {
        for j in (i + 1)..z.rows() {
            d.push(sq_dist(z.row(i), z.row(j)).sqrt());
        }
    }
    let m = median(&d);
    if m <= 0.0 {
        return Err(TestError::ZeroBandwidth);
    }
    Ok(m)
}

/// The default bandwidth grid `2^-3 .. 2^3`.
pub fn default_bandwidth_grid() -> Vec<f64> {
    (-3i32..=3).map(|k| (k as f64).exp2()).collect()
}

/// Pick the bandwidth maximizing the MMD discrepancy on the selection split;
/// ties break toward the smaller bandwidth.
pub fn select_bandwidth_ad(
    x_tr: &Matrix,
    y_tr: &Matrix,
    grid: &[f64],
) -> Result<BandwidthSelection, TestError> {
    if grid.is_empty() {
        return Err(TestError::BadBandwidth(f64::NAN));
    }
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[a].total_cmp(&grid[b]));
    let scores: Vec<f64> = grid
        .iter()
        .map(|&s| gmmd_stat(x_tr, y_tr, s))
        .collect::<Result<_, _>>()?;
    let mut best = order[0];
    for &i in &order {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    Ok(BandwidthSelection {
        grid: grid.to_vec(),
        scores,
        chosen: grid[best],
    })
}

/// Empirical `(1-alpha)`-quantile of the null replicates: the
/// `ceil((1-alpha) m)`-th order statistic.
fn permutation_threshold(null: &[f64], alpha: f64) -> f64 {
    let mut sorted = null.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = ((1.0 - alpha) * null.len() as f64).ceil() as usize;
    sorted[k.clamp(1, null.len()) - 1]
}

fn finish_outcome(
    statistic: f64,
    null: Vec<f64>,
    alpha: f64,
    method: StatisticKind,
) -> TestOutcome {
    let threshold = permutation_threshold(&null, alpha);
    let ge = null.iter().filter(|&&v| v >= statistic).count();
    let p_value = (1 + ge) as f64 / (1 + null.len()) as f64;
    TestOutcome {
        statistic,
        threshold,
        p_value,
        reject: statistic > threshold,
        null_samples: null,
        method,
    }
}

fn check_perm_args(m_perm: usize, alpha: f64) -> Result<(), TestError> {
    if m_perm == 0 {
        return Err(TestError::NoPermutations);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(TestError::BadAlpha(alpha));
    }
    Ok(())
}

/// Permutation calibration on precomputed scores. The pooled scores are
/// sorted before any replicate is drawn, so the null distribution depends
/// only on the pooled multiset (and the seed), not on input order.
pub fn permutation_calibrate_scores(
    s: &ScoredSamples,
    kind: StatisticKind,
    m_perm: usize,
    alpha: f64,
    seed: u64,
) -> Result<TestOutcome, TestError> {
    check_perm_args(m_perm, alpha)?;
    let statistic = match kind {
        StatisticKind::NetAcc => acc_stat(s)?,
        _ => logit_stat(s),
    };
    let mut pooled: Vec<f64> = s.x_scores.iter().chain(&s.y_scores).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let n_x = s.x_scores.len();
    let n = pooled.len();
    let null: Vec<f64> = (0..m_perm)
        .map(|r| {
            let mut rng = CounterRng::new(derive_seed(seed, &[r as u64, tag("perm")]), 0);
            let idx = rng.permutation(n);
            let xs: Vec<f64> = idx[..n_x].iter().map(|&i| pooled[i]).collect();
            let ys: Vec<f64> = idx[n_x..].iter().map(|&i| pooled[i]).collect();
            let rs = ScoredSamples {
                x_scores: xs,
                y_scores: ys,
            };
            match kind {
                StatisticKind::NetAcc => acc_stat(&rs).expect("equal sizes under permutation"),
                _ => logit_stat(&rs),
            }
        })
        .collect();
    Ok(finish_outcome(statistic, null, alpha, kind))
}

/// Gram matrix over the pooled sample; computed once, permutations only
/// re-index it.
pub struct PooledKernel {
    k: Vec<f64>,
    n: usize,
    n_x: usize,
    pub sigma: f64,
}

impl PooledKernel {
    pub fn new(x: &Matrix, y: &Matrix, sigma: f64) -> Result<Self, TestError> {
        if sigma <= 0.0 {
            return Err(TestError::BadBandwidth(sigma));
        }
        let pooled = x.vstack(y);
        let n = pooled.rows();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = gauss_kernel(pooled.row(i), pooled.row(j), sigma);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        Ok(PooledKernel {
            k,
            n,
            n_x: x.rows(),
            sigma,
        })
    }

    /// V-statistic for the assignment that puts `idx[..n_x]` in X.
    fn stat_for(&self, idx: &[usize]) -> f64 {
        let (xs, ys) = idx.split_at(self.n_x);
        let nx = xs.len() as f64;
        let ny = ys.len() as f64;
        let mut xx = 0.0;
        for &i in xs {
            let row = &self.k[i * self.n..(i + 1) * self.n];
            for &j in xs {
                xx += row[j];
            }
        }
        let mut yy = 0.0;
        for &i in ys {
            let row = &self.k[i * self.n..(i + 1) * self.n];
            for &j in ys {
                yy += row[j];
            }
        }
        let mut xy = 0.0;
        for &i in xs {
            let row = &self.k[i * self.n..(i + 1) * self.n];
            for &j in ys {
                xy += row[j];
            }
        }
        xx / (nx * nx) + yy / (ny * ny) - 2.0 * xy / (nx * ny)
    }
}

/// Permutation calibration of the kernel statistic on a precomputed Gram
/// matrix; no kernel is re-evaluated per replicate.
pub fn permutation_calibrate_kernel(
    kernel: &PooledKernel,
    kind: StatisticKind,
    m_perm: usize,
    alpha: f64,
    seed: u64,
) -> Result<TestOutcome, TestError> {
    check_perm_args(m_perm, alpha)?;
    let identity: Vec<usize> = (0..kernel.n).collect();
    let statistic = kernel.stat_for(&identity);
    let null: Vec<f64> = (0..m_perm)
        .map(|r| {
            let mut rng = CounterRng::new(derive_seed(seed, &[r as u64, tag("perm")]), 0);
            kernel.stat_for(&rng.permutation(kernel.n))
        })
        .collect();
    Ok(finish_outcome(statistic, null, alpha, kind))
}

/// Asymptotic threshold `τ = σ̂ / √n · z_alpha` where `z_alpha` is the upper
/// normal quantile (inverse survival function).
pub fn asymptotic_threshold(sigma_h0: f64, n: usize, alpha: f64) -> Result<f64, TestError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(TestError::BadAlpha(alpha));
    }
    if n == 0 {
        return Err(TestError::TooFewSamples { want: 1, got: 0 });
    }
    assert!(sigma_h0 >= 0.0);
    Ok(sigma_h0 / (n as f64).sqrt() * normal_upper_quantile(alpha))
}

/// Plug-in for the null standard deviation of `√n T_n`: `√(2 s²_pooled)`
/// with the unbiased pooled sample variance.
pub fn estimate_null_sd(s: &ScoredSamples) -> Result<f64, TestError> {
    let pooled: Vec<f64> = s.x_scores.iter().chain(&s.y_scores).copied().collect();
    if pooled.len() < 2 {
        return Err(TestError::TooFewSamples {
            want: 2,
            got: pooled.len(),
        });
    }
    Ok((2.0 * sample_variance(&pooled)).sqrt())
}

/// One-sample Kolmogorov–Smirnov statistic against a cdf.
pub fn ks_statistic(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let c = cdf(x);
        d = d
            .max((c - i as f64 / n).abs())
            .max(((i + 1) as f64 / n - c).abs());
    }
    d
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> f64 {
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Asymptotic two-sided KS critical value at level `alpha` for one sample of
/// size `n` (`c(alpha) = sqrt(-ln(alpha/2)/2)`).
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scores(x: &[f64], y: &[f64]) -> ScoredSamples {
        ScoredSamples::new(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn logit_stat_examples() {
        assert_eq!(logit_stat(&scores(&[0.0, 0.0], &[0.0])), 0.0);
        assert_eq!(logit_stat(&scores(&[1.0, 3.0], &[2.0, 4.0])), -1.0);
        let same = scores(&[2.0, -1.0, 0.5], &[0.5, 2.0, -1.0]);
        assert_eq!(logit_stat(&same), 0.0);
    }

    #[test]
    fn acc_stat_examples() {
        assert_eq!(acc_stat(&scores(&[0.1, 2.0], &[-0.5, -3.0])).unwrap(), 1.0);
        assert_eq!(acc_stat(&scores(&[0.0, 0.0], &[0.0, 0.0])).unwrap(), 0.5);
        assert!(acc_stat(&scores(&[1.0], &[1.0, 2.0])).is_err());
    }

    #[test]
    fn acc_is_affine_in_sign_mapped_logit() {
        let mut rng = CounterRng::from_seed(5);
        for _ in 0..200 {
            let n = 3 + rng.below(10);
            let x: Vec<f64> = (0..n).map(|_| rng.next_gaussian()).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.next_gaussian()).collect();
            let s = scores(&x, &y);
            let mapped = scores(
                &x.iter().map(|&v| sign(v)).collect::<Vec<_>>(),
                &y.iter().map(|&v| sign(v)).collect::<Vec<_>>(),
            );
            let want = 0.5 + 0.25 * logit_stat(&mapped);
            assert_eq!(acc_stat(&s).unwrap(), want);
        }
    }

    #[test]
    fn gmmd_examples() {
        let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!(gmmd_stat(&x, &x, 1.0).unwrap().abs() < 1e-12);
        let a = Matrix::from_rows(&[vec![0.0]]);
        let b = Matrix::from_rows(&[vec![2.0]]);
        let got = gmmd_stat(&a, &b, 1.0).unwrap();
        assert!((got - (2.0 - 2.0 * (-2.0f64).exp())).abs() < 1e-12);
        // Huge bandwidth: kernel -> 1 everywhere, statistic -> 0.
        let y = Matrix::from_rows(&[vec![3.0, -1.0], vec![2.0, 2.0]]);
        assert!(gmmd_stat(&x, &y, 1e6).unwrap().abs() < 1e-10);
        assert!(gmmd_stat(&x, &y, 0.0).is_err());
    }

    #[test]
    fn median_bandwidth_order_statistics() {
        let z = Matrix::column(&[0.0, 1.0, 3.0]);
        assert_eq!(median_bandwidth(&z).unwrap(), 2.0);
        let z = Matrix::column(&[0.0, 1.0]);
        assert_eq!(median_bandwidth(&z).unwrap(), 1.0);
        let corners = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ]);
        assert_eq!(median_bandwidth(&corners).unwrap(), 1.0);
        let same = Matrix::column(&[2.0, 2.0, 2.0]);
        assert!(matches!(
            median_bandwidth(&same),
            Err(TestError::ZeroBandwidth)
        ));
    }

    #[test]
    fn bandwidth_selection_prefers_max_and_small_ties() {
        let x = Matrix::column(&[0.0, 0.2, -0.3, 0.1]);
        let y = Matrix::column(&[1.0, 1.3, 0.9, 1.1]);
        let sel = select_bandwidth_ad(&x, &y, &default_bandwidth_grid()).unwrap();
        assert_eq!(sel.scores.len(), sel.grid.len());
        assert!(sel.grid.contains(&sel.chosen));
        let best = sel.scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let chosen_score = sel.scores[sel.grid.iter().position(|&g| g == sel.chosen).unwrap()];
        assert_eq!(chosen_score, best);
        // Single-element grid.
        let one = select_bandwidth_ad(&x, &y, &[0.7]).unwrap();
        assert_eq!(one.chosen, 0.7);
    }

    #[test]
    fn permutation_threshold_conventions() {
        let s = scores(&[1.0, 2.0], &[0.5, 0.1]);
        let out = permutation_calibrate_scores(&s, StatisticKind::NetLogit, 1, 0.05, 3).unwrap();
        assert_eq!(out.null_samples.len(), 1);
        assert_eq!(out.threshold, out.null_samples[0]);
        assert_eq!(out.reject, out.statistic > out.threshold);
        let expect_p = if out.null_samples[0] >= out.statistic {
            1.0
        } else {
            0.5
        };
        assert_eq!(out.p_value, expect_p);
    }

    #[test]
    fn thresholds_are_monotone_in_alpha() {
        let s = scores(&[0.3, 1.5, -0.2, 0.8], &[0.1, -0.4, 0.9, -1.2]);
        let t1 = permutation_calibrate_scores(&s, StatisticKind::NetLogit, 400, 0.01, 5)
            .unwrap()
            .threshold;
        let t5 = permutation_calibrate_scores(&s, StatisticKind::NetLogit, 400, 0.05, 5)
            .unwrap()
            .threshold;
        assert!(t1 >= t5);
        let a1 = asymptotic_threshold(1.0, 50, 0.01).unwrap();
        let a5 = asymptotic_threshold(1.0, 50, 0.05).unwrap();
        assert!(a1 > a5);
    }

    #[test]
    fn null_distribution_ignores_input_order() {
        let s1 = scores(&[0.3, 1.5, -0.2, 0.8], &[0.1, -0.4, 0.9, -1.2]);
        let s2 = scores(&[0.8, -0.2, 1.5, 0.3], &[-1.2, 0.9, -0.4, 0.1]);
        let o1 = permutation_calibrate_scores(&s1, StatisticKind::NetLogit, 64, 0.05, 9).unwrap();
        let o2 = permutation_calibrate_scores(&s2, StatisticKind::NetLogit, 64, 0.05, 9).unwrap();
        assert_eq!(o1.null_samples, o2.null_samples);
        // The observed statistic only reassociates sums, so it can move by
        // round-off but nothing more.
        assert!((o1.statistic - o2.statistic).abs() < 1e-12);
    }

    #[test]
    fn full_label_swap_negates_logit_stat() {
        let s = scores(&[0.3, 1.5, -0.2], &[0.1, -0.4, 0.9]);
        let swapped = scores(&[0.1, -0.4, 0.9], &[0.3, 1.5, -0.2]);
        assert_eq!(logit_stat(&s), -logit_stat(&swapped));
    }

    #[test]
    fn type_one_error_is_calibrated() {
        // Null scores from one distribution; rejection frequency near alpha.
        let mut rng = CounterRng::from_seed(2024);
        let reps = 400;
        let mut rejects = 0;
        let mut null_means = Vec::new();
        for r in 0..reps {
            let x: Vec<f64> = (0..40).map(|_| rng.next_gaussian()).collect();
            let y: Vec<f64> = (0..40).map(|_| rng.next_gaussian()).collect();
            let s = scores(&x, &y);
            let out = permutation_calibrate_scores(
                &s,
                StatisticKind::NetLogit,
                1000,
                0.05,
                derive_seed(99, &[r]),
            )
            .unwrap();
            if out.reject {
                rejects += 1;
            }
            null_means.push(mean(&out.null_samples));
        }
        let freq = rejects as f64 / reps as f64;
        assert!((0.02..=0.08).contains(&freq), "type-I frequency {freq}");
        // Null replicates of the logit statistic are centered.
        let overall = mean(&null_means);
        let se = (sample_variance(&null_means) / reps as f64).sqrt();
        assert!(
            overall.abs() < 3.0 * se + 1e-3,
            "null mean {overall}, se {se}"
        );
    }

    #[test]
    fn kernel_permutation_matches_direct_statistic() {
        let x = Matrix::column(&[0.0, 0.3, -0.1, 0.7]);
        let y = Matrix::column(&[2.0, 1.8, 2.3, 2.2]);
        let kern = PooledKernel::new(&x, &y, 1.3).unwrap();
        let out = permutation_calibrate_kernel(&kern, StatisticKind::Gmmd, 32, 0.05, 11).unwrap();
        let direct = gmmd_stat(&x, &y, 1.3).unwrap();
        assert!((out.statistic - direct).abs() < 1e-12);
        assert_eq!(out.null_samples.len(), 32);
        assert_eq!(out.reject, out.statistic > out.threshold);
    }

    #[test]
    fn asymptotic_threshold_examples() {
        let t = asymptotic_threshold(1.0, 1, 0.05).unwrap();
        assert!((t - 1.6448536269514722).abs() < 1e-9);
        assert_eq!(asymptotic_threshold(0.0, 10, 0.05).unwrap(), 0.0);
        let t1 = asymptotic_threshold(2.0, 25, 0.05).unwrap();
        let t4 = asymptotic_threshold(2.0, 100, 0.05).unwrap();
        assert!((t1 / t4 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn null_sd_examples() {
        let flat = scores(&[1.0, 1.0], &[1.0, 1.0]);
        assert_eq!(estimate_null_sd(&flat).unwrap(), 0.0);
        let pm = scores(&[-1.0], &[1.0]);
        // pooled variance of {-1, 1} with n-1 denominator is 2.
        assert_eq!(estimate_null_sd(&pm).unwrap(), 2.0);
        let mut rng = CounterRng::from_seed(8);
        let sd = 1.7;
        let x: Vec<f64> = (0..40_000).map(|_| sd * rng.next_gaussian()).collect();
        let y: Vec<f64> = (0..40_000).map(|_| sd * rng.next_gaussian()).collect();
        let got = estimate_null_sd(&scores(&x, &y)).unwrap();
        assert!((got / (sd * 2.0f64.sqrt()) - 1.0).abs() < 0.05, "got {got}");
    }

    #[test]
    fn ks_helpers_sane() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_statistic(&xs, |x| x.clamp(0.0, 1.0)) < 0.001);
        let ys: Vec<f64> = xs.iter().map(|x| x * 0.5).collect();
        assert!(ks_two_sample(&xs, &ys) > 0.4);
        assert!((ks_critical(10_000, 0.01) - 1.6276 / 100.0).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn gmmd_is_nonnegative_and_symmetric(seed in 0u64..300) {
            let mut rng = CounterRng::from_seed(seed);
            let n = 2 + rng.below(6);
            let m = 2 + rng.below(6);
            let x = Matrix::from_rows(&(0..n).map(|_| vec![rng.next_gaussian(), rng.next_gaussian()]).collect::<Vec<_>>());
            let y = Matrix::from_rows(&(0..m).map(|_| vec![rng.next_gaussian(), rng.next_gaussian()]).collect::<Vec<_>>());
            let sigma = 0.5 + rng.next_f64();
            let a = gmmd_stat(&x, &y, sigma).unwrap();
            let b = gmmd_stat(&y, &x, sigma).unwrap();
            prop_assert!(a >= -1e-12);
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn acc_stat_lies_in_unit_interval(seed in 0u64..300) {
            let mut rng = CounterRng::from_seed(seed);
            let n = 1 + rng.below(20);
            let x: Vec<f64> = (0..n).map(|_| rng.next_gaussian()).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.next_gaussian()).collect();
            let a = acc_stat(&scores(&x, &y)).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }
}
