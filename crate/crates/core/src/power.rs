//! Experiment harness: repeated seeded test runs, power estimation, replica
//! tables, and the loss-versus-width sweep.
//!
//! One *run* draws a fresh sample pair, splits it half/half into train and
//! test, fits whatever the method needs on the training split (a classifier
//! for the net methods, a bandwidth for gmmd-ad, nothing for gmmd), computes
//! the statistic on the designated evaluation samples and calibrates the
//! threshold by permutation. Power is the rejection frequency over `n_run`
//! independent runs; a *replica* repeats the whole estimate under fresh
//! seeds, and tables report mean/std/median over replicas.
//!
//! Seeds are derived per work unit as
//! `derive_seed(base_seed, [replica, run, tag(purpose)])`, so runs and
//! replicas are embarrassingly parallel and every number in a table is a
//! pure function of the configuration.

use crate::densities::AnalyticDensity;
use crate::functionals::{jsd, population_loss, FunctionalError};
use crate::linalg::{mean, median, sample_variance, Matrix};
use crate::nn::{self, MlpSpec, NnError, TrainConfig};
use crate::quadrature::QuadratureGrid;
use crate::rng::{derive_seed, tag};
use crate::testing::{
    default_bandwidth_grid, median_bandwidth, permutation_calibrate_kernel,
    permutation_calibrate_scores, select_bandwidth_ad, PooledKernel, ScoredSamples, StatisticKind,
    TestError, TestOutcome,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PowerError {
    #[error("n_all must be a positive multiple of 4, got {0}")]
    BadNAll(usize),
    #[error("{0} is a harness-level method; it has no single-run statistic")]
    HarnessOnlyMethod(&'static str),
    #[error("replica tables need n_rep >= 2, got {0}")]
    TooFewReplicas(usize),
    #[error("power estimation needs n_run >= 1")]
    NoRuns,
    #[error(transparent)]
    Test(#[from] TestError),
    #[error(transparent)]
    Density(#[from] crate::densities::DensityError),
    #[error(transparent)]
    Train(#[from] NnError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
}

/// Two-sample test method under study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    NetLogit,
    NetAcc,
    /// Median-bandwidth kernel MMD on the test split only.
    Gmmd,
    /// Kernel MMD with the bandwidth selected on the training split.
    GmmdAd,
    /// Median-bandwidth kernel MMD on all samples (no split).
    GmmdPlus,
    /// Kernel MMD on all samples with per-replica post-selected bandwidth.
    GmmdPlusPlus,
}

impl Method {
    pub fn label(self) -> &'static str {
        self.statistic_kind().label()
    }

    pub fn statistic_kind(self) -> StatisticKind {
        match self {
            Method::NetLogit => StatisticKind::NetLogit,
            Method::NetAcc => StatisticKind::NetAcc,
            Method::Gmmd => StatisticKind::Gmmd,
            Method::GmmdAd => StatisticKind::GmmdAd,
            Method::GmmdPlus => StatisticKind::GmmdPlus,
            Method::GmmdPlusPlus => StatisticKind::GmmdPlusPlus,
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Some(match s {
            "net-logit" => Method::NetLogit,
            "net-acc" => Method::NetAcc,
            "gmmd" => Method::Gmmd,
            "gmmd-ad" => Method::GmmdAd,
            "gmmd+" => Method::GmmdPlus,
            "gmmd++" => Method::GmmdPlusPlus,
            _ => return None,
        })
    }

    pub fn all() -> [Method; 6] {
        [
            Method::NetLogit,
            Method::NetAcc,
            Method::Gmmd,
            Method::GmmdAd,
            Method::GmmdPlus,
            Method::GmmdPlusPlus,
        ]
    }
}

/// Anything that can produce a fresh, seeded sample pair per run: analytic
/// density pairs here, file-backed pools in the CLI.
pub trait PairSource: Sync {
    fn dim(&self) -> usize;
    /// Draw `n_each` rows per side, deterministically in `seed`.
    fn draw_pair(&self, n_each: usize, seed: u64) -> (Matrix, Matrix);
}

impl PairSource for (AnalyticDensity, AnalyticDensity) {
    fn dim(&self) -> usize {
        self.0.ambient_dim()
    }

    fn draw_pair(&self, n_each: usize, seed: u64) -> (Matrix, Matrix) {
        let x = self
            .0
            .sample(n_each, derive_seed(seed, &[tag("draw-x")]))
            .expect("n >= 1");
        let y = self
            .1
            .sample(n_each, derive_seed(seed, &[tag("draw-y")]))
            .expect("n >= 1");
        (x, y)
    }
}

/// How many epochs to train for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpochRule {
    Fixed(usize),
    /// `budget / n_train_total` epochs (at least 1), so the number of
    /// processed samples stays constant across training-set sizes.
    SampleBudget {
        budget: usize,
    },
}

impl EpochRule {
    pub fn epochs(self, n_train_total: usize) -> usize {
        match self {
            EpochRule::Fixed(e) => e.max(1),
            EpochRule::SampleBudget { budget } => (budget / n_train_total.max(1)).max(1),
        }
    }
}

/// Classifier training profile used by the net methods.
#[derive(Debug, Clone, PartialEq)]
pub struct NetProfile {
    pub hidden_widths: Vec<usize>,
    pub learning_rate: f64,
    pub epoch_rule: EpochRule,
    /// Mini-batches of this size when the per-class training count exceeds
    /// it; full batch otherwise.
    pub batch_cap: usize,
    pub weight_clip: Option<f64>,
}

impl Default for NetProfile {
    fn default() -> Self {
        NetProfile {
            hidden_widths: vec![32, 32],
            learning_rate: 1e-3,
            epoch_rule: EpochRule::Fixed(100),
            batch_cap: 100,
            weight_clip: None,
        }
    }
}

impl NetProfile {
    fn train_config(&self, n_per_class: usize, seed: u64) -> TrainConfig {
        let batch = if n_per_class > self.batch_cap {
            self.batch_cap
        } else {
            0
        };
        TrainConfig {
            epochs: self.epoch_rule.epochs(2 * n_per_class),
            batch_size: batch,
            learning_rate: self.learning_rate,
            seed,
            weight_clip: self.weight_clip,
            ..TrainConfig::default()
        }
    }
}

/// Full harness configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Total sample count; half per side, half of each side for training.
    pub n_all: usize,
    pub methods: Vec<Method>,
    pub n_run: usize,
    pub n_rep: usize,
    pub m_perm: usize,
    pub alpha: f64,
    pub base_seed: u64,
    pub net: NetProfile,
    /// Bandwidth grid for gmmd-ad selection and gmmd++ post-selection.
    pub bandwidth_grid: Vec<f64>,
}

impl ExperimentConfig {
    pub fn new(n_all: usize, base_seed: u64) -> Result<Self, PowerError> {
        if n_all == 0 || n_all % 4 != 0 {
            return Err(PowerError::BadNAll(n_all));
        }
        Ok(ExperimentConfig {
            n_all,
            methods: Method::all().to_vec(),
            n_run: 400,
            n_rep: 20,
            m_perm: 200,
            alpha: 0.05,
            base_seed,
            net: NetProfile::default(),
            bandwidth_grid: default_bandwidth_grid(),
        })
    }

    fn n_each(&self) -> usize {
        self.n_all / 2
    }

    fn n_quarter(&self) -> usize {
        self.n_all / 4
    }
}

fn split_half(m: &Matrix) -> (Matrix, Matrix) {
    let half = m.rows() / 2;
    (m.slice_rows(0, half), m.slice_rows(half, m.rows()))
}

/// One complete experiment run for one method; see the module docs.
pub fn run_once(
    cfg: &ExperimentConfig,
    source: &dyn PairSource,
    method: Method,
    seed: u64,
) -> Result<TestOutcome, PowerError> {
    if cfg.n_all == 0 || cfg.n_all % 4 != 0 {
        return Err(PowerError::BadNAll(cfg.n_all));
    }
    let (x, y) = source.draw_pair(cfg.n_each(), derive_seed(seed, &[tag("draw")]));
    let (x_tr, x_te) = split_half(&x);
    let (y_tr, y_te) = split_half(&y);
    let perm_seed = derive_seed(seed, &[tag("perm")]);
    match method {
        Method::NetLogit | Method::NetAcc => {
            let spec = MlpSpec::new(source.dim(), cfg.net.hidden_widths.clone())?;
            let tc = cfg
                .net
                .train_config(cfg.n_quarter(), derive_seed(seed, &[tag("train")]));
            let (params, _) = nn::train(&spec, &tc, &x_tr, &y_tr)?;
            let scores = ScoredSamples::new(params.logits(&x_te), params.logits(&y_te))?;
            Ok(permutation_calibrate_scores(
                &scores,
                method.statistic_kind(),
                cfg.m_perm,
                cfg.alpha,
                perm_seed,
            )?)
        }
        Method::Gmmd => {
            let sigma = median_bandwidth(&x_te.vstack(&y_te))?;
            let kern = PooledKernel::new(&x_te, &y_te, sigma)?;
            Ok(permutation_calibrate_kernel(
                &kern,
                StatisticKind::Gmmd,
                cfg.m_perm,
                cfg.alpha,
                perm_seed,
            )?)
        }
        Method::GmmdAd => {
            let sel = select_bandwidth_ad(&x_tr, &y_tr, &cfg.bandwidth_grid)?;
            let kern = PooledKernel::new(&x_te, &y_te, sel.chosen)?;
            Ok(permutation_calibrate_kernel(
                &kern,
                StatisticKind::GmmdAd,
                cfg.m_perm,
                cfg.alpha,
                perm_seed,
            )?)
        }
        Method::GmmdPlus => {
            let sigma = median_bandwidth(&x.vstack(&y))?;
            let kern = PooledKernel::new(&x, &y, sigma)?;
            Ok(permutation_calibrate_kernel(
                &kern,
                StatisticKind::GmmdPlus,
                cfg.m_perm,
                cfg.alpha,
                perm_seed,
            )?)
        }
        Method::GmmdPlusPlus => Err(PowerError::HarnessOnlyMethod("gmmd++")),
    }
}

/// Rejection indicators of the all-samples kernel test for every bandwidth
/// in the grid, sharing one drawn pair.
fn run_once_grid_all(
    cfg: &ExperimentConfig,
    source: &dyn PairSource,
    seed: u64,
) -> Result<Vec<bool>, PowerError> {
    let (x, y) = source.draw_pair(cfg.n_each(), derive_seed(seed, &[tag("draw")]));
    let perm_seed = derive_seed(seed, &[tag("perm")]);
    cfg.bandwidth_grid
        .iter()
        .map(|&sigma| {
            let kern = PooledKernel::new(&x, &y, sigma)?;
            let out = permutation_calibrate_kernel(
                &kern,
                StatisticKind::GmmdPlusPlus,
                cfg.m_perm,
                cfg.alpha,
                perm_seed,
            )?;
            Ok(out.reject)
        })
        .collect()
}

#[cfg(feature = "parallel")]
fn indexed_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn indexed_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

fn run_seed(cfg: &ExperimentConfig, replica: u64, run: usize) -> u64 {
    derive_seed(cfg.base_seed, &[replica, run as u64, tag("run")])
}

/// Rejection frequency over `n_run` independent runs. For gmmd++ this is the
/// post-selected value: the per-bandwidth frequencies over the same runs,
/// maximized over the grid.
pub fn estimate_power(
    cfg: &ExperimentConfig,
    source: &dyn PairSource,
    method: Method,
    replica: u64,
) -> Result<f64, PowerError> {
    if cfg.n_run == 0 {
        return Err(PowerError::NoRuns);
    }
    if method == Method::GmmdPlusPlus {
        let per_run: Vec<Result<Vec<bool>, PowerError>> = indexed_map(cfg.n_run, |k| {
            run_once_grid_all(cfg, source, run_seed(cfg, replica, k))
        });
        let mut counts = vec![0usize; cfg.bandwidth_grid.len()];
        for r in per_run {
            for (c, rej) in counts.iter_mut().zip(r?) {
                *c += rej as usize;
            }
        }
        let best = counts.into_iter().max().unwrap_or(0);
        return Ok(best as f64 / cfg.n_run as f64);
    }
    let rejects: Vec<Result<bool, PowerError>> = indexed_map(cfg.n_run, |k| {
        run_once(cfg, source, method, run_seed(cfg, replica, k)).map(|o| o.reject)
    });
    let mut count = 0usize;
    for r in rejects {
        count += r? as usize;
    }
    Ok(count as f64 / cfg.n_run as f64)
}

/// Mean / standard deviation / median (all in percent) of per-replica powers.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodPower {
    pub method: Method,
    pub per_replica_percent: Vec<f64>,
    pub mean_percent: f64,
    pub std_percent: f64,
    pub median_percent: f64,
}

/// Replica table over all configured methods.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTable {
    pub rows: Vec<MethodPower>,
}

/// Aggregate raw per-replica powers (fractions) into a table row.
pub fn aggregate_method_power(method: Method, powers: &[f64]) -> MethodPower {
    let percent: Vec<f64> = powers.iter().map(|p| 100.0 * p).collect();
    let std = if percent.len() >= 2 {
        sample_variance(&percent).sqrt()
    } else {
        0.0
    };
    MethodPower {
        method,
        mean_percent: mean(&percent),
        std_percent: std,
        median_percent: median(&percent),
        per_replica_percent: percent,
    }
}

/// Estimate power for every method over `n_rep` replicas.
pub fn replicate_table(
    cfg: &ExperimentConfig,
    source: &dyn PairSource,
) -> Result<PowerTable, PowerError> {
    if cfg.n_rep < 2 {
        return Err(PowerError::TooFewReplicas(cfg.n_rep));
    }
    let mut rows = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let powers: Vec<Result<f64, PowerError>> =
            indexed_map(cfg.n_rep, |r| estimate_power(cfg, source, method, r as u64));
        let powers: Vec<f64> = powers.into_iter().collect::<Result<_, _>>()?;
        rows.push(aggregate_method_power(method, &powers));
    }
    Ok(PowerTable { rows })
}

// ----------------------------------------------------------------------
// Loss-versus-width sweep.
// ----------------------------------------------------------------------

/// Which optimization benchmark to sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossWidthTarget {
    /// The 1D grid-mixture pair.
    Mixture1d,
    /// The same pair pushed onto the noisy sigmoid curve in the plane.
    Curve2d,
}

impl LossWidthTarget {
    pub fn pair(self) -> (AnalyticDensity, AnalyticDensity) {
        match self {
            LossWidthTarget::Mixture1d => crate::densities::mixture_grid_pair(),
            LossWidthTarget::Curve2d => crate::densities::sigmoid_curve_pair(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossWidthCell {
    pub hidden_width: usize,
    pub n_train_total: usize,
    pub mean_loss: f64,
    pub std_loss: f64,
    pub per_replica: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossWidthTable {
    pub cells: Vec<LossWidthCell>,
    /// The unconstrained ceiling `L[f*] = JSD(p, q)` for the reference line.
    pub jsd_line: f64,
}

/// Configuration of the loss-versus-width sweep. Training follows the
/// sample-budget rule (`800_000 / n_train` epochs, mini-batches of 100 when
/// a class holds more than 100 points) with one hidden layer per width.
#[derive(Debug, Clone, PartialEq)]
pub struct LossWidthConfig {
    pub target: LossWidthTarget,
    pub widths: Vec<usize>,
    pub train_sizes: Vec<usize>,
    pub n_rep: usize,
    pub base_seed: u64,
}

pub fn loss_vs_width_experiment(cfg: &LossWidthConfig) -> Result<LossWidthTable, PowerError> {
    if cfg.n_rep == 0 || cfg.widths.is_empty() || cfg.train_sizes.is_empty() {
        return Err(PowerError::NoRuns);
    }
    let (p, q) = cfg.target.pair();
    let grid = crate::densities::pair_grid(&p, &q);
    let jsd_line = jsd(&p, &q, &grid)?;
    let mut cells = Vec::new();
    for &h in &cfg.widths {
        for &n in &cfg.train_sizes {
            let losses = loss_width_cell(cfg, &p, &q, &grid, h, n)?;
            let std = if losses.len() >= 2 {
                sample_variance(&losses).sqrt()
            } else {
                0.0
            };
            cells.push(LossWidthCell {
                hidden_width: h,
                n_train_total: n,
                mean_loss: mean(&losses),
                std_loss: std,
                per_replica: losses,
            });
        }
    }
    Ok(LossWidthTable { cells, jsd_line })
}

/// Per-replica trained losses for one `(width, n_train)` cell.
pub fn loss_width_cell(
    cfg: &LossWidthConfig,
    p: &AnalyticDensity,
    q: &AnalyticDensity,
    grid: &QuadratureGrid,
    hidden_width: usize,
    n_train_total: usize,
) -> Result<Vec<f64>, PowerError> {
    let results: Vec<Result<f64, PowerError>> = indexed_map(cfg.n_rep, |rep| {
        let seed = derive_seed(
            cfg.base_seed,
            &[
                hidden_width as u64,
                n_train_total as u64,
                rep as u64,
                tag("loss-width"),
            ],
        );
        let n_per_class = n_train_total / 2;
        let x = p.sample(n_per_class, derive_seed(seed, &[tag("draw-x")]))?;
        let y = q.sample(
            n_train_total - n_per_class,
            derive_seed(seed, &[tag("draw-y")]),
        )?;
        let spec = MlpSpec::new(p.ambient_dim(), vec![hidden_width])?;
        // The budget rule counts the pooled training set; batches of 100
        // apply whenever a class holds more than 100 points.
        let tc = TrainConfig {
            epochs: EpochRule::SampleBudget { budget: 800_000 }.epochs(n_train_total),
            batch_size: if n_per_class > 100 { 100 } else { 0 },
            seed: derive_seed(seed, &[tag("train")]),
            ..TrainConfig::default()
        };
        let (params, _) = nn::train(&spec, &tc, &x, &y)?;
        let f = |pt: &[f64]| params.forward_logit(pt);
        Ok(population_loss(&f, p, q, grid)?)
    });
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::{mean_shift_pair, tail_bump_pair};

    fn tiny_cfg(n_all: usize, seed: u64) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(n_all, seed).unwrap();
        cfg.n_run = 40;
        cfg.n_rep = 2;
        cfg.m_perm = 100;
        cfg
    }

    #[test]
    fn n_all_must_be_multiple_of_four() {
        assert!(ExperimentConfig::new(0, 1).is_err());
        assert!(ExperimentConfig::new(402, 1).is_err());
        assert!(ExperimentConfig::new(400, 1).is_ok());
    }

    #[test]
    fn run_once_is_deterministic() {
        let cfg = tiny_cfg(80, 5);
        let pair = mean_shift_pair(0.8);
        for method in [
            Method::NetLogit,
            Method::Gmmd,
            Method::GmmdAd,
            Method::GmmdPlus,
        ] {
            let a = run_once(&cfg, &pair, method, 123).unwrap();
            let b = run_once(&cfg, &pair, method, 123).unwrap();
            assert_eq!(a, b, "method {method:?}");
        }
    }

    #[test]
    fn gmmd_plus_plus_has_no_single_run() {
        let cfg = tiny_cfg(80, 5);
        let pair = mean_shift_pair(0.8);
        assert!(matches!(
            run_once(&cfg, &pair, Method::GmmdPlusPlus, 1),
            Err(PowerError::HarnessOnlyMethod(_))
        ));
    }

    #[test]
    fn power_grows_with_the_departure_for_gmmd() {
        let mut powers = Vec::new();
        for &delta in &[0.0, 0.6, 1.2] {
            let cfg = tiny_cfg(120, 7);
            let pair = mean_shift_pair(delta);
            let p0 = estimate_power(&cfg, &pair, Method::Gmmd, 0).unwrap();
            let p1 = estimate_power(&cfg, &pair, Method::Gmmd, 1).unwrap();
            powers.push(0.5 * (p0 + p1));
        }
        assert!(
            powers[0] < powers[1] && powers[1] < powers[2],
            "powers {powers:?}"
        );
        assert!(powers[2] > 0.8);
    }

    #[test]
    fn replica_aggregation_and_exchangeability() {
        let cfg = {
            let mut c = tiny_cfg(80, 11);
            c.methods = vec![Method::Gmmd];
            c.n_rep = 3;
            c
        };
        let pair = tail_bump_pair(0.5);
        let t = replicate_table(&cfg, &pair).unwrap();
        assert_eq!(t.rows.len(), 1);
        let row = &t.rows[0];
        assert_eq!(row.per_replica_percent.len(), 3);
        assert!(row.std_percent >= 0.0);
        assert!(row.mean_percent >= 0.0 && row.mean_percent <= 100.0);
        // Replicas are pure functions of their index, so recomputing any one
        // of them reproduces the table entry.
        let direct: Vec<f64> = (0..3)
            .map(|r| estimate_power(&cfg, &pair, Method::Gmmd, r as u64).unwrap() * 100.0)
            .collect();
        assert_eq!(row.per_replica_percent, direct);
    }

    #[test]
    fn identical_replicas_have_zero_std() {
        let powers = [0.35, 0.35];
        let row = aggregate_method_power(Method::Gmmd, &powers);
        assert_eq!(row.std_percent, 0.0);
        assert_eq!(row.mean_percent, 35.0);
        assert_eq!(row.median_percent, 35.0);
    }

    #[test]
    fn epoch_rules() {
        assert_eq!(EpochRule::Fixed(100).epochs(4000), 100);
        assert_eq!(
            EpochRule::SampleBudget { budget: 800_000 }.epochs(4000),
            200
        );
        assert_eq!(
            EpochRule::SampleBudget { budget: 800_000 }.epochs(250),
            3200
        );
        assert_eq!(EpochRule::SampleBudget { budget: 10 }.epochs(4000), 1);
    }

    #[test]
    fn loss_width_cells_stay_under_the_divergence_ceiling() {
        let cfg = LossWidthConfig {
            target: LossWidthTarget::Mixture1d,
            widths: vec![4],
            train_sizes: vec![250],
            n_rep: 2,
            base_seed: 3,
        };
        let table = loss_vs_width_experiment(&cfg).unwrap();
        assert_eq!(table.cells.len(), 1);
        assert!((table.jsd_line - 0.0534225220).abs() < 1e-6);
        for cell in &table.cells {
            for &l in &cell.per_replica {
                assert!(l <= table.jsd_line + 1e-4, "loss {l} above ceiling");
            }
        }
    }
}
