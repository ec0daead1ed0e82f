//! Data sources for the harness: analytic density pairs, or pools of
//! externally supplied samples (IDX files) subsampled per run.

use crate::config::RunConfig;
use crate::error::CliError;
use crate::idx::read_idx;
use logitest_core::densities::AnalyticDensity;
use logitest_core::linalg::Matrix;
use logitest_core::power::PairSource;
use logitest_core::rng::{derive_seed, tag, CounterRng};
use std::path::Path;

pub enum DataSource {
    Analytic(AnalyticDensity, AnalyticDensity),
    /// Finite pools; each run draws `n_each` rows per side without
    /// replacement under a seeded shuffle.
    Pools(Matrix, Matrix),
}

impl DataSource {
    pub fn from_config(cfg: &RunConfig) -> Result<DataSource, CliError> {
        if let Some(idx) = &cfg.data.idx {
            let x = read_idx(
                Path::new(&idx.x_images),
                Path::new(&idx.x_labels),
                &idx.class_filter,
            )?;
            let y = read_idx(
                Path::new(&idx.y_images),
                Path::new(&idx.y_labels),
                &idx.class_filter,
            )?;
            if x.cols() != y.cols() {
                return Err(CliError::Idx(format!(
                    "pool dimensions differ: {} vs {}",
                    x.cols(),
                    y.cols()
                )));
            }
            Ok(DataSource::Pools(x, y))
        } else {
            let (p, q) = cfg.density_pair()?;
            Ok(DataSource::Analytic(p, q))
        }
    }

    pub fn analytic(&self) -> Option<(&AnalyticDensity, &AnalyticDensity)> {
        match self {
            DataSource::Analytic(p, q) => Some((p, q)),
            DataSource::Pools(..) => None,
        }
    }
}

fn subsample(pool: &Matrix, n: usize, seed: u64) -> Matrix {
    let mut rng = CounterRng::new(seed, 0);
    let idx = rng.permutation(pool.rows());
    assert!(
        n <= pool.rows(),
        "requested {n} samples from a pool of {}",
        pool.rows()
    );
    pool.select_rows(&idx[..n])
}

impl PairSource for DataSource {
    fn dim(&self) -> usize {
        match self {
            DataSource::Analytic(p, _) => p.ambient_dim(),
            DataSource::Pools(x, _) => x.cols(),
        }
    }

    fn draw_pair(&self, n_each: usize, seed: u64) -> (Matrix, Matrix) {
        match self {
            DataSource::Analytic(p, q) => {
                let x = p
                    .sample(n_each, derive_seed(seed, &[tag("draw-x")]))
                    .expect("n >= 1");
                let y = q
                    .sample(n_each, derive_seed(seed, &[tag("draw-y")]))
                    .expect("n >= 1");
                (x, y)
            }
            DataSource::Pools(xp, yp) => (
                subsample(xp, n_each, derive_seed(seed, &[tag("draw-x")])),
                subsample(yp, n_each, derive_seed(seed, &[tag("draw-y")])),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pool_subsampling_is_seeded_and_disjoint() {
        let pool = Matrix::from_rows(&(0..10).map(|i| vec![i as f64]).collect::<Vec<_>>());
        let a = subsample(&pool, 4, 7);
        let b = subsample(&pool, 4, 7);
        let c = subsample(&pool, 4, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
        // Without replacement: all drawn values distinct.
        let mut vals: Vec<f64> = a.iter_rows().map(|r| r[0]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        assert_eq!(vals.len(), 4);
    }
}
