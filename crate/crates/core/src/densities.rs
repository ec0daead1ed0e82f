//! Analytic density models: exact pdf evaluation plus seeded sampling.
//!
//! Three families cover every benchmark in the toolkit:
//!
//! - [`AnalyticDensity::MixtureNd`] — Gaussian mixtures with diagonal
//!   covariance in any dimension (products of 1D mixtures are mixtures again,
//!   so the product extension folds into this kind);
//! - [`AnalyticDensity::Curve2d`] — a 1D mixture pushed through
//!   `t ↦ (t/2, sigmoid(2t) + s)` with independent Gaussian `s`, i.e. data
//!   concentrating near a curve in the plane;
//! - [`AnalyticDensity::Sphere3d`] — a quarter-circle arc, optionally rotated
//!   about the arc midpoint, blurred in the parameter plane and mapped onto
//!   the unit sphere.
//!
//! For the pushforward kinds, `pdf` evaluates the closed-form density in the
//! coordinates the generative map fixes: the joint `(x, y)` density for the
//! curve (parameter density times the noise factor), and the parameter-plane
//! density of the pre-image for the sphere. Population functionals integrate
//! in exactly those coordinates.

use crate::linalg::Matrix;
use crate::num::{normal_cdf, normal_pdf, sigmoid};
use crate::quadrature::{gauss_legendre, QuadratureGrid};
use crate::rng::CounterRng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DensityError {
    #[error("dimension mismatch: point has {got} coordinates, density lives in {want}")]
    Dimension { got: usize, want: usize },
    #[error("mixture weights must be nonnegative and sum to 1 (sum = {sum})")]
    BadWeights { sum: f64 },
    #[error("mixture variances must be positive")]
    BadVariance,
    #[error("log ratio undefined: q vanishes at {point:?}")]
    VanishingDenominator { point: Vec<f64> },
    #[error("sample count must be at least 1")]
    EmptySample,
    #[error("product extension requires Gaussian-mixture factors")]
    NonMixtureFactor,
}

/// One diagonal-covariance Gaussian component.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

/// Quarter-circle-on-sphere parameters (see module docs).
#[derive(Debug, Clone, PartialEq)]
pub struct SphereSpec {
    /// Rotation angle of the arc about (1/√2, 1/√2); 0 for the reference arc.
    pub rotation: f64,
    /// Std of the isotropic parameter-plane noise.
    pub noise_sd: f64,
    /// Radius parameter of the map onto the sphere.
    pub map_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticDensity {
    /// Gaussian mixture with diagonal covariances in `dim` dimensions.
    MixtureNd {
        components: Vec<Component>,
        dim: usize,
    },
    /// 1D mixture for `t`, pushed through `(t/2, sigmoid(2t) + s)`,
    /// `s ~ N(0, noise_sd²)`.
    Curve2d {
        base: Box<AnalyticDensity>,
        noise_sd: f64,
    },
    /// Noisy quarter-circle mapped onto the unit sphere in R³.
    Sphere3d(SphereSpec),
}

const WEIGHT_TOL: f64 = 1e-12;

impl AnalyticDensity {
    /// Validated mixture in `dim` dimensions.
    pub fn mixture(components: Vec<Component>, dim: usize) -> Result<Self, DensityError> {
        let sum: f64 = components.iter().map(|c| c.weight).sum();
        if components.iter().any(|c| c.weight < 0.0) || (sum - 1.0).abs() > WEIGHT_TOL {
            return Err(DensityError::BadWeights { sum });
        }
        for c in &components {
            if c.mean.len() != dim || c.var.len() != dim {
                return Err(DensityError::Dimension {
                    got: c.mean.len(),
                    want: dim,
                });
            }
            if c.var.iter().any(|&v| v <= 0.0) {
                return Err(DensityError::BadVariance);
            }
        }
        Ok(AnalyticDensity::MixtureNd { components, dim })
    }

    /// 1D mixture from `(weight, mean, variance)` triples.
    pub fn mixture_1d(parts: &[(f64, f64, f64)]) -> Result<Self, DensityError> {
        let components = parts
            .iter()
            .map(|&(w, m, v)| Component {
                weight: w,
                mean: vec![m],
                var: vec![v],
            })
            .collect();
        Self::mixture(components, 1)
    }

    pub fn std_normal_1d() -> Self {
        Self::mixture_1d(&[(1.0, 0.0, 1.0)]).expect("valid")
    }

    /// Product of independent 1D mixtures, expanded into one mixture whose
    /// components run over the cartesian product of the factors' components.
    pub fn product(factors: &[AnalyticDensity]) -> Result<Self, DensityError> {
        let mut comps = vec![Component {
            weight: 1.0,
            mean: vec![],
            var: vec![],
        }];
        for f in factors {
            let AnalyticDensity::MixtureNd { components, .. } = f else {
                return Err(DensityError::NonMixtureFactor);
            };
            let mut next = Vec::with_capacity(comps.len() * components.len());
            for base in &comps {
                for c in components {
                    let mut mean = base.mean.clone();
                    mean.extend_from_slice(&c.mean);
                    let mut var = base.var.clone();
                    var.extend_from_slice(&c.var);
                    next.push(Component {
                        weight: base.weight * c.weight,
                        mean,
                        var,
                    });
                }
            }
            comps = next;
        }
        let dim = comps.first().map_or(0, |c| c.mean.len());
        Self::mixture(comps, dim)
    }

    pub fn curve_2d(base: AnalyticDensity, noise_sd: f64) -> Self {
        assert_eq!(base.ambient_dim(), 1, "curve pushforward needs a 1D base");
        AnalyticDensity::Curve2d {
            base: Box::new(base),
            noise_sd,
        }
    }

    pub fn sphere_3d(rotation: f64) -> Self {
        AnalyticDensity::Sphere3d(SphereSpec {
            rotation,
            noise_sd: 0.05,
            map_radius: 1.5,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            AnalyticDensity::MixtureNd { dim, .. } => *dim,
            AnalyticDensity::Curve2d { .. } => 2,
            AnalyticDensity::Sphere3d(_) => 3,
        }
    }

    /// Truncation radius per axis: the largest component-mean magnitude
    /// plus eight times the largest component standard deviation, so the
    /// discarded tail mass is below 1e-15.
    pub fn support_radius(&self) -> f64 {
        match self {
            AnalyticDensity::MixtureNd { components, .. } => {
                let mut max_mean: f64 = 0.0;
                let mut max_sd: f64 = 0.0;
                for c in components {
                    max_mean = max_mean.max(c.mean.iter().fold(0.0f64, |a, &x| a.max(x.abs())));
                    max_sd = max_sd.max(c.var.iter().fold(0.0f64, |a, &v| a.max(v.sqrt())));
                }
                max_mean + 8.0 * max_sd
            }
            AnalyticDensity::Curve2d { base, noise_sd } => {
                (base.support_radius() / 2.0).max(1.0 + 8.0 * noise_sd)
            }
            AnalyticDensity::Sphere3d(s) => 1.0 + 8.0 * s.noise_sd,
        }
    }

    /// Integration box in the coordinates `pdf` uses (see module docs).
    pub fn integration_bounds(&self) -> Vec<(f64, f64)> {
        match self {
            AnalyticDensity::MixtureNd { dim, .. } => {
                let r = self.support_radius();
                vec![(-r, r); *dim]
            }
            AnalyticDensity::Curve2d { base, noise_sd } => {
                let rt = base.support_radius();
                vec![
                    (-rt / 2.0, rt / 2.0),
                    (-8.0 * noise_sd, 1.0 + 8.0 * noise_sd),
                ]
            }
            AnalyticDensity::Sphere3d(s) => {
                let pad = 8.0 * s.noise_sd;
                vec![(-pad, 1.0 + pad), (-pad, 1.0 + pad)]
            }
        }
    }

    /// Shipped default grid over [`Self::integration_bounds`].
    pub fn default_grid(&self) -> QuadratureGrid {
        let b = self.integration_bounds();
        match b.len() {
            1 => QuadratureGrid::default_1d(b[0].1),
            2 => QuadratureGrid::default_2d([b[0], b[1]]),
            _ => unreachable!("densities integrate in 1 or 2 coordinates"),
        }
    }

    /// Exact pdf; panics on a dimension mismatch (see [`Self::try_pdf`]).
    pub fn pdf(&self, x: &[f64]) -> f64 {
        self.try_pdf(x).expect("pdf evaluation")
    }

    pub fn try_pdf(&self, x: &[f64]) -> Result<f64, DensityError> {
        match self {
            AnalyticDensity::MixtureNd { components, dim } => {
                if x.len() != *dim {
                    return Err(DensityError::Dimension {
                        got: x.len(),
                        want: *dim,
                    });
                }
                let mut p = 0.0;
                for c in components {
                    let mut term = c.weight;
                    for j in 0..*dim {
                        term *= normal_pdf(x[j], c.mean[j], c.var[j].sqrt());
                    }
                    p += term;
                }
                Ok(p)
            }
            AnalyticDensity::Curve2d { base, noise_sd } => {
                if x.len() != 2 {
                    return Err(DensityError::Dimension {
                        got: x.len(),
                        want: 2,
                    });
                }
                // t = 2x has density 2 p_t(2x); y | x ~ N(sigmoid(4x), sd²).
                let pt = 2.0 * base.try_pdf(&[2.0 * x[0]])?;
                Ok(pt * normal_pdf(x[1], sigmoid(4.0 * x[0]), *noise_sd))
            }
            AnalyticDensity::Sphere3d(s) => {
                if x.len() != 2 {
                    return Err(DensityError::Dimension {
                        got: x.len(),
                        want: 2,
                    });
                }
                Ok(sphere_param_pdf(s, x[0], x[1]))
            }
        }
    }

    /// `log(p(x)/q(x))`; the population witness of the logit test.
    pub fn log_ratio(&self, q: &AnalyticDensity, x: &[f64]) -> Result<f64, DensityError> {
        let pv = self.try_pdf(x)?;
        let qv = q.try_pdf(x)?;
        if qv <= 0.0 {
            return Err(DensityError::VanishingDenominator { point: x.to_vec() });
        }
        Ok(pv.ln() - qv.ln())
    }

    /// `n` i.i.d. draws, deterministic in `seed`; rows are ambient points.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Matrix, DensityError> {
        if n == 0 {
            return Err(DensityError::EmptySample);
        }
        let mut rng = CounterRng::new(seed, 0);
        let dim = self.ambient_dim();
        let mut m = Matrix::zeros(n, dim);
        for i in 0..n {
            self.sample_into(&mut rng, m.row_mut(i));
        }
        Ok(m)
    }

    fn sample_into(&self, rng: &mut CounterRng, out: &mut [f64]) {
        match self {
            AnalyticDensity::MixtureNd { components, dim } => {
                let u = rng.next_f64();
                let mut acc = 0.0;
                let mut pick = components.len() - 1;
                for (k, c) in components.iter().enumerate() {
                    acc += c.weight;
                    if u < acc {
                        pick = k;
                        break;
                    }
                }
                let c = &components[pick];
                for j in 0..*dim {
                    out[j] = c.mean[j] + c.var[j].sqrt() * rng.next_gaussian();
                }
            }
            AnalyticDensity::Curve2d { base, noise_sd } => {
                let mut t = [0.0];
                base.sample_into(rng, &mut t);
                let s = noise_sd * rng.next_gaussian();
                out[0] = t[0] / 2.0;
                out[1] = sigmoid(2.0 * t[0]) + s;
            }
            AnalyticDensity::Sphere3d(s) => {
                let theta = rng.uniform(0.0, std::f64::consts::FRAC_PI_2);
                let (mut u1, mut u2) = arc_point(s.rotation, theta);
                u1 += s.noise_sd * rng.next_gaussian();
                u2 += s.noise_sd * rng.next_gaussian();
                let r2 = s.map_radius * s.map_radius;
                let rad = (r2 - u1 * u1 - u2 * u2).max(0.0).sqrt();
                out[0] = u1 / s.map_radius;
                out[1] = u2 / s.map_radius;
                out[2] = rad / s.map_radius;
            }
        }
    }

    /// Cdf of the first coordinate's analytic marginal, used by the
    /// Kolmogorov–Smirnov sampler checks.
    pub fn marginal_cdf_x1(&self, x: f64) -> f64 {
        match self {
            AnalyticDensity::MixtureNd { components, .. } => components
                .iter()
                .map(|c| c.weight * normal_cdf((x - c.mean[0]) / c.var[0].sqrt()))
                .sum(),
            AnalyticDensity::Curve2d { base, .. } => base.marginal_cdf_x1(2.0 * x),
            AnalyticDensity::Sphere3d(s) => {
                // First ambient coordinate is u1 / map_radius with
                // u1 = arc_x(θ) + noise; integrate the normal cdf over θ.
                let (nodes, weights) = gauss_legendre(96, 0.0, std::f64::consts::FRAC_PI_2);
                let mut acc = 0.0;
                for (t, w) in nodes.iter().zip(&weights) {
                    let (a1, _) = arc_point(s.rotation, *t);
                    acc += w * normal_cdf((x * s.map_radius - a1) / s.noise_sd);
                }
                acc / std::f64::consts::FRAC_PI_2
            }
        }
    }
}

/// Point on the quarter-circle arc rotated by `rotation` about the arc
/// midpoint (1/√2, 1/√2).
fn arc_point(rotation: f64, theta: f64) -> (f64, f64) {
    let (x, y) = (theta.cos(), theta.sin());
    if rotation == 0.0 {
        return (x, y);
    }
    let c = std::f64::consts::FRAC_1_SQRT_2;
    let (dx, dy) = (x - c, y - c);
    let (cr, sr) = (rotation.cos(), rotation.sin());
    (c + cr * dx - sr * dy, c + sr * dx + cr * dy)
}

/// Parameter-plane density of the noisy arc: uniform-on-arc convolved with
/// an isotropic Gaussian, by 96-node quadrature over the arc angle.
fn sphere_param_pdf(s: &SphereSpec, u1: f64, u2: f64) -> f64 {
    let (nodes, weights) = gauss_legendre(96, 0.0, std::f64::consts::FRAC_PI_2);
    let inv = 1.0 / std::f64::consts::FRAC_PI_2;
    let mut acc = 0.0;
    for (t, w) in nodes.iter().zip(&weights) {
        let (a1, a2) = arc_point(s.rotation, *t);
        acc += w * normal_pdf(u1, a1, s.noise_sd) * normal_pdf(u2, a2, s.noise_sd);
    }
    acc * inv
}

// ----------------------------------------------------------------------
// Benchmark pairs.
// ----------------------------------------------------------------------

/// Mean shift: `p = N(0,1)`, `q = N(delta, 1)`.
pub fn mean_shift_pair(delta: f64) -> (AnalyticDensity, AnalyticDensity) {
    (
        AnalyticDensity::std_normal_1d(),
        AnalyticDensity::mixture_1d(&[(1.0, delta, 1.0)]).expect("valid"),
    )
}

/// Variance dilation: `p = N(0,1)`, `q = N(0, (1+delta)²)`.
pub fn variance_dilation_pair(delta: f64) -> (AnalyticDensity, AnalyticDensity) {
    let s = (1.0 + delta) * (1.0 + delta);
    (
        AnalyticDensity::std_normal_1d(),
        AnalyticDensity::mixture_1d(&[(1.0, 0.0, s)]).expect("valid"),
    )
}

/// Tail bump: `p = N(0,1)`, `q = (1-delta) N(0,1) + delta N(3, 1/16)`.
pub fn tail_bump_pair(delta: f64) -> (AnalyticDensity, AnalyticDensity) {
    (
        AnalyticDensity::std_normal_1d(),
        AnalyticDensity::mixture_1d(&[(1.0 - delta, 0.0, 1.0), (delta, 3.0, 1.0 / 16.0)])
            .expect("valid"),
    )
}

/// Five-bump grid mixture versus a contaminated normal; the 1D optimization
/// benchmark.
pub fn mixture_grid_pair() -> (AnalyticDensity, AnalyticDensity) {
    let sp2 = 0.8 * 0.8;
    let p = AnalyticDensity::mixture_1d(&[
        (0.2, -2.0, sp2),
        (0.2, -1.0, sp2),
        (0.2, 0.0, sp2),
        (0.2, 1.0, sp2),
        (0.2, 2.0, sp2),
    ])
    .expect("valid");
    let sq2 = 0.5 * 0.5;
    let q = AnalyticDensity::mixture_1d(&[(0.9, 0.0, 1.0), (0.05, -3.0, sq2), (0.05, 4.0, sq2)])
        .expect("valid");
    (p, q)
}

/// The grid-mixture pair pushed onto the noisy sigmoid curve in the plane.
pub fn sigmoid_curve_pair() -> (AnalyticDensity, AnalyticDensity) {
    let (p, q) = mixture_grid_pair();
    (
        AnalyticDensity::curve_2d(p, 0.05),
        AnalyticDensity::curve_2d(q, 0.05),
    )
}

/// Arc on the sphere versus the same arc rotated by `delta`.
pub fn sphere_pair(delta: f64) -> (AnalyticDensity, AnalyticDensity) {
    (
        AnalyticDensity::sphere_3d(0.0),
        AnalyticDensity::sphere_3d(delta),
    )
}

/// Default grid wide enough for both densities of a pair (elementwise hull
/// of the two integration boxes).
pub fn pair_grid(p: &AnalyticDensity, q: &AnalyticDensity) -> crate::quadrature::QuadratureGrid {
    let bp = p.integration_bounds();
    let bq = q.integration_bounds();
    assert_eq!(
        bp.len(),
        bq.len(),
        "pair must share its integration dimension"
    );
    let bounds: Vec<(f64, f64)> = bp
        .iter()
        .zip(&bq)
        .map(|(&(alo, ahi), &(blo, bhi))| (alo.min(blo), ahi.max(bhi)))
        .collect();
    match bounds.len() {
        1 => crate::quadrature::QuadratureGrid::new(
            &bounds,
            2048,
            crate::quadrature::Rule::GaussLegendre,
        )
        .expect("valid grid"),
        _ => crate::quadrature::QuadratureGrid::new(
            &bounds,
            256,
            crate::quadrature::Rule::GaussLegendre,
        )
        .expect("valid grid"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;

    const INV_SQRT_2PI: f64 = 0.3989422804014327;

    #[test]
    fn standard_normal_pdf_at_zero() {
        let p = AnalyticDensity::std_normal_1d();
        assert!((p.pdf(&[0.0]) - INV_SQRT_2PI).abs() < 1e-12);
    }

    #[test]
    fn tail_bump_collapses_at_zero_delta() {
        let (_, q) = tail_bump_pair(0.0);
        assert!((q.pdf(&[0.0]) - INV_SQRT_2PI).abs() < 1e-12);
    }

    #[test]
    fn tail_bump_pdf_term_by_term() {
        // Independent arithmetic: 0.92 N(3; 0,1) + 0.08 N(3; 3, 1/16).
        let (_, q) = tail_bump_pair(0.08);
        let by_hand = 0.92 * INV_SQRT_2PI * (-4.5f64).exp() + 0.08 * INV_SQRT_2PI / 0.25;
        assert!((q.pdf(&[3.0]) - by_hand).abs() < 1e-14);
        assert!((by_hand - 0.13173883026744146).abs() < 1e-14);
    }

    #[test]
    fn pdf_dimension_mismatch() {
        let p = AnalyticDensity::std_normal_1d();
        assert!(matches!(
            p.try_pdf(&[0.0, 1.0]),
            Err(DensityError::Dimension { got: 2, want: 1 })
        ));
    }

    #[test]
    fn bad_weights_rejected() {
        assert!(AnalyticDensity::mixture_1d(&[(0.6, 0.0, 1.0), (0.5, 1.0, 1.0)]).is_err());
        assert!(AnalyticDensity::mixture_1d(&[(1.5, 0.0, 1.0), (-0.5, 1.0, 1.0)]).is_err());
    }

    #[test]
    fn pdf_integrates_to_one() {
        for d in [
            tail_bump_pair(0.08).1,
            mixture_grid_pair().0,
            mixture_grid_pair().1,
            sigmoid_curve_pair().0,
            AnalyticDensity::sphere_3d(0.0),
        ] {
            let grid = d.default_grid();
            let mass = grid.integrate(|x| d.pdf(x));
            assert!((mass - 1.0).abs() < 2e-5, "mass {mass} for {d:?}");
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let (_, q) = tail_bump_pair(0.08);
        let a = q.sample(64, 9).unwrap();
        let b = q.sample(64, 9).unwrap();
        let c = q.sample(64, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn sphere_rows_have_unit_norm() {
        let d = AnalyticDensity::sphere_3d(0.3);
        let m = d.sample(200, 4).unwrap();
        for r in m.iter_rows() {
            assert!((norm(r) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_shift_sample_mean_obeys_clt_bound() {
        let (_, q) = mean_shift_pair(0.5);
        let n = 100_000;
        let m = q.sample(n, 11).unwrap();
        let mean = m.data().iter().sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 3.0 / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn log_ratio_closed_forms() {
        // p = N(0,1), q = N(d,1): log p/q = d²/2 - d·x, and the swapped
        // orientation gives d·x - d²/2.
        let (p, q) = mean_shift_pair(0.7);
        for &x in &[-1.0, 0.0, 0.4, 2.5] {
            let lr = p.log_ratio(&q, &[x]).unwrap();
            assert!((lr - (0.7 * 0.7 / 2.0 - 0.7 * x)).abs() < 1e-12);
            let swapped = q.log_ratio(&p, &[x]).unwrap();
            assert!((swapped - (0.7 * x - 0.7 * 0.7 / 2.0)).abs() < 1e-12);
        }
        let p = AnalyticDensity::std_normal_1d();
        assert_eq!(p.log_ratio(&p, &[1.3]).unwrap(), 0.0);
        let (p, q) = tail_bump_pair(0.08);
        let got = p.log_ratio(&q, &[3.0]).unwrap();
        assert!((got - (p.pdf(&[3.0]).ln() - 0.13173883026744146f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn product_extension_matches_factor_product() {
        let a = AnalyticDensity::mixture_1d(&[(0.5, -1.0, 1.0), (0.5, 1.0, 0.25)]).unwrap();
        let b = AnalyticDensity::std_normal_1d();
        let prod = AnalyticDensity::product(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(prod.ambient_dim(), 2);
        for &(x, y) in &[(0.0, 0.0), (1.0, -0.5), (-2.0, 0.3)] {
            let want = a.pdf(&[x]) * b.pdf(&[y]);
            assert!((prod.pdf(&[x, y]) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn curve_pdf_matches_generative_factorization() {
        let (p, _) = sigmoid_curve_pair();
        let AnalyticDensity::Curve2d { base, noise_sd } = &p else {
            panic!()
        };
        let (x, y) = (0.4, 0.8);
        let want = 2.0 * base.pdf(&[2.0 * x]) * normal_pdf(y, sigmoid(4.0 * x), *noise_sd);
        assert!((p.pdf(&[x, y]) - want).abs() < 1e-14);
    }
}
