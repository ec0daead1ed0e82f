//! Constructive ReLU approximation of smooth functions on low-dimensional
//! manifolds.
//!
//! The pipeline:
//!
//! 1. [`Atlas::build`] covers a sampled manifold with charts — greedy
//!    `δ/2`-net centers, orthonormal tangent frames, and measured distortion
//!    constants `α_i, β_i` relating geodesic to projected distance (the
//!    chart radius is halved until every `β_i ≤ 2`).
//! 2. A smooth partition of unity weights each chart through a compactly
//!    supported bump in chart-local coordinates.
//! 3. [`fit_coefficients`] expands each localized slice `f·η_i`, viewed in
//!    chart coordinates, over the trapezoid wavelet dictionary
//!    ([`basis`]) by ridge-regularized least squares (the dictionary's dual
//!    frame realized numerically), with the target extended by zero outside
//!    the chart.
//! 4. [`assemble_net`] gates every local approximant into the tube of its
//!    chart with the [`gdelta`] gadget and sums:
//!    `relu(relu(f̂) + F₀·g(v) - F₀) - relu(relu(-f̂) + F₀·g(v) - F₀)`,
//!    where `F₀` exceeds the sup of `|f|` on the manifold, so the branch
//!    vanishes whenever `g = 0` and passes `f̂` through whenever `g = 1`.
//!
//! Everything is an explicit four-layer ReLU computation; the audited
//! parameter count tracks the network form of each ingredient.

pub mod basis;
pub mod gdelta;
pub mod geometry;

use crate::linalg::{cholesky_solve, dot, norm, spd_condition_estimate, sq_dist, Matrix};
use crate::nn::Layer;
use crate::rng::CounterRng;
use basis::{dictionary, TrapezoidBasis};
use gdelta::{GDelta, GDeltaError};
use geometry::{ArcLengthTable, ParamManifold};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ManifoldError {
    #[error("no chart radius above the floor {floor} satisfies the distortion bounds")]
    AtlasDistortion { floor: f64 },
    #[error("fitting dictionary is ill-conditioned (estimate {estimate:.3e}); enlarge the grid or reduce k_max")]
    IllConditioned { estimate: f64 },
    #[error(transparent)]
    Gadget(#[from] GDeltaError),
    #[error("malformed container: {0}")]
    BadContainer(String),
}

/// Fraction of the chart radius where the partition-of-unity bump vanishes.
const BUMP_SUPPORT_FACTOR: f64 = 0.9;
/// Distortion tolerance when accepting a chart.
const DISTORTION_TOL: f64 = 1e-9;
/// Relative strength of the scale-adapted coefficient penalty (see
/// [`fit_coefficients`]).
const ENVELOPE_PENALTY: f64 = 1e-2;

/// One chart: a center on the manifold, an orthonormal tangent frame, and
/// measured distortion constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub center: Vec<f64>,
    /// `d × D`, rows orthonormal.
    pub frame: Matrix,
    pub radius: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Indices into the atlas sample cache of the points this chart owns.
    pub members: Vec<usize>,
}

impl Chart {
    /// Tangent coordinates of `x` relative to the chart center.
    pub fn local_u(&self, x: &[f64]) -> Vec<f64> {
        (0..self.frame.rows())
            .map(|r| {
                self.frame
                    .row(r)
                    .iter()
                    .zip(x.iter().zip(&self.center))
                    .map(|(f, (xv, cv))| f * (xv - cv))
                    .sum()
            })
            .collect()
    }

    /// Tangent coordinates normalized by the chart radius, so the chart
    /// occupies the unit ball and the wavelet levels start at its scale.
    pub fn scaled_u(&self, x: &[f64]) -> Vec<f64> {
        self.local_u(x)
            .into_iter()
            .map(|u| u / self.radius)
            .collect()
    }

    /// Ambient residual orthogonal to the tangent plane.
    pub fn normal_residual(&self, x: &[f64]) -> Vec<f64> {
        let u = self.local_u(x);
        let mut v: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        for (r, uc) in u.iter().enumerate() {
            for (vj, fj) in v.iter_mut().zip(self.frame.row(r)) {
                *vj -= uc * fj;
            }
        }
        v
    }
}

/// A cached manifold sample: parameter, ambient point.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldSample {
    pub param: Vec<f64>,
    pub point: Vec<f64>,
}

/// Chart cover plus the sample cache the charts were measured on.
#[derive(Debug, Clone, PartialEq)]
pub struct Atlas {
    pub manifold: ParamManifold,
    pub delta: f64,
    pub charts: Vec<Chart>,
    pub samples: Vec<ManifoldSample>,
    arc_table: ArcLengthTable,
}

/// Quintic smoothstep bump: 1 at 0, 0 beyond 1, with vanishing first and
/// second derivatives at both ends (C² on the line, with moderate curvature
/// so localized slices stay cheap to approximate).
fn bump(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else if s <= 0.0 {
        1.0
    } else {
        1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

impl Atlas {
    /// Greedy chart cover of `n_grid` manifold samples (per intrinsic
    /// dimension). If any chart violates the distortion bound `β ≤ 2`, the
    /// radius is halved and the cover rebuilt, down to a floor of 1e-3.
    pub fn build(
        manifold: ParamManifold,
        delta: f64,
        n_grid: usize,
    ) -> Result<Atlas, ManifoldError> {
        let arc_table = manifold.arc_length_table(10_000);
        let params = manifold.parameter_grid(n_grid);
        let samples: Vec<ManifoldSample> = params
            .into_iter()
            .map(|param| {
                let point = manifold.point(&param);
                ManifoldSample { param, point }
            })
            .collect();
        let mut radius = delta;
        const FLOOR: f64 = 1e-3;
        while radius >= FLOOR {
            match Self::try_cover(&manifold, radius, &samples, &arc_table) {
                Some(charts) => {
                    return Ok(Atlas {
                        manifold,
                        delta: radius,
                        charts,
                        samples,
                        arc_table,
                    })
                }
                None => radius /= 2.0,
            }
        }
        Err(ManifoldError::AtlasDistortion { floor: FLOOR })
    }

    fn try_cover(
        manifold: &ParamManifold,
        radius: f64,
        samples: &[ManifoldSample],
        arc_table: &ArcLengthTable,
    ) -> Option<Vec<Chart>> {
        // Greedy radius/2 net in ambient distance.
        let mut centers: Vec<usize> = Vec::new();
        for (i, s) in samples.iter().enumerate() {
            let covered = centers
                .iter()
                .any(|&c| sq_dist(&s.point, &samples[c].point) < (radius / 2.0) * (radius / 2.0));
            if !covered {
                centers.push(i);
            }
        }
        let mut charts = Vec::with_capacity(centers.len());
        for c in centers {
            let center_sample = &samples[c];
            let frame = manifold.tangent_frame(&center_sample.param);
            let members: Vec<usize> = (0..samples.len())
                .filter(|&i| sq_dist(&samples[i].point, &center_sample.point) < radius * radius)
                .collect();
            let chart = Chart {
                center: center_sample.point.clone(),
                frame,
                radius,
                alpha: f64::INFINITY,
                beta: 0.0,
                members,
            };
            let (alpha, beta) = measure_distortion(manifold, &chart, samples, arc_table, 10_000);
            if beta > 2.0 + DISTORTION_TOL || alpha < 0.5 - DISTORTION_TOL {
                return None;
            }
            charts.push(Chart {
                alpha,
                beta,
                ..chart
            });
        }
        Some(charts)
    }

    /// Partition-of-unity weights of every chart at an ambient point on the
    /// manifold: normalized bumps of the chart-local distance
    /// `‖x - c_i‖ = √(‖u‖² + ‖v‖²)`.
    pub fn pou_weights(&self, x: &[f64]) -> Vec<f64> {
        let mut w: Vec<f64> = self
            .charts
            .iter()
            .map(|c| {
                let dist = sq_dist(x, &c.center).sqrt();
                bump(dist / (BUMP_SUPPORT_FACTOR * c.radius))
            })
            .collect();
        let total: f64 = w.iter().sum();
        assert!(
            total > 0.0,
            "point is not covered by the atlas; it must lie on the sampled manifold"
        );
        w.iter_mut().for_each(|v| *v /= total);
        w
    }
}

/// Min/max ratios of geodesic to projected distance over (at most
/// `pair_cap`) member pairs.
fn measure_distortion(
    manifold: &ParamManifold,
    chart: &Chart,
    samples: &[ManifoldSample],
    arc_table: &ArcLengthTable,
    pair_cap: usize,
) -> (f64, f64) {
    let m = chart.members.len();
    if m < 2 {
        return (1.0, 1.0);
    }
    let total_pairs = m * (m - 1) / 2;
    let stride = (total_pairs / pair_cap).max(1);
    let mut alpha = f64::INFINITY;
    let mut beta: f64 = 0.0;
    let mut counter = 0usize;
    for ai in 0..m {
        for bi in (ai + 1)..m {
            counter += 1;
            if counter % stride != 0 {
                continue;
            }
            let sa = &samples[chart.members[ai]];
            let sb = &samples[chart.members[bi]];
            let ua = chart.local_u(&sa.point);
            let ub = chart.local_u(&sb.point);
            let proj = sq_dist(&ua, &ub).sqrt();
            if proj < 1e-12 {
                continue;
            }
            let geo = manifold.geodesic(&sa.param, &sb.param, arc_table);
            let ratio = geo / proj;
            alpha = alpha.min(ratio);
            beta = beta.max(ratio);
        }
    }
    if !alpha.is_finite() {
        (1.0, 1.0)
    } else {
        (alpha, beta)
    }
}

/// Coefficients of one chart over the trapezoid dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartFit {
    pub dict: Vec<TrapezoidBasis>,
    pub coefficients: Vec<f64>,
    /// Sup of |fit - target| over all fitting points.
    pub residual_sup: f64,
}

impl ChartFit {
    pub fn eval(&self, u: &[f64]) -> f64 {
        self.dict
            .iter()
            .zip(&self.coefficients)
            .map(|(b, c)| c * b.psi(u))
            .sum()
    }

    /// Largest |coefficient| per level `0..=k_max`.
    pub fn max_coefficient_per_level(&self, k_max: u32) -> Vec<f64> {
        let mut out = vec![0.0f64; k_max as usize + 1];
        for (b, c) in self.dict.iter().zip(&self.coefficients) {
            let slot = &mut out[b.k as usize];
            *slot = slot.max(c.abs());
        }
        out
    }
}

/// Fitting points per axis for the zero-extension grid: at least 2048 in
/// 1D and dense enough to put two points on the finest level's ramps.
fn zero_grid_per_axis(d: usize, k_max: u32, dom: f64) -> usize {
    match d {
        1 => {
            let finest = (-(k_max as f64)).exp2();
            2048usize.max((4.0 * dom / finest).ceil() as usize)
        }
        _ => 64,
    }
}

/// Expand `f·η_i` (in the chart's tangent coordinates, zero outside the
/// chart) over the dictionary by ridge least squares.
pub fn fit_coefficients(
    f: &dyn Fn(&[f64]) -> f64,
    atlas: &Atlas,
    chart_idx: usize,
    k_max: u32,
    c_d: f64,
    ridge: f64,
) -> Result<ChartFit, ManifoldError> {
    let chart = &atlas.charts[chart_idx];
    let d = chart.frame.rows();
    // Chart coordinates are normalized to the unit ball; the dictionary
    // levels then start at the chart scale.
    let dict = dictionary(d, k_max, 1.0, c_d);
    let mut points: Vec<(Vec<f64>, f64, f64)> = Vec::new();
    for &i in &chart.members {
        let s = &atlas.samples[i];
        let eta = atlas.pou_weights(&s.point)[chart_idx];
        points.push((chart.scaled_u(&s.point), f(&s.point) * eta, 1.0));
    }
    // Zero targets over the rest of the dictionary's reach (the bump
    // vanishes beyond 0.9 of the chart, so the extended target is
    // continuous). The near fringe carries extra weight: the tube gate
    // stays fully open out to tangent offsets well beyond the chart, so
    // junk there enters the assembled sum at full strength.
    let dom = 4.0;
    let per_axis = zero_grid_per_axis(d, k_max, dom);
    let mut idx = vec![0usize; d];
    loop {
        let u: Vec<f64> = idx
            .iter()
            .map(|&i| -dom + 2.0 * dom * i as f64 / (per_axis - 1) as f64)
            .collect();
        let r = norm(&u);
        if r >= 0.95 {
            let weight = if r <= 3.0 { 4.0 } else { 1.0 };
            points.push((u, 0.0, weight));
        }
        let mut pos = 0;
        loop {
            if pos == d {
                break;
            }
            idx[pos] += 1;
            if idx[pos] < per_axis {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        if pos == d {
            break;
        }
    }
    // One joint weighted least squares over the whole dictionary, with two
    // regularizers on top of the Jacobi-scaled normal equations: the base
    // relative ridge, and a scale-adapted penalty that grows like the
    // inverse square of the expected coefficient envelope
    // `2^{-(2/d + 1/2)k}`. The penalty settles the dictionary's
    // near-degenerate cross-level directions onto the envelope without
    // disturbing coefficients the target genuinely needs.
    let n_points = points.len();
    let n_cols = dict.len();
    let mut design = Vec::with_capacity(n_points * n_cols);
    for (u, _, _) in &points {
        for e in &dict {
            design.push(e.psi(u));
        }
    }
    let mut gram = vec![0.0; n_cols * n_cols];
    let mut rhs = vec![0.0; n_cols];
    for (pi, (_, t, wt)) in points.iter().enumerate() {
        let row = &design[pi * n_cols..(pi + 1) * n_cols];
        for a in 0..n_cols {
            if row[a] == 0.0 {
                continue;
            }
            rhs[a] += wt * row[a] * t;
            for b in a..n_cols {
                gram[a * n_cols + b] += wt * row[a] * row[b];
            }
        }
    }
    for a in 0..n_cols {
        for b in 0..a {
            gram[a * n_cols + b] = gram[b * n_cols + a];
        }
    }
    let mut scale = vec![0.0; n_cols];
    for a in 0..n_cols {
        let diag = gram[a * n_cols + a];
        if diag <= 0.0 || !diag.is_finite() {
            // A column with no energy on the grid cannot be identified.
            return Err(ManifoldError::IllConditioned {
                estimate: f64::INFINITY,
            });
        }
        scale[a] = diag.sqrt();
    }
    let envelope_rate = 2.0 * (2.0 / d as f64 + 0.5);
    for a in 0..n_cols {
        for b in 0..n_cols {
            gram[a * n_cols + b] /= scale[a] * scale[b];
        }
        rhs[a] /= scale[a];
        let level_gap = dict[a].k as f64 - k_max as f64;
        gram[a * n_cols + a] +=
            ridge.max(1e-300) + ENVELOPE_PENALTY * (envelope_rate * level_gap).exp2();
    }
    let estimate = spd_condition_estimate(&gram, n_cols);
    if estimate > 1e12 {
        return Err(ManifoldError::IllConditioned { estimate });
    }
    let mut fac = gram;
    if cholesky_solve(&mut fac, n_cols, &mut rhs).is_err() {
        return Err(ManifoldError::IllConditioned { estimate });
    }
    let coefficients: Vec<f64> = rhs.iter().zip(&scale).map(|(c, s)| c / s).collect();
    let mut residual_sup: f64 = 0.0;
    for (pi, (_, t, _)) in points.iter().enumerate() {
        let row = &design[pi * n_cols..(pi + 1) * n_cols];
        let pred: f64 = row.iter().zip(&coefficients).map(|(r, c)| r * c).sum();
        residual_sup = residual_sup.max((pred - t).abs());
    }
    Ok(ChartFit {
        dict,
        coefficients,
        residual_sup,
    })
}

/// Least-squares slope of `log2(max |c|)` against the level over the upper
/// half of the levels — the asymptotic regime, past the scales still
/// dominated by the chart-sized features where the decay bound's constant
/// lives. `None` when fewer than three of those levels carry mass.
pub fn decay_slope_asymptotic(level_maxima: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = level_maxima
        .iter()
        .enumerate()
        .skip(level_maxima.len() / 2)
        .filter(|(_, &v)| v > 0.0)
        .map(|(k, &v)| (k as f64, v.log2()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    Some((n * sxy - sx * sy) / (n * sxx - sx * sx))
}

/// Reported (not enforced) scale count for a target uniform error: the
/// truncation argument gives `2^{k_max} ~ (n_charts · C / epsilon)^{d/2}`
/// with `C` a target-dependent constant; this reports the rule at `C = 1`.
/// Callers pick `k_max` explicitly and can use this as a starting point.
pub fn suggested_k_max(epsilon: f64, intrinsic_dim: usize, n_charts: usize) -> u32 {
    assert!(epsilon > 0.0 && epsilon < 1.0);
    let d = intrinsic_dim as f64;
    (d / 2.0 * (n_charts as f64 / epsilon).log2())
        .ceil()
        .max(0.0) as u32
}

/// The assembled four-layer network.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstructedNet {
    pub charts: Vec<Chart>,
    pub fits: Vec<ChartFit>,
    pub gadget: GDelta,
    /// Gating level: one plus the sup of |f| over the sampled manifold.
    pub f_sup_bound: f64,
    pub k_max: u32,
    pub c_d: f64,
    pub delta: f64,
    pub parameter_count: usize,
}

impl ConstructedNet {
    /// Gated contribution of one chart at `x`.
    fn chart_value(&self, i: usize, x: &[f64]) -> f64 {
        let chart = &self.charts[i];
        let u = chart.scaled_u(x);
        let v = chart.normal_residual(x);
        let fhat = self.fits[i].eval(&u);
        let g = self.gadget.eval(&v);
        let f0 = self.f_sup_bound;
        let relu = |t: f64| t.max(0.0);
        // The gate bias is grouped as f0 (g - 1) so a fully open gate
        // passes the local fit through bit-exactly.
        relu(relu(fhat) + f0 * (g - 1.0)) - relu(relu(-fhat) + f0 * (g - 1.0))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (0..self.charts.len()).map(|i| self.chart_value(i, x)).sum()
    }

    /// Empirical Lipschitz estimate over seeded random ambient pairs in the
    /// box `[-box_radius, box_radius]^D`.
    pub fn lipschitz_estimate(&self, box_radius: f64, n_pairs: usize, seed: u64) -> f64 {
        let dim = self.charts[0].center.len();
        let mut rng = CounterRng::new(seed, 0);
        let mut worst: f64 = 0.0;
        for _ in 0..n_pairs {
            let a: Vec<f64> = (0..dim)
                .map(|_| rng.uniform(-box_radius, box_radius))
                .collect();
            let b: Vec<f64> = (0..dim)
                .map(|_| rng.uniform(-box_radius, box_radius))
                .collect();
            let dist = sq_dist(&a, &b).sqrt();
            if dist < 1e-9 {
                continue;
            }
            worst = worst.max((self.eval(&a) - self.eval(&b)).abs() / dist);
        }
        worst
    }
}

/// Audited parameter count of the explicit network form: per chart the two
/// coordinate layers (`u = A(x - c)`: d(D+1); `v = (x - c) - Aᵀu`: dD + D)
/// plus one combination weight per dictionary element plus the ten gating
/// weights; the shared basis layer costs `13 d + 4` per dictionary element
/// (four ReLUs with weight and bias per coordinate profile, four combination
/// weights, the d-way sum with bias and amplitude, and the two-scale mix);
/// the shared gadget is audited by its builder.
fn audit_parameter_count(charts: &[Chart], fits: &[ChartFit], gadget: &GDelta) -> usize {
    let d = charts[0].frame.rows();
    let dim = charts[0].center.len();
    let per_chart_coords = d * (dim + 1) + d * dim + dim;
    let shared_basis: usize = fits.first().map_or(0, |f| f.dict.len() * (13 * d + 4));
    let per_chart: usize = charts
        .iter()
        .zip(fits)
        .map(|(_, f)| per_chart_coords + f.dict.len() + 10)
        .sum();
    per_chart + shared_basis + gadget.parameter_count()
}

/// Fit every chart of the atlas and gate the pieces together.
pub fn assemble_net(
    atlas: &Atlas,
    f: &dyn Fn(&[f64]) -> f64,
    k_max: u32,
    c_d: f64,
    ridge: f64,
) -> Result<ConstructedNet, ManifoldError> {
    let mut fits = Vec::with_capacity(atlas.charts.len());
    for i in 0..atlas.charts.len() {
        fits.push(fit_coefficients(f, atlas, i, k_max, c_d, ridge)?);
    }
    let f_sup = atlas
        .samples
        .iter()
        .map(|s| f(&s.point).abs())
        .fold(0.0f64, f64::max);
    let gadget = GDelta::build(atlas.delta.min(1.0), atlas.samples[0].point.len())?;
    let parameter_count = audit_parameter_count(&atlas.charts, &fits, &gadget);
    Ok(ConstructedNet {
        charts: atlas.charts.clone(),
        fits,
        gadget,
        f_sup_bound: f_sup + 1.0,
        k_max,
        c_d,
        delta: atlas.delta,
        parameter_count,
    })
}

/// Sup and distribution of `|f_N - f|` over a fresh deterministic grid of
/// `n_eval` manifold samples.
pub fn measure_manifold_error(
    net: &ConstructedNet,
    f: &dyn Fn(&[f64]) -> f64,
    manifold: &ParamManifold,
    n_eval: usize,
) -> (f64, Vec<f64>) {
    assert!(
        n_eval >= 100,
        "error measurement needs at least 100 samples"
    );
    let per_dim = if manifold.intrinsic_dim() == 1 {
        n_eval
    } else {
        (n_eval as f64).sqrt().ceil() as usize
    };
    let errors: Vec<f64> = manifold
        .parameter_grid(per_dim)
        .into_iter()
        .map(|t| {
            let x = manifold.point(&t);
            (net.eval(&x) - f(&x)).abs()
        })
        .collect();
    let sup = errors.iter().cloned().fold(0.0f64, f64::max);
    (sup, errors)
}

// ----------------------------------------------------------------------
// Serialization: the MLP binary container carries, per chart, a frame layer
// (weights A, bias -A c) and a coefficient layer; structural scalars travel
// in a sidecar.
// ----------------------------------------------------------------------

/// Sidecar metadata stored next to the binary container.
#[derive(Debug, Clone, PartialEq)]
pub struct NetSidecar {
    pub intrinsic_dim: usize,
    pub ambient_dim: usize,
    pub k_max: u32,
    pub delta: f64,
    pub c_d: f64,
    pub f_sup_bound: f64,
    pub parameter_count: usize,
    /// Measured (alpha, beta) per chart.
    pub chart_distortions: Vec<(f64, f64)>,
}

impl ConstructedNet {
    pub fn sidecar(&self) -> NetSidecar {
        NetSidecar {
            intrinsic_dim: self.charts[0].frame.rows(),
            ambient_dim: self.charts[0].center.len(),
            k_max: self.k_max,
            delta: self.delta,
            c_d: self.c_d,
            f_sup_bound: self.f_sup_bound,
            parameter_count: self.parameter_count,
            chart_distortions: self.charts.iter().map(|c| (c.alpha, c.beta)).collect(),
        }
    }

    /// Container layers: per chart, the affine chart map (weights `A`, bias
    /// `[-A c | c]`, the center appended so the map is invertible) followed
    /// by the coefficient row.
    pub fn container_layers(&self) -> Vec<Layer> {
        let mut layers = Vec::with_capacity(2 * self.charts.len());
        for (chart, fit) in self.charts.iter().zip(&self.fits) {
            let d = chart.frame.rows();
            let dim = chart.center.len();
            let mut w = Vec::with_capacity(d * dim);
            let mut b = Vec::with_capacity(d + dim);
            for r in 0..d {
                w.extend_from_slice(chart.frame.row(r));
                b.push(-dot(chart.frame.row(r), &chart.center));
            }
            b.extend_from_slice(&chart.center);
            layers.push(Layer {
                w,
                b,
                out_dim: d,
                in_dim: dim,
            });
            layers.push(Layer {
                w: fit.coefficients.clone(),
                b: vec![0.0],
                out_dim: 1,
                in_dim: fit.coefficients.len(),
            });
        }
        layers
    }

    /// Rebuild from container layers plus the sidecar.
    pub fn from_container(
        layers: &[Layer],
        sidecar: &NetSidecar,
    ) -> Result<ConstructedNet, ManifoldError> {
        if layers.len() != 2 * sidecar.chart_distortions.len() || layers.is_empty() {
            return Err(ManifoldError::BadContainer(format!(
                "expected {} layers, got {}",
                2 * sidecar.chart_distortions.len(),
                layers.len()
            )));
        }
        let d = sidecar.intrinsic_dim;
        let dim = sidecar.ambient_dim;
        let dict = dictionary(d, sidecar.k_max, 1.0, sidecar.c_d);
        let mut charts = Vec::new();
        let mut fits = Vec::new();
        for (ci, pair) in layers.chunks_exact(2).enumerate() {
            let frame_layer = &pair[0];
            let coeff_layer = &pair[1];
            if frame_layer.out_dim != d || frame_layer.in_dim != dim {
                return Err(ManifoldError::BadContainer("frame layer shape".into()));
            }
            if coeff_layer.in_dim != dict.len() || coeff_layer.out_dim != 1 {
                return Err(ManifoldError::BadContainer(format!(
                    "coefficient layer expects {} entries, got {}",
                    dict.len(),
                    coeff_layer.in_dim
                )));
            }
            let center = pair_center(frame_layer, d, dim)?;
            let (alpha, beta) = sidecar.chart_distortions[ci];
            charts.push(Chart {
                center,
                frame: Matrix::from_vec(d, dim, frame_layer.w.clone()),
                radius: sidecar.delta,
                alpha,
                beta,
                members: Vec::new(),
            });
            fits.push(ChartFit {
                dict: dict.clone(),
                coefficients: coeff_layer.w.clone(),
                residual_sup: f64::NAN,
            });
        }
        let gadget = GDelta::build(sidecar.delta.min(1.0), dim)?;
        Ok(ConstructedNet {
            charts,
            fits,
            gadget,
            f_sup_bound: sidecar.f_sup_bound,
            k_max: sidecar.k_max,
            c_d: sidecar.c_d,
            delta: sidecar.delta,
            parameter_count: sidecar.parameter_count,
        })
    }
}

/// The chart center is appended to the frame-layer bias: the container
/// stores `b = [-A c | c]`, i.e. `d` projection biases then the `D`
/// center coordinates.
fn pair_center(frame_layer: &Layer, d: usize, dim: usize) -> Result<Vec<f64>, ManifoldError> {
    if frame_layer.b.len() == d + dim {
        Ok(frame_layer.b[d..].to_vec())
    } else {
        Err(ManifoldError::BadContainer(
            "frame bias must carry the chart center".into(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_atlas() -> Atlas {
        Atlas::build(ParamManifold::Circle, 0.3, 4000).unwrap()
    }

    fn cos_target(x: &[f64]) -> f64 {
        x[0]
    }

    #[test]
    fn circle_atlas_distortions_within_bounds() {
        let atlas = circle_atlas();
        assert!(atlas.charts.len() > 10);
        for c in &atlas.charts {
            assert!(c.beta <= 2.0 + 1e-9, "beta {}", c.beta);
            assert!(c.alpha >= 0.5 - 1e-9, "alpha {}", c.alpha);
            // Geodesic dominates the projected distance, so alpha >= 1.
            assert!(c.alpha >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn chart_center_projects_to_origin() {
        let atlas = circle_atlas();
        for c in &atlas.charts {
            let u = c.local_u(&c.center);
            assert!(norm(&u) < 1e-12);
            let v = c.normal_residual(&c.center);
            assert!(norm(&v) < 1e-12);
        }
    }

    #[test]
    fn partition_of_unity_sums_to_one() {
        let atlas = circle_atlas();
        for s in atlas.samples.iter().step_by(7) {
            let w = atlas.pou_weights(&s.point);
            let total: f64 = w.iter().sum();
            assert!((total - 1.0).abs() < 1e-8);
            assert!(w.iter().all(|&v| v >= 0.0));
        }
        // Supported inside the chart ball.
        for (i, c) in atlas.charts.iter().enumerate() {
            for s in atlas.samples.iter().step_by(11) {
                let w = atlas.pou_weights(&s.point);
                if w[i] > 0.0 {
                    assert!(sq_dist(&s.point, &c.center).sqrt() < c.radius);
                }
            }
        }
    }

    #[test]
    fn zero_target_fits_to_zero_coefficients() {
        let atlas = circle_atlas();
        let fit = fit_coefficients(&|_: &[f64]| 0.0, &atlas, 0, 3, 1.0, 1e-10).unwrap();
        let max = fit.coefficients.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
        assert!(max < 1e-8, "max coefficient {max}");
    }

    #[test]
    fn fit_residual_non_increasing_in_k_max() {
        let atlas = circle_atlas();
        let mut prev = f64::INFINITY;
        for k_max in 0..=5u32 {
            let fit = fit_coefficients(&cos_target, &atlas, 1, k_max, 1.0, 1e-10).unwrap();
            assert!(
                fit.residual_sup <= prev + 1e-9,
                "k_max {k_max}: residual {} after {prev}",
                fit.residual_sup
            );
            prev = fit.residual_sup;
        }
        assert!(prev < 0.02, "final residual {prev}");
    }

    #[test]
    fn coefficients_decay_across_levels() {
        let atlas = circle_atlas();
        let k_max = 6;
        // Per-chart slope of the decaying regime, averaged over charts.
        let mut slopes = Vec::new();
        for idx in 0..6 {
            let fit = fit_coefficients(&cos_target, &atlas, idx, k_max, 1.0, 1e-10).unwrap();
            let lv = fit.max_coefficient_per_level(k_max);
            slopes.push(decay_slope_asymptotic(&lv).expect("enough decaying levels"));
        }
        let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
        // d = 1: the expansion's coefficients decay like 2^{-(2 + 1/2)k}.
        assert!(mean <= -2.5 + 0.2, "decay slopes {slopes:?} mean {mean}");
    }

    #[test]
    fn full_gate_passes_local_fit_through_exactly() {
        let atlas = circle_atlas();
        let net = assemble_net(&atlas, &cos_target, 4, 1.0, 1e-10).unwrap();
        let mut fully_gated = 0usize;
        for s in atlas.samples.iter().step_by(97) {
            for i in 0..net.charts.len() {
                let chart = &net.charts[i];
                let u = chart.scaled_u(&s.point);
                let v = chart.normal_residual(&s.point);
                if net.gadget.eval(&v) == 1.0 {
                    assert_eq!(net.chart_value(i, &s.point), net.fits[i].eval(&u));
                    fully_gated += 1;
                }
            }
        }
        assert!(fully_gated > 50, "only {fully_gated} fully gated pairs");
        // At its own center every chart is fully gated.
        let own = net.fits[2].eval(&[0.0]);
        assert_eq!(net.chart_value(2, &net.charts[2].center.clone()), own);
    }

    #[test]
    fn far_points_evaluate_to_exact_zero() {
        let atlas = circle_atlas();
        let net = assemble_net(&atlas, &cos_target, 4, 1.0, 1e-10).unwrap();
        // The circle's center is at normal distance 1 from every tangent
        // line, far beyond the tube radius.
        assert_eq!(net.eval(&[0.0, 0.0]), 0.0);
        assert_eq!(net.eval(&[8.0, -3.0]), 0.0);
    }

    #[test]
    fn circle_benchmark_error_shrinks_and_lipschitz_stays_stable() {
        let atlas = circle_atlas();
        let mut prev = f64::INFINITY;
        let mut lip3 = 0.0;
        for &k_max in &[2u32, 4, 6] {
            let net = assemble_net(&atlas, &cos_target, k_max, 1.0, 1e-10).unwrap();
            let (err, _) =
                measure_manifold_error(&net, &cos_target, &ParamManifold::Circle, 10_000);
            assert!(err <= prev * 1.1, "k_max {k_max}: {err} after {prev}");
            prev = err;
            if k_max == 2 {
                lip3 = net.lipschitz_estimate(1.5, 4000, 99);
            } else if k_max == 6 {
                let lip6 = net.lipschitz_estimate(1.5, 4000, 99);
                assert!(lip6 <= 1.5 * lip3.max(1e-9), "lip grew {lip3} -> {lip6}");
            }
        }
        assert!(prev < 0.05, "final error {prev}");
    }

    #[test]
    fn parameter_count_grows_with_scale_count() {
        let atlas = circle_atlas();
        let mut counts = Vec::new();
        for &k_max in &[2u32, 4, 6] {
            let net = assemble_net(&atlas, &cos_target, k_max, 1.0, 1e-10).unwrap();
            counts.push(net.parameter_count as f64);
        }
        let inc1 = counts[1] - counts[0];
        let inc2 = counts[2] - counts[1];
        // Dictionary sizes per level roughly double, so increments do too.
        assert!(inc2 / inc1 > 1.5, "increments {inc1} {inc2}");
        // Level sizes approach doubling at the fine end.
        let n5 = dictionary(1, 5, 1.0, 1.0)
            .iter()
            .filter(|b| b.k == 5)
            .count() as f64;
        let n6 = dictionary(1, 6, 1.0, 1.0)
            .iter()
            .filter(|b| b.k == 6)
            .count() as f64;
        assert!((1.5..=2.5).contains(&(n6 / n5)), "level growth {}", n6 / n5);
    }

    #[test]
    fn suggested_scale_count_follows_the_truncation_rule() {
        // Halving the error adds d/2 levels.
        let a = suggested_k_max(0.04, 1, 8);
        let b = suggested_k_max(0.01, 1, 8);
        assert_eq!(b - a, 1); // two halvings at d = 1 add one level
        assert!(suggested_k_max(0.04, 2, 8) >= 2 * a - 1);
    }

    #[test]
    fn oversized_radius_is_halved_until_distortion_holds() {
        // Chart radius 2.5 on the unit circle violates the distortion bound;
        // the builder halves it until every chart passes.
        let atlas = Atlas::build(ParamManifold::Circle, 2.5, 800).unwrap();
        assert!(atlas.delta < 2.5);
        assert!(atlas.charts.iter().all(|c| c.beta <= 2.0 + 1e-9));
    }

    #[test]
    fn sparse_sampling_makes_fine_levels_unidentifiable() {
        // 60 samples leave fine-scale columns without support on the grid.
        let atlas = Atlas::build(ParamManifold::Circle, 0.3, 60).unwrap();
        let err = fit_coefficients(&cos_target, &atlas, 0, 8, 1.0, 1e-10).unwrap_err();
        assert!(matches!(err, ManifoldError::IllConditioned { .. }));
    }

    #[test]
    fn sphere_patch_atlas_and_fit_smoke() {
        let atlas = Atlas::build(ParamManifold::SpherePatch, 0.4, 40).unwrap();
        assert!(atlas.charts.iter().all(|c| c.beta <= 2.0 + 1e-9));
        let f = |x: &[f64]| x[2];
        let net = assemble_net(&atlas, &f, 3, 1.0, 1e-8).unwrap();
        let (err, _) = measure_manifold_error(&net, &f, &ParamManifold::SpherePatch, 400);
        assert!(err < 0.1, "coarse sphere fit error {err}");
    }

    #[test]
    fn container_round_trip_preserves_evaluation() {
        let atlas = circle_atlas();
        let net = assemble_net(&atlas, &cos_target, 3, 1.0, 1e-10).unwrap();
        let layers = net.container_layers();
        let sidecar = net.sidecar();
        let back = ConstructedNet::from_container(&layers, &sidecar).unwrap();
        for t in ParamManifold::Circle.parameter_grid(257) {
            let x = ParamManifold::Circle.point(&t);
            assert!((net.eval(&x) - back.eval(&x)).abs() < 1e-12);
        }
        assert_eq!(back.parameter_count, net.parameter_count);
    }
}
