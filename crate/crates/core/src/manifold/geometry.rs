//! Analytic parametrized manifolds with exact tangents and cheap geodesics.

use crate::linalg::{dot, norm, Matrix};
use crate::num::sigmoid;
use std::f64::consts::TAU;

/// A compact manifold given by an explicit parametrization. Parameters are
/// `d`-vectors, points live in the `ambient_dim`-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamManifold {
    /// Unit circle in the plane, parametrized by angle.
    Circle,
    /// The curve `t ↦ (t/2, sigmoid(2t))` for `t ∈ [-6, 6]`.
    SigmoidCurve,
    /// Image of the unit square under `(x1, x2) ↦ (x1, x2, √(R²-x1²-x2²))/R`
    /// with `R = 1.5`; a patch of the unit sphere.
    SpherePatch,
}

impl ParamManifold {
    pub fn intrinsic_dim(&self) -> usize {
        match self {
            ParamManifold::Circle | ParamManifold::SigmoidCurve => 1,
            ParamManifold::SpherePatch => 2,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            ParamManifold::Circle => 2,
            ParamManifold::SigmoidCurve => 2,
            ParamManifold::SpherePatch => 3,
        }
    }

    fn param_bounds(&self) -> Vec<(f64, f64)> {
        match self {
            ParamManifold::Circle => vec![(0.0, TAU)],
            ParamManifold::SigmoidCurve => vec![(-6.0, 6.0)],
            ParamManifold::SpherePatch => vec![(0.0, 1.0), (0.0, 1.0)],
        }
    }

    pub fn point(&self, t: &[f64]) -> Vec<f64> {
        match self {
            ParamManifold::Circle => vec![t[0].cos(), t[0].sin()],
            ParamManifold::SigmoidCurve => vec![t[0] / 2.0, sigmoid(2.0 * t[0])],
            ParamManifold::SpherePatch => {
                let r = 1.5;
                let z = (r * r - t[0] * t[0] - t[1] * t[1]).max(0.0).sqrt();
                vec![t[0] / r, t[1] / r, z / r]
            }
        }
    }

    /// Orthonormal tangent frame at parameter `t`, rows spanning the tangent.
    pub fn tangent_frame(&self, t: &[f64]) -> Matrix {
        match self {
            ParamManifold::Circle => Matrix::from_rows(&[vec![-t[0].sin(), t[0].cos()]]),
            ParamManifold::SigmoidCurve => {
                let s = sigmoid(2.0 * t[0]);
                let mut v = vec![0.5, 2.0 * s * (1.0 - s)];
                let n = norm(&v);
                v.iter_mut().for_each(|x| *x /= n);
                Matrix::from_rows(&[v])
            }
            ParamManifold::SpherePatch => {
                let r = 1.5;
                let z = (r * r - t[0] * t[0] - t[1] * t[1]).max(1e-12).sqrt();
                let d1 = vec![1.0 / r, 0.0, -t[0] / (r * z)];
                let d2 = vec![0.0, 1.0 / r, -t[1] / (r * z)];
                // Gram–Schmidt.
                let n1 = norm(&d1);
                let e1: Vec<f64> = d1.iter().map(|x| x / n1).collect();
                let proj = dot(&d2, &e1);
                let mut e2: Vec<f64> = d2.iter().zip(&e1).map(|(a, b)| a - proj * b).collect();
                let n2 = norm(&e2);
                e2.iter_mut().for_each(|x| *x /= n2);
                Matrix::from_rows(&[e1, e2])
            }
        }
    }

    /// Geodesic distance between parameters. For the sigmoid curve this is
    /// arc length from a dense table; for the sphere patch the great-circle
    /// distance of the (unit-sphere) images, exact for nearby points.
    pub fn geodesic(&self, a: &[f64], b: &[f64], table: &ArcLengthTable) -> f64 {
        match self {
            ParamManifold::Circle => {
                let d = (a[0] - b[0]).rem_euclid(TAU);
                d.min(TAU - d)
            }
            ParamManifold::SigmoidCurve => (table.lookup(a[0]) - table.lookup(b[0])).abs(),
            ParamManifold::SpherePatch => {
                let pa = self.point(a);
                let pb = self.point(b);
                dot(&pa, &pb).clamp(-1.0, 1.0).acos()
            }
        }
    }

    /// Uniform parameter grid with `n` points per intrinsic dimension
    /// (so `n` points for curves, `n²` for the sphere patch).
    pub fn parameter_grid(&self, n: usize) -> Vec<Vec<f64>> {
        let bounds = self.param_bounds();
        match bounds.len() {
            1 => {
                let (lo, hi) = bounds[0];
                let closed = matches!(self, ParamManifold::Circle);
                let denom = if closed { n } else { n - 1 };
                (0..n)
                    .map(|i| vec![lo + (hi - lo) * i as f64 / denom as f64])
                    .collect()
            }
            2 => {
                let mut out = Vec::with_capacity(n * n);
                for i in 0..n {
                    for j in 0..n {
                        out.push(vec![
                            bounds[0].0 + (bounds[0].1 - bounds[0].0) * i as f64 / (n - 1) as f64,
                            bounds[1].0 + (bounds[1].1 - bounds[1].0) * j as f64 / (n - 1) as f64,
                        ]);
                    }
                }
                out
            }
            _ => unreachable!(),
        }
    }

    pub fn arc_length_table(&self, nodes: usize) -> ArcLengthTable {
        match self {
            ParamManifold::SigmoidCurve => {
                let (lo, hi) = self.param_bounds()[0];
                let mut ts = Vec::with_capacity(nodes);
                let mut cum = Vec::with_capacity(nodes);
                let mut acc = 0.0;
                let mut prev: Option<Vec<f64>> = None;
                for i in 0..nodes {
                    let t = lo + (hi - lo) * i as f64 / (nodes - 1) as f64;
                    let p = self.point(&[t]);
                    if let Some(q) = prev {
                        acc += (0..2).map(|j| (p[j] - q[j]).powi(2)).sum::<f64>().sqrt();
                    }
                    ts.push(t);
                    cum.push(acc);
                    prev = Some(p);
                }
                ArcLengthTable { ts, cum }
            }
            // Circle and sphere use closed-form geodesics.
            _ => ArcLengthTable {
                ts: vec![],
                cum: vec![],
            },
        }
    }
}

/// Cumulative arc length over a dense parameter discretization, with linear
/// interpolation between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcLengthTable {
    ts: Vec<f64>,
    cum: Vec<f64>,
}

impl ArcLengthTable {
    fn lookup(&self, t: f64) -> f64 {
        let n = self.ts.len();
        assert!(n >= 2, "arc-length table required for this manifold");
        if t <= self.ts[0] {
            return self.cum[0];
        }
        if t >= self.ts[n - 1] {
            return self.cum[n - 1];
        }
        let i = self.ts.partition_point(|&x| x < t).max(1);
        let (t0, t1) = (self.ts[i - 1], self.ts[i]);
        let w = (t - t0) / (t1 - t0);
        self.cum[i - 1] * (1.0 - w) + self.cum[i] * w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_are_orthonormal() {
        for m in [
            ParamManifold::Circle,
            ParamManifold::SigmoidCurve,
            ParamManifold::SpherePatch,
        ] {
            for t in m.parameter_grid(9) {
                let f = m.tangent_frame(&t);
                for i in 0..f.rows() {
                    assert!((norm(f.row(i)) - 1.0).abs() < 1e-10);
                    for j in (i + 1)..f.rows() {
                        assert!(dot(f.row(i), f.row(j)).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn circle_geodesic_wraps() {
        let m = ParamManifold::Circle;
        let t = m.arc_length_table(2);
        assert!((m.geodesic(&[0.1], &[0.3], &t) - 0.2).abs() < 1e-12);
        assert!((m.geodesic(&[0.05], &[TAU - 0.05], &t) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn curve_arc_length_close_to_secant_for_near_points() {
        let m = ParamManifold::SigmoidCurve;
        let table = m.arc_length_table(10_000);
        let a = [0.4];
        let b = [0.45];
        let pa = m.point(&a);
        let pb = m.point(&b);
        let chord = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt();
        let geo = m.geodesic(&a, &b, &table);
        assert!(geo >= chord - 1e-9);
        assert!(geo <= chord * 1.01);
    }

    #[test]
    fn sphere_patch_points_are_unit_norm() {
        let m = ParamManifold::SpherePatch;
        for t in m.parameter_grid(7) {
            assert!((norm(&m.point(&t)) - 1.0).abs() < 1e-12);
        }
        let tab = m.arc_length_table(2);
        let g = m.geodesic(&[0.0, 0.0], &[1.0, 0.0], &tab);
        // angle between (0,0,1) and (2/3, 0, √5/3)
        assert!((g - (5f64.sqrt() / 3.0).acos()).abs() < 1e-12);
    }

    #[test]
    fn parameter_grids_have_expected_shape() {
        assert_eq!(ParamManifold::Circle.parameter_grid(10).len(), 10);
        assert_eq!(ParamManifold::SpherePatch.parameter_grid(5).len(), 25);
        // Open curves include both endpoints.
        let g = ParamManifold::SigmoidCurve.parameter_grid(11);
        assert_eq!(g[0][0], -6.0);
        assert_eq!(g[10][0], 6.0);
    }

    #[test]
    fn circle_grid_excludes_duplicate_seam_point() {
        let g = ParamManifold::Circle.parameter_grid(8);
        assert!(g.iter().all(|t| t[0] < TAU - 1e-9));
        assert!((g[1][0] - TAU / 8.0).abs() < 1e-12);
    }
}
