//! Deterministic quadrature on boxes in one and two dimensions.
//!
//! The shipped default is Gauss–Legendre with 2048 nodes per axis in 1D and
//! 256 per axis in 2D, which integrates every density and witness functional
//! in this crate to well below 1e-6 while keeping a functional evaluation
//! cheap. A composite trapezoid rule is available for cross-checks.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("bounds must be finite and ordered, got [{lo}, {hi}]")]
    BadBounds { lo: f64, hi: f64 },
    #[error("nodes_per_axis must be at least 16, got {0}")]
    TooFewNodes(usize),
    #[error("dimension must be 1 or 2, got {0}")]
    BadDim(usize),
    #[error("non-finite integrand value {value} at grid point {point:?}")]
    NonFinite { point: Vec<f64>, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Trapezoid,
    GaussLegendre,
}

/// Nodes and weights of an axis-aligned product quadrature rule.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    dim: usize,
    bounds: Vec<(f64, f64)>,
    nodes_per_axis: usize,
    rule: Rule,
    /// Per-axis nodes and weights.
    axes: Vec<(Vec<f64>, Vec<f64>)>,
}

impl QuadratureGrid {
    pub fn new(
        bounds: &[(f64, f64)],
        nodes_per_axis: usize,
        rule: Rule,
    ) -> Result<Self, QuadratureError> {
        let dim = bounds.len();
        if dim == 0 || dim > 2 {
            return Err(QuadratureError::BadDim(dim));
        }
        if nodes_per_axis < 16 {
            return Err(QuadratureError::TooFewNodes(nodes_per_axis));
        }
        for &(lo, hi) in bounds {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(QuadratureError::BadBounds { lo, hi });
            }
        }
        let axes = bounds
            .iter()
            .map(|&(lo, hi)| match rule {
                Rule::GaussLegendre => gauss_legendre(nodes_per_axis, lo, hi),
                Rule::Trapezoid => trapezoid_rule(nodes_per_axis, lo, hi),
            })
            .collect();
        Ok(QuadratureGrid {
            dim,
            bounds: bounds.to_vec(),
            nodes_per_axis,
            rule,
            axes,
        })
    }

    /// Symmetric 1D grid on `[-radius, radius]` with the shipped default rule.
    pub fn default_1d(radius: f64) -> Self {
        Self::new(&[(-radius, radius)], 2048, Rule::GaussLegendre).expect("valid grid")
    }

    /// 2D grid with the shipped default rule (256 nodes per axis).
    pub fn default_2d(bounds: [(f64, f64); 2]) -> Self {
        Self::new(&bounds, 256, Rule::GaussLegendre).expect("valid grid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes_per_axis
    }

    pub fn rule(&self) -> Rule {
        self.rule
    }

    /// Same bounds and rule, different resolution.
    pub fn with_nodes(&self, nodes_per_axis: usize) -> Result<Self, QuadratureError> {
        Self::new(&self.bounds, nodes_per_axis, self.rule)
    }

    /// Visit every node with its weight.
    pub fn for_each(&self, mut f: impl FnMut(&[f64], f64)) {
        match self.dim {
            1 => {
                let (xs, ws) = &self.axes[0];
                for (x, w) in xs.iter().zip(ws) {
                    f(std::slice::from_ref(x), *w);
                }
            }
            2 => {
                let (xs, wx) = &self.axes[0];
                let (ys, wy) = &self.axes[1];
                for (x, wxi) in xs.iter().zip(wx) {
                    for (y, wyi) in ys.iter().zip(wy) {
                        f(&[*x, *y], wxi * wyi);
                    }
                }
            }
            _ => unreachable!(),
        }
    }

    /// `∫ f` over the box.
    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        let mut acc = 0.0;
        self.for_each(|x, w| acc += w * f(x));
        acc
    }

    /// `∫ f`, failing on the first non-finite integrand value.
    pub fn try_integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> Result<f64, QuadratureError> {
        let mut acc = 0.0;
        let mut bad: Option<(Vec<f64>, f64)> = None;
        self.for_each(|x, w| {
            if bad.is_some() {
                return;
            }
            let v = f(x);
            if !v.is_finite() {
                bad = Some((x.to_vec(), v));
            } else {
                acc += w * v;
            }
        });
        match bad {
            Some((point, value)) => Err(QuadratureError::NonFinite { point, value }),
            None => Ok(acc),
        }
    }

    /// Domain volume; integrating the constant one must reproduce it.
    pub fn volume(&self) -> f64 {
        self.bounds.iter().map(|&(lo, hi)| hi - lo).product()
    }
}

/// Composite trapezoid nodes/weights on `[lo, hi]`.
fn trapezoid_rule(n: usize, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    let h = (hi - lo) / (n - 1) as f64;
    let nodes = (0..n).map(|i| lo + h * i as f64).collect();
    let mut weights = vec![h; n];
    weights[0] = 0.5 * h;
    weights[n - 1] = 0.5 * h;
    (nodes, weights)
}

/// Gauss–Legendre nodes/weights on `[lo, hi]`, by Newton iteration on the
/// Legendre polynomial with the Chebyshev-angle initial guess.
pub fn gauss_legendre(n: usize, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Initial guess for the i-th root in descending order.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n(x) and P_n'(x) by the Bonnet recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    let c = 0.5 * (hi - lo);
    let mid = 0.5 * (lo + hi);
    for i in 0..n {
        nodes[i] = mid + c * nodes[i];
        weights[i] *= c;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_integrates_to_volume() {
        let g = QuadratureGrid::new(&[(-2.0, 3.0)], 64, Rule::GaussLegendre).unwrap();
        assert!((g.integrate(|_| 1.0) - g.volume()).abs() < 1e-10);
        assert_eq!(g.volume(), 5.0);
        let t = QuadratureGrid::new(&[(-2.0, 3.0)], 64, Rule::Trapezoid).unwrap();
        assert!((t.integrate(|_| 1.0) - t.volume()).abs() < 1e-10);
        let g2 = QuadratureGrid::new(&[(0.0, 1.0), (0.0, 2.0)], 32, Rule::GaussLegendre).unwrap();
        assert!((g2.integrate(|_| 1.0) - g2.volume()).abs() < 1e-10);
        assert_eq!(g2.volume(), 2.0);
    }

    #[test]
    fn polynomial_exactness() {
        // GL with n nodes is exact for degree 2n-1.
        let g = QuadratureGrid::new(&[(0.0, 1.0)], 16, Rule::GaussLegendre).unwrap();
        let got = g.integrate(|x| x[0].powi(21));
        assert!((got - 1.0 / 22.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_mass() {
        let g = QuadratureGrid::default_1d(9.0);
        let got = g.integrate(|x| crate::num::normal_pdf(x[0], 0.0, 1.0));
        assert!((got - 1.0).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn rules_agree_on_smooth_integrand() {
        let gl = QuadratureGrid::new(&[(0.0, 2.0)], 128, Rule::GaussLegendre).unwrap();
        let tr = QuadratureGrid::new(&[(0.0, 2.0)], 4096, Rule::Trapezoid).unwrap();
        let f = |x: &[f64]| (1.5 * x[0]).sin().exp();
        assert!((gl.integrate(f) - tr.integrate(f)).abs() < 1e-7);
    }

    #[test]
    fn non_finite_reported_with_point() {
        let g = QuadratureGrid::new(&[(0.0, 1.0)], 16, Rule::GaussLegendre).unwrap();
        let err = g
            .try_integrate(|x| if x[0] > 0.5 { f64::NAN } else { 1.0 })
            .unwrap_err();
        match err {
            QuadratureError::NonFinite { point, .. } => assert!(point[0] > 0.5),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn bad_grids_rejected() {
        assert!(QuadratureGrid::new(&[(0.0, f64::INFINITY)], 32, Rule::GaussLegendre).is_err());
        assert!(QuadratureGrid::new(&[(0.0, 1.0)], 8, Rule::GaussLegendre).is_err());
        assert!(QuadratureGrid::new(&[(1.0, 0.0)], 32, Rule::GaussLegendre).is_err());
    }
}
