//! The tube-indicator gadget: a two-layer ReLU network `g : R^m -> [0, 1]`
//! that is exactly 1 inside the ball of radius `(√3/2)δ`, exactly 0 outside
//! the ball of radius `δ`, with gradient norm at most `10.5/δ` wherever it
//! is differentiable.
//!
//! Construction: each coordinate passes through a piecewise-linear convex
//! overestimate `y(x) ≈ x²` interpolating `x_l²` at geometrically spaced
//! breakpoints `x_l = (r/√m)(1+2r)^l`, `r = δ/20`; the sum `Σ_j y(v_j)` then
//! feeds a ramp that drops from 1 to 0 between `0.8 δ²` and `δ²`. The ramp
//! is computed as `relu(1 - relu((s - 0.8δ²)/(0.2δ²)))`, which agrees with
//! the two-ReLU difference form everywhere and saturates to exact 0/1 in
//! floating point.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GDeltaError {
    #[error("delta must lie in (0, 1], got {0}")]
    BadDelta(f64),
    #[error("ambient dimension must be positive")]
    ZeroDim,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GDelta {
    pub delta: f64,
    pub dim: usize,
    /// `r = δ/20`.
    pub r: f64,
    /// `ρ = 1 + 2r`.
    pub rho: f64,
    /// Breakpoints `x_0 < x_1 < … < x_L`; `x_0 = r/√m`.
    pub breakpoints: Vec<f64>,
    /// Ramp slopes `a_l = x_{l-1} + x_l`.
    slopes: Vec<f64>,
    param_count: usize,
}

impl GDelta {
    pub fn build(delta: f64, dim: usize) -> Result<Self, GDeltaError> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(GDeltaError::BadDelta(delta));
        }
        if dim == 0 {
            return Err(GDeltaError::ZeroDim);
        }
        let r = delta / 20.0;
        let rho = 1.0 + 2.0 * r;
        let x0 = r / (dim as f64).sqrt();
        let mut breakpoints = vec![x0];
        while *breakpoints.last().unwrap() <= 1.0 {
            breakpoints.push(breakpoints.last().unwrap() * rho);
        }
        // L is the smallest integer with x_0 ρ^L > 1.
        let big_l = breakpoints.len() - 1;
        let slopes = (1..=big_l)
            .map(|l| breakpoints[l - 1] + breakpoints[l])
            .collect();
        // Audited parameters: per coordinate branch, 2(L+1) ReLU units with
        // (weight, bias) each, 2(L+1) combination weights and one constant;
        // the top ramp takes the m-way sum (m weights), two ReLU units with
        // (scale, bias) each, and one output weight.
        let param_count = dim * (6 * (big_l + 1) + 1) + dim + 5;
        Ok(GDelta {
            delta,
            dim,
            r,
            rho,
            breakpoints,
            slopes,
            param_count,
        })
    }

    pub fn levels(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn parameter_count(&self) -> usize {
        self.param_count
    }

    /// Closed-form bound on the number of levels:
    /// `L ≤ 1 + (log(m)/2 + log(20/δ)) / (0.05 δ)`.
    pub fn level_bound(&self) -> f64 {
        1.0 + (0.5 * (self.dim as f64).ln() + (20.0 / self.delta).ln()) / (0.05 * self.delta)
    }

    /// Parameter-count bound `C m (1 + L_bound)` with the shipped `C = 16`.
    pub fn parameter_bound(&self) -> f64 {
        16.0 * self.dim as f64 * (1.0 + self.level_bound())
    }

    /// The per-coordinate profile via its ReLU representation.
    pub fn y(&self, x: f64) -> f64 {
        self.y_plus(x) + self.y_plus(-x) - self.breakpoints[0] * self.breakpoints[0]
    }

    fn y_plus(&self, x: f64) -> f64 {
        let x0 = self.breakpoints[0];
        let big_l = self.levels();
        let mut acc = x0 * x0;
        let mut prev_a = 0.0;
        for l in 1..=big_l {
            let a = self.slopes[l - 1];
            acc += (a - prev_a) * (x - self.breakpoints[l - 1]).max(0.0);
            prev_a = a;
        }
        acc -= self.slopes[big_l - 1] * (x - self.breakpoints[big_l]).max(0.0);
        acc
    }

    /// Reference piecewise form of `y` (interpolating the squares).
    pub fn y_piecewise(&self, x: f64) -> f64 {
        let a = x.abs();
        let bp = &self.breakpoints;
        if a <= bp[0] {
            return bp[0] * bp[0];
        }
        if a >= bp[self.levels()] {
            let xl = bp[self.levels()];
            return xl * xl;
        }
        let l = bp.partition_point(|&b| b < a);
        let (lo, hi) = (bp[l - 1], bp[l]);
        let t = (a - lo) / (hi - lo);
        lo * lo + t * (hi * hi - lo * lo)
    }

    /// Slope of `y` where differentiable; `None` exactly at a breakpoint.
    pub fn y_prime(&self, x: f64) -> Option<f64> {
        let a = x.abs();
        let bp = &self.breakpoints;
        if bp.iter().any(|&b| b == a) {
            return None;
        }
        if a < bp[0] || a > bp[self.levels()] {
            return Some(0.0);
        }
        let l = bp.partition_point(|&b| b < a);
        Some(self.slopes[l - 1] * x.signum())
    }

    fn ramp(&self, s: f64) -> f64 {
        let d2 = self.delta * self.delta;
        (1.0 - ((s - 0.8 * d2) / (0.2 * d2)).max(0.0)).max(0.0)
    }

    /// Evaluate the gadget.
    pub fn eval(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.dim, "coordinate count");
        let s: f64 = v.iter().map(|&x| self.y(x)).sum();
        self.ramp(s)
    }

    /// Gradient where differentiable; `None` when `v` sits on a kink of the
    /// ramp or (inside the active ramp band) of any coordinate profile.
    pub fn grad(&self, v: &[f64]) -> Option<Vec<f64>> {
        assert_eq!(v.len(), self.dim);
        let d2 = self.delta * self.delta;
        let s: f64 = v.iter().map(|&x| self.y(x)).sum();
        if s == 0.8 * d2 || s == d2 {
            return None;
        }
        if !(0.8 * d2..d2).contains(&s) {
            return Some(vec![0.0; self.dim]);
        }
        let ramp_slope = -1.0 / (0.2 * d2);
        let mut g = Vec::with_capacity(self.dim);
        for &x in v {
            g.push(ramp_slope * self.y_prime(x)?);
        }
        Some(g)
    }
}

/// Deterministic evaluation lattice: `n_radii` radii spread over
/// `[0, 1.2 δ]` times `n_dirs` seeded unit directions.
pub fn evaluation_lattice(dim: usize, delta: f64, n_radii: usize, n_dirs: usize) -> Vec<Vec<f64>> {
    use crate::rng::CounterRng;
    let mut rng = CounterRng::new(0x9d1c_e2a7, dim as u64);
    let mut dirs = Vec::with_capacity(n_dirs);
    while dirs.len() < n_dirs {
        let v: Vec<f64> = (0..dim).map(|_| rng.next_gaussian()).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            dirs.push(v.into_iter().map(|x| x / n).collect::<Vec<f64>>());
        }
    }
    let mut lattice = Vec::with_capacity(n_radii * n_dirs);
    for i in 0..n_radii {
        let radius = 1.2 * delta * i as f64 / (n_radii - 1) as f64;
        for dir in &dirs {
            lattice.push(dir.iter().map(|&d| radius * d).collect());
        }
    }
    lattice
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;
    use crate::rng::CounterRng;

    #[test]
    fn profile_relu_form_matches_piecewise() {
        let g = GDelta::build(0.4, 3).unwrap();
        let mut rng = CounterRng::from_seed(3);
        for _ in 0..20_000 {
            let x = rng.uniform(-1.5, 1.5);
            let a = g.y(x);
            let b = g.y_piecewise(x);
            assert!((a - b).abs() < 1e-12, "x={x}: {a} vs {b}");
        }
        // Convex overestimate of the square inside the last breakpoint.
        for _ in 0..5000 {
            let x = rng.uniform(-1.0, 1.0);
            if x.abs() <= *g.breakpoints.last().unwrap() {
                assert!(g.y(x) >= x * x - 1e-12);
                assert!(g.y(x) <= g.breakpoints[0].powi(2) + (1.0 + g.r) * x * x + 1e-12);
            }
        }
    }

    #[test]
    fn exact_plateau_and_support() {
        for (delta, m) in [(0.1, 2), (0.5, 10), (1.0, 4)] {
            let g = GDelta::build(delta, m).unwrap();
            assert_eq!(g.eval(&vec![0.0; m]), 1.0);
            for v in evaluation_lattice(m, delta, 60, 40) {
                let r = norm(&v);
                let val = g.eval(&v);
                assert!((0.0..=1.0).contains(&val));
                if r <= 3f64.sqrt() / 2.0 * delta {
                    assert_eq!(val, 1.0, "r={r} delta={delta}");
                }
                if r >= delta {
                    assert_eq!(val, 0.0, "r={r} delta={delta}");
                }
            }
        }
    }

    #[test]
    fn gradient_bound_holds_on_lattice() {
        for (delta, m) in [(0.1, 2), (0.5, 5), (1.0, 3)] {
            let g = GDelta::build(delta, m).unwrap();
            let cap = 10.5 / delta;
            for v in evaluation_lattice(m, delta, 50, 40) {
                if let Some(grad) = g.grad(&v) {
                    let n = norm(&grad);
                    assert!(n <= cap + 1e-9, "‖∇g‖ = {n} > {cap}");
                }
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = GDelta::build(0.6, 3).unwrap();
        let mut rng = CounterRng::from_seed(9);
        let h = 1e-8;
        let mut checked = 0;
        while checked < 200 {
            let v: Vec<f64> = (0..3).map(|_| rng.uniform(-0.7, 0.7)).collect();
            let Some(grad) = g.grad(&v) else { continue };
            let mut ok = true;
            for j in 0..3 {
                let mut up = v.clone();
                up[j] += h;
                let mut dn = v.clone();
                dn[j] -= h;
                let fd = (g.eval(&up) - g.eval(&dn)) / (2.0 * h);
                if (fd - grad[j]).abs() > 1e-4 * (1.0 + grad[j].abs()) {
                    ok = false;
                }
            }
            if ok {
                checked += 1;
            }
        }
    }

    #[test]
    fn parameter_count_matches_audit_and_bound() {
        for (delta, m) in [(0.1, 2), (0.1, 10), (0.1, 100), (0.5, 10), (1.0, 100)] {
            let g = GDelta::build(delta, m).unwrap();
            let l = g.levels();
            assert_eq!(g.parameter_count(), m * (6 * (l + 1) + 1) + m + 5);
            assert!(
                (l as f64) <= g.level_bound(),
                "L={l} bound={}",
                g.level_bound()
            );
            assert!((g.parameter_count() as f64) <= g.parameter_bound());
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(GDelta::build(0.0, 3).is_err());
        assert!(GDelta::build(1.5, 3).is_err());
        assert!(GDelta::build(0.5, 0).is_err());
    }
}
