//! Trapezoid wavelet dictionary on chart coordinates.
//!
//! The mother profile `t` is 2 on (-1,1), 0 outside (-3,3) and linear in
//! between; it is exactly the four-term ReLU combination
//! `relu(x+3) - relu(x+1) - relu(x-1) + relu(x-3)`. Scaled tensor bumps
//!
//! ```text
//! φ_{k,b}(u) = c_d relu( Σ_j t(2^{k/d} (u_j - b_j)) - 2(d-1) )
//! ψ_{k,b}(u) = 2^{k/2} ( φ_{k,b}(u) - φ_{k-1,b}(u)/2 ),   φ_{-1,b} ≡ 0,
//! ```
//!
//! with offsets `b` on the `2^{-k/d}` grid form the dictionary; at any point
//! and scale at most `12^d` offsets are active.

/// Trapezoid profile, piecewise closed form.
pub fn trapezoid_t(x: f64) -> f64 {
    let a = x.abs();
    if a >= 3.0 {
        0.0
    } else if a <= 1.0 {
        2.0
    } else {
        3.0 - a
    }
}

/// The same profile as an explicit sum of four ReLUs.
pub fn trapezoid_t_relu(x: f64) -> f64 {
    let relu = |v: f64| v.max(0.0);
    relu(x + 3.0) - relu(x + 1.0) - relu(x - 1.0) + relu(x - 3.0)
}

/// Slope of `t` where differentiable (±1 on the ramps, 0 elsewhere).
pub fn trapezoid_t_prime(x: f64) -> f64 {
    let a = x.abs();
    if a <= 1.0 || a >= 3.0 {
        0.0
    } else if x > 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// One dictionary element: scale `k`, offset `b`, dimension `d`, and the
/// profile amplitude `c_d` (configurable; every bound below is parametric
/// in it).
#[derive(Debug, Clone, PartialEq)]
pub struct TrapezoidBasis {
    pub k: u32,
    pub b: Vec<f64>,
    pub d: usize,
    pub c_d: f64,
}

impl TrapezoidBasis {
    /// Spatial scale `2^{k/d}` of level `k`.
    fn level_scale(&self, k: i64) -> f64 {
        ((k as f64) / self.d as f64).exp2()
    }

    /// Half-width of the support box at this scale: `3 · 2^{-k/d}`.
    pub fn support_radius(&self) -> f64 {
        3.0 / self.level_scale(self.k as i64)
    }

    fn phi_at_level(&self, u: &[f64], k: i64) -> f64 {
        if k < 0 {
            return 0.0;
        }
        let s = self.level_scale(k);
        let mut acc = -2.0 * (self.d as f64 - 1.0);
        for (uj, bj) in u.iter().zip(&self.b) {
            acc += trapezoid_t(s * (uj - bj));
        }
        self.c_d * acc.max(0.0)
    }

    pub fn phi(&self, u: &[f64]) -> f64 {
        self.phi_at_level(u, self.k as i64)
    }

    pub fn psi(&self, u: &[f64]) -> f64 {
        let scale = (self.k as f64 / 2.0).exp2();
        scale
            * (self.phi_at_level(u, self.k as i64) - 0.5 * self.phi_at_level(u, self.k as i64 - 1))
    }

    fn grad_phi_at_level(&self, u: &[f64], k: i64, out: &mut [f64]) {
        out.iter_mut().for_each(|g| *g = 0.0);
        if k < 0 {
            return;
        }
        let s = self.level_scale(k);
        let mut acc = -2.0 * (self.d as f64 - 1.0);
        for (uj, bj) in u.iter().zip(&self.b) {
            acc += trapezoid_t(s * (uj - bj));
        }
        if acc <= 0.0 {
            return;
        }
        for ((g, uj), bj) in out.iter_mut().zip(u).zip(&self.b) {
            *g = self.c_d * trapezoid_t_prime(s * (uj - bj)) * s;
        }
    }

    pub fn grad_phi(&self, u: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.d];
        self.grad_phi_at_level(u, self.k as i64, &mut g);
        g
    }

    pub fn grad_psi(&self, u: &[f64]) -> Vec<f64> {
        let scale = (self.k as f64 / 2.0).exp2();
        let mut g = vec![0.0; self.d];
        let mut g_coarse = vec![0.0; self.d];
        self.grad_phi_at_level(u, self.k as i64, &mut g);
        self.grad_phi_at_level(u, self.k as i64 - 1, &mut g_coarse);
        for (a, c) in g.iter_mut().zip(&g_coarse) {
            *a = scale * (*a - 0.5 * c);
        }
        g
    }
}

/// Dictionary of levels `0..=k_max` with offsets on the level grid inside
/// the fringe box `(-(radius + 3·2^{-k/d}), radius + 3·2^{-k/d})^d`. Levels
/// beyond the first keep only the offsets new at their scale (at least one
/// odd grid index): shifted trapezoids reproduce constants, so re-admitting
/// the coarse positions would make the system rank-deficient.
pub fn dictionary(d: usize, k_max: u32, radius: f64, c_d: f64) -> Vec<TrapezoidBasis> {
    let mut dict = Vec::new();
    for k in 0..=k_max {
        let h = (-(k as f64) / d as f64).exp2();
        let max_idx = ((radius + 3.0 * h - 1e-12) / h).floor() as i64;
        let mut idx = vec![-max_idx; d];
        loop {
            if k == 0 || idx.iter().any(|i| i % 2 != 0) {
                let b: Vec<f64> = idx.iter().map(|&i| i as f64 * h).collect();
                dict.push(TrapezoidBasis { k, b, d, c_d });
            }
            // Odometer increment over the d-dimensional index box.
            let mut pos = 0;
            loop {
                if pos == d {
                    break;
                }
                idx[pos] += 1;
                if idx[pos] <= max_idx {
                    break;
                }
                idx[pos] = -max_idx;
                pos += 1;
            }
            if pos == d {
                break;
            }
        }
    }
    dict
}
