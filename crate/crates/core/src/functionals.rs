//! Population functionals of a witness function under a density pair.
//!
//! With `D(x) = e^f/(1+e^f)` the population training value of a witness `f`
//! is
//!
//! ```text
//! L[f] = 1/2 ( ∫ p log(2 e^f/(1+e^f)) + ∫ q log(2/(1+e^f)) )
//! ```
//!
//! maximized by `f* = log(p/q)` with `L[f*] = JSD(p, q)`, while the
//! population test statistic is `T[f] = ∫ f (p - q)`, equal to the symmetric
//! KL divergence at `f*`. Two elementary inequalities tie them together:
//! `T[f] ≥ 4 L[f]` always, and `0 ≤ T[f]/2 - 2 L[f] ≤ ∫ (p+q) f²/2` whenever
//! `f²` is integrable; [`statistic_loss_bounds`] evaluates both sides.

use crate::densities::AnalyticDensity;
use crate::num::{log_2_1md, log_2d, LN_2};
use crate::quadrature::{QuadratureError, QuadratureGrid};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FunctionalError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("degenerate witness: spread {spread} below 1e-14")]
    DegenerateWitness { spread: f64 },
    #[error("symmetric KL diverges: q vanishes where p > 0 near {point:?}")]
    DivergentKl { point: Vec<f64> },
}

/// Mean, spread, and their ratio for a witness function.
///
/// `mean_gap = E_p w - E_q w`, `spread = sqrt(Var_p w + Var_q w)`; the ratio
/// is scale-free and orders tests by asymptotic power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessSummary {
    pub mean_gap: f64,
    pub spread: f64,
    pub ratio: f64,
}

/// `L[f]` by quadrature, stabilized so `|f|` up to 500 cannot overflow.
pub fn population_loss(
    f: &dyn Fn(&[f64]) -> f64,
    p: &AnalyticDensity,
    q: &AnalyticDensity,
    grid: &QuadratureGrid,
) -> Result<f64, FunctionalError> {
    let v = grid.try_integrate(|x| {
        let fv = f(x);
        p.pdf(x) * log_2d(fv) + q.pdf(x) * log_2_1md(fv)
    })?;
    Ok(0.5 * v)
}

/// `T[f] = ∫ f (p - q)` by quadrature.
pub fn population_stat(
    f: &dyn Fn(&[f64]) -> f64,
    p: &AnalyticDensity,
    q: &AnalyticDensity,
    grid: &QuadratureGrid,
) -> Result<f64, FunctionalError> {
    Ok(grid.try_integrate(|x| f(x) * (p.pdf(x) - q.pdf(x)))?)
}

/// Jensen–Shannon divergence; lies in `[0, log 2]`.
pub fn jsd(
    p: &AnalyticDensity,
    q: &AnalyticDensity,
    grid: &QuadratureGrid,
) -> Result<f64, FunctionalError> {
    let v = grid.try_integrate(|x| {
        let pv = p.pdf(x);
        let qv = q.pdf(x);
        let m = 0.5 * (pv + qv);
        let mut acc = 0.0;
        if pv > 0.0 {
            acc += pv * (pv.ln() - m.ln());
        }
        if qv > 0.0 {
            acc += qv * (qv.ln() - m.ln());
        }
        0.5 * acc
    })?;
    Ok(v.clamp(0.0, LN_2))
}

/// Symmetric KL divergence `KL(p‖q) + KL(q‖p)`; flags divergence when one
/// density vanishes (to double precision) where the other has mass.
pub fn skl(
    p: &AnalyticDensity,
    q: &AnalyticDensity,
    grid: &QuadratureGrid,
) -> Result<f64, FunctionalError> {
    let mut divergent: Option<Vec<f64>> = None;
    let v = grid.try_integrate(|x| {
        let pv = p.pdf(x);
        let qv = q.pdf(x);
        if (qv == 0.0 && pv > 0.0) || (pv == 0.0 && qv > 0.0) {
            divergent.get_or_insert_with(|| x.to_vec());
            return 0.0;
        }
        if pv == 0.0 && qv == 0.0 {
            return 0.0;
        }
        (pv - qv) * (pv.ln() - qv.ln())
    })?;
    if let Some(point) = divergent {
        return Err(FunctionalError::DivergentKl { point });
    }
    Ok(v.max(0.0))
}

/// Mean/spread/ratio of a witness under the pair, by quadrature.
pub fn mean_std_summary(
    w: &dyn Fn(&[f64]) -> f64,
    p: &AnalyticDensity,
    q: &AnalyticDensity,
    grid: &QuadratureGrid,
) -> Result<WitnessSummary, FunctionalError> {
    // Two passes: means first, then central moments, so an (almost) constant
    // witness yields a spread at round-off level rather than at the level of
    // the truncated tail mass.
    let mut ep = 0.0;
    let mut eq = 0.0;
    let mut bad: Option<(Vec<f64>, f64)> = None;
    grid.for_each(|x, wt| {
        if bad.is_some() {
            return;
        }
        let wv = w(x);
        if !wv.is_finite() {
            bad = Some((x.to_vec(), wv));
            return;
        }
        ep += wt * p.pdf(x) * wv;
        eq += wt * q.pdf(x) * wv;
    });
    if let Some((point, value)) = bad {
        return Err(FunctionalError::Quadrature(QuadratureError::NonFinite {
            point,
            value,
        }));
    }
    let mut var_p = 0.0;
    let mut var_q = 0.0;
    grid.for_each(|x, wt| {
        let wv = w(x);
        var_p += wt * p.pdf(x) * (wv - ep) * (wv - ep);
        var_q += wt * q.pdf(x) * (wv - eq) * (wv - eq);
    });
    let var_p = var_p.max(0.0);
    let var_q = var_q.max(0.0);
    let spread = (var_p + var_q).sqrt();
    if spread < 1e-14 {
        return Err(FunctionalError::DegenerateWitness { spread });
    }
    Ok(WitnessSummary {
        mean_gap: ep - eq,
        spread,
        ratio: (ep - eq) / spread,
    })
}

/// Both sides of the two sandwich inequalities relating `T[f]` and `L[f]`.
#[derive(Debug, Clone, Copy)]
pub struct StatisticLossBounds {
    pub t_value: f64,
    pub l_value: f64,
    /// `T - 4L`; nonnegative up to quadrature tolerance.
    pub gap_lower: f64,
    /// `T/2 - 2L`; sits in `[0, quad_upper]` up to tolerance.
    pub gap_mid: f64,
    /// `∫ (p+q) f²/2`.
    pub quad_upper: f64,
}

pub fn statistic_loss_bounds(
    f: &dyn Fn(&[f64]) -> f64,
    p: &AnalyticDensity,
    q: &AnalyticDensity,
    grid: &QuadratureGrid,
) -> Result<StatisticLossBounds, FunctionalError> {
    let t_value = population_stat(f, p, q, grid)?;
    let l_value = population_loss(f, p, q, grid)?;
    let quad_upper = grid.try_integrate(|x| {
        let fv = f(x);
        0.5 * (p.pdf(x) + q.pdf(x)) * fv * fv
    })?;
    Ok(StatisticLossBounds {
        t_value,
        l_value,
        gap_lower: t_value - 4.0 * l_value,
        gap_mid: 0.5 * t_value - 2.0 * l_value,
        quad_upper,
    })
}

/// Population witness of the Gaussian-kernel MMD test on a 1D pair:
/// `w_σ(x) = ∫ exp(-(x-y)²/(2σ²)) (p(y) - q(y)) dy` evaluated by quadrature.
pub fn gmmd_witness_1d(
    p: &AnalyticDensity,
    q: &AnalyticDensity,
    grid: &QuadratureGrid,
    sigma: f64,
) -> impl Fn(&[f64]) -> f64 {
    assert!(sigma > 0.0);
    assert_eq!(grid.dim(), 1);
    let mut ys = Vec::new();
    let mut mass = Vec::new();
    grid.for_each(|y, w| {
        ys.push(y[0]);
        mass.push(w * (p.pdf(y) - q.pdf(y)));
    });
    let inv2s2 = 1.0 / (2.0 * sigma * sigma);
    move |x: &[f64]| {
        let xv = x[0];
        ys.iter()
            .zip(&mass)
            .map(|(&y, &m)| (-(xv - y) * (xv - y) * inv2s2).exp() * m)
            .sum()
    }
}
