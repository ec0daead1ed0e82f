//! Scalar numerics: stable softmax-loss pieces, the normal cdf, and its
//! inverse survival function.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub const LN_2: f64 = std::f64::consts::LN_2;

/// `log(1 + e^x)`, branching at `|x| > 30` so arguments up to ±500 neither
/// overflow nor lose the leading term.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

/// `log(2 e^f / (1 + e^f))`, computed as `log 2 + f - softplus(f)`.
#[inline]
pub fn log_2d(f: f64) -> f64 {
    LN_2 + f - softplus(f)
}

/// `log(2 / (1 + e^f))`, computed as `log 2 - softplus(f)`.
#[inline]
pub fn log_2_1md(f: f64) -> f64 {
    LN_2 - softplus(f)
}

/// Logistic sigmoid `1 / (1 + e^{-x})`.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Standard normal pdf.
#[inline]
pub fn normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
}

/// Error function, rational approximations of W. J. Cody (1969); absolute
/// error below 1e-15 on the real line.
pub fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    if x < 0.5 {
        // erf(x) = x * P(x^2)/Q(x^2)
        const P: [f64; 5] = [
            3.209377589138469472562e3,
            3.774852376853020208137e2,
            1.138641541510501556495e2,
            3.161123743870565596947e0,
            1.857777061846031526730e-1,
        ];
        const Q: [f64; 5] = [
            2.844236833439170622273e3,
            1.282616526077372275645e3,
            2.440246379344441733056e2,
            2.360129095234412093499e1,
            1.0,
        ];
        let z = x * x;
        let num = P.iter().rev().fold(0.0, |acc, &c| acc * z + c);
        let den = Q.iter().rev().fold(0.0, |acc, &c| acc * z + c);
        x * num / den
    } else {
        1.0 - erfc_large(x)
    }
}

/// Complementary error function for x >= 0.5.
fn erfc_large(x: f64) -> f64 {
    if x > 27.0 {
        return 0.0; // below the smallest positive double
    }
    if x <= 4.0 {
        const P: [f64; 9] = [
            1.23033935479799725272e3,
            2.05107837782607146532e3,
            1.71204761263407058314e3,
            8.81952221241769090411e2,
            2.98635138197400131132e2,
            6.61191906371416294775e1,
            8.88314979438837594118e0,
            5.64188496988670089180e-1,
            2.15311535474403846343e-8,
        ];
        const Q: [f64; 9] = [
            1.23033935480374942043e3,
            3.43936767414372163696e3,
            4.36261909014324715820e3,
            3.29079923573345962678e3,
            1.62138957456669018874e3,
            5.37181101862009857509e2,
            1.17693950891312499305e2,
            1.57449261107098347253e1,
            1.0,
        ];
        let num = P.iter().rev().fold(0.0, |acc, &c| acc * x + c);
        let den = Q.iter().rev().fold(0.0, |acc, &c| acc * x + c);
        (-x * x).exp() * num / den
    } else {
        // Asymptotic series; with erfc(4) ~ 1.5e-8 the truncation error is
        // below 1e-13 in absolute terms, which is all the callers need.
        let z2 = 2.0 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..=6u32 {
            term *= -((2 * k - 1) as f64) / z2;
            sum += term;
        }
        (-x * x).exp() / (x * PI.sqrt()) * sum
    }
}

/// Standard normal cdf.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x * FRAC_1_SQRT_2))
}

/// Inverse of the standard normal cdf (Wichura's PPND16, AS 241); relative
/// error below 1e-15, far inside the 1e-9 contract of the callers.
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile needs p in (0,1), got {p}");
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        const A: [f64; 8] = [
            3.3871328727963666080e0,
            1.3314166789178437745e2,
            1.9715909503065514427e3,
            1.3731693765509461125e4,
            4.5921953931549871457e4,
            6.7265770927008700853e4,
            3.3430575583588128105e4,
            2.5090809287301226727e3,
        ];
        const B: [f64; 8] = [
            1.0,
            4.2313330701600911252e1,
            6.8718700749205790830e2,
            5.3941960214247511077e3,
            2.1213794301586595867e4,
            3.9307895800092710610e4,
            2.8729085735721942674e4,
            5.2264952788528545610e3,
        ];
        let num = A.iter().rev().fold(0.0, |acc, &c| acc * r + c);
        let den = B.iter().rev().fold(0.0, |acc, &c| acc * r + c);
        return q * num / den;
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-r.ln()).sqrt();
    let z = if r <= 5.0 {
        r -= 1.6;
        const C: [f64; 8] = [
            1.42343711074968357734e0,
            4.63033784615654529590e0,
            5.76949722146069140550e0,
            3.64784832476320460504e0,
            1.27045825245236838258e0,
            2.41780725177450611770e-1,
            2.27238449892691845833e-2,
            7.74545014278341407640e-4,
        ];
        const D: [f64; 8] = [
            1.0,
            2.05319162663775882187e0,
            1.67638483018380384940e0,
            6.89767334985100004550e-1,
            1.48103976427480074590e-1,
            1.51986665636164571966e-2,
            5.47593808499534494600e-4,
            1.05075007164441684324e-9,
        ];
        let num = C.iter().rev().fold(0.0, |acc, &c| acc * r + c);
        let den = D.iter().rev().fold(0.0, |acc, &c| acc * r + c);
        num / den
    } else {
        r -= 5.0;
        const E: [f64; 8] = [
            6.65790464350110377720e0,
            5.46378491116411436990e0,
            1.78482653991729133580e0,
            2.96560571828504891230e-1,
            2.65321895265761230930e-2,
            1.24266094738807843860e-3,
            2.71155556874348757815e-5,
            2.01033439929228813265e-7,
        ];
        const F: [f64; 8] = [
            1.0,
            5.99832206555887937690e-1,
            1.36929880922735805310e-1,
            1.48753612908506148525e-2,
            7.86869131145613259100e-4,
            1.84631831751005468180e-5,
            1.42151175831644588870e-7,
            2.04426310338993978564e-15,
        ];
        let num = E.iter().rev().fold(0.0, |acc, &c| acc * r + c);
        let den = F.iter().rev().fold(0.0, |acc, &c| acc * r + c);
        num / den
    };
    if q < 0.0 {
        -z
    } else {
        z
    }
}

/// Upper quantile of the standard normal: z with `P[Z > z] = alpha`.
#[inline]
pub fn normal_upper_quantile(alpha: f64) -> f64 {
    normal_quantile(1.0 - alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_branches_agree() {
        for &x in &[
            -35.0, -30.0001, -29.9999, -1.0, 0.0, 1.0, 29.9999, 30.0001, 35.0,
        ] {
            let direct = (1.0 + (x as f64).exp()).ln();
            let got = softplus(x);
            if direct.is_finite() {
                assert!((got - direct).abs() < 1e-12, "x={x}: {got} vs {direct}");
            }
        }
        assert_eq!(softplus(500.0), 500.0);
        assert!(softplus(-500.0) >= 0.0);
    }

    #[test]
    fn loss_pieces_at_known_points() {
        assert!((log_2d(0.0) - 0.0).abs() < 1e-15);
        assert!((log_2_1md(0.0) - 0.0).abs() < 1e-15);
        // f -> inf: log 2D -> log 2, log 2(1-D) -> -inf
        assert!((log_2d(500.0) - LN_2).abs() < 1e-12);
    }

    #[test]
    fn erf_reference_values() {
        // Reference digits from Abramowitz & Stegun table 7.1 / mpmath.
        let cases = [
            (0.0, 0.0),
            (0.1, 0.1124629160182849),
            (0.5, 0.5204998778130465),
            (1.0, 0.8427007929497149),
            (2.0, 0.9953222650189527),
            (3.0, 0.9999779095030014),
            (4.5, 0.9999999998033839),
        ];
        for (x, want) in cases {
            assert!((erf(x) - want).abs() < 1e-13, "erf({x})");
            assert!((erf(-x) + want).abs() < 1e-13);
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[
            1e-9,
            1e-4,
            0.01,
            0.05,
            0.3,
            0.5,
            0.7,
            0.95,
            0.99,
            1.0 - 1e-9,
        ] {
            let z = normal_quantile(p);
            assert!((normal_cdf(z) - p).abs() < 1e-9, "p={p} z={z}");
        }
        assert!((normal_upper_quantile(0.05) - 1.6448536269514722).abs() < 1e-9);
    }
}
