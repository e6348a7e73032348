use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

/// Standard normal density φ(x).
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function Φ(x).
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail Φ̄(x) = 1 − Φ(x), accurate far into the right tail.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Quantile function Φ⁻¹(p) for p in (0, 1).
pub fn norm_inv(p: f64) -> f64 {
    if !(p > 0.0 && p < 1.0) {
        return if p == 0.0 {
            f64::NEG_INFINITY
        } else if p == 1.0 {
            f64::INFINITY
        } else {
            f64::NAN
        };
    }
    let mut x = -SQRT_2 * erfc_inv(2.0 * p);
    // Halley polish against the accurate distribution function
    for _ in 0..2 {
        let e = if x < 0.0 { norm_cdf(x) - p } else { (1.0 - p) - norm_sf(x) };
        let u = e / norm_pdf(x);
        if !u.is_finite() {
            break;
        }
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert!((norm_pdf(0.0) - 0.398_942_280_401_432_7).abs() < 1e-16);
        assert!((norm_sf(1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
        assert!((norm_cdf(-1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
        // far tail keeps relative accuracy
        assert!((norm_sf(10.0) / 7.619_853_024_160_526e-24 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn quantile_roundtrip() {
        assert!((norm_inv(0.95) - 1.644_853_626_951_472_2).abs() < 1e-12);
        for &p in &[1e-6, 0.01, 0.3, 0.5, 0.77, 0.999] {
            assert!((norm_cdf(norm_inv(p)) - p).abs() <= 4e-16 * p.max(1e-2), "p={p}");
        }
    }
}
