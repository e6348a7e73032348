//! Option vegas: a two-asset correlation call under GBM and an exchange
//! option under exponential variance gamma.

use rayon::prelude::*;

use crate::cgf::{GbmQModel, GbmTwoAssetSpec, ScalarCgf, VgExchangeModel, VgExchangeSpec};
use crate::condexp::{tail_weighted_mean_1d, tail_weighted_mean_2d};
use crate::error::Result;
use crate::saddle::{solve_saddle_1d, solve_saddle_2d};
use crate::special::binorm_cdf_bar;

/// A vega together with the pieces it was assembled from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbmVega {
    pub value: f64,
    /// E^Q[X·1{Y₁ > k}·1{Y₂ > h}] from the two-dimensional expansion.
    pub tail_mean: f64,
    /// P^Q[Y₁ > k, Y₂ > h].
    pub tail_prob: f64,
    pub eta_hat: [f64; 2],
}

/// Standardized Q-thresholds (x̂, ŷ) of (W₁(T), W₂(T)).
pub fn gbm_standardized_thresholds(spec: &GbmTwoAssetSpec) -> (f64, f64) {
    let (k, h) = spec.thresholds();
    let rt = spec.t.sqrt();
    (k / rt - rt * spec.sigma1, h / rt - rt * spec.rho * spec.sigma1)
}

/// ∂C/∂σ₁ = S₁e^{(r₁−r)T}{E^Q[X·1{Y₁>k}·1{Y₂>h}] − σ₁T·P^Q[Y₁>k, Y₂>h]}.
pub fn gbm_correlation_call_vega(spec: &GbmTwoAssetSpec, n: usize) -> Result<GbmVega> {
    let (model, a) = GbmQModel::from_spec(spec)?;
    let sp = solve_saddle_2d(&model, a)?;
    let tail_mean = tail_weighted_mean_2d(&model, a, n)?;
    let (x, y) = gbm_standardized_thresholds(spec);
    let tail_prob = binorm_cdf_bar(x, y, spec.rho);
    let scale = spec.s1 * ((spec.r1 - spec.r) * spec.t).exp();
    Ok(GbmVega {
        value: scale * (tail_mean - spec.sigma1 * spec.t * tail_prob),
        tail_mean,
        tail_prob,
        eta_hat: sp.eta_hat,
    })
}

/// A VG exchange-option vega at one σ₁.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VgVega {
    pub sigma1: f64,
    pub value: f64,
    /// E^Q[X₁(T)·1{σ₁X₁(T) − σ₂X₂(T) > k}].
    pub tail_mean: f64,
    pub eta_hat: f64,
    /// K′_Y(η̂) − k.
    pub saddle_residual: f64,
}

/// ∂C/∂σ₁ = S₁e^{(r₁−r)T + K₁(σ₁)}·E^Q[X₁(T)·1{σ₁X₁(T) − σ₂X₂(T) > k}] at `spec.sigma1`.
pub fn vg_exchange_vega_at(spec: &VgExchangeSpec) -> Result<VgVega> {
    let model = VgExchangeModel::new(spec)?;
    let k = spec.threshold();
    let sp = solve_saddle_1d(&model, k)?;
    let tail_mean = tail_weighted_mean_1d(&model, k, 1)?;
    let scale = spec.s1 * ((spec.r1 - spec.r) * spec.t + model.k1_at_sigma1()).exp();
    Ok(VgVega {
        sigma1: spec.sigma1,
        value: scale * tail_mean,
        tail_mean,
        eta_hat: sp.eta_hat,
        saddle_residual: model.ky_deriv(sp.eta_hat, 1)? - k,
    })
}

/// Vegas over a grid of σ₁; each point fails independently.
pub fn vg_exchange_vega(spec: &VgExchangeSpec, sigma1_grid: &[f64]) -> Vec<Result<VgVega>> {
    sigma1_grid.par_iter().map(|&s| vg_exchange_vega_at(&spec.with_sigma1(s))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::special::{norm_pdf, norm_sf};

    fn spec(strike: f64, barrier: f64, rho: f64) -> GbmTwoAssetSpec {
        GbmTwoAssetSpec {
            s1: 100.0,
            s2: 100.0,
            strike,
            barrier,
            r: 0.03,
            r1: 0.03,
            r2: 0.01,
            sigma1: 0.25,
            sigma2: 0.3,
            rho,
            t: 1.0,
        }
    }

    fn closed_form_tail_mean(spec: &GbmTwoAssetSpec) -> f64 {
        let (x, y) = gbm_standardized_thresholds(spec);
        let (rho, t) = (spec.rho, spec.t);
        let c = (1.0 - rho * rho).sqrt();
        spec.sigma1 * t * binorm_cdf_bar(x, y, rho)
            + t.sqrt() * (norm_pdf(x) * norm_sf((y - rho * x) / c) + rho * norm_pdf(y) * norm_sf((x - rho * y) / c))
    }

    #[test]
    fn gbm_tail_mean_matches_closed_form() {
        for rho in [-0.5, 0.2, 0.7] {
            for (strike, barrier) in [(140.0, 150.0), (160.0, 160.0), (180.0, 170.0)] {
                let s = spec(strike, barrier, rho);
                let v = gbm_correlation_call_vega(&s, 1).unwrap();
                assert!(v.eta_hat[0] > 0.0 && v.eta_hat[1] > 0.0);
                let want = closed_form_tail_mean(&s);
                assert!((v.tail_mean - want).abs() < 1e-12 * want.abs().max(1e-3), "{} vs {want}", v.tail_mean);
            }
        }
    }

    #[test]
    fn gbm_uncorrelated_vega_factorizes() {
        let s = spec(150.0, 140.0, 0.0);
        let (x, y) = gbm_standardized_thresholds(&s);
        // Black-Scholes vega of the first asset times P[S₂(T) > H]
        let bs_vega = s.s1 * ((s.r1 - s.r) * s.t).exp() * s.t.sqrt() * norm_pdf(x);
        let v = gbm_correlation_call_vega(&s, 1).unwrap();
        assert!((v.value - bs_vega * norm_sf(y)).abs() < 1e-12 * v.value);
    }

    #[test]
    fn gbm_in_the_money_is_unsupported() {
        assert!(matches!(gbm_correlation_call_vega(&spec(80.0, 150.0, 0.3), 1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn vg_grid_residuals_and_errors() {
        let grid = [0.2, 0.5, 1.0, 1.5, 2.0, 50.0];
        let out = vg_exchange_vega(&VgExchangeSpec::reference(1.0), &grid);
        for r in &out[..5] {
            let v = r.as_ref().unwrap();
            assert!(v.saddle_residual.abs() <= 1e-10);
            assert!(v.value.is_finite() && v.value > 0.0);
        }
        assert!(out[5].is_err());
    }
}
