use super::{check_multi, Interval, VectorCgf2};
use crate::error::{invalid, Result};

/// Two correlated geometric Brownian motions and a correlation-call payoff
/// (S₁(T) − K)⁺·1{S₂(T) > H}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbmTwoAssetSpec {
    pub s1: f64,
    pub s2: f64,
    pub strike: f64,
    pub barrier: f64,
    pub r: f64,
    pub r1: f64,
    pub r2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub rho: f64,
    pub t: f64,
}

impl GbmTwoAssetSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.s1, self.s2, self.strike, self.barrier, self.sigma1, self.sigma2, self.t];
        if positive.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(invalid("prices, strike, barrier, volatilities and maturity must be positive"));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(invalid("|rho| must be below 1"));
        }
        if !(self.r.is_finite() && self.r1.is_finite() && self.r2.is_finite()) {
            return Err(invalid("rates must be finite"));
        }
        Ok(())
    }

    /// Thresholds (k, h) on (W₁(T), W₂(T)) equivalent to S₁(T) > K, S₂(T) > H.
    pub fn thresholds(&self) -> (f64, f64) {
        let k = ((self.strike / self.s1).ln() - (self.r1 - 0.5 * self.sigma1 * self.sigma1) * self.t) / self.sigma1;
        let h = ((self.barrier / self.s2).ln() - (self.r2 - 0.5 * self.sigma2 * self.sigma2) * self.t) / self.sigma2;
        (k, h)
    }
}

/// (X, Y₁, Y₂) = (W₁(T), W₁(T), W₂(T)) under the measure tilted by e^{σ₁W₁(T)}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbmQModel {
    pub sigma1: f64,
    pub rho: f64,
    pub t: f64,
}

impl GbmQModel {
    pub fn new(sigma1: f64, rho: f64, t: f64) -> Result<Self> {
        if !(rho.abs() < 1.0) {
            return Err(invalid("|rho| must be below 1"));
        }
        if !(t > 0.0 && t.is_finite()) || !sigma1.is_finite() {
            return Err(invalid("T must be positive and sigma1 finite"));
        }
        Ok(Self { sigma1, rho, t })
    }

    pub fn from_spec(spec: &GbmTwoAssetSpec) -> Result<(Self, [f64; 2])> {
        spec.validate()?;
        let (k, h) = spec.thresholds();
        Ok((Self::new(spec.sigma1, spec.rho, spec.t)?, [k, h]))
    }

    /// Untilted CGF K(η₁, η₂) = T(η₁²/2 + ρη₁η₂ + η₂²/2).
    pub fn base_cgf(&self, e1: f64, e2: f64) -> f64 {
        self.t * (0.5 * e1 * e1 + self.rho * e1 * e2 + 0.5 * e2 * e2)
    }
}

impl VectorCgf2 for GbmQModel {
    fn contains(&self, eta: [f64; 2]) -> bool {
        eta[0].is_finite() && eta[1].is_finite()
    }
    fn bounding_box(&self) -> [Interval; 2] {
        [Interval::REAL_LINE; 2]
    }
    fn eta2_slice(&self, _eta1: f64) -> Interval {
        Interval::REAL_LINE
    }
    fn mean_x(&self) -> f64 {
        self.t * self.sigma1
    }
    fn ky_partial(&self, eta: [f64; 2], p: [usize; 2]) -> Result<f64> {
        check_multi(p, 4)?;
        self.check(eta)?;
        let (t, rho) = (self.t, self.rho);
        let u = self.sigma1 + eta[0];
        Ok(match (p[0], p[1]) {
            (0, 0) => self.base_cgf(u, eta[1]) - self.base_cgf(self.sigma1, 0.0),
            (1, 0) => t * (u + rho * eta[1]),
            (0, 1) => t * (rho * u + eta[1]),
            (2, 0) | (0, 2) => t,
            (1, 1) => rho * t,
            _ => 0.0,
        })
    }
    fn kgamma_partial(&self, eta: [f64; 2], p: [usize; 2]) -> Result<f64> {
        check_multi(p, 2)?;
        self.check(eta)?;
        Ok(match (p[0], p[1]) {
            (0, 0) => self.t * (eta[0] + self.sigma1 + self.rho * eta[1]),
            (1, 0) => self.t,
            (0, 1) => self.rho * self.t,
            _ => 0.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tilted_mean_is_sigma_t() {
        let m = GbmQModel::new(0.3, 0.4, 2.0).unwrap();
        assert!((m.kgamma([0.0, 0.0]).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(m.ky([0.0, 0.0]).unwrap(), 0.0);
        // Y mean under the tilt: (σ₁T, ρσ₁T)
        let g = m.ky_grad([0.0, 0.0]).unwrap();
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.24).abs() < 1e-15);
    }

    #[test]
    fn degenerate_correlation_rejected() {
        assert!(GbmQModel::new(0.3, 1.0, 1.0).is_err());
        let spec = GbmTwoAssetSpec {
            s1: 100.0,
            s2: 100.0,
            strike: 110.0,
            barrier: 105.0,
            r: 0.01,
            r1: 0.01,
            r2: 0.01,
            sigma1: 0.2,
            sigma2: 0.3,
            rho: -1.0,
            t: 1.0,
        };
        assert!(GbmQModel::from_spec(&spec).is_err());
    }
}
