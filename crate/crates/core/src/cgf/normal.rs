use super::{check_multi, check_order, Interval, ScalarCgf, VectorCgf2};
use crate::error::{invalid, Result};

/// Jointly Gaussian (X, Y) with means μ₁, μ₂, scales σ₁, σ₂ and correlation ρ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariateNormal {
    pub mu1: f64,
    pub mu2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub rho: f64,
}

impl BivariateNormal {
    pub fn new(mu1: f64, mu2: f64, sigma1: f64, sigma2: f64, rho: f64) -> Result<Self> {
        if !(mu1.is_finite() && mu2.is_finite()) {
            return Err(invalid("means must be finite"));
        }
        if !(sigma1 >= 0.0 && sigma1.is_finite()) || !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(invalid("sigma1 must be >= 0 and sigma2 > 0"));
        }
        if !(rho.abs() <= 1.0) {
            return Err(invalid("correlation must lie in [-1, 1]"));
        }
        Ok(Self { mu1, mu2, sigma1, sigma2, rho })
    }

    fn cov(&self) -> f64 {
        self.rho * self.sigma1 * self.sigma2
    }
}

impl ScalarCgf for BivariateNormal {
    fn domain(&self) -> Interval {
        Interval::REAL_LINE
    }
    fn mean_x(&self) -> f64 {
        self.mu1
    }
    fn ky_deriv(&self, eta: f64, r: usize) -> Result<f64> {
        check_order(r, 4)?;
        self.domain().check(eta)?;
        let s2 = self.sigma2 * self.sigma2;
        Ok(match r {
            0 => self.mu2 * eta + 0.5 * s2 * eta * eta,
            1 => self.mu2 + s2 * eta,
            2 => s2,
            _ => 0.0,
        })
    }
    fn kgamma_deriv(&self, eta: f64, r: usize) -> Result<f64> {
        check_order(r, 2)?;
        self.domain().check(eta)?;
        Ok(match r {
            0 => self.mu1 + self.cov() * eta,
            1 => self.cov(),
            _ => 0.0,
        })
    }
}

/// Jointly Gaussian (X, Y₁, Y₂): mean vector and covariance ordered (X, Y₁, Y₂).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrivariateNormal {
    pub mean: [f64; 3],
    pub cov: [[f64; 3]; 3],
}

impl TrivariateNormal {
    pub fn new(mean: [f64; 3], cov: [[f64; 3]; 3]) -> Result<Self> {
        for i in 0..3 {
            for j in 0..3 {
                if (cov[i][j] - cov[j][i]).abs() > 1e-12 * (1.0 + cov[i][j].abs()) {
                    return Err(invalid("covariance must be symmetric"));
                }
            }
        }
        // Y-block positive definite; X may be degenerate.
        let (a, b, c) = (cov[1][1], cov[1][2], cov[2][2]);
        if !(a > 0.0 && a * c - b * b > 0.0) || cov[0][0] < 0.0 {
            return Err(invalid("Y covariance must be positive definite"));
        }
        Ok(Self { mean, cov })
    }

    /// E[X | Y = a] in closed form.
    pub fn conditional_mean(&self, a: [f64; 2]) -> f64 {
        let (s11, s12, s22) = (self.cov[1][1], self.cov[1][2], self.cov[2][2]);
        let det = s11 * s22 - s12 * s12;
        let d = [a[0] - self.mean[1], a[1] - self.mean[2]];
        let w = [(s22 * d[0] - s12 * d[1]) / det, (-s12 * d[0] + s11 * d[1]) / det];
        self.mean[0] + self.cov[0][1] * w[0] + self.cov[0][2] * w[1]
    }
}

impl VectorCgf2 for TrivariateNormal {
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
        self.mean[0]
    }
    fn ky_partial(&self, eta: [f64; 2], p: [usize; 2]) -> Result<f64> {
        check_multi(p, 4)?;
        self.check(eta)?;
        let s = [[self.cov[1][1], self.cov[1][2]], [self.cov[2][1], self.cov[2][2]]];
        let m = [self.mean[1], self.mean[2]];
        let grad = |i: usize| m[i] + s[i][0] * eta[0] + s[i][1] * eta[1];
        Ok(match (p[0], p[1]) {
            (0, 0) => {
                m[0] * eta[0]
                    + m[1] * eta[1]
                    + 0.5 * (s[0][0] * eta[0] * eta[0] + 2.0 * s[0][1] * eta[0] * eta[1] + s[1][1] * eta[1] * eta[1])
            }
            (1, 0) => grad(0),
            (0, 1) => grad(1),
            (2, 0) => s[0][0],
            (1, 1) => s[0][1],
            (0, 2) => s[1][1],
            _ => 0.0,
        })
    }
    fn kgamma_partial(&self, eta: [f64; 2], p: [usize; 2]) -> Result<f64> {
        check_multi(p, 2)?;
        self.check(eta)?;
        Ok(match (p[0], p[1]) {
            (0, 0) => self.mean[0] + self.cov[0][1] * eta[0] + self.cov[0][2] * eta[1],
            (1, 0) => self.cov[0][1],
            (0, 1) => self.cov[0][2],
            _ => 0.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kgamma_is_linear_tilt() {
        let m = BivariateNormal::new(0.0, 0.0, 1.0, 1.0, 0.5).unwrap();
        assert_eq!(m.kgamma(2.0).unwrap(), 1.0);
        assert_eq!(m.kgamma_deriv(-3.7, 2).unwrap(), 0.0);
        let m = BivariateNormal::new(0.4, -0.2, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(m.ky_deriv(0.0, 1).unwrap(), -0.2);
        assert_eq!(m.ky(0.0).unwrap(), 0.0);
        assert_eq!(m.kgamma(0.0).unwrap(), m.mean_x());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(BivariateNormal::new(0.0, 0.0, 1.0, 0.0, 0.1).is_err());
        assert!(BivariateNormal::new(0.0, 0.0, 1.0, 1.0, 1.5).is_err());
        assert!(TrivariateNormal::new([0.0; 3], [[1.0, 0.0, 0.0], [0.0, 1.0, 1.0], [0.0, 1.0, 1.0]]).is_err());
    }

    #[test]
    fn rejects_derivative_orders_beyond_contract() {
        let m = BivariateNormal::new(0.0, 0.0, 1.0, 1.0, 0.5).unwrap();
        assert!(m.ky_deriv(0.0, 5).is_err());
        assert!(m.kgamma_deriv(0.0, 3).is_err());
    }

    #[test]
    fn trivariate_conditional_mean_matches_regression() {
        let t = TrivariateNormal::new([0.1, 0.2, -0.3], [[2.0, 0.6, 0.3], [0.6, 1.0, 0.25], [0.3, 0.25, 0.5]]).unwrap();
        // independent-coordinates special case: X regression on Y1 only
        let t0 = TrivariateNormal::new([0.1, 0.0, 0.0], [[1.0, 0.5, 0.0], [0.5, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert!((t0.conditional_mean([2.0, 7.0]) - (0.1 + 0.5 * 2.0)).abs() < 1e-15);
        assert!(t.kgamma([0.0, 0.0]).unwrap() == 0.1);
    }
}
