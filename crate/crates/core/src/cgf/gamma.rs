//! Linear combinations of independent unit-scale gamma variables. Their CGFs
//! are analytic to every order and conditional laws are available by direct
//! integration, which makes them convenient non-Gaussian reference models.

use super::{check_multi, check_order, Interval, ScalarCgf, VectorCgf2};
use crate::error::{invalid, Result};

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn check_shapes(shapes: &[f64]) -> Result<()> {
    if shapes.is_empty() || shapes.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(invalid("gamma shapes must be positive"));
    }
    Ok(())
}

/// Y = Σ a_k G_k and X = Σ c_k G_k with G_k ~ Gamma(s_k, 1) independent.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaFactorModel {
    pub shapes: Vec<f64>,
    pub y_loadings: Vec<f64>,
    pub x_loadings: Vec<f64>,
    domain: Interval,
}

impl GammaFactorModel {
    pub fn new(shapes: Vec<f64>, y_loadings: Vec<f64>, x_loadings: Vec<f64>) -> Result<Self> {
        check_shapes(&shapes)?;
        if y_loadings.len() != shapes.len() || x_loadings.len() != shapes.len() {
            return Err(invalid("loadings must match the number of factors"));
        }
        if y_loadings.iter().all(|&a| a == 0.0) {
            return Err(invalid("Y must load on at least one factor"));
        }
        let mut domain = Interval::REAL_LINE;
        for &a in &y_loadings {
            if a > 0.0 {
                domain.hi = domain.hi.min(1.0 / a);
            } else if a < 0.0 {
                domain.lo = domain.lo.max(1.0 / a);
            }
        }
        Ok(Self { shapes, y_loadings, x_loadings, domain })
    }
}

impl ScalarCgf for GammaFactorModel {
    fn domain(&self) -> Interval {
        self.domain
    }
    fn mean_x(&self) -> f64 {
        self.shapes.iter().zip(&self.x_loadings).map(|(s, c)| s * c).sum()
    }
    fn ky_deriv(&self, eta: f64, r: usize) -> Result<f64> {
        check_order(r, 4)?;
        self.domain.check(eta)?;
        Ok(self
            .shapes
            .iter()
            .zip(&self.y_loadings)
            .map(|(&s, &a)| {
                let w = 1.0 - a * eta;
                if r == 0 {
                    -s * w.ln()
                } else {
                    s * factorial(r - 1) * a.powi(r as i32) / w.powi(r as i32)
                }
            })
            .sum())
    }
    fn kgamma_deriv(&self, eta: f64, r: usize) -> Result<f64> {
        check_order(r, 2)?;
        self.domain.check(eta)?;
        Ok(self
            .shapes
            .iter()
            .zip(&self.y_loadings)
            .zip(&self.x_loadings)
            .map(|((&s, &a), &c)| s * c * factorial(r) * a.powi(r as i32) / (1.0 - a * eta).powi(r as i32 + 1))
            .sum())
    }
}

/// (Y₁, Y₂) = Σ_k (A₁ₖ, A₂ₖ) G_k and X = Σ c_k G_k with independent Gamma(s_k, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct GammaFactorModel2 {
    pub shapes: Vec<f64>,
    pub y_loadings: [Vec<f64>; 2],
    pub x_loadings: Vec<f64>,
}

impl GammaFactorModel2 {
    pub fn new(shapes: Vec<f64>, y_loadings: [Vec<f64>; 2], x_loadings: Vec<f64>) -> Result<Self> {
        check_shapes(&shapes)?;
        let m = shapes.len();
        if y_loadings[0].len() != m || y_loadings[1].len() != m || x_loadings.len() != m {
            return Err(invalid("loadings must match the number of factors"));
        }
        let det_ok = (0..m).any(|i| {
            (0..m).any(|j| (y_loadings[0][i] * y_loadings[1][j] - y_loadings[0][j] * y_loadings[1][i]).abs() > 1e-12)
        });
        if !det_ok {
            return Err(invalid("Y loadings must span two dimensions"));
        }
        Ok(Self { shapes, y_loadings, x_loadings })
    }

    fn slack(&self, eta: [f64; 2], k: usize) -> f64 {
        1.0 - self.y_loadings[0][k] * eta[0] - self.y_loadings[1][k] * eta[1]
    }
}

impl VectorCgf2 for GammaFactorModel2 {
    fn contains(&self, eta: [f64; 2]) -> bool {
        eta[0].is_finite()
            && eta[1].is_finite()
            && (0..self.shapes.len()).all(|k| self.slack(eta, k) > super::DOMAIN_MARGIN)
    }
    fn bounding_box(&self) -> [Interval; 2] {
        let mut boxes = [Interval::REAL_LINE; 2];
        for (j, b) in boxes.iter_mut().enumerate() {
            let other = 1 - j;
            for k in 0..self.shapes.len() {
                let (a, o) = (self.y_loadings[j][k], self.y_loadings[other][k]);
                if o == 0.0 {
                    if a > 0.0 {
                        b.hi = b.hi.min(1.0 / a);
                    } else if a < 0.0 {
                        b.lo = b.lo.max(1.0 / a);
                    }
                }
            }
        }
        boxes
    }
    fn eta2_slice(&self, eta1: f64) -> Interval {
        let mut slice = Interval::REAL_LINE;
        for k in 0..self.shapes.len() {
            let rest = 1.0 - self.y_loadings[0][k] * eta1;
            let a2 = self.y_loadings[1][k];
            if a2 > 0.0 {
                slice.hi = slice.hi.min(rest / a2);
            } else if a2 < 0.0 {
                slice.lo = slice.lo.max(rest / a2);
            } else if rest <= 0.0 {
                return Interval::new(0.0, 0.0);
            }
        }
        slice
    }
    fn mean_x(&self) -> f64 {
        self.shapes.iter().zip(&self.x_loadings).map(|(s, c)| s * c).sum()
    }
    fn ky_partial(&self, eta: [f64; 2], p: [usize; 2]) -> Result<f64> {
        check_multi(p, 4)?;
        self.check(eta)?;
        let r = p[0] + p[1];
        Ok((0..self.shapes.len())
            .map(|k| {
                let w = self.slack(eta, k);
                let s = self.shapes[k];
                if r == 0 {
                    -s * w.ln()
                } else {
                    s * factorial(r - 1)
                        * self.y_loadings[0][k].powi(p[0] as i32)
                        * self.y_loadings[1][k].powi(p[1] as i32)
                        / w.powi(r as i32)
                }
            })
            .sum())
    }
    fn kgamma_partial(&self, eta: [f64; 2], p: [usize; 2]) -> Result<f64> {
        check_multi(p, 2)?;
        self.check(eta)?;
        let r = p[0] + p[1];
        Ok((0..self.shapes.len())
            .map(|k| {
                let w = self.slack(eta, k);
                self.shapes[k]
                    * self.x_loadings[k]
                    * factorial(r)
                    * self.y_loadings[0][k].powi(p[0] as i32)
                    * self.y_loadings[1][k].powi(p[1] as i32)
                    / w.powi(r as i32 + 1)
            })
            .sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_moments() {
        let m = GammaFactorModel::new(vec![2.0, 3.0], vec![1.0, 1.0], vec![1.0, 0.0]).unwrap();
        assert_eq!(m.ky(0.0).unwrap(), 0.0);
        assert_eq!(m.ky_deriv(0.0, 1).unwrap(), 5.0);
        assert_eq!(m.ky_deriv(0.0, 2).unwrap(), 5.0);
        assert_eq!(m.kgamma(0.0).unwrap(), 2.0);
        assert_eq!(m.domain(), Interval::new(f64::NEG_INFINITY, 1.0));
    }

    #[test]
    fn two_dimensional_slices_and_moments() {
        let m = GammaFactorModel2::new(
            vec![4.0, 5.0, 3.0],
            [vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0]],
            vec![0.0, 0.0, 1.0],
        )
        .unwrap();
        assert_eq!(m.ky_grad([0.0, 0.0]).unwrap(), [7.0, 8.0]);
        assert_eq!(m.ky_partial([0.0, 0.0], [1, 1]).unwrap(), 3.0);
        assert_eq!(m.kgamma([0.0, 0.0]).unwrap(), 3.0);
        let s = m.eta2_slice(0.5);
        assert!((s.hi - 0.5).abs() < 1e-15 && s.lo.is_infinite());
        assert!(m.contains([0.4, 0.5]));
        assert!(!m.contains([0.6, 0.5]));
        let b = m.bounding_box();
        assert_eq!(b[0].hi, 1.0);
        assert_eq!(b[1].hi, 1.0);
    }
}
