use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{check_order, Interval, ScalarCgf};
use crate::error::{invalid, Result};

/// Quadratic loss Y = f₀ + aᵀX + XᵀBX with X ~ N(μ, Σ), rewritten as
/// Y = c + dᵀZ + ZᵀΛZ in independent standard normals Z.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaGammaPortfolio {
    pub f0: f64,
    pub a_vec: DVector<f64>,
    pub b_mat: DMatrix<f64>,
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub c: f64,
    pub d_vec: DVector<f64>,
    pub lambda_vec: DVector<f64>,
    pub p_mat: DMatrix<f64>,
    pub h_mat: DMatrix<f64>,
}

impl DeltaGammaPortfolio {
    pub fn new(f0: f64, a_vec: &[f64], b_mat: &[Vec<f64>], mu: &[f64], sigma: &[Vec<f64>]) -> Result<Self> {
        let m = a_vec.len();
        if m == 0 || mu.len() != m || b_mat.len() != m || sigma.len() != m {
            return Err(invalid("delta-gamma inputs must share one positive dimension"));
        }
        if b_mat.iter().chain(sigma.iter()).any(|row| row.len() != m) {
            return Err(invalid("matrices must be square"));
        }
        let b = DMatrix::from_fn(m, m, |i, j| b_mat[i][j]);
        let s = DMatrix::from_fn(m, m, |i, j| sigma[i][j]);
        let a = DVector::from_column_slice(a_vec);
        let mu = DVector::from_column_slice(mu);
        Self::from_matrices(f0, a, b, mu, s)
    }

    /// The two-factor instance used in the examples.
    pub fn reference() -> Self {
        Self::new(
            0.3,
            &[0.8, 1.5],
            &[vec![1.2, 0.6], vec![0.6, 1.5]],
            &[0.01, 0.03],
            &[vec![0.02, 0.01], vec![0.01, 0.02]],
        )
        .expect("valid reference instance")
    }

    pub fn from_matrices(
        f0: f64,
        a_vec: DVector<f64>,
        b_mat: DMatrix<f64>,
        mu: DVector<f64>,
        sigma: DMatrix<f64>,
    ) -> Result<Self> {
        let m = a_vec.len();
        let all_finite = f0.is_finite()
            && a_vec.iter().chain(b_mat.iter()).chain(mu.iter()).chain(sigma.iter()).all(|v| v.is_finite());
        if !all_finite {
            return Err(invalid("delta-gamma inputs must be finite"));
        }
        let sym_err = |x: &DMatrix<f64>| (x - x.transpose()).amax();
        if sym_err(&b_mat) > 1e-12 * (1.0 + b_mat.amax()) {
            return Err(invalid("B must be symmetric"));
        }
        if sym_err(&sigma) > 1e-12 * (1.0 + sigma.amax()) {
            return Err(invalid("Sigma must be symmetric"));
        }
        let chol = sigma.clone().cholesky().ok_or_else(|| invalid("Sigma must be positive definite"))?;
        let h = chol.l();

        let core = h.transpose() * &b_mat * &h;
        let core = (&core + core.transpose()) * 0.5;
        let eig = SymmetricEigen::new(core);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let lambda_vec = DVector::from_iterator(m, order.iter().map(|&k| eig.eigenvalues[k]));
        let mut p = DMatrix::zeros(m, m);
        for (col, &k) in order.iter().enumerate() {
            let mut v = eig.eigenvectors.column(k).into_owned();
            let lead = v.iter().find(|x| x.abs() > 1e-14).copied().unwrap_or(1.0);
            if lead < 0.0 {
                v = -v;
            }
            p.set_column(col, &v);
        }

        let c = f0 + a_vec.dot(&mu) + mu.dot(&(&b_mat * &mu));
        let d_vec = p.transpose() * h.transpose() * (&a_vec + 2.0 * (&b_mat * &mu));
        Ok(Self { f0, a_vec, b_mat, mu, sigma, c, d_vec, lambda_vec, p_mat: p, h_mat: h })
    }

    pub fn dim(&self) -> usize {
        self.a_vec.len()
    }

    /// E[Y] = c + Σλ_k.
    pub fn mean_y(&self) -> f64 {
        self.c + self.lambda_vec.sum()
    }

    /// E[∂Y/∂μᵢ] = aᵢ + 2Σ_k b_{ik}μ_k.
    pub fn partial_mean(&self, i: usize) -> f64 {
        self.a_vec[i] + 2.0 * self.b_mat.row(i).transpose().dot(&self.mu)
    }

    /// Coefficients g_k = [2PᵀHᵀB]_{ki} of Z in ∂Y/∂μᵢ.
    pub fn z_loadings(&self, i: usize) -> DVector<f64> {
        (self.p_mat.transpose() * self.h_mat.transpose() * &self.b_mat).column(i) * 2.0
    }

    /// Open η-interval on which 1 − 2λ_kη > 0 for every k.
    pub fn domain(&self) -> Interval {
        let mut d = Interval::REAL_LINE;
        for &l in self.lambda_vec.iter() {
            if l > 0.0 {
                d.hi = d.hi.min(0.5 / l);
            } else if l < 0.0 {
                d.lo = d.lo.max(0.5 / l);
            }
        }
        d
    }

    /// Joint model of (∂Y/∂μᵢ, Y).
    pub fn cgf(&self, i: usize) -> Result<DeltaGammaCgf> {
        if i >= self.dim() {
            return Err(invalid(format!("index {i} out of range")));
        }
        Ok(DeltaGammaCgf {
            c: self.c,
            d: self.d_vec.iter().copied().collect(),
            lambda: self.lambda_vec.iter().copied().collect(),
            g: self.z_loadings(i).iter().copied().collect(),
            m_i: self.partial_mean(i),
            domain: self.domain(),
        })
    }
}

/// CGF of (∂Y/∂μᵢ, Y) for a delta-gamma loss.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaGammaCgf {
    pub c: f64,
    pub d: Vec<f64>,
    pub lambda: Vec<f64>,
    pub g: Vec<f64>,
    pub m_i: f64,
    domain: Interval,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

// j-th derivative of 1/(1 − 2λη)
fn inv_deriv(lambda: f64, w: f64, j: usize) -> f64 {
    factorial(j) * (2.0 * lambda).powi(j as i32) / w.powi(j as i32 + 1)
}

impl ScalarCgf for DeltaGammaCgf {
    fn domain(&self) -> Interval {
        self.domain
    }
    fn mean_x(&self) -> f64 {
        self.m_i
    }
    fn ky_deriv(&self, eta: f64, r: usize) -> Result<f64> {
        check_order(r, 4)?;
        self.domain.check(eta)?;
        let mut total = match r {
            0 => self.c * eta,
            1 => self.c,
            _ => 0.0,
        };
        for (&l, &d) in self.lambda.iter().zip(&self.d) {
            let w = 1.0 - 2.0 * l * eta;
            total += if r == 0 {
                -0.5 * w.ln()
            } else {
                0.5 * factorial(r - 1) * (2.0 * l).powi(r as i32) / w.powi(r as i32)
            };
            let mut quad = eta * eta * inv_deriv(l, w, r);
            if r >= 1 {
                quad += 2.0 * r as f64 * eta * inv_deriv(l, w, r - 1);
            }
            if r >= 2 {
                quad += (r * (r - 1)) as f64 * inv_deriv(l, w, r - 2);
            }
            total += 0.5 * d * d * quad;
        }
        Ok(total)
    }
    fn kgamma_deriv(&self, eta: f64, r: usize) -> Result<f64> {
        check_order(r, 2)?;
        self.domain.check(eta)?;
        let mut total = if r == 0 { self.m_i } else { 0.0 };
        for ((&l, &d), &g) in self.lambda.iter().zip(&self.d).zip(&self.g) {
            let w = 1.0 - 2.0 * l * eta;
            total += match r {
                0 => g * d * eta / w,
                1 => g * d / (w * w),
                _ => 4.0 * l * g * d / (w * w * w),
            };
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_instance() -> DeltaGammaPortfolio {
        DeltaGammaPortfolio::new(
            0.3,
            &[0.8, 1.5],
            &[vec![1.2, 0.6], vec![0.6, 1.5]],
            &[0.01, 0.03],
            &[vec![0.02, 0.01], vec![0.01, 0.02]],
        )
        .unwrap()
    }

    #[test]
    fn decomposition_invariants() {
        let dg = paper_instance();
        let c = 0.3 + 0.8 * 0.01 + 1.5 * 0.03 + (1.2 * 1e-4 + 2.0 * 0.6 * 3e-4 + 1.5 * 9e-4);
        assert!((dg.c - c).abs() < 1e-12);
        let recon = &dg.p_mat * DMatrix::from_diagonal(&dg.lambda_vec) * dg.p_mat.transpose();
        let core = dg.h_mat.transpose() * &dg.b_mat * &dg.h_mat;
        assert!((recon - core).amax() < 1e-10);
        assert!((dg.p_mat.transpose() * &dg.p_mat - DMatrix::identity(2, 2)).amax() < 1e-10);
        assert!((&dg.h_mat * dg.h_mat.transpose() - &dg.sigma).amax() < 1e-15);
        assert!(dg.lambda_vec[0] >= dg.lambda_vec[1] && dg.lambda_vec[1] > 0.0);
        for col in 0..2 {
            assert!(dg.p_mat[(0, col)] > 0.0);
        }
    }

    #[test]
    fn cgf_moments_at_origin() {
        let dg = paper_instance();
        let m = dg.cgf(0).unwrap();
        assert_eq!(m.ky(0.0).unwrap(), 0.0);
        assert!((m.ky_deriv(0.0, 1).unwrap() - dg.mean_y()).abs() < 1e-15);
        assert!((m.kgamma(0.0).unwrap() - (0.8 + 2.0 * (1.2 * 0.01 + 0.6 * 0.03))).abs() < 1e-15);
        // Var(Y) = Σ d² + 2λ²
        let var: f64 = dg.d_vec.iter().zip(dg.lambda_vec.iter()).map(|(d, l)| d * d + 2.0 * l * l).sum();
        assert!((m.ky_deriv(0.0, 2).unwrap() - var).abs() < 1e-14);
    }

    #[test]
    fn zero_gamma_is_linear_gaussian() {
        let dg = DeltaGammaPortfolio::new(
            0.0,
            &[1.0, -2.0],
            &[vec![0.0, 0.0], vec![0.0, 0.0]],
            &[0.1, 0.2],
            &[vec![1.0, 0.3], vec![0.3, 2.0]],
        )
        .unwrap();
        assert!(dg.lambda_vec.iter().all(|&l| l == 0.0));
        assert_eq!(dg.domain(), Interval::REAL_LINE);
        let m = dg.cgf(1).unwrap();
        assert_eq!(m.ky_deriv(0.7, 3).unwrap(), 0.0);
        assert_eq!(m.kgamma(2.0).unwrap(), -2.0);
    }

    #[test]
    fn rejects_indefinite_sigma() {
        let r = DeltaGammaPortfolio::new(
            0.0,
            &[1.0, 1.0],
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            &[0.0, 0.0],
            &[vec![1.0, 2.0], vec![2.0, 1.0]],
        );
        assert!(r.is_err());
    }
}
