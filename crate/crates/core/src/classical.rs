//! Classical saddlepoint expansions for the sample mean Ȳ: Daniels density,
//! Lugannani-Rice tail, the Temme and Butler-Wood tail means, and the
//! two-dimensional density.

use std::f64::consts::PI;

use crate::cgf::VectorCgf2;
use crate::error::{invalid, Error, Result};
use crate::saddle::{Saddlepoint1, Saddlepoint2};
use crate::special::{norm_pdf, norm_sf};

pub use crate::special::binorm_cdf_bar;

/// Truncation order of an expansion: leading term only, or with the 1/n term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Order {
    Leading,
    #[default]
    Corrected,
}

impl Order {
    pub fn from_int(k: u32) -> Result<Self> {
        match k {
            0 => Ok(Order::Leading),
            1 => Ok(Order::Corrected),
            _ => Err(invalid(format!("expansion order must be 0 or 1, got {k}"))),
        }
    }

    pub(crate) fn weight(self) -> f64 {
        match self {
            Order::Leading => 0.0,
            Order::Corrected => 1.0,
        }
    }
}

pub(crate) fn check_n(n: usize) -> Result<f64> {
    if n == 0 {
        Err(invalid("sample size n must be at least 1"))
    } else {
        Ok(n as f64)
    }
}

/// ρ̂₄/8 − 5ρ̂₃²/24.
pub(crate) fn kurtosis_term(sp: &Saddlepoint1) -> f64 {
    sp.rho4 / 8.0 - 5.0 * sp.rho3 * sp.rho3 / 24.0
}

/// 1/ẑ − 1/ω̂ and 1/ω̂³ − 1/ẑ³ written through ẑ − ω̂, which stays accurate
/// when both variables are small.
pub(crate) fn reciprocal_gaps(sp: &Saddlepoint1) -> (f64, f64) {
    let (z, w, d) = (sp.z_hat, sp.omega_hat, sp.z_minus_omega);
    let gap1 = -d / (z * w);
    let gap3 = d * (z * z + z * w + w * w) / (z * z * z * w * w * w);
    (gap1, gap3)
}

fn clamp_probability(p: f64, what: &str) -> f64 {
    if (0.0..=1.0).contains(&p) {
        p
    } else {
        log::debug!("{what}: clamped {p} into [0, 1]");
        p.clamp(0.0, 1.0)
    }
}

fn require_regular(sp: &Saddlepoint1) -> Result<()> {
    if sp.near_zero {
        Err(Error::Branch)
    } else {
        Ok(())
    }
}

/// Daniels' density of Ȳ at a = K′_Y(η̂).
pub fn daniels_pdf(sp: &Saddlepoint1, n: usize, order: Order) -> Result<f64> {
    let nf = check_n(n)?;
    let lead = (nf / (2.0 * PI * sp.ky_pp)).sqrt() * (-0.5 * nf * sp.omega_hat * sp.omega_hat).exp();
    Ok(lead * (1.0 + order.weight() * kurtosis_term(sp) / nf))
}

/// Lugannani-Rice approximation of P[Ȳ ≥ a]; requires η̂ away from 0.
pub fn lugannani_rice(sp: &Saddlepoint1, n: usize, order: Order) -> Result<f64> {
    Ok(clamp_probability(lugannani_rice_raw(sp, n, order)?, "Lugannani-Rice"))
}

/// Lugannani-Rice before clamping into [0, 1].
pub(crate) fn lugannani_rice_raw(sp: &Saddlepoint1, n: usize, order: Order) -> Result<f64> {
    require_regular(sp)?;
    let nf = check_n(n)?;
    let rn = nf.sqrt();
    let (gap1, gap3) = reciprocal_gaps(sp);
    let z = sp.z_hat;
    let corr = gap3 - sp.rho3 / (2.0 * z * z) + kurtosis_term(sp) / z;
    Ok(norm_sf(rn * sp.omega_hat) + norm_pdf(rn * sp.omega_hat) / rn * (gap1 + order.weight() * corr / nf))
}

/// P[Ȳ ≥ E[Y]] near the mean: 1/2 − ρ₃/(6√(2πn)), the η̂ → 0 limit of the
/// Lugannani-Rice formula.
pub fn mean_crossing_tail(sp: &Saddlepoint1, n: usize) -> Result<f64> {
    let nf = check_n(n)?;
    Ok(0.5 - sp.rho3 / (6.0 * (2.0 * PI * nf).sqrt()))
}

/// Tail probability from Lugannani-Rice, or from its mean-crossing limit when
/// η̂ is under the zero threshold.
pub fn tail_prob_spa(sp: &Saddlepoint1, n: usize, order: Order) -> Result<f64> {
    if sp.near_zero {
        mean_crossing_tail(sp, n)
    } else {
        lugannani_rice(sp, n, order)
    }
}

/// Approximation of E[Ȳ·1{Ȳ ≥ a}] with the Temme-type bracket; `mu` = E[Y].
pub fn tail_mean_temme(sp: &Saddlepoint1, n: usize, mu: f64, order: Order) -> Result<f64> {
    require_regular(sp)?;
    let nf = check_n(n)?;
    let rn = nf.sqrt();
    let (gap1, gap3) = reciprocal_gaps(sp);
    let (z, a, da) = (sp.z_hat, sp.a, sp.a - mu);
    // a/ẑ − μ/ω̂ and μ/ω̂³ − a/ẑ³ regrouped around a − μ
    let lead = da / z + mu * gap1;
    let corr =
        mu * gap3 - da / (z * z * z) - a * sp.rho3 / (2.0 * z * z) + a / z * kurtosis_term(sp) + 1.0 / (sp.eta_hat * z);
    Ok(mu * norm_sf(rn * sp.omega_hat) + norm_pdf(rn * sp.omega_hat) / rn * (lead + order.weight() * corr / nf))
}

/// Butler-Wood variant of [`tail_mean_temme`].
pub fn tail_mean_butler(sp: &Saddlepoint1, n: usize, mu: f64, order: Order) -> Result<f64> {
    require_regular(sp)?;
    let nf = check_n(n)?;
    let rn = nf.sqrt();
    let (gap1, _) = reciprocal_gaps(sp);
    let (z, w, da) = (sp.z_hat, sp.omega_hat, sp.a - mu);
    let lead = da / z + mu * gap1;
    let corr = -da / (w * w * w) + 1.0 / (sp.eta_hat * z);
    Ok(mu * norm_sf(rn * w) + norm_pdf(rn * w) / rn * (lead + order.weight() * corr / nf))
}

/// Derivative tensors of K_Y at a point of a two-dimensional model, with the
/// multivariate skewness and kurtosis scalars built from them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulantTensors2 {
    pub k2: [[f64; 2]; 2],
    /// Inverse of `k2`.
    pub k2_inv: [[f64; 2]; 2],
    pub det: f64,
    pub k3: [[[f64; 2]; 2]; 2],
    pub k4: [[[[f64; 2]; 2]; 2]; 2],
    pub varrho4: f64,
    pub varrho13: f64,
    pub varrho23: f64,
}

fn multi_index(idx: &[usize]) -> [usize; 2] {
    let ones = idx.iter().filter(|&&i| i == 1).count();
    [idx.len() - ones, ones]
}

impl CumulantTensors2 {
    pub fn at<M: VectorCgf2>(model: &M, eta: [f64; 2]) -> Result<Self> {
        let d = |idx: &[usize]| model.ky_partial(eta, multi_index(idx));
        let mut k2 = [[0.0; 2]; 2];
        let mut k3 = [[[0.0; 2]; 2]; 2];
        let mut k4 = [[[[0.0; 2]; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                k2[i][j] = d(&[i, j])?;
                for p in 0..2 {
                    k3[i][j][p] = d(&[i, j, p])?;
                    for l in 0..2 {
                        k4[i][j][p][l] = d(&[i, j, p, l])?;
                    }
                }
            }
        }
        let det = k2[0][0] * k2[1][1] - k2[0][1] * k2[1][0];
        if !(k2[0][0] > 0.0 && det > 0.0 && det.is_finite()) {
            return Err(Error::SingularHessian);
        }
        let inv = [[k2[1][1] / det, -k2[0][1] / det], [-k2[1][0] / det, k2[0][0] / det]];
        let mut varrho4 = 0.0;
        let mut varrho13 = 0.0;
        let mut varrho23 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for p in 0..2 {
                    for l in 0..2 {
                        varrho4 += k4[i][j][p][l] * inv[i][j] * inv[p][l];
                        for m in 0..2 {
                            for o in 0..2 {
                                let kk = k3[i][j][p] * k3[l][m][o];
                                varrho13 += kk * inv[i][j] * inv[p][l] * inv[m][o];
                                varrho23 += kk * inv[i][l] * inv[j][m] * inv[p][o];
                            }
                        }
                    }
                }
            }
        }
        Ok(Self { k2, k2_inv: inv, det, k3, k4, varrho4, varrho13, varrho23 })
    }

    /// ϱ̂₄/8 − ϱ̂₁₃/8 − ϱ̂₂₃/12.
    pub fn density_correction(&self) -> f64 {
        self.varrho4 / 8.0 - self.varrho13 / 8.0 - self.varrho23 / 12.0
    }
}

/// Saddlepoint density of the two-dimensional mean Ȳ at `sp.a`.
pub fn mv_pdf_spa_2d<M: VectorCgf2>(model: &M, sp: &Saddlepoint2, n: usize, order: Order) -> Result<f64> {
    let nf = check_n(n)?;
    let t = CumulantTensors2::at(model, sp.eta_hat)?;
    let lead = nf / (2.0 * PI) * (nf * sp.psi_hat).exp() / t.det.sqrt();
    Ok(lead * (1.0 + order.weight() * t.density_correction() / nf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cgf::{BivariateNormal, GammaFactorModel, ScalarCgf, TrivariateNormal};
    use crate::saddle::{solve_saddle_1d, solve_saddle_2d};
    use statrs::function::gamma::{gamma_ur, ln_gamma};

    fn std_normal() -> BivariateNormal {
        BivariateNormal::new(0.0, 0.0, 1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn gaussian_is_reproduced_exactly() {
        let m = std_normal();
        let sp = solve_saddle_1d(&m, 1.0).unwrap();
        assert!((lugannani_rice(&sp, 1, Order::Corrected).unwrap() - norm_sf(1.0)).abs() <= 1e-15);
        assert!((tail_mean_temme(&sp, 1, 0.0, Order::Corrected).unwrap() - norm_pdf(1.0)).abs() <= 1e-15);
        assert!((tail_mean_butler(&sp, 1, 0.0, Order::Corrected).unwrap() - norm_pdf(1.0)).abs() <= 1e-15);
        let sp0 = solve_saddle_1d(&m, 0.0).unwrap();
        assert!((daniels_pdf(&sp0, 1, Order::Leading).unwrap() - norm_pdf(0.0)).abs() <= 1e-16);
        assert!(matches!(lugannani_rice(&sp0, 1, Order::Corrected), Err(Error::Branch)));
        assert_eq!(tail_prob_spa(&sp0, 1, Order::Corrected).unwrap(), 0.5);
    }

    #[test]
    fn gamma_density_and_tail_against_exact_law() {
        // Ȳ for Y ~ Gamma(2, 1) and n = 5 is Gamma(10, 1/5).
        let m = GammaFactorModel::new(vec![2.0], vec![1.0], vec![1.0]).unwrap();
        let n = 5;
        for a in [1.2, 2.6, 3.1] {
            let sp = solve_saddle_1d(&m, a).unwrap();
            let shape = 10.0;
            let ln_f = shape * 5f64.ln() + (shape - 1.0) * a.ln() - 5.0 * a - ln_gamma(shape);
            let f = daniels_pdf(&sp, n, Order::Corrected).unwrap();
            assert!((f / ln_f.exp() - 1.0).abs() < 1e-4, "a={a}: {f} vs {}", ln_f.exp());
            let tail = gamma_ur(shape, 5.0 * a);
            let lr = lugannani_rice(&sp, n, Order::Corrected).unwrap();
            assert!((lr - tail).abs() < 2e-4 * tail.max(0.01), "a={a}: {lr} vs {tail}");
        }
    }

    #[test]
    fn temme_tail_mean_for_gamma() {
        // E[Y 1{Y ≥ a}] for Y ~ Gamma(s, 1) equals s·Q(s+1, a).
        let s = 3.0;
        let m = GammaFactorModel::new(vec![s], vec![1.0], vec![1.0]).unwrap();
        for a in [4.5, 6.0, 9.0] {
            let sp = solve_saddle_1d(&m, a).unwrap();
            let exact = s * gamma_ur(s + 1.0, a);
            let t = tail_mean_temme(&sp, 1, s, Order::Corrected).unwrap();
            let b = tail_mean_butler(&sp, 1, s, Order::Corrected).unwrap();
            assert!((t / exact - 1.0).abs() < 5e-3, "a={a}: {t} vs {exact}");
            assert!((b / exact - 1.0).abs() < 2e-2, "a={a}: {b} vs {exact}");
        }
        assert!((m.ky_deriv(0.0, 1).unwrap() - s).abs() < 1e-15);
    }

    #[test]
    fn small_saddlepoint_brackets_stay_finite() {
        let m = GammaFactorModel::new(vec![3.0], vec![1.0], vec![1.0]).unwrap();
        // a decreases toward the mean, so the tail grows; the 1/n bracket is a
        // difference of O(ẑ⁻²) terms and stays reliable down to ẑ ≈ 1e-6
        let mut prev = 0.0;
        for k in 1..=6 {
            let a = 3.0 + 10f64.powi(-k);
            let sp = solve_saddle_1d(&m, a).unwrap();
            let p = lugannani_rice(&sp, 1, Order::Corrected).unwrap();
            assert!(p > prev, "not monotone at a={a}");
            prev = p;
            let exact = gamma_ur(3.0, a);
            assert!((p - exact).abs() < 2e-3, "a={a}: {p} vs {exact}");
        }
    }

    #[test]
    fn bivariate_normal_density() {
        let m = TrivariateNormal::new([0.0, 0.0, 0.0], [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let sp = solve_saddle_2d(&m, [0.0, 0.0]).unwrap();
        let f = mv_pdf_spa_2d(&m, &sp, 1, Order::Corrected).unwrap();
        assert!((f - 1.0 / (2.0 * PI)).abs() < 1e-16);
        let rho: f64 = 0.5;
        let m = TrivariateNormal::new([0.0, 0.0, 0.0], [[1.0, 0.0, 0.0], [0.0, 1.0, rho], [0.0, rho, 1.0]]).unwrap();
        let sp = solve_saddle_2d(&m, [1.0, -1.0]).unwrap();
        let q = (1.0 + 1.0 + 2.0 * rho) / (1.0 - rho * rho);
        let exact = (-0.5 * q).exp() / (2.0 * PI * (1.0 - rho * rho).sqrt());
        assert!((mv_pdf_spa_2d(&m, &sp, 1, Order::Corrected).unwrap() / exact - 1.0).abs() < 1e-13);
    }

    #[test]
    fn order_parsing() {
        assert_eq!(Order::from_int(0).unwrap(), Order::Leading);
        assert!(Order::from_int(2).is_err());
        assert!(daniels_pdf(&solve_saddle_1d(&std_normal(), 0.3).unwrap(), 0, Order::Leading).is_err());
    }
}
