//! Cumulant generating functions of (X, Y) pairs and (X, Y₁, Y₂) triples.
//!
//! A scalar model exposes the marginal CGF K_Y of Y and the kernel
//! K_γ(η) = ∂K_{X,Y}(γ, η)/∂γ at γ = 0, which drives every conditional
//! expectation expansion in [`crate::condexp`].

mod delta_gamma;
mod gamma;
mod gbm;
mod normal;
mod pgh;
mod vg;

pub use delta_gamma::{DeltaGammaCgf, DeltaGammaPortfolio};
pub use gamma::{GammaFactorModel, GammaFactorModel2};
pub use gbm::{GbmQModel, GbmTwoAssetSpec};
pub use normal::{BivariateNormal, TrivariateNormal};
pub use pgh::{PghComponent, PghParams, PghPortfolioJoint};
pub use vg::{VgExchangeModel, VgExchangeSpec, VgMarginal};

use crate::error::{Error, Result};

/// Relative margin keeping evaluations strictly inside an open domain.
pub const DOMAIN_MARGIN: f64 = 1e-12;

/// Open interval (lo, hi); either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const REAL_LINE: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo.max(other.lo), hi: self.hi.min(other.hi) }
    }

    pub fn is_empty(&self) -> bool {
        !(self.lo < self.hi)
    }

    fn margin(end: f64) -> f64 {
        if end.is_finite() {
            DOMAIN_MARGIN * end.abs().max(1.0)
        } else {
            0.0
        }
    }

    /// Strict interior test with the crate-wide margin.
    pub fn contains(&self, x: f64) -> bool {
        x.is_finite() && x > self.lo + Self::margin(self.lo) && x < self.hi - Self::margin(self.hi)
    }

    pub fn check(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain { x, lo: self.lo, hi: self.hi })
        }
    }

    /// Distance from `x` to the nearest endpoint.
    pub fn distance_to_boundary(&self, x: f64) -> f64 {
        (x - self.lo).min(self.hi - x)
    }
}

/// Joint CGF of a pair (X, Y) seen through K_Y and K_γ.
pub trait ScalarCgf: Send + Sync {
    /// Open interval on which K_Y is finite; contains 0.
    fn domain(&self) -> Interval;
    /// E[X] = K_γ(0).
    fn mean_x(&self) -> f64;
    /// K_Y^{(r)}(η) for r = 0..=4 (r = 0 is K_Y itself).
    fn ky_deriv(&self, eta: f64, r: usize) -> Result<f64>;
    /// K_γ^{(r)}(η) for r = 0..=2.
    fn kgamma_deriv(&self, eta: f64, r: usize) -> Result<f64>;

    fn ky(&self, eta: f64) -> Result<f64> {
        self.ky_deriv(eta, 0)
    }
    fn kgamma(&self, eta: f64) -> Result<f64> {
        self.kgamma_deriv(eta, 0)
    }
}

impl<T: ScalarCgf + ?Sized> ScalarCgf for &T {
    fn domain(&self) -> Interval {
        (**self).domain()
    }
    fn mean_x(&self) -> f64 {
        (**self).mean_x()
    }
    fn ky_deriv(&self, eta: f64, r: usize) -> Result<f64> {
        (**self).ky_deriv(eta, r)
    }
    fn kgamma_deriv(&self, eta: f64, r: usize) -> Result<f64> {
        (**self).kgamma_deriv(eta, r)
    }
}

/// The pair (X, −Y): K_{−Y}(η) = K_Y(−η), K_γ ↦ K_γ(−η).
#[derive(Debug, Clone, Copy)]
pub struct Reflected<M>(pub M);

impl<M: ScalarCgf> ScalarCgf for Reflected<M> {
    fn domain(&self) -> Interval {
        let d = self.0.domain();
        Interval::new(-d.hi, -d.lo)
    }
    fn mean_x(&self) -> f64 {
        self.0.mean_x()
    }
    fn ky_deriv(&self, eta: f64, r: usize) -> Result<f64> {
        let v = self.0.ky_deriv(-eta, r)?;
        Ok(if r % 2 == 1 { -v } else { v })
    }
    fn kgamma_deriv(&self, eta: f64, r: usize) -> Result<f64> {
        let v = self.0.kgamma_deriv(-eta, r)?;
        Ok(if r % 2 == 1 { -v } else { v })
    }
}

/// The pair (Y, Y): K_γ = K′_Y.
#[derive(Debug, Clone, Copy)]
pub struct SelfPaired<M>(pub M);

impl<M: ScalarCgf> ScalarCgf for SelfPaired<M> {
    fn domain(&self) -> Interval {
        self.0.domain()
    }
    fn mean_x(&self) -> f64 {
        self.0.ky_deriv(0.0, 1).unwrap_or(f64::NAN)
    }
    fn ky_deriv(&self, eta: f64, r: usize) -> Result<f64> {
        self.0.ky_deriv(eta, r)
    }
    fn kgamma_deriv(&self, eta: f64, r: usize) -> Result<f64> {
        check_order(r, 2)?;
        self.0.ky_deriv(eta, r + 1)
    }
}

/// Joint CGF of (X, Y₁, Y₂) seen through K_Y(η₁, η₂) and K_γ(η₁, η₂).
pub trait VectorCgf2: Send + Sync {
    /// Membership in the open convex domain of K_Y.
    fn contains(&self, eta: [f64; 2]) -> bool;
    /// Coordinate-wise bounding box of the domain.
    fn bounding_box(&self) -> [Interval; 2];
    /// Slice {η₂ : (η₁, η₂) in domain}.
    fn eta2_slice(&self, eta1: f64) -> Interval;
    fn mean_x(&self) -> f64;
    /// ∂^{p₁}_{η₁} ∂^{p₂}_{η₂} K_Y for p₁ + p₂ ≤ 4.
    fn ky_partial(&self, eta: [f64; 2], p: [usize; 2]) -> Result<f64>;
    /// ∂^{p₁}_{η₁} ∂^{p₂}_{η₂} K_γ for p₁ + p₂ ≤ 2.
    fn kgamma_partial(&self, eta: [f64; 2], p: [usize; 2]) -> Result<f64>;

    fn ky(&self, eta: [f64; 2]) -> Result<f64> {
        self.ky_partial(eta, [0, 0])
    }
    fn kgamma(&self, eta: [f64; 2]) -> Result<f64> {
        self.kgamma_partial(eta, [0, 0])
    }
    fn check(&self, eta: [f64; 2]) -> Result<()> {
        if self.contains(eta) {
            Ok(())
        } else {
            let b = self.bounding_box();
            Err(Error::Domain { x: eta[0], lo: b[0].lo, hi: b[0].hi })
        }
    }
    fn ky_grad(&self, eta: [f64; 2]) -> Result<[f64; 2]> {
        Ok([self.ky_partial(eta, [1, 0])?, self.ky_partial(eta, [0, 1])?])
    }
    fn ky_hessian(&self, eta: [f64; 2]) -> Result<[[f64; 2]; 2]> {
        let a = self.ky_partial(eta, [2, 0])?;
        let b = self.ky_partial(eta, [1, 1])?;
        let c = self.ky_partial(eta, [0, 2])?;
        Ok([[a, b], [b, c]])
    }
}

impl<T: VectorCgf2 + ?Sized> VectorCgf2 for &T {
    fn contains(&self, eta: [f64; 2]) -> bool {
        (**self).contains(eta)
    }
    fn bounding_box(&self) -> [Interval; 2] {
        (**self).bounding_box()
    }
    fn eta2_slice(&self, eta1: f64) -> Interval {
        (**self).eta2_slice(eta1)
    }
    fn mean_x(&self) -> f64 {
        (**self).mean_x()
    }
    fn ky_partial(&self, eta: [f64; 2], p: [usize; 2]) -> Result<f64> {
        (**self).ky_partial(eta, p)
    }
    fn kgamma_partial(&self, eta: [f64; 2], p: [usize; 2]) -> Result<f64> {
        (**self).kgamma_partial(eta, p)
    }
}

pub(crate) fn check_order(r: usize, max: usize) -> Result<()> {
    if r > max {
        Err(Error::InvalidParameter(format!("derivative order {r} exceeds {max}")))
    } else {
        Ok(())
    }
}

pub(crate) fn check_multi(p: [usize; 2], max: usize) -> Result<()> {
    check_order(p[0] + p[1], max)
}

/// Derivative of order `order` (1..=3) of `g` at `x` by central differences
/// with a Richardson tableau over successively halved steps.
pub(crate) fn richardson_derivative<G: Fn(f64) -> Result<f64>>(
    g: &G,
    x: f64,
    order: usize,
    h0: f64,
    levels: usize,
) -> Result<f64> {
    let stencil = |h: f64| -> Result<f64> {
        Ok(match order {
            1 => (g(x + h)? - g(x - h)?) / (2.0 * h),
            2 => (g(x + h)? - 2.0 * g(x)? + g(x - h)?) / (h * h),
            3 => (g(x + 2.0 * h)? - 2.0 * g(x + h)? + 2.0 * g(x - h)? - g(x - 2.0 * h)?) / (2.0 * h * h * h),
            _ => return Err(Error::InvalidParameter(format!("stencil order {order}"))),
        })
    };
    let mut row = Vec::with_capacity(levels + 1);
    let mut h = h0;
    for k in 0..=levels {
        let mut cur = vec![stencil(h)?];
        let mut factor = 4.0;
        for j in 0..k {
            let prev: &Vec<f64> = &row[k - 1];
            let v = (factor * cur[j] - prev[j]) / (factor - 1.0);
            cur.push(v);
            factor *= 4.0;
        }
        row.push(cur);
        h *= 0.5;
    }
    Ok(*row[levels].last().expect("nonempty tableau"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_margin_excludes_endpoints() {
        let d = Interval::new(-1.0, 2.0);
        assert!(d.contains(0.0));
        assert!(!d.contains(2.0));
        assert!(!d.contains(-1.0));
        assert!(!d.contains(2.0 - 1e-14));
        assert!(d.contains(2.0 - 1e-9));
        assert!(Interval::REAL_LINE.contains(1e300));
        assert!(!Interval::REAL_LINE.contains(f64::NAN));
    }

    #[test]
    fn richardson_recovers_polynomial_and_exponential_derivatives() {
        let g = |x: f64| Ok(x.exp());
        // third differences lose ~eps/h³ to rounding at the finest step
        for (order, tol) in [(1, 1e-12), (2, 1e-11), (3, 1e-9)] {
            let d = richardson_derivative(&g, 0.3, order, 0.1, 4).unwrap();
            assert!((d / 0.3f64.exp() - 1.0).abs() < tol, "order {order}: {d}");
        }
    }
}
