use super::{check_order, Interval, ScalarCgf};
use crate::error::{invalid, Result};

/// Terminal variance gamma variable with CGF −(T/v)·ln(1 − θvγ − κvγ²/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VgMarginal {
    pub theta: f64,
    pub kappa: f64,
    pub v: f64,
    pub t: f64,
    roots: [f64; 2],
}

impl VgMarginal {
    pub fn new(theta: f64, kappa: f64, v: f64, t: f64) -> Result<Self> {
        if !theta.is_finite() || !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(invalid("theta must be finite and kappa nonnegative"));
        }
        if !(v > 0.0 && v.is_finite()) || !(t > 0.0 && t.is_finite()) {
            return Err(invalid("v and T must be positive"));
        }
        if kappa == 0.0 && theta == 0.0 {
            return Err(invalid("theta and kappa cannot both vanish"));
        }
        // Roots of the quadratic q(γ) = 1 − θvγ − κvγ²/2, one on each side of 0
        // (an infinite root stands for an absent one when κ = 0).
        let (a, b) = (0.5 * kappa * v, theta * v);
        let roots = if a == 0.0 {
            let r = 1.0 / b;
            if r > 0.0 {
                [f64::NEG_INFINITY, r]
            } else {
                [r, f64::INFINITY]
            }
        } else {
            let disc = (b * b + 4.0 * a).sqrt();
            let q = -0.5 * (b + b.signum() * disc);
            let (r1, r2) = if b == 0.0 { (-(1.0 / a).sqrt(), (1.0 / a).sqrt()) } else { (q / a, -1.0 / q) };
            if r1 < r2 {
                [r1, r2]
            } else {
                [r2, r1]
            }
        };
        Ok(Self { theta, kappa, v, t, roots })
    }

    /// Open interval where the MGF exists.
    pub fn domain(&self) -> Interval {
        Interval::new(self.roots[0], self.roots[1])
    }

    /// K^{(r)}(γ) for r = 0..=5.
    pub fn deriv(&self, gamma: f64, r: usize) -> Result<f64> {
        check_order(r, 5)?;
        self.domain().check(gamma)?;
        let scale = -self.t / self.v;
        if r == 0 {
            let q = 1.0 - self.theta * self.v * gamma - 0.5 * self.kappa * self.v * gamma * gamma;
            return Ok(scale * q.ln());
        }
        // d^r ln q = Σ_roots (−1)^{r−1}(r−1)!/(γ − root)^r
        let fact: f64 = (1..r).map(|k| k as f64).product();
        let sign = if r % 2 == 1 { 1.0 } else { -1.0 };
        let s: f64 =
            self.roots.iter().filter(|x| x.is_finite()).map(|&root| sign * fact / (gamma - root).powi(r as i32)).sum();
        Ok(scale * s)
    }

    pub fn mean(&self) -> f64 {
        self.t * self.theta
    }
}

/// Parameters of the two-asset exponential VG exchange option.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VgExchangeSpec {
    pub s1: f64,
    pub s2: f64,
    pub r: f64,
    pub r1: f64,
    pub r2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub v1: f64,
    pub v2: f64,
    pub t: f64,
}

impl VgExchangeSpec {
    /// Threshold k = ln(S₂/S₁) + (r₂ − r₁)T for σ₁X₁ − σ₂X₂.
    pub fn threshold(&self) -> f64 {
        (self.s2 / self.s1).ln() + (self.r2 - self.r1) * self.t
    }

    /// The symmetric (θ = 0) two-asset instance used in the examples.
    pub fn reference(sigma1: f64) -> Self {
        Self {
            s1: 90.0,
            s2: 100.0,
            r: 0.02,
            r1: 0.2,
            r2: 0.4,
            sigma1,
            sigma2: 1.0,
            theta1: 0.0,
            theta2: 0.0,
            kappa1: 0.1,
            kappa2: 0.32,
            v1: 0.2,
            v2: 0.25,
            t: 1.0,
        }
    }

    pub fn with_sigma1(&self, sigma1: f64) -> Self {
        Self { sigma1, ..*self }
    }

    pub fn marginals(&self) -> Result<(VgMarginal, VgMarginal)> {
        Ok((
            VgMarginal::new(self.theta1, self.kappa1, self.v1, self.t)?,
            VgMarginal::new(self.theta2, self.kappa2, self.v2, self.t)?,
        ))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s1 > 0.0 && self.s2 > 0.0) {
            return Err(invalid("spot prices must be positive"));
        }
        if !(self.sigma1 > 0.0 && self.sigma2 > 0.0) {
            return Err(invalid("sigma1 and sigma2 must be positive"));
        }
        if !(self.r.is_finite() && self.r1.is_finite() && self.r2.is_finite()) {
            return Err(invalid("rates must be finite"));
        }
        Ok(())
    }
}

/// (X, Y) = (X₁(T), σ₁X₁(T) − σ₂X₂(T)) under the measure tilted by e^{σ₁X₁(T)}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VgExchangeModel {
    pub m1: VgMarginal,
    pub m2: VgMarginal,
    pub sigma1: f64,
    pub sigma2: f64,
    k1_at_sigma1: f64,
    domain: Interval,
}

impl VgExchangeModel {
    pub fn new(spec: &VgExchangeSpec) -> Result<Self> {
        spec.validate()?;
        let (m1, m2) = spec.marginals()?;
        let (s1, s2) = (spec.sigma1, spec.sigma2);
        if !m1.domain().contains(s1) {
            return Err(invalid(format!("sigma1 = {s1} outside the MGF existence region of X1")));
        }
        let d1 = m1.domain();
        let d2 = m2.domain();
        // (1+η)σ₁ ∈ d1 and −ησ₂ ∈ d2
        let dom = Interval::new(d1.lo / s1 - 1.0, d1.hi / s1 - 1.0).intersect(&Interval::new(-d2.hi / s2, -d2.lo / s2));
        Ok(Self { m1, m2, sigma1: s1, sigma2: s2, k1_at_sigma1: m1.deriv(s1, 0)?, domain: dom })
    }

    /// K₁(σ₁), the log normalizer of the tilt.
    pub fn k1_at_sigma1(&self) -> f64 {
        self.k1_at_sigma1
    }
}

impl ScalarCgf for VgExchangeModel {
    fn domain(&self) -> Interval {
        self.domain
    }
    fn mean_x(&self) -> f64 {
        self.m1.deriv(self.sigma1, 1).unwrap_or(f64::NAN)
    }
    fn ky_deriv(&self, eta: f64, r: usize) -> Result<f64> {
        check_order(r, 4)?;
        self.domain.check(eta)?;
        let a = (1.0 + eta) * self.sigma1;
        let b = -eta * self.sigma2;
        if r == 0 {
            return Ok(self.m1.deriv(a, 0)? + self.m2.deriv(b, 0)? - self.k1_at_sigma1);
        }
        Ok(self.sigma1.powi(r as i32) * self.m1.deriv(a, r)? + (-self.sigma2).powi(r as i32) * self.m2.deriv(b, r)?)
    }
    fn kgamma_deriv(&self, eta: f64, r: usize) -> Result<f64> {
        check_order(r, 2)?;
        self.domain.check(eta)?;
        let a = (1.0 + eta) * self.sigma1;
        Ok(self.sigma1.powi(r as i32) * self.m1.deriv(a, r + 1)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tilted_kernel_at_origin() {
        let m = VgExchangeModel::new(&VgExchangeSpec::reference(0.5)).unwrap();
        assert_eq!(m.ky(0.0).unwrap(), 0.0);
        let want = 0.1 * 0.5 / (1.0 - 0.1 * 0.2 * 0.25 / 2.0);
        assert!((m.kgamma(0.0).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.050_125_4).abs() < 1e-7);
        assert!((m.kgamma(0.0).unwrap() - m.mean_x()).abs() < 1e-15);
    }

    #[test]
    fn marginal_roots_bound_the_domain() {
        let m = VgMarginal::new(0.1, 0.2, 0.3, 1.0).unwrap();
        let d = m.domain();
        for x in [d.lo, d.hi] {
            let q = 1.0 - 0.1 * 0.3 * x - 0.5 * 0.2 * 0.3 * x * x;
            assert!(q.abs() < 1e-12);
        }
        let lin = VgMarginal::new(0.5, 0.0, 0.2, 1.0).unwrap();
        assert_eq!(lin.domain().hi, 10.0);
        assert!(lin.domain().lo.is_infinite());
    }

    #[test]
    fn sigma1_outside_existence_region_is_rejected() {
        // κ₁v₁σ₁²/2 ≥ 1 ⇔ σ₁ ≥ 10 for Table 1
        assert!(VgExchangeModel::new(&VgExchangeSpec::reference(10.5)).is_err());
        assert!(VgExchangeModel::new(&VgExchangeSpec::reference(9.0)).is_ok());
    }
}
