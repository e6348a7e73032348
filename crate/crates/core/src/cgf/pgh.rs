use super::{check_order, richardson_derivative, Interval, ScalarCgf};
use crate::error::{invalid, Result};
use crate::special::bessel_k_scaled;

/// Parameters (λ, α, β, δ, μ) of a proper generalized hyperbolic law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PghParams {
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub mu: f64,
}

impl PghParams {
    pub fn new(lambda: f64, alpha: f64, beta: f64, delta: f64, mu: f64) -> Result<Self> {
        if !lambda.is_finite() || !mu.is_finite() {
            return Err(invalid("lambda and mu must be finite"));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid("alpha must be positive"));
        }
        if !(beta.abs() < alpha) {
            return Err(invalid("|beta| must be below alpha"));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(invalid("delta must be positive"));
        }
        Ok(Self { lambda, alpha, beta, delta, mu })
    }

    /// Normal inverse Gaussian special case λ = −1/2.
    pub fn nig(alpha: f64, beta: f64, delta: f64, mu: f64) -> Result<Self> {
        Self::new(-0.5, alpha, beta, delta, mu)
    }

    pub fn is_nig(&self) -> bool {
        self.lambda == -0.5
    }

    /// √(α² − β²).
    pub fn gamma(&self) -> f64 {
        ((self.alpha - self.beta) * (self.alpha + self.beta)).sqrt()
    }

    /// E[L]; for NIG this is μ + δβ/√(α² − β²).
    pub fn mean(&self) -> f64 {
        let g = self.gamma();
        if self.is_nig() {
            return self.mu + self.delta * self.beta / g;
        }
        let z = self.delta * g;
        let ratio = bessel_k_scaled(self.lambda + 1.0, z).unwrap_or(f64::NAN)
            / bessel_k_scaled(self.lambda, z).unwrap_or(f64::NAN);
        self.mu + self.delta * self.beta / g * ratio
    }
}

/// The scaled component uL with L ~ pGH(λ, α, β, δ, μ) and u > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PghComponent {
    pub params: PghParams,
    pub u: f64,
}

impl PghComponent {
    pub fn new(params: PghParams, u: f64) -> Result<Self> {
        if !(u > 0.0 && u.is_finite()) {
            return Err(invalid("weight u must be positive"));
        }
        Ok(Self { params, u })
    }

    pub fn domain(&self) -> Interval {
        let p = &self.params;
        Interval::new((-p.alpha - p.beta) / self.u, (p.alpha - p.beta) / self.u)
    }

    fn q(&self, eta: f64) -> f64 {
        let p = &self.params;
        let s = p.beta + self.u * eta;
        ((p.alpha - s) * (p.alpha + s) / (p.gamma() * p.gamma())).sqrt()
    }

    fn value(&self, eta: f64) -> Result<f64> {
        let p = &self.params;
        let (u, g) = (self.u, p.gamma());
        if p.is_nig() {
            let s = p.beta + u * eta;
            return Ok(u * p.mu * eta + p.delta * (g - ((p.alpha - s) * (p.alpha + s)).sqrt()));
        }
        let vs = p.delta * g;
        let q = self.q(eta);
        let log_b = |x: f64| -> Result<f64> { Ok(bessel_k_scaled(p.lambda, x)?.ln() - x) };
        Ok(u * p.mu * eta + log_b(vs * q)? - log_b(vs)? - p.lambda * q.ln())
    }

    fn first(&self, eta: f64) -> Result<f64> {
        let p = &self.params;
        let (u, g) = (self.u, p.gamma());
        let s = p.beta + u * eta;
        if p.is_nig() {
            return Ok(u * p.mu + u * p.delta * s / ((p.alpha - s) * (p.alpha + s)).sqrt());
        }
        let vs = p.delta * g;
        let q = self.q(eta);
        let x = vs * q;
        let ratio =
            (bessel_k_scaled(p.lambda - 1.0, x)? + bessel_k_scaled(p.lambda + 1.0, x)?) / bessel_k_scaled(p.lambda, x)?;
        Ok(u * p.mu + u * s / (q * g * g) * (0.5 * vs * ratio + p.lambda / q))
    }

    /// Derivative of order r = 0..=4 of the CGF of uL.
    pub fn deriv(&self, eta: f64, r: usize) -> Result<f64> {
        check_order(r, 4)?;
        let dom = self.domain();
        dom.check(eta)?;
        match r {
            0 => return self.value(eta),
            1 => return self.first(eta),
            _ => {}
        }
        let p = &self.params;
        if p.is_nig() {
            let u = self.u;
            let s = p.beta + u * eta;
            let a2 = p.alpha * p.alpha;
            let g2 = (p.alpha - s) * (p.alpha + s);
            let g = g2.sqrt();
            let c = p.delta * a2;
            return Ok(match r {
                2 => u.powi(2) * c / (g2 * g),
                3 => 3.0 * u.powi(3) * c * s / (g2 * g2 * g),
                _ => 3.0 * u.powi(4) * c * (a2 + 4.0 * s * s) / (g2 * g2 * g2 * g),
            });
        }
        // Steps stay well inside the analyticity radius set by the nearest endpoint.
        let h0 = 0.08 * dom.distance_to_boundary(eta).min(1.0 / self.u * self.params.alpha);
        let f = |x: f64| self.first(x);
        richardson_derivative(&f, eta, r - 1, h0, 4)
    }
}

impl ScalarCgf for PghComponent {
    fn domain(&self) -> Interval {
        PghComponent::domain(self)
    }
    fn mean_x(&self) -> f64 {
        self.u * self.params.mean()
    }
    fn ky_deriv(&self, eta: f64, r: usize) -> Result<f64> {
        check_order(r, 4)?;
        self.deriv(eta, r)
    }
    fn kgamma_deriv(&self, eta: f64, r: usize) -> Result<f64> {
        check_order(r, 2)?;
        self.deriv(eta, r + 1)
    }
}

/// Joint model of (Lᵢ, L) for the portfolio L = Σⱼ uⱼLⱼ of independent pGH components.
#[derive(Debug, Clone, PartialEq)]
pub struct PghPortfolioJoint {
    pub components: Vec<PghComponent>,
    pub index: usize,
    domain: Interval,
}

impl PghPortfolioJoint {
    pub fn new(components: Vec<PghComponent>, index: usize) -> Result<Self> {
        if components.is_empty() {
            return Err(invalid("portfolio needs at least one component"));
        }
        if index >= components.len() {
            return Err(invalid(format!("component index {index} out of range")));
        }
        let domain = components.iter().fold(Interval::REAL_LINE, |acc, c| acc.intersect(&c.domain()));
        if domain.is_empty() || !domain.contains(0.0) {
            return Err(invalid("portfolio CGF domain is empty"));
        }
        Ok(Self { components, index, domain })
    }
}

impl ScalarCgf for PghPortfolioJoint {
    fn domain(&self) -> Interval {
        self.domain
    }
    fn mean_x(&self) -> f64 {
        self.components[self.index].params.mean()
    }
    fn ky_deriv(&self, eta: f64, r: usize) -> Result<f64> {
        check_order(r, 4)?;
        self.domain.check(eta)?;
        self.components.iter().map(|c| c.deriv(eta, r)).sum()
    }
    fn kgamma_deriv(&self, eta: f64, r: usize) -> Result<f64> {
        check_order(r, 2)?;
        self.domain.check(eta)?;
        let c = &self.components[self.index];
        Ok(c.deriv(eta, r + 1)? / c.u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn paper_portfolio() -> Vec<PghComponent> {
        vec![
            PghComponent::new(PghParams::nig(2.0, 0.1, 1.8, 0.2).unwrap(), 0.2).unwrap(),
            PghComponent::new(PghParams::nig(3.0, 0.3, 0.5, 0.3).unwrap(), 0.4).unwrap(),
            PghComponent::new(PghParams::nig(2.5, -0.2, 1.0, 0.5).unwrap(), 0.4).unwrap(),
        ]
    }

    #[test]
    fn nig_mean_and_origin() {
        let c = PghComponent::new(PghParams::nig(2.0, 0.1, 1.8, 0.2).unwrap(), 1.0).unwrap();
        assert_eq!(c.ky(0.0).unwrap(), 0.0);
        let want = 0.2 + 1.8 * 0.1 / (4.0f64 - 0.01).sqrt();
        assert!((c.ky_deriv(0.0, 1).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.290_113).abs() < 1e-6);
    }

    #[test]
    fn general_formula_reproduces_nig_closed_form() {
        // λ = −1/2 + 1e-9 forces the Bessel-ratio path; the result must be continuous.
        let nig = PghComponent::new(PghParams::nig(2.5, -0.2, 1.0, 0.5).unwrap(), 0.4).unwrap();
        let near = PghComponent::new(PghParams::new(-0.5 + 1e-9, 2.5, -0.2, 1.0, 0.5).unwrap(), 0.4).unwrap();
        for &eta in &[-3.0, -0.5, 0.0, 1.0, 4.0] {
            for r in 0..=4 {
                let a = nig.deriv(eta, r).unwrap();
                let b = near.deriv(eta, r).unwrap();
                assert!((a - b).abs() <= 1e-7 * a.abs().max(1.0), "eta={eta} r={r}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn portfolio_domain_is_intersection_of_component_domains() {
        let comps = paper_portfolio();
        let joint = PghPortfolioJoint::new(comps.clone(), 2).unwrap();
        let lo = comps.iter().map(|c| (-c.params.alpha - c.params.beta) / c.u).fold(f64::NEG_INFINITY, f64::max);
        let hi = comps.iter().map(|c| (c.params.alpha - c.params.beta) / c.u).fold(f64::INFINITY, f64::min);
        assert_eq!(ScalarCgf::domain(&joint), Interval::new(lo, hi));
        // L₃ binds on the right: (2.5 + 0.2)/0.4
        assert!((hi - 6.75).abs() < 1e-15);
        assert!((joint.kgamma(0.0).unwrap() - joint.mean_x()).abs() < 1e-14);
    }

    #[test]
    fn domain_violations_are_errors() {
        let c = PghComponent::new(PghParams::nig(2.0, 0.1, 1.8, 0.2).unwrap(), 1.0).unwrap();
        assert!(matches!(c.ky(1.9), Err(Error::Domain { .. })));
        assert!(c.ky(1.89).is_ok());
        assert!(PghParams::nig(1.0, 1.0, 1.0, 0.0).is_err());
        assert!(PghParams::new(0.0, 1.0, 0.5, -1.0, 0.0).is_err());
    }
}
