//! VaR by saddlepoint inversion, Euler contributions to VaR and CVaR, and
//! VaR/CVaR sensitivities of delta-gamma portfolios.

use nalgebra::DMatrix;

use crate::cgf::{
    BivariateNormal, DeltaGammaPortfolio, Interval, PghComponent, PghParams, PghPortfolioJoint, ScalarCgf, SelfPaired,
};
use crate::classical::{check_n, daniels_pdf, kurtosis_term, tail_prob_spa, Order};
use crate::condexp::{cond_exp_eq_1d, cond_exp_geq_1d, EqMode, TailMode};
use crate::error::{invalid, Error, Result};
use crate::saddle::{delta_gamma_saddle, safeguarded_newton, Saddlepoint1};
use crate::special::{norm_inv, norm_pdf};

/// Distribution family of the portfolio components.
#[derive(Debug, Clone, PartialEq)]
pub enum PortfolioKind {
    /// Independent pGH components Lᵢ.
    Pgh(Vec<PghParams>),
    /// (L₁, …, L_m) ~ N(mean, cov).
    Gaussian { mean: Vec<f64>, cov: Vec<Vec<f64>> },
}

/// Portfolio loss L = Σᵢ uᵢLᵢ.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioSpec {
    pub weights: Vec<f64>,
    pub kind: PortfolioKind,
}

/// Joint model of (Lᵢ, L) for either portfolio family.
#[derive(Debug, Clone, PartialEq)]
pub enum PortfolioJoint {
    Pgh(PghPortfolioJoint),
    Gaussian(BivariateNormal),
}

impl ScalarCgf for PortfolioJoint {
    fn domain(&self) -> Interval {
        match self {
            PortfolioJoint::Pgh(m) => m.domain(),
            PortfolioJoint::Gaussian(m) => m.domain(),
        }
    }
    fn mean_x(&self) -> f64 {
        match self {
            PortfolioJoint::Pgh(m) => m.mean_x(),
            PortfolioJoint::Gaussian(m) => m.mean_x(),
        }
    }
    fn ky_deriv(&self, eta: f64, r: usize) -> Result<f64> {
        match self {
            PortfolioJoint::Pgh(m) => m.ky_deriv(eta, r),
            PortfolioJoint::Gaussian(m) => m.ky_deriv(eta, r),
        }
    }
    fn kgamma_deriv(&self, eta: f64, r: usize) -> Result<f64> {
        match self {
            PortfolioJoint::Pgh(m) => m.kgamma_deriv(eta, r),
            PortfolioJoint::Gaussian(m) => m.kgamma_deriv(eta, r),
        }
    }
}

impl PortfolioSpec {
    pub fn new(weights: Vec<f64>, kind: PortfolioKind) -> Result<Self> {
        let spec = Self { weights, kind };
        spec.validate()?;
        Ok(spec)
    }

    /// The three-component NIG portfolio used in the examples.
    pub fn nig_example() -> Self {
        let comps = vec![
            PghParams::nig(2.0, 0.1, 1.8, 0.2).expect("valid NIG"),
            PghParams::nig(3.0, 0.3, 0.5, 0.3).expect("valid NIG"),
            PghParams::nig(2.5, -0.2, 1.0, 0.5).expect("valid NIG"),
        ];
        Self { weights: vec![0.2, 0.4, 0.4], kind: PortfolioKind::Pgh(comps) }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.weights.len();
        if m == 0 || self.weights.iter().any(|&u| !(u > 0.0 && u.is_finite())) {
            return Err(invalid("portfolio weights must be positive"));
        }
        match &self.kind {
            PortfolioKind::Pgh(c) if c.len() != m => Err(invalid("one pGH component per weight required")),
            PortfolioKind::Pgh(_) => Ok(()),
            PortfolioKind::Gaussian { mean, cov } => {
                if mean.len() != m || cov.len() != m || cov.iter().any(|r| r.len() != m) {
                    return Err(invalid("Gaussian mean/covariance must match the weights"));
                }
                let s = DMatrix::from_fn(m, m, |i, j| cov[i][j]);
                if (&s - s.transpose()).amax() > 1e-12 * (1.0 + s.amax()) || s.cholesky().is_none() {
                    return Err(invalid("covariance must be symmetric positive definite"));
                }
                Ok(())
            }
        }
    }

    fn gaussian_parts(&self) -> Result<(&[f64], &[Vec<f64>])> {
        match &self.kind {
            PortfolioKind::Gaussian { mean, cov } => Ok((mean, cov)),
            PortfolioKind::Pgh(_) => Err(Error::Unsupported("operation requires a Gaussian portfolio".into())),
        }
    }

    /// (uᵀμ, uᵀΣu, uᵀΣⁱ) of a Gaussian portfolio.
    fn gaussian_moments(&self, i: usize) -> Result<(f64, f64, f64)> {
        let (mean, cov) = self.gaussian_parts()?;
        let u = &self.weights;
        let m = u.len();
        let um: f64 = u.iter().zip(mean).map(|(a, b)| a * b).sum();
        let usu: f64 = (0..m).flat_map(|j| (0..m).map(move |k| (j, k))).map(|(j, k)| u[j] * cov[j][k] * u[k]).sum();
        let usi: f64 = (0..m).map(|k| u[k] * cov[k][i]).sum();
        Ok((um, usu, usi))
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.len() {
            Ok(())
        } else {
            Err(invalid(format!("component index {i} out of range 0..{}", self.len())))
        }
    }

    /// Joint model of (Lᵢ, L).
    pub fn joint(&self, i: usize) -> Result<PortfolioJoint> {
        self.validate()?;
        self.check_index(i)?;
        match &self.kind {
            PortfolioKind::Pgh(params) => {
                let comps = params
                    .iter()
                    .zip(&self.weights)
                    .map(|(p, &u)| PghComponent::new(*p, u))
                    .collect::<Result<Vec<_>>>()?;
                Ok(PortfolioJoint::Pgh(PghPortfolioJoint::new(comps, i)?))
            }
            PortfolioKind::Gaussian { mean, cov } => {
                let (um, usu, usi) = self.gaussian_moments(i)?;
                let (s1, s2) = (cov[i][i].sqrt(), usu.sqrt());
                let rho = if s1 > 0.0 { (usi / (s1 * s2)).clamp(-1.0, 1.0) } else { 0.0 };
                Ok(PortfolioJoint::Gaussian(BivariateNormal::new(mean[i], um, s1, s2, rho)?))
            }
        }
    }

    /// The pair (L, L), for VaR and the portfolio's own CVaR.
    pub fn loss(&self) -> Result<SelfPaired<PortfolioJoint>> {
        Ok(SelfPaired(self.joint(0)?))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("confidence level must lie in (0, 1), got {alpha}")))
    }
}

/// Cornish-Fisher quantile of Ȳ from the cumulants of Y at 0.
fn cornish_fisher<M: ScalarCgf>(model: &M, alpha: f64, nf: f64) -> Result<f64> {
    let k = |r| model.ky_deriv(0.0, r);
    let (k1, k2) = (k(1)?, k(2)?);
    let g1 = k(3)? / k2.powf(1.5) / nf.sqrt();
    let g2 = k(4)? / (k2 * k2) / nf;
    let z = norm_inv(alpha);
    let w =
        z + (z * z - 1.0) * g1 / 6.0 + (z.powi(3) - 3.0 * z) * g2 / 24.0 - (2.0 * z.powi(3) - 5.0 * z) * g1 * g1 / 36.0;
    Ok(k1 + (k2 / nf).sqrt() * w)
}

/// The α-quantile of Ȳ from the corrected Lugannani-Rice tail, solved in η.
pub fn var_spa<M: ScalarCgf>(model: &M, alpha: f64, n: usize) -> Result<f64> {
    check_alpha(alpha)?;
    let nf = check_n(n)?;
    let target = 1.0 - alpha;
    // P[Ȳ ≥ K′(η)] decreases in η with slope −f(K′(η))·K″(η).
    let residual = |eta: f64| -> Result<(f64, f64)> {
        let sp = Saddlepoint1::at_eta(model, eta)?;
        let p = tail_prob_spa(&sp, n, Order::Corrected)?;
        Ok((target - p, daniels_pdf(&sp, n, Order::Corrected)? * sp.ky_pp))
    };
    let dom = model.domain();
    let v0 = cornish_fisher(model, alpha, nf)?;
    let mut eta0 = (v0 - model.ky_deriv(0.0, 1)?) / model.ky_deriv(0.0, 2)?;
    if !dom.contains(eta0) {
        eta0 = 0.0;
    }
    let (eta, _) = safeguarded_newton(residual, dom, eta0, target).map_err(|e| match e {
        Error::NoSaddlepoint { .. } => Error::NoSaddlepoint { target: alpha },
        other => other,
    })?;
    model.ky_deriv(eta, 1)
}

/// Denominator used for P[L ≥ v] in CVaR-type ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TailDenominator {
    /// 1 − α, exact when v is the true VaR.
    #[default]
    OneMinusAlpha,
    /// Lugannani-Rice at v.
    Spa,
}

impl TailDenominator {
    fn mode(self, alpha: f64) -> TailMode {
        match self {
            TailDenominator::OneMinusAlpha => TailMode::External(1.0 - alpha),
            TailDenominator::Spa => TailMode::SpaTail,
        }
    }
}

/// CVaR of L̄ at the threshold v: the Temme tail mean over P[L̄ ≥ v].
pub fn cvar_spa<M: ScalarCgf>(model: &M, v: f64, alpha: f64, n: usize, denom: TailDenominator) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(cond_exp_geq_1d(&SelfPaired(model), v, n, denom.mode(alpha))?.value)
}

/// Euler VaR contribution E[L̄ᵢ | L̄ = v].
pub fn euler_contrib_var(portfolio: &PortfolioSpec, i: usize, v: f64, n: usize) -> Result<f64> {
    Ok(cond_exp_eq_1d(&portfolio.joint(i)?, v, n, EqMode::Simple)?.value)
}

/// Euler CVaR contribution E[L̄ᵢ | L̄ ≥ v].
pub fn euler_contrib_cvar(
    portfolio: &PortfolioSpec,
    i: usize,
    v: f64,
    alpha: f64,
    n: usize,
    denom: TailDenominator,
) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(cond_exp_geq_1d(&portfolio.joint(i)?, v, n, denom.mode(alpha))?.value)
}

/// First-order VaR contribution K_γ(η̂).
pub fn martin_contrib_var(portfolio: &PortfolioSpec, i: usize, v: f64) -> Result<f64> {
    Ok(cond_exp_eq_1d(&portfolio.joint(i)?, v, 1, EqMode::Simple)?.leading)
}

/// Pieces of the Muromachi VaR contribution on a Gaussian portfolio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuromachiSaddle {
    pub eta: f64,
    /// K′_M(η̂_M) − v.
    pub residual: f64,
    pub k: f64,
    pub k2: f64,
    pub rho3: f64,
    pub rho4: f64,
}

/// Saddlepoint of K_M(η) = uᵀμη + uᵀΣuη²/2 + log(μᵢ + uᵀΣⁱη).
pub fn muromachi_saddle(portfolio: &PortfolioSpec, i: usize, v: f64) -> Result<MuromachiSaddle> {
    portfolio.validate()?;
    portfolio.check_index(i)?;
    let (um, var, s) = portfolio.gaussian_moments(i)?;
    let mu_i = portfolio.gaussian_parts()?.0[i];
    let shift = um - v;
    // K′_M(η) = v ⇔ (uᵀμ − v + Vη)(μᵢ + sη) + s = 0
    let (qa, qb, qc) = (var * s, var * mu_i + shift * s, shift * mu_i + s);
    let naive = -shift / var;
    let roots: Vec<f64> = if qa.abs() <= 1e-14 * (qb.abs() + qc.abs()) {
        if qb == 0.0 {
            vec![]
        } else {
            vec![-qc / qb]
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            vec![]
        } else {
            let q = -0.5 * (qb + qb.signum() * disc.sqrt());
            let mut r = vec![q / qa];
            if q != 0.0 {
                r.push(qc / q);
            }
            r
        }
    };
    let at = |eta: f64| {
        let q = mu_i + s * eta;
        let k2 = var - s * s / (q * q);
        (q, k2)
    };
    let eta = roots
        .into_iter()
        .filter(|&e| {
            let (q, k2) = at(e);
            e.is_finite() && q > 0.0 && k2 > 0.0
        })
        .min_by(|a, b| (a - naive).abs().total_cmp(&(b - naive).abs()))
        .ok_or(Error::NoSaddlepoint { target: v })?;
    let (q, k2) = at(eta);
    let k = um * eta + 0.5 * var * eta * eta + q.ln();
    let k3 = 2.0 * s.powi(3) / q.powi(3);
    let k4 = -6.0 * s.powi(4) / q.powi(4);
    let residual = um + var * eta + s / q - v;
    Ok(MuromachiSaddle { eta, residual, k, k2, rho3: k3 / k2.powf(1.5), rho4: k4 / (k2 * k2) })
}

/// Muromachi's saddlepoint VaR contribution for a Gaussian portfolio.
pub fn muromachi_contrib_var_normal(portfolio: &PortfolioSpec, i: usize, v: f64) -> Result<f64> {
    let sp = muromachi_saddle(portfolio, i, v)?;
    let (um, var, _) = portfolio.gaussian_moments(i)?;
    let expo = (um - v).powi(2) / (2.0 * var) + sp.k - sp.eta * v;
    Ok((var / sp.k2).sqrt() * expo.exp() * (1.0 + sp.rho4 / 8.0 - 5.0 * sp.rho3 * sp.rho3 / 24.0))
}

/// Per-factor pieces g_k·d_k, λ_k and the constant E[∂Y/∂μᵢ] of a delta-gamma model.
fn dg_terms(dg: &DeltaGammaPortfolio, i: usize) -> Result<(Vec<(f64, f64)>, f64)> {
    let cgf = dg.cgf(i)?;
    let terms = cgf.g.iter().zip(&cgf.d).zip(&cgf.lambda).map(|((g, d), l)| (g * d, *l)).collect();
    Ok((terms, cgf.m_i))
}

/// ∂v_α/∂μᵢ = E[∂Y/∂μᵢ | Ȳ = v] for a delta-gamma loss, in the closed form
/// specialized to the quadratic-normal CGF.
pub fn dg_var_sens(dg: &DeltaGammaPortfolio, i: usize, v: f64, n: usize) -> Result<f64> {
    let nf = check_n(n)?;
    let sp = delta_gamma_saddle(dg, i, v)?;
    let (terms, base) = dg_terms(dg, i)?;
    let (eta, k2, k3, k4) = (sp.eta_hat, sp.ky_pp, sp.k3, sp.k4);
    let denom = 2.0 * nf * k2 * k2 + k4 / 4.0 - 5.0 / 12.0 * k3 * k3 / k2;
    Ok(base
        + terms
            .iter()
            .map(|&(gd, l)| {
                let w = 1.0 - 2.0 * l * eta;
                gd / w.powi(3) * (eta * w * w + (k3 * w - 4.0 * l * k2) / denom)
            })
            .sum::<f64>())
}

/// ∂c_α/∂μᵢ = E[∂Y/∂μᵢ | Ȳ ≥ v] for a delta-gamma loss with P[Ȳ ≥ v] = 1 − α.
pub fn dg_cvar_sens(dg: &DeltaGammaPortfolio, i: usize, v: f64, alpha: f64, n: usize) -> Result<f64> {
    check_alpha(alpha)?;
    let nf = check_n(n)?;
    let sp = delta_gamma_saddle(dg, i, v)?;
    if sp.near_zero {
        return Err(Error::Branch);
    }
    let (terms, base) = dg_terms(dg, i)?;
    let (eta, z, k2) = (sp.eta_hat, sp.z_hat, sp.ky_pp);
    let rn = nf.sqrt();
    let lead = norm_pdf(rn * sp.omega_hat) / (rn * z * (1.0 - alpha));
    let shape = kurtosis_term(&sp) - sp.rho3 / (2.0 * z) - 1.0 / (z * z);
    Ok(base
        + terms
            .iter()
            .map(|&(gd, l)| {
                let w = 1.0 - 2.0 * l * eta;
                let corr = shape * eta + (sp.rho3 / 2.0 + 1.0 / z) / (k2.sqrt() * w) - 4.0 * l / (2.0 * k2 * w * w);
                lead * gd / w * (eta + corr / nf)
            })
            .sum::<f64>())
}

/// Where a VaR value in a report came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarSource {
    Mc,
    Spa,
}

impl VarSource {
    pub fn as_str(self) -> &'static str {
        match self {
            VarSource::Mc => "mc",
            VarSource::Spa => "spa",
        }
    }
}

/// One output row: a saddlepoint value against an optional Monte Carlo reference.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskRow {
    pub alpha: f64,
    pub var_value: f64,
    pub var_source: VarSource,
    pub method: String,
    pub value: Result<f64>,
    pub mc_reference: Option<f64>,
    pub abs_diff: Option<f64>,
    pub rel_diff: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
}

impl RiskRow {
    pub fn new(
        alpha: f64,
        var_value: f64,
        var_source: VarSource,
        method: impl Into<String>,
        value: Result<f64>,
    ) -> Self {
        Self {
            alpha,
            var_value,
            var_source,
            method: method.into(),
            value,
            mc_reference: None,
            abs_diff: None,
            rel_diff: None,
            ci_lo: None,
            ci_hi: None,
        }
    }

    /// Attaches a reference estimate with its confidence interval and fills the differences.
    pub fn with_reference(mut self, reference: f64, ci: (f64, f64)) -> Self {
        self.mc_reference = Some(reference);
        self.ci_lo = Some(ci.0);
        self.ci_hi = Some(ci.1);
        if let Ok(v) = self.value {
            let d = (v - reference).abs();
            self.abs_diff = Some(d);
            self.rel_diff = (reference != 0.0).then(|| d / reference.abs());
        }
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RiskReport {
    pub rows: Vec<RiskRow>,
}

impl RiskReport {
    /// Mean of `rel_diff` over rows of one method that have it.
    pub fn mean_rel_diff(&self, method: &str) -> Option<f64> {
        let v: Vec<f64> = self.rows.iter().filter(|r| r.method == method).filter_map(|r| r.rel_diff).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// `count` equally spaced levels from `lo` to `hi` inclusive.
pub fn alpha_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    check_alpha(lo)?;
    check_alpha(hi)?;
    if count == 0 || hi < lo {
        return Err(invalid("alpha grid needs count > 0 and lo <= hi"));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect())
}
