//! Saddlepoint expansions of conditional expectations E[X̄ | Ȳ = a] and
//! E[X̄ | Ȳ ≥ a] for one- and two-dimensional Y.

use std::f64::consts::PI;

use crate::cgf::{Reflected, ScalarCgf, VectorCgf2};
use crate::classical::{
    check_n, kurtosis_term, lugannani_rice, lugannani_rice_raw, mean_crossing_tail, CumulantTensors2, Order,
};
use crate::error::{Error, Result};
use crate::saddle::{
    inner_min_eta2, psi, remainder_integral, safeguarded_newton, solve_saddle_1d, solve_saddle_2d, Saddlepoint1,
    Saddlepoint2, REMAINDER_Z,
};
use crate::special::{binorm_cdf_bar, norm_pdf, norm_sf};

/// Which formula produced a conditional expectation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Regular,
    /// The saddlepoint fell under the zero threshold.
    EtaZero,
}

/// Saddlepoint quantities reported with every result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Diagnostics {
    One { eta_hat: f64, omega_hat: f64, z_hat: f64, rho3: f64, rho4: f64 },
    Two { eta_hat: [f64; 2], omega_hat: [f64; 2] },
}

impl Diagnostics {
    fn of(sp: &Saddlepoint1) -> Self {
        Diagnostics::One { eta_hat: sp.eta_hat, omega_hat: sp.omega_hat, z_hat: sp.z_hat, rho3: sp.rho3, rho4: sp.rho4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CondExpResult {
    pub value: f64,
    pub leading: f64,
    /// `value − leading`.
    pub correction: f64,
    pub branch: Branch,
    pub diagnostics: Diagnostics,
}

impl CondExpResult {
    fn new(value: f64, leading: f64, branch: Branch, diagnostics: Diagnostics) -> Self {
        Self { value, leading, correction: value - leading, branch, diagnostics }
    }
}

/// Form of the expansion of E[X̄ | Ȳ = a].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EqMode {
    /// Numerator expansion divided by the corrected Daniels density.
    Ratio,
    /// K_γ(η̂) + correction/(n + ρ̂₄/8 − 5ρ̂₃²/24).
    #[default]
    Simple,
}

/// Source of P[Ȳ ≥ a] in the denominator of E[X̄ | Ȳ ≥ a].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum TailMode {
    /// Corrected Lugannani-Rice, or its mean-crossing limit near η̂ = 0.
    #[default]
    SpaTail,
    /// A probability supplied by the caller, e.g. a Monte Carlo estimate.
    External(f64),
}

fn check_probability(p: f64) -> Result<f64> {
    if p > 0.0 && p <= 1.0 {
        Ok(p)
    } else {
        Err(Error::ZeroProbability(p))
    }
}

/// E[X̄ | Ȳ = a].
pub fn cond_exp_eq_1d<M: ScalarCgf>(model: &M, a: f64, n: usize, mode: EqMode) -> Result<CondExpResult> {
    let nf = check_n(n)?;
    let sp = solve_saddle_1d(model, a)?;
    cond_exp_eq_at(model, &sp, nf, mode)
}

pub(crate) fn cond_exp_eq_at<M: ScalarCgf>(
    model: &M,
    sp: &Saddlepoint1,
    nf: f64,
    mode: EqMode,
) -> Result<CondExpResult> {
    let g0 = model.kgamma(sp.eta_hat)?;
    let g1 = model.kgamma_deriv(sp.eta_hat, 1)?;
    let g2 = model.kgamma_deriv(sp.eta_hat, 2)?;
    let c4 = kurtosis_term(sp);
    let t = sp.rho3 * g1 / (2.0 * sp.ky_pp.sqrt()) - g2 / (2.0 * sp.ky_pp);
    // The common factor √(n/2π)e^{−nω̂²/2}/√K″ of numerator and density cancels.
    let value = match mode {
        EqMode::Ratio => (g0 + (c4 * g0 + t) / nf) / (1.0 + c4 / nf),
        EqMode::Simple => g0 + t / (nf + c4),
    };
    let branch = if sp.near_zero { Branch::EtaZero } else { Branch::Regular };
    Ok(CondExpResult::new(value, g0, branch, Diagnostics::of(sp)))
}

/// φ(√nω̂)/√n times the leading and the corrected bracket of the
/// expansion of E[X̄·1{Ȳ ≥ a}] − E[X]·P[Ȳ ≥ a].
fn excess_numerator<M: ScalarCgf>(model: &M, sp: &Saddlepoint1, nf: f64) -> Result<(f64, f64)> {
    let eta = sp.eta_hat;
    let z = sp.z_hat;
    let g2 = model.kgamma_deriv(eta, 2)?;
    // D = K_γ(η̂) − K_γ(0), E = η̂K_γ′(η̂) − D, F = E − η̂²K_γ″(η̂)/2. The
    // bracket is Dc₄/ẑ + ρ̂₃E/(2ẑ²) + F/ẑ³, identical to the textbook
    // grouping but free of the 1/ẑ³ cancellation; near the mean each piece
    // is taken from its integral remainder.
    let (d, e, f) = if z.abs() < REMAINDER_Z {
        let g1 = model.kgamma_deriv(eta, 1)?;
        (
            remainder_integral(|t| model.kgamma_deriv(t, 1), eta, g1)?,
            remainder_integral(|t| Ok(t * model.kgamma_deriv(t, 2)?), eta, eta * g2)?,
            remainder_integral(|t| Ok(t * (model.kgamma_deriv(t, 2)? - g2)), eta, eta * g2)?,
        )
    } else {
        let d = model.kgamma(eta)? - model.kgamma(0.0)?;
        let e = eta * model.kgamma_deriv(eta, 1)? - d;
        (d, e, e - 0.5 * eta * eta * g2)
    };
    let bracket = d * kurtosis_term(sp) / z + sp.rho3 * e / (2.0 * z * z) + f / (z * z * z);
    let rn = nf.sqrt();
    let scale = norm_pdf(rn * sp.omega_hat) / rn;
    Ok((scale * d / z, scale * (d / z + bracket / nf)))
}

/// E[X̄ | Ȳ ≥ a], switching to the η̂ = 0 form under the zero threshold.
pub fn cond_exp_geq_1d<M: ScalarCgf>(model: &M, a: f64, n: usize, tail_mode: TailMode) -> Result<CondExpResult> {
    let nf = check_n(n)?;
    let sp = solve_saddle_1d(model, a)?;
    cond_exp_geq_at(model, &sp, n, nf, tail_mode)
}

pub(crate) fn cond_exp_geq_at<M: ScalarCgf>(
    model: &M,
    sp: &Saddlepoint1,
    n: usize,
    nf: f64,
    tail_mode: TailMode,
) -> Result<CondExpResult> {
    let mu = model.mean_x();
    let p = match tail_mode {
        TailMode::External(p) => p,
        TailMode::SpaTail if sp.near_zero => mean_crossing_tail(sp, n)?,
        TailMode::SpaTail => lugannani_rice(sp, n, Order::Corrected)?,
    };
    let p = check_probability(p)?;
    if sp.near_zero {
        let slope = model.kgamma_deriv(0.0, 1)?;
        let value = mu + slope / ((2.0 * PI * nf * sp.ky_pp0).sqrt() * p);
        return Ok(CondExpResult::new(value, value, Branch::EtaZero, Diagnostics::of(sp)));
    }
    let (lead, full) = excess_numerator(model, sp, nf)?;
    Ok(CondExpResult::new(mu + full / p, mu + lead / p, Branch::Regular, Diagnostics::of(sp)))
}

/// Approximation of E[X̄·1{Ȳ ≥ a}] that reduces to the Temme tail mean when X = Y.
/// At the mean it uses the η̂ → 0 limit μ·P + K′_γ(0)/√(2πnK″(0)).
pub fn tail_weighted_mean_1d<M: ScalarCgf>(model: &M, a: f64, n: usize) -> Result<f64> {
    let nf = check_n(n)?;
    let sp = solve_saddle_1d(model, a)?;
    tail_weighted_mean_at(model, &sp, n, nf)
}

pub(crate) fn tail_weighted_mean_at<M: ScalarCgf>(model: &M, sp: &Saddlepoint1, n: usize, nf: f64) -> Result<f64> {
    if sp.near_zero {
        let slope = model.kgamma_deriv(0.0, 1)?;
        return Ok(model.mean_x() * mean_crossing_tail(sp, n)? + slope / (2.0 * PI * nf * sp.ky_pp0).sqrt());
    }
    // μΦ̄ + φ/√n[μ(1/ω̂ …) + D/ẑ + …]: the μ-terms are exactly μ times the
    // unclamped Lugannani-Rice bracket, the rest is the excess numerator.
    let (_, excess) = excess_numerator(model, sp, nf)?;
    Ok(model.mean_x() * lugannani_rice_raw(sp, n, Order::Corrected)? + excess)
}

/// E[X̄ | Ȳ ≤ a], computed by the upper-tail formula for (X, −Y) at −a.
pub fn cond_exp_lower_1d<M: ScalarCgf>(model: &M, a: f64, n: usize) -> Result<CondExpResult> {
    cond_exp_geq_1d(&Reflected(model), -a, n, TailMode::SpaTail)
}

/// E[X̄ | Ȳ ≤ a] as (E[X] − E[X̄·1{Ȳ ≥ a}])/(1 − P[Ȳ ≥ a]); regular branch only.
pub fn cond_exp_lower_1d_complement<M: ScalarCgf>(model: &M, a: f64, n: usize) -> Result<f64> {
    let nf = check_n(n)?;
    let sp = solve_saddle_1d(model, a)?;
    let upper = tail_weighted_mean_at(model, &sp, n, nf)?;
    let p = check_probability(1.0 - lugannani_rice(&sp, n, Order::Corrected)?)?;
    Ok((model.mean_x() - upper) / p)
}

/// Coefficients of the 1/n term of E[X̄ | Ȳ = a] for two-dimensional Y:
/// K_γ + (Σβᵢ∂ᵢK_γ + Σβᵢⱼ∂ᵢⱼK_γ)/(2n + β).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thm41Coefficients {
    pub beta: f64,
    pub beta_i: [f64; 2],
    pub beta_ij: [[f64; 2]; 2],
}

impl Thm41Coefficients {
    /// Contractions of the cumulant tensors at η̂ with κ = (K″)⁻¹:
    /// βᵢⱼ = −κᵢⱼ, βᵢ = κᵢₘK^{mjl}κⱼₗ, β = ϱ̂₄/4 − ϱ̂₁₃/4 − ϱ̂₂₃/6.
    pub fn from_tensors(t: &CumulantTensors2) -> Self {
        let inv = t.k2_inv;
        let mut beta_i = [0.0; 2];
        for (i, b) in beta_i.iter_mut().enumerate() {
            for m in 0..2 {
                for j in 0..2 {
                    for l in 0..2 {
                        *b += inv[i][m] * t.k3[m][j][l] * inv[j][l];
                    }
                }
            }
        }
        let beta_ij = [[-inv[0][0], -inv[0][1]], [-inv[1][0], -inv[1][1]]];
        let beta = t.varrho4 / 4.0 - t.varrho13 / 4.0 - t.varrho23 / 6.0;
        Self { beta, beta_i, beta_ij }
    }
}

/// E[X̄ | Ȳ = a] for two-dimensional Y.
pub fn cond_exp_eq_2d<M: VectorCgf2>(model: &M, a: [f64; 2], n: usize, order: Order) -> Result<CondExpResult> {
    let nf = check_n(n)?;
    let sp = solve_saddle_2d(model, a)?;
    let eta = sp.eta_hat;
    let g0 = model.kgamma(eta)?;
    let diagnostics = Diagnostics::Two { eta_hat: eta, omega_hat: sp.omega_hat };
    if order == Order::Leading {
        return Ok(CondExpResult::new(g0, g0, Branch::Regular, diagnostics));
    }
    let c = Thm41Coefficients::from_tensors(&CumulantTensors2::at(model, eta)?);
    let grad = [model.kgamma_partial(eta, [1, 0])?, model.kgamma_partial(eta, [0, 1])?];
    let g11 = model.kgamma_partial(eta, [2, 0])?;
    let g12 = model.kgamma_partial(eta, [1, 1])?;
    let g22 = model.kgamma_partial(eta, [0, 2])?;
    let num = c.beta_i[0] * grad[0]
        + c.beta_i[1] * grad[1]
        + c.beta_ij[0][0] * g11
        + 2.0 * c.beta_ij[0][1] * g12
        + c.beta_ij[1][1] * g22;
    Ok(CondExpResult::new(g0 + num / (2.0 * nf + c.beta), g0, Branch::Regular, diagnostics))
}

/// Auxiliary variables of the two-dimensional tail expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thm42Aux {
    /// ω̌₂ = ω̃₂(ω̂₁).
    pub check_omega2: f64,
    pub check_omega2_p: f64,
    pub check_omega2_pp: f64,
    /// dη₁/dω₁ and d²η₁/dω₁² at ω̂₁.
    pub deta1_domega1: f64,
    pub d2eta1_domega1sq: f64,
    /// η̃₂′(η̂₁) and η̃₂″(η̂₁).
    pub tilde_eta2_p: f64,
    pub tilde_eta2_pp: f64,
    pub b0: f64,
    pub b1: f64,
    pub x_hat: f64,
    pub y_hat: f64,
    pub rho_hat: f64,
    pub t_hat: f64,
    pub g_check: f64,
    pub k1_val: f64,
    pub k2_val: f64,
}

fn require_positive_saddle(sp: &Saddlepoint2) -> Result<()> {
    if sp.eta_hat[0] > 0.0 && sp.eta_hat[1] > 0.0 {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "two-dimensional tail expansion needs both saddlepoint components positive, got ({}, {})",
            sp.eta_hat[0], sp.eta_hat[1]
        )))
    }
}

/// Assembles [`Thm42Aux`] at a solved saddlepoint with η̂ > 0; `n` enters
/// only through x̂, ŷ, t̂.
pub fn compute_thm42_aux<M: VectorCgf2>(model: &M, sp: &Saddlepoint2, n: usize) -> Result<Thm42Aux> {
    require_positive_saddle(sp)?;
    let rn = check_n(n)?.sqrt();
    let [e1, e2] = sp.eta_hat;
    let [a1, _] = sp.a;
    let [w1, w2] = sp.omega_hat;
    let k = |p: [usize; 2]| model.ky_partial(sp.eta_hat, p);
    let (k11, k12, k22) = (k([2, 0])?, k([1, 1])?, k([0, 2])?);
    let (k111, k112, k122, k222) = (k([3, 0])?, k([2, 1])?, k([1, 2])?, k([0, 3])?);

    let te2_p = -k12 / k22;
    let te2_pp = -(k112 + 2.0 * k122 * te2_p + k222 * te2_p * te2_p) / k22;
    let schur = k11 + k12 * te2_p;
    if !(schur > 0.0) {
        return Err(Error::SingularHessian);
    }
    let d1 = 1.0 / schur.sqrt();
    let d2 = -((k111 + 2.0 * k112 * te2_p + k122 * te2_p * te2_p + k12 * te2_pp) * d1 * d1) / (3.0 * schur);

    let on_axis = [e1, 0.0];
    let psi_axis = model.ky(on_axis)? - e1 * a1;
    let gap = -2.0 * (sp.psi_hat - psi_axis);
    let cw2 = w2 + (-e2).signum() * gap.max(0.0).sqrt();
    let dw = cw2 - w2;
    if dw.abs() <= 1e-14 * w2.abs().max(1.0) {
        return Err(Error::Degenerate("omega-check-2 coincides with omega-hat-2".into()));
    }
    let k1_axis = model.ky_partial(on_axis, [1, 0])?;
    let k11_axis = model.ky_partial(on_axis, [2, 0])?;
    let cw2_p = (k1_axis - a1) * d1 / dw;
    let cw2_pp = ((k11_axis - k11 - k12 * te2_p) * d1 * d1 + (k1_axis - a1) * d2 - cw2_p * cw2_p) / dw;

    let b0 = cw2_p - cw2_pp * w1 / 2.0;
    let b1 = cw2_pp / 2.0;
    let s = (1.0 + b0 * b0).sqrt();
    let x_hat = rn * (w1 + b0 * w2) / s;
    let y_hat = rn * w2;
    let rho_hat = b0 / s;
    let t_hat = rn * s * w1;
    let g_check = (cw2 - cw2_p * w1) * (cw2 / 2.0 - cw2_p * w1 / 2.0 - w2);

    let kg00 = model.kgamma([0.0, 0.0])?;
    let kg_axis = model.kgamma(on_axis)?;
    let k1_val = (kg_axis - kg00) / w1 + kg_axis * (1.0 / (e1 * schur.sqrt()) - 1.0 / w1);
    let k2_val = (model.kgamma([0.0, sp.tilde_eta2_of_0])? - kg00) / w2;

    Ok(Thm42Aux {
        check_omega2: cw2,
        check_omega2_p: cw2_p,
        check_omega2_pp: cw2_pp,
        deta1_domega1: d1,
        d2eta1_domega1sq: d2,
        tilde_eta2_p: te2_p,
        tilde_eta2_pp: te2_pp,
        b0,
        b1,
        x_hat,
        y_hat,
        rho_hat,
        t_hat,
        g_check,
        k1_val,
        k2_val,
    })
}

/// ω̃₂(ω₁) from its definition: η₁ solves
/// ω₁ − ω̂₁ = sign(η₁ − η̂₁)·√(2[ψ̃(η₁) − ψ̃(η̂₁)]) for the profile
/// ψ̃(η₁) = ψ(η₁, η̃₂(η₁)), and then
/// ω̃₂ = ω̂₂ + sign(−η̃₂(η₁))·√(2[ψ(η₁, 0) − ψ̃(η₁)]).
pub fn omega2_tilde<M: VectorCgf2>(model: &M, sp: &Saddlepoint2, omega1: f64) -> Result<f64> {
    let a = sp.a;
    let e1_hat = sp.eta_hat[0];
    let profile = |e1: f64| -> Result<(f64, f64)> {
        let e2 = inner_min_eta2(model, e1, a[1])?;
        Ok((psi(model, [e1, e2], a)?, e2))
    };
    let w_of = |e1: f64| -> Result<(f64, f64)> {
        let (p, e2) = profile(e1)?;
        let w = if e1 == e1_hat { 0.0 } else { (e1 - e1_hat).signum() * (2.0 * (p - sp.psi_hat).max(0.0)).sqrt() };
        // p′/w loses accuracy as w → 0; the curvature limit is close enough to
        // steer Newton there.
        let slope = if w.abs() < 1e-4 {
            let h = model.ky_hessian([e1, e2])?;
            (h[0][0] - h[0][1] * h[0][1] / h[1][1]).sqrt()
        } else {
            (model.ky_partial([e1, e2], [1, 0])? - a[0]) / w
        };
        Ok((w - (omega1 - sp.omega_hat[0]), slope))
    };
    let (e1, _) = safeguarded_newton(w_of, model.bounding_box()[0], e1_hat, omega1 - sp.omega_hat[0])?;
    let (p, e2) = profile(e1)?;
    let q = psi(model, [e1, 0.0], a)? - p;
    Ok(sp.omega_hat[1] + (-e2).signum() * (2.0 * q.max(0.0)).sqrt())
}

/// Approximation of E[X̄·1{Ȳ ≥ a}] for two-dimensional Y with a saddlepoint η̂ > 0.
pub fn tail_weighted_mean_2d<M: VectorCgf2>(model: &M, a: [f64; 2], n: usize) -> Result<f64> {
    let sp = solve_saddle_2d(model, a)?;
    require_positive_saddle(&sp)?;
    let aux = compute_thm42_aux(model, &sp, n)?;
    tail_weighted_mean_2d_at(model, &sp, &aux, n)
}

/// Same as [`tail_weighted_mean_2d`] from precomputed pieces.
pub fn tail_weighted_mean_2d_at<M: VectorCgf2>(model: &M, sp: &Saddlepoint2, aux: &Thm42Aux, n: usize) -> Result<f64> {
    let nf = check_n(n)?;
    let rn = nf.sqrt();
    let mu = model.mean_x();
    let [w1, w2] = sp.omega_hat;
    let t0 = sp.tilde_eta2_of_0;
    let Thm42Aux { x_hat: x, y_hat: y, rho_hat: r, t_hat: t, b0, b1, .. } = *aux;

    let sr = (1.0 - r * r).sqrt();
    let u = (y - r * x) / sr;
    let b1_term = mu * b1 / (1.0 + b0 * b0)
        * norm_pdf(x)
        * (sr * (x - t) * norm_pdf(u) - (r + x * y - r * x * x - y * t + r * x * t) * norm_sf(u));

    let k22_0 = model.ky_partial([0.0, t0], [0, 2])?;
    let lemma =
        model.kgamma([0.0, t0])? * (1.0 / (t0 * k22_0.sqrt()) - 1.0 / w2) * norm_pdf(rn * w2) * norm_sf(rn * w1);

    let (cw2, cw2_p) = (aux.check_omega2, aux.check_omega2_p);
    let q = 1.0 + cw2_p * cw2_p;
    let sq = q.sqrt();
    let first = aux.k1_val / sq * norm_pdf(rn * (q * w1 + cw2_p * (w2 - cw2)) / sq) * norm_sf(rn * (w2 - cw2) / sq);
    let second = aux.k2_val * norm_pdf(rn * (cw2_p * w1 + w2 - cw2)) * norm_sf(rn * w1);
    let edge = (nf * aux.g_check).exp() * (first + second);

    Ok(mu * binorm_cdf_bar(x, y, r) + (b1_term + lemma + edge) / rn)
}

/// E[X̄ | Ȳ ≥ a] for two-dimensional Y, dividing by a supplied P[Ȳ ≥ a].
pub fn cond_exp_geq_2d<M: VectorCgf2>(model: &M, a: [f64; 2], n: usize, tail_prob: f64) -> Result<f64> {
    let p = check_probability(tail_prob)?;
    Ok(tail_weighted_mean_2d(model, a, n)? / p)
}
