//! Saddlepoint solvers: K′_Y(η) = a in one dimension, ∇K_Y(η) = a in two,
//! and the profile minimizer η̃₂(η₁).

use crate::cgf::{DeltaGammaPortfolio, Interval, ScalarCgf, VectorCgf2};
use crate::error::{Error, Result};
use crate::special::{integrate, QuadOptions};

/// Iteration cap shared by the solvers.
pub const MAX_ITER: usize = 200;
/// Residual tolerance relative to max(1, |target|).
pub const RESIDUAL_TOL: f64 = 1e-12;
/// Residual accepted when the bracket has collapsed to floating-point width.
const FALLBACK_TOL: f64 = 1e-10;
/// Below this |ẑ| the integral remainder forms of ω̂ and ẑ − ω̂ are used.
pub(crate) const REMAINDER_Z: f64 = 0.5;

/// Root of an increasing function `f` (returning value and derivative) on an
/// open interval, by Newton steps kept inside a shrinking bracket.
///
/// Sides of the bracket that have not yet been evaluated are pushed outward
/// by doubling (infinite side) or halving the distance to the boundary
/// (finite side); a target outside the range of `f` exhausts the domain and
/// yields [`Error::NoSaddlepoint`].
pub fn safeguarded_newton<F>(f: F, domain: Interval, x0: f64, target: f64) -> Result<(f64, usize)>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    let tol = RESIDUAL_TOL * target.abs().max(1.0);
    let no_root = Error::NoSaddlepoint { target };
    if !domain.contains(x0) {
        return Err(Error::Domain { x: x0, lo: domain.lo, hi: domain.hi });
    }
    // Bracket ends; `None` means not yet verified by a sign change.
    let mut lo: Option<(f64, f64)> = None;
    let mut hi: Option<(f64, f64)> = None;
    let mut x = x0;
    let mut last_step = 1.0f64;
    let mut good: Option<f64> = None;
    for iter in 0..=MAX_ITER {
        // A failed trial point after a successful one is pulled halfway back.
        let (g, dg) = match (f(x), good) {
            (Ok((g, dg)), _) if g.is_finite() => (g, dg),
            (Err(Error::Domain { .. } | Error::SingularHessian), Some(p)) | (Ok(_), Some(p)) if x != p => {
                last_step = 0.5 * (x - p);
                x = p + last_step;
                continue;
            }
            (Ok(_), _) => return Err(no_root),
            (Err(e), _) => return Err(e),
        };
        good = Some(x);
        if g.abs() <= tol {
            // One more Newton step takes the residual down to rounding level.
            let polished = x - g / dg;
            if g != 0.0 && dg > 0.0 && domain.contains(polished) {
                if let Ok((g1, _)) = f(polished) {
                    if g1.abs() < g.abs() {
                        return Ok((polished, iter + 1));
                    }
                }
            }
            return Ok((x, iter));
        }
        if g < 0.0 {
            lo = Some((x, g));
        } else {
            hi = Some((x, g));
        }
        if let (Some((l, gl)), Some((h, gh))) = (lo, hi) {
            if h - l <= 4.0 * f64::EPSILON * l.abs().max(h.abs()).max(f64::MIN_POSITIVE) {
                let (best, gbest) = if gl.abs() < gh.abs() { (l, gl) } else { (h, gh) };
                return if gbest.abs() <= FALLBACK_TOL * target.abs().max(1.0) {
                    Ok((best, iter))
                } else {
                    Err(Error::NonConvergence { what: "safeguarded Newton", iterations: iter })
                };
            }
        }
        let a = lo.map_or(domain.lo, |p| p.0);
        let b = hi.map_or(domain.hi, |p| p.0);
        let newton = x - g / dg;
        let newton_ok = dg > 0.0 && dg.is_finite() && newton > a && newton < b && domain.contains(newton);
        let next = if newton_ok {
            newton
        } else if lo.is_some() && hi.is_some() {
            0.5 * (a + b)
        } else {
            // Expand toward the unverified side.
            let (bound, dir) = if g < 0.0 { (domain.hi, 1.0) } else { (domain.lo, -1.0) };
            let reach = x + dir * 2.0 * last_step.abs().max(1e-3 * x.abs().max(1.0));
            if bound.is_finite() && (dir * (reach - bound) >= 0.0 || !domain.contains(reach)) {
                let mid = x + 0.5 * (bound - x);
                if !domain.contains(mid) || mid == x {
                    return Err(no_root);
                }
                mid
            } else if !reach.is_finite() {
                return Err(no_root);
            } else {
                reach
            }
        };
        last_step = next - x;
        x = next;
    }
    Err(Error::NonConvergence { what: "safeguarded Newton", iterations: MAX_ITER })
}

/// Solved one-dimensional saddlepoint with the derived Lugannani-Rice variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Saddlepoint1 {
    pub eta_hat: f64,
    pub a: f64,
    pub omega_hat: f64,
    pub z_hat: f64,
    pub rho3: f64,
    pub rho4: f64,
    /// K″_Y(η̂).
    pub ky_pp: f64,
    /// K_Y(η̂).
    pub ky_hat: f64,
    /// K‴_Y(η̂), K⁗_Y(η̂).
    pub k3: f64,
    pub k4: f64,
    /// ẑ − ω̂, kept separately because both vanish together near the mean.
    pub z_minus_omega: f64,
    /// K″_Y(0), the variance of Y.
    pub ky_pp0: f64,
    /// True when |η̂| falls under the mean-crossing threshold.
    pub near_zero: bool,
    pub iterations: usize,
}

impl Saddlepoint1 {
    /// Threshold on |η̂| below which the regular tail expansions are replaced
    /// by their η̂ = 0 forms.
    pub fn zero_threshold(a: f64, ky_pp0: f64) -> f64 {
        1e-8 * (a.abs() / ky_pp0.sqrt()).max(1.0)
    }

    /// Saddlepoint quantities at a given η, for the target a = K′_Y(η).
    pub fn at_eta<M: ScalarCgf>(model: &M, eta: f64) -> Result<Self> {
        model.domain().check(eta)?;
        Self::assemble(model, model.ky_deriv(eta, 1)?, eta, 0)
    }

    fn assemble<M: ScalarCgf>(model: &M, a: f64, eta: f64, iterations: usize) -> Result<Self> {
        let ky_hat = model.ky(eta)?;
        let ky_pp = model.ky_deriv(eta, 2)?;
        let k3 = model.ky_deriv(eta, 3)?;
        let k4 = model.ky_deriv(eta, 4)?;
        let ky_pp0 = model.ky_deriv(0.0, 2)?;
        if !(ky_pp > 0.0) {
            return Err(Error::SingularHessian);
        }
        let z_hat = eta * ky_pp.sqrt();
        let (omega_hat, z_minus_omega) = if eta == 0.0 {
            (0.0, 0.0)
        } else if z_hat.abs() < REMAINDER_Z {
            // Taylor remainders about η̂ evaluated at 0, in integral form:
            //   η̂a − K(η̂) = ∫₀^η̂ t K″(t) dt,   ẑ² − ω̂² = ∫₀^η̂ t² K‴(t) dt.
            let half_w2 = remainder_integral(|t| Ok(t * model.ky_deriv(t, 2)?), eta, eta * ky_pp)?;
            let diff_sq = remainder_integral(|t| Ok(t * t * model.ky_deriv(t, 3)?), eta, eta * eta * k3)?;
            let w = eta.signum() * (2.0 * half_w2.max(0.0)).sqrt();
            (w, diff_sq / (z_hat + w))
        } else {
            let w = eta.signum() * (2.0 * (eta * a - ky_hat).max(0.0)).sqrt();
            (w, z_hat - w)
        };
        Ok(Self {
            eta_hat: eta,
            a,
            omega_hat,
            z_hat,
            z_minus_omega,
            rho3: k3 / ky_pp.powf(1.5),
            rho4: k4 / (ky_pp * ky_pp),
            ky_pp,
            ky_hat,
            k3,
            k4,
            ky_pp0,
            near_zero: eta.abs() <= Self::zero_threshold(a, ky_pp0),
            iterations,
        })
    }
}

/// `noise` bounds the magnitude of the terms that cancel inside `g`; it sets
/// the roundoff floor of the absolute tolerance.
pub(crate) fn remainder_integral<G: Fn(f64) -> Result<f64>>(g: G, eta: f64, noise: f64) -> Result<f64> {
    let floor = 64.0 * f64::EPSILON * eta.abs() * noise.abs();
    let opts = QuadOptions { abs_tol: floor, rel_tol: 1e-14, max_intervals: 200 };
    let q = integrate(|t| g(t).unwrap_or(f64::NAN), 0.0, eta, opts)?;
    if !q.value.is_finite() {
        return Err(Error::NonConvergence { what: "remainder integral", iterations: 0 });
    }
    Ok(q.value)
}

/// Solves K′_Y(η) = a, starting from the Gaussian guess (a − E[Y])/Var(Y).
pub fn solve_saddle_1d<M: ScalarCgf>(model: &M, a: f64) -> Result<Saddlepoint1> {
    if !a.is_finite() {
        return Err(Error::NoSaddlepoint { target: a });
    }
    let mean = model.ky_deriv(0.0, 1)?;
    let var = model.ky_deriv(0.0, 2)?;
    let dom = model.domain();
    let mut x0 = (a - mean) / var;
    if !dom.contains(x0) {
        x0 = 0.0;
    }
    solve_saddle_1d_from(model, a, x0)
}

/// Same as [`solve_saddle_1d`] with a caller-supplied starting point.
pub fn solve_saddle_1d_from<M: ScalarCgf>(model: &M, a: f64, guess: f64) -> Result<Saddlepoint1> {
    let f = |eta: f64| -> Result<(f64, f64)> { Ok((model.ky_deriv(eta, 1)? - a, model.ky_deriv(eta, 2)?)) };
    let (eta, iters) = safeguarded_newton(f, model.domain(), guess, a)?;
    Saddlepoint1::assemble(model, a, eta, iters)
}

/// Saddlepoint of the delta-gamma loss for the sensitivity to μᵢ.
pub fn delta_gamma_saddle(dg: &DeltaGammaPortfolio, i: usize, v: f64) -> Result<Saddlepoint1> {
    solve_saddle_1d(&dg.cgf(i)?, v)
}

/// Solved two-dimensional saddlepoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Saddlepoint2 {
    pub eta_hat: [f64; 2],
    pub a: [f64; 2],
    /// (ω̂₁, ω̂₂) of the sequential change of variables.
    pub omega_hat: [f64; 2],
    /// η̃₂(0), the profile minimizer on the η₁ = 0 slice.
    pub tilde_eta2_of_0: f64,
    /// ψ(η̂) = K_Y(η̂) − η̂ᵀa.
    pub psi_hat: f64,
    pub hessian: [[f64; 2]; 2],
    pub iterations: usize,
}

/// ψ(η) = K_Y(η) − ηᵀa.
pub fn psi<M: VectorCgf2>(model: &M, eta: [f64; 2], a: [f64; 2]) -> Result<f64> {
    Ok(model.ky(eta)? - eta[0] * a[0] - eta[1] * a[1])
}

/// The minimizer η̃₂(η₁) of ψ(η₁, ·), i.e. the root of ∂₂K_Y(η₁, η₂) = a₂.
pub fn inner_min_eta2<M: VectorCgf2>(model: &M, eta1: f64, a2: f64) -> Result<f64> {
    let slice = model.eta2_slice(eta1);
    if slice.is_empty() {
        return Err(Error::Domain { x: eta1, lo: model.bounding_box()[0].lo, hi: model.bounding_box()[0].hi });
    }
    let f = |e2: f64| -> Result<(f64, f64)> {
        Ok((model.ky_partial([eta1, e2], [0, 1])? - a2, model.ky_partial([eta1, e2], [0, 2])?))
    };
    let start = if slice.contains(0.0) {
        0.0
    } else if slice.lo.is_finite() && slice.hi.is_finite() {
        0.5 * (slice.lo + slice.hi)
    } else if slice.lo.is_finite() {
        slice.lo + 1.0
    } else {
        slice.hi - 1.0
    };
    safeguarded_newton(f, slice, start, a2).map(|(x, _)| x)
}

fn solve2(h: [[f64; 2]; 2], g: [f64; 2]) -> Result<[f64; 2]> {
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    if !(h[0][0] > 0.0 && det > 1e-300 * h[0][0].abs().max(h[1][1].abs()).powi(2)) || !det.is_finite() {
        return Err(Error::SingularHessian);
    }
    Ok([(h[1][1] * g[0] - h[0][1] * g[1]) / det, (h[0][0] * g[1] - h[1][0] * g[0]) / det])
}

/// Solves ∇K_Y(η) = a by damped Newton on the convex ψ, falling back to
/// coordinate alternation through [`inner_min_eta2`].
pub fn solve_saddle_2d<M: VectorCgf2>(model: &M, a: [f64; 2]) -> Result<Saddlepoint2> {
    if !(a[0].is_finite() && a[1].is_finite()) {
        return Err(Error::NoSaddlepoint { target: a[0] });
    }
    let tol = [RESIDUAL_TOL * a[0].abs().max(1.0), RESIDUAL_TOL * a[1].abs().max(1.0)];
    let eta = match damped_newton_2d(model, a, tol) {
        Ok(r) => r,
        Err(Error::SingularHessian) => return Err(Error::SingularHessian),
        Err(_) => coordinate_descent_2d(model, a, tol)?,
    };
    let (eta_hat, iterations) = eta;
    finish_saddle_2d(model, a, eta_hat, iterations)
}

fn damped_newton_2d<M: VectorCgf2>(model: &M, a: [f64; 2], tol: [f64; 2]) -> Result<([f64; 2], usize)> {
    let mut eta = [0.0, 0.0];
    let mut f = psi(model, eta, a)?;
    for iter in 0..MAX_ITER {
        let g = model.ky_grad(eta)?;
        let r = [g[0] - a[0], g[1] - a[1]];
        if r[0].abs() <= tol[0] && r[1].abs() <= tol[1] {
            return Ok((eta, iter));
        }
        let h = model.ky_hessian(eta)?;
        let step = solve2(h, r)?;
        let slope = -(r[0] * step[0] + r[1] * step[1]);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = [eta[0] - t * step[0], eta[1] - t * step[1]];
            if model.contains(cand) {
                let fc = psi(model, cand, a)?;
                // Armijo with slack for rounding near convergence.
                if fc <= f + 1e-4 * t * slope + 1e-15 * f.abs().max(1.0) {
                    eta = cand;
                    f = fc;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::NonConvergence { what: "damped Newton (2-d)", iterations: iter });
        }
    }
    Err(Error::NonConvergence { what: "damped Newton (2-d)", iterations: MAX_ITER })
}

fn coordinate_descent_2d<M: VectorCgf2>(model: &M, a: [f64; 2], tol: [f64; 2]) -> Result<([f64; 2], usize)> {
    // Profile ψ(η₁, η̃₂(η₁)) has derivative ∂₁K − a₁ at the inner minimizer,
    // increasing in η₁; solve it with the 1-d safeguarded Newton.
    let profile = |e1: f64| -> Result<(f64, f64)> {
        let e2 = inner_min_eta2(model, e1, a[1])?;
        let h = model.ky_hessian([e1, e2])?;
        Ok((model.ky_partial([e1, e2], [1, 0])? - a[0], h[0][0] - h[0][1] * h[0][1] / h[1][1]))
    };
    let b = model.bounding_box()[0];
    let (e1, iters) = safeguarded_newton(profile, b, if b.contains(0.0) { 0.0 } else { 0.5 * (b.lo + b.hi) }, a[0])?;
    let e2 = inner_min_eta2(model, e1, a[1])?;
    let g = model.ky_grad([e1, e2])?;
    if (g[0] - a[0]).abs() > 100.0 * tol[0] || (g[1] - a[1]).abs() > 100.0 * tol[1] {
        return Err(Error::NonConvergence { what: "coordinate alternation (2-d)", iterations: iters });
    }
    Ok(([e1, e2], iters))
}

fn finish_saddle_2d<M: VectorCgf2>(
    model: &M,
    a: [f64; 2],
    eta_hat: [f64; 2],
    iterations: usize,
) -> Result<Saddlepoint2> {
    let hessian = model.ky_hessian(eta_hat)?;
    solve2(hessian, [0.0, 0.0])?;
    let psi_hat = psi(model, eta_hat, a)?;
    let t0 = inner_min_eta2(model, 0.0, a[1])?;
    let psi_0 = psi(model, [0.0, t0], a)?;
    // ½ω̂₁² = ψ(0, η̃₂(0)) − ψ(η̂);  ½ω̂₂² = −ψ(0, η̃₂(0)).
    let w1 = eta_hat[0].signum() * (2.0 * (psi_0 - psi_hat).max(0.0)).sqrt();
    let w2 = t0.signum() * (-2.0 * psi_0).max(0.0).sqrt();
    Ok(Saddlepoint2 {
        eta_hat,
        a,
        omega_hat: [if eta_hat[0] == 0.0 { 0.0 } else { w1 }, if t0 == 0.0 { 0.0 } else { w2 }],
        tilde_eta2_of_0: t0,
        psi_hat,
        hessian,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cgf::{BivariateNormal, GammaFactorModel, GbmQModel, TrivariateNormal};

    #[test]
    fn gaussian_closed_form() {
        let m = BivariateNormal::new(0.0, -0.2, 1.0, 1.0, 0.3).unwrap();
        let sp = solve_saddle_1d(&m, 0.5).unwrap();
        assert!((sp.eta_hat - 0.7).abs() <= 1e-14);
        assert!((sp.omega_hat - 0.7).abs() <= 1e-14);
        assert_eq!(sp.rho3, 0.0);
    }

    #[test]
    fn mean_gives_zero_saddlepoint() {
        let m = GammaFactorModel::new(vec![2.0, 3.0], vec![1.0, 0.5], vec![1.0, 0.0]).unwrap();
        let sp = solve_saddle_1d(&m, 3.5).unwrap();
        assert_eq!(sp.eta_hat, 0.0);
        assert!(sp.near_zero);
        assert_eq!(sp.omega_hat, 0.0);
    }

    #[test]
    fn unattainable_target_is_reported() {
        // Y = G₁ + G₂ > 0 almost surely
        let m = GammaFactorModel::new(vec![2.0, 3.0], vec![1.0, 1.0], vec![1.0, 0.0]).unwrap();
        assert!(matches!(solve_saddle_1d(&m, -0.1), Err(Error::NoSaddlepoint { .. })));
        let sp = solve_saddle_1d(&m, 0.05).unwrap();
        assert!((m.ky_deriv(sp.eta_hat, 1).unwrap() - 0.05).abs() < 1e-12);
        let sp = solve_saddle_1d(&m, 400.0).unwrap();
        assert!(sp.eta_hat < 1.0 && sp.eta_hat > 0.98);
    }

    #[test]
    fn remainder_forms_match_closed_forms() {
        let m = GammaFactorModel::new(vec![2.0], vec![1.0], vec![1.0]).unwrap();
        // K′(η) = 2/(1−η) ⇒ η̂ = 1 − 2/a; pick a just above the mean
        let a = 2.0 / (1.0 - 5e-5);
        let sp = solve_saddle_1d(&m, a).unwrap();
        let direct = (2.0 * (sp.eta_hat * a - m.ky(sp.eta_hat).unwrap())).sqrt();
        assert!((sp.omega_hat / direct - 1.0).abs() < 1e-8);
        // closed forms with log1p keep full accuracy
        let e = sp.eta_hat;
        let exact = (2.0 * (e * a + 2.0 * (-e).ln_1p())).sqrt();
        assert!((sp.omega_hat / exact - 1.0).abs() < 1e-12);
        let z = e * (2.0f64).sqrt() / (1.0 - e);
        let d_exact = (z * z - exact * exact) / (z + exact);
        assert!((sp.z_minus_omega / d_exact - 1.0).abs() < 1e-6, "{} {}", sp.z_minus_omega, d_exact);
    }

    #[test]
    fn gbm_saddle_and_profile() {
        let (s1, rho, t) = (0.3, 0.4, 2.0);
        let m = GbmQModel::new(s1, rho, t).unwrap();
        let (k, h) = (0.8, 0.5);
        let sp = solve_saddle_2d(&m, [k, h]).unwrap();
        let d = t * (1.0 - rho * rho);
        assert!((sp.eta_hat[0] - ((k - rho * h) / d - s1)).abs() < 1e-13);
        assert!((sp.eta_hat[1] - (h - rho * k) / d).abs() < 1e-13);
        for e1 in [-1.0, 0.0, 0.7] {
            let e2 = inner_min_eta2(&m, e1, h).unwrap();
            assert!((e2 - (h / t - rho * (e1 + s1))).abs() < 1e-13);
        }
        assert!((sp.tilde_eta2_of_0 - (h / t - rho * s1)).abs() < 1e-13);
    }

    #[test]
    fn trivariate_normal_linear_solve() {
        let m = TrivariateNormal::new([0.0, 0.1, -0.2], [[1.0, 0.2, 0.1], [0.2, 2.0, 0.6], [0.1, 0.6, 1.5]]).unwrap();
        let a = [1.3, 0.4];
        let sp = solve_saddle_2d(&m, a).unwrap();
        let g = m.ky_grad(sp.eta_hat).unwrap();
        assert!((g[0] - a[0]).abs() < 1e-12 && (g[1] - a[1]).abs() < 1e-12);
        let zero = solve_saddle_2d(&m, [0.1, -0.2]).unwrap();
        assert_eq!(zero.eta_hat, [0.0, 0.0]);
    }
}
