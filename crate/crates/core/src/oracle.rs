//! Seeded Monte Carlo and quadrature references used to validate the
//! expansions: samplers, quantile and IPA estimators, pathwise vegas.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, InverseGaussian, StandardNormal};
use rayon::prelude::*;

use crate::cgf::{DeltaGammaPortfolio, GbmTwoAssetSpec, PghParams, VgExchangeSpec};
use crate::error::{invalid, Error, Result};
use crate::greeks::gbm_standardized_thresholds;
use crate::risk::{PortfolioKind, PortfolioSpec};
use crate::special::{binorm_cdf_bar, integrate, norm_inv, norm_pdf, norm_sf, QuadOptions};

/// Sample size, batch layout and RNG seeding of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub n_samples: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Independent RNG streams; batch b is drawn from stream b mod streams.
    pub streams: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { n_samples: 1_000_000, batch_size: 20_000, seed: 20_240_917, streams: 8 }
    }
}

impl McConfig {
    pub fn new(n_samples: usize, batch_size: usize, seed: u64, streams: usize) -> Result<Self> {
        let cfg = Self { n_samples, batch_size, seed, streams };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 || self.batch_size == 0 || !self.n_samples.is_multiple_of(self.batch_size) {
            return Err(invalid("n_samples must be a positive multiple of batch_size"));
        }
        if self.streams == 0 {
            return Err(invalid("at least one RNG stream is required"));
        }
        Ok(())
    }

    pub fn n_batches(&self) -> usize {
        self.n_samples / self.batch_size
    }
}

/// A Monte Carlo estimate with a symmetric confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub level: f64,
}

impl McEstimate {
    fn normal(value: f64, std_error: f64, level: f64) -> Result<Self> {
        let z = critical_value(level)?;
        Ok(Self { value, std_error, ci_lo: value - z * std_error, ci_hi: value + z * std_error, level })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.ci_lo <= x && x <= self.ci_hi
    }
}

fn critical_value(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid(format!("confidence level must lie in (0, 1), got {level}")));
    }
    Ok(norm_inv(0.5 + 0.5 * level))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// Draws `cfg.n_samples` values, batch by batch. The result depends only on
/// (seed, streams, batch_size), never on the thread count.
pub fn simulate<T, F>(cfg: &McConfig, draw: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync,
{
    cfg.validate()?;
    let nb = cfg.n_batches();
    let mut per_stream: Vec<(usize, Vec<T>)> = (0..cfg.streams.min(nb))
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(s as u64);
            let mine = (s..nb).step_by(cfg.streams).count();
            (s, (0..mine * cfg.batch_size).map(|_| draw(&mut rng)).collect())
        })
        .collect();
    per_stream.sort_by_key(|(s, _)| *s);
    // Interleave the streams' batches back into batch order.
    let mut iters: Vec<_> = per_stream.into_iter().map(|(_, v)| v.into_iter()).collect();
    let mut out = Vec::with_capacity(cfg.n_samples);
    for b in 0..nb {
        out.extend(iters[b % cfg.streams].by_ref().take(cfg.batch_size));
    }
    Ok(out)
}

fn single_stream(count: usize, seed: u64) -> Result<McConfig> {
    McConfig::new(count, count, seed, 1)
}

/// One joint observation: `x` is averaged, `y` is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub x: f64,
    pub y: f64,
}

/// NIG variates μ + βV + √V·N with V ~ IG(δ/√(α²−β²), δ²).
#[derive(Debug, Clone, Copy)]
pub struct NigSampler {
    ig: InverseGaussian<f64>,
    beta: f64,
    mu: f64,
}

impl NigSampler {
    pub fn new(params: &PghParams) -> Result<Self> {
        if !params.is_nig() {
            return Err(Error::Unsupported("only the NIG case λ = −1/2 can be sampled".into()));
        }
        let ig = InverseGaussian::new(params.delta / params.gamma(), params.delta * params.delta)
            .map_err(|e| invalid(format!("inverse Gaussian: {e}")))?;
        Ok(Self { ig, beta: params.beta, mu: params.mu })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let v = self.ig.sample(rng);
        let z: f64 = rng.sample(StandardNormal);
        self.mu + self.beta * v + v.sqrt() * z
    }
}

pub fn sample_nig(params: &PghParams, count: usize, seed: u64) -> Result<Vec<f64>> {
    let s = NigSampler::new(params)?;
    simulate(&single_stream(count, seed)?, |rng| s.draw(rng))
}

/// Component losses of a portfolio.
#[derive(Debug, Clone)]
pub enum PortfolioSampler {
    Nig { weights: Vec<f64>, comps: Vec<NigSampler> },
    Gaussian { weights: Vec<f64>, mean: DVector<f64>, chol: DMatrix<f64> },
}

impl PortfolioSampler {
    pub fn new(spec: &PortfolioSpec) -> Result<Self> {
        spec.validate()?;
        let weights = spec.weights.clone();
        Ok(match &spec.kind {
            PortfolioKind::Pgh(ps) => {
                PortfolioSampler::Nig { weights, comps: ps.iter().map(NigSampler::new).collect::<Result<_>>()? }
            }
            PortfolioKind::Gaussian { mean, cov } => {
                let m = mean.len();
                let s = DMatrix::from_fn(m, m, |i, j| cov[i][j]);
                let chol = s.cholesky().ok_or_else(|| invalid("covariance must be positive definite"))?.l();
                PortfolioSampler::Gaussian { weights, mean: DVector::from_column_slice(mean), chol }
            }
        })
    }

    /// (Lᵢ, L = Σ uⱼLⱼ) for one scenario.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, i: usize) -> Draw {
        match self {
            PortfolioSampler::Nig { weights, comps } => {
                let ls: Vec<f64> = comps.iter().map(|c| c.draw(rng)).collect();
                Draw { x: ls[i], y: ls.iter().zip(weights).map(|(l, u)| l * u).sum() }
            }
            PortfolioSampler::Gaussian { weights, mean, chol } => {
                let z = DVector::from_fn(mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
                let l = mean + chol * z;
                Draw { x: l[i], y: l.iter().zip(weights).map(|(l, u)| l * u).sum() }
            }
        }
    }
}

/// Scenarios of (Lᵢ, L).
pub fn sample_portfolio(spec: &PortfolioSpec, i: usize, cfg: &McConfig) -> Result<Vec<Draw>> {
    if i >= spec.len() {
        return Err(invalid(format!("component index {i} out of range")));
    }
    let s = PortfolioSampler::new(spec)?;
    simulate(cfg, |rng| s.draw(rng, i))
}

/// Scenarios of (∂Y/∂μᵢ, Y) from X ~ N(μ, Σ), Y = f₀ + aᵀX + XᵀBX, ∂Y/∂μᵢ = aᵢ + 2(BX)ᵢ.
pub fn sample_delta_gamma(dg: &DeltaGammaPortfolio, i: usize, cfg: &McConfig) -> Result<Vec<Draw>> {
    if i >= dg.dim() {
        return Err(invalid(format!("index {i} out of range")));
    }
    let m = dg.dim();
    simulate(cfg, |rng| {
        let z = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = &dg.mu + &dg.h_mat * z;
        let bx = &dg.b_mat * &x;
        Draw { x: dg.a_vec[i] + 2.0 * bx[i], y: dg.f0 + dg.a_vec.dot(&x) + x.dot(&bx) }
    })
}

/// Terminal (X₁(T), X₂(T)) of two independent VG processes θG + √κ·W(G).
pub fn sample_vg_pair(spec: &VgExchangeSpec, cfg: &McConfig) -> Result<Vec<(f64, f64)>> {
    spec.validate()?;
    let gamma = |v: f64| Gamma::new(spec.t / v, v).map_err(|e| invalid(format!("gamma clock: {e}")));
    let (g1, g2) = (gamma(spec.v1)?, gamma(spec.v2)?);
    let one = |rng: &mut ChaCha8Rng, g: &Gamma<f64>, theta: f64, kappa: f64| {
        let clock = g.sample(rng);
        let z: f64 = rng.sample(StandardNormal);
        theta * clock + (kappa * clock).sqrt() * z
    };
    simulate(cfg, |rng| {
        let x1 = one(rng, &g1, spec.theta1, spec.kappa1);
        let x2 = one(rng, &g2, spec.theta2, spec.kappa2);
        (x1, x2)
    })
}

/// Terminal (W₁(T), W₂(T)) with correlation ρ.
pub fn sample_gbm_drivers(spec: &GbmTwoAssetSpec, cfg: &McConfig) -> Result<Vec<(f64, f64)>> {
    spec.validate()?;
    let (rt, c) = (spec.t.sqrt(), (1.0 - spec.rho * spec.rho).sqrt());
    simulate(cfg, |rng| {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        (rt * z1, rt * (spec.rho * z1 + c * z2))
    })
}

/// Sample mean with a normal-theory interval.
pub fn mean_estimate(values: &[f64], level: f64) -> Result<McEstimate> {
    let n = values.len();
    if n < 2 {
        return Err(Error::EmptySample("need at least two values"));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    McEstimate::normal(mean, (var / n as f64).sqrt(), level)
}

/// E[e^{ηY}] estimated from a sample.
pub fn empirical_mgf(samples: &[f64], eta: f64, level: f64) -> Result<McEstimate> {
    let v: Vec<f64> = samples.iter().map(|y| (eta * y).exp()).collect();
    mean_estimate(&v, level)
}

/// Type-7 quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Empirical α-quantile with a distribution-free order-statistic interval.
pub fn mc_var(samples: &[f64], alpha: f64, level: f64) -> Result<McEstimate> {
    check_alpha(alpha)?;
    let n = samples.len();
    if n < 2 {
        return Err(Error::EmptySample("quantile needs at least two samples"));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let value = quantile_sorted(&s, alpha);
    let z = critical_value(level)?;
    let nf = n as f64;
    let half = z * (nf * alpha * (1.0 - alpha)).sqrt();
    let idx = |r: f64| (r.round().max(1.0).min(nf) as usize) - 1;
    let (lo, hi) = (s[idx(nf * alpha - half)], s[idx(nf * alpha + half + 1.0)]);
    // Symmetrized width as a standard error for reporting.
    Ok(McEstimate { value, std_error: (hi - lo) / (2.0 * z), ci_lo: lo.min(value), ci_hi: hi.max(value), level })
}

/// Batch IPA estimator of E[X | Y = v_α]: in each batch, the x paired with the
/// ⌈bα⌉-th order statistic of y; batch values are averaged.
pub fn ipa_var_sensitivity(draws: &[Draw], alpha: f64, batch_size: usize, level: f64) -> Result<McEstimate> {
    check_alpha(alpha)?;
    let min = (1.0 / (1.0 - alpha)).ceil() as usize;
    if batch_size < min {
        return Err(Error::BatchTooSmall { batch: batch_size, alpha, min });
    }
    let nb = draws.len() / batch_size;
    if nb < 2 {
        return Err(Error::EmptySample("IPA needs at least two full batches"));
    }
    let k = ((batch_size as f64 * alpha).ceil() as usize).clamp(1, batch_size) - 1;
    let per_batch: Vec<f64> = draws
        .par_chunks_exact(batch_size)
        .map(|batch| {
            let mut b = batch.to_vec();
            b.select_nth_unstable_by(k, |p, q| p.y.total_cmp(&q.y));
            b[k].x
        })
        .collect();
    mean_estimate(&per_batch, level)
}

/// Estimator of E[X | Y ≥ v̂_α] with v̂_α the empirical quantile.
pub fn ipa_cvar_sensitivity(draws: &[Draw], alpha: f64, level: f64) -> Result<McEstimate> {
    check_alpha(alpha)?;
    let ys: Vec<f64> = draws.iter().map(|d| d.y).collect();
    let v = mc_var(&ys, alpha, 0.5)?.value;
    let tail: Vec<f64> = draws.iter().filter(|d| d.y >= v).map(|d| d.x).collect();
    if tail.len() < 2 {
        return Err(Error::EmptySample("tail beyond the empirical quantile"));
    }
    mean_estimate(&tail, level)
}

/// Band estimator of E[X | Y ≈ a] over |Y − a| ≤ half_width.
pub fn mc_conditional_expectation(draws: &[Draw], a: f64, half_width: f64, level: f64) -> Result<McEstimate> {
    if !(half_width > 0.0) {
        return Err(invalid("half_width must be positive"));
    }
    let band: Vec<f64> = draws.iter().filter(|d| (d.y - a).abs() <= half_width).map(|d| d.x).collect();
    if band.len() < 2 {
        return Err(Error::EmptySample("no draws inside the band"));
    }
    mean_estimate(&band, level)
}

/// Pathwise vega e^{−rT}·∂S₁(T)/∂σ₁·1{S₁(T) > K}·1{S₂(T) > H}.
pub fn gbm_vega_pathwise(spec: &GbmTwoAssetSpec, cfg: &McConfig, level: f64) -> Result<McEstimate> {
    let w = sample_gbm_drivers(spec, cfg)?;
    gbm_vega_from_drivers(spec, &w, level)
}

/// Same as [`gbm_vega_pathwise`] on precomputed (W₁(T), W₂(T)); these depend on ρ and T only.
pub fn gbm_vega_from_drivers(spec: &GbmTwoAssetSpec, w: &[(f64, f64)], level: f64) -> Result<McEstimate> {
    spec.validate()?;
    let (s1, t) = (spec.sigma1, spec.t);
    let disc = (-spec.r * t).exp();
    let v: Vec<f64> = w
        .iter()
        .map(|&(w1, w2)| {
            let st1 = spec.s1 * ((spec.r1 - 0.5 * s1 * s1) * t + s1 * w1).exp();
            let st2 = spec.s2 * ((spec.r2 - 0.5 * spec.sigma2 * spec.sigma2) * t + spec.sigma2 * w2).exp();
            if st1 > spec.strike && st2 > spec.barrier {
                disc * st1 * (w1 - s1 * t)
            } else {
                0.0
            }
        })
        .collect();
    mean_estimate(&v, level)
}

/// Pathwise exchange-option vega e^{−rT}·S₁(T)X₁(T)·1{S₁(T) > S₂(T)}.
pub fn vg_vega_pathwise(spec: &VgExchangeSpec, cfg: &McConfig, level: f64) -> Result<McEstimate> {
    let xs = sample_vg_pair(spec, cfg)?;
    vg_vega_from_draws(spec, &xs, level)
}

/// Same as [`vg_vega_pathwise`] on precomputed VG draws (the draws do not depend on σ₁).
pub fn vg_vega_from_draws(spec: &VgExchangeSpec, xs: &[(f64, f64)], level: f64) -> Result<McEstimate> {
    let disc = (-spec.r * spec.t).exp();
    let v: Vec<f64> = xs
        .iter()
        .map(|&(x1, x2)| {
            let st1 = spec.s1 * (spec.r1 * spec.t + spec.sigma1 * x1).exp();
            let st2 = spec.s2 * (spec.r2 * spec.t + spec.sigma2 * x2).exp();
            if st1 > st2 {
                disc * st1 * x1
            } else {
                0.0
            }
        })
        .collect();
    mean_estimate(&v, level)
}

fn tight() -> QuadOptions {
    QuadOptions { abs_tol: 1e-14, rel_tol: 1e-13, max_intervals: 4000 }
}

/// E^Q[X·1{Y₁ > k}·1{Y₂ > h}] = σ₁TΦ̄(x̂, ŷ, ρ) + √T∬_{y₁>x̂, y₂>ŷ} y₁φ_ρ(y₁, y₂), by nested quadrature.
pub fn gbm_tail_mean_quadrature(spec: &GbmTwoAssetSpec) -> Result<f64> {
    spec.validate()?;
    let (x, y) = gbm_standardized_thresholds(spec);
    let rho = spec.rho;
    let c2 = 1.0 - rho * rho;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * c2.sqrt());
    let density = |a: f64, b: f64| norm * (-(a * a - 2.0 * rho * a * b + b * b) / (2.0 * c2)).exp();
    let outer =
        |y1: f64| integrate(|y2| density(y1, y2), y, f64::INFINITY, tight()).map(|r| y1 * r.value).unwrap_or(f64::NAN);
    let inner = integrate(outer, x, f64::INFINITY, tight())?.value;
    if !inner.is_finite() {
        return Err(Error::NonConvergence { what: "bivariate quadrature", iterations: 0 });
    }
    Ok(spec.sigma1 * spec.t * binorm_cdf_bar(x, y, rho) + spec.t.sqrt() * inner)
}

/// E^Q[X₁(T)·1{σ₁X₁(T) − σ₂X₂(T) > k}] by quadrature over the two gamma clocks.
/// Under Q, G₁ ~ Γ(T/v₁, v₁/(1 − v₁(θ₁σ₁ + κ₁σ₁²/2))) and X₁ | G₁ ~ N((θ₁ + κ₁σ₁)G₁, κ₁G₁).
pub fn vg_tail_mean_quadrature(spec: &VgExchangeSpec) -> Result<f64> {
    spec.validate()?;
    let (s1, s2) = (spec.sigma1, spec.sigma2);
    let tilt = 1.0 - spec.v1 * (spec.theta1 * s1 + 0.5 * spec.kappa1 * s1 * s1);
    if !(tilt > 0.0) {
        return Err(invalid(format!("sigma1 = {s1} outside the MGF existence region of X1")));
    }
    let gamma_pdf = |shape: f64, scale: f64| {
        let log_norm = -statrs::function::gamma::ln_gamma(shape) - shape * scale.ln();
        move |g: f64| if g <= 0.0 { 0.0 } else { (log_norm + (shape - 1.0) * g.ln() - g / scale).exp() }
    };
    let f1 = gamma_pdf(spec.t / spec.v1, spec.v1 / tilt);
    let f2 = gamma_pdf(spec.t / spec.v2, spec.v2);
    let k = spec.threshold();
    let drift1 = spec.theta1 + spec.kappa1 * s1;
    // Given both clocks, (X₁, Y) is Gaussian and E[X₁·1{Y > k}] = m₁Φ̄(z) + Cov(X₁, Y)φ(z)/sd(Y).
    let conditional = |g1: f64, g2: f64| {
        let (m1, v1) = (drift1 * g1, spec.kappa1 * g1);
        let my = s1 * m1 - s2 * spec.theta2 * g2;
        let sd = (s1 * s1 * v1 + s2 * s2 * spec.kappa2 * g2).sqrt();
        if sd == 0.0 {
            return if my > k { m1 } else { 0.0 };
        }
        let z = (k - my) / sd;
        m1 * norm_sf(z) + s1 * v1 / sd * norm_pdf(z)
    };
    let outer = |g1: f64| {
        let w = f1(g1);
        if w == 0.0 {
            return 0.0;
        }
        integrate(|g2| f2(g2) * conditional(g1, g2), 0.0, f64::INFINITY, tight())
            .map(|r| w * r.value)
            .unwrap_or(f64::NAN)
    };
    let value = integrate(outer, 0.0, f64::INFINITY, tight())?.value;
    if !value.is_finite() {
        return Err(Error::NonConvergence { what: "gamma-clock quadrature", iterations: 0 });
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cgf::{ScalarCgf, VgExchangeModel};
    use crate::greeks::{gbm_correlation_call_vega, vg_exchange_vega_at};

    fn cfg(n: usize, batch: usize, seed: u64, streams: usize) -> McConfig {
        McConfig::new(n, batch, seed, streams).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(McConfig::new(1000, 300, 1, 1).is_err());
        assert!(McConfig::new(1000, 100, 1, 0).is_err());
        assert_eq!(McConfig::new(1000, 100, 1, 3).unwrap().n_batches(), 10);
    }

    #[test]
    fn simulation_is_deterministic_and_thread_independent() {
        let c = cfg(10_000, 1_000, 7, 3);
        let draw = |rng: &mut ChaCha8Rng| rng.random::<f64>();
        let a = simulate(&c, draw).unwrap();
        let b = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| simulate(&c, draw).unwrap());
        assert_eq!(a, b);
        let other = simulate(&cfg(10_000, 1_000, 8, 3), draw).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn nig_sample_mean_and_mgf() {
        let p = PghParams::nig(2.5, -0.2, 1.0, 0.5).unwrap();
        let xs = sample_nig(&p, 400_000, 11).unwrap();
        let m = mean_estimate(&xs, 0.9973).unwrap();
        assert!(m.contains(p.mean()), "{m:?} vs {}", p.mean());
        assert!(sample_nig(&PghParams::new(1.0, 2.0, 0.1, 1.0, 0.0).unwrap(), 10, 1).is_err());
        let comp = crate::cgf::PghComponent::new(p, 1.0).unwrap();
        for eta in [-0.8, 0.5, 1.0] {
            let e = empirical_mgf(&xs, eta, 0.9973).unwrap();
            assert!(e.contains(comp.deriv(eta, 0).unwrap().exp()), "eta={eta}: {e:?}");
        }
    }

    #[test]
    fn delta_gamma_draws_match_the_model() {
        let dg = DeltaGammaPortfolio::reference();
        let draws = sample_delta_gamma(&dg, 0, &cfg(200_000, 20_000, 3, 4)).unwrap();
        let xs: Vec<f64> = draws.iter().map(|d| d.x).collect();
        let ys: Vec<f64> = draws.iter().map(|d| d.y).collect();
        assert!(mean_estimate(&xs, 0.9973).unwrap().contains(dg.partial_mean(0)));
        assert!(mean_estimate(&ys, 0.9973).unwrap().contains(dg.mean_y()));
        let cgf = dg.cgf(0).unwrap();
        for eta in [-2.0, 1.0, 3.0] {
            let e = empirical_mgf(&ys, eta, 0.9973).unwrap();
            assert!(e.contains(cgf.ky_deriv(eta, 0).unwrap().exp()), "eta={eta}: {e:?}");
        }
    }

    #[test]
    fn vg_draws_match_the_model() {
        let spec = VgExchangeSpec::reference(0.5);
        let xs = sample_vg_pair(&spec, &cfg(200_000, 10_000, 5, 2)).unwrap();
        let (m1, m2) = spec.marginals().unwrap();
        for (k, m) in [(0usize, m1), (1, m2)] {
            let v: Vec<f64> = xs.iter().map(|p| if k == 0 { p.0 } else { p.1 }).collect();
            for g in [-0.5, 0.7] {
                let e = empirical_mgf(&v, g, 0.9973).unwrap();
                assert!(e.contains(m.deriv(g, 0).unwrap().exp()), "k={k} g={g}: {e:?}");
            }
        }
    }

    #[test]
    fn gaussian_quantile_and_estimators() {
        let spec = PortfolioSpec::new(
            vec![1.0, 2.0],
            PortfolioKind::Gaussian { mean: vec![0.0, 0.5], cov: vec![vec![1.0, 0.4], vec![0.4, 0.5]] },
        )
        .unwrap();
        let draws = sample_portfolio(&spec, 0, &cfg(400_000, 2_000, 9, 4)).unwrap();
        // L ~ N(1, 1 + 4·0.5 + 4·0.4) and Cov(L₀, L) = 1 + 0.8
        let (mean, var, cov): (f64, f64, f64) = (1.0, 4.6, 1.8);
        let ys: Vec<f64> = draws.iter().map(|d| d.y).collect();
        let alpha = 0.95;
        let q = mc_var(&ys, alpha, 0.9973).unwrap();
        let v = mean + var.sqrt() * norm_inv(alpha);
        assert!(q.contains(v), "{q:?} vs {v}");
        let ipa = ipa_var_sensitivity(&draws, alpha, 2_000, 0.9973).unwrap();
        let want = cov / var * (v - mean);
        assert!(ipa.contains(want), "{ipa:?} vs {want}");
        let w = (v - mean) / var.sqrt();
        let want_tail = cov / var.sqrt() * norm_pdf(w) / norm_sf(w);
        let tail = ipa_cvar_sensitivity(&draws, alpha, 0.9973).unwrap();
        assert!((tail.value - want_tail).abs() < 4.0 * tail.std_error + 0.01, "{tail:?} vs {want_tail}");
        let band = mc_conditional_expectation(&draws, 2.0, 0.05, 0.9973).unwrap();
        assert!(band.contains(cov / var * (2.0 - mean)), "{band:?}");
        assert!(matches!(ipa_var_sensitivity(&draws, 0.99, 50, 0.95), Err(Error::BatchTooSmall { min: 100, .. })));
    }

    #[test]
    fn gbm_quadrature_and_pathwise_agree_with_expansion() {
        let spec = GbmTwoAssetSpec {
            s1: 100.0,
            s2: 100.0,
            strike: 150.0,
            barrier: 140.0,
            r: 0.03,
            r1: 0.03,
            r2: 0.01,
            sigma1: 0.25,
            sigma2: 0.3,
            rho: 0.5,
            t: 1.0,
        };
        let spa = gbm_correlation_call_vega(&spec, 1).unwrap();
        let quad = gbm_tail_mean_quadrature(&spec).unwrap();
        assert!((spa.tail_mean - quad).abs() < 1e-10, "{} vs {quad}", spa.tail_mean);
        let mc = gbm_vega_pathwise(&spec, &cfg(400_000, 20_000, 2, 4), 0.9973).unwrap();
        assert!(mc.contains(spa.value), "{mc:?} vs {}", spa.value);
    }

    #[test]
    fn vg_quadrature_close_to_expansion() {
        for s1 in [0.3, 0.8, 1.5] {
            let spec = VgExchangeSpec::reference(s1);
            let quad = vg_tail_mean_quadrature(&spec).unwrap();
            let spa = vg_exchange_vega_at(&spec).unwrap().tail_mean;
            assert!((spa - quad).abs() < 1e-2 * quad.abs(), "σ₁={s1}: {spa} vs {quad}");
            // the quadrature reproduces the Q-mean of X₁ with no indicator
            let model = VgExchangeModel::new(&spec).unwrap();
            let no_cut = vg_tail_mean_quadrature(&VgExchangeSpec { s2: 1e-300, ..spec }).unwrap();
            assert!((no_cut - model.mean_x()).abs() < 1e-8, "{no_cut} vs {}", model.mean_x());
        }
    }
}
