//! TOML run configuration.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use saddlerisk_core::cgf::{DeltaGammaPortfolio, GbmTwoAssetSpec, PghParams, VgExchangeSpec};
use saddlerisk_core::oracle::McConfig;
use saddlerisk_core::risk::{PortfolioKind, PortfolioSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ContribNig,
    DgSens,
    GbmVega,
    VgVega,
    Check,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentTable,
    #[serde(default)]
    pub mc: McTable,
    pub portfolio: Option<PortfolioTable>,
    pub delta_gamma: Option<DeltaGammaTable>,
    pub gbm: Option<GbmTable>,
    pub vg: Option<VgTable>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentTable {
    pub name: ExperimentKind,
    #[serde(default = "one")]
    pub n: usize,
    pub alpha_grid: Option<Vec<f64>>,
    pub sigma1_grid: Option<Vec<f64>>,
    pub output: Option<PathBuf>,
    /// Confidence level of reported Monte Carlo intervals.
    #[serde(default = "default_level")]
    pub level: f64,
    /// Smaller sample sizes for the `check` experiment.
    #[serde(default)]
    pub fast: bool,
}

fn one() -> usize {
    1
}

fn default_level() -> f64 {
    0.95
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McTable {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_streams")]
    pub streams: usize,
}

impl Default for McTable {
    fn default() -> Self {
        let d = McConfig::default();
        Self { samples: d.n_samples, batch: d.batch_size, seed: d.seed, streams: d.streams }
    }
}

fn default_samples() -> usize {
    McConfig::default().n_samples
}
fn default_batch() -> usize {
    McConfig::default().batch_size
}
fn default_seed() -> u64 {
    McConfig::default().seed
}
fn default_streams() -> usize {
    McConfig::default().streams
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PghTable {
    #[serde(default = "nig_lambda")]
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub mu: f64,
}

fn nig_lambda() -> f64 {
    -0.5
}

/// Either NIG/pGH `components` or a Gaussian `mean` and `cov`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortfolioTable {
    pub weights: Vec<f64>,
    /// 1-based index of the component whose contribution is reported.
    pub component: usize,
    pub components: Option<Vec<PghTable>>,
    pub mean: Option<Vec<f64>>,
    pub cov: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaGammaTable {
    pub f0: f64,
    pub a: Vec<f64>,
    pub b: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
    /// 1-based index of the factor mean μᵢ.
    pub factor: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GbmTable {
    pub s1: f64,
    pub s2: f64,
    pub r: f64,
    pub r1: f64,
    pub r2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub t: f64,
    pub rho: Vec<f64>,
    pub strikes: Vec<f64>,
    pub barriers: Vec<f64>,
}

impl GbmTable {
    /// Out-of-the-money grid on which both saddlepoint coordinates are positive.
    pub fn reference() -> Self {
        let grid: Vec<f64> = (0..5).map(|k| 140.0 + 5.0 * k as f64).collect();
        Self {
            s1: 100.0,
            s2: 100.0,
            r: 0.03,
            r1: 0.03,
            r2: 0.01,
            sigma1: 0.25,
            sigma2: 0.3,
            t: 1.0,
            rho: vec![-0.5, 0.0, 0.5],
            strikes: grid.clone(),
            barriers: grid,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VgTable {
    pub s1: f64,
    pub s2: f64,
    pub r: f64,
    pub r1: f64,
    pub r2: f64,
    pub sigma2: f64,
    #[serde(default)]
    pub theta1: f64,
    #[serde(default)]
    pub theta2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub v1: f64,
    pub v2: f64,
    pub t: f64,
}

/// A configuration problem; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

pub fn parse(text: &str, origin: &Path) -> Result<RunConfig, ConfigError> {
    // toml's error display carries the line and column.
    let cfg: RunConfig = toml::from_str(text).map_err(|e| bad(format!("{}: {e}", origin.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    parse(&text, path)
}

fn check_grid(name: &str, grid: &[f64]) -> Result<(), ConfigError> {
    if grid.is_empty() {
        return Err(bad(format!("{name} must not be empty")));
    }
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad(format!("{name} must be finite and strictly increasing")));
    }
    Ok(())
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let e = &self.experiment;
        if e.n == 0 {
            return Err(bad("experiment.n must be at least 1"));
        }
        if !(e.level > 0.0 && e.level < 1.0) {
            return Err(bad("experiment.level must lie in (0, 1)"));
        }
        self.mc_config()?;
        match e.name {
            ExperimentKind::ContribNig | ExperimentKind::DgSens => {
                let grid = self.alpha_grid()?;
                check_grid("experiment.alpha_grid", &grid)?;
                if grid.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
                    return Err(bad("alpha_grid values must lie in (0, 1)"));
                }
                if e.name == ExperimentKind::ContribNig {
                    self.portfolio()?;
                } else {
                    self.delta_gamma()?;
                }
            }
            ExperimentKind::GbmVega => {
                let g = self.gbm_table();
                check_grid("gbm.strikes", &g.strikes)?;
                check_grid("gbm.barriers", &g.barriers)?;
                check_grid("gbm.rho", &g.rho)?;
            }
            ExperimentKind::VgVega => {
                check_grid("experiment.sigma1_grid", &self.sigma1_grid()?)?;
                self.vg_spec(1.0)?.validate().map_err(|e| bad(format!("[vg]: {e}")))?;
            }
            ExperimentKind::Check => {}
        }
        Ok(())
    }

    pub fn mc_config(&self) -> Result<McConfig, ConfigError> {
        let m = &self.mc;
        McConfig::new(m.samples, m.batch, m.seed, m.streams).map_err(|e| bad(format!("[mc]: {e}")))
    }

    pub fn alpha_grid(&self) -> Result<Vec<f64>, ConfigError> {
        match &self.experiment.alpha_grid {
            Some(g) => Ok(g.clone()),
            None => Ok((0..10).map(|k| 0.90 + 0.01 * k as f64).collect()),
        }
    }

    pub fn sigma1_grid(&self) -> Result<Vec<f64>, ConfigError> {
        self.experiment.sigma1_grid.clone().ok_or_else(|| bad("vg-vega needs experiment.sigma1_grid"))
    }

    /// Portfolio and the 0-based reported component.
    pub fn portfolio(&self) -> Result<(PortfolioSpec, usize), ConfigError> {
        let p = match &self.portfolio {
            None => return Ok((PortfolioSpec::nig_example(), 2)),
            Some(p) => p,
        };
        let kind = match (&p.components, &p.mean, &p.cov) {
            (Some(c), None, None) => PortfolioKind::Pgh(
                c.iter()
                    .map(|t| PghParams::new(t.lambda, t.alpha, t.beta, t.delta, t.mu))
                    .collect::<Result<_, _>>()
                    .map_err(|e| bad(format!("[portfolio]: {e}")))?,
            ),
            (None, Some(mean), Some(cov)) => PortfolioKind::Gaussian { mean: mean.clone(), cov: cov.clone() },
            _ => return Err(bad("[portfolio] needs either `components` or both `mean` and `cov`")),
        };
        let spec = PortfolioSpec::new(p.weights.clone(), kind).map_err(|e| bad(format!("[portfolio]: {e}")))?;
        if p.component == 0 || p.component > spec.len() {
            return Err(bad(format!("portfolio.component must lie in 1..={}", spec.len())));
        }
        Ok((spec, p.component - 1))
    }

    pub fn delta_gamma(&self) -> Result<(DeltaGammaPortfolio, usize), ConfigError> {
        let t = match &self.delta_gamma {
            None => return Ok((DeltaGammaPortfolio::reference(), 0)),
            Some(t) => t,
        };
        let dg = DeltaGammaPortfolio::new(t.f0, &t.a, &t.b, &t.mu, &t.sigma)
            .map_err(|e| bad(format!("[delta_gamma]: {e}")))?;
        if t.factor == 0 || t.factor > dg.dim() {
            return Err(bad(format!("delta_gamma.factor must lie in 1..={}", dg.dim())));
        }
        Ok((dg, t.factor - 1))
    }

    pub fn gbm_specs(&self) -> Result<Vec<GbmTwoAssetSpec>, ConfigError> {
        let g = self.gbm_table();
        let mut out = Vec::new();
        for &rho in &g.rho {
            for &strike in &g.strikes {
                for &barrier in &g.barriers {
                    let s = GbmTwoAssetSpec {
                        s1: g.s1,
                        s2: g.s2,
                        strike,
                        barrier,
                        r: g.r,
                        r1: g.r1,
                        r2: g.r2,
                        sigma1: g.sigma1,
                        sigma2: g.sigma2,
                        rho,
                        t: g.t,
                    };
                    s.validate().map_err(|e| bad(format!("[gbm]: {e}")))?;
                    out.push(s);
                }
            }
        }
        Ok(out)
    }

    pub fn gbm_table(&self) -> GbmTable {
        self.gbm.clone().unwrap_or_else(GbmTable::reference)
    }

    pub fn vg_spec(&self, sigma1: f64) -> Result<VgExchangeSpec, ConfigError> {
        Ok(match &self.vg {
            None => VgExchangeSpec::reference(sigma1),
            Some(v) => VgExchangeSpec {
                s1: v.s1,
                s2: v.s2,
                r: v.r,
                r1: v.r1,
                r2: v.r2,
                sigma1,
                sigma2: v.sigma2,
                theta1: v.theta1,
                theta2: v.theta2,
                kappa1: v.kappa1,
                kappa2: v.kappa2,
                v1: v.v1,
                v2: v.v2,
                t: v.t,
            },
        })
    }
}
