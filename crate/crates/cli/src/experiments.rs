//! The four desk-scale experiments. Each grid point is evaluated on the
//! worker pool; rows come back in grid order.

use rayon::prelude::*;

use saddlerisk_core::cgf::GbmTwoAssetSpec;
use saddlerisk_core::greeks::{gbm_correlation_call_vega, vg_exchange_vega_at};
use saddlerisk_core::oracle::{
    gbm_tail_mean_quadrature, gbm_vega_from_drivers, ipa_cvar_sensitivity, ipa_var_sensitivity, mc_var,
    sample_delta_gamma, sample_gbm_drivers, sample_portfolio, sample_vg_pair, vg_tail_mean_quadrature,
    vg_vega_from_draws, Draw, McConfig, McEstimate,
};
use saddlerisk_core::risk::{
    dg_cvar_sens, dg_var_sens, euler_contrib_cvar, euler_contrib_var, martin_contrib_var, var_spa, TailDenominator,
};
use saddlerisk_core::Error;

use crate::config::{ConfigError, ExperimentKind, RunConfig};
use crate::table::{rel_diff, Cell, Table};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    /// A failure that aborts the whole sweep, such as a sampler error.
    Numerical(Error),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Numerical(e)
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "config error: {e}"),
            RunError::Numerical(e) => write!(f, "numerical error: {e}"),
        }
    }
}

pub const RISK_COLUMNS: [&str; 11] = [
    "measure",
    "alpha",
    "mc_var",
    "spa_var",
    "spa_from_mc_var",
    "spa_from_spa_var",
    "martin",
    "ipa",
    "ipa_ci_lo",
    "ipa_ci_hi",
    "rel_diff",
];

pub const GBM_COLUMNS: [&str; 13] = [
    "strike",
    "barrier",
    "rho",
    "eta1",
    "eta2",
    "spa_tail_mean",
    "quad_tail_mean",
    "tail_abs_diff",
    "spa_vega",
    "mc_vega",
    "mc_ci_lo",
    "mc_ci_hi",
    "rel_diff",
];

pub const VG_COLUMNS: [&str; 10] = [
    "sigma1",
    "eta_hat",
    "saddle_residual",
    "spa_tail_mean",
    "quad_tail_mean",
    "spa_vega",
    "mc_vega",
    "mc_ci_lo",
    "mc_ci_hi",
    "rel_diff",
];

/// Runs a non-`check` experiment.
pub fn run(cfg: &RunConfig) -> Result<Table, RunError> {
    match cfg.experiment.name {
        ExperimentKind::ContribNig => contrib(cfg),
        ExperimentKind::DgSens => dg_sens(cfg),
        ExperimentKind::GbmVega => gbm_vega(cfg),
        ExperimentKind::VgVega => vg_vega(cfg),
        ExperimentKind::Check => Err(ConfigError("the check experiment is run by `saddlerisk check`".into()).into()),
    }
}

fn estimate_cells(e: &Result<McEstimate, Error>) -> [Cell; 3] {
    match e {
        Ok(e) => [e.value.into(), e.ci_lo.into(), e.ci_hi.into()],
        Err(err) => [err.into(), err.into(), err.into()],
    }
}

/// Draws together with their losses.
type Sampled = (Vec<Draw>, Vec<f64>);

/// Monte Carlo draws, or `None` when n > 1: the oracle simulates single observations.
fn draws_if_single<F>(cfg: &RunConfig, sample: F) -> Result<Option<Sampled>, RunError>
where
    F: FnOnce(&McConfig) -> Result<Vec<Draw>, Error>,
{
    if cfg.experiment.n != 1 {
        return Ok(None);
    }
    let draws = sample(&cfg.mc_config()?)?;
    let ys = draws.iter().map(|d| d.y).collect();
    Ok(Some((draws, ys)))
}

/// Shared row layout of the two risk experiments; `martin` is `None` for delta-gamma.
struct RiskPoint {
    alpha: f64,
    mc_var: Cell,
    spa_var: Cell,
    from_mc: Cell,
    from_spa: Cell,
    martin: Option<Cell>,
    ipa: [Cell; 3],
}

fn risk_row(measure: &str, p: RiskPoint, with_martin: bool) -> Vec<Cell> {
    let rd = rel_diff(&p.from_spa, &p.ipa[0]);
    let [ipa, lo, hi] = p.ipa;
    let mut row = vec![measure.into(), p.alpha.into(), p.mc_var, p.spa_var, p.from_mc, p.from_spa];
    if with_martin {
        row.push(p.martin.unwrap_or(Cell::Err("na")));
    }
    row.extend([ipa, lo, hi, rd]);
    row
}

fn risk_table(with_martin: bool, points: Vec<(RiskPoint, RiskPoint)>) -> Table {
    let header: Vec<&'static str> = RISK_COLUMNS.iter().copied().filter(|c| with_martin || *c != "martin").collect();
    let mut t = Table::new(header);
    for (var, cvar) in points {
        t.push(risk_row("var", var, with_martin));
        t.push(risk_row("cvar", cvar, with_martin));
    }
    t
}

fn ok_cell(r: &Result<f64, Error>) -> Cell {
    match r {
        Ok(x) => Cell::Num(*x),
        Err(e) => e.into(),
    }
}

fn na_ipa() -> [Cell; 3] {
    [Cell::Err("na"), Cell::Err("na"), Cell::Err("na")]
}

fn contrib(cfg: &RunConfig) -> Result<Table, RunError> {
    let (portfolio, i) = cfg.portfolio()?;
    let grid = cfg.alpha_grid()?;
    let (n, level, batch) = (cfg.experiment.n, cfg.experiment.level, cfg.mc.batch);
    let loss = portfolio.loss()?;
    let mc = draws_if_single(cfg, |m| sample_portfolio(&portfolio, i, m))?;
    let points = grid
        .par_iter()
        .map(|&alpha| {
            let spa_v = var_spa(&loss, alpha, n);
            let mc_v = match &mc {
                Some((_, ys)) => mc_var(ys, alpha, level).map(|e| e.value),
                None => Err(Error::Unsupported("n > 1".into())),
            };
            let at = |v: &Result<f64, Error>, f: &dyn Fn(f64) -> Result<f64, Error>| match v {
                Ok(v) => f(*v).into(),
                Err(e) => Cell::from(e),
            };
            let na_if_multi = |c: Cell| if mc.is_some() { c } else { Cell::Err("na") };
            let (ipa_var, ipa_cvar) = match &mc {
                Some((draws, _)) => (
                    estimate_cells(&ipa_var_sensitivity(draws, alpha, batch, level)),
                    estimate_cells(&ipa_cvar_sensitivity(draws, alpha, level)),
                ),
                None => (na_ipa(), na_ipa()),
            };
            let var = RiskPoint {
                alpha,
                mc_var: na_if_multi(ok_cell(&mc_v)),
                spa_var: ok_cell(&spa_v),
                from_mc: na_if_multi(at(&mc_v, &|v| euler_contrib_var(&portfolio, i, v, n))),
                from_spa: at(&spa_v, &|v| euler_contrib_var(&portfolio, i, v, n)),
                martin: Some(at(&spa_v, &|v| martin_contrib_var(&portfolio, i, v))),
                ipa: ipa_var,
            };
            // At the MC VaR the SPA tail probability is not exactly 1 − α.
            let cvar = RiskPoint {
                alpha,
                mc_var: na_if_multi(ok_cell(&mc_v)),
                spa_var: ok_cell(&spa_v),
                from_mc: na_if_multi(at(&mc_v, &|v| {
                    euler_contrib_cvar(&portfolio, i, v, alpha, n, TailDenominator::Spa)
                })),
                from_spa: at(&spa_v, &|v| {
                    euler_contrib_cvar(&portfolio, i, v, alpha, n, TailDenominator::OneMinusAlpha)
                }),
                martin: None,
                ipa: ipa_cvar,
            };
            (var, cvar)
        })
        .collect();
    Ok(risk_table(true, points))
}

fn dg_sens(cfg: &RunConfig) -> Result<Table, RunError> {
    let (dg, i) = cfg.delta_gamma()?;
    let grid = cfg.alpha_grid()?;
    let (n, level, batch) = (cfg.experiment.n, cfg.experiment.level, cfg.mc.batch);
    let cgf = dg.cgf(i)?;
    let mc = draws_if_single(cfg, |m| sample_delta_gamma(&dg, i, m))?;
    let points = grid
        .par_iter()
        .map(|&alpha| {
            let spa_v = var_spa(&cgf, alpha, n);
            let mc_v = match &mc {
                Some((_, ys)) => mc_var(ys, alpha, level).map(|e| e.value),
                None => Err(Error::Unsupported("n > 1".into())),
            };
            let at = |v: &Result<f64, Error>, f: &dyn Fn(f64) -> Result<f64, Error>| match v {
                Ok(v) => f(*v).into(),
                Err(e) => Cell::from(e),
            };
            let na_if_multi = |c: Cell| if mc.is_some() { c } else { Cell::Err("na") };
            let (ipa_var, ipa_cvar) = match &mc {
                Some((draws, _)) => (
                    estimate_cells(&ipa_var_sensitivity(draws, alpha, batch, level)),
                    estimate_cells(&ipa_cvar_sensitivity(draws, alpha, level)),
                ),
                None => (na_ipa(), na_ipa()),
            };
            let point = |sens: &dyn Fn(f64) -> Result<f64, Error>, ipa| RiskPoint {
                alpha,
                mc_var: na_if_multi(ok_cell(&mc_v)),
                spa_var: ok_cell(&spa_v),
                from_mc: na_if_multi(at(&mc_v, sens)),
                from_spa: at(&spa_v, sens),
                martin: None,
                ipa,
            };
            (point(&|v| dg_var_sens(&dg, i, v, n), ipa_var), point(&|v| dg_cvar_sens(&dg, i, v, alpha, n), ipa_cvar))
        })
        .collect();
    Ok(risk_table(false, points))
}

fn gbm_vega(cfg: &RunConfig) -> Result<Table, RunError> {
    let specs = cfg.gbm_specs()?;
    let (n, level) = (cfg.experiment.n, cfg.experiment.level);
    let mc = cfg.mc_config()?;
    let mut t = Table::new(GBM_COLUMNS.to_vec());
    // Drivers depend on ρ only, so consecutive specs with equal ρ share them.
    let mut drivers: Option<(f64, Vec<(f64, f64)>)> = None;
    let mut chunks: Vec<Vec<GbmTwoAssetSpec>> = Vec::new();
    for s in specs {
        match chunks.last_mut() {
            Some(c) if c[0].rho == s.rho => c.push(s),
            _ => chunks.push(vec![s]),
        }
    }
    for chunk in chunks {
        let rho = chunk[0].rho;
        if drivers.as_ref().map(|d| d.0) != Some(rho) {
            drivers = Some((rho, sample_gbm_drivers(&chunk[0], &mc)?));
        }
        let w = &drivers.as_ref().expect("drivers were just sampled").1;
        let rows: Vec<Vec<Cell>> = chunk
            .par_iter()
            .map(|s| {
                let spa = gbm_correlation_call_vega(s, n);
                let quad = gbm_tail_mean_quadrature(s);
                let est = estimate_cells(&gbm_vega_from_drivers(s, w, level));
                let (eta, tail, vega) = match &spa {
                    Ok(v) => ([v.eta_hat[0].into(), v.eta_hat[1].into()], Cell::Num(v.tail_mean), Cell::Num(v.value)),
                    Err(e) => ([e.into(), e.into()], e.into(), e.into()),
                };
                let tail_diff = match (&tail, &quad) {
                    (Cell::Num(a), Ok(b)) => Cell::Num((a - b).abs()),
                    (Cell::Err(c), _) => Cell::Err(c),
                    (_, Err(e)) => e.into(),
                    _ => Cell::Err("na"),
                };
                let rd = rel_diff(&vega, &est[0]);
                let [eta1, eta2] = eta;
                let [m, lo, hi] = est;
                vec![
                    s.strike.into(),
                    s.barrier.into(),
                    s.rho.into(),
                    eta1,
                    eta2,
                    tail,
                    ok_cell(&quad),
                    tail_diff,
                    vega,
                    m,
                    lo,
                    hi,
                    rd,
                ]
            })
            .collect();
        for r in rows {
            t.push(r);
        }
    }
    Ok(t)
}

fn vg_vega(cfg: &RunConfig) -> Result<Table, RunError> {
    let grid = cfg.sigma1_grid()?;
    let level = cfg.experiment.level;
    // The draws of (X₁(T), X₂(T)) do not depend on σ₁.
    let xs = sample_vg_pair(&cfg.vg_spec(grid[0])?, &cfg.mc_config()?)?;
    let specs = grid.iter().map(|&s| cfg.vg_spec(s)).collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<Vec<Cell>> = specs
        .par_iter()
        .map(|spec| {
            let spa = vg_exchange_vega_at(spec);
            let quad = vg_tail_mean_quadrature(spec);
            let est = estimate_cells(&vg_vega_from_draws(spec, &xs, level));
            let cells: [Cell; 4] = match &spa {
                Ok(v) => [v.eta_hat.into(), v.saddle_residual.into(), v.tail_mean.into(), v.value.into()],
                Err(e) => [e.into(), e.into(), e.into(), e.into()],
            };
            let [eta, resid, tail, vega] = cells;
            let rd = rel_diff(&vega, &est[0]);
            let [m, lo, hi] = est;
            vec![spec.sigma1.into(), eta, resid, tail, ok_cell(&quad), vega, m, lo, hi, rd]
        })
        .collect();
    let mut t = Table::new(VG_COLUMNS.to_vec());
    for r in rows {
        t.push(r);
    }
    Ok(t)
}
