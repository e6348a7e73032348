//! Python bindings: NIG portfolio risk and contributions, delta-gamma
//! sensitivities and the two option vegas.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use saddlerisk_core::cgf::{DeltaGammaPortfolio, GbmTwoAssetSpec, PghParams, VgExchangeSpec};
use saddlerisk_core::greeks::{gbm_correlation_call_vega, vg_exchange_vega_at};
use saddlerisk_core::risk::{
    cvar_spa, dg_cvar_sens, dg_var_sens, euler_contrib_cvar, euler_contrib_var, var_spa, PortfolioKind, PortfolioSpec,
    TailDenominator,
};
use saddlerisk_core::Error;

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(format!("{}: {e}", e.code()))
}

fn denominator(name: &str) -> PyResult<TailDenominator> {
    match name {
        "one-minus-alpha" => Ok(TailDenominator::OneMinusAlpha),
        "spa" => Ok(TailDenominator::Spa),
        _ => Err(PyValueError::new_err(format!("denominator must be 'one-minus-alpha' or 'spa', got {name:?}"))),
    }
}

/// Weighted portfolio of independent NIG losses.
#[pyclass(frozen)]
struct NigPortfolio {
    spec: PortfolioSpec,
}

#[pymethods]
impl NigPortfolio {
    /// `components` holds (alpha, beta, delta, mu) per loss.
    #[new]
    fn new(components: Vec<(f64, f64, f64, f64)>, weights: Vec<f64>) -> PyResult<Self> {
        let comps = components
            .into_iter()
            .map(|(a, b, d, m)| PghParams::nig(a, b, d, m))
            .collect::<Result<Vec<_>, _>>()
            .map_err(py_err)?;
        let spec = PortfolioSpec::new(weights, PortfolioKind::Pgh(comps)).map_err(py_err)?;
        Ok(Self { spec })
    }

    /// The three-component example portfolio.
    #[staticmethod]
    fn example() -> Self {
        Self { spec: PortfolioSpec::nig_example() }
    }

    fn __len__(&self) -> usize {
        self.spec.len()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.spec.weights.clone()
    }

    #[pyo3(signature = (alpha, n = 1))]
    fn var(&self, alpha: f64, n: usize) -> PyResult<f64> {
        var_spa(&self.spec.loss().map_err(py_err)?, alpha, n).map_err(py_err)
    }

    #[pyo3(signature = (v, alpha, n = 1, denominator = "one-minus-alpha"))]
    fn cvar(&self, v: f64, alpha: f64, n: usize, denominator: &str) -> PyResult<f64> {
        let d = self::denominator(denominator)?;
        cvar_spa(&self.spec.loss().map_err(py_err)?, v, alpha, n, d).map_err(py_err)
    }

    /// E[Lᵢ | L = v] for every component.
    #[pyo3(signature = (v, n = 1))]
    fn var_contributions(&self, v: f64, n: usize) -> PyResult<Vec<f64>> {
        (0..self.spec.len()).map(|i| euler_contrib_var(&self.spec, i, v, n).map_err(py_err)).collect()
    }

    /// E[Lᵢ | L ≥ v] for every component.
    #[pyo3(signature = (v, alpha, n = 1, denominator = "one-minus-alpha"))]
    fn cvar_contributions(&self, v: f64, alpha: f64, n: usize, denominator: &str) -> PyResult<Vec<f64>> {
        let d = self::denominator(denominator)?;
        (0..self.spec.len()).map(|i| euler_contrib_cvar(&self.spec, i, v, alpha, n, d).map_err(py_err)).collect()
    }
}

/// VaR of a delta-gamma portfolio and the sensitivities of VaR and CVaR to
/// the mean of one factor (0-based).
#[pyfunction]
#[pyo3(signature = (f0, a, b, mu, sigma, factor, alpha, n = 1))]
#[allow(clippy::too_many_arguments)]
fn delta_gamma_sensitivities<'py>(
    py: Python<'py>,
    f0: f64,
    a: Vec<f64>,
    b: Vec<Vec<f64>>,
    mu: Vec<f64>,
    sigma: Vec<Vec<f64>>,
    factor: usize,
    alpha: f64,
    n: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let dg = DeltaGammaPortfolio::new(f0, &a, &b, &mu, &sigma).map_err(py_err)?;
    let v = var_spa(&dg.cgf(factor).map_err(py_err)?, alpha, n).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("var", v)?;
    out.set_item("var_sensitivity", dg_var_sens(&dg, factor, v, n).map_err(py_err)?)?;
    out.set_item("cvar_sensitivity", dg_cvar_sens(&dg, factor, v, alpha, n).map_err(py_err)?)?;
    Ok(out)
}

/// Vega of a two-asset correlation call under GBM.
#[pyfunction]
#[pyo3(signature = (s1, s2, strike, barrier, r, r1, r2, sigma1, sigma2, rho, t, n = 1))]
#[allow(clippy::too_many_arguments)]
fn gbm_vega<'py>(
    py: Python<'py>,
    s1: f64,
    s2: f64,
    strike: f64,
    barrier: f64,
    r: f64,
    r1: f64,
    r2: f64,
    sigma1: f64,
    sigma2: f64,
    rho: f64,
    t: f64,
    n: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = GbmTwoAssetSpec { s1, s2, strike, barrier, r, r1, r2, sigma1, sigma2, rho, t };
    let v = gbm_correlation_call_vega(&spec, n).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("vega", v.value)?;
    out.set_item("tail_mean", v.tail_mean)?;
    out.set_item("tail_prob", v.tail_prob)?;
    out.set_item("eta_hat", v.eta_hat.to_vec())?;
    Ok(out)
}

/// Vega of an exchange option under variance gamma. Unset parameters take
/// the reference instance values.
#[pyfunction]
#[pyo3(signature = (sigma1, **overrides))]
fn vg_vega<'py>(py: Python<'py>, sigma1: f64, overrides: Option<&Bound<'py, PyDict>>) -> PyResult<Bound<'py, PyDict>> {
    let mut spec = VgExchangeSpec::reference(sigma1);
    if let Some(kw) = overrides {
        for (k, v) in kw.iter() {
            let key: String = k.extract()?;
            let value: f64 = v.extract()?;
            let slot = match key.as_str() {
                "s1" => &mut spec.s1,
                "s2" => &mut spec.s2,
                "r" => &mut spec.r,
                "r1" => &mut spec.r1,
                "r2" => &mut spec.r2,
                "sigma2" => &mut spec.sigma2,
                "theta1" => &mut spec.theta1,
                "theta2" => &mut spec.theta2,
                "kappa1" => &mut spec.kappa1,
                "kappa2" => &mut spec.kappa2,
                "v1" => &mut spec.v1,
                "v2" => &mut spec.v2,
                "t" => &mut spec.t,
                _ => return Err(PyValueError::new_err(format!("unknown parameter {key:?}"))),
            };
            *slot = value;
        }
    }
    let v = vg_exchange_vega_at(&spec).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("vega", v.value)?;
    out.set_item("tail_mean", v.tail_mean)?;
    out.set_item("eta_hat", v.eta_hat)?;
    out.set_item("saddle_residual", v.saddle_residual)?;
    Ok(out)
}

#[pymodule]
fn saddlerisk(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<NigPortfolio>()?;
    m.add_function(wrap_pyfunction!(delta_gamma_sensitivities, m)?)?;
    m.add_function(wrap_pyfunction!(gbm_vega, m)?)?;
    m.add_function(wrap_pyfunction!(vg_vega, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn module_matches_core() {
        Python::initialize();
        Python::attach(|py| {
            let m = PyModule::new(py, "saddlerisk").unwrap();
            saddlerisk(&m).unwrap();
            let cls = m.getattr("NigPortfolio").unwrap();
            let p = cls.call_method0("example").unwrap();
            let v: f64 = p.call_method1("var", (0.95,)).unwrap().extract().unwrap();
            let want = var_spa(&PortfolioSpec::nig_example().loss().unwrap(), 0.95, 1).unwrap();
            assert_eq!(v, want);
            let c: Vec<f64> = p.call_method1("var_contributions", (v,)).unwrap().extract().unwrap();
            let w: Vec<f64> = p.getattr("weights").unwrap().extract().unwrap();
            let sum: f64 = c.iter().zip(&w).map(|(c, w)| c * w).sum();
            assert!((sum - v).abs() < 1e-10);
            let err = p.call_method1("cvar", (v, 0.95, 1, "bogus")).unwrap_err();
            assert!(err.is_instance_of::<PyValueError>(py));
            let err = cls.call1((vec![(1.0, 2.0, 1.0, 0.0)], vec![1.0])).unwrap_err();
            assert!(err.to_string().contains("param"), "{err}");
        });
    }
}
