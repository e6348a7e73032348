//! The Monte Carlo oracle against convolution references for the NIG
//! portfolio (see nig_exact.rs for how they were computed).

use saddlerisk_core::oracle::{ipa_cvar_sensitivity, ipa_var_sensitivity, mc_var, sample_portfolio, McConfig};
use saddlerisk_core::risk::PortfolioSpec;

const LEVEL: f64 = 0.999;

#[test]
fn oracle_brackets_exact_values() {
    let p = PortfolioSpec::nig_example();
    let cfg = McConfig::new(1_000_000, 2_000, 99, 8).unwrap();
    let draws = sample_portfolio(&p, 2, &cfg).unwrap();
    let losses: Vec<f64> = draws.iter().map(|d| d.y).collect();
    // (α, VaR, E[L₃ | L = VaR], E[L₃ | L ≥ VaR])
    for (alpha, var, var_c, cvar_c) in [
        (0.90, 0.8130735531367267, 0.9624819056268169, 1.1870831543744018),
        (0.99, 1.2271020566329895, 1.4679685176965516, 1.6707422971281325),
    ] {
        let v = mc_var(&losses, alpha, LEVEL).unwrap();
        assert!(v.contains(var), "alpha={alpha}: {v:?} vs {var}");
        let s = ipa_var_sensitivity(&draws, alpha, cfg.batch_size, LEVEL).unwrap();
        assert!(s.contains(var_c), "alpha={alpha}: {s:?} vs {var_c}");
        let s = ipa_cvar_sensitivity(&draws, alpha, LEVEL).unwrap();
        assert!(s.contains(cvar_c), "alpha={alpha}: {s:?} vs {cvar_c}");
    }
}

#[test]
fn same_seed_same_draws() {
    let p = PortfolioSpec::nig_example();
    let cfg = McConfig::new(20_000, 1_000, 5, 4).unwrap();
    let a = sample_portfolio(&p, 0, &cfg).unwrap();
    let b = sample_portfolio(&p, 0, &cfg).unwrap();
    assert!(a.iter().zip(&b).all(|(x, y)| x.x.to_bits() == y.x.to_bits() && x.y.to_bits() == y.y.to_bits()));
}
