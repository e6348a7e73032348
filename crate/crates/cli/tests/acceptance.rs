//! One PASS/FAIL line per acceptance criterion. Runs the shipped configs at
//! desk scale and the full invariant suites.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use saddlerisk_cli::check::{run_suite, SuiteOutcome};
use saddlerisk_cli::config::load;
use saddlerisk_cli::experiments::run;
use saddlerisk_cli::table::Table;

struct Verdict {
    passed: bool,
    detail: String,
}

fn suites(names: &[&str]) -> (bool, Vec<SuiteOutcome>) {
    let outcomes: Vec<SuiteOutcome> =
        names.iter().map(|n| run_suite(n, false).unwrap_or_else(|| panic!("unknown suite {n}"))).collect();
    (outcomes.iter().all(|o| o.passed), outcomes)
}

fn suite_detail(outcomes: &[SuiteOutcome]) -> String {
    outcomes.iter().map(|o| format!("[{}]", o.line())).collect::<Vec<_>>().join(" ")
}

fn experiment(config: &str) -> (Table, Duration) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(config);
    let cfg = load(&path).unwrap_or_else(|e| panic!("{config}: {e}"));
    let start = Instant::now();
    let table = run(&cfg).unwrap_or_else(|e| panic!("{config}: {e}"));
    (table, start.elapsed())
}

fn mean_rel(table: &Table, measure: Option<&str>) -> f64 {
    match measure {
        Some(m) => table.mean_where("rel_diff", "measure", m).unwrap_or(f64::NAN),
        None => {
            let v: Vec<f64> = table.column("rel_diff").iter().map(|c| c.num().unwrap_or(f64::NAN)).collect();
            v.iter().sum::<f64>() / v.len() as f64
        }
    }
}

fn timed_suites(names: &[&str], limit: Option<Duration>) -> Verdict {
    let start = Instant::now();
    let (ok, outcomes) = suites(names);
    let elapsed = start.elapsed();
    let in_time = limit.is_none_or(|l| elapsed <= l);
    Verdict { passed: ok && in_time, detail: format!("{} in {:.2}s", suite_detail(&outcomes), elapsed.as_secs_f64()) }
}

fn criterion_1() -> Verdict {
    timed_suites(&["gaussian-exactness"], Some(Duration::from_secs(10)))
}

fn criterion_2() -> Verdict {
    timed_suites(&["temme-reduction"], None)
}

fn criterion_3() -> Verdict {
    timed_suites(&["additivity"], None)
}

fn criterion_4() -> Verdict {
    let (t, elapsed) = experiment("contrib-nig.toml");
    let (var, cvar) = (mean_rel(&t, Some("var")), mean_rel(&t, Some("cvar")));
    Verdict {
        passed: var <= 2e-2 && cvar <= 2e-2 && elapsed <= Duration::from_secs(120),
        detail: format!(
            "NIG L3 vs IPA at 1e6 samples: mean rel VaR {var:.4e}, CVaR {cvar:.4e} (limit 2e-2) in {:.2}s",
            elapsed.as_secs_f64()
        ),
    }
}

fn criterion_5() -> Verdict {
    let (t, elapsed) = experiment("dg-sens.toml");
    let (var, cvar) = (mean_rel(&t, Some("var")), mean_rel(&t, Some("cvar")));
    let (paths_ok, outcomes) = suites(&["dg-two-path"]);
    Verdict {
        passed: var <= 1e-2 && cvar <= 1e-2 && elapsed <= Duration::from_secs(60) && paths_ok,
        detail: format!(
            "delta-gamma vs IPA at 1e6 samples, batch 2000: mean rel VaR {var:.4e}, CVaR {cvar:.4e} (limit 1e-2) in {:.2}s; {}",
            elapsed.as_secs_f64(),
            suite_detail(&outcomes)
        ),
    }
}

fn criterion_6() -> Verdict {
    timed_suites(&["gbm-quadrature"], None)
}

fn criterion_7() -> Verdict {
    let (t, elapsed) = experiment("vg-vega.toml");
    let points = t.rows.len();
    let rel = mean_rel(&t, None);
    Verdict {
        passed: points == 10 && rel <= 1e-2 && elapsed <= Duration::from_secs(120),
        detail: format!(
            "VG exchange vega vs IPA at 1e6 paths over {points} sigma1 points: mean rel {rel:.4e} (limit 1e-2) in {:.2}s",
            elapsed.as_secs_f64()
        ),
    }
}

fn criterion_8() -> Verdict {
    timed_suites(&["finite-differences", "saddle-residuals", "n-scaling", "mc-determinism", "thm42-aux-fd"], None)
}

fn main() -> ExitCode {
    let criteria: [fn() -> Verdict; 8] =
        [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8];
    let mut all = true;
    for (i, c) in criteria.iter().enumerate() {
        let v = c();
        all &= v.passed;
        println!("{} criterion {}: {}", if v.passed { "PASS" } else { "FAIL" }, i + 1, v.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
