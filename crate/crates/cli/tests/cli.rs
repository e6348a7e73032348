use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_saddlerisk"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str], threads: Option<&str>) -> Output {
    let mut c = bin();
    c.args(args);
    match threads {
        Some(t) => c.env("SADDLERISK_THREADS", t),
        None => c.env_remove("SADDLERISK_THREADS"),
    };
    c.output().unwrap()
}

const SMALL_CONTRIB: &str = r#"
[experiment]
name = "contrib-nig"
alpha_grid = [0.9, 0.95, 0.99]

[mc]
samples = 40_000
batch = 2_000
seed = 7
streams = 4
"#;

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn rerun_is_byte_identical_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SMALL_CONTRIB);
    let (a, b, c) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("c.csv"));
    for (out, threads) in [(&a, Some("1")), (&b, Some("4")), (&c, None)] {
        let o = run(&["run", path_str(&cfg), "--out", path_str(out)], threads);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let bytes = fs::read(&a).unwrap();
    assert_eq!(bytes, fs::read(&b).unwrap());
    assert_eq!(bytes, fs::read(&c).unwrap());
    let text = String::from_utf8(bytes).unwrap();
    let mut lines = text.split("\r\n");
    assert_eq!(
        lines.next().unwrap(),
        "measure,alpha,mc_var,spa_var,spa_from_mc_var,spa_from_spa_var,martin,ipa,ipa_ci_lo,ipa_ci_hi,rel_diff"
    );
    let rows: Vec<&str> = lines.filter(|l| !l.is_empty()).collect();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        for cell in r.split(',').skip(1) {
            assert!(cell == "ERR:na" || cell.parse::<f64>().map(f64::is_finite).unwrap_or(false), "{cell}");
        }
    }
    // Martin has no CVaR form.
    assert!(rows[1].starts_with("cvar,") && rows[1].contains("ERR:na"));
}

#[test]
fn seed_and_sample_overrides() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SMALL_CONTRIB);
    let base = run(&["run", path_str(&cfg), "--out", "-"], None);
    let reseeded = run(&["run", path_str(&cfg), "--out", "-", "--seed", "8"], None);
    let bigger = run(&["run", path_str(&cfg), "--out", "-", "--samples", "60000"], None);
    for o in [&base, &reseeded, &bigger] {
        assert_eq!(o.status.code(), Some(0));
    }
    assert_ne!(base.stdout, reseeded.stdout);
    assert_ne!(base.stdout, bigger.stdout);
    // The SPA column does not depend on the simulation.
    let spa = |o: &Output| -> Vec<String> {
        String::from_utf8_lossy(&o.stdout).lines().skip(1).map(|l| l.split(',').nth(5).unwrap().to_owned()).collect()
    };
    assert_eq!(spa(&base), spa(&reseeded));
}

#[test]
fn output_path_from_config() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("vg.csv");
    let body = format!(
        "[experiment]\nname = \"vg-vega\"\nsigma1_grid = [0.5, 1.0]\noutput = {:?}\n[mc]\nsamples = 4000\nbatch = 2000\n",
        path_str(&out)
    );
    let cfg = write_config(dir.path(), "vg.toml", &body);
    let o = run(&["run", path_str(&cfg)], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("sigma1,eta_hat,saddle_residual,"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let bad_syntax = write_config(dir.path(), "a.toml", "[experiment]\nname = \"dg-sens\"\nn = [\n");
    let o = run(&["run", path_str(&bad_syntax)], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"), "{}", String::from_utf8_lossy(&o.stderr));

    let bad_grid = write_config(dir.path(), "b.toml", "[experiment]\nname = \"dg-sens\"\nalpha_grid = [0.95, 0.95]\n");
    assert_eq!(run(&["run", path_str(&bad_grid)], None).status.code(), Some(2));

    let unknown = write_config(dir.path(), "c.toml", "[experiment]\nname = \"nope\"\n");
    assert_eq!(run(&["run", path_str(&unknown)], None).status.code(), Some(2));

    let missing = dir.path().join("missing.toml");
    assert_eq!(run(&["run", path_str(&missing)], None).status.code(), Some(2));

    let cfg = write_config(dir.path(), "d.toml", SMALL_CONTRIB);
    assert_eq!(run(&["run", path_str(&cfg), "--samples", "1001"], None).status.code(), Some(2));
    assert_eq!(run(&["run", path_str(&cfg)], Some("zero")).status.code(), Some(2));
}

#[test]
fn sampler_failure_exits_with_three() {
    // A pGH component other than NIG has no sampler.
    let body = r#"
[experiment]
name = "contrib-nig"
alpha_grid = [0.95]
[mc]
samples = 2000
batch = 1000
[portfolio]
weights = [1.0, 1.0]
component = 1
components = [
  { lambda = 1.0, alpha = 2.0, beta = 0.1, delta = 1.0, mu = 0.0 },
  { alpha = 2.0, beta = 0.1, delta = 1.0, mu = 0.0 },
]
"#;
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "p.toml", body);
    let o = run(&["run", path_str(&cfg), "--out", "-"], None);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn per_point_errors_do_not_abort_the_sweep() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "vg.toml",
        "[experiment]\nname = \"vg-vega\"\nsigma1_grid = [1.0, 50.0]\n[mc]\nsamples = 4000\nbatch = 2000\n",
    );
    let o = run(&["run", path_str(&cfg), "--out", "-"], None);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let last = text.lines().nth(2).unwrap();
    assert!(last.starts_with("5.0000000000000000e1,ERR:"), "{last}");
}

#[test]
fn check_fast_passes_and_check_experiment_writes_csv() {
    let o = run(&["check", "--fast"], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.lines().filter(|l| l.starts_with("PASS ")).count(), 10);

    let dir = TempDir::new().unwrap();
    let out = dir.path().join("check.csv");
    let body = format!("[experiment]\nname = \"check\"\nfast = true\noutput = {:?}\n", path_str(&out));
    let cfg = write_config(dir.path(), "check.toml", &body);
    assert_eq!(run(&["run", path_str(&cfg)], None).status.code(), Some(0));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("suite,passed,detail\r\n"));
    assert_eq!(text.matches(",true,").count(), 10);
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            saddlerisk_cli::config::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            seen += 1;
        }
    }
    assert_eq!(seen, 5);
}
