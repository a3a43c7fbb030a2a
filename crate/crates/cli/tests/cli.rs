use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use relstable_cli::{parse_config_file, parse_csv, Overrides};

fn relstable(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relstable"))
        .args(args)
        .current_dir(dir)
        .env("RELSTABLE_WORKERS", "1")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

const FREE_SWEEP: &str = r#"
command = "sweep"
seed = 3
[params]
d = 1
alpha = 1.0
m = 1.0
[domain]
kind = "full_space"
d = 1
[sweep]
theorem_tag = "free_kernel"
m_grid = [0.1, 1.0]
t_grid = [0.1, 1.0]
r_grid = [0.0, 0.5, 2.0]
c_cap = CAP
[output]
dir = "out"
"#;

const SELF_TEST: &str = r#"
command = "sweep"
seed = 8
[params]
d = 2
alpha = 1.0
m = 1.0
[domain]
kind = "ball"
center = [0.0, 0.0]
radius = 1.0
[sweep]
theorem_tag = "thm11_small_time"
m_grid = [0.1, 1.0]
t_grid = [0.05, 0.2]
pairs_per_cell = 6
c_cap = 2.0
mode = "self_test"
[output]
dir = "out"
"#;

#[test]
fn levy_from_flags_only() {
    let tmp = tempfile::tempdir().unwrap();
    let out = relstable(tmp.path(), &["levy", "--seed", "1", "--d", "1", "--alpha", "1", "--m", "1", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("o/levy.csv")).unwrap();
    assert!(csv.starts_with("r,density,removed_density"));
    assert_eq!(csv.lines().count(), 14);
}

#[test]
fn bad_alpha_is_an_operational_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = relstable(tmp.path(), &["levy", "--seed", "1", "--d", "1", "--alpha", "2.5", "--m", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("alpha") && err.contains("(0, 2)"), "{err}");
}

#[test]
fn missing_seed_is_an_operational_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = relstable(tmp.path(), &["levy", "--d", "1", "--alpha", "1", "--m", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn bad_worker_count_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_relstable"))
        .args(["levy", "--seed", "1", "--d", "1", "--alpha", "1", "--m", "1"])
        .current_dir(tmp.path())
        .env("RELSTABLE_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("RELSTABLE_WORKERS"));
}

#[test]
fn passing_and_failing_verdicts_set_the_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let pass = write(tmp.path(), "pass.toml", &FREE_SWEEP.replace("CAP", "100.0"));
    let out = relstable(tmp.path(), &["--config", &pass]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json = fs::read_to_string(tmp.path().join("out/sweep.json")).unwrap();
    assert!(json.contains("\"verdict\": \"pass\""));
    assert!(tmp.path().join("out/sweep.svg").exists());

    // The free kernel is not equal to its comparator, so C = 1 must fail.
    let fail = write(tmp.path(), "fail.toml", &FREE_SWEEP.replace("CAP", "1.0").replace("\"out\"", "\"out2\""));
    let out = relstable(tmp.path(), &["--config", &fail]);
    assert_eq!(out.status.code(), Some(2));
    let json = fs::read_to_string(tmp.path().join("out2/sweep.json")).unwrap();
    assert!(json.contains("\"verdict\": \"fail\""));
}

#[test]
fn self_test_sweep_passes_with_unit_ratios() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "self.toml", SELF_TEST);
    let out = relstable(tmp.path(), &["--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = parse_csv(&fs::read_to_string(tmp.path().join("out/sweep.csv")).unwrap()).unwrap();
    assert_eq!(recs.len(), 2 * 2 * 6);
    assert!(recs.iter().all(|r| r.ratio == 1.0 && r.x.len() == 2));
}

#[test]
fn same_config_gives_identical_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let a = write(tmp.path(), "a.toml", &SELF_TEST.replace("\"out\"", "\"a\"").replace("\"self_test\"", "\"monte_carlo\"").replace("[sweep]", "[mc]\nn_samples = 2000\ngrid_steps = 8\n[sweep]"));
    let b = write(tmp.path(), "b.toml", &fs::read_to_string(&a).unwrap().replace("\"a\"", "\"b\""));
    for cfg in [&a, &b] {
        let out = relstable(tmp.path(), &["--config", cfg]);
        assert!(out.status.code() != Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["sweep.csv", "sweep_dropped.csv", "sweep.json", "sweep.svg"] {
        let x = fs::read(tmp.path().join("a").join(f)).unwrap();
        let y = fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn report_command_redraws_a_saved_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "pass.toml", &FREE_SWEEP.replace("CAP", "100.0"));
    assert_eq!(relstable(tmp.path(), &["--config", &cfg]).status.code(), Some(0));
    let rep = write(
        tmp.path(),
        "report.toml",
        "command = \"report\"\nseed = 0\n[report]\njson = \"out/sweep.json\"\n[output]\ndir = \"redraw\"\nplot_axis = \"separation\"\n",
    );
    let out = relstable(tmp.path(), &["--config", &rep]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = fs::read_to_string(tmp.path().join("redraw/report.svg")).unwrap();
    assert!(svg.contains("|x - y|") && svg.contains("band-upper"));
}

#[test]
fn estimate_writes_json() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "est.toml",
        r#"
command = "estimate"
seed = 1
[params]
d = 1
alpha = 1.0
m = 1.0
[domain]
kind = "interval_union"
intervals = [[0.0, 2.0]]
[mc]
n_samples = 2000
grid_steps = 8
[estimate]
quantity = "killed_kernel"
t = 0.2
x = [0.5]
y = [1.0]
"#,
    );
    let out = relstable(tmp.path(), &["--config", &cfg, "--out", "e"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("e/estimate.json")).unwrap()).unwrap();
    assert!(v["result"]["value"].as_f64().unwrap() > 0.0);
    assert_eq!(v["quantity"], "killed_kernel");
}

#[test]
fn simulate_writes_endpoints_for_both_samplers() {
    let tmp = tempfile::tempdir().unwrap();
    for sampler in ["subordination", "thinning"] {
        let cfg = write(
            tmp.path(),
            "sim.toml",
            &format!(
                "command = \"simulate\"\nseed = 2\n[params]\nd = 2\nalpha = 1.0\nm = 1.0\n[domain]\nkind = \"ball\"\ncenter = [0.0, 0.0]\nradius = 1.0\n[simulate]\nt = 0.5\npaths = 50\ngrid_steps = 8\nsampler = \"{sampler}\"\n[output]\ndir = \"{sampler}\"\n"
            ),
        );
        let out = relstable(tmp.path(), &["--config", &cfg]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let csv = fs::read_to_string(tmp.path().join(sampler).join("simulate.csv")).unwrap();
        assert_eq!(csv.lines().count(), 51);
        assert!(csv.lines().skip(1).all(|l| l.split(',').nth(2).unwrap().split(';').count() == 2));
    }
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            parse_config_file(&p, &Overrides::default()).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            n += 1;
        }
    }
    assert!(n >= 5);
}
