use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sticky(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sticky"));
    c.args(args);
    match env_out {
        Some(p) => c.env("STICKY_OUT_DIR", p),
        None => c.env_remove("STICKY_OUT_DIR"),
    };
    c.output().expect("binary runs")
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{}: {e}", dir.join(name).display()))
}

const SMALL_OU: &str = r#"
name = "small-ou"
seed = 3

[model]
builtin = "ou"
[model.params]
m = [1.0]

[[bounds]]
op = "coupling_bound"
times = [1.0]
r0 = 0.0

[[simulations]]
kind = "coupling"
x = [0.0]
y = [0.0]
estimators = ["meet_probability", "comparison_violations"]

[simulations.config]
step_h = 1e-3
horizon_t = 1.0
delta = 0.02
reg_n = 100
paths = 200
dimension = 1
record_stride = 500
"#;

#[test]
fn list_prints_four_scenarios() {
    let o = sticky(&["list"], None);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let names: Vec<&str> = text.lines().map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(names, ["ou-demo", "cbm-demo", "sticky-ergodic", "mkv-demo"]);
    assert_eq!(sticky(&["list"], None).stdout, text.as_bytes());
}

#[test]
fn ou_demo_curves_have_the_documented_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let o = sticky(&["run", "ou-demo", "--out-dir", tmp.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let curves = String::from_utf8(read(tmp.path(), "curves.csv")).unwrap();
    assert_eq!(curves.lines().next().unwrap(), "t,exact_tv,mc_meet_complement,thm2_bound");
    for f in ["manifest.json", "bounds.csv", "estimates.csv", "report.json"] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
}

#[test]
fn thread_count_and_manifest_rerun_do_not_change_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("s.toml");
    fs::write(&cfg, SMALL_OU).unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let c = tmp.path().join("c");
    let cfg_s = cfg.to_str().unwrap();
    assert!(sticky(&["run", cfg_s, "--threads", "1", "--out-dir", a.to_str().unwrap()], None).status.success());
    assert!(sticky(&["run", cfg_s, "--threads", "3", "--out-dir", b.to_str().unwrap()], None).status.success());
    let manifest = a.join("manifest.json");
    assert!(sticky(&["run", manifest.to_str().unwrap(), "--out-dir", c.to_str().unwrap()], None).status.success());
    for f in ["bounds.csv", "estimates.csv", "curves.csv", "manifest.json"] {
        assert_eq!(read(&a, f), read(&b, f), "{f}");
        assert_eq!(read(&a, f), read(&c, f), "{f}");
    }
    // a different seed moves the Monte Carlo numbers but not the bounds
    let d = tmp.path().join("d");
    assert!(sticky(&["run", cfg_s, "--seed", "4", "--out-dir", d.to_str().unwrap()], None).status.success());
    assert_eq!(read(&a, "bounds.csv"), read(&d, "bounds.csv"));
    assert_ne!(read(&a, "estimates.csv"), read(&d, "estimates.csv"));
}

#[test]
fn bounds_command_skips_simulations_and_honours_env_root() {
    let tmp = tempfile::tempdir().unwrap();
    let o = sticky(&["bounds", "cbm-demo"], Some(tmp.path()));
    assert_eq!(o.status.code(), Some(0));
    let dir = tmp.path().join("cbm-demo");
    assert!(dir.join("bounds.csv").exists());
    assert!(!dir.join("estimates.csv").exists());
    let csv = String::from_utf8(read(&dir, "bounds.csv")).unwrap();
    assert!(csv.starts_with("case,quantity,arg,value\r\n"));
}

#[test]
fn input_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let out_s = out.to_str().unwrap();
    assert_eq!(sticky(&["run", "/nonexistent/x.toml", "--out-dir", out_s], None).status.code(), Some(1));

    let coarse = SMALL_OU
        .replace("record_stride = 500", "record_stride = 500\nrefine_eta = false")
        .replace("step_h = 1e-3", "step_h = 5e-3");
    let p = tmp.path().join("coarse.toml");
    fs::write(&p, coarse).unwrap();
    let o = sticky(&["run", p.to_str().unwrap(), "--out-dir", out_s], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("delta"), "{}", String::from_utf8_lossy(&o.stderr));

    let p = tmp.path().join("model.toml");
    fs::write(&p, SMALL_OU.replace("builtin = \"ou\"", "builtin = \"heat\"")).unwrap();
    assert_eq!(sticky(&["run", p.to_str().unwrap(), "--out-dir", out_s], None).status.code(), Some(1));

    let p = tmp.path().join("op.toml");
    fs::write(&p, SMALL_OU.replace("op = \"coupling_bound\"", "op = \"frobnicate\"")).unwrap();
    assert_eq!(sticky(&["run", p.to_str().unwrap(), "--out-dir", out_s], None).status.code(), Some(1));
}

#[test]
fn failed_check_exits_2() {
    // with a meeting tolerance of 50 every path counts as met, so the
    // exact TV cannot lie below the Monte Carlo complement
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("bad.toml");
    fs::write(&p, SMALL_OU.replace("x = [0.0]", "meet_tol = 50.0\nx = [0.0]")).unwrap();
    let o = sticky(&["run", p.to_str().unwrap(), "--out-dir", tmp.path().join("o").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}
