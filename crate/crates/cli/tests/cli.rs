use std::path::Path;
use std::process::{Command, Output};

fn eft(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eft"))
        .args(args)
        .output()
        .expect("run eft")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value_of(text: &str, key: &str) -> Option<String> {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")).map(str::to_string))
}

#[test]
fn criterion_radial_exp_is_finite() {
    let o = eft(&[
        "criterion",
        "--potential",
        "radialexp:alpha=1",
        "--m",
        "1",
        "--n",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let row = out.lines().nth(1).unwrap();
    assert!(out.starts_with("criterion,m,N,theta,status,value,blocks_used\n"));
    assert_eq!(row.split(',').nth(4), Some("Finite"), "{out}");
}

#[test]
fn criterion_above_threshold_diverges() {
    let o = eft(&[
        "criterion",
        "--potential",
        "radialexp:alpha=3",
        "--m",
        "1",
        "--n",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains(",Divergent,"));
}

#[test]
fn bound_of_power_law_is_two() {
    let o = eft(&[
        "bound",
        "--curve",
        "powerlaw:kappa=1,beta=0.75",
        "--y0",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(value_of(&out, "status").as_deref(), Some("Bound"));
    let t: f64 = value_of(&out, "T").unwrap().parse().unwrap();
    assert!((t - 2.0).abs() < 1e-12, "{out}");
}

#[test]
fn bound_with_ode_check() {
    let o = eft(&[
        "bound",
        "--curve",
        "powerlaw:kappa=1,beta=0.75",
        "--y0",
        "1",
        "--dt",
        "0.001",
    ]);
    let vt: f64 = value_of(&stdout(&o), "ode_vanish_time")
        .unwrap()
        .parse()
        .unwrap();
    assert!((vt - 2.0).abs() <= 1e-3);
}

#[test]
fn missing_config_is_caller_error() {
    let o = eft(&["simulate", "--config", "missing.cfg"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_flag_prints_usage() {
    let o = eft(&["criterion", "--bogus", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn bad_parameter_is_caller_error() {
    let o = eft(&[
        "bound",
        "--curve",
        "powerlaw:kappa=1,beta=0.75",
        "--y0",
        "-1",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn simulate_from_config_writes_manifest_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# flagship\nnodes = 63\ndt = 0.01\nt_max = 2\nq = 0.5\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = eft(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--dt",
        "0.005",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let man = read(&out, "manifest.txt");
    assert_eq!(value_of(&man, "dt").as_deref(), Some("0.005"));
    assert_eq!(value_of(&man, "nodes").as_deref(), Some("63"));
    assert_eq!(
        value_of(&man, "outputs").as_deref(),
        Some("trace.csv,state.csv")
    );
    assert!(read(&out, "trace.csv").starts_with("t,l2sq,energy,residual\n"));
    assert_eq!(read(&out, "state.csv").lines().count(), 64);
    let t: f64 = value_of(&stdout(&o), "T_num").unwrap().parse().unwrap();
    assert!(t > 0.0 && t < 2.0);
}

#[test]
fn reruns_are_bit_identical() {
    let args = [
        "lambda1",
        "--potential",
        "const:1",
        "--h-grid",
        "1e-4:1e-2:3",
        "--nodes",
        "64",
        "--seed",
        "5",
    ];
    let a = eft(&args);
    let b = eft(&[&args[..], &["--jobs", "1"]].concat());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 4);
}

#[test]
fn lambda1_reports_test_function_bound() {
    let o = eft(&[
        "lambda1",
        "--potential",
        "const:1",
        "--tilde-alpha",
        "1",
        "--h-grid",
        "1e-4:1e-2:2",
        "--nodes",
        "256",
    ]);
    let out = stdout(&o);
    for row in out.lines().skip(1) {
        let cols: Vec<f64> = row.split(',').take(3).map(|c| c.parse().unwrap()).collect();
        assert!(cols[1] <= cols[2], "{row}");
    }
}

#[test]
fn kv_synthetic_profiles() {
    for (p, want) in [("2", "Finite"), ("1", "Divergent")] {
        let o = eft(&["kv", "--profile", &format!("synthetic:power={p}")]);
        assert_eq!(o.status.code(), Some(0));
        let out = stdout(&o);
        assert!(out.starts_with("n,alpha_n,term,partial_sum\n"));
        assert_eq!(value_of(&out, "integral_status").as_deref(), Some(want));
        assert_eq!(value_of(&out, "agree").as_deref(), Some("true"));
    }
}

#[test]
fn orlicz_norm_of_constant() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("u.csv");
    std::fs::write(&f, "weight,u,v\n0.5,2,1\n0.5,2,1\n0,9,9\n").unwrap();
    let o = eft(&["orlicz-norm", "--file", f.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let out = stdout(&o);
    let get = |k: &str| -> f64 {
        out.lines()
            .find_map(|l| l.strip_prefix(&format!("{k},")))
            .unwrap()
            .parse()
            .unwrap()
    };
    // B^{-1}(1) solves e^k - 1 - k = 1
    assert!((get("norm_a") - 2.0 / 1.1461932206205825).abs() < 1e-8);
    assert!(get("holder_ratio") <= 1.0);
}

#[test]
fn sphi_and_lambda12_run() {
    let o = eft(&[
        "sphi",
        "--potential",
        "radialexp:alpha=1.5",
        "--phi",
        "entropy",
    ]);
    assert!(stdout(&o).contains(",Finite,"));
    let o = eft(&[
        "lambda12",
        "--potential",
        "const:1",
        "--h-grid",
        "1e-3:1e-1:3",
        "--nodes",
        "64",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 4);
}

#[test]
fn kv_computed_profile_agrees() {
    let o = eft(&[
        "kv",
        "--profile",
        "computed",
        "--potential",
        "radialexp:alpha=1",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let out = stdout(&o);
    assert_eq!(value_of(&out, "agree").as_deref(), Some("true"), "{out}");
}

#[test]
fn h_grid_endpoints_are_exact() {
    let o = eft(&[
        "lambda12",
        "--potential",
        "const:1",
        "--h-grid",
        "1e-6:1e-1:6",
        "--nodes",
        "64",
    ]);
    let hs: Vec<String> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().to_string())
        .collect();
    assert_eq!(hs.first().unwrap().parse::<f64>().unwrap(), 1e-6);
    assert_eq!(hs.last().unwrap().parse::<f64>().unwrap(), 1e-1);
}
