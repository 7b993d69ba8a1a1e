use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_besselfrac"));
    c.env_remove("BESSELFRAC_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn besselfrac")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("besselfrac-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

const SMALL: [&str; 6] = ["--n", "8", "--x-min", "0.5", "--x-max", "2"];

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&run(&["apply", "--no-such-flag"])), 64);
    assert_eq!(code(&run(&["verify", "nonsense"])), 64);
    assert_eq!(code(&run(&["apply", "--sigma", "1.5"])), 64);
    let cfg = scratch("bad.conf");
    std::fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(code(&run(&["apply", "--config", cfg.to_str().unwrap()])), 64);
}

#[test]
fn bad_thread_count_exits_64() {
    let o = bin()
        .args(["apply", "--fn", "zero"])
        .env("BESSELFRAC_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), 64);
}

#[test]
fn zero_function_gives_zeros() {
    let mut args = vec!["apply", "--fn", "zero", "--route", "all"];
    args.extend(SMALL);
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,route,value,err_est,max_rel_delta"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 8 * 3, "poisson is inadmissible at sigma = 1/2");
    for r in rows {
        let f: Vec<&str> = r.split(',').collect();
        assert_eq!(f[2].parse::<f64>().unwrap(), 0.0, "{r}");
    }
}

#[test]
fn inadmissible_route_exits_65() {
    let mut args = vec!["apply", "--fn", "holder", "--route", "spectral"];
    args.extend(SMALL);
    assert_eq!(code(&run(&args)), 65);
}

#[test]
fn flags_override_config_file() {
    let cfg = scratch("run.conf");
    std::fs::write(
        &cfg,
        "# test\nsigma = 0.25\nlambda = 2\nx-min = 0.5\nx-max = 2\nn = 8\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = run(&["apply", "--config", cfg, "--sigma", "0.75"]);
    let direct = run(&[
        "apply", "--lambda", "2", "--sigma", "0.75", "--x-min", "0.5", "--x-max", "2", "--n", "8",
    ]);
    let file_only = run(&["apply", "--config", cfg]);
    assert_eq!(code(&from_file), 0);
    assert_eq!(from_file.stdout, direct.stdout);
    assert_ne!(from_file.stdout, file_only.stdout);
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let mut args = vec!["apply", "--route", "all", "--sigma", "0.4"];
    args.extend(SMALL);
    let one = bin().args(&args).env("BESSELFRAC_THREADS", "1").output().unwrap();
    let two = bin().args(&args).env("BESSELFRAC_THREADS", "3").output().unwrap();
    let again = bin().args(&args).env("BESSELFRAC_THREADS", "3").output().unwrap();
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, two.stdout);
    assert_eq!(two.stdout, again.stdout);
}

#[test]
fn json_output_to_file() {
    let out = scratch("apply.json");
    let mut args = vec!["apply", "--format", "json", "-o", out.to_str().unwrap()];
    args.extend(SMALL);
    assert_eq!(code(&run(&args)), 0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 8);
    assert_eq!(rows[0]["route"], "heat");
}

#[test]
fn sampled_input_is_accepted() {
    let samples = scratch("samples.csv");
    let mut text = String::from("x,value_re\n");
    for i in 0..200 {
        let x = 0.01 + 0.05 * i as f64;
        text.push_str(&format!("{x},{}\n", x * (-x * x).exp()));
    }
    std::fs::write(&samples, text).unwrap();
    let mut args = vec!["apply", "--fn", "samples", "--samples", samples.to_str().unwrap()];
    args.extend(SMALL);
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_report_schema() {
    let o = run(&["verify", "semigroup", "--quick", "--lambda", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["suite"], "semigroup");
    assert_eq!(v["pass"], true);
    for c in v["checks"].as_array().unwrap() {
        for key in ["check_name", "target", "measured", "tolerance", "pass"] {
            assert!(c.get(key).is_some(), "missing {key}");
        }
    }
}

#[test]
fn failing_suite_exits_1_and_names_checks() {
    let o = run(&["verify", "carleson", "--quick", "--lambda", "1"]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("carleson/g_identity/beta=0.5"), "{err}");
}

#[test]
fn dump_ksigma_profile() {
    let mut args = vec!["dump", "ksigma", "--x", "1", "--sigma", "0.5"];
    args.extend(SMALL);
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("lambda,sigma,t,x,y,kind,value,err_est,reference,ratio\n"));
    assert_eq!(text.lines().count(), 1 + 8);
}

#[test]
fn dump_transform_and_holder() {
    let mut args = vec!["dump", "transform"];
    args.extend(SMALL);
    let o = run(&args);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8(o.stdout)
        .unwrap()
        .starts_with("lambda,x,value,err_est\n"));

    let mut args = vec!["holder", "--quick"];
    args.extend(SMALL);
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("t,sup_x_ratio\n"));
    assert_eq!(text.lines().count(), 1 + 5);
}
