use std::path::Path;
use std::process::{Command, Output};

fn tool() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tf-angular"));
    c.env_remove("TF_ANGULAR_CACHE")
        .env_remove("SOURCE_DATE_EPOCH");
    c
}

fn run(args: &[&str]) -> Output {
    tool().args(args).output().expect("spawn")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn without_timestamp(s: &str) -> String {
    s.lines()
        .filter(|l| !l.starts_with("# timestamp:") && !l.contains("\"timestamp\""))
        .collect::<Vec<_>>()
        .join("\n")
}

fn make_cache(dir: &Path) -> String {
    let path = dir.join("tf.json");
    let o = run(&["solve-tf", "--out", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    path.to_str().unwrap().to_string()
}

fn summary(text: &str, key: &str) -> f64 {
    let prefix = format!("# {key}: ");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no {key} in output"))
        .parse()
        .unwrap()
}

#[test]
fn kappa_table_is_normalized() {
    let dir = tempfile::tempdir().unwrap();
    let tf = make_cache(dir.path());
    let o = run(&["kappa", "--tf", &tf, "--steps", "200"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.lines().any(|l| l == "lambda,kappa,kappa_madelung"));
    assert!((summary(&text, "normalization") - 1.0).abs() < 1e-3);
    assert!((summary(&text, "normalization_table") - 1.0).abs() < 1e-3);
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + 201);
    assert!(text.contains("# tf_cache_sha256: "));
}

#[test]
fn missing_cache_is_a_usage_error() {
    let o = run(&["kappa", "--steps", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert!(o.stdout.is_empty());
}

#[test]
fn cache_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let tf = make_cache(dir.path());
    let o = tool()
        .args(["semiclassical", "--lambda", "0.5", "--mu", "0,0.1"])
        .env("TF_ANGULAR_CACHE", &tf)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).contains("lambda,mu,e_g,n"));
}

#[test]
fn bad_arguments_exit_2() {
    assert_eq!(
        run(&["converge", "--lambda", "-1", "--z", "100", "--tf", "x"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["occupations", "--z", "0", "--tf", "x"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["deviation", "--zmax", "1", "--tf", "x"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["madelung", "--zmax", "ten"]).status.code(), Some(2));
    assert_eq!(
        run(&["kappa", "--tf", "/nonexistent/tf.json"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn starvation_under_strict_policy_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let tf = make_cache(dir.path());
    // z = 5 has only the 1s and 2s levels bound
    let o = run(&["occupations", "--tf", &tf, "--z", "5", "--strict"]);
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["occupations", "--tf", &tf, "--z", "5"]);
    assert!(o.status.success());
    assert_eq!(summary(&stdout(&o), "unbound_electrons"), 1.0);
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let tf = make_cache(dir.path());
    for args in [
        vec!["converge", "--lambda", "0.5", "--z", "1000,8000"],
        vec![
            "occupations",
            "--z",
            "300",
            "--lambda",
            "0.5",
            "--format",
            "json",
        ],
        vec!["deviation", "--zmax", "40"],
    ] {
        let mut full = args.clone();
        full.extend(["--tf", &tf]);
        let a = stdout(&run(&full));
        let b = stdout(&run(&full));
        assert_eq!(without_timestamp(&a), without_timestamp(&b));
    }
}

#[test]
fn converge_rows() {
    let dir = tempfile::tempdir().unwrap();
    let tf = make_cache(dir.path());
    let o = run(&[
        "converge",
        "--lambda",
        "0.5",
        "--z",
        "1000,10000,100000",
        "--tf",
        &tf,
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let gaps: Vec<f64> = text
        .lines()
        .skip_while(|l| *l != "z,lambda,chi,kappa,gap")
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert_eq!(gaps.len(), 3);
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn json_mirrors_csv() {
    let dir = tempfile::tempdir().unwrap();
    let tf = make_cache(dir.path());
    let csv = stdout(&run(&["madelung", "--zmax", "60"]));
    let json = stdout(&run(&["madelung", "--zmax", "60", "--format", "json"]));
    let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
    let rows = doc["rows"].as_array().unwrap();
    let csv_rows: Vec<&str> = csv
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect();
    assert_eq!(rows.len(), csv_rows.len());
    for (r, line) in rows.iter().zip(csv_rows) {
        let rebuilt = format!("{},{},{},{}", r["ell"], r["n"], r["start_z"], r["capacity"]);
        assert_eq!(rebuilt, line);
    }
    let occ = stdout(&run(&[
        "occupations",
        "--z",
        "30",
        "--tf",
        &tf,
        "--format",
        "json",
    ]));
    let doc: serde_json::Value = serde_json::from_str(&occ).unwrap();
    let total: f64 = doc["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["N_ell"].as_f64().unwrap())
        .sum();
    assert_eq!(total, 30.0);
}

#[test]
fn config_file_and_output_path() {
    let dir = tempfile::tempdir().unwrap();
    let tf = make_cache(dir.path());
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        format!("# test\ntf = {tf}\nsteps = 20\nformat = json\n"),
    )
    .unwrap();
    let out = dir.path().join("kappa.json");
    let o = run(&[
        "kappa",
        "--config",
        cfg.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 21);
    std::fs::write(&cfg, "colour = blue\n").unwrap();
    let o = run(&["madelung", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn shells_listing() {
    let dir = tempfile::tempdir().unwrap();
    let tf = make_cache(dir.path());
    let text = stdout(&run(&["occupations", "--z", "20", "--shells", "--tf", &tf]));
    assert!(text.contains("z,ell,radial_index,eigenvalue,degeneracy"));
    let energies: Vec<f64> = text
        .lines()
        .filter(|l| l.starts_with("20,"))
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert!(energies.windows(2).all(|w| w[0] <= w[1]));
    assert!(energies.iter().all(|&e| e < 0.0));
}
