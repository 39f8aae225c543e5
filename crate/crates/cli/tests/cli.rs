use std::process::{Command, Output};

fn tgd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tgd"))
        .args(args)
        .env_remove("TGD_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON")
}

#[test]
fn describe_embedded_json() {
    let o = tgd(&["--embedded", "ntg", "describe"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["dataset"], "ntg");
    assert_eq!(v["descriptives"]["n"], 123);
    let var = v["descriptives"]["variance"].as_f64().unwrap();
    assert!((var - 30.045).abs() < 0.001);
}

#[test]
fn describe_csv_header() {
    let o = tgd(&["describe", "--embedded", "doctor_visit", "--output", "csv"]);
    let s = stdout(&o);
    assert!(s.starts_with("dataset,n,mean,variance,index_of_dispersion,max\ndoctor_visit,5190,"));
}

#[test]
fn fit_flags_tgd_as_best() {
    let o = tgd(&["--embedded", "ntg", "fit"]);
    assert!(o.status.success());
    let v = json(&o);
    let best = v["best_model"].as_u64().unwrap() as usize;
    assert_eq!(v["models"][best]["model"], "TGD");
    let q = v["models"][0]["estimates"][0]["value"].as_f64().unwrap();
    assert!((q - 0.81131).abs() < 1e-4);
}

#[test]
fn fit_csv_is_long_form() {
    let o = tgd(&["--embedded", "ntg", "fit", "--models", "geometric,nb", "--output", "csv"]);
    let s = stdout(&o);
    let mut lines = s.lines();
    assert_eq!(
        lines.next().unwrap(),
        "model,method,parameter,estimate,se,loglik,aic,best,boundary,error"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("Geometric,"));
    assert!(rows[1].starts_with("NB,MLE,r,"));
}

#[test]
fn fit_can_skip_tests() {
    let v = json(&tgd(&["--embedded", "ntg", "fit", "--models", "mle", "--no-tests"]));
    assert!(v["tests"].as_array().is_none_or(|t| t.is_empty()));
}

#[test]
fn geometric_only_has_no_best_model() {
    let v = json(&tgd(&["--embedded", "ntg", "fit", "--models", "geometric"]));
    assert!(v["best_model"].is_null());
}

#[test]
fn test_subcommand_reports_all_statistics() {
    let o = tgd(&["--embedded", "doctor_visit", "test", "--output", "csv"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let rows: Vec<&str> = s.lines().collect();
    assert_eq!(rows[0], "test,information,statistic,df,p_value");
    assert!(rows[1].starts_with("LRT,,96.34"));
    assert!(rows[2].starts_with("Score,expected,"));
    assert!(rows[3].starts_with("Score,observed,116.33"));
    assert!(rows[4].starts_with("Wald,,"));
}

#[test]
fn hazard_table_csv() {
    let o = tgd(&["hazard-table", "--q", "0.5", "--alpha", "-0.5", "--max-y", "2", "--output", "csv"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let rows: Vec<&str> = s.lines().collect();
    assert_eq!(rows[0], "y,pmf,sf,hazard,second_hazard,reversed_hazard,mrl");
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("0,0.375,1,0.375,"));
}

#[test]
fn hazard_table_json_reports_class() {
    let v = json(&tgd(&["hazard-table", "--q", "0.5", "--alpha", "0.3"]));
    assert_eq!(v["hazard_class"], "Decreasing");
    assert_eq!(v["rows"].as_array().unwrap().len(), 21);
}

#[test]
fn sample_depends_only_on_seed() {
    let a = stdout(&tgd(&["sample", "--q", "0.5", "--alpha", "0.2", "--n", "50", "--seed", "5"]));
    let b = stdout(&tgd(&["sample", "--q", "0.5", "--alpha", "0.2", "--n", "50", "--seed", "5"]));
    assert_eq!(a, b);
    let env = Command::new(env!("CARGO_BIN_EXE_tgd"))
        .args(["sample", "--q", "0.5", "--alpha", "0.2", "--n", "50"])
        .env("TGD_SEED", "5")
        .output()
        .unwrap();
    assert_eq!(stdout(&env), a);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    let total: u64 = v["counts"].as_array().unwrap().iter().map(|p| p[1].as_u64().unwrap()).sum();
    assert_eq!(total, 50);
}

#[test]
fn sample_csv_feeds_back_into_fit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let o = tgd(&["sample", "--q", "0.6", "--alpha", "-0.4", "--n", "400", "--mechanism", "mixture", "--output", "csv"]);
    assert!(stdout(&o).starts_with("value,count\n"));
    std::fs::write(&path, &o.stdout).unwrap();
    let f = tgd(&["--data", path.to_str().unwrap(), "fit", "--models", "mle"]);
    assert!(f.status.success(), "{}", String::from_utf8_lossy(&f.stderr));
    let v = json(&f);
    assert_eq!(v["models"][0]["model"], "TGD");
}

#[test]
fn simulate_bias_small_grid() {
    let o = tgd(&[
        "simulate", "bias", "--q", "0.5", "--alpha", "-0.5", "--n", "30,60", "--replications", "10",
        "--methods", "mle", "--output", "csv",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(s.starts_with("q,alpha,n,method,replications,"));
    assert_eq!(s.lines().count(), 3);
}

#[test]
fn simulate_power_json_includes_trends() {
    let o = tgd(&[
        "simulate", "power", "--q", "0.5", "--alpha", "0.5", "--n", "100,200", "--replications", "10",
    ]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["study"]["cells"].as_array().unwrap().len(), 2);
    assert!(!v["trends"]["rows"].as_array().unwrap().is_empty());
    assert_eq!(v["study"]["config"]["seed"], 1);
}

#[test]
fn data_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "value,count\n1,2\n-3,1\n").unwrap();
    let o = tgd(&["--data", path.to_str().unwrap(), "describe"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    assert_eq!(tgd(&["--data", "/nonexistent/x.csv", "describe"]).status.code(), Some(1));
    assert_eq!(tgd(&["describe"]).status.code(), Some(1));
    assert_eq!(tgd(&["--embedded", "nope", "fit"]).status.code(), Some(1));
}

#[test]
fn usage_errors_exit_with_one_and_help_with_zero() {
    assert_eq!(tgd(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(tgd(&["hazard-table", "--q", "1.5", "--alpha", "0"]).status.code(), Some(1));
    assert_eq!(tgd(&["--help"]).status.code(), Some(0));
    assert_eq!(tgd(&["--version"]).status.code(), Some(0));
}

#[test]
fn all_zero_data_cannot_be_tested() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zeros.csv");
    std::fs::write(&path, "0,12\n").unwrap();
    let o = tgd(&["--data", path.to_str().unwrap(), "test"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn text_output_is_a_table() {
    let s = stdout(&tgd(&["--embedded", "ntg", "fit", "--output", "text"]));
    assert!(s.contains("TGD"));
    assert!(s.contains("best"));
}
