use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lattice-loc"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn temp_scenario(tag: &str, v: &Value) -> PathBuf {
    let p = std::env::temp_dir().join(format!("lattice-loc-{}-{tag}.json", std::process::id()));
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

fn run(args: &[&str], path: &PathBuf) -> Output {
    bin().args(args).arg("--scenario").arg(path).output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn enumerate_counts_d4_boson_list() {
    let o = run(&["enumerate"], &scenario("example_1_1.json"));
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["counts"], json!({"relevant": 22, "marginal": 45, "total": 67}));
}

#[test]
fn loc_nearest_neighbour_example_csv() {
    let o = run(&["loc", "--format", "csv"], &scenario("example_1_5_ii.json"));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("sector,monomial,coeff_num,coeff_den"));
    // q0 = 2, q1 = 3/4: q^(1) = 2 + 8 * 3/4 = 8.
    assert!(text.lines().any(|l| l == "0,phi phibar,8,1"), "{text}");
    assert!(text.lines().any(|l| l == "0,D+1phi D+1phibar,3,4"), "{text}");
}

#[test]
fn loc_json_reports_verification_and_terms() {
    let o = run(&["loc"], &scenario("example_1_5_iii.json"));
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    let r = &v["results"][0];
    assert_eq!(r["verification"]["status"], "pass");
    assert_eq!(r["base_point"], json!([0, 0, 0, 0]));
    let terms = r["functional"].as_array().unwrap();
    assert!(terms.iter().all(|t| t["coeff"].is_array() && t["factors"].is_array()));
    let off = run(&["loc", "--verify", "off"], &scenario("example_1_5_iii.json"));
    assert_eq!(stdout_json(&off)["results"][0]["functional"], r["functional"]);
}

#[test]
fn corrupted_table_fails_condition_i_and_names_the_monomial() {
    let o = run(&["verify", "--format", "text"], &scenario("corrupted_phat.json"));
    assert_eq!(o.status.code(), Some(1));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("condition (i)"), "{text}");
    assert!(text.contains("phi D+1phi"), "{text}");
}

#[test]
fn verify_is_seed_stable_and_passes() {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(scenario("verify_default.json")).unwrap()).unwrap();
    v["trials"] = json!(3);
    let p = temp_scenario("stable", &v);
    let a = run(&["verify", "--seed", "11"], &p);
    let b = run(&["verify", "--seed", "11"], &p);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stdout));
    assert_eq!(a.stdout, b.stdout);
    let report = stdout_json(&a);
    assert_eq!(report["ok"], json!(true));
    assert!(report["checks"].as_array().unwrap().iter().any(|c| c["name"] == "negative_control" && c["passed"] == true));
}

#[test]
fn contract_csv_columns_and_out_file() {
    let out = std::env::temp_dir().join(format!("lattice-loc-{}-contract.csv", std::process::id()));
    let o = bin()
        .args(["contract", "--format", "csv", "--out"])
        .arg(&out)
        .arg("--scenario")
        .arg(scenario("contraction.json"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "L,j,ratio_num,ratio_den,log_ratio");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].starts_with("2,1,1,8,"));
}

#[test]
fn configuration_errors_exit_2() {
    let missing = run(&["loc"], &PathBuf::from("/nonexistent/scenario.json"));
    assert_eq!(missing.status.code(), Some(2));
    let bad = bin().args(["loc", "--format", "yaml"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let p = temp_scenario("badspecies", &json!({"geometry": {"d": 1, "L": 4, "N": 2}, "species": [{"name": "psi", "statistics": "fermion", "dimension": 1}], "d_plus": 2}));
    assert_eq!(run(&["enumerate"], &p).status.code(), Some(2));
}

#[test]
fn domain_and_precondition_errors_exit_3() {
    let base = json!({
        "geometry": {"d": 1, "L": 4, "N": 2},
        "species": [{"name": "phi", "dimension": [1, 2]}],
        "d_plus": 2,
        "patch": {"radius": 2},
        "X": [[0]],
        "functional": [{"coeff": 1, "factors": [[5, "phi"]]}]
    });
    let p = temp_scenario("domain", &base);
    assert_eq!(run(&["loc"], &p).status.code(), Some(3));
    let mut pre = base.clone();
    pre["functional"] = json!([{"coeff": 1, "factors": [[0, "phi"]]}]);
    pre["Y"] = json!([[1]]);
    let p = temp_scenario("precondition", &pre);
    assert_eq!(run(&["loc"], &p).status.code(), Some(3));
}

#[test]
fn empty_x_gives_zero() {
    let p = temp_scenario(
        "empty",
        &json!({
            "geometry": {"d": 1, "L": 4, "N": 2},
            "species": [{"name": "phi", "dimension": [1, 2]}],
            "d_plus": 2,
            "X": [],
            "functional": [{"coeff": 1, "factors": [[0, "phi"]]}]
        }),
    );
    let o = run(&["loc"], &p);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["results"][0]["polynomial"], json!([]));
}
