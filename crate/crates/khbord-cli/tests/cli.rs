use serde_json::Value;
use std::process::Command;

fn khb(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_khb")).args(args).current_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/../..")).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn hopf_all_methods_gives_five_identical_tables() {
    let (code, out) = khb(&["kh", "corpus/hopf.link", "--all-methods", "--json"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    let methods = v["methods"].as_array().unwrap();
    assert_eq!(methods.len(), 5);
    assert!(methods.iter().all(|m| m["homology"] == methods[0]["homology"] && m["agrees_with_direct"] == true));
}

#[test]
fn matchings_five_all_pairs_connected() {
    let (code, out) = khb(&["matchings", "5", "--json"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["count"], 42);
    assert_eq!(v["connectivity"], "all pairs connected");
}

#[test]
fn dd_suite_passes_at_n2() {
    let (code, out) = khb(&["verify", "--suite", "dd", "--n", "2", "--json"]);
    assert_eq!(code, 0, "{}", out);
}

#[test]
fn input_errors_exit_with_two() {
    assert_eq!(khb(&["matchings", "--n", "6"]).0, 2);
    assert_eq!(khb(&["kh", "corpus/missing.link"]).0, 2);
    assert_eq!(khb(&["kh", "corpus/hopf.link", "--method", "nope"]).0, 2);
    assert_eq!(khb(&["algebra", "3", "--roberts"]).0, 2);
    assert_eq!(khb(&["verify", "--suite", "ainfty", "--n", "4"]).0, 2);
}

#[test]
fn json_is_deterministic() {
    let a = khb(&["verify", "--suite", "pairing", "--n", "2", "--seed", "5", "--json"]);
    let b = khb(&["verify", "--suite", "pairing", "--n", "2", "--seed", "5", "--json"]);
    assert_eq!(a.0, 0);
    assert_eq!(a, b);
}
