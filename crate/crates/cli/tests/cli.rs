use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn veritest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_veritest")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).expect("valid JSON")
}

fn read_json(path: &Path) -> Value {
    json(&std::fs::read(path).unwrap())
}

fn csv_columns(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(|s| s.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn green_laffont_relation_table() {
    let out = veritest(&["check-discernment", path_str(&fixture("green_laffont.toml"))]);
    assert_eq!(code(&out), 0);
    let v = json(&out.stdout);
    let find = |theta: &str, tau: &str, psi: &str| {
        v["relations"]
            .as_array()
            .unwrap()
            .iter()
            .find(|r| r["theta"] == theta && r["tau"] == tau && r["psi"] == psi)
            .map(|r| r["comparison"].as_str().unwrap().to_string())
            .unwrap()
    };
    assert_eq!(find("theta1", "tau1", "tau2"), "strictly_more");
    assert_eq!(find("theta1", "tau2", "tau3"), "strictly_more");
    assert_eq!(find("theta2", "tau2", "tau3"), "incomparable");
    assert_eq!(find("theta3", "tau2", "tau3"), "strictly_less");
    assert_eq!(find("theta3", "tau1", "tau2"), "equivalent");
    let sets: Vec<Vec<&str>> = v["most_discerning"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["tests"].as_array().unwrap().iter().map(|t| t.as_str().unwrap()).collect())
        .collect();
    assert_eq!(sets, vec![vec!["tau1"], vec![], vec!["tau3"]]);
    assert!(v["most_discerning_function"].is_null());
}

#[test]
fn single_queries_set_the_exit_code() {
    let doc = fixture("green_laffont.toml");
    let reflexive = veritest(&["check-discernment", path_str(&doc), "--type", "theta2", "--tau", "tau3", "--psi", "tau3"]);
    assert_eq!(code(&reflexive), 0);
    let v = json(&reflexive.stdout);
    assert_eq!(v["holds"], true);
    assert_eq!(v["conversion"].as_array().unwrap().len(), 2);

    let fails = veritest(&["check-discernment", path_str(&doc), "--type", "theta2", "--tau", "tau2", "--psi", "tau3"]);
    assert_eq!(code(&fails), 1);
    assert_eq!(json(&fails.stdout)["holds"], false);

    let partial = veritest(&["check-discernment", path_str(&doc), "--type", "theta2"]);
    assert_eq!(code(&partial), 2);
    let unknown = veritest(&["check-discernment", path_str(&doc), "--type", "theta9", "--tau", "tau1", "--psi", "tau2"]);
    assert_eq!(code(&unknown), 2);
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("theta9"));
}

#[test]
fn bad_documents_report_lines() {
    let out = veritest(&["check-discernment", path_str(&fixture("malformed.toml"))]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed.toml:6:"), "{}", String::from_utf8_lossy(&out.stderr));

    let out = veritest(&["check-discernment", path_str(&fixture("bad_rate.toml"))]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad_rate.toml:4:") && err.contains("1.25"), "{err}");

    let out = veritest(&["check-discernment", "no/such/file.toml"]);
    assert_eq!(code(&out), 2);
    let out = veritest(&["frobnicate"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn virtual_values_match_closed_forms() {
    let out = veritest(&["virtual-value", path_str(&fixture("uniform.toml")), "--lambdas", "0,1,2,3"]);
    assert_eq!(code(&out), 0);
    let (header, rows) = csv_columns(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(header, ["theta", "phi_myerson", "phi_lambda_0", "phi_lambda_1", "phi_lambda_2", "phi_lambda_3"]);
    assert_eq!(rows.len(), 101);
    for r in &rows {
        let x = r[0];
        let expected = [
            2.0 * x - 1.0,
            x - 1.0 + (x - 1.0).exp(),
            x - 0.5 * (1.0 - (2.0 * (x - 1.0)).exp()),
            x - (1.0 - (3.0 * (x - 1.0)).exp()) / 3.0,
        ];
        for (got, want) in r[2..].iter().zip(expected) {
            assert!((got - want).abs() <= 1e-6, "{x}: {got} vs {want}");
        }
        assert_eq!(r[1], r[2]);
    }
}

#[test]
fn huge_precision_extracts_the_surplus() {
    let out = veritest(&["virtual-value", path_str(&fixture("uniform.toml")), "--lambdas", "1000000"]);
    let (_, rows) = csv_columns(&String::from_utf8(out.stdout).unwrap());
    for r in rows {
        assert!((r[2] - r[0]).abs() <= 1e-5);
    }
}

#[test]
fn pricing_revenue_is_stable_under_refinement() {
    let dir = tempfile::tempdir().unwrap();
    let revenue = |grid: &str| {
        let out_dir = dir.path().join(grid);
        let out = veritest(&["solve", path_str(&fixture("pricing.toml")), "pricing", "--grid", grid, "--output", path_str(&out_dir)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        read_json(&out_dir.join("summary.json"))["revenue"].as_f64().unwrap()
    };
    let (coarse, fine) = (revenue("101"), revenue("401"));
    assert!((coarse - fine).abs() <= 1e-4, "{coarse} {fine}");
}

#[test]
fn unverified_sale_posts_the_monopoly_price() {
    let dir = tempfile::tempdir().unwrap();
    let out = veritest(&["solve", path_str(&fixture("sale_unverified.toml")), "sale", "--output", path_str(dir.path())]);
    assert_eq!(code(&out), 0);
    let s = read_json(&dir.path().join("summary.json"));
    assert!((s["theta_star"].as_f64().unwrap() - 0.5).abs() <= 1e-9);
    assert!((s["revenue"].as_f64().unwrap() - 0.25).abs() <= 1e-6);
}

#[test]
fn nested_range_failure_is_certified() {
    let out = veritest(&["validate-alpha", path_str(&fixture("green_laffont_alpha.toml"))]);
    assert_eq!(code(&out), 1);
    let v = json(&out.stdout);
    assert_eq!(v["most_discerning"], false);
    let c = &v["certificate"];
    assert_eq!((c["theta1"].as_str(), c["theta2"].as_str(), c["theta3"].as_str()), (Some("theta1"), Some("theta2"), Some("theta3")));

    let out = veritest(&["validate-alpha", path_str(&fixture("nested_alpha.toml"))]);
    assert_eq!(code(&out), 0);
    assert!(json(&out.stdout)["certificate"].is_null());
}

fn solve_and_verify(doc: &str, kind: &str) {
    let dir = tempfile::tempdir().unwrap();
    let doc = fixture(doc);
    let out = veritest(&["solve", path_str(&doc), kind, "--output", path_str(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stored = read_json(&dir.path().join("summary.json"))["ic"].clone();
    let csv_path = dir.path().join("mechanism.csv");
    let out = veritest(&["verify", path_str(&doc), path_str(&csv_path)]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out.stdout), stored);

    // charging more than the value breaks participation
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let t_col = lines[0].split(',').position(|h| h == "t").unwrap();
    let last = lines.len() - 1;
    let mut fields: Vec<String> = lines[last].split(',').map(String::from).collect();
    fields[t_col] = "5".into();
    lines[last] = fields.join(",");
    std::fs::write(&csv_path, lines.join("\n") + "\n").unwrap();
    let out = veritest(&["verify", path_str(&doc), path_str(&csv_path)]);
    assert_eq!(code(&out), 1);
}

#[test]
fn verification_reproduces_stored_diagnostics() {
    solve_and_verify("pricing.toml", "pricing");
    solve_and_verify("beta_sale.toml", "sale");
    solve_and_verify("auction.toml", "auction");
}

#[test]
fn symmetric_auction_revenue() {
    let dir = tempfile::tempdir().unwrap();
    let out = veritest(&["solve", path_str(&fixture("symmetric_auction.toml")), "auction", "--output", path_str(dir.path())]);
    assert_eq!(code(&out), 0);
    let s = read_json(&dir.path().join("summary.json"));
    assert!((s["revenue"].as_f64().unwrap() - 5.0 / 12.0).abs() <= 1e-3);
    let (header, rows) = csv_columns(&std::fs::read_to_string(dir.path().join("mechanism.csv")).unwrap());
    assert_eq!(header, ["agent", "theta", "q", "t", "U", "phi", "phi_myerson"]);
    assert_eq!(rows.len(), 2 * 201);
}

#[test]
fn output_is_deterministic() {
    let a = veritest(&["--seed", "11", "random-profile", "--types", "3", "--messages", "2"]);
    let b = veritest(&["random-profile", "--types", "3", "--messages", "2", "--seed", "11"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let c = veritest(&["random-profile", "--types", "3", "--messages", "2", "--seed", "12"]);
    assert_ne!(a.stdout, c.stdout);

    let doc = fixture("pricing.toml");
    let one = veritest(&["solve", path_str(&doc), "pricing", "--threads", "1"]);
    let many = veritest(&["solve", path_str(&doc), "pricing", "--threads", "4"]);
    assert_eq!(one.stdout, many.stdout);
    assert_eq!(one.stderr, many.stderr);
}

#[test]
fn random_profiles_canonicalize() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..10 {
        let seed = seed.to_string();
        let profile = dir.path().join(format!("profile{seed}.toml"));
        let out = veritest(&["random-profile", "--seed", &seed]);
        assert_eq!(code(&out), 0);
        std::fs::write(&profile, &out.stdout).unwrap();
        let out_dir = dir.path().join(format!("canonical{seed}"));
        let out = veritest(&["canonicalize", path_str(&profile), "--output", path_str(&out_dir)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let report = read_json(&out_dir.join("report.json"));
        assert!(report["scf_difference"].as_f64().unwrap() <= 1e-10);
        assert_eq!(report["canonical_incentive_compatible"], true);
        // the canonical document reads back and is already canonical
        let again = veritest(&["canonicalize", path_str(&out_dir.join("canonical.toml"))]);
        assert_eq!(code(&again), 0);
        assert_eq!(json(&again.stderr)["scf_difference"].as_f64().unwrap(), 0.0);
    }
}
