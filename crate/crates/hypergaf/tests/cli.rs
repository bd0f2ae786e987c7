//! End-to-end tests of the command-line surface: exit codes, format
//! contracts, and bitwise reproducibility across worker counts.

use std::process::Command;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hypergaf"));
    // pin the provenance timestamp so JSON output is reproducible
    cmd.env("SOURCE_DATE_EPOCH", "1754697600");
    cmd
}

#[test]
fn exact_both_routes_agree() {
    let out = bin()
        .args(["exact", "--n", "2", "--L", "2", "--r", "0.5", "--route", "both"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let gap_col = header.iter().position(|c| *c == "rel_gap").unwrap();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let gap: f64 = fields[gap_col].parse().unwrap();
        assert!(gap <= 1e-8, "relative gap {gap}");
    }
}

#[test]
fn invalid_params_exit_2() {
    let out = bin()
        .args(["exact", "--n", "1", "--L", "2", "--r", "0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains(">= 2"), "message should cite the n >= 2 requirement: {err}");

    let out = bin()
        .args(["mc", "--n", "2", "--L", "2", "--r", "0.5", "--samples", "50"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bin()
        .args(["exact", "--n", "2", "--L", "2", "--r", "1.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn json_embeds_config_and_provenance() {
    let out = bin()
        .args([
            "exact", "--n", "2", "--L", "2", "--r", "0.5", "--format", "json", "--route", "disk",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["config"]["n"], 2);
    assert_eq!(doc["config"]["command"], "exact");
    assert_eq!(doc["provenance"]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(doc["provenance"]["timestamp"], 1754697600u64);
    assert!(doc["results"]["disk"]["var_e"].as_f64().unwrap() > 0.0);
    hypergaf::cli::validate_json_output(&doc).unwrap();
    // the embedded schema itself is valid JSON
    let schema: serde_json::Value =
        serde_json::from_str(hypergaf::cli::JSON_OUTPUT_SCHEMA).unwrap();
    assert_eq!(schema["required"][0], "config");
}

#[test]
fn all_json_outputs_validate() {
    let commands: Vec<Vec<&str>> = vec![
        vec!["mc", "--n", "2", "--L", "1", "--r", "0.4", "--samples", "100", "--nodes", "512"],
        vec!["asymp", "--limit", "r", "--n", "2", "--L", "2", "--grid", "0.9"],
        vec!["sweep", "--n", "2", "--L", "2", "--r-grid", "0.5"],
    ];
    for args in commands {
        let out = bin().args(&args).args(["--format", "json"]).output().unwrap();
        assert!(out.status.success(), "{args:?}");
        let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        hypergaf::cli::validate_json_output(&doc).unwrap();
    }
}

#[test]
fn mc_output_is_bit_identical_across_thread_counts() {
    let args = [
        "mc", "--n", "2", "--L", "2", "--r", "0.5", "--samples", "120", "--nodes", "1024",
        "--seed", "42",
    ];
    let run = |threads: &str, format: &str| {
        let out = bin()
            .args(args)
            .args(["--threads", threads, "--format", format])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    let a = run("1", "csv");
    let b = run("4", "csv");
    // the echoed thread count differs by construction; every numeric
    // column must be identical
    let strip = |s: &str| {
        s.lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                if f.len() > 11 {
                    f[11] = "-"; // threads column
                }
                f.join(",")
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&a), strip(&b));

    let ja = run("1", "json");
    let jb = run("2", "json");
    let mut da: serde_json::Value = serde_json::from_str(&ja).unwrap();
    let mut db: serde_json::Value = serde_json::from_str(&jb).unwrap();
    da["config"]["threads"] = serde_json::json!(0);
    db["config"]["threads"] = serde_json::json!(0);
    assert_eq!(da, db);
}

#[test]
fn rerun_reproduces_numeric_columns_bit_for_bit() {
    let args = [
        "exact", "--n", "3", "--L", "1.5", "--r", "0.7", "--route", "polar", "--tol", "1e-9",
    ];
    let a = bin().args(args).output().unwrap();
    let b = bin().args(args).output().unwrap();
    assert_eq!(a.stdout, b.stdout);

    let args = [
        "mc", "--n", "2", "--L", "1", "--r", "0.4", "--samples", "100", "--nodes", "512",
        "--seed", "7",
    ];
    let a = bin().args(args).output().unwrap();
    let b = bin().args(args).output().unwrap();
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn sweep_is_thread_count_independent() {
    let args = [
        "sweep", "--n", "2", "--L", "2", "--r-grid", "0.3,0.5,0.7,0.9", "--tol", "1e-8",
    ];
    let run = |threads: &str| {
        let out = bin().args(args).args(["--threads", threads]).output().unwrap();
        assert!(out.status.success());
        String::from_utf8(out.stdout)
            .unwrap()
            .lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                if f.len() > 8 {
                    f[8] = "-"; // threads column
                }
                f.join(",")
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn sweep_emits_one_row_per_grid_point() {
    let out = bin()
        .args([
            "sweep", "--n", "2", "--L", "2", "--r-grid", "0.3,0.5,0.7", "--tol", "1e-8",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4); // header + 3 rows
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("sweep-v1"));
}

#[test]
fn asymp_reports_regime_tags() {
    let out = bin()
        .args([
            "asymp", "--limit", "r", "--n", "2", "--L", "1", "--grid", "0.9,0.95",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("critical"), "{text}");
}

#[test]
fn svg_plot_written() {
    let dir = std::env::temp_dir().join("hypergaf_svg_test");
    std::fs::create_dir_all(&dir).unwrap();
    let svg = dir.join("ratio.svg");
    let out = bin()
        .args([
            "asymp", "--limit", "l", "--n", "2", "--r", "0.5", "--grid", "20,40,80",
            "--tol", "1e-8",
        ])
        .arg("--svg")
        .arg(&svg)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let content = std::fs::read_to_string(&svg).unwrap();
    assert!(content.starts_with("<svg"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn selftest_quick_passes_within_budget() {
    let start = std::time::Instant::now();
    let out = bin().args(["selftest", "--quick"]).output().unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(elapsed < 10.0, "quick selftest took {elapsed:.1}s");
}

#[test]
fn selftest_perturbation_hook_names_the_identity() {
    let out = bin()
        .args(["selftest", "--quick"])
        .env("HYPERGAF_SELFTEST_PERTURB", "1e-3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.contains("FAIL legendre-duplication"),
        "failure should name the violated identity: {text}"
    );
}

#[test]
fn out_file_receives_the_report() {
    let dir = std::env::temp_dir().join("hypergaf_out_test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("exact.csv");
    let out = bin()
        .args(["exact", "--n", "2", "--L", "2", "--r", "0.5", "--route", "disk"])
        .arg("--out")
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let content = std::fs::read_to_string(&path).unwrap();
    assert!(content.starts_with("schema,"));
    std::fs::remove_dir_all(&dir).ok();
}
