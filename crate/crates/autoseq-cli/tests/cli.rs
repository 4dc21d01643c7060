//! End-to-end tests of the `autoseq` binary: exit codes, report shapes,
//! frozen example values, and byte-level determinism.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use autoseq::machines;
use serde_json::Value;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_autoseq")
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir()
        .join(format!("autoseq-cli-{}-{tag}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("scratch dir");
    dir
}

fn write_machine(dir: &Path, name: &str, a: &autoseq::Dfao) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, a.serialize()).expect("machine file");
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf8 stderr")
}

fn json(out: &Output) -> Value {
    serde_json::from_str(&stdout(out)).expect("stdout parses as json")
}

fn name_set(v: &Value) -> BTreeSet<String> {
    v.as_array()
        .expect("array of names")
        .iter()
        .map(|x| x.as_str().expect("name string").to_string())
        .collect()
}

fn set_of(names: &[&str]) -> BTreeSet<String> {
    names.iter().map(|s| s.to_string()).collect()
}

#[test]
fn analyze_reports_the_k3_structural_table() {
    let dir = scratch("analyze-k3");
    let input = write_machine(&dir, "k3.txt", &machines::k3_height2());
    let out = run(&["--input", input.to_str().unwrap(), "analyze"]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));

    let v = json(&out);
    assert_eq!(v["r"], 2);
    let comps = v["components"].as_array().expect("components");
    assert_eq!(comps.len(), 1);
    let c = &comps[0];
    assert_eq!(c["rank"], 4);
    assert_eq!(c["height"], 2);
    assert_eq!(c["base_used"], 3);

    let images: BTreeSet<BTreeSet<String>> = c["images"]
        .as_array()
        .expect("images")
        .iter()
        .map(name_set)
        .collect();
    let want: BTreeSet<BTreeSet<String>> = [
        set_of(&["α", "β", "γ", "ε"]),
        set_of(&["α", "γ", "δ", "ε"]),
    ]
    .into_iter()
    .collect();
    assert_eq!(images, want);

    let classes = c["classes"].as_array().expect("classes");
    assert_eq!(classes.len(), 2);
    assert_eq!(name_set(&classes[0]), set_of(&["α", "β", "δ"]));
    assert_eq!(name_set(&classes[1]), set_of(&["γ", "ε"]));

    // every table cell meets exactly two states, hence r = 2
    let sij = c["sij"].as_array().expect("sij");
    let mut cells: Vec<BTreeSet<String>> = Vec::new();
    for row in sij {
        for cell in row.as_array().expect("sij row") {
            cells.push(name_set(cell));
        }
    }
    assert!(cells.contains(&set_of(&["α", "β"])));
    assert!(cells.contains(&set_of(&["α", "δ"])));
    assert!(cells.iter().filter(|c| **c == set_of(&["γ", "ε"])).count() == 2);
    assert!(cells.iter().all(|c| c.len() == 2));
}

#[test]
fn analyze_reports_the_digit_sum_parity_machine() {
    let dir = scratch("analyze-tm");
    let input = write_machine(&dir, "tm.txt", &machines::thue_morse());
    let out = run(&["--input", input.to_str().unwrap(), "analyze"]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));

    let v = json(&out);
    assert_eq!(v["r"], 2);
    assert_eq!(name_set(&v["attained_labels"]), set_of(&["0", "1"]));
    let c = &v["components"][0];
    assert_eq!(c["rank"], 2);
    assert_eq!(c["height"], 1);
}

#[test]
fn progression_count_csv_is_exact_for_length_six() {
    let dir = scratch("ap-csv");
    let input = write_machine(&dir, "tm.txt", &machines::thue_morse());
    let out = run(&[
        "--input",
        input.to_str().unwrap(),
        "--format",
        "csv",
        "complexity",
        "--kind",
        "ap",
        "--ell",
        "6",
        "--N",
        "4096",
        "--Mmax",
        "64",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    assert_eq!(
        stdout(&out),
        "ell,count,budget_N,budget_M,exact_or_lower\n6,64,4096,64,exact\n"
    );
}

#[test]
fn window_count_profile_lists_every_length() {
    let dir = scratch("ordinary-csv");
    let input = write_machine(&dir, "tm.txt", &machines::thue_morse());
    let out = run(&[
        "--input",
        input.to_str().unwrap(),
        "--format",
        "csv",
        "complexity",
        "--kind",
        "ordinary",
        "--ell",
        "4",
        "--N",
        "4096",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "ell,count,budget_N,budget_M,exact_or_lower");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("1,2,4096,"));
    assert!(lines[2].starts_with("2,4,4096,"));
    assert!(lines[3].starts_with("3,6,4096,"));
    assert!(lines[4].starts_with("4,10,4096,"));
}

#[test]
fn polynomial_count_respects_the_label_ceiling() {
    let dir = scratch("poly");
    let input = write_machine(&dir, "mod3.txt", &machines::mod3_parity());
    let out = run(&[
        "--input",
        input.to_str().unwrap(),
        "complexity",
        "--kind",
        "poly",
        "--ell",
        "3",
        "--degree",
        "2",
        "--coeff-bound",
        "8",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let v = json(&out);
    let count = v["rows"][0]["count"].as_u64().expect("count");
    assert!(count <= 27, "count {count} above the 3^3 ceiling");
    assert!(count >= 9, "degree two reaches at least the linear words");
}

#[test]
fn verify_passes_on_digit_sum_parity() {
    let dir = scratch("verify");
    let input = write_machine(&dir, "tm.txt", &machines::thue_morse());
    let out = run(&[
        "--input",
        input.to_str().unwrap(),
        "--format",
        "csv",
        "verify",
        "--ell-min",
        "1",
        "--ell-max",
        "6",
        "--N",
        "4096",
        "--Mmax",
        "32",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "ell,r_pow,observed,ceiling,met_lower,excess_epsilon,ordinary,arithmetic,poly_deg1,poly_deg2"
    );
    assert_eq!(lines.len(), 7);
    for line in &lines[1..] {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 10);
        assert_eq!(cols[4], "true", "lower bound must hold: {line}");
        let eps: f64 = cols[5].parse().expect("epsilon parses");
        assert!(eps >= -1e-12, "epsilon negative: {line}");
        let ordinary: u64 = cols[6].parse().unwrap();
        let arithmetic: u64 = cols[7].parse().unwrap();
        let d1: u64 = cols[8].parse().unwrap();
        let d2: u64 = cols[9].parse().unwrap();
        assert!(ordinary <= arithmetic && arithmetic <= d1 && d1 <= d2, "{line}");
    }
}

#[test]
fn malformed_machine_file_exits_two() {
    let dir = scratch("malformed");
    let path = dir.join("broken.txt");
    std::fs::write(&path, "base 2\nstates a\n").unwrap();
    let out = run(&["--input", path.to_str().unwrap(), "analyze"]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).starts_with("error:"), "stderr: {}", stderr(&out));
}

#[test]
fn missing_input_flag_exits_two() {
    let out = run(&["analyze"]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("--input"), "stderr: {}", stderr(&out));
}

#[test]
fn unknown_flag_exits_two() {
    let out = run(&["analyze", "--no-such-flag"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn csv_is_rejected_where_no_tabular_form_exists() {
    let dir = scratch("csv-reject");
    let input = write_machine(&dir, "tm.txt", &machines::thue_morse());
    for sub in ["analyze", "density", "masc"] {
        let out = run(&["--input", input.to_str().unwrap(), "--format", "csv", sub]);
        assert_eq!(exit_code(&out), 2, "{sub} accepted csv");
        assert!(stderr(&out).contains("csv"), "{sub}: {}", stderr(&out));
    }
}

#[test]
fn cover_emits_report_and_verdict_line() {
    let dir = scratch("cover");
    let report_path = dir.join("cover.json");
    let out = run(&[
        "--out",
        report_path.to_str().unwrap(),
        "cover",
        "--base",
        "2",
        "--poly",
        "0,1",
        "--word",
        "11",
        "--ell",
        "1000",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stderr(&out).starts_with("cover ok:"), "stderr: {}", stderr(&out));

    let v: Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(v["verdict"]["partition_ok"], true);
    assert_eq!(v["verdict"]["pieces_ok"], true);
    assert!(v["pieces"].as_array().unwrap().len() > 0);
    assert!(v["params"]["theta"].as_f64().unwrap() > 0.0);
}

#[test]
fn gowers_csv_does_not_depend_on_the_thread_count() {
    let dir = scratch("gowers");
    let input = write_machine(&dir, "tm.txt", &machines::thue_morse());
    let args = |threads: &'static str| {
        vec![
            "--input",
            input.to_str().unwrap(),
            "--format",
            "csv",
            "--threads",
            threads,
            "gowers",
            "--label",
            "1",
            "--d",
            "2",
            "--n-list",
            "64,128,256",
        ]
    };
    let one = run(&args("1"));
    let four = run(&args("4"));
    assert_eq!(exit_code(&one), 0, "stderr: {}", stderr(&one));
    assert_eq!(stdout(&one), stdout(&four));

    let text = stdout(&one);
    let values: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 3);
    assert!(values[0] > values[1] && values[1] > values[2], "{values:?}");
}

#[test]
fn masc_records_the_seed_and_verdict() {
    let dir = scratch("masc");
    let input = write_machine(&dir, "tm.txt", &machines::thue_morse());
    let out = run(&[
        "--input",
        input.to_str().unwrap(),
        "--seed",
        "9",
        "masc",
        "--depth",
        "3",
        "--N",
        "1024",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["seed"], 9);
    assert_eq!(v["verdict"], "Maximal");
    assert_eq!(v["structural_r"], 2);
    let lo = v["bracket"]["r_lo"].as_u64().unwrap();
    let hi = v["bracket"]["r_hi"].as_u64().unwrap();
    assert!(lo <= 2 && 2 <= hi, "bracket [{lo},{hi}] misses 2");
}

#[test]
fn density_lists_values_with_log_density_estimates() {
    let dir = scratch("density");
    let input = write_machine(&dir, "mod3.txt", &machines::mod3_parity());
    let out = run(&[
        "--input",
        input.to_str().unwrap(),
        "density",
        "--set",
        "unconstrained",
        "--N",
        "4096",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let v = json(&out);
    assert_eq!(name_set(&v["values"]), set_of(&["0", "1", "2"]));
    let dens = v["log_densities"].as_object().unwrap();
    assert_eq!(dens.len(), 3);
    for (label, d) in dens {
        let d = d.as_f64().unwrap();
        assert!(d.is_finite() && d > 0.0, "{label}: {d}");
    }
}

#[test]
fn density_rejects_a_non_coprime_residue() {
    let dir = scratch("density-bad");
    let input = write_machine(&dir, "tm.txt", &machines::thue_morse());
    let out = run(&[
        "--input",
        input.to_str().unwrap(),
        "density",
        "--set",
        "res=2%2",
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).starts_with("error:"), "stderr: {}", stderr(&out));
}

#[test]
fn repeated_runs_write_identical_bytes() {
    let dir = scratch("determinism");
    let input = write_machine(&dir, "tm.txt", &machines::thue_morse());
    let input = input.to_str().unwrap();

    fn masc_args<'a>(input: &'a str, out_file: &'a str) -> Vec<&'a str> {
        vec![
            "--input", input, "--seed", "7", "--out", out_file,
            "masc", "--depth", "3", "--N", "2048",
        ]
    }
    let a = dir.join("masc-a.json");
    let b = dir.join("masc-b.json");
    assert_eq!(exit_code(&run(&masc_args(input, a.to_str().unwrap()))), 0);
    assert_eq!(exit_code(&run(&masc_args(input, b.to_str().unwrap()))), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    fn verify_args<'a>(input: &'a str, out_file: &'a str) -> Vec<&'a str> {
        vec![
            "--input", input, "--format", "csv", "--out", out_file,
            "verify", "--ell-max", "5", "--N", "2048", "--Mmax", "16",
        ]
    }
    let c = dir.join("verify-a.csv");
    let d = dir.join("verify-b.csv");
    assert_eq!(exit_code(&run(&verify_args(input, c.to_str().unwrap()))), 0);
    assert_eq!(exit_code(&run(&verify_args(input, d.to_str().unwrap()))), 0);
    let bytes = std::fs::read(&c).unwrap();
    assert_eq!(bytes, std::fs::read(&d).unwrap());
    assert!(!bytes.is_empty());
}
