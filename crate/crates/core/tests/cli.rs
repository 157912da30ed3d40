use std::io::Write as _;
use std::process::Command;

use serde_json::Value;
use tempfile::NamedTempFile;

use toric_ch2::atlas::SHIPPED_ATLAS;
use toric_ch2::cli;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("toric-ch2").chain(args.iter().copied());
    let code = cli::run(argv, &mut out, &mut err);
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn atlas_file(text: &str) -> NamedTempFile {
    let mut f = NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn path(f: &NamedTempFile) -> &str {
    f.path().to_str().unwrap()
}

const H1: &str = "\
variety H1
rays 8
1 0 0 0
0 1 0 0
0 0 1 0
0 0 0 1
2 0 -1 -1
-1 -1 0 0
0 -1 0 0
1 1 0 0
collections 6
1 2
7 8
1 6
2 7
6 8
3 4 5
end
";

#[test]
fn list_shipped() {
    let r = run(&["list"]);
    assert_eq!(r.code, 0);
    let lines: Vec<&str> = r.stdout.lines().collect();
    assert_eq!(lines.len(), 67);
    assert_eq!(lines[0], "P4\t5\t1");
    assert!(lines.contains(&"M5\t8\t7\tderived"));
}

#[test]
fn list_empty_db() {
    let f = atlas_file("# nothing here\n");
    let r = run(&["--db", path(&f), "list"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.stdout, "");
}

#[test]
fn malformed_db_exits_2_with_line() {
    let f = atlas_file("variety X\nrays 5\n1 0 0 0\n0 1 0 zero\n");
    let r = run(&["--db", path(&f), "list"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("line 4"), "{}", r.stderr);
}

#[test]
fn ch2_single_surface() {
    assert_eq!(run(&["ch2", "H1", "--surface", "3,4"]).stdout, "-3/2\n");
    assert_eq!(run(&["ch2", "R1", "--surface", "1,3"]).stdout, "-4\n");
    assert_eq!(run(&["ch2", "P4", "--surface", "2,5"]).stdout, "5/2\n");
}

#[test]
fn ch2_not_a_cone() {
    let r = run(&["ch2", "H1", "--surface", "1,2"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("not a cone"), "{}", r.stderr);
    assert_eq!(r.stdout, "");
    assert_eq!(run(&["ch2", "H1", "--surface", "3,99"]).code, 1);
    assert_eq!(run(&["ch2", "H1", "--surface", "3"]).code, 2);
}

#[test]
fn ch2_unknown_variety() {
    let r = run(&["ch2", "Z99"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("Z99"));
}

#[test]
fn ch2_all_surfaces() {
    let r = run(&["ch2", "P4"]);
    assert_eq!(r.code, 0);
    let lines: Vec<&str> = r.stdout.lines().collect();
    assert_eq!(lines[0], "variety\tsurface\tvalue\tclassification");
    assert_eq!(lines[1], "P4\tV(1,2)\t5/2\ttwo_fano");
    assert_eq!(lines.len(), 1 + 10 + 1);
    assert_eq!(lines[11], "# min 5/2 at V(1,2): two_fano");
}

#[test]
fn classify_examples() {
    let r = run(&["classify", "124", "P4"]);
    assert_eq!(r.code, 0);
    let lines: Vec<&str> = r.stdout.lines().collect();
    let f: Vec<&str> = lines[1].split('\t').collect();
    assert_eq!((f[0], f[3]), ("124", "not_nef"));
    let min: f64 = {
        let (p, q) = f[2].split_once('/').unwrap_or((f[2], "1"));
        p.parse::<f64>().unwrap() / q.parse::<f64>().unwrap()
    };
    assert!(min <= -4.0);
    assert_eq!(lines[2], "P4\tV(1,2)\t5/2\ttwo_fano");
    assert_eq!(lines[3], "# two_fano: 1 of 2 (P4)");
}

#[test]
fn classify_all() {
    let r = run(&["classify", "--all"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.stdout.lines().count(), 1 + 67 + 1);
    assert!(r.stdout.ends_with("# two_fano: 1 of 67 (P4)\n"));
    assert_eq!(run(&["classify"]).code, 2);
}

#[test]
fn classify_rejects_invalid_record() {
    let broken = H1
        .replace("3 4 5\n", "")
        .replace("collections 6", "collections 5");
    let f = atlas_file(&broken);
    let r = run(&["--db", path(&f), "classify", "H1"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("failed validation"), "{}", r.stderr);
}

#[test]
fn paper_table_reports_only_the_h2_row() {
    // H2 at V(3,4) is -3/2 by two independent computations; the table prints -1
    let r = run(&["paper-table"]);
    assert_eq!(r.code, 1);
    let rows: Vec<&str> = r.stdout.lines().skip(1).collect();
    assert_eq!(rows.len(), 66);
    let bad: Vec<&str> = rows
        .iter()
        .copied()
        .filter(|l| l.ends_with("MISMATCH"))
        .collect();
    assert_eq!(bad, ["H2\tV(3,4)\t-3/2\tnot_nef\t-1\tMISMATCH"]);
    assert!(r.stderr.contains("H2 V(3,4): expected -1, computed -3/2"));
}

#[test]
fn paper_table_detects_corrupted_e1() {
    let corrupted = SHIPPED_ATLAS.replacen(
        "variety E1\nrays 7\n1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n2 -1 -1 -1\n",
        "variety E1\nrays 7\n1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n3 -1 -1 -1\n",
        1,
    );
    assert_ne!(corrupted, SHIPPED_ATLAS);
    let f = atlas_file(&corrupted);
    let r = run(&["--db", path(&f), "paper-table"]);
    assert_eq!(r.code, 1);
    assert!(
        r.stderr.lines().any(|l| l.starts_with("E1 ")),
        "{}",
        r.stderr
    );
}

#[test]
fn paper_table_json_keys() {
    let r = run(&["--format", "json", "paper-table"]);
    let rows: Vec<Value> = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(rows.len(), 66);
    // key order is checked on the raw text; Value maps do not keep it
    let first = &r.stdout[..r.stdout.find('}').unwrap()];
    let pos: Vec<usize> = ["variety", "surface", "value", "classification"]
        .iter()
        .map(|k| first.find(&format!("\"{k}\":")).unwrap())
        .collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]), "{first}");
    let obj = rows[0].as_object().unwrap();
    assert_eq!(obj["variety"], "E1");
}

#[test]
fn tsv_and_json_agree() {
    let tsv = run(&["classify", "--all"]).stdout;
    let json: Vec<Value> =
        serde_json::from_str(&run(&["--format", "json", "classify", "--all"]).stdout).unwrap();
    let tsv_rows: Vec<Vec<&str>> = tsv
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split('\t').collect())
        .collect();
    assert_eq!(tsv_rows.len(), json.len());
    for (t, j) in tsv_rows.iter().zip(&json) {
        for (i, key) in ["variety", "surface", "value", "classification"]
            .iter()
            .enumerate()
        {
            assert_eq!(t[i], j[key].as_str().unwrap());
        }
    }

    let single: Value =
        serde_json::from_str(&run(&["--format", "json", "ch2", "H1", "--surface", "3,4"]).stdout)
            .unwrap();
    assert_eq!(single["value"], "-3/2");
    assert_eq!(single["surface"], "V(3,4)");
}

#[test]
fn output_is_deterministic() {
    for args in [
        &["classify", "--all"][..],
        &["--jobs", "3", "classify", "--all"],
        &["ch2", "124"],
    ] {
        assert_eq!(run(args).stdout, run(args).stdout);
    }
    assert_eq!(
        run(&["--jobs", "1", "ch2", "Q17"]).stdout,
        run(&["--jobs", "4", "ch2", "Q17"]).stdout
    );
}

#[test]
fn show_round_trips() {
    let r = run(&["show", "H1"]);
    assert_eq!(r.stdout, H1);
    let json: Value =
        serde_json::from_str(&run(&["--format", "json", "show", "M5"]).stdout).unwrap();
    assert_eq!(json["derived"], true);
    assert_eq!(json["rays"].as_array().unwrap().len(), 8);
    assert_eq!(run(&["show", "nope"]).code, 1);
}

#[test]
fn validate_shipped_data_file() {
    let file = concat!(env!("CARGO_MANIFEST_DIR"), "/data/atlas.txt");
    let r = run(&["validate", file]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.stdout.lines().count(), 68);
    assert!(r.stdout.lines().skip(1).all(|l| l.ends_with("\tpass")));
}

#[test]
fn validate_non_unimodular() {
    // v5 = -(1,1,1,2) gives a cone of determinant 2
    let text = "variety bad\nrays 5\n1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n-1 -1 -1 -2\ncollections 1\n1 2 3 4 5\nend\n";
    let f = atlas_file(text);
    let r = run(&["validate", path(&f)]);
    assert_eq!(r.code, 1);
    assert_eq!(
        r.stdout.lines().nth(1).unwrap().split('\t').nth(1),
        Some("false")
    );
}

#[test]
fn validate_wrong_collection() {
    let f = atlas_file(&H1.replace("6 8\n", "5 8\n"));
    let r = run(&["validate", path(&f)]);
    assert_eq!(r.code, 1);
    let row: Vec<&str> = r.stdout.lines().nth(1).unwrap().split('\t').collect();
    assert_eq!(row[3], "false");
    assert_eq!(row[5], "FAIL");
}

#[test]
fn validate_parse_error() {
    let f = atlas_file("variety X\nrays 2\n1 0 0 0\n");
    assert_eq!(run(&["validate", path(&f)]).code, 2);
    assert_eq!(run(&["validate", "/nonexistent/atlas.txt"]).code, 2);
}

#[test]
fn usage_errors() {
    assert_eq!(run(&[]).code, 2);
    assert_eq!(run(&["frobnicate"]).code, 2);
    assert_eq!(run(&["--format", "xml", "list"]).code, 2);
    assert_eq!(run(&["--help"]).code, 0);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_toric-ch2");
    let out = Command::new(bin)
        .args(["ch2", "H1", "--surface", "3,4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(out.stdout, b"-3/2\n");
    let out = Command::new(bin)
        .args(["ch2", "H1", "--surface", "1,2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(bin)
        .args(["--db", "/nonexistent"])
        .arg("list")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
