//! End-to-end acceptance checks for the `ckrylov` binary: the exit-code
//! contract, capability skips in catalog mode, determinism of the table, and
//! history export. Each test prints a `[acceptance]` line on success so a
//! `--nocapture` run reads as a checklist.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_ckrylov")
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("no signal")
}

/// 4x4 identity, tagged general (detected as symmetric from its entries).
const ID4: &str = "%%MatrixMarket matrix coordinate complex general
4 4 4
1 1 1 0
2 2 1 0
3 3 1 0
4 4 1 0
";

/// Upper-triangular 2x2: genuinely non-symmetric, trivially well conditioned.
const NONSYM2: &str = "%%MatrixMarket matrix coordinate complex general
2 2 3
1 1 1 0
1 2 0.25 0.5
2 2 1 0
";

/// Basis swap: `<r0, A r0> = 0` with `y = e1`, a genuine first-step breakdown
/// for the transpose-free methods.
const SWAP2: &str = "%%MatrixMarket matrix coordinate complex general
2 2 2
1 2 1 0
2 1 1 0
";

/// Complex-symmetric 3x3 stored as a lower triangle under the symmetric tag.
const SYM3: &str = "%%MatrixMarket matrix coordinate complex symmetric
3 3 5
1 1 4 1
2 2 4 -0.5
3 3 4 0.25
2 1 0.5 0.5
3 2 -0.25 1
";

/// The same symmetric content written out in full under a general tag.
const SYM3_GENERAL: &str = "%%MatrixMarket matrix coordinate complex general
3 3 7
1 1 4 1
2 2 4 -0.5
3 3 4 0.25
1 2 0.5 0.5
2 1 0.5 0.5
2 3 -0.25 1
3 2 -0.25 1
";

fn fixture(dir: &Path, name: &str, contents: &str) {
    std::fs::write(dir.join(name), contents).unwrap();
}

#[test]
fn exit_zero_on_success() {
    let tmp = TempDir::new().unwrap();
    fixture(tmp.path(), "id4.mtx", ID4);
    fixture(tmp.path(), "sym3.mtx", SYM3);

    let o = run(tmp.path(), &["--matrix", "id4.mtx", "--method", "bicgstab", "--tol", "1e-10"]);
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    let table = stdout(&o);
    let row = table.lines().nth(1).expect("one result row");
    let cols: Vec<&str> = row.split_whitespace().collect();
    assert_eq!(cols[0], "bicgstab");
    assert_eq!(cols[1], "converged");
    let iters: usize = cols[2].parse().unwrap();
    assert!(iters <= 1, "identity should take at most one iteration, took {iters}");

    let o = run(tmp.path(), &["--matrix", "sym3.mtx", "--method", "cocg"]);
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    assert!(stdout(&o).contains("converged"));

    println!("[acceptance] CLI exit code 0 on converged runs: PASS");
}

#[test]
fn exit_two_on_usage_errors() {
    let tmp = TempDir::new().unwrap();
    fixture(tmp.path(), "id4.mtx", ID4);

    // unknown flag (rejected by the argument parser)
    let o = run(tmp.path(), &["--matrix", "id4.mtx", "--frobnicate"]);
    assert_eq!(code(&o), 2, "unknown flag");

    // unknown method name
    let o = run(tmp.path(), &["--matrix", "id4.mtx", "--method", "sor"]);
    assert_eq!(code(&o), 2, "unknown method");
    assert!(stderr(&o).contains("sor"), "names the offender: {}", stderr(&o));

    // missing file
    let o = run(tmp.path(), &["--matrix", "nope.mtx"]);
    assert_eq!(code(&o), 2, "missing file");

    // malformed matrix contents
    fixture(tmp.path(), "bad.mtx", "%%MatrixMarket matrix coordinate complex general\n2 2 1\n1 1 not-a-number 0\n");
    let o = run(tmp.path(), &["--matrix", "bad.mtx"]);
    assert_eq!(code(&o), 2, "malformed file");
    assert!(stderr(&o).contains("line"), "parse errors cite a line: {}", stderr(&o));

    // parameters inconsistent with the chosen method
    for args in [
        vec!["--matrix", "id4.mtx", "--method", "gmres", "--ell", "4"],
        vec!["--matrix", "id4.mtx", "--method", "bicgstab", "--restart", "10"],
        vec!["--matrix", "id4.mtx", "--method", "csym", "--precond", "jacobi"],
        vec!["--matrix", "id4.mtx", "--method", "bicg", "--gpm", "2"],
    ] {
        let o = run(tmp.path(), &args);
        assert_eq!(code(&o), 2, "inconsistent parameters: {args:?}\n{}", stderr(&o));
    }

    // out-of-range numerics
    let o = run(tmp.path(), &["--matrix", "id4.mtx", "--tol", "0"]);
    assert_eq!(code(&o), 2, "tol = 0");
    let o = run(tmp.path(), &["--matrix", "id4.mtx", "--maxit", "0"]);
    assert_eq!(code(&o), 2, "maxit = 0");

    // right-hand side length mismatch
    fixture(tmp.path(), "short.rhs", "1 0\n");
    let o = run(tmp.path(), &["--matrix", "id4.mtx", "--rhs", "short.rhs"]);
    assert_eq!(code(&o), 2, "rhs length mismatch");

    println!("[acceptance] CLI exit code 2 on usage errors: PASS");
}

#[test]
fn exit_one_on_solver_failure() {
    let tmp = TempDir::new().unwrap();
    fixture(tmp.path(), "swap2.mtx", SWAP2);
    fixture(tmp.path(), "e1.rhs", "1 0\n0 0\n");

    let o = run(
        tmp.path(),
        &["--matrix", "swap2.mtx", "--rhs", "e1.rhs", "--method", "bicgstab"],
    );
    assert_eq!(code(&o), 1, "stdout: {}", stdout(&o));
    assert!(stdout(&o).contains("breakdown"), "table: {}", stdout(&o));

    println!("[acceptance] CLI exit code 1 on solver failure: PASS");
}

#[test]
fn catalog_mode_skips_symmetric_methods_on_nonsymmetric_input() {
    let tmp = TempDir::new().unwrap();
    fixture(tmp.path(), "nonsym2.mtx", NONSYM2);

    let o = run(tmp.path(), &["--matrix", "nonsym2.mtx"]);
    assert_eq!(code(&o), 0, "skips must not fail the run: {}", stdout(&o));
    let table = stdout(&o);
    for m in ["cocg", "cocr", "csym"] {
        let row = table
            .lines()
            .find(|l| l.starts_with(m))
            .unwrap_or_else(|| panic!("{m} row missing:\n{table}"));
        assert!(row.contains("SKIPPED"), "{m} should be skipped:\n{table}");
        assert!(row.contains("complex-symmetric"), "skip note explains why:\n{table}");
    }
    // every other catalog entry actually ran and converged
    let converged = table.lines().filter(|l| l.contains(" converged")).count();
    assert_eq!(converged, 13, "table:\n{table}");

    println!("[acceptance] catalog mode skips (not fails) gated methods: PASS");
}

#[test]
fn table_is_deterministic_apart_from_wall_time() {
    let tmp = TempDir::new().unwrap();
    fixture(tmp.path(), "nonsym2.mtx", NONSYM2);

    let args = ["--matrix", "nonsym2.mtx", "--seed", "42"];
    let a = run(tmp.path(), &args);
    let b = run(tmp.path(), &args);
    assert_eq!(code(&a), 0);
    assert_eq!(code(&b), 0);

    // Same shape, and every column except `ms` identical. The ms column is
    // the sixth whitespace field on data rows.
    let strip = |s: &str| -> Vec<Vec<String>> {
        s.lines()
            .map(|l| {
                l.split_whitespace()
                    .enumerate()
                    .filter(|(i, _)| *i != 5)
                    .map(|(_, w)| w.to_string())
                    .collect()
            })
            .collect()
    };
    assert_eq!(strip(&stdout(&a)), strip(&stdout(&b)), "non-time columns must be bytewise stable");

    println!("[acceptance] stdout deterministic apart from the ms column: PASS");
}

#[test]
fn history_export_in_both_formats() {
    let tmp = TempDir::new().unwrap();
    fixture(tmp.path(), "id4.mtx", ID4);

    // Single method, CSV.
    let o = run(
        tmp.path(),
        &["--matrix", "id4.mtx", "--method", "gmres", "--out", "h.csv", "--format", "csv"],
    );
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    let csv = std::fs::read_to_string(tmp.path().join("h.csv")).unwrap();
    assert!(csv.starts_with("k,rnorm\n"), "csv: {csv}");
    assert!(csv.lines().count() >= 2, "csv has at least the initial residual: {csv}");

    // Single method, JSON: well-formed and self-describing.
    let o = run(
        tmp.path(),
        &["--matrix", "id4.mtx", "--method", "qmr", "--out", "h.json", "--format", "json"],
    );
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    let json = std::fs::read_to_string(tmp.path().join("h.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["method"], "qmr");
    assert_eq!(v["status"], "converged");
    assert!(v["history"].as_array().unwrap().len() >= 2);

    // Catalog mode splices the method name into each file name.
    let o = run(tmp.path(), &["--matrix", "id4.mtx", "--out", "all.csv"]);
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    for m in ["bicg", "cocg", "gmres", "ilucg"] {
        let p = tmp.path().join(format!("all.{m}.csv"));
        assert!(p.exists(), "missing export {}", p.display());
    }

    println!("[acceptance] history export (csv and json): PASS");
}

#[test]
fn right_hand_side_sources() {
    let tmp = TempDir::new().unwrap();
    fixture(tmp.path(), "id4.mtx", ID4);

    // --rhs-ones: y = A * ones, so on the identity one iteration suffices.
    let o = run(tmp.path(), &["--matrix", "id4.mtx", "--rhs-ones", "--method", "cgs"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("converged"));

    // --rhs from a file.
    fixture(tmp.path(), "y.rhs", "1 0\n0 1\n-1 0\n0 -1\n");
    let o = run(tmp.path(), &["--matrix", "id4.mtx", "--rhs", "y.rhs", "--method", "bicg"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("converged"));

    // conflicting sources are a usage error
    let o = run(
        tmp.path(),
        &["--matrix", "id4.mtx", "--rhs", "y.rhs", "--rhs-ones", "--method", "bicg"],
    );
    assert_eq!(code(&o), 2);

    println!("[acceptance] right-hand side sources (--rhs, --rhs-ones, seeded): PASS");
}

#[test]
fn symmetric_content_under_a_general_tag_is_detected() {
    let tmp = TempDir::new().unwrap();
    fixture(tmp.path(), "symg.mtx", SYM3_GENERAL);

    // COCG refuses matrices not known to be complex-symmetric, so a pass here
    // shows the loader recognized the symmetry from the entries.
    let o = run(tmp.path(), &["--matrix", "symg.mtx", "--method", "cocg"]);
    assert_eq!(code(&o), 0, "stderr: {}\nstdout: {}", stderr(&o), stdout(&o));
    assert!(stdout(&o).contains("converged"));

    println!("[acceptance] symmetry auto-detection on general-tagged files: PASS");
}

#[test]
fn preconditioner_flag_routes_to_the_solver() {
    let tmp = TempDir::new().unwrap();
    // Strongly scaled diagonal: Jacobi turns it into the identity, so a
    // preconditioned run finishes in one iteration.
    fixture(
        tmp.path(),
        "diag4.mtx",
        "%%MatrixMarket matrix coordinate complex general\n4 4 4\n1 1 100 0\n2 2 0.01 0\n3 3 0 50\n4 4 2 -2\n",
    );
    let o = run(
        tmp.path(),
        &["--matrix", "diag4.mtx", "--method", "gmres", "--precond", "jacobi"],
    );
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    let table = stdout(&o);
    let row = table.lines().nth(1).unwrap();
    let cols: Vec<&str> = row.split_whitespace().collect();
    assert_eq!(cols[1], "converged");
    assert_eq!(cols[2], "1", "Jacobi on a diagonal system is exact: {table}");

    // ILU(0) through the flag as well.
    let o = run(
        tmp.path(),
        &["--matrix", "diag4.mtx", "--method", "bicgstab", "--precond", "ilu0"],
    );
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    assert!(stdout(&o).contains("converged"));

    println!("[acceptance] --precond routes jacobi and ilu0: PASS");
}
