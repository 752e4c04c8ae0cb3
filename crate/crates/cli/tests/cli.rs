use std::path::Path;
use std::process::{Command, Output};

fn lplsh(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lplsh"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = lplsh(dir, args);
    assert!(
        out.status.success(),
        "lplsh {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn data_rows(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

const SMALL_BUILD: &[&str] = &["--threshold-samples", "100000", "--k", "2", "--l", "8", "--seed", "5"];

fn gen_small(dir: &Path) {
    ok(
        dir,
        &["gen", "--n", "300", "--d", "8", "--planted-count", "10", "--seed", "3", "--out", "data.csv"],
    );
}

#[test]
fn gen_writes_dataset_queries_and_truth() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(
        dir.path(),
        &["gen", "--n", "300", "--d", "8", "--planted-count", "10", "--seed", "3", "--out", "data.csv"],
    );
    assert!(stdout.contains("verified"));
    assert_eq!(data_rows(&dir.path().join("data.csv")).len(), 301);
    assert_eq!(data_rows(&dir.path().join("data.queries.csv")).len(), 11);
    let truth = data_rows(&dir.path().join("data.truth.csv"));
    assert_eq!(truth[0], "query,id");
    assert_eq!(truth.len(), 11);
    let head = std::fs::read_to_string(dir.path().join("data.csv")).unwrap();
    assert!(head.starts_with("# lplsh "));
    assert!(head.contains("# seed = 3"));
}

#[test]
fn gen_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    gen_small(a.path());
    gen_small(b.path());
    for f in ["data.csv", "data.queries.csv", "data.truth.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn trivial_instance_has_neighbor_at_exactly_r() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(
        dir.path(),
        &["gen", "--n", "1", "--d", "4", "--planted-count", "1", "--r", "1", "--seed", "1", "--out", "one.csv"],
    );
    // the generator re-checks the written files by linear scan
    let err: f64 = out
        .lines()
        .find_map(|l| l.split("planted distance error ").nth(1))
        .unwrap()
        .parse()
        .unwrap();
    assert!(err < 1e-12, "{err}");
    assert_eq!(data_rows(&dir.path().join("one.truth.csv"))[1], "0,0");
}

#[test]
fn fvecs_output_gets_a_metadata_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &["gen", "--n", "50", "--d", "4", "--planted-count", "2", "--seed", "1", "--out", "v.fvecs"],
    );
    let meta = std::fs::read_to_string(dir.path().join("v.fvecs.meta")).unwrap();
    assert!(meta.starts_with("lplsh "));
    assert!(meta.contains("n = 50"));
    assert_eq!(std::fs::metadata(dir.path().join("v.fvecs")).unwrap().len(), 50 * (4 + 16));
}

#[test]
fn self_queries_return_distance_zero() {
    let dir = tempfile::tempdir().unwrap();
    gen_small(dir.path());
    let args: Vec<&str> = ["build", "--input", "data.csv", "--out", "idx"].iter().chain(SMALL_BUILD).copied().collect();
    let echo = ok(dir.path(), &args);
    for key in ["w", "t", "eps", "T", "U", "saturated"] {
        assert!(echo.contains(&format!("# derived {key} = ")), "echo lacks {key}");
    }
    ok(dir.path(), &["query", "--index", "idx", "--queries", "data.csv", "--out", "self.csv"]);
    let rows = data_rows(&dir.path().join("self.csv"));
    assert_eq!(rows.len(), 301);
    for row in &rows[1..] {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f[2], "0.0", "{row}");
        assert_eq!(f[3], "true");
    }
}

#[test]
fn rebuild_with_same_seed_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    gen_small(dir.path());
    let args: Vec<&str> = ["build", "--input", "data.csv", "--out", "idx"].iter().chain(SMALL_BUILD).copied().collect();
    ok(dir.path(), &args);
    let first = std::fs::read(dir.path().join("idx")).unwrap();
    ok(dir.path(), &args);
    assert_eq!(first, std::fs::read(dir.path().join("idx")).unwrap());
    assert!(dir.path().join("idx.thresholds").exists());
}

#[test]
fn auto_build_and_truth_summary() {
    let dir = tempfile::tempdir().unwrap();
    gen_small(dir.path());
    let echo = ok(
        dir.path(),
        &[
            "build", "--input", "data.csv", "--out", "idx", "--seed", "2", "--threshold-samples", "100000",
            "--auto-trials", "20000",
        ],
    );
    assert!(echo.contains("# derived p1_hat = "));
    assert!(echo.contains("# derived predicted_success = "));
    let out = ok(
        dir.path(),
        &["query", "--index", "idx", "--queries", "data.queries.csv", "--truth", "data.truth.csv"],
    );
    assert!(out.contains("success rate vs ground truth"));
    let bench = ok(
        dir.path(),
        &["bench", "--index", "idx", "--queries", "data.queries.csv", "--truth", "data.truth.csv", "--out", "b.csv"],
    );
    assert!(bench.contains("speedup = "));
    assert_eq!(data_rows(&dir.path().join("b.csv")).len(), 2);
}

#[test]
fn empty_query_file_gives_empty_results() {
    let dir = tempfile::tempdir().unwrap();
    gen_small(dir.path());
    let args: Vec<&str> = ["build", "--input", "data.csv", "--out", "idx"].iter().chain(SMALL_BUILD).copied().collect();
    ok(dir.path(), &args);
    std::fs::write(dir.path().join("empty.csv"), "x0,x1,x2,x3,x4,x5,x6,x7\n").unwrap();
    ok(dir.path(), &["query", "--index", "idx", "--queries", "empty.csv", "--out", "r.csv"]);
    assert_eq!(data_rows(&dir.path().join("r.csv")).len(), 1);
}

#[test]
fn exit_codes_separate_contract_and_io_failures() {
    let dir = tempfile::tempdir().unwrap();
    gen_small(dir.path());
    let args: Vec<&str> = ["build", "--input", "data.csv", "--out", "idx"].iter().chain(SMALL_BUILD).copied().collect();
    ok(dir.path(), &args);

    std::fs::write(dir.path().join("narrow.csv"), "x0,x1\n1,2\n").unwrap();
    let out = lplsh(dir.path(), &["query", "--index", "idx", "--queries", "narrow.csv"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("dimension mismatch"));

    let mut bytes = std::fs::read(dir.path().join("idx")).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    std::fs::write(dir.path().join("bad"), &bytes).unwrap();
    let out = lplsh(dir.path(), &["query", "--index", "bad", "--queries", "data.csv"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("checksum"));

    let out = lplsh(dir.path(), &["query", "--index", "missing", "--queries", "data.csv"]);
    assert_eq!(code(&out), 2);

    let out = lplsh(dir.path(), &["build", "--input", "data.csv", "--out", "x", "--seed", "1", "--c", "0.5"]);
    assert_eq!(code(&out), 1);

    let out = lplsh(dir.path(), &["gen", "--n", "10", "--out", "d.csv"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn config_file_with_command_line_precedence() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), "# planted run\nn = 40\nd = 3\nplanted_count = 2\nseed = 1\nout = a.csv\n").unwrap();
    let echo = ok(dir.path(), &["gen", "--config", "run.cfg", "--seed", "9"]);
    assert!(echo.contains("seed = 9"));
    assert!(echo.contains("n = 40"));
    assert_eq!(data_rows(&dir.path().join("a.csv")).len(), 41);

    std::fs::write(dir.path().join("bad.cfg"), "seed = 1\nout = a.csv\nbogus = 2\n").unwrap();
    let out = lplsh(dir.path(), &["gen", "--config", "bad.cfg"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn rho_sweep_schema_rows_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "rho", "--c-list", "2,3,5", "--d", "6", "--trials", "3000", "--t", "3", "--shift-cap", "20000",
        "--threshold-samples", "100000", "--check-trials", "0", "--seed", "4", "--out", "rho.csv",
    ];
    ok(dir.path(), &args);
    let first = std::fs::read(dir.path().join("rho.csv")).unwrap();
    let rows = data_rows(&dir.path().join("rho.csv"));
    assert_eq!(
        rows[0],
        "c,p,profile,w,t,eps,U,saturated,p1_hat,p1_lo,p1_hi,p2_hat,p2_lo,p2_hi,rho_hat,inv_c,inv_cp,lncsq_over_cp,fallback_rate"
    );
    assert_eq!(rows.len(), 4);
    ok(dir.path(), &args);
    assert_eq!(first, std::fs::read(dir.path().join("rho.csv")).unwrap());
}

#[test]
fn verify_prints_json_per_suite() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(dir.path(), &["verify", "--level", "quick", "--suite", "disjointness", "--seed", "0"]);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["suites"][0]["suite"], "disjointness");
    assert_eq!(v["suites"][0]["stats"]["violations"], 0.0);

    let out = lplsh(dir.path(), &["verify", "--suite", "nope"]);
    assert_eq!(code(&out), 2);
}
