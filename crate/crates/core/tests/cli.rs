use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_thinspectra"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn bundled_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/q1_interval.cfg")
}

/// `(k, lambda)` rows of `solve` output.
fn solve_values(o: &Output) -> Vec<f64> {
    stdout(o)
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("k,"))
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn limit_table() {
    let o = run(&["limit", "--dim", "2", "--omega", "-1,1", "--regime", "finite", "--q", "1", "--count", "6"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows.len(), 6);
    assert!(rows[0].starts_with("2.4674011(1)"));
    assert!(rows[1].starts_with("9.8696044(2)"));
    assert!(rows[2].starts_with("22.2066099(1)"));
    assert!(rows[0].contains("COUPLED"));

    let o = run(&["limit", "--dim", "2", "--omega", "-0.5,0.5", "--regime", "infinite", "--count", "3"]);
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().collect();
    assert!(rows[0].starts_with("9.8696044(2)") && rows[1].starts_with("39.4784176(2)"));
    assert!(rows[2].starts_with("88.8264396(2)"));
}

#[test]
fn limit_csv_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("limit.csv");
    let o = run(&["limit", "--dim", "3", "--omega", "0.5,0.5", "--regime", "zero", "--count", "4", "--csv", csv.to_str().unwrap()]);
    assert!(o.status.success());
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("index,lambda,multiplicity,branches\n1,2.4674011,1,ROD_ND\n"));

    let o = run(&["limit", "--dim", "2", "--regime", "finite", "--q", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(String::from_utf8_lossy(&o.stderr).trim(), "omega: required");
    let o = run(&["limit", "--dim", "2", "--omega", "1,2", "--regime", "zero"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("omega:"));
}

#[test]
fn solve_matches_dense_oracle() {
    let base = ["solve", "--dim", "2", "--omega", "-1,1", "--regime", "finite", "--q", "1", "--r", "0.25", "--m", "8", "--k", "5"];
    let it = run(&base);
    let mut with_oracle = base.to_vec();
    with_oracle.push("--oracle");
    let de = run(&with_oracle);
    assert!(it.status.success() && de.status.success());
    let (a, b) = (solve_values(&it), solve_values(&de));
    assert_eq!(a.len(), 5);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-8 * y, "{x} vs {y}");
    }
    assert!(stdout(&it).contains("# orthonormality deviation"));
}

#[test]
fn solve_exhaustion() {
    let args = |k: &'static str| {
        vec!["solve", "--dim", "3", "--omega", "0.5,0.5", "--regime", "finite", "--q", "1", "--r", "0.5", "--m", "4", "--k", k]
    };
    let three = solve_values(&run(&args("3")));
    let four = solve_values(&run(&args("4")));
    assert_eq!((three.len(), four.len()), (3, 4));
    for (x, y) in three.iter().zip(&four) {
        assert!((x - y).abs() <= 1e-10 * y.max(1.0));
    }
}

#[test]
fn solve_bound_and_failures() {
    // Coarse values sit far below 2^k k^2 pi^2, so the bound check passes.
    let o = run(&["solve", "--omega", "-1,1", "--regime", "zero", "--r", "0.25", "--m", "6", "--k", "6"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["solve", "--omega", "-1,1", "--regime", "zero", "--r", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    // The dense oracle refuses large pencils: a solver failure.
    let o = run(&["solve", "--omega", "-1,1", "--regime", "finite", "--q", "1", "--m", "64", "--oracle"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("solver failure"));
}

#[test]
fn study_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let cfg = bundled_config();
    let first = run(&["study", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap(), "--emit-svg"]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let second = bin()
        .args(["study", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap(), "--emit-svg"])
        .env("THINSPECTRA_THREADS", "1")
        .output()
        .unwrap();
    assert!(second.status.success());

    let report = fs::read_to_string(a.join("report.csv")).unwrap();
    let mut lines = report.lines();
    assert_eq!(lines.next(), Some("n,r,h,k,lambda_n_k,lambda_limit,error,aH1,bH1,ga,gb,bound_ok"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().all(|r| r.len() == 12 && r[11] == "true"));
    let last_k1 = rows.iter().rev().find(|r| r[3] == "1").unwrap();
    let (error, lambda1): (f64, f64) = (last_k1[6].parse().unwrap(), last_k1[5].parse().unwrap());
    assert!(error < 5e-2 * lambda1);

    // Byte-identical across runs, whatever the thread count.
    for name in ["report.csv", "rates.csv", "plot.svg"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }

    let svg = fs::read_to_string(a.join("plot.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).expect("well-formed SVG");
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    let polylines: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("polyline")).collect();
    assert_eq!(polylines.len(), 4);
    for (i, p) in polylines.iter().enumerate() {
        assert_eq!(p.attribute("data-k"), Some((i + 1).to_string().as_str()));
        assert_eq!(p.attribute("points").unwrap().split(' ').count(), 4);
    }
    let rates = fs::read_to_string(a.join("rates.csv")).unwrap();
    assert_eq!(rates.lines().count(), 5);
}

#[test]
fn study_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.cfg");
    let text = fs::read_to_string(bundled_config()).unwrap().replace("count = 4", "count = 0");
    fs::write(&cfg, text).unwrap();
    let o = run(&["study", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("count:"));
    let o = run(&["study", "--config", dir.path().join("missing.cfg").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn threads_variable_is_validated() {
    let o = bin().args(["limit", "--omega", "-1,1", "--regime", "zero"]).env("THINSPECTRA_THREADS", "many").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("THINSPECTRA_THREADS:"));
}

#[test]
fn verify_subsets() {
    let o = run(&["verify", "--filter", "limit"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let ids: Vec<&str> = out.lines().filter_map(|l| l.split_whitespace().nth(1)).filter(|s| s.starts_with('C')).collect();
    assert_eq!(ids, ["C1", "C2", "C3", "C4", "C10"]);

    let o = run(&["verify", "--filter", "2", "--inject-q-shift", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("FAIL  C2"));
}
