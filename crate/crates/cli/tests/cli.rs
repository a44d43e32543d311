#[path = "../../core/tests/support/oracle.rs"]
mod oracle;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_evseq"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_file(model: &str, d0: &str, dp: &str, input: &Path) -> Output {
    run(&["run", "--model", model, "--delta0", d0, "--dplus", dp, "--input", input.to_str().unwrap()])
}

fn rows(out: &Output) -> Vec<Vec<String>> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn golden_trajectories() {
    let cases = [
        ("basic.csv", "0", "0.3", "basic.expected.csv"),
        ("equal_alt.csv", "0.3", "0.3", "equal_alt.expected.csv"),
        ("crossing17.csv", "0", "0.5", "crossing17.expected.csv"),
    ];
    for (input, d0, dp, expected) in cases {
        let a = run_file("t", d0, dp, &fixture(input));
        let b = run_file("t", d0, dp, &fixture(input));
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{input}: repeated runs differ");
        assert_eq!(a.stdout, std::fs::read(fixture(expected)).unwrap(), "{input}: golden file differs");
    }
}

#[test]
fn basic_example_matches_density_oracle() {
    let out = run_file("t", "0", "0.3", &fixture("basic.csv"));
    let r = rows(&out);
    assert_eq!(r.len(), 3);
    let t: f64 = r[2][1].parse().unwrap();
    assert!((t - 2.0 * 3f64.sqrt()).abs() < 1e-12);
    let expected = oracle::nct_logpdf(t, 2.0, 0.3 * 3f64.sqrt()) - oracle::nct_logpdf(t, 2.0, 0.0);
    let e: f64 = r[2][3].parse().unwrap();
    assert!((e.ln() - expected).abs() < 1e-9);
    let log10_e: f64 = r[2][2].parse().unwrap();
    assert!((log10_e * std::f64::consts::LN_10 - expected).abs() < 1e-9);
}

#[test]
fn equal_alternative_is_flat() {
    let out = run_file("t", "0.3", "0.3", &fixture("equal_alt.csv"));
    for row in rows(&out) {
        assert_eq!(row[3], "1");
        assert_eq!(row[4], "false");
    }
}

#[test]
fn crossing_is_sticky_and_reported() {
    let out = run_file("t", "0", "0.5", &fixture("crossing17.csv"));
    assert!(out.status.success());
    for row in rows(&out) {
        let n: u64 = row[0].parse().unwrap();
        assert_eq!(row[4] == "true", n >= 17, "n={n}");
    }
    let r = rows(&out);
    let e17: f64 = r[16][3].parse().unwrap();
    assert!((20.0..30.0).contains(&e17));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tau = 17"));
}

#[test]
fn alternative_below_null_is_flagged() {
    let below = run_file("t", "0.5", "0.2", &fixture("basic.csv"));
    assert!(below.status.success());
    assert!(String::from_utf8_lossy(&below.stderr).contains("guarantee = void"));
    let above = run_file("t", "0", "0.2", &fixture("basic.csv"));
    assert!(!String::from_utf8_lossy(&above.stderr).contains("guarantee"));
}

#[test]
fn streaming_equals_batch() {
    let input = std::fs::read_to_string(fixture("crossing17.csv")).unwrap();
    let mut child = bin()
        .args(["run", "--model", "t", "--delta0", "0", "--dplus", "0.5"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    for line in input.lines() {
        writeln!(stdin, "{line}").unwrap();
        stdin.flush().unwrap();
        std::thread::sleep(std::time::Duration::from_millis(2));
    }
    drop(stdin);
    let streamed = child.wait_with_output().unwrap();
    let batch = run_file("t", "0", "0.5", &fixture("crossing17.csv"));
    assert_eq!(streamed.stdout, batch.stdout);
}

#[test]
fn jsonl_equals_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    let jsonl = dir.path().join("d.jsonl");
    std::fs::write(&csv, "y,x,z1\n0.3,1,0.5\n1.2,0.4,-1\n-0.7,2,0.1\n0.9,-0.3,1.4\n1.6,0.8,0.2\n").unwrap();
    std::fs::write(
        &jsonl,
        "{\"y\":0.3,\"x\":1,\"z1\":0.5}\n{\"y\":1.2,\"x\":0.4,\"z1\":-1}\n{\"y\":-0.7,\"x\":2,\"z1\":0.1}\n{\"y\":0.9,\"x\":-0.3,\"z1\":1.4}\n{\"y\":1.6,\"x\":0.8,\"z1\":0.2}\n",
    )
    .unwrap();
    let a = run_file("linreg", "0", "0.4", &csv);
    let b = run(&["run", "--model", "linreg", "--delta0", "0", "--dplus", "0.4", "--format", "jsonl", "--input", jsonl.to_str().unwrap()]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    // k = n − 1 < 2 for the first two rows
    assert!(String::from_utf8_lossy(&a.stderr).contains("uninformative steps = 2"));
}

#[test]
fn prior_files() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.csv");
    let bad = dir.path().join("bad.csv");
    std::fs::write(&good, "delta,weight\n0.25,0.3\n0.5,0.7000001\n").unwrap();
    std::fs::write(&bad, "delta,weight\n0.25,0.3\n0.5,0.6\n").unwrap();
    let input = fixture("crossing17.csv");
    let ok = run(&["run", "--model", "t", "--delta0", "0", "--prior", good.to_str().unwrap(), "--input", input.to_str().unwrap()]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert_eq!(rows(&ok).len(), 25);
    let err = run(&["run", "--model", "t", "--delta0", "0", "--prior", bad.to_str().unwrap(), "--input", input.to_str().unwrap()]);
    assert_eq!(err.status.code(), Some(64));
    let both = run(&["run", "--model", "t", "--delta0", "0", "--dplus", "0.5", "--prior", good.to_str().unwrap()]);
    assert_eq!(both.status.code(), Some(64));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, body: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    };
    let zero = write("zero.csv", "y\n0\n1\n");
    let out = run_file("t", "0", "0.5", &zero);
    assert_eq!(out.status.code(), Some(65));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 1"));

    let bad = write("bad.csv", "y\n1\n2\n3\nx\n");
    let out = run_file("chisq", "1", "2", &bad);
    assert_eq!(out.status.code(), Some(65));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 4"));
    assert_eq!(rows(&out).len(), 3);

    let bits = write("bits.csv", "y\n1\n0\n2\n");
    assert_eq!(run_file("bernoulli", "0.6", "0.8", &bits).status.code(), Some(65));
    assert_eq!(run_file("bernoulli", "0.4", "0.8", &bits).status.code(), Some(64));
    assert_eq!(run(&["run", "--model", "t", "--delta0", "0", "--dplus", "1", "--alpha", "1.5"]).status.code(), Some(64));
    assert_eq!(run(&["run", "--model", "anova", "--delta0", "0", "--dplus", "1"]).status.code(), Some(64));
    assert_eq!(run(&["run", "--model", "t", "--delta0", "0", "--dplus", "1", "--input", "/nonexistent/x"]).status.code(), Some(74));
}

#[test]
fn plot_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("t.csv");
    let via_run = dir.path().join("a.svg");
    let via_plot = dir.path().join("b.svg");
    let input = fixture("crossing17.csv");
    let out = run(&[
        "run", "--model", "t", "--delta0", "0", "--dplus", "0.5", "--input", input.to_str().unwrap(),
        "--output", traj.to_str().unwrap(), "--plot", via_run.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = run(&["plot", "--input", traj.to_str().unwrap(), "--output", via_plot.to_str().unwrap()]);
    assert!(out.status.success());
    let a = std::fs::read_to_string(&via_run).unwrap();
    assert_eq!(a, std::fs::read_to_string(&via_plot).unwrap());
    assert!(a.contains("first crossing n = 17"));

    let flat = dir.path().join("flat.csv");
    let flat_svg = dir.path().join("flat.svg");
    std::fs::copy(fixture("equal_alt.expected.csv"), &flat).unwrap();
    assert!(run(&["plot", "--input", flat.to_str().unwrap(), "--output", flat_svg.to_str().unwrap()]).status.success());
    assert!(!std::fs::read_to_string(&flat_svg).unwrap().contains("<circle"));

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "n,statistic,log10_e,e,rejected\n").unwrap();
    let out = run(&["plot", "--input", empty.to_str().unwrap(), "--output", flat_svg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(65));
}

fn report(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("JSON report on stdout")
}

#[test]
fn verify_examples() {
    let out = run(&["verify", "counterexample", "--n", "5", "--deltas", "0.2,0.1,0.05"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["schema"], "evseq-report/1");
    let c = r["details"]["coefficient"].as_f64().unwrap();
    assert!((c - 2.0 / 3.0).abs() < 0.01, "{c}");

    assert_eq!(run(&["verify", "mlr", "--nu", "2", "--lplus", "1", "--l0", "0"]).status.code(), Some(0));
    assert_eq!(run(&["verify", "mlr", "--nu", "2", "--lplus", "0", "--l0", "1"]).status.code(), Some(1));

    let out = run(&["verify", "mc", "--model", "t", "--mu", "0", "--sigma", "1", "--delta0", "0", "--dplus", "0.5", "--reps", "100000"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(report(&out)["checkpoints"].as_array().unwrap().len(), 4);

    assert_eq!(run(&["verify", "evariable", "--nu", "3", "--lplus", "1", "--l0", "0"]).status.code(), Some(0));
    assert_eq!(run(&["verify", "bern-positivity", "--n-max", "12"]).status.code(), Some(0));
    let out = run(&["verify", "type1", "--model", "bernoulli", "--theta", "0.5", "--theta0", "0.6", "--theta-plus", "0.8", "--reps", "2000"]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["verify", "epower", "--model", "t", "--mu", "0.5", "--delta0", "0", "--dplus", "0.5", "--n", "50", "--reps", "500"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(report(&out)["mean"][0].as_f64().unwrap() > 0.0);
    assert_eq!(run(&["verify", "rademacher", "--n", "5", "--delta", "0.1", "--reps", "100000"]).status.code(), Some(0));
    assert_eq!(run(&["verify", "mc", "--model", "bernoulli", "--generator", "gaussian", "--delta0", "0.6", "--dplus", "0.8"]).status.code(), Some(64));
}

#[test]
fn verify_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        let out = run(&["verify", "mc", "--model", "chisq", "--mu", "3", "--sigma", "0.7", "--sigma0", "1", "--sigma-plus", "1.5",
                        "--reps", "5000", "--seed", "9", "--output", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    let strip = |p: &Path| {
        let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("metadata");
        v
    };
    assert_eq!(strip(&a), strip(&b));
}
