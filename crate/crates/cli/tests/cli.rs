use std::path::PathBuf;
use std::process::{Command, Output};

fn rbem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbem")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn rows(out: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(format!("{}-{name}", std::process::id()))
}

#[test]
fn optimal_points_for_four_nodes() {
    let out = rbem(&["optimal-points", "--nodes", "4"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let (header, rows) = rows(&out);
    assert_eq!(header, ["zero_index", "s"]);
    assert!(!rows.is_empty());
    for r in &rows {
        let s: f64 = r[1].parse().unwrap();
        assert!(s > 0.0 && s < 1.0);
    }
}

#[test]
fn output_is_deterministic_and_lf_terminated() {
    let args = [
        "table", "--bases", "gaussian,c0", "--element-list", "8,16", "--bcs", "dirichlet,mixed", "--exact", "expcos",
    ];
    let a = rbem(&args);
    let b = rbem(&args);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.contains(&b'\r'));
    assert!(a.stdout.ends_with(b"\n"));
    let (header, rows) = rows(&a);
    assert_eq!(header, ["bc", "rbf", "N", "error"]);
    assert_eq!(rows.len(), 8);

    let path = scratch("table.csv");
    let mut with_out = args.to_vec();
    let p = path.to_str().unwrap();
    with_out.extend(["--out", p]);
    let c = rbem(&with_out);
    assert_eq!(code(&c), 0, "{}", stderr(&c));
    assert!(c.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), a.stdout);
    std::fs::remove_file(path).unwrap();
}

#[test]
fn single_point_grid_gives_one_row() {
    let out = rbem(&["sweep-s", "--basis", "linear", "--elements", "8", "--grid", "0.43"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let (header, rows) = rows(&out);
    assert_eq!(header, ["s", "flux_error", "interior_error"]);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "4.30000e-1");
}

#[test]
fn flags_override_config_file() {
    let path = scratch("run.cfg");
    std::fs::write(&path, "# sweep settings\nbasis = linear\nelements = 8\nnodes = 8\ngrid = 0.3, 0.58\n").unwrap();
    let p = path.to_str().unwrap();
    let from_file = rbem(&["sweep-s", "--config", p, "--elements", "16"]);
    let direct = rbem(&["sweep-s", "--basis", "linear", "--elements", "16", "--nodes", "8", "--grid", "0.3,0.58"]);
    let unchanged = rbem(&["sweep-s", "--config", p]);
    std::fs::remove_file(path).unwrap();
    assert_eq!(code(&from_file), 0, "{}", stderr(&from_file));
    assert_eq!(from_file.stdout, direct.stdout);
    assert_ne!(from_file.stdout, unchanged.stdout);
    assert_eq!(rows(&from_file).1.len(), 2);
}

#[test]
fn expsum_with_wrong_lambda_is_rejected() {
    let out = rbem(&["table", "--pde", "advdiff", "--exact", "expsum", "--h1", "1", "--lambda", "-2"]);
    assert_eq!(code(&out), 1);
    let msg = stderr(&out);
    assert!(msg.contains("residual"), "{msg}");
    assert!(msg.contains("-3"), "{msg}");
    assert!(out.stdout.is_empty());
}

#[test]
fn exit_codes() {
    assert_eq!(code(&rbem(&["--help"])), 0);
    assert_eq!(code(&rbem(&["bogus"])), 1);
    assert_eq!(code(&rbem(&["table", "--no-such-flag"])), 1);
    assert_eq!(code(&rbem(&["table", "--basis", "sinc"])), 1);
    assert_eq!(code(&rbem(&["sweep-s", "--elements", "6"])), 1);
    assert_eq!(code(&rbem(&["sweep-s", "--offset", "1.5"])), 1);
    assert_eq!(code(&rbem(&["optimal-points", "--nodes", "3"])), 1);
    let missing = scratch("missing.cfg");
    assert_eq!(code(&rbem(&["table", "--config", missing.to_str().unwrap()])), 1);
    // the graded reference integral cannot settle this close to the element end
    let out = rbem(&["parity", "--basis", "linear", "--elements", "8", "--offset", "0.999999"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn failed_checks_are_reported_but_not_fatal() {
    let out = rbem(&["parity", "--basis", "linear", "--elements", "8", "--nodes", "4", "--offset", "0.0000001"]);
    assert_eq!(code(&out), 0);
    assert!(stderr(&out).contains("check failed"));
    let (_, rows) = rows(&out);
    assert_eq!(rows[0].last().unwrap(), "false");
}
