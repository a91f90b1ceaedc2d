use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const P2: &str = r#"{"dim":2,"rays":[["1/1","0/1"],["0/1","1/1"],["-1/1","-1/1"]],"cones":[[0,1],[1,2],[0,2]],"complete":true}"#;
const P1P1: &str = r#"{"dim":2,"rays":[["1/1","0/1"],["0/1","1/1"],["-1/1","0/1"],["0/1","-1/1"]],"cones":[[0,1],[1,2],[2,3],[0,3]],"complete":true}"#;

struct Sandbox {
    dir: TempDir,
}

impl Sandbox {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::write(&p, contents).unwrap();
        p
    }

    fn divisor(&self, name: &str, fan: &str, coeffs: &[&str]) -> PathBuf {
        let coeffs: Vec<String> = coeffs.iter().map(|c| format!("\"{c}\"")).collect();
        self.file(name, &format!(r#"{{"model":{fan},"coeffs":[{}]}}"#, coeffs.join(",")))
    }

    fn standard_inputs(&self) {
        self.file("p2.json", P2);
        self.file("p1p1.json", P1P1);
        self.divisor("p2_H.json", P2, &["1/1", "0/1", "0/1"]);
        self.divisor("z.json", P1P1, &["1/1", "1/1", "1/1", "1/1"]);
        self.divisor("o11.json", P1P1, &["1/1", "1/1", "0/1", "0/1"]);
        self.file("a32.json", r#"{"tau":"0/1","a":["3/1","-2/1"],"spec":"trivial"}"#);
        self.file("p34.json", r#"{"tau":"0/1","a":["3/1","4/1"]}"#);
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tropadel"))
        .current_dir(dir)
        .env("TROPADEL_NO_COLOR", "1")
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn self_intersection_of_a_line_in_the_plane() {
    let s = Sandbox::new();
    s.standard_inputs();
    let o = run(s.dir.path(), &["pair", "intersect", "--divisors", "p2_H.json", "p2_H.json"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "{\"value\":\"1/1\"}\n");
}

#[test]
fn tropicalization_of_an_embedded_point() {
    let s = Sandbox::new();
    s.standard_inputs();
    let o = run(s.dir.path(), &["point", "trop", "--point", "a32.json"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "{\"a\":[\"3/1\",\"-2/1\"]}\n");
}

#[test]
fn approximated_sequence_verifies_and_tampering_fails() {
    let s = Sandbox::new();
    s.standard_inputs();
    let o = run(
        s.dir.path(),
        &["adelic", "approx", "--oracle", "euclidean", "--fan", "p1p1.json", "--boundary", "z.json", "--tol", "1/100"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("term 0"));
    s.file("euclid.json", &stdout(&o));

    let v = run(s.dir.path(), &["adelic", "verify", "--seq", "euclid.json", "--boundary", "z.json", "--prefix", "4"]);
    assert_eq!(v.status.code(), Some(0));
    let report = json(&v);
    assert_eq!(report["pass"], true);
    assert_eq!(report["pairs"].as_array().unwrap().len(), 6);

    let mut seq = json(&o);
    let eps = seq["epsilons"].as_array_mut().unwrap();
    let k = eps.len();
    for e in eps.iter_mut() {
        *e = serde_json::Value::String("0/1".into());
    }
    assert!(k >= 2);
    s.file("bad.json", &seq.to_string());
    let v = run(s.dir.path(), &["adelic", "verify", "--seq", "bad.json"]);
    assert_eq!(v.status.code(), Some(1));
    assert_eq!(json(&v)["pass"], false);

    let g = run(s.dir.path(), &["adelic", "green", "--seq", "euclid.json", "--point", "p34.json", "--tol", "1/10"]);
    assert_eq!(g.status.code(), Some(0));
    let value = json(&g)["value_f64"].as_f64().unwrap();
    assert!((value - 5.0).abs() < 0.1);
    let g = run(s.dir.path(), &["adelic", "green", "--seq", "euclid.json", "--point", "p34.json", "--tol", "1/1000000000"]);
    assert_eq!(g.status.code(), Some(1));

    let p = run(s.dir.path(), &["pair", "adelic", "--seq", "euclid.json", "--divisors", "o11.json", "--tol", "1"]);
    assert_eq!(p.status.code(), Some(0));
    assert_eq!(json(&p)["value"], "4/1");
}

#[test]
fn output_is_deterministic_across_runs_and_thread_counts() {
    let s = Sandbox::new();
    s.standard_inputs();
    let args = ["adelic", "approx", "--oracle", "lp:3", "--fan", "p2.json", "--boundary", "z.json", "--tol", "1/50"];
    // z.json lives on a different fan than p2.json; use a matching boundary.
    s.divisor("z2.json", P2, &["1/1", "1/1", "1/1"]);
    let mut args: Vec<&str> = args.to_vec();
    args[7] = "z2.json";
    let a = run(s.dir.path(), &args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = run(s.dir.path(), &args);
    let mut seq_args = args.clone();
    seq_args.extend(["--jobs", "1"]);
    let c = run(s.dir.path(), &seq_args);
    let mut par_args = args.clone();
    par_args.extend(["--jobs", "3", "--seed", "0"]);
    let d = run(s.dir.path(), &par_args);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    assert_eq!(a.stdout, d.stdout);

    let mu = s.file(
        "mu.json",
        r#"{"num":[{"exps":[1,1,1],"coeff":"1/1"}],"den":[{"exps":[2,0,0],"coeff":"1/1"},{"exps":[0,0,2],"coeff":"1/1"}]}"#,
    );
    let mu = mu.to_str().unwrap();
    let x = run(s.dir.path(), &["slope", "boundary", "--mu", mu, "--face", "0,2", "--seed", "7"]);
    let y = run(s.dir.path(), &["slope", "boundary", "--mu", mu, "--face", "0,2", "--seed", "7"]);
    assert_eq!(x.status.code(), Some(1));
    assert_eq!(x.stdout, y.stdout);
}

#[test]
fn emitted_json_round_trips_into_consumers() {
    let s = Sandbox::new();
    s.standard_inputs();
    let refined = run(s.dir.path(), &["fan", "refine", "--fan", "p2.json", "--depth", "2"]);
    assert_eq!(refined.status.code(), Some(0));
    s.file("fine.json", &stdout(&refined));
    let v = run(s.dir.path(), &["fan", "validate", "--fan", "fine.json"]);
    assert_eq!(v.status.code(), Some(0));
    assert_eq!(json(&v)["complete"], true);
    let again = run(s.dir.path(), &["fan", "simplicialize", "--fan", "fine.json"]);
    assert_eq!(stdout(&again), stdout(&refined));

    let sf = run(s.dir.path(), &["divisor", "sf", "--divisor", "z.json"]);
    s.file("zsf.json", &stdout(&sf));
    let e = run(s.dir.path(), &["sf", "eval", "--f", "zsf.json", "--at", "3,-4"]);
    assert_eq!(stdout(&e), "{\"value\":\"7/1\"}\n");
    let sum = run(s.dir.path(), &["sf", "add", "--f", "zsf.json", "--g", "zsf.json"]);
    s.file("sum.json", &stdout(&sum));
    let n = run(s.dir.path(), &["sf", "norm", "--f", "sum.json", "--boundary", "z.json"]);
    assert_eq!(json(&n)["norm"], "2/1");
    let m = run(s.dir.path(), &["sf", "min", "--f", "sum.json", "--g", "zsf.json"]);
    s.file("min.json", &stdout(&m));
    let back: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(s.path("zsf.json")).unwrap()).unwrap();
    assert_eq!(json(&m)["ray_values"], back["ray_values"]);
}

#[test]
fn divisor_and_point_subcommands() {
    let s = Sandbox::new();
    s.standard_inputs();
    s.file("arc.json", r#"{"cone":[0,1],"orders":[2,3]}"#);
    let o = run(s.dir.path(), &["divisor", "arc-order", "--divisor", "o11.json", "--arc", "arc.json"]);
    assert_eq!(stdout(&o), "{\"order\":\"5/1\"}\n");
    let o = run(s.dir.path(), &["divisor", "pullback", "--divisor", "o11.json", "--direction", "1,1"]);
    assert_eq!(json(&o)["order_at_zero"], "2/1");
    assert_eq!(json(&o)["order_at_infinity"], "0/1");

    s.file("poly.json", r#"{"terms":[{"m":[1,0],"coeff":"1/1"},{"m":[0,1],"coeff":"1/1"}]}"#);
    let o = run(s.dir.path(), &["point", "eval", "--point", "a32.json", "--poly", "poly.json"]);
    assert_eq!(json(&o)["valuation"], "-2/1");
    s.file("a64.json", r#"{"tau":"0/1","a":["6/1","-4/1"]}"#);
    let o = run(s.dir.path(), &["point", "equiv", "--point", "a64.json", "--other", "a32.json"]);
    assert_eq!(json(&o)["scale"], "2/1");
    s.file("ideal.json", r#"{"gens":[[1,0],[0,1]]}"#);
    let o = run(s.dir.path(), &["point", "green", "--point", "p34.json", "--ideal", "ideal.json"]);
    assert_eq!(json(&o)["value"], "3/1");
    let o = run(s.dir.path(), &["point", "green", "--point", "a32.json", "--ideal", "ideal.json"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(s.dir.path(), &["point", "interior", "--point", "p34.json", "--boundary", "o11.json"]);
    assert_eq!(json(&o)["interior"], false);
}

#[test]
fn pairing_subcommands() {
    let s = Sandbox::new();
    s.standard_inputs();
    let sf = run(s.dir.path(), &["divisor", "sf", "--divisor", "z.json"]);
    let mut h = json(&sf);
    h["ray_values"] = serde_json::json!(["1/1", "1/1", "1/1", "1/1"]);
    s.file("h.json", &h.to_string());
    let o = run(s.dir.path(), &["pair", "ma", "--h", "h.json", "--divisors", "o11.json", "--boundary", "z.json"]);
    assert_eq!(stdout(&o), "{\"value\":\"4/1\"}\n");
    s.divisor("bad.json", P1P1, &["1/1", "0/1", "-2/1", "0/1"]);
    let o = run(s.dir.path(), &["pair", "intersect", "--divisors", "bad.json", "o11.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn slope_subcommands() {
    let s = Sandbox::new();
    let mut csv = String::from("s,h\n");
    for k in 0..20 {
        let x = 0.1 * 5000f64.powf(k as f64 / 19.0);
        csv += &format!("{:e},{}\n", (-x).exp(), 0.75 * x + 0.05 * (k as f64).sin());
    }
    s.file("fit.csv", &csv);
    let o = run(s.dir.path(), &["slope", "fit", "--samples", "fit.csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert!((json(&o)["slope"].as_f64().unwrap() - 0.75).abs() < 0.015);

    s.file("mu.json", r#"{"num":[{"exps":[1,1],"coeff":"1/1"}],"den":[{"exps":[1,0],"coeff":"1/1"},{"exps":[0,1],"coeff":"1/1"}]}"#);
    let o = run(s.dir.path(), &["slope", "expect", "--mu", "mu.json", "--orders", "1,2"]);
    assert_eq!(json(&o)["slope"], "2/3");

    s.file("f.json", r#"{"vertex_values":[1.0,2.0]}"#);
    let mut good = String::from("z1,z2,g\n");
    let mut bad = good.clone();
    for i in 0..40 {
        for j in 0..40 {
            let (x1, x2) = (1.0 + 15.0 * i as f64, 1.0 + 15.0 * j as f64);
            let f = x1 + 2.0 * x2;
            good += &format!("{:e},{:e},{}\n", (-x1).exp(), (-x2).exp(), f + 0.3);
            bad += &format!("{:e},{:e},{}\n", (-x1).exp(), (-x2).exp(), f + 0.1 * (x1 + x2));
        }
    }
    s.file("good.csv", &good);
    s.file("bad.csv", &bad);
    let o = run(s.dir.path(), &["slope", "residual", "--f", "f.json", "--samples", "good.csv", "--radii", "1,10,100"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let o = run(s.dir.path(), &["slope", "residual", "--f", "f.json", "--samples", "bad.csv", "--radii", "1,10,100"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn input_errors_exit_with_two_and_plain_diagnostics() {
    let s = Sandbox::new();
    s.standard_inputs();
    s.file("broken.json", "{\"dim\": 2, \"rays\": [[\"1/0\", \"0/1\"]]");
    let o = run(s.dir.path(), &["fan", "validate", "--fan", "broken.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.contains(&0x1b));
    let o = run(s.dir.path(), &["fan", "validate", "--fan", "missing.json"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(s.dir.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(s.dir.path(), &["sf", "eval", "--f", "p2.json", "--at", "1,x"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(s.dir.path(), &["adelic", "green", "--seq", "p2.json", "--point", "a32.json", "--tol", "0/1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(s.dir.path(), &["adelic", "approx", "--oracle", "bogus", "--fan", "p2.json", "--boundary", "z.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_fan_is_a_check_failure() {
    let s = Sandbox::new();
    // Two overlapping quadrant cones.
    s.file(
        "overlap.json",
        r#"{"dim":2,"rays":[["1/1","0/1"],["0/1","1/1"],["1/1","1/1"]],"cones":[[0,1],[0,2]],"complete":false}"#,
    );
    let o = run(s.dir.path(), &["fan", "validate", "--fan", "overlap.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["valid"], false);
}
