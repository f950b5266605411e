use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use roadcast::fixtures;

const BIN: &str = env!("CARGO_BIN_EXE_roadcast");

fn golden(name: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    fs::read_to_string(p).unwrap()
}

struct Dir(tempfile::TempDir);

impl Dir {
    fn t1() -> Self {
        let d = tempfile::tempdir().unwrap();
        fs::write(d.path().join("t1.net"), fixtures::T1_NETWORK).unwrap();
        fs::write(d.path().join("t1.paths"), fixtures::T1_PATHS).unwrap();
        fs::write(d.path().join("a1.dep"), "deploy a1\n").unwrap();
        Dir(d)
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.0.path().join(rel)
    }

    fn read(&self, rel: &str) -> String {
        fs::read_to_string(self.path(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(BIN).args(args).current_dir(self.0.path()).env_remove("ROADCAST_SEED").output().unwrap()
    }

    fn ok(&self, args: &[&str]) -> String {
        let o = self.run(args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        String::from_utf8(o.stdout).unwrap()
    }

    fn synth(&self) {
        self.ok(&["synth", "--preset", "small", "--num-paths", "25", "--seed", "3", "--out", "syn"]);
    }
}

#[test]
fn partition_csv_is_pinned() {
    let d = Dir::t1();
    d.ok(&["partition", "--network", "t1.net", "--out", "o"]);
    assert_eq!(d.read("o/subsegments.csv"), golden("partition_t1.csv"));
}

#[test]
fn evaluate_single_site_on_t1() {
    let d = Dir::t1();
    d.ok(&["evaluate", "--network", "t1.net", "--paths", "t1.paths", "--deployment", "a1.dep", "--out", "o"]);
    let csv = d.read("o/evaluate.csv");
    assert_eq!(csv, golden("evaluate_t1.csv"));
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert!((row[1].parse::<f64>().unwrap() - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn mincost_throughput_on_t1() {
    let d = Dir::t1();
    d.ok(&["plan-mincost", "--network", "t1.net", "--paths", "t1.paths", "--lambda", "1", "--metric", "gamma", "--out", "o"]);
    assert_eq!(d.read("o/deployment.txt"), golden("mincost_t1_deployment.txt"));
    assert_eq!(d.read("o/values.csv"), golden("mincost_t1_values.csv"));
    let report: serde_json::Value = serde_json::from_str(&d.read("o/report.json")).unwrap();
    assert_eq!(report["result"]["cost"], 3.0);
    assert_eq!(report["result"]["audit"].as_array().unwrap().len(), 3);
}

#[test]
fn worst_case_on_t1() {
    let d = Dir::t1();
    let stdout = d.ok(&["worst-case", "--network", "t1.net", "--paths", "t1.paths", "--deployment", "a1.dep", "--out", "o"]);
    assert!(stdout.contains("value 0.2 path p"));
    assert_eq!(d.read("o/worst.scn"), golden("worst_t1.scn"));
    assert_eq!(d.read("o/worst.csv"), golden("worst_t1.csv"));
}

#[test]
fn missing_lambda_is_a_usage_error() {
    let d = Dir::t1();
    let o = d.run(&["plan-mincost", "--network", "t1.net", "--paths", "t1.paths"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.starts_with("error[USAGE]: ") && err.contains("--lambda"), "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn error_codes_and_exit_status() {
    let d = Dir::t1();
    let o = d.run(&["plan-mincost", "--network", "t1.net", "--paths", "t1.paths", "--lambda", "2", "--out", "o"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[INFEASIBLE]: "));

    fs::write(d.path("bad.net"), "node a 0 0\nedge e a zz\n").unwrap();
    let o = d.run(&["partition", "--network", "bad.net", "--out", "o"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[PARSE]: "));

    let o = d.run(&["partition", "--network", "missing.net", "--out", "o"]);
    assert_eq!(o.status.code(), Some(6));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[IO]: "));

    let o = d.run(&["plan-robust", "--method", "enum", "--cap", "2", "--network", "t1.net", "--paths", "t1.paths", "--lambda", "0.2"]);
    assert_eq!(o.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[CAP_EXCEEDED]: "));
}

#[test]
fn replay_is_byte_identical() {
    let d = Dir::t1();
    d.synth();
    d.ok(&["plan-twostage", "--network", "syn/network.txt", "--paths", "syn/paths.txt", "--lambda", "0.2", "--samples", "4", "--seed", "11", "--out", "a"]);
    let out = d.ok(&["replay", "a/manifest.json", "--out", "b"]);
    assert!(out.contains("identical"));
    for f in ["deployment.txt", "report.json"] {
        assert_eq!(d.read(&format!("a/{f}")), d.read(&format!("b/{f}")));
    }
    // a changed input is refused
    fs::write(d.path("syn/paths.txt"), "").unwrap();
    let o = d.run(&["replay", "a/manifest.json", "--out", "c"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn seed_comes_from_the_environment() {
    let d = Dir::t1();
    d.ok(&["synth", "--preset", "tiny", "--seed", "5", "--out", "x"]);
    let o = Command::new(BIN)
        .args(["synth", "--preset", "tiny", "--out", "y"])
        .current_dir(d.0.path())
        .env("ROADCAST_SEED", "5")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(d.read("x/network.txt"), d.read("y/network.txt"));
    let m: serde_json::Value = serde_json::from_str(&d.read("y/manifest.json")).unwrap();
    assert_eq!(m["seed"], 5);
}

fn sweep_rows(csv: &str) -> Vec<Vec<f64>> {
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,mean,std,n"));
    lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect()
}

#[test]
fn sweep_over_baseline_seeds() {
    let d = Dir::t1();
    d.synth();
    d.ok(&[
        "sweep", "--flag", "lambda", "--values", "0.2,0.4", "--seeds", "3", "--jobs", "2", "--out", "s", "--",
        "baseline", "--network", "syn/network.txt", "--paths", "syn/paths.txt", "--method", "rand",
    ]);
    let rows = sweep_rows(&d.read("s/sweep.csv"));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[3] == 3.0));
    assert_eq!(d.read("s/sweep_failures.csv"), "x,seed,code,message\n");
    assert!(d.path("s/point-1/seed-2/deployment.txt").exists());
}

#[test]
fn sweep_of_deterministic_planner_has_zero_spread() {
    let d = Dir::t1();
    d.synth();
    d.ok(&[
        "sweep", "--flag", "lambda", "--values", "0.2,0.3", "--seeds", "2", "--out", "s", "--",
        "plan-mincost", "--network", "syn/network.txt", "--paths", "syn/paths.txt",
    ]);
    assert!(sweep_rows(&d.read("s/sweep.csv")).iter().all(|r| r[2] == 0.0));
}

#[test]
fn budget_sweep_is_nondecreasing() {
    let d = Dir::t1();
    d.synth();
    d.ok(&[
        "sweep", "--flag", "budget", "--values", "0,1,2,4,8", "--y", "min_value", "--out", "s", "--",
        "plan-maxopp", "--network", "syn/network.txt", "--paths", "syn/paths.txt",
    ]);
    let rows = sweep_rows(&d.read("s/sweep.csv"));
    for w in rows.windows(2) {
        assert!(w[1][1] >= w[0][1] - 1e-12, "{rows:?}");
    }
}

#[test]
fn sweep_records_failures_and_continues() {
    let d = Dir::t1();
    d.ok(&[
        "sweep", "--flag", "lambda", "--values", "0.5,5", "--out", "s", "--",
        "plan-mincost", "--network", "t1.net", "--paths", "t1.paths",
    ]);
    let rows = sweep_rows(&d.read("s/sweep.csv").replace("NaN", "nan"));
    assert_eq!(rows[0][3], 1.0);
    assert_eq!(rows[1][3], 0.0);
    assert!(d.read("s/sweep_failures.csv").contains("5,0,INFEASIBLE,"));
}

#[test]
fn simulate_writes_its_tables() {
    let d = Dir::t1();
    d.synth();
    d.ok(&["plan-mincost", "--network", "syn/network.txt", "--paths", "syn/paths.txt", "--lambda", "0.3", "--out", "p"]);
    d.ok(&[
        "simulate", "--network", "syn/network.txt", "--deployment", "p/deployment.txt", "--users", "20", "--duration", "300",
        "--min-leg", "300", "--out", "m",
    ]);
    let heads = [
        ("sim_legs.csv", "user,from,to,start,end,complete,mean_rate"),
        ("sim_paths.csv", "from,to,legs,mean_rate"),
        ("sim_users.csv", "user,mean_rate"),
        ("sim_density.csv", "edge,density"),
        ("sim_ccdf.csv", "x,ccdf"),
    ];
    for (f, h) in heads {
        assert_eq!(d.read(&format!("m/{f}")).lines().next(), Some(h), "{f}");
    }
    // the generated trace can be fed back in
    d.ok(&[
        "simulate", "--network", "syn/network.txt", "--deployment", "p/deployment.txt", "--trace", "m/trace.txt", "--out", "m2",
    ]);
    assert_eq!(d.read("m/sim_legs.csv"), d.read("m2/sim_legs.csv"));
}

#[test]
fn help_exits_cleanly() {
    let d = Dir::t1();
    let out = d.ok(&["--help"]);
    for sub in ["partition", "evaluate", "plan-mincost", "plan-maxopp", "plan-robust", "plan-twostage", "worst-case", "baseline", "simulate", "sweep"] {
        assert!(out.contains(sub), "{sub}");
    }
}
