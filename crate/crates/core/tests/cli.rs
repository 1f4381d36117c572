use std::path::{Path, PathBuf};

use switchstab::cli::run;
use switchstab::report::Report;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).to_string_lossy().into_owned()
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["switchstab"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn usage_errors_exit_3() {
    assert_eq!(cli(&["frobnicate"]).0, 3);
    assert_eq!(cli(&["verify", "/no/such/file.ssm"]).0, 3);
    assert_eq!(cli(&["verify", &fixture("example7.ssm"), "--rule", "nope"]).0, 3);
    assert_eq!(cli(&["verify", &fixture("example7.ssm"), "--falsify-budget", "0"]).0, 3);
    assert_eq!(cli(&["verify", &fixture("example7.ssm"), "--sos-degree", "9"]).0, 3);
    assert_eq!(cli(&["--help"]).0, 0);
}

#[test]
fn check_subcommand() {
    let (code, out, _) = cli(&["check", &fixture("example7.ssm")]);
    assert_eq!(code, 0, "{out}");
    let (code, out, _) = cli(&["check", &fixture("invalid/state_with_transitions.ssm")]);
    assert_eq!(code, 3);
    assert!(out.contains("kind-shape"), "{out}");
}

#[test]
fn verify_exit_codes_follow_overall_status() {
    assert_eq!(cli(&["verify", &fixture("example7.ssm")]).0, 0);
    let (code, out, _) = cli(&["verify", &fixture("cruise_pi.ssm")]);
    assert_eq!(code, 1);
    assert!(out.contains("not stability itself"));
    let (code, _, _) = cli(&["verify", &fixture("example7.ssm"), "--sos-degree", "0", "--falsify-budget", "1", "--rule", "clf"]);
    assert_eq!(code, 3, "example7 has no common candidate");
}

#[test]
fn inconclusive_exits_2() {
    // Constant multipliers cannot certify the region clauses and one sample
    // finds no counterexample.
    let (code, out, err) = cli(&["verify", &fixture("brockett_event.ssm"), "--sos-degree", "0", "--falsify-budget", "1"]);
    assert_eq!(code, 2, "{out}{err}");
    assert!(out.contains("overall: Inconclusive"));
}

#[test]
fn reports_are_deterministic_and_replayable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let (code, _, _) = cli(&["verify", &fixture("brockett_event.ssm"), "--normalize-timings", "--seed", "4", "--out", p(out)]);
        assert_eq!(code, 0);
    }
    let ta = std::fs::read_to_string(&a).unwrap();
    assert_eq!(ta, std::fs::read_to_string(&b).unwrap());
    let r = Report::from_json(&ta).unwrap();
    assert_eq!(r.seed, 4);
    assert_eq!(r.to_json(), ta);
    let keys: Vec<&str> = ta
        .lines()
        .filter_map(|l| l.strip_prefix("  \"").and_then(|r| r.split_once('"')).map(|(k, _)| k))
        .collect();
    assert_eq!(keys, ["version", "model", "rule", "vcs", "overall", "seed", "budgets"]);
    let (code, out, _) = cli(&["verify", "--replay", p(&a)]);
    assert_eq!(code, 0, "{out}");
}

#[test]
fn replay_rejects_a_doctored_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    assert_eq!(cli(&["verify", &fixture("example7.ssm"), "--out", p(&path)]).0, 0);
    let text = std::fs::read_to_string(&path).unwrap().replacen("511/1600", "512/1600", 1);
    std::fs::write(&path, text).unwrap();
    let (code, out, _) = cli(&["verify", "--replay", p(&path)]);
    assert_eq!(code, 3);
    assert!(out.contains("replay failed"), "{out}");
}

#[test]
fn falsify_subcommand() {
    let (code, out, _) = cli(&["falsify", &fixture("cruise_pi.ssm"), "--vc", "positivity"]);
    assert_eq!(code, 1);
    let cex: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(cex["vc"], "positivity[normalPI]");
    assert_eq!(cli(&["falsify", &fixture("example7.ssm"), "--vc", "positivity", "--budget", "2000"]).0, 2);
    assert_eq!(cli(&["falsify", &fixture("example7.ssm"), "--vc", "nope"]).0, 3);
}

#[test]
fn synth_subcommand() {
    let (code, out, _) = cli(&["synth", &fixture("example7.ssm")]);
    assert_eq!(code, 0);
    assert!(out.contains("lyapunov p :") && out.contains("lyapunov q :"));
    assert_eq!(cli(&["synth", &fixture("example7.ssm"), "--common"]).0, 2);
}

#[test]
fn verify_with_candidate_file_and_synthesis() {
    let dir = tempfile::tempdir().unwrap();
    let cand = dir.path().join("v.txt");
    std::fs::write(&cand, "lyapunov p : x1^2 - 33/20*x1*x2 + x2^2;\nlyapunov q : x1^2 + 33/20*x1*x2 + x2^2;\n").unwrap();
    assert_eq!(cli(&["verify", &fixture("example7.ssm"), "--candidates", p(&cand)]).0, 0);
    std::fs::write(&cand, "lyapunov p : x1^2 + x2^2;\nlyapunov q : x1^2 + x2^2;\n").unwrap();
    assert_eq!(cli(&["verify", &fixture("example7.ssm"), "--candidates", p(&cand)]).0, 1);
    assert_eq!(cli(&["verify", &fixture("example7.ssm"), "--candidates", "synthesize"]).0, 0);
}

#[test]
fn simulate_writes_csv_and_events() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("run");
    let (code, out, err) = cli(&["simulate", &fixture("timed_demo.ssm"), "--x0", "x=1", "--policy", "eager", "--horizon", "3", "--out", p(&prefix)]);
    assert_eq!(code, 0, "{out}{err}");
    let csv = std::fs::read_to_string(dir.path().join("run.csv")).unwrap();
    assert!(csv.starts_with("t,mode,x,tau,V_s,V_u\n"));
    let ev: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("run.events.json")).unwrap()).unwrap();
    assert_eq!(ev["end"], "horizon");
    assert!(!ev["events"].as_array().unwrap().is_empty());
    assert_eq!(cli(&["simulate", &fixture("timed_demo.ssm"), "--x0", "q=1"]).0, 3);
}

#[test]
fn probe_subcommand() {
    let (code, out, _) = cli(&["probe", &fixture("example7.ssm"), "--samples", "20", "--eps", "0.5"]);
    assert_eq!(code, 0, "{out}");
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("free.ssm");
    std::fs::write(&m, "system f { var x; kind arbitrary; mode u { ode { x' = x } } }").unwrap();
    assert_eq!(cli(&["probe", p(&m), "--samples", "5", "--eps", "0.5"]).0, 1);
}

#[test]
fn render_subcommand() {
    let (code, out, _) = cli(&["render", &fixture("example7.ssm")]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().filter(|l| l.contains("[label=") && !l.contains("->")).count(), 2);
}

#[test]
fn bench_subcommand() {
    let (code, out, _) = cli(&["bench", &fixture("")]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("example7"));

    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli(&["bench", p(dir.path())]).0, 3, "empty corpus");
    std::fs::copy(fixture("example7.ssm"), dir.path().join("example7.ssm")).unwrap();
    std::fs::write(dir.path().join("example7.expect"), "Refuted-Premise\n").unwrap();
    let (code, out, _) = cli(&["bench", p(dir.path())]);
    assert_eq!(code, 1);
    assert!(out.contains("MISMATCH"));
    std::fs::write(dir.path().join("ghost.expect"), "Proved\n").unwrap();
    assert_eq!(cli(&["bench", p(dir.path())]).0, 3, "missing fixture");
}
