use std::collections::BTreeMap;
use std::path::PathBuf;

use switchstab::model::{parse_model, SwitchedModel};
use switchstab::rational::rat;
use switchstab::sim::{
    audit_trace, check_trace_sublevel, probe_stability, replay_violation, simulate, Policy, SimOptions, Trace,
};
use switchstab::vcgen::LyapunovAssignment;

fn fixture(name: &str) -> SwitchedModel {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.ssm"));
    parse_model(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn point(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn decay() -> SwitchedModel {
    parse_model("system d { var x; kind arbitrary; mode a { ode { x' = -x } } lyapunov : x^2; }").unwrap()
}

fn endpoint_error(dt: f64) -> f64 {
    let tr = simulate(&decay(), &point(&[("x", 1.0)]), None, &Policy::Eager, &SimOptions { dt, horizon: 5.0, ..Default::default() });
    let last = tr.samples.last().unwrap();
    assert!((last.t - 5.0).abs() < 1e-9);
    (last.x[0] - (-5f64).exp()).abs()
}

#[test]
fn rk4_accuracy_and_order() {
    assert!(endpoint_error(1e-3) < 1e-6);
    for dt in [0.1, 0.05] {
        let ratio = endpoint_error(dt) / endpoint_error(dt / 2.0);
        assert!(ratio >= 12.0, "dt {dt}: ratio {ratio}");
    }
}

#[test]
fn domain_exit_is_located_by_bisection() {
    let m = parse_model(
        "system e { var x; kind state;
           mode down { ode { x' = -1 } domain x >= 0 }
           mode rest { ode { x' = 0 } domain x <= 0 } }",
    )
    .unwrap();
    let tr = simulate(&m, &point(&[("x", 1.0)]), Some("down"), &Policy::Eager, &SimOptions { horizon: 2.0, ..Default::default() });
    assert_eq!(tr.events.len(), 1);
    let e = &tr.events[0];
    assert_eq!((e.from.as_str(), e.to.as_str(), e.reason.as_str()), ("down", "rest", "forced"));
    assert!((e.t - 1.0).abs() < 1e-9, "event at {}", e.t);
    audit_trace(&m, &tr).unwrap();
}

#[test]
fn no_enabled_mode_marks_the_trace_stuck() {
    let m = parse_model("system s { var x; kind state; mode down { ode { x' = -1 } domain x >= 0 } }").unwrap();
    let tr = simulate(&m, &point(&[("x", 0.5)]), None, &Policy::Random { seed: 3 }, &SimOptions::default());
    assert!(tr.stuck());
    assert!((tr.samples.last().unwrap().t - 0.5).abs() < 1e-6);
}

#[test]
fn timed_dwell_is_respected_and_s_phases_contract() {
    let m = fixture("timed_demo");
    let tr = simulate(&m, &point(&[("x", 1.0)]), Some("s"), &Policy::Eager, &SimOptions { horizon: 10.0, ..Default::default() });
    audit_trace(&m, &tr).unwrap();
    let to_u: Vec<_> = tr.events.iter().filter(|e| e.to == "u").collect();
    assert!(to_u.len() >= 4);
    for e in &to_u {
        assert!(e.tau >= 1.0 - 1e-9, "left s after {}", e.tau);
    }
    // V = x^2 contracts by e^{-2 θ} over each s phase of length θ = 1.
    let bound = (-2.0f64).exp() * (1.0 + 1e-6);
    let mut start: Option<f64> = None;
    let mut prev_mode = "";
    for s in &tr.samples {
        let v = s.x[0] * s.x[0];
        if s.mode == "s" && prev_mode != "s" {
            start = Some(v);
        }
        if s.mode != "s" && prev_mode == "s" {
            assert!(v <= start.unwrap() * bound);
        }
        prev_mode = &s.mode;
    }
}

#[test]
fn example7_trace_stays_in_sublevel_set() {
    let m = fixture("example7");
    let a = LyapunovAssignment::from_model(&m).unwrap();
    for seed in 0..5 {
        let tr = simulate(&m, &point(&[("x1", 0.1), ("x2", 0.0)]), None, &Policy::Random { seed }, &SimOptions::default());
        audit_trace(&m, &tr).unwrap();
        let c = check_trace_sublevel(&tr, &a, &rat(12, 1000));
        assert!(c.holds, "seed {seed}: {:?}", c.reason);
    }
}

#[test]
fn growing_mode_fails_the_sublevel_check() {
    let m = parse_model("system g { var x; kind arbitrary; mode u { ode { x' = x } } lyapunov : x^2; }").unwrap();
    let a = LyapunovAssignment::from_model(&m).unwrap();
    let tr = simulate(&m, &point(&[("x", 0.01)]), None, &Policy::Eager, &SimOptions { horizon: 1.0, ..Default::default() });
    assert!(!check_trace_sublevel(&tr, &a, &rat(12, 1000)).holds);
}

#[test]
fn arbitrary_switching_of_example7_modes_diverges() {
    let m = fixture("example7").without_domains();
    let opts = SimOptions::default();
    let r = probe_stability(&m, &[0.5], 20, 11, &opts);
    let e = &r.stability[0];
    assert!(e.delta.is_none());
    assert!(!e.violations.is_empty());
    for v in &e.violations {
        assert!(replay_violation(&m, v, &opts) >= 0.5);
    }
}

#[test]
fn traces_are_deterministic_per_seed() {
    let m = fixture("brockett_event");
    let run = |seed| -> Trace {
        simulate(&m, &point(&[("x", 0.3), ("y", -0.2), ("z", 0.01)]), None, &Policy::Random { seed }, &SimOptions { horizon: 5.0, ..Default::default() })
    };
    assert_eq!(run(9).to_csv(), run(9).to_csv());
    assert_eq!(run(9).events_json(), run(9).events_json());
    assert!(run(9).to_csv().starts_with("t,mode,x,y,z,tau,V_A,V_B,V_C\n"));
}

#[test]
fn scripted_schedule_is_followed() {
    let m = fixture("timed_demo");
    let script = Policy::Scripted(vec![(1.5, "u".into()), (2.0, "s".into())]);
    let tr = simulate(&m, &point(&[("x", 1.0)]), Some("s"), &script, &SimOptions { horizon: 3.0, ..Default::default() });
    let ev: Vec<(&str, &str)> = tr.events.iter().map(|e| (e.from.as_str(), e.to.as_str())).collect();
    assert_eq!(ev, [("s", "u"), ("u", "s")]);
    assert!((tr.events[0].t - 1.5).abs() < 2e-3);
    audit_trace(&m, &tr).unwrap();
}
