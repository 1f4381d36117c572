use std::collections::BTreeMap;
use std::path::PathBuf;

use switchstab::model::{emit_dot, ghost_split, parse_expr, parse_model, print_model, to_program, well_formed, Kind};
use switchstab::rational::{int, rat};

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn fixtures() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "ssm"))
        .collect();
    v.sort();
    v
}

#[test]
fn every_fixture_parses_and_is_well_formed() {
    for f in fixtures() {
        let m = parse_model(&std::fs::read_to_string(&f).unwrap()).unwrap_or_else(|d| panic!("{}: {d}", f.display()));
        let d = well_formed(&m);
        assert!(d.is_empty(), "{}: {d}", f.display());
    }
}

#[test]
fn invalid_fixtures_report_their_code() {
    for e in std::fs::read_dir(dir().join("invalid")).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_none_or(|x| x != "ssm") {
            continue;
        }
        let code = std::fs::read_to_string(p.with_extension("expect")).unwrap().trim().to_string();
        let diags = match parse_model(&std::fs::read_to_string(&p).unwrap()) {
            Ok(m) => well_formed(&m),
            Err(d) => d,
        };
        assert!(diags.has_code(&code), "{}: expected {code}, got {diags}", p.display());
    }
}

#[test]
fn print_parse_round_trip() {
    for f in fixtures() {
        let m = parse_model(&std::fs::read_to_string(&f).unwrap()).unwrap();
        let again = parse_model(&print_model(&m)).unwrap_or_else(|d| panic!("{}: {d}", f.display()));
        assert_eq!(m.modes, again.modes, "{}", f.display());
        assert_eq!(m.transitions, again.transitions, "{}", f.display());
        assert_eq!(m.lyapunov, again.lyapunov, "{}", f.display());
        assert_eq!(m.common_lyapunov, again.common_lyapunov, "{}", f.display());
    }
}

#[test]
fn decimals_are_exact() {
    let m = parse_model(&std::fs::read_to_string(dir().join("example7.ssm")).unwrap()).unwrap();
    let x1 = parse_expr("x1", &m.state_vars).unwrap();
    let f = m.modes[0].field.get("x1").unwrap();
    assert_eq!(f.coeff(x1.leading_monomial().unwrap()), rat(-23, 5));
}

#[test]
fn dot_has_one_node_per_mode() {
    let m = parse_model(&std::fs::read_to_string(dir().join("example7.ssm")).unwrap()).unwrap();
    let dot = emit_dot(&m);
    assert!(dot.starts_with("digraph"));
    assert_eq!(dot.lines().filter(|l| l.contains("[label=") && !l.contains("->")).count(), 2);
    assert_eq!(dot, emit_dot(&m));
}

#[test]
fn ghost_split_produces_four_modes() {
    let m = parse_model(&std::fs::read_to_string(dir().join("canonical_max_fixed.ssm")).unwrap()).unwrap();
    let ids: Vec<&str> = m.modes.iter().map(|p| p.id.as_str()).collect();
    assert_eq!(ids, ["A1", "A2", "B1", "B2"]);
    assert_eq!(m.modes[0].field, m.modes[1].field);
    assert!(ghost_split(&m, "nope", &parse_expr("x", &m.state_vars).unwrap()).is_err());
}

#[test]
fn timer_is_implicit_for_timed_models() {
    let m = parse_model(&std::fs::read_to_string(dir().join("timed_demo.ssm")).unwrap()).unwrap();
    assert_eq!(m.kind, Kind::Timed);
    assert_eq!(m.all_vars(), ["x", "tau"]);
    assert_eq!(m.mode("u").unwrap().max_dwell, Some(int(1)));
}

#[test]
fn controller_step_respects_dwell() {
    let m = parse_model(&std::fs::read_to_string(dir().join("timed_demo.ssm")).unwrap()).unwrap();
    let ir = to_program(&m);
    let early: BTreeMap<String, _> = [("x".to_string(), int(1)), ("tau".to_string(), rat(1, 2))].into();
    let late: BTreeMap<String, _> = [("x".to_string(), int(1)), ("tau".to_string(), int(1))].into();
    let targets = |env| ir.step("s", env).into_iter().map(|(m, _)| m).collect::<Vec<_>>();
    assert_eq!(targets(&early), ["s"]);
    let mut l = targets(&late);
    l.sort();
    assert_eq!(l, ["s", "u"]);
    let (_, post) = ir.step("s", &late).into_iter().find(|(m, _)| m == "u").unwrap();
    assert_eq!(post["tau"], int(0));
}

#[test]
fn controller_paths_for_guarded_snippet() {
    let m = parse_model(&std::fs::read_to_string(dir().join("controller_paths.ssm")).unwrap()).unwrap();
    let ir = to_program(&m);
    let paths = ir.paths(&["normalPI".to_string()]);
    let mut to: Vec<&str> = paths.iter().map(|p| p.to.as_str()).collect();
    to.sort();
    assert_eq!(to, ["accelerate", "sbrakeact"]);
    let brake = paths.iter().find(|p| p.to == "sbrakeact").unwrap();
    assert!(brake.assigns.contains_key("t"));
}
