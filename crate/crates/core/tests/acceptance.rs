//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any fails.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use num::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use switchstab::check::certificate::{Certificate, InvarianceMethod, Verdict};
use switchstab::check::quadratic::quadratic_matrix;
use switchstab::check::replay::replay_vc;
use switchstab::check::{check_all, check_pd_quadratic, check_vc, falsify, overall, CheckConfig, Overall};
use switchstab::expo::exp_enclosure;
use switchstab::model::{parse_expr, parse_model, SwitchedModel};
use switchstab::poly::{lie_derivative, var_list, Monomial, Poly, VectorField};
use switchstab::rational::{int, rat, Rational};
use switchstab::report::{replay_report, verify, CandidateSource, Report};
use switchstab::sim::{check_trace_sublevel, probe_attractivity, probe_stability, simulate, Policy, SimOptions};
use switchstab::synth::truncate_small_terms;
use switchstab::vcgen::{gen_mlf_state, gen_restricted_attractivity, generate, LyapunovAssignment, Rule, VcKind};

const EXAMPLE7_LIMIT: Duration = Duration::from_secs(5);
const CRUISE_LIMIT: Duration = Duration::from_secs(10);
const TIMED_LIMIT: Duration = Duration::from_secs(5);
const FALSIFY_BUDGET: usize = 100_000;
const CANONICAL_FALSIFY_BUDGET: usize = 1_000_000;
const TRUNCATION_REL: (i64, i64) = (1, 10_000_000_000);
const ATTRACTIVITY_SAMPLES: usize = 100;
const HORIZON: f64 = 20.0;
const ENCLOSURE_TERMS: usize = 30;
const ENCLOSURE_WIDTH: (i64, i64) = (1, 1_000_000_000_000);
const ORACLE_VCS: usize = 500;
const LIE_PAIRS: usize = 200;
const LIE_POINTS: usize = 10;
const LIE_REL_TOL: f64 = 1e-6;
const RK4_TOL: f64 = 1e-6;
const RK4_ORDER_RATIO: f64 = 12.0;
const PROBE_SAMPLES: usize = 200;
const PROBE_EPS: [f64; 2] = [0.5, 0.1];
const TRAP_LEVEL: (i64, i64) = (12, 1000);

type Outcome = Result<String, String>;

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn source(name: &str) -> String {
    std::fs::read_to_string(dir().join(format!("{name}.ssm"))).unwrap()
}

fn model(name: &str) -> SwitchedModel {
    parse_model(&source(name)).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let m = model("example7");
    let rule = Rule::for_model(&m);
    ensure(rule == Rule::MlfState, || format!("rule {rule}"))?;
    let vcs = generate(&m, rule).map_err(|e| e.to_string())?;
    let checked = check_all(&vcs, &CheckConfig::default());
    let elapsed = t.elapsed();
    let o = overall(checked.iter().map(|c| &c.verdict));
    ensure(o == Overall::Proved, || format!("overall {o}"))?;
    let find = |id: &str| vcs.iter().position(|v| v.id == id).unwrap();
    match checked[find("positivity[p]")].verdict.certificate() {
        Some(Certificate::PdFactorization { d, .. }) => ensure(d.contains(&rat(511, 1600)), || format!("pivots {d:?}"))?,
        other => return Err(format!("positivity[p] certificate {other:?}")),
    }
    for id in ["decrease[p]", "decrease[q]"] {
        let kind = checked[find(id)].verdict.certificate().map(Certificate::kind_name);
        ensure(matches!(kind, Some("pd-factorization" | "sos-decomposition")), || format!("{id}: {kind:?}"))?;
    }
    let compat = &vcs[find("compat[p,q]+")];
    let diff = parse_expr("-33/10*x1*x2", &m.state_vars).unwrap();
    ensure(compat.conclusion.poly() == Some(diff), || "compat conclusion".into())?;
    ensure(compat.hypothesis.to_string() == "x1*x2 = 0", || compat.hypothesis.to_string())?;
    ensure(elapsed < EXAMPLE7_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!("{} VCs Proved, pivot 511/1600, {elapsed:.2?}", vcs.len()))
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let m = model("cruise_pi");
    let vcs = generate(&m, Rule::Controlled).map_err(|e| e.to_string())?;
    let pos = vcs.iter().find(|v| v.id.starts_with("positivity")).ok_or("no positivity VC")?;
    let cex = falsify(pos, FALSIFY_BUDGET, 0).ok_or("no counterexample")?;
    ensure(cex.value.iter().all(|v| v.is_negative()), || format!("value {:?}", cex.value))?;
    replay_vc(pos, &Verdict::Refuted { counterexample: cex.clone() }).map_err(|e| e.to_string())?;
    let v = m.lyapunov_for("normalPI").unwrap();
    let direct = v.evaluate(&cex.point).map_err(|e| e.to_string())?;
    ensure(direct.is_negative() && m.modes[0].domain.holds(&cex.point).unwrap_or(false), || "witness check".into())?;
    let (trimmed, _) = truncate_small_terms(v, &rat(TRUNCATION_REL.0, TRUNCATION_REL.1)).map_err(|e| e.to_string())?;
    let q = quadratic_matrix(&trimmed, &m.state_vars).ok_or("truncated candidate is not a quadratic form")?;
    let pivots = match check_pd_quadratic(&q, true).map_err(|e| e.to_string())? {
        Verdict::Proved { certificate: Certificate::PdFactorization { d, .. } } => d,
        other => return Err(format!("truncated: {}", other.label())),
    };
    ensure(pivots.iter().all(Signed::is_positive), || "nonpositive pivot".into())?;
    let elapsed = t.elapsed();
    ensure(elapsed < CRUISE_LIMIT, || format!("took {elapsed:?}"))?;
    let pt: Vec<String> = cex.point.iter().map(|(k, v)| format!("{k}={v}")).collect();
    Ok(format!("witness {}, truncated form PD, {elapsed:.2?}", pt.join(", ")))
}

fn criterion_3() -> Outcome {
    let m = model("brockett_event");
    let v = m.common_lyapunov.clone().ok_or("no candidate")?;
    let region = m.region.clone().ok_or("no region")?;
    let vcs = gen_restricted_attractivity(&m, &v, &region).map_err(|e| e.to_string())?;
    let cfg = CheckConfig { sos_degree: 2, ..CheckConfig::default() };
    let checked = check_all(&vcs, &cfg);
    for (vc, c) in vcs.iter().zip(&checked) {
        ensure(c.verdict.is_proved(), || format!("{} {}", vc.id, c.verdict.label()))?;
    }
    // Region invariance for mode A by an exact Darboux identity.
    let (vc, c) = vcs
        .iter()
        .zip(&checked)
        .find(|(vc, _)| matches!(&vc.kind, VcKind::Invariance { mode, .. } if mode == "A"))
        .ok_or("no invariance VC for A")?;
    match c.verdict.certificate() {
        Some(Certificate::Invariance { method: InvarianceMethod::Darboux, cofactor: Some(g), .. }) if g == "0" => {}
        other => return Err(format!("invariance[A]: {other:?}")),
    }
    let p = vc.conclusion.poly().unwrap();
    let fa = m.mode("A").unwrap().field.clone();
    ensure(lie_derivative(&p, &fa).map_err(|e| e.to_string())?.is_zero(), || "L_f p != 0".into())?;
    let h = parse_expr("(x^2 + y^2)/2 - z", &m.all_vars()).unwrap();
    let ratio = p.leading_coeff() / h.leading_coeff();
    ensure(p == h.scale(&ratio), || format!("region polynomial {p}"))?;
    // Lie negativity on the region.
    let dec = vcs.iter().position(|v| v.id == "decrease[A]").ok_or("no decrease[A]")?;
    let lie = parse_expr("2*(x^2 + y^2)*(1 + z)", &m.all_vars()).unwrap();
    ensure(vcs[dec].conclusion.poly() == Some(lie), || format!("decrease conclusion {}", vcs[dec].conclusion.expr))?;
    let probe = probe_attractivity(
        &m,
        1.0,
        0.1,
        ATTRACTIVITY_SAMPLES,
        3,
        Some(&region),
        &SimOptions { horizon: HORIZON, ..SimOptions::default() },
    );
    ensure(probe.samples == ATTRACTIVITY_SAMPLES, || format!("{} samples", probe.samples))?;
    ensure(probe.attractivity_violations.is_empty(), || format!("{} violations", probe.attractivity_violations.len()))?;
    Ok(format!("{} VCs Proved, Darboux cofactor 0, probe 0/{} violations", vcs.len(), probe.samples))
}

fn criterion_4() -> Outcome {
    let m = model("canonical_max_fixed");
    ensure(m.modes.len() == 4, || format!("{} modes", m.modes.len()))?;
    let vcs = generate(&m, Rule::MlfState).map_err(|e| e.to_string())?;
    let cfg = CheckConfig { sos_degree: 4, ..CheckConfig::default() };
    let checked = check_all(&vcs, &cfg);
    let mut by_search = 0;
    for (vc, c) in vcs.iter().zip(&checked) {
        match &c.verdict {
            Verdict::Proved { .. } => {}
            Verdict::Refuted { .. } => return Err(format!("{} Refuted", vc.id)),
            Verdict::Inconclusive { .. } => {
                if falsify(vc, CANONICAL_FALSIFY_BUDGET, 0).is_some() {
                    return Err(format!("{} violated", vc.id));
                }
                by_search += 1;
            }
        }
    }
    Ok(format!("{} VCs, {} Proved, {by_search} without counterexample", vcs.len(), vcs.len() - by_search))
}

fn criterion_5() -> Outcome {
    let b = exp_enclosure(&rat(-6, 5), ENCLOSURE_TERMS);
    ensure(b.upper < int(1), || "e^(-6/5) upper bound not below 1".into())?;
    ensure(b.width() <= rat(ENCLOSURE_WIDTH.0, ENCLOSURE_WIDTH.1), || "enclosure too wide".into())?;
    let mut out = Vec::new();
    let mut failures = Vec::new();
    for (name, want) in [("timed_demo_short", Overall::RefutedPremise), ("timed_demo", Overall::Proved)] {
        let t = Instant::now();
        let m = model(name);
        let vcs = generate(&m, Rule::MlfTimed).map_err(|e| e.to_string())?;
        let checked = check_all(&vcs, &CheckConfig::default());
        let elapsed = t.elapsed();
        let o = overall(checked.iter().map(|c| &c.verdict));
        let theta = m.transitions.iter().find_map(|t| t.min_dwell.clone()).unwrap();
        out.push(format!("theta {theta}: {o} ({elapsed:.2?})"));
        if o != want || elapsed >= TIMED_LIMIT {
            let failing: Vec<String> = vcs
                .iter()
                .zip(&checked)
                .filter(|(_, c)| !c.verdict.is_proved())
                .map(|(vc, c)| format!("{} is {}", vc.conclusion.expr, c.verdict.label()))
                .collect();
            failures.push(format!("theta {theta}: expected {want}, got {o} [{}]", failing.join("; ")));
        }
    }
    if failures.is_empty() {
        Ok(out.join(", "))
    } else {
        Err(failures.join(", "))
    }
}

fn sign_oracle(a: &Rational, b: &Rational, c: &Rational, cone: bool) -> bool {
    let disc = b * b - int(4) * a * c;
    if cone {
        a.is_positive() && c.is_positive() && (!b.is_negative() || disc.is_negative())
    } else {
        a.is_positive() && disc.is_negative()
    }
}

fn random_poly(rng: &mut ChaCha8Rng, max_deg: u32) -> Poly {
    let mut p = Poly::zero(var_list(&["x", "y", "z"]));
    for _ in 0..rng.gen_range(1..6) {
        let e: Vec<u32> = (0..3).map(|_| rng.gen_range(0..=max_deg)).collect();
        if e.iter().sum::<u32>() <= max_deg {
            p.add_term(Monomial(e), rat(rng.gen_range(-6..=6), rng.gen_range(1..=4)));
        }
    }
    p
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cfg = CheckConfig::default();
    let mut agreed = 0;
    while agreed < ORACLE_VCS {
        let cone = rng.gen_bool(0.5);
        let c: Vec<i64> = (0..7).map(|_| rng.gen_range(-4..=4)).collect();
        let src = format!(
            "system q {{ var x, y; kind {}; mode p {{ ode {{ x' = {}*x + {}*y; y' = {}*x + {}*y }} {} }} lyapunov p : {}*x^2 + {}*x*y + {}*y^2; }}",
            if cone { "state" } else { "arbitrary" },
            c[0], c[1], c[2], c[3],
            if cone { "domain x*y >= 0" } else { "" },
            c[4], c[5], c[6],
        );
        let m = parse_model(&src).unwrap();
        let Ok(vcs) = gen_mlf_state(&m, &LyapunovAssignment::from_model(&m).unwrap()) else { continue };
        for vc in vcs.iter().filter(|v| v.id.starts_with("positivity") || v.id.starts_with("decrease")) {
            let p = vc.conclusion.poly().unwrap();
            let at = |e: [u32; 2]| p.coeff(&Monomial(e.to_vec()));
            let expect = sign_oracle(&at([2, 0]), &at([1, 1]), &at([0, 2]), cone);
            let got = check_vc(vc, &cfg);
            let ok = matches!((&got, expect), (Verdict::Proved { .. }, true) | (Verdict::Refuted { .. }, false));
            ensure(ok, || format!("{src}: {} oracle {expect}, got {}", vc.id, got.label()))?;
            agreed += 1;
        }
    }
    let mut worst: f64 = 0.0;
    for _ in 0..LIE_PAIRS {
        let v = random_poly(&mut rng, 3);
        let f = VectorField::new(vec![
            ("x".into(), random_poly(&mut rng, 2)),
            ("y".into(), random_poly(&mut rng, 2)),
            ("z".into(), random_poly(&mut rng, 2)),
        ]);
        let lie = lie_derivative(&v, &f).map_err(|e| e.to_string())?;
        for _ in 0..LIE_POINTS {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let dir: Vec<f64> = f.entries().iter().map(|(_, p)| p.eval_f64(&x)).collect();
            let central = |h: f64| {
                let a: Vec<f64> = x.iter().zip(&dir).map(|(x, d)| x + h * d).collect();
                let b: Vec<f64> = x.iter().zip(&dir).map(|(x, d)| x - h * d).collect();
                (v.eval_f64(&a) - v.eval_f64(&b)) / (2.0 * h)
            };
            let fd = (4.0 * central(5e-4) - central(1e-3)) / 3.0;
            let exact = lie.eval_f64(&x);
            worst = worst.max((exact - fd).abs() / exact.abs().max(1.0));
        }
    }
    ensure(worst < LIE_REL_TOL, || format!("Lie derivative relative error {worst:e}"))?;
    Ok(format!("{ORACLE_VCS} quadratic verdicts agree, Lie max rel error {worst:.1e}"))
}

fn rk4_error(dt: f64) -> f64 {
    let m = parse_model("system d { var x; kind arbitrary; mode a { ode { x' = -x } } }").unwrap();
    let x0 = [("x".to_string(), 1.0)].into();
    let tr = simulate(&m, &x0, None, &Policy::Eager, &SimOptions { dt, horizon: 5.0, ..SimOptions::default() });
    (tr.samples.last().unwrap().x[0] - (-5f64).exp()).abs()
}

fn criterion_7() -> Outcome {
    let err = rk4_error(1e-3);
    ensure(err < RK4_TOL, || format!("endpoint error {err:e}"))?;
    let ratio = rk4_error(0.1) / rk4_error(0.05);
    ensure(ratio >= RK4_ORDER_RATIO, || format!("halving ratio {ratio:.2}"))?;
    let opts = SimOptions { horizon: HORIZON, ..SimOptions::default() };
    let mut certified = Vec::new();
    for name in corpus() {
        let r = verify(&source(&name), None, &CandidateSource::Annotation, &CheckConfig::default()).map_err(|e| e.to_string())?;
        if r.overall != Overall::Proved {
            continue;
        }
        let probe = probe_stability(&model(&name), &PROBE_EPS, PROBE_SAMPLES, 7, &opts);
        let bad = probe.violation_count();
        ensure(bad == 0 && probe.stability.iter().all(|e| e.delta.is_some()), || format!("{name}: {bad} violations"))?;
        certified.push(name);
    }
    let m = model("example7");
    let a = LyapunovAssignment::from_model(&m).unwrap();
    let x0 = [("x1".to_string(), 0.1), ("x2".to_string(), 0.0)].into();
    let tr = simulate(&m, &x0, None, &Policy::Random { seed: 1 }, &opts);
    let trap = check_trace_sublevel(&tr, &a, &rat(TRAP_LEVEL.0, TRAP_LEVEL.1));
    ensure(trap.holds, || format!("trapping: {:?}", trap.reason))?;
    Ok(format!("rk4 error {err:.1e}, order ratio {ratio:.1}, probes clean on {}", certified.join(", ")))
}

fn corpus() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir())
        .unwrap()
        .filter_map(|e| {
            let p = e.ok()?.path();
            (p.extension()? == "expect").then(|| p.file_stem().unwrap().to_string_lossy().into_owned())
        })
        .collect();
    names.sort();
    names
}

fn criterion_8() -> Outcome {
    let (mut proofs, mut refutations) = (0, 0);
    for name in corpus() {
        let r = verify(&source(&name), None, &CandidateSource::Annotation, &CheckConfig::default()).map_err(|e| e.to_string())?;
        let back = Report::from_json(&r.to_json()).map_err(|e| e.to_string())?;
        let o = replay_report(&back).map_err(|e| format!("{name}: {e:?}"))?;
        ensure(o == r.overall, || format!("{name}: replay says {o}"))?;
        proofs += back.vcs.iter().filter(|v| v.verdict == "Proved").count();
        refutations += back.vcs.iter().filter(|v| v.verdict == "Refuted").count();
    }
    let replayer = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/check/replay.rs")).unwrap();
    let body = replayer.split("#[cfg(test)]").next().unwrap();
    ensure(!body.contains("f64") && !body.contains("f32"), || "replayer uses floating point".into())?;
    Ok(format!("{proofs} certificates and {refutations} counterexamples re-verified"))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 8] = [
        (1, "example 7 end-to-end", criterion_1),
        (2, "cruise PI refutation and truncation", criterion_2),
        (3, "Brockett restricted attractivity", criterion_3),
        (4, "canonical max at fixed parameters", criterion_4),
        (5, "timed dwell-time demo", criterion_5),
        (6, "oracle equivalence", criterion_6),
        (7, "simulator physics", criterion_7),
        (8, "replay integrity", criterion_8),
    ];
    let mut failed = 0;
    for (n, title, run) in criteria {
        match run() {
            Ok(detail) => println!("criterion {n} PASS: {title}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n} FAIL: {title}: {why}");
            }
        }
    }
    println!("{} of 8 criteria pass", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
