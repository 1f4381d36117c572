//! Numerical simulation of switched executions and empirical probes of
//! stability and attractivity.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::model::predicate::{Cmp, Predicate};
use crate::model::{Kind, SwitchedModel, TIMER};
use crate::poly::{FloatPoly, Poly};
use crate::rational::{to_f64, Rational};
use crate::vcgen::LyapunovAssignment;

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_HORIZON: f64 = 20.0;
const BISECTION_STEPS: usize = 60;
/// Absolute slack when testing domains and guards in floating point.
const DOMAIN_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum Policy {
    /// Poisson switch attempts (rate 1) after a minimum hold, uniform among
    /// the legal choices, staying put included.
    Random { seed: u64 },
    /// Switches as soon as a transition is enabled; state-dependent models
    /// only switch when forced.
    Eager,
    /// Picks the legal choice that grows `‖x‖²` fastest.
    Adversarial,
    /// `(time, mode)` pairs, in order.
    Scripted(Vec<(f64, String)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimOptions {
    pub dt: f64,
    pub horizon: f64,
    /// Minimum hold between voluntary switches, in steps.
    pub hold_steps: usize,
    /// Keep every `record_every`-th step (events are always kept).
    pub record_every: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { dt: DEFAULT_DT, horizon: DEFAULT_HORIZON, hold_steps: 10, record_every: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub mode: String,
    pub x: Vec<f64>,
    pub tau: f64,
    /// `V_p` for every annotated mode, in [`Trace::lyapunov_modes`] order.
    pub v: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Event {
    pub t: f64,
    pub from: String,
    pub to: String,
    /// `forced`, `policy` or `scripted`.
    pub reason: String,
    pub x: Vec<f64>,
    pub tau: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trace {
    /// State variables then auxiliaries; the timer has its own column.
    pub vars: Vec<String>,
    pub lyapunov_modes: Vec<String>,
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    /// `horizon`, `stuck` or `diverged`.
    pub end: String,
}

impl Trace {
    pub fn stuck(&self) -> bool {
        self.end == "stuck"
    }

    /// Header `t,mode,<vars>,tau,V_<mode>...`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,mode");
        for v in &self.vars {
            let _ = write!(out, ",{v}");
        }
        out.push_str(",tau");
        for m in &self.lyapunov_modes {
            let _ = write!(out, ",V_{m}");
        }
        out.push('\n');
        for s in &self.samples {
            let _ = write!(out, "{},{}", s.t, s.mode);
            for x in &s.x {
                let _ = write!(out, ",{x}");
            }
            let _ = write!(out, ",{}", s.tau);
            for v in &s.v {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn events_json(&self) -> serde_json::Value {
        serde_json::json!({ "end": self.end, "events": self.events })
    }
}

struct CompiledPred(Vec<Vec<(Cmp, FloatPoly)>>);

impl CompiledPred {
    fn new(p: &Predicate, order: &[String]) -> Self {
        CompiledPred(p.clauses().iter().map(|c| c.iter().map(|a| (a.cmp, a.poly.compile(order))).collect()).collect())
    }

    fn holds(&self, x: &[f64]) -> bool {
        self.0.iter().any(|c| c.iter().all(|(cmp, p)| cmp.holds_f64(p.eval(x), DOMAIN_TOL)))
    }
}

struct CTransition {
    to: usize,
    guard: CompiledPred,
    reset: Vec<(usize, FloatPoly)>,
    min_dwell: f64,
}

struct CMode {
    id: String,
    /// Derivative per coordinate.
    field: Vec<FloatPoly>,
    domain: CompiledPred,
    max_dwell: f64,
    out: Vec<CTransition>,
}

/// Floating-point view of a model over `vars ++ [tau]`.
pub struct Compiled {
    kind: Kind,
    vars: Vec<String>,
    n_state: usize,
    tau: usize,
    modes: Vec<CMode>,
    lyap: Vec<(String, FloatPoly)>,
}

impl Compiled {
    pub fn new(m: &SwitchedModel) -> Compiled {
        let mut order = m.all_vars();
        if !order.iter().any(|v| v == TIMER) {
            order.push(TIMER.to_string());
        }
        let tau = order.iter().position(|v| v == TIMER).expect("timer");
        let modes = m
            .modes
            .iter()
            .map(|p| {
                let field = order
                    .iter()
                    .map(|v| match p.field.get(v) {
                        Some(e) => e.compile(&order),
                        None if v == TIMER => Poly::constant(m.var_list(), Rational::from_integer(1.into())).compile(&order),
                        None => Poly::zero(m.var_list()).compile(&order),
                    })
                    .collect();
                let out = m
                    .transitions
                    .iter()
                    .filter(|t| t.from == p.id)
                    .filter_map(|t| {
                        Some(CTransition {
                            to: m.mode_index(&t.to)?,
                            guard: CompiledPred::new(&t.guard, &order),
                            reset: t
                                .reset
                                .iter()
                                .filter_map(|(v, e)| Some((order.iter().position(|w| w == v)?, e.compile(&order))))
                                .collect(),
                            min_dwell: t.min_dwell.as_ref().map_or(0.0, to_f64),
                        })
                    })
                    .collect();
                CMode {
                    id: p.id.clone(),
                    field,
                    domain: CompiledPred::new(&p.domain, &order),
                    max_dwell: p.max_dwell.as_ref().map_or(f64::INFINITY, to_f64),
                    out,
                }
            })
            .collect();
        let lyap = m
            .modes
            .iter()
            .filter_map(|p| m.lyapunov_for(&p.id).map(|v| (p.id.clone(), v.compile(&order))))
            .collect();
        Compiled { kind: m.kind, vars: order, n_state: m.state_vars.len(), tau, modes, lyap }
    }

    fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn mode_index(&self, id: &str) -> Option<usize> {
        self.modes.iter().position(|p| p.id == id)
    }

    fn deriv(&self, mode: usize, x: &[f64], out: &mut [f64]) {
        for (o, f) in out.iter_mut().zip(&self.modes[mode].field) {
            *o = f.eval(x);
        }
    }

    fn rk4(&self, mode: usize, x: &[f64], h: f64) -> Vec<f64> {
        let n = self.dim();
        let mut k1 = vec![0.0; n];
        let mut k2 = vec![0.0; n];
        let mut k3 = vec![0.0; n];
        let mut k4 = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        self.deriv(mode, x, &mut k1);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        self.deriv(mode, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        self.deriv(mode, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = x[i] + h * k3[i];
        }
        self.deriv(mode, &tmp, &mut k4);
        (0..n).map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
    }

    fn inside(&self, mode: usize, x: &[f64]) -> bool {
        let p = &self.modes[mode];
        p.domain.holds(x) && x[self.tau] <= p.max_dwell + DOMAIN_TOL
    }

    /// The mode can be entered at `x` and flow for one step.
    fn can_flow(&self, mode: usize, x: &[f64], dt: f64) -> bool {
        self.inside(mode, x) && self.inside(mode, &self.rk4(mode, x, dt))
    }

    fn norm2(&self, x: &[f64]) -> f64 {
        x[..self.n_state].iter().map(|v| v * v).sum()
    }

    fn lyap_values(&self, x: &[f64]) -> Vec<f64> {
        self.lyap.iter().map(|(_, v)| v.eval(x)).collect()
    }

    /// Legal discrete moves from `mode` at `x`: `(target, post-state)`.
    fn choices(&self, mode: usize, x: &[f64], dt: f64, include_stay: bool) -> Vec<(usize, Vec<f64>)> {
        let mut out = Vec::new();
        match self.kind {
            Kind::Arbitrary | Kind::StateDependent => {
                for q in 0..self.modes.len() {
                    if q == mode && !include_stay {
                        continue;
                    }
                    let mut y = x.to_vec();
                    if q != mode {
                        y[self.tau] = 0.0;
                    }
                    if self.can_flow(q, &y, dt) {
                        out.push((q, y));
                    }
                }
            }
            _ => {
                if include_stay && self.can_flow(mode, x, dt) {
                    out.push((mode, x.to_vec()));
                }
                for t in &self.modes[mode].out {
                    if x[self.tau] + DOMAIN_TOL < t.min_dwell || !t.guard.holds(x) {
                        continue;
                    }
                    let mut y = x.to_vec();
                    for (k, e) in &t.reset {
                        y[*k] = e.eval(x);
                    }
                    y[self.tau] = 0.0;
                    if self.can_flow(t.to, &y, dt) {
                        out.push((t.to, y));
                    }
                }
            }
        }
        out
    }

    fn growth(&self, mode: usize, x: &[f64]) -> f64 {
        let mut d = vec![0.0; self.dim()];
        self.deriv(mode, x, &mut d);
        (0..self.n_state).map(|i| 2.0 * x[i] * d[i]).sum()
    }
}

/// Callback receiving `(t, mode, x)` after every step.
pub type Observer<'a> = dyn FnMut(f64, usize, &[f64]) + 'a;

/// Initial point over the model's variables; missing entries are zero.
pub fn initial_point(c: &Compiled, x0: &BTreeMap<String, f64>) -> Vec<f64> {
    c.vars.iter().map(|v| x0.get(v).copied().unwrap_or(0.0)).collect()
}

struct Run {
    samples: Vec<Sample>,
    events: Vec<Event>,
    end: String,
}

fn run(
    c: &Compiled,
    x0: &[f64],
    start: Option<usize>,
    policy: &Policy,
    opts: &SimOptions,
    record: bool,
    observer: &mut Observer<'_>,
) -> Run {
    let dt = opts.dt;
    let mut rng = ChaCha8Rng::seed_from_u64(match policy {
        Policy::Random { seed } => *seed,
        _ => 0,
    });
    let mut x = x0.to_vec();
    x[c.tau] = 0.0;
    let mut samples = Vec::new();
    let mut events = Vec::new();
    let visible = |x: &[f64]| -> Vec<f64> {
        x.iter().enumerate().filter(|(i, _)| *i != c.tau).map(|(_, v)| *v).collect()
    };
    let sample = |t: f64, mode: usize, x: &[f64]| Sample {
        t,
        mode: c.modes[mode].id.clone(),
        x: visible(x),
        tau: x[c.tau],
        v: c.lyap_values(x),
    };
    let first = start.filter(|&p| c.inside(p, &x)).or_else(|| {
        let opts: Vec<usize> = (0..c.modes.len()).filter(|&p| c.can_flow(p, &x, dt)).collect();
        match policy {
            Policy::Random { .. } if !opts.is_empty() => Some(opts[rng.gen_range(0..opts.len())]),
            Policy::Adversarial => opts.iter().copied().max_by(|&a, &b| c.growth(a, &x).total_cmp(&c.growth(b, &x))),
            _ => opts.first().copied(),
        }
    });
    let Some(mut mode) = first else {
        return Run { samples, events, end: "stuck".into() };
    };
    observer(0.0, mode, &x);
    if record {
        samples.push(sample(0.0, mode, &x));
    }
    let mut t = 0.0;
    let mut step = 0usize;
    let mut held = 0usize;
    let mut next_attempt = -rng.gen::<f64>().max(1e-300).ln();
    let mut script = match policy {
        Policy::Scripted(s) => s.clone(),
        _ => Vec::new(),
    };
    script.reverse();
    let end;
    loop {
        if t >= opts.horizon - 1e-12 {
            end = "horizon";
            break;
        }
        let h = dt.min(opts.horizon - t);
        let mut y = c.rk4(mode, &x, h);
        let mut forced = false;
        let mut advanced = h;
        if !c.inside(mode, &y) {
            let (mut lo, mut hi) = (0.0, h);
            for _ in 0..BISECTION_STEPS {
                if hi - lo <= 1e-9 * dt {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if c.inside(mode, &c.rk4(mode, &x, mid)) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            y = if lo > 0.0 { c.rk4(mode, &x, lo) } else { x.clone() };
            advanced = lo;
            forced = true;
        }
        if !y.iter().all(|v| v.is_finite()) {
            end = "diverged";
            break;
        }
        x = y;
        t += advanced;
        step += 1;
        held += 1;
        observer(t, mode, &x);
        if record && (step.is_multiple_of(opts.record_every.max(1)) || forced) {
            samples.push(sample(t, mode, &x));
        }

        let mut reason = None;
        let mut next = None;
        if forced {
            let opts_now = c.choices(mode, &x, dt, false);
            next = match policy {
                Policy::Random { .. } if !opts_now.is_empty() => Some(opts_now[rng.gen_range(0..opts_now.len())].clone()),
                Policy::Adversarial => {
                    opts_now.iter().max_by(|a, b| c.growth(a.0, &a.1).total_cmp(&c.growth(b.0, &b.1))).cloned()
                }
                _ => opts_now.first().cloned(),
            };
            if next.is_none() {
                end = "stuck";
                break;
            }
            reason = Some("forced");
        } else if let Some((at, target)) = script.last().cloned() {
            if t + 1e-12 >= at {
                script.pop();
                let q = c.mode_index(&target);
                let opts_now = c.choices(mode, &x, dt, true);
                match q.and_then(|q| opts_now.into_iter().find(|(m, _)| *m == q)) {
                    Some(choice) => {
                        next = Some(choice);
                        reason = Some("scripted");
                    }
                    None => {
                        end = "stuck";
                        break;
                    }
                }
            }
        } else if held >= opts.hold_steps {
            match policy {
                Policy::Random { .. } if t >= next_attempt => {
                    next_attempt = t - rng.gen::<f64>().max(1e-300).ln();
                    let opts_now = c.choices(mode, &x, dt, true);
                    if !opts_now.is_empty() {
                        next = Some(opts_now[rng.gen_range(0..opts_now.len())].clone());
                        reason = Some("policy");
                    }
                }
                Policy::Eager if !matches!(c.kind, Kind::Arbitrary | Kind::StateDependent) => {
                    next = c.choices(mode, &x, dt, false).into_iter().next();
                    reason = Some("policy");
                }
                Policy::Adversarial => {
                    let opts_now = c.choices(mode, &x, dt, true);
                    next = opts_now.into_iter().max_by(|a, b| c.growth(a.0, &a.1).total_cmp(&c.growth(b.0, &b.1)));
                    reason = Some("policy");
                }
                _ => {}
            }
        }
        if let Some((q, y)) = next {
            let switched = q != mode || y != x;
            if switched {
                events.push(Event {
                    t,
                    from: c.modes[mode].id.clone(),
                    to: c.modes[q].id.clone(),
                    reason: reason.unwrap_or("policy").to_string(),
                    x: visible(&y),
                    tau: x[c.tau],
                });
                mode = q;
                x = y;
                held = 0;
                if record {
                    samples.push(sample(t, mode, &x));
                }
            }
        }
    }
    Run { samples, events, end: end.to_string() }
}

/// RK4 integration with event location by bisection.
pub fn simulate(m: &SwitchedModel, x0: &BTreeMap<String, f64>, start: Option<&str>, policy: &Policy, opts: &SimOptions) -> Trace {
    let c = Compiled::new(m);
    let x = initial_point(&c, x0);
    let start = start.and_then(|s| c.mode_index(s));
    let r = run(&c, &x, start, policy, opts, true, &mut |_, _, _| {});
    Trace {
        vars: c.vars.iter().filter(|v| *v != TIMER).cloned().collect(),
        lyapunov_modes: c.lyap.iter().map(|(m, _)| m.clone()).collect(),
        samples: r.samples,
        events: r.events,
        end: r.end,
    }
}

/// Re-checks domains, guards and dwell bounds along a trace.
pub fn audit_trace(m: &SwitchedModel, trace: &Trace) -> Result<(), String> {
    let c = Compiled::new(m);
    let full = |xs: &[f64], tau: f64| -> Vec<f64> {
        let mut v = xs.to_vec();
        v.insert(c.tau, tau);
        v
    };
    let tol = 1e-6;
    for (i, s) in trace.samples.iter().enumerate() {
        let p = c.mode_index(&s.mode).ok_or_else(|| format!("sample {i}: unknown mode {}", s.mode))?;
        let x = full(&s.x, s.tau);
        let ok = c.modes[p].domain.0.iter().any(|cl| cl.iter().all(|(cmp, q)| cmp.holds_f64(q.eval(&x), tol)));
        if !ok || s.tau > c.modes[p].max_dwell + tol {
            return Err(format!("sample {i} at t={} leaves the domain of {}", s.t, s.mode));
        }
        if i > 0 && s.t < trace.samples[i - 1].t {
            return Err(format!("sample {i}: time decreases"));
        }
    }
    for (i, e) in trace.events.iter().enumerate() {
        let p = c.mode_index(&e.from).ok_or("unknown mode")?;
        let q = c.mode_index(&e.to).ok_or("unknown mode")?;
        if matches!(c.kind, Kind::Arbitrary | Kind::StateDependent) {
            continue;
        }
        let legal = c.modes[p].out.iter().any(|t| t.to == q && e.tau + tol >= t.min_dwell);
        if !legal {
            return Err(format!("event {i} at t={}: no enabled transition {} -> {}", e.t, e.from, e.to));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub sample: usize,
    pub seed: u64,
    pub x0: Vec<f64>,
    pub max_norm: f64,
    pub time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityEntry {
    pub epsilon: f64,
    /// Largest grid `δ` with no violation.
    pub delta: Option<f64>,
    /// Violations at the smallest `δ` tried when none passed.
    pub violations: Vec<Violation>,
    pub max_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    pub horizon: f64,
    pub samples: usize,
    pub seed: u64,
    pub stability: Vec<StabilityEntry>,
    /// Attractivity: first time after which `‖x‖ < ε` holds, maximized.
    pub settle_time: Option<f64>,
    pub attractivity_violations: Vec<Violation>,
    pub all_stuck: bool,
}

impl ProbeReport {
    pub fn violation_count(&self) -> usize {
        self.stability.iter().map(|e| e.violations.len()).sum::<usize>() + self.attractivity_violations.len()
    }
}

fn sample_seed(seed: u64, k: usize) -> u64 {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(k as u64);
    r.gen()
}

/// Uniform point in the open ball of radius `r` over the state variables,
/// optionally restricted to `region` by rejection.
fn ball_point(c: &Compiled, r: f64, rng: &mut ChaCha8Rng, region: Option<&CompiledPred>) -> Option<Vec<f64>> {
    for _ in 0..10_000 {
        let mut x = vec![0.0; c.dim()];
        for v in x.iter_mut().take(c.n_state) {
            *v = rng.gen_range(-r..r);
        }
        if c.norm2(&x).sqrt() >= r {
            continue;
        }
        if region.is_none_or(|g| g.holds(&x)) {
            return Some(x);
        }
    }
    None
}

struct Outcome {
    max_norm: f64,
    /// Last time with `‖x‖ ≥ ε`.
    last_outside: f64,
    stuck: bool,
    x0: Vec<f64>,
    seed: u64,
}

fn run_sample(c: &Compiled, x0: Vec<f64>, seed: u64, eps: f64, opts: &SimOptions) -> Outcome {
    let mut max_norm: f64 = 0.0;
    let mut last_outside: f64 = -1.0;
    let policy = if seed % 4 == 3 { Policy::Adversarial } else { Policy::Random { seed } };
    let r = run(c, &x0, None, &policy, opts, false, &mut |t, _, x| {
        let n = c.norm2(x).sqrt();
        max_norm = max_norm.max(n);
        if n >= eps {
            last_outside = t;
        }
    });
    if r.end == "diverged" {
        max_norm = f64::INFINITY;
        last_outside = opts.horizon;
    }
    Outcome { max_norm, last_outside, stuck: r.end == "stuck" && max_norm == 0.0, x0, seed }
}

fn batch(c: &Compiled, delta: f64, eps: f64, samples: usize, seed: u64, region: Option<&CompiledPred>, opts: &SimOptions) -> Vec<Outcome> {
    let work: Vec<(usize, Vec<f64>, u64)> = (0..samples)
        .filter_map(|k| {
            let s = sample_seed(seed, k);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            ball_point(c, delta, &mut rng, region).map(|x| (k, x, s))
        })
        .collect();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(work.len().max(1));
    let chunks: Vec<&[(usize, Vec<f64>, u64)]> = work.chunks(work.len().div_ceil(workers).max(1)).collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = chunks
            .iter()
            .map(|chunk| s.spawn(move || chunk.iter().map(|(_, x, sd)| run_sample(c, x.clone(), *sd, eps, opts)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker")).collect()
    })
}

fn violation(k: usize, o: &Outcome) -> Violation {
    Violation { sample: k, seed: o.seed, x0: o.x0.clone(), max_norm: o.max_norm, time: o.last_outside }
}

/// For each `ε`, the largest `δ = ε·2^-k` (`k ≤ 10`) such that no sampled
/// execution from `‖x0‖ < δ` reaches `‖x‖ ≥ ε`.
pub fn probe_stability(m: &SwitchedModel, epsilons: &[f64], samples: usize, seed: u64, opts: &SimOptions) -> ProbeReport {
    let c = Compiled::new(m);
    let mut stability = Vec::new();
    let mut all_stuck = true;
    for &eps in epsilons {
        let mut entry = StabilityEntry { epsilon: eps, delta: None, violations: Vec::new(), max_norm: 0.0 };
        for k in 0..=10 {
            let delta = eps * 2f64.powi(-k);
            let out = batch(&c, delta, eps, samples, seed, None, opts);
            all_stuck &= out.iter().all(|o| o.stuck);
            let bad: Vec<Violation> =
                out.iter().enumerate().filter(|(_, o)| o.max_norm >= eps).map(|(i, o)| violation(i, o)).collect();
            entry.max_norm = out.iter().map(|o| o.max_norm).fold(0.0, f64::max);
            if bad.is_empty() {
                entry.delta = Some(delta);
                entry.violations.clear();
                break;
            }
            entry.violations = bad;
        }
        stability.push(entry);
    }
    ProbeReport {
        horizon: opts.horizon,
        samples,
        seed,
        stability,
        settle_time: None,
        attractivity_violations: Vec::new(),
        all_stuck,
    }
}

/// Estimates the settling time `T` for `‖x0‖ < δ` (and `x0` in `region`),
/// reporting executions that do not settle below `ε` by the horizon.
pub fn probe_attractivity(
    m: &SwitchedModel,
    delta: f64,
    eps: f64,
    samples: usize,
    seed: u64,
    region: Option<&Predicate>,
    opts: &SimOptions,
) -> ProbeReport {
    let c = Compiled::new(m);
    let region = region.map(|r| CompiledPred::new(r, &c.vars));
    let out = batch(&c, delta, eps, samples, seed, region.as_ref(), opts);
    let all_stuck = !out.is_empty() && out.iter().all(|o| o.stuck);
    let settle = opts.horizon * (1.0 - 1e-9);
    let bad: Vec<Violation> =
        out.iter().enumerate().filter(|(_, o)| !o.stuck && o.last_outside >= settle).map(|(i, o)| violation(i, o)).collect();
    let settle_time = if bad.is_empty() {
        Some(out.iter().map(|o| o.last_outside.max(0.0)).fold(0.0, f64::max))
    } else {
        None
    };
    ProbeReport {
        horizon: opts.horizon,
        samples: out.len(),
        seed,
        stability: Vec::new(),
        settle_time,
        attractivity_violations: bad,
        all_stuck,
    }
}

/// Re-runs a reported violation, returning its maximal norm.
pub fn replay_violation(m: &SwitchedModel, v: &Violation, opts: &SimOptions) -> f64 {
    let c = Compiled::new(m);
    run_sample(&c, v.x0.clone(), v.seed, f64::INFINITY, opts).max_norm
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SublevelCheck {
    pub holds: bool,
    pub first_violation: Option<usize>,
    pub reason: Option<String>,
}

/// The active mode's `V` stays below `w` and does not increase while the
/// mode stays active (slack `1e-6` per sample).
pub fn check_trace_sublevel(trace: &Trace, a: &LyapunovAssignment, w: &Rational) -> SublevelCheck {
    let w = to_f64(w);
    let mut order = trace.vars.clone();
    order.push(TIMER.to_string());
    let compiled: BTreeMap<&str, FloatPoly> = a.functions.iter().map(|(k, v)| (k.as_str(), v.compile(&order))).collect();
    let mut prev: Option<(&str, f64)> = None;
    let fail = |i: usize, r: String| SublevelCheck { holds: false, first_violation: Some(i), reason: Some(r) };
    for (i, s) in trace.samples.iter().enumerate() {
        let Some(v) = compiled.get(s.mode.as_str()) else {
            return fail(i, format!("no candidate for mode {}", s.mode));
        };
        let mut x = s.x.clone();
        x.push(s.tau);
        let val = v.eval(&x);
        if val >= w {
            return fail(i, format!("V_{} = {val} >= {w} at t = {}", s.mode, s.t));
        }
        if let Some((pm, pv)) = prev {
            if pm == s.mode && val > pv + 1e-6 {
                return fail(i, format!("V_{} increases from {pv} to {val} at t = {}", s.mode, s.t));
            }
        }
        prev = Some((s.mode.as_str(), val));
    }
    SublevelCheck { holds: true, first_violation: None, reason: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    fn decay() -> SwitchedModel {
        parse_model("system d { var x; kind arbitrary; mode a { ode { x' = -x } } }").unwrap()
    }

    #[test]
    fn rk4_endpoint() {
        let m = decay();
        let x0 = [("x".to_string(), 1.0)].into();
        let tr = simulate(&m, &x0, None, &Policy::Eager, &SimOptions { horizon: 5.0, ..Default::default() });
        let last = tr.samples.last().unwrap();
        assert!((last.t - 5.0).abs() < 1e-9);
        assert!((last.x[0] - (-5f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn csv_header() {
        let m = decay();
        let tr = simulate(&m, &[("x".to_string(), 1.0)].into(), None, &Policy::Eager, &SimOptions { horizon: 0.01, ..Default::default() });
        assert!(tr.to_csv().starts_with("t,mode,x,tau\n"));
    }
}
