//! Command-line driver. Exit codes: 0 proved or success, 1 refuted or
//! violation found, 2 inconclusive, 3 usage or model error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::check::{falsify, CheckConfig};
use crate::model::{closure_warnings, emit_dot, parse_model, parse_predicate, well_formed, Severity, SwitchedModel};
use crate::report::{bench, replay_report, verify_model, write_atomic, CandidateSource, Report};
use crate::sim::{audit_trace, probe_attractivity, probe_stability, simulate, Policy, SimOptions};
use crate::synth::{annotations, synth_common_quadratic, synth_multiple};
use crate::vcgen::{generate, Rule};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REFUTED: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "switchstab", version, about = "Stability verification for switched polynomial systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Budget {
    /// Multiplier degree bound for certificate search.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(0..=4))]
    sos_degree: u32,
    #[arg(long, default_value_t = 20_000, value_parser = positive)]
    falsify_budget: usize,
    #[arg(long, default_value_t = crate::expo::DEFAULT_EXP_TERMS, value_parser = positive)]
    exp_terms: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Budget {
    fn config(&self) -> CheckConfig {
        CheckConfig {
            sos_degree: self.sos_degree,
            falsify_budget: self.falsify_budget,
            seed: self.seed,
            exp_terms: self.exp_terms,
        }
    }
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be positive".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and report well-formedness diagnostics.
    Check { model: PathBuf },
    /// Generate and check the premises of a proof rule.
    Verify {
        model: Option<PathBuf>,
        #[arg(long)]
        rule: Option<String>,
        #[command(flatten)]
        budget: Budget,
        /// Report path (JSON); a summary goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Re-check a saved report instead of searching.
        #[arg(long, conflicts_with = "model")]
        replay: Option<PathBuf>,
        /// Overrides the model's attractivity region.
        #[arg(long)]
        region: Option<String>,
        /// `annotation`, `synthesize` or a file of `lyapunov` lines.
        #[arg(long, default_value = "annotation")]
        candidates: String,
        /// Zero all timings in the report.
        #[arg(long)]
        normalize_timings: bool,
    },
    /// Synthesize Lyapunov candidates and print them as annotations.
    Synth {
        model: PathBuf,
        /// Only look for one common quadratic function.
        #[arg(long)]
        common: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for a counterexample to the named premise.
    Falsify {
        model: PathBuf,
        /// VC id, or the premise name before `[`.
        #[arg(long)]
        vc: String,
        #[arg(long)]
        rule: Option<String>,
        #[arg(long, default_value_t = 100_000, value_parser = positive)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate one execution, writing `<out>.csv` and `<out>.events.json`.
    Simulate {
        model: PathBuf,
        /// Initial state, e.g. `x1=0.1,x2=0`.
        #[arg(long)]
        x0: String,
        #[arg(long)]
        mode: Option<String>,
        /// `random`, `eager`, `adversarial` or `script:t=mode,t=mode`.
        #[arg(long, default_value = "random")]
        policy: String,
        #[arg(long, default_value_t = crate::sim::DEFAULT_DT)]
        dt: f64,
        #[arg(long, default_value_t = crate::sim::DEFAULT_HORIZON)]
        horizon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "trace")]
        out: PathBuf,
    },
    /// Empirical stability (and optionally attractivity) probe.
    Probe {
        model: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.1")]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = crate::sim::DEFAULT_HORIZON)]
        horizon: f64,
        /// Probe attractivity from `‖x0‖ < delta` instead.
        #[arg(long)]
        attractivity: bool,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        /// Restrict initial states; defaults to the model's region.
        #[arg(long)]
        region: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Graphviz rendering of the mode graph.
    Render {
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every fixture with an expectation sidecar in a directory.
    Bench {
        corpus: PathBuf,
        #[command(flatten)]
        budget: Budget,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Usage(String);

impl<E: std::fmt::Display> From<E> for Usage {
    fn from(e: E) -> Self {
        Usage(e.to_string())
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{}", e.render()) } else { write!(out, "{}", e.render()) };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
    }
}

fn read(path: &Path) -> Result<String, Usage> {
    std::fs::read_to_string(path).map_err(|e| Usage(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<(SwitchedModel, String), Usage> {
    let text = read(path)?;
    let m = parse_model(&text).map_err(|d| Usage(format!("{}:\n{d}", path.display())))?;
    Ok((m, text))
}

fn rule(name: &Option<String>) -> Result<Option<Rule>, Usage> {
    name.as_deref().map(|r| Rule::from_name(r).ok_or_else(|| Usage(format!("unknown rule `{r}`")))).transpose()
}

fn emit(out: &mut dyn Write, path: &Option<PathBuf>, text: &str) -> Result<(), Usage> {
    match path {
        Some(p) => write_atomic(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32, Usage> {
    match cmd {
        Command::Check { model } => {
            let text = read(&model)?;
            match parse_model(&text) {
                Err(d) => {
                    write!(out, "{d}")?;
                    Ok(EXIT_USAGE)
                }
                Ok(m) => {
                    let mut diags = well_formed(&m);
                    diags.0.extend(closure_warnings(&m).0);
                    write!(out, "{diags}")?;
                    let errors = diags.0.iter().filter(|d| d.severity == Severity::Error).count();
                    writeln!(out, "{}: {} mode(s), {} error(s)", m.name, m.modes.len(), errors)?;
                    Ok(if errors == 0 { EXIT_OK } else { EXIT_USAGE })
                }
            }
        }
        Command::Verify { model, rule: r, budget, out: path, replay, region, candidates, normalize_timings } => {
            if let Some(rp) = replay {
                let report = Report::from_json(&read(&rp)?)?;
                return Ok(match replay_report(&report) {
                    Ok(o) => {
                        writeln!(out, "replay ok: {} VC(s), overall {o}", report.vcs.len())?;
                        o.exit_code()
                    }
                    Err(errs) => {
                        for e in errs {
                            writeln!(out, "replay failed: {e}")?;
                        }
                        EXIT_USAGE
                    }
                });
            }
            let model = model.ok_or_else(|| Usage("verify needs a model or --replay".into()))?;
            let (mut m, text) = load(&model)?;
            let errors = well_formed(&m);
            if !errors.is_empty() {
                return Err(Usage(errors.to_string()));
            }
            if let Some(reg) = region {
                m.region = Some(parse_predicate(&reg, &m.all_vars()).map_err(|d| Usage(d.to_string()))?);
            }
            let source = match candidates.as_str() {
                "annotation" => CandidateSource::Annotation,
                "synthesize" => CandidateSource::Synthesize,
                file => CandidateSource::File(read(Path::new(file))?),
            };
            let mut report = verify_model(&m, &text, rule(&r)?, &source, &budget.config())?;
            if normalize_timings {
                report = report.normalized();
            }
            for v in &report.vcs {
                writeln!(out, "{:40} {}", v.id, v.verdict)?;
            }
            writeln!(out, "overall: {}", report.overall)?;
            if report.overall == crate::check::Overall::RefutedPremise {
                writeln!(out, "note: a refuted premise refutes the sufficient condition, not stability itself")?;
            }
            if let Some(p) = path {
                write_atomic(&p, &report.to_json())?;
            }
            Ok(report.overall.exit_code())
        }
        Command::Synth { model, common, out: path } => {
            let (m, _) = load(&model)?;
            let found = if common {
                synth_common_quadratic(&m)
            } else {
                synth_multiple(&m).map(|a| a.functions).or_else(|| synth_common_quadratic(&m))
            };
            match found {
                Some(f) => {
                    emit(out, &path, &annotations(&f))?;
                    Ok(EXIT_OK)
                }
                None => {
                    writeln!(out, "no candidate found")?;
                    Ok(EXIT_INCONCLUSIVE)
                }
            }
        }
        Command::Falsify { model, vc, rule: r, budget, seed, out: path } => {
            let (m, _) = load(&model)?;
            let r = rule(&r)?.unwrap_or_else(|| Rule::for_model(&m));
            let vcs = generate(&m, r)?;
            let targets: Vec<_> =
                vcs.iter().filter(|c| c.id == vc || c.id.split('[').next() == Some(vc.as_str())).collect();
            if targets.is_empty() {
                return Err(Usage(format!("no VC named `{vc}`")));
            }
            for t in targets {
                if let Some(cex) = falsify(t, budget, seed) {
                    emit(out, &path, &(serde_json::to_string_pretty(&cex)? + "\n"))?;
                    return Ok(EXIT_REFUTED);
                }
            }
            writeln!(out, "no counterexample in {budget} samples")?;
            Ok(EXIT_INCONCLUSIVE)
        }
        Command::Simulate { model, x0, mode, policy, dt, horizon, seed, out: prefix } => {
            let (m, _) = load(&model)?;
            if !(dt > 0.0 && horizon > 0.0) {
                return Err(Usage("dt and horizon must be positive".into()));
            }
            let x0 = parse_point(&x0, &m)?;
            let policy = parse_policy(&policy, seed)?;
            let trace = simulate(&m, &x0, mode.as_deref(), &policy, &SimOptions { dt, horizon, ..Default::default() });
            let csv = prefix.with_extension("csv");
            let events = prefix.with_extension("events.json");
            write_atomic(&csv, &trace.to_csv())?;
            write_atomic(&events, &(serde_json::to_string_pretty(&trace.events_json())? + "\n"))?;
            writeln!(out, "{} samples, {} switches, end: {}", trace.samples.len(), trace.events.len(), trace.end)?;
            Ok(match audit_trace(&m, &trace) {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    writeln!(out, "audit: {e}")?;
                    EXIT_REFUTED
                }
            })
        }
        Command::Probe { model, eps, samples, seed, horizon, attractivity, delta, region, out: path } => {
            let (m, _) = load(&model)?;
            let opts = SimOptions { horizon, ..Default::default() };
            let report = if attractivity {
                let region = match region {
                    Some(r) => Some(parse_predicate(&r, &m.all_vars()).map_err(|d| Usage(d.to_string()))?),
                    None => m.region.clone(),
                };
                let e = eps.first().copied().unwrap_or(0.1);
                probe_attractivity(&m, delta, e, samples, seed, region.as_ref(), &opts)
            } else {
                probe_stability(&m, &eps, samples, seed, &opts)
            };
            emit(out, &path, &(serde_json::to_string_pretty(&report)? + "\n"))?;
            Ok(if report.violation_count() == 0 { EXIT_OK } else { EXIT_REFUTED })
        }
        Command::Render { model, out: path } => {
            let (m, _) = load(&model)?;
            emit(out, &path, &emit_dot(&m))?;
            Ok(EXIT_OK)
        }
        Command::Bench { corpus, budget, out: path } => {
            let summary = bench(&corpus, &budget.config())?;
            write!(out, "{}", summary.table())?;
            if let Some(p) = path {
                write_atomic(&p, &(serde_json::to_string_pretty(&summary)? + "\n"))?;
            }
            Ok(if summary.mismatches == 0 { EXIT_OK } else { EXIT_REFUTED })
        }
    }
}

fn parse_point(text: &str, m: &SwitchedModel) -> Result<BTreeMap<String, f64>, Usage> {
    let vars = m.all_vars();
    let mut out = BTreeMap::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| Usage(format!("expected var=value, found `{part}`")))?;
        let k = k.trim();
        if !vars.iter().any(|w| w == k) {
            return Err(Usage(format!("unknown variable `{k}`")));
        }
        out.insert(k.to_string(), v.trim().parse::<f64>()?);
    }
    Ok(out)
}

fn parse_policy(text: &str, seed: u64) -> Result<Policy, Usage> {
    Ok(match text {
        "random" => Policy::Random { seed },
        "eager" => Policy::Eager,
        "adversarial" => Policy::Adversarial,
        s => {
            let script = s.strip_prefix("script:").ok_or_else(|| Usage(format!("unknown policy `{s}`")))?;
            let mut steps = Vec::new();
            for part in script.split(',').filter(|p| !p.is_empty()) {
                let (t, m) = part.split_once('=').ok_or_else(|| Usage(format!("expected time=mode, found `{part}`")))?;
                steps.push((t.trim().parse::<f64>()?, m.trim().to_string()));
            }
            Policy::Scripted(steps)
        }
    })
}
