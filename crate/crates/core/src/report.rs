//! Verification runs, JSON reports, report replay and the corpus benchmark.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::check::certificate::{Certificate, Counterexample, Verdict};
use crate::check::replay::{replay, ReplayError, Statement};
use crate::check::{check_all, overall, CheckConfig, CheckedVc, Overall};
use crate::model::{parse_expr, parse_model, SwitchedModel};
use crate::synth::{synth_common_quadratic, synth_multiple};
use crate::vcgen::{generate, Rule, VcError, VerificationCondition};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub name: String,
    /// SHA-256 of the model source.
    pub hash: String,
    pub kind: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VcOrigin {
    pub rule: String,
    pub premise: String,
    pub modes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VcReport {
    pub id: String,
    pub origin: VcOrigin,
    pub statement: Statement,
    pub verdict: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub millis: u64,
}

impl VcReport {
    pub fn to_verdict(&self) -> Option<Verdict> {
        match self.verdict.as_str() {
            "Proved" => Some(Verdict::Proved { certificate: self.certificate.clone()? }),
            "Refuted" => Some(Verdict::Refuted { counterexample: self.counterexample.clone()? }),
            "Inconclusive" => Some(Verdict::Inconclusive { reason: self.reason.clone().unwrap_or_default() }),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budgets {
    pub sos_degree: u32,
    pub falsify_budget: usize,
    pub exp_terms: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub model: ModelInfo,
    pub rule: String,
    pub vcs: Vec<VcReport>,
    pub overall: Overall,
    pub seed: u64,
    pub budgets: Budgets,
}

impl Report {
    pub fn build(m: &SwitchedModel, source: &str, rule: Rule, vcs: &[VerificationCondition], checked: &[CheckedVc], cfg: &CheckConfig) -> Report {
        let rows = vcs
            .iter()
            .zip(checked)
            .map(|(vc, c)| VcReport {
                id: vc.id.clone(),
                origin: VcOrigin {
                    rule: vc.origin.rule.name().to_string(),
                    premise: vc.origin.premise.clone(),
                    modes: vc.origin.modes.clone(),
                },
                statement: Statement::of(vc),
                verdict: c.verdict.label().to_string(),
                certificate: c.verdict.certificate().cloned(),
                counterexample: c.verdict.counterexample().cloned(),
                reason: match &c.verdict {
                    Verdict::Inconclusive { reason } => Some(reason.clone()),
                    _ => None,
                },
                millis: c.millis as u64,
            })
            .collect();
        Report {
            version: VERSION.to_string(),
            model: ModelInfo { name: m.name.clone(), hash: model_hash(source), kind: m.kind.keyword().to_string() },
            rule: rule.name().to_string(),
            vcs: rows,
            overall: overall(checked.iter().map(|c| &c.verdict)),
            seed: cfg.seed,
            budgets: Budgets { sos_degree: cfg.sos_degree, falsify_budget: cfg.falsify_budget, exp_terms: cfg.exp_terms },
        }
    }

    /// Timings zeroed, for byte-level comparison.
    pub fn normalized(mut self) -> Report {
        self.vcs.iter_mut().for_each(|v| v.millis = 0);
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Report, serde_json::Error> {
        serde_json::from_str(text)
    }
}

pub fn model_hash(source: &str) -> String {
    hex::encode(Sha256::digest(source.as_bytes()))
}

#[derive(Debug, thiserror::Error)]
pub enum ReportReplayError {
    #[error("{id}: malformed verdict `{verdict}`")]
    Malformed { id: String, verdict: String },
    #[error("{id}: {source}")]
    Replay { id: String, source: ReplayError },
    #[error("overall `{stated}` does not follow from the verdicts (`{derived}`)")]
    Overall { stated: Overall, derived: Overall },
}

/// Re-checks every certificate and counterexample in a report with exact
/// arithmetic. Inconclusive rows carry nothing to check.
pub fn replay_report(r: &Report) -> Result<Overall, Vec<ReportReplayError>> {
    let mut errors = Vec::new();
    let mut verdicts = Vec::new();
    for row in &r.vcs {
        let Some(v) = row.to_verdict() else {
            errors.push(ReportReplayError::Malformed { id: row.id.clone(), verdict: row.verdict.clone() });
            continue;
        };
        if !matches!(v, Verdict::Inconclusive { .. }) {
            if let Err(source) = replay(&row.statement, &v) {
                errors.push(ReportReplayError::Replay { id: row.id.clone(), source });
            }
        }
        verdicts.push(v);
    }
    let derived = overall(&verdicts);
    if errors.is_empty() && derived != r.overall {
        errors.push(ReportReplayError::Overall { stated: r.overall, derived });
    }
    if errors.is_empty() {
        Ok(derived)
    } else {
        Err(errors)
    }
}

/// Where Lyapunov candidates come from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CandidateSource {
    Annotation,
    /// `lyapunov [mode] : expr;` lines.
    File(String),
    Synthesize,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Model(String),
    #[error(transparent)]
    Vc(#[from] VcError),
    #[error("no Lyapunov candidate could be synthesized")]
    NoCandidate,
}

/// Adds `lyapunov` lines to a model, replacing existing annotations.
pub fn apply_candidates(m: &SwitchedModel, text: &str) -> Result<SwitchedModel, RunError> {
    let mut out = m.clone();
    let vars = m.all_vars();
    let mut per_mode = BTreeMap::new();
    let mut common = None;
    for stmt in text.split(';').map(str::trim).filter(|s| !s.is_empty() && !s.starts_with("//")) {
        let body = stmt
            .strip_prefix("lyapunov")
            .ok_or_else(|| RunError::Model(format!("expected `lyapunov`, found `{stmt}`")))?;
        let (head, expr) = body.split_once(':').ok_or_else(|| RunError::Model(format!("missing `:` in `{stmt}`")))?;
        let v = parse_expr(expr.trim(), &vars).map_err(|d| RunError::Model(d.to_string()))?;
        match head.trim() {
            "" => common = Some(v),
            mode if m.mode(mode).is_some() => {
                per_mode.insert(mode.to_string(), v);
            }
            mode => return Err(RunError::Model(format!("unknown mode `{mode}`"))),
        }
    }
    if common.is_some() || !per_mode.is_empty() {
        out.lyapunov = per_mode;
        out.common_lyapunov = common;
    }
    Ok(out)
}

pub fn with_candidates(m: &SwitchedModel, source: &CandidateSource) -> Result<SwitchedModel, RunError> {
    match source {
        CandidateSource::Annotation => Ok(m.clone()),
        CandidateSource::File(text) => apply_candidates(m, text),
        CandidateSource::Synthesize => {
            let mut out = m.clone();
            if let Some(a) = synth_multiple(m) {
                out.lyapunov = a.functions;
                out.common_lyapunov = None;
            } else if let Some(c) = synth_common_quadratic(m) {
                out.lyapunov = c;
                out.common_lyapunov = None;
            } else {
                return Err(RunError::NoCandidate);
            }
            Ok(out)
        }
    }
}

/// Generates and checks the premises of `rule` (default: by model kind).
pub fn verify(source: &str, rule: Option<Rule>, candidates: &CandidateSource, cfg: &CheckConfig) -> Result<Report, RunError> {
    let m = parse_model(source).map_err(|d| RunError::Model(d.to_string()))?;
    verify_model(&m, source, rule, candidates, cfg)
}

pub fn verify_model(
    m: &SwitchedModel,
    source: &str,
    rule: Option<Rule>,
    candidates: &CandidateSource,
    cfg: &CheckConfig,
) -> Result<Report, RunError> {
    let m = with_candidates(m, candidates)?;
    let rule = rule.unwrap_or_else(|| Rule::for_model(&m));
    let vcs = generate(&m, rule)?;
    let checked = check_all(&vcs, cfg);
    Ok(Report::build(&m, source, rule, &vcs, &checked, cfg))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub fixture: String,
    pub expected: String,
    pub actual: String,
    pub matches: bool,
    pub vcs: usize,
    pub millis: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchSummary {
    pub rows: Vec<BenchRow>,
    pub mismatches: usize,
}

impl BenchSummary {
    pub fn table(&self) -> String {
        let w = self.rows.iter().map(|r| r.fixture.len()).max().unwrap_or(7).max(7);
        let mut out = format!("{:w$}  {:15}  {:15}  {:>4}  {:>8}\n", "fixture", "expected", "actual", "vcs", "ms");
        for r in &self.rows {
            let mark = if r.matches { "" } else { "  MISMATCH" };
            out.push_str(&format!(
                "{:w$}  {:15}  {:15}  {:>4}  {:>8}{mark}\n",
                r.fixture, r.expected, r.actual, r.vcs, r.millis
            ));
        }
        out
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("cannot read corpus {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("corpus {0} has no fixtures with expectation files")]
    Empty(PathBuf),
    #[error("expectation {0} has no model file")]
    MissingFixture(PathBuf),
}

/// Runs every `<name>.ssm` that has a `<name>.expect` sidecar.
pub fn bench(dir: &Path, cfg: &CheckConfig) -> Result<BenchSummary, BenchError> {
    let entries = std::fs::read_dir(dir).map_err(|e| BenchError::Io(dir.to_path_buf(), e))?;
    let mut expects: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == "expect"))
        .collect();
    expects.sort();
    if expects.is_empty() {
        return Err(BenchError::Empty(dir.to_path_buf()));
    }
    let mut rows = Vec::new();
    for exp in expects {
        let model = exp.with_extension("ssm");
        if !model.is_file() {
            return Err(BenchError::MissingFixture(exp));
        }
        let expected = std::fs::read_to_string(&exp).map_err(|e| BenchError::Io(exp.clone(), e))?.trim().to_string();
        let source = std::fs::read_to_string(&model).map_err(|e| BenchError::Io(model.clone(), e))?;
        let t = Instant::now();
        let (actual, vcs) = match verify(&source, None, &CandidateSource::Annotation, cfg) {
            Ok(r) => (r.overall.label().to_string(), r.vcs.len()),
            Err(e) => (format!("error: {e}"), 0),
        };
        rows.push(BenchRow {
            fixture: model.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            matches: actual == expected,
            expected,
            actual,
            vcs,
            millis: t.elapsed().as_millis() as u64,
        });
    }
    let mismatches = rows.iter().filter(|r| !r.matches).count();
    Ok(BenchSummary { rows, mismatches })
}

/// Writes through a temporary sibling and renames.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}
