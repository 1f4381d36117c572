use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::expo::ExpBound;
use crate::rational::{serde_rational, Rational};

/// An SOS multiplier `zᵀ G z` attached to a constraint `g ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SosMultiplier {
    /// The constraint polynomial (an atom of the hypothesis or a product of two).
    pub constraint: String,
    pub basis: Vec<Vec<u32>>,
    #[serde(with = "serde_rational::matrix")]
    pub gram: Vec<Vec<Rational>>,
}

/// A free polynomial multiplier attached to a constraint `h = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EqMultiplier {
    pub constraint: String,
    pub multiplier: String,
}

/// `scale·target − ε·(Σ norm_vars²)^norm_power − Σ σᵢ gᵢ − Σ λⱼ hⱼ = zᵀ Q z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SosCertificate {
    pub vars: Vec<String>,
    pub target: String,
    #[serde(with = "serde_rational")]
    pub scale: Rational,
    #[serde(with = "serde_rational")]
    pub epsilon: Rational,
    pub norm_vars: Vec<String>,
    pub norm_power: u32,
    pub basis: Vec<Vec<u32>>,
    #[serde(with = "serde_rational::matrix")]
    pub gram: Vec<Vec<Rational>>,
    pub multipliers: Vec<SosMultiplier>,
    pub equalities: Vec<EqMultiplier>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InvarianceMethod {
    Darboux,
    Barrier,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    /// Quadratic form `xᵀ Q x` with `Q = L D Lᵀ`.
    PdFactorization {
        vars: Vec<String>,
        #[serde(with = "serde_rational::matrix")]
        l: Vec<Vec<Rational>>,
        #[serde(with = "serde_rational::vec")]
        d: Vec<Rational>,
        strict: bool,
    },
    SosDecomposition(SosCertificate),
    /// Every exponential replaced by its lower enclosure; each coefficient
    /// polynomial certified nonnegative.
    ExpComparison {
        bounds: Vec<ExpBound>,
        /// `lower` or `upper` per bound.
        directions: Vec<String>,
        coefficients: Vec<Certificate>,
        main: Box<Certificate>,
    },
    /// The hypothesis is unsatisfiable.
    Vacuous,
    /// Exact evaluation at the origin.
    Evaluation {
        point: BTreeMap<String, String>,
        #[serde(with = "serde_rational")]
        value: Rational,
    },
    /// Radial unboundedness from a positive definite top-degree part.
    Radial { degree: u32, top: Box<Certificate> },
    /// Set invariance by the Darboux or barrier condition.
    Invariance { method: InvarianceMethod, cofactor: Option<String>, proof: Box<Certificate> },
    /// One certificate per disjunct of the hypothesis.
    Cases { cases: Vec<Certificate> },
}

impl Certificate {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Certificate::PdFactorization { .. } => "pd-factorization",
            Certificate::SosDecomposition(_) => "sos-decomposition",
            Certificate::ExpComparison { .. } => "exp-comparison",
            Certificate::Vacuous => "vacuous",
            Certificate::Evaluation { .. } => "evaluation",
            Certificate::Radial { .. } => "radial",
            Certificate::Invariance { .. } => "invariance",
            Certificate::Cases { .. } => "cases",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub vc: String,
    #[serde(with = "serde_rational::map")]
    pub point: BTreeMap<String, Rational>,
    /// Conclusion value, or an enclosure `[lo, hi]` when exponentials occur.
    #[serde(with = "serde_rational::vec")]
    pub value: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Verdict {
    Proved { certificate: Certificate },
    Refuted { counterexample: Counterexample },
    Inconclusive { reason: String },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Proved { .. } => "Proved",
            Verdict::Refuted { .. } => "Refuted",
            Verdict::Inconclusive { .. } => "Inconclusive",
        }
    }

    pub fn is_proved(&self) -> bool {
        matches!(self, Verdict::Proved { .. })
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, Verdict::Refuted { .. })
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            Verdict::Proved { certificate } => Some(certificate),
            _ => None,
        }
    }

    pub fn counterexample(&self) -> Option<&Counterexample> {
        match self {
            Verdict::Refuted { counterexample } => Some(counterexample),
            _ => None,
        }
    }

    pub fn inconclusive(reason: impl Into<String>) -> Verdict {
        Verdict::Inconclusive { reason: reason.into() }
    }
}
