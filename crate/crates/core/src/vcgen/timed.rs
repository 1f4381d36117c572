use std::collections::BTreeMap;

use num::{Signed, Zero};

use crate::model::Mode;
use crate::rational::{format_rational, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Stability,
    Attractivity,
}

impl Family {
    pub fn tag(self) -> &'static str {
        match self {
            Family::Stability => "stability",
            Family::Attractivity => "attractivity",
        }
    }
}

/// Exponent `E` of the dwell condition `V_p e^E ≥ V_q` for a switch `p → q`
/// after at least `theta` time units in `p`. Modes with rate `<= 0` are
/// unstable and use their max dwell time.
pub fn dwell_exponent(
    fam: Family,
    lp: &Rational,
    lq: &Rational,
    theta: &Rational,
    max_p: Option<&Rational>,
    max_q: Option<&Rational>,
    sigma: &Rational,
) -> Rational {
    let q_term = if lq.is_positive() {
        Rational::zero()
    } else {
        lq * max_q.cloned().unwrap_or_else(Rational::zero)
    };
    let p_stable = lp.is_positive();
    let p_term = match (fam, p_stable) {
        (Family::Stability, true) => lp * theta,
        (Family::Stability, false) => Rational::zero(),
        (Family::Attractivity, true) => (lp - sigma) * theta,
        (Family::Attractivity, false) => -(sigma * max_p.cloned().unwrap_or_else(Rational::zero)),
    };
    p_term + q_term
}

/// Dwell premise before the worst-case dwell time is substituted.
pub(super) fn raw_premise(
    fam: Family,
    p: &Mode,
    q: &Mode,
    rates: &BTreeMap<String, Rational>,
    theta: &Rational,
    sigma: &Rational,
) -> String {
    let r = |m: &Mode| format_rational(&rates[&m.id]);
    let big = |m: &Mode| m.max_dwell.as_ref().map(format_rational).unwrap_or_else(|| "inf".into());
    let q_part = if rates[&q.id].is_positive() {
        String::new()
    } else {
        format!(" * exp({}*{})", r(q), big(q))
    };
    let p_part = match fam {
        Family::Stability => format!("exp({}*(tau - {}))", r(p), if rates[&p.id].is_positive() { "0".into() } else { big(p) }),
        Family::Attractivity => format!(
            "exp(-{s}*tau + {}*(tau - {}))",
            r(p),
            if rates[&p.id].is_positive() { "0".into() } else { big(p) },
            s = format_rational(sigma)
        ),
    };
    format!(
        "forall tau in [{}, {}]: V_{q} <= V_{p} * {p_part}{q_part}",
        format_rational(theta),
        big(p),
        p = p.id,
        q = q.id
    )
}
