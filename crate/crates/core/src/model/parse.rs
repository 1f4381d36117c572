//! Recursive-descent parser for `.ssm` model files.

use std::collections::BTreeMap;

use num::{Signed, ToPrimitive, Zero};

use super::ghost::{ghost_names, ghost_split};
use super::predicate::{Atom, Predicate};
use super::{Diagnostic, Diagnostics, Kind, Mode, Severity, SwitchedModel, Transition, TIMER};
use crate::poly::{var_list, Poly, VarList, VectorField};
use crate::rational::{parse_decimal, Rational};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    Sym(&'static str),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: &[&str] = &[
    "->", ":=", "<=", ">=", "==", "&&", "||", "{", "}", "(", ")", ";", ",", ":", "'", "+", "-",
    "*", "/", "^", "=", "<", ">", "&", "|", "!",
];

fn lex(text: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start_col = col;
        if c.is_ascii_alphabetic() || c == '_' {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - s;
            out.push(Token { tok: Tok::Ident(chars[s..i].iter().collect()), line, col: start_col });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            col += i - s;
            out.push(Token { tok: Tok::Num(chars[s..i].iter().collect()), line, col: start_col });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                i += s.len();
                col += s.len();
                out.push(Token { tok: Tok::Sym(s), line, col: start_col });
            }
            None => {
                return Err(diag("syntax", line, start_col, format!("unexpected character `{c}`")));
            }
        }
    }
    Ok(out)
}

fn diag(code: &'static str, line: usize, column: usize, message: String) -> Diagnostic {
    Diagnostic { severity: Severity::Error, code, line, column, message }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    vars: Vec<String>,
    consts: BTreeMap<String, Rational>,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn new(toks: Vec<Token>) -> Self {
        Parser { toks, pos: 0, vars: Vec::new(), consts: BTreeMap::new() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }


    fn loc(&self) -> (usize, usize) {
        match self.toks.get(self.pos).or(self.toks.last()) {
            Some(t) => (t.line, t.col),
            None => (1, 1),
        }
    }

    fn err<T>(&self, code: &'static str, msg: impl Into<String>) -> PResult<T> {
        let (l, c) = self.loc();
        Err(diag(code, l, c, msg.into()))
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(x)) if x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            let found = self.describe();
            self.err("syntax", format!("expected `{s}`, found {found}"))
        }
    }

    fn eat_kw(&mut self, s: &str) -> bool {
        if self.is_kw(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn describe(&self) -> String {
        match self.peek() {
            None => "end of input".into(),
            Some(Tok::Ident(s)) => format!("`{s}`"),
            Some(Tok::Num(s)) => format!("`{s}`"),
            Some(Tok::Sym(s)) => format!("`{s}`"),
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().cloned() {
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(s)
            }
            _ => {
                let found = self.describe();
                self.err("syntax", format!("expected identifier, found {found}"))
            }
        }
    }

    fn vl(&self) -> VarList {
        var_list(&self.vars)
    }

    // ---- expressions ----

    fn expr(&mut self) -> PResult<Poly> {
        let mut acc = self.term()?;
        loop {
            if self.eat_sym("+") {
                acc = &acc + &self.term()?;
            } else if self.eat_sym("-") {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> PResult<Poly> {
        let mut acc = self.unary()?;
        loop {
            if self.eat_sym("*") {
                acc = &acc * &self.unary()?;
            } else if self.is_sym("/") {
                self.pos += 1;
                let d = self.unary()?;
                if !d.is_constant() || d.constant_term().is_zero() {
                    return self.err("syntax", "division only by a nonzero constant");
                }
                acc = acc.scale(&d.constant_term().recip());
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> PResult<Poly> {
        if self.eat_sym("-") {
            return Ok(-&self.unary()?);
        }
        if self.eat_sym("+") {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> PResult<Poly> {
        let base = self.atom()?;
        if self.eat_sym("^") {
            let e = self.atom()?;
            let k = e
                .is_constant()
                .then(|| e.constant_term())
                .filter(|r| r.is_integer() && !r.is_negative())
                .and_then(|r| r.to_integer().to_u32());
            return match k {
                Some(k) => Ok(base.pow(k)),
                None => self.err("syntax", "exponent must be a nonnegative integer constant"),
            };
        }
        Ok(base)
    }

    fn atom(&mut self) -> PResult<Poly> {
        match self.peek().cloned() {
            Some(Tok::Num(s)) => {
                let v = match parse_decimal(&s) {
                    Some(v) => v,
                    None => return self.err("syntax", format!("malformed number `{s}`")),
                };
                self.pos += 1;
                Ok(Poly::constant(self.vl(), v))
            }
            Some(Tok::Ident(s)) => {
                if let Some(c) = self.consts.get(&s) {
                    let c = c.clone();
                    self.pos += 1;
                    return Ok(Poly::constant(self.vl(), c));
                }
                if self.vars.contains(&s) {
                    self.pos += 1;
                    return Ok(Poly::var(self.vl(), &s));
                }
                self.err("unknown-variable", format!("unknown variable `{s}`"))
            }
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            _ => {
                let found = self.describe();
                self.err("syntax", format!("expected expression, found {found}"))
            }
        }
    }

    fn constant_expr(&mut self) -> PResult<Rational> {
        let e = self.expr()?;
        if !e.is_constant() {
            return self.err("syntax", "expected a constant expression");
        }
        Ok(e.constant_term())
    }

    // ---- predicates ----

    fn pred(&mut self) -> PResult<Predicate> {
        let lhs = self.disj()?;
        if self.eat_sym("->") {
            let rhs = self.pred()?;
            return Ok(lhs.implies(&rhs));
        }
        Ok(lhs)
    }

    fn disj(&mut self) -> PResult<Predicate> {
        let mut acc = self.conj()?;
        while self.eat_sym("|") || self.eat_sym("||") {
            acc = acc.or(&self.conj()?);
        }
        Ok(acc)
    }

    fn conj(&mut self) -> PResult<Predicate> {
        let mut acc = self.neg()?;
        while self.eat_sym("&") || self.eat_sym("&&") {
            acc = acc.and(&self.neg()?);
        }
        Ok(acc)
    }

    fn neg(&mut self) -> PResult<Predicate> {
        if self.eat_sym("!") {
            return Ok(self.neg()?.not());
        }
        self.prim()
    }

    fn prim(&mut self) -> PResult<Predicate> {
        if self.eat_kw("true") {
            return Ok(Predicate::truth());
        }
        if self.eat_kw("false") {
            return Ok(Predicate::falsity());
        }
        if self.is_sym("(") {
            let save = self.pos;
            self.pos += 1;
            if let Ok(p) = self.pred() {
                if self.eat_sym(")") && !self.at_cmp_or_arith() {
                    return Ok(p);
                }
            }
            self.pos = save;
        }
        self.comparison()
    }

    fn at_cmp_or_arith(&self) -> bool {
        matches!(
            self.peek(),
            Some(Tok::Sym("<" | "<=" | ">" | ">=" | "=" | "==" | "+" | "-" | "*" | "/" | "^"))
        )
    }

    fn cmp_op(&mut self) -> Option<&'static str> {
        match self.peek() {
            Some(Tok::Sym(s @ ("<" | "<=" | ">" | ">=" | "=" | "=="))) => {
                let s = *s;
                self.pos += 1;
                Some(s)
            }
            _ => None,
        }
    }

    fn comparison(&mut self) -> PResult<Predicate> {
        let mut lhs = self.expr()?;
        let mut acc = Predicate::truth();
        let mut any = false;
        while let Some(op) = self.cmp_op() {
            let rhs = self.expr()?;
            let d = &lhs - &rhs;
            let atom = match op {
                "<" => Atom::lt(d),
                "<=" => Atom::le(d),
                ">" => Atom::gt(d),
                ">=" => Atom::ge(d),
                _ => Atom::eq(d),
            };
            acc = acc.and(&Predicate::atom(atom));
            lhs = rhs;
            any = true;
        }
        if !any {
            return self.err("syntax", "expected comparison operator");
        }
        Ok(acc)
    }
}

#[derive(Default)]
struct Draft {
    name: String,
    kind: Option<Kind>,
    state: Vec<String>,
    aux: Vec<String>,
    consts: Vec<(String, Rational)>,
    modes: Vec<Mode>,
    transitions: Vec<(Transition, (usize, usize))>,
    lyapunov: Vec<(Option<String>, Poly, (usize, usize))>,
    rates: Vec<(String, Rational, (usize, usize))>,
    sigma: Option<Rational>,
    region: Option<Predicate>,
    ghosts: Vec<(String, Poly, (usize, usize))>,
}

/// Parses a `.ssm` model, reporting the first syntax error or all
/// resolution errors.
pub fn parse_model(text: &str) -> Result<SwitchedModel, Diagnostics> {
    let toks = lex(text).map_err(|d| Diagnostics(vec![d]))?;
    let mut p = Parser::new(toks);
    let draft = parse_system(&mut p).map_err(|d| Diagnostics(vec![d]))?;
    resolve(draft, &p.vars)
}

fn parse_system(p: &mut Parser) -> PResult<Draft> {
    let mut d = Draft::default();
    if !p.eat_kw("system") {
        return p.err("syntax", "expected `system`");
    }
    d.name = p.ident()?;
    p.expect_sym("{")?;
    while !p.eat_sym("}") {
        if p.peek().is_none() {
            return p.err("syntax", "unterminated system block");
        }
        let (line, col) = p.loc();
        let kw = p.ident()?;
        match kw.as_str() {
            "const" => {
                let name = p.ident()?;
                p.expect_sym("=")?;
                let v = p.constant_expr()?;
                p.consts.insert(name.clone(), v.clone());
                d.consts.push((name, v));
                p.expect_sym(";")?;
            }
            "var" | "aux" => {
                loop {
                    let name = p.ident()?;
                    if p.vars.contains(&name) || p.consts.contains_key(&name) {
                        return Err(diag("duplicate-variable", line, col, format!("`{name}` declared twice")));
                    }
                    p.vars.push(name.clone());
                    if kw == "var" {
                        d.state.push(name);
                    } else {
                        d.aux.push(name);
                    }
                    if !p.eat_sym(",") {
                        break;
                    }
                }
                p.expect_sym(";")?;
            }
            "kind" => {
                let k = p.ident()?;
                match Kind::from_keyword(&k) {
                    Some(kind) => d.kind = Some(kind),
                    None => return Err(diag("syntax", line, col, format!("unknown kind `{k}`"))),
                }
                if d.kind == Some(Kind::Timed) && !p.vars.iter().any(|v| v == TIMER) {
                    p.vars.push(TIMER.to_string());
                }
                p.expect_sym(";")?;
            }
            "mode" => {
                let m = parse_mode(p)?;
                if d.modes.iter().any(|x| x.id == m.id) {
                    return Err(diag("duplicate-mode", line, col, format!("duplicate mode `{}`", m.id)));
                }
                d.modes.push(m);
                p.eat_sym(";");
            }
            "transition" => {
                let t = parse_transition(p)?;
                d.transitions.push((t, (line, col)));
            }
            "lyapunov" => {
                let mode = if p.eat_sym(":") {
                    None
                } else {
                    let m = p.ident()?;
                    p.expect_sym(":")?;
                    Some(m)
                };
                let v = p.expr()?;
                d.lyapunov.push((mode, v, (line, col)));
                p.expect_sym(";")?;
            }
            "rate" => {
                let m = p.ident()?;
                p.expect_sym(":")?;
                let r = p.constant_expr()?;
                d.rates.push((m, r, (line, col)));
                p.expect_sym(";")?;
            }
            "sigma" => {
                d.sigma = Some(p.constant_expr()?);
                p.expect_sym(";")?;
            }
            "region" => {
                d.region = Some(p.pred()?);
                p.expect_sym(";")?;
            }
            "ghost" => {
                let m = p.ident()?;
                if !p.eat_kw("by") {
                    return p.err("syntax", "expected `by`");
                }
                let s = p.expr()?;
                d.ghosts.push((m, s, (line, col)));
                p.expect_sym(";")?;
            }
            other => return Err(diag("syntax", line, col, format!("unknown declaration `{other}`"))),
        }
    }
    if p.peek().is_some() {
        return p.err("syntax", "trailing input after system block");
    }
    Ok(d)
}

fn parse_mode(p: &mut Parser) -> PResult<Mode> {
    let id = p.ident()?;
    p.expect_sym("{")?;
    let mut rhs: Vec<(String, Poly)> = Vec::new();
    let mut domain = Predicate::truth();
    let mut max_dwell = None;
    while !p.eat_sym("}") {
        if p.eat_kw("ode") {
            p.expect_sym("{")?;
            while !p.eat_sym("}") {
                let (line, col) = p.loc();
                let v = p.ident()?;
                if !p.vars.contains(&v) {
                    return Err(diag("unknown-variable", line, col, format!("unknown variable `{v}`")));
                }
                p.expect_sym("'")?;
                p.expect_sym("=")?;
                let e = p.expr()?;
                if rhs.iter().any(|(w, _)| *w == v) {
                    return Err(diag("syntax", line, col, format!("two equations for `{v}'`")));
                }
                rhs.push((v, e));
                if !p.eat_sym(";") && !p.eat_sym(",") && !p.is_sym("}") {
                    return p.err("syntax", "expected `;` or `}` after equation");
                }
            }
        } else if p.eat_kw("domain") {
            domain = p.pred()?;
        } else if p.eat_kw("maxdwell") {
            max_dwell = Some(p.constant_expr()?);
        } else if p.eat_sym(";") {
        } else {
            let found = p.describe();
            return p.err("syntax", format!("expected `ode`, `domain` or `maxdwell`, found {found}"));
        }
    }
    Ok(Mode { id, field: VectorField::new(rhs), domain, max_dwell })
}

fn parse_transition(p: &mut Parser) -> PResult<Transition> {
    let from = p.ident()?;
    p.expect_sym("->")?;
    let to = p.ident()?;
    let mut guard = Predicate::truth();
    let mut reset = Vec::new();
    let mut min_dwell = None;
    while !p.eat_sym(";") {
        if p.eat_kw("when") {
            guard = p.pred()?;
        } else if p.eat_kw("reset") {
            loop {
                let (line, col) = p.loc();
                let v = p.ident()?;
                if !p.vars.contains(&v) {
                    return Err(diag("unknown-variable", line, col, format!("unknown variable `{v}`")));
                }
                p.expect_sym(":=")?;
                let e = p.expr()?;
                reset.push((v, e));
                if !p.eat_sym(",") {
                    break;
                }
            }
        } else if p.eat_kw("mindwell") {
            min_dwell = Some(p.constant_expr()?);
        } else {
            let found = p.describe();
            return p.err("syntax", format!("expected `when`, `reset`, `mindwell` or `;`, found {found}"));
        }
    }
    Ok(Transition { from, to, guard, reset, min_dwell })
}

fn embed(p: &Poly, vars: &VarList) -> Poly {
    p.with_vars(vars).expect("parser only builds polynomials over declared variables")
}

fn embed_pred(q: &Predicate, vars: &VarList) -> Predicate {
    q.map_polys(|p| embed(p, vars))
}

fn resolve(d: Draft, declared: &[String]) -> Result<SwitchedModel, Diagnostics> {
    let mut diags = Diagnostics::default();
    let Some(kind) = d.kind else {
        diags.error("missing-kind", "missing `kind` declaration");
        return Err(diags);
    };
    if d.modes.is_empty() {
        diags.error("no-modes", "at least one mode required");
        return Err(diags);
    }
    let vars = var_list(declared);
    let modes: Vec<Mode> = d
        .modes
        .into_iter()
        .map(|m| Mode {
            field: VectorField::new(
                m.field.entries().iter().map(|(v, e)| (v.clone(), embed(e, &vars))).collect(),
            ),
            domain: embed_pred(&m.domain, &vars),
            ..m
        })
        .collect();
    let mut model = SwitchedModel {
        name: d.name,
        kind,
        state_vars: d.state,
        aux_vars: d.aux,
        constants: d.consts,
        modes,
        transitions: Vec::new(),
        lyapunov: BTreeMap::new(),
        common_lyapunov: None,
        rates: BTreeMap::new(),
        sigma: d.sigma,
        region: d.region.map(|r| embed_pred(&r, &vars)),
    };
    for (id, s, (line, col)) in &d.ghosts {
        match ghost_split(&model, id, &embed(s, &vars)) {
            Ok(m) => model = m,
            Err(e) => diags.error_at("unknown-mode", *line, *col, e.to_string()),
        }
    }
    for (t, (line, col)) in d.transitions {
        for end in [&t.from, &t.to] {
            if model.mode(end).is_none() {
                diags.error_at("unknown-mode", line, col, format!("transition endpoint `{end}` is not a mode"));
            }
        }
        model.transitions.push(Transition {
            guard: embed_pred(&t.guard, &vars),
            reset: t.reset.iter().map(|(v, e)| (v.clone(), embed(e, &vars))).collect(),
            ..t
        });
    }
    for (mode, v, (line, col)) in d.lyapunov {
        let v = embed(&v, &vars);
        match mode {
            None => model.common_lyapunov = Some(v),
            Some(m) if model.mode(&m).is_some() => {
                model.lyapunov.insert(m, v);
            }
            Some(m) => {
                // An annotation on a ghost-split mode applies to both halves.
                let halves = ghost_names(&m);
                if halves.iter().all(|h| model.mode(h).is_some()) {
                    for h in halves {
                        model.lyapunov.insert(h, v.clone());
                    }
                } else {
                    diags.error_at("unknown-mode", line, col, format!("lyapunov annotation for unknown mode `{m}`"));
                }
            }
        }
    }
    for (m, r, (line, col)) in d.rates {
        if model.mode(&m).is_none() {
            diags.error_at("unknown-mode", line, col, format!("rate annotation for unknown mode `{m}`"));
        }
        model.rates.insert(m, r);
    }
    if diags.is_empty() {
        Ok(model)
    } else {
        Err(diags)
    }
}


/// Parses a standalone predicate over the given variables.
pub fn parse_predicate(text: &str, vars: &[String]) -> Result<Predicate, Diagnostics> {
    let toks = lex(text).map_err(|d| Diagnostics(vec![d]))?;
    let mut p = Parser::new(toks);
    p.vars = vars.to_vec();
    let q = p.pred().map_err(|d| Diagnostics(vec![d]))?;
    if p.peek().is_some() {
        return Err(Diagnostics(vec![p.err::<()>("syntax", "trailing input").unwrap_err()]));
    }
    Ok(embed_pred(&q, &var_list(vars)))
}

/// Parses a standalone polynomial expression over the given variables.
pub fn parse_expr(text: &str, vars: &[String]) -> Result<Poly, Diagnostics> {
    let toks = lex(text).map_err(|d| Diagnostics(vec![d]))?;
    let mut p = Parser::new(toks);
    p.vars = vars.to_vec();
    let e = p.expr().map_err(|d| Diagnostics(vec![d]))?;
    if p.peek().is_some() {
        return Err(Diagnostics(vec![p.err::<()>("syntax", "trailing input").unwrap_err()]));
    }
    Ok(embed(&e, &var_list(vars)))
}
