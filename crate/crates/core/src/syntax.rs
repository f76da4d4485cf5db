//! LE-signatures, formulas and sequents, with their concrete syntax.
//!
//! Formula grammar (ASCII):
//!
//! ```text
//! formula := conj ( "\/" conj )*
//! conj    := unary ( "/\" unary )*
//! unary   := "top" | "bot" | ident | "(" formula ")"
//!          | conn unary                      -- unary connective
//!          | conn "(" formula ("," formula)* ")"
//!          | conn                            -- nullary connective
//! sequent := formula "|-" formula
//! ```
//!
//! Prefix connectives bind tighter than `/\`, which binds tighter than `\/`.
//! Both binary operators associate to the left.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which family a connective belongs to. `F`-connectives preserve finite
/// joins in their positive coordinates, `G`-connectives preserve meets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    F,
    G,
}

/// One entry of an order type: `1` (monotone) or `∂` (antitone).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variance {
    One,
    Partial,
}

impl Variance {
    pub fn as_str(self) -> &'static str {
        match self {
            Variance::One => "1",
            Variance::Partial => "d",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "1" | "one" => Some(Variance::One),
            "d" | "∂" | "partial" | "delta" => Some(Variance::Partial),
            _ => None,
        }
    }
}

impl Serialize for Variance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Variance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Variance::parse(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown order-type entry `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Connective {
    pub name: String,
    pub family: Family,
    pub arity: usize,
    pub order_type: Vec<Variance>,
}

impl Connective {
    pub fn new(name: &str, family: Family, order_type: Vec<Variance>) -> Self {
        Connective {
            name: name.to_string(),
            family,
            arity: order_type.len(),
            order_type,
        }
    }
}

/// An LE-similarity type.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Signature {
    pub connectives: Vec<Connective>,
}

impl Signature {
    /// Validates the invariants and builds the signature.
    pub fn new(connectives: Vec<Connective>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for c in &connectives {
            if !is_identifier(&c.name) || is_reserved(&c.name) {
                return Err(Error::Signature(format!(
                    "`{}` is not a usable connective name",
                    c.name
                )));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Signature(format!("duplicate connective `{}`", c.name)));
            }
            if c.order_type.len() != c.arity {
                return Err(Error::Signature(format!(
                    "connective `{}` has arity {} but an order type of length {}",
                    c.name,
                    c.arity,
                    c.order_type.len()
                )));
            }
        }
        Ok(Signature { connectives })
    }

    /// The signature with a single unary, monotone `G`-connective `box`.
    pub fn box_only() -> Self {
        Signature {
            connectives: vec![Connective::new("box", Family::G, vec![Variance::One])],
        }
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.connectives.iter().position(|c| c.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&Connective> {
        self.connectives.iter().find(|c| c.name == name)
    }
}

/// Parses the JSON signature format, reporting errors with line and column.
pub fn parse_signature(text: &str) -> Result<Signature> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| json_error(&e))?;
    signature_from_value(&value, text)
}

pub(crate) fn json_error(e: &serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

pub(crate) fn signature_from_value(value: &serde_json::Value, text: &str) -> Result<Signature> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Raw {
        connectives: Vec<RawConnective>,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct RawConnective {
        name: String,
        family: Family,
        arity: usize,
        order_type: Vec<Variance>,
    }

    let raw: Raw = serde_json::from_value(value.clone()).map_err(|e| Error::Parse {
        line: 1,
        column: 1,
        message: format!("signature: {e}"),
    })?;
    let connectives: Vec<Connective> = raw
        .connectives
        .into_iter()
        .map(|c| Connective {
            name: c.name,
            family: c.family,
            arity: c.arity,
            order_type: c.order_type,
        })
        .collect();

    // Semantic errors are located at the offending name literal.
    let mut seen = BTreeSet::new();
    for c in &connectives {
        let occurrence = if seen.insert(c.name.clone()) { 0 } else { 1 };
        if let Err(e) = Signature::new(vec![c.clone()]).and_then(|_| {
            if occurrence == 1 {
                Err(Error::Signature(format!("duplicate connective `{}`", c.name)))
            } else {
                Ok(())
            }
        }) {
            let offset = find_string_literal(text, &c.name, occurrence).unwrap_or(0);
            return Err(Error::parse_at(text, offset, e.to_string()));
        }
    }
    Signature::new(connectives)
}

fn find_string_literal(text: &str, value: &str, occurrence: usize) -> Option<usize> {
    let needle = serde_json::to_string(value).ok()?;
    text.match_indices(&needle).nth(occurrence).map(|(i, _)| i)
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

fn is_reserved(s: &str) -> bool {
    matches!(s, "top" | "bot")
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Prop(String),
    Top,
    Bot,
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Conn(String, Vec<Formula>),
}

impl Formula {
    pub fn prop(name: &str) -> Self {
        Formula::Prop(name.to_string())
    }

    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn conn(name: &str, args: Vec<Formula>) -> Self {
        Formula::Conn(name.to_string(), args)
    }

    /// Tree height, counting a leaf as depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Prop(_) | Formula::Top | Formula::Bot => 1,
            Formula::And(l, r) | Formula::Or(l, r) => 1 + l.depth().max(r.depth()),
            Formula::Conn(_, args) => 1 + args.iter().map(Formula::depth).max().unwrap_or(0),
        }
    }

    /// Proposition names, sorted.
    pub fn props(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_props(&mut out);
        out
    }

    fn collect_props(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Prop(p) => {
                out.insert(p.clone());
            }
            Formula::Top | Formula::Bot => {}
            Formula::And(l, r) | Formula::Or(l, r) => {
                l.collect_props(out);
                r.collect_props(out);
            }
            Formula::Conn(_, args) => args.iter().for_each(|a| a.collect_props(out)),
        }
    }

    /// Checks every connective node against `sig`.
    pub fn check(&self, sig: &Signature) -> Result<()> {
        match self {
            Formula::Prop(p) => {
                if sig.get(p).is_some() || is_reserved(p) || !is_identifier(p) {
                    return Err(Error::Formula(format!("`{p}` cannot name a proposition")));
                }
                Ok(())
            }
            Formula::Top | Formula::Bot => Ok(()),
            Formula::And(l, r) | Formula::Or(l, r) => {
                l.check(sig)?;
                r.check(sig)
            }
            Formula::Conn(name, args) => {
                let c = sig.get(name).ok_or_else(|| Error::UnknownName {
                    kind: "connective",
                    name: name.clone(),
                })?;
                if c.arity != args.len() {
                    return Err(Error::Formula(format!(
                        "`{name}` takes {} argument(s), got {}",
                        c.arity,
                        args.len()
                    )));
                }
                args.iter().try_for_each(|a| a.check(sig))
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Levels: 0 = disjunction, 1 = conjunction, 2 = prefix/atomic.
        fn level(phi: &Formula) -> u8 {
            match phi {
                Formula::Or(..) => 0,
                Formula::And(..) => 1,
                _ => 2,
            }
        }
        fn write(phi: &Formula, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            if level(phi) < min {
                write!(f, "(")?;
                write(phi, 0, f)?;
                return write!(f, ")");
            }
            match phi {
                Formula::Prop(p) => write!(f, "{p}"),
                Formula::Top => write!(f, "top"),
                Formula::Bot => write!(f, "bot"),
                Formula::Or(l, r) => {
                    write(l, 0, f)?;
                    write!(f, " \\/ ")?;
                    write(r, 1, f)
                }
                Formula::And(l, r) => {
                    write(l, 1, f)?;
                    write!(f, " /\\ ")?;
                    write(r, 2, f)
                }
                Formula::Conn(name, args) if args.len() == 1 => {
                    write!(f, "{name} ")?;
                    write(&args[0], 2, f)
                }
                Formula::Conn(name, args) if args.is_empty() => write!(f, "{name}"),
                Formula::Conn(name, args) => {
                    write!(f, "{name}(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write(a, 0, f)?;
                    }
                    write!(f, ")")
                }
            }
        }
        write(self, 0, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequent {
    pub lhs: Formula,
    pub rhs: Formula,
}

impl Sequent {
    pub fn new(lhs: Formula, rhs: Formula) -> Self {
        Sequent { lhs, rhs }
    }

    pub fn props(&self) -> BTreeSet<String> {
        let mut p = self.lhs.props();
        p.extend(self.rhs.props());
        p
    }

    pub fn depth(&self) -> usize {
        self.lhs.depth().max(self.rhs.depth())
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} |- {}", self.lhs, self.rhs)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    And,
    Or,
    LParen,
    RParen,
    Comma,
    Turnstile,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>> {
    let mut out = Vec::new();
    let mut it = text.char_indices().peekable();
    while let Some(&(i, c)) = it.peek() {
        match c {
            c if c.is_whitespace() => {
                it.next();
            }
            '(' => {
                it.next();
                out.push((Tok::LParen, i));
            }
            ')' => {
                it.next();
                out.push((Tok::RParen, i));
            }
            ',' => {
                it.next();
                out.push((Tok::Comma, i));
            }
            '∧' => {
                it.next();
                out.push((Tok::And, i));
            }
            '∨' => {
                it.next();
                out.push((Tok::Or, i));
            }
            '⊢' => {
                it.next();
                out.push((Tok::Turnstile, i));
            }
            '⊤' => {
                it.next();
                out.push((Tok::Ident("top".into()), i));
            }
            '⊥' => {
                it.next();
                out.push((Tok::Ident("bot".into()), i));
            }
            '/' | '\\' | '|' => {
                it.next();
                let next = it.peek().map(|&(_, c)| c);
                let tok = match (c, next) {
                    ('/', Some('\\')) => Tok::And,
                    ('\\', Some('/')) => Tok::Or,
                    ('|', Some('-')) => Tok::Turnstile,
                    _ => return Err(Error::parse_at(text, i, format!("unexpected `{c}`"))),
                };
                it.next();
                out.push((tok, i));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                let mut end = i;
                while let Some(&(j, d)) = it.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' || d == '\'' {
                        end = j + d.len_utf8();
                        it.next();
                    } else {
                        break;
                    }
                }
                out.push((Tok::Ident(text[start..end].to_string()), start));
            }
            other => return Err(Error::parse_at(text, i, format!("unexpected `{other}`"))),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    text: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    sig: &'a Signature,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks
            .get(self.pos)
            .map_or(self.text.len(), |&(_, off)| off)
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse_at(self.text, self.offset(), msg)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn formula(&mut self) -> Result<Formula> {
        let mut lhs = self.conj()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            let rhs = self.conj()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> Result<Formula> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula> {
        let start = self.offset();
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "top" => return Ok(Formula::Top),
                    "bot" => return Ok(Formula::Bot),
                    _ => {}
                }
                let Some(conn) = self.sig.get(&name) else {
                    if self.peek() == Some(&Tok::LParen) {
                        return Err(Error::parse_at(
                            self.text,
                            start,
                            format!("unknown connective `{name}`"),
                        ));
                    }
                    return Ok(Formula::Prop(name));
                };
                let arity = conn.arity;
                if self.peek() == Some(&Tok::LParen) {
                    self.pos += 1;
                    let mut args = Vec::new();
                    if self.peek() != Some(&Tok::RParen) {
                        args.push(self.formula()?);
                        while self.peek() == Some(&Tok::Comma) {
                            self.pos += 1;
                            args.push(self.formula()?);
                        }
                    }
                    self.expect(Tok::RParen, "`,` or `)`")?;
                    if args.len() != arity {
                        return Err(Error::parse_at(
                            self.text,
                            start,
                            format!(
                                "arity mismatch: `{name}` takes {arity} argument(s), got {}",
                                args.len()
                            ),
                        ));
                    }
                    Ok(Formula::Conn(name, args))
                } else {
                    match arity {
                        0 => Ok(Formula::Conn(name, vec![])),
                        1 => Ok(Formula::Conn(name, vec![self.unary()?])),
                        _ => Err(Error::parse_at(
                            self.text,
                            start,
                            format!("arity mismatch: `{name}` takes {arity} arguments in parentheses"),
                        )),
                    }
                }
            }
            Some(_) => Err(self.err("expected a formula")),
            None => Err(self.err("unexpected end of input")),
        }
    }
}

fn parse_tokens<'a>(text: &'a str, toks: Vec<(Tok, usize)>, sig: &'a Signature) -> Result<Formula> {
    let mut p = Parser {
        text,
        toks,
        pos: 0,
        sig,
    };
    let phi = p.formula()?;
    if p.pos != p.toks.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(phi)
}

pub fn parse_formula(text: &str, sig: &Signature) -> Result<Formula> {
    let toks = tokenize(text)?;
    if let Some((_, off)) = toks.iter().find(|(t, _)| *t == Tok::Turnstile) {
        return Err(Error::parse_at(text, *off, "unexpected `|-` in a formula"));
    }
    parse_tokens(text, toks, sig)
}

pub fn parse_sequent(text: &str, sig: &Signature) -> Result<Sequent> {
    let toks = tokenize(text)?;
    let turnstiles: Vec<usize> = toks
        .iter()
        .enumerate()
        .filter(|(_, (t, _))| *t == Tok::Turnstile)
        .map(|(i, _)| i)
        .collect();
    match turnstiles.as_slice() {
        [] => Err(Error::parse_at(text, text.len(), "missing `|-`")),
        [k] => {
            let k = *k;
            let mut lhs_toks = toks;
            let rhs_toks = lhs_toks.split_off(k + 1);
            lhs_toks.pop();
            let lhs = parse_tokens(text, lhs_toks, sig)?;
            let rhs = parse_tokens(text, rhs_toks, sig)?;
            Ok(Sequent { lhs, rhs })
        }
        [_, second, ..] => Err(Error::parse_at(text, toks[*second].1, "more than one `|-`")),
    }
}
