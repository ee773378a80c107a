//! Symbolic concept terms, the text syntax they are written in, and
//! unification.
//!
//! Concepts are parenthesized prefix terms: `(ipt-lovers me debra)`.
//! Symbols are case-insensitive and stored lowercase, variables start with
//! `?`, and double-quoted atoms keep their case (used for names and
//! templates). A slot may carry an explicit role written `:role filler`;
//! unlabeled slots are positional.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::ParseError;

/// Interned-ish symbol. Cheap to clone.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(s: &str) -> Self {
        Symbol(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

/// A slot filler: atom, variable, or nested concept.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Term {
    Atom(Symbol),
    Var(Symbol),
    Concept(Concept),
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Slot {
    pub role: Option<Symbol>,
    pub filler: Term,
}

/// Role-slotted symbolic assertion.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Concept {
    head: Symbol,
    slots: Vec<Slot>,
}

pub type Bindings = BTreeMap<Symbol, Term>;

impl Term {
    pub fn atom(s: &str) -> Term {
        Term::Atom(Symbol::new(s))
    }

    pub fn var(s: &str) -> Term {
        Term::Var(Symbol::new(s))
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Atom(_) => true,
            Term::Var(_) => false,
            Term::Concept(c) => c.is_ground(),
        }
    }

    pub fn as_atom(&self) -> Option<&Symbol> {
        match self {
            Term::Atom(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_concept(&self) -> Option<&Concept> {
        match self {
            Term::Concept(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        self.as_atom().and_then(|s| s.as_str().parse().ok())
    }

    /// Apply a substitution, chasing chains of variable bindings.
    pub fn substitute(&self, b: &Bindings) -> Term {
        match self {
            Term::Atom(_) => self.clone(),
            Term::Var(v) => match b.get(v) {
                Some(t) if t != self => t.substitute(b),
                _ => self.clone(),
            },
            Term::Concept(c) => Term::Concept(c.substitute(b)),
        }
    }

    fn collect_vars(&self, out: &mut Vec<Symbol>) {
        match self {
            Term::Atom(_) => {}
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone())
                }
            }
            Term::Concept(c) => {
                for s in &c.slots {
                    s.filler.collect_vars(out);
                }
            }
        }
    }

    fn collect_atoms(&self, out: &mut Vec<Symbol>) {
        match self {
            Term::Atom(a) => {
                if !out.contains(a) {
                    out.push(a.clone())
                }
            }
            Term::Var(_) => {}
            Term::Concept(c) => {
                for s in &c.slots {
                    s.filler.collect_atoms(out);
                }
            }
        }
    }

    fn occurs(&self, v: &Symbol, b: &Bindings) -> bool {
        match self {
            Term::Atom(_) => false,
            Term::Var(w) => {
                if w == v {
                    return true;
                }
                match b.get(w) {
                    Some(t) => t.occurs(v, b),
                    None => false,
                }
            }
            Term::Concept(c) => c.slots.iter().any(|s| s.filler.occurs(v, b)),
        }
    }
}

impl Concept {
    /// Build a concept with positional slots.
    ///
    /// Panics if `head` is empty.
    pub fn new(head: &str, args: Vec<Term>) -> Concept {
        assert!(!head.is_empty(), "concept head must be nonempty");
        Concept {
            head: Symbol::new(&head.to_ascii_lowercase()),
            slots: args.into_iter().map(|filler| Slot { role: None, filler }).collect(),
        }
    }

    pub fn with_slots(head: Symbol, slots: Vec<Slot>) -> Concept {
        assert!(!head.as_str().is_empty(), "concept head must be nonempty");
        Concept { head, slots }
    }

    pub fn head(&self) -> &Symbol {
        &self.head
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn arity(&self) -> usize {
        self.slots.len()
    }

    /// Positional argument `i`.
    pub fn arg(&self, i: usize) -> Option<&Term> {
        self.slots.get(i).map(|s| &s.filler)
    }

    pub fn args(&self) -> impl Iterator<Item = &Term> {
        self.slots.iter().map(|s| &s.filler)
    }

    /// Filler of an explicitly labeled role.
    pub fn role(&self, role: &str) -> Option<&Term> {
        self.slots
            .iter()
            .find(|s| s.role.as_ref().map(|r| r.as_str()) == Some(role))
            .map(|s| &s.filler)
    }

    pub fn atom_arg(&self, i: usize) -> Option<&Symbol> {
        self.arg(i).and_then(Term::as_atom)
    }

    pub fn concept_arg(&self, i: usize) -> Option<&Concept> {
        self.arg(i).and_then(Term::as_concept)
    }

    pub fn is_ground(&self) -> bool {
        self.slots.iter().all(|s| s.filler.is_ground())
    }

    pub fn substitute(&self, b: &Bindings) -> Concept {
        Concept {
            head: self.head.clone(),
            slots: self
                .slots
                .iter()
                .map(|s| Slot { role: s.role.clone(), filler: s.filler.substitute(b) })
                .collect(),
        }
    }

    /// Variables in first-occurrence order.
    pub fn variables(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        Term::Concept(self.clone()).collect_vars(&mut out);
        out
    }

    /// Atoms in first-occurrence order (heads excluded).
    pub fn atoms(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        Term::Concept(self.clone()).collect_atoms(&mut out);
        out
    }

    /// Replace every occurrence of atom `from` with `to`, recursively.
    pub fn replace_atom(&self, from: &Symbol, to: &Term) -> Concept {
        fn go(t: &Term, from: &Symbol, to: &Term) -> Term {
            match t {
                Term::Atom(a) if a == from => to.clone(),
                Term::Concept(c) => Term::Concept(c.replace_atom(from, to)),
                _ => t.clone(),
            }
        }
        Concept {
            head: self.head.clone(),
            slots: self
                .slots
                .iter()
                .map(|s| Slot { role: s.role.clone(), filler: go(&s.filler, from, to) })
                .collect(),
        }
    }

    /// Rewrite every atom (and, with `heads`, every head) through `f`.
    pub fn map_symbols(&self, f: &dyn Fn(&Symbol) -> Symbol, heads: bool) -> Concept {
        fn go(t: &Term, f: &dyn Fn(&Symbol) -> Symbol, heads: bool) -> Term {
            match t {
                Term::Atom(a) => Term::Atom(f(a)),
                Term::Concept(c) => Term::Concept(c.map_symbols(f, heads)),
                Term::Var(_) => t.clone(),
            }
        }
        Concept {
            head: if heads { f(&self.head) } else { self.head.clone() },
            slots: self
                .slots
                .iter()
                .map(|s| Slot { role: s.role.clone(), filler: go(&s.filler, f, heads) })
                .collect(),
        }
    }

    /// Rename every variable with a suffix so rule instances do not clash.
    pub fn rename_vars(&self, suffix: &str) -> Concept {
        fn go(t: &Term, suffix: &str) -> Term {
            match t {
                Term::Var(v) => Term::Var(Symbol::new(&format!("{}{}", v, suffix))),
                Term::Concept(c) => Term::Concept(c.rename_vars(suffix)),
                _ => t.clone(),
            }
        }
        Concept {
            head: self.head.clone(),
            slots: self
                .slots
                .iter()
                .map(|s| Slot { role: s.role.clone(), filler: go(&s.filler, suffix) })
                .collect(),
        }
    }

    /// Parse exactly one concept.
    pub fn parse(text: &str) -> Result<Concept, ParseError> {
        let forms = parse_all(text)?;
        match forms.len() {
            1 => match forms.into_iter().next().unwrap() {
                Term::Concept(c) => Ok(c),
                _ => Err(ParseError::new(0, "expected a parenthesized concept")),
            },
            0 => Err(ParseError::new(text.len(), "empty input")),
            _ => Err(ParseError::new(0, "expected exactly one concept")),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Atom(a) => write_atom(f, a.as_str()),
            Term::Var(v) => write!(f, "?{}", v),
            Term::Concept(c) => write!(f, "{}", c),
        }
    }
}

fn is_plain(s: &str) -> bool {
    !s.is_empty()
        && !s.starts_with('?')
        && !s.starts_with(':')
        && s.chars().all(|c| !c.is_whitespace() && !matches!(c, '(' | ')' | '"' | ';' | '#') && !c.is_ascii_uppercase())
}

fn write_atom(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    if is_plain(s) {
        f.write_str(s)
    } else {
        write!(f, "\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.head)?;
        for s in &self.slots {
            f.write_str(" ")?;
            if let Some(r) = &s.role {
                write!(f, ":{} ", r)?;
            }
            write!(f, "{}", s.filler)?;
        }
        f.write_str(")")
    }
}

/// Parse a sequence of top-level forms. `;` starts a line comment.
pub fn parse_all(text: &str) -> Result<Vec<Term>, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let mut out = Vec::new();
    loop {
        p.skip_ws();
        if p.pos >= p.src.len() {
            return Ok(out);
        }
        out.push(p.term()?);
    }
}

/// Parse a sequence of top-level forms, all of which must be concepts.
pub fn parse_concepts(text: &str) -> Result<Vec<Concept>, ParseError> {
    parse_all(text)?
        .into_iter()
        .map(|t| match t {
            Term::Concept(c) => Ok(c),
            other => Err(ParseError::new(0, format!("expected concept, found {}", other))),
        })
        .collect()
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c == b';' {
                while self.pos < self.src.len() && self.src[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        self.skip_ws();
        match self.src.get(self.pos) {
            None => Err(ParseError::new(self.pos, "unexpected end of input")),
            Some(b'(') => self.concept().map(Term::Concept),
            Some(b')') => Err(ParseError::new(self.pos, "unexpected ')'")),
            Some(b'"') => self.string().map(|s| Term::Atom(Symbol::new(&s))),
            Some(b'?') => {
                self.pos += 1;
                let name = self.word();
                if name.is_empty() {
                    return Err(ParseError::new(self.pos, "empty variable name"));
                }
                Ok(Term::Var(Symbol::new(&name)))
            }
            Some(_) => {
                let start = self.pos;
                let w = self.word();
                if w.is_empty() {
                    return Err(ParseError::new(start, "unexpected character"));
                }
                Ok(Term::Atom(Symbol::new(&w)))
            }
        }
    }

    fn concept(&mut self) -> Result<Concept, ParseError> {
        let open = self.pos;
        self.pos += 1;
        self.skip_ws();
        let head = match self.src.get(self.pos) {
            None => return Err(ParseError::new(self.pos, "unterminated concept")),
            Some(b'(') | Some(b')') | Some(b'?') | Some(b'"') | Some(b':') => {
                return Err(ParseError::new(self.pos, "concept head must be a symbol"))
            }
            Some(_) => self.word(),
        };
        if head.is_empty() {
            return Err(ParseError::new(self.pos, "concept head must be a symbol"));
        }
        let mut slots = Vec::new();
        loop {
            self.skip_ws();
            match self.src.get(self.pos) {
                None => return Err(ParseError::new(open, "unterminated concept")),
                Some(b')') => {
                    self.pos += 1;
                    return Ok(Concept { head: Symbol::new(&head), slots });
                }
                Some(b':') => {
                    self.pos += 1;
                    let role = self.word();
                    if role.is_empty() {
                        return Err(ParseError::new(self.pos, "empty role name"));
                    }
                    let filler = self.term()?;
                    slots.push(Slot { role: Some(Symbol::new(&role)), filler });
                }
                Some(_) => {
                    let filler = self.term()?;
                    slots.push(Slot { role: None, filler });
                }
            }
        }
    }

    fn word(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c.is_ascii_whitespace() || matches!(c, b'(' | b')' | b'"' | b';') {
                break;
            }
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).to_ascii_lowercase()
    }

    fn string(&mut self) -> Result<String, ParseError> {
        let start = self.pos;
        self.pos += 1;
        let mut out = Vec::new();
        while self.pos < self.src.len() {
            match self.src[self.pos] {
                b'"' => {
                    self.pos += 1;
                    return Ok(String::from_utf8_lossy(&out).into_owned());
                }
                b'\\' if self.pos + 1 < self.src.len() => {
                    out.push(self.src[self.pos + 1]);
                    self.pos += 2;
                }
                c => {
                    out.push(c);
                    self.pos += 1;
                }
            }
        }
        Err(ParseError::new(start, "unterminated string"))
    }
}

fn walk<'a>(t: &'a Term, b: &'a Bindings) -> &'a Term {
    let mut cur = t;
    while let Term::Var(v) = cur {
        match b.get(v) {
            Some(next) if next != cur => cur = next,
            _ => break,
        }
    }
    cur
}

/// General two-sided unification with occurs check, extending `b`.
/// On failure `b` may hold partial bindings; callers clone first.
pub fn unify_terms(x: &Term, y: &Term, b: &mut Bindings) -> bool {
    let x = walk(x, b).clone();
    let y = walk(y, b).clone();
    match (&x, &y) {
        (Term::Var(a), Term::Var(c)) if a == c => true,
        (Term::Var(v), other) | (other, Term::Var(v)) => {
            if other.occurs(v, b) {
                return false;
            }
            b.insert(v.clone(), other.clone());
            true
        }
        (Term::Atom(a), Term::Atom(c)) => a == c,
        (Term::Concept(p), Term::Concept(q)) => unify_concepts_in(p, q, b),
        _ => false,
    }
}

fn unify_concepts_in(p: &Concept, q: &Concept, b: &mut Bindings) -> bool {
    if p.head != q.head || p.slots.len() != q.slots.len() {
        return false;
    }
    p.slots
        .iter()
        .zip(&q.slots)
        .all(|(s, t)| s.role == t.role && unify_terms(&s.filler, &t.filler, b))
}

/// Unify two concepts under existing bindings; returns the extended
/// substitution or `None`.
pub fn unify_with(p: &Concept, q: &Concept, b: &Bindings) -> Option<Bindings> {
    let mut out = b.clone();
    if unify_concepts_in(p, q, &mut out) {
        Some(out)
    } else {
        None
    }
}

/// Most general substitution making `pattern` equal to the ground `concept`.
pub fn unify(pattern: &Concept, concept: &Concept) -> Option<Bindings> {
    unify_with(pattern, concept, &Bindings::new()).map(|b| resolve(&b))
}

/// Fully dereference every binding.
pub fn resolve(b: &Bindings) -> Bindings {
    b.iter().map(|(k, v)| (k.clone(), v.substitute(b))).collect()
}

/// Build a concept from text, panicking on malformed input. Intended for
/// fixtures and tests.
pub fn c(text: &str) -> Concept {
    Concept::parse(text).unwrap_or_else(|e| panic!("bad concept {:?}: {}", text, e))
}

impl Serialize for Concept {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Concept {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Concept, D::Error> {
        let text = String::deserialize(d)?;
        Concept::parse(&text).map_err(serde::de::Error::custom)
    }
}
