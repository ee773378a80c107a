//! Template-driven English generation.
//!
//! Templates are data: `(template FORM PATTERN "text")`. The first template
//! of the requested form whose pattern unifies with the concept is used.
//! Inside the text:
//!
//! - `{v}` renders the binding of `?v` in the nominative, `{v:obj}`,
//!   `{v:poss}` and `{v:pro}` pick a case (`pro` always uses a pronoun);
//! - `{v:ger}`, `{v:inf}`, `{v:inf-self}`, `{v:past}`, `{v:np}`,
//!   `{v:assumed}` render a nested concept in that form;
//! - `{v:inf/a}` renders `inf-self` when the nested concept's first
//!   argument is the binding of `?a`, `inf` otherwise;
//! - `{a&b}` renders a pair in the objective case, self last;
//! - `[verb:v]` conjugates `verb` for the binding of `?v`.
//!
//! A non-self agent mentioned earlier in the same sentence becomes a
//! pronoun. Names come from `(name ATOM "text" [GENDER])` forms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::concept::{unify, Bindings, Concept, Symbol, Term};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Form {
    Sentence,
    Ger,
    Inf,
    InfSelf,
    Past,
    Assumed,
    Np,
}

impl Form {
    pub fn parse(s: &str) -> Option<Form> {
        Some(match s {
            "sentence" => Form::Sentence,
            "ger" => Form::Ger,
            "inf" => Form::Inf,
            "inf-self" => Form::InfSelf,
            "past" => Form::Past,
            "assumed" => Form::Assumed,
            "np" => Form::Np,
            _ => return None,
        })
    }

    /// Forms tried, in order, when `self` has no matching template.
    fn fallbacks(self) -> &'static [Form] {
        match self {
            Form::InfSelf => &[Form::InfSelf, Form::Inf],
            Form::Inf => &[Form::Inf, Form::InfSelf],
            Form::Assumed => &[Form::Assumed, Form::Sentence],
            Form::Np => &[Form::Np, Form::Sentence],
            Form::Sentence => &[Form::Sentence],
            Form::Ger => &[Form::Ger],
            Form::Past => &[Form::Past],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gender {
    Female,
    Male,
    Neuter,
}

impl Gender {
    pub fn parse(s: &str) -> Option<Gender> {
        match s {
            "female" => Some(Gender::Female),
            "male" => Some(Gender::Male),
            "neuter" => Some(Gender::Neuter),
            _ => None,
        }
    }

    fn pronouns(self) -> [&'static str; 3] {
        match self {
            Gender::Female => ["she", "her", "her"],
            Gender::Male => ["he", "him", "his"],
            Gender::Neuter => ["it", "it", "its"],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Template {
    pub form: Form,
    pub pattern: Concept,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq)]
struct Name {
    text: String,
    gender: Option<Gender>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Case {
    Nom,
    Obj,
    Poss,
}

#[derive(Clone, Debug, PartialEq)]
enum Mode {
    Case(Case),
    Pronoun,
    Form(Form),
    InfFor(Symbol),
}

/// Text produced for one sentence plus any problems found on the way.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Rendering {
    pub text: String,
    pub warnings: Vec<String>,
}

impl fmt::Display for Rendering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Default)]
struct State {
    mentioned: BTreeSet<Symbol>,
    warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    self_agent: Symbol,
    templates: Vec<Template>,
    names: BTreeMap<Symbol, Name>,
}

/// Third person singular present of `verb`.
pub fn third_person(verb: &str) -> String {
    match verb {
        "be" => return "is".into(),
        "have" => return "has".into(),
        _ => {}
    }
    let b = verb.as_bytes();
    let vowel = |c: u8| matches!(c, b'a' | b'e' | b'i' | b'o' | b'u');
    if verb.ends_with('y') && b.len() > 1 && !vowel(b[b.len() - 2]) {
        return format!("{}ies", &verb[..verb.len() - 1]);
    }
    if ["s", "sh", "ch", "x", "o", "z"].iter().any(|s| verb.ends_with(s)) {
        return format!("{}es", verb);
    }
    format!("{}s", verb)
}

fn article(word: &str) -> &'static str {
    match word.chars().next().map(|c| c.to_ascii_lowercase()) {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}

pub fn capitalize(s: &str) -> String {
    let mut cs = s.chars();
    match cs.next() {
        Some(f) => f.to_uppercase().chain(cs).collect(),
        None => String::new(),
    }
}

impl Generator {
    pub fn new(self_agent: &str) -> Self {
        Generator { self_agent: Symbol::new(self_agent), templates: Vec::new(), names: BTreeMap::new() }
    }

    pub fn self_agent(&self) -> &Symbol {
        &self.self_agent
    }

    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    pub fn add_template(&mut self, form: Form, pattern: Concept, text: &str) {
        self.templates.push(Template { form, pattern, text: text.to_string() });
    }

    pub fn add_name(&mut self, atom: &str, text: &str, gender: Option<Gender>) {
        self.names.insert(Symbol::new(atom), Name { text: text.to_string(), gender });
    }

    /// Record an agent's gender without changing how it is named.
    pub fn set_gender(&mut self, atom: &Symbol, gender: Gender) {
        let text = capitalize(atom.as_str());
        self.names.entry(atom.clone()).or_insert(Name { text, gender: None }).gender = Some(gender);
    }

    pub fn is_agent(&self, atom: &Symbol) -> bool {
        *atom == self.self_agent || self.names.get(atom).map(|n| n.gender.is_some()).unwrap_or(false)
    }

    /// Atoms with a known gender, plus self.
    pub fn agents(&self) -> BTreeSet<Symbol> {
        let mut out: BTreeSet<Symbol> =
            self.names.iter().filter(|(_, n)| n.gender.is_some()).map(|(a, _)| a.clone()).collect();
        out.insert(self.self_agent.clone());
        out
    }

    /// Read `template` and `name` forms; other heads are ignored.
    pub fn load(&mut self, forms: &[Concept]) -> Result<()> {
        for f in forms {
            match f.head().as_str() {
                "template" => {
                    let form = f.atom_arg(0).and_then(|a| Form::parse(a.as_str()));
                    match (form, f.concept_arg(1), f.atom_arg(2)) {
                        (Some(form), Some(p), Some(text)) => self.add_template(form, p.clone(), text.as_str()),
                        _ => return Err(Error::Domain(format!("bad template {}", f))),
                    }
                }
                "name" => {
                    let gender = match f.atom_arg(2) {
                        Some(g) => Some(Gender::parse(g.as_str()).ok_or_else(|| Error::Domain(format!("bad gender in {}", f)))?),
                        None => None,
                    };
                    match (f.atom_arg(0), f.atom_arg(1)) {
                        (Some(a), Some(t)) => self.add_name(a.as_str(), t.as_str(), gender),
                        _ => return Err(Error::Domain(format!("bad name {}", f))),
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn find(&self, form: Form, c: &Concept) -> Option<(&Template, Bindings)> {
        form.fallbacks().iter().find_map(|f| {
            self.templates.iter().filter(|t| t.form == *f).find_map(|t| unify(&t.pattern, c).map(|b| (t, b)))
        })
    }

    /// Whether a sentence template exists for `c`.
    pub fn has_sentence(&self, c: &Concept) -> bool {
        self.templates.iter().any(|t| t.form == Form::Sentence && unify(&t.pattern, c).is_some())
    }

    /// A full sentence: capitalized and ending in punctuation. Unknown
    /// heads render as `<<head>>` with a warning.
    pub fn sentence(&self, c: &Concept) -> Rendering {
        let mut st = State::default();
        let body = self.concept(c, Form::Sentence, &mut st);
        let mut text = capitalize(body.trim());
        if !text.ends_with(['.', '!', '?']) {
            text.push('.');
        }
        Rendering { text, warnings: st.warnings }
    }

    /// A fragment in `form`, without capitalization or punctuation.
    pub fn phrase(&self, c: &Concept, form: Form) -> Rendering {
        let mut st = State::default();
        let text = self.concept(c, form, &mut st);
        Rendering { text, warnings: st.warnings }
    }

    fn concept(&self, c: &Concept, form: Form, st: &mut State) -> String {
        match self.find(form, c) {
            Some((t, b)) => self.fill(&t.text, &b, st),
            None => {
                st.warnings.push(format!("no template for {}", c));
                format!("<<{}>>", c.head())
            }
        }
    }
}

impl Generator {
    fn lookup(&self, b: &Bindings, var: &str, st: &mut State) -> Option<Term> {
        match b.get(&Symbol::new(var)) {
            Some(t) => Some(t.substitute(b)),
            None => {
                st.warnings.push(format!("template placeholder `{}` is unbound", var));
                None
            }
        }
    }

    fn fill(&self, text: &str, b: &Bindings, st: &mut State) -> String {
        let mut out = String::new();
        let mut rest = text;
        while let Some(i) = rest.find(['{', '[']) {
            out.push_str(&rest[..i]);
            let close = if rest.as_bytes()[i] == b'{' { '}' } else { ']' };
            let Some(j) = rest[i..].find(close).map(|j| j + i) else {
                out.push_str(&rest[i..]);
                return out;
            };
            let inner = &rest[i + 1..j];
            if close == ']' {
                out.push_str(&self.verb(inner, b, st));
            } else if let Some((x, y)) = inner.split_once('&') {
                out.push_str(&self.pair(x, y, b, st));
            } else {
                let (var, modifier) = inner.split_once(':').unwrap_or((inner, ""));
                let mode = match modifier {
                    "" => Mode::Case(Case::Nom),
                    "obj" => Mode::Case(Case::Obj),
                    "poss" => Mode::Case(Case::Poss),
                    "pro" => Mode::Pronoun,
                    m => match m.strip_prefix("inf/") {
                        Some(owner) => Mode::InfFor(Symbol::new(owner)),
                        None => match Form::parse(m) {
                            Some(f) => Mode::Form(f),
                            None => {
                                st.warnings.push(format!("unknown placeholder modifier `{}`", m));
                                Mode::Case(Case::Nom)
                            }
                        },
                    },
                };
                if let Some(t) = self.lookup(b, var, st) {
                    out.push_str(&self.term(&t, &mode, b, st));
                }
            }
            rest = &rest[j + 1..];
        }
        out.push_str(rest);
        out
    }

    fn verb(&self, inner: &str, b: &Bindings, st: &mut State) -> String {
        let (verb, var) = inner.split_once(':').unwrap_or((inner, ""));
        let subject = self.lookup(b, var, st);
        if subject.as_ref().and_then(Term::as_atom) == Some(&self.self_agent) {
            if verb == "be" { "am".into() } else { verb.into() }
        } else {
            third_person(verb)
        }
    }

    fn pair(&self, x: &str, y: &str, b: &Bindings, st: &mut State) -> String {
        let (Some(mut p), Some(mut q)) = (self.lookup(b, x, st), self.lookup(b, y, st)) else {
            return String::new();
        };
        if p.as_atom() == Some(&self.self_agent) {
            std::mem::swap(&mut p, &mut q);
        }
        let first = self.term(&p, &Mode::Case(Case::Obj), b, st);
        let second = self.term(&q, &Mode::Case(Case::Obj), b, st);
        format!("{} and {}", first, second)
    }

    fn term(&self, t: &Term, mode: &Mode, b: &Bindings, st: &mut State) -> String {
        match t {
            Term::Atom(a) => self.atom(a, mode, st),
            Term::Var(v) => {
                st.warnings.push(format!("unbound variable ?{}", v));
                format!("?{}", v)
            }
            Term::Concept(c) => {
                let form = match mode {
                    Mode::Form(f) => *f,
                    Mode::InfFor(owner) => {
                        let owner = b.get(owner).and_then(Term::as_atom);
                        if owner.is_some() && c.atom_arg(0) == owner {
                            Form::InfSelf
                        } else {
                            Form::Inf
                        }
                    }
                    _ => Form::Np,
                };
                self.concept(c, form, st)
            }
        }
    }

    fn atom(&self, a: &Symbol, mode: &Mode, st: &mut State) -> String {
        if *a == self.self_agent {
            return match mode {
                Mode::Case(Case::Obj) => "me",
                Mode::Case(Case::Poss) => "my",
                _ => "I",
            }
            .into();
        }
        let name = self.names.get(a);
        if let Some(gender) = name.and_then(|n| n.gender) {
            let [nom, obj, poss] = gender.pronouns();
            let seen = !st.mentioned.insert(a.clone());
            let case = match mode {
                Mode::Case(c) => *c,
                _ => Case::Nom,
            };
            if seen || *mode == Mode::Pronoun {
                return match case {
                    Case::Nom => nom,
                    Case::Obj => obj,
                    Case::Poss => poss,
                }
                .into();
            }
            let text = &name.expect("gendered names exist").text;
            return if case == Case::Poss { format!("{}'s", text) } else { text.clone() };
        }
        if let Some(n) = name {
            return n.text.clone();
        }
        let word = a.as_str().replace('-', " ");
        if *mode == Mode::Form(Form::Np) && a.as_str().parse::<f64>().is_err() {
            format!("{} {}", article(&word), word)
        } else {
            word
        }
    }
}
