//! The library unifier against a textbook Robinson unifier written over a
//! separate term type, plus exhaustive grounding for flat concepts.

use std::collections::BTreeMap;

use daydreamer::concept::{resolve, unify_with, Bindings, Concept, Term};
use proptest::prelude::*;

#[derive(Clone, Debug, PartialEq)]
enum T {
    Var(u8),
    Atom(u8),
    App(u8, Vec<T>),
}

type Subst = BTreeMap<u8, T>;

fn apply(t: &T, s: &Subst) -> T {
    match t {
        T::Var(v) => s.get(v).map(|u| apply(u, s)).unwrap_or(T::Var(*v)),
        T::Atom(a) => T::Atom(*a),
        T::App(f, xs) => T::App(*f, xs.iter().map(|x| apply(x, s)).collect()),
    }
}

fn occurs(v: u8, t: &T) -> bool {
    match t {
        T::Var(w) => *w == v,
        T::Atom(_) => false,
        T::App(_, xs) => xs.iter().any(|x| occurs(v, x)),
    }
}

/// Robinson's algorithm over a pair list, producing an idempotent mgu.
fn robinson(x: &T, y: &T) -> Option<Subst> {
    let mut s = Subst::new();
    let mut work = vec![(x.clone(), y.clone())];
    while let Some((a, b)) = work.pop() {
        let (a, b) = (apply(&a, &s), apply(&b, &s));
        match (a, b) {
            (a, b) if a == b => {}
            (T::Var(v), t) | (t, T::Var(v)) => {
                if occurs(v, &t) {
                    return None;
                }
                s = s.into_iter().map(|(k, u)| (k, apply(&u, &Subst::from([(v, t.clone())])))).collect();
                s.insert(v, t);
            }
            (T::App(f, xs), T::App(g, ys)) if f == g && xs.len() == ys.len() => {
                work.extend(xs.into_iter().zip(ys));
            }
            _ => return None,
        }
    }
    Some(s)
}

fn to_term(t: &T) -> Term {
    match t {
        T::Var(v) => Term::var(&format!("v{v}")),
        T::Atom(a) => Term::atom(&format!("a{a}")),
        T::App(f, xs) => Term::Concept(Concept::new(&format!("f{f}"), xs.iter().map(to_term).collect())),
    }
}

fn from_term(t: &Term) -> T {
    match t {
        Term::Var(v) => T::Var(v.as_str()[1..].parse().unwrap()),
        Term::Atom(a) => T::Atom(a.as_str()[1..].parse().unwrap()),
        Term::Concept(c) => T::App(c.head().as_str()[1..].parse().unwrap(), c.args().map(from_term).collect()),
    }
}

fn top(t: &T) -> Concept {
    match to_term(t) {
        Term::Concept(c) => c,
        _ => unreachable!("generated tops are applications"),
    }
}

/// True when `a` and `b` differ only by a consistent renaming of variables.
fn variant(a: &T, b: &T, ren: &mut BTreeMap<u8, u8>) -> bool {
    match (a, b) {
        (T::Var(x), T::Var(y)) => {
            if let Some(z) = ren.get(x) {
                return z == y;
            }
            if ren.values().any(|z| z == y) {
                return false;
            }
            ren.insert(*x, *y);
            true
        }
        (T::Atom(x), T::Atom(y)) => x == y,
        (T::App(f, xs), T::App(g, ys)) => f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| variant(x, y, ren)),
        _ => false,
    }
}

fn term(depth: u32) -> BoxedStrategy<T> {
    let leaf = prop_oneof![(0u8..4).prop_map(T::Var), (0u8..3).prop_map(T::Atom)];
    if depth == 0 {
        return leaf.boxed();
    }
    prop_oneof![
        3 => leaf,
        1 => ((0u8..2), prop::collection::vec(term(depth - 1), 1..3)).prop_map(|(f, xs)| T::App(f, xs)),
    ]
    .boxed()
}

fn pair() -> impl Strategy<Value = (T, T)> {
    (prop::collection::vec(term(2), 1..4), prop::collection::vec(term(2), 1..4))
        .prop_map(|(xs, ys)| (T::App(9, xs), T::App(9, ys)))
}

fn lib_apply(t: &T, b: &Bindings) -> T {
    from_term(&to_term(t).substitute(b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn agrees_with_robinson((x, y) in pair()) {
        let want = robinson(&x, &y);
        let got = unify_with(&top(&x), &top(&y), &Bindings::new()).map(|b| resolve(&b));
        prop_assert_eq!(want.is_some(), got.is_some(), "{:?} vs {:?}", x, y);
        if let (Some(s), Some(b)) = (want, got) {
            let (lx, ly) = (lib_apply(&x, &b), lib_apply(&y, &b));
            prop_assert_eq!(&lx, &ly, "library bindings must unify");
            let pair_lib = T::App(0, vec![lx, ly]);
            let pair_ref = T::App(0, vec![apply(&x, &s), apply(&y, &s)]);
            prop_assert!(variant(&pair_lib, &pair_ref, &mut BTreeMap::new()), "most general up to renaming");
        }
    }
}

fn flat() -> impl Strategy<Value = Vec<T>> {
    prop::collection::vec(prop_oneof![(0u8..3).prop_map(T::Var), (0u8..2).prop_map(T::Atom)], 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    /// Every ground solution over a closed alphabet is an instance of the
    /// returned unifier, and the unifier exists iff some solution does.
    #[test]
    fn flat_concepts_match_grounding(xs in flat(), ys in flat()) {
        let (x, y) = (T::App(9, xs), T::App(9, ys));
        let got = unify_with(&top(&x), &top(&y), &Bindings::new()).map(|b| resolve(&b));
        let mut solutions = Vec::new();
        for code in 0..27u32 {
            let g: Subst = (0..3u8).map(|v| (v, T::Atom(((code / 3u32.pow(v as u32)) % 3) as u8))).collect();
            if apply(&x, &g) == apply(&y, &g) {
                solutions.push(g);
            }
        }
        prop_assert_eq!(got.is_some(), !solutions.is_empty());
        if let Some(b) = got {
            for g in &solutions {
                for v in 0..3u8 {
                    let via = apply(&lib_apply(&T::Var(v), &b), g);
                    prop_assert_eq!(&via, &g[&v]);
                }
            }
        }
    }
}
