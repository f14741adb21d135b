//! Recursive path ordering over a strict precedence on symbol names, with
//! lexicographic status by default and optional multiset status per symbol.
//! The ordering is by construction well-founded, monotone in every argument
//! position and has the subterm property everywhere.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::syntax::Term;

use super::Comparison;

/// Strict partial order on symbol names, stored transitively closed.
/// Precedence is by name so that it survives arity changes from argument
/// erasure.
#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct Precedence {
    pairs: BTreeSet<(String, String)>,
}

impl Precedence {
    pub fn empty() -> Precedence {
        Precedence::default()
    }

    /// Total precedence from a descending chain of names.
    pub fn from_descending<S: AsRef<str>>(chain: &[S]) -> Precedence {
        let mut p = Precedence::empty();
        for i in 0..chain.len() {
            for j in i + 1..chain.len() {
                p.pairs.insert((chain[i].as_ref().to_string(), chain[j].as_ref().to_string()));
            }
        }
        p
    }

    pub fn gt(&self, a: &str, b: &str) -> bool {
        self.pairs.contains(&(a.to_string(), b.to_string()))
    }

    /// Add `a` above `b` and re-close transitively.  Returns false (leaving
    /// the precedence unchanged) if that would create a cycle.
    pub fn add(&mut self, a: &str, b: &str) -> bool {
        if a == b || self.gt(b, a) {
            return false;
        }
        let mut next = self.pairs.clone();
        next.insert((a.to_string(), b.to_string()));
        // close: everything above a is above everything below b
        let above_a: Vec<String> = next
            .iter()
            .filter(|(_, y)| y == a)
            .map(|(x, _)| x.clone())
            .collect();
        let below_b: Vec<String> = next
            .iter()
            .filter(|(x, _)| x == b)
            .map(|(_, y)| y.clone())
            .collect();
        for x in above_a.iter().chain(std::iter::once(&a.to_string())) {
            for y in below_b.iter().chain(std::iter::once(&b.to_string())) {
                if x == y {
                    return false;
                }
                next.insert((x.clone(), y.clone()));
            }
        }
        self.pairs = next;
        true
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    #[default]
    Lex,
    Multiset,
}

#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct RpoSpec {
    pub precedence: Precedence,
    /// Status by symbol name; absent means lexicographic.
    pub status: BTreeMap<String, Status>,
}

impl RpoSpec {
    pub fn with_precedence(precedence: Precedence) -> RpoSpec {
        RpoSpec { precedence, status: BTreeMap::new() }
    }

    pub fn status_of(&self, name: &str) -> Status {
        self.status.get(name).copied().unwrap_or_default()
    }

    pub fn compare(&self, a: &Term, b: &Term) -> Comparison {
        if a == b {
            Comparison::EqualUnderOrder
        } else if self.gt(a, b) {
            Comparison::Greater
        } else if self.gt(b, a) {
            Comparison::Less
        } else {
            Comparison::Incomparable
        }
    }

    /// Strict ordering.  Variables are minimal: `s > X` iff X occurs
    /// strictly inside s, and `X > t` never holds.
    pub fn gt(&self, s: &Term, t: &Term) -> bool {
        match (s, t) {
            (_, Term::Var(y)) => s != t && s.contains_var(y),
            (Term::Var(_), _) => false,
            (Term::Comp(f, ss), Term::Comp(g, ts)) => {
                // some argument of s already dominates t
                if ss.iter().any(|si| si == t || self.gt(si, t)) {
                    return true;
                }
                if self.precedence.gt(&f.name, &g.name) {
                    return ts.iter().all(|tj| self.gt(s, tj));
                }
                if f.name == g.name {
                    if !ts.iter().all(|tj| self.gt(s, tj)) {
                        return false;
                    }
                    match self.status_of(&f.name) {
                        Status::Lex => lex_gt(self, ss, ts),
                        Status::Multiset => multiset_gt(self, ss, ts),
                    }
                } else {
                    false
                }
            }
        }
    }
}

fn lex_gt(spec: &RpoSpec, ss: &[Term], ts: &[Term]) -> bool {
    for (si, ti) in ss.iter().zip(ts) {
        if si != ti {
            return spec.gt(si, ti);
        }
    }
    ss.len() > ts.len()
}

fn multiset_gt(spec: &RpoSpec, ss: &[Term], ts: &[Term]) -> bool {
    let mut ss: Vec<&Term> = ss.iter().collect();
    let mut ts: Vec<&Term> = ts.iter().collect();
    // cancel common occurrences
    let mut i = 0;
    while i < ts.len() {
        if let Some(j) = ss.iter().position(|s| *s == ts[i]) {
            ss.remove(j);
            ts.remove(i);
        } else {
            i += 1;
        }
    }
    !ss.is_empty() && ts.iter().all(|t| ss.iter().any(|s| spec.gt(s, t)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(n: &str) -> Term {
        Term::constant(n)
    }

    #[test]
    fn precedence_closure_and_cycles() {
        let mut p = Precedence::empty();
        assert!(p.add("f", "g"));
        assert!(p.add("g", "h"));
        assert!(p.gt("f", "h"));
        assert!(!p.add("h", "f"));
        assert!(!p.add("f", "f"));
        let q = Precedence::from_descending(&["a", "b", "c"]);
        assert!(q.gt("a", "c") && q.gt("b", "c") && !q.gt("c", "a"));
    }

    #[test]
    fn subterm_and_variable_rules() {
        let spec = RpoSpec::default();
        let gx = Term::app("g", vec![Term::var("X")]);
        assert_eq!(spec.compare(&gx, &Term::var("X")), Comparison::Greater);
        assert_eq!(spec.compare(&Term::var("X"), &gx), Comparison::Less);
        assert_eq!(spec.compare(&Term::var("X"), &Term::var("Y")), Comparison::Incomparable);
        assert_eq!(spec.compare(&gx, &gx), Comparison::EqualUnderOrder);
        // proper subterm below two levels
        let ggx = Term::app("g", vec![gx.clone()]);
        assert_eq!(spec.compare(&ggx, &Term::var("X")), Comparison::Greater);
    }

    #[test]
    fn precedence_rule_distributivity() {
        // with * above +, a*(b+c) > (a*b)+(a*c)
        let spec = RpoSpec::with_precedence(Precedence::from_descending(&["*", "+"]));
        let lhs = Term::app("*", vec![c("a"), Term::app("+", vec![c("b"), c("c")])]);
        let rhs = Term::app(
            "+",
            vec![
                Term::app("*", vec![c("a"), c("b")]),
                Term::app("*", vec![c("a"), c("c")]),
            ],
        );
        assert_eq!(spec.compare(&lhs, &rhs), Comparison::Greater);
        assert_eq!(spec.compare(&rhs, &lhs), Comparison::Less);
    }

    #[test]
    fn lex_status_handles_argument_rotation() {
        // op(op(X,Y),Z) > op(X,op(Y,Z)) by lexicographic status on ground instances
        let spec = RpoSpec::default();
        let lhs = Term::app("op", vec![Term::app("op", vec![c("a"), c("b")]), c("d")]);
        let rhs = Term::app("op", vec![c("a"), Term::app("op", vec![c("b"), c("d")])]);
        assert_eq!(spec.compare(&lhs, &rhs), Comparison::Greater);
    }

    #[test]
    fn multiset_status_ignores_argument_order() {
        let mut spec = RpoSpec::default();
        spec.status.insert("f".to_string(), Status::Multiset);
        let s = Term::app("f", vec![Term::app("g", vec![c("a")]), c("b")]);
        let t = Term::app("f", vec![c("b"), c("a")]);
        assert_eq!(spec.compare(&s, &t), Comparison::Greater);
        // permuted equal multisets are not strictly related
        let u = Term::app("f", vec![c("a"), c("b")]);
        let v = Term::app("f", vec![c("b"), c("a")]);
        assert_eq!(spec.compare(&u, &v), Comparison::Incomparable);
    }

    #[test]
    fn strictness_is_asymmetric_on_sample() {
        let spec = RpoSpec::with_precedence(Precedence::from_descending(&["f", "g", "a", "b"]));
        let pool = crate::orders::enumerate_terms(
            &[
                crate::syntax::Symbol::new("f", 2),
                crate::syntax::Symbol::new("g", 1),
                crate::syntax::Symbol::new("a", 0),
                crate::syntax::Symbol::new("b", 0),
            ],
            4,
        );
        for s in &pool {
            assert!(!spec.gt(s, s));
            for t in &pool {
                assert!(!(spec.gt(s, t) && spec.gt(t, s)), "both {s} > {t} and converse");
            }
        }
    }
}
