//! Bounded LD-resolution: exhaustive depth-first exploration of the
//! derivation tree under the left-to-right selection rule, with a depth
//! budget measured in resolution steps.  Also provides a bottom-up
//! ground-consequence operator over a sampled Herbrand universe; both serve
//! as empirical oracles for the static analysis.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::syntax::{
    mgu, rename_apart, variant_eq, Atom, Program, Subst, Symbol, Term,
};

/// One resolution step of the exploration, for trace dumps.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceStep {
    pub depth: usize,
    pub selected: Atom,
    /// Index of the program clause resolved against, or `None` for the
    /// root goal.
    pub clause: Option<usize>,
    pub bindings: String,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Outcome {
    /// Every branch ended within the budget: the query LD-terminates.
    FiniteTree,
    /// Some branch reached the depth budget; nothing is concluded.
    DepthLimit,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Exploration {
    pub outcome: Outcome,
    pub answers: usize,
    pub nodes: usize,
    pub max_depth: usize,
    /// Selected-atom sequence of one branch that hit the budget.
    pub witness: Vec<Atom>,
    /// A directed chain of selected atoms ending in a variant repetition,
    /// if one was seen.  Heuristic evidence of a loop, not a proof.
    pub loop_evidence: Option<Vec<Atom>>,
    pub trace: Vec<TraceStep>,
}

struct Explorer<'a> {
    program: &'a Program,
    max_depth: usize,
    fresh: usize,
    answers: usize,
    nodes: usize,
    max_seen: usize,
    witness: Vec<Atom>,
    loop_evidence: Option<Vec<Atom>>,
    trace: Vec<TraceStep>,
    collect_trace: bool,
}

/// A goal atom together with the index (into the branch's selected-atom
/// list) of the resolution step that introduced it.
type GoalAtom = (Atom, Option<usize>);

/// Explore the LD-tree of `goal` exhaustively up to `max_depth` resolution
/// steps per branch.
pub fn ld_explore(program: &Program, goal: &[Atom], max_depth: usize) -> Exploration {
    ld_explore_opts(program, goal, max_depth, false)
}

pub fn ld_explore_opts(
    program: &Program,
    goal: &[Atom],
    max_depth: usize,
    collect_trace: bool,
) -> Exploration {
    let mut e = Explorer {
        program,
        max_depth,
        fresh: 0,
        answers: 0,
        nodes: 0,
        max_seen: 0,
        witness: Vec::new(),
        loop_evidence: None,
        trace: Vec::new(),
        collect_trace,
    };
    let root: Vec<GoalAtom> = goal.iter().map(|a| (a.clone(), None)).collect();
    let complete = e.visit(root, &mut Vec::new());
    Exploration {
        outcome: if complete { Outcome::FiniteTree } else { Outcome::DepthLimit },
        answers: e.answers,
        nodes: e.nodes,
        max_depth: e.max_seen,
        witness: e.witness,
        loop_evidence: e.loop_evidence,
        trace: e.trace,
    }
}

impl<'a> Explorer<'a> {
    /// Returns true if the whole subtree fits within the budget.
    fn visit(&mut self, goal: Vec<GoalAtom>, branch: &mut Vec<(Atom, Option<usize>)>) -> bool {
        self.nodes += 1;
        self.max_seen = self.max_seen.max(branch.len());
        let Some((selected, parent)) = goal.first().cloned() else {
            self.answers += 1;
            return true;
        };
        if branch.len() >= self.max_depth {
            if self.witness.is_empty() {
                self.witness = branch.iter().map(|(a, _)| a.clone()).collect();
            }
            return false;
        }
        self.check_loop(&selected, parent, branch);
        let step = branch.len();
        let mut complete = true;
        for (ci, clause) in self.program.clauses.iter().enumerate() {
            let mut avoid: BTreeSet<String> = selected.vars();
            for (a, _) in &goal {
                avoid.extend(a.vars());
            }
            let renamed = self.rename(clause, &avoid);
            let Some(theta) = mgu(&selected, &renamed.head) else { continue };
            if self.collect_trace {
                self.trace.push(TraceStep {
                    depth: step,
                    selected: selected.clone(),
                    clause: Some(ci),
                    bindings: theta.to_string(),
                });
            }
            let mut next: Vec<GoalAtom> = renamed
                .body
                .iter()
                .map(|b| (theta.apply_atom(b), Some(step)))
                .collect();
            next.extend(
                goal.iter()
                    .skip(1)
                    .map(|(a, p)| (theta.apply_atom(a), *p)),
            );
            branch.push((theta.apply_atom(&selected), parent));
            complete &= self.visit(next, branch);
            branch.pop();
        }
        complete
    }

    /// Walk the chain of direct ancestors of `selected`; a variant of it on
    /// that chain is recorded as loop evidence.
    fn check_loop(
        &mut self,
        selected: &Atom,
        parent: Option<usize>,
        branch: &[(Atom, Option<usize>)],
    ) {
        if self.loop_evidence.is_some() {
            return;
        }
        let mut chain = vec![selected.clone()];
        let mut cur = parent;
        while let Some(i) = cur {
            let (ancestor, up) = &branch[i];
            chain.push(ancestor.clone());
            if ancestor.pred == selected.pred && variant_eq(ancestor, selected) {
                chain.reverse();
                self.loop_evidence = Some(chain);
                return;
            }
            cur = *up;
        }
    }

    fn rename(&mut self, clause: &crate::syntax::Clause, avoid: &BTreeSet<String>) -> crate::syntax::Clause {
        // uniquely tag clause variables first so rename_apart never clashes
        // with variables generated at other depths
        self.fresh += 1;
        let n = self.fresh;
        let mut sub = Subst::new();
        for v in clause.vars() {
            sub = sub.compose(&Subst::singleton(v.clone(), Term::var(format!("{v}@{n}"))));
        }
        let tagged = crate::syntax::Clause {
            head: sub.apply_atom(&clause.head),
            body: clause.body.iter().map(|b| sub.apply_atom(b)).collect(),
        };
        rename_apart(&tagged, avoid)
    }
}

/// Maximal directed subsequences of a branch: chains in which every atom
/// was introduced by the resolution of the previous one.
pub fn directed_subsequences(branch: &[(Atom, Option<usize>)]) -> Vec<Vec<Atom>> {
    let n = branch.len();
    let mut has_child = vec![false; n];
    for (_, p) in branch {
        if let Some(i) = *p {
            has_child[i] = true;
        }
    }
    let mut out = Vec::new();
    for leaf in 0..n {
        if has_child[leaf] {
            continue;
        }
        let mut chain = Vec::new();
        let mut cur = Some(leaf);
        while let Some(i) = cur {
            chain.push(branch[i].0.clone());
            cur = branch[i].1;
        }
        chain.reverse();
        out.push(chain);
    }
    out
}

/// Ground terms over the program's symbols (plus one fresh constant) up to
/// `max_size` symbol occurrences.
pub fn herbrand_universe(p: &Program, max_size: usize) -> Vec<Term> {
    let mut sig: Vec<Symbol> = p.functors().into_iter().collect();
    if !sig.iter().any(|s| s.arity == 0) {
        sig.push(Symbol::new("c0", 0));
    }
    crate::orders::enumerate_terms(&sig, max_size)
}

/// Ground consequences of the program restricted to the universe: the
/// least fixpoint of the immediate-consequence operator where every
/// argument instantiation is drawn from `universe`.
pub fn ground_consequences(p: &Program, universe: &[Term]) -> BTreeSet<Atom> {
    let in_universe: BTreeSet<&Term> = universe.iter().collect();
    let mut set: BTreeSet<Atom> = BTreeSet::new();
    loop {
        let mut added = false;
        for clause in &p.clauses {
            for sub in match_body(&clause.body, Subst::new(), &set) {
                let head = sub.apply_atom(&clause.head);
                // ground leftover head variables over the universe
                let free: Vec<String> = head.vars().into_iter().collect();
                for grounding in groundings(&free, universe) {
                    let g = grounding.apply_atom(&head);
                    debug_assert!(g.is_ground());
                    if g.args.iter().all(|t| in_universe.contains(t)) && set.insert(g) {
                        added = true;
                    }
                }
            }
        }
        if !added {
            return set;
        }
    }
}

fn match_body(body: &[Atom], sub: Subst, set: &BTreeSet<Atom>) -> Vec<Subst> {
    let Some(first) = body.first() else {
        return vec![sub];
    };
    let goal = sub.apply_atom(first);
    let mut out = Vec::new();
    for fact in set.iter().filter(|f| f.pred == goal.pred) {
        if let Some(theta) = mgu(&goal, fact) {
            out.extend(match_body(&body[1..], sub.compose(&theta), set));
        }
    }
    out
}

fn groundings(vars: &[String], universe: &[Term]) -> Vec<Subst> {
    let Some((v, rest)) = vars.split_first() else {
        return vec![Subst::new()];
    };
    let mut out = Vec::new();
    for t in universe {
        for s in groundings(rest, universe) {
            out.push(s.compose(&Subst::singleton(v.clone(), t.clone())));
        }
    }
    out
}
