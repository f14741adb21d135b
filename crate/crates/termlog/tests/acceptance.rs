//! End-to-end acceptance checks over the shipped corpus and the ordering
//! machinery.  Each criterion prints one pass line; a failed assertion
//! marks the criterion as failed.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use termlog::acceptability::{wellmoded_check, ArgRelation, Demand, ModeError};
use termlog::interpreter::{ground_consequences, herbrand_universe, ld_explore, Outcome};
use termlog::orders::{
    char_fn, compare, erase_term, Comparison, NormDef, OrderSpec, PositionFamily, Precedence,
    RpoSpec,
};
use termlog::pipeline::{
    analyze, verify_certificate, AnalysisError, AnalysisMode, AnalysisOptions, ProofCertificate,
    Verdict,
};
use termlog::syntax::{parse_program, parse_term, ArgShape, Atom, Mode, Program, Symbol, Term};

fn corpus_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn load(name: &str) -> Program {
    let src = std::fs::read_to_string(corpus_path(name)).unwrap();
    parse_program(&src).unwrap()
}

fn prove(name: &str, mode: AnalysisMode) -> ProofCertificate {
    let opts = AnalysisOptions { mode, ..Default::default() };
    let report = analyze(&load(name), &opts).unwrap();
    match report.verdict {
        Verdict::Terminating(cert) => *cert,
        Verdict::Unknown { reason } => panic!("{name}: expected a proof, got: {reason}"),
    }
}

fn pass(n: u32, what: &str) {
    println!("criterion {n} ({what}): pass");
}

#[test]
fn criterion_01_permute() {
    let start = Instant::now();
    let cert = prove("permute.pl", AnalysisMode::Rigid);
    let elapsed = start.elapsed();

    let delete = Symbol::new("delete", 3);
    assert!(cert.relations.iter().any(|r| {
        r.relation == ArgRelation { pred: delete.clone(), greater: 2, smaller: 3, strict: true }
    }));
    let demands: Vec<&Demand> = cert.constraints.iter().flat_map(|c| &c.demands).collect();
    assert!(demands.contains(&&Demand::SubtermAt(Symbol::new(".", 2), 2)));
    assert!(demands.contains(&&Demand::MonotoneAt(delete.clone(), 2)));

    // the two decrease conditions, up to renaming
    let mutual: Vec<_> =
        cert.constraints.iter().filter(|c| c.justification != "layering").collect();
    assert_eq!(mutual.len(), 2);
    let perm = mutual
        .iter()
        .find(|c| c.constraint.head.pred == Symbol::new("permute", 2))
        .expect("recursive permute constraint");
    let txt = perm.constraint.to_string();
    assert!(txt.contains("delete(") && txt.contains("==>"), "conditional decrease: {txt}");
    let del = mutual
        .iter()
        .find(|c| c.constraint.head.pred == delete)
        .expect("recursive delete constraint");
    let txt = del.constraint.to_string();
    assert!(txt.contains('[') && txt.contains('|'), "list head/tail pattern: {txt}");

    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    pass(1, "permute");
}

#[test]
fn criterion_02_repeated_derivative() {
    let start = Instant::now();
    let cert = prove("derivative.pl", AnalysisMode::Rigid);
    let elapsed = start.elapsed();

    let OrderSpec::Rpo(rpo) = &cert.order.base else {
        panic!("expected a path-ordering certificate, got {:?}", cert.order.base)
    };
    for below in ["+", "*", "u", "0", "1"] {
        assert!(rpo.precedence.gt("der", below), "der must be above {below}");
    }

    let rel = cert
        .relations
        .iter()
        .find(|r| r.relation.pred == Symbol::new("d", 2))
        .expect("interargument relation for d/2");
    assert_eq!((rel.relation.greater, rel.relation.smaller), (1, 2));
    let ds: Vec<String> = rel.demands.iter().map(|d| d.to_string()).collect();
    assert_eq!(ds.len(), 5, "{ds:?}");
    assert!(ds.iter().any(|d| d == "der(u) > 1"), "{ds:?}");
    assert!(ds.iter().any(|d| d.ends_with("der(t1) > 0")), "{ds:?}");
    assert!(ds.iter().any(|d| d.contains("==>") && d.contains("der(t1+t2) > t3+t4")), "{ds:?}");
    assert!(ds.iter().any(|d| d.contains("==>") && d.contains("der(t1*t2) >")), "{ds:?}");
    assert!(ds.iter().any(|d| d.contains("==>") && d.contains("der(der(t1)) >")), "{ds:?}");

    assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    pass(2, "repeated derivative");
}

#[test]
fn criterion_03_permute_two_appends_wellmoded() {
    let cert = prove("permute_kr.pl", AnalysisMode::WellModed);
    assert_eq!(cert.conjunctions.len(), 1);
    let gen = &cert.conjunctions[0].generalized;
    assert_eq!(gen.len(), 2);

    // base case: ap2([],[H|L],[H|L]), ap1([],L,L).
    let base = gen.iter().find(|g| g.body.is_empty()).expect("unfolded base case");
    assert_eq!(base.head.len(), 2);
    let (a2, a1) = (&base.head[0], &base.head[1]);
    assert_eq!(a2.pred, Symbol::new("ap2", 3));
    assert_eq!(a1.pred, Symbol::new("ap1", 3));
    assert_eq!(a2.args[0], Term::nil());
    assert_eq!(a1.args[0], Term::nil());
    assert_eq!(a2.args[1], a2.args[2]);
    assert_eq!(a1.args[1], a1.args[2]);
    assert!(matches!(&a2.args[1], Term::Comp(s, _) if s == &Symbol::new(".", 2)));

    // recursive case: both heads push the same element, the body recurses
    let rec = gen.iter().find(|g| !g.body.is_empty()).expect("unfolded recursive case");
    assert_eq!(rec.head.len(), 2);
    assert_eq!(rec.body.len(), 2);
    assert_eq!(rec.body[0].pred, Symbol::new("ap2", 3));
    assert_eq!(rec.body[1].pred, Symbol::new("ap1", 3));
    for h in &rec.head {
        assert!(matches!(&h.args[0], Term::Comp(s, _) if s == &Symbol::new(".", 2)));
    }
    pass(3, "permute via two appends, well-moded");
}

#[test]
fn criterion_04_dis_con_negative_control() {
    let report = analyze(&load("discon.pl"), &AnalysisOptions::default()).unwrap();
    assert!(
        matches!(report.verdict, Verdict::Unknown { .. }),
        "dis-con must not be claimed terminating"
    );
    pass(4, "dis-con stays unknown");
}

#[test]
fn criterion_05_not_well_moded_refused() {
    let p = parse_program(
        "%% mode: p(in).\n\
         %% mode: q(in).\n\
         p(a) :- q(X).\n\
         q(b).\n",
    )
    .unwrap();
    assert!(matches!(wellmoded_check(&p), Err(ModeError::NotWellModed { .. })));
    let opts = AnalysisOptions { mode: AnalysisMode::WellModed, ..Default::default() };
    assert!(matches!(analyze(&p, &opts), Err(AnalysisError::Mode(ModeError::NotWellModed { .. }))));
    pass(5, "ill-moded program refused");
}

#[test]
fn criterion_06_characteristic_values() {
    // s = f(a, g(b, h(c, X))), positions f:{1,2}, g:{2}, h:{1}
    let s = parse_term("f(a, g(b, h(c, X)))").unwrap();
    let mut fam = PositionFamily::new();
    fam.insert(Symbol::new("f", 2), 1);
    fam.insert(Symbol::new("f", 2), 2);
    fam.insert(Symbol::new("g", 2), 2);
    fam.insert(Symbol::new("h", 2), 1);
    let values: Vec<u8> = [vec![1], vec![2, 1], vec![2, 2], vec![2, 2, 1], vec![2, 2, 2]]
        .iter()
        .map(|p| char_fn(&s, p, &fam).unwrap())
        .collect();
    assert_eq!(values, vec![1, 0, 1, 1, 0]);
    pass(6, "characteristic function values");
}

#[test]
fn criterion_07_list_length_norm() {
    let norm = NormDef::list_length();
    let a = parse_term("[[1,2,3],4]").unwrap();
    let b = parse_term("[1,2,3]").unwrap();
    assert_eq!(norm.value(&a), termlog::orders::LinExpr::constant(2));
    assert_eq!(norm.value(&b), termlog::orders::LinExpr::constant(3));
    assert_eq!(norm.compare(&a, &b), Comparison::Less);
    pass(7, "list-length norm values");
}

/// Signature used by the property and sanity suites: f/2, g/1, a, b.
fn test_signature() -> Vec<Symbol> {
    vec![Symbol::new("f", 2), Symbol::new("g", 1), Symbol::new("a", 0), Symbol::new("b", 0)]
}

/// Ground pool plus derived one-variable terms (each ground subterm
/// occurrence replaced by a variable).
fn var_pool(ground: &[Term]) -> Vec<Term> {
    let mut out = Vec::new();
    for (i, t) in ground.iter().enumerate().step_by(3) {
        for (path, _) in t.subterm_paths() {
            if path.is_empty() {
                continue;
            }
            out.push(t.replace_at(&path, Term::var(format!("X{}", i % 2))).unwrap());
        }
    }
    out
}

fn concrete_specs() -> Vec<OrderSpec> {
    vec![
        OrderSpec::NormBased(NormDef::list_length()),
        OrderSpec::NormBased(NormDef::term_size()),
        OrderSpec::Rpo(RpoSpec::with_precedence(Precedence::from_descending(&[
            "f", "g", "a", "b",
        ]))),
    ]
}

#[test]
fn criterion_08_lemma_property_suites() {
    let sig = test_signature();
    let pool = termlog::orders::enumerate_terms(&sig, 7);
    assert!(pool.len() >= 500, "pool has only {} terms", pool.len());
    let sig_set: BTreeSet<Symbol> = sig.iter().cloned().collect();

    // prefix-zero: once the characteristic value is 0 on a prefix, every
    // extension is 0 as well
    let mut fam = PositionFamily::new();
    fam.insert(Symbol::new("f", 2), 1);
    fam.insert(Symbol::new("g", 1), 1);
    for s in pool.iter().step_by(5) {
        for (path, _) in s.subterm_paths() {
            if char_fn(s, &path, &fam) == Ok(0) {
                for (ext, _) in s.subterm_paths() {
                    if ext.len() > path.len() && ext[..path.len()] == path[..] {
                        assert_eq!(char_fn(s, &ext, &fam), Ok(0), "prefix-zero on {s} at {ext:?}");
                    }
                }
            }
        }
    }

    let vpool = var_pool(&pool[..200.min(pool.len())]);
    assert!(!vpool.is_empty());
    for spec in concrete_specs() {
        let monotone = spec.monotone_family(&sig_set);
        let subterm = spec.subterm_family(&sig_set);

        // monotone positions: replacing a value-1 occurrence preserves Greater
        let (t1, t2) = (parse_term("g(g(a))").unwrap(), parse_term("a").unwrap());
        if compare(&spec, &t1, &t2) == Comparison::Greater {
            for s in vpool.iter().step_by(4) {
                for (path, _) in s.var_occurrences() {
                    if char_fn(s, &path, &monotone) == Ok(1) {
                        let s1 = s.replace_at(&path, t1.clone()).unwrap();
                        let s2 = s.replace_at(&path, t2.clone()).unwrap();
                        assert_eq!(
                            compare(&spec, &s1, &s2),
                            Comparison::Greater,
                            "monotone lemma on {s} at {path:?}"
                        );
                    }
                }
            }
        }

        // subterm positions: the whole term exceeds a value-1 subterm
        for s in pool.iter().step_by(7) {
            for (path, sub) in s.subterm_paths() {
                if !path.is_empty() && char_fn(s, &path, &subterm) == Ok(1) {
                    assert_eq!(
                        compare(&spec, s, sub),
                        Comparison::Greater,
                        "subterm lemma on {s} at {path:?}"
                    );
                }
            }
        }

        // S-set occurrences are relevant variable occurrences
        for s in vpool.iter().step_by(9) {
            let vrel = termlog::orders::vrel(&spec, s);
            let s_vars = termlog::orders::s_set(&spec, s);
            for (path, v) in s.var_occurrences() {
                if s_vars.contains(&v) {
                    assert!(vrel.contains(&path), "S-set occurrence {v} at {path:?} of {s}");
                }
            }
        }
    }

    // under a fully monotone order with the full subterm property,
    // rigidity degenerates to groundness
    let full = OrderSpec::NormBased(NormDef::term_size());
    for s in pool.iter().take(100).chain(vpool.iter()) {
        assert_eq!(termlog::orders::is_rigid_term(&full, s), s.is_ground(), "rigidity of {s}");
    }

    // balance norm: value 1 exactly on unbalanced trees; tree(a,X,X) is
    // rigid even though both occurrences of X are relevant
    let bal = |t: &Term| -> i64 {
        match t {
            Term::Comp(s, args) if *s == Symbol::new("tree", 3) && args[1] != args[2] => 1,
            _ => 0,
        }
    };
    let bal_cmp = |x: &Term, y: &Term| match bal(x) - bal(y) {
        d if d > 0 => Comparison::Greater,
        0 => Comparison::EqualUnderOrder,
        _ => Comparison::Less,
    };
    let fixture = parse_term("tree(a, X, X)").unwrap();
    let repl: Vec<Term> =
        vec![parse_term("a").unwrap(), parse_term("g(a)").unwrap(), parse_term("b").unwrap()];
    // rigid: every substitution keeps both subtrees syntactically equal
    for t in &repl {
        let theta: Term = {
            let sub = termlog::syntax::Subst::singleton("X", t.clone());
            sub.apply(&fixture)
        };
        assert_eq!(bal_cmp(&theta, &fixture), Comparison::EqualUnderOrder);
    }
    let vrel = termlog::orders::vrel_brute(bal_cmp, &fixture, &repl);
    assert_eq!(vrel, BTreeSet::from([vec![2], vec![3]]), "both occurrences are relevant");
    pass(8, "ordering lemma property suites");
}

#[test]
fn criterion_09_order_sanity() {
    let sig = test_signature();
    let all = termlog::orders::enumerate_terms(&sig, 6);
    let small = termlog::orders::enumerate_terms(&sig, 4);
    for spec in concrete_specs() {
        // irreflexive on every term, asymmetric on every pair
        for (i, s) in all.iter().enumerate() {
            assert_ne!(compare(&spec, s, s), Comparison::Greater, "irreflexivity on {s}");
            for t in all.iter().skip(i + 1) {
                if compare(&spec, s, t) == Comparison::Greater {
                    assert_ne!(compare(&spec, t, s), Comparison::Greater, "asymmetry on {s},{t}");
                }
            }
        }
        // transitive on all small triples
        for s in &small {
            for t in &small {
                if compare(&spec, s, t) != Comparison::Greater {
                    continue;
                }
                for u in &small {
                    if compare(&spec, t, u) == Comparison::Greater {
                        assert_eq!(
                            compare(&spec, s, u),
                            Comparison::Greater,
                            "transitivity on {s},{t},{u}"
                        );
                    }
                }
            }
        }
        // acyclic: the strict part admits a consistent height assignment
        // (any cycle would make some term strictly exceed itself by
        // transitivity, contradicting the checks above; verify directly
        // that no term is strictly below a strictly smaller one)
        for s in &all {
            for t in &all {
                if compare(&spec, s, t) == Comparison::Greater
                    && compare(&spec, t, s) == Comparison::Greater
                {
                    panic!("two-cycle between {s} and {t}");
                }
            }
        }
    }
    pass(9, "strict orders are irreflexive, asymmetric, transitive, acyclic");
}

fn manifest_rows() -> Vec<(String, AnalysisMode, String)> {
    let text = std::fs::read_to_string(corpus_path("manifest.txt")).unwrap();
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            let mode = match f[1] {
                "rigid" => AnalysisMode::Rigid,
                "wellmoded" => AnalysisMode::WellModed,
                other => panic!("bad mode {other}"),
            };
            (f[0].to_string(), mode, f[2].to_string())
        })
        .collect()
}

/// Query shapes for a program: from its query directive in rigid mode,
/// from the first mode declaration otherwise.
fn query_shapes(p: &Program, mode: AnalysisMode) -> (Symbol, Vec<ArgShape>) {
    match mode {
        AnalysisMode::Rigid => {
            let q = &p.queries[0];
            (q.pred.clone(), q.shapes.clone())
        }
        AnalysisMode::WellModed => {
            let m = &p.modes[0];
            let shapes = m
                .modes
                .iter()
                .map(|io| match io {
                    Mode::In => ArgShape::Ground,
                    Mode::Out => ArgShape::Free,
                })
                .collect();
            (m.pred.clone(), shapes)
        }
    }
}

/// Deterministic i-th concrete query matching the shapes.
fn concretize(pool: &[Term], pred: &Symbol, shapes: &[ArgShape], i: usize) -> Atom {
    let args = shapes
        .iter()
        .enumerate()
        .map(|(k, sh)| match sh {
            ArgShape::Ground | ArgShape::Any => pool[(i * 7 + k * 3) % pool.len()].clone(),
            ArgShape::NilList | ArgShape::NilListGround => {
                let len = i % 4;
                Term::list((0..len).map(|j| pool[(i * 5 + j) % pool.len()].clone()).collect())
            }
            ArgShape::Free => Term::var(format!("V{k}")),
        })
        .collect();
    Atom::new(pred.clone(), args)
}

/// Compare two ground terms under a certificate's order, respecting its
/// ignored positions.
fn cert_greater(cert: &ProofCertificate, a: &Term, b: &Term) -> bool {
    match &cert.order.base {
        OrderSpec::NormBased(n) => n.compare(a, b) == Comparison::Greater,
        spec => {
            let ea = erase_term(a, &cert.order.ignored.funs);
            let eb = erase_term(b, &cert.order.ignored.funs);
            compare(spec, &ea, &eb) == Comparison::Greater
        }
    }
}

#[test]
fn criterion_10_proofs_agree_with_execution() {
    let mut proofs = 0;
    for (file, mode, _expected) in manifest_rows() {
        let p = load(&file);
        let opts = AnalysisOptions { mode, ..Default::default() };
        let report = analyze(&p, &opts).unwrap();
        let Verdict::Terminating(cert) = report.verdict else { continue };
        proofs += 1;

        // twenty concrete queries per proof, none may hit the depth bound
        let pool = herbrand_universe(&p, 6);
        let (pred, shapes) = query_shapes(&p, mode);
        for i in 0..20 {
            let goal = concretize(&pool, &pred, &shapes, i);
            let e = ld_explore(&p, std::slice::from_ref(&goal), 500);
            assert_eq!(e.outcome, Outcome::FiniteTree, "{file}: {goal} hit the depth bound");
        }

        // every ground consequence satisfies the certified relations
        let universe = herbrand_universe(&p, 4);
        let model = ground_consequences(&p, &universe);
        for rel in &cert.relations {
            for atom in model.iter().filter(|a| a.pred == rel.relation.pred) {
                let g = &atom.args[rel.relation.greater - 1];
                let s = &atom.args[rel.relation.smaller - 1];
                assert!(
                    cert_greater(&cert, g, s),
                    "{file}: {atom} violates {} under the certified order",
                    rel.relation
                );
            }
        }
    }
    assert!(proofs >= 12, "only {proofs} corpus proofs found");
    pass(10, "proofs agree with bounded execution and ground models");
}

#[test]
fn criterion_11_certificate_round_trip() {
    for (file, mode, _expected) in manifest_rows() {
        let p = load(&file);
        let opts = AnalysisOptions { mode, ..Default::default() };
        let report = analyze(&p, &opts).unwrap();
        let Verdict::Terminating(cert) = report.verdict else { continue };
        let json = serde_json::to_string(cert.as_ref()).unwrap();
        let reloaded: ProofCertificate = serde_json::from_str(&json).unwrap();
        verify_certificate(&p, &reloaded).unwrap_or_else(|e| panic!("{file}: {e}"));
    }

    // a mutated certificate must be rejected with the failing demand named
    let p = load("permute.pl");
    let report = analyze(&p, &AnalysisOptions::default()).unwrap();
    let Verdict::Terminating(mut cert) = report.verdict else { panic!("permute must prove") };
    let OrderSpec::NormBased(n) = &mut cert.order.base else { panic!("expected a norm order") };
    // drop the counted subterm position of the list constructor
    for rule in n.rules.values_mut() {
        rule.counted.clear();
    }
    let err = verify_certificate(&p, &cert).expect_err("mutated certificate must fail");
    assert!(err.contains("demand"), "error must pinpoint the failing demand: {err}");
    pass(11, "certificate round-trip and tamper detection");
}
