//! End-to-end analysis driver: call-set abstraction (or mode analysis),
//! constraint generation, reduction, interargument-relation discharge,
//! ordering search, and certificate construction and verification.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acceptability::{
    discharge_conjunction, discharge_relation, generate_constraints, output_positions,
    reduce_constraint, wellmoded_check, ArgRelation, ConjunctionObligation, Demand,
    DecreaseConstraint, GeneralizedClause, ModeError, unfold_conjunction,
};
use crate::callset::{infer_call_set, rigidity_requirements, AbstractValue, CallSet, CallSetError};
use crate::orders::{is_rigid_atom, IgnoredPositions};
use crate::solver::{check_demand, solve_with, CandidatePolicy, ConcreteOrder, SolveFailure};
use crate::syntax::{Atom, Program, Term};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisMode {
    /// Bound the call set from query directives; orders must be rigid on it.
    Rigid,
    /// Use mode declarations; orders must not inspect output positions.
    WellModed,
}

#[derive(Clone, Debug)]
pub struct AnalysisOptions {
    pub mode: AnalysisMode,
    pub budget: usize,
    pub policy: CandidatePolicy,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            mode: AnalysisMode::Rigid,
            budget: crate::solver::DEFAULT_BUDGET,
            policy: CandidatePolicy::default(),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error(transparent)]
    CallSet(#[from] CallSetError),
    #[error(transparent)]
    Mode(#[from] ModeError),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstraintRecord {
    pub constraint: DecreaseConstraint,
    pub justification: String,
    pub demands: Vec<Demand>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelationRecord {
    pub relation: ArgRelation,
    pub demands: Vec<Demand>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConjunctionRecord {
    pub obligation: ConjunctionObligation,
    pub generalized: Vec<GeneralizedClause>,
    pub demands: Vec<Demand>,
}

/// Everything needed to re-check a termination proof.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProofCertificate {
    pub mode: AnalysisMode,
    pub call_set: Option<CallSet>,
    /// Invariance required before reduction (rigidity or output positions).
    pub base_ignored: IgnoredPositions,
    pub order: ConcreteOrder,
    pub constraints: Vec<ConstraintRecord>,
    pub relations: Vec<RelationRecord>,
    pub conjunctions: Vec<ConjunctionRecord>,
    pub candidates_tried: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Terminating(Box<ProofCertificate>),
    Unknown { reason: String },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub verdict: Verdict,
    pub warnings: Vec<String>,
}

/// Run the full analysis.  Input problems (missing directives, mode errors,
/// undefined predicates) are errors; an analysis that merely fails to find
/// a proof reports `Unknown`.
pub fn analyze(program: &Program, opts: &AnalysisOptions) -> Result<AnalysisReport, AnalysisError> {
    let (call_set, base_ignored) = match opts.mode {
        AnalysisMode::Rigid => {
            let cs = infer_call_set(program)?;
            let ig = rigidity_requirements(&cs);
            (Some(cs), ig)
        }
        AnalysisMode::WellModed => {
            wellmoded_check(program)?;
            (None, output_positions(program)?)
        }
    };

    let (constraints, warnings) =
        generate_constraints(program, &base_ignored, call_set.as_ref());

    let mut records = Vec::new();
    let mut relations: Vec<ArgRelation> = Vec::new();
    let mut conjunctions: Vec<ConjunctionObligation> = Vec::new();
    for c in &constraints {
        match reduce_constraint(c, &base_ignored) {
            Ok(red) => {
                for r in red.relations {
                    if !relations.contains(&r) {
                        relations.push(r);
                    }
                }
                for ob in red.conjunctions {
                    if !conjunctions.contains(&ob) {
                        conjunctions.push(ob);
                    }
                }
                records.push(ConstraintRecord {
                    constraint: c.clone(),
                    justification: red.justification,
                    demands: red.demands,
                });
            }
            Err(e) => {
                return Ok(AnalysisReport {
                    verdict: Verdict::Unknown { reason: format!("constraint \"{c}\": {e}") },
                    warnings,
                });
            }
        }
    }

    let relation_records: Vec<RelationRecord> = relations
        .iter()
        .map(|r| RelationRecord { relation: r.clone(), demands: discharge_relation(r, program) })
        .collect();
    let mut conjunction_records = Vec::new();
    for ob in &conjunctions {
        match discharge_conjunction(ob, program) {
            Ok(demands) => conjunction_records.push(ConjunctionRecord {
                obligation: ob.clone(),
                generalized: unfold_conjunction(&ob.atoms, program),
                demands,
            }),
            Err(e) => {
                return Ok(AnalysisReport {
                    verdict: Verdict::Unknown { reason: e.to_string() },
                    warnings,
                });
            }
        }
    }

    let mut demands: Vec<Demand> = Vec::new();
    let mut seen = BTreeSet::new();
    for d in records
        .iter()
        .flat_map(|r| &r.demands)
        .chain(relation_records.iter().flat_map(|r| &r.demands))
        .chain(conjunction_records.iter().flat_map(|r| &r.demands))
    {
        if seen.insert(d.clone()) {
            demands.push(d.clone());
        }
    }

    match solve_with(program, &base_ignored, &demands, opts.budget, opts.policy) {
        Ok(res) => Ok(AnalysisReport {
            verdict: Verdict::Terminating(Box::new(ProofCertificate {
                mode: opts.mode,
                call_set,
                base_ignored,
                order: res.order,
                constraints: records,
                relations: relation_records,
                conjunctions: conjunction_records,
                candidates_tried: res.tried,
            })),
            warnings,
        }),
        Err(e @ SolveFailure::Inconsistent(_)) | Err(e @ SolveFailure::NoCandidate { .. }) => {
            Ok(AnalysisReport {
                verdict: Verdict::Unknown { reason: e.to_string() },
                warnings,
            })
        }
    }
}

/// Independently re-check a certificate against the program.  Every step is
/// recomputed; the first discrepancy is reported.
pub fn verify_certificate(program: &Program, cert: &ProofCertificate) -> Result<(), String> {
    // 1. the claimed invariance base must match the program
    let base = match cert.mode {
        AnalysisMode::Rigid => {
            let cs = infer_call_set(program).map_err(|e| e.to_string())?;
            match &cert.call_set {
                Some(claimed) if *claimed == cs => {}
                _ => return Err("certificate call set does not match the program".into()),
            }
            rigidity_requirements(&cs)
        }
        AnalysisMode::WellModed => {
            wellmoded_check(program).map_err(|e| e.to_string())?;
            output_positions(program).map_err(|e| e.to_string())?
        }
    };
    if base != cert.base_ignored {
        return Err("certificate invariance base does not match the program".into());
    }
    // the order must be at least as invariant as the base requires
    for (sym, set) in &base.preds.sets {
        for &p in set {
            if !cert.order.ignored.preds.contains(sym, p) {
                return Err(format!("order is not invariant at {sym} position {p}"));
            }
        }
    }
    for (sym, set) in &base.funs.sets {
        for &p in set {
            if !cert.order.ignored.funs.contains(sym, p) {
                return Err(format!("order is not invariant at {sym} position {p}"));
            }
        }
    }

    // 2. sampled rigidity of the call set under the order
    if let Some(cs) = &cert.call_set {
        for (pred, vals) in &cs.calls {
            let sample = sample_atom(pred, vals);
            if !is_rigid_atom(&cert.order.base, &cert.order.ignored, &sample) {
                return Err(format!("call pattern for {pred} is not rigid under the order"));
            }
        }
    }

    // 3. regenerate constraints and re-reduce
    let (constraints, _) = generate_constraints(program, &base, cert.call_set.as_ref());
    if constraints.len() != cert.constraints.len() {
        return Err(format!(
            "certificate lists {} constraints, program yields {}",
            cert.constraints.len(),
            constraints.len()
        ));
    }
    let mut relations = Vec::new();
    let mut conjunctions = Vec::new();
    let mut demands = Vec::new();
    for c in &constraints {
        let red = reduce_constraint(c, &base).map_err(|e| e.to_string())?;
        relations.extend(red.relations);
        conjunctions.extend(red.conjunctions);
        demands.extend(red.demands);
    }
    for r in &relations {
        demands.extend(discharge_relation(r, program));
    }
    for ob in &conjunctions {
        demands.extend(discharge_conjunction(ob, program).map_err(|e| e.to_string())?);
    }

    // 4. every demand must hold under the certified order
    for d in &demands {
        if !check_demand(&cert.order, d) {
            return Err(format!("demand fails under the order: {d}"));
        }
    }
    Ok(())
}

/// A concrete representative of an abstract atom, used for rigidity spot
/// checks: ground positions get ground terms, free and unconstrained
/// positions fresh variables, list positions lists of the matching shape.
pub fn sample_atom(pred: &crate::syntax::Symbol, vals: &[AbstractValue]) -> Atom {
    let args = vals
        .iter()
        .enumerate()
        .map(|(i, v)| match v {
            AbstractValue::Ground => Term::app("g", vec![Term::constant("c0")]),
            AbstractValue::NilListGround => {
                Term::list(vec![Term::constant("c0"), Term::constant("c1")])
            }
            AbstractValue::NilListAny => {
                Term::list(vec![Term::var(format!("E{i}")), Term::var(format!("F{i}"))])
            }
            AbstractValue::Free | AbstractValue::Any => Term::var(format!("V{i}")),
        })
        .collect();
    Atom { pred: pred.clone(), args }
}
