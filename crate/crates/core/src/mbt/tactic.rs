//! Testing tactics: rules that partition a test specification into more
//! demanding child specifications.
//!
//! Four tactics ship, covering the set/integer/atom constructs the model's
//! transitions use: set-extension (`X = {}`, `|X| = 1`, `|X| > 1`), numeric
//! boundary over a declared integer domain, DNF split of the effective
//! predicate, and a two-way membership split. Every tactic produces a true
//! partition — children are pairwise disjoint and jointly cover the parent.

use super::pred::{dnf, int, var, CmpOp, Predicate, Term, Value};
use super::{MbtError, TransitionSpec, VarDecl};
use std::fmt;

/// Cap on DNF expansion; desk-scale predicates stay far below it.
const DNF_CAP: usize = 64;

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Tactic {
    /// For a set variable X: `{X = {}}`, `{|X| = 1}`, `{|X| > 1}`.
    SetExtension { var: String },
    /// For an integer variable v with domain `[lo, hi]`: `{v = lo}`,
    /// `{lo < v < hi}`, `{v = hi}`.
    NumericBoundary { var: String },
    /// Split the parent's effective predicate into its DNF disjuncts,
    /// made mutually exclusive in first-match order.
    Dnf,
    /// For an element term x and set variable S: `{x in S}`, `{x not in S}`.
    MembershipSplit { element: Term, set: String },
}

impl Tactic {
    /// Parse the CLI spelling: `setExtension:VAR`, `boundary:VAR`, `dnf`,
    /// `member:ELEM:SETVAR` (ELEM is a variable name, or `@name` for an
    /// atom constant).
    pub fn parse(s: &str) -> Result<Tactic, MbtError> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["setExtension", v] => Ok(Tactic::SetExtension { var: v.to_string() }),
            ["boundary", v] => Ok(Tactic::NumericBoundary { var: v.to_string() }),
            ["dnf"] => Ok(Tactic::Dnf),
            ["member", elem, set] => {
                let element = match elem.strip_prefix('@') {
                    Some(name) => Term::Lit(Value::atom(name)),
                    None => var(*elem),
                };
                Ok(Tactic::MembershipSplit {
                    element,
                    set: set.to_string(),
                })
            }
            _ => Err(MbtError::Decode {
                what: "tactic",
                detail: format!("unrecognized tactic {s:?}"),
            }),
        }
    }
}

impl fmt::Display for Tactic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tactic::SetExtension { var } => write!(f, "setExtension:{var}"),
            Tactic::NumericBoundary { var } => write!(f, "boundary:{var}"),
            Tactic::Dnf => write!(f, "dnf"),
            Tactic::MembershipSplit { element, set } => match element {
                Term::Lit(Value::Atom(a)) => write!(f, "member:@{a}:{set}"),
                other => write!(f, "member:{other}:{set}"),
            },
        }
    }
}

fn find_decl<'a>(
    t: &'a TransitionSpec,
    tactic: &Tactic,
    name: &str,
) -> Result<&'a VarDecl, MbtError> {
    t.decls()
        .find(|d| d.name == name)
        .ok_or_else(|| MbtError::TacticMismatch {
            tactic: tactic.to_string(),
            var: name.to_string(),
            detail: "variable is not declared by the transition".into(),
        })
}

fn require_kind(tactic: &Tactic, decl: &VarDecl, kind: &str) -> Result<(), MbtError> {
    if decl.domain.iter().all(|v| v.kind() == kind) && !decl.domain.is_empty() {
        Ok(())
    } else {
        Err(MbtError::TacticMismatch {
            tactic: tactic.to_string(),
            var: decl.name.clone(),
            detail: format!("needs a {kind}-valued domain"),
        })
    }
}

impl Tactic {
    /// The characteristic predicates this tactic contributes when applied
    /// to a specification whose effective predicate is `parent_effective`.
    pub fn child_predicates(
        &self,
        transition: &TransitionSpec,
        parent_effective: &Predicate,
    ) -> Result<Vec<Predicate>, MbtError> {
        match self {
            Tactic::SetExtension { var: name } => {
                let decl = find_decl(transition, self, name)?;
                require_kind(self, decl, "set")?;
                Ok(vec![
                    Predicate::IsEmpty(var(name)),
                    Predicate::eq(var(name).card(), int(1)),
                    Predicate::Cmp(var(name).card(), CmpOp::Gt, int(1)),
                ])
            }
            Tactic::NumericBoundary { var: name } => {
                let decl = find_decl(transition, self, name)?;
                require_kind(self, decl, "int")?;
                let values: Vec<i64> = decl
                    .domain
                    .iter()
                    .map(|v| match v {
                        Value::Int(i) => *i,
                        _ => unreachable!("kind checked above"),
                    })
                    .collect();
                let lo = *values.iter().min().expect("domain is non-empty");
                let hi = *values.iter().max().expect("domain is non-empty");
                if lo >= hi {
                    return Err(MbtError::TacticMismatch {
                        tactic: self.to_string(),
                        var: name.clone(),
                        detail: format!("domain [{lo}, {hi}] has no interior to split"),
                    });
                }
                Ok(vec![
                    Predicate::eq(var(name), int(lo)),
                    Predicate::and([
                        Predicate::Cmp(var(name), CmpOp::Gt, int(lo)),
                        Predicate::Cmp(var(name), CmpOp::Lt, int(hi)),
                    ]),
                    Predicate::eq(var(name), int(hi)),
                ])
            }
            Tactic::Dnf => {
                let disjuncts = dnf(parent_effective, DNF_CAP)?;
                if disjuncts.is_empty() {
                    // An unsatisfiable parent partitions into one
                    // unsatisfiable child.
                    return Ok(vec![Predicate::False]);
                }
                // First-match exclusion keeps the children disjoint even
                // when the raw disjuncts overlap.
                Ok(disjuncts
                    .iter()
                    .enumerate()
                    .map(|(i, d)| {
                        let mut conjuncts: Vec<Predicate> = disjuncts[..i]
                            .iter()
                            .map(|earlier| earlier.clone().not())
                            .collect();
                        conjuncts.push(d.clone());
                        if conjuncts.len() == 1 {
                            conjuncts.pop().expect("one conjunct")
                        } else {
                            Predicate::And(conjuncts)
                        }
                    })
                    .collect())
            }
            Tactic::MembershipSplit { element, set } => {
                let decl = find_decl(transition, self, set)?;
                require_kind(self, decl, "set")?;
                if let Term::Var(name) = element {
                    find_decl(transition, self, name)?;
                }
                Ok(vec![
                    Predicate::Member(element.clone(), var(set)),
                    Predicate::Member(element.clone(), var(set)).not(),
                ])
            }
        }
    }
}
