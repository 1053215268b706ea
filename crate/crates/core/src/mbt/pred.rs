//! Values, terms and characteristic predicates for the test-template
//! engine.
//!
//! Predicates are expression trees over declared variables: boolean
//! connectives, equality, membership, emptiness and integer/cardinality
//! comparisons. Terms add the set machinery the model's postconditions
//! need (union, difference, tuples and a small map-over-set comprehension).
//! Everything evaluates under a total binding of variables to [`Value`]s.

use super::MbtError;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A ground value: booleans, integers, atoms, sets, sequences and tuples.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Value {
    Bool(bool),
    Int(i64),
    Atom(String),
    Set(BTreeSet<Value>),
    Seq(Vec<Value>),
    Tuple(Vec<Value>),
}

impl Value {
    pub fn atom(s: impl Into<String>) -> Value {
        Value::Atom(s.into())
    }

    pub fn set(items: impl IntoIterator<Item = Value>) -> Value {
        Value::Set(items.into_iter().collect())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Atom(_) => "atom",
            Value::Set(_) => "set",
            Value::Seq(_) => "seq",
            Value::Tuple(_) => "tuple",
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Atom(a) => write!(f, "'{a}'"),
            Value::Set(items) => {
                write!(f, "{{")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{item}")?;
                }
                write!(f, "}}")
            }
            Value::Seq(items) | Value::Tuple(items) => {
                let (open, close) = if matches!(self, Value::Seq(_)) {
                    ("[", "]")
                } else {
                    ("(", ")")
                };
                write!(f, "{open}")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{item}")?;
                }
                write!(f, "{close}")
            }
        }
    }
}

/// A total assignment of variable names to values.
pub type Binding = BTreeMap<String, Value>;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Term {
    Var(String),
    Lit(Value),
    Union(Box<Term>, Box<Term>),
    Diff(Box<Term>, Box<Term>),
    Card(Box<Term>),
    Tuple(Vec<Term>),
    /// `{ body | var ∈ over }`
    MapOver {
        var: String,
        over: Box<Term>,
        body: Box<Term>,
    },
}

pub fn var(name: impl Into<String>) -> Term {
    Term::Var(name.into())
}

pub fn lit(value: Value) -> Term {
    Term::Lit(value)
}

pub fn atom(name: impl Into<String>) -> Term {
    Term::Lit(Value::atom(name))
}

pub fn int(i: i64) -> Term {
    Term::Lit(Value::Int(i))
}

impl Term {
    pub fn union(self, other: Term) -> Term {
        Term::Union(Box::new(self), Box::new(other))
    }

    pub fn diff(self, other: Term) -> Term {
        Term::Diff(Box::new(self), Box::new(other))
    }

    pub fn card(self) -> Term {
        Term::Card(Box::new(self))
    }

    pub fn map_over(var: impl Into<String>, over: Term, body: Term) -> Term {
        Term::MapOver {
            var: var.into(),
            over: Box::new(over),
            body: Box::new(body),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Predicate {
    True,
    False,
    Not(Box<Predicate>),
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
    Implies(Box<Predicate>, Box<Predicate>),
    Eq(Term, Term),
    Member(Term, Term),
    IsEmpty(Term),
    Cmp(Term, CmpOp, Term),
}

impl Predicate {
    pub fn and(ps: impl IntoIterator<Item = Predicate>) -> Predicate {
        Predicate::And(ps.into_iter().collect())
    }

    pub fn or(ps: impl IntoIterator<Item = Predicate>) -> Predicate {
        Predicate::Or(ps.into_iter().collect())
    }

    pub fn not(self) -> Predicate {
        Predicate::Not(Box::new(self))
    }

    pub fn implies(self, then: Predicate) -> Predicate {
        Predicate::Implies(Box::new(self), Box::new(then))
    }

    pub fn eq(a: Term, b: Term) -> Predicate {
        Predicate::Eq(a, b)
    }
}

fn term_free_vars(term: &Term, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match term {
        Term::Var(name) => {
            if !bound.contains(name) {
                out.insert(name.clone());
            }
        }
        Term::Lit(_) => {}
        Term::Union(a, b) | Term::Diff(a, b) => {
            term_free_vars(a, bound, out);
            term_free_vars(b, bound, out);
        }
        Term::Card(t) => term_free_vars(t, bound, out),
        Term::Tuple(ts) => ts.iter().for_each(|t| term_free_vars(t, bound, out)),
        Term::MapOver { var, over, body } => {
            term_free_vars(over, bound, out);
            bound.push(var.clone());
            term_free_vars(body, bound, out);
            bound.pop();
        }
    }
}

/// Free variables of a predicate (comprehension-bound names excluded).
pub fn free_vars(p: &Predicate) -> BTreeSet<String> {
    fn walk(p: &Predicate, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match p {
            Predicate::True | Predicate::False => {}
            Predicate::Not(inner) => walk(inner, bound, out),
            Predicate::And(ps) | Predicate::Or(ps) => ps.iter().for_each(|q| walk(q, bound, out)),
            Predicate::Implies(a, b) => {
                walk(a, bound, out);
                walk(b, bound, out);
            }
            Predicate::Eq(a, b) | Predicate::Member(a, b) | Predicate::Cmp(a, _, b) => {
                term_free_vars(a, bound, out);
                term_free_vars(b, bound, out);
            }
            Predicate::IsEmpty(t) => term_free_vars(t, bound, out),
        }
    }
    let mut out = BTreeSet::new();
    walk(p, &mut Vec::new(), &mut out);
    out
}

pub fn eval_term(term: &Term, env: &Binding) -> Result<Value, MbtError> {
    match term {
        Term::Var(name) => env
            .get(name)
            .cloned()
            .ok_or_else(|| MbtError::Eval(format!("unbound variable {name}"))),
        Term::Lit(v) => Ok(v.clone()),
        Term::Union(a, b) => match (eval_term(a, env)?, eval_term(b, env)?) {
            (Value::Set(mut x), Value::Set(y)) => {
                x.extend(y);
                Ok(Value::Set(x))
            }
            (x, y) => Err(MbtError::Eval(format!(
                "union over {} and {}",
                x.kind(),
                y.kind()
            ))),
        },
        Term::Diff(a, b) => match (eval_term(a, env)?, eval_term(b, env)?) {
            (Value::Set(x), Value::Set(y)) => Ok(Value::Set(x.difference(&y).cloned().collect())),
            (x, y) => Err(MbtError::Eval(format!(
                "difference over {} and {}",
                x.kind(),
                y.kind()
            ))),
        },
        Term::Card(t) => match eval_term(t, env)? {
            Value::Set(x) => Ok(Value::Int(x.len() as i64)),
            Value::Seq(x) | Value::Tuple(x) => Ok(Value::Int(x.len() as i64)),
            x => Err(MbtError::Eval(format!("cardinality of {}", x.kind()))),
        },
        Term::Tuple(ts) => Ok(Value::Tuple(
            ts.iter()
                .map(|t| eval_term(t, env))
                .collect::<Result<_, _>>()?,
        )),
        Term::MapOver { var, over, body } => match eval_term(over, env)? {
            Value::Set(items) => {
                let mut out = BTreeSet::new();
                for item in items {
                    let mut scoped = env.clone();
                    scoped.insert(var.clone(), item);
                    out.insert(eval_term(body, &scoped)?);
                }
                Ok(Value::Set(out))
            }
            x => Err(MbtError::Eval(format!("comprehension over {}", x.kind()))),
        },
    }
}

pub fn eval(p: &Predicate, env: &Binding) -> Result<bool, MbtError> {
    match p {
        Predicate::True => Ok(true),
        Predicate::False => Ok(false),
        Predicate::Not(inner) => Ok(!eval(inner, env)?),
        Predicate::And(ps) => {
            for q in ps {
                if !eval(q, env)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Predicate::Or(ps) => {
            for q in ps {
                if eval(q, env)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Predicate::Implies(a, b) => Ok(!eval(a, env)? || eval(b, env)?),
        Predicate::Eq(a, b) => Ok(eval_term(a, env)? == eval_term(b, env)?),
        Predicate::Member(a, b) => match eval_term(b, env)? {
            Value::Set(items) => Ok(items.contains(&eval_term(a, env)?)),
            Value::Seq(items) | Value::Tuple(items) => Ok(items.contains(&eval_term(a, env)?)),
            x => Err(MbtError::Eval(format!("membership in {}", x.kind()))),
        },
        Predicate::IsEmpty(t) => match eval_term(t, env)? {
            Value::Set(items) => Ok(items.is_empty()),
            Value::Seq(items) | Value::Tuple(items) => Ok(items.is_empty()),
            x => Err(MbtError::Eval(format!("emptiness of {}", x.kind()))),
        },
        Predicate::Cmp(a, op, b) => match (eval_term(a, env)?, eval_term(b, env)?) {
            (Value::Int(x), Value::Int(y)) => Ok(match op {
                CmpOp::Lt => x < y,
                CmpOp::Le => x <= y,
                CmpOp::Gt => x > y,
                CmpOp::Ge => x >= y,
            }),
            (x, y) => Err(MbtError::Eval(format!(
                "comparison over {} and {}",
                x.kind(),
                y.kind()
            ))),
        },
    }
}

/// Negation normal form: negations pushed down to the atoms.
fn nnf(p: &Predicate, positive: bool) -> Predicate {
    match (p, positive) {
        (Predicate::True, true) | (Predicate::False, false) => Predicate::True,
        (Predicate::True, false) | (Predicate::False, true) => Predicate::False,
        (Predicate::Not(inner), _) => nnf(inner, !positive),
        (Predicate::And(ps), true) => Predicate::And(ps.iter().map(|q| nnf(q, true)).collect()),
        (Predicate::And(ps), false) => Predicate::Or(ps.iter().map(|q| nnf(q, false)).collect()),
        (Predicate::Or(ps), true) => Predicate::Or(ps.iter().map(|q| nnf(q, true)).collect()),
        (Predicate::Or(ps), false) => Predicate::And(ps.iter().map(|q| nnf(q, false)).collect()),
        (Predicate::Implies(a, b), true) => Predicate::Or(vec![nnf(a, false), nnf(b, true)]),
        (Predicate::Implies(a, b), false) => Predicate::And(vec![nnf(a, true), nnf(b, false)]),
        (atom, true) => atom.clone(),
        (atom, false) => atom.clone().not(),
    }
}

/// Disjunctive normal form of `p`, as a list of conjunctions. Errors when
/// the expansion exceeds `cap` disjuncts.
pub fn dnf(p: &Predicate, cap: usize) -> Result<Vec<Predicate>, MbtError> {
    fn expand(p: &Predicate, cap: usize) -> Result<Vec<Vec<Predicate>>, MbtError> {
        match p {
            Predicate::True => Ok(vec![vec![]]),
            Predicate::False => Ok(vec![]),
            Predicate::Or(ps) => {
                let mut out = Vec::new();
                for q in ps {
                    out.extend(expand(q, cap)?);
                    if out.len() > cap {
                        return Err(MbtError::DnfTooLarge(cap));
                    }
                }
                Ok(out)
            }
            Predicate::And(ps) => {
                let mut acc: Vec<Vec<Predicate>> = vec![vec![]];
                for q in ps {
                    let expanded = expand(q, cap)?;
                    let mut next = Vec::new();
                    for left in &acc {
                        for right in &expanded {
                            let mut joined = left.clone();
                            joined.extend(right.iter().cloned());
                            next.push(joined);
                        }
                    }
                    if next.len() > cap {
                        return Err(MbtError::DnfTooLarge(cap));
                    }
                    acc = next;
                }
                Ok(acc)
            }
            atom => Ok(vec![vec![atom.clone()]]),
        }
    }
    let normalized = nnf(p, true);
    let disjuncts = expand(&normalized, cap)?;
    Ok(disjuncts
        .into_iter()
        .map(|conjuncts| match conjuncts.len() {
            0 => Predicate::True,
            1 => conjuncts.into_iter().next().expect("len checked"),
            _ => Predicate::And(conjuncts),
        })
        .collect())
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(name) => write!(f, "{name}"),
            Term::Lit(v) => write!(f, "{v}"),
            Term::Union(a, b) => write!(f, "({a} u {b})"),
            Term::Diff(a, b) => write!(f, "({a} \\ {b})"),
            Term::Card(t) => write!(f, "|{t}|"),
            Term::Tuple(ts) => {
                write!(f, "(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
            Term::MapOver { var, over, body } => write!(f, "{{{body} | {var} in {over}}}"),
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::True => write!(f, "true"),
            Predicate::False => write!(f, "false"),
            Predicate::Not(inner) => write!(f, "not({inner})"),
            Predicate::And(ps) => {
                if ps.is_empty() {
                    return write!(f, "true");
                }
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        write!(f, " and ")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
            Predicate::Or(ps) => {
                if ps.is_empty() {
                    return write!(f, "false");
                }
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        write!(f, " or ")?;
                    }
                    write!(f, "({p})")?;
                }
                Ok(())
            }
            Predicate::Implies(a, b) => write!(f, "({a}) => ({b})"),
            Predicate::Eq(a, b) => write!(f, "{a} = {b}"),
            Predicate::Member(a, b) => write!(f, "{a} in {b}"),
            Predicate::IsEmpty(t) => write!(f, "{t} = {{}}"),
            Predicate::Cmp(a, op, b) => write!(f, "{a} {op} {b}"),
        }
    }
}
