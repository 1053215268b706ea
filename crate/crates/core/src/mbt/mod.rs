//! Test Template Framework engine: valid input spaces, testing tactics,
//! testing trees, bounded-exhaustive pruning and abstract test-case
//! generation, plus the verdict loop that refines cases onto a system
//! under test and checks its abstracted output against the postcondition.
//!
//! A transition `A(i, s, s', o)` is specified by a precondition over the
//! input and state variables and a postcondition over all four vectors.
//! The valid input space (VIS) is the set of `(i, s)` satisfying the
//! precondition; tactics recursively partition it; leaves that survive
//! pruning yield abstract test cases, which must satisfy every
//! characteristic predicate up to the root.

pub mod pred;
pub mod suite;
pub mod tactic;
pub mod transitions;
pub mod tree;

pub use pred::{eval, eval_term, free_vars, Binding, CmpOp, Predicate, Term, Value};
pub use suite::{run_suite, CaseResult, SuiteWire, SutAdapter, VerdictReport};
pub use tactic::Tactic;
pub use tree::{
    domain_product, enumerate_bindings, vis, AbstractTestCase, LeafInfo, PruneStats, TestSpec,
    TestingTree,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MbtError {
    #[error("variable {0} is not declared")]
    UnknownVariable(String),
    #[error("tactic {tactic} does not apply to {var}: {detail}")]
    TacticMismatch {
        tactic: String,
        var: String,
        detail: String,
    },
    #[error("evaluation failed: {0}")]
    Eval(String),
    #[error(
        "enumeration budget exceeded at leaf {leaf}: domain product {product} > budget {budget}"
    )]
    BudgetExceeded {
        leaf: String,
        product: u128,
        budget: u64,
    },
    #[error("the tree has not been pruned")]
    NotPruned,
    #[error("DNF expansion exceeds {0} disjuncts")]
    DnfTooLarge(usize),
    #[error("node {0} is out of range")]
    BadNode(usize),
    #[error("unknown transition {0:?}")]
    UnknownTransition(String),
    #[error("unknown system under test {0:?}")]
    UnknownSut(String),
    #[error("cannot decode {what}: {detail}")]
    Decode { what: &'static str, detail: String },
}

/// A declared variable with its finite domain. Domain order matters: it is
/// the documented enumeration (and witness tie-break) order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct VarDecl {
    pub name: String,
    pub domain: Vec<Value>,
}

impl VarDecl {
    pub fn new(name: impl Into<String>, domain: Vec<Value>) -> VarDecl {
        VarDecl {
            name: name.into(),
            domain,
        }
    }
}

/// A state transition given by pre- and postcondition, with declared
/// finite domains for its input and state variables. The result variables
/// (`s'` and `o`) are bound by the SUT adapter at run time.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TransitionSpec {
    pub name: String,
    pub inputs: Vec<VarDecl>,
    pub states: Vec<VarDecl>,
    pub results: Vec<String>,
    pub pre: Predicate,
    pub post: Predicate,
}

impl TransitionSpec {
    /// Construct and check that every free variable of the pre- and
    /// postcondition is declared.
    pub fn new(
        name: impl Into<String>,
        inputs: Vec<VarDecl>,
        states: Vec<VarDecl>,
        results: Vec<String>,
        pre: Predicate,
        post: Predicate,
    ) -> Result<TransitionSpec, MbtError> {
        let spec = TransitionSpec {
            name: name.into(),
            inputs,
            states,
            results,
            pre,
            post,
        };
        let declared: std::collections::BTreeSet<&str> = spec
            .decls()
            .map(|d| d.name.as_str())
            .chain(spec.results.iter().map(|r| r.as_str()))
            .collect();
        for name in free_vars(&spec.pre).union(&free_vars(&spec.post)) {
            if !declared.contains(name.as_str()) {
                return Err(MbtError::UnknownVariable(name.clone()));
            }
        }
        for name in free_vars(&spec.pre) {
            if spec.results.iter().any(|r| *r == name) {
                return Err(MbtError::Eval(format!(
                    "precondition mentions result variable {name}"
                )));
            }
        }
        Ok(spec)
    }

    /// Input and state declarations, in declaration order.
    pub fn decls(&self) -> impl Iterator<Item = &VarDecl> {
        self.inputs.iter().chain(self.states.iter())
    }
}
