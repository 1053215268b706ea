//! Suite execution: refine each abstract case onto the system under test,
//! run it, abstract the output back, and check the postcondition.

use super::pred::{eval, Binding};
use super::tree::AbstractTestCase;
use super::{MbtError, TransitionSpec, Value};
use serde::{Deserialize, Serialize};

/// A system under test. The adapter owns refinement (abstract binding →
/// concrete values), execution, and abstraction of the results back into
/// bindings for the transition's result variables.
pub trait SutAdapter {
    fn name(&self) -> &str;
    fn run_case(&self, case: &AbstractTestCase) -> Result<Binding, String>;
}

#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct CaseResult {
    pub leaf: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct VerdictReport {
    pub transition: String,
    pub sut: String,
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub results: Vec<CaseResult>,
}

impl VerdictReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

/// Run every case: set the initial values from the binding, execute the
/// SUT, evaluate `post` under inputs ∪ state ∪ abstracted results. A SUT
/// crash is recorded as a failure and the suite continues.
pub fn run_suite(
    t: &TransitionSpec,
    cases: &[AbstractTestCase],
    sut: &dyn SutAdapter,
) -> VerdictReport {
    let mut results = Vec::with_capacity(cases.len());
    let mut passed = 0;
    for case in cases {
        let (pass, detail) = match sut.run_case(case) {
            Ok(outputs) => {
                let mut env = case.binding.clone();
                for (name, value) in outputs {
                    env.insert(name, value);
                }
                match eval(&t.post, &env) {
                    Ok(true) => (true, None),
                    Ok(false) => (
                        false,
                        Some(format!("postcondition violated under {}", render(&env, t))),
                    ),
                    Err(e) => (false, Some(format!("postcondition unevaluable: {e}"))),
                }
            }
            Err(crash) => (false, Some(format!("SUT failed: {crash}"))),
        };
        if pass {
            passed += 1;
        }
        results.push(CaseResult {
            leaf: case.leaf.clone(),
            pass,
            detail,
        });
    }
    VerdictReport {
        transition: t.name.clone(),
        sut: sut.name().to_string(),
        total: cases.len(),
        passed,
        failed: cases.len() - passed,
        results,
    }
}

fn render(env: &Binding, t: &TransitionSpec) -> String {
    let mut parts = Vec::new();
    for decl in t.decls() {
        if let Some(v) = env.get(&decl.name) {
            parts.push(format!("{}={v}", decl.name));
        }
    }
    for name in &t.results {
        if let Some(v) = env.get(name) {
            parts.push(format!("{name}={v}"));
        }
    }
    parts.join(", ")
}

// ── Suite file format ────────────────────────────────────────────────────

/// `mbt gen` output / `mbt run` input: transition name, tactic schedule,
/// generation parameters, and the abstract cases.
#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct SuiteWire {
    pub transition: String,
    pub tactics: Vec<String>,
    pub budget: u64,
    pub seed: u64,
    pub cases: Vec<CaseWire>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct CaseWire {
    pub leaf: String,
    pub binding: std::collections::BTreeMap<String, Value>,
}

impl SuiteWire {
    pub fn from_cases(
        transition: &str,
        tactics: &[String],
        budget: u64,
        seed: u64,
        cases: &[AbstractTestCase],
    ) -> SuiteWire {
        SuiteWire {
            transition: transition.to_string(),
            tactics: tactics.to_vec(),
            budget,
            seed,
            cases: cases
                .iter()
                .map(|c| CaseWire {
                    leaf: c.leaf.clone(),
                    binding: c.binding.clone(),
                })
                .collect(),
        }
    }

    pub fn cases(&self) -> Vec<AbstractTestCase> {
        self.cases
            .iter()
            .map(|c| AbstractTestCase {
                leaf: c.leaf.clone(),
                binding: c.binding.clone(),
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("suites always serialize")
    }

    pub fn from_json(json: &str) -> Result<SuiteWire, MbtError> {
        serde_json::from_str(json).map_err(|e| MbtError::Decode {
            what: "suite",
            detail: e.to_string(),
        })
    }
}
