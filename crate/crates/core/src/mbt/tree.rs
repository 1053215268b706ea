//! Testing trees: the valid input space at the root, test specifications
//! below it, and abstract test cases from the satisfiable leaves.
//!
//! Satisfiability is decided by bounded-exhaustive enumeration over the
//! declared finite domains; the witness found for each satisfiable leaf is
//! the lexicographically smallest binding under the declaration order, and
//! it becomes the leaf's abstract test case.

use super::pred::{eval, Binding, Predicate};
use super::tactic::Tactic;
use super::{MbtError, TransitionSpec, VarDecl};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A test specification: one node of the testing tree. The effective
/// predicate of a node is the conjunction of the characteristics along the
/// path from the root.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TestSpec {
    pub label: String,
    pub tactic: String,
    pub characteristic: Predicate,
}

/// The valid input space of a transition: characteristic = precondition.
pub fn vis(t: &TransitionSpec) -> TestSpec {
    TestSpec {
        label: "VIS".into(),
        tactic: "vis".into(),
        characteristic: t.pre.clone(),
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LeafInfo {
    pub satisfiable: bool,
    pub witness: Option<Binding>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
struct Node {
    spec: TestSpec,
    parent: Option<usize>,
    children: Vec<usize>,
    leaf: Option<LeafInfo>,
}

/// An abstract test case: a total constant binding of the transition's
/// input and state variables, satisfying every characteristic predicate on
/// its root path.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct AbstractTestCase {
    pub leaf: String,
    pub binding: Binding,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TestingTree {
    transition: TransitionSpec,
    nodes: Vec<Node>,
    pruned: bool,
}

/// Total size of the enumeration space over the declared domains.
pub fn domain_product(decls: &[&VarDecl]) -> u128 {
    decls.iter().map(|d| d.domain.len() as u128).product()
}

/// All total bindings over `decls`, in lexicographic order: declaration
/// order for variables, declared order for their domain values. This
/// ordering is the documented witness tie-breaker.
pub fn enumerate_bindings<'a>(decls: &'a [&'a VarDecl]) -> impl Iterator<Item = Binding> + 'a {
    let total = domain_product(decls);
    debug_assert!(total <= usize::MAX as u128);
    let total = total as usize;
    (0..total).map(move |mut index| {
        let mut binding = Binding::new();
        for decl in decls.iter().rev() {
            let n = decl.domain.len();
            binding.insert(decl.name.clone(), decl.domain[index % n].clone());
            index /= n;
        }
        binding
    })
}

impl TestingTree {
    /// A fresh tree whose root is the transition's VIS.
    pub fn new(transition: TransitionSpec) -> TestingTree {
        let root = Node {
            spec: vis(&transition),
            parent: None,
            children: Vec::new(),
            leaf: None,
        };
        TestingTree {
            transition,
            nodes: vec![root],
            pruned: false,
        }
    }

    pub fn transition(&self) -> &TransitionSpec {
        &self.transition
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn spec(&self, id: usize) -> &TestSpec {
        &self.nodes[id].spec
    }

    pub fn children(&self, id: usize) -> &[usize] {
        &self.nodes[id].children
    }

    pub fn leaf_info(&self, id: usize) -> Option<&LeafInfo> {
        self.nodes[id].leaf.as_ref()
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].children.is_empty())
            .collect()
    }

    /// Root-to-node labels joined into a readable path.
    pub fn label_path(&self, id: usize) -> String {
        let mut labels = Vec::new();
        let mut at = Some(id);
        while let Some(i) = at {
            labels.push(self.nodes[i].spec.label.clone());
            at = self.nodes[i].parent;
        }
        labels.reverse();
        labels.join(" / ")
    }

    /// Conjunction of the characteristic predicates on the root path.
    pub fn effective_predicate(&self, id: usize) -> Predicate {
        let mut conjuncts = Vec::new();
        let mut at = Some(id);
        while let Some(i) = at {
            conjuncts.push(self.nodes[i].spec.characteristic.clone());
            at = self.nodes[i].parent;
        }
        conjuncts.reverse();
        if conjuncts.len() == 1 {
            conjuncts.pop().expect("one conjunct")
        } else {
            Predicate::And(conjuncts)
        }
    }

    /// Partition the node with `tactic`; returns the new children. The
    /// node's leaf annotation, if any, is discarded — it is a test
    /// specification again, not a leaf.
    pub fn apply_tactic(&mut self, id: usize, tactic: &Tactic) -> Result<Vec<usize>, MbtError> {
        if id >= self.nodes.len() {
            return Err(MbtError::BadNode(id));
        }
        let effective = self.effective_predicate(id);
        let predicates = tactic.child_predicates(&self.transition, &effective)?;
        let mut created = Vec::with_capacity(predicates.len());
        for (i, characteristic) in predicates.into_iter().enumerate() {
            let label = format!("{tactic}[{i}] {characteristic}");
            let child = Node {
                spec: TestSpec {
                    label,
                    tactic: tactic.to_string(),
                    characteristic,
                },
                parent: Some(id),
                children: Vec::new(),
                leaf: None,
            };
            let child_id = self.nodes.len();
            self.nodes.push(child);
            created.push(child_id);
        }
        self.nodes[id].leaf = None;
        self.nodes[id].children.extend(created.iter().copied());
        self.pruned = false;
        Ok(created)
    }

    /// Apply one tactic across every current leaf — one level of recursive
    /// domain partition.
    pub fn apply_tactic_at_leaves(&mut self, tactic: &Tactic) -> Result<Vec<usize>, MbtError> {
        let mut created = Vec::new();
        for leaf in self.leaves() {
            created.extend(self.apply_tactic(leaf, tactic)?);
        }
        Ok(created)
    }

    fn decls(&self) -> Vec<&VarDecl> {
        self.transition.decls().collect()
    }

    /// Annotate every leaf satisfiable/unsatisfiable by bounded-exhaustive
    /// enumeration and remove the unsatisfiable ones (and any interior
    /// node left without children). The root always stays.
    ///
    /// `jobs > 1` checks leaves in parallel; the outcome is identical.
    pub fn prune(&mut self, budget: u64, jobs: usize) -> Result<PruneStats, MbtError> {
        let decls = self.decls();
        let product = domain_product(&decls);
        let leaves = self.leaves();
        if let Some(&first) = leaves.first() {
            if product > budget as u128 {
                return Err(MbtError::BudgetExceeded {
                    leaf: self.label_path(first),
                    product,
                    budget,
                });
            }
        }

        let work: Vec<(usize, Predicate)> = leaves
            .iter()
            .map(|&id| (id, self.effective_predicate(id)))
            .collect();
        let witness_of = |pred: &Predicate| -> Result<Option<Binding>, MbtError> {
            for binding in enumerate_bindings(&decls) {
                if eval(pred, &binding)? {
                    return Ok(Some(binding));
                }
            }
            Ok(None)
        };
        let results: Vec<(usize, Option<Binding>)> = if jobs > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| MbtError::Eval(format!("cannot build thread pool: {e}")))?;
            pool.install(|| {
                work.par_iter()
                    .map(|(id, pred)| Ok((*id, witness_of(pred)?)))
                    .collect::<Result<Vec<_>, MbtError>>()
            })?
        } else {
            work.iter()
                .map(|(id, pred)| Ok((*id, witness_of(pred)?)))
                .collect::<Result<Vec<_>, MbtError>>()?
        };

        let mut kept_leaves = 0usize;
        let mut pruned = 0usize;
        for (id, witness) in results {
            let satisfiable = witness.is_some();
            if satisfiable {
                kept_leaves += 1;
            } else {
                pruned += 1;
            }
            self.nodes[id].leaf = Some(LeafInfo {
                satisfiable,
                witness,
            });
        }
        self.remove_unsatisfiable();
        self.pruned = true;
        Ok(PruneStats {
            examined: leaves.len(),
            kept: kept_leaves,
            pruned,
        })
    }

    fn remove_unsatisfiable(&mut self) {
        // keep = annotated-satisfiable leaf, or interior with a kept child.
        let mut keep = vec![false; self.nodes.len()];
        fn mark(nodes: &[Node], keep: &mut [bool], id: usize) -> bool {
            let node = &nodes[id];
            let kept = if node.children.is_empty() {
                node.leaf.as_ref().map(|l| l.satisfiable).unwrap_or(false)
            } else {
                node.children
                    .iter()
                    .fold(false, |acc, &c| mark(nodes, keep, c) || acc)
            };
            keep[id] = kept;
            kept
        }
        mark(&self.nodes, &mut keep, 0);
        keep[0] = true; // the VIS is never removed

        let mut remap: Vec<Option<usize>> = vec![None; self.nodes.len()];
        let mut next = Vec::with_capacity(self.nodes.len());
        for (id, node) in self.nodes.iter().enumerate() {
            if keep[id] {
                remap[id] = Some(next.len());
                next.push(node.clone());
            }
        }
        for node in &mut next {
            node.parent = node.parent.and_then(|p| remap[p]);
            node.children = node.children.iter().filter_map(|&c| remap[c]).collect();
        }
        self.nodes = next;
    }

    /// One abstract test case per surviving satisfiable leaf: the witness
    /// binding found during pruning.
    pub fn generate_cases(&self) -> Result<Vec<AbstractTestCase>, MbtError> {
        if !self.pruned {
            return Err(MbtError::NotPruned);
        }
        let mut cases = Vec::new();
        for id in self.leaves() {
            if let Some(LeafInfo {
                satisfiable: true,
                witness: Some(binding),
            }) = &self.nodes[id].leaf
            {
                cases.push(AbstractTestCase {
                    leaf: self.label_path(id),
                    binding: binding.clone(),
                });
            }
        }
        Ok(cases)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct PruneStats {
    pub examined: usize,
    pub kept: usize,
    pub pruned: usize,
}
