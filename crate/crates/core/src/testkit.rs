//! Seeded generators and independent re-implementations used by the test
//! suites. Everything here is an oracle or a construction aid: nothing in
//! the library proper depends on it.

use crate::group::Backend;
use crate::ledger::{self, Block, Chain};
use crate::mbt::pred::{var, Predicate};
use crate::mbt::{
    enumerate_bindings, eval, Binding, MbtError, Tactic, TestingTree, TransitionSpec, Value,
    VarDecl,
};
use crate::tx::{build_transaction, BuiltTransaction, Opening};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A fresh opening with a random blinding factor.
pub fn opening(backend: Backend, rng: &mut ChaCha8Rng, value: u64) -> Opening {
    Opening::new(backend.scalar(rng.random::<u64>()), backend.scalar(value))
}

/// A balanced single-kernel transaction spending `n_in` fresh coins into
/// `n_out` outputs. Retries blinding collisions, which otherwise trip the
/// duplicate-input rejection.
pub fn random_tx(
    backend: Backend,
    rng: &mut ChaCha8Rng,
    n_in: usize,
    n_out: usize,
    n_bits: u32,
) -> (Vec<Opening>, Vec<Opening>, BuiltTransaction) {
    loop {
        let max = if n_out == 0 {
            0
        } else {
            (1u64 << n_bits) / n_out.max(1) as u64
        };
        let mut outs: Vec<Opening> = Vec::new();
        let mut total = 0u64;
        for _ in 0..n_out {
            let v = if max == 0 {
                0
            } else {
                rng.random_range(0..max)
            };
            total += v;
            outs.push(opening(backend, rng, v));
        }
        let mut ins: Vec<Opening> = Vec::new();
        for i in 0..n_in {
            let v = if i + 1 == n_in {
                total
            } else {
                rng.random_range(0..=total)
            };
            total -= v;
            ins.push(opening(backend, rng, v));
        }
        if n_in == 0 && total > 0 {
            continue;
        }
        match build_transaction(backend, &ins, &outs, n_bits) {
            Ok(built) => return (ins, outs, built),
            Err(_) => continue,
        }
    }
}

/// A block in which `pairs` commitments appear on both sides: chains of
/// two transactions are aggregated, the middle coin of each chain being
/// created and spent inside the same block. Returns the block plus the
/// middle (cancelled) and sink (surviving) openings.
pub fn block_with_matching_pairs(
    backend: Backend,
    rng: &mut ChaCha8Rng,
    pairs: usize,
    n_bits: u32,
) -> (Block, Vec<Opening>, Vec<Opening>) {
    // Commitments live in a desk-scale group, so random openings do
    // collide; rebuild until the draw is collision-free.
    'retry: loop {
        let mut txs = Vec::new();
        let mut middles = Vec::new();
        let mut sinks = Vec::new();
        for _ in 0..pairs {
            let value = rng.random_range(0..1u64 << (n_bits - 1));
            let source = opening(backend, rng, value);
            let middle = opening(backend, rng, value);
            let sink = opening(backend, rng, value);
            let Ok(first) = build_transaction(backend, &[source], &[middle], n_bits) else {
                continue 'retry;
            };
            let Ok(second) = build_transaction(backend, &[middle], &[sink], n_bits) else {
                continue 'retry;
            };
            txs.push(first.tx);
            txs.push(second.tx);
            middles.push(middle);
            sinks.push(sink);
        }
        match ledger::aggregate(backend, &txs) {
            Ok(block) => return (block, middles, sinks),
            Err(_) => continue 'retry,
        }
    }
}

/// A valid chain of `extra_blocks + 1` blocks, each spending one earlier
/// output, together with the full spend history: `(chain, spent, unspent)`
/// openings.
pub fn valid_chain(
    backend: Backend,
    rng: &mut ChaCha8Rng,
    extra_blocks: usize,
    n_bits: u32,
) -> (Chain, Vec<Opening>, Vec<Opening>) {
    'retry: loop {
        let coins: Vec<Opening> = (0..extra_blocks.max(1) + 1)
            .map(|_| opening(backend, rng, 0))
            .collect();
        let Ok(coinbase) = build_transaction(backend, &[], &coins, n_bits) else {
            continue;
        };
        let Ok(genesis) = ledger::genesis_block(backend, &[coinbase], backend.scalar(0)) else {
            continue;
        };
        let mut chain = Chain::new(genesis);
        let mut unspent = coins;
        let mut spent = Vec::new();
        for _ in 0..extra_blocks {
            let at = rng.random_range(0..unspent.len());
            let from = unspent.swap_remove(at);
            let to = opening(backend, rng, 0);
            let Ok(tx) = build_transaction(backend, &[from], &[to], n_bits) else {
                continue 'retry;
            };
            let Ok(block) = ledger::aggregate(backend, &[tx.tx]) else {
                continue 'retry;
            };
            chain.push(block);
            spent.push(from);
            unspent.push(to);
        }
        // Colliding zero-value commitments can still sneak in a double
        // spend; only hand out chains the validator accepts.
        if ledger::valid_chain(&chain).is_valid() {
            return (chain, spent, unspent);
        }
    }
}

/// A chain that re-spends an already-consumed commitment in its final
/// block. Returns the chain and the index of the offending block.
pub fn double_spend_chain(backend: Backend, rng: &mut ChaCha8Rng, n_bits: u32) -> (Chain, usize) {
    loop {
        let blocks = rng.random_range(1..=4);
        let (mut chain, spent, _) = valid_chain(backend, rng, blocks, n_bits);
        let victim = spent[rng.random_range(0..spent.len())];
        let to = opening(backend, rng, 0);
        let Ok(tx) = build_transaction(backend, &[victim], &[to], n_bits) else {
            continue;
        };
        let Ok(block) = ledger::aggregate(backend, &[tx.tx]) else {
            continue;
        };
        let index = chain.len();
        chain.push(block);
        return (chain, index);
    }
}

// ── Independent evaluators for the test-template engine ─────────────────

/// Leaf satisfiability decided by a different route than pruning: the full
/// binding set is filtered down the tree level by level, each node
/// applying only its own characteristic, and a leaf is satisfiable iff its
/// filtered set is non-empty. Keyed by root-path label.
pub fn leaf_satisfiability_by_filtering(
    tree: &TestingTree,
) -> Result<BTreeMap<String, bool>, MbtError> {
    let decls: Vec<&VarDecl> = tree.transition().decls().collect();
    let all: Vec<Binding> = enumerate_bindings(&decls).collect();

    fn walk(
        tree: &TestingTree,
        id: usize,
        candidates: &[Binding],
        out: &mut BTreeMap<String, bool>,
    ) -> Result<(), MbtError> {
        let mut kept = Vec::new();
        for binding in candidates {
            if eval(&tree.spec(id).characteristic, binding)? {
                kept.push(binding.clone());
            }
        }
        if tree.children(id).is_empty() {
            out.insert(tree.label_path(id), !kept.is_empty());
        } else {
            for &child in tree.children(id) {
                walk(tree, child, &kept, out)?;
            }
        }
        Ok(())
    }

    let mut out = BTreeMap::new();
    walk(tree, tree.root(), &all, &mut out)?;
    Ok(out)
}

/// A transition with one atom, one set and one integer variable; enough
/// surface for every shipped tactic.
pub fn small_transition() -> TransitionSpec {
    let subsets = vec![
        Value::set([]),
        Value::set([Value::atom("p")]),
        Value::set([Value::atom("q")]),
        Value::set([Value::atom("p"), Value::atom("q")]),
    ];
    TransitionSpec::new(
        "small",
        vec![
            VarDecl::new("x", vec![Value::atom("p"), Value::atom("q")]),
            VarDecl::new("s", subsets),
            VarDecl::new(
                "n",
                vec![Value::Int(0), Value::Int(1), Value::Int(2), Value::Int(3)],
            ),
        ],
        vec![],
        vec![],
        Predicate::or([
            Predicate::Member(var("x"), var("s")),
            Predicate::Cmp(var("n"), crate::mbt::CmpOp::Gt, crate::mbt::pred::int(0)),
        ]),
        Predicate::True,
    )
    .expect("well-formed")
}

/// A random testing tree over [`small_transition`]: up to `depth` rounds
/// of a random applicable tactic applied at every current leaf.
pub fn random_small_tree(rng: &mut ChaCha8Rng, depth: usize) -> TestingTree {
    let mut tree = TestingTree::new(small_transition());
    for _ in 0..depth {
        let tactic = match rng.random_range(0..4) {
            0 => Tactic::SetExtension { var: "s".into() },
            1 => Tactic::NumericBoundary { var: "n".into() },
            2 => Tactic::Dnf,
            _ => Tactic::MembershipSplit {
                element: var("x"),
                set: "s".into(),
            },
        };
        tree.apply_tactic_at_leaves(&tactic)
            .expect("tactic applies to the small transition");
    }
    tree
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::TRANSPARENT;
    use crate::verdict::Verdict;

    #[test]
    fn generated_chains_validate() {
        let mut r = rng(1);
        for _ in 0..5 {
            let (chain, _, _) = valid_chain(TRANSPARENT, &mut r, 3, 4);
            assert_eq!(ledger::valid_chain(&chain), Verdict::Valid);
        }
    }

    #[test]
    fn generated_pair_blocks_have_both_sides() {
        let mut r = rng(2);
        let (block, middles, sinks) = block_with_matching_pairs(TRANSPARENT, &mut r, 2, 4);
        let cut = ledger::cut_through(&block);
        assert!(cut.inputs.len() < block.inputs.len());
        assert_eq!(ledger::validate_block(&block), Verdict::Valid);
        for middle in &middles {
            let c = middle.commitment().unwrap();
            assert!(!cut.outputs.iter().any(|o| o.commitment == c));
        }
        for sink in &sinks {
            let c = sink.commitment().unwrap();
            assert!(cut.outputs.iter().any(|o| o.commitment == c));
        }
    }

    #[test]
    fn filtering_evaluator_agrees_on_a_handmade_tree() {
        let mut r = rng(3);
        let mut tree = random_small_tree(&mut r, 2);
        let expected = leaf_satisfiability_by_filtering(&tree).unwrap();
        tree.prune(1_000_000, 1).unwrap();
        let kept: Vec<String> = tree
            .leaves()
            .into_iter()
            .map(|l| tree.label_path(l))
            .collect();
        for (label, sat) in expected {
            assert_eq!(kept.contains(&label), sat, "leaf {label}");
        }
    }
}
