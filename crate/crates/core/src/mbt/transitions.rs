//! The shipped transition instantiations: the peer-gossip receive
//! transition and the transaction validator, each with declared desk-scale
//! domains, an executable reference adapter, and a catalog of seeded
//! mutants for the verdict loop to kill.
//!
//! Refinement maps atoms to concrete model values (addresses by name,
//! labeled coins to openings with seed-derived blindings); abstraction maps
//! model results back to atoms, sets and tuples.

use super::pred::{atom, var, Binding, Predicate, Term, Value};
use super::suite::SutAdapter;
use super::tree::AbstractTestCase;
use super::{MbtError, TransitionSpec, VarDecl};
use crate::consensus::{self, Addr, Effect, LocState, Msg, Packet};
use crate::crypto;
use crate::group::TRANSPARENT;
use crate::tx::{self, build_transaction, Opening, Transaction};
use crate::verdict::{Reason, Verdict};
use std::collections::BTreeSet;

pub const RCV_ADDR: &str = "rcv_addr";
pub const VALIDATE_TRANSACTION: &str = "validate_transaction";

pub const TRANSITIONS: [&str; 2] = [RCV_ADDR, VALIDATE_TRANSACTION];

const ADDR_POOL: [&str; 3] = ["a1", "a2", "a3"];
const SELF_ATOM: &str = "this";
const OTHER_ATOM: &str = "other";

/// All subsets of an atom pool, ordered by (size, contents) — the
/// enumeration order for set-valued domains.
fn subset_domain(atoms: &[&str]) -> Vec<Value> {
    let mut sets: Vec<BTreeSet<Value>> = (0..1usize << atoms.len())
        .map(|mask| {
            atoms
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, a)| Value::atom(*a))
                .collect()
        })
        .collect();
    sets.sort_by_key(|s| (s.len(), s.iter().cloned().collect::<Vec<_>>()));
    sets.into_iter().map(Value::Set).collect()
}

fn atoms(names: &[&str]) -> Vec<Value> {
    names.iter().map(|n| Value::atom(*n)).collect()
}

/// Look up a shipped transition by name.
pub fn transition_spec(name: &str) -> Result<TransitionSpec, MbtError> {
    match name {
        RCV_ADDR => rcv_addr_spec(),
        VALIDATE_TRANSACTION => validate_transaction_spec(),
        other => Err(MbtError::UnknownTransition(other.to_string())),
    }
}

/// Mutant catalog for a transition (the reference adapter is `reference`).
pub fn mutant_names(transition: &str) -> Result<Vec<&'static str>, MbtError> {
    match transition {
        RCV_ADDR => Ok(vec!["drop-addr-relay", "overwrite-peers", "connect-to-all"]),
        VALIDATE_TRANSACTION => Ok(vec![
            "skip-range-check",
            "skip-signature-check",
            "skip-duplicate-check",
            "skip-balance-check",
        ]),
        other => Err(MbtError::UnknownTransition(other.to_string())),
    }
}

/// Instantiate a SUT adapter by name; `seed` feeds refinement-time
/// blinding derivation.
pub fn sut(transition: &str, sut_name: &str, seed: u64) -> Result<Box<dyn SutAdapter>, MbtError> {
    match transition {
        RCV_ADDR => {
            let mutant = match sut_name {
                "reference" => None,
                "drop-addr-relay" => Some(RcvAddrMutant::DropAddrRelay),
                "overwrite-peers" => Some(RcvAddrMutant::OverwritePeers),
                "connect-to-all" => Some(RcvAddrMutant::ConnectToAll),
                other => return Err(MbtError::UnknownSut(other.to_string())),
            };
            Ok(Box::new(RcvAddrSut { mutant }))
        }
        VALIDATE_TRANSACTION => {
            let mutant = match sut_name {
                "reference" => None,
                "skip-range-check" => Some(TxCheck::RangeProofs),
                "skip-signature-check" => Some(TxCheck::KernelSignature),
                "skip-duplicate-check" => Some(TxCheck::DuplicateInputs),
                "skip-balance-check" => Some(TxCheck::Balance),
                other => return Err(MbtError::UnknownSut(other.to_string())),
            };
            Ok(Box::new(ValidateTxSut { mutant, seed }))
        }
        other => Err(MbtError::UnknownTransition(other.to_string())),
    }
}

// ── rcv_addr ─────────────────────────────────────────────────────────────

/// Peer-gossip receive: `(p, st)` is in the VIS when the packet is
/// addressed to this node (the message shape is fixed by the input
/// declaration). Post: peers' = peers ∪ asm, and the sent set is the
/// connects to the unknown addresses plus the announcement to the old
/// peers.
fn rcv_addr_spec() -> Result<TransitionSpec, MbtError> {
    let announced = var("peers").union(var("asm"));
    let post = Predicate::and([
        Predicate::eq(var("peers_after"), var("peers").union(var("asm"))),
        Predicate::eq(
            var("sent"),
            Term::map_over(
                "a",
                var("asm").diff(var("peers")),
                Term::Tuple(vec![atom(SELF_ATOM), var("a"), atom("connect")]),
            )
            .union(Term::map_over(
                "a",
                var("peers"),
                Term::Tuple(vec![
                    atom(SELF_ATOM),
                    var("a"),
                    Term::Tuple(vec![atom("addrMsg"), announced]),
                ]),
            )),
        ),
    ]);
    TransitionSpec::new(
        RCV_ADDR,
        vec![
            VarDecl::new("dest", atoms(&[SELF_ATOM, OTHER_ATOM])),
            VarDecl::new("asm", subset_domain(&ADDR_POOL)),
        ],
        vec![VarDecl::new("peers", subset_domain(&ADDR_POOL))],
        vec!["peers_after".into(), "sent".into()],
        Predicate::eq(var("dest"), atom(SELF_ATOM)),
        post,
    )
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum RcvAddrMutant {
    /// Forgets to announce the merged peer set to the old peers.
    DropAddrRelay,
    /// Overwrites the peer set instead of merging.
    OverwritePeers,
    /// Sends connects to every received address, known or not.
    ConnectToAll,
}

struct RcvAddrSut {
    mutant: Option<RcvAddrMutant>,
}

fn value_as_atom(v: &Value) -> Result<&str, String> {
    match v {
        Value::Atom(a) => Ok(a),
        other => Err(format!("expected an atom, got {other}")),
    }
}

fn value_as_atom_set(v: &Value) -> Result<BTreeSet<Addr>, String> {
    match v {
        Value::Set(items) => items
            .iter()
            .map(|i| value_as_atom(i).map(Addr::new))
            .collect::<Result<BTreeSet<_>, _>>(),
        other => Err(format!("expected a set, got {other}")),
    }
}

fn abstract_msg(msg: &Msg) -> Value {
    match msg {
        Msg::Connect => Value::atom("connect"),
        Msg::Addrs(addrs) => Value::Tuple(vec![
            Value::atom("addrMsg"),
            Value::set(addrs.iter().map(|a| Value::atom(a.0.clone()))),
        ]),
        Msg::Tx(_) => Value::atom("txMsg"),
        Msg::Block(_) => Value::atom("blockMsg"),
    }
}

fn abstract_packets(packets: &BTreeSet<Packet>) -> Value {
    Value::set(packets.iter().map(|p| {
        Value::Tuple(vec![
            Value::atom(p.origin.0.clone()),
            Value::atom(p.dest.0.clone()),
            abstract_msg(&p.msg),
        ])
    }))
}

fn mutated_rcv_addr(mutant: RcvAddrMutant, me: &Addr, st: &LocState, p: &Packet) -> Option<Effect> {
    if p.dest != *me {
        return None;
    }
    let Msg::Addrs(incoming) = &p.msg else {
        return None;
    };
    let merged: BTreeSet<Addr> = st.peers.union(incoming).cloned().collect();
    let mut outputs = BTreeSet::new();
    let connect_targets: Vec<Addr> = match mutant {
        RcvAddrMutant::ConnectToAll => incoming.iter().cloned().collect(),
        _ => incoming.difference(&st.peers).cloned().collect(),
    };
    for target in connect_targets {
        outputs.insert(Packet {
            origin: me.clone(),
            dest: target,
            msg: Msg::Connect,
        });
    }
    if mutant != RcvAddrMutant::DropAddrRelay {
        for known in &st.peers {
            outputs.insert(Packet {
                origin: me.clone(),
                dest: known.clone(),
                msg: Msg::Addrs(merged.clone()),
            });
        }
    }
    let peers = match mutant {
        RcvAddrMutant::OverwritePeers => incoming.clone(),
        _ => merged,
    };
    Some(Effect {
        state: LocState {
            peers,
            ..st.clone()
        },
        outputs,
    })
}

impl SutAdapter for RcvAddrSut {
    fn name(&self) -> &str {
        match self.mutant {
            None => "reference",
            Some(RcvAddrMutant::DropAddrRelay) => "drop-addr-relay",
            Some(RcvAddrMutant::OverwritePeers) => "overwrite-peers",
            Some(RcvAddrMutant::ConnectToAll) => "connect-to-all",
        }
    }

    fn run_case(&self, case: &AbstractTestCase) -> Result<Binding, String> {
        let get = |name: &str| {
            case.binding
                .get(name)
                .ok_or_else(|| format!("missing variable {name}"))
        };
        let me = Addr::new(SELF_ATOM);
        let dest = value_as_atom(get("dest")?)?;
        let incoming = value_as_atom_set(get("asm")?)?;
        let peers = value_as_atom_set(get("peers")?)?;

        let st = LocState {
            peers,
            ..LocState::default()
        };
        let packet = Packet {
            origin: Addr::new("env"),
            dest: Addr::new(if dest == SELF_ATOM {
                SELF_ATOM
            } else {
                "bystander"
            }),
            msg: Msg::Addrs(incoming),
        };
        let effect = match self.mutant {
            None => consensus::rcv_addr(&me, &st, &packet),
            Some(m) => mutated_rcv_addr(m, &me, &st, &packet),
        };
        let (state, outputs) = match effect {
            Some(e) => (e.state, e.outputs),
            None => (st, BTreeSet::new()),
        };
        Ok(Binding::from([
            (
                "peers_after".to_string(),
                Value::set(state.peers.iter().map(|a| Value::atom(a.0.clone()))),
            ),
            ("sent".to_string(), abstract_packets(&outputs)),
        ]))
    }
}

// ── validate_transaction ─────────────────────────────────────────────────

const COIN_POOL: [(&str, u64); 2] = [("i1", 3), ("i2", 5)];

/// Transaction validation as a transition: the abstract input picks which
/// pool coins are spent, how the balancing outputs are split, and which
/// single tamper (if any) is applied after an honest build. The
/// postcondition predicts the verdict from the tamper class alone.
fn validate_transaction_spec() -> Result<TransitionSpec, MbtError> {
    let verdict_for = |t: &str, v: &str| {
        Predicate::eq(var("tamper"), atom(t)).implies(Predicate::eq(var("verdict"), atom(v)))
    };
    TransitionSpec::new(
        VALIDATE_TRANSACTION,
        vec![
            VarDecl::new("ins", subset_domain(&["i1", "i2"])),
            VarDecl::new("split", vec![Value::Int(0), Value::Int(1), Value::Int(2)]),
            VarDecl::new("tamper", atoms(&["none", "range", "sig", "excess", "dup"])),
        ],
        vec![],
        vec!["verdict".into()],
        // One disjunct per tamper class; a duplicated input needs an input
        // to duplicate. Written disjunctively so the DNF tactic partitions
        // the VIS by tamper class.
        Predicate::or([
            Predicate::eq(var("tamper"), atom("none")),
            Predicate::eq(var("tamper"), atom("range")),
            Predicate::eq(var("tamper"), atom("sig")),
            Predicate::eq(var("tamper"), atom("excess")),
            Predicate::and([
                Predicate::eq(var("tamper"), atom("dup")),
                Predicate::IsEmpty(var("ins")).not(),
            ]),
        ]),
        Predicate::and([
            verdict_for("none", "valid"),
            verdict_for("range", "invalid_range"),
            verdict_for("sig", "invalid_signature"),
            verdict_for("excess", "invalid_unbalanced"),
            verdict_for("dup", "invalid_duplicate"),
        ]),
    )
}

/// Which validator clause a mutant skips.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum TxCheck {
    DuplicateInputs,
    KernelSignature,
    Balance,
    RangeProofs,
}

/// The validator with one clause removable — the mutant bodies for the
/// verdict loop. `skip = None` mirrors the reference validator.
fn validate_skipping(transaction: &Transaction, skip: Option<TxCheck>) -> Verdict {
    let keep = |check: TxCheck| skip != Some(check);
    if keep(TxCheck::DuplicateInputs) {
        let mut seen = BTreeSet::new();
        if transaction
            .inputs
            .iter()
            .any(|i| !seen.insert(i.commitment.to_bytes()))
        {
            return Verdict::Invalid(Reason::DuplicateInput);
        }
    }
    let computed = match tx::excess_of(transaction) {
        Ok(e) => e,
        Err(_) => return Verdict::Invalid(Reason::Malformed),
    };
    if keep(TxCheck::KernelSignature) {
        for (k, kernel) in transaction.kernels.iter().enumerate() {
            let pk = if transaction.kernels.len() == 1 {
                computed
            } else {
                kernel.excess
            };
            if !crypto::verify(pk, tx::KERNEL_MESSAGE, &kernel.signature) {
                return Verdict::Invalid(Reason::KernelSignature(k));
            }
        }
    }
    if keep(TxCheck::Balance) {
        let stored = transaction
            .kernels
            .iter()
            .try_fold(transaction.backend.identity(), |acc, k| acc.add(k.excess));
        match stored {
            Ok(stored) if stored == computed => {}
            _ => return Verdict::Invalid(Reason::Unbalanced),
        }
    }
    if keep(TxCheck::RangeProofs) {
        let mut verified: std::collections::BTreeMap<Vec<u8>, usize> = Default::default();
        for proof in transaction
            .kernels
            .iter()
            .flat_map(|k| k.range_proofs.iter())
        {
            if let Ok(target) = proof.target() {
                if crypto::verify_range(&target, proof) {
                    *verified.entry(target.to_bytes()).or_default() += 1;
                }
            }
        }
        let mut needed: std::collections::BTreeMap<Vec<u8>, usize> = Default::default();
        for (index, output) in transaction.outputs.iter().enumerate() {
            let key = output.commitment.to_bytes();
            let used = needed.entry(key.clone()).or_default();
            *used += 1;
            if verified.get(&key).copied().unwrap_or(0) < *used {
                return Verdict::Invalid(Reason::RangeProof(index));
            }
        }
    }
    Verdict::Valid
}

struct ValidateTxSut {
    mutant: Option<TxCheck>,
    seed: u64,
}

impl ValidateTxSut {
    fn refine(&self, binding: &Binding) -> Result<Transaction, String> {
        let backend = TRANSPARENT;
        let blind = |label: &str| {
            backend.scalar_from_hash(&[b"mw.mbt.blind", &self.seed.to_be_bytes(), label.as_bytes()])
        };
        let get = |name: &str| {
            binding
                .get(name)
                .ok_or_else(|| format!("missing variable {name}"))
        };

        let Value::Set(in_atoms) = get("ins")? else {
            return Err("ins must be a set".into());
        };
        let mut spends = Vec::new();
        for item in in_atoms {
            let name = value_as_atom(item)?;
            let (_, value) = COIN_POOL
                .iter()
                .find(|(n, _)| *n == name)
                .ok_or_else(|| format!("unknown pool coin {name}"))?;
            spends.push(Opening::new(blind(name), backend.scalar(*value)));
        }
        let total: u64 = spends.iter().map(|o| o.value.value()).sum();
        let Value::Int(split) = get("split")? else {
            return Err("split must be an int".into());
        };
        let outputs = match split {
            0 => vec![Opening::new(blind("o0"), backend.scalar(total))],
            1 => vec![
                Opening::new(blind("o0"), backend.scalar(0)),
                Opening::new(blind("o1"), backend.scalar(total)),
            ],
            _ => vec![
                Opening::new(blind("o0"), backend.scalar(total)),
                Opening::new(blind("o1"), backend.scalar(0)),
            ],
        };
        let built = build_transaction(backend, &spends, &outputs, 4).map_err(|e| e.to_string())?;
        let mut transaction = built.tx;

        match value_as_atom(get("tamper")?)? {
            "none" => {}
            "range" => {
                let bumped = backend.scalar(outputs[0].value.value() + 1);
                transaction.kernels[0].range_proofs[0] =
                    crypto::prove_range(outputs[0].blinding, bumped, 4)
                        .map_err(|e| e.to_string())?;
            }
            "sig" => {
                let s = transaction.kernels[0].signature.s;
                transaction.kernels[0].signature.s =
                    s.add(backend.scalar(1)).map_err(|e| e.to_string())?;
            }
            "excess" => {
                transaction.kernels[0].excess = transaction.kernels[0]
                    .excess
                    .add(backend.generator())
                    .map_err(|e| e.to_string())?;
            }
            "dup" => {
                let first = *transaction
                    .inputs
                    .first()
                    .ok_or("dup tamper needs an input")?;
                transaction.inputs.push(first);
            }
            other => return Err(format!("unknown tamper {other}")),
        }
        Ok(transaction)
    }
}

fn abstract_verdict(verdict: &Verdict) -> Value {
    match verdict {
        Verdict::Valid => Value::atom("valid"),
        Verdict::Invalid(Reason::RangeProof(_)) => Value::atom("invalid_range"),
        Verdict::Invalid(Reason::KernelSignature(_)) => Value::atom("invalid_signature"),
        Verdict::Invalid(Reason::Unbalanced) => Value::atom("invalid_unbalanced"),
        Verdict::Invalid(Reason::DuplicateInput) => Value::atom("invalid_duplicate"),
        Verdict::Invalid(_) => Value::atom("invalid_other"),
    }
}

impl SutAdapter for ValidateTxSut {
    fn name(&self) -> &str {
        match self.mutant {
            None => "reference",
            Some(TxCheck::RangeProofs) => "skip-range-check",
            Some(TxCheck::KernelSignature) => "skip-signature-check",
            Some(TxCheck::DuplicateInputs) => "skip-duplicate-check",
            Some(TxCheck::Balance) => "skip-balance-check",
        }
    }

    fn run_case(&self, case: &AbstractTestCase) -> Result<Binding, String> {
        let transaction = self.refine(&case.binding)?;
        let verdict = match self.mutant {
            None => tx::validate_transaction(&transaction),
            Some(check) => validate_skipping(&transaction, Some(check)),
        };
        Ok(Binding::from([(
            "verdict".to_string(),
            abstract_verdict(&verdict),
        )]))
    }
}
