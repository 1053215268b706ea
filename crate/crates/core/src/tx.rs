//! Transactions: construction from openings, the excess formula, and the
//! three-clause validity judgment (range proofs, kernel signature over the
//! excess, balance).
//!
//! Serialized transactions carry commitments only; the openings `(r, v)` are
//! a builder-side artifact and never leave the builder. Validation is a pure
//! function of the serialized form.

use crate::crypto::{
    self, commit, Commitment, CryptoError, KernelSignature, RangeProof, RangeProofWire,
    SignatureWire,
};
use crate::group::{sum_elements, Backend, GroupElement, GroupError, Scalar};
use crate::verdict::{Reason, Verdict};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use thiserror::Error;

/// The message kernel signatures commit to. The model signs the empty
/// string; [`crypto::sign`] accepts any message should a chain want its own.
pub const KERNEL_MESSAGE: &[u8] = b"";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TxError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error("value imbalance: inputs sum to {inputs}, outputs to {outputs}")]
    Unbalanced { inputs: u128, outputs: u128 },
    #[error("duplicate input commitment in one transaction")]
    DuplicateInput,
    #[error("cannot decode transaction: {0}")]
    Decode(String),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct TxInput {
    pub commitment: Commitment,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct TxOutput {
    pub commitment: Commitment,
}

/// Kernel: the excess, the signature authenticating it, and the range proofs
/// of the outputs the owning transaction created.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct TxKernel {
    pub excess: GroupElement,
    pub signature: KernelSignature,
    pub range_proofs: Vec<RangeProof>,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Transaction {
    pub backend: Backend,
    pub inputs: Vec<TxInput>,
    pub outputs: Vec<TxOutput>,
    pub kernels: Vec<TxKernel>,
}

/// A builder-side `(r, v)` pair: the blinding factor and the value it hides.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Opening {
    pub blinding: Scalar,
    pub value: Scalar,
}

impl Opening {
    pub fn new(blinding: Scalar, value: Scalar) -> Opening {
        Opening { blinding, value }
    }

    pub fn commitment(&self) -> Result<Commitment, CryptoError> {
        commit(self.blinding, self.value)
    }
}

/// What the builder hands back: the transaction plus the kernel secret,
/// which block aggregation needs to absorb a kernel offset.
#[derive(Clone, Debug)]
pub struct BuiltTransaction {
    pub tx: Transaction,
    pub kernel_secret: Scalar,
}

impl TxKernel {
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = self.excess.to_bytes();
        out.extend_from_slice(&self.signature.to_bytes());
        out.extend_from_slice(&(self.range_proofs.len() as u32).to_be_bytes());
        for proof in &self.range_proofs {
            let bytes = proof.to_bytes();
            out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
            out.extend_from_slice(&bytes);
        }
        out
    }
}

impl Transaction {
    pub fn empty(backend: Backend) -> Transaction {
        Transaction {
            backend,
            inputs: Vec::new(),
            outputs: Vec::new(),
            kernels: Vec::new(),
        }
    }

    /// Number of range proofs across all kernels; equals the number of
    /// outputs for builder-produced transactions.
    pub fn range_proof_count(&self) -> usize {
        self.kernels.iter().map(|k| k.range_proofs.len()).sum()
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.inputs.len() as u32).to_be_bytes());
        for i in &self.inputs {
            out.extend_from_slice(&i.commitment.to_bytes());
        }
        out.extend_from_slice(&(self.outputs.len() as u32).to_be_bytes());
        for o in &self.outputs {
            out.extend_from_slice(&o.commitment.to_bytes());
        }
        out.extend_from_slice(&(self.kernels.len() as u32).to_be_bytes());
        for k in &self.kernels {
            let bytes = k.canonical_bytes();
            out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
            out.extend_from_slice(&bytes);
        }
        out
    }

    fn backends_are_uniform(&self) -> bool {
        let b = self.backend;
        self.inputs.iter().all(|i| i.commitment.backend() == b)
            && self.outputs.iter().all(|o| o.commitment.backend() == b)
            && self.kernels.iter().all(|k| {
                k.excess.backend() == b
                    && k.signature.nonce.backend() == b
                    && k.signature.s.backend() == b
                    && k.range_proofs
                        .iter()
                        .all(|p| p.bit_commitments.iter().all(|c| c.backend() == b))
            })
    }
}

impl PartialOrd for Transaction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Transaction {
    fn cmp(&self, other: &Self) -> Ordering {
        self.canonical_bytes().cmp(&other.canonical_bytes())
    }
}

/// `Σ output commitments − Σ input commitments`, on the stored commitments.
pub fn excess_of(tx: &Transaction) -> Result<GroupElement, GroupError> {
    let outputs = sum_elements(tx.backend, tx.outputs.iter().map(|o| o.commitment.point()))?;
    let inputs = sum_elements(tx.backend, tx.inputs.iter().map(|i| i.commitment.point()))?;
    outputs.sub(inputs)
}

fn duplicate_commitments(commitments: impl Iterator<Item = Commitment>) -> bool {
    let mut counts: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
    for c in commitments {
        *counts.entry(c.to_bytes()).or_default() += 1;
    }
    counts.values().any(|&n| n > 1)
}

/// Build a transaction spending `spends` into `outputs`.
///
/// The builder enforces integer value balance `Σv' = Σv` and proves every
/// output value in `[0, 2^n_bits)`. The kernel key is forced by the excess
/// formula to `Σr' − Σr`; it is derived here and returned alongside the
/// transaction so aggregation can later shift it by a block offset.
pub fn build_transaction(
    backend: Backend,
    spends: &[Opening],
    outputs: &[Opening],
    n_bits: u32,
) -> Result<BuiltTransaction, TxError> {
    for opening in spends.iter().chain(outputs) {
        if opening.blinding.backend() != backend || opening.value.backend() != backend {
            return Err(GroupError::BackendMismatch {
                left: backend.name(),
                right: opening.blinding.backend().name(),
            }
            .into());
        }
    }
    let in_total: u128 = spends.iter().map(|s| s.value.value() as u128).sum();
    let out_total: u128 = outputs.iter().map(|o| o.value.value() as u128).sum();
    if in_total != out_total {
        return Err(TxError::Unbalanced {
            inputs: in_total,
            outputs: out_total,
        });
    }

    let inputs = spends
        .iter()
        .map(|s| {
            Ok(TxInput {
                commitment: s.commitment()?,
            })
        })
        .collect::<Result<Vec<_>, CryptoError>>()?;
    if duplicate_commitments(inputs.iter().map(|i| i.commitment)) {
        return Err(TxError::DuplicateInput);
    }

    let mut outs = Vec::with_capacity(outputs.len());
    let mut range_proofs = Vec::with_capacity(outputs.len());
    for o in outputs {
        range_proofs.push(crypto::prove_range(o.blinding, o.value, n_bits)?);
        outs.push(TxOutput {
            commitment: o.commitment()?,
        });
    }

    let mut kernel_secret = backend.scalar(0);
    for o in outputs {
        kernel_secret = kernel_secret.add(o.blinding)?;
    }
    for s in spends {
        kernel_secret = kernel_secret.sub(s.blinding)?;
    }
    let excess = backend.generator().scalar_mul(kernel_secret)?;
    let signature = crypto::sign(kernel_secret, KERNEL_MESSAGE)?;

    let tx = Transaction {
        backend,
        inputs,
        outputs: outs,
        kernels: vec![TxKernel {
            excess,
            signature,
            range_proofs,
        }],
    };
    Ok(BuiltTransaction { tx, kernel_secret })
}

/// Check that every output commitment is covered by a verifying range proof,
/// counting multiplicity. Surplus proofs are tolerated: after cut-through a
/// kernel may retain proofs for outputs that were cancelled away.
fn check_range_coverage(
    backend: Backend,
    outputs: &[TxOutput],
    proofs: impl Iterator<Item = RangeProof> + Clone,
) -> Result<(), usize> {
    let _ = backend;
    let mut verified: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
    for proof in proofs {
        if let Ok(target) = proof.target() {
            if crypto::verify_range(&target, &proof) {
                *verified.entry(target.to_bytes()).or_default() += 1;
            }
        }
    }
    let mut needed: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
    for (index, output) in outputs.iter().enumerate() {
        let key = output.commitment.to_bytes();
        let used = needed.entry(key.clone()).or_default();
        *used += 1;
        if verified.get(&key).copied().unwrap_or(0) < *used {
            return Err(index);
        }
    }
    Ok(())
}

/// The three-clause validity judgment.
///
/// Checks run in this order, and the first failure decides the reason:
/// duplicate inputs; kernel signatures (a single kernel is verified against
/// the recomputed excess, so tampered commitments surface here; multiple
/// kernels are verified against their stored excesses); the balance clause
/// `Σ stored excesses = recomputed excess`; range-proof coverage of every
/// output.
pub fn validate_transaction(tx: &Transaction) -> Verdict {
    if !tx.backends_are_uniform() {
        return Verdict::Invalid(Reason::Malformed);
    }
    if duplicate_commitments(tx.inputs.iter().map(|i| i.commitment)) {
        return Verdict::Invalid(Reason::DuplicateInput);
    }

    let computed = match excess_of(tx) {
        Ok(e) => e,
        Err(_) => return Verdict::Invalid(Reason::Malformed),
    };

    if tx.kernels.len() == 1 {
        let kernel = &tx.kernels[0];
        if !crypto::verify(computed, KERNEL_MESSAGE, &kernel.signature) {
            return Verdict::Invalid(Reason::KernelSignature(0));
        }
        if kernel.excess != computed {
            return Verdict::Invalid(Reason::Unbalanced);
        }
    } else {
        for (k, kernel) in tx.kernels.iter().enumerate() {
            if !crypto::verify(kernel.excess, KERNEL_MESSAGE, &kernel.signature) {
                return Verdict::Invalid(Reason::KernelSignature(k));
            }
        }
        let stored = match sum_elements(tx.backend, tx.kernels.iter().map(|k| k.excess)) {
            Ok(e) => e,
            Err(_) => return Verdict::Invalid(Reason::Malformed),
        };
        if stored != computed {
            return Verdict::Invalid(Reason::Unbalanced);
        }
    }

    let proofs = tx
        .kernels
        .iter()
        .flat_map(|k| k.range_proofs.iter().cloned());
    if let Err(index) = check_range_coverage(tx.backend, &tx.outputs, proofs) {
        return Verdict::Invalid(Reason::RangeProof(index));
    }
    Verdict::Valid
}

// ── JSON wire form ───────────────────────────────────────────────────────

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct KernelWire {
    pub excess: String,
    pub sig: SignatureWire,
    pub range_proofs: Vec<RangeProofWire>,
}

/// `{"inputs":[hex],"outputs":[hex],"kernels":[...]}`
#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct TransactionWire {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub kernels: Vec<KernelWire>,
}

impl TxKernel {
    pub fn to_wire(&self) -> KernelWire {
        KernelWire {
            excess: self.excess.to_hex(),
            sig: self.signature.to_wire(),
            range_proofs: self.range_proofs.iter().map(|p| p.to_wire()).collect(),
        }
    }

    pub fn from_wire(backend: Backend, wire: &KernelWire) -> Result<TxKernel, TxError> {
        Ok(TxKernel {
            excess: backend.element_from_hex(&wire.excess)?,
            signature: KernelSignature::from_wire(backend, &wire.sig)?,
            range_proofs: wire
                .range_proofs
                .iter()
                .map(|p| RangeProof::from_wire(backend, p))
                .collect::<Result<Vec<_>, _>>()?,
        })
    }
}

impl Transaction {
    pub fn to_wire(&self) -> TransactionWire {
        TransactionWire {
            inputs: self.inputs.iter().map(|i| i.commitment.to_hex()).collect(),
            outputs: self.outputs.iter().map(|o| o.commitment.to_hex()).collect(),
            kernels: self.kernels.iter().map(|k| k.to_wire()).collect(),
        }
    }

    pub fn from_wire(backend: Backend, wire: &TransactionWire) -> Result<Transaction, TxError> {
        Ok(Transaction {
            backend,
            inputs: wire
                .inputs
                .iter()
                .map(|s| {
                    Ok(TxInput {
                        commitment: Commitment::from_hex(backend, s)?,
                    })
                })
                .collect::<Result<Vec<_>, CryptoError>>()?,
            outputs: wire
                .outputs
                .iter()
                .map(|s| {
                    Ok(TxOutput {
                        commitment: Commitment::from_hex(backend, s)?,
                    })
                })
                .collect::<Result<Vec<_>, CryptoError>>()?,
            kernels: wire
                .kernels
                .iter()
                .map(|k| TxKernel::from_wire(backend, k))
                .collect::<Result<Vec<_>, _>>()?,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_wire()).expect("wire form always serializes")
    }

    pub fn from_json(backend: Backend, json: &str) -> Result<Transaction, TxError> {
        let wire: TransactionWire =
            serde_json::from_str(json).map_err(|e| TxError::Decode(e.to_string()))?;
        Transaction::from_wire(backend, &wire)
    }
}
