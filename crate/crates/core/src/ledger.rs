//! Blocks, kernel offsets, cut-through, CoinJoin-style aggregation, UTXO
//! tracking and chain validation.
//!
//! A block is a big transaction with aggregated inputs, outputs and kernels
//! plus a kernel offset: the block is valid when
//! `Σ outputs − Σ inputs = offset·G + Σ kernel excesses`. The genesis block
//! is an ordinary block with the genesis flag set and no inputs, validated
//! by the same equation.

use crate::crypto::{self, Commitment, CryptoError};
use crate::group::{sum_elements, Backend, GroupError, Scalar};
use crate::tx::{
    BuiltTransaction, KernelWire, Transaction, TxError, TxInput, TxKernel, TxOutput, KERNEL_MESSAGE,
};
use crate::verdict::{Reason, Verdict};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LedgerError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Tx(#[from] TxError),
    #[error("transaction {index} is invalid: {reason}")]
    InvalidTransaction { index: usize, reason: Reason },
    #[error("transactions spend overlapping inputs")]
    ConflictingInputs,
    #[error("a nonzero offset needs at least one kernel to absorb it")]
    OffsetWithoutKernel,
    #[error("genesis transactions must not spend inputs")]
    GenesisSpends,
    #[error("a chain must contain at least one block")]
    EmptyChain,
    #[error("chain is inconsistent: an input is not in the running UTXO set")]
    UtxoInconsistent,
    #[error("cannot decode {what}: {detail}")]
    Decode { what: &'static str, detail: String },
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Block {
    pub backend: Backend,
    pub genesis: bool,
    pub inputs: Vec<TxInput>,
    pub outputs: Vec<TxOutput>,
    /// Kernel offset: the blinding factor added back in the block equation.
    pub offset: Scalar,
    pub kernels: Vec<TxKernel>,
}

/// A non-empty list of blocks; emptiness is ruled out at construction.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Chain {
    blocks: Vec<Block>,
}

/// Multiset of unspent output commitments.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct UtxoSet {
    counts: BTreeMap<Commitment, usize>,
}

impl UtxoSet {
    pub fn count(&self, c: &Commitment) -> usize {
        self.counts.get(c).copied().unwrap_or(0)
    }

    pub fn contains(&self, c: &Commitment) -> bool {
        self.count(c) > 0
    }

    pub fn insert(&mut self, c: Commitment) {
        *self.counts.entry(c).or_default() += 1;
    }

    /// Remove one occurrence; `false` if the commitment is absent.
    pub fn remove(&mut self, c: &Commitment) -> bool {
        match self.counts.get_mut(c) {
            Some(n) if *n > 1 => {
                *n -= 1;
                true
            }
            Some(_) => {
                self.counts.remove(c);
                true
            }
            None => false,
        }
    }

    pub fn len(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Commitment, usize)> {
        self.counts.iter().map(|(c, &n)| (c, n))
    }
}

impl FromIterator<Commitment> for UtxoSet {
    fn from_iter<T: IntoIterator<Item = Commitment>>(iter: T) -> Self {
        let mut set = UtxoSet::default();
        for c in iter {
            set.insert(c);
        }
        set
    }
}

impl Block {
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = vec![self.genesis as u8];
        out.extend_from_slice(&self.offset.to_bytes());
        out.extend_from_slice(&self.as_transaction().canonical_bytes());
        out
    }

    /// View the block body as a transaction (same aggregate shape).
    fn as_transaction(&self) -> Transaction {
        Transaction {
            backend: self.backend,
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            kernels: self.kernels.clone(),
        }
    }
}

impl Chain {
    pub fn new(genesis: Block) -> Chain {
        Chain {
            blocks: vec![genesis],
        }
    }

    pub fn from_blocks(blocks: Vec<Block>) -> Result<Chain, LedgerError> {
        if blocks.is_empty() {
            return Err(LedgerError::EmptyChain);
        }
        Ok(Chain { blocks })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn push(&mut self, block: Block) {
        self.blocks.push(block);
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("chains are non-empty")
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

fn sorted_by_commitment<T: Clone>(items: &[T], key: impl Fn(&T) -> Vec<u8>) -> Vec<T> {
    let mut out = items.to_vec();
    out.sort_by_key(|item| key(item));
    out
}

fn aggregate_parts(
    backend: Backend,
    txs: &[&Transaction],
    offset: Scalar,
    shift_secret: Option<Scalar>,
    genesis: bool,
) -> Result<Block, LedgerError> {
    for (index, tx) in txs.iter().enumerate() {
        let verdict = crate::tx::validate_transaction(tx);
        if let Verdict::Invalid(reason) = verdict {
            return Err(LedgerError::InvalidTransaction { index, reason });
        }
        if genesis && !tx.inputs.is_empty() {
            return Err(LedgerError::GenesisSpends);
        }
    }
    let mut seen = BTreeSet::new();
    for tx in txs {
        for input in &tx.inputs {
            if !seen.insert(input.commitment.to_bytes()) {
                return Err(LedgerError::ConflictingInputs);
            }
        }
    }

    let inputs: Vec<TxInput> = txs
        .iter()
        .flat_map(|tx| tx.inputs.iter().copied())
        .collect();
    let outputs: Vec<TxOutput> = txs
        .iter()
        .flat_map(|tx| tx.outputs.iter().copied())
        .collect();
    let mut kernels: Vec<TxKernel> = txs
        .iter()
        .flat_map(|tx| tx.kernels.iter().cloned())
        .collect();

    // A nonzero offset is absorbed by re-keying the first kernel with
    // `secret − offset`, so the block equation holds with the offset
    // recorded beside the kernels.
    if !offset.is_zero() {
        let secret = shift_secret.ok_or(LedgerError::OffsetWithoutKernel)?;
        let first = kernels
            .first_mut()
            .ok_or(LedgerError::OffsetWithoutKernel)?;
        let shifted = secret.sub(offset)?;
        first.excess = backend.generator().scalar_mul(shifted)?;
        first.signature = crypto::sign(shifted, KERNEL_MESSAGE)?;
    }

    Ok(Block {
        backend,
        genesis,
        inputs: sorted_by_commitment(&inputs, |i| i.commitment.to_bytes()),
        outputs: sorted_by_commitment(&outputs, |o| o.commitment.to_bytes()),
        offset,
        kernels: sorted_by_commitment(&kernels, |k| k.excess.to_bytes()),
    })
}

/// Merge pool transactions into a block with a zero offset. Needs no
/// builder secrets, so nodes can aggregate foreign transactions.
pub fn aggregate(backend: Backend, txs: &[Transaction]) -> Result<Block, LedgerError> {
    let refs: Vec<&Transaction> = txs.iter().collect();
    aggregate_parts(backend, &refs, backend.scalar(0), None, false)
}

/// Merge built transactions into a block carrying `offset`. The first
/// transaction's kernel secret absorbs the offset and is re-signed.
pub fn aggregate_with_offset(
    backend: Backend,
    txs: &[BuiltTransaction],
    offset: Scalar,
) -> Result<Block, LedgerError> {
    let refs: Vec<&Transaction> = txs.iter().map(|b| &b.tx).collect();
    aggregate_parts(
        backend,
        &refs,
        offset,
        txs.first().map(|b| b.kernel_secret),
        false,
    )
}

/// Build a genesis block from coinbase transactions (no inputs allowed).
pub fn genesis_block(
    backend: Backend,
    coinbase: &[BuiltTransaction],
    offset: Scalar,
) -> Result<Block, LedgerError> {
    let refs: Vec<&Transaction> = coinbase.iter().map(|b| &b.tx).collect();
    aggregate_parts(
        backend,
        &refs,
        offset,
        coinbase.first().map(|b| b.kernel_secret),
        true,
    )
}

fn backends_are_uniform(b: &Block) -> bool {
    b.offset.backend() == b.backend && {
        let tx = Transaction {
            backend: b.backend,
            inputs: b.inputs.clone(),
            outputs: b.outputs.clone(),
            kernels: b.kernels.clone(),
        };
        crate::tx::validate_transaction(&tx) != Verdict::Invalid(Reason::Malformed)
    }
}

fn duplicate_inputs(inputs: &[TxInput]) -> bool {
    let mut seen = BTreeSet::new();
    inputs.iter().any(|i| !seen.insert(i.commitment.to_bytes()))
}

/// Block validity: no duplicate inputs, a well-shaped genesis flag, the
/// balance equation, every kernel signature, and a verifying range proof
/// for every output.
///
/// The balance equation is checked before the kernel signatures, so a
/// perturbed offset or excess is reported as [`Reason::BalanceEquation`].
pub fn validate_block(b: &Block) -> Verdict {
    if !backends_are_uniform(b) {
        return Verdict::Invalid(Reason::Malformed);
    }
    if duplicate_inputs(&b.inputs) {
        return Verdict::Invalid(Reason::DuplicateInput);
    }
    if b.genesis && !b.inputs.is_empty() {
        return Verdict::Invalid(Reason::GenesisShape);
    }

    let equation_holds = (|| -> Result<bool, GroupError> {
        let outputs = sum_elements(b.backend, b.outputs.iter().map(|o| o.commitment.point()))?;
        let inputs = sum_elements(b.backend, b.inputs.iter().map(|i| i.commitment.point()))?;
        let kernel_sum = sum_elements(b.backend, b.kernels.iter().map(|k| k.excess))?;
        let rhs = b
            .backend
            .generator()
            .scalar_mul(b.offset)?
            .add(kernel_sum)?;
        Ok(outputs.sub(inputs)? == rhs)
    })();
    match equation_holds {
        Ok(true) => {}
        Ok(false) => return Verdict::Invalid(Reason::BalanceEquation),
        Err(_) => return Verdict::Invalid(Reason::Malformed),
    }

    for (k, kernel) in b.kernels.iter().enumerate() {
        if !crypto::verify(kernel.excess, KERNEL_MESSAGE, &kernel.signature) {
            return Verdict::Invalid(Reason::KernelSignature(k));
        }
    }

    let mut verified: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
    for proof in b.kernels.iter().flat_map(|k| k.range_proofs.iter()) {
        if let Ok(target) = proof.target() {
            if crypto::verify_range(&target, proof) {
                *verified.entry(target.to_bytes()).or_default() += 1;
            }
        }
    }
    let mut needed: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
    for (index, output) in b.outputs.iter().enumerate() {
        let key = output.commitment.to_bytes();
        let used = needed.entry(key.clone()).or_default();
        *used += 1;
        if verified.get(&key).copied().unwrap_or(0) < *used {
            return Verdict::Invalid(Reason::RangeProof(index));
        }
    }
    Verdict::Valid
}

/// Erase commitments that appear on both sides of the block, one-for-one by
/// multiset count. Kernels (with their range proofs) and the offset stay.
pub fn cut_through(b: &Block) -> Block {
    let mut input_counts: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
    for i in &b.inputs {
        *input_counts.entry(i.commitment.to_bytes()).or_default() += 1;
    }
    let mut output_counts: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
    for o in &b.outputs {
        *output_counts.entry(o.commitment.to_bytes()).or_default() += 1;
    }
    let mut cancel: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
    for (key, &n_in) in &input_counts {
        if let Some(&n_out) = output_counts.get(key) {
            cancel.insert(key.clone(), n_in.min(n_out));
        }
    }
    let mut cancel_inputs = cancel.clone();
    let inputs = b
        .inputs
        .iter()
        .filter(|i| {
            let key = i.commitment.to_bytes();
            match cancel_inputs.get_mut(&key) {
                Some(n) if *n > 0 => {
                    *n -= 1;
                    false
                }
                _ => true,
            }
        })
        .copied()
        .collect();
    let mut cancel_outputs = cancel;
    let outputs = b
        .outputs
        .iter()
        .filter(|o| {
            let key = o.commitment.to_bytes();
            match cancel_outputs.get_mut(&key) {
                Some(n) if *n > 0 => {
                    *n -= 1;
                    false
                }
                _ => true,
            }
        })
        .copied()
        .collect();
    Block {
        backend: b.backend,
        genesis: b.genesis,
        inputs,
        outputs,
        offset: b.offset,
        kernels: b.kernels.clone(),
    }
}

/// UTXO multiset plus the set of commitments ever consumed, folded over a
/// chain prefix.
#[derive(Clone, Debug, Default)]
pub struct ChainState {
    pub utxo: UtxoSet,
    pub spent: BTreeSet<Commitment>,
}

impl ChainState {
    pub fn from_blocks(blocks: &[Block]) -> Result<ChainState, LedgerError> {
        let mut state = ChainState::default();
        for block in blocks {
            state.apply(block)?;
        }
        Ok(state)
    }

    pub fn apply(&mut self, block: &Block) -> Result<(), LedgerError> {
        for input in &block.inputs {
            if !self.utxo.remove(&input.commitment) {
                return Err(LedgerError::UtxoInconsistent);
            }
            self.spent.insert(input.commitment);
        }
        for output in &block.outputs {
            self.utxo.insert(output.commitment);
        }
        Ok(())
    }

    /// Why `commitment` cannot be spent now, if it cannot.
    pub fn spend_obstacle(&self, commitment: &Commitment) -> Option<Reason> {
        if self.spent.contains(commitment) {
            Some(Reason::DoubleSpend)
        } else if !self.utxo.contains(commitment) {
            Some(Reason::UnknownInput)
        } else {
            None
        }
    }

    /// All inputs spendable, treating the commitments as consumed as we go.
    pub fn inputs_spendable(&self, inputs: &[TxInput]) -> Result<(), Reason> {
        let mut scratch = self.clone();
        for input in inputs {
            if let Some(reason) = scratch.spend_obstacle(&input.commitment) {
                return Err(reason);
            }
            scratch.utxo.remove(&input.commitment);
            scratch.spent.insert(input.commitment);
        }
        Ok(())
    }
}

/// [`validates`] against a bare block slice; fork-choice walks extend
/// prefixes without materializing intermediate `Chain` values.
pub fn validates_prefix(blocks: &[Block], b: &Block) -> Verdict {
    if b.genesis {
        return Verdict::Invalid(Reason::MisplacedGenesis);
    }
    let block_verdict = validate_block(b);
    if !block_verdict.is_valid() {
        return block_verdict;
    }
    let state = match ChainState::from_blocks(blocks) {
        Ok(s) => s,
        Err(_) => return Verdict::Invalid(Reason::Malformed),
    };
    match state.inputs_spendable(&b.inputs) {
        Ok(()) => Verdict::Valid,
        Err(reason) => Verdict::Invalid(reason),
    }
}

/// Is it valid to append `b` to `c`? The block must be valid on its own,
/// every input must be an unspent output of `c`, and no input may have been
/// consumed before anywhere on the chain.
pub fn validates(c: &Chain, b: &Block) -> Verdict {
    validates_prefix(c.blocks(), b)
}

/// Chain validity: a valid genesis block at position zero, then every block
/// validates against the prefix before it.
pub fn valid_chain(c: &Chain) -> Verdict {
    let blocks = c.blocks();
    let genesis = &blocks[0];
    if !genesis.genesis {
        return Verdict::Invalid(Reason::Block {
            index: 0,
            cause: Box::new(Reason::GenesisShape),
        });
    }
    if let Verdict::Invalid(cause) = validate_block(genesis) {
        return Verdict::Invalid(Reason::Block {
            index: 0,
            cause: Box::new(cause),
        });
    }
    for index in 1..blocks.len() {
        if let Verdict::Invalid(cause) = validates_prefix(&blocks[..index], &blocks[index]) {
            return Verdict::Invalid(Reason::Block {
                index,
                cause: Box::new(cause),
            });
        }
    }
    Verdict::Valid
}

/// The UTXO multiset of a chain: outputs added, inputs removed, in order.
pub fn utxo(c: &Chain) -> Result<UtxoSet, LedgerError> {
    Ok(ChainState::from_blocks(c.blocks())?.utxo)
}

// ── JSON wire form ───────────────────────────────────────────────────────

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct BlockWire {
    pub genesis: bool,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub offset: String,
    pub kernels: Vec<KernelWire>,
}

impl Block {
    pub fn to_wire(&self) -> BlockWire {
        let tx = self.as_transaction().to_wire();
        BlockWire {
            genesis: self.genesis,
            inputs: tx.inputs,
            outputs: tx.outputs,
            offset: self.offset.to_hex(),
            kernels: tx.kernels,
        }
    }

    pub fn from_wire(backend: Backend, wire: &BlockWire) -> Result<Block, LedgerError> {
        let tx = Transaction::from_wire(
            backend,
            &crate::tx::TransactionWire {
                inputs: wire.inputs.clone(),
                outputs: wire.outputs.clone(),
                kernels: wire.kernels.clone(),
            },
        )?;
        Ok(Block {
            backend,
            genesis: wire.genesis,
            inputs: tx.inputs,
            outputs: tx.outputs,
            offset: backend
                .scalar_from_hex(&wire.offset)
                .map_err(TxError::from)?,
            kernels: tx.kernels,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_wire()).expect("wire form always serializes")
    }

    pub fn from_json(backend: Backend, json: &str) -> Result<Block, LedgerError> {
        let wire: BlockWire = serde_json::from_str(json).map_err(|e| LedgerError::Decode {
            what: "block",
            detail: e.to_string(),
        })?;
        Block::from_wire(backend, &wire)
    }
}

impl Chain {
    /// Chain file format: a JSON array of block objects.
    pub fn to_json(&self) -> String {
        let wires: Vec<BlockWire> = self.blocks.iter().map(|b| b.to_wire()).collect();
        serde_json::to_string_pretty(&wires).expect("wire form always serializes")
    }

    pub fn from_json(backend: Backend, json: &str) -> Result<Chain, LedgerError> {
        let wires: Vec<BlockWire> =
            serde_json::from_str(json).map_err(|e| LedgerError::Decode {
                what: "chain",
                detail: e.to_string(),
            })?;
        let blocks = wires
            .iter()
            .map(|w| Block::from_wire(backend, w))
            .collect::<Result<Vec<_>, _>>()?;
        Chain::from_blocks(blocks)
    }
}
