//! Node-level consensus state machine over the ledger.
//!
//! Each node keeps the addresses of its peers, a block forest (hash →
//! block, possibly holding forks and orphans) and a pool of transactions
//! waiting to be minted. Receiving transitions consume one packet addressed
//! to the node and may emit new packets; the minting transition is internal.
//! The global step that drives a whole network of nodes lives in [`sim`].
//!
//! Fork choice is the longest valid path from genesis through the forest,
//! ties broken by the smallest tip hash.

pub mod sim;

use crate::group::Backend;
use crate::ledger::{self, Block, Chain, ChainState};
use crate::tx::{self, Transaction, TransactionWire};
use crate::verdict::{Reason, Verdict};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConsensusError {
    #[error("cannot decode {what}: {detail}")]
    Decode { what: &'static str, detail: String },
    #[error(transparent)]
    Ledger(#[from] ledger::LedgerError),
    #[error(transparent)]
    Tx(#[from] tx::TxError),
}

/// Opaque node address; all the machinery needs is equality and order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Addr(pub String);

impl Addr {
    pub fn new(name: impl Into<String>) -> Addr {
        Addr(name.into())
    }
}

impl fmt::Display for Addr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Hash of a node block's canonical serialization.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct BlockHash(pub [u8; 32]);

impl BlockHash {
    /// The `prev` of a genesis block.
    pub const ZERO: BlockHash = BlockHash([0u8; 32]);

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<BlockHash, ConsensusError> {
        let bytes = hex::decode(s).map_err(|e| ConsensusError::Decode {
            what: "block hash",
            detail: e.to_string(),
        })?;
        let arr: [u8; 32] = bytes.try_into().map_err(|_| ConsensusError::Decode {
            what: "block hash",
            detail: "need 32 bytes".into(),
        })?;
        Ok(BlockHash(arr))
    }
}

impl fmt::Display for BlockHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_hex())
    }
}

/// Opaque proof object attached to node blocks. The model has no
/// proof-of-work; [`default_proof_check`] accepts everything, and an
/// alternate policy is one function swap away.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ProofObj(pub String);

pub fn default_proof_check(_pf: &ProofObj) -> bool {
    true
}

/// A ledger block wrapped for the network: parent pointer plus proof object.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct NodeBlock {
    pub prev: BlockHash,
    pub payload: Block,
    pub pf: ProofObj,
}

impl NodeBlock {
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = self.prev.0.to_vec();
        out.extend_from_slice(&(self.pf.0.len() as u32).to_be_bytes());
        out.extend_from_slice(self.pf.0.as_bytes());
        out.extend_from_slice(&self.payload.canonical_bytes());
        out
    }

    pub fn hash(&self) -> BlockHash {
        let digest = Sha256::digest(self.canonical_bytes());
        BlockHash(digest.into())
    }
}

impl PartialOrd for NodeBlock {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for NodeBlock {
    fn cmp(&self, other: &Self) -> Ordering {
        self.canonical_bytes().cmp(&other.canonical_bytes())
    }
}

/// Node-local state: peer addresses, block forest and transaction pool.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct LocState {
    pub peers: BTreeSet<Addr>,
    pub forest: BTreeMap<BlockHash, NodeBlock>,
    pub pool: BTreeSet<Transaction>,
}

impl LocState {
    pub fn with_genesis(genesis: NodeBlock) -> LocState {
        let mut forest = BTreeMap::new();
        forest.insert(genesis.hash(), genesis);
        LocState {
            peers: BTreeSet::new(),
            forest,
            pool: BTreeSet::new(),
        }
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.peers.len() as u32).to_be_bytes());
        for a in &self.peers {
            out.extend_from_slice(&(a.0.len() as u32).to_be_bytes());
            out.extend_from_slice(a.0.as_bytes());
        }
        out.extend_from_slice(&(self.forest.len() as u32).to_be_bytes());
        for (h, b) in &self.forest {
            out.extend_from_slice(&h.0);
            let bytes = b.canonical_bytes();
            out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
            out.extend_from_slice(&bytes);
        }
        out.extend_from_slice(&(self.pool.len() as u32).to_be_bytes());
        for t in &self.pool {
            let bytes = t.canonical_bytes();
            out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
            out.extend_from_slice(&bytes);
        }
        out
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Msg {
    Connect,
    Addrs(BTreeSet<Addr>),
    Tx(Transaction),
    Block(NodeBlock),
}

impl Msg {
    pub fn transition_name(&self) -> &'static str {
        match self {
            Msg::Connect => "rcvConnect",
            Msg::Addrs(_) => "rcvAddr",
            Msg::Tx(_) => "rcvTx",
            Msg::Block(_) => "rcvBlock",
        }
    }
}

/// `(origin, dest, msg)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Packet {
    pub origin: Addr,
    pub dest: Addr,
    pub msg: Msg,
}

/// Global configuration: node states plus the in-flight packet set.
/// Packets form a set, so duplicates coalesce.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Conf {
    pub nodes: BTreeMap<Addr, LocState>,
    pub packets: BTreeSet<Packet>,
}

impl Conf {
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.nodes.len() as u32).to_be_bytes());
        for (a, st) in &self.nodes {
            out.extend_from_slice(&(a.0.len() as u32).to_be_bytes());
            out.extend_from_slice(a.0.as_bytes());
            let bytes = st.canonical_bytes();
            out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
            out.extend_from_slice(&bytes);
        }
        out.extend_from_slice(&(self.packets.len() as u32).to_be_bytes());
        for p in &self.packets {
            let bytes = packet_canonical_bytes(p);
            out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
            out.extend_from_slice(&bytes);
        }
        out
    }

    pub fn state_hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_bytes()))
    }
}

fn packet_canonical_bytes(p: &Packet) -> Vec<u8> {
    let mut out = Vec::new();
    for part in [&p.origin.0, &p.dest.0] {
        out.extend_from_slice(&(part.len() as u32).to_be_bytes());
        out.extend_from_slice(part.as_bytes());
    }
    match &p.msg {
        Msg::Connect => out.push(0),
        Msg::Addrs(addrs) => {
            out.push(1);
            for a in addrs {
                out.extend_from_slice(&(a.0.len() as u32).to_be_bytes());
                out.extend_from_slice(a.0.as_bytes());
            }
        }
        Msg::Tx(tx) => {
            out.push(2);
            out.extend_from_slice(&tx.canonical_bytes());
        }
        Msg::Block(b) => {
            out.push(3);
            out.extend_from_slice(&b.canonical_bytes());
        }
    }
    out
}

/// Result of one local transition: the successor state and emitted packets.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Effect {
    pub state: LocState,
    pub outputs: BTreeSet<Packet>,
}

impl Effect {
    fn unchanged(st: &LocState) -> Effect {
        Effect {
            state: st.clone(),
            outputs: BTreeSet::new(),
        }
    }
}

/// Receive a set of peer addresses.
///
/// New addresses are merged into the peer set; a `Connect` goes to every
/// address we did not know, and the merged set is announced to every peer
/// we already knew. Forest and pool are untouched.
pub fn rcv_addr(me: &Addr, st: &LocState, p: &Packet) -> Option<Effect> {
    if p.dest != *me {
        return None;
    }
    let Msg::Addrs(incoming) = &p.msg else {
        return None;
    };
    let merged: BTreeSet<Addr> = st.peers.union(incoming).cloned().collect();
    let mut outputs = BTreeSet::new();
    for fresh in incoming.difference(&st.peers) {
        outputs.insert(Packet {
            origin: me.clone(),
            dest: fresh.clone(),
            msg: Msg::Connect,
        });
    }
    for known in &st.peers {
        outputs.insert(Packet {
            origin: me.clone(),
            dest: known.clone(),
            msg: Msg::Addrs(merged.clone()),
        });
    }
    Some(Effect {
        state: LocState {
            peers: merged,
            ..st.clone()
        },
        outputs,
    })
}

/// Receive a connection request: learn the origin, reply with our peer set.
pub fn rcv_connect(me: &Addr, st: &LocState, p: &Packet) -> Option<Effect> {
    if p.dest != *me || p.msg != Msg::Connect {
        return None;
    }
    let mut peers = st.peers.clone();
    peers.insert(p.origin.clone());
    let reply = Packet {
        origin: me.clone(),
        dest: p.origin.clone(),
        msg: Msg::Addrs(peers.clone()),
    };
    Some(Effect {
        state: LocState {
            peers,
            ..st.clone()
        },
        outputs: BTreeSet::from([reply]),
    })
}

/// Receive a transaction: pool and relay it when it is valid and spendable
/// against our best chain, drop it silently otherwise. A transaction we
/// already pooled is not re-relayed.
pub fn rcv_tx(me: &Addr, st: &LocState, p: &Packet) -> Option<Effect> {
    if p.dest != *me {
        return None;
    }
    let Msg::Tx(transaction) = &p.msg else {
        return None;
    };
    if st.pool.contains(transaction) {
        return Some(Effect::unchanged(st));
    }
    if !tx::validate_transaction(transaction).is_valid() {
        return Some(Effect::unchanged(st));
    }
    let spendable = match best_chain(st) {
        Some(chain) => ChainState::from_blocks(chain.blocks())
            .map(|state| state.inputs_spendable(&transaction.inputs).is_ok())
            .unwrap_or(false),
        None => false,
    };
    if !spendable {
        return Some(Effect::unchanged(st));
    }
    let mut pool = st.pool.clone();
    pool.insert(transaction.clone());
    let outputs = st
        .peers
        .iter()
        .map(|peer| Packet {
            origin: me.clone(),
            dest: peer.clone(),
            msg: p.msg.clone(),
        })
        .collect();
    Some(Effect {
        state: LocState { pool, ..st.clone() },
        outputs,
    })
}

/// How a node classifies an incoming block before touching its state.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum BlockDisposition {
    /// Hash already in the forest.
    Duplicate,
    /// Parent path incomplete; held without extending any chain.
    Orphan,
    /// Parent path complete but the candidate chain is invalid.
    Reject(Reason),
    /// Extends a known valid chain.
    Extend,
}

/// Walk `prev` pointers back to a genesis root; `None` when a link is
/// missing from the forest.
fn path_to(forest: &BTreeMap<BlockHash, NodeBlock>, mut at: BlockHash) -> Option<Vec<Block>> {
    let mut rev = Vec::new();
    while at != BlockHash::ZERO {
        let node = forest.get(&at)?;
        rev.push(node.payload.clone());
        at = node.prev;
    }
    rev.reverse();
    Some(rev)
}

pub fn classify_block(st: &LocState, nb: &NodeBlock) -> BlockDisposition {
    if st.forest.contains_key(&nb.hash()) {
        return BlockDisposition::Duplicate;
    }
    if !default_proof_check(&nb.pf) {
        return BlockDisposition::Reject(Reason::Malformed);
    }
    let Some(prefix) = path_to(&st.forest, nb.prev) else {
        return BlockDisposition::Orphan;
    };
    let mut candidate = prefix;
    candidate.push(nb.payload.clone());
    let chain = match Chain::from_blocks(candidate) {
        Ok(c) => c,
        Err(_) => return BlockDisposition::Reject(Reason::GenesisShape),
    };
    match ledger::valid_chain(&chain) {
        Verdict::Valid => BlockDisposition::Extend,
        Verdict::Invalid(reason) => BlockDisposition::Reject(reason),
    }
}

/// Receive a block: adopt and relay valid extensions, hold orphans, drop
/// invalid payloads. Pool transactions that stopped being spendable against
/// the new best chain are evicted.
pub fn rcv_block(me: &Addr, st: &LocState, p: &Packet) -> Option<Effect> {
    if p.dest != *me {
        return None;
    }
    let Msg::Block(nb) = &p.msg else { return None };
    match classify_block(st, nb) {
        BlockDisposition::Duplicate | BlockDisposition::Reject(_) => Some(Effect::unchanged(st)),
        BlockDisposition::Orphan => {
            let mut forest = st.forest.clone();
            forest.insert(nb.hash(), nb.clone());
            Some(Effect {
                state: LocState {
                    forest,
                    ..st.clone()
                },
                outputs: BTreeSet::new(),
            })
        }
        BlockDisposition::Extend => {
            let mut forest = st.forest.clone();
            forest.insert(nb.hash(), nb.clone());
            let mut state = LocState {
                forest,
                ..st.clone()
            };
            state.pool = retain_spendable(&state, &state.pool);
            let outputs = st
                .peers
                .iter()
                .map(|peer| Packet {
                    origin: me.clone(),
                    dest: peer.clone(),
                    msg: p.msg.clone(),
                })
                .collect();
            Some(Effect { state, outputs })
        }
    }
}

fn retain_spendable(st: &LocState, pool: &BTreeSet<Transaction>) -> BTreeSet<Transaction> {
    let Some(chain) = best_chain(st) else {
        return pool.clone();
    };
    let Ok(chain_state) = ChainState::from_blocks(chain.blocks()) else {
        return pool.clone();
    };
    pool.iter()
        .filter(|t| chain_state.inputs_spendable(&t.inputs).is_ok())
        .cloned()
        .collect()
}

/// Mint a block from the pool: a maximal conflict-free subset in canonical
/// transaction order is aggregated (zero offset), wrapped with the best tip
/// as parent and a stub proof, adopted locally and broadcast. Not enabled
/// when the pool is empty or every pooled transaction conflicts with the
/// chain.
pub fn mint_block(me: &Addr, st: &LocState) -> Option<Effect> {
    if st.pool.is_empty() {
        return None;
    }
    let (tip, chain) = best_tip(st)?;
    let chain_state = ChainState::from_blocks(chain.blocks()).ok()?;
    let mut scratch = chain_state.clone();
    let mut selected: Vec<Transaction> = Vec::new();
    for candidate in &st.pool {
        if !tx::validate_transaction(candidate).is_valid() {
            continue;
        }
        if scratch.inputs_spendable(&candidate.inputs).is_ok() {
            for input in &candidate.inputs {
                scratch.utxo.remove(&input.commitment);
                scratch.spent.insert(input.commitment);
            }
            selected.push(candidate.clone());
        }
    }
    if selected.is_empty() {
        return None;
    }
    let backend = chain.blocks()[0].backend;
    let payload = ledger::aggregate(backend, &selected)
        .expect("selected transactions are valid and conflict-free");
    let nb = NodeBlock {
        prev: tip,
        payload,
        pf: ProofObj("stub".into()),
    };

    let mut forest = st.forest.clone();
    forest.insert(nb.hash(), nb.clone());
    let mut pool = st.pool.clone();
    for t in &selected {
        pool.remove(t);
    }
    let outputs = st
        .peers
        .iter()
        .map(|peer| Packet {
            origin: me.clone(),
            dest: peer.clone(),
            msg: Msg::Block(nb.clone()),
        })
        .collect();
    Some(Effect {
        state: LocState {
            forest,
            pool,
            ..st.clone()
        },
        outputs,
    })
}

/// Dispatch a packet to the transition matching its message type.
pub fn apply_packet(me: &Addr, st: &LocState, p: &Packet) -> Option<Effect> {
    match p.msg {
        Msg::Connect => rcv_connect(me, st, p),
        Msg::Addrs(_) => rcv_addr(me, st, p),
        Msg::Tx(_) => rcv_tx(me, st, p),
        Msg::Block(_) => rcv_block(me, st, p),
    }
}

/// The longest valid chain through the forest, ties broken by the smallest
/// tip hash (lexicographic on the hex form).
pub fn best_chain(st: &LocState) -> Option<Chain> {
    best_tip(st).map(|(_, chain)| chain)
}

pub fn best_tip(st: &LocState) -> Option<(BlockHash, Chain)> {
    struct Best {
        len: usize,
        tip: BlockHash,
        blocks: Vec<Block>,
    }

    fn children(
        forest: &BTreeMap<BlockHash, NodeBlock>,
        of: BlockHash,
    ) -> Vec<(BlockHash, &NodeBlock)> {
        // BTreeMap iteration keeps this ordered by hash.
        forest
            .iter()
            .filter(|(_, nb)| nb.prev == of)
            .map(|(h, nb)| (*h, nb))
            .collect()
    }

    fn explore(
        forest: &BTreeMap<BlockHash, NodeBlock>,
        tip: BlockHash,
        blocks: &mut Vec<Block>,
        best: &mut Option<Best>,
    ) {
        let better = match best {
            None => true,
            Some(b) => blocks.len() > b.len || (blocks.len() == b.len && tip < b.tip),
        };
        if better {
            *best = Some(Best {
                len: blocks.len(),
                tip,
                blocks: blocks.clone(),
            });
        }
        for (child_hash, child) in children(forest, tip) {
            if !default_proof_check(&child.pf) {
                continue;
            }
            if ledger::validates_prefix(blocks, &child.payload).is_valid() {
                blocks.push(child.payload.clone());
                explore(forest, child_hash, blocks, best);
                blocks.pop();
            }
        }
    }

    let mut best: Option<Best> = None;
    for (hash, nb) in &st.forest {
        let is_root = nb.prev == BlockHash::ZERO
            && nb.payload.genesis
            && default_proof_check(&nb.pf)
            && ledger::validate_block(&nb.payload).is_valid();
        if is_root {
            let mut blocks = vec![nb.payload.clone()];
            explore(&st.forest, *hash, &mut blocks, &mut best);
        }
    }
    best.map(|b| {
        (
            b.tip,
            Chain::from_blocks(b.blocks).expect("paths are non-empty"),
        )
    })
}

// ── JSON wire forms ──────────────────────────────────────────────────────

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct NodeBlockWire {
    pub prev: String,
    pub pf: String,
    pub payload: ledger::BlockWire,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(tag = "type")]
pub enum MsgWire {
    #[serde(rename = "connectMsg")]
    Connect,
    #[serde(rename = "addrMsg")]
    Addrs { addrs: Vec<String> },
    #[serde(rename = "txMsg")]
    Tx { tx: TransactionWire },
    #[serde(rename = "blockMsg")]
    Block { block: NodeBlockWire },
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct PacketWire {
    pub origin: String,
    pub dest: String,
    pub msg: MsgWire,
}

impl NodeBlock {
    pub fn to_wire(&self) -> NodeBlockWire {
        NodeBlockWire {
            prev: self.prev.to_hex(),
            pf: self.pf.0.clone(),
            payload: self.payload.to_wire(),
        }
    }

    pub fn from_wire(backend: Backend, wire: &NodeBlockWire) -> Result<NodeBlock, ConsensusError> {
        Ok(NodeBlock {
            prev: BlockHash::from_hex(&wire.prev)?,
            payload: Block::from_wire(backend, &wire.payload)?,
            pf: ProofObj(wire.pf.clone()),
        })
    }
}

impl Msg {
    pub fn to_wire(&self) -> MsgWire {
        match self {
            Msg::Connect => MsgWire::Connect,
            Msg::Addrs(addrs) => MsgWire::Addrs {
                addrs: addrs.iter().map(|a| a.0.clone()).collect(),
            },
            Msg::Tx(t) => MsgWire::Tx { tx: t.to_wire() },
            Msg::Block(b) => MsgWire::Block { block: b.to_wire() },
        }
    }

    pub fn from_wire(backend: Backend, wire: &MsgWire) -> Result<Msg, ConsensusError> {
        Ok(match wire {
            MsgWire::Connect => Msg::Connect,
            MsgWire::Addrs { addrs } => {
                Msg::Addrs(addrs.iter().map(|a| Addr::new(a.clone())).collect())
            }
            MsgWire::Tx { tx: wire_tx } => Msg::Tx(Transaction::from_wire(backend, wire_tx)?),
            MsgWire::Block { block } => Msg::Block(NodeBlock::from_wire(backend, block)?),
        })
    }
}

impl Packet {
    pub fn to_wire(&self) -> PacketWire {
        PacketWire {
            origin: self.origin.0.clone(),
            dest: self.dest.0.clone(),
            msg: self.msg.to_wire(),
        }
    }

    pub fn from_wire(backend: Backend, wire: &PacketWire) -> Result<Packet, ConsensusError> {
        Ok(Packet {
            origin: Addr::new(wire.origin.clone()),
            dest: Addr::new(wire.dest.clone()),
            msg: Msg::from_wire(backend, &wire.msg)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::TRANSPARENT;
    use crate::tx::{build_transaction, Opening};

    fn addr(s: &str) -> Addr {
        Addr::new(s)
    }

    fn addrs(names: &[&str]) -> BTreeSet<Addr> {
        names.iter().map(|n| addr(n)).collect()
    }

    fn opening(r: u64, v: u64) -> Opening {
        Opening::new(TRANSPARENT.scalar(r), TRANSPARENT.scalar(v))
    }

    fn genesis_node_block(outputs: &[Opening]) -> NodeBlock {
        let coinbase = build_transaction(TRANSPARENT, &[], outputs, 4).unwrap();
        let payload =
            ledger::genesis_block(TRANSPARENT, &[coinbase], TRANSPARENT.scalar(0)).unwrap();
        NodeBlock {
            prev: BlockHash::ZERO,
            payload,
            pf: ProofObj("genesis".into()),
        }
    }

    fn packet(origin: &str, dest: &str, msg: Msg) -> Packet {
        Packet {
            origin: addr(origin),
            dest: addr(dest),
            msg,
        }
    }

    #[test]
    fn rcv_addr_reproduces_the_two_step_gossip_trace() {
        // Golden two-step scenario: an empty node learns {a1,a2}, then
        // {a1,a3}, with the exact packet sets at each step.
        let me = addr("this");
        let st = LocState::default();

        let step1 = rcv_addr(
            &me,
            &st,
            &packet("env", "this", Msg::Addrs(addrs(&["a1", "a2"]))),
        )
        .unwrap();
        assert_eq!(step1.state.peers, addrs(&["a1", "a2"]));
        assert_eq!(
            step1.outputs,
            BTreeSet::from([
                packet("this", "a1", Msg::Connect),
                packet("this", "a2", Msg::Connect),
            ])
        );

        let step2 = rcv_addr(
            &me,
            &step1.state,
            &packet("env", "this", Msg::Addrs(addrs(&["a1", "a3"]))),
        )
        .unwrap();
        assert_eq!(step2.state.peers, addrs(&["a1", "a2", "a3"]));
        let announced = Msg::Addrs(addrs(&["a1", "a2", "a3"]));
        assert_eq!(
            step2.outputs,
            BTreeSet::from([
                packet("this", "a3", Msg::Connect),
                packet("this", "a1", announced.clone()),
                packet("this", "a2", announced),
            ])
        );
    }

    #[test]
    fn rcv_addr_changes_only_the_peer_set() {
        let me = addr("this");
        let mut st = LocState::with_genesis(genesis_node_block(&[opening(5, 0)]));
        let spend = build_transaction(TRANSPARENT, &[opening(5, 0)], &[opening(9, 0)], 4).unwrap();
        st.pool.insert(spend.tx);
        let effect =
            rcv_addr(&me, &st, &packet("env", "this", Msg::Addrs(addrs(&["a1"])))).unwrap();
        assert_eq!(effect.state.forest, st.forest);
        assert_eq!(effect.state.pool, st.pool);
    }

    #[test]
    fn rcv_addr_with_empty_payload_and_empty_peers_does_nothing() {
        let me = addr("this");
        let st = LocState::default();
        let effect = rcv_addr(
            &me,
            &st,
            &packet("env", "this", Msg::Addrs(BTreeSet::new())),
        )
        .unwrap();
        assert!(effect.state.peers.is_empty());
        assert!(effect.outputs.is_empty());
    }

    #[test]
    fn rcv_addr_requires_matching_destination() {
        let me = addr("this");
        let st = LocState::default();
        assert!(rcv_addr(
            &me,
            &st,
            &packet("env", "elsewhere", Msg::Addrs(addrs(&["a1"])))
        )
        .is_none());
        assert!(rcv_addr(&me, &st, &packet("env", "this", Msg::Connect)).is_none());
    }

    #[test]
    fn rcv_connect_learns_origin_and_replies() {
        let me = addr("this");
        let st = LocState {
            peers: addrs(&["a1"]),
            ..LocState::default()
        };
        let effect = rcv_connect(&me, &st, &packet("a2", "this", Msg::Connect)).unwrap();
        assert_eq!(effect.state.peers, addrs(&["a1", "a2"]));
        assert_eq!(
            effect.outputs,
            BTreeSet::from([packet("this", "a2", Msg::Addrs(addrs(&["a1", "a2"])))])
        );

        // Known origin: peer set unchanged, reply still sent.
        let again = rcv_connect(&me, &effect.state, &packet("a2", "this", Msg::Connect)).unwrap();
        assert_eq!(again.state.peers, addrs(&["a1", "a2"]));
        assert_eq!(again.outputs.len(), 1);

        assert!(rcv_connect(&me, &st, &packet("a2", "other", Msg::Connect)).is_none());
    }

    fn node_with_chain() -> (Addr, LocState, Opening) {
        let me = addr("n0");
        let coin = opening(5, 0);
        let mut st = LocState::with_genesis(genesis_node_block(&[coin]));
        st.peers = addrs(&["n1", "n2"]);
        (me, st, coin)
    }

    #[test]
    fn rcv_tx_pools_and_relays_valid_transactions() {
        let (me, st, coin) = node_with_chain();
        let spend = build_transaction(TRANSPARENT, &[coin], &[opening(9, 0)], 4).unwrap();
        let effect = rcv_tx(&me, &st, &packet("env", "n0", Msg::Tx(spend.tx.clone()))).unwrap();
        assert!(effect.state.pool.contains(&spend.tx));
        assert_eq!(effect.outputs.len(), 2); // relayed to both peers

        // Duplicate delivery: consumed, no re-relay.
        let again = rcv_tx(
            &me,
            &effect.state,
            &packet("n1", "n0", Msg::Tx(spend.tx.clone())),
        )
        .unwrap();
        assert_eq!(again.state, effect.state);
        assert!(again.outputs.is_empty());
    }

    #[test]
    fn rcv_tx_drops_invalid_and_unspendable_transactions() {
        let (me, st, coin) = node_with_chain();
        let mut bad = build_transaction(TRANSPARENT, &[coin], &[opening(9, 0)], 4)
            .unwrap()
            .tx;
        bad.kernels[0].excess = bad.kernels[0].excess.add(TRANSPARENT.generator()).unwrap();
        let effect = rcv_tx(&me, &st, &packet("env", "n0", Msg::Tx(bad))).unwrap();
        assert_eq!(effect.state, st);
        assert!(effect.outputs.is_empty());

        let ghost =
            build_transaction(TRANSPARENT, &[opening(999, 0)], &[opening(1000, 0)], 4).unwrap();
        let effect = rcv_tx(&me, &st, &packet("env", "n0", Msg::Tx(ghost.tx))).unwrap();
        assert_eq!(effect.state, st);
        assert!(effect.outputs.is_empty());
    }

    fn extend(st: &LocState, txs: &[Transaction], pf: &str) -> NodeBlock {
        let (tip, chain) = best_tip(st).unwrap();
        let payload = ledger::aggregate(chain.blocks()[0].backend, txs).unwrap();
        NodeBlock {
            prev: tip,
            payload,
            pf: ProofObj(pf.into()),
        }
    }

    #[test]
    fn rcv_block_adopts_and_relays_valid_extensions() {
        let (me, st, coin) = node_with_chain();
        let spend = build_transaction(TRANSPARENT, &[coin], &[opening(9, 0)], 4).unwrap();
        let nb = extend(&st, &[spend.tx.clone()], "b1");
        let effect = rcv_block(&me, &st, &packet("n1", "n0", Msg::Block(nb.clone()))).unwrap();
        assert!(effect.state.forest.contains_key(&nb.hash()));
        assert_eq!(effect.outputs.len(), 2);
        assert_eq!(best_chain(&effect.state).unwrap().len(), 2);

        // Same block again: consumed, nothing changes, no relay.
        let again = rcv_block(&me, &effect.state, &packet("n2", "n0", Msg::Block(nb))).unwrap();
        assert_eq!(again.state, effect.state);
        assert!(again.outputs.is_empty());
    }

    #[test]
    fn rcv_block_drops_double_spending_blocks() {
        let (me, st, coin) = node_with_chain();
        let spend1 = build_transaction(TRANSPARENT, &[coin], &[opening(9, 0)], 4).unwrap();
        let nb1 = extend(&st, &[spend1.tx], "b1");
        let st = rcv_block(&me, &st, &packet("n1", "n0", Msg::Block(nb1)))
            .unwrap()
            .state;

        let spend2 = build_transaction(TRANSPARENT, &[coin], &[opening(11, 0)], 4).unwrap();
        let nb2 = extend(&st, &[spend2.tx], "b2");
        assert_eq!(
            classify_block(&st, &nb2),
            BlockDisposition::Reject(Reason::Block {
                index: 2,
                cause: Box::new(Reason::DoubleSpend)
            })
        );
        let effect = rcv_block(&me, &st, &packet("n1", "n0", Msg::Block(nb2.clone()))).unwrap();
        assert!(!effect.state.forest.contains_key(&nb2.hash()));
        assert!(effect.outputs.is_empty());
    }

    #[test]
    fn rcv_block_holds_orphans_without_relay() {
        let (me, st, coin) = node_with_chain();
        let spend = build_transaction(TRANSPARENT, &[coin], &[opening(9, 0)], 4).unwrap();
        let orphan = NodeBlock {
            prev: BlockHash([9u8; 32]),
            payload: ledger::aggregate(TRANSPARENT, &[spend.tx]).unwrap(),
            pf: ProofObj("orphan".into()),
        };
        let effect = rcv_block(&me, &st, &packet("n1", "n0", Msg::Block(orphan.clone()))).unwrap();
        assert!(effect.state.forest.contains_key(&orphan.hash()));
        assert!(effect.outputs.is_empty());
        // The orphan does not extend the best chain.
        assert_eq!(best_chain(&effect.state).unwrap().len(), 1);
    }

    #[test]
    fn mint_block_aggregates_compatible_pool_transactions() {
        let me = addr("n0");
        let coin_a = opening(5, 0);
        let coin_b = opening(6, 0);
        let mut st = LocState::with_genesis(genesis_node_block(&[coin_a, coin_b]));
        st.peers = addrs(&["n1"]);
        let tx_a = build_transaction(TRANSPARENT, &[coin_a], &[opening(21, 0)], 4)
            .unwrap()
            .tx;
        let tx_b = build_transaction(TRANSPARENT, &[coin_b], &[opening(23, 0)], 4)
            .unwrap()
            .tx;
        st.pool.insert(tx_a);
        st.pool.insert(tx_b);

        let effect = mint_block(&me, &st).unwrap();
        assert!(effect.state.pool.is_empty());
        let chain = best_chain(&effect.state).unwrap();
        assert_eq!(chain.len(), 2);
        assert_eq!(chain.blocks()[1].kernels.len(), 2);
        assert_eq!(effect.outputs.len(), 1);
    }

    #[test]
    fn mint_block_picks_one_of_a_conflicting_pair_deterministically() {
        let me = addr("n0");
        let coin = opening(5, 0);
        let mut st = LocState::with_genesis(genesis_node_block(&[coin]));
        let tx_a = build_transaction(TRANSPARENT, &[coin], &[opening(21, 0)], 4)
            .unwrap()
            .tx;
        let tx_b = build_transaction(TRANSPARENT, &[coin], &[opening(23, 0)], 4)
            .unwrap()
            .tx;
        let expected = std::cmp::min(tx_a.clone(), tx_b.clone());
        st.pool.insert(tx_a);
        st.pool.insert(tx_b);

        let effect = mint_block(&me, &st).unwrap();
        let chain = best_chain(&effect.state).unwrap();
        assert_eq!(chain.blocks()[1].kernels, expected.kernels);
        assert_eq!(effect.state.pool.len(), 1); // the loser stays pooled
    }

    #[test]
    fn mint_block_is_not_enabled_without_usable_transactions() {
        let me = addr("n0");
        let coin = opening(5, 0);
        let st = LocState::with_genesis(genesis_node_block(&[coin]));
        assert!(mint_block(&me, &st).is_none());

        // A pool full of chain-conflicting transactions does not enable it
        // either.
        let mut st = st;
        let ghost =
            build_transaction(TRANSPARENT, &[opening(999, 0)], &[opening(1000, 0)], 4).unwrap();
        st.pool.insert(ghost.tx);
        assert!(mint_block(&me, &st).is_none());
    }

    #[test]
    fn best_chain_follows_the_single_path() {
        let (me, st, coin) = node_with_chain();
        let spend = build_transaction(TRANSPARENT, &[coin], &[opening(9, 0)], 4).unwrap();
        let nb = extend(&st, &[spend.tx], "b1");
        let st = rcv_block(&me, &st, &packet("n1", "n0", Msg::Block(nb.clone())))
            .unwrap()
            .state;
        let (tip, chain) = best_tip(&st).unwrap();
        assert_eq!(chain.len(), 2);
        assert_eq!(tip, nb.hash());
    }

    #[test]
    fn best_chain_prefers_the_longer_fork() {
        let me = addr("n0");
        let coin_a = opening(5, 0);
        let coin_b = opening(6, 0);
        let st = LocState::with_genesis(genesis_node_block(&[coin_a, coin_b]));

        // Fork 1: two blocks. Fork 2: one block.
        let spend_a = build_transaction(TRANSPARENT, &[coin_a], &[opening(21, 0)], 4).unwrap();
        let b1 = extend(&st, &[spend_a.tx], "fork1-a");
        let st1 = rcv_block(&me, &st, &packet("x", "n0", Msg::Block(b1)))
            .unwrap()
            .state;
        let spend_b = build_transaction(TRANSPARENT, &[coin_b], &[opening(23, 0)], 4).unwrap();
        let b2 = extend(&st1, &[spend_b.tx], "fork1-b");
        let st2 = rcv_block(&me, &st1, &packet("x", "n0", Msg::Block(b2)))
            .unwrap()
            .state;

        let spend_b2 = build_transaction(TRANSPARENT, &[coin_b], &[opening(25, 0)], 4).unwrap();
        let rival = NodeBlock {
            prev: *st.forest.keys().next().unwrap(),
            payload: ledger::aggregate(TRANSPARENT, &[spend_b2.tx]).unwrap(),
            pf: ProofObj("fork2".into()),
        };
        let st3 = rcv_block(&me, &st2, &packet("x", "n0", Msg::Block(rival)))
            .unwrap()
            .state;
        assert_eq!(best_chain(&st3).unwrap().len(), 3);
    }

    #[test]
    fn equal_length_forks_break_ties_by_smallest_tip_hash() {
        let me = addr("n0");
        let coin = opening(5, 0);
        let st = LocState::with_genesis(genesis_node_block(&[coin]));
        let spend1 = build_transaction(TRANSPARENT, &[coin], &[opening(21, 0)], 4).unwrap();
        let spend2 = build_transaction(TRANSPARENT, &[coin], &[opening(23, 0)], 4).unwrap();
        let b1 = extend(&st, &[spend1.tx], "tie-1");
        let b2 = extend(&st, &[spend2.tx], "tie-2");
        let st = rcv_block(&me, &st, &packet("x", "n0", Msg::Block(b1.clone())))
            .unwrap()
            .state;
        let st = rcv_block(&me, &st, &packet("x", "n0", Msg::Block(b2.clone())))
            .unwrap()
            .state;

        // Both tips extend genesis; enumerate and take the smaller hash.
        let expected = b1.hash().min(b2.hash());
        let (tip, chain) = best_tip(&st).unwrap();
        assert_eq!(chain.len(), 2);
        assert_eq!(tip, expected);
    }

    #[test]
    fn packets_round_trip_through_wire_form() {
        let (_, st, coin) = node_with_chain();
        let spend = build_transaction(TRANSPARENT, &[coin], &[opening(9, 0)], 4).unwrap();
        let nb = extend(&st, &[spend.tx.clone()], "b1");
        for msg in [
            Msg::Connect,
            Msg::Addrs(addrs(&["a1", "a2"])),
            Msg::Tx(spend.tx.clone()),
            Msg::Block(nb),
        ] {
            let p = packet("a", "b", msg);
            let json = serde_json::to_string(&p.to_wire()).unwrap();
            let back =
                Packet::from_wire(TRANSPARENT, &serde_json::from_str(&json).unwrap()).unwrap();
            assert_eq!(back, p);
        }
    }
}
