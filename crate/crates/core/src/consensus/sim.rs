//! Seeded discrete-event simulator driving a network of consensus nodes.
//!
//! One global step picks a deliverable packet or an enabled internal
//! transition under a deterministic pseudo-random scheduler, applies the
//! node-local transition, removes the consumed packet and adds the emitted
//! ones. Packet loss and duplication are opt-in simulation parameters;
//! packets form a set, so duplicates coalesce. Everything is a pure
//! function of the seed: equal seeds give byte-identical traces.

use super::{
    apply_packet, best_tip, mint_block, Addr, Conf, ConsensusError, Effect, LocState, Msg,
    NodeBlock, Packet, PacketWire, ProofObj,
};
use crate::group::{Backend, TOY_CURVE, TRANSPARENT};
use crate::ledger;
use crate::tx::{build_transaction, Opening, Transaction};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("bad simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Consensus(#[from] ConsensusError),
    #[error(transparent)]
    Ledger(#[from] ledger::LedgerError),
    #[error(transparent)]
    Tx(#[from] crate::tx::TxError),
}

/// Deterministic scheduler: a ChaCha stream plus loss/duplication rates.
pub struct Scheduler {
    rng: ChaCha8Rng,
    loss: f64,
    duplication: f64,
}

impl Scheduler {
    pub fn new(seed: u64, loss: f64, duplication: f64) -> Scheduler {
        Scheduler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            loss,
            duplication,
        }
    }
}

/// One trace line: which node took which transition, on which input, with
/// which outputs.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TraceEvent {
    pub step: u64,
    pub node: Addr,
    pub transition: String,
    pub input: Option<Packet>,
    pub outputs: BTreeSet<Packet>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct TraceEventWire {
    pub step: u64,
    pub node: String,
    pub transition: String,
    #[serde(rename = "in")]
    pub input: Option<PacketWire>,
    pub out: Vec<PacketWire>,
}

impl TraceEvent {
    pub fn to_wire(&self) -> TraceEventWire {
        TraceEventWire {
            step: self.step,
            node: self.node.0.clone(),
            transition: self.transition.clone(),
            input: self.input.as_ref().map(|p| p.to_wire()),
            out: self.outputs.iter().map(|p| p.to_wire()).collect(),
        }
    }

    pub fn from_wire(
        backend: Backend,
        wire: &TraceEventWire,
    ) -> Result<TraceEvent, ConsensusError> {
        Ok(TraceEvent {
            step: wire.step,
            node: Addr::new(wire.node.clone()),
            transition: wire.transition.clone(),
            input: wire
                .input
                .as_ref()
                .map(|p| Packet::from_wire(backend, p))
                .transpose()?,
            outputs: wire
                .out
                .iter()
                .map(|p| Packet::from_wire(backend, p))
                .collect::<Result<BTreeSet<_>, _>>()?,
        })
    }

    /// One JSON Lines trace line.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&self.to_wire()).expect("wire form always serializes")
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum StepOutcome {
    Applied(TraceEvent),
    /// No deliverable packet and no enabled internal transition.
    Quiescent,
}

enum Choice {
    Deliver(Packet),
    Mint(Addr),
}

/// Apply one scheduled event. The trace event carries step number zero;
/// the driver overwrites it with the real index.
pub fn step(conf: &Conf, sched: &mut Scheduler) -> (Conf, StepOutcome) {
    let mut choices: Vec<Choice> = Vec::new();
    for p in &conf.packets {
        if conf.nodes.contains_key(&p.dest) {
            choices.push(Choice::Deliver(p.clone()));
        }
    }
    let mut mint_effects: BTreeMap<Addr, Effect> = BTreeMap::new();
    for (addr, st) in &conf.nodes {
        if let Some(effect) = mint_block(addr, st) {
            mint_effects.insert(addr.clone(), effect);
            choices.push(Choice::Mint(addr.clone()));
        }
    }
    if choices.is_empty() {
        return (conf.clone(), StepOutcome::Quiescent);
    }

    let pick = sched.rng.random_range(0..choices.len());
    let mut next = conf.clone();
    let (node, transition, input, effect) = match &choices[pick] {
        Choice::Deliver(p) => {
            let st = &conf.nodes[&p.dest];
            let effect = apply_packet(&p.dest, st, p).expect("routed packets are always enabled");
            let keep_packet = sched.duplication > 0.0 && sched.rng.random_bool(sched.duplication);
            if !keep_packet {
                next.packets.remove(p);
            }
            (
                p.dest.clone(),
                p.msg.transition_name().to_string(),
                Some(p.clone()),
                effect,
            )
        }
        Choice::Mint(addr) => {
            let effect = mint_effects.remove(addr).expect("cached above");
            (addr.clone(), "mintBlock".to_string(), None, effect)
        }
    };
    next.nodes.insert(node.clone(), effect.state);
    let mut delivered = BTreeSet::new();
    for packet in effect.outputs {
        let lost = sched.loss > 0.0 && sched.rng.random_bool(sched.loss);
        if !lost {
            next.packets.insert(packet.clone());
            delivered.insert(packet);
        }
    }
    let event = TraceEvent {
        step: 0,
        node,
        transition,
        input,
        outputs: delivered,
    };
    (next, StepOutcome::Applied(event))
}

#[derive(Serialize, Deserialize, Clone, Copy, PartialEq, Eq, Debug)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Full,
    Ring,
}

/// Simulation config; also the schema of the `sim run --config` JSON file.
#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub nodes: usize,
    pub topology: Topology,
    pub seed: u64,
    pub steps: u64,
    pub loss: f64,
    pub duplication: f64,
    pub backend: String,
    /// Number of spend transactions injected from the environment.
    pub inject_txs: usize,
    /// Outputs minted in the genesis block (each of value zero).
    pub genesis_outputs: usize,
    /// Kick off address gossip with an `addrMsg` naming every node.
    pub addr_gossip: bool,
    pub n_bits: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            nodes: 3,
            topology: Topology::Full,
            seed: 0,
            steps: 100,
            loss: 0.0,
            duplication: 0.0,
            backend: "transparent".into(),
            inject_txs: 2,
            genesis_outputs: 4,
            addr_gossip: false,
            n_bits: 4,
        }
    }
}

impl SimConfig {
    pub fn backend(&self) -> Result<Backend, SimError> {
        match self.backend.as_str() {
            "transparent" => Ok(TRANSPARENT),
            "toycurve" => Ok(TOY_CURVE),
            other => Err(SimError::Config(format!("unknown backend {other:?}"))),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.nodes == 0 {
            return Err(SimError::Config("need at least one node".into()));
        }
        for (name, rate) in [("loss", self.loss), ("duplication", self.duplication)] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(SimError::Config(format!(
                    "{name} rate {rate} outside [0, 1]"
                )));
            }
        }
        if self.inject_txs > self.genesis_outputs {
            return Err(SimError::Config(format!(
                "cannot inject {} transactions from {} genesis outputs",
                self.inject_txs, self.genesis_outputs
            )));
        }
        self.backend()?;
        Ok(())
    }
}

/// A built initial configuration plus the builder-side secrets the harness
/// may need to craft further spends.
pub struct Scenario {
    pub conf: Conf,
    pub genesis: NodeBlock,
    /// Openings of the genesis outputs, in creation order.
    pub coins: Vec<Opening>,
    /// Openings of the injected transactions' outputs.
    pub spent_into: Vec<Opening>,
    /// The injected transactions themselves.
    pub injected: Vec<Transaction>,
}

pub fn node_name(i: usize) -> Addr {
    Addr::new(format!("n{i}"))
}

/// Build the initial configuration: every node starts with the same genesis
/// forest, peers wired per topology, and the configured packets in flight.
pub fn build_scenario(cfg: &SimConfig) -> Result<Scenario, SimError> {
    cfg.validate()?;
    let backend = cfg.backend()?;
    let derive = |label: &str, index: u64| {
        backend.scalar_from_hash(&[
            b"mw.sim",
            label.as_bytes(),
            &cfg.seed.to_be_bytes(),
            &index.to_be_bytes(),
        ])
    };

    let coins: Vec<Opening> = (0..cfg.genesis_outputs)
        .map(|i| Opening::new(derive("coin", i as u64), backend.scalar(0)))
        .collect();
    let coinbase = build_transaction(backend, &[], &coins, cfg.n_bits)?;
    let payload = ledger::genesis_block(backend, &[coinbase], backend.scalar(0))?;
    let genesis = NodeBlock {
        prev: super::BlockHash::ZERO,
        payload,
        pf: ProofObj("genesis".into()),
    };

    let names: Vec<Addr> = (0..cfg.nodes).map(node_name).collect();
    let mut nodes = BTreeMap::new();
    for (i, name) in names.iter().enumerate() {
        let mut st = LocState::with_genesis(genesis.clone());
        st.peers = match cfg.topology {
            Topology::Full => names.iter().filter(|a| *a != name).cloned().collect(),
            Topology::Ring => {
                let mut peers = BTreeSet::new();
                if cfg.nodes > 1 {
                    peers.insert(names[(i + 1) % cfg.nodes].clone());
                    peers.insert(names[(i + cfg.nodes - 1) % cfg.nodes].clone());
                }
                peers
            }
        };
        nodes.insert(name.clone(), st);
    }

    let env = Addr::new("env");
    let mut packets = BTreeSet::new();
    let mut injected = Vec::new();
    let mut spent_into = Vec::new();
    for i in 0..cfg.inject_txs {
        let out = Opening::new(derive("out", i as u64), backend.scalar(0));
        let built = build_transaction(backend, &[coins[i]], &[out], cfg.n_bits)?;
        packets.insert(Packet {
            origin: env.clone(),
            dest: names[i % cfg.nodes].clone(),
            msg: Msg::Tx(built.tx.clone()),
        });
        spent_into.push(out);
        injected.push(built.tx);
    }
    if cfg.addr_gossip {
        packets.insert(Packet {
            origin: env.clone(),
            dest: names[0].clone(),
            msg: Msg::Addrs(names.iter().cloned().collect()),
        });
    }

    Ok(Scenario {
        conf: Conf { nodes, packets },
        genesis,
        coins,
        spent_into,
        injected,
    })
}

#[derive(Serialize, Clone, Debug)]
pub struct SimSummary {
    pub steps_executed: u64,
    pub quiescent_at: Option<u64>,
    /// All nodes report the same best chain.
    pub agreement: bool,
    pub tips: BTreeMap<String, String>,
    pub chain_lengths: BTreeMap<String, usize>,
    pub state_hash: String,
}

/// Run a full simulation: returns the trace, a summary, and the final
/// configuration.
pub fn run(cfg: &SimConfig) -> Result<(Vec<TraceEvent>, SimSummary, Conf), SimError> {
    let scenario = build_scenario(cfg)?;
    let mut conf = scenario.conf;
    let mut sched = Scheduler::new(cfg.seed, cfg.loss, cfg.duplication);
    let mut trace = Vec::new();
    let mut quiescent_at = None;
    for step_no in 0..cfg.steps {
        let (next, outcome) = step(&conf, &mut sched);
        match outcome {
            StepOutcome::Applied(mut event) => {
                event.step = step_no;
                trace.push(event);
                conf = next;
            }
            StepOutcome::Quiescent => {
                quiescent_at = Some(step_no);
                break;
            }
        }
    }

    let mut tips = BTreeMap::new();
    let mut chain_lengths = BTreeMap::new();
    let mut tip_set = BTreeSet::new();
    for (addr, st) in &conf.nodes {
        match best_tip(st) {
            Some((tip, chain)) => {
                tip_set.insert(tip);
                tips.insert(addr.0.clone(), tip.to_hex());
                chain_lengths.insert(addr.0.clone(), chain.len());
            }
            None => {
                tips.insert(addr.0.clone(), "none".into());
                chain_lengths.insert(addr.0.clone(), 0);
            }
        }
    }
    let agreement = tip_set.len() == 1 && tips.values().all(|t| t != "none");
    let summary = SimSummary {
        steps_executed: trace.len() as u64,
        quiescent_at,
        agreement,
        tips,
        chain_lengths,
        state_hash: conf.state_hash(),
    };
    Ok((trace, summary, conf))
}

/// Render a trace as JSON Lines.
pub fn trace_to_jsonl(trace: &[TraceEvent]) -> String {
    let mut out = String::new();
    for event in trace {
        out.push_str(&event.to_json_line());
        out.push('\n');
    }
    out
}

/// Parse a JSON Lines trace.
pub fn trace_from_jsonl(backend: Backend, text: &str) -> Result<Vec<TraceEvent>, ConsensusError> {
    text.lines()
        .filter(|line| !line.trim().is_empty())
        .map(|line| {
            let wire: TraceEventWire =
                serde_json::from_str(line).map_err(|e| ConsensusError::Decode {
                    what: "trace event",
                    detail: e.to_string(),
                })?;
            TraceEvent::from_wire(backend, &wire)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verdict::Verdict;

    #[test]
    fn single_packet_is_consumed_and_outputs_added() {
        let cfg = SimConfig {
            nodes: 2,
            inject_txs: 1,
            genesis_outputs: 1,
            ..SimConfig::default()
        };
        let scenario = build_scenario(&cfg).unwrap();
        assert_eq!(scenario.conf.packets.len(), 1);
        let mut sched = Scheduler::new(0, 0.0, 0.0);
        let (next, outcome) = step(&scenario.conf, &mut sched);
        let StepOutcome::Applied(event) = outcome else {
            panic!("expected applied")
        };
        assert_eq!(event.transition, "rcvTx");
        assert!(!next.packets.contains(event.input.as_ref().unwrap()));
        // The receiving node relayed to its single peer.
        assert_eq!(event.outputs.len(), 1);
        assert!(next.packets.iter().any(|p| matches!(p.msg, Msg::Tx(_))));
    }

    #[test]
    fn empty_network_is_quiescent() {
        let cfg = SimConfig {
            nodes: 2,
            inject_txs: 0,
            ..SimConfig::default()
        };
        let scenario = build_scenario(&cfg).unwrap();
        let mut sched = Scheduler::new(0, 0.0, 0.0);
        let (next, outcome) = step(&scenario.conf, &mut sched);
        assert_eq!(outcome, StepOutcome::Quiescent);
        assert_eq!(next, scenario.conf);
    }

    #[test]
    fn fixed_seed_runs_are_identical() {
        let cfg = SimConfig {
            nodes: 4,
            steps: 1000,
            seed: 42,
            inject_txs: 3,
            genesis_outputs: 4,
            addr_gossip: true,
            ..SimConfig::default()
        };
        let (trace_a, summary_a, conf_a) = run(&cfg).unwrap();
        let (trace_b, summary_b, conf_b) = run(&cfg).unwrap();
        assert_eq!(trace_to_jsonl(&trace_a), trace_to_jsonl(&trace_b));
        assert_eq!(conf_a, conf_b);
        assert_eq!(summary_a.state_hash, summary_b.state_hash);
    }

    #[test]
    fn lossless_full_mesh_converges_at_quiescence() {
        let cfg = SimConfig {
            nodes: 5,
            steps: 5000,
            seed: 7,
            inject_txs: 3,
            genesis_outputs: 4,
            ..SimConfig::default()
        };
        let (_, summary, conf) = run(&cfg).unwrap();
        assert!(summary.quiescent_at.is_some(), "run did not quiesce");
        assert!(summary.agreement, "tips disagree: {:?}", summary.tips);
        // Chains grew beyond genesis and every adopted chain is valid.
        for st in conf.nodes.values() {
            let chain = super::super::best_chain(st).unwrap();
            assert!(chain.len() > 1);
            assert_eq!(ledger::valid_chain(&chain), Verdict::Valid);
        }
    }

    #[test]
    fn adopted_chains_stay_valid_throughout_a_lossy_run() {
        let cfg = SimConfig {
            nodes: 3,
            steps: 400,
            seed: 99,
            loss: 0.2,
            duplication: 0.1,
            inject_txs: 3,
            genesis_outputs: 4,
            addr_gossip: true,
            ..SimConfig::default()
        };
        let scenario = build_scenario(&cfg).unwrap();
        let mut conf = scenario.conf;
        let mut sched = Scheduler::new(cfg.seed, cfg.loss, cfg.duplication);
        for _ in 0..cfg.steps {
            let (next, outcome) = step(&conf, &mut sched);
            if outcome == StepOutcome::Quiescent {
                break;
            }
            conf = next;
            for st in conf.nodes.values() {
                if let Some(chain) = super::super::best_chain(st) {
                    assert_eq!(ledger::valid_chain(&chain), Verdict::Valid);
                }
            }
        }
    }

    #[test]
    fn trace_round_trips_through_jsonl() {
        let cfg = SimConfig {
            nodes: 3,
            steps: 50,
            seed: 5,
            ..SimConfig::default()
        };
        let (trace, _, _) = run(&cfg).unwrap();
        assert!(!trace.is_empty());
        let text = trace_to_jsonl(&trace);
        let back = trace_from_jsonl(TRANSPARENT, &text).unwrap();
        assert_eq!(back, trace);
    }

    #[test]
    fn config_validation_rejects_nonsense() {
        assert!(SimConfig {
            nodes: 0,
            ..SimConfig::default()
        }
        .validate()
        .is_err());
        assert!(SimConfig {
            loss: 1.5,
            ..SimConfig::default()
        }
        .validate()
        .is_err());
        assert!(SimConfig {
            backend: "sha1".into(),
            ..SimConfig::default()
        }
        .validate()
        .is_err());
        assert!(SimConfig {
            inject_txs: 9,
            genesis_outputs: 2,
            ..SimConfig::default()
        }
        .validate()
        .is_err());
        assert!(SimConfig::default().validate().is_ok());
    }
}
