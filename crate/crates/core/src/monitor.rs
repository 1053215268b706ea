//! Online monitor: replays abstracted implementation inputs on a shadow
//! configuration of the reference model and raises alarms on divergence.
//!
//! The loop per event: abstract the input (identity on this repo's own
//! trace format), apply the corresponding reference transition to the
//! shadow state, and alarm when the transition is not enabled for the
//! input, the payload is one the model rejects, or the resulting chain
//! fails validation. A failing event leaves the shadow at the last good
//! configuration; processing continues.
//!
//! Alarms carry a recommended action only — the monitor never stops
//! anything itself.

use crate::consensus::sim::TraceEventWire;
use crate::consensus::{
    self, best_tip, classify_block, mint_block, Addr, BlockDisposition, Conf, Msg, Packet,
};
use crate::group::Backend;
use crate::tx;
use crate::verdict::Verdict;
use serde::Serialize;
use std::time::Instant;

/// One abstracted implementation event: who took which transition on what
/// input. Sequence numbers must strictly increase per stream.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MonitorEvent {
    pub seq: u64,
    pub node: Addr,
    pub transition: String,
    pub input: Option<Packet>,
    /// The raw line the event was abstracted from, for diagnostics.
    pub raw: String,
}

impl MonitorEvent {
    pub fn from_trace_line(backend: Backend, line: &str) -> Result<MonitorEvent, String> {
        let wire: TraceEventWire = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let input = wire
            .input
            .as_ref()
            .map(|p| Packet::from_wire(backend, p))
            .transpose()
            .map_err(|e| e.to_string())?;
        Ok(MonitorEvent {
            seq: wire.step,
            node: Addr::new(wire.node),
            transition: wire.transition,
            input,
            raw: line.to_string(),
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AlarmKind {
    /// The event itself is unusable (bad line, unknown node, broken
    /// sequence numbering).
    Parse,
    /// The model refuses the transition or its result.
    Divergence,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
    Critical,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Stop,
    Suspend,
    Observe,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct Alarm {
    pub seq: u64,
    pub kind: AlarmKind,
    /// Summary of the shadow state the model expected to continue from.
    pub expected: String,
    /// Why the event diverged.
    pub observed: String,
    pub severity: Severity,
    pub action: Action,
}

impl Alarm {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("alarms always serialize")
    }
}

/// Shadow-state summary used in alarms: the node's best tip and height.
fn state_summary(conf: &Conf, node: &Addr) -> String {
    match conf.nodes.get(node) {
        Some(st) => match best_tip(st) {
            Some((tip, chain)) => format!("node {node}: best tip {tip} at height {}", chain.len()),
            None => format!("node {node}: no valid chain"),
        },
        None => format!("node {node}: unknown"),
    }
}

/// A monitored stream: the shadow configuration plus sequencing state.
/// Streams are independent; monitor several by holding several `Monitor`s.
pub struct Monitor {
    shadow: Conf,
    last_seq: Option<u64>,
    events: u64,
    parse_alarms: u64,
    divergence_alarms: u64,
}

impl Monitor {
    pub fn new(shadow: Conf) -> Monitor {
        Monitor {
            shadow,
            last_seq: None,
            events: 0,
            parse_alarms: 0,
            divergence_alarms: 0,
        }
    }

    pub fn shadow(&self) -> &Conf {
        &self.shadow
    }

    fn parse_alarm(&mut self, seq: u64, node: &Addr, observed: String) -> Alarm {
        self.parse_alarms += 1;
        Alarm {
            seq,
            kind: AlarmKind::Parse,
            expected: state_summary(&self.shadow, node),
            observed,
            severity: Severity::Warning,
            action: Action::Observe,
        }
    }

    fn divergence_alarm(
        &mut self,
        seq: u64,
        node: &Addr,
        observed: String,
        severity: Severity,
        action: Action,
    ) -> Alarm {
        self.divergence_alarms += 1;
        Alarm {
            seq,
            kind: AlarmKind::Divergence,
            expected: state_summary(&self.shadow, node),
            observed,
            severity,
            action,
        }
    }

    /// Apply one event to the shadow. `None` means the shadow followed the
    /// implementation; `Some(alarm)` means it did not, and the shadow still
    /// holds the last good configuration.
    pub fn ingest(&mut self, ev: &MonitorEvent) -> Option<Alarm> {
        self.events += 1;
        if let Some(last) = self.last_seq {
            if ev.seq <= last {
                return Some(self.parse_alarm(
                    ev.seq,
                    &ev.node,
                    format!("sequence number {} not after {}", ev.seq, last),
                ));
            }
        }
        self.last_seq = Some(ev.seq);

        let Some(node_state) = self.shadow.nodes.get(&ev.node) else {
            return Some(self.parse_alarm(ev.seq, &ev.node, format!("unknown node {}", ev.node)));
        };
        let node_state = node_state.clone();

        let effect = match ev.transition.as_str() {
            "mintBlock" => {
                if ev.input.is_some() {
                    return Some(self.parse_alarm(
                        ev.seq,
                        &ev.node,
                        "mintBlock carries an input packet".into(),
                    ));
                }
                match mint_block(&ev.node, &node_state) {
                    Some(effect) => effect,
                    None => {
                        return Some(self.divergence_alarm(
                            ev.seq,
                            &ev.node,
                            "mintBlock not enabled: no usable pool transactions".into(),
                            Severity::Critical,
                            Action::Stop,
                        ));
                    }
                }
            }
            tag @ ("rcvAddr" | "rcvConnect" | "rcvTx" | "rcvBlock") => {
                let Some(packet) = &ev.input else {
                    return Some(self.parse_alarm(
                        ev.seq,
                        &ev.node,
                        format!("{tag} event without a packet"),
                    ));
                };
                if packet.msg.transition_name() != tag {
                    return Some(self.parse_alarm(
                        ev.seq,
                        &ev.node,
                        format!(
                            "transition {tag} does not match message type {}",
                            packet.msg.transition_name()
                        ),
                    ));
                }
                if packet.dest != ev.node {
                    return Some(self.divergence_alarm(
                        ev.seq,
                        &ev.node,
                        format!(
                            "transition not enabled: packet addressed to {}",
                            packet.dest
                        ),
                        Severity::Error,
                        Action::Suspend,
                    ));
                }
                match &packet.msg {
                    Msg::Tx(transaction) => {
                        if let Verdict::Invalid(reason) = tx::validate_transaction(transaction) {
                            return Some(self.divergence_alarm(
                                ev.seq,
                                &ev.node,
                                format!("invalid transaction: {reason}"),
                                Severity::Error,
                                Action::Suspend,
                            ));
                        }
                    }
                    Msg::Block(nb) => {
                        if let BlockDisposition::Reject(reason) = classify_block(&node_state, nb) {
                            return Some(self.divergence_alarm(
                                ev.seq,
                                &ev.node,
                                format!("invalid block: {reason}"),
                                Severity::Critical,
                                Action::Stop,
                            ));
                        }
                    }
                    _ => {}
                }
                match consensus::apply_packet(&ev.node, &node_state, packet) {
                    Some(effect) => effect,
                    None => {
                        return Some(self.divergence_alarm(
                            ev.seq,
                            &ev.node,
                            "transition not enabled for this input".into(),
                            Severity::Error,
                            Action::Suspend,
                        ));
                    }
                }
            }
            other => {
                return Some(self.parse_alarm(
                    ev.seq,
                    &ev.node,
                    format!("unknown transition {other:?}"),
                ));
            }
        };

        // Commit only if the node still reports a valid chain afterwards.
        if let Some(chain) = consensus::best_chain(&effect.state) {
            if let Verdict::Invalid(reason) = crate::ledger::valid_chain(&chain) {
                return Some(self.divergence_alarm(
                    ev.seq,
                    &ev.node,
                    format!("shadow chain became invalid: {reason}"),
                    Severity::Critical,
                    Action::Stop,
                ));
            }
        }
        self.shadow.nodes.insert(ev.node.clone(), effect.state);
        if let Some(packet) = &ev.input {
            self.shadow.packets.remove(packet);
        }
        for packet in effect.outputs {
            self.shadow.packets.insert(packet);
        }
        None
    }
}

#[derive(Serialize, Clone, Debug)]
pub struct MonitorSummary {
    pub events: u64,
    pub alarms: u64,
    pub parse_alarms: u64,
    pub divergence_alarms: u64,
    pub end_state_hash: String,
    /// Measured lag, not assumed: total and per-event processing time.
    pub total_micros: u128,
    pub mean_micros_per_event: f64,
    pub max_micros: u128,
}

/// Drive a monitor over a whole trace. Alarms are handed to `sink` as they
/// occur; lines that do not parse raise parse alarms and are skipped.
pub fn run_monitor<I, S>(backend: Backend, shadow: Conf, lines: I, mut sink: S) -> MonitorSummary
where
    I: IntoIterator,
    I::Item: AsRef<str>,
    S: FnMut(&Alarm),
{
    let mut monitor = Monitor::new(shadow);
    let mut total: u128 = 0;
    let mut max: u128 = 0;
    let mut next_fallback_seq: u64 = 0;
    for line in lines {
        let line = line.as_ref();
        if line.trim().is_empty() {
            continue;
        }
        let started = Instant::now();
        match MonitorEvent::from_trace_line(backend, line) {
            Ok(event) => {
                next_fallback_seq = event.seq.saturating_add(1);
                if let Some(alarm) = monitor.ingest(&event) {
                    sink(&alarm);
                }
            }
            Err(error) => {
                monitor.events += 1;
                let alarm = monitor.parse_alarm(
                    next_fallback_seq,
                    &Addr::new("?"),
                    format!("malformed event: {error}"),
                );
                sink(&alarm);
            }
        }
        let elapsed = started.elapsed().as_micros();
        total += elapsed;
        max = max.max(elapsed);
    }
    let events = monitor.events;
    MonitorSummary {
        events,
        alarms: monitor.parse_alarms + monitor.divergence_alarms,
        parse_alarms: monitor.parse_alarms,
        divergence_alarms: monitor.divergence_alarms,
        end_state_hash: monitor.shadow.state_hash(),
        total_micros: total,
        mean_micros_per_event: if events == 0 {
            0.0
        } else {
            total as f64 / events as f64
        },
        max_micros: max,
    }
}
