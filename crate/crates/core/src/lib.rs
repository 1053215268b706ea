//! Desk-scale reference model of the MimbleWimble protocol, together with a
//! deterministic network simulator, a test-template test-case generator and
//! an online trace monitor.
//!
//! Layering, bottom to top:
//!
//! * [`group`] — pluggable prime-order groups (transparent `Z_q` oracle and a
//!   toy elliptic curve) with generators G and H.
//! * [`crypto`] — Pedersen commitments, Schnorr signatures over the kernel
//!   excess, and bit-decomposition range proofs.
//! * [`tx`] — transaction construction and the three-clause validity check.
//! * [`ledger`] — blocks, kernel offsets, cut-through, UTXO tracking and
//!   chain validation.
//! * [`consensus`] — the node state machine (peer gossip, tx/block relay,
//!   minting, fork choice) and a seeded discrete-event simulator.
//! * [`mbt`] — a generic test-template engine: valid input spaces, testing
//!   tactics, tree pruning and abstract test-case generation.
//! * [`monitor`] — replays abstracted traces against the model and raises
//!   alarms on divergence.
//!
//! Everything is deterministic given explicit seeds; there is no ambient
//! entropy anywhere in the library.

pub mod consensus;
pub mod crypto;
pub mod group;
pub mod ledger;
pub mod mbt;
pub mod monitor;
pub mod testkit;
pub mod tx;
pub mod verdict;
