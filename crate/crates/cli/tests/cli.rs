//! End-to-end tests of the `mw` binary: every subcommand is a thin
//! adapter, so file-level results must match calling the library directly,
//! and the documented exit codes must hold.

use mw_core::consensus::sim::{self, SimConfig};
use mw_core::consensus::{best_tip, Addr, Msg, NodeBlock, Packet, ProofObj};
use mw_core::group::TRANSPARENT;
use mw_core::ledger;
use mw_core::testkit;
use mw_core::tx::{build_transaction, Opening};
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mw(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mw"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn chain_validate_accepts_a_genesis_only_chain() {
    let dir = tempfile::tempdir().unwrap();
    let backend = TRANSPARENT;
    let coinbase = build_transaction(
        backend,
        &[],
        &[Opening::new(backend.scalar(11), backend.scalar(0))],
        4,
    )
    .unwrap();
    let genesis = ledger::genesis_block(backend, &[coinbase], backend.scalar(0)).unwrap();
    let chain = ledger::Chain::new(genesis);
    fs::write(dir.path().join("genesis-only.json"), chain.to_json()).unwrap();

    let out = mw(dir.path(), &["chain", "validate", "genesis-only.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).trim(), "valid");
}

#[test]
fn chain_validate_rejects_double_spends_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = testkit::rng(41);
    let (chain, at) = testkit::double_spend_chain(TRANSPARENT, &mut rng, 4);
    fs::write(dir.path().join("bad.json"), chain.to_json()).unwrap();
    let out = mw(dir.path(), &["chain", "validate", "bad.json"]);
    assert_eq!(code(&out), 1);
    assert!(
        stdout(&out).contains(&format!("block {at}")),
        "{}",
        stdout(&out)
    );
    assert!(stdout(&out).contains("already spent"));
}

#[test]
fn cutthrough_applied_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = testkit::rng(42);
    let (block, _, _) = testkit::block_with_matching_pairs(TRANSPARENT, &mut rng, 2, 4);
    fs::write(dir.path().join("b.json"), block.to_json()).unwrap();

    let out = mw(
        dir.path(),
        &["block", "cutthrough", "b.json", "--out", "b1.json"],
    );
    assert_eq!(code(&out), 0);
    let out = mw(
        dir.path(),
        &["block", "cutthrough", "b1.json", "--out", "b2.json"],
    );
    assert_eq!(code(&out), 0);
    let once = fs::read(dir.path().join("b1.json")).unwrap();
    let twice = fs::read(dir.path().join("b2.json")).unwrap();
    assert_eq!(once, twice);
    assert_ne!(once, fs::read(dir.path().join("b.json")).unwrap());
}

#[test]
fn tx_build_validate_and_tamper() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("plan.json"),
        r#"{"spends":[{"r":2,"v":5}],"outputs":[{"r":7,"v":5}],"n_bits":4}"#,
    )
    .unwrap();
    let out = mw(
        dir.path(),
        &[
            "tx",
            "build",
            "plan.json",
            "--out",
            "tx.json",
            "--secret-out",
            "sk.json",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = mw(dir.path(), &["tx", "validate", "tx.json"]);
    assert_eq!(code(&out), 0);

    // The derived kernel secret is the blinding delta.
    let secret: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sk.json")).unwrap()).unwrap();
    assert_eq!(secret["kernel_secret"], "0000000000000005");

    // Corrupt one hex digit of the kernel signature.
    let text = fs::read_to_string(dir.path().join("tx.json")).unwrap();
    let mut wire: serde_json::Value = serde_json::from_str(&text).unwrap();
    let s = wire["kernels"][0]["sig"]["s"].as_str().unwrap().to_string();
    let flipped = if s.ends_with('0') {
        format!("{}1", &s[..15])
    } else {
        format!("{}0", &s[..15])
    };
    wire["kernels"][0]["sig"]["s"] = serde_json::Value::String(flipped);
    fs::write(dir.path().join("tampered.json"), wire.to_string()).unwrap();
    let out = mw(dir.path(), &["tx", "validate", "tampered.json"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("signature"));
}

#[test]
fn aggregate_with_offset_needs_the_kernel_secret() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("plan.json"),
        r#"{"spends":[{"r":2,"v":5}],"outputs":[{"r":7,"v":5}],"n_bits":4}"#,
    )
    .unwrap();
    mw(
        dir.path(),
        &[
            "tx",
            "build",
            "plan.json",
            "--out",
            "tx.json",
            "--secret-out",
            "sk.json",
        ],
    );

    let out = mw(
        dir.path(),
        &["block", "aggregate", "tx.json", "--offset", "3"],
    );
    assert_eq!(code(&out), 2);

    let out = mw(
        dir.path(),
        &[
            "block",
            "aggregate",
            "tx.json",
            "--offset",
            "3",
            "--secret",
            "0000000000000005",
            "--out",
            "b.json",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = mw(dir.path(), &["block", "validate", "b.json"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn chain_utxo_lists_the_unspent_commitments() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = testkit::rng(43);
    let (chain, _, unspent) = testkit::valid_chain(TRANSPARENT, &mut rng, 2, 4);
    fs::write(dir.path().join("chain.json"), chain.to_json()).unwrap();
    let out = mw(dir.path(), &["chain", "utxo", "chain.json"]);
    assert_eq!(code(&out), 0);
    let listing = stdout(&out);
    for coin in &unspent {
        assert!(listing.contains(&coin.commitment().unwrap().to_hex()));
    }
}

#[test]
fn seeded_sim_runs_emit_byte_identical_traces() {
    let dir = tempfile::tempdir().unwrap();
    fn args(trace: &str) -> [&str; 15] {
        [
            "sim",
            "run",
            "--seed",
            "42",
            "--steps",
            "1000",
            "--nodes",
            "4",
            "--txs",
            "3",
            "--genesis-outputs",
            "4",
            "--gossip",
            "--trace",
            trace,
        ]
    }
    assert_eq!(code(&mw(dir.path(), &args("t1.jsonl"))), 0);
    assert_eq!(code(&mw(dir.path(), &args("t2.jsonl"))), 0);
    let a = fs::read(dir.path().join("t1.jsonl")).unwrap();
    let b = fs::read(dir.path().join("t2.jsonl")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

const SIM_CONFIG: &str =
    r#"{"nodes":3,"seed":9,"steps":400,"inject_txs":3,"genesis_outputs":4,"addr_gossip":true}"#;

#[test]
fn monitor_is_quiet_on_clean_traces_and_flags_injected_faults() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("sim.json"), SIM_CONFIG).unwrap();
    let out = mw(
        dir.path(),
        &[
            "sim",
            "run",
            "--config",
            "sim.json",
            "--trace",
            "clean.jsonl",
        ],
    );
    assert_eq!(code(&out), 0);

    let out = mw(
        dir.path(),
        &[
            "monitor",
            "run",
            "--trace",
            "clean.jsonl",
            "--config",
            "sim.json",
            "--alarms",
            "alarms.jsonl",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        fs::read_to_string(dir.path().join("alarms.jsonl")).unwrap(),
        ""
    );

    // Append a double-spending block event and expect exactly one alarm
    // and a nonzero exit.
    let cfg: SimConfig = serde_json::from_str(SIM_CONFIG).unwrap();
    let scenario = sim::build_scenario(&cfg).unwrap();
    let (_, _, final_conf) = sim::run(&cfg).unwrap();
    let node = sim::node_name(0);
    let (tip, chain) = best_tip(&final_conf.nodes[&node]).unwrap();
    assert!(chain.len() > 1);
    let state = ledger::ChainState::from_blocks(chain.blocks()).unwrap();
    let victim = scenario
        .coins
        .iter()
        .copied()
        .find(|c| state.spent.contains(&c.commitment().unwrap()))
        .expect("a spent coin exists");
    let respend = build_transaction(
        TRANSPARENT,
        &[victim],
        &[Opening::new(TRANSPARENT.scalar(777), TRANSPARENT.scalar(0))],
        4,
    )
    .unwrap();
    let bad = NodeBlock {
        prev: tip,
        payload: ledger::aggregate(TRANSPARENT, &[respend.tx]).unwrap(),
        pf: ProofObj("injected".into()),
    };
    let mut lines = fs::read_to_string(dir.path().join("clean.jsonl")).unwrap();
    let seq = lines.lines().count() as u64;
    let event = sim::TraceEvent {
        step: seq,
        node: node.clone(),
        transition: "rcvBlock".into(),
        input: Some(Packet {
            origin: Addr::new("env"),
            dest: node,
            msg: Msg::Block(bad),
        }),
        outputs: Default::default(),
    };
    lines.push_str(&event.to_json_line());
    lines.push('\n');
    fs::write(dir.path().join("faulty.jsonl"), lines).unwrap();

    let out = mw(
        dir.path(),
        &[
            "monitor",
            "run",
            "--trace",
            "faulty.jsonl",
            "--config",
            "sim.json",
            "--alarms",
            "alarms2.jsonl",
        ],
    );
    assert_eq!(code(&out), 1);
    let alarms = fs::read_to_string(dir.path().join("alarms2.jsonl")).unwrap();
    assert_eq!(alarms.lines().count(), 1);
    assert!(alarms.contains("already spent"));
}

#[test]
fn mbt_gen_and_run_distinguish_reference_from_mutants() {
    let dir = tempfile::tempdir().unwrap();
    let out = mw(
        dir.path(),
        &[
            "mbt",
            "gen",
            "--transition",
            "validate_transaction",
            "--tactics",
            "setExtension:ins,dnf",
            "--seed",
            "5",
            "--out",
            "suite.json",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let out = mw(
        dir.path(),
        &[
            "mbt",
            "run",
            "--suite",
            "suite.json",
            "--report",
            "ref.json",
        ],
    );
    assert_eq!(code(&out), 0);

    let out = mw(
        dir.path(),
        &[
            "mbt",
            "run",
            "--suite",
            "suite.json",
            "--sut",
            "skip-balance-check",
            "--report",
            "mut.json",
        ],
    );
    assert_eq!(code(&out), 1);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("mut.json")).unwrap()).unwrap();
    assert!(report["failed"].as_u64().unwrap() > 0);
}

#[test]
fn usage_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = mw(dir.path(), &["frobnicate"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));

    let out = mw(dir.path(), &["chain", "validate", "missing.json"]);
    assert_eq!(code(&out), 2);

    let out = mw(
        dir.path(),
        &["mbt", "gen", "--transition", "nope", "--tactics", "dnf"],
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn toycurve_backend_round_trips_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("plan.json"),
        r#"{"spends":[{"r":21,"v":3}],"outputs":[{"r":33,"v":3}],"n_bits":4}"#,
    )
    .unwrap();
    let out = mw(
        dir.path(),
        &[
            "--backend",
            "toycurve",
            "tx",
            "build",
            "plan.json",
            "--out",
            "tx.json",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = mw(
        dir.path(),
        &["--backend", "toycurve", "tx", "validate", "tx.json"],
    );
    assert_eq!(code(&out), 0);
    // Decoding with the wrong backend is an error, not a bad verdict.
    let out = mw(dir.path(), &["tx", "validate", "tx.json"]);
    assert_eq!(code(&out), 2);
}
