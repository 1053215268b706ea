//! Acceptance suite: one test per criterion, each printing a PASS line
//! (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Every tolerance and count is pinned here, in code.

use mw_core::consensus::sim::{self, SimConfig};
use mw_core::consensus::{best_tip, Addr, Msg, NodeBlock, Packet, ProofObj};
use mw_core::crypto::{commit, prove_range};
use mw_core::group::{Backend, TOY_CURVE, TRANSPARENT};
use mw_core::ledger::{self, Chain};
use mw_core::mbt::pred::{atom, var};
use mw_core::mbt::{self, enumerate_bindings, eval, run_suite, Tactic, TestingTree, VarDecl};
use mw_core::monitor::{run_monitor, Alarm, AlarmKind};
use mw_core::testkit;
use mw_core::tx::{build_transaction, validate_transaction, Opening, Transaction};
use mw_core::verdict::{Reason, Verdict};
use rand::Rng;
use std::collections::BTreeSet;
use std::time::Instant;

fn pass(criterion: &str, detail: &str) {
    println!("[acceptance] {criterion}: PASS ({detail})");
}

fn opening(backend: Backend, r: u64, v: u64) -> Opening {
    Opening::new(backend.scalar(r), backend.scalar(v))
}

/// C1 — commitment homomorphism, 1000 random quadruples per backend,
/// zero failures, under five seconds.
#[test]
fn c01_commitment_homomorphism() {
    let started = Instant::now();
    for backend in [TRANSPARENT, TOY_CURVE] {
        let mut rng = testkit::rng(0xC1);
        for _ in 0..1000 {
            let rv = backend.scalar(rng.random::<u64>());
            let v = backend.scalar(rng.random::<u64>());
            let rw = backend.scalar(rng.random::<u64>());
            let w = backend.scalar(rng.random::<u64>());
            let lhs = commit(rv, v)
                .unwrap()
                .point()
                .add(commit(rw, w).unwrap().point())
                .unwrap();
            let rhs = commit(rv.add(rw).unwrap(), v.add(w).unwrap())
                .unwrap()
                .point();
            assert_eq!(lhs, rhs, "homomorphism failed on {}", backend.name());
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}, budget 5s");
    pass(
        "C1 commitment homomorphism",
        &format!("2000 quadruples in {elapsed:?}"),
    );
}

/// C2 — the transaction validity triad, exhaustive over values in
/// [0, 16) at four bits: honest builds are Valid and every single tamper
/// class yields exactly its matching reason.
#[test]
fn c02_transaction_validity_triad() {
    let backend = TRANSPARENT;
    let mut rng = testkit::rng(0xC2);
    let mut honest = 0usize;
    let mut tampered = 0usize;
    for v in 0..16u64 {
        let mut shapes: Vec<Vec<u64>> = vec![vec![v]];
        for a in 0..=v {
            shapes.push(vec![a, v - a]);
        }
        for out_values in shapes {
            let spend = opening(backend, rng.random::<u64>(), v);
            let outs: Vec<Opening> = out_values
                .iter()
                .map(|&val| opening(backend, rng.random::<u64>(), val))
                .collect();
            let built = match build_transaction(backend, &[spend], &outs, 4) {
                Ok(b) => b,
                Err(_) => continue, // blinding collision; astronomically rare per seed
            };
            assert_eq!(validate_transaction(&built.tx), Verdict::Valid);
            honest += 1;

            // Range-proof tamper: a proof for a different value.
            let mut bad = built.tx.clone();
            let bumped = backend.scalar((outs[0].value.value() + 1) % 16);
            bad.kernels[0].range_proofs[0] = prove_range(outs[0].blinding, bumped, 4).unwrap();
            assert!(
                matches!(
                    validate_transaction(&bad),
                    Verdict::Invalid(Reason::RangeProof(_))
                ),
                "range tamper misclassified: {:?}",
                validate_transaction(&bad)
            );

            // Signature tamper.
            let mut bad = built.tx.clone();
            bad.kernels[0].signature.s = bad.kernels[0].signature.s.add(backend.scalar(1)).unwrap();
            assert_eq!(
                validate_transaction(&bad),
                Verdict::Invalid(Reason::KernelSignature(0))
            );

            // Balance tamper: stored excess no longer matches.
            let mut bad = built.tx.clone();
            bad.kernels[0].excess = bad.kernels[0].excess.add(backend.generator()).unwrap();
            assert_eq!(
                validate_transaction(&bad),
                Verdict::Invalid(Reason::Unbalanced)
            );
            tampered += 3;
        }
    }
    assert!(honest >= 150, "only {honest} honest builds exercised");
    pass(
        "C2 transaction validity triad",
        &format!("{honest} honest builds, {tampered} tampers, 0 misclassifications"),
    );
}

/// C3 — block equation: 200 random aggregates of 1–10 transactions with
/// random offsets are Valid; perturbing the offset or any kernel excess by
/// one is always reported as a balance-equation failure.
#[test]
fn c03_block_equation() {
    let backend = TRANSPARENT;
    let mut rng = testkit::rng(0xC3);
    let mut aggregates = 0usize;
    while aggregates < 200 {
        let n = rng.random_range(1..=10);
        let mut built = Vec::new();
        for _ in 0..n {
            let (_, _, tx) = testkit::random_tx(backend, &mut rng, 1, 1, 4);
            built.push(tx);
        }
        let offset = backend.scalar(rng.random::<u64>());
        let block = match ledger::aggregate_with_offset(backend, &built, offset) {
            Ok(b) => b,
            Err(_) => continue, // overlapping random inputs; retry
        };
        assert_eq!(ledger::validate_block(&block), Verdict::Valid);

        let mut bad = block.clone();
        bad.offset = bad.offset.add(backend.scalar(1)).unwrap();
        assert_eq!(
            ledger::validate_block(&bad),
            Verdict::Invalid(Reason::BalanceEquation)
        );

        let mut bad = block.clone();
        let k = rng.random_range(0..bad.kernels.len());
        bad.kernels[k].excess = bad.kernels[k].excess.add(backend.generator()).unwrap();
        assert_eq!(
            ledger::validate_block(&bad),
            Verdict::Invalid(Reason::BalanceEquation)
        );
        aggregates += 1;
    }
    pass(
        "C3 block equation",
        "200 aggregates valid; 400 perturbations all BalanceEquation",
    );
}

/// C4 — cut-through invariance on 500 blocks with injected matching
/// pairs: the verdict is identical before and after, and cut-through is
/// byte-for-byte idempotent.
#[test]
fn c04_cut_through_invariance() {
    let backend = TRANSPARENT;
    let mut rng = testkit::rng(0xC4);
    let mut valid = 0usize;
    let mut invalid = 0usize;
    for i in 0..500 {
        let pairs = rng.random_range(1..=3);
        let (mut block, _, sinks) = testkit::block_with_matching_pairs(backend, &mut rng, pairs, 4);
        match i % 5 {
            0 | 1 => {}
            2 => block.offset = block.offset.add(backend.scalar(1)).unwrap(),
            3 => {
                let k = rng.random_range(0..block.kernels.len());
                let s = block.kernels[k].signature.s;
                block.kernels[k].signature.s = s.add(backend.scalar(1)).unwrap();
            }
            _ => {
                // Forge the proof of a surviving (sink) output.
                let target = sinks[0].commitment().unwrap();
                let bumped = backend.scalar(sinks[0].value.value() + 1);
                let forged = prove_range(sinks[0].blinding, bumped, 4).unwrap();
                'outer: for kernel in &mut block.kernels {
                    for proof in &mut kernel.range_proofs {
                        if proof.target().unwrap() == target {
                            *proof = forged;
                            break 'outer;
                        }
                    }
                }
            }
        }
        let before = ledger::validate_block(&block);
        let cut = ledger::cut_through(&block);
        let after = ledger::validate_block(&cut);
        // A RangeProof reason indexes into the output list, which shrinks
        // under cut-through; identify the offending output by commitment.
        let normalize = |verdict: &Verdict, b: &ledger::Block| match verdict {
            Verdict::Invalid(Reason::RangeProof(j)) => (
                String::from("range-proof"),
                Some(b.outputs[*j].commitment.to_bytes()),
            ),
            other => (format!("{other:?}"), None),
        };
        assert_eq!(
            normalize(&before, &block),
            normalize(&after, &cut),
            "verdict changed under cut-through at case {i}"
        );
        assert_eq!(
            ledger::cut_through(&cut).canonical_bytes(),
            cut.canonical_bytes(),
            "cut-through not idempotent at case {i}"
        );
        assert!(
            cut.inputs.len() < block.inputs.len(),
            "no pair was cancelled at case {i}"
        );
        if before.is_valid() {
            valid += 1;
        } else {
            invalid += 1;
        }
    }
    assert!(
        valid >= 150 && invalid >= 150,
        "mix degenerated: {valid} valid / {invalid} invalid"
    );
    pass(
        "C4 cut-through invariance",
        &format!("500 blocks ({valid} valid, {invalid} invalid), verdicts preserved"),
    );
}

/// C5 — double-spend rejection: 100 adversarial chains re-spending a
/// consumed commitment are rejected at exactly the offending block.
#[test]
fn c05_double_spend_rejection() {
    let backend = TRANSPARENT;
    let mut rng = testkit::rng(0xC5);
    for _ in 0..100 {
        let (chain, at) = testkit::double_spend_chain(backend, &mut rng, 4);
        match ledger::valid_chain(&chain) {
            Verdict::Invalid(Reason::Block { index, cause }) => {
                assert_eq!(index, at);
                assert_eq!(*cause, Reason::DoubleSpend);
            }
            other => panic!("expected a double-spend rejection, got {other:?}"),
        }
    }
    pass(
        "C5 double-spend rejection",
        "100 adversarial chains rejected at the second spend",
    );
}

/// C6 — the two-step peer-gossip golden trace: exact states and packet
/// sets.
#[test]
fn c06_gossip_golden_trace() {
    use mw_core::consensus::{rcv_addr, LocState};
    let me = Addr::new("this");
    let env = Addr::new("env");
    let addrs =
        |names: &[&str]| -> BTreeSet<Addr> { names.iter().map(|n| Addr::new(*n)).collect() };
    let packet = |dest: &str, msg: Msg| Packet {
        origin: env.clone(),
        dest: Addr::new(dest),
        msg,
    };
    let sent = |dest: &str, msg: Msg| Packet {
        origin: me.clone(),
        dest: Addr::new(dest),
        msg,
    };

    let st = LocState::default();
    let step1 = rcv_addr(&me, &st, &packet("this", Msg::Addrs(addrs(&["a1", "a2"])))).unwrap();
    assert_eq!(step1.state.peers, addrs(&["a1", "a2"]));
    assert_eq!(
        step1.outputs,
        BTreeSet::from([sent("a1", Msg::Connect), sent("a2", Msg::Connect)])
    );

    let step2 = rcv_addr(
        &me,
        &step1.state,
        &packet("this", Msg::Addrs(addrs(&["a1", "a3"]))),
    )
    .unwrap();
    assert_eq!(step2.state.peers, addrs(&["a1", "a2", "a3"]));
    let announced = Msg::Addrs(addrs(&["a1", "a2", "a3"]));
    assert_eq!(
        step2.outputs,
        BTreeSet::from([
            sent("a3", Msg::Connect),
            sent("a1", announced.clone()),
            sent("a2", announced),
        ])
    );
    assert_eq!(step2.state.forest, st.forest);
    assert_eq!(step2.state.pool, st.pool);
    pass(
        "C6 gossip golden trace",
        "two-step scenario reproduced exactly",
    );
}

/// C7 — simulator determinism and convergence: seed-fixed 1000-step runs
/// are byte-identical; a 5-node fully connected lossless run reaches
/// quiescence with every node on the same best chain; under 30 seconds.
#[test]
fn c07_simulator_determinism_and_convergence() {
    let started = Instant::now();

    let cfg = SimConfig {
        nodes: 4,
        steps: 1000,
        seed: 42,
        inject_txs: 3,
        genesis_outputs: 4,
        addr_gossip: true,
        ..SimConfig::default()
    };
    let (trace_a, _, _) = sim::run(&cfg).unwrap();
    let (trace_b, _, _) = sim::run(&cfg).unwrap();
    assert_eq!(trace_a.len(), 1000);
    assert_eq!(sim::trace_to_jsonl(&trace_a), sim::trace_to_jsonl(&trace_b));

    let cfg = SimConfig {
        nodes: 5,
        steps: 5000,
        seed: 7,
        inject_txs: 3,
        genesis_outputs: 4,
        ..SimConfig::default()
    };
    let (_, summary, conf) = sim::run(&cfg).unwrap();
    assert!(summary.quiescent_at.is_some(), "5-node run did not quiesce");
    assert!(summary.agreement, "nodes disagree: {:?}", summary.tips);
    let mut tips = BTreeSet::new();
    for st in conf.nodes.values() {
        let (tip, chain) = best_tip(st).unwrap();
        assert_eq!(ledger::valid_chain(&chain), Verdict::Valid);
        tips.insert(tip);
    }
    assert_eq!(tips.len(), 1);

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}, budget 30s");
    pass(
        "C7 simulator determinism and convergence",
        &format!("byte-identical traces; 5 nodes agree; {elapsed:?}"),
    );
}

/// Exactly-one-child partition check over the parent's satisfying
/// bindings.
fn assert_partition(tree: &TestingTree, parent: usize, children: &[usize]) {
    let decls: Vec<&VarDecl> = tree.transition().decls().collect();
    let parent_pred = tree.effective_predicate(parent);
    let mut covered = 0usize;
    for binding in enumerate_bindings(&decls) {
        if !eval(&parent_pred, &binding).unwrap() {
            continue;
        }
        covered += 1;
        let hits = children
            .iter()
            .filter(|&&c| eval(&tree.effective_predicate(c), &binding).unwrap())
            .count();
        assert_eq!(hits, 1, "binding {binding:?} hit {hits} children");
    }
    assert!(
        covered > 0,
        "parent has no satisfying bindings to partition"
    );
}

/// C8 — partition soundness for every shipped tactic on both shipped
/// transitions (type-inapplicable pairs must fail loudly), plus pruning
/// agreement with the independent filtering evaluator on 100 random
/// trees.
#[test]
fn c08_partition_soundness_and_pruning_exactness() {
    let combos: [(&str, Vec<Tactic>); 2] = [
        (
            mbt::transitions::RCV_ADDR,
            vec![
                Tactic::SetExtension { var: "asm".into() },
                Tactic::SetExtension {
                    var: "peers".into(),
                },
                Tactic::Dnf,
                Tactic::MembershipSplit {
                    element: var("dest"),
                    set: "asm".into(),
                },
                Tactic::MembershipSplit {
                    element: atom("a1"),
                    set: "peers".into(),
                },
            ],
        ),
        (
            mbt::transitions::VALIDATE_TRANSACTION,
            vec![
                Tactic::SetExtension { var: "ins".into() },
                Tactic::NumericBoundary {
                    var: "split".into(),
                },
                Tactic::Dnf,
                Tactic::MembershipSplit {
                    element: atom("i1"),
                    set: "ins".into(),
                },
            ],
        ),
    ];
    let mut applications = 0usize;
    let mut kinds_seen = BTreeSet::new();
    for (name, tactics) in combos {
        for tactic in tactics {
            let spec = mbt::transitions::transition_spec(name).unwrap();
            let mut tree = TestingTree::new(spec);
            let children = tree.apply_tactic(tree.root(), &tactic).unwrap();
            assert_partition(&tree, tree.root(), &children);
            let kind = match tactic {
                Tactic::SetExtension { .. } => "setExtension",
                Tactic::NumericBoundary { .. } => "boundary",
                Tactic::Dnf => "dnf",
                Tactic::MembershipSplit { .. } => "member",
            };
            kinds_seen.insert(kind);
            applications += 1;
        }
    }
    assert_eq!(
        kinds_seen.len(),
        4,
        "not every shipped tactic was exercised"
    );

    // The boundary tactic has no integer variable on rcv_addr: a mismatch,
    // not a silent no-op.
    let spec = mbt::transitions::transition_spec(mbt::transitions::RCV_ADDR).unwrap();
    let mut tree = TestingTree::new(spec);
    assert!(matches!(
        tree.apply_tactic(tree.root(), &Tactic::NumericBoundary { var: "asm".into() }),
        Err(mbt::MbtError::TacticMismatch { .. })
    ));

    // Pruning agrees with the independently-coded filtering evaluator.
    let mut rng = testkit::rng(0xC8);
    for round in 0..100 {
        let depth = rng.random_range(1..=3);
        let mut tree = testkit::random_small_tree(&mut rng, depth);
        let expected = testkit::leaf_satisfiability_by_filtering(&tree).unwrap();
        tree.prune(1_000_000, if round % 2 == 0 { 1 } else { 3 })
            .unwrap();
        let kept: BTreeSet<String> = tree
            .leaves()
            .into_iter()
            .map(|l| tree.label_path(l))
            .collect();
        for (label, sat) in expected {
            assert_eq!(kept.contains(&label), sat, "round {round}, leaf {label}");
        }
    }
    pass(
        "C8 partition soundness and pruning exactness",
        &format!("{applications} tactic applications partition exactly; 100 random trees agree"),
    );
}

/// C9 — the mutation catalog is killed: every seeded mutant of both
/// transitions fails at least one generated abstract test case, while the
/// reference model passes all of them.
#[test]
fn c09_mbt_fault_detection() {
    let schedules: [(&str, Vec<Tactic>); 2] = [
        (
            mbt::transitions::RCV_ADDR,
            vec![
                Tactic::SetExtension { var: "asm".into() },
                Tactic::SetExtension {
                    var: "peers".into(),
                },
                Tactic::MembershipSplit {
                    element: atom("a1"),
                    set: "asm".into(),
                },
            ],
        ),
        (
            mbt::transitions::VALIDATE_TRANSACTION,
            vec![Tactic::SetExtension { var: "ins".into() }, Tactic::Dnf],
        ),
    ];
    let mut killed = 0usize;
    for (name, schedule) in schedules {
        let spec = mbt::transitions::transition_spec(name).unwrap();
        let mut tree = TestingTree::new(spec);
        for tactic in &schedule {
            tree.apply_tactic_at_leaves(tactic).unwrap();
        }
        tree.prune(1_000_000, 1).unwrap();
        let cases = tree.generate_cases().unwrap();
        assert!(!cases.is_empty());

        let reference = mbt::transitions::sut(name, "reference", 0xC9).unwrap();
        let report = run_suite(tree.transition(), &cases, reference.as_ref());
        assert!(
            report.all_passed(),
            "reference failed its own suite: {}",
            report.to_json()
        );

        for mutant in mbt::transitions::mutant_names(name).unwrap() {
            let adapter = mbt::transitions::sut(name, mutant, 0xC9).unwrap();
            let report = run_suite(tree.transition(), &cases, adapter.as_ref());
            assert!(report.failed > 0, "mutant {mutant} of {name} survived");
            killed += 1;
        }
    }
    assert!(killed >= 7);
    pass(
        "C9 MBT fault detection",
        &format!("{killed} mutants killed, reference clean"),
    );
}

/// C10 — monitor soundness and detection: three clean 500-event traces
/// replay without alarms; each of the five fault-injection variants
/// raises exactly one divergence alarm at the injected index.
#[test]
fn c10_monitor_soundness_and_detection() {
    let backend = TRANSPARENT;

    // Soundness: three clean traces.
    for seed in [11u64, 22, 33] {
        let cfg = SimConfig {
            nodes: 3,
            steps: 500,
            seed,
            inject_txs: 3,
            genesis_outputs: 4,
            addr_gossip: true,
            ..SimConfig::default()
        };
        let (trace, _, final_conf) = sim::run(&cfg).unwrap();
        assert_eq!(trace.len(), 500, "gossip keeps the run busy");
        let lines: Vec<String> = trace.iter().map(|e| e.to_json_line()).collect();
        let shadow = sim::build_scenario(&cfg).unwrap().conf;
        let summary = run_monitor(backend, shadow, &lines, |a| {
            panic!("unexpected alarm: {a:?}")
        });
        assert_eq!(summary.alarms, 0);
        assert_eq!(summary.events, 500);
        assert_eq!(summary.end_state_hash, final_conf.state_hash());
    }

    // Detection: five fault variants appended to one clean trace.
    let cfg = SimConfig {
        nodes: 3,
        steps: 500,
        seed: 44,
        inject_txs: 3,
        genesis_outputs: 4,
        addr_gossip: true,
        ..SimConfig::default()
    };
    let scenario = sim::build_scenario(&cfg).unwrap();
    let (trace, _, final_conf) = sim::run(&cfg).unwrap();
    let lines: Vec<String> = trace.iter().map(|e| e.to_json_line()).collect();
    let node = sim::node_name(0);
    let node_state = &final_conf.nodes[&node];
    let (tip, chain) = best_tip(node_state).unwrap();
    assert!(chain.len() > 1, "seed must mint at least one block");
    let chain_state = ledger::ChainState::from_blocks(chain.blocks()).unwrap();

    // A coin that was spent on chain, and one still spendable.
    let spent_coin = scenario
        .coins
        .iter()
        .copied()
        .find(|c| chain_state.spent.contains(&c.commitment().unwrap()))
        .expect("an injected spend was minted");
    let fresh_coin = scenario
        .coins
        .iter()
        .chain(scenario.spent_into.iter())
        .copied()
        .find(|c| {
            chain_state
                .spend_obstacle(&c.commitment().unwrap())
                .is_none()
        })
        .expect("an unspent output exists");

    let fresh_out = |r: u64| Opening::new(backend.scalar(r), backend.scalar(0));
    let extension = |tx: Transaction| NodeBlock {
        prev: tip,
        payload: ledger::aggregate(backend, &[tx]).unwrap(),
        pf: ProofObj("injected".into()),
    };

    // 1. Double spend.
    let double_spend = extension(
        build_transaction(backend, &[spent_coin], &[fresh_out(9001)], 4)
            .unwrap()
            .tx,
    );
    // 2. Unknown input.
    let ghost = Opening::new(backend.scalar(424242), backend.scalar(0));
    let unknown_input = extension(
        build_transaction(backend, &[ghost], &[fresh_out(9002)], 4)
            .unwrap()
            .tx,
    );
    // 3. Unbalanced block: offset perturbed.
    let mut unbalanced = extension(
        build_transaction(backend, &[fresh_coin], &[fresh_out(9003)], 4)
            .unwrap()
            .tx,
    );
    unbalanced.payload.offset = unbalanced.payload.offset.add(backend.scalar(1)).unwrap();
    // 4. Forged range proof.
    let out4 = fresh_out(9004);
    let mut forged_range = extension(
        build_transaction(backend, &[fresh_coin], &[out4], 4)
            .unwrap()
            .tx,
    );
    forged_range.payload.kernels[0].range_proofs[0] =
        prove_range(out4.blinding, backend.scalar(1), 4).unwrap();
    // 5. Invalid kernel signature.
    let mut bad_sig = extension(
        build_transaction(backend, &[fresh_coin], &[fresh_out(9005)], 4)
            .unwrap()
            .tx,
    );
    let s = bad_sig.payload.kernels[0].signature.s;
    bad_sig.payload.kernels[0].signature.s = s.add(backend.scalar(1)).unwrap();

    let variants: [(&str, NodeBlock, &str); 5] = [
        ("double spend", double_spend, "input already spent"),
        ("unknown input", unknown_input, "not an unspent output"),
        ("unbalanced", unbalanced, "balance equation"),
        ("forged range proof", forged_range, "range proof"),
        ("bad kernel signature", bad_sig, "signature"),
    ];
    for (fault, block, needle) in variants {
        let seq = lines.len() as u64;
        let event = sim::TraceEvent {
            step: seq,
            node: node.clone(),
            transition: "rcvBlock".into(),
            input: Some(Packet {
                origin: Addr::new("env"),
                dest: node.clone(),
                msg: Msg::Block(block),
            }),
            outputs: Default::default(),
        };
        let mut doctored = lines.clone();
        doctored.push(event.to_json_line());

        let shadow = sim::build_scenario(&cfg).unwrap().conf;
        let mut alarms: Vec<Alarm> = Vec::new();
        let summary = run_monitor(backend, shadow, &doctored, |a| alarms.push(a.clone()));
        assert_eq!(
            summary.divergence_alarms, 1,
            "{fault}: expected exactly one alarm"
        );
        assert_eq!(summary.parse_alarms, 0, "{fault}");
        assert_eq!(alarms.len(), 1, "{fault}");
        assert_eq!(
            alarms[0].seq, seq,
            "{fault}: alarm not at the injected index"
        );
        assert_eq!(alarms[0].kind, AlarmKind::Divergence, "{fault}");
        assert!(
            alarms[0].observed.to_lowercase().contains(needle),
            "{fault}: observed {:?} does not mention {:?}",
            alarms[0].observed,
            needle
        );
    }
    pass(
        "C10 monitor soundness and detection",
        "3 clean traces alarm-free; 5 faults each flagged once at the injected index",
    );
}

/// The chain file format underpinning several criteria round-trips.
#[test]
fn chain_files_round_trip() {
    let mut rng = testkit::rng(0xFF);
    let (chain, _, _) = testkit::valid_chain(TRANSPARENT, &mut rng, 3, 4);
    let json = chain.to_json();
    let decoded = Chain::from_json(TRANSPARENT, &json).unwrap();
    assert_eq!(decoded, chain);
    assert_eq!(ledger::valid_chain(&decoded), Verdict::Valid);
}
