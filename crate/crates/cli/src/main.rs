//! `mw` — batch front end for the reference model: build and validate
//! transactions, blocks and chains, run simulations, generate and run
//! test suites, and replay traces through the monitor.
//!
//! Exit codes: 0 on success (and Valid verdicts), 1 on Invalid verdicts,
//! suite failures or divergence alarms, 2 on usage errors.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mw_core::consensus::sim::{self, SimConfig, Topology};
use mw_core::group::{Backend, TOY_CURVE, TRANSPARENT};
use mw_core::ledger::{self, Block, Chain};
use mw_core::mbt::{self, SuiteWire, Tactic, TestingTree};
use mw_core::monitor;
use mw_core::tx::{self, Opening, Transaction};
use mw_core::verdict::Verdict;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "mw",
    version,
    about = "Desk-scale MimbleWimble reference model and conformance toolkit"
)]
struct Cli {
    /// Group backend used to interpret and produce files.
    #[arg(long, global = true, value_enum, default_value_t = BackendChoice::Transparent)]
    backend: BackendChoice,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendChoice {
    Transparent,
    Toycurve,
}

impl BackendChoice {
    fn backend(self) -> Backend {
        match self {
            BackendChoice::Transparent => TRANSPARENT,
            BackendChoice::Toycurve => TOY_CURVE,
        }
    }

    fn name(self) -> &'static str {
        match self {
            BackendChoice::Transparent => "transparent",
            BackendChoice::Toycurve => "toycurve",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build and validate transactions.
    #[command(subcommand)]
    Tx(TxCmd),
    /// Aggregate, cut through and validate blocks.
    #[command(subcommand)]
    Block(BlockCmd),
    /// Validate chains and compute UTXO sets.
    #[command(subcommand)]
    Chain(ChainCmd),
    /// Run the deterministic network simulator.
    #[command(subcommand)]
    Sim(SimCmd),
    /// Generate and run model-based test suites.
    #[command(subcommand)]
    Mbt(MbtCmd),
    /// Replay traces against the reference model.
    #[command(subcommand)]
    Monitor(MonitorCmd),
}

#[derive(Subcommand)]
enum TxCmd {
    /// Build a transaction from a plan of openings.
    Build {
        /// Plan file: {"spends":[{"r":..,"v":..}],"outputs":[...],"n_bits":4}
        plan: PathBuf,
        /// Write the transaction here (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write {"kernel_secret": hex} here, for later offset shifts.
        #[arg(long)]
        secret_out: Option<PathBuf>,
    },
    /// Validate a transaction file.
    Validate { file: PathBuf },
}

#[derive(Subcommand)]
enum BlockCmd {
    /// Merge transaction files into a block.
    Aggregate {
        /// Transaction files to merge.
        #[arg(required = false)]
        txs: Vec<PathBuf>,
        /// Kernel offset (decimal, reduced into the scalar field).
        #[arg(long, default_value_t = 0)]
        offset: u64,
        /// Kernel secret (hex) of the first transaction; required for a
        /// nonzero offset.
        #[arg(long)]
        secret: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cancel matching input/output pairs.
    Cutthrough {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a block file.
    Validate { file: PathBuf },
}

#[derive(Subcommand)]
enum ChainCmd {
    /// Validate a chain file (a JSON array of blocks).
    Validate { file: PathBuf },
    /// Print the UTXO multiset of a valid chain.
    Utxo { file: PathBuf },
}

#[derive(Subcommand)]
enum SimCmd {
    /// Run a simulation and emit its JSON Lines trace.
    Run(SimRunArgs),
}

#[derive(Args)]
struct SimRunArgs {
    /// Simulation config file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long, value_enum)]
    topology: Option<TopologyChoice>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<u64>,
    /// Packet loss rate in [0, 1].
    #[arg(long)]
    loss: Option<f64>,
    /// Packet duplication rate in [0, 1].
    #[arg(long)]
    dup: Option<f64>,
    /// Spend transactions injected at start.
    #[arg(long)]
    txs: Option<usize>,
    #[arg(long)]
    genesis_outputs: Option<usize>,
    /// Kick off address gossip.
    #[arg(long)]
    gossip: bool,
    /// Range-proof bit width for generated transactions.
    #[arg(long)]
    bits: Option<u32>,
    /// Write the trace here (stdout when omitted; the summary then moves
    /// to --summary only).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the run summary here.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TopologyChoice {
    Full,
    Ring,
}

#[derive(Subcommand)]
enum MbtCmd {
    /// Generate an abstract test suite for a transition.
    Gen {
        /// Transition name: rcv_addr or validate_transaction.
        #[arg(long)]
        transition: String,
        /// Comma-separated tactic schedule, applied level by level, e.g.
        /// "setExtension:asm,member:@a1:asm" or "setExtension:ins,dnf".
        #[arg(long)]
        tactics: String,
        /// Enumeration budget (max domain product per leaf).
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
        /// Seed for refinement-time secrets; recorded in the suite.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Parallel pruning threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a suite against the reference model or a mutant.
    Run {
        #[arg(long)]
        suite: PathBuf,
        /// System under test: "reference" or a mutant name.
        #[arg(long, default_value = "reference")]
        sut: String,
        /// Override the suite's recorded seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum MonitorCmd {
    /// Replay a JSON Lines trace against a shadow configuration.
    Run {
        #[arg(long)]
        trace: PathBuf,
        /// Simulation config that defines the initial shadow state.
        #[arg(long)]
        config: PathBuf,
        /// Write alarms here as JSON Lines (stderr when omitted).
        #[arg(long)]
        alarms: Option<PathBuf>,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

#[derive(Serialize, Deserialize)]
struct OpeningWire {
    r: u64,
    v: u64,
}

#[derive(Serialize, Deserialize)]
struct PlanWire {
    spends: Vec<OpeningWire>,
    outputs: Vec<OpeningWire>,
    n_bits: u32,
}

#[derive(Serialize, Deserialize)]
struct SecretWire {
    kernel_secret: String,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, content).with_context(|| format!("cannot write {}", path.display()))
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn verdict_exit(verdict: &Verdict) -> ExitCode {
    println!("{verdict}");
    if verdict.is_valid() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run_tx(backend: Backend, cmd: TxCmd) -> Result<ExitCode> {
    match cmd {
        TxCmd::Build {
            plan,
            out,
            secret_out,
        } => {
            let plan: PlanWire = serde_json::from_str(&read(&plan)?).context("bad plan file")?;
            let to_opening =
                |w: &OpeningWire| Opening::new(backend.scalar(w.r), backend.scalar(w.v));
            let spends: Vec<Opening> = plan.spends.iter().map(to_opening).collect();
            let outputs: Vec<Opening> = plan.outputs.iter().map(to_opening).collect();
            let built = tx::build_transaction(backend, &spends, &outputs, plan.n_bits)?;
            emit(out.as_deref(), &(built.tx.to_json() + "\n"))?;
            if let Some(path) = secret_out {
                let secret = SecretWire {
                    kernel_secret: built.kernel_secret.to_hex(),
                };
                fs::write(&path, serde_json::to_string_pretty(&secret)? + "\n")
                    .with_context(|| format!("cannot write {}", path.display()))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        TxCmd::Validate { file } => {
            let transaction = Transaction::from_json(backend, &read(&file)?)?;
            Ok(verdict_exit(&tx::validate_transaction(&transaction)))
        }
    }
}

fn run_block(backend: Backend, cmd: BlockCmd) -> Result<ExitCode> {
    match cmd {
        BlockCmd::Aggregate {
            txs,
            offset,
            secret,
            out,
        } => {
            let mut parsed: Vec<Transaction> = Vec::with_capacity(txs.len());
            for path in &txs {
                parsed.push(Transaction::from_json(backend, &read(path)?)?);
            }
            let offset = backend.scalar(offset);
            let block = if offset.is_zero() {
                ledger::aggregate(backend, &parsed)?
            } else {
                let secret = secret
                    .ok_or_else(|| anyhow!("--secret is required with a nonzero --offset"))?;
                let secret = backend.scalar_from_hex(&secret).context("bad --secret")?;
                let built: Vec<tx::BuiltTransaction> = parsed
                    .iter()
                    .enumerate()
                    .map(|(i, t)| tx::BuiltTransaction {
                        tx: t.clone(),
                        // Only the first kernel secret is consulted.
                        kernel_secret: if i == 0 { secret } else { backend.scalar(0) },
                    })
                    .collect();
                ledger::aggregate_with_offset(backend, &built, offset)?
            };
            emit(out.as_deref(), &(block.to_json() + "\n"))?;
            Ok(ExitCode::SUCCESS)
        }
        BlockCmd::Cutthrough { file, out } => {
            let block = Block::from_json(backend, &read(&file)?)?;
            emit(
                out.as_deref(),
                &(ledger::cut_through(&block).to_json() + "\n"),
            )?;
            Ok(ExitCode::SUCCESS)
        }
        BlockCmd::Validate { file } => {
            let block = Block::from_json(backend, &read(&file)?)?;
            Ok(verdict_exit(&ledger::validate_block(&block)))
        }
    }
}

fn run_chain(backend: Backend, cmd: ChainCmd) -> Result<ExitCode> {
    match cmd {
        ChainCmd::Validate { file } => {
            let chain = Chain::from_json(backend, &read(&file)?)?;
            Ok(verdict_exit(&ledger::valid_chain(&chain)))
        }
        ChainCmd::Utxo { file } => {
            let chain = Chain::from_json(backend, &read(&file)?)?;
            let verdict = ledger::valid_chain(&chain);
            if !verdict.is_valid() {
                println!("{verdict}");
                return Ok(ExitCode::from(1));
            }
            let set = ledger::utxo(&chain)?;
            #[derive(Serialize)]
            struct Entry {
                commitment: String,
                count: usize,
            }
            let entries: Vec<Entry> = set
                .iter()
                .map(|(c, count)| Entry {
                    commitment: c.to_hex(),
                    count,
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&entries)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run_sim(choice: BackendChoice, args: SimRunArgs) -> Result<ExitCode> {
    let mut cfg: SimConfig = match &args.config {
        Some(path) => serde_json::from_str(&read(path)?).context("bad sim config")?,
        None => SimConfig::default(),
    };
    if args.config.is_none() {
        cfg.backend = choice.name().to_string();
    }
    if let Some(n) = args.nodes {
        cfg.nodes = n;
    }
    if let Some(t) = args.topology {
        cfg.topology = match t {
            TopologyChoice::Full => Topology::Full,
            TopologyChoice::Ring => Topology::Ring,
        };
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(s) = args.steps {
        cfg.steps = s;
    }
    if let Some(l) = args.loss {
        cfg.loss = l;
    }
    if let Some(d) = args.dup {
        cfg.duplication = d;
    }
    if let Some(t) = args.txs {
        cfg.inject_txs = t;
    }
    if let Some(g) = args.genesis_outputs {
        cfg.genesis_outputs = g;
    }
    if args.gossip {
        cfg.addr_gossip = true;
    }
    if let Some(b) = args.bits {
        cfg.n_bits = b;
    }
    cfg.validate().map_err(|e| anyhow!("{e}"))?;

    let (trace, summary, _) = sim::run(&cfg).map_err(|e| anyhow!("{e}"))?;
    let jsonl = sim::trace_to_jsonl(&trace);
    let summary_json = serde_json::to_string_pretty(&summary)? + "\n";
    match &args.trace {
        Some(path) => {
            fs::write(path, &jsonl).with_context(|| format!("cannot write {}", path.display()))?;
            if let Some(spath) = &args.summary {
                fs::write(spath, &summary_json)?;
            } else {
                print!("{summary_json}");
            }
        }
        None => {
            print!("{jsonl}");
            if let Some(spath) = &args.summary {
                fs::write(spath, &summary_json)?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_tactics(spec: &str) -> Result<Vec<Tactic>> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| Tactic::parse(s).map_err(|e| anyhow!("{e}")))
        .collect()
}

fn run_mbt(cmd: MbtCmd) -> Result<ExitCode> {
    match cmd {
        MbtCmd::Gen {
            transition,
            tactics,
            budget,
            seed,
            jobs,
            out,
        } => {
            let spec =
                mbt::transitions::transition_spec(&transition).map_err(|e| anyhow!("{e}"))?;
            let schedule = parse_tactics(&tactics)?;
            if schedule.is_empty() {
                bail!("empty tactic schedule");
            }
            let mut tree = TestingTree::new(spec);
            for tactic in &schedule {
                tree.apply_tactic_at_leaves(tactic)
                    .map_err(|e| anyhow!("{e}"))?;
            }
            let stats = tree
                .prune(budget, jobs.max(1))
                .map_err(|e| anyhow!("{e}"))?;
            let cases = tree.generate_cases().map_err(|e| anyhow!("{e}"))?;
            let tactic_strings: Vec<String> = schedule.iter().map(|t| t.to_string()).collect();
            let suite = SuiteWire::from_cases(&transition, &tactic_strings, budget, seed, &cases);
            emit(out.as_deref(), &(suite.to_json() + "\n"))?;
            eprintln!(
                "{}: {} leaves examined, {} pruned, {} cases",
                transition,
                stats.examined,
                stats.pruned,
                cases.len()
            );
            Ok(ExitCode::SUCCESS)
        }
        MbtCmd::Run {
            suite,
            sut,
            seed,
            report,
        } => {
            let suite = SuiteWire::from_json(&read(&suite)?).map_err(|e| anyhow!("{e}"))?;
            let spec =
                mbt::transitions::transition_spec(&suite.transition).map_err(|e| anyhow!("{e}"))?;
            let adapter =
                mbt::transitions::sut(&suite.transition, &sut, seed.unwrap_or(suite.seed))
                    .map_err(|e| anyhow!("{e}"))?;
            let verdicts = mbt::run_suite(&spec, &suite.cases(), adapter.as_ref());
            emit(report.as_deref(), &(verdicts.to_json() + "\n"))?;
            eprintln!(
                "{}: {} passed, {} failed",
                verdicts.sut, verdicts.passed, verdicts.failed
            );
            Ok(if verdicts.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn run_monitor_cmd(backend: Backend, cmd: MonitorCmd) -> Result<ExitCode> {
    let MonitorCmd::Run {
        trace,
        config,
        alarms,
        summary,
    } = cmd;
    let cfg: SimConfig = serde_json::from_str(&read(&config)?).context("bad sim config")?;
    let scenario = sim::build_scenario(&cfg).map_err(|e| anyhow!("{e}"))?;
    let text = read(&trace)?;
    let mut alarm_lines = String::new();
    let report = monitor::run_monitor(backend, scenario.conf, text.lines(), |alarm| {
        alarm_lines.push_str(&alarm.to_json_line());
        alarm_lines.push('\n');
    });
    match &alarms {
        Some(path) => fs::write(path, &alarm_lines)?,
        None => eprint!("{alarm_lines}"),
    }
    let summary_json = serde_json::to_string_pretty(&report)? + "\n";
    match &summary {
        Some(path) => fs::write(path, &summary_json)?,
        None => print!("{summary_json}"),
    }
    Ok(if report.divergence_alarms == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    let backend = cli.backend.backend();
    match cli.command {
        Command::Tx(cmd) => run_tx(backend, cmd),
        Command::Block(cmd) => run_block(backend, cmd),
        Command::Chain(cmd) => run_chain(backend, cmd),
        Command::Sim(args) => {
            let SimCmd::Run(args) = args;
            run_sim(cli.backend, args)
        }
        Command::Mbt(cmd) => run_mbt(cmd),
        Command::Monitor(cmd) => run_monitor_cmd(backend, cmd),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
