//! Command-line front end. Every randomized command takes an explicit seed
//! and the same command with the same seed writes byte-identical output;
//! wall-clock chatter goes to stderr so files and stdout stay diffable.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand};

use netcon::analysis::{
    estimate_runtime, exhaustive_verify, expected_steps, replay_impossibility, run, sample_mean,
    BaselineKind, ConnectivityMonitor, Driver, LiftSource, LiftVerdict, Monitor, Outcome,
    Property, StopWhen, SweepError, CSV_HEADER,
};
use netcon::protocols::{self, Target};
use netcon::tm::{compute_predicate, PipelineError, TMDescription};
use netcon::topology::{ActiveGraph, TopologyFamily};

const EXIT_USAGE: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_VIOLATION: u8 = 4;

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn budget(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_BUDGET,
            message: message.into(),
        }
    }

    fn violation(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_VIOLATION,
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "netcon",
    version,
    about = "Seeded simulation, verification, and replay for edge-rewriting pairwise protocols"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One seeded run of a cataloged protocol, with recognizer verdict.
    Run(RunArgs),
    /// Scaling rows over a size list, or closed-form baseline rows.
    Bench(BenchArgs),
    /// Record a cut on a base graph and replay it lifted onto k copies.
    Replay(ReplayArgs),
    /// Sweep every reachable configuration at small n and check a property.
    Verify(VerifyArgs),
    /// Transform, split, and run a machine on the resulting memory.
    Tm(TmArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Protocol name from the catalog.
    #[arg(long)]
    protocol: String,
    /// Number of nodes.
    #[arg(long)]
    n: usize,
    /// clique | line | ring | star | random_connected(p)
    #[arg(long)]
    family: String,
    /// Scheduler seed; required, never defaulted from time.
    #[arg(long)]
    seed: u64,
    /// Selection budget; defaults to the catalog budget for this size.
    #[arg(long)]
    budget: Option<u64>,
    /// Skip the connectivity monitor.
    #[arg(long)]
    no_monitors: bool,
    /// Also write the selection trace here, replayable later.
    #[arg(long, value_name = "PATH")]
    trace_out: Option<PathBuf>,
    /// Write the CSV here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(group = ArgGroup::new("subject").required(true).args(["protocol", "baseline"]))]
struct BenchArgs {
    /// Protocol name from the catalog.
    #[arg(long)]
    protocol: Option<String>,
    /// Closed-form baseline process: edge_cover | meet_everybody.
    #[arg(long)]
    baseline: Option<String>,
    /// Comma-separated sizes, e.g. 8,16,32.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    /// Trials per size.
    #[arg(long)]
    trials: usize,
    /// Base seed; trial s at size index i runs with seed + i*trials + s.
    #[arg(long)]
    seed: u64,
    /// Initial family for protocol benches.
    #[arg(long, default_value = "clique")]
    family: String,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Protocol whose cut gets lifted; must not sense common neighbors.
    #[arg(long, default_value = "naive-cycle-breaker")]
    protocol: String,
    /// Number of copies chained into the lifted cycle.
    #[arg(long)]
    k: usize,
    /// Seed for the recorded base run.
    #[arg(long)]
    seed: u64,
    /// Selections to wait for the tracked cut before giving up.
    #[arg(long, default_value_t = 100_000)]
    budget: u64,
    /// Base graph as comma-separated u-v pairs; a triangle when omitted.
    #[arg(long, value_delimiter = ',', value_name = "U-V")]
    edges: Vec<String>,
    /// Base edge to track, as u-v; required with --edges.
    #[arg(long, value_name = "U-V")]
    cut: Option<String>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Protocol name from the catalog.
    #[arg(long)]
    protocol: String,
    /// Number of nodes; refused above the sweep's size cap.
    #[arg(long)]
    n: usize,
    /// halt_implies_spanning_line | fixed_point_implies_spanning_star |
    /// connectivity_preserved
    #[arg(long)]
    property: String,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TmArgs {
    /// Machine table file.
    #[arg(long, value_name = "PATH")]
    machine: PathBuf,
    /// Number of nodes.
    #[arg(long)]
    n: usize,
    /// One input symbol per node, e.g. aabab.
    #[arg(long)]
    inputs: String,
    /// clique | line | ring | star | random_connected(p)
    #[arg(long)]
    family: String,
    /// Scheduler seed for the transformation stage.
    #[arg(long)]
    seed: u64,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Replay(a) => cmd_replay(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Tm(a) => cmd_tm(a),
    };
    eprintln!("netcon: {:.3}s", started.elapsed().as_secs_f64());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("netcon: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn header(command: &str, fields: &[(&str, String)]) -> String {
    let mut line = format!("# netcon {command}");
    for (key, value) in fields {
        let _ = write!(line, " {key}={value}");
    }
    line.push('\n');
    line
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn path_or_dash(path: &Option<PathBuf>) -> String {
    path.as_ref()
        .map_or_else(|| "-".into(), |p| p.display().to_string())
}

fn parse_family(text: &str) -> Result<TopologyFamily, Failure> {
    text.parse().map_err(|e| Failure::usage(format!("{e}")))
}

fn parse_pair(text: &str) -> Result<(usize, usize), Failure> {
    let err = || Failure::usage(format!("expected an edge as u-v, got {text:?}"));
    let (u, v) = text.split_once('-').ok_or_else(err)?;
    Ok((
        u.trim().parse().map_err(|_| err())?,
        v.trim().parse().map_err(|_| err())?,
    ))
}

fn cmd_run(a: RunArgs) -> Result<(), Failure> {
    let entry = protocols::by_name(&a.protocol)
        .ok_or_else(|| Failure::usage(format!("unknown protocol {:?}", a.protocol)))?;
    let family = parse_family(&a.family)?;
    let budget = a.budget.unwrap_or_else(|| entry.claimed_time.step_budget(a.n));
    let stop = if entry.spec.has_halting_states() {
        StopWhen::Halted
    } else if matches!(entry.target, Target::TwoCyclePredicate) {
        StopWhen::Steps
    } else {
        StopWhen::FixedPoint
    };
    let monitors_on = entry.preserves_connectivity && !a.no_monitors;

    let cfg = protocols::seeded_initial(&entry.spec, a.n, family, a.seed)
        .map_err(|e| Failure::usage(format!("{e}")))?;
    let mut monitors: Vec<Box<dyn Monitor>> = if monitors_on {
        vec![Box::new(ConnectivityMonitor::new())]
    } else {
        Vec::new()
    };
    let (report, _, trace) = run(
        &entry.spec,
        cfg,
        Driver::Uniform { seed: a.seed },
        stop,
        budget,
        &mut monitors,
        &family.label(),
        a.trace_out.is_some(),
    );

    let head = header(
        "run",
        &[
            ("protocol", a.protocol.clone()),
            ("n", a.n.to_string()),
            ("family", family.label()),
            ("seed", a.seed.to_string()),
            ("budget", budget.to_string()),
            ("monitors", if monitors_on { "on" } else { "off" }.into()),
            ("trace_out", path_or_dash(&a.trace_out)),
            ("out", path_or_dash(&a.out)),
        ],
    );
    let mut text = head.clone();
    text.push_str(CSV_HEADER);
    text.push('\n');
    text.push_str(&report.csv_row());
    text.push('\n');
    emit(&a.out, &text)?;

    if let (Some(path), Some(trace)) = (&a.trace_out, trace) {
        let body = format!("{head}{}", trace.serialize());
        fs::write(path, body)
            .map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))?;
    }

    if !report.violations.is_empty() {
        return Err(Failure::violation(format!(
            "{} connectivity violation(s) recorded",
            report.violations.len()
        )));
    }
    if report.outcome == Outcome::Exhausted {
        return Err(Failure::budget(format!(
            "run did not reach its stop condition within {budget} selections"
        )));
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<(), Failure> {
    if a.sizes.is_empty() {
        return Err(Failure::usage("need at least one size"));
    }
    if let Some(kind) = &a.baseline {
        let kind = match kind.as_str() {
            "edge_cover" | "edge-cover" => BaselineKind::EdgeCover,
            "meet_everybody" | "meet-everybody" => BaselineKind::MeetEverybody,
            other => return Err(Failure::usage(format!("unknown baseline {other:?}"))),
        };
        if let Some(&n) = a.sizes.iter().find(|&&n| n < 2) {
            return Err(Failure::usage(format!("baseline needs n >= 2, got {n}")));
        }
        let mut text = header(
            "bench",
            &[
                ("baseline", kind.label().into()),
                ("sizes", join_sizes(&a.sizes)),
                ("trials", a.trials.to_string()),
                ("seed", a.seed.to_string()),
                ("out", path_or_dash(&a.out)),
            ],
        );
        text.push_str("baseline,n,trials,mean,se,expected\n");
        for &n in &a.sizes {
            let (mean, se) = sample_mean(kind, n, a.trials, a.seed);
            let _ = writeln!(
                text,
                "{},{n},{},{mean:.4},{se:.4},{:.4}",
                kind.label(),
                a.trials,
                expected_steps(kind, n)
            );
        }
        return emit(&a.out, &text);
    }

    let name = a.protocol.as_deref().expect("clap enforces the group");
    let entry = protocols::by_name(name)
        .ok_or_else(|| Failure::usage(format!("unknown protocol {name:?}")))?;
    if a.trials < 30 {
        return Err(Failure::usage(format!(
            "scaling means need at least 30 trials per size, got {}",
            a.trials
        )));
    }
    let family = parse_family(&a.family)?;
    let report = estimate_runtime(&entry, family, &a.sizes, a.trials, a.seed);

    let mut text = header(
        "bench",
        &[
            ("protocol", name.into()),
            ("family", family.label()),
            ("sizes", join_sizes(&a.sizes)),
            ("trials", a.trials.to_string()),
            ("seed", a.seed.to_string()),
            ("out", path_or_dash(&a.out)),
        ],
    );
    text.push_str("protocol,family,n,trials,exhausted,violations,mean,sd,ci95,constant\n");
    let mut violations = 0;
    for s in &report.per_size {
        violations += s.violations;
        let constant = s
            .constant
            .map_or_else(String::new, |c| format!("{c:.6}"));
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{:.3},{:.3},{:.3},{constant}",
            report.protocol, report.family, s.n, s.trials, s.exhausted, s.violations, s.mean,
            s.sd, s.ci95
        );
    }
    if let Some(ratio) = report.constant_ratio {
        let _ = writeln!(text, "# constant_ratio={ratio:.4}");
    }
    emit(&a.out, &text)?;

    if violations > 0 {
        return Err(Failure::violation(format!(
            "{violations} connectivity violation(s) across the bench"
        )));
    }
    if report.tainted {
        return Err(Failure::budget(
            "some trials ran out of budget; means understate the truth",
        ));
    }
    Ok(())
}

fn join_sizes(sizes: &[usize]) -> String {
    sizes
        .iter()
        .map(|n| n.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn cmd_replay(a: ReplayArgs) -> Result<(), Failure> {
    if a.k < 2 {
        return Err(Failure::usage(format!(
            "the lifted cycle needs at least 2 copies, got {}",
            a.k
        )));
    }
    // The deliberately unsound breaker is not cataloged but is the usual
    // replay subject, so resolve it by its own name too.
    let spec = match protocols::by_name(&a.protocol) {
        Some(entry) => entry.spec,
        None => {
            let naive = protocols::naive_cycle_breaker();
            if naive.name == a.protocol {
                naive
            } else {
                return Err(Failure::usage(format!("unknown protocol {:?}", a.protocol)));
            }
        }
    };
    if spec.sensors.common_neighbor {
        return Err(Failure::usage(format!(
            "{} senses common neighbors; the lift cannot preserve its view",
            a.protocol
        )));
    }

    let (source, base_label) = if a.edges.is_empty() {
        if a.cut.is_some() {
            return Err(Failure::usage("--cut needs --edges"));
        }
        (LiftSource::Triangle, "triangle".to_string())
    } else {
        let cut = a
            .cut
            .as_deref()
            .ok_or_else(|| Failure::usage("--edges needs --cut"))?;
        let mut pairs = Vec::new();
        for token in &a.edges {
            pairs.push(parse_pair(token)?);
        }
        let n = pairs
            .iter()
            .flat_map(|&(u, v)| [u, v])
            .max()
            .map_or(0, |m| m + 1);
        let base = ActiveGraph::from_edges(n, &pairs);
        let edge = parse_pair(cut)?;
        let label = format!("edges:{}", a.edges.join("+"));
        (LiftSource::Graph { base, edge }, label)
    };

    let report = replay_impossibility(&spec, &source, a.k, a.seed, a.budget)
        .map_err(|e| Failure::usage(format!("{e}")))?;

    let mut text = header(
        "replay",
        &[
            ("protocol", a.protocol.clone()),
            ("base", base_label),
            ("k", a.k.to_string()),
            ("seed", a.seed.to_string()),
            ("budget", a.budget.to_string()),
            ("out", path_or_dash(&a.out)),
        ],
    );
    text.push_str(
        "protocol,k,tracked_edge,deactivation_step,blocks_checked,copies_agree,final_components,verdict\n",
    );
    let tracked = report
        .tracked_edge
        .map_or_else(String::new, |(u, v)| format!("{u}-{v}"));
    let step = report
        .deactivation_step
        .map_or_else(String::new, |s| s.to_string());
    let verdict = match &report.verdict {
        LiftVerdict::Split { components } => format!("split:{components}"),
        LiftVerdict::StayedConnected => "stayed_connected".into(),
        LiftVerdict::Inapplicable { block, .. } => format!("inapplicable:{block}"),
        LiftVerdict::NoDeactivation => "no_deactivation".into(),
    };
    let _ = writeln!(
        text,
        "{},{},{tracked},{step},{},{},{},{verdict}",
        report.protocol, report.k, report.blocks_checked, report.copies_agree,
        report.final_components
    );
    emit(&a.out, &text)
}

fn cmd_verify(a: VerifyArgs) -> Result<(), Failure> {
    let entry = protocols::by_name(&a.protocol)
        .ok_or_else(|| Failure::usage(format!("unknown protocol {:?}", a.protocol)))?;
    if entry.spec.directed {
        return Err(Failure::usage(format!(
            "{} is directed; the sweep enumerates undirected configurations",
            a.protocol
        )));
    }
    let property = match a.property.as_str() {
        "halt_implies_spanning_line" => Property::HaltImpliesSpanningLine,
        "fixed_point_implies_spanning_star" => Property::FixedPointImpliesSpanningStar,
        "connectivity_preserved" => Property::ConnectivityPreserved,
        other => return Err(Failure::usage(format!("unknown property {other:?}"))),
    };

    let report = match exhaustive_verify(&entry.spec, a.n, property) {
        Ok(report) => report,
        Err(SweepError::TooLarge { n, estimate }) => {
            return Err(Failure::usage(format!(
                "refused: roughly {estimate:.2e} raw configurations at n={n}; keep n <= 4"
            )));
        }
        Err(e) => return Err(Failure::usage(format!("{e}"))),
    };

    let mut text = header(
        "verify",
        &[
            ("protocol", a.protocol.clone()),
            ("n", a.n.to_string()),
            ("property", property.label().into()),
            ("out", path_or_dash(&a.out)),
        ],
    );
    text.push_str("protocol,n,property,initials,visited,holds\n");
    let _ = writeln!(
        text,
        "{},{},{},{},{},{}",
        report.protocol,
        report.n,
        property.label(),
        report.initials,
        report.visited,
        report.holds
    );
    if let Some(cx) = &report.counterexample {
        let _ = writeln!(text, "# counterexample: {cx}");
    }
    let _ = writeln!(text, "# {}", if report.holds { "PASS" } else { "FAIL" });
    emit(&a.out, &text)?;

    if report.holds {
        Ok(())
    } else {
        Err(Failure::violation(format!(
            "{} fails {} at n={}",
            a.protocol,
            property.label(),
            a.n
        )))
    }
}

fn cmd_tm(a: TmArgs) -> Result<(), Failure> {
    let tm = TMDescription::load(&a.machine)
        .map_err(|e| Failure::usage(format!("{}: {e}", a.machine.display())))?;
    let family = parse_family(&a.family)?;
    let inputs: Vec<char> = a.inputs.chars().collect();

    let transform_started = Instant::now();
    let report = compute_predicate(&tm, a.n, &inputs, family, a.seed).map_err(|e| match e {
        PipelineError::TransformExhausted { .. } => Failure::budget(format!("{e}")),
        other => Failure::usage(format!("{other}")),
    })?;
    eprintln!(
        "netcon: transform {} selections, layout {} rewrites, machine {} steps in {:.3}s",
        report.transform_steps,
        report.layout_interactions,
        report.tm_steps,
        transform_started.elapsed().as_secs_f64()
    );

    let mut text = header(
        "tm",
        &[
            ("machine", tm.name.clone()),
            ("n", a.n.to_string()),
            ("inputs", a.inputs.clone()),
            ("family", family.label()),
            ("seed", a.seed.to_string()),
            ("out", path_or_dash(&a.out)),
        ],
    );
    text.push_str(
        "machine,n,inputs,family,seed,decision,transform_steps,layout_interactions,tm_steps,tm_interactions\n",
    );
    let _ = writeln!(
        text,
        "{},{},{},{},{},{},{},{},{},{}",
        tm.name,
        a.n,
        a.inputs,
        family.label(),
        a.seed,
        report.decision.label(),
        report.transform_steps,
        report.layout_interactions,
        report.tm_steps,
        report.tm_interactions
    );
    emit(&a.out, &text)
}
