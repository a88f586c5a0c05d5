//! `lcm`: run robot scenarios, check traces, produce impossibility
//! witnesses and query the model/scheduler relation lattice.
//!
//! Exit codes: 0 ok/pass, 1 usage or validation error, 2 simulation error,
//! 3 predicate failed, 4 search exhausted.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use lcm_core::algorithms::{self, AlgOc, AlgoIop, Comil};
use lcm_core::engine::{run_events, Model, Program, TraceRecord};
use lcm_core::impossibility::{iop_fcom_search, oc_oblot_witness};
use lcm_core::problems::{check_il, check_iop, check_oc, IlInstance, IopInstance, OcInstance, Verdict};
use lcm_core::relations::{self, derive, ModelSched};
use lcm_core::schedulers::{
    generate_async, generate_ssync, sync_to_async, validate_schedule, AdversaryParams, FramePolicy, Schedule,
    SchedulerKind,
};
use lcm_core::{Trace, WorldState};

const OUT_DIR_ENV: &str = "LCM_OUT_DIR";

#[derive(Parser)]
#[command(name = "lcm", version, about = "Look-Compute-Move robot workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a program and write its JSONL trace.
    Run(RunArgs),
    /// Evaluate a problem predicate on a JSONL trace.
    Check(CheckArgs),
    /// Produce an impossibility witness.
    Witness(WitnessArgs),
    /// Query the relation lattice.
    Relations {
        #[command(subcommand)]
        command: RelationsCommand,
    },
    /// List registered programs.
    Programs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ProblemArg {
    Oc,
    Il,
    Iop,
}

#[derive(Args)]
struct RunArgs {
    /// JSON scenario file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    algorithm: Option<String>,
    /// Light model the program must be written for.
    #[arg(long)]
    model: Option<Model>,
    #[arg(long)]
    scheduler: Option<SchedulerKind>,
    /// Run a synchronous schedule through the ASYNC engine.
    #[arg(long)]
    as_async: bool,
    /// Scripted schedule (JSON) instead of a generated one.
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// Problem instance (JSON); defaults to the canonical instance.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    fairness_window: Option<usize>,
    #[arg(long)]
    max_progress_splits: Option<usize>,
    #[arg(long)]
    fixed_frames: bool,
    /// Trace path; relative paths resolve against $LCM_OUT_DIR.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    trace: PathBuf,
    #[arg(long)]
    problem: ProblemArg,
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    min_cycles: usize,
    /// Program used for the −IL quiescence probe.
    #[arg(long, default_value = "comil")]
    algorithm: String,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum WitnessKindArg {
    OcOblot,
    IopFcom,
}

#[derive(Args)]
struct WitnessArgs {
    kind: WitnessKindArg,
    #[arg(long)]
    program: String,
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Rounds explored per schedule (iop-fcom).
    #[arg(long, default_value_t = 12)]
    depth: usize,
    /// Instance scalings tried (iop-fcom).
    #[arg(long, default_value_t = 3)]
    scalings: usize,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum RelationsCommand {
    /// Relation between two pairs such as FSTA^A and OBLOT^F.
    Derive {
        x: ModelSched,
        y: ModelSched,
        /// Extra fact file merged into the shipped base.
        #[arg(long)]
        facts: Option<PathBuf>,
    },
    /// Check every recorded claim against the closure.
    Verify {
        #[arg(long)]
        facts: Option<PathBuf>,
    },
}

/// Scenario file contents. Every field is optional so flags can fill gaps.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioConfig {
    algorithm: Option<String>,
    model: Option<Model>,
    scheduler: Option<SchedulerKind>,
    #[serde(default)]
    as_async: bool,
    instance: Option<serde_json::Value>,
    params: Option<AdversaryParams>,
    schedule_file: Option<PathBuf>,
    output: Option<PathBuf>,
}

/// An error with its exit code.
struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

type Outcome = Result<u8, Failure>;

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn out_path(p: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if p.is_relative() => Path::new(&dir).join(p),
        _ => p.to_path_buf(),
    }
}

fn problem_of(program: &str) -> Option<ProblemArg> {
    match program {
        "alg_oc" => Some(ProblemArg::Oc),
        "comil" => Some(ProblemArg::Il),
        "algo_iop" => Some(ProblemArg::Iop),
        n if algorithms::oblivious_candidates().iter().any(|p| p.name() == n) => Some(ProblemArg::Oc),
        n if algorithms::fcom_candidates().iter().any(|p| p.name() == n) => Some(ProblemArg::Iop),
        _ => None,
    }
}

/// A validated instance of one of the three problems.
enum Instance {
    Oc(OcInstance),
    Il(IlInstance),
    Iop(IopInstance),
}

impl Instance {
    fn load(problem: ProblemArg, value: Option<serde_json::Value>) -> Result<Instance, Failure> {
        fn parse<T: for<'de> Deserialize<'de> + Default>(v: Option<serde_json::Value>) -> Result<T, Failure> {
            match v {
                None => Ok(T::default()),
                Some(serde_json::Value::String(s)) if s == "default" => Ok(T::default()),
                Some(v) => serde_json::from_value(v).map_err(|e| usage(format!("instance: {e}"))),
            }
        }
        let inst = match problem {
            ProblemArg::Oc => {
                let i: OcInstance = parse(value)?;
                i.validate().map(|_| Instance::Oc(i))
            }
            ProblemArg::Il => {
                let i: IlInstance = parse(value)?;
                i.validate().map(|_| Instance::Il(i))
            }
            ProblemArg::Iop => {
                let i: IopInstance = parse(value)?;
                i.validate().map(|_| Instance::Iop(i))
            }
        };
        inst.map_err(|e| usage(e.to_string()))
    }

    fn from_file(problem: ProblemArg, path: Option<&PathBuf>) -> Result<Instance, Failure> {
        let value = path.map(|p| read_json::<serde_json::Value>(p)).transpose()?;
        Instance::load(problem, value)
    }

    fn initial_world(&self) -> WorldState {
        match self {
            Instance::Oc(i) => i.initial_world(),
            Instance::Il(i) => i.initial_world(),
            Instance::Iop(i) => i.initial_world(),
        }
    }

    /// `name` built on this instance.
    fn program(&self, name: &str) -> Option<Box<dyn Program>> {
        match (self, name) {
            (Instance::Oc(i), "alg_oc") => Some(Box::new(AlgOc { instance: i.clone() })),
            (Instance::Il(i), "comil") => Some(Box::new(Comil { instance: i.clone() })),
            (Instance::Iop(_), "algo_iop") => Some(Box::new(AlgoIop)),
            (Instance::Oc(i), n) => algorithms::oblivious_candidates_for(i)
                .into_iter()
                .find(|p| p.name() == n),
            (Instance::Iop(_), n) => algorithms::fcom_candidates().into_iter().find(|p| p.name() == n),
            _ => None,
        }
    }
}

fn cmd_run(args: RunArgs) -> Outcome {
    let mut cfg: ScenarioConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => ScenarioConfig::default(),
    };
    let algorithm = args
        .algorithm
        .or(cfg.algorithm.take())
        .ok_or_else(|| usage("--algorithm is required"))?;
    let problem = problem_of(&algorithm).ok_or_else(|| {
        usage(format!(
            "unknown algorithm {algorithm:?}; known: {}",
            algorithms::program_names().join(", ")
        ))
    })?;
    let instance = match &args.instance {
        Some(p) => Instance::from_file(problem, Some(p))?,
        None => Instance::load(problem, cfg.instance.take())?,
    };
    let program = instance.program(&algorithm).expect("problem_of and program agree");
    if let Some(model) = args.model.or(cfg.model) {
        if model != program.model() {
            return Err(usage(format!(
                "{algorithm} is written for {}, not {model}",
                program.model()
            )));
        }
    }
    let world0 = instance.initial_world();
    let n = world0.len();

    let mut schedule = match args.schedule.as_ref().or(cfg.schedule_file.as_ref()) {
        Some(path) => {
            let s: Schedule = read_json(path)?;
            if s.robot_count != n {
                return Err(usage(format!(
                    "schedule is for {} robots, scenario has {n}",
                    s.robot_count
                )));
            }
            s
        }
        None => {
            let mut params = cfg.params.take().unwrap_or_default();
            if let Some(v) = args.seed {
                params.seed = v;
            }
            if let Some(v) = args.horizon {
                params.horizon = v;
            }
            if let Some(v) = args.fairness_window {
                params.fairness_window = v;
            }
            if let Some(v) = args.max_progress_splits {
                params.max_progress_splits = v;
            }
            if args.fixed_frames {
                params.frame_policy = FramePolicy::FixedPerRobot;
            }
            let kind = args.scheduler.or(cfg.scheduler).unwrap_or(SchedulerKind::Async);
            match kind {
                SchedulerKind::Async => generate_async(&params, n),
                sync => generate_ssync(&params, n, sync == SchedulerKind::Fsync),
            }
            .map_err(|e| usage(e.to_string()))?
        }
    };
    if (args.as_async || cfg.as_async) && schedule.kind.is_sync() {
        schedule = sync_to_async(&schedule);
    }
    let violations = validate_schedule(&schedule, n);
    if !violations.is_empty() {
        let lines: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(usage(format!("invalid schedule:\n{}", lines.join("\n"))));
    }

    let default_name = format!(
        "{algorithm}-{}-{}.jsonl",
        schedule.kind,
        schedule.params.as_ref().map_or(0, |p| p.seed)
    );
    let path = out_path(
        args.out
            .as_ref()
            .or(cfg.output.as_ref())
            .unwrap_or(&PathBuf::from(default_name)),
    );
    let file = File::create(&path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    let mut io_err: Option<io::Error> = None;
    let result = run_events(world0, program.as_ref(), program.model(), &schedule.events, |entry| {
        if io_err.is_none() {
            let line = serde_json::to_string(&TraceRecord::from(entry)).expect("record serializes");
            if let Err(e) = writeln!(w, "{line}") {
                io_err = Some(e);
            }
        }
    });
    let code = match result {
        Ok(_) => 0,
        Err(e) => {
            let line = serde_json::to_string(&TraceRecord::error(e.event_index, e.error.to_string()))
                .expect("record serializes");
            writeln!(w, "{line}").map_err(|e| usage(e.to_string()))?;
            eprintln!("simulation error at event {}: {}", e.event_index, e.error);
            2
        }
    };
    w.flush().map_err(|e| usage(e.to_string()))?;
    if let Some(e) = io_err {
        return Err(usage(format!("{}: {e}", path.display())));
    }
    say(path.display());
    Ok(code)
}

/// Writes a line to stdout; a closed pipe is not an error.
fn say(text: impl std::fmt::Display) {
    let _ = writeln!(io::stdout().lock(), "{text}");
}

fn print_json<T: Serialize>(value: &T, out: Option<&PathBuf>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    match out {
        Some(p) => {
            let path = out_path(p);
            fs::write(&path, text + "\n").map_err(|e| usage(format!("{}: {e}", path.display())))?;
            say(path.display());
        }
        None => say(text),
    }
    Ok(())
}

fn cmd_check(args: CheckArgs) -> Outcome {
    let text = fs::read_to_string(&args.trace).map_err(|e| usage(format!("{}: {e}", args.trace.display())))?;
    let trace = Trace::from_jsonl(&text).map_err(|e| usage(format!("{}: {e}", args.trace.display())))?;
    let instance = Instance::from_file(args.problem, args.instance.as_ref())?;
    let verdict: Verdict = match &instance {
        Instance::Oc(i) => check_oc(&trace, i, args.min_cycles),
        Instance::Iop(i) => check_iop(&trace, i, args.min_cycles),
        Instance::Il(i) => {
            let program = instance
                .program(&args.algorithm)
                .ok_or_else(|| usage(format!("{} is not a −IL program", args.algorithm)))?;
            check_il(&trace, i, program.as_ref(), program.model())
        }
    };
    print_json(&verdict, None)?;
    Ok(if verdict.pass { 0 } else { 3 })
}

fn cmd_witness(args: WitnessArgs) -> Outcome {
    match args.kind {
        WitnessKindArg::OcOblot => {
            let Instance::Oc(inst) = Instance::from_file(ProblemArg::Oc, args.instance.as_ref())? else {
                unreachable!()
            };
            let program = algorithms::oblivious_candidates_for(&inst)
                .into_iter()
                .find(|p| p.name() == args.program)
                .or_else(|| algorithms::program_by_name(&args.program))
                .ok_or_else(|| usage(format!("unknown program {:?}", args.program)))?;
            let w = oc_oblot_witness(program.as_ref(), &inst).map_err(|e| usage(e.to_string()))?;
            print_json(&w, args.out.as_ref())?;
            Ok(0)
        }
        WitnessKindArg::IopFcom => {
            let Instance::Iop(inst) = Instance::from_file(ProblemArg::Iop, args.instance.as_ref())? else {
                unreachable!()
            };
            let program = algorithms::program_by_name(&args.program)
                .ok_or_else(|| usage(format!("unknown program {:?}", args.program)))?;
            match iop_fcom_search(program.as_ref(), &inst, args.depth, args.scalings)
                .map_err(|e| usage(e.to_string()))?
            {
                Some(w) => {
                    print_json(&w, args.out.as_ref())?;
                    Ok(0)
                }
                None => {
                    say(format_args!("none found within depth {}", args.depth));
                    Ok(4)
                }
            }
        }
    }
}

fn load_facts(extra: Option<&PathBuf>) -> Result<Vec<relations::Fact>, Failure> {
    let mut facts = relations::base_facts();
    if let Some(p) = extra {
        let text = fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
        facts.extend(relations::parse_facts(&text).map_err(|e| usage(e.to_string()))?);
    }
    Ok(facts)
}

fn cmd_relations(cmd: RelationsCommand) -> Outcome {
    match cmd {
        RelationsCommand::Derive { x, y, facts } => {
            let closure = relations::close(&load_facts(facts.as_ref())?);
            let d = derive(&closure, x, y);
            eprintln!("{x} {} {y}", d.relation);
            for step in &d.derivation {
                eprintln!("  {step}");
            }
            print_json(&d, None)?;
            Ok(0)
        }
        RelationsCommand::Verify { facts } => {
            let report = relations::verify_claims(&load_facts(facts.as_ref())?, &relations::paper_claims());
            for r in &report.results {
                eprintln!(
                    "{} {:<10} {} {} {} (expected {})",
                    if r.pass { "PASS" } else { "FAIL" },
                    r.claim.id,
                    r.claim.x,
                    r.derived.relation,
                    r.claim.y,
                    r.claim.expected
                );
            }
            print_json(&report, None)?;
            Ok(if report.all_pass { 0 } else { 3 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Check(a) => cmd_check(a),
        Command::Witness(a) => cmd_witness(a),
        Command::Relations { command } => cmd_relations(command),
        Command::Programs => {
            for p in algorithms::registry() {
                say(format_args!("{}\t{}", p.name(), p.model()));
            }
            Ok(0)
        }
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
