use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hrcap::gadgets::{
    build_c2_amplifier, build_expansion_gadget, build_reduction_gadget, build_t3_amplifier, build_t4_split_gadget,
    AmplifierParams, GadgetError,
};
use hrcap::{
    avg_rank, blocking_pairs, enumerate_stable, enumerate_weakly_stable, generate, parse_document, parse_manifest,
    parse_matching, serialize_document, serialize_instance, solve, solve_with_heuristic, validate_instance, Budget,
    CapacityDelta, Document, EngineError, GenSpec, Heuristic, Instance, Matching, ProblemKind, ProblemSpec,
    SearchMode, SolveError, SolveResult, SolverConfig, DEFAULT_GUARD, DEFAULT_LIMIT,
};

/// Capacity expansion and reduction for hospitals/residents stable matching.
#[derive(Parser, Debug)]
#[command(name = "hrcap", version)]
struct Cli {
    /// Worker threads for allocation search.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Largest allocation count a solver may search.
    #[arg(long, global = true, default_value_t = DEFAULT_GUARD)]
    guard: u64,
    /// Seed for `gen`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve a capacity problem on an instance file (`-` for stdin).
    Solve {
        input: PathBuf,
        #[arg(long)]
        problem: ProblemKind,
        /// Global budget; the file's `budget` line otherwise.
        #[arg(long)]
        budget: Option<u32>,
        /// Decision target; the file's `target` line otherwise.
        #[arg(long)]
        target: Option<u64>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Check a matching for stability and list its blocking pairs.
    Verify {
        input: PathBuf,
        #[arg(long)]
        matching: PathBuf,
    },
    /// Build a gadget instance from a source instance.
    Gadget {
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: GadgetKind,
        /// Source target; the file's `target` line otherwise, then 0.
        #[arg(long)]
        target: Option<u64>,
        #[arg(long)]
        copies: Option<usize>,
        #[arg(long)]
        padding: Option<usize>,
        /// Derive copies and padding as n^(a-1) and n^a.
        #[arg(long, conflicts_with_all = ["copies", "padding"])]
        exponent: Option<u32>,
        /// Write the gadget here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Generate seeded instances.
    Gen {
        #[arg(long, default_value_t = 4)]
        residents: usize,
        #[arg(long, default_value_t = 4)]
        hospitals: usize,
        /// one, uniform:LO:HI or fixed:C,C,...
        #[arg(long, default_value = "one")]
        capacity: String,
        #[arg(long, default_value_t = 0)]
        ties: usize,
        #[arg(long, default_value_t = 0)]
        hospital_ties: usize,
        /// full or a list length
        #[arg(long, default_value = "full")]
        length: String,
        /// One `gen ...` line per instance; needs --out-dir.
        #[arg(long, requires = "out_dir", conflicts_with_all = ["residents", "hospitals", "capacity", "ties", "hospital_ties", "length"])]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// List every stable (or weakly stable) matching.
    Enumerate {
        input: PathBuf,
        #[arg(long)]
        weak: bool,
        #[arg(long, default_value_t = DEFAULT_LIMIT)]
        limit: u64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Exact,
    Exhaustive,
    Majority,
    Borda,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GadgetKind {
    Expansion,
    Reduction,
    T4Split,
    C2Amplify,
    T3Amplify,
}

enum Failure {
    Usage(String),
    Invalid(String),
    Guard(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Invalid(_) => 3,
            Failure::Guard(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Invalid(m) | Failure::Guard(m) => m,
        }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::GuardExceeded { .. } | SolveError::Engine(EngineError::LimitExceeded { .. }) => {
                Failure::Guard(e.to_string())
            }
            SolveError::BudgetKind(..) => Failure::Usage(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        SolveError::Engine(e).into()
    }
}

impl From<GadgetError> for Failure {
    fn from(e: GadgetError) -> Self {
        match e {
            GadgetError::Solve(s) => s.into(),
            GadgetError::Engine(s) => s.into(),
            GadgetError::Params(_) | GadgetError::TooLarge { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

/// Report text and exit code of a successful run.
struct Report {
    text: String,
    code: u8,
}

fn read_input(path: &Path) -> Result<String, Failure> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::Usage(format!("stdin: {e}")))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
    }
}

fn load(path: &Path) -> Result<Document, Failure> {
    let text = read_input(path)?;
    let doc = parse_document(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let violations = validate_instance(&doc.instance);
    if let Some(first) = violations.first() {
        let mut msg = format!("{} invalid instance: {first}", path.display());
        for v in &violations[1..] {
            let _ = write!(msg, "; {v}");
        }
        return Err(Failure::Invalid(msg));
    }
    Ok(doc)
}

fn push_delta(out: &mut String, delta: &CapacityDelta, nh: usize) {
    let _ = write!(out, "delta {}", delta.direction);
    for j in 0..nh {
        let _ = write!(out, " {}", delta.amounts.get(j).copied().unwrap_or(0));
    }
    out.push('\n');
}

fn push_matching(out: &mut String, m: &Matching) {
    for (r, h) in m.pairs() {
        let _ = writeln!(out, "pair {r} {h}");
    }
}

fn run_solve(
    cli: &Cli,
    input: &Path,
    kind: ProblemKind,
    budget: Option<u32>,
    target: Option<u64>,
    mode: Option<Mode>,
) -> Result<Report, Failure> {
    let doc = load(input)?;
    let inst = &doc.instance;
    let target = target.or(doc.target);
    let config = SolverConfig {
        guard: cli.guard,
        workers: cli.workers,
        mode: match mode {
            Some(Mode::Exact) => Some(SearchMode::Exact),
            Some(Mode::Exhaustive) => Some(SearchMode::Exhaustive),
            _ => None,
        },
        ..SolverConfig::default()
    };
    let result = match mode {
        Some(m @ (Mode::Majority | Mode::Borda)) => {
            let budget_ok = budget.or(doc.budget).is_none_or(|b| b == 1);
            if !matches!(kind, ProblemKind::SingleExpand | ProblemKind::MinAvgExpand) || !budget_ok {
                return Err(Failure::Usage(
                    "heuristic modes add one seat: use single-expand or min-avg-expand with budget 1".into(),
                ));
            }
            let h = if matches!(m, Mode::Majority) { Heuristic::Majority } else { Heuristic::Borda };
            let r = solve_with_heuristic(inst, h)?;
            let meets_target = target.map(|k| r.objective <= k);
            SolveResult { meets_target, ..r }
        }
        _ => {
            let budget = if kind.uses_partition() {
                if budget.is_some() {
                    return Err(Failure::Usage(format!("{kind} reads its budgets from partition lines")));
                }
                let p = doc
                    .partition
                    .clone()
                    .ok_or_else(|| Failure::Usage(format!("{kind} needs partition lines in the input")))?;
                Budget::Parts(p)
            } else {
                let needs = matches!(kind, ProblemKind::MinAvgExpand | ProblemKind::MinAvgReduce);
                match budget.or(doc.budget) {
                    Some(b) => Budget::Global(b),
                    None if needs => return Err(Failure::Usage(format!("{kind} needs --budget"))),
                    None => Budget::Global(0),
                }
            };
            solve(inst, &ProblemSpec { kind, budget, target }, &config)?
        }
    };

    let mut out = String::new();
    let _ = writeln!(out, "problem {kind}");
    push_delta(&mut out, &result.delta, inst.num_hospitals());
    push_matching(&mut out, &result.matching);
    let _ = writeln!(out, "objective {}", result.objective);
    let (verdict, code) = match result.meets_target {
        Some(true) => ("YES".to_string(), 0),
        Some(false) => ("NO".to_string(), 1),
        None => (result.objective.to_string(), 0),
    };
    if let Some(k) = target {
        let _ = writeln!(out, "target {k}");
        let _ = writeln!(out, "decision {verdict}");
    }
    let _ = writeln!(out, "result solve {verdict}");
    Ok(Report { text: out, code })
}

fn run_verify(input: &Path, matching: &Path) -> Result<Report, Failure> {
    let doc = load(input)?;
    let inst = &doc.instance;
    let text = read_input(matching)?;
    let m = parse_matching(&text, inst.num_residents(), inst.num_hospitals())
        .map_err(|e| Failure::Usage(format!("{}: {e}", matching.display())))?;
    m.check_feasible(inst)
        .map_err(|e| Failure::Invalid(format!("{}: {e}", matching.display())))?;
    let pairs = blocking_pairs(inst, &m).map_err(|e| Failure::Invalid(e.to_string()))?;
    let mut out = String::new();
    for (r, h) in &pairs {
        let _ = writeln!(out, "blocking {r} {h}");
    }
    let _ = writeln!(out, "size {}", m.len());
    let _ = writeln!(out, "objective {}", avg_rank(inst, &m).map_err(|e| Failure::Invalid(e.to_string()))?);
    let stable = pairs.is_empty();
    let _ = writeln!(out, "stable {}", if stable { "yes" } else { "no" });
    let _ = writeln!(out, "result verify {}", if stable { "stable" } else { "unstable" });
    Ok(Report {
        text: out,
        code: if stable { 0 } else { 1 },
    })
}

fn amplifier_params(
    n: usize,
    copies: Option<usize>,
    padding: Option<usize>,
    exponent: Option<u32>,
) -> AmplifierParams {
    match exponent {
        Some(a) => AmplifierParams::from_exponent(n, a),
        None => AmplifierParams {
            copies: copies.unwrap_or(1),
            padding: padding.unwrap_or(n),
            exponent: None,
        },
    }
}

#[allow(clippy::too_many_arguments)]
fn run_gadget(
    input: &Path,
    kind: GadgetKind,
    target: Option<u64>,
    copies: Option<usize>,
    padding: Option<usize>,
    exponent: Option<u32>,
    output: Option<&Path>,
) -> Result<Report, Failure> {
    let doc = load(input)?;
    let src = &doc.instance;
    let k = target.or(doc.target).unwrap_or(0);
    let params = amplifier_params(src.num_residents(), copies, padding, exponent);
    let out = match kind {
        GadgetKind::Expansion => build_expansion_gadget(src, k)?,
        GadgetKind::Reduction => build_reduction_gadget(src, k)?,
        GadgetKind::T4Split => build_t4_split_gadget(src, k)?,
        GadgetKind::C2Amplify => build_c2_amplifier(src, params)?,
        GadgetKind::T3Amplify => {
            let parts = doc
                .partition
                .as_ref()
                .ok_or_else(|| Failure::Usage("t3-amplify needs partition lines in the input".into()))?;
            build_t3_amplifier(src, parts, params)?
        }
    };
    let text = serialize_document(&out.to_document());
    let mut report = String::new();
    match output {
        Some(path) => {
            fs::write(path, &text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            let _ = writeln!(report, "wrote {}", path.display());
        }
        None => report.push_str(&text),
    }
    let g = &out.instance;
    let _ = writeln!(report, "# agents {} {}", g.num_residents(), g.num_hospitals());
    match &out.budget {
        Budget::Global(b) => {
            let _ = writeln!(report, "# budget {b}");
        }
        Budget::Parts(p) => {
            let _ = writeln!(report, "# budget parts {} total {}", p.parts.len(), p.total_budget());
        }
    }
    let _ = writeln!(report, "result gadget {}", out.target);
    Ok(Report { text: report, code: 0 })
}

fn gen_one(spec: &GenSpec) -> Result<Instance, Failure> {
    generate(spec).map_err(|e| Failure::Usage(e.to_string()))
}

#[allow(clippy::too_many_arguments)]
fn run_gen(
    seed: Option<u64>,
    residents: usize,
    hospitals: usize,
    capacity: &str,
    ties: usize,
    hospital_ties: usize,
    length: &str,
    manifest: Option<&Path>,
    out_dir: Option<&Path>,
) -> Result<Report, Failure> {
    let mut out = String::new();
    if let Some(path) = manifest {
        let dir = out_dir.expect("clap enforces --out-dir");
        let specs = parse_manifest(&read_input(path)?).map_err(|e| Failure::Usage(e.to_string()))?;
        fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
        for (k, spec) in specs.iter().enumerate() {
            let file = dir.join(format!("instance-{k:03}.txt"));
            let text = format!("# {spec}\n{}", serialize_instance(&gen_one(spec)?));
            fs::write(&file, text).map_err(|e| Failure::Usage(format!("{}: {e}", file.display())))?;
            let _ = writeln!(out, "wrote {}", file.display());
        }
        let _ = writeln!(out, "result gen {}", specs.len());
        return Ok(Report { text: out, code: 0 });
    }
    let line = format!(
        "gen {} residents {residents} hospitals {hospitals} capacity {capacity} ties {ties} hospital-ties {hospital_ties} length {length}",
        seed.unwrap_or(0)
    );
    let spec: GenSpec = line.parse().map_err(|e: hrcap::GenError| Failure::Usage(e.to_string()))?;
    let inst = gen_one(&spec)?;
    let _ = writeln!(out, "# {spec}");
    out.push_str(&serialize_instance(&inst));
    let _ = writeln!(out, "result gen 1");
    Ok(Report { text: out, code: 0 })
}

fn run_enumerate(input: &Path, weak: bool, limit: u64) -> Result<Report, Failure> {
    let doc = load(input)?;
    let inst = &doc.instance;
    let mut all = if weak {
        enumerate_weakly_stable(inst, limit)?
    } else {
        enumerate_stable(inst, limit)?
    };
    all.sort();
    let mut out = String::new();
    for (k, m) in all.iter().enumerate() {
        let value = avg_rank(inst, m).map_err(|e| Failure::Invalid(e.to_string()))?;
        let _ = writeln!(out, "matching {k} size {} objective {value}", m.len());
        push_matching(&mut out, m);
    }
    let _ = writeln!(out, "result enumerate {}", all.len());
    Ok(Report { text: out, code: 0 })
}

fn verb(command: &Command) -> &'static str {
    match command {
        Command::Solve { .. } => "solve",
        Command::Verify { .. } => "verify",
        Command::Gadget { .. } => "gadget",
        Command::Gen { .. } => "gen",
        Command::Enumerate { .. } => "enumerate",
    }
}

fn run(cli: &Cli) -> Result<Report, Failure> {
    match &cli.command {
        Command::Solve {
            input,
            problem,
            budget,
            target,
            mode,
        } => run_solve(cli, input, *problem, *budget, *target, *mode),
        Command::Verify { input, matching } => run_verify(input, matching),
        Command::Gadget {
            input,
            kind,
            target,
            copies,
            padding,
            exponent,
            output,
        } => run_gadget(input, *kind, *target, *copies, *padding, *exponent, output.as_deref()),
        Command::Gen {
            residents,
            hospitals,
            capacity,
            ties,
            hospital_ties,
            length,
            manifest,
            out_dir,
        } => run_gen(
            cli.seed,
            *residents,
            *hospitals,
            capacity,
            *ties,
            *hospital_ties,
            length,
            manifest.as_deref(),
            out_dir.as_deref(),
        ),
        Command::Enumerate { input, weak, limit } => run_enumerate(input, *weak, *limit),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.workers == Some(0) {
        eprintln!("error: --workers must be at least 1");
        return ExitCode::from(2);
    }
    match run(&cli) {
        Ok(report) => {
            print!("{}", report.text);
            ExitCode::from(report.code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            println!("result {} error", verb(&cli.command));
            ExitCode::from(f.code())
        }
    }
}
