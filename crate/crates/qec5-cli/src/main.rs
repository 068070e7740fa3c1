use clap::{Args, Parser, Subcommand, ValueEnum};
use qec5::code5::{build_check_matrix, memory_circuit};
use qec5::decoders::{audit_single_faults, DecoderKind, FlagTable, ShotDecoder};
use qec5::detector_graph::{build_graph, DetectorModel};
use qec5::experiments::{
    fit_power_law, fit_report, read_csv, run_experiment, write_csv, ExperimentResult, FitPoint, FitResult, RunConfig,
    Shots,
};
use qec5::noise::{NoiseKind, NoiseModel};
use qec5::{Dim, Error};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Simulate, decode and fit the five-qudit perfect code.
#[derive(Parser)]
#[command(name = "qec5", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one memory experiment and print a CSV row.
    Run(RunArgs),
    /// Run one experiment per physical error rate.
    Sweep(RunArgs),
    /// Fit `P_L = a p^b` and report the threshold with level curves.
    Threshold(ThresholdArgs),
    /// Export the detector graph as DOT.
    Graph(GraphArgs),
    /// Check that every single fault of a flag cycle is corrected.
    AuditFlagTable(AuditArgs),
    /// Fast internal consistency checks.
    Selftest,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Model {
    #[value(alias = "circuit")]
    CircuitLevel,
    #[value(alias = "standard-depolarizing")]
    Sdep,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum Decoder {
    Mwpm,
    Bp,
    Bm,
}

impl From<Decoder> for DecoderKind {
    fn from(d: Decoder) -> DecoderKind {
        match d {
            Decoder::Mwpm => DecoderKind::Mwpm,
            Decoder::Bp => DecoderKind::Bp,
            Decoder::Bm => DecoderKind::Bm,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Qudit dimension (prime).
    #[arg(long)]
    dim: u32,
    /// Physical error rate; a comma-separated list for `sweep`.
    #[arg(long, value_delimiter = ',', required = true)]
    p: Vec<f64>,
    #[arg(long, value_enum)]
    decoder: Decoder,
    #[arg(long, value_enum, default_value = "circuit-level")]
    model: Model,
    #[arg(long, value_enum, default_value = "on")]
    flag: Toggle,
    #[arg(long, default_value_t = 3)]
    cycles: usize,
    #[arg(long, default_value_t = 10_000, conflicts_with = "shots_a")]
    shots: u64,
    /// Use `ceil(A / p)` shots per point instead of a fixed count.
    #[arg(long)]
    shots_a: Option<f64>,
    /// Falls back to QEC5_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, default_value_t = 0.99)]
    confidence: f64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ThresholdArgs {
    /// Results CSV from `run` or `sweep`.
    #[arg(long, conflicts_with_all = ["a", "b"])]
    results: Option<PathBuf>,
    /// Fit prefactor, used with `--b` instead of a results file.
    #[arg(long, requires = "b")]
    a: Option<f64>,
    #[arg(long, requires = "a")]
    b: Option<f64>,
    /// Keep only rows with this dimension.
    #[arg(long)]
    dim: Option<u32>,
    #[arg(long, value_enum)]
    model: Option<Model>,
    #[arg(long, value_enum)]
    flag: Option<Toggle>,
    /// Confidence level the results were produced at.
    #[arg(long, default_value_t = 0.99)]
    confidence: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the level curves as CSV (level,n,distance,p,p_l).
    #[arg(long)]
    emit_curves: Option<PathBuf>,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long)]
    dim: u32,
    #[arg(long, default_value_t = 1)]
    cycles: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    dim: u32,
    /// Circuit-level rate used for the mechanism priors.
    #[arg(long, default_value_t = 1e-3)]
    p: f64,
    #[arg(long, value_enum, default_value = "bm")]
    decoder: Decoder,
    /// Load the flag table from JSON instead of building it.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Save the flag table as JSON.
    #[arg(long)]
    save_table: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::NotPrime(_)
            | Error::Probability(_)
            | Error::Config(_)
            | Error::TooFewPoints(_)
            | Error::Degenerate
            | Error::NoThreshold(_)
            | Error::Parse { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn seed(flag: Option<u64>) -> CliResult<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("QEC5_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| usage(format!("QEC5_SEED must be an unsigned integer (got {v:?})"))),
        Err(_) => Ok(0),
    }
}

/// Writes to a sibling temp file and renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| Failure::Runtime(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult {
    match out {
        Some(p) => write_atomic(p, bytes),
        None => std::io::stdout().write_all(bytes).map_err(|e| Failure::Runtime(e.to_string())),
    }
}

fn noise(model: Model, p: f64) -> NoiseKind {
    match model {
        Model::CircuitLevel => NoiseKind::CircuitLevel(p),
        Model::Sdep => NoiseKind::StandardDepolarizing(p),
    }
}

fn configs(args: &RunArgs) -> CliResult<Vec<RunConfig>> {
    let seed = seed(args.seed)?;
    let mut out = Vec::new();
    for &p in &args.p {
        let mut cfg = RunConfig::new(args.dim, noise(args.model, p), args.decoder.into());
        cfg.cycles = args.cycles;
        cfg.flagged = args.flag == Toggle::On;
        cfg.shots = match args.shots_a {
            Some(a) => Shots::Scaled(a),
            None => Shots::Fixed(args.shots),
        };
        cfg.seed = seed;
        cfg.threads = args.threads;
        cfg.confidence = args.confidence;
        // validate everything before running anything
        cfg.validate()?;
        out.push(cfg);
    }
    Ok(out)
}

fn cmd_run(args: &RunArgs, single: bool) -> CliResult {
    if single && args.p.len() != 1 {
        return Err(usage("run takes a single --p; use sweep for a list"));
    }
    let cfgs = configs(args)?;
    let mut rows = Vec::new();
    for cfg in &cfgs {
        let r = run_experiment(cfg)?;
        eprintln!("p={} shots={} failures={} p_l={:.4e}", r.p, r.shots, r.failures, r.p_l);
        rows.push(r);
    }
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf)?;
    emit(args.out.as_deref(), &buf)
}

fn select_rows(args: &ThresholdArgs, rows: Vec<ExperimentResult>) -> CliResult<Vec<ExperimentResult>> {
    let model = args.model.map(|m| if m == Model::Sdep { "sdep" } else { "circuit" });
    let rows: Vec<ExperimentResult> = rows
        .into_iter()
        .filter(|r| args.dim.is_none_or(|q| r.q == q))
        .filter(|r| model.is_none_or(|m| r.model == m))
        .filter(|r| args.flag.is_none_or(|f| r.flag == (f == Toggle::On)))
        .collect();
    let mut keys: Vec<(u32, &str, &str, bool)> =
        rows.iter().map(|r| (r.q, r.model.as_str(), r.decoder.as_str(), r.flag)).collect();
    keys.sort();
    keys.dedup();
    if keys.len() > 1 {
        return Err(usage(format!(
            "results mix {} configurations; narrow them with --dim, --model or --flag",
            keys.len()
        )));
    }
    Ok(rows)
}

fn cmd_threshold(args: &ThresholdArgs) -> CliResult {
    let seed = seed(args.seed)?;
    let fit = match (&args.results, args.a, args.b) {
        (Some(path), _, _) => {
            let file = std::fs::File::open(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            let rows = select_rows(args, read_csv(file)?)?;
            let points: Vec<FitPoint> = rows.iter().filter_map(|r| FitPoint::from_result(r, args.confidence)).collect();
            if points.len() < rows.len() {
                eprintln!("skipped {} points without failures", rows.len() - points.len());
            }
            fit_power_law(&points)?
        }
        (None, Some(a), Some(b)) => {
            if !(a > 0.0) {
                return Err(usage("--a must be positive"));
            }
            FitResult { a, b, cov: [[0.0; 2]; 2] }
        }
        _ => return Err(usage("give --results FILE or both --a and --b")),
    };
    let report = fit_report(&fit, seed)?;
    eprintln!("a={:.4} b={:.4} threshold={:.4e} +/- {:.2e}", report.a, report.b, report.threshold, report.threshold_sigma);
    if let Some(path) = &args.emit_curves {
        let mut w = csv::Writer::from_writer(Vec::new());
        let rt = |e: csv::Error| Failure::Runtime(e.to_string());
        w.write_record(["level", "n", "distance", "p", "p_l"]).map_err(rt)?;
        for c in &report.level_curves {
            for (p, pl) in &c.points {
                w.write_record([c.level.to_string(), c.n.to_string(), c.distance.to_string(), p.to_string(), pl.to_string()])
                    .map_err(rt)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Failure::Runtime(e.to_string()))?;
        write_atomic(path, &bytes)?;
    }
    let mut json = serde_json::to_vec_pretty(&report).map_err(|e| Failure::Runtime(e.to_string()))?;
    json.push(b'\n');
    emit(args.out.as_deref(), &json)
}

fn cmd_graph(args: &GraphArgs) -> CliResult {
    let q = Dim::new(args.dim)?;
    if args.cycles < 1 {
        return Err(usage("at least one cycle is required"));
    }
    let g = build_graph(&build_check_matrix(q), args.cycles);
    eprintln!("nodes: {}, edges: {}, components: {}", g.nodes.len(), g.edges.len(), g.components().len());
    emit(args.out.as_deref(), g.to_dot().as_bytes())
}

fn cmd_audit(args: &AuditArgs) -> CliResult {
    let q = Dim::new(args.dim)?;
    let code = build_check_matrix(q);
    let circuit = memory_circuit(q, 2, true)?;
    let model = DetectorModel::build(&circuit, &NoiseModel::new(NoiseKind::CircuitLevel(args.p), q)?, &code)?;
    let table = match &args.table {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            let t = FlagTable::from_json(&text)?;
            if t.q != args.dim {
                return Err(usage(format!("table is for q={}, not {}", t.q, args.dim)));
            }
            t
        }
        None => FlagTable::build(&model, &code),
    };
    if let Some(path) = &args.save_table {
        write_atomic(path, table.to_json().as_bytes())?;
    }
    let ambiguous = table.ambiguous().count();
    let dec = ShotDecoder::new(args.decoder.into(), &model, Some(table));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (n, fails) = audit_single_faults(&model, &code, &dec, &mut rng)?;
    println!("faults: {n}, failures: {}, ambiguous flag keys: {ambiguous}", fails.len());
    for f in fails.iter().take(10) {
        println!("  moment {} targets {:?} {}", f.moment, f.targets, f.pauli);
    }
    if fails.is_empty() {
        Ok(())
    } else {
        Err(Failure::Runtime(format!("{} of {n} single faults are not corrected", fails.len())))
    }
}

fn cmd_selftest() -> CliResult {
    let mut bad = 0;
    let mut check = |name: &str, ok: bool| {
        println!("{} {name}", if ok { "PASS" } else { "FAIL" });
        bad += usize::from(!ok);
    };
    for qv in [2, 3, 5, 7] {
        let q = Dim::new(qv)?;
        let sym = qec5::GateKind::ALL_BASIC
            .iter()
            .all(|&k| qec5::verify_symplectic(&qec5::GateAction::new(k, q)));
        check(&format!("q={qv} gate actions are symplectic"), sym);
        let g = build_graph(&build_check_matrix(q), 1);
        check(&format!("q={qv} graph has {} nodes", 4 * (qv - 1)), g.nodes.len() as u32 == 4 * (qv - 1));
    }
    for qv in [2, 3] {
        let q = Dim::new(qv)?;
        let code = build_check_matrix(q);
        let model =
            DetectorModel::build(&memory_circuit(q, 1, false)?, &NoiseModel::new(NoiseKind::StandardDepolarizing(0.01), q)?, &code)?;
        let dec = ShotDecoder::new(DecoderKind::Bm, &model, None);
        let (n, fails) = audit_single_faults(&model, &code, &dec, &mut ChaCha8Rng::seed_from_u64(0))?;
        check(&format!("q={qv} BM corrects all {n} single data errors"), fails.is_empty());
    }
    let mut cfg = RunConfig::new(2, NoiseKind::CircuitLevel(0.0), DecoderKind::Bm);
    cfg.shots = Shots::Fixed(200);
    check("noiseless run has no failures", run_experiment(&cfg)?.failures == 0);
    if bad == 0 {
        Ok(())
    } else {
        Err(Failure::Runtime(format!("{bad} self-test checks failed")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Run(a) => cmd_run(a, true),
        Command::Sweep(a) => cmd_run(a, false),
        Command::Threshold(a) => cmd_threshold(a),
        Command::Graph(a) => cmd_graph(a),
        Command::AuditFlagTable(a) => cmd_audit(a),
        Command::Selftest => cmd_selftest(),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
