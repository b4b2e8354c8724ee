use std::fmt::Display;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use firstkind::bench;
use firstkind::decoder::{decode_batch, DecodeError, DecodeResult};
use firstkind::format::{FormatError, LatticeFile};
use firstkind::generator::{self, GeneratorError};
use firstkind::verify::{self, VerifyConfig};
use firstkind::{Execution, Lattice, LatticeError, Tolerance};
use serde::Serialize;

const EXIT_VERIFY: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_DIMENSION: u8 = 3;

#[derive(Parser)]
#[command(name = "firstkind", version, about = "Closest points in lattices of Voronoi's first kind")]
struct Cli {
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decode targets against a lattice file; one JSON record per line.
    Decode(DecodeArgs),
    /// Write a random or named lattice file.
    Generate(GenerateArgs),
    /// Cross-check the decoder against exhaustive oracles.
    Verify(VerifyArgs),
    /// Time decodes over a range of dimensions and fit the log-log slope.
    Bench(BenchArgs),
}

#[derive(Args)]
struct DecodeArgs {
    lattice: PathBuf,
    /// File with one target per line (whitespace or comma separated); `-` for stdin.
    targets: Option<PathBuf>,
    /// Inline target, e.g. `--target "4 3.5"`. Repeatable.
    #[arg(long = "target", value_name = "COORDS")]
    inline: Vec<String>,
    /// Targets are extended coordinates (n+1 values) instead of Cartesian points.
    #[arg(long)]
    gram: bool,
    /// Include the squared distance after every iteration.
    #[arg(long)]
    trace: bool,
    #[arg(long, value_name = "EPS")]
    tolerance: Option<f64>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(short, long)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Zn, An or fig2 instead of a random lattice.
    #[arg(long)]
    named: Option<String>,
    /// Write only the Selling matrix, not a superbasis.
    #[arg(long)]
    selling: bool,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(required_unless_present = "random", conflicts_with = "random")]
    lattice: Option<PathBuf>,
    /// Verify random lattices of this dimension instead of a file.
    #[arg(long, value_name = "N")]
    random: Option<usize>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// Random targets per lattice.
    #[arg(long, default_value_t = 100)]
    targets: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "EPS")]
    tolerance: Option<f64>,
}

#[derive(Args)]
struct BenchArgs {
    /// Dimensions to time, comma separated.
    #[arg(long = "n", value_delimiter = ',', default_values_t = [16, 32, 64, 128, 256])]
    ns: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    density: f64,
    /// Write the CSV table here instead of stdout.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl Display) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.to_string(),
        }
    }
}

impl From<LatticeError> for Failure {
    fn from(e: LatticeError) -> Self {
        let code = match e {
            LatticeError::DimensionMismatch { .. } => EXIT_DIMENSION,
            _ => EXIT_INVALID,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Lattice(e) => e.into(),
            e => Self::invalid(e),
        }
    }
}

impl From<GeneratorError> for Failure {
    fn from(e: GeneratorError) -> Self {
        match e {
            GeneratorError::Lattice(e) => e.into(),
            e => Self::invalid(e),
        }
    }
}

impl From<DecodeError> for Failure {
    fn from(e: DecodeError) -> Self {
        match e {
            DecodeError::Lattice(e) => e.into(),
            e => Self::invalid(e),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::invalid(format!("io error: {e}"))
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let result = match cli.command {
        Command::Decode(args) => decode(args, exec),
        Command::Generate(args) => generate(args),
        Command::Verify(args) => run_verify(args, exec),
        Command::Bench(args) => run_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn tolerance(eps: Option<f64>) -> Result<Tolerance, Failure> {
    match eps {
        None => Ok(Tolerance::default()),
        Some(e) if e.is_finite() && e > 0.0 => Ok(Tolerance::uniform(e)),
        Some(e) => Err(Failure::invalid(format!("InvalidTolerance: {e} (need a positive finite value)"))),
    }
}

fn parse_row(line: &str) -> Result<Vec<f64>, String> {
    line.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|tok| !tok.is_empty())
        .map(|tok| tok.parse::<f64>().map_err(|_| format!("cannot parse {tok:?} as a number")))
        .collect()
}

fn parse_targets(text: &str) -> Result<Vec<Vec<f64>>, Failure> {
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        rows.push(parse_row(line).map_err(|e| Failure::invalid(format!("InvalidTarget: line {}: {e}", k + 1)))?);
    }
    Ok(rows)
}

fn read_targets(args: &DecodeArgs) -> Result<Vec<Vec<f64>>, Failure> {
    let mut rows = Vec::new();
    for (k, s) in args.inline.iter().enumerate() {
        rows.push(parse_row(s).map_err(|e| Failure::invalid(format!("InvalidTarget: --target #{}: {e}", k + 1)))?);
    }
    let text = match &args.targets {
        Some(p) if p == Path::new("-") => Some(read_stdin()?),
        Some(p) => Some(std::fs::read_to_string(p)?),
        None if args.inline.is_empty() => Some(read_stdin()?),
        None => None,
    };
    if let Some(text) = text {
        rows.extend(parse_targets(&text)?);
    }
    Ok(rows)
}

fn read_stdin() -> io::Result<String> {
    let mut s = String::new();
    io::stdin().read_to_string(&mut s)?;
    Ok(s)
}

#[derive(Serialize)]
struct Record<'a> {
    index: usize,
    coefficients: &'a [i64],
    point: Option<&'a [f64]>,
    squared_distance: f64,
    iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<Vec<f64>>,
}

fn record(index: usize, r: &DecodeResult, trace: bool) -> Record<'_> {
    Record {
        index,
        coefficients: r.coefficients.as_slice(),
        point: r.point.as_deref(),
        squared_distance: r.squared_distance,
        iterations: r.iterations,
        residual: r.residual,
        trace: trace.then(|| r.trace.iter().map(|t| t.squared_distance).collect()),
    }
}

fn load_lattice(path: &Path, tol: &Tolerance) -> Result<Lattice, Failure> {
    Ok(LatticeFile::read(path)?.to_lattice(tol.validation)?)
}

fn decode(args: DecodeArgs, exec: Execution) -> Outcome {
    let tol = tolerance(args.tolerance)?;
    let lattice = load_lattice(&args.lattice, &tol)?;
    let targets = read_targets(&args)?;

    let expected = if args.gram {
        lattice.lattice_dim() + 1
    } else {
        match lattice.superbasis() {
            Some(sb) => sb.ambient_dim(),
            None => return Err(DecodeError::CartesianWithoutBasis.into()),
        }
    };
    if let Some((k, row)) = targets.iter().enumerate().find(|(_, t)| t.len() != expected) {
        return Err(Failure {
            code: EXIT_DIMENSION,
            message: format!(
                "DimensionMismatch: target {k} has {} coordinates, expected {expected}",
                row.len()
            ),
        });
    }

    let results = decode_batch(&lattice, &targets, args.gram, &tol, exec);
    let mut out = BufWriter::new(io::stdout().lock());
    for (k, r) in results.into_iter().enumerate() {
        let r = r.map_err(|e| {
            let mut f = Failure::from(e);
            f.message = format!("target {k}: {}", f.message);
            f
        })?;
        let line = serde_json::to_string(&record(k, &r, args.trace)).expect("record serializes");
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

fn generate(args: GenerateArgs) -> Outcome {
    let file = match &args.named {
        Some(name) => {
            let sb = generator::named(name, args.n)?;
            if args.selling {
                LatticeFile::from_selling(sb.selling(), Some(format!("{name}-{}", args.n)))
            } else {
                LatticeFile::from_superbasis(&sb, Some(format!("{name}-{}", args.n)))
            }
        }
        None => {
            let name = Some(format!("random-n{}-d{}-s{}", args.n, args.density, args.seed));
            if args.selling {
                let q = generator::random_selling(args.n, args.density, args.seed)?;
                LatticeFile::from_selling(&q, name)
            } else {
                let sb = generator::random_first_kind(args.n, args.density, args.seed)?;
                LatticeFile::from_superbasis(&sb, name)
            }
        }
    };
    // what we write must load back
    LatticeFile::parse(&file.to_json())?.to_lattice(Tolerance::default().validation)?;
    match &args.out {
        Some(path) => file.write(path)?,
        None => io::stdout().lock().write_all(file.to_json().as_bytes())?,
    }
    Ok(())
}

fn run_verify(args: VerifyArgs, exec: Execution) -> Outcome {
    let tol = tolerance(args.tolerance)?;
    if args.targets == 0 {
        return Err(Failure::invalid("InvalidParameter: --targets must be at least 1"));
    }
    let cfg = VerifyConfig {
        targets: args.targets,
        seed: args.seed,
        tolerance: tol,
        exec,
        ..VerifyConfig::default()
    };
    let (label, report) = match (&args.lattice, args.random) {
        (Some(path), _) => {
            let lattice = load_lattice(path, &tol)?;
            (path.display().to_string(), verify::verify_lattice(lattice.selling(), &cfg))
        }
        (None, Some(n)) => {
            if args.trials == 0 {
                return Err(Failure::invalid("InvalidParameter: --trials must be at least 1"));
            }
            let report = verify::verify_random(n, args.trials, &cfg)?;
            (format!("random n={n} trials={} seed={}", args.trials, args.seed), report)
        }
        (None, None) => unreachable!("clap requires a lattice or --random"),
    };
    println!("verify {label}");
    print!("{report}");
    let failed = report.total_failed();
    println!("{}", if failed == 0 { "result: PASS".to_string() } else { format!("result: FAIL ({failed} failures)") });
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_VERIFY,
            message: format!("verification failed with {failed} failures"),
        })
    }
}

fn run_bench(args: BenchArgs) -> Outcome {
    if args.trials == 0 {
        return Err(Failure::invalid("InvalidParameter: --trials must be at least 1"));
    }
    if args.ns.is_empty() {
        return Err(Failure::invalid("InvalidParameter: --n needs at least one dimension"));
    }
    let rows = bench::measure_scaling(&args.ns, args.trials, args.seed, args.density)?;
    let csv = bench::to_csv(&rows);
    let slope = match bench::loglog_slope(&rows) {
        Some(s) => format!("{s:.6}"),
        None => "n/a".into(),
    };
    let bound = if rows.iter().all(|r| r.max_iterations <= r.n) { "held" } else { "VIOLATED" };
    let summary = format!("loglog slope: {slope}\niteration bound: {bound}");
    match &args.out {
        Some(path) => {
            std::fs::write(path, csv)?;
            println!("{summary}");
        }
        None => {
            print!("{csv}");
            eprintln!("{summary}");
        }
    }
    Ok(())
}
