use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use freiman_core::boolean_poly::{vu_bound, ReducedBooleanPolynomial, VuSchedule};
use freiman_core::experiments::{
    dist_bound_report, dist_rows_csv, lambda_threshold_experiment, lower_bound_experiment, sweep_linearity,
    CsvRow, ExperimentConfig, Report,
};
use freiman_core::hom_space::solve_hom_space;
use freiman_core::lambda::{lambda_table, Degeneracy, LambdaMode};
use freiman_core::{CyclicGroup, Error, SubsetOfZn};

#[derive(Parser)]
#[command(name = "freiman", version, about = "Freiman homomorphism experiments over Z_N")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Freiman rank and homomorphism basis of one set.
    Rank {
        /// A file, or a literal such as `0,1,3` or `{0,1,3}`.
        set: String,
        /// Modulus; may be omitted when the file is JSON with an "N" field.
        #[arg(short = 'n', long)]
        modulus: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Linearity sweep over the (N, p) grid.
    Sweep(ExperimentArgs),
    /// Isolated elements and the quadruple count X.
    Lowerbound(ExperimentArgs),
    /// Λ^i positivity experiment, or a single table with --set.
    Lambda {
        #[command(flatten)]
        common: ExperimentArgs,
        /// Compute the table of this set instead of running the experiment.
        #[arg(long)]
        set: Option<String>,
        #[arg(short = 'n', long)]
        modulus: Option<u32>,
        /// Exact counts instead of positivity bits.
        #[arg(long)]
        exact: bool,
        /// Write the table in the FLT1 binary format.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Check a Vu schedule against the exact E_j profile.
    Vu(VuArgs),
    /// dist4 constants, dist2 ratios and degenerate fractions of Λ̃^1.
    Distreport(ExperimentArgs),
}

#[derive(Args, Clone)]
struct ExperimentArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    levels: Option<usize>,
    /// Omit the timestamp line.
    #[arg(long)]
    deterministic: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-trial records as JSON lines.
    #[arg(long)]
    jsonl: Option<PathBuf>,
}

#[derive(Args)]
struct VuArgs {
    /// Triangle-count polynomial on K_n.
    #[arg(long, conflicts_with = "lambda1")]
    triangle: Option<usize>,
    /// Λ̃^1 expansion over Z_N with parameters --params.
    #[arg(long)]
    lambda1: Option<u32>,
    #[arg(long, value_delimiter = ',', default_values_t = [0u32, 1, 3])]
    params: Vec<u32>,
    #[arg(long)]
    p: f64,
    /// F_0,F_1,... comma separated.
    #[arg(long = "schedule", value_delimiter = ',', required = true)]
    f: Vec<f64>,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    ck: f64,
    #[arg(long, default_value_t = 1.0)]
    dk: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::TooLarge { .. } | Error::LevelCapExceeded { .. } => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Rank { set, modulus, out } => {
            let a = read_set(&set, modulus)?;
            let record = solve_hom_space(&a)?.record(&a);
            let json = serde_json::to_string(&record).map_err(|e| Error::Parse(e.to_string()))?;
            emit(out.as_deref(), &format!("{json}\n"))
        }
        Command::Sweep(args) => {
            let cfg = load_config(&args)?;
            finish(&args, sweep_linearity(&cfg)?)
        }
        Command::Lowerbound(args) => {
            let cfg = load_config(&args)?;
            finish(&args, lower_bound_experiment(&cfg)?)
        }
        Command::Lambda {
            common,
            set: Some(set),
            modulus,
            exact,
            dump,
        } => {
            let a = read_set(&set, modulus)?;
            let mode = if exact {
                LambdaMode::ExactCount
            } else {
                LambdaMode::Positivity
            };
            let table = lambda_table(&a, common.levels.unwrap_or(1), mode)?;
            if let Some(path) = dump {
                let file = fs::File::create(&path)?;
                table.write_dump(std::io::BufWriter::new(file))?;
            }
            emit(common.out.as_deref(), &table.to_csv())
        }
        Command::Lambda { common, .. } => {
            let cfg = load_config(&common)?;
            finish(&common, lambda_threshold_experiment(&cfg)?)
        }
        Command::Distreport(args) => {
            let cfg = load_config(&args)?;
            let csv = dist_rows_csv(&dist_bound_report(&cfg)?)?;
            emit(args.out.as_deref(), &stamp(&args, csv))
        }
        Command::Vu(args) => run_vu(args),
    }
}

fn run_vu(args: VuArgs) -> Result<(), Error> {
    let poly = match (args.triangle, args.lambda1) {
        (Some(n), _) => ReducedBooleanPolynomial::from_triangle_count(n)?,
        (None, Some(n)) => {
            let [a, b, c] = args.params[..] else {
                return Err(Error::InvalidConfig("--params needs three values".into()));
            };
            ReducedBooleanPolynomial::from_lambda1((a, b, c), n, Some(Degeneracy::FormCollision))?
        }
        (None, None) => return Err(Error::InvalidConfig("one of --triangle or --lambda1 is required".into())),
    };
    let schedule = VuSchedule {
        f: args.f,
        lambda: args.lambda,
        c_k: args.ck,
        d_k: args.dk,
    };
    let profile = poly.ej_profile(args.p)?;
    let (deviation, probability) = vu_bound(&poly, &schedule, args.p)?;
    let mut csv = String::from("quantity,j,value\n");
    for (j, e) in profile.iter().enumerate() {
        csv.push_str(&format!("E_j,{j},{e:.6}\n"));
    }
    for (j, f) in schedule.f.iter().enumerate() {
        csv.push_str(&format!("F_j,{j},{f:.6}\n"));
    }
    csv.push_str(&format!("deviation,,{deviation:.6}\nprobability_bound,,{probability:.6}\n"));
    emit(args.out.as_deref(), &csv)
}

fn load_config(args: &ExperimentArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(e.to_string()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(l) = args.levels {
        cfg.level = l;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn stamp(args: &ExperimentArgs, csv: String) -> String {
    if args.deterministic {
        return csv;
    }
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("# generated_at_unix={secs}\n{csv}")
}

fn finish<R: CsvRow>(args: &ExperimentArgs, report: Report<R>) -> Result<(), Error> {
    if let Some(path) = &args.jsonl {
        fs::write(path, report.records_jsonl()?)?;
    }
    emit(args.out.as_deref(), &stamp(args, report.to_csv()?))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => Ok(fs::write(path, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Parses a literal set or reads one from a file (JSON with "N" and
/// "members", or whitespace/comma separated residues).
fn read_set(spec: &str, modulus: Option<u32>) -> Result<SubsetOfZn, Error> {
    let path = Path::new(spec);
    let (text, from_file) = if path.is_file() {
        (fs::read_to_string(path)?, true)
    } else {
        (spec.to_string(), false)
    };
    let trimmed = text.trim();
    if from_file && trimmed.starts_with('{') && trimmed.contains("members") {
        #[derive(serde::Deserialize)]
        struct SetFile {
            #[serde(rename = "N")]
            n: Option<u32>,
            members: Vec<u32>,
        }
        let f: SetFile = serde_json::from_str(trimmed).map_err(|e| Error::Parse(e.to_string()))?;
        let n = modulus.or(f.n).ok_or_else(|| Error::InvalidConfig("modulus missing".into()))?;
        return SubsetOfZn::new(CyclicGroup::new(n)?, f.members);
    }
    let n = modulus.ok_or_else(|| Error::InvalidConfig("--modulus is required".into()))?;
    let members = trimmed
        .trim_start_matches('{')
        .trim_end_matches('}')
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<u32>().map_err(|e| Error::Parse(format!("{s}: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    SubsetOfZn::new(CyclicGroup::new(n)?, members)
}
