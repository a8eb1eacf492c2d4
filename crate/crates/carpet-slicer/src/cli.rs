//! Command-line driver. Exit codes: 0 success, 1 parse or validation error,
//! 2 certificate violation, 3 stage stuck or budget exceeded.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num::BigRational;

use crate::carpet::{
    decimal12_f64, optimal_fiber, rational_str, star_dimension, Carpet, Line,
};
use crate::grid::{
    covering_number_bounds, fiber_covering_number, Cell, GridError,
};
use crate::projection::compute_c0;
use crate::record::{emit_record, parse_carpet_file, parse_record, RecordError};
use crate::slice::{
    build_sharp_slice, stage_target, verify_certificates, SliceError,
};

#[derive(Parser)]
#[command(
    name = "carpet-slicer",
    about = "Certified computations on Bedford-McMullen carpets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print carpet summary: bases, digits, full column, dim*, c0.
    Info { carpet: PathBuf },
    /// Exact fiber covering numbers of the optimal fiber, CSV.
    Fiber {
        carpet: PathBuf,
        #[arg(long, default_value_t = 8)]
        max_level: u32,
    },
    /// Certified two-sided covering bounds for a line slice in a cell, CSV.
    Cover {
        carpet: PathBuf,
        #[command(flatten)]
        line: LineArgs,
        /// Cell as level:col:row.
        #[arg(long)]
        cell: String,
        #[arg(long, default_value_t = 1)]
        sublevel: u32,
        #[arg(long)]
        depth: u32,
    },
    /// Build a sharp-slice construction and write its record.
    Build {
        carpet: PathBuf,
        #[arg(long, value_parser = parse_slope)]
        slope: BigRational,
        #[arg(long)]
        stages: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-verify a construction record at increased depth.
    Verify {
        record: PathBuf,
        #[arg(long, default_value_t = 6)]
        depth: u32,
    },
    /// Finite-scale Furstenberg estimate from a record's certified counts.
    Estimate { record: PathBuf },
}

#[derive(Args)]
struct LineArgs {
    #[arg(long, value_parser = parse_slope)]
    slope: BigRational,
    #[arg(long, value_parser = parse_slope)]
    intercept: BigRational,
}

fn parse_slope(s: &str) -> Result<BigRational, String> {
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a, b),
        None => (s, "1"),
    };
    let num: num::BigInt = num.parse().map_err(|_| format!("bad rational `{s}`"))?;
    let den: num::BigInt = den.parse().map_err(|_| format!("bad rational `{s}`"))?;
    if den <= num::BigInt::from(0) {
        return Err(format!("bad rational `{s}`: denominator not positive"));
    }
    Ok(BigRational::new(num, den))
}

fn parse_cell_arg(s: &str) -> Result<Cell, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 2 && parts.len() != 3 {
        return Err("cell must be level:col[:row]".into());
    }
    let level: u32 = parts[0].parse().map_err(|_| "bad cell level".to_string())?;
    let col = parts[1].parse().map_err(|_| "bad cell col".to_string())?;
    let row = if parts.len() == 3 {
        Some(parts[2].parse().map_err(|_| "bad cell row".to_string())?)
    } else {
        None
    };
    Ok(Cell { level, col, row })
}

fn cell_str(cell: &Cell) -> String {
    match &cell.row {
        Some(r) => format!("{}:{}:{}", cell.level, cell.col, r),
        None => format!("{}:{}", cell.level, cell.col),
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Invalid(String),
    Violation(String),
    Stuck(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Invalid(_) => 1,
            CliError::Violation(_) => 2,
            CliError::Stuck(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(s)
            | CliError::Invalid(s)
            | CliError::Violation(s)
            | CliError::Stuck(s) => s,
        }
    }
}

impl From<RecordError> for CliError {
    fn from(e: RecordError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<GridError> for CliError {
    fn from(e: GridError) -> Self {
        match e {
            GridError::BudgetExceeded => CliError::Stuck(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<SliceError> for CliError {
    fn from(e: SliceError) -> Self {
        match e {
            SliceError::CertificateViolation { .. } => CliError::Violation(e.to_string()),
            SliceError::StageStuck { .. } => CliError::Stuck(e.to_string()),
            SliceError::Grid(GridError::BudgetExceeded) => CliError::Stuck(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

fn load_carpet(path: &PathBuf) -> Result<Carpet, CliError> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_carpet_file(&text)?)
}

fn configure_threads() {
    if let Ok(v) = std::env::var("CARPET_SLICER_THREADS") {
        if let Ok(t) = v.parse::<usize>() {
            if t >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build_global();
            }
        }
    }
}

/// Runs the CLI on the given argv, returning the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes.
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    configure_threads();
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Info { carpet } => {
            let c = load_carpet(&carpet)?;
            let sd = star_dimension(&c);
            println!("m {}", c.m());
            println!("n {}", c.n());
            println!("digits {}", c.digits().len());
            println!("fullColumn {}", c.full_column());
            println!("x0 {}", rational_str(&c.full_column_x()));
            println!("dimStar {} {}", sd, decimal12_f64(sd.value()));
            println!("c0 {}", compute_c0(&c));
            Ok(())
        }
        Command::Fiber { carpet, max_level } => {
            let c = load_carpet(&carpet)?;
            let fiber = optimal_fiber(&c);
            let logm = (c.m() as f64).ln();
            println!("level,count,exponent");
            for p in 1..=max_level {
                let count = fiber_covering_number(&c, &fiber, p);
                let exponent = (count as f64).ln() / (p as f64 * logm);
                println!("{p},{count},{}", decimal12_f64(exponent));
            }
            Ok(())
        }
        Command::Cover {
            carpet,
            line,
            cell,
            sublevel,
            depth,
        } => {
            let c = load_carpet(&carpet)?;
            let cell = parse_cell_arg(&cell).map_err(CliError::Usage)?;
            let ln = Line::new(line.slope, line.intercept);
            let bounds = covering_number_bounds(&c, &ln, &cell, sublevel, depth)?;
            println!("lower,upper,depth");
            println!("{},{},{}", bounds.lower, bounds.upper, bounds.depth);
            Ok(())
        }
        Command::Build {
            carpet,
            slope,
            stages,
            out,
        } => {
            let c = load_carpet(&carpet)?;
            let sc = build_sharp_slice(&c, &slope, stages)?;
            std::fs::write(&out, emit_record(&sc))?;
            println!("stage,k,cell,certLower,certUpper,target");
            for st in &sc.stages {
                let target = stage_target(&c, &sc.c_prime, st.stage) + 1;
                println!(
                    "{},{},{},{},{},{}",
                    st.stage,
                    st.base_level,
                    cell_str(&st.cell),
                    st.cert_lower,
                    st.cert_upper,
                    target
                );
            }
            Ok(())
        }
        Command::Verify { record, depth } => {
            let text = std::fs::read_to_string(&record)?;
            let sc = parse_record(&text)?;
            let report = verify_certificates(&sc, depth)?;
            for check in &report.checks {
                println!(
                    "{} {} ({})",
                    if check.ok { "pass" } else { "fail" },
                    check.name,
                    check.detail
                );
            }
            println!("c1Empirical {}", decimal12_f64(report.c1_empirical));
            Ok(())
        }
        Command::Estimate { record } => {
            let text = std::fs::read_to_string(&record)?;
            let sc = parse_record(&text)?;
            let sd = star_dimension(&sc.carpet);
            let target = sd.value() - 1.0;
            let logm = (sc.carpet.m() as f64).ln();
            println!("i,k,cell,value,target");
            for st in &sc.stages {
                let value = (st.cert_lower.max(1) as f64).ln() / (st.stage as f64 * logm);
                println!(
                    "{},{},{},{},{}",
                    st.stage,
                    st.base_level,
                    cell_str(&st.cell),
                    decimal12_f64(value),
                    decimal12_f64(target)
                );
            }
            Ok(())
        }
    }
}
