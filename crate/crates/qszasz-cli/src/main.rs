//! Command-line front end: runs the library operations and experiments,
//! emitting CSV (default) or JSON reports.
//!
//! Exit status: 0 success, 1 usage error, 2 numerical failure
//! (truncation exhaustion and friends), 3 assertion-mode violation.
//! Diagnostics go to stderr, controlled by QSZASZ_LOG in
//! {quiet, info, debug} (default info).

mod output;
mod spec;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use output::{Cell, Table};
use qszasz::analysis::{
    bound_check, convergence_experiment, first_modulus, second_modulus, steklov,
    voronovskaja_scan, weight_p, BoundMode, ExperimentReport, GridSpec, WeightedFunction,
};
use qszasz::moments::{
    central_moment, classical_stirling_table, qstirling_table, raw_moment,
    reference_central_moment, MomentMethod,
};
use qszasz::operator::{apply_operator, positivity_scan, weight_table};
use qszasz::{QContext, SeriesPolicy};

#[derive(Parser)]
#[command(name = "qszasz", version, about = "q-Szasz operator toolkit", max_term_width = 100)]
struct Cli {
    /// Relative tolerance for every series/product evaluation
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Term budget for every series/product evaluation
    #[arg(long, global = true)]
    max_terms: Option<usize>,

    /// Emit JSON (array of row objects keyed by the CSV headers)
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,

    /// Emit CSV (the default)
    #[arg(long, global = true)]
    csv: bool,

    /// Write the report to a file instead of standard output
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Local,
    Global,
    Sqrtmod,
}

#[derive(Subcommand)]
enum Command {
    /// Weight table s_n0..s_nK with nodes and truncation metadata
    Weights {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        x: f64,
        /// Exit 3 if the partition defect exceeds 10 * tol
        #[arg(long)]
        assert: bool,
    },
    /// Apply the operator to a function at one point
    Eval {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        f: String,
    },
    /// Raw moments m = 0..mmax by all three evaluation paths
    Moments {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        x: f64,
        #[arg(long, default_value_t = 4)]
        mmax: u32,
    },
    /// Central moments r = 0..rmax next to the printed closed forms
    CentralMoments {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        x: f64,
        #[arg(long, default_value_t = 4)]
        rmax: u32,
    },
    /// q-Stirling triangle (or the classical Stirling triangle)
    Stirling {
        #[arg(long)]
        q: Option<f64>,
        /// Classical Stirling numbers of the second kind instead of q
        #[arg(long)]
        classical: bool,
        #[arg(long, default_value_t = 8)]
        mmax: u32,
    },
    /// Weighted sup-error sweep over n with a fitted rate slope
    Converge {
        #[arg(long)]
        q: Option<f64>,
        /// Run the classical Szasz baseline (fits ln error vs ln n)
        #[arg(long)]
        classical: bool,
        #[arg(long)]
        f: String,
        /// Weight order override (default: inferred from the function)
        #[arg(long)]
        p: Option<u32>,
        #[arg(long)]
        nmin: u32,
        #[arg(long)]
        nmax: u32,
        #[arg(long, default_value_t = 10.0)]
        xmax: f64,
        #[arg(long, default_value_t = 2001)]
        grid_count: usize,
    },
    /// [n]-scaled deviation at fixed x next to both asymptotic predictors
    Voronovskaja {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        f: String,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        nmin: u32,
        #[arg(long)]
        nmax: u32,
    },
    /// First or second modulus of smoothness on the grid
    Modulus {
        #[arg(long)]
        f: String,
        #[arg(long)]
        p: Option<u32>,
        #[arg(long)]
        delta: f64,
        /// 1 = uniform first modulus, 2 = weighted second modulus
        #[arg(long, default_value_t = 2)]
        order: u32,
        #[arg(long, default_value_t = 10.0)]
        xmax: f64,
        #[arg(long, default_value_t = 2001)]
        grid_count: usize,
    },
    /// Steklov means: distance, modulus, and smoothed-second-derivative norms
    Steklov {
        #[arg(long)]
        f: String,
        #[arg(long)]
        p: Option<u32>,
        /// Smoothing radius; repeat for several rows
        #[arg(long, required = true)]
        h: Vec<f64>,
        #[arg(long, default_value_t = 10.0)]
        xmax: f64,
        #[arg(long, default_value_t = 501)]
        grid_count: usize,
        #[arg(long, default_value_t = 64)]
        quad_points: usize,
    },
    /// Probe one of the error bounds over a range of n
    BoundCheck {
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        f: String,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        p: Option<u32>,
        #[arg(long)]
        nmin: u32,
        #[arg(long)]
        nmax: u32,
        /// Exit 3 if the sqrtmod inequality is violated
        #[arg(long)]
        assert: bool,
        #[arg(long, default_value_t = 10.0)]
        xmax: f64,
        #[arg(long, default_value_t = 2001)]
        grid_count: usize,
    },
    /// List negative weights on a set of x values, plus nearby e_q zeros
    DiagnosePositivity {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        n: u32,
        #[arg(long, required = true)]
        x: Vec<f64>,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Lib(qszasz::Error),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "io: {e}"),
        }
    }
}

impl From<qszasz::Error> for CliError {
    fn from(e: qszasz::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

fn main() {
    init_logger();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn init_logger() {
    let level = match std::env::var("QSZASZ_LOG").ok().as_deref() {
        Some("quiet") => log::LevelFilter::Off,
        Some("debug") => log::LevelFilter::Debug,
        Some("info") | None => log::LevelFilter::Info,
        Some(other) => {
            eprintln!("warning: unknown QSZASZ_LOG value '{other}', using info");
            log::LevelFilter::Info
        }
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .format_target(false)
        .init();
}

fn parse_wf(text: &str, p_override: Option<u32>) -> Result<WeightedFunction, CliError> {
    let fs = spec::parse_function_spec(text).map_err(|e| CliError::Usage(e.to_string()))?;
    let wf = fs.to_weighted()?;
    Ok(match p_override {
        Some(p) => wf.with_p(p),
        None => wf,
    })
}

fn report_to_table(rep: &ExperimentReport, headers: Vec<&'static str>) -> Table {
    let mut t = Table::new(headers);
    for row in rep.rows() {
        let mut cells = vec![Cell::Int(row[0] as i64)];
        cells.extend(row[1..].iter().map(|&v| Cell::Float(v)));
        t.push(cells);
    }
    t
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let policy = SeriesPolicy::new(
        cli.tol.unwrap_or(1e-14),
        cli.max_terms.unwrap_or(5000),
        3,
    )?;
    let out = cli.output.as_deref();
    let json = cli.json;

    match cli.command {
        Command::Weights { q, n, x, assert } => {
            let ctx = QContext::new(q, n)?;
            let table = weight_table(x, &ctx, &policy)?;
            let mut t = Table::new(vec!["k", "node", "weight"]);
            for (k, (&node, &w)) in table.nodes().iter().zip(table.weights()).enumerate() {
                t.push(vec![Cell::Int(k as i64), Cell::Float(node), Cell::Float(w)]);
            }
            t.write(json, out)?;
            log::info!(
                "K={} partition_defect={:e} tail_bound={:e} extended={}",
                table.k_max(),
                table.partition_defect(),
                table.tail_bound(),
                table.is_extended()
            );
            if assert && table.partition_defect() > 10.0 * policy.rel_tol() {
                eprintln!(
                    "error: assertion violated: partition defect {:e} exceeds {:e}",
                    table.partition_defect(),
                    10.0 * policy.rel_tol()
                );
                return Ok(3);
            }
            Ok(0)
        }
        Command::Eval { q, n, x, f } => {
            let ctx = QContext::new(q, n)?;
            let wf = parse_wf(&f, None)?;
            let value = apply_operator(|t| wf.eval(t), x, &ctx, &policy)?;
            let mut t = Table::new(vec!["q", "n", "x", "value"]);
            t.push(vec![Cell::Float(q), Cell::Int(n as i64), Cell::Float(x), Cell::Float(value)]);
            t.write(json, out)?;
            Ok(0)
        }
        Command::Moments { q, n, x, mmax } => {
            let ctx = QContext::new(q, n)?;
            let mut t = Table::new(vec!["m", "x", "value_poly", "value_series", "value_rec1"]);
            for m in 0..=mmax {
                let poly = raw_moment(m, x, &ctx, MomentMethod::Polynomial, &policy)?;
                let series = raw_moment(m, x, &ctx, MomentMethod::Series, &policy)?;
                let rec = raw_moment(m, x, &ctx, MomentMethod::Recurrence1, &policy)?;
                t.push(vec![
                    Cell::Int(m as i64),
                    Cell::Float(x),
                    Cell::Float(poly),
                    Cell::Float(series),
                    Cell::Float(rec),
                ]);
            }
            t.write(json, out)?;
            Ok(0)
        }
        Command::CentralMoments { q, n, x, rmax } => {
            let ctx = QContext::new(q, n)?;
            let mut t = Table::new(vec!["r", "x", "value", "reference"]);
            for r in 0..=rmax {
                let value = central_moment(r, x, &ctx)?;
                let reference = match r {
                    0 => 1.0,
                    1 => 0.0,
                    2..=4 => reference_central_moment(r, x, &ctx)?,
                    _ => f64::NAN,
                };
                t.push(vec![
                    Cell::Int(r as i64),
                    Cell::Float(x),
                    Cell::Float(value),
                    Cell::Float(reference),
                ]);
            }
            t.write(json, out)?;
            Ok(0)
        }
        Command::Stirling { q, classical, mmax } => {
            let mut t = Table::new(vec!["m", "j", "value"]);
            if classical {
                if q.is_some() {
                    return Err(CliError::Usage("--q and --classical are mutually exclusive".into()));
                }
                let rows = classical_stirling_table(mmax);
                for (m, row) in rows.iter().enumerate() {
                    for (j, &v) in row.iter().enumerate() {
                        t.push(vec![Cell::Int(m as i64), Cell::Int(j as i64), Cell::Float(v)]);
                    }
                }
            } else {
                let q = q.ok_or_else(|| {
                    CliError::Usage("stirling needs --q above 1, or --classical".into())
                })?;
                let ctx = QContext::new(q, 1)?;
                let table = qstirling_table(mmax, &ctx)?;
                for m in 0..=mmax {
                    for j in 0..=m {
                        t.push(vec![
                            Cell::Int(m as i64),
                            Cell::Int(j as i64),
                            Cell::Float(table.s(m, j)),
                        ]);
                    }
                }
            }
            t.write(json, out)?;
            Ok(0)
        }
        Command::Converge { q, classical, f, p, nmin, nmax, xmax, grid_count } => {
            let template = match (classical, q) {
                (true, None) => QContext::classical(1)?,
                (false, Some(q)) => QContext::new(q, 1)?,
                (true, Some(_)) => {
                    return Err(CliError::Usage("--q and --classical are mutually exclusive".into()))
                }
                (false, None) => {
                    return Err(CliError::Usage("converge needs --q above 1, or --classical".into()))
                }
            };
            if nmin > nmax {
                return Err(CliError::Usage(format!("empty n range {nmin}..{nmax}")));
            }
            let wf = parse_wf(&f, p)?;
            let grid = GridSpec::new(xmax, grid_count)?;
            let rep = convergence_experiment(&wf, &template, nmin..=nmax, &grid, &policy)?;
            let t = report_to_table(&rep, vec!["n", "q_integer_n", "sup_error", "log_error"]);
            t.write(json, out)?;
            match (rep.fitted_slope(), rep.fitted_intercept()) {
                (Some(s), Some(b)) => log::info!("fitted_slope={s:.17e} fitted_intercept={b:.17e}"),
                _ => log::info!("fitted_slope=none"),
            }
            Ok(0)
        }
        Command::Voronovskaja { q, f, x, nmin, nmax } => {
            if nmin > nmax {
                return Err(CliError::Usage(format!("empty n range {nmin}..{nmax}")));
            }
            let wf = parse_wf(&f, None)?;
            let rep = voronovskaja_scan(&wf, q, x, nmin..=nmax, &policy)?;
            let t = report_to_table(&rep, vec!["n", "V_n", "paper_limit", "diagnostic_limit"]);
            t.write(json, out)?;
            Ok(0)
        }
        Command::Modulus { f, p, delta, order, xmax, grid_count } => {
            if !(delta > 0.0) {
                return Err(CliError::Usage(format!("delta must be positive (got {delta})")));
            }
            let wf = parse_wf(&f, p)?;
            let grid = GridSpec::new(xmax, grid_count)?;
            let value = match order {
                1 => first_modulus(|t| wf.eval(t), delta, &grid),
                2 => second_modulus(&wf, delta, &grid),
                _ => return Err(CliError::Usage(format!("order must be 1 or 2 (got {order})"))),
            };
            let mut t = Table::new(vec!["order", "p", "delta", "value"]);
            t.push(vec![
                Cell::Int(order as i64),
                Cell::Int(wf.p() as i64),
                Cell::Float(delta),
                Cell::Float(value),
            ]);
            t.write(json, out)?;
            Ok(0)
        }
        Command::Steklov { f, p, h, xmax, grid_count, quad_points } => {
            let wf = parse_wf(&f, p)?;
            let grid = GridSpec::new(xmax, grid_count)?;
            let mut t = Table::new(vec!["h", "norm_diff", "omega2", "norm_fh2", "ratio"]);
            for &hv in &h {
                if !(hv > 0.0) {
                    return Err(CliError::Usage(format!("h must be positive (got {hv})")));
                }
                let mut norm_diff = 0.0f64;
                let mut norm_fh2 = 0.0f64;
                for x in grid.points() {
                    let (fh, fh2) = steklov(&wf, hv, x, quad_points);
                    let w = weight_p(x, wf.p());
                    norm_diff = norm_diff.max(w * (wf.eval(x) - fh).abs());
                    norm_fh2 = norm_fh2.max(w * fh2.abs());
                }
                let omega2 = second_modulus(&wf, hv, &grid);
                let ratio = norm_fh2 * hv * hv / omega2;
                t.push(vec![
                    Cell::Float(hv),
                    Cell::Float(norm_diff),
                    Cell::Float(omega2),
                    Cell::Float(norm_fh2),
                    Cell::Float(ratio),
                ]);
            }
            t.write(json, out)?;
            Ok(0)
        }
        Command::BoundCheck { mode, f, q, p, nmin, nmax, assert, xmax, grid_count } => {
            if nmin > nmax {
                return Err(CliError::Usage(format!("empty n range {nmin}..{nmax}")));
            }
            let wf = parse_wf(&f, p)?;
            let grid = GridSpec::new(xmax, grid_count)?;
            let bm = match mode {
                ModeArg::Local => BoundMode::Local,
                ModeArg::Global => BoundMode::Global,
                ModeArg::Sqrtmod => BoundMode::SqrtModulus,
            };
            let rep = bound_check(bm, &wf, q, nmin..=nmax, &grid, &policy)?;
            let t = report_to_table(&rep, vec!["n", "lhs", "rhs", "ratio"]);
            t.write(json, out)?;
            if assert && matches!(bm, BoundMode::SqrtModulus) {
                for row in rep.rows() {
                    if row[3] > 1.0 + 1e-12 {
                        eprintln!(
                            "error: assertion violated: sqrtmod bound exceeded at n={} (lhs={:e}, rhs={:e})",
                            row[0], row[1], row[2]
                        );
                        return Ok(3);
                    }
                }
            }
            Ok(0)
        }
        Command::DiagnosePositivity { q, n, x } => {
            let ctx = QContext::new(q, n)?;
            let rep = positivity_scan(&ctx, &x, &policy)?;
            let mut t = Table::new(vec!["kind", "k", "x", "value"]);
            for neg in &rep.negatives {
                t.push(vec![
                    Cell::Int(0),
                    Cell::Int(neg.k as i64),
                    Cell::Float(neg.x),
                    Cell::Float(neg.weight),
                ]);
            }
            for z in &rep.eq_zeros {
                t.push(vec![
                    Cell::Int(1),
                    Cell::Int(z.index as i64),
                    Cell::Float(f64::NAN),
                    Cell::Float(z.z),
                ]);
            }
            t.write(json, out)?;
            log::info!(
                "negative_weights={} eq_zeros_in_range={}",
                rep.negatives.len(),
                rep.eq_zeros.len()
            );
            Ok(0)
        }
    }
}
