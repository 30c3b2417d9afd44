//! `ldp-lab` command-line front end. [`run`] parses an argument vector,
//! dispatches to the laboratory and writes the report; `main` only wires it
//! to the process streams.

mod format;

use std::fs;
use std::io::Write;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sublinear_ldp::cgf::CgfCurve;
use sublinear_ldp::fenchel::{
    bernoulli_rate, conjugate_of, corrected_rate, exposed_point_test, gamma_star_exposed_test, SearchConfig,
};
use sublinear_ldp::ldp_lab::{counterexample_report, figure1_data, serialize_extended_f64, Verdict, VerdictThresholds};
use sublinear_ldp::suite::{run_all, DEFAULT_SEED};
use sublinear_ldp::{ExtendedReal, GridSpec, LabError};

pub use format::sig12;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const DEFAULT_GRID: &str = "0:1:0.001";
const DEFAULT_NS: &str = "100,500,1000,5000";

#[derive(Debug, Parser)]
#[command(name = "ldp-lab", version, about = "Large deviations under the capacity V = P(2 - P)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct Output {
    /// Output format [default: csv, json for counterexample and exposed]
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write to this file instead of standard output
    #[arg(long)]
    out: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RateKind {
    Bernoulli,
    Corrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CgfKind {
    Lambda,
    Bernoulli,
    Gamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConjugateKind {
    Lambda,
    Bernoulli,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rate function I_t or the corrected rate I on a grid of x
    Rate {
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, value_enum, default_value_t = RateKind::Corrected)]
        kind: RateKind,
        /// Bernoulli parameter for --kind bernoulli [default: p]
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, default_value = DEFAULT_GRID, allow_hyphen_values = true)]
        grid: GridSpec,
        #[command(flatten)]
        output: Output,
    },
    /// Cumulant generating functions on a grid of lambda
    Cgf {
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, value_enum, default_value_t = CgfKind::Lambda)]
        which: CgfKind,
        /// Sample size for --which gamma
        #[arg(long, default_value_t = 1000)]
        n: u64,
        #[arg(long, default_value = DEFAULT_GRID, allow_hyphen_values = true)]
        grid: GridSpec,
        #[command(flatten)]
        output: Output,
    },
    /// Numerical conjugate against the closed-form rate
    Fenchel {
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, value_enum, default_value_t = ConjugateKind::Lambda)]
        which: ConjugateKind,
        #[arg(long, default_value = DEFAULT_GRID, allow_hyphen_values = true)]
        grid: GridSpec,
        #[command(flatten)]
        output: Output,
    },
    /// Finite-n capacity rates of {mean in (a, b)} against both candidate limits
    Counterexample {
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, default_value_t = 0.05)]
        a: f64,
        #[arg(long, default_value_t = 0.2)]
        b: f64,
        #[arg(long, default_value = DEFAULT_NS, value_delimiter = ',')]
        n: Vec<u64>,
        #[arg(long, default_value_t = 0.02)]
        tol_true: f64,
        #[arg(long, default_value_t = 0.15)]
        sep_min: f64,
        #[arg(long, default_value_t = 500)]
        n_min: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Whether y is an exposed point of the corrected rate I
    Exposed {
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, default_value_t = 0.1)]
        y: f64,
        /// Grid used for the strict-separation check
        #[arg(long, default_value = DEFAULT_GRID, allow_hyphen_values = true)]
        grid: GridSpec,
        /// Query the Bernoulli rate I_p instead, with the extra hyperplane flags
        #[arg(long)]
        gamma_star: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Columns x, I_p(x), I(x) for plotting
    Figure1 {
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, default_value = DEFAULT_GRID, allow_hyphen_values = true)]
        grid: GridSpec,
        #[command(flatten)]
        output: Output,
    },
    /// Cross-module invariant suite
    Verify {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
}

/// A rendered report plus the exit status it implies.
struct Report {
    text: String,
    status: i32,
    /// Lines for the error stream, such as failing checks.
    notes: Vec<String>,
}

impl Report {
    fn ok(text: String) -> Self {
        Report { text, status: EXIT_OK, notes: Vec::new() }
    }
}

fn json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn csv<const N: usize>(header: [&str; N], rows: impl IntoIterator<Item = [String; N]>) -> String {
    let mut out = format::csv_line(&header.map(String::from));
    for row in rows {
        out.push_str(&format::csv_line(&row));
    }
    out
}

fn ext(v: ExtendedReal) -> String {
    sig12(v.to_f64())
}

#[derive(Serialize)]
struct ValueRow {
    x: f64,
    value: ExtendedReal,
}

#[derive(Serialize)]
struct CgfRow {
    lambda: f64,
    value: f64,
}

#[derive(Serialize)]
struct ConjugateRow {
    x: f64,
    numeric: ExtendedReal,
    closed_form: ExtendedReal,
    #[serde(serialize_with = "serialize_extended_f64")]
    abs_error: f64,
}

fn rate(p: f64, kind: RateKind, t: Option<f64>, grid: &GridSpec, fmt: Format) -> Result<Report, LabError> {
    let rows = grid
        .points()
        .into_iter()
        .map(|x| {
            let value = match kind {
                RateKind::Bernoulli => bernoulli_rate(t.unwrap_or(p), x)?,
                RateKind::Corrected => corrected_rate(p, x)?,
            };
            Ok(ValueRow { x, value })
        })
        .collect::<Result<Vec<_>, LabError>>()?;
    Ok(Report::ok(match fmt {
        Format::Json => json(&rows),
        Format::Csv => csv(["x", "rate"], rows.iter().map(|r| [sig12(r.x), ext(r.value)])),
    }))
}

fn cgf(p: f64, which: CgfKind, n: u64, grid: &GridSpec, fmt: Format) -> Result<Report, LabError> {
    let curve = match which {
        CgfKind::Lambda => CgfCurve::chen_feng(p)?,
        CgfKind::Bernoulli => CgfCurve::bernoulli(p)?,
        CgfKind::Gamma => CgfCurve::gamma(p, n)?,
    };
    let rows: Vec<CgfRow> =
        grid.points().into_iter().map(|lambda| CgfRow { lambda, value: curve.evaluate(lambda) }).collect();
    Ok(Report::ok(match fmt {
        Format::Json => json(&rows),
        Format::Csv => csv(["lambda", "value"], rows.iter().map(|r| [sig12(r.lambda), sig12(r.value)])),
    }))
}

fn fenchel(p: f64, which: ConjugateKind, grid: &GridSpec, fmt: Format) -> Result<Report, LabError> {
    let curve = match which {
        ConjugateKind::Lambda => CgfCurve::chen_feng(p)?,
        ConjugateKind::Bernoulli => CgfCurve::bernoulli(p)?,
    };
    let opts = SearchConfig::default();
    let rows = grid
        .points()
        .into_iter()
        .map(|x| {
            let numeric = conjugate_of(&curve, x, &opts)?;
            let closed_form = match which {
                ConjugateKind::Lambda => corrected_rate(p, x)?,
                ConjugateKind::Bernoulli => bernoulli_rate(p, x)?,
            };
            Ok(ConjugateRow { x, numeric, closed_form, abs_error: numeric.distance(closed_form) })
        })
        .collect::<Result<Vec<_>, LabError>>()?;
    Ok(Report::ok(match fmt {
        Format::Json => json(&rows),
        Format::Csv => csv(
            ["x", "numeric", "closed_form", "abs_error"],
            rows.iter().map(|r| [sig12(r.x), ext(r.numeric), ext(r.closed_form), sig12(r.abs_error)]),
        ),
    }))
}

fn execute(command: Command) -> Result<(Report, Option<String>), LabError> {
    let (report, out) = match command {
        Command::Rate { p, kind, t, grid, output } => {
            (rate(p, kind, t, &grid, output.format.unwrap_or(Format::Csv))?, output.out)
        }
        Command::Cgf { p, which, n, grid, output } => {
            (cgf(p, which, n, &grid, output.format.unwrap_or(Format::Csv))?, output.out)
        }
        Command::Fenchel { p, which, grid, output } => {
            (fenchel(p, which, &grid, output.format.unwrap_or(Format::Csv))?, output.out)
        }
        Command::Counterexample { p, a, b, n, tol_true, sep_min, n_min, output } => {
            let thresholds = VerdictThresholds { tol_true, sep_min, n_min };
            let report = counterexample_report(p, a, b, &n, &thresholds)?;
            let status = if report.verdict == Verdict::Pass { EXIT_OK } else { EXIT_FAILED };
            let text = match output.format.unwrap_or(Format::Json) {
                Format::Json => json(&report),
                Format::Csv => csv(
                    ["n", "q_log", "rate"],
                    report.rows.iter().map(|r| [r.n.to_string(), sig12(r.q_log), sig12(r.rate)]),
                ),
            };
            let notes = if status == EXIT_OK { Vec::new() } else { vec!["verdict: fail".to_string()] };
            (Report { text, status, notes }, output.out)
        }
        Command::Exposed { p, y, grid, gamma_star, output } => {
            let fmt = output.format.unwrap_or(Format::Json);
            let text = if gamma_star {
                let v = gamma_star_exposed_test(p, y, &grid)?;
                match fmt {
                    Format::Json => json(&v),
                    Format::Csv => exposed_csv(&v.verdict),
                }
            } else {
                let v = exposed_point_test(p, y, &grid)?;
                match fmt {
                    Format::Json => json(&v),
                    Format::Csv => exposed_csv(&v),
                }
            };
            (Report::ok(text), output.out)
        }
        Command::Figure1 { p, grid, output } => {
            let rows = figure1_data(p, &grid)?;
            let text = match output.format.unwrap_or(Format::Csv) {
                Format::Json => json(&rows),
                Format::Csv => csv(["x", "I_p", "I"], rows.iter().map(|r| [sig12(r.x), sig12(r.i_p), sig12(r.i)])),
            };
            (Report::ok(text), output.out)
        }
        Command::Verify { seed, output } => {
            let outcomes = run_all(seed)?;
            let status = if outcomes.iter().all(|o| o.passed) { EXIT_OK } else { EXIT_FAILED };
            let text = match output.format.unwrap_or(Format::Csv) {
                Format::Json => json(&outcomes),
                Format::Csv => csv(
                    ["check", "status", "margin", "detail"],
                    outcomes.iter().map(|o| {
                        [
                            o.name.to_string(),
                            if o.passed { "pass" } else { "FAIL" }.to_string(),
                            sig12(o.margin),
                            format!("\"{}\"", o.detail.replace('"', "\"\"")),
                        ]
                    }),
                ),
            };
            let notes = outcomes
                .iter()
                .filter(|o| !o.passed)
                .map(|o| format!("failed: {} (margin {})", o.name, sig12(o.margin)))
                .collect();
            (Report { text, status, notes }, output.out)
        }
    };
    Ok((report, out))
}

fn exposed_csv(v: &sublinear_ldp::fenchel::ExposedPointVerdict) -> String {
    let opt = |x: Option<f64>| x.map(sig12).unwrap_or_default();
    csv(
        ["point", "exposed", "hyperplane", "min_margin"],
        [[sig12(v.point), v.is_exposed.to_string(), opt(v.hyperplane), opt(v.min_margin)]],
    )
}

/// Runs one invocation. Reports go to `out` (or the `--out` file), messages
/// to `err`. Returns 0 on success, 1 when a verdict or check fails and 2 on
/// usage errors, including parameters outside an operation's domain.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                if !text.contains("Usage:") {
                    let _ = writeln!(err, "\n{}", Cli::command().render_usage());
                }
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    let (report, path) = match execute(cli.command) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return match e {
                LabError::InvalidInput(_) | LabError::UnknownAtom(_) => EXIT_USAGE,
                LabError::Capability(_) | LabError::NonConvex { .. } => EXIT_FAILED,
            };
        }
    };
    let written = match path {
        Some(path) => fs::write(&path, &report.text).map_err(|e| format!("cannot write {path}: {e}")),
        None => out.write_all(report.text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: {e}");
        return EXIT_FAILED;
    }
    for note in &report.notes {
        let _ = writeln!(err, "{note}");
    }
    report.status
}
