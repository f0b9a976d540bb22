//! Command-line front end for `maxprob-core`.
//!
//! Exit codes: `0` success, `2` infeasible problem (empty working set, no
//! prior mass, unattainable moment), `1` anything else.

pub mod problem;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use maxprob_core::harness::{cell4, emit_report, run_convergence, sig10, ExperimentSpec, HarnessOptions, Modes, ReportFormat};
use maxprob_core::model::ProbabilityVector;
use maxprob_core::rational;
use maxprob_core::solve::{expoc, maxprob, rem_solve, wallis_limit_check, RemOptions, SolveOptions};
use maxprob_core::{count_working_set, Error};
use serde_json::json;

pub use problem::{PriorSpec, ProblemFile, SampleSizes, SpecError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "maxprob", version, about = "Most-probable and expected occurrence vectors under a multinomial prior")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// Report format: pretty, csv or json.
    #[arg(long, global = true, default_value = "pretty")]
    format: ReportFormat,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// REM tolerance on the moment residual.
    #[arg(long, global = true, default_value_t = 1e-12)]
    tol: f64,
    /// REM iteration cap.
    #[arg(long = "max-iter", global = true, default_value_t = 200)]
    max_iter: usize,
    /// Worker threads for enumeration and scoring (defaults to all cores).
    #[arg(long, global = true)]
    parallel: Option<usize>,
}

#[derive(Debug, Args)]
struct SpecArg {
    /// Problem file.
    #[arg(long)]
    spec: PathBuf,
}

#[derive(Debug, Args)]
struct SingleN {
    #[command(flatten)]
    spec: SpecArg,
    /// Sample size; required when the file lists several.
    #[arg(long)]
    n: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Most probable member of the working set.
    Maxprob(SingleN),
    /// Probability-weighted mean of the working set.
    Expoc(SingleN),
    /// Size of the working set.
    Count(SingleN),
    /// Relative-entropy maximizer under the file's constraints.
    Rem(SpecArg),
    /// Sweep over the file's sample sizes.
    Converge {
        #[command(flatten)]
        spec: SpecArg,
        /// Comma-separated subset of maxprob, expoc, wallis.
        #[arg(long, default_value = "maxprob,expoc")]
        modes: Modes,
    },
    /// Compare ln π / n of rounded occurrence vectors with H(p, q).
    Wallis {
        #[command(flatten)]
        spec: SpecArg,
        /// Comma-separated decimals, or `rem` for the REM solution.
        #[arg(long, default_value = "rem")]
        p: String,
        /// Comma-separated sample sizes (defaults to the file's `n`).
        #[arg(long = "n-list", value_delimiter = ',')]
        n_list: Option<Vec<u64>>,
    },
}

/// A failure with its exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Spec(SpecError),
    Io(String),
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_infeasible() => EXIT_INFEASIBLE,
            _ => EXIT_FAILURE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Spec(e) => write!(f, "malformed problem file: {e}"),
            CliError::Io(m) => f.write_str(m),
            CliError::Core(e) if e.is_infeasible() => write!(f, "infeasible: {e}"),
            CliError::Core(e) => e.fmt(f),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn load(path: &Path) -> CliResult<ProblemFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    ProblemFile::parse(&text).map_err(CliError::Spec)
}

fn single_n(problem: &ProblemFile, flag: Option<u64>) -> CliResult<u64> {
    match (flag, &problem.n) {
        (Some(n), _) => Ok(n),
        (None, SampleSizes::Single(n)) => Ok(*n),
        (None, SampleSizes::List(v)) if v.len() == 1 => Ok(v[0]),
        (None, SampleSizes::List(_)) => Err(CliError::Usage("the file lists several n; pick one with --n".into())),
    }
}

fn rem_options(c: &Common) -> RemOptions {
    RemOptions {
        tolerance: c.tol,
        max_iter: c.max_iter,
    }
}

fn join_cells(v: &[f64], f: impl Fn(f64) -> String, sep: &str) -> String {
    v.iter().map(|&x| f(x)).collect::<Vec<_>>().join(sep)
}

fn cells4(v: &[f64]) -> String {
    join_cells(v, cell4, " ")
}

fn csv_header(prefix: &str, m: usize) -> String {
    (1..=m).map(|i| format!("{prefix}_{i}")).collect::<Vec<_>>().join(",")
}

fn render(format: ReportFormat, pretty: String, csv: String, json: serde_json::Value) -> Vec<u8> {
    match format {
        ReportFormat::Pretty => pretty.into_bytes(),
        ReportFormat::Csv => csv.into_bytes(),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&json).expect("json values serialize");
            s.push('\n');
            s.into_bytes()
        }
    }
}

fn cmd_maxprob(c: &Common, args: &SingleN) -> CliResult<Vec<u8>> {
    let problem = load(&args.spec.spec)?;
    let n = single_n(&problem, args.n)?;
    let res = maxprob(&problem.working_set(n)?, &problem.prior()?, &SolveOptions::default())?;
    let counts = res.argmax.counts();
    let freq = res.frequency();
    let m = counts.len();
    let mut pretty = String::new();
    let _ = writeln!(pretty, "n        {n}");
    let _ = writeln!(pretty, "J        {}", res.j_scanned);
    let _ = writeln!(pretty, "argmax   {counts:?}");
    let _ = writeln!(pretty, "n^/n     {}", cells4(&freq));
    let _ = writeln!(pretty, "ln pi    {}", sig10(res.log_prob));
    let _ = writeln!(pretty, "ties     {}", res.tie_count);
    let csv = format!(
        "n,J,{},{},log_prob,ties\n{n},{},{},{},{},{}\n",
        csv_header("count", m),
        csv_header("freq", m),
        res.j_scanned,
        counts.iter().map(u64::to_string).collect::<Vec<_>>().join(","),
        join_cells(&freq, sig10, ","),
        sig10(res.log_prob),
        res.tie_count
    );
    let json = json!({
        "n": n, "j_count": res.j_scanned, "argmax": counts, "frequency": freq,
        "log_prob": res.log_prob, "tie_count": res.tie_count,
        "tied": res.tied.iter().map(|v| v.counts().to_vec()).collect::<Vec<_>>(),
    });
    Ok(render(c.format, pretty, csv, json))
}

fn cmd_expoc(c: &Common, args: &SingleN) -> CliResult<Vec<u8>> {
    let problem = load(&args.spec.spec)?;
    let n = single_n(&problem, args.n)?;
    let res = expoc(&problem.working_set(n)?, &problem.prior()?, &SolveOptions::default())?;
    let freq = res.frequency();
    let m = freq.len();
    let mut pretty = String::new();
    let _ = writeln!(pretty, "n        {n}");
    let _ = writeln!(pretty, "J        {}", res.j_scanned);
    let _ = writeln!(pretty, "mean     {}", join_cells(&res.mean, sig10, " "));
    let _ = writeln!(pretty, "n-/n     {}", cells4(&freq));
    let _ = writeln!(pretty, "ln P(H)  {}", sig10(res.log_total_prob));
    let csv = format!(
        "n,J,{},{},log_total_prob\n{n},{},{},{},{}\n",
        csv_header("mean", m),
        csv_header("freq", m),
        res.j_scanned,
        join_cells(&res.mean, sig10, ","),
        join_cells(&freq, sig10, ","),
        sig10(res.log_total_prob)
    );
    let json = json!({
        "n": n, "j_count": res.j_scanned, "mean": res.mean, "frequency": freq,
        "log_total_prob": res.log_total_prob,
    });
    Ok(render(c.format, pretty, csv, json))
}

fn cmd_count(c: &Common, args: &SingleN) -> CliResult<Vec<u8>> {
    let problem = load(&args.spec.spec)?;
    let n = single_n(&problem, args.n)?;
    let stats = count_working_set(&problem.working_set(n)?)?;
    let pretty = format!("J = {}\n", stats.j_count);
    let csv = format!("n,J\n{n},{}\n", stats.j_count);
    // Counts past u64 are written as strings.
    let j = u64::try_from(stats.j_count).map(serde_json::Value::from).unwrap_or_else(|_| stats.j_count.to_string().into());
    let json = json!({"n": n, "j_count": j});
    Ok(render(c.format, pretty, csv, json))
}

fn cmd_rem(c: &Common, args: &SpecArg) -> CliResult<Vec<u8>> {
    let problem = load(&args.spec)?;
    let q = problem.prior()?;
    let res = rem_solve(&q, &problem.constraints, &rem_options(c))?;
    let p = res.p_hat.as_slice();
    let m = p.len();
    let mut pretty = String::new();
    let _ = writeln!(pretty, "p^           {}", cells4(p));
    let _ = writeln!(pretty, "multipliers  {}", join_cells(&res.multipliers, sig10, " "));
    let _ = writeln!(pretty, "residual     {:.3e}", res.residual);
    let _ = writeln!(pretty, "iterations   {}", res.iterations);
    let mut header: Vec<String> = (1..=m).map(|i| format!("p_{i}")).collect();
    header.extend((1..=res.multipliers.len()).map(|k| format!("lambda_{k}")));
    header.extend(["residual".into(), "iterations".into()]);
    let mut row: Vec<String> = p.iter().chain(&res.multipliers).map(|&v| sig10(v)).collect();
    row.extend([sig10(res.residual), res.iterations.to_string()]);
    let csv = format!("{}\n{}\n", header.join(","), row.join(","));
    // Infinite multipliers have no JSON number form.
    let lambdas: Vec<serde_json::Value> = res
        .multipliers
        .iter()
        .map(|&l| if l.is_finite() { json!(l) } else { json!(sig10(l)) })
        .collect();
    let json = json!({
        "p_hat": p, "multipliers": lambdas, "log_normalizer": res.log_normalizer,
        "residual": res.residual, "iterations": res.iterations,
    });
    Ok(render(c.format, pretty, csv, json))
}

fn cmd_converge(c: &Common, args: &SpecArg, modes: Modes) -> CliResult<Vec<u8>> {
    let problem = load(&args.spec)?;
    let exp = ExperimentSpec::new(problem.prior()?, problem.constraints.clone(), problem.n.values(), modes)?;
    let opts = HarnessOptions {
        solve: SolveOptions::default(),
        rem: rem_options(c),
    };
    let rows = run_convergence(&exp, &opts)?;
    Ok(emit_report(&rows, c.format)?)
}

fn parse_p(text: &str, m: usize) -> CliResult<ProbabilityVector<f64>> {
    let values = text
        .split(',')
        .map(|s| rational::parse_decimal(s.trim()).map(|r| rational::to_real::<f64>(&r)))
        .collect::<maxprob_core::Result<Vec<f64>>>()
        .map_err(|e| CliError::Usage(format!("--p: {e}")))?;
    if values.len() != m {
        return Err(CliError::Usage(format!("--p has {} entries, the problem has m = {m}", values.len())));
    }
    ProbabilityVector::new(values).map_err(|e| CliError::Usage(format!("--p: {e}")))
}

fn cmd_wallis(c: &Common, args: &SpecArg, p: &str, n_list: Option<&[u64]>) -> CliResult<Vec<u8>> {
    let problem = load(&args.spec)?;
    let q = problem.prior()?;
    let p = if p == "rem" {
        rem_solve(&q, &problem.constraints, &rem_options(c))?.p_hat
    } else {
        parse_p(p, problem.m)?
    };
    let ns = n_list.map(<[u64]>::to_vec).unwrap_or_else(|| problem.n.values());
    let records = wallis_limit_check(&q, &p, &ns)?;
    let mut pretty = format!("{:>8} | {:>14} | {:>14} | {:>10} | vector\n", "n", "ln pi / n", "H(p,q)", "gap");
    let mut csv = format!("n,normalized_log_prob,target_entropy,gap,{}\n", csv_header("count", problem.m));
    for r in &records {
        let counts = r.rounded_vector.counts();
        let _ = writeln!(
            pretty,
            "{:>8} | {:>14.10} | {:>14.10} | {:>10.3e} | {counts:?}",
            r.n, r.normalized_log_prob, r.target_entropy, r.gap
        );
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            r.n,
            sig10(r.normalized_log_prob),
            sig10(r.target_entropy),
            sig10(r.gap),
            counts.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
        );
    }
    let json = serde_json::Value::Array(
        records
            .iter()
            .map(|r| {
                json!({
                    "n": r.n, "rounded_vector": r.rounded_vector.counts(),
                    "normalized_log_prob": r.normalized_log_prob, "target_entropy": r.target_entropy, "gap": r.gap,
                })
            })
            .collect(),
    );
    Ok(render(c.format, pretty, csv, json))
}

fn dispatch(cli: &Cli) -> CliResult<Vec<u8>> {
    let c = &cli.common;
    match &cli.command {
        Command::Maxprob(a) => cmd_maxprob(c, a),
        Command::Expoc(a) => cmd_expoc(c, a),
        Command::Count(a) => cmd_count(c, a),
        Command::Rem(a) => cmd_rem(c, a),
        Command::Converge { spec, modes } => cmd_converge(c, spec, *modes),
        Command::Wallis { spec, p, n_list } => cmd_wallis(c, spec, p, n_list.as_deref()),
    }
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io(format!("writing stdout: {e}")))
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to stderr.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_FAILURE } else { EXIT_OK };
        }
    };
    if let Some(threads) = cli.common.parallel {
        if threads == 0 {
            eprintln!("usage: --parallel must be at least 1");
            return EXIT_FAILURE;
        }
        // A pool that already exists keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match dispatch(&cli).and_then(|bytes| write_output(cli.common.out.as_deref(), &bytes)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("maxprob: {e}");
            e.exit_code()
        }
    }
}
