//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a verification or certificate failed, 2 usage
//! or input error, 3 numeric breakdown in the LP solver.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;
use thiserror::Error;

use crate::analytic;
use crate::bipartite::{rows_to_mat, separable_from_vertices, state_from_map, BipartiteError, BipartiteState};
use crate::chsh::{chsh_value, prob_table, winning_probability, ChshError, ChshSetting};
use crate::lp::LpError;
use crate::search::{self, round12, ChshSense, Parity, SearchError};
use crate::theory::{Theory, TheoryError, DEFAULT_TOL};

/// Environment variable overriding `--threads`.
pub const THREADS_ENV: &str = "POLYGON_CHSH_THREADS";

#[derive(Debug, Parser)]
#[command(name = "polygon-chsh", version, about = "CHSH optima for regular polygon theories")]
pub struct Cli {
    /// Tolerance for membership tests and certificate checks.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Largest n for exhaustive LP sweeps.
    #[arg(long, global = true, default_value_t = search::DEFAULT_LP_CAP)]
    pub lp_cap: usize,
    /// Worker threads for LP sweeps (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SenseArg {
    Max,
    Min,
    Abs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableWhat {
    G,
    H,
    Hopt,
    All,
    Even,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ParityArg {
    Even,
    Odd,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single-system data.
    Theory {
        #[command(subcommand)]
        command: TheoryCommand,
    },
    /// CHSH evaluation of a given state.
    Chsh {
        #[command(subcommand)]
        command: ChshCommand,
    },
    /// Optimize the CHSH value over the maximal tensor product.
    Optimize {
        #[arg(long)]
        n: usize,
        /// Fixed observables `i,j,k,l`.
        #[arg(long, value_parser = parse_quad)]
        obs: Option<[i64; 4]>,
        /// Only maximally entangled states.
        #[arg(long)]
        me_only: bool,
        /// Visit every observable quadruple.
        #[arg(long)]
        no_reduce: bool,
        #[arg(long, value_enum, default_value_t = SenseArg::Abs)]
        sense: SenseArg,
        /// Write the fixed-observable program in tableau format (needs --obs).
        #[arg(long)]
        dump_lp: Option<PathBuf>,
    },
    /// Compare global and maximally entangled optima for a range of n.
    Verify {
        /// Inclusive range `A..B`.
        #[arg(long, value_parser = parse_range)]
        n_range: (usize, usize),
    },
    /// Check the LP optimality certificates for odd n.
    Certify {
        #[arg(long)]
        n: usize,
    },
    /// Closed-form tables as CSV.
    Table {
        #[arg(long, value_enum)]
        what: TableWhat,
        #[arg(long)]
        n: usize,
        /// With `--what even`: also print the alternative closed form.
        #[arg(long)]
        paper_remark: bool,
    },
    /// Optimal values for a range of n as CSV.
    Sweep {
        #[arg(long, value_enum, default_value_t = ParityArg::Both)]
        parity: ParityArg,
        #[arg(long)]
        max_n: usize,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum TheoryCommand {
    /// Vertices, effects, r_n and T_n.
    Info {
        #[arg(long)]
        n: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum ChshCommand {
    /// CHSH value, winning probability and probability table.
    Eval {
        /// JSON file: `{"n", "map"}` or `{"n", "mixture": [[w, iA, iB], ...]}`.
        #[arg(long)]
        state: PathBuf,
        #[arg(long, value_parser = parse_quad)]
        obs: [i64; 4],
    },
}

fn parse_quad(s: &str) -> Result<[i64; 4], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!("expected four comma-separated indices, got {s:?}"));
    }
    let mut out = [0; 4];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|_| format!("not an integer: {p:?}"))?;
    }
    Ok(out)
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected A..B, got {s:?}"))?;
    let a: usize = a.trim().parse().map_err(|_| format!("bad lower bound in {s:?}"))?;
    let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| format!("bad upper bound in {s:?}"))?;
    if a > b {
        return Err(format!("empty range {s:?}"));
    }
    Ok((a, b))
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error(transparent)]
    Bipartite(#[from] BipartiteError),
    #[error(transparent)]
    Chsh(#[from] ChshError),
    #[error(transparent)]
    Analytic(#[from] analytic::AnalyticError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Search(SearchError::Lp(LpError::NumericBreakdown(_))) => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    n: usize,
    map: Option<[[f64; 3]; 3]>,
    mixture: Option<Vec<(f64, i64, i64)>>,
}

fn load_state(path: &PathBuf, tol: f64) -> Result<(Theory, BipartiteState), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let file: StateFile = serde_json::from_str(&text)?;
    let theory = Theory::new(file.n)?;
    let state = match (file.map, file.mixture) {
        (Some(map), None) => state_from_map(&theory, rows_to_mat(&map), tol)?,
        (None, Some(mix)) => separable_from_vertices(&theory, &mix)?,
        _ => return Err(CliError::Usage("state file needs exactly one of \"map\" or \"mixture\"".into())),
    };
    Ok((theory, state))
}

/// Runs the CLI with `std::env::args`, returning the exit code.
pub fn run(args: impl IntoIterator<Item = String>) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// As [`run`] with explicit output streams.
pub fn run_with(args: impl IntoIterator<Item = String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            if e.use_stderr() {
                let first = e.to_string().lines().next().unwrap_or("usage error").to_string();
                let _ = writeln!(err, "{first}");
            } else {
                let _ = write!(out, "{e}");
            }
            return code;
        }
    };
    if !(cli.tol > 0.0) || cli.lp_cap < 3 {
        let _ = writeln!(err, "error: --tol must be positive and --lp-cap at least 3");
        return 2;
    }
    configure_threads(cli.threads);
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads(flag: Option<usize>) {
    let env = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok());
    let threads = env.or(flag);
    #[cfg(feature = "parallel")]
    if let Some(t) = threads {
        // Fails only if a pool already exists, in which case it is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
}

fn f6(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    match &cli.command {
        Command::Theory {
            command: TheoryCommand::Info { n },
        } => theory_info(*n, cli.format, out),
        Command::Chsh {
            command: ChshCommand::Eval { state, obs },
        } => chsh_eval(state, *obs, cli, out),
        Command::Optimize {
            n,
            obs,
            me_only,
            no_reduce,
            sense,
            dump_lp,
        } => {
            if let Some(path) = dump_lp {
                dump_program(*n, *obs, *sense, path)?;
            }
            optimize(*n, *obs, *me_only, *no_reduce, *sense, cli, out)
        }
        Command::Verify { n_range } => verify(*n_range, cli, out),
        Command::Certify { n } => certify(*n, cli, out),
        Command::Table { what, n, paper_remark } => table(*what, *n, *paper_remark, out),
        Command::Sweep { parity, max_n, out: path } => sweep(*parity, *max_n, path.as_ref(), cli, out, err),
    }
}

fn theory_info(n: usize, format: Format, out: &mut dyn Write) -> Result<i32, CliError> {
    let t = Theory::new(n)?;
    let vec3 = |v: &crate::theory::Vec3| [round12(v.x), round12(v.y), round12(v.z)];
    if format == Format::Json {
        let value = json!({
            "n": n,
            "r": round12(t.r()),
            "theta": round12(t.theta()),
            "pure_states": t.pure_states().iter().map(vec3).collect::<Vec<_>>(),
            "pure_effects": t.pure_effects().iter().map(vec3).collect::<Vec<_>>(),
            "T": crate::bipartite::mat_to_rows(&t.order_isomorphism().0).map(|r| r.map(round12)),
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&value)?)?;
        return Ok(0);
    }
    let mut s = String::new();
    writeln!(s, "n={n}").unwrap();
    writeln!(s, "r={}", f6(t.r())).unwrap();
    writeln!(s, "theta={}", f6(t.theta())).unwrap();
    for (i, v) in t.pure_states().iter().enumerate() {
        writeln!(s, "state {i}: {} {} {}", f6(v.x), f6(v.y), f6(v.z)).unwrap();
    }
    for (i, v) in t.pure_effects().iter().enumerate() {
        let label = if i < n { format!("e({i})") } else { format!("u-e({})", i - n) };
        writeln!(s, "effect {label}: {} {} {}", f6(v.x), f6(v.y), f6(v.z)).unwrap();
    }
    let m = t.order_isomorphism().0;
    for i in 0..3 {
        writeln!(s, "T row {i}: {} {} {}", f6(m[(i, 0)]), f6(m[(i, 1)]), f6(m[(i, 2)])).unwrap();
    }
    out.write_all(s.as_bytes())?;
    Ok(0)
}

fn chsh_eval(path: &PathBuf, quad: [i64; 4], cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let (theory, state) = load_state(path, cli.tol)?;
    let setting = ChshSetting::from_indices(&theory, state, quad);
    let table = prob_table(&setting)?;
    let c = chsh_value(&table);
    let p = winning_probability(&table);
    match cli.format {
        Format::Json => {
            let value = json!({
                "n": theory.n(),
                "obs": quad,
                "chsh": round12(c),
                "p_win": round12(p),
                "table": table.to_matrix().map(|r| r.map(round12)),
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&value)?)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["s", "t", "a", "b", "p"])?;
            for s in 0..2 {
                for t in 0..2 {
                    for a in 0..2 {
                        for b in 0..2 {
                            w.write_record([s.to_string(), t.to_string(), a.to_string(), b.to_string(), f6(table.get(a, b, s, t))])?;
                        }
                    }
                }
            }
            out.write_all(&w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?)?;
        }
        Format::Text => {
            writeln!(out, "C={}", f6(c))?;
            writeln!(out, "P_win={}", f6(p))?;
            for (k, row) in table.to_matrix().iter().enumerate() {
                let cells: Vec<String> = row.iter().map(|&x| f6(x)).collect();
                writeln!(out, "s={} t={}: {}", k / 2, k % 2, cells.join(" "))?;
            }
        }
    }
    Ok(0)
}

/// With `--sense abs` the maximization is written; the minimization differs
/// only in the `sense` line.
fn dump_program(n: usize, obs: Option<[i64; 4]>, sense: SenseArg, path: &PathBuf) -> Result<(), CliError> {
    let quad = obs.ok_or_else(|| CliError::Usage("--dump-lp needs --obs".into()))?;
    let theory = Theory::new(n)?;
    let sense = if sense == SenseArg::Min { ChshSense::Min } else { ChshSense::Max };
    std::fs::write(path, search::fixed_obs_program(&theory, quad, sense).to_tableau_text())?;
    Ok(())
}

fn optimize(
    n: usize,
    obs: Option<[i64; 4]>,
    me_only: bool,
    no_reduce: bool,
    sense: SenseArg,
    cli: &Cli,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let theory = Theory::new(n)?;
    if let Some(quad) = obs {
        let senses: &[ChshSense] = match sense {
            SenseArg::Max => &[ChshSense::Max],
            SenseArg::Min => &[ChshSense::Min],
            SenseArg::Abs => &[ChshSense::Max, ChshSense::Min],
        };
        let mut best: Option<(f64, BipartiteState)> = None;
        for &s in senses {
            let (v, st) = search::max_chsh_fixed_obs(&theory, quad, s)?;
            if best.as_ref().is_none_or(|(b, _)| v.abs() > b.abs() + 1e-9) {
                best = Some((v, st));
            }
        }
        let (value, state) = best.expect("one sense");
        let reported = if sense == SenseArg::Abs { value.abs() } else { value };
        if cli.format == Format::Json {
            let v = json!({
                "n": n,
                "quadruple": quad,
                "value": round12(reported),
                "signed_value": round12(value),
                "matrix": crate::bipartite::mat_to_rows(state.map()).map(|r| r.map(round12)),
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
        } else {
            writeln!(out, "n={n} obs={},{},{},{} C={}", quad[0], quad[1], quad[2], quad[3], f6(reported))?;
        }
        return Ok(0);
    }
    if me_only {
        let me = search::me_optimum(&theory);
        if cli.format == Format::Json {
            writeln!(out, "{}", serde_json::to_string_pretty(&json!({
                "n": n,
                "me": {
                    "value": round12(me.signed_value),
                    "group_element": me.group_label,
                    "quadruple": me.quadruple,
                }
            }))?)?;
        } else {
            let q = me.quadruple;
            writeln!(out, "n={n} |C|={} C={} state={} obs={},{},{},{}", f6(me.value), f6(me.signed_value), me.group_label, q[0], q[1], q[2], q[3])?;
        }
        return Ok(0);
    }
    let report = search::global_optimum(&theory, !no_reduce, cli.lp_cap)?;
    if cli.format == Format::Json {
        let pass = (report.best_value - report.me.value).abs() <= 1e-6;
        let value = search::json_report(&theory, &report, pass, None);
        writeln!(out, "{}", serde_json::to_string_pretty(&value)?)?;
    } else {
        let q = report.quadruple;
        writeln!(out, "n={n} |C|={} C={} obs={},{},{},{}", f6(report.best_value), f6(report.signed_value), q[0], q[1], q[2], q[3])?;
        writeln!(out, "me |C|={} state={} max_entangled={}", f6(report.me.value), report.me.group_label, report.is_max_entangled)?;
    }
    Ok(0)
}

fn verify(range: (usize, usize), cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut all = true;
    let mut reports = Vec::new();
    for n in range.0..=range.1 {
        let r = search::verify_theorem(&Theory::new(n)?, cli.lp_cap)?;
        all &= r.pass;
        reports.push(r);
    }
    match cli.format {
        Format::Json => {
            let v: Vec<_> = reports
                .iter()
                .map(|r| json!({"n": r.n, "global": round12(r.global_value), "me": round12(r.me_value), "pass": r.pass}))
                .collect();
            writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
        }
        _ => {
            for r in &reports {
                let tag = if r.pass { "PASS" } else { "FAIL" };
                writeln!(out, "{tag} n={} global={} me={} state={}", r.n, f6(r.global_value), f6(r.me_value), r.me_group_label)?;
            }
        }
    }
    Ok(if all { 0 } else { 1 })
}

fn certify(n: usize, cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let report = search::certify(n, cli.tol)?;
    if cli.format == Format::Json {
        writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    } else {
        let line = |name: &str, v: &search::ProgramVerdict| {
            format!(
                "{} {name}: sense={:?} lp={} expected={} C={} dual=[{}] residuals primal={:e} dual={:e} slack={:e}/{:e}",
                if v.pass { "PASS" } else { "FAIL" },
                v.sense,
                f6(v.lp_value),
                f6(v.expected_value),
                f6(v.chsh_value),
                v.dual.iter().map(|&y| f6(y)).collect::<Vec<_>>().join(" "),
                v.verdict.primal_feasibility,
                v.verdict.dual_feasibility,
                v.verdict.primal_slackness,
                v.verdict.dual_slackness,
            )
        };
        writeln!(out, "{}", line("optimality", &report.theorem))?;
        writeln!(out, "{}", line("opposite", &report.delta))?;
        writeln!(out, "H={} opposite |C|={} dominated={}", f6(report.h_opt), f6(report.delta.chsh_value.abs()), report.dominates_opposite)?;
        if let Some(cf) = &report.closed_form_dual {
            writeln!(
                out,
                "closed-form dual [{}]: positive={} certificate={}",
                cf.y.iter().map(|&y| f6(y)).collect::<Vec<_>>().join(" "),
                cf.all_positive,
                if cf.verdict.pass { "valid" } else { "invalid" }
            )?;
        }
        writeln!(out, "{}", if report.pass { "PASS" } else { "FAIL" })?;
    }
    Ok(if report.pass { 0 } else { 1 })
}

fn table(what: TableWhat, n: usize, remark: bool, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    match what {
        TableWhat::Hopt => {
            let h = analytic::h_opt(n)?;
            w.write_record(["n", "n_star", "H_opt"])?;
            w.write_record([n.to_string(), h.n_star.to_string(), f6(h.value)])?;
        }
        TableWhat::G | TableWhat::H | TableWhat::All => {
            let g = analytic::g_table(n)?;
            let h = analytic::h_table(n)?;
            let opt = analytic::h_opt(n)?;
            let header: &[&str] = match what {
                TableWhat::G => &["n", "k", "G"],
                TableWhat::H => &["n", "k", "H"],
                _ => &["n", "k", "G", "H", "n_star", "H_opt"],
            };
            w.write_record(header)?;
            for k in 0..g.len() {
                let mut rec = vec![n.to_string(), k.to_string()];
                match what {
                    TableWhat::G => rec.push(f6(g[k])),
                    TableWhat::H => rec.push(f6(h[k])),
                    _ => rec.extend([f6(g[k]), f6(h[k]), opt.n_star.to_string(), f6(opt.value)]),
                }
                w.write_record(&rec)?;
            }
        }
        TableWhat::Even => {
            let (best_l, best) = analytic::even_optimum(n)?;
            let mut header = vec!["n", "l", "bound", "chsh", "optimal"];
            if remark {
                header.extend(["alt_l", "alt_bound", "alt_over_direct"]);
            }
            w.write_record(&header)?;
            let remark_value = if remark { Some(analytic::alternative_even_bound(n)?) } else { None };
            for l in 0..=(n - 2) / 4 {
                let b = analytic::even_bound(n, l)?;
                let mut rec = vec![n.to_string(), l.to_string(), f6(b), f6(4.0 * b), (l == best_l).to_string()];
                if let Some((rl, rv)) = remark_value {
                    rec.extend([rl.to_string(), f6(rv), f6(rv / (best / 4.0))]);
                }
                w.write_record(&rec)?;
            }
        }
    }
    out.write_all(&w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?)?;
    Ok(0)
}

fn sweep(
    parity: ParityArg,
    max_n: usize,
    path: Option<&PathBuf>,
    cli: &Cli,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let parity = match parity {
        ParityArg::Even => Parity::Even,
        ParityArg::Odd => Parity::Odd,
        ParityArg::Both => Parity::Both,
    };
    if max_n > 2001 {
        return Err(CliError::Usage(format!("--max-n {max_n} exceeds 2001")));
    }
    let (rows, skipped) = search::sweep(parity, max_n, cli.lp_cap)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "optimum", "method"])?;
    for r in &rows {
        w.write_record([r.n.to_string(), f6(r.optimum), r.method.as_str().to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    match path {
        Some(p) => std::fs::write(p, &bytes)?,
        None => out.write_all(&bytes)?,
    }
    if !skipped.is_empty() {
        writeln!(
            err,
            "note: {} rows with n = 0, 4 (mod 8) above the LP cap and above {} omitted",
            skipped.len(),
            search::ME_SWEEP_LIMIT
        )?;
    }
    Ok(0)
}
