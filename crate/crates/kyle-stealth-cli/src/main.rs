mod config;
mod output;

use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kyle_stealth::calibration::{self, CalibrationStats, ConditionPair, ReplicationReport};
use kyle_stealth::equilibrium::convergence_report;
use kyle_stealth::model::validate_assumptions;
use kyle_stealth::{solve_finite, solve_limiting, Error, Execution, SolverOptions};

use config::{parse_f64_list, parse_n_list, parse_pair, ConfigError, RunConfig};
use output::{fmt_sig, price_svg, Table};

const EXIT_CONFIG: u8 = 2;
const EXIT_ASSUMPTION: u8 = 3;
const EXIT_SOLVER: u8 = 4;
const EXIT_GOLDEN: u8 = 5;

#[derive(Parser)]
#[command(name = "kyle-stealth", version, about = "Insider-trading equilibria with legal risk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// flat key = value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// output directory; CSV goes to stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// residual tolerance for the finite-N solver
    #[arg(long)]
    tol: Option<f64>,
    /// run every solve on the current thread
    #[arg(long)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check the hazard and penalty assumptions
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Solve the finite-population equilibrium
    Solve {
        #[command(flatten)]
        common: Common,
        /// also report the rescaled limiting strategy
        #[arg(long)]
        compare_limit: bool,
    },
    /// Solve the large-population limit
    Limit {
        #[command(flatten)]
        common: Common,
    },
    /// Measure convergence of finite equilibria to the limit
    Converge {
        #[command(flatten)]
        common: Common,
        /// comma-separated population sizes
        #[arg(long)]
        n_list: Option<String>,
    },
    /// Estimate population size and stealth index from volume statistics
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// built-in statistics: one or two (ignored when the config has stats.* keys)
        #[arg(long)]
        experiment: Option<String>,
        /// comma-separated civil multipliers
        #[arg(long)]
        chi: Option<String>,
        /// moment-condition pair: insider+total, insider+ratio or total+ratio
        #[arg(long)]
        pair: Option<String>,
    },
    /// Recompute the calibration tables and figure data
    Replicate {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Assumption(String),
    Solver(String),
    Golden(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Assumption(_) => EXIT_ASSUMPTION,
            Failure::Solver(_) => EXIT_SOLVER,
            Failure::Golden(_) => EXIT_GOLDEN,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Assumption(m) | Failure::Solver(m) | Failure::Golden(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Assumption(_) => Failure::Assumption(e.to_string()),
            Error::InvalidParameter(_) | Error::MissingStatistic(_) => Failure::Config(e.to_string()),
            _ => Failure::Solver(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(format!("i/o error: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Config(format!("csv error: {e}"))
    }
}

type Outcome = Result<(), Failure>;

fn load(common: &Common) -> Result<RunConfig, Failure> {
    match &common.config {
        Some(path) => Ok(RunConfig::load(path)?),
        None => Err(Failure::Config("config error: --config is required for this command".into())),
    }
}

fn solver_options(cfg: &RunConfig, common: &Common) -> Result<SolverOptions, Failure> {
    let mut opts = cfg.solver(common.tol)?;
    if common.sequential {
        opts.execution = Execution::Sequential;
    }
    Ok(opts)
}

fn ensure_out(common: &Common) -> Result<Option<&Path>, Failure> {
    if let Some(dir) = &common.out {
        std::fs::create_dir_all(dir)?;
    }
    Ok(common.out.as_deref())
}

/// Writes the table to `dir/name` or, without an output directory, to stdout.
fn emit(table: &Table, out: Option<&Path>, name: &str) -> Outcome {
    match out {
        Some(dir) => table.write_file(&dir.join(name))?,
        None => table.write_to(io::stdout().lock())?,
    }
    Ok(())
}

/// Console summary: stdout when the CSV goes to a file, stderr otherwise.
macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        if $out.is_some() { println!($($arg)*) } else { eprintln!($($arg)*) }
    };
}

fn check_model(cfg: &RunConfig) -> Result<kyle_stealth::ModelParams, Failure> {
    let params = cfg.model()?;
    let report = validate_assumptions(&params);
    if !report.all_passed() {
        return Err(Failure::Assumption(format!("assumption check failed:\n{report}")));
    }
    Ok(params)
}

fn cmd_validate(common: &Common) -> Outcome {
    let cfg = load(common)?;
    let params = cfg.model()?;
    let report = validate_assumptions(&params);
    print!("{report}");
    println!("fitted theta: {}", fmt_sig(report.fitted_theta));
    if let Some(a) = report.fitted_alpha {
        println!("fitted alpha: {}", fmt_sig(a));
    }
    println!("penalty bounded: {}", report.c0_bounded);
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::Assumption("assumptions violated".into()))
    }
}

fn cmd_solve(common: &Common, compare_limit: bool) -> Outcome {
    let cfg = load(common)?;
    let opts = solver_options(&cfg, common)?;
    let params = check_model(&cfg)?;
    let out = ensure_out(common)?;
    let sol = solve_finite(&params, &opts)?;
    say!(out, "N = {}, gamma = {}", params.n_pop, fmt_sig(sol.gamma));
    say!(out, "Z* = ({}, {})", fmt_sig(sol.strategy.z0), fmt_sig(sol.strategy.z1));
    say!(out, "zeta* = {}", fmt_sig(sol.zeta_star));
    say!(out, "residuals: F0 = {:e}, G1 = {:e}", sol.residual_f0, sol.residual_g1);
    say!(out, "roots found: {}", sol.all_roots.len());
    if compare_limit {
        if sol.gamma >= 0.5 {
            eprintln!("warning: stealth index is 1/2; no rescaled limiting comparison");
        } else {
            let lim = solve_limiting(&params)?;
            let ng = (params.n_pop as f64).powf(sol.gamma);
            let z = lim.strategy_scaled.scaled(ng);
            say!(out, "N^gamma Z~ = ({}, {}) [{}]", fmt_sig(z.z0), fmt_sig(z.z1), lim.method);
        }
    }
    let mut t = Table::new(&["n_pop", "z0", "z1", "zeta", "residual_f0", "residual_g1"]);
    t.push(vec![
        params.n_pop.to_string(),
        fmt_sig(sol.strategy.z0),
        fmt_sig(sol.strategy.z1),
        fmt_sig(sol.zeta_star),
        fmt_sig(sol.residual_f0),
        fmt_sig(sol.residual_g1),
    ]);
    emit(&t, out, "solve.csv")
}

fn cmd_limit(common: &Common) -> Outcome {
    let cfg = load(common)?;
    let params = check_model(&cfg)?;
    let out = ensure_out(common)?;
    let lim = solve_limiting(&params)?;
    say!(out, "gamma = {}, method = {}", fmt_sig(lim.gamma), lim.method);
    say!(out, "Z~ = ({}, {})", fmt_sig(lim.strategy_scaled.z0), fmt_sig(lim.strategy_scaled.z1));
    for w in &lim.warnings {
        eprintln!("warning: {w}");
    }
    let mut t =
        Table::new(&["gamma", "method", "z0_scaled", "z1_scaled", "price_constant", "residual0", "residual1"]);
    t.push(vec![
        fmt_sig(lim.gamma),
        lim.method.to_string(),
        fmt_sig(lim.strategy_scaled.z0),
        fmt_sig(lim.strategy_scaled.z1),
        lim.price_constant.map(fmt_sig).unwrap_or_default(),
        fmt_sig(lim.residuals[0]),
        fmt_sig(lim.residuals[1]),
    ]);
    emit(&t, out, "limit.csv")
}

fn cmd_converge(common: &Common, n_list: Option<&str>) -> Outcome {
    let cfg = load(common)?;
    let opts = solver_options(&cfg, common)?;
    let ns = match n_list {
        Some(s) => parse_n_list(s)?,
        None => cfg.n_list()?.unwrap_or_else(|| vec![1_000, 10_000, 100_000, 1_000_000, 10_000_000]),
    };
    let params = check_model(&cfg)?;
    let out = ensure_out(common)?;
    let report = convergence_report(&params, &ns, &opts)?;
    for (n, e) in &report.failures {
        eprintln!("N = {n}: {e}");
    }
    if report.rows.is_empty() {
        return Err(Failure::Solver("no population size could be solved".into()));
    }
    say!(
        out,
        "fitted slopes: {} / {} (theory {}), eps slope {}",
        fmt_sig(report.fitted_slope[0]),
        fmt_sig(report.fitted_slope[1]),
        fmt_sig(report.rows[0].bound_exponent),
        fmt_sig(report.epsilon_slope)
    );
    let mut t = Table::new(&["n", "z0_scaled", "z1_scaled", "err0", "err1", "theory_exponent", "eps_n"]);
    for r in &report.rows {
        t.push(vec![
            r.n.to_string(),
            fmt_sig(r.z_scaled.z0),
            fmt_sig(r.z_scaled.z1),
            fmt_sig(r.abs_error[0]),
            fmt_sig(r.abs_error[1]),
            fmt_sig(r.bound_exponent),
            fmt_sig(r.epsilon),
        ]);
    }
    emit(&t, out, "converge.csv")?;
    if report.failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Solver(format!("{} population sizes failed", report.failures.len())))
    }
}

const CALIBRATION_HEADER: [&str; 8] =
    ["pair", "chi", "n_hat", "n_hat_rounded", "gamma_hat", "mu_hat", "implied_prosecution", "warnings"];

fn calibration_row(pair: ConditionPair, chi: f64, r: &calibration::CalibrationResult) -> Vec<String> {
    vec![
        pair.label().to_string(),
        fmt_sig(chi),
        fmt_sig(r.n_hat),
        r.n_hat_rounded.to_string(),
        fmt_sig(r.gamma_hat),
        fmt_sig(r.mu_hat),
        fmt_sig(r.implied_prosecution),
        r.warnings.join("; "),
    ]
}

fn cmd_calibrate(common: &Common, experiment: Option<&str>, chi: Option<&str>, pair: Option<&str>) -> Outcome {
    let cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let stats = if cfg.has("stats.insider_volume") {
        cfg.stats()?
    } else {
        match experiment.unwrap_or("one") {
            "one" | "1" => CalibrationStats::experiment_one(),
            "two" | "2" => CalibrationStats::experiment_two(),
            other => return Err(Failure::Config(format!("config error: unknown experiment {other:?}"))),
        }
    };
    let chis = match chi {
        Some(s) => parse_f64_list(s)?,
        None => cfg.calibration_chis()?.unwrap_or_else(|| vec![1.0, 2.0, 3.0]),
    };
    let requested = match pair {
        Some(s) => Some(parse_pair(s)?),
        None => cfg.calibration_pair()?,
    };
    // without an explicit request, every pair whose statistics are present
    let pairs: Vec<ConditionPair> = match requested {
        Some(p) => vec![p],
        None => ConditionPair::ALL
            .into_iter()
            .filter(|p| match p {
                ConditionPair::InsiderTotal => stats.total_volume.is_some(),
                ConditionPair::InsiderRatio => stats.volume_ratio.is_some(),
                ConditionPair::TotalRatio => stats.total_volume.is_some() && stats.volume_ratio.is_some(),
            })
            .collect(),
    };
    let out = ensure_out(common)?;
    let mut t = Table::new(&CALIBRATION_HEADER);
    for &p in &pairs {
        for &c in &chis {
            let r = calibration::calibrate(&stats, c, p)?;
            say!(out, "{} chi={}: N = {} gamma = {}", p.label(), fmt_sig(c), r.n_hat_rounded, fmt_sig(r.gamma_hat));
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            t.push(calibration_row(p, c, &r));
        }
    }
    emit(&t, out, "calibrate.csv")
}

fn replication_tables(report: &ReplicationReport) -> Vec<(&'static str, Table)> {
    let mut t2 = Table::new(&CALIBRATION_HEADER);
    for (pair, cell) in &report.table2 {
        t2.push(calibration_row(*pair, cell.chi, &cell.result));
    }
    let mut t5 = Table::new(&CALIBRATION_HEADER);
    for cell in &report.table5 {
        t5.push(calibration_row(cell.result.conditions_used, cell.chi, &cell.result));
    }
    let header = [
        "label",
        "n_pop",
        "gamma",
        "finite_z0",
        "finite_z1",
        "limiting_z0",
        "limiting_z1",
        "prosecution_finite",
        "prosecution_limiting",
    ];
    let row = |c: &calibration::StrategyComparison| {
        vec![
            c.label.clone(),
            c.n_pop.to_string(),
            fmt_sig(c.gamma),
            fmt_sig(c.finite.z0),
            fmt_sig(c.finite.z1),
            fmt_sig(c.limiting.z0),
            fmt_sig(c.limiting.z1),
            fmt_sig(c.prosecution_finite),
            fmt_sig(c.prosecution_limiting),
        ]
    };
    let mut t3 = Table::new(&header);
    for c in &report.table3 {
        t3.push(row(c));
    }
    let mut t6 = Table::new(&header);
    if let Some(c) = &report.table6 {
        t6.push(row(c));
    }
    let mut checks = Table::new(&["name", "expected", "actual", "tolerance", "passed"]);
    for c in &report.checks {
        checks.push(vec![
            c.name.clone(),
            fmt_sig(c.expected),
            fmt_sig(c.actual),
            fmt_sig(c.tolerance),
            c.passed().to_string(),
        ]);
    }
    vec![("table2.csv", t2), ("table3.csv", t3), ("table5.csv", t5), ("table6.csv", t6), ("checks.csv", checks)]
}

fn cmd_replicate(common: &Common) -> Outcome {
    let cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let opts = solver_options(&cfg, common)?;
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("replication"));
    std::fs::create_dir_all(&out)?;
    let report = calibration::replicate_tables(&opts);
    for (name, table) in replication_tables(&report) {
        table.write_file(&out.join(name))?;
    }
    for fig in &report.figures {
        let mut t = Table::new(&["y", "p_n_of_y", "p_const"]);
        for &(y, pn) in &fig.points {
            t.push(vec![fmt_sig(y), fmt_sig(pn), fmt_sig(fig.p_const)]);
        }
        t.write_file(&out.join(format!("{}.csv", fig.name)))?;
        std::fs::write(out.join(format!("{}.svg", fig.name)), price_svg(&fig.name, &fig.points, fig.p_const))?;
    }
    for c in &report.checks {
        println!(
            "{:<40} expected {:>12} got {:>14}  {}",
            c.name,
            fmt_sig(c.expected),
            fmt_sig(c.actual),
            if c.passed() { "ok" } else { "MISMATCH" }
        );
    }
    println!("written to {}", out.display());
    if !report.errors.is_empty() {
        return Err(Failure::Solver(report.errors.join("\n")));
    }
    let bad = report.checks.iter().filter(|c| !c.passed()).count();
    if bad > 0 {
        return Err(Failure::Golden(format!("{bad} published values not reproduced within tolerance")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate { common } => cmd_validate(common),
        Command::Solve { common, compare_limit } => cmd_solve(common, *compare_limit),
        Command::Limit { common } => cmd_limit(common),
        Command::Converge { common, n_list } => cmd_converge(common, n_list.as_deref()),
        Command::Calibrate { common, experiment, chi, pair } => {
            cmd_calibrate(common, experiment.as_deref(), chi.as_deref(), pair.as_deref())
        }
        Command::Replicate { common } => cmd_replicate(common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message());
            ExitCode::from(f.code())
        }
    }
}
