//! Command-line front end: parse graph/query inputs, run computations and
//! sweeps, emit CSV/JSON, and run the oracle cross-check.
//!
//! Exit codes: 0 success, 1 I/O or parse errors (and failed oracle checks),
//! 2 instability, 3 assumption violations, 4 decomposition failures. Errors
//! print a one-line JSON object to standard error.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::prelude::*;
use serde_json::json;

use crate::analysis;
use crate::closed_form::{performance, Dynamics, OutputKind, PerformanceQuery};
use crate::error::{Error, Result};
use crate::graph::{
    deviation_from_average_output, parse_family, FamilyHint, Laplacian, OutputMatrix,
    WeightedDigraph,
};
use crate::oracle;
use crate::spectral::{decompose, import_jordan, InputSpec, SpectralData};
use crate::stability::GainSet;

#[derive(Parser, Debug)]
#[command(
    name = "digraph-perf",
    version,
    about = "L2/H2 performance of single- and double-integrator consensus networks over digraphs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate one performance query and print the result as JSON.
    Compute(QueryArgs),
    /// Compare a normal digraph against its undirected counterpart.
    Compare(QueryArgs),
    /// Sweep the hop count ω of the cyclic family; emits CSV.
    SweepOmega(SweepOmegaArgs),
    /// Sweep γ_p for a digraph and its undirected counterpart; emits CSV.
    SweepGamma(SweepGammaArgs),
    /// Tabulate star vs complete deviation-from-average performance.
    StarComplete(StarCompleteArgs),
    /// Cross-check the closed form against the Gramian and RK4 oracles.
    OracleCheck(OracleCheckArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DynamicsArg {
    First,
    Second,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputArg {
    Position,
    Velocity,
}

#[derive(Args, Debug)]
pub struct QueryArgs {
    /// Graph source: family shorthand (cycle:n,d,omega | star:n | path:n |
    /// complete:n) or a path to graph JSON {"n":..,"edges":[[i,j,w],..]}.
    #[arg(long)]
    pub graph: String,
    /// Optional Jordan-data JSON for defective graphs:
    /// {"eigenvalues":[[re,im],..],"block_sizes":[..],"R":[[[re,im],..],..]}.
    #[arg(long)]
    pub jordan: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub dynamics: DynamicsArg,
    #[arg(long, value_enum, default_value = "position")]
    pub output: OutputArg,
    /// Gains "kp,kd,gp,gd"; required for second-order dynamics.
    #[arg(long)]
    pub gains: Option<String>,
    /// Output matrix: "dav" or a path to a JSON row-major matrix.
    #[arg(long = "C", default_value = "dav")]
    pub c: String,
    /// Input: "identity", "w0:FILE" (JSON vector) or "sigma0:FILE"
    /// (JSON matrix).
    #[arg(long, default_value = "identity")]
    pub input: String,
    /// Write the result here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepOmegaArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum)]
    pub dynamics: DynamicsArg,
    #[arg(long, value_enum, default_value = "position")]
    pub output: OutputArg,
    #[arg(long)]
    pub gains: Option<String>,
    #[arg(long = "C", default_value = "dav")]
    pub c: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepGammaArgs {
    #[arg(long)]
    pub graph: String,
    #[arg(long)]
    pub kp: f64,
    #[arg(long)]
    pub kd: f64,
    #[arg(long)]
    pub gd: f64,
    /// γ_p grid "start:stop:count".
    #[arg(long = "gamma-p")]
    pub gamma_p: String,
    #[arg(long, value_enum, default_value = "position")]
    pub output: OutputArg,
    #[arg(long = "C", default_value = "dav")]
    pub c: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StarCompleteArgs {
    #[arg(long, default_value_t = 2)]
    pub n_min: usize,
    #[arg(long)]
    pub n_max: usize,
    #[arg(long, value_enum)]
    pub dynamics: DynamicsArg,
    #[arg(long, value_enum, default_value = "position")]
    pub output: OutputArg,
    #[arg(long)]
    pub gains: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OracleCheckArgs {
    #[command(flatten)]
    pub query: QueryArgs,
    /// Closed-form vs Gramian relative tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// RK4 step size.
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Initial RK4 window; extends automatically.
    #[arg(long, default_value_t = 10.0)]
    pub sim_horizon: f64,
}

/// Parse argv and run; returns the process exit code.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap would exit 2 on usage errors; the contract here is 1
            let _ = e.print();
            return if e.exit_code() == 0 { 0 } else { 1 };
        }
    };
    run(cli)
}

/// Dispatch a parsed command; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::Compute(args) => cmd_compute(&args),
        Command::Compare(args) => cmd_compare(&args),
        Command::SweepOmega(args) => cmd_sweep_omega(&args),
        Command::SweepGamma(args) => cmd_sweep_gamma(&args),
        Command::StarComplete(args) => cmd_star_complete(&args),
        Command::OracleCheck(args) => cmd_oracle_check(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let msg = json!({ "error": error_kind(&e), "message": e.to_string() });
            eprintln!("{msg}");
            error_exit_code(&e)
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidGraph(_) => "invalid_graph",
        Error::BadOmega(_) => "bad_omega",
        Error::BadSize(_) => "bad_size",
        Error::NotWeightBalanced(_) => "not_weight_balanced",
        Error::NoReachableNode => "no_reachable_node",
        Error::DefectiveOrIllConditioned(_) => "defective_or_ill_conditioned",
        Error::ResidualTooLarge(_) => "residual_too_large",
        Error::SingularR(_) => "singular_r",
        Error::AssumptionViolated(_) => "assumption_violated",
        Error::GainAssumptionViolated(_) => "gain_assumption_violated",
        Error::OutputAssumptionViolated(_) => "output_assumption_violated",
        Error::NotPsd(_) => "not_psd",
        Error::DivergentIntegral(_) => "divergent_integral",
        Error::RepeatedRoots(_) => "repeated_roots",
        Error::DistinctRoots(_) => "distinct_roots",
        Error::Unstable(_) => "unstable",
        Error::NotNormal(_) => "not_normal",
        Error::ShapeMismatch(_) => "shape_mismatch",
        Error::LyapunovIllConditioned(_) => "lyapunov_ill_conditioned",
        Error::HorizonExceeded(_) => "horizon_exceeded",
        Error::NoComplexObservableMode => "no_complex_observable_mode",
        Error::InvalidQuery(_) => "invalid_query",
        Error::Numerical(_) => "numerical",
        Error::Io(_) => "io",
        Error::Parse(_) => "parse",
    }
}

fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Unstable(_) | Error::DivergentIntegral(_) | Error::HorizonExceeded(_) => 2,
        Error::AssumptionViolated(_)
        | Error::GainAssumptionViolated(_)
        | Error::OutputAssumptionViolated(_) => 3,
        Error::NoReachableNode
        | Error::DefectiveOrIllConditioned(_)
        | Error::ResidualTooLarge(_)
        | Error::SingularR(_) => 4,
        _ => 1,
    }
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn parse_gains(raw: &Option<String>, dynamics: Dynamics) -> Result<Option<GainSet>> {
    match (dynamics, raw) {
        (Dynamics::FirstOrder, _) => Ok(None),
        (Dynamics::SecondOrder, None) => Err(Error::Parse(
            "second-order dynamics requires --gains kp,kd,gp,gd".into(),
        )),
        (Dynamics::SecondOrder, Some(text)) => {
            let parts: Vec<&str> = text.split(',').collect();
            if parts.len() != 4 {
                return Err(Error::Parse(format!(
                    "--gains expects kp,kd,gp,gd; got {text:?}"
                )));
            }
            let mut vals = [0.0; 4];
            for (slot, part) in vals.iter_mut().zip(&parts) {
                *slot = part
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad gain value {part:?}")))?;
            }
            Ok(Some(GainSet::new(vals[0], vals[1], vals[2], vals[3])?))
        }
    }
}

fn load_graph(source: &str) -> Result<(Laplacian, Option<FamilyHint>)> {
    let is_family = source
        .split_once(':')
        .map(|(name, _)| matches!(name, "cycle" | "star" | "path" | "complete"))
        .unwrap_or(false);
    if is_family {
        let (l, hint) = parse_family(source)?;
        Ok((l, Some(hint)))
    } else {
        let text = std::fs::read_to_string(source)?;
        let g = WeightedDigraph::from_json(&text)?;
        Ok((crate::graph::build_laplacian(&g)?, None))
    }
}

fn load_output_matrix(spec: &str, n: usize) -> Result<OutputMatrix> {
    if spec == "dav" {
        deviation_from_average_output(n)
    } else {
        let text = std::fs::read_to_string(spec)?;
        let c = OutputMatrix::from_json(&text)?;
        if c.n() != n {
            return Err(Error::ShapeMismatch(format!(
                "output matrix has {} columns but the graph has {n} nodes",
                c.n()
            )));
        }
        Ok(c)
    }
}

fn load_input(spec: &str, n: usize) -> Result<InputSpec> {
    if spec == "identity" {
        return Ok(InputSpec::IdentityCovariance);
    }
    if let Some(path) = spec.strip_prefix("w0:") {
        let text = std::fs::read_to_string(path)?;
        let v: Vec<f64> =
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("w0 json: {e}")))?;
        if v.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "w0 has length {}, expected {n}",
                v.len()
            )));
        }
        return Ok(InputSpec::Deterministic(Array1::from_vec(v)));
    }
    if let Some(path) = spec.strip_prefix("sigma0:") {
        let text = std::fs::read_to_string(path)?;
        let rows: Vec<Vec<f64>> =
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("sigma0 json: {e}")))?;
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::ShapeMismatch(format!("sigma0 must be {n}x{n}")));
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let m = Array2::from_shape_vec((n, n), flat)
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        return Ok(InputSpec::Covariance(m));
    }
    Err(Error::Parse(format!(
        "input must be \"identity\", \"w0:FILE\" or \"sigma0:FILE\"; got {spec:?}"
    )))
}

fn load_jordan(path: &PathBuf, l: &Laplacian) -> Result<SpectralData> {
    #[derive(serde::Deserialize)]
    struct JordanJson {
        eigenvalues: Vec<(f64, f64)>,
        block_sizes: Vec<usize>,
        #[serde(rename = "R")]
        r: Vec<Vec<(f64, f64)>>,
    }
    let text = std::fs::read_to_string(path)?;
    let raw: JordanJson =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("jordan json: {e}")))?;
    let n = l.n();
    if raw.r.len() != n || raw.r.iter().any(|row| row.len() != n) {
        return Err(Error::ShapeMismatch(format!("R must be {n}x{n}")));
    }
    let mut r = Array2::zeros((n, n));
    for (i, row) in raw.r.iter().enumerate() {
        for (j, &(re, im)) in row.iter().enumerate() {
            r[[i, j]] = num_complex::Complex64::new(re, im);
        }
    }
    let eigenvalues = raw
        .eigenvalues
        .iter()
        .map(|&(re, im)| num_complex::Complex64::new(re, im))
        .collect();
    import_jordan(l, eigenvalues, raw.block_sizes, r)
}

struct LoadedQuery {
    l: Laplacian,
    s: SpectralData,
    query: PerformanceQuery,
}

fn load_query(args: &QueryArgs) -> Result<LoadedQuery> {
    let (l, hint) = load_graph(&args.graph)?;
    let dynamics = match args.dynamics {
        DynamicsArg::First => Dynamics::FirstOrder,
        DynamicsArg::Second => Dynamics::SecondOrder,
    };
    let output = match args.output {
        OutputArg::Position => OutputKind::Position,
        OutputArg::Velocity => OutputKind::Velocity,
    };
    if dynamics == Dynamics::FirstOrder && output == OutputKind::Velocity {
        return Err(Error::Parse(
            "velocity output requires --dynamics second".into(),
        ));
    }
    let gains = parse_gains(&args.gains, dynamics)?;
    let c = load_output_matrix(&args.c, l.n())?;
    let input = load_input(&args.input, l.n())?;
    let s = match &args.jordan {
        Some(path) => load_jordan(path, &l)?,
        None => decompose(&l, hint)?,
    };
    Ok(LoadedQuery {
        l,
        s,
        query: PerformanceQuery { dynamics, output, c, gains, input },
    })
}

fn cmd_compute(args: &QueryArgs) -> Result<i32> {
    let lq = load_query(args)?;
    let result = performance(&lq.l, &lq.s, &lq.query)?;
    let text = serde_json::to_string_pretty(&result).expect("result serialization cannot fail");
    write_output(&args.out, &format!("{text}\n"))?;
    Ok(0)
}

fn cmd_compare(args: &QueryArgs) -> Result<i32> {
    let lq = load_query(args)?;
    let report = analysis::compare_directed_undirected(&lq.l, &lq.query)?;
    let text = serde_json::to_string_pretty(&report).expect("report serialization cannot fail");
    write_output(&args.out, &format!("{text}\n"))?;
    Ok(0)
}

fn cmd_sweep_omega(args: &SweepOmegaArgs) -> Result<i32> {
    let dynamics = match args.dynamics {
        DynamicsArg::First => Dynamics::FirstOrder,
        DynamicsArg::Second => Dynamics::SecondOrder,
    };
    let output = match args.output {
        OutputArg::Position => OutputKind::Position,
        OutputArg::Velocity => OutputKind::Velocity,
    };
    let gains = parse_gains(&args.gains, dynamics)?;
    let c = load_output_matrix(&args.c, args.n)?;
    let rows = analysis::omega_sweep(args.n, gains.as_ref(), dynamics, output, &c)?;
    write_output(&args.out, &analysis::omega_sweep_csv(&rows))?;
    Ok(0)
}

fn cmd_sweep_gamma(args: &SweepGammaArgs) -> Result<i32> {
    let (l, _) = load_graph(&args.graph)?;
    let l_prime = l.hermitian_part()?;
    let output = match args.output {
        OutputArg::Position => OutputKind::Position,
        OutputArg::Velocity => OutputKind::Velocity,
    };
    let c = load_output_matrix(&args.c, l.n())?;
    let grid = parse_grid(&args.gamma_p)?;
    let rows =
        analysis::gamma_sweep(&l, &l_prime, args.kp, args.kd, args.gd, &grid, output, &c)?;
    write_output(&args.out, &analysis::gamma_sweep_csv(&rows))?;
    Ok(0)
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!(
            "--gamma-p expects start:stop:count, got {text:?}"
        )));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|_| Error::Parse(format!("bad grid start {:?}", parts[0])))?;
    let stop: f64 = parts[1]
        .parse()
        .map_err(|_| Error::Parse(format!("bad grid stop {:?}", parts[1])))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| Error::Parse(format!("bad grid count {:?}", parts[2])))?;
    if count == 0 {
        return Err(Error::Parse("grid count must be positive".into()));
    }
    Ok(analysis::linspace(start, stop, count))
}

fn cmd_star_complete(args: &StarCompleteArgs) -> Result<i32> {
    if args.n_min < 2 || args.n_min > args.n_max {
        return Err(Error::Parse(format!(
            "need 2 <= n-min <= n-max, got {} and {}",
            args.n_min, args.n_max
        )));
    }
    let dynamics = match args.dynamics {
        DynamicsArg::First => Dynamics::FirstOrder,
        DynamicsArg::Second => Dynamics::SecondOrder,
    };
    let output = match args.output {
        OutputArg::Position => OutputKind::Position,
        OutputArg::Velocity => OutputKind::Velocity,
    };
    let gains = parse_gains(&args.gains, dynamics)?;
    let rows =
        analysis::star_vs_complete(args.n_min..=args.n_max, gains.as_ref(), dynamics, output)?;
    write_output(&args.out, &analysis::star_vs_complete_csv(&rows))?;
    Ok(0)
}

fn cmd_oracle_check(args: &OracleCheckArgs) -> Result<i32> {
    let lq = load_query(&args.query)?;
    let closed = performance(&lq.l, &lq.s, &lq.query)?.value;
    let ss = oracle::assemble(
        &lq.l,
        lq.query.gains.as_ref(),
        lq.query.dynamics,
        lq.query.output,
        &lq.query.c,
    )?;
    let deflated = oracle::deflate(&ss, &lq.s)?;
    let n = lq.l.n();
    let (gramian, rk4) = match &lq.query.input {
        InputSpec::IdentityCovariance => {
            let g = oracle::h2_norm(&deflated)?;
            // H2 by simulation: sum the impulse responses over the
            // coordinate directions
            let mut total = 0.0;
            for i in 0..n {
                let mut w0 = Array1::<f64>::zeros(n);
                w0[i] = 1.0;
                total += oracle::simulate_impulse(&ss, &w0, args.dt, args.sim_horizon)?;
            }
            (g, total)
        }
        InputSpec::Deterministic(w0) => {
            let g = oracle::l2_response(&deflated, w0)?;
            let sim = oracle::simulate_impulse(&ss, w0, args.dt, args.sim_horizon)?;
            (g, sim)
        }
        InputSpec::Covariance(_) => {
            return Err(Error::InvalidQuery(
                "oracle-check supports identity or deterministic inputs".into(),
            ))
        }
    };
    let rel = |a: f64, b: f64| (a - b).abs() / (1.0_f64).max(a.abs().max(b.abs()));
    let rel_cg = rel(closed, gramian);
    let rel_cr = rel(closed, rk4);
    let rel_gr = rel(gramian, rk4);
    let pass = rel_cg <= args.tol;
    let report = json!({
        "closed_form": closed,
        "gramian": gramian,
        "rk4": rk4,
        "rel_closed_gramian": rel_cg,
        "rel_closed_rk4": rel_cr,
        "rel_gramian_rk4": rel_gr,
        "tolerance": args.tol,
        "pass": pass,
    });
    write_output(
        &args.query.out,
        &format!("{}\n", serde_json::to_string_pretty(&report).expect("json")),
    )?;
    Ok(if pass { 0 } else { 1 })
}
