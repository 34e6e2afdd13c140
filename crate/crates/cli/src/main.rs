//! `mll`: command-line front end to the mallows-lab experiments.

mod io;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use mallows_lab::asep::{self, AsepParams, DynamicsOptions};
use mallows_lab::curieweiss::{self, CwParams};
use mallows_lab::limits::{blocking_profile, limit_density, limit_density_general, LimitDensityParams};
use mallows_lab::liouville::{liouville_residual, CauchyData, CauchySolver, Profile};
use mallows_lab::meanfield::{fixed_point_residual, gibbs_objective, EulerLagrangeSolver};
use mallows_lab::qstats::{self, MallowsParams, QConvention};
use mallows_lab::sampler::{CellMasses, MallowsSampler};
use mallows_lab::{validate, LabError, MarginalDensity, VERSION};

use io::{emit, read_table, CliError};

#[derive(Parser)]
#[command(name = "mll", version, about = "Mallows permutations and their mean-field limit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Finite-size pressure, or the n → ∞ limit when --n is omitted.
    Pressure {
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Exact Mallows samples with q = 1 - β/n, one row per (sample, position).
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Averaged binned empirical measure against the cell masses of u.
    Empirical {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        bins: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The limit density u (or the profile ρ) on a K × K grid of [0, 1]².
    Density {
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long)]
        grid: usize,
        #[arg(long)]
        profile: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Picard solution of the Liouville Cauchy problem.
    Pde {
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long)]
        grid: usize,
        #[arg(long, requires = "psi")]
        phi: Option<PathBuf>,
        #[arg(long, requires = "phi")]
        psi: Option<PathBuf>,
        #[arg(long)]
        l1: Option<f64>,
        #[arg(long)]
        l2: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Euler–Lagrange fixed point with prescribed marginals.
    El {
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long)]
        grid: usize,
        #[arg(long)]
        f: Option<PathBuf>,
        #[arg(long)]
        g: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Occupation profile of push-forward samples.
    AsepProfile {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time-averaged occupation profile of the exclusion dynamics.
    AsepDynamics {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Curie–Weiss pressure, magnetization and Burgers residual.
    Cw {
        #[arg(long = "N", visible_alias = "n")]
        n: usize,
        #[arg(long)]
        t: f64,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        /// Grid step of the Burgers check on [0, t] × [x - 2, x + 2].
        #[arg(long, default_value_t = 0.01)]
        grid: f64,
    },
    /// Runs the acceptance criteria and reports each one.
    Validate {
        #[arg(long)]
        quick: bool,
        /// Run a single criterion.
        #[arg(long)]
        criterion: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        return report(e);
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => report(e),
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("MLL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("MLL_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn report(e: CliError) -> ExitCode {
    println!("{}", e.to_json());
    ExitCode::from(e.exit_code())
}

fn print_json(v: &Value) {
    println!("{v}");
}

fn run(cmd: Command) -> Result<ExitCode, CliError> {
    match cmd {
        Command::Pressure { beta, n } => {
            let v = match n {
                Some(n) => {
                    let p = qstats::pressure_finite(&MallowsParams::new(n, beta)?)?;
                    json!({ "version": VERSION, "n": n, "beta": beta, "pressure": p.value })
                }
                None => {
                    let p = qstats::pressure_limit(beta);
                    json!({ "version": VERSION, "n": "limit", "beta": beta, "pressure": p.value })
                }
            };
            print_json(&v);
        }
        Command::Sample { n, beta, count, seed, out } => {
            let sampler = MallowsSampler::from_params(&MallowsParams::new(n, beta)?, QConvention::Lin)?;
            let mut csv = String::from("sample_id,position,value\n");
            for (id, p) in sampler.sample_many(count, seed).iter().enumerate() {
                for (pos, v) in p.image().iter().enumerate() {
                    writeln!(csv, "{id},{},{v}", pos + 1).expect("string write");
                }
            }
            emit(out.as_deref(), &csv)?;
        }
        Command::Empirical { n, beta, samples, bins, seed, out } => {
            if samples == 0 {
                return Err(LabError::invalid("need at least one sample").into());
            }
            let sampler = MallowsSampler::from_params(&MallowsParams::new(n, beta)?, QConvention::Lin)?;
            let emp = sampler.sample_histogram(samples, bins, seed)?;
            let exact = CellMasses::from_density(bins, |x, y| limit_density(x, y, beta));
            let mut csv = String::from("x_bin,y_bin,empirical_mass,limit_mass,abs_error\n");
            for a in 0..bins {
                for b in 0..bins {
                    let (e, l) = (emp.get(a, b), exact.get(a, b));
                    writeln!(csv, "{a},{b},{e},{l},{}", (e - l).abs()).expect("string write");
                }
            }
            emit(out.as_deref(), &csv)?;
        }
        Command::Density { beta, grid, profile, out } => {
            if grid < 2 {
                return Err(CliError::Usage("--grid must be at least 2".into()));
            }
            if !beta.is_finite() {
                return Err(CliError::Usage("--beta must be finite".into()));
            }
            let mut csv = String::from(if profile { "x,y,rho\n" } else { "x,y,u\n" });
            let h = 1.0 / (grid - 1) as f64;
            for i in 0..grid {
                for j in 0..grid {
                    let (x, y) = (i as f64 * h, j as f64 * h);
                    let v = if profile { blocking_profile(x, y, beta) } else { limit_density(x, y, beta) };
                    writeln!(csv, "{x},{y},{v}").expect("string write");
                }
            }
            emit(out.as_deref(), &csv)?;
        }
        Command::Pde { beta, grid, phi, psi, l1, l2, out } => {
            let data = match (phi, psi) {
                (Some(a), Some(b)) => {
                    let pa = table_profile(&a, l1)?;
                    let pb = table_profile(&b, l2)?;
                    CauchyData::new(pa, pb)?
                }
                _ => CauchyData::constant(1.0, l1.unwrap_or(1.0), l2.unwrap_or(1.0))?,
            };
            let sol = CauchySolver::new(beta, grid).solve(&data)?;
            let res = liouville_residual(&sol.u, beta);
            let mut csv = String::from("x,y,u,residual\n");
            for i in 0..sol.u.nx() {
                for j in 0..sol.u.ny() {
                    writeln!(csv, "{},{},{},{}", sol.u.x(i), sol.u.y(j), sol.u.get(i, j), res.get(i, j))
                        .expect("string write");
                }
            }
            emit(out.as_deref(), &csv)?;
        }
        Command::El { beta, grid, f, g, out, summary } => {
            let fm = marginal_from(f.as_deref())?;
            let gm = marginal_from(g.as_deref())?;
            let sol = EulerLagrangeSolver::new(beta, grid).solve(&fm, &gm)?;
            let closed = LimitDensityParams::new(beta, fm.clone(), gm.clone())?;
            let mut csv = String::from("x,y,u,closed_form,abs_error\n");
            for (x, y, u) in sol.u.nodes() {
                let c = limit_density_general(x, y, &closed);
                writeln!(csv, "{x},{y},{u},{c},{}", (u - c).abs()).expect("string write");
            }
            let gibbs = gibbs_objective(&sol.u, &fm, &gm, beta)?;
            let (residual, _) = fixed_point_residual(&sol.u, &fm, &gm, beta);
            let s = json!({
                "version": VERSION,
                "beta": beta,
                "grid": grid,
                "iterations": sol.iterations,
                "final_residual": residual,
                "last_change": sol.last_change,
                "marginal_error": sol.marginal_error,
                "max_abs_error": sol.u.sup_error_against(|x, y| limit_density_general(x, y, &closed)),
                "objective": gibbs.objective,
                "entropy": gibbs.entropy,
                "energy": gibbs.energy,
            });
            emit(out.as_deref(), &csv)?;
            match (summary, out.is_some()) {
                (Some(path), _) => emit(Some(&path), &format!("{s}\n"))?,
                (None, true) => print_json(&s),
                (None, false) => eprintln!("{s}"),
            }
        }
        Command::AsepProfile { n, beta, k, samples, seed, out } => {
            let params = AsepParams::new(n, k, beta)?;
            let est = asep::profile_monte_carlo(&params, samples, seed)?;
            emit(out.as_deref(), &profile_csv(&est))?;
        }
        Command::AsepDynamics { n, beta, k, t, seed, out } => {
            let params = AsepParams::new(n, k, beta)?;
            let run = asep::simulate_dynamics(&params, t, seed, DynamicsOptions::default())?;
            emit(out.as_deref(), &profile_csv(&run.profile))?;
        }
        Command::Cw { n, t, x, grid } => {
            if !(grid > 0.0 && grid.is_finite()) {
                return Err(CliError::Usage("--grid must be a positive step".into()));
            }
            let p = CwParams::new(n, t, x)?;
            let hs = if t > 0.0 { Some(curieweiss::cw_pressure_hs(&p)?) } else { None };
            let steps = |lo: f64, hi: f64| -> Vec<f64> {
                let m = ((hi - lo) / grid).round() as usize;
                (0..=m).map(|i| lo + i as f64 * grid).collect()
            };
            let res = curieweiss::burgers_residual(n, &steps(0.0, t), &steps(x - 2.0, x + 2.0))?;
            print_json(&json!({
                "version": VERSION,
                "N": n,
                "t": t,
                "x": x,
                "pressure_exact": curieweiss::cw_pressure_exact(&p),
                "pressure_hs": hs,
                "magnetization": curieweiss::cw_magnetization(&p),
                "burgers_residual_max": res.max_abs,
                "burgers_grid": { "step": grid, "t": [0.0, t], "x": [x - 2.0, x + 2.0] },
            }));
        }
        Command::Validate { quick, criterion, out } => {
            let report = match criterion {
                Some(id) => {
                    let r = validate::run_criterion(id)
                        .ok_or_else(|| CliError::Usage(format!("unknown criterion {id}")))?;
                    let passed = usize::from(r.passed);
                    validate::ValidationReport {
                        version: VERSION,
                        mode: if quick { "quick" } else { "full" },
                        passed,
                        failed: 1 - passed,
                        criteria: vec![r],
                    }
                }
                None => validate::run_all(quick),
            };
            let text = serde_json::to_string_pretty(&report).expect("serializable report");
            emit(out.as_deref(), &format!("{text}\n"))?;
            if report.failed > 0 {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn profile_csv(est: &asep::ProfileEstimate) -> String {
    let mut csv = String::from("site,frequency,stderr,rho_limit\n");
    for (i, ((f, s), r)) in est.frequency.iter().zip(&est.stderr).zip(&est.rho_limit).enumerate() {
        writeln!(csv, "{},{f},{s},{r}", i + 1).expect("string write");
    }
    csv
}

fn table_profile(path: &std::path::Path, length: Option<f64>) -> Result<Profile, CliError> {
    let (coords, values) = read_table(path)?;
    let end = *coords.last().expect("read_table returns two rows or more");
    if let Some(l) = length {
        if (l - end).abs() > 1e-12 * l.max(1.0) {
            return Err(CliError::Usage(format!(
                "{} ends at {end}, which does not match the requested length {l}",
                path.display()
            )));
        }
    }
    Ok(Profile::from_table(coords, values)?)
}

fn marginal_from(path: Option<&std::path::Path>) -> Result<MarginalDensity, CliError> {
    let Some(path) = path else {
        return Ok(MarginalDensity::uniform());
    };
    let (coords, values) = read_table(path)?;
    let h = 1.0 / (coords.len() - 1) as f64;
    if coords.iter().enumerate().any(|(k, &c)| (c - k as f64 * h).abs() > 1e-9) {
        return Err(CliError::Usage(format!(
            "{}: marginal tables must be equispaced on [0, 1]",
            path.display()
        )));
    }
    Ok(MarginalDensity::from_table(values)?)
}
