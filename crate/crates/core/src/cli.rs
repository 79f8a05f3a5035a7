//! Command-line front end: `gen`, `solve`, `certify`, `bench`, `profile`.
//!
//! Exit codes are a stable contract: 0 success, 1 usage or I/O error,
//! 2 solver non-convergence or solver error, 3 certification failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bench::{self, SolverSettings, SuiteSpec, TableFormat, DEFAULT_PROFILE_THRESHOLD, SOLVERS};
use crate::certify::{self, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::model::{generate_instance, ProblemInstance, Solution, DEFAULT_LAMBDA, DEFAULT_SIGMA};
use crate::simplex::Pricing;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NONCONVERGENCE: i32 = 2;
pub const EXIT_CERTIFICATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "sparsebench",
    version,
    about = "Dantzig selector and BPDN solvers with certification and benchmarks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random instance with orthonormal rows.
    Gen(GenArgs),
    /// Solve an instance with one solver.
    Solve(SolveArgs),
    /// Check optimality of one solution, or cross-check a BPDN/DS pair.
    Certify(CertifyArgs),
    /// Run an experiment suite and emit one record per run.
    Bench(BenchArgs),
    /// Dump significant and small solution entries as two CSV blocks.
    Profile(ProfileArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub t: usize,
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    pub sigma: f64,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, env = "SPARSEBENCH_SEED", default_value_t = 1)]
    pub seed: u64,
    /// Instance JSON path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(SOLVERS))]
    pub solver: String,
    /// Simplex termination or greedy dual-feasibility tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Run interior-point solvers for exactly this many iterations.
    #[arg(long)]
    pub fixed_iters: Option<usize>,
    #[arg(long, value_parser = parse_pricing)]
    pub pricing: Option<Pricing>,
    /// Solution JSON path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub solution: PathBuf,
    /// Second solution; BPDN and DS solutions are cross-checked.
    #[arg(long)]
    pub solution2: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Report JSON path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Preset name (`table1`, `table2`) or path to a suite JSON file.
    #[arg(long)]
    pub suite: String,
    /// Replaces the suite's seed list with this single seed.
    #[arg(long, env = "SPARSEBENCH_SEED")]
    pub seed: Option<u64>,
    #[arg(long, default_value = "csv", value_parser = ["csv", "markdown", "jsonl"])]
    pub format: String,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[arg(long)]
    pub solution: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PROFILE_THRESHOLD)]
    pub threshold: f64,
    /// Output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_pricing(s: &str) -> std::result::Result<Pricing, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

/// Runs one command. `Err` covers usage, I/O and parse failures.
pub fn execute(command: &Command) -> Result<i32> {
    match command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve(a),
        Command::Certify(a) => certify_cmd(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Profile(a) => profile(a),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn with_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

fn gen(a: &GenArgs) -> Result<i32> {
    let inst = generate_instance(a.n, a.p, a.t, a.sigma, a.lambda, a.seed)?;
    emit(a.out.as_deref(), &with_newline(inst.to_json()?))?;
    let summary = format!(
        "n={} p={} T={} max|X'y|={:e}",
        inst.n,
        inst.p,
        inst.t(),
        inst.lambda_max()
    );
    if a.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(EXIT_OK)
}

fn solve(a: &SolveArgs) -> Result<i32> {
    let inst = ProblemInstance::read_json(&a.instance)?;
    let mut settings = SolverSettings {
        tol: a.tol,
        max_iters: a.max_iters,
        fixed_iters: a.fixed_iters,
        ..Default::default()
    };
    if let Some(p) = a.pricing {
        settings.pricing = p;
    }
    let sol = match bench::run_solver(&inst, &a.solver, &settings) {
        Ok(sol) => sol,
        Err(e @ Error::InvalidParameter(_)) => return Err(e),
        Err(e) => {
            eprintln!("{}: {e}", a.solver);
            return Ok(EXIT_NONCONVERGENCE);
        }
    };
    emit(a.out.as_deref(), &with_newline(sol.to_json()?))?;
    eprintln!(
        "{}: {} after {} iterations, objective {:e}",
        sol.solver_name, sol.status, sol.iterations, sol.objective
    );
    Ok(if sol.status.is_success() {
        EXIT_OK
    } else {
        EXIT_NONCONVERGENCE
    })
}

fn certify_cmd(a: &CertifyArgs) -> Result<i32> {
    let inst = ProblemInstance::read_json(&a.instance)?;
    let first = Solution::read_json(&a.solution)?;
    let second = a.solution2.as_deref().map(Solution::read_json).transpose()?;
    let mut sols = vec![&first];
    sols.extend(second.as_ref());
    let report = certify::certify(&inst, &sols, a.tol)?;
    emit(a.out.as_deref(), &with_newline(report.to_json()?))?;
    if report.pass {
        Ok(EXIT_OK)
    } else {
        for name in report.failed_checks() {
            eprintln!("failed: {name}");
        }
        Ok(EXIT_CERTIFICATION)
    }
}

fn load_suite(arg: &str) -> Result<SuiteSpec> {
    match SuiteSpec::preset(arg) {
        Ok(spec) => Ok(spec),
        Err(_) if Path::new(arg).exists() => SuiteSpec::from_json(&std::fs::read_to_string(arg)?),
        Err(_) => Err(Error::InvalidParameter(format!(
            "suite {arg:?} is neither a preset (table1, table2) nor a readable file"
        ))),
    }
}

fn bench_cmd(a: &BenchArgs) -> Result<i32> {
    let mut spec = load_suite(&a.suite)?;
    if let Some(seed) = a.seed {
        spec.seeds = vec![seed];
    }
    let records = match a.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("cannot build a pool of {jobs} workers: {e}")))?
            .install(|| bench::run_suite(&spec))?,
        None => bench::run_suite(&spec)?,
    };
    let text = match a.format.as_str() {
        "jsonl" => bench::emit_jsonl(&records)?,
        f => bench::emit_table(&records, f.parse::<TableFormat>()?)?,
    };
    emit(a.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

fn profile(a: &ProfileArgs) -> Result<i32> {
    if !(a.threshold > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold must be positive (got {})",
            a.threshold
        )));
    }
    let sol = Solution::read_json(&a.solution)?;
    emit(a.out.as_deref(), &bench::emit_profile(&sol, a.threshold))?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_map_to_exit_one() {
        assert_eq!(run(["sparsebench"]), EXIT_USAGE);
        assert_eq!(run(["sparsebench", "gen", "--n", "4"]), EXIT_USAGE);
        assert_eq!(
            run(["sparsebench", "gen", "--n", "4", "--p", "8", "--t", "1", "--bogus"]),
            EXIT_USAGE
        );
        assert_eq!(
            run(["sparsebench", "solve", "--instance", "x.json", "--solver", "nope"]),
            EXIT_USAGE
        );
    }

    #[test]
    fn help_is_success() {
        assert_eq!(run(["sparsebench", "--help"]), EXIT_OK);
    }

    #[test]
    fn exactly_one_subcommand() {
        let cli = Cli::try_parse_from(["sparsebench", "profile", "--solution", "s.json"]).unwrap();
        match cli.command {
            Command::Profile(p) => assert_eq!(p.threshold, DEFAULT_PROFILE_THRESHOLD),
            other => panic!("parsed {other:?}"),
        }
        assert!(Cli::try_parse_from(["sparsebench", "profile", "gen"]).is_err());
    }

    #[test]
    fn pricing_names() {
        let cli = Cli::try_parse_from([
            "sparsebench",
            "solve",
            "--instance",
            "i.json",
            "--solver",
            "simplex-ds2",
            "--pricing",
            "dantzig",
        ])
        .unwrap();
        let Command::Solve(s) = cli.command else { panic!() };
        assert_eq!(s.pricing, Some(Pricing::Dantzig));
    }

    #[test]
    fn unknown_suite_is_an_error() {
        assert!(load_suite("no-such-preset-or-file").is_err());
        assert_eq!(load_suite("table2").unwrap(), SuiteSpec::table2());
    }
}
