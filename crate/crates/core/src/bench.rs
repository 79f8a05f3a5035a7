//! Experiment harness: instance families × solvers × tolerances.
//!
//! Runs inside a suite are independent and may execute in parallel; records
//! come back in job order, which is sorted by (size, seed, solver, budget,
//! tol). Only `wall_time_ms` depends on the machine.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::bpdn_kkt_residual;
use crate::error::{Error, Result};
use crate::formulations::{build_ds1, build_ds2, build_ds3, DsBoxProblem};
use crate::greedy::{self, greedy_solve};
use crate::ipm::{ipm_ds_solve, ipm_solve, IpmOptions};
use crate::kernels::{norm1, norm_inf};
use crate::model::{ds_feasibility_violation, generate_instance, ProblemInstance, Solution};
use crate::simplex::{dual_simplex_solve, solution_profile, Pricing, SimplexOptions};

/// Solver labels accepted by [`run_solver`], in record order.
pub const SOLVERS: [&str; 6] = ["ipm-ds", "ipm-ds1", "ipm-ds2", "ipm-ds3", "greedy", "simplex-ds2"];

/// The `(n, p, T)` ladder of dense orthogonal test problems.
pub const SIZE_LADDER: [(usize, usize, usize); 6] = [
    (120, 512, 20),
    (240, 1024, 40),
    (360, 1536, 60),
    (480, 2048, 80),
    (720, 3072, 120),
    (960, 4096, 160),
];
/// Ladder rows run unless a suite opts into the large sizes.
pub const DEFAULT_LADDER_ROWS: usize = 4;
/// Entries with `|βⱼ|` at most this count as zero in `support_size`.
pub const SUPPORT_TOL: f64 = 1e-8;

/// Interior-point `(feasibility, complementarity)` tolerances tried in
/// order for the BPDN QP. Near-zero interior entries carry sign errors of
/// order `μ / |βⱼ|`, so the KKT residual needs complementarity far below the
/// default; feasibility is floored near `1e-10` by cancellation in the
/// normal equations. Looser rungs are used when the factorization breaks down.
pub const BPDN_IPM_TOLS: [(f64, f64); 3] = [(1e-9, 1e-12), (1e-9, 1e-11), (1e-9, 1e-10)];

/// Per-solve settings shared by the CLI and the harness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Simplex termination tolerance or greedy dual-feasibility tolerance.
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    /// Fixed interior-point budget.
    pub fixed_iters: Option<usize>,
    pub pricing: Pricing,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: None,
            max_iters: None,
            fixed_iters: None,
            pricing: SimplexOptions::default().pricing,
        }
    }
}

pub fn formulation_of(solver: &str) -> &'static str {
    match solver {
        "ipm-ds" => "ds",
        "ipm-ds1" => "ds1",
        "ipm-ds2" | "simplex-ds2" => "ds2",
        "ipm-ds3" => "ds3",
        "greedy" => "bpdn",
        _ => "unknown",
    }
}

/// Runs one named solver on `inst` at `inst.lambda`.
pub fn run_solver(inst: &ProblemInstance, solver: &str, settings: &SolverSettings) -> Result<Solution> {
    let ipm_opts = || {
        let mut o = IpmOptions::default();
        if let Some(k) = settings.max_iters {
            o.max_iters = k;
        }
        o.fixed_iters = settings.fixed_iters;
        o
    };
    match solver {
        "ipm-ds" => ipm_ds_solve(&DsBoxProblem::from_instance(inst), &ipm_opts()),
        "ipm-ds1" => ipm_solve(inst, &build_ds1(inst), &ipm_opts()),
        "ipm-ds2" => ipm_solve(inst, &build_ds2(inst), &ipm_opts()),
        "ipm-ds3" => {
            let sp = build_ds3(inst);
            if settings.fixed_iters.is_some() {
                return ipm_solve(inst, &sp, &ipm_opts());
            }
            let mut last = None;
            for (feas, comp) in BPDN_IPM_TOLS {
                let mut o = ipm_opts();
                o.tol_feas = feas;
                o.tol_comp = comp;
                match ipm_solve(inst, &sp, &o) {
                    Ok(sol) => return Ok(sol.with_diagnostic("ipm_tol", comp)),
                    Err(e @ Error::IllConditioned { .. }) => {
                        log::debug!("ipm-ds3 at complementarity tol {comp:e}: {e}");
                        last = Some(e);
                    }
                    Err(e) => return Err(e),
                }
            }
            Err(last.expect("at least one tolerance tried"))
        }
        "greedy" => greedy_solve(
            inst,
            inst.lambda,
            settings.tol.unwrap_or(greedy::DEFAULT_TOL),
            settings.max_iters.unwrap_or(inst.n.min(inst.p)),
        ),
        "simplex-ds2" => {
            let mut o = SimplexOptions {
                pricing: settings.pricing,
                ..Default::default()
            };
            if let Some(t) = settings.tol {
                o.tol = t;
            }
            if let Some(k) = settings.max_iters {
                o.max_iters = k;
            }
            dual_simplex_solve(inst, &o)
        }
        other => Err(Error::InvalidParameter(format!(
            "unknown solver {other:?}; expected one of {SOLVERS:?}"
        ))),
    }
}

/// Fixed interior-point iteration budget reported next to converged runs.
pub const FIXED_IPM_BUDGET: usize = 15;

/// Experiment description, read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteSpec {
    pub sizes: Vec<(usize, usize, usize)>,
    pub solvers: Vec<String>,
    /// Simplex tolerances; other solvers run once per instance.
    pub tols: Vec<f64>,
    /// Interior-point budgets: `null` runs to convergence, `k` runs exactly k.
    pub ipm_budgets: Vec<Option<usize>>,
    pub seeds: Vec<u64>,
    pub lambda: f64,
    pub sigma: f64,
    pub pricing: Pricing,
    /// Permit ladder sizes beyond the default cap.
    pub include_large: bool,
}

impl Default for SuiteSpec {
    fn default() -> Self {
        SuiteSpec {
            sizes: vec![SIZE_LADDER[0]],
            solvers: SOLVERS.iter().map(|s| s.to_string()).collect(),
            tols: vec![1e-6],
            ipm_budgets: vec![None],
            seeds: vec![1],
            lambda: crate::model::DEFAULT_LAMBDA,
            sigma: crate::model::DEFAULT_SIGMA,
            pricing: SimplexOptions::default().pricing,
            include_large: false,
        }
    }
}

impl SuiteSpec {
    /// Interior-point and greedy solvers on the default ladder rows, with
    /// interior-point runs at a fixed 15 iterations and to convergence.
    pub fn table1() -> Self {
        SuiteSpec {
            sizes: SIZE_LADDER[..DEFAULT_LADDER_ROWS].to_vec(),
            ipm_budgets: vec![Some(FIXED_IPM_BUDGET), None],
            solvers: ["ipm-ds", "ipm-ds1", "ipm-ds2", "ipm-ds3", "greedy"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            ..Default::default()
        }
    }

    /// Dual simplex at three loosening tolerances on the second ladder row.
    pub fn table2() -> Self {
        SuiteSpec {
            sizes: vec![SIZE_LADDER[1]],
            solvers: vec!["simplex-ds2".into()],
            tols: vec![0.1, 0.01, 0.001],
            ..Default::default()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "table1" => Ok(Self::table1()),
            "table2" => Ok(Self::table2()),
            other => Err(Error::InvalidParameter(format!("unknown suite preset {other:?}"))),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(&self) -> Result<()> {
        let cap = SIZE_LADDER[DEFAULT_LADDER_ROWS - 1];
        for &(n, p, t) in &self.sizes {
            if !self.include_large && (n > cap.0 || p > cap.1) {
                return Err(Error::InvalidParameter(format!(
                    "size ({n}, {p}, {t}) exceeds the default cap {cap:?}; set include_large"
                )));
            }
        }
        if let Some(s) = self.solvers.iter().find(|s| !SOLVERS.contains(&s.as_str())) {
            return Err(Error::InvalidParameter(format!("unknown solver {s:?}")));
        }
        Ok(())
    }
}

/// One solver-on-instance outcome. Metric fields are empty when the run
/// failed; `status` then carries the error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub n: usize,
    pub p: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub lambda: f64,
    pub seed: u64,
    pub solver_name: String,
    pub formulation: String,
    pub tol: Option<f64>,
    pub iterations: Option<usize>,
    pub support_size: Option<usize>,
    pub objective: Option<f64>,
    pub ds_violation: Option<f64>,
    pub bpdn_kkt: Option<f64>,
    pub l1_norm: Option<f64>,
    pub recovery_error: Option<f64>,
    pub wall_time_ms: f64,
    pub status: String,
    pub fixed_iters: Option<usize>,
    /// Nonzero entries below the profile threshold.
    pub small_entries: Option<usize>,
}

pub const COLUMNS: [&str; 19] = [
    "n",
    "p",
    "T",
    "lambda",
    "seed",
    "solver_name",
    "formulation",
    "tol",
    "iterations",
    "support_size",
    "objective",
    "ds_violation",
    "bpdn_kkt",
    "l1_norm",
    "recovery_error",
    "wall_time_ms",
    "status",
    "fixed_iters",
    "small_entries",
];

/// Threshold separating significant from small entries in profiles.
pub const DEFAULT_PROFILE_THRESHOLD: f64 = 0.05;

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map_or_else(String::new, fmt_f64)
}

fn parse<T: std::str::FromStr>(field: &str, name: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("cannot parse column {name}: {field:?}")))
}

fn parse_opt<T: std::str::FromStr>(field: &str, name: &str) -> Result<Option<T>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse(field, name).map(Some)
    }
}

impl BenchRecord {
    fn fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.p.to_string(),
            self.t.to_string(),
            fmt_f64(self.lambda),
            self.seed.to_string(),
            self.solver_name.clone(),
            self.formulation.clone(),
            fmt_opt_f64(self.tol),
            fmt_opt(self.iterations),
            fmt_opt(self.support_size),
            fmt_opt_f64(self.objective),
            fmt_opt_f64(self.ds_violation),
            fmt_opt_f64(self.bpdn_kkt),
            fmt_opt_f64(self.l1_norm),
            fmt_opt_f64(self.recovery_error),
            fmt_f64(self.wall_time_ms),
            self.status.clone(),
            fmt_opt(self.fixed_iters),
            fmt_opt(self.small_entries),
        ]
    }

    fn from_fields(f: &[&str]) -> Result<Self> {
        if f.len() != COLUMNS.len() {
            return Err(Error::DimensionMismatch {
                context: "bench record columns",
                expected: COLUMNS.len(),
                found: f.len(),
            });
        }
        Ok(BenchRecord {
            n: parse(f[0], "n")?,
            p: parse(f[1], "p")?,
            t: parse(f[2], "T")?,
            lambda: parse(f[3], "lambda")?,
            seed: parse(f[4], "seed")?,
            solver_name: f[5].to_string(),
            formulation: f[6].to_string(),
            tol: parse_opt(f[7], "tol")?,
            iterations: parse_opt(f[8], "iterations")?,
            support_size: parse_opt(f[9], "support_size")?,
            objective: parse_opt(f[10], "objective")?,
            ds_violation: parse_opt(f[11], "ds_violation")?,
            bpdn_kkt: parse_opt(f[12], "bpdn_kkt")?,
            l1_norm: parse_opt(f[13], "l1_norm")?,
            recovery_error: parse_opt(f[14], "recovery_error")?,
            wall_time_ms: parse(f[15], "wall_time_ms")?,
            status: f[16].to_string(),
            fixed_iters: parse_opt(f[17], "fixed_iters")?,
            small_entries: parse_opt(f[18], "small_entries")?,
        })
    }

    /// Same record with the machine-dependent field cleared.
    pub fn without_timing(&self) -> Self {
        BenchRecord {
            wall_time_ms: 0.0,
            ..self.clone()
        }
    }
}

/// Builds the record for a finished (or failed) run, recomputing `r` and `s`
/// to check the solution's own invariants.
pub fn make_record(
    inst: &ProblemInstance,
    solver: &str,
    settings: &SolverSettings,
    outcome: &Result<Solution>,
    wall_time_ms: f64,
) -> BenchRecord {
    let mut rec = BenchRecord {
        n: inst.n,
        p: inst.p,
        t: inst.t(),
        lambda: inst.lambda,
        seed: inst.seed,
        solver_name: solver.to_string(),
        formulation: formulation_of(solver).to_string(),
        tol: settings.tol,
        iterations: None,
        support_size: None,
        objective: None,
        ds_violation: None,
        bpdn_kkt: None,
        l1_norm: None,
        recovery_error: None,
        wall_time_ms,
        status: String::new(),
        fixed_iters: settings.fixed_iters,
        small_entries: None,
    };
    let sol = match outcome {
        Ok(sol) => sol,
        Err(e) => {
            rec.status = format!("error: {e}");
            return rec;
        }
    };
    let r: Vec<f64> = inst
        .y
        .iter()
        .zip(inst.x.matvec(&sol.beta))
        .map(|(a, b)| a - b)
        .collect();
    let s: Vec<f64> = inst.x.matvec_t(&r).into_iter().map(|v| -v).collect();
    let close = |a: &[f64], b: &[f64]| {
        let scale = 1.0 + norm_inf(b);
        a.iter().zip(b).all(|(u, v)| (u - v).abs() <= 1e-12 * scale)
    };
    rec.status = if close(&sol.r, &r) && close(&sol.s, &s) {
        sol.status.as_str().to_string()
    } else {
        "invalid-solution".to_string()
    };
    rec.iterations = Some(sol.iterations);
    rec.support_size = Some(sol.support_size(SUPPORT_TOL));
    rec.objective = Some(sol.objective);
    rec.ds_violation = Some(ds_feasibility_violation(inst, &sol.beta));
    rec.bpdn_kkt = bpdn_kkt_residual(inst, &sol.beta, inst.lambda).ok();
    rec.l1_norm = Some(norm1(&sol.beta));
    rec.recovery_error = Some(
        inst.support_true
            .iter()
            .map(|&j| (sol.beta[j] - inst.beta_true[j]).abs())
            .fold(0.0, f64::max),
    );
    rec.small_entries = Some(solution_profile(sol, DEFAULT_PROFILE_THRESHOLD).1.len());
    rec
}

struct Job {
    size: usize,
    seed: u64,
    solver: String,
    settings: SolverSettings,
}

/// Runs every (instance, solver, budget, tol) combination of `spec`.
pub fn run_suite(spec: &SuiteSpec) -> Result<Vec<BenchRecord>> {
    spec.validate()?;
    if spec.solvers.is_empty() {
        return Ok(Vec::new());
    }
    let instances: Vec<Vec<ProblemInstance>> = spec
        .sizes
        .par_iter()
        .map(|&(n, p, t)| {
            spec.seeds
                .iter()
                .map(|&seed| generate_instance(n, p, t, spec.sigma, spec.lambda, seed))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut jobs = Vec::new();
    for (size, _) in spec.sizes.iter().enumerate() {
        for &seed in &spec.seeds {
            for solver in SOLVERS.iter().filter(|s| spec.solvers.iter().any(|x| x == *s)) {
                let base = SolverSettings {
                    pricing: spec.pricing,
                    ..Default::default()
                };
                let variants: Vec<SolverSettings> = match *solver {
                    "simplex-ds2" => spec
                        .tols
                        .iter()
                        .map(|&t| SolverSettings {
                            tol: Some(t),
                            ..base.clone()
                        })
                        .collect(),
                    s if s.starts_with("ipm") => spec
                        .ipm_budgets
                        .iter()
                        .map(|&b| SolverSettings {
                            fixed_iters: b,
                            ..base.clone()
                        })
                        .collect(),
                    _ => vec![base],
                };
                for settings in variants {
                    jobs.push(Job {
                        size,
                        seed,
                        solver: solver.to_string(),
                        settings,
                    });
                }
            }
        }
    }

    Ok(jobs
        .par_iter()
        .map(|job| {
            let k = spec
                .seeds
                .iter()
                .position(|&s| s == job.seed)
                .expect("job seeds come from the suite");
            let inst = &instances[job.size][k];
            let start = Instant::now();
            let outcome = run_solver(inst, &job.solver, &job.settings);
            let ms = start.elapsed().as_secs_f64() * 1e3;
            log::info!(
                "{} on ({}, {}, {}) seed {}: {:.1} ms",
                job.solver,
                inst.n,
                inst.p,
                inst.t(),
                inst.seed,
                ms
            );
            make_record(inst, &job.solver, &job.settings, &outcome, ms)
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    Markdown,
}

impl std::str::FromStr for TableFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            other => Err(Error::InvalidParameter(format!("unknown table format {other:?}"))),
        }
    }
}

/// Renders records with one header line. Floats carry 17 significant digits.
pub fn emit_table(records: &[BenchRecord], format: TableFormat) -> Result<String> {
    match format {
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(COLUMNS)?;
            for r in records {
                w.write_record(r.fields())?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        TableFormat::Markdown => {
            let mut out = format!("| {} |\n|{}\n", COLUMNS.join(" | "), "---|".repeat(COLUMNS.len()));
            for r in records {
                let cells: Vec<String> = r.fields().into_iter().map(|f| f.replace('|', "\\|")).collect();
                out.push_str(&format!("| {} |\n", cells.join(" | ")));
            }
            Ok(out)
        }
    }
}

/// Parses the CSV form of [`emit_table`].
pub fn parse_table(text: &str) -> Result<Vec<BenchRecord>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers()?.clone();
    if header.iter().ne(COLUMNS.iter().copied()) {
        return Err(Error::InvalidParameter("unexpected bench table header".into()));
    }
    rdr.records()
        .map(|row| {
            let row = row?;
            let fields: Vec<&str> = row.iter().collect();
            BenchRecord::from_fields(&fields)
        })
        .collect()
}

/// One JSON object per line.
pub fn emit_jsonl(records: &[BenchRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

/// Two CSV blocks of `index,value`: entries with `|βⱼ| ≥ threshold`, then
/// the remaining nonzeros. Blocks are separated by a blank line.
pub fn emit_profile(sol: &Solution, threshold: f64) -> String {
    let (big, small) = solution_profile(sol, threshold);
    let block = |title: &str, rows: &[(usize, f64)]| {
        let mut s = format!("# {title}\nindex,value\n");
        for (j, v) in rows {
            s.push_str(&format!("{j},{}\n", fmt_f64(*v)));
        }
        s
    };
    format!(
        "{}\n{}",
        block(&format!("significant |beta_j| >= {threshold}"), &big),
        block(&format!("small 0 < |beta_j| < {threshold}"), &small)
    )
}
