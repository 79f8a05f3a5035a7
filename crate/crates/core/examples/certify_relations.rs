//! Solves BPDN and the Dantzig selector on one instance, certifies both and
//! checks the relations between them: the BPDN optimum is DS-feasible, the
//! DS solution has the smaller `‖β‖₁` and the BPDN solution the smaller
//! residual.
//!
//! `cargo run --release --example certify_relations -- [n p T seed]`

use sparsebench::bench::{run_solver, SolverSettings};
use sparsebench::certify::{certify, DEFAULT_TOL};
use sparsebench::model::{generate_instance, DEFAULT_LAMBDA, DEFAULT_SIGMA};

fn main() -> sparsebench::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (n, p, t, seed) = match args[..] {
        [n, p, t, seed] => (n, p, t, seed as u64),
        _ => (120, 512, 20, 1),
    };
    let inst = generate_instance(n, p, t, DEFAULT_SIGMA, DEFAULT_LAMBDA, seed)?;
    let settings = SolverSettings::default();
    let bpdn = run_solver(&inst, "ipm-ds3", &settings)?;
    let ds = run_solver(&inst, "ipm-ds", &settings)?;

    let report = certify(&inst, &[&bpdn, &ds], DEFAULT_TOL)?;
    for s in &report.solutions {
        println!("{} ({:?}): objective {:.10e}", s.solver, s.kind, s.objective);
        for c in &s.checks {
            println!(
                "  {:<22} {:>12.3e} <= {:.3e}  {}",
                c.name,
                c.value,
                c.limit,
                if c.pass { "pass" } else { "FAIL" }
            );
        }
    }
    if let Some(c) = &report.cross_check {
        println!("BPDN DS-violation        {:.3e}", c.bpdn_ds_violation);
        println!("|b_BPDN|_1 - |b_DS|_1    {:.6e}", c.l1_margin);
        println!("|r_DS|^2/2 - |r_BPDN|^2/2 {:.6e}", c.residual_margin);
    }
    println!("all checks pass: {}", report.pass);
    Ok(())
}
