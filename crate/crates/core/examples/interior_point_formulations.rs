//! The four interior-point formulations on one instance: the `(DS)` box form,
//! DS1, DS2 and the BPDN quadratic program DS3. Each solve is certified and
//! the BPDN / DS relations are checked between the DS3 and box optima.
//!
//! `cargo run --release --example interior_point_formulations -- [n p T seed]`

use std::time::Instant;

use sparsebench::bench::{run_solver, SolverSettings};
use sparsebench::certify::{certify, certify_solution, DEFAULT_TOL};
use sparsebench::model::{generate_instance, DEFAULT_LAMBDA, DEFAULT_SIGMA};

fn main() -> sparsebench::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (n, p, t, seed) = match args[..] {
        [n, p, t, seed] => (n, p, t, seed as u64),
        _ => (120, 512, 20, 1),
    };
    let inst = generate_instance(n, p, t, DEFAULT_SIGMA, DEFAULT_LAMBDA, seed)?;
    println!("n={n} p={p} T={t} seed={seed} lambda={}", inst.lambda);
    println!(
        "{:>8} {:>5} {:>10} {:>14} {:>10} {:>10} {:>6} {:>9}",
        "solver", "itns", "status", "objective", "gap", "ds_viol", "cert", "ms"
    );
    let mut sols = Vec::new();
    for solver in ["ipm-ds", "ipm-ds1", "ipm-ds2", "ipm-ds3"] {
        for fixed in [Some(15), None] {
            let settings = SolverSettings {
                fixed_iters: fixed,
                ..Default::default()
            };
            let start = Instant::now();
            let sol = run_solver(&inst, solver, &settings)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            let rep = certify_solution(&inst, &sol, DEFAULT_TOL)?;
            println!(
                "{solver:>8} {:>5} {:>10} {:>14.8} {:>10.2e} {:>10.2e} {:>6} {ms:>9.1}",
                sol.iterations,
                sol.status.as_str(),
                rep.objective,
                rep.gap.unwrap_or(f64::NAN),
                rep.ds_violation,
                if rep.passed() { "pass" } else { "fail" },
            );
            if fixed.is_none() {
                sols.push(sol);
            }
        }
    }
    let report = certify(&inst, &[&sols[3], &sols[0]], DEFAULT_TOL)?;
    if let Some(c) = &report.cross_check {
        println!(
            "BPDN optimum DS violation {:.2e}; l1 margin {:.3e}; residual margin {:.3e}; {}",
            c.bpdn_ds_violation,
            c.l1_margin,
            c.residual_margin,
            if c.passed() { "relations hold" } else { "relations fail" }
        );
    }
    Ok(())
}
