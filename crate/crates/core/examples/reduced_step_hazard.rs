//! Compares each box-form interior-point step with the same step recovered
//! through the `n x n` reduction `I + (X D34 Xᵀ)(X D12⁻¹ Xᵀ)`. The reduction
//! needs `D12⁻¹`, and its discrepancy grows as `D12` entries collapse near the
//! solution, while the direct `p x p` path keeps converging.
//!
//! `cargo run --release --example reduced_step_hazard -- [n p T seed]`

use sparsebench::formulations::DsBoxProblem;
use sparsebench::ipm::{ipm_ds_solve_observed, reduced_step_experiment, IpmOptions};
use sparsebench::model::{generate_instance, DEFAULT_LAMBDA, DEFAULT_SIGMA};

fn main() -> sparsebench::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (n, p, t, seed) = match args[..] {
        [n, p, t, seed] => (n, p, t, seed as u64),
        _ => (120, 512, 20, 1),
    };
    let inst = generate_instance(n, p, t, DEFAULT_SIGMA, DEFAULT_LAMBDA, seed)?;
    let ds = DsBoxProblem::from_instance(&inst);
    let mut reports = Vec::new();
    let (sol, trace) = ipm_ds_solve_observed(&ds, &IpmOptions::default(), |state| {
        reports.push(reduced_step_experiment(&ds, state));
    })?;
    println!(
        "n={n} p={p} T={t} seed={seed}: {} after {} iterations",
        sol.status, sol.iterations
    );
    println!(
        "{:>4} {:>14} {:>12} {:>12} {:>12}",
        "itn", "discrepancy", "cond(D12)", "min D12", "mu"
    );
    for (rep, it) in reports.iter().zip(&trace) {
        let disc = rep
            .relative_discrepancy
            .map_or("singular".to_string(), |d| format!("{d:.3e}"));
        println!(
            "{:>4} {disc:>14} {:>12.3e} {:>12.3e} {:>12.3e}",
            rep.iteration, rep.d12_condition, rep.min_d12, it.mu
        );
    }
    Ok(())
}
