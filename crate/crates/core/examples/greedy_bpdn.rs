//! Greedy active-set BPDN over several seeds: iteration count against `T`,
//! column removals, and whether the recovered support covers the true one
//! with matching signs.
//!
//! `cargo run --release --example greedy_bpdn -- [n p T seeds]`

use sparsebench::certify::{certify_solution, DEFAULT_TOL};
use sparsebench::greedy::{greedy_solve, DEFAULT_TOL as GREEDY_TOL};
use sparsebench::model::{generate_instance, DEFAULT_LAMBDA, DEFAULT_SIGMA};

fn main() -> sparsebench::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (n, p, t, seeds) = match args[..] {
        [n, p, t, seeds] => (n, p, t, seeds as u64),
        _ => (120, 512, 20, 5),
    };
    println!(
        "{:>4} {:>5} {:>8} {:>6} {:>14} {:>9} {:>6}",
        "seed", "itns", "removals", "|S|", "objective", "contains", "cert"
    );
    for seed in 1..=seeds {
        let inst = generate_instance(n, p, t, DEFAULT_SIGMA, DEFAULT_LAMBDA, seed)?;
        let sol = greedy_solve(&inst, inst.lambda, GREEDY_TOL, n.min(p))?;
        let contains = inst
            .support_true
            .iter()
            .all(|&j| sol.beta[j] != 0.0 && sol.beta[j].signum() == inst.beta_true[j].signum());
        let cert = certify_solution(&inst, &sol, DEFAULT_TOL)?;
        println!(
            "{seed:>4} {:>5} {:>8} {:>6} {:>14.8e} {contains:>9} {:>6}",
            sol.iterations,
            sol.diagnostics["removals"],
            sol.support_size(0.0),
            sol.objective,
            if cert.passed() { "pass" } else { "FAIL" },
        );
    }
    Ok(())
}
