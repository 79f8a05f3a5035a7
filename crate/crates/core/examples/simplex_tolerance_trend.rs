//! Dual simplex on DS2 at loosening tolerances: pivots, final `|S|` and the
//! number of small entries in `β` all fall as `tol` grows.
//!
//! `cargo run --release --example simplex_tolerance_trend -- [n p T seed] [dantzig] [no-flips]`

use std::time::Instant;

use sparsebench::model::{generate_instance, DEFAULT_LAMBDA, DEFAULT_SIGMA};
use sparsebench::simplex::{dual_simplex_solve, solution_profile, Pricing, SimplexOptions};

fn main() -> sparsebench::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (n, p, t, seed) = match args[..] {
        [n, p, t, seed] => (n, p, t, seed as u64),
        _ => (240, 1024, 40, 1),
    };
    let flags: Vec<String> = std::env::args().skip(1).collect();
    let pricing = if flags.iter().any(|f| f == "dantzig") {
        Pricing::Dantzig
    } else {
        Pricing::SteepestEdge
    };
    let bound_flipping = !flags.iter().any(|f| f == "no-flips");
    let inst = generate_instance(n, p, t, DEFAULT_SIGMA, DEFAULT_LAMBDA, seed)?;
    println!("n={n} p={p} T={t} seed={seed} pricing={pricing:?} bound_flipping={bound_flipping}");
    println!(
        "{:>8} {:>7} {:>5} {:>7} {:>12} {:>9}",
        "tol", "itns", "|S|", "small", "violation", "ms"
    );
    for tol in [0.1, 0.01, 0.001] {
        let start = Instant::now();
        let sol = dual_simplex_solve(
            &inst,
            &SimplexOptions {
                pricing,
                bound_flipping,
                ..SimplexOptions::with_tol(tol)
            },
        )?;
        let ms = start.elapsed().as_secs_f64() * 1e3;
        let (_, small) = solution_profile(&sol, 0.05);
        println!(
            "{tol:>8} {:>7} {:>5} {:>7} {:>12.3e} {ms:>9.1}",
            sol.iterations,
            sol.diagnostics["basis_support"],
            small.len(),
            sol.diagnostics["ds_violation"],
        );
    }
    Ok(())
}
