//! Generates a test instance, checks `XXᵀ = I` and the `±1` true support,
//! and writes the instance JSON.
//!
//! `cargo run --release --example generate_instance -- [n p T seed] [out.json]`

use sparsebench::kernels::DenseMatrix;
use sparsebench::model::{generate_instance, ProblemInstance, DEFAULT_LAMBDA, DEFAULT_SIGMA};

fn main() -> sparsebench::Result<()> {
    let raw: Vec<String> = std::env::args().skip(1).collect();
    let nums: Vec<usize> = raw.iter().filter_map(|a| a.parse().ok()).collect();
    let (n, p, t, seed) = match nums[..] {
        [n, p, t, seed] => (n, p, t, seed as u64),
        _ => (120, 512, 20, 1),
    };
    let out = raw.iter().find(|a| a.ends_with(".json"));

    let inst = generate_instance(n, p, t, DEFAULT_SIGMA, DEFAULT_LAMBDA, seed)?;
    let orth = inst.x.aat().sub(&DenseMatrix::identity(n)).max_abs();
    let signs_ok = inst.support_true.iter().all(|&j| inst.beta_true[j].abs() == 1.0);
    println!("n={n} p={p} T={} seed={seed}", inst.t());
    println!("max |XX' - I|      = {orth:.3e}");
    println!("support entries ±1 = {signs_ok}");
    println!(
        "max |X'y|          = {:.6e} (lambda = {})",
        inst.lambda_max(),
        inst.lambda
    );

    if let Some(path) = out {
        inst.write_json(path)?;
        let back = ProblemInstance::read_json(path)?;
        println!("wrote {path}; round trip exact = {}", back == inst);
    }
    Ok(())
}
