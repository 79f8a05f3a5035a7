//! The dense kernels the solvers are built on: Householder QR for least
//! squares, Cholesky for normal equations and partial-pivoting LU for
//! unsymmetric systems, each checked by its residual.
//!
//! `cargo run --release --example dense_kernels -- [m n]`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sparsebench::kernels::{chol_factor, lu_factor, norm_inf, qr_factor, solve_chol, DenseMatrix};

fn main() -> sparsebench::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (m, n) = match args[..] {
        [m, n] => (m, n),
        _ => (200, 60),
    };
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let a = DenseMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
    let b: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();

    let qr = qr_factor(&a)?;
    let x = qr.solve_least_squares(&b)?;
    let r: Vec<f64> = b.iter().zip(a.matvec(&x)).map(|(u, v)| u - v).collect();
    println!(
        "QR least squares ({m}x{n}):   max |A'r|       = {:.3e}",
        norm_inf(&a.matvec_t(&r))
    );

    let g = a.gram();
    let rhs = a.matvec_t(&b);
    let y = solve_chol(&chol_factor(&g)?, &rhs)?;
    let diff: Vec<f64> = x.iter().zip(&y).map(|(u, v)| u - v).collect();
    println!(
        "Cholesky normal equations:   max |x_qr - x_ch| = {:.3e}",
        norm_inf(&diff)
    );

    let sq = DenseMatrix::from_fn(n, n, |i, j| a.get(i, j) + if i == j { 1.0 } else { 0.0 });
    let z = lu_factor(&sq)?.solve(&rhs);
    let res: Vec<f64> = rhs.iter().zip(sq.matvec(&z)).map(|(u, v)| u - v).collect();
    println!(
        "LU ({n}x{n}):                  max |Mz - c|    = {:.3e}",
        norm_inf(&res)
    );
    Ok(())
}
