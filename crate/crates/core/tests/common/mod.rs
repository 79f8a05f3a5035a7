//! Brute-force oracles for tiny instances, written against nalgebra so they
//! share no code with the solvers they check.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sparsebench::model::{generate_instance, ProblemInstance};

pub fn to_na(inst: &ProblemInstance) -> (DMatrix<f64>, DVector<f64>) {
    let x = DMatrix::from_fn(inst.n, inst.p, |i, j| inst.x.get(i, j));
    (x, DVector::from_column_slice(&inst.y))
}

/// Calls `f` on every size-`k` subset of `0..n`, in lexicographic order.
pub fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), &mut f);
}

/// Optimal Dantzig-selector value `min ‖β‖₁ s.t. ‖Xᵀ(y − Xβ)‖∞ ≤ λ`.
///
/// With `G = XᵀX` of rank at most `n`, an optimal vertex has a support of
/// size `k ≤ n` fixed by `k` active rows `(Gβ)ᵢ = (Xᵀy)ᵢ ± λ`; all such
/// candidates are solved and the feasible ones compared.
pub fn ds_vertex_oracle(inst: &ProblemInstance) -> f64 {
    let (x, y) = to_na(inst);
    let g = x.transpose() * &x;
    let c = x.transpose() * &y;
    let lam = inst.lambda;
    let p = inst.p;
    let feasible = |beta: &DVector<f64>| ((&g * beta) - &c).amax() <= lam * (1.0 + 1e-9) + 1e-12;
    let mut best = f64::INFINITY;
    if feasible(&DVector::zeros(p)) {
        best = 0.0;
    }
    for k in 1..=inst.n.min(p) {
        for_each_subset(p, k, |cols| {
            for_each_subset(p, k, |rows| {
                let m = DMatrix::from_fn(k, k, |a, b| g[(rows[a], cols[b])]);
                let Some(lu) = Some(m.lu()).filter(|lu| lu.is_invertible()) else {
                    return;
                };
                for mask in 0..(1u32 << k) {
                    let rhs = DVector::from_fn(k, |a, _| c[rows[a]] + if mask >> a & 1 == 1 { lam } else { -lam });
                    let Some(sol) = lu.solve(&rhs) else { continue };
                    let mut beta = DVector::zeros(p);
                    for (a, &j) in cols.iter().enumerate() {
                        beta[j] = sol[a];
                    }
                    if feasible(&beta) {
                        best = best.min(beta.lp_norm(1));
                    }
                }
            });
        });
    }
    best
}

/// Optimal BPDN value `min λ‖β‖₁ + ½‖y − Xβ‖²` by enumerating supports and
/// sign patterns: every sign-consistent restricted stationary point is
/// optimal on its orthant face, so the smallest of their values is the
/// optimum.
pub fn bpdn_sign_oracle(inst: &ProblemInstance) -> f64 {
    let (x, y) = to_na(inst);
    let lam = inst.lambda;
    let p = inst.p;
    let objective = |beta: &DVector<f64>| lam * beta.lp_norm(1) + 0.5 * (&y - &x * beta).norm_squared();
    let mut best = objective(&DVector::zeros(p));
    for k in 1..=inst.n.min(p) {
        for_each_subset(p, k, |cols| {
            let s = x.select_columns(cols);
            let lu = (s.transpose() * &s).lu();
            if !lu.is_invertible() {
                return;
            }
            let sty = s.transpose() * &y;
            for mask in 0..(1u32 << k) {
                let signs: Vec<f64> = (0..k).map(|a| if mask >> a & 1 == 1 { -1.0 } else { 1.0 }).collect();
                let rhs = DVector::from_fn(k, |a, _| sty[a] - lam * signs[a]);
                let Some(sol) = lu.solve(&rhs) else { continue };
                if (0..k).all(|a| sol[a] * signs[a] > 0.0) {
                    let mut beta = DVector::zeros(p);
                    for (a, &j) in cols.iter().enumerate() {
                        beta[j] = sol[a];
                    }
                    best = best.min(objective(&beta));
                }
            }
        });
    }
    best
}

/// Tiny instance for oracle comparisons: `n ≤ 4`, `p ≤ 6`, `λ` drawn from
/// `(0.05, 0.95)·‖Xᵀy‖∞`.
pub fn tiny_instance(seed: u64) -> ProblemInstance {
    let mut rng = ChaCha20Rng::seed_from_u64(0x5eed_0000 + seed);
    let n = rng.random_range(2..=4);
    let p = rng.random_range(n + 1..=6);
    let t = rng.random_range(1..=n.min(2));
    let base = generate_instance(n, p, t, 0.05, 1.0, seed).expect("valid tiny sizes");
    let frac = rng.random_range(0.05..0.95);
    base.with_lambda(frac * base.lambda_max())
}

pub fn relative_error(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs().max(f64::MIN_POSITIVE)
}
