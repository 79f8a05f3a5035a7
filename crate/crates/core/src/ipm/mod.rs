//! Primal–dual interior-point solvers.
//!
//! [`ipm_solve`] handles any [`StandardProblem`](crate::formulations::StandardProblem)
//! through the normal equations `H = A D1 Aᵀ + D2`; [`ipm_ds_solve`] works on
//! the `(DS)` box form and only ever factors the `p x p` matrix
//! `D12 + Xᵀ(X D34 Xᵀ)X`.
//!
//! Both are single-corrector path-following methods: each iteration takes
//! one Newton step on the KKT conditions perturbed to a centering target
//! `sigma * mu`, then backs off to `step_fraction` of the distance to the
//! boundary.

mod box_ds;
mod general;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{chol_factor, chol_factor_replacing, dot, CholFactor, DenseMatrix};

pub use box_ds::{ipm_ds_solve, ipm_ds_solve_observed, reduced_step_experiment, IpmDsState, ReducedStepReport};
pub use general::{ipm_solve, ipm_solve_raw, IpmOutcome};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IpmOptions {
    pub tol_feas: f64,
    pub tol_comp: f64,
    pub max_iters: usize,
    /// Run exactly this many iterations with no convergence test.
    pub fixed_iters: Option<usize>,
    pub sigma_centering: f64,
    pub step_fraction: f64,
    /// Initial diagonal shift `D2`; grown ×10 on Cholesky failure.
    pub regularization: f64,
    /// Matrix-only diagonal for free variables without a quadratic term.
    /// It perturbs the Newton direction, not the residuals, so the fixed
    /// point is unchanged.
    pub free_regularization: f64,
}

impl Default for IpmOptions {
    fn default() -> Self {
        IpmOptions {
            tol_feas: 1e-8,
            tol_comp: 1e-8,
            max_iters: 50,
            fixed_iters: None,
            sigma_centering: 0.1,
            step_fraction: 0.99,
            regularization: 1e-10,
            free_regularization: 1e-6,
        }
    }
}

pub const MAX_REGULARIZATION: f64 = 1e-4;

impl IpmOptions {
    pub fn fixed(iters: usize) -> Self {
        IpmOptions {
            fixed_iters: Some(iters),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.tol_feas > 0.0
            && self.tol_comp > 0.0
            && self.sigma_centering > 0.0
            && self.sigma_centering < 1.0
            && self.step_fraction > 0.0
            && self.step_fraction < 1.0
            && self.regularization >= 0.0
            && self.free_regularization > 0.0;
        if !ok {
            return Err(Error::InvalidParameter(format!("invalid IPM options {self:?}")));
        }
        Ok(())
    }

    fn iteration_budget(&self) -> usize {
        self.fixed_iters.unwrap_or(self.max_iters)
    }
}

/// One row of the per-iteration log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IpmIterate {
    pub iteration: usize,
    pub mu: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub complementarity: f64,
    pub step_primal: f64,
    pub step_dual: f64,
    /// Smallest slack / multiplier after the step was taken.
    pub min_slack: f64,
    pub min_multiplier: f64,
    pub regularization: f64,
}

/// `H = A diag(d1) Aᵀ + diag(d2)`, exactly symmetric.
pub fn form_normal_matrix(a: &DenseMatrix, d1: &[f64], d2: &[f64]) -> DenseMatrix {
    let (m, ncols) = (a.rows(), a.cols());
    assert_eq!(d1.len(), ncols, "form_normal_matrix d1");
    assert_eq!(d2.len(), m, "form_normal_matrix d2");

    let nnz = a.data().iter().filter(|v| **v != 0.0).count();
    let mut h = DenseMatrix::zeros(m, m);
    if nnz * 4 >= m * ncols {
        let scaled = DenseMatrix::from_fn(m, ncols, |i, j| a.get(i, j) * d1[j]);
        let rows: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|i| (0..=i).map(|k| dot(scaled.row(i), a.row(k))).collect())
            .collect();
        for (i, row) in rows.into_iter().enumerate() {
            for (k, v) in row.into_iter().enumerate() {
                h.set(i, k, v);
            }
        }
    } else {
        // Sparse rows: scatter row i (scaled) once, gather against each row k.
        let pattern: Vec<Vec<(usize, f64)>> = (0..m)
            .map(|i| {
                a.row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, &v)| (j, v))
                    .collect()
            })
            .collect();
        let rows: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map_init(
                || vec![0.0; ncols],
                |work, i| {
                    for &(j, v) in &pattern[i] {
                        work[j] = v * d1[j];
                    }
                    let row = (0..=i)
                        .map(|k| pattern[k].iter().map(|&(j, v)| v * work[j]).sum())
                        .collect();
                    for &(j, _) in &pattern[i] {
                        work[j] = 0.0;
                    }
                    row
                },
            )
            .collect();
        for (i, row) in rows.into_iter().enumerate() {
            for (k, v) in row.into_iter().enumerate() {
                h.set(i, k, v);
            }
        }
    }
    h.mirror_lower();
    for (i, &v) in d2.iter().enumerate() {
        h.set(i, i, h.get(i, i) + v);
    }
    h
}

/// Factors `h + reg I`, growing `reg` ×10 (starting from `reg0`) until the
/// Cholesky succeeds or `reg` would exceed [`MAX_REGULARIZATION`]. At the cap,
/// pivots lost to cancellation are replaced before giving up.
pub(crate) fn regularized_cholesky(h: &DenseMatrix, reg0: f64, iteration: usize) -> Result<(CholFactor, f64)> {
    let n = h.rows();
    let mut reg = reg0;
    loop {
        let mut shifted = h.clone();
        if reg > 0.0 {
            shifted.add_diagonal(&vec![reg; n]);
        }
        match chol_factor(&shifted) {
            Ok(f) => return Ok((f, reg)),
            Err(Error::NotPositiveDefinite { .. }) => {
                let next = if reg > 0.0 { reg * 10.0 } else { 1e-12 };
                if next > MAX_REGULARIZATION * (1.0 + 1e-12) {
                    if let Ok((f, replaced)) = chol_factor_replacing(&shifted) {
                        log::debug!("cholesky at iteration {iteration}: replaced {replaced} pivots");
                        return Ok((f, reg));
                    }
                    return Err(Error::IllConditioned {
                        iteration,
                        regularization: reg,
                    });
                }
                log::debug!("cholesky failed at iteration {iteration}; regularization -> {next:e}");
                reg = next;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Largest `alpha ≤ 1` keeping `v + alpha dv > 0` componentwise.
pub(crate) fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    v.iter()
        .zip(dv)
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(1.0, f64::min)
}
