//! Interior-point solver for the `(DS)` box form
//!
//! ```text
//! min 1ᵀu  s.t.  β − u ≤ 0,  −β − u ≤ 0,  g − λ ≤ 0,  −g − λ ≤ 0,   g = Xᵀ(Xβ − y)
//! ```
//!
//! with multipliers `m1..m4`. Eliminating `Δu` and the multiplier steps
//! leaves the `p x p` system `(D12 + Xᵀ(X D34 Xᵀ)X) Δβ = rhs`, where
//! `D12 = 4 w1 w2 / (w1 + w2)`, `D34 = w3 + w4` and `w_i = m_i / slack_i`.

use super::{max_step, regularized_cholesky, IpmIterate, IpmOptions};
use crate::error::{Error, Result};
use crate::formulations::DsBoxProblem;
use crate::kernels::{lu_factor, norm_inf, solve_chol, DenseMatrix};
use crate::model::{Solution, SolveStatus};

/// Iterate of the box-form solver, exposed to observers once per iteration
/// after the Newton direction has been computed.
#[derive(Clone, Debug)]
pub struct IpmDsState {
    pub iteration: usize,
    pub beta: Vec<f64>,
    pub u: Vec<f64>,
    /// Slacks of the four inequality groups, in the order listed above.
    pub slacks: [Vec<f64>; 4],
    pub multipliers: [Vec<f64>; 4],
    pub d12: Vec<f64>,
    pub d34: Vec<f64>,
    pub mu: f64,
    /// Diagonal shift that was added to `H` for this step.
    pub regularization: f64,
    /// Right-hand side of `H Δβ = rhs`.
    pub rhs: Vec<f64>,
    /// `Δβ` from the dense Cholesky of the `p x p` system.
    pub direct_step: Vec<f64>,
}

pub fn ipm_ds_solve(ds: &DsBoxProblem, opts: &IpmOptions) -> Result<Solution> {
    ipm_ds_solve_observed(ds, opts, |_| {}).map(|(sol, _)| sol)
}

/// `Gv = Xᵀ(X v)` without forming `XᵀX`.
fn gram_apply(x: &DenseMatrix, v: &[f64]) -> Vec<f64> {
    x.matvec_t(&x.matvec(v))
}

/// `Xᵀ (X diag(d) Xᵀ) X`.
fn gram_weighted_gram(x: &DenseMatrix, d: &[f64]) -> DenseMatrix {
    let xd = DenseMatrix::from_fn(x.rows(), x.cols(), |i, j| x.get(i, j) * d[j]);
    let m = xd.matmul(&x.transpose());
    let k = m.matmul(x);
    let mut h = x.transpose().matmul(&k);
    // Symmetrize.
    let p = h.rows();
    for i in 0..p {
        for j in 0..i {
            let v = 0.5 * (h.get(i, j) + h.get(j, i));
            h.set(i, j, v);
            h.set(j, i, v);
        }
    }
    h
}

pub fn ipm_ds_solve_observed(
    ds: &DsBoxProblem,
    opts: &IpmOptions,
    mut observer: impl FnMut(&IpmDsState),
) -> Result<(Solution, Vec<IpmIterate>)> {
    opts.validate()?;
    let x = &ds.x;
    let p = x.cols();
    let lam = ds.lambda;
    let c0 = x.matvec_t(&ds.y);
    if !(lam > 0.0) {
        if norm_inf(&c0) == 0.0 {
            let sol = Solution::from_data(x, &ds.y, vec![0.0; p], 0.0, 0, SolveStatus::Converged, "ipm-ds")?;
            return Ok((sol, Vec::new()));
        }
        return Err(Error::InvalidParameter(
            "box-form interior point needs lambda > 0".into(),
        ));
    }

    // Minimum-norm start β = Xᵀ(XXᵀ)⁻¹y has Xᵀ(y − Xβ) = 0, so the λ-box
    // constraints start with slack exactly λ.
    let (xxt, _) = regularized_cholesky(&x.aat(), 0.0, 0)?;
    let mut beta = x.matvec_t(&solve_chol(&xxt, &ds.y)?);
    let bmax = norm_inf(&beta).max(1.0);
    let mut u: Vec<f64> = beta.iter().map(|b| 0.95 * b.abs() + 0.1 * bmax).collect();
    let mut m: [Vec<f64>; 4] = std::array::from_fn(|_| vec![1.0; p]);

    let slacks_of = |beta: &[f64], u: &[f64]| -> [Vec<f64>; 4] {
        let xb = x.matvec(beta);
        let r: Vec<f64> = ds.y.iter().zip(&xb).map(|(a, b)| a - b).collect();
        let g: Vec<f64> = x.matvec_t(&r).into_iter().map(|v| -v).collect();
        [
            u.iter().zip(beta).map(|(u, b)| u - b).collect(),
            u.iter().zip(beta).map(|(u, b)| u + b).collect(),
            g.iter().map(|g| lam - g).collect(),
            g.iter().map(|g| lam + g).collect(),
        ]
    };

    let sigma = opts.sigma_centering;
    let mut reg = opts.regularization;
    let budget = opts.iteration_budget();
    let mut trace: Vec<IpmIterate> = Vec::new();
    let mut iterations = 0;
    let mut status = SolveStatus::IterationLimit;
    let mut s = slacks_of(&beta, &u);

    let (dual_res, comp) = loop {
        let m34: Vec<f64> = m[2].iter().zip(&m[3]).map(|(a, b)| a - b).collect();
        let g_m34 = gram_apply(x, &m34);
        let r_beta: Vec<f64> = (0..p).map(|j| m[0][j] - m[1][j] + g_m34[j]).collect();
        let r_u: Vec<f64> = (0..p).map(|j| 1.0 - m[0][j] - m[1][j]).collect();
        let comp: f64 = (0..4)
            .map(|i| s[i].iter().zip(&m[i]).map(|(a, b)| a * b).sum::<f64>())
            .sum();
        let dres = norm_inf(&r_beta).max(norm_inf(&r_u));
        let obj: f64 = u.iter().sum();
        // Dual residual of an iterate is only known at the top of the next pass.
        if let Some(last) = trace.last_mut() {
            last.dual_residual = dres;
        }
        if opts.fixed_iters.is_none() && dres <= opts.tol_feas * 2.0 && comp <= opts.tol_comp * (1.0 + obj.abs()) {
            status = SolveStatus::Converged;
            break (dres, comp);
        }
        if iterations >= budget {
            break (dres, comp);
        }

        let mu = comp / (4 * p) as f64;
        let target = sigma * mu;
        let w: [Vec<f64>; 4] = std::array::from_fn(|i| (0..p).map(|j| m[i][j] / s[i][j]).collect());
        let h: [Vec<f64>; 4] = std::array::from_fn(|i| (0..p).map(|j| target / s[i][j] - m[i][j]).collect());
        let d12: Vec<f64> = (0..p).map(|j| 4.0 * w[0][j] * w[1][j] / (w[0][j] + w[1][j])).collect();
        let d34: Vec<f64> = (0..p).map(|j| w[2][j] + w[3][j]).collect();

        let h34: Vec<f64> = (0..p).map(|j| h[2][j] - h[3][j]).collect();
        let g_h34 = gram_apply(x, &h34);
        let rhs: Vec<f64> = (0..p)
            .map(|j| {
                let wsum = w[0][j] + w[1][j];
                -r_beta[j] - h[0][j] + h[1][j] - g_h34[j] - (w[1][j] - w[0][j]) * (-r_u[j] + h[0][j] + h[1][j]) / wsum
            })
            .collect();

        let mut hmat = gram_weighted_gram(x, &d34);
        hmat.add_diagonal(&d12);
        let (factor, used) = regularized_cholesky(&hmat, reg, iterations)?;
        reg = used;
        let dbeta = solve_chol(&factor, &rhs)?;

        observer(&IpmDsState {
            iteration: iterations,
            beta: beta.clone(),
            u: u.clone(),
            slacks: s.clone(),
            multipliers: m.clone(),
            d12: d12.clone(),
            d34: d34.clone(),
            mu,
            regularization: reg,
            rhs,
            direct_step: dbeta.clone(),
        });

        let du: Vec<f64> = (0..p)
            .map(|j| (-r_u[j] + h[0][j] + h[1][j] + (w[0][j] - w[1][j]) * dbeta[j]) / (w[0][j] + w[1][j]))
            .collect();
        let dg = gram_apply(x, &dbeta);
        let ds_: [Vec<f64>; 4] = [
            (0..p).map(|j| du[j] - dbeta[j]).collect(),
            (0..p).map(|j| du[j] + dbeta[j]).collect(),
            dg.iter().map(|v| -v).collect(),
            dg.clone(),
        ];
        let dm: [Vec<f64>; 4] = std::array::from_fn(|i| (0..p).map(|j| h[i][j] - w[i][j] * ds_[i][j]).collect());

        let ap_max = (0..4).map(|i| max_step(&s[i], &ds_[i])).fold(1.0, f64::min);
        let ad_max = (0..4).map(|i| max_step(&m[i], &dm[i])).fold(1.0, f64::min);
        let ap = (opts.step_fraction * ap_max).min(1.0);
        let ad = (opts.step_fraction * ad_max).min(1.0);

        for j in 0..p {
            beta[j] += ap * dbeta[j];
            u[j] += ap * du[j];
        }
        for i in 0..4 {
            for j in 0..p {
                m[i][j] += ad * dm[i][j];
            }
        }
        iterations += 1;
        s = slacks_of(&beta, &u);

        let min_slack = s.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        let min_mult = m.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        debug_assert!(min_slack > 0.0 && min_mult > 0.0, "box iterate left the interior");
        let comp_new: f64 = (0..4)
            .map(|i| s[i].iter().zip(&m[i]).map(|(a, b)| a * b).sum::<f64>())
            .sum();
        trace.push(IpmIterate {
            iteration: iterations,
            mu: comp_new / (4 * p) as f64,
            primal_residual: 0.0,
            dual_residual: f64::NAN,
            complementarity: comp_new,
            step_primal: ap,
            step_dual: ad,
            min_slack,
            min_multiplier: min_mult,
            regularization: reg,
        });
    };

    let objective: f64 = u.iter().sum();
    let zeta: Vec<f64> = m[3].iter().zip(&m[2]).map(|(a, b)| a - b).collect();
    let mut sol = Solution::from_data(x, &ds.y, beta, objective, iterations, status, "ipm-ds")?;
    let violation = (norm_inf(&sol.s) - lam).max(0.0);
    let min_int = super::general::min_interiority(&trace);
    sol = sol
        .with_diagnostic("dual_residual", dual_res)
        .with_diagnostic("complementarity", comp)
        .with_diagnostic("ds_violation", violation)
        .with_diagnostic("regularization", reg)
        .with_diagnostic("min_interiority", min_int);
    sol.dual = Some(zeta);
    Ok((sol, trace))
}

/// Outcome of solving one Newton system through the `n x n` reduction.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedStepReport {
    pub iteration: usize,
    /// `‖Δβ_reduced − Δβ_direct‖∞ / ‖Δβ_direct‖∞`; `None` when the
    /// reduced system was numerically singular.
    pub relative_discrepancy: Option<f64>,
    /// `max(D12) / min(D12)`.
    pub d12_condition: f64,
    pub min_d12: f64,
}

/// Re-solves the iterate's Newton system through the unsymmetric `n x n`
/// matrix `I + (X D34 Xᵀ)(X D12⁻¹ Xᵀ)` and compares with the direct step.
///
/// With `P = X D12⁻¹ Xᵀ`, `M = X D34 Xᵀ`: solve `(I + M P) t = M X D12⁻¹ rhs`,
/// then `Δβ = D12⁻¹ (rhs − Xᵀ t)`.
pub fn reduced_step_experiment(ds: &DsBoxProblem, state: &IpmDsState) -> ReducedStepReport {
    let x = &ds.x;
    let (n, p) = (x.rows(), x.cols());
    // The direct system carried the regularization shift on its diagonal.
    let d12: Vec<f64> = state.d12.iter().map(|d| d + state.regularization).collect();
    let d12_inv: Vec<f64> = d12.iter().map(|d| 1.0 / d).collect();
    let min_d12 = d12.iter().copied().fold(f64::INFINITY, f64::min);
    let max_d12 = d12.iter().copied().fold(0.0, f64::max);

    let xt = x.transpose();
    let weighted = |d: &[f64]| {
        let xd = DenseMatrix::from_fn(n, p, |i, j| x.get(i, j) * d[j]);
        xd.matmul(&xt)
    };
    let pm = weighted(&d12_inv);
    let mm = weighted(&state.d34);
    let mut k = mm.matmul(&pm);
    k.add_diagonal(&vec![1.0; n]);

    let scaled: Vec<f64> = state.rhs.iter().zip(&d12_inv).map(|(r, d)| r * d).collect();
    let rhs_n = mm.matvec(&x.matvec(&scaled));
    let relative_discrepancy = lu_factor(&k).ok().map(|lu| {
        let t = lu.solve(&rhs_n);
        let xtt = x.matvec_t(&t);
        let reduced: Vec<f64> = (0..p).map(|j| (state.rhs[j] - xtt[j]) * d12_inv[j]).collect();
        let diff = reduced
            .iter()
            .zip(&state.direct_step)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        diff / norm_inf(&state.direct_step).max(f64::MIN_POSITIVE)
    });
    ReducedStepReport {
        iteration: state.iteration,
        relative_discrepancy,
        d12_condition: max_d12 / min_d12,
        min_d12,
    }
}
