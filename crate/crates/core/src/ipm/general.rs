use super::{form_normal_matrix, max_step, regularized_cholesky, IpmIterate, IpmOptions};
use crate::error::Result;
use crate::formulations::{ds_dual_direction, recover_beta, StandardProblem};
use crate::kernels::{norm_inf, solve_chol, CholFactor, DenseMatrix};
use crate::model::{ds_feasibility_violation, ProblemInstance, Solution, SolveStatus};

/// Raw primal–dual iterate of a [`StandardProblem`] solve.
#[derive(Clone, Debug)]
pub struct IpmOutcome {
    pub x: Vec<f64>,
    /// Multipliers of `A x = b`, sign convention `c + Qx − Aᵀy − z_l + z_u = 0`.
    pub y: Vec<f64>,
    pub z_lower: Vec<f64>,
    pub z_upper: Vec<f64>,
    pub iterations: usize,
    pub status: SolveStatus,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub complementarity: f64,
    pub regularization: f64,
    pub trace: Vec<IpmIterate>,
}

struct Residuals {
    primal: Vec<f64>,
    dual: Vec<f64>,
    complementarity: f64,
    pairs: usize,
}

/// Solves `sp` and maps the result back to `β` for `inst`.
pub fn ipm_solve(inst: &ProblemInstance, sp: &StandardProblem, opts: &IpmOptions) -> Result<Solution> {
    let out = ipm_solve_raw(sp, opts)?;
    let (beta, surrogate) = recover_beta(sp, &out.x)?;
    let name = format!("ipm-{}", sp.formulation.name());
    let violation = ds_feasibility_violation(inst, &beta);
    let mut sol = Solution::from_beta(inst, beta, sp.objective(&out.x), out.iterations, out.status, name)?
        .with_diagnostic("primal_residual", out.primal_residual)
        .with_diagnostic("dual_residual", out.dual_residual)
        .with_diagnostic("complementarity", out.complementarity)
        .with_diagnostic("l1_surrogate", surrogate)
        .with_diagnostic("regularization", out.regularization)
        .with_diagnostic("ds_violation", violation)
        .with_diagnostic("min_interiority", min_interiority(&out.trace));
    sol.dual = ds_dual_direction(sp, &out.y);
    Ok(sol)
}

pub(crate) fn min_interiority(trace: &[IpmIterate]) -> f64 {
    trace
        .iter()
        .map(|t| t.min_slack.min(t.min_multiplier))
        .fold(f64::INFINITY, f64::min)
}

/// Refinement steps against the unregularized `A D Aᵀ` after each solve.
const REFINEMENT_STEPS: usize = 2;

/// Iterative refinement of `A D Aᵀ dy = rhs`. Its residual equals the error
/// in the linearized primal equation, so steps are kept only while it drops.
fn refine_normal_solve(a: &DenseMatrix, d: &[f64], factor: &CholFactor, rhs: &[f64], dy: &mut Vec<f64>) -> Result<()> {
    let residual = |dy: &[f64]| -> Vec<f64> {
        let scaled: Vec<f64> = a.matvec_t(dy).iter().zip(d).map(|(v, w)| v * w).collect();
        rhs.iter().zip(a.matvec(&scaled)).map(|(b, h)| b - h).collect()
    };
    let mut e = residual(dy);
    let mut err = norm_inf(&e);
    for _ in 0..REFINEMENT_STEPS {
        let corr = solve_chol(factor, &e)?;
        let trial: Vec<f64> = dy.iter().zip(&corr).map(|(a, b)| a + b).collect();
        let e_trial = residual(&trial);
        let err_trial = norm_inf(&e_trial);
        if !(err_trial < err) {
            break;
        }
        *dy = trial;
        e = e_trial;
        err = err_trial;
    }
    Ok(())
}

pub fn ipm_solve_raw(sp: &StandardProblem, opts: &IpmOptions) -> Result<IpmOutcome> {
    sp.validate()?;
    opts.validate()?;
    let nv = sp.num_vars();
    let m = sp.num_rows();
    let has_l: Vec<bool> = sp.lower.iter().map(|v| v.is_finite()).collect();
    let has_u: Vec<bool> = sp.upper.iter().map(|v| v.is_finite()).collect();
    let q = sp.q.clone().unwrap_or_else(|| vec![0.0; nv]);
    let is_qp = q.iter().any(|&v| v != 0.0);

    let mut x = vec![0.0; nv];
    let mut zl = vec![0.0; nv];
    let mut zu = vec![0.0; nv];
    for j in 0..nv {
        match (has_l[j], has_u[j]) {
            (true, true) => x[j] = 0.5 * (sp.lower[j] + sp.upper[j]),
            (true, false) => x[j] = sp.lower[j] + 1.0,
            (false, true) => x[j] = sp.upper[j] - 1.0,
            (false, false) => x[j] = 0.0,
        }
        if has_l[j] {
            zl[j] = 1.0;
        }
        if has_u[j] {
            zu[j] = 1.0;
        }
    }
    let mut y = vec![0.0; m];

    let b_scale = 1.0 + norm_inf(&sp.b);
    let c_scale = 1.0 + norm_inf(&sp.c);
    let sigma = opts.sigma_centering;
    let mut reg = opts.regularization;
    let mut trace = Vec::new();
    let budget = opts.iteration_budget();

    let residuals = |x: &[f64], y: &[f64], zl: &[f64], zu: &[f64]| -> Residuals {
        let primal = sp.primal_residual(x);
        let aty = sp.a.matvec_t(y);
        let mut complementarity = 0.0;
        let mut pairs = 0;
        let dual = (0..nv)
            .map(|j| {
                if has_l[j] {
                    complementarity += (x[j] - sp.lower[j]) * zl[j];
                    pairs += 1;
                }
                if has_u[j] {
                    complementarity += (sp.upper[j] - x[j]) * zu[j];
                    pairs += 1;
                }
                sp.c[j] + q[j] * x[j] - aty[j] - zl[j] + zu[j]
            })
            .collect();
        Residuals {
            primal,
            dual,
            complementarity,
            pairs,
        }
    };

    let mut iterations = 0;
    let mut status = SolveStatus::IterationLimit;
    let mut res = residuals(&x, &y, &zl, &zu);
    loop {
        let pres = norm_inf(&res.primal);
        let dres = norm_inf(&res.dual);
        if opts.fixed_iters.is_none() {
            let obj = sp.objective(&x);
            if pres <= opts.tol_feas * b_scale
                && dres <= opts.tol_feas * c_scale
                && res.complementarity <= opts.tol_comp * (1.0 + obj.abs())
            {
                status = SolveStatus::Converged;
                break;
            }
        }
        if iterations >= budget {
            break;
        }

        let mu = if res.pairs > 0 {
            res.complementarity / res.pairs as f64
        } else {
            0.0
        };
        let target = sigma * mu;
        let mut d1 = vec![0.0; nv];
        let mut rt = vec![0.0; nv];
        for j in 0..nv {
            let mut diag = q[j];
            let mut r = -res.dual[j];
            if has_l[j] {
                let gap = x[j] - sp.lower[j];
                diag += zl[j] / gap;
                r += target / gap - zl[j];
            }
            if has_u[j] {
                let gap = sp.upper[j] - x[j];
                diag += zu[j] / gap;
                r -= target / gap - zu[j];
            }
            if diag == 0.0 {
                diag = opts.free_regularization;
            }
            d1[j] = 1.0 / diag;
            rt[j] = r;
        }

        let h = form_normal_matrix(&sp.a, &d1, &vec![0.0; m]);
        let (factor, used) = regularized_cholesky(&h, reg, iterations)?;
        reg = used;
        let d1rt: Vec<f64> = d1.iter().zip(&rt).map(|(d, r)| d * r).collect();
        let ad1rt = sp.a.matvec(&d1rt);
        let rhs: Vec<f64> = res.primal.iter().zip(&ad1rt).map(|(p, v)| p - v).collect();
        let mut dy = solve_chol(&factor, &rhs)?;
        refine_normal_solve(&sp.a, &d1, &factor, &rhs, &mut dy)?;
        let atdy = sp.a.matvec_t(&dy);
        let dx: Vec<f64> = (0..nv).map(|j| d1[j] * (rt[j] + atdy[j])).collect();

        let mut dzl = vec![0.0; nv];
        let mut dzu = vec![0.0; nv];
        let (mut gaps, mut dgaps, mut zs, mut dzs) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for j in 0..nv {
            if has_l[j] {
                let gap = x[j] - sp.lower[j];
                dzl[j] = target / gap - zl[j] - zl[j] / gap * dx[j];
                gaps.push(gap);
                dgaps.push(dx[j]);
                zs.push(zl[j]);
                dzs.push(dzl[j]);
            }
            if has_u[j] {
                let gap = sp.upper[j] - x[j];
                dzu[j] = target / gap - zu[j] + zu[j] / gap * dx[j];
                gaps.push(gap);
                dgaps.push(-dx[j]);
                zs.push(zu[j]);
                dzs.push(dzu[j]);
            }
        }
        let mut ap = (opts.step_fraction * max_step(&gaps, &dgaps)).min(1.0);
        let mut ad = (opts.step_fraction * max_step(&zs, &dzs)).min(1.0);
        if is_qp {
            ap = ap.min(ad);
            ad = ap;
        }

        for j in 0..nv {
            x[j] += ap * dx[j];
            zl[j] += ad * dzl[j];
            zu[j] += ad * dzu[j];
        }
        for (yi, d) in y.iter_mut().zip(&dy) {
            *yi += ad * d;
        }
        iterations += 1;

        let mut min_slack = f64::INFINITY;
        let mut min_mult = f64::INFINITY;
        for j in 0..nv {
            if has_l[j] {
                min_slack = min_slack.min(x[j] - sp.lower[j]);
                min_mult = min_mult.min(zl[j]);
            }
            if has_u[j] {
                min_slack = min_slack.min(sp.upper[j] - x[j]);
                min_mult = min_mult.min(zu[j]);
            }
        }
        debug_assert!(min_slack > 0.0 && min_mult > 0.0, "iterate left the interior");

        res = residuals(&x, &y, &zl, &zu);
        trace.push(IpmIterate {
            iteration: iterations,
            mu: if res.pairs > 0 {
                res.complementarity / res.pairs as f64
            } else {
                0.0
            },
            primal_residual: norm_inf(&res.primal),
            dual_residual: norm_inf(&res.dual),
            complementarity: res.complementarity,
            step_primal: ap,
            step_dual: ad,
            min_slack,
            min_multiplier: min_mult,
            regularization: reg,
        });
    }

    Ok(IpmOutcome {
        primal_residual: norm_inf(&res.primal),
        dual_residual: norm_inf(&res.dual),
        complementarity: res.complementarity,
        x,
        y,
        z_lower: zl,
        z_upper: zu,
        iterations,
        status,
        regularization: reg,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulations::{build_ds1, build_ds2, build_ds3, BlockMap, Formulation};
    use crate::kernels::DenseMatrix;
    use crate::model::generate_instance;

    #[test]
    fn toy_lp_with_known_optimum() {
        // min x0 + 2 x1  s.t. x0 + x1 = 1, x >= 0  ->  x = (1, 0).
        let sp = StandardProblem {
            formulation: Formulation::Ds1,
            c: vec![1.0, 2.0],
            q: None,
            a: DenseMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap(),
            b: vec![1.0],
            lower: vec![0.0, 0.0],
            upper: vec![f64::INFINITY; 2],
            block_map: BlockMap::default(),
            first_block_rows: 1,
        };
        let out = ipm_solve_raw(&sp, &IpmOptions::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Converged);
        assert!((out.x[0] - 1.0).abs() < 1e-7 && out.x[1].abs() < 1e-7);
        assert!((out.y[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn ds3_large_lambda_gives_zero() {
        let inst = generate_instance(8, 20, 2, 0.01, 1.0, 3).unwrap();
        let inst = inst.with_lambda(1.5 * inst.lambda_max());
        let sol = ipm_solve(&inst, &build_ds3(&inst), &IpmOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Converged);
        assert!(crate::kernels::norm_inf(&sol.beta) < 1e-7);
        let half = 0.5 * inst.y.iter().map(|v| v * v).sum::<f64>();
        assert!((sol.objective - half).abs() < 1e-7);
    }

    #[test]
    fn ds1_and_ds2_agree_and_keep_interior() {
        let inst = generate_instance(10, 30, 3, 0.01, 0.02, 5).unwrap();
        let a = ipm_solve(&inst, &build_ds1(&inst), &IpmOptions::default()).unwrap();
        let b = ipm_solve(&inst, &build_ds2(&inst), &IpmOptions::default()).unwrap();
        assert_eq!(a.status, SolveStatus::Converged);
        assert_eq!(b.status, SolveStatus::Converged, "{:?}", b.diagnostics);
        let (l1a, l1b) = (crate::kernels::norm1(&a.beta), crate::kernels::norm1(&b.beta));
        assert!((l1a - l1b).abs() <= 1e-6 * l1a, "{l1a} vs {l1b}");
        assert!(a.diagnostics["min_interiority"] > 0.0);
        assert!(b.diagnostics["min_interiority"] > 0.0);
        assert!(a.diagnostics["ds_violation"] < 1e-7);
    }

    #[test]
    fn fixed_iteration_mode_runs_exactly() {
        let inst = generate_instance(10, 30, 3, 0.01, 0.02, 5).unwrap();
        let sol = ipm_solve(&inst, &build_ds3(&inst), &IpmOptions::fixed(4)).unwrap();
        assert_eq!(sol.iterations, 4);
        assert_eq!(sol.status, SolveStatus::IterationLimit);
    }
}
