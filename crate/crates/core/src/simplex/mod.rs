//! Bounded-variable dual simplex for the DS2 program.
//!
//! The starting basis (`r = y`, `s = −Xᵀy`, zero prices) is dual feasible, so
//! the method only has to drive out primal bound violations. It stops once no
//! basic variable violates its bounds by more than `tol`, which means `s` may
//! exceed `λ` by up to `tol` at exit.

mod basis;

use std::collections::hash_map::DefaultHasher;
use std::collections::HashSet;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

pub use basis::{factorize_basis, initial_basis, BasisState, StructuredFactors, Var};

use crate::error::{Error, Result};
use crate::kernels::norm_inf;
use crate::model::{ProblemInstance, Solution, SolveStatus};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pricing {
    Dantzig,
    SteepestEdge,
}

impl std::str::FromStr for Pricing {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dantzig" => Ok(Pricing::Dantzig),
            "steepest-edge" => Ok(Pricing::SteepestEdge),
            other => Err(Error::InvalidParameter(format!("unknown pricing rule {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexOptions {
    /// Absolute primal bound-violation threshold for termination.
    pub tol: f64,
    pub pricing: Pricing,
    pub max_iters: usize,
    /// Pivots between from-scratch recomputations of primal values and
    /// reduced costs. The structured factors are rebuilt every pivot.
    pub refactor_every: usize,
    /// Long-step ratio test that moves boxed `s` variables across to their
    /// opposite bound instead of pivoting on them.
    pub bound_flipping: bool,
    /// Verify solves, dual feasibility and `r` membership at every pivot.
    pub check_invariants: bool,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            tol: 1e-6,
            pricing: Pricing::SteepestEdge,
            max_iters: 20_000,
            refactor_every: 1,
            bound_flipping: true,
            check_invariants: false,
        }
    }
}

impl SimplexOptions {
    pub fn with_tol(tol: f64) -> Self {
        SimplexOptions {
            tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.refactor_every == 0 {
            return Err(Error::InvalidParameter(format!("invalid simplex options {self:?}")));
        }
        Ok(())
    }
}

/// Harris ratio-test tolerance.
pub const HARRIS_TOL: f64 = 1e-9;
/// Smallest pivot-row entry eligible in the ratio test.
pub const PIVOT_TOL: f64 = 1e-9;
const PERTURBATION: f64 = 1e-10;
/// Basis size up to which pivots are also checked against an assembled basis.
pub const DENSE_CHECK_LIMIT: usize = 600;

/// One pivot, as streamed to observers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PivotRecord {
    pub iteration: usize,
    pub entering: String,
    pub leaving: String,
    /// Largest basic bound violation before the pivot.
    pub max_violation: f64,
    /// Nonbasic `s` variables moved to their opposite bound.
    pub bound_flips: usize,
    /// `|S|` after the pivot.
    pub support: usize,
    /// Largest wrong-signed nonbasic reduced cost after the pivot.
    pub dual_infeasibility: f64,
    pub r_block_basic: bool,
    /// Relative residuals of fresh solves with the new factors
    /// (only with `check_invariants`).
    pub solve_residual: Option<f64>,
    pub transpose_residual: Option<f64>,
    pub dense_residual: Option<f64>,
    pub factor_residual: Option<f64>,
}

fn bound_violation(v: Var, value: f64, lambda: f64) -> (f64, bool) {
    match v {
        Var::R(_) => (0.0, false),
        Var::V(_) | Var::W(_) => ((-value).max(0.0), true),
        Var::S(_) => {
            if value < -lambda {
                (-lambda - value, true)
            } else {
                ((value - lambda).max(0.0), false)
            }
        }
    }
}

struct Engine<'a> {
    inst: &'a ProblemInstance,
    state: BasisState,
    /// Working costs by variable id (original plus shifts).
    costs: Vec<f64>,
    /// Reduced costs by variable id; zero on basic variables.
    d: Vec<f64>,
    weights: Vec<f64>,
}

impl<'a> Engine<'a> {
    fn new(inst: &'a ProblemInstance, pricing: Pricing) -> Self {
        let state = initial_basis(inst);
        let (n, p) = (inst.n, inst.p);
        let mut costs = vec![0.0; state.num_vars()];
        costs[..2 * p].fill(1.0);
        let weights = match pricing {
            Pricing::Dantzig => Vec::new(),
            Pricing::SteepestEdge => {
                // Rows of the starting inverse are e_i and (−x_jᵀ, e_j).
                let mut w = vec![1.0; n + p];
                for j in 0..p {
                    w[n + j] = 1.0 + (0..n).map(|i| inst.x.get(i, j).powi(2)).sum::<f64>();
                }
                w
            }
        };
        let mut eng = Engine {
            inst,
            state,
            d: vec![0.0; costs.len()],
            costs,
            weights,
        };
        eng.recompute_duals();
        eng
    }

    fn var(&self, id: usize) -> Var {
        Var::from_id(id, self.state.n, self.state.p)
    }

    fn recompute_primal(&mut self) {
        let rhs = self.state.basic_rhs(self.inst);
        self.state.x_basic = self.state.solve(&self.inst.x, &rhs);
    }

    fn recompute_duals(&mut self) {
        let (n, p) = (self.state.n, self.state.p);
        let cb: Vec<f64> = self.state.basic.iter().map(|v| self.costs[v.id(n, p)]).collect();
        let pi = self.state.solve_transpose(&self.inst.x, &cb);
        let g = self.inst.x.matvec_t(&pi[..n]);
        for j in 0..p {
            self.d[j] = self.costs[j] - g[j];
            self.d[p + j] = self.costs[p + j] + g[j];
            self.d[2 * p + n + j] = self.costs[2 * p + n + j] - pi[n + j];
        }
        self.d[2 * p..2 * p + n].fill(0.0);
        for v in &self.state.basic {
            self.d[v.id(n, p)] = 0.0;
        }
        self.state.row_duals = pi;
    }

    /// Reduced cost measured so that dual feasibility means `≥ 0`.
    fn signed_d(&self, id: usize) -> f64 {
        match self.var(id) {
            Var::S(j) if self.state.s_at_upper[j] => -self.d[id],
            _ => self.d[id],
        }
    }

    fn dual_infeasibility(&self) -> f64 {
        (0..self.d.len())
            .filter(|&id| self.state.position[id].is_none())
            .map(|id| (-self.signed_d(id)).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Leaving position by the pricing rule, with its violation and whether
    /// it leaves at its lower bound.
    fn price(&self, tol: f64) -> (Option<(usize, bool)>, f64) {
        let lambda = self.inst.lambda;
        let mut best: Option<(usize, bool, f64)> = None;
        let mut max_violation = 0.0f64;
        for pos in self.state.n..self.state.basic.len() {
            let (viol, lower) = bound_violation(self.state.basic[pos], self.state.x_basic[pos], lambda);
            max_violation = max_violation.max(viol);
            if viol <= tol {
                continue;
            }
            let score = if self.weights.is_empty() {
                viol
            } else {
                viol * viol / self.weights[pos]
            };
            if best.is_none_or(|b| score > b.2) {
                best = Some((pos, lower, score));
            }
        }
        (best.map(|(pos, lower, _)| (pos, lower)), max_violation)
    }

    fn basis_hash(&self) -> u64 {
        let mut h = DefaultHasher::new();
        let mut ids: Vec<usize> = self
            .state
            .basic
            .iter()
            .map(|v| v.id(self.state.n, self.state.p))
            .collect();
        ids.sort_unstable();
        ids.hash(&mut h);
        self.state.s_at_upper.hash(&mut h);
        h.finish()
    }

    /// Perturbs nonbasic costs towards dual feasibility, recording the shifts.
    fn perturb(&mut self, shifts: &mut [f64], round: usize) {
        for id in 0..self.costs.len() {
            if self.state.position[id].is_some() || matches!(self.var(id), Var::R(_)) {
                continue;
            }
            let mut h = DefaultHasher::new();
            (id, round).hash(&mut h);
            let frac = (h.finish() % 1024) as f64 / 1024.0;
            let delta = PERTURBATION * (1.0 + frac);
            let at_upper = matches!(self.var(id), Var::S(j) if self.state.s_at_upper[j]);
            let delta = if at_upper { -delta } else { delta };
            self.costs[id] += delta;
            self.d[id] += delta;
            shifts[id] += delta;
        }
    }
}

/// Solves DS2 from [`initial_basis`].
pub fn dual_simplex_solve(inst: &ProblemInstance, opts: &SimplexOptions) -> Result<Solution> {
    dual_simplex_solve_observed(inst, opts, |_| {})
}

/// As [`dual_simplex_solve`], passing every pivot to `observer`.
pub fn dual_simplex_solve_observed(
    inst: &ProblemInstance,
    opts: &SimplexOptions,
    mut observer: impl FnMut(&PivotRecord),
) -> Result<Solution> {
    opts.validate()?;
    if !(inst.lambda > 0.0) {
        return Err(Error::InvalidParameter("dual simplex needs lambda > 0".into()));
    }
    let (n, p) = (inst.n, inst.p);
    let x = &inst.x;
    let lambda = inst.lambda;
    let mut eng = Engine::new(inst, opts.pricing);
    let mut shifts = vec![0.0; eng.costs.len()];
    let mut seen = HashSet::new();
    seen.insert(eng.basis_hash());
    let mut perturb_rounds = 0usize;
    let mut iterations = 0usize;
    let mut worst_dual_infeasibility = 0.0f64;

    let status = loop {
        let (leaving, max_violation) = eng.price(opts.tol);
        let Some((r_pos, at_lower)) = leaving else {
            break SolveStatus::ToleranceMet;
        };
        if iterations >= opts.max_iters {
            break SolveStatus::IterationLimit;
        }
        let leaving_var = eng.state.basic[r_pos];
        let bound = match (leaving_var, at_lower) {
            (Var::S(_), true) => -lambda,
            (Var::S(_), false) => lambda,
            _ => 0.0,
        };
        let delta = eng.state.x_basic[r_pos] - bound;

        // Row r_pos of B⁻¹ and the pivot row over nonbasic columns.
        let mut e_r = vec![0.0; n + p];
        e_r[r_pos] = 1.0;
        let rho = eng.state.solve_transpose(x, &e_r);
        let g = x.matvec_t(&rho[..n]);
        let alpha_row = |id: usize| -> f64 {
            match Var::from_id(id, n, p) {
                Var::V(j) => g[j],
                Var::W(j) => -g[j],
                Var::S(j) => rho[n + j],
                Var::R(_) => 0.0,
            }
        };

        // Dual ratio test on α̃ = ±α with signed reduced costs.
        let orient = if at_lower { -1.0 } else { 1.0 };
        let mut candidates: Vec<(usize, f64, f64)> = (0..eng.costs.len())
            .filter(|&id| eng.state.position[id].is_none())
            .filter_map(|id| {
                let a = orient * alpha_row(id);
                let a = if matches!(Var::from_id(id, n, p), Var::S(j) if eng.state.s_at_upper[j]) {
                    -a
                } else {
                    a
                };
                (a > PIVOT_TOL).then(|| (id, a, eng.signed_d(id)))
            })
            .collect();
        if candidates.is_empty() {
            return Err(Error::DualUnbounded);
        }
        // Long step: pass breakpoints of boxed `s` while the dual objective
        // still improves; passed variables move to their opposite bound.
        let mut flips = Vec::new();
        if opts.bound_flipping {
            candidates.sort_by(|a, b| {
                (a.2.max(0.0) / a.1)
                    .total_cmp(&(b.2.max(0.0) / b.1))
                    .then(a.0.cmp(&b.0))
            });
            let mut slope = delta.abs();
            while flips.len() + 1 < candidates.len() {
                let (id, a, _) = candidates[flips.len()];
                let next = slope - a * 2.0 * lambda;
                if !matches!(Var::from_id(id, n, p), Var::S(_)) || next <= 0.0 {
                    break;
                }
                slope = next;
                flips.push(id);
            }
        }
        let remaining = &candidates[flips.len()..];
        // Harris two-pass selection among the remaining breakpoints.
        let theta_max = remaining
            .iter()
            .map(|&(_, a, dd)| (dd + HARRIS_TOL) / a)
            .fold(f64::INFINITY, f64::min);
        let (q_id, _, dd_q) = remaining
            .iter()
            .copied()
            .filter(|&(_, a, dd)| dd / a <= theta_max)
            .fold(None::<(usize, f64, f64)>, |acc, c| match acc {
                Some(b) if c.1 < b.1 || (c.1 == b.1 && c.0 > b.0) => acc,
                _ => Some(c),
            })
            .expect("the Harris bound admits its minimizer");
        if dd_q < 0.0 {
            // Cost shift so the entering reduced cost is exactly zero.
            let dq = eng.d[q_id];
            eng.costs[q_id] -= dq;
            shifts[q_id] -= dq;
            eng.d[q_id] = 0.0;
        }
        let alpha_rq = alpha_row(q_id);
        let theta_d = eng.d[q_id] / alpha_rq;
        let entering = Var::from_id(q_id, n, p);

        // Column of the entering variable; also the steepest-edge update data.
        let mut a_q = vec![0.0; n + p];
        match entering {
            Var::V(j) | Var::W(j) => {
                let sgn = if matches!(entering, Var::V(_)) { 1.0 } else { -1.0 };
                for i in 0..n {
                    a_q[i] = sgn * x.get(i, j);
                }
            }
            Var::S(j) => a_q[n + j] = 1.0,
            Var::R(_) => unreachable!("r is never nonbasic"),
        }
        let alpha_q = eng.state.solve(x, &a_q);
        if !eng.weights.is_empty() {
            let tau = eng.state.solve(x, &rho);
            let beta_r = rho.iter().map(|v| v * v).sum::<f64>();
            let piv = alpha_q[r_pos];
            for i in 0..n + p {
                if i == r_pos {
                    continue;
                }
                let ratio = alpha_q[i] / piv;
                let w = eng.weights[i] - 2.0 * ratio * tau[i] + ratio * ratio * beta_r;
                eng.weights[i] = w.max(ratio * ratio).max(1e-12);
            }
            eng.weights[r_pos] = (beta_r / (piv * piv)).max(1e-12);
        }
        let entering_value = eng.state.nonbasic_value(entering, lambda);
        let theta_p = delta / alpha_rq;

        // Basis change.
        eng.state.basic[r_pos] = entering;
        if let Var::S(j) = leaving_var {
            eng.state.s_at_upper[j] = !at_lower;
        }
        for &id in &flips {
            if let Var::S(j) = Var::from_id(id, n, p) {
                eng.state.s_at_upper[j] = !eng.state.s_at_upper[j];
            }
        }
        eng.state.refactor(x)?;
        iterations += 1;

        if iterations.is_multiple_of(opts.refactor_every) || !flips.is_empty() {
            eng.recompute_primal();
            eng.recompute_duals();
        } else {
            for (v, a) in eng.state.x_basic.iter_mut().zip(&alpha_q) {
                *v -= theta_p * a;
            }
            eng.state.x_basic[r_pos] = entering_value + theta_p;
            for id in 0..eng.d.len() {
                if eng.state.position[id].is_none() {
                    eng.d[id] -= theta_d * alpha_row(id);
                }
            }
            eng.d[q_id] = 0.0;
            eng.d[leaving_var.id(n, p)] = -theta_d;
        }

        let hash = eng.basis_hash();
        if !seen.insert(hash) {
            perturb_rounds += 1;
            log::debug!("dual simplex: basis repeated at pivot {iterations}; perturbing costs");
            eng.perturb(&mut shifts, perturb_rounds);
        }

        let dual_infeasibility = eng.dual_infeasibility();
        worst_dual_infeasibility = worst_dual_infeasibility.max(dual_infeasibility);
        let r_block_basic = (0..n).all(|i| eng.state.basic[i] == Var::R(i));
        assert!(r_block_basic, "an r variable left the basis");
        let mut record = PivotRecord {
            iteration: iterations,
            entering: entering.to_string(),
            leaving: leaving_var.to_string(),
            max_violation,
            bound_flips: flips.len(),
            support: eng.state.factors.support_size(),
            dual_infeasibility,
            r_block_basic,
            solve_residual: None,
            transpose_residual: None,
            dense_residual: None,
            factor_residual: None,
        };
        if opts.check_invariants {
            let rhs = eng.state.basic_rhs(inst);
            let z = eng.state.solve(x, &rhs);
            record.solve_residual = Some(eng.state.solve_residual(x, &z, &rhs));
            let cb: Vec<f64> = eng.state.basic.iter().map(|v| eng.costs[v.id(n, p)]).collect();
            let pi = eng.state.solve_transpose(x, &cb);
            let btpi = eng.state.multiply_transpose(x, &pi);
            let err = btpi.iter().zip(&cb).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            record.transpose_residual = Some(err / norm_inf(&cb).max(1.0));
            if n + p <= DENSE_CHECK_LIMIT {
                let dense = eng.state.assemble_dense(x);
                let bz = dense.matvec(&z);
                let err = bz.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                record.dense_residual = Some(err / norm_inf(&rhs).max(1.0));
            }
            record.factor_residual = Some(
                eng.state
                    .factors
                    .lu
                    .as_ref()
                    .map_or(0.0, |lu| lu.reconstruction_error(&eng.state.factors.inner)),
            );
        }
        observer(&record);
    };

    // Remove cost shifts and perturbations before reporting duals.
    let shifted = shifts.iter().any(|s| *s != 0.0);
    if shifted {
        for (c, s) in eng.costs.iter_mut().zip(&shifts) {
            *c -= s;
        }
    }
    eng.recompute_primal();
    eng.recompute_duals();
    let final_dual_infeasibility = eng.dual_infeasibility();

    let mut beta = vec![0.0; p];
    let mut objective = 0.0;
    for (pos, var) in eng.state.basic.iter().enumerate() {
        let v = eng.state.x_basic[pos];
        match *var {
            Var::V(j) => {
                beta[j] = v;
                objective += v;
            }
            Var::W(j) => {
                beta[j] = -v;
                objective += v;
            }
            _ => {}
        }
    }
    let zeta: Vec<f64> = eng.state.row_duals[n..].iter().map(|v| -v).collect();
    let support = eng.state.factors.support_size();
    let mut sol = Solution::from_data(x, &inst.y, beta, objective, iterations, status, "simplex-ds2")?;
    let ds_violation = (norm_inf(&sol.s) - lambda).max(0.0);
    sol = sol
        .with_diagnostic("basis_support", support as f64)
        .with_diagnostic("ds_violation", ds_violation)
        .with_diagnostic("dual_infeasibility", final_dual_infeasibility)
        .with_diagnostic("max_dual_infeasibility", worst_dual_infeasibility)
        .with_diagnostic("perturbations", perturb_rounds as f64)
        .with_diagnostic("tol", opts.tol);
    sol.dual = Some(zeta);
    Ok(sol)
}

/// Nonzero entries of `β` split by `|βⱼ| ≥ threshold`, each sorted by index.
pub fn solution_profile(sol: &Solution, threshold: f64) -> (Vec<(usize, f64)>, Vec<(usize, f64)>) {
    sol.beta
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, b)| *b != 0.0)
        .partition(|(_, b)| b.abs() >= threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulations::build_ds1;
    use crate::ipm::{ipm_solve, IpmOptions};
    use crate::kernels::norm1;
    use crate::model::generate_instance;

    #[test]
    fn initial_basis_optimal_for_large_lambda() {
        let inst = generate_instance(6, 15, 2, 0.01, 3e-3, 1).unwrap();
        let inst = inst.with_lambda(inst.lambda_max() * 1.01);
        let sol = dual_simplex_solve(&inst, &SimplexOptions::default()).unwrap();
        assert_eq!(sol.iterations, 0);
        assert!(sol.beta.iter().all(|b| *b == 0.0));
    }

    #[test]
    fn zero_observations_need_no_pivots() {
        let inst = generate_instance(4, 8, 0, 0.0, 3e-3, 1).unwrap();
        let sol = dual_simplex_solve(&inst, &SimplexOptions::default()).unwrap();
        assert_eq!((sol.iterations, sol.status), (0, SolveStatus::ToleranceMet));
    }

    #[test]
    fn matches_interior_point_with_invariants() {
        for seed in 0..4 {
            let inst = generate_instance(8, 20, 2, 0.05, 0.02, seed).unwrap();
            for (pricing, bound_flipping) in [
                (Pricing::Dantzig, false),
                (Pricing::Dantzig, true),
                (Pricing::SteepestEdge, false),
                (Pricing::SteepestEdge, true),
            ] {
                let opts = SimplexOptions {
                    tol: 1e-9,
                    pricing,
                    bound_flipping,
                    check_invariants: true,
                    ..Default::default()
                };
                let mut worst: f64 = 0.0;
                let sol = dual_simplex_solve_observed(&inst, &opts, |rec| {
                    assert!(rec.r_block_basic);
                    assert!(rec.dual_infeasibility <= 1e-9, "{rec:?}");
                    worst = worst.max(rec.solve_residual.unwrap()).max(rec.dense_residual.unwrap());
                })
                .unwrap();
                assert!(worst < 1e-10);
                let ipm = ipm_solve(&inst, &build_ds1(&inst), &IpmOptions::default()).unwrap();
                assert!(
                    (sol.objective - norm1(&ipm.beta)).abs() < 1e-7 * (1.0 + sol.objective),
                    "seed {seed}"
                );
                assert!((sol.objective - norm1(&sol.beta)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn incremental_updates_agree_with_recomputation() {
        let inst = generate_instance(10, 30, 3, 0.02, 0.01, 5).unwrap();
        let a = dual_simplex_solve(&inst, &SimplexOptions::with_tol(1e-9)).unwrap();
        let opts = SimplexOptions {
            refactor_every: 5,
            ..SimplexOptions::with_tol(1e-9)
        };
        let b = dual_simplex_solve(&inst, &opts).unwrap();
        assert!((a.objective - b.objective).abs() < 1e-9);
    }

    #[test]
    fn profile_partitions_nonzeros() {
        let inst = generate_instance(4, 8, 2, 0.0, 3e-3, 3).unwrap();
        let sol = Solution::from_beta(&inst, inst.beta_true.clone(), 0.0, 0, SolveStatus::Converged, "truth").unwrap();
        let (big, small) = solution_profile(&sol, 0.5);
        assert_eq!(big.iter().map(|e| e.0).collect::<Vec<_>>(), inst.support_true);
        assert!(small.is_empty());
        let zero = Solution::from_beta(&inst, vec![0.0; 8], 0.0, 0, SolveStatus::Converged, "zero").unwrap();
        let (big, small) = solution_profile(&zero, 0.5);
        assert!(big.is_empty() && small.is_empty());
    }

    #[test]
    fn pricing_parses() {
        assert_eq!("steepest-edge".parse::<Pricing>().unwrap(), Pricing::SteepestEdge);
        assert!("devex".parse::<Pricing>().is_err());
    }
}
