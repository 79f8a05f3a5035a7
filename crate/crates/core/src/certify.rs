//! Optimality certificates for BPDN and Dantzig selector solutions, and the
//! relations between the two optima.
//!
//! BPDN weak duality: for `‖Xᵀr‖∞ ≤ λ`,
//! `λ‖β‖₁ + ½‖y − Xβ‖² ≥ yᵀr − ½‖r‖²`.
//!
//! DS weak duality: for `r = Xz`, `‖Xᵀr‖∞ ≤ λ` and `‖Xᵀ(y − Xβ)‖∞ ≤ λ`,
//! `λ‖β‖₁ ≥ yᵀr − λ‖z‖₁`. The DS gap is reported per unit of `λ` so that it
//! is measured in the units of `‖β‖₁`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{dot, norm1, norm_inf};
use crate::model::{check_len, ds_feasibility_violation, residual, ProblemInstance, Solution};

/// Default mixed tolerance: a check passes when `err ≤ tol·(1 + |value|)`.
pub const DEFAULT_TOL: f64 = 1e-6;
/// Relative slack allowed on `‖Xᵀr‖∞ ≤ λ` for a dual vector.
pub const DUAL_FEAS_TOL: f64 = 1e-9;
/// Primal DS feasibility required by [`ds_gap`].
pub const DS_FEAS_TOL: f64 = 1e-9;

/// Dual point for BPDN (`z` absent) or the Dantzig selector (`r = Xz`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub r: Vec<f64>,
    pub z: Option<Vec<f64>>,
}

impl DualCertificate {
    /// BPDN dual from a residual, scaled into `‖Xᵀr‖∞ ≤ λ`.
    pub fn bpdn_from_residual(inst: &ProblemInstance, r: &[f64]) -> Result<Self> {
        check_len("bpdn certificate r", inst.n, r.len())?;
        let corr = norm_inf(&inst.x.matvec_t(r));
        let scale = if corr > inst.lambda { inst.lambda / corr } else { 1.0 };
        Ok(DualCertificate {
            r: r.iter().map(|v| v * scale).collect(),
            z: None,
        })
    }

    /// DS dual from a direction `ζ` with `‖XᵀXζ‖∞ ≲ 1`: `z = λζ / max(1, ‖XᵀXζ‖∞)`.
    pub fn ds_from_direction(inst: &ProblemInstance, zeta: &[f64]) -> Result<Self> {
        check_len("ds certificate direction", inst.p, zeta.len())?;
        let xz = inst.x.matvec(zeta);
        let scale = inst.lambda / norm_inf(&inst.x.matvec_t(&xz)).max(1.0);
        let z: Vec<f64> = zeta.iter().map(|v| v * scale).collect();
        Ok(DualCertificate {
            r: xz.iter().map(|v| v * scale).collect(),
            z: Some(z),
        })
    }

    /// Checks `‖Xᵀr‖∞ ≤ λ(1 + 1e-9)` and, for DS duals, `‖r − Xz‖∞ ≤ 1e-9`.
    pub fn validate(&self, inst: &ProblemInstance) -> Result<()> {
        check_len("certificate r", inst.n, self.r.len())?;
        let corr = norm_inf(&inst.x.matvec_t(&self.r));
        if corr > inst.lambda * (1.0 + DUAL_FEAS_TOL) {
            return Err(Error::InfeasibleCertificate(format!(
                "‖Xᵀr‖∞ = {corr:e} exceeds lambda = {:e}",
                inst.lambda
            )));
        }
        if let Some(z) = &self.z {
            check_len("certificate z", inst.p, z.len())?;
            let xz = inst.x.matvec(z);
            let mismatch = self.r.iter().zip(&xz).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if mismatch > 1e-9 {
                return Err(Error::InfeasibleCertificate(format!("‖r − Xz‖∞ = {mismatch:e}")));
            }
        }
        Ok(())
    }
}

/// `λ‖β‖₁ + ½‖y − Xβ‖²`.
pub fn bpdn_objective(inst: &ProblemInstance, beta: &[f64]) -> Result<f64> {
    let r = residual(inst, beta)?;
    Ok(inst.lambda * norm1(beta) + 0.5 * dot(&r, &r))
}

/// `bpdn_objective(β) − (yᵀr − ½‖r‖²)` for a dual-feasible `r`.
pub fn bpdn_gap(inst: &ProblemInstance, beta: &[f64], r: &[f64]) -> Result<f64> {
    DualCertificate { r: r.to_vec(), z: None }.validate(inst)?;
    Ok(bpdn_objective(inst, beta)? - (dot(&inst.y, r) - 0.5 * dot(r, r)))
}

/// `‖β‖₁ − (yᵀr − λ‖z‖₁)/λ` for a DS-feasible `β` (to [`DS_FEAS_TOL`]).
pub fn ds_gap(inst: &ProblemInstance, beta: &[f64], cert: &DualCertificate) -> Result<f64> {
    ds_gap_with_tol(inst, beta, cert, DS_FEAS_TOL)
}

/// [`ds_gap`] with an explicit primal feasibility tolerance.
pub fn ds_gap_with_tol(inst: &ProblemInstance, beta: &[f64], cert: &DualCertificate, feas_tol: f64) -> Result<f64> {
    check_len("ds_gap beta", inst.p, beta.len())?;
    cert.validate(inst)?;
    let z = cert
        .z
        .as_ref()
        .ok_or_else(|| Error::InfeasibleCertificate("DS certificate needs z".into()))?;
    let violation = ds_feasibility_violation(inst, beta);
    if violation > feas_tol {
        return Err(Error::InfeasibleCertificate(format!(
            "primal DS violation {violation:e}"
        )));
    }
    if !(inst.lambda > 0.0) {
        return Err(Error::InvalidParameter("ds_gap needs lambda > 0".into()));
    }
    Ok(norm1(beta) - (dot(&inst.y, &cert.r) - inst.lambda * norm1(z)) / inst.lambda)
}

/// Largest violation of BPDN stationarity: `|s̃ⱼ − λ sign(βⱼ)|` on the
/// support and `max(0, |s̃ⱼ| − λ)` off it, with `s̃ = Xᵀ(y − Xβ)`.
pub fn bpdn_kkt_residual(inst: &ProblemInstance, beta: &[f64], lambda: f64) -> Result<f64> {
    bpdn_kkt_residual_thresholded(inst, beta, lambda, 0.0)
}

/// [`bpdn_kkt_residual`] treating `|βⱼ| ≤ zero_tol` as zero when choosing
/// between the two conditions. Interior solutions carry tiny nonzeros on
/// every coordinate.
pub fn bpdn_kkt_residual_thresholded(inst: &ProblemInstance, beta: &[f64], lambda: f64, zero_tol: f64) -> Result<f64> {
    let corr = inst.x.matvec_t(&residual(inst, beta)?);
    Ok(beta
        .iter()
        .zip(&corr)
        .map(|(&b, &c)| {
            if b.abs() > zero_tol {
                (c - lambda * b.signum()).abs()
            } else {
                (c.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max))
}

/// Margins of the BPDN / DS relations; each is nonnegative when the
/// relation holds exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    /// `ds_feasibility_violation(β_BPDN)`; must be at most `tol`.
    pub bpdn_ds_violation: f64,
    /// `‖β_BPDN‖₁ − ‖β_DS‖₁`.
    pub l1_margin: f64,
    /// `½‖r_DS‖² − ½‖r_BPDN‖²`.
    pub residual_margin: f64,
    pub feasible: bool,
    pub l1_holds: bool,
    pub residual_holds: bool,
}

impl CrossCheck {
    pub fn passed(&self) -> bool {
        self.feasible && self.l1_holds && self.residual_holds
    }
}

/// Which problem a solver's output solves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Bpdn,
    Ds,
}

impl ProblemKind {
    pub fn of_solver(name: &str) -> ProblemKind {
        match name {
            "greedy" | "ipm-ds3" => ProblemKind::Bpdn,
            _ => ProblemKind::Ds,
        }
    }
}

/// One named pass/fail line of a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, limit: f64) -> Check {
        Check {
            name: name.to_string(),
            value,
            limit,
            pass: value <= limit,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub solver: String,
    pub kind: ProblemKind,
    pub objective: f64,
    pub l1_norm: f64,
    pub residual_sq_half: f64,
    pub ds_violation: f64,
    pub bpdn_kkt: f64,
    pub gap: Option<f64>,
    pub checks: Vec<Check>,
}

impl SolutionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub tol: f64,
    pub solutions: Vec<SolutionReport>,
    pub cross_check: Option<CrossCheck>,
    pub pass: bool,
}

impl CertificationReport {
    pub fn failed_checks(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .solutions
            .iter()
            .flat_map(|s| {
                s.checks
                    .iter()
                    .filter(|c| !c.pass)
                    .map(move |c| format!("{}: {}", s.solver, c.name))
            })
            .collect();
        if let Some(c) = &self.cross_check {
            for (ok, name) in [
                (c.feasible, "bpdn optimum is ds-feasible"),
                (c.l1_holds, "ds l1 norm <= bpdn l1 norm"),
                (c.residual_holds, "bpdn residual <= ds residual"),
            ] {
                if !ok {
                    out.push(format!("cross-check: {name}"));
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Certifies one solution against the problem its solver targets.
///
/// BPDN: KKT residual (entries below `tol·max(1, ‖β‖∞)` count as zero) and
/// gap against the scaled residual dual, each at most `tol·(1 + |objective|)`. DS: primal violation at most `tol·(1 + λ)` and the
/// gap against the solver's dual direction at most `tol·(1 + ‖β‖₁)`.
pub fn certify_solution(inst: &ProblemInstance, sol: &Solution, tol: f64) -> Result<SolutionReport> {
    check_len("certified beta", inst.p, sol.beta.len())?;
    let kind = ProblemKind::of_solver(&sol.solver_name);
    let r = residual(inst, &sol.beta)?;
    let l1 = norm1(&sol.beta);
    let bpdn_obj = bpdn_objective(inst, &sol.beta)?;
    let kkt = bpdn_kkt_residual_thresholded(inst, &sol.beta, inst.lambda, tol * norm_inf(&sol.beta).max(1.0))?;
    let violation = ds_feasibility_violation(inst, &sol.beta);
    let mut checks = Vec::new();
    let (objective, gap) = match kind {
        ProblemKind::Bpdn => {
            let limit = tol * (1.0 + bpdn_obj.abs());
            checks.push(Check::at_most("bpdn_kkt", kkt, limit));
            let cert = DualCertificate::bpdn_from_residual(inst, &r)?;
            let gap = bpdn_gap(inst, &sol.beta, &cert.r)?;
            checks.push(Check::at_most("bpdn_gap", gap, limit));
            checks.push(Check::at_most(
                "bpdn_gap_nonnegative",
                -gap,
                1e-9 * (1.0 + bpdn_obj.abs()),
            ));
            (bpdn_obj, Some(gap))
        }
        ProblemKind::Ds => {
            checks.push(Check::at_most("ds_violation", violation, tol * (1.0 + inst.lambda)));
            let gap = match &sol.dual {
                Some(zeta) => {
                    let cert = DualCertificate::ds_from_direction(inst, zeta)?;
                    ds_gap_with_tol(inst, &sol.beta, &cert, f64::INFINITY).ok()
                }
                None => None,
            };
            let limit = tol * (1.0 + l1);
            checks.push(Check::at_most("ds_gap", gap.map_or(f64::INFINITY, f64::abs), limit));
            (l1, gap)
        }
    };
    Ok(SolutionReport {
        solver: sol.solver_name.clone(),
        kind,
        objective,
        l1_norm: l1,
        residual_sq_half: 0.5 * dot(&r, &r),
        ds_violation: violation,
        bpdn_kkt: kkt,
        gap,
        checks,
    })
}

/// Checks that the BPDN optimum is DS-feasible, has no smaller `‖β‖₁` than
/// the DS optimum, and no larger residual. Both inputs must certify.
pub fn cross_check(inst: &ProblemInstance, sol_bpdn: &Solution, sol_ds: &Solution, tol: f64) -> Result<CrossCheck> {
    for sol in [sol_bpdn, sol_ds] {
        let rep = certify_solution(inst, sol, tol)?;
        if !rep.passed() {
            return Err(Error::InfeasibleCertificate(format!(
                "{} solution is not certified optimal",
                sol.solver_name
            )));
        }
    }
    let r_b = residual(inst, &sol_bpdn.beta)?;
    let r_d = residual(inst, &sol_ds.beta)?;
    let bpdn_ds_violation = ds_feasibility_violation(inst, &sol_bpdn.beta);
    let l1_margin = norm1(&sol_bpdn.beta) - norm1(&sol_ds.beta);
    let residual_margin = 0.5 * dot(&r_d, &r_d) - 0.5 * dot(&r_b, &r_b);
    Ok(CrossCheck {
        bpdn_ds_violation,
        l1_margin,
        residual_margin,
        feasible: bpdn_ds_violation <= tol,
        l1_holds: l1_margin >= -tol,
        residual_holds: residual_margin >= -tol,
    })
}

/// Certifies one or two solutions; with two, runs [`cross_check`] with the
/// BPDN solution first.
pub fn certify(inst: &ProblemInstance, solutions: &[&Solution], tol: f64) -> Result<CertificationReport> {
    let reports = solutions
        .iter()
        .map(|s| certify_solution(inst, s, tol))
        .collect::<Result<Vec<_>>>()?;
    let mut pass = reports.iter().all(SolutionReport::passed);
    let cross = match solutions {
        [a, b] if pass => {
            let (bp, ds) = if ProblemKind::of_solver(&a.solver_name) == ProblemKind::Bpdn {
                (a, b)
            } else {
                (b, a)
            };
            let c = cross_check(inst, bp, ds, tol)?;
            pass &= c.passed();
            Some(c)
        }
        _ => None,
    };
    Ok(CertificationReport {
        tol,
        solutions: reports,
        cross_check: cross,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_instance, SolveStatus};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small() -> ProblemInstance {
        generate_instance(6, 14, 2, 0.05, 0.02, 21).unwrap()
    }

    #[test]
    fn bpdn_objective_cases() {
        let inst = small();
        let half = 0.5 * dot(&inst.y, &inst.y);
        assert_eq!(bpdn_objective(&inst, &[0.0; 14]).unwrap(), half);
        let beta: Vec<f64> = (0..14).map(|j| (j as f64 * 0.7).cos()).collect();
        let mut naive = 0.0;
        for i in 0..6 {
            let mut fit = 0.0;
            for j in 0..14 {
                fit += inst.x.get(i, j) * beta[j];
            }
            naive += 0.5 * (inst.y[i] - fit).powi(2);
        }
        naive += 0.02 * beta.iter().map(|b| b.abs()).sum::<f64>();
        assert!((bpdn_objective(&inst, &beta).unwrap() - naive).abs() < 1e-13);
    }

    #[test]
    fn bpdn_gap_cases_and_identity() {
        let inst = small();
        let half = 0.5 * dot(&inst.y, &inst.y);
        assert_eq!(bpdn_gap(&inst, &[0.0; 14], &[0.0; 6]).unwrap(), half);
        let big = inst.with_lambda(inst.lambda_max());
        assert_eq!(bpdn_gap(&big, &[0.0; 14], &big.y).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let beta: Vec<f64> = (0..14).map(|_| rng.random_range(-0.2..0.2)).collect();
            let r = residual(&inst, &beta).unwrap();
            let lam = norm_inf(&inst.x.matvec_t(&r)) * rng.random_range(1.0..2.0);
            let inst = inst.with_lambda(lam);
            let gap = bpdn_gap(&inst, &beta, &r).unwrap();
            let identity = lam * norm1(&beta) - dot(&inst.x.matvec_t(&r), &beta);
            assert!((gap - identity).abs() < 1e-12 * (1.0 + gap.abs()));
        }
        assert!(bpdn_gap(&inst, &[0.0; 14], &inst.y).is_err());
    }

    #[test]
    fn bpdn_weak_duality_sweep() {
        let inst = small();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let beta: Vec<f64> = (0..14).map(|_| rng.random_range(-1.0..1.0)).collect();
            let raw: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let cert = DualCertificate::bpdn_from_residual(&inst, &raw).unwrap();
            assert!(bpdn_gap(&inst, &beta, &cert.r).unwrap() >= -1e-9);
        }
    }

    #[test]
    fn kkt_residual_cases() {
        let inst = small();
        let big = inst.with_lambda(inst.lambda_max());
        assert_eq!(bpdn_kkt_residual(&big, &[0.0; 14], big.lambda).unwrap(), 0.0);
        let x = crate::kernels::DenseMatrix::from_rows(&[vec![0.6], vec![0.8]]).unwrap();
        let single = ProblemInstance::new(x, vec![1.0, 2.0], 0.5, None).unwrap();
        let b = 0.6 + 1.6 - 0.5;
        assert!(bpdn_kkt_residual(&single, &[b], 0.5).unwrap() < 1e-15);
    }

    #[test]
    fn ds_gap_zero_at_trivial_optimum() {
        let inst = small();
        let big = inst.with_lambda(inst.lambda_max());
        let cert = DualCertificate {
            r: vec![0.0; 6],
            z: Some(vec![0.0; 14]),
        };
        assert_eq!(ds_gap(&big, &[0.0; 14], &cert).unwrap(), 0.0);
        assert!(ds_gap(&inst, &[0.0; 14], &cert).is_err());
    }

    #[test]
    fn cross_check_trivial_margins() {
        let inst = small();
        let big = inst.with_lambda(inst.lambda_max() * 1.01);
        let mk = |name: &str| {
            let mut s = Solution::from_beta(&big, vec![0.0; 14], 0.0, 0, SolveStatus::Converged, name).unwrap();
            s.dual = Some(vec![0.0; 14]);
            s
        };
        let c = cross_check(&big, &mk("greedy"), &mk("simplex-ds2"), DEFAULT_TOL).unwrap();
        assert_eq!((c.bpdn_ds_violation, c.l1_margin, c.residual_margin), (0.0, 0.0, 0.0));
        assert!(c.passed());
    }
}
