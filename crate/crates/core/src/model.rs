//! Problem instances, the synthetic generator, and solution records.
//!
//! The generator draws everything from ChaCha20 seeded with the instance
//! seed, using one stream per quantity so that changing one draw never
//! shifts another:
//!
//! | stream | quantity                                   |
//! |--------|--------------------------------------------|
//! | 0      | support (partial Fisher–Yates over `0..p`) |
//! | 1      | signs (sign of a standard Gaussian)        |
//! | 2      | the `p x n` Gaussian matrix that is QR'd   |
//! | 3      | observation noise                          |
//!
//! Gaussians come from `rand_distr::StandardNormal` (ziggurat).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{norm_inf, qr_factor, DenseMatrix};

pub const DEFAULT_SIGMA: f64 = 0.005;
pub const DEFAULT_LAMBDA: f64 = 3e-3;

const STREAM_SUPPORT: u64 = 0;
const STREAM_SIGNS: u64 = 1;
const STREAM_MATRIX: u64 = 2;
const STREAM_NOISE: u64 = 3;

/// A sparse-recovery instance `y = X beta_true + noise`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    pub n: usize,
    pub p: usize,
    pub x: DenseMatrix,
    pub y: Vec<f64>,
    pub lambda: f64,
    pub beta_true: Vec<f64>,
    /// Sorted nonzero positions of `beta_true`.
    pub support_true: Vec<usize>,
    pub sigma: f64,
    pub seed: u64,
}

impl ProblemInstance {
    /// Wraps user data. `beta_true` defaults to zero when not known.
    pub fn new(x: DenseMatrix, y: Vec<f64>, lambda: f64, beta_true: Option<Vec<f64>>) -> Result<Self> {
        let (n, p) = (x.rows(), x.cols());
        check_len("ProblemInstance y", n, y.len())?;
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
        }
        let beta_true = beta_true.unwrap_or_else(|| vec![0.0; p]);
        check_len("ProblemInstance beta_true", p, beta_true.len())?;
        let support_true = support_of(&beta_true, 0.0);
        Ok(ProblemInstance {
            n,
            p,
            x,
            y,
            lambda,
            beta_true,
            support_true,
            sigma: 0.0,
            seed: 0,
        })
    }

    pub fn t(&self) -> usize {
        self.support_true.len()
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        ProblemInstance { lambda, ..self.clone() }
    }

    /// `‖Xᵀ y‖∞`, the smallest λ for which β = 0 is optimal for both models.
    pub fn lambda_max(&self) -> f64 {
        norm_inf(&self.x.matvec_t(&self.y))
    }

    pub fn to_json(&self) -> Result<String> {
        let wire = InstanceFile {
            n: self.n,
            p: self.p,
            t: self.t(),
            lambda: self.lambda,
            sigma: self.sigma,
            seed: self.seed,
            x: self.x.to_rows(),
            y: self.y.clone(),
            beta_true: self.beta_true.clone(),
            support: self.support_true.clone(),
        };
        Ok(serde_json::to_string(&wire)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let wire: InstanceFile = serde_json::from_str(text)?;
        let x = if wire.x.is_empty() {
            DenseMatrix::zeros(0, wire.p)
        } else {
            DenseMatrix::from_rows(&wire.x)?
        };
        check_len("instance X rows", wire.n, x.rows())?;
        check_len("instance X cols", wire.p, x.cols())?;
        let mut inst = ProblemInstance::new(x, wire.y, wire.lambda, Some(wire.beta_true))?;
        if inst.support_true != wire.support || wire.t != wire.support.len() {
            return Err(Error::InvalidParameter(
                "instance support does not match beta_true".into(),
            ));
        }
        inst.sigma = wire.sigma;
        inst.seed = wire.seed;
        Ok(inst)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    n: usize,
    p: usize,
    #[serde(rename = "T")]
    t: usize,
    lambda: f64,
    sigma: f64,
    seed: u64,
    #[serde(rename = "X")]
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    beta_true: Vec<f64>,
    support: Vec<usize>,
}

/// Draws an instance: `X` has orthonormal rows (the transposed thin-QR `Q`
/// of a `p x n` Gaussian matrix), `beta_true` has `t` entries of ±1 and
/// `y = X beta_true + sigma * noise`.
pub fn generate_instance(n: usize, p: usize, t: usize, sigma: f64, lambda: f64, seed: u64) -> Result<ProblemInstance> {
    if t > p {
        return Err(Error::InvalidParameter(format!("T = {t} exceeds p = {p}")));
    }
    if n > p {
        return Err(Error::InvalidParameter(format!("n = {n} exceeds p = {p}")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!("sigma must be >= 0, got {sigma}")));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }

    let stream = |k: u64| {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(k);
        rng
    };

    // Partial Fisher–Yates: the first t slots of a uniform permutation.
    let mut rng = stream(STREAM_SUPPORT);
    let mut perm: Vec<usize> = (0..p).collect();
    for i in 0..t {
        let j = rng.random_range(i..p);
        perm.swap(i, j);
    }
    let chosen = &perm[..t];

    let mut rng = stream(STREAM_SIGNS);
    let mut beta_true = vec![0.0; p];
    for &j in chosen {
        let g: f64 = rng.sample(StandardNormal);
        beta_true[j] = if g < 0.0 { -1.0 } else { 1.0 };
    }

    let mut rng = stream(STREAM_MATRIX);
    let g = DenseMatrix::from_fn(p, n, |_, _| rng.sample(StandardNormal));
    let x = qr_factor(&g)?.thin_q().transpose();

    let mut rng = stream(STREAM_NOISE);
    let mut y = x.matvec(&beta_true);
    if sigma > 0.0 {
        for yi in &mut y {
            let e: f64 = rng.sample(StandardNormal);
            *yi += sigma * e;
        }
    }

    let mut inst = ProblemInstance::new(x, y, lambda, Some(beta_true))?;
    inst.sigma = sigma;
    inst.seed = seed;
    Ok(inst)
}

/// `r = y − X β`.
pub fn residual(inst: &ProblemInstance, beta: &[f64]) -> Result<Vec<f64>> {
    check_len("residual beta", inst.p, beta.len())?;
    let xb = inst.x.matvec(beta);
    Ok(inst.y.iter().zip(&xb).map(|(y, v)| y - v).collect())
}

/// `s = −Xᵀ r`.
pub fn dual_vector(inst: &ProblemInstance, r: &[f64]) -> Result<Vec<f64>> {
    check_len("dual_vector r", inst.n, r.len())?;
    let mut s = inst.x.matvec_t(r);
    for v in &mut s {
        *v = -*v;
    }
    Ok(s)
}

/// `max(0, ‖Xᵀ(y − Xβ)‖∞ − λ)`.
pub fn ds_feasibility_violation(inst: &ProblemInstance, beta: &[f64]) -> f64 {
    let r = residual(inst, beta).expect("beta has length p");
    (norm_inf(&inst.x.matvec_t(&r)) - inst.lambda).max(0.0)
}

/// Indices `j` with `|v_j| > tol`, ascending.
pub fn support_of(v: &[f64], tol: f64) -> Vec<usize> {
    v.iter()
        .enumerate()
        .filter(|(_, x)| x.abs() > tol)
        .map(|(j, _)| j)
        .collect()
}

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Solutions
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    IterationLimit,
    ToleranceMet,
    InfeasibleDetected,
}

impl SolveStatus {
    pub fn is_success(self) -> bool {
        matches!(self, SolveStatus::Converged | SolveStatus::ToleranceMet)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::IterationLimit => "iteration-limit",
            SolveStatus::ToleranceMet => "tolerance-met",
            SolveStatus::InfeasibleDetected => "infeasible-detected",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Output of any solver. `r` and `s` are always recomputed from `beta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub beta: Vec<f64>,
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    pub solver_name: String,
    pub diagnostics: BTreeMap<String, f64>,
    /// Dual direction `ζ` for Dantzig-selector solvers, normalized so that
    /// `‖XᵀX ζ‖∞ ≤ 1`; the matching certificate is `z = λζ`, `r = Xz`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual: Option<Vec<f64>>,
}

impl Solution {
    pub fn from_beta(
        inst: &ProblemInstance,
        beta: Vec<f64>,
        objective: f64,
        iterations: usize,
        status: SolveStatus,
        solver_name: impl Into<String>,
    ) -> Result<Self> {
        Self::from_data(&inst.x, &inst.y, beta, objective, iterations, status, solver_name)
    }

    /// Like [`Solution::from_beta`] for callers holding only `X` and `y`.
    pub fn from_data(
        x: &DenseMatrix,
        y: &[f64],
        beta: Vec<f64>,
        objective: f64,
        iterations: usize,
        status: SolveStatus,
        solver_name: impl Into<String>,
    ) -> Result<Self> {
        check_len("Solution beta", x.cols(), beta.len())?;
        check_len("Solution y", x.rows(), y.len())?;
        let xb = x.matvec(&beta);
        let r: Vec<f64> = y.iter().zip(&xb).map(|(a, b)| a - b).collect();
        let s: Vec<f64> = x.matvec_t(&r).into_iter().map(|v| -v).collect();
        Ok(Solution {
            beta,
            r,
            s,
            objective,
            iterations,
            status,
            solver_name: solver_name.into(),
            diagnostics: BTreeMap::new(),
            dual: None,
        })
    }

    pub fn with_diagnostic(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }

    pub fn support_size(&self, tol: f64) -> usize {
        self.beta.iter().filter(|b| b.abs() > tol).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_dev(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn generator_matches_first_table_row() {
        let inst = generate_instance(120, 512, 20, DEFAULT_SIGMA, DEFAULT_LAMBDA, 1).unwrap();
        let xxt = inst.x.aat();
        assert!(xxt.sub(&DenseMatrix::identity(120)).max_abs() < 1e-10);
        assert_eq!(inst.support_true.len(), 20);
        assert!(inst.support_true.iter().all(|&j| inst.beta_true[j].abs() == 1.0));
        assert_eq!(support_of(&inst.beta_true, 0.0).len(), 20);
    }

    #[test]
    fn generator_zero_signal_zero_noise() {
        let inst = generate_instance(4, 8, 0, 0.0, 3e-3, 9).unwrap();
        assert!(inst.beta_true.iter().all(|&b| b == 0.0));
        assert!(inst.y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn generator_noise_free_support_least_squares() {
        let inst = generate_instance(4, 8, 2, 0.0, 3e-3, 13).unwrap();
        // Independent oracle: 2x2 normal equations on the known support.
        let s = &inst.support_true;
        let a = inst.x.column(s[0]);
        let b = inst.x.column(s[1]);
        let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| p * q).sum::<f64>();
        let (g11, g12, g22) = (dot(&a, &a), dot(&a, &b), dot(&b, &b));
        let (h1, h2) = (dot(&a, &inst.y), dot(&b, &inst.y));
        let det = g11 * g22 - g12 * g12;
        let c1 = (g22 * h1 - g12 * h2) / det;
        let c2 = (g11 * h2 - g12 * h1) / det;
        assert!((c1 - inst.beta_true[s[0]]).abs() < 1e-12);
        assert!((c2 - inst.beta_true[s[1]]).abs() < 1e-12);
    }

    #[test]
    fn generator_rejects_bad_sizes() {
        assert!(matches!(
            generate_instance(4, 8, 9, 0.0, 1e-3, 0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            generate_instance(9, 8, 1, 0.0, 1e-3, 0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(generate_instance(4, 8, 1, -1.0, 1e-3, 0).is_err());
    }

    #[test]
    fn generator_is_reproducible() {
        let a = generate_instance(20, 50, 4, 0.01, 3e-3, 77).unwrap();
        let b = generate_instance(20, 50, 4, 0.01, 3e-3, 77).unwrap();
        assert_eq!(a, b);
        let c = generate_instance(20, 50, 4, 0.01, 3e-3, 78).unwrap();
        assert_ne!(a.x, c.x);
    }

    #[test]
    fn residual_and_dual_vector() {
        let inst = generate_instance(6, 15, 3, 0.0, 1e-3, 4).unwrap();
        assert_eq!(residual(&inst, &[0.0; 15]).unwrap(), inst.y);
        assert!(norm_inf(&residual(&inst, &inst.beta_true).unwrap()) < 1e-15);
        assert!(dual_vector(&inst, &[0.0; 6]).unwrap().iter().all(|&v| v == 0.0));
        assert!(residual(&inst, &[0.0; 3]).is_err());
        assert!(dual_vector(&inst, &[0.0; 3]).is_err());

        // Naive triple-loop oracles.
        let beta: Vec<f64> = (0..15).map(|j| ((j * 7 % 5) as f64 - 2.0) * 0.3).collect();
        let r = residual(&inst, &beta).unwrap();
        let naive_r: Vec<f64> = (0..6)
            .map(|i| inst.y[i] - (0..15).map(|j| inst.x.get(i, j) * beta[j]).sum::<f64>())
            .collect();
        assert!(max_dev(&r, &naive_r) < 1e-15);
        let s = dual_vector(&inst, &r).unwrap();
        let naive_s: Vec<f64> = (0..15)
            .map(|j| -(0..6).map(|i| inst.x.get(i, j) * r[i]).sum::<f64>())
            .collect();
        assert!(max_dev(&s, &naive_s) < 1e-15);
    }

    #[test]
    fn zero_beta_dual_is_minus_xty() {
        let inst = generate_instance(5, 12, 2, 0.01, 3e-3, 2).unwrap();
        let r = residual(&inst, &[0.0; 12]).unwrap();
        let s = dual_vector(&inst, &r).unwrap();
        let xty = inst.x.matvec_t(&inst.y);
        assert!(s.iter().zip(&xty).all(|(a, b)| *a == -*b));
    }

    #[test]
    fn feasibility_violation_cases() {
        let inst = generate_instance(5, 12, 2, 0.01, 3e-3, 3).unwrap();
        let zero = vec![0.0; 12];
        let lmax = inst.lambda_max();
        assert_eq!(ds_feasibility_violation(&inst.with_lambda(lmax), &zero), 0.0);
        assert_eq!(ds_feasibility_violation(&inst.with_lambda(2.0 * lmax), &zero), 0.0);
        assert_eq!(ds_feasibility_violation(&inst.with_lambda(0.0), &zero), lmax);
        // Noise-free truth is feasible even at λ = 0.
        let clean = generate_instance(5, 12, 2, 0.0, 0.0, 3).unwrap();
        assert!(ds_feasibility_violation(&clean, &clean.beta_true) < 1e-15);
    }

    #[test]
    fn instance_json_round_trips_bit_exactly() {
        let inst = generate_instance(7, 19, 3, 0.005, 3e-3, 5).unwrap();
        let text = inst.to_json().unwrap();
        let back = ProblemInstance::from_json(&text).unwrap();
        assert_eq!(inst, back);
        assert_eq!(text, back.to_json().unwrap());
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["T"], 3);
        assert_eq!(v["X"].as_array().unwrap().len(), 7);
    }

    #[test]
    fn solution_json_round_trips() {
        let inst = generate_instance(4, 9, 2, 0.005, 3e-3, 5).unwrap();
        let sol = Solution::from_beta(
            &inst,
            inst.beta_true.clone(),
            2.0,
            3,
            SolveStatus::ToleranceMet,
            "greedy",
        )
        .unwrap()
        .with_diagnostic("ds_violation", 1.25e-7);
        let text = sol.to_json().unwrap();
        assert!(text.contains("\"tolerance-met\""));
        assert_eq!(Solution::from_json(&text).unwrap(), sol);
    }
}
