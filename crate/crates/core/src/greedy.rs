//! Greedy active-set solver for BPDN at a single `λ`.
//!
//! Each outer iteration adds the inactive column with the largest
//! `|xⱼᵀ r|` and re-solves the restricted stationarity system
//! `Sᵀ(y − Sβ) = λ·signs` by sign iteration on a fresh QR of `S`.

use crate::error::{Error, Result};
use crate::kernels::{norm1, norm_inf, qr_factor, DenseMatrix, QrFactors};
use crate::model::{check_len, ProblemInstance, Solution, SolveStatus};

pub const DEFAULT_TOL: f64 = 1e-6;

/// Columns selected so far, in insertion order.
#[derive(Clone, Debug)]
pub struct ActiveSet {
    pub indices: Vec<usize>,
    pub signs: Vec<f64>,
    pub s: DenseMatrix,
    pub qr: Option<QrFactors>,
}

impl ActiveSet {
    fn empty(n: usize) -> Self {
        ActiveSet {
            indices: Vec::new(),
            signs: Vec::new(),
            s: DenseMatrix::zeros(n, 0),
            qr: None,
        }
    }

    fn rebuild(&mut self, x: &DenseMatrix) -> Result<()> {
        self.s = x.select_columns(&self.indices);
        self.qr = if self.indices.is_empty() {
            None
        } else {
            Some(qr_factor(&self.s)?)
        };
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

fn sign(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Sign iteration against an existing factorization. On failure the error
/// carries positions within `S` that flipped on the last inner iteration.
fn sign_iteration(qr: &QrFactors, sty: &[f64], lambda: f64, sign_guess: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = sty.len();
    let mut signs: Vec<f64> = sign_guess.iter().map(|&s| sign(s)).collect();
    let mut flipped = Vec::new();
    for _ in 0..(2 * k).max(1) {
        let rhs: Vec<f64> = sty.iter().zip(&signs).map(|(a, s)| a - lambda * s).collect();
        let beta = qr.solve_normal(&rhs)?;
        // An exact zero keeps its current sign.
        let next: Vec<f64> = beta
            .iter()
            .zip(&signs)
            .map(|(&b, &s)| if b == 0.0 { s } else { sign(b) })
            .collect();
        flipped = (0..k).filter(|&i| next[i] != signs[i]).collect();
        if flipped.is_empty() {
            return Ok((beta, signs));
        }
        signs = next;
    }
    Err(Error::SignCycle { flipped })
}

/// One feature-sign step on the restricted objective `λ‖β‖₁ + ½‖y − Sβ‖²`:
/// moves from the sign-consistent `start` toward the minimizer for `signs`
/// and returns the best of the zero crossings and the endpoint. Coordinates
/// that cross zero at the returned point are exactly 0.
fn feature_sign_step(
    s: &DenseMatrix,
    qr: &QrFactors,
    y: &[f64],
    sty: &[f64],
    lambda: f64,
    start: &[f64],
    signs: &[f64],
) -> Result<Vec<f64>> {
    let rhs: Vec<f64> = sty.iter().zip(signs).map(|(a, sg)| a - lambda * sg).collect();
    let target = qr.solve_normal(&rhs)?;
    let objective = |b: &[f64]| {
        let fit = s.matvec(b);
        lambda * norm1(b) + 0.5 * y.iter().zip(&fit).map(|(u, v)| (u - v) * (u - v)).sum::<f64>()
    };
    let at = |t: f64| -> Vec<f64> { start.iter().zip(&target).map(|(a, b)| a + t * (b - a)).collect() };
    let mut best = target.clone();
    let mut best_obj = objective(&best);
    let mut crossings: Vec<(f64, usize)> = (0..start.len())
        .filter(|&i| start[i] != 0.0 && sign(target[i]) != sign(start[i]))
        .map(|i| (start[i] / (start[i] - target[i]), i))
        .collect();
    crossings.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for (t, i) in crossings {
        let mut point = at(t);
        point[i] = 0.0;
        let obj = objective(&point);
        if obj < best_obj {
            best = point;
            best_obj = obj;
        }
    }
    Ok(best)
}

/// Solves `Sᵀ(y − S β) = λ·sign(β)` for `β` by sign iteration from
/// `sign_guess`. Returns `(β, signs)`.
pub fn restricted_kkt_solve(
    s: &DenseMatrix,
    y: &[f64],
    lambda: f64,
    sign_guess: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_len("restricted_kkt_solve y", s.rows(), y.len())?;
    check_len("restricted_kkt_solve signs", s.cols(), sign_guess.len())?;
    if s.cols() == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let qr = qr_factor(s)?;
    sign_iteration(&qr, &s.matvec_t(y), lambda, sign_guess)
}

/// Greedy BPDN. `tol` scales the dual-feasibility test
/// `‖Xᵀr‖∞ ≤ λ(1 + tol)`; `max_iters` bounds the number of additions.
pub fn greedy_solve(inst: &ProblemInstance, lambda: f64, tol: f64, max_iters: usize) -> Result<Solution> {
    if !(lambda > 0.0) || !(tol >= 0.0) || max_iters == 0 {
        return Err(Error::InvalidParameter(format!(
            "greedy needs lambda > 0, tol >= 0, max_iters >= 1 (got {lambda}, {tol}, {max_iters})"
        )));
    }
    let (n, p) = (inst.n, inst.p);
    let x = &inst.x;
    let threshold = lambda * (1.0 + tol);

    let mut active = ActiveSet::empty(n);
    let mut in_set = vec![false; p];
    let mut beta_s: Vec<f64> = Vec::new();
    let mut r = inst.y.clone();
    let mut corr = x.matvec_t(&r);
    let mut prev_max = norm_inf(&corr);
    let mut iterations = 0usize;
    let mut removals = 0usize;

    let status = loop {
        let best = (0..p)
            .filter(|&j| !in_set[j])
            .fold(None::<(usize, f64)>, |acc, j| match acc {
                Some((_, v)) if corr[j].abs() <= v => acc,
                _ => Some((j, corr[j].abs())),
            });
        let (entering, violation) = match best {
            Some(b) if b.1 > threshold => b,
            _ => break SolveStatus::ToleranceMet,
        };
        if iterations >= max_iters {
            break SolveStatus::IterationLimit;
        }
        if active.len() >= n {
            return Err(Error::RankGuard { limit: n });
        }
        log::trace!("greedy iteration {iterations}: add {entering} (|x_j'r| = {violation:e})");

        active.indices.push(entering);
        active.signs.push(sign(corr[entering]));
        in_set[entering] = true;
        iterations += 1;

        // Last sign-consistent point, with the entering column at zero.
        let mut start: Vec<f64> = beta_s.iter().copied().chain(std::iter::once(0.0)).collect();
        let mut steps = 0usize;
        loop {
            active.rebuild(x)?;
            let Some(qr) = active.qr.as_ref() else {
                beta_s.clear();
                break;
            };
            let sty = active.s.matvec_t(&inst.y);
            match sign_iteration(qr, &sty, lambda, &active.signs) {
                Ok((b, signs)) => {
                    beta_s = b;
                    active.signs = signs;
                    break;
                }
                Err(Error::SignCycle { flipped }) if steps < 4 * active.len() + 4 => {
                    steps += 1;
                    let point = feature_sign_step(&active.s, qr, &inst.y, &sty, lambda, &start, &active.signs)?;
                    let mut kept = Vec::with_capacity(point.len());
                    for pos in (0..point.len()).rev() {
                        if point[pos] == 0.0 {
                            let dropped = active.indices.remove(pos);
                            active.signs.remove(pos);
                            in_set[dropped] = false;
                            removals += 1;
                            log::debug!("greedy: sign cycle on {flipped:?}, dropping column {dropped}");
                        } else {
                            active.signs[pos] = sign(point[pos]);
                            kept.push(point[pos]);
                        }
                    }
                    kept.reverse();
                    start = kept;
                }
                Err(e) => return Err(e),
            }
        }

        let fitted = active.s.matvec(&beta_s);
        r = inst.y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
        corr = x.matvec_t(&r);
        let cur_max = norm_inf(&corr);
        if cur_max > prev_max * (1.0 + 1e-12) {
            log::warn!("greedy: max |x_j'r| rose from {prev_max:e} to {cur_max:e} at iteration {iterations}");
        }
        prev_max = cur_max;
    };

    let mut beta = vec![0.0; p];
    for (&j, &b) in active.indices.iter().zip(&beta_s) {
        beta[j] = b;
    }
    let objective = lambda * norm1(&beta) + 0.5 * r.iter().map(|v| v * v).sum::<f64>();
    let violation = (norm_inf(&corr) - lambda).max(0.0);
    Ok(
        Solution::from_data(x, &inst.y, beta, objective, iterations, status, "greedy")?
            .with_diagnostic("removals", removals as f64)
            .with_diagnostic("active_size", active.len() as f64)
            .with_diagnostic("ds_violation", violation)
            .with_diagnostic("max_correlation", norm_inf(&corr)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::generate_instance;
    use proptest::prelude::*;

    #[test]
    fn single_column_scalar_stationarity() {
        let s = DenseMatrix::from_rows(&[vec![0.6], vec![0.8]]).unwrap();
        let y = [1.0, 2.0];
        let (b, signs) = restricted_kkt_solve(&s, &y, 0.5, &[1.0]).unwrap();
        assert!((b[0] - (0.6 + 1.6 - 0.5)).abs() < 1e-14);
        assert_eq!(signs, vec![1.0]);
    }

    #[test]
    fn orthonormal_columns_soft_threshold() {
        let s = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let y = [2.0, -3.0, 5.0];
        let (b, _) = restricted_kkt_solve(&s, &y, 0.5, &[-1.0, -1.0]).unwrap();
        assert!((b[0] - 1.5).abs() < 1e-14 && (b[1] + 2.5).abs() < 1e-14);
    }

    #[test]
    fn sign_cycle_is_reported() {
        // Coordinate 1 is below the threshold, so no sign pattern is consistent.
        let s = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let err = restricted_kkt_solve(&s, &[2.0, 0.1], 0.5, &[1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::SignCycle { ref flipped } if flipped == &vec![1]));
    }

    #[test]
    fn zero_when_lambda_dominates() {
        let inst = generate_instance(10, 30, 3, 0.01, 1.0, 5).unwrap();
        let lam = 1.01 * inst.lambda_max();
        let sol = greedy_solve(&inst, lam, DEFAULT_TOL, 10).unwrap();
        assert_eq!(sol.iterations, 0);
        assert_eq!(sol.status, SolveStatus::ToleranceMet);
        assert!(sol.beta.iter().all(|b| *b == 0.0));
        assert_eq!(sol.r, inst.y);
    }

    #[test]
    fn terminal_kkt_holds() {
        let inst = generate_instance(20, 60, 3, 0.01, 0.05, 8).unwrap();
        let sol = greedy_solve(&inst, 0.05, 1e-8, 20).unwrap();
        assert!(sol.status.is_success());
        let corr = inst.x.matvec_t(&sol.r);
        for j in 0..inst.p {
            if sol.beta[j] != 0.0 {
                assert!((corr[j] - 0.05 * sol.beta[j].signum()).abs() < 1e-10);
            } else {
                assert!(corr[j].abs() <= 0.05 * (1.0 + 1e-8));
            }
        }
    }

    #[test]
    fn invalid_parameters() {
        let inst = generate_instance(4, 8, 1, 0.0, 0.1, 1).unwrap();
        assert!(greedy_solve(&inst, 0.0, 1e-6, 4).is_err());
        assert!(greedy_solve(&inst, 0.1, 1e-6, 0).is_err());
    }

    fn enumerate_signs(s: &DenseMatrix, y: &[f64], lambda: f64) -> Option<Vec<f64>> {
        let k = s.cols();
        let g = s.gram();
        let sty = s.matvec_t(y);
        let mut found = None;
        for mask in 0..(1u32 << k) {
            let signs: Vec<f64> = (0..k).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
            let m = nalgebra::DMatrix::from_fn(k, k, |i, j| g.get(i, j));
            let rhs = nalgebra::DVector::from_fn(k, |i, _| sty[i] - lambda * signs[i]);
            let b = m.lu().solve(&rhs)?;
            if (0..k).all(|i| b[i] != 0.0 && b[i].signum() == signs[i]) {
                found = Some(b.iter().copied().collect());
            }
        }
        found
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn random_6x3_matches_sign_enumeration(
            entries in proptest::collection::vec(-1.0f64..1.0, 18),
            y in proptest::collection::vec(-3.0f64..3.0, 6),
            lambda in 0.01f64..0.5,
        ) {
            let s = DenseMatrix::from_vec(6, 3, entries).unwrap();
            prop_assume!(qr_factor(&s).is_ok());
            let oracle = enumerate_signs(&s, &y, lambda);
            if let Ok((b, signs)) = restricted_kkt_solve(&s, &y, lambda, &s.matvec_t(&y)) {
                let r: Vec<f64> = y.iter().zip(s.matvec(&b)).map(|(a, c)| a - c).collect();
                let st = s.matvec_t(&r);
                for i in 0..3 {
                    prop_assert!((st[i] - lambda * signs[i]).abs() < 1e-10);
                    prop_assert_eq!(b[i].signum(), signs[i]);
                }
                let o = oracle.expect("a consistent pattern exists");
                for i in 0..3 {
                    prop_assert!((o[i] - b[i]).abs() < 1e-9);
                }
            }
        }
    }
}
