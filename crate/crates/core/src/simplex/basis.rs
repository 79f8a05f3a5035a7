//! Structured basis of the DS2 program
//!
//! ```text
//! [ X  −X  I   0 ] (v, w, r, s) = (y, 0),   v, w ≥ 0,  r free,  |s| ≤ λ
//! [ 0   0  Xᵀ  I ]
//! ```
//!
//! Every basis holds all of `r`, a set `Zs` of basic `s` components and a set
//! `S` of basic `v`/`w` columns, with `|S| = |C|` for `C` the complement of
//! `Zs`. With `S̄ = X_S diag(±1)` the basis is
//!
//! ```text
//!       r    s_Zs   vw_S
//! a [   I     0      S̄  ]
//! b [   Xᵀ   E_Zs    0  ]
//! ```
//!
//! and every solve reduces to products with `X`, `Xᵀ` and one dense LU of the
//! `|S| x |S|` matrix `M = −X_Cᵀ S̄` (which is `−SᵀS̄` when `C` and `S` name
//! the same columns).

use std::fmt;

use crate::error::{Error, Result};
use crate::kernels::{lu_factor, norm_inf, DenseMatrix, LuFactors};
use crate::model::ProblemInstance;

/// A variable of the DS2 program.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    V(usize),
    W(usize),
    R(usize),
    S(usize),
}

impl Var {
    /// Position in the flat `(v, w, r, s)` ordering.
    pub fn id(self, n: usize, p: usize) -> usize {
        match self {
            Var::V(j) => j,
            Var::W(j) => p + j,
            Var::R(i) => 2 * p + i,
            Var::S(j) => 2 * p + n + j,
        }
    }

    pub fn from_id(id: usize, n: usize, p: usize) -> Var {
        if id < p {
            Var::V(id)
        } else if id < 2 * p {
            Var::W(id - p)
        } else if id < 2 * p + n {
            Var::R(id - 2 * p)
        } else {
            Var::S(id - 2 * p - n)
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::V(j) => write!(f, "v{j}"),
            Var::W(j) => write!(f, "w{j}"),
            Var::R(i) => write!(f, "r{i}"),
            Var::S(j) => write!(f, "s{j}"),
        }
    }
}

/// Factors of one basis: the `Zs / C / S` partition and the LU of
/// `M = −X_Cᵀ S̄`.
#[derive(Clone, Debug)]
pub struct StructuredFactors {
    /// Basic `s` indices (sorted) and their basis positions.
    pub zs: Vec<usize>,
    pub zs_pos: Vec<usize>,
    /// Nonbasic `s` indices (sorted); rows of `M`.
    pub c_set: Vec<usize>,
    /// Basic `v`/`w` columns `(j, ±1)` in position order; columns of `M`.
    pub s_cols: Vec<(usize, f64)>,
    pub s_pos: Vec<usize>,
    /// `S̄`, `n x |S|`.
    pub s_bar: DenseMatrix,
    pub inner: DenseMatrix,
    pub lu: Option<LuFactors>,
}

impl StructuredFactors {
    pub fn support_size(&self) -> usize {
        self.s_cols.len()
    }
}

/// Builds the structured factors for the basis listed by position.
pub fn factorize_basis(x: &DenseMatrix, basic: &[Var]) -> Result<StructuredFactors> {
    let (n, p) = (x.rows(), x.cols());
    if basic.len() != n + p {
        return Err(Error::DimensionMismatch {
            context: "basis size",
            expected: n + p,
            found: basic.len(),
        });
    }
    let mut s_basic = vec![None; p];
    let mut s_cols = Vec::new();
    let mut s_pos = Vec::new();
    for (pos, var) in basic.iter().enumerate() {
        match *var {
            Var::R(i) if pos != i => {
                return Err(Error::InvalidParameter(format!("r{i} must sit at basis position {i}")))
            }
            Var::R(_) => {}
            Var::S(j) => s_basic[j] = Some(pos),
            Var::V(j) => {
                s_cols.push((j, 1.0));
                s_pos.push(pos);
            }
            Var::W(j) => {
                s_cols.push((j, -1.0));
                s_pos.push(pos);
            }
        }
    }
    let mut zs = Vec::new();
    let mut zs_pos = Vec::new();
    let mut c_set = Vec::new();
    for (j, slot) in s_basic.iter().enumerate() {
        match slot {
            Some(pos) => {
                zs.push(j);
                zs_pos.push(*pos);
            }
            None => c_set.push(j),
        }
    }
    debug_assert_eq!(c_set.len(), s_cols.len());
    let k = s_cols.len();
    let s_bar = DenseMatrix::from_fn(n, k, |i, c| s_cols[c].1 * x.get(i, s_cols[c].0));
    let inner = DenseMatrix::from_fn(k, k, |a, b| {
        let col = c_set[a];
        -(0..n).map(|i| x.get(i, col) * s_bar.get(i, b)).sum::<f64>()
    });
    let lu = if k == 0 {
        None
    } else {
        Some(lu_factor(&inner).map_err(|_| Error::SingularBasis)?)
    };
    Ok(StructuredFactors {
        zs,
        zs_pos,
        c_set,
        s_cols,
        s_pos,
        s_bar,
        inner,
        lu,
    })
}

/// Basis, bound tags and iterate of the dual simplex.
#[derive(Clone, Debug)]
pub struct BasisState {
    pub n: usize,
    pub p: usize,
    /// Basic variable at each of the `n + p` positions; `r_i` sits at `i`.
    pub basic: Vec<Var>,
    /// Basis position by flat variable id.
    pub position: Vec<Option<usize>>,
    /// For nonbasic `s_j`: whether it rests at `+λ` (else `−λ`).
    pub s_at_upper: Vec<bool>,
    pub factors: StructuredFactors,
    /// Basic primal values by position.
    pub x_basic: Vec<f64>,
    /// Row prices `π = (π_a, π_b)`.
    pub row_duals: Vec<f64>,
}

impl BasisState {
    pub fn num_vars(&self) -> usize {
        3 * self.p + self.n
    }

    pub fn is_basic(&self, v: Var) -> bool {
        self.position[v.id(self.n, self.p)].is_some()
    }

    /// Rebuilds the position index and structured factors from `basic`.
    pub fn refactor(&mut self, x: &DenseMatrix) -> Result<()> {
        self.factors = factorize_basis(x, &self.basic)?;
        self.position = vec![None; self.num_vars()];
        for (pos, v) in self.basic.iter().enumerate() {
            self.position[v.id(self.n, self.p)] = Some(pos);
        }
        Ok(())
    }

    /// Value of a nonbasic variable.
    pub fn nonbasic_value(&self, v: Var, lambda: f64) -> f64 {
        match v {
            Var::S(j) if self.s_at_upper[j] => lambda,
            Var::S(_) => -lambda,
            _ => 0.0,
        }
    }

    /// `b − N x_N` for the DS2 right-hand side `(y, 0)`.
    pub fn basic_rhs(&self, inst: &ProblemInstance) -> Vec<f64> {
        let mut rhs = vec![0.0; self.n + self.p];
        rhs[..self.n].copy_from_slice(&inst.y);
        for &j in &self.factors.c_set {
            rhs[self.n + j] = -self.nonbasic_value(Var::S(j), inst.lambda);
        }
        rhs
    }

    /// Solves `B z = rhs`; `z` is indexed by basis position.
    pub fn solve(&self, x: &DenseMatrix, rhs: &[f64]) -> Vec<f64> {
        let (n, f) = (self.n, &self.factors);
        let (ra, rb) = rhs.split_at(n);
        let mut out = vec![0.0; n + self.p];
        let mut xr = ra.to_vec();
        if let Some(lu) = &f.lu {
            let xta = x.matvec_t(ra);
            let t: Vec<f64> = f.c_set.iter().map(|&j| rb[j] - xta[j]).collect();
            let xs = lu.solve(&t);
            let sx = f.s_bar.matvec(&xs);
            for (a, b) in xr.iter_mut().zip(&sx) {
                *a -= b;
            }
            for (&pos, &v) in f.s_pos.iter().zip(&xs) {
                out[pos] = v;
            }
        }
        let xtr = x.matvec_t(&xr);
        for (&j, &pos) in f.zs.iter().zip(&f.zs_pos) {
            out[pos] = rb[j] - xtr[j];
        }
        out[..n].copy_from_slice(&xr);
        out
    }

    /// Solves `Bᵀ π = c` for `c` indexed by basis position.
    pub fn solve_transpose(&self, x: &DenseMatrix, c: &[f64]) -> Vec<f64> {
        let (n, p, f) = (self.n, self.p, &self.factors);
        let mut pi_b = vec![0.0; p];
        for (&j, &pos) in f.zs.iter().zip(&f.zs_pos) {
            pi_b[j] = c[pos];
        }
        if let Some(lu) = &f.lu {
            let xz = x.matvec(&pi_b);
            let u: Vec<f64> = (0..n).map(|i| c[i] - xz[i]).collect();
            let su = f.s_bar.matvec_t(&u);
            let rhs: Vec<f64> = f.s_pos.iter().zip(&su).map(|(&pos, v)| c[pos] - v).collect();
            let pc = lu.solve_transpose(&rhs);
            for (&j, v) in f.c_set.iter().zip(pc) {
                pi_b[j] = v;
            }
        }
        let xp = x.matvec(&pi_b);
        let mut pi: Vec<f64> = (0..n).map(|i| c[i] - xp[i]).collect();
        pi.extend_from_slice(&pi_b);
        pi
    }

    /// `B z` for `z` indexed by basis position.
    pub fn multiply(&self, x: &DenseMatrix, z: &[f64]) -> Vec<f64> {
        let (n, f) = (self.n, &self.factors);
        let xs: Vec<f64> = f.s_pos.iter().map(|&pos| z[pos]).collect();
        let mut out = z[..n].to_vec();
        for (a, b) in out.iter_mut().zip(f.s_bar.matvec(&xs)) {
            *a += b;
        }
        let mut bottom = x.matvec_t(&z[..n]);
        for (&j, &pos) in f.zs.iter().zip(&f.zs_pos) {
            bottom[j] += z[pos];
        }
        out.extend(bottom);
        out
    }

    /// `Bᵀ π`, indexed by basis position.
    pub fn multiply_transpose(&self, x: &DenseMatrix, pi: &[f64]) -> Vec<f64> {
        let (n, f) = (self.n, &self.factors);
        let (pa, pb) = pi.split_at(n);
        let mut out = vec![0.0; n + self.p];
        let xp = x.matvec(pb);
        for i in 0..n {
            out[i] = pa[i] + xp[i];
        }
        for (&j, &pos) in f.zs.iter().zip(&f.zs_pos) {
            out[pos] = pb[j];
        }
        let sa = f.s_bar.matvec_t(pa);
        for (&pos, v) in f.s_pos.iter().zip(sa) {
            out[pos] = v;
        }
        out
    }

    /// Explicit basis matrix; rows follow `(a, b)`, columns follow positions.
    pub fn assemble_dense(&self, x: &DenseMatrix) -> DenseMatrix {
        let (n, p) = (self.n, self.p);
        let mut b = DenseMatrix::zeros(n + p, n + p);
        for (pos, var) in self.basic.iter().enumerate() {
            match *var {
                Var::R(i) => {
                    b.set(i, pos, 1.0);
                    for j in 0..p {
                        b.set(n + j, pos, x.get(i, j));
                    }
                }
                Var::S(j) => b.set(n + j, pos, 1.0),
                Var::V(j) | Var::W(j) => {
                    let sgn = if matches!(var, Var::V(_)) { 1.0 } else { -1.0 };
                    for i in 0..n {
                        b.set(i, pos, sgn * x.get(i, j));
                    }
                }
            }
        }
        b
    }

    /// `‖B z − rhs‖∞ / max(1, ‖rhs‖∞)` using the structured product.
    pub fn solve_residual(&self, x: &DenseMatrix, z: &[f64], rhs: &[f64]) -> f64 {
        let bz = self.multiply(x, z);
        let err = bz.iter().zip(rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        err / norm_inf(rhs).max(1.0)
    }
}

/// The starting basis: all of `r` and `s` basic, `v = w = 0`, so
/// `r = y`, `s = −Xᵀy` and the row prices are zero.
pub fn initial_basis(inst: &ProblemInstance) -> BasisState {
    let (n, p) = (inst.n, inst.p);
    let basic: Vec<Var> = (0..n).map(Var::R).chain((0..p).map(Var::S)).collect();
    let factors = factorize_basis(&inst.x, &basic).expect("the starting basis is unit block triangular");
    let mut state = BasisState {
        n,
        p,
        basic,
        position: Vec::new(),
        s_at_upper: vec![false; p],
        factors,
        x_basic: Vec::new(),
        row_duals: vec![0.0; n + p],
    };
    state.position = vec![None; state.num_vars()];
    for (pos, v) in state.basic.iter().enumerate() {
        state.position[v.id(n, p)] = Some(pos);
    }
    let mut x_basic = inst.y.clone();
    x_basic.extend(inst.x.matvec_t(&inst.y).into_iter().map(|v| -v));
    state.x_basic = x_basic;
    state
}
