//! Standard-form programs for the Dantzig selector and BPDN.
//!
//! Every split formulation writes `β = v − w` with `v, w ≥ 0`, so
//! `1ᵀ(v + w)` stands in for `‖β‖₁`:
//!
//! * DS1: `[XᵀX, −XᵀX, I] (v, w, s) = Xᵀy`, `|s| ≤ λ`, cost `1ᵀ(v + w)`.
//! * DS2: `[[X, −X, I, 0], [0, 0, Xᵀ, I]] (v, w, r, s) = (y, 0)`, `r` free,
//!   `|s| ≤ λ`, cost `1ᵀ(v + w)`.
//! * DS3: `[X, −X, I] (v, w, r) = y`, `r` free, cost
//!   `λ1ᵀ(v + w) + ½ rᵀr` (BPDN).
//!
//! Free variables carry infinite bounds rather than being split.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::kernels::{norm2, DenseMatrix};
use crate::model::ProblemInstance;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    V,
    W,
    R,
    S,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Formulation {
    Ds1,
    Ds2,
    Ds3,
}

impl Formulation {
    pub fn name(self) -> &'static str {
        match self {
            Formulation::Ds1 => "ds1",
            Formulation::Ds2 => "ds2",
            Formulation::Ds3 => "ds3",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BlockMap {
    spans: Vec<(Block, Range<usize>)>,
}

impl BlockMap {
    fn from_sizes(blocks: &[(Block, usize)]) -> Self {
        let mut start = 0;
        let spans = blocks
            .iter()
            .map(|&(b, len)| {
                let span = (b, start..start + len);
                start += len;
                span
            })
            .collect();
        BlockMap { spans }
    }

    pub fn span(&self, block: Block) -> Option<Range<usize>> {
        self.spans.iter().find(|(b, _)| *b == block).map(|(_, r)| r.clone())
    }

    pub fn len(&self) -> usize {
        self.spans.last().map_or(0, |(_, r)| r.end)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `min cᵀx + ½ xᵀ diag(q) x  s.t.  A x = b,  lower ≤ x ≤ upper`.
///
/// The quadratic term is separable (diagonal), which is all BPDN needs and
/// keeps the interior-point normal equations in `A D Aᵀ` form.
#[derive(Clone, Debug)]
pub struct StandardProblem {
    pub formulation: Formulation,
    pub c: Vec<f64>,
    pub q: Option<Vec<f64>>,
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub block_map: BlockMap,
    /// Number of rows in the first block row (DS2 uses this to separate the
    /// `y` rows from the `Xᵀr + s = 0` rows).
    pub first_block_rows: usize,
}

impl StandardProblem {
    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<()> {
        let nv = self.num_vars();
        for (ctx, len) in [
            ("StandardProblem lower", self.lower.len()),
            ("StandardProblem upper", self.upper.len()),
            ("StandardProblem A cols", self.a.cols()),
        ] {
            crate::model::check_len(ctx, nv, len)?;
        }
        // An empty block map marks a generic program with no β to recover.
        if !self.block_map.is_empty() {
            crate::model::check_len("StandardProblem block map", nv, self.block_map.len())?;
        }
        crate::model::check_len("StandardProblem A rows", self.num_rows(), self.a.rows())?;
        if let Some(q) = &self.q {
            crate::model::check_len("StandardProblem q", nv, q.len())?;
            if q.iter().any(|&v| v < 0.0) {
                return Err(Error::InvalidParameter("quadratic term must be PSD".into()));
            }
        }
        if let Some(j) = (0..nv).find(|&j| !(self.lower[j] <= self.upper[j])) {
            return Err(Error::InvalidParameter(format!("lower > upper at variable {j}")));
        }
        Ok(())
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let lin: f64 = self.c.iter().zip(x).map(|(c, v)| c * v).sum();
        let quad = self
            .q
            .as_ref()
            .map_or(0.0, |q| 0.5 * q.iter().zip(x).map(|(qi, v)| qi * v * v).sum::<f64>());
        lin + quad
    }

    /// `b − A x`.
    pub fn primal_residual(&self, x: &[f64]) -> Vec<f64> {
        let ax = self.a.matvec(x);
        self.b.iter().zip(&ax).map(|(b, v)| b - v).collect()
    }

    /// Largest amount by which `x` leaves its bounds.
    pub fn bound_violation(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&l, &u))| (l - v).max(v - u).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Lifts `β` to this formulation's variables using `v = max(β, 0)`,
    /// `w = max(−β, 0)`, `r = y − Xβ`, `s` from the formulation's own
    /// equations.
    pub fn split_point(&self, inst: &ProblemInstance, beta: &[f64]) -> Result<Vec<f64>> {
        crate::model::check_len("split_point beta", inst.p, beta.len())?;
        let mut x = vec![0.0; self.num_vars()];
        let v = self.block_map.span(Block::V).ok_or(Error::MissingBlock("v"))?;
        let w = self.block_map.span(Block::W).ok_or(Error::MissingBlock("w"))?;
        for (j, &b) in beta.iter().enumerate() {
            x[v.start + j] = b.max(0.0);
            x[w.start + j] = (-b).max(0.0);
        }
        let r = crate::model::residual(inst, beta)?;
        if let Some(span) = self.block_map.span(Block::R) {
            x[span].copy_from_slice(&r);
        }
        if let Some(span) = self.block_map.span(Block::S) {
            let s = match self.formulation {
                // DS1 rows read  XᵀX β + s = Xᵀy, so s = Xᵀ r.
                Formulation::Ds1 => inst.x.matvec_t(&r),
                // DS2 rows read  Xᵀ r + s = 0.
                _ => crate::model::dual_vector(inst, &r)?,
            };
            x[span].copy_from_slice(&s);
        }
        Ok(x)
    }
}

pub fn build_ds1(inst: &ProblemInstance) -> StandardProblem {
    let p = inst.p;
    let g = inst.x.gram();
    let mut a = DenseMatrix::zeros(p, 3 * p);
    for i in 0..p {
        let gi = g.row(i);
        let row = a.row_mut(i);
        row[..p].copy_from_slice(gi);
        for (dst, &v) in row[p..2 * p].iter_mut().zip(gi) {
            *dst = -v;
        }
        row[2 * p + i] = 1.0;
    }
    let lam = inst.lambda;
    StandardProblem {
        formulation: Formulation::Ds1,
        c: [vec![1.0; 2 * p], vec![0.0; p]].concat(),
        q: None,
        a,
        b: inst.x.matvec_t(&inst.y),
        lower: [vec![0.0; 2 * p], vec![-lam; p]].concat(),
        upper: [vec![f64::INFINITY; 2 * p], vec![lam; p]].concat(),
        block_map: BlockMap::from_sizes(&[(Block::V, p), (Block::W, p), (Block::S, p)]),
        first_block_rows: p,
    }
}

pub fn build_ds2(inst: &ProblemInstance) -> StandardProblem {
    let (n, p) = (inst.n, inst.p);
    let cols = 3 * p + n;
    let mut a = DenseMatrix::zeros(n + p, cols);
    for i in 0..n {
        let xi = inst.x.row(i);
        let row = a.row_mut(i);
        row[..p].copy_from_slice(xi);
        for (dst, &v) in row[p..2 * p].iter_mut().zip(xi) {
            *dst = -v;
        }
        row[2 * p + i] = 1.0;
    }
    for j in 0..p {
        let row = a.row_mut(n + j);
        for i in 0..n {
            row[2 * p + i] = inst.x.get(i, j);
        }
        row[2 * p + n + j] = 1.0;
    }
    let lam = inst.lambda;
    StandardProblem {
        formulation: Formulation::Ds2,
        c: [vec![1.0; 2 * p], vec![0.0; n + p]].concat(),
        q: None,
        a,
        b: [inst.y.clone(), vec![0.0; p]].concat(),
        lower: [vec![0.0; 2 * p], vec![f64::NEG_INFINITY; n], vec![-lam; p]].concat(),
        upper: [vec![f64::INFINITY; 2 * p + n], vec![lam; p]].concat(),
        block_map: BlockMap::from_sizes(&[(Block::V, p), (Block::W, p), (Block::R, n), (Block::S, p)]),
        first_block_rows: n,
    }
}

pub fn build_ds3(inst: &ProblemInstance) -> StandardProblem {
    let (n, p) = (inst.n, inst.p);
    let mut a = DenseMatrix::zeros(n, 2 * p + n);
    for i in 0..n {
        let xi = inst.x.row(i);
        let row = a.row_mut(i);
        row[..p].copy_from_slice(xi);
        for (dst, &v) in row[p..2 * p].iter_mut().zip(xi) {
            *dst = -v;
        }
        row[2 * p + i] = 1.0;
    }
    let lam = inst.lambda;
    StandardProblem {
        formulation: Formulation::Ds3,
        c: [vec![lam; 2 * p], vec![0.0; n]].concat(),
        q: Some([vec![0.0; 2 * p], vec![1.0; n]].concat()),
        a,
        b: inst.y.clone(),
        lower: [vec![0.0; 2 * p], vec![f64::NEG_INFINITY; n]].concat(),
        upper: vec![f64::INFINITY; 2 * p + n],
        block_map: BlockMap::from_sizes(&[(Block::V, p), (Block::W, p), (Block::R, n)]),
        first_block_rows: n,
    }
}

/// DS3 with the extra box `‖r‖∞ ≤ ‖y‖₂`, which never cuts off the optimum.
pub fn build_ds3_bounded(inst: &ProblemInstance) -> StandardProblem {
    let mut sp = build_ds3(inst);
    let bound = norm2(&inst.y).max(f64::MIN_POSITIVE);
    let span = sp.block_map.span(Block::R).expect("ds3 has r");
    for j in span {
        sp.lower[j] = -bound;
        sp.upper[j] = bound;
    }
    sp
}

/// `β = v − w`, together with `1ᵀ(v + w)` (which bounds `‖β‖₁` from above).
pub fn recover_beta(sp: &StandardProblem, x: &[f64]) -> Result<(Vec<f64>, f64)> {
    let v = sp.block_map.span(Block::V).ok_or(Error::MissingBlock("v"))?;
    let w = sp.block_map.span(Block::W).ok_or(Error::MissingBlock("w"))?;
    crate::model::check_len("recover_beta x", sp.num_vars(), x.len())?;
    let beta: Vec<f64> = x[v.clone()].iter().zip(&x[w.clone()]).map(|(a, b)| a - b).collect();
    let surrogate = x[v].iter().chain(&x[w]).sum();
    Ok((beta, surrogate))
}

/// Maps DS1/DS2 row multipliers to the Dantzig dual direction `ζ` (see
/// [`crate::model::Solution::dual`]). DS3 has none.
pub fn ds_dual_direction(sp: &StandardProblem, row_duals: &[f64]) -> Option<Vec<f64>> {
    match sp.formulation {
        Formulation::Ds1 => Some(row_duals.to_vec()),
        Formulation::Ds2 => Some(row_duals[sp.first_block_rows..].iter().map(|v| -v).collect()),
        Formulation::Ds3 => None,
    }
}

/// The `(DS)` box form: `min 1ᵀu  s.t.  −u ≤ β ≤ u,  −λ1 ≤ Xᵀ(y − Xβ) ≤ λ1`.
#[derive(Clone, Debug)]
pub struct DsBoxProblem {
    pub x: DenseMatrix,
    pub y: Vec<f64>,
    pub lambda: f64,
}

impl DsBoxProblem {
    pub fn new(x: DenseMatrix, y: Vec<f64>, lambda: f64) -> Result<Self> {
        crate::model::check_len("DsBoxProblem y", x.rows(), y.len())?;
        if !(lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(DsBoxProblem { x, y, lambda })
    }

    pub fn from_instance(inst: &ProblemInstance) -> Self {
        DsBoxProblem {
            x: inst.x.clone(),
            y: inst.y.clone(),
            lambda: inst.lambda,
        }
    }
}
