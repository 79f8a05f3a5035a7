//! Dense linear algebra used by every solver.
//!
//! All matrices are stored **row-major**: entry `(i, j)` of an `r x c`
//! matrix lives at `data[i * c + j]`. Every module goes through
//! [`DenseMatrix`], so there is exactly one layout in the crate.
//!
//! Kernels that run in parallel split work by output row or column and
//! compute each entry with a fixed sequential loop, so results are
//! bit-identical regardless of thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Work size (in flops) above which kernels fan out over rayon.
const PAR_THRESHOLD: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in d.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    /// Builds a matrix from row-major data, rejecting NaN and infinities.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "DenseMatrix::from_vec",
                expected: rows * cols,
                found: data.len(),
            });
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: k / cols.max(1),
                col: k % cols.max(1),
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    context: "DenseMatrix::from_rows",
                    expected: c,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_vec(r, c, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// Columns `idx` of `self`, in the given order.
    pub fn select_columns(&self, idx: &[usize]) -> DenseMatrix {
        let mut out = Self::zeros(self.rows, idx.len());
        for i in 0..self.rows {
            let src = self.row(i);
            let dst = &mut out.data[i * idx.len()..(i + 1) * idx.len()];
            for (d, &j) in dst.iter_mut().zip(idx) {
                *d = src[j];
            }
        }
        out
    }

    /// `A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension");
        let f = |i: usize| dot(self.row(i), x);
        if self.rows * self.cols >= PAR_THRESHOLD {
            (0..self.rows).into_par_iter().map(f).collect()
        } else {
            (0..self.rows).map(f).collect()
        }
    }

    /// `Aᵀ x`.
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "matvec_t dimension");
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                axpy(xi, self.row(i), &mut out);
            }
        }
        out
    }

    /// `A B`.
    pub fn matmul(&self, b: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, b.rows, "matmul dimension");
        let (m, k, n) = (self.rows, self.cols, b.cols);
        let mut out = Self::zeros(m, n);
        let row_kernel = |(i, out_row): (usize, &mut [f64])| {
            let a = &self.data[i * k..(i + 1) * k];
            for (l, &ail) in a.iter().enumerate() {
                if ail != 0.0 {
                    axpy(ail, b.row(l), out_row);
                }
            }
        };
        if m * k * n >= PAR_THRESHOLD {
            out.data.par_chunks_mut(n.max(1)).enumerate().for_each(row_kernel);
        } else {
            out.data.chunks_mut(n.max(1)).enumerate().for_each(row_kernel);
        }
        out
    }

    /// `Aᵀ A`, exactly symmetric.
    pub fn gram(&self) -> DenseMatrix {
        self.transpose().aat()
    }

    /// `A Aᵀ`, exactly symmetric.
    pub fn aat(&self) -> DenseMatrix {
        let m = self.rows;
        let mut out = Self::zeros(m, m);
        let row_kernel = |(i, out_row): (usize, &mut [f64])| {
            let ri = self.row(i);
            for (k, o) in out_row.iter_mut().enumerate().take(i + 1) {
                *o = dot(ri, self.row(k));
            }
        };
        if m * m * self.cols >= PAR_THRESHOLD {
            out.data.par_chunks_mut(m.max(1)).enumerate().for_each(row_kernel);
        } else {
            out.data.chunks_mut(m.max(1)).enumerate().for_each(row_kernel);
        }
        out.mirror_lower();
        out
    }

    /// Copies the lower triangle onto the upper one.
    pub fn mirror_lower(&mut self) {
        let n = self.rows;
        for i in 0..n {
            for j in 0..i {
                self.data[j * n + i] = self.data[i * n + j];
            }
        }
    }

    pub fn add_diagonal(&mut self, d: &[f64]) {
        assert_eq!(d.len(), self.rows.min(self.cols));
        for (i, &v) in d.iter().enumerate() {
            self.data[i * self.cols + i] += v;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // Four independent accumulators; fixed order keeps results reproducible.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

/// `y += alpha * x`.
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn norm1(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

// ---------------------------------------------------------------------------
// Householder QR
// ---------------------------------------------------------------------------

/// Householder QR of an `m x n` matrix with `m >= n`.
///
/// `Q` is kept as `n` reflectors `H_k = I - tau_k v_k v_kᵀ` (with `v_k[0] = 1`
/// acting on rows `k..m`) and is only applied on demand. The diagonal of `R`
/// is nonnegative.
#[derive(Clone, Debug)]
pub struct QrFactors {
    m: usize,
    n: usize,
    reflectors: Vec<Vec<f64>>,
    tau: Vec<f64>,
    r: DenseMatrix,
}

/// Relative pivot tolerance below which `qr_factor` reports rank deficiency.
pub const QR_RANK_TOL: f64 = 1e-12;

pub fn qr_factor(a: &DenseMatrix) -> Result<QrFactors> {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        return Err(Error::InvalidParameter(format!(
            "qr_factor needs rows >= cols, got {m} x {n}"
        )));
    }
    // Column-major working copy so reflector updates touch contiguous memory.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let max_col_norm = cols.iter().map(|c| norm2(c)).fold(0.0, f64::max);
    let tol = QR_RANK_TOL * max_col_norm;

    let mut reflectors = Vec::with_capacity(n);
    let mut tau = Vec::with_capacity(n);
    let mut r = DenseMatrix::zeros(n, n);

    for k in 0..n {
        let (head, tail) = cols.split_at_mut(k + 1);
        let x = &head[k][k..];
        let (v, beta, mu) = householder(x);
        if mu <= tol {
            return Err(Error::RankDeficient { column: k });
        }
        r.set(k, k, mu);
        let update = |col: &mut Vec<f64>| {
            let seg = &mut col[k..];
            let s = beta * dot(&v, seg);
            if s != 0.0 {
                axpy(-s, &v, seg);
            }
        };
        if tail.len() * (m - k) >= PAR_THRESHOLD {
            tail.par_iter_mut().for_each(update);
        } else {
            tail.iter_mut().for_each(update);
        }
        for (off, col) in tail.iter().enumerate() {
            r.set(k, k + 1 + off, col[k]);
        }
        reflectors.push(v);
        tau.push(beta);
    }
    Ok(QrFactors {
        m,
        n,
        reflectors,
        tau,
        r,
    })
}

/// Reflector with `H x = mu e1`, `mu = ‖x‖ >= 0`; Parlett's choice of `v[0]`
/// avoids cancellation when `x[0] > 0`.
fn householder(x: &[f64]) -> (Vec<f64>, f64, f64) {
    let x0 = x[0];
    let sigma: f64 = x[1..].iter().map(|v| v * v).sum();
    let mut v = x.to_vec();
    v[0] = 1.0;
    if sigma == 0.0 {
        if x0 >= 0.0 {
            return (v, 0.0, x0);
        }
        for e in &mut v[1..] {
            *e = 0.0;
        }
        return (v, 2.0, -x0);
    }
    let mu = (x0 * x0 + sigma).sqrt();
    let v0 = if x0 <= 0.0 { x0 - mu } else { -sigma / (x0 + mu) };
    let beta = 2.0 * v0 * v0 / (sigma + v0 * v0);
    for e in &mut v[1..] {
        *e /= v0;
    }
    (v, beta, mu)
}

impl QrFactors {
    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> &DenseMatrix {
        &self.r
    }

    /// `b <- Qᵀ b` for a length-`m` vector.
    pub fn apply_qt(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.m);
        for k in 0..self.n {
            self.reflect(k, b);
        }
    }

    /// `b <- Q b` for a length-`m` vector.
    pub fn apply_q(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.m);
        for k in (0..self.n).rev() {
            self.reflect(k, b);
        }
    }

    fn reflect(&self, k: usize, b: &mut [f64]) {
        let seg = &mut b[k..];
        let s = self.tau[k] * dot(&self.reflectors[k], seg);
        if s != 0.0 {
            axpy(-s, &self.reflectors[k], seg);
        }
    }

    /// The first `n` columns of `Q` as an explicit `m x n` matrix.
    pub fn thin_q(&self) -> DenseMatrix {
        let cols: Vec<Vec<f64>> = (0..self.n)
            .into_par_iter()
            .map(|j| {
                let mut e = vec![0.0; self.m];
                e[j] = 1.0;
                self.apply_q(&mut e);
                e
            })
            .collect();
        DenseMatrix::from_fn(self.m, self.n, |i, j| cols[j][i])
    }

    /// Least-squares solution of `A x ≈ b`.
    pub fn solve_least_squares(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.m {
            return Err(Error::DimensionMismatch {
                context: "solve_least_squares",
                expected: self.m,
                found: b.len(),
            });
        }
        let mut qtb = b.to_vec();
        self.apply_qt(&mut qtb);
        qtb.truncate(self.n);
        solve_tri(&self.r, &qtb, Triangle::Upper, false)
    }

    /// Solves `AᵀA x = rhs` as `Rᵀ R x = rhs`.
    pub fn solve_normal(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let t = solve_tri(&self.r, rhs, Triangle::Upper, true)?;
        solve_tri(&self.r, &t, Triangle::Upper, false)
    }
}

// ---------------------------------------------------------------------------
// Cholesky
// ---------------------------------------------------------------------------

/// Lower-triangular `L` with `H = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct CholFactor {
    l: DenseMatrix,
}

impl CholFactor {
    pub fn l(&self) -> &DenseMatrix {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }
}

/// Unpivoted Cholesky. Only the lower triangle of `h` is read.
pub fn chol_factor(h: &DenseMatrix) -> Result<CholFactor> {
    chol_factor_impl(h, false).map(|(f, _)| f)
}

/// Pivots at most this multiple of `ε·hⱼⱼ` count as lost to cancellation.
pub const PIVOT_REPLACEMENT_FACTOR: f64 = 64.0;
/// Replaced pivots become this multiple of `sqrt(max hᵢᵢ)`.
const REPLACED_PIVOT_SCALE: f64 = 1e6;

/// Cholesky that replaces pivots lost to cancellation (at most
/// [`PIVOT_REPLACEMENT_FACTOR`]`·ε·hⱼⱼ`) by `1e6·sqrt(max hᵢᵢ)`, so the
/// matching solution component is driven to zero. Other nonpositive pivots still fail.
/// Returns the factor and the number of replaced pivots.
pub fn chol_factor_replacing(h: &DenseMatrix) -> Result<(CholFactor, usize)> {
    chol_factor_impl(h, true)
}

fn chol_factor_impl(h: &DenseMatrix, replace: bool) -> Result<(CholFactor, usize)> {
    let n = h.rows();
    if h.cols() != n {
        return Err(Error::DimensionMismatch {
            context: "chol_factor",
            expected: n,
            found: h.cols(),
        });
    }
    let mut l = DenseMatrix::zeros(n, n);
    // Copy lower triangle, then factor column by column (left-looking).
    for i in 0..n {
        for j in 0..=i {
            l.data[i * n + j] = h.data[i * n + j];
        }
    }
    let mut replaced = 0;
    let replacement = REPLACED_PIVOT_SCALE * (0..n).map(|i| h.get(i, i)).fold(0.0, f64::max).sqrt();
    for j in 0..n {
        let rest = &mut l.data[j * n..];
        let row_j = &mut rest[..n];
        let hjj = row_j[j];
        let d = hjj - dot(&row_j[..j], &row_j[..j]);
        let ljj = if d > 0.0 && d.is_finite() {
            d.sqrt()
        } else if replace && hjj > 0.0 && d.abs() <= PIVOT_REPLACEMENT_FACTOR * f64::EPSILON * hjj {
            replaced += 1;
            replacement
        } else {
            return Err(Error::NotPositiveDefinite { pivot: j });
        };
        row_j[j] = ljj;
        let row_j: Vec<f64> = row_j[..j].to_vec();
        let below = &mut rest[n..];
        let kernel = |row_i: &mut [f64]| {
            let s = row_i[j] - dot(&row_i[..j], &row_j);
            row_i[j] = s / ljj;
        };
        if (n - j - 1) * j >= PAR_THRESHOLD {
            below.par_chunks_mut(n).for_each(kernel);
        } else {
            below.chunks_mut(n).for_each(kernel);
        }
    }
    Ok((CholFactor { l }, replaced))
}

pub fn solve_chol(factor: &CholFactor, b: &[f64]) -> Result<Vec<f64>> {
    let n = factor.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            context: "solve_chol",
            expected: n,
            found: b.len(),
        });
    }
    let y = solve_tri(&factor.l, b, Triangle::Lower, false)?;
    solve_tri(&factor.l, &y, Triangle::Lower, true)
}

// ---------------------------------------------------------------------------
// Triangular solves
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Triangle {
    Lower,
    Upper,
}

/// Solves `T x = b` (or `Tᵀ x = b` when `transpose`), reading only the
/// selected triangle of `t`.
pub fn solve_tri(t: &DenseMatrix, b: &[f64], side: Triangle, transpose: bool) -> Result<Vec<f64>> {
    let n = t.rows();
    if t.cols() != n || b.len() != n {
        return Err(Error::DimensionMismatch {
            context: "solve_tri",
            expected: n,
            found: if t.cols() != n { t.cols() } else { b.len() },
        });
    }
    let scale = (0..n)
        .flat_map(|i| {
            let r = t.row(i);
            match side {
                Triangle::Lower => r[..=i].iter(),
                Triangle::Upper => r[i..].iter(),
            }
        })
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let tiny = 1e-14 * scale;
    for i in 0..n {
        if !(t.get(i, i).abs() > tiny) {
            return Err(Error::SingularTriangular { index: i });
        }
    }
    let mut x = b.to_vec();
    // Effective orientation: a transposed lower factor is upper, and so on.
    let effective_lower = matches!((side, transpose), (Triangle::Lower, false) | (Triangle::Upper, true));
    if !transpose {
        // Row-oriented substitution.
        if effective_lower {
            for i in 0..n {
                let s = dot(&t.row(i)[..i], &x[..i]);
                x[i] = (x[i] - s) / t.get(i, i);
            }
        } else {
            for i in (0..n).rev() {
                let s = dot(&t.row(i)[i + 1..], &x[i + 1..]);
                x[i] = (x[i] - s) / t.get(i, i);
            }
        }
    } else if effective_lower {
        // Tᵀ with T upper: column-oriented forward substitution.
        for i in 0..n {
            x[i] /= t.get(i, i);
            let xi = x[i];
            if xi != 0.0 {
                let row = &t.row(i)[i + 1..];
                axpy(-xi, row, &mut x[i + 1..]);
            }
        }
    } else {
        // Tᵀ with T lower: column-oriented backward substitution.
        for i in (0..n).rev() {
            x[i] /= t.get(i, i);
            let xi = x[i];
            if xi != 0.0 {
                let row = &t.row(i)[..i];
                axpy(-xi, row, &mut x[..i]);
            }
        }
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// LU with partial pivoting (unsymmetric systems)
// ---------------------------------------------------------------------------

/// `P A = L U` with unit-lower `L` and upper `U` packed in one matrix.
#[derive(Clone, Debug)]
pub struct LuFactors {
    lu: DenseMatrix,
    /// `perm[i]` is the row of `A` that ended up in row `i`.
    perm: Vec<usize>,
}

pub const LU_PIVOT_TOL: f64 = 1e-13;

pub fn lu_factor(a: &DenseMatrix) -> Result<LuFactors> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch {
            context: "lu_factor",
            expected: n,
            found: a.cols(),
        });
    }
    let tiny = LU_PIVOT_TOL * a.max_abs();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (mut p, mut best) = (k, lu.get(k, k).abs());
        for i in k + 1..n {
            let v = lu.get(i, k).abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if !(best > tiny) {
            return Err(Error::Singular { pivot: k });
        }
        if p != k {
            for j in 0..n {
                lu.data.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
        }
        let (top, bottom) = lu.data.split_at_mut((k + 1) * n);
        let pivot_row = &top[k * n..];
        let pkk = pivot_row[k];
        let kernel = |row: &mut [f64]| {
            let f = row[k] / pkk;
            row[k] = f;
            if f != 0.0 {
                axpy(-f, &pivot_row[k + 1..], &mut row[k + 1..]);
            }
        };
        if (n - k) * (n - k) >= PAR_THRESHOLD {
            bottom.par_chunks_mut(n).for_each(kernel);
        } else {
            bottom.chunks_mut(n).for_each(kernel);
        }
    }
    Ok(LuFactors { lu, perm })
}

impl LuFactors {
    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn packed(&self) -> &DenseMatrix {
        &self.lu
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            let s = dot(&self.lu.row(i)[..i], &x[..i]);
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s = dot(&self.lu.row(i)[i + 1..], &x[i + 1..]);
            x[i] = (x[i] - s) / self.lu.get(i, i);
        }
        x
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ z = b, Lᵀ w = z, x = Pᵀ w.
        let mut z = b.to_vec();
        for i in 0..n {
            z[i] /= self.lu.get(i, i);
            let zi = z[i];
            if zi != 0.0 {
                axpy(-zi, &self.lu.row(i)[i + 1..], &mut z[i + 1..]);
            }
        }
        for i in (0..n).rev() {
            let zi = z[i];
            if zi != 0.0 {
                axpy(-zi, &self.lu.row(i)[..i], &mut z[..i]);
            }
        }
        let mut x = vec![0.0; n];
        for (i, &pi) in self.perm.iter().enumerate() {
            x[pi] = z[i];
        }
        x
    }

    /// `‖P A − L U‖_max`.
    pub fn reconstruction_error(&self, a: &DenseMatrix) -> f64 {
        let n = self.dim();
        let mut err = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..=i.min(j) {
                    let l = if k == i { 1.0 } else { self.lu.get(i, k) };
                    s += l * self.lu.get(k, j);
                }
                err = err.max((a.get(self.perm[i], j) - s).abs());
            }
        }
        err
    }
}
