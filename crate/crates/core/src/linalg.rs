//! Compressed sparse rows, low-rank updates, restarted GMRES with Jacobi
//! preconditioning, dense LU, and a symmetric eigenvalue bound.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Square sparse matrix in compressed-row form with sorted, unique columns.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Sums duplicate entries in their input order, so the result does not
    /// depend on anything but the triplet sequence.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, T)]) -> Result<Self> {
        let mut counts = vec![0usize; n + 1];
        for &(i, j, _) in triplets {
            if i >= n || j >= n {
                return Err(Error::DimensionMismatch { expected: n, found: i.max(j) + 1 });
            }
            counts[i + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        // stable bucket by row, then stable sort by column inside each row
        let mut order = vec![0usize; triplets.len()];
        let mut next = counts.clone();
        for (q, &(i, _, _)) in triplets.iter().enumerate() {
            order[next[i]] = q;
            next[i] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            let row = &mut order[counts[i]..counts[i + 1]];
            row.sort_by_key(|&q| triplets[q].1);
            for &q in row.iter() {
                let (_, j, v) = triplets[q];
                if col_idx.len() > row_ptr[i] && *col_idx.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(CsrMatrix { n, row_ptr, col_idx, values })
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix { n, row_ptr: (0..=n).collect(), col_idx: (0..n).collect(), values: vec![T::one(); n] }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(T::zero(), |p| vals[p])
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`, rows summed left to right.
    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: x.len() });
        }
        Ok((0..self.n)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).fold(T::zero(), |s, (&j, &v)| s + v * x[j])
            })
            .collect())
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j] = v;
            }
        }
        d
    }

    /// Replaces row `i` by the unit row.
    pub fn set_unit_row(&mut self, i: usize) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        for p in r {
            self.values[p] = if self.col_idx[p] == i { T::one() } else { T::zero() };
        }
        if self.get(i, i) != T::one() {
            // no stored diagonal: rebuild with an inserted entry
            let mut trip = Vec::with_capacity(self.nnz() + 1);
            for r in 0..self.n {
                let (cols, vals) = self.row(r);
                for (&j, &v) in cols.iter().zip(vals) {
                    trip.push((r, j, v));
                }
            }
            trip.push((i, i, T::one()));
            *self = CsrMatrix::from_triplets(self.n, &trip).expect("indices in range");
        }
    }

    /// Writes the matrix in Matrix Market coordinate format.
    pub fn write_matrix_market(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "{} {} {}", self.n, self.n, self.nnz())?;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v.as_f64())?;
            }
        }
        Ok(())
    }
}

/// `sum_k c_k u_k v_k^T`, kept apart from the sparse part.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LowRank<T> {
    pub coeffs: Vec<T>,
    pub left: Vec<Vec<T>>,
    pub right: Vec<Vec<T>>,
}

impl<T: Real> LowRank<T> {
    pub fn empty() -> Self {
        LowRank { coeffs: Vec::new(), left: Vec::new(), right: Vec::new() }
    }

    pub fn push(&mut self, c: T, left: Vec<T>, right: Vec<T>) {
        self.coeffs.push(c);
        self.left.push(left);
        self.right.push(right);
    }

    pub fn rank(&self) -> usize {
        self.coeffs.len()
    }

    /// Adds `sum_k c_k u_k (v_k . x)` to `y`.
    pub fn apply_add(&self, x: &[T], y: &mut [T]) {
        for ((c, u), v) in self.coeffs.iter().zip(&self.left).zip(&self.right) {
            let s = *c * dot(v, x);
            if s != T::zero() {
                for (yi, &ui) in y.iter_mut().zip(u) {
                    *yi += s * ui;
                }
            }
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> T {
        let mut s = T::zero();
        for ((c, u), v) in self.coeffs.iter().zip(&self.left).zip(&self.right) {
            s += *c * u[i] * v[j];
        }
        s
    }
}

/// `U diag(c) V^T x` for explicit factors.
pub fn rank_update_apply<T: Real>(coeffs: &[T], u: &[Vec<T>], v: &[Vec<T>], x: &[T]) -> Result<Vec<T>> {
    let n = x.len();
    if u.iter().chain(v).any(|w| w.len() != n) || coeffs.len() != u.len() || u.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: n, found: u.first().map_or(0, |w| w.len()) });
    }
    let lr = LowRank { coeffs: coeffs.to_vec(), left: u.to_vec(), right: v.to_vec() };
    let mut y = vec![T::zero(); n];
    lr.apply_add(x, &mut y);
    Ok(y)
}

/// Sparse matrix plus low-rank update.
#[derive(Clone, Debug)]
pub struct SystemMatrix<T> {
    pub sparse: CsrMatrix<T>,
    pub low_rank: LowRank<T>,
}

impl<T: Real> SystemMatrix<T> {
    pub fn n(&self) -> usize {
        self.sparse.n
    }

    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        let mut y = self.sparse.matvec(x)?;
        self.low_rank.apply_add(x, &mut y);
        Ok(y)
    }

    pub fn diagonal(&self) -> Vec<T> {
        let mut d = self.sparse.diagonal();
        for (i, di) in d.iter_mut().enumerate() {
            *di += self.low_rank.entry(i, i);
        }
        d
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = self.sparse.to_dense();
        for ((c, u), v) in self.low_rank.coeffs.iter().zip(&self.low_rank.left).zip(&self.low_rank.right) {
            for (i, row) in d.iter_mut().enumerate() {
                let s = *c * u[i];
                if s != T::zero() {
                    for (rij, &vj) in row.iter_mut().zip(v) {
                        *rij += s * vj;
                    }
                }
            }
        }
        d
    }

    /// `x^T B x`.
    pub fn quadratic_form(&self, x: &[T]) -> Result<T> {
        Ok(dot(x, &self.apply(x)?))
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

pub fn norm2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Linear solver choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMethod {
    Gmres,
    Direct,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SolverOptions {
    pub method: SolverMethod,
    pub tol: f64,
    pub maxit: usize,
    pub restart: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { method: SolverMethod::Gmres, tol: 1e-10, maxit: 5000, restart: 50 }
    }
}

/// Largest dof count accepted by the dense direct solver.
pub const DIRECT_LIMIT: usize = 5000;

#[derive(Clone, Debug, Default, Serialize)]
pub struct SolveStats {
    pub method: String,
    pub iterations: usize,
    pub relative_residual: f64,
    pub replaced_rows: usize,
    pub dofs: usize,
}

/// Replaces rows with `|B_ii| < 1e-14 max_j |B_jj|` by unit rows with zero
/// right-hand side. Returns the replaced row indices.
pub fn replace_degenerate_rows<T: Real>(a: &mut SystemMatrix<T>, b: &mut [T]) -> Vec<usize> {
    let diag = a.diagonal();
    let max = diag.iter().fold(T::zero(), |m, d| m.max(d.abs()));
    let tol = T::lit(1e-14) * max;
    let rows: Vec<usize> = (0..diag.len()).filter(|&i| diag[i].abs() < tol).collect();
    for &i in &rows {
        a.sparse.set_unit_row(i);
        for u in a.low_rank.left.iter_mut() {
            u[i] = T::zero();
        }
        b[i] = T::zero();
    }
    rows
}

/// Solves `B x = b` with the requested method after degenerate-row replacement.
pub fn solve<T: Real>(matrix: &SystemMatrix<T>, rhs: &[T], opts: &SolverOptions) -> Result<(Vec<T>, SolveStats)> {
    let n = matrix.n();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: rhs.len() });
    }
    let mut a = matrix.clone();
    let mut b = rhs.to_vec();
    let replaced = replace_degenerate_rows(&mut a, &mut b).len();
    let (x, iterations, method) = match opts.method {
        SolverMethod::Direct => {
            if n > DIRECT_LIMIT {
                return Err(Error::InvalidInput(format!(
                    "direct solver limited to {DIRECT_LIMIT} dofs, system has {n}"
                )));
            }
            (lu_solve(a.to_dense(), &b)?, 1, "direct")
        }
        SolverMethod::Gmres => {
            let (x, it) = gmres(&a, &b, T::lit(opts.tol), opts.restart, opts.maxit)?;
            (x, it, "gmres")
        }
    };
    let r = a.apply(&x)?;
    let bn = norm2(&b);
    let res: T = norm2(&r.iter().zip(&b).map(|(&p, &q)| p - q).collect::<Vec<_>>());
    let rel = if bn > T::zero() { res / bn } else { res };
    Ok((
        x,
        SolveStats {
            method: method.to_string(),
            iterations,
            relative_residual: rel.as_f64(),
            replaced_rows: replaced,
            dofs: n,
        },
    ))
}

/// Restarted GMRES with right Jacobi preconditioning; stops when
/// `|b - A x| <= tol |b|`.
pub fn gmres<T: Real>(a: &SystemMatrix<T>, b: &[T], tol: T, restart: usize, maxit: usize) -> Result<(Vec<T>, usize)> {
    let n = a.n();
    let mut x = vec![T::zero(); n];
    let bnorm = norm2(b);
    if bnorm == T::zero() {
        return Ok((x, 0));
    }
    let inv_diag: Vec<T> = a
        .diagonal()
        .into_iter()
        .map(|d| if d != T::zero() && d.is_finite() { T::one() / d } else { T::one() })
        .collect();
    let m = restart.max(1).min(n.max(1));
    let mut history = Vec::new();
    let mut total = 0usize;
    loop {
        let ax = a.apply(&x)?;
        let r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
        let beta = norm2(&r);
        history.push((beta / bnorm).as_f64());
        if beta <= tol * bnorm {
            return Ok((x, total));
        }
        if total >= maxit {
            return Err(Error::NotConverged { iterations: total, residual: (beta / bnorm).as_f64(), history });
        }
        let mut v: Vec<Vec<T>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|&ri| ri / beta).collect());
        let mut h = vec![vec![T::zero(); m]; m + 1];
        let mut cs = vec![T::zero(); m];
        let mut sn = vec![T::zero(); m];
        let mut g = vec![T::zero(); m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            let z: Vec<T> = v[k].iter().zip(&inv_diag).map(|(&vi, &di)| vi * di).collect();
            let mut w = a.apply(&z)?;
            // modified Gram-Schmidt, twice for stability
            for _ in 0..2 {
                for (j, vj) in v.iter().enumerate() {
                    let hij = dot(&w, vj);
                    h[j][k] += hij;
                    for (wi, &vji) in w.iter_mut().zip(vj) {
                        *wi -= hij * vji;
                    }
                }
            }
            let hn = norm2(&w);
            h[k + 1][k] = hn;
            for j in 0..k {
                let tmp = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = tmp;
            }
            let den = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if den == T::zero() {
                cs[k] = T::one();
                sn[k] = T::zero();
            } else {
                cs[k] = h[k][k] / den;
                sn[k] = h[k + 1][k] / den;
            }
            h[k][k] = cs[k] * h[k][k] + sn[k] * h[k + 1][k];
            h[k + 1][k] = T::zero();
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];
            k_used = k + 1;
            total += 1;
            let breakdown = hn <= T::epsilon() * beta;
            if g[k + 1].abs() <= tol * bnorm * T::lit(0.5) || total >= maxit || breakdown {
                break;
            }
            v.push(w.iter().map(|&wi| wi / hn).collect());
        }
        // back substitution for y, then x += M^-1 V y
        let mut y = vec![T::zero(); k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = if h[i][i] != T::zero() { s / h[i][i] } else { T::zero() };
        }
        for (j, &yj) in y.iter().enumerate() {
            for ((xi, &vji), &di) in x.iter_mut().zip(&v[j]).zip(&inv_diag) {
                *xi += yj * vji * di;
            }
        }
        if total >= maxit {
            let ax = a.apply(&x)?;
            let res = norm2(&b.iter().zip(&ax).map(|(&p, &q)| p - q).collect::<Vec<_>>()) / bnorm;
            history.push(res.as_f64());
            if res <= tol {
                return Ok((x, total));
            }
            return Err(Error::NotConverged { iterations: total, residual: res.as_f64(), history });
        }
    }
}

/// Dense LU with partial pivoting.
pub fn lu_solve<T: Real>(mut a: Vec<Vec<T>>, b: &[T]) -> Result<Vec<T>> {
    let n = b.len();
    let mut x = b.to_vec();
    let scale = a.iter().flat_map(|r| r.iter()).fold(T::zero(), |m, v| m.max(v.abs()));
    let tiny = T::epsilon() * scale * T::from_usize_lossy(n.max(1)) * T::lit(1e-3);
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap()).unwrap();
        if !(a[p][k].abs() > tiny) {
            return Err(Error::SingularMatrix);
        }
        a.swap(k, p);
        x.swap(k, p);
        let (top, bottom) = a.split_at_mut(k + 1);
        let pivot_row = &top[k];
        for row in bottom.iter_mut() {
            let f = row[k] / pivot_row[k];
            if f != T::zero() {
                row[k] = f;
                for j in k + 1..n {
                    row[j] -= f * pivot_row[j];
                }
            }
        }
        for i in k + 1..n {
            let f = a[i][k];
            if f != T::zero() {
                let xk = x[k];
                x[i] -= f * xk;
            }
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in i + 1..n {
            s -= a[i][j] * x[j];
        }
        x[i] = s / a[i][i];
    }
    Ok(x)
}

/// Smallest eigenvalue of a symmetric dense matrix (Householder
/// tridiagonalization and Sturm-sequence bisection).
pub fn symmetric_min_eigenvalue<T: Real>(mut a: Vec<Vec<T>>) -> T {
    let n = a.len();
    if n == 0 {
        return T::zero();
    }
    let (diag, off) = tridiagonalize(&mut a);
    // Gershgorin bounds
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for i in 0..n {
        let r = (if i > 0 { off[i - 1].abs() } else { T::zero() }) + (if i + 1 < n { off[i].abs() } else { T::zero() });
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let pivot_floor = T::epsilon() * (hi.abs() + lo.abs() + T::one());
    let count_below = |x: T| -> usize {
        let mut c = 0;
        let mut q = T::one();
        for i in 0..n {
            let o2 = if i > 0 { off[i - 1] * off[i - 1] } else { T::zero() };
            q = diag[i] - x - if i > 0 { o2 / q } else { T::zero() };
            if q == T::zero() {
                q = pivot_floor;
            }
            if q < T::zero() {
                c += 1;
            }
        }
        c
    };
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo + hi) * T::lit(0.5)
}

fn tridiagonalize<T: Real>(a: &mut [Vec<T>]) -> (Vec<T>, Vec<T>) {
    let n = a.len();
    for k in 0..n.saturating_sub(2) {
        let alpha_norm = (k + 1..n).fold(T::zero(), |s, i| s + a[i][k] * a[i][k]).sqrt();
        if alpha_norm == T::zero() {
            continue;
        }
        let alpha = if a[k + 1][k] > T::zero() { -alpha_norm } else { alpha_norm };
        let mut v = vec![T::zero(); n];
        v[k + 1] = a[k + 1][k] - alpha;
        for i in k + 2..n {
            v[i] = a[i][k];
        }
        let vnorm2 = (k + 1..n).fold(T::zero(), |s, i| s + v[i] * v[i]);
        if vnorm2 == T::zero() {
            continue;
        }
        // p = A v * 2 / |v|^2, w = p - (p.v / |v|^2) v; A -= v w^T + w v^T
        let two = T::lit(2.0);
        let mut p = vec![T::zero(); n];
        for i in k..n {
            let mut s = T::zero();
            for j in k + 1..n {
                s += a[i][j] * v[j];
            }
            p[i] = s * two / vnorm2;
        }
        let pv = (k + 1..n).fold(T::zero(), |s, i| s + p[i] * v[i]) / vnorm2;
        let w: Vec<T> = (0..n).map(|i| p[i] - pv * v[i]).collect();
        for i in k..n {
            for j in k..n {
                a[i][j] -= v[i] * w[j] + w[i] * v[j];
            }
        }
    }
    let diag = (0..n).map(|i| a[i][i]).collect();
    let off = (0..n.saturating_sub(1)).map(|i| a[i + 1][i]).collect();
    (diag, off)
}
