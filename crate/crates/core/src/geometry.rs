//! Small fixed-size vector helpers and simplex measures.
//!
//! Spatial points are stored as `[T; 3]` (the third component is zero when
//! d = 2). Space-time points are `[T; 4]`: the first `d` entries are spatial
//! and entry `d` is time, so a d = 2 space-time point reads `[x, y, t, 0]`.

use crate::scalar::Real;

pub type Vec3<T> = [T; 3];
pub type Vec4<T> = [T; 4];

#[inline]
pub fn dot<T: Real, const N: usize>(a: &[T; N], b: &[T; N]) -> T {
    let mut s = T::zero();
    for i in 0..N {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub fn norm<T: Real, const N: usize>(a: &[T; N]) -> T {
    dot(a, a).sqrt()
}

#[inline]
pub fn sub<T: Real, const N: usize>(a: &[T; N], b: &[T; N]) -> [T; N] {
    let mut r = [T::zero(); N];
    for i in 0..N {
        r[i] = a[i] - b[i];
    }
    r
}

#[inline]
pub fn add<T: Real, const N: usize>(a: &[T; N], b: &[T; N]) -> [T; N] {
    let mut r = [T::zero(); N];
    for i in 0..N {
        r[i] = a[i] + b[i];
    }
    r
}

#[inline]
pub fn scale<T: Real, const N: usize>(a: &[T; N], s: T) -> [T; N] {
    let mut r = [T::zero(); N];
    for i in 0..N {
        r[i] = a[i] * s;
    }
    r
}

#[inline]
pub fn midpoint<T: Real, const N: usize>(a: &[T; N], b: &[T; N]) -> [T; N] {
    let half = T::lit(0.5);
    let mut r = [T::zero(); N];
    for i in 0..N {
        r[i] = (a[i] + b[i]) * half;
    }
    r
}

/// Spatial part of a space-time point.
#[inline]
pub fn spatial<T: Real>(p: &Vec4<T>, dim: usize) -> Vec3<T> {
    let mut x = [T::zero(); 3];
    x[..dim].copy_from_slice(&p[..dim]);
    x
}

/// Packs a spatial point and a time into a space-time point.
#[inline]
pub fn space_time<T: Real>(x: &Vec3<T>, t: T, dim: usize) -> Vec4<T> {
    let mut p = [T::zero(); 4];
    p[..dim].copy_from_slice(&x[..dim]);
    p[dim] = t;
    p
}

/// Solves the dense `n x n` system `a x = b` in place by Gaussian elimination
/// with partial pivoting. Returns `None` when a pivot vanishes.
pub fn solve_small<T: Real>(a: &mut [[T; 5]; 5], b: &mut [T; 5], n: usize) -> Option<[T; 5]> {
    for k in 0..n {
        let mut p = k;
        for i in k + 1..n {
            if a[i][k].abs() > a[p][k].abs() {
                p = i;
            }
        }
        if a[p][k] == T::zero() || !a[p][k].is_finite() {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                let v = a[k][j];
                a[i][j] -= f * v;
            }
            let v = b[k];
            b[i] -= f * v;
        }
    }
    let mut x = [T::zero(); 5];
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s -= a[i][j] * x[j];
        }
        x[i] = s / a[i][i];
    }
    Some(x)
}

/// Determinant of the leading `n x n` block (n <= 5).
pub fn det_small<T: Real>(mut a: [[T; 5]; 5], n: usize) -> T {
    let mut det = T::one();
    for k in 0..n {
        let mut p = k;
        for i in k + 1..n {
            if a[i][k].abs() > a[p][k].abs() {
                p = i;
            }
        }
        if a[p][k] == T::zero() {
            return T::zero();
        }
        if p != k {
            a.swap(k, p);
            det = -det;
        }
        det *= a[k][k];
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                let v = a[k][j];
                a[i][j] -= f * v;
            }
        }
    }
    det
}

fn factorial<T: Real>(k: usize) -> T {
    (1..=k).fold(T::one(), |acc, i| acc * T::from_usize_lossy(i))
}

/// Gram matrix of the edge vectors `p_i - p_0` (i = 1..k).
fn gram<T: Real, const N: usize>(points: &[[T; N]]) -> ([[T; 5]; 5], usize) {
    let k = points.len() - 1;
    let mut g = [[T::zero(); 5]; 5];
    for i in 0..k {
        let ei = sub(&points[i + 1], &points[0]);
        for j in 0..=i {
            let ej = sub(&points[j + 1], &points[0]);
            let v = dot(&ei, &ej);
            g[i][j] = v;
            g[j][i] = v;
        }
    }
    (g, k)
}

/// k-dimensional measure of the simplex spanned by `k + 1` points in any
/// ambient dimension, via the Gram determinant.
pub fn simplex_measure<T: Real, const N: usize>(points: &[[T; N]]) -> T {
    let (g, k) = gram(points);
    if k == 0 {
        return T::one();
    }
    let det = det_small(g, k);
    det.max(T::zero()).sqrt() / factorial::<T>(k)
}

/// Signed volume of a full-dimensional simplex using the leading `dim`
/// coordinates of `dim + 1` points.
pub fn signed_volume<T: Real, const N: usize>(points: &[[T; N]], dim: usize) -> T {
    let mut m = [[T::zero(); 5]; 5];
    for i in 0..dim {
        for j in 0..dim {
            m[i][j] = points[j + 1][i] - points[0][i];
        }
    }
    det_small(m, dim) / factorial::<T>(dim)
}

/// Magnitude of the gradient, within the affine hull of the simplex, of the
/// linear function taking `values[i]` at `points[i]`.
pub fn linear_gradient_norm<T: Real, const N: usize>(points: &[[T; N]], values: &[T]) -> Option<T> {
    let (mut g, k) = gram(points);
    let mut rhs = [T::zero(); 5];
    for i in 0..k {
        rhs[i] = values[i + 1] - values[0];
    }
    let delta = rhs;
    let c = solve_small(&mut g, &mut rhs, k)?;
    let mut s = T::zero();
    for i in 0..k {
        s += c[i] * delta[i];
    }
    Some(s.max(T::zero()).sqrt())
}

/// Gradient of the linear function through `dim + 1` points using the
/// leading `dim` coordinates (full-dimensional simplex).
pub fn linear_gradient<T: Real, const N: usize>(
    points: &[[T; N]],
    values: &[T],
    dim: usize,
) -> Option<[T; 5]> {
    let mut m = [[T::zero(); 5]; 5];
    let mut rhs = [T::zero(); 5];
    for i in 0..dim {
        for j in 0..dim {
            m[i][j] = points[i + 1][j] - points[0][j];
        }
        rhs[i] = values[i + 1] - values[0];
    }
    solve_small(&mut m, &mut rhs, dim)
}

/// Largest pairwise distance between the given points.
pub fn diameter<T: Real, const N: usize>(points: &[[T; N]]) -> T {
    let mut d = T::zero();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            d = d.max(norm(&sub(&points[i], &points[j])));
        }
    }
    d
}
