//! Piecewise linear in space, linear in time volume functions on the cut
//! elements of a slab, and their traces on the space-time surface.
//!
//! Dof `level * n_active + i` is the basis `hat_i(x) lambda_level(t)` with
//! `lambda_bottom = (t_n - t) / dt` and `lambda_top = (t - t_(n-1)) / dt`.

use arrayvec::ArrayVec;

use crate::error::{Error, Result};
use crate::geometry::{linear_gradient, Vec3};
use crate::mesh::SpatialMesh;
use crate::scalar::Real;

const INACTIVE: u32 = u32::MAX;

/// Active vertices of a slab and the compact dof numbering.
#[derive(Clone, Debug)]
pub struct SlabDofMap {
    /// Active mesh vertices, ascending.
    pub active: Vec<usize>,
    index: Vec<u32>,
}

impl SlabDofMap {
    /// Activates every vertex of the given cut elements.
    pub fn build<T: Real>(mesh: &SpatialMesh<T>, cut_elements: &[usize]) -> Result<Self> {
        if cut_elements.is_empty() {
            return Err(Error::EmptyCutSet);
        }
        let mut flag = vec![false; mesh.num_vertices()];
        for &k in cut_elements {
            for &v in mesh.element(k) {
                flag[v] = true;
            }
        }
        let mut index = vec![INACTIVE; mesh.num_vertices()];
        let mut active = Vec::new();
        for (v, &f) in flag.iter().enumerate() {
            if f {
                index[v] = active.len() as u32;
                active.push(v);
            }
        }
        Ok(SlabDofMap { active, index })
    }

    pub fn num_active(&self) -> usize {
        self.active.len()
    }

    pub fn num_dofs(&self) -> usize {
        2 * self.active.len()
    }

    /// Compact index of an active vertex.
    pub fn vertex_index(&self, v: usize) -> Option<usize> {
        match self.index.get(v) {
            Some(&i) if i != INACTIVE => Some(i as usize),
            _ => None,
        }
    }

    /// Dof of vertex `v` at time level 0 (bottom) or 1 (top).
    pub fn dof(&self, v: usize, level: usize) -> Option<usize> {
        self.vertex_index(v).map(|i| level * self.active.len() + i)
    }

    pub fn is_active_element<T: Real>(&self, mesh: &SpatialMesh<T>, k: usize) -> bool {
        mesh.element(k).iter().all(|&v| self.vertex_index(v).is_some())
    }

    /// Dofs of an active element: bottom level for the `d + 1` vertices, then top.
    pub fn element_dofs<T: Real>(&self, mesh: &SpatialMesh<T>, k: usize) -> Option<ArrayVec<usize, 8>> {
        let mut out = ArrayVec::new();
        for level in 0..2 {
            for &v in mesh.element(k) {
                out.push(self.dof(v, level)?);
            }
        }
        Some(out)
    }
}

/// Gradients of the barycentric coordinates (hat functions) of element `k`.
pub fn hat_gradients<T: Real>(mesh: &SpatialMesh<T>, k: usize) -> ArrayVec<Vec3<T>, 4> {
    let p = mesh.element_points(k);
    let d = mesh.dim;
    (0..=d)
        .map(|i| {
            let vals: ArrayVec<T, 4> = (0..=d).map(|j| if i == j { T::one() } else { T::zero() }).collect();
            let g = linear_gradient(&p, &vals, d).expect("non-degenerate element");
            let mut out = [T::zero(); 3];
            out[..d].copy_from_slice(&g[..d]);
            out
        })
        .collect()
}

/// Temporal hat functions and their derivatives on `interval`.
#[inline]
pub fn time_basis<T: Real>(t: T, interval: (T, T)) -> ([T; 2], [T; 2]) {
    let dt = interval.1 - interval.0;
    let top = (t - interval.0) / dt;
    ([T::one() - top, top], [-T::one() / dt, T::one() / dt])
}

/// Value, spatial gradient and time derivative of one local basis function.
#[derive(Clone, Copy, Debug)]
pub struct BasisValue<T> {
    pub value: T,
    pub grad: Vec3<T>,
    pub dt: T,
}

/// Local basis of element `k` at `(x, t)`, in [`SlabDofMap::element_dofs`]
/// order (bottom vertices, then top vertices).
pub fn eval_basis<T: Real>(
    mesh: &SpatialMesh<T>,
    k: usize,
    x: &Vec3<T>,
    t: T,
    interval: (T, T),
) -> ArrayVec<BasisValue<T>, 8> {
    let lam = mesh.barycentric(k, x);
    let grads = hat_gradients(mesh, k);
    local_basis(&lam, &grads, mesh.dim, t, interval)
}

/// As [`eval_basis`] with precomputed barycentric coordinates and hat gradients.
pub fn local_basis<T: Real>(
    lam: &[T; 4],
    grads: &[Vec3<T>],
    dim: usize,
    t: T,
    interval: (T, T),
) -> ArrayVec<BasisValue<T>, 8> {
    let (tb, dtb) = time_basis(t, interval);
    let mut out = ArrayVec::new();
    for level in 0..2 {
        for i in 0..=dim {
            let g = grads[i];
            out.push(BasisValue {
                value: lam[i] * tb[level],
                grad: [g[0] * tb[level], g[1] * tb[level], g[2] * tb[level]],
                dt: lam[i] * dtb[level],
            });
        }
    }
    out
}

/// Finite element function of one slab: mesh, dof map and coefficients.
#[derive(Clone, Debug)]
pub struct FEFunctionSlab<T> {
    /// Slab index (1-based).
    pub slab: usize,
    pub interval: (T, T),
    pub mesh: SpatialMesh<T>,
    pub dofs: SlabDofMap,
    pub coefficients: Vec<T>,
}

impl<T: Real> FEFunctionSlab<T> {
    pub fn new(slab: usize, interval: (T, T), mesh: SpatialMesh<T>, dofs: SlabDofMap, coefficients: Vec<T>) -> Self {
        assert_eq!(coefficients.len(), dofs.num_dofs(), "coefficient vector length");
        FEFunctionSlab { slab, interval, mesh, dofs, coefficients }
    }

    /// Coefficient of vertex `v` at a time level; zero for inactive vertices.
    pub fn coefficient(&self, v: usize, level: usize) -> T {
        self.dofs.dof(v, level).map_or(T::zero(), |i| self.coefficients[i])
    }

    /// Element used to evaluate at `x`, preferring active elements.
    pub fn locate(&self, x: &Vec3<T>) -> Result<usize> {
        self.mesh
            .locate_where(x, |k| self.dofs.is_active_element(&self.mesh, k))
            .ok_or_else(|| Error::Outside([x[0].as_f64(), x[1].as_f64(), x[2].as_f64()]))
    }

    /// Value of the volume function at `(x, t)`.
    pub fn value(&self, x: &Vec3<T>, t: T) -> Result<T> {
        let k = self.locate(x)?;
        Ok(self.value_in(k, x, t))
    }

    /// Value at `(x, t)` using element `k`.
    pub fn value_in(&self, k: usize, x: &Vec3<T>, t: T) -> T {
        let lam = self.mesh.barycentric(k, x);
        let (tb, _) = time_basis(t, self.interval);
        let mut s = T::zero();
        for (i, &v) in self.mesh.element(k).iter().enumerate() {
            s += lam[i] * (tb[0] * self.coefficient(v, 0) + tb[1] * self.coefficient(v, 1));
        }
        s
    }

    /// Spatial gradient at `(x, t)` using element `k`.
    pub fn gradient_in(&self, k: usize, t: T, grads: &[Vec3<T>]) -> Vec3<T> {
        let (tb, _) = time_basis(t, self.interval);
        let mut g = [T::zero(); 3];
        for (i, &v) in self.mesh.element(k).iter().enumerate() {
            let c = tb[0] * self.coefficient(v, 0) + tb[1] * self.coefficient(v, 1);
            for j in 0..3 {
                g[j] += c * grads[i][j];
            }
        }
        g
    }
}

/// Side of a slab boundary: `Minus` is the limit from below, `Plus` from above.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Minus,
    Plus,
}

/// Evaluates the solution of slab `n` (1-based) at `(x, t)`; when `t` is the
/// top of slab `n` and `side` is `Plus`, slab `n + 1` is used instead.
pub fn eval_solution<T: Real>(slabs: &[FEFunctionSlab<T>], n: usize, x: &Vec3<T>, t: T, side: Side) -> Result<T> {
    if n == 0 || n > slabs.len() {
        return Err(Error::InvalidInput(format!("slab {n} out of range 1..={}", slabs.len())));
    }
    let mut s = &slabs[n - 1];
    if side == Side::Plus && t == s.interval.1 {
        s = slabs
            .get(n)
            .ok_or_else(|| Error::InvalidInput(format!("no slab after {n} for the + side")))?;
    }
    s.value(x, t)
}
