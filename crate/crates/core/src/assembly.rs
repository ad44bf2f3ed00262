//! Slab systems of the stabilized space-time trace scheme:
//! `M + A + S + D` with
//!
//! * `M_ij = sum w (d_t phi_j + w . grad phi_j) phi_i` (material derivative),
//! * `A_ij = sum w [nu (P_h grad phi_j) . (P_h grad phi_i) + div_G w phi_j phi_i]`,
//!   with `P_h = I - n_h n_h^T` from the normal of the discrete surface piece,
//! * `S = sigma sum_k tau_k g_k g_k^T` with slice means `g_k[i] = int_{Gamma_h(t_k)} phi_i`,
//! * `D_ij = int_{Gamma_h(t_(n-1))} phi_j phi_i` (upwind coupling to the previous slab).

use std::time::Instant;

use arrayvec::ArrayVec;
use rayon::prelude::*;
use serde::Serialize;

use crate::cutgeom::{SlabGeometry, SliceQuadrature};
use crate::error::Result;
use crate::fespace::{hat_gradients, local_basis, SlabDofMap};
use crate::geometry::{dot, Vec3};
use crate::linalg::{symmetric_min_eigenvalue, CsrMatrix, LowRank, SystemMatrix};
use crate::mesh::SpatialMesh;
use crate::problems::{surface_divergence_wind, ProblemDefinition};
use crate::scalar::Real;

/// Assembly counters.
#[derive(Clone, Debug, Default, Serialize)]
pub struct AssemblyStats {
    pub seconds: f64,
    pub cut_elements: usize,
    pub st_points: usize,
    pub dofs: usize,
    pub nnz: usize,
}

/// Linear system of one slab.
#[derive(Clone, Debug)]
pub struct SlabSystem<T> {
    pub matrix: SystemMatrix<T>,
    pub rhs: Vec<T>,
    /// Slice-mean vectors `g_k` at the Gauss times.
    pub slice_means: Vec<Vec<T>>,
    /// Reference mass at the slab end, `m(t_n)`.
    pub reference_mass_end: T,
    /// Slab average of `int_{Gamma_h} f ds`.
    pub mean_source: T,
    pub stats: AssemblyStats,
}

/// Reference mass data entering the consistent sigma-term.
#[derive(Clone, Copy, Debug)]
pub struct MassReference<T> {
    /// `m(t_(n-1))`.
    pub start: T,
}

/// Stabilization and mass reference parameters of a slab.
#[derive(Clone, Copy, Debug)]
pub struct SlabParams<T> {
    pub sigma: T,
    pub mass: MassReference<T>,
}

/// Local contribution of one element.
struct Local<T> {
    dofs: ArrayVec<usize, 8>,
    mat: [[T; 8]; 8],
    rhs: [T; 8],
}

/// Assembles the slab system. `prev` evaluates the previous slab solution
/// from below (or the initial data) at points of `Gamma_h(t_(n-1))`.
pub fn assemble_slab<T: Real>(
    mesh: &SpatialMesh<T>,
    dofs: &SlabDofMap,
    geo: &SlabGeometry<T>,
    problem: &dyn ProblemDefinition<T>,
    params: &SlabParams<T>,
    prev: &(dyn Fn(&Vec3<T>) -> Result<T> + Sync),
) -> Result<SlabSystem<T>> {
    let start = Instant::now();
    let d = mesh.dim;
    let nu = problem.info().nu;
    let interval = geo.interval;
    let nd = dofs.num_dofs();
    let nloc = 2 * (d + 1);

    let st_locals: Vec<Result<Local<T>>> = geo
        .st
        .par_iter()
        .map(|q| {
            let k = q.element;
            let grads = hat_gradients(mesh, k);
            let mut loc = Local {
                dofs: dofs.element_dofs(mesh, k).expect("cut element is active"),
                mat: [[T::zero(); 8]; 8],
                rhs: [T::zero(); 8],
            };
            for p in &q.points {
                let lam = mesh.barycentric(k, &p.x);
                let basis = local_basis(&lam, &grads, d, p.t, interval);
                let div_w = surface_divergence_wind(problem, &p.x, p.t)?;
                let f = problem.source(&p.x, p.t);
                let n = &p.normal_h;
                let mut material = [T::zero(); 8];
                let mut tang = [[T::zero(); 3]; 8];
                for (a, b) in basis.iter().enumerate() {
                    material[a] = b.dt + dot(&p.wind, &b.grad);
                    let gn = dot(&b.grad, n);
                    tang[a] = [b.grad[0] - gn * n[0], b.grad[1] - gn * n[1], b.grad[2] - gn * n[2]];
                }
                for i in 0..nloc {
                    let vi = basis[i].value;
                    for j in 0..nloc {
                        let vj = basis[j].value;
                        loc.mat[i][j] += p.weight * (material[j] * vi + nu * dot(&tang[j], &tang[i]) + div_w * vj * vi);
                    }
                    loc.rhs[i] += p.weight * f * vi;
                }
            }
            Ok(loc)
        })
        .collect();

    let jump_locals: Vec<Result<Local<T>>> = geo
        .bottom
        .elements
        .par_iter()
        .map(|s| {
            let k = s.element;
            let mut loc = Local {
                dofs: dofs.element_dofs(mesh, k).expect("cut element is active"),
                mat: [[T::zero(); 8]; 8],
                rhs: [T::zero(); 8],
            };
            for p in &s.points {
                let lam = mesh.barycentric(k, &p.x);
                let u_prev = prev(&p.x)?;
                // bottom level only: phi(., t_(n-1)+) = hat_i
                for i in 0..=d {
                    for j in 0..=d {
                        loc.mat[i][j] += p.weight * lam[j] * lam[i];
                    }
                    loc.rhs[i] += p.weight * u_prev * lam[i];
                }
            }
            Ok(loc)
        })
        .collect();

    let mut triplets = Vec::with_capacity((st_locals.len() + jump_locals.len()) * nloc * nloc);
    let mut rhs = vec![T::zero(); nd];
    for loc in st_locals.into_iter().chain(jump_locals) {
        let loc = loc?;
        for i in 0..nloc {
            for j in 0..nloc {
                if loc.mat[i][j] != T::zero() {
                    triplets.push((loc.dofs[i], loc.dofs[j], loc.mat[i][j]));
                }
            }
            rhs[loc.dofs[i]] += loc.rhs[i];
        }
    }
    let sparse = CsrMatrix::from_triplets(nd, &triplets)?;

    // slice means and the consistent sigma-term
    let mut slice_means = Vec::with_capacity(geo.gauss.len());
    let mut fbar = T::zero();
    let dt = interval.1 - interval.0;
    for (tk, tau, slice) in &geo.gauss {
        slice_means.push(slice_mean_vector(mesh, dofs, slice, *tk, interval));
        fbar += *tau * slice.integrate(|x| problem.source(x, *tk));
    }
    fbar /= dt;
    let mut low_rank = LowRank::empty();
    if params.sigma != T::zero() {
        for ((tk, tau, _), g) in geo.gauss.iter().zip(&slice_means) {
            let c = params.sigma * *tau;
            let m = params.mass.start + (*tk - interval.0) * fbar;
            for (r, &gi) in rhs.iter_mut().zip(g) {
                *r += c * m * gi;
            }
            low_rank.push(c, g.clone(), g.clone());
        }
    }
    let stats = AssemblyStats {
        seconds: start.elapsed().as_secs_f64(),
        cut_elements: geo.cut_elements.len(),
        st_points: geo.num_st_points(),
        dofs: nd,
        nnz: sparse.nnz(),
    };
    Ok(SlabSystem {
        matrix: SystemMatrix { sparse, low_rank },
        rhs,
        slice_means,
        reference_mass_end: params.mass.start + dt * fbar,
        mean_source: fbar,
        stats,
    })
}

/// `g[i] = sum_points w phi_i(x, t)` over a slice of the slab.
pub fn slice_mean_vector<T: Real>(
    mesh: &SpatialMesh<T>,
    dofs: &SlabDofMap,
    slice: &SliceQuadrature<T>,
    t: T,
    interval: (T, T),
) -> Vec<T> {
    let d = mesh.dim;
    let mut g = vec![T::zero(); dofs.num_dofs()];
    for s in &slice.elements {
        let k = s.element;
        let Some(ed) = dofs.element_dofs(mesh, k) else { continue };
        let grads = hat_gradients(mesh, k);
        for p in &s.points {
            let lam = mesh.barycentric(k, &p.x);
            for (a, b) in local_basis(&lam, &grads, d, t, interval).iter().enumerate() {
                g[ed[a]] += p.weight * b.value;
            }
        }
    }
    g
}

/// Smallest eigenvalue of `(B + B^T) / 2` (dense; intended for small systems).
pub fn symmetric_part_min_eig<T: Real>(matrix: &SystemMatrix<T>) -> T {
    let b = matrix.to_dense();
    let n = b.len();
    let mut s = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            s[i][j] = (b[i][j] + b[j][i]) * T::lit(0.5);
        }
    }
    symmetric_min_eigenvalue(s)
}
