//! Space-time cut geometry: prism decomposition, marching-simplex cuts of
//! linear level-set interpolants, and quadrature on the reconstructed
//! space-time surface and on its time slices.
//!
//! Every element is red-refined once for the geometry only; each child prism
//! `child x [t0, t1]` is split into `d + 1` space-time simplices with the
//! sorted-vertex (Kuhn) rule. Vertex order everywhere follows global keys so
//! neighbouring prisms produce identical reconstructions on shared facets.

use arrayvec::ArrayVec;
use rand::Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::geometry::{linear_gradient, midpoint, simplex_measure, spatial, Vec3, Vec4};
use crate::mesh::{red_refinement_table, SpatialMesh};
use crate::problems::{unit_normal, LevelSetField, ProblemDefinition};
use crate::quadrature::{gauss2, SimplexRule};
use crate::scalar::Real;

/// Global key of a geometry vertex: a mesh vertex or the midpoint of a mesh edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SpatialKey {
    Vertex(usize),
    Mid(usize, usize),
}

/// Space-time key: spatial key and time level (0 bottom, 1 top).
pub type StKey = (SpatialKey, u8);

/// Child of the geometric red refinement of an element, vertices sorted by key.
#[derive(Clone, Debug)]
pub struct ChildSimplex<T> {
    pub keys: ArrayVec<SpatialKey, 4>,
    pub points: ArrayVec<Vec3<T>, 4>,
    /// Parent-local vertex pair of each vertex (`(i, i)` for a parent vertex).
    pub pairs: ArrayVec<(u8, u8), 4>,
}

/// Red-refinement children of element `k`, each with key-sorted vertices.
pub fn element_children<T: Real>(mesh: &SpatialMesh<T>, k: usize) -> Vec<ChildSimplex<T>> {
    let e = mesh.element(k);
    red_refinement_table(mesh.dim)
        .into_iter()
        .map(|child| {
            let mut verts: ArrayVec<(SpatialKey, Vec3<T>, (u8, u8)), 4> = child
                .iter()
                .map(|&(i, j)| {
                    let (a, b) = (e[i as usize], e[j as usize]);
                    if i == j {
                        (SpatialKey::Vertex(a), mesh.vertices[a], (i, i))
                    } else {
                        let key = SpatialKey::Mid(a.min(b), a.max(b));
                        (key, midpoint(&mesh.vertices[a], &mesh.vertices[b]), (i.min(j), i.max(j)))
                    }
                })
                .collect();
            verts.sort_by_key(|x| x.0);
            ChildSimplex {
                keys: verts.iter().map(|v| v.0).collect(),
                points: verts.iter().map(|v| v.1).collect(),
                pairs: verts.iter().map(|v| v.2).collect(),
            }
        })
        .collect()
}

/// A `(d+1)`-simplex of a prism decomposition, with the values of the level
/// set at its vertices (NaN until attached).
#[derive(Clone, Debug)]
pub struct SpaceTimeSimplex<T> {
    pub element: usize,
    pub keys: ArrayVec<StKey, 5>,
    pub points: ArrayVec<Vec4<T>, 5>,
    pub values: ArrayVec<T, 5>,
}

impl<T: Real> SpaceTimeSimplex<T> {
    /// Volume of the full-dimensional space-time simplex.
    pub fn measure(&self) -> T {
        crate::geometry::signed_volume(&self.points, self.points.len() - 1).abs()
    }
}

/// Splits `simplex x [t0, t1]` into `dim + 1` simplices. `points` must be in
/// increasing global order; simplex `j` is
/// `(p_0, t0), ..., (p_j, t0), (p_j, t1), ..., (p_dim, t1)`.
pub fn split_prism<T: Real, K: Copy>(
    keys: &[K],
    points: &[Vec3<T>],
    dim: usize,
    interval: (T, T),
) -> Vec<(ArrayVec<(K, u8), 5>, ArrayVec<Vec4<T>, 5>)> {
    let (t0, t1) = interval;
    let lift = |x: &Vec3<T>, t: T| crate::geometry::space_time(x, t, dim);
    (0..=dim)
        .map(|j| {
            let mut ks = ArrayVec::new();
            let mut ps = ArrayVec::new();
            for i in 0..=j {
                ks.push((keys[i], 0));
                ps.push(lift(&points[i], t0));
            }
            for i in j..=dim {
                ks.push((keys[i], 1));
                ps.push(lift(&points[i], t1));
            }
            (ks, ps)
        })
        .collect()
}

/// Decomposes the prism `element x interval` into space-time simplices:
/// 8 children x 4 pentatopes for d = 3, 4 children x 3 tetrahedra for d = 2.
pub fn decompose_prism<T: Real>(mesh: &SpatialMesh<T>, k: usize, interval: (T, T)) -> Vec<SpaceTimeSimplex<T>> {
    let mut out = Vec::new();
    for child in element_children(mesh, k) {
        for (keys, points) in split_prism(&child.keys, &child.points, mesh.dim, interval) {
            let n = points.len();
            out.push(SpaceTimeSimplex { element: k, keys, points, values: (0..n).map(|_| T::nan()).collect() });
        }
    }
    out
}

const PHI_CLAMP: f64 = 1e12;
const EPS_SCALE_CAP: f64 = 1e6;

/// Samples the level set, replacing non-finite values by a large value of the
/// same sign (NaN counts as positive).
pub fn sample_phi<T: Real>(field: &dyn LevelSetField<T>, x: &Vec3<T>, t: T) -> T {
    let v = field.phi(x, t);
    let c = T::lit(PHI_CLAMP);
    if v.is_nan() {
        c
    } else {
        v.max(-c).min(c)
    }
}

/// Degeneracy threshold `1e-12 * max|phi|` (with `|phi|` capped at 1e6).
pub fn degeneracy_eps<T: Real>(values: &[T]) -> T {
    let cap = T::lit(EPS_SCALE_CAP);
    let m = values.iter().fold(T::zero(), |m, v| m.max(v.abs().min(cap)));
    T::lit(1e-12) * m
}

/// Moves values with `|phi| < eps` to `+eps`.
pub fn perturb_values<T: Real>(values: &mut [T], eps: T) {
    for v in values.iter_mut() {
        if v.abs() < eps {
            *v = eps;
        }
    }
}

/// Zero level of a linear function on a simplex, as the product polytope
/// `conv{A} x conv{B}` cut points. `points[i * n_pos + j]` lies on the edge
/// from the `i`-th negative to the `j`-th positive vertex (simplex order).
#[derive(Clone, Debug)]
pub struct CutPolytope<T, K, const N: usize> {
    pub points: Vec<[T; N]>,
    pub keys: Vec<(K, K)>,
    pub n_neg: usize,
    pub n_pos: usize,
}

/// Cuts a simplex with vertex values (already perturbed; `phi < 0` is the
/// negative side). Returns `None` when all signs agree.
pub fn cut_simplex<T: Real, K: Copy, const N: usize>(
    points: &[[T; N]],
    keys: &[K],
    values: &[T],
) -> Option<CutPolytope<T, K, N>> {
    let neg: ArrayVec<usize, 5> = (0..values.len()).filter(|&i| values[i] < T::zero()).collect();
    let pos: ArrayVec<usize, 5> = (0..values.len()).filter(|&i| !(values[i] < T::zero())).collect();
    if neg.is_empty() || pos.is_empty() {
        return None;
    }
    let mut out = CutPolytope {
        points: Vec::with_capacity(neg.len() * pos.len()),
        keys: Vec::with_capacity(neg.len() * pos.len()),
        n_neg: neg.len(),
        n_pos: pos.len(),
    };
    for &a in &neg {
        for &b in &pos {
            let theta = values[a] / (values[a] - values[b]);
            let mut p = [T::zero(); N];
            for c in 0..N {
                p[c] = points[a][c] + theta * (points[b][c] - points[a][c]);
            }
            out.points.push(p);
            out.keys.push((keys[a], keys[b]));
        }
    }
    Some(out)
}

/// One simplex of a polytope triangulation, with the polytope point indices.
#[derive(Clone, Debug)]
pub struct PolytopePiece<T, const N: usize> {
    pub points: ArrayVec<[T; N], 4>,
    pub indices: ArrayVec<usize, 4>,
}

/// Staircase triangulation: one simplex per monotone lattice path from
/// `(0, 0)` to `(n_neg - 1, n_pos - 1)`. Pieces with measure below
/// `1e-14 * scale^k` are dropped.
pub fn triangulate_polytope<T: Real, K, const N: usize>(
    poly: &CutPolytope<T, K, N>,
    scale: T,
) -> Vec<PolytopePiece<T, N>> {
    let (a, b) = (poly.n_neg - 1, poly.n_pos - 1);
    let k = a + b;
    let tol = T::lit(1e-14) * scale.powi(k as i32);
    let mut out = Vec::new();
    // a path is a choice of which of the k steps go in the first direction
    for mask in 0u32..(1 << k) {
        if mask.count_ones() as usize != a {
            continue;
        }
        let (mut i, mut j) = (0usize, 0usize);
        let mut indices = ArrayVec::new();
        indices.push(0);
        for s in 0..k {
            if mask & (1 << s) != 0 {
                i += 1;
            } else {
                j += 1;
            }
            indices.push(i * poly.n_pos + j);
        }
        let points: ArrayVec<[T; N], 4> = indices.iter().map(|&q| poly.points[q]).collect();
        if k == 0 || simplex_measure(&points) > tol {
            out.push(PolytopePiece { points, indices });
        }
    }
    out
}

/// Quadrature point on the space-time surface.
#[derive(Clone, Copy, Debug)]
pub struct QuadPoint<T> {
    pub x: Vec3<T>,
    pub t: T,
    /// Weight for `ds dt` (measure correction included).
    pub weight: T,
    /// Exact unit normal of `Gamma(t)` at `x`.
    pub normal: Vec3<T>,
    /// Normal of the discrete surface piece containing the point.
    pub normal_h: Vec3<T>,
    pub wind: Vec3<T>,
}

impl<T: Real> QuadPoint<T> {
    pub fn normal_velocity(&self) -> T {
        crate::geometry::dot(&self.wind, &self.normal)
    }
}

/// Quadrature point on a time slice `Gamma_h(t)`.
#[derive(Clone, Copy, Debug)]
pub struct SlicePoint<T> {
    pub x: Vec3<T>,
    pub weight: T,
}

/// Space-time surface quadrature restricted to one element prism.
#[derive(Clone, Debug)]
pub struct CutQuadrature<T> {
    pub element: usize,
    pub points: Vec<QuadPoint<T>>,
}

/// Surface quadrature of `Gamma_h(t)` restricted to one element.
#[derive(Clone, Debug)]
pub struct ElementSlice<T> {
    pub element: usize,
    pub points: Vec<SlicePoint<T>>,
}

/// Quadrature of a time slice `Gamma_h(t)`, grouped by element.
#[derive(Clone, Debug)]
pub struct SliceQuadrature<T> {
    pub t: T,
    pub elements: Vec<ElementSlice<T>>,
}

impl<T: Real> SliceQuadrature<T> {
    pub fn total_weight(&self) -> T {
        self.elements.iter().flat_map(|e| e.points.iter()).map(|p| p.weight).sum()
    }

    pub fn num_points(&self) -> usize {
        self.elements.iter().map(|e| e.points.len()).sum()
    }

    /// `sum w f(x)` over all points.
    pub fn integrate(&self, f: impl Fn(&Vec3<T>) -> T) -> T {
        self.elements.iter().flat_map(|e| e.points.iter()).map(|p| p.weight * f(&p.x)).sum()
    }
}

/// Cut pieces (space-time simplices of dimension d) of one element prism,
/// with their measure correction `|grad_x phi_lin| / |grad_(x,t) phi_lin|`.
#[derive(Clone, Debug)]
pub struct StPiece<T> {
    pub points: ArrayVec<Vec4<T>, 4>,
    pub keys: ArrayVec<(StKey, StKey), 4>,
    pub correction: T,
    /// Spatial unit normal of the linear interpolant, `grad_x phi_lin / |grad_x phi_lin|`.
    pub normal_h: Vec3<T>,
}

/// Reconstructs the zero level of the space-time linear interpolant in the
/// prism of element `k`.
pub fn st_cut_pieces<T: Real>(
    mesh: &SpatialMesh<T>,
    k: usize,
    field: &dyn LevelSetField<T>,
    interval: (T, T),
) -> Vec<StPiece<T>> {
    let d = mesh.dim;
    let children = element_children(mesh, k);
    // values at parent-local pairs, both time levels
    let mut vals = [[[T::nan(); 4]; 4]; 2];
    let mut all = ArrayVec::<T, 20>::new();
    for child in &children {
        for (p, &(i, j)) in child.points.iter().zip(&child.pairs) {
            for (lev, t) in [interval.0, interval.1].into_iter().enumerate() {
                if vals[lev][i as usize][j as usize].is_nan() {
                    let v = sample_phi(field, p, t);
                    vals[lev][i as usize][j as usize] = v;
                    all.push(v);
                }
            }
        }
    }
    let eps = degeneracy_eps(&all);
    for lev in vals.iter_mut() {
        for row in lev.iter_mut() {
            perturb_values(row, eps);
        }
    }
    let scale = mesh.diameter(k).max(interval.1 - interval.0);
    let mut out = Vec::new();
    for child in &children {
        let mut child_vals = [[T::zero(); 4]; 2];
        for (s, &(i, j)) in child.pairs.iter().enumerate() {
            child_vals[0][s] = vals[0][i as usize][j as usize];
            child_vals[1][s] = vals[1][i as usize][j as usize];
        }
        let idx: ArrayVec<usize, 4> = (0..=d).collect();
        for (keys, points) in split_prism(&idx, &child.points, d, interval) {
            let values: ArrayVec<T, 5> = keys.iter().map(|&(s, lev)| child_vals[lev as usize][s]).collect();
            let gkeys: ArrayVec<StKey, 5> = keys.iter().map(|&(s, lev)| (child.keys[s], lev)).collect();
            let Some(poly) = cut_simplex(&points, &gkeys, &values) else { continue };
            let Some(g) = linear_gradient(&points, &values, d + 1) else { continue };
            let gx = (0..d).map(|i| g[i] * g[i]).sum::<T>().sqrt();
            let gxt = (gx * gx + g[d] * g[d]).sqrt();
            if !(gxt > T::zero()) {
                continue;
            }
            let correction = gx / gxt;
            let mut normal_h = [T::zero(); 3];
            if gx > T::zero() {
                for i in 0..d {
                    normal_h[i] = g[i] / gx;
                }
            }
            for piece in triangulate_polytope(&poly, scale) {
                out.push(StPiece {
                    keys: piece.indices.iter().map(|&q| poly.keys[q]).collect(),
                    points: piece.points,
                    correction,
                    normal_h,
                });
            }
        }
    }
    out
}

/// Slice pieces of `Gamma_h(t)` in element `k`: zero level of the spatial P1
/// interpolant of `phi(., t)` on the geometric children.
pub fn slice_pieces<T: Real>(
    mesh: &SpatialMesh<T>,
    k: usize,
    field: &dyn LevelSetField<T>,
    t: T,
) -> Vec<(ArrayVec<Vec3<T>, 4>, ArrayVec<(SpatialKey, SpatialKey), 4>)> {
    let children = element_children(mesh, k);
    let mut vals = [[T::nan(); 4]; 4];
    let mut all = ArrayVec::<T, 10>::new();
    for child in &children {
        for (p, &(i, j)) in child.points.iter().zip(&child.pairs) {
            if vals[i as usize][j as usize].is_nan() {
                let v = sample_phi(field, p, t);
                vals[i as usize][j as usize] = v;
                all.push(v);
            }
        }
    }
    let eps = degeneracy_eps(&all);
    for row in vals.iter_mut() {
        perturb_values(row, eps);
    }
    let scale = mesh.diameter(k);
    let mut out = Vec::new();
    for child in &children {
        let values: ArrayVec<T, 4> = child.pairs.iter().map(|&(i, j)| vals[i as usize][j as usize]).collect();
        let Some(poly) = cut_simplex(&child.points, &child.keys, &values) else { continue };
        for piece in triangulate_polytope(&poly, scale) {
            out.push((piece.points, piece.indices.iter().map(|&q| poly.keys[q]).collect()));
        }
    }
    out
}

/// Space-time surface quadrature of element `k` with a degree-`order` rule on
/// every cut piece; normals and wind from the analytic problem.
pub fn st_surface_quadrature<T: Real>(
    mesh: &SpatialMesh<T>,
    k: usize,
    problem: &dyn ProblemDefinition<T>,
    interval: (T, T),
    order: usize,
) -> Result<CutQuadrature<T>> {
    let d = mesh.dim;
    let rule = SimplexRule::<T>::new(d, order);
    let mut points = Vec::new();
    for piece in st_cut_pieces(mesh, k, problem, interval) {
        let measure = simplex_measure(&piece.points) * piece.correction;
        if !(measure > T::zero()) {
            continue;
        }
        for (p, w) in rule.map(&piece.points) {
            let x = spatial(&p, d);
            let t = p[d];
            points.push(QuadPoint {
                x,
                t,
                weight: w * measure,
                normal: unit_normal(problem, &x, t)?,
                normal_h: piece.normal_h,
                wind: problem.wind(&x, t)?,
            });
        }
    }
    Ok(CutQuadrature { element: k, points })
}

/// Slice quadrature points of `Gamma_h(t)` in element `k`.
pub fn element_slice_quadrature<T: Real>(
    mesh: &SpatialMesh<T>,
    k: usize,
    field: &dyn LevelSetField<T>,
    t: T,
    order: usize,
) -> ElementSlice<T> {
    let rule = SimplexRule::<T>::new(mesh.dim - 1, order);
    let mut points = Vec::new();
    for (piece, _) in slice_pieces(mesh, k, field, t) {
        let measure = simplex_measure(&piece);
        for (x, w) in rule.map(&piece) {
            points.push(SlicePoint { x, weight: w * measure });
        }
    }
    ElementSlice { element: k, points }
}

/// Quadrature of `Gamma_h(t)` over the whole mesh.
pub fn slice_quadrature<T: Real>(
    mesh: &SpatialMesh<T>,
    field: &dyn LevelSetField<T>,
    t: T,
    order: usize,
) -> SliceQuadrature<T> {
    let elements = (0..mesh.num_elements())
        .into_par_iter()
        .map(|k| element_slice_quadrature(mesh, k, field, t, order))
        .filter(|e| !e.points.is_empty())
        .collect();
    SliceQuadrature { t, elements }
}

/// All quadrature data of one time slab.
#[derive(Clone, Debug)]
pub struct SlabGeometry<T> {
    pub interval: (T, T),
    /// Elements with a nonempty space-time or slice quadrature, ascending.
    pub cut_elements: Vec<usize>,
    pub st: Vec<CutQuadrature<T>>,
    /// `Gamma_h(t_{n-1})`.
    pub bottom: SliceQuadrature<T>,
    /// `Gamma_h(t_n)`.
    pub top: SliceQuadrature<T>,
    /// Two-point Gauss slices `(t_k, tau_k, Gamma_h(t_k))`.
    pub gauss: Vec<(T, T, SliceQuadrature<T>)>,
}

impl<T: Real> SlabGeometry<T> {
    /// Builds every quadrature of the slab, element-parallel with an
    /// index-ordered merge.
    pub fn build(
        mesh: &SpatialMesh<T>,
        problem: &dyn ProblemDefinition<T>,
        interval: (T, T),
        order: usize,
    ) -> Result<Self> {
        let g = gauss2(interval.0, interval.1);
        let field: &dyn LevelSetField<T> = problem;
        type Local<T> = (CutQuadrature<T>, [ElementSlice<T>; 4]);
        let per_element: Vec<Result<Local<T>>> = (0..mesh.num_elements())
            .into_par_iter()
            .map(|k| {
                let st = st_surface_quadrature(mesh, k, problem, interval, order)?;
                let slices = [interval.0, interval.1, g[0].0, g[1].0]
                    .map(|t| element_slice_quadrature(mesh, k, field, t, order));
                Ok((st, slices))
            })
            .collect();
        let mut geo = SlabGeometry {
            interval,
            cut_elements: Vec::new(),
            st: Vec::new(),
            bottom: SliceQuadrature { t: interval.0, elements: Vec::new() },
            top: SliceQuadrature { t: interval.1, elements: Vec::new() },
            gauss: g.iter().map(|&(t, w)| (t, w, SliceQuadrature { t, elements: Vec::new() })).collect(),
        };
        for r in per_element {
            let (st, [bottom, top, g0, g1]) = r?;
            let k = st.element;
            let any = !st.points.is_empty()
                || !bottom.points.is_empty()
                || !top.points.is_empty()
                || !g0.points.is_empty()
                || !g1.points.is_empty();
            if !any {
                continue;
            }
            geo.cut_elements.push(k);
            if !st.points.is_empty() {
                geo.st.push(st);
            }
            for (slice, target) in [(bottom, &mut geo.bottom), (top, &mut geo.top)] {
                if !slice.points.is_empty() {
                    target.elements.push(slice);
                }
            }
            for (slice, target) in [g0, g1].into_iter().zip(geo.gauss.iter_mut()) {
                if !slice.points.is_empty() {
                    target.2.elements.push(slice);
                }
            }
        }
        Ok(geo)
    }

    pub fn num_st_points(&self) -> usize {
        self.st.iter().map(|q| q.points.len()).sum()
    }

    /// `sum w` over the space-time quadrature, approximating `int int 1 ds dt`.
    pub fn st_total_weight(&self) -> T {
        self.st.iter().flat_map(|q| q.points.iter()).map(|p| p.weight).sum()
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug)]
pub struct MeasureEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Band-counting estimate of the measure of the zero level of the linear
/// function with `values` on the full-dimensional simplex `points` (N + 1
/// points in R^N): `|{|phi| < delta}| |grad phi| / (2 delta)`.
pub fn monte_carlo_simplex_measure<R: Rng, const N: usize>(
    points: &[[f64; N]],
    values: &[f64],
    samples: usize,
    rng: &mut R,
) -> MeasureEstimate {
    let n = points.len();
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if lo >= 0.0 || hi < 0.0 || samples == 0 {
        return MeasureEstimate { estimate: 0.0, std_error: 0.0 };
    }
    let vol = crate::geometry::signed_volume(points, N).abs();
    let grad = linear_gradient(points, values, N).expect("non-degenerate simplex");
    let gnorm = (0..N).map(|i| grad[i] * grad[i]).sum::<f64>().sqrt();
    let delta = 1e-3 * (hi - lo);
    let mut hits = 0usize;
    let mut bary = vec![0.0; n];
    for _ in 0..samples {
        // uniform point in the simplex via normalized exponential spacings
        let mut s = 0.0;
        for b in bary.iter_mut() {
            *b = -rng.gen::<f64>().max(f64::MIN_POSITIVE).ln();
            s += *b;
        }
        let phi: f64 = bary.iter().zip(values).map(|(b, v)| b / s * v).sum();
        if phi.abs() < delta {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    let factor = vol * gnorm / (2.0 * delta);
    MeasureEstimate { estimate: p * factor, std_error: (p * (1.0 - p) / samples as f64).sqrt() * factor }
}

/// Monte Carlo estimate of the measure of the reconstructed space-time
/// manifold in the prism of element `k`.
pub fn monte_carlo_prism_measure<R: Rng>(
    mesh: &SpatialMesh<f64>,
    k: usize,
    field: &dyn LevelSetField<f64>,
    interval: (f64, f64),
    samples_per_simplex: usize,
    rng: &mut R,
) -> MeasureEstimate {
    let mut est = 0.0;
    let mut var = 0.0;
    for s in decompose_prism(mesh, k, interval) {
        let values: Vec<f64> = s
            .points
            .iter()
            .map(|p| sample_phi(field, &spatial(p, mesh.dim), p[mesh.dim]))
            .collect();
        let m = if mesh.dim == 2 {
            let pts: Vec<[f64; 3]> = s.points.iter().map(|p| [p[0], p[1], p[2]]).collect();
            monte_carlo_simplex_measure(&pts, &values, samples_per_simplex, rng)
        } else {
            monte_carlo_simplex_measure(&s.points, &values, samples_per_simplex, rng)
        };
        est += m.estimate;
        var += m.std_error * m.std_error;
    }
    MeasureEstimate { estimate: est, std_error: var.sqrt() }
}

/// Measure of the zero level of a linear function on a full-dimensional
/// simplex with pairwise distinct vertex values, from the closed-form volume
/// of the sublevel set `V(s) = vol * sum_i (s - phi_i)_+^n / prod_(j != i) (phi_j - phi_i)`:
/// the level measure is `V'(0) |grad phi|`.
pub fn exact_level_measure<const N: usize>(points: &[[f64; N]], values: &[f64]) -> f64 {
    let n = N;
    let vol = crate::geometry::signed_volume(points, N).abs();
    let grad = linear_gradient(points, values, N).expect("non-degenerate simplex");
    let gnorm = (0..N).map(|i| grad[i] * grad[i]).sum::<f64>().sqrt();
    let mut dv = 0.0;
    for i in 0..=n {
        let s = -values[i];
        if s <= 0.0 {
            continue;
        }
        let mut den = 1.0;
        for j in 0..=n {
            if j != i {
                den *= values[j] - values[i];
            }
        }
        dv += n as f64 * s.powi(n as i32 - 1) / den;
    }
    vol * dv * gnorm
}

/// Total `|Gamma_h(t)|` on a mesh.
pub fn slice_measure<T: Real>(mesh: &SpatialMesh<T>, field: &dyn LevelSetField<T>, t: T) -> T {
    (0..mesh.num_elements())
        .into_par_iter()
        .map(|k| slice_pieces(mesh, k, field, t).iter().map(|(p, _)| simplex_measure(p)).sum::<T>())
        .collect::<Vec<T>>()
        .into_iter()
        .sum()
}
