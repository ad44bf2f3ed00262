//! Simplicial box meshes, regular refinement near an implicit interface, point
//! location, and the uniform time partition.

use std::collections::HashMap;
use std::sync::OnceLock;

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{diameter, norm, signed_volume, Vec3};
use crate::problems::LevelSetField;
use crate::scalar::Real;

/// Axis-aligned box `lo < x < hi` in `dim` dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain<T> {
    pub dim: usize,
    pub lo: Vec3<T>,
    pub hi: Vec3<T>,
}

impl<T: Real> BoxDomain<T> {
    pub fn new(dim: usize, lo: &[f64], hi: &[f64]) -> Self {
        let mut l = [T::zero(); 3];
        let mut h = [T::zero(); 3];
        for i in 0..dim {
            l[i] = T::lit(lo[i]);
            h[i] = T::lit(hi[i]);
        }
        BoxDomain { dim, lo: l, hi: h }
    }

    pub fn volume(&self) -> T {
        (0..self.dim).fold(T::one(), |v, i| v * (self.hi[i] - self.lo[i]))
    }

    pub fn diameter(&self) -> T {
        let mut s = T::zero();
        for i in 0..self.dim {
            let e = self.hi[i] - self.lo[i];
            s += e * e;
        }
        s.sqrt()
    }

    pub fn contains(&self, x: &Vec3<T>, tol: T) -> bool {
        (0..self.dim).all(|i| x[i] >= self.lo[i] - tol && x[i] <= self.hi[i] + tol)
    }
}

/// Local vertex pairs `(i, j)` of the regular (red) refinement children; the
/// pair denotes the edge midpoint, `(i, i)` the vertex itself. For Kuhn
/// simplices the vertex order of every child is again a Kuhn path.
const RED_2D: [[(u8, u8); 3]; 4] = [
    [(0, 0), (0, 1), (0, 2)],
    [(0, 1), (1, 1), (1, 2)],
    [(0, 2), (1, 2), (2, 2)],
    [(0, 1), (0, 2), (1, 2)],
];

const RED_3D: [[(u8, u8); 4]; 8] = [
    [(0, 0), (0, 1), (0, 2), (0, 3)],
    [(0, 1), (1, 1), (1, 2), (1, 3)],
    [(0, 2), (1, 2), (2, 2), (2, 3)],
    [(0, 3), (1, 3), (2, 3), (3, 3)],
    [(0, 1), (0, 2), (0, 3), (1, 3)],
    [(0, 1), (0, 2), (1, 2), (1, 3)],
    [(0, 2), (0, 3), (1, 3), (2, 3)],
    [(0, 2), (1, 2), (1, 3), (2, 3)],
];

/// Children of a `dim`-simplex as lists of local vertex pairs.
pub fn red_refinement_table(dim: usize) -> Vec<Vec<(u8, u8)>> {
    match dim {
        2 => RED_2D.iter().map(|c| c.to_vec()).collect(),
        3 => RED_3D.iter().map(|c| c.to_vec()).collect(),
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// Simplicial mesh of a box, with refinement levels and face adjacency.
///
/// Element vertex order is the Kuhn path order inherited from the coarse
/// mesh; orientation is therefore not normalized and `signed_volume` may be
/// negative for half of the elements. Vertex indices give the global order
/// used when splitting space-time prisms.
#[derive(Clone, Debug)]
pub struct SpatialMesh<T> {
    pub dim: usize,
    pub domain: BoxDomain<T>,
    pub vertices: Vec<Vec3<T>>,
    pub elements: Vec<[usize; 4]>,
    pub levels: Vec<u32>,
    /// `neighbors[e][i]` is the element across the face opposite local vertex `i`.
    pub neighbors: Vec<[Option<usize>; 4]>,
    midpoints: HashMap<(usize, usize), usize>,
    locator: OnceLock<Locator>,
}

impl<T: Real> SpatialMesh<T> {
    /// Builds a mesh from raw parts. Elements must be non-degenerate.
    pub fn from_parts(
        domain: BoxDomain<T>,
        vertices: Vec<Vec3<T>>,
        elements: Vec<[usize; 4]>,
        levels: Vec<u32>,
    ) -> Result<Self> {
        let dim = domain.dim;
        if levels.len() != elements.len() {
            return Err(Error::InvalidInput("levels and elements differ in length".into()));
        }
        for e in &elements {
            if e[..=dim].iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidInput("element references a missing vertex".into()));
            }
        }
        let mut mesh = SpatialMesh {
            dim,
            domain,
            vertices,
            elements,
            levels,
            neighbors: Vec::new(),
            midpoints: HashMap::new(),
            locator: OnceLock::new(),
        };
        for k in 0..mesh.elements.len() {
            if mesh.volume(k) <= T::zero() {
                return Err(Error::InvalidInput(format!("element {k} is degenerate")));
            }
        }
        mesh.rebuild_adjacency();
        Ok(mesh)
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn element(&self, k: usize) -> &[usize] {
        &self.elements[k][..=self.dim]
    }

    pub fn element_points(&self, k: usize) -> ArrayVec<Vec3<T>, 4> {
        self.element(k).iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn signed_volume(&self, k: usize) -> T {
        signed_volume(&self.element_points(k), self.dim)
    }

    pub fn volume(&self, k: usize) -> T {
        self.signed_volume(k).abs()
    }

    pub fn diameter(&self, k: usize) -> T {
        diameter(&self.element_points(k))
    }

    pub fn total_volume(&self) -> T {
        (0..self.num_elements()).map(|k| self.volume(k)).sum()
    }

    pub fn max_level(&self) -> u32 {
        self.levels.iter().copied().max().unwrap_or(0)
    }

    /// Barycentric coordinates of `x` with respect to element `k`.
    pub fn barycentric(&self, k: usize, x: &Vec3<T>) -> [T; 4] {
        let p = self.element_points(k);
        let d = self.dim;
        let mut m = [[T::zero(); 5]; 5];
        let mut rhs = [T::zero(); 5];
        for i in 0..d {
            for j in 0..d {
                m[i][j] = p[j + 1][i] - p[0][i];
            }
            rhs[i] = x[i] - p[0][i];
        }
        let mut lam = [T::zero(); 4];
        if let Some(s) = crate::geometry::solve_small(&mut m, &mut rhs, d) {
            let mut sum = T::zero();
            for i in 0..d {
                lam[i + 1] = s[i];
                sum += s[i];
            }
            lam[0] = T::one() - sum;
        } else {
            lam = [T::nan(); 4];
        }
        lam
    }

    /// Returns the midpoint vertex of edge `(a, b)`, creating it if needed.
    fn midpoint_vertex(&mut self, a: usize, b: usize) -> usize {
        let key = if a < b { (a, b) } else { (b, a) };
        if let Some(&m) = self.midpoints.get(&key) {
            return m;
        }
        let x = crate::geometry::midpoint(&self.vertices[a], &self.vertices[b]);
        self.vertices.push(x);
        let m = self.vertices.len() - 1;
        self.midpoints.insert(key, m);
        m
    }

    /// Regularly refines every marked element. Children replace their parent
    /// in place; new vertices are appended after existing ones.
    pub fn refine_elements(&self, marked: &[bool]) -> SpatialMesh<T> {
        let table = red_refinement_table(self.dim);
        let mut out = SpatialMesh {
            dim: self.dim,
            domain: self.domain.clone(),
            vertices: self.vertices.clone(),
            elements: Vec::with_capacity(self.elements.len()),
            levels: Vec::with_capacity(self.elements.len()),
            neighbors: Vec::new(),
            midpoints: self.midpoints.clone(),
            locator: OnceLock::new(),
        };
        for (k, e) in self.elements.iter().enumerate() {
            if !marked[k] {
                out.elements.push(*e);
                out.levels.push(self.levels[k]);
                continue;
            }
            for child in &table {
                let mut c = [usize::MAX; 4];
                for (slot, &(i, j)) in child.iter().enumerate() {
                    let (a, b) = (e[i as usize], e[j as usize]);
                    c[slot] = if i == j { a } else { out.midpoint_vertex(a, b) };
                }
                out.elements.push(c);
                out.levels.push(self.levels[k] + 1);
            }
        }
        out.rebuild_adjacency();
        out
    }

    fn rebuild_adjacency(&mut self) {
        let d = self.dim;
        let mut faces: HashMap<ArrayVec<usize, 3>, (usize, usize)> = HashMap::new();
        self.neighbors = vec![[None; 4]; self.elements.len()];
        for k in 0..self.elements.len() {
            for i in 0..=d {
                let mut f: ArrayVec<usize, 3> =
                    (0..=d).filter(|&j| j != i).map(|j| self.elements[k][j]).collect();
                f.sort_unstable();
                if let Some((other, oi)) = faces.remove(&f) {
                    self.neighbors[k][i] = Some(other);
                    self.neighbors[other][oi] = Some(k);
                } else {
                    faces.insert(f, (k, i));
                }
            }
        }
    }

    /// Element containing `x`, lowest index first on shared faces; `None`
    /// when `x` is outside the box.
    pub fn point_locate(&self, x: &Vec3<T>) -> Option<usize> {
        self.locate_where(x, |_| true)
    }

    /// As [`point_locate`](Self::point_locate), restricted to elements
    /// accepted by `filter`; falls back to any containing element.
    pub fn locate_where(&self, x: &Vec3<T>, filter: impl Fn(usize) -> bool) -> Option<usize> {
        let tol = T::lit(1e-12);
        if !self.domain.contains(x, tol * self.domain.diameter()) {
            return None;
        }
        let loc = self.locator.get_or_init(|| Locator::build(self));
        let cands = loc.candidates(self, x);
        let mut fallback = None;
        for &k in cands {
            let lam = self.barycentric(k as usize, x);
            if lam[..=self.dim].iter().all(|&l| l >= -tol && l <= T::one() + tol) {
                if filter(k as usize) {
                    return Some(k as usize);
                }
                fallback.get_or_insert(k as usize);
            }
        }
        fallback
    }
}

/// Uniform bucket grid over element bounding boxes.
#[derive(Clone, Debug)]
struct Locator {
    lo: [f64; 3],
    cell: [f64; 3],
    n: [usize; 3],
    start: Vec<u32>,
    items: Vec<u32>,
}

impl Locator {
    fn build<T: Real>(mesh: &SpatialMesh<T>) -> Self {
        let d = mesh.dim;
        let ne = mesh.num_elements().max(1);
        let mut min_ext = f64::INFINITY;
        let mut boxes = Vec::with_capacity(ne);
        for k in 0..mesh.num_elements() {
            let p = mesh.element_points(k);
            let mut bl = [f64::INFINITY; 3];
            let mut bh = [f64::NEG_INFINITY; 3];
            for q in &p {
                for i in 0..d {
                    bl[i] = bl[i].min(q[i].as_f64());
                    bh[i] = bh[i].max(q[i].as_f64());
                }
            }
            let ext = (0..d).map(|i| bh[i] - bl[i]).fold(0.0, f64::max);
            min_ext = min_ext.min(ext);
            boxes.push((bl, bh));
        }
        let lo: [f64; 3] = std::array::from_fn(|i| if i < d { mesh.domain.lo[i].as_f64() } else { 0.0 });
        let hi: [f64; 3] = std::array::from_fn(|i| if i < d { mesh.domain.hi[i].as_f64() } else { 1.0 });
        let budget = (4 * ne).clamp(64, 1 << 21) as f64;
        let vol: f64 = (0..d).map(|i| hi[i] - lo[i]).product();
        let mut h = min_ext.max((vol / budget).powf(1.0 / d as f64));
        if !h.is_finite() || h <= 0.0 {
            h = 1.0;
        }
        let mut n = [1usize; 3];
        let mut cell = [1.0; 3];
        for i in 0..d {
            n[i] = (((hi[i] - lo[i]) / h).ceil() as usize).max(1);
            cell[i] = (hi[i] - lo[i]) / n[i] as f64;
        }
        let ncell = n[0] * n[1] * n[2];
        let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); ncell];
        let tol = 1e-9;
        for (k, (bl, bh)) in boxes.iter().enumerate() {
            let mut r0 = [0usize; 3];
            let mut r1 = [0usize; 3];
            for i in 0..d {
                r0[i] = (((bl[i] - tol - lo[i]) / cell[i]).floor().max(0.0) as usize).min(n[i] - 1);
                r1[i] = (((bh[i] + tol - lo[i]) / cell[i]).floor().max(0.0) as usize).min(n[i] - 1);
            }
            for a in r0[0]..=r1[0] {
                for b in r0[1]..=r1[1] {
                    for c in r0[2]..=r1[2] {
                        buckets[a + n[0] * (b + n[1] * c)].push(k as u32);
                    }
                }
            }
        }
        let mut start = Vec::with_capacity(ncell + 1);
        let mut items = Vec::new();
        start.push(0);
        for b in buckets {
            items.extend(b);
            start.push(items.len() as u32);
        }
        Locator { lo, cell, n, start, items }
    }

    fn candidates<T: Real>(&self, mesh: &SpatialMesh<T>, x: &Vec3<T>) -> &[u32] {
        let mut idx = [0usize; 3];
        for i in 0..mesh.dim {
            let c = ((x[i].as_f64() - self.lo[i]) / self.cell[i]).floor();
            idx[i] = (c.max(0.0) as usize).min(self.n[i] - 1);
        }
        let b = idx[0] + self.n[0] * (idx[1] + self.n[1] * idx[2]);
        &self.items[self.start[b] as usize..self.start[b + 1] as usize]
    }
}

/// Kuhn (Freudenthal) triangulation of a box with cubes of side `h0`: every
/// cube is split into `d!` simplices along monotone coordinate paths.
pub fn kuhn_box_mesh<T: Real>(domain: &BoxDomain<T>, h0: T) -> Result<SpatialMesh<T>> {
    let d = domain.dim;
    if !(2..=3).contains(&d) {
        return Err(Error::InvalidInput(format!("dimension {d} not supported")));
    }
    if !(h0 > T::zero()) {
        return Err(Error::InvalidInput("mesh width must be positive".into()));
    }
    let mut n = [1usize; 3];
    for i in 0..d {
        let cells = (domain.hi[i] - domain.lo[i]) / h0;
        let r = cells.round();
        if r < T::one() || (cells - r).abs() > T::lit(1e-9) * r {
            return Err(Error::InvalidInput(format!(
                "box side {} is not an integer multiple of h0 = {}",
                (domain.hi[i] - domain.lo[i]).as_f64(),
                h0.as_f64()
            )));
        }
        n[i] = r.to_usize().unwrap_or(1);
    }
    let nv = [n[0] + 1, n[1] + 1, if d == 3 { n[2] + 1 } else { 1 }];
    let vid = |a: usize, b: usize, c: usize| a + nv[0] * (b + nv[1] * c);
    let mut vertices = Vec::with_capacity(nv[0] * nv[1] * nv[2]);
    for c in 0..nv[2] {
        for b in 0..nv[1] {
            for a in 0..nv[0] {
                let mut x = [T::zero(); 3];
                let ijk = [a, b, c];
                for i in 0..d {
                    x[i] = domain.lo[i] + h0 * T::from_usize_lossy(ijk[i]);
                }
                vertices.push(x);
            }
        }
    }
    let perms: Vec<Vec<usize>> = if d == 2 {
        vec![vec![0, 1], vec![1, 0]]
    } else {
        vec![
            vec![0, 1, 2],
            vec![0, 2, 1],
            vec![1, 0, 2],
            vec![1, 2, 0],
            vec![2, 0, 1],
            vec![2, 1, 0],
        ]
    };
    let mut elements = Vec::new();
    for c in 0..n[2] {
        for b in 0..n[1] {
            for a in 0..n[0] {
                for p in &perms {
                    let mut cur = [a, b, c];
                    let mut e = [usize::MAX; 4];
                    e[0] = vid(cur[0], cur[1], cur[2]);
                    for (s, &axis) in p.iter().enumerate() {
                        cur[axis] += 1;
                        e[s + 1] = vid(cur[0], cur[1], cur[2]);
                    }
                    elements.push(e);
                }
            }
        }
    }
    let levels = vec![0; elements.len()];
    SpatialMesh::from_parts(domain.clone(), vertices, elements, levels)
}

/// Options of the interface-driven refinement.
#[derive(Clone, Copy, Debug)]
pub struct RefineOptions<T> {
    /// Elements are marked when the first-order distance estimate
    /// `|phi| / |grad phi|` at a vertex is below `band_factor * diam`.
    pub band_factor: T,
}

impl<T: Real> Default for RefineOptions<T> {
    fn default() -> Self {
        RefineOptions { band_factor: T::one() }
    }
}

/// Whether element `k` may meet the zero level during `[t0, t1]`, judged
/// from vertex samples at the slab ends and midpoint.
pub fn near_interface<T: Real>(
    mesh: &SpatialMesh<T>,
    k: usize,
    field: &dyn LevelSetField<T>,
    interval: (T, T),
    opts: &RefineOptions<T>,
) -> bool {
    let (t0, t1) = interval;
    let times = [t0, (t0 + t1) * T::lit(0.5), t1];
    let band = opts.band_factor * mesh.diameter(k);
    for &t in &times {
        let mut neg = false;
        let mut pos = false;
        for &v in mesh.element(k) {
            let x = &mesh.vertices[v];
            let phi = field.phi(x, t);
            if phi.is_nan() {
                continue;
            }
            if phi <= T::zero() {
                neg = true;
            }
            if phi >= T::zero() {
                pos = true;
            }
            let g = norm(&field.grad_phi(x, t));
            if g.is_finite() && g > T::zero() && phi.abs() < band * g {
                return true;
            }
        }
        if neg && pos {
            return true;
        }
    }
    false
}

/// Regularly refines, level by level, every element that may meet the zero
/// level of `field` during `interval` until those elements reach
/// `target_level`.
pub fn refine_near_interface<T: Real>(
    mesh: &SpatialMesh<T>,
    field: &dyn LevelSetField<T>,
    interval: (T, T),
    target_level: u32,
    opts: &RefineOptions<T>,
) -> SpatialMesh<T> {
    let mut current = mesh.clone();
    loop {
        let marked: Vec<bool> = (0..current.num_elements())
            .map(|k| current.levels[k] < target_level && near_interface(&current, k, field, interval, opts))
            .collect();
        if !marked.iter().any(|&m| m) {
            return current;
        }
        current = current.refine_elements(&marked);
    }
}

/// Uniform partition `0 = t_0 < ... < t_N = T` of the time interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimePartition<T> {
    pub t_final: T,
    pub slabs: usize,
}

impl<T: Real> TimePartition<T> {
    pub fn new(t_final: T, slabs: usize) -> Result<Self> {
        if slabs == 0 || !(t_final > T::zero()) {
            return Err(Error::InvalidInput("time partition needs T > 0 and N >= 1".into()));
        }
        Ok(TimePartition { t_final, slabs })
    }

    pub fn dt(&self) -> T {
        self.t_final / T::from_usize_lossy(self.slabs)
    }

    pub fn node(&self, n: usize) -> T {
        if n == self.slabs {
            self.t_final
        } else {
            self.t_final * T::from_usize_lossy(n) / T::from_usize_lossy(self.slabs)
        }
    }

    /// Interval `(t_{n-1}, t_n)` of slab `n` (1-based).
    pub fn interval(&self, n: usize) -> (T, T) {
        (self.node(n - 1), self.node(n))
    }
}
