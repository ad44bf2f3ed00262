//! Helpers shared by the integration tests: small problems with closed-form
//! geometry and an independent tensor-Gauss oracle for single-prism assembly.
#![allow(dead_code)]

use std::io::Write;

use stfem::error::Result;
use stfem::geometry::Vec3;
use stfem::mesh::{BoxDomain, SpatialMesh};
use stfem::problems::{LevelSetField, ProblemDefinition, ProblemInfo};

/// Writes a criterion line straight to stderr so it shows without `--nocapture`.
pub fn report(criterion: u32, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "criterion {criterion}: {status} {detail}");
}

/// Gauss-Legendre nodes and weights on `[a, b]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (a + b) + 0.5 * (b - a) * x, 0.5 * (b - a) * w));
    }
    out
}

/// Wraps a problem and adds a constant to its initial data.
pub struct ShiftedInitial {
    pub inner: Box<dyn ProblemDefinition<f64>>,
    pub shift: f64,
}

impl LevelSetField<f64> for ShiftedInitial {
    fn phi(&self, x: &Vec3<f64>, t: f64) -> f64 {
        self.inner.phi(x, t)
    }
    fn grad_phi(&self, x: &Vec3<f64>, t: f64) -> Vec3<f64> {
        self.inner.grad_phi(x, t)
    }
}

impl ProblemDefinition<f64> for ShiftedInitial {
    fn info(&self) -> &ProblemInfo<f64> {
        self.inner.info()
    }
    fn dphi_dt(&self, x: &Vec3<f64>, t: f64) -> f64 {
        self.inner.dphi_dt(x, t)
    }
    fn wind(&self, x: &Vec3<f64>, t: f64) -> Result<Vec3<f64>> {
        self.inner.wind(x, t)
    }
    fn wind_jacobian(&self, x: &Vec3<f64>, t: f64) -> Option<[[f64; 3]; 3]> {
        self.inner.wind_jacobian(x, t)
    }
    fn source(&self, x: &Vec3<f64>, t: f64) -> f64 {
        self.inner.source(x, t)
    }
    fn has_source(&self) -> bool {
        self.inner.has_source()
    }
    fn initial(&self, x: &Vec3<f64>) -> f64 {
        self.shift + self.inner.initial(x)
    }
    fn poincare_constant(&self, t: f64) -> Option<f64> {
        self.inner.poincare_constant(t)
    }
    fn surface_area(&self, t: f64) -> Option<f64> {
        self.inner.surface_area(t)
    }
}

/// Straight line `x_2 = a + c t` moving with `w = (0, c)`, source `1 + x_1`.
pub struct MovingLine {
    pub info: ProblemInfo<f64>,
    pub a: f64,
    pub c: f64,
}

impl MovingLine {
    pub fn new(a: f64, c: f64, nu: f64) -> Self {
        MovingLine {
            info: ProblemInfo {
                name: "moving_line".into(),
                dim: 2,
                domain: BoxDomain::new(2, &[-1.0, -1.0], &[2.0, 2.0]),
                h0: 1.0,
                t_final: 1.0,
                nu,
                sigma_hint: None,
                cf_over_area_max: None,
                singular_times: Vec::new(),
                description: "moving line".into(),
            },
            a,
            c,
        }
    }

    pub fn height(&self, t: f64) -> f64 {
        self.a + self.c * t
    }
}

impl LevelSetField<f64> for MovingLine {
    fn phi(&self, x: &Vec3<f64>, t: f64) -> f64 {
        x[1] - self.height(t)
    }
    fn grad_phi(&self, _x: &Vec3<f64>, _t: f64) -> Vec3<f64> {
        [0.0, 1.0, 0.0]
    }
}

impl ProblemDefinition<f64> for MovingLine {
    fn info(&self) -> &ProblemInfo<f64> {
        &self.info
    }
    fn dphi_dt(&self, _x: &Vec3<f64>, _t: f64) -> f64 {
        -self.c
    }
    fn wind_jacobian(&self, _x: &Vec3<f64>, _t: f64) -> Option<[[f64; 3]; 3]> {
        Some([[0.0; 3]; 3])
    }
    fn source(&self, x: &Vec3<f64>, _t: f64) -> f64 {
        1.0 + x[0]
    }
    fn has_source(&self) -> bool {
        true
    }
    fn initial(&self, x: &Vec3<f64>) -> f64 {
        1.0 + x[0] * x[1]
    }
}

/// The triangle used by the single-prism oracle.
pub const ORACLE_TRIANGLE: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.2, 0.9]];

pub fn oracle_mesh() -> SpatialMesh<f64> {
    let v: Vec<Vec3<f64>> = ORACLE_TRIANGLE.iter().map(|p| [p[0], p[1], 0.0]).collect();
    SpatialMesh::from_parts(BoxDomain::new(2, &[-1.0, -1.0], &[2.0, 2.0]), v, vec![[0, 1, 2, 0]], vec![0])
        .expect("valid triangle")
}

/// Dense local slab system of the single triangle prism, in local basis
/// order (bottom vertices, then top vertices).
pub struct OracleSystem {
    pub matrix: [[f64; 6]; 6],
    pub rhs: [f64; 6],
    pub slice_means: Vec<[f64; 6]>,
    pub reference_mass_end: f64,
}

/// Brute-force tensor Gauss integration over `Gamma(t) x [t0, t1]` for the
/// moving line crossing edges `v0 v2` and `v1 v2` of [`ORACLE_TRIANGLE`].
pub fn oracle_system(
    line: &MovingLine,
    interval: (f64, f64),
    sigma: f64,
    mass_start: f64,
    prev: impl Fn(f64, f64) -> f64,
) -> OracleSystem {
    let [v0, v1, v2] = ORACLE_TRIANGLE;
    // barycentric coordinates from the affine map x = v0 + l1 (v1 - v0) + l2 (v2 - v0)
    let (e1, e2) = ([v1[0] - v0[0], v1[1] - v0[1]], [v2[0] - v0[0], v2[1] - v0[1]]);
    let det = e1[0] * e2[1] - e1[1] * e2[0];
    let inv = [[e2[1] / det, -e2[0] / det], [-e1[1] / det, e1[0] / det]];
    let grad_lam = [
        [-(inv[0][0] + inv[1][0]), -(inv[0][1] + inv[1][1])],
        [inv[0][0], inv[0][1]],
        [inv[1][0], inv[1][1]],
    ];
    let lam = |x: f64, y: f64| {
        let (dx, dy) = (x - v0[0], y - v0[1]);
        let l1 = inv[0][0] * dx + inv[0][1] * dy;
        let l2 = inv[1][0] * dx + inv[1][1] * dy;
        [1.0 - l1 - l2, l1, l2]
    };
    let (t0, t1) = interval;
    let dt = t1 - t0;
    let tb = |t: f64| [(t1 - t) / dt, (t - t0) / dt];
    let dtb = [-1.0 / dt, 1.0 / dt];
    // endpoints of Gamma(t) on the two crossed edges
    let segment = |t: f64| {
        let y = line.height(t);
        let s = (y - v0[1]) / (v2[1] - v0[1]);
        let p = [v0[0] + s * (v2[0] - v0[0]), y];
        let s = (y - v1[1]) / (v2[1] - v1[1]);
        let q = [v1[0] + s * (v2[0] - v1[0]), y];
        (p, q)
    };
    let space_rule = gauss_legendre(8, 0.0, 1.0);
    let slice = |t: f64, f: &mut dyn FnMut(f64, f64, f64)| {
        let (p, q) = segment(t);
        let len = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
        for &(s, w) in &space_rule {
            f(p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1]), w * len);
        }
    };
    let basis = |x: f64, y: f64, t: f64| {
        let l = lam(x, y);
        let tt = tb(t);
        let mut value = [0.0; 6];
        let mut grad = [[0.0; 2]; 6];
        let mut ddt = [0.0; 6];
        for lev in 0..2 {
            for i in 0..3 {
                let a = 3 * lev + i;
                value[a] = l[i] * tt[lev];
                grad[a] = [grad_lam[i][0] * tt[lev], grad_lam[i][1] * tt[lev]];
                ddt[a] = l[i] * dtb[lev];
            }
        }
        (value, grad, ddt)
    };
    let wind = [0.0, line.c];
    let nu = line.info.nu;
    let mut matrix = [[0.0; 6]; 6];
    let mut rhs = [0.0; 6];
    for &(t, wt) in &gauss_legendre(8, t0, t1) {
        slice(t, &mut |x, y, w| {
            let (v, g, d) = basis(x, y, t);
            let f = 1.0 + x;
            for i in 0..6 {
                for j in 0..6 {
                    let material = d[j] + wind[0] * g[j][0] + wind[1] * g[j][1];
                    // tangent of a horizontal line is e_1
                    let diffusion = nu * g[j][0] * g[i][0];
                    matrix[i][j] += wt * w * (material * v[i] + diffusion);
                }
                rhs[i] += wt * w * f * v[i];
            }
        });
    }
    slice(t0, &mut |x, y, w| {
        let (v, _, _) = basis(x, y, t0);
        let u = prev(x, y);
        for i in 0..6 {
            for j in 0..6 {
                matrix[i][j] += w * v[j] * v[i];
            }
            rhs[i] += w * u * v[i];
        }
    });
    let gauss_times = [
        (0.5 * (t0 + t1) - 0.5 * dt / 3f64.sqrt(), 0.5 * dt),
        (0.5 * (t0 + t1) + 0.5 * dt / 3f64.sqrt(), 0.5 * dt),
    ];
    let mut slice_means = Vec::new();
    let mut fbar = 0.0;
    for &(tk, tau) in &gauss_times {
        let mut g = [0.0; 6];
        slice(tk, &mut |x, y, w| {
            let (v, _, _) = basis(x, y, tk);
            for i in 0..6 {
                g[i] += w * v[i];
            }
            fbar += tau * w * (1.0 + x);
        });
        slice_means.push(g);
    }
    fbar /= dt;
    for (&(tk, tau), g) in gauss_times.iter().zip(&slice_means) {
        let m = mass_start + (tk - t0) * fbar;
        for i in 0..6 {
            for j in 0..6 {
                matrix[i][j] += sigma * tau * g[i] * g[j];
            }
            rhs[i] += sigma * tau * m * g[i];
        }
    }
    OracleSystem { matrix, rhs, slice_means, reference_mass_end: mass_start + dt * fbar }
}
