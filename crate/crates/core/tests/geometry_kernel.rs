use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stfem::cutgeom::{
    cut_simplex, decompose_prism, exact_level_measure, monte_carlo_prism_measure, slice_measure, slice_pieces,
    st_cut_pieces, triangulate_polytope, SlabGeometry, StKey,
};
use stfem::geometry::simplex_measure;
use stfem::mesh::{kuhn_box_mesh, refine_near_interface, RefineOptions, SpatialMesh};
use stfem::problems::{builtin, ProblemDefinition, ProblemParams};
use stfem::quadrature::SimplexRule;

fn problem(name: &str) -> Box<dyn ProblemDefinition<f64>> {
    builtin(name, &ProblemParams::default()).unwrap()
}

fn mesh_for(p: &dyn ProblemDefinition<f64>, level: u32, interval: (f64, f64)) -> SpatialMesh<f64> {
    let coarse = kuhn_box_mesh(&p.info().domain, p.info().h0).unwrap();
    refine_near_interface(&coarse, p, interval, level, &RefineOptions::default())
}

#[test]
fn prism_decomposition_counts_and_volume() {
    for (name, count) in [("stationary_circle", 12), ("stationary_sphere", 32)] {
        let p = problem(name);
        let m = kuhn_box_mesh(&p.info().domain, 2.0).unwrap();
        for k in 0..m.num_elements() {
            let parts = decompose_prism(&m, k, (0.2, 0.45));
            assert_eq!(parts.len(), count);
            let v: f64 = parts.iter().map(|s| s.measure()).sum();
            assert!((v - 0.25 * m.volume(k)).abs() < 1e-13 * v);
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

#[test]
fn simplex_rules_integrate_barycentric_monomials() {
    for dim in 1..=4 {
        for degree in 1..=6 {
            let rule = SimplexRule::<f64>::new(dim, degree);
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            // all exponents with total degree <= degree on lambda_0, lambda_1, lambda_2
            for a in 0..=degree {
                for b in 0..=degree - a {
                    for c in 0..=(degree - a - b) {
                        if c > 0 && dim < 2 {
                            continue;
                        }
                        let q: f64 = rule
                            .bary
                            .iter()
                            .zip(&rule.weights)
                            .map(|(l, w)| w * l[0].powi(a as i32) * l[1].powi(b as i32) * l[2].powi(c as i32))
                            .sum();
                        let exact = factorial(dim) * factorial(a) * factorial(b) * factorial(c)
                            / factorial(dim + a + b + c);
                        assert!((q - exact).abs() < 1e-13, "dim {dim} degree {degree} ({a},{b},{c})");
                    }
                }
            }
        }
    }
}

fn reference_pentatope() -> Vec<[f64; 4]> {
    let mut pts = vec![[0.0; 4]];
    for i in 0..4 {
        let mut e = [0.0; 4];
        e[i] = 1.0;
        pts.push(e);
    }
    pts
}

#[test]
fn cut_sign_patterns() {
    let pts = reference_pentatope();
    let keys: Vec<usize> = (0..5).collect();

    let poly = cut_simplex(&pts, &keys, &[-1.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
    assert_eq!((poly.n_neg, poly.n_pos, poly.points.len()), (1, 4, 4));
    for (p, (a, b)) in poly.points.iter().zip(&poly.keys) {
        assert_eq!(*a, 0);
        let mut e = [0.0; 4];
        e[b - 1] = 0.5;
        assert_eq!(*p, e);
    }
    let pieces = triangulate_polytope(&poly, 1.0);
    assert_eq!(pieces.len(), 1);

    let poly = cut_simplex(&pts, &keys, &[-1.0, -1.0, 1.0, 1.0, 1.0]).unwrap();
    assert_eq!((poly.n_neg, poly.n_pos, poly.points.len()), (2, 3, 6));
    assert_eq!(triangulate_polytope(&poly, 1.0).len(), 3);

    assert!(cut_simplex(&pts, &keys, &[1.0; 5]).is_none());
    assert!(cut_simplex(&pts, &keys, &[-1.0; 5]).is_none());

    // the triangulation covers the whole cut for distinct values
    for values in [[-1.0, -2.0, 1.0, 3.0, 2.0], [-0.5, 1.5, 0.7, -0.2, -1.1], [2.0, -1.0, 1.0, 0.5, 3.0]] {
        let poly = cut_simplex(&pts, &keys, &values).unwrap();
        let total: f64 = triangulate_polytope(&poly, 1.0).iter().map(|p| simplex_measure(&p.points)).sum();
        let exact = exact_level_measure(&pts, &values);
        assert!((total - exact).abs() < 1e-13 * exact, "{values:?}: {total} vs {exact}");
    }

    // 2-2 split of a tetrahedron is a quadrilateral in two triangles
    let tet = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let poly = cut_simplex(&tet, &[0, 1, 2, 3], &[-1.0, -0.5, 2.0, 1.0]).unwrap();
    assert_eq!(triangulate_polytope(&poly, 1.0).len(), 2);
}

/// Facets of the cut pieces by their global keys; every facet must be shared
/// by exactly two pieces unless it lies on a time level of the slab.
fn assert_watertight(m: &SpatialMesh<f64>, p: &dyn ProblemDefinition<f64>, interval: (f64, f64)) {
    let d = m.dim;
    let mut facets: HashMap<Vec<(StKey, StKey)>, usize> = HashMap::new();
    let mut pieces = 0;
    for k in 0..m.num_elements() {
        for piece in st_cut_pieces(m, k, p, interval) {
            pieces += 1;
            for skip in 0..=d {
                let mut f: Vec<(StKey, StKey)> =
                    (0..=d).filter(|&i| i != skip).map(|i| piece.keys[i]).collect();
                f.sort();
                *facets.entry(f).or_default() += 1;
            }
        }
    }
    assert!(pieces > 0);
    let on_level = |f: &[(StKey, StKey)]| {
        let l = f[0].0 .1;
        f.iter().all(|(a, b)| a.1 == l && b.1 == l)
    };
    for (f, n) in &facets {
        if on_level(f) {
            assert_eq!(*n, 1, "time-level facet {f:?}");
        } else {
            assert_eq!(*n, 2, "facet {f:?} shared by {n} pieces");
        }
    }
}

#[test]
fn space_time_surface_is_watertight() {
    let p = problem("shrinking_circle");
    let interval = (0.1, 0.2);
    assert_watertight(&mesh_for(p.as_ref(), 3, interval), p.as_ref(), interval);
    let p = problem("colliding_circles");
    let interval = (0.15, 0.17);
    assert_watertight(&mesh_for(p.as_ref(), 3, interval), p.as_ref(), interval);
    // a level set off the mesh vertices, so no piece degenerates
    let p = problem("colliding_spheres");
    let interval = (0.5, 0.6);
    assert_watertight(&mesh_for(p.as_ref(), 1, interval), p.as_ref(), interval);
}

#[test]
fn monte_carlo_agrees_with_cut_pieces() {
    let p = problem("shrinking_circle");
    let interval = (0.0, 0.5);
    let m = mesh_for(p.as_ref(), 1, interval);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut checked = 0;
    for k in 0..m.num_elements() {
        let pieces: f64 = st_cut_pieces(&m, k, p.as_ref(), interval).iter().map(|q| simplex_measure(&q.points)).sum();
        let est = monte_carlo_prism_measure(&m, k, p.as_ref(), interval, 100_000, &mut rng);
        if pieces == 0.0 {
            assert_eq!(est.estimate, 0.0);
            continue;
        }
        checked += 1;
        assert!(
            (pieces - est.estimate).abs() <= 4.0 * est.std_error + 1e-12,
            "element {k}: {pieces} vs {} +- {}",
            est.estimate,
            est.std_error
        );
        if checked == 6 {
            break;
        }
    }
    assert_eq!(checked, 6);
}

#[test]
fn measure_correction_factor() {
    let p = problem("stationary_circle");
    let m = mesh_for(p.as_ref(), 3, (0.0, 0.1));
    for k in 0..m.num_elements() {
        for piece in st_cut_pieces(&m, k, p.as_ref(), (0.0, 0.1)) {
            assert!((piece.correction - 1.0).abs() < 1e-12);
        }
    }
    let p = problem("shrinking_circle");
    let expected = 1.0 / (1.0f64 + 0.25 * 0.25).sqrt();
    let m = mesh_for(p.as_ref(), 5, (0.0, 0.1));
    let mut n = 0;
    for k in 0..m.num_elements() {
        for piece in st_cut_pieces(&m, k, p.as_ref(), (0.0, 0.1)) {
            assert!((piece.correction - expected).abs() < 2e-3, "{}", piece.correction);
            n += 1;
        }
    }
    assert!(n > 0);
}

#[test]
fn space_time_weight_converges_to_surface_time_integral() {
    let p = problem("shrinking_circle");
    let interval = (0.2, 0.4);
    // int 2 pi (1 - t/4) dt
    let exact = 2.0 * std::f64::consts::PI * (0.2 - (0.4f64.powi(2) - 0.2f64.powi(2)) / 8.0);
    let errs: Vec<f64> = [3, 4, 5]
        .iter()
        .map(|&l| {
            let m = mesh_for(p.as_ref(), l, interval);
            let g = SlabGeometry::build(&m, p.as_ref(), interval, 2).unwrap();
            (g.st_total_weight() - exact).abs() / exact
        })
        .collect();
    assert!(errs[2] < 2e-3, "{errs:?}");
    assert!(errs[0] / errs[1] > 3.0 && errs[1] / errs[2] > 3.0, "{errs:?}");
}

#[test]
fn bottom_of_space_time_surface_is_the_slice() {
    for (name, level) in [("shrinking_circle", 3), ("stationary_sphere", 1)] {
        let p = problem(name);
        let interval = (0.3, 0.45);
        let m = mesh_for(p.as_ref(), level, interval);
        let d = m.dim;
        for (lev, t) in [(0u8, interval.0), (1u8, interval.1)] {
            let mut trace = 0.0;
            for k in 0..m.num_elements() {
                for piece in st_cut_pieces(&m, k, p.as_ref(), interval) {
                    for skip in 0..=d {
                        let idx: Vec<usize> = (0..=d).filter(|&i| i != skip).collect();
                        if idx.iter().all(|&i| piece.keys[i].0 .1 == lev && piece.keys[i].1 .1 == lev) {
                            let pts: Vec<[f64; 3]> =
                                idx.iter().map(|&i| [piece.points[i][0], piece.points[i][1], piece.points[i][2]]).collect();
                            let pts: Vec<[f64; 3]> = if d == 2 {
                                pts.iter().map(|q| [q[0], q[1], 0.0]).collect()
                            } else {
                                pts
                            };
                            trace += simplex_measure(&pts);
                        }
                    }
                }
            }
            let slice = slice_measure(&m, p.as_ref(), t);
            assert!((trace - slice).abs() < 1e-12 * slice, "{name} level {lev}: {trace} vs {slice}");
        }
    }
}

#[test]
fn interface_through_mesh_vertices() {
    // the unit circle passes through the vertices (+-1, 0) and (0, +-1)
    let p = problem("stationary_circle");
    let m = mesh_for(p.as_ref(), 2, (0.0, 0.0));
    let mut total = 0.0;
    for k in 0..m.num_elements() {
        for (pts, _) in slice_pieces(&m, k, p.as_ref(), 0.0) {
            let len = simplex_measure(&pts);
            assert!(len.is_finite() && len > 0.0);
            total += len;
        }
    }
    assert!((total - 2.0 * std::f64::consts::PI).abs() < 0.05);
    assert!((total - slice_measure(&m, p.as_ref(), 0.0)).abs() < 1e-13);
}
