use std::f64::consts::PI;

use stfem::config::{parse_override, RunConfig};
use stfem::driver::{EocRow, SigmaPolicy};
use stfem::io::{
    format_eoc_table, surface_snapshot, write_eoc_csv, write_json, write_mass_csv, write_mesh_vtk, write_surface_vtk,
    SurfaceMesh,
};
use stfem::linalg::{CsrMatrix, SolverMethod};
use stfem::mesh::{kuhn_box_mesh, BoxDomain};
use stfem::problems::{builtin, ProblemParams};
use stfem::Error;

/// Value following `key` on the first line that starts with it.
fn header_numbers(text: &str, key: &str) -> Vec<usize> {
    let line = text.lines().find(|l| l.starts_with(key)).unwrap_or_else(|| panic!("no {key}"));
    line[key.len()..].split_whitespace().filter_map(|s| s.parse().ok()).collect()
}

#[test]
fn surface_vtk_layout() {
    let dir = tempfile::tempdir().unwrap();
    let s = SurfaceMesh {
        points: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.5]],
        cells: vec![vec![0, 1, 2], vec![1, 3, 2]],
        values: vec![0.0, 1.0, 2.0, 3.0],
    };
    let path = dir.path().join("s.vtk");
    write_surface_vtk(&path, &s, "two triangles").unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# vtk DataFile Version 3.0");
    assert_eq!(lines[1], "two triangles");
    assert_eq!(lines[2], "ASCII");
    assert_eq!(header_numbers(&text, "POINTS"), vec![4]);
    assert_eq!(header_numbers(&text, "CELLS"), vec![2, 8]);
    assert_eq!(header_numbers(&text, "CELL_TYPES"), vec![2]);
    assert_eq!(header_numbers(&text, "POINT_DATA"), vec![4]);
    let types = lines.iter().position(|l| l.starts_with("CELL_TYPES")).unwrap();
    assert_eq!(&lines[types + 1..types + 3], &["5", "5"]);
    let data = lines.iter().position(|l| l.starts_with("LOOKUP_TABLE")).unwrap();
    let values: Vec<f64> = lines[data + 1..].iter().map(|l| l.parse().unwrap()).collect();
    assert_eq!(values, s.values);
}

#[test]
fn circle_snapshot_has_the_right_length_and_values() {
    let p = builtin::<f64>("stationary_circle", &ProblemParams::default()).unwrap();
    let mesh = kuhn_box_mesh(&p.info().domain, 0.125).unwrap();
    let s = surface_snapshot(&mesh, p.as_ref(), 0.0, |_, x| x[0]);
    assert!(s.cells.iter().all(|c| c.len() == 2));
    let length: f64 = s
        .cells
        .iter()
        .map(|c| {
            let (a, b) = (s.points[c[0]], s.points[c[1]]);
            ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
        })
        .sum();
    // inscribed polygon with chords of length <= h sqrt(2)
    assert!(length < 2.0 * PI && 2.0 * PI - length < 0.02, "{length}");
    for (p, v) in s.points.iter().zip(&s.values) {
        assert_eq!(*v, p[0]);
        assert!(((p[0] * p[0] + p[1] * p[1]).sqrt() - 1.0).abs() < 0.01);
    }
}

#[test]
fn mesh_vtk_layout() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = kuhn_box_mesh(&BoxDomain::<f64>::new(3, &[0.0; 3], &[1.0; 3]), 0.5).unwrap();
    let path = dir.path().join("m.vtk");
    write_mesh_vtk(&path, &mesh).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(header_numbers(&text, "POINTS"), vec![27]);
    assert_eq!(header_numbers(&text, "CELLS"), vec![48, 48 * 5]);
    assert_eq!(header_numbers(&text, "CELL_DATA"), vec![48]);
    assert!(text.lines().filter(|l| *l == "10").count() >= 48);
}

#[test]
fn mass_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let trace = vec![(0.0, 1.5), (0.25, 1.25), (0.5, -3.0e-12)];
    let path = dir.path().join("mass.csv");
    write_mass_csv(&path, &trace).unwrap();
    let mut r = csv::Reader::from_path(&path).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["n", "t", "mass"]);
    let rows: Vec<(usize, f64, f64)> = r.deserialize().map(|x| x.unwrap()).collect();
    assert_eq!(rows, vec![(0, 0.0, 1.5), (1, 0.25, 1.25), (2, 0.5, -3.0e-12)]);
}

fn rows() -> Vec<EocRow> {
    let row = |level: u32, e: f64, eoc: Option<f64>| EocRow {
        level,
        h: 0.5f64.powi(level as i32),
        dt: 0.125 * 0.5f64.powi(level as i32),
        slabs: 8 << level,
        max_dofs: 100 << level,
        linf_l2: e,
        l2_h1: 2.0 * e,
        mass_loss: 0.0,
        eoc_linf_l2: eoc,
        eoc_l2_h1: eoc,
    };
    vec![row(2, 1e-2, None), row(3, 2.5e-3, Some(2.0))]
}

#[test]
fn eoc_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let rows = rows();
    let path = dir.path().join("eoc.csv");
    write_eoc_csv(&path, &rows).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "level,h,dt,slabs,max_dofs,linf_l2,l2_h1,mass_loss,eoc_linf_l2,eoc_l2_h1"
    );
    assert_eq!(text.lines().count(), 3);

    let path = dir.path().join("eoc.json");
    write_json(&path, &rows).unwrap();
    let back: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back[1]["eoc_linf_l2"], 2.0);
    assert!(back[0]["eoc_linf_l2"].is_null());

    let two = format_eoc_table(&rows);
    assert_eq!(two.lines().count(), 3);
    assert!(two.lines().next().unwrap().contains("eoc"));
    assert!(two.lines().nth(2).unwrap().contains("2.00"));
    let one = format_eoc_table(&rows[..1]);
    assert_eq!(one.lines().count(), 2);
    assert!(!one.contains("eoc"));
}

#[test]
fn matrix_market_dump() {
    let a = CsrMatrix::from_triplets(3, &[(0, 0, 2.0), (0, 2, -1.0), (2, 1, 0.5), (0, 0, 1.0)]).unwrap();
    let mut buf = Vec::new();
    a.write_matrix_market(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('%')).collect();
    assert!(text.starts_with("%%MatrixMarket matrix coordinate real general"));
    assert_eq!(body[0].split_whitespace().collect::<Vec<_>>(), vec!["3", "3", "3"]);
    let mut entries: Vec<(usize, usize, f64)> = body[1..]
        .iter()
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect();
    entries.sort_by_key(|x| (x.0, x.1));
    assert_eq!(entries, vec![(1, 1, 3.0), (1, 3, -1.0), (3, 2, 0.5)]);
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "problem = \"shrinking_circle\"\nlevel = 3\nnu = 0.5\ndt = 0.1\nsolver = \"direct\"\n").unwrap();
    let cfg = RunConfig::from_file(&path, &["quad_order=4".into(), "sigma=zero".into()]).unwrap();
    let p = cfg.build_problem::<f64>().unwrap();
    assert_eq!(p.info().nu, 0.5);
    let opts = cfg.march_options(p.info().t_final).unwrap();
    assert_eq!(opts.level, 3);
    assert_eq!(opts.slabs, 10);
    assert_eq!(opts.quad_order, 4);
    assert_eq!(opts.sigma, SigmaPolicy::Zero);
    assert_eq!(opts.solver.method, SolverMethod::Direct);
    assert_eq!(cfg.level_range(), 3..=3);

    let json = cfg.to_json();
    assert_eq!(json["problem"], "shrinking_circle");
    assert_eq!(json["quad_order"], 4);

    let mismatch = RunConfig::from_toml_str("problem = \"shrinking_circle\"\ndim = 3", &[]).unwrap();
    assert!(matches!(mismatch.build_problem::<f64>(), Err(Error::Config(m)) if m.contains("dim")));
    assert!(matches!(
        RunConfig::from_file(&dir.path().join("absent.toml"), &[]),
        Err(Error::Config(_))
    ));
    for bad in ["slabs=4", "dt=0.5"] {
        let both = RunConfig::from_toml_str("problem = \"shrinking_circle\"\nslabs = 2\ndt = 0.5", &[bad.into()]);
        assert!(matches!(both, Err(Error::Config(_))));
    }
}

#[test]
fn override_values_are_typed() {
    assert_eq!(parse_override("level=3").unwrap(), ("level".into(), toml::Value::Integer(3)));
    assert_eq!(parse_override(" tol = 1e-8 ").unwrap(), ("tol".into(), toml::Value::Float(1e-8)));
    assert_eq!(parse_override("vtk=false").unwrap(), ("vtk".into(), toml::Value::Boolean(false)));
    assert_eq!(
        parse_override("output_dir=out/a b").unwrap(),
        ("output_dir".into(), toml::Value::String("out/a b".into()))
    );
    assert!(matches!(parse_override("level"), Err(Error::Config(_))));
    assert!(matches!(parse_override("=3"), Err(Error::Config(_))));
}
