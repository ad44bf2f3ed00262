//! Slab-by-slab time marching, mass and error diagnostics, convergence studies.

use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::assembly::{assemble_slab, symmetric_part_min_eig, AssemblyStats, MassReference, SlabParams};
use crate::cutgeom::{slice_measure, SlabGeometry};
use crate::error::{Error, Result};
use crate::fespace::{hat_gradients, FEFunctionSlab, SlabDofMap};
use crate::geometry::{dot, Vec3};
use crate::linalg::{dot as vdot, solve, SolveStats, SolverOptions};
use crate::mesh::{kuhn_box_mesh, refine_near_interface, RefineOptions, SpatialMesh, TimePartition};
use crate::problems::{
    check_condition_ass7, default_sigma, default_sigma_measured, ConditionReport, ProblemDefinition,
};
use crate::scalar::Real;

/// Choice of the stabilization parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "policy", content = "value")]
pub enum SigmaPolicy {
    /// Lower bound from the ellipticity theorem (falls back to the problem's hint).
    Theorem1,
    Explicit(f64),
    Zero,
}

/// Per-slab ellipticity witness settings.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EllipticityCheck {
    pub random_vectors: usize,
    pub seed: u64,
    /// Dense eigenvalue computation is skipped above this many dofs.
    pub max_dofs: usize,
}

/// Options of [`march`].
#[derive(Clone, Debug, Serialize)]
pub struct MarchOptions {
    pub level: u32,
    /// Coarse mesh width; the problem default when `None`.
    pub h0: Option<f64>,
    pub slabs: usize,
    pub sigma: SigmaPolicy,
    pub solver: SolverOptions,
    pub quad_order: usize,
    pub band_factor: f64,
    /// Worker threads for element loops (0: all cores).
    pub threads: usize,
    pub keep_geometry: bool,
    pub ellipticity: Option<EllipticityCheck>,
    pub matrix_dump: Option<PathBuf>,
}

impl Default for MarchOptions {
    fn default() -> Self {
        MarchOptions {
            level: 2,
            h0: None,
            slabs: 8,
            sigma: SigmaPolicy::Theorem1,
            solver: SolverOptions::default(),
            quad_order: 2,
            band_factor: 1.0,
            threads: 1,
            keep_geometry: true,
            ellipticity: None,
            matrix_dump: None,
        }
    }
}

/// Ellipticity witness of one slab.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EllipticityWitness {
    pub min_eigenvalue: Option<f64>,
    /// Smallest `u^T B u / u^T u` over the random vectors.
    pub min_rayleigh: f64,
    pub samples: usize,
}

/// Everything kept from one solved slab.
#[derive(Clone, Debug)]
pub struct SlabRecord<T> {
    pub function: FEFunctionSlab<T>,
    pub geometry: Option<SlabGeometry<T>>,
    pub assembly: AssemblyStats,
    pub solve: SolveStats,
    /// `ubar_(h,-)(t_n)`.
    pub mass_end: T,
    /// `ubar_(h,+)(t_(n-1))`.
    pub mass_start_plus: T,
    /// `(t_k, tau_k, ubar_h(t_k))` at the Gauss times.
    pub gauss_means: Vec<(T, T, T)>,
    /// Reference mass `m(t_(n-1))` and `m(t_n)`.
    pub reference: (T, T),
    pub ellipticity: Option<EllipticityWitness>,
}

/// Result of [`march`].
#[derive(Clone, Debug)]
pub struct SolutionTrajectory<T> {
    pub partition: TimePartition<T>,
    pub sigma: T,
    /// `I(t_0)`: `u0` integrated over `Gamma_h(0)`.
    pub initial_mass: T,
    pub slabs: Vec<SlabRecord<T>>,
    pub seconds: f64,
}

impl<T: Real> SolutionTrajectory<T> {
    /// `I(t_n)`, `n = 0..=N`.
    pub fn mass(&self, n: usize) -> T {
        if n == 0 {
            self.initial_mass
        } else {
            self.slabs[n - 1].mass_end
        }
    }

    pub fn masses(&self) -> Vec<T> {
        (0..=self.slabs.len()).map(|n| self.mass(n)).collect()
    }

    /// `I(t_0) - I(t_N)`.
    pub fn mass_loss(&self) -> T {
        self.mass(0) - self.mass(self.slabs.len())
    }

    pub fn functions(&self) -> Vec<&FEFunctionSlab<T>> {
        self.slabs.iter().map(|s| &s.function).collect()
    }
}

/// Builds the mesh of a slab: interface refinement to `level`, then extra
/// refinement of any cut element still below `level`.
pub fn build_slab_mesh<T: Real>(
    coarse: &SpatialMesh<T>,
    problem: &dyn ProblemDefinition<T>,
    interval: (T, T),
    level: u32,
    opts: &MarchOptions,
) -> Result<(SpatialMesh<T>, SlabGeometry<T>)> {
    let ropts = RefineOptions { band_factor: T::lit(opts.band_factor) };
    let mut mesh = refine_near_interface(coarse, problem, interval, level, &ropts);
    loop {
        let geo = SlabGeometry::build(&mesh, problem, interval, opts.quad_order)?;
        let marked: Vec<bool> = {
            let mut m = vec![false; mesh.num_elements()];
            for &k in &geo.cut_elements {
                m[k] = mesh.levels[k] < level;
            }
            m
        };
        if !marked.iter().any(|&b| b) {
            return Ok((mesh, geo));
        }
        mesh = mesh.refine_elements(&marked);
    }
}

/// Resolves the stabilization parameter.
pub fn resolve_sigma<T: Real>(
    problem: &dyn ProblemDefinition<T>,
    policy: SigmaPolicy,
    coarse: &SpatialMesh<T>,
    partition: &TimePartition<T>,
    opts: &MarchOptions,
) -> Result<T> {
    match policy {
        SigmaPolicy::Zero => Ok(T::zero()),
        SigmaPolicy::Explicit(s) if s >= 0.0 && s.is_finite() => Ok(T::lit(s)),
        SigmaPolicy::Explicit(s) => Err(Error::Config(format!("sigma must be >= 0, got {s}"))),
        SigmaPolicy::Theorem1 => {
            if let Some(s) = default_sigma(problem) {
                return Ok(s);
            }
            if problem.poincare_constant(T::zero()).is_some() {
                let ropts = RefineOptions { band_factor: T::lit(opts.band_factor) };
                let mut areas = Vec::new();
                for n in 0..=partition.slabs {
                    let t = partition.node(n);
                    let mesh = refine_near_interface(coarse, problem, (t, t), opts.level, &ropts);
                    areas.push((t, slice_measure(&mesh, problem, t)));
                }
                if let Some(s) = default_sigma_measured(problem, &areas) {
                    return Ok(s);
                }
            }
            problem.info().sigma_hint.ok_or_else(|| {
                Error::Config(format!(
                    "sigma policy 'theorem1' needs c_F(t), which is unknown for '{}'; set sigma explicitly",
                    problem.info().name
                ))
            })
        }
    }
}

/// Solves the problem slab by slab.
pub fn march<T: Real>(problem: &dyn ProblemDefinition<T>, opts: &MarchOptions) -> Result<SolutionTrajectory<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    pool.install(|| march_inner(problem, opts))
}

fn march_inner<T: Real>(problem: &dyn ProblemDefinition<T>, opts: &MarchOptions) -> Result<SolutionTrajectory<T>> {
    let start = Instant::now();
    let info = problem.info();
    if opts.level < 1 {
        return Err(Error::InvalidInput("refinement level must be >= 1".into()));
    }
    let h0 = opts.h0.map(T::lit).unwrap_or(info.h0);
    let coarse = kuhn_box_mesh(&info.domain, h0)?;
    let partition = TimePartition::new(info.t_final, opts.slabs)?;
    let sigma = resolve_sigma(problem, opts.sigma, &coarse, &partition, opts)?;
    let mut slabs: Vec<SlabRecord<T>> = Vec::with_capacity(opts.slabs);
    let mut initial_mass = T::zero();
    let mut reference = T::zero();
    for n in 1..=opts.slabs {
        let interval = partition.interval(n);
        let record = (|| -> Result<SlabRecord<T>> {
            let (mesh, geo) = build_slab_mesh(&coarse, problem, interval, opts.level, opts)?;
            let dofs = SlabDofMap::build(&mesh, &geo.cut_elements)?;
            if n == 1 {
                initial_mass = geo.bottom.integrate(|x| problem.initial(x));
                reference = initial_mass;
            }
            let prev_fn = slabs.last().map(|s| &s.function);
            let prev = |x: &Vec3<T>| -> Result<T> {
                match prev_fn {
                    None => Ok(problem.initial(x)),
                    Some(f) => f.value(x, interval.0),
                }
            };
            let params = SlabParams { sigma, mass: MassReference { start: reference } };
            let system = assemble_slab(&mesh, &dofs, &geo, problem, &params, &prev)?;
            if let Some(dir) = &opts.matrix_dump {
                std::fs::create_dir_all(dir)?;
                let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join(format!("slab_{n}.mtx")))?);
                system.matrix.sparse.write_matrix_market(&mut f)?;
            }
            let ellipticity = opts.ellipticity.map(|c| {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(c.seed.wrapping_add(n as u64));
                let nd = dofs.num_dofs();
                let mut min_ray = f64::INFINITY;
                for _ in 0..c.random_vectors {
                    let u: Vec<T> = (0..nd).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect();
                    let q = system.matrix.quadratic_form(&u).map(|q| q / vdot(&u, &u)).unwrap_or(T::nan());
                    min_ray = min_ray.min(q.as_f64());
                }
                EllipticityWitness {
                    min_eigenvalue: (nd <= c.max_dofs).then(|| symmetric_part_min_eig(&system.matrix).as_f64()),
                    min_rayleigh: min_ray,
                    samples: c.random_vectors,
                }
            });
            let (coeffs, solve_stats) = solve(&system.matrix, &system.rhs, &opts.solver)?;
            let gauss_means = geo
                .gauss
                .iter()
                .zip(&system.slice_means)
                .map(|((t, tau, _), g)| (*t, *tau, vdot(g, &coeffs)))
                .collect();
            let function = FEFunctionSlab::new(n, interval, mesh, dofs, coeffs);
            let mass_end = slice_integral(&function, &geo.top, interval.1, |_, u| u);
            let mass_start_plus = slice_integral(&function, &geo.bottom, interval.0, |_, u| u);
            let record = SlabRecord {
                function,
                geometry: opts.keep_geometry.then_some(geo),
                assembly: system.stats.clone(),
                solve: solve_stats,
                mass_end,
                mass_start_plus,
                gauss_means,
                reference: (reference, system.reference_mass_end),
                ellipticity,
            };
            reference = system.reference_mass_end;
            Ok(record)
        })()
        .map_err(|e| e.in_slab(n))?;
        log::info!(
            "slab {n}/{}: {} dofs, {} cut elements, {} {} iterations, mass {:.12e}",
            opts.slabs,
            record.assembly.dofs,
            record.assembly.cut_elements,
            record.solve.method,
            record.solve.iterations,
            record.mass_end.as_f64()
        );
        slabs.push(record);
    }
    Ok(SolutionTrajectory { partition, sigma, initial_mass, slabs, seconds: start.elapsed().as_secs_f64() })
}

/// `sum w g(x, u_h(x, t))` over a slice of the slab's own reconstruction.
fn slice_integral<T: Real>(
    f: &FEFunctionSlab<T>,
    slice: &crate::cutgeom::SliceQuadrature<T>,
    t: T,
    g: impl Fn(&Vec3<T>, T) -> T,
) -> T {
    let mut s = T::zero();
    for e in &slice.elements {
        for p in &e.points {
            s += p.weight * g(&p.x, f.value_in(e.element, &p.x, t));
        }
    }
    s
}

/// `I(t_n)`.
pub fn mass<T: Real>(traj: &SolutionTrajectory<T>, n: usize) -> T {
    traj.mass(n)
}

/// Error norms against an exact solution.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct ErrorNorms {
    /// `max_n |u - u_(h,-)|_(L2(Gamma_h(t_n)))`.
    pub linf_l2: f64,
    /// `(int int |P grad (u - u_h)|^2)^(1/2)` over the space-time surface.
    pub l2_h1: f64,
    /// `(int int (u - u_h)^2)^(1/2)`.
    pub l2_l2: f64,
    pub triple: TripleNormParts,
}

/// Components of the mesh-dependent energy norm of `u_h`.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct TripleNormParts {
    /// `sum_n |[u_h]^(n-1)|^2_(t_(n-1))`, with `u_h(., 0-) = u0`.
    pub jumps_sq: f64,
    /// `|u_(h,-)^N|^2_(t_N)`.
    pub final_sq: f64,
    /// `int int |grad_Gamma u_h|^2`.
    pub gradient_sq: f64,
}

/// Evaluates error norms; needs the geometry kept by [`march`].
pub fn error_norms<T: Real>(traj: &SolutionTrajectory<T>, problem: &dyn ProblemDefinition<T>) -> Result<ErrorNorms> {
    let mut out = ErrorNorms::default();
    let mut h1 = T::zero();
    let mut l2 = T::zero();
    let mut grad_sq = T::zero();
    let mut jumps = T::zero();
    let mut linf = T::zero();
    let mut final_sq = T::zero();
    for (idx, rec) in traj.slabs.iter().enumerate() {
        let geo = rec
            .geometry
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("trajectory was computed without geometry".into()))?;
        let f = &rec.function;
        let (t0, t1) = f.interval;
        for q in &geo.st {
            let k = q.element;
            let grads = hat_gradients(&f.mesh, k);
            for p in &q.points {
                let uh = f.value_in(k, &p.x, p.t);
                let gh = f.gradient_in(k, p.t, &grads);
                let n = &p.normal;
                let ghn = dot(&gh, n);
                let gh_t = [gh[0] - ghn * n[0], gh[1] - ghn * n[1], gh[2] - ghn * n[2]];
                grad_sq += p.weight * dot(&gh_t, &gh_t);
                if let (Some(u), Some(gu)) = (problem.exact(&p.x, p.t), problem.exact_gradient(&p.x, p.t)) {
                    let e = [gu[0] - gh[0], gu[1] - gh[1], gu[2] - gh[2]];
                    let en = dot(&e, n);
                    let et = [e[0] - en * n[0], e[1] - en * n[1], e[2] - en * n[2]];
                    h1 += p.weight * dot(&et, &et);
                    l2 += p.weight * (u - uh) * (u - uh);
                }
            }
        }
        // jump at t_(n-1) against the previous slab (or u0)
        for e in &geo.bottom.elements {
            for p in &e.points {
                let plus = f.value_in(e.element, &p.x, t0);
                let minus = if idx == 0 { problem.initial(&p.x) } else { traj.slabs[idx - 1].function.value(&p.x, t0)? };
                jumps += p.weight * (plus - minus) * (plus - minus);
            }
        }
        let mut top_err = T::zero();
        let mut top_sq = T::zero();
        for e in &geo.top.elements {
            for p in &e.points {
                let uh = f.value_in(e.element, &p.x, t1);
                top_sq += p.weight * uh * uh;
                if let Some(u) = problem.exact(&p.x, t1) {
                    top_err += p.weight * (u - uh) * (u - uh);
                }
            }
        }
        linf = linf.max(top_err.sqrt());
        if idx + 1 == traj.slabs.len() {
            final_sq = top_sq;
        }
    }
    out.linf_l2 = linf.as_f64();
    out.l2_h1 = h1.sqrt().as_f64();
    out.l2_l2 = l2.sqrt().as_f64();
    out.triple = TripleNormParts { jumps_sq: jumps.as_f64(), final_sq: final_sq.as_f64(), gradient_sq: grad_sq.as_f64() };
    Ok(out)
}

/// Residuals of the discrete mass identities per slab.
#[derive(Clone, Debug, Default, Serialize)]
pub struct MassCheck {
    /// `|ubar_(h,-)(t_n) - m(t_n)|`.
    pub node_identity_residuals: Vec<f64>,
    /// `|int_(I_n) ubar_h dt - int_(I_n) m dt|` with two-point Gauss in time.
    pub slab_integral_residuals: Vec<f64>,
}

impl MassCheck {
    pub fn max_node_residual(&self) -> f64 {
        self.node_identity_residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_slab_residual(&self) -> f64 {
        self.slab_integral_residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Checks `ubar_(h,-)(t_n) = m(t_n)` and `int_(I_n) ubar_h = int_(I_n) m`,
/// `m` being the reference mass (the initial mass when `f = 0`).
pub fn mass_conservation_check<T: Real>(traj: &SolutionTrajectory<T>) -> MassCheck {
    let mut out = MassCheck::default();
    for rec in &traj.slabs {
        let (m0, m1) = rec.reference;
        out.node_identity_residuals.push((rec.mass_end - m1).abs().as_f64());
        let mut integral = T::zero();
        let mut reference = T::zero();
        let (t0, t1) = rec.function.interval;
        for &(t, tau, mean) in &rec.gauss_means {
            integral += tau * mean;
            reference += tau * (m0 + (m1 - m0) * (t - t0) / (t1 - t0));
        }
        out.slab_integral_residuals.push((integral - reference).abs().as_f64());
    }
    out
}

/// Condition check over the space-time quadrature points of the trajectory;
/// `None` when `c_F` is unknown.
pub fn condition_report<T: Real>(
    traj: &SolutionTrajectory<T>,
    problem: &dyn ProblemDefinition<T>,
) -> Result<Option<ConditionReport>> {
    if problem.poincare_constant(T::zero()).is_none() {
        return Ok(None);
    }
    let samples: Vec<(Vec3<T>, T)> = traj
        .slabs
        .iter()
        .filter_map(|r| r.geometry.as_ref())
        .flat_map(|g| g.st.iter().flat_map(|q| q.points.iter().map(|p| (p.x, p.t))))
        .collect();
    let cf = |t: T| problem.poincare_constant(t).unwrap_or_else(T::zero);
    check_condition_ass7(problem, &cf, &samples).map(Some)
}

/// One row of a convergence table.
#[derive(Clone, Debug, Serialize)]
pub struct EocRow {
    pub level: u32,
    pub h: f64,
    pub dt: f64,
    pub slabs: usize,
    pub max_dofs: usize,
    pub linf_l2: f64,
    pub l2_h1: f64,
    pub mass_loss: f64,
    pub eoc_linf_l2: Option<f64>,
    pub eoc_l2_h1: Option<f64>,
}

/// Runs levels `l0..=l1`, doubling the slab count with every level
/// (`dt ~ h`), starting from `base.slabs` at `l0`.
pub fn convergence_study<T: Real>(
    problem: &dyn ProblemDefinition<T>,
    levels: std::ops::RangeInclusive<u32>,
    base: &MarchOptions,
) -> Result<Vec<EocRow>> {
    let (l0, l1) = (*levels.start(), *levels.end());
    if l1 < l0 {
        return Err(Error::InvalidInput("empty level range".into()));
    }
    let mut rows: Vec<EocRow> = Vec::new();
    let h0 = base.h0.unwrap_or(problem.info().h0.as_f64());
    for l in l0..=l1 {
        let mut opts = base.clone();
        opts.level = l;
        opts.slabs = base.slabs << (l - l0);
        opts.keep_geometry = true;
        let traj = march(problem, &opts)?;
        let norms = error_norms(&traj, problem)?;
        let mut row = EocRow {
            level: l,
            h: h0 * 0.5f64.powi(l as i32),
            dt: traj.partition.dt().as_f64(),
            slabs: opts.slabs,
            max_dofs: traj.slabs.iter().map(|s| s.assembly.dofs).max().unwrap_or(0),
            linf_l2: norms.linf_l2,
            l2_h1: norms.l2_h1,
            mass_loss: traj.mass_loss().as_f64(),
            eoc_linf_l2: None,
            eoc_l2_h1: None,
        };
        if let Some(prev) = rows.last() {
            row.eoc_linf_l2 = Some(eoc(prev.linf_l2, row.linf_l2));
            row.eoc_l2_h1 = Some(eoc(prev.l2_h1, row.l2_h1));
        }
        log::info!("level {l}: LinfL2 {:.4e}, L2H1 {:.4e}", row.linf_l2, row.l2_h1);
        rows.push(row);
    }
    Ok(rows)
}

/// `log2(coarse / fine)`.
pub fn eoc(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// Per-slab summary written to the run report.
#[derive(Clone, Debug, Serialize)]
pub struct SlabSummary {
    pub slab: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub elements: usize,
    pub max_level: u32,
    pub assembly: AssemblyStats,
    pub solver: SolveStats,
    pub mass_end: f64,
    pub ellipticity: Option<EllipticityWitness>,
}

/// Serializable summary of a run.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub config: serde_json::Value,
    pub problem: String,
    pub dim: usize,
    pub sigma: f64,
    pub mass_trace: Vec<(f64, f64)>,
    pub mass_loss: f64,
    pub relative_mass_loss: f64,
    pub mass_check: MassCheck,
    pub max_node_mass_residual: f64,
    pub errors: Option<ErrorNorms>,
    pub condition: Option<ConditionReport>,
    pub slabs: Vec<SlabSummary>,
    pub seconds: f64,
}

impl RunReport {
    pub fn new<T: Real>(
        config: serde_json::Value,
        problem: &dyn ProblemDefinition<T>,
        traj: &SolutionTrajectory<T>,
    ) -> Result<Self> {
        let masses = traj.masses();
        let mass_trace = masses
            .iter()
            .enumerate()
            .map(|(n, m)| (traj.partition.node(n).as_f64(), m.as_f64()))
            .collect();
        let errors = if problem.exact(&[T::zero(); 3], T::zero()).is_some() && traj.slabs.iter().all(|s| s.geometry.is_some()) {
            Some(error_norms(traj, problem)?)
        } else {
            None
        };
        let mass_check = mass_conservation_check(traj);
        let i0 = traj.mass(0).as_f64();
        let loss = traj.mass_loss().as_f64();
        Ok(RunReport {
            config,
            problem: problem.info().name.clone(),
            dim: problem.info().dim,
            sigma: traj.sigma.as_f64(),
            mass_trace,
            mass_loss: loss,
            relative_mass_loss: if i0 != 0.0 { loss / i0 } else { f64::NAN },
            max_node_mass_residual: mass_check.max_node_residual(),
            mass_check,
            errors,
            condition: condition_report(traj, problem)?,
            slabs: traj
                .slabs
                .iter()
                .map(|s| SlabSummary {
                    slab: s.function.slab,
                    t_start: s.function.interval.0.as_f64(),
                    t_end: s.function.interval.1.as_f64(),
                    elements: s.function.mesh.num_elements(),
                    max_level: s.function.mesh.max_level(),
                    assembly: s.assembly.clone(),
                    solver: s.solve.clone(),
                    mass_end: s.mass_end.as_f64(),
                    ellipticity: s.ellipticity,
                })
                .collect(),
            seconds: traj.seconds,
        })
    }
}
