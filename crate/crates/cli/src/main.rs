//! Command-line front end: `run`, `convergence` and `describe`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stfem::cutgeom::slice_quadrature;
use stfem::driver::{convergence_study, march, RunReport};
use stfem::geometry::Vec3;
use stfem::io::{format_eoc_table, solution_snapshot, write_eoc_csv, write_json, write_mass_csv, write_surface_vtk};
use stfem::mesh::kuhn_box_mesh;
use stfem::problems::{builtin, check_condition_ass7, default_sigma, ProblemParams, BUILTIN_NAMES};
use stfem::{Error, Problem, Result, RunConfig};

#[derive(Parser)]
#[command(name = "stfem", version, about = "Space-time trace FEM for transport-diffusion on evolving surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// March one configuration over all time slabs.
    Run {
        config: PathBuf,
        /// Override a config key, e.g. `--set level=3`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Run levels `level_min..=level_max` and print the error table.
    Convergence {
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Print the data of a catalog problem.
    Describe {
        name: String,
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long)]
        t_final: Option<f64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, set } => run(&config, &set),
        Command::Convergence { config, set } => convergence(&config, &set),
        Command::Describe { name, nu, t_final } => describe(&name, nu, t_final),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if is_config_error(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn is_config_error(e: &Error) -> bool {
    match e {
        Error::Config(_) => true,
        Error::Slab { source, .. } => is_config_error(source),
        _ => false,
    }
}

fn load(config: &Path, set: &[String]) -> Result<(RunConfig, Problem)> {
    let cfg = RunConfig::from_file(config, set)?;
    let problem = cfg.build_problem::<f64>()?;
    Ok((cfg, problem))
}

fn prepare_output(cfg: &RunConfig) -> Result<()> {
    if cfg.vtk || cfg.csv || cfg.json {
        std::fs::create_dir_all(&cfg.output_dir)?;
    }
    Ok(())
}

fn run(config: &Path, set: &[String]) -> Result<()> {
    let (cfg, problem) = load(config, set)?;
    let opts = cfg.march_options(problem.info().t_final)?;
    let traj = march(problem.as_ref(), &opts)?;
    let report = RunReport::new(cfg.to_json(), problem.as_ref(), &traj)?;
    prepare_output(&cfg)?;
    let out = &cfg.output_dir;
    if cfg.json {
        write_json(&out.join("report.json"), &report)?;
    }
    if cfg.csv {
        write_mass_csv(&out.join("mass.csv"), &report.mass_trace)?;
    }
    if cfg.vtk {
        for rec in &traj.slabs {
            let surface = solution_snapshot(&rec.function, problem.as_ref());
            let title = format!("{} t = {}", problem.info().name, rec.function.interval.1);
            write_surface_vtk(&out.join(format!("surface_{:04}.vtk", rec.function.slab)), &surface, &title)?;
        }
    }

    let info = problem.info();
    println!("problem      {} (d = {}, nu = {})", info.name, info.dim, info.nu);
    println!("slabs        {} (dt = {:.4e}), level {}", traj.slabs.len(), traj.partition.dt(), cfg.level);
    println!("sigma        {:.6e}", report.sigma);
    println!("mass         I(0) = {:.10e}, I(T) = {:.10e}", traj.mass(0), traj.mass(traj.slabs.len()));
    if traj.mass(0).abs() > 1e-10 {
        println!("mass loss    {:.4e} (relative {:.4e})", report.mass_loss, report.relative_mass_loss);
    } else {
        println!("mass loss    {:.4e}", report.mass_loss);
    }
    println!("node residual {:.4e}", report.max_node_mass_residual);
    if let Some(e) = &report.errors {
        println!("errors       LinfL2 {:.4e}, L2H1 {:.4e}", e.linf_l2, e.l2_h1);
    }
    match &report.condition {
        Some(c) => println!("condition    min {:.4e} ({})", c.min_value, if c.satisfied { "satisfied" } else { "violated" }),
        None => println!("condition    unknown (no Poincare constant)"),
    }
    println!("time         {:.2} s", report.seconds);
    if cfg.vtk || cfg.csv || cfg.json {
        println!("output       {}", out.display());
    }
    Ok(())
}

fn convergence(config: &Path, set: &[String]) -> Result<()> {
    let (cfg, problem) = load(config, set)?;
    let levels = cfg.level_range();
    if levels.is_empty() {
        return Err(Error::Config(format!("empty level range {}..={}", levels.start(), levels.end())));
    }
    let opts = cfg.march_options(problem.info().t_final)?;
    let rows = convergence_study(problem.as_ref(), levels, &opts)?;
    print!("{}", format_eoc_table(&rows));
    if cfg.csv {
        prepare_output(&cfg)?;
        write_eoc_csv(&cfg.output_dir.join("eoc.csv"), &rows)?;
    }
    if cfg.json {
        prepare_output(&cfg)?;
        write_json(&cfg.output_dir.join("eoc.json"), &rows)?;
    }
    Ok(())
}

fn describe(name: &str, nu: Option<f64>, t_final: Option<f64>) -> Result<()> {
    if !BUILTIN_NAMES.contains(&name) {
        return Err(Error::Config(format!("unknown problem '{name}' (known: {})", BUILTIN_NAMES.join(", "))));
    }
    let problem = builtin::<f64>(name, &ProblemParams { nu, t_final })?;
    let info = problem.info();
    println!("name         {}", info.name);
    println!("description  {}", info.description);
    println!("dimension    {}", info.dim);
    let d = info.dim;
    println!("domain       [{:?}, {:?}]", &info.domain.lo[..d], &info.domain.hi[..d]);
    println!("h0           {}", info.h0);
    println!("t_final      {}", info.t_final);
    println!("nu           {}", info.nu);
    match default_sigma(problem.as_ref()) {
        Some(s) => println!("sigma        {s:.7} (ellipticity bound)"),
        None => match info.sigma_hint {
            Some(h) => println!("sigma        unknown bound, hint {h}"),
            None => println!("sigma        unknown"),
        },
    }
    match condition_on_samples(&problem)? {
        Some((min, ok)) => println!("condition    min {min:.4e} ({})", if ok { "satisfied" } else { "violated" }),
        None => println!("condition    unknown (no Poincare constant)"),
    }
    if info.singular_times.is_empty() {
        println!("singular     none");
    } else {
        let times: Vec<String> = info.singular_times.iter().map(|t| format!("{t:.3}")).collect();
        println!("singular     t = {}", times.join(", "));
    }
    Ok(())
}

/// Condition check on slice quadrature points of a level-2 mesh at nine times.
fn condition_on_samples(problem: &Problem) -> Result<Option<(f64, bool)>> {
    if problem.poincare_constant(0.0).is_none() {
        return Ok(None);
    }
    let info = problem.info();
    let mut mesh = kuhn_box_mesh(&info.domain, info.h0)?;
    for _ in 0..2 {
        mesh = mesh.refine_elements(&vec![true; mesh.num_elements()]);
    }
    let mut samples: Vec<(Vec3<f64>, f64)> = Vec::new();
    for i in 0..=8 {
        let t = info.t_final * i as f64 / 8.0;
        let q = slice_quadrature(&mesh, problem.as_ref(), t, 1);
        samples.extend(q.elements.iter().flat_map(|e| e.points.iter().map(move |p| (p.x, t))));
    }
    let cf = |t: f64| problem.poincare_constant(t).unwrap_or(0.0);
    let r = check_condition_ass7(problem.as_ref(), &cf, &samples)?;
    Ok(Some((r.min_value, r.satisfied)))
}
