//! The `scanbeam` command line.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::{debug, info};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::coupling::lambda_interval;
use crate::error::Error;
use crate::forward::{simulate_reduced, write_measurements, DataSource, FourierField, Noisy, Phantom, Simulator};
use crate::geometry::{cross3, ScanConfig, Vector};
use crate::graph2d::{build_component, component_report};
use crate::herglotz::CouplingCoefficient;
use crate::highdim::mechanism_at;
use crate::recon::{local_recovery, nonuniqueness_certificate, reconstruct_grid};
use crate::region::{region_map, RegionLabel};
use crate::sampling::{sigma2_point, upper_point};
use crate::selftest::run_selftest;
use crate::uniqueness3d::{det_search, local_system, Anchor};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_NOT_FOUND: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "scanbeam", version, about = "Fourier-space uniqueness maps and reconstruction for scanned-beam diffraction tomography")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Region map as CSV and PGM.
    Regions,
    /// Coupling-graph component through a point (JSON).
    Graph {
        #[arg(long, value_parser = parse_floats, allow_hyphen_values = true)]
        point: Floats,
    },
    /// Simulated reduced measurements (CSV).
    Simulate,
    /// Gridded reconstruction from simulated data (CSV and error report).
    Reconstruct,
    /// Verified kernel witness for a non-unique point (JSON).
    Certify {
        #[arg(long, value_parser = parse_floats, allow_hyphen_values = true)]
        point: Floats,
    },
    /// Local 4×4 system diagnostic in space; `--anchor η₁,η₂,η₃,σ₁,σ₂,σ₃` or a seeded random anchor.
    Check3d {
        #[arg(long, value_parser = parse_floats, allow_hyphen_values = true)]
        anchor: Option<Floats>,
    },
    /// Discriminating-pair diagnostic for `d ≥ 4`.
    Checkhd {
        #[arg(long)]
        dim: usize,
        #[arg(long, value_parser = parse_floats, allow_hyphen_values = true)]
        point: Option<Floats>,
        /// Number of seeded random points when no point is given.
        #[arg(long, default_value_t = 1)]
        samples: usize,
    },
    /// Seeded invariant suites.
    Selftest,
}

/// Comma-separated coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Floats(pub Vec<f64>);

fn parse_floats(s: &str) -> std::result::Result<Floats, String> {
    s.split([',', ';'])
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("cannot parse {t:?} as a number")))
        .collect::<std::result::Result<_, _>>()
        .map(Floats)
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Numerical(String),
    NotFound(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Numerical(_) => EXIT_NUMERICAL,
            Failure::NotFound(_) => EXIT_NOT_FOUND,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numerical(m) | Failure::NotFound(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let m = e.to_string();
        match e {
            Error::InvalidDirection { .. }
            | Error::InvalidSpherePoint { .. }
            | Error::DimensionMismatch { .. }
            | Error::InvalidConfig(_)
            | Error::InvalidSlice(_)
            | Error::UnsupportedDimension(_)
            | Error::Tabulated(_) => Failure::Config(m),
            Error::NotFound { .. } => Failure::NotFound(m),
            _ => Failure::Numerical(m),
        }
    }
}

fn io_err(p: &Path, e: std::io::Error) -> Failure {
    Failure::Config(format!("{}: {e}", p.display()))
}

type Outcome = std::result::Result<(), Failure>;

struct Ctx {
    run: RunConfig,
    cfg: ScanConfig,
    bc: CouplingCoefficient,
    out: PathBuf,
    seed: u64,
}

impl Ctx {
    fn create(&self, name: &str) -> std::result::Result<BufWriter<fs::File>, Failure> {
        let p = self.out.join(name);
        let f = fs::File::create(&p).map_err(|e| io_err(&p, e))?;
        info!("writing {}", p.display());
        Ok(BufWriter::new(f))
    }

    fn write_json<T: Serialize>(&self, name: &str, v: &T) -> Outcome {
        let s = serde_json::to_string_pretty(v).map_err(|e| Failure::Numerical(e.to_string()))?;
        let p = self.out.join(name);
        fs::write(&p, s + "\n").map_err(|e| io_err(&p, e))
    }

    fn phantom(&self) -> std::result::Result<&Phantom, Failure> {
        self.run.phantom.as_ref().ok_or_else(|| Failure::Config("this command needs a phantom".into()))
    }

    fn point(&self, xs: &[f64]) -> std::result::Result<Vector, Failure> {
        if xs.len() != self.cfg.d {
            return Err(Error::DimensionMismatch { expected: self.cfg.d, got: xs.len() }.into());
        }
        Ok(Vector::from_column_slice(xs))
    }
}

fn load(cli: &Cli) -> std::result::Result<Ctx, Failure> {
    let path = cli.config.as_ref().ok_or_else(|| Failure::Config("--config is required".into()))?;
    let run = RunConfig::from_path(path)?;
    let cfg = run.scan_config()?;
    let bc = run.coupling()?;
    fs::create_dir_all(&cli.out).map_err(|e| io_err(&cli.out, e))?;
    let seed = cli.seed.unwrap_or(run.seed);
    Ok(Ctx { run, cfg, bc, out: cli.out.clone(), seed })
}

fn print_summary(v: serde_json::Value) {
    println!("{}", serde_json::to_string(&v).expect("json value"));
}

fn regions(ctx: &Ctx) -> Outcome {
    let rule = (ctx.run.uniqueness_dim_rule && ctx.cfg.d >= 3).then_some(&ctx.bc);
    let map = region_map(&ctx.cfg, ctx.run.grid.n, ctx.run.grid.slice.as_ref(), rule)?;
    map.write_csv(ctx.create("regions.csv")?)?;
    map.write_pgm(ctx.create("regions.pgm")?)?;
    let counts: serde_json::Map<String, serde_json::Value> =
        RegionLabel::ALL.iter().map(|l| (format!("{l:?}"), json!(map.count(*l)))).collect();
    let near = map.near_boundary.iter().filter(|b| **b).count();
    print_summary(json!({ "command": "regions", "n": map.n, "counts": counts, "near_boundary": near }));
    Ok(())
}

fn graph(ctx: &Ctx, point: &[f64]) -> Outcome {
    let y = ctx.point(point)?;
    let comp = build_component(&ctx.cfg, &y)?;
    let report = component_report(&ctx.cfg, &comp, &ctx.bc)?;
    ctx.write_json("component.json", &report)?;
    print_summary(json!({ "command": "graph", "shape": report.shape, "case_number": report.case_number, "kernel_dim": report.kernel.len() }));
    Ok(())
}

fn measurement_pairs(ctx: &Ctx) -> std::result::Result<Vec<(Vector, Vector)>, Failure> {
    let n = ctx.run.grid.measurements;
    if ctx.cfg.d == 2 {
        return Ok(crate::forward::planar_measurement_grid(&ctx.cfg, n)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut out = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        let eta = upper_point(&mut rng, &ctx.cfg);
        let sigma = crate::sampling::sphere_point_where(&mut rng, &ctx.cfg, |s| s.dot(&ctx.cfg.omega) > ctx.cfg.tol)
            .ok_or_else(|| Failure::Numerical("could not sample beam directions".into()))?;
        out.push((eta, sigma));
    }
    Ok(out)
}

fn simulate(ctx: &Ctx) -> Outcome {
    let ph = ctx.phantom()?;
    let ms = measurement_pairs(ctx)?
        .iter()
        .map(|(e, s)| simulate_reduced(&ctx.cfg, &ctx.bc.density, ph, e, s))
        .collect::<crate::error::Result<Vec<_>>>()?;
    write_measurements(ctx.create("measurements.csv")?, &ms)?;
    print_summary(json!({ "command": "simulate", "measurements": ms.len() }));
    Ok(())
}

fn reconstruct(ctx: &Ctx) -> Outcome {
    let ph = ctx.phantom()?;
    let sim = Simulator { cfg: &ctx.cfg, density: &ctx.bc.density, field: ph };
    let result = if ctx.run.noise > 0.0 {
        let src = Noisy { inner: sim, level: ctx.run.noise, seed: ctx.seed };
        reconstruct_grid(&ctx.bc, &src, ctx.run.grid.n, ctx.run.grid.slice.as_ref(), Some(ph as &dyn FourierField))?
    } else {
        reconstruct_grid(&ctx.bc, &sim, ctx.run.grid.n, ctx.run.grid.slice.as_ref(), Some(ph as &dyn FourierField))?
    };
    result.write_csv(ctx.create("reconstruction.csv")?)?;
    let mut status: std::collections::BTreeMap<String, usize> = Default::default();
    for c in &result.cells {
        let s = c.result.status();
        let key = s.split(':').next().unwrap_or(&s).to_string();
        *status.entry(key).or_default() += 1;
    }
    let report = json!({
        "command": "reconstruct",
        "n": result.n,
        "recovered": result.count_values(),
        "status": status,
        "max_rel_err": result.max_rel_err,
        "noise": ctx.run.noise,
    });
    ctx.write_json("reconstruction_report.json", &report)?;
    print_summary(report);
    Ok(())
}

fn certify(ctx: &Ctx, point: &[f64]) -> Outcome {
    let y = ctx.point(point)?;
    let comp = build_component(&ctx.cfg, &y)?;
    let w = nonuniqueness_certificate(&ctx.bc, &comp, ctx.seed)?;
    let at_y = w.values[0];
    ctx.write_json("certificate.json", &w)?;
    print_summary(json!({
        "command": "certify",
        "shape": w.shape,
        "equation_residual": w.equation_residual,
        "forward_residual": w.forward_residual,
        "pairs_checked": w.pairs_checked,
        "witness_at_point": [at_y.re, at_y.im],
        "verified": true,
    }));
    Ok(())
}

fn random_anchor(ctx: &Ctx) -> std::result::Result<Anchor, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    for _ in 0..10_000 {
        let eta = upper_point(&mut rng, &ctx.cfg);
        let Some(sigma) = sigma2_point(&mut rng, &ctx.cfg) else { break };
        if let Ok(a) = Anchor::new(&ctx.cfg, eta, sigma) {
            return Ok(a);
        }
    }
    Err(Failure::Numerical("no admissible anchor found".into()))
}

fn check3d(ctx: &Ctx, anchor: Option<&[f64]>) -> Outcome {
    if ctx.cfg.d != 3 {
        return Err(Error::UnsupportedDimension(ctx.cfg.d).into());
    }
    let a = match anchor {
        Some(xs) if xs.len() == 6 => {
            Anchor::new(&ctx.cfg, Vector::from_column_slice(&xs[..3]), Vector::from_column_slice(&xs[3..]))?
        }
        Some(xs) => return Err(Failure::Config(format!("--anchor needs 6 numbers, got {}", xs.len()))),
        None => random_anchor(ctx)?,
    };
    let margin = ctx.bc.gradient_condition(&a.sigma)?;
    let independence = a.sigma.dot(&cross3(&ctx.cfg.nu, &a.y()));
    let radius = ctx.run.nbhd_radius();
    let det_tol = ctx.run.tolerances.det_tol;
    let mut report = json!({
        "command": "check3d",
        "eta": a.eta.as_slice(),
        "sigma": a.sigma.as_slice(),
        "y": a.y().as_slice(),
        "z": a.z(&ctx.cfg).as_slice(),
        "gradient_margin": margin.margin,
        "independence": independence,
        "nbhd_radius": radius,
        "det_tol": det_tol,
    });
    let found = match det_search(&ctx.bc, &a, radius, det_tol) {
        Ok(f) => f,
        Err(e @ Error::NotFound { .. }) => {
            report["status"] = json!("not_found");
            report["error"] = json!(e.to_string());
            ctx.write_json("check3d.json", &report)?;
            print_summary(report);
            return Err(e.into());
        }
        Err(e) => return Err(e.into()),
    };
    let ls = local_system(&ctx.bc, &a, &found.params, None)?;
    report["status"] = json!("found");
    report["params"] = json!(found.params);
    report["abs_det"] = json!(found.abs_det);
    report["det_cofactor"] = json!([ls.det_cofactor.re, ls.det_cofactor.im]);
    report["points"] = json!(ls.points.iter().map(|p| p.as_slice().to_vec()).collect::<Vec<_>>());
    if let Some(ph) = &ctx.run.phantom {
        let sim = Simulator { cfg: &ctx.cfg, density: &ctx.bc.density, field: ph };
        let r = local_recovery(&ctx.bc, &sim as &dyn DataSource, &a, radius, det_tol)?;
        let errs: Vec<f64> = r.points.iter().zip(&r.values).map(|(p, v)| (v - ph.value(p)).norm() / ph.value(p).norm()).collect();
        report["recovered"] = json!(r.values.iter().map(|v| [v.re, v.im]).collect::<Vec<_>>());
        report["rel_err"] = json!(errs);
    }
    ctx.write_json("check3d.json", &report)?;
    print_summary(report);
    Ok(())
}

fn checkhd(ctx: &Ctx, dim: usize, point: Option<&[f64]>, samples: usize) -> Outcome {
    if ctx.cfg.d != dim {
        return Err(Failure::Config(format!("--dim {dim} does not match the configured dimension {}", ctx.cfg.d)));
    }
    if dim < 4 {
        return Err(Error::UnsupportedDimension(dim).into());
    }
    let pair_tol = ctx.run.tolerances.pair_tol;
    let ys: Vec<Vector> = match point {
        Some(xs) => vec![ctx.point(xs)?],
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            let mut v = Vec::new();
            while v.len() < samples {
                let eta = upper_point(&mut rng, &ctx.cfg);
                let sigma = sigma2_point(&mut rng, &ctx.cfg).ok_or_else(|| Failure::Numerical("Σ₂ is empty".into()))?;
                let y = &eta - &sigma;
                if matches!(lambda_interval(&ctx.cfg, &y)?, Some(iv) if iv.len() > 1e-3 * ctx.cfg.k0) {
                    v.push(y);
                }
            }
            v
        }
    };
    let mut diags = Vec::new();
    let mut missing = None;
    for y in &ys {
        match mechanism_at(&ctx.bc, y, pair_tol) {
            Ok(d) => diags.push(json!(d)),
            Err(e @ Error::NotFound { .. }) => {
                diags.push(json!({ "y": y.as_slice(), "error": e.to_string() }));
                missing = Some(e);
            }
            Err(e) => return Err(e.into()),
        }
    }
    let report = json!({ "command": "checkhd", "d": dim, "pair_tol": pair_tol, "diagnostics": diags });
    ctx.write_json("checkhd.json", &report)?;
    print_summary(json!({ "command": "checkhd", "points": ys.len(), "all_found": missing.is_none() }));
    match missing {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn selftest(cli: &Cli) -> (Outcome, bool) {
    let seed = cli.seed.unwrap_or(0);
    let results = run_selftest(seed);
    let mut ok = true;
    for r in &results {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        ok &= r.passed;
    }
    if fs::create_dir_all(&cli.out).is_ok() {
        let p = cli.out.join("selftest.json");
        if let Err(e) = fs::write(&p, serde_json::to_string_pretty(&results).unwrap_or_default() + "\n") {
            return (Err(io_err(&p, e)), ok);
        }
    }
    (Ok(()), ok)
}

fn dispatch(cli: &Cli) -> Outcome {
    if let Command::Selftest = cli.command {
        let (r, ok) = selftest(cli);
        r?;
        return if ok { Ok(()) } else { Err(Failure::Numerical("selftest failed".into())) };
    }
    let ctx = load(cli)?;
    debug!("scan configuration {:?}", ctx.cfg);
    match &cli.command {
        Command::Regions => regions(&ctx),
        Command::Graph { point } => graph(&ctx, &point.0),
        Command::Simulate => simulate(&ctx),
        Command::Reconstruct => reconstruct(&ctx),
        Command::Certify { point } => certify(&ctx, &point.0),
        Command::Check3d { anchor } => check3d(&ctx, anchor.as_ref().map(|a| a.0.as_slice())),
        Command::Checkhd { dim, point, samples } => checkhd(&ctx, *dim, point.as_ref().map(|p| p.0.as_slice()), *samples),
        Command::Selftest => unreachable!(),
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match pool.install(|| dispatch(cli)) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

/// Parses `args` (including the program name) and runs them.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter("SCANBEAM_LOG")).try_init();
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}
