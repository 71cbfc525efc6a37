//! Pointwise recovery of `φ` from reduced measurements, gridded reconstruction
//! and kernel witnesses for non-unique components.

use std::io::Write;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coupling::{planar_representations, sample_arcs, sigma1_representation, spatial_arcs, tilde_y_pair};
use crate::error::{Error, Result};
use crate::forward::{simulate_reduced, Blob, DataSource, FourierField, PointField, SumField};
use crate::geometry::{cross3, SigmaClass, Vector};
use crate::graph2d::{component_system, Component, Shape, VERTEX_MERGE_REL};
use crate::herglotz::{CouplingCoefficient, CVector};
use crate::region::{cell_center, label_point, RegionLabel, Slice, DIM_RULE_PROBES};
use crate::sampling::{sphere_point_where, upper_point};
use crate::uniqueness3d::{det_search, local_system, Anchor, Params, DEFAULT_DET_TOL, DEFAULT_NBHD_RADIUS_REL};

/// Residual bound for a kernel witness.
pub const WITNESS_TOL: f64 = 1e-10;
/// Number of measurement pairs compared by the forward check.
pub const WITNESS_PAIRS: usize = 100;

/// Result of pointwise recovery.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Recovered {
    /// `φ(at) = value`; `at = y` except in space, where it is `y + w`.
    Value { value: Complex64, at: Vector },
    /// The component kernel has this dimension.
    NonUnique(usize),
    Degenerate,
    Outside,
    /// The local search found no usable system.
    Unresolved(String),
}

impl Recovered {
    pub fn status(&self) -> String {
        match self {
            Recovered::Value { .. } => "value".into(),
            Recovered::NonUnique(k) => format!("nonunique:{k}"),
            Recovered::Degenerate => "degenerate".into(),
            Recovered::Outside => "outside".into(),
            Recovered::Unresolved(_) => "unresolved".into(),
        }
    }

    pub fn value(&self) -> Option<Complex64> {
        match self {
            Recovered::Value { value, .. } => Some(*value),
            _ => None,
        }
    }
}

fn direct<S: DataSource + ?Sized>(bc: &CouplingCoefficient, src: &S, y: &Vector) -> Result<Option<Complex64>> {
    let Some(rep) = sigma1_representation(bc.cfg(), y)? else { return Ok(None) };
    let a = bc.density.eval_raw(&rep.sigma);
    Ok(Some(src.measure(&rep.eta, &rep.sigma)? / a))
}

fn planar_point<S: DataSource + ?Sized>(bc: &CouplingCoefficient, src: &S, y: &Vector) -> Result<Recovered> {
    let cfg = bc.cfg();
    let (label, _) = label_point(cfg, y, None)?;
    Ok(match label {
        RegionLabel::Outside => Recovered::Outside,
        RegionLabel::Degenerate => Recovered::Degenerate,
        RegionLabel::Y1Only | RegionLabel::Y1AndY2 => match direct(bc, src, y)? {
            Some(value) => Recovered::Value { value, at: y.clone() },
            None => Recovered::Degenerate,
        },
        RegionLabel::TildeY => {
            let (eta, sigma) = tilde_y_pair(cfg, y)?.ok_or(Error::DegenerateVertex)?;
            let yp = &eta - &sigma;
            let Some(gp) = direct(bc, src, &yp)? else {
                return Err(Error::ClassificationContradiction("partner of a 𝒴̃ point is not directly measured".into()));
            };
            let hs = cfg.reflect(&sigma);
            let m = src.measure(&eta, &sigma)?;
            let value = m / bc.density.eval_raw(&hs) - bc.eval_sigma(&sigma) * gp;
            Recovered::Value { value, at: y.clone() }
        }
        RegionLabel::Y2NonUnique => {
            let comp = crate::graph2d::build_component(cfg, y)?;
            Recovered::NonUnique(component_system(&comp, bc, None).kernel.len())
        }
    })
}

/// A `σ ∈ M_y` off the plane of `y` and `ν` with the largest gradient margin.
pub fn spatial_anchor(bc: &CouplingCoefficient, y: &Vector) -> Result<Option<Anchor>> {
    let cfg = bc.cfg();
    let Some((frame, arcs)) = spatial_arcs(cfg, y, false)? else { return Ok(None) };
    let ny = cross3(&cfg.nu, y);
    let mut best: Option<(f64, Vector)> = None;
    for (_, sigma) in sample_arcs(&frame, &arcs, DIM_RULE_PROBES) {
        if sigma.dot(&ny).abs() <= cfg.tol {
            continue;
        }
        let g = bc.gradient_condition(&sigma)?;
        if g.holds && best.as_ref().is_none_or(|(m, _)| g.margin > *m) {
            best = Some((g.margin, sigma));
        }
    }
    match best {
        Some((_, sigma)) => match Anchor::new(cfg, &sigma + y, sigma) {
            Ok(a) => Ok(Some(a)),
            Err(Error::DegenerateAnchor | Error::OutsideDomain) => Ok(None),
            Err(e) => Err(e),
        },
        None => Ok(None),
    }
}

/// Values at the four points of the local system, solved with measured data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalRecovery {
    pub points: [Vector; 4],
    pub values: [Complex64; 4],
    pub params: Params,
    pub abs_det: f64,
}

/// Runs the determinant search at `anchor` and solves `B g = m̂/a(H_νσ̂)`.
pub fn local_recovery<S: DataSource + ?Sized>(
    bc: &CouplingCoefficient,
    src: &S,
    anchor: &Anchor,
    radius: f64,
    det_tol: f64,
) -> Result<LocalRecovery> {
    let cfg = bc.cfg();
    let found = det_search(bc, anchor, radius, det_tol)?;
    let mut ls = local_system(bc, anchor, &found.params, None)?;
    let rhs = ls
        .hats
        .iter()
        .map(|h| Ok(src.measure(&h.eta_hat, &h.sigma_hat)? / bc.density.eval_raw(&cfg.reflect(&h.sigma_hat))))
        .collect::<Result<Vec<_>>>()?;
    ls.rhs = Some(CVector::from_vec(rhs));
    let g = ls.solve()?;
    Ok(LocalRecovery {
        points: ls.points.clone(),
        values: [g[0], g[1], g[2], g[3]],
        params: found.params,
        abs_det: found.abs_det,
    })
}

fn spatial_point<S: DataSource + ?Sized>(bc: &CouplingCoefficient, src: &S, y: &Vector) -> Result<Recovered> {
    let cfg = bc.cfg();
    let (label, _) = label_point(cfg, y, Some(bc))?;
    Ok(match label {
        RegionLabel::Outside => Recovered::Outside,
        RegionLabel::Degenerate => Recovered::Degenerate,
        RegionLabel::Y2NonUnique => Recovered::NonUnique(1),
        RegionLabel::Y1Only | RegionLabel::Y1AndY2 => match direct(bc, src, y)? {
            Some(value) => Recovered::Value { value, at: y.clone() },
            None => Recovered::Degenerate,
        },
        RegionLabel::TildeY => {
            let Some(anchor) = spatial_anchor(bc, y)? else { return Ok(Recovered::Degenerate) };
            match local_recovery(bc, src, &anchor, DEFAULT_NBHD_RADIUS_REL * cfg.k0, DEFAULT_DET_TOL) {
                Ok(r) => Recovered::Value { value: r.values[0], at: r.points[0].clone() },
                Err(
                    e @ (Error::NotFound { .. }
                    | Error::NewtonDiverged { .. }
                    | Error::LeftDomain
                    | Error::DegenerateAnchor),
                ) => Recovered::Unresolved(e.to_string()),
                Err(e) => return Err(e),
            }
        }
    })
}

/// Recovers `φ(y)` from the data, or reports why it is not determined.
pub fn reconstruct_point<S: DataSource + ?Sized>(bc: &CouplingCoefficient, src: &S, y: &Vector) -> Result<Recovered> {
    let cfg = bc.cfg();
    cfg.check_dim(y)?;
    match cfg.d {
        2 => planar_point(bc, src, y),
        3 => spatial_point(bc, src, y),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldCell {
    pub point: Vector,
    pub result: Recovered,
}

/// Gridded reconstruction; `cells` are row-major with `ix` fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourierFieldRecon {
    pub n: usize,
    pub k0: f64,
    pub cells: Vec<FieldCell>,
    /// Largest `|φ_rec - φ|/|φ|` over recovered cells, when a reference is given.
    pub max_rel_err: Option<f64>,
}

impl FourierFieldRecon {
    pub fn count_values(&self) -> usize {
        self.cells.iter().filter(|c| c.result.value().is_some()).count()
    }

    /// CSV `x,y[,z],re,im,status`; coordinates are those of the recovered point.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let io = |e: csv::Error| Error::InvalidConfig(format!("csv write failed: {e}"));
        let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        let d = self.cells.first().map_or(2, |c| c.point.len());
        let mut hdr = vec!["x", "y", "z"][..d].to_vec();
        hdr.extend(["re", "im", "status"]);
        wr.write_record(&hdr).map_err(io)?;
        for c in &self.cells {
            let p = match &c.result {
                Recovered::Value { at, .. } => at,
                _ => &c.point,
            };
            let mut rec: Vec<String> = p.iter().map(|x| x.to_string()).collect();
            match c.result.value() {
                Some(v) => rec.extend([v.re.to_string(), v.im.to_string()]),
                None => rec.extend([String::new(), String::new()]),
            }
            rec.push(c.result.status());
            wr.write_record(&rec).map_err(io)?;
        }
        wr.flush().map_err(|e| Error::InvalidConfig(format!("csv write failed: {e}")))
    }
}

/// Reconstructs on the `n × n` cell centres of `[-2k0, 2k0]²` (or a slice in space).
///
/// Rows run in parallel; the result does not depend on the thread count.
pub fn reconstruct_grid<S: DataSource + ?Sized>(
    bc: &CouplingCoefficient,
    src: &S,
    n: usize,
    slice: Option<&Slice>,
    truth: Option<&dyn FourierField>,
) -> Result<FourierFieldRecon> {
    let cfg = bc.cfg();
    if n < 2 {
        return Err(Error::InvalidConfig(format!("grid size must be at least 2, got {n}")));
    }
    match (cfg.d, slice) {
        (2, Some(s)) => s.validate(2)?,
        (2, None) => {}
        (3, Some(s)) => s.validate(3)?,
        (3, None) => return Err(Error::InvalidSlice("a 3D reconstruction needs a slice".into())),
        (d, _) => return Err(Error::UnsupportedDimension(d)),
    }
    let rows: Vec<Vec<FieldCell>> = (0..n)
        .into_par_iter()
        .map(|iy| {
            let yc = cell_center(cfg.k0, n, iy);
            (0..n)
                .map(|ix| {
                    let xc = cell_center(cfg.k0, n, ix);
                    let point = match slice {
                        Some(s) => s.embed(xc, yc),
                        None => Vector::from_column_slice(&[xc, yc]),
                    };
                    let result = reconstruct_point(bc, src, &point)?;
                    Ok(FieldCell { point, result })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<FieldCell> = rows.into_iter().flatten().collect();
    let max_rel_err = truth.map(|t| {
        cells
            .iter()
            .filter_map(|c| match &c.result {
                Recovered::Value { value, at } => {
                    let want = t.value(at);
                    Some((value - want).norm() / want.norm().max(f64::MIN_POSITIVE))
                }
                _ => None,
            })
            .fold(0.0, f64::max)
    });
    Ok(FourierFieldRecon { n, k0: cfg.k0, cells, max_rel_err })
}

/// A nonzero `g` supported on a component with vanishing data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelWitness {
    pub shape: Shape,
    pub support: Vec<Vec<f64>>,
    pub values: Vec<Complex64>,
    /// Largest scaled residual of the measurement equations touching the support.
    pub equation_residual: f64,
    pub equations_checked: usize,
    /// Largest difference between the data of `φ` and of `φ + g`.
    pub forward_residual: f64,
    pub pairs_checked: usize,
}

/// Witness values in vertex order; the closed form `(1, -b(σ), -b(-η), b(σ)b(-η))`
/// on a cycle, the normalised kernel vector otherwise.
fn witness_values(bc: &CouplingCoefficient, comp: &Component) -> Result<Vec<Complex64>> {
    let sys = component_system(comp, bc, None);
    let Some(k) = sys.kernel.first() else {
        return Err(Error::CertificateInvalid { residual: f64::INFINITY });
    };
    if comp.shape == Shape::FourVertexCycle {
        let bs = bc.eval_sigma(&comp.anchor_sigma);
        let be = bc.eval(&(-&comp.anchor_eta))?;
        return Ok(vec![Complex64::new(1.0, 0.0), -bs, -be, bs * be]);
    }
    let pivot = if k[0].norm() > 1e-12 {
        k[0]
    } else {
        *k.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).expect("nonempty kernel")
    };
    Ok(k.iter().map(|z| z / pivot).collect())
}

/// Builds and verifies a kernel witness on a component without directly measured vertices.
///
/// Every measurement pair whose equation involves a support point is checked, and
/// the data of `φ` and `φ + g` are compared on those pairs and random ones, up to
/// [`WITNESS_PAIRS`] in total.
pub fn nonuniqueness_certificate(bc: &CouplingCoefficient, comp: &Component, seed: u64) -> Result<KernelWitness> {
    let cfg = bc.cfg();
    let values = witness_values(bc, comp)?;
    let g = PointField { points: comp.vertices.clone(), values: values.clone(), tol: VERTEX_MERGE_REL * cfg.k0 };
    let gmax = values.iter().map(|v| v.norm()).fold(0.0, f64::max);

    let mut pairs: Vec<(Vector, Vector)> = Vec::new();
    let mut equation_residual = 0.0f64;
    for v in &comp.vertices {
        for rep in planar_representations(cfg, v)? {
            let a1 = bc.density.eval_raw(&rep.sigma);
            let (res, scale) = match rep.class {
                SigmaClass::Sigma1 => ((a1 * g.value(v)).norm(), a1.norm()),
                SigmaClass::Sigma2 => {
                    let hs = cfg.reflect(&rep.sigma);
                    let a2 = bc.density.eval_raw(&hs);
                    ((a1 * g.value(v) + a2 * g.value(&(&rep.eta - &hs))).norm(), a1.norm().max(a2.norm()))
                }
                SigmaClass::NotInSOmega => continue,
            };
            equation_residual = equation_residual.max(res / (gmax * scale).max(f64::MIN_POSITIVE));
            pairs.push((rep.eta, rep.sigma));
        }
    }
    let equations_checked = pairs.len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while pairs.len() < WITNESS_PAIRS {
        let eta = upper_point(&mut rng, cfg);
        let Some(sigma) = sphere_point_where(&mut rng, cfg, |s| cfg.sigma_class_raw(s) != SigmaClass::NotInSOmega) else {
            break;
        };
        pairs.push((eta, sigma));
    }
    let phi = Blob::centered(cfg.d, 1.0);
    let perturbed = SumField { a: &phi, b: &g };
    let mut forward_residual = 0.0f64;
    for (eta, sigma) in &pairs {
        let m0 = simulate_reduced(cfg, &bc.density, &phi, eta, sigma)?.value;
        let m1 = simulate_reduced(cfg, &bc.density, &perturbed, eta, sigma)?.value;
        forward_residual = forward_residual.max((m1 - m0).norm() / gmax.max(1.0));
    }
    let residual = equation_residual.max(forward_residual);
    if residual.is_nan() || residual > WITNESS_TOL {
        return Err(Error::CertificateInvalid { residual });
    }
    Ok(KernelWitness {
        shape: comp.shape,
        support: comp.vertices.iter().map(|v| v.iter().copied().collect()).collect(),
        values,
        equation_residual,
        equations_checked,
        forward_residual,
        pairs_checked: pairs.len(),
    })
}
