//! The `d ≥ 4` mechanism: `C_{y,λ}` is a `(d-3)`-sphere on which `b` varies,
//! so two of its points give an invertible 2×2 system for `(φ(y), φ(y + 2λν))`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::coupling::{lambda_interval, sample_arcs, sigma2_constraints};
use crate::error::{Error, Result};
use crate::geometry::{arcs_in_halfspaces, orthonormal_complement, ArcSet, CircleFrame, HalfSpace, ScanConfig, Vector};
use crate::herglotz::CouplingCoefficient;

pub const MAX_DIM: usize = 6;
pub const DEFAULT_PAIR_TOL: f64 = 1e-8;
/// Probe count at `d = 4`; each further dimension multiplies it by 4.
pub const BASE_PROBES: usize = 256;
const EMPTINESS_PROBES: usize = 64;
const PROBE_SEED: u64 = 0x5eed_c5e7;

/// `C_{y,λ} = {σ : ‖σ‖ = k0, ‖σ + y‖ = k0, ⟨σ,ν⟩ = λ}` with the open conditions
/// `σ ∈ Σ₂`, `σ + y ∈ S_{e_d}` kept as constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct CSphere {
    pub center: Vector,
    pub radius: f64,
    /// Orthonormal basis of `span{y, ν}^⊥`.
    pub frame: Vec<Vector>,
    pub lambda: f64,
    pub constraints: Vec<HalfSpace>,
    /// Admissible arcs when the sphere is a circle (`d = 4`).
    pub arcs: Option<ArcSet>,
}

impl CSphere {
    /// `center + radius·Σ uᵢ frameᵢ` for a unit coefficient vector `u`.
    pub fn point(&self, u: &[f64]) -> Vector {
        let mut p = self.center.clone();
        for (f, c) in self.frame.iter().zip(u) {
            p += f * (c * self.radius);
        }
        p
    }

    pub fn circle_frame(&self) -> Option<CircleFrame> {
        (self.frame.len() == 2)
            .then(|| CircleFrame::circle(self.center.clone(), self.radius, self.frame[0].clone(), self.frame[1].clone()))
    }

    pub fn admissible(&self, s: &Vector) -> bool {
        self.constraints.iter().all(|h| h.contains(s))
    }

    /// Deterministic admissible probe points.
    pub fn probes(&self, n: usize) -> Vec<Vector> {
        if let (Some(frame), Some(arcs)) = (self.circle_frame(), &self.arcs) {
            return sample_arcs(&frame, arcs, n).into_iter().map(|(_, p)| p).collect();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
        let k = self.frame.len();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let mut u: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
            let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nu == 0.0 {
                continue;
            }
            u.iter_mut().for_each(|x| *x /= nu);
            let p = self.point(&u);
            if self.admissible(&p) {
                out.push(p);
            }
        }
        out
    }
}

pub fn probe_count(d: usize) -> usize {
    BASE_PROBES * 4usize.pow(d.saturating_sub(4) as u32)
}

fn check_hd(cfg: &ScanConfig) -> Result<()> {
    if cfg.d < 4 || cfg.d > MAX_DIM {
        return Err(Error::UnsupportedDimension(cfg.d));
    }
    Ok(())
}

/// `C_{y,λ}` as a sphere, or `None` when it has no admissible point.
///
/// `y ∈ ℝν` also gives `None`: the two hyperplanes are then parallel.
pub fn c_sphere(cfg: &ScanConfig, y: &Vector, lambda: f64) -> Result<Option<CSphere>> {
    check_hd(cfg)?;
    cfg.check_dim(y)?;
    let nu = &cfg.nu;
    let yy = y.dot(y);
    let yn = y.dot(nu);
    let det = yy - yn * yn;
    if det <= cfg.tol * cfg.tol || yy <= cfg.tol * cfg.tol {
        return Ok(None);
    }
    // p = a·y + b·ν with ⟨p,y⟩ = -‖y‖²/2 and ⟨p,ν⟩ = λ
    let rhs0 = -0.5 * yy;
    let a = (rhs0 - yn * lambda) / det;
    let b = (yy * lambda - yn * rhs0) / det;
    let center = y * a + nu * b;
    let r2 = cfg.k0 * cfg.k0 - center.norm_squared();
    if r2 <= 0.0 {
        return Ok(None);
    }
    let radius = r2.sqrt();
    let frame = orthonormal_complement(&[y.clone(), nu.clone()], cfg.d);
    let constraints = sigma2_constraints(cfg, y);
    let mut cs = CSphere { center, radius, frame, lambda, constraints, arcs: None };
    if let Some(circle) = cs.circle_frame() {
        let arcs = arcs_in_halfspaces(&circle, &cs.constraints)?;
        if arcs.is_empty() {
            return Ok(None);
        }
        cs.arcs = Some(arcs);
    } else if cs.probes(EMPTINESS_PROBES).is_empty() {
        return Ok(None);
    }
    Ok(Some(cs))
}

/// Two points of `C_{y,λ}` with well separated `b` values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscriminatingPair {
    pub sigma: Vector,
    pub sigma_hat: Vector,
    pub gap: f64,
}

/// Searches probe pairs for the largest `|b(σ) - b(σ̂)|`.
pub fn find_discriminating_pair(
    bc: &CouplingCoefficient,
    y: &Vector,
    lambda: f64,
    probes: usize,
    pair_tol: f64,
) -> Result<DiscriminatingPair> {
    let cfg = bc.cfg();
    let not_found = |best: f64| Error::NotFound { best_abs_det: best, det_tol: pair_tol };
    let Some(cs) = c_sphere(cfg, y, lambda)? else { return Err(not_found(0.0)) };
    let pts = cs.probes(probes);
    let vals: Vec<Complex64> = pts.iter().map(|s| bc.eval_sigma(s)).collect();
    let best = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut best = (0.0, i, i);
            for j in i + 1..pts.len() {
                let g = (vals[i] - vals[j]).norm();
                if g > best.0 {
                    best = (g, i, j);
                }
            }
            best
        })
        .reduce(|| (0.0, usize::MAX, usize::MAX), |a, b| if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) { b } else { a });
    let (gap, i, j) = best;
    if gap <= pair_tol || i == usize::MAX {
        return Err(not_found(gap));
    }
    Ok(DiscriminatingPair { sigma: pts[i].clone(), sigma_hat: pts[j].clone(), gap })
}

/// Solves `b₁ g_y + g_z = r₁`, `b₂ g_y + g_z = r₂`.
pub fn solve_pair_values(b1: Complex64, b2: Complex64, rhs: [Complex64; 2]) -> Result<(Complex64, Complex64)> {
    let det = b1 - b2;
    if det.norm() == 0.0 || !det.is_finite() {
        return Err(Error::SingularPair);
    }
    let gy = (rhs[0] - rhs[1]) / det;
    let gz = rhs[0] - b1 * gy;
    Ok((gy, gz))
}

/// `(φ(y), φ(z))` from the two equations at `σ`, `σ̂` with right-hand sides `m̂/a(H_νσ)`.
pub fn solve_pair(
    bc: &CouplingCoefficient,
    sigma: &Vector,
    sigma_hat: &Vector,
    rhs: [Complex64; 2],
    pair_tol: f64,
) -> Result<(Complex64, Complex64)> {
    let b1 = bc.eval_sigma(sigma);
    let b2 = bc.eval_sigma(sigma_hat);
    if (b1 - b2).norm() <= pair_tol {
        return Err(Error::SingularPair);
    }
    solve_pair_values(b1, b2, rhs)
}

/// `m` Chebyshev points strictly inside `[lo, hi]`.
pub fn chebyshev_interior(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    (0..m)
        .map(|k| mid + half * ((2 * k + 1) as f64 * std::f64::consts::PI / (2 * m) as f64).cos())
        .collect()
}

/// Diagnostic of the pair mechanism at one frequency point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HdDiagnostic {
    pub d: usize,
    pub y: Vec<f64>,
    pub lambda: f64,
    pub z: Vec<f64>,
    pub sigma: Vec<f64>,
    pub sigma_hat: Vec<f64>,
    pub gap: f64,
    pub homogeneous_solution: [f64; 4],
}

pub const LAMBDA_PROBES: usize = 8;

/// Tries the Chebyshev `λ` probes of `Λ_y` until a discriminating pair appears.
pub fn mechanism_at(bc: &CouplingCoefficient, y: &Vector, pair_tol: f64) -> Result<HdDiagnostic> {
    let cfg = bc.cfg();
    check_hd(cfg)?;
    let mut best = 0.0f64;
    let Some(iv) = lambda_interval(cfg, y)? else {
        return Err(Error::NotFound { best_abs_det: 0.0, det_tol: pair_tol });
    };
    for lambda in chebyshev_interior(iv.lo, iv.hi, LAMBDA_PROBES) {
        match find_discriminating_pair(bc, y, lambda, probe_count(cfg.d), pair_tol) {
            Ok(p) => {
                let zero = Complex64::new(0.0, 0.0);
                let (gy, gz) = solve_pair(bc, &p.sigma, &p.sigma_hat, [zero, zero], pair_tol)?;
                let z = y + &cfg.nu * (2.0 * lambda);
                return Ok(HdDiagnostic {
                    d: cfg.d,
                    y: y.iter().copied().collect(),
                    lambda,
                    z: z.iter().copied().collect(),
                    sigma: p.sigma.iter().copied().collect(),
                    sigma_hat: p.sigma_hat.iter().copied().collect(),
                    gap: p.gap,
                    homogeneous_solution: [gy.re, gy.im, gz.re, gz.im],
                });
            }
            Err(Error::NotFound { best_abs_det, .. }) => best = best.max(best_abs_det),
            Err(e) => return Err(e),
        }
    }
    Err(Error::NotFound { best_abs_det: best, det_tol: pair_tol })
}
