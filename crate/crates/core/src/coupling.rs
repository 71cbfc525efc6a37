//! Coupling sets `F_y`, the sets `C_{y,λ}`, the intervals `Λ_y`, and membership
//! of a frequency point in `𝒴₁`, `𝒴₂`, `𝒴̃` and the non-degenerate part of `𝒴₂`.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{
    arcs_in_halfspaces, sphere_pair_intersection, ArcSet, CircleFrame, HalfSpace, ScanConfig, SigmaClass,
    SpherePairIntersection, Vector,
};
use crate::highdim::{c_sphere, CSphere};

/// Margin below which a predicate is reported as tol-ambiguous.
pub const BOUNDARY_FLAG_REL: f64 = 1e-9;

/// Interval of `λ` values, each end open or closed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaInterval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl LambdaInterval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_closed: true, hi_closed: true }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_closed: false, hi_closed: false }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        (x > self.lo || (self.lo_closed && x == self.lo)) && (x < self.hi || (self.hi_closed && x == self.hi))
    }

    pub fn shifted(&self, t: f64) -> Self {
        Self { lo: self.lo + t, hi: self.hi + t, ..*self }
    }

    pub fn intersect(&self, other: &Self) -> Option<Self> {
        let (lo, lo_closed) = if self.lo > other.lo {
            (self.lo, self.lo_closed)
        } else if other.lo > self.lo {
            (other.lo, other.lo_closed)
        } else {
            (self.lo, self.lo_closed && other.lo_closed)
        };
        let (hi, hi_closed) = if self.hi < other.hi {
            (self.hi, self.hi_closed)
        } else if other.hi < self.hi {
            (other.hi, other.hi_closed)
        } else {
            (self.hi, self.hi_closed && other.hi_closed)
        };
        (lo < hi || (lo == hi && lo_closed && hi_closed)).then_some(Self { lo, hi, lo_closed, hi_closed })
    }

    /// `λ = mid`.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Sorts and merges overlapping or touching intervals.
pub fn merge_intervals(mut v: Vec<LambdaInterval>) -> Vec<LambdaInterval> {
    v.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(b.lo_closed.cmp(&a.lo_closed)));
    let mut out: Vec<LambdaInterval> = Vec::with_capacity(v.len());
    for iv in v {
        if let Some(cur) = out.last_mut() {
            let joins = iv.lo < cur.hi || (iv.lo == cur.hi && (cur.hi_closed || iv.lo_closed));
            if joins {
                if iv.hi > cur.hi {
                    cur.hi = iv.hi;
                    cur.hi_closed = iv.hi_closed;
                } else if iv.hi == cur.hi {
                    cur.hi_closed |= iv.hi_closed;
                }
                continue;
            }
        }
        out.push(iv);
    }
    out
}

/// The circle `𝕊 ∩ (𝕊 - y)` for `d = 3` (`None` when empty or degenerate).
pub fn pair_circle(cfg: &ScanConfig, y: &Vector) -> Result<Option<CircleFrame>> {
    Ok(match sphere_pair_intersection(cfg, y)? {
        SpherePairIntersection::Sphere(f) => Some(f),
        _ => None,
    })
}

/// `Λ_y`, the closed range of `⟨σ,ν⟩` over `𝕊 ∩ (𝕊 - y)`.
pub fn lambda_interval(cfg: &ScanConfig, y: &Vector) -> Result<Option<LambdaInterval>> {
    match sphere_pair_intersection(cfg, y)? {
        SpherePairIntersection::Sphere(f) => {
            let (lo, hi) = f.linear_range(&cfg.nu);
            Ok(Some(LambdaInterval::closed(lo, hi)))
        }
        SpherePairIntersection::Empty => Ok(None),
        SpherePairIntersection::Degenerate => Ok(Some(LambdaInterval::closed(-cfg.k0, cfg.k0))),
    }
}

/// A point `z = y + 2⟨σ,ν⟩ν` of a planar coupling set with its generating pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingPoint {
    pub z: Vector,
    pub sigma: Vector,
    pub eta: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CouplingSetKind {
    Empty,
    Points(Vec<CouplingPoint>),
    /// `F_y = {y + 2λν : λ ∈ intervals}`, with the arcs of `Σ₂ ∩ (S_{e_d} - y)`.
    LambdaIntervals { frame: CircleFrame, arcs: ArcSet, intervals: Vec<LambdaInterval> },
    /// `y = 0`: the coupling set is a whole interval on `ℝν`.
    DegenerateInterval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSet {
    pub base: Vector,
    pub kind: CouplingSetKind,
}

impl CouplingSet {
    pub fn is_empty(&self) -> bool {
        match &self.kind {
            CouplingSetKind::Empty => true,
            CouplingSetKind::Points(p) => p.is_empty(),
            CouplingSetKind::LambdaIntervals { intervals, .. } => intervals.is_empty(),
            CouplingSetKind::DegenerateInterval => false,
        }
    }

    pub fn points(&self) -> &[CouplingPoint] {
        match &self.kind {
            CouplingSetKind::Points(p) => p,
            _ => &[],
        }
    }

    pub fn intervals(&self) -> &[LambdaInterval] {
        match &self.kind {
            CouplingSetKind::LambdaIntervals { intervals, .. } => intervals,
            _ => &[],
        }
    }

    /// Membership of `z` in `F_y` (points within `tol`).
    pub fn contains(&self, cfg: &ScanConfig, z: &Vector, tol: f64) -> bool {
        match &self.kind {
            CouplingSetKind::Empty | CouplingSetKind::DegenerateInterval => false,
            CouplingSetKind::Points(p) => p.iter().any(|c| (&c.z - z).norm() <= tol),
            CouplingSetKind::LambdaIntervals { intervals, .. } => {
                let dz = z - &self.base;
                let lam = 0.5 * dz.dot(&cfg.nu);
                let off = (&dz - &cfg.nu * (2.0 * lam)).norm();
                off <= tol && intervals.iter().any(|iv| iv.contains(lam))
            }
        }
    }
}

/// A representation `y = η - σ` with `σ ∈ S_ω`, `η ∈ S_{e_d}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Representation {
    pub eta: Vector,
    pub sigma: Vector,
    pub class: SigmaClass,
}

/// Points of `𝕊¹ ∩ (𝕊¹ - y)` in the plane (one point at tangency).
pub fn planar_candidates(cfg: &ScanConfig, y: &Vector) -> Result<Vec<Vector>> {
    if cfg.d != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: cfg.d });
    }
    Ok(match sphere_pair_intersection(cfg, y)? {
        SpherePairIntersection::Sphere(f) => {
            if f.radius <= cfg.tol {
                vec![f.center.clone()]
            } else {
                f.zero_sphere_points().to_vec()
            }
        }
        _ => Vec::new(),
    })
}

/// All planar representations of `y` (at most two).
pub fn planar_representations(cfg: &ScanConfig, y: &Vector) -> Result<Vec<Representation>> {
    let mut reps = Vec::new();
    for sigma in planar_candidates(cfg, y)? {
        let eta = &sigma + y;
        if !cfg.in_upper(&eta) {
            continue;
        }
        let class = cfg.sigma_class_raw(&sigma);
        if class != SigmaClass::NotInSOmega {
            reps.push(Representation { eta, sigma, class });
        }
    }
    Ok(reps)
}

/// `(S_{e₂} + σ₁) ∩ (S_{e₂} + σ₂)` for distinct `σ₁, σ₂` on the circle.
pub fn semicircle_intersection(cfg: &ScanConfig, s1: &Vector, s2: &Vector) -> Result<Vec<Vector>> {
    if cfg.d != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: cfg.d });
    }
    let s1 = cfg.snap(s1)?;
    let s2 = cfg.snap(s2)?;
    if (&s1 - &s2).norm() <= cfg.tol {
        return Err(Error::InvalidConfig("semicircle centres must differ".into()));
    }
    Ok(if cfg.in_upper(&s1) && cfg.in_upper(&s2) {
        vec![&s1 + &s2]
    } else if cfg.in_lower(&s1) && cfg.in_lower(&s2) {
        vec![Vector::zeros(2)]
    } else {
        Vec::new()
    })
}

/// Constraints of `Σ₂ ∩ (S_{e_d} - y)` as open half-spaces in `σ`.
pub fn sigma2_constraints(cfg: &ScanConfig, y: &Vector) -> Vec<HalfSpace> {
    let ed = cfg.e_d();
    vec![
        HalfSpace::new(cfg.omega.clone(), cfg.tol),
        HalfSpace::new(cfg.reflected_omega(), cfg.tol),
        HalfSpace::new(ed, cfg.tol - y[cfg.d - 1]),
    ]
}

/// Constraints of `Σ₁ ∩ (S_{e_d} - y)`; `⟨H_νσ,ω⟩ ≤ tol` is taken as `⟨σ,-H_νω⟩ > -tol`.
pub fn sigma1_constraints(cfg: &ScanConfig, y: &Vector) -> Vec<HalfSpace> {
    let ed = cfg.e_d();
    vec![
        HalfSpace::new(cfg.omega.clone(), cfg.tol),
        HalfSpace::new(-cfg.reflected_omega(), -cfg.tol),
        HalfSpace::new(ed, cfg.tol - y[cfg.d - 1]),
    ]
}

/// Arcs of `M_y = Σ₂ ∩ (S_{e_3} - y)` (or of the `Σ₁` analogue) on the pair circle.
pub fn spatial_arcs(cfg: &ScanConfig, y: &Vector, sigma1: bool) -> Result<Option<(CircleFrame, ArcSet)>> {
    if cfg.d != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: cfg.d });
    }
    let Some(frame) = pair_circle(cfg, y)? else { return Ok(None) };
    if frame.radius <= cfg.tol {
        // tangency: a single point
        let s = frame.center.clone();
        let cons = if sigma1 { sigma1_constraints(cfg, y) } else { sigma2_constraints(cfg, y) };
        let set = if cons.iter().all(|h| h.contains(&s)) { ArcSet::full() } else { ArcSet::empty() };
        return Ok(Some((frame, set)));
    }
    let cons = if sigma1 { sigma1_constraints(cfg, y) } else { sigma2_constraints(cfg, y) };
    let arcs = arcs_in_halfspaces(&frame, &cons)?;
    Ok(Some((frame, arcs)))
}

/// Image of the open arc set under `λ(θ) = ⟨σ(θ),ν⟩`.
pub fn lambda_image(frame: &CircleFrame, nu: &Vector, arcs: &ArcSet) -> Vec<LambdaInterval> {
    let l0 = frame.center.dot(nu);
    let p = frame.radius * frame.axes[0].dot(nu);
    let q = frame.radius * frame.axes[1].dot(nu);
    let amp = p.hypot(q);
    if arcs.is_empty() {
        return Vec::new();
    }
    if amp <= 1e-15 * (1.0 + l0.abs()) {
        return vec![LambdaInterval::closed(l0, l0)];
    }
    let phase = q.atan2(p);
    let lam = |t: f64| l0 + amp * (t - phase).cos();
    let mut out = Vec::new();
    for a in arcs.intervals() {
        if arcs.is_full() || a.len() >= TAU {
            out.push(LambdaInterval::closed(l0 - amp, l0 + amp));
            continue;
        }
        let (la, lb) = (lam(a.lo), lam(a.hi));
        let (hi, hi_closed) = if a.contains(phase) { (l0 + amp, true) } else { (la.max(lb), false) };
        let (lo, lo_closed) = if a.contains(phase + std::f64::consts::PI) {
            (l0 - amp, true)
        } else {
            (la.min(lb), false)
        };
        if lo < hi {
            out.push(LambdaInterval { lo, hi, lo_closed, hi_closed });
        }
    }
    merge_intervals(out)
}

/// The coupling set `F_y = {y + 2⟨σ,ν⟩ν : σ ∈ Σ₂ ∩ (S_{e_d} - y)}`.
pub fn coupling_set(cfg: &ScanConfig, y: &Vector) -> Result<CouplingSet> {
    cfg.check_dim(y)?;
    let base = y.clone();
    if y.norm() <= cfg.tol {
        return Ok(CouplingSet { base, kind: CouplingSetKind::DegenerateInterval });
    }
    let kind = match cfg.d {
        2 => {
            let pts: Vec<CouplingPoint> = planar_representations(cfg, y)?
                .into_iter()
                .filter(|r| r.class == SigmaClass::Sigma2)
                .map(|r| CouplingPoint { z: y + &cfg.nu * (2.0 * r.sigma.dot(&cfg.nu)), sigma: r.sigma, eta: r.eta })
                .collect();
            if pts.is_empty() {
                CouplingSetKind::Empty
            } else {
                CouplingSetKind::Points(pts)
            }
        }
        3 => match spatial_arcs(cfg, y, false)? {
            None => CouplingSetKind::Empty,
            Some((_, arcs)) if arcs.is_empty() => CouplingSetKind::Empty,
            Some((frame, arcs)) => {
                let intervals = if frame.radius <= cfg.tol {
                    let l = frame.center.dot(&cfg.nu);
                    vec![LambdaInterval::closed(l, l)]
                } else {
                    lambda_image(&frame, &cfg.nu, &arcs)
                };
                CouplingSetKind::LambdaIntervals { frame, arcs, intervals }
            }
        },
        d => return Err(Error::UnsupportedDimension(d)),
    };
    Ok(CouplingSet { base, kind })
}

/// `C_{y,λ}`: explicit points for `d ≤ 3`, a sphere frame for `d ≥ 4`.
#[derive(Debug, Clone, PartialEq)]
pub enum CSet {
    Points(Vec<Vector>),
    Sphere(CSphere),
    Empty,
}

/// Angles on a circle frame where `⟨σ(θ),ν⟩ = λ`.
pub fn level_angles(frame: &CircleFrame, nu: &Vector, lambda: f64) -> Vec<f64> {
    let l0 = frame.center.dot(nu);
    let p = frame.radius * frame.axes[0].dot(nu);
    let q = frame.radius * frame.axes[1].dot(nu);
    let amp = p.hypot(q);
    if amp <= 1e-15 {
        return Vec::new();
    }
    let t = (lambda - l0) / amp;
    if !(-1.0..=1.0).contains(&t) {
        return Vec::new();
    }
    let phase = q.atan2(p);
    let half = t.acos();
    if half == 0.0 || half == std::f64::consts::PI {
        vec![phase + half]
    } else {
        vec![phase - half, phase + half]
    }
}

pub fn c_set(cfg: &ScanConfig, y: &Vector, lambda: f64) -> Result<CSet> {
    cfg.check_dim(y)?;
    match cfg.d {
        2 => {
            let pts: Vec<Vector> = planar_representations(cfg, y)?
                .into_iter()
                .filter(|r| r.class == SigmaClass::Sigma2 && (r.sigma.dot(&cfg.nu) - lambda).abs() <= 1e-10 * cfg.k0)
                .map(|r| r.sigma)
                .collect();
            Ok(if pts.is_empty() { CSet::Empty } else { CSet::Points(pts) })
        }
        3 => {
            let Some((frame, arcs)) = spatial_arcs(cfg, y, false)? else { return Ok(CSet::Empty) };
            let pts: Vec<Vector> = level_angles(&frame, &cfg.nu, lambda)
                .into_iter()
                .filter(|t| arcs.contains(*t))
                .map(|t| frame.point(t))
                .collect();
            Ok(if pts.is_empty() { CSet::Empty } else { CSet::Points(pts) })
        }
        _ => Ok(match c_sphere(cfg, y, lambda)? {
            Some(s) => CSet::Sphere(s),
            None => CSet::Empty,
        }),
    }
}

/// Region membership of a frequency point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MembershipFlags {
    pub in_y1: bool,
    pub in_y2: bool,
    pub in_tilde_y: bool,
    pub nondegenerate: bool,
    /// Some predicate was decided within the boundary margin.
    pub near_boundary: bool,
}

struct Margins {
    min: f64,
}

impl Margins {
    fn new() -> Self {
        Self { min: f64::INFINITY }
    }

    fn note(&mut self, m: f64) {
        self.min = self.min.min(m.abs());
    }
}

/// A `𝒴̃` representation `y = η - H_νσ` with `η ∈ (-Σ₁) ∩ S_{e₂}`,
/// `σ ∈ Σ₂ ∩ S_{-e₂}`, `H_νσ ∉ S_{-e₂}`.
pub fn tilde_y_pair(cfg: &ScanConfig, y: &Vector) -> Result<Option<(Vector, Vector)>> {
    for tau in planar_candidates(cfg, y)? {
        let eta = &tau + y;
        let sigma = cfg.reflect(&tau);
        if cfg.in_upper(&eta)
            && cfg.in_sigma1(&(-&eta))
            && cfg.in_sigma2(&sigma)
            && cfg.in_lower(&sigma)
            && !cfg.in_lower(&tau)
        {
            return Ok(Some((eta, sigma)));
        }
    }
    Ok(None)
}

/// A `Σ₁` representation `y = η - σ₁` if one exists.
pub fn sigma1_representation(cfg: &ScanConfig, y: &Vector) -> Result<Option<Representation>> {
    match cfg.d {
        2 => Ok(planar_representations(cfg, y)?.into_iter().find(|r| r.class == SigmaClass::Sigma1)),
        3 => {
            let Some((frame, arcs)) = spatial_arcs(cfg, y, true)? else { return Ok(None) };
            let Some(arc) = arcs.longest() else { return Ok(None) };
            // slivers below the boundary margin are rounding artefacts
            if !arcs.is_full() && frame.radius > cfg.tol && arc.len() * frame.radius < BOUNDARY_FLAG_REL * cfg.k0 {
                return Ok(None);
            }
            let sigma = if frame.radius <= cfg.tol { frame.center.clone() } else { frame.point(arc.midpoint()) };
            let eta = &sigma + y;
            Ok(Some(Representation { eta, sigma, class: SigmaClass::Sigma1 }))
        }
        d => Err(Error::UnsupportedDimension(d)),
    }
}

fn planar_flags(cfg: &ScanConfig, y: &Vector) -> Result<MembershipFlags> {
    let flag = BOUNDARY_FLAG_REL * cfg.k0;
    let mut m = Margins::new();
    let ny = y.norm();
    m.note(ny - 2.0 * cfg.k0);
    m.note(ny);
    let cands = planar_candidates(cfg, y)?;
    let hw = cfg.reflected_omega();
    let mut in_y1 = false;
    let mut in_y2 = false;
    let mut rep_degenerate = false;
    for sigma in &cands {
        let eta = sigma + y;
        m.note(eta[1] - cfg.tol);
        m.note(sigma.dot(&cfg.omega) - cfg.tol);
        m.note(sigma.dot(&hw) - cfg.tol);
        if !cfg.in_upper(&eta) {
            continue;
        }
        match cfg.sigma_class_raw(sigma) {
            SigmaClass::Sigma1 => in_y1 = true,
            SigmaClass::Sigma2 => {
                in_y2 = true;
                if eta.dot(&cfg.nu).abs() <= cfg.tol || sigma.dot(&cfg.nu).abs() <= cfg.tol {
                    rep_degenerate = true;
                }
            }
            SigmaClass::NotInSOmega => {}
        }
        // predicates used by the 𝒴̃ test with τ = σ
        let tau = sigma;
        let s = cfg.reflect(tau);
        m.note(-eta.dot(&cfg.omega) - cfg.tol);
        m.note(-eta.dot(&hw) - cfg.tol);
        m.note(-s[1] - cfg.tol);
        m.note(-tau[1] - cfg.tol);
    }
    let in_tilde_y = tilde_y_pair(cfg, y)?.is_some();
    let perp = (y - &cfg.nu * y.dot(&cfg.nu)).norm();
    let nondegenerate = in_y2
        && ny < 2.0 * cfg.k0 - cfg.tol
        && y.dot(&cfg.nu).abs() > cfg.tol
        && perp > cfg.tol
        && !rep_degenerate;
    Ok(MembershipFlags { in_y1, in_y2, in_tilde_y, nondegenerate, near_boundary: m.min < flag })
}

fn spatial_flags(cfg: &ScanConfig, y: &Vector) -> Result<MembershipFlags> {
    let flag = BOUNDARY_FLAG_REL * cfg.k0;
    let ny = y.norm();
    let mut near = (ny - 2.0 * cfg.k0).abs() < flag || ny < flag;
    let mut in_sets = [false, false];
    for (k, s1) in [true, false].into_iter().enumerate() {
        if let Some((frame, arcs)) = spatial_arcs(cfg, y, s1)? {
            let long = |a: &crate::geometry::Arc| frame.radius <= cfg.tol || a.len() * frame.radius >= flag;
            in_sets[k] = arcs.is_full() || arcs.intervals().iter().any(long);
            if !arcs.is_full() && arcs.intervals().iter().any(|a| !long(a)) {
                near = true;
            }
        }
    }
    let perp = (y - &cfg.nu * y.dot(&cfg.nu)).norm();
    let nondegenerate = in_sets[1] && ny < 2.0 * cfg.k0 - cfg.tol && ny > cfg.tol && perp > cfg.tol;
    Ok(MembershipFlags { in_y1: in_sets[0], in_y2: in_sets[1], in_tilde_y: false, nondegenerate, near_boundary: near })
}

/// Membership of `y` in `𝒴₁`, `𝒴₂`, `𝒴̃` and the non-degenerate part of `𝒴₂`.
pub fn membership_flags(cfg: &ScanConfig, y: &Vector) -> Result<MembershipFlags> {
    cfg.check_dim(y)?;
    match cfg.d {
        2 => planar_flags(cfg, y),
        3 => spatial_flags(cfg, y),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

/// Evenly spaced points of `M_y` (`d = 3`), spread over its arcs by length.
pub fn sample_arcs(frame: &CircleFrame, arcs: &ArcSet, n: usize) -> Vec<(f64, Vector)> {
    let total = arcs.measure();
    if total <= 0.0 || n == 0 {
        return Vec::new();
    }
    let step = total / n as f64;
    let mut out = Vec::with_capacity(n);
    let ivs = arcs.intervals();
    for k in 0..n {
        let mut s = (k as f64 + 0.5) * step;
        for a in &ivs {
            if s < a.len() {
                let t = a.lo + s;
                out.push((t, frame.point(t)));
                break;
            }
            s -= a.len();
        }
    }
    out
}
