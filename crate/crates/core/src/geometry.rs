//! Vector geometry of a scan configuration.
//!
//! Everything downstream leans on a handful of primitives defined here: the
//! reflection `H_ν` across the scan plane, open half-spaces and hemispheres of
//! the radius-`k0` sphere, the split of the beam hemisphere `S_ω` into the
//! one-term part `Σ₁` and the two-term part `Σ₂`, and the intersection of the
//! sphere with its translate `𝕊 - y`.
//!
//! All sets are open: a strict inequality `⟨x,v⟩ > 0` is evaluated as
//! `⟨x,v⟩ > tol`.

use std::f64::consts::TAU;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense real vector in `ℝ^d`.
pub type Vector = DVector<f64>;

/// Relative distance to the sphere below which points are snapped onto it.
pub const SPHERE_SNAP_REL: f64 = 1e-10;

/// Tolerance on `‖v‖ - 1` for directions that must be unit vectors.
const UNIT_TOL: f64 = 1e-10;

/// Build a vector from a slice.
pub fn vector(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

/// Point at `angle_deg` on the circle of radius `r` in the plane.
pub fn polar(r: f64, angle_deg: f64) -> Vector {
    let t = angle_deg.to_radians();
    vector(&[r * t.cos(), r * t.sin()])
}

/// Cross product in ℝ³.
pub fn cross3(a: &Vector, b: &Vector) -> Vector {
    debug_assert!(a.len() == 3 && b.len() == 3);
    vector(&[
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])
}

/// Orthogonal projection `π_σ x = x - ⟨x,σ⟩σ/‖σ‖²` onto `σ^⊥`.
pub fn project_orthogonal(sigma: &Vector, x: &Vector) -> Vector {
    let s2 = sigma.norm_squared();
    if s2 == 0.0 {
        return x.clone();
    }
    x - sigma * (x.dot(sigma) / s2)
}

/// Orthonormal basis of the orthogonal complement of `span(vectors)` in ℝ^d.
///
/// The basis is built deterministically: the given vectors are orthonormalised
/// first, then standard basis vectors are added greedily by largest residual
/// (ties broken by lowest index).
pub fn orthonormal_complement(vectors: &[Vector], d: usize) -> Vec<Vector> {
    let mut basis: Vec<Vector> = Vec::with_capacity(d);
    for v in vectors {
        if let Some(u) = residual_unit(v, &basis, 1e-12 * v.norm().max(1.0)) {
            basis.push(u);
        }
    }
    let span = basis.len();
    while basis.len() < d {
        let mut best: Option<(f64, Vector)> = None;
        for i in 0..d {
            let mut e = Vector::zeros(d);
            e[i] = 1.0;
            let r = gram_schmidt_residual(&e, &basis);
            let n = r.norm();
            if best.as_ref().is_none_or(|(bn, _)| n > *bn + 1e-12) {
                best = Some((n, r));
            }
        }
        let (n, r) = best.expect("d > 0");
        if n < 1e-8 {
            break;
        }
        let mut u = r / n;
        // second pass for numerical orthogonality
        u = gram_schmidt_residual(&u, &basis);
        let un = u.norm();
        basis.push(u / un);
    }
    basis.split_off(span)
}

fn gram_schmidt_residual(v: &Vector, basis: &[Vector]) -> Vector {
    let mut r = v.clone();
    for _ in 0..2 {
        for b in basis {
            let c = r.dot(b);
            r -= b * c;
        }
    }
    r
}

fn residual_unit(v: &Vector, basis: &[Vector], tol: f64) -> Option<Vector> {
    let r = gram_schmidt_residual(v, basis);
    let n = r.norm();
    (n > tol).then(|| r / n)
}

/// Householder reflection `x - 2⟨x,v⟩v` across the hyperplane `v^⊥`.
pub fn householder_reflect(v: &Vector, x: &Vector) -> Result<Vector> {
    if v.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: v.len(), got: x.len() });
    }
    let n = v.norm();
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(Error::InvalidDirection { norm: n });
    }
    Ok(x - v * (2.0 * x.dot(v)))
}

/// Membership in the open half-space `Ω_v = {x : ⟨x,v⟩ > 0}`, evaluated as `⟨x,v⟩ > tol`.
pub fn half_space_contains(v: &Vector, x: &Vector, tol: f64) -> Result<bool> {
    if v.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: v.len(), got: x.len() });
    }
    if v.norm() == 0.0 {
        return Err(Error::InvalidDirection { norm: 0.0 });
    }
    Ok(x.dot(v) > tol)
}

/// Which part of the beam hemisphere a direction belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SigmaClass {
    /// `σ ∈ S_ω` with `H_ν σ ∉ S_ω`: one-term equations.
    Sigma1,
    /// `σ ∈ S_ω` with `H_ν σ ∈ S_ω`: two-term coupled equations.
    Sigma2,
    NotInSOmega,
}

/// The scan geometry: dimension, wave number, beam direction `ω`, scan normal `ν`,
/// radial extension width `χ` and the strict-inequality tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub d: usize,
    pub k0: f64,
    pub omega: Vector,
    pub nu: Vector,
    pub chi: f64,
    pub tol: f64,
}

impl ScanConfig {
    /// Creates a configuration; `omega` and `nu` are renormalised and the
    /// tolerance defaults to `1e-12·k0`.
    pub fn new(d: usize, k0: f64, omega: Vector, nu: Vector, chi: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidConfig(format!("dimension must be >= 2, got {d}")));
        }
        if omega.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: omega.len() });
        }
        if nu.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: nu.len() });
        }
        if !(k0 > 0.0 && k0.is_finite()) {
            return Err(Error::InvalidConfig(format!("k0 must be positive, got {k0}")));
        }
        if !(chi > 0.0 && chi < 1.0) {
            return Err(Error::InvalidConfig(format!("chi must lie in (0,1), got {chi}")));
        }
        let on = omega.norm();
        let nn = nu.norm();
        if !(on > 0.0 && on.is_finite()) {
            return Err(Error::InvalidDirection { norm: on });
        }
        if !(nn > 0.0 && nn.is_finite()) {
            return Err(Error::InvalidDirection { norm: nn });
        }
        Ok(Self { d, k0, omega: omega / on, nu: nu / nn, chi, tol: 1e-12 * k0 })
    }

    /// Planar configuration from polar angles (degrees) of `ω` and `ν`.
    pub fn planar(k0: f64, omega_deg: f64, nu_deg: f64, chi: f64) -> Result<Self> {
        Self::new(2, k0, polar(1.0, omega_deg), polar(1.0, nu_deg), chi)
    }

    pub fn with_tol(mut self, tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::InvalidConfig(format!("tol must be positive, got {tol}")));
        }
        self.tol = tol;
        Ok(self)
    }

    /// The last standard basis vector `e_d` (receiver side).
    pub fn e_d(&self) -> Vector {
        let mut e = Vector::zeros(self.d);
        e[self.d - 1] = 1.0;
        e
    }

    /// `H_ν x`.
    pub fn reflect(&self, x: &Vector) -> Vector {
        x - &self.nu * (2.0 * x.dot(&self.nu))
    }

    /// `H_ν ω`; note `⟨H_ν σ, ω⟩ = ⟨σ, H_ν ω⟩`.
    pub fn reflected_omega(&self) -> Vector {
        self.reflect(&self.omega)
    }

    pub fn check_dim(&self, x: &Vector) -> Result<()> {
        if x.len() == self.d {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.d, got: x.len() })
        }
    }

    pub fn on_sphere(&self, x: &Vector) -> bool {
        x.len() == self.d && (x.norm() - self.k0).abs() <= SPHERE_SNAP_REL * self.k0
    }

    /// Radially renormalises a near-sphere point onto the sphere.
    pub fn snap(&self, x: &Vector) -> Result<Vector> {
        self.check_dim(x)?;
        let n = x.norm();
        if (n - self.k0).abs() > SPHERE_SNAP_REL * self.k0 {
            return Err(Error::InvalidSpherePoint { norm: n, k0: self.k0 });
        }
        Ok(x * (self.k0 / n))
    }

    /// `s ∈ S_v` for a sphere point (no sphere check).
    pub(crate) fn in_hemisphere(&self, v: &Vector, s: &Vector) -> bool {
        s.dot(v) > self.tol
    }

    /// `s ∈ S_{e_d}` for a sphere point (no sphere check).
    pub(crate) fn in_upper(&self, s: &Vector) -> bool {
        s[self.d - 1] > self.tol
    }

    /// `s ∈ S_{-e_d}` for a sphere point (no sphere check).
    pub(crate) fn in_lower(&self, s: &Vector) -> bool {
        -s[self.d - 1] > self.tol
    }

    /// Σ-classification of a point already on the sphere.
    pub(crate) fn sigma_class_raw(&self, s: &Vector) -> SigmaClass {
        if s.dot(&self.omega) <= self.tol {
            SigmaClass::NotInSOmega
        } else if self.reflect(s).dot(&self.omega) > self.tol {
            SigmaClass::Sigma2
        } else {
            SigmaClass::Sigma1
        }
    }

    pub(crate) fn in_sigma2(&self, s: &Vector) -> bool {
        self.sigma_class_raw(s) == SigmaClass::Sigma2
    }

    pub(crate) fn in_sigma1(&self, s: &Vector) -> bool {
        self.sigma_class_raw(s) == SigmaClass::Sigma1
    }

    /// `Σ₂ = ∅` exactly when `ν ∥ ω`.
    pub fn sigma2_is_empty(&self) -> bool {
        (self.nu.dot(&self.omega).abs() - 1.0).abs() < 1e-14
    }
}

/// A point on the sphere of radius `k0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint(Vector);

impl SpherePoint {
    /// Snaps `coords` onto the sphere; fails if it is further than `1e-10·k0` away.
    pub fn new(cfg: &ScanConfig, coords: Vector) -> Result<Self> {
        cfg.snap(&coords).map(SpherePoint)
    }

    pub fn coords(&self) -> &Vector {
        &self.0
    }

    pub fn into_inner(self) -> Vector {
        self.0
    }
}

impl AsRef<Vector> for SpherePoint {
    fn as_ref(&self) -> &Vector {
        &self.0
    }
}

/// Membership in the open hemisphere `S_v`; false for off-sphere points.
pub fn hemisphere_contains(cfg: &ScanConfig, v: &Vector, s: &Vector) -> bool {
    cfg.on_sphere(s) && v.len() == cfg.d && v.norm() > 0.0 && cfg.in_hemisphere(v, s)
}

/// Classify `s` as belonging to `Σ₁`, `Σ₂` or neither.
pub fn classify_sigma(cfg: &ScanConfig, s: &Vector) -> Result<SigmaClass> {
    let s = cfg.snap(s)?;
    Ok(cfg.sigma_class_raw(&s))
}

/// A round sphere `{center + radius·u : u ∈ span(axes), ‖u‖ = 1}`.
///
/// `axes` is an orthonormal basis of the linear part of the affine subspace
/// containing the sphere; its dimension is `d - codim`. With two axes this is
/// a circle parametrised by `center + radius (cos θ axes[0] + sin θ axes[1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleFrame {
    pub center: Vector,
    pub radius: f64,
    pub axes: Vec<Vector>,
    pub codim: usize,
}

impl CircleFrame {
    /// Circle in the plane spanned by `a0`, `a1` (assumed orthonormal).
    pub fn circle(center: Vector, radius: f64, a0: Vector, a1: Vector) -> Self {
        let codim = center.len() - 2;
        Self { center, radius, axes: vec![a0, a1], codim }
    }

    pub fn is_circle(&self) -> bool {
        self.axes.len() == 2
    }

    /// Point at angle `theta` on a circle frame.
    pub fn point(&self, theta: f64) -> Vector {
        &self.center + (&self.axes[0] * theta.cos() + &self.axes[1] * theta.sin()) * self.radius
    }

    /// Point `center + radius·Σ cᵢ axesᵢ` for unit coefficients `c`.
    pub fn point_from_coeffs(&self, c: &[f64]) -> Vector {
        let mut p = self.center.clone();
        for (a, ci) in self.axes.iter().zip(c) {
            p += a * (ci * self.radius);
        }
        p
    }

    /// Both points of a 0-sphere (`axes.len() == 1`), `+axis` first.
    pub fn zero_sphere_points(&self) -> [Vector; 2] {
        let a = &self.axes[0] * self.radius;
        [&self.center + &a, &self.center - &a]
    }

    /// Range of `⟨x, v⟩` over the sphere.
    pub fn linear_range(&self, v: &Vector) -> (f64, f64) {
        let c = self.center.dot(v);
        let proj: f64 = self.axes.iter().map(|a| a.dot(v).powi(2)).sum::<f64>().sqrt();
        (c - self.radius * proj, c + self.radius * proj)
    }
}

/// Result of intersecting the sphere with its translate.
#[derive(Debug, Clone, PartialEq)]
pub enum SpherePairIntersection {
    /// `0 < ‖y‖ ≤ 2k0`; radius zero at tangency.
    Sphere(CircleFrame),
    Empty,
    /// `y = 0`: the two spheres coincide.
    Degenerate,
}

/// `{σ : ‖σ‖ = k0, ‖σ + y‖ = k0}`: the sphere of radius `√(k0² - ‖y‖²/4)`
/// around `-y/2` in the hyperplane orthogonal to `y`.
pub fn sphere_pair_intersection(cfg: &ScanConfig, y: &Vector) -> Result<SpherePairIntersection> {
    cfg.check_dim(y)?;
    let ny = y.norm();
    if ny <= cfg.tol {
        return Ok(SpherePairIntersection::Degenerate);
    }
    let r2 = cfg.k0 * cfg.k0 - 0.25 * ny * ny;
    if ny > 2.0 * cfg.k0 + cfg.tol {
        return Ok(SpherePairIntersection::Empty);
    }
    let radius = r2.max(0.0).sqrt();
    let axes = orthonormal_complement(std::slice::from_ref(y), cfg.d);
    Ok(SpherePairIntersection::Sphere(CircleFrame { center: y * -0.5, radius, axes, codim: 1 }))
}

/// Open half-space constraint `⟨σ, normal⟩ > offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    pub normal: Vector,
    pub offset: f64,
}

impl HalfSpace {
    pub fn new(normal: Vector, offset: f64) -> Self {
        Self { normal, offset }
    }

    pub fn margin(&self, x: &Vector) -> f64 {
        x.dot(&self.normal) - self.offset
    }

    pub fn contains(&self, x: &Vector) -> bool {
        self.margin(x) > 0.0
    }
}

/// Open arc `(lo, hi)` in radians with `lo ∈ [0, 2π)` and `lo < hi ≤ lo + 2π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub lo: f64,
    pub hi: f64,
}

impl Arc {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, theta: f64) -> bool {
        let t = theta.rem_euclid(TAU);
        (self.lo < t && t < self.hi) || (self.lo < t + TAU && t + TAU < self.hi)
    }
}

/// Finite union of pairwise disjoint open arcs on a reference circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcSet {
    full: bool,
    arcs: Vec<Arc>,
}

impl ArcSet {
    pub fn full() -> Self {
        Self { full: true, arcs: Vec::new() }
    }

    pub fn empty() -> Self {
        Self { full: false, arcs: Vec::new() }
    }

    /// Single open arc starting at `lo` (any real) of length `len ∈ (0, 2π]`.
    pub fn arc(lo: f64, len: f64) -> Self {
        if len <= 0.0 {
            return Self::empty();
        }
        let l = lo.rem_euclid(TAU);
        Self { full: false, arcs: vec![Arc { lo: l, hi: l + len.min(TAU) }] }
    }

    pub fn is_full(&self) -> bool {
        self.full
    }

    pub fn is_empty(&self) -> bool {
        !self.full && self.arcs.is_empty()
    }

    /// The arcs; the full circle is reported as `(0, 2π)`.
    pub fn intervals(&self) -> Vec<Arc> {
        if self.full {
            vec![Arc { lo: 0.0, hi: TAU }]
        } else {
            self.arcs.clone()
        }
    }

    pub fn contains(&self, theta: f64) -> bool {
        self.full || self.arcs.iter().any(|a| a.contains(theta))
    }

    pub fn measure(&self) -> f64 {
        if self.full {
            TAU
        } else {
            self.arcs.iter().map(Arc::len).sum()
        }
    }

    pub fn longest(&self) -> Option<Arc> {
        self.intervals().into_iter().max_by(|a, b| a.len().total_cmp(&b.len()))
    }

    pub fn intersect(&self, other: &ArcSet) -> ArcSet {
        if self.full {
            return other.clone();
        }
        if other.full {
            return self.clone();
        }
        let mut out = Vec::new();
        for a in &self.arcs {
            for b in &other.arcs {
                for k in [-1.0, 0.0, 1.0] {
                    let lo = a.lo.max(b.lo + k * TAU);
                    let hi = a.hi.min(b.hi + k * TAU);
                    if lo < hi {
                        let l = lo.rem_euclid(TAU);
                        out.push(Arc { lo: l, hi: hi + (l - lo) });
                    }
                }
            }
        }
        out.sort_by(|x, y| x.lo.total_cmp(&y.lo));
        ArcSet { full: false, arcs: out }
    }
}

/// Arc of the circle where one constraint holds strictly.
fn single_constraint_arcs(frame: &CircleFrame, h: &HalfSpace) -> ArcSet {
    let c0 = frame.center.dot(&h.normal) - h.offset;
    let p = frame.radius * frame.axes[0].dot(&h.normal);
    let q = frame.radius * frame.axes[1].dot(&h.normal);
    let amp = p.hypot(q);
    let scale = frame.center.norm().max(frame.radius).max(1.0) * h.normal.norm();
    if amp <= 1e-15 * scale {
        return if c0 > 0.0 { ArcSet::full() } else { ArcSet::empty() };
    }
    let t = -c0 / amp;
    if t >= 1.0 {
        ArcSet::empty()
    } else if t < -1.0 {
        ArcSet::full()
    } else {
        let phase = q.atan2(p);
        let half = t.acos();
        ArcSet::arc(phase - half, 2.0 * half)
    }
}

/// Exact set of angles on a circle frame where all constraints hold strictly.
pub fn arcs_in_halfspaces(frame: &CircleFrame, constraints: &[HalfSpace]) -> Result<ArcSet> {
    if !frame.is_circle() {
        return Err(Error::DimensionMismatch { expected: 2, got: frame.axes.len() });
    }
    let mut set = ArcSet::full();
    for h in constraints {
        if h.normal.len() != frame.center.len() {
            return Err(Error::DimensionMismatch { expected: frame.center.len(), got: h.normal.len() });
        }
        if h.normal.norm() == 0.0 {
            return Err(Error::InvalidDirection { norm: 0.0 });
        }
        set = set.intersect(&single_constraint_arcs(frame, h));
        if set.is_empty() {
            break;
        }
    }
    Ok(set)
}
