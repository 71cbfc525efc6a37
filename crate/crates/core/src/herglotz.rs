//! Herglotz densities `a` on the sphere and the coupling coefficient
//! `b(χ̃σ) = a(σ)/a(H_ν σ)` on the radial neighbourhood `Σ_{2,χ}`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cross3, orthonormal_complement, project_orthogonal, ScanConfig, Vector};

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

/// Central-difference step for tabulated gradients, relative to `k0`.
pub const FD_GRADIENT_STEP: f64 = 1e-5;
/// Central-difference step for tabulated Hessians, relative to `k0`.
pub const FD_HESSIAN_STEP: f64 = 1e-4;
/// Default threshold for the gradient condition.
pub const DEFAULT_COND_TOL: f64 = 1e-8;

/// Density on a uniform angular grid, interpolated with Catmull-Rom cubics.
///
/// In the plane the grid is over the signed angle `θ ∈ [-90°, 90°]` from `ω`
/// (positive towards the rotation of `ω` by +90°). In ℝ³ the grid is over the
/// colatitude `θ ∈ [0°, 90°]` from `ω` and an azimuth `φ ∈ [0°, 360°)` measured
/// in the frame `orthonormal_complement([ω])`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity {
    theta0: f64,
    dtheta: f64,
    n_theta: usize,
    dphi: Option<f64>,
    n_phi: usize,
    values: Vec<Complex64>,
}

fn uniform_axis(xs: &[f64], name: &str) -> Result<(f64, f64)> {
    if xs.len() < 4 {
        return Err(Error::Tabulated(format!("{name} grid needs at least 4 nodes, got {}", xs.len())));
    }
    let step = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    if step.is_nan() || step <= 0.0 {
        return Err(Error::Tabulated(format!("{name} grid must be increasing")));
    }
    for (i, x) in xs.iter().enumerate() {
        if (x - (xs[0] + step * i as f64)).abs() > 1e-6 * step {
            return Err(Error::Tabulated(format!("{name} grid is not uniform at node {i}")));
        }
    }
    Ok((xs[0], step))
}

impl TabulatedDensity {
    /// Planar table from `(theta_deg, value)` samples sorted by angle.
    pub fn planar(samples: &[(f64, Complex64)]) -> Result<Self> {
        let thetas: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let (t0, dt) = uniform_axis(&thetas, "theta")?;
        let last = t0 + dt * (thetas.len() - 1) as f64;
        if t0 > -90.0 + 1e-9 || last < 90.0 - 1e-9 {
            return Err(Error::Tabulated("planar theta grid must cover [-90, 90]".into()));
        }
        let values: Vec<Complex64> = samples.iter().map(|s| s.1).collect();
        check_nonzero(&values)?;
        Ok(Self { theta0: t0, dtheta: dt, n_theta: thetas.len(), dphi: None, n_phi: 1, values })
    }

    /// Spatial table from `(theta_deg, phi_deg, value)` samples, theta-major.
    pub fn spatial(samples: &[(f64, f64, Complex64)]) -> Result<Self> {
        let mut thetas: Vec<f64> = Vec::new();
        for s in samples {
            if thetas.last().is_none_or(|t| (s.0 - t).abs() > 1e-12) {
                thetas.push(s.0);
            }
        }
        let n_theta = thetas.len();
        if n_theta == 0 || !samples.len().is_multiple_of(n_theta) {
            return Err(Error::Tabulated("spatial table must be a full theta x phi grid".into()));
        }
        let n_phi = samples.len() / n_theta;
        let phis: Vec<f64> = samples[..n_phi].iter().map(|s| s.1).collect();
        for (i, s) in samples.iter().enumerate() {
            if (s.0 - thetas[i / n_phi]).abs() > 1e-12 || (s.1 - phis[i % n_phi]).abs() > 1e-9 {
                return Err(Error::Tabulated(format!("row {i} breaks the theta-major grid layout")));
            }
        }
        let (t0, dt) = uniform_axis(&thetas, "theta")?;
        let (p0, dp) = uniform_axis(&phis, "phi")?;
        let last = t0 + dt * (n_theta - 1) as f64;
        if t0.abs() > 1e-9 || last < 90.0 - 1e-9 {
            return Err(Error::Tabulated("spatial theta grid must cover [0, 90]".into()));
        }
        if p0.abs() > 1e-9 || (dp * n_phi as f64 - 360.0).abs() > 1e-6 {
            return Err(Error::Tabulated("phi grid must be uniform on [0, 360)".into()));
        }
        let values: Vec<Complex64> = samples.iter().map(|s| s.2).collect();
        check_nonzero(&values)?;
        Ok(Self { theta0: t0, dtheta: dt, n_theta, dphi: Some(dp), n_phi, values })
    }

    /// Reads a table with strict header `theta_deg,re,im` or `theta_deg,phi_deg,re,im`.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers().map_err(|e| Error::Tabulated(e.to_string()))?.clone();
        let cols: Vec<&str> = header.iter().collect();
        let spatial = match cols.as_slice() {
            ["theta_deg", "re", "im"] => false,
            ["theta_deg", "phi_deg", "re", "im"] => true,
            _ => return Err(Error::Tabulated(format!("unexpected header {:?}", cols))),
        };
        let parse = |s: &str, row: usize| {
            s.parse::<f64>().map_err(|_| Error::Tabulated(format!("row {row}: cannot parse {s:?}")))
        };
        let mut planar = Vec::new();
        let mut space = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Tabulated(e.to_string()))?;
            let f: Vec<f64> = rec.iter().map(|s| parse(s, i + 1)).collect::<Result<_>>()?;
            if spatial {
                space.push((f[0], f[1], Complex64::new(f[2], f[3])));
            } else {
                planar.push((f[0], Complex64::new(f[1], f[2])));
            }
        }
        if spatial {
            Self::spatial(&space)
        } else {
            Self::planar(&planar)
        }
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::Tabulated(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(f)
    }

    pub fn is_spatial(&self) -> bool {
        self.dphi.is_some()
    }

    /// Largest grid spacing in degrees.
    pub fn max_spacing_deg(&self) -> f64 {
        self.dtheta.max(self.dphi.unwrap_or(0.0))
    }

    fn at(&self, it: isize, ip: isize) -> Complex64 {
        let it = it.clamp(0, self.n_theta as isize - 1) as usize;
        let ip = ip.rem_euclid(self.n_phi as isize) as usize;
        self.values[it * self.n_phi + ip]
    }

    fn interp(&self, theta_deg: f64, phi_deg: f64) -> Complex64 {
        let u = (theta_deg - self.theta0) / self.dtheta;
        let i = u.floor().clamp(0.0, (self.n_theta - 2) as f64);
        let t = u - i;
        let i = i as isize;
        match self.dphi {
            None => catmull_rom([self.at(i - 1, 0), self.at(i, 0), self.at(i + 1, 0), self.at(i + 2, 0)], t),
            Some(dp) => {
                let v = phi_deg.rem_euclid(360.0) / dp;
                let j = v.floor();
                let s = v - j;
                let j = j as isize;
                let rows: Vec<Complex64> = (-1..=2)
                    .map(|di| {
                        catmull_rom(
                            [self.at(i + di, j - 1), self.at(i + di, j), self.at(i + di, j + 1), self.at(i + di, j + 2)],
                            s,
                        )
                    })
                    .collect();
                catmull_rom([rows[0], rows[1], rows[2], rows[3]], t)
            }
        }
    }
}

fn check_nonzero(values: &[Complex64]) -> Result<()> {
    if values.iter().any(|v| v.norm() == 0.0 || !v.is_finite()) {
        return Err(Error::Tabulated("density values must be finite and nonzero".into()));
    }
    Ok(())
}

fn catmull_rom(p: [Complex64; 4], t: f64) -> Complex64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (p[1] * 2.0
        + (p[2] - p[0]) * t
        + (p[0] * 2.0 - p[1] * 5.0 + p[2] * 4.0 - p[3]) * t2
        + (p[1] * 3.0 - p[0] - p[2] * 3.0 + p[3]) * t3)
        * 0.5
}

/// Shape of the Herglotz density.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityKind {
    /// `a(s) = exp(-A‖s - ⟨s,ω⟩ω‖²)`; `A = 0` is the constant density.
    Gaussian { a: f64 },
    Tabulated(TabulatedDensity),
}

/// A Herglotz density supported on the open hemisphere `S_ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct HerglotzDensity {
    pub kind: DensityKind,
    pub cfg: ScanConfig,
    frame: Option<(Vector, Vector)>,
}

impl HerglotzDensity {
    pub fn gaussian(cfg: &ScanConfig, a: f64) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::InvalidConfig(format!("Gaussian parameter must be >= 0, got {a}")));
        }
        Ok(Self { kind: DensityKind::Gaussian { a }, cfg: cfg.clone(), frame: None })
    }

    /// Constant density on `S_ω`, giving `b ≡ 1`.
    pub fn constant(cfg: &ScanConfig) -> Self {
        Self { kind: DensityKind::Gaussian { a: 0.0 }, cfg: cfg.clone(), frame: None }
    }

    pub fn tabulated(cfg: &ScanConfig, table: TabulatedDensity) -> Result<Self> {
        let frame = match (cfg.d, table.is_spatial()) {
            (2, false) => {
                let w = &cfg.omega;
                Some((w.clone(), crate::geometry::vector(&[-w[1], w[0]])))
            }
            (3, true) => {
                let f = orthonormal_complement(std::slice::from_ref(&cfg.omega), 3);
                Some((f[0].clone(), f[1].clone()))
            }
            (2, true) | (3, false) => {
                return Err(Error::Tabulated(format!("table layout does not match dimension {}", cfg.d)))
            }
            (d, _) => return Err(Error::UnsupportedDimension(d)),
        };
        Ok(Self { kind: DensityKind::Tabulated(table), cfg: cfg.clone(), frame })
    }

    /// Human-readable interpolation class, reported alongside tabulated results.
    pub fn regularity(&self) -> &'static str {
        match self.kind {
            DensityKind::Gaussian { .. } => "analytic",
            DensityKind::Tabulated(_) => "C1 piecewise cubic (Catmull-Rom); C2 not certified",
        }
    }

    /// Evaluates `a(s)`; `s` is snapped onto the sphere first.
    pub fn eval(&self, s: &Vector) -> Result<Complex64> {
        let s = self.cfg.snap(s)?;
        Ok(self.eval_raw(&s))
    }

    /// Evaluates `a` at a point assumed to be on the sphere.
    pub(crate) fn eval_raw(&self, s: &Vector) -> Complex64 {
        let cfg = &self.cfg;
        let c = s.dot(&cfg.omega);
        if c <= cfg.tol {
            return Complex64::new(0.0, 0.0);
        }
        match &self.kind {
            DensityKind::Gaussian { a } => {
                let perp2 = (cfg.k0 * cfg.k0 - c * c).max(0.0);
                Complex64::new((-a * perp2).exp(), 0.0)
            }
            DensityKind::Tabulated(t) => {
                let (f0, f1) = self.frame.as_ref().expect("tabulated density has a frame");
                if cfg.d == 2 {
                    let theta = s.dot(f1).atan2(s.dot(f0)).to_degrees();
                    t.interp(theta, 0.0)
                } else {
                    let theta = (c / s.norm()).clamp(-1.0, 1.0).acos().to_degrees();
                    let phi = s.dot(f1).atan2(s.dot(f0)).to_degrees();
                    t.interp(theta, phi)
                }
            }
        }
    }
}

/// `a(s)` for a point on the sphere.
pub fn density_eval(a: &HerglotzDensity, s: &Vector) -> Result<Complex64> {
    a.eval(s)
}

/// First and (optionally) second derivatives of `b` at a point of `Σ₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct BDerivatives {
    pub value: Complex64,
    pub gradient: CVector,
    pub hessian: Option<CMatrix>,
}

/// Derivatives of `c = log b`.
#[derive(Debug, Clone, PartialEq)]
pub struct CDerivatives {
    pub dc: CVector,
    pub d2c: CMatrix,
}

impl CDerivatives {
    pub fn d1(&self, u: &Vector) -> Complex64 {
        self.dc.iter().zip(u.iter()).map(|(g, x)| g * *x).sum()
    }

    pub fn d2(&self, u: &Vector, v: &Vector) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..u.len() {
            for j in 0..v.len() {
                acc += self.d2c[(i, j)] * (u[i] * v[j]);
            }
        }
        acc
    }
}

/// Outcome of the gradient condition with its numeric margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientCondition {
    pub holds: bool,
    pub margin: f64,
    pub threshold: f64,
}

/// The coupling coefficient `b(χ̃σ) = a(σ)/a(H_νσ)` on `Σ_{2,χ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingCoefficient {
    pub density: HerglotzDensity,
    pub cond_tol: f64,
}

impl CouplingCoefficient {
    pub fn new(density: HerglotzDensity) -> Self {
        Self { density, cond_tol: DEFAULT_COND_TOL }
    }

    pub fn with_cond_tol(mut self, cond_tol: f64) -> Self {
        self.cond_tol = cond_tol;
        self
    }

    pub fn cfg(&self) -> &ScanConfig {
        &self.density.cfg
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.density.kind, DensityKind::Gaussian { a } if a == 0.0)
    }

    /// `b(x)` for `x ∈ Σ_{2,χ}`.
    pub fn eval(&self, x: &Vector) -> Result<Complex64> {
        let sigma = self.radial_foot(x)?;
        Ok(self.eval_sigma(&sigma))
    }

    /// `b(σ)` for a sphere point already known to lie in `Σ₂`.
    pub(crate) fn eval_sigma(&self, sigma: &Vector) -> Complex64 {
        let cfg = self.cfg();
        match self.density.kind {
            DensityKind::Gaussian { a } => {
                let p = sigma.dot(&cfg.omega);
                let q = sigma.dot(&cfg.reflected_omega());
                Complex64::new((-a * (q * q - p * p)).exp(), 0.0)
            }
            DensityKind::Tabulated(_) => {
                self.density.eval_raw(sigma) / self.density.eval_raw(&cfg.reflect(sigma))
            }
        }
    }

    /// `k0·x/‖x‖`, checking `x ∈ Σ_{2,χ}`.
    fn radial_foot(&self, x: &Vector) -> Result<Vector> {
        let cfg = self.cfg();
        cfg.check_dim(x)?;
        let n = x.norm();
        let r = n / cfg.k0;
        if !(r > 1.0 - cfg.chi && r < 1.0 + cfg.chi) {
            return Err(Error::OutsideDomain);
        }
        let sigma = x * (cfg.k0 / n);
        if !cfg.in_sigma2(&sigma) {
            return Err(Error::OutsideDomain);
        }
        Ok(sigma)
    }

    fn check_sigma2(&self, sigma: &Vector) -> Result<Vector> {
        let s = self.cfg().snap(sigma).map_err(|_| Error::OutsideDomain)?;
        if !self.cfg().in_sigma2(&s) {
            return Err(Error::OutsideDomain);
        }
        Ok(s)
    }

    /// `∇b(σ)` and, for `order == 2`, the Hessian of the radially extended `b`.
    pub fn derivatives(&self, sigma: &Vector, order: u8) -> Result<BDerivatives> {
        let s = self.check_sigma2(sigma)?;
        match self.density.kind {
            DensityKind::Gaussian { a } => Ok(self.gaussian_derivatives(a, &s, order)),
            DensityKind::Tabulated(ref t) => {
                if order >= 2 && t.max_spacing_deg() > 1.0 + 1e-12 {
                    return Err(Error::Tabulated(format!(
                        "second derivatives need grid spacing <= 1 degree, got {}",
                        t.max_spacing_deg()
                    )));
                }
                self.fd_derivatives(&s, order)
            }
        }
    }

    fn gaussian_derivatives(&self, a: f64, x: &Vector, order: u8) -> BDerivatives {
        let cfg = self.cfg();
        let d = cfg.d;
        let w = &cfg.omega;
        let wr = cfg.reflected_omega();
        // f(x) = xᵀMx / xᵀx with M = ωᵣωᵣᵀ - ωωᵀ, b = exp(-A k0² f)
        let m = &wr * wr.transpose() - w * w.transpose();
        let dd = x.norm_squared();
        let mx = &m * x;
        let nn = x.dot(&mx);
        let scale = -a * cfg.k0 * cfg.k0;
        let value = (scale * nn / dd).exp();
        let grad_f = &mx * (2.0 / dd) - x * (2.0 * nn / (dd * dd));
        let grad_g = &grad_f * scale;
        let to_c = |v: f64| Complex64::new(v, 0.0);
        let gradient = grad_g.map(|g| to_c(value * g));
        let hessian = (order >= 2).then(|| {
            let xxt = x * x.transpose();
            let hess_f = &m * (2.0 / dd)
                - (&mx * x.transpose() + x * mx.transpose()) * (4.0 / (dd * dd))
                - DMatrix::<f64>::identity(d, d) * (2.0 * nn / (dd * dd))
                + xxt * (8.0 * nn / (dd * dd * dd));
            let hess_g = hess_f * scale;
            let hb = (hess_g + &grad_g * grad_g.transpose()) * value;
            hb.map(to_c)
        });
        BDerivatives { value: to_c(value), gradient, hessian }
    }

    fn fd_derivatives(&self, sigma: &Vector, order: u8) -> Result<BDerivatives> {
        let cfg = self.cfg();
        let d = cfg.d;
        let h = FD_GRADIENT_STEP * cfg.k0;
        let value = self.eval(sigma)?;
        let mut gradient = CVector::zeros(d);
        for i in 0..d {
            let mut p = sigma.clone();
            let mut q = sigma.clone();
            p[i] += h;
            q[i] -= h;
            gradient[i] = (self.eval(&p)? - self.eval(&q)?) / (2.0 * h);
        }
        let hessian = if order >= 2 {
            let h = FD_HESSIAN_STEP * cfg.k0;
            let mut hm = CMatrix::zeros(d, d);
            for i in 0..d {
                for j in i..d {
                    let at = |si: f64, sj: f64| {
                        let mut p = sigma.clone();
                        p[i] += si * h;
                        p[j] += sj * h;
                        self.eval(&p)
                    };
                    let v = (at(1.0, 1.0)? - at(1.0, -1.0)? - at(-1.0, 1.0)? + at(-1.0, -1.0)?) / (4.0 * h * h);
                    hm[(i, j)] = v;
                    hm[(j, i)] = v;
                }
            }
            Some(hm)
        } else {
            None
        };
        Ok(BDerivatives { value, gradient, hessian })
    }

    /// `Dc` and `D²c` for `c = log b` at `σ ∈ Σ₂`.
    pub fn log_derivatives(&self, sigma: &Vector) -> Result<CDerivatives> {
        let bd = self.derivatives(sigma, 2)?;
        let b = bd.value;
        let h = bd.hessian.expect("order 2 requested");
        let dc = bd.gradient.map(|g| g / b);
        let d = dc.len();
        let mut d2c = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                d2c[(i, j)] = h[(i, j)] / b - dc[i] * dc[j];
            }
        }
        Ok(CDerivatives { dc, d2c })
    }

    /// `∇b(σ) ∉ ℂ π_σ ν`, thresholded at `cond_tol`.
    ///
    /// In ℝ³ the margin is `|Db(σ)(ν×σ)|`. Otherwise it is the smallest singular
    /// value of the pair `(π_σ∇b(σ), π_σν/‖π_σν‖)`.
    pub fn gradient_condition(&self, sigma: &Vector) -> Result<GradientCondition> {
        let s = self.check_sigma2(sigma)?;
        let cfg = self.cfg();
        let bd = self.derivatives(&s, 1)?;
        let margin = if cfg.d == 3 {
            let t = cross3(&cfg.nu, &s);
            bd.gradient.iter().zip(t.iter()).map(|(g, x)| g * *x).sum::<Complex64>().norm()
        } else {
            let p = project_orthogonal(&s, &cfg.nu);
            let pn = p.norm();
            let s2 = s.norm_squared();
            let gs: Complex64 = bd.gradient.iter().zip(s.iter()).map(|(g, x)| g * *x).sum();
            let g: CVector = &bd.gradient - s.map(|x| Complex64::new(x, 0.0)) * (gs / s2);
            let gnorm2: f64 = g.iter().map(|z| z.norm_sqr()).sum();
            if pn < 1e-14 {
                gnorm2.sqrt()
            } else {
                let u = p / pn;
                let gu: Complex64 = g.iter().zip(u.iter()).map(|(z, x)| z * *x).sum();
                let r2: f64 = g.iter().zip(u.iter()).map(|(z, x)| (z - gu * *x).norm_sqr()).sum();
                // Gram matrix [[‖g‖², ⟨u,g⟩], [⟨g,u⟩, 1]]: det = ‖g - ⟨g,u⟩u‖²
                let tr = gnorm2 + 1.0;
                let disc = ((gnorm2 - 1.0).powi(2) + 4.0 * gu.norm_sqr()).sqrt();
                let lmax = 0.5 * (tr + disc);
                (r2 / lmax).sqrt()
            }
        };
        Ok(GradientCondition { holds: margin > self.cond_tol, margin, threshold: self.cond_tol })
    }
}

/// `b(x)` for `x ∈ Σ_{2,χ}`.
pub fn coupling_b(bc: &CouplingCoefficient, x: &Vector) -> Result<Complex64> {
    bc.eval(x)
}

pub fn coupling_b_derivatives(bc: &CouplingCoefficient, sigma: &Vector, order: u8) -> Result<BDerivatives> {
    bc.derivatives(sigma, order)
}

pub fn gradient_condition(bc: &CouplingCoefficient, sigma: &Vector) -> Result<GradientCondition> {
    bc.gradient_condition(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{polar, vector};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn cfg_a() -> ScanConfig {
        ScanConfig::planar(1.0, 90.0, 45.0, 0.5).unwrap()
    }

    fn cfg_b() -> ScanConfig {
        ScanConfig::new(3, 1.0, vector(&[0.0, 0.0, 1.0]), vector(&[0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2]), 0.5).unwrap()
    }

    #[test]
    fn density_examples() {
        let a = HerglotzDensity::gaussian(&cfg_a(), 1.0).unwrap();
        assert!((a.eval(&vector(&[0.0, 1.0])).unwrap().re - 1.0).abs() < 1e-15);
        assert_eq!(a.eval(&vector(&[1.0, 0.0])).unwrap().norm(), 0.0);
        let s = vector(&[60f64.to_radians().sin(), 60f64.to_radians().cos()]);
        assert!((a.eval(&s).unwrap().re - (-0.75f64).exp()).abs() < 1e-15);
        assert!(matches!(a.eval(&vector(&[0.0, 2.0])), Err(Error::InvalidSpherePoint { .. })));
    }

    #[test]
    fn coupling_examples() {
        let bc = CouplingCoefficient::new(HerglotzDensity::gaussian(&cfg_a(), 1.0).unwrap());
        let s = polar(1.0, 120.0);
        let oracle = bc.density.eval(&s).unwrap() / bc.density.eval(&polar(1.0, 150.0)).unwrap();
        let b = bc.eval(&s).unwrap();
        assert!((b - oracle).norm() < 1e-14);
        assert!((b.re - 0.5f64.exp()).abs() < 1e-14);
        assert!((bc.eval(&(&s * 1.2)).unwrap() - b).norm() < 1e-14);
        assert!(matches!(bc.eval(&(&s * 1.6)), Err(Error::OutsideDomain)));
        assert!(matches!(bc.eval(&polar(1.0, 45.0)), Err(Error::OutsideDomain)));
        // σ ∈ ν^⊥ ∩ Σ₂: 135°
        assert!((bc.eval(&polar(1.0, 135.0)).unwrap().re - 1.0).abs() < 1e-14);
    }

    fn fd_grad(bc: &CouplingCoefficient, s: &Vector) -> CVector {
        let h = 1e-6;
        CVector::from_iterator(
            s.len(),
            (0..s.len()).map(|i| {
                let mut p = s.clone();
                let mut q = s.clone();
                p[i] += h;
                q[i] -= h;
                (bc.eval(&p).unwrap() - bc.eval(&q).unwrap()) / (2.0 * h)
            }),
        )
    }

    #[test]
    fn gaussian_gradient_matches_differences() {
        let bc = CouplingCoefficient::new(HerglotzDensity::gaussian(&cfg_a(), 1.0).unwrap());
        for ang in [100.0, 120.0, 135.0, 150.0] {
            let s = polar(1.0, ang);
            let bd = bc.derivatives(&s, 2).unwrap();
            let fd = fd_grad(&bc, &s);
            assert!((&bd.gradient - &fd).norm() < 1e-6, "angle {ang}");
            let radial: Complex64 = bd.gradient.iter().zip(s.iter()).map(|(g, x)| g * *x).sum();
            assert!(radial.norm() < 1e-13);
            assert!(bd.hessian.unwrap().iter().all(|z| z.is_finite()));
        }
    }

    #[test]
    fn gradient_condition_examples() {
        let cfg = cfg_b();
        let constant = CouplingCoefficient::new(HerglotzDensity::constant(&cfg));
        let bc = CouplingCoefficient::new(HerglotzDensity::gaussian(&cfg, 1.0).unwrap());
        let t = 0.6f64;
        let s = vector(&[0.5 * t.sin(), -0.8 * t.sin(), t.cos()]).normalize();
        let gc = bc.gradient_condition(&s).unwrap();
        assert!(gc.holds);
        // oracle: directional difference along ν×σ
        let dir = cross3(&cfg.nu, &s);
        let h = 1e-6;
        let fd = (bc.eval(&(&s + &dir * h)).unwrap() - bc.eval(&(&s - &dir * h)).unwrap()) / (2.0 * h);
        assert!((fd.norm() - gc.margin).abs() < 1e-6);
        assert!(!constant.gradient_condition(&s).unwrap().holds);
        // σ in span{ν, ω} has σ₁ = 0 and the derivative vanishes
        let s0 = vector(&[0.0, -0.3, 1.0]).normalize();
        assert!(!bc.gradient_condition(&s0).unwrap().holds);
    }

    #[test]
    fn tabulated_matches_gaussian() {
        let cfg = cfg_a();
        let g = HerglotzDensity::gaussian(&cfg, 1.0).unwrap();
        let mut csv = String::from("theta_deg,re,im\n");
        for i in 0..=720 {
            let th = -90.0 + 0.25 * i as f64;
            let c = th.to_radians().cos();
            let v = if c > 0.0 { (-(1.0 - c * c)).exp() } else { (-1.0f64).exp() };
            csv.push_str(&format!("{th},{v},0\n"));
        }
        let tab = TabulatedDensity::from_csv_reader(csv.as_bytes()).unwrap();
        let t = HerglotzDensity::tabulated(&cfg, tab).unwrap();
        for ang in [10.0, 45.0, 90.0, 133.0, 170.0] {
            let s = polar(1.0, ang);
            assert!((t.eval(&s).unwrap() - g.eval(&s).unwrap()).norm() < 1e-6, "angle {ang}");
        }
        assert_eq!(t.eval(&polar(1.0, -30.0)).unwrap().norm(), 0.0);
        let bt = CouplingCoefficient::new(t);
        let bg = CouplingCoefficient::new(g);
        let s = polar(1.0, 120.0);
        let dt = bt.derivatives(&s, 2).unwrap();
        let dg = bg.derivatives(&s, 2).unwrap();
        assert!((&dt.gradient - &dg.gradient).norm() < 1e-4);
        assert!((dt.hessian.unwrap() - dg.hessian.unwrap()).norm() < 1e-2);
    }

    #[test]
    fn tabulated_rejects_bad_header() {
        let err = TabulatedDensity::from_csv_reader("theta,re,im\n0,1,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Tabulated(_)));
    }
}
