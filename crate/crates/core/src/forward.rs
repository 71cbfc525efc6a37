//! Phantoms with closed-form Fourier transforms and simulated reduced measurements
//! `m̂(η, σ) = a(σ)φ(η-σ) [+ a(H_νσ)φ(η-H_νσ) on Σ₂]`.

use std::io::Write;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ScanConfig, SigmaClass, Vector};
use crate::herglotz::HerglotzDensity;

/// Gaussian blob `f(x) = c·exp(-‖x - x0‖²/(2s²))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Blob {
    pub s: f64,
    #[serde(default = "one")]
    pub c: [f64; 2],
    pub x0: Vec<f64>,
}

fn one() -> [f64; 2] {
    [1.0, 0.0]
}

impl Blob {
    pub fn centered(d: usize, s: f64) -> Self {
        Self { s, c: one(), x0: vec![0.0; d] }
    }

    pub fn amplitude(&self) -> Complex64 {
        Complex64::new(self.c[0], self.c[1])
    }

    pub fn fourier(&self, xi: &Vector) -> Complex64 {
        let d = xi.len() as i32;
        let s2 = self.s * self.s;
        let phase: f64 = xi.iter().zip(&self.x0).map(|(a, b)| a * b).sum();
        let mag = (2.0 * std::f64::consts::PI * s2).powf(d as f64 / 2.0) * (-0.5 * s2 * xi.norm_squared()).exp();
        self.amplitude() * Complex64::from_polar(mag, -phase)
    }
}

/// Sum of blobs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Phantom {
    pub blobs: Vec<Blob>,
}

impl Phantom {
    pub fn blob(b: Blob) -> Self {
        Self { blobs: vec![b] }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        for b in &self.blobs {
            if b.x0.len() != d {
                return Err(Error::InvalidConfig(format!("blob center must have {d} coordinates")));
            }
            if !(b.s > 0.0 && b.s.is_finite()) {
                return Err(Error::InvalidConfig("blob width must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Anything that can be evaluated as `φ(ξ)`.
pub trait FourierField: Sync {
    fn value(&self, xi: &Vector) -> Complex64;
}

impl FourierField for Phantom {
    fn value(&self, xi: &Vector) -> Complex64 {
        self.blobs.iter().map(|b| b.fourier(xi)).sum()
    }
}

impl FourierField for Blob {
    fn value(&self, xi: &Vector) -> Complex64 {
        self.fourier(xi)
    }
}

pub fn phantom_fourier(ph: &Phantom, xi: &Vector) -> Complex64 {
    ph.value(xi)
}

/// `φ + g` for a field `φ` and a perturbation `g`.
pub struct SumField<'a, A: FourierField, B: FourierField> {
    pub a: &'a A,
    pub b: &'a B,
}

impl<A: FourierField, B: FourierField> FourierField for SumField<'_, A, B> {
    fn value(&self, xi: &Vector) -> Complex64 {
        self.a.value(xi) + self.b.value(xi)
    }
}

/// A function supported on finitely many points (matched within `tol`).
#[derive(Debug, Clone, PartialEq)]
pub struct PointField {
    pub points: Vec<Vector>,
    pub values: Vec<Complex64>,
    pub tol: f64,
}

impl FourierField for PointField {
    fn value(&self, xi: &Vector) -> Complex64 {
        self.points
            .iter()
            .zip(&self.values)
            .find(|(p, _)| (*p - xi).norm() <= self.tol)
            .map(|(_, v)| *v)
            .unwrap_or(Complex64::new(0.0, 0.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedMeasurement {
    pub eta: Vector,
    pub sigma: Vector,
    pub value: Complex64,
    pub class: SigmaClass,
}

/// `m̂(η, σ)` for the field `phi`.
pub fn simulate_reduced<F: FourierField + ?Sized>(
    cfg: &ScanConfig,
    density: &HerglotzDensity,
    phi: &F,
    eta: &Vector,
    sigma: &Vector,
) -> Result<ReducedMeasurement> {
    let eta = cfg.snap(eta)?;
    let sigma = cfg.snap(sigma)?;
    if !cfg.in_upper(&eta) {
        return Err(Error::OutsideDomain);
    }
    let class = cfg.sigma_class_raw(&sigma);
    let value = match class {
        SigmaClass::NotInSOmega => return Err(Error::OutsideBeamSupport),
        SigmaClass::Sigma1 => density.eval_raw(&sigma) * phi.value(&(&eta - &sigma)),
        SigmaClass::Sigma2 => {
            let hs = cfg.reflect(&sigma);
            density.eval_raw(&sigma) * phi.value(&(&eta - &sigma)) + density.eval_raw(&hs) * phi.value(&(&eta - &hs))
        }
    };
    Ok(ReducedMeasurement { eta, sigma, value, class })
}

/// Source of reduced measurements, queried on demand.
pub trait DataSource: Sync {
    fn measure(&self, eta: &Vector, sigma: &Vector) -> Result<Complex64>;
}

/// Noise-free data simulated from a field.
pub struct Simulator<'a, F: FourierField> {
    pub cfg: &'a ScanConfig,
    pub density: &'a HerglotzDensity,
    pub field: &'a F,
}

impl<F: FourierField> DataSource for Simulator<'_, F> {
    fn measure(&self, eta: &Vector, sigma: &Vector) -> Result<Complex64> {
        Ok(simulate_reduced(self.cfg, self.density, self.field, eta, sigma)?.value)
    }
}

/// Adds complex Gaussian noise of standard deviation `level` per component.
///
/// The noise at `(η, σ)` is a function of the seed and the query, so repeated
/// and concurrent queries agree.
pub struct Noisy<S: DataSource> {
    pub inner: S,
    pub level: f64,
    pub seed: u64,
}

impl<S: DataSource> DataSource for Noisy<S> {
    fn measure(&self, eta: &Vector, sigma: &Vector) -> Result<Complex64> {
        let v = self.inner.measure(eta, sigma)?;
        let mut h = self.seed ^ 0x9e37_79b9_7f4a_7c15;
        for x in eta.iter().chain(sigma.iter()) {
            h = (h ^ x.to_bits()).wrapping_mul(0x0100_0000_01b3);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(h);
        let n = Normal::new(0.0, self.level).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(v + Complex64::new(n.sample(&mut rng), n.sample(&mut rng)))
    }
}

/// Angles in degrees: the polar angle in the plane, or `(θ, φ)` from `e₃` in space.
pub fn direction_angles(v: &Vector) -> Vec<f64> {
    match v.len() {
        2 => vec![v[1].atan2(v[0]).to_degrees()],
        _ => {
            let r = v.norm();
            vec![(v[2] / r).clamp(-1.0, 1.0).acos().to_degrees(), v[1].atan2(v[0]).to_degrees()]
        }
    }
}

fn fmt_angles(v: &Vector) -> String {
    direction_angles(v).iter().map(|a| a.to_string()).collect::<Vec<_>>().join(";")
}

/// CSV `eta_angles,sigma_angles,re,im,branch`.
pub fn write_measurements<W: Write>(w: W, ms: &[ReducedMeasurement]) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    let io = |e: csv::Error| Error::InvalidConfig(format!("csv write failed: {e}"));
    wr.write_record(["eta_angles", "sigma_angles", "re", "im", "branch"]).map_err(io)?;
    for m in ms {
        let branch = match m.class {
            SigmaClass::Sigma1 => "sigma1",
            SigmaClass::Sigma2 => "sigma2",
            SigmaClass::NotInSOmega => "none",
        };
        wr.write_record([fmt_angles(&m.eta), fmt_angles(&m.sigma), m.value.re.to_string(), m.value.im.to_string(), branch.into()])
            .map_err(io)?;
    }
    wr.flush().map_err(|e| Error::InvalidConfig(format!("csv write failed: {e}")))
}

/// Planar measurement grid: `n` receiver angles in `(0°, 180°)` times `n` beam
/// directions spread over the open half circle around `ω`.
pub fn planar_measurement_grid(cfg: &ScanConfig, n: usize) -> Result<Vec<(Vector, Vector)>> {
    if cfg.d != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: cfg.d });
    }
    let w0 = cfg.omega[1].atan2(cfg.omega[0]).to_degrees();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        let te = (i as f64 + 0.5) * 180.0 / n as f64;
        for j in 0..n {
            let ts = w0 - 90.0 + (j as f64 + 0.5) * 180.0 / n as f64;
            out.push((crate::geometry::polar(cfg.k0, te), crate::geometry::polar(cfg.k0, ts)));
        }
    }
    Ok(out)
}
