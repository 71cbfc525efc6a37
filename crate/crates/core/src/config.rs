//! JSON run configuration.
//!
//! ```json
//! {
//!   "scan": { "d": 2, "k0": 1.0, "omega_deg": 0, "nu_deg": 120, "chi": 0.5 },
//!   "density": { "kind": "gaussian", "a": 0.5 },
//!   "phantom": { "blobs": [{ "s": 1.0, "x0": [0.3, -0.2] }] },
//!   "grid": { "n": 101 },
//!   "seed": 7
//! }
//! ```
//!
//! Directions are given either as vectors (`omega`, `nu`) or as angles in degrees
//! (`omega_deg`, `nu_deg`): a single polar angle in the plane, `[colatitude, azimuth]`
//! from `e₃` in space.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::Phantom;
use crate::geometry::{polar, ScanConfig, Vector};
use crate::herglotz::{CouplingCoefficient, HerglotzDensity, TabulatedDensity, DEFAULT_COND_TOL};
use crate::highdim::DEFAULT_PAIR_TOL;
use crate::region::Slice;
use crate::uniqueness3d::{DEFAULT_DET_TOL, DEFAULT_NBHD_RADIUS_REL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Angles {
    Planar(f64),
    Spherical([f64; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub d: usize,
    #[serde(default = "default_k0")]
    pub k0: f64,
    #[serde(default)]
    pub omega: Option<Vec<f64>>,
    #[serde(default)]
    pub omega_deg: Option<Angles>,
    #[serde(default)]
    pub nu: Option<Vec<f64>>,
    #[serde(default)]
    pub nu_deg: Option<Angles>,
    #[serde(default = "default_chi")]
    pub chi: f64,
    #[serde(default)]
    pub tol: Option<f64>,
}

fn default_k0() -> f64 {
    1.0
}

fn default_chi() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DensitySection {
    Gaussian {
        #[serde(default = "default_a")]
        a: f64,
    },
    Constant,
    /// CSV table; relative paths are resolved against the config file.
    Tabulated { path: PathBuf },
}

fn default_a() -> f64 {
    1.0
}

impl Default for DensitySection {
    fn default() -> Self {
        DensitySection::Gaussian { a: default_a() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub slice: Option<Slice>,
    /// Receiver and beam angles per axis for `simulate`.
    #[serde(default = "default_measurements")]
    pub measurements: usize,
}

fn default_n() -> usize {
    101
}

fn default_measurements() -> usize {
    32
}

impl Default for GridSection {
    fn default() -> Self {
        Self { n: default_n(), slice: None, measurements: default_measurements() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_cond_tol")]
    pub cond_tol: f64,
    #[serde(default = "default_det_tol")]
    pub det_tol: f64,
    #[serde(default = "default_pair_tol")]
    pub pair_tol: f64,
    /// Absolute radius; defaults to `0.05·k0`.
    #[serde(default)]
    pub nbhd_radius: Option<f64>,
}

fn default_cond_tol() -> f64 {
    DEFAULT_COND_TOL
}

fn default_det_tol() -> f64 {
    DEFAULT_DET_TOL
}

fn default_pair_tol() -> f64 {
    DEFAULT_PAIR_TOL
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { cond_tol: DEFAULT_COND_TOL, det_tol: DEFAULT_DET_TOL, pair_tol: DEFAULT_PAIR_TOL, nbhd_radius: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scan: ScanSection,
    #[serde(default)]
    pub density: DensitySection,
    #[serde(default)]
    pub phantom: Option<Phantom>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Label `𝒴₂ \ 𝒴₁` cells in space by the density condition.
    #[serde(default = "yes")]
    pub uniqueness_dim_rule: bool,
    /// Standard deviation of complex Gaussian noise added to simulated data.
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn yes() -> bool {
    true
}

fn direction(d: usize, name: &str, vec: &Option<Vec<f64>>, deg: &Option<Angles>) -> Result<Vector> {
    match (vec, deg) {
        (Some(v), None) => {
            if v.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: v.len() });
            }
            Ok(Vector::from_column_slice(v))
        }
        (None, Some(Angles::Planar(t))) if d == 2 => Ok(polar(1.0, *t)),
        (None, Some(Angles::Spherical([th, ph]))) if d == 3 => {
            let (th, ph) = (th.to_radians(), ph.to_radians());
            Ok(Vector::from_column_slice(&[th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]))
        }
        (None, Some(_)) => Err(Error::InvalidConfig(format!("{name}_deg does not match dimension {d}"))),
        (Some(_), Some(_)) => Err(Error::InvalidConfig(format!("give either {name} or {name}_deg, not both"))),
        (None, None) => Err(Error::InvalidConfig(format!("missing {name}"))),
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must be positive, got {x}")))
    }
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&s)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        positive("cond_tol", t.cond_tol)?;
        positive("det_tol", t.det_tol)?;
        positive("pair_tol", t.pair_tol)?;
        if let Some(r) = t.nbhd_radius {
            positive("nbhd_radius", r)?;
        }
        if let Some(tol) = self.scan.tol {
            positive("tol", tol)?;
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::InvalidConfig(format!("noise must be >= 0, got {}", self.noise)));
        }
        if self.grid.n < 2 || self.grid.measurements < 1 {
            return Err(Error::InvalidConfig("grid sizes are too small".into()));
        }
        let cfg = self.scan_config()?;
        if let Some(s) = &self.grid.slice {
            s.validate(cfg.d)?;
        }
        if let Some(p) = &self.phantom {
            p.validate(cfg.d)?;
        }
        Ok(())
    }

    pub fn scan_config(&self) -> Result<ScanConfig> {
        let s = &self.scan;
        let omega = direction(s.d, "omega", &s.omega, &s.omega_deg)?;
        let nu = direction(s.d, "nu", &s.nu, &s.nu_deg)?;
        let cfg = ScanConfig::new(s.d, s.k0, omega, nu, s.chi)?;
        match s.tol {
            Some(t) => cfg.with_tol(t),
            None => Ok(cfg),
        }
    }

    pub fn density(&self, cfg: &ScanConfig) -> Result<HerglotzDensity> {
        match &self.density {
            DensitySection::Gaussian { a } => HerglotzDensity::gaussian(cfg, *a),
            DensitySection::Constant => Ok(HerglotzDensity::constant(cfg)),
            DensitySection::Tabulated { path } => {
                let p = match &self.base_dir {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                HerglotzDensity::tabulated(cfg, TabulatedDensity::from_csv_path(&p)?)
            }
        }
    }

    pub fn coupling(&self) -> Result<CouplingCoefficient> {
        let cfg = self.scan_config()?;
        Ok(CouplingCoefficient::new(self.density(&cfg)?).with_cond_tol(self.tolerances.cond_tol))
    }

    pub fn nbhd_radius(&self) -> f64 {
        self.tolerances.nbhd_radius.unwrap_or(DEFAULT_NBHD_RADIUS_REL * self.scan.k0)
    }
}
