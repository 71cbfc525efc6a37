//! Seeded random configurations and sphere points for tests, self-checks and examples.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::coupling::membership_flags;
use crate::geometry::{polar, ScanConfig, Vector};

const MAX_TRIES: usize = 100_000;

/// Uniform point on the sphere of radius `k0` in `ℝ^d`.
pub fn sphere_point<R: Rng + ?Sized>(rng: &mut R, d: usize, k0: f64) -> Vector {
    loop {
        let v = Vector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(rng)));
        let n: f64 = v.norm();
        if n > 1e-12 {
            return v * (k0 / n);
        }
    }
}

/// Rejection sample of a sphere point satisfying `pred`.
pub fn sphere_point_where<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &ScanConfig,
    pred: impl Fn(&Vector) -> bool,
) -> Option<Vector> {
    (0..MAX_TRIES).map(|_| sphere_point(rng, cfg.d, cfg.k0)).find(|s| pred(s))
}

pub fn sigma2_point<R: Rng + ?Sized>(rng: &mut R, cfg: &ScanConfig) -> Option<Vector> {
    sphere_point_where(rng, cfg, |s| cfg.in_sigma2(s))
}

pub fn upper_point<R: Rng + ?Sized>(rng: &mut R, cfg: &ScanConfig) -> Vector {
    let mut s = sphere_point(rng, cfg.d, cfg.k0);
    if s[cfg.d - 1] < 0.0 {
        s = -s;
    }
    s
}

/// Planar configuration with uniformly random `ω`, `ν` and a non-empty `Σ₂`.
pub fn planar_config<R: Rng + ?Sized>(rng: &mut R, k0: f64) -> ScanConfig {
    loop {
        let w: f64 = rng.random_range(0.0..360.0);
        let n: f64 = rng.random_range(0.0..360.0);
        let cfg = ScanConfig::planar(k0, w, n, 0.5).expect("unit directions");
        let c = polar(1.0, w).dot(&polar(1.0, n)).abs();
        if c < 0.95 && c > 0.05 {
            return cfg;
        }
    }
}

/// Pair `(η, σ) ∈ S_{e_d} × Σ₂` with `y = η - σ` a non-degenerate point of `𝒴₂`.
pub fn nondegenerate_anchor<R: Rng + ?Sized>(rng: &mut R, cfg: &ScanConfig) -> Option<(Vector, Vector)> {
    for _ in 0..MAX_TRIES {
        let eta = upper_point(rng, cfg);
        let sigma = sigma2_point(rng, cfg)?;
        let y = &eta - &sigma;
        match membership_flags(cfg, &y) {
            Ok(f) if f.nondegenerate && !f.near_boundary => return Some((eta, sigma)),
            _ => {}
        }
    }
    None
}

/// Uniform point in the disc/ball of radius `r`.
pub fn ball_point<R: Rng + ?Sized>(rng: &mut R, d: usize, r: f64) -> Vector {
    let u: f64 = rng.random();
    sphere_point(rng, d, r * u.powf(1.0 / d as f64))
}
