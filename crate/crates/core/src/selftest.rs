//! Small seeded invariant suites, run by the `selftest` subcommand.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::appendix::{appendix_coeffs, degeneracy_identity, ring_probes};
use crate::coupling::{lambda_interval, membership_flags, sigma1_representation, tilde_y_pair};
use crate::error::{Error, Result};
use crate::forward::{Blob, Phantom, Simulator};
use crate::geometry::{cross3, polar, vector, ScanConfig, Vector};
use crate::graph2d::build_component;
use crate::herglotz::{CouplingCoefficient, HerglotzDensity};
use crate::highdim::{mechanism_at, DEFAULT_PAIR_TOL};
use crate::recon::{nonuniqueness_certificate, reconstruct_grid};
use crate::sampling::{ball_point, nondegenerate_anchor, planar_config, sigma2_point, upper_point};
use crate::uniqueness3d::{det_search, Anchor, DEFAULT_DET_TOL};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn suite(name: &'static str, r: Result<(bool, String)>) -> SuiteResult {
    match r {
        Ok((passed, detail)) => SuiteResult { name, passed, detail },
        Err(e) => SuiteResult { name, passed: false, detail: format!("error: {e}") },
    }
}

fn graph_census(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut total, mut bad) = (0, 0);
    for _ in 0..3 {
        let cfg = planar_config(&mut rng, 1.0);
        for _ in 0..200 {
            let Some((eta, sigma)) = nondegenerate_anchor(&mut rng, &cfg) else { continue };
            let c = build_component(&cfg, &(&eta - &sigma))?;
            total += 1;
            if c.case_number.is_none() || c.conditions.predicted_shape() != Some(c.shape) {
                bad += 1;
            }
        }
    }
    Ok((bad == 0 && total > 0, format!("{bad} mismatches in {total} components")))
}

fn region_consistency(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = planar_config(&mut rng, 1.0);
    let mut bad = 0;
    for _ in 0..2000 {
        let y = ball_point(&mut rng, 2, 2.0);
        let f = membership_flags(&cfg, &y)?;
        if f.near_boundary {
            continue;
        }
        if f.in_y1 != sigma1_representation(&cfg, &y)?.is_some() {
            bad += 1;
        }
        if let Some((eta, sigma)) = tilde_y_pair(&cfg, &y)? {
            if !membership_flags(&cfg, &(&eta - &sigma))?.in_y1 {
                bad += 1;
            }
        }
    }
    Ok((bad == 0, format!("{bad} disagreements")))
}

fn roundtrip(_seed: u64) -> Result<(bool, String)> {
    let cfg = ScanConfig::planar(1.0, 0.0, 120.0, 0.5)?;
    let bc = CouplingCoefficient::new(HerglotzDensity::gaussian(&cfg, 0.5)?);
    let ph = Phantom::blob(Blob { s: 1.0, c: [1.0, 0.0], x0: vec![0.3, -0.2] });
    let src = Simulator { cfg: &cfg, density: &bc.density, field: &ph };
    let r = reconstruct_grid(&bc, &src, 31, None, Some(&ph))?;
    let err = r.max_rel_err.unwrap_or(f64::INFINITY);
    Ok((err <= 1e-8 && r.count_values() > 0, format!("{} cells recovered, max relative error {err:e}", r.count_values())))
}

fn certificate(seed: u64) -> Result<(bool, String)> {
    let cfg = ScanConfig::planar(1.0, 0.0, 45.0, 0.5)?;
    let bc = CouplingCoefficient::new(HerglotzDensity::gaussian(&cfg, 0.5)?);
    let comp = build_component(&cfg, &(polar(1.0, 130.0) - polar(1.0, -35.0)))?;
    let w = nonuniqueness_certificate(&bc, &comp, seed)?;
    Ok((true, format!("residuals {:e} / {:e}", w.equation_residual, w.forward_residual)))
}

fn spatial_config() -> Result<ScanConfig> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    ScanConfig::new(3, 1.0, vector(&[0.0, 0.0, 1.0]), vector(&[0.0, h, h]), 0.5)
}

/// Random anchor with a comfortable independence margin.
fn spatial_anchor(rng: &mut ChaCha8Rng, cfg: &ScanConfig) -> Option<Anchor> {
    for _ in 0..10_000 {
        let eta = upper_point(rng, cfg);
        let sigma = sigma2_point(rng, cfg)?;
        let y: Vector = &eta - &sigma;
        if sigma.dot(&cross3(&cfg.nu, &y)).abs() > 0.1 {
            if let Ok(a) = Anchor::new(cfg, eta, sigma) {
                return Some(a);
            }
        }
    }
    None
}

fn uniqueness_3d(seed: u64) -> Result<(bool, String)> {
    let cfg = spatial_config()?;
    let bc = CouplingCoefficient::new(HerglotzDensity::gaussian(&cfg, 1.0)?);
    let cst = CouplingCoefficient::new(HerglotzDensity::constant(&cfg));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut found, mut control) = (0, 0);
    for _ in 0..5 {
        let a = spatial_anchor(&mut rng, &cfg).ok_or(Error::OutsideDomain)?;
        if det_search(&bc, &a, 0.05, DEFAULT_DET_TOL).is_ok() {
            found += 1;
        }
        if matches!(det_search(&cst, &a, 0.05, DEFAULT_DET_TOL), Err(Error::NotFound { .. })) {
            control += 1;
        }
    }
    Ok((found == 5 && control == 5, format!("found {found}/5, constant-density NotFound {control}/5")))
}

fn appendix(seed: u64) -> Result<(bool, String)> {
    let cfg = spatial_config()?;
    let cst = CouplingCoefficient::new(HerglotzDensity::constant(&cfg));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_id, mut worst_c) = (0.0f64, 0.0f64);
    for _ in 0..5 {
        let a = spatial_anchor(&mut rng, &cfg).ok_or(Error::OutsideDomain)?;
        for p in ring_probes(&cfg, &a.eta, 0.05, 8) {
            match appendix_coeffs(&cfg, &a.sigma, &p) {
                Ok(c) => worst_id = worst_id.max(c.identity_residual),
                Err(Error::DegenerateDirection) => continue,
                Err(e) => return Err(e),
            }
            worst_c = worst_c.max(degeneracy_identity(&cst, &a.sigma, &p)?.norm());
        }
    }
    Ok((worst_id <= 1e-12 && worst_c <= 1e-14, format!("identities {worst_id:e}, constant density {worst_c:e}")))
}

fn highdim(seed: u64) -> Result<(bool, String)> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let cfg = ScanConfig::new(4, 1.0, vector(&[0.0, 0.0, 0.0, 1.0]), vector(&[0.0, 0.0, h, h]), 0.5)?;
    let bc = CouplingCoefficient::new(HerglotzDensity::gaussian(&cfg, 1.0)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut ok, mut tried) = (0, 0);
    while tried < 5 {
        let eta = upper_point(&mut rng, &cfg);
        let Some(sigma) = sigma2_point(&mut rng, &cfg) else { break };
        let y = &eta - &sigma;
        if !matches!(lambda_interval(&cfg, &y)?, Some(iv) if iv.len() > 1e-3) {
            continue;
        }
        tried += 1;
        if let Ok(d) = mechanism_at(&bc, &y, DEFAULT_PAIR_TOL) {
            let zero = d.homogeneous_solution.iter().all(|x| *x == 0.0);
            if d.gap > 1e-4 && zero {
                ok += 1;
            }
        }
    }
    Ok((ok == tried && tried > 0, format!("{ok}/{tried} points with a discriminating pair")))
}

/// Runs every suite with the given seed.
pub fn run_selftest(seed: u64) -> Vec<SuiteResult> {
    vec![
        suite("graph_census", graph_census(seed)),
        suite("region_consistency", region_consistency(seed)),
        suite("roundtrip_2d", roundtrip(seed)),
        suite("certificate_2d", certificate(seed)),
        suite("uniqueness_3d", uniqueness_3d(seed)),
        suite("appendix_identities", appendix(seed)),
        suite("highdim_mechanism", highdim(seed)),
    ]
}
