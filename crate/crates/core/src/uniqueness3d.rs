//! Local 4×4 systems around a point of `𝒴₂` in three dimensions.
//!
//! For an anchor `y = η - σ`, `z = η - H_νσ` and small `(w, δ, ε)` the pair
//! `(η̂, σ̂)` solves `y + w + δν = η̂ - σ̂`, `z + w + εν = η̂ - H_νσ̂`. Four such
//! pairs give a closed system for `g` at `y+w`, `y+w+δν`, `z+w`, `z+w+εν`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{cross3, ScanConfig, Vector};
use crate::herglotz::{CMatrix, CVector, CouplingCoefficient};

pub const NEWTON_MAX_ITER: usize = 50;
pub const NEWTON_TOL_REL: f64 = 1e-12;
pub const DEFAULT_NBHD_RADIUS_REL: f64 = 0.05;
pub const DEFAULT_DET_TOL: f64 = 1e-10;
const MAX_HALVINGS: usize = 30;

/// Perturbation parameters `(w, δ, ε)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Params {
    pub w: [f64; 3],
    pub delta: f64,
    pub eps: f64,
}

impl Params {
    pub fn new(w: [f64; 3], delta: f64, eps: f64) -> Self {
        Self { w, delta, eps }
    }

    pub fn zero() -> Self {
        Self::new([0.0; 3], 0.0, 0.0)
    }

    pub fn norm(&self) -> f64 {
        (self.w.iter().map(|x| x * x).sum::<f64>() + self.delta * self.delta + self.eps * self.eps).sqrt()
    }

    fn as_array(&self) -> [f64; 5] {
        [self.w[0], self.w[1], self.w[2], self.delta, self.eps]
    }

    fn from_array(a: [f64; 5]) -> Self {
        Self::new([a[0], a[1], a[2]], a[3], a[4])
    }

    fn with(&self, delta: f64, eps: f64) -> Self {
        Self::new(self.w, delta, eps)
    }
}

/// An anchor `(η, σ)` with `η ∈ S_{e₃}`, `σ ∈ Σ₂` and `η, σ, ν` independent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Anchor {
    pub eta: Vector,
    pub sigma: Vector,
}

impl Anchor {
    pub fn new(cfg: &ScanConfig, eta: Vector, sigma: Vector) -> Result<Self> {
        if cfg.d != 3 {
            return Err(Error::UnsupportedDimension(cfg.d));
        }
        let eta = cfg.snap(&eta)?;
        let sigma = cfg.snap(&sigma)?;
        if !cfg.in_upper(&eta) || !cfg.in_sigma2(&sigma) {
            return Err(Error::OutsideDomain);
        }
        let y = &eta - &sigma;
        // η, σ, ν independent ⟺ ⟨σ, ν×y⟩ ≠ 0
        if sigma.dot(&cross3(&cfg.nu, &y)).abs() <= cfg.tol * cfg.k0 * cfg.k0 {
            return Err(Error::DegenerateAnchor);
        }
        Ok(Self { eta, sigma })
    }

    pub fn y(&self) -> Vector {
        &self.eta - &self.sigma
    }

    pub fn z(&self, cfg: &ScanConfig) -> Vector {
        &self.eta - cfg.reflect(&self.sigma)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HatSolution {
    pub eta_hat: Vector,
    pub sigma_hat: Vector,
    pub params: Params,
    pub residual: f64,
    pub iterations: usize,
}

fn newton_residual(cfg: &ScanConfig, a: &Anchor, target: &Vector, lam: f64, x: &DVector<f64>) -> DVector<f64> {
    let k0 = cfg.k0;
    let mut f = DVector::zeros(6);
    for i in 0..3 {
        f[i] = x[i] - x[3 + i] - target[i];
    }
    let sn: f64 = (0..3).map(|i| x[3 + i] * cfg.nu[i]).sum();
    f[3] = 2.0 * sn - lam;
    let e2: f64 = (0..3).map(|i| x[i] * x[i]).sum();
    let s2: f64 = (0..3).map(|i| x[3 + i] * x[3 + i]).sum();
    f[4] = (e2 - k0 * k0) / (2.0 * k0);
    f[5] = (s2 - k0 * k0) / (2.0 * k0);
    let _ = a;
    f
}

/// Solves for `(η̂, σ̂)(w, δ, ε)` by damped Newton started at `(η, σ)`.
pub fn newton_hat(cfg: &ScanConfig, anchor: &Anchor, p: &Params) -> Result<HatSolution> {
    let k0 = cfg.k0;
    let nu = &cfg.nu;
    let w = Vector::from_column_slice(&p.w);
    let target = anchor.y() + &w + nu * p.delta;
    let lam = 2.0 * anchor.sigma.dot(nu) + p.eps - p.delta;
    let mut x = DVector::from_iterator(6, anchor.eta.iter().chain(anchor.sigma.iter()).copied());
    let tol = NEWTON_TOL_REL * k0;
    let mut f = newton_residual(cfg, anchor, &target, lam, &x);
    let mut res = f.norm();
    let mut iterations = 0;
    while res > tol {
        if iterations == NEWTON_MAX_ITER {
            return Err(Error::NewtonDiverged { residual: res, iterations });
        }
        let mut jac = DMatrix::<f64>::zeros(6, 6);
        for i in 0..3 {
            jac[(i, i)] = 1.0;
            jac[(i, 3 + i)] = -1.0;
            jac[(3, 3 + i)] = 2.0 * nu[i];
            jac[(4, i)] = x[i] / k0;
            jac[(5, 3 + i)] = x[3 + i] / k0;
        }
        let Some(step) = jac.lu().solve(&f) else {
            return Err(Error::NewtonDiverged { residual: res, iterations });
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let cand = &x - &step * t;
            let fc = newton_residual(cfg, anchor, &target, lam, &cand);
            let rc = fc.norm();
            if rc < res || rc <= tol {
                x = cand;
                f = fc;
                res = rc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        if !accepted {
            return Err(Error::NewtonDiverged { residual: res, iterations });
        }
    }
    let eta_hat = Vector::from_iterator(3, x.iter().take(3).copied());
    let sigma_hat = Vector::from_iterator(3, x.iter().skip(3).copied());
    // both defining relations, checked directly
    let z_rel = anchor.z(cfg) + &w + nu * p.eps - (&eta_hat - cfg.reflect(&sigma_hat));
    let y_rel = &target - (&eta_hat - &sigma_hat);
    let residual = res.max(z_rel.norm()).max(y_rel.norm());
    if !cfg.in_sigma2(&sigma_hat) || !cfg.in_upper(&eta_hat) {
        return Err(Error::LeftDomain);
    }
    Ok(HatSolution { eta_hat, sigma_hat, params: p.clone(), residual, iterations })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSystem {
    /// Rows `(b₁,0,1,0)`, `(b₂,0,0,1)`, `(0,b₃,1,0)`, `(0,b₄,0,1)`.
    pub matrix: CMatrix,
    /// `y+w`, `y+w+δν`, `z+w`, `z+w+εν`.
    pub points: [Vector; 4],
    /// Solutions at `(w,0,0)`, `(w,0,ε)`, `(w,δ,0)`, `(w,δ,ε)`.
    pub hats: [HatSolution; 4],
    pub b: [Complex64; 4],
    pub det: Complex64,
    /// `b₂b₃ - b₁b₄`.
    pub det_cofactor: Complex64,
    pub rhs: Option<CVector>,
}

impl LocalSystem {
    /// Solves `B g = rhs` (or the homogeneous system).
    pub fn solve(&self) -> Result<CVector> {
        let rhs = self.rhs.clone().unwrap_or_else(|| CVector::zeros(4));
        if self.det.norm() == 0.0 {
            return Err(Error::NotFound { best_abs_det: 0.0, det_tol: 0.0 });
        }
        self.matrix.clone().lu().solve(&rhs).ok_or(Error::NotFound { best_abs_det: self.det.norm(), det_tol: 0.0 })
    }
}

fn hat_params(p: &Params) -> [Params; 4] {
    [p.with(0.0, 0.0), p.with(0.0, p.eps), p.with(p.delta, 0.0), p.with(p.delta, p.eps)]
}

/// Assembles `B(w, δ, ε)`; `rhs` maps each `(η̂, σ̂)` to its right-hand side.
pub fn local_system(
    bc: &CouplingCoefficient,
    anchor: &Anchor,
    p: &Params,
    rhs: Option<&dyn Fn(&HatSolution) -> Complex64>,
) -> Result<LocalSystem> {
    let cfg = bc.cfg();
    let ps = hat_params(p);
    let hats: Vec<HatSolution> = ps.iter().map(|q| newton_hat(cfg, anchor, q)).collect::<Result<_>>()?;
    let hats: [HatSolution; 4] = hats.try_into().expect("four solutions");
    let b = [0, 1, 2, 3].map(|i| bc.eval_sigma(&hats[i].sigma_hat));
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let matrix = CMatrix::from_row_slice(
        4,
        4,
        &[b[0], z, one, z, b[1], z, z, one, z, b[2], one, z, z, b[3], z, one],
    );
    let det = matrix.clone().determinant();
    let det_cofactor = b[1] * b[2] - b[0] * b[3];
    let w = Vector::from_column_slice(&p.w);
    let y = anchor.y();
    let zc = anchor.z(cfg);
    let points = [&y + &w, &y + &w + &cfg.nu * p.delta, &zc + &w, &zc + &w + &cfg.nu * p.eps];
    let rhs = rhs.map(|f| CVector::from_iterator(4, hats.iter().map(f)));
    Ok(LocalSystem { matrix, points, hats, b, det, det_cofactor, rhs })
}

fn abs_det(bc: &CouplingCoefficient, anchor: &Anchor, p: &Params) -> Option<f64> {
    let cfg = bc.cfg();
    let mut b = [Complex64::new(0.0, 0.0); 4];
    for (i, q) in hat_params(p).iter().enumerate() {
        let h = newton_hat(cfg, anchor, q).ok()?;
        b[i] = bc.eval_sigma(&h.sigma_hat);
    }
    Some((b[1] * b[2] - b[0] * b[3]).norm())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetSearchResult {
    pub params: Params,
    pub abs_det: f64,
    pub evaluations: usize,
    pub radius: f64,
    pub det_tol: f64,
}

/// Coarse grid over the ball of the given radius in `(w, δ, ε)`, then coordinate-wise golden-section refinement.
pub fn det_search(bc: &CouplingCoefficient, anchor: &Anchor, radius: f64, det_tol: f64) -> Result<DetSearchResult> {
    let r = radius;
    let wv = [-0.5 * r, -0.25 * r, 0.0, 0.25 * r, 0.5 * r];
    let dv = [-0.5 * r, 0.25 * r, 0.5 * r];
    let mut grid = Vec::new();
    for &w0 in &wv {
        for &w1 in &wv {
            for &w2 in &wv {
                for &d in &dv {
                    for &e in &dv {
                        let p = Params::new([w0, w1, w2], d, e);
                        if p.norm() <= r * (1.0 + 1e-12) {
                            grid.push(p);
                        }
                    }
                }
            }
        }
    }
    let vals: Vec<Option<f64>> = grid.par_iter().map(|p| abs_det(bc, anchor, p)).collect();
    let mut evaluations = grid.len() * 4;
    let mut best: Option<(f64, usize)> = None;
    for (i, v) in vals.iter().enumerate() {
        if let Some(v) = v {
            // strict improvement keeps the lexicographically first grid point on ties
            if best.is_none_or(|(b, _)| *v > b) {
                best = Some((*v, i));
            }
        }
    }
    let Some((mut best_val, bi)) = best else {
        return Err(Error::NotFound { best_abs_det: 0.0, det_tol });
    };
    let mut x = grid[bi].as_array();
    if best_val > 0.0 {
        for _sweep in 0..2 {
            for k in 0..5 {
                let others: f64 = (0..5).filter(|j| *j != k).map(|j| x[j] * x[j]).sum();
                let span = (r * r - others).max(0.0).sqrt();
                let f = |t: f64| {
                    let mut y = x;
                    y[k] = t;
                    abs_det(bc, anchor, &Params::from_array(y)).unwrap_or(0.0)
                };
                let (t, v, n) = golden_max(f, -span, span, 20);
                evaluations += 4 * n;
                if v > best_val {
                    best_val = v;
                    x[k] = t;
                }
            }
        }
    }
    if best_val <= det_tol {
        return Err(Error::NotFound { best_abs_det: best_val, det_tol });
    }
    Ok(DetSearchResult { params: Params::from_array(x), abs_det: best_val, evaluations, radius, det_tol })
}

/// Golden-section search for a maximum; returns `(argmax, max, evaluations)`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64, usize) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc, iters + 2)
    } else {
        (d, fd, iters + 2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::vector;
    use crate::herglotz::HerglotzDensity;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn cfg_b() -> ScanConfig {
        ScanConfig::new(3, 1.0, vector(&[0.0, 0.0, 1.0]), vector(&[0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2]), 0.5).unwrap()
    }

    fn anchor(cfg: &ScanConfig) -> Anchor {
        Anchor::new(cfg, vector(&[-0.5, 0.3, 0.8]).normalize(), vector(&[0.5, -0.4, 0.77]).normalize()).unwrap()
    }

    #[test]
    fn newton_fixed_points() {
        let cfg = cfg_b();
        let a = anchor(&cfg);
        let h = newton_hat(&cfg, &a, &Params::zero()).unwrap();
        assert_eq!(h.iterations, 0);
        assert_eq!(h.sigma_hat, a.sigma);
        let h = newton_hat(&cfg, &a, &Params::new([0.0; 3], 0.01, 0.02)).unwrap();
        assert!(h.residual <= 1e-12);
        assert!((h.sigma_hat.norm() - 1.0).abs() < 1e-12 && (h.eta_hat.norm() - 1.0).abs() < 1e-12);

        let eta_t = vector(&[-0.48, 0.33, 0.8]).normalize();
        let w = &eta_t - &a.eta;
        let h = newton_hat(&cfg, &a, &Params::new([w[0], w[1], w[2]], 0.0, 0.0)).unwrap();
        assert!((&h.sigma_hat - &a.sigma).norm() < 1e-10);
        assert!((&h.eta_hat - &eta_t).norm() < 1e-10);
    }

    #[test]
    fn dependent_anchor_rejected() {
        let cfg = cfg_b();
        // σ in span{η, ν}
        let eta = vector(&[0.0, 0.6, 0.8]);
        let sigma = vector(&[0.0, -0.6, 0.8]);
        assert_eq!(Anchor::new(&cfg, eta, sigma).unwrap_err(), Error::DegenerateAnchor);
    }

    #[test]
    fn determinant_examples() {
        let cfg = cfg_b();
        let a = anchor(&cfg);
        let c = CouplingCoefficient::new(HerglotzDensity::constant(&cfg));
        let s = local_system(&c, &a, &Params::new([0.0; 3], 0.05, 0.05), None).unwrap();
        assert_eq!(s.det_cofactor, Complex64::new(0.0, 0.0));
        assert!(s.det.norm() < 1e-15);
        let g = CouplingCoefficient::new(HerglotzDensity::gaussian(&cfg, 1.0).unwrap());
        let s = local_system(&g, &a, &Params::new([0.0; 3], 0.05, 0.05), None).unwrap();
        assert!(s.det.norm() > 0.0);
        assert!((s.det - s.det_cofactor).norm() <= 1e-12 * s.det.norm().max(1e-300) + 1e-15);
        let s0 = local_system(&g, &a, &Params::new([0.01, 0.0, 0.0], 0.0, 0.05), None).unwrap();
        assert!(s0.det_cofactor.norm() < 1e-15);
    }

    #[test]
    fn search_outcomes() {
        let cfg = cfg_b();
        let a = anchor(&cfg);
        let g = CouplingCoefficient::new(HerglotzDensity::gaussian(&cfg, 1.0).unwrap());
        let r = det_search(&g, &a, 0.05, DEFAULT_DET_TOL).unwrap();
        assert!(r.abs_det > DEFAULT_DET_TOL && r.params.norm() <= 0.05 * (1.0 + 1e-9));
        let c = CouplingCoefficient::new(HerglotzDensity::constant(&cfg));
        assert!(matches!(det_search(&c, &a, 0.05, DEFAULT_DET_TOL), Err(Error::NotFound { .. })));
    }
}
