//! Closed-form derivatives of `σ̂` at `(η̃ - η, 0, 0)` and the second-order
//! identity that a determinant vanishing near the anchor forces on `c = log b`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{cross3, project_orthogonal, ScanConfig, Vector};
use crate::herglotz::CouplingCoefficient;

/// Coefficients attached to a pair `(σ, η̃)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppendixCoeffs {
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Dual basis to `(ν, η̃ - σ, σ)`.
    pub dual_basis: [Vector; 3],
    /// Coordinates of `η̃` in the basis `σ`, `n/‖n‖²`, `σ×n/‖n‖²` with `n = ν×σ`.
    pub eta_tilde_coords: [f64; 3],
    /// Largest deviation among the coordinate identities for `μ`, `⟨η̃,ν⟩`, `γ` and `β`.
    pub identity_residual: f64,
}

fn check(cfg: &ScanConfig) -> Result<()> {
    if cfg.d != 3 {
        return Err(Error::UnsupportedDimension(cfg.d));
    }
    Ok(())
}

pub fn appendix_coeffs(cfg: &ScanConfig, sigma: &Vector, eta_t: &Vector) -> Result<AppendixCoeffs> {
    check(cfg)?;
    let k0 = cfg.k0;
    let k2 = k0 * k0;
    let nu = &cfg.nu;
    let den = cross3(nu, eta_t).dot(sigma);
    if den.abs() <= 1e-10 * k2 {
        return Err(Error::DegenerateDirection);
    }
    let mu = 1.0 / den;
    let es = cross3(eta_t, sigma);
    let ns = cross3(nu, sigma);
    let en = eta_t.dot(nu);
    let sn = sigma.dot(nu);
    let gamma = (en * es.dot(&ns) - 0.5 * es.norm_squared()) / k2;
    let alpha = sn * gamma;
    let beta = 1.0 / (mu * mu) - (sigma.dot(eta_t) - k2) * gamma;

    let dual_basis = [&es * mu, &ns * (-mu), cross3(nu, &(eta_t - sigma)) * mu];

    let n2 = ns.norm_squared();
    let e1 = eta_t.dot(sigma) / k2;
    let e2 = eta_t.dot(&ns);
    let e3 = eta_t.dot(&cross3(sigma, &ns)) / k2;

    let gamma_c = sn * e1 * e3 - e2 * e2 / (2.0 * n2) + (1.0 - k2 / (2.0 * n2)) * e3 * e3;
    let beta_c = e2 * e2 - k2 * (e1 - 1.0) * gamma;
    let identity_residual = [
        (mu + 1.0 / e2).abs() * e2.abs() * e2.abs(),
        (e1 * sn + e3 - en).abs(),
        (gamma - gamma_c).abs(),
        (beta - beta_c).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    Ok(AppendixCoeffs { mu, alpha, beta, gamma, dual_basis, eta_tilde_coords: [e1, e2, e3], identity_residual })
}

/// `∂_εσ̂`, `∂_δσ̂` and `π_σ ∂_δ∂_εσ̂` at `(η̃ - η, 0, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaHatDerivatives {
    pub d_eps: Vector,
    pub d_delta: Vector,
    pub d_delta_eps_tangent: Vector,
}

pub fn sigma_hat_derivatives(cfg: &ScanConfig, sigma: &Vector, eta_t: &Vector) -> Result<SigmaHatDerivatives> {
    let c = appendix_coeffs(cfg, sigma, eta_t)?;
    let es = cross3(eta_t, sigma);
    let ns = cross3(&cfg.nu, sigma);
    let en = eta_t.dot(&cfg.nu);
    let mu = c.mu;
    let d_eps = &es * (0.5 * mu);
    // -½v₁ - ⟨η̃,ν⟩v₂ with v₂ = -μ ν×σ
    let d_delta = &es * (-0.5 * mu) + &ns * (mu * en);
    let d_delta_eps_tangent = (&es * c.alpha + &ns * c.beta) * (0.5 * mu * mu * mu);
    Ok(SigmaHatDerivatives { d_eps, d_delta, d_delta_eps_tangent })
}

/// `-(1/2μ)D²c(a,a) + (⟨η̃,ν⟩/μ)D²c(a,n) + αDc(a) + βDc(n)` with `a = η̃×σ`, `n = ν×σ`.
///
/// Equals `(2/μ³)·∂_δ∂_ε c(σ̂)` at `(η̃ - η, 0, 0)`, so it vanishes for all nearby `η̃`
/// whenever `det B` does.
pub fn degeneracy_identity(bc: &CouplingCoefficient, sigma: &Vector, eta_t: &Vector) -> Result<Complex64> {
    let cfg = bc.cfg();
    let c = appendix_coeffs(cfg, sigma, eta_t)?;
    let a = cross3(eta_t, sigma);
    let n = cross3(&cfg.nu, sigma);
    let en = eta_t.dot(&cfg.nu);
    let ld = bc.log_derivatives(sigma)?;
    Ok(-ld.d2(&a, &a) / (2.0 * c.mu) + ld.d2(&a, &n) * (en / c.mu) + ld.d1(&a) * c.alpha + ld.d1(&n) * c.beta)
}

/// `n` points `η̃ ∈ S_{e₃}` on a ring of geodesic-ish radius `r` around `η`.
pub fn ring_probes(cfg: &ScanConfig, eta: &Vector, r: f64, n: usize) -> Vec<Vector> {
    let t = crate::geometry::orthonormal_complement(std::slice::from_ref(eta), 3);
    (0..n)
        .filter_map(|k| {
            let th = std::f64::consts::TAU * k as f64 / n as f64;
            let p = eta + (&t[0] * th.cos() + &t[1] * th.sin()) * r;
            let p = &p * (cfg.k0 / p.norm());
            cfg.in_upper(&p).then_some(p)
        })
        .collect()
}

/// Tangential part helper exposed for finite-difference checks.
pub fn tangential(sigma: &Vector, x: &Vector) -> Vector {
    project_orthogonal(sigma, x)
}
