// Closed-form derivatives of the hatted directions against finite differences,
// and the second-order identity on a ring of receiver frequencies.

use std::f64::consts::FRAC_1_SQRT_2;

use scanbeam::appendix::{appendix_coeffs, degeneracy_identity, ring_probes, sigma_hat_derivatives};
use scanbeam::error::Result;
use scanbeam::geometry::{vector, ScanConfig};
use scanbeam::herglotz::{CouplingCoefficient, HerglotzDensity};
use scanbeam::uniqueness3d::{newton_hat, Anchor, Params};

pub fn run_example() -> Result<()> {
    let cfg = ScanConfig::new(3, 1.0, vector(&[0.0, 0.0, 1.0]), vector(&[0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2]), 0.5)?;
    let anchor = Anchor::new(&cfg, vector(&[0.6, 0.0, 0.8]), vector(&[0.48, -0.6, 0.64]))?;
    let eta_t = ring_probes(&cfg, &anchor.eta, 0.02, 8)[3].clone();
    let c = appendix_coeffs(&cfg, &anchor.sigma, &eta_t)?;
    println!("mu {:.6} alpha {:.6} beta {:.6} gamma {:.6}", c.mu, c.alpha, c.beta, c.gamma);
    println!("coordinate identities {:e}", c.identity_residual);

    let d = &eta_t - &anchor.eta;
    let w = [d[0], d[1], d[2]];
    let h = 1e-5;
    let s = |eps: f64| newton_hat(&cfg, &anchor, &Params::new(w, 0.0, eps)).map(|x| x.sigma_hat);
    let fd = (s(h)? - s(-h)?) / (2.0 * h);
    let an = sigma_hat_derivatives(&cfg, &anchor.sigma, &eta_t)?;
    println!("d/deps: closed form {:.6?}, difference {:e}", an.d_eps.as_slice(), (&fd - &an.d_eps).norm());

    let gauss = CouplingCoefficient::new(HerglotzDensity::gaussian(&cfg, 1.0)?);
    let constant = CouplingCoefficient::new(HerglotzDensity::constant(&cfg));
    for p in ring_probes(&cfg, &anchor.eta, 0.02, 4) {
        println!(
            "  identity: gaussian {:+.3e}, constant {:+.3e}",
            degeneracy_identity(&gauss, &anchor.sigma, &p)?.re,
            degeneracy_identity(&constant, &anchor.sigma, &p)?.re
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("appendix_identities");
}
