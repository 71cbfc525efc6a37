// Local determinant search and 4×4 solve at a spatial anchor.

use std::f64::consts::FRAC_1_SQRT_2;

use scanbeam::error::Result;
use scanbeam::forward::{Blob, FourierField, Phantom, Simulator};
use scanbeam::geometry::{vector, ScanConfig};
use scanbeam::herglotz::{CouplingCoefficient, HerglotzDensity};
use scanbeam::recon::local_recovery;
use scanbeam::uniqueness3d::{det_search, Anchor};

pub fn run_example() -> Result<()> {
    let cfg = ScanConfig::new(3, 1.0, vector(&[0.0, 0.0, 1.0]), vector(&[0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2]), 0.5)?;
    let bc = CouplingCoefficient::new(HerglotzDensity::gaussian(&cfg, 1.0)?);
    let eta = vector(&[0.6, 0.0, 0.8]);
    let sigma = vector(&[0.48, -0.6, 0.64]);
    let anchor = Anchor::new(&cfg, eta, sigma)?;

    let found = det_search(&bc, &anchor, 0.05, 1e-10)?;
    println!("|det| = {:e} after {} evaluations at {:?}", found.abs_det, found.evaluations, found.params);

    let constant = CouplingCoefficient::new(HerglotzDensity::constant(&cfg));
    match det_search(&constant, &anchor, 0.05, 1e-10) {
        Err(e) => println!("constant density: {e}"),
        Ok(r) => println!("constant density unexpectedly found |det| = {:e}", r.abs_det),
    }

    let ph = Phantom::blob(Blob { s: 1.0, c: [1.0, 0.5], x0: vec![0.3, -0.2, 0.1] });
    let src = Simulator { cfg: &cfg, density: &bc.density, field: &ph };
    let r = local_recovery(&bc, &src, &anchor, 0.05, 1e-10)?;
    for (p, v) in r.points.iter().zip(&r.values) {
        let want = ph.value(p);
        println!("  φ{:.4?} = {:.6}  (relative error {:e})", p.as_slice(), v, (v - want).norm() / want.norm());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("uniqueness_3d");
}
