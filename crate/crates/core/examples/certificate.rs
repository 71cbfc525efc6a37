// Kernel witness for a four-vertex cycle: nonzero `g` with identically zero data.

use scanbeam::error::Result;
use scanbeam::geometry::{polar, ScanConfig};
use scanbeam::graph2d::build_component;
use scanbeam::herglotz::{CouplingCoefficient, HerglotzDensity};
use scanbeam::recon::nonuniqueness_certificate;

pub fn run_example() -> Result<()> {
    let cfg = ScanConfig::planar(1.0, 0.0, 45.0, 0.5)?;
    let bc = CouplingCoefficient::new(HerglotzDensity::gaussian(&cfg, 0.5)?);
    let comp = build_component(&cfg, &(polar(1.0, 130.0) - polar(1.0, -35.0)))?;
    let w = nonuniqueness_certificate(&bc, &comp, 1)?;
    println!("{:?}", w.shape);
    for (p, g) in w.support.iter().zip(&w.values) {
        println!("  g({:+.5}, {:+.5}) = {:+.6} {:+.6}i", p[0], p[1], g.re, g.im);
    }
    println!("equations: {} checked, residual {:e}", w.equations_checked, w.equation_residual);
    println!("forward data: {} pairs, residual {:e}", w.pairs_checked, w.forward_residual);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("certificate");
}
