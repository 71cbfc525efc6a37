// Simulate reduced data for a two-blob phantom and recover its Fourier transform.

use scanbeam::error::Result;
use scanbeam::forward::{Blob, Phantom, Simulator};
use scanbeam::geometry::ScanConfig;
use scanbeam::herglotz::{CouplingCoefficient, HerglotzDensity};
use scanbeam::recon::reconstruct_grid;

pub fn run_example() -> Result<()> {
    let cfg = ScanConfig::planar(1.0, 0.0, 120.0, 0.5)?;
    let bc = CouplingCoefficient::new(HerglotzDensity::gaussian(&cfg, 0.5)?);
    let ph = Phantom {
        blobs: vec![
            Blob { s: 1.0, c: [1.0, 0.0], x0: vec![0.3, -0.2] },
            Blob { s: 0.6, c: [0.0, 0.5], x0: vec![-0.4, 0.1] },
        ],
    };
    let src = Simulator { cfg: &cfg, density: &bc.density, field: &ph };
    let r = reconstruct_grid(&bc, &src, 51, None, Some(&ph))?;
    let mut by_status = std::collections::BTreeMap::new();
    for c in &r.cells {
        *by_status.entry(c.result.status()).or_insert(0usize) += 1;
    }
    println!("{by_status:?}");
    println!("max relative error {:e}", r.max_rel_err.unwrap_or(f64::NAN));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("reconstruct_2d");
}
