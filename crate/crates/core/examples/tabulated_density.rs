// Reconstruction with a density given as a table instead of a formula.

use num_complex::Complex64;

use scanbeam::error::Result;
use scanbeam::forward::{Blob, Phantom, Simulator};
use scanbeam::geometry::ScanConfig;
use scanbeam::herglotz::{CouplingCoefficient, HerglotzDensity, TabulatedDensity};
use scanbeam::recon::reconstruct_grid;

pub fn run_example() -> Result<()> {
    let cfg = ScanConfig::planar(1.0, 0.0, 120.0, 0.5)?;
    // angles are measured from ω
    let csv: String = std::iter::once("theta_deg,re,im\n".to_string())
        .chain((0..=180).map(|k| {
            let t = -90.0 + k as f64;
            let a = Complex64::from_polar(1.0 + 0.3 * t.to_radians().cos(), 0.2 * t.to_radians());
            format!("{t},{},{}\n", a.re, a.im)
        }))
        .collect();
    let table = TabulatedDensity::from_csv_reader(csv.as_bytes())?;
    let dens = HerglotzDensity::tabulated(&cfg, table)?;
    println!("regularity: {}", dens.regularity());
    let bc = CouplingCoefficient::new(dens);
    let ph = Phantom::blob(Blob { s: 1.0, c: [1.0, 0.0], x0: vec![0.3, -0.2] });
    let src = Simulator { cfg: &cfg, density: &bc.density, field: &ph };
    let r = reconstruct_grid(&bc, &src, 41, None, Some(&ph))?;
    println!("{} cells recovered, max relative error {:e}", r.count_values(), r.max_rel_err.unwrap_or(f64::NAN));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("tabulated_density");
}
