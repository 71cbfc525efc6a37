// Region map of a planar scan: which Fourier samples the data determine.
//
// ```text
// cargo run --example regions_2d
// ```

use scanbeam::error::Result;
use scanbeam::geometry::ScanConfig;
use scanbeam::region::{region_map, RegionLabel};

pub fn run_example() -> Result<()> {
    // beam along e1, scan normal at 120°
    let cfg = ScanConfig::planar(1.0, 0.0, 120.0, 0.5)?;
    let map = region_map(&cfg, 61, None, None)?;
    for l in RegionLabel::ALL {
        println!("{:>12?} {:5}", l, map.count(l));
    }
    // coarse preview, top row is the largest y
    let glyph = |l: RegionLabel| match l {
        RegionLabel::Outside => ' ',
        RegionLabel::Y1Only => '.',
        RegionLabel::Y1AndY2 => ':',
        RegionLabel::TildeY => '~',
        RegionLabel::Y2NonUnique => '#',
        RegionLabel::Degenerate => '!',
    };
    for iy in (0..map.n).rev().step_by(3) {
        let row: String = (0..map.n).step_by(2).map(|ix| glyph(map.label(ix, iy))).collect();
        println!("{row}");
    }
    let mut pgm = Vec::new();
    map.write_pgm(&mut pgm)?;
    println!("pgm: {} bytes", pgm.len());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("regions_2d");
}
