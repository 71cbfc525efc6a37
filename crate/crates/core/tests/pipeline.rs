use std::f64::consts::FRAC_1_SQRT_2;

use scanbeam::config::RunConfig;
use scanbeam::coupling::{membership_flags, sigma1_representation};
use scanbeam::forward::Simulator;
use scanbeam::geometry::{vector, ScanConfig};
use scanbeam::recon::{reconstruct_grid, Recovered};
use scanbeam::region::{label_point, RegionLabel};

fn spatial() -> ScanConfig {
    ScanConfig::new(3, 1.0, vector(&[0.0, 0.0, 1.0]), vector(&[0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2]), 0.5).unwrap()
}

#[test]
fn points_on_the_scan_normal_line_are_not_directly_measured() {
    // on y = -tν the Σ₁ and upper-hemisphere conditions are complementary
    let cfg = spatial();
    for t in [0.3, 0.8, 1.0776, 1.5] {
        let y = &cfg.nu * -t;
        let f = membership_flags(&cfg, &y).unwrap();
        assert!(!f.in_y1, "t = {t}");
        assert!(sigma1_representation(&cfg, &y).unwrap().is_none());
        let (label, _) = label_point(&cfg, &y, None).unwrap();
        assert!(!label.is_unique(), "t = {t}: {label:?}");
    }
}

#[test]
fn spatial_slice_reconstruction_matches_the_phantom() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/cfg-b.json");
    let rc = RunConfig::from_path(&path).unwrap();
    let bc = rc.coupling().unwrap();
    let cfg = bc.cfg().clone();
    let ph = rc.phantom.clone().unwrap();
    let src = Simulator { cfg: &cfg, density: &bc.density, field: &ph };
    let r = reconstruct_grid(&bc, &src, 15, rc.grid.slice.as_ref(), Some(&ph)).unwrap();
    assert!(r.max_rel_err.unwrap() <= 1e-6, "{:?}", r.max_rel_err);
    let tilde = r
        .cells
        .iter()
        .filter(|c| matches!(c.result, Recovered::Value { .. }))
        .filter(|c| label_point(&cfg, &c.point, Some(&bc)).unwrap().0 == RegionLabel::TildeY)
        .count();
    assert!(tilde > 0);
}
