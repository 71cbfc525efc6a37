// Coupling component of a frequency point and its kernel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use scanbeam::error::Result;
use scanbeam::graph2d::{build_component, component_report};
use scanbeam::herglotz::{CouplingCoefficient, HerglotzDensity};
use scanbeam::sampling::{nondegenerate_anchor, planar_config};

pub fn run_example() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut seen = Vec::new();
    // first component of each shape over random geometries
    for _ in 0..10_000 {
        if seen.len() == 4 {
            break;
        }
        let cfg = planar_config(&mut rng, 1.0);
        let bc = CouplingCoefficient::new(HerglotzDensity::gaussian(&cfg, 0.5)?);
        let Some((eta, sigma)) = nondegenerate_anchor(&mut rng, &cfg) else { break };
        let comp = build_component(&cfg, &(&eta - &sigma))?;
        if seen.contains(&comp.shape) {
            continue;
        }
        seen.push(comp.shape);
        let rep = component_report(&cfg, &comp, &bc)?;
        let (w, n) = (cfg.omega[1].atan2(cfg.omega[0]), cfg.nu[1].atan2(cfg.nu[0]));
        println!("ω at {:.1}°, ν at {:.1}°", w.to_degrees(), n.to_degrees());
        println!(
            "  {:?}: case {:?}, kernel dim {}, determined vertices {:?}",
            rep.shape,
            rep.case_number,
            rep.kernel.len(),
            rep.unique_vertices
        );
        for (v, r) in rep.vertices.iter().zip(&rep.roles) {
            println!("    {:?} at ({:+.4}, {:+.4})", r, v[0], v[1]);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("coupling_graph");
}
