// Discriminating pairs in four dimensions: two directions generating the same
// coupled pair with different coefficients pin down both Fourier values.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use scanbeam::error::Result;
use scanbeam::geometry::{vector, ScanConfig};
use scanbeam::herglotz::{CouplingCoefficient, HerglotzDensity};
use scanbeam::highdim::{mechanism_at, DEFAULT_PAIR_TOL};
use scanbeam::sampling::{sigma2_point, upper_point};

pub fn run_example() -> Result<()> {
    let h = FRAC_1_SQRT_2;
    let cfg = ScanConfig::new(4, 1.0, vector(&[0.0, 0.0, 0.0, 1.0]), vector(&[0.0, 0.0, h, h]), 0.5)?;
    let bc = CouplingCoefficient::new(HerglotzDensity::gaussian(&cfg, 1.0)?);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..4 {
        let Some(sigma) = sigma2_point(&mut rng, &cfg) else { break };
        let y = upper_point(&mut rng, &cfg) - sigma;
        match mechanism_at(&bc, &y, DEFAULT_PAIR_TOL) {
            Ok(d) => println!("y {:.3?}: λ {:+.4}, gap {:.3e}, homogeneous {:?}", d.y, d.lambda, d.gap, d.homogeneous_solution),
            Err(e) => println!("y {:.3?}: {e}", y.as_slice()),
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("highdim_pair");
}
