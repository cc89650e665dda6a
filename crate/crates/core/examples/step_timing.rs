//! Rough per-step cost of the implicit solve at experiment scale.

use std::time::Instant;

use spde_core::integrator::{simulate_path, Record, SchemeConfig};
use spde_core::model::CubicNonlinearity;
use spde_core::noise::{sample_increments, NoiseSpec};
use spde_core::spectral::{Domain, SpectralField};

fn main() {
    let d = Domain::unit();
    let m = CubicNonlinearity::allen_cahn(5.0);
    for (modes, steps) in [(64usize, 2048usize), (64, 32), (128, 256)] {
        let dt = 1.0 / steps as f64;
        let cfg = SchemeConfig::new(modes, dt, steps, &m, d).unwrap();
        let spec = NoiseSpec::power_law(0.0, modes).unwrap();
        let x0 = SpectralField::project(
            |x| (std::f64::consts::PI * x).sin(),
            modes,
            4 * modes - 1,
            d,
        )
        .unwrap();
        let t = Instant::now();
        let block = sample_increments(&spec, 1, 0, steps, dt).unwrap();
        let sample = t.elapsed();
        let t = Instant::now();
        let path = simulate_path(&x0, &block, &cfg, &m, Record::Final).unwrap();
        let run = t.elapsed();
        println!(
            "N={modes} K={steps}: sample {:?}, run {:?} ({:.1} us/step), max iters {}",
            sample,
            run,
            run.as_secs_f64() * 1e6 / steps as f64,
            path.max_iterations
        );
    }
}
