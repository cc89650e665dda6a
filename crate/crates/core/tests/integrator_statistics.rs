use spde_core::experiments::McEstimate;
use spde_core::integrator::{simulate_with, z_convolution, SchemeConfig};
use spde_core::model::CubicNonlinearity;
use spde_core::noise::{sample_increments, NoiseSpec};
use spde_core::oracle::{discrete_moments, GaussianModeState, LinearModel};
use spde_core::spectral::{sup_norm, Domain, SpectralField};

fn sine(modes: usize, domain: Domain) -> SpectralField {
    SpectralField::project(
        |x| (std::f64::consts::PI * x).sin(),
        modes,
        4 * modes - 1,
        domain,
    )
    .unwrap()
}

#[test]
fn linear_moments_match_the_discrete_recursion() {
    let d = Domain::unit();
    let (n, dt, steps, samples) = (8, 1.0 / 64.0, 64, 10_000);
    let lm = LinearModel::new(2.0);
    let spec = NoiseSpec::power_law(0.5, n).unwrap();
    let cfg = SchemeConfig::new(n, dt, steps, &lm, d).unwrap();
    let x0 = sine(n, d);
    let law = discrete_moments(
        &GaussianModeState::deterministic(&x0),
        steps,
        dt,
        lm,
        &spec,
        d,
    )
    .unwrap();

    let finals: Vec<Vec<f64>> = (0..samples as u64)
        .map(|i| {
            let block = sample_increments(&spec, 7, i, steps, dt).unwrap();
            let mut last = Vec::new();
            simulate_with(&x0, &block, &cfg, &lm, |k, x| {
                if k == steps {
                    last = x.to_vec();
                }
            })
            .unwrap();
            last
        })
        .collect();

    for j in 0..n {
        let xs: Vec<f64> = finals.iter().map(|x| x[j]).collect();
        let mean = McEstimate::from_samples(&xs).unwrap();
        assert!(
            (mean.mean - law.mean[j]).abs() <= 3.0 * mean.std_error,
            "mode {} mean {} vs {}",
            j + 1,
            mean.mean,
            law.mean[j]
        );
        let sq: Vec<f64> = xs.iter().map(|x| (x - law.mean[j]).powi(2)).collect();
        let var = McEstimate::from_samples(&sq).unwrap();
        assert!(
            (var.mean - law.var[j]).abs() <= 3.0 * var.std_error,
            "mode {} variance {} vs {}",
            j + 1,
            var.mean,
            law.var[j]
        );
    }
}

#[test]
fn dissipative_second_moment_is_stationary() {
    let d = Domain::unit();
    let (n, dt, samples) = (64, 1.0 / 64.0, 2000);
    let steps = 640;
    let m = CubicNonlinearity::new(1.0, 0.0, 5.0, 0.0).unwrap();
    let spec = NoiseSpec::power_law(0.0, n).unwrap();
    let cfg = SchemeConfig::new(n, dt, steps, &m, d).unwrap();
    let x0 = sine(n, d);
    let (mut at5, mut at10) = (Vec::new(), Vec::new());
    for i in 0..samples as u64 {
        let block = sample_increments(&spec, 11, i, steps, dt).unwrap();
        let it = simulate_with(&x0, &block, &cfg, &m, |k, x| {
            let e: f64 = x.iter().map(|c| c * c).sum();
            if k == steps / 2 {
                at5.push(e);
            } else if k == steps {
                at10.push(e);
            }
        })
        .unwrap();
        assert!(it <= 10);
    }
    let a = McEstimate::from_samples(&at5).unwrap().mean;
    let b = McEstimate::from_samples(&at10).unwrap().mean;
    assert!(
        (b / a - 1.0).abs() <= 0.1,
        "E|X|^2: {a} at T=5, {b} at T=10"
    );
}

#[test]
fn convolution_sup_norm_does_not_grow() {
    let d = Domain::unit();
    let (n, dt, samples) = (64, 1.0 / 64.0, 1000);
    let spec = NoiseSpec::power_law(0.0, n).unwrap();
    let lm = LinearModel::new(0.0);
    let running_max = |steps: usize| -> f64 {
        let cfg = SchemeConfig::new(n, dt, steps, &lm, d).unwrap();
        let mut acc = vec![0.0; steps + 1];
        for i in 0..samples as u64 {
            let block = sample_increments(&spec, 3, i, steps, dt).unwrap();
            for (a, z) in acc.iter_mut().zip(z_convolution(&block, &cfg, d).unwrap()) {
                *a += sup_norm(&z, 4 * n).unwrap().powi(2);
            }
        }
        acc.iter().fold(0.0f64, |m, a| m.max(a / samples as f64))
    };
    let short = running_max(1 << 6);
    let long = running_max(1 << 9);
    assert!(
        long <= 1.1 * short,
        "max_k E sup|Z_k|^2: {short} (K=64), {long} (K=512)"
    );
}
