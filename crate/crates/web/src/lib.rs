//! Browser demo: solution profiles, ergodic averages and a small weak-rate
//! run, computed in WebAssembly on a single thread.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use spde_core::experiments::{
    ergodicity_run, sine_initial_values, weak_error_curve, ErgodicitySetup, Functional, MonteCarlo,
    Problem, Reference, TemporalSetup,
};
use spde_core::integrator::{simulate_path, Record, SchemeConfig, SolverOptions};
use spde_core::model::CubicNonlinearity;
use spde_core::noise::{sample_increments, NoiseSpec};
use spde_core::spectral::{to_grid, Domain};
use wasm_bindgen::prelude::*;

/// States on a grid, row-major: `values[i * x.len() + p]` is `u(t_i, x_p)`.
#[wasm_bindgen(getter_with_clone)]
#[derive(Debug, Clone, PartialEq)]
pub struct Profiles {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub values: Vec<f64>,
}

/// Mean of one functional along time, row-major per initial value:
/// `mean[c * t.len() + i]`.
#[wasm_bindgen(getter_with_clone)]
#[derive(Debug, Clone, PartialEq)]
pub struct Averages {
    pub t: Vec<f64>,
    pub scales: Vec<f64>,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
}

#[wasm_bindgen(getter_with_clone)]
#[derive(Debug, Clone, PartialEq)]
pub struct Rate {
    pub dt: Vec<f64>,
    pub err: Vec<f64>,
    pub se: Vec<f64>,
    /// NaN when the fit was refused.
    pub slope: f64,
}

type Result<T> = std::result::Result<T, String>;

fn model(lambda_f: f64) -> CubicNonlinearity {
    CubicNonlinearity::allen_cahn(lambda_f)
}

fn steps(horizon: f64, dt: f64) -> Result<usize> {
    let k = horizon / dt;
    if !(k >= 1.0) || (k - k.round()).abs() > 1e-9 * k {
        return Err(format!(
            "horizon {horizon} is not a positive multiple of dt {dt}"
        ));
    }
    Ok(k.round() as usize)
}

/// One trajectory of `-u_xx - u^3 + lambda_f u` plus noise from `sin(pi x)`,
/// recorded every `stride` steps.
pub fn profiles(
    lambda_f: f64,
    kappa: f64,
    modes: usize,
    dt: f64,
    horizon: f64,
    stride: usize,
    seed: u64,
) -> Result<Profiles> {
    let d = Domain::unit();
    let m = model(lambda_f);
    let k = steps(horizon, dt)?;
    let cfg = SchemeConfig::new(modes, dt, k, &m, d).map_err(|e| e.to_string())?;
    let noise = NoiseSpec::power_law(kappa, modes).map_err(|e| e.to_string())?;
    let x0 = sine_initial_values(&[1.0], modes, d)
        .map_err(|e| e.to_string())?
        .remove(0);
    let block = sample_increments(&noise, seed, 0, k, dt).map_err(|e| e.to_string())?;
    let path = simulate_path(&x0, &block, &cfg, &m, Record::Stride(stride.max(1)))
        .map_err(|e| e.to_string())?;
    let points = 4 * modes - 1;
    let mut x = Vec::new();
    let mut values = Vec::with_capacity(path.states.len() * points);
    for u in &path.states {
        let g = to_grid(u, points).map_err(|e| e.to_string())?;
        if x.is_empty() {
            x = g.abscissae();
        }
        values.extend_from_slice(g.values());
    }
    Ok(Profiles {
        t: path.times(),
        x,
        values,
    })
}

/// Monte Carlo averages of `functional` from `c sin(pi x)` for each scale.
#[allow(clippy::too_many_arguments)]
pub fn ergodic_averages(
    lambda_f: f64,
    kappa: f64,
    modes: usize,
    dt: f64,
    horizon: f64,
    samples: usize,
    functional: &str,
    seed: u64,
) -> Result<Averages> {
    let d = Domain::unit();
    let phi = Functional::from_name(functional)
        .ok_or_else(|| format!("unknown functional {functional}"))?;
    let scales = vec![-2.0, -1.0, 0.0, 1.0, 2.0];
    let k = steps(horizon, dt)?;
    let setup = ErgodicitySetup {
        options: SolverOptions::default(),
        initial_values: sine_initial_values(&scales, modes, d).map_err(|e| e.to_string())?,
        modes,
        dt,
        horizon,
        stride: (k / 64).max(1),
    };
    let noise = NoiseSpec::power_law(kappa, modes).map_err(|e| e.to_string())?;
    let out = ergodicity_run(
        &model(lambda_f),
        &noise,
        &setup,
        &[phi],
        MonteCarlo::new(samples, seed),
    )
    .map_err(|e| e.to_string())?;
    let estimates = out.series.iter().flat_map(|s| s[0].iter());
    Ok(Averages {
        mean: estimates.clone().map(|e| e.mean).collect(),
        se: estimates.map(|e| e.std_error).collect(),
        t: out.times,
        scales,
    })
}

/// Weak error of `functional` at `T = 1/4` for steps `2^-3 .. 2^-6` against
/// a `2^-8` reference on shared noise.
pub fn weak_rate(
    lambda_f: f64,
    kappa: f64,
    modes: usize,
    samples: usize,
    functional: &str,
    seed: u64,
) -> Result<Rate> {
    let phi = Functional::from_name(functional)
        .ok_or_else(|| format!("unknown functional {functional}"))?;
    let m = model(lambda_f);
    let d = Domain::unit();
    let problem = Problem {
        drift: &m,
        noise: NoiseSpec::power_law(kappa, modes).map_err(|e| e.to_string())?,
        x0: sine_initial_values(&[1.0], modes, d)
            .map_err(|e| e.to_string())?
            .remove(0),
    };
    let setup = TemporalSetup {
        options: SolverOptions::default(),
        modes,
        horizon: 0.25,
        dt_list: (3..=6).map(|e| 2f64.powi(-e)).collect(),
        reference: Reference::Fine { dt: 2f64.powi(-8) },
    };
    let table = weak_error_curve(&problem, &setup, phi, MonteCarlo::new(samples, seed))
        .map_err(|e| e.to_string())?;
    Ok(Rate {
        dt: table.rows.iter().map(|r| r.h).collect(),
        err: table.rows.iter().map(|r| r.err).collect(),
        se: table.rows.iter().map(|r| r.se).collect(),
        slope: table.slope.unwrap_or(f64::NAN),
    })
}

#[wasm_bindgen(js_name = profiles)]
pub fn profiles_js(
    lambda_f: f64,
    kappa: f64,
    modes: usize,
    dt: f64,
    horizon: f64,
    stride: usize,
    seed: u64,
) -> std::result::Result<Profiles, JsError> {
    profiles(lambda_f, kappa, modes, dt, horizon, stride, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = ergodicAverages)]
#[allow(clippy::too_many_arguments)]
pub fn ergodic_averages_js(
    lambda_f: f64,
    kappa: f64,
    modes: usize,
    dt: f64,
    horizon: f64,
    samples: usize,
    functional: &str,
    seed: u64,
) -> std::result::Result<Averages, JsError> {
    ergodic_averages(
        lambda_f, kappa, modes, dt, horizon, samples, functional, seed,
    )
    .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = weakRate)]
pub fn weak_rate_js(
    lambda_f: f64,
    kappa: f64,
    modes: usize,
    samples: usize,
    functional: &str,
    seed: u64,
) -> std::result::Result<Rate, JsError> {
    weak_rate(lambda_f, kappa, modes, samples, functional, seed).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_have_grid_shape() {
        let p = profiles(5.0, 0.0, 8, 1.0 / 64.0, 0.25, 4, 1).unwrap();
        assert_eq!(p.t.len(), 5);
        assert_eq!(p.x.len(), 31);
        assert_eq!(p.values.len(), 5 * 31);
        // starts at sin(pi x)
        let peak = p.values[..31].iter().cloned().fold(f64::MIN, f64::max);
        assert!((peak - 1.0).abs() < 1e-2, "{peak}");
    }

    #[test]
    fn averages_cover_every_scale() {
        let a = ergodic_averages(5.0, 0.0, 8, 1.0 / 32.0, 0.5, 20, "exp_neg_norm_sq", 2).unwrap();
        assert_eq!(a.mean.len(), a.scales.len() * a.t.len());
        assert_eq!(a.se.len(), a.mean.len());
        assert!(ergodic_averages(5.0, 0.0, 8, 1.0 / 32.0, 0.5, 20, "nope", 2).is_err());
    }

    #[test]
    fn weak_rate_reports_each_step() {
        let r = weak_rate(5.0, 2.0, 8, 50, "cos_norm_sq", 3).unwrap();
        assert_eq!(r.dt, vec![0.125, 0.0625, 0.03125, 0.015625]);
        assert_eq!(r.err.len(), 4);
    }

    #[test]
    fn bad_horizons_are_reported() {
        assert!(profiles(5.0, 0.0, 8, 0.3, 1.0, 1, 0).is_err());
    }
}
