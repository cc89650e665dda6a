//! Independent ground truth for validating the scheme.
//!
//! With a linear drift `f(xi) = a1 xi` every mode is an Ornstein-Uhlenbeck
//! process and the scheme reduces to a scalar recursion per mode, so both
//! laws are Gaussian with explicit moments. The brute-force cubic projection
//! expands products of sines symbolically instead of going through a grid.

use std::f64::consts::PI;

use crate::error::{invalid, Result, SpdeError};
use crate::model::{CubicNonlinearity, Drift, DriftCoefficients, DriftSeal};
use crate::noise::NoiseSpec;
use crate::spectral::{Domain, SpectralField};

/// Linear drift `f(xi) = a1 xi`. Outside the cubic class (`a3 = 0`); only
/// meant for validation runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearModel {
    pub a1: f64,
}

impl LinearModel {
    pub fn new(a1: f64) -> Self {
        Self { a1 }
    }

    /// Decay rate `lambda_j - a1` of mode `j`.
    pub fn rate(&self, domain: Domain, j: usize) -> f64 {
        domain.eigenvalue(j) - self.a1
    }
}

impl DriftSeal for LinearModel {}

impl Drift for LinearModel {
    fn coefficients(&self) -> DriftCoefficients {
        DriftCoefficients {
            a3: 0.0,
            a2: 0.0,
            a1: self.a1,
            a0: 0.0,
        }
    }

    fn lambda_f(&self) -> f64 {
        self.a1
    }
}

/// Independent Gaussian law per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianModeState {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl GaussianModeState {
    pub fn new(mean: Vec<f64>, var: Vec<f64>) -> Result<Self> {
        if mean.len() != var.len() {
            return invalid("mean and variance lists differ in length");
        }
        if var.iter().any(|v| !(*v >= 0.0)) {
            return invalid("variances must be nonnegative");
        }
        Ok(Self { mean, var })
    }

    /// Point mass at `x0`.
    pub fn deterministic(x0: &SpectralField) -> Self {
        Self {
            mean: x0.coeffs().to_vec(),
            var: vec![0.0; x0.modes()],
        }
    }

    pub fn modes(&self) -> usize {
        self.mean.len()
    }
}

fn noise_q(spec: &NoiseSpec, j: usize) -> f64 {
    if j <= spec.modes() {
        spec.q(j).expect("in range")
    } else {
        0.0
    }
}

/// Exact law of the Galerkin OU system at time `t`.
pub fn continuous_moments(
    state: &GaussianModeState,
    t: f64,
    lm: LinearModel,
    spec: &NoiseSpec,
    domain: Domain,
) -> Result<GaussianModeState> {
    if !(t >= 0.0) {
        return invalid(format!("time must be nonnegative, got {t}"));
    }
    let mut out = state.clone();
    for j in 1..=state.modes() {
        let r = lm.rate(domain, j);
        let q = noise_q(spec, j);
        let (m, v) = (state.mean[j - 1], state.var[j - 1]);
        if r == 0.0 {
            out.var[j - 1] = v + q * t;
        } else {
            let decay = (-r * t).exp();
            // (1 - e^{-2rt}) / (2r), stable for small rt
            let growth = -(-2.0 * r * t).exp_m1() / (2.0 * r);
            out.mean[j - 1] = decay * m;
            out.var[j - 1] = decay * decay * v + q * growth;
        }
    }
    Ok(out)
}

/// Law of the scheme after `k` steps: `m <- m/(1+rho)`,
/// `v <- (v + q dt)/(1+rho)^2`, `rho = (lambda_j - a1) dt`.
pub fn discrete_moments(
    state: &GaussianModeState,
    k: usize,
    dt: f64,
    lm: LinearModel,
    spec: &NoiseSpec,
    domain: Domain,
) -> Result<GaussianModeState> {
    let mut out = state.clone();
    for j in 1..=state.modes() {
        let a = 1.0 + lm.rate(domain, j) * dt;
        if !(a > 0.0) {
            return invalid(format!("1 + rho_{j} = {a} is not positive"));
        }
        let q = noise_q(spec, j);
        let (mut m, mut v) = (state.mean[j - 1], state.var[j - 1]);
        for _ in 0..k {
            m /= a;
            v = (v + q * dt) / (a * a);
        }
        out.mean[j - 1] = m;
        out.var[j - 1] = v;
    }
    Ok(out)
}

/// Fixed point of the discrete variance recursion,
/// `q / (2 r + r^2 dt)` with `r = lambda_j - a1`.
pub fn discrete_stationary_variance(q: f64, rate: f64, dt: f64) -> f64 {
    q / (2.0 * rate + rate * rate * dt)
}

/// Stationary OU variance `q / (2 r)`.
pub fn continuous_stationary_variance(q: f64, rate: f64) -> f64 {
    q / (2.0 * rate)
}

/// Test functionals with closed-form Gaussian expectations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaussianFunctional {
    NormSq,
    ExpNegNormSq,
    Norm4,
}

/// `E phi(X)` for `X` with independent Gaussian modes.
pub fn gaussian_functional(state: &GaussianModeState, phi: GaussianFunctional) -> f64 {
    let pairs = state.mean.iter().zip(&state.var);
    match phi {
        GaussianFunctional::NormSq => pairs.map(|(m, v)| m * m + v).sum(),
        GaussianFunctional::ExpNegNormSq => pairs
            .map(|(m, v)| (-m * m / (1.0 + 2.0 * v)).exp() / (1.0 + 2.0 * v).sqrt())
            .product(),
        GaussianFunctional::Norm4 => {
            let s: f64 = pairs.clone().map(|(m, v)| m * m + v).sum();
            let c: f64 = pairs.map(|(m, v)| 2.0 * m * m * v + v * v).sum();
            s * s + 2.0 * c
        }
    }
}

/// Largest Galerkin dimension accepted by [`brute_force_galerkin_cubic`].
pub const BRUTE_FORCE_MAX_MODES: usize = 32;

// int_0^pi sin(n theta) d theta for signed n
fn sine_integral(n: i64) -> f64 {
    if n % 2 == 0 {
        0.0
    } else {
        2.0 / n as f64
    }
}

// int_0^pi cos(m theta) sin(k theta) d theta via
// cos(m) sin(k) = (sin((k+m)) + sin((k-m))) / 2
fn cos_sin_integral(m: i64, k: i64) -> f64 {
    0.5 * (sine_integral(k + m) + sine_integral(k - m))
}

/// Exact `P^N F(u)` by symbolic expansion of the sine products. O(N^3).
pub fn brute_force_galerkin_cubic(
    u: &SpectralField,
    modes: usize,
    m: &CubicNonlinearity,
) -> Result<SpectralField> {
    if modes == 0 || modes > BRUTE_FORCE_MAX_MODES {
        return Err(SpdeError::Domain(format!(
            "brute-force projection supports 1..={BRUTE_FORCE_MAX_MODES} modes, got {modes}"
        )));
    }
    let domain = u.domain();
    let l = domain.length();
    let u = u.truncate(modes);
    let c = u.coeffs();
    let n = modes as i64;

    // u^3 = (2/L)^{3/2} sum s_p sin(p theta), using
    // sin a sin b sin c = (sin(a+b-c) + sin(a-b+c) + sin(-a+b+c) - sin(a+b+c)) / 4
    let mut s = vec![0.0; 3 * modes + 1];
    let mut add = |p: i64, w: f64| {
        if p > 0 {
            s[p as usize] += w;
        } else if p < 0 {
            s[(-p) as usize] -= w;
        }
    };
    for i in 1..=n {
        for j in 1..=n {
            let cij = c[(i - 1) as usize] * c[(j - 1) as usize];
            if cij == 0.0 {
                continue;
            }
            for k in 1..=n {
                let w = 0.25 * cij * c[(k - 1) as usize];
                add(i + j - k, w);
                add(i - j + k, w);
                add(-i + j + k, w);
                add(i + j + k, -w);
            }
        }
    }

    let basis_scale = (2.0 / l).sqrt() * l / PI;
    let mut out = vec![0.0; modes];
    for k in 1..=n {
        let ku = (k - 1) as usize;
        let mut v = -m.a3() * (2.0 / l) * s[k as usize] + m.a1() * c[ku];
        // a2 u^2 = a2 (1/L) sum c_i c_j (cos(i-j) - cos(i+j))
        if m.a2() != 0.0 {
            let mut acc = 0.0;
            for i in 1..=n {
                for j in 1..=n {
                    let cij = c[(i - 1) as usize] * c[(j - 1) as usize];
                    acc += cij * (cos_sin_integral(i - j, k) - cos_sin_integral(i + j, k));
                }
            }
            v += m.a2() / l * basis_scale * acc;
        }
        v += m.a0() * basis_scale * cos_sin_integral(0, k);
        out[ku] = v;
    }
    SpectralField::new(out, domain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::nemytskii;

    #[test]
    fn continuous_moment_values() {
        let d = Domain::unit();
        let spec = NoiseSpec::explicit(vec![1.0]).unwrap();
        let s0 = GaussianModeState::new(vec![0.0], vec![0.0]).unwrap();
        let s = continuous_moments(&s0, 0.1, LinearModel::new(0.0), &spec, d).unwrap();
        let want = (1.0 - (-2.0 * PI * PI / 10.0).exp()) / (2.0 * PI * PI);
        assert!((s.var[0] - want).abs() < 1e-15);
        assert!((s.var[0] - 0.043_623_271_605_605).abs() < 1e-14);

        let x = GaussianModeState::new(vec![1.5], vec![0.2]).unwrap();
        assert_eq!(
            continuous_moments(&x, 0.0, LinearModel::new(2.0), &spec, d).unwrap(),
            x
        );
        let far = continuous_moments(&x, 50.0, LinearModel::new(2.0), &spec, d).unwrap();
        assert!(far.mean[0].abs() < 1e-100);
        assert!((far.var[0] - 1.0 / (2.0 * (PI * PI - 2.0))).abs() < 1e-15);
        // critical rate
        let crit = continuous_moments(&x, 0.5, LinearModel::new(PI * PI), &spec, d).unwrap();
        assert!((crit.var[0] - (0.2 + 0.5)).abs() < 1e-12);
        assert!(continuous_moments(&x, -1.0, LinearModel::new(0.0), &spec, d).is_err());
    }

    #[test]
    fn discrete_fixed_point() {
        let d = Domain::unit();
        let spec = NoiseSpec::power_law(0.0, 3).unwrap();
        let lm = LinearModel::new(5.0);
        let dt = 1.0 / 64.0;
        let x = GaussianModeState::new(vec![1.0, 0.0, -2.0], vec![0.0; 3]).unwrap();
        assert_eq!(discrete_moments(&x, 0, dt, lm, &spec, d).unwrap(), x);
        let s = discrete_moments(&x, 20_000, dt, lm, &spec, d).unwrap();
        for j in 1..=3 {
            let r = lm.rate(d, j);
            let v = discrete_stationary_variance(0.25, r, dt);
            // v = (v + q dt)/(1+rho)^2
            let a = 1.0 + r * dt;
            assert!((v - (v + 0.25 * dt) / (a * a)).abs() < 1e-15);
            assert!((s.var[j - 1] - v).abs() < 1e-12);
        }
        let tiny = discrete_stationary_variance(0.25, 10.0, 1e-12);
        assert!((tiny - continuous_stationary_variance(0.25, 10.0)).abs() < 1e-12);
        // 1 + rho <= 0
        assert!(discrete_moments(&x, 1, 1.0, LinearModel::new(30.0), &spec, d).is_err());
    }

    #[test]
    fn gaussian_closed_forms() {
        let zero = GaussianModeState::new(vec![0.0; 3], vec![0.0; 3]).unwrap();
        assert_eq!(gaussian_functional(&zero, GaussianFunctional::NormSq), 0.0);
        assert_eq!(
            gaussian_functional(&zero, GaussianFunctional::ExpNegNormSq),
            1.0
        );
        let one = GaussianModeState::new(vec![0.0], vec![1.0]).unwrap();
        let e = gaussian_functional(&one, GaussianFunctional::ExpNegNormSq);
        assert!((e - 3f64.powf(-0.5)).abs() < 1e-15);
        assert_eq!(gaussian_functional(&one, GaussianFunctional::Norm4), 3.0);
    }

    #[test]
    fn brute_force_single_mode() {
        let d = Domain::unit();
        let m = CubicNonlinearity::new(1.0, 0.0, 0.0, 0.0).unwrap();
        let c = -1.3;
        let u = SpectralField::mode(5, 1, c, d);
        let out = brute_force_galerkin_cubic(&u, 5, &m).unwrap();
        // (c sqrt2 sin)^3 = 2 sqrt2 c^3 (3 sin - sin3)/4
        let a = -2.0 * c * c * c;
        assert!((out.coeffs()[0] - 0.75 * a).abs() < 1e-14);
        assert!((out.coeffs()[2] + 0.25 * a).abs() < 1e-14);
        assert!(out.coeffs()[1].abs() < 1e-15 && out.coeffs()[3].abs() < 1e-15);
        let z = brute_force_galerkin_cubic(&SpectralField::zeros(4, d), 4, &m).unwrap();
        assert_eq!(z.norm_sq(), 0.0);
        assert!(brute_force_galerkin_cubic(&u, 33, &m).is_err());
    }

    #[test]
    fn brute_force_agrees_with_pseudospectral_for_full_cubic() {
        let d = Domain::new(2.5).unwrap();
        let m = CubicNonlinearity::new(0.8, 1.7, -0.6, 0.45).unwrap();
        let coeffs: Vec<f64> = (0..9).map(|i| ((i * 37 % 13) as f64 - 6.0) / 7.0).collect();
        let u = SpectralField::new(coeffs, d).unwrap();
        let a = brute_force_galerkin_cubic(&u, 9, &m).unwrap();
        let b = nemytskii(&u, 9, &m);
        assert!(a.sub(&b).l2_norm() < 1e-12, "{}", a.sub(&b).l2_norm());
    }
}
