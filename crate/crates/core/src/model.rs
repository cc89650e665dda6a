//! Cubic drift `f(xi) = -a3 xi^3 + a2 xi^2 + a1 xi + a0` and its Galerkin
//! Nemytskii operator `P^N F`.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::spectral::{Domain, SineTransform, SpectralField};

/// Raw polynomial coefficients of a drift. `a3 >= 0` always holds; the
/// public [`CubicNonlinearity`] additionally requires `a3 > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftCoefficients {
    pub a3: f64,
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
}

impl DriftCoefficients {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        ((-self.a3 * x + self.a2) * x + self.a1) * x + self.a0
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        (-3.0 * self.a3 * x + 2.0 * self.a2) * x + self.a1
    }
}

mod sealed {
    pub trait Sealed {}
}

/// A drift the integrator can step. Implemented by [`CubicNonlinearity`]
/// and by the linear validation model in [`crate::oracle`].
pub trait Drift: sealed::Sealed + Send + Sync {
    fn coefficients(&self) -> DriftCoefficients;

    /// `sup_xi f'(xi)`.
    fn lambda_f(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicNonlinearity {
    coeffs: DriftCoefficients,
}

impl CubicNonlinearity {
    pub fn new(a3: f64, a2: f64, a1: f64, a0: f64) -> Result<Self> {
        if !(a3 > 0.0) {
            return invalid(format!(
                "leading coefficient a3 must be positive (sup f' is infinite otherwise), got {a3}"
            ));
        }
        if ![a3, a2, a1, a0].iter().all(|c| c.is_finite()) {
            return invalid("drift coefficients must be finite");
        }
        Ok(Self {
            coeffs: DriftCoefficients { a3, a2, a1, a0 },
        })
    }

    /// `f(xi) = -xi^3 + lambda_f xi`, the drift used in all experiments.
    pub fn allen_cahn(lambda_f: f64) -> Self {
        Self::new(1.0, 0.0, lambda_f, 0.0).expect("a3 = 1 is valid")
    }

    pub fn a3(&self) -> f64 {
        self.coeffs.a3
    }
    pub fn a2(&self) -> f64 {
        self.coeffs.a2
    }
    pub fn a1(&self) -> f64 {
        self.coeffs.a1
    }
    pub fn a0(&self) -> f64 {
        self.coeffs.a0
    }

    pub fn constants(&self) -> DriftConstants {
        let DriftCoefficients { a3, a2, a1, .. } = self.coeffs;
        DriftConstants {
            lambda_f: self.lambda_f(),
            growth: (a1.abs() + a2.abs()).max(1.5 * a3 + 0.5 * a2.abs()),
        }
    }
}

impl sealed::Sealed for CubicNonlinearity {}

impl Drift for CubicNonlinearity {
    fn coefficients(&self) -> DriftCoefficients {
        self.coeffs
    }

    fn lambda_f(&self) -> f64 {
        let DriftCoefficients { a3, a2, a1, .. } = self.coeffs;
        a1 + a2 * a2 / (3.0 * a3)
    }
}

// lets the oracle's linear model implement the sealed trait
pub(crate) use sealed::Sealed as DriftSeal;

/// Derived drift constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftConstants {
    /// One-sided Lipschitz constant `sup f'`.
    pub lambda_f: f64,
    /// A valid `C_f` in `|f(u) - f(v)| <= C_f (1 + u^2 + v^2) |u - v|`.
    /// Diagnostic only.
    pub growth: f64,
}

/// `f(xi)`.
pub fn f_pointwise(xi: f64, m: &CubicNonlinearity) -> f64 {
    m.coeffs.eval(xi)
}

/// `sup f' = a1 + a2^2 / (3 a3)`, attained at `xi = a2 / (3 a3)`.
pub fn lambda_f(m: &CubicNonlinearity) -> f64 {
    m.lambda_f()
}

/// Smallest grid with `M + 1` a power of two and `M + 1 > 2N`. On this grid
/// DST-I quadrature projects odd cubics of `N`-mode fields onto the first
/// `N` modes without aliasing.
pub fn dealiased_points(modes: usize) -> usize {
    (2 * modes + 1).next_power_of_two() - 1
}

/// Evaluator for `P^N F` and its Jacobian on `N`-mode fields.
///
/// The odd part `-a3 u^3 + a1 u` is evaluated pseudospectrally on the
/// dealiased grid. The even part `a2 u^2 + a0` is not a finite sine series,
/// so its cosine expansion is projected onto the sine modes in closed form.
/// Holds scratch buffers, so one instance per thread.
pub struct Nemytskii {
    modes: usize,
    domain: Domain,
    coeffs: DriftCoefficients,
    transform: SineTransform,
    grid: Vec<f64>,
    work: Vec<f64>,
    cosines: Vec<f64>,
    // N x (2N + 1), row-major: <cos(m pi x/L), e_k>
    cos_to_sine: Option<Vec<f64>>,
}

impl Nemytskii {
    pub fn new<D: Drift + ?Sized>(drift: &D, modes: usize, domain: Domain) -> Self {
        assert!(modes >= 1);
        let coeffs = drift.coefficients();
        let points = dealiased_points(modes);
        let even = coeffs.a2 != 0.0 || coeffs.a0 != 0.0;
        Self {
            modes,
            domain,
            coeffs,
            transform: SineTransform::new(points),
            grid: vec![0.0; points],
            work: vec![0.0; points],
            cosines: vec![0.0; 2 * modes + 1],
            cos_to_sine: even.then(|| cos_to_sine_matrix(modes, domain)),
        }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn grid_points(&self) -> usize {
        self.transform.points()
    }

    fn synthesize(&mut self, u: &[f64]) {
        self.transform.sine_sums(u, &mut self.grid);
        let s = (2.0 / self.domain.length()).sqrt();
        self.grid.iter_mut().for_each(|v| *v *= s);
    }

    /// `out = P^N F(u)`.
    pub fn apply(&mut self, u: &[f64], out: &mut [f64]) {
        let n = self.modes;
        debug_assert_eq!(u.len(), n);
        debug_assert_eq!(out.len(), n);
        let c = self.coeffs;
        let m1 = (self.grid.len() + 1) as f64;
        let need_grid = c.a3 != 0.0 || c.a2 != 0.0;
        if need_grid {
            self.synthesize(u);
        }

        if c.a3 != 0.0 {
            for (w, &y) in self.work.iter_mut().zip(&self.grid) {
                *w = -c.a3 * y * y * y;
            }
            self.transform.sine_sums(&self.work, out);
            let s = (2.0 * self.domain.length()).sqrt() / m1;
            out.iter_mut().for_each(|o| *o *= s);
        } else {
            out.fill(0.0);
        }
        for (o, &x) in out.iter_mut().zip(u) {
            *o += c.a1 * x;
        }

        if let Some(proj) = &self.cos_to_sine {
            // cosine coefficients of a2 u^2 + a0, exact by trapezoid rule
            self.cosines.fill(0.0);
            if c.a2 != 0.0 {
                for (w, &y) in self.work.iter_mut().zip(&self.grid) {
                    *w = c.a2 * y * y;
                }
                self.transform.cosine_sums(&self.work, &mut self.cosines);
                self.cosines[0] /= m1;
                self.cosines[1..].iter_mut().for_each(|d| *d *= 2.0 / m1);
            }
            self.cosines[0] += c.a0;
            let w = 2 * n + 1;
            for (k, o) in out.iter_mut().enumerate() {
                let row = &proj[k * w..(k + 1) * w];
                *o += row
                    .iter()
                    .zip(&self.cosines)
                    .map(|(p, d)| p * d)
                    .sum::<f64>();
            }
        }
    }

    /// Spectral matrix of the derivative of `u -> P^N F(u)`.
    pub fn jacobian(&mut self, u: &[f64], jac: &mut DMatrix<f64>) {
        let n = self.modes;
        let mut flat = vec![0.0; n * n];
        self.jacobian_into(u, &mut flat);
        for k in 0..n {
            for j in 0..=k {
                jac[(k, j)] = flat[k * n + j];
                jac[(j, k)] = flat[k * n + j];
            }
        }
    }

    /// Lower triangle (diagonal included) of the row-major `N x N`
    /// derivative of `u -> P^N F(u)`. The matrix is the Galerkin matrix of
    /// multiplication by `f'(u)`, hence symmetric; the strict upper triangle
    /// is left untouched.
    pub fn jacobian_into(&mut self, u: &[f64], jac: &mut [f64]) {
        let n = self.modes;
        let c = self.coeffs;
        debug_assert_eq!(jac.len(), n * n);
        if c.a3 != 0.0 {
            self.synthesize(u);
            for (w, &y) in self.work.iter_mut().zip(&self.grid) {
                *w = -3.0 * c.a3 * y * y;
            }
            self.transform.cosine_sums(&self.work, &mut self.cosines);
            let inv = 1.0 / (self.grid.len() + 1) as f64;
            self.cosines.iter_mut().for_each(|v| *v *= inv);
            let cs = &self.cosines;
            // multiplication operator in the sine basis: Toeplitz minus Hankel
            for (k0, row) in jac.chunks_exact_mut(n).enumerate() {
                let k = k0 + 1;
                // j = 1..=k: cs[k - j] - cs[k + j]
                let toeplitz = cs[..k].iter().rev();
                let hankel = &cs[k + 1..=2 * k];
                for ((e, t), h) in row[..k].iter_mut().zip(toeplitz).zip(hankel) {
                    *e = t - h;
                }
            }
        } else {
            jac.fill(0.0);
        }
        for k in 0..n {
            jac[k * n + k] += c.a1;
        }
        if c.a2 != 0.0 {
            let proj = self.cos_to_sine.as_ref().expect("built for a2 != 0");
            let w = 2 * n + 1;
            let s = 2.0 * c.a2 / self.domain.length();
            // d(u^2)/du_j = 2 u e_j = (2/L) sum_i u_i [cos(|i-j|) - cos(i+j)]
            for k in 0..n {
                let row = &proj[k * w..(k + 1) * w];
                for j in 1..=k + 1 {
                    let mut acc = 0.0;
                    for (i, &ui) in u.iter().enumerate() {
                        let i = i + 1;
                        acc += ui * (row[i.abs_diff(j)] - row[i + j]);
                    }
                    jac[k * n + j - 1] += s * acc;
                }
            }
        }
    }
}

/// `<cos(m pi x / L), e_k>` for `k = 1..N`, `m = 0..=2N`.
fn cos_to_sine_matrix(modes: usize, domain: Domain) -> Vec<f64> {
    let l = domain.length();
    let scale = (2.0 / l).sqrt() * l / PI;
    let w = 2 * modes + 1;
    let mut p = vec![0.0; modes * w];
    for k in 1..=modes {
        for m in 0..w {
            if (k + m) % 2 == 1 {
                let kf = k as f64;
                let mf = m as f64;
                p[(k - 1) * w + m] = scale * 2.0 * kf / (kf * kf - mf * mf);
            }
        }
    }
    p
}

/// `P^N F(u)` for a field truncated or padded to `modes` modes.
pub fn nemytskii(u: &SpectralField, modes: usize, m: &CubicNonlinearity) -> SpectralField {
    let u = u.truncate(modes);
    let mut eval = Nemytskii::new(m, modes, u.domain());
    let mut out = vec![0.0; modes];
    eval.apply(u.coeffs(), &mut out);
    SpectralField::from_raw(out, u.domain())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pointwise_values() {
        let ac = CubicNonlinearity::allen_cahn(1.0);
        assert_eq!(f_pointwise(1.0, &ac), 0.0);
        let m = CubicNonlinearity::allen_cahn(5.0);
        assert_eq!(f_pointwise(2.0, &m), 2.0);
        let g = CubicNonlinearity::new(2.0, 0.5, -1.0, 0.25).unwrap();
        assert_eq!(f_pointwise(0.0, &g), 0.25);
    }

    #[test]
    fn one_sided_constant() {
        let m = |a3, a2, a1| CubicNonlinearity::new(a3, a2, a1, 0.0).unwrap();
        assert_eq!(lambda_f(&m(1.0, 0.0, 5.0)), 5.0);
        assert_eq!(lambda_f(&m(1.0, 3.0, 0.0)), 3.0);
        assert_eq!(lambda_f(&m(2.0, 0.0, -1.0)), -1.0);
        assert!(CubicNonlinearity::new(0.0, 0.0, 1.0, 0.0).is_err());
        assert!(CubicNonlinearity::new(-1.0, 0.0, 1.0, 0.0).is_err());
        // sup f' is attained at a2 / (3 a3)
        let c = m(1.5, -2.0, 0.7);
        let xs = (-4000..=4000).map(|i| i as f64 * 1e-3);
        let best = xs.map(|x| c.coeffs.derivative(x)).fold(f64::MIN, f64::max);
        assert!((best - lambda_f(&c)).abs() < 1e-6);
    }

    #[test]
    fn dealiased_grid_sizes() {
        assert_eq!(dealiased_points(1), 3);
        assert_eq!(dealiased_points(8), 31);
        assert_eq!(dealiased_points(64), 255);
        assert_eq!(dealiased_points(5), 15);
    }

    #[test]
    fn zero_field_zero_drift() {
        let m = CubicNonlinearity::new(1.0, 0.0, 0.0, 0.0).unwrap();
        let u = SpectralField::zeros(6, Domain::unit());
        assert_eq!(nemytskii(&u, 6, &m).norm_sq(), 0.0);
    }

    #[test]
    fn constant_drift_projects_onto_odd_modes() {
        let m = CubicNonlinearity::new(1.0, 0.0, 0.0, 2.0).unwrap();
        let u = SpectralField::zeros(4, Domain::unit());
        let out = nemytskii(&u, 4, &m);
        // <2, e_k> = 2 sqrt(2) (1 - (-1)^k) / (k pi)
        let want = |k: f64| 2.0 * 2f64.sqrt() * 2.0 / (k * PI);
        assert!((out.coeffs()[0] - want(1.0)).abs() < 1e-14);
        assert!(out.coeffs()[1].abs() < 1e-15);
        assert!((out.coeffs()[2] - want(3.0)).abs() < 1e-14);
    }

    #[test]
    fn cube_of_a_sine() {
        // (c sqrt2 sin)^3 = c^3 2 sqrt2 (3 sin - sin 3)/4
        let d = Domain::unit();
        let m = CubicNonlinearity::new(1.0, 0.0, 0.0, 0.0).unwrap();
        let c = 0.8;
        let out = nemytskii(&SpectralField::mode(4, 1, c, d), 4, &m);
        let a = -c * c * c * 2.0;
        assert!((out.coeffs()[0] - 0.75 * a).abs() < 1e-14);
        assert!(out.coeffs()[1].abs() < 1e-14);
        assert!((out.coeffs()[2] + 0.25 * a).abs() < 1e-14);
        assert!(out.coeffs()[3].abs() < 1e-14);
    }

    fn random_field(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let d = Domain::new(1.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in [
            CubicNonlinearity::allen_cahn(5.0),
            CubicNonlinearity::new(0.7, -1.3, 0.4, 0.9).unwrap(),
        ] {
            let n = 7;
            let u = random_field(&mut rng, n);
            let mut ev = Nemytskii::new(&m, n, d);
            let mut jac = DMatrix::zeros(n, n);
            ev.jacobian(&u, &mut jac);
            let h = 1e-6;
            let mut plus = vec![0.0; n];
            let mut minus = vec![0.0; n];
            for j in 0..n {
                let mut up = u.clone();
                let mut um = u.clone();
                up[j] += h;
                um[j] -= h;
                ev.apply(&up, &mut plus);
                ev.apply(&um, &mut minus);
                for k in 0..n {
                    let fd = (plus[k] - minus[k]) / (2.0 * h);
                    assert!(
                        (fd - jac[(k, j)]).abs() < 1e-7,
                        "({k},{j}) {fd} {}",
                        jac[(k, j)]
                    );
                }
            }
        }
    }

    #[test]
    fn odd_drift_is_odd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = CubicNonlinearity::new(1.3, 0.0, 2.0, 0.0).unwrap();
        let d = Domain::unit();
        for _ in 0..20 {
            let u = SpectralField::new(random_field(&mut rng, 9), d).unwrap();
            let a = nemytskii(&u, 9, &m);
            let b = nemytskii(&u.scale(-1.0), 9, &m);
            assert_eq!(a, b.scale(-1.0));
        }
    }

    #[test]
    fn one_sided_lipschitz_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = Domain::unit();
        for m in [
            CubicNonlinearity::allen_cahn(5.0),
            CubicNonlinearity::new(1.0, 3.0, 0.0, 1.0).unwrap(),
        ] {
            let lf = lambda_f(&m);
            for _ in 0..1000 {
                let scale = rng.random_range(0.1..3.0);
                let u = SpectralField::new(random_field(&mut rng, 8), d)
                    .unwrap()
                    .scale(scale);
                let v = SpectralField::new(random_field(&mut rng, 8), d).unwrap();
                let diff = u.sub(&v);
                let lhs = nemytskii(&u, 8, &m).sub(&nemytskii(&v, 8, &m)).dot(&diff);
                assert!(
                    lhs <= lf * diff.norm_sq() + 1e-10,
                    "{lhs} > {}",
                    lf * diff.norm_sq()
                );
            }
        }
    }
}
