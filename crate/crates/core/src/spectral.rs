//! Dirichlet Laplacian eigensystem on `[0, L]` and the diagonal operators
//! built from it.
//!
//! Fields are stored as coefficients in the orthonormal sine basis
//! `e_k(x) = sqrt(2/L) sin(k pi x / L)`, `k = 1..N`, so `-A e_k = lambda_k e_k`
//! with `lambda_k = (k pi / L)^2`. Grid values live on the interior
//! collocation points `x_i = i L / (M + 1)`, `i = 1..M` (DST-I layout).

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result, SpdeError};

/// The interval `[0, L]`. Only `d = 1` is supported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    length: f64,
}

impl Domain {
    pub fn new(length: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return invalid(format!("domain length must be positive, got {length}"));
        }
        Ok(Self { length })
    }

    /// `[0, 1]`, the domain of all experiments.
    pub fn unit() -> Self {
        Self { length: 1.0 }
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dimension(&self) -> usize {
        1
    }

    /// `lambda_k` for `k >= 1`. Panics on `k = 0`; use [`eigenvalue`] for a
    /// checked version.
    #[inline]
    pub fn eigenvalue(&self, k: usize) -> f64 {
        assert!(k >= 1, "mode indices start at 1");
        let w = k as f64 * PI / self.length;
        w * w
    }

    /// `lambda_1 .. lambda_n`.
    pub fn eigenvalues(&self, n: usize) -> Vec<f64> {
        (1..=n).map(|k| self.eigenvalue(k)).collect()
    }

    /// Value of the basis function `e_k` at `x`.
    pub fn basis(&self, k: usize, x: f64) -> f64 {
        (2.0 / self.length).sqrt() * (k as f64 * PI * x / self.length).sin()
    }
}

/// Dirichlet eigenvalue `(k pi / L)^2`.
pub fn eigenvalue(k: usize, length: f64) -> Result<f64> {
    if k == 0 {
        return invalid("mode index must be >= 1");
    }
    Ok(Domain::new(length)?.eigenvalue(k))
}

/// Truncated sine series `sum_k coeffs[k-1] e_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    coeffs: Vec<f64>,
    domain: Domain,
}

impl SpectralField {
    pub fn new(coeffs: Vec<f64>, domain: Domain) -> Result<Self> {
        if coeffs.is_empty() {
            return invalid("a spectral field needs at least one mode");
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return invalid(format!("coefficient {} is not finite", i + 1));
        }
        Ok(Self { coeffs, domain })
    }

    pub fn zeros(modes: usize, domain: Domain) -> Self {
        assert!(modes >= 1);
        Self {
            coeffs: vec![0.0; modes],
            domain,
        }
    }

    /// Field with a single active mode `k` (1-based) carrying `value`.
    pub fn mode(modes: usize, k: usize, value: f64, domain: Domain) -> Self {
        let mut u = Self::zeros(modes, domain);
        u.coeffs[k - 1] = value;
        u
    }

    /// Galerkin projection `P^N g` of a continuous function, computed by
    /// DST-I quadrature on a grid of `quad_points` interior points.
    pub fn project<F: Fn(f64) -> f64>(
        g: F,
        modes: usize,
        quad_points: usize,
        domain: Domain,
    ) -> Result<Self> {
        let h = domain.length() / (quad_points + 1) as f64;
        let values = (1..=quad_points).map(|i| g(i as f64 * h)).collect();
        to_spectral(&GridField::new(values, domain), modes)
    }

    pub(crate) fn from_raw(coeffs: Vec<f64>, domain: Domain) -> Self {
        Self { coeffs, domain }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// `||u||^2`, by Parseval the sum of squared coefficients.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// `||(-A)^{r/2} u||`.
    pub fn sobolev_norm(&self, r: f64) -> f64 {
        fractional_apply(self, r).l2_norm()
    }

    /// First `modes` coefficients, zero padded when growing.
    pub fn truncate(&self, modes: usize) -> Self {
        assert!(modes >= 1);
        let mut coeffs = vec![0.0; modes];
        let n = modes.min(self.modes());
        coeffs[..n].copy_from_slice(&self.coeffs[..n]);
        Self {
            coeffs,
            domain: self.domain,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map_modes(|_, a| c * a)
    }

    fn zip_with(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.modes(), other.modes(), "mode count mismatch");
        Self {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| op(a, b))
                .collect(),
            domain: self.domain,
        }
    }

    /// Applies `op(k, coeff)` per mode, `k` 1-based.
    fn map_modes(&self, op: impl Fn(usize, f64) -> f64) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, &c)| op(i + 1, c))
                .collect(),
            domain: self.domain,
        }
    }
}

/// Values at the interior collocation points `x_i = i L / (M + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    values: Vec<f64>,
    domain: Domain,
}

impl GridField {
    pub fn new(values: Vec<f64>, domain: Domain) -> Self {
        Self { values, domain }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn points(&self) -> usize {
        self.values.len()
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Collocation abscissae.
    pub fn abscissae(&self) -> Vec<f64> {
        let h = self.domain.length() / (self.points() + 1) as f64;
        (1..=self.points()).map(|i| i as f64 * h).collect()
    }
}

/// Unnormalised DST-I / cosine sums on `M` interior points:
///
/// `sin_sum_k = sum_{p=1}^{M} v_p sin(k p pi / (M+1))` and the matching
/// cosine sum. Uses one complex FFT of length `2(M+1)` when `M + 1` is a
/// power of two, direct summation against a sine table otherwise.
pub struct SineTransform {
    points: usize,
    engine: Engine,
}

enum Engine {
    Fast {
        fft: Arc<dyn Fft<f64>>,
        buf: Vec<Complex<f64>>,
        scratch: Vec<Complex<f64>>,
    },
    Direct {
        // sin / cos of j pi / (M+1), j = 0 .. 2(M+1)
        sin: Vec<f64>,
        cos: Vec<f64>,
    },
}

impl SineTransform {
    pub fn new(points: usize) -> Self {
        assert!(points >= 1);
        let period = 2 * (points + 1);
        let engine = if (points + 1).is_power_of_two() {
            let fft = FftPlanner::new().plan_fft_forward(period);
            let scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
            Engine::Fast {
                fft,
                buf: vec![Complex::default(); period],
                scratch,
            }
        } else {
            let step = PI / (points + 1) as f64;
            Engine::Direct {
                sin: (0..period).map(|j| (j as f64 * step).sin()).collect(),
                cos: (0..period).map(|j| (j as f64 * step).cos()).collect(),
            }
        };
        Self { points, engine }
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn is_fast(&self) -> bool {
        matches!(self.engine, Engine::Fast { .. })
    }

    /// `out[k-1] = sum_p input[p-1] sin(k p pi/(M+1))` for `k = 1..=out.len()`.
    ///
    /// DST-I is its own transpose, so this serves both synthesis (input =
    /// coefficients, output = grid) and analysis (input = grid values).
    pub fn sine_sums(&mut self, input: &[f64], out: &mut [f64]) {
        let m = self.points;
        debug_assert!(input.len() <= m && out.len() <= m);
        match &mut self.engine {
            Engine::Fast { fft, buf, scratch } => {
                load(buf, input);
                fft.process_with_scratch(buf, scratch);
                for (k, o) in out.iter_mut().enumerate() {
                    *o = -buf[k + 1].im;
                }
            }
            Engine::Direct { sin, .. } => {
                let period = 2 * (m + 1);
                for (k, o) in out.iter_mut().enumerate() {
                    let k = k + 1;
                    let mut acc = 0.0;
                    for (p, &v) in input.iter().enumerate() {
                        acc += v * sin[(k * (p + 1)) % period];
                    }
                    *o = acc;
                }
            }
        }
    }

    /// `out[m] = sum_p input[p-1] cos(m p pi/(M+1))` for `m = 0..out.len()`.
    pub fn cosine_sums(&mut self, input: &[f64], out: &mut [f64]) {
        let m = self.points;
        debug_assert!(input.len() <= m && out.len() <= 2 * (m + 1));
        match &mut self.engine {
            Engine::Fast { fft, buf, scratch } => {
                load(buf, input);
                fft.process_with_scratch(buf, scratch);
                for (j, o) in out.iter_mut().enumerate() {
                    *o = buf[j].re;
                }
            }
            Engine::Direct { cos, .. } => {
                let period = 2 * (m + 1);
                for (j, o) in out.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (p, &v) in input.iter().enumerate() {
                        acc += v * cos[(j * (p + 1)) % period];
                    }
                    *o = acc;
                }
            }
        }
    }
}

fn load(buf: &mut [Complex<f64>], input: &[f64]) {
    buf.fill(Complex::default());
    for (b, &v) in buf[1..].iter_mut().zip(input) {
        b.re = v;
    }
}

/// Pointwise synthesis of `u` on `grid_points` interior points.
pub fn to_grid(u: &SpectralField, grid_points: usize) -> Result<GridField> {
    let mut t = SineTransform::new(grid_points.max(1));
    to_grid_with(&mut t, u)
}

pub(crate) fn to_grid_with(t: &mut SineTransform, u: &SpectralField) -> Result<GridField> {
    let m = t.points();
    if m < u.modes() {
        return Err(SpdeError::Truncation {
            modes: u.modes(),
            grid: m,
        });
    }
    let mut values = vec![0.0; m];
    t.sine_sums(u.coeffs(), &mut values);
    let scale = (2.0 / u.domain().length()).sqrt();
    values.iter_mut().for_each(|v| *v *= scale);
    Ok(GridField::new(values, u.domain()))
}

/// Discrete sine analysis followed by truncation to `modes` (the grid
/// version of `P^N`). Inverse of [`to_grid`] on `modes`-mode fields.
pub fn to_spectral(g: &GridField, modes: usize) -> Result<SpectralField> {
    let mut t = SineTransform::new(g.points().max(1));
    to_spectral_with(&mut t, g, modes)
}

pub(crate) fn to_spectral_with(
    t: &mut SineTransform,
    g: &GridField,
    modes: usize,
) -> Result<SpectralField> {
    let m = g.points();
    if modes == 0 || modes > m {
        return invalid(format!(
            "cannot extract {modes} modes from a grid of {m} points"
        ));
    }
    let mut coeffs = vec![0.0; modes];
    t.sine_sums(g.values(), &mut coeffs);
    let l = g.domain().length();
    let scale = (2.0 * l).sqrt() / (m + 1) as f64;
    coeffs.iter_mut().for_each(|c| *c *= scale);
    SpectralField::new(coeffs, g.domain())
}

/// `S_dt u = (I - A dt)^{-1} u`.
pub fn resolvent_apply(u: &SpectralField, dt: f64) -> SpectralField {
    let d = u.domain();
    u.map_modes(|k, c| c / (1.0 + d.eigenvalue(k) * dt))
}

/// `S(t) u = e^{A t} u`.
pub fn semigroup_apply(u: &SpectralField, t: f64) -> Result<SpectralField> {
    if !(t >= 0.0) {
        return invalid(format!("semigroup time must be nonnegative, got {t}"));
    }
    let d = u.domain();
    Ok(u.map_modes(|k, c| (-d.eigenvalue(k) * t).exp() * c))
}

/// `(-A)^{r/2} u`.
pub fn fractional_apply(u: &SpectralField, r: f64) -> SpectralField {
    let d = u.domain();
    u.map_modes(|k, c| d.eigenvalue(k).powf(0.5 * r) * c)
}

/// Grid approximation of `||u||_E = sup |u(x)|`. Requires at least
/// fourfold oversampling.
pub fn sup_norm(u: &SpectralField, grid_points: usize) -> Result<f64> {
    if grid_points < 4 * u.modes() {
        return invalid(format!(
            "sup norm of a {}-mode field needs at least {} grid points, got {grid_points}",
            u.modes(),
            4 * u.modes()
        ));
    }
    Ok(to_grid(u, grid_points)?
        .values()
        .iter()
        .fold(0.0, |m: f64, v| m.max(v.abs())))
}
