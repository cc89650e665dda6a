//! Drift-implicit Euler full discretization
//!
//! `X_{k+1} = S_dt X_k + dt S_dt P^N F(X_{k+1}) + S_dt P^N dW_k`,
//! `S_dt = (I - A dt)^{-1}`. Each step solves `x = b + dt S_dt P^N F(x)`
//! with `b = S_dt (X_k + dW_k)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result, SpdeError};
use crate::model::{Drift, Nemytskii};
use crate::noise::IncrementBlock;
use crate::spectral::{Domain, SpectralField};

/// Largest step for which the implicit equation is uniquely solvable:
/// `1 ∧ 1 / ((2 lambda_F - 2 lambda_1) ∨ 0)`, reading `1/0` as no constraint.
pub fn step_constraint<D: Drift + ?Sized>(drift: &D, domain: Domain) -> f64 {
    let gap = 2.0 * drift.lambda_f() - 2.0 * domain.eigenvalue(1);
    if gap > 0.0 {
        (1.0 / gap).min(1.0)
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Newton,
    FixedPoint,
}

/// Nonlinear solver settings carried by [`SchemeConfig`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub solver: Solver,
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            solver: Solver::Newton,
            tol: 1e-10,
            max_iter: 50,
            damping: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    modes: usize,
    dt: f64,
    steps: usize,
    pub solver: Solver,
    pub tol: f64,
    pub max_iter: usize,
    /// Line-search shrink factor for damped Newton.
    pub damping: f64,
}

impl SchemeConfig {
    /// Validates `dt` against [`step_constraint`] for `drift`.
    pub fn new<D: Drift + ?Sized>(
        modes: usize,
        dt: f64,
        steps: usize,
        drift: &D,
        domain: Domain,
    ) -> Result<Self> {
        if modes == 0 {
            return invalid("Galerkin dimension must be at least 1");
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return invalid(format!("time step must be positive, got {dt}"));
        }
        let bound = step_constraint(drift, domain);
        if dt > bound {
            return Err(SpdeError::StepTooLarge { dt, bound });
        }
        let o = SolverOptions::default();
        Ok(Self {
            modes,
            dt,
            steps,
            solver: o.solver,
            tol: o.tol,
            max_iter: o.max_iter,
            damping: o.damping,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `T = K dt`.
    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    /// Same scheme with a different step count.
    pub fn with_steps(&self, steps: usize) -> Self {
        Self {
            steps,
            ..self.clone()
        }
    }

    pub fn with_solver(mut self, solver: Solver) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_options(mut self, o: SolverOptions) -> Self {
        self.solver = o.solver;
        self.tol = o.tol;
        self.max_iter = o.max_iter;
        self.damping = o.damping;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    pub iterations: usize,
    pub residual: f64,
    pub damped: bool,
}

/// Per-trajectory workspace for the implicit step.
pub struct Stepper {
    cfg: SchemeConfig,
    domain: Domain,
    nem: Nemytskii,
    // dt * S_dt diagonal
    dt_resolvent: Vec<f64>,
    resolvent: Vec<f64>,
    // row-major N x N
    jac: Vec<f64>,
    delta: Vec<f64>,
    fx: Vec<f64>,
    r: Vec<f64>,
    trial: Vec<f64>,
    trial_r: Vec<f64>,
    rhs: Vec<f64>,
    // constant Jacobian a1 I when the drift is affine and odd
    linear: Option<f64>,
}

impl Stepper {
    pub fn new<D: Drift + ?Sized>(cfg: &SchemeConfig, drift: &D, domain: Domain) -> Self {
        let n = cfg.modes;
        let resolvent: Vec<f64> = (1..=n)
            .map(|k| 1.0 / (1.0 + domain.eigenvalue(k) * cfg.dt))
            .collect();
        Self {
            cfg: cfg.clone(),
            domain,
            nem: Nemytskii::new(drift, n, domain),
            dt_resolvent: resolvent.iter().map(|s| cfg.dt * s).collect(),
            resolvent,
            jac: vec![0.0; n * n],
            delta: vec![0.0; n],
            fx: vec![0.0; n],
            r: vec![0.0; n],
            trial: vec![0.0; n],
            trial_r: vec![0.0; n],
            rhs: vec![0.0; n],
            linear: {
                let c = drift.coefficients();
                (c.a3 == 0.0 && c.a2 == 0.0).then_some(c.a1)
            },
        }
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.cfg
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    // r = x - b - dt S P F(x); returns ||r||
    fn residual(&mut self, b: &[f64], x: &[f64], r: &mut [f64]) -> f64 {
        self.nem.apply(x, &mut self.fx);
        let mut acc = 0.0;
        for k in 0..x.len() {
            r[k] = x[k] - b[k] - self.dt_resolvent[k] * self.fx[k];
            acc += r[k] * r[k];
        }
        acc.sqrt()
    }

    /// Solves `x = b + dt S_dt P^N F(x)` in place, starting from the current
    /// content of `x`. On failure returns the last iteration count and
    /// residual.
    pub fn solve_in_place(
        &mut self,
        b: &[f64],
        x: &mut [f64],
    ) -> std::result::Result<StepReport, StepReport> {
        let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let tol = self.cfg.tol * (1.0 + b_norm);
        match self.cfg.solver {
            Solver::Newton => self.newton(b, x, tol),
            Solver::FixedPoint => self.fixed_point(b, x, tol),
        }
    }

    fn newton(
        &mut self,
        b: &[f64],
        x: &mut [f64],
        tol: f64,
    ) -> std::result::Result<StepReport, StepReport> {
        let n = x.len();
        let mut r = std::mem::take(&mut self.r);
        let mut trial = std::mem::take(&mut self.trial);
        let mut trial_r = std::mem::take(&mut self.trial_r);
        let mut report = StepReport {
            residual: self.residual(b, x, &mut r),
            ..Default::default()
        };
        let result = loop {
            if report.residual <= tol {
                break Ok(report);
            }
            if report.iterations >= self.cfg.max_iter {
                break Err(report);
            }
            report.iterations += 1;

            // S^{-1} J = S^{-1} - dt DF(x) is symmetric, and positive definite
            // whenever dt (lambda_F - lambda_1) < 1
            if let Some(a1) = self.linear {
                for ((d, rk), s) in self.delta.iter_mut().zip(&r).zip(&self.resolvent) {
                    let inv = 1.0 / s;
                    *d = -rk * inv / (inv - self.cfg.dt * a1);
                }
            } else if !self.newton_direction(x, &r) {
                break Err(report);
            }
            let delta = std::mem::take(&mut self.delta);

            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                for k in 0..n {
                    trial[k] = x[k] + lambda * delta[k];
                }
                let res = self.residual(b, &trial, &mut trial_r);
                if res < report.residual || res <= tol {
                    accepted = true;
                    x.copy_from_slice(&trial);
                    std::mem::swap(&mut r, &mut trial_r);
                    report.residual = res;
                    break;
                }
                lambda *= self.cfg.damping;
                report.damped = true;
            }
            self.delta = delta;
            if !accepted {
                break Err(report);
            }
        };
        self.r = r;
        self.trial = trial;
        self.trial_r = trial_r;
        result
    }

    // Newton update into self.delta; false if the linear system is singular
    fn newton_direction(&mut self, x: &[f64], r: &[f64]) -> bool {
        let n = x.len();
        self.nem.jacobian_into(x, &mut self.jac);
        for (k, row) in self.jac.chunks_exact_mut(n).enumerate() {
            row[..=k].iter_mut().for_each(|e| *e *= -self.cfg.dt);
            row[k] += 1.0 / self.resolvent[k];
        }
        for ((d, rk), s) in self.delta.iter_mut().zip(r).zip(&self.resolvent) {
            *d = -rk / s;
        }
        if cholesky_solve(&mut self.jac, &mut self.delta) {
            return true;
        }
        // not positive definite: rebuild and fall back to LU
        self.nem.jacobian_into(x, &mut self.jac);
        let jac = &self.jac;
        let dt = self.cfg.dt;
        let mut m = DMatrix::from_fn(n, n, |k, j| -dt * jac[k.max(j) * n + k.min(j)]);
        for k in 0..n {
            m[(k, k)] += 1.0 / self.resolvent[k];
        }
        let rhs = DVector::from_iterator(n, (0..n).map(|k| -r[k] / self.resolvent[k]));
        match m.lu().solve(&rhs) {
            Some(d) => {
                self.delta.copy_from_slice(d.as_slice());
                true
            }
            None => false,
        }
    }

    fn fixed_point(
        &mut self,
        b: &[f64],
        x: &mut [f64],
        tol: f64,
    ) -> std::result::Result<StepReport, StepReport> {
        let mut r = std::mem::take(&mut self.r);
        let mut report = StepReport {
            residual: self.residual(b, x, &mut r),
            ..Default::default()
        };
        let result = loop {
            if report.residual <= tol {
                break Ok(report);
            }
            if report.iterations >= self.cfg.max_iter {
                break Err(report);
            }
            report.iterations += 1;
            // x <- b + dt S F(x) = x - r
            for (xk, rk) in x.iter_mut().zip(&r) {
                *xk -= rk;
            }
            report.residual = self.residual(b, x, &mut r);
        };
        self.r = r;
        result
    }

    /// One full-discretization step from `x` driven by `dw` (first `N`
    /// entries used). Overwrites `x`.
    pub fn step_in_place(
        &mut self,
        x: &mut [f64],
        dw: &[f64],
    ) -> std::result::Result<StepReport, StepReport> {
        let mut b = std::mem::take(&mut self.rhs);
        for (k, bk) in b.iter_mut().enumerate() {
            *bk = self.resolvent[k] * (x[k] + dw[k]);
        }
        x.copy_from_slice(&b);
        let out = self.solve_in_place(&b, x);
        self.rhs = b;
        out
    }
}

// four independent accumulators so the loop vectorises
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// In-place Cholesky factorisation of the row-major SPD matrix `a`
/// (lower triangle overwritten) followed by the solve, overwriting `b`.
/// Returns false if `a` is not positive definite.
fn cholesky_solve(a: &mut [f64], b: &mut [f64]) -> bool {
    let n = b.len();
    for j in 0..n {
        let (head, tail) = a.split_at_mut(j * n);
        let row_j = &mut tail[..n];
        for i in 0..j {
            let row_i = &head[i * n..i * n + i];
            let s = dot(row_i, &row_j[..i]);
            row_j[i] = (row_j[i] - s) / head[i * n + i];
        }
        let d = row_j[j] - dot(&row_j[..j], &row_j[..j]);
        if !(d > 0.0) {
            return false;
        }
        row_j[j] = d.sqrt();
    }
    // L y = b
    for i in 0..n {
        let row = &a[i * n..i * n + i];
        b[i] = (b[i] - dot(row, &b[..i])) / a[i * n + i];
    }
    // L^T x = y
    for i in (0..n).rev() {
        b[i] /= a[i * n + i];
        let xi = b[i];
        for (bk, l) in b[..i].iter_mut().zip(&a[i * n..i * n + i]) {
            *bk -= l * xi;
        }
    }
    true
}

/// Solves `x = b + dt S_dt P^N F(x)` starting from `b`.
pub fn implicit_solve<D: Drift + ?Sized>(
    b: &SpectralField,
    cfg: &SchemeConfig,
    drift: &D,
) -> Result<(SpectralField, StepReport)> {
    implicit_solve_from(b, b, cfg, drift)
}

/// As [`implicit_solve`] with an explicit initial guess.
pub fn implicit_solve_from<D: Drift + ?Sized>(
    b: &SpectralField,
    guess: &SpectralField,
    cfg: &SchemeConfig,
    drift: &D,
) -> Result<(SpectralField, StepReport)> {
    check_modes(b, cfg)?;
    check_modes(guess, cfg)?;
    let mut st = Stepper::new(cfg, drift, b.domain());
    let mut x = guess.coeffs().to_vec();
    match st.solve_in_place(b.coeffs(), &mut x) {
        Ok(rep) => Ok((SpectralField::from_raw(x, b.domain()), rep)),
        Err(rep) => Err(nonconvergence(0, rep)),
    }
}

/// One step `X_k -> X_{k+1}`.
pub fn step<D: Drift + ?Sized>(
    x: &SpectralField,
    dw: &[f64],
    cfg: &SchemeConfig,
    drift: &D,
) -> Result<(SpectralField, StepReport)> {
    check_modes(x, cfg)?;
    if dw.len() < cfg.modes {
        return invalid("noise row has fewer modes than the scheme");
    }
    let mut st = Stepper::new(cfg, drift, x.domain());
    let mut next = x.coeffs().to_vec();
    match st.step_in_place(&mut next, dw) {
        Ok(rep) => Ok((SpectralField::from_raw(next, x.domain()), rep)),
        Err(rep) => Err(nonconvergence(0, rep)),
    }
}

fn check_modes(u: &SpectralField, cfg: &SchemeConfig) -> Result<()> {
    if u.modes() != cfg.modes {
        return invalid(format!(
            "field has {} modes, scheme expects {}",
            u.modes(),
            cfg.modes
        ));
    }
    Ok(())
}

fn nonconvergence(step: usize, rep: StepReport) -> SpdeError {
    SpdeError::NonConvergence {
        step,
        iterations: rep.iterations,
        residual: rep.residual,
    }
}

/// Which states [`simulate_path`] keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Record {
    Final,
    Every,
    /// Steps `0, s, 2s, ...` plus the final step.
    Stride(usize),
}

impl Record {
    fn keeps(&self, k: usize, last: usize) -> bool {
        match *self {
            Record::Final => k == last,
            Record::Every => true,
            Record::Stride(s) => k.is_multiple_of(s.max(1)) || k == last,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Step indices of the recorded states.
    pub steps: Vec<usize>,
    pub states: Vec<SpectralField>,
    pub dt: f64,
    /// Largest Newton/fixed-point iteration count over all steps.
    pub max_iterations: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &SpectralField {
        self.states.last().expect("trajectories are never empty")
    }

    pub fn times(&self) -> Vec<f64> {
        self.steps.iter().map(|&k| k as f64 * self.dt).collect()
    }
}

/// Runs the scheme from `x0` over the rows of `block`, calling `observe(k,
/// X_k)` for `k = 0..=K`. Returns the largest per-step iteration count.
pub fn simulate_with<D, F>(
    x0: &SpectralField,
    block: &IncrementBlock,
    cfg: &SchemeConfig,
    drift: &D,
    mut observe: F,
) -> Result<usize>
where
    D: Drift + ?Sized,
    F: FnMut(usize, &[f64]),
{
    check_modes(x0, cfg)?;
    check_block(block, cfg)?;
    let mut st = Stepper::new(cfg, drift, x0.domain());
    let mut x = x0.coeffs().to_vec();
    let mut worst = 0;
    observe(0, &x);
    for k in 0..cfg.steps {
        let rep = st
            .step_in_place(&mut x, block.row(k))
            .map_err(|rep| nonconvergence(k, rep))?;
        worst = worst.max(rep.iterations);
        observe(k + 1, &x);
    }
    Ok(worst)
}

fn check_block(block: &IncrementBlock, cfg: &SchemeConfig) -> Result<()> {
    if block.steps() != cfg.steps || block.modes() < cfg.modes {
        return invalid(format!(
            "increment block is {}x{}, scheme needs {}x(>= {})",
            block.steps(),
            block.modes(),
            cfg.steps,
            cfg.modes
        ));
    }
    if (block.dt() - cfg.dt).abs() > 1e-12 * cfg.dt {
        return invalid(format!(
            "increment block step {} differs from scheme step {}",
            block.dt(),
            cfg.dt
        ));
    }
    Ok(())
}

/// Simulates one trajectory. `X_0` must already be projected to `N` modes.
pub fn simulate_path<D: Drift + ?Sized>(
    x0: &SpectralField,
    block: &IncrementBlock,
    cfg: &SchemeConfig,
    drift: &D,
    record: Record,
) -> Result<Trajectory> {
    let domain = x0.domain();
    let mut steps = Vec::new();
    let mut states = Vec::new();
    let last = cfg.steps;
    let max_iterations = simulate_with(x0, block, cfg, drift, |k, x| {
        if record.keeps(k, last) {
            steps.push(k);
            states.push(SpectralField::from_raw(x.to_vec(), domain));
        }
    })?;
    Ok(Trajectory {
        steps,
        states,
        dt: cfg.dt,
        max_iterations,
    })
}

/// Discrete stochastic convolution `Z_0 = 0`, `Z_{k+1} = S_dt (Z_k + dW_k)`.
pub fn z_convolution(
    block: &IncrementBlock,
    cfg: &SchemeConfig,
    domain: Domain,
) -> Result<Vec<SpectralField>> {
    check_block(block, cfg)?;
    let n = cfg.modes;
    let s: Vec<f64> = (1..=n)
        .map(|k| 1.0 / (1.0 + domain.eigenvalue(k) * cfg.dt))
        .collect();
    let mut z = vec![0.0; n];
    let mut out = Vec::with_capacity(cfg.steps + 1);
    out.push(SpectralField::from_raw(z.clone(), domain));
    for k in 0..cfg.steps {
        let dw = block.row(k);
        for j in 0..n {
            z[j] = s[j] * (z[j] + dw[j]);
        }
        out.push(SpectralField::from_raw(z.clone(), domain));
    }
    Ok(out)
}

/// `Z_k = sum_{j<k} S_dt^{k-j} dW_j` evaluated term by term.
pub fn z_convolution_explicit(
    block: &IncrementBlock,
    cfg: &SchemeConfig,
    domain: Domain,
) -> Result<Vec<SpectralField>> {
    check_block(block, cfg)?;
    let n = cfg.modes;
    let mut out = Vec::with_capacity(cfg.steps + 1);
    for k in 0..=cfg.steps {
        let coeffs = (1..=n)
            .map(|m| {
                let s = 1.0 / (1.0 + domain.eigenvalue(m) * cfg.dt);
                (0..k)
                    .map(|j| s.powi((k - j) as i32) * block.get(j, m - 1))
                    .sum()
            })
            .collect();
        out.push(SpectralField::from_raw(coeffs, domain));
    }
    Ok(out)
}

/// `Y_k = X_k - Z_k`.
pub fn y_split(path: &[SpectralField], z: &[SpectralField]) -> Result<Vec<SpectralField>> {
    if path.len() != z.len() {
        return invalid(format!(
            "path has {} states but the convolution has {}",
            path.len(),
            z.len()
        ));
    }
    path.iter()
        .zip(z)
        .map(|(x, z)| {
            if x.modes() != z.modes() {
                return invalid("mode count mismatch in y_split");
            }
            Ok(x.sub(z))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CubicNonlinearity;
    use crate::noise::{sample_increments, NoiseSpec};
    use crate::oracle::LinearModel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(rng: &mut ChaCha8Rng, n: usize, scale: f64, d: Domain) -> SpectralField {
        let c = (1..=n)
            .map(|k| scale * rng.random_range(-1.0..1.0) / k as f64)
            .collect();
        SpectralField::new(c, d).unwrap()
    }

    #[test]
    fn step_constraint_values() {
        let d = Domain::unit();
        assert_eq!(step_constraint(&CubicNonlinearity::allen_cahn(5.0), d), 1.0);
        let b = step_constraint(&CubicNonlinearity::allen_cahn(12.0), d);
        assert!((b - 1.0 / (24.0 - 2.0 * PI_SQ)).abs() < 1e-15);
        assert!((b - 0.2346).abs() < 1e-4);
        assert_eq!(
            step_constraint(&CubicNonlinearity::allen_cahn(PI_SQ), d),
            1.0
        );
    }

    const PI_SQ: f64 = std::f64::consts::PI * std::f64::consts::PI;

    #[test]
    fn oversized_step_is_rejected() {
        let m = CubicNonlinearity::allen_cahn(12.0);
        let err = SchemeConfig::new(8, 0.25, 4, &m, Domain::unit()).unwrap_err();
        assert!(matches!(err, SpdeError::StepTooLarge { .. }));
        assert!(SchemeConfig::new(8, 0.2, 4, &m, Domain::unit()).is_ok());
        assert!(SchemeConfig::new(0, 0.1, 4, &m, Domain::unit()).is_err());
        assert!(SchemeConfig::new(8, -0.1, 4, &m, Domain::unit()).is_err());
    }

    #[test]
    fn zero_is_the_root_for_odd_drift() {
        let d = Domain::unit();
        let m = CubicNonlinearity::new(1.0, 0.0, 0.0, 0.0).unwrap();
        let cfg = SchemeConfig::new(16, 1.0 / 64.0, 1, &m, d).unwrap();
        let (x, rep) = implicit_solve(&SpectralField::zeros(16, d), &cfg, &m).unwrap();
        assert!(x.coeffs().iter().all(|&v| v == 0.0));
        assert_eq!(rep.iterations, 0);
        let (x, _) = step(&SpectralField::zeros(16, d), &[0.0; 16], &cfg, &m).unwrap();
        assert_eq!(x.l2_norm(), 0.0);
    }

    #[test]
    fn linear_drift_matches_closed_form() {
        let d = Domain::new(1.5).unwrap();
        let lm = LinearModel::new(3.0);
        let dt = 1.0 / 32.0;
        let cfg = SchemeConfig::new(12, dt, 1, &lm, d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = random_field(&mut rng, 12, 2.0, d);
        let (x, _) = implicit_solve(&b, &cfg, &lm).unwrap();
        for j in 1..=12 {
            let l = d.eigenvalue(j);
            let want = b.coeffs()[j - 1] * (1.0 + l * dt) / (1.0 + l * dt - 3.0 * dt);
            assert!((x.coeffs()[j - 1] - want).abs() < 1e-10, "mode {j}");
        }
        // one step is the per-mode recursion
        let dw: Vec<f64> = (0..12).map(|_| rng.random_range(-0.1..0.1)).collect();
        let (y, _) = step(&b, &dw, &cfg, &lm).unwrap();
        for j in 1..=12 {
            let want = (b.coeffs()[j - 1] + dw[j - 1]) / (1.0 + lm.rate(d, j) * dt);
            assert!((y.coeffs()[j - 1] - want).abs() < 1e-10);
        }
    }

    #[test]
    fn residual_within_tolerance_and_unique() {
        let d = Domain::unit();
        let m = CubicNonlinearity::new(1.0, 0.7, 5.0, -0.3).unwrap();
        let cfg = SchemeConfig::new(32, 1.0 / 16.0, 1, &m, d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let b = random_field(&mut rng, 32, 3.0, d);
            let g1 = random_field(&mut rng, 32, 5.0, d);
            let g2 = random_field(&mut rng, 32, 5.0, d);
            let (x1, r1) = implicit_solve_from(&b, &g1, &cfg, &m).unwrap();
            let (x2, _) = implicit_solve_from(&b, &g2, &cfg, &m).unwrap();
            assert!(r1.residual <= cfg.tol * (1.0 + b.l2_norm()));
            assert!(x1.sub(&x2).l2_norm() <= 10.0 * cfg.tol * (1.0 + b.l2_norm()));

            let mut st = Stepper::new(&cfg, &m, d);
            let mut r = vec![0.0; 32];
            assert!(st.residual(b.coeffs(), x1.coeffs(), &mut r) <= r1.residual * 1.0001);
        }
    }

    #[test]
    fn fixed_point_agrees_with_newton() {
        let d = Domain::unit();
        let m = CubicNonlinearity::allen_cahn(5.0);
        let cfg = SchemeConfig::new(16, 1.0 / 256.0, 1, &m, d).unwrap();
        let fp = cfg.clone().with_solver(Solver::FixedPoint);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b = random_field(&mut rng, 16, 1.0, d);
        let (x, _) = implicit_solve(&b, &cfg, &m).unwrap();
        let (y, rep) = implicit_solve(&b, &fp, &m).unwrap();
        assert!(rep.iterations > 0);
        assert!(x.sub(&y).l2_norm() < 1e-9);
    }

    #[test]
    fn iteration_cap_reports_nonconvergence() {
        let d = Domain::unit();
        let m = CubicNonlinearity::allen_cahn(5.0);
        let mut cfg = SchemeConfig::new(16, 0.5, 1, &m, d).unwrap();
        cfg.max_iter = 1;
        cfg.solver = Solver::FixedPoint;
        let b = SpectralField::new(vec![20.0; 16], d).unwrap();
        match implicit_solve(&b, &cfg, &m) {
            Err(SpdeError::NonConvergence {
                iterations,
                residual,
                ..
            }) => {
                assert_eq!(iterations, 1);
                assert!(residual > 0.0);
            }
            other => panic!("expected nonconvergence, got {other:?}"),
        }
    }

    #[test]
    fn dissipative_decay_without_noise() {
        let d = Domain::unit();
        let m = CubicNonlinearity::allen_cahn(5.0);
        let cfg = SchemeConfig::new(16, 1.0 / 64.0, 1, &m, d).unwrap();
        let mut st = Stepper::new(&cfg, &m, d);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let zero = [0.0; 16];
        for _ in 0..1000 {
            let x0 = random_field(&mut rng, 16, 4.0, d);
            let mut x = x0.coeffs().to_vec();
            st.step_in_place(&mut x, &zero).unwrap();
            let before = x0.l2_norm();
            let after = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(after <= before * (1.0 + 1e-12), "{after} > {before}");
        }
    }

    #[test]
    fn empty_horizon_returns_initial_state() {
        let d = Domain::unit();
        let m = CubicNonlinearity::allen_cahn(5.0);
        let cfg = SchemeConfig::new(8, 0.1, 0, &m, d).unwrap();
        let x0 = SpectralField::mode(8, 1, 1.0, d);
        let block = IncrementBlock::zeros(0, 8, 0.1);
        let tr = simulate_path(&x0, &block, &cfg, &m, Record::Final).unwrap();
        assert_eq!(tr.states, vec![x0]);
        assert_eq!(tr.steps, vec![0]);
    }

    #[test]
    fn simulation_is_deterministic_and_records_by_policy() {
        let d = Domain::unit();
        let m = CubicNonlinearity::allen_cahn(5.0);
        let dt = 1.0 / 64.0;
        let cfg = SchemeConfig::new(16, dt, 10, &m, d).unwrap();
        let spec = NoiseSpec::power_law(0.0, 16).unwrap();
        let block = sample_increments(&spec, 9, 2, 10, dt).unwrap();
        let x0 = SpectralField::mode(16, 1, 1.0, d);
        let a = simulate_path(&x0, &block, &cfg, &m, Record::Every).unwrap();
        let b = simulate_path(&x0, &block, &cfg, &m, Record::Every).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.states.len(), 11);
        let s = simulate_path(&x0, &block, &cfg, &m, Record::Stride(4)).unwrap();
        assert_eq!(s.steps, vec![0, 4, 8, 10]);
        assert_eq!(s.states[1], a.states[4]);
        let f = simulate_path(&x0, &block, &cfg, &m, Record::Final).unwrap();
        assert_eq!(f.final_state(), a.final_state());
        assert!((f.times()[0] - 10.0 * dt).abs() < 1e-15);
    }

    #[test]
    fn block_shape_is_checked() {
        let d = Domain::unit();
        let m = CubicNonlinearity::allen_cahn(5.0);
        let cfg = SchemeConfig::new(8, 0.1, 4, &m, d).unwrap();
        let x0 = SpectralField::zeros(8, d);
        assert!(simulate_path(
            &x0,
            &IncrementBlock::zeros(3, 8, 0.1),
            &cfg,
            &m,
            Record::Final
        )
        .is_err());
        assert!(simulate_path(
            &x0,
            &IncrementBlock::zeros(4, 4, 0.1),
            &cfg,
            &m,
            Record::Final
        )
        .is_err());
        assert!(simulate_path(
            &x0,
            &IncrementBlock::zeros(4, 8, 0.05),
            &cfg,
            &m,
            Record::Final
        )
        .is_err());
        assert!(simulate_path(
            &SpectralField::zeros(4, d),
            &IncrementBlock::zeros(4, 8, 0.1),
            &cfg,
            &m,
            Record::Final
        )
        .is_err());
    }

    #[test]
    fn convolution_recursion_equals_sum() {
        let d = Domain::unit();
        let m = CubicNonlinearity::allen_cahn(5.0);
        let dt = 1.0 / 32.0;
        let cfg = SchemeConfig::new(8, dt, 16, &m, d).unwrap();
        let spec = NoiseSpec::power_law(0.5, 8).unwrap();
        let block = sample_increments(&spec, 4, 0, 16, dt).unwrap();
        let rec = z_convolution(&block, &cfg, d).unwrap();
        let sum = z_convolution_explicit(&block, &cfg, d).unwrap();
        for (a, b) in rec.iter().zip(&sum) {
            assert!(a.sub(b).l2_norm() < 1e-12);
        }
        assert_eq!(rec[0].l2_norm(), 0.0);
        for j in 1..=8 {
            let s = 1.0 / (1.0 + d.eigenvalue(j) * dt);
            assert!((rec[1].coeffs()[j - 1] - s * block.get(0, j - 1)).abs() < 1e-15);
        }
        let zero = z_convolution(&IncrementBlock::zeros(16, 8, dt), &cfg, d).unwrap();
        assert!(zero.iter().all(|z| z.l2_norm() == 0.0));
    }

    #[test]
    fn y_split_identities() {
        let d = Domain::unit();
        let m = CubicNonlinearity::allen_cahn(5.0);
        let dt = 1.0 / 32.0;
        let cfg = SchemeConfig::new(8, dt, 6, &m, d).unwrap();
        let x0 = SpectralField::mode(8, 2, 1.0, d);
        let zero = IncrementBlock::zeros(6, 8, dt);
        let path = simulate_path(&x0, &zero, &cfg, &m, Record::Every)
            .unwrap()
            .states;
        let z = z_convolution(&zero, &cfg, d).unwrap();
        assert_eq!(y_split(&path, &z).unwrap(), path);

        let spec = NoiseSpec::power_law(0.0, 8).unwrap();
        let block = sample_increments(&spec, 1, 1, 6, dt).unwrap();
        let path = simulate_path(&x0, &block, &cfg, &m, Record::Every)
            .unwrap()
            .states;
        let z = z_convolution(&block, &cfg, d).unwrap();
        let y = y_split(&path, &z).unwrap();
        assert_eq!(y[0], x0);
        assert!(y_split(&path[1..], &z).is_err());
    }
}
