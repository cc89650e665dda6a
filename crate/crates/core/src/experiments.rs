//! Monte Carlo harnesses: weak and strong error curves in time, weak error
//! curves in space, and ergodic averages from several initial values.
//!
//! Every trajectory draws its noise from a key derived from `(seed,
//! trajectory index)`, results land in an indexed buffer and are reduced in
//! index order, so estimates do not depend on the number of workers.

use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};

use crate::error::{invalid, Result, SpdeError};
use crate::integrator::{simulate_with, SchemeConfig, SolverOptions};
use crate::model::Drift;
use crate::noise::{coarsen, sample_increments, NoiseSpec};
use crate::spectral::{Domain, SpectralField};

/// Test functionals, all maps of the coefficient norm `||u||`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Functional {
    CosNormSq,
    ExpNegNormSq,
    SinNorm,
    Norm4,
    SinNormSq,
    Sqrt2CosNormSqShift,
    NormSq,
}

impl Functional {
    pub const ALL: [Functional; 7] = [
        Functional::CosNormSq,
        Functional::ExpNegNormSq,
        Functional::SinNorm,
        Functional::Norm4,
        Functional::SinNormSq,
        Functional::Sqrt2CosNormSqShift,
        Functional::NormSq,
    ];

    /// `cos ||u||^2`, `exp(-||u||^2)`, `sin ||u||`, `||u||^4`.
    pub const WEAK_SET: [Functional; 4] = [
        Functional::CosNormSq,
        Functional::ExpNegNormSq,
        Functional::SinNorm,
        Functional::Norm4,
    ];

    /// `sin ||u||^2`, `sqrt2 cos(||u||^2 - pi/4)`, `exp(-||u||^2)`.
    pub const ERGODIC_SET: [Functional; 3] = [
        Functional::SinNormSq,
        Functional::Sqrt2CosNormSqShift,
        Functional::ExpNegNormSq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Functional::CosNormSq => "cos_norm_sq",
            Functional::ExpNegNormSq => "exp_neg_norm_sq",
            Functional::SinNorm => "sin_norm",
            Functional::Norm4 => "norm_4",
            Functional::SinNormSq => "sin_norm_sq",
            Functional::Sqrt2CosNormSqShift => "sqrt2_cos_norm_sq_shift",
            Functional::NormSq => "norm_sq",
        }
    }

    pub fn from_name(name: &str) -> Option<Functional> {
        Functional::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Value at a coefficient vector.
    pub fn eval_coeffs(self, u: &[f64]) -> f64 {
        let s: f64 = u.iter().map(|v| v * v).sum();
        match self {
            Functional::CosNormSq => s.cos(),
            Functional::ExpNegNormSq => (-s).exp(),
            Functional::SinNorm => s.sqrt().sin(),
            Functional::Norm4 => s * s,
            Functional::SinNormSq => s.sin(),
            Functional::Sqrt2CosNormSqShift => SQRT_2 * (s - FRAC_PI_4).cos(),
            Functional::NormSq => s,
        }
    }
}

pub fn evaluate_functional(phi: Functional, u: &SpectralField) -> f64 {
    phi.eval_coeffs(u.coeffs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

impl McEstimate {
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n < 2 {
            return invalid(format!("need at least 2 samples, got {n}"));
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Ok(Self {
            mean,
            std_error: (var / n as f64).sqrt(),
            n,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    pub h: f64,
    pub err: f64,
    pub se: f64,
    pub n: usize,
}

impl RateRow {
    /// Errors below three standard errors are indistinguishable from MC noise.
    pub fn noise_floor(&self) -> bool {
        self.err < 3.0 * self.se
    }

    fn fittable(&self) -> bool {
        self.err > 0.0 && self.err.is_finite() && !self.noise_floor()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    pub slope: Option<f64>,
    pub slope_se: Option<f64>,
    /// Why no slope was fitted, if none was.
    pub fit_error: Option<String>,
}

impl RateTable {
    pub fn from_rows(rows: Vec<RateRow>) -> Self {
        match fit_rate(&rows) {
            Ok((slope, se)) => Self {
                rows,
                slope: Some(slope),
                slope_se: Some(se),
                fit_error: None,
            },
            Err(e) => Self {
                rows,
                slope: None,
                slope_se: None,
                fit_error: Some(e.to_string()),
            },
        }
    }

    /// Rows entering the fit.
    pub fn fitted_rows(&self) -> impl Iterator<Item = &RateRow> {
        self.rows.iter().filter(|r| r.fittable())
    }
}

/// Least squares of `log err` on `log h` over rows with positive error above
/// the noise floor. Returns `(slope, standard error of slope)`.
pub fn fit_rate(rows: &[RateRow]) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.fittable())
        .map(|r| (r.h.ln(), r.err.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(SpdeError::Fit(format!(
            "{} usable rows out of {}, need 3",
            pts.len(),
            rows.len()
        )));
    }
    if pts.iter().any(|(x, _)| !x.is_finite()) {
        return Err(SpdeError::Fit(
            "discretization parameters must be positive".into(),
        ));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(SpdeError::Fit(
            "all rows share one discretization parameter".into(),
        ));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = pts
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
        .sum();
    Ok((slope, (rss / (n - 2.0) / sxx).sqrt()))
}

/// Sample count, master seed and worker count of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarlo {
    pub samples: usize,
    pub seed: u64,
    /// 0 lets the thread pool choose.
    pub workers: usize,
}

impl MonteCarlo {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            seed,
            workers: 0,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    fn check(&self) -> Result<()> {
        if self.samples < 2 {
            return invalid(format!("need at least 2 samples, got {}", self.samples));
        }
        Ok(())
    }
}

/// Model, noise and initial datum shared by all harnesses. `x0` carries at
/// least as many modes as any run needs; runs truncate it.
pub struct Problem<'a, D: Drift + ?Sized> {
    pub drift: &'a D,
    pub noise: NoiseSpec,
    pub x0: SpectralField,
}

impl<D: Drift + ?Sized> Problem<'_, D> {
    pub fn domain(&self) -> Domain {
        self.x0.domain()
    }
}

/// `c sin(pi x / L)` for each `c`, projected to `modes` modes.
pub fn sine_initial_values(
    scales: &[f64],
    modes: usize,
    domain: Domain,
) -> Result<Vec<SpectralField>> {
    let l = domain.length();
    scales
        .iter()
        .map(|&c| SpectralField::project(|x| c * (PI * x / l).sin(), modes, 4 * modes - 1, domain))
        .collect()
}

fn parallel_map<T, F>(n: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let run = || (0..n).into_par_iter().map(&f).collect();
        match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        (0..n).map(f).collect()
    }
}

fn check_exclusions(failed: usize, total: usize) -> Result<()> {
    // at most 0.1% of trajectories may be dropped
    if failed * 1000 > total {
        return Err(SpdeError::Exclusions { failed, total });
    }
    Ok(())
}

fn ratio(a: f64, b: f64, what: &str) -> Result<usize> {
    let r = a / b;
    let k = r.round();
    if !(k >= 1.0) || (r - k).abs() > 1e-9 * k {
        return invalid(format!("{what}: {a} is not an integer multiple of {b}"));
    }
    Ok(k as usize)
}

/// What a coarse run is compared against.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    /// Same scheme at a finer step on the same (summed) Brownian increments.
    Fine { dt: f64 },
    /// Exact expectation of each functional, in functional order.
    Exact(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalSetup {
    pub options: SolverOptions,
    pub modes: usize,
    pub horizon: f64,
    pub dt_list: Vec<f64>,
    pub reference: Reference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalOutcome {
    /// One weak-error table per functional.
    pub weak: Vec<RateTable>,
    /// Pathwise error against the fine reference; `None` for exact references.
    pub strong: Option<RateTable>,
    /// Standard error each weak row would have without pairing.
    pub unpaired_se: Vec<Vec<f64>>,
    pub excluded: usize,
    pub max_iterations: usize,
}

struct Level {
    cfg: SchemeConfig,
    factor: usize,
}

// per-trajectory results; levels then functionals
struct TemporalSample {
    phi: Vec<Vec<f64>>,
    phi_ref: Vec<f64>,
    sq_dist: Vec<f64>,
    iterations: usize,
}

/// Weak (and, with a fine reference, strong) errors at each step of
/// `dt_list`, from one noise block per trajectory.
pub fn temporal_study<D: Drift + ?Sized>(
    problem: &Problem<'_, D>,
    setup: &TemporalSetup,
    functionals: &[Functional],
    mc: MonteCarlo,
) -> Result<TemporalOutcome> {
    mc.check()?;
    if setup.dt_list.is_empty() {
        return invalid("empty step list");
    }
    let domain = problem.domain();
    let n = setup.modes;
    if problem.x0.modes() < n {
        return invalid("initial datum has fewer modes than the scheme");
    }
    let mut dts = setup.dt_list.clone();
    dts.sort_by(|a, b| b.total_cmp(a));
    dts.dedup();
    let (base_dt, exact) = match &setup.reference {
        Reference::Fine { dt } => (*dt, None),
        Reference::Exact(v) => {
            if v.len() != functionals.len() {
                return invalid("one exact value per functional is required");
            }
            (*dts.last().expect("nonempty"), Some(v.clone()))
        }
    };
    let base_steps = ratio(setup.horizon, base_dt, "horizon")?;
    let base_cfg = SchemeConfig::new(n, base_dt, base_steps, problem.drift, domain)?
        .with_options(setup.options);
    let levels = dts
        .iter()
        .map(|&dt| {
            let factor = ratio(dt, base_dt, "step")?;
            if base_steps % factor != 0 {
                return invalid(format!("step {dt} does not divide the horizon"));
            }
            Ok(Level {
                cfg: SchemeConfig::new(n, dt, base_steps / factor, problem.drift, domain)?
                    .with_options(setup.options),
                factor,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let x0 = problem.x0.truncate(n);
    let noise = problem.noise.with_modes(n);

    let samples = parallel_map(mc.samples, mc.workers, |i| -> Option<TemporalSample> {
        let fine = sample_increments(&noise, mc.seed, i as u64, base_steps, base_dt).ok()?;
        let mut iterations = 0;
        let mut x_ref = Vec::new();
        if exact.is_none() {
            iterations = simulate_with(&x0, &fine, &base_cfg, problem.drift, |k, x| {
                if k == base_steps {
                    x_ref = x.to_vec();
                }
            })
            .ok()?;
        }
        let mut phi = Vec::with_capacity(levels.len());
        let mut sq_dist = Vec::with_capacity(levels.len());
        for lv in &levels {
            let block = coarsen(&fine, lv.factor).ok()?;
            let last = lv.cfg.steps();
            let mut x_end = Vec::new();
            let it = simulate_with(&x0, &block, &lv.cfg, problem.drift, |k, x| {
                if k == last {
                    x_end = x.to_vec();
                }
            })
            .ok()?;
            iterations = iterations.max(it);
            phi.push(functionals.iter().map(|f| f.eval_coeffs(&x_end)).collect());
            if exact.is_none() {
                sq_dist.push(x_end.iter().zip(&x_ref).map(|(a, b)| (a - b).powi(2)).sum());
            }
        }
        let phi_ref = if exact.is_none() {
            functionals.iter().map(|f| f.eval_coeffs(&x_ref)).collect()
        } else {
            Vec::new()
        };
        Some(TemporalSample {
            phi,
            phi_ref,
            sq_dist,
            iterations,
        })
    });

    let kept: Vec<&TemporalSample> = samples.iter().flatten().collect();
    let excluded = samples.len() - kept.len();
    check_exclusions(excluded, samples.len())?;
    if kept.len() < 2 {
        return Err(SpdeError::Exclusions {
            failed: excluded,
            total: samples.len(),
        });
    }
    let max_iterations = kept.iter().map(|s| s.iterations).max().unwrap_or(0);

    let mut weak = Vec::with_capacity(functionals.len());
    let mut unpaired_se = Vec::with_capacity(functionals.len());
    for p in 0..functionals.len() {
        let mut rows = Vec::with_capacity(levels.len());
        let mut unpaired = Vec::with_capacity(levels.len());
        for (l, &dt) in dts.iter().enumerate() {
            let coarse: Vec<f64> = kept.iter().map(|s| s.phi[l][p]).collect();
            let c = McEstimate::from_samples(&coarse)?;
            let (est, un) = match &exact {
                Some(v) => {
                    let e = McEstimate {
                        mean: c.mean - v[p],
                        ..c
                    };
                    (e, c.std_error)
                }
                None => {
                    let refs: Vec<f64> = kept.iter().map(|s| s.phi_ref[p]).collect();
                    let diffs: Vec<f64> = coarse.iter().zip(&refs).map(|(a, b)| a - b).collect();
                    let r = McEstimate::from_samples(&refs)?;
                    (
                        McEstimate::from_samples(&diffs)?,
                        c.std_error.hypot(r.std_error),
                    )
                }
            };
            rows.push(RateRow {
                h: dt,
                err: est.mean.abs(),
                se: est.std_error,
                n: est.n,
            });
            unpaired.push(un);
        }
        weak.push(RateTable::from_rows(rows));
        unpaired_se.push(unpaired);
    }

    let strong = exact.is_none().then(|| {
        let rows = dts
            .iter()
            .enumerate()
            .map(|(l, &dt)| {
                let sq: Vec<f64> = kept.iter().map(|s| s.sq_dist[l]).collect();
                let m = McEstimate::from_samples(&sq).expect("at least two samples");
                let err = m.mean.sqrt();
                // delta method for the square root
                let se = if err > 0.0 {
                    m.std_error / (2.0 * err)
                } else {
                    0.0
                };
                RateRow {
                    h: dt,
                    err,
                    se,
                    n: m.n,
                }
            })
            .collect();
        RateTable::from_rows(rows)
    });

    Ok(TemporalOutcome {
        weak,
        strong,
        unpaired_se,
        excluded,
        max_iterations,
    })
}

/// `|E phi(X^dt_K) - E phi(X^ref)|` per step in `dt_list`, coarse and fine
/// runs sharing Brownian paths.
pub fn weak_error_curve<D: Drift + ?Sized>(
    problem: &Problem<'_, D>,
    setup: &TemporalSetup,
    phi: Functional,
    mc: MonteCarlo,
) -> Result<RateTable> {
    let mut out = temporal_study(problem, setup, &[phi], mc)?;
    Ok(out.weak.remove(0))
}

/// `(E ||X^dt_K - X^ref||^2)^{1/2}` per step in `dt_list`.
pub fn strong_error_curve<D: Drift + ?Sized>(
    problem: &Problem<'_, D>,
    setup: &TemporalSetup,
    mc: MonteCarlo,
) -> Result<RateTable> {
    if !matches!(setup.reference, Reference::Fine { .. }) {
        return invalid("strong errors need a fine pathwise reference");
    }
    let out = temporal_study(problem, setup, &[], mc)?;
    Ok(out.strong.expect("fine reference"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialSetup {
    pub options: SolverOptions,
    pub modes_list: Vec<usize>,
    pub reference_modes: usize,
    pub dt: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialOutcome {
    /// One table per functional, `h = lambda_N`, rows with `N` decreasing.
    pub weak: Vec<RateTable>,
    pub excluded: usize,
    pub max_iterations: usize,
}

/// Weak errors against a run with `reference_modes` modes; a run with `N`
/// modes sees the first `N` columns of the same noise block.
pub fn spatial_weak_error_curve<D: Drift + ?Sized>(
    problem: &Problem<'_, D>,
    setup: &SpatialSetup,
    functionals: &[Functional],
    mc: MonteCarlo,
) -> Result<SpatialOutcome> {
    mc.check()?;
    let domain = problem.domain();
    let mut ns = setup.modes_list.clone();
    ns.sort_unstable_by(|a, b| b.cmp(a));
    ns.dedup();
    let n_ref = setup.reference_modes;
    if ns.is_empty() || ns[0] >= n_ref {
        return invalid(format!(
            "reference dimension {n_ref} must exceed every entry of the dimension list"
        ));
    }
    if problem.x0.modes() < n_ref {
        return invalid("initial datum has fewer modes than the reference run");
    }
    let steps = ratio(setup.horizon, setup.dt, "horizon")?;
    let ref_cfg = SchemeConfig::new(n_ref, setup.dt, steps, problem.drift, domain)?
        .with_options(setup.options);
    let cfgs = ns
        .iter()
        .map(|&n| {
            SchemeConfig::new(n, setup.dt, steps, problem.drift, domain)
                .map(|c| c.with_options(setup.options))
        })
        .collect::<Result<Vec<_>>>()?;
    let x0_ref = problem.x0.truncate(n_ref);
    let noise = problem.noise.with_modes(n_ref);

    let samples = parallel_map(
        mc.samples,
        mc.workers,
        |i| -> Option<(Vec<Vec<f64>>, Vec<f64>, usize)> {
            let block = sample_increments(&noise, mc.seed, i as u64, steps, setup.dt).ok()?;
            let mut end = Vec::new();
            let mut iterations = simulate_with(&x0_ref, &block, &ref_cfg, problem.drift, |k, x| {
                if k == steps {
                    end = x.to_vec();
                }
            })
            .ok()?;
            let phi_ref = functionals.iter().map(|f| f.eval_coeffs(&end)).collect();
            let mut phi = Vec::with_capacity(cfgs.len());
            for cfg in &cfgs {
                let x0 = x0_ref.truncate(cfg.modes());
                let it = simulate_with(&x0, &block, cfg, problem.drift, |k, x| {
                    if k == steps {
                        end = x.to_vec();
                    }
                })
                .ok()?;
                iterations = iterations.max(it);
                phi.push(functionals.iter().map(|f| f.eval_coeffs(&end)).collect());
            }
            Some((phi, phi_ref, iterations))
        },
    );

    let kept: Vec<_> = samples.iter().flatten().collect();
    let excluded = samples.len() - kept.len();
    check_exclusions(excluded, samples.len())?;
    if kept.len() < 2 {
        return Err(SpdeError::Exclusions {
            failed: excluded,
            total: samples.len(),
        });
    }
    let max_iterations = kept.iter().map(|s| s.2).max().unwrap_or(0);
    let mut weak = Vec::with_capacity(functionals.len());
    for p in 0..functionals.len() {
        let rows = ns
            .iter()
            .enumerate()
            .map(|(l, &n)| {
                let diffs: Vec<f64> = kept.iter().map(|s| s.0[l][p] - s.1[p]).collect();
                let e = McEstimate::from_samples(&diffs)?;
                Ok(RateRow {
                    h: domain.eigenvalue(n),
                    err: e.mean.abs(),
                    se: e.std_error,
                    n: e.n,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        weak.push(RateTable::from_rows(rows));
    }
    Ok(SpatialOutcome {
        weak,
        excluded,
        max_iterations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicitySetup {
    pub options: SolverOptions,
    pub initial_values: Vec<SpectralField>,
    pub modes: usize,
    pub dt: f64,
    pub horizon: f64,
    /// Record every `stride` steps (and the last step).
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicityOutcome {
    pub times: Vec<f64>,
    pub functionals: Vec<Functional>,
    /// `series[init][phi][time]`.
    pub series: Vec<Vec<Vec<McEstimate>>>,
    pub excluded: usize,
    pub max_iterations: usize,
}

/// Largest pairwise gap between the final averages of one functional,
/// against three combined standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coincidence {
    pub functional: Functional,
    pub max_diff: f64,
    /// `max_diff / (3 sqrt(se_i^2 + se_j^2))` over the worst pair.
    pub worst_ratio: f64,
}

impl Coincidence {
    pub fn holds(&self) -> bool {
        self.worst_ratio <= 1.0
    }
}

impl ErgodicityOutcome {
    pub fn coincidence(&self) -> Vec<Coincidence> {
        let last = self.times.len() - 1;
        self.functionals
            .iter()
            .enumerate()
            .map(|(p, &functional)| {
                let finals: Vec<McEstimate> = self.series.iter().map(|s| s[p][last]).collect();
                let mut max_diff = 0.0f64;
                let mut worst_ratio = 0.0f64;
                for i in 0..finals.len() {
                    for j in i + 1..finals.len() {
                        let d = (finals[i].mean - finals[j].mean).abs();
                        let bound = 3.0 * finals[i].std_error.hypot(finals[j].std_error);
                        max_diff = max_diff.max(d);
                        let r = if bound > 0.0 {
                            d / bound
                        } else if d == 0.0 {
                            0.0
                        } else {
                            f64::INFINITY
                        };
                        worst_ratio = worst_ratio.max(r);
                    }
                }
                Coincidence {
                    functional,
                    max_diff,
                    worst_ratio,
                }
            })
            .collect()
    }
}

/// MC averages of each functional along time, per initial value. Trajectory
/// `i` of initial value `c` uses noise index `c * samples + i`.
pub fn ergodicity_run<D: Drift + ?Sized>(
    drift: &D,
    noise: &NoiseSpec,
    setup: &ErgodicitySetup,
    functionals: &[Functional],
    mc: MonteCarlo,
) -> Result<ErgodicityOutcome> {
    mc.check()?;
    let Some(first) = setup.initial_values.first() else {
        return invalid("no initial values");
    };
    let domain = first.domain();
    if setup.initial_values.iter().any(|x| x.modes() < setup.modes) {
        return invalid("an initial value has fewer modes than the scheme");
    }
    let steps = ratio(setup.horizon, setup.dt, "horizon")?;
    let cfg =
        SchemeConfig::new(setup.modes, setup.dt, steps, drift, domain)?.with_options(setup.options);
    let stride = setup.stride.max(1);
    let recorded: Vec<usize> = (0..=steps)
        .filter(|&k| k % stride == 0 || k == steps)
        .collect();
    let noise = noise.with_modes(setup.modes);
    let inits: Vec<SpectralField> = setup
        .initial_values
        .iter()
        .map(|x| x.truncate(setup.modes))
        .collect();
    let n = mc.samples;

    let samples = parallel_map(
        inits.len() * n,
        mc.workers,
        |id| -> Option<(Vec<f64>, usize)> {
            let x0 = &inits[id / n];
            let block = sample_increments(&noise, mc.seed, id as u64, steps, setup.dt).ok()?;
            // time-major, functionals inner
            let mut vals = Vec::with_capacity(recorded.len() * functionals.len());
            let it = simulate_with(x0, &block, &cfg, drift, |k, x| {
                if k % stride == 0 || k == steps {
                    vals.extend(functionals.iter().map(|f| f.eval_coeffs(x)));
                }
            })
            .ok()?;
            Some((vals, it))
        },
    );

    let excluded = samples.iter().filter(|s| s.is_none()).count();
    check_exclusions(excluded, samples.len())?;
    let max_iterations = samples.iter().flatten().map(|s| s.1).max().unwrap_or(0);
    let nf = functionals.len();
    let mut series = Vec::with_capacity(inits.len());
    for chunk in samples.chunks(n) {
        let kept: Vec<&Vec<f64>> = chunk.iter().flatten().map(|s| &s.0).collect();
        let mut per_phi = Vec::with_capacity(nf);
        for p in 0..nf {
            let est = (0..recorded.len())
                .map(|t| {
                    let xs: Vec<f64> = kept.iter().map(|v| v[t * nf + p]).collect();
                    McEstimate::from_samples(&xs)
                })
                .collect::<Result<Vec<_>>>()?;
            per_phi.push(est);
        }
        series.push(per_phi);
    }
    Ok(ErgodicityOutcome {
        times: recorded.iter().map(|&k| k as f64 * setup.dt).collect(),
        functionals: functionals.to_vec(),
        series,
        excluded,
        max_iterations,
    })
}
