//! Q-Wiener increments in the sine basis.
//!
//! `W(t) = sum_j sqrt(q_j) beta_j(t) e_j`, truncated to the first `M_W`
//! modes. Increments are drawn from ChaCha8 streams keyed by
//! `(master seed, trajectory, step)`, and within a step the mode index
//! fixes the draw position, so a block is a pure function of its key.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::spectral::Domain;

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseKind {
    /// `q_j = (1 + j^kappa)^{-2}`.
    PowerLaw { kappa: f64 },
    /// Explicit mode variances.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    kind: NoiseKind,
    modes: usize,
}

impl NoiseSpec {
    pub fn power_law(kappa: f64, modes: usize) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return invalid(format!("kappa must be a nonnegative real, got {kappa}"));
        }
        if modes == 0 {
            return invalid("noise needs at least one mode");
        }
        Ok(Self {
            kind: NoiseKind::PowerLaw { kappa },
            modes,
        })
    }

    pub fn explicit(q: Vec<f64>) -> Result<Self> {
        if q.is_empty() {
            return invalid("noise needs at least one mode");
        }
        if let Some(j) = q.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            return invalid(format!("mode variance q_{} must be nonnegative", j + 1));
        }
        Ok(Self {
            modes: q.len(),
            kind: NoiseKind::Explicit(q),
        })
    }

    pub fn kind(&self) -> &NoiseKind {
        &self.kind
    }

    /// Truncation `M_W`.
    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Same law truncated to a different mode count. Explicit lists are
    /// zero padded or cut.
    pub fn with_modes(&self, modes: usize) -> Self {
        let kind = match &self.kind {
            NoiseKind::PowerLaw { kappa } => NoiseKind::PowerLaw { kappa: *kappa },
            NoiseKind::Explicit(q) => {
                let mut q = q.clone();
                q.resize(modes, 0.0);
                NoiseKind::Explicit(q)
            }
        };
        Self { kind, modes }
    }

    /// `q_j`, `j` 1-based.
    pub fn q(&self, j: usize) -> Result<f64> {
        if j == 0 || j > self.modes {
            return invalid(format!("mode {j} outside 1..={}", self.modes));
        }
        Ok(self.q_unchecked(j))
    }

    fn q_unchecked(&self, j: usize) -> f64 {
        match &self.kind {
            NoiseKind::PowerLaw { kappa } => {
                let a = 1.0 + (j as f64).powf(*kappa);
                1.0 / (a * a)
            }
            NoiseKind::Explicit(q) => q[j - 1],
        }
    }

    /// `q_1 .. q_{M_W}`.
    pub fn variances(&self) -> Vec<f64> {
        (1..=self.modes).map(|j| self.q_unchecked(j)).collect()
    }

    /// True when every mode variance is positive (Q invertible on the
    /// truncated space).
    pub fn is_nondegenerate(&self) -> bool {
        self.variances().iter().all(|&q| q > 0.0)
    }
}

/// `q_j` for `spec`.
pub fn q_coefficient(spec: &NoiseSpec, j: usize) -> Result<f64> {
    spec.q(j)
}

/// Noise regularity exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaBound {
    pub beta: f64,
    /// Set when `beta` was estimated from a finite variance list.
    pub estimated: bool,
}

/// Supremum of the admissible `beta` in `||(-A)^{(beta-1)/2}||_{L_2^0} < inf`.
///
/// With `lambda_j ~ j^2` and `q_j ~ j^{-2 kappa}` the series
/// `sum lambda_j^{beta-1} q_j` converges iff `beta < kappa + 1/2`; capped at 2.
/// For explicit lists the decay exponent is fitted on the upper half of the
/// nonzero tail.
pub fn beta_max(spec: &NoiseSpec, _domain: Domain) -> BetaBound {
    match spec.kind() {
        NoiseKind::PowerLaw { kappa } => BetaBound {
            beta: (kappa + 0.5).min(2.0),
            estimated: false,
        },
        NoiseKind::Explicit(q) => {
            let pts: Vec<(f64, f64)> = q
                .iter()
                .enumerate()
                .filter(|(_, &v)| v > 0.0)
                .map(|(j, &v)| (((j + 1) as f64).ln(), v.ln()))
                .collect();
            let tail = &pts[pts.len() / 2..];
            let decay = if tail.len() >= 2 {
                let n = tail.len() as f64;
                let mx = tail.iter().map(|p| p.0).sum::<f64>() / n;
                let my = tail.iter().map(|p| p.1).sum::<f64>() / n;
                let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
                let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
                if sxx > 0.0 {
                    -sxy / sxx
                } else {
                    0.0
                }
            } else {
                // finitely many active modes: smooth noise
                f64::INFINITY
            };
            let kappa = (0.5 * decay).max(0.0);
            BetaBound {
                beta: (kappa + 0.5).clamp(0.5, 2.0),
                estimated: true,
            }
        }
    }
}

/// Provenance of an increment block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedLineage {
    pub seed: u64,
    pub trajectory: u64,
}

/// `K x M_W` matrix of mode increments; row `k` covers `[t_k, t_{k+1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementBlock {
    data: Vec<f64>,
    steps: usize,
    modes: usize,
    dt: f64,
    lineage: SeedLineage,
}

impl IncrementBlock {
    pub fn from_rows(data: Vec<f64>, steps: usize, modes: usize, dt: f64) -> Result<Self> {
        if data.len() != steps * modes {
            return invalid("increment data does not match the declared shape");
        }
        Ok(Self {
            data,
            steps,
            modes,
            dt,
            lineage: SeedLineage {
                seed: 0,
                trajectory: 0,
            },
        })
    }

    pub fn zeros(steps: usize, modes: usize, dt: f64) -> Self {
        Self::from_rows(vec![0.0; steps * modes], steps, modes, dt).expect("shape")
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn lineage(&self) -> SeedLineage {
        self.lineage
    }

    #[inline]
    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.modes..(k + 1) * self.modes]
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.data[k * self.modes + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.steps).map(|k| self.get(k, j)).collect()
    }
}

const STREAM_TAG: u64 = 0x5344_455f_5157_4e31;

/// Increments are rounded to multiples of `2^-38`. Sums of such numbers
/// below `2^15` in magnitude are exact in `f64`, so coarsening does not
/// depend on how rows are grouped.
pub const INCREMENT_QUANTUM: f64 = 1.0 / (1u64 << 38) as f64;

fn quantize(x: f64) -> f64 {
    (x / INCREMENT_QUANTUM).round() * INCREMENT_QUANTUM
}

fn step_rng(seed: u64, trajectory: u64, step: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trajectory.to_le_bytes());
    key[16..24].copy_from_slice(&step.to_le_bytes());
    key[24..].copy_from_slice(&STREAM_TAG.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Draws `K` rows of independent `N(0, q_j dt)` mode increments.
pub fn sample_increments(
    spec: &NoiseSpec,
    seed: u64,
    trajectory: u64,
    steps: usize,
    dt: f64,
) -> Result<IncrementBlock> {
    if steps == 0 {
        return invalid("need at least one step");
    }
    if !(dt > 0.0) {
        return invalid(format!("step must be positive, got {dt}"));
    }
    let modes = spec.modes();
    let sd: Vec<f64> = spec.variances().iter().map(|q| (q * dt).sqrt()).collect();
    let mut data = Vec::with_capacity(steps * modes);
    for k in 0..steps {
        let mut rng = step_rng(seed, trajectory, k as u64);
        for &s in &sd {
            let z: f64 = StandardNormal.sample(&mut rng);
            data.push(quantize(s * z));
        }
    }
    Ok(IncrementBlock {
        data,
        steps,
        modes,
        dt,
        lineage: SeedLineage { seed, trajectory },
    })
}

/// Sums `factor` consecutive rows. Exact, no resampling.
pub fn coarsen(block: &IncrementBlock, factor: usize) -> Result<IncrementBlock> {
    if factor == 0 || !block.steps.is_multiple_of(factor) {
        return invalid(format!(
            "coarsening factor {factor} does not divide {} steps",
            block.steps
        ));
    }
    let steps = block.steps / factor;
    let m = block.modes;
    let mut data = vec![0.0; steps * m];
    for (k, out) in data.chunks_exact_mut(m).enumerate() {
        for r in 0..factor {
            for (o, v) in out.iter_mut().zip(block.row(k * factor + r)) {
                *o += v;
            }
        }
    }
    Ok(IncrementBlock {
        data,
        steps,
        modes: m,
        dt: block.dt * factor as f64,
        lineage: block.lineage,
    })
}
