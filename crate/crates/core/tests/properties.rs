use proptest::prelude::*;

use spde_core::model::{lambda_f, nemytskii, CubicNonlinearity};
use spde_core::noise::{coarsen, sample_increments, NoiseSpec};
use spde_core::oracle::brute_force_galerkin_cubic;
use spde_core::spectral::{
    fractional_apply, resolvent_apply, semigroup_apply, to_grid, to_spectral, Domain, SpectralField,
};

fn field(max_modes: usize) -> impl Strategy<Value = SpectralField> {
    (
        0.5f64..3.0,
        prop::collection::vec(-2.0f64..2.0, 1..=max_modes),
    )
        .prop_map(|(l, c)| SpectralField::new(c, Domain::new(l).unwrap()).unwrap())
}

fn cubic() -> impl Strategy<Value = CubicNonlinearity> {
    (0.1f64..3.0, -2.0f64..2.0, -5.0f64..12.0, -2.0f64..2.0)
        .prop_map(|(a3, a2, a1, a0)| CubicNonlinearity::new(a3, a2, a1, a0).unwrap())
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grid_round_trip(u in field(40), extra in 0usize..200) {
        let m = u.modes() + extra;
        let back = to_spectral(&to_grid(&u, m).unwrap(), u.modes()).unwrap();
        prop_assert!(back.sub(&u).l2_norm() <= 1e-12 * u.l2_norm().max(1e-300));
    }

    #[test]
    fn parseval(u in field(40), extra in 0usize..200) {
        let m = u.modes() + extra;
        let g = to_grid(&u, m).unwrap();
        let h = u.domain().length() / (m + 1) as f64;
        let quad: f64 = g.values().iter().map(|v| v * v).sum::<f64>() * h;
        prop_assert!((quad - u.norm_sq()).abs() <= 1e-10 * (1.0 + u.norm_sq()));
    }

    #[test]
    fn diagonal_operators_commute(u in field(32), dt in 0.0f64..1.0, r in -1.0f64..2.0) {
        let a = resolvent_apply(&fractional_apply(&u, r), dt);
        let b = fractional_apply(&resolvent_apply(&u, dt), r);
        // identical up to the rounding of two products taken in either order
        for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
            prop_assert!((x - y).abs() <= 4.0 * f64::EPSILON * x.abs());
        }
    }

    #[test]
    fn contractions(u in field(32), dt in 0.0f64..10.0, t in 0.0f64..10.0) {
        let n = u.l2_norm();
        prop_assert!(resolvent_apply(&u, dt).l2_norm() <= n);
        prop_assert!(semigroup_apply(&u, t).unwrap().l2_norm() <= n);
    }

    #[test]
    fn dealiasing_is_exact(u in field(16), m in cubic()) {
        let fast = nemytskii(&u, u.modes(), &m);
        let slow = brute_force_galerkin_cubic(&u, u.modes(), &m).unwrap();
        prop_assert!(max_diff(fast.coeffs(), slow.coeffs()) <= 1e-12 * (1.0 + u.l2_norm().powi(3)));
    }

    #[test]
    fn one_sided_lipschitz(u in field(24), w in prop::collection::vec(-2.0f64..2.0, 24), m in cubic()) {
        let v = SpectralField::new(w[..u.modes()].to_vec(), u.domain()).unwrap();
        let n = u.modes();
        let d = nemytskii(&u, n, &m).sub(&nemytskii(&v, n, &m));
        let e = u.sub(&v);
        prop_assert!(d.dot(&e) <= lambda_f(&m) * e.norm_sq() + 1e-10);
    }

    #[test]
    fn odd_drift_is_odd(u in field(24), a3 in 0.1f64..3.0, a1 in -5.0f64..12.0) {
        let m = CubicNonlinearity::new(a3, 0.0, a1, 0.0).unwrap();
        let n = u.modes();
        prop_assert_eq!(nemytskii(&u.scale(-1.0), n, &m), nemytskii(&u, n, &m).scale(-1.0));
    }

    #[test]
    fn coarsening_composes_exactly(a in 1usize..6, b in 1usize..6, reps in 1usize..4, seed in any::<u64>()) {
        let spec = NoiseSpec::power_law(0.5, 5).unwrap();
        let block = sample_increments(&spec, seed, 3, a * b * reps, 1e-3).unwrap();
        let direct = coarsen(&block, a * b).unwrap();
        let nested = coarsen(&coarsen(&block, a).unwrap(), b).unwrap();
        prop_assert_eq!(direct, nested);
    }

    #[test]
    fn sampling_is_a_pure_function(seed in any::<u64>(), traj in 0u64..1000, steps in 1usize..20) {
        let spec = NoiseSpec::power_law(1.0, 7).unwrap();
        let a = sample_increments(&spec, seed, traj, steps, 0.01).unwrap();
        let _ = sample_increments(&spec, seed, traj + 1, steps, 0.01).unwrap();
        let b = sample_increments(&spec, seed, traj, steps, 0.01).unwrap();
        prop_assert_eq!(&a, &b);
        // a longer horizon extends the same rows
        let c = sample_increments(&spec, seed, traj, steps + 3, 0.01).unwrap();
        prop_assert_eq!(a.row(steps - 1), c.row(steps - 1));
    }
}

#[test]
fn mode_variances_and_independence() {
    let spec = NoiseSpec::power_law(0.5, 4).unwrap();
    let dt = 0.01;
    let n = 100_000;
    let block = sample_increments(&spec, 42, 0, n, dt).unwrap();
    let q = spec.variances();
    let cols: Vec<Vec<f64>> = (0..4).map(|j| block.column(j)).collect();
    for j in 0..4 {
        let var = cols[j].iter().map(|x| x * x).sum::<f64>() / n as f64;
        let want = q[j] * dt;
        assert!(
            (var / want - 1.0).abs() < 0.05,
            "mode {}: {var} vs {want}",
            j + 1
        );
    }
    let bound = 4.0 / (n as f64).sqrt();
    for i in 0..4 {
        for j in i + 1..4 {
            let c: f64 = cols[i]
                .iter()
                .zip(&cols[j])
                .map(|(x, y)| x * y)
                .sum::<f64>()
                / n as f64;
            let r = c / (q[i] * q[j]).sqrt() / dt;
            assert!(
                r.abs() <= bound,
                "modes {} {}: correlation {r}",
                i + 1,
                j + 1
            );
        }
    }
}
