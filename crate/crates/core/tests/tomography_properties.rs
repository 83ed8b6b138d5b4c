use fwm_core::tomography::*;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_state(seed: u64, rank: usize) -> DensityMatrix4 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Matrix4c::zeros();
    for _ in 0..rank {
        let v = nalgebra::Vector4::from_fn(|_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        m += v * v.adjoint();
    }
    let m = m / C64::new(m.trace().re, 0.0);
    DensityMatrix4::new((m + m.adjoint()) * C64::new(0.5, 0.0)).unwrap()
}

fn quick(restarts: usize, seed: u64) -> MlOptions {
    MlOptions {
        restarts,
        seed,
        ..MlOptions::default()
    }
}

fn all_36_settings() -> Vec<PolarizationSetting> {
    use Basis::*;
    let b = [H, V, D, A, R, L];
    b.iter()
        .flat_map(|&s| b.iter().map(move |&i| PolarizationSetting::new(s, i)))
        .collect()
}

#[test]
fn circular_convention_is_locked() {
    let r = Basis::R.ket();
    let l = Basis::L.ket();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    assert!((r[1] - C64::new(0.0, -s)).norm() < 1e-15);
    assert!((l[1] - C64::new(0.0, s)).norm() < 1e-15);
    // ⟨RR|Φ+⟩ ∝ 1 + i·i = 0 and ⟨RL|Φ+⟩ ∝ 1 + i·(−i) = 2.
    let phi = bell_phi_plus();
    assert!(phi.probability(PolarizationSetting::new(Basis::R, Basis::R)) < 1e-15);
    assert!((phi.probability(PolarizationSetting::new(Basis::R, Basis::L)) - 0.5).abs() < 1e-15);
}

#[test]
fn reconstruction_is_close_to_truth_for_most_seeds() {
    let truth = random_state(42, 2);
    let mut close = 0;
    let runs = 20;
    for seed in 0..runs {
        let data = simulate_counts(&truth, &default_settings(), 100_000, seed);
        let r = ml_reconstruct(&data, &quick(4, seed)).unwrap();
        if r.rho.trace_distance(&truth) < 0.02 {
            close += 1;
        }
    }
    assert!(close as f64 >= 0.95 * runs as f64, "{close}/{runs}");
}

#[test]
fn overcomplete_settings_are_accepted() {
    let truth = DensityMatrix4::werner(0.9);
    let data = simulate_counts(&truth, &all_36_settings(), 50_000, 3);
    let r = ml_reconstruct(&data, &quick(4, 0)).unwrap();
    assert!((r.fidelity_phi_plus - 0.925).abs() < 0.01);
}

#[test]
fn missing_durations_use_unit_exposure() {
    let truth = DensityMatrix4::werner(0.7);
    let mut data = simulate_counts(&truth, &default_settings(), 20_000, 8);
    let with = ml_reconstruct(&data, &quick(3, 0)).unwrap();
    for r in &mut data.records {
        r.duration = None;
    }
    let without = ml_reconstruct(&data, &quick(3, 0)).unwrap();
    assert!((with.fidelity_phi_plus - without.fidelity_phi_plus).abs() < 1e-9);
}

#[test]
fn unequal_exposures_are_accounted_for() {
    // Doubling one setting's integration time doubles its counts; the
    // estimate must not move beyond statistical noise.
    let truth = DensityMatrix4::werner(0.8);
    let settings = default_settings();
    let mut data = expected_counts(&truth, &settings, 1_000_000);
    for (k, r) in data.records.iter_mut().enumerate() {
        let d = 1.0 + (k % 3) as f64;
        r.count = (r.count as f64 * d).round() as u64;
        r.duration = Some(d);
    }
    let res = ml_reconstruct(&data, &quick(3, 0)).unwrap();
    assert!(res.rho.trace_distance(&truth) < 1e-3);
}

#[test]
fn counts_csv_round_trip() {
    let data = simulate_counts(&bell_phi_plus(), &default_settings(), 1000, 1);
    let mut buf = Vec::new();
    data.write_csv(&mut buf).unwrap();
    assert!(buf.starts_with(b"signal_basis,idler_basis,count,duration_s\n"));
    assert_eq!(TomographyCounts::read_csv(&buf[..]).unwrap(), data);
}

#[test]
fn retarder_compensates_phase() {
    let phi = 0.7;
    let rotated = apply_phase_retarder(&bell_phi_plus(), phi);
    let data = expected_counts(&rotated, &default_settings(), 100_000);
    let r = ml_reconstruct(&data, &quick(3, 0)).unwrap();
    assert!((r.fidelity_phi_plus - (1.0 + phi.cos()) / 2.0).abs() < 2e-3);
    let undone = apply_phase_retarder(&r.rho, -phi);
    assert!(fidelity(&undone, &bell_phi_plus()).unwrap() > 0.998);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn output_is_always_physical(counts in proptest::collection::vec(0u64..2000, 16)) {
        prop_assume!(counts.iter().sum::<u64>() > 0);
        let settings = default_settings();
        let data = TomographyCounts {
            records: settings
                .iter()
                .zip(&counts)
                .map(|(s, &c)| CountRecord { setting: *s, count: c, duration: Some(1.0) })
                .collect(),
        };
        let r = ml_reconstruct(&data, &quick(3, 1)).unwrap();
        let m = r.rho.matrix();
        let herm = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(herm < 1e-12);
        prop_assert!((r.rho.trace() - 1.0).abs() < 1e-10);
        prop_assert!(r.rho.min_eigenvalue() >= -1e-10);
        prop_assert!((0.25 - 1e-9..=1.0 + 1e-9).contains(&r.purity));
        prop_assert!(r.fidelity_lower_bound <= r.fidelity_phi_plus);
    }

    #[test]
    fn uniform_scaling_leaves_estimate_unchanged(seed in 0u64..1000, factor in 2u64..10) {
        let truth = random_state(seed, 3);
        let data = simulate_counts(&truth, &default_settings(), 5000, seed);
        let a = ml_reconstruct(&data, &quick(3, seed)).unwrap();
        let b = ml_reconstruct(&data.scaled(factor), &quick(3, seed)).unwrap();
        prop_assert!((a.fidelity_phi_plus - b.fidelity_phi_plus).abs() < 1e-6);
    }

    #[test]
    fn retarder_preserves_spectrum(seed in 0u64..1000, phi in -10.0..10.0f64) {
        let rho = random_state(seed, 2);
        let out = apply_phase_retarder(&rho, phi);
        let mut a: Vec<f64> = rho.eigenvalues().iter().copied().collect();
        let mut b: Vec<f64> = out.eigenvalues().iter().copied().collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}
