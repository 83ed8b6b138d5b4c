//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use fwm_core::atomic::{Liouvillian, Operator3, ThreeLevelParams, GROUND};
use fwm_core::constants::mhz_to_rad_per_s;
use nalgebra::SMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;

type M9 = SMatrix<C64, 9, 9>;

/// Classical fourth-order Runge-Kutta integration of dρ/dt = L·ρ from the
/// ground state to time `t`.
///
/// For a linear system one RK4 step of size h is the fixed matrix
/// P = I + A + A²/2 + A³/6 + A⁴/24 with A = hL, so 2^k steps are taken by
/// squaring P k times. h is chosen with h·‖L‖∞ ≤ 0.05.
pub fn rk4_propagate(l: &Liouvillian, t: f64) -> Operator3 {
    let m = l.matrix();
    let row_norm = (0..9)
        .map(|i| (0..9).map(|j| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut k = 0u32;
    while t / 2f64.powi(k as i32) * row_norm > 0.05 {
        k += 1;
    }
    let h = t / 2f64.powi(k as i32);
    let a = m * C64::new(h, 0.0);
    let a2 = a * a;
    let a3 = a2 * a;
    let a4 = a3 * a;
    let mut p = M9::identity()
        + a
        + a2 * C64::new(0.5, 0.0)
        + a3 * C64::new(1.0 / 6.0, 0.0)
        + a4 * C64::new(1.0 / 24.0, 0.0);
    for _ in 0..k {
        p = p * p;
    }
    let mut rho0 = Operator3::zeros();
    rho0[(GROUND, GROUND)] = C64::new(1.0, 0.0);
    let v = p * nalgebra::SVector::<C64, 9>::from_iterator(rho0.iter().copied());
    Operator3::from_iterator(v.iter().copied())
}

/// Long enough for every transient to decay below 1e-10.
pub fn relaxation_time(p: &ThreeLevelParams) -> f64 {
    50.0 / p.gamma_e.min(p.gamma_t)
}

/// A physically reasonable random parameter set with positive decay rates.
pub fn random_params<R: Rng>(rng: &mut R) -> (ThreeLevelParams, f64) {
    let p = ThreeLevelParams {
        omega_p: mhz_to_rad_per_s(rng.random_range(0.0..600.0)),
        omega_c: mhz_to_rad_per_s(rng.random_range(0.0..600.0)),
        delta_1: mhz_to_rad_per_s(rng.random_range(-2000.0..2000.0)),
        delta_2: mhz_to_rad_per_s(rng.random_range(-2000.0..2000.0)),
        gamma_e: mhz_to_rad_per_s(rng.random_range(1.0..20.0)),
        gamma_t: mhz_to_rad_per_s(rng.random_range(1.0..20.0)),
        branch_te: rng.random_range(0.0..=1.0),
        ..ThreeLevelParams::default()
    };
    (p, rng.random_range(-1000.0..1000.0))
}

pub fn max_abs_diff(a: &Operator3, b: &Operator3) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Gaussian σ of a histogram peak from its second moment within ±`half`
/// of the weighted mean, with the flat baseline removed and Sheppard's
/// correction for the bin width.
pub fn peak_sigma(delays: &[f64], counts: &[f64], baseline: f64, bin: f64, half: f64) -> f64 {
    let w: Vec<f64> = counts.iter().map(|c| c - baseline).collect();
    let mut center = delays
        .iter()
        .zip(&w)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(d, _)| *d)
        .unwrap();
    let mut var = 0.0;
    for _ in 0..3 {
        let sel: Vec<(f64, f64)> = delays
            .iter()
            .zip(&w)
            .filter(|(d, _)| (**d - center).abs() <= half)
            .map(|(d, w)| (*d, *w))
            .collect();
        let s: f64 = sel.iter().map(|x| x.1).sum();
        center = sel.iter().map(|(d, w)| d * w).sum::<f64>() / s;
        var = sel.iter().map(|(d, w)| (d - center).powi(2) * w).sum::<f64>() / s;
    }
    (var - bin * bin / 12.0).sqrt()
}
