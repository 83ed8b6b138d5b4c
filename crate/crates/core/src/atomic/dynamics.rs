//! Hamiltonian and Lindblad generator of the three-level ladder.
//!
//! Basis order is {ground, intermediate, top}. Operators are in units of
//! rad/s (H/ħ). Superoperators act on column-stacked density matrices:
//! vec(ρ)[i + 3j] = ρ[(i, j)], so vec(AXB) = (Bᵀ ⊗ A)·vec(X).

use nalgebra::{Matrix3, SMatrix, SVector};
use num_complex::Complex64 as C64;

use crate::constants::SPEED_OF_LIGHT;

use super::ThreeLevelParams;

pub const GROUND: usize = 0;
pub const INTERMEDIATE: usize = 1;
pub const TOP: usize = 2;

pub type Operator3 = Matrix3<C64>;
pub type SuperOp9 = SMatrix<C64, 9, 9>;
pub type VecRho = SVector<C64, 9>;

/// Detunings seen by an atom moving at `v` along the common beam axis.
///
/// Δ(v) = Δ + k_p·v and δ(v) = δ + ω_top·v/c. With this sign the two-photon
/// resonance sits at v = −cδ/ω_top and the pump resonance at v = −Δ/k_p.
pub fn doppler_shifted_detunings(params: &ThreeLevelParams, v: f64) -> (f64, f64) {
    let beta = v / SPEED_OF_LIGHT;
    (
        params.delta_1 + params.k_pump() * v,
        params.delta_2 + params.omega_top() * beta,
    )
}

/// Velocity class that is two-photon resonant for detuning `delta_2`.
pub fn resonant_velocity(delta_2: f64, params: &ThreeLevelParams) -> f64 {
    -SPEED_OF_LIGHT * delta_2 / params.omega_top()
}

/// Rotating-frame Hamiltonian for velocity class `v`.
pub fn build_hamiltonian(params: &ThreeLevelParams, v: f64) -> Operator3 {
    hamiltonian_with_couplings(
        params,
        C64::new(params.omega_p, 0.0),
        C64::new(params.omega_c, 0.0),
        v,
    )
}

/// Same as [`build_hamiltonian`] but with complex Rabi frequencies.
pub fn hamiltonian_with_couplings(
    params: &ThreeLevelParams,
    omega_p: C64,
    omega_c: C64,
    v: f64,
) -> Operator3 {
    let (d1, d2) = doppler_shifted_detunings(params, v);
    let zero = C64::new(0.0, 0.0);
    Matrix3::new(
        zero,
        omega_p * 0.5,
        zero,
        omega_p.conj() * 0.5,
        C64::new(-d1, 0.0),
        omega_c * 0.5,
        zero,
        omega_c.conj() * 0.5,
        C64::new(-d2, 0.0),
    )
}

/// A jump operator |to⟩⟨from| with its rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayChannel {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
}

/// intermediate→ground (γ_e), top→intermediate (b·γ_t), top→ground ((1−b)·γ_t).
pub fn decay_channels(params: &ThreeLevelParams) -> [DecayChannel; 3] {
    [
        DecayChannel {
            from: INTERMEDIATE,
            to: GROUND,
            rate: params.gamma_e,
        },
        DecayChannel {
            from: TOP,
            to: INTERMEDIATE,
            rate: params.branch_te * params.gamma_t,
        },
        DecayChannel {
            from: TOP,
            to: GROUND,
            rate: (1.0 - params.branch_te) * params.gamma_t,
        },
    ]
}

/// Lindblad generator L with vec(dρ/dt) = L·vec(ρ).
#[derive(Debug, Clone, PartialEq)]
pub struct Liouvillian(pub SuperOp9);

impl Liouvillian {
    pub fn matrix(&self) -> &SuperOp9 {
        &self.0
    }

    /// dρ/dt for the given state.
    pub fn apply(&self, rho: &Operator3) -> Operator3 {
        unvec(&(self.0 * vec(rho)))
    }

    /// Largest entry magnitude, the natural rate scale of the generator.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub fn build_liouvillian(params: &ThreeLevelParams, v: f64) -> Liouvillian {
    liouvillian_from(&build_hamiltonian(params, v), &decay_channels(params))
}

/// Generator for an arbitrary Hamiltonian and set of decay channels.
pub fn liouvillian_from(h: &Operator3, channels: &[DecayChannel]) -> Liouvillian {
    let id = Operator3::identity();
    let minus_i = C64::new(0.0, -1.0);
    let mut l: SuperOp9 = (id.kronecker(h) - h.transpose().kronecker(&id)) * minus_i;
    for ch in channels {
        if ch.rate == 0.0 {
            continue;
        }
        let mut jump = Operator3::zeros();
        jump[(ch.to, ch.from)] = C64::new(1.0, 0.0);
        let jdj = jump.adjoint() * jump;
        let term = jump.conjugate().kronecker(&jump)
            - id.kronecker(&jdj) * C64::new(0.5, 0.0)
            - jdj.transpose().kronecker(&id) * C64::new(0.5, 0.0);
        l += term * C64::new(ch.rate, 0.0);
    }
    Liouvillian(l)
}

/// Column-stacking vectorization.
pub fn vec(rho: &Operator3) -> VecRho {
    VecRho::from_iterator(rho.iter().copied())
}

pub fn unvec(v: &VecRho) -> Operator3 {
    Operator3::from_iterator(v.iter().copied())
}
