use nalgebra::SVD;
use num_complex::Complex64 as C64;
use serde::Serialize;

use super::dynamics::{unvec, vec, Liouvillian, Operator3, VecRho, TOP};
use super::AtomicError;

/// Singular values below this fraction of the largest count as zero when
/// deciding whether the stationary state is unique.
const NULLITY_TOL: f64 = 1e-11;

/// Normalized single-atom density matrix over {ground, intermediate, top}.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix3(Operator3);

impl DensityMatrix3 {
    pub fn matrix(&self) -> &Operator3 {
        &self.0
    }

    pub fn population(&self, level: usize) -> f64 {
        self.0[(level, level)].re
    }

    pub fn top_population(&self) -> f64 {
        self.population(TOP)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Largest |ρ − ρ†| entry.
    pub fn hermiticity_error(&self) -> f64 {
        (self.0 - self.0.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues().min()
    }
}

/// Summary of how well a state satisfies L·vec(ρ) = 0 and the density
/// matrix constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyStateCheck {
    /// ‖L·vec(ρ)‖_∞ / ‖L‖_max, i.e. the residual in units of the largest rate.
    pub relative_residual: f64,
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl SteadyStateCheck {
    pub fn of(l: &Liouvillian, rho: &DensityMatrix3) -> Self {
        let scale = l.max_abs().max(f64::MIN_POSITIVE);
        let r = l.matrix() * vec(rho.matrix());
        Self {
            relative_residual: r.iter().map(|z| z.norm()).fold(0.0, f64::max) / scale,
            trace_error: (rho.trace() - C64::new(1.0, 0.0)).norm(),
            hermiticity_error: rho.hermiticity_error(),
            min_eigenvalue: rho.min_eigenvalue(),
        }
    }
}

/// Stationary state of `l`.
///
/// The generator is rescaled by its largest entry, checked for a
/// one-dimensional null space with an SVD, and then solved directly with the
/// first row (the ground-population equation, redundant because L preserves
/// trace) replaced by the trace constraint.
pub fn steady_state(l: &Liouvillian) -> Result<DensityMatrix3, AtomicError> {
    let scale = l.max_abs();
    if scale == 0.0 {
        return Err(AtomicError::NoUniqueSteadyState { nullity: 9 });
    }
    let a = l.matrix() / C64::new(scale, 0.0);

    let sv = SVD::new(a, false, false).singular_values;
    let smax = sv.max();
    let nullity = sv.iter().filter(|&&s| s <= NULLITY_TOL * smax).count();
    if nullity != 1 {
        return Err(AtomicError::NoUniqueSteadyState { nullity });
    }

    let mut system = a;
    let mut rhs = VecRho::zeros();
    for col in 0..9 {
        system[(0, col)] = C64::new(0.0, 0.0);
    }
    for diag in [0, 4, 8] {
        system[(0, diag)] = C64::new(1.0, 0.0);
    }
    rhs[0] = C64::new(1.0, 0.0);
    let x = system
        .full_piv_lu()
        .solve(&rhs)
        .ok_or(AtomicError::NoUniqueSteadyState { nullity })?;

    let rho = unvec(&x);
    let mut rho = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let tr = rho.trace();
    rho /= tr;
    Ok(DensityMatrix3(rho))
}
