//! Two-qubit polarization states, projectors and figures of merit.
//!
//! Single-qubit kets: H = (1, 0), V = (0, 1), D = (H+V)/√2, A = (H−V)/√2,
//! R = (H−iV)/√2, L = (H+iV)/√2. Two-qubit basis order is
//! {HH, HV, VH, VV} with the signal photon first.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::TomographyError;

pub type Matrix4c = Matrix4<C64>;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
const EIGEN_TOL: f64 = 1e-10;
const PURE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl Basis {
    pub const ALL: [Basis; 6] = [Basis::H, Basis::V, Basis::D, Basis::A, Basis::R, Basis::L];

    pub fn ket(self) -> Vector2<C64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (a, b) = match self {
            Basis::H => (C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
            Basis::V => (C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
            Basis::D => (C64::new(s, 0.0), C64::new(s, 0.0)),
            Basis::A => (C64::new(s, 0.0), C64::new(-s, 0.0)),
            Basis::R => (C64::new(s, 0.0), C64::new(0.0, -s)),
            Basis::L => (C64::new(s, 0.0), C64::new(0.0, s)),
        };
        Vector2::new(a, b)
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Basis::H => "H",
            Basis::V => "V",
            Basis::D => "D",
            Basis::A => "A",
            Basis::R => "R",
            Basis::L => "L",
        };
        f.write_str(c)
    }
}

impl FromStr for Basis {
    type Err = TomographyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "H" | "h" => Ok(Basis::H),
            "V" | "v" => Ok(Basis::V),
            "D" | "d" => Ok(Basis::D),
            "A" | "a" => Ok(Basis::A),
            "R" | "r" => Ok(Basis::R),
            "L" | "l" => Ok(Basis::L),
            other => Err(TomographyError::Parse(format!("unknown basis `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PolarizationSetting {
    pub signal: Basis,
    pub idler: Basis,
}

impl PolarizationSetting {
    pub fn new(signal: Basis, idler: Basis) -> Self {
        Self { signal, idler }
    }

    pub fn ket(&self) -> Vector4<C64> {
        let s = self.signal.ket();
        let i = self.idler.ket();
        Vector4::new(s[0] * i[0], s[0] * i[1], s[1] * i[0], s[1] * i[1])
    }
}

/// The 16 settings {H, V, D, R} ⊗ {H, V, D, R}.
pub fn default_settings() -> Vec<PolarizationSetting> {
    let b = [Basis::H, Basis::V, Basis::D, Basis::R];
    b.iter()
        .flat_map(|&s| b.iter().map(move |&i| PolarizationSetting::new(s, i)))
        .collect()
}

/// |ab⟩⟨ab| for the given setting.
pub fn projector(setting: PolarizationSetting) -> Matrix4c {
    let k = setting.ket();
    k * k.adjoint()
}

/// Two-qubit density matrix over {HH, HV, VH, VV}.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix4(Matrix4c);

impl DensityMatrix4 {
    /// Checks Hermiticity, unit trace and positivity.
    pub fn new(m: Matrix4c) -> Result<Self, TomographyError> {
        let herm = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > HERMITIAN_TOL {
            return Err(TomographyError::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = m.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(TomographyError::InvalidDensityMatrix(format!("trace {tr}")));
        }
        let rho = Self(m);
        let min = rho.min_eigenvalue();
        if min < -EIGEN_TOL {
            return Err(TomographyError::InvalidDensityMatrix(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(rho)
    }

    /// ψψ† / |ψ|².
    pub fn pure(psi: Vector4<C64>) -> Self {
        let n = psi.norm_squared();
        let m = psi * psi.adjoint() / C64::new(n, 0.0);
        Self(hermitize(&m))
    }

    /// Projects an arbitrary PSD-ish matrix onto a valid density matrix by
    /// Hermitizing and normalizing the trace. Callers guarantee positivity.
    pub(crate) fn from_psd(m: &Matrix4c) -> Self {
        let h = hermitize(m);
        let tr = h.trace().re;
        Self(h / C64::new(tr, 0.0))
    }

    pub fn maximally_mixed() -> Self {
        Self(Matrix4c::identity() * C64::new(0.25, 0.0))
    }

    /// p·|Φ+⟩⟨Φ+| + (1 − p)·I/4.
    pub fn werner(p: f64) -> Self {
        let m = bell_phi_plus().0 * C64::new(p, 0.0)
            + Matrix4c::identity() * C64::new((1.0 - p) / 4.0, 0.0);
        Self(m)
    }

    pub fn matrix(&self) -> &Matrix4c {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// tr(ρ²).
    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    pub fn eigenvalues(&self) -> Vector4<f64> {
        self.0.symmetric_eigenvalues()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().min()
    }

    /// Probability tr(Pρ) for a projector setting.
    pub fn probability(&self, setting: PolarizationSetting) -> f64 {
        let k = setting.ket();
        (k.adjoint() * self.0 * k)[(0, 0)].re.max(0.0)
    }

    /// ½‖ρ − σ‖₁.
    pub fn trace_distance(&self, other: &DensityMatrix4) -> f64 {
        let d = self.0 - other.0;
        0.5 * d.symmetric_eigenvalues().iter().map(|x| x.abs()).sum::<f64>()
    }
}

fn hermitize(m: &Matrix4c) -> Matrix4c {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// (|HH⟩ + |VV⟩)/√2.
pub fn bell_phi_plus() -> DensityMatrix4 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DensityMatrix4::pure(Vector4::new(
        C64::new(s, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(s, 0.0),
    ))
}

/// Retarder on the idler arm with its slow axis vertical:
/// ρ → UρU† with U = I ⊗ diag(1, e^{iφ}).
pub fn apply_phase_retarder(rho: &DensityMatrix4, phi: f64) -> DensityMatrix4 {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let idler = Matrix2::new(one, zero, zero, C64::from_polar(1.0, phi));
    let u = Matrix2::<C64>::identity().kronecker(&idler);
    DensityMatrix4(hermitize(&(u * rho.0 * u.adjoint())))
}

/// ⟨ψ|ρ|ψ⟩ for a pure target |ψ⟩⟨ψ|.
pub fn fidelity(rho: &DensityMatrix4, target: &DensityMatrix4) -> Result<f64, TomographyError> {
    let purity = target.purity();
    if (purity - 1.0).abs() > PURE_TOL {
        return Err(TomographyError::TargetNotPure { purity });
    }
    Ok((rho.0 * target.0).trace().re.clamp(0.0, 1.0))
}
