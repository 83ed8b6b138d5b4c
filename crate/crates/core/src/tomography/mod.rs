//! Two-qubit polarization tomography.
//!
//! Settings project signal and idler onto {H, V, D, A, R, L}; counts are
//! inverted to a physical density matrix by maximum likelihood.

mod counts;
mod mle;
mod states;

use std::io::{self, BufRead, Write};

use thiserror::Error;

pub use counts::{
    expected_counts, projector_rank, simulate_counts, CountRecord, TomographyCounts,
};
pub use mle::{linear_inversion, ml_reconstruct, MlOptions, RestartOutcome, TomographyResult};
pub use states::{
    apply_phase_retarder, bell_phi_plus, default_settings, fidelity, projector, Basis,
    DensityMatrix4, Matrix4c, PolarizationSetting,
};

#[derive(Debug, Error)]
pub enum TomographyError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("measurement settings span rank {rank} of 16; the state is not identifiable")]
    InsufficientSettings { rank: usize },
    #[error("fidelity target is not pure (purity {purity})")]
    TargetNotPure { purity: f64 },
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),
    #[error("none of {restarts} optimizer restarts converged")]
    OptimizerFailed { restarts: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Writes a reconstruction as `key = value` lines. Row `i` of ρ is stored
/// as `rho_i = re im re im re im re im`.
pub fn write_result<W: Write>(result: &TomographyResult, mut w: W) -> io::Result<()> {
    writeln!(w, "fidelity_phi_plus = {}", result.fidelity_phi_plus)?;
    writeln!(w, "fidelity_lower_bound = {}", result.fidelity_lower_bound)?;
    writeln!(w, "purity = {}", result.purity)?;
    writeln!(w, "log_likelihood = {}", result.log_likelihood)?;
    writeln!(w, "restarts = {}", result.restarts)?;
    writeln!(w, "converged = {}", result.converged())?;
    let m = result.rho.matrix();
    for i in 0..4 {
        let row: Vec<String> = (0..4)
            .map(|j| format!("{} {}", m[(i, j)].re, m[(i, j)].im))
            .collect();
        writeln!(w, "rho_{i} = {}", row.join(" "))?;
    }
    Ok(())
}

/// Scalar fields and ρ read back from [`write_result`] output.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredResult {
    pub rho: DensityMatrix4,
    pub fidelity_phi_plus: f64,
    pub fidelity_lower_bound: f64,
    pub purity: f64,
    pub log_likelihood: f64,
}

pub fn read_result<R: BufRead>(r: R) -> Result<StoredResult, TomographyError> {
    let mut scalars = std::collections::HashMap::new();
    let mut m = Matrix4c::zeros();
    let mut rows = [false; 4];
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| TomographyError::Parse(format!("expected `key = value`: {line}")))?;
        let (key, value) = (key.trim(), value.trim());
        if let Some(idx) = key.strip_prefix("rho_") {
            let i: usize = idx
                .parse()
                .ok()
                .filter(|i| *i < 4)
                .ok_or_else(|| TomographyError::Parse(format!("bad row key {key}")))?;
            let nums: Vec<f64> = value
                .split_whitespace()
                .map(|v| v.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| TomographyError::Parse(format!("{key}: {e}")))?;
            if nums.len() != 8 {
                return Err(TomographyError::Parse(format!("{key}: expected 8 numbers")));
            }
            for j in 0..4 {
                m[(i, j)] = num_complex::Complex64::new(nums[2 * j], nums[2 * j + 1]);
            }
            rows[i] = true;
        } else {
            let v: f64 = value
                .parse()
                .map_err(|e| TomographyError::Parse(format!("{key}: {e}")))?;
            scalars.insert(key.to_string(), v);
        }
    }
    if rows.iter().any(|r| !r) {
        return Err(TomographyError::Parse("missing density matrix rows".into()));
    }
    let get = |k: &str| {
        scalars
            .get(k)
            .copied()
            .ok_or_else(|| TomographyError::Parse(format!("missing {k}")))
    };
    Ok(StoredResult {
        rho: DensityMatrix4::new(m)?,
        fidelity_phi_plus: get("fidelity_phi_plus")?,
        fidelity_lower_bound: get("fidelity_lower_bound")?,
        purity: get("purity")?,
        log_likelihood: get("log_likelihood")?,
    })
}
