use std::io::{self, Write};

use serde::Serialize;

use crate::constants::BOLTZMANN;
use crate::parallel;

use super::dynamics::build_liouvillian;
use super::steady::steady_state;
use super::{AtomicError, ThreeLevelParams, VaporParams};

/// Half-width of the default velocity grid in units of the thermal spread.
pub const DEFAULT_GRID_SIGMAS: f64 = 5.0;
pub const DEFAULT_GRID_POINTS: usize = 2001;

/// Top-state steady-state population for the velocity class `v`, used as the
/// signal scattering probability.
pub fn scattering_probability(params: &ThreeLevelParams, v: f64) -> Result<f64, AtomicError> {
    let rho = steady_state(&build_liouvillian(params, v))?;
    Ok(rho.top_population().max(0.0))
}

/// Unnormalized 1-D Maxwell-Boltzmann factor exp(−mv²/2k_BT), 1 at v = 0.
pub fn mb_weight(v: f64, vapor: &VaporParams) -> f64 {
    (-vapor.atomic_mass * v * v / (2.0 * BOLTZMANN * vapor.temperature)).exp()
}

/// Evenly spaced grid over [lo, hi] inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n).map(|i| lo + step * i as f64).collect()
        }
    }
}

/// ±5σ with 2001 points.
pub fn default_velocity_grid(vapor: &VaporParams) -> Vec<f64> {
    let half = DEFAULT_GRID_SIGMAS * vapor.velocity_sigma();
    linspace(-half, half, DEFAULT_GRID_POINTS)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Normalization {
    None,
    /// Rescale the weighted curve so its maximum is exactly 1.
    Peak,
}

/// Scattering probability across velocity classes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatteringProfile {
    pub velocities: Vec<f64>,
    pub raw: Vec<f64>,
    pub weighted: Vec<f64>,
    pub normalized: bool,
}

impl ScatteringProfile {
    pub fn len(&self) -> usize {
        self.velocities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocities.is_empty()
    }

    /// Index and velocity of the largest weighted entry (first on ties).
    pub fn weighted_peak(&self) -> Option<(usize, f64)> {
        argmax(&self.weighted).map(|i| (i, self.velocities[i]))
    }

    pub fn raw_peak(&self) -> Option<(usize, f64)> {
        argmax(&self.raw).map(|i| (i, self.velocities[i]))
    }

    /// Index of the grid point closest to `v`.
    pub fn nearest_index(&self, v: f64) -> Option<usize> {
        self.velocities
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - v).abs().total_cmp(&(b.1 - v).abs()))
            .map(|(i, _)| i)
    }

    /// Mean spacing of the velocity grid.
    pub fn grid_step(&self) -> f64 {
        match self.velocities.len() {
            0 | 1 => 0.0,
            n => (self.velocities[n - 1] - self.velocities[0]) / (n - 1) as f64,
        }
    }

    pub fn peak_normalized(mut self) -> Self {
        let max = self.weighted.iter().copied().fold(0.0, f64::max);
        if max > 0.0 {
            self.weighted.iter_mut().for_each(|w| *w /= max);
            if let Some(i) = argmax(&self.weighted) {
                self.weighted[i] = 1.0;
            }
            self.normalized = true;
        }
        self
    }

    /// CSV with header `velocity_mps,raw,weighted`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "velocity_mps,raw,weighted")?;
        for ((v, r), w) in self.velocities.iter().zip(&self.raw).zip(&self.weighted) {
            writeln!(out, "{v:.6},{r:.12e},{w:.12e}")?;
        }
        Ok(())
    }
}

fn argmax(xs: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &x) in xs.iter().enumerate() {
        match best {
            Some(b) if xs[b] >= x => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Evaluate the scattering probability over `grid` and weight it by the
/// thermal velocity distribution. Grid points are independent and may be
/// computed in parallel; the result does not depend on evaluation order.
pub fn velocity_scan(
    params: &ThreeLevelParams,
    vapor: &VaporParams,
    grid: &[f64],
    normalization: Normalization,
) -> Result<ScatteringProfile, AtomicError> {
    params.validate()?;
    vapor.validate()?;
    if grid.is_empty() {
        return Err(AtomicError::UnsortedGrid { index: 0 });
    }
    if let Some(i) = grid.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(AtomicError::UnsortedGrid { index: i + 1 });
    }

    let raw = parallel::map(grid, |&v| {
        scattering_probability(params, v).map_err(|e| AtomicError::AtVelocity {
            velocity: v,
            source: Box::new(e),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;

    Ok(assemble(grid, raw, vapor, normalization))
}

/// Sequential twin of [`velocity_scan`], kept for benchmarking and for
/// checking scheduling independence.
pub fn velocity_scan_sequential(
    params: &ThreeLevelParams,
    vapor: &VaporParams,
    grid: &[f64],
    normalization: Normalization,
) -> Result<ScatteringProfile, AtomicError> {
    params.validate()?;
    vapor.validate()?;
    let raw = parallel::map_sequential(grid, |&v| scattering_probability(params, v))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok(assemble(grid, raw, vapor, normalization))
}

fn assemble(
    grid: &[f64],
    raw: Vec<f64>,
    vapor: &VaporParams,
    normalization: Normalization,
) -> ScatteringProfile {
    let weighted = grid
        .iter()
        .zip(&raw)
        .map(|(&v, &r)| r * mb_weight(v, vapor))
        .collect();
    let profile = ScatteringProfile {
        velocities: grid.to_vec(),
        raw,
        weighted,
        normalized: false,
    };
    match normalization {
        Normalization::None => profile,
        Normalization::Peak => profile.peak_normalized(),
    }
}

/// Pearson correlation between the weighted profile and the bare thermal
/// distribution on the same grid.
pub fn profile_mb_overlap(
    profile: &ScatteringProfile,
    vapor: &VaporParams,
) -> Result<f64, AtomicError> {
    if profile.len() < 3 {
        return Err(AtomicError::DegenerateProfile);
    }
    let mb: Vec<f64> = profile.velocities.iter().map(|&v| mb_weight(v, vapor)).collect();
    pearson(&profile.weighted, &mb).ok_or(AtomicError::DegenerateProfile)
}

/// Pearson correlation; `None` if either input has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len().min(b.len());
    if n == 0 {
        return None;
    }
    let ma = a[..n].iter().sum::<f64>() / n as f64;
    let mb = b[..n].iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a[..n].iter().zip(&b[..n]) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::mhz_to_rad_per_s;

    #[test]
    fn mb_weight_values() {
        let vapor = VaporParams::default();
        assert_eq!(mb_weight(0.0, &vapor), 1.0);
        let s = vapor.velocity_sigma();
        assert!((mb_weight(s, &vapor) - (-0.5f64).exp()).abs() < 1e-14);
        assert!((mb_weight(-s, &vapor) - (-0.5f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn default_grid_shape() {
        let vapor = VaporParams::default();
        let g = default_velocity_grid(&vapor);
        assert_eq!(g.len(), 2001);
        assert!((g[1000]).abs() < 1e-9);
        assert!((g[2000] - 5.0 * vapor.velocity_sigma()).abs() < 1e-9);
    }

    #[test]
    fn no_pump_scatters_nothing() {
        let p = ThreeLevelParams {
            omega_p: 0.0,
            ..ThreeLevelParams::default()
        };
        assert_eq!(scattering_probability(&p, 250.0).unwrap(), 0.0);
        let prof = velocity_scan(&p, &VaporParams::default(), &[0.0, 1.0, 2.0], Normalization::Peak)
            .unwrap();
        assert!(!prof.normalized);
    }

    #[test]
    fn single_point_scan_matches_pointwise() {
        let p = ThreeLevelParams::default();
        let vapor = VaporParams::default();
        let prof = velocity_scan(&p, &vapor, &[123.0], Normalization::None).unwrap();
        assert_eq!(prof.len(), 1);
        assert_eq!(prof.raw[0], scattering_probability(&p, 123.0).unwrap());
        assert_eq!(prof.weighted[0], prof.raw[0] * mb_weight(123.0, &vapor));
    }

    #[test]
    fn rejects_unsorted_grid() {
        let p = ThreeLevelParams::default();
        let err = velocity_scan(&p, &VaporParams::default(), &[0.0, 2.0, 2.0], Normalization::None)
            .unwrap_err();
        assert!(matches!(err, AtomicError::UnsortedGrid { index: 2 }));
    }

    #[test]
    fn solver_failure_names_velocity() {
        let p = ThreeLevelParams {
            gamma_e: 0.0,
            gamma_t: 0.0,
            ..ThreeLevelParams::default()
        };
        let err = velocity_scan(&p, &VaporParams::default(), &[-3.0, 4.0], Normalization::None)
            .unwrap_err();
        assert!(matches!(err, AtomicError::AtVelocity { velocity, .. } if velocity == -3.0));
    }

    #[test]
    fn peak_normalization() {
        let p = ThreeLevelParams::default();
        let vapor = VaporParams::default();
        let grid = linspace(-400.0, 400.0, 81);
        let prof = velocity_scan(&p, &vapor, &grid, Normalization::Peak).unwrap();
        assert!(prof.normalized);
        let max = prof.weighted.iter().copied().fold(f64::MIN, f64::max);
        assert!((max - 1.0).abs() <= 1e-12);
        assert!(prof.raw.iter().chain(&prof.weighted).all(|&x| x >= 0.0));
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let p = ThreeLevelParams {
            delta_2: mhz_to_rad_per_s(-1200.0),
            ..ThreeLevelParams::default()
        };
        let vapor = VaporParams::default();
        let grid = linspace(-900.0, 900.0, 301);
        let a = velocity_scan(&p, &vapor, &grid, Normalization::Peak).unwrap();
        let b = velocity_scan_sequential(&p, &vapor, &grid, Normalization::Peak).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn overlap_limits() {
        let vapor = VaporParams::default();
        let v = linspace(-500.0, 500.0, 101);
        let mb: Vec<f64> = v.iter().map(|&x| mb_weight(x, &vapor)).collect();
        let mut prof = ScatteringProfile {
            velocities: v.clone(),
            raw: mb.clone(),
            weighted: mb.clone(),
            normalized: false,
        };
        assert!((profile_mb_overlap(&prof, &vapor).unwrap() - 1.0).abs() < 1e-12);
        prof.weighted = mb.iter().map(|x| -x).collect();
        assert!((profile_mb_overlap(&prof, &vapor).unwrap() + 1.0).abs() < 1e-12);
        prof.weighted = vec![0.5; v.len()];
        assert!(matches!(
            profile_mb_overlap(&prof, &vapor),
            Err(AtomicError::DegenerateProfile)
        ));
        prof.velocities.truncate(2);
        prof.weighted.truncate(2);
        assert!(profile_mb_overlap(&prof, &vapor).is_err());
    }

    #[test]
    fn csv_header() {
        let prof = ScatteringProfile {
            velocities: vec![0.0],
            raw: vec![0.5],
            weighted: vec![1.0],
            normalized: true,
        };
        let mut buf = Vec::new();
        prof.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("velocity_mps,raw,weighted\n0.000000,"));
    }
}
