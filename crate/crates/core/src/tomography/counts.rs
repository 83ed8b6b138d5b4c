use std::io::{self, BufRead, Write};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::states::{projector, DensityMatrix4, PolarizationSetting};
use super::TomographyError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub setting: PolarizationSetting,
    pub count: u64,
    /// Integration time for this setting, s; `None` when not recorded.
    pub duration: Option<f64>,
}

/// Coincidence counts per projective setting.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TomographyCounts {
    pub records: Vec<CountRecord>,
}

impl TomographyCounts {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.records.iter().map(|r| r.count).sum()
    }

    /// Relative exposure of each setting (durations, or 1 when unrecorded).
    pub fn exposures(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.duration.unwrap_or(1.0)).collect()
    }

    /// Multiply every count by `factor`.
    pub fn scaled(&self, factor: u64) -> Self {
        Self {
            records: self
                .records
                .iter()
                .map(|r| CountRecord {
                    count: r.count * factor,
                    ..*r
                })
                .collect(),
        }
    }

    /// Requires 16 linearly independent projectors, positive durations and
    /// at least one count.
    pub fn validate(&self) -> Result<(), TomographyError> {
        for r in &self.records {
            if let Some(d) = r.duration {
                if !(d.is_finite() && d > 0.0) {
                    return Err(TomographyError::Parse(format!(
                        "duration for {}{} must be positive",
                        r.setting.signal, r.setting.idler
                    )));
                }
            }
        }
        let rank = projector_rank(self.records.iter().map(|r| r.setting));
        if rank < 16 {
            return Err(TomographyError::InsufficientSettings { rank });
        }
        if self.total() == 0 {
            return Err(TomographyError::Parse("all counts are zero".into()));
        }
        Ok(())
    }

    /// CSV with header `signal_basis,idler_basis,count,duration_s`; an empty
    /// duration cell means the duration was not recorded.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "signal_basis,idler_basis,count,duration_s")?;
        for r in &self.records {
            match r.duration {
                Some(d) => writeln!(out, "{},{},{},{}", r.setting.signal, r.setting.idler, r.count, d)?,
                None => writeln!(out, "{},{},{},", r.setting.signal, r.setting.idler, r.count)?,
            }
        }
        out.flush()
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self, TomographyError> {
        let mut records = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with("signal_basis")) {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() < 3 || fields.len() > 4 {
                return Err(TomographyError::Parse(format!(
                    "line {}: expected signal_basis,idler_basis,count,duration_s",
                    lineno + 1
                )));
            }
            let count = fields[2].parse::<u64>().map_err(|_| {
                TomographyError::Parse(format!("line {}: bad count `{}`", lineno + 1, fields[2]))
            })?;
            let duration = match fields.get(3) {
                None | Some(&"") => None,
                Some(d) => Some(d.parse::<f64>().map_err(|_| {
                    TomographyError::Parse(format!("line {}: bad duration `{d}`", lineno + 1))
                })?),
            };
            records.push(CountRecord {
                setting: PolarizationSetting::new(fields[0].parse()?, fields[1].parse()?),
                count,
                duration,
            });
        }
        Ok(Self { records })
    }
}

/// Rank of the span of the projectors, as real 16-vectors.
pub fn projector_rank(settings: impl Iterator<Item = PolarizationSetting>) -> usize {
    let rows: Vec<[f64; 16]> = settings.map(|s| hermitian_coords(&projector(s))).collect();
    if rows.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), 16, |i, j| rows[i][j]);
    m.rank(1e-9)
}

/// Real coordinates of a Hermitian 4×4 matrix: diagonal, then Re/Im of the
/// strict upper triangle.
pub(crate) fn hermitian_coords(m: &super::states::Matrix4c) -> [f64; 16] {
    let mut out = [0.0; 16];
    let mut k = 0;
    for i in 0..4 {
        out[k] = m[(i, i)].re;
        k += 1;
    }
    for i in 0..4 {
        for j in i + 1..4 {
            out[k] = m[(i, j)].re;
            out[k + 1] = m[(i, j)].im;
            k += 2;
        }
    }
    out
}

/// Poisson counts with mean `n_per_setting · tr(P ρ)`, each with a 1 s
/// duration. Deterministic for a given seed.
pub fn simulate_counts(
    rho: &DensityMatrix4,
    settings: &[PolarizationSetting],
    n_per_setting: u64,
    seed: u64,
) -> TomographyCounts {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = settings
        .iter()
        .map(|&setting| {
            let mean = n_per_setting as f64 * rho.probability(setting);
            let count = if mean > 0.0 {
                Poisson::new(mean).expect("finite mean").sample(&mut rng) as u64
            } else {
                0
            };
            CountRecord {
                setting,
                count,
                duration: Some(1.0),
            }
        })
        .collect();
    TomographyCounts { records }
}

/// Noise-free counts: expectations rounded to the nearest integer.
pub fn expected_counts(
    rho: &DensityMatrix4,
    settings: &[PolarizationSetting],
    n_per_setting: u64,
) -> TomographyCounts {
    let records = settings
        .iter()
        .map(|&setting| CountRecord {
            setting,
            count: (n_per_setting as f64 * rho.probability(setting)).round() as u64,
            duration: Some(1.0),
        })
        .collect();
    TomographyCounts { records }
}
