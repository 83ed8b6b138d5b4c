use std::io::{self, Write};

use serde::Serialize;

use super::tags::{Channel, TimeTagStream};
use super::PhotonError;

/// 100 ps bins over ±20 ns.
pub const DEFAULT_BIN_WIDTH_PS: u64 = 100;
pub const DEFAULT_SPAN_PS: u64 = 40_000;

/// Signal-idler delay histogram (delay = t_idler − t_signal).
///
/// Bin `k` covers `[−span/2 + k·w, −span/2 + (k+1)·w)`; a delay exactly on
/// an edge belongs to the higher bin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoincidenceHistogram {
    pub bin_width: u64,
    /// Bin centers, ps.
    pub delays: Vec<f64>,
    pub counts: Vec<u64>,
    pub singles_signal: u64,
    pub singles_idler: u64,
    /// Acquisition time, s.
    pub duration: f64,
}

impl CoincidenceHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Counts in bins whose centers lie within `half_width_ps` of `center_ps`.
    pub fn counts_within(&self, center_ps: f64, half_width_ps: f64) -> u64 {
        self.delays
            .iter()
            .zip(&self.counts)
            .filter(|(d, _)| (**d - center_ps).abs() <= half_width_ps)
            .map(|(_, c)| c)
            .sum()
    }

    /// CSV with header `delay_ps,counts`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "delay_ps,counts")?;
        for (d, c) in self.delays.iter().zip(&self.counts) {
            writeln!(out, "{d},{c}")?;
        }
        Ok(())
    }
}

/// Histogram all signal/idler pairs with delay in `[−span/2, span/2)` using a
/// single two-pointer sweep over the sorted streams.
pub fn coincidence_histogram(
    signal: &TimeTagStream,
    idler: &TimeTagStream,
    bin_width: u64,
    span: u64,
    duration: f64,
) -> Result<CoincidenceHistogram, PhotonError> {
    if bin_width == 0 {
        return Err(PhotonError::invalid("bin_width", "must be at least 1 ps"));
    }
    if span == 0 || !span.is_multiple_of(bin_width) {
        return Err(PhotonError::invalid("span", "must be a positive multiple of bin_width"));
    }
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(PhotonError::invalid("duration", "must be non-negative"));
    }
    for (stream, channel) in [(signal, Channel::Signal), (idler, Channel::Idler)] {
        if let Some(index) = stream.first_unsorted() {
            return Err(PhotonError::UnsortedStream { channel, index });
        }
    }

    let nbins = (span / bin_width) as usize;
    let mut counts = vec![0u64; nbins];
    let span = span as i128;
    let two_w = 2 * bin_width as i128;
    let idl = &idler.times;
    let mut lo = 0usize;
    for &s in &signal.times {
        let s = s as i128;
        // Delays d = i − s are kept when 2d + span ∈ [0, 2·span).
        while lo < idl.len() && 2 * (idl[lo] as i128 - s) + span < 0 {
            lo += 1;
        }
        let mut j = lo;
        while j < idl.len() {
            let x = 2 * (idl[j] as i128 - s) + span;
            if x >= 2 * span {
                break;
            }
            counts[(x / two_w) as usize] += 1;
            j += 1;
        }
    }

    let w = bin_width as f64;
    let half = span as f64 / 2.0;
    let delays = (0..nbins).map(|k| -half + (k as f64 + 0.5) * w).collect();
    Ok(CoincidenceHistogram {
        bin_width,
        delays,
        counts,
        singles_signal: signal.len() as u64,
        singles_idler: idler.len() as u64,
        duration,
    })
}

/// Normalized cross-correlation g_si(τ).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GsiCurve {
    pub delays: Vec<f64>,
    pub g: Vec<f64>,
    pub peak: f64,
    pub peak_delay: f64,
}

impl GsiCurve {
    /// Build from samples, locating the peak (ties go to the smallest |delay|).
    pub fn from_samples(delays: Vec<f64>, g: Vec<f64>) -> Self {
        let mut best: Option<usize> = None;
        for k in 0..g.len() {
            best = match best {
                None => Some(k),
                Some(b) if g[k] > g[b] || (g[k] == g[b] && delays[k].abs() < delays[b].abs()) => {
                    Some(k)
                }
                keep => keep,
            };
        }
        let (peak, peak_delay) = best.map_or((0.0, 0.0), |b| (g[b], delays[b]));
        Self {
            delays,
            g,
            peak,
            peak_delay,
        }
    }

    pub fn peak_index(&self) -> Option<usize> {
        self.delays.iter().position(|&d| d == self.peak_delay)
    }

    /// CSV with header `delay_ps,gsi`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "delay_ps,gsi")?;
        for (d, g) in self.delays.iter().zip(&self.g) {
            writeln!(out, "{d},{g:.9e}")?;
        }
        Ok(())
    }
}

/// g[k] = counts[k]·T / (N_s·N_i·Δt), the singles-product estimator.
pub fn gsi_from_histogram(h: &CoincidenceHistogram) -> Result<GsiCurve, PhotonError> {
    if h.singles_signal == 0 || h.singles_idler == 0 {
        return Err(PhotonError::EmptyStream);
    }
    if !(h.duration > 0.0) {
        return Err(PhotonError::invalid("duration", "must be positive"));
    }
    let bin_s = h.bin_width as f64 * 1e-12;
    let norm = h.duration / (h.singles_signal as f64 * h.singles_idler as f64 * bin_s);
    let g = h.counts.iter().map(|&c| c as f64 * norm).collect();
    Ok(GsiCurve::from_samples(h.delays.clone(), g))
}
