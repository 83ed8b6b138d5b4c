//! Synthetic signal/idler detection streams and the coincidence statistics
//! derived from them.

mod analysis;
mod fit;
mod histogram;
mod stats;
mod synth;
mod tags;

use thiserror::Error;

pub use analysis::{analyze_streams, Analysis, AnalysisReport, AnalysisSettings};
pub use fit::{
    biphoton_linewidth, biphoton_linewidth_report, fit_gsi_vs_rate, fit_power_scaling,
    peak_fwhm_ps, GsiRateFit, LinearRegime, LinewidthReport, PowerFit, PowerPoint,
    AUTO_EXCLUDE_CORRECTION,
};
pub use histogram::{
    coincidence_histogram, gsi_from_histogram, CoincidenceHistogram, GsiCurve,
    DEFAULT_BIN_WIDTH_PS, DEFAULT_SPAN_PS,
};
pub use stats::{
    dead_time_observed_rate, dead_time_true_coincidence_rate, dead_time_true_rate,
    heralding_efficiency,
};
pub use synth::{apply_dead_time, seconds_to_ps, synthesize_time_tags, PairStreamParams, MAX_EVENTS};
pub use tags::{
    merge, read_binary, read_csv, split, write_binary, write_csv, Channel, TimeTag,
    TimeTagStream, RECORD_BYTES,
};

#[derive(Debug, Error)]
pub enum PhotonError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },
    #[error("expected {expected:.3e} events, above the {MAX_EVENTS:e} limit")]
    CapacityExceeded { expected: f64 },
    #[error("{channel:?} stream is not sorted at index {index}")]
    UnsortedStream { channel: Channel, index: usize },
    #[error("stream has no counts")]
    EmptyStream,
    #[error("invalid counts: {0}")]
    InvalidCounts(String),
    #[error("rate {observed} /s saturates dead time {dead} s")]
    SaturatedRate { observed: f64, dead: f64 },
    #[error("need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("no resolvable g_si peak")]
    UnresolvedPeak,
    #[error("detector jitter ({jitter_ps:.1} ps FWHM) exceeds measured width ({measured_ps:.1} ps)")]
    OverDeconvolved { measured_ps: f64, jitter_ps: f64 },
    #[error("malformed time-tag data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PhotonError {
    pub(crate) fn invalid(name: &'static str, reason: &'static str) -> Self {
        Self::InvalidParameter { name, reason }
    }
}
