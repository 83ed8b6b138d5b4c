use serde::{Deserialize, Serialize};

use super::fit::biphoton_linewidth_report;
use super::histogram::{coincidence_histogram, gsi_from_histogram, CoincidenceHistogram, GsiCurve};
use super::stats::{dead_time_true_coincidence_rate, dead_time_true_rate, heralding_efficiency};
use super::tags::TimeTagStream;
use super::PhotonError;

/// Settings for reducing a pair of tag streams to summary metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSettings {
    pub bin_width_ps: u64,
    pub span_ps: u64,
    /// Coincidences are the histogram counts within ± this of the g_si peak.
    pub window_ps: f64,
    /// Acquisition time, s.
    pub duration: f64,
    pub dead_signal: f64,
    pub dead_idler: f64,
    pub jitter_signal: f64,
    pub jitter_idler: f64,
    /// Optional idler efficiency for the corrected heralding figure.
    pub eff_idler: Option<f64>,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            bin_width_ps: super::DEFAULT_BIN_WIDTH_PS,
            span_ps: super::DEFAULT_SPAN_PS,
            window_ps: 2000.0,
            duration: 1.0,
            dead_signal: 20e-9,
            dead_idler: 20e-9,
            jitter_signal: 90e-12,
            jitter_idler: 350e-12,
            eff_idler: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub singles_signal: u64,
    pub singles_idler: u64,
    pub signal_rate: f64,
    pub idler_rate: f64,
    pub coincidences: u64,
    pub coincidence_rate: f64,
    /// Coincidence rate after dead-time correction.
    pub corrected_coincidence_rate: f64,
    /// Source pair rate estimated as S·I/C from dead-time corrected rates
    /// (independent of detection efficiencies).
    pub pair_rate_estimate: Option<f64>,
    pub gsi_peak: Option<f64>,
    pub gsi_peak_delay_ps: Option<f64>,
    pub heralding: Option<f64>,
    pub heralding_corrected: Option<f64>,
    pub fwhm_ps: Option<f64>,
    /// Angular biphoton linewidth, rad/s.
    pub linewidth: Option<f64>,
}

/// Histogram, g_si curve and summary metrics for one acquisition.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub histogram: CoincidenceHistogram,
    pub gsi: Option<GsiCurve>,
    pub report: AnalysisReport,
}

pub fn analyze_streams(
    signal: &TimeTagStream,
    idler: &TimeTagStream,
    settings: &AnalysisSettings,
) -> Result<Analysis, PhotonError> {
    if !(settings.duration > 0.0) {
        return Err(PhotonError::invalid("duration", "must be positive"));
    }
    let histogram = coincidence_histogram(
        signal,
        idler,
        settings.bin_width_ps,
        settings.span_ps,
        settings.duration,
    )?;
    let t = settings.duration;
    let signal_rate = histogram.singles_signal as f64 / t;
    let idler_rate = histogram.singles_idler as f64 / t;

    let gsi = match gsi_from_histogram(&histogram) {
        Ok(c) => Some(c),
        Err(PhotonError::EmptyStream) => None,
        Err(e) => return Err(e),
    };
    let coincidences = gsi
        .as_ref()
        .map_or(0, |c| histogram.counts_within(c.peak_delay, settings.window_ps));
    let coincidence_rate = coincidences as f64 / t;
    let corrected_coincidence_rate = dead_time_true_coincidence_rate(
        coincidence_rate,
        signal_rate,
        idler_rate,
        settings.dead_signal,
        settings.dead_idler,
    )?;
    let pair_rate_estimate = if coincidences > 0 {
        let s = dead_time_true_rate(signal_rate, settings.dead_signal)?;
        let i = dead_time_true_rate(idler_rate, settings.dead_idler)?;
        Some(s * i / corrected_coincidence_rate)
    } else {
        None
    };

    let (heralding, heralding_corrected) = if histogram.singles_signal > 0 {
        let c = coincidences.min(histogram.singles_signal);
        (
            Some(heralding_efficiency(c, histogram.singles_signal, None)?),
            settings
                .eff_idler
                .map(|e| heralding_efficiency(c, histogram.singles_signal, Some(e)))
                .transpose()?,
        )
    } else {
        (None, None)
    };

    let lw = gsi
        .as_ref()
        .and_then(|c| biphoton_linewidth_report(c, settings.jitter_signal, settings.jitter_idler).ok());

    let report = AnalysisReport {
        singles_signal: histogram.singles_signal,
        singles_idler: histogram.singles_idler,
        signal_rate,
        idler_rate,
        coincidences,
        coincidence_rate,
        corrected_coincidence_rate,
        pair_rate_estimate,
        gsi_peak: gsi.as_ref().map(|c| c.peak),
        gsi_peak_delay_ps: gsi.as_ref().map(|c| c.peak_delay),
        heralding,
        heralding_corrected,
        fwhm_ps: lw.map(|r| r.measured_fwhm_ps),
        linewidth: lw.map(|r| r.linewidth),
    };
    Ok(Analysis {
        histogram,
        gsi,
        report,
    })
}
