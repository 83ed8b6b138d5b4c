//! Scaling fits and the biphoton linewidth estimate.

use serde::Serialize;

use crate::constants::{GAUSSIAN_FWHM_PER_SIGMA, GAUSSIAN_TIME_BANDWIDTH};

use super::histogram::GsiCurve;
use super::PhotonError;

/// Points whose dead-time correction factor exceeds this are treated as
/// outside the linear regime by [`LinearRegime::Auto`].
pub const AUTO_EXCLUDE_CORRECTION: f64 = 1.10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerPoint {
    pub pump_mw: f64,
    pub coupling_mw: f64,
    /// Coincidence rate, /s.
    pub rate: f64,
    /// corrected / observed rate for this point; 1 when no correction applies.
    pub dead_time_factor: f64,
}

impl PowerPoint {
    pub fn new(pump_mw: f64, coupling_mw: f64, rate: f64) -> Self {
        Self {
            pump_mw,
            coupling_mw,
            rate,
            dead_time_factor: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LinearRegime {
    All,
    /// Drop points whose dead-time correction exceeds 10 %.
    Auto,
    Mask(Vec<bool>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerFit {
    /// Rate per pump·coupling power product, /s/mW².
    pub k: f64,
    pub rms_residual: f64,
    pub used: usize,
}

/// Least-squares fit of rate = k·P_pump·P_coupling through the origin.
pub fn fit_power_scaling(points: &[PowerPoint], regime: &LinearRegime) -> Result<PowerFit, PhotonError> {
    if let LinearRegime::Mask(m) = regime {
        if m.len() != points.len() {
            return Err(PhotonError::invalid("mask", "length differs from point count"));
        }
    }
    for p in points {
        if !(p.pump_mw > 0.0 && p.coupling_mw > 0.0) {
            return Err(PhotonError::invalid("power", "powers must be positive"));
        }
        if !p.rate.is_finite() {
            return Err(PhotonError::invalid("rate", "must be finite"));
        }
    }
    let used: Vec<&PowerPoint> = points
        .iter()
        .enumerate()
        .filter(|(i, p)| match regime {
            LinearRegime::All => true,
            LinearRegime::Auto => p.dead_time_factor <= AUTO_EXCLUDE_CORRECTION,
            LinearRegime::Mask(m) => m[*i],
        })
        .map(|(_, p)| p)
        .collect();
    if used.len() < 2 {
        return Err(PhotonError::InsufficientData {
            needed: 2,
            got: used.len(),
        });
    }
    let (sxy, sxx) = used.iter().fold((0.0, 0.0), |(sxy, sxx), p| {
        let x = p.pump_mw * p.coupling_mw;
        (sxy + x * p.rate, sxx + x * x)
    });
    let k = sxy / sxx;
    let ss: f64 = used
        .iter()
        .map(|p| (p.rate - k * p.pump_mw * p.coupling_mw).powi(2))
        .sum();
    Ok(PowerFit {
        k,
        rms_residual: (ss / used.len() as f64).sqrt(),
        used: used.len(),
    })
}

/// g_si peak against coincidence rate: g = a / R_true with
/// R_true = R_obs / (1 − R_obs·τ_eff).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GsiRateFit {
    /// Scale of the inverse law, /s.
    pub a: f64,
    /// Effective coincidence dead time, s.
    pub tau_eff: f64,
    /// RMS of ln g residuals for the fitted model.
    pub rms_log_residual: f64,
    /// RMS of ln g residuals for the best pure a/R fit.
    pub pure_inverse_rms: f64,
    /// False when the dead-time term did not reduce the residual.
    pub improved: bool,
}

impl GsiRateFit {
    pub fn true_rate(&self, observed: f64) -> f64 {
        observed / (1.0 - observed * self.tau_eff)
    }

    pub fn predict(&self, observed: f64) -> f64 {
        self.a / self.true_rate(observed)
    }

    /// Per-detector dead time implied by `tau_eff`.
    ///
    /// To first order in rate a pair is lost when either detector is dead
    /// (fractions C·τ/η_i and C·τ/η_s in terms of the coincidence rate C) and
    /// g_si is raised because a previous pair often leaves both dead at once
    /// (fraction C·τ). Together g ≈ a(1 − C·τ·(1/η_s + 1/η_i − 2))/C.
    pub fn detector_dead_time(&self, eff_signal: f64, eff_idler: f64) -> Option<f64> {
        let lever = 1.0 / eff_signal + 1.0 / eff_idler - 2.0;
        (lever > 0.0 && lever.is_finite()).then(|| self.tau_eff / lever)
    }
}

/// Fit g_si peaks against observed coincidence rates.
pub fn fit_gsi_vs_rate(points: &[(f64, f64)]) -> Result<GsiRateFit, PhotonError> {
    if points.len() < 3 {
        return Err(PhotonError::InsufficientData {
            needed: 3,
            got: points.len(),
        });
    }
    if points.iter().any(|&(r, g)| !(r > 0.0 && g > 0.0 && r.is_finite() && g.is_finite())) {
        return Err(PhotonError::invalid("points", "rates and g_si must be positive"));
    }
    let r_max = points.iter().map(|p| p.0).fold(0.0, f64::max);

    // For fixed τ the best ln a is the mean residual, so only τ is searched.
    let eval = |tau: f64| -> (f64, f64) {
        let resid: Vec<f64> = points
            .iter()
            .map(|&(r, g)| g.ln() - ((1.0 - r * tau) / r).ln())
            .collect();
        let ln_a = resid.iter().sum::<f64>() / resid.len() as f64;
        let ss = resid.iter().map(|x| (x - ln_a).powi(2)).sum::<f64>();
        ((ss / resid.len() as f64).sqrt(), ln_a)
    };

    let tau_hi = 0.999 / r_max;
    let (pure_rms, pure_ln_a) = eval(0.0);
    const GRID: usize = 400;
    let mut best = (0.0, pure_rms);
    for k in 1..GRID {
        let tau = tau_hi * k as f64 / GRID as f64;
        let (rms, _) = eval(tau);
        if rms < best.1 {
            best = (tau, rms);
        }
    }
    let (tau, rms, ln_a) = if best.0 == 0.0 {
        (0.0, pure_rms, pure_ln_a)
    } else {
        let step = tau_hi / GRID as f64;
        let tau = golden_min(|t| eval(t).0, (best.0 - step).max(0.0), (best.0 + step).min(tau_hi));
        let (rms, ln_a) = eval(tau);
        if rms < pure_rms {
            (tau, rms, ln_a)
        } else {
            (0.0, pure_rms, pure_ln_a)
        }
    };
    Ok(GsiRateFit {
        a: ln_a.exp(),
        tau_eff: tau,
        rms_log_residual: rms,
        pure_inverse_rms: pure_rms,
        improved: rms < pure_rms,
    })
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if (hi - lo).abs() <= 1e-15 * hi.abs().max(1e-300) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

/// Full width at half maximum of the g_si peak above its baseline, ps.
///
/// The baseline is the median of g; the half-level crossings either side of
/// the peak are linearly interpolated.
pub fn peak_fwhm_ps(curve: &GsiCurve) -> Result<f64, PhotonError> {
    let n = curve.g.len();
    let peak_idx = curve.peak_index().ok_or(PhotonError::UnresolvedPeak)?;
    let baseline = median(&curve.g);
    if !(curve.peak > 3.0 * baseline) || n < 3 {
        return Err(PhotonError::UnresolvedPeak);
    }
    let half = baseline + 0.5 * (curve.peak - baseline);
    let g = &curve.g;
    let d = &curve.delays;

    let mut left = None;
    for k in (0..peak_idx).rev() {
        if g[k] < half {
            let t = (half - g[k]) / (g[k + 1] - g[k]);
            left = Some(d[k] + t * (d[k + 1] - d[k]));
            break;
        }
    }
    let mut right = None;
    for k in peak_idx + 1..n {
        if g[k] < half {
            let t = (g[k - 1] - half) / (g[k - 1] - g[k]);
            right = Some(d[k - 1] + t * (d[k] - d[k - 1]));
            break;
        }
    }
    match (left, right) {
        (Some(l), Some(r)) => Ok(r - l),
        _ => Err(PhotonError::UnresolvedPeak),
    }
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    match v.len() {
        0 => 0.0,
        n if n % 2 == 1 => v[n / 2],
        n => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

/// Linewidth report from [`biphoton_linewidth_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinewidthReport {
    pub measured_fwhm_ps: f64,
    pub corrected_fwhm_ps: f64,
    /// Angular linewidth, rad/s.
    pub linewidth: f64,
}

/// Biphoton linewidth (rad/s) from the g_si peak after removing Gaussian
/// detector jitter (σ in seconds) in quadrature.
pub fn biphoton_linewidth(
    curve: &GsiCurve,
    jitter_signal: f64,
    jitter_idler: f64,
) -> Result<f64, PhotonError> {
    biphoton_linewidth_report(curve, jitter_signal, jitter_idler).map(|r| r.linewidth)
}

pub fn biphoton_linewidth_report(
    curve: &GsiCurve,
    jitter_signal: f64,
    jitter_idler: f64,
) -> Result<LinewidthReport, PhotonError> {
    let measured = peak_fwhm_ps(curve)?;
    let js = GAUSSIAN_FWHM_PER_SIGMA * jitter_signal * 1e12;
    let ji = GAUSSIAN_FWHM_PER_SIGMA * jitter_idler * 1e12;
    let corr_sq = measured * measured - js * js - ji * ji;
    if corr_sq <= 0.0 {
        return Err(PhotonError::OverDeconvolved {
            measured_ps: measured,
            jitter_ps: (js * js + ji * ji).sqrt(),
        });
    }
    let corrected = corr_sq.sqrt();
    Ok(LinewidthReport {
        measured_fwhm_ps: measured,
        corrected_fwhm_ps: corrected,
        linewidth: std::f64::consts::TAU * GAUSSIAN_TIME_BANDWIDTH / (corrected * 1e-12),
    })
}
