use super::PhotonError;

/// Fraction of signal detections accompanied by an idler detection,
/// optionally divided by the idler detection efficiency (capped at 1).
pub fn heralding_efficiency(
    coincidences: u64,
    signal_singles: u64,
    eff_idler_correction: Option<f64>,
) -> Result<f64, PhotonError> {
    if signal_singles == 0 {
        return Err(PhotonError::InvalidCounts("signal singles must be positive".into()));
    }
    if coincidences > signal_singles {
        return Err(PhotonError::InvalidCounts(format!(
            "coincidences ({coincidences}) exceed signal singles ({signal_singles})"
        )));
    }
    let raw = coincidences as f64 / signal_singles as f64;
    match eff_idler_correction {
        None => Ok(raw),
        Some(eff) if eff > 0.0 && eff <= 1.0 => Ok((raw / eff).min(1.0)),
        Some(_) => Err(PhotonError::InvalidCounts(
            "idler efficiency correction must lie in (0, 1]".into(),
        )),
    }
}

/// Registered rate of a non-paralyzable detector: R/(1 + R·τ).
pub fn dead_time_observed_rate(true_rate: f64, dead: f64) -> f64 {
    true_rate / (1.0 + true_rate * dead)
}

/// Inverse of [`dead_time_observed_rate`]: m/(1 − m·τ).
pub fn dead_time_true_rate(observed: f64, dead: f64) -> Result<f64, PhotonError> {
    let load = observed * dead;
    if load >= 1.0 {
        return Err(PhotonError::SaturatedRate { observed, dead });
    }
    Ok(observed / (1.0 - load))
}

/// Dead-time correction of a coincidence rate.
///
/// A pair is registered only if neither detector is dead. With
/// non-paralyzable detectors the dead fractions are `s·τ_s` and `i·τ_i`; a
/// previously registered pair leaves both dead at once, which happens a
/// fraction `c·min(τ_s, τ_i)` of the time. So the registered fraction is
/// `1 − s·τ_s − i·τ_i + c·min(τ_s, τ_i)`, all rates as observed.
pub fn dead_time_true_coincidence_rate(
    coincidences: f64,
    signal: f64,
    idler: f64,
    dead_signal: f64,
    dead_idler: f64,
) -> Result<f64, PhotonError> {
    let live = 1.0 - signal * dead_signal - idler * dead_idler
        + coincidences * dead_signal.min(dead_idler);
    if live <= 0.0 {
        return Err(PhotonError::SaturatedRate {
            observed: signal.max(idler),
            dead: dead_signal.max(dead_idler),
        });
    }
    Ok(coincidences / live)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn heralding_anchor() {
        assert_eq!(heralding_efficiency(16_000, 100_000, None).unwrap(), 0.16);
        let corrected = heralding_efficiency(16_000, 100_000, Some(0.68)).unwrap();
        assert!((corrected - 0.235_294).abs() < 1e-6);
        assert_eq!(heralding_efficiency(0, 10, None).unwrap(), 0.0);
        assert_eq!(heralding_efficiency(9, 10, Some(0.5)).unwrap(), 1.0);
    }

    #[test]
    fn heralding_errors() {
        assert!(heralding_efficiency(1, 0, None).is_err());
        assert!(heralding_efficiency(11, 10, None).is_err());
        assert!(heralding_efficiency(1, 10, Some(0.0)).is_err());
    }

    #[test]
    fn dead_time_values() {
        assert_eq!(dead_time_observed_rate(1234.5, 0.0), 1234.5);
        assert_eq!(dead_time_true_rate(1234.5, 0.0).unwrap(), 1234.5);
        let obs = dead_time_observed_rate(5e6, 20e-9);
        assert!((obs - 5e6 / 1.1).abs() < 1e-6);
        assert!((obs - 4.545e6).abs() < 1e3);
        assert!(matches!(
            dead_time_true_rate(5e7, 20e-9),
            Err(PhotonError::SaturatedRate { .. })
        ));
    }

    #[test]
    fn coincidence_correction_limits() {
        // no dead time: identity
        assert_eq!(dead_time_true_coincidence_rate(10.0, 100.0, 100.0, 0.0, 0.0).unwrap(), 10.0);
        // identical channels (s = i = c) reduce to the single-detector inverse m/(1 − mτ)
        let c = dead_time_true_coincidence_rate(1e6, 1e6, 1e6, 20e-9, 20e-9).unwrap();
        assert!((c - 1e6 / 0.98).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn dead_time_round_trip(load in 0.0f64..0.5, tau in 1e-12f64..1e-7) {
            let r = load / tau;
            let back = dead_time_true_rate(dead_time_observed_rate(r, tau), tau).unwrap();
            prop_assert!((back - r).abs() <= 1e-9 * r.max(1e-300));
        }
    }
}
