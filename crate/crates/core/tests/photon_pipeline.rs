mod common;

use common::peak_sigma;
use fwm_core::photon::*;

fn ideal(pair_rate: f64, duration: f64, seed: u64) -> PairStreamParams {
    PairStreamParams {
        pair_rate,
        jitter_signal: 0.0,
        jitter_idler: 0.0,
        dead_signal: 0.0,
        dead_idler: 0.0,
        duration,
        seed,
        ..PairStreamParams::default()
    }
}

/// Correlated counts in ±`half` ps minus the flat accidental floor taken
/// from bins beyond 10 ns.
fn net_coincidences(h: &CoincidenceHistogram, half: f64) -> f64 {
    let far: Vec<u64> = h
        .delays
        .iter()
        .zip(&h.counts)
        .filter(|(d, _)| d.abs() > 10_000.0)
        .map(|(_, c)| *c)
        .collect();
    let floor = far.iter().sum::<u64>() as f64 / far.len() as f64;
    let bins = h.delays.iter().filter(|d| d.abs() <= half).count() as f64;
    h.counts_within(0.0, half) as f64 - floor * bins
}

#[test]
fn coincidences_follow_binomial_thinning() {
    let p = ideal(1e6, 1.0, 3);
    let (s, i) = synthesize_time_tags(&p).unwrap();
    let h = coincidence_histogram(&s, &i, 100, 40_000, p.duration).unwrap();
    let mean: f64 = 1e6 * 0.78 * 0.68;
    // Poisson pair number thinned by both detectors.
    let sigma = mean.sqrt();
    let net = net_coincidences(&h, 2000.0);
    assert!((net - mean).abs() < 4.0 * sigma, "{net} vs {mean}");
}

#[test]
fn halving_both_efficiencies_quarters_coincidences() {
    let mut full = 0.0;
    let mut half = 0.0;
    for seed in 0..4 {
        for (eff, acc) in [(1.0, &mut full), (0.5, &mut half)] {
            let p = PairStreamParams {
                eff_signal: 0.78 * eff,
                eff_idler: 0.68 * eff,
                ..ideal(2e5, 1.0, 100 + seed)
            };
            let (s, i) = synthesize_time_tags(&p).unwrap();
            let h = coincidence_histogram(&s, &i, 100, 40_000, p.duration).unwrap();
            *acc += net_coincidences(&h, 2000.0);
        }
    }
    let ratio = half / full;
    // Independent Poisson totals: var(r)/r² = 1/half + 1/full.
    let sigma = 0.25 * (1.0 / half + 1.0 / full).sqrt();
    assert!((ratio - 0.25).abs() < 4.0 * sigma, "{ratio} ± {sigma}");
}

#[test]
fn uncorrelated_streams_give_unit_gsi() {
    let p = PairStreamParams {
        pair_rate: 0.0,
        bg_signal: 1e5,
        bg_idler: 1e5,
        ..ideal(0.0, 10.0, 11)
    };
    let (s, i) = synthesize_time_tags(&p).unwrap();
    let h = coincidence_histogram(&s, &i, 100, 40_000, p.duration).unwrap();
    let g = gsi_from_histogram(&h).unwrap();
    let expected_per_bin =
        h.singles_signal as f64 * h.singles_idler as f64 * 100e-12 / p.duration;
    let per_bin_sigma = 1.0 / expected_per_bin.sqrt();
    let mean = g.g.iter().sum::<f64>() / g.g.len() as f64;
    let mean_sigma = per_bin_sigma / (g.g.len() as f64).sqrt();
    assert!((mean - 1.0).abs() < 5.0 * mean_sigma, "mean {mean}");
    for v in &g.g {
        assert!((v - 1.0).abs() < 6.0 * per_bin_sigma, "{v}");
    }
}

#[test]
fn peak_width_is_quadrature_sum() {
    let p = PairStreamParams {
        corr_sigma: 200e-12,
        jitter_signal: 90e-12,
        jitter_idler: 350e-12,
        ..ideal(2e5, 2.0, 5)
    };
    let (s, i) = synthesize_time_tags(&p).unwrap();
    let h = coincidence_histogram(&s, &i, 100, 40_000, p.duration).unwrap();
    let counts: Vec<f64> = h.counts.iter().map(|&c| c as f64).collect();
    let far: Vec<f64> = h
        .delays
        .iter()
        .zip(&counts)
        .filter(|(d, _)| d.abs() > 10_000.0)
        .map(|(_, c)| *c)
        .collect();
    let floor = far.iter().sum::<f64>() / far.len() as f64;
    let expected = (200f64.powi(2) + 90f64.powi(2) + 350f64.powi(2)).sqrt();
    let sigma = peak_sigma(&h.delays, &counts, floor, 100.0, 5.0 * expected);
    assert!((sigma / expected - 1.0).abs() < 0.05, "{sigma} vs {expected}");
}

#[test]
fn dead_time_never_leaves_close_tags() {
    let p = PairStreamParams {
        bg_signal: 5e6,
        bg_idler: 5e6,
        duration: 0.05,
        ..PairStreamParams::default()
    };
    let (s, i) = synthesize_time_tags(&p).unwrap();
    for stream in [&s, &i] {
        assert!(stream.is_sorted());
        assert!(stream.times.windows(2).all(|w| w[1] - w[0] >= 20_000));
    }
}

#[test]
fn synthesis_is_reproducible() {
    let p = PairStreamParams {
        bg_signal: 1e4,
        bg_idler: 2e4,
        seed: 77,
        ..PairStreamParams::default()
    };
    assert_eq!(synthesize_time_tags(&p).unwrap(), synthesize_time_tags(&p).unwrap());
    let other = PairStreamParams { seed: 78, ..p };
    assert_ne!(synthesize_time_tags(&p).unwrap(), synthesize_time_tags(&other).unwrap());
}

#[test]
fn heralding_tracks_idler_efficiency() {
    let p = ideal(2e5, 1.0, 9);
    let (s, i) = synthesize_time_tags(&p).unwrap();
    let a = analyze_streams(
        &s,
        &i,
        &AnalysisSettings {
            duration: p.duration,
            dead_signal: 0.0,
            dead_idler: 0.0,
            ..AnalysisSettings::default()
        },
    )
    .unwrap();
    let singles = a.report.singles_signal as f64;
    let sigma = (0.68 * 0.32 / singles).sqrt();
    let h = a.report.heralding.unwrap();
    // Accidentals in the ±2 ns window add about S·I·4 ns / T / S.
    let accidental = a.report.idler_rate * 4e-9;
    assert!((h - 0.68 - accidental).abs() < 4.0 * sigma, "{h}");
}

#[test]
fn corrected_rate_recovers_generator_with_detector_model() {
    let p = PairStreamParams {
        pair_rate: 1e6,
        duration: 0.5,
        seed: 21,
        ..PairStreamParams::default()
    };
    let (s, i) = synthesize_time_tags(&p).unwrap();
    let a = analyze_streams(
        &s,
        &i,
        &AnalysisSettings {
            duration: p.duration,
            ..AnalysisSettings::default()
        },
    )
    .unwrap();
    let generated = p.pair_rate * p.eff_signal * p.eff_idler;
    let corrected = a.report.corrected_coincidence_rate;
    assert!((corrected / generated - 1.0).abs() < 0.02, "{corrected} vs {generated}");
    assert!(a.report.coincidence_rate < corrected);
}

#[test]
fn files_round_trip_through_both_formats() {
    let p = PairStreamParams {
        duration: 0.01,
        ..PairStreamParams::default()
    };
    let (s, i) = synthesize_time_tags(&p).unwrap();
    let tags = merge(&s, &i);
    let mut bin = Vec::new();
    write_binary(&tags, &mut bin).unwrap();
    assert_eq!(bin.len(), tags.len() * RECORD_BYTES);
    assert_eq!(read_binary(&bin[..]).unwrap(), tags);
    let mut csv = Vec::new();
    write_csv(&tags, &mut csv).unwrap();
    assert_eq!(read_csv(&csv[..]).unwrap(), tags);
    let (s2, i2) = split(&tags);
    assert_eq!((s2, i2), (s, i));
}
