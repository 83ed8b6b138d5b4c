use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use super::tags::{Channel, TimeTagStream};
use super::PhotonError;

/// Upper bound on the expected number of generated events per call.
pub const MAX_EVENTS: f64 = 1e9;

const PS_PER_S: f64 = 1e12;

/// Source and detector model for synthetic signal/idler streams.
/// Times are in seconds, rates in counts per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairStreamParams {
    pub pair_rate: f64,
    /// Standard deviation of the idler − signal emission delay.
    pub corr_sigma: f64,
    pub eff_signal: f64,
    pub eff_idler: f64,
    pub jitter_signal: f64,
    pub jitter_idler: f64,
    pub dead_signal: f64,
    pub dead_idler: f64,
    pub bg_signal: f64,
    pub bg_idler: f64,
    pub duration: f64,
    pub seed: u64,
}

impl Default for PairStreamParams {
    /// Detector figures of the reference setup: 78 % / 68 % efficiency,
    /// 90 ps (nanowire, signal) / 350 ps (APD, idler) jitter, 20 ns dead time.
    fn default() -> Self {
        Self {
            pair_rate: 1e5,
            corr_sigma: 233.6e-12,
            eff_signal: 0.78,
            eff_idler: 0.68,
            jitter_signal: 90e-12,
            jitter_idler: 350e-12,
            dead_signal: 20e-9,
            dead_idler: 20e-9,
            bg_signal: 0.0,
            bg_idler: 0.0,
            duration: 1.0,
            seed: 0,
        }
    }
}

impl PairStreamParams {
    pub fn validate(&self) -> Result<(), PhotonError> {
        let nonneg = [
            ("pair_rate", self.pair_rate),
            ("corr_sigma", self.corr_sigma),
            ("jitter_signal", self.jitter_signal),
            ("jitter_idler", self.jitter_idler),
            ("dead_signal", self.dead_signal),
            ("dead_idler", self.dead_idler),
            ("bg_signal", self.bg_signal),
            ("bg_idler", self.bg_idler),
            ("duration", self.duration),
        ];
        for (name, value) in nonneg {
            if !(value.is_finite() && value >= 0.0) {
                return Err(PhotonError::invalid(name, "must be finite and non-negative"));
            }
        }
        for (name, value) in [("eff_signal", self.eff_signal), ("eff_idler", self.eff_idler)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(PhotonError::invalid(name, "must lie in [0, 1]"));
            }
        }
        if self.duration * PS_PER_S >= u64::MAX as f64 / 4.0 {
            return Err(PhotonError::invalid("duration", "too long for picosecond tags"));
        }
        Ok(())
    }
}

/// Generate signal and idler tag streams.
///
/// Pairs are emitted as a Poisson process; the idler is delayed from its
/// signal partner by a Gaussian of width `corr_sigma`. Each photon is kept
/// with its channel efficiency, smeared by Gaussian detector jitter, merged
/// with Poissonian background, clipped to `[0, duration)`, sorted and passed
/// through a non-paralyzable dead-time filter. The output depends only on
/// the parameters (including the seed).
pub fn synthesize_time_tags(
    params: &PairStreamParams,
) -> Result<(TimeTagStream, TimeTagStream), PhotonError> {
    params.validate()?;
    let expected = params.duration * (params.pair_rate + params.bg_signal + params.bg_idler);
    if expected >= MAX_EVENTS {
        return Err(PhotonError::CapacityExceeded { expected });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let end_ps = params.duration * PS_PER_S;
    let capacity = (params.duration * params.pair_rate * 1.05) as usize + 16;
    let mut signal: Vec<u64> = Vec::with_capacity(capacity);
    let mut idler: Vec<u64> = Vec::with_capacity(capacity);

    let delay = gaussian(params.corr_sigma * PS_PER_S);
    let jit_s = gaussian(params.jitter_signal * PS_PER_S);
    let jit_i = gaussian(params.jitter_idler * PS_PER_S);

    for t in poisson_times(&mut rng, params.pair_rate, params.duration) {
        let t_ps = t * PS_PER_S;
        let t_idler = t_ps + sample(&delay, &mut rng);
        let keep_s = rng.random_bool(params.eff_signal);
        let keep_i = rng.random_bool(params.eff_idler);
        if keep_s {
            push_clipped(&mut signal, t_ps + sample(&jit_s, &mut rng), end_ps);
        }
        if keep_i {
            push_clipped(&mut idler, t_idler + sample(&jit_i, &mut rng), end_ps);
        }
    }
    for t in poisson_times(&mut rng, params.bg_signal, params.duration) {
        push_clipped(&mut signal, t * PS_PER_S, end_ps);
    }
    for t in poisson_times(&mut rng, params.bg_idler, params.duration) {
        push_clipped(&mut idler, t * PS_PER_S, end_ps);
    }

    signal.sort_unstable();
    idler.sort_unstable();
    let signal = apply_dead_time(&signal, seconds_to_ps(params.dead_signal));
    let idler = apply_dead_time(&idler, seconds_to_ps(params.dead_idler));
    Ok((
        TimeTagStream::new(Channel::Signal, signal),
        TimeTagStream::new(Channel::Idler, idler),
    ))
}

/// Non-paralyzable dead time: a tag closer than `dead_ps` to the previous
/// *accepted* tag is discarded. Input must be sorted.
pub fn apply_dead_time(times: &[u64], dead_ps: u64) -> Vec<u64> {
    if dead_ps == 0 {
        return times.to_vec();
    }
    let mut out = Vec::with_capacity(times.len());
    let mut last: Option<u64> = None;
    for &t in times {
        match last {
            Some(prev) if t - prev < dead_ps => {}
            _ => {
                out.push(t);
                last = Some(t);
            }
        }
    }
    out
}

pub fn seconds_to_ps(s: f64) -> u64 {
    (s * PS_PER_S).round() as u64
}

fn poisson_times(rng: &mut ChaCha8Rng, rate: f64, duration: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if rate <= 0.0 || duration <= 0.0 {
        return out;
    }
    let exp = Exp::new(rate).expect("positive rate");
    let mut t = exp.sample(rng);
    while t < duration {
        out.push(t);
        t += exp.sample(rng);
    }
    out
}

fn gaussian(sigma: f64) -> Option<Normal<f64>> {
    (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("finite sigma"))
}

fn sample(dist: &Option<Normal<f64>>, rng: &mut ChaCha8Rng) -> f64 {
    dist.as_ref().map_or(0.0, |d| d.sample(rng))
}

fn push_clipped(out: &mut Vec<u64>, t_ps: f64, end_ps: f64) {
    let t = t_ps.round();
    if t >= 0.0 && t < end_ps {
        out.push(t as u64);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ideal() -> PairStreamParams {
        PairStreamParams {
            pair_rate: 2e4,
            corr_sigma: 0.0,
            eff_signal: 1.0,
            eff_idler: 1.0,
            jitter_signal: 0.0,
            jitter_idler: 0.0,
            dead_signal: 0.0,
            dead_idler: 0.0,
            bg_signal: 0.0,
            bg_idler: 0.0,
            duration: 0.5,
            seed: 11,
        }
    }

    #[test]
    fn nothing_in_nothing_out() {
        let p = PairStreamParams {
            pair_rate: 0.0,
            ..ideal()
        };
        let (s, i) = synthesize_time_tags(&p).unwrap();
        assert!(s.is_empty() && i.is_empty());
    }

    #[test]
    fn lossless_copy() {
        let (s, i) = synthesize_time_tags(&ideal()).unwrap();
        assert!(s.len() > 9000);
        assert_eq!(s.times, i.times);
    }

    #[test]
    fn reproducible_for_seed() {
        let p = PairStreamParams {
            pair_rate: 5e4,
            bg_signal: 1e3,
            bg_idler: 2e3,
            duration: 0.2,
            seed: 3,
            ..PairStreamParams::default()
        };
        let a = synthesize_time_tags(&p).unwrap();
        let b = synthesize_time_tags(&p).unwrap();
        assert_eq!(a, b);
        let c = synthesize_time_tags(&PairStreamParams { seed: 4, ..p }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn capacity_guard() {
        let p = PairStreamParams {
            pair_rate: 1e9,
            duration: 2.0,
            ..ideal()
        };
        assert!(matches!(
            synthesize_time_tags(&p),
            Err(PhotonError::CapacityExceeded { .. })
        ));
    }

    #[test]
    fn validation() {
        assert!(PairStreamParams {
            eff_idler: 1.5,
            ..ideal()
        }
        .validate()
        .is_err());
        assert!(PairStreamParams {
            dead_signal: -1.0,
            ..ideal()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn background_only_rate() {
        let p = PairStreamParams {
            pair_rate: 0.0,
            bg_signal: 1e5,
            bg_idler: 0.0,
            duration: 1.0,
            ..ideal()
        };
        let (s, i) = synthesize_time_tags(&p).unwrap();
        assert!(i.is_empty());
        // Poisson: 1e5 ± 4·316
        assert!((s.len() as f64 - 1e5).abs() < 4.0 * 1e5f64.sqrt());
    }

    #[test]
    fn dead_time_filter_is_non_paralyzable() {
        assert_eq!(apply_dead_time(&[0, 5, 9, 10, 12, 25], 10), [0, 10, 25]);
        assert_eq!(apply_dead_time(&[3, 3, 4], 0), [3, 3, 4]);
    }

    proptest! {
        #[test]
        fn dead_time_spacing(mut times in proptest::collection::vec(0u64..1_000_000, 0..300), dead in 1u64..50_000) {
            times.sort_unstable();
            let out = apply_dead_time(&times, dead);
            prop_assert!(out.windows(2).all(|w| w[1] - w[0] >= dead));
            // every dropped tag sits inside the dead window of an accepted one
            for t in &times {
                let covered = out.iter().any(|a| a <= t && t - a < dead);
                prop_assert!(covered);
            }
        }
    }
}
