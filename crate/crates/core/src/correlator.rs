//! Start-stop-free correlation: all-pairs delay histograms between two
//! detector channels, plus normalization and peak-area extraction.

use std::collections::VecDeque;

use crate::types::{CorrelationHistogram, Normalization, TimeTagStream};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorrelatorError {
    #[error("channel {0} is not declared in the stream")]
    UnknownChannel(u8),
    #[error("channel {0} has no tags")]
    EmptyChannel(u8),
    #[error("rates and duration must be positive, got {0}")]
    ZeroRate(String),
    #[error("histogram is already normalized ({0})")]
    AlreadyNormalized(&'static str),
    #[error("peak windows at {first_ps} ps and {second_ps} ps overlap (half-window {half_window_ps} ps)")]
    OverlappingWindows {
        first_ps: i64,
        second_ps: i64,
        half_window_ps: i64,
    },
    #[error("peak window at {position_ps} ps extends outside the histogram (centers {min_ps}..={max_ps} ps)")]
    WindowOutOfRange {
        position_ps: i64,
        min_ps: i64,
        max_ps: i64,
    },
    #[error("side-peak areas sum to zero; cannot normalize")]
    ZeroSideArea,
    #[error("{0}")]
    InvalidArgument(String),
}

/// Sum of raw counts in a window around one delay position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakArea {
    pub position_ps: i64,
    pub area: f64,
}

/// Histogram of all pair delays `tau = t_b - t_a` between channels
/// `ch_a` and `ch_b`.
///
/// Bins are centered on multiples of `bin_width_ps`: bin k is centered at
/// `-max_tau_ps + k * bin_width_ps` and covers `[center - w/2, center + w/2)`,
/// so there is always a bin centered at zero delay and the histogram spans
/// `[-max_tau - w/2, max_tau + w/2)`. A pair qualifies when its delay falls
/// inside that range. With `ch_a == ch_b` the autocorrelation is returned
/// (each unordered pair enters at both `+tau` and `-tau`; self-pairs are
/// excluded).
pub fn cross_correlate(
    stream: &TimeTagStream,
    ch_a: u8,
    ch_b: u8,
    bin_width_ps: i64,
    max_tau_ps: i64,
) -> Result<CorrelationHistogram, CorrelatorError> {
    if bin_width_ps < 1 {
        return Err(CorrelatorError::InvalidArgument(format!(
            "bin_width_ps must be >= 1, got {bin_width_ps}"
        )));
    }
    if max_tau_ps < bin_width_ps {
        return Err(CorrelatorError::InvalidArgument(format!(
            "max_tau_ps must be >= bin_width_ps, got {max_tau_ps}"
        )));
    }
    if max_tau_ps % bin_width_ps != 0 {
        return Err(CorrelatorError::InvalidArgument(format!(
            "max_tau_ps ({max_tau_ps}) must be a multiple of bin_width_ps ({bin_width_ps})"
        )));
    }
    for ch in [ch_a, ch_b] {
        if !stream.has_channel(ch) {
            return Err(CorrelatorError::UnknownChannel(ch));
        }
    }
    for ch in [ch_a, ch_b] {
        if stream.channel_count(ch) == 0 {
            return Err(CorrelatorError::EmptyChannel(ch));
        }
    }

    let n_bins = (2 * (max_tau_ps / bin_width_ps) + 1) as usize;
    let mut counts = vec![0u64; n_bins];
    // same half-open edge rule as CorrelationHistogram::bin_index
    let bin_of = |tau: i64| -> Option<usize> {
        let idx = (2 * (tau + max_tau_ps) + bin_width_ps).div_euclid(2 * bin_width_ps);
        (idx >= 0 && (idx as usize) < n_bins).then_some(idx as usize)
    };
    // oldest delay that can still reach a bin: tau < max_tau + w/2 <= max_tau + w
    let keep_ps = max_tau_ps + bin_width_ps;

    let timestamps = stream.timestamps_ps();
    let channels = stream.channels();
    let mut window: VecDeque<(i64, u8)> = VecDeque::new();
    for i in 0..timestamps.len() {
        let ch = channels[i];
        if ch != ch_a && ch != ch_b {
            continue;
        }
        let t = timestamps[i];
        while let Some(&(t_old, _)) = window.front() {
            if t - t_old > keep_ps {
                window.pop_front();
            } else {
                break;
            }
        }
        for &(t_old, ch_old) in &window {
            if ch_old == ch_a && ch == ch_b {
                if let Some(k) = bin_of(t - t_old) {
                    counts[k] += 1;
                }
            }
            if ch_old == ch_b && ch == ch_a {
                if let Some(k) = bin_of(t_old - t) {
                    counts[k] += 1;
                }
            }
        }
        window.push_back((t, ch));
    }

    Ok(CorrelationHistogram::new(-max_tau_ps, bin_width_ps, counts)
        .expect("constructed binning is valid"))
}

/// Divides raw counts by the accidental level `rate_a * rate_b * duration *
/// bin_width`, so an uncorrelated CW measurement normalizes to 1.
pub fn normalize_cw(
    hist: &CorrelationHistogram,
    rate_a_hz: f64,
    rate_b_hz: f64,
    duration_s: f64,
) -> Result<CorrelationHistogram, CorrelatorError> {
    if hist.normalized().is_some() {
        return Err(CorrelatorError::AlreadyNormalized(hist.normalization().as_str()));
    }
    if !(rate_a_hz > 0.0) || !(rate_b_hz > 0.0) || !(duration_s > 0.0) {
        return Err(CorrelatorError::ZeroRate(format!(
            "rate_a={rate_a_hz} Hz, rate_b={rate_b_hz} Hz, duration={duration_s} s"
        )));
    }
    let c = rate_a_hz * rate_b_hz * duration_s * hist.bin_width_ps() as f64 * 1e-12;
    let normalized: Vec<f64> = hist.counts().iter().map(|&n| n as f64 / c).collect();
    Ok(hist
        .clone()
        .with_normalized(normalized, Normalization::CwPoisson)
        .expect("lengths match"))
}

/// The CW normalization constant used by [`normalize_cw`].
pub fn cw_normalization_constant(
    bin_width_ps: i64,
    rate_a_hz: f64,
    rate_b_hz: f64,
    duration_s: f64,
) -> f64 {
    rate_a_hz * rate_b_hz * duration_s * bin_width_ps as f64 * 1e-12
}

/// Divides raw counts by the mean area of the given far side peaks, so
/// that after normalization, summing bins across any peak window yields
/// that peak's area relative to an uncorrelated repetition-period peak.
pub fn normalize_pulsed(
    hist: &CorrelationHistogram,
    side_positions_ps: &[i64],
    half_window_ps: i64,
) -> Result<CorrelationHistogram, CorrelatorError> {
    if hist.normalized().is_some() {
        return Err(CorrelatorError::AlreadyNormalized(hist.normalization().as_str()));
    }
    if side_positions_ps.is_empty() {
        return Err(CorrelatorError::InvalidArgument(
            "at least one side-peak position is required".into(),
        ));
    }
    let areas = peak_areas(hist, side_positions_ps, half_window_ps)?;
    let mean_area = areas.iter().map(|a| a.area).sum::<f64>() / areas.len() as f64;
    if mean_area <= 0.0 {
        return Err(CorrelatorError::ZeroSideArea);
    }
    let normalized: Vec<f64> = hist.counts().iter().map(|&n| n as f64 / mean_area).collect();
    Ok(hist
        .clone()
        .with_normalized(normalized, Normalization::PulsedSidepeak)
        .expect("lengths match"))
}

/// Raw-count areas in non-overlapping windows: for each position, the sum
/// of counts over bins whose centers lie within `position +/- half_window`.
pub fn peak_areas(
    hist: &CorrelationHistogram,
    positions_ps: &[i64],
    half_window_ps: i64,
) -> Result<Vec<PeakArea>, CorrelatorError> {
    if half_window_ps < 0 {
        return Err(CorrelatorError::InvalidArgument(format!(
            "half_window_ps must be >= 0, got {half_window_ps}"
        )));
    }
    let mut sorted = positions_ps.to_vec();
    sorted.sort_unstable();
    for pair in sorted.windows(2) {
        if pair[1] - pair[0] <= 2 * half_window_ps {
            return Err(CorrelatorError::OverlappingWindows {
                first_ps: pair[0],
                second_ps: pair[1],
                half_window_ps,
            });
        }
    }
    let min_center = hist.first_center_ps();
    let max_center = hist.center_ps(hist.n_bins() - 1);
    for &pos in positions_ps {
        if pos - half_window_ps < min_center || pos + half_window_ps > max_center {
            return Err(CorrelatorError::WindowOutOfRange {
                position_ps: pos,
                min_ps: min_center,
                max_ps: max_center,
            });
        }
    }
    let counts = hist.counts();
    Ok(positions_ps
        .iter()
        .map(|&pos| {
            let mut area = 0.0;
            for (k, c) in hist.centers_ps().enumerate() {
                if (c - pos).abs() <= half_window_ps {
                    area += counts[k] as f64;
                }
            }
            PeakArea {
                position_ps: pos,
                area,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn stream_of(duration: i64, tags: &[(u8, i64)]) -> TimeTagStream {
        let mut sorted = tags.to_vec();
        sorted.sort_by_key(|&(_, t)| t);
        TimeTagStream::new(
            duration,
            vec![0, 1],
            sorted.iter().map(|&(_, t)| t).collect(),
            sorted.iter().map(|&(c, _)| c).collect(),
        )
        .unwrap()
    }

    #[test]
    fn pair_delays_land_in_expected_bins() {
        // a at 1000, b at 1000 (tau 0), 1120 (tau +120), 880 (tau -120)
        let s = stream_of(2000, &[(0, 1000), (1, 1000), (1, 1120), (1, 880)]);
        let h = cross_correlate(&s, 0, 1, 100, 500).unwrap();
        assert_eq!(h.n_bins(), 11);
        assert_eq!(h.counts()[h.bin_index(0).unwrap()], 1);
        assert_eq!(h.counts()[h.bin_index(120).unwrap()], 1);
        assert_eq!(h.counts()[h.bin_index(-120).unwrap()], 1);
        assert_eq!(h.total_counts(), 3);
    }

    #[test]
    fn delay_sign_is_b_minus_a() {
        // b fires 300 ps after a: the count must sit at +300, not -300
        let s = stream_of(1000, &[(0, 100), (1, 400)]);
        let h = cross_correlate(&s, 0, 1, 100, 500).unwrap();
        assert_eq!(h.counts()[h.bin_index(300).unwrap()], 1);
        assert_eq!(h.counts()[h.bin_index(-300).unwrap()], 0);
        // swapping the roles mirrors the delay
        let h = cross_correlate(&s, 1, 0, 100, 500).unwrap();
        assert_eq!(h.counts()[h.bin_index(-300).unwrap()], 1);
    }

    #[test]
    fn conservation_against_brute_force() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let duration = 1_000_000;
        let mut tags: Vec<(u8, i64)> = (0..800)
            .map(|_| {
                (
                    rng.random_range(0..2u8),
                    rng.random_range(0..=duration),
                )
            })
            .collect();
        tags.sort_by_key(|&(_, t)| t);
        let s = stream_of(duration, &tags);
        let (bw, max_tau) = (250, 5_000);
        let h = cross_correlate(&s, 0, 1, bw, max_tau).unwrap();

        // brute force with the same edge rule
        let edge_ok = |tau: i64| -> bool {
            let idx = (2 * (tau + max_tau) + bw).div_euclid(2 * bw);
            idx >= 0 && (idx as usize) < h.n_bins()
        };
        let mut expected = 0u64;
        for &(ca, ta) in &tags {
            for &(cb, tb) in &tags {
                if ca == 0 && cb == 1 && edge_ok(tb - ta) {
                    expected += 1;
                }
            }
        }
        assert_eq!(h.total_counts(), expected);
    }

    #[test]
    fn global_time_shift_leaves_histogram_unchanged() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let mut tags: Vec<(u8, i64)> = (0..500)
            .map(|_| (rng.random_range(0..2u8), rng.random_range(0..=500_000i64)))
            .collect();
        tags.sort_by_key(|&(_, t)| t);
        let base = stream_of(500_000, &tags);
        let shifted_tags: Vec<(u8, i64)> = tags.iter().map(|&(c, t)| (c, t + 77_777)).collect();
        let shifted = stream_of(600_000, &shifted_tags);
        let h1 = cross_correlate(&base, 0, 1, 100, 10_000).unwrap();
        let h2 = cross_correlate(&shifted, 0, 1, 100, 10_000).unwrap();
        assert_eq!(h1.counts(), h2.counts());
    }

    #[test]
    fn autocorrelation_is_symmetric_and_excludes_self_pairs() {
        let s = stream_of(1000, &[(0, 100), (0, 250), (0, 400)]);
        let h = cross_correlate(&s, 0, 0, 50, 500).unwrap();
        // 3 unordered pairs, each at +tau and -tau
        assert_eq!(h.total_counts(), 6);
        assert_eq!(h.counts()[h.bin_index(0).unwrap()], 0);
        for (k, c) in h.centers_ps().enumerate() {
            let mirror = h.bin_index(-c).unwrap();
            assert_eq!(h.counts()[k], h.counts()[mirror]);
        }
    }

    #[test]
    fn unknown_and_empty_channels_error() {
        let s = stream_of(1000, &[(0, 100), (1, 200)]);
        match cross_correlate(&s, 0, 7, 10, 100) {
            Err(CorrelatorError::UnknownChannel(7)) => {}
            other => panic!("expected UnknownChannel, got {other:?}"),
        }
        let declared_empty =
            TimeTagStream::new(1000, vec![0, 1], vec![100], vec![0]).unwrap();
        match cross_correlate(&declared_empty, 0, 1, 10, 100) {
            Err(CorrelatorError::EmptyChannel(1)) => {}
            other => panic!("expected EmptyChannel, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_binning_arguments() {
        let s = stream_of(1000, &[(0, 100), (1, 200)]);
        assert!(cross_correlate(&s, 0, 1, 0, 100).is_err());
        assert!(cross_correlate(&s, 0, 1, 30, 100).is_err()); // not a multiple
        assert!(cross_correlate(&s, 0, 1, 100, 50).is_err());
    }

    #[test]
    fn poisson_streams_normalize_to_unity() {
        // two independent 100 kHz Poisson processes over 10 s
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let duration_s = 10.0;
        let duration_ps = (duration_s * 1e12) as i64;
        let rate = 100_000.0;
        let mut gen_channel = |_: u8| -> Vec<i64> {
            let mut t = 0.0f64;
            let mut out = Vec::new();
            loop {
                let gap: f64 = rng.random::<f64>();
                t += -gap.ln() / rate * 1e12;
                if t > duration_ps as f64 {
                    break;
                }
                out.push(t as i64);
            }
            out
        };
        let a = gen_channel(0);
        let b = gen_channel(1);
        let (ra, rb) = (
            a.len() as f64 / duration_s,
            b.len() as f64 / duration_s,
        );
        let stream =
            TimeTagStream::from_sorted_channels(duration_ps, vec![(0, a), (1, b)]).unwrap();
        let h = cross_correlate(&stream, 0, 1, 10_000, 1_000_000).unwrap();
        let n = normalize_cw(&h, ra, rb, duration_s).unwrap();
        let values = n.normalized().unwrap();
        let mean: f64 = values.iter().sum::<f64>() / values.len() as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean normalized level {mean}");
    }

    #[test]
    fn normalization_round_trips_exactly() {
        let h = CorrelationHistogram::new(-500, 100, vec![3, 14, 159, 265, 35, 89, 79, 32, 38, 4, 6])
            .unwrap();
        let n = normalize_cw(&h, 12345.0, 6789.0, 3.21).unwrap();
        let c = cw_normalization_constant(100, 12345.0, 6789.0, 3.21);
        for (k, v) in n.normalized().unwrap().iter().enumerate() {
            assert_eq!((v * c).round() as u64, h.counts()[k]);
        }
        assert_eq!(n.counts(), h.counts()); // raw counts preserved alongside
    }

    #[test]
    fn zero_rate_is_an_error() {
        let h = CorrelationHistogram::new(-100, 100, vec![1, 2, 3]).unwrap();
        assert!(matches!(
            normalize_cw(&h, 0.0, 10.0, 1.0),
            Err(CorrelatorError::ZeroRate(_))
        ));
        assert!(matches!(
            normalize_cw(&h, 10.0, 10.0, 0.0),
            Err(CorrelatorError::ZeroRate(_))
        ));
    }

    #[test]
    fn double_normalization_is_rejected() {
        let h = CorrelationHistogram::new(-100, 100, vec![1, 2, 3]).unwrap();
        let n = normalize_cw(&h, 10.0, 10.0, 1.0).unwrap();
        assert!(matches!(
            normalize_cw(&n, 10.0, 10.0, 1.0),
            Err(CorrelatorError::AlreadyNormalized(_))
        ));
    }

    #[test]
    fn peak_areas_sum_window_counts() {
        // centers -200..200 step 100; peak at 0 with neighbors
        let h = CorrelationHistogram::new(-200, 100, vec![10, 20, 300, 20, 10]).unwrap();
        let areas = peak_areas(&h, &[0], 100).unwrap();
        assert_eq!(areas[0].area, 340.0);
        let tight = peak_areas(&h, &[0], 0).unwrap();
        assert_eq!(tight[0].area, 300.0);
    }

    #[test]
    fn overlapping_windows_are_rejected() {
        let h = CorrelationHistogram::new(-500, 100, vec![1; 11]).unwrap();
        match peak_areas(&h, &[0, 150], 100) {
            Err(CorrelatorError::OverlappingWindows { .. }) => {}
            other => panic!("expected OverlappingWindows, got {other:?}"),
        }
        // touching exactly (distance == 2*hw) also rejects
        assert!(peak_areas(&h, &[0, 200], 100).is_err());
        assert!(peak_areas(&h, &[0, 300], 100).is_ok());
    }

    #[test]
    fn out_of_range_window_is_rejected() {
        let h = CorrelationHistogram::new(-500, 100, vec![1; 11]).unwrap();
        match peak_areas(&h, &[450], 100) {
            Err(CorrelatorError::WindowOutOfRange { .. }) => {}
            other => panic!("expected WindowOutOfRange, got {other:?}"),
        }
    }

    #[test]
    fn pulsed_normalization_scales_by_mean_side_area() {
        // three identical side peaks of area 50, center peak area 5
        let mut counts = vec![0u64; 81];
        let h0 = CorrelationHistogram::new(-4000, 100, counts.clone()).unwrap();
        for (pos, amp) in [(-2000i64, 50u64), (2000, 50), (3000, 50), (0, 5)] {
            counts[h0.bin_index(pos).unwrap()] = amp;
        }
        let h = CorrelationHistogram::new(-4000, 100, counts).unwrap();
        let n = normalize_pulsed(&h, &[-2000, 2000, 3000], 200).unwrap();
        assert_eq!(n.normalization(), Normalization::PulsedSidepeak);
        let v = n.normalized().unwrap();
        assert!((v[n.bin_index(0).unwrap()] - 0.1).abs() < 1e-12);
        let side_sum: f64 = v[n.bin_index(2000).unwrap()]; // single-bin peak
        assert!((side_sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pulsed_normalization_rejects_zero_side_area() {
        let h = CorrelationHistogram::new(-500, 100, vec![0; 11]).unwrap();
        assert!(matches!(
            normalize_pulsed(&h, &[-300, 300], 100),
            Err(CorrelatorError::ZeroSideArea)
        ));
    }
}
