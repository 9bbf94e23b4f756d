//! Single-channel detection chain: efficiency thinning, Gaussian timing
//! jitter, dark counts, and non-paralyzable dead time, applied in that
//! order. Timestamps leave here as integer picoseconds clipped to the
//! record window.

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};

use super::emission::fwhm_to_sigma;
use crate::types::DetectorParams;

#[derive(Debug, Default)]
pub(crate) struct ChannelOutcome {
    pub tags_ps: Vec<i64>,
    /// Photons that fired the detector (post-efficiency, pre-clipping).
    pub detected: u64,
    /// Tags discarded for falling outside [0, duration].
    pub clipped: u64,
    pub dark: u64,
    pub removed_dead: u64,
}

pub(crate) fn apply_detector(
    arrivals_ps: &[f64],
    det: &DetectorParams,
    duration_ps: i64,
    rng: &mut impl Rng,
) -> ChannelOutcome {
    let mut out = ChannelOutcome::default();
    let eff = det.efficiency();
    let sigma = fwhm_to_sigma(det.jitter_fwhm_ps());
    let jitter = if sigma > 0.0 {
        Some(Normal::new(0.0, sigma).expect("sigma validated finite and positive"))
    } else {
        None
    };

    let mut tags: Vec<i64> = Vec::with_capacity(
        (arrivals_ps.len() as f64 * eff) as usize + 16,
    );
    for &t in arrivals_ps {
        if eff < 1.0 && rng.random::<f64>() >= eff {
            continue;
        }
        out.detected += 1;
        let t = match &jitter {
            Some(n) => t + n.sample(rng),
            None => t,
        };
        let tag = t.round() as i64;
        if tag < 0 || tag > duration_ps {
            out.clipped += 1;
        } else {
            tags.push(tag);
        }
    }

    if det.dark_rate_hz() > 0.0 {
        let gap = Exp::new(det.dark_rate_hz() * 1e-12).expect("dark rate positive");
        let mut t = 0.0_f64;
        loop {
            t += gap.sample(rng);
            if t > duration_ps as f64 {
                break;
            }
            tags.push(t.round() as i64);
            out.dark += 1;
        }
    }

    tags.sort_unstable();

    if det.dead_time_ns() > 0.0 {
        let dead_ps = (det.dead_time_ns() * 1e3).round() as i64;
        let mut kept = Vec::with_capacity(tags.len());
        let mut last: Option<i64> = None;
        for t in tags {
            match last {
                Some(prev) if t - prev < dead_ps => out.removed_dead += 1,
                _ => {
                    kept.push(t);
                    last = Some(t);
                }
            }
        }
        tags = kept;
    }

    out.tags_ps = tags;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn ideal_detector_is_lossless_and_exact() {
        let arrivals = vec![10.2, 55.8, 100.0, 4_000.4];
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let out = apply_detector(&arrivals, &DetectorParams::ideal(), 5_000, &mut rng);
        assert_eq!(out.tags_ps, vec![10, 56, 100, 4_000]);
        assert_eq!(out.detected, 4);
        assert_eq!(out.clipped, 0);
    }

    #[test]
    fn out_of_window_tags_are_clipped_and_counted() {
        let arrivals = vec![-3.0, 10.0, 5_001.0];
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let out = apply_detector(&arrivals, &DetectorParams::ideal(), 5_000, &mut rng);
        assert_eq!(out.tags_ps, vec![10]);
        assert_eq!(out.clipped, 2);
    }

    #[test]
    fn efficiency_thins_binomially() {
        let arrivals: Vec<f64> = (0..40_000).map(|i| i as f64 * 100.0).collect();
        let det = DetectorParams::new(0.0, 0.3, 0.0, 0.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let out = apply_detector(&arrivals, &det, 4_100_000, &mut rng);
        let expect = 12_000.0;
        let sigma = (40_000.0_f64 * 0.3 * 0.7).sqrt();
        assert!((out.detected as f64 - expect).abs() < 5.0 * sigma);
        assert_eq!(out.detected as usize, out.tags_ps.len());
    }

    #[test]
    fn jitter_spreads_tags_with_expected_width() {
        let arrivals: Vec<f64> = vec![500_000.0; 20_000];
        let det = DetectorParams::new(100.0, 1.0, 0.0, 0.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let out = apply_detector(&arrivals, &det, 1_000_000, &mut rng);
        let n = out.tags_ps.len() as f64;
        let mean = out.tags_ps.iter().map(|&t| t as f64).sum::<f64>() / n;
        let var = out.tags_ps.iter().map(|&t| (t as f64 - mean).powi(2)).sum::<f64>() / n;
        let sigma = fwhm_to_sigma(100.0);
        assert!((mean - 500_000.0).abs() < 3.0 * sigma / n.sqrt());
        assert!((var.sqrt() - sigma).abs() < 0.05 * sigma);
    }

    #[test]
    fn dark_counts_fill_empty_input() {
        let det = DetectorParams::new(0.0, 1.0, 10_000.0, 0.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        // 2 s of darks at 10 kHz
        let out = apply_detector(&[], &det, 2_000_000_000_000, &mut rng);
        let expect = 20_000.0;
        assert!((out.dark as f64 - expect).abs() < 5.0 * expect.sqrt());
        assert!(out.tags_ps.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn dead_time_enforces_minimum_gap() {
        let arrivals: Vec<f64> = vec![100.0, 150.0, 220.0, 500.0, 549.0, 560.0, 800.0];
        let det = DetectorParams::new(0.0, 1.0, 0.0, 0.06).unwrap(); // 60 ps
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let out = apply_detector(&arrivals, &det, 1_000, &mut rng);
        assert_eq!(out.tags_ps, vec![100, 220, 500, 560, 800]);
        assert_eq!(out.removed_dead, 2);
        assert!(out.tags_ps.windows(2).all(|w| w[1] - w[0] >= 60));
    }

    #[test]
    fn dead_time_boundary_gap_is_kept() {
        let arrivals = vec![100.0, 160.0];
        let det = DetectorParams::new(0.0, 1.0, 0.0, 0.06).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let out = apply_detector(&arrivals, &det, 1_000, &mut rng);
        assert_eq!(out.tags_ps, vec![100, 160]);
    }
}
