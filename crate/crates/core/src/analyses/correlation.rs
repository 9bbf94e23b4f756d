//! Intensity-correlation figures of merit: CW antibunching fits, pulsed
//! center-to-side peak ratios and tap splitting ratios.

use crate::correlator::peak_areas;
use crate::fitcore::FitOptions;
use crate::types::{CorrelationHistogram, FitResult, Normalization, TimeTagStream};

use super::models::{run_point_fit, AntibunchingCw, PointFit};
use super::{bin_weights, AnalysisError, Weighting};

/// CW second-order correlation fit results.
#[derive(Debug, Clone)]
pub struct AntibunchingAnalysis {
    pub fit: FitResult,
    pub g2_zero: f64,
    pub g2_zero_err: f64,
    pub lifetime_ps: f64,
    pub lifetime_err_ps: f64,
    /// The dip is statistically indistinguishable from a flat line, so the
    /// fitted lifetime carries no information.
    pub degenerate_lifetime: bool,
}

/// Fits `g2(t) = 1 - (1 - g2_zero) exp(-|t|/tau1)` to a CW-normalized
/// correlation histogram.
pub fn fit_antibunching_cw(
    hist: &CorrelationHistogram,
    weighting: Weighting,
) -> Result<AntibunchingAnalysis, AnalysisError> {
    if hist.normalization() != Normalization::CwPoisson {
        return Err(AnalysisError::WrongNormalization {
            expected: Normalization::CwPoisson.as_str(),
            found: hist.normalization().as_str(),
        });
    }
    let values = hist.normalized().expect("cw-poisson implies values").to_vec();
    let points: Vec<f64> = hist.centers_ps().map(|c| c as f64).collect();
    let bw = hist.bin_width_ps() as f64;
    let span = (hist.n_bins() as f64) * bw;

    let zero_value = hist
        .value_at(0)
        .ok_or_else(|| AnalysisError::InvalidInput("histogram does not cover zero delay".into()))?;
    let a0_init = zero_value.clamp(0.0, 0.999);
    // matching the model's deficit integral 2 (1 - a0) tau1
    let deficit: f64 = values.iter().map(|&y| (1.0 - y).max(0.0) * bw).sum();
    let tau_init = (deficit / (2.0 * (1.0 - a0_init))).clamp(bw * 0.5, span * 0.5);

    let weights = bin_weights(hist, weighting);
    let fit = run_point_fit(
        PointFit {
            model: &AntibunchingCw,
            points: &points,
            values: &values,
            weights: weights.as_deref(),
            initial: vec![a0_init, tau_init],
            lower: vec![0.0, bw * 0.1],
            upper: vec![2.0, span * 2.0],
        },
        &FitOptions::default(),
    )?;

    let g2_zero = fit.values[0];
    let g2_zero_err = fit.std_errors[0];
    let lifetime_ps = fit.values[1];
    let lifetime_err_ps = fit.std_errors[1];
    let degenerate_lifetime = (1.0 - g2_zero) < 2.0 * g2_zero_err;
    Ok(AntibunchingAnalysis {
        fit,
        g2_zero,
        g2_zero_err,
        lifetime_ps,
        lifetime_err_ps,
        degenerate_lifetime,
    })
}

/// Pulsed center-to-side peak comparison.
#[derive(Debug, Clone)]
pub struct PulsedG2 {
    pub g2_zero: f64,
    pub g2_zero_err: f64,
    pub center_area: f64,
    pub mean_side_area: f64,
    pub n_side_peaks: usize,
}

/// Zero-delay suppression of a pulsed correlation histogram: the raw
/// center-peak area divided by the mean area of `n_side_peaks` peaks on
/// each side at multiples of the repetition period.
pub fn hbt_pulsed_g2(
    hist: &CorrelationHistogram,
    rep_period_ps: i64,
    n_side_peaks: usize,
    half_window_ps: i64,
) -> Result<PulsedG2, AnalysisError> {
    if hist.normalized().is_some() {
        return Err(AnalysisError::WrongNormalization {
            expected: Normalization::Raw.as_str(),
            found: hist.normalization().as_str(),
        });
    }
    if rep_period_ps <= 0 {
        return Err(AnalysisError::InvalidInput(format!(
            "repetition period must be positive, got {rep_period_ps} ps"
        )));
    }
    if n_side_peaks == 0 {
        return Err(AnalysisError::InvalidInput(
            "at least one side peak per side is required".into(),
        ));
    }

    let center = peak_areas(hist, &[0], half_window_ps)?[0].area;
    let mut side_positions = Vec::with_capacity(2 * n_side_peaks);
    for k in 1..=n_side_peaks as i64 {
        side_positions.push(k * rep_period_ps);
        side_positions.push(-k * rep_period_ps);
    }
    let sides = peak_areas(hist, &side_positions, half_window_ps)?;
    let side_total: f64 = sides.iter().map(|a| a.area).sum();
    if side_total <= 0.0 {
        return Err(AnalysisError::InvalidInput(
            "side peaks contain no counts".into(),
        ));
    }
    let mean_side = side_total / sides.len() as f64;
    let g2_zero = center / mean_side;
    // Poisson counting on both areas; an empty center window still has a
    // one-count uncertainty scale.
    let g2_zero_err = (center.max(1.0) + center * center / side_total).sqrt() / mean_side;

    Ok(PulsedG2 {
        g2_zero,
        g2_zero_err,
        center_area: center,
        mean_side_area: mean_side,
        n_side_peaks,
    })
}

/// Count ratio between two detector channels.
#[derive(Debug, Clone)]
pub struct SplittingRatio {
    /// Fraction of counts on channel A, averaged over time windows.
    pub ratio: f64,
    /// Standard error of the mean over windows.
    pub ratio_err: f64,
    pub counts_a: u64,
    pub counts_b: u64,
    pub windows_used: usize,
}

/// Splitting ratio `n_a / (n_a + n_b)` with an empirical error bar from
/// the scatter across `n_windows` equal time slices.
pub fn splitting_ratio(
    stream: &TimeTagStream,
    ch_a: u8,
    ch_b: u8,
    n_windows: usize,
) -> Result<SplittingRatio, AnalysisError> {
    if n_windows < 2 {
        return Err(AnalysisError::InvalidInput(format!(
            "need at least 2 windows for an error estimate, got {n_windows}"
        )));
    }
    if ch_a == ch_b {
        return Err(AnalysisError::InvalidInput(
            "splitting ratio needs two distinct channels".into(),
        ));
    }
    for ch in [ch_a, ch_b] {
        if !stream.has_channel(ch) {
            return Err(AnalysisError::InvalidInput(format!(
                "channel {ch} is not declared in the stream"
            )));
        }
    }
    let duration = stream.duration_ps();
    if duration <= 0 {
        return Err(AnalysisError::InvalidInput(
            "stream duration must be positive".into(),
        ));
    }

    let mut counts = vec![(0u64, 0u64); n_windows];
    let mut total_a = 0u64;
    let mut total_b = 0u64;
    for tag in stream.iter() {
        let w = ((tag.timestamp_ps as u128 * n_windows as u128) / duration as u128)
            .min(n_windows as u128 - 1) as usize;
        if tag.channel == ch_a {
            counts[w].0 += 1;
            total_a += 1;
        } else if tag.channel == ch_b {
            counts[w].1 += 1;
            total_b += 1;
        }
    }

    let ratios: Vec<f64> = counts
        .iter()
        .filter(|&&(a, b)| a + b > 0)
        .map(|&(a, b)| a as f64 / (a + b) as f64)
        .collect();
    if ratios.len() < 2 {
        return Err(AnalysisError::InvalidInput(format!(
            "only {} windows contain counts; need at least 2",
            ratios.len()
        )));
    }
    let n = ratios.len() as f64;
    let mean = ratios.iter().sum::<f64>() / n;
    let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sem = (var / n).sqrt();

    Ok(SplittingRatio {
        ratio: mean,
        ratio_err: sem,
        counts_a: total_a,
        counts_b: total_b,
        windows_used: ratios.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyses::models::FitModel;
    use crate::correlator::cw_normalization_constant;

    fn synthetic_cw_hist(a0: f64, tau_ps: f64, noise_seed: Option<u64>) -> CorrelationHistogram {
        use rand::Rng;
        use rand::SeedableRng;
        let bw = 100i64;
        let max_tau = 8_000i64;
        let n_bins = (2 * max_tau / bw + 1) as usize;
        let level = 40_000.0; // expected counts per far bin
        let mut rng = noise_seed.map(rand_chacha::ChaCha12Rng::seed_from_u64);
        let mut counts = Vec::with_capacity(n_bins);
        for k in 0..n_bins {
            let t = (-max_tau + k as i64 * bw) as f64;
            let mu = level * AntibunchingCw.value(&[t], &[a0, tau_ps]);
            let n = match rng.as_mut() {
                // gaussian stand-in for poisson at these counts
                Some(r) => (mu + mu.sqrt() * r.random::<f64>().mul_add(2.0, -1.0)).round(),
                None => mu.round(),
            };
            counts.push(n.max(0.0) as u64);
        }
        let hist = CorrelationHistogram::new(-max_tau, bw, counts).unwrap();
        let normalized: Vec<f64> = hist.counts().iter().map(|&n| n as f64 / level).collect();
        hist.with_normalized(normalized, Normalization::CwPoisson)
            .unwrap()
    }

    #[test]
    fn antibunching_fit_recovers_noiseless_dip() {
        let hist = synthetic_cw_hist(0.05, 1_000.0, None);
        let out = fit_antibunching_cw(&hist, Weighting::Uniform).unwrap();
        assert!(out.fit.converged);
        assert!((out.g2_zero - 0.05).abs() < 1e-3, "g2 = {}", out.g2_zero);
        assert!(
            (out.lifetime_ps - 1_000.0).abs() < 5.0,
            "tau = {}",
            out.lifetime_ps
        );
        assert!(!out.degenerate_lifetime);
    }

    #[test]
    fn antibunching_fit_survives_counting_noise() {
        let hist = synthetic_cw_hist(0.3, 800.0, Some(11));
        let out = fit_antibunching_cw(&hist, Weighting::Poisson).unwrap();
        assert!(out.fit.converged);
        assert!((out.g2_zero - 0.3).abs() < 0.05, "g2 = {}", out.g2_zero);
        assert!(
            (out.lifetime_ps - 800.0).abs() < 80.0,
            "tau = {}",
            out.lifetime_ps
        );
    }

    #[test]
    fn antibunching_requires_cw_normalization() {
        let hist = CorrelationHistogram::new(-1_000, 100, vec![50; 21]).unwrap();
        let err = fit_antibunching_cw(&hist, Weighting::Uniform).unwrap_err();
        assert!(matches!(err, AnalysisError::WrongNormalization { .. }));
    }

    #[test]
    fn flat_histogram_flags_degenerate_lifetime() {
        let hist = synthetic_cw_hist(1.0, 700.0, Some(3));
        let out = fit_antibunching_cw(&hist, Weighting::Poisson).unwrap();
        assert!(out.degenerate_lifetime);
    }

    #[test]
    fn pulsed_ratio_matches_constructed_areas() {
        // period 10 bins of 100 ps; peaks as single hot bins
        let bw = 100i64;
        let max_tau = 3_500i64;
        let n_bins = (2 * max_tau / bw + 1) as usize;
        let mut counts = vec![0u64; n_bins];
        let idx_of = |tau: i64| ((tau + max_tau) / bw) as usize;
        counts[idx_of(0)] = 50;
        for k in [-3i64, -2, -1, 1, 2, 3] {
            counts[idx_of(k * 1_000)] = 1_000;
        }
        let hist = CorrelationHistogram::new(-max_tau, bw, counts).unwrap();
        let out = hbt_pulsed_g2(&hist, 1_000, 3, 200).unwrap();
        assert!((out.g2_zero - 0.05).abs() < 1e-12);
        assert_eq!(out.center_area, 50.0);
        assert_eq!(out.mean_side_area, 1_000.0);
        let expected_err = (50.0f64 + 2_500.0 / 6_000.0).sqrt() / 1_000.0;
        assert!((out.g2_zero_err - expected_err).abs() < 1e-12);
    }

    #[test]
    fn pulsed_ratio_rejects_normalized_input() {
        let hist = CorrelationHistogram::new(-2_000, 100, vec![10; 41])
            .unwrap()
            .with_normalized(vec![1.0; 41], Normalization::PulsedSidepeak)
            .unwrap();
        assert!(matches!(
            hbt_pulsed_g2(&hist, 1_000, 1, 200),
            Err(AnalysisError::WrongNormalization { .. })
        ));
    }

    #[test]
    fn empty_center_window_keeps_finite_error() {
        let bw = 100i64;
        let max_tau = 2_000i64;
        let n_bins = (2 * max_tau / bw + 1) as usize;
        let mut counts = vec![0u64; n_bins];
        let idx_of = |tau: i64| ((tau + max_tau) / bw) as usize;
        counts[idx_of(-1_000)] = 400;
        counts[idx_of(1_000)] = 400;
        let hist = CorrelationHistogram::new(-max_tau, bw, counts).unwrap();
        let out = hbt_pulsed_g2(&hist, 1_000, 1, 200).unwrap();
        assert_eq!(out.g2_zero, 0.0);
        assert!((out.g2_zero_err - 1.0 / 400.0).abs() < 1e-12);
    }

    #[test]
    fn splitting_ratio_recovers_deterministic_split() {
        // 9000 evenly spaced tags, 4:1 between channels, windows aligned
        // with the pattern period
        let mut tags = Vec::new();
        for i in 0..9_000i64 {
            let ch = if i % 5 == 0 { 1u8 } else { 0u8 };
            tags.push((ch, i * 100_000));
        }
        let stream = TimeTagStream::new(
            900_000_000,
            vec![0, 1],
            tags.iter().map(|&(_, t)| t).collect(),
            tags.iter().map(|&(c, _)| c).collect(),
        )
        .unwrap();
        let out = splitting_ratio(&stream, 0, 1, 10).unwrap();
        assert!((out.ratio - 0.8).abs() < 1e-9);
        assert!(out.ratio_err < 1e-9);
        assert_eq!(out.counts_a, 7_200);
        assert_eq!(out.counts_b, 1_800);
        assert_eq!(out.windows_used, 10);
    }

    #[test]
    fn splitting_ratio_validates_inputs() {
        let stream = TimeTagStream::new(1_000, vec![0, 1], vec![10, 20], vec![0, 1]).unwrap();
        assert!(splitting_ratio(&stream, 0, 1, 1).is_err());
        assert!(splitting_ratio(&stream, 0, 0, 4).is_err());
        assert!(splitting_ratio(&stream, 0, 7, 4).is_err());
    }

    #[test]
    fn cw_constant_matches_rate_product() {
        let c = cw_normalization_constant(100, 1e5, 2e5, 10.0);
        assert!((c - 1e5 * 2e5 * 10.0 * 100e-12).abs() < 1e-6);
    }
}
