//! Two-photon interference figures of merit from delay-interferometer
//! correlation histograms, CW and pulsed.
//!
//! Both entry points take a pair of histograms measured with orthogonal
//! and parallel polarization between the arms. The orthogonal histogram
//! pins the source parameters (multiphoton level, lifetime); the parallel
//! one adds the interference dip, from which the visibility follows.

use crate::fitcore::FitOptions;
use crate::types::{CorrelationHistogram, FitResult, Normalization, SplitterParams};

use super::models::{
    run_point_fit, FitModel, HomCwGeometry, HomCwOrthogonal, HomCwParallel, HomPulsedOrthogonal,
    HomPulsedParallel, PointFit,
};
use super::{bin_weights, bin_values, quadratic_form, scalar_gradient, AnalysisError, Weighting};

/// CW interferometer analysis: source parameters from the orthogonal
/// fit, interference parameters from the parallel fit.
#[derive(Debug, Clone)]
pub struct HomCwAnalysis {
    pub orthogonal_fit: FitResult,
    pub parallel_fit: FitResult,
    pub g2_zero: f64,
    pub g2_zero_err: f64,
    pub lifetime_ps: f64,
    pub lifetime_err_ps: f64,
    /// Two-photon wave-packet overlap from the parallel dip.
    pub visibility: f64,
    pub visibility_err: f64,
    pub coherence_ps: f64,
    pub coherence_err_ps: f64,
    /// Zero-delay dip contrast predicted by the fitted parameters
    /// (what ideal postselection on coincidences would see).
    pub v_post: f64,
    pub v_post_err: f64,
    /// Same contrast read directly off the two zero-delay bins.
    pub v_post_measured: f64,
    pub v_post_measured_err: f64,
}

fn require_cw(hist: &CorrelationHistogram) -> Result<(), AnalysisError> {
    if hist.normalization() != Normalization::CwPoisson {
        return Err(AnalysisError::WrongNormalization {
            expected: Normalization::CwPoisson.as_str(),
            found: hist.normalization().as_str(),
        });
    }
    Ok(())
}

fn zero_bin_counts(hist: &CorrelationHistogram) -> Result<f64, AnalysisError> {
    let k = hist
        .bin_index(0)
        .ok_or_else(|| AnalysisError::InvalidInput("histogram does not cover zero delay".into()))?;
    Ok(hist.counts()[k] as f64)
}

/// Fits the CW interferometer pair. `delay_ps` is the arm-length delay;
/// `splitters` carries the measured splitting ratios of both couplers.
pub fn fit_hom_cw(
    orthogonal: &CorrelationHistogram,
    parallel: &CorrelationHistogram,
    splitters: &SplitterParams,
    delay_ps: f64,
    weighting: Weighting,
) -> Result<HomCwAnalysis, AnalysisError> {
    require_cw(orthogonal)?;
    require_cw(parallel)?;
    if !(delay_ps.is_finite() && delay_ps > 0.0) {
        return Err(AnalysisError::InvalidInput(format!(
            "arm delay must be positive, got {delay_ps} ps"
        )));
    }
    let geometry = HomCwGeometry::new(splitters);
    if geometry.c_same <= 1e-9 || geometry.cross_sum() <= 1e-9 {
        return Err(AnalysisError::InvalidInput(
            "both couplers must split power into both ports for an interferometer fit".into(),
        ));
    }

    // --- orthogonal: source parameters
    let bw = orthogonal.bin_width_ps() as f64;
    let orth_model = HomCwOrthogonal::new(splitters, delay_ps);
    let y0 = orthogonal
        .value_at(0)
        .ok_or_else(|| AnalysisError::InvalidInput("histogram does not cover zero delay".into()))?;
    let tau1_init = (delay_ps / 4.0).max(bw * 0.5);
    // subtract the cross-arm pedestal estimated with a perfectly
    // antibunched source, then read a0 off the same-arm term
    let pedestal = orth_model.value(&[0.0], &[0.0, tau1_init]);
    let a0_init = ((y0 - pedestal) / geometry.c_same).clamp(1e-3, 0.9);

    let orth_points: Vec<f64> = orthogonal.centers_ps().map(|c| c as f64).collect();
    let orth_values = bin_values(orthogonal);
    let orth_weights = bin_weights(orthogonal, weighting);
    let orthogonal_fit = run_point_fit(
        PointFit {
            model: &orth_model,
            points: &orth_points,
            values: &orth_values,
            weights: orth_weights.as_deref(),
            initial: vec![a0_init, tau1_init],
            lower: vec![0.0, bw * 0.1],
            upper: vec![2.0, delay_ps * 4.0],
        },
        &FitOptions::default(),
    )?;
    let a0 = orthogonal_fit.values[0];
    let tau1 = orthogonal_fit.values[1];

    // --- parallel: interference parameters at fixed source parameters
    let bw_p = parallel.bin_width_ps() as f64;
    let par_model = HomCwParallel::new(splitters, delay_ps, a0, tau1);
    let same0 = geometry.c_same * a0;
    // cross-arm level at zero delay, read from the model with v = 0
    let cross0 = par_model.value(&[0.0], &[0.0, 1.0]) - same0;
    if cross0 <= 0.0 {
        return Err(AnalysisError::InvalidInput(
            "no cross-arm coincidence flux at zero delay; cannot fit interference".into(),
        ));
    }
    let y0p = parallel
        .value_at(0)
        .ok_or_else(|| AnalysisError::InvalidInput("histogram does not cover zero delay".into()))?;
    let v_init = (1.0 - (y0p - same0) / cross0).clamp(0.05, 1.0);
    let tau_c_init = (tau1 / 2.0).max(bw_p * 0.5);

    let par_points: Vec<f64> = parallel.centers_ps().map(|c| c as f64).collect();
    let par_values = bin_values(parallel);
    let par_weights = bin_weights(parallel, weighting);
    let parallel_fit = run_point_fit(
        PointFit {
            model: &par_model,
            points: &par_points,
            values: &par_values,
            weights: par_weights.as_deref(),
            initial: vec![v_init, tau_c_init],
            lower: vec![0.0, bw_p * 0.1],
            upper: vec![1.5, delay_ps * 4.0],
        },
        &FitOptions::default(),
    )?;
    let visibility = parallel_fit.values[0];

    // --- derived zero-delay contrast
    let c_same = geometry.c_same;
    let cross_sum = geometry.cross_sum();
    let contrast = |p: &[f64]| -> f64 {
        let (a0, tau1, v) = (p[0], p[1], p[2]);
        let cr = cross_sum * (1.0 - (1.0 - a0) * (-delay_ps / tau1).exp());
        v * cr / (c_same * a0 + cr)
    };
    let joint = [a0, tau1, visibility];
    let v_post = contrast(&joint);
    let grad = scalar_gradient(contrast, &joint);
    let var_orth = quadratic_form(&grad[..2], &orthogonal_fit.covariance);
    let var_par = grad[2] * grad[2] * parallel_fit.covariance_at(0, 0);
    let v_post_err = (var_orth + var_par).sqrt();

    let n_o = zero_bin_counts(orthogonal)?.max(1.0);
    let n_p = zero_bin_counts(parallel)?.max(1.0);
    let r = y0p / y0;
    let v_post_measured = 1.0 - r;
    let v_post_measured_err = r * (1.0 / n_p + 1.0 / n_o).sqrt();

    Ok(HomCwAnalysis {
        g2_zero: a0,
        g2_zero_err: orthogonal_fit.std_errors[0],
        lifetime_ps: tau1,
        lifetime_err_ps: orthogonal_fit.std_errors[1],
        visibility,
        visibility_err: parallel_fit.std_errors[0],
        coherence_ps: parallel_fit.values[1],
        coherence_err_ps: parallel_fit.std_errors[1],
        v_post,
        v_post_err,
        v_post_measured,
        v_post_measured_err,
        orthogonal_fit,
        parallel_fit,
    })
}

/// Pulsed double-excitation interferometer analysis.
#[derive(Debug, Clone)]
pub struct HomPulsedAnalysis {
    pub orthogonal_fit: FitResult,
    pub parallel_fit: FitResult,
    pub lifetime_ps: f64,
    pub lifetime_err_ps: f64,
    /// Center-peak deficit relative to the inner side peaks, from the
    /// parallel fit areas.
    pub v_raw: f64,
    pub v_raw_err: f64,
    /// Same quantity on the orthogonal histogram; compatible with zero
    /// when the peak model holds.
    pub v_raw_orthogonal: f64,
    pub v_raw_orthogonal_err: f64,
    /// Zero-delay dip contrast relative to the undipped center peak.
    pub v_post: f64,
    pub v_post_err: f64,
    /// The fitted dip amplitude is indistinguishable from zero.
    pub degenerate_dip: bool,
    /// Delays beyond this were excluded to keep repetition-period
    /// clusters out of the fit.
    pub fit_half_span_ps: i64,
}

fn require_raw(hist: &CorrelationHistogram) -> Result<(), AnalysisError> {
    if hist.normalized().is_some() {
        return Err(AnalysisError::WrongNormalization {
            expected: Normalization::Raw.as_str(),
            found: hist.normalization().as_str(),
        });
    }
    Ok(())
}

/// Bins of `hist` whose centers lie within `|tau| <= limit`, as fit
/// coordinates and count values.
fn windowed_counts(
    hist: &CorrelationHistogram,
    limit_ps: i64,
) -> Result<(Vec<f64>, Vec<f64>), AnalysisError> {
    if hist.first_center_ps() > -limit_ps || hist.center_ps(hist.n_bins() - 1) < limit_ps {
        return Err(AnalysisError::InvalidInput(format!(
            "histogram covers {}..{} ps but the fit needs +/-{} ps",
            hist.first_center_ps(),
            hist.center_ps(hist.n_bins() - 1),
            limit_ps
        )));
    }
    let mut points = Vec::new();
    let mut values = Vec::new();
    for (k, c) in hist.centers_ps().enumerate() {
        if c.abs() <= limit_ps {
            points.push(c as f64);
            values.push(hist.counts()[k] as f64);
        }
    }
    Ok((points, values))
}

/// Peak height and area read from the windowed data around `pos`.
fn peak_estimate(points: &[f64], values: &[f64], pos: f64, half: f64) -> (f64, f64) {
    let mut height = 0.0f64;
    let mut area = 0.0;
    for (p, v) in points.iter().zip(values) {
        if (p - pos).abs() <= half {
            height = height.max(*v);
            area += v;
        }
    }
    (height, area)
}

const FRAC_PI_2: f64 = std::f64::consts::FRAC_PI_2;
const FRAC_2_PI: f64 = std::f64::consts::FRAC_2_PI;

/// Fits the pulsed interferometer pair over the center cluster of five
/// peaks at `0, ±delay, ±2 delay` (raw counts, both histograms).
///
/// The repetition period must exceed four times the delay with enough
/// margin that the neighboring cluster (whose innermost peak sits at
/// `rep_period - 2 delay`) stays outside the fitted window.
pub fn fit_hom_pulsed(
    orthogonal: &CorrelationHistogram,
    parallel: &CorrelationHistogram,
    delay_ps: f64,
    rep_period_ps: i64,
    weighting: Weighting,
) -> Result<HomPulsedAnalysis, AnalysisError> {
    require_raw(orthogonal)?;
    require_raw(parallel)?;
    if !(delay_ps.is_finite() && delay_ps > 0.0) {
        return Err(AnalysisError::InvalidInput(format!(
            "arm delay must be positive, got {delay_ps} ps"
        )));
    }
    let bw = orthogonal.bin_width_ps();
    if parallel.bin_width_ps() != bw {
        return Err(AnalysisError::InvalidInput(format!(
            "bin widths differ: {} vs {} ps",
            bw,
            parallel.bin_width_ps()
        )));
    }
    let margin = ((rep_period_ps as f64 - 4.0 * delay_ps) / 2.0).min(delay_ps);
    if margin < 2.0 * bw as f64 {
        return Err(AnalysisError::InvalidInput(format!(
            "repetition period {rep_period_ps} ps leaves no clean window around the center \
             cluster for delay {delay_ps} ps; need rep_period > 4 delay + 4 bins"
        )));
    }
    let limit = (2.0 * delay_ps + margin).floor() as i64;

    let fit_cluster = |hist: &CorrelationHistogram,
                       model: &dyn FitModel,
                       parallel_arm: bool|
     -> Result<FitResult, AnalysisError> {
        let (points, values) = windowed_counts(hist, limit)?;
        let half = delay_ps * 0.45;
        let (h0, _) = peak_estimate(&points, &values, 0.0, half);
        let (hp, area_p) = peak_estimate(&points, &values, delay_ps, half);
        let (hm, _) = peak_estimate(&points, &values, -delay_ps, half);
        let (hp2, _) = peak_estimate(&points, &values, 2.0 * delay_ps, half);
        let (hm2, _) = peak_estimate(&points, &values, -2.0 * delay_ps, half);

        let a_plus = (FRAC_PI_2 * hp).max(1.0);
        let a_minus = (FRAC_PI_2 * hm).max(1.0);
        let tau1_init = if hp > 0.0 {
            (area_p * bw as f64 / a_plus).clamp(bw as f64 * 0.5, delay_ps * 0.99)
        } else {
            (delay_ps / 4.0).clamp(bw as f64 * 0.5, delay_ps * 0.99)
        };
        let mut initial = vec![
            (FRAC_PI_2 * h0).max(1.0),
            a_plus,
            a_minus,
            (FRAC_PI_2 * hp2).max(1.0),
            (FRAC_PI_2 * hm2).max(1.0),
            tau1_init,
        ];
        let mut lower = vec![0.0, 0.0, 0.0, 0.0, 0.0, bw as f64 * 0.5];
        let mut upper = vec![1e12, 1e12, 1e12, 1e12, 1e12, delay_ps];
        if parallel_arm {
            // start from the undipped center implied by the side peaks
            let undipped = (a_plus + a_minus) / 4.0;
            initial[0] = undipped.max(1.0);
            initial.push((undipped - FRAC_PI_2 * h0).max(0.05 * undipped));
            initial.push((tau1_init / 2.0).clamp(bw as f64 * 0.2, delay_ps * 0.99));
            lower.extend([0.0, bw as f64 * 0.1]);
            upper.extend([1e12, delay_ps]);
        }
        let weights = match weighting {
            Weighting::Uniform => None,
            Weighting::Poisson => Some(
                values
                    .iter()
                    .map(|&n| 1.0 / n.max(1.0).sqrt())
                    .collect::<Vec<f64>>(),
            ),
        };
        Ok(run_point_fit(
            PointFit {
                model,
                points: &points,
                values: &values,
                weights: weights.as_deref(),
                initial,
                lower,
                upper,
            },
            &FitOptions::default(),
        )?)
    };

    let orth_model = HomPulsedOrthogonal::new(delay_ps);
    let par_model = HomPulsedParallel::new(delay_ps);
    let orthogonal_fit = fit_cluster(orthogonal, &orth_model, false)?;
    let parallel_fit = fit_cluster(parallel, &par_model, true)?;

    // center-area deficit from the parallel fit: areas are amplitude x
    // width, the dip removes a_dip tau_c from the center peak
    let deficit = |p: &[f64]| -> f64 {
        let center_area = p[0] * p[5] - p.get(7).map_or(0.0, |tau_c| p[6] * tau_c);
        1.0 - 2.0 * center_area / ((p[1] + p[2]) * p[5])
    };
    let v_raw = deficit(&parallel_fit.values);
    let grad = scalar_gradient(deficit, &parallel_fit.values);
    let v_raw_err = quadratic_form(&grad, &parallel_fit.covariance).sqrt();

    let v_raw_orthogonal = deficit(&orthogonal_fit.values);
    let grad_o = scalar_gradient(deficit, &orthogonal_fit.values);
    let v_raw_orthogonal_err = quadratic_form(&grad_o, &orthogonal_fit.covariance).sqrt();

    // dip contrast at zero delay relative to the undipped model
    let contrast = |p: &[f64]| -> f64 {
        let undipped = orth_model.value(&[0.0], &p[..6]);
        if undipped <= 0.0 {
            return 0.0;
        }
        FRAC_2_PI * p[6] / undipped
    };
    let v_post = contrast(&parallel_fit.values);
    let grad_c = scalar_gradient(contrast, &parallel_fit.values);
    let v_post_err = quadratic_form(&grad_c, &parallel_fit.covariance).sqrt();

    let a_dip = parallel_fit.values[6];
    let degenerate_dip = a_dip < 2.0 * parallel_fit.std_errors[6];

    Ok(HomPulsedAnalysis {
        lifetime_ps: orthogonal_fit.values[5],
        lifetime_err_ps: orthogonal_fit.std_errors[5],
        v_raw,
        v_raw_err,
        v_raw_orthogonal,
        v_raw_orthogonal_err,
        v_post,
        v_post_err,
        degenerate_dip,
        fit_half_span_ps: limit,
        orthogonal_fit,
        parallel_fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cw_pair(
        splitters: &SplitterParams,
        delay_ps: f64,
        a0: f64,
        tau1: f64,
        v: f64,
        tau_c: f64,
    ) -> (CorrelationHistogram, CorrelationHistogram) {
        let bw = 100i64;
        let max_tau = 8_000i64;
        let n_bins = (2 * max_tau / bw + 1) as usize;
        let level = 1.0e5;
        let orth_model = HomCwOrthogonal::new(splitters, delay_ps);
        let par_model = HomCwParallel::new(splitters, delay_ps, a0, tau1);
        let make = |f: &dyn Fn(f64) -> f64| {
            let counts: Vec<u64> = (0..n_bins)
                .map(|k| {
                    let t = (-max_tau + k as i64 * bw) as f64;
                    (level * f(t)).round() as u64
                })
                .collect();
            let hist = CorrelationHistogram::new(-max_tau, bw, counts).unwrap();
            let normalized = hist.counts().iter().map(|&n| n as f64 / level).collect();
            hist.with_normalized(normalized, Normalization::CwPoisson)
                .unwrap()
        };
        let orth = make(&|t| orth_model.value(&[t], &[a0, tau1]));
        let par = make(&|t| par_model.value(&[t], &[v, tau_c]));
        (orth, par)
    }

    #[test]
    fn cw_fit_recovers_balanced_synthetic_pair() {
        let sp = SplitterParams::new(0.5, 0.5, 0.5, 0.5, 0.5).unwrap();
        let (orth, par) = cw_pair(&sp, 4_000.0, 0.0, 1_000.0, 0.92, 400.0);
        let out = fit_hom_cw(&orth, &par, &sp, 4_000.0, Weighting::Uniform).unwrap();
        assert!(out.orthogonal_fit.converged && out.parallel_fit.converged);
        assert!(out.g2_zero < 5e-3, "g2_zero = {}", out.g2_zero);
        assert!((out.lifetime_ps - 1_000.0).abs() < 5.0);
        assert!((out.visibility - 0.92).abs() < 5e-3, "v = {}", out.visibility);
        assert!((out.coherence_ps - 400.0).abs() < 10.0);
        // with a perfectly antibunched source the whole dip survives
        // postselection
        assert!((out.v_post - 0.92).abs() < 5e-3, "v_post = {}", out.v_post);
        assert!(
            (out.v_post_measured - out.v_post).abs() < 0.02,
            "measured {} vs fitted {}",
            out.v_post_measured,
            out.v_post
        );
    }

    #[test]
    fn cw_fit_handles_imperfect_source_and_lopsided_couplers() {
        let sp = SplitterParams::new(0.42, 0.58, 0.55, 0.45, 0.5).unwrap();
        let (orth, par) = cw_pair(&sp, 4_000.0, 0.12, 900.0, 0.8, 500.0);
        let out = fit_hom_cw(&orth, &par, &sp, 4_000.0, Weighting::Uniform).unwrap();
        assert!((out.g2_zero - 0.12).abs() < 5e-3);
        assert!((out.visibility - 0.8).abs() < 0.01);
        // multiphoton pairs dilute the postselected contrast below the
        // wave-packet overlap
        assert!(out.v_post < 0.8, "v_post = {}", out.v_post);
        // closed-form cross-check of the contrast definition
        let geometry = HomCwGeometry::new(&sp);
        let cr = geometry.cross_sum()
            * (1.0 - (1.0 - out.g2_zero) * (-4_000.0 / out.lifetime_ps).exp());
        let expected = out.visibility * cr / (geometry.c_same * out.g2_zero + cr);
        assert!((out.v_post - expected).abs() < 1e-12);
    }

    #[test]
    fn cw_fit_rejects_raw_histograms() {
        let sp = SplitterParams::new(0.5, 0.5, 0.5, 0.5, 0.5).unwrap();
        let raw = CorrelationHistogram::new(-4_000, 100, vec![10; 81]).unwrap();
        let (orth, _) = cw_pair(&sp, 4_000.0, 0.0, 1_000.0, 0.9, 400.0);
        assert!(matches!(
            fit_hom_cw(&raw, &orth, &sp, 4_000.0, Weighting::Uniform),
            Err(AnalysisError::WrongNormalization { .. })
        ));
    }

    fn pulsed_pair(
        delay_ps: f64,
        truth_orth: &[f64; 6],
        truth_par: &[f64; 8],
        max_tau: i64,
    ) -> (CorrelationHistogram, CorrelationHistogram) {
        let bw = 100i64;
        let n_bins = (2 * max_tau / bw + 1) as usize;
        let orth_model = HomPulsedOrthogonal::new(delay_ps);
        let par_model = HomPulsedParallel::new(delay_ps);
        let make = |f: &dyn Fn(f64) -> f64| {
            let counts: Vec<u64> = (0..n_bins)
                .map(|k| {
                    let d = (-max_tau + k as i64 * bw) as f64;
                    f(d).round().max(0.0) as u64
                })
                .collect();
            CorrelationHistogram::new(-max_tau, bw, counts).unwrap()
        };
        (
            make(&|d| orth_model.value(&[d], truth_orth)),
            make(&|d| par_model.value(&[d], truth_par)),
        )
    }

    #[test]
    fn pulsed_fit_recovers_synthetic_cluster() {
        let delay = 4_000.0;
        let rep_period = 25_000i64;
        let truth_orth = [10_000.0, 10_000.0, 10_000.0, 5_000.0, 5_000.0, 1_000.0];
        let truth_par = [
            10_000.0, 10_000.0, 10_000.0, 5_000.0, 5_000.0, 1_000.0, 8_000.0, 400.0,
        ];
        let (orth, par) = pulsed_pair(delay, &truth_orth, &truth_par, 13_000);
        let out =
            fit_hom_pulsed(&orth, &par, delay, rep_period, Weighting::Uniform).unwrap();
        assert!(out.orthogonal_fit.converged && out.parallel_fit.converged);
        assert!((out.lifetime_ps - 1_000.0).abs() < 5.0);
        // truth: 1 - 2 (a0 tau1 - a_dip tau_c) / ((a+ + a-) tau1)
        let expected_raw = 1.0 - 2.0 * (10_000.0 * 1_000.0 - 8_000.0 * 400.0)
            / (20_000.0 * 1_000.0);
        assert!(
            (out.v_raw - expected_raw).abs() < 5e-3,
            "v_raw = {} vs {}",
            out.v_raw,
            expected_raw
        );
        assert!(out.v_raw_orthogonal.abs() < 5e-3);
        assert!(!out.degenerate_dip);
        assert_eq!(out.fit_half_span_ps, 12_000);

        let undipped = HomPulsedOrthogonal::new(delay).value(&[0.0], &truth_orth);
        let expected_post = FRAC_2_PI * 8_000.0 / undipped;
        assert!(
            (out.v_post - expected_post).abs() < 5e-3,
            "v_post = {} vs {}",
            out.v_post,
            expected_post
        );
    }

    #[test]
    fn pulsed_fit_flags_missing_dip_as_degenerate() {
        let delay = 4_000.0;
        let truth_orth = [10_000.0, 10_000.0, 10_000.0, 5_000.0, 5_000.0, 1_000.0];
        let truth_par = [
            10_000.0, 10_000.0, 10_000.0, 5_000.0, 5_000.0, 1_000.0, 0.0, 400.0,
        ];
        let (orth, par) = pulsed_pair(delay, &truth_orth, &truth_par, 13_000);
        let out = fit_hom_pulsed(&orth, &par, delay, 25_000, Weighting::Poisson).unwrap();
        assert!(out.degenerate_dip);
        assert!(out.v_raw.abs() < 0.02, "v_raw = {}", out.v_raw);
    }

    #[test]
    fn pulsed_fit_rejects_cramped_repetition_period() {
        let delay = 4_000.0;
        let truth_orth = [10_000.0, 10_000.0, 10_000.0, 5_000.0, 5_000.0, 1_000.0];
        let truth_par = [
            10_000.0, 10_000.0, 10_000.0, 5_000.0, 5_000.0, 1_000.0, 8_000.0, 400.0,
        ];
        let (orth, par) = pulsed_pair(delay, &truth_orth, &truth_par, 13_000);
        let err = fit_hom_pulsed(&orth, &par, delay, 16_200, Weighting::Uniform).unwrap_err();
        assert!(matches!(err, AnalysisError::InvalidInput(_)), "{err}");
    }

    #[test]
    fn pulsed_fit_rejects_narrow_histograms_and_normalized_input() {
        let delay = 4_000.0;
        let truth_orth = [10_000.0, 10_000.0, 10_000.0, 5_000.0, 5_000.0, 1_000.0];
        let truth_par = [
            10_000.0, 10_000.0, 10_000.0, 5_000.0, 5_000.0, 1_000.0, 8_000.0, 400.0,
        ];
        let (orth, par) = pulsed_pair(delay, &truth_orth, &truth_par, 9_000);
        // window needs +/-12000 ps but the histograms stop at 9000
        assert!(matches!(
            fit_hom_pulsed(&orth, &par, delay, 25_000, Weighting::Uniform),
            Err(AnalysisError::InvalidInput(_))
        ));

        let (orth, par) = pulsed_pair(delay, &truth_orth, &truth_par, 13_000);
        let normalized = orth
            .clone()
            .with_normalized(vec![1.0; orth.n_bins()], Normalization::PulsedSidepeak)
            .unwrap();
        assert!(matches!(
            fit_hom_pulsed(&normalized, &par, delay, 25_000, Weighting::Uniform),
            Err(AnalysisError::WrongNormalization { .. })
        ));
    }
}
