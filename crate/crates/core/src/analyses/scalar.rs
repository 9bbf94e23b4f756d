//! Scalar figures of merit: decay lifetimes and their ratios, degree of
//! polarization, and power-law exponents of saturation curves.

use crate::fitcore::FitOptions;
use crate::types::{CorrelationHistogram, FitResult};

use super::models::{run_point_fit, DopCos2, LifetimeExp, PointFit};
use super::{bin_values, bin_weights, propagate_ratio, quadratic_form, AnalysisError, Weighting};

/// Exponential-decay fit of a time-resolved trace.
#[derive(Debug, Clone)]
pub struct LifetimeAnalysis {
    pub fit: FitResult,
    pub lifetime_ps: f64,
    pub lifetime_err_ps: f64,
    pub amplitude: f64,
    pub baseline: f64,
    /// Window actually used by the fit.
    pub fit_start_ps: i64,
    pub fit_end_ps: i64,
}

/// Fits `baseline + amplitude exp(-(t - t_start)/tau)` over a window of
/// the trace. The window defaults to the peak bin through the last bin;
/// override the edges to cut away an instrument-response foot or an
/// afterpulsing tail.
pub fn fit_lifetime(
    trace: &CorrelationHistogram,
    fit_start_ps: Option<i64>,
    fit_end_ps: Option<i64>,
    weighting: Weighting,
) -> Result<LifetimeAnalysis, AnalysisError> {
    let values = bin_values(trace);
    let weights = bin_weights(trace, weighting);
    let centers: Vec<i64> = trace.centers_ps().collect();

    let peak_bin = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .expect("histograms are non-empty");
    let start = fit_start_ps.unwrap_or(centers[peak_bin]);
    let end = fit_end_ps.unwrap_or(*centers.last().expect("non-empty"));
    if start >= end {
        return Err(AnalysisError::InvalidInput(format!(
            "fit window is empty: {start}..{end} ps"
        )));
    }

    let mut points = Vec::new();
    let mut window_values = Vec::new();
    let mut window_weights = weights.as_ref().map(|_| Vec::new());
    for (k, &c) in centers.iter().enumerate() {
        if c >= start && c <= end {
            points.push((c - start) as f64);
            window_values.push(values[k]);
            if let (Some(out), Some(w)) = (window_weights.as_mut(), weights.as_ref()) {
                out.push(w[k]);
            }
        }
    }
    if points.len() < 4 {
        return Err(AnalysisError::InvalidInput(format!(
            "fit window {start}..{end} ps holds {} bins; need at least 4",
            points.len()
        )));
    }

    let bw = trace.bin_width_ps() as f64;
    let span = points.last().copied().unwrap_or(bw);
    let mut sorted = window_values.clone();
    sorted.sort_by(f64::total_cmp);
    let decile = (sorted.len() / 10).max(1);
    let baseline_init = sorted[..decile].iter().sum::<f64>() / decile as f64;
    let amplitude_init = (window_values[0] - baseline_init).max(1e-9);
    let integral: f64 = window_values
        .iter()
        .map(|&y| (y - baseline_init).max(0.0) * bw)
        .sum();
    let tau_init = (integral / amplitude_init).clamp(bw * 0.1, span * 10.0);

    let fit = run_point_fit(
        PointFit {
            model: &LifetimeExp,
            points: &points,
            values: &window_values,
            weights: window_weights.as_deref(),
            initial: vec![baseline_init.max(0.0), amplitude_init, tau_init],
            lower: vec![0.0, 0.0, bw * 0.1],
            upper: vec![f64::INFINITY, f64::INFINITY, span * 100.0],
        },
        &FitOptions::default(),
    )?;

    Ok(LifetimeAnalysis {
        lifetime_ps: fit.values[2],
        lifetime_err_ps: fit.std_errors[2],
        amplitude: fit.values[1],
        baseline: fit.values[0],
        fit_start_ps: start,
        fit_end_ps: end,
        fit,
    })
}

/// Lifetime-shortening factor `tau_reference / tau_modified` with
/// propagated uncertainty. Each argument is `(lifetime, std_error)`.
pub fn purcell_ratio(
    reference: (f64, f64),
    modified: (f64, f64),
) -> Result<(f64, f64), AnalysisError> {
    if !(reference.0 > 0.0 && modified.0 > 0.0) {
        return Err(AnalysisError::InvalidInput(format!(
            "lifetimes must be positive, got {} and {}",
            reference.0, modified.0
        )));
    }
    propagate_ratio(reference, modified)
}

/// Polarization-scan fit.
#[derive(Debug, Clone)]
pub struct DopAnalysis {
    pub fit: FitResult,
    /// `amplitude / (amplitude + 2 offset)`: the fraction of polarized
    /// intensity.
    pub dop: f64,
    pub dop_err: f64,
    /// Polarization axis, wrapped into `[0, 180)` degrees.
    pub axis_deg: f64,
    pub axis_err_deg: f64,
    /// The modulation amplitude is indistinguishable from zero, so the
    /// axis is unconstrained.
    pub degenerate_angle: bool,
}

/// Fits `offset + amplitude cos^2(theta - theta0)` to an analyzer scan
/// and derives the degree of polarization.
pub fn fit_dop(angles_deg: &[f64], intensities: &[f64]) -> Result<DopAnalysis, AnalysisError> {
    if angles_deg.len() != intensities.len() {
        return Err(AnalysisError::InvalidInput(format!(
            "{} angles vs {} intensities",
            angles_deg.len(),
            intensities.len()
        )));
    }
    if angles_deg.len() < 4 {
        return Err(AnalysisError::InvalidInput(format!(
            "need at least 4 scan points, got {}",
            angles_deg.len()
        )));
    }
    if intensities.iter().any(|v| !v.is_finite()) || angles_deg.iter().any(|v| !v.is_finite()) {
        return Err(AnalysisError::InvalidInput(
            "scan contains non-finite values".into(),
        ));
    }

    let (mut max_i, mut min_v, mut max_v) = (0usize, f64::INFINITY, f64::NEG_INFINITY);
    for (i, &v) in intensities.iter().enumerate() {
        if v > max_v {
            max_v = v;
            max_i = i;
        }
        min_v = min_v.min(v);
    }
    let initial = vec![
        min_v.max(0.0),
        (max_v - min_v).max(1e-9),
        angles_deg[max_i],
    ];

    let fit = run_point_fit(
        PointFit {
            model: &DopCos2,
            points: angles_deg,
            values: intensities,
            weights: None,
            initial,
            lower: vec![0.0, 0.0, f64::NEG_INFINITY],
            upper: vec![f64::INFINITY, f64::INFINITY, f64::INFINITY],
        },
        &FitOptions::default(),
    )?;

    let offset = fit.values[0];
    let amplitude = fit.values[1];
    let total = amplitude + 2.0 * offset;
    if total <= 0.0 {
        return Err(AnalysisError::InvalidInput(
            "scan has no intensity; degree of polarization undefined".into(),
        ));
    }
    let dop = amplitude / total;
    let grad = [
        -2.0 * amplitude / (total * total),
        2.0 * offset / (total * total),
        0.0,
    ];
    let dop_err = quadratic_form(&grad, &fit.covariance).sqrt();
    let axis_deg = fit.values[2].rem_euclid(180.0);
    let degenerate_angle = amplitude < 2.0 * fit.std_errors[1];

    Ok(DopAnalysis {
        dop,
        dop_err,
        axis_deg,
        axis_err_deg: fit.std_errors[2],
        degenerate_angle,
        fit,
    })
}

/// Ordinary least squares on `ln y` vs `ln x`. Returns a fit result with
/// parameters `log_amplitude` and `exponent`; the closed form needs no
/// iterations, so `converged` is always true.
pub fn fit_powerlaw(x: &[f64], y: &[f64]) -> Result<FitResult, AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::InvalidInput(format!(
            "{} x values vs {} y values",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(AnalysisError::InvalidInput(format!(
            "need at least 3 points for a power-law fit, got {n}"
        )));
    }
    if x.iter().chain(y).any(|&v| !(v.is_finite() && v > 0.0)) {
        return Err(AnalysisError::InvalidInput(
            "power-law fits need strictly positive, finite data".into(),
        ));
    }

    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let nf = n as f64;
    let mx = lx.iter().sum::<f64>() / nf;
    let my = ly.iter().sum::<f64>() / nf;
    let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(AnalysisError::InvalidInput(
            "all x values are identical; slope undefined".into(),
        ));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;

    let ssr: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| (b - (intercept + slope * a)).powi(2))
        .sum();
    let s2 = ssr / (nf - 2.0);
    let var_slope = s2 / sxx;
    let var_intercept = s2 * (1.0 / nf + mx * mx / sxx);
    let cov = -s2 * mx / sxx;

    Ok(FitResult {
        parameter_names: vec!["log_amplitude".into(), "exponent".into()],
        values: vec![intercept, slope],
        std_errors: vec![var_intercept.sqrt(), var_slope.sqrt()],
        covariance: vec![var_intercept, cov, cov, var_slope],
        reduced_chi_sq: s2,
        converged: true,
        iterations: 0,
    })
}

/// Ratio of two power-law exponents with propagated uncertainty. Each
/// argument is `(slope, std_error)`.
pub fn slope_ratio(
    numerator: (f64, f64),
    denominator: (f64, f64),
) -> Result<(f64, f64), AnalysisError> {
    propagate_ratio(numerator, denominator)
}
