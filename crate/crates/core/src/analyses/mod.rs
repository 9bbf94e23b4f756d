//! Figure-of-merit extraction: model fits over correlation histograms,
//! decay traces, polarization scans and count ratios.

pub mod models;

mod correlation;
mod hom;
mod scalar;

pub use correlation::{
    fit_antibunching_cw, hbt_pulsed_g2, splitting_ratio, AntibunchingAnalysis, PulsedG2,
    SplittingRatio,
};
pub use hom::{fit_hom_cw, fit_hom_pulsed, HomCwAnalysis, HomPulsedAnalysis};
pub use scalar::{
    fit_dop, fit_lifetime, fit_powerlaw, purcell_ratio, slope_ratio, DopAnalysis,
    LifetimeAnalysis,
};

use thiserror::Error;

use crate::correlator::CorrelatorError;
use crate::fitcore::FitError;
use crate::types::CorrelationHistogram;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("invalid analysis input: {0}")]
    InvalidInput(String),
    #[error("histogram normalization mismatch: expected {expected}, found {found}")]
    WrongNormalization {
        expected: &'static str,
        found: &'static str,
    },
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Correlator(#[from] CorrelatorError),
}

/// Residual weighting for histogram fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// Every bin counts the same.
    #[default]
    Uniform,
    /// Inverse-deviation weights from Poisson counting statistics,
    /// `sigma_i = sqrt(max(counts_i, 1))` propagated through whatever
    /// normalization the histogram carries.
    Poisson,
}

/// Per-bin 1/sigma weights for a histogram fit, honoring the histogram's
/// normalization scale (normalized values are counts divided by a global
/// constant, so their deviation scales down by the same constant).
pub(crate) fn bin_weights(
    hist: &CorrelationHistogram,
    weighting: Weighting,
) -> Option<Vec<f64>> {
    match weighting {
        Weighting::Uniform => None,
        Weighting::Poisson => {
            let scale = match hist.normalized() {
                Some(values) => {
                    let total: f64 = values.iter().sum();
                    if total <= 0.0 {
                        return None;
                    }
                    hist.total_counts() as f64 / total
                }
                None => 1.0,
            };
            Some(
                hist.counts()
                    .iter()
                    .map(|&n| scale / (n.max(1) as f64).sqrt())
                    .collect(),
            )
        }
    }
}

/// Fit values per bin: normalized values when present, raw counts
/// otherwise.
pub(crate) fn bin_values(hist: &CorrelationHistogram) -> Vec<f64> {
    match hist.normalized() {
        Some(v) => v.to_vec(),
        None => hist.counts().iter().map(|&n| n as f64).collect(),
    }
}

/// Central-difference gradient of a scalar function, for propagating fit
/// covariance into derived quantities.
pub(crate) fn scalar_gradient(f: impl Fn(&[f64]) -> f64, params: &[f64]) -> Vec<f64> {
    let mut grad = vec![0.0; params.len()];
    let mut work = params.to_vec();
    for i in 0..params.len() {
        let h = 1e-6 * params[i].abs().max(1.0);
        work[i] = params[i] + h;
        let hi = f(&work);
        work[i] = params[i] - h;
        let lo = f(&work);
        work[i] = params[i];
        grad[i] = (hi - lo) / (2.0 * h);
    }
    grad
}

/// `g^T C g` with a row-major covariance.
pub(crate) fn quadratic_form(grad: &[f64], covariance: &[f64]) -> f64 {
    let p = grad.len();
    debug_assert_eq!(covariance.len(), p * p);
    let mut sum = 0.0;
    for i in 0..p {
        for j in 0..p {
            sum += grad[i] * covariance[i * p + j] * grad[j];
        }
    }
    sum.max(0.0)
}

/// First-order error propagation for `num / den`.
pub(crate) fn propagate_ratio(
    num: (f64, f64),
    den: (f64, f64),
) -> Result<(f64, f64), AnalysisError> {
    let (a, sa) = num;
    let (b, sb) = den;
    if b == 0.0 {
        return Err(AnalysisError::InvalidInput(
            "ratio denominator is zero".into(),
        ));
    }
    let r = a / b;
    let err = if a == 0.0 {
        (sa / b).abs()
    } else {
        r.abs() * ((sa / a).powi(2) + (sb / b).powi(2)).sqrt()
    };
    Ok((r, err))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_propagation_handles_edge_cases() {
        let (r, e) = propagate_ratio((2.0, 0.2), (4.0, 0.0)).unwrap();
        assert!((r - 0.5).abs() < 1e-15);
        assert!((e - 0.05).abs() < 1e-15);
        let (r, e) = propagate_ratio((0.0, 0.3), (3.0, 0.1)).unwrap();
        assert_eq!(r, 0.0);
        assert!((e - 0.1).abs() < 1e-15);
        assert!(propagate_ratio((1.0, 0.1), (0.0, 0.1)).is_err());
    }

    #[test]
    fn quadratic_form_matches_manual_expansion() {
        let g = [1.0, 2.0];
        let c = [0.5, 0.1, 0.1, 0.25];
        let got = quadratic_form(&g, &c);
        let want = 0.5 + 2.0 * 0.1 * 2.0 + 4.0 * 0.25;
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn scalar_gradient_matches_closed_form() {
        let f = |p: &[f64]| p[0] * p[0] * p[1];
        let g = scalar_gradient(f, &[3.0, 5.0]);
        assert!((g[0] - 30.0).abs() < 1e-5);
        assert!((g[1] - 9.0).abs() < 1e-6);
    }
}
