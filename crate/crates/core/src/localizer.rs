//! Scan-map metrology: spectral-window integration, sub-pixel emitter
//! localization, fiducial-marker detection, field-transform estimation
//! and alignment accuracy statistics.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::analyses::models::{run_point_fit, Gaussian2d, PointFit};
use crate::fitcore::{FitError, FitOptions};
use crate::types::{AlignmentRecord, ClMap, ClMapData, FitResult, ValidationError};

#[derive(Debug, Error)]
pub enum LocalizerError {
    #[error("map is not hyperspectral; there is no spectral axis to integrate")]
    NotHyperspectral,
    #[error("map is not scalar; integrate a spectral window first")]
    NotScalar,
    #[error("spectral window {min_nm}..{max_nm} nm reaches outside the axis {axis_min_nm}..{axis_max_nm} nm")]
    WindowOutOfRange {
        min_nm: f64,
        max_nm: f64,
        axis_min_nm: f64,
        axis_max_nm: f64,
    },
    #[error("region of interest {width}x{height} is too small; need at least 5x5 pixels")]
    RoiTooSmall { width: usize, height: usize },
    #[error("region of interest reaches outside the {width}x{height} map")]
    RoiOutOfBounds { width: usize, height: usize },
    #[error("spot fit failed: {0}")]
    FitFailed(String),
    #[error("marker {index} not found: {reason}")]
    MarkerNotFound { index: usize, reason: String },
    #[error("marker {index} is ambiguous: {candidates} candidate regions of comparable size")]
    AmbiguousMarker { index: usize, candidates: usize },
    #[error("point sets are degenerate: {0}")]
    DegenerateGeometry(String),
    #[error("alignment statistics need at least 2 records, got {0}")]
    TooFewRecords(usize),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

/// Pixel-coordinate rectangle: columns `x..x+width`, rows `y..y+height`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Roi {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Roi {
    pub fn new(x: usize, y: usize, width: usize, height: usize) -> Self {
        Roi { x, y, width, height }
    }

    /// The full extent of a map.
    pub fn full(map: &ClMap) -> Self {
        Roi { x: 0, y: 0, width: map.width(), height: map.height() }
    }
}

/// Sums each pixel's spectrum over `[center - half_width, center +
/// half_width]` nm. A window narrower than the sample spacing falls back
/// to the single sample nearest to `center`.
pub fn integrate_spectral_window(
    map: &ClMap,
    center_nm: f64,
    half_width_nm: f64,
) -> Result<ClMap, LocalizerError> {
    let ClMapData::Hyperspectral { wavelength_nm, values } = map.data() else {
        return Err(LocalizerError::NotHyperspectral);
    };
    if !(half_width_nm >= 0.0 && center_nm.is_finite() && half_width_nm.is_finite()) {
        return Err(LocalizerError::FitFailed(format!(
            "spectral window must be finite with non-negative half width, got {center_nm} +/- {half_width_nm} nm"
        )));
    }
    let axis_min = wavelength_nm[0];
    let axis_max = *wavelength_nm.last().expect("validated non-empty");
    let (lo, hi) = (center_nm - half_width_nm, center_nm + half_width_nm);
    if lo < axis_min || hi > axis_max {
        return Err(LocalizerError::WindowOutOfRange {
            min_nm: lo,
            max_nm: hi,
            axis_min_nm: axis_min,
            axis_max_nm: axis_max,
        });
    }

    let n_wl = wavelength_nm.len();
    let selected: Vec<usize> = (0..n_wl)
        .filter(|&iw| wavelength_nm[iw] >= lo && wavelength_nm[iw] <= hi)
        .collect();
    let selected = if selected.is_empty() {
        // nearest sample to the window center
        let nearest = (0..n_wl)
            .min_by(|&a, &b| {
                (wavelength_nm[a] - center_nm)
                    .abs()
                    .total_cmp(&(wavelength_nm[b] - center_nm).abs())
            })
            .expect("validated non-empty");
        vec![nearest]
    } else {
        selected
    };

    let n_pixels = map.width() * map.height();
    let mut integrated = Vec::with_capacity(n_pixels);
    for pixel in 0..n_pixels {
        let base = pixel * n_wl;
        integrated.push(selected.iter().map(|&iw| values[base + iw]).sum());
    }
    Ok(ClMap::new(
        map.width(),
        map.height(),
        map.pixel_pitch_nm(),
        map.origin_nm(),
        ClMapData::Scalar(integrated),
    )?)
}

/// Sub-pixel spot location from a 2-D Gaussian fit.
#[derive(Debug, Clone)]
pub struct GaussianSpot {
    pub x0_nm: f64,
    pub y0_nm: f64,
    pub x0_err_nm: f64,
    pub y0_err_nm: f64,
    pub sigma_x_nm: f64,
    pub sigma_y_nm: f64,
    pub sigma_x_err_nm: f64,
    pub sigma_y_err_nm: f64,
    pub amplitude: f64,
    pub amplitude_err: f64,
    pub baseline: f64,
    pub baseline_err: f64,
    /// Fitted center lies within one pixel of the region border; the
    /// location is unreliable and the region should be re-centered.
    pub at_edge: bool,
    pub fit: FitResult,
}

fn scalar_values(map: &ClMap) -> Result<&[f64], LocalizerError> {
    match map.data() {
        ClMapData::Scalar(values) => Ok(values),
        ClMapData::Hyperspectral { .. } => Err(LocalizerError::NotScalar),
    }
}

/// Fits `baseline + amplitude exp(-(x-x0)^2/2sx^2 - (y-y0)^2/2sy^2)` to
/// the region of interest of a scalar map. Coordinates are physical nm.
pub fn fit_gaussian_2d(map: &ClMap, roi: Roi) -> Result<GaussianSpot, LocalizerError> {
    let values = scalar_values(map)?;
    if roi.width < 5 || roi.height < 5 {
        return Err(LocalizerError::RoiTooSmall { width: roi.width, height: roi.height });
    }
    if roi.x + roi.width > map.width() || roi.y + roi.height > map.height() {
        return Err(LocalizerError::RoiOutOfBounds {
            width: map.width(),
            height: map.height(),
        });
    }

    let pitch = map.pixel_pitch_nm();
    let mut points = Vec::with_capacity(roi.width * roi.height * 2);
    let mut roi_values = Vec::with_capacity(roi.width * roi.height);
    for iy in roi.y..roi.y + roi.height {
        for ix in roi.x..roi.x + roi.width {
            let (x, y) = map.pixel_center_nm(ix, iy);
            points.push(x);
            points.push(y);
            roi_values.push(values[iy * map.width() + ix]);
        }
    }

    let min_v = roi_values.iter().copied().fold(f64::INFINITY, f64::min);
    let max_v = roi_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max_v - min_v <= 0.0 {
        return Err(LocalizerError::FitFailed(
            "region is uniform; no peak to localize".into(),
        ));
    }

    // moment estimates above the baseline seed the fit
    let mut w_sum = 0.0;
    let (mut mx, mut my) = (0.0, 0.0);
    for (k, &v) in roi_values.iter().enumerate() {
        let w = (v - min_v).max(0.0);
        mx += w * points[2 * k];
        my += w * points[2 * k + 1];
        w_sum += w;
    }
    let (cx, cy) = (mx / w_sum, my / w_sum);
    let (mut vx, mut vy) = (0.0, 0.0);
    for (k, &v) in roi_values.iter().enumerate() {
        let w = (v - min_v).max(0.0);
        vx += w * (points[2 * k] - cx).powi(2);
        vy += w * (points[2 * k + 1] - cy).powi(2);
    }
    let sigma_floor = pitch * 0.25;
    let sx = (vx / w_sum).sqrt().max(sigma_floor);
    let sy = (vy / w_sum).sqrt().max(sigma_floor);

    let (x_first, y_first) = map.pixel_center_nm(roi.x, roi.y);
    let (x_last, y_last) = map.pixel_center_nm(roi.x + roi.width - 1, roi.y + roi.height - 1);
    let fit = run_point_fit(
        PointFit {
            model: &Gaussian2d,
            points: &points,
            values: &roi_values,
            weights: None,
            initial: vec![max_v - min_v, cx, cy, sx, sy, min_v],
            lower: vec![
                1e-12,
                x_first - pitch,
                y_first - pitch,
                pitch * 0.1,
                pitch * 0.1,
                f64::NEG_INFINITY,
            ],
            upper: vec![
                f64::INFINITY,
                x_last + pitch,
                y_last + pitch,
                pitch * roi.width as f64 * 2.0,
                pitch * roi.height as f64 * 2.0,
                f64::INFINITY,
            ],
        },
        &FitOptions::default(),
    )?;
    if !fit.converged {
        return Err(LocalizerError::FitFailed(format!(
            "no convergence after {} iterations",
            fit.iterations
        )));
    }

    let x0 = fit.values[1];
    let y0 = fit.values[2];
    let at_edge = x0 < x_first + pitch
        || x0 > x_last - pitch
        || y0 < y_first + pitch
        || y0 > y_last - pitch;

    Ok(GaussianSpot {
        x0_nm: x0,
        y0_nm: y0,
        x0_err_nm: fit.std_errors[1],
        y0_err_nm: fit.std_errors[2],
        sigma_x_nm: fit.values[3],
        sigma_y_nm: fit.values[4],
        sigma_x_err_nm: fit.std_errors[3],
        sigma_y_err_nm: fit.std_errors[4],
        amplitude: fit.values[0],
        amplitude_err: fit.std_errors[0],
        baseline: fit.values[5],
        baseline_err: fit.std_errors[5],
        at_edge,
        fit,
    })
}

/// Otsu's threshold: the intensity split maximizing between-class
/// variance of a bimodal sample.
fn otsu_threshold(values: &[f64], min_v: f64, max_v: f64) -> f64 {
    const BINS: usize = 256;
    let scale = (BINS as f64 - 1.0) / (max_v - min_v);
    let mut hist = [0usize; BINS];
    for &v in values {
        let k = (((v - min_v) * scale) as usize).min(BINS - 1);
        hist[k] += 1;
    }
    let total = values.len() as f64;
    let total_mean: f64 = hist
        .iter()
        .enumerate()
        .map(|(k, &n)| k as f64 * n as f64)
        .sum::<f64>()
        / total;

    let mut best_k = BINS / 2;
    let mut best_var = -1.0;
    let mut w0 = 0.0;
    let mut sum0 = 0.0;
    for k in 0..BINS - 1 {
        w0 += hist[k] as f64;
        sum0 += k as f64 * hist[k] as f64;
        if w0 == 0.0 || w0 == total {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (total_mean * total - sum0) / (total - w0);
        let var = w0 * (total - w0) * (m0 - m1).powi(2);
        if var > best_var {
            best_var = var;
            best_k = k;
        }
    }
    min_v + (best_k as f64 + 0.5) / scale
}

/// Connected components (4-neighborhood) of the masked pixels inside a
/// window; pixels are indexed into the window's local grid.
fn connected_components(mask: &[bool], w: usize, h: usize) -> Vec<Vec<usize>> {
    let mut seen = vec![false; mask.len()];
    let mut components = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        let mut stack = vec![start];
        let mut component = Vec::new();
        seen[start] = true;
        while let Some(idx) = stack.pop() {
            component.push(idx);
            let (ix, iy) = (idx % w, idx / w);
            let mut push = |jx: usize, jy: usize| {
                let j = jy * w + jx;
                if mask[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if ix > 0 {
                push(ix - 1, iy);
            }
            if ix + 1 < w {
                push(ix + 1, iy);
            }
            if iy > 0 {
                push(ix, iy - 1);
            }
            if iy + 1 < h {
                push(ix, iy + 1);
            }
        }
        components.push(component);
    }
    components
}

/// Locates fiducial markers near their nominal positions and returns the
/// measured centers in nm, in the same order as `nominal_nm`.
///
/// Each marker is searched in a window of `2 x marker_size_nm` half-width
/// around its nominal center, split from the background by an Otsu
/// threshold, and located by the intensity-excess centroid of the largest
/// connected pixel region. `dark_markers` selects whether markers are
/// darker or brighter than the field.
pub fn detect_markers(
    map: &ClMap,
    nominal_nm: &[(f64, f64)],
    marker_size_nm: f64,
    dark_markers: bool,
) -> Result<Vec<(f64, f64)>, LocalizerError> {
    let values = scalar_values(map)?;
    if !(marker_size_nm.is_finite() && marker_size_nm > 0.0) {
        return Err(LocalizerError::DegenerateGeometry(format!(
            "marker size must be positive, got {marker_size_nm} nm"
        )));
    }
    let pitch = map.pixel_pitch_nm();
    let (ox, oy) = map.origin_nm();
    let search_half_px = (marker_size_nm / pitch).ceil() as i64;
    // a real marker should fill a good part of its nominal footprint
    let marker_px = (marker_size_nm / pitch).max(1.0);
    let min_count = ((marker_px * marker_px) * 0.25).ceil().max(2.0) as usize;

    let mut centers = Vec::with_capacity(nominal_nm.len());
    for (index, &(nx, ny)) in nominal_nm.iter().enumerate() {
        let cx = ((nx - ox) / pitch).round() as i64;
        let cy = ((ny - oy) / pitch).round() as i64;
        let x_lo = (cx - search_half_px).max(0) as usize;
        let y_lo = (cy - search_half_px).max(0) as usize;
        let x_hi = ((cx + search_half_px) as usize).min(map.width() - 1);
        let y_hi = ((cy + search_half_px) as usize).min(map.height() - 1);
        if x_lo > x_hi || y_lo > y_hi || cx < -search_half_px || cy < -search_half_px {
            return Err(LocalizerError::MarkerNotFound {
                index,
                reason: "search window lies outside the map".into(),
            });
        }
        let (w, h) = (x_hi - x_lo + 1, y_hi - y_lo + 1);

        let mut window = Vec::with_capacity(w * h);
        for iy in y_lo..=y_hi {
            for ix in x_lo..=x_hi {
                window.push(values[iy * map.width() + ix]);
            }
        }
        let min_v = window.iter().copied().fold(f64::INFINITY, f64::min);
        let max_v = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max_v - min_v <= 0.0 {
            return Err(LocalizerError::MarkerNotFound {
                index,
                reason: "window has no contrast".into(),
            });
        }
        let threshold = otsu_threshold(&window, min_v, max_v);
        let mask: Vec<bool> = window
            .iter()
            .map(|&v| if dark_markers { v < threshold } else { v > threshold })
            .collect();

        let mut components = connected_components(&mask, w, h);
        components.retain(|c| c.len() >= min_count);
        if components.is_empty() {
            return Err(LocalizerError::MarkerNotFound {
                index,
                reason: format!("no thresholded region reaches {min_count} pixels"),
            });
        }
        if components.len() > 1 {
            components.sort_by_key(|c| std::cmp::Reverse(c.len()));
            // a clear largest region wins; comparable regions are ambiguous
            if components[1].len() * 2 >= components[0].len() {
                return Err(LocalizerError::AmbiguousMarker {
                    index,
                    candidates: components.len(),
                });
            }
        }
        let region = &components[0];

        // centroid weighted by contrast beyond the threshold
        let mut w_sum = 0.0;
        let (mut sx, mut sy) = (0.0, 0.0);
        for &idx in region {
            let v = window[idx];
            let weight = if dark_markers { threshold - v } else { v - threshold };
            let weight = weight.max(0.0);
            let gx = (x_lo + idx % w) as f64;
            let gy = (y_lo + idx / w) as f64;
            sx += weight * gx;
            sy += weight * gy;
            w_sum += weight;
        }
        let (gx, gy) = if w_sum > 0.0 {
            (sx / w_sum, sy / w_sum)
        } else {
            let n = region.len() as f64;
            let gx = region.iter().map(|&i| (x_lo + i % w) as f64).sum::<f64>() / n;
            let gy = region.iter().map(|&i| (y_lo + i / w) as f64).sum::<f64>() / n;
            (gx, gy)
        };
        centers.push((ox + gx * pitch, oy + gy * pitch));
    }
    Ok(centers)
}

/// Affine map from measured coordinates to the corrected field frame:
/// `corrected = matrix * measured + translation`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTransform {
    /// Row-major 2x2 linear part (tilt, zoom, shear).
    pub matrix: [[f64; 2]; 2],
    pub translation_nm: (f64, f64),
    /// Root-mean-square residual of the fit, nm per point.
    pub residual_rms_nm: f64,
    pub max_residual_nm: f64,
}

impl FieldTransform {
    pub fn identity() -> Self {
        FieldTransform {
            matrix: [[1.0, 0.0], [0.0, 1.0]],
            translation_nm: (0.0, 0.0),
            residual_rms_nm: 0.0,
            max_residual_nm: 0.0,
        }
    }

    pub fn determinant(&self) -> f64 {
        self.matrix[0][0] * self.matrix[1][1] - self.matrix[0][1] * self.matrix[1][0]
    }

    pub fn apply(&self, point: (f64, f64)) -> (f64, f64) {
        (
            self.matrix[0][0] * point.0 + self.matrix[0][1] * point.1 + self.translation_nm.0,
            self.matrix[1][0] * point.0 + self.matrix[1][1] * point.1 + self.translation_nm.1,
        )
    }

    /// The inverse transform; residual fields carry over unchanged.
    pub fn inverse(&self) -> Result<FieldTransform, LocalizerError> {
        let det = self.determinant();
        if det.abs() < 1e-12 {
            return Err(LocalizerError::DegenerateGeometry(
                "transform is singular; no inverse".into(),
            ));
        }
        let [[a, b], [c, d]] = self.matrix;
        let inv = [[d / det, -b / det], [-c / det, a / det]];
        let (tx, ty) = self.translation_nm;
        Ok(FieldTransform {
            matrix: inv,
            translation_nm: (
                -(inv[0][0] * tx + inv[0][1] * ty),
                -(inv[1][0] * tx + inv[1][1] * ty),
            ),
            residual_rms_nm: self.residual_rms_nm,
            max_residual_nm: self.max_residual_nm,
        })
    }
}

/// Least-squares affine transform taking `measured` onto `nominal`.
/// Needs at least 3 non-collinear point pairs; 4 field-corner markers
/// over-determine the 6 parameters, and the reported residuals flag bad
/// marker detections.
pub fn compute_field_transform(
    measured: &[(f64, f64)],
    nominal: &[(f64, f64)],
) -> Result<FieldTransform, LocalizerError> {
    if measured.len() != nominal.len() {
        return Err(LocalizerError::DegenerateGeometry(format!(
            "{} measured vs {} nominal points",
            measured.len(),
            nominal.len()
        )));
    }
    if measured.len() < 3 {
        return Err(LocalizerError::DegenerateGeometry(format!(
            "need at least 3 point pairs, got {}",
            measured.len()
        )));
    }

    // normal equations of [x y 1] -> x' and [x y 1] -> y', sharing the
    // same 3x3 Gram matrix
    let mut gram = Matrix3::zeros();
    let mut rhs_x = Vector3::zeros();
    let mut rhs_y = Vector3::zeros();
    for (&(x, y), &(xn, yn)) in measured.iter().zip(nominal) {
        let row = Vector3::new(x, y, 1.0);
        gram += row * row.transpose();
        rhs_x += row * xn;
        rhs_y += row * yn;
    }
    let decomposition = gram.lu();
    let (Some(px), Some(py)) = (decomposition.solve(&rhs_x), decomposition.solve(&rhs_y)) else {
        return Err(LocalizerError::DegenerateGeometry(
            "point pairs are collinear; affine parameters are not identifiable".into(),
        ));
    };
    if !(px.iter().all(|v| v.is_finite()) && py.iter().all(|v| v.is_finite())) {
        return Err(LocalizerError::DegenerateGeometry(
            "point pairs are collinear; affine parameters are not identifiable".into(),
        ));
    }

    let mut transform = FieldTransform {
        matrix: [[px[0], px[1]], [py[0], py[1]]],
        translation_nm: (px[2], py[2]),
        residual_rms_nm: 0.0,
        max_residual_nm: 0.0,
    };
    let det = transform.determinant();
    if det <= 1e-12 {
        return Err(LocalizerError::DegenerateGeometry(format!(
            "fitted transform has non-positive determinant {det}; points are degenerate or reflected"
        )));
    }

    let mut sq_sum = 0.0;
    let mut max_r = 0.0f64;
    for (&m, &n) in measured.iter().zip(nominal) {
        let p = transform.apply(m);
        let r = ((p.0 - n.0).powi(2) + (p.1 - n.1).powi(2)).sqrt();
        sq_sum += r * r;
        max_r = max_r.max(r);
    }
    transform.residual_rms_nm = (sq_sum / measured.len() as f64).sqrt();
    transform.max_residual_nm = max_r;
    Ok(transform)
}

/// Applies a field transform to a set of points.
pub fn apply_transform(transform: &FieldTransform, points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    points.iter().map(|&p| transform.apply(p)).collect()
}

/// Placement-accuracy summary over a set of alignment records.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentStats {
    pub n_records: usize,
    /// Mean absolute offset per axis, nm.
    pub mean_abs_dx_nm: f64,
    pub mean_abs_dy_nm: f64,
    /// Sample standard deviation of the absolute offsets per axis.
    pub std_dx_nm: f64,
    pub std_dy_nm: f64,
    /// Root mean square of the two per-axis means.
    pub overall_nm: f64,
    /// Root mean square of the two per-axis deviations.
    pub overall_err_nm: f64,
}

/// Aggregates measured-vs-target offsets into per-axis and overall
/// accuracy numbers.
pub fn alignment_stats(records: &[AlignmentRecord]) -> Result<AlignmentStats, LocalizerError> {
    if records.len() < 2 {
        return Err(LocalizerError::TooFewRecords(records.len()));
    }
    let n = records.len() as f64;
    let abs_dx: Vec<f64> = records.iter().map(|r| r.offset_nm().0.abs()).collect();
    let abs_dy: Vec<f64> = records.iter().map(|r| r.offset_nm().1.abs()).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    let std = |v: &[f64], m: f64| {
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    let mx = mean(&abs_dx);
    let my = mean(&abs_dy);
    let sx = std(&abs_dx, mx);
    let sy = std(&abs_dy, my);
    Ok(AlignmentStats {
        n_records: records.len(),
        mean_abs_dx_nm: mx,
        mean_abs_dy_nm: my,
        std_dx_nm: sx,
        std_dy_nm: sy,
        overall_nm: ((mx * mx + my * my) / 2.0).sqrt(),
        overall_err_nm: ((sx * sx + sy * sy) / 2.0).sqrt(),
    })
}
