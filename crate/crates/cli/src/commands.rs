//! Subcommand implementations. Each handler reads its declared inputs,
//! runs the corresponding library call, writes one result artifact with
//! provenance headers, and prints a one-line summary to stdout.

use std::path::{Path, PathBuf};

use photonlab::analyses::models::{
    AntibunchingCw, FitModel, HomCwOrthogonal, HomCwParallel, LifetimeExp,
};
use photonlab::analyses;
use photonlab::correlator;
use photonlab::io;
use photonlab::localizer::{self, Roi};
use photonlab::simkit;
use photonlab::types::{ClMapData, CorrelationHistogram, SplitterParams};

use crate::output::{bare, fit_rows, flag, row, write_result, write_table, Provenance};
use crate::{CliError, Command, NormalizeArg, ReportKind, WeightingArg};

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate { config, out, meta, text } => simulate(&config, &out, meta, text),
        Command::Correlate {
            tags,
            out,
            ch_a,
            ch_b,
            bin_width_ps,
            max_tau_ps,
            normalize,
            rep_period_ps,
            n_side_peaks,
            half_window_ps,
        } => correlate(
            &tags,
            &out,
            ch_a,
            ch_b,
            bin_width_ps,
            max_tau_ps,
            normalize,
            rep_period_ps,
            n_side_peaks,
            half_window_ps,
        ),
        Command::FitHbt {
            hist,
            out,
            pulsed,
            rep_period_ps,
            n_side_peaks,
            half_window_ps,
            weighting,
        } => fit_hbt(&hist, &out, pulsed, rep_period_ps, n_side_peaks, half_window_ps, weighting),
        Command::FitHom {
            orthogonal,
            parallel,
            out,
            delay_ps,
            rep_period_ps,
            weighting,
        } => fit_hom(&orthogonal, &parallel, &out, delay_ps, rep_period_ps, weighting),
        Command::FitHomCw {
            orthogonal,
            parallel,
            out,
            delay_ps,
            r1,
            t1,
            r2,
            t2,
            weighting,
        } => fit_hom_cw(&orthogonal, &parallel, &out, delay_ps, [r1, t1, r2, t2], weighting),
        Command::FitLifetime { trace, out, fit_start_ps, fit_end_ps, weighting } => {
            fit_lifetime(&trace, &out, fit_start_ps, fit_end_ps, weighting)
        }
        Command::FitDop { scan, out } => fit_dop(&scan, &out),
        Command::FitPowerlaw { data, out } => fit_powerlaw(&data, &out),
        Command::SplittingRatio { tags, out, ch_a, ch_b, windows } => {
            splitting_ratio(&tags, &out, ch_a, ch_b, windows)
        }
        Command::Localize {
            map,
            out,
            window_center_nm,
            window_half_width_nm,
            roi,
        } => localize(&map, &out, window_center_nm, window_half_width_nm, roi),
        Command::AlignEval { records, out, fit_transform } => {
            align_eval(&records, &out, fit_transform)
        }
        Command::Report { kind } => report(kind),
    }
}

fn finish_fit(out: &Path, converged: bool) -> Result<(), CliError> {
    if converged {
        Ok(())
    } else {
        Err(CliError::FitNotConverged { out: out.to_path_buf() })
    }
}

fn simulate(
    config_path: &Path,
    out: &Path,
    meta: Option<PathBuf>,
    text: bool,
) -> Result<(), CliError> {
    let mut prov = Provenance::new("simulate");
    prov.input("config", config_path)?;
    let config = io::read_sim_config(config_path)?;
    prov.seed(config.seed);

    let (stream, report) = simkit::simulate_with_report(&config)?;
    if text {
        io::write_time_tags_csv(out, &stream)?;
    } else {
        io::write_time_tags(out, &stream)?;
    }

    let meta_path = meta.unwrap_or_else(|| {
        let mut name = out.as_os_str().to_owned();
        name.push(".meta");
        PathBuf::from(name)
    });
    let mut rows = vec![
        bare("n_tags", stream.len() as f64),
        bare("duration_ps", stream.duration_ps() as f64),
        bare("emitted_photons", report.emitted_photons as f64),
        bare("background_photons", report.background_photons as f64),
        bare("detected_photons", report.detected_photons as f64),
        bare("clipped_tags", report.clipped_tags as f64),
        bare("dark_tags", report.dark_tags as f64),
        bare("dead_time_removed", report.dead_time_removed as f64),
    ];
    for &ch in stream.channel_ids() {
        rows.push(bare(format!("rate_ch{ch}_hz"), stream.channel_rate_hz(ch)));
    }
    write_result(&meta_path, &prov, &rows)?;
    println!("wrote {} tags to {}", stream.len(), out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn correlate(
    tags: &Path,
    out: &Path,
    ch_a: u8,
    ch_b: u8,
    bin_width_ps: i64,
    max_tau_ps: i64,
    normalize: NormalizeArg,
    rep_period_ps: Option<i64>,
    n_side_peaks: usize,
    half_window_ps: Option<i64>,
) -> Result<(), CliError> {
    let mut prov = Provenance::new("correlate");
    prov.input("tags", tags)?;
    prov.param("ch_a", ch_a);
    prov.param("ch_b", ch_b);
    prov.param("bin_width_ps", bin_width_ps);
    prov.param("max_tau_ps", max_tau_ps);
    prov.param("normalize", normalize.as_str());

    let stream = io::read_time_tags_auto(tags)?;
    let hist = correlator::cross_correlate(&stream, ch_a, ch_b, bin_width_ps, max_tau_ps)?;
    let hist = match normalize {
        NormalizeArg::None => hist,
        NormalizeArg::Cw => {
            let duration_s = stream.duration_ps() as f64 * 1e-12;
            correlator::normalize_cw(
                &hist,
                stream.channel_rate_hz(ch_a),
                stream.channel_rate_hz(ch_b),
                duration_s,
            )?
        }
        NormalizeArg::Pulsed => {
            let period = rep_period_ps.ok_or_else(|| {
                CliError::Usage("--normalize pulsed needs --rep-period-ps".into())
            })?;
            let half_window = half_window_ps.unwrap_or(period / 4);
            prov.param("rep_period_ps", period);
            prov.param("n_side_peaks", n_side_peaks);
            prov.param("half_window_ps", half_window);
            let mut positions = Vec::with_capacity(2 * n_side_peaks);
            for k in 1..=n_side_peaks as i64 {
                positions.push(-k * period);
                positions.push(k * period);
            }
            positions.sort_unstable();
            correlator::normalize_pulsed(&hist, &positions, half_window)?
        }
    };
    io::write_histogram_annotated(out, &hist, prov.headers())?;
    println!("wrote histogram ({} bins) to {}", hist.n_bins(), out.display());
    Ok(())
}

fn fit_hbt(
    hist_path: &Path,
    out: &Path,
    pulsed: bool,
    rep_period_ps: Option<i64>,
    n_side_peaks: usize,
    half_window_ps: Option<i64>,
    weighting: WeightingArg,
) -> Result<(), CliError> {
    let mut prov = Provenance::new("fit-hbt");
    prov.input("hist", hist_path)?;
    let hist = io::read_histogram(hist_path)?;

    if pulsed {
        let period = rep_period_ps
            .ok_or_else(|| CliError::Usage("--pulsed needs --rep-period-ps".into()))?;
        let half_window = half_window_ps.unwrap_or(period / 4);
        prov.param("rep_period_ps", period);
        prov.param("n_side_peaks", n_side_peaks);
        prov.param("half_window_ps", half_window);
        let res = analyses::hbt_pulsed_g2(&hist, period, n_side_peaks, half_window)?;
        let rows = vec![
            row("g2_zero", res.g2_zero, res.g2_zero_err),
            bare("center_area", res.center_area),
            bare("mean_side_area", res.mean_side_area),
            bare("n_side_peaks", res.n_side_peaks as f64),
        ];
        write_result(out, &prov, &rows)?;
        println!("g2(0) = {:.4} \u{00b1} {:.4}", res.g2_zero, res.g2_zero_err);
        Ok(())
    } else {
        prov.param("weighting", weighting.as_str());
        let res = analyses::fit_antibunching_cw(&hist, weighting.into())?;
        let mut rows = vec![
            row("g2_zero", res.g2_zero, res.g2_zero_err),
            row("lifetime_ps", res.lifetime_ps, res.lifetime_err_ps),
            flag("degenerate_lifetime", res.degenerate_lifetime),
        ];
        rows.extend(fit_rows("", &res.fit));
        write_result(out, &prov, &rows)?;
        println!(
            "g2(0) = {:.4} \u{00b1} {:.4}, lifetime = {:.1} \u{00b1} {:.1} ps",
            res.g2_zero, res.g2_zero_err, res.lifetime_ps, res.lifetime_err_ps
        );
        finish_fit(out, res.fit.converged)
    }
}

fn fit_hom(
    orthogonal: &Path,
    parallel: &Path,
    out: &Path,
    delay_ps: f64,
    rep_period_ps: i64,
    weighting: WeightingArg,
) -> Result<(), CliError> {
    let mut prov = Provenance::new("fit-hom");
    prov.input("orthogonal", orthogonal)?;
    prov.input("parallel", parallel)?;
    prov.param("delay_ps", delay_ps);
    prov.param("rep_period_ps", rep_period_ps);
    prov.param("weighting", weighting.as_str());

    let orth = io::read_histogram(orthogonal)?;
    let par = io::read_histogram(parallel)?;
    let res = analyses::fit_hom_pulsed(&orth, &par, delay_ps, rep_period_ps, weighting.into())?;
    let mut rows = vec![
        row("lifetime_ps", res.lifetime_ps, res.lifetime_err_ps),
        row("v_raw", res.v_raw, res.v_raw_err),
        row("v_raw_orthogonal", res.v_raw_orthogonal, res.v_raw_orthogonal_err),
        row("v_post", res.v_post, res.v_post_err),
        flag("degenerate_dip", res.degenerate_dip),
        bare("fit_half_span_ps", res.fit_half_span_ps as f64),
    ];
    rows.extend(fit_rows("orthogonal_", &res.orthogonal_fit));
    rows.extend(fit_rows("parallel_", &res.parallel_fit));
    write_result(out, &prov, &rows)?;
    println!(
        "V_raw = {:.3} \u{00b1} {:.3}, V_post = {:.3} \u{00b1} {:.3}",
        res.v_raw, res.v_raw_err, res.v_post, res.v_post_err
    );
    finish_fit(out, res.orthogonal_fit.converged && res.parallel_fit.converged)
}

fn fit_hom_cw(
    orthogonal: &Path,
    parallel: &Path,
    out: &Path,
    delay_ps: f64,
    rt: [f64; 4],
    weighting: WeightingArg,
) -> Result<(), CliError> {
    let mut prov = Provenance::new("fit-hom-cw");
    prov.input("orthogonal", orthogonal)?;
    prov.input("parallel", parallel)?;
    prov.param("delay_ps", delay_ps);
    prov.param("r1", rt[0]);
    prov.param("t1", rt[1]);
    prov.param("r2", rt[2]);
    prov.param("t2", rt[3]);
    prov.param("weighting", weighting.as_str());

    let splitters = SplitterParams::new(rt[0], rt[1], rt[2], rt[3], 0.5)?;
    let orth = io::read_histogram(orthogonal)?;
    let par = io::read_histogram(parallel)?;
    let res = analyses::fit_hom_cw(&orth, &par, &splitters, delay_ps, weighting.into())?;
    let mut rows = vec![
        row("g2_zero", res.g2_zero, res.g2_zero_err),
        row("lifetime_ps", res.lifetime_ps, res.lifetime_err_ps),
        row("visibility", res.visibility, res.visibility_err),
        row("coherence_ps", res.coherence_ps, res.coherence_err_ps),
        row("v_post", res.v_post, res.v_post_err),
        row("v_post_measured", res.v_post_measured, res.v_post_measured_err),
    ];
    rows.extend(fit_rows("orthogonal_", &res.orthogonal_fit));
    rows.extend(fit_rows("parallel_", &res.parallel_fit));
    write_result(out, &prov, &rows)?;
    println!(
        "V = {:.3} \u{00b1} {:.3}, V_post = {:.3} \u{00b1} {:.3}",
        res.visibility, res.visibility_err, res.v_post, res.v_post_err
    );
    finish_fit(out, res.orthogonal_fit.converged && res.parallel_fit.converged)
}

fn fit_lifetime(
    trace_path: &Path,
    out: &Path,
    fit_start_ps: Option<i64>,
    fit_end_ps: Option<i64>,
    weighting: WeightingArg,
) -> Result<(), CliError> {
    let mut prov = Provenance::new("fit-lifetime");
    prov.input("trace", trace_path)?;
    prov.param("weighting", weighting.as_str());

    let trace = io::read_histogram(trace_path)?;
    let res = analyses::fit_lifetime(&trace, fit_start_ps, fit_end_ps, weighting.into())?;
    let mut rows = vec![
        row("lifetime_ps", res.lifetime_ps, res.lifetime_err_ps),
        bare("amplitude", res.amplitude),
        bare("baseline", res.baseline),
        bare("fit_start_ps", res.fit_start_ps as f64),
        bare("fit_end_ps", res.fit_end_ps as f64),
    ];
    rows.extend(fit_rows("", &res.fit));
    write_result(out, &prov, &rows)?;
    println!(
        "lifetime = {:.1} \u{00b1} {:.1} ps",
        res.lifetime_ps, res.lifetime_err_ps
    );
    finish_fit(out, res.fit.converged)
}

fn fit_dop(scan_path: &Path, out: &Path) -> Result<(), CliError> {
    let mut prov = Provenance::new("fit-dop");
    prov.input("scan", scan_path)?;

    let scan = io::read_xy(scan_path)?;
    if scan.x_unit != "deg" {
        return Err(CliError::Input {
            kind: "unit-mismatch",
            message: format!(
                "scan x unit is '{}', fit-dop expects analyzer angles in 'deg'",
                scan.x_unit
            ),
        });
    }
    let (angles, intensities): (Vec<f64>, Vec<f64>) = scan.points.iter().copied().unzip();
    let res = analyses::fit_dop(&angles, &intensities)?;
    let mut rows = vec![
        row("dop", res.dop, res.dop_err),
        row("axis_deg", res.axis_deg, res.axis_err_deg),
        flag("degenerate_angle", res.degenerate_angle),
    ];
    rows.extend(fit_rows("", &res.fit));
    write_result(out, &prov, &rows)?;
    println!(
        "DOP = {:.3} \u{00b1} {:.3}, axis = {:.1}\u{00b0}",
        res.dop, res.dop_err, res.axis_deg
    );
    finish_fit(out, res.fit.converged)
}

fn fit_powerlaw(data_path: &Path, out: &Path) -> Result<(), CliError> {
    let mut prov = Provenance::new("fit-powerlaw");
    prov.input("data", data_path)?;

    let data = io::read_xy(data_path)?;
    prov.param("x_unit", &data.x_unit);
    prov.param("y_unit", &data.y_unit);
    let (x, y): (Vec<f64>, Vec<f64>) = data.points.iter().copied().unzip();
    let fit = analyses::fit_powerlaw(&x, &y)?;
    let exponent = fit.value("exponent").expect("model parameter");
    let exponent_err = fit.std_error("exponent").expect("model parameter");
    let mut rows = vec![
        row("exponent", exponent, exponent_err),
        row(
            "log_amplitude",
            fit.value("log_amplitude").expect("model parameter"),
            fit.std_error("log_amplitude").expect("model parameter"),
        ),
    ];
    rows.extend(fit_rows("", &fit));
    write_result(out, &prov, &rows)?;
    println!("exponent = {:.3} \u{00b1} {:.3}", exponent, exponent_err);
    finish_fit(out, fit.converged)
}

fn splitting_ratio(
    tags: &Path,
    out: &Path,
    ch_a: u8,
    ch_b: u8,
    windows: usize,
) -> Result<(), CliError> {
    let mut prov = Provenance::new("splitting-ratio");
    prov.input("tags", tags)?;
    prov.param("ch_a", ch_a);
    prov.param("ch_b", ch_b);
    prov.param("windows", windows);

    let stream = io::read_time_tags_auto(tags)?;
    let res = analyses::splitting_ratio(&stream, ch_a, ch_b, windows)?;
    let rows = vec![
        row("ratio", res.ratio, res.ratio_err),
        bare("counts_a", res.counts_a as f64),
        bare("counts_b", res.counts_b as f64),
        bare("windows_used", res.windows_used as f64),
    ];
    write_result(out, &prov, &rows)?;
    println!(
        "ratio = {:.4} \u{00b1} {:.4} ({} vs {} counts)",
        res.ratio, res.ratio_err, res.counts_a, res.counts_b
    );
    Ok(())
}

fn localize(
    map_path: &Path,
    out: &Path,
    window_center_nm: Option<f64>,
    window_half_width_nm: Option<f64>,
    roi: Option<Roi>,
) -> Result<(), CliError> {
    let mut prov = Provenance::new("localize");
    prov.input("map", map_path)?;

    let map = io::read_clmap_auto(map_path)?;
    let map = match (window_center_nm, window_half_width_nm) {
        (Some(center), Some(half_width)) => {
            prov.param("window_center_nm", center);
            prov.param("window_half_width_nm", half_width);
            localizer::integrate_spectral_window(&map, center, half_width)?
        }
        (None, None) => {
            if matches!(map.data(), ClMapData::Hyperspectral { .. }) {
                return Err(CliError::Usage(
                    "hyperspectral map: pass --window-center-nm and --window-half-width-nm \
                     to select the emission line"
                        .into(),
                ));
            }
            map
        }
        _ => {
            return Err(CliError::Usage(
                "--window-center-nm and --window-half-width-nm go together".into(),
            ))
        }
    };
    let roi = roi.unwrap_or_else(|| Roi::full(&map));
    prov.param("roi", format!("{},{},{},{}", roi.x, roi.y, roi.width, roi.height));
    let spot = localizer::fit_gaussian_2d(&map, roi)?;
    let mut rows = vec![
        row("x0_nm", spot.x0_nm, spot.x0_err_nm),
        row("y0_nm", spot.y0_nm, spot.y0_err_nm),
        row("sigma_x_nm", spot.sigma_x_nm, spot.sigma_x_err_nm),
        row("sigma_y_nm", spot.sigma_y_nm, spot.sigma_y_err_nm),
        row("amplitude", spot.amplitude, spot.amplitude_err),
        row("baseline", spot.baseline, spot.baseline_err),
        flag("at_edge", spot.at_edge),
    ];
    rows.extend(fit_rows("", &spot.fit));
    write_result(out, &prov, &rows)?;
    println!(
        "center = ({:.1} \u{00b1} {:.1}, {:.1} \u{00b1} {:.1}) nm",
        spot.x0_nm, spot.x0_err_nm, spot.y0_nm, spot.y0_err_nm
    );
    Ok(())
}

fn align_eval(records_path: &Path, out: &Path, fit_transform: bool) -> Result<(), CliError> {
    let mut prov = Provenance::new("align-eval");
    prov.input("records", records_path)?;

    let records = io::read_alignment_records(records_path)?;
    let stats = localizer::alignment_stats(&records)?;
    let mut rows = vec![
        bare("n_records", stats.n_records as f64),
        bare("mean_abs_dx_nm", stats.mean_abs_dx_nm),
        bare("mean_abs_dy_nm", stats.mean_abs_dy_nm),
        bare("std_dx_nm", stats.std_dx_nm),
        bare("std_dy_nm", stats.std_dy_nm),
        row("overall_nm", stats.overall_nm, stats.overall_err_nm),
    ];
    if fit_transform {
        let measured: Vec<(f64, f64)> = records.iter().map(|r| r.measured_nm).collect();
        let nominal: Vec<(f64, f64)> = records.iter().map(|r| r.target_nm).collect();
        let transform = localizer::compute_field_transform(&measured, &nominal)?;
        rows.extend([
            bare("matrix_xx", transform.matrix[0][0]),
            bare("matrix_xy", transform.matrix[0][1]),
            bare("matrix_yx", transform.matrix[1][0]),
            bare("matrix_yy", transform.matrix[1][1]),
            bare("translation_x_nm", transform.translation_nm.0),
            bare("translation_y_nm", transform.translation_nm.1),
            bare("determinant", transform.determinant()),
            bare("residual_rms_nm", transform.residual_rms_nm),
            bare("max_residual_nm", transform.max_residual_nm),
        ]);
    }
    write_result(out, &prov, &rows)?;
    println!(
        "overall placement offset = {:.1} \u{00b1} {:.1} nm over {} sites",
        stats.overall_nm, stats.overall_err_nm, stats.n_records
    );
    Ok(())
}

/// Sample positions for report tables: bin centers, subdivided
/// `oversample` times. Returns `(delay_ps, bin index when the position
/// is an original center)`.
fn sample_grid(hist: &CorrelationHistogram, oversample: usize) -> Vec<(f64, Option<usize>)> {
    let first = hist.first_center_ps() as f64;
    let step = hist.bin_width_ps() as f64 / oversample as f64;
    let last = (hist.n_bins() - 1) * oversample;
    (0..=last)
        .map(|k| {
            let bin = (k % oversample == 0).then_some(k / oversample);
            (first + k as f64 * step, bin)
        })
        .collect()
}

fn report(kind: ReportKind) -> Result<(), CliError> {
    match kind {
        ReportKind::HbtCw { hist, out, oversample, weighting } => {
            report_hbt_cw(&hist, &out, oversample.max(1), weighting)
        }
        ReportKind::Lifetime { trace, out, fit_start_ps, fit_end_ps, oversample, weighting } => {
            report_lifetime(&trace, &out, fit_start_ps, fit_end_ps, oversample.max(1), weighting)
        }
        ReportKind::HomCw {
            orthogonal,
            parallel,
            out,
            delay_ps,
            r1,
            t1,
            r2,
            t2,
            oversample,
            weighting,
        } => report_hom_cw(
            &orthogonal,
            &parallel,
            &out,
            delay_ps,
            [r1, t1, r2, t2],
            oversample.max(1),
            weighting,
        ),
    }
}

fn report_hbt_cw(
    hist_path: &Path,
    out: &Path,
    oversample: usize,
    weighting: WeightingArg,
) -> Result<(), CliError> {
    let mut prov = Provenance::new("report hbt-cw");
    prov.input("hist", hist_path)?;
    prov.param("oversample", oversample);
    prov.param("weighting", weighting.as_str());

    let hist = io::read_histogram(hist_path)?;
    let res = analyses::fit_antibunching_cw(&hist, weighting.into())?;
    let normalized = hist.normalized().expect("cw fit requires normalized input");
    let model = AntibunchingCw;
    let rows: Vec<Vec<f64>> = sample_grid(&hist, oversample)
        .into_iter()
        .map(|(t, bin)| {
            let measured = bin.map_or(f64::NAN, |i| normalized[i]);
            vec![t, measured, model.value(&[t], &res.fit.values)]
        })
        .collect();
    write_table(out, &prov, "ps", &["tau_ps", "measured", "fitted"], &rows)?;
    println!("wrote table ({} rows) to {}", rows.len(), out.display());
    finish_fit(out, res.fit.converged)
}

fn report_lifetime(
    trace_path: &Path,
    out: &Path,
    fit_start_ps: Option<i64>,
    fit_end_ps: Option<i64>,
    oversample: usize,
    weighting: WeightingArg,
) -> Result<(), CliError> {
    let mut prov = Provenance::new("report lifetime");
    prov.input("trace", trace_path)?;
    prov.param("oversample", oversample);
    prov.param("weighting", weighting.as_str());

    let trace = io::read_histogram(trace_path)?;
    let res = analyses::fit_lifetime(&trace, fit_start_ps, fit_end_ps, weighting.into())?;
    let model = LifetimeExp;
    let counts = trace.counts();
    let (start, end) = (res.fit_start_ps as f64, res.fit_end_ps as f64);
    let rows: Vec<Vec<f64>> = sample_grid(&trace, oversample)
        .into_iter()
        .map(|(t, bin)| {
            let measured = bin.map_or(f64::NAN, |i| counts[i] as f64);
            let fitted = if (start..=end).contains(&t) {
                model.value(&[t - start], &res.fit.values)
            } else {
                f64::NAN
            };
            vec![t, measured, fitted]
        })
        .collect();
    write_table(out, &prov, "ps", &["time_ps", "measured", "fitted"], &rows)?;
    println!("wrote table ({} rows) to {}", rows.len(), out.display());
    finish_fit(out, res.fit.converged)
}

fn report_hom_cw(
    orthogonal: &Path,
    parallel: &Path,
    out: &Path,
    delay_ps: f64,
    rt: [f64; 4],
    oversample: usize,
    weighting: WeightingArg,
) -> Result<(), CliError> {
    let mut prov = Provenance::new("report hom-cw");
    prov.input("orthogonal", orthogonal)?;
    prov.input("parallel", parallel)?;
    prov.param("delay_ps", delay_ps);
    prov.param("r1", rt[0]);
    prov.param("t1", rt[1]);
    prov.param("r2", rt[2]);
    prov.param("t2", rt[3]);
    prov.param("oversample", oversample);
    prov.param("weighting", weighting.as_str());

    let splitters = SplitterParams::new(rt[0], rt[1], rt[2], rt[3], 0.5)?;
    let orth = io::read_histogram(orthogonal)?;
    let par = io::read_histogram(parallel)?;
    if orth.first_center_ps() != par.first_center_ps()
        || orth.bin_width_ps() != par.bin_width_ps()
        || orth.n_bins() != par.n_bins()
    {
        return Err(CliError::Input {
            kind: "invalid-input",
            message: "the two histograms must share their binning for a joint table".into(),
        });
    }
    let res = analyses::fit_hom_cw(&orth, &par, &splitters, delay_ps, weighting.into())?;
    let orth_values = orth.normalized().expect("cw fit requires normalized input");
    let par_values = par.normalized().expect("cw fit requires normalized input");
    let orth_model = HomCwOrthogonal::new(&splitters, delay_ps);
    let par_model = HomCwParallel::new(&splitters, delay_ps, res.g2_zero, res.lifetime_ps);
    let rows: Vec<Vec<f64>> = sample_grid(&orth, oversample)
        .into_iter()
        .map(|(t, bin)| {
            vec![
                t,
                bin.map_or(f64::NAN, |i| orth_values[i]),
                orth_model.value(&[t], &res.orthogonal_fit.values),
                bin.map_or(f64::NAN, |i| par_values[i]),
                par_model.value(&[t], &res.parallel_fit.values),
            ]
        })
        .collect();
    write_table(
        out,
        &prov,
        "ps",
        &[
            "tau_ps",
            "measured_orthogonal",
            "fitted_orthogonal",
            "measured_parallel",
            "fitted_parallel",
        ],
        &rows,
    )?;
    println!("wrote table ({} rows) to {}", rows.len(), out.display());
    finish_fit(out, res.orthogonal_fit.converged && res.parallel_fit.converged)
}
