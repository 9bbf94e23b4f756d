use super::*;
use crate::correlator::{cross_correlate, cw_normalization_constant, normalize_cw, peak_areas};
use crate::types::{DetectorParams, EmitterParams, PulseTrain, SplitterParams};

fn emitter(p_m: f64, brightness: f64) -> EmitterParams {
    EmitterParams::new(1.0, 0.4, p_m, brightness, 930.0).unwrap()
}

fn cw_hbt_config(seed: u64) -> SimConfig {
    SimConfig {
        topology: Topology::Hbt,
        emitter: emitter(0.0, 2e5),
        splitters: SplitterParams::balanced(),
        detectors: vec![DetectorParams::ideal(), DetectorParams::ideal()],
        pulsing: None,
        polarization: None,
        mzi_delay_ns: None,
        source_visibility: 1.0,
        background_rate_hz: 0.0,
        duration_s: Some(2.0),
        seed,
    }
}

fn cw_hom_config(polarization: Polarization, seed: u64) -> SimConfig {
    SimConfig {
        topology: Topology::HomMzi,
        emitter: emitter(0.0, 4e5),
        splitters: SplitterParams::balanced(),
        detectors: vec![DetectorParams::ideal(), DetectorParams::ideal()],
        pulsing: None,
        polarization: Some(polarization),
        mzi_delay_ns: Some(4.0),
        source_visibility: 1.0,
        background_rate_hz: 0.0,
        duration_s: Some(30.0),
        seed,
    }
}

#[test]
fn same_seed_reproduces_streams_bit_for_bit() {
    let mut hom = cw_hom_config(Polarization::Parallel, 99);
    hom.duration_s = Some(0.5);
    for config in [cw_hbt_config(99), hom] {
        let (a, ra) = simulate_with_report(&config).unwrap();
        let (b, rb) = simulate_with_report(&config).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }
}

#[test]
fn different_seeds_differ() {
    let a = simulate(&cw_hbt_config(1)).unwrap();
    let b = simulate(&cw_hbt_config(2)).unwrap();
    assert_ne!(a, b);
}

#[test]
fn ideal_chain_accounts_for_every_photon() {
    let mut config = cw_hbt_config(7);
    config.topology = Topology::MmiHbt;
    config.background_rate_hz = 5_000.0;
    let (stream, report) = simulate_with_report(&config).unwrap();
    // Unit efficiency, no darks, no dead time: every generated photon is
    // either in the stream or was clipped at the record boundary.
    assert_eq!(report.detected_photons, report.emitted_photons + report.background_photons);
    assert_eq!(stream.len() as u64, report.detected_photons - report.clipped_tags);
    assert_eq!(report.dark_tags, 0);
    assert_eq!(report.dead_time_removed, 0);
    assert!(report.clipped_tags < 5);
}

#[test]
fn cw_brightness_is_calibrated() {
    let config = cw_hbt_config(13);
    let (stream, _) = simulate_with_report(&config).unwrap();
    let expected = 2e5_f64 * 2.0;
    let sigma = expected.sqrt();
    assert!(
        (stream.len() as f64 - expected).abs() < 5.0 * sigma,
        "got {} tags, expected {expected}",
        stream.len()
    );
}

#[test]
fn lossy_detectors_thin_the_stream() {
    let mut config = cw_hbt_config(29);
    config.detectors = vec![
        DetectorParams::new(0.0, 0.4, 0.0, 0.0).unwrap(),
        DetectorParams::new(0.0, 0.4, 0.0, 0.0).unwrap(),
    ];
    let (stream, report) = simulate_with_report(&config).unwrap();
    // Brightness counts detected photons, so the stream rate holds and the
    // source must have emitted ~1/0.4 times more.
    let expected = 2e5 * 2.0;
    assert!((stream.len() as f64 - expected).abs() < 5.0 * expected.sqrt());
    let emitted_expected = expected / 0.4;
    assert!(
        (report.emitted_photons as f64 - emitted_expected).abs()
            < 5.0 * emitted_expected.sqrt()
    );
}

#[test]
fn mmi_tap_routes_binomially() {
    let mut config = cw_hbt_config(31);
    config.topology = Topology::MmiHbt;
    config.splitters = SplitterParams::new(0.5, 0.5, 0.5, 0.5, 0.53).unwrap();
    let stream = simulate(&config).unwrap();
    let n0 = stream.channel_count(0) as f64;
    let n = stream.len() as f64;
    let sigma = (n * 0.53 * 0.47).sqrt();
    assert!((n0 - 0.53 * n).abs() < 5.0 * sigma, "n0/n = {}", n0 / n);
}

#[test]
fn pulsed_center_suppression_matches_multiphoton_math() {
    let p_m = 0.2;
    let config = SimConfig {
        topology: Topology::Hbt,
        emitter: emitter(p_m, 0.5),
        splitters: SplitterParams::balanced(),
        detectors: vec![DetectorParams::ideal(), DetectorParams::ideal()],
        pulsing: Some(PulseTrain::new(12.5, 4.0, 200_000).unwrap()),
        polarization: None,
        mzi_delay_ns: None,
        source_visibility: 1.0,
        background_rate_hz: 0.0,
        duration_s: None,
        seed: 17,
    };
    let stream = simulate(&config).unwrap();
    let hist = cross_correlate(&stream, 0, 1, 100, 40_000).unwrap();
    let period = 12_500;
    let center = peak_areas(&hist, &[0], 3_000).unwrap()[0].area;
    let sides = peak_areas(&hist, &[-2 * period, -period, period, 2 * period], 3_000).unwrap();
    let side_mean = sides.iter().map(|p| p.area).sum::<f64>() / sides.len() as f64;
    let ratio = center / side_mean;
    let expected = g2_for_multiphoton_prob(p_m);
    assert!(
        (ratio - expected).abs() < 0.02,
        "center/side = {ratio:.4}, expected {expected:.4}"
    );
}

/// Closed-form coincidence model for the delay interferometer fed by an
/// antibunched CW source, used to cross-check the Monte Carlo.
fn hom_cw_model(t_ps: f64, tau1_ps: f64, delay_ps: f64, sp: &SplitterParams) -> f64 {
    let g = |t: f64| 1.0 - (-t.abs() / tau1_ps).exp();
    let g1 = 4.0 * (sp.t1() * sp.t1() + sp.r1() * sp.r1()) * sp.t2() * sp.r2() * g(t_ps);
    let g2 = 4.0
        * sp.t1()
        * sp.r1()
        * (sp.t2() * sp.t2() * g(t_ps - delay_ps) + sp.r2() * sp.r2() * g(t_ps + delay_ps));
    g1 + g2
}

#[test]
fn hom_orthogonal_monte_carlo_matches_closed_form() {
    let config = cw_hom_config(Polarization::Orthogonal, 41);
    let (stream, _) = simulate_with_report(&config).unwrap();
    let hist = cross_correlate(&stream, 0, 1, 100, 8_000).unwrap();
    let rate0 = stream.channel_rate_hz(0);
    let rate1 = stream.channel_rate_hz(1);
    let norm = normalize_cw(&hist, rate0, rate1, 30.0).unwrap();
    let c = cw_normalization_constant(100, rate0, rate1, 30.0);

    let sp = config.splitters;
    let mut chi2 = 0.0;
    let mut n_bins = 0;
    for (i, center) in norm.centers_ps().enumerate() {
        let model = hom_cw_model(center as f64, 1_000.0, 4_000.0, &sp);
        let observed = norm.normalized().unwrap()[i];
        let expected_counts = (model * c).max(1e-9);
        chi2 += (observed * c - expected_counts).powi(2) / expected_counts;
        n_bins += 1;
    }
    let chi2_red = chi2 / n_bins as f64;
    assert!(
        (0.6..1.5).contains(&chi2_red),
        "reduced chi^2 = {chi2_red:.3} over {n_bins} bins"
    );

    // spot checks: antibunching dip at zero, partial dips at the arm delay
    let at = |tau: i64| norm.value_at(tau).unwrap();
    assert!((at(0) - 0.4908).abs() < 0.10, "g2(0) = {}", at(0));
    let side = (at(4_000) + at(-4_000)) / 2.0;
    assert!((side - 0.7408).abs() < 0.08, "g2(delay) = {side}");
}

#[test]
fn hom_parallel_interference_empties_the_zero_bin() {
    let count_near_zero = |pol: Polarization| -> u64 {
        let mut config = cw_hom_config(pol, 43);
        config.emitter = EmitterParams::new(1.0, 2.0, 0.0, 4e5, 930.0).unwrap();
        config.duration_s = Some(10.0);
        let stream = simulate(&config).unwrap();
        let hist = cross_correlate(&stream, 0, 1, 100, 2_000).unwrap();
        let idx0 = hist.bin_index(0).unwrap();
        hist.counts()[idx0 - 2..=idx0 + 2].iter().sum()
    };
    let parallel = count_near_zero(Polarization::Parallel);
    let orthogonal = count_near_zero(Polarization::Orthogonal);
    assert!(
        (parallel as f64) < 0.5 * orthogonal as f64,
        "parallel {parallel} vs orthogonal {orthogonal}"
    );
}

#[test]
fn decay_trace_has_exact_counts_and_binning() {
    let em = emitter(0.0, 1e5);
    let pulsing = PulseTrain::new(12.5, 4.0, 1).unwrap();
    let trace = simulate_decay_trace(&em, &pulsing, 0.0, 100_000, 10, 5).unwrap();
    assert_eq!(trace.counts().len(), 1_250);
    assert_eq!(trace.total_counts(), 100_000);
    assert_eq!(trace.first_center_ps(), 0);
    // decay over the first few lifetimes
    let early: u64 = trace.counts()[..100].iter().sum();
    let late: u64 = trace.counts()[400..500].iter().sum();
    assert!(early > 5 * late);
}

#[test]
fn decay_trace_with_irf_keeps_every_count() {
    let em = emitter(0.0, 1e5);
    let pulsing = PulseTrain::new(12.5, 4.0, 1).unwrap();
    let trace = simulate_decay_trace(&em, &pulsing, 500.0, 50_000, 50, 6).unwrap();
    assert_eq!(trace.total_counts(), 50_000);
}

#[test]
fn decay_trace_rejects_nondividing_bin_width() {
    let em = emitter(0.0, 1e5);
    let pulsing = PulseTrain::new(12.5, 4.0, 1).unwrap();
    let err = simulate_decay_trace(&em, &pulsing, 0.0, 1_000, 300, 5).unwrap_err();
    assert!(matches!(err, SimError::InvalidConfig(_)));
}

#[test]
fn multiphoton_inversion_round_trips() {
    for g2 in [0.01, 0.05, 0.2, 0.4] {
        let p = multiphoton_prob_for_g2(g2).unwrap();
        assert!((g2_for_multiphoton_prob(p) - g2).abs() < 1e-12);
    }
    assert_eq!(multiphoton_prob_for_g2(0.0).unwrap(), 0.0);
    assert!(multiphoton_prob_for_g2(0.6).is_err());
    let p = multiphoton_prob_for_g2(0.05).unwrap();
    assert!((p - 0.026_334_038_989_724).abs() < 1e-12);
}

#[test]
fn config_validation_catches_structural_mistakes() {
    // one detector only
    let mut c = cw_hbt_config(0);
    c.detectors.truncate(1);
    assert!(matches!(c.validate(), Err(SimError::InvalidConfig(_))));

    // no record length
    let mut c = cw_hbt_config(0);
    c.duration_s = None;
    assert!(c.validate().is_err());

    // both pulse train and duration
    let mut c = cw_hbt_config(0);
    c.pulsing = Some(PulseTrain::new(12.5, 4.0, 100).unwrap());
    assert!(c.validate().is_err());

    // interferometer without polarization
    let mut c = cw_hom_config(Polarization::Parallel, 0);
    c.polarization = None;
    assert!(c.validate().is_err());

    // interferometer without a delay
    let mut c = cw_hom_config(Polarization::Parallel, 0);
    c.mzi_delay_ns = None;
    assert!(c.validate().is_err());

    // background light on the interferometer is not modeled
    let mut c = cw_hom_config(Polarization::Parallel, 0);
    c.background_rate_hz = 100.0;
    assert!(c.validate().is_err());

    // polarization on a tap topology
    let mut c = cw_hbt_config(0);
    c.polarization = Some(Polarization::Parallel);
    assert!(c.validate().is_err());

    // topology mismatch through the specific entry points
    let c = cw_hbt_config(0);
    assert!(simulate_hom_mzi(&c).is_err());
    assert!(simulate_hbt(&c).is_ok());
}

#[test]
fn visibility_outside_unit_interval_is_rejected() {
    let mut c = cw_hom_config(Polarization::Parallel, 0);
    c.source_visibility = 1.2;
    assert!(c.validate().is_err());
}

#[test]
fn topology_and_polarization_parse_round_trip() {
    for t in [Topology::Hbt, Topology::HomMzi, Topology::MmiHbt] {
        assert_eq!(t.as_str().parse::<Topology>().unwrap(), t);
    }
    assert!("mzi".parse::<Topology>().is_err());
    for p in [Polarization::Parallel, Polarization::Orthogonal] {
        assert_eq!(p.as_str().parse::<Polarization>().unwrap(), p);
    }
}

#[test]
fn sim_config_toml_round_trip() {
    let mut config = cw_hom_config(Polarization::Parallel, 5);
    config.duration_s = Some(0.2);
    let text = toml::to_string(&config).unwrap();
    let back: SimConfig = toml::from_str(&text).unwrap();
    assert_eq!(back.seed, 5);
    assert_eq!(back.topology, Topology::HomMzi);
    assert_eq!(back.emitter, config.emitter);
    let a = simulate(&config).unwrap();
    let b = simulate(&back).unwrap();
    assert_eq!(a, b);
}
