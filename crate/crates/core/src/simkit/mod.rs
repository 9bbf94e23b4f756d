//! Monte Carlo time-tag simulation of a two-level emitter feeding one of
//! three detection topologies:
//!
//! * `hbt` — a balanced tap with a detector on each output, for
//!   intensity-correlation measurements,
//! * `hom-mzi` — an unbalanced Mach-Zehnder with arm delay and two-photon
//!   interference at the recombiner,
//! * `mmi-hbt` — an on-chip splitter with a configurable ratio plus an
//!   uncorrelated background contribution.
//!
//! The same seed always reproduces the same stream bit for bit. Stages
//! draw from independently forked generators in a fixed order (emission,
//! background, routing, detector 0, detector 1).

mod detector;
mod emission;
mod mzi;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{
    CorrelationHistogram, DetectorParams, EmitterParams, PulseTrain, SplitterParams,
    TimeTagStream, ValidationError,
};

use detector::{apply_detector, ChannelOutcome};
use emission::{cw_emission, cw_pump_rate_hz, fwhm_to_sigma, pulsed_emission, EmissionBatch};
use mzi::route_hom_mzi;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    Hbt,
    HomMzi,
    MmiHbt,
}

impl Topology {
    pub fn as_str(self) -> &'static str {
        match self {
            Topology::Hbt => "hbt",
            Topology::HomMzi => "hom-mzi",
            Topology::MmiHbt => "mmi-hbt",
        }
    }
}

impl std::str::FromStr for Topology {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hbt" => Ok(Topology::Hbt),
            "hom-mzi" => Ok(Topology::HomMzi),
            "mmi-hbt" => Ok(Topology::MmiHbt),
            other => Err(format!(
                "unknown topology {other:?} (expected hbt, hom-mzi or mmi-hbt)"
            )),
        }
    }
}

impl std::fmt::Display for Topology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Relative polarization of the two interferometer arms. Parallel photons
/// interfere; orthogonal photons are fully distinguishable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarization {
    Parallel,
    Orthogonal,
}

impl Polarization {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarization::Parallel => "parallel",
            Polarization::Orthogonal => "orthogonal",
        }
    }
}

impl std::str::FromStr for Polarization {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "parallel" => Ok(Polarization::Parallel),
            "orthogonal" => Ok(Polarization::Orthogonal),
            other => Err(format!(
                "unknown polarization {other:?} (expected parallel or orthogonal)"
            )),
        }
    }
}

/// Full description of one simulated acquisition.
///
/// Continuous-wave runs set `duration_s` and leave `pulsing` empty; pulsed
/// runs set `pulsing` (the record length is then `n_pulses` repetition
/// periods) and leave `duration_s` empty. For a continuous-wave `hom-mzi`
/// run the interferometer delay comes from `mzi_delay_ns`; a pulsed run
/// carries it inside `pulsing` instead.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub topology: Topology,
    pub emitter: EmitterParams,
    pub splitters: SplitterParams,
    pub detectors: Vec<DetectorParams>,
    #[serde(default)]
    pub pulsing: Option<PulseTrain>,
    #[serde(default)]
    pub polarization: Option<Polarization>,
    #[serde(default)]
    pub mzi_delay_ns: Option<f64>,
    #[serde(default = "default_visibility")]
    pub source_visibility: f64,
    #[serde(default)]
    pub background_rate_hz: f64,
    #[serde(default)]
    pub duration_s: Option<f64>,
    pub seed: u64,
}

fn default_visibility() -> f64 {
    1.0
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.detectors.len() != 2 {
            return Err(SimError::InvalidConfig(format!(
                "exactly two detectors are required, got {}",
                self.detectors.len()
            )));
        }
        match (&self.pulsing, self.duration_s) {
            (None, None) => {
                return Err(SimError::InvalidConfig(
                    "continuous-wave runs need duration_s".into(),
                ))
            }
            (None, Some(d)) if !(d.is_finite() && d > 0.0) => {
                return Err(SimError::InvalidConfig(format!(
                    "duration_s must be positive and finite, got {d}"
                )))
            }
            (Some(_), Some(_)) => {
                return Err(SimError::InvalidConfig(
                    "pulsed runs take their length from the pulse train; \
                     leave duration_s unset"
                        .into(),
                ))
            }
            _ => {}
        }
        if !(self.source_visibility.is_finite()
            && (0.0..=1.0).contains(&self.source_visibility))
        {
            return Err(SimError::InvalidConfig(format!(
                "source_visibility must lie in [0, 1], got {}",
                self.source_visibility
            )));
        }
        if !(self.background_rate_hz.is_finite() && self.background_rate_hz >= 0.0) {
            return Err(SimError::InvalidConfig(format!(
                "background_rate_hz must be non-negative, got {}",
                self.background_rate_hz
            )));
        }
        match self.topology {
            Topology::HomMzi => {
                if self.polarization.is_none() {
                    return Err(SimError::InvalidConfig(
                        "hom-mzi needs polarization (parallel or orthogonal)".into(),
                    ));
                }
                match (&self.pulsing, self.mzi_delay_ns) {
                    (None, None) => {
                        return Err(SimError::InvalidConfig(
                            "continuous-wave hom-mzi needs mzi_delay_ns".into(),
                        ))
                    }
                    (None, Some(d)) if !(d.is_finite() && d > 0.0) => {
                        return Err(SimError::InvalidConfig(format!(
                            "mzi_delay_ns must be positive and finite, got {d}"
                        )))
                    }
                    (Some(_), Some(_)) => {
                        return Err(SimError::InvalidConfig(
                            "pulsed hom-mzi takes the delay from the pulse train; \
                             leave mzi_delay_ns unset"
                                .into(),
                        ))
                    }
                    _ => {}
                }
                if self.background_rate_hz != 0.0 {
                    return Err(SimError::InvalidConfig(
                        "background light is not modeled for hom-mzi; \
                         set background_rate_hz to 0"
                            .into(),
                    ));
                }
            }
            Topology::Hbt | Topology::MmiHbt => {
                if self.polarization.is_some() {
                    return Err(SimError::InvalidConfig(format!(
                        "polarization only applies to hom-mzi, not {}",
                        self.topology
                    )));
                }
                if self.mzi_delay_ns.is_some() {
                    return Err(SimError::InvalidConfig(format!(
                        "mzi_delay_ns only applies to hom-mzi, not {}",
                        self.topology
                    )));
                }
            }
        }
        Ok(())
    }

    fn duration_ps(&self) -> i64 {
        match &self.pulsing {
            Some(p) => (p.n_pulses() as f64 * p.rep_period_ns() * 1e3).round() as i64,
            None => (self.duration_s.expect("validated") * 1e12).round() as i64,
        }
    }
}

/// Bookkeeping counters for one simulated acquisition; every generated
/// photon is accounted for as detected, lost to efficiency, clipped at the
/// record boundary, or removed by dead time.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct SimReport {
    /// Photons that left the source (after collection thinning).
    pub emitted_photons: u64,
    /// Uncorrelated background photons injected before routing.
    pub background_photons: u64,
    /// Photons that fired a detector (passed the efficiency draw).
    pub detected_photons: u64,
    /// Tags discarded because they fell outside the record window.
    pub clipped_tags: u64,
    pub dark_tags: u64,
    pub dead_time_removed: u64,
}

impl SimReport {
    fn absorb(&mut self, ch: &ChannelOutcome) {
        self.detected_photons += ch.detected;
        self.clipped_tags += ch.clipped;
        self.dark_tags += ch.dark;
        self.dead_time_removed += ch.removed_dead;
    }
}

/// Run the topology selected by the config.
pub fn simulate(config: &SimConfig) -> Result<TimeTagStream, SimError> {
    simulate_with_report(config).map(|(stream, _)| stream)
}

pub fn simulate_with_report(
    config: &SimConfig,
) -> Result<(TimeTagStream, SimReport), SimError> {
    match config.topology {
        Topology::Hbt => run_tap(config, 0.5),
        Topology::MmiHbt => run_tap(config, config.splitters.mmi_ratio()),
        Topology::HomMzi => run_hom_mzi(config),
    }
}

pub fn simulate_hbt(config: &SimConfig) -> Result<TimeTagStream, SimError> {
    expect_topology(config, Topology::Hbt)?;
    simulate(config)
}

pub fn simulate_hom_mzi(config: &SimConfig) -> Result<TimeTagStream, SimError> {
    expect_topology(config, Topology::HomMzi)?;
    simulate(config)
}

pub fn simulate_mmi_hbt(config: &SimConfig) -> Result<TimeTagStream, SimError> {
    expect_topology(config, Topology::MmiHbt)?;
    simulate(config)
}

fn expect_topology(config: &SimConfig, want: Topology) -> Result<(), SimError> {
    if config.topology != want {
        return Err(SimError::InvalidConfig(format!(
            "config describes topology {}, expected {}",
            config.topology, want
        )));
    }
    Ok(())
}

struct StageRngs {
    emission: ChaCha12Rng,
    background: ChaCha12Rng,
    routing: ChaCha12Rng,
    det0: ChaCha12Rng,
    det1: ChaCha12Rng,
}

impl StageRngs {
    fn fork(seed: u64) -> Self {
        let mut master = ChaCha12Rng::seed_from_u64(seed);
        let mut next = || ChaCha12Rng::seed_from_u64(master.next_u64());
        StageRngs {
            emission: next(),
            background: next(),
            routing: next(),
            det0: next(),
            det1: next(),
        }
    }
}

/// Mean probability that an emitted photon is detected, given the
/// probability `p0` of being routed to channel 0.
fn mean_detect_prob(config: &SimConfig, p0: f64) -> f64 {
    p0 * config.detectors[0].efficiency() + (1.0 - p0) * config.detectors[1].efficiency()
}

fn source_photons(
    config: &SimConfig,
    detect_prob: f64,
    offsets_ps: &[f64],
    rng: &mut impl Rng,
) -> Result<EmissionBatch, SimError> {
    match &config.pulsing {
        None => {
            let pump = cw_pump_rate_hz(&config.emitter, detect_prob)?;
            Ok(cw_emission(
                &config.emitter,
                pump,
                config.duration_ps() as f64,
                rng,
            ))
        }
        Some(pulsing) => {
            let p_m = config.emitter.multiphoton_prob();
            let collect = config.emitter.brightness() / ((1.0 + p_m) * detect_prob);
            if collect > 1.0 {
                return Err(SimError::InvalidConfig(format!(
                    "pulsed brightness {} photons per pulse exceeds what routing \
                     and detector efficiency can deliver (max {:.4})",
                    config.emitter.brightness(),
                    (1.0 + p_m) * detect_prob
                )));
            }
            Ok(pulsed_emission(
                &config.emitter,
                pulsing,
                offsets_ps,
                collect,
                rng,
            ))
        }
    }
}

/// Uncorrelated Poisson background, expressed in the config as the rate of
/// detected background tags; the generator rate is scaled back up by the
/// mean detection probability so the detected rate comes out as requested.
fn background_photons(
    config: &SimConfig,
    detect_prob: f64,
    rng: &mut impl Rng,
) -> Result<Vec<f64>, SimError> {
    if config.background_rate_hz == 0.0 {
        return Ok(Vec::new());
    }
    if detect_prob <= 0.0 {
        return Err(SimError::InvalidConfig(
            "background light cannot reach the detectors".into(),
        ));
    }
    let rate_ps = config.background_rate_hz / detect_prob * 1e-12;
    let gap = Exp::new(rate_ps).expect("rate validated positive");
    let duration = config.duration_ps() as f64;
    let mut times = Vec::with_capacity((rate_ps * duration) as usize + 16);
    let mut t = 0.0;
    loop {
        t += gap.sample(rng);
        if t >= duration {
            break;
        }
        times.push(t);
    }
    Ok(times)
}

/// hbt and mmi-hbt share everything except the tap ratio: photons are
/// routed to channel 0 with probability `p0`, independently of each other.
fn run_tap(config: &SimConfig, p0: f64) -> Result<(TimeTagStream, SimReport), SimError> {
    config.validate()?;
    let mut rngs = StageRngs::fork(config.seed);
    let detect_prob = mean_detect_prob(config, p0);

    let batch = source_photons(config, detect_prob, &[0.0], &mut rngs.emission)?;
    let background = background_photons(config, detect_prob, &mut rngs.background)?;

    let report = SimReport {
        emitted_photons: batch.emitted,
        background_photons: background.len() as u64,
        ..SimReport::default()
    };

    let total = batch.times_ps.len() + background.len();
    let mut ch0: Vec<f64> = Vec::with_capacity((total as f64 * p0) as usize + 16);
    let mut ch1: Vec<f64> = Vec::with_capacity((total as f64 * (1.0 - p0)) as usize + 16);
    // Merge signal and background in time order so routing draws are
    // consumed in a reproducible sequence.
    let mut bg = background.iter().peekable();
    let mut sig = batch.times_ps.iter().peekable();
    loop {
        let take_sig = match (sig.peek(), bg.peek()) {
            (Some(s), Some(b)) => s <= b,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => break,
        };
        let t = if take_sig {
            *sig.next().expect("peeked")
        } else {
            *bg.next().expect("peeked")
        };
        if rngs.routing.random::<f64>() < p0 {
            ch0.push(t);
        } else {
            ch1.push(t);
        }
    }

    assemble(config, ch0, ch1, &mut rngs, report)
}

fn run_hom_mzi(config: &SimConfig) -> Result<(TimeTagStream, SimReport), SimError> {
    config.validate()?;
    let sp = &config.splitters;
    let mut rngs = StageRngs::fork(config.seed);

    // Route probabilities to channel 0: short arm exits through t2, long
    // arm through r2.
    let p0 = sp.t1() * sp.t2() + sp.r1() * sp.r2();
    let detect_prob = mean_detect_prob(config, p0);

    let delay_ps = match &config.pulsing {
        Some(p) => p.mzi_delay_ns() * 1e3,
        None => config.mzi_delay_ns.expect("validated") * 1e3,
    };
    // Pulsed interferometry drives the emitter twice per period, the
    // second excitation delayed by the interferometer delay so that the
    // early photon's long path overlaps the late photon's short path.
    let offsets: &[f64] = &[0.0, delay_ps];
    let batch = source_photons(config, detect_prob, offsets, &mut rngs.emission)?;

    let report = SimReport {
        emitted_photons: batch.emitted,
        ..SimReport::default()
    };

    let interfere = config.polarization == Some(Polarization::Parallel);
    let outputs = route_hom_mzi(
        &batch.times_ps,
        sp,
        delay_ps,
        interfere,
        config.source_visibility,
        config.emitter.coherence_ns() * 1e3,
        &mut rngs.routing,
    );
    drop(batch);

    assemble(config, outputs.ch0_ps, outputs.ch1_ps, &mut rngs, report)
}

fn assemble(
    config: &SimConfig,
    ch0: Vec<f64>,
    ch1: Vec<f64>,
    rngs: &mut StageRngs,
    mut report: SimReport,
) -> Result<(TimeTagStream, SimReport), SimError> {
    let duration_ps = config.duration_ps();
    let out0 = apply_detector(&ch0, &config.detectors[0], duration_ps, &mut rngs.det0);
    drop(ch0);
    let out1 = apply_detector(&ch1, &config.detectors[1], duration_ps, &mut rngs.det1);
    drop(ch1);
    report.absorb(&out0);
    report.absorb(&out1);
    let stream = TimeTagStream::from_sorted_channels(
        duration_ps,
        vec![(0, out0.tags_ps), (1, out1.tags_ps)],
    )?;
    Ok((stream, report))
}

/// Histogram of photon arrival times relative to their excitation pulse,
/// folded into one repetition period: the time-correlated single-photon
/// counting trace used for lifetime fitting. Draws exactly `n_counts`
/// photons; `irf_fwhm_ps` broadens each with the Gaussian instrument
/// response. Bins are centered on multiples of `bin_width_ps`, which must
/// divide the repetition period.
pub fn simulate_decay_trace(
    emitter: &EmitterParams,
    pulsing: &PulseTrain,
    irf_fwhm_ps: f64,
    n_counts: u64,
    bin_width_ps: i64,
    seed: u64,
) -> Result<CorrelationHistogram, SimError> {
    if !(irf_fwhm_ps.is_finite() && irf_fwhm_ps >= 0.0) {
        return Err(SimError::InvalidConfig(format!(
            "irf_fwhm_ps must be non-negative, got {irf_fwhm_ps}"
        )));
    }
    if n_counts == 0 {
        return Err(SimError::InvalidConfig("n_counts must be at least 1".into()));
    }
    if bin_width_ps < 1 {
        return Err(SimError::InvalidConfig(format!(
            "bin_width_ps must be at least 1, got {bin_width_ps}"
        )));
    }
    let period_ps = (pulsing.rep_period_ns() * 1e3).round();
    if (pulsing.rep_period_ns() * 1e3 - period_ps).abs() > 1e-6 {
        return Err(SimError::InvalidConfig(format!(
            "repetition period {} ns is not an integer number of ps",
            pulsing.rep_period_ns()
        )));
    }
    let period = period_ps as i64;
    if period % bin_width_ps != 0 {
        return Err(SimError::InvalidConfig(format!(
            "bin width {bin_width_ps} ps must divide the repetition period {period} ps"
        )));
    }
    let n_bins = (period / bin_width_ps) as usize;

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let decay = Exp::new(1.0 / (emitter.lifetime_ns() * 1e3)).expect("lifetime positive");
    let sigma = fwhm_to_sigma(irf_fwhm_ps);
    let irf = if sigma > 0.0 {
        Some(Normal::new(0.0, sigma).expect("sigma finite"))
    } else {
        None
    };

    let mut counts = vec![0_u64; n_bins];
    let bw = bin_width_ps as f64;
    let half = bw / 2.0;
    for _ in 0..n_counts {
        let mut t = decay.sample(&mut rng);
        if let Some(n) = &irf {
            t += n.sample(&mut rng);
        }
        // Fold into one period; bins are centered on multiples of the bin
        // width, so times in the trailing half-bin wrap around to bin 0.
        let mut folded = t.rem_euclid(period_ps);
        if folded >= period_ps - half {
            folded -= period_ps;
        }
        let idx = (((folded + half) / bw).floor() as usize).min(n_bins - 1);
        counts[idx] += 1;
    }

    CorrelationHistogram::new(0, bin_width_ps, counts).map_err(SimError::from)
}

/// Multiphoton emission probability that produces a given center-peak
/// suppression in the pulsed intensity correlation. Inverse companion of
/// [`g2_for_multiphoton_prob`]; valid for suppression below 1/2.
pub fn multiphoton_prob_for_g2(g2_zero: f64) -> Result<f64, SimError> {
    if !(g2_zero.is_finite() && (0.0..0.5).contains(&g2_zero)) {
        return Err(SimError::InvalidConfig(format!(
            "g2_zero must lie in [0, 0.5), got {g2_zero}"
        )));
    }
    if g2_zero == 0.0 {
        return Ok(0.0);
    }
    Ok(((1.0 - g2_zero) - (1.0 - 2.0 * g2_zero).sqrt()) / g2_zero)
}

/// Center-to-side peak-area ratio of the pulsed intensity correlation for
/// an emitter that adds a second photon with probability `p_m`: one pulse
/// holds 1 + p_m photons on average, so coincidences within a pulse occur
/// at rate 2 p_m while uncorrelated pulses pair at (1 + p_m) squared.
pub fn g2_for_multiphoton_prob(p_m: f64) -> f64 {
    2.0 * p_m / (1.0 + p_m).powi(2)
}

#[cfg(test)]
mod tests;
