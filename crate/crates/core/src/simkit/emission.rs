//! Emission-time generation for a two-level emitter.
//!
//! Times are in picoseconds as f64 during generation; they stay exact to
//! well below 1 ps for any experiment length up to days. Conversion to
//! integer tags happens in the detector chain.

use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::SimError;
use crate::types::{EmitterParams, PulseTrain};

/// Photon emission times plus the count actually generated, so that callers
/// can audit conservation through the rest of the pipeline.
pub(crate) struct EmissionBatch {
    /// Sorted emission times in ps. May extend past the nominal record
    /// length; the detector chain clips and counts those.
    pub times_ps: Vec<f64>,
    pub emitted: u64,
}

const FWHM_TO_SIGMA: f64 = 2.354_820_045_030_949_3;

pub(crate) fn fwhm_to_sigma(fwhm: f64) -> f64 {
    fwhm / FWHM_TO_SIGMA
}

/// Solve for the Poisson pump rate that makes the gated emitter produce the
/// requested detected brightness, given the mean probability that an emitted
/// photon ends up detected (routing times detector efficiency).
///
/// The emitter accepts an excitation only when idle. A cycle is one
/// exponential wait for a pump arrival (mean 1/P) plus the radiative busy
/// interval, whose mean is (1 + p_m/2)/gamma because a two-photon cycle
/// stays busy until the later of two exponential decays. Inverting the
/// cycle rate for P gives an exact brightness calibration at any p_m.
pub(crate) fn cw_pump_rate_hz(
    emitter: &EmitterParams,
    detect_prob: f64,
) -> Result<f64, SimError> {
    if detect_prob <= 0.0 {
        return Err(SimError::InvalidConfig(
            "mean detection probability is zero; no brightness is reachable".into(),
        ));
    }
    let p_m = emitter.multiphoton_prob();
    let cycle_rate_hz = emitter.brightness() / ((1.0 + p_m) * detect_prob);
    let gamma_hz = 1e9 / emitter.lifetime_ns();
    let busy_s = (1.0 + 0.5 * p_m) / gamma_hz;
    let idle_s = 1.0 / cycle_rate_hz - busy_s;
    // Past ~90% of saturation the pump rate diverges and the simulation
    // would grind through astronomically many rejected excitations.
    if idle_s <= 0.1 * busy_s {
        return Err(SimError::InvalidConfig(format!(
            "brightness {:.3e} /s needs an emission cycle rate within 10% of \
             saturation for lifetime {} ns; lower the brightness or shorten \
             the lifetime",
            emitter.brightness(),
            emitter.lifetime_ns(),
        )));
    }
    Ok(1.0 / idle_s)
}

/// Continuous-wave emission: Poisson pump arrivals at `pump_rate_hz`,
/// arrivals during a radiative cycle are lost, each accepted excitation
/// yields one photon plus a second with probability p_m.
///
/// Output is sorted by construction: the gate forbids a new excitation
/// before every photon of the previous cycle has been emitted.
pub(crate) fn cw_emission(
    emitter: &EmitterParams,
    pump_rate_hz: f64,
    duration_ps: f64,
    rng: &mut impl Rng,
) -> EmissionBatch {
    let gap = Exp::new(pump_rate_hz * 1e-12).expect("pump rate validated positive");
    let decay = Exp::new(1.0 / (emitter.lifetime_ns() * 1e3)).expect("lifetime validated positive");
    let p_m = emitter.multiphoton_prob();

    let expected = (emitter.brightness() * duration_ps * 1e-12 * 1.3) as usize;
    let mut times = Vec::with_capacity(expected.max(16));
    let mut t = 0.0_f64;
    let mut busy_until = -1.0_f64;
    loop {
        t += gap.sample(rng);
        if t >= duration_ps {
            break;
        }
        if t < busy_until {
            continue;
        }
        let first = t + decay.sample(rng);
        if p_m > 0.0 && rng.random::<f64>() < p_m {
            let second = t + decay.sample(rng);
            let (lo, hi) = if first <= second { (first, second) } else { (second, first) };
            times.push(lo);
            times.push(hi);
            busy_until = hi;
        } else {
            times.push(first);
            busy_until = first;
        }
    }
    let emitted = times.len() as u64;
    EmissionBatch { times_ps: times, emitted }
}

/// Pulsed emission. Each repetition period fires one excitation per entry in
/// `offsets_ps` (one entry for plain pulsed operation, two for the
/// double-pulse interferometer drive). Emission happens with probability
/// `collect_prob`, which folds source brightness and collection losses into
/// a single thinning applied before routing.
pub(crate) fn pulsed_emission(
    emitter: &EmitterParams,
    pulsing: &PulseTrain,
    offsets_ps: &[f64],
    collect_prob: f64,
    rng: &mut impl Rng,
) -> EmissionBatch {
    let decay = Exp::new(1.0 / (emitter.lifetime_ns() * 1e3)).expect("lifetime validated positive");
    let p_m = emitter.multiphoton_prob();
    let period_ps = pulsing.rep_period_ns() * 1e3;

    let n = pulsing.n_pulses();
    let expected =
        (n as f64 * offsets_ps.len() as f64 * (1.0 + p_m) * collect_prob) as usize;
    let mut times = Vec::with_capacity(expected.max(16));
    for k in 0..n {
        let base = k as f64 * period_ps;
        for &off in offsets_ps {
            let t_exc = base + off;
            if collect_prob >= 1.0 || rng.random::<f64>() < collect_prob {
                times.push(t_exc + decay.sample(rng));
            }
            if p_m > 0.0 && rng.random::<f64>() < p_m {
                if collect_prob >= 1.0 || rng.random::<f64>() < collect_prob {
                    times.push(t_exc + decay.sample(rng));
                }
            }
        }
    }
    // Nearly sorted already; decay tails only rarely cross a pulse boundary.
    times.sort_unstable_by(f64::total_cmp);
    let emitted = times.len() as u64;
    EmissionBatch { times_ps: times, emitted }
}
