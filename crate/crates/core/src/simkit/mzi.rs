//! Unbalanced Mach-Zehnder routing with pair-level two-photon
//! interference at the recombining splitter.
//!
//! Each photon first takes the short arm (probability t1) or the long arm
//! (probability r1, adding the interferometer delay). At the second
//! splitter the short input maps to output 0 with probability t2 and the
//! long input with probability r2.
//!
//! Two photons that reach the second splitter from opposite inputs within
//! a short coincidence window can interfere. For an indistinguishable
//! pair the cross-output probability is suppressed by
//! 1 - v_src * exp(-2|dt|/tau_c) and the suppressed weight moves to the
//! two same-output outcomes, which keeps the pair count conserved. With
//! `interfere` false (orthogonal polarizations) or for photons that never
//! meet a partner, routing is independent.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;

use crate::types::SplitterParams;

/// Per-output arrival times. Not guaranteed sorted: a photon held back as
/// a pairing candidate can be released after a later pair was already
/// routed. The detector chain sorts before applying dead time.
pub(crate) struct MziOutputs {
    pub ch0_ps: Vec<f64>,
    pub ch1_ps: Vec<f64>,
}

#[derive(PartialEq)]
struct Arrival {
    t_ps: f64,
    long_arm: bool,
}

impl Eq for Arrival {}

impl PartialOrd for Arrival {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Arrival {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.t_ps
            .total_cmp(&other.t_ps)
            .then_with(|| self.long_arm.cmp(&other.long_arm))
    }
}

struct PairRouter<'a, R: Rng> {
    splitters: &'a SplitterParams,
    interfere: bool,
    v_src: f64,
    coherence_ps: f64,
    window_ps: f64,
    pending: VecDeque<Arrival>,
    rng: &'a mut R,
    ch0: Vec<f64>,
    ch1: Vec<f64>,
}

impl<'a, R: Rng> PairRouter<'a, R> {
    fn prob_out0(&self, long_arm: bool) -> f64 {
        if long_arm {
            self.splitters.r2()
        } else {
            self.splitters.t2()
        }
    }

    fn route_single(&mut self, a: Arrival) {
        let p0 = self.prob_out0(a.long_arm);
        if self.rng.random::<f64>() < p0 {
            self.ch0.push(a.t_ps);
        } else {
            self.ch1.push(a.t_ps);
        }
    }

    fn route_pair(&mut self, x: Arrival, y: Arrival) {
        let dt = (y.t_ps - x.t_ps).abs();
        let suppression = 1.0 - self.v_src * (-2.0 * dt / self.coherence_ps).exp();
        let p0x = self.prob_out0(x.long_arm);
        let p0y = self.prob_out0(y.long_arm);
        // Cross-output outcomes carry the interference term; the weight
        // they lose is shared equally by the two same-output outcomes,
        // whose unsuppressed probabilities are equal (t2*r2 each) for
        // opposite-input pairs.
        let p_x0_y1 = p0x * (1.0 - p0y) * suppression;
        let p_x1_y0 = (1.0 - p0x) * p0y * suppression;
        let p_both0 = 0.5 * (1.0 - p_x0_y1 - p_x1_y0);
        let u = self.rng.random::<f64>();
        if u < p_x0_y1 {
            self.ch0.push(x.t_ps);
            self.ch1.push(y.t_ps);
        } else if u < p_x0_y1 + p_x1_y0 {
            self.ch1.push(x.t_ps);
            self.ch0.push(y.t_ps);
        } else if u < p_x0_y1 + p_x1_y0 + p_both0 {
            self.ch0.push(x.t_ps);
            self.ch0.push(y.t_ps);
        } else {
            self.ch1.push(x.t_ps);
            self.ch1.push(y.t_ps);
        }
    }

    /// Route every pending arrival older than `cutoff_ps`; they can no
    /// longer find an interference partner.
    fn flush_older_than(&mut self, cutoff_ps: f64) {
        while let Some(front) = self.pending.front() {
            if front.t_ps < cutoff_ps {
                let a = self.pending.pop_front().expect("front exists");
                self.route_single(a);
            } else {
                break;
            }
        }
    }

    fn accept(&mut self, a: Arrival) {
        if !self.interfere {
            self.route_single(a);
            return;
        }
        self.flush_older_than(a.t_ps - self.window_ps);
        // Nearest unpaired opposite-input photon wins; occupancy is low
        // enough that anything beyond adjacent pairing is noise.
        if let Some(idx) = self
            .pending
            .iter()
            .rposition(|p| p.long_arm != a.long_arm)
        {
            let partner = self.pending.remove(idx).expect("index from rposition");
            self.route_pair(partner, a);
        } else {
            self.pending.push_back(a);
        }
    }

    fn finish(mut self) -> MziOutputs {
        while let Some(a) = self.pending.pop_front() {
            self.route_single(a);
        }
        MziOutputs { ch0_ps: self.ch0, ch1_ps: self.ch1 }
    }
}

/// Send sorted emission times through the interferometer. Memory stays
/// O(photons in flight): a small heap re-sorts arrivals that the long arm
/// reordered, and pairing works on a short deque.
pub(crate) fn route_hom_mzi(
    emissions_ps: &[f64],
    splitters: &SplitterParams,
    delay_ps: f64,
    interfere: bool,
    v_src: f64,
    coherence_ps: f64,
    rng: &mut impl Rng,
) -> MziOutputs {
    // Beyond ~4 coherence times the interference term is below 4e-4 and
    // pairing is pointless; the cap keeps the deque short when the delay
    // is small.
    let window_ps = (4.0 * coherence_ps).min(0.45 * delay_ps.max(coherence_ps));
    let n = emissions_ps.len();

    // First-splitter choices consume one draw per photon before any
    // second-splitter draw, in emission order, so results are reproducible
    // regardless of how arrivals interleave.
    let mut heap: BinaryHeap<Reverse<Arrival>> = BinaryHeap::new();
    let mut router = PairRouter {
        splitters,
        interfere,
        v_src,
        coherence_ps,
        window_ps,
        pending: VecDeque::new(),
        rng,
        ch0: Vec::with_capacity(n / 2 + 16),
        ch1: Vec::with_capacity(n / 2 + 16),
    };
    for &e in emissions_ps {
        let long_arm = router.rng.random::<f64>() < splitters.r1();
        let t_ps = if long_arm { e + delay_ps } else { e };
        // Anything in the heap earlier than the current emission time can
        // never be preceded by a later photon: emit it in sorted order.
        while let Some(Reverse(front)) = heap.peek() {
            if front.t_ps < e {
                let a = heap.pop().expect("peeked").0;
                router.accept(a);
            } else {
                break;
            }
        }
        heap.push(Reverse(Arrival { t_ps, long_arm }));
    }
    let mut rest: Vec<Arrival> = heap.into_iter().map(|r| r.0).collect();
    rest.sort_unstable();
    for a in rest {
        router.accept(a);
    }
    router.finish()
}
