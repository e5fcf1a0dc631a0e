use crate::front_end::GUARD;
use crate::modulation::Modulation;
use crate::whitening::Taps;
use crate::{Vec2, C64};

use super::{branch_metric_weighted_log, IsiFrame};

/// One trellis section: states are values of `c_b(k-1)`, a branch is a state
/// plus an input pair `(c_a(k), c_b(k))`, and the next state is `c_b(k)`.
#[derive(Debug, Clone)]
pub struct Trellis {
    modulation: Modulation,
    points: Vec<C64>,
    /// Predicted output of branch `(s, a, b)` at `s * M^2 + a * M + b`.
    predicted: Vec<Vec2>,
    /// Predicted output of pair `(a, b)` leaving the guard state.
    from_guard: Vec<Vec2>,
    /// Predicted output of the guard input pair from state `s`.
    into_guard: Vec<Vec2>,
}

impl Trellis {
    pub fn new(modulation: Modulation, taps: &Taps) -> Self {
        let points = modulation.points();
        let psi = |ca: C64, cb: C64, prev_b: C64| taps.b0 * Vec2::new(ca, cb) + taps.b1 * Vec2::new(GUARD, prev_b);
        let mut predicted = Vec::with_capacity(points.len().pow(3));
        for &s in &points {
            for &ca in &points {
                for &cb in &points {
                    predicted.push(psi(ca, cb, s));
                }
            }
        }
        let mut from_guard = Vec::with_capacity(points.len().pow(2));
        for &ca in &points {
            for &cb in &points {
                from_guard.push(psi(ca, cb, GUARD));
            }
        }
        let into_guard = points.iter().map(|&s| psi(GUARD, GUARD, s)).collect();
        Self { modulation, points, predicted, from_guard, into_guard }
    }

    pub fn num_states(&self) -> usize {
        self.points.len()
    }

    pub fn num_branches(&self) -> usize {
        self.predicted.len()
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    /// State reached by input pair `(a, b)`.
    pub fn next_state(&self, _a: usize, b: usize) -> usize {
        b
    }

    pub fn predicted(&self, state: usize, a: usize, b: usize) -> Vec2 {
        let m = self.points.len();
        self.predicted[(state * m + a) * m + b]
    }

    pub fn predicted_from_guard(&self, a: usize, b: usize) -> Vec2 {
        self.from_guard[a * self.points.len() + b]
    }

    pub fn predicted_into_guard(&self, state: usize) -> Vec2 {
        self.into_guard[state]
    }
}

/// Log branch metrics for a whole frame.
///
/// Epoch `k` occupies `M^3` entries in `(s, a, b)` order. Epoch 0 leaves the
/// guard state; its metrics sit in the `s = 0` slot and the other slots hold
/// `-inf`, so recursions started from a point mass on state 0 are exact.
pub(crate) struct LogMetrics {
    pub m: usize,
    pub epochs: usize,
    pub branch: Vec<f64>,
    pub tail: Option<Vec<f64>>,
}

impl LogMetrics {
    pub fn new(frame: &IsiFrame) -> Self {
        let m = frame.modulation.order();
        let m3 = m * m * m;
        let n = frame.obs.len();
        let var = 0.5 * frame.sigma2;
        let w = frame.weights;
        let mut branch = vec![f64::NEG_INFINITY; n * m3];
        let fixed = match &frame.taps {
            super::TapSchedule::Fixed(t) => Some(Trellis::new(frame.modulation, t)),
            super::TapSchedule::PerEpoch(_) => None,
        };
        let mut local;
        for (k, &r) in frame.obs.iter().enumerate() {
            let t = match &fixed {
                Some(t) => t,
                None => {
                    local = Trellis::new(frame.modulation, frame.taps.at(k));
                    &local
                }
            };
            let out = &mut branch[k * m3..(k + 1) * m3];
            if k == 0 {
                for a in 0..m {
                    for b in 0..m {
                        out[a * m + b] = branch_metric_weighted_log(r, t.predicted_from_guard(a, b), var, w);
                    }
                }
            } else {
                for (slot, p) in out.iter_mut().zip(&t.predicted) {
                    *slot = branch_metric_weighted_log(r, *p, var, w);
                }
            }
        }
        let tail = frame.tail.map(|r| {
            let owned;
            let t = match &fixed {
                Some(t) => t,
                None => {
                    owned = Trellis::new(frame.modulation, frame.taps.at(n));
                    &owned
                }
            };
            (0..m).map(|s| branch_metric_weighted_log(r, t.predicted_into_guard(s), var, w)).collect()
        });
        Self { m, epochs: n, branch, tail }
    }

    pub fn epoch(&self, k: usize) -> &[f64] {
        let m3 = self.m * self.m * self.m;
        &self.branch[k * m3..(k + 1) * m3]
    }
}
