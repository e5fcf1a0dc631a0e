//! BCJR decoding on the vector ISI trellis of the asynchronous MAC.
//!
//! The channel output at epoch `k` depends on `c_a(k)`, `c_b(k)` and, through
//! the single top-right tap, on `c_b(k-1)` only, so the trellis state is the
//! previous B symbol: `M` states, `M^2` input pairs per state.
//!
//! Frames start from a known guard (zero) and may carry a tail observation
//! of the trailing guard epoch, which then pins the last state.

mod forward_backward;
mod full_state;
mod trellis;
mod viterbi;
mod xor;

use std::fmt;
use std::str::FromStr;

pub use forward_backward::{forward_backward, forward_backward_log, max_log, max_star};
pub use full_state::forward_backward_full_state;
pub use trellis::Trellis;
pub use viterbi::viterbi;
pub use xor::{xor_posteriors, XorAppTable};

use crate::modulation::Modulation;
use crate::whitening::Taps;
use crate::{Error, Result, Vec2};

/// Per-epoch channel taps: one set for the whole frame or one per epoch
/// (data epochs first, then the tail epoch if present).
#[derive(Debug, Clone, PartialEq)]
pub enum TapSchedule {
    Fixed(Taps),
    PerEpoch(Vec<Taps>),
}

impl TapSchedule {
    pub fn at(&self, k: usize) -> &Taps {
        match self {
            TapSchedule::Fixed(t) => t,
            TapSchedule::PerEpoch(v) => &v[k],
        }
    }
}

/// A frame in decoder form: `r(k) = b0(k) c(k) + b1(k) c(k-1) + n(k)`.
///
/// The noise on component `i` is complex Gaussian with total variance
/// `sigma2 / weights[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsiFrame {
    pub modulation: Modulation,
    /// Observations of the data epochs `0..N`.
    pub obs: Vec<Vec2>,
    /// Observation of the trailing guard epoch `N`, if recorded.
    pub tail: Option<Vec2>,
    pub taps: TapSchedule,
    pub sigma2: f64,
    pub weights: [f64; 2],
}

impl IsiFrame {
    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.obs.is_empty() {
            return Err(Error::InvalidInput("frame must hold at least one epoch".into()));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::InvalidInput(format!("noise variance must be positive, got {}", self.sigma2)));
        }
        if self.weights.iter().any(|w| w.is_nan() || *w <= 0.0) {
            return Err(Error::InvalidInput("metric weights must be positive".into()));
        }
        let needed = self.obs.len() + usize::from(self.tail.is_some());
        let taps: &[Taps] = match &self.taps {
            TapSchedule::Fixed(t) => std::slice::from_ref(t),
            TapSchedule::PerEpoch(v) if v.len() >= needed => v,
            TapSchedule::PerEpoch(v) => {
                return Err(Error::InvalidInput(format!("{} tap sets for {} epochs", v.len(), needed)));
            }
        };
        if taps.iter().any(|t| t.b1[(0, 0)].norm() != 0.0 || t.b1[(1, 0)].norm() != 0.0) {
            return Err(Error::InvalidInput(
                "b1 must not depend on c_a(k-1); the trellis state is c_b(k-1)".into(),
            ));
        }
        Ok(())
    }
}

/// Index pair `(c_a, c_b)` into the constellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SymbolPair {
    pub a: usize,
    pub b: usize,
}

impl SymbolPair {
    pub fn xor(&self) -> usize {
        self.a ^ self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Linear,
    Log,
}

/// Per-epoch posterior over the `M^2` symbol pairs, in canonical order
/// `a * M + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AppTable {
    pub(crate) modulation: Modulation,
    pub(crate) domain: Domain,
    pub(crate) values: Vec<f64>,
}

impl AppTable {
    pub fn new(modulation: Modulation, domain: Domain, values: Vec<f64>) -> Result<Self> {
        let m2 = modulation.order().pow(2);
        if values.is_empty() || !values.len().is_multiple_of(m2) {
            return Err(Error::InvalidInput(format!("{} values do not form {m2}-entry epochs", values.len())));
        }
        Ok(Self { modulation, domain, values })
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.pairs_per_epoch()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn pairs_per_epoch(&self) -> usize {
        self.modulation.order().pow(2)
    }

    /// Raw entries of epoch `k` in the table's domain.
    pub fn epoch(&self, k: usize) -> &[f64] {
        let w = self.pairs_per_epoch();
        &self.values[k * w..(k + 1) * w]
    }

    /// Linear probabilities of epoch `k`.
    pub fn probabilities(&self, k: usize) -> Vec<f64> {
        match self.domain {
            Domain::Linear => self.epoch(k).to_vec(),
            Domain::Log => self.epoch(k).iter().map(|v| v.exp()).collect(),
        }
    }

    pub fn prob(&self, k: usize, pair: SymbolPair) -> f64 {
        let v = self.epoch(k)[pair.a * self.modulation.order() + pair.b];
        match self.domain {
            Domain::Linear => v,
            Domain::Log => v.exp(),
        }
    }

    /// Largest absolute deviation between two tables' linear probabilities.
    pub fn max_abs_diff(&self, other: &AppTable) -> f64 {
        assert_eq!(self.len(), other.len());
        (0..self.len())
            .flat_map(|k| {
                let (p, q) = (self.probabilities(k), other.probabilities(k));
                p.into_iter().zip(q).map(|(x, y)| (x - y).abs()).collect::<Vec<_>>()
            })
            .fold(0.0, f64::max)
    }
}

/// Per-epoch argmax; ties resolve to the first pair in canonical order.
pub fn hard_decisions(apps: &AppTable) -> Vec<SymbolPair> {
    let m = apps.modulation.order();
    (0..apps.len())
        .map(|k| {
            let idx = argmax(apps.epoch(k));
            SymbolPair { a: idx / m, b: idx % m }
        })
        .collect()
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Linear-domain BCJR with per-epoch normalization.
    Map,
    LogMap,
    MaxLog,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Map => "map",
            Algorithm::LogMap => "logmap",
            Algorithm::MaxLog => "maxlog",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "map" | "bcjr" => Ok(Algorithm::Map),
            "logmap" => Ok(Algorithm::LogMap),
            "maxlog" | "maxlogmap" => Ok(Algorithm::MaxLog),
            other => Err(Error::InvalidInput(format!("unknown decoder '{other}'"))),
        }
    }
}

pub fn decode(frame: &IsiFrame, algorithm: Algorithm) -> Result<AppTable> {
    match algorithm {
        Algorithm::Map => forward_backward(frame),
        Algorithm::LogMap => forward_backward_log(frame),
        Algorithm::MaxLog => max_log(frame),
    }
}

/// Gaussian log branch metric with the constant dropped:
/// `-||r - psi||^2 / (2 var)`, where `var` is the noise variance per real
/// dimension.
pub fn branch_metric_log(observed: Vec2, predicted: Vec2, var: f64) -> f64 {
    -(observed - predicted).norm_squared() / (2.0 * var)
}

pub fn branch_metric(observed: Vec2, predicted: Vec2, var: f64) -> f64 {
    branch_metric_log(observed, predicted, var).exp()
}

/// Log metric with per-component weights, for components whose noise
/// variance is `var / weight`.
pub fn branch_metric_weighted_log(observed: Vec2, predicted: Vec2, var: f64, weights: [f64; 2]) -> f64 {
    let d = observed - predicted;
    -(weights[0] * d[0].norm_sqr() + weights[1] * d[1].norm_sqr()) / (2.0 * var)
}
