//! Pulse shapes, matched-filter cross-correlations and the noise covariance
//! of the two-filter statistic.
//!
//! Time is measured in symbol periods throughout, so every pulse lives on
//! `[0, 1)` and delays are fractions of a symbol.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use crate::quad::adaptive_simpson;
use crate::{Error, Mat2, Result, C64};

const QUAD_TOL: f64 = 1e-12;

/// A unit-energy pulse supported on one symbol interval.
///
/// Longer pulses (root-raised-cosine and friends) would couple more than
/// adjacent symbols and are deliberately not representable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PulseShape {
    Rectangular,
    /// `sqrt(2) sin(pi t)` on `[0, 1)`.
    HalfSine,
}

impl PulseShape {
    pub fn eval(self, t: f64) -> f64 {
        if !(0.0..1.0).contains(&t) {
            return 0.0;
        }
        match self {
            PulseShape::Rectangular => 1.0,
            PulseShape::HalfSine => SQRT_2 * (PI * t).sin(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PulseShape::Rectangular => "rect",
            PulseShape::HalfSine => "half-sine",
        }
    }
}

impl fmt::Display for PulseShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PulseShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rect" | "rectangular" => Ok(PulseShape::Rectangular),
            "half-sine" | "halfsine" | "half_sine" => Ok(PulseShape::HalfSine),
            other => Err(Error::Unsupported(format!(
                "pulse '{other}': only pulses confined to one symbol (rect, half-sine) are supported"
            ))),
        }
    }
}

/// Arrival offsets of the two sources, `0 <= tau_a <= tau_b < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingOffsets {
    tau_a: f64,
    tau_b: f64,
}

impl TimingOffsets {
    pub fn new(tau_a: f64, tau_b: f64) -> Result<Self> {
        if !(tau_a.is_finite() && tau_b.is_finite()) || !(0.0 <= tau_a && tau_a <= tau_b && tau_b < 1.0) {
            return Err(Error::InvalidInput(format!(
                "timing offsets must satisfy 0 <= tau_a <= tau_b < 1, got tau_a={tau_a}, tau_b={tau_b}"
            )));
        }
        Ok(Self { tau_a, tau_b })
    }

    /// Offsets `(0, delta)`.
    pub fn from_delta(delta: f64) -> Result<Self> {
        Self::new(0.0, delta)
    }

    pub fn tau_a(&self) -> f64 {
        self.tau_a
    }

    pub fn tau_b(&self) -> f64 {
        self.tau_b
    }

    /// Relative delay `tau_b - tau_a` in `[0, 1)`.
    pub fn delta(&self) -> f64 {
        self.tau_b - self.tau_a
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossCorrelations {
    /// Overlap of A's symbol `k` with B's symbol `k`.
    pub rho_ab: C64,
    /// Overlap of A's symbol `k` with B's symbol `k - 1`.
    pub rho_ba: C64,
}

impl CrossCorrelations {
    pub fn new(rho_ab: C64, rho_ba: C64) -> Self {
        Self { rho_ab, rho_ba }
    }

    pub fn real(rho_ab: f64, rho_ba: f64) -> Self {
        Self::new(C64::new(rho_ab, 0.0), C64::new(rho_ba, 0.0))
    }
}

/// Noise covariance blocks of the matched-filter outputs:
/// `E[w(k) w(l)^H] = sigma2 * Lambda(k - l)` with `Lambda(-1) = Lambda(1)^H`
/// and `Lambda(k) = 0` for `|k| > 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseCovariance {
    pub lambda0: Mat2,
    pub lambda1: Mat2,
}

impl NoiseCovariance {
    pub fn rho_ab(&self) -> C64 {
        self.lambda0[(0, 1)]
    }

    /// The single nonzero entry of `Lambda(1)`.
    pub fn rho_ba(&self) -> C64 {
        self.lambda1[(0, 1)]
    }

    pub fn lambda_minus1(&self) -> Mat2 {
        self.lambda1.adjoint()
    }

    /// `Lambda(lag)` for any integer lag.
    pub fn at_lag(&self, lag: i64) -> Mat2 {
        match lag {
            0 => self.lambda0,
            1 => self.lambda1,
            -1 => self.lambda_minus1(),
            _ => Mat2::zeros(),
        }
    }
}

/// Cross-correlations of the two pulses at the given offsets.
///
/// Rectangular pairs use the exact overlap lengths; every other pairing is
/// integrated numerically.
pub fn cross_correlations(
    pulse_a: PulseShape,
    pulse_b: PulseShape,
    offsets: TimingOffsets,
) -> CrossCorrelations {
    let delta = offsets.delta();
    if pulse_a == PulseShape::Rectangular && pulse_b == PulseShape::Rectangular {
        return CrossCorrelations::real(1.0 - delta, delta);
    }
    // Both catalog pulses are real, so conjugation is the identity here.
    let rho_ab = adaptive_simpson(
        &|t| pulse_a.eval(t) * pulse_b.eval(t - delta),
        delta,
        1.0,
        QUAD_TOL,
    );
    let rho_ba = adaptive_simpson(
        &|t| pulse_a.eval(t) * pulse_b.eval(t + 1.0 - delta),
        0.0,
        delta,
        QUAD_TOL,
    );
    CrossCorrelations::real(rho_ab, rho_ba)
}

pub fn noise_covariance(rho: CrossCorrelations) -> NoiseCovariance {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    NoiseCovariance {
        lambda0: Mat2::new(one, rho.rho_ab, rho.rho_ab.conj(), one),
        lambda1: Mat2::new(zero, rho.rho_ba, zero, zero),
    }
}
