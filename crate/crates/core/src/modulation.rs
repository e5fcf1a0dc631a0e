//! Unit-energy constellations with bit labels.
//!
//! Symbols are handled by index. An index is also the symbol's bit label,
//! so the XOR of two labels is a bitwise XOR of indices.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modulation {
    /// `0 -> +1`, `1 -> -1`.
    Bpsk,
    /// Gray labelled, bit pair `(b0, b1) -> ((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2)`.
    Qpsk,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            Modulation::Qpsk => 2,
        }
    }

    /// Constellation size `M`.
    pub fn order(self) -> usize {
        1 << self.bits_per_symbol()
    }

    pub fn point(self, index: usize) -> C64 {
        match self {
            Modulation::Bpsk => C64::new(if index & 1 == 0 { 1.0 } else { -1.0 }, 0.0),
            Modulation::Qpsk => {
                let re = if index & 0b10 == 0 { 1.0 } else { -1.0 };
                let im = if index & 0b01 == 0 { 1.0 } else { -1.0 };
                C64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
            }
        }
    }

    pub fn points(self) -> Vec<C64> {
        (0..self.order()).map(|i| self.point(i)).collect()
    }

    /// Maps a group of `bits_per_symbol` bits (MSB first) to a symbol index.
    pub fn index_of_bits(self, bits: &[u8]) -> usize {
        bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as usize)
    }

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Bpsk => "bpsk",
            Modulation::Qpsk => "qpsk",
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Modulation::Bpsk),
            "qpsk" => Ok(Modulation::Qpsk),
            other => Err(Error::InvalidInput(format!("unknown modulation '{other}'"))),
        }
    }
}

/// Maps a bit sequence onto constellation points.
pub fn modulate(bits: &[u8], scheme: Modulation) -> Result<Vec<C64>> {
    let k = scheme.bits_per_symbol();
    if !bits.len().is_multiple_of(k) {
        return Err(Error::InvalidInput(format!(
            "{} bits do not divide into {}-bit {} symbols",
            bits.len(),
            k,
            scheme
        )));
    }
    Ok(bits
        .chunks(k)
        .map(|chunk| scheme.point(scheme.index_of_bits(chunk)))
        .collect())
}
