//! Soft decoding for symbol-asynchronous physical-layer network coding at a
//! two-way relay.
//!
//! The relay observes the superposition of two sources whose symbol clocks
//! are offset by a known fraction `delta` of a symbol. This crate works in
//! the discrete sufficient-statistic domain:
//!
//! * [`signal_model`]: pulse cross-correlations and the structured noise
//!   covariance of the two matched filters,
//! * [`front_end`]: seeded synthesis of matched-filter and even/odd frames,
//! * [`whitening`]: spectral factorization and whitening into a vector ISI
//!   channel with one symbol of memory,
//! * [`bcjr`]: forward-backward decoding (linear, Log-MAP, Max-Log-MAP),
//!   XOR posteriors and a Viterbi reference,
//! * [`oracle`]: brute-force MAP references used by the tests,
//! * [`sim`]: the Monte Carlo sweep harness and CSV output.

pub mod bcjr;
mod error;
pub mod front_end;
pub mod modulation;
pub mod oracle;
mod quad;
pub mod signal_model;
pub mod sim;
pub mod whitening;

pub use error::{Error, Result};

/// Complex sample type used throughout.
pub type C64 = nalgebra::Complex<f64>;
/// A pair of complex samples, `[a, b]` component order.
pub type Vec2 = nalgebra::Vector2<C64>;
/// 2x2 complex matrix.
pub type Mat2 = nalgebra::Matrix2<C64>;

pub use bcjr::{
    forward_backward, forward_backward_log, hard_decisions, max_log, viterbi, xor_posteriors,
    Algorithm, AppTable, Domain, IsiFrame, SymbolPair, TapSchedule, Trellis, XorAppTable,
};
pub use front_end::{
    reconstruct_matched_from_even_odd, simulate_even_odd, simulate_matched_filter,
    ChannelParams, EvenOddFrame, MatchedFilterFrame, SymbolFrame,
};
pub use modulation::{modulate, Modulation};
pub use signal_model::{
    cross_correlations, noise_covariance, CrossCorrelations, NoiseCovariance, PulseShape,
    TimingOffsets,
};
pub use whitening::{isi_output, spectral_factorize, whiten, FrameWhitener, IsiModel, WhiteningFilter};
