//! Seeded synthesis of the relay's discrete observations.
//!
//! Frames carry `N` data epochs `0..N` framed by known guard symbols (value
//! zero, i.e. silence) at epochs `-1` and `N`. The matched-filter frame covers
//! epochs `-1..=N` and the even/odd frame covers `0..=N`: these are the
//! smallest windows that still hold every sample touched by a data symbol.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::bcjr::{IsiFrame, TapSchedule};
use crate::modulation::Modulation;
use crate::signal_model::{cross_correlations, noise_covariance, NoiseCovariance, PulseShape, TimingOffsets};
use crate::whitening::{IsiModel, Taps, WhiteningFilter};
use crate::{Error, Mat2, Result, Vec2, C64};

/// Value of the guard symbols around every frame.
pub const GUARD: C64 = C64::new(0.0, 0.0);

/// Two aligned symbol streams, held as constellation indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolFrame {
    modulation: Modulation,
    a: Vec<usize>,
    b: Vec<usize>,
}

impl SymbolFrame {
    pub fn new(modulation: Modulation, a: Vec<usize>, b: Vec<usize>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::InvalidInput(format!(
                "source frames differ in length: {} vs {}",
                a.len(),
                b.len()
            )));
        }
        let m = modulation.order();
        if a.iter().chain(&b).any(|&i| i >= m) {
            return Err(Error::InvalidInput(format!("symbol index outside the {modulation} alphabet")));
        }
        Ok(Self { modulation, a, b })
    }

    pub fn from_bits(modulation: Modulation, bits_a: &[u8], bits_b: &[u8]) -> Result<Self> {
        let k = modulation.bits_per_symbol();
        if !bits_a.len().is_multiple_of(k) || !bits_b.len().is_multiple_of(k) {
            return Err(Error::InvalidInput(format!("bit count not a multiple of {k}")));
        }
        let idx = |bits: &[u8]| bits.chunks(k).map(|c| modulation.index_of_bits(c)).collect();
        Self::new(modulation, idx(bits_a), idx(bits_b))
    }

    pub fn random<R: Rng + ?Sized>(modulation: Modulation, len: usize, rng: &mut R) -> Self {
        let m = modulation.order();
        let a = (0..len).map(|_| rng.random_range(0..m)).collect();
        let b = (0..len).map(|_| rng.random_range(0..m)).collect();
        Self { modulation, a, b }
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn indices_a(&self) -> &[usize] {
        &self.a
    }

    pub fn indices_b(&self) -> &[usize] {
        &self.b
    }

    /// `[c_a(k), c_b(k)]`, with guards outside `0..N`.
    pub fn pair(&self, k: isize) -> Vec2 {
        if k < 0 || k as usize >= self.len() {
            return Vec2::new(GUARD, GUARD);
        }
        let k = k as usize;
        Vec2::new(self.modulation.point(self.a[k]), self.modulation.point(self.b[k]))
    }

    /// Per-epoch XOR of the two sources' bit labels.
    pub fn xor_labels(&self) -> Vec<usize> {
        self.a.iter().zip(&self.b).map(|(a, b)| a ^ b).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub h_a: C64,
    pub h_b: C64,
    /// Total (complex) noise variance per unit-diagonal covariance entry.
    pub sigma2: f64,
    pub offsets: TimingOffsets,
    pub pulse_a: PulseShape,
    pub pulse_b: PulseShape,
    pub modulation: Modulation,
    pub frame_len: usize,
}

impl ChannelParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        h_a: C64,
        h_b: C64,
        sigma2: f64,
        offsets: TimingOffsets,
        pulse_a: PulseShape,
        pulse_b: PulseShape,
        modulation: Modulation,
        frame_len: usize,
    ) -> Result<Self> {
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(Error::InvalidInput(format!("noise variance must be positive, got {sigma2}")));
        }
        for (name, h) in [("h_a", h_a), ("h_b", h_b)] {
            if !(h.re.is_finite() && h.im.is_finite()) || h.norm() == 0.0 {
                return Err(Error::InvalidInput(format!("{name} must be finite and nonzero, got {h}")));
            }
        }
        if frame_len == 0 {
            return Err(Error::InvalidInput("frame length must be at least 1".into()));
        }
        Ok(Self { h_a, h_b, sigma2, offsets, pulse_a, pulse_b, modulation, frame_len })
    }

    pub fn delta(&self) -> f64 {
        self.offsets.delta()
    }

    pub fn gains(&self) -> Mat2 {
        Mat2::from_diagonal(&Vec2::new(self.h_a, self.h_b))
    }

    pub fn covariance(&self) -> NoiseCovariance {
        noise_covariance(cross_correlations(self.pulse_a, self.pulse_b, self.offsets))
    }

    fn check_frame(&self, frame: &SymbolFrame) -> Result<()> {
        if frame.len() != self.frame_len || frame.modulation() != self.modulation {
            return Err(Error::InvalidInput(format!(
                "frame ({} x {}) does not match channel ({} x {})",
                frame.len(),
                frame.modulation(),
                self.frame_len,
                self.modulation
            )));
        }
        Ok(())
    }

    /// The even/odd sampler needs identical rectangular pulses and a strictly
    /// interior delay.
    pub fn check_even_odd(&self) -> Result<()> {
        if self.pulse_a != PulseShape::Rectangular || self.pulse_b != PulseShape::Rectangular {
            return Err(Error::Unsupported(
                "the even/odd sampler is defined for rectangular pulses only".into(),
            ));
        }
        let delta = self.delta();
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Unsupported(format!(
                "delta = {delta}: symbol-synchronous reception collapses the two samples; \
                 use a standard synchronous detector"
            )));
        }
        Ok(())
    }
}

/// Matched-filter outputs `[y_a(k), y_b(k)]` for epochs `-1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedFilterFrame {
    y: Vec<Vec2>,
}

impl MatchedFilterFrame {
    /// Wraps samples for epochs `-1..=N`, so `samples.len() == N + 2`.
    pub fn new(samples: Vec<Vec2>) -> Result<Self> {
        if samples.len() < 3 {
            return Err(Error::InvalidInput("a matched-filter frame spans at least 3 epochs".into()));
        }
        Ok(Self { y: samples })
    }

    pub fn frame_len(&self) -> usize {
        self.y.len() - 2
    }

    /// Sample at epoch `k`, `-1 <= k <= N`.
    pub fn at(&self, k: isize) -> Vec2 {
        self.y[(k + 1) as usize]
    }

    /// All samples, starting at epoch `-1`.
    pub fn samples(&self) -> &[Vec2] {
        &self.y
    }
}

/// Even/odd samples for epochs `0..=N`; epoch `N` is the trailing guard epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EvenOddFrame {
    pub y_e: Vec<C64>,
    pub y_o: Vec<C64>,
    pub delta: f64,
}

impl EvenOddFrame {
    pub fn frame_len(&self) -> usize {
        self.y_e.len() - 1
    }

    /// Decoder view: the tap matrices act on `[c_a, c_b]` directly and the
    /// unequal noise variances `sigma2/delta`, `sigma2/(1-delta)` become the
    /// metric weights `delta`, `1 - delta`.
    pub fn to_isi_frame(&self, h_a: C64, h_b: C64, sigma2: f64, modulation: Modulation) -> IsiFrame {
        let n = self.frame_len();
        let obs = (0..n).map(|k| Vec2::new(self.y_e[k], self.y_o[k])).collect();
        let tail = Vec2::new(self.y_e[n], self.y_o[n]);
        let model = IsiModel::even_odd(h_a, h_b, sigma2);
        IsiFrame {
            modulation,
            obs,
            tail: Some(tail),
            taps: TapSchedule::Fixed(model.taps()),
            sigma2,
            weights: [self.delta, 1.0 - self.delta],
        }
    }
}

/// Circularly-symmetric complex Gaussian with total variance `var`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

/// White 2-vectors with covariance `sigma2 * I` for epochs `-1..=N+1`.
///
/// Both front ends draw the same sequence from a given generator, so equal
/// seeds give the same physical noise realization.
fn white_sequence<R: Rng + ?Sized>(frame_len: usize, sigma2: f64, rng: &mut R) -> Vec<Vec2> {
    (0..frame_len + 3)
        .map(|_| Vec2::new(complex_gaussian(rng, sigma2), complex_gaussian(rng, sigma2)))
        .collect()
}

/// Noiseless matched-filter outputs for epochs `-1..=N`.
pub fn matched_filter_signal(frame: &SymbolFrame, params: &ChannelParams, cov: &NoiseCovariance) -> Vec<Vec2> {
    let h = params.gains();
    let prev = cov.lambda1 * h;
    let cur = cov.lambda0 * h;
    let next = cov.lambda_minus1() * h;
    let n = frame.len() as isize;
    (-1..=n)
        .map(|k| prev * frame.pair(k - 1) + cur * frame.pair(k) + next * frame.pair(k + 1))
        .collect()
}

/// Matched-filter frame with colored noise of covariance `sigma2 * Lambda`.
///
/// The noise is `w(k) = F0^H n(k) + F1^H n(k+1)` for white `n`, which has
/// exactly the required block-tridiagonal covariance.
pub fn simulate_matched_filter<R: Rng + ?Sized>(
    frame: &SymbolFrame,
    params: &ChannelParams,
    cov: &NoiseCovariance,
    wf: &WhiteningFilter,
    rng: &mut R,
) -> Result<MatchedFilterFrame> {
    params.check_frame(frame)?;
    let white = white_sequence(frame.len(), params.sigma2, rng);
    let noise = wf.color(&white);
    let y = matched_filter_signal(frame, params, cov)
        .into_iter()
        .zip(noise)
        .map(|(s, w)| s + w)
        .collect();
    MatchedFilterFrame::new(y)
}

/// Noiseless even/odd samples for epochs `0..=N`.
pub fn even_odd_signal(frame: &SymbolFrame, params: &ChannelParams) -> (Vec<C64>, Vec<C64>) {
    let n = frame.len() as isize;
    (0..=n)
        .map(|k| {
            let cur = frame.pair(k);
            let prev = frame.pair(k - 1);
            (
                params.h_a * cur[0] + params.h_b * prev[1],
                params.h_a * cur[0] + params.h_b * cur[1],
            )
        })
        .unzip()
}

/// Rectangular-pulse even/odd sampler. The two noises are independent with
/// variances `sigma2/delta` and `sigma2/(1-delta)`.
pub fn simulate_even_odd<R: Rng + ?Sized>(
    frame: &SymbolFrame,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<EvenOddFrame> {
    params.check_frame(frame)?;
    params.check_even_odd()?;
    let delta = params.delta();
    let white = white_sequence(frame.len(), params.sigma2, rng);
    let (mut y_e, mut y_o) = even_odd_signal(frame, params);
    // white[0] belongs to epoch -1.
    let (se, so) = (delta.sqrt().recip(), (1.0 - delta).sqrt().recip());
    for k in 0..y_e.len() {
        y_e[k] += white[k + 1][0] * se;
        y_o[k] += white[k + 1][1] * so;
    }
    Ok(EvenOddFrame { y_e, y_o, delta })
}

/// `y_a(k) = delta y_e(k) + (1-delta) y_o(k)`,
/// `y_b(k) = (1-delta) y_o(k) + delta y_e(k+1)`.
///
/// The two samples outside the even/odd window, `y_o(-1)` and `y_e(N+1)`,
/// are guard-epoch samples and are replaced by their noiseless value zero.
pub fn reconstruct_matched_from_even_odd(eo: &EvenOddFrame) -> MatchedFilterFrame {
    let d = eo.delta;
    let n = eo.frame_len() as isize;
    let ye = |k: isize| if (0..=n).contains(&k) { eo.y_e[k as usize] } else { GUARD };
    let yo = |k: isize| if (0..=n).contains(&k) { eo.y_o[k as usize] } else { GUARD };
    let y = (-1..=n)
        .map(|k| Vec2::new(ye(k) * d + yo(k) * (1.0 - d), yo(k) * (1.0 - d) + ye(k + 1) * d))
        .collect();
    MatchedFilterFrame { y }
}

/// Direct synthesis in the whitened domain: `r(k) = Psi(c(k), c(k-1)) + n(k)`
/// for epochs `0..=N`, the last being the trailing guard epoch.
pub fn simulate_whitened<R: Rng + ?Sized>(frame: &SymbolFrame, model: &IsiModel, rng: &mut R) -> Vec<Vec2> {
    let n = frame.len() as isize;
    (0..=n)
        .map(|k| {
            let noise = Vec2::new(complex_gaussian(rng, model.sigma2), complex_gaussian(rng, model.sigma2));
            model.b0 * frame.pair(k) + model.b1 * frame.pair(k - 1) + noise
        })
        .collect()
}

/// Decoder view of a directly synthesized whitened frame (epochs `0..=N`).
pub fn whitened_isi_frame(r: Vec<Vec2>, model: &IsiModel, modulation: Modulation) -> IsiFrame {
    let mut obs = r;
    let tail = obs.pop();
    IsiFrame {
        modulation,
        obs,
        tail,
        taps: TapSchedule::Fixed(Taps { b0: model.b0, b1: model.b1 }),
        sigma2: model.sigma2,
        weights: [1.0, 1.0],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::whitening::spectral_factorize;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn params(delta: f64, pulse: PulseShape, sigma2: f64, n: usize) -> ChannelParams {
        ChannelParams::new(
            c(1.0),
            c(1.0),
            sigma2,
            TimingOffsets::from_delta(delta).unwrap(),
            pulse,
            pulse,
            Modulation::Bpsk,
            n,
        )
        .unwrap()
    }

    #[test]
    fn noiseless_center_tap() {
        let p = params(0.25, PulseShape::Rectangular, 1.0, 1);
        let frame = SymbolFrame::new(Modulation::Bpsk, vec![0], vec![0]).unwrap();
        let y = matched_filter_signal(&frame, &p, &p.covariance());
        let y0 = y[1];
        assert!((y0[0] - c(1.75)).norm() < 1e-15);
        assert!((y0[1] - c(1.75)).norm() < 1e-15);
        // Adjacent-epoch leakage through rho_ba = 0.25.
        assert!((y[0][1] - c(0.25)).norm() < 1e-15);
        assert!((y[2][0] - c(0.25)).norm() < 1e-15);
    }

    #[test]
    fn zero_symbols_give_zero_signal() {
        let p = params(0.4, PulseShape::HalfSine, 1.0, 3);
        let frame = SymbolFrame::new(Modulation::Bpsk, vec![0; 3], vec![0; 3]).unwrap();
        let zero = SymbolFrame { modulation: Modulation::Bpsk, a: vec![], b: vec![] };
        assert!(matched_filter_signal(&zero, &p, &p.covariance()).iter().all(|v| v.norm() == 0.0));
        assert!(matched_filter_signal(&frame, &p, &p.covariance()).iter().any(|v| v.norm() > 0.0));
    }

    #[test]
    fn seeded_simulation_is_deterministic() {
        let p = params(0.3, PulseShape::HalfSine, 0.5, 16);
        let cov = p.covariance();
        let wf = spectral_factorize(&cov).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let frame = SymbolFrame::random(Modulation::Bpsk, 16, &mut rng);
        let a = simulate_matched_filter(&frame, &p, &cov, &wf, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = simulate_matched_filter(&frame, &p, &cov, &wf, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.frame_len(), 16);
    }

    #[test]
    fn noiseless_linearity_in_gains() {
        let mut p = params(0.35, PulseShape::HalfSine, 1.0, 6);
        let frame = SymbolFrame::random(Modulation::Qpsk, 6, &mut ChaCha8Rng::seed_from_u64(3));
        p.modulation = Modulation::Qpsk;
        let cov = p.covariance();
        let base = matched_filter_signal(&frame, &p, &cov);
        let mut scaled = p;
        scaled.h_a *= C64::new(0.5, -2.0);
        scaled.h_b *= C64::new(0.5, -2.0);
        let y = matched_filter_signal(&frame, &scaled, &cov);
        for (u, v) in base.iter().zip(&y) {
            assert!((u * C64::new(0.5, -2.0) - v).norm() < 1e-12);
        }
    }

    #[test]
    fn even_odd_guard_example() {
        // c_b(-1) = -1 is not a guard in our frames, so build the epoch by hand.
        let p = params(0.5, PulseShape::Rectangular, 1.0, 2);
        let frame = SymbolFrame::new(Modulation::Bpsk, vec![1, 0], vec![1, 0]).unwrap();
        let (ye, yo) = even_odd_signal(&frame, &p);
        // epoch 1: c_a = +1, c_b = +1, c_b(0) = -1
        assert_eq!(ye[1], c(0.0));
        assert_eq!(yo[1], c(2.0));
    }

    #[test]
    fn even_odd_rejects_bad_configs() {
        let frame = SymbolFrame::new(Modulation::Bpsk, vec![0], vec![0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let sync = params(0.0, PulseShape::Rectangular, 1.0, 1);
        assert!(matches!(simulate_even_odd(&frame, &sync, &mut rng), Err(Error::Unsupported(_))));
        let hs = params(0.5, PulseShape::HalfSine, 1.0, 1);
        assert!(matches!(simulate_even_odd(&frame, &hs, &mut rng), Err(Error::Unsupported(_))));
    }

    #[test]
    fn even_odd_noise_variances() {
        let n = 1_000_000;
        for (delta, sigma2) in [(0.25, 0.8), (0.5, 1.0)] {
            let p = params(delta, PulseShape::Rectangular, sigma2, n);
            let frame = SymbolFrame::new(Modulation::Bpsk, vec![0; n], vec![0; n]).unwrap();
            let (ye, yo) = even_odd_signal(&frame, &p);
            let eo = simulate_even_odd(&frame, &p, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
            let var = |y: &[C64], s: &[C64]| {
                y.iter().zip(s).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / y.len() as f64
            };
            let ve = var(&eo.y_e, &ye);
            let vo = var(&eo.y_o, &yo);
            assert!((ve / (sigma2 / delta) - 1.0).abs() < 0.01, "{ve}");
            assert!((vo / (sigma2 / (1.0 - delta)) - 1.0).abs() < 0.01, "{vo}");
            if delta == 0.5 {
                assert!((ve / vo - 1.0).abs() < 0.01);
            }
        }
    }

    #[test]
    fn reconstruction_of_constant_and_zero() {
        let eo = EvenOddFrame { y_e: vec![c(3.0); 5], y_o: vec![c(3.0); 5], delta: 0.5 };
        let mf = reconstruct_matched_from_even_odd(&eo);
        for k in 0..=4 {
            assert_eq!(mf.at(k)[0], c(3.0));
        }
        let zero = EvenOddFrame { y_e: vec![GUARD; 4], y_o: vec![GUARD; 4], delta: 0.3 };
        assert!(reconstruct_matched_from_even_odd(&zero).samples().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn noiseless_front_ends_agree() {
        for delta in [0.2, 0.5, 0.85] {
            let mut p = params(delta, PulseShape::Rectangular, 1.0, 12);
            p.h_a = C64::new(0.8, 0.3);
            p.h_b = C64::new(-0.4, 1.1);
            p.modulation = Modulation::Qpsk;
            let frame = SymbolFrame::random(Modulation::Qpsk, 12, &mut ChaCha8Rng::seed_from_u64(5));
            let (y_e, y_o) = even_odd_signal(&frame, &p);
            let eo = EvenOddFrame { y_e, y_o, delta };
            let rebuilt = reconstruct_matched_from_even_odd(&eo);
            let direct = matched_filter_signal(&frame, &p, &p.covariance());
            for (u, v) in rebuilt.samples().iter().zip(&direct) {
                assert!((u - v).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn same_seed_gives_same_realization_in_both_front_ends() {
        let delta = 0.3;
        let p = params(delta, PulseShape::Rectangular, 0.7, 10);
        let cov = p.covariance();
        let wf = spectral_factorize(&cov).unwrap();
        let frame = SymbolFrame::random(Modulation::Bpsk, 10, &mut ChaCha8Rng::seed_from_u64(2));
        let eo = simulate_even_odd(&frame, &p, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        let mf = simulate_matched_filter(&frame, &p, &cov, &wf, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        let rebuilt = reconstruct_matched_from_even_odd(&eo);
        // Epochs whose samples lie entirely inside the even/odd window match.
        for k in 0..10 {
            assert!((rebuilt.at(k) - mf.at(k)).norm() < 1e-12, "epoch {k}");
        }
    }
}
