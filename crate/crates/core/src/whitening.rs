//! Spectral factorization of the matched-filter noise spectrum and the
//! whitening filters that turn matched-filter frames into a vector ISI
//! channel with one symbol of memory.
//!
//! The spectrum `Omega(z) = Lambda(-1) z + Lambda(0) + Lambda(1) z^-1`
//! factors as `F^H(z^-1) F(z)` with
//!
//! ```text
//! F(z) = F0 + F1 z^-1,  F0 = [[f_aa, 0], [f_ba, f_bb]],  F1 = [[0, f_ab], [0, 0]].
//! ```
//!
//! For rectangular pulses `rho_ab + rho_ba = 1` and `det F(z)` vanishes on
//! the unit circle: the stationary inverse filter is only marginally stable
//! and a boundary error at the frame tail never decays. [`FrameWhitener`]
//! whitens a finite frame exactly instead, with time-varying taps.

use crate::bcjr::{IsiFrame, TapSchedule};
use crate::front_end::MatchedFilterFrame;
use crate::modulation::Modulation;
use crate::signal_model::NoiseCovariance;
use crate::{Error, Mat2, Result, Vec2, C64};

/// Reconstruction tolerance used when selecting the factorization root.
const ROOT_CHECK_TOL: f64 = 1e-9;

/// Largest entrywise modulus of `x - y`.
pub(crate) fn max_entry_diff(x: &Mat2, y: &Mat2) -> f64 {
    (x - y).iter().map(|v| v.norm()).fold(0.0, f64::max)
}
/// `|rho_ab| + |rho_ba|` this close to 1 is treated as the marginal case.
const MARGINAL_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WhiteningFilter {
    pub f_aa: C64,
    pub f_ab: C64,
    pub f_ba: C64,
    pub f_bb: C64,
}

impl WhiteningFilter {
    pub fn identity() -> Self {
        let (one, zero) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        Self { f_aa: one, f_ab: zero, f_ba: zero, f_bb: one }
    }

    pub fn f0(&self) -> Mat2 {
        Mat2::new(self.f_aa, C64::new(0.0, 0.0), self.f_ba, self.f_bb)
    }

    pub fn f1(&self) -> Mat2 {
        let z = C64::new(0.0, 0.0);
        Mat2::new(z, self.f_ab, z, z)
    }

    /// `(F0^H F0 + F1^H F1, F0^H F1)`, which must equal `(Lambda(0), Lambda(1))`.
    pub fn reconstruct(&self) -> (Mat2, Mat2) {
        let (f0, f1) = (self.f0(), self.f1());
        (f0.adjoint() * f0 + f1.adjoint() * f1, f0.adjoint() * f1)
    }

    /// Magnitude of the nonzero pole of the inverse filter,
    /// `|f_ab f_ba| / (f_aa f_bb)`. Below 1 for strictly minimum-phase factors,
    /// exactly 1 for rectangular pulses.
    pub fn pole_magnitude(&self) -> f64 {
        (self.f_ab * self.f_ba).norm() / (self.f_aa * self.f_bb).norm()
    }

    /// Colors a white sequence: `w(k) = F0^H n(k) + F1^H n(k+1)`.
    /// The output is one element shorter than the input.
    pub fn color(&self, white: &[Vec2]) -> Vec<Vec2> {
        let (f0h, f1h) = (self.f0().adjoint(), self.f1().adjoint());
        white.windows(2).map(|w| f0h * w[0] + f1h * w[1]).collect()
    }
}

/// Minimum-phase factor of the noise spectrum.
///
/// With `a = f_aa^2`, `p = |rho_ba|^2`, `q = |rho_ab|^2` the factor equations
/// reduce to `a^2 + a (q - p - 1) + p = 0`, `f_bb^2 = (a - p) / a`,
/// `f_ab = rho_ba / f_aa` and `f_ba = conj(rho_ab) / f_bb`. Both roots are
/// tried and the admissible minimum-phase one is kept after checking the
/// reconstruction.
pub fn spectral_factorize(cov: &NoiseCovariance) -> Result<WhiteningFilter> {
    let rho_ab = cov.rho_ab();
    let rho_ba = cov.rho_ba();
    let (sab, sba) = (rho_ab.norm(), rho_ba.norm());
    if sab >= 1.0 {
        return Err(Error::DegenerateChannel { rho_ab_abs: sab });
    }
    let slack = 1.0 - (sab + sba);
    if slack < -MARGINAL_TOL {
        return Err(Error::FactorizationFailure(format!(
            "|rho_ab| + |rho_ba| = {} > 1 is not a valid correlation spectrum",
            sab + sba
        )));
    }
    let (p, q) = (sba * sba, sab * sab);
    let b = 1.0 + p - q;
    // Factored discriminant: (1-s)(1+s)(1-sab+sba)(1+sab-sba) with s = sab+sba.
    let disc = if slack <= MARGINAL_TOL {
        0.0
    } else {
        slack * (1.0 + sab + sba) * (1.0 - sab + sba) * (1.0 + sab - sba)
    };
    let big = 0.5 * (b + disc.sqrt());
    let small = if big > 0.0 { p / big } else { 0.0 };

    let candidates = [big, small].into_iter().filter_map(|a| {
        if a <= p || a <= 0.0 {
            return None;
        }
        let f_aa = a.sqrt();
        let f_bb = ((a - p) / a).sqrt();
        let wf = WhiteningFilter {
            f_aa: C64::new(f_aa, 0.0),
            f_ab: rho_ba / f_aa,
            f_ba: rho_ab.conj() / f_bb,
            f_bb: C64::new(f_bb, 0.0),
        };
        let (l0, l1) = wf.reconstruct();
        let err = max_entry_diff(&l0, &cov.lambda0).max(max_entry_diff(&l1, &cov.lambda1));
        let min_phase = wf.pole_magnitude() <= 1.0 + 1e-9;
        (err <= ROOT_CHECK_TOL && min_phase).then_some(wf)
    });
    candidates
        .into_iter()
        .next()
        .ok_or_else(|| Error::FactorizationFailure(format!("no admissible root for rho_ab={rho_ab}, rho_ba={rho_ba}")))
}

/// Whitens matched-filter samples `y(k) = F0^H r(k) + F1^H r(k+1)` by backward
/// recursion, seeding `r(last + 1)` with `boundary`.
pub fn whiten_with_boundary(y: &[Vec2], wf: &WhiteningFilter, boundary: Vec2) -> Vec<Vec2> {
    let (f_aa, f_ab, f_ba, f_bb) = (wf.f_aa.conj(), wf.f_ab.conj(), wf.f_ba.conj(), wf.f_bb.conj());
    let mut out = vec![Vec2::zeros(); y.len()];
    let mut next = boundary;
    for (k, yk) in y.iter().enumerate().rev() {
        let rb = (yk[1] - f_ab * next[0]) / f_bb;
        let ra = (yk[0] - f_ba * rb) / f_aa;
        next = Vec2::new(ra, rb);
        out[k] = next;
    }
    out
}

/// Stationary whitening of a matched-filter frame (epochs `-1..=N`).
///
/// The sample beyond the trailing guard epoch is `r(N+1) = Psi(guard, guard) +
/// n(N+1)`; it is seeded with its noiseless value, zero. The neglected noise
/// term decays by [`WhiteningFilter::pole_magnitude`] per epoch towards the
/// frame start, so this is only accurate away from the tail and not at all
/// for rectangular pulses.
pub fn whiten(y: &MatchedFilterFrame, wf: &WhiteningFilter) -> Vec<Vec2> {
    whiten_with_boundary(y.samples(), wf, Vec2::zeros())
}

/// Tap matrices of one epoch: `r(k) = b0 c(k) + b1 c(k-1) + n(k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Taps {
    pub b0: Mat2,
    pub b1: Mat2,
}

/// Equivalent vector ISI channel `r(k) = Psi(c(k), c(k-1)) + n(k)` with white
/// noise of covariance `sigma2 * I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsiModel {
    pub b0: Mat2,
    pub b1: Mat2,
    pub sigma2: f64,
}

impl IsiModel {
    pub fn from_filter(wf: &WhiteningFilter, h_a: C64, h_b: C64, sigma2: f64) -> Self {
        let h = Mat2::from_diagonal(&Vec2::new(h_a, h_b));
        Self { b0: wf.f0() * h, b1: wf.f1() * h, sigma2 }
    }

    /// Rectangular even/odd taps acting directly on the symbol pairs.
    pub fn even_odd(h_a: C64, h_b: C64, sigma2: f64) -> Self {
        let z = C64::new(0.0, 0.0);
        Self { b0: Mat2::new(h_a, z, h_a, h_b), b1: Mat2::new(z, h_b, z, z), sigma2 }
    }

    pub fn taps(&self) -> Taps {
        Taps { b0: self.b0, b1: self.b1 }
    }
}

/// `Psi(c_k, c_prev) = b0 c_k + b1 c_prev`.
pub fn isi_output(model: &IsiModel, c_k: Vec2, c_prev: Vec2) -> Vec2 {
    model.b0 * c_k + model.b1 * c_prev
}

/// Exact whitening of a finite matched-filter frame.
///
/// In the interleaved scalar order `a(-1), b(-1), a(0), b(0), ...` the frame
/// covariance `R` is tridiagonal, so `R = U U^H` with `U` upper bidiagonal.
/// Then `z = U^-1 y = U^H H c + n` with white `n`, and `U^H` has the same
/// lower-bidiagonal shape as the stationary channel: `z_a(k)` sees `c_a(k)`
/// and `c_b(k-1)`, `z_b(k)` sees `c_b(k)` and `c_a(k)`.
#[derive(Debug, Clone)]
pub struct FrameWhitener {
    frame_len: usize,
    h_a: C64,
    h_b: C64,
    /// Diagonal of `U` (real, positive).
    diag: Vec<f64>,
    /// Superdiagonal of `U`, `sup[j] = U[j][j+1]`.
    sup: Vec<C64>,
}

impl FrameWhitener {
    pub fn new(cov: &NoiseCovariance, h_a: C64, h_b: C64, frame_len: usize) -> Result<Self> {
        if cov.rho_ab().norm() >= 1.0 {
            return Err(Error::DegenerateChannel { rho_ab_abs: cov.rho_ab().norm() });
        }
        let len = 2 * (frame_len + 2);
        // R[j][j+1]: rho_ab inside an epoch, conj(rho_ba) from b(k-1) to a(k).
        let off = |j: usize| if j.is_multiple_of(2) { cov.rho_ab() } else { cov.rho_ba().conj() };
        let mut diag = vec![0.0; len];
        let mut sup = vec![C64::new(0.0, 0.0); len - 1];
        diag[len - 1] = 1.0;
        for j in (0..len - 1).rev() {
            sup[j] = off(j) / diag[j + 1];
            let pivot = 1.0 - sup[j].norm_sqr();
            if pivot.is_nan() || pivot <= 0.0 {
                return Err(Error::FactorizationFailure(format!(
                    "frame covariance not positive definite at row {j}"
                )));
            }
            diag[j] = pivot.sqrt();
        }
        Ok(Self { frame_len, h_a, h_b, diag, sup })
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    /// Whitened samples for epochs `-1..=N`.
    pub fn whiten(&self, y: &MatchedFilterFrame) -> Result<Vec<Vec2>> {
        if y.frame_len() != self.frame_len {
            return Err(Error::InvalidInput(format!(
                "frame length {} does not match whitener length {}",
                y.frame_len(),
                self.frame_len
            )));
        }
        let len = self.diag.len();
        let mut z = vec![C64::new(0.0, 0.0); len];
        let mut next = C64::new(0.0, 0.0);
        for j in (0..len).rev() {
            let yj = y.samples()[j / 2][j % 2];
            let s = if j + 1 < len { self.sup[j] * next } else { C64::new(0.0, 0.0) };
            next = (yj - s) / self.diag[j];
            z[j] = next;
        }
        Ok(z.chunks(2).map(|c| Vec2::new(c[0], c[1])).collect())
    }

    /// Taps of epoch `k` in `0..=N`.
    pub fn taps_at(&self, k: usize) -> Taps {
        let ja = 2 * (k + 1);
        let jb = ja + 1;
        let z = C64::new(0.0, 0.0);
        let b0 = Mat2::new(
            self.h_a * self.diag[ja],
            z,
            self.h_a * self.sup[ja].conj(),
            self.h_b * self.diag[jb],
        );
        let b1 = Mat2::new(z, self.h_b * self.sup[ja - 1].conj(), z, z);
        Taps { b0, b1 }
    }

    /// Decoder view of a matched-filter frame: epochs `0..N` as data, epoch `N`
    /// as the tail. Epoch `-1` carries no signal after whitening and is dropped.
    pub fn isi_frame(&self, y: &MatchedFilterFrame, sigma2: f64, modulation: Modulation) -> Result<IsiFrame> {
        let z = self.whiten(y)?;
        let n = self.frame_len;
        Ok(IsiFrame {
            modulation,
            obs: z[1..=n].to_vec(),
            tail: Some(z[n + 1]),
            taps: TapSchedule::PerEpoch((0..=n).map(|k| self.taps_at(k)).collect()),
            sigma2,
            weights: [1.0, 1.0],
        })
    }
}

/// Decoder view of a stationary-whitened frame (see [`whiten`]).
pub fn stationary_isi_frame(
    y: &MatchedFilterFrame,
    wf: &WhiteningFilter,
    model: &IsiModel,
    modulation: Modulation,
) -> IsiFrame {
    let r = whiten(y, wf);
    let n = y.frame_len();
    IsiFrame {
        modulation,
        obs: r[1..=n].to_vec(),
        tail: Some(r[n + 1]),
        taps: TapSchedule::Fixed(model.taps()),
        sigma2: model.sigma2,
        weights: [1.0, 1.0],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::front_end::{complex_gaussian, SymbolFrame};
    use crate::signal_model::{cross_correlations, noise_covariance, CrossCorrelations, PulseShape, TimingOffsets};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn max_reconstruction_error(wf: &WhiteningFilter, cov: &NoiseCovariance) -> f64 {
        let (l0, l1) = wf.reconstruct();
        max_entry_diff(&l0, &cov.lambda0).max(max_entry_diff(&l1, &cov.lambda1))
    }

    #[test]
    fn equal_half_correlations_give_equal_coefficients() {
        let wf = spectral_factorize(&noise_covariance(CrossCorrelations::real(0.5, 0.5))).unwrap();
        for f in [wf.f_aa, wf.f_ab, wf.f_ba, wf.f_bb] {
            assert!((f - c(FRAC_1_SQRT_2)).norm() <= 1e-12, "{f}");
        }
    }

    #[test]
    fn white_noise_needs_no_whitening() {
        let wf = spectral_factorize(&noise_covariance(CrossCorrelations::real(0.0, 0.0))).unwrap();
        assert_eq!(wf, WhiteningFilter::identity());
    }

    #[test]
    fn singular_lambda0_is_degenerate() {
        let err = spectral_factorize(&noise_covariance(CrossCorrelations::real(1.0, 0.0)));
        assert!(matches!(err, Err(Error::DegenerateChannel { .. })));
    }

    #[test]
    fn invalid_spectrum_has_no_root() {
        let err = spectral_factorize(&noise_covariance(CrossCorrelations::real(0.7, 0.6)));
        assert!(matches!(err, Err(Error::FactorizationFailure(_))));
    }

    #[test]
    fn rectangular_factor_is_marginal() {
        for delta in [0.1, 0.25, 0.5, 0.9] {
            let cov = noise_covariance(CrossCorrelations::real(1.0 - delta, delta));
            let wf = spectral_factorize(&cov).unwrap();
            assert!((wf.f_aa.re - delta.sqrt()).abs() < 1e-14);
            assert!((wf.f_bb.re - (1.0 - delta).sqrt()).abs() < 1e-14);
            assert!((wf.pole_magnitude() - 1.0).abs() < 1e-12);
            assert!(max_reconstruction_error(&wf, &cov) < 1e-14);
        }
    }

    #[test]
    fn half_sine_factor_is_strictly_minimum_phase() {
        let rho = cross_correlations(PulseShape::HalfSine, PulseShape::HalfSine, TimingOffsets::from_delta(0.5).unwrap());
        let wf = spectral_factorize(&noise_covariance(rho)).unwrap();
        assert!(wf.pole_magnitude() < 0.2);
        assert!(wf.f_aa.re > 0.0 && wf.f_bb.re > 0.0 && wf.f_aa.im == 0.0);
    }

    #[test]
    fn identity_whitening_is_a_no_op() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y: Vec<Vec2> = (0..10).map(|_| Vec2::new(complex_gaussian(&mut rng, 1.0), complex_gaussian(&mut rng, 1.0))).collect();
        assert_eq!(whiten_with_boundary(&y, &WhiteningFilter::identity(), Vec2::zeros()), y);
        let zero = vec![Vec2::zeros(); 6];
        let wf = spectral_factorize(&noise_covariance(CrossCorrelations::real(0.3, 0.4))).unwrap();
        assert!(whiten_with_boundary(&zero, &wf, Vec2::zeros()).iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn whitening_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for rho in [CrossCorrelations::real(0.3, 0.2), CrossCorrelations::real(0.75, 0.25), CrossCorrelations::new(C64::new(0.2, 0.3), C64::new(-0.1, 0.25))] {
            let wf = spectral_factorize(&noise_covariance(rho)).unwrap();
            let r: Vec<Vec2> = (0..200).map(|_| Vec2::new(complex_gaussian(&mut rng, 1.0), complex_gaussian(&mut rng, 1.0))).collect();
            let y = wf.color(&r);
            let back = whiten_with_boundary(&y, &wf, r[r.len() - 1]);
            for (u, v) in back.iter().zip(&r) {
                assert!((u - v).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn isi_output_examples() {
        let eo = IsiModel::even_odd(c(1.0), c(1.0), 1.0);
        let out = isi_output(&eo, Vec2::new(c(1.0), c(1.0)), Vec2::new(c(1.0), c(-1.0)));
        assert_eq!(out, Vec2::new(c(0.0), c(2.0)));
        assert_eq!(isi_output(&eo, Vec2::zeros(), Vec2::zeros()), Vec2::zeros());
    }

    #[test]
    fn isi_output_ignores_previous_a_symbol() {
        let rho = cross_correlations(PulseShape::HalfSine, PulseShape::HalfSine, TimingOffsets::from_delta(0.3).unwrap());
        let wf = spectral_factorize(&noise_covariance(rho)).unwrap();
        for modulation in [Modulation::Bpsk, Modulation::Qpsk] {
            let pts = modulation.points();
            for model in [IsiModel::from_filter(&wf, C64::new(0.9, 0.2), C64::new(-0.3, 1.0), 1.0), IsiModel::even_odd(c(1.0), c(1.0), 1.0)] {
                for &ca in &pts {
                    for &cb in &pts {
                        for &pb in &pts {
                            let outs: Vec<Vec2> = pts.iter().map(|&pa| isi_output(&model, Vec2::new(ca, cb), Vec2::new(pa, pb))).collect();
                            assert!(outs.iter().all(|o| *o == outs[0]));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn frame_whitener_taps_converge_to_stationary_factor() {
        let rho = cross_correlations(PulseShape::HalfSine, PulseShape::HalfSine, TimingOffsets::from_delta(0.4).unwrap());
        let cov = noise_covariance(rho);
        let wf = spectral_factorize(&cov).unwrap();
        let (ha, hb) = (C64::new(0.7, -0.2), C64::new(1.1, 0.5));
        let fw = FrameWhitener::new(&cov, ha, hb, 60).unwrap();
        let stationary = IsiModel::from_filter(&wf, ha, hb, 1.0);
        let mid = fw.taps_at(10);
        assert!(max_entry_diff(&mid.b0, &stationary.b0) < 1e-10);
        assert!(max_entry_diff(&mid.b1, &stationary.b1) < 1e-10);
    }

    #[test]
    fn frame_whitener_matches_stationary_away_from_tail() {
        let n = 40;
        let rho = cross_correlations(PulseShape::HalfSine, PulseShape::HalfSine, TimingOffsets::from_delta(0.5).unwrap());
        let cov = noise_covariance(rho);
        let wf = spectral_factorize(&cov).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let y: Vec<Vec2> = (0..n + 2).map(|_| Vec2::new(complex_gaussian(&mut rng, 1.0), complex_gaussian(&mut rng, 1.0))).collect();
        let frame = MatchedFilterFrame::new(y).unwrap();
        let exact = FrameWhitener::new(&cov, c(1.0), c(1.0), n).unwrap().whiten(&frame).unwrap();
        let approx = whiten(&frame, &wf);
        for k in 0..20 {
            assert!((exact[k] - approx[k]).norm() < 1e-9, "epoch {k}");
        }
    }

    #[test]
    fn frame_whitener_inverts_signal_model() {
        // Noiseless frame: z must equal U^H H c exactly, i.e. the tap model.
        let n = 7;
        let delta = 0.25;
        let cov = noise_covariance(CrossCorrelations::real(1.0 - delta, delta));
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let frame = SymbolFrame::random(Modulation::Qpsk, n, &mut rng);
        let (ha, hb) = (C64::new(0.6, 0.8), C64::new(1.0, -0.3));
        let params = crate::front_end::ChannelParams::new(ha, hb, 1.0, TimingOffsets::from_delta(delta).unwrap(), PulseShape::Rectangular, PulseShape::Rectangular, Modulation::Qpsk, n).unwrap();
        let y = crate::front_end::matched_filter_signal(&frame, &params, &cov);
        let fw = FrameWhitener::new(&cov, ha, hb, n).unwrap();
        let z = fw.whiten(&MatchedFilterFrame::new(y).unwrap()).unwrap();
        assert!(z[0].norm() < 1e-12);
        for k in 0..=n {
            let t = fw.taps_at(k);
            let pred = t.b0 * frame.pair(k as isize) + t.b1 * frame.pair(k as isize - 1);
            assert!((pred - z[k + 1]).norm() < 1e-10, "epoch {k}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn factor_reconstructs_random_covariances(
            mag_ab in 0.0f64..0.999, frac in 0.0f64..=1.0,
            ph_ab in -3.2f64..3.2, ph_ba in -3.2f64..3.2,
        ) {
            let mag_ba = frac * (1.0 - mag_ab);
            let rho = CrossCorrelations::new(C64::from_polar(mag_ab, ph_ab), C64::from_polar(mag_ba, ph_ba));
            let cov = noise_covariance(rho);
            let wf = spectral_factorize(&cov).unwrap();
            prop_assert!(max_reconstruction_error(&wf, &cov) <= 1e-12);
            prop_assert!(wf.f_aa.re > 0.0 && wf.f_bb.re > 0.0);
            prop_assert!(wf.pole_magnitude() <= 1.0 + 1e-9);
        }
    }
}
