//! Brute-force MAP references: every candidate sequence is scored directly
//! and the pair marginals are summed out. No trellis code is reused.

use nalgebra::{DMatrix, DVector};

use crate::bcjr::{AppTable, Domain, IsiFrame, SymbolPair};
use crate::front_end::{ChannelParams, MatchedFilterFrame, GUARD};
use crate::modulation::Modulation;
use crate::signal_model::NoiseCovariance;
use crate::{Error, Result, Vec2, C64};

/// Largest number of candidate sequences an oracle will enumerate.
pub const MAX_CANDIDATES: u128 = 1 << 24;

#[derive(Debug, Clone)]
pub struct ExhaustiveResult {
    pub marginals: AppTable,
    /// Log-likelihood of every candidate, indexed by the base-`M` number whose
    /// digits (most significant first) are `a(0), b(0), a(1), b(1), ...`.
    pub log_likelihoods: Vec<f64>,
    modulation: Modulation,
    frame_len: usize,
}

impl ExhaustiveResult {
    pub fn candidate(&self, index: usize) -> Vec<SymbolPair> {
        decode_candidate(index, self.modulation.order(), self.frame_len)
    }

    /// Jointly most likely sequence.
    pub fn map_sequence(&self) -> Vec<SymbolPair> {
        let best = self
            .log_likelihoods
            .iter()
            .enumerate()
            .fold(0, |best, (i, v)| if *v > self.log_likelihoods[best] { i } else { best });
        self.candidate(best)
    }
}

fn decode_candidate(mut index: usize, m: usize, n: usize) -> Vec<SymbolPair> {
    let mut digits = vec![0; 2 * n];
    for d in digits.iter_mut().rev() {
        *d = index % m;
        index /= m;
    }
    digits.chunks(2).map(|c| SymbolPair { a: c[0], b: c[1] }).collect()
}

fn candidate_count(m: usize, n: usize) -> Result<usize> {
    let count = (m as u128).checked_pow(2 * n as u32).unwrap_or(u128::MAX);
    if count > MAX_CANDIDATES {
        return Err(Error::TooLarge { candidates: count, cap: MAX_CANDIDATES });
    }
    Ok(count as usize)
}

fn marginalize(log_lik: &[f64], modulation: Modulation, n: usize) -> Result<AppTable> {
    let m = modulation.order();
    let top = log_lik.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut marg = vec![0.0; n * m * m];
    for (i, ll) in log_lik.iter().enumerate() {
        let w = (ll - top).exp();
        for (k, p) in decode_candidate(i, m, n).iter().enumerate() {
            marg[k * m * m + p.a * m + p.b] += w;
        }
    }
    for chunk in marg.chunks_mut(m * m) {
        let s: f64 = chunk.iter().sum();
        chunk.iter_mut().for_each(|v| *v /= s);
    }
    AppTable::new(modulation, Domain::Linear, marg)
}

/// Exhaustive MAP on a whitened-domain frame, scoring each sequence with the
/// white Gaussian likelihood of `r(k) = b0 c(k) + b1 c(k-1) + n(k)`.
pub fn exhaustive_map_whitened(frame: &IsiFrame) -> Result<ExhaustiveResult> {
    let n = frame.obs.len();
    let modulation = frame.modulation;
    let m = modulation.order();
    let count = candidate_count(m, n)?;
    let pts = modulation.points();
    let guard = Vec2::new(GUARD, GUARD);

    let mut log_lik = Vec::with_capacity(count);
    let mut seq = vec![guard; n];
    for i in 0..count {
        for (k, p) in decode_candidate(i, m, n).into_iter().enumerate() {
            seq[k] = Vec2::new(pts[p.a], pts[p.b]);
        }
        let mut ll = 0.0;
        for k in 0..=n {
            let (r, cur) = match (k < n, frame.tail) {
                (true, _) => (frame.obs[k], seq[k]),
                (false, Some(t)) => (t, guard),
                (false, None) => break,
            };
            let prev = if k == 0 { guard } else { seq[k - 1] };
            let taps = frame.taps.at(k);
            let d = r - (taps.b0 * cur + taps.b1 * prev);
            ll -= (frame.weights[0] * d[0].norm_sqr() + frame.weights[1] * d[1].norm_sqr()) / frame.sigma2;
        }
        log_lik.push(ll);
    }
    let marginals = marginalize(&log_lik, modulation, n)?;
    Ok(ExhaustiveResult { marginals, log_likelihoods: log_lik, modulation, frame_len: n })
}

/// Exhaustive MAP directly on matched-filter samples with their colored
/// noise, using the dense frame covariance `sigma2 * [Lambda(k - l)]` over
/// epochs `-1..=N`.
pub fn exhaustive_map_colored(
    y: &MatchedFilterFrame,
    params: &ChannelParams,
    cov: &NoiseCovariance,
) -> Result<ExhaustiveResult> {
    let n = y.frame_len();
    let modulation = params.modulation;
    let m = modulation.order();
    let count = candidate_count(m, n)?;
    let pts = modulation.points();
    let epochs = n + 2;
    let dim = 2 * epochs;

    // Scalar index of (epoch e in -1..=N, component i): 2 (e + 1) + i.
    let mut r = DMatrix::<C64>::zeros(dim, dim);
    for ek in 0..epochs {
        for el in 0..epochs {
            let block = cov.at_lag(ek as i64 - el as i64);
            for i in 0..2 {
                for j in 0..2 {
                    r[(2 * ek + i, 2 * el + j)] = block[(i, j)];
                }
            }
        }
    }
    // Signal map from data symbols x = [a(0), b(0), ..., a(N-1), b(N-1)].
    let gains = [params.h_a, params.h_b];
    let mut s = DMatrix::<C64>::zeros(dim, 2 * n);
    for row in 0..dim {
        for col in 0..2 * n {
            s[(row, col)] = r[(row, col + 2)] * gains[col % 2];
        }
    }
    let chol = r.cholesky().ok_or(Error::DegenerateChannel { rho_ab_abs: cov.rho_ab().norm() })?;
    let l = chol.l();
    let y_vec = DVector::<C64>::from_iterator(dim, y.samples().iter().flat_map(|v| [v[0], v[1]]));
    let wy = l.solve_lower_triangular(&y_vec).expect("cholesky factor is invertible");
    let ws = l.solve_lower_triangular(&s).expect("cholesky factor is invertible");

    let mut log_lik = Vec::with_capacity(count);
    let mut x = DVector::<C64>::zeros(2 * n);
    for i in 0..count {
        for (k, p) in decode_candidate(i, m, n).into_iter().enumerate() {
            x[2 * k] = pts[p.a];
            x[2 * k + 1] = pts[p.b];
        }
        let resid = &wy - &ws * &x;
        log_lik.push(-resid.norm_squared() / params.sigma2);
    }
    let marginals = marginalize(&log_lik, modulation, n)?;
    Ok(ExhaustiveResult { marginals, log_likelihoods: log_lik, modulation, frame_len: n })
}
