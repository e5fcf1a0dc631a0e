use crate::{Error, Result};

use super::trellis::LogMetrics;
use super::{AppTable, Domain, IsiFrame};

/// Jacobian logarithm `ln(e^a + e^b)`.
#[inline]
pub fn max_star(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

#[inline]
fn max_only(a: f64, b: f64) -> f64 {
    a.max(b)
}

/// Linear-domain BCJR. `alpha` and `beta` are normalized every epoch; a
/// column that still underflows to zero is reported as [`Error::Underflow`].
pub fn forward_backward(frame: &IsiFrame) -> Result<AppTable> {
    frame.validate()?;
    let lm = LogMetrics::new(frame);
    let gamma: Vec<f64> = lm.branch.iter().map(|v| v.exp()).collect();
    let tail: Option<Vec<f64>> = lm.tail.as_ref().map(|t| t.iter().map(|v| v.exp()).collect());
    let app = linear_recursions(lm.m, lm.epochs, &gamma, tail.as_deref())?;
    AppTable::new(frame.modulation, Domain::Linear, app)
}

fn linear_recursions(m: usize, n: usize, gamma: &[f64], tail: Option<&[f64]>) -> Result<Vec<f64>> {
    let m2 = m * m;
    let g = |k: usize| &gamma[k * m2 * m..(k + 1) * m2 * m];

    let normalize = |col: &mut [f64], epoch: usize| -> Result<()> {
        let sum: f64 = col.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(Error::Underflow { epoch });
        }
        col.iter_mut().for_each(|v| *v /= sum);
        Ok(())
    };

    let mut alpha = vec![0.0; (n + 1) * m];
    alpha[0] = 1.0;
    for k in 0..n {
        let (cur, next) = alpha.split_at_mut((k + 1) * m);
        let cur = &cur[k * m..];
        let next = &mut next[..m];
        let gk = g(k);
        for (s, &a) in cur.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for ia in 0..m {
                for ib in 0..m {
                    next[ib] += a * gk[s * m2 + ia * m + ib];
                }
            }
        }
        normalize(next, k)?;
    }

    let mut beta = vec![0.0; (n + 1) * m];
    match tail {
        Some(t) => beta[n * m..].copy_from_slice(t),
        None => beta[n * m..].fill(1.0),
    }
    normalize(&mut beta[n * m..], n)?;
    for k in (1..n).rev() {
        let (cur, next) = beta.split_at_mut((k + 1) * m);
        let cur = &mut cur[k * m..];
        let next = &next[..m];
        let gk = g(k);
        for (s, out) in cur.iter_mut().enumerate() {
            let mut acc = 0.0;
            for ia in 0..m {
                for ib in 0..m {
                    acc += gk[s * m2 + ia * m + ib] * next[ib];
                }
            }
            *out = acc;
        }
        normalize(cur, k)?;
    }

    let mut app = vec![0.0; n * m2];
    for k in 0..n {
        let out = &mut app[k * m2..(k + 1) * m2];
        let gk = g(k);
        let a = &alpha[k * m..(k + 1) * m];
        let b = &beta[(k + 1) * m..(k + 2) * m];
        for (s, &as_) in a.iter().enumerate() {
            for ia in 0..m {
                for ib in 0..m {
                    out[ia * m + ib] += as_ * gk[s * m2 + ia * m + ib] * b[ib];
                }
            }
        }
        normalize(out, k)?;
    }
    Ok(app)
}

/// Log-MAP: the BCJR recursions with `+` replaced by [`max_star`].
pub fn forward_backward_log(frame: &IsiFrame) -> Result<AppTable> {
    frame.validate()?;
    Ok(log_domain(frame, max_star))
}

/// Max-Log-MAP: [`max_star`] replaced by `max`. The resulting table is
/// normalized like a distribution but only approximates the posteriors.
pub fn max_log(frame: &IsiFrame) -> Result<AppTable> {
    frame.validate()?;
    Ok(log_domain(frame, max_only))
}

fn log_domain(frame: &IsiFrame, acc: fn(f64, f64) -> f64) -> AppTable {
    const NEG: f64 = f64::NEG_INFINITY;
    let lm = LogMetrics::new(frame);
    let (m, n) = (lm.m, lm.epochs);
    let m2 = m * m;

    let shift = |col: &mut [f64]| {
        let top = col.iter().copied().fold(NEG, f64::max);
        col.iter_mut().for_each(|v| *v -= top);
    };

    let mut alpha = vec![NEG; (n + 1) * m];
    alpha[0] = 0.0;
    for k in 0..n {
        let (cur, next) = alpha.split_at_mut((k + 1) * m);
        let cur = &cur[k * m..];
        let next = &mut next[..m];
        let gk = lm.epoch(k);
        for (s, &a) in cur.iter().enumerate() {
            if a == NEG {
                continue;
            }
            for ia in 0..m {
                for ib in 0..m {
                    next[ib] = acc(next[ib], a + gk[s * m2 + ia * m + ib]);
                }
            }
        }
        shift(next);
    }

    let mut beta = vec![NEG; (n + 1) * m];
    match &lm.tail {
        Some(t) => beta[n * m..].copy_from_slice(t),
        None => beta[n * m..].fill(0.0),
    }
    shift(&mut beta[n * m..]);
    for k in (1..n).rev() {
        let (cur, next) = beta.split_at_mut((k + 1) * m);
        let cur = &mut cur[k * m..];
        let next = &next[..m];
        let gk = lm.epoch(k);
        for (s, out) in cur.iter_mut().enumerate() {
            let mut v = NEG;
            for ia in 0..m {
                for ib in 0..m {
                    v = acc(v, gk[s * m2 + ia * m + ib] + next[ib]);
                }
            }
            *out = v;
        }
        shift(cur);
    }

    let mut app = vec![NEG; n * m2];
    for k in 0..n {
        let out = &mut app[k * m2..(k + 1) * m2];
        let gk = lm.epoch(k);
        let a = &alpha[k * m..(k + 1) * m];
        let b = &beta[(k + 1) * m..(k + 2) * m];
        for (s, &as_) in a.iter().enumerate() {
            if as_ == NEG {
                continue;
            }
            for ia in 0..m {
                for ib in 0..m {
                    let slot = &mut out[ia * m + ib];
                    *slot = acc(*slot, as_ + gk[s * m2 + ia * m + ib] + b[ib]);
                }
            }
        }
        // Exact log-sum-exp so every epoch is a proper distribution.
        let total = out.iter().copied().fold(NEG, max_star);
        out.iter_mut().for_each(|v| *v -= total);
    }
    AppTable { modulation: frame.modulation, domain: Domain::Log, values: app }
}
