use crate::Result;

use super::trellis::LogMetrics;
use super::{IsiFrame, SymbolPair};

/// Maximum-likelihood sequence detection on the same trellis.
pub fn viterbi(frame: &IsiFrame) -> Result<Vec<SymbolPair>> {
    frame.validate()?;
    let lm = LogMetrics::new(frame);
    let (m, n) = (lm.m, lm.epochs);
    let m2 = m * m;

    let mut metric = vec![f64::NEG_INFINITY; m];
    metric[0] = 0.0;
    // back[k][next_state] = (from_state, a)
    let mut back = vec![(0usize, 0usize); n * m];
    for k in 0..n {
        let gk = lm.epoch(k);
        let mut next = vec![f64::NEG_INFINITY; m];
        for (s, &pm) in metric.iter().enumerate() {
            if pm == f64::NEG_INFINITY {
                continue;
            }
            for a in 0..m {
                for b in 0..m {
                    let cand = pm + gk[s * m2 + a * m + b];
                    if cand > next[b] {
                        next[b] = cand;
                        back[k * m + b] = (s, a);
                    }
                }
            }
        }
        metric = next;
    }
    if let Some(t) = &lm.tail {
        metric.iter_mut().zip(t).for_each(|(p, g)| *p += g);
    }

    let mut state = super::argmax(&metric);
    let mut path = vec![SymbolPair { a: 0, b: 0 }; n];
    for k in (0..n).rev() {
        let (from, a) = back[k * m + state];
        path[k] = SymbolPair { a, b: state };
        state = from;
    }
    Ok(path)
}
