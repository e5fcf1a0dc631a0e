use crate::front_end::GUARD;
use crate::Result;
use crate::Vec2;

use super::{branch_metric_weighted_log, max_star, AppTable, Domain, IsiFrame};

/// Log-MAP over the full pair state `s_k = (c_a(k-1), c_b(k-1))`.
///
/// With the full state the pair `c(k)` is the next state itself, so the
/// posterior is `alpha_{k+1}(c) + beta_{k+1}(c)`. It costs `M^2` states
/// instead of `M` and is kept to cross-check the reduced-state decoder.
pub fn forward_backward_full_state(frame: &IsiFrame) -> Result<AppTable> {
    const NEG: f64 = f64::NEG_INFINITY;
    frame.validate()?;
    let m = frame.modulation.order();
    let m2 = m * m;
    let n = frame.obs.len();
    let pts = frame.modulation.points();
    let var = 0.5 * frame.sigma2;
    let pair = |i: usize| Vec2::new(pts[i / m], pts[i % m]);

    // gamma[k][s][c]; at k = 0 only the guard state exists (stored at s = 0).
    let mut gamma = vec![NEG; n * m2 * m2];
    for (k, &r) in frame.obs.iter().enumerate() {
        let t = frame.taps.at(k);
        let states = if k == 0 { 1 } else { m2 };
        for s in 0..states {
            let prev = if k == 0 { Vec2::new(GUARD, GUARD) } else { pair(s) };
            for c in 0..m2 {
                let psi = t.b0 * pair(c) + t.b1 * prev;
                gamma[(k * m2 + s) * m2 + c] = branch_metric_weighted_log(r, psi, var, frame.weights);
            }
        }
    }

    let mut alpha = vec![NEG; (n + 1) * m2];
    alpha[0] = 0.0;
    for k in 0..n {
        for s in 0..m2 {
            let a = alpha[k * m2 + s];
            if a == NEG {
                continue;
            }
            for c in 0..m2 {
                let slot = (k + 1) * m2 + c;
                alpha[slot] = max_star(alpha[slot], a + gamma[(k * m2 + s) * m2 + c]);
            }
        }
    }

    let mut beta = vec![NEG; (n + 1) * m2];
    for c in 0..m2 {
        beta[n * m2 + c] = match frame.tail {
            Some(r) => {
                let t = frame.taps.at(n);
                let psi = t.b1 * pair(c);
                branch_metric_weighted_log(r, psi, var, frame.weights)
            }
            None => 0.0,
        };
    }
    for k in (1..n).rev() {
        for s in 0..m2 {
            let mut v = NEG;
            for c in 0..m2 {
                v = max_star(v, gamma[(k * m2 + s) * m2 + c] + beta[(k + 1) * m2 + c]);
            }
            beta[k * m2 + s] = v;
        }
    }

    let mut app = vec![0.0; n * m2];
    for k in 0..n {
        let out = &mut app[k * m2..(k + 1) * m2];
        for (c, o) in out.iter_mut().enumerate() {
            *o = alpha[(k + 1) * m2 + c] + beta[(k + 1) * m2 + c];
        }
        let total = out.iter().copied().fold(NEG, max_star);
        out.iter_mut().for_each(|v| *v -= total);
    }
    Ok(AppTable { modulation: frame.modulation, domain: Domain::Log, values: app })
}
