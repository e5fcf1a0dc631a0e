use crate::modulation::Modulation;

use super::{argmax, AppTable};

/// Per-epoch posterior of the XOR of the two sources' bit labels, as linear
/// probabilities indexed by the XOR label (2 entries for BPSK, 4 for QPSK).
#[derive(Debug, Clone, PartialEq)]
pub struct XorAppTable {
    modulation: Modulation,
    values: Vec<f64>,
}

impl XorAppTable {
    pub fn len(&self) -> usize {
        self.values.len() / self.modulation.order()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn epoch(&self, k: usize) -> &[f64] {
        let m = self.modulation.order();
        &self.values[k * m..(k + 1) * m]
    }

    /// Most likely XOR label per epoch, first label on ties.
    pub fn hard_decisions(&self) -> Vec<usize> {
        (0..self.len()).map(|k| argmax(self.epoch(k))).collect()
    }
}

/// Marginalizes the pair table onto XOR classes.
pub fn xor_posteriors(apps: &AppTable) -> XorAppTable {
    let m = apps.modulation().order();
    let mut values = vec![0.0; apps.len() * m];
    for k in 0..apps.len() {
        let probs = apps.probabilities(k);
        let out = &mut values[k * m..(k + 1) * m];
        for (i, p) in probs.iter().enumerate() {
            out[(i / m) ^ (i % m)] += p;
        }
        let total: f64 = out.iter().sum();
        out.iter_mut().for_each(|v| *v /= total);
    }
    XorAppTable { modulation: apps.modulation(), values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bcjr::Domain;
    use proptest::prelude::*;

    #[test]
    fn uniform_pairs_give_uniform_xor() {
        let apps = AppTable::new(Modulation::Bpsk, Domain::Linear, vec![0.25; 4]).unwrap();
        assert_eq!(xor_posteriors(&apps).epoch(0), &[0.5, 0.5]);
    }

    #[test]
    fn point_mass_on_opposite_signs() {
        // (+1, -1) is pair (0, 1)
        let apps = AppTable::new(Modulation::Bpsk, Domain::Linear, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let x = xor_posteriors(&apps);
        assert_eq!(x.epoch(0), &[0.0, 1.0]);
        assert_eq!(x.hard_decisions(), vec![1]);
    }

    proptest! {
        #[test]
        fn matches_enumeration(raw in proptest::collection::vec(0.001f64..1.0, 16 * 3), log in any::<bool>()) {
            let m = 4;
            let mut probs = raw.clone();
            for chunk in probs.chunks_mut(16) {
                let s: f64 = chunk.iter().sum();
                chunk.iter_mut().for_each(|v| *v /= s);
            }
            let (domain, stored) = if log {
                (Domain::Log, probs.iter().map(|p| p.ln()).collect())
            } else {
                (Domain::Linear, probs.clone())
            };
            let apps = AppTable::new(Modulation::Qpsk, domain, stored).unwrap();
            let x = xor_posteriors(&apps);
            for k in 0..3 {
                for label in 0..m {
                    let mut want = 0.0;
                    for a in 0..m {
                        for b in 0..m {
                            let bits_a = [(a >> 1) & 1, a & 1];
                            let bits_b = [(b >> 1) & 1, b & 1];
                            let xor = ((bits_a[0] ^ bits_b[0]) << 1) | (bits_a[1] ^ bits_b[1]);
                            if xor == label {
                                want += probs[k * 16 + a * m + b];
                            }
                        }
                    }
                    prop_assert!((x.epoch(k)[label] - want).abs() < 1e-12);
                }
                prop_assert!((x.epoch(k).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }
}
