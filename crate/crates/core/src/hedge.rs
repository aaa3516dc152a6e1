//! Exponential weights over K experts with a self-tuning learning rate.
//!
//! p_{t+1,i} ∝ exp(−η_{t+1} Σ_{τ≤t} c_{τ,i}), where
//! η_{t+1} = √(2 ln K) / √(1 + Σ_{τ≤t} Σ_i p_{τ,i} c²_{τ,i}).
//! Only cumulative losses are stored; weights are recomputed with a
//! max-shifted softmax so they never underflow.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HedgeState {
    cum_loss: Vec<f64>,
    second_moment: f64,
    round: u64,
}

impl HedgeState {
    pub fn new(experts: usize) -> Self {
        assert!(experts > 0, "need at least one expert");
        Self {
            cum_loss: vec![0.0; experts],
            second_moment: 0.0,
            round: 0,
        }
    }

    pub fn experts(&self) -> usize {
        self.cum_loss.len()
    }

    pub fn cum_loss(&self) -> &[f64] {
        &self.cum_loss
    }

    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn learning_rate(&self) -> f64 {
        (2.0 * (self.experts() as f64).ln()).sqrt() / (1.0 + self.second_moment).sqrt()
    }

    pub fn distribution(&self) -> Vec<f64> {
        softmax_neg(&self.cum_loss, self.learning_rate())
    }

    /// Records one round of expert losses. `c` must be finite and non-negative.
    pub fn update(&mut self, c: &[f64]) -> Result<()> {
        assert_eq!(c.len(), self.experts(), "loss vector length mismatch");
        if let Some((index, &value)) = c
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidExpertLoss { index, value });
        }
        let p = self.distribution();
        self.second_moment += p.iter().zip(c).map(|(p, c)| p * c * c).sum::<f64>();
        for (acc, v) in self.cum_loss.iter_mut().zip(c) {
            *acc += v;
        }
        self.round += 1;
        Ok(())
    }

    /// Index of the most probable expert; ties go to the lowest index.
    pub fn leader(&self) -> usize {
        argmax_first(&self.distribution())
    }
}

/// softmax(−η·losses) with max-subtraction.
pub(crate) fn softmax_neg(losses: &[f64], eta: f64) -> Vec<f64> {
    let min = losses.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = losses.iter().map(|l| (-eta * (l - min)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|w| w / z).collect()
}

pub(crate) fn argmax_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fresh_state_is_uniform() {
        let h = HedgeState::new(5);
        assert!(h.distribution().iter().all(|p| (p - 0.2).abs() < 1e-15));
        assert!((h.learning_rate() - (2.0 * 5f64.ln()).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn two_experts_one_round() {
        let mut h = HedgeState::new(2);
        h.update(&[0.0, 1.0]).unwrap();
        assert_eq!(h.second_moment(), 0.5);
        // sqrt(2 ln 2)/sqrt(1.5) and the logistic of it, 30-digit references
        assert!((h.learning_rate() - 0.961_351_257_733_922).abs() < 1e-14);
        let p = h.distribution();
        assert!((p[0] - 0.723_392_267_850_450_1).abs() < 1e-12);
        assert!((p[1] - 0.276_607_732_149_549_9).abs() < 1e-12);
    }

    #[test]
    fn two_round_replay() {
        let mut h = HedgeState::new(2);
        h.update(&[0.0, 1.0]).unwrap();
        h.update(&[1.0, 0.0]).unwrap();
        assert_eq!(h.cum_loss(), &[1.0, 1.0]);
        assert!((h.second_moment() - 1.223_392_267_850_45).abs() < 1e-12);
        assert_eq!(h.round(), 2);
    }

    #[test]
    fn zero_loss_leaves_distribution() {
        let mut h = HedgeState::new(3);
        h.update(&[0.3, 0.0, 1.0]).unwrap();
        let before = h.distribution();
        h.update(&[0.0; 3]).unwrap();
        assert_eq!(before, h.distribution());
    }

    #[test]
    fn identical_losses_stay_uniform() {
        let mut h = HedgeState::new(4);
        for t in 0..100 {
            let c = (t % 7) as f64 / 3.0;
            h.update(&[c; 4]).unwrap();
        }
        assert!(h.distribution().iter().all(|p| *p == 0.25));
    }

    #[test]
    fn rejects_bad_losses() {
        let mut h = HedgeState::new(2);
        assert!(h.update(&[-0.1, 0.0]).is_err());
        assert!(h.update(&[0.0, f64::NAN]).is_err());
        assert!(h.update(&[f64::INFINITY, 0.0]).is_err());
        assert_eq!(h.round(), 0);
    }

    #[test]
    fn no_underflow_for_large_losses() {
        let mut h = HedgeState::new(3);
        h.update(&[1e6, 2e6, 1e6 + 1.0]).unwrap();
        let p = h.distribution();
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn leader_breaks_ties_low() {
        let mut h = HedgeState::new(3);
        assert_eq!(h.leader(), 0);
        h.update(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(h.leader(), 1);
    }

    #[test]
    fn small_loss_regret_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let k = 5;
        let mut h = HedgeState::new(k);
        let mut alg = 0.0;
        let mut cmax: f64 = 0.0;
        let bias: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
        for _ in 0..2000 {
            let c: Vec<f64> = bias
                .iter()
                .map(|b| b * rng.random_range(0.0..1.0))
                .collect();
            cmax = c.iter().copied().fold(cmax, f64::max);
            alg += h
                .distribution()
                .iter()
                .zip(&c)
                .map(|(p, c)| p * c)
                .sum::<f64>();
            h.update(&c).unwrap();
        }
        let lmin = h.cum_loss().iter().copied().fold(f64::INFINITY, f64::min);
        let lnk = (k as f64).ln();
        let bound = 3.0 / 2f64.sqrt() * (cmax * lmin * lnk).sqrt() + 4.5 * cmax * lnk;
        assert!(alg - lmin <= bound, "regret {} bound {}", alg - lmin, bound);
    }

    proptest! {
        #[test]
        fn simplex_and_permutation_invariance(
            rounds in prop::collection::vec(prop::collection::vec(0.0f64..5.0, 4), 1..30),
            shift in 1usize..4,
        ) {
            let mut h = HedgeState::new(4);
            let mut hp = HedgeState::new(4);
            let perm = |v: &[f64]| -> Vec<f64> { (0..4).map(|i| v[(i + shift) % 4]).collect() };
            for c in &rounds {
                h.update(c).unwrap();
                hp.update(&perm(c)).unwrap();
                let p = h.distribution();
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                prop_assert!(p.iter().all(|v| *v >= 0.0));
                let pp = hp.distribution();
                for (a, b) in perm(&p).iter().zip(&pp) {
                    prop_assert!((a - b).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn leader_is_unique_loss_minimizer(
            rounds in prop::collection::vec(prop::collection::vec(0.0f64..5.0, 3), 1..20),
        ) {
            let mut h = HedgeState::new(3);
            let mut prev = 0.0;
            for c in &rounds {
                h.update(c).unwrap();
                prop_assert!(h.second_moment() >= prev);
                prev = h.second_moment();
            }
            let cum = h.cum_loss();
            let best = (0..3).min_by(|a, b| cum[*a].partial_cmp(&cum[*b]).unwrap()).unwrap();
            let unique = (0..3).filter(|i| *i != best).all(|i| cum[i] > cum[best] + 1e-9);
            if unique {
                prop_assert_eq!(h.leader(), best);
            }
        }
    }
}
