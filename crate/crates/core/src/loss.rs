//! Losses for binary classification with labels in {−1, +1}.

use crate::error::{Error, Result};

pub fn check_label(y: f64) -> Result<()> {
    if y == 1.0 || y == -1.0 {
        Ok(())
    } else {
        Err(Error::InvalidLabel(y))
    }
}

pub trait Loss {
    fn value(&self, u: f64, y: f64) -> Result<f64>;
    /// d/du of `value`; a subgradient where `value` is not differentiable.
    fn deriv(&self, u: f64, y: f64) -> Result<f64>;
}

/// Loss with |ℓ'(u,y)| ≤ G1 and |ℓ'(u,y)| ≤ G2·ℓ(u,y) everywhere.
pub trait SmoothLoss: Loss {
    fn g1(&self) -> f64;
    fn g2(&self) -> f64;
}

/// max(0, 1 − y·u). The subgradient at the kink y·u = 1 is 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct HingeLoss;

impl Loss for HingeLoss {
    fn value(&self, u: f64, y: f64) -> Result<f64> {
        check_label(y)?;
        Ok((1.0 - y * u).max(0.0))
    }

    fn deriv(&self, u: f64, y: f64) -> Result<f64> {
        check_label(y)?;
        Ok(if y * u < 1.0 { -y } else { 0.0 })
    }
}

/// ln(1 + exp(−y·u)), with G1 = G2 = 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogisticLoss;

impl Loss for LogisticLoss {
    fn value(&self, u: f64, y: f64) -> Result<f64> {
        check_label(y)?;
        let m = y * u;
        Ok(if m >= 0.0 {
            (-m).exp().ln_1p()
        } else {
            -m + m.exp().ln_1p()
        })
    }

    fn deriv(&self, u: f64, y: f64) -> Result<f64> {
        check_label(y)?;
        let m = y * u;
        // −y·σ(−m), written to avoid exp overflow on either side
        let s = if m >= 0.0 {
            let e = (-m).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + m.exp())
        };
        Ok(-y * s)
    }
}

impl SmoothLoss for LogisticLoss {
    fn g1(&self) -> f64 {
        1.0
    }

    fn g2(&self) -> f64 {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hinge_values() {
        let h = HingeLoss;
        assert_eq!(h.value(0.0, 1.0).unwrap(), 1.0);
        assert_eq!(h.deriv(0.0, 1.0).unwrap(), -1.0);
        assert_eq!(h.value(2.0, 1.0).unwrap(), 0.0);
        assert_eq!(h.deriv(2.0, 1.0).unwrap(), 0.0);
        assert_eq!(h.deriv(-1.0, -1.0).unwrap(), 0.0);
        assert_eq!(h.deriv(0.5, -1.0).unwrap(), 1.0);
    }

    #[test]
    fn logistic_at_origin() {
        let l = LogisticLoss;
        let v = l.value(0.0, 1.0).unwrap();
        let d = l.deriv(0.0, 1.0).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(d, -0.5);
        assert!(d.abs() <= l.g2() * v);
    }

    #[test]
    fn rejects_bad_labels() {
        assert!(HingeLoss.value(0.0, 0.0).is_err());
        assert!(LogisticLoss.deriv(0.0, 2.0).is_err());
        assert!(LogisticLoss.value(0.0, f64::NAN).is_err());
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let h = 1e-5;
        for _ in 0..1000 {
            let u = rng.random_range(-20.0..20.0);
            let y = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let fd = (LogisticLoss.value(u + h, y).unwrap()
                - LogisticLoss.value(u - h, y).unwrap())
                / (2.0 * h);
            assert!((fd - LogisticLoss.deriv(u, y).unwrap()).abs() <= 1e-6);
            // hinge away from the kink
            if (y * u - 1.0).abs() > 2.0 * h {
                let fd = (HingeLoss.value(u + h, y).unwrap() - HingeLoss.value(u - h, y).unwrap())
                    / (2.0 * h);
                assert!((fd - HingeLoss.deriv(u, y).unwrap()).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn logistic_satisfies_smoothness_contract() {
        let l = LogisticLoss;
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..10_000 {
            let u = rng.random_range(-50.0..50.0);
            let y = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let (v, d) = (l.value(u, y).unwrap(), l.deriv(u, y).unwrap());
            assert!(d.abs() <= l.g1());
            assert!(d.abs() <= l.g2() * v, "u={u} y={y} v={v} d={d}");
        }
    }

    #[test]
    fn logistic_is_stable_at_extremes() {
        for u in [1e4, -1e4] {
            for y in [1.0, -1.0] {
                let v = LogisticLoss.value(u, y).unwrap();
                let d = LogisticLoss.deriv(u, y).unwrap();
                assert!(v.is_finite() && v >= 0.0);
                assert!(d.is_finite());
            }
        }
        assert_eq!(LogisticLoss.value(-1e4, 1.0).unwrap(), 1e4);
    }
}
