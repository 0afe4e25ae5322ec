use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamWConfig {
    pub learning_rate: f64,
    #[serde(default = "default_weight_decay")]
    pub weight_decay: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_weight_decay() -> f64 {
    0.01
}
fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_epsilon() -> f64 {
    1e-8
}

impl AdamWConfig {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            weight_decay: default_weight_decay(),
            beta1: default_beta1(),
            beta2: default_beta2(),
            epsilon: default_epsilon(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && self.weight_decay >= 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid optimizer settings {self:?}")))
        }
    }
}

/// Adam with decoupled weight decay: `θ ← θ(1 − lr·λ)` followed by the Adam
/// update with bias-corrected moments.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamW<T> {
    config: AdamWConfig,
    m: Vec<T>,
    v: Vec<T>,
    steps: u32,
}

impl<T: Real> AdamW<T> {
    pub fn new(config: AdamWConfig, n_params: usize) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, m: vec![T::zero(); n_params], v: vec![T::zero(); n_params], steps: 0 })
    }

    pub fn config(&self) -> &AdamWConfig {
        &self.config
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    /// Applies one update. A gradient with a non-finite entry is rejected and
    /// leaves both the parameters and the optimizer state untouched.
    pub fn step(&mut self, params: &mut [T], grad: &[T]) -> Result<()> {
        if params.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(Error::Domain("parameter and gradient lengths differ from the optimizer".into()));
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numeric("non-finite gradient".into()));
        }
        let c = &self.config;
        self.steps += 1;
        let lr = T::lit(c.learning_rate);
        let decay = T::one() - lr * T::lit(c.weight_decay);
        let (b1, b2) = (T::lit(c.beta1), T::lit(c.beta2));
        let bc1 = T::one() - T::lit(c.beta1.powi(self.steps as i32));
        let bc2 = T::one() - T::lit(c.beta2.powi(self.steps as i32));
        let eps = T::lit(c.epsilon);
        for ((p, &g), (m, v)) in params.iter_mut().zip(grad).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *p *= decay;
            *m = b1 * *m + (T::one() - b1) * g;
            *v = b2 * *v + (T::one() - b2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_without_decay_is_identity() {
        let cfg = AdamWConfig { weight_decay: 0.0, ..AdamWConfig::new(0.1) };
        let mut opt = AdamW::<f64>::new(cfg, 3).unwrap();
        let mut p = vec![1.0, -2.0, 0.5];
        for _ in 0..5 {
            opt.step(&mut p, &[0.0; 3]).unwrap();
        }
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn first_step_closed_form() {
        let cfg = AdamWConfig { weight_decay: 0.0, ..AdamWConfig::new(0.05) };
        let mut opt = AdamW::<f64>::new(cfg, 3).unwrap();
        let g = [0.3, -2.0, 1e-9];
        let mut p = vec![0.0; 3];
        opt.step(&mut p, &g).unwrap();
        for (x, gk) in p.iter().zip(g) {
            let expected = -0.05 * gk / (gk.abs() + 1e-8);
            assert!((x - expected).abs() < 1e-15, "{x} vs {expected}");
        }
    }

    #[test]
    fn pure_decay() {
        let cfg = AdamWConfig { weight_decay: 0.5, ..AdamWConfig::new(0.1) };
        let mut opt = AdamW::<f64>::new(cfg, 2).unwrap();
        let mut p = vec![2.0, -4.0];
        opt.step(&mut p, &[0.0, 0.0]).unwrap();
        assert_eq!(p, vec![2.0 * 0.95, -4.0 * 0.95]);
    }

    #[test]
    fn non_finite_gradient_is_rejected() {
        let mut opt = AdamW::<f64>::new(AdamWConfig::new(0.1), 2).unwrap();
        let mut p = vec![1.0, 1.0];
        assert!(opt.step(&mut p, &[f64::NAN, 0.0]).is_err());
        assert_eq!(p, vec![1.0, 1.0]);
        assert_eq!(opt.steps(), 0);
        assert!(AdamW::<f64>::new(AdamWConfig::new(0.0), 1).is_err());
    }
}
