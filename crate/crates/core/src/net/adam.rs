use serde::{Deserialize, Serialize};

use super::MlpParams;
use crate::error::{check_dim, Error, Result};

/// Adaptive-moment optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for OptHyper {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl OptHyper {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr.is_finite()
            && self.lr >= 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps.is_finite()
            && self.eps > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "optimizer needs finite lr >= 0, betas in [0, 1) and eps > 0, got {self:?}"
            )))
        }
    }
}

/// Running first and second moments.
#[derive(Debug, Clone, PartialEq)]
pub struct OptState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl OptState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Updates `theta` in place. Fails without touching anything on a non-finite gradient.
    pub fn apply(&mut self, theta: &mut [f64], grad: &[f64], hyper: &OptHyper) -> Result<()> {
        check_dim(self.m.len(), theta.len())?;
        check_dim(theta.len(), grad.len())?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { step: self.t + 1 });
        }
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - hyper.beta1.powi(t);
        let c2 = 1.0 - hyper.beta2.powi(t);
        for (((p, g), m), v) in theta
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = hyper.beta1 * *m + (1.0 - hyper.beta1) * g;
            *v = hyper.beta2 * *v + (1.0 - hyper.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= hyper.lr * m_hat / (v_hat.sqrt() + hyper.eps);
        }
        Ok(())
    }
}

/// Functional form of [`OptState::apply`].
pub fn optimizer_step(
    params: &MlpParams,
    grad: &[f64],
    state: &OptState,
    hyper: &OptHyper,
) -> Result<(MlpParams, OptState)> {
    let mut p = params.clone();
    let mut s = state.clone();
    s.apply(p.theta_mut(), grad, hyper)?;
    Ok((p, s))
}
