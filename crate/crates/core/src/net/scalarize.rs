use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarizationKind {
    /// `r . L`
    Linear,
    /// `d1 + theta * d2` relative to the preference ray from the ideal point.
    PenaltyBoundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarizationSpec {
    pub kind: ScalarizationKind,
    /// Penalty on the distance from the preference ray (penalty-boundary only).
    pub penalty_theta: f64,
    /// Origin of the preference rays (penalty-boundary only).
    pub ideal_point: Vec<f64>,
}

impl ScalarizationSpec {
    pub fn linear(m: usize) -> Self {
        Self {
            kind: ScalarizationKind::Linear,
            penalty_theta: 0.0,
            ideal_point: vec![0.0; m],
        }
    }

    pub fn penalty_boundary(penalty_theta: f64, ideal_point: Vec<f64>) -> Self {
        Self {
            kind: ScalarizationKind::PenaltyBoundary,
            penalty_theta,
            ideal_point,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.penalty_theta >= 0.0) || !self.penalty_theta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "penalty theta must be finite and >= 0, got {}",
                self.penalty_theta
            )));
        }
        Ok(())
    }
}

/// Collapses an objective vector to one number under preference `r`.
pub fn scalarize(loss: &[f64], r: &[f64], spec: &ScalarizationSpec) -> Result<f64> {
    scalarize_with_grad(loss, r, spec).map(|(v, _)| v)
}

/// Scalarized value and its gradient with respect to `loss`.
///
/// At `d2 = 0` the penalty term contributes a zero subgradient.
pub fn scalarize_with_grad(
    loss: &[f64],
    r: &[f64],
    spec: &ScalarizationSpec,
) -> Result<(f64, Vec<f64>)> {
    check_dim(loss.len(), r.len())?;
    let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::InvalidParameter("preference vector is zero".into()));
    }
    match spec.kind {
        ScalarizationKind::Linear => {
            let v = loss.iter().zip(r).map(|(l, w)| l * w).sum();
            Ok((v, r.to_vec()))
        }
        ScalarizationKind::PenaltyBoundary => {
            check_dim(loss.len(), spec.ideal_point.len())?;
            let dir: Vec<f64> = r.iter().map(|v| v / norm).collect();
            let diff: Vec<f64> = loss
                .iter()
                .zip(&spec.ideal_point)
                .map(|(l, z)| l - z)
                .collect();
            let d1: f64 = diff.iter().zip(&dir).map(|(a, b)| a * b).sum();
            let perp: Vec<f64> = diff.iter().zip(&dir).map(|(a, u)| a - d1 * u).collect();
            let d2 = perp.iter().map(|v| v * v).sum::<f64>().sqrt();
            let grad = dir
                .iter()
                .zip(&perp)
                .map(|(u, p)| {
                    if d2 > 0.0 {
                        u + spec.penalty_theta * p / d2
                    } else {
                        *u
                    }
                })
                .collect();
            Ok((d1 + spec.penalty_theta * d2, grad))
        }
    }
}
