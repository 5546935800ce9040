//! Preference-conditioned network mapping a preference vector to a decision vector.
//!
//! The preference is the network input and the output layer is squashed into the
//! unit box, so every output is a valid decision vector. [`loss_and_grad`] chains
//! the network, the problem Jacobian and the scalarization gradient in reverse
//! order to get the parameter gradient of the scalarized loss.

mod adam;
pub mod checkpoint;
mod mlp;
mod scalarize;

pub use adam::{optimizer_step, OptHyper, OptState};
pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use mlp::{param_count, MlpParams};
pub use scalarize::{scalarize, scalarize_with_grad, ScalarizationKind, ScalarizationSpec};

use crate::error::{check_dim, Result};
use crate::problems::ProblemSpec;

/// Layer sizes `[m, hidden.., d]`.
pub fn network_shape(m: usize, hidden: &[usize], d: usize) -> Vec<usize> {
    let mut s = Vec::with_capacity(hidden.len() + 2);
    s.push(m);
    s.extend_from_slice(hidden);
    s.push(d);
    s
}

/// Decision vector produced for preference `r`.
pub fn forward(params: &MlpParams, r: &[f64]) -> Result<Vec<f64>> {
    let mut acts = params.forward_cached(r)?;
    Ok(acts.pop().expect("output layer"))
}

/// Scalar loss, raw objectives, and the gradient with respect to the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LossEval {
    pub loss: f64,
    pub objectives: Vec<f64>,
    pub grad: Vec<f64>,
}

pub fn loss_and_grad(
    params: &MlpParams,
    r: &[f64],
    spec: &ScalarizationSpec,
    problem: &ProblemSpec,
) -> Result<LossEval> {
    check_dim(problem.d, params.output_dim())?;
    let acts = params.forward_cached(r)?;
    let x = acts.last().expect("output layer");
    let (objectives, jac) = problem.evaluate_with_gradient(x)?;
    let (loss, d_obj) = scalarize_with_grad(&objectives, r, spec)?;
    let mut d_x = vec![0.0; x.len()];
    for (row, g) in jac.iter().zip(&d_obj) {
        for (dx, j) in d_x.iter_mut().zip(row) {
            *dx += g * j;
        }
    }
    let grad = params.backward(&acts, &d_x);
    Ok(LossEval {
        loss,
        objectives,
        grad,
    })
}
