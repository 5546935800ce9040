//! Points on the probability simplex and the Dirichlet family over them.
//!
//! All densities are evaluated in log space. A mixture combines its components
//! with a max-shifted log-sum-exp, so large concentrations (hundreds or
//! thousands) and coordinates close to the boundary stay finite.
//!
//! Constructors of [`PreferenceVector`] renormalize their input and clamp every
//! coordinate into `[CLAMP_EPS, 1 - CLAMP_EPS]`; the raw density functions take
//! plain slices and reject coordinates that sit exactly on the boundary.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{check_dim, Error, Result};

/// Tolerance on `|sum - 1|` for a vector to count as a simplex point.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Coordinates are clamped into `[CLAMP_EPS, 1 - CLAMP_EPS]`.
pub const CLAMP_EPS: f64 = 1e-6;

/// Divide by the sum, clamp into `[CLAMP_EPS, 1 - CLAMP_EPS]`, renormalize.
///
/// The input must be nonnegative with a positive finite sum.
pub fn clamp_to_simplex(values: &mut [f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::OffSimplex(format!(
            "entries must be finite and nonnegative: {values:?}"
        )));
    }
    let sum: f64 = values.iter().sum();
    if !(sum > 0.0) || !sum.is_finite() {
        return Err(Error::OffSimplex(format!("sum {sum} is not positive")));
    }
    for v in values.iter_mut() {
        *v = (*v / sum).clamp(CLAMP_EPS, 1.0 - CLAMP_EPS);
    }
    let sum: f64 = values.iter().sum();
    for v in values.iter_mut() {
        *v /= sum;
    }
    Ok(())
}

/// A weight vector on the open (m-1)-simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PreferenceVector(Vec<f64>);

impl PreferenceVector {
    /// Builds a preference vector from nonnegative weights.
    ///
    /// Weights are normalized to sum to one and clamped away from the boundary.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "preference vector needs at least 2 entries, got {}",
                values.len()
            )));
        }
        clamp_to_simplex(&mut values)?;
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for PreferenceVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Deref for PreferenceVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for PreferenceVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PreferenceVector> for Vec<f64> {
    fn from(p: PreferenceVector) -> Vec<f64> {
        p.0
    }
}

/// Concentration parameters of a Dirichlet distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DirichletParams {
    alpha: Vec<f64>,
}

impl DirichletParams {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "Dirichlet needs at least 2 concentrations, got {}",
                alpha.len()
            )));
        }
        if let Some(a) = alpha.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Dirichlet concentration must be positive and finite, got {a}"
            )));
        }
        Ok(Self { alpha })
    }

    /// The flat Dirichlet `(1, ..., 1)`, uniform over the simplex.
    pub fn uniform(m: usize) -> Result<Self> {
        Self::new(vec![1.0; m])
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn total(&self) -> f64 {
        self.alpha.iter().sum()
    }

    /// `ln B(alpha) = sum ln Gamma(alpha_i) - ln Gamma(sum alpha_i)`.
    pub fn ln_beta(&self) -> f64 {
        ln_multivariate_beta(&self.alpha)
    }

    /// Component means `alpha_k / A`.
    pub fn mean(&self) -> Vec<f64> {
        let total = self.total();
        self.alpha.iter().map(|a| a / total).collect()
    }
}

impl TryFrom<Vec<f64>> for DirichletParams {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DirichletParams> for Vec<f64> {
    fn from(p: DirichletParams) -> Vec<f64> {
        p.alpha
    }
}

pub(crate) fn ln_multivariate_beta(alpha: &[f64]) -> f64 {
    let total: f64 = alpha.iter().sum();
    alpha.iter().map(|a| ln_gamma(*a)).sum::<f64>() - ln_gamma(total)
}

/// Mean and per-coordinate variance of a Dirichlet distribution.
///
/// `var_k = alpha_k (A - alpha_k) / (A^2 (A + 1))` with `A = sum alpha`.
pub fn dirichlet_moments(p: &DirichletParams) -> (Vec<f64>, Vec<f64>) {
    let total = p.total();
    let mean = p.mean();
    let var = p
        .alpha
        .iter()
        .map(|a| a * (total - a) / (total * total * (total + 1.0)))
        .collect();
    (mean, var)
}

fn check_open_simplex(x: &[f64]) -> Result<()> {
    if let Some(v) = x.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
        return Err(Error::OffSimplex(format!(
            "coordinate {v} is not in (0, 1); clamp before evaluating"
        )));
    }
    let sum: f64 = x.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::OffSimplex(format!("coordinates sum to {sum}")));
    }
    Ok(())
}

/// `ln Dir(x | alpha)` for `x` in the open simplex.
pub fn dirichlet_log_pdf(x: &[f64], p: &DirichletParams) -> Result<f64> {
    check_dim(p.dim(), x.len())?;
    check_open_simplex(x)?;
    Ok(log_pdf_unchecked(x, p.alpha(), p.ln_beta()))
}

#[inline]
pub(crate) fn log_pdf_unchecked(x: &[f64], alpha: &[f64], ln_beta: f64) -> f64 {
    alpha
        .iter()
        .zip(x)
        .map(|(a, xi)| (a - 1.0) * xi.ln())
        .sum::<f64>()
        - ln_beta
}

/// `ln sum_i exp(v_i)` shifted by the maximum. Returns `-inf` when every term is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// A finite mixture of Dirichlet distributions, each with its own concentrations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletMixture {
    components: Vec<DirichletParams>,
    weights: Vec<f64>,
}

impl DirichletMixture {
    /// Validates and renormalizes the weights. All components must share a dimension.
    pub fn new(components: Vec<DirichletParams>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Empty("mixture needs at least one component"));
        }
        check_dim(components.len(), weights.len())?;
        let m = components[0].dim();
        for c in &components {
            check_dim(m, c.dim())?;
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mixture weights must be nonnegative: {weights:?}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidParameter(format!(
                "mixture weights sum to {sum}, not 1"
            )));
        }
        let weights = weights.iter().map(|w| w / sum).collect();
        Ok(Self {
            components,
            weights,
        })
    }

    /// A single-component mixture.
    pub fn single(p: DirichletParams) -> Self {
        Self {
            components: vec![p],
            weights: vec![1.0],
        }
    }

    /// `kappa` flat components with equal weights.
    pub fn uniform(kappa: usize, m: usize) -> Result<Self> {
        if kappa == 0 {
            return Err(Error::InvalidParameter("kappa must be >= 1".into()));
        }
        let comp = DirichletParams::uniform(m)?;
        Ok(Self {
            components: vec![comp; kappa],
            weights: vec![1.0 / kappa as f64; kappa],
        })
    }

    pub fn components(&self) -> &[DirichletParams] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kappa(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    /// Draws a component index from the categorical distribution on the weights.
    pub fn sample_component<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        // u landed in the rounding slack above the last cumulative sum
        self.weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
    }
}

/// `ln sum_i w_i Dir(x | alpha_i)`.
pub fn mixture_log_pdf(x: &[f64], mix: &DirichletMixture) -> Result<f64> {
    check_dim(mix.dim(), x.len())?;
    check_open_simplex(x)?;
    let terms: Vec<f64> = mix
        .components
        .iter()
        .zip(&mix.weights)
        .map(|(c, w)| {
            if *w > 0.0 {
                w.ln() + log_pdf_unchecked(x, c.alpha(), c.ln_beta())
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    Ok(log_sum_exp(&terms))
}

/// `ln G` for `G ~ Gamma(shape, 1)`, without underflow for small shapes.
///
/// Small shapes use `G = G' * U^(1/shape)` with `G' ~ Gamma(shape + 1, 1)`,
/// taken in log space so `ln G` stays finite even when `G` underflows.
fn sample_ln_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        let g = Gamma::new(shape, 1.0).expect("shape is positive and finite");
        g.sample(rng).ln()
    } else {
        let g = Gamma::new(shape + 1.0, 1.0).expect("shape is positive and finite");
        let u: f64 = rng.random::<f64>();
        // u == 0 has probability 2^-53; nudge it to the smallest positive draw
        let u = if u > 0.0 { u } else { f64::EPSILON * 0.5 };
        g.sample(rng).ln() + u.ln() / shape
    }
}

/// Draws one point from `Dir(alpha)` by normalizing independent Gamma variates.
pub fn sample_dirichlet<R: Rng + ?Sized>(p: &DirichletParams, rng: &mut R) -> PreferenceVector {
    let logs: Vec<f64> = p.alpha.iter().map(|a| sample_ln_gamma(*a, rng)).collect();
    let lse = log_sum_exp(&logs);
    let mut values: Vec<f64> = logs.iter().map(|l| (l - lse).exp()).collect();
    clamp_to_simplex(&mut values).expect("normalized gamma draws are on the simplex");
    PreferenceVector(values)
}

/// Draws `n` points from the mixture: a component by weight, then a Dirichlet draw.
pub fn sample_mixture<R: Rng + ?Sized>(
    mix: &DirichletMixture,
    n: usize,
    rng: &mut R,
) -> Vec<PreferenceVector> {
    (0..n)
        .map(|_| {
            let k = mix.sample_component(rng);
            sample_dirichlet(&mix.components[k], rng)
        })
        .collect()
}

impl Distribution<PreferenceVector> for DirichletParams {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PreferenceVector {
        sample_dirichlet(self, rng)
    }
}

impl Distribution<PreferenceVector> for DirichletMixture {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PreferenceVector {
        let k = self.sample_component(rng);
        sample_dirichlet(&self.components[k], rng)
    }
}

/// Uniform simplex lattice with `divisions` steps per axis, clamped off the boundary.
///
/// Yields `C(divisions + m - 1, m - 1)` points: 100 for `(m, divisions) = (2, 99)`,
/// 105 for `(3, 13)`.
pub fn simplex_lattice(m: usize, divisions: usize) -> Vec<PreferenceVector> {
    fn rec(m: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == m - 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=left).rev() {
            prefix.push(k);
            rec(m, left - k, prefix, out);
            prefix.pop();
        }
    }
    assert!(m >= 2 && divisions >= 1);
    let mut raw = Vec::new();
    rec(m, divisions, &mut Vec::with_capacity(m), &mut raw);
    raw.into_iter()
        .map(|counts| {
            let v = counts
                .iter()
                .map(|c| *c as f64 / divisions as f64)
                .collect();
            PreferenceVector::new(v).expect("lattice point has positive sum")
        })
        .collect()
}
