//! Metropolis-Hastings fit of a Dirichlet mixture to simplex observations.
//!
//! Every step proposes a whole parameter block from the prior: log-concentrations
//! i.i.d. `N(mu, sigma)` for all `kappa x m` entries and mixture weights from the
//! flat Dirichlet. A proposal is accepted against the last accepted state on the
//! ratio of (likelihood x prior), or of the likelihood alone when
//! [`McmcConfig::hastings_corrected`] is set. The fitted mixture is the average of
//! the held states over the second half of the chain, with rejected steps counted
//! once per step they were held.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{check_dim, Error, Result};
use crate::pareto::{LossMatrix, SelectedSet};
use crate::simplex::{
    ln_multivariate_beta, log_sum_exp, sample_dirichlet, DirichletMixture, DirichletParams,
    SIMPLEX_TOL,
};

/// Chain length, prior and mixture size for [`fit_mixture`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    /// Number of proposals `S`; must be even and at least 2.
    pub steps: usize,
    /// Mean of the normal prior on every log-concentration.
    pub mu: f64,
    /// Standard deviation of the normal prior on every log-concentration.
    pub sigma: f64,
    /// Number of mixture components.
    pub kappa: usize,
    /// Accept on the likelihood ratio only. Proposals are drawn from the prior,
    /// so this is the textbook independence-sampler ratio; off by default.
    #[serde(default)]
    pub hastings_corrected: bool,
    /// Align component labels to the first window state before averaging.
    #[serde(default = "default_true")]
    pub relabel: bool,
}

fn default_true() -> bool {
    true
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            steps: 10_000,
            mu: 0.0,
            sigma: 2.0,
            kappa: 4,
            hastings_corrected: false,
            relabel: true,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 || !self.steps.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "chain length must be even and >= 2, got {}",
                self.steps
            )));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() || !self.mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "prior needs finite mu and sigma > 0, got mu={} sigma={}",
                self.mu, self.sigma
            )));
        }
        if self.kappa == 0 {
            return Err(Error::InvalidParameter("kappa must be >= 1".into()));
        }
        Ok(())
    }
}

/// A candidate parameter block: log-concentrations and mixture weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    log_alpha: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl Proposal {
    pub fn new(log_alpha: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if log_alpha.is_empty() {
            return Err(Error::Empty("proposal has no components"));
        }
        check_dim(log_alpha.len(), weights.len())?;
        let m = log_alpha[0].len();
        for row in &log_alpha {
            check_dim(m, row.len())?;
            if row.iter().any(|l| !l.exp().is_finite() || !(l.exp() > 0.0)) {
                return Err(Error::InvalidParameter(format!(
                    "log-concentration out of range: {row:?}"
                )));
            }
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidParameter(format!(
                "proposal weights are not on the simplex: {weights:?}"
            )));
        }
        Ok(Self { log_alpha, weights })
    }

    pub fn from_mixture(mix: &DirichletMixture) -> Self {
        Self {
            log_alpha: mix
                .components()
                .iter()
                .map(|c| c.alpha().iter().map(|a| a.ln()).collect())
                .collect(),
            weights: mix.weights().to_vec(),
        }
    }

    /// Draws `log_alpha ~ N(mu, sigma)` entrywise and `weights ~ Dir(1, ..., 1)`.
    pub fn draw_from_prior<R: Rng + ?Sized>(m: usize, cfg: &McmcConfig, rng: &mut R) -> Self {
        let normal = Normal::new(cfg.mu, cfg.sigma).expect("validated prior");
        let log_alpha = (0..cfg.kappa)
            .map(|_| (0..m).map(|_| normal.sample(rng)).collect())
            .collect();
        let weights = if cfg.kappa == 1 {
            vec![1.0]
        } else {
            let flat = DirichletParams::uniform(cfg.kappa).expect("kappa >= 2");
            sample_dirichlet(&flat, rng).into_inner()
        };
        Self { log_alpha, weights }
    }

    pub fn log_alpha(&self) -> &[Vec<f64>] {
        &self.log_alpha
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kappa(&self) -> usize {
        self.weights.len()
    }

    pub fn alpha(&self) -> Vec<Vec<f64>> {
        self.log_alpha
            .iter()
            .map(|r| r.iter().map(|l| l.exp()).collect())
            .collect()
    }

    pub fn to_mixture(&self) -> Result<DirichletMixture> {
        let comps = self
            .alpha()
            .into_iter()
            .map(DirichletParams::new)
            .collect::<Result<Vec<_>>>()?;
        DirichletMixture::new(comps, self.weights.clone())
    }
}

/// Observations on the clamped simplex with their logarithms precomputed.
#[derive(Debug, Clone)]
pub struct Observations {
    m: usize,
    ln_x: Vec<f64>,
}

impl Observations {
    /// Every row must lie on the open simplex.
    pub fn new(rows: &LossMatrix) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty("no observations"));
        }
        let m = rows.dim();
        let mut ln_x = Vec::with_capacity(rows.len() * m);
        for (i, row) in rows.rows().enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|v| !(*v > 0.0 && *v < 1.0)) || (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::OffSimplex(format!(
                    "observation {i} is not on the open simplex: {row:?}"
                )));
            }
            ln_x.extend(row.iter().map(|v| v.ln()));
        }
        Ok(Self { m, ln_x })
    }

    pub fn from_selected(sel: &SelectedSet) -> Result<Self> {
        Self::new(&sel.rows)
    }

    pub fn len(&self) -> usize {
        self.ln_x.len() / self.m
    }

    pub fn is_empty(&self) -> bool {
        self.ln_x.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.m
    }
}

/// `sum_o ln sum_k w_k Dir(o | alpha_k)`.
pub fn log_likelihood(prop: &Proposal, obs: &Observations) -> Result<f64> {
    check_dim(obs.dim(), prop.log_alpha[0].len())?;
    let alpha = prop.alpha();
    let offsets: Vec<f64> = alpha
        .iter()
        .zip(&prop.weights)
        .map(|(a, w)| {
            if *w > 0.0 {
                w.ln() - ln_multivariate_beta(a)
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let mut terms = vec![0.0; alpha.len()];
    let mut total = 0.0;
    for ln_x in obs.ln_x.chunks_exact(obs.m) {
        for ((t, a), off) in terms.iter_mut().zip(&alpha).zip(&offsets) {
            *t = off + a.iter().zip(ln_x).map(|(a, l)| (a - 1.0) * l).sum::<f64>();
        }
        total += log_sum_exp(&terms);
    }
    Ok(total)
}

/// Normal prior on the log-concentrations plus the flat Dirichlet prior on the
/// weights, whose density is the constant `Gamma(kappa)`.
pub fn log_prior(prop: &Proposal, cfg: &McmcConfig) -> f64 {
    let var = cfg.sigma * cfg.sigma;
    let norm = -0.5 * (2.0 * std::f64::consts::PI * var).ln();
    let normal: f64 = prop
        .log_alpha
        .iter()
        .flatten()
        .map(|l| norm - (l - cfg.mu).powi(2) / (2.0 * var))
        .sum();
    normal + ln_gamma(prop.kappa() as f64)
}

/// Unnormalized log posterior: likelihood of `obs` plus both priors.
pub fn log_posterior(prop: &Proposal, obs: &Observations, cfg: &McmcConfig) -> Result<f64> {
    if obs.is_empty() {
        return Err(Error::Empty("no observations"));
    }
    Ok(log_likelihood(prop, obs)? + log_prior(prop, cfg))
}

/// `min(exp(log_target_new - log_target_old), 1)`.
pub fn acceptance_probability(log_target_new: f64, log_target_old: f64) -> f64 {
    let d = log_target_new - log_target_old;
    if d.is_nan() {
        0.0
    } else {
        d.min(0.0).exp()
    }
}

/// The last accepted proposal and its cached log densities.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub accepted: Proposal,
    pub log_likelihood: f64,
    pub log_posterior: f64,
    pub step_index: usize,
    /// Whether the step that produced this state accepted its proposal.
    pub moved: bool,
}

impl ChainState {
    pub fn new(accepted: Proposal, obs: &Observations, cfg: &McmcConfig) -> Result<Self> {
        let log_likelihood = log_likelihood(&accepted, obs)?;
        let log_posterior = log_likelihood + log_prior(&accepted, cfg);
        Ok(Self {
            accepted,
            log_likelihood,
            log_posterior,
            step_index: 0,
            moved: false,
        })
    }
}

/// One independence Metropolis-Hastings step.
///
/// The proposal is accepted iff `ln u <= ln ratio` for `u ~ U(0, 1)`; on
/// rejection the previous proposal is carried forward.
pub fn mh_step<R: Rng + ?Sized>(
    state: &ChainState,
    obs: &Observations,
    cfg: &McmcConfig,
    rng: &mut R,
) -> Result<ChainState> {
    let prop = Proposal::draw_from_prior(obs.dim(), cfg, rng);
    let ll = log_likelihood(&prop, obs)?;
    let lp = ll + log_prior(&prop, cfg);
    let log_ratio = if cfg.hastings_corrected {
        ll - state.log_likelihood
    } else {
        lp - state.log_posterior
    };
    let u: f64 = rng.random();
    let accept = !log_ratio.is_nan() && (log_ratio >= 0.0 || u.ln() <= log_ratio);
    Ok(if accept {
        ChainState {
            accepted: prop,
            log_likelihood: ll,
            log_posterior: lp,
            step_index: state.step_index + 1,
            moved: true,
        }
    } else {
        ChainState {
            step_index: state.step_index + 1,
            moved: false,
            ..state.clone()
        }
    })
}

/// Summary of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub steps: usize,
    pub accepted: usize,
    pub acceptance_rate: f64,
    /// Number of held states averaged into the estimate.
    pub window_size: usize,
    /// Set when no proposal was accepted; the initial mixture is returned.
    pub all_rejected: bool,
    pub mean_log_posterior_first_half: f64,
    pub mean_log_posterior_second_half: f64,
}

/// Component permutation that best matches `state` to `reference` by squared
/// distance between component means. Exhaustive for `kappa <= 6`, greedy above.
fn align(reference: &[Vec<f64>], state: &[Vec<f64>]) -> Vec<usize> {
    let means = |a: &[Vec<f64>]| -> Vec<Vec<f64>> {
        a.iter()
            .map(|r| {
                let t: f64 = r.iter().sum();
                r.iter().map(|v| v / t).collect()
            })
            .collect()
    };
    let (rm, sm) = (means(reference), means(state));
    let k = rm.len();
    let cost = |i: usize, j: usize| -> f64 {
        rm[i].iter().zip(&sm[j]).map(|(a, b)| (a - b).powi(2)).sum()
    };
    if k <= 6 {
        let mut perm: Vec<usize> = (0..k).collect();
        let mut best = perm.clone();
        let mut best_cost = f64::INFINITY;
        permute(&mut perm, 0, &mut |p| {
            let c: f64 = p.iter().enumerate().map(|(i, &j)| cost(i, j)).sum();
            if c < best_cost {
                best_cost = c;
                best = p.to_vec();
            }
        });
        best
    } else {
        let mut used = vec![false; k];
        (0..k)
            .map(|i| {
                let j = (0..k)
                    .filter(|j| !used[*j])
                    .min_by(|a, b| cost(i, *a).total_cmp(&cost(i, *b)))
                    .expect("a free component remains");
                used[j] = true;
                j
            })
            .collect()
    }
}

fn permute(p: &mut [usize], at: usize, visit: &mut impl FnMut(&[usize])) {
    if at == p.len() {
        visit(p);
        return;
    }
    for i in at..p.len() {
        p.swap(at, i);
        permute(p, at + 1, visit);
        p.swap(at, i);
    }
}

/// Runs `cfg.steps` Metropolis-Hastings steps from `init` and returns the
/// second-half average of the held states.
pub fn fit_mixture<R: Rng + ?Sized>(
    obs: &SelectedSet,
    init: &DirichletMixture,
    cfg: &McmcConfig,
    rng: &mut R,
) -> Result<(DirichletMixture, ChainDiagnostics)> {
    fit_mixture_to(&Observations::from_selected(obs)?, init, cfg, rng)
}

/// [`fit_mixture`] over precomputed observations.
pub fn fit_mixture_to<R: Rng + ?Sized>(
    obs: &Observations,
    init: &DirichletMixture,
    cfg: &McmcConfig,
    rng: &mut R,
) -> Result<(DirichletMixture, ChainDiagnostics)> {
    cfg.validate()?;
    check_dim(cfg.kappa, init.kappa())?;
    check_dim(obs.dim(), init.dim())?;

    let s = cfg.steps;
    let half = s / 2;
    let m = obs.dim();
    let mut state = ChainState::new(Proposal::from_mixture(init), obs, cfg)?;

    let mut accepted = 0usize;
    let mut lp_first = 0.0;
    let mut lp_second = 0.0;
    let mut sum_alpha = vec![vec![0.0; m]; cfg.kappa];
    let mut sum_w = vec![0.0; cfg.kappa];
    let mut window = 0usize;
    let mut reference: Option<Vec<Vec<f64>>> = None;
    let mut held: Option<(Vec<Vec<f64>>, Vec<f64>)> = None;

    for i in 1..=s {
        state = mh_step(&state, obs, cfg, rng)?;
        if state.moved {
            accepted += 1;
            held = None;
        }
        if i <= half {
            lp_first += state.log_posterior;
        } else {
            lp_second += state.log_posterior;
        }
        if i < half {
            continue;
        }
        let (alpha, w) = held.get_or_insert_with(|| {
            let alpha = state.accepted.alpha();
            let w = state.accepted.weights().to_vec();
            match (&reference, cfg.relabel) {
                (Some(r), true) => {
                    let p = align(r, &alpha);
                    (
                        p.iter().map(|&j| alpha[j].clone()).collect(),
                        p.iter().map(|&j| w[j]).collect(),
                    )
                }
                _ => (alpha, w),
            }
        });
        if reference.is_none() {
            reference = Some(alpha.clone());
        }
        for (acc, a) in sum_alpha.iter_mut().zip(alpha.iter()) {
            for (s, v) in acc.iter_mut().zip(a) {
                *s += v;
            }
        }
        for (s, v) in sum_w.iter_mut().zip(w.iter()) {
            *s += v;
        }
        window += 1;
    }

    let diag = ChainDiagnostics {
        steps: s,
        accepted,
        acceptance_rate: accepted as f64 / s as f64,
        window_size: window,
        all_rejected: accepted == 0,
        mean_log_posterior_first_half: lp_first / half as f64,
        mean_log_posterior_second_half: lp_second / (s - half) as f64,
    };
    if accepted == 0 {
        return Ok((init.clone(), diag));
    }
    let n = window as f64;
    let comps = sum_alpha
        .into_iter()
        .map(|a| DirichletParams::new(a.into_iter().map(|v| v / n).collect()))
        .collect::<Result<Vec<_>>>()?;
    let wsum: f64 = sum_w.iter().sum();
    let weights = sum_w.into_iter().map(|v| v / wsum).collect();
    Ok((DirichletMixture::new(comps, weights)?, diag))
}
