//! The training loop: sample preferences from the current mixture, take one
//! optimizer step per preference, collect the loss vectors, select the most
//! informative ones and refit the mixture to them.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mcmc::{fit_mixture, ChainDiagnostics, McmcConfig};
use crate::metrics::{hypervolume, igd};
use crate::net::{
    forward, loss_and_grad, network_shape, MlpParams, OptHyper, OptState, ScalarizationKind,
    ScalarizationSpec,
};
use crate::pareto::{nds_cd_select, non_dominated_indices, normalize_rows, LossMatrix};
use crate::problems::ProblemSpec;
use crate::simplex::{simplex_lattice, DirichletMixture, DirichletParams, PreferenceVector};

/// Where training preferences come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Refit a Dirichlet mixture to the selected losses after every update epoch.
    DdpsMcmc,
    /// Always sample from one fixed Dirichlet.
    FixedDirichlet(Vec<f64>),
}

impl SamplingMode {
    pub fn label(&self) -> &'static str {
        match self {
            SamplingMode::DdpsMcmc => "ddps",
            SamplingMode::FixedDirichlet(_) => "fixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Preferences sampled per epoch.
    pub n_prefs: usize,
    pub gamma: f64,
    /// Mixture size. Overrides `mcmc.kappa`.
    pub kappa: usize,
    pub mcmc: McmcConfig,
    /// An empty ideal point means "use the problem's ideal point".
    pub scalarization: ScalarizationSpec,
    pub opt: OptHyper,
    pub seed: u64,
    pub mode: SamplingMode,
    /// Stop when grid hypervolume has not improved for this many epochs. 0 disables.
    pub early_stop_patience: usize,
    pub warmup_epochs: usize,
    /// Preferences whose gradients are averaged into one optimizer step.
    pub pref_batch: usize,
    /// Refit the mixture every this many epochs after warmup.
    pub update_every: usize,
    pub hidden: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            n_prefs: 100,
            gamma: 0.4,
            kappa: 4,
            mcmc: McmcConfig::default(),
            scalarization: ScalarizationSpec::penalty_boundary(5.0, Vec::new()),
            opt: OptHyper::default(),
            seed: 0,
            mode: SamplingMode::DdpsMcmc,
            early_stop_patience: 50,
            warmup_epochs: 1,
            pref_batch: 1,
            update_every: 1,
            hidden: vec![256, 256],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, problem: &ProblemSpec) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.epochs == 0 {
            return bad("epochs must be >= 1".into());
        }
        if self.n_prefs < 2 {
            return bad(format!(
                "need at least 2 preferences per epoch, got {}",
                self.n_prefs
            ));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must be in (0, 1), got {}", self.gamma));
        }
        if self.kappa == 0 {
            return bad("kappa must be >= 1".into());
        }
        if self.warmup_epochs == 0 || self.pref_batch == 0 || self.update_every == 0 {
            return bad("warmup_epochs, pref_batch and update_every must be >= 1".into());
        }
        if self.hidden.contains(&0) {
            return bad(format!("hidden widths must be positive: {:?}", self.hidden));
        }
        self.opt.validate()?;
        self.effective_mcmc().validate()?;
        self.scalarization_for(problem)?.validate()?;
        if let SamplingMode::FixedDirichlet(alpha) = &self.mode {
            crate::error::check_dim(problem.m(), alpha.len())?;
            DirichletParams::new(alpha.clone())?;
        }
        Ok(())
    }

    pub fn effective_mcmc(&self) -> McmcConfig {
        McmcConfig {
            kappa: self.kappa,
            ..self.mcmc.clone()
        }
    }

    /// The scalarization with an empty ideal point filled in from `problem`.
    pub fn scalarization_for(&self, problem: &ProblemSpec) -> Result<ScalarizationSpec> {
        let mut s = self.scalarization.clone();
        if s.ideal_point.is_empty() {
            s.ideal_point = match s.kind {
                ScalarizationKind::PenaltyBoundary => problem.ideal_point(),
                ScalarizationKind::Linear => vec![0.0; problem.m()],
            };
        }
        crate::error::check_dim(problem.m(), s.ideal_point.len())?;
        Ok(s)
    }

    fn initial_mixture(&self, m: usize) -> Result<DirichletMixture> {
        match &self.mode {
            SamplingMode::DdpsMcmc => DirichletMixture::uniform(self.kappa, m),
            SamplingMode::FixedDirichlet(a) => {
                Ok(DirichletMixture::single(DirichletParams::new(a.clone())?))
            }
        }
    }
}

/// Everything one epoch of gradient steps needs besides the parameters.
pub struct EpochContext<'a> {
    pub problem: &'a ProblemSpec,
    pub scalarization: &'a ScalarizationSpec,
    pub opt: &'a OptHyper,
    pub n_prefs: usize,
    pub pref_batch: usize,
    pub epoch: usize,
}

/// One pass over `n_prefs` preferences drawn from `mix`, returning the loss
/// vectors seen before each step, tagged with their preferences, and the mean
/// scalar loss.
pub fn run_epoch<R: Rng + ?Sized>(
    params: &mut MlpParams,
    state: &mut OptState,
    mix: &DirichletMixture,
    ctx: &EpochContext<'_>,
    rng: &mut R,
) -> Result<(LossMatrix, f64)> {
    let mut prefs: Vec<PreferenceVector> = (0..ctx.n_prefs).map(|_| rng.sample(mix)).collect();
    prefs.shuffle(rng);
    let mut d = LossMatrix::with_dim(ctx.problem.m());
    let mut total = 0.0;
    for batch in prefs.chunks(ctx.pref_batch) {
        let mut grad = vec![0.0; params.theta().len()];
        for r in batch {
            let ev = loss_and_grad(params, r, ctx.scalarization, ctx.problem)?;
            if !ev.loss.is_finite() || ev.objectives.iter().any(|f| !f.is_finite()) {
                return Err(Error::NonFiniteLoss {
                    epoch: ctx.epoch,
                    detail: format!("preference {:?} gave {:?}", r.as_slice(), ev.objectives),
                });
            }
            total += ev.loss;
            for (g, v) in grad.iter_mut().zip(&ev.grad) {
                *g += v;
            }
            d.push(&ev.objectives, Some(r.clone()))?;
        }
        let scale = 1.0 / batch.len() as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        state
            .apply(params.theta_mut(), &grad, ctx.opt)
            .map_err(|e| Error::NonFiniteLoss {
                epoch: ctx.epoch,
                detail: e.to_string(),
            })?;
    }
    Ok((d, total / ctx.n_prefs as f64))
}

/// Refits the sampling mixture to the losses of one epoch.
///
/// Losses are shifted by `ideal` before row normalization so that the
/// observations live on the same simplex as the preferences. Returns the
/// previous mixture unchanged when every proposal was rejected.
pub fn ddps_update<R: Rng + ?Sized>(
    d: &LossMatrix,
    ideal: &[f64],
    mix_prev: &DirichletMixture,
    gamma: f64,
    mcmc: &McmcConfig,
    epoch: usize,
    rng: &mut R,
) -> Result<(DirichletMixture, ChainDiagnostics)> {
    let shifted = d.shifted(ideal)?;
    let normalized = normalize_rows(&shifted)?;
    let selected = nds_cd_select(&normalized, gamma, epoch)?;
    fit_mixture(&selected, mix_prev, mcmc, rng)
}

/// Metrics of a network on the fixed evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridEvaluation {
    /// Non-dominated objective vectors of the grid outputs.
    pub front: Vec<Vec<f64>>,
    pub hv: f64,
    pub igd: f64,
}

/// Fixed evaluation preferences: 100 points for two objectives, 105 for three.
pub fn evaluation_grid(m: usize) -> Vec<PreferenceVector> {
    let divisions = match m {
        2 => 99,
        3 => 13,
        _ => 4,
    };
    simplex_lattice(m, divisions)
}

pub fn evaluate_on_grid(
    params: &MlpParams,
    problem: &ProblemSpec,
    grid: &[PreferenceVector],
    true_front: &[Vec<f64>],
) -> Result<GridEvaluation> {
    let outputs = grid
        .iter()
        .map(|r| problem.evaluate(&forward(params, r)?))
        .collect::<Result<Vec<_>>>()?;
    let front: Vec<Vec<f64>> = non_dominated_indices(&outputs)
        .into_iter()
        .map(|i| outputs[i].clone())
        .collect();
    Ok(GridEvaluation {
        hv: hypervolume(&front, &problem.reference_point())?,
        igd: igd(&front, true_front)?,
        front,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub problem: String,
    pub d: usize,
    pub m: usize,
    pub mode: String,
    pub seed: u64,
    pub config: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mixture in effect after this epoch.
    pub mixture: DirichletMixture,
    pub hv: f64,
    pub igd: f64,
    pub mean_loss: f64,
    pub acceptance_rate: Option<f64>,
    pub mcmc: Option<ChainDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub epochs_completed: usize,
    pub stopped_early: bool,
    pub best_hv: f64,
    pub best_epoch: usize,
    pub final_hv: f64,
    pub final_igd: f64,
    /// Number of mixture fits performed.
    pub mcmc_calls: usize,
    pub checkpoint: Option<String>,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub meta: RunMeta,
    pub epochs: Vec<EpochRecord>,
    pub summary: RunSummary,
}

impl RunRecord {
    pub fn final_mixture(&self) -> &DirichletMixture {
        &self.epochs.last().expect("at least one epoch").mixture
    }
}

/// Result of [`train`]: the record, the final network and its grid front.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub record: RunRecord,
    pub params: MlpParams,
    pub front: Vec<Vec<f64>>,
}

// independent random streams per purpose, all derived from the seed
const STREAM_INIT: u64 = 0;
const STREAM_SAMPLE: u64 = 1;
const STREAM_MCMC: u64 = 2;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn train(cfg: &TrainConfig, problem: &ProblemSpec) -> Result<TrainOutcome> {
    let started = Instant::now();
    cfg.validate(problem)?;
    let m = problem.m();
    let scal = cfg.scalarization_for(problem)?;
    let ideal = problem.ideal_point();
    let mcmc = cfg.effective_mcmc();
    let grid = evaluation_grid(m);
    let true_front = problem.true_front(problem.default_front_size());

    let mut init_rng = stream(cfg.seed, STREAM_INIT);
    let mut sample_rng = stream(cfg.seed, STREAM_SAMPLE);
    let mut mcmc_rng = stream(cfg.seed, STREAM_MCMC);

    let mut params = MlpParams::init(network_shape(m, &cfg.hidden, problem.d), &mut init_rng)?;
    let mut opt_state = OptState::new(params.theta().len());
    let mut mix = cfg.initial_mixture(m)?;

    let mut epochs = Vec::new();
    let mut best_hv = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut mcmc_calls = 0;
    let mut stopped_early = false;
    let mut last_eval = None;

    for epoch in 1..=cfg.epochs {
        let ctx = EpochContext {
            problem,
            scalarization: &scal,
            opt: &cfg.opt,
            n_prefs: cfg.n_prefs,
            pref_batch: cfg.pref_batch,
            epoch,
        };
        let (d, mean_loss) = run_epoch(&mut params, &mut opt_state, &mix, &ctx, &mut sample_rng)?;

        let due = matches!(cfg.mode, SamplingMode::DdpsMcmc)
            && epoch >= cfg.warmup_epochs
            && epoch < cfg.epochs
            && (epoch - cfg.warmup_epochs).is_multiple_of(cfg.update_every);
        let mut diag = None;
        let mut warning = None;
        if due {
            let (next, dg) = ddps_update(&d, &ideal, &mix, cfg.gamma, &mcmc, epoch, &mut mcmc_rng)?;
            mcmc_calls += 1;
            if dg.all_rejected {
                warning = Some("every proposal rejected; mixture kept".to_string());
            }
            mix = next;
            diag = Some(dg);
        }

        let eval = evaluate_on_grid(&params, problem, &grid, &true_front)?;
        if eval.hv > best_hv {
            best_hv = eval.hv;
            best_epoch = epoch;
        }
        epochs.push(EpochRecord {
            epoch,
            mixture: mix.clone(),
            hv: eval.hv,
            igd: eval.igd,
            mean_loss,
            acceptance_rate: diag.as_ref().map(|g| g.acceptance_rate),
            mcmc: diag,
            warning,
        });
        last_eval = Some(eval);
        if cfg.early_stop_patience > 0 && epoch - best_epoch >= cfg.early_stop_patience {
            stopped_early = epoch < cfg.epochs;
            break;
        }
    }

    let eval = last_eval.expect("epochs >= 1");
    let record = RunRecord {
        meta: RunMeta {
            problem: problem.kind.to_string(),
            d: problem.d,
            m,
            mode: cfg.mode.label().to_string(),
            seed: cfg.seed,
            config: cfg.clone(),
        },
        summary: RunSummary {
            epochs_completed: epochs.len(),
            stopped_early,
            best_hv,
            best_epoch,
            final_hv: eval.hv,
            final_igd: eval.igd,
            mcmc_calls,
            checkpoint: None,
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        },
        epochs,
    };
    Ok(TrainOutcome {
        record,
        params,
        front: eval.front,
    })
}

/// True-front points mapped onto the simplex by `(f - ideal) / sum(f - ideal)`.
pub fn normalized_front_image(problem: &ProblemSpec, n: usize) -> Vec<Vec<f64>> {
    let ideal = problem.ideal_point();
    problem
        .true_front(n)
        .into_iter()
        .filter_map(|f| {
            let shifted: Vec<f64> = f
                .iter()
                .zip(&ideal)
                .map(|(a, z)| (a - z).max(0.0))
                .collect();
            let s: f64 = shifted.iter().sum();
            (s > 0.0).then(|| shifted.iter().map(|v| v / s).collect())
        })
        .collect()
}

/// Fraction of `draws` preferences from `mix` within `radius` of some point of `image`.
pub fn sampling_concentration<R: Rng + ?Sized>(
    mix: &DirichletMixture,
    image: &[Vec<f64>],
    draws: usize,
    radius: f64,
    rng: &mut R,
) -> f64 {
    let r2 = radius * radius;
    let hits = (0..draws)
        .filter(|_| {
            let p: PreferenceVector = rng.sample(mix);
            image.iter().any(|q| {
                q.iter()
                    .zip(p.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    <= r2
            })
        })
        .count();
    hits as f64 / draws.max(1) as f64
}
