use ddps::mcmc::{fit_mixture_to, McmcConfig, Observations};
use ddps::net::{loss_and_grad, network_shape, MlpParams, OptHyper, OptState, ScalarizationSpec};
use ddps::pareto::{dominates, LossMatrix};
use ddps::problems::{ProblemKind, ProblemSpec};
use ddps::simplex::{sample_mixture, DirichletMixture, DirichletParams, PreferenceVector};
use ddps::trainer::{train, SamplingMode, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn single_preference_training_lands_on_a_non_dominated_point() {
    let problem = ProblemSpec::new(ProblemKind::Lzlzk);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut params = MlpParams::init(network_shape(2, &[32], problem.d), &mut rng).unwrap();
    let mut state = OptState::new(params.theta().len());
    let hyper = OptHyper {
        lr: 5e-3,
        ..OptHyper::default()
    };
    let r = PreferenceVector::new(vec![0.3, 0.7]).unwrap();
    let spec = ScalarizationSpec::linear(2);
    let mut first = None;
    let mut ev = None;
    for _ in 0..3000 {
        let e = loss_and_grad(&params, &r, &spec, &problem).unwrap();
        first.get_or_insert(e.loss);
        state.apply(params.theta_mut(), &e.grad, &hyper).unwrap();
        ev = Some(e);
    }
    let ev = ev.unwrap();
    assert!(ev.loss < first.unwrap());
    for _ in 0..10_000 {
        let x: Vec<f64> = (0..problem.d).map(|_| rng.random()).collect();
        let f = problem.evaluate(&x).unwrap();
        assert!(
            !dominates(&f, &ev.objectives),
            "{f:?} beats {:?}",
            ev.objectives
        );
    }
}

#[test]
fn mcmc_recovers_two_separated_components() {
    let dir = |a: &[f64]| DirichletParams::new(a.to_vec()).unwrap();
    let target =
        DirichletMixture::new(vec![dir(&[40.0, 5.0]), dir(&[5.0, 40.0])], vec![0.5, 0.5]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let rows = sample_mixture(&target, 100, &mut rng);
    let obs = Observations::new(&LossMatrix::from_rows(&rows).unwrap()).unwrap();
    let cfg = McmcConfig {
        kappa: 2,
        ..McmcConfig::default()
    };
    let init = DirichletMixture::uniform(2, 2).unwrap();
    let (fit, diag) = fit_mixture_to(&obs, &init, &cfg, &mut rng).unwrap();
    assert!(!diag.all_rejected);
    let mut means: Vec<f64> = fit.components().iter().map(|c| c.mean()[0]).collect();
    means.sort_by(f64::total_cmp);
    assert!((means[0] - 5.0 / 45.0).abs() < 0.08, "{means:?}");
    assert!((means[1] - 40.0 / 45.0).abs() < 0.08, "{means:?}");
}

#[test]
fn record_serializes_and_round_trips() {
    let problem = ProblemSpec::new(ProblemKind::Dtlz4);
    let cfg = TrainConfig {
        epochs: 3,
        n_prefs: 6,
        hidden: vec![8],
        mcmc: McmcConfig {
            steps: 50,
            ..McmcConfig::default()
        },
        ..TrainConfig::default()
    };
    let out = train(&cfg, &problem).unwrap();
    let json = serde_json::to_string(&out.record).unwrap();
    let back: ddps::trainer::RunRecord = serde_json::from_str(&json).unwrap();
    assert_eq!(back, out.record);
    for e in &out.record.epochs {
        assert!((e.mixture.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(e.mixture.kappa(), 4);
    }
}

#[test]
fn modes_share_the_initial_network() {
    let problem = ProblemSpec::new(ProblemKind::Zdt3);
    let base = TrainConfig {
        epochs: 1,
        n_prefs: 4,
        hidden: vec![8],
        opt: OptHyper {
            lr: 0.0,
            ..OptHyper::default()
        },
        ..TrainConfig::default()
    };
    let a = train(&base, &problem).unwrap();
    let b = train(
        &TrainConfig {
            mode: SamplingMode::FixedDirichlet(vec![1.0, 1.0]),
            ..base
        },
        &problem,
    )
    .unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.record.epochs[0].hv, b.record.epochs[0].hv);
}
