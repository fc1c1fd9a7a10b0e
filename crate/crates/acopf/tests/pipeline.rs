use gridrisk_acopf::sweep::FULL_SCALE_N_REAL;
use gridrisk_acopf::*;
use gridrisk_core::grid::bundled_case;
use gridrisk_core::synth::ScalingMode;
use gridrisk_core::SimRng;

fn small(epochs: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig { n_fake: vec![60], seeds: vec![10], modes: vec![ScalingMode::Grouped], ..Default::default() };
    cfg.train.epochs = epochs;
    cfg
}

#[test]
fn defaults_follow_the_experiment_design() {
    let cfg = ExperimentConfig::default();
    assert_eq!(cfg.seeds, vec![0, 10, 20, 30, 40, 50, 60, 70, 80, 90]);
    assert_eq!(cfg.n_fake, vec![200, 1000]);
    assert_eq!(cfg.n_real, 200);
    assert_eq!(FULL_SCALE_N_REAL, 2000);
    assert_eq!(cfg.train.hidden, vec![200, 200]);
    assert_eq!(cfg.train.activation, Activation::Tanh);
    let w = cfg.train.weights;
    assert_eq!((w.cost, w.eq, w.ineq), (0.1, 10.0, 10.0));
    assert_eq!(gridrisk_acopf::data::FACTOR_RANGE, (0.8, 1.2));
    cfg.validate().unwrap();
}

#[test]
fn naive_model_fits_its_training_data_better_than_realistic_data() {
    let case = bundled_case("case30").unwrap();
    let cfg = ExperimentConfig::default();
    let seed = 0;
    let realistic = gen_realistic(&case, cfg.n_real, seed).unwrap();
    let (pool, test) = split_test(&realistic, cfg.n_test(), SimRng::derive(seed, 1).next_u64()).unwrap();
    let base = mean_loads(&pool).unwrap();
    let train = gen_augmented(&case, &base, ScalingMode::Naive, 200, 7).unwrap();
    let model = init_model(&case, &base, &cfg.train, 3).unwrap();
    let trained = train_penalty(model, &train, &case, &cfg.train, 4).unwrap();
    assert_eq!(trained.loss_trace.len(), cfg.train.epochs);
    let on_train = evaluate_generalization(&trained.model, &train, &case).unwrap();
    let on_test = evaluate_generalization(&trained.model, &test, &case).unwrap();
    assert!(on_train.overall_mean < on_test.overall_mean, "{on_train:?} vs {on_test:?}");
}

#[test]
fn single_cell_sweep_is_the_direct_chain() {
    let case = bundled_case("case30").unwrap();
    let cfg = small(5);
    let result = experiment_sweep(&case, &cfg).unwrap();
    assert!(result.failures.is_empty());
    assert_eq!(result.rows.len(), 1);

    let seed = 10;
    let realistic = gen_realistic_with(&case, cfg.n_real, cfg.amplitude, seed).unwrap();
    let (pool, test) = split_test(&realistic, cfg.n_test(), SimRng::derive(seed, 1).next_u64()).unwrap();
    let base = mean_loads(&pool).unwrap();
    let train = gen_augmented(&case, &base, ScalingMode::Grouped, 60, SimRng::derive(seed, 2).next_u64()).unwrap();
    let model = init_model(&case, &base, &cfg.train, SimRng::derive(seed, 3).next_u64()).unwrap();
    let trained = train_penalty(model, &train, &case, &cfg.train, SimRng::derive(seed, 4).next_u64()).unwrap();
    let report = evaluate_generalization(&trained.model, &test, &case).unwrap();
    let row = &result.rows[0];
    assert_eq!((row.mode, row.n_fake, row.seed), (ScalingMode::Grouped, 60, 10));
    assert_eq!(row.overall_mean, report.overall_mean);
    assert_eq!(row.equality_mean, report.equality_mean);
    assert_eq!(row.inequality_mean, report.inequality_mean);
}

#[test]
fn sweep_csv_is_deterministic() {
    let case = bundled_case("case30").unwrap();
    let mut cfg = small(3);
    cfg.modes = ScalingMode::ALL.to_vec();
    let render = || {
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &experiment_sweep(&case, &cfg).unwrap().rows).unwrap();
        buf
    };
    let a = render();
    assert_eq!(a, render());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next().unwrap(), "mode,n_fake,seed,equality_mean,inequality_mean,overall_mean");
    assert_eq!(text.lines().count(), 4);
    assert!(text.contains("\nbrute_force,60,10,"));
}

#[test]
fn failing_cells_are_recorded() {
    // Twenty times the load exceeds the online capacity, so no cell can
    // build its reference operating point.
    let mut case = bundled_case("case30").unwrap();
    case.loads.iter_mut().for_each(|l| l.pd *= 20.0);
    let mut cfg = small(3);
    cfg.seeds = vec![0, 10];
    let result = experiment_sweep(&case, &cfg).unwrap();
    assert!(result.rows.is_empty());
    assert_eq!(result.failures.len(), 2);
    assert_eq!(result.failures[1].seed, 10);
    assert!(result.failures[0].error.contains("capacity"), "{}", result.failures[0].error);
}

#[test]
fn invalid_sweep_config_is_rejected() {
    let case = bundled_case("case30").unwrap();
    let cfg = ExperimentConfig { seeds: vec![], ..Default::default() };
    assert!(matches!(experiment_sweep(&case, &cfg), Err(AcopfError::Config(_))));
    let cfg = ExperimentConfig { n_real: 4, test_fraction: 0.1, ..Default::default() };
    assert!(cfg.validate().is_err());
}

#[test]
fn summary_aggregates_over_seeds() {
    let mk = |seed, v| SweepRow {
        mode: ScalingMode::Naive,
        n_fake: 5,
        seed,
        equality_mean: 0.0,
        inequality_mean: 0.0,
        overall_mean: v,
    };
    let result = SweepResult { rows: vec![mk(0, 1.0), mk(10, 3.0)], failures: vec![] };
    let s = result.summary();
    assert_eq!(s.len(), 1);
    assert_eq!((s[0].runs, s[0].mean), (2, 2.0));
    assert!((s[0].spread - 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(result.mode_mean(ScalingMode::Naive), Some(2.0));
    assert_eq!(result.mode_mean(ScalingMode::Grouped), None);
}
