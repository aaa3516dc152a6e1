use omks_core::data::{gen_lowerbound, parse_libsvm, permute, write_libsvm};
use omks_core::{
    BudgetScope, HingeConfig, HingeLearner, HingeLoss, KernelSpec, LambdaMode, LogisticLoss,
    OnlineLearner, Raker, RakerConfig, RemovalMode, SmoothConfig, SmoothLearner, SparseVec,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn blobs(n: usize, seed: u64) -> Vec<(SparseVec, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let y = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let c = if y > 0.0 { 0.7 } else { 0.3 };
            let x = [
                c + rng.random_range(-0.15..0.15),
                c + rng.random_range(-0.15..0.15),
                rng.random_range(0.0..1.0),
            ];
            (SparseVec::from_dense(&x), y)
        })
        .collect()
}

fn run(learner: &mut dyn OnlineLearner, stream: &[(SparseVec, f64)]) -> f64 {
    let mut mistakes = 0;
    for (x, y) in stream {
        let rec = learner.update(x, *y).unwrap();
        mistakes += usize::from(rec.mistake);
        assert!(
            learner.budget_violations().is_empty(),
            "{:?}",
            learner.budget_violations()
        );
    }
    100.0 * mistakes as f64 / stream.len() as f64
}

fn grid() -> Vec<KernelSpec> {
    KernelSpec::gaussian_grid(&[0.25, 1.0, 4.0])
}

#[test]
fn hinge_learner_separates_blobs() {
    let stream = blobs(2000, 1);
    for scope in [BudgetScope::Total, BudgetScope::PerKernel] {
        let mut cfg = HingeConfig::new(grid(), 100, stream.len() as u64);
        cfg.scope = scope;
        cfg.lambda = LambdaMode::Scaled(2.0);
        let mut l = HingeLearner::new(cfg).unwrap();
        let amr = run(&mut l, &stream);
        assert!(amr < 10.0, "{scope:?}: {amr}");
        assert!(l.norm_drift() < 1e-6);
    }
}

#[test]
fn smooth_learner_separates_blobs() {
    let stream = blobs(2000, 2);
    let mut l = SmoothLearner::new(SmoothConfig::new(grid(), 100), LogisticLoss).unwrap();
    let amr = run(&mut l, &stream);
    assert!(amr < 10.0, "{amr}");
    let d = l.diagnostics();
    assert!(d.removals[0] as f64 <= 3.0 * d.removal_bound[0]);
}

#[test]
fn raker_separates_blobs() {
    let stream = blobs(2000, 3);
    let mut cfg = RakerConfig::new(grid(), 3);
    cfg.eta = 0.5;
    let mut l = Raker::new(cfg, HingeLoss).unwrap();
    assert!(run(&mut l, &stream) < 10.0);
}

#[test]
fn lowerbound_round_trips_through_libsvm() {
    let ds = gen_lowerbound(4, 40, 9).unwrap();
    assert_eq!(ds.dim, 12);
    for (t, e) in ds.examples.iter().take(12).enumerate() {
        assert_eq!(e.x.nnz(), 1);
        // rounds are 1-based: odd rounds are positive
        assert_eq!(e.y, if t % 2 == 0 { 1.0 } else { -1.0 });
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lb");
    write_libsvm(&ds, &path).unwrap();
    let back = parse_libsvm(&path).unwrap();
    assert_eq!(back.examples, ds.examples);
    let shuffled = permute(&back, 1);
    assert_eq!(shuffled.len(), ds.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hinge_budgets_hold_on_random_streams(
        seed in 0u64..1000,
        budget in 14usize..60,
        half in any::<bool>(),
        per_kernel in any::<bool>(),
    ) {
        let stream = blobs(400, seed);
        let mut cfg = HingeConfig::new(grid(), budget, 400);
        cfg.seed = seed;
        cfg.reservoir_capacity = 3;
        cfg.removal = if half { RemovalMode::Half } else { RemovalMode::Restart };
        cfg.scope = if per_kernel { BudgetScope::PerKernel } else { BudgetScope::Total };
        let mut l = HingeLearner::new(cfg).unwrap();
        run(&mut l, &stream);
        prop_assert!(l.norm_drift() < 1e-6);
    }

    #[test]
    fn smooth_budgets_hold_on_random_streams(seed in 0u64..1000, half_budget in 1usize..20, half in any::<bool>()) {
        let stream = blobs(400, seed);
        let mut cfg = SmoothConfig::new(grid(), 2 * half_budget);
        cfg.seed = seed;
        cfg.removal = if half { RemovalMode::Half } else { RemovalMode::Restart };
        let mut l = SmoothLearner::new(cfg, LogisticLoss).unwrap();
        run(&mut l, &stream);
        prop_assert!(l.buffer().len() <= 2 * half_budget);
    }
}
