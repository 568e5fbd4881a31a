use maskcov::bounds::BoundKind;
use maskcov::harness::{
    emit_results, fit_scaling, read_results_csv, run_error_experiment, Axis, ErrorMetric, MaskSpec, OutputFormat,
    SigmaSpec,
};
use maskcov::{ExperimentConfig, TrialResult};
use proptest::prelude::*;

fn config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(SigmaSpec::Ar1 { rho: 0.6 }, MaskSpec::Taper { k: 4 }, 24, vec![16, 32, 64])
        .with_replicates(25)
        .with_seed(2024);
    cfg.centered = true;
    cfg
}

#[test]
fn identical_configs_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    emit_results(&run_error_experiment(&config()).unwrap(), OutputFormat::Csv, &a).unwrap();
    emit_results(&run_error_experiment(&config()).unwrap(), OutputFormat::Csv, &b).unwrap();
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    assert_eq!(read_results_csv(&a).unwrap(), run_error_experiment(&config()).unwrap());
}

#[test]
fn relative_metric_divides_by_sigma_norm() {
    let abs = run_error_experiment(&config()).unwrap();
    let mut rel_cfg = config();
    rel_cfg.error_metric = ErrorMetric::Relative;
    let rel = run_error_experiment(&rel_cfg).unwrap();
    let s = rel_cfg.resolve().unwrap().model.sigma_norm();
    for (a, r) in abs.iter().zip(&rel) {
        assert_eq!(r.error, a.error * (1.0 / s));
    }
}

#[test]
fn minor_mask_stays_inside_envelope() {
    let cfg = ExperimentConfig::new(
        SigmaSpec::Identity,
        MaskSpec::Minor {
            indices: (0..8).map(|i| 3 * i).collect(),
        },
        30,
        vec![64],
    )
    .with_replicates(200)
    .with_seed(1);
    let rs = run_error_experiment(&cfg).unwrap();
    let mean = rs.iter().map(|r| r.error).sum::<f64>() / rs.len() as f64;
    let envelope = rs[0].bound(BoundKind::Minor).unwrap();
    assert!(mean <= 1.3 * envelope, "{mean} vs {envelope}");
}

#[test]
fn threshold_masks_run_without_bounds() {
    let cfg = ExperimentConfig::new(SigmaSpec::Ar1 { rho: 0.5 }, MaskSpec::Threshold { h: 0.3 }, 12, vec![50, 100])
        .with_replicates(10);
    let rs = run_error_experiment(&cfg).unwrap();
    assert!(rs.iter().all(|r| r.bounds.is_empty() && r.error.is_finite() && r.m >= 1));
}

fn mask_strategy() -> impl Strategy<Value = MaskSpec> {
    prop_oneof![
        (0usize..4).prop_map(|k| MaskSpec::Banded { k }),
        (1usize..5).prop_map(|h| MaskSpec::Taper { k: 2 * h }),
        proptest::sample::subsequence((0..10).collect::<Vec<_>>(), 1..10)
            .prop_map(|indices| MaskSpec::Minor { indices }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn refined_bound_never_violated(
        mask in mask_strategy(),
        rho in -0.9f64..0.9,
        n in 2usize..40,
        centered in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let mut cfg = ExperimentConfig::new(SigmaSpec::Ar1 { rho }, mask, 10, vec![n])
            .with_replicates(8)
            .with_seed(seed);
        cfg.centered = centered;
        for r in run_error_experiment(&cfg).unwrap() {
            let b = r.bound(BoundKind::Refined).unwrap();
            prop_assert!(r.error.is_finite() && r.error >= 0.0);
            prop_assert!(r.error <= b, "{} > {}", r.error, b);
        }
    }

    #[test]
    fn scaling_fit_recovers_planted_slope(slope in -1.5f64..1.5, c in 0.1f64..10.0) {
        let results: Vec<TrialResult> = [100usize, 200, 400, 800]
            .iter()
            .map(|&n| TrialResult {
                n,
                p: 5,
                m: 1,
                replicate: 0,
                error: c * (n as f64).powf(slope),
                decoupled: None,
                bounds: Default::default(),
            })
            .collect();
        let rep = fit_scaling(&results, Axis::N).unwrap();
        prop_assert!((rep.slope - slope).abs() < 1e-9);
        prop_assert!((rep.intercept - c.ln()).abs() < 1e-8);
    }
}
