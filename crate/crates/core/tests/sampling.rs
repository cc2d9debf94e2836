//! Statistical checks of the sampler, kernel operator and replication
//! harness against closed-form Normal-Normal quantities.

use gibbs_scan::diagnostics::{act_hat, batch_means, mse_ratio, replicate_means, RatioError};
use gibbs_scan::models::{nn_act_oracle, nn_conditionals, nn_g, NormalNormalParams};
use gibbs_scan::{
    apply_kernel, run, y_subchain, ConditionalPair, JointState, RngStream, ScanStrategy,
};

fn setting(id: u8) -> NormalNormalParams {
    NormalNormalParams::setting(id).unwrap()
}

fn autocorrelation(values: &[f64], lag: usize) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    let cov: f64 = values[lag..]
        .iter()
        .zip(values)
        .map(|(a, b)| (a - mean) * (b - mean))
        .sum();
    cov / var
}

#[test]
fn long_run_mean_is_centered() {
    let model = nn_conditionals(setting(1));
    let chain = run(
        &JointState::zeros(10, 1),
        100_000,
        &ScanStrategy::composition(),
        &model,
        &RngStream::new(1, 0),
    )
    .unwrap();
    assert_eq!(chain.states.len(), 100_001);
    let ys: Vec<f64> = y_subchain(&chain).into_iter().map(|y| y[0]).collect();
    let est = batch_means(&ys).unwrap();
    let se = (est.sigma2_hat / est.n_star as f64).sqrt();
    assert!(est.mean.abs() < 4.0 * se, "{} vs se {se}", est.mean);

    // AR(1) structure of the y sub-chain
    let r1 = autocorrelation(&ys, 1);
    let r2 = autocorrelation(&ys, 2);
    assert!((r2 - r1 * r1).abs() < 0.02, "{r2} vs {}", r1 * r1);
}

#[test]
fn random_sequence_is_a_mixture_of_compositions() {
    let model = nn_conditionals(setting(1));
    let state = JointState::new(vec![0.3; 10], vec![1.2]).unwrap();
    let v = |s: &JointState| nn_g(&s.y) + s.x.iter().sum::<f64>().powi(2) / 100.0;
    let q = 0.3;
    let mc = 200_000;
    let est = |s: ScanStrategy, stream| {
        apply_kernel(v, &state, &s, &model, mc, &RngStream::new(5, stream)).unwrap()
    };
    let mixed = est(ScanStrategy::random_sequence(q).unwrap(), 0);
    let xf = est(ScanStrategy::Composition { x_first: true }, 1);
    let yf = est(ScanStrategy::Composition { x_first: false }, 2);
    let combo = q * xf.estimate + (1.0 - q) * yf.estimate;
    let se =
        (mixed.std_error.powi(2) + (q * xf.std_error).powi(2) + ((1.0 - q) * yf.std_error).powi(2))
            .sqrt();
    assert!(
        (mixed.estimate - combo).abs() < 4.0 * se,
        "{} vs {combo}",
        mixed.estimate
    );
}

#[test]
fn random_scan_kernel_matches_analytic_hook() {
    let model = nn_conditionals(setting(2));
    let state = JointState::new(vec![0.4; 10], vec![-0.7]).unwrap();
    let est = apply_kernel(
        |s: &JointState| nn_g(&s.y),
        &state,
        &ScanStrategy::random_scan(0.5).unwrap(),
        &model,
        200_000,
        &RngStream::new(6, 0),
    )
    .unwrap();
    let exact = 0.5 * nn_g(&state.y) + 0.5 * model.cond_expect_g_given_x(&state.x).unwrap();
    assert!(
        (est.estimate - exact).abs() < 3.0 * est.std_error,
        "{} vs {exact}",
        est.estimate
    );
}

#[test]
fn kernel_error_shrinks_with_samples() {
    let model = nn_conditionals(setting(1));
    let state = JointState::zeros(10, 1);
    let se = |mc| {
        apply_kernel(
            |s: &JointState| nn_g(&s.y),
            &state,
            &ScanStrategy::composition(),
            &model,
            mc,
            &RngStream::new(7, 0),
        )
        .unwrap()
        .std_error
    };
    let ratio = se(2_000) / se(200_000);
    assert!((ratio - 10.0).abs() < 1.5, "{ratio}");
}

#[test]
fn act_concentrates_around_oracle() {
    let params = setting(2);
    let model = nn_conditionals(params);
    let oracle = nn_act_oracle(&params);
    let mut spreads = Vec::new();
    for n in [10_000, 100_000, 1_000_000] {
        let acts: Vec<f64> = (0..20)
            .map(|seed| {
                let chain = run(
                    &JointState::zeros(10, 1),
                    n,
                    &ScanStrategy::composition(),
                    &model,
                    &RngStream::new(100 + seed, 0),
                )
                .unwrap();
                let ys: Vec<f64> = chain.states.iter().map(|s| s.y[0]).collect();
                act_hat(&batch_means(&ys).unwrap(), params.tau2).unwrap()
            })
            .collect();
        let rmse = (acts.iter().map(|a| (a - oracle).powi(2)).sum::<f64>() / 20.0).sqrt();
        spreads.push(rmse);
    }
    assert!(
        spreads[0] > spreads[1] && spreads[1] > spreads[2],
        "{spreads:?}"
    );
    assert!(spreads[2] < 0.1 * oracle);
}

#[test]
fn iid_sequence_has_unit_act() {
    let mut rng = RngStream::new(9, 0).open();
    use gibbs_scan::Variates;
    let v: Vec<f64> = (0..1_000_000).map(|_| rng.standard_normal()).collect();
    let act = act_hat(&batch_means(&v).unwrap(), 1.0).unwrap();
    assert!((act - 1.0).abs() < 0.1, "{act}");
}

#[test]
fn replicate_grand_mean_is_centered() {
    let model = nn_conditionals(setting(1));
    let means = replicate_means(
        &model,
        &ScanStrategy::composition(),
        &JointState::zeros(10, 1),
        10_000,
        1000,
        &RngStream::new(11, 0),
        |s| s.y[0],
    )
    .unwrap();
    let grand = means.iter().sum::<f64>() / 1000.0;
    let mse = means.iter().map(|m| m * m).sum::<f64>() / 1000.0;
    assert!(grand.abs() < 4.0 * (mse / 1000.0).sqrt());
}

#[test]
fn replicates_are_deterministic_and_distinct() {
    let model = nn_conditionals(setting(2));
    let go = || {
        replicate_means(
            &model,
            &ScanStrategy::random_scan(0.5).unwrap(),
            &JointState::zeros(10, 1),
            200,
            8,
            &RngStream::new(12, 0),
            |s| s.y[0],
        )
        .unwrap()
    };
    let a = go();
    assert_eq!(a, go());
    assert_ne!(a[0], a[1]);

    let serial: Vec<f64> = (0..8)
        .map(|r| {
            let chain = run(
                &JointState::zeros(10, 1),
                200,
                &ScanStrategy::random_scan(0.5).unwrap(),
                &model,
                &RngStream::new(12, r),
            )
            .unwrap();
            chain.states.iter().map(|s| s.y[0]).sum::<f64>() / 201.0
        })
        .collect();
    assert_eq!(a, serial);
}

#[test]
fn replicate_errors_name_the_replicate() {
    let model = nn_conditionals(setting(2));
    let err = replicate_means(
        &model,
        &ScanStrategy::composition(),
        &JointState::zeros(3, 1),
        5,
        2,
        &RngStream::new(1, 0),
        |s| s.y[0],
    )
    .unwrap_err();
    assert!(err.to_string().starts_with("replicate 0"), "{err}");
    assert!(replicate_means(
        &model,
        &ScanStrategy::composition(),
        &JointState::zeros(10, 1),
        5,
        1,
        &RngStream::new(1, 0),
        |s| s.y[0]
    )
    .is_err());
}

#[test]
fn equal_distributions_give_unit_ratio_on_average() {
    let model = nn_conditionals(setting(2));
    let s = ScanStrategy::composition();
    let init = JointState::zeros(10, 1);
    let ratios: Vec<f64> = (0..20)
        .map(|t| {
            let a = replicate_means(
                &model,
                &s,
                &init,
                1000,
                100,
                &RngStream::new(200 + t, 0),
                |s| s.y[0],
            )
            .unwrap();
            let b = replicate_means(
                &model,
                &s,
                &init,
                1000,
                100,
                &RngStream::new(300 + t, 0),
                |s| s.y[0],
            )
            .unwrap();
            mse_ratio(&a, &b, RatioError::Delta)
                .unwrap()
                .ratio_vs_baseline
        })
        .collect();
    let mean = ratios.iter().sum::<f64>() / 20.0;
    assert!((mean - 1.0).abs() < 0.15, "{mean}");
}
