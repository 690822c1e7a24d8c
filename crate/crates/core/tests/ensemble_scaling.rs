//! Monte Carlo error of the ensemble average against the master equation.

use qndsqueeze_core::dynamics::MeParams;
use qndsqueeze_core::feedback::FeedbackLaw;
use qndsqueeze_core::spin::{SpinOperators, SpinSystem};
use qndsqueeze_core::stochastic::{finish_ensemble, merge_blocks, run_block, DEFAULT_SME_DT};

#[test]
fn quadrupling_k_halves_the_trace_distance_envelope() {
    let ops = SpinOperators::new(SpinSystem::new(10).unwrap());
    let rho0 = ops.css_x();
    let law = FeedbackLaw::analytic(10, 1.0).unwrap();
    let params = MeParams {
        dt: DEFAULT_SME_DT,
        t_max: 0.5,
        sample_every: 100,
        ..MeParams::default()
    };
    // Four disjoint K = 500 ensembles; together they form the K = 2000 one.
    let quarters: Vec<_> = (0..4)
        .map(|q| {
            run_block(&rho0, &params, &law, 3, q * 500..(q + 1) * 500, false, &ops)
                .unwrap()
                .0
        })
        .collect();
    let small: Vec<f64> = quarters
        .iter()
        .map(|acc| {
            finish_ensemble(acc.clone(), &rho0, &params, &law, &ops)
                .unwrap()
                .max_trace_distance()
        })
        .collect();
    let full = finish_ensemble(merge_blocks(quarters), &rho0, &params, &law, &ops).unwrap();
    assert_eq!(full.k, 2000);
    let small_mean = small.iter().sum::<f64>() / 4.0;
    let ratio = full.max_trace_distance() / small_mean;
    println!(
        "envelopes K = 500: {small:?}, K = 2000: {}, ratio {ratio}",
        full.max_trace_distance()
    );
    assert!(
        (0.3..=0.8).contains(&ratio),
        "K = 500 envelopes {small:?}, K = 2000 envelope {}, ratio {ratio}",
        full.max_trace_distance()
    );
}
