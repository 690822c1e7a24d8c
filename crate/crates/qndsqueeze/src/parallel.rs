//! Rayon drivers. Work is split into the core's fixed blocks and reduced in
//! block order, so results match the sequential path bit for bit.

use rayon::prelude::*;

use qndsqueeze_core::dynamics::{integrate_me, MeParams};
use qndsqueeze_core::feedback::FeedbackLaw;
use qndsqueeze_core::observables::{find_minimum, ObservableSeries, SqueezingMinimum};
use qndsqueeze_core::spin::{DensityMatrix, SpinOperators, SpinSystem};
use qndsqueeze_core::stochastic::{
    block_ranges, finish_ensemble, merge_blocks, run_block, EnsembleResult, TrajectoryRecord,
};
use qndsqueeze_core::Result;

use crate::error::CliError;

/// Runs `f` on a pool of `threads` workers (0 = rayon's default).
pub fn with_threads<T: Send>(
    threads: usize,
    f: impl FnOnce() -> T + Send,
) -> std::result::Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Validation(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Parallel [`qndsqueeze_core::stochastic::ensemble_average`]. With
/// `keep_records`, also returns every trajectory record in index order.
pub fn ensemble(
    rho0: &DensityMatrix,
    params: &MeParams,
    law: &FeedbackLaw,
    k: usize,
    master_seed: u64,
    keep_records: bool,
    ops: &SpinOperators,
) -> Result<(EnsembleResult, Vec<(usize, TrajectoryRecord)>)> {
    let blocks = block_ranges(k)
        .into_par_iter()
        .map(|r| run_block(rho0, params, law, master_seed, r, keep_records, ops))
        .collect::<Result<Vec<_>>>()?;
    let (accs, records): (Vec<_>, Vec<_>) = blocks.into_iter().unzip();
    let records = records.into_iter().flatten().collect();
    let res = finish_ensemble(merge_blocks(accs), rho0, params, law, ops)?;
    Ok((res, records))
}

/// Per-N outcome of a sweep.
pub struct SweepPoint {
    pub n: u32,
    pub series: ObservableSeries,
    pub minimum: Result<SqueezingMinimum>,
}

/// Integrates the master equation from the x-polarised CSS for every N.
/// `law_for(n)` builds the feedback law for that atom number.
pub fn sweep(
    ns: &[u32],
    params: &MeParams,
    law_for: impl Fn(u32) -> Result<FeedbackLaw> + Sync,
) -> Result<Vec<SweepPoint>> {
    // Largest N first: they dominate the cost.
    let mut order: Vec<usize> = (0..ns.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(ns[i]));
    let mut done = order
        .into_par_iter()
        .map(|i| -> Result<(usize, SweepPoint)> {
            let n = ns[i];
            let ops = SpinOperators::new(SpinSystem::new(n)?);
            let (series, _) = integrate_me(&ops.css_x(), params, &law_for(n)?, &ops)?;
            let minimum = find_minimum(&series);
            Ok((i, SweepPoint { n, series, minimum }))
        })
        .collect::<Result<Vec<_>>>()?;
    done.sort_by_key(|p| p.0);
    Ok(done.into_iter().map(|p| p.1).collect())
}
