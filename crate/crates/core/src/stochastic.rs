//! Homodyne-conditioned trajectories with instantaneous feedback, and
//! deterministic ensemble averages over them.
//!
//! Each step applies the measurement update, then the feedback rotation
//! `exp(-i (lambda / sqrt(M)) I_c dt Jy)`, then renormalises. The measurement
//! update is written in Kraus form,
//!
//! ```text
//! rho' = K rho K + (1 - eta) dt Jz rho Jz,
//! K    = 1 - Jz^2 dt / 2 + sqrt(eta) Jz dY + eta Jz^2 (dY^2 - dt) / 2,
//! dY   = 2 sqrt(eta) <Jz> dt + dW,
//! ```
//!
//! which has the same drift and diffusion as the Euler-Maruyama update but
//! maps pure states to pure states when eta = 1. K is diagonal in the Dicke
//! basis, so the update is elementwise.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::dynamics::{evolve_me, MeParams};
use crate::feedback::FeedbackLaw;
use crate::linalg::{trace_distance, CMatrix};
use crate::observables::{ObservableSeries, Sample};
use crate::spin::{Axis, DensityMatrix, SpinOperators};
use crate::{Error, Result, C64};

/// Default step for trajectories, in units of Mt.
pub const DEFAULT_SME_DT: f64 = 1e-4;
/// Trajectories per accumulation block. Blocks are the unit of parallel work.
pub const ENSEMBLE_BLOCK: usize = 8;

/// splitmix64 finaliser.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of trajectory `index` in the ensemble started from `master_seed`:
/// `splitmix64(splitmix64(master_seed) ^ index)`.
pub fn stream_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master_seed) ^ index)
}

/// Wiener increments `dW = sqrt(dt) * N(0, 1)` from ChaCha8.
#[derive(Clone, Debug)]
pub struct NoiseStream {
    seed: u64,
    sqrt_dt: f64,
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(seed: u64, dt: f64) -> Self {
        NoiseStream {
            seed,
            sqrt_dt: libm::sqrt(dt),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn for_trajectory(master_seed: u64, index: u64, dt: f64) -> Self {
        Self::new(stream_seed(master_seed, index), dt)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_dw(&mut self) -> f64 {
        let z: f64 = StandardNormal.sample(&mut self.rng);
        z * self.sqrt_dt
    }
}

#[derive(Clone, Debug)]
pub struct SmeStep {
    pub state: DensityMatrix,
    /// Photocurrent integrated over the step, `I_c dt`.
    pub charge: f64,
}

/// One conditioned step of length `params.dt` (units of Mt) driven by the
/// Wiener increment `dw` (variance `params.dt`).
pub fn sme_step(
    rho_c: &DensityMatrix,
    dw: f64,
    params: &MeParams,
    lambda: f64,
    ops: &SpinOperators,
) -> Result<SmeStep> {
    params.validate()?;
    if rho_c.dim() != ops.dim() {
        return Err(Error::DimensionMismatch {
            expected: ops.dim(),
            found: rho_c.dim(),
        });
    }
    if !lambda.is_finite() {
        return Err(Error::invalid("lambda", "must be finite"));
    }
    let mut rho = rho_c.matrix().clone();
    let charge = step_in_place(&mut rho, dw, params, lambda, ops)?;
    Ok(SmeStep {
        state: DensityMatrix::from_matrix_unchecked(rho),
        charge,
    })
}

fn step_in_place(
    rho: &mut CMatrix,
    dw: f64,
    params: &MeParams,
    lambda: f64,
    ops: &SpinOperators,
) -> Result<f64> {
    let m = params.measurement_strength;
    if !(m > 0.0) {
        return Err(Error::invalid(
            "measurement_strength",
            "conditioned evolution needs M > 0",
        ));
    }
    let eta = params.efficiency;
    let dt = params.dt;
    let sys = ops.system();
    let d = sys.dim();

    let jz_mean = ops.mean(Axis::Z, rho);
    let dy = 2.0 * libm::sqrt(eta) * jz_mean * dt + dw;
    let sq_eta = libm::sqrt(eta);
    let mut k = Vec::with_capacity(d);
    for i in 0..d {
        let mi = sys.m(i);
        k.push(1.0 - 0.5 * mi * mi * dt + sq_eta * mi * dy + 0.5 * eta * mi * mi * (dy * dy - dt));
    }
    let unread = (1.0 - eta) * dt;
    let data = rho.as_mut_slice();
    for i in 0..d {
        let mi = sys.m(i);
        for j in 0..d {
            let f = k[i] * k[j] + unread * mi * sys.m(j);
            data[i * d + j] *= f;
        }
    }
    normalise(rho)?;

    // I_c dt in physical time: (2 eta <Jz> dtau + sqrt(eta) dW) / sqrt(M).
    let charge = sq_eta * dy / libm::sqrt(m);
    let angle = lambda / libm::sqrt(m) * charge;
    if angle != 0.0 {
        let u = ops.rotation_y_real(angle);
        conjugate_real(rho, &u);
        normalise(rho)?;
    }
    Ok(charge)
}

/// rho <- U rho U^T for a real row-major U.
fn conjugate_real(rho: &mut CMatrix, u: &[f64]) {
    let d = rho.dim();
    let r = rho.as_slice();
    let mut t = vec![C64::new(0.0, 0.0); d * d];
    for i in 0..d {
        let row = &mut t[i * d..(i + 1) * d];
        for k in 0..d {
            let a = u[i * d + k];
            for (o, &b) in row.iter_mut().zip(&r[k * d..(k + 1) * d]) {
                *o += b * a;
            }
        }
    }
    let out = rho.as_mut_slice();
    for i in 0..d {
        for j in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for (&a, &b) in t[i * d..(i + 1) * d].iter().zip(&u[j * d..(j + 1) * d]) {
                acc += a * b;
            }
            out[i * d + j] = acc;
        }
    }
}

fn normalise(rho: &mut CMatrix) -> Result<()> {
    let tr = rho.trace().re;
    if !(tr > 0.0) || !tr.is_finite() {
        return Err(Error::StepTooLarge { trace: tr });
    }
    let inv = C64::new(1.0 / tr, 0.0);
    for z in rho.as_mut_slice() {
        *z *= inv;
    }
    Ok(())
}

/// Conditional moments at one sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionalMeans {
    pub jx: f64,
    pub jz: f64,
    pub jz2: f64,
}

#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub times: Vec<f64>,
    /// `I_c dt` summed over the steps since the previous sample (0 at tau = 0).
    pub charge: Vec<f64>,
    pub cond_means: Vec<ConditionalMeans>,
    pub cond_purity: Vec<f64>,
    /// lambda applied at the step that starts at each sample.
    pub lambda: Vec<f64>,
    pub final_state: DensityMatrix,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Simulates one trajectory seeded with `seed` directly.
pub fn simulate_trajectory(
    rho0: &DensityMatrix,
    params: &MeParams,
    law: &FeedbackLaw,
    seed: u64,
    ops: &SpinOperators,
) -> Result<TrajectoryRecord> {
    simulate_trajectory_with(rho0, params, law, seed, ops, |_, _, _| {})
}

/// As [`simulate_trajectory`], also handing the conditional state at each
/// sample to `on_sample(sample_index, lambda, rho_c)`.
pub fn simulate_trajectory_with<F>(
    rho0: &DensityMatrix,
    params: &MeParams,
    law: &FeedbackLaw,
    seed: u64,
    ops: &SpinOperators,
    mut on_sample: F,
) -> Result<TrajectoryRecord>
where
    F: FnMut(usize, f64, &CMatrix),
{
    params.validate()?;
    if rho0.dim() != ops.dim() {
        return Err(Error::DimensionMismatch {
            expected: ops.dim(),
            found: rho0.dim(),
        });
    }
    let m = params.measurement_strength;
    let mut noise = NoiseStream::new(seed, params.dt);
    let n_steps = params.n_steps();
    let cap = n_steps / params.sample_every + 2;
    let mut rec = TrajectoryRecord {
        seed,
        times: Vec::with_capacity(cap),
        charge: Vec::with_capacity(cap),
        cond_means: Vec::with_capacity(cap),
        cond_purity: Vec::with_capacity(cap),
        lambda: Vec::with_capacity(cap),
        final_state: rho0.clone(),
    };

    let mut rho = rho0.matrix().clone();
    let mut lambda = law.lambda(0.0, m, &rho, ops)?;
    let mut charge_acc = 0.0;
    record(&mut rec, 0.0, 0.0, lambda, &rho, ops);
    on_sample(0, lambda, &rho);

    for k in 0..n_steps {
        let dw = noise.next_dw();
        charge_acc += step_in_place(&mut rho, dw, params, lambda, ops)?;
        let step = k + 1;
        let tau = step as f64 * params.dt;
        if step < n_steps || params.is_sample_step(step) {
            lambda = law.lambda(tau, m, &rho, ops)?;
        }
        if params.is_sample_step(step) {
            record(&mut rec, tau, charge_acc, lambda, &rho, ops);
            on_sample(rec.len() - 1, lambda, &rho);
            charge_acc = 0.0;
        }
    }
    rec.final_state = DensityMatrix::from_matrix_unchecked(rho);
    Ok(rec)
}

fn record(
    rec: &mut TrajectoryRecord,
    tau: f64,
    charge: f64,
    lambda: f64,
    rho: &CMatrix,
    ops: &SpinOperators,
) {
    rec.times.push(tau);
    rec.charge.push(charge);
    rec.cond_means.push(ConditionalMeans {
        jx: ops.mean(Axis::X, rho),
        jz: ops.mean(Axis::Z, rho),
        jz2: ops.jz_sq().trace_product(rho).re,
    });
    rec.cond_purity.push(rho.frobenius_norm_sqr());
    rec.lambda.push(lambda);
}

/// Running sums of conditional states at each sample.
#[derive(Clone, Debug)]
pub struct EnsembleAccumulator {
    pub count: usize,
    pub tau: Vec<f64>,
    pub rho_sum: Vec<CMatrix>,
    pub lambda_sum: Vec<f64>,
}

impl EnsembleAccumulator {
    fn empty() -> Self {
        EnsembleAccumulator {
            count: 0,
            tau: Vec::new(),
            rho_sum: Vec::new(),
            lambda_sum: Vec::new(),
        }
    }

    fn merge(mut self, other: EnsembleAccumulator) -> Self {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        for (a, b) in self.rho_sum.iter_mut().zip(&other.rho_sum) {
            *a += b;
        }
        for (a, b) in self.lambda_sum.iter_mut().zip(&other.lambda_sum) {
            *a += b;
        }
        self.count += other.count;
        self
    }
}

/// Trajectory index ranges of the accumulation blocks for an ensemble of `k`.
pub fn block_ranges(k: usize) -> Vec<Range<usize>> {
    (0..k)
        .step_by(ENSEMBLE_BLOCK)
        .map(|s| s..(s + ENSEMBLE_BLOCK).min(k))
        .collect()
}

/// Runs the trajectories in `range` sequentially and sums them. With
/// `keep_records` the per-trajectory records are returned as well.
pub fn run_block(
    rho0: &DensityMatrix,
    params: &MeParams,
    law: &FeedbackLaw,
    master_seed: u64,
    range: Range<usize>,
    keep_records: bool,
    ops: &SpinOperators,
) -> Result<(EnsembleAccumulator, Vec<(usize, TrajectoryRecord)>)> {
    let mut acc = EnsembleAccumulator::empty();
    let mut records = Vec::new();
    for index in range {
        let seed = stream_seed(master_seed, index as u64);
        let first = acc.count == 0;
        let rec = simulate_trajectory_with(rho0, params, law, seed, ops, |i, lambda, rho| {
            if first {
                acc.rho_sum.push(rho.clone());
                acc.lambda_sum.push(lambda);
            } else {
                acc.rho_sum[i] += rho;
                acc.lambda_sum[i] += lambda;
            }
        })?;
        if first {
            acc.tau = rec.times.clone();
        }
        acc.count += 1;
        if keep_records {
            records.push((index, rec));
        }
    }
    Ok((acc, records))
}

/// Combines block sums in a fixed balanced tree over block order, so the
/// floating-point result does not depend on how blocks were scheduled.
pub fn merge_blocks(mut blocks: Vec<EnsembleAccumulator>) -> EnsembleAccumulator {
    if blocks.is_empty() {
        return EnsembleAccumulator::empty();
    }
    while blocks.len() > 1 {
        let mut next = Vec::with_capacity(blocks.len().div_ceil(2));
        let mut it = blocks.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a.merge(b)),
                None => next.push(a),
            }
        }
        blocks = next;
    }
    blocks.pop().expect("one block left")
}

#[derive(Clone, Debug)]
pub struct EnsembleResult {
    /// Moments of the averaged state; `lambda` is the mean applied lambda.
    pub series: ObservableSeries,
    /// Trace distance to the master-equation state at each sample.
    pub trace_distance: Vec<f64>,
    /// 1 / sqrt(K)
    pub stat_scale: f64,
    pub k: usize,
    pub mean_final: DensityMatrix,
}

impl EnsembleResult {
    pub fn max_trace_distance(&self) -> f64 {
        self.trace_distance.iter().copied().fold(0.0, f64::max)
    }
}

/// Turns merged sums into averages and compares each sample against the
/// master equation integrated with the same parameters.
pub fn finish_ensemble(
    acc: EnsembleAccumulator,
    rho0: &DensityMatrix,
    params: &MeParams,
    law: &FeedbackLaw,
    ops: &SpinOperators,
) -> Result<EnsembleResult> {
    if acc.count == 0 {
        return Err(Error::invalid(
            "k",
            "ensemble needs at least one trajectory",
        ));
    }
    let k = acc.count;
    let inv = 1.0 / k as f64;
    let mut means = Vec::with_capacity(acc.rho_sum.len());
    let mut series = ObservableSeries::new(ops.system().n_atoms());
    for ((sum, lambda_sum), &tau) in acc.rho_sum.into_iter().zip(&acc.lambda_sum).zip(&acc.tau) {
        let mean = if k == 1 { sum } else { sum.scale_real(inv) };
        let lambda = if k == 1 {
            *lambda_sum
        } else {
            lambda_sum * inv
        };
        series.push(Sample::measure(tau, lambda, &mean, ops));
        means.push(mean);
    }

    let mut trace_dist = Vec::with_capacity(means.len());
    let mut idx = 0;
    evolve_me(rho0, params, law, ops, |_, _, state| {
        if let Some(mean) = means.get(idx) {
            trace_dist.push(trace_distance(mean, state.matrix()));
        }
        idx += 1;
        Ok(())
    })?;
    let mean_final =
        DensityMatrix::from_matrix_unchecked(means.pop().unwrap_or_else(|| rho0.matrix().clone()));
    Ok(EnsembleResult {
        series,
        trace_distance: trace_dist,
        stat_scale: libm::sqrt(inv),
        k,
        mean_final,
    })
}

/// Averages `k` trajectories seeded from `master_seed`, sequentially.
pub fn ensemble_average(
    rho0: &DensityMatrix,
    params: &MeParams,
    law: &FeedbackLaw,
    k: usize,
    master_seed: u64,
    ops: &SpinOperators,
) -> Result<EnsembleResult> {
    if k == 0 {
        return Err(Error::invalid(
            "k",
            "ensemble needs at least one trajectory",
        ));
    }
    let mut blocks = Vec::new();
    for range in block_ranges(k) {
        blocks.push(run_block(rho0, params, law, master_seed, range, false, ops)?.0);
    }
    finish_ensemble(merge_blocks(blocks), rho0, params, law, ops)
}
