//! Multi-step evolution and the transition kernel viewed as an operator.

use crate::conditional::ConditionalPair;
use crate::error::{Error, Result};
use crate::rng::{RngStream, Variates};
use crate::scan::{step, ScanStrategy};
use crate::state::JointState;

/// Stored output of one chain.
///
/// With `thin = 1` the run holds every state, `states[0]` being the initial
/// one, so `states.len() == iterations + 1`. With `thin = k` it holds states
/// `0, k, 2k, ...` up to `iterations`.
#[derive(Clone, Debug)]
pub struct ChainRun {
    pub states: Vec<JointState>,
    pub strategy: ScanStrategy,
    pub iterations: usize,
    pub thin: usize,
    pub seed: RngStream,
    pub initial: JointState,
}

/// Evolves the chain for `n` iterations, calling `visit(i, state)` for
/// `i = 0..=n`. Returns the final state.
pub fn walk<C, F>(
    initial: &JointState,
    n: usize,
    strategy: &ScanStrategy,
    cond: &C,
    rng: &RngStream,
    mut visit: F,
) -> Result<JointState>
where
    C: ConditionalPair + ?Sized,
    F: FnMut(usize, &JointState),
{
    strategy.validate()?;
    initial.validate()?;
    let mut source = rng.open();
    let mut state = initial.clone();
    visit(0, &state);
    for i in 0..n {
        state = step(&state, strategy, cond, &mut source).map_err(|e| e.at_iteration(i + 1))?;
        visit(i + 1, &state);
    }
    Ok(state)
}

pub fn run<C: ConditionalPair + ?Sized>(
    initial: &JointState,
    n: usize,
    strategy: &ScanStrategy,
    cond: &C,
    rng: &RngStream,
) -> Result<ChainRun> {
    run_thinned(initial, n, strategy, cond, rng, 1)
}

/// As [`run`], keeping only every `thin`-th state.
pub fn run_thinned<C: ConditionalPair + ?Sized>(
    initial: &JointState,
    n: usize,
    strategy: &ScanStrategy,
    cond: &C,
    rng: &RngStream,
    thin: usize,
) -> Result<ChainRun> {
    if n < 1 {
        return Err(Error::InvalidArgument(
            "iterations must be at least 1".into(),
        ));
    }
    if thin < 1 {
        return Err(Error::InvalidArgument(
            "thinning interval must be at least 1".into(),
        ));
    }
    let mut states = Vec::with_capacity(n / thin + 1);
    walk(initial, n, strategy, cond, rng, |i, s| {
        if i % thin == 0 {
            states.push(s.clone());
        }
    })?;
    Ok(ChainRun {
        states,
        strategy: *strategy,
        iterations: n,
        thin,
        seed: *rng,
        initial: initial.clone(),
    })
}

/// Projection of a run onto its y component.
pub fn y_subchain(run: &ChainRun) -> Vec<Vec<f64>> {
    run.states.iter().map(|s| s.y.clone()).collect()
}

/// Monte Carlo estimate of `PV(state)` with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Running mean and variance.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Moments {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub(crate) fn push(&mut self, value: f64) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
    }

    pub(crate) fn mean(&self) -> f64 {
        self.mean
    }

    pub(crate) fn std_error(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        let var = self.m2 / (self.count - 1) as f64;
        (var / self.count as f64).sqrt()
    }
}

/// Averages `v` over `mc_samples` independent one-step transitions from
/// `state`, all drawn from the stream `rng`.
pub fn apply_kernel<C, V>(
    v: V,
    state: &JointState,
    strategy: &ScanStrategy,
    cond: &C,
    mc_samples: usize,
    rng: &RngStream,
) -> Result<KernelEstimate>
where
    C: ConditionalPair + ?Sized,
    V: Fn(&JointState) -> f64,
{
    let mut source = rng.open();
    apply_kernel_with(v, state, strategy, cond, mc_samples, &mut source)
}

/// [`apply_kernel`] drawing from an already-open variate source.
pub fn apply_kernel_with<C, V>(
    v: V,
    state: &JointState,
    strategy: &ScanStrategy,
    cond: &C,
    mc_samples: usize,
    rng: &mut dyn Variates,
) -> Result<KernelEstimate>
where
    C: ConditionalPair + ?Sized,
    V: Fn(&JointState) -> f64,
{
    if mc_samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "mc_samples must be at least 2, got {mc_samples}"
        )));
    }
    strategy.validate()?;
    let mut acc = Moments::default();
    for _ in 0..mc_samples {
        let next = step(state, strategy, cond, rng)?;
        acc.push(v(&next));
    }
    Ok(KernelEstimate {
        estimate: acc.mean(),
        std_error: acc.std_error(),
    })
}
