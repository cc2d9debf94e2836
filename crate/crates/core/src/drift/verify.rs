//! Monte Carlo spot-check of a drift inequality at chosen states.

use rayon::prelude::*;

use super::certificate::DriftCertificate;
use super::transfer::{TransferCertificate, TransferRecipe};
use super::MomentContract;
use crate::chain::{apply_kernel_with, Moments};
use crate::conditional::ConditionalPair;
use crate::error::{Error, Result};
use crate::rng::{RngStream, Variates};
use crate::scan::{step, update_x, update_y, ScanStrategy};
use crate::state::JointState;

/// Slack, in standard errors, allowed before a probe fails.
pub const PASS_THRESHOLD_SE: f64 = 3.0;

/// What to verify.
#[derive(Clone, Copy, Debug)]
pub enum DriftTarget<'a> {
    /// `V = coef_f f + coef_g g` under the certificate's own kernel.
    Certificate(&'a DriftCertificate),
    /// The transferred function under the composition kernel; `source`
    /// supplies the drift function the recipe is built from.
    Transfer {
        certificate: &'a TransferCertificate,
        source: &'a DriftCertificate,
    },
}

impl DriftTarget<'_> {
    fn rate_and_constant(&self) -> (f64, f64) {
        match self {
            DriftTarget::Certificate(c) => (c.lambda, c.b),
            DriftTarget::Transfer { certificate, .. } => {
                (certificate.lambda_tilde, certificate.b_tilde)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeResult {
    pub index: usize,
    /// Estimate of `PV` at the probe.
    pub estimate: f64,
    /// Combined Monte Carlo standard error of `estimate - bound`.
    pub std_error: f64,
    /// `V` at the probe (itself estimated for transfer targets).
    pub drift_value: f64,
    /// `lambda V + b`.
    pub bound: f64,
    /// `bound - estimate`.
    pub slack: f64,
    pub pass: bool,
    /// Set when sampling failed at this probe.
    pub error: Option<String>,
}

impl ProbeResult {
    fn failed(index: usize, err: Error) -> Self {
        Self {
            index,
            estimate: f64::NAN,
            std_error: f64::NAN,
            drift_value: f64::NAN,
            bound: f64::NAN,
            slack: f64::NAN,
            pass: false,
            error: Some(err.to_string()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub lambda: f64,
    pub b: f64,
    pub probes: Vec<ProbeResult>,
    pub pass_fraction: f64,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.probes.iter().all(|p| p.pass)
    }
}

/// Checks `PV(s) <= lambda V(s) + b + 3 SE` at every probe state `s`.
///
/// Probe `i` draws from `rng.derive(i)`, so the report does not depend on
/// how probes are scheduled across threads.
pub fn verify_drift<C>(
    target: DriftTarget<'_>,
    cond: &C,
    contract: &MomentContract,
    probes: &[JointState],
    mc_samples: usize,
    rng: &RngStream,
) -> Result<VerificationReport>
where
    C: ConditionalPair + ?Sized,
{
    if probes.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one probe state is required".into(),
        ));
    }
    if mc_samples < 100 {
        return Err(Error::InvalidArgument(format!(
            "mc_samples must be at least 100, got {mc_samples}"
        )));
    }
    let (lambda, b) = target.rate_and_constant();
    let results: Vec<ProbeResult> = probes
        .par_iter()
        .enumerate()
        .map(|(i, probe)| {
            let mut source = rng.derive(i as u64).open();
            let outcome = match target {
                DriftTarget::Certificate(cert) => {
                    check_certificate(cert, cond, contract, probe, mc_samples, &mut source)
                }
                DriftTarget::Transfer {
                    certificate,
                    source: src,
                } => check_transfer(
                    certificate,
                    src,
                    cond,
                    contract,
                    probe,
                    mc_samples,
                    &mut source,
                ),
            };
            match outcome {
                Ok(mut r) => {
                    r.index = i;
                    r
                }
                Err(e) => ProbeResult::failed(i, e),
            }
        })
        .collect();
    let passed = results.iter().filter(|r| r.pass).count();
    Ok(VerificationReport {
        lambda,
        b,
        pass_fraction: passed as f64 / results.len() as f64,
        probes: results,
    })
}

fn judge(estimate: f64, std_error: f64, drift_value: f64, lambda: f64, b: f64) -> ProbeResult {
    let bound = lambda * drift_value + b;
    let slack = bound - estimate;
    ProbeResult {
        index: 0,
        estimate,
        std_error,
        drift_value,
        bound,
        slack,
        pass: estimate <= bound + PASS_THRESHOLD_SE * std_error,
        error: None,
    }
}

fn check_certificate<C: ConditionalPair + ?Sized>(
    cert: &DriftCertificate,
    cond: &C,
    contract: &MomentContract,
    probe: &JointState,
    mc_samples: usize,
    rng: &mut dyn Variates,
) -> Result<ProbeResult> {
    let v = |s: &JointState| cert.drift_value((contract.f)(&s.x), (contract.g)(&s.y));
    let est = apply_kernel_with(v, probe, &cert.strategy, cond, mc_samples, rng)?;
    Ok(judge(
        est.estimate,
        est.std_error,
        v(probe),
        cert.lambda,
        cert.b,
    ))
}

/// One unbiased draw of the transferred drift function at `(x, y)`.
fn recipe_draw<C: ConditionalPair + ?Sized>(
    recipe: &TransferRecipe,
    v: &dyn Fn(&[f64], &[f64]) -> f64,
    cond: &C,
    state: &JointState,
    rng: &mut dyn Variates,
) -> Result<f64> {
    let (x, y) = (&state.x, &state.y);
    match *recipe {
        TransferRecipe::FromRandomSequence { v: coef_g, w } => {
            // E[E[V(x',y')|y']|x]
            let y1 = update_y(cond, x, rng)?;
            let x1 = update_x(cond, &y1, rng)?;
            let g = v(&x1, &y1);
            // E[E[V(x',y')|x']|y]
            let x2 = update_x(cond, y, rng)?;
            let y2 = update_y(cond, &x2, rng)?;
            let h = v(&x2, &y2);
            // E[V(x',y)|y]
            let x3 = update_x(cond, y, rng)?;
            let z = v(&x3, y);
            Ok(coef_g * g + h + w * z)
        }
        TransferRecipe::FromRandomScan { v: coef_h } => {
            let y1 = update_y(cond, x, rng)?;
            let g = v(x, &y1);
            let x1 = update_x(cond, y, rng)?;
            let h = v(&x1, y);
            Ok(g + coef_h * h)
        }
    }
}

fn check_transfer<C: ConditionalPair + ?Sized>(
    cert: &TransferCertificate,
    source: &DriftCertificate,
    cond: &C,
    contract: &MomentContract,
    probe: &JointState,
    mc_samples: usize,
    rng: &mut dyn Variates,
) -> Result<ProbeResult> {
    probe.check_dims(cond.dim_x(), cond.dim_y())?;
    let v = |x: &[f64], y: &[f64]| source.drift_value((contract.f)(x), (contract.g)(y));

    let mut at_probe = Moments::default();
    for _ in 0..mc_samples {
        at_probe.push(recipe_draw(&cert.recipe, &v, cond, probe, rng)?);
    }

    let cgs = ScanStrategy::composition();
    let mut after_step = Moments::default();
    for _ in 0..mc_samples {
        let next = step(probe, &cgs, cond, rng)?;
        after_step.push(recipe_draw(&cert.recipe, &v, cond, &next, rng)?);
    }

    let lambda = cert.lambda_tilde;
    let se = (after_step.std_error().powi(2) + (lambda * at_probe.std_error()).powi(2)).sqrt();
    Ok(judge(
        after_step.mean(),
        se,
        at_probe.mean(),
        lambda,
        cert.b_tilde,
    ))
}
