//! Composition-scan drift conditions built from a random-sequence or
//! random-scan one.
//!
//! Given `P V <= lambda V + b` for a random strategy with selection
//! probability `s` and `lambda > max(s, 1 - s)`, a new drift function
//! `V~` assembled from conditional expectations of `V` satisfies
//! `P_CGS V~ <= lambda~ V~ + b~`.

use std::fmt;

use super::certificate::DriftCertificate;
use crate::error::{Error, Result};
use crate::scan::StrategyKind;

/// The certificate a transfer starts from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferSource {
    pub kind: StrategyKind,
    /// Drift rate used by the construction (possibly raised above the
    /// source certificate's own rate, see [`transfer_from_certificate`]).
    pub lambda: f64,
    pub b: f64,
    /// `q` for random-sequence sources, `p` for random-scan ones.
    pub probability: f64,
}

/// How the composition-scan drift function is assembled from the source
/// drift function `V`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TransferRecipe {
    /// `V~(x, y) = v E[E[V(x', y') | y'] | x] + E[E[V(x', y') | x'] | y]
    ///            + w E[V(x', y) | y]`
    FromRandomSequence { v: f64, w: f64 },
    /// `V~(x, y) = E[V(x, y') | x] + v E[V(x', y) | y]`
    FromRandomScan { v: f64 },
}

impl fmt::Display for TransferRecipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            TransferRecipe::FromRandomSequence { v, w } => write!(
                f,
                "{v}*E[E[V(x',y')|y']|x] + E[E[V(x',y')|x']|y] + {w}*E[V(x',y)|y]"
            ),
            TransferRecipe::FromRandomScan { v } => {
                write!(f, "E[V(x,y')|x] + {v}*E[V(x',y)|y]")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferCertificate {
    pub source: TransferSource,
    /// Only for random-sequence sources.
    pub w: Option<f64>,
    pub v: f64,
    pub lambda_tilde: f64,
    pub b_tilde: f64,
    pub recipe: TransferRecipe,
    /// Open interval `w` was chosen from.
    pub w_interval: Option<(f64, f64)>,
    /// Open interval `v` was chosen from; the upper end is infinite for
    /// random-scan sources.
    pub v_interval: (f64, f64),
}

fn check_source(lambda: f64, b: f64, prob: f64, name: &str) -> Result<()> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "{name} must lie strictly inside (0, 1), got {prob}"
        )));
    }
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "b must be positive, got {b}"
        )));
    }
    let floor = prob.max(1.0 - prob);
    if !(lambda > floor && lambda < 1.0) {
        return Err(Error::PreconditionNotMet(format!(
            "lambda={lambda} must lie in (max({name}, 1-{name}) = {floor}, 1)"
        )));
    }
    Ok(())
}

fn check_rate(lambda_tilde: f64, context: impl FnOnce() -> String) -> Result<()> {
    if lambda_tilde > 0.0 && lambda_tilde < 1.0 {
        Ok(())
    } else {
        Err(Error::InternalConsistency(format!(
            "transferred rate {lambda_tilde} outside (0, 1) for {}",
            context()
        )))
    }
}

/// Random-sequence source with rate `lambda`, constant `b`, probability `q`.
///
/// `w` and `v` are taken at the midpoints of their admissible intervals
/// and the reported rate is the construction's lower bound.
pub fn transfer_from_rqgs(lambda: f64, b: f64, q: f64) -> Result<TransferCertificate> {
    check_source(lambda, b, q, "q")?;
    let inputs = || format!("lambda={lambda}, b={b}, q={q}");

    let w_lo = lambda * (lambda - q) / (q * q);
    let w_hi = lambda * (1.0 - q) / (q * q);
    let w = 0.5 * (w_lo + w_hi);

    let v_lo = w_hi - w;
    let v_hi = (lambda * (1.0 - q) - (lambda - (1.0 - q)) * q * w) / (lambda * q);
    if v_lo >= v_hi || v_lo.is_nan() || v_hi.is_nan() {
        return Err(Error::InternalConsistency(format!(
            "empty v interval ({v_lo}, {v_hi}) for {}",
            inputs()
        )));
    }
    let v = 0.5 * (v_lo + v_hi);

    let first = (q + lambda) / q - (v + w) * q / (1.0 - q);
    let second = (lambda / w) * ((v + w) / (1.0 - q) - 1.0 / q);
    let lambda_tilde = first.max(second);
    check_rate(lambda_tilde, inputs)?;

    Ok(TransferCertificate {
        source: TransferSource {
            kind: StrategyKind::RandomSequence,
            lambda,
            b,
            probability: q,
        },
        w: Some(w),
        v,
        lambda_tilde,
        b_tilde: b * (v + w) / (1.0 - q),
        recipe: TransferRecipe::FromRandomSequence { v, w },
        w_interval: Some((w_lo, w_hi)),
        v_interval: (v_lo, v_hi),
    })
}

/// Random-scan source with rate `lambda`, constant `b`, probability `p`.
///
/// `v` must exceed a lower bound only; twice that bound is used.
pub fn transfer_from_rsgs(lambda: f64, b: f64, p: f64) -> Result<TransferCertificate> {
    check_source(lambda, b, p, "p")?;
    let v_lo = p * (lambda - p) / (lambda * (1.0 - lambda));
    let v = 2.0 * v_lo;
    let lambda_tilde =
        (lambda - p) / (v * (1.0 - p)) + (lambda - p) * (lambda + p - 1.0) / (p * (1.0 - p));
    check_rate(lambda_tilde, || format!("lambda={lambda}, b={b}, p={p}"))?;
    Ok(TransferCertificate {
        source: TransferSource {
            kind: StrategyKind::RandomScan,
            lambda,
            b,
            probability: p,
        },
        w: None,
        v,
        lambda_tilde,
        b_tilde: b * (lambda * v + p) / (p * (1.0 - p)),
        recipe: TransferRecipe::FromRandomScan { v },
        w_interval: None,
        v_interval: (v_lo, f64::INFINITY),
    })
}

/// Transfers a random-strategy certificate to the composition scan.
///
/// A drift condition that holds at rate `lambda` also holds at any larger
/// rate below one, so when the certificate's rate does not exceed
/// `max(s, 1 - s)` it is raised to the midpoint of `(max(s, 1 - s), 1)`.
pub fn transfer_from_certificate(cert: &DriftCertificate) -> Result<TransferCertificate> {
    let prob = cert.strategy.probability().ok_or_else(|| {
        Error::InvalidArgument("composition certificates have nothing to transfer".into())
    })?;
    let floor = prob.max(1.0 - prob);
    let lambda = if cert.lambda > floor {
        cert.lambda
    } else {
        0.5 * (floor + 1.0)
    };
    match cert.kind() {
        StrategyKind::RandomSequence => transfer_from_rqgs(lambda, cert.b, prob),
        StrategyKind::RandomScan => transfer_from_rsgs(lambda, cert.b, prob),
        StrategyKind::Composition => unreachable!("composition has no probability"),
    }
}
