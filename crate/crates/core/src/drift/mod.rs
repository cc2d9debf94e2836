//! Drift certificates `PV <= lambda V + b` built from a cyclic pair of
//! conditional moment bounds
//!
//! ```text
//! E[f(x) | y] <= j g(y) + k
//! E[g(y) | x] <= m f(x) + n        with jm < 1.
//! ```
//!
//! Each constructor reports the smallest admissible drift rate.

mod certificate;
mod transfer;
mod verify;

use std::fmt;
use std::sync::Arc;

pub use certificate::{
    certificate_cgs, certificate_rqgs, certificate_rsgs, rate_ordering, two_step_rsgs, v_rqgs,
    v_rsgs, DriftCertificate, RateOrdering,
};
pub use transfer::{
    transfer_from_certificate, transfer_from_rqgs, transfer_from_rsgs, TransferCertificate,
    TransferRecipe, TransferSource,
};
pub use verify::{verify_drift, DriftTarget, ProbeResult, VerificationReport};

/// The four constants `(j, k, m, n)` of a moment contract.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentBounds {
    pub j: f64,
    pub k: f64,
    pub m: f64,
    pub n: f64,
}

impl MomentBounds {
    pub fn new(j: f64, k: f64, m: f64, n: f64) -> crate::Result<Self> {
        for (name, v) in [("j", j), ("k", k), ("m", m), ("n", n)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(crate::Error::InvalidArgument(format!(
                    "contract constant {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self { j, k, m, n })
    }

    pub fn jm(&self) -> f64 {
        self.j * self.m
    }

    /// `Err(NoCertificate)` unless `jm < 1`.
    pub fn require_contraction(&self) -> crate::Result<()> {
        let jm = self.jm();
        if jm < 1.0 {
            Ok(())
        } else {
            Err(crate::Error::NoCertificate { jm })
        }
    }
}

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Moment bounds together with the functions `f` (of x) and `g` (of y)
/// they refer to.
#[derive(Clone)]
pub struct MomentContract {
    pub bounds: MomentBounds,
    pub f: ScalarFn,
    pub g: ScalarFn,
}

impl MomentContract {
    pub fn new(bounds: MomentBounds, f: ScalarFn, g: ScalarFn) -> Self {
        Self { bounds, f, g }
    }

    /// Spot-checks `f >= 1` and `g >= 1` at the given states.
    pub fn check_lower_bounds<'a, I>(&self, states: I) -> bool
    where
        I: IntoIterator<Item = &'a crate::JointState>,
    {
        states
            .into_iter()
            .all(|s| (self.f)(&s.x) >= 1.0 && (self.g)(&s.y) >= 1.0)
    }
}

impl fmt::Debug for MomentContract {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MomentContract")
            .field("bounds", &self.bounds)
            .finish_non_exhaustive()
    }
}
