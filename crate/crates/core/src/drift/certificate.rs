use super::MomentBounds;
use crate::error::{Error, Result};
use crate::scan::{ScanStrategy, StrategyKind};

/// A drift condition `PV <= lambda V + b` for `V = coef_f f(x) + coef_g g(y)`
/// under the transition kernel of `strategy`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftCertificate {
    pub strategy: ScanStrategy,
    pub coef_f: f64,
    pub coef_g: f64,
    pub lambda: f64,
    pub b: f64,
    /// Mixing weight on `g`, present for the random strategies.
    pub v: Option<f64>,
}

impl DriftCertificate {
    pub fn kind(&self) -> StrategyKind {
        self.strategy.kind()
    }

    /// `V(x, y)` given the contract functions evaluated at the state.
    pub fn drift_value(&self, f_x: f64, g_y: f64) -> f64 {
        let mut total = 0.0;
        if self.coef_f != 0.0 {
            total += self.coef_f * f_x;
        }
        if self.coef_g != 0.0 {
            total += self.coef_g * g_y;
        }
        total
    }
}

fn check_prob(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must lie strictly inside (0, 1), got {value}"
        )))
    }
}

fn check_jm(j: f64, m: f64) -> Result<()> {
    if !(j.is_finite() && j > 0.0 && m.is_finite() && m > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "j and m must be positive, got j={j}, m={m}"
        )));
    }
    if j * m >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "jm must be < 1, got {}",
            j * m
        )));
    }
    Ok(())
}

/// Positive root of `a v^2 + b v - c = 0` for `a, c > 0`, evaluated so the
/// subtraction never cancels.
fn positive_root(a: f64, b: f64, c: f64) -> f64 {
    let disc = (b * b + 4.0 * a * c).sqrt();
    if b > 0.0 {
        2.0 * c / (b + disc)
    } else {
        (disc - b) / (2.0 * a)
    }
}

/// Weight `v` on `g` in the random-sequence drift function: the positive
/// root of `(1-q) m v^2 + (1-2q) jm v - q j = 0`.
pub fn v_rqgs(q: f64, j: f64, m: f64) -> Result<f64> {
    check_prob("q", q)?;
    check_jm(j, m)?;
    Ok(positive_root((1.0 - q) * m, (1.0 - 2.0 * q) * j * m, q * j))
}

/// Weight `v` on `g` in the random-scan drift function: the positive root
/// of `(1-p) m v^2 + (1-2p) v - p j = 0`.
pub fn v_rsgs(p: f64, j: f64, m: f64) -> Result<f64> {
    check_prob("p", p)?;
    check_jm(j, m)?;
    Ok(positive_root((1.0 - p) * m, 1.0 - 2.0 * p, p * j))
}

/// `V = g(y)`, `lambda = jm`, `b = mk + n`.
pub fn certificate_cgs(bounds: &MomentBounds) -> Result<DriftCertificate> {
    bounds.require_contraction()?;
    let MomentBounds { j, k, m, n } = *bounds;
    Ok(DriftCertificate {
        strategy: ScanStrategy::composition(),
        coef_f: 0.0,
        coef_g: 1.0,
        lambda: j * m,
        b: m * k + n,
        v: None,
    })
}

/// `V = f(x) + v g(y)` with `v = v_rqgs(q, j, m)`.
pub fn certificate_rqgs(bounds: &MomentBounds, q: f64) -> Result<DriftCertificate> {
    bounds.require_contraction()?;
    check_prob("q", q)?;
    let MomentBounds { j, k, m, n } = *bounds;
    let jm = j * m;
    let v = v_rqgs(q, j, m)?;
    let lambda = 0.5 * (jm + (jm * (jm + 4.0 * q * (1.0 - q) * (1.0 - jm))).sqrt());
    let via_v = (1.0 - q) * (j + v) * m;
    if (via_v - lambda).abs() > 1e-10 * lambda {
        return Err(Error::InternalConsistency(format!(
            "RQGS rate mismatch: closed form {lambda}, via v {via_v} (q={q}, j={j}, m={m})"
        )));
    }
    let b = q * (k + v * (m * k + n)) + (1.0 - q) * (v * n + (j * n + k));
    Ok(DriftCertificate {
        strategy: ScanStrategy::RandomSequence { q },
        coef_f: 1.0,
        coef_g: v,
        lambda,
        b,
        v: Some(v),
    })
}

/// `V = f(x) + v g(y)` with `v = v_rsgs(p, j, m)`.
pub fn certificate_rsgs(bounds: &MomentBounds, p: f64) -> Result<DriftCertificate> {
    bounds.require_contraction()?;
    check_prob("p", p)?;
    let MomentBounds { j, k, m, n } = *bounds;
    let jm = j * m;
    let v = v_rsgs(p, j, m)?;
    let lambda = 0.5 * (1.0 + (1.0 - 4.0 * p * (1.0 - p) * (1.0 - jm)).sqrt());
    let via_v = (1.0 - p) * (1.0 + v * m);
    if (via_v - lambda).abs() > 1e-10 * lambda {
        return Err(Error::InternalConsistency(format!(
            "RSGS rate mismatch: closed form {lambda}, via v {via_v} (p={p}, j={j}, m={m})"
        )));
    }
    Ok(DriftCertificate {
        strategy: ScanStrategy::RandomScan { p },
        coef_f: 1.0,
        coef_g: v,
        lambda,
        b: p * k + (1.0 - p) * v * n,
        v: Some(v),
    })
}

/// Two-step random-scan drift: `(lambda^2, b (1 + lambda))`.
pub fn two_step_rsgs(cert: &DriftCertificate) -> Result<(f64, f64)> {
    if cert.kind() != StrategyKind::RandomScan {
        return Err(Error::InvalidArgument(format!(
            "two-step drift needs a random-scan certificate, got {}",
            cert.strategy
        )));
    }
    Ok((cert.lambda * cert.lambda, cert.b * (1.0 + cert.lambda)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateOrdering {
    pub cgs: f64,
    pub rqgs: f64,
    pub rsgs_two_step: f64,
    pub rsgs: f64,
    /// `cgs < rqgs < rsgs_two_step < rsgs`, strictly.
    pub ordered: bool,
}

pub fn rate_ordering(bounds: &MomentBounds, q: f64, p: f64) -> Result<RateOrdering> {
    let cgs = certificate_cgs(bounds)?.lambda;
    let rqgs = certificate_rqgs(bounds, q)?.lambda;
    let rs = certificate_rsgs(bounds, p)?;
    let (rsgs_two_step, _) = two_step_rsgs(&rs)?;
    let rsgs = rs.lambda;
    Ok(RateOrdering {
        cgs,
        rqgs,
        rsgs_two_step,
        rsgs,
        ordered: cgs < rqgs && rqgs < rsgs_two_step && rsgs_two_step < rsgs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bounds(j: f64, k: f64, m: f64, n: f64) -> MomentBounds {
        MomentBounds::new(j, k, m, n).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn cgs_setting_one() {
        let c = certificate_cgs(&bounds(100.0, 11.0, 1.0 / 121.0, 12.0 / 11.0)).unwrap();
        assert!(rel(c.lambda, 100.0 / 121.0) < 1e-12);
        assert!(rel(c.b, 143.0 / 121.0) < 1e-12);
        assert_eq!((c.coef_f, c.coef_g), (0.0, 1.0));
    }

    #[test]
    fn cgs_rate_is_product() {
        let c = certificate_cgs(&bounds(0.5, 3.0, 0.5, 7.0)).unwrap();
        assert_eq!(c.lambda, 0.25);
    }

    #[test]
    fn no_certificate_when_jm_at_least_one() {
        match certificate_cgs(&bounds(2.0, 1.0, 1.0, 1.0)) {
            Err(Error::NoCertificate { jm }) => assert_eq!(jm, 2.0),
            other => panic!("unexpected {other:?}"),
        }
        assert!(certificate_rqgs(&bounds(1.0, 1.0, 1.0, 1.0), 0.5).is_err());
        assert!(certificate_rsgs(&bounds(1.0, 1.0, 1.0, 1.0), 0.5).is_err());
    }

    #[test]
    fn v_at_balanced_probability() {
        assert!((v_rqgs(0.5, 1.0, 0.25).unwrap() - 2.0).abs() < 1e-14);
        assert!((v_rsgs(0.5, 1.0, 0.25).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn v_rejects_bad_domain() {
        assert!(v_rqgs(0.0, 1.0, 0.25).is_err());
        assert!(v_rsgs(1.0, 1.0, 0.25).is_err());
        assert!(v_rqgs(0.5, 2.0, 0.5).is_err());
        assert!(v_rsgs(0.5, -1.0, 0.25).is_err());
    }

    #[test]
    fn balanced_rates() {
        let b = bounds(1.0, 1.0, 0.25, 1.0);
        assert!((certificate_rqgs(&b, 0.5).unwrap().lambda - 0.375).abs() < 1e-15);
        assert!((certificate_rsgs(&b, 0.5).unwrap().lambda - 0.75).abs() < 1e-15);
    }

    #[test]
    fn rqgs_rate_tends_to_cgs_at_the_edges() {
        let b = bounds(1.0, 1.0, 0.25, 1.0);
        for q in [1e-9, 1.0 - 1e-9] {
            let l = certificate_rqgs(&b, q).unwrap().lambda;
            assert!((l - 0.25).abs() < 1e-4, "q={q} lambda={l}");
        }
    }

    #[test]
    fn rqgs_rate_peaks_at_half() {
        let b = bounds(1.0, 1.0, 0.25, 1.0);
        let mid = certificate_rqgs(&b, 0.5).unwrap().lambda;
        for i in 1..100 {
            let q = i as f64 / 100.0;
            assert!(certificate_rqgs(&b, q).unwrap().lambda <= mid);
        }
    }

    #[test]
    fn rsgs_rate_is_minimal_at_half_and_degenerates_at_edges() {
        let b = bounds(1.0, 1.0, 0.25, 1.0);
        let mid = certificate_rsgs(&b, 0.5).unwrap().lambda;
        for i in 1..100 {
            let p = i as f64 / 100.0;
            assert!(certificate_rsgs(&b, p).unwrap().lambda >= mid);
        }
        let edge = certificate_rsgs(&b, 1e-9).unwrap().lambda;
        assert!((edge - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rqgs_constant_matches_formula() {
        // q=0.5, j=1, k=1, m=0.25, n=1, v=2:
        // 0.5[1 + 2(0.25 + 1)] + 0.5[2 + (1 + 1)] = 1.75 + 2 = 3.75
        let c = certificate_rqgs(&bounds(1.0, 1.0, 0.25, 1.0), 0.5).unwrap();
        assert!((c.b - 3.75).abs() < 1e-14);
        // p k + (1-p) v n = 0.5 + 0.5 * 2 = 1.5
        let s = certificate_rsgs(&bounds(1.0, 1.0, 0.25, 1.0), 0.5).unwrap();
        assert!((s.b - 1.5).abs() < 1e-14);
    }

    #[test]
    fn two_step_values() {
        let cert = DriftCertificate {
            strategy: ScanStrategy::RandomScan { p: 0.5 },
            coef_f: 1.0,
            coef_g: 1.0,
            lambda: 0.75,
            b: 1.0,
            v: Some(1.0),
        };
        assert_eq!(two_step_rsgs(&cert).unwrap(), (0.5625, 1.75));
        let cgs = certificate_cgs(&bounds(0.5, 1.0, 0.5, 1.0)).unwrap();
        assert!(two_step_rsgs(&cgs).is_err());
    }

    #[test]
    fn ordering_example() {
        let r = rate_ordering(&bounds(1.0, 1.0, 0.25, 1.0), 0.5, 0.5).unwrap();
        assert_eq!(
            (r.cgs, r.rqgs, r.rsgs_two_step, r.rsgs),
            (0.25, 0.375, 0.5625, 0.75)
        );
        assert!(r.ordered);
    }

    #[test]
    fn ordering_rates_approach_one_with_jm() {
        let r = rate_ordering(&bounds(1.0, 1.0, 0.999_999, 1.0), 0.3, 0.7).unwrap();
        for l in [r.cgs, r.rqgs, r.rsgs_two_step, r.rsgs] {
            assert!(l > 0.999 && l < 1.0);
        }
    }
}
