//! Output analysis: batch means, CLT intervals, autocorrelation time and the
//! replicated mean-squared-error study.

use rayon::prelude::*;

use crate::chain::walk;
use crate::conditional::ConditionalPair;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scan::ScanStrategy;
use crate::state::JointState;

/// Standard normal 97.5% quantile, as printed in the interval formula.
pub const Z_975: f64 = 1.960;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatchMeansEstimate {
    pub mean: f64,
    /// Asymptotic variance of the sample mean, scaled by `n`.
    pub sigma2_hat: f64,
    pub batch_size: usize,
    pub batch_count: usize,
    /// Length of the sequence the estimate came from.
    pub n_star: usize,
}

/// Non-overlapping batch means with `floor(sqrt(n))` batches of size
/// `floor(n / floor(sqrt(n)))`; the trailing remainder is dropped.
pub fn batch_means(values: &[f64]) -> Result<BatchMeansEstimate> {
    let n = values.len();
    if n < 4 {
        return Err(Error::InvalidArgument(format!(
            "batch means needs at least 4 values, got {n}"
        )));
    }
    let count = (n as f64).sqrt().floor() as usize;
    let size = n / count;
    let batch_avgs: Vec<f64> = values
        .chunks_exact(size)
        .take(count)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let mean = batch_avgs.iter().sum::<f64>() / count as f64;
    let dispersion: f64 = batch_avgs.iter().map(|m| (m - mean).powi(2)).sum();
    Ok(BatchMeansEstimate {
        mean,
        sigma2_hat: size as f64 / (count - 1) as f64 * dispersion,
        batch_size: size,
        batch_count: count,
        n_star: n,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub center: f64,
    pub half_width: f64,
}

impl Interval {
    pub fn lower(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.center + self.half_width
    }

    pub fn contains(&self, value: f64) -> bool {
        (self.lower()..=self.upper()).contains(&value)
    }
}

/// `mean +/- 1.960 sqrt(sigma2_hat / n_star)`.
pub fn ci95(est: &BatchMeansEstimate) -> Interval {
    Interval {
        center: est.mean,
        half_width: Z_975 * (est.sigma2_hat / est.n_star as f64).sqrt(),
    }
}

/// `sigma2_hat / var_marginal`.
pub fn act_hat(est: &BatchMeansEstimate, var_marginal: f64) -> Result<f64> {
    if !(var_marginal > 0.0 && var_marginal.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "marginal variance must be positive, got {var_marginal}"
        )));
    }
    Ok(est.sigma2_hat / var_marginal)
}

/// Sample lag-one autocorrelation.
pub fn lag1_autocorrelation(values: &[f64]) -> Result<f64> {
    if values.len() < 3 {
        return Err(Error::InvalidArgument("need at least 3 values".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    if var == 0.0 {
        return Err(Error::DivisionByZero(
            "constant sequence has no autocorrelation".into(),
        ));
    }
    let cov: f64 = values
        .windows(2)
        .map(|w| (w[0] - mean) * (w[1] - mean))
        .sum();
    Ok(cov / var)
}

/// Runs `replicates` independent chains of `iterations` steps from
/// `initial`, replicate `r` on `base.with_stream(r)`, and returns each
/// run's average of `observable` over all `iterations + 1` states.
///
/// Replicates run on the rayon pool; the output is in replicate order.
pub fn replicate_means<C, O>(
    cond: &C,
    strategy: &ScanStrategy,
    initial: &JointState,
    iterations: usize,
    replicates: usize,
    base: &RngStream,
    observable: O,
) -> Result<Vec<f64>>
where
    C: ConditionalPair + ?Sized,
    O: Fn(&JointState) -> f64 + Sync,
{
    if replicates < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 replicates, got {replicates}"
        )));
    }
    if iterations < 1 {
        return Err(Error::InvalidArgument(
            "iterations must be at least 1".into(),
        ));
    }
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut total = 0.0;
            walk(
                initial,
                iterations,
                strategy,
                cond,
                &base.with_stream(r as u64),
                |_, s| total += observable(s),
            )
            .map_err(|e| e.at_replicate(r))?;
            Ok(total / (iterations + 1) as f64)
        })
        .collect()
}

/// How to attach a standard error to an MSE ratio.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RatioError {
    /// `ratio^2 (cv_num^2 + cv_den^2)`.
    #[default]
    Delta,
    /// Delete-one jackknife applied to each sample independently.
    Jackknife,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationSummary {
    pub replicate_means: Vec<f64>,
    /// Mean of squared replicate means.
    pub mse_hat: f64,
    pub baseline_mse: f64,
    pub ratio_vs_baseline: f64,
    pub ratio_se: f64,
}

fn mean_of_squares(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
    let mean = sq.iter().sum::<f64>() / n;
    let var = sq.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var / n)
}

/// Jackknife variance of `log` of a mean of squares, which equals the
/// squared coefficient of variation to first order.
fn jackknife_log_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let total: f64 = values.iter().map(|v| v * v).sum();
    let leave_out: Vec<f64> = values
        .iter()
        .map(|v| ((total - v * v) / (n - 1.0)).ln())
        .collect();
    let mean = leave_out.iter().sum::<f64>() / n;
    (n - 1.0) / n * leave_out.iter().map(|l| (l - mean).powi(2)).sum::<f64>()
}

/// MSE of `candidate` relative to `baseline`, both taken about zero.
pub fn mse_ratio(
    candidate: &[f64],
    baseline: &[f64],
    method: RatioError,
) -> Result<ReplicationSummary> {
    if candidate.len() < 2 || baseline.len() < 2 {
        return Err(Error::InvalidArgument(
            "both samples need at least 2 replicate means".into(),
        ));
    }
    let (num, num_var) = mean_of_squares(candidate);
    let (den, den_var) = mean_of_squares(baseline);
    if den == 0.0 {
        return Err(Error::DivisionByZero("baseline MSE is zero".into()));
    }
    let ratio = num / den;
    let rel_var = match method {
        RatioError::Delta => {
            let cv_num = if num > 0.0 {
                num_var / (num * num)
            } else {
                0.0
            };
            cv_num + den_var / (den * den)
        }
        RatioError::Jackknife => {
            let num_part = if num > 0.0 {
                jackknife_log_variance(candidate)
            } else {
                0.0
            };
            num_part + jackknife_log_variance(baseline)
        }
    };
    Ok(ReplicationSummary {
        replicate_means: candidate.to_vec(),
        mse_hat: num,
        baseline_mse: den,
        ratio_vs_baseline: ratio,
        ratio_se: ratio * rel_var.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Variates;

    #[test]
    fn short_input_rejected() {
        assert!(batch_means(&[1.0, 2.0, 3.0]).is_err());
        assert!(batch_means(&[1.0, 2.0, 3.0, 4.0]).is_ok());
    }

    #[test]
    fn batch_layout() {
        let v: Vec<f64> = (0..10).map(f64::from).collect();
        let est = batch_means(&v).unwrap();
        assert_eq!((est.batch_count, est.batch_size, est.n_star), (3, 3, 10));
        // batches 1, 4, 7 around 4: dispersion 18, scaled by 3/2
        assert_eq!(est.mean, 4.0);
        assert_eq!(est.sigma2_hat, 27.0);
    }

    #[test]
    fn constant_sequence() {
        let est = batch_means(&[2.5; 100]).unwrap();
        assert_eq!(est.sigma2_hat, 0.0);
        let ci = ci95(&est);
        assert_eq!((ci.center, ci.half_width), (2.5, 0.0));
    }

    #[test]
    fn interval_scaling() {
        let est = BatchMeansEstimate {
            mean: 0.0067,
            sigma2_hat: 1.0,
            batch_size: 1,
            batch_count: 1,
            n_star: 100,
        };
        let wide = ci95(&est);
        let narrow = ci95(&BatchMeansEstimate { n_star: 400, ..est });
        assert!((wide.half_width - 2.0 * narrow.half_width).abs() < 1e-15);
        assert!(wide.contains(0.0067) && !wide.contains(1.0));
    }

    #[test]
    fn act_rejects_bad_variance() {
        let est = batch_means(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(act_hat(&est, 0.0).is_err());
        assert!(act_hat(&est, f64::NAN).is_err());
    }

    #[test]
    fn iid_normals() {
        let mut rng = RngStream::new(3, 0).open();
        let v: Vec<f64> = (0..1_000_000).map(|_| rng.standard_normal()).collect();
        let est = batch_means(&v).unwrap();
        assert!((0.9..1.1).contains(&est.sigma2_hat), "{}", est.sigma2_hat);
        assert!(lag1_autocorrelation(&v).unwrap().abs() < 0.01);
    }

    #[test]
    fn ar1_asymptotic_variance() {
        let rho: f64 = 0.5;
        let innov = (1.0 - rho * rho).sqrt();
        let mut rng = RngStream::new(4, 0).open();
        let mut x = 0.0;
        let v: Vec<f64> = (0..1_000_000)
            .map(|_| {
                x = rho * x + innov * rng.standard_normal();
                x
            })
            .collect();
        let est = batch_means(&v).unwrap();
        assert!((est.sigma2_hat - 3.0).abs() < 0.3, "{}", est.sigma2_hat);
        assert!((lag1_autocorrelation(&v).unwrap() - 0.5).abs() < 0.01);
    }

    #[test]
    fn ratio_basics() {
        let a = [1.0, -2.0, 3.0];
        let s = mse_ratio(&a, &a, RatioError::Delta).unwrap();
        assert_eq!(s.ratio_vs_baseline, 1.0);
        assert!((s.mse_hat - 14.0 / 3.0).abs() < 1e-15);

        let scaled: Vec<f64> = a.iter().map(|v| 5.0 * v).collect();
        let b = [0.5, 0.25, -1.0];
        let r1 = mse_ratio(&a, &b, RatioError::Delta)
            .unwrap()
            .ratio_vs_baseline;
        let r2 = mse_ratio(&scaled, &b.map(|v| 5.0 * v), RatioError::Delta)
            .unwrap()
            .ratio_vs_baseline;
        assert!((r1 - r2).abs() < 1e-12 * r1);
    }

    #[test]
    fn ratio_errors() {
        assert!(matches!(
            mse_ratio(&[1.0, 2.0], &[0.0, 0.0], RatioError::Delta),
            Err(Error::DivisionByZero(_))
        ));
        assert!(mse_ratio(&[1.0], &[1.0, 2.0], RatioError::Delta).is_err());
    }

    #[test]
    fn jackknife_close_to_delta() {
        let mut rng = RngStream::new(8, 0).open();
        let a: Vec<f64> = (0..2000).map(|_| rng.standard_normal()).collect();
        let b: Vec<f64> = (0..2000).map(|_| 2.0 * rng.standard_normal()).collect();
        let d = mse_ratio(&a, &b, RatioError::Delta).unwrap();
        let j = mse_ratio(&a, &b, RatioError::Jackknife).unwrap();
        assert!(
            (d.ratio_se / j.ratio_se - 1.0).abs() < 0.1,
            "{} {}",
            d.ratio_se,
            j.ratio_se
        );
        assert!((d.ratio_vs_baseline - 0.25).abs() < 0.05);
    }
}
