//! `X_i | Y ~ N(Y, theta^2)` iid for `i = 1..N`, `Y ~ N(0, tau^2)`.
//!
//! The x component is the N-vector of observations and the y component is
//! the scalar `Y`, so a chain state is `(x in R^N, y in R^1)`.

use std::sync::Arc;

use crate::conditional::ConditionalPair;
use crate::drift::{MomentBounds, MomentContract};
use crate::error::{Error, Result};
use crate::rng::Variates;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalNormalParams {
    /// Sample size N.
    pub n: usize,
    pub theta2: f64,
    pub tau2: f64,
}

impl NormalNormalParams {
    pub fn new(n: usize, theta2: f64, tau2: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidArgument("N must be at least 1".into()));
        }
        if !(theta2.is_finite() && theta2 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "theta2 must be positive, got {theta2}"
            )));
        }
        if !(tau2.is_finite() && tau2 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tau2 must be positive, got {tau2}"
            )));
        }
        Ok(Self { n, theta2, tau2 })
    }

    /// Preset 1: `N = 10, theta^2 = 1, tau^2 = 1`.
    /// Preset 2: `N = 10, theta^2 = 1, tau^2 = 0.1`.
    pub fn setting(id: u8) -> Result<Self> {
        match id {
            1 => Self::new(10, 1.0, 1.0),
            2 => Self::new(10, 1.0, 0.1),
            _ => Err(Error::InvalidArgument(format!(
                "unknown setting {id}; expected 1 or 2"
            ))),
        }
    }

    fn precision_sum(&self) -> f64 {
        self.n as f64 * self.tau2 + self.theta2
    }

    /// `tau^2 / (N tau^2 + theta^2)`, the weight on `sum(x)` in `E[Y | x]`.
    pub fn shrinkage(&self) -> f64 {
        self.tau2 / self.precision_sum()
    }

    /// `Var(Y | x) = theta^2 tau^2 / (N tau^2 + theta^2)`.
    pub fn y_conditional_variance(&self) -> f64 {
        self.theta2 * self.tau2 / self.precision_sum()
    }
}

/// Conditional samplers for the Normal-Normal model.
#[derive(Clone, Debug)]
pub struct NormalNormal {
    params: NormalNormalParams,
    theta: f64,
    shrinkage: f64,
    y_sd: f64,
}

impl NormalNormal {
    pub fn new(params: NormalNormalParams) -> Self {
        Self {
            params,
            theta: params.theta2.sqrt(),
            shrinkage: params.shrinkage(),
            y_sd: params.y_conditional_variance().sqrt(),
        }
    }

    pub fn params(&self) -> &NormalNormalParams {
        &self.params
    }

    /// `E[Y | x]`.
    pub fn y_conditional_mean(&self, x: &[f64]) -> f64 {
        self.shrinkage * x.iter().sum::<f64>()
    }
}

pub fn nn_conditionals(params: NormalNormalParams) -> NormalNormal {
    NormalNormal::new(params)
}

impl ConditionalPair for NormalNormal {
    fn dim_x(&self) -> usize {
        self.params.n
    }

    fn dim_y(&self) -> usize {
        1
    }

    fn draw_x_given_y(&self, y: &[f64], rng: &mut dyn Variates) -> Vec<f64> {
        let mean = y[0];
        (0..self.params.n)
            .map(|_| mean + self.theta * rng.standard_normal())
            .collect()
    }

    fn draw_y_given_x(&self, x: &[f64], rng: &mut dyn Variates) -> Vec<f64> {
        vec![self.y_conditional_mean(x) + self.y_sd * rng.standard_normal()]
    }

    /// `E[(sum x')^2 + 1 | y] = N theta^2 + N^2 y^2 + 1`.
    fn cond_expect_f_given_y(&self, y: &[f64]) -> Option<f64> {
        let n = self.params.n as f64;
        Some(n * self.params.theta2 + n * n * y[0] * y[0] + 1.0)
    }

    /// `E[y'^2 + 1 | x] = Var(Y | x) + E[Y | x]^2 + 1`.
    fn cond_expect_g_given_x(&self, x: &[f64]) -> Option<f64> {
        let mean = self.y_conditional_mean(x);
        Some(self.params.y_conditional_variance() + mean * mean + 1.0)
    }
}

/// `f(x) = (sum x_i)^2 + 1`.
pub fn nn_f(x: &[f64]) -> f64 {
    let s: f64 = x.iter().sum();
    s * s + 1.0
}

/// `g(y) = y^2 + 1`.
pub fn nn_g(y: &[f64]) -> f64 {
    y[0] * y[0] + 1.0
}

/// `j = N^2`, `k = N theta^2 + 1`, `m = (tau^2/(N tau^2 + theta^2))^2`,
/// `n = theta^2 tau^2/(N tau^2 + theta^2) + 1`.
pub fn nn_bounds(params: &NormalNormalParams) -> MomentBounds {
    let n = params.n as f64;
    let c = params.shrinkage();
    MomentBounds {
        j: n * n,
        k: n * params.theta2 + 1.0,
        m: c * c,
        n: params.y_conditional_variance() + 1.0,
    }
}

pub fn nn_contract(params: &NormalNormalParams) -> MomentContract {
    let bounds = nn_bounds(params);
    debug_assert!(bounds.jm() < 1.0);
    MomentContract::new(bounds, Arc::new(nn_f), Arc::new(nn_g))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NnMarginals {
    pub var_x: f64,
    pub var_y: f64,
    pub cor_xx: f64,
    pub cor_xy: f64,
}

pub fn nn_marginals(params: &NormalNormalParams) -> NnMarginals {
    let total = params.theta2 + params.tau2;
    NnMarginals {
        var_x: total,
        var_y: params.tau2,
        cor_xx: params.tau2 / total,
        cor_xy: (params.tau2 / total).sqrt(),
    }
}

/// Lag-one autocorrelation of the composition-scan y sub-chain,
/// `rho = N tau^2 / (N tau^2 + theta^2)`; the sub-chain is AR(1).
pub fn nn_lag1_correlation(params: &NormalNormalParams) -> f64 {
    params.n as f64 * params.shrinkage()
}

/// `(1 + rho) / (1 - rho)`, the integrated autocorrelation time of the
/// composition-scan y sub-chain.
pub fn nn_act_oracle(params: &NormalNormalParams) -> f64 {
    let rho = nn_lag1_correlation(params);
    (1.0 + rho) / (1.0 - rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{FixedVariates, RngStream};
    use crate::scan::{step, ScanStrategy};
    use crate::state::JointState;

    fn s1() -> NormalNormalParams {
        NormalNormalParams::setting(1).unwrap()
    }

    fn s2() -> NormalNormalParams {
        NormalNormalParams::setting(2).unwrap()
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(NormalNormalParams::new(0, 1.0, 1.0).is_err());
        assert!(NormalNormalParams::new(3, 0.0, 1.0).is_err());
        assert!(NormalNormalParams::new(3, 1.0, -1.0).is_err());
        assert!(NormalNormalParams::setting(3).is_err());
    }

    #[test]
    fn conditional_moments() {
        let model = nn_conditionals(s1());
        let mut x = vec![1.0; 10];
        x[0] = 2.0;
        assert!((model.y_conditional_mean(&x) - 1.0).abs() < 1e-15);
        assert!((s2().y_conditional_variance() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn zero_noise_draws_hit_conditional_means() {
        let model = nn_conditionals(s1());
        let mut zero = FixedVariates::zero();
        assert_eq!(model.draw_x_given_y(&[0.0], &mut zero), vec![0.0; 10]);

        let start = JointState::new(vec![0.0; 10], vec![3.0]).unwrap();
        let x_first = step(&start, &ScanStrategy::composition(), &model, &mut zero).unwrap();
        // x' = 3 1_N and y' = (1/11) * 30
        assert_eq!(x_first.x, vec![3.0; 10]);
        assert!((x_first.y[0] - 30.0 / 11.0).abs() < 1e-14);

        let origin = JointState::zeros(10, 1);
        let next = step(&origin, &ScanStrategy::composition(), &model, &mut zero).unwrap();
        assert_eq!(next.y, vec![0.0]);
    }

    #[test]
    fn contract_constants() {
        let b = nn_bounds(&s1());
        assert_eq!((b.j, b.k), (100.0, 11.0));
        assert!((b.m - 1.0 / 121.0).abs() < 1e-16);
        assert!((b.n - 12.0 / 11.0).abs() < 1e-15);
        assert!((b.jm() - 100.0 / 121.0).abs() < 1e-14);

        let b = nn_bounds(&s2());
        assert_eq!((b.j, b.k), (100.0, 11.0));
        assert!((b.m - 0.0025).abs() < 1e-16);
        assert!((b.n - 1.05).abs() < 1e-15);
        assert!((b.jm() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn marginals_match_settings_table() {
        let m = nn_marginals(&s1());
        assert_eq!((m.var_x, m.var_y, m.cor_xx), (2.0, 1.0, 0.5));
        assert!((m.cor_xy - 0.707).abs() < 5e-4);
        let m = nn_marginals(&s2());
        assert!((m.var_x - 1.1).abs() < 1e-12);
        assert_eq!(m.var_y, 0.1);
        assert!((m.cor_xx - 0.091).abs() < 5e-4);
        assert!((m.cor_xy - 0.302).abs() < 5e-4);

        let tiny = nn_marginals(&NormalNormalParams::new(10, 1.0, 1e-12).unwrap());
        assert!(tiny.cor_xx < 1e-11 && tiny.cor_xy < 1e-5);
    }

    #[test]
    fn act_oracle() {
        assert!((nn_lag1_correlation(&s2()) - 0.5).abs() < 1e-15);
        assert!((nn_act_oracle(&s2()) - 3.0).abs() < 1e-12);
        assert!((nn_act_oracle(&s1()) - 21.0).abs() < 1e-10);
        let flat = NormalNormalParams::new(10, 1.0, 1e-12).unwrap();
        assert!((nn_act_oracle(&flat) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empirical_conditional_moment_of_f() {
        let model = nn_conditionals(s1());
        let bounds = nn_bounds(&s1());
        let mut rng = RngStream::new(2024, 0).open();
        let draws = 100_000;
        for i in 0..20 {
            let y = -3.0 + 6.0 * i as f64 / 19.0;
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..draws {
                let f = nn_f(&model.draw_x_given_y(&[y], &mut rng));
                sum += f;
                sum_sq += f * f;
            }
            let mean = sum / draws as f64;
            let se = ((sum_sq / draws as f64 - mean * mean) / draws as f64).sqrt();
            let exact = model.cond_expect_f_given_y(&[y]).unwrap();
            assert!((mean - exact).abs() < 4.0 * se, "y={y}: {mean} vs {exact}");
            assert!(mean <= bounds.j * nn_g(&[y]) + bounds.k);
        }
    }
}
