//! Concrete targets with closed-form conditionals.

pub mod normal_normal;
pub mod random_intercept;

pub use normal_normal::{
    nn_act_oracle, nn_bounds, nn_conditionals, nn_contract, nn_f, nn_g, nn_lag1_correlation,
    nn_marginals, NnMarginals, NormalNormal, NormalNormalParams,
};
pub use random_intercept::{
    ri_bounds, ri_contract, ri_contract_k, ri_draw_lambda_given_xi, ri_draw_xi_given_lambda, ri_f,
    LambdaConditional, RandomIntercept, RandomInterceptParams,
};
