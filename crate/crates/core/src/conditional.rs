use crate::rng::Variates;

/// The two full conditionals of a target, `pi(x | y)` and `pi(y | x)`.
///
/// Each sampler receives the whole opposite component and must be a pure
/// function of its input and the variates it consumes.
pub trait ConditionalPair: Send + Sync {
    fn dim_x(&self) -> usize;
    fn dim_y(&self) -> usize;

    fn draw_x_given_y(&self, y: &[f64], rng: &mut dyn Variates) -> Vec<f64>;
    fn draw_y_given_x(&self, x: &[f64], rng: &mut dyn Variates) -> Vec<f64>;

    /// Closed form of `E[f(x') | y]` for the model's moment-contract `f`,
    /// when one is known.
    fn cond_expect_f_given_y(&self, _y: &[f64]) -> Option<f64> {
        None
    }

    /// Closed form of `E[g(y') | x]` for the model's moment-contract `g`.
    fn cond_expect_g_given_x(&self, _x: &[f64]) -> Option<f64> {
        None
    }
}
