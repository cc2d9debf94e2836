use crate::error::{Component, Error, Result};

/// Current position `(x, y)` of a two-component chain.
#[derive(Clone, Debug, PartialEq)]
pub struct JointState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl JointState {
    /// Checked constructor: both parts non-empty and finite.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let state = Self { x, y };
        state.validate()?;
        Ok(state)
    }

    pub fn zeros(dim_x: usize, dim_y: usize) -> Self {
        Self {
            x: vec![0.0; dim_x],
            y: vec![0.0; dim_y],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.is_empty() || self.y.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "state components must be non-empty (d_x={}, d_y={})",
                self.x.len(),
                self.y.len()
            )));
        }
        if !self.x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                component: Component::X,
            });
        }
        if !self.y.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                component: Component::Y,
            });
        }
        Ok(())
    }

    pub(crate) fn check_dims(&self, dim_x: usize, dim_y: usize) -> Result<()> {
        if self.x.len() != dim_x {
            return Err(Error::DimensionMismatch {
                component: Component::X,
                expected: dim_x,
                found: self.x.len(),
            });
        }
        if self.y.len() != dim_y {
            return Err(Error::DimensionMismatch {
                component: Component::Y,
                expected: dim_y,
                found: self.y.len(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(JointState::new(vec![], vec![1.0]).is_err());
        assert!(matches!(
            JointState::new(vec![f64::NAN], vec![1.0]),
            Err(Error::NonFinite {
                component: Component::X
            })
        ));
        assert!(JointState::new(vec![0.0], vec![2.0]).is_ok());
    }
}
