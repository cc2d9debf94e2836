//! Scan strategies and the single Gibbs transition.

use std::fmt;
use std::str::FromStr;

use crate::conditional::ConditionalPair;
use crate::error::{Component, Error, Result};
use crate::rng::Variates;
use crate::state::JointState;

/// Rule deciding which components are refreshed in one iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScanStrategy {
    /// Both components in a fixed order.
    Composition { x_first: bool },
    /// Both components; x first with probability `q`, otherwise y first.
    RandomSequence { q: f64 },
    /// One component; x with probability `p`, otherwise y.
    RandomScan { p: f64 },
}

/// Strategy family without its selection probability.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    Composition,
    RandomSequence,
    RandomScan,
}

impl StrategyKind {
    pub fn abbreviation(self) -> &'static str {
        match self {
            StrategyKind::Composition => "CGS",
            StrategyKind::RandomSequence => "RQGS",
            StrategyKind::RandomScan => "RSGS",
        }
    }
}

fn check_open_unit(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must lie strictly inside (0, 1), got {value}"
        )))
    }
}

impl ScanStrategy {
    /// Composition scan updating x first.
    pub fn composition() -> Self {
        ScanStrategy::Composition { x_first: true }
    }

    pub fn random_sequence(q: f64) -> Result<Self> {
        check_open_unit("q", q)?;
        Ok(ScanStrategy::RandomSequence { q })
    }

    pub fn random_scan(p: f64) -> Result<Self> {
        check_open_unit("p", p)?;
        Ok(ScanStrategy::RandomScan { p })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ScanStrategy::Composition { .. } => Ok(()),
            ScanStrategy::RandomSequence { q } => check_open_unit("q", q),
            ScanStrategy::RandomScan { p } => check_open_unit("p", p),
        }
    }

    pub fn kind(&self) -> StrategyKind {
        match self {
            ScanStrategy::Composition { .. } => StrategyKind::Composition,
            ScanStrategy::RandomSequence { .. } => StrategyKind::RandomSequence,
            ScanStrategy::RandomScan { .. } => StrategyKind::RandomScan,
        }
    }

    /// The selection probability `q` or `p`, if the strategy has one.
    pub fn probability(&self) -> Option<f64> {
        match *self {
            ScanStrategy::Composition { .. } => None,
            ScanStrategy::RandomSequence { q } => Some(q),
            ScanStrategy::RandomScan { p } => Some(p),
        }
    }
}

impl fmt::Display for ScanStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ScanStrategy::Composition { x_first: true } => f.write_str("CGS"),
            ScanStrategy::Composition { x_first: false } => f.write_str("CGS(y-first)"),
            ScanStrategy::RandomSequence { q } => write!(f, "RQGS q={q:.2}"),
            ScanStrategy::RandomScan { p } => write!(f, "RSGS p={p:.2}"),
        }
    }
}

/// Parses `cgs`, `cgs-y`, `rqgs:<q>` and `rsgs:<p>` (case-insensitive).
impl FromStr for ScanStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.as_str(), None),
        };
        let prob = |arg: Option<&str>| -> Result<f64> {
            let a = arg.ok_or_else(|| {
                Error::InvalidArgument(format!("strategy '{name}' needs a probability"))
            })?;
            a.parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad probability '{a}'")))
        };
        match name {
            "cgs" if arg.is_none() => Ok(ScanStrategy::composition()),
            "cgs-y" if arg.is_none() => Ok(ScanStrategy::Composition { x_first: false }),
            "rqgs" => ScanStrategy::random_sequence(prob(arg)?),
            "rsgs" => ScanStrategy::random_scan(prob(arg)?),
            _ => Err(Error::InvalidArgument(format!("unknown strategy '{s}'"))),
        }
    }
}

fn checked(component: Component, draw: Vec<f64>, expected: usize) -> Result<Vec<f64>> {
    if draw.len() != expected {
        return Err(Error::DimensionMismatch {
            component,
            expected,
            found: draw.len(),
        });
    }
    if draw.iter().all(|v| v.is_finite()) {
        Ok(draw)
    } else {
        Err(Error::NonFinite { component })
    }
}

pub(crate) fn update_x<C: ConditionalPair + ?Sized>(
    cond: &C,
    y: &[f64],
    rng: &mut dyn Variates,
) -> Result<Vec<f64>> {
    checked(Component::X, cond.draw_x_given_y(y, rng), cond.dim_x())
}

pub(crate) fn update_y<C: ConditionalPair + ?Sized>(
    cond: &C,
    x: &[f64],
    rng: &mut dyn Variates,
) -> Result<Vec<f64>> {
    checked(Component::Y, cond.draw_y_given_x(x, rng), cond.dim_y())
}

fn sweep<C: ConditionalPair + ?Sized>(
    state: &JointState,
    x_first: bool,
    cond: &C,
    rng: &mut dyn Variates,
) -> Result<JointState> {
    if x_first {
        let x = update_x(cond, &state.y, rng)?;
        let y = update_y(cond, &x, rng)?;
        Ok(JointState { x, y })
    } else {
        let y = update_y(cond, &state.x, rng)?;
        let x = update_x(cond, &y, rng)?;
        Ok(JointState { x, y })
    }
}

/// One transition of the chain.
///
/// For the random strategies the selection coin is always the first
/// uniform consumed, followed by the component draws in update order.
pub fn step<C: ConditionalPair + ?Sized>(
    state: &JointState,
    strategy: &ScanStrategy,
    cond: &C,
    rng: &mut dyn Variates,
) -> Result<JointState> {
    state.check_dims(cond.dim_x(), cond.dim_y())?;
    match *strategy {
        ScanStrategy::Composition { x_first } => sweep(state, x_first, cond, rng),
        ScanStrategy::RandomSequence { q } => {
            let x_first = rng.uniform() < q;
            sweep(state, x_first, cond, rng)
        }
        ScanStrategy::RandomScan { p } => {
            if rng.uniform() < p {
                Ok(JointState {
                    x: update_x(cond, &state.y, rng)?,
                    y: state.y.clone(),
                })
            } else {
                Ok(JointState {
                    x: state.x.clone(),
                    y: update_y(cond, &state.x, rng)?,
                })
            }
        }
    }
}
