//! Experiment configuration.
//!
//! The file is a flat list of `key = value` lines (a TOML subset); `#`
//! starts a comment. Recognised keys:
//!
//! ```text
//! model          = "normal_normal" | "random_intercept"
//! N, theta2, tau2                      # normal_normal
//! K, M, p_reg, data_path | synthetic_seed   # random_intercept
//! strategies     = ["cgs", "rqgs:0.1", "rsgs:0.5", ...]
//! n              = 100000              # iterations
//! R              = 1000                # replicates
//! seed           = 42
//! output_dir     = "out"
//! q_grid, p_grid = [0.1, 0.25, ...]    # certify
//! contract_j, contract_k, contract_m, contract_n   # explicit contract
//! probes, mc_samples, last_k, thin
//! rsgs_doubling  = true
//! replicate_n    = 10000               # per-replicate length, defaults to n
//! ratio_error    = "delta" | "jackknife"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use gibbs_scan::drift::{MomentBounds, MomentContract};
use gibbs_scan::models::{
    nn_conditionals, nn_contract, ri_contract, NormalNormalParams, RandomIntercept,
    RandomInterceptParams,
};
use gibbs_scan::{ConditionalPair, JointState, ScanStrategy};

use crate::CliError;

pub const DEFAULT_GRID: [f64; 5] = [0.10, 0.25, 0.50, 0.75, 0.90];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    NormalNormal,
    RandomIntercept,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioErrorKind {
    #[default]
    Delta,
    Jackknife,
}

/// Raw file contents; every key optional so flags and presets can fill in.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Option<ModelKind>,
    #[serde(rename = "N")]
    pub sample_size: Option<usize>,
    pub theta2: Option<f64>,
    pub tau2: Option<f64>,
    #[serde(rename = "K")]
    pub subjects: Option<usize>,
    #[serde(rename = "M")]
    pub per_subject: Option<usize>,
    pub p_reg: Option<usize>,
    pub data_path: Option<PathBuf>,
    pub synthetic_seed: Option<u64>,
    pub strategies: Option<Vec<String>>,
    pub n: Option<usize>,
    #[serde(rename = "R")]
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub q_grid: Option<Vec<f64>>,
    pub p_grid: Option<Vec<f64>>,
    pub contract_j: Option<f64>,
    pub contract_k: Option<f64>,
    pub contract_m: Option<f64>,
    pub contract_n: Option<f64>,
    pub probes: Option<usize>,
    pub mc_samples: Option<usize>,
    pub last_k: Option<usize>,
    pub thin: Option<usize>,
    pub rsgs_doubling: Option<bool>,
    pub replicate_n: Option<usize>,
    pub ratio_error: Option<RatioErrorKind>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Normal-Normal presets 1 and 2 with the full strategy grid.
    pub fn setting(id: u8) -> Result<Self, CliError> {
        let params = NormalNormalParams::setting(id)?;
        let mut strategies = vec!["cgs".to_string()];
        strategies.extend(DEFAULT_GRID.iter().map(|q| format!("rqgs:{q}")));
        strategies.extend(DEFAULT_GRID.iter().map(|p| format!("rsgs:{p}")));
        Ok(Self {
            model: Some(ModelKind::NormalNormal),
            sample_size: Some(params.n),
            theta2: Some(params.theta2),
            tau2: Some(params.tau2),
            strategies: Some(strategies),
            n: Some(100_000),
            replicates: Some(1000),
            replicate_n: Some(10_000),
            ..Self::default()
        })
    }

    /// Keys set in `other` replace those in `self`.
    pub fn overlay(self, other: Self) -> Self {
        macro_rules! pick {
            ($($f:ident),*) => { Self { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(
            model,
            sample_size,
            theta2,
            tau2,
            subjects,
            per_subject,
            p_reg,
            data_path,
            synthetic_seed,
            strategies,
            n,
            replicates,
            seed,
            output_dir,
            q_grid,
            p_grid,
            contract_j,
            contract_k,
            contract_m,
            contract_n,
            probes,
            mc_samples,
            last_k,
            thin,
            rsgs_doubling,
            replicate_n,
            ratio_error
        )
    }

    /// SHA-256 of the canonical serialisation with the output location
    /// removed, truncated to 16 hex digits.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.output_dir = None;
        let text = toml::to_string(&canon).unwrap_or_default();
        let digest = Sha256::digest(text.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn iterations(&self) -> Result<usize, CliError> {
        let n = self.n.unwrap_or(10_000);
        if n < 1 {
            return Err(CliError::Usage("n must be at least 1".into()));
        }
        Ok(n)
    }

    pub fn replicate_count(&self) -> Result<usize, CliError> {
        let r = self.replicates.unwrap_or(1000);
        if r < 1 {
            return Err(CliError::Usage("R must be at least 1".into()));
        }
        Ok(r)
    }

    pub fn strategy_list(&self) -> Result<Vec<ScanStrategy>, CliError> {
        let specs = self
            .strategies
            .clone()
            .unwrap_or_else(|| vec!["cgs".into()]);
        if specs.is_empty() {
            return Err(CliError::Usage("strategies must not be empty".into()));
        }
        specs
            .iter()
            .map(|s| s.parse::<ScanStrategy>().map_err(CliError::from))
            .collect()
    }

    pub fn grid(values: &Option<Vec<f64>>, name: &str) -> Result<Vec<f64>, CliError> {
        let grid = values.clone().unwrap_or_else(|| DEFAULT_GRID.to_vec());
        if let Some(bad) = grid.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(CliError::Usage(format!(
                "{name} values must lie in (0, 1), got {bad}"
            )));
        }
        Ok(grid)
    }

    pub fn explicit_bounds(&self) -> Result<Option<MomentBounds>, CliError> {
        match (
            self.contract_j,
            self.contract_k,
            self.contract_m,
            self.contract_n,
        ) {
            (None, None, None, None) => Ok(None),
            (Some(j), k, Some(m), n) => Ok(Some(MomentBounds::new(
                j,
                k.unwrap_or(1.0),
                m,
                n.unwrap_or(1.0),
            )?)),
            _ => Err(CliError::Usage(
                "explicit contract needs at least contract_j and contract_m".into(),
            )),
        }
    }

    pub fn build_model(&self) -> Result<Model, CliError> {
        match self.model.unwrap_or_default() {
            ModelKind::NormalNormal => {
                let params = NormalNormalParams::new(
                    self.sample_size.unwrap_or(10),
                    self.theta2.unwrap_or(1.0),
                    self.tau2.unwrap_or(1.0),
                )?;
                Ok(Model::NormalNormal(params))
            }
            ModelKind::RandomIntercept => {
                let params = match (&self.data_path, self.synthetic_seed) {
                    (Some(path), _) => RandomInterceptParams::from_csv_path(path)?,
                    (None, seed) => RandomInterceptParams::synthetic(
                        self.subjects.unwrap_or(4),
                        self.per_subject.unwrap_or(3),
                        self.p_reg.unwrap_or(2),
                        seed.unwrap_or(0),
                    )?,
                };
                Ok(Model::RandomIntercept(Box::new(params)))
            }
        }
    }
}

/// A configured target.
pub enum Model {
    NormalNormal(NormalNormalParams),
    RandomIntercept(Box<RandomInterceptParams>),
}

impl Model {
    pub fn conditionals(&self) -> Box<dyn ConditionalPair> {
        match self {
            Model::NormalNormal(p) => Box::new(nn_conditionals(*p)),
            Model::RandomIntercept(p) => Box::new(RandomIntercept::new((**p).clone())),
        }
    }

    pub fn contract(&self) -> MomentContract {
        match self {
            Model::NormalNormal(p) => nn_contract(p),
            Model::RandomIntercept(p) => ri_contract(p),
        }
    }

    /// All-zero for the Normal-Normal model; unit precisions and zero
    /// effects for the random-intercept model.
    pub fn initial_state(&self) -> JointState {
        match self {
            Model::NormalNormal(p) => JointState::zeros(p.n, 1),
            Model::RandomIntercept(p) => {
                JointState::new(vec![1.0, 1.0], vec![0.0; p.subjects + p.regressors()])
                    .expect("finite initial state")
            }
        }
    }

    pub fn y_names(&self) -> Vec<String> {
        match self {
            Model::NormalNormal(_) => vec!["y".into()],
            Model::RandomIntercept(p) => (1..=p.subjects)
                .map(|k| format!("u{k}"))
                .chain((1..=p.regressors()).map(|i| format!("beta{i}")))
                .collect(),
        }
    }

    pub fn x_names(&self) -> Vec<String> {
        match self {
            Model::NormalNormal(p) => (1..=p.n).map(|i| format!("x{i}")).collect(),
            Model::RandomIntercept(_) => vec!["lambda_r".into(), "lambda_d".into()],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_file() {
        let cfg = ExperimentConfig::parse(
            "# demo\nmodel = \"normal_normal\"\nN = 5\ntheta2 = 2.0\ntau2 = 0.5\n\
             strategies = [\"cgs\", \"rqgs:0.25\"]\nn = 100\nR = 3\nseed = 9\n",
        )
        .unwrap();
        assert_eq!(cfg.sample_size, Some(5));
        assert_eq!(cfg.strategy_list().unwrap().len(), 2);
        assert_eq!(cfg.seed(), 9);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(ExperimentConfig::parse("iterations = 5\n").is_err());
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = ExperimentConfig::setting(1).unwrap();
        let mut b = a.clone();
        b.output_dir = Some("elsewhere".into());
        assert_eq!(a.hash(), b.hash());
        b.seed = Some(1);
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn overlay_prefers_later_values() {
        let base = ExperimentConfig::setting(2).unwrap();
        let over = ExperimentConfig {
            n: Some(7),
            ..Default::default()
        };
        let merged = base.overlay(over);
        assert_eq!(merged.n, Some(7));
        assert_eq!(merged.tau2, Some(0.1));
    }
}
