//! Balanced Bayesian random-intercept model
//!
//! ```text
//! Y | beta, u, lR, lD ~ N_N(X beta + Z u, lR^-1 I_N)
//! beta ~ N_p(0, I_p),  u | lD ~ N_K(0, lD^-1 I_K)
//! lR, lD ~ Gamma(2, 1)   (shape-rate)
//! ```
//!
//! with `Z = I_K (x) 1_M` and `X^T Z = 0`. As a two-component chain the x
//! component is `lambda = (lR, lD)` and the y component is
//! `xi = (u, beta)` of length `K + p`.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::conditional::ConditionalPair;
use crate::drift::{MomentBounds, MomentContract};
use crate::error::{Error, Result};
use crate::rng::{RngStream, Variates};

const ORTHOGONALITY_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct RandomInterceptParams {
    /// Subjects K.
    pub subjects: usize,
    /// Observations per subject M.
    pub per_subject: usize,
    /// N x p design, rows grouped by subject.
    pub design: DMatrix<f64>,
    /// Responses, length N.
    pub response: DVector<f64>,
}

impl RandomInterceptParams {
    /// Validates `N = K M`, full column rank of `X`, and `X^T Z = 0`.
    pub fn new(
        subjects: usize,
        per_subject: usize,
        design: DMatrix<f64>,
        response: DVector<f64>,
    ) -> Result<Self> {
        if subjects < 1 || per_subject < 1 {
            return Err(Error::InvalidArgument("K and M must be at least 1".into()));
        }
        let n = subjects * per_subject;
        if design.nrows() != n || response.len() != n {
            return Err(Error::Data(format!(
                "expected N = K*M = {n} rows, design has {} and response has {}",
                design.nrows(),
                response.len()
            )));
        }
        if design.ncols() < 1 {
            return Err(Error::Data(
                "design must have at least one covariate".into(),
            ));
        }
        if !design.iter().chain(response.iter()).all(|v| v.is_finite()) {
            return Err(Error::Data("design and response must be finite".into()));
        }
        let params = Self {
            subjects,
            per_subject,
            design,
            response,
        };
        params.check_orthogonality()?;
        params.check_rank()?;
        Ok(params)
    }

    pub fn observations(&self) -> usize {
        self.subjects * self.per_subject
    }

    pub fn regressors(&self) -> usize {
        self.design.ncols()
    }

    fn check_orthogonality(&self) -> Result<()> {
        let scale = self.design.amax().max(1.0) * self.per_subject as f64;
        for (col_idx, col) in self.design.column_iter().enumerate() {
            for k in 0..self.subjects {
                let start = k * self.per_subject;
                let s: f64 = col.rows(start, self.per_subject).sum();
                if s.abs() > ORTHOGONALITY_TOL * scale {
                    return Err(Error::Data(format!(
                        "X^T Z != 0: covariate {col_idx} sums to {s} within subject {k}; \
                         center covariates within each subject"
                    )));
                }
            }
        }
        Ok(())
    }

    fn check_rank(&self) -> Result<()> {
        let xtx = self.design.transpose() * &self.design;
        let eig = SymmetricEigen::new(xtx).eigenvalues;
        let max = eig.amax();
        let min = eig.min();
        if !(max > 0.0 && min > 1e-10 * max) {
            return Err(Error::Data(format!(
                "design is not of full column rank (eigenvalues of X^T X in [{min}, {max}])"
            )));
        }
        Ok(())
    }

    /// Balanced synthetic data set: covariates iid normal, centered within
    /// subject; `beta` alternates `+1, -1`; `u ~ N(0, 1)`; unit noise.
    /// Needs `M >= 2` and `p <= K (M - 1)`.
    pub fn synthetic(
        subjects: usize,
        per_subject: usize,
        regressors: usize,
        seed: u64,
    ) -> Result<Self> {
        if per_subject < 2 {
            return Err(Error::InvalidArgument(
                "synthetic data needs M >= 2 (with M = 1, X^T Z = 0 forces X = 0)".into(),
            ));
        }
        if regressors < 1 || regressors > subjects * (per_subject - 1) {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= p <= K(M-1) = {}, got p = {regressors}",
                subjects * (per_subject - 1)
            )));
        }
        let n = subjects * per_subject;
        let mut rng = RngStream::new(seed, 0).open();
        let mut design = DMatrix::from_fn(n, regressors, |_, _| rng.standard_normal());
        for mut col in design.column_iter_mut() {
            for k in 0..subjects {
                let mut block = col.rows_mut(k * per_subject, per_subject);
                let mean = block.mean();
                block.add_scalar_mut(-mean);
            }
        }
        let beta = DVector::from_fn(regressors, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 });
        let u: Vec<f64> = (0..subjects).map(|_| rng.standard_normal()).collect();
        let fitted = &design * beta;
        let response = DVector::from_fn(n, |i, _| {
            fitted[i] + u[i / per_subject] + rng.standard_normal()
        });
        Self::new(subjects, per_subject, design, response)
    }

    /// Reads `subject_id,response,x1,...,xp` with a header row. Rows are
    /// grouped by subject in order of first appearance.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let width = rdr.headers()?.len();
        if width < 3 {
            return Err(Error::Data(
                "expected columns subject_id, response, and at least one covariate".into(),
            ));
        }
        let mut order: Vec<String> = Vec::new();
        let mut groups: std::collections::HashMap<String, Vec<Vec<f64>>> = Default::default();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != width {
                return Err(Error::Data(format!(
                    "row {} has {} fields, expected {width}",
                    line + 1,
                    record.len()
                )));
            }
            let id = record[0].to_string();
            let values = record
                .iter()
                .skip(1)
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| Error::Data(format!("row {}: bad number '{f}'", line + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            if !groups.contains_key(&id) {
                order.push(id.clone());
            }
            groups.entry(id).or_default().push(values);
        }
        if order.is_empty() {
            return Err(Error::Data("no data rows".into()));
        }
        let per_subject = groups[&order[0]].len();
        if let Some(bad) = order.iter().find(|id| groups[*id].len() != per_subject) {
            return Err(Error::Data(format!(
                "unbalanced design: subject '{bad}' has {} rows, expected {per_subject}",
                groups[bad].len()
            )));
        }
        let subjects = order.len();
        let p = width - 2;
        let rows: Vec<&Vec<f64>> = order.iter().flat_map(|id| groups[id].iter()).collect();
        let response = DVector::from_iterator(rows.len(), rows.iter().map(|r| r[0]));
        let design = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j + 1]);
        Self::new(subjects, per_subject, design, response)
    }
}

/// Shape and rate of the two independent Gamma full conditionals of
/// `(lR, lD)` given `xi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaConditional {
    pub shape_r: f64,
    pub rate_r: f64,
    pub shape_d: f64,
    pub rate_d: f64,
}

impl LambdaConditional {
    /// From the residual sum of squares `v1` and `v2 = u^T u`.
    pub fn from_sums(observations: usize, subjects: usize, v1: f64, v2: f64) -> Self {
        Self {
            shape_r: 2.0 + observations as f64 / 2.0,
            rate_r: 1.0 + v1 / 2.0,
            shape_d: 2.0 + subjects as f64 / 2.0,
            rate_d: 1.0 + v2 / 2.0,
        }
    }

    pub fn means(&self) -> (f64, f64) {
        (self.shape_r / self.rate_r, self.shape_d / self.rate_d)
    }
}

/// Conditional samplers with the data-dependent pieces precomputed.
#[derive(Clone, Debug)]
pub struct RandomIntercept {
    params: Arc<RandomInterceptParams>,
    xtx: DMatrix<f64>,
    xty: DVector<f64>,
    zty: DVector<f64>,
}

impl RandomIntercept {
    pub fn new(params: RandomInterceptParams) -> Self {
        let xtx = params.design.transpose() * &params.design;
        let xty = params.design.transpose() * &params.response;
        let m = params.per_subject;
        let zty = DVector::from_fn(params.subjects, |k, _| params.response.rows(k * m, m).sum());
        Self {
            params: Arc::new(params),
            xtx,
            xty,
            zty,
        }
    }

    pub fn params(&self) -> &RandomInterceptParams {
        &self.params
    }

    /// `Z^T y`, the per-subject response totals.
    pub fn subject_totals(&self) -> &DVector<f64> {
        &self.zty
    }

    /// `(v1, v2)`: residual sum of squares `|y - X beta - Z u|^2` and `u^T u`.
    pub fn sums_of_squares(&self, xi: &[f64]) -> (f64, f64) {
        residual_sums(&self.params, xi)
    }

    pub fn lambda_conditional(&self, xi: &[f64]) -> LambdaConditional {
        let (v1, v2) = self.sums_of_squares(xi);
        LambdaConditional::from_sums(self.params.observations(), self.params.subjects, v1, v2)
    }

    /// Mean vector of `xi | lambda`.
    pub fn xi_conditional_mean(&self, lambda_r: f64, lambda_d: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.params.subjects + self.params.regressors()];
        self.fill_xi(lambda_r, lambda_d, None, &mut out)?;
        Ok(out)
    }

    /// Draws `xi | lambda`: the u block coordinate-wise with variance
    /// `(lR M + lD)^-1`, then the beta block through a Cholesky factor of
    /// the precision `lR X^T X + I`. Consumes `K + p` normals in that order.
    fn fill_xi(
        &self,
        lambda_r: f64,
        lambda_d: f64,
        rng: Option<&mut dyn Variates>,
        out: &mut [f64],
    ) -> Result<()> {
        if !(lambda_r > 0.0 && lambda_d > 0.0 && lambda_r.is_finite() && lambda_d.is_finite()) {
            return Err(Error::Numeric(format!(
                "precisions must be positive and finite, got ({lambda_r}, {lambda_d})"
            )));
        }
        let k = self.params.subjects;
        let p = self.params.regressors();
        let u_precision = lambda_r * self.params.per_subject as f64 + lambda_d;
        let u_sd = u_precision.sqrt().recip();

        let precision = &self.xtx * lambda_r + DMatrix::identity(p, p);
        let chol = precision.cholesky().ok_or_else(|| {
            Error::Numeric("beta-block precision is not positive definite".into())
        })?;
        let beta_mean = chol.solve(&(&self.xty * lambda_r));

        let (u_out, beta_out) = out.split_at_mut(k);
        let u_means = self.zty.iter().map(|t| lambda_r * t / u_precision);
        match rng {
            Some(rng) => {
                for (o, mean) in u_out.iter_mut().zip(u_means) {
                    *o = mean + u_sd * rng.standard_normal();
                }
                let z = DVector::from_fn(p, |_, _| rng.standard_normal());
                let noise = chol
                    .l()
                    .tr_solve_lower_triangular(&z)
                    .ok_or_else(|| Error::Numeric("singular Cholesky factor".into()))?;
                for ((o, mean), e) in beta_out.iter_mut().zip(beta_mean.iter()).zip(noise.iter()) {
                    *o = mean + e;
                }
            }
            None => {
                for (o, mean) in u_out.iter_mut().zip(u_means) {
                    *o = mean;
                }
                beta_out.copy_from_slice(beta_mean.as_slice());
            }
        }
        Ok(())
    }
}

fn residual_sums(params: &RandomInterceptParams, xi: &[f64]) -> (f64, f64) {
    let k = params.subjects;
    let m = params.per_subject;
    let (u, beta) = xi.split_at(k);
    let mut v1 = 0.0;
    for i in 0..params.observations() {
        let fitted: f64 = params
            .design
            .row(i)
            .iter()
            .zip(beta)
            .map(|(a, b)| a * b)
            .sum();
        let r = params.response[i] - fitted - u[i / m];
        v1 += r * r;
    }
    let v2 = u.iter().map(|v| v * v).sum();
    (v1, v2)
}

impl ConditionalPair for RandomIntercept {
    fn dim_x(&self) -> usize {
        2
    }

    fn dim_y(&self) -> usize {
        self.params.subjects + self.params.regressors()
    }

    fn draw_x_given_y(&self, xi: &[f64], rng: &mut dyn Variates) -> Vec<f64> {
        let c = self.lambda_conditional(xi);
        vec![
            rng.gamma(c.shape_r, c.rate_r),
            rng.gamma(c.shape_d, c.rate_d),
        ]
    }

    fn draw_y_given_x(&self, lambda: &[f64], rng: &mut dyn Variates) -> Vec<f64> {
        let mut out = vec![0.0; self.dim_y()];
        match self.fill_xi(lambda[0], lambda[1], Some(rng), &mut out) {
            Ok(()) => out,
            Err(_) => vec![f64::NAN; self.dim_y()],
        }
    }
}

/// Draws `(lR, lD) | xi`.
pub fn ri_draw_lambda_given_xi(
    model: &RandomIntercept,
    xi: &[f64],
    rng: &mut dyn Variates,
) -> Result<(f64, f64)> {
    check_xi_len(model, xi)?;
    let (v1, v2) = model.sums_of_squares(xi);
    if !(v1.is_finite() && v2.is_finite()) {
        return Err(Error::Numeric(format!(
            "non-finite sums of squares ({v1}, {v2})"
        )));
    }
    let c =
        LambdaConditional::from_sums(model.params.observations(), model.params.subjects, v1, v2);
    Ok((
        rng.gamma(c.shape_r, c.rate_r),
        rng.gamma(c.shape_d, c.rate_d),
    ))
}

/// Draws `xi | lambda`.
pub fn ri_draw_xi_given_lambda(
    model: &RandomIntercept,
    lambda: (f64, f64),
    rng: &mut dyn Variates,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; model.dim_y()];
    model.fill_xi(lambda.0, lambda.1, Some(rng), &mut out)?;
    Ok(out)
}

fn check_xi_len(model: &RandomIntercept, xi: &[f64]) -> Result<()> {
    if xi.len() != model.dim_y() {
        return Err(Error::DimensionMismatch {
            component: crate::error::Component::Y,
            expected: model.dim_y(),
            found: xi.len(),
        });
    }
    Ok(())
}

/// `f(lambda) = K (1/lR + 1/lD) + exp((lR + lD)/2) + 1`.
pub fn ri_f(subjects: usize, lambda: &[f64]) -> f64 {
    let (r, d) = (lambda[0], lambda[1]);
    subjects as f64 * (r.recip() + d.recip()) + ((r + d) / 2.0).exp() + 1.0
}

/// `k = 2K/(N+2) + 2K/(K+2) + 2^(K/2+2) + 2^(N/2+2)`.
pub fn ri_contract_k(subjects: usize, observations: usize) -> f64 {
    let k = subjects as f64;
    let n = observations as f64;
    2.0 * k / (n + 2.0) + 2.0 * k / (k + 2.0) + 2f64.powf(k / 2.0 + 2.0) + 2f64.powf(n / 2.0 + 2.0)
}

/// `j = K/(K+2)`, `m = 1`, `k` as in [`ri_contract_k`], and
/// `n = sum_i x_i^T x_i + y^T (I + Z Z^T / M^2) y`.
pub fn ri_bounds(params: &RandomInterceptParams) -> MomentBounds {
    let subjects = params.subjects;
    let m = params.per_subject as f64;
    let trace_xtx: f64 = params.design.iter().map(|v| v * v).sum();
    let y_sq = params.response.norm_squared();
    let totals_sq: f64 = (0..subjects)
        .map(|k| {
            let t: f64 = params
                .response
                .rows(k * params.per_subject, params.per_subject)
                .sum();
            t * t
        })
        .sum();
    MomentBounds {
        j: subjects as f64 / (subjects as f64 + 2.0),
        k: ri_contract_k(subjects, params.observations()),
        m: 1.0,
        n: trace_xtx + y_sq + totals_sq / (m * m),
    }
}

pub fn ri_contract(params: &RandomInterceptParams) -> MomentContract {
    let bounds = ri_bounds(params);
    let subjects = params.subjects;
    let data = Arc::new(params.clone());
    MomentContract::new(
        bounds,
        Arc::new(move |lambda: &[f64]| ri_f(subjects, lambda)),
        Arc::new(move |xi: &[f64]| {
            let (v1, v2) = residual_sums(&data, xi);
            v1 + v2 + 1.0
        }),
    )
}
