//! Least squares, information criteria and residual diagnostics.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::distributions::{chi2_sf, f_sf};
use crate::error::{Error, Result};

/// Smallest/largest singular value ratio below which a design is rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Orthogonal (QR) factorization of a full-column-rank design, reusable across
/// several left-hand sides.
#[derive(Debug, Clone)]
pub struct Design {
    x: DMatrix<f64>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl Design {
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        let (n, k) = x.shape();
        if n <= k {
            return Err(Error::InsufficientData(format!(
                "{n} observations for {k} regressors"
            )));
        }
        if k > 0 {
            let dependent = dependent_columns(&x);
            if !dependent.is_empty() {
                return Err(Error::SingularDesign { columns: dependent });
            }
        }
        let qr = x.clone().qr();
        let (q, r) = qr.unpack();
        Ok(Self { x, q, r })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn n_obs(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.x.ncols()
    }

    /// Coefficients for every column of `y` (k × columns of y).
    pub fn solve(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let qty = self.q.transpose() * y;
        if self.n_params() == 0 {
            return DMatrix::zeros(0, y.ncols());
        }
        self.r
            .solve_upper_triangular(&qty)
            .expect("R is nonsingular for a full-rank design")
    }

    /// (XᵀX)⁻¹ = R⁻¹R⁻ᵀ.
    pub fn xtx_inv(&self) -> DMatrix<f64> {
        let k = self.n_params();
        let r_inv = self
            .r
            .solve_upper_triangular(&DMatrix::identity(k, k))
            .expect("R is nonsingular for a full-rank design");
        let m = &r_inv * r_inv.transpose();
        (&m + m.transpose()) * 0.5
    }
}

/// Indices of columns that add no rank to the columns before them.
fn dependent_columns(x: &DMatrix<f64>) -> Vec<usize> {
    let sv = x.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if max > 0.0 && min / max >= RANK_TOLERANCE {
        return Vec::new();
    }
    let mut kept: Vec<usize> = Vec::new();
    let mut dependent = Vec::new();
    for j in 0..x.ncols() {
        let mut cols = kept.clone();
        cols.push(j);
        let sub = x.select_columns(&cols);
        let sv = sub.svd(false, false).singular_values;
        let (max, min) = (sv.max(), sv.min());
        if max > 0.0 && min / max >= RANK_TOLERANCE {
            kept.push(j);
        } else {
            dependent.push(j);
        }
    }
    dependent
}

#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coefficients: DVector<f64>,
    pub residuals: DVector<f64>,
    pub rss: f64,
    /// rss / (n − k), used for test covariances.
    pub sigma2: f64,
    /// rss / n, used inside information criteria.
    pub sigma2_ml: f64,
    /// sigma2 · (XᵀX)⁻¹
    pub coefficient_covariance: DMatrix<f64>,
    pub n_obs: usize,
    pub n_params: usize,
}

impl OlsFit {
    pub fn std_errors(&self) -> DVector<f64> {
        self.coefficient_covariance.diagonal().map(f64::sqrt)
    }

    pub fn t_ratio(&self, i: usize) -> f64 {
        self.coefficients[i] / self.coefficient_covariance[(i, i)].sqrt()
    }
}

pub fn ols(y: &DVector<f64>, x: &DMatrix<f64>) -> Result<OlsFit> {
    if y.len() != x.nrows() {
        return Err(Error::InvalidArgument(format!(
            "y has {} rows, X has {}",
            y.len(),
            x.nrows()
        )));
    }
    let design = Design::new(x.clone())?;
    Ok(ols_with(&design, y))
}

pub(crate) fn ols_with(design: &Design, y: &DVector<f64>) -> OlsFit {
    let (n, k) = (design.n_obs(), design.n_params());
    let ymat = DMatrix::from_column_slice(n, 1, y.as_slice());
    let beta = design.solve(&ymat).column(0).into_owned();
    let residuals = y - design.x() * &beta;
    let rss = residuals.norm_squared();
    let sigma2 = rss / (n - k) as f64;
    OlsFit {
        coefficient_covariance: design.xtx_inv() * sigma2,
        coefficients: beta,
        residuals,
        rss,
        sigma2,
        sigma2_ml: rss / n as f64,
        n_obs: n,
        n_params: k,
    }
}

/// Which information criterion formula produced a score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BicVariant {
    /// n·ln(rss/n) + k·ln n
    Univariate,
    /// ln|Σ̂| + k·ln(n)/n
    System,
}

/// Schwarz criterion n·ln(rss/n) + k·ln n.
pub fn bic(rss: f64, n_obs: usize, n_params: usize) -> Result<f64> {
    if rss <= 0.0 {
        return Err(Error::Degenerate(format!("rss = {rss}")));
    }
    if n_obs <= n_params {
        return Err(Error::InsufficientData(format!(
            "{n_obs} observations for {n_params} parameters"
        )));
    }
    Ok(schwarz(rss, n_obs as f64, n_params as f64))
}

fn schwarz(rss: f64, n: f64, k: f64) -> f64 {
    n * (rss / n).ln() + k * n.ln()
}

/// System Schwarz criterion ln|Σ̂| + k·ln(n)/n, with Σ̂ the ML residual covariance.
pub fn bic_system(residual_cov: &DMatrix<f64>, n_obs: usize, n_params: usize) -> Result<f64> {
    let det = residual_cov.determinant();
    if det <= 0.0 || !det.is_finite() {
        return Err(Error::Degenerate(format!("residual covariance determinant {det}")));
    }
    let n = n_obs as f64;
    Ok(det.ln() + n_params as f64 * n.ln() / n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LjungBoxResult {
    /// Q(m) for m = 1..=max_lag
    pub q_statistics: Vec<f64>,
    /// NaN where m ≤ fitted degrees of freedom.
    pub p_values: Vec<f64>,
    pub max_lag: usize,
    pub fitted_dof: usize,
}

impl LjungBoxResult {
    pub fn q(&self) -> f64 {
        *self.q_statistics.last().expect("max_lag ≥ 1")
    }

    pub fn p_value(&self) -> f64 {
        *self.p_values.last().expect("max_lag ≥ 1")
    }

    pub fn rejects(&self, level: f64) -> bool {
        self.p_value() < level
    }
}

/// Sample autocorrelations ρ̂₁..ρ̂ₘ about the sample mean.
pub fn autocorrelations(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let denom: f64 = c.iter().map(|v| v * v).sum();
    if denom == 0.0 {
        return Err(Error::Degenerate("residuals have zero variance".into()));
    }
    Ok((1..=max_lag)
        .map(|k| c[k..].iter().zip(&c[..n - k]).map(|(a, b)| a * b).sum::<f64>() / denom)
        .collect())
}

/// Ljung-Box portmanteau statistics for lags 1..=max_lag.
pub fn ljung_box(residuals: &[f64], max_lag: usize, fitted_dof: usize) -> Result<LjungBoxResult> {
    let n = residuals.len();
    if max_lag == 0 {
        return Err(Error::InvalidArgument("max_lag must be at least 1".into()));
    }
    if max_lag >= n {
        return Err(Error::InsufficientData(format!(
            "max_lag {max_lag} with {n} residuals"
        )));
    }
    let rho = autocorrelations(residuals, max_lag)?;
    let nf = n as f64;
    let mut q = 0.0;
    let mut q_statistics = Vec::with_capacity(max_lag);
    let mut p_values = Vec::with_capacity(max_lag);
    for (i, r) in rho.iter().enumerate() {
        let k = i + 1;
        q += r * r / (n - k) as f64;
        let qk = nf * (nf + 2.0) * q;
        q_statistics.push(qk);
        p_values.push(if k > fitted_dof {
            chi2_sf(qk, (k - fitted_dof) as f64)
        } else {
            f64::NAN
        });
    }
    Ok(LjungBoxResult {
        q_statistics,
        p_values,
        max_lag,
        fitted_dof,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaldF {
    pub f_statistic: f64,
    pub p_value: f64,
    pub df_num: usize,
    pub df_den: usize,
}

/// Wald F test that the named coefficients are jointly zero.
pub fn joint_significance(fit: &OlsFit, indices: &[usize]) -> Result<WaldF> {
    if indices.is_empty() {
        return Err(Error::InvalidArgument("no coefficients to test".into()));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= fit.n_params) {
        return Err(Error::InvalidArgument(format!(
            "coefficient index {bad} out of range for {} parameters",
            fit.n_params
        )));
    }
    let q = indices.len();
    let b = DVector::from_iterator(q, indices.iter().map(|&i| fit.coefficients[i]));
    let v = DMatrix::from_fn(q, q, |r, c| {
        fit.coefficient_covariance[(indices[r], indices[c])]
    });
    let chol = v
        .cholesky()
        .ok_or_else(|| Error::Numerical("restricted covariance is not positive definite".into()))?;
    let wald = b.dot(&chol.solve(&b));
    let df_den = fit.n_obs - fit.n_params;
    let f = wald / q as f64;
    Ok(WaldF {
        f_statistic: f,
        p_value: f_sf(f, q as f64, df_den as f64),
        df_num: q,
        df_den,
    })
}
