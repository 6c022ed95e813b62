//! Two-step (Engle-Granger) VECM with a single cointegrating vector.
//!
//! Step one regresses the dependent variable on the others in levels; its
//! residual is the equilibrium error. Step two runs OLS of every ΔY_t on a
//! constant, the lagged error and `lags_in_differences` lagged differences.
//! All equations share one design, so the coefficient matrix has regressor
//! rows `[1, ec_{t−1}, ΔY_{t−1} (k), …, ΔY_{t−L} (k)]` and one column per
//! equation.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::distributions::chi2_sf;
use crate::error::{Error, Result};
use crate::regress::{bic_system, joint_significance, ljung_box, ols_with, Design, LjungBoxResult, WaldF};
use crate::series::{Panel, SampleWindow, TimeSeries, YearMonth};

/// Equilibrium error of step one, aligned with the panel rows.
#[derive(Debug, Clone, PartialEq)]
pub struct EcTerm {
    /// β′Y_t − c for every panel row t; the VECM uses it lagged once.
    pub residual_series: TimeSeries,
    /// Normalized so the first nonzero entry is 1.
    pub beta: DVector<f64>,
    /// Step-one constant c, in the same normalization.
    pub intercept: f64,
    pub dependent: String,
}

pub fn engle_granger_step1(p: &Panel, dependent: &str) -> Result<EcTerm> {
    engle_granger_step1_from(p, dependent, 0)
}

/// Step one fit on panel rows `first_obs..T`; the error is still reported for every row.
pub fn engle_granger_step1_from(p: &Panel, dependent: &str, first_obs: usize) -> Result<EcTerm> {
    let k = p.n_vars();
    if k < 2 {
        return Err(Error::InvalidArgument(
            "the cointegrating regression needs at least two variables".into(),
        ));
    }
    let dep = p
        .index_of(dependent)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown dependent variable `{dependent}`")))?;
    let data = p.matrix();
    let n = data.nrows();
    if first_obs >= n {
        return Err(Error::InsufficientData(format!("first observation {first_obs} of {n}")));
    }
    let rows = n - first_obs;
    let others: Vec<usize> = (0..k).filter(|&j| j != dep).collect();
    let mut x = DMatrix::<f64>::from_element(rows, k, 1.0);
    for (c, &j) in others.iter().enumerate() {
        x.set_column(c + 1, &data.column(j).rows(first_obs, rows));
    }
    let design = Design::new(x)?;
    let fit = ols_with(&design, &data.column(dep).rows(first_obs, rows).into_owned());
    let mut beta = DVector::<f64>::zeros(k);
    beta[dep] = 1.0;
    for (c, &j) in others.iter().enumerate() {
        beta[j] = -fit.coefficients[c + 1];
    }
    let mut intercept = fit.coefficients[0];
    let lead = beta.iter().copied().find(|v| *v != 0.0).unwrap_or(1.0);
    beta /= lead;
    intercept /= lead;
    let values: Vec<f64> = (0..n).map(|t| data.row(t).dot(&beta.transpose()) - intercept).collect();
    let first = &p.series()[0];
    Ok(EcTerm {
        residual_series: TimeSeries::new("ec", first.frequency(), first.start_date(), values)?,
        beta,
        intercept,
        dependent: dependent.to_string(),
    })
}

/// Data a fit was computed from; needed for refits, not serialized.
#[derive(Debug, Clone, PartialEq)]
pub struct FitData {
    /// Panel levels, all rows.
    pub levels: DMatrix<f64>,
    /// First panel row used as a dependent observation.
    pub first_obs: usize,
    pub regressors: DMatrix<f64>,
    pub targets: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VecmModel {
    pub variables: Vec<String>,
    pub cointegrating_vector: DVector<f64>,
    pub ec_intercept: f64,
    pub step1_dependent: String,
    pub adjustment_loadings: DVector<f64>,
    /// Γ₁..Γ_L; entry (i, j) is the effect of ΔY_{j,t−l} on equation i.
    pub short_run: Vec<DMatrix<f64>>,
    pub intercepts: DVector<f64>,
    /// T_eff × k
    pub residuals: DMatrix<f64>,
    /// Residual cross products / T_eff.
    pub residual_covariance: DMatrix<f64>,
    pub lags_in_differences: usize,
    /// Variable order of the panel the model was fit on.
    pub ordering: Vec<String>,
    pub sample: Option<SampleWindow>,
    /// Start month of the first dependent observation.
    pub first_month: YearMonth,
    /// (XᵀX)⁻¹ of the shared design.
    pub xtx_inv: DMatrix<f64>,
    pub fit_data: Option<FitData>,
}

impl VecmModel {
    pub fn k(&self) -> usize {
        self.variables.len()
    }

    pub fn n_obs(&self) -> usize {
        self.residuals.nrows()
    }

    /// Regressors per equation: 2 + k·L.
    pub fn n_regressors(&self) -> usize {
        2 + self.k() * self.lags_in_differences
    }

    /// Companion dimension k·(L + 1).
    pub fn companion_dim(&self) -> usize {
        self.k() * (self.lags_in_differences + 1)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    /// Coefficients as regressors × equations.
    pub fn coefficient_matrix(&self) -> DMatrix<f64> {
        let k = self.k();
        let mut b = DMatrix::<f64>::zeros(self.n_regressors(), k);
        for eq in 0..k {
            b[(0, eq)] = self.intercepts[eq];
            b[(1, eq)] = self.adjustment_loadings[eq];
            for (l, g) in self.short_run.iter().enumerate() {
                for j in 0..k {
                    b[(2 + l * k + j, eq)] = g[(eq, j)];
                }
            }
        }
        b
    }

    /// Replaces intercepts, loadings and Γs from a regressors × equations matrix.
    pub fn with_coefficients(&self, b: &DMatrix<f64>) -> VecmModel {
        let mut m = self.clone();
        let (intercepts, alpha, gammas) = split_coefficients(b, self.k(), self.lags_in_differences);
        m.intercepts = intercepts;
        m.adjustment_loadings = alpha;
        m.short_run = gammas;
        m
    }

    /// Π = αβ′
    pub fn pi(&self) -> DMatrix<f64> {
        &self.adjustment_loadings * self.cointegrating_vector.transpose()
    }

    /// Level-VAR coefficients A₁..A_{L+1}.
    pub fn level_coefficients(&self) -> Vec<DMatrix<f64>> {
        level_var(&self.pi(), &self.short_run)
    }

    /// Constant of the level VAR, c − α·c_ec.
    pub fn level_intercept(&self) -> DVector<f64> {
        &self.intercepts - &self.adjustment_loadings * self.ec_intercept
    }

    pub fn companion_matrix(&self) -> DMatrix<f64> {
        companion(&self.level_coefficients())
    }

    /// Moduli of the companion eigenvalues, largest first.
    pub fn companion_root_moduli(&self) -> Vec<f64> {
        root_moduli(&self.companion_matrix())
    }
}

pub(crate) fn split_coefficients(
    b: &DMatrix<f64>,
    k: usize,
    lags: usize,
) -> (DVector<f64>, DVector<f64>, Vec<DMatrix<f64>>) {
    let intercepts = b.row(0).transpose();
    let alpha = b.row(1).transpose();
    let gammas = (0..lags)
        .map(|l| DMatrix::from_fn(k, k, |eq, j| b[(2 + l * k + j, eq)]))
        .collect();
    (intercepts, alpha, gammas)
}

/// A₁ = I + Π + Γ₁, A_i = Γ_i − Γ_{i−1}, A_{L+1} = −Γ_L.
pub fn level_var(pi: &DMatrix<f64>, gammas: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    let k = pi.nrows();
    let lags = gammas.len();
    let mut a = Vec::with_capacity(lags + 1);
    let mut a1 = DMatrix::<f64>::identity(k, k) + pi;
    if let Some(g1) = gammas.first() {
        a1 += g1;
    }
    a.push(a1);
    for i in 1..lags {
        a.push(&gammas[i] - &gammas[i - 1]);
    }
    if lags > 0 {
        a.push(-&gammas[lags - 1]);
    }
    a
}

/// Eigenvalue moduli of a square matrix, largest first; NaN if the Schur
/// iteration does not converge.
pub fn root_moduli(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out: Vec<f64> = match m.clone().try_schur(f64::EPSILON, 10_000) {
        Some(schur) => schur.complex_eigenvalues().iter().map(|z| z.norm()).collect(),
        None => vec![f64::NAN; m.nrows()],
    };
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

/// Stacked first-order form of a level VAR.
pub fn companion(a: &[DMatrix<f64>]) -> DMatrix<f64> {
    let k = a[0].nrows();
    let p = a.len();
    let mut c = DMatrix::<f64>::zeros(k * p, k * p);
    for (i, ai) in a.iter().enumerate() {
        c.view_mut((0, i * k), (k, k)).copy_from(ai);
    }
    if p > 1 {
        c.view_mut((k, 0), (k * (p - 1), k * (p - 1)))
            .fill_with_identity();
    }
    c
}

/// Targets ΔY_t and regressors for panel rows `first_obs..T`.
pub(crate) fn vecm_design(
    levels: &DMatrix<f64>,
    ec: &[f64],
    lags: usize,
    first_obs: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (t_all, k) = levels.shape();
    if first_obs < lags + 1 {
        return Err(Error::InsufficientData(format!(
            "first observation {first_obs} leaves no room for {lags} lagged differences"
        )));
    }
    if first_obs >= t_all {
        return Err(Error::InsufficientData(format!(
            "first observation {first_obs} beyond {t_all} rows"
        )));
    }
    let n = t_all - first_obs;
    let diff = |t: usize, j: usize| levels[(t, j)] - levels[(t - 1, j)];
    let targets = DMatrix::from_fn(n, k, |r, j| diff(first_obs + r, j));
    let regressors = DMatrix::from_fn(n, 2 + k * lags, |r, c| {
        let t = first_obs + r;
        match c {
            0 => 1.0,
            1 => ec[t - 1],
            _ => {
                let l = (c - 2) / k + 1;
                diff(t - l, (c - 2) % k)
            }
        }
    });
    Ok((targets, regressors))
}

/// Fit on panel rows from `lags + 1`.
pub fn fit_vecm(p: &Panel, ec: &EcTerm, lags_in_differences: usize) -> Result<VecmModel> {
    fit_vecm_from(p, ec, lags_in_differences, lags_in_differences + 1)
}

/// Fit with dependent observations on panel rows `first_obs..T`.
pub fn fit_vecm_from(
    p: &Panel,
    ec: &EcTerm,
    lags_in_differences: usize,
    first_obs: usize,
) -> Result<VecmModel> {
    if ec.residual_series.len() != p.len() {
        return Err(Error::InvalidArgument(format!(
            "error-correction term has {} rows, panel has {}",
            ec.residual_series.len(),
            p.len()
        )));
    }
    if ec.beta.len() != p.n_vars() {
        return Err(Error::InvalidArgument("cointegrating vector length differs from panel".into()));
    }
    let levels = p.matrix();
    let (targets, regressors) =
        vecm_design(&levels, ec.residual_series.values(), lags_in_differences, first_obs)?;
    let design = Design::new(regressors.clone())?;
    let b = design.solve(&targets);
    let residuals = &targets - &regressors * &b;
    let n = residuals.nrows();
    let sigma = ml_covariance(&residuals);
    let k = p.n_vars();
    let (intercepts, alpha, gammas) = split_coefficients(&b, k, lags_in_differences);
    Ok(VecmModel {
        variables: p.names(),
        cointegrating_vector: ec.beta.clone(),
        ec_intercept: ec.intercept,
        step1_dependent: ec.dependent.clone(),
        adjustment_loadings: alpha,
        short_run: gammas,
        intercepts,
        residual_covariance: sigma,
        lags_in_differences,
        ordering: p.order().to_vec(),
        sample: None,
        first_month: p.start_month().offset(first_obs as i64),
        xtx_inv: design.xtx_inv(),
        fit_data: Some(FitData {
            levels,
            first_obs,
            regressors,
            targets,
        }),
        residuals: {
            debug_assert_eq!(n, p.len() - first_obs);
            residuals
        },
    })
}

pub(crate) fn ml_covariance(residuals: &DMatrix<f64>) -> DMatrix<f64> {
    let s = residuals.transpose() * residuals / residuals.nrows() as f64;
    (&s + s.transpose()) * 0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagSelection {
    pub selected: usize,
    /// (lags in differences, system BIC)
    pub scores: Vec<(usize, f64)>,
    pub first_obs: usize,
}

/// System BIC over 1..=max_lags, every candidate fit from the same first row.
pub fn select_lags(
    p: &Panel,
    ec: &EcTerm,
    max_lags: usize,
    first_obs: Option<usize>,
) -> Result<LagSelection> {
    if max_lags == 0 {
        return Err(Error::InvalidArgument("max_lags must be at least 1".into()));
    }
    let first = first_obs.unwrap_or(0).max(max_lags + 1);
    let mut scores = Vec::with_capacity(max_lags);
    for lags in 1..=max_lags {
        let m = fit_vecm_from(p, ec, lags, first)?;
        let params = m.k() * m.n_regressors();
        scores.push((lags, bic_system(&m.residual_covariance, m.n_obs(), params)?));
    }
    let selected = scores
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|s| s.0)
        .expect("at least one candidate");
    Ok(LagSelection {
        selected,
        scores,
        first_obs: first,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhitenessReport {
    pub equations: Vec<(String, LjungBoxResult)>,
    pub level: f64,
}

impl WhitenessReport {
    pub fn rejected(&self) -> Vec<&str> {
        self.equations
            .iter()
            .filter(|(_, r)| r.rejects(self.level))
            .map(|(n, _)| n.as_str())
            .collect()
    }

    pub fn all_white(&self) -> bool {
        self.rejected().is_empty()
    }
}

/// Ljung-Box on every equation's residuals, flagged at 5%.
pub fn whiteness_report(m: &VecmModel, max_lag: usize) -> Result<WhitenessReport> {
    let equations = m
        .variables
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let col: Vec<f64> = m.residuals.column(j).iter().copied().collect();
            Ok((name.clone(), ljung_box(&col, max_lag, 0)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WhitenessReport {
        equations,
        level: 0.05,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagExclusion {
    pub lag: usize,
    pub equations: Vec<(String, WaldF)>,
    pub lr_statistic: f64,
    pub lr_df: usize,
    pub lr_p_value: f64,
}

/// Joint exclusion of lagged difference `lag_index` (1-based).
pub fn lag_exclusion_test(m: &VecmModel, lag_index: usize) -> Result<LagExclusion> {
    if lag_index == 0 || lag_index > m.lags_in_differences {
        return Err(Error::InvalidArgument(format!(
            "lag {lag_index} outside 1..={}",
            m.lags_in_differences
        )));
    }
    let data = m
        .fit_data
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("lag exclusion needs the model's fit data".into()))?;
    let k = m.k();
    let cols: Vec<usize> = (0..k).map(|j| 2 + (lag_index - 1) * k + j).collect();
    let design = Design::new(data.regressors.clone())?;
    let equations = m
        .variables
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let fit = ols_with(&design, &data.targets.column(j).into_owned());
            Ok((name.clone(), joint_significance(&fit, &cols)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let keep: Vec<usize> = (0..m.n_regressors()).filter(|c| !cols.contains(c)).collect();
    let restricted = Design::new(data.regressors.select_columns(&keep))?;
    let b_r = restricted.solve(&data.targets);
    let res_r = &data.targets - restricted.x() * b_r;
    let ld_r = log_det(&ml_covariance(&res_r))?;
    let ld_u = log_det(&m.residual_covariance)?;
    let lr = m.n_obs() as f64 * (ld_r - ld_u);
    let df = k * k;
    Ok(LagExclusion {
        lag: lag_index,
        equations,
        lr_statistic: lr,
        lr_df: df,
        lr_p_value: chi2_sf(lr, df as f64),
    })
}

fn log_det(s: &DMatrix<f64>) -> Result<f64> {
    let chol = s.clone().cholesky().ok_or_else(|| Error::NotPositiveDefinite {
        min_eigenvalue: s.symmetric_eigenvalues().min(),
    })?;
    Ok(2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

// Plain-text model format
//
//   vecm-model 1
//   variables E A P Y R
//   ordering E A P Y R
//   lags_in_differences 5
//   step1_dependent E
//   first_month 2003M7
//   sample 2002M12 2003M7 2019M6        (or "sample none")
//   ec_intercept <x>
//   beta[k] <x…>
//   alpha[k] <x…>
//   intercepts[k] <x…>
//   gamma[1][k,k] followed by k rows, for each lag
//   sigma[k,k], xtx_inv[m,m], residuals[T,k] likewise
//
// Numbers use the shortest representation that round-trips exactly.

impl VecmModel {
    pub fn to_text(&self) -> String {
        let k = self.k();
        let mut s = String::new();
        let vec_line = |s: &mut String, name: &str, v: &DVector<f64>| {
            let _ = write!(s, "{name}[{}]", v.len());
            for x in v.iter() {
                let _ = write!(s, " {x:e}");
            }
            s.push('\n');
        };
        let mat_block = |s: &mut String, header: String, m: &DMatrix<f64>| {
            let _ = writeln!(s, "{header}[{},{}]", m.nrows(), m.ncols());
            for r in 0..m.nrows() {
                let row: Vec<String> = m.row(r).iter().map(|x| format!("{x:e}")).collect();
                let _ = writeln!(s, "{}", row.join(" "));
            }
        };
        s.push_str("vecm-model 1\n");
        let _ = writeln!(s, "variables {}", self.variables.join(" "));
        let _ = writeln!(s, "ordering {}", self.ordering.join(" "));
        let _ = writeln!(s, "lags_in_differences {}", self.lags_in_differences);
        let _ = writeln!(s, "step1_dependent {}", self.step1_dependent);
        let _ = writeln!(s, "first_month {}", self.first_month);
        match &self.sample {
            Some(w) => {
                let _ = writeln!(
                    s,
                    "sample {} {} {}",
                    w.presample_start, w.estimation_start, w.estimation_end
                );
            }
            None => s.push_str("sample none\n"),
        }
        let _ = writeln!(s, "ec_intercept {:e}", self.ec_intercept);
        vec_line(&mut s, "beta", &self.cointegrating_vector);
        vec_line(&mut s, "alpha", &self.adjustment_loadings);
        vec_line(&mut s, "intercepts", &self.intercepts);
        for (l, g) in self.short_run.iter().enumerate() {
            mat_block(&mut s, format!("gamma[{}]", l + 1), g);
        }
        debug_assert!(self.short_run.iter().all(|g| g.nrows() == k));
        mat_block(&mut s, "sigma".into(), &self.residual_covariance);
        mat_block(&mut s, "xtx_inv".into(), &self.xtx_inv);
        mat_block(&mut s, "residuals".into(), &self.residuals);
        s
    }

    /// Inverse of [`VecmModel::to_text`]; `path` only labels errors.
    pub fn from_text(text: &str, path: &str) -> Result<VecmModel> {
        let mut r = Reader {
            lines: text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).collect(),
            pos: 0,
            path,
        };
        let (i, magic) = r.keyed("vecm-model")?;
        if magic.get(1).map(String::as_str) != Some("1") {
            return Err(r.err(i, "unsupported model format version".into()));
        }
        let variables = r.keyed("variables")?.1[1..].to_vec();
        let k = variables.len();
        let ordering = r.keyed("ordering")?.1[1..].to_vec();
        let lags: usize = r.single("lags_in_differences")?;
        let step1_dependent: String = r.single("step1_dependent")?;
        let first_month: YearMonth = r.single("first_month")?;
        let (i, smp) = r.keyed("sample")?;
        let sample = if smp.get(1).map(String::as_str) == Some("none") {
            None
        } else {
            let months: Vec<YearMonth> = smp[1..]
                .iter()
                .map(|m| m.parse().map_err(|_| r.err(i, format!("bad month `{m}`"))))
                .collect::<Result<_>>()?;
            if months.len() != 3 {
                return Err(r.err(i, "sample needs three months".into()));
            }
            Some(
                SampleWindow::new(months[0], months[1], months[2])
                    .map_err(|e| r.err(i, e.to_string()))?,
            )
        };
        let ec_intercept: f64 = r.single("ec_intercept")?;
        let beta = r.vector("beta", k)?;
        let alpha = r.vector("alpha", k)?;
        let intercepts = r.vector("intercepts", k)?;
        let short_run = (0..lags).map(|_| r.matrix("gamma")).collect::<Result<Vec<_>>>()?;
        let sigma = r.matrix("sigma")?;
        let xtx_inv = r.matrix("xtx_inv")?;
        let residuals = r.matrix("residuals")?;
        let m = 2 + k * lags;
        if short_run.iter().any(|g| g.shape() != (k, k))
            || sigma.shape() != (k, k)
            || xtx_inv.shape() != (m, m)
            || residuals.ncols() != k
        {
            return Err(r.err(0, "block dimensions disagree with the variable count".into()));
        }
        Ok(VecmModel {
            variables,
            cointegrating_vector: beta,
            ec_intercept,
            step1_dependent,
            adjustment_loadings: alpha,
            short_run,
            intercepts,
            residuals,
            residual_covariance: sigma,
            lags_in_differences: lags,
            ordering,
            sample,
            first_month,
            xtx_inv,
            fit_data: None,
        })
    }

    /// Human-readable coefficient summary.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "VECM, {} lags in differences, {} observations from {}",
            self.lags_in_differences,
            self.n_obs(),
            self.first_month
        );
        let _ = writeln!(s, "step-one dependent: {}", self.step1_dependent);
        let _ = writeln!(s, "{:>8} {:>14} {:>14} {:>14}", "", "beta", "alpha", "intercept");
        for (j, v) in self.variables.iter().enumerate() {
            let _ = writeln!(
                s,
                "{:>8} {:>14.6} {:>14.6} {:>14.6}",
                v, self.cointegrating_vector[j], self.adjustment_loadings[j], self.intercepts[j]
            );
        }
        let _ = writeln!(s, "ec intercept {:.6}", self.ec_intercept);
        let moduli = self.companion_root_moduli();
        let _ = writeln!(
            s,
            "largest companion root moduli: {}",
            moduli
                .iter()
                .take(self.k())
                .map(|m| format!("{m:.4}"))
                .collect::<Vec<_>>()
                .join(" ")
        );
        s
    }
}

struct Reader<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
    path: &'a str,
}

impl Reader<'_> {
    fn err(&self, line: usize, message: String) -> Error {
        Error::Parse {
            path: self.path.to_string(),
            line: line + 1,
            message,
        }
    }

    fn line(&mut self, what: &str) -> Result<(usize, &str)> {
        let last = self.lines.last().map_or(0, |l| l.0);
        let l = *self
            .lines
            .get(self.pos)
            .ok_or_else(|| self.err(last, format!("expected {what}, found end of file")))?;
        self.pos += 1;
        Ok(l)
    }

    /// Next line, whose first token (before any `[`) must be `what`.
    fn keyed(&mut self, what: &str) -> Result<(usize, Vec<String>)> {
        let (i, l) = self.line(what)?;
        let toks: Vec<String> = l.split_whitespace().map(str::to_string).collect();
        if toks[0].split('[').next() != Some(what) {
            return Err(self.err(i, format!("expected {what}, found `{}`", toks[0])));
        }
        Ok((i, toks))
    }

    fn single<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let (i, toks) = self.keyed(what)?;
        match toks.as_slice() {
            [_, v] => v.parse().map_err(|_| self.err(i, format!("bad {what} `{v}`"))),
            _ => Err(self.err(i, format!("{what} takes one value"))),
        }
    }

    fn number(&self, i: usize, t: &str) -> Result<f64> {
        t.parse().map_err(|_| self.err(i, format!("bad number `{t}`")))
    }

    fn vector(&mut self, what: &str, k: usize) -> Result<DVector<f64>> {
        let (i, toks) = self.keyed(what)?;
        if toks.len() != k + 1 {
            return Err(self.err(i, format!("{what} needs {k} values")));
        }
        let v = toks[1..].iter().map(|t| self.number(i, t)).collect::<Result<Vec<_>>>()?;
        Ok(DVector::from_vec(v))
    }

    fn matrix(&mut self, what: &str) -> Result<DMatrix<f64>> {
        let (i, toks) = self.keyed(what)?;
        let (rows, cols) = toks[0]
            .rsplit('[')
            .next()
            .and_then(|d| d.strip_suffix(']'))
            .and_then(|d| d.split_once(','))
            .and_then(|(r, c)| Some((r.parse::<usize>().ok()?, c.parse::<usize>().ok()?)))
            .ok_or_else(|| self.err(i, format!("bad dimensions in `{}`", toks[0])))?;
        let mut m = DMatrix::<f64>::zeros(rows, cols);
        for r in 0..rows {
            let (i, row) = self.line(what)?;
            let row = row.to_string();
            let vals: Vec<&str> = row.split_whitespace().collect();
            if vals.len() != cols {
                return Err(self.err(i, format!("{what} row needs {cols} values")));
            }
            for (c, v) in vals.iter().enumerate() {
                m[(r, c)] = self.number(i, v)?;
            }
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{panel_from_matrix, random_walks, VecmProcess};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn start() -> YearMonth {
        YearMonth::new(2000, 1).unwrap()
    }

    fn bivariate(n: usize, seed: u64, gammas: Vec<DMatrix<f64>>) -> Panel {
        let p = VecmProcess::rank_one(&[-0.5, 0.2], &[1.0, -1.0], gammas);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        panel_from_matrix(&p.simulate(n, 100, &mut rng).unwrap(), &["y1", "y2"], start()).unwrap()
    }

    #[test]
    fn step1_superconsistent_slope() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = random_walks(1, 500, &mut rng);
        let y = DMatrix::from_fn(500, 2, |t, j| {
            let e: f64 = StandardNormal.sample(&mut rng);
            if j == 0 { 2.0 * w[(t, 0)] + 0.5 * e } else { w[(t, 0)] }
        });
        let p = panel_from_matrix(&y, &["a", "b"], start()).unwrap();
        let ec = engle_granger_step1(&p, "a").unwrap();
        assert_eq!(ec.beta[0], 1.0);
        assert!((ec.beta[1] + 2.0).abs() < 0.05, "{}", ec.beta[1]);
    }

    #[test]
    fn step1_error_shrinks_with_sample_size() {
        let pairs = 40;
        let better = (0..pairs)
            .filter(|&s| {
                let long = bivariate(2000, 500 + s, vec![]);
                let short = long.slice(0, 200).unwrap();
                let err = |p: &Panel| (engle_granger_step1(p, "y1").unwrap().beta[1] + 1.0).abs();
                err(&long) < err(&short)
            })
            .count();
        assert!(better as f64 >= 0.9 * pairs as f64, "{better}/{pairs}");
    }

    #[test]
    fn step1_exact_combination_has_zero_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = random_walks(2, 100, &mut rng);
        let y = DMatrix::from_fn(100, 3, |t, j| match j {
            0 => 1.0 + 0.5 * w[(t, 0)] - 2.0 * w[(t, 1)],
            1 => w[(t, 0)],
            _ => w[(t, 1)],
        });
        let p = panel_from_matrix(&y, &["a", "b", "c"], start()).unwrap();
        let ec = engle_granger_step1(&p, "a").unwrap();
        assert!(ec.residual_series.values().iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn step1_rejects_single_variable() {
        let p = panel_from_matrix(&DMatrix::from_fn(20, 1, |t, _| t as f64), &["a"], start()).unwrap();
        assert!(matches!(engle_granger_step1(&p, "a"), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn step1_normalizes_on_first_variable() {
        let p = bivariate(300, 4, vec![]);
        let ec = engle_granger_step1(&p, "y2").unwrap();
        assert_eq!(ec.beta[0], 1.0);
        assert!((ec.beta[1] + 1.0).abs() < 0.1);
    }

    #[test]
    fn recovers_known_vecm() {
        let g = DMatrix::from_row_slice(2, 2, &[0.2, 0.1, -0.1, 0.3]);
        let p = bivariate(2000, 5, vec![g.clone()]);
        let ec = engle_granger_step1(&p, "y1").unwrap();
        let m = fit_vecm(&p, &ec, 1).unwrap();
        assert!((m.adjustment_loadings[0] + 0.5).abs() < 0.1, "{}", m.adjustment_loadings);
        assert!((m.adjustment_loadings[1] - 0.2).abs() < 0.1, "{}", m.adjustment_loadings);
        assert!((&m.short_run[0] - &g).amax() < 0.1, "{}", m.short_run[0]);
    }

    #[test]
    fn zero_dynamics_coefficients_insignificant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let y = random_walks(2, 400, &mut rng);
        let p = panel_from_matrix(&y, &["a", "b"], start()).unwrap();
        let ec = engle_granger_step1(&p, "a").unwrap();
        let m = fit_vecm(&p, &ec, 1).unwrap();
        let data = m.fit_data.as_ref().unwrap();
        let design = Design::new(data.regressors.clone()).unwrap();
        for j in 0..2 {
            let fit = ols_with(&design, &data.targets.column(j).into_owned());
            // the EC loading has a non-standard distribution under no cointegration
            for c in 2..fit.n_params {
                assert!(fit.t_ratio(c).abs() < 3.0, "eq {j} coef {c}: {}", fit.t_ratio(c));
            }
        }
    }

    #[test]
    fn zero_lags_shape() {
        let p = bivariate(50, 1, vec![]);
        let ec = engle_granger_step1(&p, "y1").unwrap();
        let m = fit_vecm(&p, &ec, 0).unwrap();
        assert_eq!(m.n_obs(), 49);
        assert!(m.short_run.is_empty());
        assert_eq!(m.companion_dim(), 2);
    }

    #[test]
    fn residual_means_vanish() {
        let p = bivariate(300, 2, vec![]);
        let ec = engle_granger_step1(&p, "y1").unwrap();
        let m = fit_vecm(&p, &ec, 2).unwrap();
        for j in 0..2 {
            let col = m.residuals.column(j);
            let scale = col.amax();
            assert!(col.mean().abs() <= 1e-8 * scale);
        }
        let ev = m.residual_covariance.symmetric_eigenvalues();
        assert!(ev.min() > 0.0);
    }

    #[test]
    fn equation_ols_equals_system_gls() {
        let p = bivariate(120, 3, vec![DMatrix::identity(2, 2) * 0.2]);
        let ec = engle_granger_step1(&p, "y1").unwrap();
        let m = fit_vecm(&p, &ec, 2).unwrap();
        let data = m.fit_data.as_ref().unwrap();
        let x = &data.regressors;
        let (n, q) = x.shape();
        let k = 2;
        // vec(Y) = (I ⊗ X) vec(B) + u, Var(u) = Σ ⊗ I; GLS via the Kronecker forms
        let s_inv = m.residual_covariance.clone().try_inverse().unwrap();
        let mut big_x = DMatrix::<f64>::zeros(n * k, q * k);
        let mut w = DMatrix::<f64>::zeros(n * k, n * k);
        for a in 0..k {
            big_x.view_mut((a * n, a * q), (n, q)).copy_from(x);
            for b in 0..k {
                w.view_mut((a * n, b * n), (n, n)).fill_diagonal(s_inv[(a, b)]);
            }
        }
        let y = DVector::from_iterator(n * k, data.targets.iter().copied());
        let xtw = big_x.transpose() * &w;
        let gls = (&xtw * &big_x).try_inverse().unwrap() * (&xtw * y);
        let b = m.coefficient_matrix();
        let ols = DVector::from_iterator(q * k, b.iter().copied());
        assert!((gls - ols).amax() < 1e-9);
    }

    #[test]
    fn companion_roots_split_unit_and_stable() {
        let p = bivariate(2000, 9, vec![DMatrix::identity(2, 2) * 0.3]);
        let ec = engle_granger_step1(&p, "y1").unwrap();
        let m = fit_vecm(&p, &ec, 1).unwrap();
        let roots = m.companion_root_moduli();
        assert_eq!(roots.len(), 4);
        // k − r = 1 unit root, the rest inside the unit circle
        assert!((roots[0] - 1.0).abs() < 0.05, "{roots:?}");
        assert!(roots[1] < 0.95, "{roots:?}");
    }

    #[test]
    fn level_var_of_true_process_has_exact_unit_root() {
        let alpha = DVector::from_column_slice(&[-0.5, 0.2]);
        let beta = DVector::from_column_slice(&[1.0, -1.0]);
        let g = vec![DMatrix::from_row_slice(2, 2, &[0.2, 0.1, -0.1, 0.3])];
        let a = level_var(&(&alpha * beta.transpose()), &g);
        let moduli = root_moduli(&companion(&a));
        assert!((moduli[0] - 1.0).abs() < 1e-6);
        assert!(moduli[1] < 1.0);
    }

    #[test]
    fn noiseless_refit_reproduces_coefficients() {
        let g = DMatrix::from_row_slice(2, 2, &[0.2, 0.1, -0.1, 0.3]);
        let p = bivariate(200, 6, vec![g]);
        let ec = engle_granger_step1(&p, "y1").unwrap();
        let m = fit_vecm(&p, &ec, 1).unwrap();
        // regenerate from the first rows with the fitted system and no shocks
        let data = m.fit_data.as_ref().unwrap();
        let a = m.level_coefficients();
        let c = m.level_intercept();
        let n = 60;
        let mut y = data.levels.rows(0, n).into_owned();
        for t in a.len()..n {
            let mut next = c.clone();
            for (i, ai) in a.iter().enumerate() {
                next += ai * y.row(t - 1 - i).transpose();
            }
            y.set_row(t, &next.transpose());
        }
        let q = panel_from_matrix(&y, &["y1", "y2"], start()).unwrap();
        let ec2 = EcTerm {
            residual_series: TimeSeries::monthly(
                "ec",
                start(),
                (0..n).map(|t| y.row(t).dot(&m.cointegrating_vector.transpose()) - m.ec_intercept).collect(),
            )
            .unwrap(),
            ..ec
        };
        let refit = fit_vecm(&q, &ec2, 1).unwrap();
        let diff = (refit.coefficient_matrix() - m.coefficient_matrix()).amax();
        assert!(diff < 1e-6, "{diff}");
    }

    #[test]
    fn bic_selects_true_lag_order() {
        let g1 = DMatrix::from_row_slice(2, 2, &[0.3, 0.1, 0.0, 0.3]);
        let g2 = DMatrix::from_row_slice(2, 2, &[-0.3, 0.0, 0.1, 0.25]);
        let sims = 20;
        let hits = (0..sims)
            .filter(|&s| {
                let p = bivariate(2000, 100 + s, vec![g1.clone(), g2.clone()]);
                let ec = engle_granger_step1(&p, "y1").unwrap();
                select_lags(&p, &ec, 4, None).unwrap().selected == 2
            })
            .count();
        assert!(hits as f64 >= 0.9 * sims as f64, "{hits}/{sims}");
    }

    #[test]
    fn single_candidate_lag() {
        let p = bivariate(100, 1, vec![]);
        let ec = engle_granger_step1(&p, "y1").unwrap();
        assert_eq!(select_lags(&p, &ec, 1, None).unwrap().selected, 1);
        assert!(select_lags(&p, &ec, 0, None).is_err());
    }

    #[test]
    fn whiteness_at_true_order_and_under_lagged() {
        let g = DMatrix::from_row_slice(2, 2, &[0.2, 0.1, -0.1, 0.3]);
        let sims = 20;
        let passes = (0..sims)
            .filter(|&s| {
                let p = bivariate(500, 200 + s, vec![g.clone()]);
                let ec = engle_granger_step1(&p, "y1").unwrap();
                whiteness_report(&fit_vecm(&p, &ec, 1).unwrap(), 12).unwrap().all_white()
            })
            .count();
        // two equations at 5% each
        assert!(passes as f64 >= 0.8 * sims as f64, "{passes}/{sims}");

        let ar3 = vec![
            DMatrix::identity(2, 2) * 0.4,
            DMatrix::identity(2, 2) * -0.3,
            DMatrix::identity(2, 2) * 0.4,
        ];
        let p = bivariate(1000, 7, ar3);
        let ec = engle_granger_step1(&p, "y1").unwrap();
        let m = fit_vecm(&p, &ec, 0).unwrap();
        assert!(!whiteness_report(&m, 12).unwrap().all_white());
        assert!(whiteness_report(&m, 0).is_err());
    }

    #[test]
    fn strong_lag_is_not_excludable() {
        let g1 = DMatrix::identity(2, 2) * 0.1;
        let g2 = DMatrix::from_row_slice(2, 2, &[0.4, 0.0, 0.0, -0.4]);
        let sims = 20;
        let rejections = (0..sims)
            .filter(|&s| {
                let p = bivariate(500, 300 + s, vec![g1.clone(), g2.clone()]);
                let ec = engle_granger_step1(&p, "y1").unwrap();
                let t = lag_exclusion_test(&fit_vecm(&p, &ec, 2).unwrap(), 2).unwrap();
                t.lr_p_value < 0.05 && t.equations.iter().all(|(_, w)| w.p_value < 0.05)
            })
            .count();
        assert!(rejections as f64 >= 0.95 * sims as f64, "{rejections}/{sims}");
        let p = bivariate(200, 1, vec![]);
        let ec = engle_granger_step1(&p, "y1").unwrap();
        let m = fit_vecm(&p, &ec, 2).unwrap();
        assert!(lag_exclusion_test(&m, 3).is_err());
        assert!(lag_exclusion_test(&m, 0).is_err());
    }

    #[test]
    fn text_round_trip_is_exact() {
        let p = bivariate(80, 1, vec![DMatrix::identity(2, 2) * 0.2]);
        let ec = engle_granger_step1(&p, "y1").unwrap();
        let mut m = fit_vecm(&p, &ec, 2).unwrap();
        m.sample = Some(SampleWindow::new(start(), start().offset(3), start().offset(79)).unwrap());
        let text = m.to_text();
        let back = VecmModel::from_text(&text, "model.txt").unwrap();
        let mut expected = m.clone();
        expected.fit_data = None;
        assert_eq!(back, expected);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn parse_error_names_line() {
        let p = bivariate(40, 1, vec![]);
        let ec = engle_granger_step1(&p, "y1").unwrap();
        let text = fit_vecm(&p, &ec, 1).unwrap().to_text().replacen("alpha[2]", "alpha[2] x", 1);
        match VecmModel::from_text(&text, "m.txt") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 10),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn normalized_beta_and_pd_sigma(seed in 0u64..1000, lags in 0usize..3) {
            let p = bivariate(120, seed, vec![]);
            let ec = engle_granger_step1(&p, "y2").unwrap();
            let m = fit_vecm(&p, &ec, lags).unwrap();
            let lead = m.cointegrating_vector.iter().find(|v| **v != 0.0).copied();
            prop_assert_eq!(lead, Some(1.0));
            prop_assert!(m.residual_covariance.symmetric_eigenvalues().min() > 0.0);
            prop_assert_eq!(m.companion_matrix().nrows(), 2 * (lags + 1));
            prop_assert_eq!(m.n_obs(), 120 - lags - 1);
        }
    }
}
