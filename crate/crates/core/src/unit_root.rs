//! Augmented Dickey-Fuller tests with Schwarz-selected augmentation.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regress::{bic, ols_with, Design};
use crate::series::{difference, Panel, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Deterministic {
    Drift,
    DriftAndTrend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagSelection {
    Bic,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdfSpec {
    pub deterministic: Deterministic,
    pub max_augmenting_lags: usize,
    pub selection: LagSelection,
}

impl AdfSpec {
    pub fn bic(deterministic: Deterministic, max_augmenting_lags: usize) -> Self {
        Self {
            deterministic,
            max_augmenting_lags,
            selection: LagSelection::Bic,
        }
    }

    pub fn fixed(deterministic: Deterministic, lags: usize) -> Self {
        Self {
            deterministic,
            max_augmenting_lags: lags,
            selection: LagSelection::Fixed(lags),
        }
    }

    /// Largest lag the regression must accommodate.
    fn reach(&self) -> usize {
        match self.selection {
            LagSelection::Bic => self.max_augmenting_lags,
            LagSelection::Fixed(k) => k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    /// t-ratio on the lagged level.
    pub statistic: f64,
    pub augmenting_lags: usize,
    pub critical_value_5pct: f64,
    pub reject_unit_root: bool,
    pub spec: AdfSpec,
    pub n_effective: usize,
}

/// Response-surface coefficients (τ∞, β₁, β₂, β₃) for one regressor:
/// c(T) = τ∞ + β₁/T + β₂/T² + β₃/T³, rows for the 1%, 5% and 10% levels.
const SURFACE_DRIFT: [[f64; 4]; 3] = [
    [-3.43035, -6.5393, -16.786, -79.433],
    [-2.86154, -2.8903, -4.234, -40.040],
    [-2.56677, -1.5384, -2.809, 0.0],
];
const SURFACE_TREND: [[f64; 4]; 3] = [
    [-3.95877, -9.0531, -28.428, -134.155],
    [-3.41049, -4.3904, -9.036, -45.374],
    [-3.12705, -2.5856, -3.925, -22.380],
];

/// Dickey-Fuller critical value for `n` observations at `level` ∈ {0.01, 0.05, 0.10}.
pub fn adf_critical_value(deterministic: Deterministic, n: usize, level: f64) -> Result<f64> {
    let row = [0.01, 0.05, 0.10]
        .iter()
        .position(|&l| (l - level).abs() < 1e-12)
        .ok_or_else(|| Error::InvalidArgument(format!("unsupported significance level {level}")))?;
    if n < 25 {
        return Err(Error::InsufficientData(format!(
            "critical values need at least 25 observations, got {n}"
        )));
    }
    let c = match deterministic {
        Deterministic::Drift => SURFACE_DRIFT[row],
        Deterministic::DriftAndTrend => SURFACE_TREND[row],
    };
    Ok(asymptotic_surface(&c, n as f64))
}

/// Limit of the response surface as the sample grows.
pub fn adf_asymptotic_critical_value(deterministic: Deterministic, level: f64) -> Result<f64> {
    adf_critical_value(deterministic, usize::MAX, level)
}

fn asymptotic_surface(c: &[f64; 4], t: f64) -> f64 {
    c[0] + c[1] / t + c[2] / (t * t) + c[3] / (t * t * t)
}

/// ADF test using the largest sample the lag reach allows.
pub fn adf_test(s: &TimeSeries, spec: &AdfSpec) -> Result<AdfResult> {
    adf_test_from(s.values(), spec, spec.reach() + 1)
}

/// ADF test whose first dependent observation Δy_t is at index `first_obs`.
///
/// All candidate lag lengths are fit on the common sample `first_obs..n`,
/// which needs `first_obs ≥ reach + 1`.
pub fn adf_test_from(y: &[f64], spec: &AdfSpec, first_obs: usize) -> Result<AdfResult> {
    let reach = spec.reach();
    if first_obs < reach + 1 {
        return Err(Error::InsufficientData(format!(
            "first observation {first_obs} leaves no room for {reach} augmenting lags"
        )));
    }
    let n_det = match spec.deterministic {
        Deterministic::Drift => 1,
        Deterministic::DriftAndTrend => 2,
    };
    let n_eff = y.len().saturating_sub(first_obs);
    if n_eff < reach + n_det + 1 + 10 {
        return Err(Error::InsufficientData(format!(
            "{n_eff} observations for ADF with {reach} lags"
        )));
    }
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    // dy[t - 1] = y[t] - y[t - 1]
    if y.iter().all(|&v| v == y[0]) {
        return Err(Error::Degenerate("constant series has no unit-root test".into()));
    }
    let target = DVector::from_fn(n_eff, |r, _| dy[first_obs + r - 1]);

    let design_for = |p: usize| {
        DMatrix::from_fn(n_eff, n_det + 1 + p, |r, c| {
            let t = first_obs + r;
            match c {
                0 => 1.0,
                1 if n_det == 2 => (r + 1) as f64,
                c if c == n_det => y[t - 1],
                c => {
                    let lag = c - n_det;
                    dy[t - lag - 1]
                }
            }
        })
    };

    let chosen = match spec.selection {
        LagSelection::Fixed(k) => k,
        LagSelection::Bic => {
            let mut best = (f64::INFINITY, 0);
            for p in 0..=spec.max_augmenting_lags {
                let design = Design::new(design_for(p))?;
                let fit = ols_with(&design, &target);
                let score = bic(fit.rss, n_eff, design.n_params())?;
                // strict improvement keeps the smallest lag on ties
                if score < best.0 {
                    best = (score, p);
                }
            }
            best.1
        }
    };
    let design = Design::new(design_for(chosen))?;
    let fit = ols_with(&design, &target);
    if fit.rss <= 0.0 {
        return Err(Error::Degenerate("ADF regression fits exactly".into()));
    }
    let statistic = fit.t_ratio(n_det);
    let critical = adf_critical_value(spec.deterministic, n_eff, 0.05)?;
    Ok(AdfResult {
        statistic,
        augmenting_lags: chosen,
        critical_value_5pct: critical,
        reject_unit_root: statistic < critical,
        spec: *spec,
        n_effective: n_eff,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Levels,
    FirstDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityRow {
    pub variable: String,
    pub deterministic: Deterministic,
    pub levels: AdfResult,
    pub first_difference: AdfResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityTable {
    pub rows: Vec<StationarityRow>,
}

impl StationarityTable {
    pub fn get(&self, variable: &str, deterministic: Deterministic) -> Option<&StationarityRow> {
        self.rows
            .iter()
            .find(|r| r.variable == variable && r.deterministic == deterministic)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "panel,variable,levels_statistic,levels_lags,levels_reject,\
             first_difference_statistic,first_difference_lags,first_difference_reject,\
             critical_value_5pct\n",
        );
        for r in &self.rows {
            let panel = match r.deterministic {
                Deterministic::Drift => "drift",
                Deterministic::DriftAndTrend => "drift_and_trend",
            };
            let _ = writeln!(
                out,
                "{panel},{},{:.4},{},{},{:.4},{},{},{:.4}",
                r.variable,
                r.levels.statistic,
                r.levels.augmenting_lags,
                r.levels.reject_unit_root,
                r.first_difference.statistic,
                r.first_difference.augmenting_lags,
                r.first_difference.reject_unit_root,
                r.levels.critical_value_5pct,
            );
        }
        out
    }
}

/// ADF tests of every panel member in levels and first differences.
///
/// `estimation_start` is the panel index of the first estimation month; the
/// rows before it are presample. Lag reach is capped by the presample.
pub fn stationarity_table(
    p: &Panel,
    specs: &[AdfSpec],
    estimation_start: usize,
) -> Result<StationarityTable> {
    if p.n_vars() == 0 || specs.is_empty() {
        return Err(Error::InvalidArgument("empty panel or spec set".into()));
    }
    if estimation_start < 2 {
        return Err(Error::InsufficientData(
            "first differences need at least two presample months".into(),
        ));
    }
    let jobs: Vec<(&TimeSeries, &AdfSpec)> = specs
        .iter()
        .flat_map(|spec| p.series().iter().map(move |s| (s, spec)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(s, spec)| {
            let level_spec = capped(spec, estimation_start - 1);
            let levels = adf_test_from(s.values(), &level_spec, estimation_start)?;
            let d = difference(s, 1)?;
            let diff_spec = capped(spec, estimation_start - 2);
            let first_difference = adf_test_from(d.values(), &diff_spec, estimation_start - 1)?;
            Ok(StationarityRow {
                variable: s.name().to_string(),
                deterministic: spec.deterministic,
                levels,
                first_difference,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StationarityTable { rows })
}

fn capped(spec: &AdfSpec, reach: usize) -> AdfSpec {
    let mut s = *spec;
    s.max_augmenting_lags = s.max_augmenting_lags.min(reach);
    if let LagSelection::Fixed(k) = s.selection {
        s.selection = LagSelection::Fixed(k.min(reach));
    }
    s
}
