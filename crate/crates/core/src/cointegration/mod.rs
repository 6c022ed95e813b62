//! Johansen reduced-rank trace test with small-sample correction and
//! gamma-approximated p-values.

pub mod moments;
mod table;

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{gamma_isf, gamma_sf};
use crate::error::{Error, Result};
use crate::regress::Design;
use crate::series::Panel;

pub use table::{MOMENT_REPLICATIONS, MOMENT_SEED, MOMENT_STEPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JohansenDeterministic {
    None,
    RestrictedConstant,
    UnrestrictedConstant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SmallSampleCorrection {
    None,
    /// Scale by (T − k·lags)/T.
    DegreesOfFreedom,
    /// Scale each statistic by asymptotic mean / simulated finite-sample mean,
    /// with the finite-sample mean taken under a null DGP of the same
    /// dimension, sample size and lag length.
    SimulatedBartlett { replications: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JohansenSpec {
    /// VAR lags in levels.
    pub lags: usize,
    pub deterministic: JohansenDeterministic,
    pub correction: SmallSampleCorrection,
}

impl JohansenSpec {
    pub fn new(lags: usize) -> Self {
        Self {
            lags,
            deterministic: JohansenDeterministic::UnrestrictedConstant,
            correction: SmallSampleCorrection::DegreesOfFreedom,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceTestResult {
    /// Descending squared canonical correlations.
    pub eigenvalues: Vec<f64>,
    /// Index r holds the statistic for the null "rank ≤ r".
    pub trace_raw: Vec<f64>,
    pub trace_corrected: Vec<f64>,
    pub correction_factors: Vec<f64>,
    pub critical_values_5pct: Vec<f64>,
    pub p_values: Vec<f64>,
    pub selected_rank: usize,
    pub n_effective: usize,
    pub spec: JohansenSpec,
}

impl TraceTestResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "null,alternative,eigenvalue,trace_raw,trace_corrected,critical_value_5pct,p_value\n",
        );
        for r in 0..self.eigenvalues.len() {
            let _ = writeln!(
                out,
                "r = {r},r = {},{:.3},{:.3},{:.3},{:.3},{:.3}",
                r + 1,
                self.eigenvalues[r],
                self.trace_raw[r],
                self.trace_corrected[r],
                self.critical_values_5pct[r],
                self.p_values[r],
            );
        }
        out
    }
}

/// Residual moment blocks of the reduced-rank regression.
#[derive(Debug, Clone)]
pub struct ReducedRankData {
    /// ΔY_t with short-run terms partialled out.
    pub r0: DMatrix<f64>,
    /// Y_{t−1} (and restricted constant) with short-run terms partialled out.
    pub r1: DMatrix<f64>,
}

/// Builds the partialled-out residuals for a Johansen regression on a T×k data matrix.
pub fn reduced_rank_data(
    data: &DMatrix<f64>,
    lags: usize,
    deterministic: JohansenDeterministic,
) -> Result<ReducedRankData> {
    let (t, k) = data.shape();
    if lags == 0 {
        return Err(Error::InvalidArgument("Johansen lags must be at least 1".into()));
    }
    let n_det = usize::from(deterministic != JohansenDeterministic::None);
    if t <= k * lags + n_det + 10 {
        return Err(Error::InsufficientData(format!(
            "{t} observations for a {k}-variable system with {lags} lags"
        )));
    }
    let n = t - lags;
    let dy = |row: usize, j: usize| data[(row, j)] - data[(row - 1, j)];
    let z0 = DMatrix::from_fn(n, k, |r, j| dy(r + lags, j));
    let restricted = deterministic == JohansenDeterministic::RestrictedConstant;
    let z1 = DMatrix::from_fn(n, k + usize::from(restricted), |r, j| {
        if j < k {
            data[(r + lags - 1, j)]
        } else {
            1.0
        }
    });
    let unrestricted = deterministic == JohansenDeterministic::UnrestrictedConstant;
    let n_z2 = k * (lags - 1) + usize::from(unrestricted);
    if n_z2 == 0 {
        return Ok(ReducedRankData { r0: z0, r1: z1 });
    }
    let z2 = DMatrix::from_fn(n, n_z2, |r, c| {
        if unrestricted && c == n_z2 - 1 {
            1.0
        } else {
            let lag = c / k + 1;
            dy(r + lags - lag, c % k)
        }
    });
    let design = Design::new(z2).map_err(|e| match e {
        Error::SingularDesign { .. } => {
            Error::Numerical("short-run regressors are collinear".into())
        }
        other => other,
    })?;
    let r0 = &z0 - design.x() * design.solve(&z0);
    let r1 = &z1 - design.x() * design.solve(&z1);
    Ok(ReducedRankData { r0, r1 })
}

/// Squared canonical correlations between R0 and R1 from the singular values
/// of Q0ᵀQ1, with Q0 and Q1 orthonormal bases from thin QR factorizations.
pub fn canonical_eigenvalues(rr: &ReducedRankData) -> Result<Vec<f64>> {
    let k = rr.r0.ncols();
    let q0 = orthonormal_basis(&rr.r0, "ΔY residuals")?;
    let q1 = orthonormal_basis(&rr.r1, "level residuals")?;
    let m = q0.transpose() * q1;
    let mut sv: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv.truncate(k);
    Ok(sv.into_iter().map(|s| (s * s).min(1.0 - f64::EPSILON)).collect())
}

fn orthonormal_basis(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let sv = m.clone().svd(false, false).singular_values;
    if sv.max() <= 0.0 || sv.min() / sv.max() < 1e-12 {
        return Err(Error::Numerical(format!("{what} moment matrix is singular")));
    }
    Ok(m.clone().qr().q())
}

/// −T·Σ_{i>r} ln(1 − λ_i) for every null rank r.
pub fn trace_statistics(eigenvalues: &[f64], n_effective: usize) -> Vec<f64> {
    let t = n_effective as f64;
    (0..eigenvalues.len())
        .map(|r| -t * eigenvalues[r..].iter().map(|l| (1.0 - l).ln()).sum::<f64>())
        .collect()
}

pub fn johansen_trace(p: &Panel, spec: &JohansenSpec) -> Result<TraceTestResult> {
    johansen_trace_matrix(&p.matrix(), spec)
}

pub fn johansen_trace_matrix(data: &DMatrix<f64>, spec: &JohansenSpec) -> Result<TraceTestResult> {
    let k = data.ncols();
    let rr = reduced_rank_data(data, spec.lags, spec.deterministic)?;
    let n_eff = rr.r0.nrows();
    let eigenvalues = canonical_eigenvalues(&rr)?;
    let trace_raw = trace_statistics(&eigenvalues, n_eff);
    let correction_factors = (0..k)
        .map(|r| correction_factor(spec, n_eff, k, r))
        .collect::<Result<Vec<_>>>()?;
    let trace_corrected: Vec<f64> = trace_raw
        .iter()
        .zip(&correction_factors)
        .map(|(s, f)| s * f)
        .collect();
    let critical_values_5pct = (0..k)
        .map(|r| trace_critical_value(k - r, spec.deterministic, 0.05))
        .collect::<Result<Vec<_>>>()?;
    let p_values = trace_corrected
        .iter()
        .enumerate()
        .map(|(r, &s)| trace_pvalue(s, k - r, spec.deterministic))
        .collect::<Result<Vec<_>>>()?;
    let selected_rank = select_rank(&p_values, 0.05);
    Ok(TraceTestResult {
        eigenvalues,
        trace_raw,
        trace_corrected,
        correction_factors,
        critical_values_5pct,
        p_values,
        selected_rank,
        n_effective: n_eff,
        spec: *spec,
    })
}

/// Smallest r whose null is not rejected at `level`; k if every null is rejected.
pub fn select_rank(p_values: &[f64], level: f64) -> usize {
    p_values
        .iter()
        .position(|&p| p >= level)
        .unwrap_or(p_values.len())
}

/// Degrees-of-freedom factor (T − k·lags)/T applied to a raw statistic.
pub fn bartlett_correction(
    trace_raw: f64,
    n_effective: usize,
    k: usize,
    lags: usize,
) -> Result<f64> {
    Ok(trace_raw * dof_factor(n_effective, k, lags)?)
}

fn dof_factor(n_effective: usize, k: usize, lags: usize) -> Result<f64> {
    if n_effective <= k * lags {
        return Err(Error::InvalidArgument(format!(
            "sample {n_effective} too small for correction with k = {k}, lags = {lags}"
        )));
    }
    Ok((n_effective - k * lags) as f64 / n_effective as f64)
}

fn correction_factor(spec: &JohansenSpec, n_eff: usize, k: usize, rank: usize) -> Result<f64> {
    match spec.correction {
        SmallSampleCorrection::None => Ok(1.0),
        SmallSampleCorrection::DegreesOfFreedom => dof_factor(n_eff, k, spec.lags),
        SmallSampleCorrection::SimulatedBartlett { replications, seed } => {
            simulated_bartlett_factor(n_eff, k, rank, spec, replications, seed)
        }
    }
}

/// E∞[trace] / E_T[trace] under a DGP with `rank` white-noise levels and
/// `k − rank` independent random walks, sample `n_eff` and `spec.lags` lags.
pub fn simulated_bartlett_factor(
    n_eff: usize,
    k: usize,
    rank: usize,
    spec: &JohansenSpec,
    replications: usize,
    seed: u64,
) -> Result<f64> {
    if replications < 2 {
        return Err(Error::InvalidArgument("Bartlett simulation needs replications ≥ 2".into()));
    }
    let dims = k - rank;
    let (asym_mean, _) = moments(dims, spec.deterministic)?;
    let t = n_eff + spec.lags;
    let inner = JohansenSpec {
        correction: SmallSampleCorrection::None,
        ..*spec
    };
    let stats = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((k as u64) << 32 | rank as u64));
            rng.set_stream(rep as u64);
            let mut data = DMatrix::<f64>::zeros(t, k);
            for j in 0..k {
                let mut level = 0.0;
                for row in 0..t {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    if j < rank {
                        data[(row, j)] = e;
                    } else {
                        level += e;
                        data[(row, j)] = level;
                    }
                }
            }
            let rr = reduced_rank_data(&data, inner.lags, inner.deterministic)?;
            let ev = canonical_eigenvalues(&rr)?;
            Ok(trace_statistics(&ev, rr.r0.nrows())[rank])
        })
        .collect::<Result<Vec<f64>>>()?;
    let finite_mean = stats.iter().sum::<f64>() / replications as f64;
    Ok(asym_mean / finite_mean)
}

fn moments(dims: usize, deterministic: JohansenDeterministic) -> Result<(f64, f64)> {
    if dims == 0 || dims > table::MAX_DIMS {
        return Err(Error::InvalidArgument(format!(
            "no trace-distribution moments for {dims} dimensions"
        )));
    }
    let t = match deterministic {
        JohansenDeterministic::None => &table::NONE,
        JohansenDeterministic::RestrictedConstant => &table::RESTRICTED_CONSTANT,
        JohansenDeterministic::UnrestrictedConstant => &table::UNRESTRICTED_CONSTANT,
    };
    Ok(t[dims - 1])
}

/// Mean and variance of the asymptotic trace distribution for `dims` common trends.
pub fn trace_moments(dims: usize, deterministic: JohansenDeterministic) -> Result<(f64, f64)> {
    moments(dims, deterministic)
}

fn gamma_params(dims: usize, deterministic: JohansenDeterministic) -> Result<(f64, f64)> {
    let (mean, var) = moments(dims, deterministic)?;
    Ok((mean * mean / var, var / mean))
}

/// Upper-tail probability of a gamma law matched to the asymptotic mean and variance.
pub fn trace_pvalue(stat: f64, dims: usize, deterministic: JohansenDeterministic) -> Result<f64> {
    if stat.is_nan() || stat < 0.0 {
        return Err(Error::InvalidArgument(format!("trace statistic {stat} is negative")));
    }
    let (shape, scale) = gamma_params(dims, deterministic)?;
    Ok(gamma_sf(stat, shape, scale).clamp(0.0, 1.0))
}

pub fn trace_critical_value(
    dims: usize,
    deterministic: JohansenDeterministic,
    level: f64,
) -> Result<f64> {
    let (shape, scale) = gamma_params(dims, deterministic)?;
    gamma_isf(level, shape, scale)
}
