//! Simulation of the asymptotic trace-test distribution.
//!
//! The limit of the trace statistic for `n` common trends is
//! tr{∫dW F′ (∫F F′)⁻¹ ∫F dW′}, with F a function of an n-dimensional
//! Brownian motion W that depends on the deterministic case. Discretized on
//! `steps` points with Gaussian increments ε, the functional is the sum of
//! squares of ε explained by F_{t−1}, so only cross products of the
//! regressors [W, 1, t] and ε are needed. Every replication draws one
//! `max_dims`-dimensional path and evaluates all dims and cases on nested
//! sub-blocks of it.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::JohansenDeterministic;

const CHUNK: usize = 1_000;

/// Mean and variance of the simulated trace distribution per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedMoments {
    pub deterministic: JohansenDeterministic,
    /// Index `d - 1` holds (mean, variance) for `d` common trends.
    pub moments: Vec<(f64, f64)>,
}

/// Simulates all three deterministic cases for dims `1..=max_dims`.
///
/// Deterministic for a given `seed` regardless of thread count: replication
/// `i` draws from ChaCha stream `i` and chunk sums are reduced in order.
pub fn simulate_trace_moments(
    max_dims: usize,
    reps: usize,
    steps: usize,
    seed: u64,
) -> Vec<SimulatedMoments> {
    const CASES: [JohansenDeterministic; 3] = [
        JohansenDeterministic::None,
        JohansenDeterministic::RestrictedConstant,
        JohansenDeterministic::UnrestrictedConstant,
    ];
    let n_chunks = reps.div_ceil(CHUNK);
    let chunk_sums: Vec<Vec<(f64, f64)>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![(0.0, 0.0); CASES.len() * max_dims];
            for rep in c * CHUNK..((c + 1) * CHUNK).min(reps) {
                let stats = replication(max_dims, steps, seed, rep as u64);
                for (a, s) in acc.iter_mut().zip(stats) {
                    a.0 += s;
                    a.1 += s * s;
                }
            }
            acc
        })
        .collect();
    let mut total = vec![(0.0, 0.0); CASES.len() * max_dims];
    for chunk in chunk_sums {
        for (t, c) in total.iter_mut().zip(chunk) {
            t.0 += c.0;
            t.1 += c.1;
        }
    }
    let n = reps as f64;
    CASES
        .iter()
        .enumerate()
        .map(|(ci, &det)| SimulatedMoments {
            deterministic: det,
            moments: (0..max_dims)
                .map(|d| {
                    let (s, ss) = total[ci * max_dims + d];
                    let mean = s / n;
                    (mean, (ss - n * mean * mean) / (n - 1.0))
                })
                .collect(),
        })
        .collect()
}

/// One discretized path; returns statistics ordered case-major, then dims.
fn replication(max_dims: usize, steps: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let m = max_dims;
    // regressor columns: W_1..W_m, constant, trend
    let n_reg = m + 2;
    let mut gtg = DMatrix::<f64>::zeros(n_reg, n_reg);
    let mut gte = DMatrix::<f64>::zeros(n_reg, m);
    let mut w = vec![0.0; m];
    let mut g = DVector::<f64>::zeros(n_reg);
    let mut eps = DVector::<f64>::zeros(m);
    for t in 0..steps {
        for j in 0..m {
            eps[j] = StandardNormal.sample(&mut rng);
        }
        for j in 0..m {
            g[j] = w[j];
        }
        g[m] = 1.0;
        g[m + 1] = (t + 1) as f64 / steps as f64;
        gtg.ger(1.0, &g, &g, 1.0);
        gte.ger(1.0, &g, &eps, 1.0);
        for j in 0..m {
            w[j] += eps[j];
        }
    }
    let explained = |cols: &[usize], dims: usize| -> f64 {
        let a = gtg.select_rows(cols).select_columns(cols);
        let b = gte.select_rows(cols).columns(0, dims).into_owned();
        let chol = a.cholesky().expect("regressor cross products are positive definite");
        let sol = chol.solve(&b);
        b.component_mul(&sol).sum()
    };
    let mut out = Vec::with_capacity(3 * m);
    for dims in 1..=m {
        let cols: Vec<usize> = (0..dims).collect();
        out.push(explained(&cols, dims));
    }
    for dims in 1..=m {
        let mut cols: Vec<usize> = (0..dims).collect();
        cols.push(m);
        out.push(explained(&cols, dims));
    }
    for dims in 1..=m {
        // W_1..W_{dims-1} and the trend, demeaned
        let mut cols: Vec<usize> = (0..dims - 1).collect();
        cols.push(m + 1);
        cols.push(m);
        out.push(explained(&cols, dims) - explained(&[m], dims));
    }
    out
}
