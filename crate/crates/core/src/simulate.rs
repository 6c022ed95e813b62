//! Synthetic data from known VECMs, for oracles and the `simulate` verb.

use chrono::{Datelike, NaiveDate};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::series::{Panel, TimeSeries, YearMonth};

/// ΔY_t = c + α(β′Y_{t−1}) + Σ Γ_i ΔY_{t−i} + u_t, u_t ~ N(0, Σ).
#[derive(Debug, Clone, PartialEq)]
pub struct VecmProcess {
    /// k × r
    pub alpha: DMatrix<f64>,
    /// k × r
    pub beta: DMatrix<f64>,
    pub gammas: Vec<DMatrix<f64>>,
    pub intercept: DVector<f64>,
    pub sigma: DMatrix<f64>,
}

impl VecmProcess {
    pub fn k(&self) -> usize {
        self.alpha.nrows()
    }

    /// Single cointegrating vector, zero intercept, unit-diagonal Σ.
    pub fn rank_one(alpha: &[f64], beta: &[f64], gammas: Vec<DMatrix<f64>>) -> Self {
        let k = alpha.len();
        Self {
            alpha: DMatrix::from_column_slice(k, 1, alpha),
            beta: DMatrix::from_column_slice(k, 1, beta),
            gammas,
            intercept: DVector::zeros(k),
            sigma: DMatrix::identity(k, k),
        }
    }

    fn validate(&self) -> Result<()> {
        let k = self.k();
        let ok = self.beta.shape() == self.alpha.shape()
            && self.gammas.iter().all(|g| g.shape() == (k, k))
            && self.intercept.len() == k
            && self.sigma.shape() == (k, k);
        if !ok {
            return Err(Error::InvalidArgument("VECM process dimensions disagree".into()));
        }
        Ok(())
    }

    /// `n` levels after `burn_in` discarded observations, starting from zero.
    pub fn simulate<R: Rng + ?Sized>(
        &self,
        n: usize,
        burn_in: usize,
        rng: &mut R,
    ) -> Result<DMatrix<f64>> {
        self.validate()?;
        let chol = self
            .sigma
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite {
                min_eigenvalue: self.sigma.symmetric_eigenvalues().min(),
            })?
            .unpack();
        let k = self.k();
        let total = n + burn_in;
        let mut shocks = DMatrix::<f64>::zeros(total, k);
        for t in 0..total {
            let z = DVector::from_fn(k, |_, _| StandardNormal.sample(rng));
            shocks.set_row(t, &(&chol * z).transpose());
        }
        let levels = self.simulate_with_shocks(&shocks, &DVector::zeros(k));
        Ok(levels.rows(burn_in, n).into_owned())
    }

    /// Levels driven by the given shock rows, from `y0` with zero past differences.
    pub fn simulate_with_shocks(&self, shocks: &DMatrix<f64>, y0: &DVector<f64>) -> DMatrix<f64> {
        let (total, k) = shocks.shape();
        let lags = self.gammas.len();
        let pi = &self.alpha * self.beta.transpose();
        let mut levels = DMatrix::<f64>::zeros(total, k);
        let mut diffs: Vec<DVector<f64>> = vec![DVector::zeros(k); lags];
        let mut prev = y0.clone();
        for t in 0..total {
            let mut d = &self.intercept + &pi * &prev + shocks.row(t).transpose();
            for (i, g) in self.gammas.iter().enumerate() {
                d += g * &diffs[i];
            }
            if lags > 0 {
                diffs.rotate_right(1);
                diffs[0] = d.clone();
            }
            prev += d;
            levels.set_row(t, &prev.transpose());
        }
        levels
    }
}

/// `k` independent Gaussian random walks of length `n`.
pub fn random_walks<R: Rng + ?Sized>(k: usize, n: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::<f64>::zeros(n, k);
    for j in 0..k {
        let mut level = 0.0;
        for t in 0..n {
            let e: f64 = StandardNormal.sample(rng);
            level += e;
            m[(t, j)] = level;
        }
    }
    m
}

/// Wraps a T×k matrix as a monthly panel named `names`, starting at `start`.
pub fn panel_from_matrix(m: &DMatrix<f64>, names: &[&str], start: YearMonth) -> Result<Panel> {
    if names.len() != m.ncols() {
        return Err(Error::InvalidArgument(format!(
            "{} names for {} columns",
            names.len(),
            m.ncols()
        )));
    }
    let series = names
        .iter()
        .enumerate()
        .map(|(j, n)| TimeSeries::monthly(*n, start, m.column(j).iter().copied().collect()))
        .collect::<Result<Vec<_>>>()?;
    Panel::new(series)
}

/// Synthetic raw files mimicking the replication inputs.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    /// (file stem, series) in E, A, P, Y, R order.
    pub series: Vec<(String, TimeSeries)>,
}

/// Raw inputs for a five-variable design over `months` months from `start`.
///
/// With `cointegrated` the log levels of E, A, P, Y and R follow a rank-one
/// VECM; otherwise they are independent random walks. E, A, P and Y are
/// exponentiated; A is published weekly (Wednesdays) without seasonal
/// adjustment and carries a multiplicative seasonal pattern.
pub fn synthetic_dataset<R: Rng + ?Sized>(
    start: YearMonth,
    months: usize,
    cointegrated: bool,
    rng: &mut R,
) -> Result<SyntheticDataset> {
    let k = 5;
    let scale = DVector::from_column_slice(&[0.01, 0.02, 0.003, 0.006, 0.2]);
    let levels = if cointegrated {
        let mut g1 = DMatrix::<f64>::identity(k, k) * 0.25;
        g1[(3, 0)] = 0.1;
        g1[(2, 0)] = 0.05;
        let mut process = VecmProcess::rank_one(
            &[-0.35, 0.1, 0.05, 0.1, 2.0],
            &[1.0, -0.2, -0.5, -1.0, 0.02],
            vec![g1],
        );
        process.sigma = DMatrix::from_diagonal(&scale.map(|s| s * s));
        process.intercept = DVector::from_column_slice(&[0.003, 0.008, 0.002, 0.001, 0.0]);
        process.simulate(months, 200, rng)?
    } else {
        let mut m = random_walks(k, months, rng);
        for j in 0..k {
            m.column_mut(j).scale_mut(scale[j]);
        }
        m
    };
    let base = [14.5, 14.0, 5.4, 4.6, 3.0];
    let names = ["E", "A", "P", "Y", "R"];
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let col: Vec<f64> = levels.column(j).iter().map(|v| v + base[j]).collect();
        let series = match names[j] {
            "R" => TimeSeries::monthly("R", start, col)?,
            "A" => weekly_with_season(&col, start, rng)?,
            n => TimeSeries::monthly(n, start, col.iter().map(|v| v.exp()).collect())?,
        };
        out.push((names[j].to_string(), series));
    }
    Ok(SyntheticDataset { series: out })
}

/// Weekly Wednesday observations whose monthly means carry a seasonal factor.
fn weekly_with_season<R: Rng + ?Sized>(
    log_monthly: &[f64],
    start: YearMonth,
    rng: &mut R,
) -> Result<TimeSeries> {
    const FACTORS: [f64; 12] = [
        0.97, 0.98, 1.0, 1.01, 1.0, 1.02, 1.03, 1.01, 0.99, 1.0, 0.99, 1.0,
    ];
    let first = start.first_day();
    let offset = (2 + 7 - first.weekday().num_days_from_monday()) % 7;
    let mut day = first + chrono::Duration::days(offset as i64);
    let end = start.offset(log_monthly.len() as i64).first_day();
    let mut values = Vec::new();
    let start_day: NaiveDate = day;
    while day < end {
        let ym = YearMonth::of_date(day);
        let i = start.months_until(ym) as usize;
        let noise: f64 = StandardNormal.sample(rng);
        values.push(log_monthly[i].exp() * FACTORS[ym.month as usize - 1] * (1.0 + 0.001 * noise));
        day += chrono::Duration::days(7);
    }
    TimeSeries::weekly("A", start_day, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_shocks_with_zero_start_stay_at_zero() {
        let p = VecmProcess::rank_one(&[-0.5, 0.2], &[1.0, -1.0], vec![]);
        let levels = p.simulate_with_shocks(&DMatrix::zeros(10, 2), &DVector::zeros(2));
        assert!(levels.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn equilibrium_error_is_stationary() {
        let p = VecmProcess::rank_one(&[-0.5, 0.2], &[1.0, -1.0], vec![]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = p.simulate(2000, 100, &mut rng).unwrap();
        let ec: Vec<f64> = (0..2000).map(|t| y[(t, 0)] - y[(t, 1)]).collect();
        let var = ec.iter().map(|v| v * v).sum::<f64>() / 2000.0;
        // AR(1) with coefficient 1 - 0.7 and innovation variance 2
        assert!((var - 2.0 / (1.0 - 0.09)).abs() < 0.3, "{var}");
    }

    #[test]
    fn synthetic_dataset_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = synthetic_dataset(YearMonth::new(2002, 12).unwrap(), 200, true, &mut rng).unwrap();
        assert_eq!(d.series.len(), 5);
        let a = &d.series[1].1;
        assert_eq!(a.frequency(), crate::Frequency::Weekly);
        assert_eq!(a.start_date().weekday(), chrono::Weekday::Wed);
        assert!(d.series[0].1.values().iter().all(|&v| v > 0.0));
    }
}
