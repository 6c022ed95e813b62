//! Core X-11 seasonal adjustment: 2×12 trend, 3×3 and 3×5 seasonal filters
//! and a 13-term Henderson trend, iterated twice.
//!
//! Seasonal-irregular ratios are formed only where the trend window is
//! complete. The per-month seasonal filters and the final Henderson trend are
//! truncated at the ends with their remaining weights renormalized, and
//! seasonal factors for the unobserved end months repeat the nearest year.
//! No extreme-value replacement, trading-day or forecast extension is
//! performed.

use serde::{Deserialize, Serialize};

use crate::distributions::f_isf;
use crate::error::{Error, Result};
use crate::series::{Frequency, TimeSeries};

const PERIOD: usize = 12;
const MIN_LEN: usize = 36;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeasonalMode {
    #[default]
    Multiplicative,
    Additive,
}

impl SeasonalMode {
    fn remove(self, y: f64, s: f64) -> f64 {
        match self {
            SeasonalMode::Multiplicative => y / s,
            SeasonalMode::Additive => y - s,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeasonalDecomposition {
    pub trend: TimeSeries,
    pub seasonal: TimeSeries,
    pub irregular: TimeSeries,
    pub adjusted: TimeSeries,
    pub mode: SeasonalMode,
}

/// Centered 2×12 moving average weights.
fn weights_2x12() -> Vec<f64> {
    let mut w = vec![1.0 / 12.0; 13];
    w[0] = 1.0 / 24.0;
    w[12] = 1.0 / 24.0;
    w
}

const WEIGHTS_3X3: [f64; 5] = [1.0 / 9.0, 2.0 / 9.0, 3.0 / 9.0, 2.0 / 9.0, 1.0 / 9.0];
const WEIGHTS_3X5: [f64; 7] = [
    1.0 / 15.0,
    2.0 / 15.0,
    3.0 / 15.0,
    3.0 / 15.0,
    3.0 / 15.0,
    2.0 / 15.0,
    1.0 / 15.0,
];

/// Symmetric Henderson trend weights with `terms` = 2m + 1 points.
pub fn henderson_weights(terms: usize) -> Vec<f64> {
    assert!(terms % 2 == 1 && terms >= 5, "Henderson filters have odd length ≥ 5");
    let m = (terms / 2) as f64;
    let h = m + 2.0;
    let denom = 8.0
        * h
        * (h * h - 1.0)
        * (4.0 * h * h - 1.0)
        * (4.0 * h * h - 9.0)
        * (4.0 * h * h - 25.0);
    (0..terms)
        .map(|i| {
            let j = i as f64 - m;
            let j2 = j * j;
            315.0
                * ((h - 1.0).powi(2) - j2)
                * (h * h - j2)
                * ((h + 1.0).powi(2) - j2)
                * (3.0 * h * h - 16.0 - 11.0 * j2)
                / denom
        })
        .collect()
}

/// Applies symmetric `weights`, truncating and renormalizing at the ends.
pub fn symmetric_filter(x: &[f64], weights: &[f64]) -> Vec<f64> {
    let n = x.len();
    let half = weights.len() / 2;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            let mut sum = 0.0;
            let mut wsum = 0.0;
            for (j, xj) in x.iter().enumerate().take(hi + 1).skip(lo) {
                let w = weights[j + half - i];
                sum += w * xj;
                wsum += w;
            }
            sum / wsum
        })
        .collect()
}

/// Applies symmetric `weights` only where the full window fits.
fn full_window_filter(x: &[f64], weights: &[f64]) -> Vec<Option<f64>> {
    let half = weights.len() / 2;
    (0..x.len())
        .map(|i| {
            (i >= half && i + half < x.len()).then(|| {
                weights
                    .iter()
                    .zip(&x[i - half..=i + half])
                    .map(|(w, v)| w * v)
                    .sum()
            })
        })
        .collect()
}

/// Replaces missing leading and trailing entries by the nearest present value.
fn fill_ends(x: &[Option<f64>]) -> Vec<f64> {
    let first = x.iter().position(Option::is_some).expect("some value present");
    let last = x.iter().rposition(Option::is_some).expect("some value present");
    (0..x.len())
        .map(|i| x[i.clamp(first, last)].expect("interior values present"))
        .collect()
}

/// Filters each calendar-month subseries across the years where it is
/// observed, then carries the nearest year's factor into unobserved years.
fn seasonal_filter(si: &[Option<f64>], weights: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; si.len()];
    for m in 0..PERIOD.min(si.len()) {
        let sub: Vec<Option<f64>> = si.iter().skip(m).step_by(PERIOD).copied().collect();
        let present: Vec<f64> = sub.iter().flatten().copied().collect();
        let offset = sub.iter().position(Option::is_some).expect("each month observed");
        let filtered = symmetric_filter(&present, weights);
        let mut expanded = vec![None; sub.len()];
        for (k, v) in filtered.into_iter().enumerate() {
            expanded[offset + k] = Some(v);
        }
        for (k, v) in fill_ends(&expanded).into_iter().enumerate() {
            out[m + k * PERIOD] = v;
        }
    }
    out
}

fn normalize(s: &[f64], mode: SeasonalMode) -> Vec<f64> {
    let level = fill_ends(&full_window_filter(s, &weights_2x12()));
    s.iter()
        .zip(&level)
        .map(|(&v, &l)| mode.remove(v, l))
        .collect()
}

fn check(s: &TimeSeries) -> Result<()> {
    if s.frequency() != Frequency::Monthly {
        return Err(Error::Frequency(format!(
            "seasonal adjustment of `{}` requires monthly data",
            s.name()
        )));
    }
    if s.len() < MIN_LEN {
        return Err(Error::InsufficientData(format!(
            "seasonal adjustment needs {MIN_LEN} months, `{}` has {}",
            s.name(),
            s.len()
        )));
    }
    Ok(())
}

pub fn x11_adjust(s: &TimeSeries, mode: SeasonalMode) -> Result<SeasonalDecomposition> {
    check(s)?;
    if mode == SeasonalMode::Multiplicative {
        if let Some(i) = s.values().iter().position(|&v| v <= 0.0) {
            return Err(Error::Domain {
                date: s.label_at(i),
                value: s.values()[i],
            });
        }
    }
    let y = s.values();
    let remove = |a: &[f64], b: &[f64]| -> Vec<f64> {
        a.iter().zip(b).map(|(&x, &z)| mode.remove(x, z)).collect()
    };
    let ratios = |trend: &[Option<f64>]| -> Vec<Option<f64>> {
        y.iter()
            .zip(trend)
            .map(|(&v, t)| t.map(|t| mode.remove(v, t)))
            .collect()
    };
    let henderson = henderson_weights(13);

    // seasonal-irregular values only where the trend window is complete
    let trend1 = full_window_filter(y, &weights_2x12());
    let seasonal1 = normalize(&seasonal_filter(&ratios(&trend1), &WEIGHTS_3X3), mode);

    let trend2 = full_window_filter(&remove(y, &seasonal1), &henderson);
    let seasonal2 = normalize(&seasonal_filter(&ratios(&trend2), &WEIGHTS_3X5), mode);

    let adjusted = remove(y, &seasonal2);
    let trend = symmetric_filter(&adjusted, &henderson);
    let irregular = remove(&adjusted, &trend);

    let build = |suffix: &str, v: Vec<f64>| s.derived(0, v).map(|t| t.with_name(format!("{}_{suffix}", s.name())));
    Ok(SeasonalDecomposition {
        trend: build("trend", trend)?,
        seasonal: build("seasonal", seasonal2)?,
        irregular: build("irregular", irregular)?,
        adjusted: s.derived(0, adjusted)?,
        mode,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableSeasonality {
    pub seasonal: bool,
    pub f_statistic: f64,
    pub critical_value_1pct: f64,
}

/// Stable-seasonality F test: one-way ANOVA by calendar month of the series
/// minus its centered 2×12 moving average (full-window points only).
pub fn is_seasonal(s: &TimeSeries) -> Result<StableSeasonality> {
    check(s)?;
    let y = s.values();
    let trend = symmetric_filter(y, &weights_2x12());
    let month0 = s.start_month().month as usize - 1;
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); PERIOD];
    for i in 6..y.len() - 6 {
        groups[(month0 + i) % PERIOD].push(y[i] - trend[i]);
    }
    let n: usize = groups.iter().map(Vec::len).sum();
    let grand = groups.iter().flatten().sum::<f64>() / n as f64;
    let mut between = 0.0;
    let mut within = 0.0;
    for g in &groups {
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        between += g.len() as f64 * (mean - grand).powi(2);
        within += g.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    }
    let df_between = (PERIOD - 1) as f64;
    let df_within = (n - PERIOD) as f64;
    let f_statistic = if between == 0.0 {
        0.0
    } else if within == 0.0 {
        f64::INFINITY
    } else {
        (between / df_between) / (within / df_within)
    };
    let critical_value_1pct = f_isf(0.01, df_between, df_within)?;
    Ok(StableSeasonality {
        seasonal: f_statistic > critical_value_1pct,
        f_statistic,
        critical_value_1pct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::YearMonth;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn monthly(v: Vec<f64>) -> TimeSeries {
        TimeSeries::monthly("A", YearMonth::new(2000, 1).unwrap(), v).unwrap()
    }

    fn pattern(i: usize) -> f64 {
        match i % 12 {
            0 => 1.0,
            6 => -1.0,
            _ => 0.0,
        }
    }

    #[test]
    fn henderson_13_weights() {
        let w = henderson_weights(13);
        let expected = [
            -0.01935, -0.02786, 0.0, 0.06549, 0.14736, 0.21434, 0.24006,
        ];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 5e-5, "{a} vs {b}");
        }
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn henderson_passes_quadratics() {
        let x: Vec<f64> = (0..60).map(|t| 0.3 * (t * t) as f64 - 2.0 * t as f64 + 5.0).collect();
        let y = symmetric_filter(&x, &henderson_weights(13));
        for i in 6..54 {
            assert!((x[i] - y[i]).abs() <= 1e-8, "{i}");
        }
    }

    #[test]
    fn recovers_additive_pattern() {
        let y: Vec<f64> = (0..120).map(|t| t as f64 + pattern(t)).collect();
        let d = x11_adjust(&monthly(y.clone()), SeasonalMode::Additive).unwrap();
        for t in 36..84 {
            assert!((d.adjusted.values()[t] - t as f64).abs() <= 0.05, "t={t}");
            assert!((d.seasonal.values()[t] - pattern(t)).abs() <= 0.05);
        }
        for t in 0..120 {
            let rebuilt = d.adjusted.values()[t] + d.seasonal.values()[t];
            assert!((rebuilt - y[t]).abs() <= 1e-8);
        }
    }

    #[test]
    fn constant_series_unchanged() {
        let d = x11_adjust(&monthly(vec![100.0; 60]), SeasonalMode::Multiplicative).unwrap();
        assert!(d.seasonal.values().iter().all(|s| (s - 1.0).abs() <= 1e-9));
        assert!(d
            .adjusted
            .values()
            .iter()
            .all(|a| (a - 100.0).abs() <= 1e-9));
    }

    #[test]
    fn multiplicative_components_reproduce_original() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let y: Vec<f64> = (0..96)
            .map(|t| {
                let e: f64 = StandardNormal.sample(&mut rng);
                (100.0 + t as f64) * (1.0 + 0.05 * pattern(t)) * (1.0 + 0.002 * e)
            })
            .collect();
        let d = x11_adjust(&monthly(y.clone()), SeasonalMode::Multiplicative).unwrap();
        for t in 0..96 {
            let rebuilt = d.trend.values()[t] * d.seasonal.values()[t] * d.irregular.values()[t];
            assert!((rebuilt / y[t] - 1.0).abs() < 1e-8);
            assert!((d.adjusted.values()[t] - y[t] / d.seasonal.values()[t]).abs() < 1e-9);
        }
    }

    #[test]
    fn periodic_seasonal_sums_to_zero_over_any_year() {
        let y: Vec<f64> = (0..144).map(|t| 0.5 * t as f64 + 3.0 * pattern(t) + 2.0 * pattern(t + 3)).collect();
        let d = x11_adjust(&monthly(y), SeasonalMode::Additive).unwrap();
        let s = d.seasonal.values();
        for start in 48..(96 - 12) {
            let mean = s[start..start + 12].iter().sum::<f64>() / 12.0;
            assert!(mean.abs() <= 1e-6, "{start}: {mean}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            x11_adjust(&monthly(vec![1.0; 24]), SeasonalMode::Additive),
            Err(Error::InsufficientData(_))
        ));
        let mut v = vec![1.0; 48];
        v[10] = -1.0;
        assert!(x11_adjust(&monthly(v), SeasonalMode::Multiplicative).is_err());
    }

    #[test]
    fn seasonality_detection() {
        let c = is_seasonal(&monthly(vec![5.0; 60])).unwrap();
        assert_eq!(c.f_statistic, 0.0);
        assert!(!c.seasonal);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let y: Vec<f64> = (0..120)
            .map(|t| {
                let e: f64 = StandardNormal.sample(&mut rng);
                10.0 * pattern(t) + e
            })
            .collect();
        let s = is_seasonal(&monthly(y)).unwrap();
        assert!(s.seasonal);
        assert!(s.f_statistic > 10.0 * s.critical_value_1pct);
    }
}
