//! Dated, equally spaced series and the panel transformations shared by every
//! estimator: logs, differences, frequency conversion, window alignment and
//! lag matrices.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, Days, NaiveDate};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A calendar month, the atomic period of every monthly series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    pub year: i32,
    /// 1..=12
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidArgument(format!("month {month} out of range")));
        }
        Ok(Self { year, month })
    }

    /// Months since year 0, January.
    pub fn index(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    pub fn from_index(idx: i64) -> Self {
        Self {
            year: idx.div_euclid(12) as i32,
            month: (idx.rem_euclid(12) + 1) as u32,
        }
    }

    pub fn offset(self, months: i64) -> Self {
        Self::from_index(self.index() + months)
    }

    /// Number of months from `self` to `other` (`other - self`).
    pub fn months_until(self, other: YearMonth) -> i64 {
        other.index() - self.index()
    }

    pub fn of_date(date: NaiveDate) -> Self {
        Self {
            year: date.year(),
            month: date.month(),
        }
    }

    pub fn first_day(self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("valid month")
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}M{}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    /// Accepts `2003M7`, `2003m07` and `2003-07`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("cannot parse year-month `{s}`"));
        let s = s.trim();
        let (y, m) = s
            .split_once(['M', 'm'])
            .or_else(|| s.split_once('-'))
            .ok_or_else(bad)?;
        let year = y.parse().map_err(|_| bad())?;
        let month = m.parse().map_err(|_| bad())?;
        YearMonth::new(year, month)
    }
}

impl Serialize for YearMonth {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for YearMonth {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Weekly,
    Monthly,
}

/// A named, gap-free sequence of finite observations.
///
/// Observation `i` is dated `start + i` periods. For monthly series `start`
/// is the first day of the first month; for weekly series it is the
/// published (week-ending) date of the first observation.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    name: String,
    frequency: Frequency,
    start: NaiveDate,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(
        name: impl Into<String>,
        frequency: Frequency,
        start: NaiveDate,
        values: Vec<f64>,
    ) -> Result<Self> {
        let name = name.into();
        if values.is_empty() {
            return Err(Error::InsufficientData(format!("series `{name}` is empty")));
        }
        let start = match frequency {
            Frequency::Monthly => YearMonth::of_date(start).first_day(),
            Frequency::Weekly => start,
        };
        let s = Self {
            name,
            frequency,
            start,
            values,
        };
        if let Some(i) = s.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "series `{}` has non-finite value at {}",
                s.name,
                s.label_at(i)
            )));
        }
        Ok(s)
    }

    pub fn monthly(name: impl Into<String>, start: YearMonth, values: Vec<f64>) -> Result<Self> {
        Self::new(name, Frequency::Monthly, start.first_day(), values)
    }

    pub fn weekly(name: impl Into<String>, start: NaiveDate, values: Vec<f64>) -> Result<Self> {
        Self::new(name, Frequency::Weekly, start, values)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start
    }

    pub fn start_month(&self) -> YearMonth {
        YearMonth::of_date(self.start)
    }

    pub fn end_month(&self) -> YearMonth {
        YearMonth::of_date(self.date_at(self.len() - 1))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn date_at(&self, i: usize) -> NaiveDate {
        match self.frequency {
            Frequency::Monthly => self.start_month().offset(i as i64).first_day(),
            Frequency::Weekly => self
                .start
                .checked_add_days(Days::new(7 * i as u64))
                .expect("date in range"),
        }
    }

    /// Human label of observation `i`: `2010M4` for monthly, ISO date for weekly.
    pub fn label_at(&self, i: usize) -> String {
        match self.frequency {
            Frequency::Monthly => self.start_month().offset(i as i64).to_string(),
            Frequency::Weekly => self.date_at(i).to_string(),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Same metadata, new values; the start is advanced by `shift` periods.
    pub(crate) fn derived(&self, shift: usize, values: Vec<f64>) -> Result<Self> {
        let start = self.date_at(shift);
        Self::new(self.name.clone(), self.frequency, start, values)
    }

    /// Contiguous sub-series `[from, from + len)`.
    pub fn slice(&self, from: usize, len: usize) -> Result<Self> {
        if from + len > self.len() || len == 0 {
            return Err(Error::InsufficientData(format!(
                "slice {from}..{} of `{}` with length {}",
                from + len,
                self.name,
                self.len()
            )));
        }
        self.derived(from, self.values[from..from + len].to_vec())
    }
}

/// Natural log of every observation.
pub fn log_transform(s: &TimeSeries) -> Result<TimeSeries> {
    if let Some(i) = s.values.iter().position(|&v| v <= 0.0) {
        return Err(Error::Domain {
            date: s.label_at(i),
            value: s.values[i],
        });
    }
    s.derived(0, s.values.iter().map(|v| v.ln()).collect())
}

/// `order`-th difference; the start advances by `order` periods.
pub fn difference(s: &TimeSeries, order: usize) -> Result<TimeSeries> {
    if order == 0 {
        return Err(Error::InvalidArgument("difference order must be positive".into()));
    }
    if s.len() <= order {
        return Err(Error::InsufficientData(format!(
            "cannot take difference of order {order} of `{}` with {} observations",
            s.name,
            s.len()
        )));
    }
    let mut v = s.values.clone();
    for _ in 0..order {
        v = v.windows(2).map(|w| w[1] - w[0]).collect();
    }
    s.derived(order, v)
}

/// Calendar-month means of a weekly series.
///
/// Each weekly observation belongs to the month of its published date.
/// Partial boundary months keep the mean of the weeks they contain.
pub fn weekly_to_monthly_mean(s: &TimeSeries) -> Result<TimeSeries> {
    if s.frequency != Frequency::Weekly {
        return Err(Error::Frequency(format!(
            "`{}` is {:?}, expected weekly",
            s.name, s.frequency
        )));
    }
    let first = YearMonth::of_date(s.start);
    let mut sums: Vec<(f64, usize)> = Vec::new();
    for (i, &v) in s.values.iter().enumerate() {
        let m = first.months_until(YearMonth::of_date(s.date_at(i))) as usize;
        if sums.len() <= m {
            sums.resize(m + 1, (0.0, 0));
        }
        sums[m].0 += v;
        sums[m].1 += 1;
    }
    // weeks are 7 days apart so no interior month can be empty
    debug_assert!(sums.iter().all(|&(_, n)| n > 0));
    let values = sums.iter().map(|&(sum, n)| sum / n as f64).collect();
    TimeSeries::monthly(s.name.clone(), first, values)
}

/// Presample, estimation start and estimation end of a monthly sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleWindow {
    pub presample_start: YearMonth,
    pub estimation_start: YearMonth,
    pub estimation_end: YearMonth,
}

impl SampleWindow {
    pub fn new(
        presample_start: YearMonth,
        estimation_start: YearMonth,
        estimation_end: YearMonth,
    ) -> Result<Self> {
        let w = Self {
            presample_start,
            estimation_start,
            estimation_end,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.presample_start < self.estimation_start
            && self.estimation_start <= self.estimation_end)
        {
            return Err(Error::InvalidArgument(format!(
                "sample window {} / {}..{} is not ordered",
                self.presample_start, self.estimation_start, self.estimation_end
            )));
        }
        Ok(())
    }

    pub fn presample_len(&self) -> usize {
        self.presample_start.months_until(self.estimation_start) as usize
    }

    pub fn estimation_len(&self) -> usize {
        self.estimation_start.months_until(self.estimation_end) as usize + 1
    }

    pub fn total_len(&self) -> usize {
        self.presample_len() + self.estimation_len()
    }
}

/// Monthly series sharing one date range, with an explicit variable order.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    series: Vec<TimeSeries>,
    order: Vec<String>,
}

impl Panel {
    /// Members are stored in `series` order, which is also the default `order`.
    pub fn new(series: Vec<TimeSeries>) -> Result<Self> {
        let order = series.iter().map(|s| s.name.clone()).collect();
        Self::with_order(series, order)
    }

    pub fn with_order(series: Vec<TimeSeries>, order: Vec<String>) -> Result<Self> {
        let first = series
            .first()
            .ok_or_else(|| Error::InvalidArgument("panel needs at least one series".into()))?;
        for s in &series {
            if s.frequency != first.frequency || s.start != first.start || s.len() != first.len()
            {
                return Err(Error::InvalidArgument(format!(
                    "series `{}` does not share the panel's frequency and date range",
                    s.name
                )));
            }
        }
        let mut names: Vec<&str> = series.iter().map(|s| s.name.as_str()).collect();
        let mut ord: Vec<&str> = order.iter().map(String::as_str).collect();
        names.sort_unstable();
        ord.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("duplicate series names in panel".into()));
        }
        if names != ord {
            return Err(Error::InvalidArgument(format!(
                "order {order:?} is not a permutation of the panel's series"
            )));
        }
        Ok(Self { series, order })
    }

    pub fn series(&self) -> &[TimeSeries] {
        &self.series
    }

    pub fn order(&self) -> &[String] {
        &self.order
    }

    pub fn names(&self) -> Vec<String> {
        self.series.iter().map(|s| s.name.clone()).collect()
    }

    pub fn n_vars(&self) -> usize {
        self.series.len()
    }

    pub fn len(&self) -> usize {
        self.series[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn start_month(&self) -> YearMonth {
        self.series[0].start_month()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.series.iter().position(|s| s.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&TimeSeries> {
        self.series.iter().find(|s| s.name == name)
    }

    /// Observations × variables, members in stored order.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.len(), self.n_vars(), |t, j| self.series[j].values[t])
    }

    /// Builds a panel from a T×k matrix, reusing this panel's metadata.
    pub fn from_matrix_like(&self, m: &DMatrix<f64>) -> Result<Panel> {
        let series = self
            .series
            .iter()
            .enumerate()
            .map(|(j, s)| {
                TimeSeries::new(
                    s.name.clone(),
                    s.frequency,
                    s.start,
                    m.column(j).iter().copied().collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Panel::with_order(series, self.order.clone())
    }

    /// Rows `[from, from + len)` of every member.
    pub fn slice(&self, from: usize, len: usize) -> Result<Panel> {
        let series = self
            .series
            .iter()
            .map(|s| s.slice(from, len))
            .collect::<Result<Vec<_>>>()?;
        Panel::with_order(series, self.order.clone())
    }
}

/// Trims monthly series to `[presample_start, estimation_end]`, keeping input order.
pub fn align(series: &[TimeSeries], window: &SampleWindow) -> Result<Panel> {
    window.validate()?;
    let len = window.total_len();
    let trimmed = series
        .iter()
        .map(|s| {
            if s.frequency != Frequency::Monthly {
                return Err(Error::Frequency(format!("`{}` must be monthly to align", s.name)));
            }
            let offset = s.start_month().months_until(window.presample_start);
            if offset < 0 || offset as usize + len > s.len() {
                return Err(Error::Alignment {
                    series: s.name.clone(),
                    from: window.presample_start,
                    to: window.estimation_end,
                });
            }
            s.slice(offset as usize, len)
        })
        .collect::<Result<Vec<_>>>()?;
    Panel::new(trimmed)
}

/// Targets and lagged regressors of a panel.
#[derive(Debug, Clone, PartialEq)]
pub struct LagMatrix {
    /// Rows `lags..T` of the panel.
    pub targets: DMatrix<f64>,
    /// Row `t` holds lag 1 of every variable, then lag 2, up to `lags`.
    pub regressors: DMatrix<f64>,
}

pub fn lag_matrix(p: &Panel, lags: usize) -> Result<LagMatrix> {
    lag_matrix_of(&p.matrix(), lags)
}

pub(crate) fn lag_matrix_of(data: &DMatrix<f64>, lags: usize) -> Result<LagMatrix> {
    let (t, k) = data.shape();
    if lags == 0 {
        return Err(Error::InvalidArgument("lags must be positive".into()));
    }
    if lags >= t {
        return Err(Error::InsufficientData(format!(
            "{lags} lags requested on {t} observations"
        )));
    }
    let rows = t - lags;
    let targets = data.rows(lags, rows).into_owned();
    let regressors = DMatrix::from_fn(rows, k * lags, |r, c| {
        let lag = c / k + 1;
        data[(r + lags - lag, c % k)]
    });
    Ok(LagMatrix {
        targets,
        regressors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ym(y: i32, m: u32) -> YearMonth {
        YearMonth::new(y, m).unwrap()
    }

    #[test]
    fn log_of_ones_and_powers_of_e() {
        let s = TimeSeries::monthly("x", ym(2000, 1), vec![1.0; 4]).unwrap();
        assert!(log_transform(&s).unwrap().values().iter().all(|&v| v == 0.0));
        let e = std::f64::consts::E;
        let s = TimeSeries::monthly("x", ym(2000, 1), vec![e, e * e]).unwrap();
        let l = log_transform(&s).unwrap();
        assert!((l.values()[0] - 1.0).abs() < 1e-15);
        assert!((l.values()[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn log_domain_error_names_date() {
        let s = TimeSeries::monthly("x", ym(2010, 1), vec![1.0, 2.0, 3.0, -3.2]).unwrap();
        match log_transform(&s) {
            Err(Error::Domain { date, value }) => {
                assert_eq!(date, "2010M4");
                assert_eq!(value, -3.2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn differences() {
        let s = TimeSeries::monthly("x", ym(2000, 1), vec![1.0, 3.0, 6.0, 10.0]).unwrap();
        let d = difference(&s, 1).unwrap();
        assert_eq!(d.values(), &[2.0, 3.0, 4.0]);
        assert_eq!(d.start_month(), ym(2000, 2));
        let c = TimeSeries::monthly("x", ym(2000, 1), vec![5.0; 3]).unwrap();
        assert_eq!(difference(&c, 1).unwrap().values(), &[0.0, 0.0]);
        let short = TimeSeries::monthly("x", ym(2000, 1), vec![1.0, 2.0]).unwrap();
        assert!(matches!(difference(&short, 2), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn weekly_means() {
        let d = NaiveDate::from_ymd_opt(2008, 9, 3).unwrap();
        let s = TimeSeries::weekly("A", d, vec![2.0, 4.0, 6.0, 8.0]).unwrap();
        let m = weekly_to_monthly_mean(&s).unwrap();
        assert_eq!(m.values(), &[5.0]);
        assert_eq!(m.start_month(), ym(2008, 9));

        let d = NaiveDate::from_ymd_opt(2008, 9, 17).unwrap();
        let s = TimeSeries::weekly("A", d, vec![2.0, 4.0, 10.0]).unwrap();
        let m = weekly_to_monthly_mean(&s).unwrap();
        assert_eq!(m.values(), &[3.0, 10.0]);

        let monthly = TimeSeries::monthly("A", ym(2008, 9), vec![1.0]).unwrap();
        assert!(matches!(weekly_to_monthly_mean(&monthly), Err(Error::Frequency(_))));
    }

    #[test]
    fn empty_series_rejected() {
        assert!(TimeSeries::monthly("x", ym(2000, 1), vec![]).is_err());
        assert!(TimeSeries::monthly("x", ym(2000, 1), vec![f64::NAN]).is_err());
    }

    #[test]
    fn align_replication_window() {
        let window = SampleWindow::new(ym(2002, 12), ym(2003, 7), ym(2019, 6)).unwrap();
        // 2002M12..2019M6 inclusive: 1 + 16*12 + 6
        let expected_len = 1 + 16 * 12 + 6;
        assert_eq!(window.total_len(), expected_len);
        let series: Vec<_> = ["E", "A", "P", "Y", "R"]
            .iter()
            .map(|n| TimeSeries::monthly(*n, ym(2002, 12), vec![1.0; 199]).unwrap())
            .collect();
        let p = align(&series, &window).unwrap();
        assert_eq!(p.len(), 199);
        assert_eq!(p.names(), vec!["E", "A", "P", "Y", "R"]);

        let late = TimeSeries::monthly("A", ym(2003, 1), vec![1.0; 300]).unwrap();
        match align(&[series[0].clone(), late], &window) {
            Err(Error::Alignment { series, .. }) => assert_eq!(series, "A"),
            other => panic!("unexpected {other:?}"),
        }

        let one = TimeSeries::monthly("x", ym(2000, 1), vec![1.0, 2.0, 3.0]).unwrap();
        let w = SampleWindow::new(ym(2000, 1), ym(2000, 2), ym(2000, 3)).unwrap();
        let p = align(std::slice::from_ref(&one), &w).unwrap();
        assert_eq!(p.series()[0], one);
    }

    #[test]
    fn lag_matrix_shapes() {
        let s = TimeSeries::monthly("x", ym(2000, 1), vec![1.0, 2.0, 3.0]).unwrap();
        let p = Panel::new(vec![s]).unwrap();
        let lm = lag_matrix(&p, 1).unwrap();
        assert_eq!(lm.regressors.as_slice(), &[1.0, 2.0]);
        assert_eq!(lm.targets.as_slice(), &[2.0, 3.0]);

        let a = TimeSeries::monthly("a", ym(2000, 1), (0..10).map(f64::from).collect()).unwrap();
        let b = TimeSeries::monthly("b", ym(2000, 1), (0..10).map(|i| -f64::from(i)).collect())
            .unwrap();
        let p = Panel::new(vec![a, b]).unwrap();
        let lm = lag_matrix(&p, 3).unwrap();
        assert_eq!(lm.regressors.shape(), (7, 6));
        assert!(matches!(lag_matrix(&p, 10), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn panel_order_must_be_permutation() {
        let a = TimeSeries::monthly("a", ym(2000, 1), vec![1.0]).unwrap();
        let b = TimeSeries::monthly("b", ym(2000, 1), vec![1.0]).unwrap();
        assert!(Panel::with_order(vec![a.clone(), b.clone()], vec!["b".into(), "a".into()]).is_ok());
        assert!(Panel::with_order(vec![a, b], vec!["a".into(), "c".into()]).is_err());
    }

    #[test]
    fn year_month_parsing() {
        assert_eq!("2003M7".parse::<YearMonth>().unwrap(), ym(2003, 7));
        assert_eq!("2003-07".parse::<YearMonth>().unwrap(), ym(2003, 7));
        assert!("2003M13".parse::<YearMonth>().is_err());
        assert_eq!(ym(2002, 12).offset(7), ym(2003, 7));
    }

    proptest! {
        #[test]
        fn diff_of_log_is_log_ratio(v in proptest::collection::vec(0.01f64..1e4, 2..40)) {
            let s = TimeSeries::monthly("x", ym(2000, 1), v.clone()).unwrap();
            let d = difference(&log_transform(&s).unwrap(), 1).unwrap();
            for (i, x) in d.values().iter().enumerate() {
                prop_assert!((x - (v[i + 1] / v[i]).ln()).abs() <= 1e-12);
            }
        }

        #[test]
        fn monthly_means_preserve_weekly_total(
            v in proptest::collection::vec(-100.0f64..100.0, 1..120),
            day in 0u64..365,
        ) {
            let start = NaiveDate::from_ymd_opt(2005, 1, 1).unwrap() + Days::new(day);
            let s = TimeSeries::weekly("A", start, v.clone()).unwrap();
            let m = weekly_to_monthly_mean(&s).unwrap();
            let mut counts = vec![0usize; m.len()];
            for i in 0..s.len() {
                let idx = m.start_month().months_until(YearMonth::of_date(s.date_at(i)));
                counts[idx as usize] += 1;
            }
            let total: f64 = m.values().iter().zip(&counts).map(|(x, &c)| x * c as f64).sum();
            let weekly: f64 = v.iter().sum();
            prop_assert!((total - weekly).abs() <= 1e-9 * (1.0 + weekly.abs()));
        }

        #[test]
        fn lag_rows_copy_raw_values(
            v in proptest::collection::vec(-1e6f64..1e6, 8..30),
            lags in 1usize..5,
        ) {
            let a = TimeSeries::monthly("a", ym(2000, 1), v.clone()).unwrap();
            let b = TimeSeries::monthly("b", ym(2000, 1), v.iter().map(|x| x * 0.5).collect()).unwrap();
            let p = Panel::new(vec![a, b]).unwrap();
            let data = p.matrix();
            let lm = lag_matrix(&p, lags).unwrap();
            for r in 0..lm.targets.nrows() {
                for l in 1..=lags {
                    for j in 0..2 {
                        prop_assert_eq!(lm.regressors[(r, (l - 1) * 2 + j)].to_bits(),
                            data[(r + lags - l, j)].to_bits());
                    }
                }
            }
        }

        #[test]
        fn align_copies_values(offset in 0usize..12, len in 2usize..24) {
            let v: Vec<f64> = (0..40).map(|i| (i as f64).sin() * 1e3).collect();
            let s = TimeSeries::monthly("x", ym(2001, 3), v.clone()).unwrap();
            let start = ym(2001, 3).offset(offset as i64);
            let w = SampleWindow::new(start, start.offset(1), start.offset(len as i64 - 1)).unwrap();
            let p = align(&[s], &w).unwrap();
            for (i, x) in p.series()[0].values().iter().enumerate() {
                prop_assert_eq!(x.to_bits(), v[offset + i].to_bits());
            }
        }
    }
}
