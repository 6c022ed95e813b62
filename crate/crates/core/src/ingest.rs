//! FRED-format CSV input and dataset assembly.

use std::fmt;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seasonal::{x11_adjust, SeasonalMode};
use crate::series::{align, log_transform, weekly_to_monthly_mean, Frequency, Panel, SampleWindow, TimeSeries, YearMonth};

/// Reads a two-column FRED download.
///
/// The header's first cell must be `DATE` (or `observation_date`, as in
/// newer downloads); the second names the value column and becomes the
/// series name unless it is just `VALUE`.
pub fn read_fred_csv(path: &Path) -> Result<TimeSeries> {
    let text = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_fred_csv(&text, &path.display().to_string())
}

/// [`read_fred_csv`] on in-memory bytes; `label` names the source in errors.
pub fn parse_fred_csv(bytes: &[u8], label: &str) -> Result<TimeSeries> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: label.to_string(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let first = header.get(0).unwrap_or_default().trim_start_matches('\u{feff}');
    if header.len() != 2
        || !(first.eq_ignore_ascii_case("date") || first.eq_ignore_ascii_case("observation_date"))
    {
        return Err(parse_err(1, format!("expected header DATE,VALUE, found `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let name = match header.get(1).unwrap_or_default() {
        v if v.eq_ignore_ascii_case("value") || v.is_empty() => "VALUE".to_string(),
        v => v.to_string(),
    };
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 2 {
            return Err(parse_err(line, format!("expected 2 fields, found {}", record.len())));
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|_| parse_err(line, format!("bad date `{}`", &record[0])))?;
        let raw = &record[1];
        if raw == "." {
            return Err(Error::MissingValue {
                path: label.to_string(),
                date: date.to_string(),
            });
        }
        let v: f64 = raw
            .parse()
            .map_err(|_| parse_err(line, format!("bad value `{raw}`")))?;
        if !v.is_finite() {
            return Err(parse_err(line, format!("non-finite value `{raw}`")));
        }
        dates.push(date);
        values.push(v);
    }
    let frequency = infer_frequency(&dates, label)?;
    TimeSeries::new(name, frequency, dates[0], values)
}

/// Median gap of 6–8 days is weekly, 28–31 monthly; every gap must then agree.
fn infer_frequency(dates: &[NaiveDate], label: &str) -> Result<Frequency> {
    if dates.len() < 2 {
        return Err(Error::Frequency(format!(
            "{label}: at least two observations are needed to infer the frequency"
        )));
    }
    let mut gaps: Vec<i64> = dates.windows(2).map(|w| (w[1] - w[0]).num_days()).collect();
    let consecutive_months = dates.windows(2).all(|w| {
        YearMonth::of_date(w[0]).months_until(YearMonth::of_date(w[1])) == 1
    });
    let weekly_steps = gaps.iter().all(|&g| g == 7);
    gaps.sort_unstable();
    let median = gaps[gaps.len() / 2];
    let freq = match median {
        6..=8 => Frequency::Weekly,
        28..=31 => Frequency::Monthly,
        _ => {
            return Err(Error::Frequency(format!(
                "{label}: median spacing of {median} days is neither weekly nor monthly"
            )))
        }
    };
    let consistent = match freq {
        Frequency::Weekly => weekly_steps,
        Frequency::Monthly => consecutive_months,
    };
    if !consistent {
        return Err(Error::Frequency(format!(
            "{label}: inconsistent {} spacing",
            if freq == Frequency::Weekly { "weekly" } else { "monthly" }
        )));
    }
    Ok(freq)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    E,
    A,
    P,
    Y,
    R,
}

impl Role {
    pub const ALL: [Role; 5] = [Role::E, Role::A, Role::P, Role::Y, Role::R];
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesTransform {
    Log,
    Level,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSpec {
    pub role: Role,
    /// Relative to the dataset's data directory.
    pub file: PathBuf,
    pub frequency: Frequency,
    pub seasonally_adjusted: bool,
    pub transform: SeriesTransform,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub label: String,
    /// Relative to the config file.
    pub data_dir: PathBuf,
    pub window: SampleWindow,
    #[serde(default)]
    pub seasonal_mode: SeasonalMode,
    pub series: Vec<SeriesSpec>,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        self.window.validate().map_err(|e| Error::Config(e.to_string()))?;
        let mut roles: Vec<Role> = self.series.iter().map(|s| s.role).collect();
        roles.sort();
        if let Some(w) = roles.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("role {} appears more than once", w[0])));
        }
        if roles != Role::ALL {
            return Err(Error::Config(format!(
                "dataset needs exactly the roles E, A, P, Y, R; found {roles:?}"
            )));
        }
        for s in &self.series {
            if s.transform == SeriesTransform::Level && s.role != Role::R {
                log::warn!("series {} is kept in levels; only R is expected in levels", s.role);
            }
        }
        Ok(())
    }

    /// Specs in panel order E, A, P, Y, R.
    fn ordered(&self) -> Vec<&SeriesSpec> {
        let mut v: Vec<&SeriesSpec> = self.series.iter().collect();
        v.sort_by_key(|s| s.role);
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Members named by role, ordered E, A, P, Y, R.
    pub panel: Panel,
    /// One line per transformation step, in the order applied.
    pub log: Vec<String>,
}

/// Read, aggregate, deseasonalize, log and align every series.
pub fn build_dataset(spec: &DatasetSpec, base_dir: &Path) -> Result<Dataset> {
    spec.validate()?;
    let dir = base_dir.join(&spec.data_dir);
    let prepared = spec
        .ordered()
        .par_iter()
        .map(|s| {
            prepare(s, &dir, spec.seasonal_mode).map_err(|e| Error::Series {
                role: s.role.to_string(),
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut log = Vec::new();
    let mut series = Vec::with_capacity(prepared.len());
    for (s, mut steps) in prepared {
        log.append(&mut steps);
        series.push(s);
    }
    let panel = align(&series, &spec.window)?;
    for s in panel.series() {
        log.push(format!(
            "{}: align {}..{} ({} obs, estimation from {})",
            s.name(),
            spec.window.presample_start,
            spec.window.estimation_end,
            s.len(),
            spec.window.estimation_start
        ));
    }
    Ok(Dataset { panel, log })
}

fn prepare(spec: &SeriesSpec, dir: &Path, mode: SeasonalMode) -> Result<(TimeSeries, Vec<String>)> {
    let role = spec.role.to_string();
    let path = dir.join(&spec.file);
    let raw = read_fred_csv(&path)?;
    let mut log = vec![format!(
        "{role}: read {} ({:?}, {} obs from {})",
        spec.file.display(),
        raw.frequency(),
        raw.len(),
        raw.start_date()
    )];
    if raw.frequency() != spec.frequency {
        return Err(Error::Frequency(format!(
            "{} is {:?} but the spec says {:?}",
            path.display(),
            raw.frequency(),
            spec.frequency
        )));
    }
    let mut s = raw.with_name(role.clone());
    if s.frequency() == Frequency::Weekly {
        s = weekly_to_monthly_mean(&s)?;
        log.push(format!("{role}: aggregate weekly to monthly mean ({} months)", s.len()));
    }
    if !spec.seasonally_adjusted {
        s = x11_adjust(&s, mode)?.adjusted.with_name(role.clone());
        log.push(format!("{role}: deseasonalize ({mode:?} X-11)"));
    }
    if spec.transform == SeriesTransform::Log {
        s = log_transform(&s)?.with_name(role.clone());
        log.push(format!("{role}: log"));
    }
    Ok((s, log))
}

/// Writes a series in the FRED layout read by [`read_fred_csv`].
pub fn write_fred_csv(s: &TimeSeries, path: &Path) -> Result<()> {
    let mut out = format!("DATE,{}\n", s.name());
    for (i, v) in s.values().iter().enumerate() {
        out.push_str(&format!("{},{v}\n", s.date_at(i)));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
