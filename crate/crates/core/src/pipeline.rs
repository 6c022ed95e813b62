//! Config-driven run of the whole procedure and report files.
//!
//! Stages run in order: data, unit roots, rank test, VECM, diagnostics,
//! impulse responses. A rank of zero stops the run after the rank test with
//! a [`Verdict::NoCointegration`] report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::cointegration::{johansen_trace, JohansenSpec, TraceTestResult};
use crate::error::{Error, Result};
use crate::ingest::{build_dataset, write_fred_csv, DatasetSpec, Role, SeriesSpec, SeriesTransform};
use crate::seasonal::SeasonalMode;
use crate::series::{SampleWindow, YearMonth};
use crate::simulate::synthetic_dataset;
use crate::irf::{mc_bands, significance_profile, BandMethod, IrfResult, McSpec, Ordering, Sign};
use crate::unit_root::{stationarity_table, AdfSpec, Deterministic, StationarityTable};
use crate::vecm::{
    engle_granger_step1_from, fit_vecm_from, lag_exclusion_test, select_lags, whiteness_report,
    LagExclusion, LagSelection, VecmModel, WhitenessReport,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub dataset: DatasetSpec,
    /// One table panel per entry (drift, drift and trend).
    pub adf: Vec<AdfSpec>,
    pub johansen: JohansenSpec,
    pub vecm: VecmConfig,
    pub irf: IrfConfig,
    pub outputs: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VecmConfig {
    /// Largest lag in differences tried by the BIC.
    pub max_lags: usize,
    /// Overrides the BIC choice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_lags: Option<usize>,
    pub step1_dependent: String,
    #[serde(default = "default_whiteness_lag")]
    pub whiteness_max_lag: usize,
    /// Fit with `max_lags` and test whether the last lag can be dropped.
    #[serde(default = "default_true")]
    pub lag_exclusion: bool,
    /// Extra lag lengths whose responses are reported with the main ordering.
    #[serde(default)]
    pub robustness_lags: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrfConfig {
    pub ordering: Vec<String>,
    #[serde(default)]
    pub alternate_orderings: Vec<Vec<String>>,
    #[serde(default = "default_horizons")]
    pub horizons: usize,
    pub draws: usize,
    pub seed: u64,
    #[serde(default = "default_percentiles")]
    pub percentiles: (f64, f64),
    #[serde(default)]
    pub method: BandMethod,
    /// Responses drawn as figures.
    #[serde(default = "default_tracked")]
    pub tracked_responses: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Relative to the config file.
    pub directory: PathBuf,
    pub formats: Vec<OutputFormat>,
}

fn default_whiteness_lag() -> usize {
    12
}

fn default_true() -> bool {
    true
}

fn default_horizons() -> usize {
    36
}

fn default_percentiles() -> (f64, f64) {
    (0.05, 0.95)
}

fn default_tracked() -> Vec<String> {
    ["P", "Y", "R"].iter().map(|s| s.to_string()).collect()
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the serialized config, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn variables(&self) -> Vec<String> {
        crate::ingest::Role::ALL.iter().map(|r| r.to_string()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        self.dataset.validate()?;
        let vars = self.variables();
        let w = &self.dataset.window;
        if self.adf.is_empty() {
            return cfg("at least one ADF specification is required".into());
        }
        if self.johansen.lags == 0 || self.johansen.lags > w.presample_len() {
            return cfg(format!(
                "Johansen lags {} must be between 1 and the {} presample months",
                self.johansen.lags,
                w.presample_len()
            ));
        }
        let v = &self.vecm;
        let most = v.max_lags.max(v.fixed_lags.unwrap_or(0)).max(v.robustness_lags.iter().copied().max().unwrap_or(0));
        if v.max_lags == 0 {
            return cfg("vecm.max_lags must be at least 1".into());
        }
        if most + 1 > w.presample_len() {
            return cfg(format!(
                "{most} lags in differences need {} presample months, window has {}",
                most + 1,
                w.presample_len()
            ));
        }
        if !vars.contains(&v.step1_dependent) {
            return cfg(format!("unknown step-one dependent `{}`", v.step1_dependent));
        }
        let i = &self.irf;
        if i.draws < 100 {
            return cfg(format!("irf.draws is {}; at least 100 are needed", i.draws));
        }
        let (lo, hi) = i.percentiles;
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return cfg(format!("irf.percentiles {:?} must satisfy 0 < lower < upper < 1", i.percentiles));
        }
        if i.horizons == 0 {
            return cfg("irf.horizons must be at least 1".into());
        }
        for o in std::iter::once(&i.ordering).chain(&i.alternate_orderings) {
            Ordering::new(o.clone(), &vars).map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(bad) = i.tracked_responses.iter().find(|r| !vars.contains(r)) {
            return cfg(format!("unknown tracked response `{bad}`"));
        }
        if self.outputs.formats.is_empty() {
            return cfg("outputs.formats is empty".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Completed,
    /// The rank test selected r = 0; no VECM was estimated.
    NoCointegration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub draws: usize,
    pub version: String,
}

/// Responses for one ordering and lag length.
#[derive(Debug, Clone, PartialEq)]
pub struct IrfRun {
    /// File-name stem, e.g. `EAPYR` or `EAPYR_lags6`.
    pub label: String,
    pub lags_in_differences: usize,
    pub result: IrfResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub label: String,
    pub verdict: Verdict,
    pub dataset_log: Vec<String>,
    pub table1: StationarityTable,
    pub table2: TraceTestResult,
    pub lag_selection: Option<LagSelection>,
    pub model: Option<VecmModel>,
    pub whiteness: Option<WhitenessReport>,
    pub lag_exclusion: Option<LagExclusion>,
    pub irfs: Vec<IrfRun>,
    pub tracked_responses: Vec<String>,
    pub warnings: Vec<String>,
    pub provenance: Provenance,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

/// Runs every stage; `base_dir` resolves the dataset's data directory.
pub fn run_pipeline(config: &PipelineConfig, base_dir: &Path) -> Result<RunReport> {
    config.validate()?;
    let window = config.dataset.window;
    let presample = window.presample_len();
    let dataset = stage("data", build_dataset(&config.dataset, base_dir))?;
    let panel = &dataset.panel;
    log::info!("dataset {}: {} months", config.dataset.label, panel.len());

    let table1 = stage("unit root", stationarity_table(panel, &config.adf, presample))?;

    let lags = config.johansen.lags;
    let johansen_panel = stage(
        "cointegration",
        panel.slice(presample - lags, lags + window.estimation_len()),
    )?;
    let table2 = stage("cointegration", johansen_trace(&johansen_panel, &config.johansen))?;
    let provenance = Provenance {
        config_hash: config.hash(),
        seed: config.irf.seed,
        draws: config.irf.draws,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let mut report = RunReport {
        label: config.dataset.label.clone(),
        verdict: Verdict::NoCointegration,
        dataset_log: dataset.log.clone(),
        table1,
        table2,
        lag_selection: None,
        model: None,
        whiteness: None,
        lag_exclusion: None,
        irfs: Vec::new(),
        tracked_responses: config.irf.tracked_responses.clone(),
        warnings: Vec::new(),
        provenance,
    };
    let rank = report.table2.selected_rank;
    if rank == 0 {
        log::warn!("trace test selected rank 0; stopping before the VECM");
        return Ok(report);
    }
    if rank > 1 {
        report.warnings.push(format!(
            "trace test selected rank {rank}; the VECM is estimated with one cointegrating vector"
        ));
    }

    let v = &config.vecm;
    let ec = stage("vecm", engle_granger_step1_from(panel, &v.step1_dependent, presample))?;
    let selection = stage("vecm", select_lags(panel, &ec, v.max_lags, Some(presample)))?;
    let chosen = v.fixed_lags.unwrap_or(selection.selected);
    let fit = |l: usize| -> Result<VecmModel> {
        let mut m = fit_vecm_from(panel, &ec, l, presample)?;
        m.sample = Some(window);
        Ok(m)
    };
    let model = stage("vecm", fit(chosen))?;

    let whiteness = stage("diagnostics", whiteness_report(&model, v.whiteness_max_lag))?;
    if !whiteness.all_white() {
        report.warnings.push(format!(
            "Ljung-Box rejects white residuals at 5% in equations {:?}",
            whiteness.rejected()
        ));
    }
    if v.lag_exclusion {
        let wide = stage("diagnostics", fit(v.max_lags))?;
        report.lag_exclusion = Some(stage("diagnostics", lag_exclusion_test(&wide, v.max_lags))?);
    }

    let vars = config.variables();
    let spec = McSpec {
        draws: config.irf.draws,
        seed: config.irf.seed,
        percentiles: config.irf.percentiles,
        method: config.irf.method,
    };
    let h = config.irf.horizons;
    let main = Ordering::new(config.irf.ordering.clone(), &vars)?;
    for names in std::iter::once(&config.irf.ordering).chain(&config.irf.alternate_orderings) {
        let ord = Ordering::new(names.clone(), &vars)?;
        let result = stage("irf", mc_bands(&model, &ord, h, &spec))?;
        report.irfs.push(IrfRun {
            label: ord.label(),
            lags_in_differences: chosen,
            result,
        });
    }
    for &l in &v.robustness_lags {
        let m = stage("vecm", fit(l))?;
        let result = stage("irf", mc_bands(&m, &main, h, &spec))?;
        report.irfs.push(IrfRun {
            label: format!("{}_lags{l}", main.label()),
            lags_in_differences: l,
            result,
        });
    }
    for w in &report.warnings {
        log::warn!("{w}");
    }
    report.verdict = Verdict::Completed;
    report.lag_selection = Some(selection);
    report.whiteness = Some(whiteness);
    report.model = Some(model);
    Ok(report)
}

fn write(path: PathBuf, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes one IRF run: the long CSV and one SVG per (shock, tracked response).
pub fn write_irf(
    result: &IrfResult,
    dir: &Path,
    stem: &str,
    formats: &[OutputFormat],
    tracked: &[String],
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if formats.contains(&OutputFormat::Csv) {
        write(dir.join(format!("{stem}.csv")), &result.to_csv(), &mut written)?;
    }
    if formats.contains(&OutputFormat::Svg) {
        for shock in result.ordering.names() {
            for response in tracked {
                let svg = result.to_svg(shock, response)?;
                write(dir.join(format!("{stem}_{shock}_to_{response}.svg")), &svg, &mut written)?;
            }
        }
    }
    Ok(written)
}

/// Writes every report file into `dir`, named from the report label.
pub fn emit_reports(report: &RunReport, dir: &Path, formats: &[OutputFormat]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let label = &report.label;
    let mut written = Vec::new();
    if formats.contains(&OutputFormat::Csv) {
        write(dir.join(format!("{label}_table1.csv")), &report.table1.to_csv(), &mut written)?;
        write(dir.join(format!("{label}_table2.csv")), &report.table2.to_csv(), &mut written)?;
    }
    write(dir.join(format!("{label}_summary.txt")), &summary(report), &mut written)?;
    if let Some(m) = &report.model {
        write(dir.join(format!("{label}_model.txt")), &m.to_text(), &mut written)?;
    }
    for run in &report.irfs {
        let stem = format!("{label}_irf_{}", run.label);
        written.extend(write_irf(&run.result, dir, &stem, formats, &report.tracked_responses)?);
    }
    Ok(written)
}

fn profile_text(p: &[(usize, Sign)]) -> String {
    if p.is_empty() {
        return "none".into();
    }
    p.iter()
        .map(|(h, s)| format!("{}{h}", if *s == Sign::Positive { '+' } else { '-' }))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Plain-text account of the run.
pub fn summary(r: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "run {}", r.label);
    let _ = writeln!(s, "config sha256 {}", r.provenance.config_hash);
    let _ = writeln!(
        s,
        "seed {}  draws {}  version {}",
        r.provenance.seed, r.provenance.draws, r.provenance.version
    );
    let _ = writeln!(
        s,
        "verdict {}",
        match r.verdict {
            Verdict::Completed => "completed",
            Verdict::NoCointegration => "no cointegration (rank 0), VECM not estimated",
        }
    );
    s.push_str("\n[data]\n");
    for l in &r.dataset_log {
        let _ = writeln!(s, "{l}");
    }
    s.push_str("\n[unit roots]\n");
    s.push_str(&r.table1.to_csv());
    s.push_str("\n[rank test]\n");
    let _ = writeln!(
        s,
        "{} lags, {:?}, effective sample {}, selected rank {}",
        r.table2.spec.lags, r.table2.spec.deterministic, r.table2.n_effective, r.table2.selected_rank
    );
    s.push_str(&r.table2.to_csv());
    if let Some(sel) = &r.lag_selection {
        s.push_str("\n[lag selection]\n");
        for (l, b) in &sel.scores {
            let _ = writeln!(s, "{l} lags  BIC {b:.6}");
        }
        let _ = writeln!(s, "BIC choice {}", sel.selected);
    }
    if let Some(m) = &r.model {
        s.push_str("\n[model]\n");
        s.push_str(&m.summary());
    }
    if let Some(w) = &r.whiteness {
        s.push_str("\n[residual whiteness]\n");
        for (name, lb) in &w.equations {
            let _ = writeln!(s, "{name}  Q({}) {:.4}  p {:.4}", lb.max_lag, lb.q(), lb.p_value());
        }
    }
    if let Some(x) = &r.lag_exclusion {
        let _ = writeln!(s, "\n[exclusion of lag {}]", x.lag);
        for (name, f) in &x.equations {
            let _ = writeln!(
                s,
                "{name}  F({}, {}) {:.4}  p {:.4}",
                f.df_num, f.df_den, f.f_statistic, f.p_value
            );
        }
        let _ = writeln!(
            s,
            "system LR chi2({}) {:.4}  p {:.4}",
            x.lr_df, x.lr_statistic, x.lr_p_value
        );
    }
    for run in &r.irfs {
        let ord = run.result.ordering.names();
        let _ = writeln!(
            s,
            "\n[responses {}: ordering {}, {} lags, {} rejected draws]",
            run.label,
            ord.join(","),
            run.lags_in_differences,
            run.result.rejected_draws
        );
        let shock = &ord[0];
        for resp in &r.tracked_responses {
            let p = significance_profile(&run.result, shock, resp).map(|p| profile_text(&p));
            let _ = writeln!(s, "{shock} -> {resp}: {}", p.unwrap_or_else(|e| e.to_string()));
        }
    }
    if !r.warnings.is_empty() {
        s.push_str("\n[warnings]\n");
        for w in &r.warnings {
            let _ = writeln!(s, "{w}");
        }
    }
    s
}

/// Writes synthetic raw files into `dir` and returns a config that reads them.
///
/// The window and design mirror the short replication sample with lighter
/// settings (2 rank-test lags, 3 VECM lags, 12 horizons, 100 draws).
pub fn synthetic_config(dir: &Path, cointegrated: bool, seed: u64) -> Result<PipelineConfig> {
    let start = YearMonth::new(2002, 12)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = synthetic_dataset(start, 199, cointegrated, &mut rng)?;
    let mut series = Vec::new();
    for (name, s) in &data.series {
        let file = PathBuf::from(format!("{name}.csv"));
        write_fred_csv(s, &dir.join(&file))?;
        let role = Role::ALL
            .into_iter()
            .find(|r| r.to_string() == *name)
            .expect("synthetic names are roles");
        series.push(SeriesSpec {
            role,
            file,
            frequency: s.frequency(),
            seasonally_adjusted: role != Role::A,
            transform: if role == Role::R { SeriesTransform::Level } else { SeriesTransform::Log },
            description: String::new(),
        });
    }
    let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    Ok(PipelineConfig {
        dataset: DatasetSpec {
            label: "synthetic".into(),
            data_dir: PathBuf::from("."),
            window: SampleWindow::new(start, start.offset(7), start.offset(198))?,
            seasonal_mode: SeasonalMode::Multiplicative,
            series,
        },
        adf: vec![
            AdfSpec::bic(Deterministic::Drift, 6),
            AdfSpec::bic(Deterministic::DriftAndTrend, 6),
        ],
        johansen: JohansenSpec::new(2),
        vecm: VecmConfig {
            max_lags: 3,
            fixed_lags: None,
            step1_dependent: "E".into(),
            whiteness_max_lag: 12,
            lag_exclusion: true,
            robustness_lags: vec![2],
        },
        irf: IrfConfig {
            ordering: names(&["E", "A", "P", "Y", "R"]),
            alternate_orderings: vec![names(&["E", "A", "Y", "P", "R"])],
            horizons: 12,
            draws: 100,
            seed: 7,
            percentiles: (0.05, 0.95),
            method: BandMethod::Parametric,
            tracked_responses: names(&["P", "Y", "R"]),
        },
        outputs: OutputConfig {
            directory: PathBuf::from("out"),
            formats: vec![OutputFormat::Csv, OutputFormat::Svg],
        },
    })
}
