use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use irb_core::asrf::basel_correlation;
use irb_core::data_io::{estimate_model, load_panel, synthesize_panel, RatePanel, RunConfig, SynthesisTargets};
use irb_core::mc::{correct_capital_detailed, loss_histogram};
use irb_core::presets::ParameterSet;
use irb_core::stats::{describe, linear_fit, pearson, qq_points, royston_bivariate, shapiro_wilk, QqScale, SampleSeries};
use irb_core::{
    infer_k_hat, naive_capital, scenario_addon, Error, Granularity, PointEstimates, Result, RhoMode, Scenario,
    SimulationConfig, UncertaintyModel, BASEL_ALPHA,
};
use sha2::{Digest, Sha256};

use crate::report::{
    hex, AddOnRow, AddOnTable, CorrectSection, CorrelationSection, DescriptiveRow, Metadata, ModelSection,
    NaiveSection, NormalityRow, Report,
};
use crate::{GlobalArgs, OutputFormat};

/// Explicit parameter moments; when given they replace the panel or the
/// reference presets.
#[derive(Debug, Clone, Default, Args)]
pub struct MomentOverrides {
    /// Mean PD.
    #[arg(long)]
    pub pd_hat: Option<f64>,
    /// Mean LGD.
    #[arg(long)]
    pub lgd_hat: Option<f64>,
    /// Standard deviation of the default point Φ⁻¹(PD).
    #[arg(long)]
    pub sigma_k: Option<f64>,
    #[arg(long)]
    pub sigma_lgd: Option<f64>,
    /// Correlation between LGD and the default point.
    #[arg(long)]
    pub rho_lgd_k: Option<f64>,
}

impl MomentOverrides {
    fn any(&self) -> bool {
        self.pd_hat.is_some()
            || self.lgd_hat.is_some()
            || self.sigma_k.is_some()
            || self.sigma_lgd.is_some()
            || self.rho_lgd_k.is_some()
    }
}

pub struct Context {
    pub config: RunConfig,
    format: OutputFormat,
    threads: Option<usize>,
    input_digest: Option<String>,
    panel: Option<RatePanel>,
}

fn io_error(path: &Path, err: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(err.kind(), format!("{}: {err}", path.display())))
}

impl Context {
    pub fn from_args(args: &GlobalArgs) -> Result<Self> {
        let mut config = match &args.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(alpha) = args.alpha {
            config.set("alpha", &alpha.to_string())?;
        }
        if let Some(n) = args.nsim {
            config.n_sim = n;
        }
        if let Some(seed) = args.seed {
            config.seed = seed;
        }
        if let Some(grade) = args.grade {
            config.grade = grade;
        }
        if let Some(granularity) = args.obligors {
            config.granularity = granularity;
        }
        if let Some(mode) = args.rho_mode {
            config.rho_mode = mode;
        }
        if args.clamp_lgd {
            config.lgd_clamp = true;
        }
        if let Some(list) = &args.scenarios {
            config.set("scenarios", list)?;
        }
        if let Some(method) = args.k_hat_method {
            config.k_hat_method = method;
        }
        if let Some(input) = &args.input {
            config.input = Some(input.display().to_string());
        }
        if let Some(out) = &args.out {
            config.output = Some(out.display().to_string());
        }
        if args.threads == Some(0) {
            return Err(Error::Config("--threads must be at least 1".into()));
        }

        let (panel, input_digest) = match &config.input {
            Some(path) => {
                let path = PathBuf::from(path);
                let bytes = fs::read(&path).map_err(|e| io_error(&path, e))?;
                let digest = hex(&Sha256::digest(&bytes));
                (Some(load_panel(&path)?), Some(digest))
            }
            None => (None, None),
        };
        Ok(Self { config, format: args.format, threads: args.threads, input_digest, panel })
    }

    fn simulation(&self, rho_mode: RhoMode, alpha: f64) -> SimulationConfig {
        SimulationConfig {
            n_sim: self.config.n_sim,
            seed: self.config.seed,
            alpha,
            granularity: self.config.granularity,
            lgd_clamp: self.config.lgd_clamp,
            rho_mode,
            threads: self.threads,
            ..SimulationConfig::default()
        }
    }

    /// The input panel, or a synthetic one with the reference moments.
    fn panel(&self) -> Result<(RatePanel, String)> {
        match &self.panel {
            Some(panel) => Ok((panel.clone(), panel.source_label.clone())),
            None => {
                let panel = synthesize_panel(&SynthesisTargets::reference(), self.config.seed)?;
                let label = format!("synthetic panel (reference moments, seed {})", self.config.seed);
                Ok((panel, label))
            }
        }
    }

    fn model(&self, overrides: &MomentOverrides) -> Result<(PointEstimates, UncertaintyModel, String)> {
        let grade = self.config.grade;
        if overrides.any() {
            let missing: Vec<&str> = [
                ("--pd-hat", overrides.pd_hat),
                ("--lgd-hat", overrides.lgd_hat),
                ("--sigma-k", overrides.sigma_k),
                ("--sigma-lgd", overrides.sigma_lgd),
                ("--rho-lgd-k", overrides.rho_lgd_k),
            ]
            .iter()
            .filter(|(_, v)| v.is_none())
            .map(|(name, _)| *name)
            .collect();
            if !missing.is_empty() {
                return Err(Error::Config(format!("explicit moments also need {}", missing.join(", "))));
            }
            let pe = PointEstimates::new(overrides.pd_hat.unwrap(), overrides.lgd_hat.unwrap())?;
            let sigma_k = overrides.sigma_k.unwrap();
            let k_hat = infer_k_hat(pe.pd_hat, sigma_k, self.config.k_hat_method)?;
            let model =
                UncertaintyModel::new(k_hat, sigma_k, pe.lgd_hat, overrides.sigma_lgd.unwrap(), overrides.rho_lgd_k.unwrap())?;
            return Ok((pe, model, "explicit moments".into()));
        }
        match &self.panel {
            Some(panel) => {
                let (pe, model) = estimate_model(panel, grade, self.config.k_hat_method)?;
                Ok((pe, model, format!("estimated from {}", panel.source_label)))
            }
            None => {
                let preset = ParameterSet::for_grade(grade);
                Ok((preset.point_estimates(), preset.model(), "reference moments".into()))
            }
        }
    }

    fn new_report(&self, command: &str, data_source: String) -> Report {
        let c = &self.config;
        let mut report = Report::new(Metadata {
            tool: "irb-risk",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            data_source,
            input_sha256: self.input_digest.clone(),
            grade: c.grade.to_string(),
            seed: c.seed,
            n_sim: c.n_sim,
            alpha: c.alpha,
            rho_mode: c.rho_mode.label().into(),
            granularity: match c.granularity {
                Granularity::Asymptotic => "asymptotic".into(),
                Granularity::Finite(n) => n.to_string(),
            },
            lgd_clamp: c.lgd_clamp,
            k_hat_method: format!("{:?}", c.k_hat_method).to_lowercase(),
            rate_units: "fraction",
            report_sha256: String::new(),
            timestamp: timestamp(),
        });
        report.warnings.extend(c.warnings.iter().cloned());
        if let Some(panel) = &self.panel {
            report.warnings.extend(panel.warnings.iter().cloned());
        }
        report
    }

    pub fn emit(&self, mut report: Report) -> Result<()> {
        report.seal();
        write_output(self.config.output.as_deref(), &report.render(self.format))
    }

    fn series(&self, panel: &RatePanel) -> Result<(SampleSeries, SampleSeries, SampleSeries)> {
        Ok((panel.lgd_series()?, panel.pd_series(self.config.grade)?, panel.k_series(self.config.grade)?))
    }

    fn descriptives(&self, panel: &RatePanel) -> Result<Vec<DescriptiveRow>> {
        let (lgd, pd, k) = self.series(panel)?;
        Ok([(&lgd, "fraction"), (&pd, "fraction"), (&k, "default_point")]
            .into_iter()
            .map(|(s, unit)| {
                let d = describe(s);
                DescriptiveRow {
                    variable: s.label().to_string(),
                    unit,
                    n: d.n,
                    min: d.min,
                    max: d.max,
                    mean: d.mean,
                    median: d.median,
                    std: d.std,
                }
            })
            .collect())
    }

    fn normality(&self, panel: &RatePanel) -> Result<Vec<NormalityRow>> {
        let (lgd, _, k) = self.series(panel)?;
        let mut rows = Vec::new();
        for s in [&lgd, &k] {
            let t = shapiro_wilk(s)?;
            rows.push(NormalityRow {
                variable: s.label().into(),
                kind: "univariate",
                n: t.n,
                w: t.w_stat,
                p_value: t.p_value,
                h: None,
                edf: None,
            });
        }
        let t = royston_bivariate(&lgd, &k)?;
        rows.push(NormalityRow {
            variable: format!("composite {}-{}", lgd.label(), k.label()),
            kind: "bivariate_composite",
            n: t.n,
            w: t.w_stat,
            p_value: t.p_value,
            h: t.h_stat,
            edf: t.edf,
        });
        Ok(rows)
    }

    fn correlation(&self, panel: &RatePanel) -> Result<CorrelationSection> {
        let (lgd, _, k) = self.series(panel)?;
        let c = pearson(&lgd, &k)?;
        let fit = linear_fit(&k, &lgd)?;
        Ok(CorrelationSection {
            x: k.label().into(),
            y: lgd.label().into(),
            n: c.n,
            r: c.r,
            ci95_low: c.ci_low,
            ci95_high: c.ci_high,
            p_value: c.p_value,
            slope: fit.slope,
            intercept: fit.intercept,
            r2: fit.r2,
            adj_r2: fit.adj_r2,
        })
    }

    pub fn describe_report(&self) -> Result<Report> {
        let (panel, label) = self.panel()?;
        let mut report = self.new_report("describe", label);
        report.descriptives = Some(self.descriptives(&panel)?);
        Ok(report)
    }

    pub fn normality_report(&self) -> Result<Report> {
        let (panel, label) = self.panel()?;
        let mut report = self.new_report("normality", label);
        report.normality = Some(self.normality(&panel)?);
        Ok(report)
    }

    pub fn correlation_report(&self) -> Result<Report> {
        let (panel, label) = self.panel()?;
        let mut report = self.new_report("correlate", label);
        report.correlation = Some(self.correlation(&panel)?);
        Ok(report)
    }

    fn naive_section(&self, pe: &PointEstimates) -> Result<NaiveSection> {
        let naive = naive_capital(pe, self.config.alpha)?;
        Ok(NaiveSection {
            pd_hat: pe.pd_hat,
            lgd_hat: pe.lgd_hat,
            asset_correlation: basel_correlation(pe.pd_hat)?,
            alpha: self.config.alpha,
            var: naive.var,
            expected_loss: naive.expected_loss,
            rc: naive.rc,
        })
    }

    fn model_section(pe: &PointEstimates, model: &UncertaintyModel, source: String) -> ModelSection {
        ModelSection {
            source,
            pd_hat: pe.pd_hat,
            lgd_hat: pe.lgd_hat,
            k_hat: model.k_hat,
            sigma_k: model.sigma_k,
            sigma_lgd: model.sigma_lgd,
            rho_lgd_k: model.rho_lgd_k,
        }
    }

    pub fn naive_report(&self, overrides: &MomentOverrides) -> Result<Report> {
        let (pe, model, source) = self.model(overrides)?;
        let mut report = self.new_report("naive", source.clone());
        report.model = Some(Self::model_section(&pe, &model, source));
        report.naive_capital = Some(self.naive_section(&pe)?);
        Ok(report)
    }

    fn add_on_table(&self, pe: &PointEstimates, model: &UncertaintyModel, rho_mode: RhoMode, alpha: f64) -> Result<AddOnTable> {
        let config = self.simulation(rho_mode, alpha);
        let naive = naive_capital(pe, alpha)?;
        let mut rows = Vec::new();
        for &scenario in &self.config.scenarios {
            let r = scenario_addon(model, pe, &config, scenario)?;
            rows.push(AddOnRow {
                scenario: scenario_key(scenario).into(),
                label: scenario.label(),
                add_on: r.add_on,
                add_on_std_error: r.add_on_std_error.unwrap_or(f64::NAN),
                rc_correct: r.rc_correct,
                el_correct: r.el_correct,
                excess_el: r.excess_el,
            });
        }
        Ok(AddOnTable { rho_mode: rho_mode.label().into(), alpha, rc_naive: naive.rc, el_naive: naive.expected_loss, rows })
    }

    /// Configured alpha first; the Basel level is added alongside when it differs.
    fn alphas(&self) -> Vec<f64> {
        let mut alphas = vec![self.config.alpha];
        if self.config.alpha != BASEL_ALPHA {
            alphas.push(BASEL_ALPHA);
        }
        alphas
    }

    fn rho_modes(&self, both: bool) -> Vec<RhoMode> {
        let first = self.config.rho_mode;
        let mut modes = vec![first];
        if both {
            modes.push(match first {
                RhoMode::OfRealizedPd => RhoMode::OfMeanPd,
                RhoMode::OfMeanPd => RhoMode::OfRealizedPd,
            });
        }
        modes
    }

    fn add_on_tables(&self, pe: &PointEstimates, model: &UncertaintyModel, both_modes: bool) -> Result<Vec<AddOnTable>> {
        let mut tables = Vec::new();
        for mode in self.rho_modes(both_modes) {
            for alpha in self.alphas() {
                tables.push(self.add_on_table(pe, model, mode, alpha)?);
            }
        }
        Ok(tables)
    }

    fn correct_sections(&self, pe: &PointEstimates, model: &UncertaintyModel, tables: &[AddOnTable], both: bool) -> Result<Vec<CorrectSection>> {
        let mut sections = Vec::new();
        for mode in self.rho_modes(both) {
            let alpha = self.config.alpha;
            let label = mode.label();
            // reuse the full-model row when the table already holds it
            let from_table = tables
                .iter()
                .find(|t| t.rho_mode == label && t.alpha == alpha)
                .and_then(|t| t.rows.iter().find(|r| r.scenario == "correlated").map(|r| (t, r)));
            let section = match from_table {
                Some((t, r)) => CorrectSection {
                    rho_mode: label.into(),
                    alpha,
                    rc_naive: t.rc_naive,
                    rc_correct: r.rc_correct,
                    rc_std_error: r.add_on_std_error * t.rc_naive,
                    el_naive: t.el_naive,
                    el_correct: r.el_correct,
                    excess_el: r.excess_el,
                    add_on: r.add_on,
                },
                None => {
                    let naive = naive_capital(pe, alpha)?;
                    let r = scenario_addon(model, pe, &self.simulation(mode, alpha), Scenario::Correlated)?;
                    CorrectSection {
                        rho_mode: label.into(),
                        alpha,
                        rc_naive: naive.rc,
                        rc_correct: r.rc_correct,
                        rc_std_error: r.add_on_std_error.unwrap_or(f64::NAN) * naive.rc,
                        el_naive: naive.expected_loss,
                        el_correct: r.el_correct,
                        excess_el: r.excess_el,
                        add_on: r.add_on,
                    }
                }
            };
            sections.push(section);
        }
        Ok(sections)
    }

    pub fn capital_report(&self, overrides: &MomentOverrides, both_modes: bool) -> Result<Report> {
        let (pe, model, source) = self.model(overrides)?;
        let mut report = self.new_report("capital", source.clone());
        report.model = Some(Self::model_section(&pe, &model, source));
        report.naive_capital = Some(self.naive_section(&pe)?);
        let tables = self.add_on_tables(&pe, &model, both_modes)?;
        report.correct_capital = Some(self.correct_sections(&pe, &model, &tables, both_modes)?);
        report.add_on_tables = Some(tables);
        Ok(report)
    }

    pub fn addon_report(&self, overrides: &MomentOverrides) -> Result<Report> {
        let (pe, model, source) = self.model(overrides)?;
        let mut report = self.new_report("addon", source.clone());
        report.model = Some(Self::model_section(&pe, &model, source));
        report.add_on_tables = Some(self.add_on_tables(&pe, &model, false)?);
        Ok(report)
    }

    pub fn full_report(&self, overrides: &MomentOverrides) -> Result<Report> {
        let (panel, panel_label) = self.panel()?;
        let (pe, model, source) = self.model(overrides)?;
        let mut report = self.new_report("report", panel_label);
        report.descriptives = Some(self.descriptives(&panel)?);
        report.normality = Some(self.normality(&panel)?);
        report.correlation = Some(self.correlation(&panel)?);
        report.model = Some(Self::model_section(&pe, &model, source));
        report.naive_capital = Some(self.naive_section(&pe)?);
        let tables = self.add_on_tables(&pe, &model, true)?;
        report.correct_capital = Some(self.correct_sections(&pe, &model, &tables, true)?);
        report.add_on_tables = Some(tables);
        Ok(report)
    }

    /// Q-Q points for LGD and k of the selected grade, one row per point.
    pub fn write_qq(&self, standardized: bool) -> Result<()> {
        let (panel, _) = self.panel()?;
        let (lgd, _, k) = self.series(&panel)?;
        let scale = if standardized { QqScale::Standardized } else { QqScale::Raw };
        let mut writer = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        writer.write_record(["variable", "index", "theoretical", "sample"]).map_err(csv_err)?;
        for series in [&lgd, &k] {
            for (i, (t, s)) in qq_points(series.values(), scale).into_iter().enumerate() {
                writer
                    .write_record([series.label().to_string(), (i + 1).to_string(), t.to_string(), s.to_string()])
                    .map_err(csv_err)?;
            }
        }
        let bytes = writer.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        write_output(self.config.output.as_deref(), &String::from_utf8_lossy(&bytes))
    }

    /// Histogram of the full-model loss sample, written as `bin_left,bin_right,count`.
    pub fn write_histogram(&self, overrides: &MomentOverrides, path: &Path, bins: usize) -> Result<()> {
        let (_, model, _) = self.model(overrides)?;
        let config = SimulationConfig { max_stored_losses: usize::MAX, ..self.simulation(self.config.rho_mode, self.config.alpha) };
        let (_, summary) = correct_capital_detailed(&model, &config)?;
        let histogram = loss_histogram(&summary, bins)?;
        let mut out = String::from("bin_left,bin_right,count\n");
        for bin in histogram {
            out.push_str(&format!("{},{},{}\n", bin.left, bin.right, bin.count));
        }
        fs::write(path, out).map_err(|e| io_error(path, e))
    }
}

fn write_output(path: Option<&str>, text: &str) -> Result<()> {
    match path {
        Some(path) => fs::write(path, text).map_err(|e| io_error(Path::new(path), e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

/// RFC 3339 UTC; `SOURCE_DATE_EPOCH` pins it for reproducible output.
fn timestamp() -> String {
    use chrono::{DateTime, SecondsFormat, Utc};
    let now = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse::<i64>().ok())
        .and_then(|secs| DateTime::<Utc>::from_timestamp(secs, 0))
        .unwrap_or_else(Utc::now);
    now.to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn scenario_key(scenario: Scenario) -> &'static str {
    match scenario {
        Scenario::LgdOnly => "lgd_only",
        Scenario::KOnly => "k_only",
        Scenario::Independent => "independent",
        Scenario::Correlated => "correlated",
    }
}
