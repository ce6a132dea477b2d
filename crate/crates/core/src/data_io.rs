//! Annual rate panels (CSV), synthetic fixtures and run configuration files.
//!
//! Panel schema, UTF-8 with a header row:
//!
//! ```text
//! year,lgd_rate,pd_all_ratings,pd_speculative
//! 1983,0.5512,0.0378,0.0414
//! ```
//!
//! Rates are decimals, or percents when suffixed with `%`. A PD field may be
//! left empty (or its column omitted) when that grade is not analysed.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::asrf::PointEstimates;
use crate::error::{Error, Result};
use crate::mc::{Granularity, RhoMode, Scenario};
use crate::numeric::norm_cdf;
use crate::stats::{describe, pearson, probit_transform, SampleSeries};
use crate::uncertainty::{infer_k_hat, KHatMethod, UncertaintyModel};

/// Rating universe whose default rates feed PD.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grade {
    AllRatings,
    Speculative,
}

impl FromStr for Grade {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ar" | "all" | "all_ratings" => Ok(Self::AllRatings),
            "sg" | "spec" | "speculative" => Ok(Self::Speculative),
            other => Err(Error::Config(format!("unknown grade '{other}' (expected ar|sg)"))),
        }
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::AllRatings => "AR",
            Self::Speculative => "SG",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelRow {
    pub year: i32,
    pub lgd_rate: f64,
    pub pd_all_ratings: Option<f64>,
    pub pd_speculative: Option<f64>,
}

impl PanelRow {
    pub fn pd(&self, grade: Grade) -> Option<f64> {
        match grade {
            Grade::AllRatings => self.pd_all_ratings,
            Grade::Speculative => self.pd_speculative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePanel {
    pub rows: Vec<PanelRow>,
    pub source_label: String,
    /// Non-fatal findings: year gaps, speculative PD below all-ratings PD.
    #[serde(default)]
    pub warnings: Vec<String>,
}

pub const PANEL_HEADER: [&str; 4] = ["year", "lgd_rate", "pd_all_ratings", "pd_speculative"];

impl RatePanel {
    /// Checks bounds and year ordering, collecting warnings.
    pub fn validate(rows: Vec<PanelRow>, source_label: impl Into<String>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Validation(vec!["panel has no data rows".into()]));
        }
        let mut problems = Vec::new();
        let mut warnings = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            let check = |name: &str, v: f64, problems: &mut Vec<String>| {
                if !(0.0..=1.0).contains(&v) {
                    problems.push(format!("row {} (year {}): {name} = {v} outside [0, 1]", i + 1, row.year));
                }
            };
            check("lgd_rate", row.lgd_rate, &mut problems);
            if let Some(pd) = row.pd_all_ratings {
                check("pd_all_ratings", pd, &mut problems);
            }
            if let Some(pd) = row.pd_speculative {
                check("pd_speculative", pd, &mut problems);
            }
            if let (Some(all), Some(spec)) = (row.pd_all_ratings, row.pd_speculative) {
                if spec < all {
                    warnings.push(format!("year {}: pd_speculative {spec} below pd_all_ratings {all}", row.year));
                }
            }
            if i > 0 {
                let prev = rows[i - 1].year;
                if row.year == prev {
                    problems.push(format!("row {}: duplicate year {}", i + 1, row.year));
                } else if row.year < prev {
                    problems.push(format!("row {}: year {} after {prev}", i + 1, row.year));
                } else if row.year > prev + 1 {
                    warnings.push(format!("gap between {prev} and {}", row.year));
                }
            }
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        Ok(Self { rows, source_label: source_label.into(), warnings })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn years(&self) -> Vec<i32> {
        self.rows.iter().map(|r| r.year).collect()
    }

    pub fn lgd_series(&self) -> Result<SampleSeries> {
        SampleSeries::new("LGD", self.rows.iter().map(|r| r.lgd_rate).collect(), Some(self.years()))
    }

    /// PD column of `grade`; every row must carry it.
    pub fn pd_series(&self, grade: Grade) -> Result<SampleSeries> {
        let values = self
            .rows
            .iter()
            .map(|r| r.pd(grade).ok_or_else(|| Error::Validation(vec![format!("year {}: missing {grade} PD", r.year)])))
            .collect::<Result<Vec<_>>>()?;
        SampleSeries::new(format!("PD_{grade}"), values, Some(self.years()))
    }

    /// Default points `k = Φ⁻¹(PD)` for `grade`.
    pub fn k_series(&self, grade: Grade) -> Result<SampleSeries> {
        let pd = self.pd_series(grade)?;
        SampleSeries::new(format!("k_{grade}"), probit_transform(pd.values())?, Some(self.years()))
    }
}

fn parse_rate(field: &str, line: usize, column: &str) -> Result<Option<f64>> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(None);
    }
    let (number, scale) = match field.strip_suffix('%') {
        Some(stripped) => (stripped.trim(), 100.0),
        None => (field, 1.0),
    };
    let value: f64 = number
        .parse()
        .map_err(|_| Error::Parse { line, message: format!("{column}: cannot parse '{field}' as a rate") })?;
    if !value.is_finite() {
        return Err(Error::Parse { line, message: format!("{column}: non-finite rate '{field}'") });
    }
    Ok(Some(value / scale))
}

/// Parses a panel from CSV text.
pub fn read_panel<R: Read>(reader: R, source_label: &str) -> Result<RatePanel> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(false).from_reader(reader);
    let headers = csv
        .headers()
        .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let year_col = column("year").ok_or_else(|| Error::Parse { line: 1, message: "missing 'year' column".into() })?;
    let lgd_col =
        column("lgd_rate").ok_or_else(|| Error::Parse { line: 1, message: "missing 'lgd_rate' column".into() })?;
    let all_col = column("pd_all_ratings");
    let spec_col = column("pd_speculative");

    let mut rows = Vec::new();
    for record in csv.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| record.get(i).unwrap_or("");
        let year = field(year_col)
            .parse::<i32>()
            .map_err(|_| Error::Parse { line, message: format!("year: cannot parse '{}'", field(year_col)) })?;
        let lgd_rate = parse_rate(field(lgd_col), line, "lgd_rate")?
            .ok_or_else(|| Error::Parse { line, message: "lgd_rate is empty".into() })?;
        let pd_all_ratings = match all_col {
            Some(c) => parse_rate(field(c), line, "pd_all_ratings")?,
            None => None,
        };
        let pd_speculative = match spec_col {
            Some(c) => parse_rate(field(c), line, "pd_speculative")?,
            None => None,
        };
        rows.push(PanelRow { year, lgd_rate, pd_all_ratings, pd_speculative });
    }
    RatePanel::validate(rows, source_label)
}

pub fn load_panel(path: impl AsRef<Path>) -> Result<RatePanel> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_panel(file, &path.display().to_string())
}

/// Writes the panel as decimal CSV; values use the shortest representation
/// that parses back to the same `f64`.
pub fn write_panel<W: Write>(panel: &RatePanel, writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    csv.write_record(PANEL_HEADER).map_err(io)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for row in &panel.rows {
        csv.write_record([
            row.year.to_string(),
            row.lgd_rate.to_string(),
            opt(row.pd_all_ratings),
            opt(row.pd_speculative),
        ])
        .map_err(io)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn save_panel(panel: &RatePanel, path: impl AsRef<Path>) -> Result<()> {
    write_panel(panel, File::create(path)?)
}

/// Point estimates and uncertainty model fitted to one grade of a panel.
///
/// `σ_k` is the sample standard deviation of `Φ⁻¹(PD)`; `k̂` is then
/// recovered from the mean PD with `method`.
pub fn estimate_model(panel: &RatePanel, grade: Grade, method: KHatMethod) -> Result<(PointEstimates, UncertaintyModel)> {
    let lgd = panel.lgd_series()?;
    let pd = panel.pd_series(grade)?;
    let k = panel.k_series(grade)?;
    let lgd_stats = describe(&lgd);
    let pd_stats = describe(&pd);
    let k_stats = describe(&k);
    let rho = pearson(&lgd, &k)?.r;
    let pe = PointEstimates::new(pd_stats.mean, lgd_stats.mean)?;
    let k_hat = infer_k_hat(pe.pd_hat, k_stats.std, method)?;
    let model = UncertaintyModel::new(k_hat, k_stats.std, lgd_stats.mean, lgd_stats.std, rho)?;
    Ok((pe, model))
}

/// Target moments for a synthetic panel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthesisTargets {
    pub n: usize,
    pub first_year: i32,
    pub lgd_mean: f64,
    pub lgd_std: f64,
    pub k_ar_mean: f64,
    pub k_ar_std: f64,
    pub k_sg_mean: f64,
    pub k_sg_std: f64,
    pub corr_lgd_k_ar: f64,
    pub corr_lgd_k_sg: f64,
    pub corr_k_ar_k_sg: f64,
}

impl SynthesisTargets {
    /// Reference AR/SG moments over 37 years; the AR–SG default-point
    /// correlation is not part of the reference set and is taken as 0.9.
    pub fn reference() -> Self {
        use crate::presets::{ALL_RATINGS, FIRST_YEAR, SAMPLE_YEARS, SPECULATIVE};
        Self {
            n: SAMPLE_YEARS,
            first_year: FIRST_YEAR,
            lgd_mean: ALL_RATINGS.lgd_hat,
            lgd_std: ALL_RATINGS.sigma_lgd,
            k_ar_mean: ALL_RATINGS.k_hat,
            k_ar_std: ALL_RATINGS.sigma_k,
            k_sg_mean: SPECULATIVE.k_hat,
            k_sg_std: SPECULATIVE.sigma_k,
            corr_lgd_k_ar: ALL_RATINGS.rho_lgd_k,
            corr_lgd_k_sg: SPECULATIVE.rho_lgd_k,
            corr_k_ar_k_sg: 0.9,
        }
    }

    fn means(&self) -> [f64; 3] {
        [self.lgd_mean, self.k_ar_mean, self.k_sg_mean]
    }

    fn covariance(&self) -> [[f64; 3]; 3] {
        let s = [self.lgd_std, self.k_ar_std, self.k_sg_std];
        let c = [
            [1.0, self.corr_lgd_k_ar, self.corr_lgd_k_sg],
            [self.corr_lgd_k_ar, 1.0, self.corr_k_ar_k_sg],
            [self.corr_lgd_k_sg, self.corr_k_ar_k_sg, 1.0],
        ];
        let mut cov = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] = s[i] * s[j] * c[i][j];
            }
        }
        cov
    }

    fn check(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::Infeasible(format!("need at least 4 rows, got {}", self.n)));
        }
        for (name, s) in [("lgd_std", self.lgd_std), ("k_ar_std", self.k_ar_std), ("k_sg_std", self.k_sg_std)] {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Infeasible(format!("{name} must be positive, got {s}")));
            }
        }
        for (name, c) in [
            ("corr_lgd_k_ar", self.corr_lgd_k_ar),
            ("corr_lgd_k_sg", self.corr_lgd_k_sg),
            ("corr_k_ar_k_sg", self.corr_k_ar_k_sg),
        ] {
            if c.is_nan() || c.abs() >= 1.0 {
                return Err(Error::Infeasible(format!("{name} must lie in (-1, 1), got {c}")));
            }
        }
        if cholesky3(&self.covariance()).is_none() {
            return Err(Error::Infeasible("target correlation matrix is not positive definite".into()));
        }
        Ok(())
    }
}

fn cholesky3(a: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let s: f64 = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

/// Solves `L x = b` for lower-triangular `L`.
fn forward_substitute(l: &[[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
    let mut x = [0.0; 3];
    for i in 0..3 {
        x[i] = (b[i] - (0..i).map(|k| l[i][k] * x[k]).sum::<f64>()) / l[i][i];
    }
    x
}

const MAX_SYNTHESIS_ATTEMPTS: u64 = 1000;

/// Panel whose LGD and default-point columns have exactly the target sample
/// means, standard deviations and correlations.
///
/// Gaussian draws are centred, whitened with the Cholesky factor of their
/// own sample covariance and recoloured with the target one; PDs are
/// `Φ(k)`. Draws producing an LGD outside `[0, 1]` are rejected.
pub fn synthesize_panel(targets: &SynthesisTargets, seed: u64) -> Result<RatePanel> {
    targets.check()?;
    let target_chol = cholesky3(&targets.covariance()).expect("checked above");
    let means = targets.means();
    let n = targets.n;

    for attempt in 0..MAX_SYNTHESIS_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt);
        let mut draws: Vec<[f64; 3]> =
            (0..n).map(|_| std::array::from_fn(|_| StandardNormal.sample(&mut rng))).collect();

        let mut centre = [0.0; 3];
        for d in &draws {
            for j in 0..3 {
                centre[j] += d[j] / n as f64;
            }
        }
        let mut cov = [[0.0; 3]; 3];
        for d in draws.iter_mut() {
            for j in 0..3 {
                d[j] -= centre[j];
            }
            for i in 0..3 {
                for j in 0..3 {
                    cov[i][j] += d[i] * d[j] / (n - 1) as f64;
                }
            }
        }
        let Some(sample_chol) = cholesky3(&cov) else { continue };

        let columns: Vec<[f64; 3]> = draws
            .iter()
            .map(|d| {
                let white = forward_substitute(&sample_chol, *d);
                std::array::from_fn(|i| means[i] + (0..=i).map(|k| target_chol[i][k] * white[k]).sum::<f64>())
            })
            .collect();
        if columns.iter().any(|c| !(0.0..=1.0).contains(&c[0])) {
            continue;
        }
        let rows = columns
            .iter()
            .enumerate()
            .map(|(i, c)| PanelRow {
                year: targets.first_year + i as i32,
                lgd_rate: c[0],
                pd_all_ratings: Some(norm_cdf(c[1])),
                pd_speculative: Some(norm_cdf(c[2])),
            })
            .collect();
        return RatePanel::validate(rows, format!("synthetic(seed={seed})"));
    }
    Err(Error::Infeasible(format!(
        "no draw kept LGD inside [0, 1] after {MAX_SYNTHESIS_ATTEMPTS} attempts"
    )))
}

/// Run settings read from a `key = value` file; every key can be overridden
/// on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub alpha: f64,
    pub n_sim: usize,
    pub seed: u64,
    pub grade: Grade,
    pub scenarios: Vec<Scenario>,
    pub lgd_clamp: bool,
    pub rho_mode: RhoMode,
    pub granularity: Granularity,
    pub k_hat_method: KHatMethod,
    pub input: Option<String>,
    pub output: Option<String>,
    pub warnings: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            alpha: crate::BASEL_ALPHA,
            n_sim: 10_000_000,
            seed: crate::mc::DEFAULT_SEED,
            grade: Grade::AllRatings,
            scenarios: Scenario::ALL.to_vec(),
            lgd_clamp: false,
            rho_mode: RhoMode::OfRealizedPd,
            granularity: Granularity::Asymptotic,
            k_hat_method: KHatMethod::Quadrature,
            input: None,
            output: None,
            warnings: Vec::new(),
        }
    }
}

fn parse_scenario(s: &str) -> Result<Scenario> {
    match s.trim().to_ascii_lowercase().as_str() {
        "lgd_only" | "lgd" => Ok(Scenario::LgdOnly),
        "k_only" | "k" => Ok(Scenario::KOnly),
        "independent" => Ok(Scenario::Independent),
        "correlated" => Ok(Scenario::Correlated),
        other => Err(Error::Config(format!("unknown scenario '{other}'"))),
    }
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(Error::Config(format!("expected a boolean, got '{other}'"))),
    }
}

impl RunConfig {
    /// Applies one setting. Alpha outside {0.99, 0.999} is accepted with a
    /// warning.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let bad = |what: &str| Error::Config(format!("{key}: cannot parse '{value}' as {what}"));
        match key.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "alpha" => {
                let alpha: f64 = value.parse().map_err(|_| bad("a probability"))?;
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
                }
                if alpha != 0.99 && alpha != 0.999 {
                    self.warnings.push(format!("alpha = {alpha} is neither 0.99 nor 0.999"));
                }
                self.alpha = alpha;
            }
            "n_sim" | "nsim" => self.n_sim = value.parse().map_err(|_| bad("a path count"))?,
            "seed" => self.seed = value.parse().map_err(|_| bad("an unsigned 64-bit integer"))?,
            "grade" => self.grade = value.parse()?,
            "scenarios" => {
                self.scenarios = value.split(',').filter(|s| !s.trim().is_empty()).map(parse_scenario).collect::<Result<_>>()?
            }
            "lgd_clamp" | "clamp_lgd" => self.lgd_clamp = parse_bool(value)?,
            "rho_mode" => self.rho_mode = value.parse()?,
            "obligors" | "granularity" => self.granularity = value.parse()?,
            "k_hat_method" => self.k_hat_method = value.parse()?,
            "input" => self.input = Some(value.to_string()),
            "output" | "out" => self.output = Some(value.to_string()),
            other => return Err(Error::Config(format!("unknown configuration key '{other}'"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: i + 1, message: format!("expected 'key = value', got '{line}'") })?;
            if seen.insert(key.trim().to_string(), i + 1).is_some() {
                return Err(Error::Parse { line: i + 1, message: format!("duplicate key '{}'", key.trim()) });
            }
            config.set(key, value).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
        }
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
