//! Monte Carlo level/power and delay studies, count-file ingestion, and
//! detector plot data.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::critical_values::{quantile_c_alpha, QuantileCache, QuantileRequest, QuantileResult};
use crate::error::{Error, Result};
use crate::models::{ModelSpec, Theta};
use crate::monitor::{run_monitor, MonitorConfig, MonitorTrace, StrideRule};
use crate::rng::derive_seed;
use crate::series::CountSeries;
use crate::simulate::{simulate_stationary, simulate_with_change, ChangeSpec, DEFAULT_BURNIN};

/// Seed label reserved for the critical-value simulation.
const QUANTILE_SEED_LABEL: u64 = 0x51_55_41_4E_54;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub theta0: Theta,
    /// Post-change parameter; `None` for a level-only scenario.
    #[serde(default)]
    pub theta1: Option<Theta>,
}

impl Scenario {
    /// The three INGARCH(1,1) designs of the level/power study.
    pub fn standard() -> Vec<Scenario> {
        let s = |id: &str, a: [f64; 3], b: [f64; 3]| Scenario {
            id: id.to_string(),
            theta0: Theta::from(a),
            theta1: Some(Theta::from(b)),
        };
        vec![
            s("s1", [1.0, 0.2, 0.15], [1.0, 0.2, 0.5]),
            s("s2", [0.75, 0.5, 0.3], [0.25, 0.5, 0.3]),
            s("s3", [2.5, 0.0, 0.35], [4.5, 0.05, 0.6]),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuantileSettings {
    pub replications: usize,
    pub points_per_unit: usize,
    /// Defaults to a seed derived from the master seed.
    pub seed: Option<u64>,
    pub cache: Option<PathBuf>,
    /// Skip the simulation and use this critical value.
    pub c_alpha: Option<f64>,
}

impl Default for QuantileSettings {
    fn default() -> Self {
        QuantileSettings {
            replications: crate::critical_values::DEFAULT_REPLICATIONS,
            points_per_unit: crate::critical_values::DEFAULT_POINTS_PER_UNIT,
            seed: None,
            cache: None,
            c_alpha: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub spec: ModelSpec,
    pub scenarios: Vec<Scenario>,
    pub ms: Vec<usize>,
    /// `k* = round(k_star_factor · m)`.
    pub k_star_factor: f64,
    pub horizon: f64,
    pub alpha: f64,
    pub replications: usize,
    pub seed: u64,
    pub burnin: usize,
    /// `None` uses `⌈m^{1/4}⌉`.
    pub v_m: Option<usize>,
    pub ell_stride: StrideRule,
    pub quantile: QuantileSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            spec: ModelSpec::Ingarch { p: 1, q: 1 },
            scenarios: Scenario::standard(),
            ms: vec![200, 500],
            k_star_factor: 1.25,
            horizon: 1.5,
            alpha: 0.05,
            replications: 100,
            seed: 20_240_601,
            burnin: DEFAULT_BURNIN,
            v_m: None,
            ell_stride: StrideRule::default(),
            quantile: QuantileSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.replications == 0 {
            return Err(Error::structural("replications must be at least 1"));
        }
        if self.ms.is_empty() || self.scenarios.is_empty() {
            return Err(Error::structural("need at least one m and one scenario"));
        }
        if !(self.horizon.is_finite() && self.horizon > 1.0) {
            return Err(Error::domain("experiments need a finite horizon T > 1"));
        }
        for sc in &self.scenarios {
            self.spec.check_theta(&sc.theta0)?;
            if let Some(t1) = &sc.theta1 {
                self.spec.check_theta(t1)?;
            }
        }
        for &m in &self.ms {
            self.monitor_config(m, 1.0)?.validate()?;
            if self.scenarios.iter().any(|s| s.theta1.is_some()) {
                let ks = self.k_star(m);
                if ks <= m || ks >= self.series_len(m) {
                    return Err(Error::domain(format!(
                        "change index {ks} must satisfy m < k* < T·m for m={m}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn k_star(&self, m: usize) -> usize {
        (self.k_star_factor * m as f64).round() as usize
    }

    /// Observations per replication: the historical stretch plus the
    /// monitoring period `m+1 … [T·m]`.
    pub fn series_len(&self, m: usize) -> usize {
        (self.horizon * m as f64).floor() as usize
    }

    pub fn quantile_request(&self) -> QuantileRequest {
        let mut req = QuantileRequest::new(
            self.spec.dim(),
            self.horizon,
            self.alpha,
            self.quantile
                .seed
                .unwrap_or_else(|| derive_seed(self.seed, &[QUANTILE_SEED_LABEL])),
        );
        req.replications = self.quantile.replications;
        req.grid_points = (self.quantile.points_per_unit as f64 * self.horizon).ceil() as usize;
        req
    }

    /// Critical value from the override, the cache, or a fresh simulation.
    pub fn critical_value(&self) -> Result<QuantileResult> {
        let req = self.quantile_request();
        if let Some(c) = self.quantile.c_alpha {
            return Ok(QuantileResult {
                c_alpha: c,
                mc_stderr: 0.0,
                stderr_reliable: true,
                from_cache: false,
                cache_warning: None,
                request: req,
            });
        }
        let cache = self.quantile.cache.as_ref().map(QuantileCache::new);
        quantile_c_alpha(&req, cache.as_ref())
    }

    pub fn monitor_config(&self, m: usize, c_alpha: f64) -> Result<MonitorConfig> {
        let mut cfg = MonitorConfig::new(m, self.horizon, self.alpha, c_alpha);
        if let Some(v) = self.v_m {
            cfg.v_m = v;
        }
        cfg.ell_stride = self.ell_stride;
        Ok(cfg)
    }

    fn replication_seed(&self, scenario: usize, m: usize, rep: usize) -> u64 {
        derive_seed(self.seed, &[scenario as u64, m as u64, rep as u64])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

impl Hypothesis {
    fn label(self) -> &'static str {
        match self {
            Hypothesis::H0 => "H0",
            Hypothesis::H1 => "H1",
        }
    }
}

/// Summary of one monitored replication.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub tau: Option<usize>,
    pub delay: Option<usize>,
    pub flagged_fits: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRuns {
    pub scenario: String,
    pub m: usize,
    pub k_star: Option<usize>,
    pub hypothesis: Hypothesis,
    pub null_change: bool,
    /// One entry per replication; `None` marks a failed replication.
    pub runs: Vec<Option<RunSummary>>,
}

/// All replications of an experiment, in (scenario, m, hypothesis) order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub c_alpha: QuantileResult,
    pub cells: Vec<CellRuns>,
}

/// Simulated series for one replication. H₀ and H₁ share the seed, so the
/// two series coincide up to `k*`.
pub fn simulate_replication(
    cfg: &ExperimentConfig,
    scenario: usize,
    m: usize,
    rep: usize,
    hypothesis: Hypothesis,
) -> Result<CountSeries> {
    let sc = &cfg.scenarios[scenario];
    let seed = cfg.replication_seed(scenario, m, rep);
    let n = cfg.series_len(m);
    match (hypothesis, &sc.theta1) {
        (Hypothesis::H1, Some(theta1)) => {
            let change = ChangeSpec {
                theta0: sc.theta0.clone(),
                theta1: theta1.clone(),
                k_star: cfg.k_star(m),
                total_len: n,
            };
            simulate_with_change(&change, &cfg.spec, cfg.burnin, seed)
        }
        (Hypothesis::H1, None) => Err(Error::structural(format!(
            "scenario {} has no post-change parameter",
            sc.id
        ))),
        (Hypothesis::H0, _) => simulate_stationary(&cfg.spec, &sc.theta0, n, cfg.burnin, seed),
    }
}

fn run_one(
    cfg: &ExperimentConfig,
    scenario: usize,
    m: usize,
    rep: usize,
    hypothesis: Hypothesis,
    mcfg: &MonitorConfig,
) -> Result<RunSummary> {
    let y = simulate_replication(cfg, scenario, m, rep, hypothesis)?;
    let trace = run_monitor(&cfg.spec, &y, mcfg)?;
    Ok(RunSummary {
        tau: trace.tau,
        delay: trace.delay,
        flagged_fits: trace.flagged_fits,
    })
}

/// Runs the requested hypotheses for every scenario and `m`.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    hypotheses: &[Hypothesis],
) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let c_alpha = cfg.critical_value()?;
    let mut cells = Vec::new();
    for (si, sc) in cfg.scenarios.iter().enumerate() {
        for &m in &cfg.ms {
            let mcfg = cfg.monitor_config(m, c_alpha.c_alpha)?;
            for &h in hypotheses {
                if h == Hypothesis::H1 && sc.theta1.is_none() {
                    continue;
                }
                let runs: Vec<Option<RunSummary>> = (0..cfg.replications)
                    .into_par_iter()
                    .map(|rep| run_one(cfg, si, m, rep, h, &mcfg).ok())
                    .collect();
                cells.push(CellRuns {
                    scenario: sc.id.clone(),
                    m,
                    k_star: (h == Hypothesis::H1).then(|| cfg.k_star(m)),
                    hypothesis: h,
                    null_change: sc.theta1.as_ref() == Some(&sc.theta0),
                    runs,
                });
            }
        }
    }
    Ok(ExperimentOutcome { c_alpha, cells })
}

/// Seven-number summary of detection delays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelayStats {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (divisor `n − 1`; 0 for a single delay).
    pub sd: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data (`h = (n−1)p`).
fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl DelayStats {
    pub fn from_delays(delays: &[usize]) -> Option<Self> {
        if delays.is_empty() {
            return None;
        }
        let mut v: Vec<f64> = delays.iter().map(|&d| d as f64).collect();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let sd = if v.len() > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(DelayStats {
            count: v.len(),
            mean,
            sd,
            min: v[0],
            q1: sorted_quantile(&v, 0.25),
            median: sorted_quantile(&v, 0.5),
            q3: sorted_quantile(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DelayCell {
    Stats(DelayStats),
    NoDetections,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub m: usize,
    pub k_star: Option<usize>,
    pub hypothesis: Hypothesis,
    pub replications: usize,
    pub failures: usize,
    pub detections: usize,
    /// Detections over successful replications.
    pub rate: f64,
    pub flagged_fits: usize,
    pub delay: Option<DelayCell>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub c_alpha: f64,
    pub rows: Vec<ResultRow>,
}

impl ExperimentOutcome {
    fn row(cell: &CellRuns, with_delay: bool) -> ResultRow {
        let ok: Vec<&RunSummary> = cell.runs.iter().flatten().collect();
        let detections = ok.iter().filter(|r| r.tau.is_some()).count();
        let delay = with_delay.then(|| {
            if cell.null_change {
                DelayCell::NotApplicable
            } else {
                let delays: Vec<usize> = ok.iter().filter_map(|r| r.delay).collect();
                DelayStats::from_delays(&delays).map_or(DelayCell::NoDetections, DelayCell::Stats)
            }
        });
        ResultRow {
            scenario: cell.scenario.clone(),
            m: cell.m,
            k_star: cell.k_star,
            hypothesis: cell.hypothesis,
            replications: cell.runs.len(),
            failures: cell.runs.len() - ok.len(),
            detections,
            rate: if ok.is_empty() {
                0.0
            } else {
                detections as f64 / ok.len() as f64
            },
            flagged_fits: ok.iter().map(|r| r.flagged_fits).sum(),
            delay,
        }
    }

    /// Rejection frequencies for every cell.
    pub fn level_power(&self) -> ResultTable {
        ResultTable {
            c_alpha: self.c_alpha.c_alpha,
            rows: self.cells.iter().map(|c| Self::row(c, false)).collect(),
        }
    }

    /// Delay summaries for the H₁ cells.
    pub fn delays(&self) -> ResultTable {
        ResultTable {
            c_alpha: self.c_alpha.c_alpha,
            rows: self
                .cells
                .iter()
                .filter(|c| c.hypothesis == Hypothesis::H1)
                .map(|c| Self::row(c, true))
                .collect(),
        }
    }
}

pub fn run_level_power(cfg: &ExperimentConfig) -> Result<ResultTable> {
    Ok(run_experiment(cfg, &[Hypothesis::H0, Hypothesis::H1])?.level_power())
}

pub fn run_delay_stats(cfg: &ExperimentConfig) -> Result<ResultTable> {
    Ok(run_experiment(cfg, &[Hypothesis::H1])?.delays())
}

pub const TABLE1_COLUMNS: [&str; 10] = [
    "scenario",
    "m",
    "k_star",
    "hypothesis",
    "replications",
    "failures",
    "detections",
    "rate",
    "flagged_fits",
    "c_alpha",
];

pub const TABLE2_COLUMNS: [&str; 12] = [
    "scenario",
    "m",
    "k_star",
    "detections",
    "mean",
    "sd",
    "min",
    "q1",
    "median",
    "q3",
    "max",
    "note",
];

fn opt_usize(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_table1<W: Write>(table: &ResultTable, delimiter: char, mut out: W) -> Result<()> {
    let sep = delimiter.to_string();
    writeln!(out, "{}", TABLE1_COLUMNS.join(&sep))?;
    for r in &table.rows {
        let cells = [
            r.scenario.clone(),
            r.m.to_string(),
            opt_usize(r.k_star),
            r.hypothesis.label().to_string(),
            r.replications.to_string(),
            r.failures.to_string(),
            r.detections.to_string(),
            format!("{:.4}", r.rate),
            r.flagged_fits.to_string(),
            format!("{:.6}", table.c_alpha),
        ];
        writeln!(out, "{}", cells.join(&sep))?;
    }
    Ok(())
}

pub fn write_table2<W: Write>(table: &ResultTable, delimiter: char, mut out: W) -> Result<()> {
    let sep = delimiter.to_string();
    writeln!(out, "{}", TABLE2_COLUMNS.join(&sep))?;
    for r in &table.rows {
        let mut cells = vec![r.scenario.clone(), r.m.to_string(), opt_usize(r.k_star)];
        match &r.delay {
            Some(DelayCell::Stats(s)) => {
                cells.push(s.count.to_string());
                for v in [s.mean, s.sd, s.min, s.q1, s.median, s.q3, s.max] {
                    cells.push(format!("{v:.2}"));
                }
                cells.push(String::new());
            }
            other => {
                cells.push("0".to_string());
                cells.extend(std::iter::repeat_n(String::new(), 7));
                cells.push(
                    match other {
                        Some(DelayCell::NotApplicable) => "not-applicable",
                        _ => "no-detections",
                    }
                    .to_string(),
                );
            }
        }
        writeln!(out, "{}", cells.join(&sep))?;
    }
    Ok(())
}

/// Reads one count per record. The count is the last field, so a leading
/// date column is ignored; a first record whose count field is not numeric is
/// treated as a header.
pub fn load_counts_csv(path: &Path) -> Result<CountSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_error)?;
    let mut counts = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(i + 1, |p| p.line() as usize);
        let Some(field) = rec.iter().next_back() else {
            continue;
        };
        if field.is_empty() && rec.len() == 1 {
            continue;
        }
        match field.parse::<u64>() {
            Ok(v) => counts.push(v),
            Err(_) if i == 0 && field.parse::<f64>().is_err() => {}
            Err(_) => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected a nonnegative integer count, found {field:?}"),
                })
            }
        }
    }
    if counts.is_empty() {
        return Err(Error::structural(format!(
            "{} holds no counts",
            path.display()
        )));
    }
    Ok(CountSeries::new(counts))
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

/// One row of detector plot data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub k: usize,
    pub raw_max: f64,
    pub statistic: f64,
    pub threshold: f64,
    pub is_change: bool,
    pub is_stop: bool,
}

pub const SERIES_COLUMNS: [&str; 6] = ["k", "raw_max", "statistic", "threshold", "change", "stop"];

pub fn series_rows(trace: &MonitorTrace) -> Vec<SeriesRow> {
    trace
        .per_k
        .iter()
        .map(|r| SeriesRow {
            k: r.k,
            raw_max: r.raw_max,
            statistic: r.statistic,
            threshold: trace.threshold,
            is_change: trace.known_change == Some(r.k),
            is_stop: trace.tau == Some(r.k),
        })
        .collect()
}

/// Writes detector plot data with a header row.
pub fn write_detector_series<W: Write>(trace: &MonitorTrace, delimiter: u8, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_writer(out);
    w.write_record(SERIES_COLUMNS).map_err(csv_error)?;
    for row in series_rows(trace) {
        // `{}` on f64 prints the shortest string that parses back exactly.
        w.write_record([
            row.k.to_string(),
            row.raw_max.to_string(),
            row.statistic.to_string(),
            row.threshold.to_string(),
            u8::from(row.is_change).to_string(),
            u8::from(row.is_stop).to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the monitor on `y` and writes its detector series to `out_path`.
pub fn emit_detector_series(
    spec: &ModelSpec,
    y: &CountSeries,
    config: &MonitorConfig,
    out_path: &Path,
) -> Result<MonitorTrace> {
    let trace = run_monitor(spec, y, config)?;
    let file = std::fs::File::create(out_path)?;
    write_detector_series(&trace, b',', std::io::BufWriter::new(file))?;
    Ok(trace)
}

pub fn read_detector_series(path: &Path, delimiter: u8) -> Result<Vec<SeriesRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .from_path(path)
        .map_err(csv_error)?;
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| -> Result<&str> {
            rec.get(i).ok_or_else(|| Error::Parse {
                line,
                message: format!("missing column {}", SERIES_COLUMNS[i]),
            })
        };
        let bad = |what: &str| Error::Parse {
            line,
            message: format!("malformed {what}"),
        };
        rows.push(SeriesRow {
            k: field(0)?.parse().map_err(|_| bad("k"))?,
            raw_max: field(1)?.parse().map_err(|_| bad("raw_max"))?,
            statistic: field(2)?.parse().map_err(|_| bad("statistic"))?,
            threshold: field(3)?.parse().map_err(|_| bad("threshold"))?,
            is_change: field(4)? == "1",
            is_stop: field(5)? == "1",
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn csv_plain_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let s = load_counts_csv(&write(dir.path(), "a.csv", "3\n1\n2\n")).unwrap();
        assert_eq!(s.counts(), &[3, 1, 2]);
        let mut text = String::from("date,count\n");
        for i in 0..310 {
            text.push_str(&format!("2020-01-{:02},{}\n", i % 28 + 1, i % 7));
        }
        let s = load_counts_csv(&write(dir.path(), "b.csv", &text)).unwrap();
        assert_eq!(s.len(), 310);
    }

    #[test]
    fn csv_errors() {
        let dir = tempfile::tempdir().unwrap();
        match load_counts_csv(&write(dir.path(), "c.csv", "3\n2.5\n1\n")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match load_counts_csv(&write(dir.path(), "d.csv", "count\n4\n-1\n")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            load_counts_csv(&write(dir.path(), "e.csv", "")),
            Err(Error::Structural(_))
        ));
        assert!(matches!(
            load_counts_csv(&dir.path().join("missing.csv")),
            Err(Error::Io(_))
        ));
    }

    #[test]
    fn delay_stats_type7() {
        let s = DelayStats::from_delays(&[11, 27, 36, 43, 50]).unwrap();
        assert_eq!(
            (s.min, s.q1, s.median, s.q3, s.max),
            (11.0, 27.0, 36.0, 43.0, 50.0)
        );
        assert!((s.mean - 33.4).abs() < 1e-12);
        let s = DelayStats::from_delays(&[1, 2, 3, 4]).unwrap();
        assert_eq!((s.q1, s.median, s.q3), (1.75, 2.5, 3.25));
        assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!(DelayStats::from_delays(&[]).is_none());
        assert_eq!(DelayStats::from_delays(&[7]).unwrap().sd, 0.0);
    }

    #[test]
    fn config_validation() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.k_star(200), 250);
        assert_eq!(cfg.series_len(200), 300);
        let mut bad = cfg.clone();
        bad.replications = 0;
        assert!(matches!(bad.validate(), Err(Error::Structural(_))));
        let mut bad = cfg.clone();
        bad.k_star_factor = 1.6;
        assert!(bad.validate().is_err());
        let mut bad = cfg;
        bad.scenarios[0].theta0 = Theta::from([1.0, 0.6, 0.5]);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn h0_and_h1_share_the_prefix() {
        let cfg = ExperimentConfig::default();
        let a = simulate_replication(&cfg, 0, 200, 3, Hypothesis::H0).unwrap();
        let b = simulate_replication(&cfg, 0, 200, 3, Hypothesis::H1).unwrap();
        assert_eq!(a.len(), 300);
        assert_eq!(a.counts()[..250], b.counts()[..250]);
        assert_eq!(b.known_change(), Some(250));
    }
}
