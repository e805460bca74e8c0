//! `countmon`: fit Poisson autoregressions, monitor count series for a
//! parameter change, compute critical values, and run the simulation tables.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use countmon::experiments::{
    run_experiment, simulate_replication, write_table1, write_table2, ExperimentConfig, Hypothesis,
    QuantileSettings,
};
use countmon::likelihood::{fit_mle, sigma_hat, FitOptions};
use countmon::{
    load_counts_csv, quantile_c_alpha, run_monitor, write_detector_series, CountSeries, ModelSpec,
    MonitorConfig, QuantileCache, QuantileRequest, QuantileResult, StrideRule, ThetaDomain, Window,
};
use serde::Serialize;

mod config;
mod output;

use config::FileConfig;
use output::Sink;

#[derive(Parser)]
#[command(name = "countmon", version)]
#[command(about = "Poisson autoregression fitting and sequential change-point monitoring")]
struct Cli {
    /// TOML configuration file; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed for every random draw
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Field delimiter for output tables
    #[arg(long, global = true)]
    delimiter: Option<char>,

    /// Append-only cache of critical values (JSON lines)
    #[arg(long, global = true, env = "COUNTMON_QUANTILE_CACHE")]
    quantile_cache: Option<PathBuf>,

    /// Table output file; a `.json` sidecar is written next to it. Defaults to stdout.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Maximum-likelihood fit on a window of a count file
    Fit {
        /// One count per record; a leading header and date column are allowed
        #[arg(long)]
        input: PathBuf,
        /// First observation of the window (1-based)
        #[arg(long)]
        start: Option<usize>,
        /// Last observation of the window (inclusive)
        #[arg(long)]
        end: Option<usize>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Monitor a count file after its first m observations
    Monitor {
        #[arg(long)]
        input: PathBuf,
        /// Index of a known change, used only to report the delay
        #[arg(long)]
        known_change: Option<usize>,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        monitor: MonitorArgs,
        #[command(flatten)]
        quantile: QuantileArgs,
    },
    /// Critical values of the limiting functional
    Quantiles {
        /// Parameter dimensions
        #[arg(long, value_delimiter = ',', default_value = "3")]
        d: Vec<usize>,
        /// Closed-end horizons T
        #[arg(long, value_delimiter = ',', default_value = "1.5")]
        horizon: Vec<f64>,
        /// Nominal levels
        #[arg(long, value_delimiter = ',', default_value = "0.05")]
        alpha: Vec<f64>,
        #[command(flatten)]
        quantile: QuantileArgs,
    },
    /// Empirical levels and powers
    Table1 {
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Detection-delay summaries
    Table2 {
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Detector series for plotting, from a count file or a simulated scenario
    DetectorPlot {
        /// Count file; when absent a scenario replication is simulated
        #[arg(long, conflicts_with = "scenario")]
        input: Option<PathBuf>,
        /// Scenario id from the experiment configuration
        #[arg(long)]
        scenario: Option<String>,
        /// Simulate without the change (null hypothesis)
        #[arg(long)]
        no_change: bool,
        /// Replication index used for the simulation seed
        #[arg(long, default_value_t = 0)]
        replication: usize,
        #[arg(long)]
        known_change: Option<usize>,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        monitor: MonitorArgs,
        #[command(flatten)]
        quantile: QuantileArgs,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Family {
    Ingarch,
    Intarch,
}

#[derive(Args, Clone, Debug)]
struct ModelArgs {
    /// Model family
    #[arg(long, value_enum)]
    family: Option<Family>,
    /// INGARCH order on past intensities
    #[arg(long)]
    p: Option<usize>,
    /// Order on past counts
    #[arg(long)]
    q: Option<usize>,
    /// INTARCH threshold
    #[arg(long)]
    threshold: Option<u64>,
}

#[derive(Args, Clone, Debug)]
struct MonitorArgs {
    /// Historical sample size
    #[arg(long)]
    m: Option<usize>,
    /// Closed-end factor T ("inf" for open-end)
    #[arg(long)]
    horizon: Option<f64>,
    /// Nominal level of the critical value
    #[arg(long)]
    alpha: Option<f64>,
    /// Critical value; simulated when absent
    #[arg(long)]
    c_alpha: Option<f64>,
    /// Offset of the first lag ℓ below m
    #[arg(long)]
    v_m: Option<usize>,
    /// Fixed lag stride (default: adaptive)
    #[arg(long)]
    stride: Option<usize>,
}

#[derive(Args, Clone, Debug)]
struct QuantileArgs {
    /// Brownian paths for the critical value
    #[arg(long)]
    quantile_replications: Option<usize>,
    /// Grid points per unit time
    #[arg(long)]
    points_per_unit: Option<usize>,
    /// Seed for the critical-value paths (default: derived from --seed)
    #[arg(long)]
    quantile_seed: Option<u64>,
}

#[derive(Args, Clone, Debug)]
struct ExperimentArgs {
    /// Include m = 1000
    #[arg(long)]
    full: bool,
    /// Historical sizes, overriding the defaults
    #[arg(long, value_delimiter = ',')]
    ms: Option<Vec<usize>>,
    /// Monte Carlo replications per cell
    #[arg(long)]
    replications: Option<usize>,
    /// Use this critical value instead of simulating one
    #[arg(long)]
    c_alpha: Option<f64>,
    /// Fixed lag stride (default: adaptive)
    #[arg(long)]
    stride: Option<usize>,
    #[command(flatten)]
    quantile: QuantileArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Config,
    Data,
    Runtime,
}

struct Failure {
    kind: Kind,
    error: anyhow::Error,
}

type CliResult<T> = Result<T, Failure>;

trait Classify<T> {
    fn config(self) -> CliResult<T>;
    fn data(self) -> CliResult<T>;
    fn runtime(self) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn config(self) -> CliResult<T> {
        self.map_err(|e| Failure {
            kind: Kind::Config,
            error: e.into(),
        })
    }
    fn data(self) -> CliResult<T> {
        self.map_err(|e| Failure {
            kind: Kind::Data,
            error: e.into(),
        })
    }
    fn runtime(self) -> CliResult<T> {
        self.map_err(|e| Failure {
            kind: Kind::Runtime,
            error: e.into(),
        })
    }
}

/// Library errors raised while running on data: parameter problems are
/// configuration errors, everything else is attributed to the data.
fn core(e: countmon::Error) -> Failure {
    let kind = match e {
        countmon::Error::Domain(_) | countmon::Error::UnsupportedFamily { .. } => Kind::Config,
        _ => Kind::Data,
    };
    Failure {
        kind,
        error: e.into(),
    }
}

fn config_error(msg: impl Into<String>) -> Failure {
    Failure {
        kind: Kind::Config,
        error: anyhow!(msg.into()),
    }
}

struct Globals {
    file: FileConfig,
    seed: u64,
    delimiter: u8,
    cache: Option<PathBuf>,
    sink: Sink,
}

fn globals(cli: &Cli) -> CliResult<Globals> {
    let file = config::load(cli.config.as_deref()).config()?;
    let seed = cli
        .seed
        .or(file.seed)
        .unwrap_or_else(|| ExperimentConfig::default().seed);
    let delimiter = cli.delimiter.or(file.delimiter).unwrap_or(',');
    if !delimiter.is_ascii() || delimiter == '"' || delimiter == '\n' {
        return Err(config_error(format!("unusable delimiter {delimiter:?}")));
    }
    let cache = cli.quantile_cache.clone().or(file.quantile_cache.clone());
    Ok(Globals {
        file,
        seed,
        delimiter: delimiter as u8,
        cache,
        sink: Sink::new(cli.out.clone()),
    })
}

fn resolve_model(args: &ModelArgs, file: &FileConfig) -> CliResult<ModelSpec> {
    let flags_given =
        args.family.is_some() || args.p.is_some() || args.q.is_some() || args.threshold.is_some();
    let spec = if flags_given {
        let base = file.model.unwrap_or(ModelSpec::Ingarch { p: 1, q: 1 });
        let family = args.family.unwrap_or(match base {
            ModelSpec::Ingarch { .. } => Family::Ingarch,
            ModelSpec::Intarch { .. } => Family::Intarch,
        });
        let (bp, bq, bt) = match base {
            ModelSpec::Ingarch { p, q } => (p, q, 0),
            ModelSpec::Intarch { q, threshold } => (1, q, threshold),
        };
        match family {
            Family::Ingarch => ModelSpec::ingarch(args.p.unwrap_or(bp), args.q.unwrap_or(bq)),
            Family::Intarch => {
                ModelSpec::intarch(args.q.unwrap_or(bq), args.threshold.unwrap_or(bt))
            }
        }
        .config()?
    } else {
        file.model.unwrap_or(ModelSpec::Ingarch { p: 1, q: 1 })
    };
    spec.validate().config()?;
    Ok(spec)
}

fn quantile_settings(args: &QuantileArgs, g: &Globals) -> QuantileSettings {
    let mut q = QuantileSettings::default();
    if let Some(r) = args.quantile_replications.or(g.file.quantile.replications) {
        q.replications = r;
    }
    if let Some(p) = args.points_per_unit.or(g.file.quantile.points_per_unit) {
        q.points_per_unit = p;
    }
    q.seed = args.quantile_seed.or(g.file.quantile.seed);
    q.cache = g.cache.clone();
    q
}

fn resolve_monitor(
    args: &MonitorArgs,
    g: &Globals,
    spec: &ModelSpec,
    quantile: &QuantileArgs,
) -> CliResult<(MonitorConfig, QuantileResult)> {
    let f = &g.file.monitor;
    let m = args
        .m
        .or(f.m)
        .ok_or_else(|| config_error("the historical size m is required (--m)"))?;
    let horizon = args.horizon.or(f.horizon).unwrap_or(1.5);
    let alpha = args.alpha.or(f.alpha).unwrap_or(0.05);
    let given = args.c_alpha.or(f.c_alpha);
    if given.is_none() && !horizon.is_finite() {
        return Err(config_error(
            "open-end monitoring needs an explicit critical value (--c-alpha)",
        ));
    }
    let exp = ExperimentConfig {
        spec: *spec,
        horizon,
        alpha,
        seed: g.seed,
        quantile: QuantileSettings {
            c_alpha: given,
            ..quantile_settings(quantile, g)
        },
        ..ExperimentConfig::default()
    };
    let crit = if given.is_some() {
        exp.critical_value().map_err(core)?
    } else {
        let req = exp.quantile_request();
        req.validate().config()?;
        critical_value(&req, g)?
    };
    let mut cfg = MonitorConfig::new(m, horizon, alpha, crit.c_alpha);
    if let Some(v) = args.v_m.or(f.v_m) {
        cfg.v_m = v;
    }
    if let Some(n) = args.stride.or(f.stride) {
        cfg.ell_stride = StrideRule::Fixed { n };
    }
    cfg.validate().config()?;
    Ok((cfg, crit))
}

fn critical_value(req: &QuantileRequest, g: &Globals) -> CliResult<QuantileResult> {
    let cache = g.cache.as_ref().map(QuantileCache::new);
    let res = quantile_c_alpha(req, cache.as_ref()).map_err(core)?;
    if let Some(w) = &res.cache_warning {
        eprintln!("warning: {w}");
    }
    Ok(res)
}

fn resolve_experiment(args: &ExperimentArgs, g: &Globals) -> CliResult<ExperimentConfig> {
    let f = &g.file.experiment;
    let mut cfg = ExperimentConfig {
        spec: g.file.model.unwrap_or(ModelSpec::Ingarch { p: 1, q: 1 }),
        seed: g.seed,
        quantile: quantile_settings(&args.quantile, g),
        ..ExperimentConfig::default()
    };
    if let Some(h) = g.file.monitor.horizon {
        cfg.horizon = h;
    }
    if let Some(a) = g.file.monitor.alpha {
        cfg.alpha = a;
    }
    cfg.v_m = g.file.monitor.v_m;
    if let Some(n) = args.stride.or(g.file.monitor.stride) {
        cfg.ell_stride = StrideRule::Fixed { n };
    }
    cfg.quantile.c_alpha = args.c_alpha.or(g.file.monitor.c_alpha);
    if let Some(s) = &f.scenarios {
        cfg.scenarios = s.clone();
    }
    if let Some(ms) = args.ms.clone().or(f.ms.clone()) {
        cfg.ms = ms;
    }
    if args.full && !cfg.ms.contains(&1000) {
        cfg.ms.push(1000);
    }
    if let Some(r) = args.replications.or(f.replications) {
        cfg.replications = r;
    }
    if let Some(k) = f.k_star_factor {
        cfg.k_star_factor = k;
    }
    if let Some(b) = f.burnin {
        cfg.burnin = b;
    }
    cfg.validate().config()?;
    cfg.quantile_request().validate().config()?;
    Ok(cfg)
}

fn load_series(path: &Path, known_change: Option<usize>) -> CliResult<CountSeries> {
    let series = load_counts_csv(path)
        .with_context(|| format!("reading counts from {}", path.display()))
        .data()?;
    eprintln!("read {} observations from {}", series.len(), path.display());
    match known_change {
        Some(k) => series.with_known_change(k).data(),
        None => Ok(series),
    }
}

#[derive(Serialize)]
struct FitRecord<'a> {
    input: &'a Path,
    spec: ModelSpec,
    window: Window,
    seed: u64,
}

#[derive(Serialize)]
struct FitSummary {
    theta_hat: Vec<f64>,
    std_errors: Vec<f64>,
    loglik: f64,
    converged: bool,
    iterations: usize,
    sigma_ridge_added: f64,
}

fn cmd_fit(
    g: &Globals,
    input: &Path,
    start: Option<usize>,
    end: Option<usize>,
    model: &ModelArgs,
) -> CliResult<()> {
    let spec = resolve_model(model, &g.file)?;
    let series = load_series(input, None)?;
    let window = Window::new(start.unwrap_or(1), end.unwrap_or(series.len())).config()?;
    let y = series.counts();
    let domain = ThetaDomain::for_spec(&spec);
    let fit = fit_mle(&spec, y, window, &domain, None, &FitOptions::default()).map_err(core)?;
    if !fit.converged {
        eprintln!(
            "warning: fit stopped after {} iterations with gradient norm {:.3e}",
            fit.iterations, fit.grad_norm
        );
    }
    let sigma = sigma_hat(&spec, &fit.theta_hat, y, window).map_err(core)?;
    let cov = &sigma.inv_sqrt * &sigma.inv_sqrt;
    let n = window.len() as f64;
    let std_errors: Vec<f64> = (0..spec.dim()).map(|i| (cov[(i, i)] / n).sqrt()).collect();

    let sep = (g.delimiter as char).to_string();
    let mut w = g.sink.writer().runtime()?;
    writeln!(w, "{}", ["parameter", "estimate", "std_error"].join(&sep)).runtime()?;
    for ((name, est), se) in spec
        .param_names()
        .iter()
        .zip(fit.theta_hat.as_slice())
        .zip(&std_errors)
    {
        writeln!(w, "{name}{sep}{est:.6}{sep}{se:.6}").runtime()?;
    }
    w.flush().runtime()?;
    eprintln!(
        "loglik {:.6} over {} observations",
        fit.loglik,
        window.len()
    );
    g.sink
        .write_sidecar(
            "fit",
            &FitRecord {
                input,
                spec,
                window,
                seed: g.seed,
            },
            &FitSummary {
                theta_hat: fit.theta_hat.as_slice().to_vec(),
                std_errors,
                loglik: fit.loglik,
                converged: fit.converged,
                iterations: fit.iterations,
                sigma_ridge_added: sigma.ridge_added,
            },
        )
        .runtime()?;
    Ok(())
}

#[derive(Serialize)]
struct MonitorRecord<'a> {
    input: Option<&'a Path>,
    scenario: Option<&'a str>,
    replication: Option<usize>,
    spec: ModelSpec,
    monitor: &'a MonitorConfig,
    seed: u64,
}

#[derive(Serialize)]
struct MonitorSummary<'a> {
    tau: Option<usize>,
    delay: Option<usize>,
    known_change: Option<usize>,
    flagged_fits: usize,
    theta_hist: &'a [f64],
    critical_value: &'a QuantileResult,
}

fn report_stop(tau: Option<usize>, delay: Option<usize>) {
    match (tau, delay) {
        (Some(t), Some(d)) => eprintln!("change detected at k = {t} (delay {d})"),
        (Some(t), None) => eprintln!("change detected at k = {t}"),
        (None, _) => eprintln!("no change detected"),
    }
}

fn cmd_monitor(
    g: &Globals,
    input: &Path,
    known_change: Option<usize>,
    model: &ModelArgs,
    monitor: &MonitorArgs,
    quantile: &QuantileArgs,
) -> CliResult<()> {
    let spec = resolve_model(model, &g.file)?;
    let (cfg, crit) = resolve_monitor(monitor, g, &spec, quantile)?;
    let series = load_series(input, known_change)?;
    let trace = run_monitor(&spec, &series, &cfg).map_err(core)?;

    let sep = (g.delimiter as char).to_string();
    let mut w = g.sink.writer().runtime()?;
    let header = [
        "k",
        "statistic",
        "raw_max",
        "argmax_ell",
        "scanned",
        "flagged",
    ];
    writeln!(w, "{}", header.join(&sep)).runtime()?;
    for r in &trace.per_k {
        let ell = r.argmax_ell.map(|l| l.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{k}{sep}{s:.6}{sep}{raw:.6}{sep}{ell}{sep}{n}{sep}{f}",
            k = r.k,
            s = r.statistic,
            raw = r.raw_max,
            n = r.scanned,
            f = r.flagged
        )
        .runtime()?;
    }
    w.flush().runtime()?;
    report_stop(trace.tau, trace.delay);
    g.sink
        .write_sidecar(
            "monitor",
            &MonitorRecord {
                input: Some(input),
                scenario: None,
                replication: None,
                spec,
                monitor: &cfg,
                seed: g.seed,
            },
            &MonitorSummary {
                tau: trace.tau,
                delay: trace.delay,
                known_change: trace.known_change,
                flagged_fits: trace.flagged_fits,
                theta_hist: trace.theta_hist.as_slice(),
                critical_value: &crit,
            },
        )
        .runtime()?;
    Ok(())
}

fn cmd_quantiles(
    g: &Globals,
    ds: &[usize],
    horizons: &[f64],
    alphas: &[f64],
    quantile: &QuantileArgs,
) -> CliResult<()> {
    let settings = quantile_settings(quantile, g);
    let base_seed = settings.seed.unwrap_or_else(|| {
        ExperimentConfig {
            seed: g.seed,
            ..ExperimentConfig::default()
        }
        .quantile_request()
        .seed
    });
    let mut requests = Vec::new();
    for &d in ds {
        for &t in horizons {
            for &a in alphas {
                let mut req = QuantileRequest::new(d, t, a, base_seed);
                req.replications = settings.replications;
                req.grid_points = (settings.points_per_unit as f64 * t).ceil() as usize;
                req.validate().config()?;
                requests.push(req);
            }
        }
    }
    let mut results = Vec::new();
    for req in &requests {
        results.push(critical_value(req, g)?);
    }
    let sep = (g.delimiter as char).to_string();
    let mut w = g.sink.writer().runtime()?;
    let header = [
        "d",
        "horizon",
        "alpha",
        "c_alpha",
        "mc_stderr",
        "stderr_reliable",
        "grid_points",
        "replications",
    ];
    writeln!(w, "{}", header.join(&sep)).runtime()?;
    for r in &results {
        let q = &r.request;
        writeln!(
            w,
            "{}{sep}{}{sep}{}{sep}{:.6}{sep}{:.6}{sep}{}{sep}{}{sep}{}",
            q.d,
            q.horizon,
            q.alpha,
            r.c_alpha,
            r.mc_stderr,
            r.stderr_reliable,
            q.grid_points,
            q.replications
        )
        .runtime()?;
    }
    w.flush().runtime()?;
    g.sink
        .write_sidecar("quantiles", &requests, &results)
        .runtime()?;
    Ok(())
}

fn cmd_table(g: &Globals, args: &ExperimentArgs, delays: bool) -> CliResult<()> {
    let cfg = resolve_experiment(args, g)?;
    let hypotheses: &[Hypothesis] = if delays {
        &[Hypothesis::H1]
    } else {
        &[Hypothesis::H0, Hypothesis::H1]
    };
    let outcome = run_experiment(&cfg, hypotheses).map_err(core)?;
    if let Some(w) = &outcome.c_alpha.cache_warning {
        eprintln!("warning: {w}");
    }
    let table = if delays {
        outcome.delays()
    } else {
        outcome.level_power()
    };
    let w = g.sink.writer().runtime()?;
    let delim = g.delimiter as char;
    if delays {
        write_table2(&table, delim, w).runtime()?;
    } else {
        write_table1(&table, delim, w).runtime()?;
    }
    let name = if delays { "table2" } else { "table1" };
    g.sink
        .write_sidecar(name, &cfg, &(&outcome.c_alpha, &table))
        .runtime()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_detector_plot(
    g: &Globals,
    input: Option<&Path>,
    scenario: Option<&str>,
    no_change: bool,
    replication: usize,
    known_change: Option<usize>,
    model: &ModelArgs,
    monitor: &MonitorArgs,
    quantile: &QuantileArgs,
) -> CliResult<()> {
    let spec = resolve_model(model, &g.file)?;
    let (cfg, crit) = resolve_monitor(monitor, g, &spec, quantile)?;
    let series = match input {
        Some(path) => load_series(path, known_change)?,
        None => {
            let id = scenario.ok_or_else(|| config_error("give --input or --scenario"))?;
            let exp = ExperimentConfig {
                spec,
                seed: g.seed,
                horizon: cfg.horizon,
                scenarios: g
                    .file
                    .experiment
                    .scenarios
                    .clone()
                    .unwrap_or_else(countmon::Scenario::standard),
                ..ExperimentConfig::default()
            };
            let idx = exp
                .scenarios
                .iter()
                .position(|s| s.id == id)
                .ok_or_else(|| config_error(format!("unknown scenario {id:?}")))?;
            let hyp = if no_change || exp.scenarios[idx].theta1.is_none() {
                Hypothesis::H0
            } else {
                Hypothesis::H1
            };
            if !cfg.horizon.is_finite() {
                return Err(config_error("simulated runs need a finite horizon"));
            }
            simulate_replication(&exp, idx, cfg.m, replication, hyp).map_err(core)?
        }
    };
    let trace = run_monitor(&spec, &series, &cfg).map_err(core)?;
    let w = g.sink.writer().runtime()?;
    write_detector_series(&trace, g.delimiter, w).runtime()?;
    report_stop(trace.tau, trace.delay);
    g.sink
        .write_sidecar(
            "detector-plot",
            &MonitorRecord {
                input,
                scenario,
                replication: input.is_none().then_some(replication),
                spec,
                monitor: &cfg,
                seed: g.seed,
            },
            &MonitorSummary {
                tau: trace.tau,
                delay: trace.delay,
                known_change: trace.known_change,
                flagged_fits: trace.flagged_fits,
                theta_hist: trace.theta_hist.as_slice(),
                critical_value: &crit,
            },
        )
        .runtime()?;
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let g = globals(&cli)?;
    match &cli.command {
        Command::Fit {
            input,
            start,
            end,
            model,
        } => cmd_fit(&g, input, *start, *end, model),
        Command::Monitor {
            input,
            known_change,
            model,
            monitor,
            quantile,
        } => cmd_monitor(&g, input, *known_change, model, monitor, quantile),
        Command::Quantiles {
            d,
            horizon,
            alpha,
            quantile,
        } => cmd_quantiles(&g, d, horizon, alpha, quantile),
        Command::Table1 { exp } => cmd_table(&g, exp, false),
        Command::Table2 { exp } => cmd_table(&g, exp, true),
        Command::DetectorPlot {
            input,
            scenario,
            no_change,
            replication,
            known_change,
            model,
            monitor,
            quantile,
        } => cmd_detector_plot(
            &g,
            input.as_deref(),
            scenario.as_deref(),
            *no_change,
            *replication,
            *known_change,
            model,
            monitor,
            quantile,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(match f.kind {
                Kind::Config => 2,
                Kind::Data => 3,
                Kind::Runtime => 1,
            })
        }
    }
}
