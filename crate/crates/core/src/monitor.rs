//! Sequential monitoring of a Poisson autoregression against a parameter change.
//!
//! After fitting `θ̂(T_{1,m})` and `Σ̂_m` on the historical stretch, each new
//! observation `k > m` triggers refits `θ̂(T_{ℓ,k})` for `ℓ ∈ Π_{m,k}` and the
//! scheme stops at the first `k` where `max_ℓ Ĉ_{k,ℓ} / b₀((k−ℓ)/m)` exceeds
//! the critical value.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryShape;
use crate::error::{Error, Result};
use crate::likelihood::{fit_mle, sigma_hat, FitOptions, SigmaEstimate};
use crate::models::{ModelSpec, Theta, ThetaDomain};
use crate::series::{CountSeries, Window};

/// `Π_{m,k} = {m − v_m, …, k − v_m}` as an inclusive range.
pub fn window_pi(m: usize, k: usize, v_m: usize) -> Result<std::ops::RangeInclusive<usize>> {
    if k <= m {
        return Err(Error::structural(format!(
            "monitoring index k={k} must exceed m={m}"
        )));
    }
    if v_m >= m {
        return Err(Error::structural(format!("v_m={v_m} must be below m={m}")));
    }
    Ok(m - v_m..=k - v_m)
}

/// `Ĉ_{k,ℓ} = √m · ((k−ℓ)/k) · ‖A (θ̂_window − θ̂_hist)‖₂`.
///
/// `standardizer` is the matrix `A`; the monitor passes `Σ̂_m^{1/2}`, which
/// turns the estimation error (covariance `Σ^{-1}` per unit of sample) into
/// a standard Gaussian vector.
pub fn detector(
    k: usize,
    ell: usize,
    theta_window: &Theta,
    theta_hist: &Theta,
    standardizer: &DMatrix<f64>,
    m: usize,
) -> Result<f64> {
    if ell >= k {
        return Err(Error::structural(format!("need ℓ < k, got ℓ={ell}, k={k}")));
    }
    let d = theta_hist.len();
    if theta_window.len() != d || standardizer.nrows() != d || standardizer.ncols() != d {
        return Err(Error::structural(
            "detector inputs have mismatched dimensions",
        ));
    }
    let diff = DVector::from_iterator(
        d,
        theta_window
            .as_slice()
            .iter()
            .zip(theta_hist.as_slice())
            .map(|(a, b)| a - b),
    );
    let norm = (standardizer * diff).norm();
    Ok((m as f64).sqrt() * ((k - ell) as f64 / k as f64) * norm)
}

/// `⌈m^{1/4}⌉`.
pub fn default_v_m(m: usize) -> usize {
    ((m as f64).powf(0.25).ceil() as usize).max(1)
}

/// How densely `Π_{m,k}` is scanned.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum StrideRule {
    /// Every `n`-th lag starting at `m − v_m`.
    Fixed { n: usize },
    /// Stride 1 while `m ≤ full_scan_max_m`, otherwise `⌈(k−m)/points⌉`.
    Adaptive {
        full_scan_max_m: usize,
        points: usize,
    },
}

impl Default for StrideRule {
    fn default() -> Self {
        StrideRule::Adaptive {
            full_scan_max_m: 300,
            points: 50,
        }
    }
}

impl StrideRule {
    pub fn stride(&self, m: usize, k: usize) -> usize {
        match *self {
            StrideRule::Fixed { n } => n,
            StrideRule::Adaptive {
                full_scan_max_m,
                points,
            } => {
                if m <= full_scan_max_m {
                    1
                } else {
                    (k - m).div_ceil(points).max(1)
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            StrideRule::Fixed { n } => n >= 1,
            StrideRule::Adaptive { points, .. } => points >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain("lag stride must be at least 1"))
        }
    }
}

/// Lags scanned at step `k`: every `stride`-th element of `Π_{m,k}` plus
/// both endpoints, in increasing order.
pub fn scanned_lags(m: usize, k: usize, v_m: usize, stride: usize) -> Result<Vec<usize>> {
    let range = window_pi(m, k, v_m)?;
    let (lo, hi) = (*range.start(), *range.end());
    let mut lags: Vec<usize> = (lo..=hi).step_by(stride.max(1)).collect();
    if lags.last() != Some(&hi) {
        lags.push(hi);
    }
    Ok(lags)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefitPolicy {
    /// Start `θ̂(T_{ℓ,k})` from the last estimate for the same `ℓ`.
    pub warm_start: bool,
    pub fit: FitOptions,
}

impl Default for RefitPolicy {
    fn default() -> Self {
        RefitPolicy {
            warm_start: true,
            fit: FitOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorConfig {
    pub m: usize,
    /// Closed-end factor `T`; `f64::INFINITY` monitors to the end of data.
    pub horizon: f64,
    pub v_m: usize,
    pub boundary: BoundaryShape,
    pub alpha: f64,
    pub c_alpha: f64,
    pub ell_stride: StrideRule,
    pub refit: RefitPolicy,
    /// Parameter box for every fit; `None` uses the default box for the model.
    pub domain: Option<ThetaDomain>,
    /// Keep every `(ℓ, Ĉ_{k,ℓ})` pair in the trace.
    pub record_lags: bool,
}

impl MonitorConfig {
    pub fn new(m: usize, horizon: f64, alpha: f64, c_alpha: f64) -> Self {
        MonitorConfig {
            m,
            horizon,
            v_m: default_v_m(m),
            boundary: BoundaryShape::Constant,
            alpha,
            c_alpha,
            ell_stride: StrideRule::default(),
            refit: RefitPolicy::default(),
            domain: None,
            record_lags: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::domain("historical length m must be at least 2"));
        }
        if self.v_m < 1 || (self.v_m * self.v_m) as f64 > self.m as f64 || self.v_m >= self.m {
            return Err(Error::domain(format!(
                "v_m={} must satisfy 1 ≤ v_m ≤ √m with m={}",
                self.v_m, self.m
            )));
        }
        if self.horizon.is_nan() || self.horizon <= 1.0 {
            return Err(Error::domain("horizon T must exceed 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain("alpha must lie in (0, 1)"));
        }
        if self.c_alpha.is_nan() || self.c_alpha <= 0.0 {
            return Err(Error::domain("c_alpha must be positive"));
        }
        self.ell_stride.validate()?;
        self.boundary.validate()
    }

    /// Last monitoring index `[T·m] + 1`, or `None` for open-end monitoring.
    pub fn last_k(&self) -> Option<usize> {
        self.horizon
            .is_finite()
            .then(|| (self.horizon * self.m as f64).floor() as usize + 1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagValue {
    pub ell: usize,
    /// `Ĉ_{k,ℓ}` before boundary scaling.
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: usize,
    /// `max_ℓ Ĉ_{k,ℓ} / b₀((k−ℓ)/m)`; 0 when no lag produced a usable fit.
    pub statistic: f64,
    /// `max_ℓ Ĉ_{k,ℓ}` without the boundary.
    pub raw_max: f64,
    pub argmax_ell: Option<usize>,
    pub scanned: usize,
    /// Fits at this step that did not converge.
    pub flagged: usize,
    pub all_flagged: bool,
    pub lags: Option<Vec<LagValue>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorTrace {
    pub m: usize,
    pub threshold: f64,
    pub theta_hist: Theta,
    pub per_k: Vec<StepRecord>,
    pub tau: Option<usize>,
    pub known_change: Option<usize>,
    pub delay: Option<usize>,
    pub flagged_fits: usize,
}

impl MonitorTrace {
    pub fn detected(&self) -> bool {
        self.tau.is_some()
    }
}

/// Online monitor fed one count at a time.
#[derive(Debug)]
pub struct Monitor {
    spec: ModelSpec,
    config: MonitorConfig,
    domain: ThetaDomain,
    counts: Vec<u64>,
    theta_hist: Theta,
    sigma: SigmaEstimate,
    cache: HashMap<usize, Theta>,
    per_k: Vec<StepRecord>,
    tau: Option<usize>,
    flagged_fits: usize,
}

impl Monitor {
    /// Fits the historical stretch `historical` (length `m`).
    pub fn new(spec: &ModelSpec, historical: &[u64], config: MonitorConfig) -> Result<Self> {
        config.validate()?;
        spec.validate()?;
        if historical.len() != config.m {
            return Err(Error::structural(format!(
                "expected {} historical observations, got {}",
                config.m,
                historical.len()
            )));
        }
        let domain = config
            .domain
            .clone()
            .unwrap_or_else(|| ThetaDomain::for_spec(spec));
        let window = Window::full(config.m)?;
        let hist = fit_mle(spec, historical, window, &domain, None, &config.refit.fit)?;
        let sigma = sigma_hat(spec, &hist.theta_hat, historical, window)?;
        Ok(Monitor {
            spec: *spec,
            config,
            domain,
            counts: historical.to_vec(),
            theta_hist: hist.theta_hat,
            sigma,
            cache: HashMap::new(),
            per_k: Vec::new(),
            tau: None,
            flagged_fits: 0,
        })
    }

    pub fn theta_hist(&self) -> &Theta {
        &self.theta_hist
    }

    pub fn sigma(&self) -> &SigmaEstimate {
        &self.sigma
    }

    pub fn tau(&self) -> Option<usize> {
        self.tau
    }

    pub fn records(&self) -> &[StepRecord] {
        &self.per_k
    }

    /// True once the scheme has stopped or the closed-end horizon is passed.
    pub fn finished(&self) -> bool {
        self.tau.is_some()
            || self
                .config
                .last_k()
                .is_some_and(|last| self.counts.len() >= last)
    }

    /// Appends observation `k = len + 1` and scans it if monitoring is still
    /// active. Returns the record for `k` when a scan took place.
    pub fn push(&mut self, count: u64) -> Result<Option<&StepRecord>> {
        if self.finished() {
            self.counts.push(count);
            return Ok(None);
        }
        self.counts.push(count);
        let record = self.scan(self.counts.len())?;
        if record.statistic > self.config.c_alpha {
            self.tau = Some(record.k);
        }
        self.per_k.push(record);
        Ok(self.per_k.last())
    }

    fn scan(&mut self, k: usize) -> Result<StepRecord> {
        let cfg = &self.config;
        let m = cfg.m;
        let stride = cfg.ell_stride.stride(m, k);
        let d = self.spec.dim();
        let lags: Vec<usize> = scanned_lags(m, k, cfg.v_m, stride)?
            .into_iter()
            .filter(|&ell| k - ell + 1 >= d)
            .collect();

        let y = &self.counts[..k];
        let fits: Vec<Option<Theta>> = lags
            .par_iter()
            .map(|&ell| {
                let init = if cfg.refit.warm_start {
                    self.cache.get(&ell).unwrap_or(&self.theta_hist)
                } else {
                    &self.theta_hist
                };
                let window = Window::new(ell, k).ok()?;
                fit_mle(
                    &self.spec,
                    y,
                    window,
                    &self.domain,
                    Some(init),
                    &cfg.refit.fit,
                )
                .ok()
                .filter(|f| f.converged)
                .map(|f| f.theta_hat)
            })
            .collect();

        let mut statistic = 0.0f64;
        let mut raw_max = 0.0f64;
        let mut argmax_ell = None;
        let mut flagged = 0;
        let mut values = Vec::new();
        for (&ell, fit) in lags.iter().zip(fits) {
            let theta = match fit {
                Some(t) => {
                    self.cache.insert(ell, t);
                    &self.cache[&ell]
                }
                None => {
                    flagged += 1;
                    match self.cache.get(&ell) {
                        Some(t) => t,
                        None => continue,
                    }
                }
            };
            let c = detector(k, ell, theta, &self.theta_hist, &self.sigma.sqrt, m)?;
            let scaled = c / cfg.boundary.eval((k - ell) as f64 / m as f64);
            raw_max = raw_max.max(c);
            if argmax_ell.is_none() || scaled > statistic {
                statistic = scaled;
                argmax_ell = Some(ell);
            }
            if cfg.record_lags {
                values.push(LagValue { ell, value: c });
            }
        }
        self.flagged_fits += flagged;
        Ok(StepRecord {
            k,
            statistic,
            raw_max,
            argmax_ell,
            scanned: lags.len(),
            flagged,
            all_flagged: !lags.is_empty() && flagged == lags.len(),
            lags: cfg.record_lags.then_some(values),
        })
    }

    pub fn trace(&self, known_change: Option<usize>) -> MonitorTrace {
        let delay = match (self.tau, known_change) {
            (Some(tau), Some(ks)) if tau > ks => Some(tau - ks),
            _ => None,
        };
        MonitorTrace {
            m: self.config.m,
            threshold: self.config.c_alpha,
            theta_hist: self.theta_hist.clone(),
            per_k: self.per_k.clone(),
            tau: self.tau,
            known_change,
            delay,
            flagged_fits: self.flagged_fits,
        }
    }
}

/// Batch monitoring of `y`: historical fit on `1..=m`, then scans
/// `k = m+1 … min(n, [T·m]+1)` until the first crossing.
pub fn run_monitor(
    spec: &ModelSpec,
    y: &CountSeries,
    config: &MonitorConfig,
) -> Result<MonitorTrace> {
    config.validate()?;
    let counts = y.counts();
    if counts.len() <= config.m {
        return Err(Error::structural(format!(
            "series of length {} leaves nothing to monitor after m={}",
            counts.len(),
            config.m
        )));
    }
    let mut monitor = Monitor::new(spec, &counts[..config.m], config.clone())?;
    for &c in &counts[config.m..] {
        if monitor.finished() {
            break;
        }
        monitor.push(c)?;
    }
    Ok(monitor.trace(y.known_change()))
}
