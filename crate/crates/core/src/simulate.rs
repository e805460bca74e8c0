//! Trajectory generation for stationary and change-point scenarios.
//!
//! Draw `t` (counting burn-in) always uses stream `t` of the seed's
//! [`StreamRng`], so two runs with the same seed consume identical uniforms
//! at every step even when their intensities differ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ModelSpec, Theta};
use crate::rng::{poisson, StreamRng};
use crate::series::CountSeries;

pub const DEFAULT_BURNIN: usize = 500;

/// A single structural change from `theta0` to `theta1` after observation
/// `k_star`. Equal parameters encode the no-change hypothesis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChangeSpec {
    pub theta0: Theta,
    pub theta1: Theta,
    pub k_star: usize,
    pub total_len: usize,
}

impl ChangeSpec {
    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        if self.k_star == 0 || self.k_star > self.total_len {
            return Err(Error::structural(format!(
                "change index {} outside 1..={}",
                self.k_star, self.total_len
            )));
        }
        spec.check_theta(&self.theta0)?;
        spec.check_theta(&self.theta1)?;
        Ok(())
    }

    pub fn is_null(&self) -> bool {
        self.theta0 == self.theta1
    }
}

/// Intensity recursion driven by realized counts, started from an all-zero
/// past.
struct IntensityState {
    spec: ModelSpec,
    theta: Vec<f64>,
    lam_hist: Vec<f64>,
    y_hist: Vec<u64>,
    t: usize,
}

impl IntensityState {
    fn new(spec: ModelSpec, theta: &Theta) -> Self {
        let v = theta.as_slice().to_vec();
        let (p, q) = match spec {
            ModelSpec::Ingarch { p, q } => (p, q),
            ModelSpec::Intarch { q, .. } => (0, q),
        };
        let lam_star = match spec {
            ModelSpec::Ingarch { p, .. } => v[0] / (1.0 - v[1..=p].iter().sum::<f64>()),
            ModelSpec::Intarch { .. } => v[0],
        };
        Self {
            spec,
            theta: v,
            lam_hist: vec![lam_star; p.max(1)],
            y_hist: vec![0; q],
            t: 0,
        }
    }

    /// Intensity of the next observation given everything recorded so far.
    fn next_intensity(&self) -> f64 {
        let v = &self.theta;
        let t = self.t;
        match self.spec {
            ModelSpec::Ingarch { p, q } => {
                let ring = self.lam_hist.len();
                let mut lam = v[0];
                for i in 0..p {
                    lam += v[1 + i] * self.lam_hist[(t + ring - i) % ring];
                }
                for j in 0..q {
                    lam += v[1 + p + j] * self.y_hist[(t + q - j) % q] as f64;
                }
                lam
            }
            ModelSpec::Intarch { q, threshold } => {
                let mut lam = v[0];
                for k in 0..q {
                    let y = self.y_hist[(t + q - k) % q];
                    lam += v[1 + k] * y.saturating_sub(threshold) as f64
                        + v[1 + q + k] * y.min(threshold) as f64;
                }
                lam
            }
        }
    }

    fn record(&mut self, lam: f64, y: u64) {
        self.t += 1;
        let ring = self.lam_hist.len();
        self.lam_hist[self.t % ring] = lam;
        let q = self.y_hist.len();
        self.y_hist[self.t % q] = y;
    }
}

/// Draw from the stationary model, discarding `burnin` leading draws.
pub fn simulate_stationary(
    spec: &ModelSpec,
    theta: &Theta,
    n: usize,
    burnin: usize,
    seed: u64,
) -> Result<CountSeries> {
    if n == 0 {
        return Err(Error::structural("cannot simulate an empty series"));
    }
    spec.check_theta(theta)?;
    let mut state = IntensityState::new(*spec, theta);
    let mut streams = StreamRng::new(seed);
    let mut out = Vec::with_capacity(n);
    for step in 0..burnin + n {
        let lam = state.next_intensity();
        let y = poisson(streams.stream(step as u64), lam);
        state.record(lam, y);
        if step >= burnin {
            out.push(y);
        }
    }
    Ok(CountSeries::new(out))
}

/// Draw a trajectory whose intensity switches from `theta0` to `theta1`
/// after `k_star` retained observations. Post-change intensities are
/// `f_{θ₁}` evaluated on the full realized past, including the pre-change
/// and burn-in draws.
pub fn simulate_with_change(
    change: &ChangeSpec,
    spec: &ModelSpec,
    burnin: usize,
    seed: u64,
) -> Result<CountSeries> {
    change.validate(spec)?;
    let mut before = IntensityState::new(*spec, &change.theta0);
    let mut after = IntensityState::new(*spec, &change.theta1);
    let mut streams = StreamRng::new(seed);
    let mut out = Vec::with_capacity(change.total_len);
    let switch_at = burnin + change.k_star;
    for step in 0..burnin + change.total_len {
        let lam0 = before.next_intensity();
        let lam1 = after.next_intensity();
        let lam = if step < switch_at { lam0 } else { lam1 };
        let y = poisson(streams.stream(step as u64), lam);
        before.record(lam0, y);
        after.record(lam1, y);
        if step >= burnin {
            out.push(y);
        }
    }
    CountSeries::new(out).with_known_change(change.k_star)
}
