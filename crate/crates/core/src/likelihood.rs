//! Truncated conditional Poisson likelihood, its maximizer over a compact
//! domain, and the information-matrix estimate.
//!
//! For a window `T = {start..=end}` the log-likelihood is
//! `L̂(T, θ) = Σ_{t∈T} Y_t ln λ̂_t(θ) − λ̂_t(θ)`, where `λ̂_t` conditions on the
//! actual counts back to observation 1 and on zeros before that, whatever
//! the window start.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{visit_intensities, DerivOrder, ModelSpec, Theta, ThetaDomain};
use crate::optim::{self, Evaluation, Objective};
use crate::series::Window;

/// Minimum eigenvalue kept in [`SigmaEstimate`]; smaller ones are lifted by
/// a ridge.
pub const SIGMA_EIGEN_FLOOR: f64 = 1e-8;

struct Terms {
    loglik: f64,
    score: Vec<f64>,
    /// Expected information `Σ (1/λ) ∂λ ∂λ'`.
    fisher: Vec<f64>,
    /// Observed information `−∇² L̂`.
    observed: Vec<f64>,
}

fn poisson_term(y: f64, lam: f64) -> f64 {
    if y == 0.0 {
        -lam
    } else {
        y * lam.ln() - lam
    }
}

fn terms(spec: &ModelSpec, theta: &Theta, y: &[u64], window: Window, order: DerivOrder) -> Terms {
    let d = spec.dim();
    let mut out = Terms {
        loglik: 0.0,
        score: vec![0.0; if order >= DerivOrder::First { d } else { 0 }],
        fisher: vec![
            0.0;
            if order >= DerivOrder::Second {
                d * d
            } else {
                0
            }
        ],
        observed: vec![
            0.0;
            if order >= DerivOrder::Second {
                d * d
            } else {
                0
            }
        ],
    };
    visit_intensities(spec, theta, y, window, order, |t, lam, grad, hess| {
        let yt = y[t - 1] as f64;
        out.loglik += poisson_term(yt, lam);
        if order >= DerivOrder::First {
            let resid = yt / lam - 1.0;
            for (s, g) in out.score.iter_mut().zip(grad) {
                *s += resid * g;
            }
        }
        if order >= DerivOrder::Second {
            let inv = 1.0 / lam;
            let w = yt * inv * inv;
            let resid = yt * inv - 1.0;
            for i in 0..d {
                for j in i..d {
                    let gg = grad[i] * grad[j];
                    out.fisher[i * d + j] += inv * gg;
                    out.observed[i * d + j] += w * gg - resid * hess[i * d + j];
                }
            }
        }
    });
    if order >= DerivOrder::Second {
        for i in 0..d {
            for j in 0..i {
                out.fisher[i * d + j] = out.fisher[j * d + i];
                out.observed[i * d + j] = out.observed[j * d + i];
            }
        }
    }
    out
}

fn check_inputs(spec: &ModelSpec, theta: &Theta, y: &[u64], window: Window) -> Result<()> {
    spec.check_theta(theta)?;
    window.check_within(y.len())
}

/// `L̂(T, θ)` over `window`.
pub fn loglik(spec: &ModelSpec, theta: &Theta, y: &[u64], window: Window) -> Result<f64> {
    check_inputs(spec, theta, y, window)?;
    Ok(terms(spec, theta, y, window, DerivOrder::Value).loglik)
}

/// Gradient of [`loglik`] in θ.
pub fn score(spec: &ModelSpec, theta: &Theta, y: &[u64], window: Window) -> Result<Vec<f64>> {
    check_inputs(spec, theta, y, window)?;
    Ok(terms(spec, theta, y, window, DerivOrder::First).score)
}

/// Observed information `−∇² L̂(T, θ)`, row-major.
pub fn observed_information(
    spec: &ModelSpec,
    theta: &Theta,
    y: &[u64],
    window: Window,
) -> Result<Vec<f64>> {
    check_inputs(spec, theta, y, window)?;
    Ok(terms(spec, theta, y, window, DerivOrder::Second).observed)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Stop when the projected gradient of the per-observation
    /// log-likelihood has ∞-norm at most this.
    pub tol: f64,
    pub max_iter: usize,
    /// Distance to the contraction face inside which the barrier is active.
    pub barrier_width: f64,
    pub barrier_weight: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 200,
            barrier_width: 1e-3,
            barrier_weight: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta_hat: Theta,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    /// ∞-norm of the projected gradient of `L̂ / |T|` at `theta_hat`.
    pub grad_norm: f64,
}

/// Per-observation likelihood plus a barrier on the contraction slack
/// `s = limit − contraction_norm(θ)`:
/// `μ (s/δ − 1 − ln(s/δ))` for `s < δ`, zero otherwise (C¹ at `s = δ`).
struct MleObjective<'a> {
    spec: &'a ModelSpec,
    y: &'a [u64],
    window: Window,
    limit: f64,
    width: f64,
    weight: f64,
    scale: f64,
}

impl MleObjective<'_> {
    /// Contraction norm and its (sub)gradient.
    fn contraction(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let d = x.len();
        let mut grad = vec![0.0; d];
        let norm = match *self.spec {
            ModelSpec::Ingarch { .. } => {
                grad[1..].iter_mut().for_each(|g| *g = 1.0);
                x[1..].iter().sum()
            }
            ModelSpec::Intarch { q, .. } => {
                let mut s = 0.0;
                for k in 1..=q {
                    if x[k] >= x[q + k] {
                        grad[k] = 1.0;
                        s += x[k];
                    } else {
                        grad[q + k] = 1.0;
                        s += x[q + k];
                    }
                }
                s
            }
        };
        (norm, grad)
    }

    fn barrier(&self, slack: f64) -> (f64, f64, f64) {
        if slack >= self.width {
            return (0.0, 0.0, 0.0);
        }
        let r = slack / self.width;
        let mu = self.weight;
        (
            mu * (r - 1.0 - r.ln()),
            mu * (1.0 / self.width - 1.0 / slack),
            mu / (slack * slack),
        )
    }
}

impl Objective for MleObjective<'_> {
    fn value(&self, x: &[f64]) -> Option<f64> {
        let (norm, _) = self.contraction(x);
        let slack = self.limit - norm;
        if slack <= 0.0 {
            return None;
        }
        let theta = Theta::new(x.to_vec());
        let t = terms(self.spec, &theta, self.y, self.window, DerivOrder::Value);
        let v = t.loglik * self.scale - self.barrier(slack).0;
        v.is_finite().then_some(v)
    }

    fn evaluate(&self, x: &[f64]) -> Option<Evaluation> {
        let d = x.len();
        let (norm, cgrad) = self.contraction(x);
        let slack = self.limit - norm;
        if slack <= 0.0 {
            return None;
        }
        let theta = Theta::new(x.to_vec());
        let t = terms(self.spec, &theta, self.y, self.window, DerivOrder::Second);
        let (pen, dpen, d2pen) = self.barrier(slack);
        let value = t.loglik * self.scale - pen;
        // d(−P)/dθ = P'(s) ∂c/∂θ since s = limit − c.
        let grad: Vec<f64> = t
            .score
            .iter()
            .zip(&cgrad)
            .map(|(s, c)| s * self.scale + dpen * c)
            .collect();
        let mut observed = t.observed;
        let mut fisher = t.fisher;
        for i in 0..d {
            for j in 0..d {
                let b = d2pen * cgrad[i] * cgrad[j];
                observed[i * d + j] = observed[i * d + j] * self.scale + b;
                fisher[i * d + j] = fisher[i * d + j] * self.scale + b;
            }
        }
        // Lift an exactly singular expected information so the fallback
        // direction always exists.
        let trace = (0..d).map(|i| fisher[i * d + i]).sum::<f64>();
        let ridge = 1e-10 * trace.max(1e-300) / d as f64;
        for i in 0..d {
            fisher[i * d + i] += ridge;
        }
        (value.is_finite() && grad.iter().all(|g| g.is_finite())).then_some(Evaluation {
            value,
            grad,
            curvatures: vec![observed, fisher],
        })
    }
}

/// Method-of-moments start: intercept from the window mean with autoregressive
/// mass 0.1 split evenly across the coefficients.
pub fn default_init(spec: &ModelSpec, y: &[u64], window: Window) -> Theta {
    let slice = &y[window.start() - 1..window.end()];
    let mean = slice.iter().sum::<u64>() as f64 / slice.len() as f64;
    let d = spec.dim();
    let mass = 0.1;
    let mut v = vec![mass / (d - 1) as f64; d];
    let persistence = match *spec {
        ModelSpec::Ingarch { .. } => mass,
        // Σ max(φ⁺, φ⁻) with equal halves.
        ModelSpec::Intarch { .. } => mass / 2.0,
    };
    v[0] = mean * (1.0 - persistence);
    Theta::new(v)
}

/// Move `theta` strictly inside `domain`: clamp to the box, then shrink the
/// autoregressive block until the contraction constraint has room.
fn interior_start(spec: &ModelSpec, theta: &Theta, domain: &ThetaDomain, width: f64) -> Vec<f64> {
    let lo = domain.lower();
    let hi = domain.upper();
    let mut x: Vec<f64> = theta
        .as_slice()
        .iter()
        .zip(lo.iter().zip(hi))
        .map(|(&v, (&l, &h))| {
            let v = if v.is_finite() { v } else { 0.5 * (l + h) };
            let pad = 1e-9 * (h - l);
            v.clamp(l + pad, h - pad)
        })
        .collect();
    let target = domain.contraction_limit() - 2.0 * width;
    let lo_sum: f64 = lo[1..].iter().sum();
    let norm = crate::models::contraction_norm(spec, &Theta::new(x.clone())).unwrap_or(0.0);
    if norm > target {
        let goal = if target > lo_sum {
            target
        } else {
            0.5 * (lo_sum + domain.contraction_limit())
        };
        // Shrinking toward the lower corner is linear in the AR block, so the
        // contraction norm shrinks at least proportionally.
        let f = ((goal - lo_sum) / (norm - lo_sum).max(1e-300)).clamp(0.0, 1.0);
        for i in 1..x.len() {
            x[i] = lo[i] + f * (x[i] - lo[i]);
        }
    }
    x
}

/// `θ̂(T) = argmax_{θ ∈ Θ} L̂(T, θ)`.
pub fn fit_mle(
    spec: &ModelSpec,
    y: &[u64],
    window: Window,
    domain: &ThetaDomain,
    init: Option<&Theta>,
    opts: &FitOptions,
) -> Result<FitResult> {
    spec.validate()?;
    window.check_within(y.len())?;
    let d = spec.dim();
    if domain.dim() != d {
        return Err(Error::structural(format!(
            "domain has dimension {}, model needs {d}",
            domain.dim()
        )));
    }
    if window.len() < d {
        return Err(Error::structural(format!(
            "window of length {} is shorter than the parameter dimension {d}",
            window.len()
        )));
    }
    if let Some(t) = init {
        if t.len() != d {
            return Err(Error::structural("initial value has the wrong dimension"));
        }
    }
    let start = match init {
        Some(t) => t.clone(),
        None => default_init(spec, y, window),
    };
    let x0 = interior_start(spec, &start, domain, opts.barrier_width);
    let objective = MleObjective {
        spec,
        y,
        window,
        limit: domain.contraction_limit(),
        width: opts.barrier_width,
        weight: opts.barrier_weight,
        scale: 1.0 / window.len() as f64,
    };
    let out = optim::maximize(
        &objective,
        x0,
        domain.lower(),
        domain.upper(),
        optim::Settings {
            tol: opts.tol,
            max_iter: opts.max_iter,
        },
    );
    let theta_hat = Theta::new(out.x);
    let loglik = terms(spec, &theta_hat, y, window, DerivOrder::Value).loglik;
    Ok(FitResult {
        theta_hat,
        loglik,
        converged: out.converged,
        iterations: out.iterations,
        grad_norm: out.grad_norm,
    })
}

/// Information-matrix estimate with its symmetric square root and inverse
/// square root.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaEstimate {
    /// `Σ̂ + ridge·I`.
    pub sigma: DMatrix<f64>,
    pub sqrt: DMatrix<f64>,
    pub inv_sqrt: DMatrix<f64>,
    /// Smallest eigenvalue before any ridge.
    pub min_eigenvalue: f64,
    pub ridge_added: f64,
}

/// `Σ̂ = (1/|T|) Σ_{t∈T} (1/λ̂_t) ∂λ̂_t ∂λ̂_t'` at `theta_hat`.
pub fn sigma_hat(
    spec: &ModelSpec,
    theta_hat: &Theta,
    y: &[u64],
    window: Window,
) -> Result<SigmaEstimate> {
    check_inputs(spec, theta_hat, y, window)?;
    let d = spec.dim();
    let mut acc = DMatrix::<f64>::zeros(d, d);
    visit_intensities(
        spec,
        theta_hat,
        y,
        window,
        DerivOrder::First,
        |_, lam, grad, _| {
            let inv = 1.0 / lam;
            for i in 0..d {
                for j in i..d {
                    acc[(i, j)] += inv * grad[i] * grad[j];
                }
            }
        },
    );
    let n = window.len() as f64;
    for i in 0..d {
        for j in i..d {
            let v = acc[(i, j)] / n;
            acc[(i, j)] = v;
            acc[(j, i)] = v;
        }
    }
    Ok(symmetric_roots(acc))
}

pub(crate) fn symmetric_roots(sigma: DMatrix<f64>) -> SigmaEstimate {
    let d = sigma.nrows();
    let eig = SymmetricEigen::new(sigma.clone());
    let min_eigenvalue = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let ridge_added = if min_eigenvalue < SIGMA_EIGEN_FLOOR {
        SIGMA_EIGEN_FLOOR - min_eigenvalue
    } else {
        0.0
    };
    let vals: Vec<f64> = eig.eigenvalues.iter().map(|v| v + ridge_added).collect();
    let v = &eig.eigenvectors;
    let build = |f: &dyn Fn(f64) -> f64| {
        let mut m = DMatrix::<f64>::zeros(d, d);
        for (k, &lam) in vals.iter().enumerate() {
            let s = f(lam);
            let col = v.column(k);
            for i in 0..d {
                for j in 0..d {
                    m[(i, j)] += s * col[i] * col[j];
                }
            }
        }
        (&m + m.transpose()) * 0.5
    };
    let sqrt = build(&|l: f64| l.sqrt());
    let inv_sqrt = build(&|l: f64| 1.0 / l.sqrt());
    let mut ridged = sigma;
    for i in 0..d {
        ridged[(i, i)] += ridge_added;
    }
    SigmaEstimate {
        sigma: ridged,
        sqrt,
        inv_sqrt,
        min_eigenvalue,
        ridge_added,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::simulate_stationary;

    fn ingarch11() -> ModelSpec {
        ModelSpec::ingarch(1, 1).unwrap()
    }

    #[test]
    fn zero_counts_give_minus_total_intensity() {
        let s = ingarch11();
        let th = Theta::from([1.0, 0.2, 0.15]);
        let y = [0u64; 6];
        let w = Window::new(2, 6).unwrap();
        let ll = loglik(&s, &th, &y, w).unwrap();
        // All intensities sit at the fixpoint 1.25.
        assert!((ll + 5.0 * 1.25).abs() < 1e-12);
    }

    #[test]
    fn hand_arithmetic_window() {
        let s = ingarch11();
        let th = Theta::from([1.0, 0.2, 0.15]);
        let ll = loglik(&s, &th, &[3, 1, 2], Window::new(2, 3).unwrap()).unwrap();
        let want = 1.70f64.ln() - 1.70 + 2.0 * 1.49f64.ln() - 1.49;
        assert!((ll - want).abs() < 1e-12);
        assert!((ll + 1.8618).abs() < 1e-4);
    }

    #[test]
    fn unit_intensity_window() {
        let s = ingarch11();
        let y = [5, 0, 3, 9, 2, 2, 1];
        let ll = loglik(
            &s,
            &Theta::from([1.0, 0.0, 0.0]),
            &y,
            Window::new(3, 7).unwrap(),
        )
        .unwrap();
        assert!((ll + 5.0).abs() < 1e-15);
    }

    #[test]
    fn score_vanishes_when_counts_equal_intensities() {
        // With α₁ = β₁ = 0 the intensity is constant at α₀; integer α₀
        // makes Y_t = λ̂_t attainable.
        let s = ingarch11();
        let y = [3u64; 12];
        let g = score(
            &s,
            &Theta::from([3.0, 0.0, 0.0]),
            &y,
            Window::full(12).unwrap(),
        )
        .unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-12), "{g:?}");
    }

    #[test]
    fn score_first_observation_fixpoint_derivative() {
        let s = ingarch11();
        let (a0, a1) = (1.0, 0.2);
        let th = Theta::from([a0, a1, 0.15]);
        let y = [4u64, 1];
        let g = score(&s, &th, &y, Window::new(1, 1).unwrap()).unwrap();
        let lam1 = a0 / (1.0 - a1);
        let r = 4.0 / lam1 - 1.0;
        let want = [r / (1.0 - a1), r * a0 / (1.0 - a1).powi(2), 0.0];
        for (a, b) in g.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn likelihood_is_additive_over_adjacent_windows() {
        let s = ModelSpec::ingarch(1, 2).unwrap();
        let th = Theta::from([0.8, 0.3, 0.2, 0.1]);
        let y = simulate_stationary(&s, &th, 200, 50, 1).unwrap();
        let y = y.counts();
        let a = loglik(&s, &th, y, Window::new(10, 80).unwrap()).unwrap();
        let b = loglik(&s, &th, y, Window::new(81, 200).unwrap()).unwrap();
        let c = loglik(&s, &th, y, Window::new(10, 200).unwrap()).unwrap();
        assert!((a + b - c).abs() <= 1e-12 * c.abs());
    }

    #[test]
    fn fit_rejects_short_window() {
        let s = ingarch11();
        let y = [1u64, 2, 3, 4];
        let dom = ThetaDomain::for_spec(&s);
        let err = fit_mle(
            &s,
            &y,
            Window::new(1, 2).unwrap(),
            &dom,
            None,
            &FitOptions::default(),
        );
        assert!(matches!(err, Err(Error::Structural(_))));
    }

    #[test]
    fn poisson_mean_is_mle_when_feedback_is_pinned() {
        let s = ModelSpec::ingarch(0, 1).unwrap();
        let y = simulate_stationary(&s, &Theta::from([3.0, 0.0]), 500, 0, 2).unwrap();
        let y = y.counts();
        // Pin β₁ to [0, 1e-12].
        let dom = ThetaDomain::new(vec![1e-3, 0.0], vec![100.0, 1e-12], 0.02, 1e-3).unwrap();
        let fit = fit_mle(
            &s,
            y,
            Window::full(500).unwrap(),
            &dom,
            None,
            &FitOptions::default(),
        )
        .unwrap();
        let mean = y.iter().sum::<u64>() as f64 / 500.0;
        assert!(fit.converged);
        assert!(
            (fit.theta_hat[0] - mean).abs() < 1e-5,
            "{:?} vs {mean}",
            fit.theta_hat
        );
    }

    #[test]
    fn fit_is_deterministic_and_warm_start_is_honoured() {
        let s = ingarch11();
        let th = Theta::from([1.0, 0.2, 0.15]);
        let y = simulate_stationary(&s, &th, 800, 500, 3).unwrap();
        let w = Window::full(800).unwrap();
        let dom = ThetaDomain::for_spec(&s);
        let opts = FitOptions::default();
        let a = fit_mle(&s, y.counts(), w, &dom, None, &opts).unwrap();
        let b = fit_mle(&s, y.counts(), w, &dom, None, &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.converged && a.grad_norm <= 1e-6);
        let warm = fit_mle(&s, y.counts(), w, &dom, Some(&a.theta_hat), &opts).unwrap();
        assert!(warm.iterations <= 1);
        assert!(warm.theta_hat.max_abs_diff(&a.theta_hat) < 1e-6);
    }

    #[test]
    fn all_zero_window_goes_to_the_floor() {
        let s = ingarch11();
        let y = [0u64; 40];
        let dom = ThetaDomain::for_spec(&s);
        let fit = fit_mle(
            &s,
            &y,
            Window::full(40).unwrap(),
            &dom,
            None,
            &FitOptions::default(),
        )
        .unwrap();
        assert!(fit.converged);
        assert!((fit.theta_hat[0] - dom.lower()[0]).abs() < 1e-12);
    }

    #[test]
    fn intarch_fit_recovers_parameters() {
        let s = ModelSpec::intarch(1, 3).unwrap();
        let th = Theta::from([1.5, 0.3, 0.5]);
        let y = simulate_stationary(&s, &th, 5_000, 200, 4).unwrap();
        let dom = ThetaDomain::for_spec(&s);
        let fit = fit_mle(
            &s,
            y.counts(),
            Window::full(5_000).unwrap(),
            &dom,
            None,
            &FitOptions::default(),
        )
        .unwrap();
        assert!(fit.converged);
        assert!(fit.theta_hat.max_abs_diff(&th) < 0.2, "{:?}", fit.theta_hat);
    }

    #[test]
    fn sigma_for_constant_intensity() {
        let s = ingarch11();
        let mu = 2.5;
        let y = [1u64, 4, 0, 3, 2, 5, 2];
        let est = sigma_hat(
            &s,
            &Theta::from([mu, 0.0, 0.0]),
            &y,
            Window::full(7).unwrap(),
        )
        .unwrap();
        // Gradient is (1, μ, Y_{t−1}) with Y_0 = 0.
        let n = 7.0;
        assert!((est.sigma[(0, 0)] - est.ridge_added - 1.0 / mu).abs() < 1e-12);
        assert!((est.sigma[(0, 1)] - 1.0).abs() < 1e-12);
        let ylag_sum: f64 = y[..6].iter().map(|&v| v as f64).sum();
        assert!((est.sigma[(0, 2)] - ylag_sum / (n * mu)).abs() < 1e-12);
        // The first two gradient components are collinear, so Σ̂ is singular.
        assert!(est.ridge_added > 0.0);
        let id = &est.inv_sqrt * &est.sigma * &est.inv_sqrt;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - want).abs() < 1e-6, "{id}");
            }
        }
    }

    #[test]
    fn sigma_roots_are_consistent() {
        let s = ingarch11();
        let th = Theta::from([1.0, 0.2, 0.15]);
        let y = simulate_stationary(&s, &th, 2_000, 500, 5).unwrap();
        let est = sigma_hat(&s, &th, y.counts(), Window::full(2_000).unwrap()).unwrap();
        assert_eq!(est.ridge_added, 0.0);
        let sym = (&est.sigma - est.sigma.transpose()).amax();
        assert!(sym <= 1e-12);
        let id = &est.inv_sqrt * &est.sigma * &est.inv_sqrt;
        assert!((id - DMatrix::<f64>::identity(3, 3)).amax() < 1e-8);
        let back = &est.sqrt * &est.sqrt;
        assert!((back - &est.sigma).amax() < 1e-10);
    }
}
