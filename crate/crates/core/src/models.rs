//! Poisson autoregressive intensity families.
//!
//! Two families are supported:
//!
//! * INGARCH(p, q): `λ_t = α₀ + Σ_{i≤p} α_i λ_{t−i} + Σ_{j≤q} β_j Y_{t−j}`,
//!   parameter layout `(α₀, α₁..α_p, β₁..β_q)`.
//! * INTARCH(q, ℓ): `λ_t = φ₀ + Σ_{k≤q} φ⁺_k max(Y_{t−k} − ℓ, 0) + φ⁻_k min(Y_{t−k}, ℓ)`,
//!   parameter layout `(φ₀, φ⁺₁..φ⁺_q, φ⁻₁..φ⁻_q)`; the threshold ℓ is fixed.
//!
//! Intensities are always the truncated-past values `f_θ(Y_{t−1}, …, Y_1, 0, 0, …)`.
//! For INGARCH this is reproduced by starting the latent recursion at the
//! no-data fixpoint `α₀ / (1 − Σα_i)`, which makes the recursion identical to
//! the linear expansion `ψ₀ + Σ_k ψ_k Y_{t−k}` (see [`psi_coefficients`]).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::Window;

pub const DEFAULT_CONTRACTION_MARGIN: f64 = 0.02;
pub const DEFAULT_INTENSITY_FLOOR: f64 = 1e-3;
pub const DEFAULT_INTERCEPT_CAP: f64 = 1e3;

/// Intensity family and its structural hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ModelSpec {
    Ingarch { p: usize, q: usize },
    Intarch { q: usize, threshold: u64 },
}

impl ModelSpec {
    pub fn ingarch(p: usize, q: usize) -> Result<Self> {
        let spec = Self::Ingarch { p, q };
        spec.validate()?;
        Ok(spec)
    }

    pub fn intarch(q: usize, threshold: u64) -> Result<Self> {
        let spec = Self::Intarch { q, threshold };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let q = match *self {
            Self::Ingarch { q, .. } | Self::Intarch { q, .. } => q,
        };
        if q == 0 {
            return Err(Error::structural(format!(
                "{} needs at least one count lag (q >= 1)",
                self.family_name()
            )));
        }
        Ok(())
    }

    /// Parameter dimension `d`.
    pub fn dim(&self) -> usize {
        match *self {
            Self::Ingarch { p, q } => 1 + p + q,
            Self::Intarch { q, .. } => 1 + 2 * q,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Self::Ingarch { .. } => "INGARCH",
            Self::Intarch { .. } => "INTARCH",
        }
    }

    /// Coordinate names in parameter-vector order.
    pub fn param_names(&self) -> Vec<String> {
        match *self {
            Self::Ingarch { p, q } => std::iter::once("alpha0".to_string())
                .chain((1..=p).map(|i| format!("alpha{i}")))
                .chain((1..=q).map(|j| format!("beta{j}")))
                .collect(),
            Self::Intarch { q, .. } => std::iter::once("phi0".to_string())
                .chain((1..=q).map(|k| format!("phi_plus{k}")))
                .chain((1..=q).map(|k| format!("phi_minus{k}")))
                .collect(),
        }
    }

    /// Check that `theta` is usable for intensity evaluation: right length,
    /// finite, positive intercept, nonnegative coefficients, contraction < 1.
    pub fn check_theta(&self, theta: &Theta) -> Result<()> {
        self.check_dim(theta)?;
        let v = theta.as_slice();
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::domain(format!("theta[{i}] is not finite")));
        }
        if v[0] <= 0.0 {
            return Err(Error::domain(format!("intercept {} must be > 0", v[0])));
        }
        if let Some(i) = v[1..].iter().position(|&x| x < 0.0) {
            return Err(Error::domain(format!(
                "coefficient theta[{}] = {} is negative",
                i + 1,
                v[i + 1]
            )));
        }
        let c = contraction_norm(self, theta)?;
        if c >= 1.0 {
            return Err(Error::domain(format!("contraction norm {c} >= 1")));
        }
        Ok(())
    }

    fn check_dim(&self, theta: &Theta) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::structural(format!(
                "{} expects {} parameters, got {}",
                self.family_name(),
                self.dim(),
                theta.len()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Ingarch { p, q } => write!(f, "INGARCH({p},{q})"),
            Self::Intarch { q, threshold } => write!(f, "INTARCH({q}; threshold {threshold})"),
        }
    }
}

/// A parameter point in the layout of its [`ModelSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Theta(Vec<f64>);

impl Theta {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn intercept(&self) -> f64 {
        self.0[0]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Componentwise maximum absolute difference.
    pub fn max_abs_diff(&self, other: &Theta) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl From<Vec<f64>> for Theta {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

impl<const N: usize> From<[f64; N]> for Theta {
    fn from(values: [f64; N]) -> Self {
        Self(values.to_vec())
    }
}

impl std::ops::Index<usize> for Theta {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Lipschitz-coefficient sum of the intensity map in the past counts.
///
/// INGARCH: `Σα_i + Σβ_j`. INTARCH: `Σ_k max(φ⁺_k, φ⁻_k)`.
pub fn contraction_norm(spec: &ModelSpec, theta: &Theta) -> Result<f64> {
    spec.check_dim(theta)?;
    let v = theta.as_slice();
    Ok(match *spec {
        ModelSpec::Ingarch { .. } => v[1..].iter().sum(),
        ModelSpec::Intarch { q, .. } => (0..q).map(|k| v[1 + k].max(v[1 + q + k])).sum(),
    })
}

/// Compact parameter region: a box intersected with the contraction
/// constraint `contraction_norm(θ) ≤ 1 − contraction_margin`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
    contraction_margin: f64,
    intensity_floor: f64,
}

impl ThetaDomain {
    pub fn new(
        lower: Vec<f64>,
        upper: Vec<f64>,
        contraction_margin: f64,
        intensity_floor: f64,
    ) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::structural(
                "domain bounds must have equal, nonzero length",
            ));
        }
        if !(intensity_floor > 0.0 && intensity_floor.is_finite()) {
            return Err(Error::structural("intensity floor must be finite and > 0"));
        }
        if !(contraction_margin > 0.0 && contraction_margin < 1.0) {
            return Err(Error::structural("contraction margin must lie in (0, 1)"));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::structural(format!(
                    "bound {i}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        if lower[0] < intensity_floor {
            return Err(Error::structural(format!(
                "intercept lower bound {} is below the intensity floor {intensity_floor}",
                lower[0]
            )));
        }
        if lower[1..].iter().any(|&x| x < 0.0) {
            return Err(Error::structural("coefficient lower bounds must be >= 0"));
        }
        let domain = Self {
            lower,
            upper,
            contraction_margin,
            intensity_floor,
        };
        if domain.lower[1..].iter().sum::<f64>() >= 1.0 - contraction_margin {
            // The lower corner must satisfy the contraction constraint or the
            // region has no interior.
            return Err(Error::structural("domain has empty interior"));
        }
        Ok(domain)
    }

    /// Default domain: intercept in `[c̲, 1000]`, coefficients in `[0, 1 − ε]`,
    /// with `ε = 0.02` and `c̲ = 1e−3`.
    pub fn for_spec(spec: &ModelSpec) -> Self {
        Self::with_margins(spec, DEFAULT_CONTRACTION_MARGIN, DEFAULT_INTENSITY_FLOOR)
            .expect("default margins are valid")
    }

    pub fn with_margins(
        spec: &ModelSpec,
        contraction_margin: f64,
        intensity_floor: f64,
    ) -> Result<Self> {
        let d = spec.dim();
        let mut lower = vec![0.0; d];
        let mut upper = vec![1.0 - contraction_margin; d];
        lower[0] = intensity_floor;
        upper[0] = DEFAULT_INTERCEPT_CAP.max(2.0 * intensity_floor);
        Self::new(lower, upper, contraction_margin, intensity_floor)
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contraction_margin(&self) -> f64 {
        self.contraction_margin
    }

    pub fn intensity_floor(&self) -> f64 {
        self.intensity_floor
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Largest admissible contraction norm.
    pub fn contraction_limit(&self) -> f64 {
        1.0 - self.contraction_margin
    }

    pub fn contains(&self, spec: &ModelSpec, theta: &Theta) -> bool {
        check_domain(spec, theta, self).passed()
    }
}

/// A single failed domain constraint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    Dimension {
        expected: usize,
        got: usize,
    },
    NotFinite {
        index: usize,
    },
    BelowLower {
        index: usize,
        value: f64,
        bound: f64,
    },
    AboveUpper {
        index: usize,
        value: f64,
        bound: f64,
    },
    InterceptBelowFloor {
        value: f64,
        floor: f64,
    },
    NegativeCoefficient {
        index: usize,
        value: f64,
    },
    Contraction {
        norm: f64,
        limit: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Dimension { expected, got } => {
                write!(f, "expected {expected} parameters, got {got}")
            }
            Self::NotFinite { index } => write!(f, "theta[{index}] is not finite"),
            Self::BelowLower {
                index,
                value,
                bound,
            } => {
                write!(f, "theta[{index}] = {value} < lower bound {bound}")
            }
            Self::AboveUpper {
                index,
                value,
                bound,
            } => {
                write!(f, "theta[{index}] = {value} > upper bound {bound}")
            }
            Self::InterceptBelowFloor { value, floor } => {
                write!(f, "intercept {value} below intensity floor {floor}")
            }
            Self::NegativeCoefficient { index, value } => {
                write!(f, "theta[{index}] = {value} is negative")
            }
            Self::Contraction { norm, limit } => {
                write!(f, "contraction norm {norm} exceeds {limit}")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DomainReport {
    pub violations: Vec<Violation>,
}

impl DomainReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_domain(spec: &ModelSpec, theta: &Theta, domain: &ThetaDomain) -> DomainReport {
    let mut violations = Vec::new();
    let d = spec.dim();
    if theta.len() != d || domain.dim() != d {
        violations.push(Violation::Dimension {
            expected: d,
            got: if theta.len() != d {
                theta.len()
            } else {
                domain.dim()
            },
        });
        return DomainReport { violations };
    }
    let v = theta.as_slice();
    for (index, &value) in v.iter().enumerate() {
        if !value.is_finite() {
            violations.push(Violation::NotFinite { index });
            continue;
        }
        if index == 0 && value < domain.intensity_floor {
            violations.push(Violation::InterceptBelowFloor {
                value,
                floor: domain.intensity_floor,
            });
        }
        if index > 0 && value < 0.0 {
            violations.push(Violation::NegativeCoefficient { index, value });
        }
        if value < domain.lower[index] {
            violations.push(Violation::BelowLower {
                index,
                value,
                bound: domain.lower[index],
            });
        }
        if value > domain.upper[index] {
            violations.push(Violation::AboveUpper {
                index,
                value,
                bound: domain.upper[index],
            });
        }
    }
    if v.iter().all(|x| x.is_finite()) {
        let norm = contraction_norm(spec, theta).expect("dimension checked");
        if norm > domain.contraction_limit() {
            violations.push(Violation::Contraction {
                norm,
                limit: domain.contraction_limit(),
            });
        }
    }
    DomainReport { violations }
}

/// Coefficients `ψ₀..ψ_K` of the linear representation
/// `λ_t = ψ₀ + Σ_{k≥1} ψ_k Y_{t−k}` of an INGARCH intensity.
pub fn psi_coefficients(spec: &ModelSpec, theta: &Theta, k_max: usize) -> Result<Vec<f64>> {
    let (p, q) = match *spec {
        ModelSpec::Ingarch { p, q } => (p, q),
        ModelSpec::Intarch { .. } => {
            return Err(Error::UnsupportedFamily { family: "INTARCH" });
        }
    };
    if k_max == 0 {
        return Err(Error::structural("truncation length must be >= 1"));
    }
    spec.check_theta(theta)?;
    let v = theta.as_slice();
    let alphas = &v[1..=p];
    let betas = &v[1 + p..];
    let mut psi = vec![0.0; k_max + 1];
    psi[0] = v[0] / (1.0 - alphas.iter().sum::<f64>());
    for k in 1..=k_max {
        let mut acc = if k <= q { betas[k - 1] } else { 0.0 };
        for i in 1..=p.min(k - 1) {
            acc += alphas[i - 1] * psi[k - i];
        }
        psi[k] = acc;
    }
    Ok(psi)
}

/// Truncated-past intensities over a window, optionally with `∂λ̂_t/∂θ`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntensityPath {
    pub window: Window,
    pub lambdas: Vec<f64>,
    pub grads: Option<Vec<Vec<f64>>>,
}

pub fn intensity_path(
    spec: &ModelSpec,
    theta: &Theta,
    y: &[u64],
    window: Window,
    with_grad: bool,
) -> Result<IntensityPath> {
    spec.check_theta(theta)?;
    window.check_within(y.len())?;
    let mut lambdas = Vec::with_capacity(window.len());
    let mut grads = with_grad.then(|| Vec::with_capacity(window.len()));
    let order = if with_grad {
        DerivOrder::First
    } else {
        DerivOrder::Value
    };
    visit_intensities(spec, theta, y, window, order, |_, lam, grad, _| {
        lambdas.push(lam);
        if let Some(g) = grads.as_mut() {
            g.push(grad.to_vec());
        }
    });
    Ok(IntensityPath {
        window,
        lambdas,
        grads,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum DerivOrder {
    Value,
    First,
    Second,
}

/// Runs the intensity recursion and calls `visit(t, λ_t, ∂λ_t, ∂²λ_t)` for
/// every `t` in the window. The gradient slice has length `d` and the
/// Hessian slice is row-major `d × d`; either is empty when not requested.
///
/// Callers must have validated `theta` and the window.
pub(crate) fn visit_intensities<F>(
    spec: &ModelSpec,
    theta: &Theta,
    y: &[u64],
    window: Window,
    order: DerivOrder,
    visit: F,
) where
    F: FnMut(usize, f64, &[f64], &[f64]),
{
    match *spec {
        ModelSpec::Ingarch { p: 1, q: 1 } => {
            visit_ingarch11(theta.as_slice(), y, window, order, visit)
        }
        ModelSpec::Ingarch { p, q } => {
            visit_ingarch(p, q, theta.as_slice(), y, window, order, visit)
        }
        ModelSpec::Intarch { q, threshold } => {
            visit_intarch(q, threshold, theta.as_slice(), y, window, order, visit)
        }
    }
}

fn visit_ingarch<F>(
    p: usize,
    q: usize,
    v: &[f64],
    y: &[u64],
    window: Window,
    order: DerivOrder,
    mut visit: F,
) where
    F: FnMut(usize, f64, &[f64], &[f64]),
{
    let d = 1 + p + q;
    let a0 = v[0];
    let alphas = &v[1..=p];
    let betas = &v[1 + p..];
    let one_minus = 1.0 - alphas.iter().sum::<f64>();
    let lam_star = a0 / one_minus;
    let want_grad = order >= DerivOrder::First;
    let want_hess = order >= DerivOrder::Second;

    // Ring buffers over the last p steps, all seeded with the no-data
    // fixpoint and its derivatives.
    let ring = p.max(1);
    let mut lam_hist = vec![lam_star; ring];
    let mut grad_hist = Vec::new();
    let mut hess_hist = Vec::new();
    if want_grad {
        let mut g = vec![0.0; d];
        g[0] = 1.0 / one_minus;
        for gi in g.iter_mut().skip(1).take(p) {
            *gi = a0 / (one_minus * one_minus);
        }
        grad_hist = g.repeat(ring);
    }
    if want_hess {
        let mut h = vec![0.0; d * d];
        let c1 = 1.0 / (one_minus * one_minus);
        let c2 = 2.0 * a0 / (one_minus * one_minus * one_minus);
        for i in 1..=p {
            h[i] = c1;
            h[i * d] = c1;
            for j in 1..=p {
                h[i * d + j] = c2;
            }
        }
        hess_hist = h.repeat(ring);
    }

    let mut grad = vec![0.0; if want_grad { d } else { 0 }];
    let mut hess = vec![0.0; if want_hess { d * d } else { 0 }];
    for t in 1..=window.end() {
        let mut lam = a0;
        for (i, &a) in alphas.iter().enumerate() {
            lam += a * lam_hist[(t + ring - 1 - i) % ring];
        }
        for (j, &b) in betas.iter().enumerate() {
            if t > j + 1 {
                lam += b * y[t - j - 2] as f64;
            }
        }
        if want_grad {
            grad.iter_mut().for_each(|g| *g = 0.0);
            grad[0] = 1.0;
            for (i, &a) in alphas.iter().enumerate() {
                let slot = (t + ring - 1 - i) % ring;
                grad[1 + i] += lam_hist[slot];
                let prev = &grad_hist[slot * d..(slot + 1) * d];
                for (g, &pg) in grad.iter_mut().zip(prev) {
                    *g += a * pg;
                }
            }
            for j in 0..q {
                if t > j + 1 {
                    grad[1 + p + j] += y[t - j - 2] as f64;
                }
            }
        }
        if want_hess {
            hess.iter_mut().for_each(|h| *h = 0.0);
            for (i, &a) in alphas.iter().enumerate() {
                let slot = (t + ring - 1 - i) % ring;
                let prev_g = &grad_hist[slot * d..(slot + 1) * d];
                let prev_h = &hess_hist[slot * d * d..(slot + 1) * d * d];
                for (h, &ph) in hess.iter_mut().zip(prev_h) {
                    *h += a * ph;
                }
                let r = 1 + i;
                for c in 0..d {
                    hess[r * d + c] += prev_g[c];
                    hess[c * d + r] += prev_g[c];
                }
            }
        }
        if t >= window.start() {
            visit(t, lam, &grad, &hess);
        }
        if p > 0 {
            let slot = t % ring;
            lam_hist[slot] = lam;
            if want_grad {
                grad_hist[slot * d..(slot + 1) * d].copy_from_slice(&grad);
            }
            if want_hess {
                hess_hist[slot * d * d..(slot + 1) * d * d].copy_from_slice(&hess);
            }
        }
    }
}

/// Fixed-size INGARCH(1,1) recursion with the same arithmetic as the
/// general path.
fn visit_ingarch11<F>(v: &[f64], y: &[u64], window: Window, order: DerivOrder, mut visit: F)
where
    F: FnMut(usize, f64, &[f64], &[f64]),
{
    let (a0, a1, b1) = (v[0], v[1], v[2]);
    let one_minus = 1.0 - a1;
    let want_grad = order >= DerivOrder::First;
    let want_hess = order >= DerivOrder::Second;
    let mut lam_prev = a0 / one_minus;
    let mut g_prev = [1.0 / one_minus, a0 / (one_minus * one_minus), 0.0];
    let c1 = 1.0 / (one_minus * one_minus);
    let c2 = 2.0 * a0 / (one_minus * one_minus * one_minus);
    let mut h_prev = [0.0, c1, 0.0, c1, c2, 0.0, 0.0, 0.0, 0.0];
    let mut g = [0.0; 3];
    let mut h = [0.0; 9];
    let g_len = if want_grad { 3 } else { 0 };
    let h_len = if want_hess { 9 } else { 0 };
    let mut y_prev = 0.0;
    for t in 1..=window.end() {
        let mut lam = a0;
        lam += a1 * lam_prev;
        if t > 1 {
            lam += b1 * y_prev;
        }
        if want_grad {
            g = [
                1.0 + a1 * g_prev[0],
                lam_prev + a1 * g_prev[1],
                a1 * g_prev[2],
            ];
            if t > 1 {
                g[2] += y_prev;
            }
        }
        if want_hess {
            for (hc, &ph) in h.iter_mut().zip(&h_prev) {
                *hc = a1 * ph;
            }
            for c in 0..3 {
                h[3 + c] += g_prev[c];
                h[c * 3 + 1] += g_prev[c];
            }
        }
        if t >= window.start() {
            visit(t, lam, &g[..g_len], &h[..h_len]);
        }
        lam_prev = lam;
        g_prev = g;
        h_prev = h;
        y_prev = y[t - 1] as f64;
    }
}

fn visit_intarch<F>(
    q: usize,
    threshold: u64,
    v: &[f64],
    y: &[u64],
    window: Window,
    order: DerivOrder,
    mut visit: F,
) where
    F: FnMut(usize, f64, &[f64], &[f64]),
{
    let d = 1 + 2 * q;
    let want_grad = order >= DerivOrder::First;
    let mut grad = vec![0.0; if want_grad { d } else { 0 }];
    // Linear in θ: the Hessian of λ vanishes.
    let hess = vec![
        0.0;
        if order >= DerivOrder::Second {
            d * d
        } else {
            0
        }
    ];
    if want_grad {
        grad[0] = 1.0;
    }
    for t in window.start()..=window.end() {
        let mut lam = v[0];
        for k in 1..=q {
            let (above, below) = if t > k {
                let yk = y[t - k - 1];
                (
                    yk.saturating_sub(threshold) as f64,
                    yk.min(threshold) as f64,
                )
            } else {
                (0.0, 0.0)
            };
            lam += v[k] * above + v[q + k] * below;
            if want_grad {
                grad[k] = above;
                grad[q + k] = below;
            }
        }
        visit(t, lam, &grad, &hess);
    }
}
