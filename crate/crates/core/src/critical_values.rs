//! Monte Carlo quantiles of the limit functional
//! `U_{d,T} = sup_{1<t≤T} sup_{1<s<t} ‖W_d(s) − s·W_d(1)‖ / (t·b₀(s))`.
//!
//! Paths are coupled across requests: Brownian coordinate `j` of replication
//! `r` always comes from the same random stream, and the grid spacing only
//! depends on the points per unit time. A `d = 1` path is therefore the first
//! coordinate of the `d = 3` path, and a `T = 1.5` path is a prefix of the
//! `T = 2` path at equal spacing.

use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryShape;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, StreamRng};

pub const CACHE_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_REPLICATIONS: usize = 20_000;
pub const DEFAULT_POINTS_PER_UNIT: usize = 2000;
const Z_975: f64 = 1.959_963_984_540_054;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileRequest {
    pub d: usize,
    pub horizon: f64,
    pub alpha: f64,
    /// Grid points over `[0, T]`.
    pub grid_points: usize,
    pub replications: usize,
    pub seed: u64,
    #[serde(default)]
    pub boundary: BoundaryShape,
}

impl QuantileRequest {
    /// Request with the default grid (`2000·T` points) and `2·10⁴` paths.
    pub fn new(d: usize, horizon: f64, alpha: f64, seed: u64) -> Self {
        QuantileRequest {
            d,
            horizon,
            alpha,
            grid_points: (DEFAULT_POINTS_PER_UNIT as f64 * horizon).ceil() as usize,
            replications: DEFAULT_REPLICATIONS,
            seed,
            boundary: BoundaryShape::Constant,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::domain("dimension d must be at least 1"));
        }
        if !(self.horizon.is_finite() && self.horizon > 1.0) {
            return Err(Error::structural(format!(
                "horizon T must be finite and exceed 1, got {}",
                self.horizon
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain("alpha must lie in (0, 1)"));
        }
        if self.grid_points < 100 {
            return Err(Error::domain("grid_points must be at least 100"));
        }
        if self.replications < 1000 {
            return Err(Error::domain("replications must be at least 1000"));
        }
        self.boundary.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileResult {
    pub c_alpha: f64,
    pub mc_stderr: f64,
    /// False when the binomial bracket around the order statistic runs off
    /// either end of the sample.
    pub stderr_reliable: bool,
    pub from_cache: bool,
    pub cache_warning: Option<String>,
    pub request: QuantileRequest,
}

/// Grid with `t = 1` on it: spacing `1/n_unit`, last point `≤ T`.
struct Grid {
    n_unit: usize,
    steps: usize,
}

impl Grid {
    fn new(horizon: f64, grid_points: usize) -> Self {
        let n_unit = ((grid_points as f64 / horizon).round() as usize).max(1);
        let steps = (horizon * n_unit as f64 + 1e-9).floor() as usize;
        Grid { n_unit, steps }
    }
}

/// One realization of the functional, constant boundary.
pub fn draw_u(d: usize, horizon: f64, grid_points: usize, rng: &mut StreamRng) -> Result<f64> {
    draw_u_with_boundary(d, horizon, grid_points, &BoundaryShape::Constant, rng)
}

/// One realization with `b₀(s)` dividing the inner norm.
pub fn draw_u_with_boundary(
    d: usize,
    horizon: f64,
    grid_points: usize,
    boundary: &BoundaryShape,
    rng: &mut StreamRng,
) -> Result<f64> {
    if horizon.is_nan() || horizon <= 1.0 {
        return Err(Error::structural(format!(
            "horizon T must exceed 1, got {horizon}"
        )));
    }
    if d == 0 || grid_points == 0 {
        return Err(Error::structural("need d ≥ 1 and a nonempty grid"));
    }
    let grid = Grid::new(horizon, grid_points);
    let dev = path_deviations(d, &grid, rng);
    Ok(sup_functional(&dev, &grid, boundary))
}

/// `‖W(s_i) − s_i W(1)‖` at grid points `s_i = i/n_unit`, `i = n_unit+1 … steps`.
fn path_deviations(d: usize, grid: &Grid, rng: &mut StreamRng) -> Vec<f64> {
    let n1 = grid.n_unit;
    let h_sqrt = (1.0 / n1 as f64).sqrt();
    let tail = grid.steps.saturating_sub(n1);
    let mut sq = vec![0.0; tail];
    let mut path = vec![0.0; grid.steps];
    for j in 0..d {
        let g = rng.stream(j as u64);
        let mut w = 0.0;
        for p in path.iter_mut() {
            let z: f64 = g.sample(StandardNormal);
            w += h_sqrt * z;
            *p = w;
        }
        let w1 = path[n1 - 1];
        for (i, acc) in sq.iter_mut().enumerate() {
            let step = n1 + 1 + i;
            let s = step as f64 / n1 as f64;
            let v = path[step - 1] - s * w1;
            *acc += v * v;
        }
    }
    sq.into_iter().map(f64::sqrt).collect()
}

/// `max_{t_i} (1/t_i) · max_{s_j < t_i} dev_j / b₀(s_j)` over grid points above 1.
fn sup_functional(dev: &[f64], grid: &Grid, boundary: &BoundaryShape) -> f64 {
    let n1 = grid.n_unit as f64;
    let mut inner = f64::NEG_INFINITY;
    let mut best = 0.0f64;
    for (i, &v) in dev.iter().enumerate() {
        // This point closes the window as `t`, then joins the inner sup as `s`.
        let t = (grid.n_unit + 1 + i) as f64 / n1;
        if inner.is_finite() {
            best = best.max(inner / t);
        }
        let scaled = if boundary.is_constant() {
            v
        } else {
            v / boundary.eval(t)
        };
        inner = inner.max(scaled);
    }
    best
}

/// All replications of a request in replication order.
pub fn simulate_draws(req: &QuantileRequest) -> Result<Vec<f64>> {
    req.validate()?;
    (0..req.replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = StreamRng::new(derive_seed(req.seed, &[r as u64]));
            draw_u_with_boundary(req.d, req.horizon, req.grid_points, &req.boundary, &mut rng)
        })
        .collect()
}

/// Order statistic at `⌈(1−α)R⌉` and its binomial-bracket standard error.
pub fn quantile_from_draws(mut draws: Vec<f64>, alpha: f64) -> (f64, f64, bool) {
    draws.sort_by(f64::total_cmp);
    let r = draws.len();
    let q = 1.0 - alpha;
    // The small offset keeps `0.95 · 10000` from rounding up past 9500.
    let idx = ((q * r as f64 - 1e-9).ceil() as usize).clamp(1, r);
    let nq = q * r as f64;
    let half = Z_975 * (r as f64 * q * (1.0 - q)).sqrt();
    let lo = (nq - half).floor();
    let hi = (nq + half).ceil();
    let reliable = lo >= 1.0 && hi <= r as f64;
    let lo = (lo.max(1.0) as usize).min(r);
    let hi = (hi.max(1.0) as usize).min(r);
    let stderr = (draws[hi - 1] - draws[lo - 1]) / (2.0 * Z_975);
    (draws[idx - 1], stderr, reliable)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct CacheRecord {
    format_version: u32,
    request: QuantileRequest,
    c_alpha: f64,
    mc_stderr: f64,
    stderr_reliable: bool,
}

/// Append-only JSON-lines store of computed quantiles.
#[derive(Clone, Debug)]
pub struct QuantileCache {
    path: PathBuf,
}

impl QuantileCache {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        QuantileCache { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Latest stored record for `req`; a missing file is an empty cache.
    /// Lines that do not parse or carry another format version are skipped.
    pub fn lookup(&self, req: &QuantileRequest) -> Result<Option<(f64, f64, bool)>> {
        let file = match std::fs::File::open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let mut found = None;
        for line in BufReader::new(file).lines() {
            let line = line?;
            if let Ok(rec) = serde_json::from_str::<CacheRecord>(&line) {
                if rec.format_version == CACHE_FORMAT_VERSION && rec.request == *req {
                    found = Some((rec.c_alpha, rec.mc_stderr, rec.stderr_reliable));
                }
            }
        }
        Ok(found)
    }

    pub fn store(&self, result: &QuantileResult) -> Result<()> {
        let rec = CacheRecord {
            format_version: CACHE_FORMAT_VERSION,
            request: result.request.clone(),
            c_alpha: result.c_alpha,
            mc_stderr: result.mc_stderr,
            stderr_reliable: result.stderr_reliable,
        };
        let mut line = serde_json::to_string(&rec)?;
        line.push('\n');
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)?;
        f.write_all(line.as_bytes())?;
        Ok(())
    }
}

/// `c_α` for `req`, served from `cache` when present. Cache failures never
/// abort: the value is recomputed and the failure is reported in
/// `cache_warning`.
pub fn quantile_c_alpha(
    req: &QuantileRequest,
    cache: Option<&QuantileCache>,
) -> Result<QuantileResult> {
    req.validate()?;
    let mut warning = None;
    if let Some(c) = cache {
        match c.lookup(req) {
            Ok(Some((c_alpha, mc_stderr, stderr_reliable))) => {
                return Ok(QuantileResult {
                    c_alpha,
                    mc_stderr,
                    stderr_reliable,
                    from_cache: true,
                    cache_warning: None,
                    request: req.clone(),
                })
            }
            Ok(None) => {}
            Err(e) => warning = Some(format!("cache read failed: {e}")),
        }
    }
    let (c_alpha, mc_stderr, stderr_reliable) =
        quantile_from_draws(simulate_draws(req)?, req.alpha);
    let mut result = QuantileResult {
        c_alpha,
        mc_stderr,
        stderr_reliable,
        from_cache: false,
        cache_warning: warning,
        request: req.clone(),
    };
    if let Some(c) = cache {
        if let Err(e) = c.store(&result) {
            let msg = format!("cache write failed: {e}");
            result.cache_warning = Some(match result.cache_warning.take() {
                Some(prev) => format!("{prev}; {msg}"),
                None => msg,
            });
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(d: usize, horizon: f64, seed: u64) -> QuantileRequest {
        QuantileRequest {
            d,
            horizon,
            alpha: 0.05,
            grid_points: (400.0 * horizon) as usize,
            replications: 1000,
            seed,
            boundary: BoundaryShape::Constant,
        }
    }

    #[test]
    fn request_validation() {
        assert!(QuantileRequest::new(3, 1.5, 0.05, 1).validate().is_ok());
        assert_eq!(QuantileRequest::new(3, 1.5, 0.05, 1).grid_points, 3000);
        let mut r = small(1, 1.5, 1);
        r.grid_points = 99;
        assert!(r.validate().is_err());
        let mut r = small(1, 1.5, 1);
        r.replications = 999;
        assert!(r.validate().is_err());
        assert!(matches!(
            small(1, 1.0, 1).validate(),
            Err(Error::Structural(_))
        ));
        let mut rng = StreamRng::new(0);
        assert!(draw_u(1, 0.9, 1000, &mut rng).is_err());
    }

    #[test]
    fn degenerate_horizon_concentrates_at_zero() {
        let mut total = 0.0;
        for r in 0..200 {
            let mut rng = StreamRng::new(r);
            total += draw_u(2, 1.0001, 200_000, &mut rng).unwrap();
        }
        assert!(total / 200.0 < 0.02, "{}", total / 200.0);
    }

    #[test]
    fn dominates_every_grid_deviation() {
        let grid = Grid::new(1.5, 600);
        for r in 0..50 {
            let mut rng = StreamRng::new(r);
            let u = draw_u(1, 1.5, 600, &mut rng).unwrap();
            let mut rng = StreamRng::new(r);
            let dev = path_deviations(1, &grid, &mut rng);
            // s_j < T so the pair (s_j, T) is admissible.
            for &v in &dev[..dev.len() - 1] {
                assert!(u >= v / 1.5 - 1e-15);
            }
        }
    }

    #[test]
    fn coupled_paths_are_monotone_in_d_and_t() {
        for r in 0..100 {
            let draw = |d, t: f64| {
                let mut rng = StreamRng::new(r);
                draw_u(d, t, (500.0 * t) as usize, &mut rng).unwrap()
            };
            let base = draw(1, 1.5);
            assert!(draw(3, 1.5) >= base);
            assert!(draw(1, 2.0) >= base);
            assert!(draw(3, 2.0) >= draw(3, 1.5));
        }
    }

    #[test]
    fn constant_boundary_scaling() {
        let b = BoundaryShape::Tabulated {
            knots: vec![(0.0, 2.0)],
        };
        let mut a = StreamRng::new(4);
        let mut c = StreamRng::new(4);
        let plain = draw_u(2, 1.5, 600, &mut a).unwrap();
        let halved = draw_u_with_boundary(2, 1.5, 600, &b, &mut c).unwrap();
        assert!((plain - 2.0 * halved).abs() < 1e-12);
    }

    #[test]
    fn deterministic_and_ordered() {
        let a = quantile_c_alpha(&small(2, 1.5, 7), None).unwrap();
        let b = quantile_c_alpha(&small(2, 1.5, 7), None).unwrap();
        assert_eq!(a.c_alpha.to_bits(), b.c_alpha.to_bits());
        assert_eq!(a.mc_stderr.to_bits(), b.mc_stderr.to_bits());
        assert!(a.c_alpha > 0.0 && a.mc_stderr.is_finite() && a.stderr_reliable);
        let lo = quantile_c_alpha(&small(1, 1.5, 7), None).unwrap();
        assert!(a.c_alpha > lo.c_alpha);
    }

    #[test]
    fn edge_level_flags_stderr() {
        let draws: Vec<f64> = (0..10_000).map(|i| i as f64).collect();
        let (c, se, ok) = quantile_from_draws(draws.clone(), 0.999_999);
        assert!(!ok);
        assert_eq!(c, 0.0);
        assert!(se.is_finite());
        let (c, _, ok) = quantile_from_draws(draws, 0.05);
        assert!(ok);
        assert_eq!(c, 9499.0);
    }

    #[test]
    fn cache_round_trip_and_failure() {
        let dir = tempfile::tempdir().unwrap();
        let cache = QuantileCache::new(dir.path().join("q.jsonl"));
        let req = small(1, 1.5, 3);
        let first = quantile_c_alpha(&req, Some(&cache)).unwrap();
        assert!(!first.from_cache && first.cache_warning.is_none());
        let second = quantile_c_alpha(&req, Some(&cache)).unwrap();
        assert!(second.from_cache);
        assert_eq!(second.c_alpha, first.c_alpha);
        let mut other = req.clone();
        other.seed = 4;
        assert!(!quantile_c_alpha(&other, Some(&cache)).unwrap().from_cache);
        let text = std::fs::read_to_string(cache.path()).unwrap();
        assert_eq!(text.lines().count(), 2);

        // A directory cannot be read or appended to.
        let broken = QuantileCache::new(dir.path());
        let res = quantile_c_alpha(&req, Some(&broken)).unwrap();
        assert!(res.cache_warning.is_some());
        assert_eq!(res.c_alpha, first.c_alpha);
    }
}
