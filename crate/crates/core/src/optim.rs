//! Box-constrained projected Newton ascent.
//!
//! Each iteration pins coordinates sitting on a bound whose gradient points
//! outward, solves the curvature system on the remaining coordinates, and
//! backtracks along the projected path with an Armijo test. The objective
//! supplies up to two curvature matrices in order of preference (typically
//! the observed and the expected information); the first that factors is
//! used.

use nalgebra::{DMatrix, DVector};

pub(crate) struct Evaluation {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Positive semidefinite approximations of `−∇²f`, row-major, most
    /// accurate first.
    pub curvatures: Vec<Vec<f64>>,
}

pub(crate) trait Objective {
    /// Value only; `None` marks an infeasible point.
    fn value(&self, x: &[f64]) -> Option<f64>;
    fn evaluate(&self, x: &[f64]) -> Option<Evaluation>;
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Settings {
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 40;

fn bound_slack(v: f64) -> f64 {
    1e-12 * v.abs().max(1.0)
}

/// Gradient with components that push into an active bound zeroed.
fn projected_gradient(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(g)
        .zip(lower.iter().zip(upper))
        .map(|((&xi, &gi), (&lo, &hi))| {
            if (xi <= lo + bound_slack(lo) && gi < 0.0) || (xi >= hi - bound_slack(hi) && gi > 0.0)
            {
                0.0
            } else {
                gi
            }
        })
        .collect()
}

fn solve_free(curv: &[f64], g: &[f64], free: &[usize], d: usize) -> Option<Vec<f64>> {
    let k = free.len();
    let m = DMatrix::from_fn(k, k, |r, c| curv[free[r] * d + free[c]]);
    if m.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let rhs = DVector::from_iterator(k, free.iter().map(|&i| g[i]));
    let chol = m.cholesky()?;
    let sol = chol.solve(&rhs);
    let mut dir = vec![0.0; d];
    for (j, &i) in free.iter().enumerate() {
        dir[i] = sol[j];
    }
    dir.iter().all(|v| v.is_finite()).then_some(dir)
}

fn clamp_step(x: &[f64], dir: &[f64], step: f64, lower: &[f64], upper: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(dir)
        .zip(lower.iter().zip(upper))
        .map(|((&xi, &di), (&lo, &hi))| (xi + step * di).clamp(lo, hi))
        .collect()
}

/// Backtracking search along the projected path; returns the accepted point
/// and its value.
fn line_search<O: Objective>(
    obj: &O,
    x: &[f64],
    f: f64,
    g: &[f64],
    dir: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> Option<(Vec<f64>, f64)> {
    let mut step = 1.0;
    for _ in 0..MAX_HALVINGS {
        let cand = clamp_step(x, dir, step, lower, upper);
        let gain: f64 = cand
            .iter()
            .zip(x)
            .zip(g)
            .map(|((c, xi), gi)| (c - xi) * gi)
            .sum();
        if gain > 0.0 {
            if let Some(fc) = obj.value(&cand) {
                if fc >= f + ARMIJO * gain {
                    return Some((cand, fc));
                }
            }
        }
        step *= 0.5;
    }
    None
}

pub(crate) fn maximize<O: Objective>(
    obj: &O,
    x0: Vec<f64>,
    lower: &[f64],
    upper: &[f64],
    settings: Settings,
) -> Outcome {
    let d = x0.len();
    let mut x = x0;
    let mut iterations = 0;
    let Some(mut eval) = obj.evaluate(&x) else {
        return Outcome {
            x,
            converged: false,
            iterations,
            grad_norm: f64::INFINITY,
        };
    };
    loop {
        let pg = projected_gradient(&x, &eval.grad, lower, upper);
        let grad_norm = pg.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if grad_norm <= settings.tol || iterations >= settings.max_iter {
            return Outcome {
                x,
                converged: grad_norm <= settings.tol,
                iterations,
                grad_norm,
            };
        }
        iterations += 1;
        let free: Vec<usize> = (0..d).filter(|&i| pg[i] != 0.0).collect();

        let mut directions: Vec<Vec<f64>> = eval
            .curvatures
            .iter()
            .filter_map(|c| solve_free(c, &pg, &free, d))
            .collect();
        // Scaled gradient as the last resort.
        let scale = eval
            .curvatures
            .last()
            .map(|c| (0..d).map(|i| c[i * d + i]).fold(0.0f64, f64::max))
            .filter(|s| *s > 0.0)
            .unwrap_or(1.0);
        directions.push(pg.iter().map(|v| v / scale).collect());

        let mut accepted = None;
        for dir in &directions {
            if let Some(found) = line_search(obj, &x, eval.value, &pg, dir, lower, upper) {
                accepted = Some(found);
                break;
            }
        }
        let Some((next, _)) = accepted else {
            return Outcome {
                x,
                converged: false,
                iterations,
                grad_norm,
            };
        };
        match obj.evaluate(&next) {
            Some(e) => {
                x = next;
                eval = e;
            }
            None => {
                return Outcome {
                    x,
                    converged: false,
                    iterations,
                    grad_norm,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Concave quadratic with its peak at `peak`.
    struct Quadratic {
        peak: Vec<f64>,
        weights: Vec<f64>,
    }

    impl Objective for Quadratic {
        fn value(&self, x: &[f64]) -> Option<f64> {
            Some(
                -x.iter()
                    .zip(&self.peak)
                    .zip(&self.weights)
                    .map(|((a, b), w)| w * (a - b).powi(2))
                    .sum::<f64>(),
            )
        }

        fn evaluate(&self, x: &[f64]) -> Option<Evaluation> {
            let d = x.len();
            let grad = x
                .iter()
                .zip(&self.peak)
                .zip(&self.weights)
                .map(|((a, b), w)| -2.0 * w * (a - b))
                .collect();
            let mut curv = vec![0.0; d * d];
            for i in 0..d {
                curv[i * d + i] = 2.0 * self.weights[i];
            }
            Some(Evaluation {
                value: self.value(x)?,
                grad,
                curvatures: vec![curv],
            })
        }
    }

    #[test]
    fn interior_peak_in_one_newton_step() {
        let q = Quadratic {
            peak: vec![0.3, -0.2],
            weights: vec![1.0, 5.0],
        };
        let out = maximize(
            &q,
            vec![0.9, 0.9],
            &[-1.0, -1.0],
            &[1.0, 1.0],
            Settings {
                tol: 1e-10,
                max_iter: 50,
            },
        );
        assert!(out.converged);
        assert!(out.iterations <= 2);
        assert!((out.x[0] - 0.3).abs() < 1e-10 && (out.x[1] + 0.2).abs() < 1e-10);
    }

    #[test]
    fn peak_outside_box_lands_on_bound() {
        let q = Quadratic {
            peak: vec![2.0, 0.5],
            weights: vec![1.0, 1.0],
        };
        let out = maximize(
            &q,
            vec![0.0, 0.0],
            &[-1.0, -1.0],
            &[1.0, 1.0],
            Settings {
                tol: 1e-10,
                max_iter: 50,
            },
        );
        assert!(out.converged);
        assert_eq!(out.x[0], 1.0);
        assert!((out.x[1] - 0.5).abs() < 1e-10);
        assert!(out.grad_norm < 1e-10);
    }
}
