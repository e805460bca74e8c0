//! Boundary shapes `b₀` for the stopping rule `max_ℓ Ĉ_{k,ℓ} / b₀((k−ℓ)/m) > c`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A non-increasing, continuous, strictly positive function on `(0, ∞)`.
///
/// The full boundary is `c · b₀(s)`; the constant `c` is the critical value
/// and lives in the monitor configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum BoundaryShape {
    /// `b₀ ≡ 1`.
    #[default]
    Constant,
    /// Piecewise-linear through `(s, b₀(s))` knots, flat outside the knot range.
    Tabulated { knots: Vec<(f64, f64)> },
    /// `b₀(s) = floor + amplitude · exp(−rate · s)`.
    Exponential {
        floor: f64,
        amplitude: f64,
        rate: f64,
    },
}

impl BoundaryShape {
    pub fn validate(&self) -> Result<()> {
        match self {
            BoundaryShape::Constant => Ok(()),
            BoundaryShape::Tabulated { knots } => {
                if knots.is_empty() {
                    return Err(Error::domain("tabulated boundary needs at least one knot"));
                }
                for (s, b) in knots {
                    if !s.is_finite() || !b.is_finite() || *s < 0.0 || *b <= 0.0 {
                        return Err(Error::domain(format!(
                            "boundary knot ({s}, {b}) must be finite with s ≥ 0 and b > 0"
                        )));
                    }
                }
                for w in knots.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(Error::domain("boundary knots must have increasing s"));
                    }
                    if w[1].1 > w[0].1 {
                        return Err(Error::domain("boundary must be non-increasing"));
                    }
                }
                Ok(())
            }
            BoundaryShape::Exponential {
                floor,
                amplitude,
                rate,
            } => {
                let ok = floor.is_finite()
                    && amplitude.is_finite()
                    && rate.is_finite()
                    && *floor > 0.0
                    && *amplitude >= 0.0
                    && *rate >= 0.0;
                if ok {
                    Ok(())
                } else {
                    Err(Error::domain(
                        "exponential boundary needs floor > 0, amplitude ≥ 0, rate ≥ 0",
                    ))
                }
            }
        }
    }

    /// `b₀(s)` for `s > 0`.
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            BoundaryShape::Constant => 1.0,
            BoundaryShape::Tabulated { knots } => {
                let first = knots[0];
                let last = knots[knots.len() - 1];
                if s <= first.0 {
                    return first.1;
                }
                if s >= last.0 {
                    return last.1;
                }
                let i = knots.partition_point(|&(x, _)| x <= s);
                let (x0, y0) = knots[i - 1];
                let (x1, y1) = knots[i];
                y0 + (y1 - y0) * (s - x0) / (x1 - x0)
            }
            BoundaryShape::Exponential {
                floor,
                amplitude,
                rate,
            } => floor + amplitude * (-rate * s).exp(),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, BoundaryShape::Constant)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_interpolates_and_extrapolates_flat() {
        let b = BoundaryShape::Tabulated {
            knots: vec![(0.1, 2.0), (0.5, 1.0), (1.0, 1.0)],
        };
        b.validate().unwrap();
        assert_eq!(b.eval(0.01), 2.0);
        assert!((b.eval(0.3) - 1.5).abs() < 1e-12);
        assert_eq!(b.eval(0.5), 1.0);
        assert_eq!(b.eval(7.0), 1.0);
    }

    #[test]
    fn increasing_table_rejected() {
        let b = BoundaryShape::Tabulated {
            knots: vec![(0.1, 1.0), (0.5, 1.2)],
        };
        assert!(b.validate().is_err());
        let b = BoundaryShape::Tabulated {
            knots: vec![(0.1, 1.0), (0.1, 0.9)],
        };
        assert!(b.validate().is_err());
    }

    #[test]
    fn exponential_is_positive_and_non_increasing() {
        let b = BoundaryShape::Exponential {
            floor: 0.5,
            amplitude: 1.0,
            rate: 2.0,
        };
        b.validate().unwrap();
        let mut prev = f64::INFINITY;
        for i in 1..200 {
            let v = b.eval(i as f64 * 0.05);
            assert!(v > 0.0 && v <= prev);
            prev = v;
        }
        assert!(BoundaryShape::Exponential {
            floor: 0.0,
            amplitude: 1.0,
            rate: 1.0
        }
        .validate()
        .is_err());
    }
}
