//! Payoff functions, evaluable in asset space `s` or log space `x = ln s`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payoff {
    /// `max(max_i s_i - K, 0)`.
    MaxCall { strike: f64 },
    /// `max(K - w . s, 0)`.
    BasketPut { strike: f64, weights: Vec<f64> },
    /// Product over coordinates of `max(1 - |x_j - c_j| / width, 0)` in log space.
    Tent { center: Vec<f64>, width: f64 },
    /// Indicator of the box `[lower, upper]` in log space.
    Indicator { lower: Vec<f64>, upper: Vec<f64> },
    /// One-dimensional piecewise-linear profile in log space, zero outside the knots.
    Table { knots: Vec<f64>, values: Vec<f64> },
    /// `inner(x) * 1{|x| <= radius}` in log space.
    Truncated { inner: Box<Payoff>, radius: f64 },
}

impl Payoff {
    pub fn unit_tent() -> Self {
        Payoff::Tent {
            center: vec![0.0],
            width: 1.0,
        }
    }

    /// Dimension fixed by the parameters, if any.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Payoff::MaxCall { .. } => None,
            Payoff::BasketPut { weights, .. } => Some(weights.len()),
            Payoff::Tent { center, .. } => Some(center.len()),
            Payoff::Indicator { lower, .. } => Some(lower.len()),
            Payoff::Table { .. } => Some(1),
            Payoff::Truncated { inner, .. } => inner.dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |r: &str| Err(Error::invalid("payoff", r.to_string()));
        match self {
            Payoff::MaxCall { strike } if !strike.is_finite() => bad("strike must be finite"),
            Payoff::BasketPut { strike, weights } => {
                if !strike.is_finite() || weights.is_empty() {
                    bad("basket put needs a finite strike and weights")
                } else if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                    bad("basket weights must be nonnegative")
                } else {
                    Ok(())
                }
            }
            Payoff::Tent { center, width } => {
                if center.is_empty() || !(width.is_finite() && *width > 0.0) {
                    bad("tent needs a center and positive width")
                } else {
                    Ok(())
                }
            }
            Payoff::Indicator { lower, upper } => {
                if lower.is_empty() || lower.len() != upper.len() || lower.iter().zip(upper).any(|(a, b)| !(a < b)) {
                    bad("indicator box needs lower < upper in every coordinate")
                } else {
                    Ok(())
                }
            }
            Payoff::Table { knots, values } => {
                if knots.len() < 2 || knots.len() != values.len() || knots.windows(2).any(|w| !(w[0] < w[1])) {
                    bad("table needs at least two strictly increasing knots with matching values")
                } else {
                    Ok(())
                }
            }
            Payoff::Truncated { inner, radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    bad("truncation radius must be positive")
                } else {
                    inner.validate()
                }
            }
            _ => Ok(()),
        }
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len == 0 {
            return Err(Error::invalid("payoff argument", "empty point"));
        }
        match self.dim() {
            Some(d) if d != len => Err(Error::dim("payoff", d, len)),
            _ => Ok(()),
        }
    }

    /// Payoff at asset values `s`, all of which must be positive.
    pub fn eval_asset(&self, s: &[f64]) -> Result<f64> {
        self.check_dim(s.len())?;
        if s.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid("payoff argument", "asset values must lie in (0, inf)"));
        }
        Ok(match self {
            Payoff::MaxCall { strike } => {
                (s.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - strike).max(0.0)
            }
            Payoff::BasketPut { strike, weights } => {
                (strike - weights.iter().zip(s).map(|(w, s)| w * s).sum::<f64>()).max(0.0)
            }
            _ => {
                let x: Vec<f64> = s.iter().map(|v| v.ln()).collect();
                self.eval_log_unchecked(&x)
            }
        })
    }

    /// Payoff at log coordinates `x`, i.e. `phi(exp(x))`.
    pub fn eval_log(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(self.eval_log_unchecked(x))
    }

    pub(crate) fn eval_log_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            Payoff::MaxCall { strike } => {
                (x.iter().cloned().fold(f64::NEG_INFINITY, f64::max).exp() - strike).max(0.0)
            }
            Payoff::BasketPut { strike, weights } => {
                (strike - weights.iter().zip(x).map(|(w, x)| w * x.exp()).sum::<f64>()).max(0.0)
            }
            Payoff::Tent { center, width } => center
                .iter()
                .zip(x)
                .map(|(c, x)| (1.0 - (x - c).abs() / width).max(0.0))
                .product(),
            Payoff::Indicator { lower, upper } => {
                let inside = x
                    .iter()
                    .zip(lower.iter().zip(upper))
                    .all(|(x, (a, b))| *a <= *x && *x <= *b);
                if inside {
                    1.0
                } else {
                    0.0
                }
            }
            Payoff::Table { knots, values } => interpolate(knots, values, x[0]),
            Payoff::Truncated { inner, radius } => {
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm <= *radius {
                    inner.eval_log_unchecked(x)
                } else {
                    0.0
                }
            }
        }
    }

    /// Points where the one-dimensional log-space profile has kinks or jumps.
    pub fn breakpoints_1d(&self) -> Vec<f64> {
        let mut pts = match self {
            Payoff::MaxCall { strike } if *strike > 0.0 => vec![strike.ln()],
            Payoff::BasketPut { strike, weights } if *strike > 0.0 && weights.len() == 1 && weights[0] > 0.0 => {
                vec![(strike / weights[0]).ln()]
            }
            Payoff::Tent { center, width } if center.len() == 1 => {
                vec![center[0] - width, center[0], center[0] + width]
            }
            Payoff::Indicator { lower, upper } if lower.len() == 1 => vec![lower[0], upper[0]],
            Payoff::Table { knots, .. } => knots.clone(),
            Payoff::Truncated { inner, radius } => {
                let mut v = inner.breakpoints_1d();
                v.retain(|p| p.abs() < *radius);
                v.push(-radius);
                v.push(*radius);
                v
            }
            _ => Vec::new(),
        };
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Bounded interval outside of which the one-dimensional log-space
    /// profile vanishes, when there is one.
    pub fn support_1d(&self) -> Option<(f64, f64)> {
        match self {
            Payoff::Tent { center, width } if center.len() == 1 => Some((center[0] - width, center[0] + width)),
            Payoff::Indicator { lower, upper } if lower.len() == 1 => Some((lower[0], upper[0])),
            Payoff::Table { knots, .. } => Some((knots[0], *knots.last().unwrap())),
            Payoff::Truncated { inner, radius } => {
                let (a, b) = inner.support_1d().unwrap_or((-radius, *radius));
                Some((a.max(-radius), b.min(*radius)))
            }
            _ => None,
        }
    }
}

fn interpolate(knots: &[f64], values: &[f64], x: f64) -> f64 {
    if x < knots[0] || x > knots[knots.len() - 1] {
        return 0.0;
    }
    let k = knots.partition_point(|&t| t <= x).clamp(1, knots.len() - 1);
    let (x0, x1) = (knots[k - 1], knots[k]);
    let (y0, y1) = (values[k - 1], values[k]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// `Phi^R(x) = Phi(x) 1{|x| <= M + R}`: the payoff cut off outside the ball of
/// radius `M + R` in log coordinates.
pub fn truncate_payoff(phi: &Payoff, box_radius: f64, r: f64) -> Result<Payoff> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::invalid("truncation", format!("R must be positive, got {r}")));
    }
    if !(box_radius.is_finite() && box_radius >= 0.0) {
        return Err(Error::invalid("truncation", format!("M must be nonnegative, got {box_radius}")));
    }
    Ok(Payoff::Truncated {
        inner: Box::new(phi.clone()),
        radius: box_radius + r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn asset_payoff_examples() {
        let call = Payoff::MaxCall { strike: 1.0 };
        assert_eq!(call.eval_asset(&[0.5, 0.9]).unwrap(), 0.0);
        assert_relative_eq!(call.eval_asset(&[1.3, 0.9]).unwrap(), 0.3, epsilon = 1e-15);
        let put = Payoff::BasketPut {
            strike: 1.2,
            weights: vec![0.5, 0.5],
        };
        assert_relative_eq!(put.eval_asset(&[1.0, 1.0]).unwrap(), 0.2, epsilon = 1e-15);
        assert!(call.eval_asset(&[0.0, 1.0]).is_err());
        assert!(call.eval_asset(&[-1.0]).is_err());
        assert!(put.eval_asset(&[1.0]).is_err());
    }

    #[test]
    fn tent_in_log_space() {
        let t = Payoff::unit_tent();
        assert_eq!(t.eval_log(&[0.0]).unwrap(), 1.0);
        assert_eq!(t.eval_log(&[0.5]).unwrap(), 0.5);
        assert_eq!(t.eval_log(&[-1.5]).unwrap(), 0.0);
        assert_relative_eq!(t.eval_asset(&[0.5f64.exp()]).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn table_interpolates() {
        let t = Payoff::Table {
            knots: vec![-1.0, 0.0, 2.0],
            values: vec![0.0, 1.0, 0.0],
        };
        t.validate().unwrap();
        assert_eq!(t.eval_log(&[-0.5]).unwrap(), 0.5);
        assert_eq!(t.eval_log(&[1.0]).unwrap(), 0.5);
        assert_eq!(t.eval_log(&[2.5]).unwrap(), 0.0);
        assert_eq!(t.eval_log(&[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn truncation_examples() {
        let call = Payoff::MaxCall { strike: 1.0 };
        let m = 1.0;
        let r = 2.0;
        let tr = truncate_payoff(&call, m, r).unwrap();
        assert_eq!(tr.eval_log(&[m + r + 1.0]).unwrap(), 0.0);
        assert_eq!(tr.eval_log(&[0.0]).unwrap(), call.eval_log(&[0.0]).unwrap());
        assert_eq!(tr.eval_log(&[2.9]).unwrap(), call.eval_log(&[2.9]).unwrap());
        assert!(truncate_payoff(&call, m, 0.0).is_err());
        assert_eq!(tr.support_1d(), Some((-3.0, 3.0)));
    }

    #[test]
    fn validation() {
        assert!(Payoff::Tent { center: vec![0.0], width: 0.0 }.validate().is_err());
        assert!(Payoff::Indicator { lower: vec![1.0], upper: vec![0.0] }.validate().is_err());
        assert!(Payoff::BasketPut { strike: 1.0, weights: vec![-0.1] }.validate().is_err());
        assert!(Payoff::Table { knots: vec![0.0, 0.0], values: vec![1.0, 1.0] }.validate().is_err());
    }

    #[test]
    fn json_shape() {
        let p: Payoff = serde_json::from_str(r#"{"kind":"max_call","strike":1.0}"#).unwrap();
        assert_eq!(p, Payoff::MaxCall { strike: 1.0 });
        let t: Payoff = serde_json::from_str(
            r#"{"kind":"truncated","radius":3,"inner":{"kind":"tent","center":[0],"width":1}}"#,
        )
        .unwrap();
        assert_eq!(t.dim(), Some(1));
    }
}
