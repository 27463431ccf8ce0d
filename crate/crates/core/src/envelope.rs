//! Time-indexed interpolation curves for offline renders.
//!
//! The text form has one `time_seconds,k` pair per line. Blank lines and
//! everything after a `#` are ignored.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationEnvelope {
    breakpoints: Vec<(f64, f64)>,
}

impl InterpolationEnvelope {
    /// Breakpoint times must be finite and strictly increasing; k values are
    /// clamped to `[0, 1]`.
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::invalid("envelope needs at least one breakpoint"));
        }
        if breakpoints
            .iter()
            .any(|(t, k)| !t.is_finite() || !k.is_finite())
        {
            return Err(Error::invalid("envelope breakpoints must be finite"));
        }
        if breakpoints.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid("envelope times must be strictly increasing"));
        }
        Ok(InterpolationEnvelope {
            breakpoints: breakpoints
                .into_iter()
                .map(|(t, k)| (t, k.clamp(0.0, 1.0)))
                .collect(),
        })
    }

    pub fn constant(k: f64) -> Self {
        InterpolationEnvelope {
            breakpoints: vec![(0.0, if k.is_nan() { 0.0 } else { k.clamp(0.0, 1.0) })],
        }
    }

    /// Straight ramp from `k0` at `t0` to `k1` at `t1`.
    pub fn ramp(t0: f64, k0: f64, t1: f64, k1: f64) -> Result<Self> {
        Self::new(vec![(t0, k0), (t1, k1)])
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    /// Piecewise-linear value at `time`, held constant outside the range.
    pub fn evaluate(&self, time: f64) -> f64 {
        let bp = &self.breakpoints;
        let first = bp[0];
        let last = bp[bp.len() - 1];
        if time <= first.0 {
            return first.1;
        }
        if time >= last.0 {
            return last.1;
        }
        let i = bp.partition_point(|(t, _)| *t <= time);
        let (t0, k0) = bp[i - 1];
        let (t1, k1) = bp[i];
        k0 + (k1 - k0) * (time - t0) / (t1 - t0)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        fs::read_to_string(path)?.parse()
    }
}

impl FromStr for InterpolationEnvelope {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |reason: String| Error::Envelope {
                line: n + 1,
                reason,
            };
            let mut fields = line.split(',').map(str::trim);
            let (Some(t), Some(k), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(bad(format!("expected `time_seconds,k`, got `{line}`")));
            };
            let t: f64 = t.parse().map_err(|_| bad(format!("bad time `{t}`")))?;
            let k: f64 = k.parse().map_err(|_| bad(format!("bad k `{k}`")))?;
            if let Some(&(prev, _)) = points.last() {
                if t <= prev {
                    return Err(bad(format!("time {t} does not increase past {prev}")));
                }
            }
            points.push((t, k));
        }
        if points.is_empty() {
            return Err(Error::Envelope {
                line: 0,
                reason: "no breakpoints".into(),
            });
        }
        Self::new(points)
    }
}
