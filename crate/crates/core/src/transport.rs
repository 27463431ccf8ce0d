//! Discrete optimal transport on the real line with squared-distance cost.
//!
//! In one dimension the optimal plan is monotone: no mass crosses over any
//! other. A single sweep from the lowest to the highest frequency on both
//! sides, always moving as much mass as the emptier of the two current
//! points holds, therefore produces the optimal plan in `O(|X| + |Y|)`.

use crate::error::{Error, Result};
use crate::reassign::SpectralRegion;

/// Totals below this are treated as silence and not normalized.
pub const SILENT_TOTAL: f64 = 1e-12;

/// Allowed deviation of a normalized list's sum from 1.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// Remaining masses closer than this are considered equal and both points
/// are retired together, so the sweep never emits a vanishing entry.
const TIE_EPSILON: f64 = 1e-12;

/// A lump of spectral mass at a frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassPoint {
    pub freq: f64,
    pub mass: f64,
    /// Index of the originating region.
    pub region_index: usize,
}

impl MassPoint {
    pub fn new(freq: f64, mass: f64, region_index: usize) -> Self {
        MassPoint {
            freq,
            mass,
            region_index,
        }
    }
}

/// One region per point, placed at the region's center frequency and sorted
/// by frequency (stable, so equal frequencies keep region order).
pub fn mass_points(regions: &[SpectralRegion]) -> Vec<MassPoint> {
    let mut points: Vec<MassPoint> = regions
        .iter()
        .enumerate()
        .map(|(i, g)| MassPoint::new(g.center_freq, g.mass, i))
        .collect();
    points.sort_by(|a, b| a.freq.total_cmp(&b.freq));
    points
}

/// Result of [`normalize`].
#[derive(Debug, Clone, PartialEq)]
pub enum Normalized {
    Masses {
        points: Vec<MassPoint>,
        total: f64,
    },
    /// Total mass below [`SILENT_TOTAL`]; nothing to transport.
    Silent,
}

/// Scales masses to unit sum, returning the original total.
pub fn normalize(points: &[MassPoint]) -> Result<Normalized> {
    if let Some(p) = points.iter().find(|p| !p.mass.is_finite() || p.mass < 0.0) {
        return Err(Error::invalid(format!(
            "mass must be finite and nonnegative, got {} at {} Hz",
            p.mass, p.freq
        )));
    }
    let total: f64 = points.iter().map(|p| p.mass).sum();
    if total < SILENT_TOTAL {
        return Ok(Normalized::Silent);
    }
    let points = points
        .iter()
        .map(|p| MassPoint {
            mass: p.mass / total,
            ..*p
        })
        .collect();
    Ok(Normalized::Masses { points, total })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanEntry {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
}

/// Sparse monotone transport plan.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransportPlan {
    pub entries: Vec<PlanEntry>,
}

impl TransportPlan {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Mass leaving each of `n` sources.
    pub fn row_sums(&self, n: usize) -> Vec<f64> {
        let mut sums = vec![0.0; n];
        for e in &self.entries {
            sums[e.source] += e.mass;
        }
        sums
    }

    /// Mass arriving at each of `n` targets.
    pub fn column_sums(&self, n: usize) -> Vec<f64> {
        let mut sums = vec![0.0; n];
        for e in &self.entries {
            sums[e.target] += e.mass;
        }
        sums
    }

    /// True when no two entries cross.
    pub fn is_monotone(&self) -> bool {
        self.entries
            .windows(2)
            .all(|w| w[0].source <= w[1].source && w[0].target <= w[1].target)
    }

    /// Rewrites point indices as the points' region indices.
    pub fn to_region_indices(&self, x: &[MassPoint], y: &[MassPoint]) -> TransportPlan {
        TransportPlan {
            entries: self
                .entries
                .iter()
                .map(|e| PlanEntry {
                    source: x[e.source].region_index,
                    target: y[e.target].region_index,
                    mass: e.mass,
                })
                .collect(),
        }
    }
}

/// Greedy monotone sweep over two unit-sum lists sorted by frequency.
///
/// Zero-mass points are skipped and receive no entries.
pub fn optimal_plan(x: &[MassPoint], y: &[MassPoint]) -> Result<TransportPlan> {
    check_normalized(x, "source")?;
    check_normalized(y, "target")?;

    let next = |points: &[MassPoint], from: usize| {
        (from..points.len())
            .find(|&k| points[k].mass > 0.0)
            .unwrap_or(points.len())
    };

    let mut entries = Vec::with_capacity(x.len() + y.len());
    let mut i = next(x, 0);
    let mut j = next(y, 0);
    let mut left_x = x.get(i).map_or(0.0, |p| p.mass);
    let mut left_y = y.get(j).map_or(0.0, |p| p.mass);

    while i < x.len() && j < y.len() {
        if (left_x - left_y).abs() <= TIE_EPSILON {
            entries.push(PlanEntry {
                source: i,
                target: j,
                mass: left_x.min(left_y),
            });
            i = next(x, i + 1);
            j = next(y, j + 1);
            left_x = x.get(i).map_or(0.0, |p| p.mass);
            left_y = y.get(j).map_or(0.0, |p| p.mass);
        } else if left_x < left_y {
            entries.push(PlanEntry {
                source: i,
                target: j,
                mass: left_x,
            });
            left_y -= left_x;
            i = next(x, i + 1);
            left_x = x.get(i).map_or(0.0, |p| p.mass);
        } else {
            entries.push(PlanEntry {
                source: i,
                target: j,
                mass: left_y,
            });
            left_x -= left_y;
            j = next(y, j + 1);
            left_y = y.get(j).map_or(0.0, |p| p.mass);
        }
    }
    Ok(TransportPlan { entries })
}

fn check_normalized(points: &[MassPoint], side: &str) -> Result<()> {
    if points
        .iter()
        .any(|p| p.mass.is_nan() || p.mass < 0.0 || !p.freq.is_finite())
    {
        return Err(Error::invalid(format!(
            "{side} masses must be nonnegative with finite frequencies"
        )));
    }
    if points.windows(2).any(|w| w[1].freq < w[0].freq) {
        return Err(Error::invalid(format!(
            "{side} points are not sorted by frequency"
        )));
    }
    let sum: f64 = points.iter().map(|p| p.mass).sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::invalid(format!(
            "{side} masses sum to {sum}, expected 1"
        )));
    }
    Ok(())
}

/// `sum mass * (fx - fy)^2` in Hz^2. Its square root is the 2-Wasserstein
/// distance.
pub fn plan_cost(plan: &TransportPlan, x: &[MassPoint], y: &[MassPoint]) -> f64 {
    plan.entries
        .iter()
        .map(|e| e.mass * (x[e.source].freq - y[e.target].freq).powi(2))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points(masses: &[f64], freqs: &[f64]) -> Vec<MassPoint> {
        masses
            .iter()
            .zip(freqs)
            .enumerate()
            .map(|(i, (m, f))| MassPoint::new(*f, *m, i))
            .collect()
    }

    fn triples(plan: &TransportPlan) -> Vec<(usize, usize, f64)> {
        plan.entries
            .iter()
            .map(|e| (e.source, e.target, e.mass))
            .collect()
    }

    fn assert_plan(plan: &TransportPlan, expected: &[(usize, usize, f64)]) {
        let got = triples(plan);
        assert_eq!(got.len(), expected.len(), "{got:?}");
        for (g, e) in got.iter().zip(expected) {
            assert_eq!((g.0, g.1), (e.0, e.1), "{got:?}");
            assert!((g.2 - e.2).abs() < 1e-12, "{got:?}");
        }
    }

    #[test]
    fn normalize_examples() {
        let n = normalize(&points(&[2.0, 2.0], &[1.0, 2.0])).unwrap();
        match n {
            Normalized::Masses { points, total } => {
                assert_eq!(total, 4.0);
                assert_eq!(
                    points.iter().map(|p| p.mass).collect::<Vec<_>>(),
                    vec![0.5, 0.5]
                );
            }
            Normalized::Silent => panic!("not silent"),
        }
        match normalize(&points(&[1.0, 3.0], &[1.0, 2.0])).unwrap() {
            Normalized::Masses { points, total } => {
                assert_eq!(total, 4.0);
                assert_eq!(
                    points.iter().map(|p| p.mass).collect::<Vec<_>>(),
                    vec![0.25, 0.75]
                );
            }
            Normalized::Silent => panic!("not silent"),
        }
        assert_eq!(
            normalize(&points(&[0.0, 0.0], &[1.0, 2.0])).unwrap(),
            Normalized::Silent
        );
        assert!(normalize(&points(&[1.0, -1.0], &[1.0, 2.0])).is_err());
    }

    #[test]
    fn single_point_plan_and_cost() {
        let x = points(&[1.0], &[440.0]);
        let y = points(&[1.0], &[554.0]);
        let plan = optimal_plan(&x, &y).unwrap();
        assert_plan(&plan, &[(0, 0, 1.0)]);
        assert!((plan_cost(&plan, &x, &y) - 12996.0).abs() < 1e-9);
    }

    #[test]
    fn two_by_two_example() {
        let x = points(&[0.5, 0.5], &[100.0, 200.0]);
        let y = points(&[0.25, 0.75], &[150.0, 300.0]);
        let plan = optimal_plan(&x, &y).unwrap();
        assert_plan(&plan, &[(0, 0, 0.25), (0, 1, 0.25), (1, 1, 0.5)]);
    }

    #[test]
    fn three_by_two_example_with_tie() {
        let x = points(&[0.3, 0.3, 0.4], &[100.0, 200.0, 300.0]);
        let y = points(&[0.4, 0.6], &[150.0, 250.0]);
        let plan = optimal_plan(&x, &y).unwrap();
        assert_plan(&plan, &[(0, 0, 0.3), (1, 0, 0.1), (1, 1, 0.2), (2, 1, 0.4)]);
    }

    #[test]
    fn identical_points_cost_nothing() {
        let x = points(&[0.2, 0.3, 0.5], &[100.0, 200.0, 300.0]);
        let plan = optimal_plan(&x, &x).unwrap();
        assert_eq!(plan_cost(&plan, &x, &x), 0.0);
        assert_eq!(plan.len(), 3);
    }

    #[test]
    fn zero_mass_points_get_no_entries() {
        let x = points(&[0.0, 1.0, 0.0], &[100.0, 200.0, 300.0]);
        let y = points(&[0.5, 0.0, 0.5], &[100.0, 200.0, 300.0]);
        let plan = optimal_plan(&x, &y).unwrap();
        assert_plan(&plan, &[(1, 0, 0.5), (1, 2, 0.5)]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let y = points(&[1.0], &[100.0]);
        assert!(optimal_plan(&points(&[0.5, 0.4], &[1.0, 2.0]), &y).is_err());
        assert!(optimal_plan(&points(&[0.5, 0.5], &[2.0, 1.0]), &y).is_err());
        assert!(optimal_plan(&points(&[1.5, -0.5], &[1.0, 2.0]), &y).is_err());
    }

    #[test]
    fn mass_points_sort_by_frequency_and_keep_region_index() {
        let region = |c: f64, m: f64| SpectralRegion {
            start_bin: 0,
            end_bin: 1,
            center_bin: 0,
            center_freq: c,
            mass: m,
        };
        let pts = mass_points(&[region(300.0, 1.0), region(100.0, 2.0), region(200.0, 3.0)]);
        assert_eq!(
            pts.iter().map(|p| p.region_index).collect::<Vec<_>>(),
            vec![1, 2, 0]
        );

        let plan = TransportPlan {
            entries: vec![PlanEntry {
                source: 0,
                target: 2,
                mass: 1.0,
            }],
        };
        let remapped = plan.to_region_indices(&pts, &pts);
        assert_eq!(
            (remapped.entries[0].source, remapped.entries[0].target),
            (1, 0)
        );
    }
}
