//! Displacement interpolation of region masses between two spectra.
//!
//! Every plan entry moves its share of mass to the convex combination of the
//! two region centers. The mass travels with the bin profile of a donor
//! region, translated by a whole number of bins, so a smeared partial moves
//! as a single unit.

use realfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::reassign::SpectralRegion;
use crate::spectral::Spectrum;
use crate::transport::{PlanEntry, TransportPlan};

/// `(1 - k) fx + k fy`.
pub fn displaced_frequency(fx: f64, fy: f64, k: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&k) {
        return Err(Error::invalid(format!(
            "interpolation parameter {k} outside [0, 1]"
        )));
    }
    Ok((1.0 - k) * fx + k * fy)
}

/// Which input lends its bin profile to a placed mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Donor {
    X,
    Y,
}

impl Donor {
    /// The source side carries the shape below k = 0.5, the target side
    /// from k = 0.5 on.
    pub fn for_k(k: f64) -> Self {
        if k < 0.5 {
            Donor::X
        } else {
            Donor::Y
        }
    }
}

/// One plan entry placed in the output spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacedMass {
    /// Entry with region indices.
    pub entry: PlanEntry,
    pub target_freq: f64,
    pub target_center_bin: usize,
    pub donor: Donor,
    /// Donor region, in the donor spectrum's bin coordinates.
    pub donor_region: SpectralRegion,
    /// Output bin = donor bin + `bin_shift`.
    pub bin_shift: isize,
    /// Factor applied to donor bin magnitudes.
    pub gain: f64,
}

impl PlacedMass {
    /// Donor bin feeding output bin `bin`, if any.
    pub fn donor_bin(&self, bin: usize) -> Option<usize> {
        let b = bin as isize - self.bin_shift;
        (b >= self.donor_region.start_bin as isize && b < self.donor_region.end_bin as isize)
            .then_some(b as usize)
    }
}

/// Loudest contribution to one output bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinOwner {
    /// Index into [`Placement::placed`].
    pub placed: usize,
    pub magnitude: f64,
    /// Interpolated reassigned frequency of the owning placement.
    pub reassigned_freq: f64,
}

/// Output magnitudes plus per-bin donor bookkeeping for phase assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub k: f64,
    pub magnitudes: Vec<f64>,
    pub placed: Vec<PlacedMass>,
    pub owners: Vec<Option<BinOwner>>,
    pub bin_spacing: f64,
}

impl Placement {
    pub fn total_magnitude(&self) -> f64 {
        self.magnitudes.iter().sum()
    }
}

/// Places every plan entry at its displaced frequency.
///
/// `plan` must use region indices (see
/// [`TransportPlan::to_region_indices`]) with masses normalized to unit sum;
/// `totals` are the pre-normalization masses of both spectra, interpolated
/// linearly to set the output level. The bin shift is measured from the
/// donor's own center: it is `round(k (fy - fx) / spacing)` for the source
/// donor and `round((1 - k) (fx - fy) / spacing)` for the target donor, so
/// both endpoints reproduce their input without any shift.
#[allow(clippy::too_many_arguments)]
pub fn place(
    plan: &TransportPlan,
    regions_x: &[SpectralRegion],
    regions_y: &[SpectralRegion],
    x: &Spectrum,
    y: &Spectrum,
    k: f64,
    totals: (f64, f64),
) -> Result<Placement> {
    if x.len() != y.len() {
        return Err(Error::invalid("spectra differ in length"));
    }
    let bins = x.len();
    let spacing = x.bin_spacing;
    let scale = (1.0 - k) * totals.0 + k * totals.1;
    let donor = Donor::for_k(k);

    let mut magnitudes = vec![0.0; bins];
    let mut owners: Vec<Option<BinOwner>> = vec![None; bins];
    let mut placed = Vec::with_capacity(plan.len());

    for entry in &plan.entries {
        let (gx, gy) = match (regions_x.get(entry.source), regions_y.get(entry.target)) {
            (Some(gx), Some(gy)) => (gx, gy),
            _ => {
                return Err(Error::invalid(format!(
                    "plan entry {entry:?} refers to a missing region"
                )))
            }
        };
        let target_freq = displaced_frequency(gx.center_freq, gy.center_freq, k)?;
        let (region, spectrum, travel) = match donor {
            Donor::X => (gx, x, target_freq - gx.center_freq),
            Donor::Y => (gy, y, target_freq - gy.center_freq),
        };
        if region.mass <= 0.0 {
            continue;
        }
        let center = (region.center_bin as isize + (travel / spacing).round() as isize)
            .clamp(0, bins as isize - 1);
        let bin_shift = center - region.center_bin as isize;
        let gain = entry.mass * scale / region.mass;

        let index = placed.len();
        for b in region.bins() {
            let out = b as isize + bin_shift;
            if out < 0 || out >= bins as isize {
                continue;
            }
            let out = out as usize;
            let m = spectrum.bins[b].norm() * gain;
            magnitudes[out] += m;
            if owners[out].is_none_or(|o| m > o.magnitude) {
                owners[out] = Some(BinOwner {
                    placed: index,
                    magnitude: m,
                    reassigned_freq: target_freq,
                });
            }
        }
        placed.push(PlacedMass {
            entry: *entry,
            target_freq,
            target_center_bin: center as usize,
            donor,
            donor_region: *region,
            bin_shift,
            gain,
        });
    }

    Ok(Placement {
        k,
        magnitudes,
        placed,
        owners,
        bin_spacing: spacing,
    })
}

/// Linear crossfade of two complex spectra, used when either side is silent.
pub fn crossfade(x: &Spectrum, y: &Spectrum, k: f64) -> Spectrum {
    Spectrum {
        bins: x
            .bins
            .iter()
            .zip(&y.bins)
            .map(|(a, b)| a * (1.0 - k) + b * k)
            .collect::<Vec<Complex64>>(),
        bin_spacing: x.bin_spacing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::PlanEntry;

    fn spectrum(mags: &[f64]) -> Spectrum {
        Spectrum {
            bins: mags.iter().map(|m| Complex64::new(*m, 0.0)).collect(),
            bin_spacing: 10.0,
        }
    }

    fn region(start: usize, end: usize, center: usize, freq: f64, s: &Spectrum) -> SpectralRegion {
        SpectralRegion {
            start_bin: start,
            end_bin: end,
            center_bin: center,
            center_freq: freq,
            mass: s.bins[start..end].iter().map(|c| c.norm()).sum(),
        }
    }

    #[test]
    fn displaced_frequency_examples() {
        assert_eq!(displaced_frequency(440.0, 554.37, 0.0).unwrap(), 440.0);
        assert_eq!(displaced_frequency(440.0, 554.37, 1.0).unwrap(), 554.37);
        assert!((displaced_frequency(440.0, 554.37, 0.5).unwrap() - 497.185).abs() < 1e-12);
        assert!(displaced_frequency(440.0, 554.37, 1.5).is_err());
        assert!(displaced_frequency(440.0, 554.37, -0.1).is_err());
    }

    #[test]
    fn single_region_slides_between_endpoints() {
        // X: partial centered on bin 3 (30 Hz); Y: partial centered on bin 9 (90 Hz).
        let mut xm = vec![0.0; 16];
        xm[2..5].copy_from_slice(&[1.0, 2.0, 1.0]);
        let mut ym = vec![0.0; 16];
        ym[8..11].copy_from_slice(&[0.5, 3.0, 0.5]);
        let (x, y) = (spectrum(&xm), spectrum(&ym));
        let gx = [region(0, 16, 3, 30.0, &x)];
        let gy = [region(0, 16, 9, 90.0, &y)];
        let plan = TransportPlan {
            entries: vec![PlanEntry {
                source: 0,
                target: 0,
                mass: 1.0,
            }],
        };
        let totals = (4.0, 4.0);

        let p0 = place(&plan, &gx, &gy, &x, &y, 0.0, totals).unwrap();
        assert_eq!(p0.magnitudes, xm);
        let p1 = place(&plan, &gx, &gy, &x, &y, 1.0, totals).unwrap();
        assert_eq!(p1.magnitudes, ym);

        let half = place(&plan, &gx, &gy, &x, &y, 0.5, totals).unwrap();
        assert_eq!(half.placed[0].target_center_bin, 6);
        assert_eq!(half.placed[0].donor, Donor::Y);
        assert_eq!(&half.magnitudes[5..8], &[0.5, 3.0, 0.5]);

        let quarter = place(&plan, &gx, &gy, &x, &y, 0.25, totals).unwrap();
        // 30 + 0.25 * 60 = 45 Hz -> 1.5 bins of travel, rounded away from zero.
        assert_eq!(quarter.placed[0].bin_shift, 2);
        assert_eq!(&quarter.magnitudes[4..7], &[1.0, 2.0, 1.0]);
    }

    #[test]
    fn output_level_interpolates_totals() {
        let mut xm = vec![0.0; 32];
        xm[4..7].copy_from_slice(&[1.0, 2.0, 1.0]);
        let mut ym = vec![0.0; 32];
        ym[20..23].copy_from_slice(&[2.0, 8.0, 2.0]);
        let (x, y) = (spectrum(&xm), spectrum(&ym));
        let gx = [region(0, 32, 5, 50.0, &x)];
        let gy = [region(0, 32, 21, 210.0, &y)];
        let plan = TransportPlan {
            entries: vec![PlanEntry {
                source: 0,
                target: 0,
                mass: 1.0,
            }],
        };
        for k in [0.0, 0.1, 0.3, 0.5, 0.7, 1.0] {
            let p = place(&plan, &gx, &gy, &x, &y, k, (4.0, 12.0)).unwrap();
            let expected = (1.0 - k) * 4.0 + k * 12.0;
            assert!((p.total_magnitude() - expected).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn overlapping_masses_add_and_loudest_owns_the_bin() {
        let mut xm = vec![0.0; 16];
        xm[2] = 1.0;
        xm[6] = 3.0;
        let ym = xm.clone();
        let (x, y) = (spectrum(&xm), spectrum(&ym));
        let gx = [region(0, 4, 2, 20.0, &x), region(4, 16, 6, 60.0, &x)];
        let gy = [region(0, 4, 2, 20.0, &y), region(4, 16, 6, 60.0, &y)];
        // Cross the two masses so both land on bin 4 at k = 0.5.
        let plan = TransportPlan {
            entries: vec![
                PlanEntry {
                    source: 0,
                    target: 1,
                    mass: 0.25,
                },
                PlanEntry {
                    source: 1,
                    target: 0,
                    mass: 0.75,
                },
            ],
        };
        let p = place(&plan, &gx, &gy, &x, &y, 0.5, (4.0, 4.0)).unwrap();
        assert!((p.magnitudes[4] - 4.0).abs() < 1e-12);
        let owner = p.owners[4].unwrap();
        assert_eq!(owner.placed, 1);
        assert!((owner.magnitude - 3.0).abs() < 1e-12);
        assert!((owner.reassigned_freq - 40.0).abs() < 1e-12);
    }

    #[test]
    fn crossfade_is_linear() {
        let x = spectrum(&[1.0, 2.0]);
        let y = spectrum(&[3.0, 0.0]);
        let c = crossfade(&x, &y, 0.25);
        assert_eq!(c.bins[0].re, 1.5);
        assert_eq!(c.bins[1].re, 1.5);
    }
}
