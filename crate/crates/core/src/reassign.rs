//! Frequency reassignment and segmentation of a spectrum into sinusoidal
//! regions.
//!
//! Each bin is mapped to the frequency its energy actually belongs to. The
//! offset `reassigned - nominal` is positive below a sinusoid and negative
//! above it, so a falling zero crossing marks a region's center and a rising
//! crossing marks the boundary between two regions.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral::Spectrum;

/// Bins quieter than this fraction of the frame's loudest bin are massless
/// for the reassignment quotient.
pub const SILENCE_RATIO: f64 = 1e-8;

/// Twice the Hann window's highest sidelobe (-31.5 dB each), i.e. the
/// leakage of two partials adding in phase. A region whose loudest bin sits
/// below this fraction of an adjacent region's loudest bin is
/// indistinguishable from leakage.
pub const LEAKAGE_RATIO: f64 = 2.0 * 0.026_6;

/// A spectrum together with per-bin reassigned frequencies, in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct ReassignedSpectrum {
    pub spectrum: Spectrum,
    /// `reassigned_freq[i] - bin_freq(i)`.
    pub offset: Vec<f64>,
    /// Clamped to `[0, nyquist]`.
    pub reassigned_freq: Vec<f64>,
}

impl ReassignedSpectrum {
    /// Builds the reassigned spectrum from the plain spectrum and the
    /// spectrum of the same frame taken with the time-derivative window.
    pub fn new(spectrum: Spectrum, derivative: &Spectrum) -> Result<Self> {
        let raw = reassigned_offsets(&spectrum, derivative)?;
        let nyquist = spectrum.nyquist();
        let mut offset = Vec::with_capacity(raw.len());
        let mut reassigned_freq = Vec::with_capacity(raw.len());
        for (i, d) in raw.into_iter().enumerate() {
            let nominal = spectrum.bin_freq(i);
            let f = (nominal + d).clamp(0.0, nyquist);
            reassigned_freq.push(f);
            offset.push(f - nominal);
        }
        Ok(ReassignedSpectrum {
            spectrum,
            offset,
            reassigned_freq,
        })
    }

    pub fn len(&self) -> usize {
        self.offset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offset.is_empty()
    }
}

/// Per-bin frequency offsets in Hz from a spectrum and its derivative-window
/// companion: `-Im{Xd * conj(X)} / |X|^2 / 2pi`. Bins under the silence
/// threshold get offset 0.
pub fn reassigned_offsets(x: &Spectrum, derivative: &Spectrum) -> Result<Vec<f64>> {
    if x.len() != derivative.len() {
        return Err(Error::invalid(format!(
            "spectrum lengths differ: {} vs {}",
            x.len(),
            derivative.len()
        )));
    }
    let peak = x.bins.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max);
    let floor = peak * SILENCE_RATIO * SILENCE_RATIO;
    Ok(x.bins
        .iter()
        .zip(&derivative.bins)
        .map(|(xi, di)| {
            let power = xi.norm_sqr();
            if power <= floor || power == 0.0 {
                0.0
            } else {
                -(di * xi.conj()).im / power / (2.0 * PI)
            }
        })
        .collect())
}

/// Contiguous run of bins carrying one smeared partial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralRegion {
    pub start_bin: usize,
    /// Exclusive.
    pub end_bin: usize,
    pub center_bin: usize,
    /// Reassigned frequency at `center_bin`, Hz.
    pub center_freq: f64,
    /// Sum of bin magnitudes over the region.
    pub mass: f64,
}

impl SpectralRegion {
    pub fn len(&self) -> usize {
        self.end_bin - self.start_bin
    }

    pub fn is_empty(&self) -> bool {
        self.end_bin == self.start_bin
    }

    pub fn bins(&self) -> std::ops::Range<usize> {
        self.start_bin..self.end_bin
    }
}

/// Splits the spectrum at zero crossings of the reassignment offset.
///
/// Zero offsets carry no sign; a crossing is detected between the last
/// nonzero-offset bin and the next one of opposite sign. When zeros separate
/// them the first zero bin is taken as the crossing point, otherwise the bin
/// with the smaller `|offset|` (ties to the lower bin). Regions without a
/// falling crossing are centered on their loudest bin.
///
/// Sidelobe interference between partials, and the negative-frequency image
/// near DC, produce sign flips far below the partials themselves. Regions
/// under [`LEAKAGE_RATIO`] of a neighbor's peak are folded into the louder
/// neighbor, keeping the neighbor's center.
pub fn segment(r: &ReassignedSpectrum) -> Vec<SpectralRegion> {
    let mags = r.spectrum.magnitudes();
    let raw = split_at_crossings(r, &mags);
    merge_leakage(raw, &mags)
}

fn split_at_crossings(r: &ReassignedSpectrum, mags: &[f64]) -> Vec<SpectralRegion> {
    let n = r.len();
    let mut regions = Vec::new();
    if n == 0 {
        return regions;
    }

    let mut start = 0;
    let mut center: Option<usize> = None;
    // (index, positive?) of the last bin with a nonzero offset.
    let mut last: Option<(usize, bool)> = None;

    for (i, &d) in r.offset.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        let positive = d > 0.0;
        if let Some((p, was_positive)) = last {
            if was_positive != positive {
                let crossing = if i > p + 1 {
                    p + 1
                } else if r.offset[i].abs() < r.offset[p].abs() {
                    i
                } else {
                    p
                };
                if was_positive {
                    // Falling crossing. A region holds at most one since a
                    // rising crossing must separate two falling ones.
                    center.get_or_insert(crossing);
                } else {
                    let boundary = if i > p + 1 { p + 1 } else { i };
                    if boundary > start {
                        regions.push(make_region(r, mags, start, boundary, center.take()));
                        start = boundary;
                    }
                    center = None;
                }
            }
        }
        last = Some((i, positive));
    }
    regions.push(make_region(r, mags, start, n, center));
    regions
}

fn merge_leakage(mut regions: Vec<SpectralRegion>, mags: &[f64]) -> Vec<SpectralRegion> {
    let peak = |g: &SpectralRegion| mags[g.bins()].iter().copied().fold(0.0, f64::max);
    let mut peaks: Vec<f64> = regions.iter().map(peak).collect();
    loop {
        let mut merged = false;
        let mut i = 0;
        while i < regions.len() {
            let left = i.checked_sub(1).map(|l| peaks[l]);
            let right = peaks.get(i + 1).copied();
            let loudest = left.unwrap_or(0.0).max(right.unwrap_or(0.0));
            if loudest > 0.0 && peaks[i] < LEAKAGE_RATIO * loudest {
                let victim = regions.remove(i);
                peaks.remove(i);
                // Ties go to the lower neighbor.
                let into = if left.unwrap_or(0.0) >= right.unwrap_or(0.0) {
                    i - 1
                } else {
                    i
                };
                let host = &mut regions[into];
                host.start_bin = host.start_bin.min(victim.start_bin);
                host.end_bin = host.end_bin.max(victim.end_bin);
                host.mass += victim.mass;
                merged = true;
            } else {
                i += 1;
            }
        }
        if !merged {
            return regions;
        }
    }
}

fn make_region(
    r: &ReassignedSpectrum,
    mags: &[f64],
    start: usize,
    end: usize,
    center: Option<usize>,
) -> SpectralRegion {
    let center_bin = center
        .filter(|c| (start..end).contains(c))
        .unwrap_or_else(|| {
            (start..end).fold(start, |best, i| if mags[i] > mags[best] { i } else { best })
        });
    SpectralRegion {
        start_bin: start,
        end_bin: end,
        center_bin,
        center_freq: r.reassigned_freq[center_bin],
        mass: mags[start..end].iter().sum(),
    }
}
