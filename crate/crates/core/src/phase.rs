//! Phase assignment across consecutive windows.
//!
//! The center bin of every placed region advances its phase by the mean of
//! the current and previous reassigned frequency times the hop duration.
//! The remaining bins of the region keep their donor's phase relative to the
//! donor center.

use std::f64::consts::PI;

use realfft::num_complex::Complex64;

use crate::interpolate::{Donor, Placement};
use crate::spectral::Spectrum;

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(phase: f64) -> f64 {
    let mut p = phase.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    // rem_euclid can land exactly on 2 pi for tiny negative inputs.
    if p <= -PI {
        p += 2.0 * PI;
    }
    p
}

/// `wrap(prev_phase + 2 pi (current + prev) / 2 * delta)`, frequencies in
/// Hz and `delta` in seconds.
pub fn advance_phase(prev_phase: f64, prev_freq: f64, current_freq: f64, delta: f64) -> f64 {
    wrap_phase(prev_phase + PI * (current_freq + prev_freq) * delta)
}

/// Phases for every bin of a region: `center_phase` plus each donor bin's
/// phase relative to the donor center.
pub fn lock_region_phases(
    center_phase: f64,
    donor_profile: &[Complex64],
    donor_center_phase: f64,
) -> Vec<f64> {
    donor_profile
        .iter()
        .map(|c| wrap_phase(center_phase + (c.arg() - donor_center_phase)))
        .collect()
}

/// Per-output-bin phase and reassigned frequency carried to the next hop.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub prev_phase: Vec<f64>,
    pub prev_reassigned: Vec<f64>,
    pub initialized: bool,
    bin_spacing: f64,
}

impl PhaseState {
    pub fn new(bins: usize, bin_spacing: f64) -> Self {
        PhaseState {
            prev_phase: vec![0.0; bins],
            prev_reassigned: (0..bins).map(|i| i as f64 * bin_spacing).collect(),
            initialized: false,
            bin_spacing,
        }
    }

    pub fn reset(&mut self) {
        let spacing = self.bin_spacing;
        self.prev_phase.fill(0.0);
        for (i, f) in self.prev_reassigned.iter_mut().enumerate() {
            *f = i as f64 * spacing;
        }
        self.initialized = false;
    }

    /// Phase at `bin` one hop later for a partial now at `current_freq`.
    pub fn accumulate(&self, bin: usize, current_freq: f64, delta: f64) -> f64 {
        advance_phase(
            self.prev_phase[bin],
            self.prev_reassigned[bin],
            current_freq,
            delta,
        )
    }

    /// Turns a placement into a complex spectrum and records its phases.
    ///
    /// On the first window after initialization donor phases are copied
    /// verbatim; afterwards each placed center accumulates from the state
    /// held at its output bin. Contested bins take the phase of their
    /// loudest contributor.
    pub fn apply(
        &mut self,
        placement: &Placement,
        x: &Spectrum,
        y: &Spectrum,
        delta: f64,
    ) -> Spectrum {
        let bins = placement.magnitudes.len();
        let center_phases: Vec<f64> = placement
            .placed
            .iter()
            .map(|p| {
                let donor = donor_spectrum(p.donor, x, y);
                if self.initialized {
                    self.accumulate(p.target_center_bin, p.target_freq, delta)
                } else {
                    donor.bins[p.donor_region.center_bin].arg()
                }
            })
            .collect();

        let mut out = vec![Complex64::new(0.0, 0.0); bins];
        for (bin, owner) in placement.owners.iter().enumerate() {
            let Some(owner) = owner else {
                self.prev_phase[bin] = 0.0;
                self.prev_reassigned[bin] = bin as f64 * self.bin_spacing;
                continue;
            };
            let p = &placement.placed[owner.placed];
            let donor = donor_spectrum(p.donor, x, y);
            let donor_bin = p
                .donor_bin(bin)
                .expect("owner covers this bin by construction");
            let relative =
                donor.bins[donor_bin].arg() - donor.bins[p.donor_region.center_bin].arg();
            let phase = wrap_phase(center_phases[owner.placed] + relative);
            out[bin] = Complex64::from_polar(placement.magnitudes[bin], phase);
            self.prev_phase[bin] = phase;
            self.prev_reassigned[bin] = owner.reassigned_freq;
        }
        self.initialized = true;
        Spectrum {
            bins: out,
            bin_spacing: placement.bin_spacing,
        }
    }

    /// Adopts an externally produced output spectrum (e.g. a crossfade) as
    /// the previous window.
    pub fn rebase(&mut self, output: &Spectrum, reassigned: &[f64]) {
        for (bin, c) in output.bins.iter().enumerate() {
            if c.norm_sqr() > 0.0 {
                self.prev_phase[bin] = c.arg();
                self.prev_reassigned[bin] = reassigned[bin];
            } else {
                self.prev_phase[bin] = 0.0;
                self.prev_reassigned[bin] = bin as f64 * self.bin_spacing;
            }
        }
        self.initialized = true;
    }
}

fn donor_spectrum<'a>(donor: Donor, x: &'a Spectrum, y: &'a Spectrum) -> &'a Spectrum {
    match donor {
        Donor::X => x,
        Donor::Y => y,
    }
}
