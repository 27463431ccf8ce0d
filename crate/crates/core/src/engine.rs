//! Hop-by-hop streaming engine.
//!
//! Each call to [`TransportEngine::process_hop`] takes one hop of new samples
//! from both inputs and returns one hop of output:
//!
//! 1. analyze the latest window of each input (plain and derivative window),
//! 2. reassign and segment both spectra into regions,
//! 3. solve the monotone transport plan between normalized region masses,
//! 4. place every plan entry at its displaced frequency,
//! 5. assign phases by accumulation and region locking,
//! 6. inverse transform and overlap-add.
//!
//! If either input is silent for the hop the two spectra are crossfaded
//! instead, since there is no transport against an empty measure.

use log::trace;

use crate::error::{Error, Result};
use crate::interpolate::{crossfade, place};
use crate::phase::PhaseState;
use crate::reassign::{segment, ReassignedSpectrum, SpectralRegion};
use crate::spectral::{
    make_hann_derivative_window, make_hann_window, overlap_add_constant, AnalysisConfig, Spectrum,
    Stft,
};
use crate::transport::{mass_points, normalize, optimal_plan, Normalized};

/// Windows a frame twice and produces its reassigned spectrum and regions.
#[derive(Debug)]
pub struct FrameAnalyzer {
    stft: Stft,
    window: Vec<f64>,
    derivative: Vec<f64>,
    scratch: Spectrum,
}

impl FrameAnalyzer {
    pub fn new(config: AnalysisConfig) -> Result<Self> {
        Ok(FrameAnalyzer {
            window: make_hann_window(config.window_length)?,
            derivative: make_hann_derivative_window(
                config.window_length,
                f64::from(config.sample_rate),
            )?,
            scratch: Spectrum::zeros(&config),
            stft: Stft::new(config),
        })
    }

    pub fn config(&self) -> &AnalysisConfig {
        self.stft.config()
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    pub fn reassigned(&mut self, samples: &[f64]) -> Result<ReassignedSpectrum> {
        let spectrum = self.stft.analyze(samples, &self.window)?;
        self.stft
            .analyze_into(samples, &self.derivative, &mut self.scratch)?;
        ReassignedSpectrum::new(spectrum, &self.scratch)
    }

    pub fn regions(
        &mut self,
        samples: &[f64],
    ) -> Result<(ReassignedSpectrum, Vec<SpectralRegion>)> {
        let r = self.reassigned(samples)?;
        let regions = segment(&r);
        Ok((r, regions))
    }

    pub fn synthesize_into(&mut self, spectrum: &Spectrum, out: &mut [f64]) -> Result<()> {
        self.stft.synthesize_into(spectrum, out)
    }
}

/// Single-channel engine state: two input windows, the overlap-add
/// accumulator, and the phase memory.
#[derive(Debug)]
pub struct TransportEngine {
    config: AnalysisConfig,
    analyzer: FrameAnalyzer,
    cola: f64,
    input_a: Vec<f64>,
    input_b: Vec<f64>,
    overlap: Vec<f64>,
    frame: Vec<f64>,
    phase: PhaseState,
    hop_index: u64,
    current_k: f64,
}

impl TransportEngine {
    pub fn new(config: AnalysisConfig) -> Result<Self> {
        let analyzer = FrameAnalyzer::new(config)?;
        let (cola, _) = overlap_add_constant(analyzer.window(), config.hop_length);
        Ok(TransportEngine {
            config,
            analyzer,
            cola,
            input_a: vec![0.0; config.window_length],
            input_b: vec![0.0; config.window_length],
            overlap: vec![0.0; config.window_length],
            frame: vec![0.0; config.window_length],
            phase: PhaseState::new(config.bins(), config.bin_spacing()),
            hop_index: 0,
            current_k: 0.0,
        })
    }

    pub fn config(&self) -> &AnalysisConfig {
        &self.config
    }

    /// Number of hops processed so far.
    pub fn hop_index(&self) -> u64 {
        self.hop_index
    }

    /// k used by the most recent hop.
    pub fn current_k(&self) -> f64 {
        self.current_k
    }

    /// Offset between the input and output sample streams: output sample
    /// `m` reconstructs input sample `m - latency_samples()`.
    pub fn latency_samples(&self) -> usize {
        self.config.hop_length
    }

    pub fn phase_state(&self) -> &PhaseState {
        &self.phase
    }

    pub fn reset(&mut self) {
        self.input_a.fill(0.0);
        self.input_b.fill(0.0);
        self.overlap.fill(0.0);
        self.phase.reset();
        self.hop_index = 0;
        self.current_k = 0.0;
    }

    pub fn process_hop(&mut self, hop_a: &[f64], hop_b: &[f64], k: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.config.hop_length];
        self.process_hop_into(hop_a, hop_b, k, &mut out)?;
        Ok(out)
    }

    pub fn process_hop_into(
        &mut self,
        hop_a: &[f64],
        hop_b: &[f64],
        k: f64,
        out: &mut [f64],
    ) -> Result<()> {
        let hop = self.config.hop_length;
        if hop_a.len() != hop || hop_b.len() != hop || out.len() != hop {
            return Err(Error::invalid(format!(
                "hop buffers must hold {hop} samples (got {}, {}, {})",
                hop_a.len(),
                hop_b.len(),
                out.len()
            )));
        }
        if !(0.0..=1.0).contains(&k) {
            return Err(Error::invalid(format!(
                "interpolation parameter {k} outside [0, 1]"
            )));
        }
        push_hop(&mut self.input_a, hop_a);
        push_hop(&mut self.input_b, hop_b);

        let spectrum = self.transform(k)?;
        self.analyzer.synthesize_into(&spectrum, &mut self.frame)?;
        if let Some(n) = self.frame.iter().position(|s| !s.is_finite()) {
            return Err(Error::EngineFault {
                hop: self.hop_index,
                detail: format!("non-finite output sample at frame offset {n}"),
            });
        }

        for (acc, s) in self.overlap.iter_mut().zip(&self.frame) {
            *acc += s / self.cola;
        }
        out.copy_from_slice(&self.overlap[..hop]);
        self.overlap.copy_within(hop.., 0);
        let len = self.overlap.len();
        self.overlap[len - hop..].fill(0.0);

        self.current_k = k;
        self.hop_index += 1;
        Ok(())
    }

    fn transform(&mut self, k: f64) -> Result<Spectrum> {
        let (ra, ga) = self.analyzer.regions(&self.input_a)?;
        let (rb, gb) = self.analyzer.regions(&self.input_b)?;
        if !ra.spectrum.is_finite() || !rb.spectrum.is_finite() {
            return Err(Error::EngineFault {
                hop: self.hop_index,
                detail: "non-finite analysis spectrum (input contains NaN or infinity)".into(),
            });
        }
        let pa = mass_points(&ga);
        let pb = mass_points(&gb);
        let delta = self.config.hop_seconds();

        match (normalize(&pa)?, normalize(&pb)?) {
            (
                Normalized::Masses {
                    points: na,
                    total: ta,
                },
                Normalized::Masses {
                    points: nb,
                    total: tb,
                },
            ) => {
                let plan = optimal_plan(&na, &nb)?.to_region_indices(&na, &nb);
                trace!(
                    "hop {}: {} x {} regions, {} plan entries",
                    self.hop_index,
                    ga.len(),
                    gb.len(),
                    plan.len()
                );
                let placement = place(&plan, &ga, &gb, &ra.spectrum, &rb.spectrum, k, (ta, tb))?;
                Ok(self
                    .phase
                    .apply(&placement, &ra.spectrum, &rb.spectrum, delta))
            }
            _ => {
                let mixed = crossfade(&ra.spectrum, &rb.spectrum, k);
                let freqs: Vec<f64> = (0..mixed.len())
                    .map(|i| {
                        let wa = (1.0 - k) * ra.spectrum.bins[i].norm();
                        let wb = k * rb.spectrum.bins[i].norm();
                        if wa >= wb {
                            ra.reassigned_freq[i]
                        } else {
                            rb.reassigned_freq[i]
                        }
                    })
                    .collect();
                self.phase.rebase(&mixed, &freqs);
                Ok(mixed)
            }
        }
    }
}

fn push_hop(window: &mut [f64], hop: &[f64]) {
    let keep = window.len() - hop.len();
    window.copy_within(hop.len().., 0);
    window[keep..].copy_from_slice(hop);
}
