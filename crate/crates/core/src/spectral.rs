//! Windowing, zero-padded real FFT analysis and truncating inverse synthesis.
//!
//! Frames are analysed with a periodic Hann window at 50% overlap. Synthesis
//! applies no window: the inverse transform is truncated back to the window
//! length and the caller overlap-adds at the hop length, dividing by the
//! window's overlap-add constant.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use realfft::num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::error::{Error, Result};

/// Framing parameters shared by both input streams and the output stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalysisConfig {
    pub sample_rate: u32,
    pub window_length: usize,
    pub hop_length: usize,
    pub fft_length: usize,
}

impl AnalysisConfig {
    pub const DEFAULT_SAMPLE_RATE: u32 = 44_100;
    pub const DEFAULT_WINDOW_LENGTH: usize = 2206;
    pub const DEFAULT_FFT_LENGTH: usize = 8192;

    /// Window duration used when deriving a config for an arbitrary rate.
    pub const WINDOW_SECONDS: f64 = 0.05;
    /// Coarsest bin spacing accepted when choosing the FFT length.
    pub const MAX_BIN_SPACING_HZ: f64 = 5.5;

    pub fn new(sample_rate: u32, window_length: usize, fft_length: usize) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if window_length < 2 || !window_length.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "window length must be even and >= 2, got {window_length}"
            )));
        }
        if fft_length < window_length {
            return Err(Error::invalid(format!(
                "fft length {fft_length} is shorter than window length {window_length}"
            )));
        }
        Ok(AnalysisConfig {
            sample_rate,
            window_length,
            hop_length: window_length / 2,
            fft_length,
        })
    }

    /// Derives the framing for `sample_rate`: a 50 ms window rounded up to an
    /// even length, and the smallest power-of-two FFT whose bin spacing does
    /// not exceed [`Self::MAX_BIN_SPACING_HZ`]. At 44.1 kHz this gives the
    /// default 2206 / 8192 framing.
    pub fn for_sample_rate(sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        let mut window = (Self::WINDOW_SECONDS * f64::from(sample_rate)).round() as usize;
        window = window.max(2);
        if window % 2 == 1 {
            window += 1;
        }
        let min_fft = (f64::from(sample_rate) / Self::MAX_BIN_SPACING_HZ).ceil() as usize;
        let fft = min_fft.max(window).next_power_of_two();
        Self::new(sample_rate, window, fft)
    }

    /// Number of one-sided bins for real input.
    pub fn bins(&self) -> usize {
        self.fft_length / 2 + 1
    }

    pub fn bin_spacing(&self) -> f64 {
        f64::from(self.sample_rate) / self.fft_length as f64
    }

    pub fn nyquist(&self) -> f64 {
        f64::from(self.sample_rate) / 2.0
    }

    /// Hop duration in seconds.
    pub fn hop_seconds(&self) -> f64 {
        self.hop_length as f64 / f64::from(self.sample_rate)
    }
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            sample_rate: Self::DEFAULT_SAMPLE_RATE,
            window_length: Self::DEFAULT_WINDOW_LENGTH,
            hop_length: Self::DEFAULT_WINDOW_LENGTH / 2,
            fft_length: Self::DEFAULT_FFT_LENGTH,
        }
    }
}

impl fmt::Display for AnalysisConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} Hz, window {}, hop {}, fft {} ({:.4} Hz/bin)",
            self.sample_rate,
            self.window_length,
            self.hop_length,
            self.fft_length,
            self.bin_spacing()
        )
    }
}

/// One-sided complex spectrum of a real frame. Bin `i` sits at
/// `i * bin_spacing` Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub bins: Vec<Complex64>,
    pub bin_spacing: f64,
}

impl Spectrum {
    pub fn zeros(config: &AnalysisConfig) -> Self {
        Spectrum {
            bins: vec![Complex64::new(0.0, 0.0); config.bins()],
            bin_spacing: config.bin_spacing(),
        }
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn bin_freq(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_spacing
    }

    pub fn nyquist(&self) -> f64 {
        self.bin_freq(self.bins.len().saturating_sub(1))
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.bins.iter().map(|c| c.norm()).collect()
    }

    /// Sum of bin magnitudes.
    pub fn total_magnitude(&self) -> f64 {
        self.bins.iter().map(|c| c.norm()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.bins
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// A window-length block of samples taken from a stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub samples: Vec<f64>,
    /// Index of the first sample since stream start.
    pub start_time: u64,
}

impl Frame {
    pub fn new(samples: Vec<f64>, start_time: u64) -> Self {
        Frame {
            samples,
            start_time,
        }
    }
}

/// Periodic (DFT-even) Hann window, `w[n] = 0.5 (1 - cos(2 pi n / length))`.
pub fn make_hann_window(length: usize) -> Result<Vec<f64>> {
    if length < 2 {
        return Err(Error::invalid(format!(
            "hann window length must be >= 2, got {length}"
        )));
    }
    let step = 2.0 * PI / length as f64;
    Ok((0..length)
        .map(|n| 0.5 * (1.0 - (step * n as f64).cos()))
        .collect())
}

/// Multiplies `window` by time in seconds measured from the window center.
pub fn make_time_weighted_window(window: &[f64], sample_rate: f64) -> Vec<f64> {
    let center = (window.len() as f64 - 1.0) / 2.0;
    window
        .iter()
        .enumerate()
        .map(|(n, w)| (n as f64 - center) / sample_rate * w)
        .collect()
}

/// Time derivative (per second) of the periodic Hann window of `length`
/// samples at `sample_rate`.
pub fn make_hann_derivative_window(length: usize, sample_rate: f64) -> Result<Vec<f64>> {
    if length < 2 {
        return Err(Error::invalid(format!(
            "hann window length must be >= 2, got {length}"
        )));
    }
    let step = 2.0 * PI / length as f64;
    let scale = PI * sample_rate / length as f64;
    Ok((0..length)
        .map(|n| scale * (step * n as f64).sin())
        .collect())
}

/// Overlap-add constant of `window` at `hop`: the mean of the summed shifted
/// windows over one hop, and the worst deviation from that mean.
pub fn overlap_add_constant(window: &[f64], hop: usize) -> (f64, f64) {
    assert!(hop > 0 && hop <= window.len());
    let sums: Vec<f64> = (0..hop)
        .map(|n| window.iter().skip(n).step_by(hop).sum())
        .collect();
    let mean = sums.iter().sum::<f64>() / hop as f64;
    let deviation = sums.iter().map(|s| (s - mean).abs()).fold(0.0, f64::max);
    (mean, deviation)
}

/// Forward/inverse transform pair with owned plans and scratch memory.
pub struct Stft {
    config: AnalysisConfig,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
    time: Vec<f64>,
    freq: Vec<Complex64>,
    scratch_forward: Vec<Complex64>,
    scratch_inverse: Vec<Complex64>,
}

impl fmt::Debug for Stft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Stft")
            .field("config", &self.config)
            .finish()
    }
}

impl Stft {
    pub fn new(config: AnalysisConfig) -> Self {
        let mut planner = RealFftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(config.fft_length);
        let inverse = planner.plan_fft_inverse(config.fft_length);
        Stft {
            config,
            time: forward.make_input_vec(),
            freq: forward.make_output_vec(),
            scratch_forward: forward.make_scratch_vec(),
            scratch_inverse: inverse.make_scratch_vec(),
            forward,
            inverse,
        }
    }

    pub fn config(&self) -> &AnalysisConfig {
        &self.config
    }

    /// Windows `samples`, zero-pads to the FFT length and writes the
    /// one-sided spectrum into `out`.
    pub fn analyze_into(
        &mut self,
        samples: &[f64],
        window: &[f64],
        out: &mut Spectrum,
    ) -> Result<()> {
        let n = self.config.window_length;
        if samples.len() != n || window.len() != n {
            return Err(Error::invalid(format!(
                "frame length {} / window length {} do not match configured window length {n}",
                samples.len(),
                window.len()
            )));
        }
        for ((t, s), w) in self.time.iter_mut().zip(samples).zip(window) {
            *t = s * w;
        }
        self.time[n..].fill(0.0);
        self.forward
            .process_with_scratch(&mut self.time, &mut self.freq, &mut self.scratch_forward)
            .map_err(|e| Error::invalid(format!("forward fft: {e}")))?;
        out.bins.clear();
        out.bins.extend_from_slice(&self.freq);
        out.bin_spacing = self.config.bin_spacing();
        Ok(())
    }

    pub fn analyze(&mut self, samples: &[f64], window: &[f64]) -> Result<Spectrum> {
        let mut out = Spectrum::zeros(&self.config);
        self.analyze_into(samples, window, &mut out)?;
        Ok(out)
    }

    /// Inverse transform truncated to the window length. No synthesis
    /// window is applied.
    pub fn synthesize_into(&mut self, spectrum: &Spectrum, out: &mut [f64]) -> Result<()> {
        let bins = self.config.bins();
        if spectrum.len() != bins {
            return Err(Error::invalid(format!(
                "spectrum has {} bins, expected {bins}",
                spectrum.len()
            )));
        }
        if out.len() != self.config.window_length {
            return Err(Error::invalid(format!(
                "output frame has {} samples, expected {}",
                out.len(),
                self.config.window_length
            )));
        }
        self.freq.copy_from_slice(&spectrum.bins);
        // A real signal has purely real DC and Nyquist bins.
        self.freq[0].im = 0.0;
        self.freq[bins - 1].im = 0.0;
        self.inverse
            .process_with_scratch(&mut self.freq, &mut self.time, &mut self.scratch_inverse)
            .map_err(|e| Error::invalid(format!("inverse fft: {e}")))?;
        let scale = 1.0 / self.config.fft_length as f64;
        for (o, t) in out.iter_mut().zip(&self.time) {
            *o = t * scale;
        }
        Ok(())
    }

    pub fn synthesize(&mut self, spectrum: &Spectrum) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.config.window_length];
        self.synthesize_into(spectrum, &mut out)?;
        Ok(out)
    }
}

/// One-shot analysis of a frame. Prefer [`Stft`] when processing a stream.
pub fn analyze(frame: &Frame, window: &[f64], config: &AnalysisConfig) -> Result<Spectrum> {
    Stft::new(*config).analyze(&frame.samples, window)
}

/// One-shot synthesis of a spectrum into a window-length frame.
pub fn synthesize(spectrum: &Spectrum, config: &AnalysisConfig) -> Result<Frame> {
    let samples = Stft::new(*config).synthesize(spectrum)?;
    Ok(Frame::new(samples, 0))
}
