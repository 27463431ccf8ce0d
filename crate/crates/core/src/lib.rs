//! Morphs between two audio streams by moving spectral mass along the
//! one-dimensional optimal transport plan between their short-time spectra,
//! so partials of one input glide to partials of the other as the
//! interpolation parameter `k` goes from 0 to 1.
//!
//! The per-hop path is [`spectral`] framing, [`reassign`] segmentation,
//! [`transport`] planning, [`interpolate`] placement and [`phase`]
//! assignment, driven by [`engine::TransportEngine`]. [`render`] wraps the
//! engine for whole files.

pub mod engine;
pub mod envelope;
pub mod error;
pub mod interpolate;
pub mod phase;
pub mod reassign;
pub mod render;
pub mod spectral;
pub mod transport;
pub mod wav;

pub use engine::{FrameAnalyzer, TransportEngine};
pub use envelope::InterpolationEnvelope;
pub use error::{Error, Result};
pub use realfft::num_complex::Complex64;
pub use reassign::{ReassignedSpectrum, SpectralRegion};
pub use render::{render, render_with_config};
pub use spectral::{AnalysisConfig, Frame, Spectrum};
pub use transport::{MassPoint, PlanEntry, TransportPlan};
pub use wav::{read_wav, write_wav, AudioBuffer, SampleFormat};
