//! Offline rendering of two buffers under an interpolation envelope.

use crate::engine::TransportEngine;
use crate::envelope::InterpolationEnvelope;
use crate::error::{Error, Result};
use crate::spectral::AnalysisConfig;
use crate::wav::AudioBuffer;

/// Renders with the default framing for the inputs' sample rate.
pub fn render(
    a: &AudioBuffer,
    b: &AudioBuffer,
    envelope: &InterpolationEnvelope,
) -> Result<AudioBuffer> {
    let config = AnalysisConfig::for_sample_rate(a.sample_rate)?;
    render_with_config(a, b, envelope, &config)
}

/// Channels are processed independently; a mono input is paired with every
/// channel of a stereo one. The shorter input is padded with silence and the
/// output is as long as the longer input.
pub fn render_with_config(
    a: &AudioBuffer,
    b: &AudioBuffer,
    envelope: &InterpolationEnvelope,
    config: &AnalysisConfig,
) -> Result<AudioBuffer> {
    if a.sample_rate != b.sample_rate {
        return Err(Error::SampleRateMismatch {
            a: a.sample_rate,
            b: b.sample_rate,
        });
    }
    if config.sample_rate != a.sample_rate {
        return Err(Error::invalid(format!(
            "config is for {} Hz but audio is {} Hz",
            config.sample_rate, a.sample_rate
        )));
    }
    let (na, nb) = (a.channel_count(), b.channel_count());
    if na == 0 || nb == 0 || (na != nb && na != 1 && nb != 1) {
        return Err(Error::ChannelMismatch { a: na, b: nb });
    }
    let channels = na.max(nb);
    let len = a.len().max(b.len());

    let out = (0..channels)
        .map(|c| {
            let ca = &a.channels[c.min(na - 1)];
            let cb = &b.channels[c.min(nb - 1)];
            render_channel(ca, cb, len, envelope, config)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(AudioBuffer {
        sample_rate: a.sample_rate,
        channels: out,
    })
}

/// Runs one channel through a fresh engine, compensating the engine's
/// latency so output sample `n` lines up with input sample `n`. The k for a
/// hop is the envelope at the center of that hop's analysis window.
pub fn render_channel(
    a: &[f32],
    b: &[f32],
    len: usize,
    envelope: &InterpolationEnvelope,
    config: &AnalysisConfig,
) -> Result<Vec<f32>> {
    let hop = config.hop_length;
    let rate = f64::from(config.sample_rate);
    let mut engine = TransportEngine::new(*config)?;
    let latency = engine.latency_samples();

    let mut out = Vec::with_capacity(len + latency + hop);
    let mut hop_a = vec![0.0; hop];
    let mut hop_b = vec![0.0; hop];
    let mut chunk = vec![0.0; hop];
    let mut start = 0;
    while out.len() < len + latency {
        fill_hop(a, start, &mut hop_a);
        fill_hop(b, start, &mut hop_b);
        // After this hop the analysis window ends at start + hop, so its
        // center is at `start`.
        let k = envelope.evaluate(start as f64 / rate);
        engine.process_hop_into(&hop_a, &hop_b, k, &mut chunk)?;
        out.extend(chunk.iter().map(|s| *s as f32));
        start += hop;
    }
    Ok(out[latency..latency + len].to_vec())
}

fn fill_hop(src: &[f32], start: usize, dst: &mut [f64]) {
    for (i, d) in dst.iter_mut().enumerate() {
        *d = src.get(start + i).map_or(0.0, |s| f64::from(*s));
    }
}
