//! RIFF/WAVE reading and writing (integer PCM and 32-bit float).

use std::path::Path;

use hound::{SampleFormat as HoundFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};

/// Deinterleaved audio, one `Vec` per channel, samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub sample_rate: u32,
    pub channels: Vec<Vec<f32>>,
}

impl AudioBuffer {
    pub fn mono(sample_rate: u32, samples: Vec<f32>) -> Self {
        AudioBuffer {
            sample_rate,
            channels: vec![samples],
        }
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    /// Frames per channel.
    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration_seconds(&self) -> f64 {
        self.len() as f64 / f64::from(self.sample_rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleFormat {
    Pcm16,
    #[default]
    Float32,
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let mut reader = WavReader::open(path)?;
    let spec = reader.spec();
    let channels = usize::from(spec.channels);
    if channels == 0 {
        return Err(Error::invalid("wav file declares zero channels"));
    }
    let interleaved: Vec<f32> = match spec.sample_format {
        HoundFormat::Float => reader.samples::<f32>().collect::<Result<_, _>>()?,
        HoundFormat::Int => {
            let scale = 1.0 / (1u64 << (spec.bits_per_sample - 1)) as f32;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f32 * scale))
                .collect::<Result<_, _>>()?
        }
    };
    let frames = interleaved.len() / channels;
    let mut out = vec![Vec::with_capacity(frames); channels];
    for frame in interleaved.chunks_exact(channels) {
        for (c, s) in frame.iter().enumerate() {
            out[c].push(*s);
        }
    }
    Ok(AudioBuffer {
        sample_rate: spec.sample_rate,
        channels: out,
    })
}

pub fn write_wav(path: impl AsRef<Path>, audio: &AudioBuffer, format: SampleFormat) -> Result<()> {
    let channels = u16::try_from(audio.channel_count())
        .map_err(|_| Error::invalid("too many channels for wav"))?;
    if channels == 0 {
        return Err(Error::invalid("cannot write a wav file without channels"));
    }
    let spec = match format {
        SampleFormat::Pcm16 => WavSpec {
            channels,
            sample_rate: audio.sample_rate,
            bits_per_sample: 16,
            sample_format: HoundFormat::Int,
        },
        SampleFormat::Float32 => WavSpec {
            channels,
            sample_rate: audio.sample_rate,
            bits_per_sample: 32,
            sample_format: HoundFormat::Float,
        },
    };
    let mut writer = WavWriter::create(path, spec)?;
    for n in 0..audio.len() {
        for ch in &audio.channels {
            match format {
                SampleFormat::Pcm16 => {
                    let v = (ch[n].clamp(-1.0, 1.0) * 32767.0).round() as i16;
                    writer.write_sample(v)?;
                }
                SampleFormat::Float32 => writer.write_sample(ch[n])?,
            }
        }
    }
    writer.finalize()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_and_pcm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let audio = AudioBuffer {
            sample_rate: 22_050,
            channels: vec![vec![0.0, 0.5, -0.25, 1.0], vec![0.1, -0.1, 0.2, -1.0]],
        };

        let f = dir.path().join("f.wav");
        write_wav(&f, &audio, SampleFormat::Float32).unwrap();
        assert_eq!(read_wav(&f).unwrap(), audio);

        let p = dir.path().join("p.wav");
        write_wav(&p, &audio, SampleFormat::Pcm16).unwrap();
        let back = read_wav(&p).unwrap();
        assert_eq!(back.sample_rate, 22_050);
        assert_eq!(back.channel_count(), 2);
        for (a, b) in audio
            .channels
            .iter()
            .flatten()
            .zip(back.channels.iter().flatten())
        {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn missing_file_is_an_error() {
        assert!(read_wav("/nonexistent/definitely/missing.wav").is_err());
    }
}
