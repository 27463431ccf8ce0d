use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use audio_transport::{
    read_wav, render, write_wav, AnalysisConfig, AudioBuffer, FrameAnalyzer, InterpolationEnvelope,
    SpectralRegion,
};
use log::info;

use crate::args::{AnalyzeArgs, RenderArgs};
use crate::error::CliError;

pub fn cmd_render(args: &RenderArgs) -> Result<(), CliError> {
    let envelope = match (&args.curve, args.k) {
        (Some(path), _) => InterpolationEnvelope::from_path(path)?,
        (None, Some(k)) => InterpolationEnvelope::constant(k),
        (None, None) => return Err(CliError::Usage("one of --k or --curve is required".into())),
    };
    let a = read_wav(&args.a)?;
    let b = read_wav(&args.b)?;
    info!(
        "rendering {} ({} ch) -> {} ({} ch) at {} Hz",
        args.a.display(),
        a.channel_count(),
        args.b.display(),
        b.channel_count(),
        a.sample_rate
    );
    let out = render(&a, &b, &envelope)?;
    write_wav(&args.out, &out, args.format.into())?;
    Ok(())
}

/// One CSV row: a region found in one analysis window of one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionRow {
    pub hop: usize,
    pub time_s: f64,
    pub channel: usize,
    pub region: usize,
    pub detail: SpectralRegion,
}

pub const ANALYZE_HEADER: &str =
    "hop,time_s,channel,region,start_bin,end_bin,center_bin,center_freq_hz,mass";

/// Segments every hop-spaced window of every channel. Windows run from the
/// start of the file while they fit; a file shorter than one window is
/// zero-padded to a single window. `time_s` is the window center.
pub fn analyze_regions(audio: &AudioBuffer) -> Result<Vec<RegionRow>, CliError> {
    let config = AnalysisConfig::for_sample_rate(audio.sample_rate)?;
    let mut analyzer = FrameAnalyzer::new(config)?;
    let (w, hop) = (config.window_length, config.hop_length);
    let windows = if audio.len() <= w {
        1
    } else {
        (audio.len() - w) / hop + 1
    };

    let mut rows = Vec::new();
    let mut frame = vec![0.0; w];
    for (channel, samples) in audio.channels.iter().enumerate() {
        for h in 0..windows {
            let start = h * hop;
            for (i, f) in frame.iter_mut().enumerate() {
                *f = samples.get(start + i).map_or(0.0, |s| f64::from(*s));
            }
            let (_, regions) = analyzer.regions(&frame)?;
            let time_s = (start + w / 2) as f64 / f64::from(audio.sample_rate);
            rows.extend(
                regions
                    .into_iter()
                    .enumerate()
                    .map(|(region, detail)| RegionRow {
                        hop: h,
                        time_s,
                        channel,
                        region,
                        detail,
                    }),
            );
        }
    }
    Ok(rows)
}

pub fn write_region_csv(rows: &[RegionRow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{ANALYZE_HEADER}")?;
    for r in rows {
        let d = &r.detail;
        writeln!(
            out,
            "{},{:.6},{},{},{},{},{},{:.4},{:.9e}",
            r.hop,
            r.time_s,
            r.channel,
            r.region,
            d.start_bin,
            d.end_bin,
            d.center_bin,
            d.center_freq,
            d.mass
        )?;
    }
    out.flush()
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let audio = read_wav(&args.input)?;
    let rows = analyze_regions(&audio)?;
    write_csv_file(&args.out, &rows)
}

fn write_csv_file(path: &Path, rows: &[RegionRow]) -> Result<(), CliError> {
    let context = || format!("writing {}", path.display());
    let file = File::create(path).map_err(|e| CliError::io(context(), e))?;
    write_region_csv(rows, BufWriter::new(file)).map_err(|e| CliError::io(context(), e))
}
