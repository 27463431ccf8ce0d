use std::net::SocketAddr;
use std::path::PathBuf;

use audio_transport::SampleFormat;
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "audio-transport",
    version,
    about = "Optimal-transport morphing between two sounds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render A morphing into B under a constant k or a k curve.
    Render(RenderArgs),
    /// Write the per-hop spectral regions of a file as CSV.
    Analyze(AnalyzeArgs),
    /// Loop A and B through the engine in real time, steered over WebSocket.
    Live(LiveArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("interpolation").required(true).args(["k", "curve"])))]
pub struct RenderArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Constant interpolation parameter in [0, 1].
    #[arg(long, value_parser = parse_unit)]
    pub k: Option<f64>,
    /// Text file of `time_seconds,k` lines.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Float32)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LiveArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    /// Address for the WebSocket control server, e.g. 127.0.0.1:9000.
    #[arg(long)]
    pub listen: SocketAddr,
    /// `null` discards audio; `wav:<path>` records it.
    #[arg(long, default_value = "null")]
    pub audio_out: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Pcm16,
    Float32,
}

impl From<Format> for SampleFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Pcm16 => SampleFormat::Pcm16,
            Format::Float32 => SampleFormat::Float32,
        }
    }
}

fn parse_unit(s: &str) -> Result<f64, String> {
    let k: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&k) {
        Ok(k)
    } else {
        Err(format!("{k} is outside [0, 1]"))
    }
}
