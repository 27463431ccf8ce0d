//! Real-time mode: an audio thread paced at the hop rate loops both sources
//! through the engine while a WebSocket server steers it.
//!
//! The two sides share no locks. k crosses from the socket to the audio
//! thread through [`KMailbox`], read once at the start of every hop; file
//! loads arrive through a small bounded queue that the audio thread polls
//! without blocking; status leaves through a `watch` cell that always holds
//! the latest hop.

use std::fs::File;
use std::io::BufWriter;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{sync_channel, Receiver, SyncSender, TrySendError};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use audio_transport::{read_wav, AnalysisConfig, AudioBuffer, TransportEngine};
use futures_util::{SinkExt, StreamExt};
use hound::{SampleFormat as HoundFormat, WavSpec, WavWriter};
use log::{debug, info, warn};
use tokio::net::{TcpListener, TcpStream};
use tokio::runtime::Runtime;
use tokio::sync::{watch, Notify};
use tokio::time::{interval, MissedTickBehavior};
use tokio_tungstenite::tungstenite::Message;

use crate::args::LiveArgs;
use crate::control::{parse_control, ControlMessage, Slot, StatusFrame};
use crate::error::CliError;

/// Spontaneous status frames go out at most this often per client.
pub const STATUS_INTERVAL: Duration = Duration::from_millis(100);

const COMMAND_QUEUE: usize = 4;

/// Single-value k cell shared between the control and audio threads.
#[derive(Debug)]
pub struct KMailbox(AtomicU64);

impl KMailbox {
    pub fn new(k: f64) -> Self {
        KMailbox(AtomicU64::new(k.clamp(0.0, 1.0).to_bits()))
    }

    pub fn store(&self, k: f64) {
        let k = if k.is_nan() { 0.0 } else { k.clamp(0.0, 1.0) };
        self.0.store(k.to_bits(), Ordering::Release);
    }

    pub fn load(&self) -> f64 {
        f64::from_bits(self.0.load(Ordering::Acquire))
    }
}

/// Where live output goes. There is no sound-card backend; `wav:<path>`
/// records what would have been played.
pub enum AudioSink {
    Null,
    Wav(WavWriter<BufWriter<File>>),
}

impl AudioSink {
    pub fn open(spec: &str, sample_rate: u32, channels: usize) -> Result<Self, CliError> {
        if spec == "null" {
            return Ok(AudioSink::Null);
        }
        let Some(path) = spec.strip_prefix("wav:").filter(|p| !p.is_empty()) else {
            return Err(CliError::Device(spec.to_string()));
        };
        let spec = WavSpec {
            channels: u16::try_from(channels).map_err(|_| CliError::Device(spec.to_string()))?,
            sample_rate,
            bits_per_sample: 32,
            sample_format: HoundFormat::Float,
        };
        Ok(AudioSink::Wav(WavWriter::create(
            PathBuf::from(path),
            spec,
        )?))
    }

    fn write(&mut self, channels: &[Vec<f32>]) -> Result<(), CliError> {
        if let AudioSink::Wav(w) = self {
            let frames = channels.first().map_or(0, Vec::len);
            for n in 0..frames {
                for ch in channels {
                    w.write_sample(ch[n])?;
                }
            }
        }
        Ok(())
    }

    fn finish(self) -> Result<(), CliError> {
        if let AudioSink::Wav(w) = self {
            w.finalize()?;
        }
        Ok(())
    }
}

struct LoopedSource {
    audio: AudioBuffer,
    pos: usize,
}

impl LoopedSource {
    fn fill(&self, channel: usize, dst: &mut [f64]) {
        let len = self.audio.len();
        if len == 0 {
            dst.fill(0.0);
            return;
        }
        let src = &self.audio.channels[channel.min(self.audio.channel_count() - 1)];
        for (i, d) in dst.iter_mut().enumerate() {
            *d = f64::from(src[(self.pos + i) % len]);
        }
    }

    fn advance(&mut self, n: usize) {
        let len = self.audio.len().max(1);
        self.pos = (self.pos + n) % len;
    }
}

/// The per-hop work of live mode without any pacing or networking: both
/// sources loop forever, one engine per output channel.
pub struct LiveEngine {
    config: AnalysisConfig,
    engines: Vec<TransportEngine>,
    a: LoopedSource,
    b: LoopedSource,
    hop_a: Vec<f64>,
    hop_b: Vec<f64>,
    hop_out: Vec<f64>,
    output: Vec<Vec<f32>>,
}

impl LiveEngine {
    /// Output has as many channels as the wider source; a mono source feeds
    /// every channel.
    pub fn new(a: AudioBuffer, b: AudioBuffer) -> Result<Self, CliError> {
        if a.sample_rate != b.sample_rate {
            return Err(audio_transport::Error::SampleRateMismatch {
                a: a.sample_rate,
                b: b.sample_rate,
            }
            .into());
        }
        let (na, nb) = (a.channel_count(), b.channel_count());
        if na == 0 || nb == 0 || (na != nb && na != 1 && nb != 1) {
            return Err(audio_transport::Error::ChannelMismatch { a: na, b: nb }.into());
        }
        let channels = na.max(nb);
        let config = AnalysisConfig::for_sample_rate(a.sample_rate)?;
        let hop = config.hop_length;
        Ok(LiveEngine {
            engines: (0..channels)
                .map(|_| TransportEngine::new(config))
                .collect::<Result<_, _>>()?,
            config,
            a: LoopedSource { audio: a, pos: 0 },
            b: LoopedSource { audio: b, pos: 0 },
            hop_a: vec![0.0; hop],
            hop_b: vec![0.0; hop],
            hop_out: vec![0.0; hop],
            output: vec![vec![0.0; hop]; channels],
        })
    }

    pub fn config(&self) -> &AnalysisConfig {
        &self.config
    }

    pub fn channels(&self) -> usize {
        self.engines.len()
    }

    pub fn hop_index(&self) -> u64 {
        self.engines[0].hop_index()
    }

    /// Swaps a source, restarting it from its first sample. Channel layout
    /// of the output stays fixed.
    pub fn load(&mut self, slot: Slot, audio: AudioBuffer) -> Result<(), CliError> {
        if audio.sample_rate != self.config.sample_rate {
            return Err(audio_transport::Error::SampleRateMismatch {
                a: self.config.sample_rate,
                b: audio.sample_rate,
            }
            .into());
        }
        if audio.channel_count() == 0 {
            return Err(CliError::Usage("loaded file has no channels".into()));
        }
        let source = LoopedSource { audio, pos: 0 };
        match slot {
            Slot::A => self.a = source,
            Slot::B => self.b = source,
        }
        Ok(())
    }

    /// Runs one hop at `k` and returns the RMS of the new output across
    /// all channels.
    pub fn process_hop(&mut self, k: f64) -> Result<f64, CliError> {
        let mut energy = 0.0;
        for (c, engine) in self.engines.iter_mut().enumerate() {
            self.a.fill(c, &mut self.hop_a);
            self.b.fill(c, &mut self.hop_b);
            engine.process_hop_into(&self.hop_a, &self.hop_b, k, &mut self.hop_out)?;
            for (o, s) in self.output[c].iter_mut().zip(&self.hop_out) {
                *o = *s as f32;
                energy += s * s;
            }
        }
        let hop = self.config.hop_length;
        self.a.advance(hop);
        self.b.advance(hop);
        Ok((energy / (hop * self.engines.len()) as f64).sqrt())
    }

    /// The hop produced by the last [`process_hop`](Self::process_hop).
    pub fn output(&self) -> &[Vec<f32>] {
        &self.output
    }
}

/// Cumulative audio-thread timing.
#[derive(Debug, Default)]
pub struct HopStats {
    hops: AtomicU64,
    compute_ns: AtomicU64,
    max_compute_ns: AtomicU64,
    late_hops: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatsSnapshot {
    pub hops: u64,
    pub mean_compute: Duration,
    pub max_compute: Duration,
    /// Hops whose processing finished after their playback deadline.
    pub late_hops: u64,
}

impl HopStats {
    fn record(&self, compute: Duration, late: bool) {
        let ns = u64::try_from(compute.as_nanos()).unwrap_or(u64::MAX);
        self.hops.fetch_add(1, Ordering::Relaxed);
        self.compute_ns.fetch_add(ns, Ordering::Relaxed);
        self.max_compute_ns.fetch_max(ns, Ordering::Relaxed);
        if late {
            self.late_hops.fetch_add(1, Ordering::Relaxed);
        }
    }

    pub fn snapshot(&self) -> StatsSnapshot {
        let hops = self.hops.load(Ordering::Relaxed);
        let total = self.compute_ns.load(Ordering::Relaxed);
        StatsSnapshot {
            hops,
            mean_compute: Duration::from_nanos(total.checked_div(hops).unwrap_or(0)),
            max_compute: Duration::from_nanos(self.max_compute_ns.load(Ordering::Relaxed)),
            late_hops: self.late_hops.load(Ordering::Relaxed),
        }
    }
}

enum EngineCommand {
    Load(Slot, AudioBuffer),
}

/// State visible to both the audio thread and the control server.
pub struct LiveShared {
    pub k: KMailbox,
    running: AtomicBool,
    shutdown: AtomicBool,
    status: watch::Sender<StatusFrame>,
    stats: HopStats,
    done: Notify,
}

impl LiveShared {
    pub fn is_running(&self) -> bool {
        self.running.load(Ordering::Acquire)
    }

    pub fn latest_status(&self) -> StatusFrame {
        *self.status.borrow()
    }

    pub fn stats(&self) -> StatsSnapshot {
        self.stats.snapshot()
    }
}

/// A running live session. Dropping it stops the audio thread and the
/// server.
pub struct LiveHandle {
    local_addr: SocketAddr,
    shared: Arc<LiveShared>,
    audio: Option<JoinHandle<Result<(), CliError>>>,
    runtime: Option<Runtime>,
}

/// Binds the control socket and starts playback immediately (a `stop`
/// message pauses it).
pub fn start_live(
    engine: LiveEngine,
    listen: SocketAddr,
    sink: AudioSink,
) -> Result<LiveHandle, CliError> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .thread_name("at-control")
        .enable_all()
        .build()
        .map_err(|e| CliError::io("starting control runtime", e))?;
    let listener = runtime
        .block_on(TcpListener::bind(listen))
        .map_err(|e| CliError::io(format!("listening on {listen}"), e))?;
    let local_addr = listener
        .local_addr()
        .map_err(|e| CliError::io("reading bound address", e))?;

    let (status, _) = watch::channel(StatusFrame {
        k: 0.0,
        rms: 0.0,
        hop: 0,
    });
    let shared = Arc::new(LiveShared {
        k: KMailbox::new(0.0),
        running: AtomicBool::new(true),
        shutdown: AtomicBool::new(false),
        status,
        stats: HopStats::default(),
        done: Notify::new(),
    });
    let (tx, rx) = sync_channel(COMMAND_QUEUE);

    let audio_shared = Arc::clone(&shared);
    let audio = thread::Builder::new()
        .name("at-audio".into())
        .spawn(move || {
            let result = audio_loop(engine, sink, &audio_shared, &rx);
            audio_shared.done.notify_one();
            result
        })
        .map_err(|e| CliError::io("spawning audio thread", e))?;

    runtime.spawn(accept_loop(listener, Arc::clone(&shared), tx));
    info!("control server listening on ws://{local_addr}");
    Ok(LiveHandle {
        local_addr,
        shared,
        audio: Some(audio),
        runtime: Some(runtime),
    })
}

impl LiveHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    pub fn shared(&self) -> &LiveShared {
        &self.shared
    }

    /// Blocks until Ctrl-C or until the audio thread stops on its own (an
    /// engine or output fault), then shuts down.
    pub fn run_until_interrupted(self) -> Result<(), CliError> {
        if let Some(rt) = &self.runtime {
            rt.block_on(async {
                tokio::select! {
                    _ = tokio::signal::ctrl_c() => info!("interrupted"),
                    _ = self.shared.done.notified() => {}
                }
            });
        }
        self.shutdown()
    }

    /// Stops the audio thread, finalizes the output and returns the audio
    /// thread's result.
    pub fn shutdown(mut self) -> Result<(), CliError> {
        self.stop()
    }

    fn stop(&mut self) -> Result<(), CliError> {
        self.shared.shutdown.store(true, Ordering::Release);
        let result = match self.audio.take() {
            Some(handle) => handle
                .join()
                .unwrap_or_else(|_| Err(CliError::Usage("audio thread panicked".into()))),
            None => Ok(()),
        };
        if let Some(rt) = self.runtime.take() {
            rt.shutdown_background();
        }
        result
    }
}

impl Drop for LiveHandle {
    fn drop(&mut self) {
        if let Err(e) = self.stop() {
            warn!("live session ended with error: {e}");
        }
    }
}

pub fn cmd_live(args: &LiveArgs) -> Result<(), CliError> {
    let engine = LiveEngine::new(read_wav(&args.a)?, read_wav(&args.b)?)?;
    let sink = AudioSink::open(
        &args.audio_out,
        engine.config().sample_rate,
        engine.channels(),
    )?;
    start_live(engine, args.listen, sink)?.run_until_interrupted()
}

fn audio_loop(
    mut engine: LiveEngine,
    mut sink: AudioSink,
    shared: &LiveShared,
    commands: &Receiver<EngineCommand>,
) -> Result<(), CliError> {
    let hop = Duration::from_secs_f64(engine.config().hop_seconds());
    let mut deadline = Instant::now();
    while !shared.shutdown.load(Ordering::Acquire) {
        // Never blocks: an empty or closed queue just means no new files.
        while let Ok(EngineCommand::Load(slot, audio)) = commands.try_recv() {
            match engine.load(slot, audio) {
                Ok(()) => info!("loaded slot {slot:?}"),
                Err(e) => warn!("cannot load slot {slot:?}: {e}"),
            }
        }
        if !shared.is_running() {
            thread::sleep(hop);
            deadline = Instant::now();
            continue;
        }

        let k = shared.k.load();
        let started = Instant::now();
        let rms = engine.process_hop(k)?;
        let compute = started.elapsed();
        sink.write(engine.output())?;
        shared.status.send_replace(StatusFrame {
            k,
            rms,
            hop: engine.hop_index(),
        });

        deadline += hop;
        let now = Instant::now();
        shared.stats.record(compute, now > deadline);
        if now < deadline {
            thread::sleep(deadline - now);
        } else if now - deadline > 4 * hop {
            // Far behind (e.g. the process was suspended): drop the backlog
            // instead of bursting to catch up.
            deadline = now;
        }
    }
    sink.finish()
}

async fn accept_loop(
    listener: TcpListener,
    shared: Arc<LiveShared>,
    commands: SyncSender<EngineCommand>,
) {
    loop {
        match listener.accept().await {
            Ok((stream, peer)) => {
                tokio::spawn(serve_client(
                    stream,
                    peer,
                    Arc::clone(&shared),
                    commands.clone(),
                ));
            }
            Err(e) => {
                warn!("accept failed: {e}");
                tokio::time::sleep(Duration::from_millis(50)).await;
            }
        }
    }
}

async fn serve_client(
    stream: TcpStream,
    peer: SocketAddr,
    shared: Arc<LiveShared>,
    commands: SyncSender<EngineCommand>,
) {
    let ws = match tokio_tungstenite::accept_async(stream).await {
        Ok(ws) => ws,
        Err(e) => {
            warn!("websocket handshake with {peer} failed: {e}");
            return;
        }
    };
    debug!("client {peer} connected");
    let (mut outgoing, mut incoming) = ws.split();
    let mut status = shared.status.subscribe();
    let mut tick = interval(STATUS_INTERVAL);
    tick.set_missed_tick_behavior(MissedTickBehavior::Delay);
    let mut last_hop = None;

    loop {
        let reply = tokio::select! {
            frame = incoming.next() => {
                let text = match frame {
                    Some(Ok(Message::Text(text))) => text,
                    Some(Ok(Message::Close(_))) | None => break,
                    Some(Ok(Message::Binary(_))) => {
                        warn!("ignoring binary frame from {peer}");
                        continue;
                    }
                    Some(Ok(_)) => continue,
                    Some(Err(e)) => {
                        debug!("client {peer}: {e}");
                        break;
                    }
                };
                match parse_control(text.as_str()) {
                    Ok(msg) => handle_message(msg, &shared, &commands).await,
                    Err(e) => {
                        warn!("ignoring message from {peer}: {e}");
                        None
                    }
                }
            }
            _ = tick.tick() => {
                let latest = *status.borrow_and_update();
                (last_hop != Some(latest.hop)).then_some(latest)
            }
        };
        if let Some(frame) = reply {
            last_hop = Some(frame.hop);
            if outgoing.send(Message::text(frame.to_json())).await.is_err() {
                break;
            }
        }
    }
    debug!("client {peer} disconnected");
}

/// Applies one control message; returns a frame to send back immediately.
async fn handle_message(
    msg: ControlMessage,
    shared: &LiveShared,
    commands: &SyncSender<EngineCommand>,
) -> Option<StatusFrame> {
    match msg {
        ControlMessage::SetK { k } => shared.k.store(k),
        ControlMessage::Start => shared.running.store(true, Ordering::Release),
        ControlMessage::Stop => shared.running.store(false, Ordering::Release),
        ControlMessage::Status => return Some(shared.latest_status()),
        ControlMessage::Load { slot, path } => {
            let shown = path.display().to_string();
            match tokio::task::spawn_blocking(move || read_wav(path)).await {
                Ok(Ok(audio)) => match commands.try_send(EngineCommand::Load(slot, audio)) {
                    Ok(()) => {}
                    Err(TrySendError::Full(_)) => warn!("load queue full, dropping {shown}"),
                    Err(TrySendError::Disconnected(_)) => {
                        warn!("audio thread gone, dropping {shown}")
                    }
                },
                Ok(Err(e)) => warn!("cannot read {shown}: {e}"),
                Err(e) => warn!("loader task failed: {e}"),
            }
        }
    }
    None
}
