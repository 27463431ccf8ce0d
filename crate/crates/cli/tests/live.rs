use std::f64::consts::PI;
use std::net::SocketAddr;
use std::time::{Duration, Instant};

use audio_transport::{read_wav, write_wav, AudioBuffer, SampleFormat};
use audio_transport_cli::live::{start_live, AudioSink, LiveEngine, LiveHandle};
use audio_transport_cli::StatusFrame;
use futures_util::{SinkExt, StreamExt};
use tokio::net::TcpStream;
use tokio::runtime::Runtime;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

const RATE: u32 = 44_100;
const HOP: Duration = Duration::from_micros(25_011);

fn tone(freq: f64, seconds: f64) -> AudioBuffer {
    let n = (seconds * f64::from(RATE)) as usize;
    AudioBuffer::mono(
        RATE,
        (0..n)
            .map(|i| (0.5 * (2.0 * PI * freq * i as f64 / f64::from(RATE)).sin()) as f32)
            .collect(),
    )
}

fn session(sink: AudioSink) -> LiveHandle {
    let engine = LiveEngine::new(tone(440.0, 1.0), tone(554.37, 1.0)).unwrap();
    start_live(engine, "127.0.0.1:0".parse().unwrap(), sink).unwrap()
}

struct Client {
    ws: WebSocketStream<MaybeTlsStream<TcpStream>>,
}

impl Client {
    async fn connect(addr: SocketAddr) -> Self {
        let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}"))
            .await
            .unwrap();
        Client { ws }
    }

    async fn send(&mut self, text: &str) {
        self.ws.send(Message::text(text.to_string())).await.unwrap();
    }

    async fn next_status(&mut self) -> StatusFrame {
        loop {
            let msg = tokio::time::timeout(Duration::from_secs(5), self.ws.next())
                .await
                .expect("no frame within 5 s")
                .unwrap()
                .unwrap();
            if let Message::Text(t) = msg {
                return serde_json::from_str(t.as_str()).unwrap();
            }
        }
    }

    /// Requests a status frame and returns the reply. Spontaneous frames
    /// that queued up earlier are discarded first; one racing the request
    /// is at least as fresh as the reply.
    async fn status(&mut self) -> StatusFrame {
        while let Ok(Some(_)) = tokio::time::timeout(Duration::from_millis(2), self.ws.next()).await
        {
        }
        self.send(r#"{"kind":"status"}"#).await;
        self.next_status().await
    }
}

fn rt() -> Runtime {
    tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .unwrap()
}

#[test]
fn set_k_is_clamped_and_applied_within_two_hops() {
    let live = session(AudioSink::Null);
    rt().block_on(async {
        let mut c = Client::connect(live.local_addr()).await;
        tokio::time::sleep(HOP * 4).await;
        let before = c.status().await;
        let sent_at = Instant::now();
        c.send(r#"{"kind":"set_k","k":1.5}"#).await;
        loop {
            let s = c.status().await;
            if s.k == 1.0 {
                let hops = s.hop - before.hop;
                let elapsed = sent_at.elapsed();
                // Allow for the status round trip itself on top of the two hops.
                assert!(hops <= 3, "k reflected after {hops} hops");
                assert!(elapsed < HOP * 3 + Duration::from_millis(20), "{elapsed:?}");
                break;
            }
            assert!(s.k == 0.0, "unexpected k {}", s.k);
            assert!(sent_at.elapsed() < Duration::from_secs(1));
        }
    });
    assert!(live.shutdown().is_ok());
}

#[test]
fn spontaneous_status_is_rate_limited_and_ordered() {
    let live = session(AudioSink::Null);
    let frames = rt().block_on(async {
        let mut c = Client::connect(live.local_addr()).await;
        let mut frames = Vec::new();
        let start = Instant::now();
        while start.elapsed() < Duration::from_millis(1050) {
            frames.push((start.elapsed(), c.next_status().await));
        }
        frames
    });
    assert!(
        frames.len() >= 8 && frames.len() <= 12,
        "{} frames in ~1 s",
        frames.len()
    );
    for pair in frames.windows(2) {
        assert!(pair[1].1.hop > pair[0].1.hop);
    }
    assert!(frames.iter().all(|(_, f)| f.rms.is_finite() && f.k == 0.0));
}

#[test]
fn malformed_messages_are_ignored() {
    let live = session(AudioSink::Null);
    rt().block_on(async {
        let mut c = Client::connect(live.local_addr()).await;
        for junk in [
            r#"{"kind":"explode"}"#,
            "{not json",
            r#"{"kind":"set_k","k":"x"}"#,
        ] {
            c.send(junk).await;
        }
        c.ws.send(Message::binary(vec![1u8, 2, 3])).await.unwrap();
        c.send(r#"{"kind":"set_k","k":0.25}"#).await;
        tokio::time::sleep(HOP * 3).await;
        assert_eq!(c.status().await.k, 0.25);
    });
}

#[test]
fn stop_pauses_and_start_resumes() {
    let live = session(AudioSink::Null);
    rt().block_on(async {
        let mut c = Client::connect(live.local_addr()).await;
        c.send(r#"{"kind":"stop"}"#).await;
        tokio::time::sleep(HOP * 3).await;
        let paused = c.status().await.hop;
        tokio::time::sleep(HOP * 6).await;
        assert_eq!(c.status().await.hop, paused);
        c.send(r#"{"kind":"start"}"#).await;
        tokio::time::sleep(HOP * 6).await;
        assert!(c.status().await.hop > paused + 2);
    });
    assert!(!live.shared().latest_status().rms.is_nan());
}

#[test]
fn load_swaps_a_source_and_bad_loads_are_ignored() {
    let dir = tempfile::tempdir().unwrap();
    let silent = dir.path().join("silent.wav");
    write_wav(
        &silent,
        &AudioBuffer::mono(RATE, vec![0.0; 4410]),
        SampleFormat::Float32,
    )
    .unwrap();
    let wrong_rate = dir.path().join("48k.wav");
    write_wav(
        &wrong_rate,
        &AudioBuffer::mono(48_000, vec![0.1; 4800]),
        SampleFormat::Float32,
    )
    .unwrap();

    let live = session(AudioSink::Null);
    rt().block_on(async {
        let mut c = Client::connect(live.local_addr()).await;
        tokio::time::sleep(HOP * 4).await;
        assert!(c.status().await.rms > 0.1);
        for msg in [
            format!(
                r#"{{"kind":"load","slot":"A","path":"{}"}}"#,
                wrong_rate.display()
            ),
            r#"{"kind":"load","slot":"B","path":"/nonexistent.wav"}"#.to_string(),
        ] {
            c.send(&msg).await;
        }
        tokio::time::sleep(HOP * 4).await;
        assert!(
            c.status().await.rms > 0.1,
            "bad loads must not change the sources"
        );

        // k = 0 plays A only; once A is silent the output decays to zero.
        c.send(&format!(
            r#"{{"kind":"load","slot":"A","path":"{}"}}"#,
            silent.display()
        ))
        .await;
        tokio::time::sleep(HOP * 6).await;
        assert!(c.status().await.rms < 1e-6);
    });
}

#[test]
fn wav_output_records_every_hop() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("live.wav");
    let live = session(AudioSink::open(&format!("wav:{}", path.display()), RATE, 1).unwrap());
    std::thread::sleep(Duration::from_millis(300));
    let hops = live.shared().stats().hops;
    live.shutdown().unwrap();
    let recorded = read_wav(&path).unwrap();
    assert!(hops > 0);
    assert_eq!(recorded.len() % 1103, 0);
    assert!(recorded.len() as u64 / 1103 >= hops);
    assert!(recorded.channels[0].iter().all(|s| s.is_finite()));
}
