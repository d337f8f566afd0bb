//! Matching service: accepts sessions carrying both channel recordings over
//! length-prefixed frames, runs the pipeline, replies with the report.

use std::io::BufReader;
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use vauth_core::decision::ClassifierModel;
use vauth_core::pipeline::{match_pair, MatchReport};
use vauth_core::{PipelineConfig, SampledSignal};

use crate::error::{GatewayError, Result};
use crate::protocol::{
    base64_encode, decode_samples, encode_samples, read_frame, write_frame, Channel, Encoding,
    Frame, FrameHeader,
};

/// Server-side settings.
#[derive(Debug, Clone)]
pub struct ServerConfig {
    /// How long a session may leave a channel incomplete.
    pub session_timeout: Duration,
    pub pipeline: PipelineConfig,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            session_timeout: Duration::from_secs(10),
            pipeline: PipelineConfig::default(),
        }
    }
}

/// Report as sent over the wire: the library report without raw audio, plus
/// the cleaned signal as base64 f32le when the client asked for it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WireReport {
    #[serde(flatten)]
    pub report: MatchReport,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cleaned_b64: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cleaned_rate_hz: Option<f64>,
}

/// A running server bound to a local address. Dropping it leaves the
/// listener thread running; call [`Server::shutdown`] for a clean stop.
pub struct Server {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    handle: Option<std::thread::JoinHandle<()>>,
}

impl Server {
    /// Binds and starts accepting connections on a background thread.
    pub fn bind(
        addr: impl ToSocketAddrs,
        model: ClassifierModel,
        config: ServerConfig,
    ) -> Result<Server> {
        let listener = TcpListener::bind(addr).map_err(GatewayError::Connect)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let stop2 = stop.clone();
        let model = Arc::new(model);
        let config = Arc::new(config);
        let handle = std::thread::spawn(move || {
            for conn in listener.incoming() {
                if stop2.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = conn else { continue };
                let model = model.clone();
                let config = config.clone();
                std::thread::spawn(move || {
                    let _ = handle_connection(stream, &model, &config);
                });
            }
        });
        Ok(Server {
            addr,
            stop,
            handle: Some(handle),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting new connections and joins the accept loop.
    pub fn shutdown(mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // Wake the blocking accept.
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

/// Binds and blocks forever (until the process is stopped).
pub fn serve(
    addr: impl ToSocketAddrs,
    model: ClassifierModel,
    config: ServerConfig,
) -> Result<()> {
    let server = Server::bind(addr, model, config)?;
    eprintln!("listening on {}", server.local_addr());
    loop {
        std::thread::sleep(Duration::from_secs(3600));
    }
}

struct SessionChannel {
    samples: Vec<f64>,
    rate_hz: f64,
    done: bool,
}

fn handle_connection(
    stream: TcpStream,
    model: &ClassifierModel,
    config: &ServerConfig,
) -> Result<()> {
    stream.set_read_timeout(Some(config.session_timeout))?;
    stream.set_nodelay(true).ok();
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);

    loop {
        match handle_session(&mut reader, &mut writer, model, config) {
            Ok(SessionEnd::KeepAlive) => continue,
            Ok(SessionEnd::Close) => return Ok(()),
            Err(e) => {
                let code = match &e {
                    GatewayError::FrameTooLarge(_) => "FRAME_TOO_LARGE",
                    GatewayError::SessionTimeout => "SESSION_TIMEOUT",
                    GatewayError::Io(_) => return Err(e),
                    _ => "BAD_FRAME",
                };
                let mut header = FrameHeader::reply("", "error");
                header.code = Some(code.to_string());
                let _ = write_frame(&mut writer, &header, e.to_string().as_bytes());
                return Err(e);
            }
        }
    }
}

enum SessionEnd {
    KeepAlive,
    Close,
}

fn handle_session(
    reader: &mut BufReader<TcpStream>,
    writer: &mut TcpStream,
    model: &ClassifierModel,
    config: &ServerConfig,
) -> Result<SessionEnd> {
    let mut session_id: Option<String> = None;
    let mut acc: Option<SessionChannel> = None;
    let mut mic: Option<SessionChannel> = None;
    let mut include_cleaned = false;
    let mut keep_alive = false;

    loop {
        let frame = match read_frame(reader) {
            Ok(Some(f)) => f,
            Ok(None) => {
                // Clean close before any frame: just end the connection.
                if session_id.is_none() {
                    return Ok(SessionEnd::Close);
                }
                return Err(GatewayError::BadFrame(
                    "connection closed mid-session".into(),
                ));
            }
            Err(GatewayError::Io(e))
                if matches!(
                    e.kind(),
                    std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut
                ) =>
            {
                return Err(GatewayError::SessionTimeout);
            }
            Err(e) => return Err(e),
        };
        accept_frame(
            frame,
            &mut session_id,
            &mut acc,
            &mut mic,
            &mut include_cleaned,
            &mut keep_alive,
        )?;

        let both_done = matches!(&acc, Some(c) if c.done) && matches!(&mic, Some(c) if c.done);
        if both_done {
            break;
        }
    }

    let session_id = session_id.unwrap_or_default();
    let acc = acc.unwrap();
    let mic = mic.unwrap();
    let acc_signal = SampledSignal::new(acc.samples, acc.rate_hz)?;
    let mic_signal = SampledSignal::new(mic.samples, mic.rate_hz)?;

    let mut report = match_pair(&acc_signal, &mic_signal, model, &config.pipeline)?;
    let cleaned = report.cleaned_mic.take();
    let wire = WireReport {
        report,
        cleaned_b64: if include_cleaned {
            cleaned
                .as_ref()
                .map(|c| base64_encode(&encode_samples(&c.samples, Encoding::F32le)))
        } else {
            None
        },
        cleaned_rate_hz: if include_cleaned {
            cleaned.as_ref().map(|c| c.rate_hz)
        } else {
            None
        },
    };
    let payload = serde_json::to_vec(&wire)?;
    let header = FrameHeader::reply(&session_id, "match_report");
    write_frame(writer, &header, &payload)?;

    Ok(if keep_alive {
        SessionEnd::KeepAlive
    } else {
        SessionEnd::Close
    })
}

fn accept_frame(
    frame: Frame,
    session_id: &mut Option<String>,
    acc: &mut Option<SessionChannel>,
    mic: &mut Option<SessionChannel>,
    include_cleaned: &mut bool,
    keep_alive: &mut bool,
) -> Result<()> {
    let header = frame.header;
    match session_id {
        None => *session_id = Some(header.session_id.clone()),
        Some(id) if *id != header.session_id => {
            return Err(GatewayError::BadFrame(format!(
                "session id changed mid-session: {} then {}",
                id, header.session_id
            )));
        }
        _ => {}
    }
    *include_cleaned |= header.include_cleaned;
    *keep_alive |= header.keep_alive;

    let channel = header
        .channel
        .ok_or_else(|| GatewayError::BadFrame("sample frame without channel".into()))?;
    let rate = header
        .rate_hz
        .ok_or_else(|| GatewayError::BadFrame("sample frame without rate_hz".into()))?;
    let encoding = header
        .encoding
        .ok_or_else(|| GatewayError::BadFrame("sample frame without encoding".into()))?;
    let samples = decode_samples(&frame.payload, encoding)?;

    let slot = match channel {
        Channel::Acc => acc,
        Channel::Mic => mic,
    };
    match slot {
        None => {
            *slot = Some(SessionChannel {
                samples,
                rate_hz: rate,
                done: header.final_,
            });
        }
        Some(chan) => {
            if chan.done {
                return Err(GatewayError::BadFrame(
                    "frame after the channel was finalized".into(),
                ));
            }
            if (chan.rate_hz - rate).abs() > 1e-9 {
                return Err(GatewayError::BadFrame(
                    "rate_hz changed within a channel".into(),
                ));
            }
            chan.samples.extend(samples);
            chan.done = header.final_;
        }
    }
    Ok(())
}
