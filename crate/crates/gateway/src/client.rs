//! Client side of the session protocol.

use std::io::BufReader;
use std::net::{TcpStream, ToSocketAddrs};
use std::time::Duration;

use vauth_core::pipeline::{CleanedAudio, MatchReport};
use vauth_core::SampledSignal;

use crate::error::{GatewayError, Result};
use crate::protocol::{
    base64_decode, decode_samples, encode_samples, read_frame, write_frame, Channel, Encoding,
    FrameHeader,
};
use crate::server::WireReport;

/// Client-side knobs.
#[derive(Debug, Clone)]
pub struct ClientOptions {
    pub encoding: Encoding,
    /// Ask the server to embed the cleaned audio in the reply.
    pub include_cleaned: bool,
    /// Samples per frame.
    pub chunk: usize,
    pub timeout: Duration,
}

impl Default for ClientOptions {
    fn default() -> Self {
        Self {
            encoding: Encoding::F32le,
            include_cleaned: false,
            chunk: 32_768,
            timeout: Duration::from_secs(30),
        }
    }
}

/// Runs one matching session against a server and returns its report. The
/// decision is identical to a local `match_pair` call on the same samples.
pub fn client_match(
    addr: impl ToSocketAddrs,
    acc: &SampledSignal,
    mic: &SampledSignal,
    opts: &ClientOptions,
) -> Result<MatchReport> {
    let stream = TcpStream::connect(addr).map_err(GatewayError::Connect)?;
    stream.set_read_timeout(Some(opts.timeout))?;
    stream.set_nodelay(true).ok();
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);

    let session_id = format!("cli-{:08x}", std::process::id());
    send_channel(&mut writer, &session_id, Channel::Acc, acc, opts)?;
    send_channel(&mut writer, &session_id, Channel::Mic, mic, opts)?;

    let frame = read_frame(&mut reader)?
        .ok_or_else(|| GatewayError::BadFrame("server closed without a reply".into()))?;
    match frame.header.kind.as_deref() {
        Some("match_report") => {
            let wire: WireReport = serde_json::from_slice(&frame.payload)?;
            let mut report = wire.report;
            if let (Some(b64), Some(rate)) = (wire.cleaned_b64, wire.cleaned_rate_hz) {
                let bytes = base64_decode(&b64)?;
                let samples = decode_samples(&bytes, Encoding::F32le)?;
                report.cleaned_mic = Some(CleanedAudio {
                    rate_hz: rate,
                    samples,
                });
            }
            Ok(report)
        }
        Some("error") => Err(GatewayError::Remote {
            code: frame.header.code.unwrap_or_else(|| "UNKNOWN".into()),
            message: String::from_utf8_lossy(&frame.payload).into_owned(),
        }),
        other => Err(GatewayError::BadFrame(format!(
            "unexpected reply kind {other:?}"
        ))),
    }
}

fn send_channel(
    writer: &mut TcpStream,
    session_id: &str,
    channel: Channel,
    signal: &SampledSignal,
    opts: &ClientOptions,
) -> Result<()> {
    let samples = signal.samples();
    let chunks: Vec<&[f64]> = if samples.is_empty() {
        vec![&[]]
    } else {
        samples.chunks(opts.chunk.max(1)).collect()
    };
    let last = chunks.len() - 1;
    for (i, chunk) in chunks.into_iter().enumerate() {
        let mut header = FrameHeader::samples(session_id, channel, signal.rate_hz(), opts.encoding);
        header.final_ = i == last;
        header.include_cleaned = opts.include_cleaned;
        let payload = encode_samples(chunk, opts.encoding);
        write_frame(writer, &header, &payload)?;
    }
    Ok(())
}
