//! Wire format: length-prefixed frames, each carrying a one-line JSON header
//! and a raw payload.
//!
//! ```text
//! frame := frame_len:u32be  header-json  0x0A  payload
//! ```
//!
//! `frame_len` counts everything after the prefix (header bytes including the
//! newline, plus payload bytes). A session streams sample frames for the
//! `acc` and `mic` channels, marking the last frame of each channel with
//! `final: true`; the server replies with a single report frame.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{GatewayError, Result};

/// Frames larger than this are refused outright.
pub const MAX_FRAME_LEN: usize = 64 * 1024 * 1024;

/// Channel a sample frame belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Acc,
    Mic,
}

/// Payload sample encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Pcm16le,
    F32le,
}

/// Header of every frame. Unknown fields are ignored so the format can grow.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameHeader {
    pub session_id: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub channel: Option<Channel>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rate_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub encoding: Option<Encoding>,
    #[serde(default)]
    pub final_: bool,
    /// Ask the server to embed the cleaned audio (base64 f32le) in the
    /// report.
    #[serde(default)]
    pub include_cleaned: bool,
    /// Keep the connection open for another session after the reply.
    #[serde(default)]
    pub keep_alive: bool,
    /// Set on server replies: "match_report" or "error".
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kind: Option<String>,
    /// Error code on error replies.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub code: Option<String>,
}

impl FrameHeader {
    pub fn samples(session_id: &str, channel: Channel, rate_hz: f64, encoding: Encoding) -> Self {
        Self {
            session_id: session_id.to_string(),
            channel: Some(channel),
            rate_hz: Some(rate_hz),
            encoding: Some(encoding),
            final_: false,
            include_cleaned: false,
            keep_alive: false,
            kind: None,
            code: None,
        }
    }

    pub fn reply(session_id: &str, kind: &str) -> Self {
        Self {
            session_id: session_id.to_string(),
            channel: None,
            rate_hz: None,
            encoding: None,
            final_: false,
            include_cleaned: false,
            keep_alive: false,
            kind: Some(kind.to_string()),
            code: None,
        }
    }
}

/// One decoded frame.
#[derive(Debug, Clone)]
pub struct Frame {
    pub header: FrameHeader,
    pub payload: Vec<u8>,
}

/// Writes one frame.
pub fn write_frame(w: &mut impl Write, header: &FrameHeader, payload: &[u8]) -> Result<()> {
    let mut header_bytes = serde_json::to_vec(header)?;
    header_bytes.push(b'\n');
    let frame_len = header_bytes.len() + payload.len();
    if frame_len > MAX_FRAME_LEN {
        return Err(GatewayError::FrameTooLarge(frame_len));
    }
    w.write_all(&(frame_len as u32).to_be_bytes())?;
    w.write_all(&header_bytes)?;
    w.write_all(payload)?;
    w.flush()?;
    Ok(())
}

/// Reads one frame. Returns `Ok(None)` on a clean end of stream.
pub fn read_frame(r: &mut impl Read) -> Result<Option<Frame>> {
    let mut len_bytes = [0u8; 4];
    match r.read_exact(&mut len_bytes) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let frame_len = u32::from_be_bytes(len_bytes) as usize;
    if frame_len > MAX_FRAME_LEN {
        return Err(GatewayError::FrameTooLarge(frame_len));
    }
    let mut buf = vec![0u8; frame_len];
    r.read_exact(&mut buf)
        .map_err(|_| GatewayError::BadFrame("frame shorter than its declared length".into()))?;
    let newline = buf
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| GatewayError::BadFrame("missing header terminator".into()))?;
    let header: FrameHeader = serde_json::from_slice(&buf[..newline])
        .map_err(|e| GatewayError::BadFrame(format!("header: {e}")))?;
    let payload = buf[newline + 1..].to_vec();
    Ok(Some(Frame { header, payload }))
}

/// Encodes samples for a payload.
pub fn encode_samples(samples: &[f64], encoding: Encoding) -> Vec<u8> {
    match encoding {
        Encoding::Pcm16le => samples
            .iter()
            .flat_map(|&s| {
                let q = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
                q.to_le_bytes()
            })
            .collect(),
        Encoding::F32le => samples
            .iter()
            .flat_map(|&s| (s as f32).to_le_bytes())
            .collect(),
    }
}

/// Decodes a payload back into samples.
pub fn decode_samples(payload: &[u8], encoding: Encoding) -> Result<Vec<f64>> {
    match encoding {
        Encoding::Pcm16le => {
            if payload.len() % 2 != 0 {
                return Err(GatewayError::BadFrame("odd pcm16 payload length".into()));
            }
            Ok(payload
                .chunks_exact(2)
                .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / 32768.0)
                .collect())
        }
        Encoding::F32le => {
            if payload.len() % 4 != 0 {
                return Err(GatewayError::BadFrame("f32 payload length not a multiple of 4".into()));
            }
            Ok(payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                .collect())
        }
    }
}

/// Minimal base64 (standard alphabet, padded) for embedding cleaned audio.
pub fn base64_encode(data: &[u8]) -> String {
    const TABLE: &[u8; 64] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    let mut out = String::with_capacity(data.len().div_ceil(3) * 4);
    for chunk in data.chunks(3) {
        let b = [
            chunk[0],
            chunk.get(1).copied().unwrap_or(0),
            chunk.get(2).copied().unwrap_or(0),
        ];
        let idx = [
            b[0] >> 2,
            ((b[0] & 0x03) << 4) | (b[1] >> 4),
            ((b[1] & 0x0F) << 2) | (b[2] >> 6),
            b[2] & 0x3F,
        ];
        out.push(TABLE[idx[0] as usize] as char);
        out.push(TABLE[idx[1] as usize] as char);
        out.push(if chunk.len() > 1 { TABLE[idx[2] as usize] as char } else { '=' });
        out.push(if chunk.len() > 2 { TABLE[idx[3] as usize] as char } else { '=' });
    }
    out
}

/// Inverse of [`base64_encode`].
pub fn base64_decode(text: &str) -> Result<Vec<u8>> {
    fn value(c: u8) -> Result<u8> {
        match c {
            b'A'..=b'Z' => Ok(c - b'A'),
            b'a'..=b'z' => Ok(c - b'a' + 26),
            b'0'..=b'9' => Ok(c - b'0' + 52),
            b'+' => Ok(62),
            b'/' => Ok(63),
            _ => Err(GatewayError::BadFrame("invalid base64 character".into())),
        }
    }
    let bytes: Vec<u8> = text.bytes().filter(|&b| b != b'=').collect();
    let mut out = Vec::with_capacity(bytes.len() * 3 / 4);
    for chunk in bytes.chunks(4) {
        let vals: Vec<u8> = chunk.iter().map(|&c| value(c)).collect::<Result<_>>()?;
        if vals.len() < 2 {
            return Err(GatewayError::BadFrame("truncated base64".into()));
        }
        out.push((vals[0] << 2) | (vals[1] >> 4));
        if vals.len() > 2 {
            out.push((vals[1] << 4) | (vals[2] >> 2));
        }
        if vals.len() > 3 {
            out.push((vals[2] << 6) | vals[3]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_round_trip() {
        let header = FrameHeader::samples("s1", Channel::Acc, 8000.0, Encoding::F32le);
        let payload = encode_samples(&[0.1, -0.2, 0.3], Encoding::F32le);
        let mut buf = Vec::new();
        write_frame(&mut buf, &header, &payload).unwrap();
        let frame = read_frame(&mut buf.as_slice()).unwrap().unwrap();
        assert_eq!(frame.header.session_id, "s1");
        assert_eq!(frame.header.channel, Some(Channel::Acc));
        let back = decode_samples(&frame.payload, Encoding::F32le).unwrap();
        assert_eq!(back.len(), 3);
        assert!((back[0] - 0.1).abs() < 1e-6);
    }

    #[test]
    fn inconsistent_length_is_a_bad_frame() {
        let header = FrameHeader::samples("s1", Channel::Mic, 8000.0, Encoding::Pcm16le);
        let payload = encode_samples(&[0.5; 10], Encoding::Pcm16le);
        let mut buf = Vec::new();
        write_frame(&mut buf, &header, &payload).unwrap();
        // Claim more bytes than the stream holds.
        let total = buf.len() as u32 - 4;
        buf[..4].copy_from_slice(&(total + 100).to_be_bytes());
        assert!(matches!(
            read_frame(&mut buf.as_slice()),
            Err(GatewayError::BadFrame(_))
        ));
    }

    #[test]
    fn oversize_frame_is_refused_without_reading_it() {
        let mut buf = Vec::new();
        buf.extend_from_slice(&(MAX_FRAME_LEN as u32 + 1).to_be_bytes());
        assert!(matches!(
            read_frame(&mut buf.as_slice()),
            Err(GatewayError::FrameTooLarge(_))
        ));
    }

    #[test]
    fn eof_between_frames_is_clean() {
        let empty: &[u8] = &[];
        assert!(read_frame(&mut &*empty).unwrap().is_none());
    }

    #[test]
    fn pcm16_and_f32_encodings_round_trip() {
        let samples = vec![0.0, 0.25, -0.25, 0.999, -1.0];
        for enc in [Encoding::Pcm16le, Encoding::F32le] {
            let bytes = encode_samples(&samples, enc);
            let back = decode_samples(&bytes, enc).unwrap();
            for (a, b) in samples.iter().zip(&back) {
                assert!((a - b).abs() < 1e-4, "{enc:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn base64_known_vectors() {
        assert_eq!(base64_encode(b""), "");
        assert_eq!(base64_encode(b"f"), "Zg==");
        assert_eq!(base64_encode(b"fo"), "Zm8=");
        assert_eq!(base64_encode(b"foo"), "Zm9v");
        assert_eq!(base64_encode(b"foobar"), "Zm9vYmFy");
        for v in [&b""[..], b"f", b"fo", b"foo", b"foobar", b"\x00\xFF\x7F"] {
            assert_eq!(base64_decode(&base64_encode(v)).unwrap(), v);
        }
    }
}
