//! Bit-exact frame codec.
//!
//! Frame layout: 4-byte big-endian length, 1-byte message type, body as
//! canonical JSON. The length counts the type byte plus the body.

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use super::msg::*;

/// Maximum body size accepted on either path.
pub const MAX_BODY_BYTES: usize = 16 * 1024 * 1024;

#[derive(Debug, Error, PartialEq)]
pub enum EncodeError {
    #[error("body too large: {0} bytes")]
    BodyTooLarge(usize),
}

#[derive(Debug, Error, PartialEq)]
pub enum DecodeError {
    #[error("need more bytes")]
    NeedMoreBytes,
    #[error("unknown message type 0x{0:02x}")]
    UnknownMsgType(u8),
    #[error("malformed body: {0}")]
    MalformedBody(String),
    #[error("length mismatch")]
    LengthMismatch,
}

fn canonical_json<T: Serialize>(body: &T) -> Vec<u8> {
    // Value's map is a BTreeMap: keys come out sorted, compact by default.
    serde_json::to_value(body).unwrap().to_string().into_bytes()
}

pub fn encode_frame(msg: &E2Message) -> Result<Vec<u8>, EncodeError> {
    let body = match msg {
        E2Message::SetupRequest(m) => canonical_json(m),
        E2Message::SetupResponse(m) => canonical_json(m),
        E2Message::SubscriptionRequest(m) => canonical_json(m),
        E2Message::SubscriptionResponse(m) => canonical_json(m),
        E2Message::Indication(m) => canonical_json(m),
        E2Message::ControlRequest(m) => canonical_json(m),
        E2Message::ControlAck(m) => canonical_json(m),
        E2Message::ProtocolError(m) => canonical_json(m),
    };
    if body.len() > MAX_BODY_BYTES {
        return Err(EncodeError::BodyTooLarge(body.len()));
    }
    let len = (body.len() + 1) as u32;
    let mut frame = Vec::with_capacity(4 + body.len() + 1);
    frame.extend_from_slice(&len.to_be_bytes());
    frame.push(msg.msg_type());
    frame.extend_from_slice(&body);
    Ok(frame)
}

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, DecodeError> {
    serde_json::from_slice(body).map_err(|e| DecodeError::MalformedBody(e.to_string()))
}

/// Decode one frame from the front of `buf`. Returns the message and the
/// number of bytes consumed. Total on arbitrary input: every failure is a
/// typed error, never a panic.
pub fn decode_frame(buf: &[u8]) -> Result<(E2Message, usize), DecodeError> {
    if buf.len() < 4 {
        return Err(DecodeError::NeedMoreBytes);
    }
    let len = u32::from_be_bytes([buf[0], buf[1], buf[2], buf[3]]) as usize;
    if len == 0 || len > MAX_BODY_BYTES + 1 {
        return Err(DecodeError::LengthMismatch);
    }
    if buf.len() < 4 + len {
        return Err(DecodeError::NeedMoreBytes);
    }
    let msg_type = buf[4];
    let body = &buf[5..4 + len];
    let consumed = 4 + len;
    let msg = match msg_type {
        0x01 => E2Message::SetupRequest(parse_body(body)?),
        0x02 => E2Message::SetupResponse(parse_body(body)?),
        0x03 => E2Message::SubscriptionRequest(parse_body(body)?),
        0x04 => E2Message::SubscriptionResponse(parse_body(body)?),
        0x05 => E2Message::Indication(parse_body(body)?),
        0x06 => E2Message::ControlRequest(parse_body(body)?),
        0x07 => E2Message::ControlAck(parse_body(body)?),
        0x08 => E2Message::ProtocolError(parse_body(body)?),
        t => return Err(DecodeError::UnknownMsgType(t)),
    };
    Ok((msg, consumed))
}

/// Streaming decoder: feed bytes as they arrive, pull complete messages.
/// Malformed frames are skipped whole so the stream stays in sync.
#[derive(Debug, Default)]
pub struct FrameReader {
    buf: Vec<u8>,
}

impl FrameReader {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn feed(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    /// Next complete frame, if any. `Some(Err(_))` reports a bad frame that
    /// was skipped; callers may keep pulling.
    pub fn next(&mut self) -> Option<Result<E2Message, DecodeError>> {
        match decode_frame(&self.buf) {
            Ok((msg, consumed)) => {
                self.buf.drain(..consumed);
                Some(Ok(msg))
            }
            Err(DecodeError::NeedMoreBytes) => None,
            Err(e) => {
                // Skip the advertised frame if its length field is sane,
                // otherwise drop the buffer to resynchronize.
                if self.buf.len() >= 4 {
                    let len = u32::from_be_bytes([
                        self.buf[0],
                        self.buf[1],
                        self.buf[2],
                        self.buf[3],
                    ]) as usize;
                    if len >= 1 && len <= MAX_BODY_BYTES + 1 && self.buf.len() >= 4 + len {
                        self.buf.drain(..4 + len);
                    } else {
                        self.buf.clear();
                    }
                } else {
                    self.buf.clear();
                }
                Some(Err(e))
            }
        }
    }
}
