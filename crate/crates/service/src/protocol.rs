//! JSON control messages exchanged with the editor.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct Load {
    pub path: String,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct Sample {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct SetHandles {
    pub indices: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct Drag {
    pub seq: u64,
    pub targets: Vec<[f64; 3]>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct Save {
    pub path: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ClientMessage {
    Hello,
    Load(Load),
    Sample(Sample),
    SetHandles(SetHandles),
    Drag(Drag),
    Save(Save),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    /// Message is valid but not allowed in the current session state.
    BadState,
    /// Not a control message, or an unknown `type`.
    Protocol,
    /// Known `type` with a malformed payload.
    Parse,
    /// Well-formed request the pipeline rejected (bad index, unreadable file, ...).
    Invalid,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    HelloAck {
        protocol: u32,
    },
    Loaded {
        gaussians: usize,
    },
    Sampled {
        /// Rest positions of the control nodes, in node order.
        controls: Vec<[f64; 3]>,
    },
    HandlesSet {
        indices: Vec<usize>,
    },
    /// Precedes the binary update frame of the same revision.
    Update {
        seq: u64,
        revision: u64,
        controls: Vec<[f64; 3]>,
    },
    Saved {
        path: String,
    },
    Error {
        code: ErrorCode,
        detail: String,
    },
}

impl ServerMessage {
    pub fn error(code: ErrorCode, detail: impl Into<String>) -> Self {
        Self::Error { code, detail: detail.into() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages always serialize")
    }
}

fn payload<T: DeserializeOwned>(value: Value) -> Result<T, ServerMessage> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        ServerMessage::error(ErrorCode::Parse, format!("{path}: {}", e.into_inner()))
    })
}

/// Parses one text frame; failures come back as the error reply to send.
pub fn parse_message(text: &str) -> Result<ClientMessage, ServerMessage> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| ServerMessage::error(ErrorCode::Protocol, format!("not JSON: {e}")))?;
    let kind = match value.get("type") {
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(ServerMessage::error(ErrorCode::Parse, "type: expected a string")),
        None => return Err(ServerMessage::error(ErrorCode::Protocol, "missing message type")),
    };
    Ok(match kind.as_str() {
        "hello" => ClientMessage::Hello,
        "load" => ClientMessage::Load(payload(value)?),
        "sample" => ClientMessage::Sample(payload(value)?),
        "set_handles" => ClientMessage::SetHandles(payload(value)?),
        "drag" => ClientMessage::Drag(payload(value)?),
        "save" => ClientMessage::Save(payload(value)?),
        other => return Err(ServerMessage::error(ErrorCode::Protocol, format!("unknown message type `{other}`"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(reply: ServerMessage) -> ErrorCode {
        match reply {
            ServerMessage::Error { code, .. } => code,
            other => panic!("not an error: {other:?}"),
        }
    }

    #[test]
    fn hello_ack_shape() {
        assert_eq!(parse_message(r#"{"type":"hello"}"#).unwrap(), ClientMessage::Hello);
        assert_eq!(ServerMessage::HelloAck { protocol: PROTOCOL_VERSION }.to_json(), r#"{"type":"hello_ack","protocol":1}"#);
    }

    #[test]
    fn drag_parses() {
        let m = parse_message(r#"{"type":"drag","seq":4,"targets":[[1,2,3.5]]}"#).unwrap();
        assert_eq!(m, ClientMessage::Drag(Drag { seq: 4, targets: vec![[1.0, 2.0, 3.5]] }));
    }

    #[test]
    fn unknown_type_is_protocol_error() {
        assert_eq!(code(parse_message(r#"{"type":"explode"}"#).unwrap_err()), ErrorCode::Protocol);
        assert_eq!(code(parse_message("[1,2]").unwrap_err()), ErrorCode::Protocol);
        assert_eq!(code(parse_message("nope").unwrap_err()), ErrorCode::Protocol);
    }

    #[test]
    fn malformed_payload_names_field_path() {
        let err = parse_message(r#"{"type":"drag","seq":1,"targets":[[0,0,0],[1,"x",2]]}"#).unwrap_err();
        let ServerMessage::Error { code, detail } = err else { panic!() };
        assert_eq!(code, ErrorCode::Parse);
        assert!(detail.starts_with("targets[1][1]"), "{detail}");

        let ServerMessage::Error { detail, .. } = parse_message(r#"{"type":"sample","n":5,"k":2}"#).unwrap_err() else { panic!() };
        assert!(detail.contains("seed"), "{detail}");
    }

    #[test]
    fn error_reply_shape() {
        let json = ServerMessage::error(ErrorCode::BadState, "no cloud loaded").to_json();
        assert_eq!(json, r#"{"type":"error","code":"bad_state","detail":"no cloud loaded"}"#);
    }
}
