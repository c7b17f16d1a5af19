//! E2-lite message schemas.
//!
//! Bodies serialize as canonical JSON: keys sorted, no insignificant
//! whitespace. `serde_json`'s default map is a BTreeMap, so routing every
//! body through `serde_json::Value` yields byte-deterministic encodings.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ransim::{ControlDirective, KpmRecord};

/// Base-station identifier, `gnb:<3-digit MCC>-<3-digit MNC>-<8-hex node id>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NodeId(String);

#[derive(Debug, Error, PartialEq)]
#[error("invalid node id {0:?}, expected gnb:<3 digits>-<3 digits>-<8 hex digits>")]
pub struct NodeIdError(pub String);

impl NodeId {
    pub fn parse(s: &str) -> Result<Self, NodeIdError> {
        let bad = || NodeIdError(s.to_string());
        let rest = s.strip_prefix("gnb:").ok_or_else(bad)?;
        let parts: Vec<&str> = rest.split('-').collect();
        if parts.len() != 3
            || parts[0].len() != 3
            || parts[1].len() != 3
            || parts[2].len() != 8
            || !parts[0].bytes().all(|b| b.is_ascii_digit())
            || !parts[1].bytes().all(|b| b.is_ascii_digit())
            || !parts[2]
                .bytes()
                .all(|b| b.is_ascii_hexdigit() && !b.is_ascii_uppercase())
        {
            return Err(bad());
        }
        Ok(NodeId(s.to_string()))
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for NodeId {
    type Error = NodeIdError;
    fn try_from(s: String) -> Result<Self, NodeIdError> {
        NodeId::parse(&s)
    }
}
impl From<NodeId> for String {
    fn from(n: NodeId) -> String {
        n.0
    }
}
impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AckStatus {
    Applied,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupRequest {
    pub txid: u64,
    pub node_id: NodeId,
    pub kpm_window_ms: u64,
    pub rbg_count: u16,
    pub n_slices: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupResponse {
    pub txid: u64,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubscriptionRequest {
    pub txid: u64,
    pub node_id: NodeId,
    pub xapp_id: String,
    pub report_period_ms: u64,
    pub metric_set: Vec<String>,
    /// Stamped by the RIC when forwarding to the node; absent from the
    /// xApp's original request.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_id: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubscriptionResponse {
    pub txid: u64,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Indication {
    pub txid: u64,
    pub sub_id: u64,
    pub node_id: NodeId,
    pub ts_ms: u64,
    pub seq: u64,
    pub records: Vec<KpmRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlRequest {
    pub txid: u64,
    pub directive: ControlDirective,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlAck {
    pub txid: u64,
    pub status: AckStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolError {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub txid: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Tagged union of all E2-lite messages. Every request type has exactly one
/// matching response type; `txid` round-trips unchanged.
#[derive(Debug, Clone, PartialEq)]
pub enum E2Message {
    SetupRequest(SetupRequest),
    SetupResponse(SetupResponse),
    SubscriptionRequest(SubscriptionRequest),
    SubscriptionResponse(SubscriptionResponse),
    Indication(Indication),
    ControlRequest(ControlRequest),
    ControlAck(ControlAck),
    ProtocolError(ProtocolError),
}

impl E2Message {
    pub fn msg_type(&self) -> u8 {
        match self {
            E2Message::SetupRequest(_) => 0x01,
            E2Message::SetupResponse(_) => 0x02,
            E2Message::SubscriptionRequest(_) => 0x03,
            E2Message::SubscriptionResponse(_) => 0x04,
            E2Message::Indication(_) => 0x05,
            E2Message::ControlRequest(_) => 0x06,
            E2Message::ControlAck(_) => 0x07,
            E2Message::ProtocolError(_) => 0x08,
        }
    }

    pub fn transaction_id(&self) -> Option<u64> {
        match self {
            E2Message::SetupRequest(m) => Some(m.txid),
            E2Message::SetupResponse(m) => Some(m.txid),
            E2Message::SubscriptionRequest(m) => Some(m.txid),
            E2Message::SubscriptionResponse(m) => Some(m.txid),
            E2Message::Indication(m) => Some(m.txid),
            E2Message::ControlRequest(m) => Some(m.txid),
            E2Message::ControlAck(m) => Some(m.txid),
            E2Message::ProtocolError(m) => m.txid,
        }
    }

    pub fn protocol_error(txid: Option<u64>, code: &str, detail: impl Into<String>) -> Self {
        E2Message::ProtocolError(ProtocolError {
            txid,
            code: Some(code.to_string()),
            detail: Some(detail.into()),
        })
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            E2Message::SetupRequest(_) => "setup_request",
            E2Message::SetupResponse(_) => "setup_response",
            E2Message::SubscriptionRequest(_) => "subscription_request",
            E2Message::SubscriptionResponse(_) => "subscription_response",
            E2Message::Indication(_) => "indication",
            E2Message::ControlRequest(_) => "control_request",
            E2Message::ControlAck(_) => "control_ack",
            E2Message::ProtocolError(_) => "protocol_error",
        }
    }

    /// Self-describing JSON form: the body object plus a `type` tag. Used by
    /// language bindings; the wire format carries the tag as a byte instead.
    pub fn to_tagged_json(&self) -> Result<String, serde_json::Error> {
        let mut v = match self {
            E2Message::SetupRequest(m) => serde_json::to_value(m)?,
            E2Message::SetupResponse(m) => serde_json::to_value(m)?,
            E2Message::SubscriptionRequest(m) => serde_json::to_value(m)?,
            E2Message::SubscriptionResponse(m) => serde_json::to_value(m)?,
            E2Message::Indication(m) => serde_json::to_value(m)?,
            E2Message::ControlRequest(m) => serde_json::to_value(m)?,
            E2Message::ControlAck(m) => serde_json::to_value(m)?,
            E2Message::ProtocolError(m) => serde_json::to_value(m)?,
        };
        v.as_object_mut()
            .expect("message bodies are JSON objects")
            .insert("type".into(), self.type_name().into());
        Ok(v.to_string())
    }

    pub fn from_tagged_json(s: &str) -> Result<Self, String> {
        let mut v: serde_json::Value = serde_json::from_str(s).map_err(|e| e.to_string())?;
        let obj = v.as_object_mut().ok_or("message must be a JSON object")?;
        let tag = obj
            .remove("type")
            .and_then(|t| t.as_str().map(str::to_string))
            .ok_or("missing \"type\" tag")?;
        fn from<T: serde::de::DeserializeOwned>(v: serde_json::Value) -> Result<T, String> {
            serde_json::from_value(v).map_err(|e| e.to_string())
        }
        Ok(match tag.as_str() {
            "setup_request" => E2Message::SetupRequest(from(v)?),
            "setup_response" => E2Message::SetupResponse(from(v)?),
            "subscription_request" => E2Message::SubscriptionRequest(from(v)?),
            "subscription_response" => E2Message::SubscriptionResponse(from(v)?),
            "indication" => E2Message::Indication(from(v)?),
            "control_request" => E2Message::ControlRequest(from(v)?),
            "control_ack" => E2Message::ControlAck(from(v)?),
            "protocol_error" => E2Message::ProtocolError(from(v)?),
            other => return Err(format!("unknown message type {other:?}")),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tagged_json_roundtrips() {
        let msg = E2Message::SetupRequest(SetupRequest {
            txid: 7,
            node_id: NodeId::parse("gnb:311-048-01000501").unwrap(),
            kpm_window_ms: 100,
            rbg_count: 17,
            n_slices: 2,
        });
        let json = msg.to_tagged_json().unwrap();
        assert!(json.contains("\"type\":\"setup_request\""));
        assert_eq!(E2Message::from_tagged_json(&json).unwrap(), msg);
        assert!(E2Message::from_tagged_json("{\"txid\":1}").is_err());
    }

    #[test]
    fn node_id_accepts_paper_example() {
        let id = NodeId::parse("gnb:311-048-01000501").unwrap();
        assert_eq!(id.as_str(), "gnb:311-048-01000501");
    }

    #[test]
    fn node_id_rejects_bad_forms() {
        for s in [
            "gnb:31-048-01000501",
            "enb:311-048-01000501",
            "gnb:311-048-0100050",
            "gnb:311-048-0100050Z",
            "gnb:311-048-0100050G",
            "GNB:311-048-01000501",
            "gnb:311-048-01000501 ",
        ] {
            assert!(NodeId::parse(s).is_err(), "{s:?} should be rejected");
        }
    }

    #[test]
    fn node_id_comparison_is_byte_exact() {
        // Uppercase hex is a different byte string and is rejected outright.
        assert!(NodeId::parse("gnb:311-048-01000501").is_ok());
        assert!(NodeId::parse("gnb:311-048-01000501").unwrap().as_str()
            == "gnb:311-048-01000501");
        assert!(NodeId::parse("gnb:311-048-0100050A").is_err());
    }
}
