//! E2-lite: framed wire protocol and endpoint state machines for the
//! Setup / Subscription / Indication / Control flow.

pub mod codec;
pub mod msg;
pub mod node;

pub use codec::{decode_frame, encode_frame, DecodeError, EncodeError, FrameReader};
pub use msg::{
    AckStatus, ControlAck, ControlRequest, E2Message, Indication, NodeId, NodeIdError,
    ProtocolError, SetupRequest, SetupResponse, Status, SubscriptionRequest,
    SubscriptionResponse,
};
pub use node::{ControlApplier, NodeFsm, NodeState};
