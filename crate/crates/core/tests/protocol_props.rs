//! Property tests for the wire codec: frames survive any chunking of the
//! byte stream, and the streaming reader resynchronizes after garbage.

use orgym_core::e2lite::{
    encode_frame, E2Message, FrameReader, NodeId, SetupRequest, SetupResponse, Status,
    SubscriptionRequest,
};
use proptest::prelude::*;

fn msg_strategy() -> impl Strategy<Value = E2Message> {
    let node_id = (0u32..1000, 0u32..1000, any::<u32>())
        .prop_map(|(mcc, mnc, id)| NodeId::parse(&format!("gnb:{mcc:03}-{mnc:03}-{id:08x}")).unwrap());
    prop_oneof![
        (any::<u64>(), node_id.clone(), any::<u64>(), any::<u16>(), any::<u32>()).prop_map(
            |(txid, node_id, kpm_window_ms, rbg_count, n_slices)| {
                E2Message::SetupRequest(SetupRequest {
                    txid,
                    node_id,
                    kpm_window_ms,
                    rbg_count,
                    n_slices,
                })
            }
        ),
        (any::<u64>(), any::<bool>(), proptest::option::of(".{0,32}")).prop_map(
            |(txid, ok, reason)| {
                E2Message::SetupResponse(SetupResponse {
                    txid,
                    status: if ok { Status::Accepted } else { Status::Rejected },
                    reason,
                })
            }
        ),
        (
            any::<u64>(),
            node_id,
            "[a-z0-9_-]{1,16}",
            any::<u64>(),
            proptest::collection::vec("[a-z_]{1,12}", 0..4),
            proptest::option::of(any::<u64>()),
        )
            .prop_map(
                |(txid, node_id, xapp_id, report_period_ms, metric_set, sub_id)| {
                    E2Message::SubscriptionRequest(SubscriptionRequest {
                        txid,
                        node_id,
                        xapp_id,
                        report_period_ms,
                        metric_set,
                        sub_id,
                    })
                }
            ),
        (proptest::option::of(any::<u64>()), "[A-Za-z]{1,12}", ".{0,40}")
            .prop_map(|(txid, code, detail)| E2Message::protocol_error(txid, &code, detail)),
    ]
}

proptest! {
    /// Concatenated frames decode back to the same messages regardless of
    /// how the byte stream is sliced into reads.
    #[test]
    fn frame_reader_is_chunking_invariant(
        msgs in proptest::collection::vec(msg_strategy(), 1..6),
        chunk in 1usize..64,
    ) {
        let mut stream = Vec::new();
        for m in &msgs {
            stream.extend_from_slice(&encode_frame(m).unwrap());
        }
        let mut reader = FrameReader::new();
        let mut got = Vec::new();
        for piece in stream.chunks(chunk) {
            reader.feed(piece);
            while let Some(res) = reader.next() {
                got.push(res.unwrap());
            }
        }
        prop_assert_eq!(got, msgs);
    }

    /// A corrupt frame in the middle is reported as an error and the frames
    /// around it still decode.
    #[test]
    fn frame_reader_resyncs_after_garbage(
        before in msg_strategy(),
        garbage in proptest::collection::vec(any::<u8>(), 1..32),
        after in msg_strategy(),
    ) {
        // wrap the garbage in a sane length prefix with an unknown type so
        // the reader can skip exactly one frame
        let mut stream = encode_frame(&before).unwrap();
        let body = (garbage.len() + 1) as u32;
        stream.extend_from_slice(&body.to_be_bytes());
        stream.push(0xFF);
        stream.extend_from_slice(&garbage);
        stream.extend_from_slice(&encode_frame(&after).unwrap());

        let mut reader = FrameReader::new();
        reader.feed(&stream);
        prop_assert_eq!(reader.next().unwrap().unwrap(), before);
        prop_assert!(reader.next().unwrap().is_err());
        prop_assert_eq!(reader.next().unwrap().unwrap(), after);
        prop_assert!(reader.next().is_none());
    }
}
