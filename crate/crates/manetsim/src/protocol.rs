//! Per-node state machines of the flooding anycast protocol.
//!
//! The source broadcasts numbered requests. Simple nodes rebroadcast the
//! first copy of each request they see while the hop budget allows, and
//! forward the first reply per request back along the recorded path.
//! Servers answer the first copy of each request with a unicast reply that
//! retraces the request's path in reverse. The source keeps a ledger of
//! send times, first replies, and duplicate replies.
//!
//! These functions hold all protocol logic but never touch the event queue:
//! they return actions for the engine to execute.

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use crate::config::{NodeId, Role, SimulationConfig, TimeMs};

/// Request sequence number, unique per source packet.
pub type Seq = u32;

/// A flooded anycast request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestPacket {
    pub seq: Seq,
    /// Remaining hop budget. Always >= 1 on an emitted packet.
    pub ttl_remaining: u32,
    /// Nodes traversed so far, source first, current holder last. Never
    /// contains a node twice.
    pub path: Vec<NodeId>,
    /// Times this request has been re-emitted; equals `path.len() - 1`.
    pub hop_count: u32,
    /// When the source generated the request.
    pub origin_time_ms: TimeMs,
}

/// A unicast reply retracing a request path in reverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplyPacket {
    pub seq: Seq,
    /// Full return route: the answering server first, the source last.
    pub route: Vec<NodeId>,
    /// Transmissions so far. The engine increments this on every unicast,
    /// so a delivered reply carries its receiver's position in the route.
    pub hop_count: u32,
    /// Copied from the request; the source derives the response time.
    pub origin_time_ms: TimeMs,
    pub server: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Packet {
    Request(RequestPacket),
    Reply(ReplyPacket),
}

impl Packet {
    pub fn seq(&self) -> Seq {
        match self {
            Packet::Request(r) => r.seq,
            Packet::Reply(r) => r.seq,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Packet::Request(_) => "request",
            Packet::Reply(_) => "reply",
        }
    }
}

/// What a protocol handler asks the engine to do.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    /// Flood a request to everyone in range.
    Broadcast(RequestPacket),
    /// Send a reply to the next node on its route.
    Unicast { to: NodeId, reply: ReplyPacket },
}

/// Source-side bookkeeping for one request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestOutcome {
    pub sent_at_ms: TimeMs,
    pub first_reply: Option<FirstReply>,
    /// Replies that arrived after the first one.
    pub duplicate_replies: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FirstReply {
    pub response_time_ms: TimeMs,
    /// Transmissions the reply needed, i.e. the length of its route in
    /// links. A direct server-to-source reply counts 1.
    pub hops: u32,
    pub server: NodeId,
}

/// Ledger of every request the source generated, keyed by sequence number.
pub type SourceLedger = BTreeMap<Seq, RequestOutcome>;

/// Protocol memory of one node. The variant encodes the role.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeProtocolState {
    Source {
        ledger: SourceLedger,
    },
    Server {
        replied: HashSet<Seq>,
    },
    Intermediate {
        seen_requests: HashSet<Seq>,
        forwarded_replies: HashSet<Seq>,
    },
}

impl NodeProtocolState {
    pub fn for_role(role: Role) -> Self {
        match role {
            Role::Source => NodeProtocolState::Source {
                ledger: SourceLedger::new(),
            },
            Role::Server => NodeProtocolState::Server {
                replied: HashSet::new(),
            },
            Role::Intermediate => NodeProtocolState::Intermediate {
                seen_requests: HashSet::new(),
                forwarded_replies: HashSet::new(),
            },
        }
    }
}

/// A reply turned up somewhere its route does not allow. This is an engine
/// bug, never a model event; the run aborts with this diagnostic.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed reply route at node {node} (seq {seq}): {reason}; route {route:?}")]
pub struct RouteError {
    pub node: NodeId,
    pub seq: Seq,
    pub reason: String,
    pub route: Vec<NodeId>,
}

/// Creates request number `seq` at the source and records its send time.
/// The engine broadcasts the returned packet.
pub fn generate_request(
    state: &mut NodeProtocolState,
    seq: Seq,
    now: TimeMs,
    config: &SimulationConfig,
) -> RequestPacket {
    let NodeProtocolState::Source { ledger } = state else {
        unreachable!("generate_request invoked on a non-source node");
    };
    debug_assert!(seq >= 1 && seq <= config.requests);
    debug_assert_eq!(now, (seq as TimeMs - 1) * config.request_interval_ms);
    let previous = ledger.insert(
        seq,
        RequestOutcome {
            sent_at_ms: now,
            first_reply: None,
            duplicate_replies: 0,
        },
    );
    debug_assert!(previous.is_none(), "seq {seq} generated twice");
    RequestPacket {
        seq,
        ttl_remaining: config.ttl,
        path: vec![config.source()],
        hop_count: 0,
        origin_time_ms: now,
    }
}

/// Handles a delivered request. Whether the delivery happened at all was
/// already decided by the link model.
pub fn on_request(node: NodeId, pkt: &RequestPacket, state: &mut NodeProtocolState) -> Option<Action> {
    match state {
        // Every request copy reaching the source is an echo of its own
        // packet; drop it.
        NodeProtocolState::Source { .. } => None,
        NodeProtocolState::Server { replied } => {
            if !replied.insert(pkt.seq) {
                return None;
            }
            let mut route = pkt.path.clone();
            route.push(node);
            route.reverse();
            let to = route[1];
            Some(Action::Unicast {
                to,
                reply: ReplyPacket {
                    seq: pkt.seq,
                    route,
                    hop_count: 0,
                    origin_time_ms: pkt.origin_time_ms,
                    server: node,
                },
            })
        }
        NodeProtocolState::Intermediate { seen_requests, .. } => {
            if !seen_requests.insert(pkt.seq) {
                return None;
            }
            if pkt.ttl_remaining < 2 {
                // Hop budget exhausted: absorb without rebroadcasting.
                return None;
            }
            let mut path = pkt.path.clone();
            path.push(node);
            Some(Action::Broadcast(RequestPacket {
                seq: pkt.seq,
                ttl_remaining: pkt.ttl_remaining - 1,
                path,
                hop_count: pkt.hop_count + 1,
                origin_time_ms: pkt.origin_time_ms,
            }))
        }
    }
}

/// Handles a delivered reply at the node `pkt.route` points at next.
pub fn on_reply(
    node: NodeId,
    pkt: &ReplyPacket,
    state: &mut NodeProtocolState,
    now: TimeMs,
) -> Result<Option<Action>, RouteError> {
    let malformed = |reason: String| RouteError {
        node,
        seq: pkt.seq,
        reason,
        route: pkt.route.clone(),
    };
    let position = pkt
        .route
        .iter()
        .position(|&n| n == node)
        .ok_or_else(|| malformed("receiver is not on the route".into()))?;
    if position as u32 != pkt.hop_count {
        return Err(malformed(format!(
            "hop count {} does not match route position {position}",
            pkt.hop_count
        )));
    }

    match state {
        NodeProtocolState::Source { ledger } => {
            if position != pkt.route.len() - 1 {
                return Err(malformed("route does not end at the source".into()));
            }
            let outcome = ledger
                .get_mut(&pkt.seq)
                .ok_or_else(|| malformed("reply for a request the source never sent".into()))?;
            if outcome.first_reply.is_none() {
                outcome.first_reply = Some(FirstReply {
                    response_time_ms: now - pkt.origin_time_ms,
                    hops: pkt.hop_count,
                    server: pkt.server,
                });
            } else {
                outcome.duplicate_replies += 1;
            }
            Ok(None)
        }
        NodeProtocolState::Server { .. } => {
            Err(malformed("servers never appear on reply routes".into()))
        }
        NodeProtocolState::Intermediate {
            forwarded_replies, ..
        } => {
            if position + 1 >= pkt.route.len() {
                return Err(malformed("route does not end at the source".into()));
            }
            if !forwarded_replies.insert(pkt.seq) {
                return Ok(None);
            }
            Ok(Some(Action::Unicast {
                to: pkt.route[position + 1],
                reply: pkt.clone(),
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimulationConfig;

    fn cfg() -> SimulationConfig {
        SimulationConfig::default()
    }

    fn node(i: u32) -> NodeId {
        NodeId::new(i)
    }

    #[test]
    fn generated_request_matches_contract() {
        let cfg = cfg();
        let mut source = NodeProtocolState::for_role(Role::Source);
        let pkt = generate_request(&mut source, 1, 0, &cfg);
        assert_eq!(pkt.seq, 1);
        assert_eq!(pkt.ttl_remaining, 7);
        assert_eq!(pkt.path, vec![node(50)]);
        assert_eq!(pkt.hop_count, 0);
        assert_eq!(pkt.origin_time_ms, 0);

        let pkt = generate_request(&mut source, 3, 1000, &cfg);
        assert_eq!(pkt.origin_time_ms, 1000);
    }

    #[test]
    fn server_answers_only_the_first_copy() {
        let mut server = NodeProtocolState::for_role(Role::Server);
        let req = RequestPacket {
            seq: 5,
            ttl_remaining: 6,
            path: vec![node(50), node(12)],
            hop_count: 1,
            origin_time_ms: 2000,
        };
        let action = on_request(node(2), &req, &mut server).unwrap();
        match action {
            Action::Unicast { to, reply } => {
                assert_eq!(reply.route, vec![node(2), node(12), node(50)]);
                assert_eq!(to, node(12));
                assert_eq!(reply.hop_count, 0);
                assert_eq!(reply.server, node(2));
                assert_eq!(reply.origin_time_ms, 2000);
            }
            other => panic!("expected a unicast reply, got {other:?}"),
        }
        assert_eq!(on_request(node(2), &req, &mut server), None);
    }

    #[test]
    fn intermediate_rebroadcasts_first_copy_within_budget() {
        let mut mid = NodeProtocolState::for_role(Role::Intermediate);
        let req = RequestPacket {
            seq: 9,
            ttl_remaining: 3,
            path: vec![node(50)],
            hop_count: 0,
            origin_time_ms: 0,
        };
        let action = on_request(node(20), &req, &mut mid).unwrap();
        match action {
            Action::Broadcast(out) => {
                assert_eq!(out.ttl_remaining, 2);
                assert_eq!(out.path, vec![node(50), node(20)]);
                assert_eq!(out.hop_count, 1);
            }
            other => panic!("expected a rebroadcast, got {other:?}"),
        }
        // Second copy of the same request: silence.
        assert_eq!(on_request(node(20), &req, &mut mid), None);
    }

    #[test]
    fn intermediate_absorbs_exhausted_requests() {
        let mut mid = NodeProtocolState::for_role(Role::Intermediate);
        let req = RequestPacket {
            seq: 4,
            ttl_remaining: 1,
            path: vec![node(50), node(30)],
            hop_count: 1,
            origin_time_ms: 0,
        };
        assert_eq!(on_request(node(21), &req, &mut mid), None);
        // The exhausted copy still counts as seen.
        let fresh = RequestPacket {
            ttl_remaining: 7,
            ..req
        };
        assert_eq!(on_request(node(21), &fresh, &mut mid), None);
    }

    #[test]
    fn source_discards_its_own_requests() {
        let cfg = cfg();
        let mut source = NodeProtocolState::for_role(Role::Source);
        let pkt = generate_request(&mut source, 2, 500, &cfg);
        assert_eq!(on_request(node(50), &pkt, &mut source), None);
    }

    #[test]
    fn source_records_first_reply_and_counts_duplicates() {
        let cfg = cfg();
        let mut source = NodeProtocolState::for_role(Role::Source);
        generate_request(&mut source, 7, 3000, &cfg);

        let reply = |server: u32, hops: u32| ReplyPacket {
            seq: 7,
            route: vec![node(server), node(20), node(31), node(50)],
            hop_count: hops,
            origin_time_ms: 3000,
            server: node(server),
        };
        assert_eq!(on_reply(node(50), &reply(2, 3), &mut source, 3040), Ok(None));
        assert_eq!(on_reply(node(50), &reply(4, 3), &mut source, 3060), Ok(None));

        let NodeProtocolState::Source { ledger } = &source else {
            unreachable!()
        };
        let outcome = &ledger[&7];
        let first = outcome.first_reply.unwrap();
        assert_eq!(first.response_time_ms, 40);
        assert_eq!(first.hops, 3);
        assert_eq!(first.server, node(2));
        assert_eq!(outcome.duplicate_replies, 1);
    }

    #[test]
    fn intermediate_forwards_only_the_first_reply() {
        let mut mid = NodeProtocolState::for_role(Role::Intermediate);
        let from_server = |server: u32| ReplyPacket {
            seq: 9,
            route: vec![node(server), node(20), node(50)],
            hop_count: 1,
            origin_time_ms: 0,
            server: node(server),
        };
        let action = on_reply(node(20), &from_server(2), &mut mid, 20).unwrap();
        assert_eq!(
            action,
            Some(Action::Unicast {
                to: node(50),
                reply: from_server(2),
            })
        );
        assert_eq!(on_reply(node(20), &from_server(4), &mut mid, 30), Ok(None));
    }

    #[test]
    fn off_route_reply_is_a_malformed_route() {
        let mut mid = NodeProtocolState::for_role(Role::Intermediate);
        let reply = ReplyPacket {
            seq: 1,
            route: vec![node(3), node(21), node(50)],
            hop_count: 1,
            origin_time_ms: 0,
            server: node(3),
        };
        let err = on_reply(node(22), &reply, &mut mid, 10).unwrap_err();
        assert!(err.reason.contains("not on the route"));

        let mut server = NodeProtocolState::for_role(Role::Server);
        let reply = ReplyPacket {
            route: vec![node(3), node(4), node(50)],
            ..reply
        };
        let err = on_reply(node(4), &reply, &mut server, 10).unwrap_err();
        assert!(err.reason.contains("servers never appear"));
    }

    #[test]
    fn hop_count_must_match_route_position() {
        let mut mid = NodeProtocolState::for_role(Role::Intermediate);
        let reply = ReplyPacket {
            seq: 2,
            route: vec![node(3), node(21), node(50)],
            hop_count: 2,
            origin_time_ms: 0,
            server: node(3),
        };
        let err = on_reply(node(21), &reply, &mut mid, 10).unwrap_err();
        assert!(err.reason.contains("does not match route position"));
    }
}
