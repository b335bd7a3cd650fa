//! Deterministic discrete-event core: the time-ordered event queue, the
//! four event kinds, broadcast fan-out, and run orchestration.
//!
//! Time-equal events process in a fixed kind order (mobility step, then
//! link refresh, then request generation, then deliveries), with insertion
//! order breaking the remaining ties. Delivery decisions are made at
//! transmission time against the current positions and link epoch; the
//! delivery event then fires one hop delay later. The run consumes periodic
//! events up to the configured run length and then drains whatever packets
//! are still in flight.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::config::{ConfigError, NodeId, Position, SimulationConfig, TimeMs};
use crate::link::{self, LinkStateTable};
use crate::metrics::{self, MetricsRecord, RawCounters};
use crate::mobility::{self, Kinematics};
use crate::protocol::{
    self, Action, NodeProtocolState, Packet, ReplyPacket, RequestOutcome, RequestPacket,
    RouteError, Seq,
};
use crate::streams::{self, Stream};
use crate::trace::{NoTrace, PacketEvent, Trace};

/// The four things that can happen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    /// Advance every node by one mobility step.
    MobilityStep,
    /// Re-draw every directed link state.
    LinkRefresh,
    /// The source emits request number `seq`.
    RequestGen { seq: Seq },
    /// A transmitted packet reaches its receiver.
    Delivery { packet: Packet, receiver: NodeId },
}

impl EventKind {
    /// Order of time-equal events. Mobility and link refresh precede
    /// deliveries at the same instant, so delivery handling always sees the
    /// freshest state.
    fn priority(&self) -> u8 {
        match self {
            EventKind::MobilityStep => 0,
            EventKind::LinkRefresh => 1,
            EventKind::RequestGen { .. } => 2,
            EventKind::Delivery { .. } => 3,
        }
    }
}

#[derive(Debug)]
struct QueuedEvent {
    time: TimeMs,
    priority: u8,
    tie: u64,
    kind: EventKind,
}

impl QueuedEvent {
    fn key(&self) -> (TimeMs, u8, u64) {
        (self.time, self.priority, self.tie)
    }
}

impl PartialEq for QueuedEvent {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for QueuedEvent {}

impl PartialOrd for QueuedEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueuedEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we want the earliest event.
        other.key().cmp(&self.key())
    }
}

/// Engine failures. All of these are bugs or broken inputs, not model
/// events; a run that returns one produced no usable metrics.
#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid config: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    MalformedRoute(#[from] RouteError),
    #[error("event at {event_ms} ms scheduled before the clock at {clock_ms} ms")]
    Causality { event_ms: TimeMs, clock_ms: TimeMs },
    #[error("placement override has {got} positions, config needs {expected}")]
    PlacementSize { got: usize, expected: usize },
    #[error("placement override puts node {index} outside the arena")]
    PlacementOutsideArena { index: usize },
}

/// Optional knobs for [`run_report`].
#[derive(Default)]
pub struct RunOptions<'a> {
    /// Replaces the drawn initial positions (speeds and headings are still
    /// drawn from the placement stream). Lets tests pin exact scenarios.
    pub placement: Option<Vec<Position>>,
    pub trace: Option<&'a mut dyn Trace>,
}

/// Metrics plus the per-request ledger of one finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub metrics: MetricsRecord,
    /// One entry per generated request, in sequence order.
    pub requests: Vec<(Seq, RequestOutcome)>,
}

/// Executes one run. Identical `(config, seed)` pairs yield bit-identical
/// records.
pub fn run(config: &SimulationConfig) -> Result<MetricsRecord, EngineError> {
    Ok(run_report(config, RunOptions::default())?.metrics)
}

/// Executes one run with options, returning the full report.
pub fn run_report(
    config: &SimulationConfig,
    options: RunOptions<'_>,
) -> Result<RunReport, EngineError> {
    config.validate()?;
    let mut no_trace = NoTrace;
    let trace = match options.trace {
        Some(t) => t,
        None => &mut no_trace,
    };

    let mut placement_rng = streams::derive(config.seed, Stream::Placement);
    let mut kinematics = mobility::init_placement(config, &mut placement_rng);
    if let Some(positions) = options.placement {
        if positions.len() != kinematics.len() {
            return Err(EngineError::PlacementSize {
                got: positions.len(),
                expected: kinematics.len(),
            });
        }
        if let Some(index) = positions.iter().position(|&p| !config.area.contains(p)) {
            return Err(EngineError::PlacementOutsideArena { index });
        }
        for (k, p) in kinematics.iter_mut().zip(positions) {
            k.position = p;
        }
    }
    trace.placement(&kinematics);

    let states = config
        .all_nodes()
        .map(|n| NodeProtocolState::for_role(config.role(n)))
        .collect();

    let run = Run {
        config,
        run_length_ms: config.run_length_ms(),
        clock: 0,
        kinematics,
        table: LinkStateTable::new(config.nodes),
        states,
        queue: BinaryHeap::new(),
        next_tie: 0,
        mobility_rng: streams::derive(config.seed, Stream::Mobility),
        link_rng: streams::derive(config.seed, Stream::Link),
        counters: RawCounters::default(),
        deliveries_in_flight: 0,
        warned_overlap: false,
        trace,
    };
    run.execute()
}

struct Run<'a> {
    config: &'a SimulationConfig,
    run_length_ms: TimeMs,
    clock: TimeMs,
    kinematics: Vec<Kinematics>,
    table: LinkStateTable,
    states: Vec<NodeProtocolState>,
    queue: BinaryHeap<QueuedEvent>,
    next_tie: u64,
    mobility_rng: ChaCha12Rng,
    link_rng: ChaCha12Rng,
    counters: RawCounters,
    deliveries_in_flight: u64,
    warned_overlap: bool,
    trace: &'a mut dyn Trace,
}

impl Run<'_> {
    fn execute(mut self) -> Result<RunReport, EngineError> {
        self.schedule(0, EventKind::LinkRefresh);
        self.schedule(0, EventKind::RequestGen { seq: 1 });
        if self.config.step_interval_ms <= self.run_length_ms {
            self.schedule(self.config.step_interval_ms, EventKind::MobilityStep);
        }

        while let Some(event) = self.queue.pop() {
            if event.time < self.clock {
                return Err(EngineError::Causality {
                    event_ms: event.time,
                    clock_ms: self.clock,
                });
            }
            self.clock = event.time;
            self.trace.event(event.time, event.tie, &event.kind);
            match event.kind {
                EventKind::MobilityStep => self.mobility_step(),
                EventKind::LinkRefresh => self.link_refresh(),
                EventKind::RequestGen { seq } => self.generate_request(seq),
                EventKind::Delivery { packet, receiver } => self.deliver(packet, receiver)?,
            }
            self.trace.counters(self.clock, &self.counters);
        }

        let source_index = self.config.source().index() as usize - 1;
        let NodeProtocolState::Source { ledger } = &self.states[source_index] else {
            unreachable!("node N is always the source");
        };
        Ok(RunReport {
            metrics: metrics::finalize(&self.counters, ledger),
            requests: ledger.iter().map(|(s, o)| (*s, o.clone())).collect(),
        })
    }

    fn schedule(&mut self, time: TimeMs, kind: EventKind) {
        debug_assert!(time >= self.clock);
        self.queue.push(QueuedEvent {
            time,
            priority: kind.priority(),
            tie: self.next_tie,
            kind,
        });
        self.next_tie += 1;
    }

    fn mobility_step(&mut self) {
        for k in &mut self.kinematics {
            mobility::step(k, self.config, &mut self.mobility_rng);
        }
        self.trace.mobility_step(self.clock, &self.kinematics);
        let next = self.clock + self.config.step_interval_ms;
        if next <= self.run_length_ms {
            self.schedule(next, EventKind::MobilityStep);
        }
    }

    fn link_refresh(&mut self) {
        self.table.refresh(self.config, self.clock, &mut self.link_rng);
        self.trace.link_refresh(self.clock, &self.table);
        let next = self.clock + self.config.link_check_interval_ms;
        if next <= self.run_length_ms {
            self.schedule(next, EventKind::LinkRefresh);
        }
    }

    fn generate_request(&mut self, seq: Seq) {
        if self.deliveries_in_flight > 0 {
            // The request interval is meant to let each flood finish before
            // the next request leaves the source.
            self.counters.count_overlap_warning();
            if !self.warned_overlap {
                log::warn!(
                    "request {seq} generated while {} deliveries from earlier requests \
                     are still in flight",
                    self.deliveries_in_flight
                );
                self.warned_overlap = true;
            }
        }
        let source = self.config.source();
        let now = self.clock;
        let packet = protocol::generate_request(
            &mut self.states[state_index(source)],
            seq,
            now,
            self.config,
        );
        self.counters.count_request_sent();
        self.trace.packet(
            self.clock,
            PacketEvent::Generated,
            source,
            &Packet::Request(packet.clone()),
        );
        self.broadcast(source, packet);
        if seq < self.config.requests {
            let next = self.clock + self.config.request_interval_ms;
            self.schedule(next, EventKind::RequestGen { seq: seq + 1 });
        }
    }

    fn deliver(&mut self, packet: Packet, receiver: NodeId) -> Result<(), EngineError> {
        self.deliveries_in_flight -= 1;
        self.trace
            .packet(self.clock, PacketEvent::Delivered, receiver, &packet);
        let now = self.clock;
        let state = &mut self.states[state_index(receiver)];
        let action = match &packet {
            Packet::Request(request) => protocol::on_request(receiver, request, state),
            Packet::Reply(reply) => protocol::on_reply(receiver, reply, state, now)?,
        };
        match action {
            Some(Action::Broadcast(out)) => {
                self.counters.count_request_rebroadcast();
                self.broadcast(receiver, out);
            }
            Some(Action::Unicast { to, reply }) => {
                self.counters.count_reply_transmission();
                self.unicast(receiver, to, reply);
            }
            None => {}
        }
        Ok(())
    }

    /// One transmission, any number of deliveries: every node for which the
    /// delivery predicate holds right now gets a copy one hop delay later.
    fn broadcast(&mut self, sender: NodeId, packet: RequestPacket) {
        self.trace.packet(
            self.clock,
            PacketEvent::Transmitted,
            sender,
            &Packet::Request(packet.clone()),
        );
        let deliver_at = self.clock + self.config.hop_delay_ms;
        for node in self.config.all_nodes() {
            if node == sender {
                continue;
            }
            if link::can_deliver(sender, node, &self.kinematics, &self.table, self.config) {
                self.deliveries_in_flight += 1;
                self.schedule(
                    deliver_at,
                    EventKind::Delivery {
                        packet: Packet::Request(packet.clone()),
                        receiver: node,
                    },
                );
            }
        }
    }

    /// One transmission toward the next route hop. If the link does not
    /// deliver, the reply dies here; the transmission still happened.
    fn unicast(&mut self, sender: NodeId, to: NodeId, mut reply: ReplyPacket) {
        reply.hop_count += 1;
        self.trace.packet(
            self.clock,
            PacketEvent::Transmitted,
            sender,
            &Packet::Reply(reply.clone()),
        );
        if link::can_deliver(sender, to, &self.kinematics, &self.table, self.config) {
            self.deliveries_in_flight += 1;
            self.schedule(
                self.clock + self.config.hop_delay_ms,
                EventKind::Delivery {
                    packet: Packet::Reply(reply),
                    receiver: to,
                },
            );
        }
    }

}

fn state_index(node: NodeId) -> usize {
    node.index() as usize - 1
}
