//! Observation hooks for a running simulation, plus CSV trace writers for
//! the debug dump flags.
//!
//! Every hook has an empty default body, so a trace implementation picks
//! only what it needs and a run without tracing costs nothing.

use std::io::{self, Write};

use crate::config::{NodeId, TimeMs};
use crate::engine::EventKind;
use crate::link::LinkStateTable;
use crate::metrics::RawCounters;
use crate::mobility::Kinematics;
use crate::protocol::Packet;

/// What happened to a packet at a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketEvent {
    /// The source created a fresh request.
    Generated,
    /// A node emitted the packet (broadcast or unicast).
    Transmitted,
    /// The packet was handed to a node's protocol handler.
    Delivered,
}

impl PacketEvent {
    pub fn name(self) -> &'static str {
        match self {
            PacketEvent::Generated => "gen",
            PacketEvent::Transmitted => "tx",
            PacketEvent::Delivered => "rx",
        }
    }
}

/// Hooks the engine invokes as a run executes.
pub trait Trace {
    /// Initial kinematics, before any event fires.
    fn placement(&mut self, _kinematics: &[Kinematics]) {}
    /// All nodes just advanced one mobility step.
    fn mobility_step(&mut self, _time: TimeMs, _kinematics: &[Kinematics]) {}
    /// The link table was just refreshed.
    fn link_refresh(&mut self, _time: TimeMs, _table: &LinkStateTable) {}
    /// An event was popped from the queue and is about to be processed.
    fn event(&mut self, _time: TimeMs, _tie: u64, _kind: &EventKind) {}
    /// A packet was generated, transmitted, or delivered.
    fn packet(&mut self, _time: TimeMs, _event: PacketEvent, _node: NodeId, _packet: &Packet) {}
    /// Counter snapshot after an event finished processing.
    fn counters(&mut self, _time: TimeMs, _counters: &RawCounters) {}
}

/// The default observer: sees nothing.
pub struct NoTrace;

impl Trace for NoTrace {}

/// Writes the optional debug CSV dumps. Each output is independent; absent
/// ones cost nothing.
///
/// Formats:
/// - trajectories: `time_ms,node,x,y`
/// - events: `time_ms,tie,kind,node,seq`
/// - links: `time_ms,up_fraction`
/// - packets: `time_ms,event,node,seq,kind,ttl,hops`
#[derive(Default)]
pub struct CsvTrace {
    trajectories: Option<Box<dyn Write>>,
    events: Option<Box<dyn Write>>,
    links: Option<Box<dyn Write>>,
    packets: Option<Box<dyn Write>>,
    error: Option<io::Error>,
}

impl CsvTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn trajectories_to(mut self, mut w: Box<dyn Write>) -> Self {
        self.note(writeln!(w, "time_ms,node,x,y"));
        self.trajectories = Some(w);
        self
    }

    pub fn events_to(mut self, mut w: Box<dyn Write>) -> Self {
        self.note(writeln!(w, "time_ms,tie,kind,node,seq"));
        self.events = Some(w);
        self
    }

    pub fn links_to(mut self, mut w: Box<dyn Write>) -> Self {
        self.note(writeln!(w, "time_ms,up_fraction"));
        self.links = Some(w);
        self
    }

    pub fn packets_to(mut self, mut w: Box<dyn Write>) -> Self {
        self.note(writeln!(w, "time_ms,event,node,seq,kind,ttl,hops"));
        self.packets = Some(w);
        self
    }

    /// First write error, if any output failed.
    pub fn finish(mut self) -> io::Result<()> {
        for w in [
            self.trajectories.as_mut(),
            self.events.as_mut(),
            self.links.as_mut(),
            self.packets.as_mut(),
        ]
        .into_iter()
        .flatten()
        {
            let res = w.flush();
            if self.error.is_none() {
                if let Err(e) = res {
                    self.error = Some(e);
                }
            }
        }
        match self.error {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    fn note(&mut self, result: io::Result<()>) {
        if self.error.is_none() {
            if let Err(e) = result {
                self.error = Some(e);
            }
        }
    }

    fn positions(&mut self, time: TimeMs, kinematics: &[Kinematics]) {
        if self.trajectories.is_none() {
            return;
        }
        let mut rows = String::new();
        for (i, k) in kinematics.iter().enumerate() {
            rows.push_str(&format!(
                "{time},{},{},{}\n",
                i + 1,
                k.position.x,
                k.position.y
            ));
        }
        let w = self.trajectories.as_mut().unwrap();
        let res = w.write_all(rows.as_bytes());
        self.note(res);
    }
}

impl Trace for CsvTrace {
    fn placement(&mut self, kinematics: &[Kinematics]) {
        self.positions(0, kinematics);
    }

    fn mobility_step(&mut self, time: TimeMs, kinematics: &[Kinematics]) {
        self.positions(time, kinematics);
    }

    fn link_refresh(&mut self, time: TimeMs, table: &LinkStateTable) {
        if let Some(w) = self.links.as_mut() {
            let res = writeln!(w, "{time},{}", table.up_fraction());
            self.note(res);
        }
    }

    fn event(&mut self, time: TimeMs, tie: u64, kind: &EventKind) {
        if let Some(w) = self.events.as_mut() {
            let (name, node, seq) = match kind {
                EventKind::MobilityStep => ("mobility_step", String::new(), String::new()),
                EventKind::LinkRefresh => ("link_refresh", String::new(), String::new()),
                EventKind::RequestGen { seq } => ("request_gen", String::new(), seq.to_string()),
                EventKind::Delivery { packet, receiver } => {
                    ("delivery", receiver.to_string(), packet.seq().to_string())
                }
            };
            let res = writeln!(w, "{time},{tie},{name},{node},{seq}");
            self.note(res);
        }
    }

    fn packet(&mut self, time: TimeMs, event: PacketEvent, node: NodeId, packet: &Packet) {
        if let Some(w) = self.packets.as_mut() {
            let (ttl, hops) = match packet {
                Packet::Request(r) => (r.ttl_remaining.to_string(), r.hop_count),
                Packet::Reply(r) => (String::new(), r.hop_count),
            };
            let res = writeln!(
                w,
                "{time},{},{node},{},{},{ttl},{hops}",
                event.name(),
                packet.seq(),
                packet.kind_name(),
            );
            self.note(res);
        }
    }
}
