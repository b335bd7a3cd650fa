//! Orientation-dependent link states and the delivery predicate.
//!
//! Every ordered pair of distinct nodes carries its own link state: an
//! up/down flag drawn as Bernoulli(`link_availability`) and a per-link
//! reliable-close-distance threshold below which delivery always succeeds.
//! Both are re-drawn at every link-check epoch and are frozen in between,
//! so within one epoch delivery is a pure function of node positions.

use rand::Rng;

use crate::config::{distance, NodeId, SimulationConfig, TimeMs};
use crate::mobility::Kinematics;

/// State of one directed link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectedLinkState {
    pub up: bool,
    /// Meters; always in `[0, 10]`. The upper bound of the draw is itself
    /// uniform on `[5, 10]`, re-drawn per link per epoch.
    pub reliable_distance_m: f64,
}

/// Link states for all `N * (N - 1)` ordered pairs plus the epoch stamp of
/// the last refresh.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkStateTable {
    nodes: u32,
    states: Vec<DirectedLinkState>,
    pub epoch_start_ms: TimeMs,
}

impl LinkStateTable {
    /// A table with every link down; real state arrives with the first
    /// refresh at t = 0.
    pub fn new(nodes: u32) -> Self {
        let dead = DirectedLinkState {
            up: false,
            reliable_distance_m: 0.0,
        };
        Self {
            nodes,
            states: vec![dead; nodes as usize * nodes as usize],
            epoch_start_ms: 0,
        }
    }

    fn index(&self, from: NodeId, to: NodeId) -> usize {
        debug_assert!(from != to, "no self links");
        (from.index() as usize - 1) * self.nodes as usize + (to.index() as usize - 1)
    }

    pub fn state(&self, from: NodeId, to: NodeId) -> DirectedLinkState {
        self.states[self.index(from, to)]
    }

    #[cfg(test)]
    pub(crate) fn state_mut(&mut self, from: NodeId, to: NodeId) -> &mut DirectedLinkState {
        let idx = self.index(from, to);
        &mut self.states[idx]
    }

    /// Re-draws every directed link state. Draw order is fixed (`from`
    /// major, `to` minor; up flag, then the reliable-distance upper bound,
    /// then the threshold) so that a given link stream yields the same
    /// table regardless of anything else in the run.
    pub fn refresh<R: Rng>(&mut self, config: &SimulationConfig, now: TimeMs, rng: &mut R) {
        let l = config.link_availability;
        for from in 1..=self.nodes {
            for to in 1..=self.nodes {
                if from == to {
                    continue;
                }
                let up = rng.gen_bool(l);
                let upper = rng.gen_range(5.0..10.0);
                let reliable = rng.gen_range(0.0..upper);
                self.states[(from as usize - 1) * self.nodes as usize + (to as usize - 1)] =
                    DirectedLinkState {
                        up,
                        reliable_distance_m: reliable,
                    };
            }
        }
        self.epoch_start_ms = now;
    }

    /// Fraction of directed links currently up.
    pub fn up_fraction(&self) -> f64 {
        if self.nodes < 2 {
            return 0.0;
        }
        let up = (1..=self.nodes)
            .flat_map(|from| (1..=self.nodes).map(move |to| (from, to)))
            .filter(|&(from, to)| from != to)
            .filter(|&(from, to)| self.state(NodeId::new(from), NodeId::new(to)).up)
            .count();
        up as f64 / (self.nodes as f64 * (self.nodes as f64 - 1.0))
    }
}

/// Whether a transmission from `from` reaches `to` right now: the receiver
/// must be within the transmission radius, and the directed link must be up
/// unless the nodes are within the link's reliable close distance.
pub fn can_deliver(
    from: NodeId,
    to: NodeId,
    kinematics: &[Kinematics],
    table: &LinkStateTable,
    config: &SimulationConfig,
) -> bool {
    debug_assert!(from != to);
    let d = distance(
        kinematics[from.index() as usize - 1].position,
        kinematics[to.index() as usize - 1].position,
    );
    if d > config.radius_m {
        return false;
    }
    let link = table.state(from, to);
    d <= link.reliable_distance_m || link.up
}
