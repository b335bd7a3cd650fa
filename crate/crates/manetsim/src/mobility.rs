//! Extended random-direction mobility.
//!
//! Nodes are placed uniformly at random, then move in straight lines at a
//! per-node constant speed, advancing once per step interval. A node that
//! crosses a border bounces back in; independently of borders, a node picks
//! a fresh direction at the end of any step with probability `p`. Setting
//! `p = 0` recovers the original random-direction model, where direction
//! changes happen only at borders.

use std::f64::consts::TAU;

use rand::Rng;

use crate::config::{Position, SimulationConfig};

/// Per-node motion state. Speed is drawn once and never changes; only the
/// heading does.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    pub position: Position,
    /// Radians in `[0, 2π)`.
    pub heading: f64,
    /// Meters per millisecond.
    pub speed: f64,
}

/// How the heading is chosen after a border bounce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BounceRule {
    /// Resample uniformly among the directions that point back into the
    /// arena (half-circle for one border, quarter-circle for a corner).
    /// This is what simulation runs use.
    UniformIntoArena,
    /// Keep the specular reflection of the incoming heading. Deterministic
    /// degenerate case of the resample, kept for tests.
    Specular,
}

/// Draws initial kinematics for all N nodes: each coordinate uniform over
/// its axis range, speed uniform on `(0, v_max)`, heading uniform on
/// `[0, 2π)`. Draw order per node is x, y, speed, heading.
pub fn init_placement<R: Rng>(config: &SimulationConfig, rng: &mut R) -> Vec<Kinematics> {
    let area = config.area;
    let v_max = config.v_max();
    (0..config.nodes)
        .map(|_| {
            let x = rng.gen_range(area.x_min..area.x_max);
            let y = rng.gen_range(area.y_min..area.y_max);
            let speed = if v_max > 0.0 { rng.gen_range(0.0..v_max) } else { 0.0 };
            let heading = rng.gen_range(0.0..TAU);
            Kinematics {
                position: Position::new(x, y),
                heading,
                speed,
            }
        })
        .collect()
}

/// Advances one node by one step using the bounce rule of real runs.
pub fn step<R: Rng>(k: &mut Kinematics, config: &SimulationConfig, rng: &mut R) {
    step_with_rule(k, config, BounceRule::UniformIntoArena, rng);
}

/// Advances one node by one step: move `speed * tau` along the heading,
/// fold any border crossing back inside, then apply the end-of-step
/// direction change with probability `p`.
pub fn step_with_rule<R: Rng>(
    k: &mut Kinematics,
    config: &SimulationConfig,
    rule: BounceRule,
    rng: &mut R,
) {
    let area = config.area;
    let dt = config.step_interval_ms as f64;
    let vx = k.heading.cos();
    let vy = k.heading.sin();
    let raw_x = k.position.x + k.speed * dt * vx;
    let raw_y = k.position.y + k.speed * dt * vy;

    let hit_x = raw_x < area.x_min || raw_x > area.x_max;
    let hit_y = raw_y < area.y_min || raw_y > area.y_max;
    let (x, flip_x) = fold(raw_x, area.x_min, area.x_max);
    let (y, flip_y) = fold(raw_y, area.y_min, area.y_max);
    k.position = Position::new(x, y);

    if hit_x || hit_y {
        let out_x = if flip_x { -vx } else { vx };
        let out_y = if flip_y { -vy } else { vy };
        k.heading = match rule {
            BounceRule::Specular => heading_of(out_x, out_y),
            BounceRule::UniformIntoArena => {
                // Constrain only the axes that actually hit a border; the
                // other component's sign is free.
                let (lo, hi) = match (hit_x.then_some(out_x > 0.0), hit_y.then_some(out_y > 0.0)) {
                    (Some(true), None) => (-0.25 * TAU, 0.25 * TAU),
                    (Some(false), None) => (0.25 * TAU, 0.75 * TAU),
                    (None, Some(true)) => (0.0, 0.5 * TAU),
                    (None, Some(false)) => (0.5 * TAU, TAU),
                    (Some(true), Some(true)) => (0.0, 0.25 * TAU),
                    (Some(false), Some(true)) => (0.25 * TAU, 0.5 * TAU),
                    (Some(false), Some(false)) => (0.5 * TAU, 0.75 * TAU),
                    (Some(true), Some(false)) => (0.75 * TAU, TAU),
                    (None, None) => unreachable!(),
                };
                rng.gen_range(lo..hi).rem_euclid(TAU)
            }
        };
    }

    if config.direction_change_p > 0.0 && rng.gen_bool(config.direction_change_p) {
        k.heading = rng.gen_range(0.0..TAU);
    }
}

/// Heading of the vector (vx, vy), normalized into `[0, 2π)`.
fn heading_of(vx: f64, vy: f64) -> f64 {
    vy.atan2(vx).rem_euclid(TAU)
}

/// Folds a coordinate back into `[lo, hi]` by repeated specular reflection
/// about the borders. Returns the folded value and whether the motion
/// direction along this axis ends up flipped (odd number of reflections).
fn fold(v: f64, lo: f64, hi: f64) -> (f64, bool) {
    if v >= lo && v <= hi {
        return (v, false);
    }
    let width = hi - lo;
    let t = (v - lo).rem_euclid(2.0 * width);
    if t <= width {
        (lo + t, false)
    } else {
        (lo + (2.0 * width - t), true)
    }
}
