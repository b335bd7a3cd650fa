//! Arena geometry, units, the simulation parameter set, and parameter-file
//! parsing and validation.
//!
//! Internal units are meters and milliseconds everywhere. The parameter file
//! accepts node speed in km/h and converts on access; the stored km/h value
//! stays canonical so that parse → serialize → parse is exact.

use std::fmt;

use thiserror::Error;

/// Simulation time in milliseconds.
pub type TimeMs = u64;

/// A point inside the arena, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Euclidean distance between two positions, meters.
///
/// The radio coverage is isotropic, so this is the only notion of distance
/// the model needs.
pub fn distance(a: Position, b: Position) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    (dx * dx + dy * dy).sqrt()
}

/// Converts a speed given in km/h to internal meters per millisecond.
pub fn kmh_to_meters_per_ms(speed_kmh: f64) -> f64 {
    speed_kmh * 1000.0 / 3_600_000.0
}

/// Rectangular arena bounds, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl AreaConfig {
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn contains(&self, p: Position) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }
}

impl Default for AreaConfig {
    fn default() -> Self {
        Self {
            x_min: 0.0,
            x_max: 500.0,
            y_min: 0.0,
            y_max: 500.0,
        }
    }
}

/// Node identifier. Indices are 1-based: nodes `1..=servers` are anycast
/// servers, `servers+1..=N-1` are simple intermediate nodes, and node `N` is
/// the single request source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub fn new(index: u32) -> Self {
        NodeId(index)
    }

    pub fn index(self) -> u32 {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Protocol role of a node, derivable from its index alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Server,
    Intermediate,
    Source,
}

/// Every tunable of a single simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub area: AreaConfig,
    /// Total number of nodes N.
    pub nodes: u32,
    /// Number of anycast servers m; must satisfy m < N - m.
    pub servers: u32,
    /// Total number of requests the source generates.
    pub requests: u32,
    /// Interval between request generations, ms.
    pub request_interval_ms: TimeMs,
    /// Hop budget carried by each request.
    pub ttl: u32,
    /// Probability that a directed link is up during a link-state epoch,
    /// strictly inside (0, 1).
    pub link_availability: f64,
    /// Maximal transmission distance R, meters.
    pub radius_m: f64,
    /// Maximal node speed as entered, km/h. Use [`SimulationConfig::v_max`]
    /// for the internal value.
    pub vmax_kmh: f64,
    /// Probability of changing direction at the end of a mobility step.
    pub direction_change_p: f64,
    /// Mobility step interval tau, ms.
    pub step_interval_ms: TimeMs,
    /// Interval at which all directed link states are re-drawn, ms.
    pub link_check_interval_ms: TimeMs,
    /// Per-transmission delivery latency, ms.
    pub hop_delay_ms: TimeMs,
    /// Extra time after the last request to let in-flight packets clear, ms.
    /// Not a parameter-file key.
    pub clearance_margin_ms: TimeMs,
    /// Master seed; placement, mobility, and link streams are derived from it.
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            area: AreaConfig::default(),
            nodes: 50,
            servers: 5,
            requests: 2000,
            request_interval_ms: 500,
            ttl: 7,
            link_availability: 0.7,
            radius_m: 120.0,
            vmax_kmh: 5.0,
            direction_change_p: 0.0,
            step_interval_ms: 100,
            link_check_interval_ms: 2000,
            hop_delay_ms: 10,
            clearance_margin_ms: 1000,
            seed: 42,
        }
    }
}

impl SimulationConfig {
    /// Maximal node speed in meters per millisecond.
    pub fn v_max(&self) -> f64 {
        kmh_to_meters_per_ms(self.vmax_kmh)
    }

    /// Run length: requests * interval plus the clearance margin.
    pub fn run_length_ms(&self) -> TimeMs {
        self.requests as TimeMs * self.request_interval_ms + self.clearance_margin_ms
    }

    /// The single request source, node N.
    pub fn source(&self) -> NodeId {
        NodeId(self.nodes)
    }

    pub fn role(&self, node: NodeId) -> Role {
        if node.0 == self.nodes {
            Role::Source
        } else if node.0 <= self.servers {
            Role::Server
        } else {
            Role::Intermediate
        }
    }

    pub fn all_nodes(&self) -> impl Iterator<Item = NodeId> {
        (1..=self.nodes).map(NodeId)
    }

    /// Checks every field invariant, naming the violated one on failure.
    pub fn validate(&self) -> Result<(), ConfigError> {
        fn constraint(cond: bool, msg: impl FnOnce() -> String) -> Result<(), ConfigError> {
            if cond {
                Ok(())
            } else {
                Err(ConfigError::Constraint(msg()))
            }
        }

        let finite = [
            ("area_x_min", self.area.x_min),
            ("area_x_max", self.area.x_max),
            ("area_y_min", self.area.y_min),
            ("area_y_max", self.area.y_max),
            ("link_availability", self.link_availability),
            ("radius_m", self.radius_m),
            ("vmax_kmh", self.vmax_kmh),
            ("direction_change_p", self.direction_change_p),
        ];
        for (name, value) in finite {
            constraint(value.is_finite(), || format!("{name} must be finite (got {value})"))?;
        }

        constraint(self.area.x_min < self.area.x_max, || {
            format!(
                "x_min < x_max (x_min = {}, x_max = {})",
                self.area.x_min, self.area.x_max
            )
        })?;
        constraint(self.area.y_min < self.area.y_max, || {
            format!(
                "y_min < y_max (y_min = {}, y_max = {})",
                self.area.y_min, self.area.y_max
            )
        })?;
        constraint(self.nodes >= 1, || "N >= 1 (need at least the source node)".to_string())?;
        constraint((self.servers as u64) * 2 < self.nodes as u64, || {
            format!("m < N - m (m = {}, N = {})", self.servers, self.nodes)
        })?;
        constraint(self.requests >= 1, || format!("Ns >= 1 (Ns = {})", self.requests))?;
        constraint(self.ttl >= 1, || format!("ttl >= 1 (ttl = {})", self.ttl))?;
        constraint(
            self.link_availability > 0.0 && self.link_availability < 1.0,
            || format!("0 < l < 1 (l = {})", self.link_availability),
        )?;
        constraint(self.radius_m >= 0.0, || format!("R >= 0 (R = {})", self.radius_m))?;
        constraint(self.vmax_kmh >= 0.0, || {
            format!("v_max >= 0 (vmax_kmh = {})", self.vmax_kmh)
        })?;
        constraint(
            (0.0..=1.0).contains(&self.direction_change_p),
            || format!("0 <= p <= 1 (p = {})", self.direction_change_p),
        )?;
        constraint(self.request_interval_ms >= 1, || {
            "request_interval_ms >= 1".to_string()
        })?;
        constraint(self.step_interval_ms >= 1, || "step_interval_ms >= 1".to_string())?;
        constraint(self.link_check_interval_ms >= 1, || {
            "link_check_interval_ms >= 1".to_string()
        })?;
        Ok(())
    }

    /// Parses the `key = value` parameter-file format. Omitted keys take
    /// their defaults; unknown and duplicate keys are rejected.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = SimulationConfig::default();
        let mut seen = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                msg: format!("expected `key = value`, got `{content}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if value.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    msg: format!("missing value for `{key}`"),
                });
            }
            if seen.contains(&key.to_string()) {
                return Err(ConfigError::DuplicateKey {
                    line,
                    key: key.to_string(),
                });
            }
            seen.push(key.to_string());

            fn num<T: std::str::FromStr>(
                line: usize,
                key: &str,
                value: &str,
            ) -> Result<T, ConfigError>
            where
                T::Err: fmt::Display,
            {
                value.parse().map_err(|e| ConfigError::InvalidValue {
                    line,
                    key: key.to_string(),
                    msg: format!("`{value}`: {e}"),
                })
            }

            match key {
                "area_x_min" => cfg.area.x_min = num(line, key, value)?,
                "area_x_max" => cfg.area.x_max = num(line, key, value)?,
                "area_y_min" => cfg.area.y_min = num(line, key, value)?,
                "area_y_max" => cfg.area.y_max = num(line, key, value)?,
                "nodes" => cfg.nodes = num(line, key, value)?,
                "servers" => cfg.servers = num(line, key, value)?,
                "requests" => cfg.requests = num(line, key, value)?,
                "request_interval_ms" => cfg.request_interval_ms = num(line, key, value)?,
                "ttl" => cfg.ttl = num(line, key, value)?,
                "link_availability" => cfg.link_availability = num(line, key, value)?,
                "radius_m" => cfg.radius_m = num(line, key, value)?,
                "vmax_kmh" => cfg.vmax_kmh = num(line, key, value)?,
                "direction_change_p" => cfg.direction_change_p = num(line, key, value)?,
                "step_interval_ms" => cfg.step_interval_ms = num(line, key, value)?,
                "link_check_interval_ms" => cfg.link_check_interval_ms = num(line, key, value)?,
                "hop_delay_ms" => cfg.hop_delay_ms = num(line, key, value)?,
                "seed" => cfg.seed = num(line, key, value)?,
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: key.to_string(),
                    })
                }
            }
        }

        cfg.validate()?;
        Ok(cfg)
    }

    /// Renders the config back into the parameter-file format, all keys in
    /// canonical order.
    pub fn to_parameter_file(&self) -> String {
        let mut out = String::new();
        let mut push = |key: &str, value: String| {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&value);
            out.push('\n');
        };
        push("area_x_min", self.area.x_min.to_string());
        push("area_x_max", self.area.x_max.to_string());
        push("area_y_min", self.area.y_min.to_string());
        push("area_y_max", self.area.y_max.to_string());
        push("nodes", self.nodes.to_string());
        push("servers", self.servers.to_string());
        push("requests", self.requests.to_string());
        push("request_interval_ms", self.request_interval_ms.to_string());
        push("ttl", self.ttl.to_string());
        push("link_availability", self.link_availability.to_string());
        push("radius_m", self.radius_m.to_string());
        push("vmax_kmh", self.vmax_kmh.to_string());
        push("direction_change_p", self.direction_change_p.to_string());
        push("step_interval_ms", self.step_interval_ms.to_string());
        push("link_check_interval_ms", self.link_check_interval_ms.to_string());
        push("hop_delay_ms", self.hop_delay_ms.to_string());
        push("seed", self.seed.to_string());
        out
    }
}

/// Parameter-file and validation errors.
#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: invalid value for `{key}`: {msg}")]
    InvalidValue { line: usize, key: String, msg: String },
    #[error("constraint violated: {0}")]
    Constraint(String),
}
