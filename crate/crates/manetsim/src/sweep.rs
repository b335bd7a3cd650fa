//! Parameter sweeps: cartesian run-set expansion, multi-seed replication,
//! parallel execution, and CSV aggregation.
//!
//! Per-run seeds come from the seed spec, never from execution order, so
//! reordering or parallelizing runs cannot change a single output byte.
//! Cells share the seed list, which also means two cells differing in one
//! knob see identical placement, mobility, and link draws per seed.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, SimulationConfig};
use crate::engine::{self, EngineError};
use crate::metrics::{run_csv_row, MetricsRecord, RUN_CSV_HEADER};

/// Seeds per sweep cell: either an explicit list, or a count of consecutive
/// seeds starting at the base config's seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeedSpec {
    Count(u32),
    List(Vec<u64>),
}

impl SeedSpec {
    /// `"5"` means five derived seeds; `"3, 9, 27"` (or `"7,"`) is an
    /// explicit list.
    pub fn parse(value: &str) -> Result<Self, String> {
        if value.contains(',') {
            let seeds = value
                .split(',')
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .map(|v| {
                    v.parse()
                        .map_err(|e| format!("invalid seed `{v}`: {e}"))
                })
                .collect::<Result<Vec<u64>, String>>()?;
            if seeds.is_empty() {
                return Err("empty seed list".into());
            }
            Ok(SeedSpec::List(seeds))
        } else {
            let count: u32 = value
                .trim()
                .parse()
                .map_err(|e| format!("invalid seed count `{value}`: {e}"))?;
            if count == 0 {
                return Err("seed count must be at least 1".into());
            }
            Ok(SeedSpec::Count(count))
        }
    }

    fn resolve(&self, base: &SimulationConfig) -> Vec<u64> {
        match self {
            SeedSpec::Count(n) => (0..*n as u64).map(|i| base.seed.wrapping_add(i)).collect(),
            SeedSpec::List(seeds) => seeds.clone(),
        }
    }
}

/// The cartesian product defining a sweep's run set.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub radii_m: Vec<f64>,
    pub ttls: Vec<u32>,
    pub availabilities: Vec<f64>,
    pub vmax_kmh: Vec<f64>,
    pub direction_change_p: f64,
    pub seeds: SeedSpec,
    /// Requests per run; `None` keeps the base config's value.
    pub requests: Option<u32>,
}

/// The canonical radius sweep: 30 m to 210 m in 30 m steps.
pub const RADIUS_SWEEP_M: [f64; 7] = [30.0, 60.0, 90.0, 120.0, 150.0, 180.0, 210.0];

impl SweepSpec {
    /// Everything single-valued from the base config; the starting point
    /// for flag-driven sweeps.
    pub fn from_base(base: &SimulationConfig) -> Self {
        Self {
            radii_m: vec![base.radius_m],
            ttls: vec![base.ttl],
            availabilities: vec![base.link_availability],
            vmax_kmh: vec![base.vmax_kmh],
            direction_change_p: base.direction_change_p,
            seeds: SeedSpec::Count(5),
            requests: None,
        }
    }

    /// First experiment series: the radius sweep at three maximal speeds,
    /// l = 0.7, TTL = 7, p = 0.
    pub fn series1() -> Self {
        Self {
            radii_m: RADIUS_SWEEP_M.to_vec(),
            ttls: vec![7],
            availabilities: vec![0.7],
            vmax_kmh: vec![5.0, 30.0, 50.0],
            direction_change_p: 0.0,
            seeds: SeedSpec::Count(5),
            requests: None,
        }
    }

    /// Second experiment series: the radius sweep for TTL 4 and 7 across
    /// five link availabilities at 5 km/h.
    pub fn series2() -> Self {
        Self {
            radii_m: RADIUS_SWEEP_M.to_vec(),
            ttls: vec![4, 7],
            availabilities: vec![0.05, 0.1, 0.3, 0.5, 0.7],
            vmax_kmh: vec![5.0],
            direction_change_p: 0.0,
            seeds: SeedSpec::Count(5),
            requests: None,
        }
    }

    /// Parses the sweep-spec file format: `key = value` lines with `#`
    /// comments, list values comma-separated. Keys: `radius_m`, `ttl`,
    /// `link_availability`, `vmax_kmh`, `direction_change_p`, `seeds`,
    /// `requests`. A bare integer for `seeds` is a count; a value with
    /// commas (trailing comma allowed) is an explicit seed list.
    pub fn parse(text: &str, base: &SimulationConfig) -> Result<Self, SweepError> {
        let mut spec = SweepSpec::from_base(base);
        let mut seen = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(SweepError::Spec {
                    line,
                    msg: format!("expected `key = value`, got `{content}`"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            if seen.contains(&key.to_string()) {
                return Err(SweepError::Spec {
                    line,
                    msg: format!("duplicate key `{key}`"),
                });
            }
            seen.push(key.to_string());
            match key {
                "radius_m" => spec.radii_m = parse_list(line, key, value)?,
                "ttl" => spec.ttls = parse_list(line, key, value)?,
                "link_availability" => spec.availabilities = parse_list(line, key, value)?,
                "vmax_kmh" => spec.vmax_kmh = parse_list(line, key, value)?,
                "direction_change_p" => {
                    spec.direction_change_p = parse_scalar(line, key, value)?
                }
                "seeds" => spec.seeds = parse_seed_spec(line, value)?,
                "requests" => spec.requests = Some(parse_scalar(line, key, value)?),
                _ => {
                    return Err(SweepError::Spec {
                        line,
                        msg: format!("unknown key `{key}`"),
                    })
                }
            }
        }
        Ok(spec)
    }

    /// Expands the cartesian product into fully resolved run configs, in
    /// the canonical order: radius, TTL, availability, speed, seed.
    pub fn expand(&self, base: &SimulationConfig) -> Result<Vec<SimulationConfig>, SweepError> {
        for (name, list_empty) in [
            ("radius_m", self.radii_m.is_empty()),
            ("ttl", self.ttls.is_empty()),
            ("link_availability", self.availabilities.is_empty()),
            ("vmax_kmh", self.vmax_kmh.is_empty()),
        ] {
            if list_empty {
                return Err(SweepError::Invalid(format!("`{name}` list is empty")));
            }
        }
        let seeds = self.seeds.resolve(base);
        if seeds.is_empty() {
            return Err(SweepError::Invalid("no seeds to run".into()));
        }

        let mut configs = Vec::new();
        for &radius_m in &self.radii_m {
            for &ttl in &self.ttls {
                for &link_availability in &self.availabilities {
                    for &vmax_kmh in &self.vmax_kmh {
                        for &seed in &seeds {
                            let config = SimulationConfig {
                                radius_m,
                                ttl,
                                link_availability,
                                vmax_kmh,
                                direction_change_p: self.direction_change_p,
                                requests: self.requests.unwrap_or(base.requests),
                                seed,
                                ..base.clone()
                            };
                            config.validate()?;
                            configs.push(config);
                        }
                    }
                }
            }
        }
        Ok(configs)
    }
}

fn parse_list<T: std::str::FromStr>(
    line: usize,
    key: &str,
    value: &str,
) -> Result<Vec<T>, SweepError>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse().map_err(|e| SweepError::Spec {
                line,
                msg: format!("invalid value `{v}` for `{key}`: {e}"),
            })
        })
        .collect()
}

fn parse_scalar<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, SweepError>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e| SweepError::Spec {
        line,
        msg: format!("invalid value `{value}` for `{key}`: {e}"),
    })
}

fn parse_seed_spec(line: usize, value: &str) -> Result<SeedSpec, SweepError> {
    SeedSpec::parse(value).map_err(|msg| SweepError::Spec { line, msg })
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("sweep spec line {line}: {msg}")]
    Spec { line: usize, msg: String },
    #[error("sweep spec: {0}")]
    Invalid(String),
    #[error("invalid run configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("worker pool: {0}")]
    Workers(String),
    #[error("run failed: {source}\nreproduce with this parameter file:\n{parameter_file}")]
    Run {
        parameter_file: String,
        source: EngineError,
    },
}

/// Everything a sweep produces. Byte-identical across repeated invocations
/// of the same spec, regardless of worker count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepOutput {
    /// One row per run (`RUN_CSV_HEADER` schema), cartesian order.
    pub runs_csv: String,
    /// One row per cell: mean and sample standard deviation over seeds.
    pub aggregate_csv: String,
    pub runs: usize,
}

pub const AGGREGATE_CSV_HEADER: &str = "radius_m,ttl,link_availability,vmax_kmh,p_change,seeds,\
response_ratio_mean,response_ratio_std,avg_hops_mean,avg_hops_std,\
relative_traffic_mean,relative_traffic_std,\
avg_response_time_ms_mean,avg_response_time_ms_std,\
duplicate_ratio_mean,duplicate_ratio_std";

/// Executes every run of the sweep, optionally on a bounded worker pool,
/// returning the typed per-run records in cartesian order.
pub fn execute(
    spec: &SweepSpec,
    base: &SimulationConfig,
    workers: Option<usize>,
) -> Result<Vec<(SimulationConfig, MetricsRecord)>, SweepError> {
    let configs = spec.expand(base)?;
    let results: Vec<Result<MetricsRecord, EngineError>> = match workers {
        None => configs.par_iter().map(engine::run).collect(),
        Some(n) => {
            if n == 0 {
                return Err(SweepError::Workers("worker count must be at least 1".into()));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| SweepError::Workers(e.to_string()))?;
            pool.install(|| configs.par_iter().map(engine::run).collect())
        }
    };

    let mut records = Vec::with_capacity(results.len());
    for (config, result) in configs.into_iter().zip(results) {
        match result {
            Ok(record) => records.push((config, record)),
            Err(source) => {
                return Err(SweepError::Run {
                    parameter_file: config.to_parameter_file(),
                    source,
                })
            }
        }
    }
    Ok(records)
}

/// Runs the whole sweep and renders both CSVs.
pub fn sweep(
    spec: &SweepSpec,
    base: &SimulationConfig,
    workers: Option<usize>,
) -> Result<SweepOutput, SweepError> {
    let records = execute(spec, base, workers)?;

    let mut runs_csv = String::from(RUN_CSV_HEADER);
    runs_csv.push('\n');
    for (config, record) in &records {
        runs_csv.push_str(&run_csv_row(config, record));
        runs_csv.push('\n');
    }

    Ok(SweepOutput {
        aggregate_csv: aggregate_csv(&records),
        runs: records.len(),
        runs_csv,
    })
}

/// Groups runs into cells (same config modulo seed, in first-appearance
/// order) and emits per-cell means and sample standard deviations.
fn aggregate_csv(records: &[(SimulationConfig, MetricsRecord)]) -> String {
    type CellKey = (u64, u32, u64, u64, u64);
    let key = |c: &SimulationConfig| -> CellKey {
        (
            c.radius_m.to_bits(),
            c.ttl,
            c.link_availability.to_bits(),
            c.vmax_kmh.to_bits(),
            c.direction_change_p.to_bits(),
        )
    };

    let mut cells: Vec<(CellKey, usize, Vec<usize>)> = Vec::new();
    for (i, (config, _)) in records.iter().enumerate() {
        let k = key(config);
        match cells.iter_mut().find(|(ck, _, _)| *ck == k) {
            Some((_, _, indices)) => indices.push(i),
            None => cells.push((k, i, vec![i])),
        }
    }

    let mut out = String::from(AGGREGATE_CSV_HEADER);
    out.push('\n');
    for (_, first, indices) in &cells {
        let config = &records[*first].0;
        let stat = |values: Vec<f64>| -> String {
            if values.is_empty() {
                return ",".into();
            }
            let (mean, std) = mean_std(&values);
            format!("{mean},{std}")
        };
        let always = |f: fn(&MetricsRecord) -> f64| -> Vec<f64> {
            indices.iter().map(|&i| f(&records[i].1)).collect()
        };
        let optional = |f: fn(&MetricsRecord) -> Option<f64>| -> Vec<f64> {
            indices.iter().filter_map(|&i| f(&records[i].1)).collect()
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            config.radius_m,
            config.ttl,
            config.link_availability,
            config.vmax_kmh,
            config.direction_change_p,
            indices.len(),
            stat(always(|m| m.response_ratio)),
            stat(optional(|m| m.avg_hops)),
            stat(always(|m| m.relative_traffic)),
            stat(optional(|m| m.avg_response_time_ms)),
            stat(always(|m| m.duplicate_ratio)),
        ));
    }
    out
}

/// Mean and sample standard deviation (n - 1 denominator; 0 for n = 1).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::run_csv_row;

    fn small_base() -> SimulationConfig {
        SimulationConfig {
            nodes: 12,
            servers: 2,
            requests: 10,
            ..SimulationConfig::default()
        }
    }

    #[test]
    fn series_presets_have_the_documented_shapes() {
        let base = SimulationConfig::default();
        let s1 = SweepSpec::series1().expand(&base).unwrap();
        assert_eq!(s1.len(), 7 * 3 * 5);
        let s2 = SweepSpec::series2().expand(&base).unwrap();
        assert_eq!(s2.len(), 7 * 2 * 5 * 5);
        assert!(s2.iter().all(|c| c.vmax_kmh == 5.0 && c.direction_change_p == 0.0));
    }

    #[test]
    fn degenerate_sweep_equals_a_direct_run() {
        let base = small_base();
        let spec = SweepSpec {
            radii_m: vec![90.0],
            seeds: SeedSpec::Count(1),
            ..SweepSpec::from_base(&base)
        };
        let output = sweep(&spec, &base, Some(1)).unwrap();
        assert_eq!(output.runs, 1);

        let config = SimulationConfig {
            radius_m: 90.0,
            ..base
        };
        let direct = engine::run(&config).unwrap();
        let expected = format!("{RUN_CSV_HEADER}\n{}\n", run_csv_row(&config, &direct));
        assert_eq!(output.runs_csv, expected);
    }

    #[test]
    fn output_is_byte_identical_across_worker_counts() {
        let base = small_base();
        let spec = SweepSpec {
            radii_m: vec![60.0, 120.0],
            availabilities: vec![0.3, 0.7],
            seeds: SeedSpec::Count(3),
            ..SweepSpec::from_base(&base)
        };
        let a = sweep(&spec, &base, Some(1)).unwrap();
        let b = sweep(&spec, &base, Some(4)).unwrap();
        let c = sweep(&spec, &base, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(a.runs, 2 * 2 * 3);
        assert_eq!(a.runs_csv.lines().count(), 1 + 12);
        assert_eq!(a.aggregate_csv.lines().count(), 1 + 4);
    }

    #[test]
    fn explicit_seed_lists_are_used_verbatim() {
        let base = small_base();
        let spec = SweepSpec {
            seeds: SeedSpec::List(vec![100, 200]),
            ..SweepSpec::from_base(&base)
        };
        let configs = spec.expand(&base).unwrap();
        assert_eq!(configs.len(), 2);
        assert_eq!(configs[0].seed, 100);
        assert_eq!(configs[1].seed, 200);
    }

    #[test]
    fn spec_file_round_trips_through_the_parser() {
        let base = SimulationConfig::default();
        let text = "\
# second series, shrunk
radius_m = 30, 90, 210
ttl = 4, 7
link_availability = 0.1, 0.7
vmax_kmh = 5
direction_change_p = 0
seeds = 3
requests = 100
";
        let spec = SweepSpec::parse(text, &base).unwrap();
        assert_eq!(spec.radii_m, vec![30.0, 90.0, 210.0]);
        assert_eq!(spec.ttls, vec![4, 7]);
        assert_eq!(spec.seeds, SeedSpec::Count(3));
        assert_eq!(spec.requests, Some(100));

        let explicit = SweepSpec::parse("seeds = 5, 6, 7", &base).unwrap();
        assert_eq!(explicit.seeds, SeedSpec::List(vec![5, 6, 7]));
        let single = SweepSpec::parse("seeds = 9,", &base).unwrap();
        assert_eq!(single.seeds, SeedSpec::List(vec![9]));

        assert!(SweepSpec::parse("nope = 1", &base).is_err());
        assert!(SweepSpec::parse("ttl = x", &base).is_err());
        assert!(SweepSpec::parse("seeds = 0", &base).is_err());
    }

    #[test]
    fn invalid_cell_values_fail_before_any_run() {
        let base = small_base();
        let spec = SweepSpec {
            availabilities: vec![0.5, 1.5],
            ..SweepSpec::from_base(&base)
        };
        assert!(matches!(
            sweep(&spec, &base, Some(1)),
            Err(SweepError::Config(_))
        ));
    }

    #[test]
    fn mean_std_matches_hand_computation() {
        let (mean, std) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(mean, 2.5);
        assert!((std - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(mean_std(&[7.0]), (7.0, 0.0));
    }
}
