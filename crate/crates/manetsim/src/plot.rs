//! Metric-versus-radius line charts rendered as self-contained SVG text
//! from an aggregate CSV.

use thiserror::Error;

use crate::sweep::AGGREGATE_CSV_HEADER;

/// The five plottable metrics (their per-cell means).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    ResponseRatio,
    AvgHops,
    RelativeTraffic,
    AvgResponseTimeMs,
    DuplicateRatio,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::ResponseRatio,
        Metric::AvgHops,
        Metric::RelativeTraffic,
        Metric::AvgResponseTimeMs,
        Metric::DuplicateRatio,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::ResponseRatio => "response_ratio",
            Metric::AvgHops => "avg_hops",
            Metric::RelativeTraffic => "relative_traffic",
            Metric::AvgResponseTimeMs => "avg_response_time_ms",
            Metric::DuplicateRatio => "duplicate_ratio",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, PlotError> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| PlotError::UnknownMetric {
                given: name.to_string(),
                valid: valid_names(Metric::ALL.iter().map(|m| m.name())),
            })
    }

    fn mean_of(self, row: &AggregateRow) -> Option<f64> {
        match self {
            Metric::ResponseRatio => row.response_ratio_mean,
            Metric::AvgHops => row.avg_hops_mean,
            Metric::RelativeTraffic => row.relative_traffic_mean,
            Metric::AvgResponseTimeMs => row.avg_response_time_ms_mean,
            Metric::DuplicateRatio => row.duplicate_ratio_mean,
        }
    }
}

/// Which sweep dimension labels the polylines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKey {
    VmaxKmh,
    LinkAvailability,
    Ttl,
}

impl GroupKey {
    pub const ALL: [GroupKey; 3] = [GroupKey::VmaxKmh, GroupKey::LinkAvailability, GroupKey::Ttl];

    pub fn name(self) -> &'static str {
        match self {
            GroupKey::VmaxKmh => "vmax_kmh",
            GroupKey::LinkAvailability => "link_availability",
            GroupKey::Ttl => "ttl",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, PlotError> {
        GroupKey::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| PlotError::UnknownGroup {
                given: name.to_string(),
                valid: valid_names(GroupKey::ALL.iter().map(|k| k.name())),
            })
    }

    fn value_of(self, row: &AggregateRow) -> f64 {
        match self {
            GroupKey::VmaxKmh => row.vmax_kmh,
            GroupKey::LinkAvailability => row.link_availability,
            GroupKey::Ttl => row.ttl as f64,
        }
    }
}

/// One parsed aggregate-CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub radius_m: f64,
    pub ttl: u32,
    pub link_availability: f64,
    pub vmax_kmh: f64,
    pub p_change: f64,
    pub seeds: u32,
    pub response_ratio_mean: Option<f64>,
    pub avg_hops_mean: Option<f64>,
    pub relative_traffic_mean: Option<f64>,
    pub avg_response_time_ms_mean: Option<f64>,
    pub duplicate_ratio_mean: Option<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum PlotError {
    #[error("unknown metric `{given}`; valid metrics: {valid}")]
    UnknownMetric { given: String, valid: String },
    #[error("unknown group key `{given}`; valid keys: {valid}")]
    UnknownGroup { given: String, valid: String },
    #[error("unknown filter key `{given}`; valid keys: {valid}")]
    UnknownFilter { given: String, valid: String },
    #[error("bad filter `{0}`; expected `key=value`")]
    BadFilter(String),
    #[error("aggregate CSV line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("aggregate CSV holds no data rows")]
    Empty,
    #[error("no rows left after applying the filters")]
    NoData,
    #[error(
        "`{key}` varies across the selected rows ({values}); group by it or pin it with a filter"
    )]
    Ambiguous { key: String, values: String },
}

fn valid_names<'a>(names: impl Iterator<Item = &'a str>) -> String {
    names.collect::<Vec<_>>().join(", ")
}

/// Parses an aggregate CSV produced by the sweep harness. The header must
/// match exactly; absent averages stay absent.
pub fn parse_aggregate_csv(text: &str) -> Result<Vec<AggregateRow>, PlotError> {
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(PlotError::Empty);
    };
    if header.trim_end() != AGGREGATE_CSV_HEADER {
        return Err(PlotError::Parse {
            line: 1,
            msg: "unrecognized header".into(),
        });
    }

    let mut rows = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 16 {
            return Err(PlotError::Parse {
                line,
                msg: format!("expected 16 fields, got {}", fields.len()),
            });
        }
        let req = |i: usize| -> Result<f64, PlotError> {
            let v: f64 = fields[i].parse().map_err(|_| PlotError::Parse {
                line,
                msg: format!("bad number `{}`", fields[i]),
            })?;
            if !v.is_finite() {
                return Err(PlotError::Parse {
                    line,
                    msg: format!("non-finite number `{}`", fields[i]),
                });
            }
            Ok(v)
        };
        let opt = |i: usize| -> Result<Option<f64>, PlotError> {
            if fields[i].is_empty() {
                Ok(None)
            } else {
                req(i).map(Some)
            }
        };
        rows.push(AggregateRow {
            radius_m: req(0)?,
            ttl: fields[1].parse().map_err(|_| PlotError::Parse {
                line,
                msg: format!("bad ttl `{}`", fields[1]),
            })?,
            link_availability: req(2)?,
            vmax_kmh: req(3)?,
            p_change: req(4)?,
            seeds: fields[5].parse().map_err(|_| PlotError::Parse {
                line,
                msg: format!("bad seed count `{}`", fields[5]),
            })?,
            response_ratio_mean: opt(6)?,
            avg_hops_mean: opt(8)?,
            relative_traffic_mean: opt(10)?,
            avg_response_time_ms_mean: opt(12)?,
            duplicate_ratio_mean: opt(14)?,
        });
    }
    if rows.is_empty() {
        return Err(PlotError::Empty);
    }
    Ok(rows)
}

/// A `key=value` row filter, e.g. pinning `ttl=4` before grouping by
/// availability.
#[derive(Debug, Clone, PartialEq)]
pub struct Filter {
    key: FilterKey,
    value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FilterKey {
    Ttl,
    LinkAvailability,
    VmaxKmh,
    PChange,
}

const FILTER_KEYS: [(&str, FilterKey); 4] = [
    ("ttl", FilterKey::Ttl),
    ("link_availability", FilterKey::LinkAvailability),
    ("vmax_kmh", FilterKey::VmaxKmh),
    ("p_change", FilterKey::PChange),
];

impl Filter {
    pub fn parse(text: &str) -> Result<Self, PlotError> {
        let Some((key, value)) = text.split_once('=') else {
            return Err(PlotError::BadFilter(text.to_string()));
        };
        let key = key.trim();
        let filter_key = FILTER_KEYS
            .iter()
            .find(|(name, _)| *name == key)
            .map(|(_, k)| *k)
            .ok_or_else(|| PlotError::UnknownFilter {
                given: key.to_string(),
                valid: valid_names(FILTER_KEYS.iter().map(|(n, _)| *n)),
            })?;
        let value: f64 = value.trim().parse().map_err(|_| {
            PlotError::BadFilter(text.to_string())
        })?;
        Ok(Filter {
            key: filter_key,
            value,
        })
    }

    fn matches(&self, row: &AggregateRow) -> bool {
        let v = match self.key {
            FilterKey::Ttl => row.ttl as f64,
            FilterKey::LinkAvailability => row.link_availability,
            FilterKey::VmaxKmh => row.vmax_kmh,
            FilterKey::PChange => row.p_change,
        };
        v == self.value
    }
}

/// Renders one metric-versus-radius chart: one polyline per group value,
/// axes, ticks, and a legend. Returns the SVG document.
pub fn render_line_chart(
    rows: &[AggregateRow],
    metric: Metric,
    group: GroupKey,
    filters: &[Filter],
) -> Result<String, PlotError> {
    let rows: Vec<&AggregateRow> = rows
        .iter()
        .filter(|r| filters.iter().all(|f| f.matches(r)))
        .collect();
    if rows.is_empty() {
        return Err(PlotError::NoData);
    }

    // Everything that is neither the x axis nor the grouping must be pinned
    // down, or the chart would silently mix cells.
    for (name, get) in [
        ("ttl", (|r: &AggregateRow| r.ttl as f64) as fn(&AggregateRow) -> f64),
        ("link_availability", |r| r.link_availability),
        ("vmax_kmh", |r| r.vmax_kmh),
        ("p_change", |r| r.p_change),
    ] {
        if name == group.name() {
            continue;
        }
        let mut values: Vec<f64> = rows.iter().map(|r| get(r)).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        if values.len() > 1 {
            return Err(PlotError::Ambiguous {
                key: name.to_string(),
                values: values
                    .iter()
                    .map(f64::to_string)
                    .collect::<Vec<_>>()
                    .join(", "),
            });
        }
    }

    let mut group_values: Vec<f64> = rows.iter().map(|r| group.value_of(r)).collect();
    group_values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    group_values.dedup();

    let mut series: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
    for &g in &group_values {
        let mut points: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| group.value_of(r) == g)
            .filter_map(|r| metric.mean_of(r).map(|m| (r.radius_m, m)))
            .collect();
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if !points.is_empty() {
            series.push((g, points));
        }
    }
    if series.is_empty() {
        return Err(PlotError::NoData);
    }

    Ok(Chart {
        metric,
        group,
        series,
    }
    .render())
}

const PALETTE: [&str; 7] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
];

struct Chart {
    metric: Metric,
    group: GroupKey,
    series: Vec<(f64, Vec<(f64, f64)>)>,
}

impl Chart {
    fn render(&self) -> String {
        const WIDTH: f64 = 760.0;
        const HEIGHT: f64 = 480.0;
        const LEFT: f64 = 80.0;
        const RIGHT: f64 = 180.0;
        const TOP: f64 = 40.0;
        const BOTTOM: f64 = 64.0;
        let plot_w = WIDTH - LEFT - RIGHT;
        let plot_h = HEIGHT - TOP - BOTTOM;

        let mut radii: Vec<f64> = self
            .series
            .iter()
            .flat_map(|(_, pts)| pts.iter().map(|p| p.0))
            .collect();
        radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
        radii.dedup();
        let (x_min, x_max) = match (radii.first(), radii.last()) {
            (Some(&lo), Some(&hi)) if lo < hi => (lo, hi),
            (Some(&lo), _) => (lo - 1.0, lo + 1.0),
            _ => (0.0, 1.0),
        };
        let y_data_max = self
            .series
            .iter()
            .flat_map(|(_, pts)| pts.iter().map(|p| p.1))
            .fold(0.0f64, f64::max);
        let y_max = nice_ceiling(y_data_max);

        let x = |v: f64| LEFT + (v - x_min) / (x_max - x_min) * plot_w;
        let y = |v: f64| TOP + plot_h - v / y_max * plot_h;

        let mut svg = String::new();
        svg.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
             font-family=\"sans-serif\" font-size=\"13\">\n"
        ));
        svg.push_str(&format!(
            "  <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
        ));

        // Axes.
        svg.push_str(&format!(
            "  <line x1=\"{LEFT}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
            TOP + plot_h,
            LEFT + plot_w,
            TOP + plot_h
        ));
        svg.push_str(&format!(
            "  <line x1=\"{LEFT}\" y1=\"{TOP}\" x2=\"{LEFT}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
            TOP + plot_h
        ));

        // X ticks at each swept radius.
        for &r in &radii {
            let xi = x(r);
            svg.push_str(&format!(
                "  <line x1=\"{xi:.2}\" y1=\"{:.2}\" x2=\"{xi:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
                TOP + plot_h,
                TOP + plot_h + 5.0
            ));
            svg.push_str(&format!(
                "  <text x=\"{xi:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{r}</text>\n",
                TOP + plot_h + 20.0
            ));
        }

        // Y ticks with light grid lines.
        let ticks = 5;
        for i in 0..=ticks {
            let v = y_max * i as f64 / ticks as f64;
            let yi = y(v);
            svg.push_str(&format!(
                "  <line x1=\"{LEFT}\" y1=\"{yi:.2}\" x2=\"{:.2}\" y2=\"{yi:.2}\" \
                 stroke=\"#dddddd\"/>\n",
                LEFT + plot_w
            ));
            svg.push_str(&format!(
                "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
                LEFT - 8.0,
                yi + 4.0,
                format_tick(v)
            ));
        }

        // Axis labels.
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">transmission radius (m)</text>\n",
            LEFT + plot_w / 2.0,
            HEIGHT - 18.0
        ));
        svg.push_str(&format!(
            "  <text x=\"20\" y=\"{:.2}\" text-anchor=\"middle\" \
             transform=\"rotate(-90 20 {:.2})\">{}</text>\n",
            TOP + plot_h / 2.0,
            TOP + plot_h / 2.0,
            self.metric.name()
        ));

        // One polyline with markers per group value, plus its legend entry.
        for (i, (value, points)) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let coords: Vec<String> = points
                .iter()
                .map(|&(r, m)| format!("{:.2},{:.2}", x(r), y(m)))
                .collect();
            svg.push_str(&format!(
                "  <polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
                coords.join(" ")
            ));
            for &(r, m) in points {
                svg.push_str(&format!(
                    "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                    x(r),
                    y(m)
                ));
            }
            let ly = TOP + 10.0 + i as f64 * 22.0;
            svg.push_str(&format!(
                "  <line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" \
                 stroke=\"{color}\" stroke-width=\"2\"/>\n",
                LEFT + plot_w + 16.0,
                LEFT + plot_w + 44.0
            ));
            svg.push_str(&format!(
                "  <text x=\"{:.2}\" y=\"{:.2}\">{} = {}</text>\n",
                LEFT + plot_w + 50.0,
                ly + 4.0,
                self.group.name(),
                value
            ));
        }

        svg.push_str("</svg>\n");
        svg
    }
}

/// Smallest "nice" value (1, 2, or 5 times a power of ten) at or above the
/// data maximum; 1.0 when the data is all zero.
fn nice_ceiling(v: f64) -> f64 {
    if v <= 0.0 {
        return 1.0;
    }
    let magnitude = 10f64.powf(v.log10().floor());
    for factor in [1.0, 2.0, 5.0, 10.0] {
        if v <= factor * magnitude {
            return factor * magnitude;
        }
    }
    10.0 * magnitude
}

fn format_tick(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e6 {
        format!("{}", v as i64)
    } else {
        format!("{v:.3}")
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimulationConfig;
    use crate::sweep::{sweep, SeedSpec, SweepSpec};

    fn sample_aggregate() -> String {
        let base = SimulationConfig {
            nodes: 12,
            servers: 2,
            requests: 8,
            ..SimulationConfig::default()
        };
        let spec = SweepSpec {
            radii_m: vec![30.0, 120.0, 210.0],
            ttls: vec![4, 7],
            availabilities: vec![0.7],
            vmax_kmh: vec![5.0],
            direction_change_p: 0.0,
            seeds: SeedSpec::Count(2),
            requests: None,
        };
        sweep(&spec, &base, Some(2)).unwrap().aggregate_csv
    }

    #[test]
    fn renders_one_polyline_per_group_value() {
        let rows = parse_aggregate_csv(&sample_aggregate()).unwrap();
        let svg = render_line_chart(&rows, Metric::ResponseRatio, GroupKey::Ttl, &[]).unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("ttl = 4"));
        assert!(svg.contains("ttl = 7"));
        assert!(svg.contains("transmission radius (m)"));
        assert!(svg.contains("response_ratio"));
    }

    #[test]
    fn mixing_unpinned_dimensions_is_rejected() {
        let rows = parse_aggregate_csv(&sample_aggregate()).unwrap();
        let err =
            render_line_chart(&rows, Metric::ResponseRatio, GroupKey::LinkAvailability, &[])
                .unwrap_err();
        assert!(matches!(err, PlotError::Ambiguous { ref key, .. } if key == "ttl"));

        let filter = Filter::parse("ttl=4").unwrap();
        let svg = render_line_chart(
            &rows,
            Metric::RelativeTraffic,
            GroupKey::LinkAvailability,
            &[filter],
        )
        .unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
    }

    #[test]
    fn unknown_names_list_the_valid_ones() {
        let err = Metric::from_name("latency").unwrap_err();
        assert!(matches!(err, PlotError::UnknownMetric { ref valid, .. }
            if valid.contains("response_ratio") && valid.contains("duplicate_ratio")));
        let err = GroupKey::from_name("speed").unwrap_err();
        assert!(matches!(err, PlotError::UnknownGroup { ref valid, .. }
            if valid.contains("vmax_kmh")));
        let err = Filter::parse("radius_m=30").unwrap_err();
        assert!(matches!(err, PlotError::UnknownFilter { .. }));
    }

    #[test]
    fn empty_and_malformed_inputs_are_usage_errors() {
        assert_eq!(parse_aggregate_csv(""), Err(PlotError::Empty));
        let header_only = format!("{}\n", crate::sweep::AGGREGATE_CSV_HEADER);
        assert_eq!(parse_aggregate_csv(&header_only), Err(PlotError::Empty));
        assert!(matches!(
            parse_aggregate_csv("radius,whatever\n1,2\n"),
            Err(PlotError::Parse { line: 1, .. })
        ));
        let bad_row = format!("{}\n1,2,3\n", crate::sweep::AGGREGATE_CSV_HEADER);
        assert!(matches!(
            parse_aggregate_csv(&bad_row),
            Err(PlotError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn nice_ceiling_snaps_to_round_values() {
        assert_eq!(nice_ceiling(0.0), 1.0);
        assert_eq!(nice_ceiling(0.83), 1.0);
        assert_eq!(nice_ceiling(1.2), 2.0);
        assert_eq!(nice_ceiling(3.7), 5.0);
        assert_eq!(nice_ceiling(49.0), 50.0);
        assert_eq!(nice_ceiling(75.0), 100.0);
    }
}
