//! Raw per-run counters and the five derived performance metrics.

use crate::config::SimulationConfig;
use crate::protocol::SourceLedger;

/// Counters the engine bumps while a run executes. Strictly monotone: the
/// only mutations are the `count_*` increments below.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RawCounters {
    pub requests_sent: u64,
    /// Request rebroadcasts by intermediate nodes.
    pub request_rebroadcasts: u64,
    /// Reply emissions by servers plus reply forwards by intermediates.
    pub reply_transmissions: u64,
    /// Times a request generation found packets of an earlier request
    /// still in flight.
    pub overlap_warnings: u64,
}

impl RawCounters {
    pub fn count_request_sent(&mut self) {
        self.requests_sent += 1;
    }

    pub fn count_request_rebroadcast(&mut self) {
        self.request_rebroadcasts += 1;
    }

    pub fn count_reply_transmission(&mut self) {
        self.reply_transmissions += 1;
    }

    pub fn count_overlap_warning(&mut self) {
        self.overlap_warnings += 1;
    }
}

/// Raw counts plus the five derived metrics of one finished run.
///
/// `avg_hops` and `avg_response_time_ms` are averages over answered
/// requests only and are absent when nothing was answered.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub requests_sent: u64,
    pub requests_answered: u64,
    pub request_rebroadcasts: u64,
    pub reply_transmissions: u64,
    /// Every transmission by a node other than the source: request
    /// rebroadcasts, server reply emissions, and reply forwards.
    pub total_transmissions_by_others: u64,
    pub sum_first_reply_hops: u64,
    pub sum_response_time_ms: u64,
    pub duplicate_replies: u64,
    pub overlap_warnings: u64,

    pub response_ratio: f64,
    pub avg_hops: Option<f64>,
    /// Transmissions by other nodes per generated request.
    pub relative_traffic: f64,
    pub avg_response_time_ms: Option<f64>,
    /// Duplicate replies per generated request (not per answered one).
    pub duplicate_ratio: f64,
}

/// Folds the counters and the source ledger into the final record.
pub fn finalize(counters: &RawCounters, ledger: &SourceLedger) -> MetricsRecord {
    let mut answered = 0u64;
    let mut sum_hops = 0u64;
    let mut sum_response = 0u64;
    let mut duplicates = 0u64;
    for outcome in ledger.values() {
        if let Some(first) = &outcome.first_reply {
            answered += 1;
            sum_hops += first.hops as u64;
            sum_response += first.response_time_ms;
        }
        duplicates += outcome.duplicate_replies;
    }

    let sent = counters.requests_sent;
    debug_assert_eq!(sent, ledger.len() as u64);
    let total_by_others = counters.request_rebroadcasts + counters.reply_transmissions;
    let per_sent = |v: u64| if sent == 0 { 0.0 } else { v as f64 / sent as f64 };
    let per_answered = |v: u64| (answered > 0).then(|| v as f64 / answered as f64);

    MetricsRecord {
        requests_sent: sent,
        requests_answered: answered,
        request_rebroadcasts: counters.request_rebroadcasts,
        reply_transmissions: counters.reply_transmissions,
        total_transmissions_by_others: total_by_others,
        sum_first_reply_hops: sum_hops,
        sum_response_time_ms: sum_response,
        duplicate_replies: duplicates,
        overlap_warnings: counters.overlap_warnings,
        response_ratio: per_sent(answered),
        avg_hops: per_answered(sum_hops),
        relative_traffic: per_sent(total_by_others),
        avg_response_time_ms: per_answered(sum_response),
        duplicate_ratio: per_sent(duplicates),
    }
}

/// Header of the per-run CSV written by `run` and `sweep`.
pub const RUN_CSV_HEADER: &str = "radius_m,ttl,link_availability,vmax_kmh,p_change,seed,\
requests,response_ratio,avg_hops,relative_traffic,avg_response_time_ms,duplicate_ratio";

/// One CSV row for a finished run. Absent averages render as empty fields.
pub fn run_csv_row(config: &SimulationConfig, metrics: &MetricsRecord) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        config.radius_m,
        config.ttl,
        config.link_availability,
        config.vmax_kmh,
        config.direction_change_p,
        config.seed,
        metrics.requests_sent,
        metrics.response_ratio,
        opt(metrics.avg_hops),
        metrics.relative_traffic,
        opt(metrics.avg_response_time_ms),
        metrics.duplicate_ratio,
    )
}
