#![no_main]

use libfuzzer_sys::fuzz_target;
use manetsim::plot::{parse_aggregate_csv, render_line_chart, GroupKey, Metric};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(rows) = parse_aggregate_csv(text) {
            // Whatever parses must render (or refuse) without panicking.
            for group in GroupKey::ALL {
                let _ = render_line_chart(&rows, Metric::ResponseRatio, group, &[]);
            }
        }
    }
});
