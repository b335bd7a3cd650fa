//! End-to-end tests of the `manetsim` binary: exit codes, the run/sweep/plot
//! pipeline, and output determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn manetsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_manetsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn write_small_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("small.conf");
    fs::write(
        &path,
        "nodes = 12\nservers = 2\nrequests = 10\nradius_m = 150\nseed = 9\n",
    )
    .unwrap();
    path
}

#[test]
fn run_prints_one_csv_row() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_small_config(dir.path());
    let out = manetsim(&["run", "--config", config.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("radius_m,ttl,link_availability"));
    assert!(lines[1].starts_with("150,7,0.7,5,0,9,10,"));

    // Same invocation, same bytes.
    let again = manetsim(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(out.stdout, again.stdout);

    // A flag override changes the seed column.
    let reseeded = manetsim(&["run", "--config", config.to_str().unwrap(), "--seed", "10"]);
    assert!(stdout(&reseeded).lines().nth(1).unwrap().contains(",10,10,"));
}

#[test]
fn run_dump_flags_write_csv_traces() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_small_config(dir.path());
    let trajectories = dir.path().join("trajectories.csv");
    let events = dir.path().join("events.csv");
    let links = dir.path().join("links.csv");
    let packets = dir.path().join("packets.csv");
    let out = manetsim(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--dump-trajectories",
        trajectories.to_str().unwrap(),
        "--dump-events",
        events.to_str().unwrap(),
        "--dump-links",
        links.to_str().unwrap(),
        "--dump-packets",
        packets.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let trajectories = fs::read_to_string(trajectories).unwrap();
    assert!(trajectories.starts_with("time_ms,node,x,y\n"));
    // 12 nodes at t=0 plus 12 per mobility step.
    assert!(trajectories.lines().count() > 12);

    let events = fs::read_to_string(events).unwrap();
    assert!(events.starts_with("time_ms,tie,kind,node,seq\n"));
    assert!(events.contains("request_gen"));

    let links = fs::read_to_string(links).unwrap();
    assert!(links.starts_with("time_ms,up_fraction\n"));

    let packets = fs::read_to_string(packets).unwrap();
    assert!(packets.starts_with("time_ms,event,node,seq,kind,ttl,hops\n"));
    assert!(packets.contains(",gen,"));
    assert!(packets.contains(",tx,"));
}

#[test]
fn invalid_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.conf");
    fs::write(&config, "link_availability = 1.5\n").unwrap();
    let out = manetsim(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("0 < l < 1"), "{}", stderr(&out));

    let out = manetsim(&["run", "--config", "/does/not/exist.conf"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_flags_exit_with_usage() {
    let out = manetsim(&["run", "--warp-speed", "9"]);
    assert_eq!(out.status.code(), Some(1));
    let out = manetsim(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn sweep_then_plot_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_small_config(dir.path());
    let out_dir = dir.path().join("sweep");
    let sweep_args = [
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--radius",
        "60,210",
        "--ttl",
        "4,7",
        "--seeds",
        "2",
        "--out",
        out_dir.to_str().unwrap(),
    ];
    let out = manetsim(&sweep_args);
    assert!(out.status.success(), "{}", stderr(&out));

    let runs = fs::read_to_string(out_dir.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 2 * 2 * 2);
    let aggregate_path = out_dir.join("aggregate.csv");
    let aggregate = fs::read_to_string(&aggregate_path).unwrap();
    assert_eq!(aggregate.lines().count(), 1 + 4);

    // Re-running the identical sweep reproduces both files byte for byte.
    let out = manetsim(&sweep_args);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(out_dir.join("runs.csv")).unwrap(), runs);

    let svg_path = dir.path().join("chart.svg");
    let out = manetsim(&[
        "plot",
        "--input",
        aggregate_path.to_str().unwrap(),
        "--metric",
        "response_ratio",
        "--group",
        "ttl",
        "--out",
        svg_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let svg = fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("ttl = 4") && svg.contains("ttl = 7"));
}

#[test]
fn plot_rejects_unknown_metric_and_empty_input() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let out = manetsim(&[
        "plot",
        "--input",
        empty.to_str().unwrap(),
        "--metric",
        "response_ratio",
        "--group",
        "ttl",
        "--out",
        dir.path().join("x.svg").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));

    let out = manetsim(&[
        "plot",
        "--input",
        empty.to_str().unwrap(),
        "--metric",
        "latency",
        "--group",
        "ttl",
        "--out",
        dir.path().join("x.svg").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("valid metrics"), "{}", stderr(&out));
}

#[test]
fn unwritable_output_is_a_run_failure() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_small_config(dir.path());
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "file, not a directory").unwrap();
    let out = manetsim(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--radius",
        "60",
        "--seeds",
        "1",
        "--out",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn series_presets_have_the_right_cardinality() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("tiny.conf");
    // Tiny network so the preset sweeps stay fast; the preset fixes the
    // swept dimensions, the base config the rest.
    fs::write(&config, "nodes = 6\nservers = 1\nrequests = 3\n").unwrap();
    let out_dir = dir.path().join("s1");
    let out = manetsim(&[
        "sweep",
        "--series1",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let runs = fs::read_to_string(out_dir.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 7 * 3 * 5);
}
