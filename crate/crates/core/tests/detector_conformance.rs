//! Alarm traces of every detector against traces exported from river 0.23
//! (see fixtures/gen_reference_traces.py).

use std::collections::BTreeMap;

use driftbench::detectors::{alarm_traces, DetectorKind, DetectorOptions};
use driftbench::par::Execution;
use serde::Deserialize;

#[derive(Deserialize)]
struct Fixture {
    kswin_seed: u64,
    streams: Vec<FixtureStream>,
}

#[derive(Deserialize)]
struct FixtureStream {
    kind: String,
    bits: String,
    traces: BTreeMap<String, Vec<usize>>,
}

fn load() -> Fixture {
    let raw = include_str!("fixtures/reference_traces.json");
    serde_json::from_str(raw).expect("fixture parses")
}

#[test]
fn corpus_shape() {
    let fx = load();
    assert_eq!(fx.streams.len(), 100);
    for kind in ["constant", "step", "ramp", "noisy"] {
        assert_eq!(fx.streams.iter().filter(|s| s.kind == kind).count(), 25);
    }
}

#[test]
fn traces_match_reference_exactly() {
    let fx = load();
    let signals: Vec<Vec<f64>> = fx
        .streams
        .iter()
        .map(|s| s.bits.bytes().map(|b| (b - b'0') as f64).collect())
        .collect();
    let opts = DetectorOptions {
        kswin_seed: fx.kswin_seed,
    };
    let mut failures = Vec::new();
    for kind in DetectorKind::ALL {
        let ours = alarm_traces(kind, opts, &signals, Execution::Parallel);
        for (i, (stream, trace)) in fx.streams.iter().zip(&ours).enumerate() {
            let expected = &stream.traces[kind.id()];
            if trace != expected {
                failures.push(format!(
                    "{kind} stream {i} ({}): expected {expected:?}, got {trace:?}",
                    stream.kind
                ));
            }
        }
    }
    assert!(failures.is_empty(), "{} mismatches:\n{}", failures.len(), failures.join("\n"));
}
