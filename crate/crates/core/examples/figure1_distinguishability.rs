//! The four-order scenario: pairwise flux-curve distances for four order
//! maps sharing one medium, probed from a single boundary point.
//!
//! Run with `cargo run --release --example figure1_distinguishability`.

use serde_json::json;
use varorder::config::{build_experiment, ConfigFile};
use varorder::experiments::run_figure1;

fn main() -> varorder::Result<()> {
    let config: ConfigFile = serde_json::from_value(json!({
        "schema": "varorder/1",
        "domain": {"kind": "disk", "rings": 16},
        "order": {"kind": "constant", "value": 0.5},
        "excitation": [{"k": 2, "phi": {"kind": "constant", "value": 1.0}}],
        "p_grid": {"kind": "log", "min": 1e-4, "max": 1e-1, "points": 12}
    }))?;
    let experiment = build_experiment(config)?;
    let summary = run_figure1(&experiment, std::path::Path::new("out-figure1"))?;
    for line in &summary.lines {
        println!("{line}");
    }
    for artifact in &summary.artifacts {
        println!("wrote {}", artifact.display());
    }
    Ok(())
}
