//! Forward map on a two-band disk: one-point flux curve over six decades of
//! frequency and the weighted boundary data, written as CSV.
//!
//! Run with `cargo run --release --example forward_flux`.

use serde_json::json;
use varorder::config::{build_experiment, ConfigFile};
use varorder::experiments::run_forward;

fn main() -> varorder::Result<()> {
    let config: ConfigFile = serde_json::from_value(json!({
        "schema": "varorder/1",
        "domain": {"kind": "disk", "rings": 20, "tags": {"kind": "annuli", "radii": [0.6]}},
        "order": {"kind": "partition", "values": [[0, 0.4], [1, 0.7]]},
        "q": {"kind": "constant", "value": 1.0},
        "excitation": [{"k": 2, "phi": {"kind": "constant", "value": 1.0}}],
        "observation": [1.0, 0.0],
        "p_grid": {"kind": "log", "min": 1e-6, "max": 1e-2, "points": 24}
    }))?;
    let experiment = build_experiment(config)?;
    let summary = run_forward(&experiment, std::path::Path::new("out-forward"))?;
    for line in &summary.lines {
        println!("{line}");
    }
    for artifact in &summary.artifacts {
        println!("wrote {}", artifact.display());
    }
    Ok(())
}
