//! Expansion cascades of the boundary flux at both degenerate frequencies,
//! with measured remainder rates against the predicted ones.
//!
//! Run with `cargo run --release --example asymptotic_cascades`.

use serde_json::json;
use varorder::config::{build_experiment, ConfigFile};
use varorder::experiments::run_asympt;

fn main() -> varorder::Result<()> {
    let config: ConfigFile = serde_json::from_value(json!({
        "schema": "varorder/1",
        "domain": {"kind": "disk", "rings": 12, "tags": {"kind": "annuli", "radii": [0.6]}},
        "order": {"kind": "partition", "values": [[0, 0.4], [1, 0.7]]},
        "excitation": [{"k": 2, "phi": {"kind": "constant", "value": 1.0}}],
        "p_grid": {"kind": "log", "min": 1e-6, "max": 1e-2, "points": 16},
        "asympt": {"depths": [1, 2]}
    }))?;
    let experiment = build_experiment(config)?;
    let summary = run_asympt(&experiment, std::path::Path::new("out-asympt"))?;
    for line in &summary.lines {
        println!("{line}");
    }
    for artifact in &summary.artifacts {
        println!("wrote {}", artifact.display());
    }
    Ok(())
}
