//! L1 time stepping of the variable-order model cross-checked against the
//! frequency-domain computations (scaled down from the acceptance run).
//!
//! Run with `cargo run --release --example time_domain_crosscheck`.

use serde_json::json;
use varorder::config::{build_experiment, ConfigFile};
use varorder::experiments::run_crosscheck;

fn main() -> varorder::Result<()> {
    let config: ConfigFile = serde_json::from_value(json!({
        "schema": "varorder/1",
        "domain": {"kind": "disk", "rings": 10},
        "order": {"kind": "constant", "value": 0.5},
        "excitation": [{"k": 2, "phi": {"kind": "constant", "value": 1.0}}],
        "crosscheck": {"tau": 2e-3, "horizon": 20.0}
    }))?;
    let experiment = build_experiment(config)?;
    let summary = run_crosscheck(&experiment, std::path::Path::new("out-crosscheck"))?;
    for line in &summary.lines {
        println!("{line}");
    }
    for artifact in &summary.artifacts {
        println!("wrote {}", artifact.display());
    }
    Ok(())
}
