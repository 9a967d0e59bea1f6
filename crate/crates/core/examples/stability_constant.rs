//! Both sides of the stability inequality, and how the empirical constant
//! degrades when the excitation loses its sign condition.
//!
//! Run with `cargo run --release --example stability_constant`.

use serde_json::json;
use varorder::config::{build_experiment, ConfigFile};
use varorder::experiments::run_stability;

fn run(excitation: serde_json::Value, label: &str, out: &str) -> varorder::Result<()> {
    let config: ConfigFile = serde_json::from_value(json!({
        "schema": "varorder/1",
        "domain": {"kind": "disk", "rings": 16, "tags": {"kind": "annuli", "radii": [0.6]}},
        "order": {"kind": "partition", "values": [[0, 0.5], [1, 0.6]]},
        "excitation": excitation,
        "stability": {
            "order1": {"kind": "partition", "values": [[0, 0.55], [1, 0.65]]}
        }
    }))?;
    let experiment = build_experiment(config)?;
    println!("-- {label}");
    let summary = run_stability(&experiment, std::path::Path::new(out))?;
    for line in &summary.lines {
        println!("{line}");
    }
    Ok(())
}

fn main() -> varorder::Result<()> {
    // uniformly positive boundary data: the setting of the stability theorem
    run(
        json!([{"k": 2, "phi": {"kind": "constant", "value": 1.0}}]),
        "definite excitation (|ghat(1,.)| bounded below)",
        "out-stability",
    )?;
    // sign-changing data: ghat(1,.) = 2 cos(theta) has zeros, and the
    // empirical constant is expected to degrade
    run(
        json!([{"k": 2, "phi": {"kind": "harmonic", "c0": 0.0, "cos": [1.0]}}]),
        "sign-changing excitation (zeros on the boundary)",
        "out-stability-signchange",
    )?;
    Ok(())
}
