//! Covariate selection for the low birth weight data at two levels.
//! Covariates are reported by their position 1..9 in the manifest.
//!
//!     cargo run --example select_birthweight

use std::path::Path;

use stepgate::{load_with_manifest, run_stepwise, GateConfig};

fn main() -> stepgate::Result<()> {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/birthweight.manifest");
    let (data, _) = load_with_manifest(manifest)?;

    for (i, name) in data.column_names().iter().enumerate() {
        println!("({}) {name}", i + 1);
    }
    for method in [GateConfig::l2(), GateConfig::m()] {
        for alpha in [0.05, 0.1] {
            let trace = run_stepwise(&data, &GateConfig { alpha, ..method })?;
            let chosen: Vec<usize> =
                trace.evaluations.iter().take(trace.selected.len()).map(|e| e.covariate_index + 1).collect();
            println!("{:?} alpha = {alpha}: {chosen:?}", method.method);
        }
    }
    Ok(())
}
