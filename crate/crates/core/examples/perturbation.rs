//! Sets the first response of the prostate data to 10 and compares how the
//! least-squares and M rankings react.
//!
//!     cargo run --example perturbation

use std::path::Path;

use stepgate::cli::order_diff;
use stepgate::{load_with_manifest, perturb_response, run_stepwise, GateConfig};

fn main() -> stepgate::Result<()> {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/prostate.manifest");
    let (data, _) = load_with_manifest(manifest)?;
    let outlier = perturb_response(&data, 1, 10.0)?;

    for (label, config) in [("L2", GateConfig::l2()), ("M", GateConfig::m())] {
        let config = GateConfig { exhaustive: true, ..config };
        let before = run_stepwise(&data, &config)?;
        let after = run_stepwise(&outlier, &config)?;
        println!("{label}: selected {:?} -> {:?}", before.selected, after.selected);
        for e in &after.evaluations {
            println!("  {:<8} {:.4}", e.chosen_covariate, e.p_value);
        }
        for c in order_diff(&before, &after) {
            println!("  step {} moved from {} to {}", c.step, c.before, c.after);
        }
    }
    Ok(())
}
