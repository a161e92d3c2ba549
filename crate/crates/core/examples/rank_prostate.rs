//! Full inclusion order for the prostate data under least squares and
//! M-regression, with the P-value of every step.
//!
//!     cargo run --example rank_prostate

use std::path::Path;

use stepgate::{load_with_manifest, run_stepwise, GateConfig};

fn main() -> stepgate::Result<()> {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/prostate.manifest");
    let (data, _) = load_with_manifest(manifest)?;

    let l2 = run_stepwise(&data, &GateConfig { exhaustive: true, ..GateConfig::l2() })?;
    let m = run_stepwise(&data, &GateConfig { exhaustive: true, ..GateConfig::m() })?;

    println!("{:<10} {:>8}   {:<10} {:>8}", "L2", "P", "M", "P");
    for (a, b) in l2.evaluations.iter().zip(&m.evaluations) {
        println!("{:<10} {:>8.4}   {:<10} {:>8.4}", a.chosen_covariate, a.p_value, b.chosen_covariate, b.p_value);
    }
    println!("\nselected at alpha = 0.05: L2 {:?}, M {:?}", l2.selected, m.selected);
    Ok(())
}
