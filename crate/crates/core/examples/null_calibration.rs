//! Pure-noise data: how often does the first step pass the gate? The rate
//! should sit near alpha.
//!
//!     cargo run --release --example null_calibration

use stepgate::{null_calibration, Method, SimConfig};

fn main() -> stepgate::Result<()> {
    for alpha in [0.01, 0.05, 0.1] {
        let config = SimConfig { n: 100, k: 20, replications: 2000, alpha, seed: 7, method: Method::L2 };
        let report = null_calibration(&config)?;
        println!(
            "alpha {alpha:<5} inclusion rate {:.4}  KS vs max of {} chi2(1): {:.4}",
            report.inclusion_rate, config.k, report.ks_distance_chisq
        );
    }
    Ok(())
}
