//! Adds one standard normal column to a fixed design many times and checks
//! that n (1 - ss_after / ss_before) behaves like a chi-squared variable with
//! one degree of freedom.
//!
//!     cargo run --release --example noise_reduction

use stepgate::probdist::qchisq;
use stepgate::{noise_reduction_distribution, Method, RealMatrix, SimConfig};

fn main() -> stepgate::Result<()> {
    let n = 200;
    let config = SimConfig { n, k: 1, replications: 5000, alpha: 0.05, seed: 1, method: Method::L2 };
    let design = RealMatrix::from_columns(n, &[&vec![1.0; n]])?;
    let report = noise_reduction_distribution(&config, &design)?;

    let mut stats = report.statistics.clone();
    stats.sort_by(f64::total_cmp);
    println!("KS distance to chi2(1): {:.4}", report.ks_distance_chisq);
    println!("{:>6} {:>10} {:>10}", "q", "sample", "chi2(1)");
    for q in [0.5, 0.9, 0.95, 0.99] {
        let sample = stats[((q * stats.len() as f64) as usize).min(stats.len() - 1)];
        println!("{q:>6} {sample:>10.4} {:>10.4}", qchisq(q, 1)?);
    }
    Ok(())
}
