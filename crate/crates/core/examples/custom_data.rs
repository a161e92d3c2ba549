//! Builds a dataset in code, runs the gate and prints the trace as JSON.
//! Two of the six covariates carry signal.
//!
//!     cargo run --example custom_data

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use stepgate::{run_stepwise, Column, Dataset, GateConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 80;
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mut draw = || -> Vec<f64> { (0..n).map(|_| StandardNormal.sample(&mut rng)).collect() };
    let columns: Vec<Column> = (0..6).map(|j| Column { name: format!("z{j}"), values: draw() }).collect();
    let noise = draw();
    let y: Vec<f64> = (0..n).map(|i| 1.5 * columns[1].values[i] - 0.8 * columns[4].values[i] + noise[i]).collect();

    let data = Dataset::new("synthetic", "y", y, columns)?;
    let trace = run_stepwise(&data, &GateConfig::l2())?;
    println!("{}", serde_json::to_string_pretty(&trace)?);
    Ok(())
}
