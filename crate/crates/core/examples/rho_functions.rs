//! Values and derivatives of the default rho function and Huber's, plus the
//! step the default family takes where it switches to |u|.
//!
//!     cargo run --example rho_functions

use stepgate::RhoFunction;

fn main() -> stepgate::Result<()> {
    let default = RhoFunction::default();
    let huber = RhoFunction::huber(1.345)?;
    println!("{:>6} {:>9} {:>9} {:>9}   {:>9} {:>9}", "u", "rho", "psi", "rho''", "huber", "psi");
    for u in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 14.99, 15.0, 20.0] {
        println!(
            "{u:>6} {:>9.5} {:>9.5} {:>9.5}   {:>9.5} {:>9.5}",
            default.rho(u),
            default.d1(u),
            default.d2(u),
            huber.rho(u),
            huber.d1(u)
        );
    }
    println!("\nstep in rho at |cu| = 15: {:.6} (2 ln 2 = {:.6})", default.branch_jump(), 2.0 * 2f64.ln());
    Ok(())
}
