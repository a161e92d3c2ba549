//! The pieces behind the M variant: the L1 single-covariate start, a
//! fixed-scale M fit and the MAD scale update.
//!
//!     cargo run --example robust_fit

use std::path::Path;

use stepgate::{
    fit_least_squares, l1_single_covariate_init, load_with_manifest, m_fit_fixed_scale, mad_scale, RealMatrix,
    RhoFunction,
};

fn main() -> stepgate::Result<()> {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/prostate.manifest");
    let (data, _) = load_with_manifest(manifest)?;
    let data = stepgate::perturb_response(&data, 1, 10.0)?;

    let start = l1_single_covariate_init(&data, true)?;
    println!(
        "L1 start: {} (sum |r| = {:.4}), sigma = {:.4}",
        data.column_name(start.column),
        start.l1_objective,
        start.scale.sigma
    );

    let ones = vec![1.0; data.n()];
    let design = RealMatrix::from_columns(data.n(), &[&ones, data.column(start.column)])?;
    let ls = fit_least_squares(&design, data.response())?;
    let m = m_fit_fixed_scale(&design, data.response(), &RhoFunction::default(), start.scale.sigma, None)?;
    println!("least squares coefficients {:?}", ls.coefficients);
    println!("M coefficients             {:?} after {} iterations", m.coefficients, m.iterations);
    println!("residual of the altered point: LS {:.3}, M {:.3}", ls.residuals[0], m.residuals[0]);
    println!("updated scale (MAD of the M residuals): {:.4}", mad_scale(&m.residuals)?);
    Ok(())
}
