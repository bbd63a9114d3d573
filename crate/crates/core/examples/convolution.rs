//! Direct and FFT convolution, and the Riesz potential of an indicator.

use std::sync::Arc;

use riesz_flow::{
    apply, build_domain, build_table, convolve, operator_norm_bound, ConvolutionPlan, GridField, KernelSpec, MaskShape,
    Method, OperatorKind,
};

pub fn main() -> riesz_flow::Result<()> {
    let disk = build_domain(
        2,
        &[(0.0, 1.0), (0.0, 1.0)],
        48,
        MaskShape::Ball {
            center: vec![0.5, 0.5],
            radius: 0.5,
        },
    )?;
    let table = Arc::new(build_table(KernelSpec::riesz(1.2, 2)?, &disk, 1e-10)?);
    let direct = ConvolutionPlan::from_shared(table.clone(), Method::Direct)?;
    let fft = ConvolutionPlan::from_shared(table.clone(), Method::Fft)?;
    println!(
        "FFT padded size {:?}, norm bound {:.5}",
        fft.padded_size(),
        operator_norm_bound(&table)
    );

    let u = GridField::from_fn(disk, |x| (7.0 * x[0]).sin() * (3.0 * x[1]).cos())?;
    let a = convolve(&direct, &u)?;
    let b = convolve(&fft, &u)?;
    println!("direct vs FFT relative difference {:.3e}", a.sub(&b)?.norm() / a.norm());

    let n = 1024;
    let chi = GridField::indicator(build_domain(1, &[(0.0, 1.0)], n, MaskShape::FullBox)?);
    let p = apply(OperatorKind::RieszPotential(0.5), &chi)?;
    let mid = 0.5 * (p.values()[n / 2 - 1] + p.values()[n / 2]);
    println!("(−Δ)^(−1/4) χ at x = 1/2: {mid:.8}, 4√2 = {:.8}", 4.0 * 2f64.sqrt());
    Ok(())
}
