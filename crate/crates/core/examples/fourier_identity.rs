//! The Fourier transform of |x|^{α−d} checked by quadrature in one dimension.

use riesz_flow::{check_fourier_identity, fourier_constant, gamma_fn};

pub fn main() -> riesz_flow::Result<()> {
    for alpha in [0.25, 0.5, 0.75] {
        let c = check_fourier_identity(alpha, 1, 4096)?;
        println!(
            "α = {alpha}: lhs {:.15} rhs {:.15} rel {:.2e}  c(α,1) = {:.10}",
            c.lhs,
            c.rhs,
            c.relative_error,
            fourier_constant(alpha, 1)?
        );
    }
    println!("Γ(1/4) = {:.15}", gamma_fn(0.25)?);
    Ok(())
}
