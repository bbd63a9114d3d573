//! Gradients of the energies, checked by finite differences, and the λ that
//! makes each one convex or positive.

use riesz_flow::{
    build_domain, certify, energy, gradient_check, EnergyKind, Functional, GridField, MaskShape, Operator, OperatorKind,
};

pub fn main() -> riesz_flow::Result<()> {
    let dom = build_domain(1, &[(0.0, 1.0)], 128, MaskShape::FullBox)?;
    let u = GridField::from_fn(dom.clone(), |x| (6.0 * x[0]).sin())?;
    let phi = GridField::from_fn(dom.clone(), |x| x[0] * (1.0 - x[0]))?;

    for f in [
        Functional::J(0.5),
        Functional::Jhat(0.5),
        Functional::Jhat0,
        Functional::JtildeD,
    ] {
        for sign in [1.0, -1.0] {
            let kind = EnergyKind::new(f, sign)?;
            let rows = gradient_check(kind, &u, &phi, &[1e-2])?;
            let cert = match certify(kind, &dom) {
                Ok(c) => format!("{:?} λ = {:.4}", c.kind, c.lambda),
                Err(_) => "unbounded below near 0".to_string(),
            };
            println!(
                "{:>7} sign {sign:+}: defect/t = {:.10}  E(φ) = {:.10}  {cert}",
                f.name(),
                rows[0].defect / rows[0].t,
                energy(kind, &phi)?
            );
        }
    }

    let lap0 = Operator::new(OperatorKind::Laplacian0, &dom)?;
    println!(
        "(−Δ)⁰ norm bound {:.4}, ½⟨Au,u⟩ = {:.6}",
        lap0.norm_bound(),
        lap0.energy(&u)?
    );
    Ok(())
}
