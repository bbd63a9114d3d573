//! Energies of an indicator as α → 0 and α → d against their closed forms.

use riesz_flow::{build_domain, Energy, Functional, GridField, MaskShape};

pub fn main() -> riesz_flow::Result<()> {
    let dom = build_domain(1, &[(0.0, 1.0)], 1024, MaskShape::FullBox)?;
    let chi = GridField::indicator(dom.clone());
    let value = |f: Functional| Energy::new(f.into(), &dom)?.value(&chi);

    let jhat0 = value(Functional::Jhat0)?;
    println!("Jhat0(χ) = {jhat0:.6}");
    println!(
        "{:>6} {:>12} {:>12} {:>12} {:>12}",
        "α", "-αJ", "2/(α+1)", "Jhat", "Jhat-Jhat0"
    );
    for alpha in [0.4, 0.2, 0.1, 0.05, 0.025] {
        let j = value(Functional::J(alpha))?;
        let jh = value(Functional::Jhat(alpha))?;
        println!(
            "{alpha:>6} {:>12.6} {:>12.6} {jh:>12.6} {:>12.3e}",
            -alpha * j,
            2.0 / (alpha + 1.0),
            jh - jhat0
        );
    }

    println!(
        "α → 1: J → −(∫χ)² = −1, Jtilde → JtildeD = {:.6}",
        value(Functional::JtildeD)?
    );
    for alpha in [0.9, 0.95, 0.99] {
        println!(
            "{alpha:>6} J = {:.6}  Jtilde = {:.6}",
            value(Functional::J(alpha))?,
            value(Functional::Jtilde(alpha))?
        );
    }
    Ok(())
}
