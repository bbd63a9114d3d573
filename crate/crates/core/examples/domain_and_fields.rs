//! Grids, masks and fields: build Ω, sample data on it and round-trip a
//! field through the plain-text format.

use riesz_flow::{build_domain, GridField, MaskShape};

pub fn main() -> riesz_flow::Result<()> {
    let line = build_domain(1, &[(0.0, 1.0)], 512, MaskShape::FullBox)?;
    let gauss = GridField::from_fn(line.clone(), |x| (-(x[0] - 0.5).powi(2) / 0.02).exp())?;
    println!(
        "interval: {} cells, h = {}, ∫u = {:.6}",
        line.masked_count(),
        line.spacing()[0],
        gauss.integral()
    );

    // the disk keeps only cells whose centers lie inside
    let disk = build_domain(
        2,
        &[(0.0, 1.0), (0.0, 1.0)],
        64,
        MaskShape::Ball {
            center: vec![0.5, 0.5],
            radius: 0.5,
        },
    )?;
    let chi = GridField::indicator(disk.clone());
    println!(
        "disk: {} of {} cells, |Ω| = {:.5} (π/4 = {:.5}), ‖χ‖² = {:.5}",
        disk.masked_count(),
        disk.total_cells(),
        disk.measure(),
        std::f64::consts::FRAC_PI_4,
        chi.norm_sq()
    );

    let path = std::env::temp_dir().join(format!("riesz-flow-field-{}.txt", std::process::id()));
    gauss.write_to(&path)?;
    let back = GridField::read_from(&path, Some(line))?;
    std::fs::remove_file(&path)?;
    println!("round trip exact: {}", back.values() == gauss.values());
    Ok(())
}
