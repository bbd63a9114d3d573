//! Cell-averaged kernel tables and the scalar kernel facts behind them.

use riesz_flow::kernels::DEFAULT_TABLE_TOL;
use riesz_flow::{
    build_domain, build_table, eval_kernel, kernel_l1_truncated, taylor_defect, truncated_offsite_mass, KernelKind,
    KernelSpec, MaskShape,
};

pub fn main() -> riesz_flow::Result<()> {
    let dom = build_domain(1, &[(0.0, 1.0)], 256, MaskShape::FullBox)?;
    let h = dom.spacing()[0];

    let riesz = build_table(KernelSpec::riesz(0.5, 1)?, &dom, DEFAULT_TABLE_TOL)?;
    // the origin cell average of |z|^{-1/2} over (−h/2, h/2) is 4/√(2h)
    println!(
        "Riesz α=0.5: w(0) = {:.10}, 4/√(2h) = {:.10}",
        riesz.weight([0, 0]),
        4.0 / (2.0 * h).sqrt()
    );
    println!(
        "             w(1) = {:.10}, |h|^(-1/2) = {:.10}",
        riesz.weight([1, 0]),
        h.powf(-0.5)
    );

    let spec = KernelSpec::new(
        KernelKind::TruncatedRiesz {
            alpha: 0.5,
            radius: 1.0,
        },
        1,
    )?;
    let table = build_table(spec, &dom, DEFAULT_TABLE_TOL)?;
    let mass: f64 = table.weights().iter().sum::<f64>() * h;
    let offsite = truncated_offsite_mass(0.5, 1.0, &[h], DEFAULT_TABLE_TOL)?;
    println!(
        "truncated α=0.5: table mass {mass:.8}, off-origin mass {offsite:.8}, full L¹ {:.8}",
        kernel_l1_truncated(0.5, 1.0, 1)?
    );

    let log = KernelSpec::new(KernelKind::Log, 2)?;
    println!(
        "log kernel at |z| = e^-1: {:.12}",
        eval_kernel(&log, &[(-1f64).exp(), 0.0])?
    );

    // the difference-quotient kernel tends to log(1/|z|) as α → d
    for alpha in [0.9, 0.99, 0.999] {
        let dq = KernelSpec::new(KernelKind::DiffQuotient { alpha }, 1)?;
        println!(
            "DQ α={alpha}: k(0.1) = {:.8}, log 10 = {:.8}, normalized defect {:.6}",
            eval_kernel(&dq, &[0.1])?,
            10f64.ln(),
            taylor_defect(alpha, 1, 0.1)?
        );
    }
    Ok(())
}
