//! Minimizing movements for −αJ^α against the heat-type decay it approaches
//! as α → 0.

use riesz_flow::{
    build_domain, compare_trajectories, decay_trajectory, solve, FlowProblem, GridField, MaskShape, OperatorKind,
    Scheme,
};

pub fn main() -> riesz_flow::Result<()> {
    let dom = build_domain(1, &[(0.0, 1.0)], 256, MaskShape::FullBox)?;
    let u0 = GridField::indicator(dom);
    for alpha in [0.2, 0.1, 0.05] {
        let problem = FlowProblem::new(
            OperatorKind::GradScaledJ(alpha),
            u0.clone(),
            0.5,
            1e-3,
            Scheme::MinimizingMovements,
            10,
        )?;
        let traj = solve(&problem)?;
        let limit = decay_trajectory(&u0, &traj.times)?;
        let gap = compare_trajectories(&traj, &limit)?;
        println!(
            "α = {alpha:<5} λ = {:.3}  sup-gap {:.5} at t = {:.3}  monotone: {}",
            problem.lambda(),
            gap.max_l2,
            gap.at_time,
            traj.energy_monotone(1e-12)
        );
    }
    Ok(())
}
