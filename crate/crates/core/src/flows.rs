//! Gradient flows u_t = −A u and their closed-form limit dynamics.

use crate::error::{Error, Result};
use crate::functionals::certify;
use crate::grid::{dot, GridField};
use crate::operators::{Operator, OperatorKind};
use crate::special::sphere_measure;

/// CG stops once ‖(I + τA)v − u‖ falls below this fraction of ‖u‖ ...
const CG_TARGET: f64 = 1e-14;
/// ... and accepts anything below this if the iteration budget runs out.
const CG_ACCEPT: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ExplicitEuler,
    MinimizingMovements,
}

#[derive(Debug, Clone)]
pub struct FlowProblem {
    operator: Operator,
    u0: GridField,
    t_final: f64,
    tau: f64,
    scheme: Scheme,
    record_every: usize,
    lambda: f64,
}

impl FlowProblem {
    pub fn new(
        grad_kind: OperatorKind,
        u0: GridField,
        t_final: f64,
        tau: f64,
        scheme: Scheme,
        record_every: usize,
    ) -> Result<Self> {
        let operator = Operator::new(grad_kind, u0.domain())?;
        Self::with_operator(operator, u0, t_final, tau, scheme, record_every)
    }

    /// Uses an already prepared operator, which must live on u0's domain.
    pub fn with_operator(
        operator: Operator,
        u0: GridField,
        t_final: f64,
        tau: f64,
        scheme: Scheme,
        record_every: usize,
    ) -> Result<Self> {
        if !operator.domain().same_as(u0.domain()) {
            return Err(Error::input("initial datum and operator live on different domains"));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::input("tau must be positive"));
        }
        if !(t_final.is_finite() && t_final >= tau) {
            return Err(Error::input("final time must be at least tau"));
        }
        if record_every == 0 {
            return Err(Error::input("record_every must be at least 1"));
        }
        let (energy, factor) = operator.kind().driving_energy();
        let lambda = match scheme {
            Scheme::MinimizingMovements => {
                let lambda = factor * certify(energy, operator.domain())?.lambda;
                if tau * lambda >= 1.0 {
                    return Err(Error::input(format!(
                        "tau * lambda = {} must be below 1 for minimizing movements",
                        tau * lambda
                    )));
                }
                lambda
            }
            Scheme::ExplicitEuler => {
                let bound = operator.norm_bound();
                if tau > 1.0 / (2.0 * bound) {
                    return Err(Error::input(format!(
                        "explicit Euler needs tau <= {} for this operator",
                        1.0 / (2.0 * bound)
                    )));
                }
                0.0
            }
        };
        Ok(FlowProblem {
            operator,
            u0,
            t_final,
            tau,
            scheme,
            record_every,
            lambda,
        })
    }

    pub fn operator(&self) -> &Operator {
        &self.operator
    }

    pub fn u0(&self) -> &GridField {
        &self.u0
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Certified λ of the driving energy (zero for explicit Euler).
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.tau).round() as usize
    }
}

/// Recorded states of a flow.
#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<GridField>,
    pub energies: Vec<f64>,
    /// ‖u_{k+1} − u_k‖²/τ for every step.
    pub dissipation: Vec<f64>,
    /// max_k (E(u_{k+1}) − E(u_k))/‖u_k‖² over all steps; −∞ for a zero datum.
    pub worst_energy_increase: f64,
}

impl FlowTrajectory {
    pub fn final_state(&self) -> &GridField {
        self.states.last().expect("trajectory is never empty")
    }

    /// Whether the driving energy never rose by more than `rel`·‖u_k‖².
    pub fn energy_monotone(&self, rel: f64) -> bool {
        self.worst_energy_increase <= rel
    }
}

fn norm_sq(v: &[f64], vol: f64) -> f64 {
    dot(v, v) * vol
}

/// Solves (I + τA)v = u by conjugate gradients.
fn implicit_solve(op: &Operator, tau: f64, u: &[f64]) -> Result<Vec<f64>> {
    let n = u.len();
    let bnorm = dot(u, u).sqrt();
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mul = |x: &[f64]| -> Vec<f64> { op.apply_values(x).iter().zip(x).map(|(a, xi)| xi + tau * a).collect() };
    let mut x = u.to_vec();
    let mut r: Vec<f64> = u.iter().zip(mul(&x)).map(|(b, m)| b - m).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let max_iter = 10 * n;
    for _ in 0..max_iter {
        if rr.sqrt() <= CG_TARGET * bnorm {
            return Ok(x);
        }
        let ap = mul(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let a = rr / pap;
        for i in 0..n {
            x[i] += a * p[i];
            r[i] -= a * ap[i];
        }
        let rr_new = dot(&r, &r);
        // stagnation at rounding level: accept if good enough
        if rr_new >= rr && rr_new.sqrt() <= CG_ACCEPT * bnorm {
            return Ok(x);
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    // recompute the true residual before giving up
    let res: f64 = u
        .iter()
        .zip(mul(&x))
        .map(|(b, m)| (b - m) * (b - m))
        .sum::<f64>()
        .sqrt();
    if res <= CG_ACCEPT * bnorm {
        Ok(x)
    } else {
        Err(Error::Solver {
            iterations: max_iter,
            residual: res / bnorm,
        })
    }
}

/// One time step from `u`.
pub fn step(problem: &FlowProblem, u: &GridField) -> Result<GridField> {
    if !problem.operator.domain().same_as(u.domain()) {
        return Err(Error::input("field lives on a different domain than the flow"));
    }
    let v = step_values(problem, u.values())?;
    Ok(GridField::from_raw(u.domain().clone(), v))
}

fn step_values(problem: &FlowProblem, u: &[f64]) -> Result<Vec<f64>> {
    match problem.scheme {
        Scheme::ExplicitEuler => Ok(problem
            .operator
            .apply_values(u)
            .iter()
            .zip(u)
            .map(|(a, x)| x - problem.tau * a)
            .collect()),
        Scheme::MinimizingMovements => implicit_solve(&problem.operator, problem.tau, u),
    }
}

/// Integrates to the final time, recording every `record_every` steps and
/// always the last state.
pub fn solve(problem: &FlowProblem) -> Result<FlowTrajectory> {
    let dom = problem.u0.domain().clone();
    let vol = dom.cell_volume();
    let steps = problem.steps();
    let op = &problem.operator;
    let mut u = problem.u0.values().to_vec();
    let mut e = op.energy_values(&u);
    let mut traj = FlowTrajectory {
        times: vec![0.0],
        states: vec![problem.u0.clone()],
        energies: vec![e],
        dissipation: Vec::with_capacity(steps),
        worst_energy_increase: f64::NEG_INFINITY,
    };
    for k in 1..=steps {
        let v = step_values(problem, &u)?;
        let e_next = op.energy_values(&v);
        let size = norm_sq(&u, vol);
        if size > 0.0 {
            traj.worst_energy_increase = traj.worst_energy_increase.max((e_next - e) / size);
        }
        let diff: Vec<f64> = v.iter().zip(&u).map(|(a, b)| a - b).collect();
        traj.dissipation.push(norm_sq(&diff, vol) / problem.tau);
        u = v;
        e = e_next;
        if k % problem.record_every == 0 || k == steps {
            traj.times.push(k as f64 * problem.tau);
            traj.states.push(GridField::from_raw(dom.clone(), u.clone()));
            traj.energies.push(e);
        }
    }
    Ok(traj)
}

/// e^{−2dω_d t}·u0.
pub fn closed_form_decay(u0: &GridField, t: f64, d: usize) -> Result<GridField> {
    if !(t >= 0.0) {
        return Err(Error::input("time must be nonnegative"));
    }
    if d != u0.domain().dim() {
        return Err(Error::input("dimension does not match the field's domain"));
    }
    Ok(u0.scaled((-2.0 * sphere_measure(d)? * t).exp()))
}

/// u0 + (a0/|Ω|)(e^{±2|Ω|t} − 1)·χ_Ω with a0 = ∫u0.
pub fn closed_form_average(u0: &GridField, t: f64, sign: f64) -> Result<GridField> {
    if !(t >= 0.0) {
        return Err(Error::input("time must be nonnegative"));
    }
    if sign != 1.0 && sign != -1.0 {
        return Err(Error::input("sign must be +1 or -1"));
    }
    let vol = u0.domain().measure();
    let shift = u0.integral() / vol * (2.0 * sign * vol * t).exp_m1();
    let values = u0.values().iter().map(|v| v + shift).collect();
    Ok(GridField::from_raw(u0.domain().clone(), values))
}

/// The trajectory of `closed_form_decay` on the given times; energies are
/// dω_d‖u‖².
pub fn decay_trajectory(u0: &GridField, times: &[f64]) -> Result<FlowTrajectory> {
    let d = u0.domain().dim();
    let c = sphere_measure(d)?;
    closed_form_trajectory(times, |t| closed_form_decay(u0, t, d), |u| c * u.norm_sq())
}

/// The trajectory of `closed_form_average`; energies are ±J^d(u) = ∓(∫u)².
pub fn average_trajectory(u0: &GridField, times: &[f64], sign: f64) -> Result<FlowTrajectory> {
    closed_form_trajectory(
        times,
        |t| closed_form_average(u0, t, sign),
        |u| -sign * u.integral().powi(2),
    )
}

fn closed_form_trajectory(
    times: &[f64],
    state: impl Fn(f64) -> Result<GridField>,
    energy: impl Fn(&GridField) -> f64,
) -> Result<FlowTrajectory> {
    if times.is_empty() || times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::input("times must start at 0 and increase"));
    }
    let states = times.iter().map(|&t| state(t)).collect::<Result<Vec<_>>>()?;
    let energies = states.iter().map(&energy).collect();
    Ok(FlowTrajectory {
        times: times.to_vec(),
        states,
        energies,
        dissipation: Vec::new(),
        worst_energy_increase: f64::NEG_INFINITY,
    })
}

/// Sup over recorded times of the L² distance and of the energy gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryGap {
    pub max_l2: f64,
    pub max_energy_gap: f64,
    /// Time at which the L² distance is largest.
    pub at_time: f64,
}

pub fn compare_trajectories(a: &FlowTrajectory, b: &FlowTrajectory) -> Result<TrajectoryGap> {
    if a.times.len() != b.times.len()
        || a.times
            .iter()
            .zip(&b.times)
            .any(|(s, t)| (s - t).abs() > 1e-12 * (1.0 + t.abs()))
    {
        return Err(Error::input("trajectories are recorded on different time grids"));
    }
    let mut gap = TrajectoryGap {
        max_l2: 0.0,
        max_energy_gap: 0.0,
        at_time: 0.0,
    };
    for k in 0..a.times.len() {
        let d = a.states[k].sub(&b.states[k])?.norm();
        if d > gap.max_l2 {
            gap.max_l2 = d;
            gap.at_time = a.times[k];
        }
        gap.max_energy_gap = gap.max_energy_gap.max((a.energies[k] - b.energies[k]).abs());
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{EnergyKind, Functional};
    use crate::grid::{build_domain, Domain, MaskShape};
    use std::sync::Arc;

    fn unit(n: usize) -> Arc<Domain> {
        build_domain(1, &[(0.0, 1.0)], n, MaskShape::FullBox).unwrap()
    }

    #[test]
    fn mm_step_for_jd_has_closed_form() {
        let dom = unit(64);
        let u0 = GridField::from_fn(dom.clone(), |x| 1.0 + x[0]).unwrap();
        let tau = 1e-2;
        let p = FlowProblem::new(
            OperatorKind::Gradient(Functional::Jd.into()),
            u0.clone(),
            tau,
            tau,
            Scheme::MinimizingMovements,
            1,
        )
        .unwrap();
        let v = step(&p, &u0).unwrap();
        let a0 = u0.integral();
        let shift = 2.0 * tau * a0 / (1.0 - 2.0 * tau);
        for (x, y) in v.values().iter().zip(u0.values()) {
            assert!((x - y - shift).abs() <= 1e-9);
        }
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let dom = unit(32);
        let p = FlowProblem::new(
            OperatorKind::GradScaledJ(0.3),
            GridField::zeros(dom),
            0.01,
            1e-3,
            Scheme::MinimizingMovements,
            5,
        )
        .unwrap();
        let t = solve(&p).unwrap();
        assert!(t.states.iter().all(|s| s.values().iter().all(|v| *v == 0.0)));
        assert_eq!(t.times.len(), 3);
    }

    #[test]
    fn step_size_restrictions() {
        let dom = unit(32);
        let chi = GridField::indicator(dom);
        let big = FlowProblem::new(
            OperatorKind::GradJhat(0.5),
            chi.clone(),
            1.0,
            0.6,
            Scheme::MinimizingMovements,
            1,
        );
        assert!(big.is_err());
        let expl = FlowProblem::new(
            OperatorKind::GradJhat(0.01),
            chi.clone(),
            1.0,
            0.1,
            Scheme::ExplicitEuler,
            1,
        );
        assert!(expl.is_err());
        let neg = FlowProblem::new(
            OperatorKind::Gradient(EnergyKind::new(Functional::Jhat(0.5), -1.0).unwrap()),
            chi,
            0.1,
            1e-3,
            Scheme::MinimizingMovements,
            1,
        );
        assert!(neg.is_err());
    }

    #[test]
    fn closed_forms() {
        let dom = unit(16);
        let chi = GridField::indicator(dom.clone());
        let v = closed_form_decay(&chi, 0.25, 1).unwrap();
        assert!((v.values()[0] - (-1f64).exp()).abs() < 1e-15);
        let w = closed_form_average(&chi, 0.5, 1.0).unwrap();
        assert!(w.values().iter().all(|x| (x - 1f64.exp()).abs() < 1e-14));
        let z = closed_form_average(&chi, 0.0, -1.0).unwrap();
        assert_eq!(z.values(), chi.values());
    }

    #[test]
    fn explicit_euler_reaches_average_closed_form() {
        let dom = unit(16);
        let chi = GridField::indicator(dom.clone());
        let tau = 1e-5;
        let p = FlowProblem::new(
            OperatorKind::Gradient(Functional::Jd.into()),
            chi.clone(),
            0.5,
            tau,
            Scheme::ExplicitEuler,
            50_000,
        )
        .unwrap();
        let t = solve(&p).unwrap();
        let exact = closed_form_average(&chi, 0.5, 1.0).unwrap();
        assert!(t.final_state().sub(&exact).unwrap().norm() <= 1e-3);
    }

    #[test]
    fn mm_energy_is_monotone_and_norm_decays() {
        let dom = unit(128);
        let chi = GridField::indicator(dom);
        let p = FlowProblem::new(
            OperatorKind::GradScaledJ(0.1),
            chi.clone(),
            0.5,
            1e-3,
            Scheme::MinimizingMovements,
            100,
        )
        .unwrap();
        let t = solve(&p).unwrap();
        assert!(t.energy_monotone(1e-12));
        assert!(t.final_state().norm() < chi.norm());
        let gap = compare_trajectories(&t, &t).unwrap();
        assert_eq!(gap.max_l2, 0.0);
    }

    #[test]
    fn time_grid_mismatch_is_rejected() {
        let dom = unit(8);
        let chi = GridField::indicator(dom);
        let a = decay_trajectory(&chi, &[0.0, 0.1]).unwrap();
        let b = decay_trajectory(&chi, &[0.0, 0.2]).unwrap();
        assert!(compare_trajectories(&a, &b).is_err());
    }
}
