//! The experiments behind the command-line front end.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{DomainShape, Experiment, ExperimentConfig, InitialData};
use super::report::{Row, SweepReport};
use crate::error::{Error, Result};
use crate::flows::{
    average_trajectory, compare_trajectories, decay_trajectory, solve, FlowProblem, FlowTrajectory, Scheme,
    TrajectoryGap,
};
use crate::functionals::{certify, counterexample_sequence, Energy, EnergyKind, Functional};
use crate::grid::{build_domain, Domain, GridField, MaskShape};
use crate::kernels::check_fourier_identity;
use crate::operators::{gradient_check, Operator, OperatorKind};
use crate::special::sphere_measure;

/// Largest per-step energy increase, relative to ‖u_k‖², tolerated along a
/// minimizing-movements run.
pub const MONOTONE_TOL: f64 = 1e-12;

/// Cells per axis used by the counterexample scan, on the box (−2/n, 2/n)^d.
pub fn counterexample_cells(d: usize) -> usize {
    if d == 1 {
        64
    } else {
        32
    }
}

pub fn build_config_domain(cfg: &ExperimentConfig) -> Result<Arc<Domain>> {
    let bounds = vec![(0.0, 1.0); cfg.dim];
    let shape = match cfg.shape {
        DomainShape::Box => MaskShape::FullBox,
        DomainShape::Disk => MaskShape::Ball {
            center: vec![0.5, 0.5],
            radius: 0.5,
        },
    };
    build_domain(cfg.dim, &bounds, cfg.n, shape)
}

/// The initial datum named by `source` on `domain`.
pub fn initial_data(source: &InitialData, domain: &Arc<Domain>) -> Result<GridField> {
    let d = domain.dim();
    let center: Vec<f64> = (0..d).map(|a| 0.5 * (domain.lower()[a] + domain.upper()[a])).collect();
    let dist2 = move |x: [f64; 2], c: &[f64]| (0..c.len()).map(|a| (x[a] - c[a]).powi(2)).sum::<f64>();
    match source {
        InitialData::Indicator => Ok(GridField::indicator(domain.clone())),
        InitialData::Gaussian => GridField::from_fn(domain.clone(), |x| (-dist2(x, &center) / 0.15f64.powi(2)).exp()),
        InitialData::TwoBump => {
            let lo = domain.lower()[0];
            let width = domain.upper()[0] - lo;
            let mut left = center.clone();
            let mut right = center.clone();
            left[0] = lo + 0.3 * width;
            right[0] = lo + 0.7 * width;
            let w2 = 0.08f64.powi(2);
            let f = GridField::from_fn(domain.clone(), |x| {
                (-dist2(x, &left) / w2).exp() + (-dist2(x, &right) / w2).exp()
            })?;
            let mean = f.integral() / domain.measure();
            let vals = f.values().iter().map(|v| v - mean).collect();
            GridField::new(domain.clone(), vals)
        }
        InitialData::File(p) => GridField::read_from(p, Some(domain.clone())),
    }
}

fn random_field(domain: &Arc<Domain>, rng: &mut ChaCha8Rng) -> GridField {
    let v = (0..domain.masked_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    GridField::new(domain.clone(), v).expect("finite random values")
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// True when the values decrease strictly along the sequence.
fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Orders α values from farthest to closest to the limit.
fn toward_limit(alphas: &[f64], to_zero: bool) -> Vec<f64> {
    let mut a = alphas.to_vec();
    a.sort_by(|x, y| if to_zero { y.total_cmp(x) } else { x.total_cmp(y) });
    a
}

/// Runs an experiment and writes its outputs if an output path is set.
pub fn run(cfg: &ExperimentConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let report = match cfg.experiment {
        Experiment::SweepZero => sweep_zero(cfg)?,
        Experiment::SweepD => sweep_d(cfg)?,
        Experiment::FlowZeroScaled | Experiment::FlowZeroRenorm | Experiment::FlowDPlain | Experiment::FlowDRenorm => {
            flow_experiment(cfg)?
        }
        Experiment::FourierCheck => fourier(cfg)?,
        Experiment::GradCheck => grad_check(cfg)?,
        Experiment::Counterexample => counterexample(cfg)?,
        Experiment::Certify => certify_all(cfg)?,
    };
    if let Some(out) = &cfg.out {
        report.write(out, cfg.plot)?;
    }
    Ok(report)
}

fn new_report(cfg: &ExperimentConfig, domain: &Domain) -> SweepReport {
    SweepReport::new(cfg.experiment.id(), cfg.n, domain.spacing()[0])
}

fn sweep_zero(cfg: &ExperimentConfig) -> Result<SweepReport> {
    let dom = build_config_domain(cfg)?;
    let u = initial_data(&cfg.u0, &dom)?;
    let mut report = new_report(cfg, &dom);
    let d = cfg.dim;
    let limit_scaled = sphere_measure(d)? * u.norm_sq();
    let limit_hat = Energy::with_tolerance(Functional::Jhat0.into(), &dom, cfg.tol)?.value(&u)?;
    let alphas = toward_limit(&cfg.alphas, true);
    let rows: Vec<(Row, Row)> = alphas
        .par_iter()
        .map(|&a| {
            let t = Instant::now();
            let j = Energy::with_tolerance(Functional::J(a).into(), &dom, cfg.tol)?.value(&u)?;
            let jhat = j + sphere_measure(d)? / a * u.norm_sq();
            let ms = elapsed_ms(t);
            Ok((
                Row::new("-alpha*J", a, f64::NAN, -a * j)
                    .with_limit(limit_scaled)
                    .timed(ms),
                Row::new("Jhat", a, f64::NAN, jhat).with_limit(limit_hat).timed(ms),
            ))
        })
        .collect::<Result<_>>()?;
    let e1: Vec<f64> = rows.iter().map(|r| r.0.abs_error.unwrap()).collect();
    let e2: Vec<f64> = rows.iter().map(|r| r.1.abs_error.unwrap()).collect();
    report.check(
        "scaled-gap-decreasing",
        strictly_decreasing(&e1),
        "|-alpha*J - d*omega_d*|u|^2| shrinks as alpha decreases",
    );
    report.check(
        "renormalized-gap-decreasing",
        strictly_decreasing(&e2),
        "|Jhat - Jhat0| shrinks as alpha decreases",
    );
    if let Some(tol) = cfg.check_tol {
        let last = e1.last().copied().unwrap_or(f64::NAN);
        report.check("final-gap", last <= tol, format!("{last:e} <= {tol:e}"));
    }
    for (a, b) in rows {
        report.rows.push(a);
        report.rows.push(b);
    }
    report.sort_rows();
    Ok(report)
}

fn sweep_d(cfg: &ExperimentConfig) -> Result<SweepReport> {
    let dom = build_config_domain(cfg)?;
    let u = initial_data(&cfg.u0, &dom)?;
    let mut report = new_report(cfg, &dom);
    let jd = Energy::new(Functional::Jd.into(), &dom)?.value(&u)?;
    let jtd = Energy::with_tolerance(Functional::JtildeD.into(), &dom, cfg.tol)?.value(&u)?;
    let alphas = toward_limit(&cfg.alphas, false);
    let rows: Vec<(Row, Row)> = alphas
        .par_iter()
        .map(|&a| {
            let t = Instant::now();
            let j = Energy::with_tolerance(Functional::J(a).into(), &dom, cfg.tol)?.value(&u)?;
            let jt = Energy::with_tolerance(Functional::Jtilde(a).into(), &dom, cfg.tol)?.value(&u)?;
            let ms = elapsed_ms(t);
            Ok((
                Row::new("J", a, f64::NAN, j).with_limit(jd).timed(ms),
                Row::new("Jtilde", a, f64::NAN, jt).with_limit(jtd).timed(ms),
            ))
        })
        .collect::<Result<_>>()?;
    let e1: Vec<f64> = rows.iter().map(|r| r.0.abs_error.unwrap()).collect();
    let e2: Vec<f64> = rows.iter().map(|r| r.1.abs_error.unwrap()).collect();
    report.check(
        "plain-gap-decreasing",
        strictly_decreasing(&e1),
        "|J - Jd| shrinks as alpha increases",
    );
    report.check(
        "renormalized-gap-decreasing",
        strictly_decreasing(&e2),
        "|Jtilde - JtildeD| shrinks as alpha increases",
    );
    if let Some(tol) = cfg.check_tol {
        let worst = e1.last().unwrap().max(*e2.last().unwrap());
        report.check("final-gap", worst <= tol, format!("{worst:e} <= {tol:e}"));
    }
    for (a, b) in rows {
        report.rows.push(a);
        report.rows.push(b);
    }
    report.sort_rows();
    Ok(report)
}

/// The α-flow of a flow experiment.
pub fn alpha_flow_kind(experiment: Experiment, alpha: f64, sign: f64) -> Result<OperatorKind> {
    Ok(match experiment {
        Experiment::FlowZeroScaled => {
            if sign > 0.0 {
                OperatorKind::GradScaledJ(alpha)
            } else {
                // u_t = +α(−Δ)^{−α/2}u, the reversed-sign flow
                OperatorKind::Gradient(EnergyKind::new(Functional::J(alpha), 1.0)?)
            }
        }
        Experiment::FlowZeroRenorm => OperatorKind::GradJhat(alpha),
        Experiment::FlowDPlain => OperatorKind::GradJ { alpha, sign },
        Experiment::FlowDRenorm => OperatorKind::GradJtilde { alpha, sign },
        _ => return Err(Error::Usage(format!("{experiment} is not a flow experiment"))),
    })
}

/// Certified λ of a flow's driving energy.
fn flow_lambda(op: &Operator) -> Result<f64> {
    let (energy, factor) = op.kind().driving_energy();
    Ok(factor * certify(energy, op.domain())?.lambda)
}

/// Result of one α run of a flow experiment.
#[derive(Debug, Clone)]
pub struct FlowRun {
    pub alpha: f64,
    pub gap: TrajectoryGap,
    pub worst_energy_increase: f64,
    /// max over recorded times of ‖u(t) − u0‖.
    pub drift: f64,
    pub runtime_ms: f64,
}

/// All runs of a flow experiment, plus the limit flow's own diagnostics.
#[derive(Debug, Clone)]
pub struct FlowStudy {
    pub tau: f64,
    pub runs: Vec<FlowRun>,
    pub limit_worst_energy_increase: f64,
}

fn make_problem(op: Operator, u0: &GridField, cfg: &ExperimentConfig, tau: f64) -> Result<FlowProblem> {
    FlowProblem::with_operator(op, u0.clone(), cfg.t_final, tau, cfg.scheme, cfg.record_every)
}

/// Solves the α-flows and the limit flow of a flow experiment and compares
/// them on a common time grid.
pub fn flow_study(cfg: &ExperimentConfig, u0: &GridField) -> Result<FlowStudy> {
    let dom = u0.domain().clone();
    let ops: Vec<Operator> = cfg
        .alphas
        .par_iter()
        .map(|&a| Operator::with_tolerance(alpha_flow_kind(cfg.experiment, a, cfg.sign)?, &dom, cfg.tol))
        .collect::<Result<_>>()?;
    let limit_op = match cfg.experiment {
        Experiment::FlowZeroRenorm => Some(Operator::with_tolerance(OperatorKind::Laplacian0, &dom, cfg.tol)?),
        Experiment::FlowDRenorm => Some(Operator::with_tolerance(
            OperatorKind::Gradient(EnergyKind::new(Functional::JtildeD, cfg.sign)?),
            &dom,
            cfg.tol,
        )?),
        _ => None,
    };
    let tau = match cfg.tau {
        Some(t) => t,
        None => {
            let mut tau: f64 = 1e-3;
            for op in ops.iter().chain(limit_op.iter()) {
                tau = tau.min(match cfg.scheme {
                    Scheme::MinimizingMovements => 0.1 / flow_lambda(op)?,
                    Scheme::ExplicitEuler => 0.5 / op.norm_bound(),
                });
            }
            tau
        }
    };

    let limit = match limit_op {
        Some(op) => Some(solve(&make_problem(op, u0, cfg, tau)?)?),
        None => None,
    };
    let runs: Vec<(FlowRun, Vec<f64>)> = cfg
        .alphas
        .par_iter()
        .zip(ops)
        .map(|(&alpha, op)| {
            let t = Instant::now();
            let traj = solve(&make_problem(op, u0, cfg, tau)?)?;
            let reference = match &limit {
                Some(l) => l.clone(),
                None => closed_form_limit(cfg, u0, &traj.times)?,
            };
            let gap = compare_trajectories(&traj, &reference)?;
            let mut drift: f64 = 0.0;
            for s in &traj.states {
                drift = drift.max(s.sub(u0)?.norm());
            }
            Ok((
                FlowRun {
                    alpha,
                    gap,
                    worst_energy_increase: traj.worst_energy_increase,
                    drift,
                    runtime_ms: elapsed_ms(t),
                },
                traj.times,
            ))
        })
        .collect::<Result<_>>()?;
    Ok(FlowStudy {
        tau,
        runs: runs.into_iter().map(|r| r.0).collect(),
        limit_worst_energy_increase: limit.map_or(f64::NEG_INFINITY, |l| l.worst_energy_increase),
    })
}

fn closed_form_limit(cfg: &ExperimentConfig, u0: &GridField, times: &[f64]) -> Result<FlowTrajectory> {
    match cfg.experiment {
        Experiment::FlowZeroScaled => {
            if cfg.sign > 0.0 {
                decay_trajectory(u0, times)
            } else {
                // u_t = 2dω_d u: growth instead of decay
                let mut t = decay_trajectory(u0, times)?;
                let c = sphere_measure(u0.domain().dim())?;
                for (k, &s) in times.iter().enumerate() {
                    t.states[k] = u0.scaled((2.0 * c * s).exp());
                    t.energies[k] = -c * t.states[k].norm_sq();
                }
                Ok(t)
            }
        }
        Experiment::FlowDPlain => average_trajectory(u0, times, cfg.sign),
        _ => Err(Error::Usage("no closed-form limit for this experiment".into())),
    }
}

fn flow_experiment(cfg: &ExperimentConfig) -> Result<SweepReport> {
    if cfg.experiment == Experiment::FlowZeroRenorm && cfg.sign < 0.0 {
        return Err(Error::Usage("flow-zero-renorm runs with sign +1 only".into()));
    }
    let dom = build_config_domain(cfg)?;
    let u0 = initial_data(&cfg.u0, &dom)?;
    let mut report = new_report(cfg, &dom);
    let study = flow_study(cfg, &u0)?;
    let to_zero = matches!(cfg.experiment, Experiment::FlowZeroScaled | Experiment::FlowZeroRenorm);
    let mut runs = study.runs.clone();
    runs.sort_by(|a, b| {
        if to_zero {
            b.alpha.total_cmp(&a.alpha)
        } else {
            a.alpha.total_cmp(&b.alpha)
        }
    });

    for r in &runs {
        let param = cfg.t_final;
        report
            .rows
            .push(Row::new("l2_gap", r.alpha, param, r.gap.max_l2).timed(r.runtime_ms));
        report
            .rows
            .push(Row::new("energy_gap", r.alpha, param, r.gap.max_energy_gap));
        report.rows.push(Row::new("drift_from_u0", r.alpha, param, r.drift));
        report.rows.push(Row::new(
            "energy_increase",
            r.alpha,
            study.tau,
            r.worst_energy_increase.max(0.0),
        ));
    }
    if cfg.scheme == Scheme::MinimizingMovements {
        let worst = runs
            .iter()
            .map(|r| r.worst_energy_increase)
            .fold(study.limit_worst_energy_increase, f64::max);
        report.check(
            "energy-monotone",
            worst <= MONOTONE_TOL,
            format!("largest relative step increase {:e}", worst.max(0.0)),
        );
    }
    let gaps: Vec<f64> = runs.iter().map(|r| r.gap.max_l2).collect();
    // the reversed-sign α → 0 flow has no convergence statement to check
    if !(cfg.experiment == Experiment::FlowZeroScaled && cfg.sign < 0.0) {
        report.check(
            "gap-decreasing",
            strictly_decreasing(&gaps),
            "sup-gap shrinks toward the limit",
        );
    }
    if let Some(tol) = cfg.check_tol {
        let last = *gaps.last().unwrap();
        report.check("final-gap", last <= tol, format!("{last:e} <= {tol:e}"));
    }
    report.sort_rows();
    Ok(report)
}

fn fourier(cfg: &ExperimentConfig) -> Result<SweepReport> {
    let mut report = SweepReport::new(cfg.experiment.id(), cfg.quad_n, f64::NAN);
    let tol = cfg.check_tol.unwrap_or(1e-6);
    let mut worst: f64 = 0.0;
    for &a in &cfg.alphas {
        let t = Instant::now();
        let c = check_fourier_identity(a, cfg.dim, cfg.quad_n)?;
        let ms = elapsed_ms(t);
        let q = cfg.quad_n as f64;
        report.rows.push(Row::new("lhs", a, q, c.lhs).timed(ms));
        report.rows.push(Row::new("rhs", a, q, c.rhs));
        report.rows.push(Row::new("relative_error", a, q, c.relative_error));
        worst = worst.max(c.relative_error);
    }
    report.check("relative-error", worst <= tol, format!("{worst:e} <= {tol:e}"));
    report.sort_rows();
    Ok(report)
}

/// Every functional at the given α, each α-free functional once.
pub fn all_functionals(alphas: &[f64]) -> Vec<Functional> {
    let mut out = Vec::new();
    for &a in alphas {
        out.extend([
            Functional::J(a),
            Functional::Jhat(a),
            Functional::G1(a),
            Functional::J1(a),
            Functional::Jtilde(a),
        ]);
    }
    out.extend([
        Functional::G1(0.0),
        Functional::J1(0.0),
        Functional::Jhat0,
        Functional::Jd,
        Functional::JtildeD,
    ]);
    out
}

fn grad_check(cfg: &ExperimentConfig) -> Result<SweepReport> {
    let dom = build_config_domain(cfg)?;
    let mut report = new_report(cfg, &dom);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let u = random_field(&dom, &mut rng);
    // a one-signed direction keeps E(φ) away from zero for every functional,
    // so the relative slope comparison is not swamped by rounding
    let phi = GridField::new(
        dom.clone(),
        (0..dom.masked_count()).map(|_| rng.gen_range(0.0..1.0)).collect(),
    )?;
    let tol = cfg.check_tol.unwrap_or(1e-6);
    let ts = [1e-1, 1e-2, 1e-3];
    let mut worst: f64 = 0.0;
    for f in all_functionals(&cfg.alphas) {
        let kind = EnergyKind::new(f, cfg.sign)?;
        let t = Instant::now();
        let q = Energy::with_tolerance(kind, &dom, cfg.tol)?.value(&phi)?.abs();
        let table = gradient_check(kind, &u, &phi, &ts)?;
        let ms = elapsed_ms(t);
        let alpha = f.alpha().unwrap_or(f64::NAN);
        for row in table {
            let slope = row.defect / row.t;
            let rel = if q > 0.0 { (slope - q).abs() / q } else { slope };
            worst = worst.max(rel);
            report.rows.push(
                Row::new(format!("defect_over_t:{}", f.name()), alpha, row.t, slope)
                    .with_limit(q)
                    .timed(ms),
            );
        }
    }
    report.check(
        "slope-matches-energy",
        worst <= tol,
        format!("worst relative mismatch {worst:e} <= {tol:e}"),
    );
    report.sort_rows();
    Ok(report)
}

/// One point of the counterexample scan.
#[derive(Debug, Clone, Copy)]
pub struct CounterexamplePoint {
    pub n: f64,
    pub alpha: f64,
    pub norm: f64,
    pub g1: f64,
}

/// Evaluates ‖v_n‖ and G1^α(v_n) for n = 10^k on a box (−2/n, 2/n)^d.
pub fn counterexample_scan(d: usize, exponents: &[f64], alphas: &[f64], tol: f64) -> Result<Vec<CounterexamplePoint>> {
    let cells = counterexample_cells(d);
    let mut out = Vec::new();
    for &k in exponents {
        let n = 10f64.powf(k);
        let dom = build_domain(d, &vec![(-2.0 / n, 2.0 / n); d], cells, MaskShape::FullBox)?;
        let v = counterexample_sequence(n, &dom)?;
        let pts: Vec<CounterexamplePoint> = alphas
            .par_iter()
            .map(|&alpha| {
                let g1 = Energy::with_tolerance(Functional::G1(alpha).into(), &dom, tol)?.value(&v)?;
                Ok(CounterexamplePoint {
                    n,
                    alpha,
                    norm: v.norm(),
                    g1,
                })
            })
            .collect::<Result<_>>()?;
        out.extend(pts);
    }
    Ok(out)
}

fn counterexample(cfg: &ExperimentConfig) -> Result<SweepReport> {
    let mut report = SweepReport::new(cfg.experiment.id(), counterexample_cells(cfg.dim), f64::NAN);
    let pts = counterexample_scan(cfg.dim, &cfg.exponents, &cfg.alphas, cfg.tol)?;
    let mut witness = None;
    let mut seen_n = Vec::new();
    for p in &pts {
        if !seen_n.contains(&p.n.to_bits()) {
            seen_n.push(p.n.to_bits());
            report.rows.push(Row::new("norm", f64::NAN, p.n, p.norm));
        }
        report.rows.push(Row::new("G1", p.alpha, p.n, p.g1));
        if witness.is_none() && p.norm <= 0.5 && p.g1 >= 10.0 {
            witness = Some(*p);
        }
    }
    let detail = match witness {
        Some(p) => format!("n={:e} alpha={} norm={:.4} G1={:.4}", p.n, p.alpha, p.norm, p.g1),
        None => "no scanned pair has norm <= 0.5 and G1 >= 10".into(),
    };
    report.check("small-norm-large-energy", witness.is_some(), detail);
    report.sort_rows();
    Ok(report)
}

fn certify_all(cfg: &ExperimentConfig) -> Result<SweepReport> {
    let dom = build_config_domain(cfg)?;
    let mut report = new_report(cfg, &dom);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let samples: Vec<GridField> = (0..10).map(|_| random_field(&dom, &mut rng)).collect();
    let mut ok = true;
    let mut skipped = Vec::new();
    for f in all_functionals(&cfg.alphas) {
        let kind = EnergyKind::new(f, cfg.sign)?;
        let cert = match certify(kind, &dom) {
            Ok(c) => c,
            Err(Error::Input(_)) => {
                skipped.push(f.name());
                continue;
            }
            Err(e) => return Err(e),
        };
        let e = Energy::with_tolerance(kind, &dom, cfg.tol)?;
        let mut worst = f64::INFINITY;
        for u in &samples {
            let v = e.value(u)? + 0.5 * cert.lambda * u.norm_sq();
            worst = worst.min(v / u.norm_sq());
        }
        ok &= cert.lambda > 2.0 * cert.witness_bound && worst >= -1e-8;
        let alpha = f.alpha().unwrap_or(f64::NAN);
        report.rows.push(Row::new(
            format!("lambda:{}", f.name()),
            alpha,
            cert.witness_bound,
            cert.lambda,
        ));
        report.rows.push(Row::new(
            format!("min_shifted_energy:{}", f.name()),
            alpha,
            cert.lambda,
            worst,
        ));
    }
    let detail = if skipped.is_empty() {
        String::new()
    } else {
        format!("no certificate for negated {}", skipped.join(" "))
    };
    report.check("lambda-positivity", ok, detail);
    report.sort_rows();
    Ok(report)
}
