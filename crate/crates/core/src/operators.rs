//! First variations of the energies: Riesz and logarithmic potentials, the
//! 0-fractional Laplacian, and the gradients that drive the flows.
//!
//! Every operator is a linear combination
//!
//! ```text
//!     A u = a·u + Σ c_k (ũ ∗ k_k) + m·(∫u)·χ_Ω
//! ```
//!
//! with the convolutions restricted to Ω. Signs follow the convention that
//! each flow reads u_t = −A u.

use std::sync::Arc;

use crate::convolve::{operator_norm_bound, ConvolutionPlan, Method};
use crate::error::{Error, Result};
use crate::functionals::{Energy, EnergyKind, Functional};
use crate::grid::{dot, inner_product, Domain, GridField};
use crate::kernels::{build_table, truncated_offsite_mass, KernelKind, KernelSpec, DEFAULT_TABLE_TOL};
use crate::special::sphere_measure;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorKind {
    /// 2 ũ ∗ |z|^{α−d}
    RieszPotential(f64),
    /// Pointwise symmetric-difference form with zero extension.
    Laplacian0,
    /// 2 ũ ∗ log(1/|z|)
    LogPotential,
    /// α·RieszPotential(α), the gradient of −αJ^α.
    GradScaledJ(f64),
    /// −RieszPotential(α) + 2(dω_d/α)·u
    GradJhat(f64),
    /// ∓RieszPotential(α)
    GradJ { alpha: f64, sign: f64 },
    /// ∓(RieszPotential(α) − 2(∫u)χ_Ω)/(d − α)
    GradJtilde { alpha: f64, sign: f64 },
    /// Gradient of an arbitrary signed energy.
    Gradient(EnergyKind),
}

impl OperatorKind {
    /// The energy E with A = factor·∇E.
    pub fn driving_energy(&self) -> (EnergyKind, f64) {
        let with = |f: Functional, s: f64| EnergyKind { functional: f, sign: s };
        match *self {
            OperatorKind::RieszPotential(a) => (with(Functional::J(a), -1.0), 1.0),
            OperatorKind::Laplacian0 => (Functional::Jhat0.into(), 1.0),
            OperatorKind::LogPotential => (with(Functional::JtildeD, -1.0), 1.0),
            OperatorKind::GradScaledJ(a) => (with(Functional::J(a), -1.0), a),
            OperatorKind::GradJhat(a) => (Functional::Jhat(a).into(), 1.0),
            OperatorKind::GradJ { alpha, sign } => (with(Functional::J(alpha), sign), 1.0),
            OperatorKind::GradJtilde { alpha, sign } => (with(Functional::Jtilde(alpha), sign), 1.0),
            OperatorKind::Gradient(k) => (k, 1.0),
        }
    }
}

/// An operator prepared on a domain.
#[derive(Debug, Clone)]
pub struct Operator {
    kind: OperatorKind,
    domain: Arc<Domain>,
    identity: f64,
    terms: Vec<(f64, ConvolutionPlan)>,
    mean: f64,
}

impl Operator {
    pub fn new(kind: OperatorKind, domain: &Arc<Domain>) -> Result<Self> {
        Self::with_tolerance(kind, domain, DEFAULT_TABLE_TOL)
    }

    pub fn with_tolerance(kind: OperatorKind, domain: &Arc<Domain>, tol: f64) -> Result<Self> {
        let (energy, factor) = kind.driving_energy();
        let mut op = gradient_parts(energy, domain, tol)?;
        if factor != 1.0 {
            op.identity *= factor;
            op.mean *= factor;
            for t in &mut op.terms {
                t.0 *= factor;
            }
        }
        op.kind = kind;
        Ok(op)
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub(crate) fn apply_values(&self, u: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = u.iter().map(|v| self.identity * v).collect();
        for (c, plan) in &self.terms {
            for (o, v) in out.iter_mut().zip(plan.apply_values(u)) {
                *o += c * v;
            }
        }
        if self.mean != 0.0 {
            let m = self.mean * crate::grid::pairwise_sum(u) * self.domain.cell_volume();
            for o in &mut out {
                *o += m;
            }
        }
        out
    }

    pub fn apply(&self, u: &GridField) -> Result<GridField> {
        if !self.domain.same_as(u.domain()) {
            return Err(Error::input("field lives on a different domain than the operator"));
        }
        Ok(GridField::from_raw(self.domain.clone(), self.apply_values(u.values())))
    }

    /// ½⟨Au, u⟩, the quadratic energy whose gradient is A.
    pub fn energy(&self, u: &GridField) -> Result<f64> {
        let au = self.apply(u)?;
        Ok(0.5 * inner_product(&au, u)?)
    }

    pub(crate) fn energy_values(&self, u: &[f64]) -> f64 {
        0.5 * dot(&self.apply_values(u), u) * self.domain.cell_volume()
    }

    /// |a| + Σ |c_k| ‖k_k‖_{L¹} + |m|·|Ω|, a bound on the L² operator norm.
    pub fn norm_bound(&self) -> f64 {
        self.identity.abs()
            + self
                .terms
                .iter()
                .map(|(c, p)| c.abs() * operator_norm_bound(p.table()))
                .sum::<f64>()
            + self.mean.abs() * self.domain.measure()
    }
}

fn gradient_parts(kind: EnergyKind, domain: &Arc<Domain>, tol: f64) -> Result<Operator> {
    let d = domain.dim();
    kind.validate(d)?;
    let s = kind.sign;
    let plan = |k: KernelKind| -> Result<ConvolutionPlan> {
        let t = build_table(KernelSpec::new(k, d)?, domain, tol)?;
        ConvolutionPlan::new(t, Method::Auto)
    };
    // off-origin truncated kernel and the mass it leaves out
    let short = |a: f64| -> Result<(f64, ConvolutionPlan)> {
        let spec = KernelSpec::new(KernelKind::TruncatedRiesz { alpha: a, radius: 1.0 }, d)?;
        let t = build_table(spec, domain, tol)?.with_origin_weight(0.0);
        let mass = truncated_offsite_mass(a, 1.0, domain.spacing(), tol)?;
        Ok((mass, ConvolutionPlan::new(t, Method::Auto)?))
    };
    let mut op = Operator {
        kind: OperatorKind::Gradient(kind),
        domain: domain.clone(),
        identity: 0.0,
        terms: Vec::new(),
        mean: 0.0,
    };
    match kind.functional {
        Functional::J(a) => op.terms.push((-2.0 * s, plan(KernelKind::Riesz { alpha: a })?)),
        Functional::Jhat(a) => {
            op.identity = 2.0 * s * sphere_measure(d)? / a;
            op.terms.push((-2.0 * s, plan(KernelKind::Riesz { alpha: a })?));
        }
        Functional::G1(a) => {
            let (mass, p) = short(a)?;
            op.identity = 2.0 * s * mass;
            op.terms.push((-2.0 * s, p));
        }
        Functional::J1(a) => op.terms.push((-2.0 * s, plan(KernelKind::TailRiesz { alpha: a })?)),
        Functional::Jhat0 => {
            let (mass, p) = short(0.0)?;
            op.identity = 2.0 * s * mass;
            op.terms.push((-2.0 * s, p));
            op.terms.push((-2.0 * s, plan(KernelKind::TailRiesz { alpha: 0.0 })?));
        }
        Functional::Jd => op.mean = -2.0 * s,
        Functional::Jtilde(a) => op.terms.push((-2.0 * s, plan(KernelKind::DiffQuotient { alpha: a })?)),
        Functional::JtildeD => op.terms.push((-2.0 * s, plan(KernelKind::Log)?)),
    }
    Ok(op)
}

/// Applies an operator once, building its tables on the field's domain.
pub fn apply(kind: OperatorKind, u: &GridField) -> Result<GridField> {
    Operator::new(kind, u.domain())?.apply(u)
}

/// The L² gradient of a signed energy on a domain.
pub fn energy_gradient(kind: EnergyKind, domain: &Arc<Domain>) -> Result<Operator> {
    Operator::new(OperatorKind::Gradient(kind), domain)
}

/// One row of a directional-derivative check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientDefect {
    pub t: f64,
    /// (E(u + tφ) − E(u))/t
    pub quotient: f64,
    /// ⟨∇E(u), φ⟩
    pub directional: f64,
    pub defect: f64,
}

/// Compares difference quotients of `kind` with its gradient along φ.
///
/// For a quadratic energy the defect equals t·|E(φ)| up to rounding.
pub fn gradient_check(kind: EnergyKind, u: &GridField, phi: &GridField, t_list: &[f64]) -> Result<Vec<GradientDefect>> {
    u.check_same(phi)?;
    if t_list.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::input("step sizes must be positive"));
    }
    let e = Energy::new(kind, u.domain())?;
    let grad = energy_gradient(kind, u.domain())?;
    let e0 = e.value(u)?;
    let directional = inner_product(&grad.apply(u)?, phi)?;
    t_list
        .iter()
        .map(|&t| {
            let quotient = (e.value(&u.combine(1.0, phi, t)?)? - e0) / t;
            Ok(GradientDefect {
                t,
                quotient,
                directional,
                defect: (quotient - directional).abs(),
            })
        })
        .collect()
}
