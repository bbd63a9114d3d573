//! The quadratic interaction energies, the H⁰₀ norm and λ-convexity
//! certificates.

use std::sync::Arc;

use rayon::prelude::*;

use crate::convolve::{operator_norm_bound, ConvolutionPlan, Method};
use crate::error::{Error, Result};
use crate::grid::{dot, pairwise_sum, Domain, GridField};
use crate::kernels::{build_table, truncated_offsite_mass, KernelKind, KernelSpec, KernelTable, DEFAULT_TABLE_TOL};
use crate::special::sphere_measure;

/// Values above this are reported as +∞.
pub const DIVERGENCE_THRESHOLD: f64 = 1e300;

/// Relative margin added on top of twice the witness bound.
pub const CERTIFICATE_MARGIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional {
    /// −⟨ũ, ũ ∗ k^α⟩
    J(f64),
    /// J^α + (dω_d/α)‖u‖²
    Jhat(f64),
    /// Short-range Gagliardo-type part over |x − y| ≤ 1, α ∈ [0, d).
    G1(f64),
    /// Long-range part over Ω×Ω with |x − y| > 1, α ∈ [0, d).
    J1(f64),
    /// G1(0) + J1(0)
    Jhat0,
    /// −(∫u)²
    Jd,
    /// (J^α − J^d)/(d − α)
    Jtilde(f64),
    /// −⟨ũ, ũ ∗ log(1/|z|)⟩
    JtildeD,
}

impl Functional {
    pub fn alpha(&self) -> Option<f64> {
        match *self {
            Functional::J(a) | Functional::Jhat(a) | Functional::G1(a) | Functional::J1(a) | Functional::Jtilde(a) => {
                Some(a)
            }
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Functional::J(_) => "J",
            Functional::Jhat(_) => "Jhat",
            Functional::G1(_) => "G1",
            Functional::J1(_) => "J1",
            Functional::Jhat0 => "Jhat0",
            Functional::Jd => "Jd",
            Functional::Jtilde(_) => "Jtilde",
            Functional::JtildeD => "JtildeD",
        }
    }
}

/// A functional together with a ±1 multiplier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyKind {
    pub functional: Functional,
    pub sign: f64,
}

impl From<Functional> for EnergyKind {
    fn from(functional: Functional) -> Self {
        EnergyKind { functional, sign: 1.0 }
    }
}

impl EnergyKind {
    pub fn new(functional: Functional, sign: f64) -> Result<Self> {
        if sign != 1.0 && sign != -1.0 {
            return Err(Error::input("sign must be +1 or -1"));
        }
        Ok(EnergyKind { functional, sign })
    }

    pub fn negated(self) -> Self {
        EnergyKind {
            sign: -self.sign,
            ..self
        }
    }

    /// Checks the α range against the dimension.
    pub fn validate(&self, d: usize) -> Result<()> {
        if self.sign != 1.0 && self.sign != -1.0 {
            return Err(Error::input("sign must be +1 or -1"));
        }
        let df = d as f64;
        let open = |a: f64| {
            if a > 0.0 && a < df {
                Ok(())
            } else {
                Err(Error::input(format!("alpha = {a} outside (0, {d})")))
            }
        };
        match self.functional {
            Functional::J(a) | Functional::Jhat(a) | Functional::Jtilde(a) => open(a),
            Functional::G1(a) | Functional::J1(a) => {
                if a >= 0.0 && a < df {
                    Ok(())
                } else {
                    Err(Error::input(format!("alpha = {a} outside [0, {d})")))
                }
            }
            _ => Ok(()),
        }
    }
}

/// The short-range part, summed pair by pair.
#[derive(Debug, Clone)]
struct ShortRange {
    table: KernelTable,
    /// Mass of the truncated kernel off the origin cell.
    offsite: f64,
}

impl ShortRange {
    fn new(alpha: f64, domain: &Arc<Domain>, tol: f64) -> Result<Self> {
        let spec = KernelSpec::new(KernelKind::TruncatedRiesz { alpha, radius: 1.0 }, domain.dim())?;
        let table = build_table(spec, domain, tol)?;
        let offsite = truncated_offsite_mass(alpha, 1.0, domain.spacing(), tol)?;
        Ok(ShortRange { table, offsite })
    }

    /// ½ Σ_{i≠j} (u_i − u_j)² W_ij h^{2d} + Σ_i u_i² h^d (T − Σ_{j≠i} W_ij h^d).
    ///
    /// The second sum accounts for partners y ∉ Ω, where ũ(y) = 0.
    fn value(&self, u: &[f64]) -> f64 {
        let dom = self.table.domain();
        let vol = dom.cell_volume();
        let idx: Vec<[isize; 2]> = dom
            .masked_cells()
            .iter()
            .map(|&c| {
                let m = dom.multi_index(c);
                [m[0] as isize, m[1] as isize]
            })
            .collect();
        let rows: Vec<f64> = idx
            .par_iter()
            .zip(u.par_iter())
            .map(|(a, &ui)| {
                let mut diff = 0.0;
                let mut row = 0.0;
                for (b, &uj) in idx.iter().zip(u) {
                    if a == b {
                        continue;
                    }
                    let w = self.table.weight([a[0] - b[0], a[1] - b[1]]);
                    diff += (ui - uj) * (ui - uj) * w;
                    row += w;
                }
                let outside = (self.offsite - row * vol).max(0.0);
                0.5 * diff * vol * vol + ui * ui * vol * outside
            })
            .collect();
        pairwise_sum(&rows)
    }
}

/// An energy prepared on a domain: kernel tables and plans are built once.
#[derive(Debug, Clone)]
pub struct Energy {
    kind: EnergyKind,
    domain: Arc<Domain>,
    /// Contributes −⟨u, u ∗ k⟩.
    conv: Option<ConvolutionPlan>,
    l2_coeff: f64,
    mean_coeff: f64,
    short: Option<ShortRange>,
}

impl Energy {
    pub fn new(kind: EnergyKind, domain: &Arc<Domain>) -> Result<Self> {
        Self::with_tolerance(kind, domain, DEFAULT_TABLE_TOL)
    }

    pub fn with_tolerance(kind: EnergyKind, domain: &Arc<Domain>, tol: f64) -> Result<Self> {
        let d = domain.dim();
        kind.validate(d)?;
        let plan = |k: KernelKind| -> Result<ConvolutionPlan> {
            let t = build_table(KernelSpec::new(k, d)?, domain, tol)?;
            ConvolutionPlan::new(t, Method::Auto)
        };
        let mut e = Energy {
            kind,
            domain: domain.clone(),
            conv: None,
            l2_coeff: 0.0,
            mean_coeff: 0.0,
            short: None,
        };
        match kind.functional {
            Functional::J(a) => e.conv = Some(plan(KernelKind::Riesz { alpha: a })?),
            Functional::Jhat(a) => {
                e.conv = Some(plan(KernelKind::Riesz { alpha: a })?);
                e.l2_coeff = sphere_measure(d)? / a;
            }
            Functional::G1(a) => e.short = Some(ShortRange::new(a, domain, tol)?),
            Functional::J1(a) => e.conv = Some(plan(KernelKind::TailRiesz { alpha: a })?),
            Functional::Jhat0 => {
                e.short = Some(ShortRange::new(0.0, domain, tol)?);
                e.conv = Some(plan(KernelKind::TailRiesz { alpha: 0.0 })?);
            }
            Functional::Jd => e.mean_coeff = -1.0,
            Functional::Jtilde(a) => e.conv = Some(plan(KernelKind::DiffQuotient { alpha: a })?),
            Functional::JtildeD => e.conv = Some(plan(KernelKind::Log)?),
        }
        Ok(e)
    }

    pub fn kind(&self) -> EnergyKind {
        self.kind
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    /// Energy value; +∞ (times the sign) if the short-range sum diverged.
    pub fn value(&self, u: &GridField) -> Result<f64> {
        if !self.domain.same_as(u.domain()) {
            return Err(Error::input("field lives on a different domain than the energy"));
        }
        let vol = self.domain.cell_volume();
        let v = u.values();
        let mut total = 0.0;
        if let Some(s) = &self.short {
            let g = s.value(v);
            if !g.is_finite() || g > DIVERGENCE_THRESHOLD {
                return Ok(self.kind.sign * f64::INFINITY);
            }
            total += g;
        }
        if let Some(p) = &self.conv {
            total -= dot(v, &p.apply_values(v)) * vol;
        }
        if self.l2_coeff != 0.0 {
            total += self.l2_coeff * u.norm_sq();
        }
        if self.mean_coeff != 0.0 {
            let m = u.integral();
            total += self.mean_coeff * m * m;
        }
        Ok(self.kind.sign * total)
    }
}

/// Evaluates an energy, building its tables on the field's domain.
pub fn energy(kind: EnergyKind, u: &GridField) -> Result<f64> {
    Energy::new(kind, u.domain())?.value(u)
}

/// ‖u‖ + (2 G1⁰(u))^{1/2}; +∞ if the short-range sum diverged.
pub fn h00_norm(u: &GridField) -> Result<f64> {
    let g = energy(Functional::G1(0.0).into(), u)?;
    Ok(u.norm() + (2.0 * g.max(0.0)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    /// E + (λ/2)‖·‖² ≥ 0 only.
    Positivity,
    /// E + (λ/2)‖·‖² convex (equivalent to positivity for quadratic forms).
    Convexity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityCertificate {
    pub lambda: f64,
    pub kind: CertificateKind,
    /// The L¹ kernel (or |Ω|) bound C with λ > 2C.
    pub witness_bound: f64,
}

/// A λ for which `kind + (λ/2)‖·‖²` is convex on L²(Ω).
///
/// Kernel energies use Young's inequality with the table's L¹ mass. Energies
/// built from the renormalized split use |∫∫_{|x−y|>1} u u k| ≤ |Ω|‖u‖².
/// Negated short-range energies are unbounded below near zero and have no
/// certificate.
pub fn certify(kind: EnergyKind, domain: &Arc<Domain>) -> Result<ConvexityCertificate> {
    let d = domain.dim();
    kind.validate(d)?;
    let table_bound = |k: KernelKind| -> Result<f64> {
        Ok(operator_norm_bound(&build_table(
            KernelSpec::new(k, d)?,
            domain,
            DEFAULT_TABLE_TOL,
        )?))
    };
    let area = domain.measure();
    let (witness, cert) = match kind.functional {
        Functional::J(a) => (table_bound(KernelKind::Riesz { alpha: a })?, CertificateKind::Convexity),
        Functional::Jtilde(a) => (
            table_bound(KernelKind::DiffQuotient { alpha: a })?,
            CertificateKind::Convexity,
        ),
        Functional::JtildeD => (table_bound(KernelKind::Log)?, CertificateKind::Convexity),
        Functional::Jd | Functional::J1(_) => (area, CertificateKind::Convexity),
        Functional::Jhat(_) | Functional::G1(_) | Functional::Jhat0 => {
            if kind.sign < 0.0 {
                return Err(Error::input(format!(
                    "-{} is unbounded below near zero and has no convexity certificate",
                    kind.functional.name()
                )));
            }
            (area, CertificateKind::Positivity)
        }
    };
    Ok(ConvexityCertificate {
        lambda: 2.0 * witness * (1.0 + CERTIFICATE_MARGIN),
        kind: cert,
        witness_bound: witness,
    })
}

/// v_n = n^{d/2} / log^{1/4}(n) · χ_{B_{1/n}(0)} sampled at cell centers.
///
/// `n` is real so that the very large values needed to push ‖v_n‖ down in
/// one dimension remain representable.
pub fn counterexample_sequence(n: f64, domain: &Arc<Domain>) -> Result<GridField> {
    if !(n.is_finite() && n > 1.0) {
        return Err(Error::input("counterexample index must exceed 1"));
    }
    let d = domain.dim();
    let radius = 1.0 / n;
    if domain.spacing().iter().any(|&h| h >= radius) {
        return Err(Error::input("grid does not resolve the ball of radius 1/n"));
    }
    if (0..d).any(|a| domain.lower()[a] > 0.0 || domain.upper()[a] < 0.0) {
        return Err(Error::input("origin is not in the domain box"));
    }
    // n^{d/2} as exp to avoid overflow for huge n in 2-d
    let height = (0.5 * d as f64 * n.ln()).exp() / n.ln().powf(0.25);
    let vals: Vec<f64> = domain
        .masked_cells()
        .iter()
        .map(|&c| {
            let x = domain.cell_center(c);
            let r = x[..d].iter().map(|v| v * v).sum::<f64>().sqrt();
            if r < radius {
                height
            } else {
                0.0
            }
        })
        .collect();
    if vals.iter().all(|v| *v == 0.0) {
        return Err(Error::input("no masked cell center lies in the ball of radius 1/n"));
    }
    GridField::new(domain.clone(), vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_domain, MaskShape};

    fn unit(n: usize) -> Arc<Domain> {
        build_domain(1, &[(0.0, 1.0)], n, MaskShape::FullBox).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn indicator_closed_forms() {
        let dom = unit(1024);
        let chi = GridField::indicator(dom.clone());
        let a = 0.5;
        let j = energy(Functional::J(a).into(), &chi).unwrap();
        assert!(rel(j, -2.0 / (a * (a + 1.0))) <= 1e-3);
        let jh = energy(Functional::Jhat(a).into(), &chi).unwrap();
        assert!(rel(jh, 2.0 / (a + 1.0)) <= 1e-3);
        let g = energy(Functional::G1(a).into(), &chi).unwrap();
        assert!(rel(g, 2.0 / (a + 1.0)) <= 1e-3);
        assert_eq!(energy(Functional::J1(a).into(), &chi).unwrap(), 0.0);
        assert!((energy(Functional::Jd.into(), &chi).unwrap() + 1.0).abs() < 1e-12);
        assert!((energy(Functional::Jhat0.into(), &chi).unwrap() - 2.0).abs() <= 1e-2);
        assert!((energy(Functional::JtildeD.into(), &chi).unwrap() + 1.5).abs() <= 1e-2);
    }

    #[test]
    fn split_identity_on_a_longer_interval() {
        let dom = build_domain(1, &[(0.0, 2.5)], 200, MaskShape::FullBox).unwrap();
        let u = GridField::from_fn(dom.clone(), |x| (3.0 * x[0]).sin() + 0.3).unwrap();
        for a in [0.2, 0.7] {
            let jh = energy(Functional::Jhat(a).into(), &u).unwrap();
            let g = energy(Functional::G1(a).into(), &u).unwrap();
            let j1 = energy(Functional::J1(a).into(), &u).unwrap();
            assert!(rel(g + j1, jh) <= 1e-6, "{} vs {}", g + j1, jh);
        }
    }

    #[test]
    fn jtilde_matches_difference_quotient() {
        let dom = unit(256);
        let u = GridField::from_fn(dom.clone(), |x| 1.0 + x[0] * x[0]).unwrap();
        let a = 0.6;
        let j = energy(Functional::J(a).into(), &u).unwrap();
        let jd = energy(Functional::Jd.into(), &u).unwrap();
        let jt = energy(Functional::Jtilde(a).into(), &u).unwrap();
        assert!(rel(jt, (j - jd) / (1.0 - a)) <= 1e-9);
    }

    #[test]
    fn sign_and_ranges() {
        let dom = unit(32);
        let chi = GridField::indicator(dom.clone());
        let neg = EnergyKind::new(Functional::J(0.5), -1.0).unwrap();
        let a = energy(neg, &chi).unwrap();
        let b = energy(Functional::J(0.5).into(), &chi).unwrap();
        assert_eq!(a, -b);
        assert!(EnergyKind::new(Functional::Jd, 0.5).is_err());
        assert!(energy(Functional::J(1.0).into(), &chi).is_err());
        assert!(energy(Functional::G1(0.0).into(), &chi).is_ok());
        assert!(energy(Functional::G1(1.0).into(), &chi).is_err());
    }

    #[test]
    fn h00_of_indicator_and_zero() {
        let dom = unit(1024);
        assert_eq!(h00_norm(&GridField::zeros(dom.clone())).unwrap(), 0.0);
        let v = h00_norm(&GridField::indicator(dom)).unwrap();
        assert!((v - 3.0).abs() <= 1e-2);
    }

    #[test]
    fn certificates() {
        let dom = unit(256);
        let c = certify(Functional::J(0.5).into(), &dom).unwrap();
        assert!((c.lambda - 8.08).abs() < 0.1);
        assert!(c.lambda > 2.0 * c.witness_bound);
        let c = certify(Functional::Jhat(0.3).into(), &dom).unwrap();
        assert!((c.lambda - 2.02).abs() < 1e-12);
        let c = certify(Functional::JtildeD.into(), &dom).unwrap();
        assert!((c.lambda - 4.04).abs() < 0.05);
        assert!(certify(EnergyKind::new(Functional::Jhat(0.3), -1.0).unwrap(), &dom).is_err());
    }

    #[test]
    fn counterexample_plug_in() {
        let dom = build_domain(1, &[(-1.0, 1.0)], 128, MaskShape::FullBox).unwrap();
        let v = counterexample_sequence(4.0, &dom).unwrap();
        let height = 2.0 / 4f64.ln().powf(0.25);
        for (&c, &x) in dom.masked_cells().iter().zip(v.values()) {
            let center = dom.cell_center(c)[0];
            let want = if center.abs() < 0.25 { height } else { 0.0 };
            assert!((x - want).abs() < 1e-14);
        }
        assert!(counterexample_sequence(100.0, &dom).is_err());
    }
}
