//! Radial interaction kernels and their cell-averaged tables.
//!
//! Every kernel is a function of |z| only. Tables store, for each lattice
//! offset `o`, the average of the kernel over the cell centered at `o·h`:
//!
//! ```text
//!     weight(o) = h^{-d} ∫_{cell(o)} k(z) dz
//! ```
//!
//! Cell integrals are computed in polar coordinates around the origin with an
//! exact radial antiderivative, so the only numerical quadrature is over the
//! angle, which is smooth between cell corners. In one dimension everything is
//! exact.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Domain;
use crate::quadrature;
use crate::special::{gamma_fn, sphere_measure};

/// Smallest distance of α from the endpoints 0 and d accepted for plain
/// Riesz kernels.
pub const ALPHA_MARGIN: f64 = 1e-3;

pub const DEFAULT_TABLE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    /// |z|^{α-d}
    Riesz { alpha: f64 },
    /// |z|^{α-d} χ_{|z| ≤ R}. α = 0 is allowed; the origin cell is then dropped.
    TruncatedRiesz { alpha: f64, radius: f64 },
    /// |z|^{α-d} χ_{|z| > 1}. α = 0 is allowed.
    TailRiesz { alpha: f64 },
    /// log(1/|z|)
    Log,
    /// (|z|^{α-d} - 1)/(d - α)
    DiffQuotient { alpha: f64 },
    /// ≡ 1
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub dim: usize,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, dim: usize) -> Result<Self> {
        let spec = KernelSpec { kind, dim };
        spec.validate()?;
        Ok(spec)
    }

    pub fn riesz(alpha: f64, dim: usize) -> Result<Self> {
        Self::new(KernelKind::Riesz { alpha }, dim)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.dim) {
            return Err(Error::input("kernel dimension must be 1 or 2"));
        }
        let d = self.dim as f64;
        let plain = |alpha: f64| {
            if alpha.is_finite() && (ALPHA_MARGIN..=d - ALPHA_MARGIN).contains(&alpha) {
                Ok(())
            } else {
                Err(Error::input(format!(
                    "alpha = {alpha} outside [{ALPHA_MARGIN}, {}]",
                    d - ALPHA_MARGIN
                )))
            }
        };
        let with_zero = |alpha: f64| if alpha == 0.0 { Ok(()) } else { plain(alpha) };
        match self.kind {
            KernelKind::Riesz { alpha } => plain(alpha),
            KernelKind::TruncatedRiesz { alpha, radius } => {
                if !(radius.is_finite() && radius > 0.0) {
                    return Err(Error::input("truncation radius must be positive"));
                }
                with_zero(alpha)
            }
            KernelKind::TailRiesz { alpha } => with_zero(alpha),
            KernelKind::DiffQuotient { alpha } => {
                if alpha.is_finite() && alpha > 0.0 && alpha < d {
                    Ok(())
                } else {
                    Err(Error::input(format!("alpha = {alpha} outside (0, {d})")))
                }
            }
            KernelKind::Log | KernelKind::Constant => Ok(()),
        }
    }

    fn profile(&self) -> (Profile, Clip) {
        match self.kind {
            KernelKind::Riesz { alpha } => (Profile::Power(alpha), Clip::None),
            KernelKind::TruncatedRiesz { alpha, radius } => (Profile::Power(alpha), Clip::Inside(radius)),
            KernelKind::TailRiesz { alpha } => (Profile::Power(alpha), Clip::Outside(1.0)),
            KernelKind::Log => (Profile::Log, Clip::None),
            KernelKind::DiffQuotient { alpha } => (Profile::DiffQuotient(alpha), Clip::None),
            KernelKind::Constant => (Profile::Constant, Clip::None),
        }
    }

    /// True when the kernel has no finite integral over the origin cell.
    fn singular_origin(&self) -> bool {
        matches!(self.kind, KernelKind::TruncatedRiesz { alpha, .. } if alpha == 0.0)
    }

    fn is_singular(&self) -> bool {
        matches!(
            self.kind,
            KernelKind::Riesz { .. }
                | KernelKind::TruncatedRiesz { .. }
                | KernelKind::Log
                | KernelKind::DiffQuotient { .. }
        )
    }
}

/// Radial profile f(r) of a kernel.
#[derive(Debug, Clone, Copy)]
enum Profile {
    Power(f64),
    Log,
    DiffQuotient(f64),
    Constant,
}

#[derive(Debug, Clone, Copy)]
enum Clip {
    None,
    Inside(f64),
    Outside(f64),
}

impl Profile {
    fn value(&self, d: usize, r: f64) -> f64 {
        let d = d as f64;
        match *self {
            Profile::Power(alpha) => r.powf(alpha - d),
            Profile::Log => -r.ln(),
            Profile::DiffQuotient(alpha) => {
                let eps = d - alpha;
                (-eps * r.ln()).exp_m1() / eps
            }
            Profile::Constant => 1.0,
        }
    }

    /// ∫_{r1}^{r2} f(s) s^{d-1} ds for 0 ≤ r1 ≤ r2.
    fn radial_integral(&self, d: usize, r1: f64, r2: f64) -> f64 {
        match *self {
            Profile::Power(alpha) => power_shell(alpha, r1, r2),
            _ => self.radial_primitive(d, r2) - self.radial_primitive(d, r1),
        }
    }

    fn radial_primitive(&self, d: usize, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let df = d as f64;
        let rd = r.powi(d as i32);
        match *self {
            Profile::Power(alpha) => r.powf(alpha) / alpha,
            Profile::Log => rd / (df * df) - rd * r.ln() / df,
            Profile::DiffQuotient(alpha) => {
                let eps = df - alpha;
                rd * ((-eps * r.ln()).exp_m1() / (eps * alpha) + 1.0 / (df * alpha))
            }
            Profile::Constant => rd / df,
        }
    }
}

/// ∫_{r1}^{r2} s^{α-1} ds, written to stay accurate for small α and thin shells.
fn power_shell(alpha: f64, r1: f64, r2: f64) -> f64 {
    if r2 <= r1 {
        return 0.0;
    }
    if r1 == 0.0 {
        return if alpha > 0.0 {
            r2.powf(alpha) / alpha
        } else {
            f64::INFINITY
        };
    }
    let l = (r2 / r1).ln();
    if alpha == 0.0 {
        l
    } else {
        r1.powf(alpha) * (alpha * l).exp_m1() / alpha
    }
}

fn clip_range(clip: Clip, r1: f64, r2: f64) -> Option<(f64, f64)> {
    let (a, b) = match clip {
        Clip::None => (r1, r2),
        Clip::Inside(rad) => (r1, r2.min(rad)),
        Clip::Outside(rad) => (r1.max(rad), r2),
    };
    (b > a).then_some((a, b))
}

/// Splits [a, b] into its reflections onto [0, ∞).
fn fold_interval(a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    let neg = (a < 0.0).then(|| ((-b).max(0.0), -a));
    let pos = (b > 0.0).then(|| (a.max(0.0), b));
    neg.into_iter().chain(pos).filter(|(l, h)| h > l)
}

/// ∫ over the axis-aligned cell [lo, hi] of the clipped radial profile.
fn cell_integral(profile: Profile, clip: Clip, dim: usize, lo: [f64; 2], hi: [f64; 2], tol: f64) -> Result<f64> {
    if dim == 1 {
        let mut s = 0.0;
        for (r1, r2) in fold_interval(lo[0], hi[0]) {
            if let Some((a, b)) = clip_range(clip, r1, r2) {
                s += profile.radial_integral(1, a, b);
            }
        }
        return Ok(s);
    }
    let mut s = 0.0;
    for (x0, x1) in fold_interval(lo[0], hi[0]) {
        for (y0, y1) in fold_interval(lo[1], hi[1]) {
            s += quadrant_integral(profile, clip, [x0, x1], [y0, y1], tol)?;
        }
    }
    Ok(s)
}

/// Integral over a rectangle in the closed first quadrant, in polar form.
fn quadrant_integral(profile: Profile, clip: Clip, xs: [f64; 2], ys: [f64; 2], tol: f64) -> Result<f64> {
    let [x0, x1] = xs;
    let [y0, y1] = ys;
    let rmin = x0.hypot(y0);
    let rmax = x1.hypot(y1);
    match clip {
        Clip::Inside(r) if rmin >= r => return Ok(0.0),
        Clip::Outside(r) if rmax <= r => return Ok(0.0),
        _ => {}
    }
    let th_lo = y0.atan2(x1);
    let th_hi = y1.atan2(x0);
    let mut breaks = vec![th_lo, th_hi, y1.atan2(x1)];
    if rmin > 0.0 {
        breaks.push(y0.atan2(x0));
    }
    if let Clip::Inside(r) | Clip::Outside(r) = clip {
        if r > rmin && r < rmax {
            for x in [x0, x1] {
                if x < r {
                    let y = (r * r - x * x).sqrt();
                    if y > y0 && y < y1 {
                        breaks.push(y.atan2(x));
                    }
                }
            }
            for y in [y0, y1] {
                if y < r {
                    let x = (r * r - y * y).sqrt();
                    if x > x0 && x < x1 {
                        breaks.push(y.atan2(x));
                    }
                }
            }
        }
    }
    breaks.retain(|t| *t >= th_lo && *t <= th_hi);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * (1.0 + b.abs()));

    let g = |th: f64| {
        let (s, c) = th.sin_cos();
        let r_in = (if x0 > 0.0 { x0 / c } else { 0.0 }).max(if y0 > 0.0 { y0 / s } else { 0.0 });
        let r_out = (x1 / c).min(y1 / s);
        match clip_range(clip, r_in, r_out) {
            Some((a, b)) => profile.radial_integral(2, a, b),
            None => 0.0,
        }
    };
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += quadrature::adaptive_gauss(w[0], w[1], tol, &g)?;
    }
    Ok(total)
}

/// Pointwise kernel value.
pub fn eval_kernel(spec: &KernelSpec, z: &[f64]) -> Result<f64> {
    spec.validate()?;
    if z.len() != spec.dim {
        return Err(Error::input("point dimension does not match the kernel"));
    }
    let r = z.iter().map(|c| c * c).sum::<f64>().sqrt();
    if r == 0.0 && spec.is_singular() {
        return Err(Error::Domain("kernel is singular at z = 0".into()));
    }
    let (profile, clip) = spec.profile();
    let inside = match clip {
        Clip::None => true,
        Clip::Inside(rad) => r <= rad,
        Clip::Outside(rad) => r > rad,
    };
    if !inside {
        return Ok(0.0);
    }
    if r == 0.0 {
        // only the tail and constant kernels reach here
        return Ok(match profile {
            Profile::Constant => 1.0,
            _ => 0.0,
        });
    }
    Ok(profile.value(spec.dim, r))
}

/// Cell averages of a kernel over the offset lattice of a domain.
#[derive(Debug, Clone)]
pub struct KernelTable {
    domain: Arc<Domain>,
    spec: KernelSpec,
    tol: f64,
    /// Largest |offset| per axis (n_k - 1); the second entry is 0 in 1-d.
    half: [usize; 2],
    weights: Vec<f64>,
    origin_dropped: bool,
}

impl KernelTable {
    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn half_extent(&self) -> [usize; 2] {
        self.half
    }

    /// Whether the origin weight was set to zero because the kernel is not
    /// integrable there.
    pub fn origin_dropped(&self) -> bool {
        self.origin_dropped
    }

    /// Raw weights, row-major over offsets `-half..=half` on each axis.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, offset: [isize; 2]) -> f64 {
        let w1 = 2 * self.half[1] + 1;
        let i = (offset[0] + self.half[0] as isize) as usize;
        let j = (offset[1] + self.half[1] as isize) as usize;
        self.weights[i * w1 + j]
    }

    /// Returns a copy with the origin weight replaced.
    pub fn with_origin_weight(&self, w: f64) -> KernelTable {
        let mut t = self.clone();
        let idx = self.half[0] * (2 * self.half[1] + 1) + self.half[1];
        t.weights[idx] = w;
        t
    }

    /// Adds `c·other` to this table, which must share its lattice.
    pub fn add_scaled(&self, c: f64, other: &KernelTable) -> Result<KernelTable> {
        if self.half != other.half || !self.domain.same_as(&other.domain) {
            return Err(Error::input("tables live on different lattices"));
        }
        let mut t = self.clone();
        for (w, o) in t.weights.iter_mut().zip(&other.weights) {
            *w += c * o;
        }
        Ok(t)
    }
}

/// Builds the cell-averaged table of `spec` for every offset in
/// `[-(n-1), n-1]^d`.
pub fn build_table(spec: KernelSpec, domain: &Arc<Domain>, tol: f64) -> Result<KernelTable> {
    spec.validate()?;
    if spec.dim != domain.dim() {
        return Err(Error::input("kernel and domain dimensions differ"));
    }
    if !(tol > 0.0) {
        return Err(Error::input("table tolerance must be positive"));
    }
    let d = domain.dim();
    let n = domain.cells_per_axis();
    let half = [n[0] - 1, if d == 2 { n[1] - 1 } else { 0 }];
    let h = [domain.spacing()[0], if d == 2 { domain.spacing()[1] } else { 1.0 }];
    let vol = domain.cell_volume();
    let (profile, clip) = spec.profile();
    let square = d == 2 && h[0] == h[1];

    // radial symmetry: compute the closed first quadrant of offsets only
    let quadrant: Vec<[usize; 2]> = (0..=half[0])
        .flat_map(|i| (0..=half[1]).map(move |j| [i, j]))
        .filter(|&[i, j]| !square || j <= i || j > half[0])
        .collect();
    let origin_dropped = spec.singular_origin();
    let values: Vec<f64> = quadrant
        .par_iter()
        .map(|&[i, j]| {
            if i == 0 && j == 0 && origin_dropped {
                return Ok(0.0);
            }
            let mut lo = [0.0; 2];
            let mut hi = [0.0; 2];
            for (a, o) in [i, j].into_iter().enumerate().take(d) {
                lo[a] = (o as f64 - 0.5) * h[a];
                hi[a] = (o as f64 + 0.5) * h[a];
            }
            Ok(cell_integral(profile, clip, d, lo, hi, tol)? / vol)
        })
        .collect::<Result<_>>()?;

    let mut quarter = vec![f64::NAN; (half[0] + 1) * (half[1] + 1)];
    for (&[i, j], v) in quadrant.iter().zip(&values) {
        quarter[i * (half[1] + 1) + j] = *v;
    }
    if square {
        for i in 0..=half[0] {
            for j in 0..=half[1] {
                if quarter[i * (half[1] + 1) + j].is_nan() {
                    quarter[i * (half[1] + 1) + j] = quarter[j * (half[1] + 1) + i];
                }
            }
        }
    }
    let w1 = 2 * half[1] + 1;
    let mut weights = vec![0.0; (2 * half[0] + 1) * w1];
    for a in 0..=2 * half[0] {
        let i = a.abs_diff(half[0]);
        for b in 0..w1 {
            let j = b.abs_diff(half[1]);
            weights[a * w1 + b] = quarter[i * (half[1] + 1) + j];
        }
    }
    Ok(KernelTable {
        domain: domain.clone(),
        spec,
        tol,
        half,
        weights,
        origin_dropped,
    })
}

/// ∫ of the unclipped |z|^{α-d} over `B_R ∖ C_0`, where C_0 is the origin
/// cell of a lattice with the given spacing. This is the total mass of a
/// `TruncatedRiesz(α, R)` table off the origin, including offsets beyond any
/// particular domain's lattice. Valid for α ∈ [0, d); requires C_0 ⊂ B_R.
pub fn truncated_offsite_mass(alpha: f64, radius: f64, spacing: &[f64], tol: f64) -> Result<f64> {
    let d = spacing.len();
    if !(1..=2).contains(&d) {
        return Err(Error::input("spacing must have 1 or 2 entries"));
    }
    if !(alpha >= 0.0 && alpha < d as f64) {
        return Err(Error::input(format!("alpha = {alpha} outside [0, {d})")));
    }
    let half_diag = spacing.iter().map(|h| (0.5 * h).powi(2)).sum::<f64>().sqrt();
    if half_diag >= radius {
        return Err(Error::input("origin cell is not contained in the truncation ball"));
    }
    let rho = 0.5 * spacing.iter().cloned().fold(f64::INFINITY, f64::min);
    let shell = sphere_measure(d)? * power_shell(alpha, rho, radius);
    let mut lo = [0.0; 2];
    let mut hi = [0.0; 2];
    for a in 0..d {
        lo[a] = -0.5 * spacing[a];
        hi[a] = 0.5 * spacing[a];
    }
    let corner = cell_integral(Profile::Power(alpha), Clip::Outside(rho), d, lo, hi, tol)?;
    Ok(shell - corner)
}

/// ‖k^α_R‖_{L¹(ℝ^d)} = dω_d R^α / α.
pub fn kernel_l1_truncated(alpha: f64, radius: f64, d: usize) -> Result<f64> {
    let df = d as f64;
    if !(alpha > 0.0 && alpha < df) {
        return Err(Error::input(format!("alpha = {alpha} outside (0, {d})")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::input("radius must be positive"));
    }
    Ok(sphere_measure(d)? * radius.powf(alpha) / alpha)
}

/// c(α, d) with 𝓕[k^α](ξ) = c(α, d) |ξ|^{-α}:
/// `2^α π^{d/2} Γ(α/2) / Γ((d-α)/2)`.
pub fn fourier_constant(alpha: f64, d: usize) -> Result<f64> {
    let df = d as f64;
    if d == 0 || !(alpha > 0.0 && alpha < df) {
        return Err(Error::input(format!("alpha = {alpha} outside (0, {d})")));
    }
    Ok(2f64.powf(alpha) * PI.powf(df / 2.0) * gamma_fn(alpha / 2.0)? / gamma_fn((df - alpha) / 2.0)?)
}

/// Both sides of the Parseval identity for the Gaussian φ(x) = e^{-|x|²}.
#[derive(Debug, Clone, Copy)]
pub struct FourierCheck {
    /// ∫ φ k^α
    pub lhs: f64,
    /// (2π)^{-d} c(α,d) ∫ 𝓕[φ](ξ) |ξ|^{-α} dξ
    pub rhs: f64,
    pub relative_error: f64,
}

/// Checks the Fourier transform of k^α in one dimension by computing
/// `∫ φ k^α` and `(2π)^{-1} c(α,1) ∫ 𝓕[φ] |ξ|^{-α}` independently.
///
/// The algebraic singularities at the origin are removed by the substitution
/// x = y^{1/p} before the exp-sinh rule is applied.
pub fn check_fourier_identity(alpha: f64, d: usize, quad_n: usize) -> Result<FourierCheck> {
    if d != 1 {
        return Err(Error::input("the Fourier check is implemented for d = 1"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::input(format!("alpha = {alpha} outside (0, 1)")));
    }
    let tol = 1e-14;
    // ∫_ℝ e^{-x²} |x|^{α-1} dx = (2/α) ∫_0^∞ exp(-y^{2/α}) dy
    let lhs = 2.0 / alpha * quadrature::exp_sinh(&|y: f64| (-y.powf(2.0 / alpha)).exp(), quad_n, tol)?;
    // ∫_ℝ √π e^{-ξ²/4} |ξ|^{-α} dξ = (2√π/β) ∫_0^∞ exp(-y^{2/β}/4) dy, β = 1-α
    let beta = 1.0 - alpha;
    let spectral =
        2.0 * PI.sqrt() / beta * quadrature::exp_sinh(&|y: f64| (-0.25 * y.powf(2.0 / beta)).exp(), quad_n, tol)?;
    let rhs = fourier_constant(alpha, 1)? * spectral / (2.0 * PI);
    Ok(FourierCheck {
        lhs,
        rhs,
        relative_error: ((lhs - rhs) / lhs).abs(),
    })
}

/// |k̃^α(z) - log(1/|z|)| / ((d-α) log²(1/|z|)), the normalized remainder of
/// the expansion of the difference-quotient kernel around α = d.
pub fn taylor_defect(alpha: f64, d: usize, z_abs: f64) -> Result<f64> {
    let df = d as f64;
    if !(alpha > 0.0 && alpha < df) {
        return Err(Error::input(format!("alpha = {alpha} outside (0, {d})")));
    }
    if !(z_abs > 0.0 && z_abs <= 1.0) {
        return Err(Error::input("z_abs must lie in (0, 1]"));
    }
    if z_abs == 1.0 {
        return Ok(0.0);
    }
    // with x = (d-α) log(1/|z|) the ratio is (e^x - 1 - x)/x²
    let x = (df - alpha) * (1.0 / z_abs).ln();
    let ratio = if x.abs() < 1e-4 {
        0.5 + x / 6.0 + x * x / 24.0
    } else {
        (x.exp_m1() - x) / (x * x)
    };
    Ok(ratio.abs())
}
