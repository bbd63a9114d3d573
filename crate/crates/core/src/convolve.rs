//! Discrete convolution ũ ∗ k restricted to the masked cells.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Domain, GridField};
use crate::kernels::KernelTable;

/// Masked-cell count up to which `Method::Auto` sums directly.
pub const DIRECT_LIMIT: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Direct,
    Fft,
    /// Direct for small masks, FFT otherwise.
    Auto,
}

#[derive(Clone)]
struct Spectral {
    padded: [usize; 2],
    /// Transform of the zero-padded kernel, stored column-major (transposed).
    kernel_hat: Vec<Complex64>,
    fwd: [Arc<dyn Fft<f64>>; 2],
    inv: [Arc<dyn Fft<f64>>; 2],
}

/// A kernel table bound to a domain together with the chosen summation path.
#[derive(Clone)]
pub struct ConvolutionPlan {
    table: Arc<KernelTable>,
    spectral: Option<Spectral>,
}

impl fmt::Debug for ConvolutionPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConvolutionPlan")
            .field("kernel", self.table.spec())
            .field("method", &self.method())
            .field("padded_size", &self.padded_size())
            .finish()
    }
}

impl ConvolutionPlan {
    pub fn new(table: KernelTable, method: Method) -> Result<Self> {
        Self::from_shared(Arc::new(table), method)
    }

    pub fn from_shared(table: Arc<KernelTable>, method: Method) -> Result<Self> {
        let domain = table.domain().clone();
        let use_fft = match method {
            Method::Direct => false,
            Method::Fft => true,
            Method::Auto => domain.masked_count() > DIRECT_LIMIT,
        };
        let spectral = use_fft.then(|| spectral_kernel(&table, &domain));
        Ok(ConvolutionPlan { table, spectral })
    }

    pub fn domain(&self) -> &Arc<Domain> {
        self.table.domain()
    }

    pub fn table(&self) -> &KernelTable {
        &self.table
    }

    /// The resolved method: `Direct` or `Fft`.
    pub fn method(&self) -> Method {
        if self.spectral.is_some() {
            Method::Fft
        } else {
            Method::Direct
        }
    }

    /// Transform size per axis on the FFT path.
    pub fn padded_size(&self) -> Option<Vec<usize>> {
        self.spectral.as_ref().map(|s| s.padded[..self.domain().dim()].to_vec())
    }

    /// Convolves a vector of masked-cell values and returns masked-cell values.
    pub(crate) fn apply_values(&self, u: &[f64]) -> Vec<f64> {
        match &self.spectral {
            Some(s) => self.apply_fft(s, u),
            None => self.apply_direct(u),
        }
    }

    fn apply_direct(&self, u: &[f64]) -> Vec<f64> {
        let dom = self.domain();
        let cells = dom.masked_cells();
        let vol = dom.cell_volume();
        let t = &self.table;
        let idx: Vec<[isize; 2]> = cells
            .iter()
            .map(|&c| {
                let m = dom.multi_index(c);
                [m[0] as isize, m[1] as isize]
            })
            .collect();
        idx.par_iter()
            .map(|a| {
                let mut s = 0.0;
                for (b, uj) in idx.iter().zip(u) {
                    s += uj * t.weight([a[0] - b[0], a[1] - b[1]]);
                }
                s * vol
            })
            .collect()
    }

    fn apply_fft(&self, s: &Spectral, u: &[f64]) -> Vec<f64> {
        let dom = self.domain();
        let [p0, p1] = s.padded;
        let mut buf = vec![Complex64::new(0.0, 0.0); p0 * p1];
        for (&c, &v) in dom.masked_cells().iter().zip(u) {
            let m = dom.multi_index(c);
            buf[m[0] * p1 + m[1]] = Complex64::new(v, 0.0);
        }
        let mut buf = forward(&buf, s);
        for (b, k) in buf.iter_mut().zip(&s.kernel_hat) {
            *b *= k;
        }
        // inverse: columns (length p0) in transposed layout, then rows
        s.inv[0].process(&mut buf);
        let mut out = transpose(&buf, p1, p0);
        s.inv[1].process(&mut out);
        let scale = dom.cell_volume() / (p0 * p1) as f64;
        dom.masked_cells()
            .iter()
            .map(|&c| {
                let m = dom.multi_index(c);
                out[m[0] * p1 + m[1]].re * scale
            })
            .collect()
    }
}

fn grid_shape(dom: &Domain) -> [usize; 2] {
    let n = dom.cells_per_axis();
    [n[0], if dom.dim() == 2 { n[1] } else { 1 }]
}

/// Row transforms, transpose, row transforms: returns the 2-D transform in
/// transposed (p1 × p0) layout.
fn forward(buf: &[Complex64], s: &Spectral) -> Vec<Complex64> {
    let [p0, p1] = s.padded;
    let mut rows = buf.to_vec();
    s.fwd[1].process(&mut rows);
    let mut cols = transpose(&rows, p0, p1);
    s.fwd[0].process(&mut cols);
    cols
}

/// Transposes a row-major `r × c` array.
fn transpose(a: &[Complex64], r: usize, c: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len()];
    for i in 0..r {
        for j in 0..c {
            out[j * r + i] = a[i * c + j];
        }
    }
    out
}

fn spectral_kernel(table: &KernelTable, dom: &Domain) -> Spectral {
    let n = grid_shape(dom);
    let padded = [
        (2 * n[0] - 1).next_power_of_two(),
        if dom.dim() == 2 {
            (2 * n[1] - 1).next_power_of_two()
        } else {
            1
        },
    ];
    let mut planner = FftPlanner::new();
    let fwd = [planner.plan_fft_forward(padded[0]), planner.plan_fft_forward(padded[1])];
    let inv = [planner.plan_fft_inverse(padded[0]), planner.plan_fft_inverse(padded[1])];
    let [p0, p1] = padded;
    let half = table.half_extent();
    let mut k = vec![Complex64::new(0.0, 0.0); p0 * p1];
    for a in -(half[0] as isize)..=half[0] as isize {
        for b in -(half[1] as isize)..=half[1] as isize {
            let i = a.rem_euclid(p0 as isize) as usize;
            let j = b.rem_euclid(p1 as isize) as usize;
            k[i * p1 + j] = Complex64::new(table.weight([a, b]), 0.0);
        }
    }
    let mut s = Spectral {
        padded,
        kernel_hat: Vec::new(),
        fwd,
        inv,
    };
    s.kernel_hat = forward(&k, &s);
    s
}

/// v(x_i) = Σ_j u(x_j) weight(i - j) h^d over masked cells.
pub fn convolve(plan: &ConvolutionPlan, u: &GridField) -> Result<GridField> {
    if !plan.domain().same_as(u.domain()) {
        return Err(Error::input("field and convolution plan live on different domains"));
    }
    Ok(GridField::from_raw(
        plan.domain().clone(),
        plan.apply_values(u.values()),
    ))
}

/// Σ |weight| h^d, Young's bound for the L² operator norm of the convolution.
pub fn operator_norm_bound(table: &KernelTable) -> f64 {
    let vol = table.domain().cell_volume();
    table.weights().iter().map(|w| w.abs()).sum::<f64>() * vol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_domain, MaskShape};
    use crate::kernels::{build_table, KernelKind, KernelSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_interval(n: usize) -> Arc<Domain> {
        build_domain(1, &[(0.0, 1.0)], n, MaskShape::FullBox).unwrap()
    }

    fn plan(kind: KernelKind, dom: &Arc<Domain>, m: Method) -> ConvolutionPlan {
        let spec = KernelSpec::new(kind, dom.dim()).unwrap();
        ConvolutionPlan::new(build_table(spec, dom, 1e-10).unwrap(), m).unwrap()
    }

    fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        let den: f64 = b.iter().map(|y| y * y).sum();
        (num / den).sqrt()
    }

    #[test]
    fn padded_size_prevents_wraparound() {
        let dom = unit_interval(100);
        let p = plan(KernelKind::Log, &dom, Method::Fft);
        assert_eq!(p.padded_size(), Some(vec![256]));
        let p = plan(KernelKind::Log, &dom, Method::Auto);
        assert_eq!(p.method(), Method::Direct);
    }

    #[test]
    fn delta_reproduces_weights() {
        let dom = unit_interval(16);
        for m in [Method::Direct, Method::Fft] {
            let p = plan(KernelKind::Riesz { alpha: 0.3 }, &dom, m);
            let mut u = GridField::zeros(dom.clone());
            let mut vals = u.values().to_vec();
            vals[5] = 1.0;
            u = GridField::new(dom.clone(), vals).unwrap();
            let v = convolve(&p, &u).unwrap();
            for i in 0..16 {
                let want = p.table().weight([i as isize - 5, 0]) * dom.cell_volume();
                assert!((v.values()[i] - want).abs() <= 1e-12 * want.abs());
            }
        }
    }

    #[test]
    fn constant_kernel_integrates_indicator() {
        let dom = unit_interval(40);
        let p = plan(KernelKind::Constant, &dom, Method::Direct);
        let v = convolve(&p, &GridField::indicator(dom.clone())).unwrap();
        assert!(v.values().iter().all(|x| (x - 1.0).abs() < 1e-13));
    }

    #[test]
    fn riesz_of_indicator_matches_antiderivative() {
        let alpha = 0.5;
        let dom = unit_interval(1024);
        let p = plan(KernelKind::Riesz { alpha }, &dom, Method::Auto);
        let v = convolve(&p, &GridField::indicator(dom.clone())).unwrap();
        for (i, got) in v.values().iter().enumerate() {
            let x = dom.cell_center(i)[0];
            let want = (x.powf(alpha) + (1.0 - x).powf(alpha)) / alpha;
            assert!(((got - want) / want).abs() <= 1e-3);
        }
    }

    #[test]
    fn fft_matches_direct_on_a_disk() {
        let dom = build_domain(
            2,
            &[(-1.0, 1.0), (-1.0, 1.0)],
            24,
            MaskShape::Ball {
                center: vec![0.0, 0.0],
                radius: 0.9,
            },
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vals: Vec<f64> = (0..dom.masked_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = GridField::new(dom.clone(), vals).unwrap();
        for kind in [
            KernelKind::Riesz { alpha: 0.4 },
            KernelKind::Log,
            KernelKind::TailRiesz { alpha: 0.0 },
        ] {
            let a = convolve(&plan(kind, &dom, Method::Direct), &u).unwrap();
            let b = convolve(&plan(kind, &dom, Method::Fft), &u).unwrap();
            assert!(rel_l2(b.values(), a.values()) <= 1e-10);
        }
    }

    #[test]
    fn norm_bounds() {
        let dom = unit_interval(64);
        let c = build_table(KernelSpec::new(KernelKind::Constant, 1).unwrap(), &dom, 1e-10).unwrap();
        // 2n - 1 offsets of unit weight
        assert!((operator_norm_bound(&c) - (2.0 - dom.spacing()[0])).abs() < 1e-13);
        let l = build_table(KernelSpec::new(KernelKind::Log, 1).unwrap(), &dom, 1e-10).unwrap();
        let r = 1.0 - 0.5 / 64.0f64;
        let want = 2.0 * r * (1.0 - r.ln());
        assert!((operator_norm_bound(&l) - want).abs() < 1e-12);
    }

    #[test]
    fn rejects_foreign_field() {
        let p = plan(KernelKind::Log, &unit_interval(8), Method::Direct);
        let u = GridField::indicator(unit_interval(9));
        assert!(matches!(convolve(&p, &u), Err(Error::Input(_))));
    }
}
