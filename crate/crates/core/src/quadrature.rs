//! One-dimensional quadrature rules used by the kernel tables and the
//! Fourier-constant check.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Maximum bisection depth for adaptive rules.
pub const MAX_DEPTH: usize = 24;

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(mid + half * x);
        }
        s * half
    }

    /// Returns (∫f, ∫|f|) from a single pass over the nodes.
    pub fn integrate_with_abs<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> (f64, f64) {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let (mut s, mut sa) = (0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(mid + half * x);
            s += w * v;
            sa += w * v.abs();
        }
        (s * half, sa * half)
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { p0 } else { p1 };
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, dp)
}

fn gl10() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    R.get_or_init(|| GaussLegendre::new(10))
}

fn gl20() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    R.get_or_init(|| GaussLegendre::new(20))
}

/// Adaptive Gauss–Legendre on [a, b]: a 10-point and a 20-point rule are
/// compared on each panel and the panel is bisected until they agree to
/// `tol` relative to the larger of the panel's and the whole interval's
/// integral of |f|.
pub fn adaptive_gauss<F: Fn(f64) -> f64>(a: f64, b: f64, tol: f64, f: &F) -> Result<f64> {
    fn rec<F: Fn(f64) -> f64>(a: f64, b: f64, tol: f64, f: &F, depth: usize, global: f64) -> Result<f64> {
        let coarse = gl10().integrate(a, b, f);
        let (fine, scale) = gl20().integrate_with_abs(a, b, f);
        let err = (fine - coarse).abs();
        if err <= tol * scale.max(global) || err <= 1e-300 {
            return Ok(fine);
        }
        if depth >= MAX_DEPTH {
            return Err(Error::Quadrature {
                tol,
                depth,
                context: format!("panel [{a:e}, {b:e}]"),
            });
        }
        let m = 0.5 * (a + b);
        Ok(rec(a, m, tol, f, depth + 1, global)? + rec(m, b, tol, f, depth + 1, global)?)
    }
    if b <= a {
        return Ok(0.0);
    }
    let (_, global) = gl20().integrate_with_abs(a, b, f);
    rec(a, b, tol, f, 0, global)
}

/// ∫_0^∞ f(x) dx by the exp-sinh (double exponential) rule
/// x = exp(π/2 · sinh t), which absorbs algebraic endpoint singularities at 0.
///
/// The trapezoidal sum starts with `base_nodes` nodes on t ∈ [-T, T] and the
/// step is halved until successive sums agree to `tol` relatively.
pub fn exp_sinh<F: Fn(f64) -> f64>(f: &F, base_nodes: usize, tol: f64) -> Result<f64> {
    if base_nodes < 2 {
        return Err(Error::input("exp_sinh needs at least 2 base nodes"));
    }
    const T: f64 = 6.0;
    let eval = |t: f64| {
        let s = 0.5 * PI * t.sinh();
        let x = s.exp();
        let dx = 0.5 * PI * t.cosh() * x;
        if x == 0.0 || !x.is_finite() || !dx.is_finite() {
            return 0.0;
        }
        let v = f(x) * dx;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let mut step = 2.0 * T / base_nodes as f64;
    let mut count = base_nodes;
    let mut sum: f64 = (0..=count).map(|k| eval(-T + k as f64 * step)).sum();
    let mut estimate = sum * step;
    for level in 0..MAX_DEPTH {
        // add midpoints of the current grid
        let mids: f64 = (0..count).map(|k| eval(-T + (k as f64 + 0.5) * step)).sum();
        sum += mids;
        count *= 2;
        step *= 0.5;
        let next = sum * step;
        if (next - estimate).abs() <= tol * next.abs() && level >= 1 {
            return Ok(next);
        }
        estimate = next;
    }
    Err(Error::Quadrature {
        tol,
        depth: MAX_DEPTH,
        context: "exp-sinh rule on [0, inf)".into(),
    })
}
