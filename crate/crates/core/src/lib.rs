//! Riesz interaction energies on grids, their limits as the exponent tends to
//! 0 and to the dimension, and the gradient flows they drive.
//!
//! The crate works on uniform grids over a box in one or two dimensions with
//! an optional mask selecting Ω. Fields are zero-extended outside Ω. Kernels
//! are tabulated as exact cell averages, convolutions are summed directly or
//! by zero-padded FFT, and every energy is a quadratic form assembled from
//! those convolutions.
//!
//! ```
//! use riesz_flow::{build_domain, energy, Functional, GridField, MaskShape};
//!
//! let omega = build_domain(1, &[(0.0, 1.0)], 256, MaskShape::FullBox).unwrap();
//! let chi = GridField::indicator(omega);
//! let j = energy(Functional::J(0.5).into(), &chi).unwrap();
//! assert!((j + 8.0 / 3.0).abs() < 1e-2);
//! ```

// `!(x > 0.0)` is deliberate: it rejects NaN along with the rest.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod cli;
pub mod convolve;
pub mod error;
pub mod flows;
pub mod functionals;
pub mod grid;
pub mod kernels;
pub mod operators;
pub mod quadrature;
pub mod special;

pub use convolve::{convolve, operator_norm_bound, ConvolutionPlan, Method};
pub use error::{Error, Result};
pub use flows::{
    average_trajectory, closed_form_average, closed_form_decay, compare_trajectories, decay_trajectory, solve, step,
    FlowProblem, FlowTrajectory, Scheme, TrajectoryGap,
};
pub use functionals::{
    certify, counterexample_sequence, energy, h00_norm, CertificateKind, ConvexityCertificate, Energy, EnergyKind,
    Functional,
};
pub use grid::{build_domain, inner_product, Domain, GridField, MaskShape};
pub use kernels::{
    build_table, check_fourier_identity, eval_kernel, fourier_constant, kernel_l1_truncated, taylor_defect,
    truncated_offsite_mass, FourierCheck, KernelKind, KernelSpec, KernelTable,
};
pub use operators::{apply, energy_gradient, gradient_check, GradientDefect, Operator, OperatorKind};
pub use special::{ball_volume, gamma_fn, sphere_measure};
