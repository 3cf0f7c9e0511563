//! Recovery of a space-time source factor `h(t, x)` in the subdiffusion problem
//!
//! ```text
//! D_t^α u − u_xx − u_yy = g(t,x,y) + f(t,x,y)·h(t,x)   on (0,T)×(0,1)×(0,π)
//! ```
//!
//! with homogeneous Dirichlet walls, initial data `φ(x, y)` and the interior
//! trace `u(t, x, l0) = ψ(t, x)` as the extra measurement. The unknown field is
//! expanded in the sine basis in `y`, the Fourier modes are advanced with an
//! implicit L1 scheme, and the coupling through `h` is resolved by Picard
//! iteration in the weighted norm `Σ λ_k^{5/2+ε} ‖u_k‖²`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimates;
pub mod forward;
pub mod fracops;
pub mod inverse;
pub mod modesolver;
pub mod problem;
pub mod quad;
pub mod specfun;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use estimates::{compute_constants, verify_bounds, BoundCheck, EstimateReport};
pub use forward::{decompose_data, solve_forward, synthesize_data, FullField, ModeData};
pub use fracops::{caputo_l1, l1_weights, rl_integral, FracWeights, TimeGrid, WeightKind};
pub use inverse::{
    compute_mk, contraction_check, picard_iterate, reconstruct_h, solve_inverse, ConvergenceReport,
    InverseOutcome, InverseSetup, IterationState, RecoveredSource, SourceTermMk,
};
pub use modesolver::{
    solve_mode, step_mode, thomas_solve, ModeField, SpaceGrid, TridiagonalSystem,
};
pub use problem::{ProblemParams, ProblemSpec, Trace};
pub use specfun::{mittag_leffler, ml_bound, MLBound, MLParams};
pub use spectral::{
    coupling_sum, sine_coefficients, sine_synthesis, weighted_norm, SineBasis, SpectralState,
};
pub use verify::{convergence_study, manufactured_case, ConvergenceStudy, ManufacturedCase};
