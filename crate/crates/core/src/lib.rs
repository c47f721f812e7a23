//! Two-photon coherent-beat laser with phase fluctuation in the initial
//! atomic preparation.
//!
//! The crate covers the derived master-equation coefficients, the closed
//! first- and second-moment dynamics, closed-form propagators, a truncated
//! Fock-space oracle for the full master equation, a doubled-phase-space
//! Langevin Monte Carlo and Gaussian nonclassicality measures.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

// Negated comparisons reject NaN; index loops mirror the matrix formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analytic;
pub mod atomic;
pub mod coeffs;
pub mod error;
pub mod fock;
pub mod langevin;
pub mod linalg;
pub mod moments;
pub mod quant;
pub mod scalar;

pub use coeffs::{
    derive_coeffs, initial_atom, noise_diffusion, threshold_margin, DerivedCoeffs, InitialAtom, NoiseDiffusion,
    PhaseMode, PhysicalParams,
};
pub use error::{Error, Result};
pub use fock::FockConfig;
pub use moments::{FirstMoments, MomentState, SecondMoments};
pub use quant::NonclassicalityReport;
pub use scalar::{Cx, Real};

pub type Params = PhysicalParams<f64>;
pub type Coeffs = DerivedCoeffs<f64>;
pub type Noise = NoiseDiffusion<f64>;
pub type Phase = PhaseMode<f64>;
pub type State = MomentState<f64>;
pub type First = FirstMoments<f64>;
pub type Second = SecondMoments<f64>;
pub type Density = fock::DensityMatrix<f64>;
pub type Report = NonclassicalityReport<f64>;
pub type Complex = Cx<f64>;

pub type Params32 = PhysicalParams<f32>;
pub type Coeffs32 = DerivedCoeffs<f32>;
