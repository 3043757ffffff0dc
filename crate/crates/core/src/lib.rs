//! Deterministic numerics for generalized Kähler geometry.
//!
//! The crate is organised bottom-up:
//!
//! * [`split`]: complex linear algebra on `V ⊕ V*` with the split pairing.
//! * [`point`]: pointwise bihermitian data, generalized complex pairs,
//!   Manin triples and the metric reconstruction.
//! * [`chart`]: finite-difference tensor calculus on coordinate charts.
//! * [`lie`]: the compact group `SU(2)×ℝ` inside `SL₂(ℂ)×ℂ`, factorizations
//!   and dressing actions.
//! * [`annulus`]: representation spaces of the decorated annulus and their
//!   quasi-symplectic 2-forms.
//! * [`hopf`]: the Hopf-surface coordinates and generalized Kähler potential.
//! * [`suite`]: verification batteries that produce [`report::SuiteReport`]s.

pub mod annulus;
pub mod chart;
pub mod error;
pub mod hopf;
pub mod lie;
pub mod point;
pub mod report;
pub mod rng;
pub mod split;
pub mod suite;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = nalgebra::Complex<f64>;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense real matrix.
pub type RMat = nalgebra::DMatrix<f64>;

/// Default tolerance for algebraic identities.
pub const DEFAULT_TOL: f64 = 1e-10;
