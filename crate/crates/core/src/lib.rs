//! Numerical toolkit for differential equations with reflecting boundary
//! conditions, driven by paths of finite p-variation.
//!
//! The library covers two driving regimes:
//!
//! * **Young regime** (`1 <= p < 2`): the equation `dY = sigma(Y) dx + dPhi`
//!   is solved by a step-frozen Euler scheme in which every step is a
//!   Skorohod problem with constant coefficient matrix.
//! * **Rough regime** (`2 <= p < 3`): the driver is a level-2 rough path
//!   `(X^1, X^2)` and every Euler step solves a small fixed-point problem
//!   coupling the second-order germ with the reflection term.
//!
//! Layout:
//!
//! * [`grid`] — sampled paths on strictly increasing time grids.
//! * [`norms`] — sup-oscillation and exact grid p-variation (dynamic program).
//! * [`control`] — superadditive control functions `omega(s,t)` used to size
//!   partitions and normalise remainder estimates.
//! * [`young`] — Young integrals as compensated (trapezoidal) grid sums.
//! * [`rough`] — level-2 rough paths, piecewise-linear lifts, Chen defects,
//!   and the inhomogeneous p-variation distance.
//! * [`domain`] — the reflecting domain catalogue (half-space, orthant,
//!   ball, convex polyhedron) with its geometric constants.
//! * [`skorohod`] — discrete Skorohod solvers (explicit one-dimensional
//!   formula and projection recursion) plus a priori local-time bounds.
//! * [`vfield`] — coefficient fields `sigma` with first and second
//!   derivatives and declared bounds.
//! * [`young_reflect`] — the reflected Euler scheme in the Young regime,
//!   adaptive partitions, remainder profiles, refinement studies.
//! * [`rough_reflect`] — the implicit reflected Euler scheme in the rough
//!   regime, the enlarged (path, reflection) rough path, remainder profiles,
//!   and a posteriori solution verification.
//! * [`brownian`] — seeded Brownian samples, dyadic interpolants, lifts.
//! * [`wongzakai`] — piecewise-linear (Wong-Zakai) approximation
//!   experiments: strong error curves and integral-gap curves.
//! * [`io`] — CSV serialisation for paths and rough paths, key-value
//!   domain files.
//! * [`synth`] — deterministic synthetic drivers (Holder-rough and smooth)
//!   for tests and experiments.
//!
//! Conventions fixed project-wide: vectors use the Euclidean norm, matrices
//! and higher tensors the max-absolute-entry norm; grid integrals against
//! `dx` use left-point sums inside the solvers (so that per-step bookkeeping
//! identities hold to round-off) while the public Young integral uses the
//! compensated trapezoidal sum; second-level increments are stored as
//! base-anchored tensors `A_t = X^2_{0,t}` so that two-parameter values are
//! reconstructed through Chen's identity.

pub mod brownian;
pub mod control;
pub mod domain;
pub mod error;
pub mod grid;
pub mod io;
pub mod norms;
pub mod rough;
pub mod rough_reflect;
pub mod skorohod;
pub mod synth;
pub mod tensor;
pub mod vfield;
pub mod wongzakai;
pub mod young;
pub mod young_reflect;

pub use error::{Error, Result};
pub use grid::GridPath;
