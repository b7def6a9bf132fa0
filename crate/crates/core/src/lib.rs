//! Explicit, time-reversible symplectic integration of N-body Hamiltonians
//! on the surface of a sphere.
//!
//! The kinetic term of a particle on the sphere,
//! `p_theta^2 / 2m + p_phi^2 / (2m sin^2 theta)`, is not separable, but it is
//! hierarchical: the `phi` part depends only on coordinates that precede it.
//! Splitting the Hamiltonian as `H1(p_theta) + H2(theta, p_phi) + H3(theta, phi)`
//! gives exactly solvable sub-flows whose symmetric composition is an explicit
//! second-order symplectic step ([`integrators::sesi2_step`]); a Yoshida triple
//! concatenation lifts it to fourth order ([`integrators::sesi4_step`]).
//!
//! Crate layout:
//!
//! - [`phase`]: canonical state types and guards.
//! - [`hamiltonian`]: the split-Hamiltonian interface and the three-body
//!   benchmark Hamiltonian.
//! - [`integrators`]: SESI steppers plus implicit-midpoint and Dormand–Prince
//!   baselines.
//! - [`oracle`]: closed-form reduced solution of the symmetric three-body
//!   configuration.
//! - [`diagnostics`]: energy / angular-momentum monitors and convergence study.
//! - [`hierarchy`]: the generic scheme for any hierarchical kinetic term.
//! - [`cli`]: the `sesi` command-line harness.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod hamiltonian;
pub mod hierarchy;
pub mod integrators;
pub mod numeric;
pub mod oracle;
pub mod phase;

pub use error::{Error, Result};
pub use hamiltonian::{SphereNBodyHamiltonian, SplitHamiltonian};
pub use phase::{BodyState, PhaseState, SphereParams};
