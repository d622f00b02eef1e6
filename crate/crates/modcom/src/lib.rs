//! Modular commutators, chiral central charge, and modular currents for
//! two-dimensional lattice states.
//!
//! The crate has three computational backends and a shared geometric and
//! symbolic layer:
//!
//! * [`dense`] — exact linear algebra on small qudit systems: reduced
//!   density matrices, modular Hamiltonians `K = -ln rho`, entropies,
//!   conditional mutual information, and the modular commutator
//!   `J(A,B,C) = i Tr(rho [K_AB, K_BC])`.
//! * [`fermion`] — occupation-basis operators with fermion-number parity:
//!   the mod-2-charge-preserving trace channel, standalone reduced density
//!   matrices, and the same information quantities for fermionic states.
//! * [`gaussian`] — free-fermion states represented by Majorana covariance
//!   matrices, with entropies, entanglement kernels, and the modular
//!   commutator evaluated in quadratic-kernel form.
//!
//! On top of the backends, [`lattice`] provides triangular-lattice disks and
//! tripartitions, [`current`] implements the exact symbolic calculus of
//! modular currents on coarse-grained disks (with rational coefficients in
//! units of the bulk commutator) plus numeric evaluation, [`markov`] bundles
//! the conditional-independence diagnostics, and [`models`] builds reference
//! states: product and random states, conditional-independence ensembles,
//!  GHZ, a two-band Chern insulator, a chiral p-wave superconductor, and the
//! toric code.
//!
//! The headline quantity is the chiral central charge estimate
//! `c_minus = 3 J(A,B,C) / pi` extracted from a single bulk wave function.

pub mod current;
pub mod dense;
pub mod error;
pub mod fermion;
pub mod gaussian;
pub mod lattice;
pub mod markov;
pub mod models;
pub mod svg;

pub use error::{Error, Result};
pub use lattice::{Cell, Disk, DiskPartition, Region, TriLattice};
