//! Quantum circuit evolution for set partitioning problems.
//!
//! The crate models weighted set partitioning instances, encodes them as
//! penalized QUBOs and Z-diagonal Ising Hamiltonians, and minimizes the
//! resulting energies three ways on an exact statevector simulator:
//!
//! - **AF-QCE** — a (1+4) evolutionary search over free-form circuits built
//!   from rotation and controlled-rotation gates;
//! - **APCD-QCE** — the same search behind a fixed Trotterized prefix, with
//!   the evolving suffix restricted to a pseudo-counterdiabatic gate pool;
//! - **VQE** — a fixed two-local ansatz optimized by a derivative-free
//!   simplex method, as a baseline.
//!
//! Expectations can be evaluated exactly or from sampled shots, with an
//! optional depolarizing trajectory-noise model. The `harness` module
//! reproduces multi-run experiments with median approximation ratios; the
//! companion `qce` binary exposes the same workflows on the command line.

pub mod error;
pub mod evolution;
pub mod harness;
pub mod problem;
pub mod rng;
pub mod simulator;
pub mod vqe;

pub use error::{Error, Result};
