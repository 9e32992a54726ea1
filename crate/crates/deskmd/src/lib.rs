//! Desk-scale molecular dynamics, rigid-body docking, and parallel-scaling
//! benchmarks in one crate.
//!
//! The library is organized around three workflows:
//!
//! * a three-stage simulation pipeline (energy minimization, NVT
//!   equilibration, production MD) over a truncated-shifted
//!   Lennard-Jones + Coulomb force field ([`mdsim`], [`potential`]),
//! * a rigid-body docking prototype with deterministic pose generation
//!   and pairwise-interaction scoring ([`docking`]),
//! * a benchmark harness that times either workflow across worker
//!   counts, computes speedup and efficiency, and fits a sequential
//!   fraction to the observed scaling ([`bench`]).
//!
//! All parallelism goes through [`exec`], an index-chunked worker pool
//! with deterministic result placement, so outputs are bit-identical
//! for any worker count.
//!
//! Units follow GROMACS conventions throughout: nanometers, picoseconds,
//! kJ/mol, atomic mass units, elementary charges.
//!
//! ```
//! use deskmd::system::MolecularSystem;
//! use deskmd::potential::{system_energy_forces, PotentialParams};
//!
//! // Two argon atoms at the Lennard-Jones minimum separation.
//! let sigma = 0.3405;
//! let eps = 0.996;
//! let r_min = 2f64.powf(1.0 / 6.0) * sigma;
//! let sys = MolecularSystem::argon_pair(r_min);
//!
//! let pot = PotentialParams { shift_at_cutoff: false, ..PotentialParams::default() };
//! let ef = system_energy_forces(&sys, &pot, None).unwrap();
//! assert!((ef.potential_energy - (-eps)).abs() < 1e-9);
//! ```

pub mod bench;
pub mod cli;
pub mod docking;
pub mod error;
pub mod exec;
pub mod geom;
pub mod mdsim;
pub mod plot;
pub mod potential;
pub mod structio;
pub mod system;
pub mod units;

pub use error::Error;
pub type Result<T> = std::result::Result<T, Error>;
