//! The simplified pairwise force field: 12-6 Lennard-Jones plus point-charge
//! Coulomb, truncated and shifted at the cutoff, with Lorentz-Berthelot
//! combining, plus an optional harmonic restraint.
//!
//! Forces are exact analytic negative gradients of the reported energy
//! (the shift is a constant and does not alter forces). Pair interactions
//! use the minimum image convention when periodic.
//!
//! ```
//! use deskmd::potential::{system_energy_forces, PotentialParams};
//! use deskmd::system::MolecularSystem;
//!
//! // 64 argon atoms in a periodic 2.2 nm box; forces come back per atom.
//! let sys = MolecularSystem::argon_lattice(4, 2.2);
//! let pot = PotentialParams { periodic: true, ..PotentialParams::default() };
//! let ef = system_energy_forces(&sys, &pot, None).unwrap();
//! assert_eq!(ef.forces.len(), 64);
//!
//! // Newton's third law: the forces sum to (numerically) zero.
//! let total: f64 = ef.forces.iter().map(|f| f.norm()).fold(f64::MIN, f64::max);
//! let net = ef.forces.iter().fold(deskmd::geom::Vec3::ZERO, |a, &b| a + b);
//! assert!(net.norm() < 1e-9 * total.max(1.0));
//! ```

use crate::exec::{self, WorkerPoolConfig};
use crate::geom::{min_image_displacement, Vec3};
use crate::system::{Atom, MolecularSystem};
use crate::units::COULOMB_F;
use crate::{Error, Result};

/// Cutoff scheme and combining rules for the pair potential.
#[derive(Debug, Clone, Copy)]
pub struct PotentialParams {
    /// Pair cutoff radius in nm.
    pub cutoff: f64,
    /// Use minimum-image periodic displacements.
    pub periodic: bool,
    /// Shift the pair energy so it reaches zero continuously at the cutoff.
    pub shift_at_cutoff: bool,
}

impl Default for PotentialParams {
    fn default() -> Self {
        PotentialParams { cutoff: 1.0, periodic: false, shift_at_cutoff: true }
    }
}

/// Harmonic position restraint ½k‖x − center‖² applied to a set of atoms.
/// This is the external potential term of the equations of motion.
#[derive(Debug, Clone)]
pub struct Restraint {
    pub center: Vec3,
    /// Spring constant in kJ·mol⁻¹·nm⁻².
    pub spring_k: f64,
    pub atom_selection: Vec<usize>,
}

/// Total potential energy and per-atom forces.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyForces {
    pub potential_energy: f64,
    pub forces: Vec<Vec3>,
}

/// Per-atom nonbonded parameters for a single pair evaluation.
#[derive(Debug, Clone, Copy)]
pub struct PairParams {
    pub sigma: f64,
    pub epsilon: f64,
    pub charge: f64,
}

impl From<&Atom> for PairParams {
    fn from(a: &Atom) -> Self {
        PairParams { sigma: a.lj_sigma, epsilon: a.lj_epsilon, charge: a.charge }
    }
}

const OVERLAP_R2: f64 = 1e-24;

/// Energy and force on the second atom for one pair, given the displacement
/// from the first atom to the second.
///
/// Beyond the cutoff both are zero. With `shift_at_cutoff` the energy is
/// `V(r) − V(r_cut)` so it vanishes continuously at the cutoff; the force is
/// `−dV/dr` along the displacement direction either way.
pub fn pair_energy_force(
    r_vec: Vec3,
    params_i: PairParams,
    params_j: PairParams,
    pot: &PotentialParams,
) -> Result<(f64, Vec3)> {
    let r2 = r_vec.norm_sq();
    if r2 < OVERLAP_R2 {
        return Err(Error::OverlappingAtoms { i: 0, j: 0 });
    }
    if pot.cutoff.is_finite() && r2 >= pot.cutoff * pot.cutoff {
        return Ok((0.0, Vec3::ZERO));
    }
    let r = r2.sqrt();
    let (mut energy, dv_dr) = pair_terms(r, params_i, params_j);
    if pot.shift_at_cutoff && pot.cutoff.is_finite() {
        let (v_cut, _) = pair_terms(pot.cutoff, params_i, params_j);
        energy -= v_cut;
    }
    // force on j = -dV/dr · r̂ with r̂ from i to j
    let force_on_j = r_vec * (-dv_dr / r);
    Ok((energy, force_on_j))
}

/// Unshifted pair energy V(r) and radial derivative dV/dr.
fn pair_terms(r: f64, pi: PairParams, pj: PairParams) -> (f64, f64) {
    let mut energy = 0.0;
    let mut dv_dr = 0.0;
    // Lorentz-Berthelot combining
    let eps = (pi.epsilon * pj.epsilon).sqrt();
    if eps > 0.0 {
        let sigma = 0.5 * (pi.sigma + pj.sigma);
        let sr = sigma / r;
        let sr6 = sr.powi(6);
        let sr12 = sr6 * sr6;
        energy += 4.0 * eps * (sr12 - sr6);
        dv_dr += 4.0 * eps * (-12.0 * sr12 + 6.0 * sr6) / r;
    }
    let qq = pi.charge * pj.charge;
    if qq != 0.0 {
        energy += COULOMB_F * qq / r;
        dv_dr += -COULOMB_F * qq / (r * r);
    }
    (energy, dv_dr)
}

/// Total energy and forces for a system: all `i<j` pair terms (minimum
/// image when periodic) plus the restraint. Forces are the exact analytic
/// negative gradient.
pub fn system_energy_forces(
    system: &MolecularSystem,
    pot: &PotentialParams,
    restraint: Option<&Restraint>,
) -> Result<EnergyForces> {
    system_energy_forces_with(system, pot, restraint, &WorkerPoolConfig::default())
}

/// [`system_energy_forces`] with an explicit worker pool. In deterministic
/// mode results are bit-identical for any worker count: each atom's force
/// and energy share are computed by one task in a fixed neighbor order, and
/// the energy is folded in atom-index order.
pub fn system_energy_forces_with(
    system: &MolecularSystem,
    pot: &PotentialParams,
    restraint: Option<&Restraint>,
    cfg: &WorkerPoolConfig,
) -> Result<EnergyForces> {
    if system.is_empty() {
        return Err(Error::EmptyStructure("energy of an empty system".into()));
    }
    if pot.periodic && system.box_length.is_none() {
        return Err(Error::InvalidArgument(
            "potential is periodic but the system has no box".into(),
        ));
    }
    let box_length = if pot.periodic { system.box_length } else { None };
    let n = system.len();
    let plan = exec::plan_chunks(n, cfg.workers);

    // Half-weighted per-atom contributions: energy_i = ½ Σ_j V_ij plus the
    // atom's restraint term; force_i is owned entirely by task i, so slots
    // are disjoint and placement by index makes any schedule bit-identical.
    let task = |i: usize| -> Result<(f64, Vec3)> {
        let ai = &system.atoms[i];
        let pi = PairParams::from(ai);
        let mut energy = 0.0;
        let mut force = Vec3::ZERO;
        for (j, aj) in system.atoms.iter().enumerate() {
            if j == i {
                continue;
            }
            let r_vec = min_image_displacement(aj.position, ai.position, box_length);
            let (e, f_on_i) = pair_energy_force(r_vec, PairParams::from(aj), pi, pot)
                .map_err(|e| match e {
                    Error::OverlappingAtoms { .. } => {
                        Error::OverlappingAtoms { i: i.min(j), j: i.max(j) }
                    }
                    other => other,
                })?;
            energy += 0.5 * e;
            force += f_on_i;
        }
        if let Some(r) = restraint {
            if r.atom_selection.contains(&i) {
                let d = ai.position - r.center;
                energy += 0.5 * r.spring_k * d.norm_sq();
                force += d * (-r.spring_k);
            }
        }
        Ok((energy, force))
    };

    let (contributions, completion) = exec::parallel_map_indexed_with_order(&plan, cfg, task)?;
    let forces: Vec<Vec3> = contributions.iter().map(|c| c.1).collect();
    let potential_energy = if cfg.deterministic {
        exec::deterministic_reduce(contributions.iter().map(|c| c.0))
    } else {
        // completion-order fold; cheaper to schedule, not reproducible
        let mut total = 0.0;
        for &c in &completion {
            for i in plan.chunks[c].clone() {
                total += contributions[i].0;
            }
        }
        total
    };
    Ok(EnergyForces { potential_energy, forces })
}

/// Largest per-atom Euclidean force norm, the minimization convergence
/// quantity.
pub fn max_force_norm(ef: &EnergyForces) -> f64 {
    ef.forces.iter().map(|f| f.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::MolecularSystem;

    fn lj_unit() -> PairParams {
        PairParams { sigma: 1.0, epsilon: 1.0, charge: 0.0 }
    }

    fn no_cut() -> PotentialParams {
        PotentialParams { cutoff: f64::INFINITY, periodic: false, shift_at_cutoff: false }
    }

    #[test]
    fn lj_zero_crossing_at_sigma() {
        let (e, _) = pair_energy_force(Vec3::new(1.0, 0.0, 0.0), lj_unit(), lj_unit(), &no_cut()).unwrap();
        assert!(e.abs() < 1e-12);
    }

    #[test]
    fn lj_minimum() {
        let r = 2f64.powf(1.0 / 6.0);
        let (e, f) = pair_energy_force(Vec3::new(r, 0.0, 0.0), lj_unit(), lj_unit(), &no_cut()).unwrap();
        assert!((e - (-1.0)).abs() < 1e-12);
        assert!(f.norm() < 1e-12);
    }

    #[test]
    fn coulomb_unit_charges_at_1nm() {
        let q = PairParams { sigma: 0.0, epsilon: 0.0, charge: 1.0 };
        let (e, _) = pair_energy_force(Vec3::new(1.0, 0.0, 0.0), q, q, &no_cut()).unwrap();
        // independent evaluation of f·q_i·q_j/r with the CODATA-derived
        // prefactor in kJ·mol⁻¹·nm·e⁻²
        assert!((e - 138.935458).abs() < 1e-9);
    }

    #[test]
    fn overlap_is_an_error() {
        let err = pair_energy_force(Vec3::ZERO, lj_unit(), lj_unit(), &no_cut()).unwrap_err();
        assert!(matches!(err, Error::OverlappingAtoms { .. }));
    }

    #[test]
    fn cutoff_zeroes_far_pairs() {
        let pot = PotentialParams::default();
        let (e, f) = pair_energy_force(Vec3::new(1.5, 0.0, 0.0), lj_unit(), lj_unit(), &pot).unwrap();
        assert_eq!(e, 0.0);
        assert_eq!(f, Vec3::ZERO);
    }

    #[test]
    fn shift_makes_energy_continuous_at_cutoff() {
        let pot = PotentialParams { cutoff: 1.0, periodic: false, shift_at_cutoff: true };
        let p = PairParams { sigma: 0.3405, epsilon: 0.996, charge: 0.0 };
        let (e, _) = pair_energy_force(Vec3::new(1.0 - 1e-9, 0.0, 0.0), p, p, &pot).unwrap();
        assert!(e.abs() < 1e-6, "energy at cutoff edge was {e}");
    }

    #[test]
    fn two_atoms_at_minimum_stationary() {
        let r = 2f64.powf(1.0 / 6.0) * crate::units::ARGON_SIGMA;
        let sys = MolecularSystem::argon_pair(r);
        let pot = PotentialParams { cutoff: f64::INFINITY, shift_at_cutoff: false, ..Default::default() };
        let ef = system_energy_forces(&sys, &pot, None).unwrap();
        assert!((ef.potential_energy - (-crate::units::ARGON_EPSILON)).abs() < 1e-9);
        assert!(max_force_norm(&ef) < 1e-10);
    }

    #[test]
    fn restraint_energy_and_force() {
        let mut sys = MolecularSystem::argon_pair(10.0);
        sys.atoms.truncate(1);
        sys.atoms[0].position = Vec3::new(0.1, 0.0, 0.0);
        let restraint = Restraint { center: Vec3::ZERO, spring_k: 100.0, atom_selection: vec![0] };
        let pot = PotentialParams::default();
        let ef = system_energy_forces(&sys, &pot, Some(&restraint)).unwrap();
        assert!((ef.potential_energy - 0.5).abs() < 1e-12);
        assert!((ef.forces[0].norm() - 10.0).abs() < 1e-12);
        assert!(ef.forces[0].x < 0.0, "force points toward the center");
    }

    #[test]
    fn newtons_third_law_total_force_zero() {
        let sys = MolecularSystem::argon_lattice(3, 2.4);
        let mut sys = MolecularSystem::new(sys.atoms, None, "cluster");
        for (k, a) in sys.atoms.iter_mut().enumerate() {
            a.charge = if k % 2 == 0 { 0.1 } else { -0.1 };
        }
        let pot = PotentialParams { cutoff: 1.0, periodic: false, shift_at_cutoff: true };
        let ef = system_energy_forces(&sys, &pot, None).unwrap();
        let total: Vec3 = ef.forces.iter().fold(Vec3::ZERO, |acc, &f| acc + f);
        assert!(total.norm() < 1e-8, "net force {:?}", total);
    }

    #[test]
    fn max_force_norm_examples() {
        let ef = EnergyForces { potential_energy: 0.0, forces: vec![Vec3::new(3.0, 4.0, 0.0)] };
        assert_eq!(max_force_norm(&ef), 5.0);
        let ef = EnergyForces { potential_energy: 0.0, forces: vec![Vec3::ZERO, Vec3::ZERO] };
        assert_eq!(max_force_norm(&ef), 0.0);
        let ef = EnergyForces {
            potential_energy: 0.0,
            forces: vec![Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 2.0, 0.0)],
        };
        assert_eq!(max_force_norm(&ef), 2.0);
    }

    #[test]
    fn energy_bit_identical_across_worker_counts() {
        let sys = MolecularSystem::argon_lattice(4, 2.2);
        let pot = PotentialParams { periodic: true, ..Default::default() };
        let baseline = system_energy_forces_with(&sys, &pot, None, &WorkerPoolConfig::new(1)).unwrap();
        for w in [2, 4, 8] {
            let ef = system_energy_forces_with(&sys, &pot, None, &WorkerPoolConfig::new(w)).unwrap();
            assert_eq!(ef.potential_energy.to_bits(), baseline.potential_energy.to_bits());
            assert_eq!(ef.forces, baseline.forces);
        }
    }

    #[test]
    fn overlap_reports_pair_ids() {
        let mut sys = MolecularSystem::argon_pair(0.4);
        sys.atoms[1].position = sys.atoms[0].position;
        let err = system_energy_forces(&sys, &PotentialParams::default(), None).unwrap_err();
        match err {
            Error::TaskFailed { .. } | Error::OverlappingAtoms { .. } => {}
            other => panic!("unexpected error {other:?}"),
        }
    }
}
