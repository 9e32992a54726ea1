//! Atoms and molecular systems.

use crate::geom::Vec3;
use crate::units;
use crate::{Error, Result};

/// One particle: identity, mass (amu), charge (e), Lennard-Jones
/// parameters (σ in nm, ε in kJ/mol) and position (nm).
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub id: usize,
    pub name: String,
    pub element: String,
    pub mass: f64,
    pub charge: f64,
    pub lj_sigma: f64,
    pub lj_epsilon: f64,
    pub position: Vec3,
}

/// An ordered collection of atoms, optionally in a cubic periodic box.
#[derive(Debug, Clone, PartialEq)]
pub struct MolecularSystem {
    pub atoms: Vec<Atom>,
    /// Cubic box edge length in nm; `None` means non-periodic.
    pub box_length: Option<f64>,
    pub label: String,
}

impl MolecularSystem {
    pub fn new(atoms: Vec<Atom>, box_length: Option<f64>, label: impl Into<String>) -> Self {
        MolecularSystem { atoms, box_length, label: label.into() }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Checks atom-id ordering and, when periodic, that the box can hold a
    /// minimum-image sphere of the given cutoff.
    pub fn validate(&self, cutoff: Option<f64>) -> Result<()> {
        for (i, a) in self.atoms.iter().enumerate() {
            if a.id != i {
                return Err(Error::InvalidArgument(format!(
                    "atom ids must be 0..N-1 in order; found id {} at index {}",
                    a.id, i
                )));
            }
            if a.mass <= 0.0 {
                return Err(Error::InvalidArgument(format!("atom {} has mass {} <= 0", i, a.mass)));
            }
            if a.lj_sigma < 0.0 || a.lj_epsilon < 0.0 {
                return Err(Error::InvalidArgument(format!("atom {} has negative LJ parameters", i)));
            }
        }
        if let (Some(l), Some(rc)) = (self.box_length, cutoff) {
            if l <= 2.0 * rc {
                return Err(Error::InvalidArgument(format!(
                    "box length {l} nm must exceed twice the cutoff {rc} nm for minimum image"
                )));
            }
        }
        Ok(())
    }

    /// Unweighted geometric centroid of the atom positions.
    pub fn centroid(&self) -> Vec3 {
        let mut c = Vec3::ZERO;
        for a in &self.atoms {
            c += a.position;
        }
        c / self.atoms.len() as f64
    }

    /// Two argon atoms separated by `r` nm along x, non-periodic.
    /// Handy starting point for examples and tests.
    pub fn argon_pair(r: f64) -> Self {
        let atom = |id: usize, x: f64| Atom {
            id,
            name: "Ar".into(),
            element: "Ar".into(),
            mass: 39.948,
            charge: 0.0,
            lj_sigma: units::ARGON_SIGMA,
            lj_epsilon: units::ARGON_EPSILON,
            position: Vec3::new(x, 0.0, 0.0),
        };
        MolecularSystem::new(vec![atom(0, 0.0), atom(1, r)], None, "argon pair")
    }

    /// A simple-cubic argon lattice of `n³` atoms filling a periodic cubic
    /// box of edge `box_length` nm.
    pub fn argon_lattice(n: usize, box_length: f64) -> Self {
        let spacing = box_length / n as f64;
        let mut atoms = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let id = atoms.len();
                    atoms.push(Atom {
                        id,
                        name: "Ar".into(),
                        element: "Ar".into(),
                        mass: 39.948,
                        charge: 0.0,
                        lj_sigma: units::ARGON_SIGMA,
                        lj_epsilon: units::ARGON_EPSILON,
                        position: Vec3::new(
                            (i as f64 + 0.5) * spacing,
                            (j as f64 + 0.5) * spacing,
                            (k as f64 + 0.5) * spacing,
                        ),
                    });
                }
            }
        }
        MolecularSystem::new(atoms, Some(box_length), "argon lattice")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_rejects_bad_ids() {
        let mut sys = MolecularSystem::argon_pair(0.4);
        sys.atoms[1].id = 5;
        assert!(sys.validate(None).is_err());
    }

    #[test]
    fn validate_rejects_small_box() {
        let sys = MolecularSystem::argon_lattice(2, 1.5);
        assert!(sys.validate(Some(1.0)).is_err());
        assert!(sys.validate(Some(0.7)).is_ok());
    }

    #[test]
    fn lattice_counts() {
        let sys = MolecularSystem::argon_lattice(4, 2.2);
        assert_eq!(sys.len(), 64);
        assert!(sys.validate(Some(1.0)).is_ok());
    }
}
