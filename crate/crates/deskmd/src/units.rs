//! Unit conventions and physical constants.
//!
//! Internal units are the GROMACS set: length in nm, time in ps, energy in
//! kJ/mol, mass in amu, charge in elementary charges, temperature in K.
//! With these, force comes out in kJ·mol⁻¹·nm⁻¹ and velocity in nm·ps⁻¹,
//! and no conversion factors appear in the equations of motion.

/// Boltzmann constant in kJ·mol⁻¹·K⁻¹.
pub const K_B: f64 = 0.008_314_462_62;

/// Coulomb prefactor 1/(4πε₀) in kJ·mol⁻¹·nm·e⁻².
pub const COULOMB_F: f64 = 138.935_458;

/// Å → nm.
pub const ANGSTROM_TO_NM: f64 = 0.1;

/// Atomic masses (amu) for the elements the structure reader knows about.
pub fn element_mass(element: &str) -> Option<f64> {
    let m = match element {
        "H" => 1.008,
        "He" => 4.0026,
        "C" => 12.011,
        "N" => 14.007,
        "O" => 15.999,
        "F" => 18.998,
        "Na" => 22.990,
        "Mg" => 24.305,
        "P" => 30.974,
        "S" => 32.06,
        "Cl" => 35.45,
        "K" => 39.098,
        "Ar" => 39.948,
        "Ca" => 40.078,
        "Fe" => 55.845,
        "Zn" => 65.38,
        _ => return None,
    };
    Some(m)
}

/// Default argon Lennard-Jones parameters used by the test fluid:
/// σ in nm, ε in kJ/mol. Overridable through a parameter file.
pub const ARGON_SIGMA: f64 = 0.3405;
pub const ARGON_EPSILON: f64 = 0.996;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_match_codata_conventions() {
        // k_B = R / 1000 with R = 8.31446262 J/mol/K
        assert_eq!(K_B, 0.00831446262);
        assert_eq!(COULOMB_F, 138.935458);
    }

    #[test]
    fn known_elements() {
        assert_eq!(element_mass("Ar"), Some(39.948));
        assert_eq!(element_mass("Xx"), None);
    }
}
