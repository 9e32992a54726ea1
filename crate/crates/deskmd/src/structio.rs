//! Structure-file ingestion: a strict PDB subset reader, an XYZ
//! reader/writer, and the flat parameter file.
//!
//! PDB coordinates are Å and converted to nm on read. XYZ coordinates are
//! defined as nm in this crate (one internal unit system, no double
//! conversion).

use std::collections::HashMap;

use crate::geom::Vec3;
use crate::system::{Atom, MolecularSystem};
use crate::units;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureFormat {
    /// ATOM/HETATM records only, fixed columns, single model.
    PdbSubset,
    /// Count header, comment line, then `element x y z` in nm.
    Xyz,
}

/// Outcome of a parse: the system plus a count of skipped records
/// (non-ATOM/HETATM lines in PDB input).
#[derive(Debug, Clone)]
pub struct ParsedStructure {
    pub system: MolecularSystem,
    pub skipped_records: usize,
}

pub fn parse_structure(text: &str, format: StructureFormat) -> Result<ParsedStructure> {
    if text.trim().is_empty() {
        return Err(Error::EmptyStructure("input file is empty".into()));
    }
    match format {
        StructureFormat::PdbSubset => parse_pdb(text),
        StructureFormat::Xyz => parse_xyz(text),
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_pdb(text: &str) -> Result<ParsedStructure> {
    let mut atoms = Vec::new();
    let mut skipped = 0usize;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let record = line.get(0..6).unwrap_or("").trim();
        if record != "ATOM" && record != "HETATM" {
            if !line.trim().is_empty() {
                skipped += 1;
            }
            continue;
        }
        if line.len() < 54 {
            return Err(parse_err(lineno, "ATOM/HETATM record shorter than 54 columns"));
        }
        let field = |range: std::ops::Range<usize>| line.get(range).unwrap_or("").trim().to_string();
        let coord = |range: std::ops::Range<usize>, axis: &str| -> Result<f64> {
            let s = field(range);
            s.parse::<f64>()
                .map_err(|_| parse_err(lineno, format!("non-numeric {axis} coordinate {s:?}")))
        };
        let name = field(12..16);
        let x = coord(30..38, "x")?;
        let y = coord(38..46, "y")?;
        let z = coord(46..54, "z")?;
        let mut element = field(76..78);
        if element.is_empty() {
            element = name
                .chars()
                .find(|c| c.is_ascii_alphabetic())
                .map(|c| c.to_uppercase().to_string())
                .ok_or_else(|| {
                    parse_err(lineno, format!("no element columns and atom name {name:?} has no alphabetic character"))
                })?;
        } else {
            element = normalize_element(&element);
        }
        let mass = units::element_mass(&element).unwrap_or(1.0);
        atoms.push(Atom {
            id: atoms.len(),
            name,
            element,
            mass,
            charge: 0.0,
            lj_sigma: 0.0,
            lj_epsilon: 0.0,
            position: Vec3::new(x, y, z) * units::ANGSTROM_TO_NM,
        });
    }
    if atoms.is_empty() {
        return Err(Error::EmptyStructure("no ATOM/HETATM records found".into()));
    }
    Ok(ParsedStructure {
        system: MolecularSystem::new(atoms, None, "pdb"),
        skipped_records: skipped,
    })
}

/// "CA" -> "Ca", "N" -> "N".
fn normalize_element(raw: &str) -> String {
    let mut chars = raw.chars();
    match (chars.next(), chars.next()) {
        (Some(a), Some(b)) => format!("{}{}", a.to_ascii_uppercase(), b.to_ascii_lowercase()),
        (Some(a), None) => a.to_ascii_uppercase().to_string(),
        _ => String::new(),
    }
}

fn parse_xyz(text: &str) -> Result<ParsedStructure> {
    let mut lines = text.lines().enumerate();
    let (_, count_line) = lines.next().ok_or_else(|| parse_err(1, "missing count line"))?;
    let count: usize = count_line
        .trim()
        .parse()
        .map_err(|_| parse_err(1, format!("bad atom count {:?}", count_line.trim())))?;
    if count == 0 {
        return Err(Error::EmptyStructure("XYZ count line is 0".into()));
    }
    let comment = lines.next().map(|(_, l)| l.to_string()).unwrap_or_default();
    let mut atoms = Vec::with_capacity(count);
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() < 4 {
            return Err(parse_err(lineno, "expected `element x y z`"));
        }
        let element = normalize_element(parts[0]);
        let num = |s: &str, axis: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| parse_err(lineno, format!("non-numeric {axis} coordinate {s:?}")))
        };
        let position = Vec3::new(num(parts[1], "x")?, num(parts[2], "y")?, num(parts[3], "z")?);
        let mass = units::element_mass(&element).unwrap_or(1.0);
        atoms.push(Atom {
            id: atoms.len(),
            name: element.clone(),
            element,
            mass,
            charge: 0.0,
            lj_sigma: 0.0,
            lj_epsilon: 0.0,
            position,
        });
        if atoms.len() == count {
            break;
        }
    }
    if atoms.len() != count {
        return Err(parse_err(
            1,
            format!("count line says {count} atoms but file has {}", atoms.len()),
        ));
    }
    Ok(ParsedStructure {
        system: MolecularSystem::new(atoms, None, comment.trim()),
        skipped_records: 0,
    })
}

/// Serialize a system as XYZ text (coordinates in nm).
pub fn write_structure(system: &MolecularSystem) -> Result<String> {
    if system.is_empty() {
        return Err(Error::EmptyStructure("cannot write a system with no atoms".into()));
    }
    let mut out = String::new();
    out.push_str(&format!("{}\n", system.len()));
    out.push_str(&format!("{}\n", system.label));
    for a in &system.atoms {
        out.push_str(&format!(
            "{} {:.9} {:.9} {:.9}\n",
            a.element, a.position.x, a.position.y, a.position.z
        ));
    }
    Ok(out)
}

/// Per-key force-field parameters from a `key.field = value` file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AtomParams {
    pub mass: Option<f64>,
    pub charge: Option<f64>,
    pub sigma: Option<f64>,
    pub epsilon: Option<f64>,
}

/// Parse a flat parameter file. Each line is `key.field = value` where key
/// is an element or atom name and field is one of mass, charge, sigma,
/// epsilon. Blank lines and `#` comments are ignored.
pub fn parse_parameter_file(text: &str) -> Result<HashMap<String, AtomParams>> {
    let mut table: HashMap<String, AtomParams> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (lhs, rhs) = line
            .split_once('=')
            .ok_or_else(|| parse_err(lineno, "expected `key.field = value`"))?;
        let (key, field) = lhs
            .trim()
            .rsplit_once('.')
            .ok_or_else(|| parse_err(lineno, "expected `key.field` on the left of `=`"))?;
        let value: f64 = rhs
            .trim()
            .parse()
            .map_err(|_| parse_err(lineno, format!("non-numeric value {:?}", rhs.trim())))?;
        let entry = table.entry(key.trim().to_string()).or_default();
        match field.trim() {
            "mass" => entry.mass = Some(value),
            "charge" => entry.charge = Some(value),
            "sigma" => entry.sigma = Some(value),
            "epsilon" => entry.epsilon = Some(value),
            other => return Err(parse_err(lineno, format!("unknown field {other:?}"))),
        }
    }
    Ok(table)
}

/// Assign parameters to atoms by atom name first, element second.
pub fn apply_parameters(system: &mut MolecularSystem, table: &HashMap<String, AtomParams>) {
    for atom in &mut system.atoms {
        let params = table.get(&atom.name).or_else(|| table.get(&atom.element));
        if let Some(p) = params {
            if let Some(m) = p.mass {
                atom.mass = m;
            }
            if let Some(q) = p.charge {
                atom.charge = q;
            }
            if let Some(s) = p.sigma {
                atom.lj_sigma = s;
            }
            if let Some(e) = p.epsilon {
                atom.lj_epsilon = e;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pdb_single_atom() {
        let line = "ATOM      1  N   ASP A   1      10.000  12.500   8.300  1.00  0.00           N";
        let parsed = parse_structure(line, StructureFormat::PdbSubset).unwrap();
        assert_eq!(parsed.system.len(), 1);
        let a = &parsed.system.atoms[0];
        assert_eq!(a.element, "N");
        assert!((a.position.x - 1.0).abs() < 1e-12);
        assert!((a.position.y - 1.25).abs() < 1e-12);
        assert!((a.position.z - 0.83).abs() < 1e-12);
    }

    #[test]
    fn pdb_bad_coordinate_names_line() {
        let text = "ATOM      1  N   ASP A   1      10.000  12.500   8.300  1.00  0.00           N\n\
                    ATOM      2  CA  ASP A   1      abcdef  12.500   8.300  1.00  0.00           C";
        let err = parse_structure(text, StructureFormat::PdbSubset).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn pdb_element_fallback_from_name() {
        // truncated record, no z coordinate
        let line = "ATOM      1  CA  ASP A   1      10.000  12.500";
        let err = parse_structure(line, StructureFormat::PdbSubset).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "record too short must error");

        // full coordinates but no element columns: fall back to the name
        let line = "ATOM      1  CA  ASP A   1      10.000  12.500   8.300  1.00  0.00";
        let parsed = parse_structure(line, StructureFormat::PdbSubset).unwrap();
        assert_eq!(parsed.system.atoms[0].element, "C");
    }

    #[test]
    fn pdb_skips_other_records() {
        let text = "REMARK hello\nATOM      1  N   ASP A   1      10.000  12.500   8.300  1.00  0.00           N\nTER\nEND";
        let parsed = parse_structure(text, StructureFormat::PdbSubset).unwrap();
        assert_eq!(parsed.system.len(), 1);
        assert_eq!(parsed.skipped_records, 3);
    }

    #[test]
    fn xyz_two_argon() {
        let text = "2\nargon dimer\nAr 0 0 0\nAr 0.38 0 0\n";
        let parsed = parse_structure(text, StructureFormat::Xyz).unwrap();
        assert_eq!(parsed.system.len(), 2);
        assert_eq!(parsed.system.atoms[1].position, Vec3::new(0.38, 0.0, 0.0));
        assert_eq!(parsed.system.atoms[0].element, "Ar");
    }

    #[test]
    fn empty_input_errors() {
        assert!(parse_structure("", StructureFormat::Xyz).is_err());
        assert!(parse_structure("  \n ", StructureFormat::PdbSubset).is_err());
    }

    #[test]
    fn write_empty_errors() {
        let sys = MolecularSystem::new(vec![], None, "empty");
        assert!(write_structure(&sys).is_err());
    }

    #[test]
    fn xyz_round_trip() {
        let sys = MolecularSystem::argon_lattice(3, 2.4);
        let text = write_structure(&sys).unwrap();
        assert!(text.starts_with("27\n"));
        let parsed = parse_structure(&text, StructureFormat::Xyz).unwrap();
        assert_eq!(parsed.system.len(), sys.len());
        for (a, b) in sys.atoms.iter().zip(parsed.system.atoms.iter()) {
            assert_eq!(a.element, b.element);
            assert!((a.position - b.position).norm() < 1e-6);
        }
    }

    #[test]
    fn parameter_file_round_trip() {
        let text = "\
# argon defaults
Ar.mass = 39.948
Ar.charge = 0.0
Ar.sigma = 0.3405
Ar.epsilon = 0.996
";
        let table = parse_parameter_file(text).unwrap();
        let p = table.get("Ar").unwrap();
        assert_eq!(p.sigma, Some(0.3405));

        let mut sys = parse_structure("1\nar\nAr 0 0 0\n", StructureFormat::Xyz).unwrap().system;
        sys.atoms[0].lj_sigma = 0.0;
        apply_parameters(&mut sys, &table);
        assert_eq!(sys.atoms[0].lj_sigma, 0.3405);
        assert_eq!(sys.atoms[0].lj_epsilon, 0.996);
    }

    #[test]
    fn parameter_file_bad_line() {
        let err = parse_parameter_file("Ar.sigma 0.3405").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }
}
