//! Premise checks for a span program and an adversary structure.

use std::fmt;

use q2mpc_core::field::FieldElement;
use q2mpc_core::msp::Msp;
use q2mpc_core::structures::{AdversaryStructure, StructureError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub structure: AdversaryStructure,
    pub is_q2: bool,
    pub is_q3: bool,
    pub rejected_by: bool,
    pub recombination: Option<Vec<FieldElement>>,
}

impl CheckReport {
    pub fn has_multiplication(&self) -> bool {
        self.recombination.is_some()
    }

    /// Whether the protocol's premises hold: Q2, rejection and multiplication.
    pub fn passes(&self) -> bool {
        self.is_q2 && self.rejected_by && self.has_multiplication()
    }
}

/// Checks `msp` against `structure`, or against the structure it induces.
pub fn check(
    msp: &Msp,
    structure: Option<AdversaryStructure>,
) -> Result<CheckReport, StructureError> {
    let structure = structure.unwrap_or_else(|| AdversaryStructure::induced_by(msp));
    let rejected_by = structure.rejected_by(msp)?;
    Ok(CheckReport {
        is_q2: structure.is_qk(2),
        is_q3: structure.is_qk(3),
        rejected_by,
        recombination: msp.recombination_vector(),
        structure,
    })
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "structure: {}", self.structure)?;
        writeln!(f, "is_q2: {}", self.is_q2)?;
        writeln!(f, "is_q3: {}", self.is_q3)?;
        writeln!(f, "rejected_by: {}", self.rejected_by)?;
        writeln!(f, "has_multiplication: {}", self.has_multiplication())?;
        if let Some(r) = &self.recombination {
            let r: Vec<String> = r.iter().map(|x| x.value().to_string()).collect();
            writeln!(f, "recombination: ({})", r.join(", "))?;
        }
        write!(f, "verdict: {}", if self.passes() { "ok" } else { "fail" })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::parse_structure;
    use q2mpc_core::field::FieldSpec;

    fn threshold(n: usize, t: usize) -> Msp {
        Msp::threshold(n, t, &FieldSpec::computation(7).unwrap()).unwrap()
    }

    #[test]
    fn threshold_three_one_passes() {
        let report = check(
            &threshold(3, 1),
            Some(AdversaryStructure::threshold(3, 1).unwrap()),
        )
        .unwrap();
        assert!(report.passes());
        assert!(!report.is_q3);
        assert!(report.to_string().contains("recombination: (3, 4, 1)"));
    }

    #[test]
    fn half_threshold_has_no_multiplication() {
        let report = check(&threshold(4, 2), None).unwrap();
        assert!(!report.has_multiplication());
        assert!(!report.passes());
        assert!(!report.to_string().contains("recombination"));
    }

    #[test]
    fn covering_structure_is_not_q2() {
        let s = parse_structure("players 4\n0 1\n2 3\n").unwrap();
        let report = check(&threshold(4, 1), Some(s)).unwrap();
        assert!(!report.is_q2);
        assert!(!report.rejected_by);
    }
}
